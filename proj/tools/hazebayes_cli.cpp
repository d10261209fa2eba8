// hazebayes command-line front end: one executable, one subcommand per
// pipeline stage. All machine-readable output is JSON on stdout (or written
// into --out); --pretty renders a human table instead. Every subcommand that
// takes --seed is bit-reproducible, and every output directory receives the
// fully resolved configuration as config.resolved.json.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hazebayes/datagen.hpp"
#include "hazebayes/dcp.hpp"
#include "hazebayes/errors.hpp"
#include "hazebayes/haze_model.hpp"
#include "hazebayes/image_io.hpp"
#include "hazebayes/metrics.hpp"
#include "hazebayes/nets.hpp"
#include "hazebayes/rng.hpp"
#include "hazebayes/trainer.hpp"
#include "hazebayes/variational.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hazebayes;

namespace {

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

struct CommonOpts {
  std::string config_path;
  std::string out;
  bool pretty = false;
};

void add_common(CLI::App* sub, CommonOpts& o, bool out_required) {
  sub->add_option("--config", o.config_path,
                  "JSON config file; explicit flags override its values")
      ->check(CLI::ExistingFile);
  auto* out = sub->add_option("--out", o.out, "Output directory");
  if (out_required) out->required();
  sub->add_flag("--pretty", o.pretty, "Human-readable table instead of JSON");
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError("config file " + path + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw FormatError("config file must hold a JSON object");
  return j;
}

template <typename T>
T jget(const json& j, const char* key, T dflt) {
  if (!j.contains(key)) return dflt;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw FormatError(std::string("config key '") + key + "' has the wrong type");
  }
}

json section(const json& cfg, const char* name) {
  if (!cfg.contains(name)) return json::object();
  if (!cfg.at(name).is_object()) {
    throw FormatError(std::string("config section '") + name + "' must be an object");
  }
  return cfg.at(name);
}

HyperParams hyper_from_json(const json& cfg) {
  const json h = section(cfg, "hyper");
  HyperParams hp;
  hp.sigma2 = jget(h, "sigma2", hp.sigma2);
  hp.eps1_2 = jget(h, "eps1_2", hp.eps1_2);
  hp.eps2_2 = jget(h, "eps2_2", hp.eps2_2);
  hp.airlight = jget(h, "airlight", hp.airlight);
  return hp;
}

json hyper_to_json(const HyperParams& hp) {
  return {{"sigma2", hp.sigma2},
          {"eps1_2", hp.eps1_2},
          {"eps2_2", hp.eps2_2},
          {"airlight", hp.airlight}};
}

DcpConfig dcp_from_json(const json& cfg) {
  const json d = section(cfg, "dcp");
  DcpConfig c;
  c.window = jget(d, "window", c.window);
  c.omega = jget(d, "omega", c.omega);
  c.t0 = jget(d, "t0", c.t0);
  c.top_fraction = jget(d, "top_fraction", c.top_fraction);
  return c;
}

json dcp_to_json(const DcpConfig& c) {
  return {{"window", c.window},
          {"omega", c.omega},
          {"t0", c.t0},
          {"top_fraction", c.top_fraction}};
}

MetricConfig metric_from_json(const json& cfg) {
  const json m = section(cfg, "metric");
  MetricConfig c;
  c.data_range = jget(m, "data_range", c.data_range);
  c.ssim_window = jget(m, "ssim_window", c.ssim_window);
  c.ssim_sigma = jget(m, "ssim_sigma", c.ssim_sigma);
  c.k1 = jget(m, "k1", c.k1);
  c.k2 = jget(m, "k2", c.k2);
  return c;
}

json metric_to_json(const MetricConfig& c) {
  return {{"data_range", c.data_range},
          {"ssim_window", c.ssim_window},
          {"ssim_sigma", c.ssim_sigma},
          {"k1", c.k1},
          {"k2", c.k2}};
}

Optimizer optimizer_from_string(const std::string& s) {
  if (s == "sgd") return Optimizer::sgd;
  if (s == "adam") return Optimizer::adam;
  throw ValueError("unknown optimizer: " + s + " (expected sgd or adam)");
}

std::string to_string(Optimizer o) {
  return o == Optimizer::sgd ? "sgd" : "adam";
}

AirlightMode airlight_mode_from_string(const std::string& s) {
  if (s == "ground-truth") return AirlightMode::ground_truth;
  if (s == "dcp-estimated") return AirlightMode::dcp_estimated;
  throw ValueError("unknown airlight mode: " + s +
                   " (expected ground-truth or dcp-estimated)");
}

std::string to_string(AirlightMode m) {
  return m == AirlightMode::ground_truth ? "ground-truth" : "dcp-estimated";
}

TauChannelMode tau_mode_from_string(const std::string& s) {
  if (s == "broadcast") return TauChannelMode::broadcast;
  if (s == "reduce") return TauChannelMode::reduce;
  throw ValueError("unknown tau mode: " + s + " (expected broadcast or reduce)");
}

std::string to_string(TauChannelMode m) {
  return m == TauChannelMode::broadcast ? "broadcast" : "reduce";
}

NetSpec spec_from_widths(const std::vector<int>& widths, bool residual,
                         bool clamp_output, double t_min) {
  NetSpec s;
  s.widths = widths;
  s.residual = residual;
  s.clamp_output = clamp_output;
  s.t_min = t_min;
  return s;
}

TrainConfig train_from_json(const json& cfg) {
  const json t = section(cfg, "train");
  TrainConfig c;
  c.learning_rate = jget(t, "learning_rate", c.learning_rate);
  c.optimizer = optimizer_from_string(jget<std::string>(t, "optimizer", to_string(c.optimizer)));
  c.adam_beta1 = jget(t, "adam_beta1", c.adam_beta1);
  c.adam_beta2 = jget(t, "adam_beta2", c.adam_beta2);
  c.adam_eps = jget(t, "adam_eps", c.adam_eps);
  c.steps = jget(t, "steps", c.steps);
  c.batch_size = jget(t, "batch_size", c.batch_size);
  c.patch = jget(t, "patch", c.patch);
  c.seed = jget(t, "seed", c.seed);
  c.airlight_mode = airlight_mode_from_string(
      jget<std::string>(t, "airlight_mode", to_string(c.airlight_mode)));
  c.tau_mode = tau_mode_from_string(
      jget<std::string>(t, "tau_mode", to_string(c.tau_mode)));
  if (t.contains("dnet_widths")) {
    c.dnet = spec_from_widths(t.at("dnet_widths").get<std::vector<int>>(), true,
                              false, 0.05);
  }
  if (t.contains("tnet_widths")) {
    c.tnet = spec_from_widths(t.at("tnet_widths").get<std::vector<int>>(), false,
                              true, jget(t, "t_min", 0.05));
  }
  return c;
}

json train_to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"optimizer", to_string(c.optimizer)},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"adam_eps", c.adam_eps},
          {"steps", c.steps},
          {"batch_size", c.batch_size},
          {"patch", c.patch},
          {"seed", c.seed},
          {"airlight_mode", to_string(c.airlight_mode)},
          {"tau_mode", to_string(c.tau_mode)},
          {"dnet_widths", c.dnet.widths},
          {"tnet_widths", c.tnet.widths},
          {"t_min", c.tnet.t_min}};
}

ImageTensor load_any(const std::string& path) {
  const fs::path p(path);
  if (p.extension() == ".pfm") return load_pfm(p);
  return load_image(p);
}

// Pretty printing: nested key/value table with two-space indent per level.
void print_table(const json& j, int depth) {
  const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
  if (j.is_object()) {
    std::size_t width = 0;
    for (auto it = j.begin(); it != j.end(); ++it) {
      width = std::max(width, it.key().size());
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it->is_object() || it->is_array()) {
        std::cout << pad << it.key() << ":\n";
        print_table(*it, depth + 1);
      } else {
        std::cout << pad << it.key() << std::string(width - it.key().size(), ' ')
                  << " : " << it->dump() << "\n";
      }
    }
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (j[i].is_object() || j[i].is_array()) {
        std::cout << pad << "[" << i << "]\n";
        print_table(j[i], depth + 1);
      } else {
        std::cout << pad << "[" << i << "] " << j[i].dump() << "\n";
      }
    }
  } else {
    std::cout << pad << j.dump() << "\n";
  }
}

void write_json_file(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failure for " + path.string());
}

// Echoes the resolved config into the output directory (when one exists) and
// emits the report on stdout, honoring --pretty.
void emit(const json& report, const json& resolved, const CommonOpts& o) {
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    write_json_file(resolved, fs::path(o.out) / "config.resolved.json");
    write_json_file(report, fs::path(o.out) / "report.json");
  }
  if (o.pretty) {
    print_table(report, 0);
  } else {
    std::cout << report.dump() << "\n";
  }
}

ImageTensor quantize_f32(const ImageTensor& in) {
  ImageTensor out(in.height(), in.width(), in.channels());
  for (std::size_t i = 0; i < in.size(); ++i) {
    out.data()[i] = static_cast<double>(static_cast<float>(in.data()[i]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Subcommand state
// ---------------------------------------------------------------------------

struct DatagenOpts {
  CommonOpts common;
  int count = 8;
  int height = 64;
  int width = 64;
  int per_image = 1;
  double a_min = 0.7, a_max = 1.0;
  double beta_min = 0.5, beta_max = 2.0;
  std::uint64_t seed = 0;
};

struct SynthOpts {
  CommonOpts common;
  std::string clean;
  std::string trans;
  std::string depth_kind = "linear-ramp";
  double beta = 1.0;
  double airlight = 1.0;
  std::uint64_t seed = 0;
};

struct EstimateAOpts {
  CommonOpts common;
  std::string input;
  int window = 15;
  double top_fraction = 0.001;
};

struct DcpDehazeOpts {
  CommonOpts common;
  std::string input;
  int window = 15;
  double omega = 0.95;
  double t0 = 0.1;
  double top_fraction = 0.001;
};

struct LossOpts {
  CommonOpts common;
  std::string hazy, clean, trans, phi, nu;
  std::string tau_mode = "broadcast";
  double sigma2 = 0.0, eps1_2 = 0.0, eps2_2 = 0.0, airlight = 0.0;
};

struct GradcheckOpts {
  CommonOpts common;
  int seeds = 5;
  int size = 8;
  std::uint64_t seed = 0;
};

struct TrainOpts {
  CommonOpts common;
  std::string data;
  int steps = -1;
  int batch = -1;
  int patch = -1;
  double lr = -1.0;
  std::string optimizer;
  std::string a_mode;
  std::string tau_mode;
  std::uint64_t seed = 0;
  int holdout = 0;
};

struct EvalOpts {
  CommonOpts common;
  std::string data;
  std::string dnet;
  std::string tnet;
  int from = 0;
  int to = 0;  // 0 means "through the end"
};

struct InferOpts {
  CommonOpts common;
  std::string input;
  std::string dnet;
  std::string ckpt_dir;
};

// ---------------------------------------------------------------------------
// Handlers
// ---------------------------------------------------------------------------

void run_datagen(const DatagenOpts& o, const CLI::App* sub) {
  const json cfg = load_config(o.common.config_path);
  const json d = section(cfg, "datagen");
  TripletGenConfig gen;
  gen.per_image = jget(d, "per_image", gen.per_image);
  gen.a_min = jget(d, "a_min", gen.a_min);
  gen.a_max = jget(d, "a_max", gen.a_max);
  gen.beta_min = jget(d, "beta_min", gen.beta_min);
  gen.beta_max = jget(d, "beta_max", gen.beta_max);
  gen.seed = jget(d, "seed", gen.seed);
  int count = jget(d, "count", o.count);
  int height = jget(d, "height", o.height);
  int width = jget(d, "width", o.width);
  if (sub->count("--count")) count = o.count;
  if (sub->count("--height")) height = o.height;
  if (sub->count("--width")) width = o.width;
  if (sub->count("--per-image")) gen.per_image = o.per_image;
  if (sub->count("--a-min")) gen.a_min = o.a_min;
  if (sub->count("--a-max")) gen.a_max = o.a_max;
  if (sub->count("--beta-min")) gen.beta_min = o.beta_min;
  if (sub->count("--beta-max")) gen.beta_max = o.beta_max;
  if (sub->count("--seed")) gen.seed = o.seed;
  if (count < 1) throw ValueError("datagen: --count must be >= 1");

  std::vector<ImageTensor> clean;
  clean.reserve(static_cast<std::size_t>(count));
  const std::uint64_t clean_root = Rng::derive_seed(gen.seed, 99);
  for (int i = 0; i < count; ++i) {
    clean.push_back(gen_clean(height, width,
                              Rng::derive_seed(clean_root, static_cast<std::uint64_t>(i))));
  }
  const DatasetManifest manifest = gen_triplets(clean, gen, o.common.out);

  const json resolved = {{"subcommand", "datagen"},
                         {"datagen",
                          {{"count", count},
                           {"height", height},
                           {"width", width},
                           {"per_image", gen.per_image},
                           {"a_min", gen.a_min},
                           {"a_max", gen.a_max},
                           {"beta_min", gen.beta_min},
                           {"beta_max", gen.beta_max},
                           {"seed", gen.seed}}}};
  const json report = {{"out", o.common.out},
                       {"manifest", (fs::path(o.common.out) / "manifest.json").string()},
                       {"clean_images", count},
                       {"records", manifest.records.size()}};
  emit(report, resolved, o.common);
}

void run_synth(const SynthOpts& o, const CLI::App* sub) {
  const json cfg = load_config(o.common.config_path);
  (void)cfg;
  const ImageTensor x = quantize_f32(load_any(o.clean));
  const fs::path out(o.common.out);
  fs::create_directories(out);

  json report;
  TransmissionMap t{ImageTensor(1, 1, 1, {1.0})};
  bool from_depth = false;
  if (!o.trans.empty()) {
    t = TransmissionMap(quantize_f32(load_pfm(o.trans)));
  } else {
    from_depth = true;
    const DepthMap depth = gen_depth(x.height(), x.width(),
                                     depth_kind_from_string(o.depth_kind), o.seed);
    save_pfm(depth.tensor(), out / "depth.pfm");
    t = TransmissionMap(quantize_f32(
        transmission_from_depth(depth, o.beta).tensor()));
    report["depth"] = (out / "depth.pfm").string();
  }
  const ImageTensor y = synthesize_hazy(x, t, o.airlight);

  save_pfm(x, out / "clean.pfm");
  save_image(x, out / "clean.png");
  save_pfm(y, out / "hazy.pfm");
  save_image(y, out / "hazy.png");
  save_pfm(t.tensor(), out / "trans.pfm");

  double t_lo = 1.0, t_hi = 0.0;
  for (std::size_t i = 0; i < t.tensor().size(); ++i) {
    t_lo = std::min(t_lo, t.tensor().data()[i]);
    t_hi = std::max(t_hi, t.tensor().data()[i]);
  }
  report["clean"] = (out / "clean.pfm").string();
  report["hazy"] = (out / "hazy.pfm").string();
  report["trans"] = (out / "trans.pfm").string();
  report["airlight"] = o.airlight;
  report["beta"] = from_depth ? json(o.beta) : json();
  report["t_min"] = t_lo;
  report["t_max"] = t_hi;

  const json resolved = {{"subcommand", "synth"},
                         {"synth",
                          {{"clean", o.clean},
                           {"trans", o.trans},
                           {"depth_kind", from_depth ? o.depth_kind : ""},
                           {"beta", o.beta},
                           {"airlight", o.airlight},
                           {"seed", o.seed}}}};
  (void)sub;
  emit(report, resolved, o.common);
}

void run_estimate_a(const EstimateAOpts& o, const CLI::App* sub) {
  const json cfg = load_config(o.common.config_path);
  DcpConfig c = dcp_from_json(cfg);
  if (sub->count("--window")) c.window = o.window;
  if (sub->count("--top-fraction")) c.top_fraction = o.top_fraction;
  const ImageTensor img = load_any(o.input);
  const double a = estimate_atmospheric_light(img, c);
  const json resolved = {{"subcommand", "estimate-a"},
                         {"input", o.input},
                         {"dcp", dcp_to_json(c)}};
  const json report = {{"airlight", a},
                       {"input", o.input},
                       {"window", c.window},
                       {"top_fraction", c.top_fraction}};
  emit(report, resolved, o.common);
}

void run_dcp_dehaze(const DcpDehazeOpts& o, const CLI::App* sub) {
  const json cfg = load_config(o.common.config_path);
  DcpConfig c = dcp_from_json(cfg);
  if (sub->count("--window")) c.window = o.window;
  if (sub->count("--omega")) c.omega = o.omega;
  if (sub->count("--t0")) c.t0 = o.t0;
  if (sub->count("--top-fraction")) c.top_fraction = o.top_fraction;
  const ImageTensor img = load_any(o.input);
  const DehazeOutput res = dcp_dehaze(img, c);
  const fs::path out(o.common.out);
  fs::create_directories(out);
  save_image(res.radiance, out / "radiance.png");
  save_pfm(res.radiance, out / "radiance.pfm");
  save_pfm(res.transmission.tensor(), out / "transmission.pfm");
  const json resolved = {{"subcommand", "dcp-dehaze"},
                         {"input", o.input},
                         {"dcp", dcp_to_json(c)}};
  const json report = {{"airlight", res.airlight},
                       {"radiance", (out / "radiance.pfm").string()},
                       {"transmission", (out / "transmission.pfm").string()}};
  emit(report, resolved, o.common);
}

void run_loss(const LossOpts& o, const CLI::App* sub) {
  const json cfg = load_config(o.common.config_path);
  HyperParams hp = hyper_from_json(cfg);
  if (sub->count("--sigma2")) hp.sigma2 = o.sigma2;
  if (sub->count("--eps1-sq")) hp.eps1_2 = o.eps1_2;
  if (sub->count("--eps2-sq")) hp.eps2_2 = o.eps2_2;
  if (sub->count("--airlight")) hp.airlight = o.airlight;
  const TauChannelMode mode = tau_mode_from_string(o.tau_mode);

  const ImageTensor y = load_any(o.hazy);
  const ImageTensor x = load_any(o.clean);
  const TransmissionMap t(load_pfm(o.trans));
  const ImageTensor phi = o.phi.empty() ? x : load_any(o.phi);
  const TransmissionMap nu = o.nu.empty() ? t : TransmissionMap(load_pfm(o.nu));

  const ObjectiveBreakdown bd = negative_elbo(y, x, t, phi, nu, hp, mode);
  const double sites = static_cast<double>(y.size());
  const json resolved = {{"subcommand", "loss"},
                         {"hazy", o.hazy},
                         {"clean", o.clean},
                         {"trans", o.trans},
                         {"phi", o.phi.empty() ? o.clean : o.phi},
                         {"nu", o.nu.empty() ? o.trans : o.nu},
                         {"tau_mode", to_string(mode)},
                         {"hyper", hyper_to_json(hp)}};
  const json report = {{"likelihood", bd.likelihood},
                       {"kl_z", bd.kl_z},
                       {"kl_tau", bd.kl_tau},
                       {"negative_elbo", bd.negative_elbo},
                       {"sites", y.size()},
                       {"likelihood_per_site", bd.likelihood / sites}};
  emit(report, resolved, o.common);
}

void run_gradcheck(const GradcheckOpts& o) {
  const GradcheckReport rep =
      end_to_end_gradcheck(o.seeds, o.seed, o.size, o.size);
  const json resolved = {{"subcommand", "gradcheck"},
                         {"seeds", o.seeds},
                         {"size", o.size},
                         {"seed", o.seed}};
  const json report = {{"seeds", rep.seeds},
                       {"fd_step", rep.fd_step},
                       {"rel_floor", rep.rel_floor},
                       {"max_rel_err", rep.max_rel_err},
                       {"per_seed_max", rep.per_seed_max}};
  emit(report, resolved, o.common);
}

std::vector<HazeTriplet> load_range(const DatasetManifest& manifest, int from,
                                    int to) {
  const int n = static_cast<int>(manifest.records.size());
  if (to <= 0) to = n;
  if (from < 0 || from >= to || to > n) {
    throw ValueError("record range [" + std::to_string(from) + ", " +
                     std::to_string(to) + ") is invalid for " +
                     std::to_string(n) + " records");
  }
  std::vector<HazeTriplet> out;
  out.reserve(static_cast<std::size_t>(to - from));
  for (int i = from; i < to; ++i) {
    out.push_back(load_triplet(manifest, static_cast<std::size_t>(i)));
  }
  return out;
}

void run_train(const TrainOpts& o, const CLI::App* sub) {
  const json cfg = load_config(o.common.config_path);
  TrainConfig c = train_from_json(cfg);
  if (sub->count("--steps")) c.steps = o.steps;
  if (sub->count("--batch")) c.batch_size = o.batch;
  if (sub->count("--patch")) c.patch = o.patch;
  if (sub->count("--lr")) c.learning_rate = o.lr;
  if (sub->count("--optimizer")) c.optimizer = optimizer_from_string(o.optimizer);
  if (sub->count("--a-mode")) c.airlight_mode = airlight_mode_from_string(o.a_mode);
  if (sub->count("--tau-mode")) c.tau_mode = tau_mode_from_string(o.tau_mode);
  if (sub->count("--seed")) c.seed = o.seed;

  const DatasetManifest manifest = load_manifest(o.data);
  const int n = static_cast<int>(manifest.records.size());
  if (o.holdout < 0 || o.holdout >= n) {
    throw ValueError("train: --holdout must lie in [0, records)");
  }
  const std::vector<HazeTriplet> dataset = load_range(manifest, 0, n - o.holdout);

  const TrainResult res = train(dataset, c);

  const fs::path out(o.common.out);
  fs::create_directories(out);
  save_checkpoint((out / "dnet.ckpt").string(), res.dnet, c.steps, c.seed);
  save_checkpoint((out / "tnet.ckpt").string(), res.tnet, c.steps, c.seed);
  {
    std::ofstream log(out / "log.jsonl");
    if (!log) throw IoError("cannot open training log for writing");
    for (const TrainLogRecord& r : res.log) {
      log << json{{"step", r.step},
                  {"likelihood", r.likelihood},
                  {"kl_z", r.kl_z},
                  {"kl_tau", r.kl_tau},
                  {"negative_elbo", r.negative_elbo},
                  {"wall_seconds", r.wall_seconds}}
                 .dump()
          << "\n";
    }
  }

  json resolved = {{"subcommand", "train"},
                   {"data", o.data},
                   {"holdout", o.holdout},
                   {"train", train_to_json(c)},
                   {"hyper", hyper_to_json(c.hyper)}};
  json report = {{"steps", c.steps},
                 {"records_used", dataset.size()},
                 {"holdout", o.holdout},
                 {"dnet_params", res.dnet.param_count()},
                 {"tnet_params", res.tnet.param_count()},
                 {"dnet_checkpoint", (out / "dnet.ckpt").string()},
                 {"tnet_checkpoint", (out / "tnet.ckpt").string()},
                 {"log", (out / "log.jsonl").string()}};
  if (!res.log.empty()) {
    report["first_negative_elbo"] = res.log.front().negative_elbo;
    report["final_negative_elbo"] = res.log.back().negative_elbo;
    report["wall_seconds"] = res.log.back().wall_seconds;
  }
  emit(report, resolved, o.common);
}

void run_eval(const EvalOpts& o, const CLI::App* sub) {
  const json cfg = load_config(o.common.config_path);
  const MetricConfig mcfg = metric_from_json(cfg);
  (void)sub;
  const DatasetManifest manifest = load_manifest(o.data);
  const std::vector<HazeTriplet> dataset = load_range(manifest, o.from, o.to);
  const NetworkWeights dnet = load_checkpoint(o.dnet);
  const NetworkWeights tnet = load_checkpoint(o.tnet);
  const EvalReport rep = evaluate(dnet, tnet, dataset, mcfg);

  json images = json::array();
  for (const EvalImageReport& r : rep.images) {
    images.push_back({{"index", r.index + o.from},
                      {"psnr", r.psnr_dnet},
                      {"ssim", r.ssim_dnet},
                      {"psnr_hazy", r.psnr_hazy},
                      {"ssim_hazy", r.ssim_hazy},
                      {"mse_t", r.mse_tnet},
                      {"ssim_t", r.ssim_tnet}});
  }
  const json resolved = {{"subcommand", "eval"},
                         {"data", o.data},
                         {"dnet", o.dnet},
                         {"tnet", o.tnet},
                         {"from", o.from},
                         {"to", o.to},
                         {"metric", metric_to_json(mcfg)}};
  const json report = {{"images", images},
                       {"mean_psnr", rep.mean_psnr_dnet},
                       {"mean_ssim", rep.mean_ssim_dnet},
                       {"mean_psnr_hazy", rep.mean_psnr_hazy},
                       {"mean_ssim_hazy", rep.mean_ssim_hazy},
                       {"mean_mse_t", rep.mean_mse_tnet},
                       {"mean_ssim_t", rep.mean_ssim_tnet}};
  emit(report, resolved, o.common);
}

void run_infer(const InferOpts& o) {
  std::string dnet_path = o.dnet;
  if (dnet_path.empty()) {
    if (o.ckpt_dir.empty()) {
      throw ValueError("infer: pass --dnet <file> or --ckpt <directory>");
    }
    dnet_path = (fs::path(o.ckpt_dir) / "dnet.ckpt").string();
  }
  // Dehazing needs only the radiance network; a transmission checkpoint may
  // or may not sit next to it and is deliberately never touched.
  std::int64_t step = 0;
  std::uint64_t seed = 0;
  const NetworkWeights dnet = load_checkpoint(dnet_path, &step, &seed);
  const ImageTensor y = load_any(o.input);
  const ImageTensor x_hat = dnet_forward(dnet, y);

  const fs::path out(o.common.out);
  fs::create_directories(out);
  save_pfm(x_hat, out / "dehazed.pfm");
  save_image(x_hat, out / "dehazed.png");

  const json resolved = {{"subcommand", "infer"},
                         {"input", o.input},
                         {"dnet", dnet_path}};
  const json report = {{"input", o.input},
                       {"dnet", dnet_path},
                       {"checkpoint_step", step},
                       {"checkpoint_seed", seed},
                       {"dehazed_pfm", (out / "dehazed.pfm").string()},
                       {"dehazed_png", (out / "dehazed.png").string()}};
  emit(report, resolved, o.common);
}

json error_json(const char* type, const std::exception& e) {
  return {{"error", {{"type", type}, {"message", e.what()}}}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hazebayes: haze synthesis, dark-channel estimation, and "
               "variational dehazing pipelines"};
  app.require_subcommand(1);

  DatagenOpts dg;
  auto* sub_dg = app.add_subcommand("datagen", "Generate a synthetic triplet dataset");
  add_common(sub_dg, dg.common, true);
  sub_dg->add_option("--count", dg.count, "Number of procedural clean images");
  sub_dg->add_option("--height", dg.height, "Image height");
  sub_dg->add_option("--width", dg.width, "Image width");
  sub_dg->add_option("--per-image", dg.per_image, "Hazy variants per clean image");
  sub_dg->add_option("--a-min", dg.a_min, "Airlight lower bound");
  sub_dg->add_option("--a-max", dg.a_max, "Airlight upper bound");
  sub_dg->add_option("--beta-min", dg.beta_min, "Scattering lower bound");
  sub_dg->add_option("--beta-max", dg.beta_max, "Scattering upper bound");
  sub_dg->add_option("--seed", dg.seed, "Generation seed");

  SynthOpts sy;
  auto* sub_sy = app.add_subcommand("synth", "Synthesize one hazy image from a clean one");
  add_common(sub_sy, sy.common, true);
  sub_sy->add_option("--clean", sy.clean, "Clean input image (png/pfm)")
      ->required()
      ->check(CLI::ExistingFile);
  sub_sy->add_option("--trans", sy.trans, "Transmission PFM (overrides depth synthesis)")
      ->check(CLI::ExistingFile);
  sub_sy->add_option("--depth-kind", sy.depth_kind,
                     "Procedural depth kind: linear-ramp|radial|layered-steps");
  sub_sy->add_option("--beta", sy.beta, "Scattering coefficient");
  sub_sy->add_option("--airlight", sy.airlight, "Atmospheric light");
  sub_sy->add_option("--seed", sy.seed, "Depth seed");

  EstimateAOpts ea;
  auto* sub_ea = app.add_subcommand("estimate-a", "Estimate atmospheric light via the dark channel");
  add_common(sub_ea, ea.common, false);
  sub_ea->add_option("--input", ea.input, "Hazy image (png/pfm)")
      ->required()
      ->check(CLI::ExistingFile);
  sub_ea->add_option("--window", ea.window, "Dark-channel window");
  sub_ea->add_option("--top-fraction", ea.top_fraction, "Brightest fraction used");

  DcpDehazeOpts dd;
  auto* sub_dd = app.add_subcommand("dcp-dehaze", "Dark-channel-prior dehazing baseline");
  add_common(sub_dd, dd.common, true);
  sub_dd->add_option("--input", dd.input, "Hazy image (png/pfm)")
      ->required()
      ->check(CLI::ExistingFile);
  sub_dd->add_option("--window", dd.window, "Dark-channel window");
  sub_dd->add_option("--omega", dd.omega, "Haze retention factor");
  sub_dd->add_option("--t0", dd.t0, "Transmission floor");
  sub_dd->add_option("--top-fraction", dd.top_fraction, "Brightest fraction used");

  LossOpts lo;
  auto* sub_lo = app.add_subcommand("loss", "Evaluate the variational objective on files");
  add_common(sub_lo, lo.common, false);
  sub_lo->add_option("--hazy", lo.hazy, "Observed hazy image")->required()->check(CLI::ExistingFile);
  sub_lo->add_option("--clean", lo.clean, "Clean prior image x")->required()->check(CLI::ExistingFile);
  sub_lo->add_option("--trans", lo.trans, "Reference transmission PFM")
      ->required()
      ->check(CLI::ExistingFile);
  sub_lo->add_option("--phi", lo.phi, "Posterior location (defaults to --clean)")
      ->check(CLI::ExistingFile);
  sub_lo->add_option("--nu", lo.nu, "Posterior transmission (defaults to --trans)")
      ->check(CLI::ExistingFile);
  sub_lo->add_option("--tau-mode", lo.tau_mode, "broadcast|reduce");
  sub_lo->add_option("--sigma2", lo.sigma2, "Observation variance");
  sub_lo->add_option("--eps1-sq", lo.eps1_2, "Laplace scale (squared form)");
  sub_lo->add_option("--eps2-sq", lo.eps2_2, "Lognormal scatter (squared form)");
  sub_lo->add_option("--airlight", lo.airlight, "Atmospheric light");

  GradcheckOpts gc;
  auto* sub_gc = app.add_subcommand("gradcheck", "Finite-difference check of the full gradient path");
  add_common(sub_gc, gc.common, false);
  sub_gc->add_option("--seeds", gc.seeds, "Number of random instances");
  sub_gc->add_option("--size", gc.size, "Instance side length");
  sub_gc->add_option("--seed", gc.seed, "Base seed");

  TrainOpts tr;
  auto* sub_tr = app.add_subcommand("train", "Jointly train the dehazing and transmission nets");
  add_common(sub_tr, tr.common, true);
  sub_tr->add_option("--data", tr.data, "Dataset manifest JSON")
      ->required()
      ->check(CLI::ExistingFile);
  sub_tr->add_option("--steps", tr.steps, "Optimizer steps");
  sub_tr->add_option("--batch", tr.batch, "Batch size");
  sub_tr->add_option("--patch", tr.patch, "Crop size");
  sub_tr->add_option("--lr", tr.lr, "Learning rate");
  sub_tr->add_option("--optimizer", tr.optimizer, "sgd|adam");
  sub_tr->add_option("--a-mode", tr.a_mode, "ground-truth|dcp-estimated");
  sub_tr->add_option("--tau-mode", tr.tau_mode, "broadcast|reduce");
  sub_tr->add_option("--seed", tr.seed, "Training seed");
  sub_tr->add_option("--holdout", tr.holdout, "Trailing records excluded from training");

  EvalOpts ev;
  auto* sub_ev = app.add_subcommand("eval", "Evaluate checkpoints on a dataset");
  add_common(sub_ev, ev.common, false);
  sub_ev->add_option("--data", ev.data, "Dataset manifest JSON")
      ->required()
      ->check(CLI::ExistingFile);
  sub_ev->add_option("--dnet", ev.dnet, "Dehazing checkpoint")->required()->check(CLI::ExistingFile);
  sub_ev->add_option("--tnet", ev.tnet, "Transmission checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  sub_ev->add_option("--from", ev.from, "First record index");
  sub_ev->add_option("--to", ev.to, "One past the last record index (0 = end)");

  InferOpts in;
  auto* sub_in = app.add_subcommand("infer", "Dehaze one image with the radiance net only");
  add_common(sub_in, in.common, true);
  sub_in->add_option("--input", in.input, "Hazy image (png/pfm)")
      ->required()
      ->check(CLI::ExistingFile);
  sub_in->add_option("--dnet", in.dnet, "Dehazing checkpoint file")->check(CLI::ExistingFile);
  sub_in->add_option("--ckpt", in.ckpt_dir, "Checkpoint directory holding dnet.ckpt")
      ->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sub_dg->parsed()) run_datagen(dg, sub_dg);
    if (sub_sy->parsed()) run_synth(sy, sub_sy);
    if (sub_ea->parsed()) run_estimate_a(ea, sub_ea);
    if (sub_dd->parsed()) run_dcp_dehaze(dd, sub_dd);
    if (sub_lo->parsed()) run_loss(lo, sub_lo);
    if (sub_gc->parsed()) run_gradcheck(gc);
    if (sub_tr->parsed()) run_train(tr, sub_tr);
    if (sub_ev->parsed()) run_eval(ev, sub_ev);
    if (sub_in->parsed()) run_infer(in);
  } catch (const IoError& e) {
    std::cerr << error_json("io", e).dump() << "\n";
    return 1;
  } catch (const FormatError& e) {
    std::cerr << error_json("format", e).dump() << "\n";
    return 1;
  } catch (const ShapeError& e) {
    std::cerr << error_json("shape", e).dump() << "\n";
    return 1;
  } catch (const ValueError& e) {
    std::cerr << error_json("value", e).dump() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << error_json("numerical", e).dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << error_json("internal", e).dump() << "\n";
    return 1;
  }
  return 0;
}
