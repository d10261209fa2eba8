#include "hazebayes/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "hazebayes/errors.hpp"
#include "hazebayes/haze_model.hpp"
#include "hazebayes/image_io.hpp"

namespace hazebayes {

namespace {

constexpr double kDepthMax = 5.0;

ImageTensor quantize_f32(const ImageTensor& in) {
  ImageTensor out(in.height(), in.width(), in.channels());
  for (std::size_t i = 0; i < in.size(); ++i) {
    out.data()[i] = static_cast<double>(static_cast<float>(in.data()[i]));
  }
  return out;
}

std::string padded_name(int index, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d%s", index, ext);
  return buf;
}

}  // namespace

DepthKind depth_kind_from_string(const std::string& s) {
  if (s == "linear-ramp") return DepthKind::linear_ramp;
  if (s == "radial") return DepthKind::radial;
  if (s == "layered-steps") return DepthKind::layered_steps;
  throw ValueError("unknown depth kind: " + s);
}

std::string to_string(DepthKind kind) {
  switch (kind) {
    case DepthKind::linear_ramp: return "linear-ramp";
    case DepthKind::radial: return "radial";
    case DepthKind::layered_steps: return "layered-steps";
  }
  throw ValueError("unknown depth kind");
}

DepthMap gen_depth(int h, int w, DepthKind kind, std::uint64_t seed) {
  if (h <= 0 || w <= 0) throw ValueError("depth dims must be positive");
  Rng rng(seed);
  ImageTensor d(h, w, 1);
  switch (kind) {
    case DepthKind::linear_ramp: {
      const double lo = rng.uniform(0.0, 1.5);
      const double hi = rng.uniform(3.0, kDepthMax);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double f = w > 1 ? static_cast<double>(x) / (w - 1) : 0.0;
          d.at(y, x, 0) = lo + (hi - lo) * f;
        }
      }
      break;
    }
    case DepthKind::radial: {
      const double far = rng.uniform(3.0, kDepthMax);
      const double cy = (h - 1) / 2.0;
      const double cx = (w - 1) / 2.0;
      const double rmax = std::sqrt(cy * cy + cx * cx);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double r = std::sqrt((y - cy) * (y - cy) + (x - cx) * (x - cx));
          d.at(y, x, 0) = rmax > 0.0 ? far * (r / rmax) : 0.0;
        }
      }
      break;
    }
    case DepthKind::layered_steps: {
      const int bands = rng.uniform_int(3, 6);
      std::vector<double> levels(static_cast<std::size_t>(bands));
      for (double& v : levels) v = rng.uniform(0.0, kDepthMax);
      std::sort(levels.begin(), levels.end());
      for (int y = 0; y < h; ++y) {
        const int band = std::min(bands - 1, y * bands / h);
        for (int x = 0; x < w; ++x) d.at(y, x, 0) = levels[static_cast<std::size_t>(band)];
      }
      break;
    }
  }
  return DepthMap(std::move(d));
}

DepthMap load_depth_pfm(const std::string& path) {
  return DepthMap(load_pfm(path));
}

ImageTensor gen_clean(int h, int w, std::uint64_t seed) {
  if (h <= 0 || w <= 0) throw ValueError("clean image dims must be positive");
  Rng rng(seed);
  constexpr int kWaves = 4;
  double base[3];
  for (double& b : base) b = rng.uniform(0.25, 0.75);
  struct Wave {
    double fy, fx, phase[3], amp;
  };
  Wave waves[kWaves];
  for (Wave& wv : waves) {
    wv.fy = rng.uniform(-2.5, 2.5);
    wv.fx = rng.uniform(-2.5, 2.5);
    for (double& p : wv.phase) p = rng.uniform(0.0, 2.0 * std::numbers::pi);
    wv.amp = rng.uniform(0.04, 0.16);
  }
  ImageTensor img(h, w, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double u = h > 1 ? static_cast<double>(y) / (h - 1) : 0.0;
      const double v = w > 1 ? static_cast<double>(x) / (w - 1) : 0.0;
      for (int c = 0; c < 3; ++c) {
        double s = base[c];
        for (const Wave& wv : waves) {
          s += wv.amp *
               std::cos(2.0 * std::numbers::pi * (wv.fy * u + wv.fx * v) +
                        wv.phase[c]);
        }
        img.at(y, x, c) = std::clamp(s, 0.02, 0.98);
      }
    }
  }
  return img;
}

void TripletGenConfig::validate() const {
  if (per_image <= 0) throw ValueError("per_image must be positive");
  if (!(a_min > 0.0 && a_max <= 1.0 && a_min <= a_max)) {
    throw ValueError("airlight range must satisfy 0 < a_min <= a_max <= 1");
  }
  if (!(beta_min > 0.0 && beta_min <= beta_max)) {
    throw ValueError("beta range must satisfy 0 < beta_min <= beta_max");
  }
}

std::pair<double, double> sample_scatter(Rng& rng, const TripletGenConfig& cfg) {
  return {rng.uniform(cfg.a_min, cfg.a_max), rng.uniform(cfg.beta_min, cfg.beta_max)};
}

DatasetManifest gen_triplets(const std::vector<ImageTensor>& clean,
                             const TripletGenConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  if (clean.empty()) throw ValueError("gen_triplets needs at least one clean image");

  namespace fs = std::filesystem;
  const fs::path base(out_dir);
  fs::create_directories(base / "clean");
  fs::create_directories(base / "hazy");
  fs::create_directories(base / "trans");

  DatasetManifest manifest;
  manifest.config = cfg;
  manifest.base_dir = base.string();

  int index = 0;
  for (const ImageTensor& img : clean) {
    for (int rep = 0; rep < cfg.per_image; ++rep, ++index) {
      const std::uint64_t rec_seed = Rng::derive_seed(cfg.seed, static_cast<std::uint64_t>(index));
      Rng rng(rec_seed);
      const auto [airlight, beta] = sample_scatter(rng, cfg);
      const DepthKind kind = static_cast<DepthKind>(rng.uniform_int(0, 2));
      const DepthMap depth =
          gen_depth(img.height(), img.width(), kind, Rng::derive_seed(rec_seed, 17));

      const ImageTensor xq = quantize_f32(img);
      const ImageTensor tq = quantize_f32(transmission_from_depth(depth, beta).tensor());
      const TransmissionMap t(tq);
      const ImageTensor y = synthesize_hazy(xq, t, airlight);

      TripletRecord rec;
      rec.index = index;
      rec.seed = rec_seed;
      rec.airlight = airlight;
      rec.beta = beta;
      rec.clean_png = "clean/" + padded_name(index, ".png");
      rec.clean_pfm = "clean/" + padded_name(index, ".pfm");
      rec.hazy_png = "hazy/" + padded_name(index, ".png");
      rec.hazy_pfm = "hazy/" + padded_name(index, ".pfm");
      rec.trans_pfm = "trans/" + padded_name(index, ".pfm");

      save_pfm(xq, base / rec.clean_pfm);
      save_image(xq, base / rec.clean_png);
      save_pfm(y, base / rec.hazy_pfm);
      save_image(y, base / rec.hazy_png);
      save_pfm(tq, base / rec.trans_pfm);
      manifest.records.push_back(std::move(rec));
    }
  }
  save_manifest(manifest, (base / "manifest.json").string());
  return manifest;
}

void save_manifest(const DatasetManifest& manifest, const std::string& path) {
  nlohmann::json j;
  j["config"] = {{"per_image", manifest.config.per_image},
                 {"a_min", manifest.config.a_min},
                 {"a_max", manifest.config.a_max},
                 {"beta_min", manifest.config.beta_min},
                 {"beta_max", manifest.config.beta_max},
                 {"seed", manifest.config.seed},
                 {"png_note", "png copies are 8-bit quantized; train from pfm"}};
  j["records"] = nlohmann::json::array();
  for (const TripletRecord& r : manifest.records) {
    j["records"].push_back({{"index", r.index},
                            {"clean_png", r.clean_png},
                            {"clean_pfm", r.clean_pfm},
                            {"hazy_png", r.hazy_png},
                            {"hazy_pfm", r.hazy_pfm},
                            {"trans_pfm", r.trans_pfm},
                            {"airlight", r.airlight},
                            {"beta", r.beta},
                            {"seed", r.seed}});
  }
  std::ofstream f(path);
  if (!f) throw IoError("cannot write manifest: " + path);
  f << j.dump(2) << '\n';
  if (!f) throw IoError("short write on manifest: " + path);
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open manifest: " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest unreadable: " + std::string(e.what()));
  }

  DatasetManifest manifest;
  try {
    const auto& c = j.at("config");
    manifest.config.per_image = c.at("per_image").get<int>();
    manifest.config.a_min = c.at("a_min").get<double>();
    manifest.config.a_max = c.at("a_max").get<double>();
    manifest.config.beta_min = c.at("beta_min").get<double>();
    manifest.config.beta_max = c.at("beta_max").get<double>();
    manifest.config.seed = c.at("seed").get<std::uint64_t>();
    for (const auto& rj : j.at("records")) {
      TripletRecord r;
      r.index = rj.at("index").get<int>();
      r.clean_png = rj.at("clean_png").get<std::string>();
      r.clean_pfm = rj.at("clean_pfm").get<std::string>();
      r.hazy_png = rj.at("hazy_png").get<std::string>();
      r.hazy_pfm = rj.at("hazy_pfm").get<std::string>();
      r.trans_pfm = rj.at("trans_pfm").get<std::string>();
      r.airlight = rj.at("airlight").get<double>();
      r.beta = rj.at("beta").get<double>();
      r.seed = rj.at("seed").get<std::uint64_t>();
      manifest.records.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("manifest field missing: " + std::string(e.what()));
  }
  manifest.base_dir = std::filesystem::path(path).parent_path().string();
  return manifest;
}

HazeTriplet load_triplet(const DatasetManifest& manifest, std::size_t index) {
  if (index >= manifest.records.size()) throw ValueError("triplet index out of range");
  const TripletRecord& r = manifest.records[index];
  const std::filesystem::path base(manifest.base_dir);
  HazeTriplet t{load_pfm(base / r.clean_pfm), load_pfm(base / r.hazy_pfm),
                TransmissionMap(load_pfm(base / r.trans_pfm)), r.airlight, r.beta};
  if (!t.clean.same_shape(t.hazy) || t.clean.height() != t.trans.height() ||
      t.clean.width() != t.trans.width()) {
    throw FormatError("triplet record " + std::to_string(r.index) + " shapes disagree");
  }
  return t;
}

}  // namespace hazebayes
