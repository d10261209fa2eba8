#include "hazebayes/nets.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <utility>

#include <json.hpp>

#include "hazebayes/errors.hpp"
#include "hazebayes/rng.hpp"

namespace hazebayes {

namespace {

constexpr char kCheckpointMagic[] = "HZBW1";

double to_little_endian(double v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    auto bits = std::bit_cast<std::uint64_t>(v);
    bits = ((bits & 0x00000000000000ffULL) << 56) | ((bits & 0x000000000000ff00ULL) << 40) |
           ((bits & 0x0000000000ff0000ULL) << 24) | ((bits & 0x00000000ff000000ULL) << 8) |
           ((bits & 0x000000ff00000000ULL) >> 8) | ((bits & 0x0000ff0000000000ULL) >> 24) |
           ((bits & 0x00ff000000000000ULL) >> 40) | ((bits & 0xff00000000000000ULL) >> 56);
    return std::bit_cast<double>(bits);
  }
}

}  // namespace

void NetSpec::validate() const {
  if (widths.size() < 2) throw ValueError("net needs at least one layer");
  if (widths.front() != 3) throw ValueError("net input width must be 3");
  for (int w : widths) {
    if (w <= 0) throw ValueError("net widths must be positive");
  }
  if (residual && clamp_output) {
    throw ValueError("a net head is residual or clamped, not both");
  }
  if (residual && widths.back() != widths.front()) {
    throw ValueError("residual head needs matching input and output widths");
  }
  if (clamp_output) {
    if (widths.back() != 1) throw ValueError("clamped head must output one channel");
    if (!(t_min > 0.0 && t_min < 1.0)) throw ValueError("t_min must lie in (0, 1)");
  }
}

std::vector<LayerOffsets> layer_offsets(const NetSpec& spec) {
  spec.validate();
  std::vector<LayerOffsets> offs;
  std::size_t cursor = 0;
  for (std::size_t i = 1; i < spec.widths.size(); ++i) {
    LayerOffsets lo;
    lo.in_ch = spec.widths[i - 1];
    lo.out_ch = spec.widths[i];
    lo.kernel = cursor;
    cursor += static_cast<std::size_t>(lo.out_ch) * lo.in_ch * 9;
    lo.bias = cursor;
    cursor += static_cast<std::size_t>(lo.out_ch);
    offs.push_back(lo);
  }
  return offs;
}

std::size_t spec_param_count(const NetSpec& spec) {
  const auto offs = layer_offsets(spec);
  const LayerOffsets& last = offs.back();
  return last.bias + static_cast<std::size_t>(last.out_ch);
}

NetworkWeights::NetworkWeights(NetSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  for (std::size_t i = 1; i < spec_.widths.size(); ++i) {
    ConvLayer layer;
    layer.kernel = Tensor({spec_.widths[i], spec_.widths[i - 1], 3, 3});
    layer.bias = Tensor({spec_.widths[i]});
    layers_.push_back(std::move(layer));
  }
}

std::size_t NetworkWeights::param_count() const { return spec_param_count(spec_); }

double NetworkWeights::param(std::size_t flat) const {
  for (const ConvLayer& l : layers_) {
    if (flat < l.kernel.numel()) return l.kernel[flat];
    flat -= l.kernel.numel();
    if (flat < l.bias.numel()) return l.bias[flat];
    flat -= l.bias.numel();
  }
  throw ValueError("parameter index out of range");
}

void NetworkWeights::set_param(std::size_t flat, double v) {
  for (ConvLayer& l : layers_) {
    if (flat < l.kernel.numel()) {
      l.kernel[flat] = v;
      return;
    }
    flat -= l.kernel.numel();
    if (flat < l.bias.numel()) {
      l.bias[flat] = v;
      return;
    }
    flat -= l.bias.numel();
  }
  throw ValueError("parameter index out of range");
}

std::vector<double> NetworkWeights::flatten() const {
  std::vector<double> flat;
  flat.reserve(param_count());
  for (const ConvLayer& l : layers_) {
    flat.insert(flat.end(), l.kernel.data(), l.kernel.data() + l.kernel.numel());
    flat.insert(flat.end(), l.bias.data(), l.bias.data() + l.bias.numel());
  }
  return flat;
}

void NetworkWeights::load_flat(const std::vector<double>& flat) {
  if (flat.size() != param_count()) {
    throw ValueError("flat parameter count mismatch");
  }
  std::size_t cursor = 0;
  for (ConvLayer& l : layers_) {
    for (std::size_t i = 0; i < l.kernel.numel(); ++i) l.kernel[i] = flat[cursor++];
    for (std::size_t i = 0; i < l.bias.numel(); ++i) l.bias[i] = flat[cursor++];
  }
  for (const ConvLayer& l : layers_) {
    for (std::size_t i = 0; i < l.kernel.numel(); ++i) {
      if (!std::isfinite(l.kernel[i])) throw ValueError("non-finite weight");
    }
    for (std::size_t i = 0; i < l.bias.numel(); ++i) {
      if (!std::isfinite(l.bias[i])) throw ValueError("non-finite bias");
    }
  }
}

NetworkWeights init_weights(const NetSpec& spec, std::uint64_t seed) {
  NetworkWeights w(spec);
  Rng rng(seed);
  const int last = w.layer_count() - 1;
  for (int li = 0; li <= last; ++li) {
    ConvLayer& layer = w.layer(li);
    if (spec.residual && li == last) continue;  // identity opening
    if (spec.clamp_output && li == last) {
      // Mid-band opening: a randomly weighted head can start with every site
      // pushed past a clamp bound, where the clamp zeroes the gradient and
      // the net cannot learn. A zero kernel with the bias at the midpoint of
      // [t_min, 1] starts every site inside the active range instead.
      const double mid = 0.5 * (spec.t_min + 1.0);
      for (std::size_t i = 0; i < layer.bias.numel(); ++i) layer.bias[i] = mid;
      continue;
    }
    const int fan_in = spec.widths[static_cast<std::size_t>(li)] * 9;
    const double std_dev = std::sqrt(2.0 / fan_in);
    for (std::size_t i = 0; i < layer.kernel.numel(); ++i) {
      layer.kernel[i] = rng.normal() * std_dev;
    }
  }
  return w;
}

namespace {

ImageTensor forward_plain(const NetworkWeights& w, const ImageTensor& y) {
  if (y.channels() != 3) throw ShapeError("net input must be 3-channel");
  const std::vector<double> params = w.flatten();
  ImageTensor out(y.height(), y.width(), w.spec().widths.back());
  net_forward_flat(w.spec(), params.data(), y.data(), y.height(), y.width(),
                   out.data());
  return out;
}

}  // namespace

ImageTensor dnet_forward(const NetworkWeights& w, const ImageTensor& y) {
  if (!w.spec().residual || w.spec().widths.back() != 3) {
    throw ValueError("dnet_forward expects a residual 3-channel head");
  }
  return forward_plain(w, y);
}

TransmissionMap tnet_forward(const NetworkWeights& w, const ImageTensor& y) {
  if (!w.spec().clamp_output) {
    throw ValueError("tnet_forward expects a clamped head");
  }
  return TransmissionMap(forward_plain(w, y));
}

TapedNet net_forward_taped(Tape& tape, const NetworkWeights& w, VarId input) {
  TapedNet net;
  VarId h = input;
  const int last = w.layer_count() - 1;
  for (int li = 0; li <= last; ++li) {
    const ConvLayer& layer = w.layer(li);
    net.kernels.push_back(tape.input(layer.kernel, true));
    net.biases.push_back(tape.input(layer.bias, true));
    h = tape.bias_add(tape.conv2d(h, net.kernels.back()), net.biases.back());
    if (li < last) h = tape.relu(h);
  }
  if (w.spec().residual) {
    h = tape.add(input, h);
  } else if (w.spec().clamp_output) {
    h = tape.clamp(h, w.spec().t_min, 1.0);
  }
  net.output = h;
  return net;
}

void save_checkpoint(const std::string& path, const NetworkWeights& w,
                     std::int64_t step, std::uint64_t seed) {
  nlohmann::json manifest;
  manifest["widths"] = w.spec().widths;
  manifest["residual"] = w.spec().residual;
  manifest["clamp_output"] = w.spec().clamp_output;
  manifest["t_min"] = w.spec().t_min;
  manifest["seed"] = seed;
  manifest["step"] = step;
  manifest["param_count"] = w.param_count();
  manifest["order"] = "layers front to back, kernel storage order, then bias";

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint for writing: " + path);
  f << kCheckpointMagic << '\n' << manifest.dump() << '\n';
  const std::vector<double> flat = w.flatten();
  for (double v : flat) {
    const double le = to_little_endian(v);
    f.write(reinterpret_cast<const char*>(&le), sizeof(le));
  }
  if (!f) throw IoError("short write on checkpoint: " + path);
}

NetworkWeights load_checkpoint(const std::string& path, std::int64_t* step,
                               std::uint64_t* seed) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint: " + path);
  std::string magic, line;
  if (!std::getline(f, magic) || magic != kCheckpointMagic) {
    throw FormatError("not a checkpoint file: " + path);
  }
  if (!std::getline(f, line)) throw FormatError("checkpoint manifest missing: " + path);

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint manifest unreadable: " + std::string(e.what()));
  }

  NetSpec spec;
  try {
    spec.widths = manifest.at("widths").get<std::vector<int>>();
    spec.residual = manifest.at("residual").get<bool>();
    spec.clamp_output = manifest.at("clamp_output").get<bool>();
    spec.t_min = manifest.at("t_min").get<double>();
    if (step) *step = manifest.at("step").get<std::int64_t>();
    if (seed) *seed = manifest.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint manifest field missing: " + std::string(e.what()));
  }
  spec.validate();

  const std::size_t count = manifest.at("param_count").get<std::size_t>();
  if (count != spec_param_count(spec)) {
    throw FormatError("checkpoint parameter count disagrees with its spec");
  }
  std::vector<double> flat(count);
  f.read(reinterpret_cast<char*>(flat.data()),
         static_cast<std::streamsize>(count * sizeof(double)));
  if (f.gcount() != static_cast<std::streamsize>(count * sizeof(double))) {
    throw FormatError("checkpoint payload truncated: " + path);
  }
  for (double& v : flat) v = to_little_endian(v);

  NetworkWeights w(spec);
  w.load_flat(flat);
  return w;
}

}  // namespace hazebayes
