#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hazebayes/image.hpp"
#include "hazebayes/rng.hpp"

namespace hazebayes {

enum class DepthKind { linear_ramp, radial, layered_steps };

DepthKind depth_kind_from_string(const std::string& s);
std::string to_string(DepthKind kind);

// Procedural depth in [0, 5]: a left-to-right ramp, a radial bowl with the
// near point at the center, or horizontal bands of sorted random depths.
DepthMap gen_depth(int h, int w, DepthKind kind, std::uint64_t seed);

// External depth ingestion: single-channel PFM, nonnegative values.
DepthMap load_depth_pfm(const std::string& path);

// Procedural clean radiance standing in for a photo corpus: a few random
// low-frequency cosine waves per channel over a random base color, kept
// inside [0.02, 0.98]. Deterministic given the seed.
ImageTensor gen_clean(int h, int w, std::uint64_t seed);

struct TripletGenConfig {
  int per_image = 1;
  double a_min = 0.7;
  double a_max = 1.0;
  double beta_min = 0.5;
  double beta_max = 2.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TripletRecord {
  int index = 0;
  std::string clean_png, clean_pfm;
  std::string hazy_png, hazy_pfm;
  std::string trans_pfm;
  double airlight = 1.0;
  double beta = 1.0;
  std::uint64_t seed = 0;
};

struct DatasetManifest {
  TripletGenConfig config;
  std::vector<TripletRecord> records;
  std::string base_dir;
};

struct HazeTriplet {
  ImageTensor clean;
  ImageTensor hazy;
  TransmissionMap trans;
  double airlight = 1.0;
  double beta = 1.0;
};

// Uniform (A, beta) draw inside the configured ranges.
std::pair<double, double> sample_scatter(Rng& rng, const TripletGenConfig& cfg);

// Builds per_image records per clean image under out_dir (clean/ hazy/ trans/
// with zero-padded indices) and writes manifest.json. Clean images and
// transmissions are quantized through float32 before synthesis, so the stored
// hazy PFM equals float32(synthesize(stored clean, stored t, A)) bit for bit.
// PNG copies are 8-bit quantized views; training reads the PFM paths.
DatasetManifest gen_triplets(const std::vector<ImageTensor>& clean,
                             const TripletGenConfig& cfg, const std::string& out_dir);

void save_manifest(const DatasetManifest& manifest, const std::string& path);
DatasetManifest load_manifest(const std::string& path);

// Loads the lossless (PFM) sides of one record.
HazeTriplet load_triplet(const DatasetManifest& manifest, std::size_t index);

}  // namespace hazebayes
