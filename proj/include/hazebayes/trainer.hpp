#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hazebayes/autodiff.hpp"
#include "hazebayes/datagen.hpp"
#include "hazebayes/metrics.hpp"
#include "hazebayes/nets.hpp"
#include "hazebayes/variational.hpp"

namespace hazebayes {

enum class Optimizer { sgd, adam };
enum class AirlightMode { ground_truth, dcp_estimated };

struct TrainConfig {
  double learning_rate = 1e-3;
  Optimizer optimizer = Optimizer::adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int steps = 2000;
  int batch_size = 2;
  int patch = 64;
  std::uint64_t seed = 0;
  HyperParams hyper;
  AirlightMode airlight_mode = AirlightMode::ground_truth;
  NetSpec dnet = NetSpec::dnet_default();
  NetSpec tnet = NetSpec::tnet_default();
  TauChannelMode tau_mode = TauChannelMode::broadcast;

  void validate() const;
};

struct TrainLogRecord {
  int step = 0;
  double likelihood = 0.0;
  double kl_z = 0.0;
  double kl_tau = 0.0;
  double negative_elbo = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  NetworkWeights dnet;
  NetworkWeights tnet;
  std::vector<TrainLogRecord> log;
};

// The taped objective graph; scalar node ids for the three terms and their
// combination negative_elbo = -likelihood + kl_z + kl_tau.
struct TapedObjective {
  VarId likelihood;
  VarId kl_z;
  VarId kl_tau;
  VarId negative_elbo;
};

// t_reference is aligned to the estimate's channel count before taping.
TapedObjective build_objective(Tape& tape, VarId y, VarId x_clean, VarId phi,
                               VarId nu, const TransmissionMap& t_reference,
                               const HyperParams& hp,
                               TauChannelMode mode = TauChannelMode::broadcast);

// Joint optimization of both nets on the shared loss. Deterministic given the
// seed: data order, crops, initialization, and final weights are all fixed.
// Throws NumericalError with the step number if the loss leaves the finite
// range.
TrainResult train(const std::vector<HazeTriplet>& dataset, const TrainConfig& cfg);

struct EvalImageReport {
  int index = 0;
  double psnr_dnet = 0.0;
  double ssim_dnet = 0.0;
  double psnr_hazy = 0.0;
  double ssim_hazy = 0.0;
  double mse_tnet = 0.0;
  double ssim_tnet = 0.0;
};

struct EvalReport {
  std::vector<EvalImageReport> images;
  double mean_psnr_dnet = 0.0;
  double mean_ssim_dnet = 0.0;
  double mean_psnr_hazy = 0.0;
  double mean_ssim_hazy = 0.0;
  double mean_mse_tnet = 0.0;
  double mean_ssim_tnet = 0.0;
};

EvalReport evaluate(const NetworkWeights& dnet, const NetworkWeights& tnet,
                    const std::vector<HazeTriplet>& dataset,
                    const MetricConfig& mcfg = {});

struct GradcheckReport {
  int seeds = 0;
  double fd_step = 1e-6;
  double rel_floor = 0.0;  // comparisons floor at 1e-6 * max |gradient|
  double max_rel_err = 0.0;
  std::vector<double> per_seed_max;
};

// Full-path gradient check: 8x8 instance, width-2 nets, every weight of both
// networks compared against an extended-precision central finite difference.
GradcheckReport end_to_end_gradcheck(int num_seeds, std::uint64_t base_seed,
                                     int h = 8, int w = 8);

}  // namespace hazebayes
