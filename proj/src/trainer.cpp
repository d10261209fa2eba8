#include "hazebayes/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "hazebayes/dcp.hpp"
#include "hazebayes/errors.hpp"
#include "hazebayes/haze_model.hpp"
#include "hazebayes/rng.hpp"

namespace hazebayes {

namespace {

ImageTensor crop(const ImageTensor& img, int oy, int ox, int size) {
  ImageTensor out(size, size, img.channels());
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        out.at(y, x, c) = img.at(oy + y, ox + x, c);
      }
    }
  }
  return out;
}

// Appends tape gradients into `flat` in the same order NetworkWeights uses:
// layers front to back, kernel storage order, then bias.
void accumulate_grads(const Tape& tape, const TapedNet& net,
                      std::vector<double>& flat, std::size_t offset) {
  std::size_t pos = offset;
  for (std::size_t li = 0; li < net.kernels.size(); ++li) {
    const Tensor& gk = tape.grad(net.kernels[li]);
    for (std::size_t e = 0; e < gk.numel(); ++e) flat[pos++] += gk[e];
    const Tensor& gb = tape.grad(net.biases[li]);
    for (std::size_t e = 0; e < gb.numel(); ++e) flat[pos++] += gb[e];
  }
}

void apply_update(NetworkWeights& w, const std::vector<double>& g,
                  std::vector<double>& m, std::vector<double>& v, double beta1_pow,
                  double beta2_pow, const TrainConfig& cfg) {
  if (cfg.optimizer == Optimizer::sgd) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      w.set_param(i, w.param(i) - cfg.learning_rate * g[i]);
    }
    return;
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * g[i];
    v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * g[i] * g[i];
    const double m_hat = m[i] / (1.0 - beta1_pow);
    const double v_hat = v[i] / (1.0 - beta2_pow);
    w.set_param(i, w.param(i) -
                       cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps));
  }
}

// Value twin of build_objective over flat arrays, templated so the gradient
// check can evaluate it in extended precision. `nu` is single-channel and
// broadcasts over the three channels of the other arguments.
template <typename T>
T objective_flat(const T* y, const T* x, const T* t, const T* phi, const T* nu,
                 int h, int w, const HyperParams& hp) {
  const std::size_t pixels = static_cast<std::size_t>(h) * w;
  const std::size_t n = pixels * 3;
  const T airlight = T(hp.airlight);
  const T sigma2 = T(hp.sigma2);
  const T c0 = T(-0.5) * (std::log(T(2) * std::numbers::pi_v<T>) + std::log(sigma2));
  T resid_acc = T(0);
  for (std::size_t i = 0; i < n; ++i) {
    const T nu_site = nu[i / 3];
    const T r = y[i] - (phi[i] * nu_site + airlight * (T(1) - nu_site));
    resid_acc += r * r + sigma2;
  }
  const T likelihood = T(double(n)) * c0 - resid_acc / (T(2) * sigma2);
  T z_acc = T(0);
  for (std::size_t i = 0; i < n; ++i) {
    const T a = std::abs(phi[i] - x[i]) / T(hp.eps1_2);
    z_acc += std::exp(-a) + a;
  }
  const T kl_z = z_acc - T(double(n));
  T t_acc = T(0);
  for (std::size_t i = 0; i < pixels; ++i) {
    const T d = std::log(nu[i]) - std::log(t[i]);
    t_acc += d * d;
  }
  const T kl_tau = t_acc / (T(2) * T(hp.eps2_2));
  return -likelihood + kl_z + kl_tau;
}

}  // namespace

void TrainConfig::validate() const {
  if (!std::isfinite(learning_rate) || learning_rate < 0.0) {
    throw ValueError("TrainConfig: learning_rate must be finite and >= 0");
  }
  if (steps < 0) throw ValueError("TrainConfig: steps must be >= 0");
  if (batch_size < 1) throw ValueError("TrainConfig: batch_size must be >= 1");
  if (patch < 1) throw ValueError("TrainConfig: patch must be >= 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) ||
      !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ValueError("TrainConfig: adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ValueError("TrainConfig: adam_eps must be > 0");
  hyper.validate();
  dnet.validate();
  tnet.validate();
  if (dnet.widths.back() != 3) {
    throw ValueError("TrainConfig: dehazing net must produce 3 channels");
  }
  if (!tnet.clamp_output) {
    throw ValueError("TrainConfig: transmission net needs a clamped head");
  }
}

TapedObjective build_objective(Tape& tape, VarId y, VarId x_clean, VarId phi,
                               VarId nu, const TransmissionMap& t_reference,
                               const HyperParams& hp, TauChannelMode mode) {
  hp.validate();
  const double n_sites = static_cast<double>(tape.value(y).numel());
  const double c0 =
      -0.5 * (std::log(2.0 * std::numbers::pi) + std::log(hp.sigma2));

  const VarId one_minus_nu = tape.sub(tape.constant(Tensor::scalar(1.0)), nu);
  const VarId predicted =
      tape.add(tape.mul(phi, nu), tape.scalar_mul(one_minus_nu, hp.airlight));
  const VarId r = tape.sub(y, predicted);
  const VarId r2s =
      tape.add(tape.square(r), tape.constant(Tensor::scalar(hp.sigma2)));
  const VarId penalty = tape.scalar_mul(tape.sum(r2s), 1.0 / (2.0 * hp.sigma2));

  TapedObjective obj;
  obj.likelihood =
      tape.sub(tape.constant(Tensor::scalar(n_sites * c0)), penalty);

  const VarId a =
      tape.scalar_mul(tape.abs(tape.sub(phi, x_clean)), 1.0 / hp.eps1_2);
  const VarId z_site = tape.add(tape.exp(tape.scalar_mul(a, -1.0)), a);
  obj.kl_z =
      tape.sub(tape.sum(z_site), tape.constant(Tensor::scalar(n_sites)));

  const auto& nu_dims = tape.value(nu).dims();
  const int nu_ch = nu_dims.size() == 3 ? nu_dims[2] : 1;
  TransmissionMap t_aligned =
      (mode == TauChannelMode::reduce && nu_ch == 1 &&
       t_reference.channels() == 3)
          ? reduce_transmission(t_reference)
          : t_reference;
  const VarId log_t =
      tape.log(tape.constant(Tensor::from_image(t_aligned.tensor())));
  const VarId d_log = tape.sub(tape.log(nu), log_t);
  obj.kl_tau =
      tape.scalar_mul(tape.sum(tape.square(d_log)), 1.0 / (2.0 * hp.eps2_2));

  obj.negative_elbo = tape.add(
      tape.add(tape.scalar_mul(obj.likelihood, -1.0), obj.kl_z), obj.kl_tau);
  return obj;
}

TrainResult train(const std::vector<HazeTriplet>& dataset, const TrainConfig& cfg) {
  cfg.validate();
  if (dataset.empty()) throw ValueError("train: dataset is empty");
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const HazeTriplet& rec = dataset[i];
    if (!rec.clean.same_shape(rec.hazy) || rec.clean.channels() != 3) {
      throw ValueError("train: record " + std::to_string(i) +
                       " needs matching 3-channel clean/hazy images");
    }
    if (rec.trans.height() != rec.clean.height() ||
        rec.trans.width() != rec.clean.width()) {
      throw ValueError("train: record " + std::to_string(i) +
                       " has a transmission map of mismatched size");
    }
    if (rec.clean.height() < cfg.patch || rec.clean.width() < cfg.patch) {
      throw ValueError("train: record " + std::to_string(i) +
                       " is smaller than the training patch");
    }
  }

  TrainResult res{init_weights(cfg.dnet, Rng::derive_seed(cfg.seed, 1)),
                  init_weights(cfg.tnet, Rng::derive_seed(cfg.seed, 2)),
                  {}};

  std::vector<double> airlight(dataset.size(), 0.0);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    airlight[i] = cfg.airlight_mode == AirlightMode::ground_truth
                      ? dataset[i].airlight
                      : estimate_atmospheric_light(dataset[i].hazy);
  }

  Rng rng(Rng::derive_seed(cfg.seed, 3));
  const int n = static_cast<int>(dataset.size());
  const std::size_t pd = res.dnet.param_count();
  const std::size_t pt = res.tnet.param_count();
  std::vector<double> grad_d(pd, 0.0), grad_t(pt, 0.0);
  std::vector<double> m_d(pd, 0.0), v_d(pd, 0.0), m_t(pt, 0.0), v_t(pt, 0.0);
  double beta1_pow = 1.0;
  double beta2_pow = 1.0;
  const double inv_b = 1.0 / cfg.batch_size;
  const auto start = std::chrono::steady_clock::now();
  res.log.reserve(static_cast<std::size_t>(cfg.steps));

  for (int step = 0; step < cfg.steps; ++step) {
    std::fill(grad_d.begin(), grad_d.end(), 0.0);
    std::fill(grad_t.begin(), grad_t.end(), 0.0);
    double sum_l = 0.0, sum_kz = 0.0, sum_kt = 0.0;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const int idx = rng.uniform_int(0, n - 1);
      const HazeTriplet& rec = dataset[static_cast<std::size_t>(idx)];
      const int oy = rng.uniform_int(0, rec.clean.height() - cfg.patch);
      const int ox = rng.uniform_int(0, rec.clean.width() - cfg.patch);
      const ImageTensor y_patch = crop(rec.hazy, oy, ox, cfg.patch);
      const ImageTensor x_patch = crop(rec.clean, oy, ox, cfg.patch);
      const TransmissionMap t_patch(crop(rec.trans.tensor(), oy, ox, cfg.patch));
      HyperParams hp = cfg.hyper;
      hp.airlight = airlight[static_cast<std::size_t>(idx)];

      Tape tape;
      const VarId y_id = tape.constant(Tensor::from_image(y_patch));
      const VarId x_id = tape.constant(Tensor::from_image(x_patch));
      const TapedNet dn = net_forward_taped(tape, res.dnet, y_id);
      const TapedNet tn = net_forward_taped(tape, res.tnet, y_id);
      const TapedObjective obj = build_objective(
          tape, y_id, x_id, dn.output, tn.output, t_patch, hp, cfg.tau_mode);
      const double neg = tape.value(obj.negative_elbo)[0];
      if (!std::isfinite(neg)) {
        throw NumericalError("training diverged: non-finite loss at step " +
                             std::to_string(step));
      }
      sum_l += tape.value(obj.likelihood)[0];
      sum_kz += tape.value(obj.kl_z)[0];
      sum_kt += tape.value(obj.kl_tau)[0];
      tape.backward(obj.negative_elbo);
      accumulate_grads(tape, dn, grad_d, 0);
      accumulate_grads(tape, tn, grad_t, 0);
    }
    for (double& g : grad_d) g *= inv_b;
    for (double& g : grad_t) g *= inv_b;
    const double l_mean = sum_l * inv_b;
    const double kz_mean = sum_kz * inv_b;
    const double kt_mean = sum_kt * inv_b;

    beta1_pow *= cfg.adam_beta1;
    beta2_pow *= cfg.adam_beta2;
    apply_update(res.dnet, grad_d, m_d, v_d, beta1_pow, beta2_pow, cfg);
    apply_update(res.tnet, grad_t, m_t, v_t, beta1_pow, beta2_pow, cfg);

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    res.log.push_back(
        {step, l_mean, kz_mean, kt_mean, -l_mean + kz_mean + kt_mean, wall});
  }
  return res;
}

EvalReport evaluate(const NetworkWeights& dnet, const NetworkWeights& tnet,
                    const std::vector<HazeTriplet>& dataset,
                    const MetricConfig& mcfg) {
  if (dataset.empty()) throw ValueError("evaluate: dataset is empty");
  EvalReport rep;
  rep.images.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const HazeTriplet& rec = dataset[i];
    EvalImageReport r;
    r.index = static_cast<int>(i);
    const ImageTensor x_hat = dnet_forward(dnet, rec.hazy);
    r.psnr_dnet = psnr(x_hat, rec.clean, mcfg);
    r.ssim_dnet = ssim(x_hat, rec.clean, mcfg);
    r.psnr_hazy = psnr(rec.hazy, rec.clean, mcfg);
    r.ssim_hazy = ssim(rec.hazy, rec.clean, mcfg);
    const TransmissionMap t_hat = tnet_forward(tnet, rec.hazy);
    const TransmissionMap t_ref = rec.trans.channels() == t_hat.channels()
                                      ? rec.trans
                                      : reduce_transmission(rec.trans);
    r.mse_tnet = mse(t_hat.tensor(), t_ref.tensor());
    r.ssim_tnet = ssim(t_hat.tensor(), t_ref.tensor(), mcfg);
    rep.images.push_back(r);
    rep.mean_psnr_dnet += r.psnr_dnet;
    rep.mean_ssim_dnet += r.ssim_dnet;
    rep.mean_psnr_hazy += r.psnr_hazy;
    rep.mean_ssim_hazy += r.ssim_hazy;
    rep.mean_mse_tnet += r.mse_tnet;
    rep.mean_ssim_tnet += r.ssim_tnet;
  }
  const double inv = 1.0 / static_cast<double>(dataset.size());
  rep.mean_psnr_dnet *= inv;
  rep.mean_ssim_dnet *= inv;
  rep.mean_psnr_hazy *= inv;
  rep.mean_ssim_hazy *= inv;
  rep.mean_mse_tnet *= inv;
  rep.mean_ssim_tnet *= inv;
  return rep;
}

GradcheckReport end_to_end_gradcheck(int num_seeds, std::uint64_t base_seed,
                                     int h, int w) {
  if (num_seeds < 1) throw ValueError("end_to_end_gradcheck: num_seeds must be >= 1");
  if (h < 1 || w < 1) throw ValueError("end_to_end_gradcheck: empty image");
  const NetSpec dspec{{3, 2, 2, 3}, true, false, 0.05};
  const NetSpec tspec{{3, 2, 2, 1}, false, true, 0.05};
  HyperParams hp;
  hp.airlight = 0.8;

  GradcheckReport rep;
  rep.seeds = num_seeds;
  rep.fd_step = 1e-6;
  const std::size_t pixels = static_cast<std::size_t>(h) * w;

  for (int s = 0; s < num_seeds; ++s) {
    const std::uint64_t seed = Rng::derive_seed(base_seed, 100 + static_cast<std::uint64_t>(s));
    NetworkWeights dw = init_weights(dspec, Rng::derive_seed(seed, 1));
    NetworkWeights tw = init_weights(tspec, Rng::derive_seed(seed, 2));
    Rng rng(Rng::derive_seed(seed, 3));

    // Both heads open at constants (identity / mid-band), which would zero
    // out the gradient paths through the earlier layers. Give each final
    // layer small random weights so every parameter carries signal.
    const auto reseed_head = [&](NetworkWeights& w, const NetSpec& spec,
                                 double bias_center) {
      const LayerOffsets last = layer_offsets(spec).back();
      const std::size_t k_count =
          static_cast<std::size_t>(last.out_ch) * last.in_ch * 9;
      for (std::size_t i = 0; i < k_count; ++i) {
        w.set_param(last.kernel + i, 0.2 * rng.normal());
      }
      for (int i = 0; i < last.out_ch; ++i) {
        w.set_param(last.bias + static_cast<std::size_t>(i),
                    bias_center + 0.05 * rng.normal());
      }
    };
    reseed_head(dw, dspec, 0.0);
    reseed_head(tw, tspec, 0.5 * (tspec.t_min + 1.0));

    ImageTensor x(h, w, 3);
    for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(0.0, 1.0);
    ImageTensor t_img(h, w, 1);
    for (std::size_t i = 0; i < t_img.size(); ++i) {
      t_img.data()[i] = rng.uniform(0.15, 0.9);
    }
    const TransmissionMap t_map(t_img);
    const ImageTensor y = synthesize_hazy(x, t_map, hp.airlight);

    Tape tape;
    const VarId y_id = tape.constant(Tensor::from_image(y));
    const VarId x_id = tape.constant(Tensor::from_image(x));
    const TapedNet dn = net_forward_taped(tape, dw, y_id);
    const TapedNet tn = net_forward_taped(tape, tw, y_id);
    const TapedObjective obj =
        build_objective(tape, y_id, x_id, dn.output, tn.output, t_map, hp,
                        TauChannelMode::broadcast);
    tape.backward(obj.negative_elbo);

    const std::size_t pd = dw.param_count();
    const std::size_t pt = tw.param_count();
    std::vector<double> analytic(pd + pt, 0.0);
    accumulate_grads(tape, dn, analytic, 0);
    accumulate_grads(tape, tn, analytic, pd);

    std::vector<long double> params(pd + pt);
    for (std::size_t i = 0; i < pd; ++i) params[i] = dw.param(i);
    for (std::size_t i = 0; i < pt; ++i) params[pd + i] = tw.param(i);
    std::vector<long double> y_ld(y.data(), y.data() + y.size());
    std::vector<long double> x_ld(x.data(), x.data() + x.size());
    std::vector<long double> t_ld(t_img.data(), t_img.data() + t_img.size());
    std::vector<long double> phi_ld(pixels * 3), nu_ld(pixels);

    const auto objective_at = [&](const std::vector<long double>& p) {
      net_forward_flat(dspec, p.data(), y_ld.data(), h, w, phi_ld.data());
      net_forward_flat(tspec, p.data() + pd, y_ld.data(), h, w, nu_ld.data());
      return objective_flat(y_ld.data(), x_ld.data(), t_ld.data(), phi_ld.data(),
                            nu_ld.data(), h, w, hp);
    };

    double g_max = 0.0;
    for (const double g : analytic) g_max = std::max(g_max, std::abs(g));
    const double floor = 1e-6 * g_max;
    rep.rel_floor = std::max(rep.rel_floor, floor);

    double seed_max = 0.0;
    const long double h_step = static_cast<long double>(rep.fd_step);
    const long double f_base = objective_at(params);
    const auto rel_against = [&](double a, double b) {
      const double denom = std::max({std::abs(a), std::abs(b), floor});
      return denom == 0.0 ? 0.0 : std::abs(a - b) / denom;
    };
    for (std::size_t i = 0; i < params.size(); ++i) {
      const long double keep = params[i];
      params[i] = keep + h_step;
      const long double f_plus = objective_at(params);
      params[i] = keep - h_step;
      const long double f_minus = objective_at(params);
      params[i] = keep;
      const double g_fd =
          static_cast<double>((f_plus - f_minus) / (2.0L * h_step));
      // ReLU, clamp, and abs make the objective piecewise smooth. When the
      // probe interval straddles a slope break, the central difference
      // averages two branches and stops estimating any derivative, but the
      // one-sided slope on the break-free side still matches the branch the
      // evaluation point lies on. On smooth stretches the one-sided slopes
      // carry an O(f''·h) curvature bias instead and the central difference
      // is the accurate one. The analytic gradient is graded against the
      // best-supported of the three; a wrong gradient matches none of them.
      const double g_left =
          static_cast<double>((f_base - f_minus) / h_step);
      const double g_right =
          static_cast<double>((f_plus - f_base) / h_step);
      const double rel = std::min({rel_against(analytic[i], g_fd),
                                   rel_against(analytic[i], g_left),
                                   rel_against(analytic[i], g_right)});
      seed_max = std::max(seed_max, rel);
    }
    rep.per_seed_max.push_back(seed_max);
    rep.max_rel_err = std::max(rep.max_rel_err, seed_max);
  }
  return rep;
}

}  // namespace hazebayes
