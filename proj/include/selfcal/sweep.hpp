#pragma once

// Experiment sweeps over synthetic scenes: one parameter is varied over a
// list of values, each value is run for a number of seeded trials, and
// every estimator produces one row per (value, trial).

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "selfcal/closed_form.hpp"
#include "selfcal/core.hpp"
#include "selfcal/metrics.hpp"
#include "selfcal/prior_solver.hpp"
#include "selfcal/robust.hpp"
#include "selfcal/synth.hpp"

namespace selfcal {

enum class SweepParam {
  kTheta,
  kY,
  kSigmaN,
  kSigmaP,
  kFocalPrior,   // prior for f1, pixels
  kWeightRatio,  // w_f / w_c
  kEpsilon,      // stopping threshold of calibrate
};

enum class Estimator { kOurs, kBougnoux, kSturm, kOursEqual };

constexpr std::string_view to_string(SweepParam p) {
  switch (p) {
    case SweepParam::kTheta: return "theta";
    case SweepParam::kY: return "y";
    case SweepParam::kSigmaN: return "sigma_n";
    case SweepParam::kSigmaP: return "sigma_p";
    case SweepParam::kFocalPrior: return "f_prior";
    case SweepParam::kWeightRatio: return "weight_ratio";
    case SweepParam::kEpsilon: return "eps";
  }
  return "unknown";
}

constexpr std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::kOurs: return "ours";
    case Estimator::kBougnoux: return "bougnoux";
    case Estimator::kSturm: return "sturm";
    case Estimator::kOursEqual: return "ours_equal";
  }
  return "unknown";
}

inline std::optional<SweepParam> parse_sweep_param(std::string_view s) {
  for (auto p : {SweepParam::kTheta, SweepParam::kY, SweepParam::kSigmaN,
                 SweepParam::kSigmaP, SweepParam::kFocalPrior,
                 SweepParam::kWeightRatio, SweepParam::kEpsilon}) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

inline std::optional<Estimator> parse_estimator(std::string_view s) {
  for (auto e : {Estimator::kOurs, Estimator::kBougnoux, Estimator::kSturm,
                 Estimator::kOursEqual}) {
    if (to_string(e) == s) return e;
  }
  return std::nullopt;
}

struct SweepSpec {
  SweepParam param = SweepParam::kY;
  std::vector<double> values;
  int trials = 100;
  std::uint64_t seed = 0;
  // Scene template; its seed is replaced per trial.
  SceneConfig base;
  // Draw theta in [-15, 15] degrees and y in [-200, 200] per trial, for
  // sweeps over parameters other than the configuration.
  bool randomize_config = false;
  std::vector<Estimator> estimators{Estimator::kOurs, Estimator::kBougnoux};
  std::array<double, 2> f_prior{700.0, 400.0};
  double w_f = kDefaultFocalWeight;
  double w_c = kDefaultCenterWeight;
  double eps = 1e-6;
  int max_iterations = 50;
  // Skip estimation and hand the ground-truth F to the estimators.
  bool use_gt_f = false;
  RansacConfig ransac;
  // 0 reads FOCAL_SELFCAL_THREADS, and 0 or unset there means all cores.
  int threads = 0;
};

struct SweepRow {
  SweepParam param = SweepParam::kY;
  double value = 0.0;
  int trial = 0;
  Estimator estimator = Estimator::kOurs;
  double f1_est = std::nan("");
  double f2_est = std::nan("");
  double f1_err = kFailedFocalError;
  double f2_err = kFailedFocalError;
  int iterations = 0;
  bool converged = false;
  // "ok", a calibrate stop reason, or an error code name.
  std::string status = "ok";
  bool degenerate = false;  // principal axes coplanar
};

inline int sweep_threads(int requested) {
  int n = requested;
  if (n <= 0) {
    if (const char* env = std::getenv("FOCAL_SELFCAL_THREADS")) {
      n = std::atoi(env);
    }
  }
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  return std::max(1, n);
}

/// Per-trial stream seed. It does not depend on the swept value, so every
/// value sees the same noise draws for a given trial.
inline std::uint64_t trial_seed(std::uint64_t seed, int trial) {
  return detail::mix_seed(detail::mix_seed(seed) ^
                          static_cast<std::uint64_t>(trial));
}

namespace detail {

struct TrialSetup {
  SceneConfig scene;
  std::array<double, 2> f_prior;
  double w_f, w_c, eps;
};

inline TrialSetup setup_trial(const SweepSpec& spec, double value,
                              std::uint64_t seed) {
  TrialSetup t{spec.base, spec.f_prior, spec.w_f, spec.w_c, spec.eps};
  t.scene.seed = seed;
  if (spec.randomize_config) {
    std::mt19937_64 rng(mix_seed(seed ^ 0x5eedc0f1ULL));
    t.scene.theta_deg = std::uniform_real_distribution<double>(-15, 15)(rng);
    t.scene.y = std::uniform_real_distribution<double>(-200, 200)(rng);
  }
  switch (spec.param) {
    case SweepParam::kTheta: t.scene.theta_deg = value; break;
    case SweepParam::kY: t.scene.y = value; break;
    case SweepParam::kSigmaN: t.scene.sigma_n = value; break;
    case SweepParam::kSigmaP: t.scene.sigma_p = value; break;
    case SweepParam::kFocalPrior: t.f_prior[0] = value; break;
    case SweepParam::kWeightRatio: t.w_f = value * spec.w_c; break;
    case SweepParam::kEpsilon: t.eps = value; break;
  }
  return t;
}

inline void set_estimate(SweepRow& row, double f1, double f2,
                         const SyntheticScene& s) {
  row.f1_est = f1;
  row.f2_est = f2;
  row.f1_err = f1 > 0.0 ? focal_error(f1, s.k1.f) : kFailedFocalError;
  row.f2_err = f2 > 0.0 ? focal_error(f2, s.k2.f) : kFailedFocalError;
}

inline void run_estimator(SweepRow& row, const FundamentalMatrix& F,
                          const SyntheticScene& s, const TrialSetup& t,
                          int max_iterations) {
  const CalibrateOptions opts{t.eps, max_iterations};
  const auto& pp = s.assumed_pp;
  try {
    switch (row.estimator) {
      case Estimator::kOurs: {
        PriorConfig p;
        p.f_prior = t.f_prior;
        p.c_prior = pp;
        p.w_f = {t.w_f, t.w_f};
        p.w_c = {t.w_c, t.w_c};
        const CalibrationResult r = calibrate(F, p, opts);
        set_estimate(row, r.k1.f, r.k2.f, s);
        row.iterations = r.iterations;
        row.converged = r.converged;
        row.status = to_string(r.stop_reason);
        if (r.converged) row.status = "ok";
        break;
      }
      case Estimator::kOursEqual: {
        EqualFocalPriorConfig p;
        p.f_prior = t.f_prior[0];
        p.c_prior = pp;
        p.w_f = t.w_f;
        p.w_c = {t.w_c, t.w_c};
        const CalibrationResult r = calibrate_equal_focal(F, p, opts);
        set_estimate(row, r.k1.f, r.k2.f, s);
        row.iterations = r.iterations;
        row.converged = r.converged;
        row.status = to_string(r.stop_reason);
        if (r.converged) row.status = "ok";
        break;
      }
      case Estimator::kBougnoux: {
        const auto [f1, f2] = bougnoux_focal_lengths(F, pp[0], pp[1]);
        set_estimate(row, f1, f2, s);
        row.converged = true;
        break;
      }
      case Estimator::kSturm: {
        const double f =
            sturm_equal_focal(translate_f_to_origin(F, pp[0], pp[1]));
        set_estimate(row, f, f, s);
        row.converged = true;
        break;
      }
    }
  } catch (const Error& e) {
    row.status = to_string(e.code());
  }
}

inline void run_unit(const SweepSpec& spec, size_t value_index, int trial,
                     SweepRow* rows) {
  const double value = spec.values[value_index];
  const std::uint64_t seed = trial_seed(spec.seed, trial);
  const TrialSetup t = setup_trial(spec, value, seed);
  for (size_t e = 0; e < spec.estimators.size(); ++e) {
    rows[e] = SweepRow{};
    rows[e].param = spec.param;
    rows[e].value = value;
    rows[e].trial = trial;
    rows[e].estimator = spec.estimators[e];
  }
  auto fail_all = [&](ErrorCode code) {
    for (size_t e = 0; e < spec.estimators.size(); ++e) {
      rows[e].status = to_string(code);
    }
  };

  SyntheticScene scene;
  try {
    scene = generate_scene(t.scene);
  } catch (const Error& err) {
    fail_all(err.code());
    return;
  }
  FundamentalMatrix F = scene.gt_f;
  if (!spec.use_gt_f) {
    RansacConfig rc = spec.ransac;
    rc.seed = mix_seed(seed ^ 0xf00dULL);
    try {
      F = ransac_f(scene.correspondences, rc).best_f;
    } catch (const Error& err) {
      fail_all(err.code());
      return;
    }
  }
  for (size_t e = 0; e < spec.estimators.size(); ++e) {
    rows[e].degenerate = scene.coplanar_axes;
    run_estimator(rows[e], F, scene, t, spec.max_iterations);
  }
}

}  // namespace detail

/// Named sweeps reproducing the synthetic figure panels: convergence
/// (stopping threshold at C(0, 300)), coplanarity-theta and coplanarity-y
/// (approach to the degenerate C(0, 0)), pp-noise, pixel-noise, prior and
/// weights (random configurations). Noise and priors follow the figure
/// captions.
inline std::optional<SweepSpec> preset_sweep(std::string_view name) {
  SweepSpec s;
  s.base.sigma_n = 1.0;
  s.base.sigma_p = 10.0;
  s.f_prior = {700.0, 400.0};
  if (name == "convergence") {
    s.param = SweepParam::kEpsilon;
    s.values = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
    s.base.y = 300.0;
    s.f_prior = {660.0, 440.0};
    s.estimators = {Estimator::kOurs};
  } else if (name == "coplanarity-theta") {
    s.param = SweepParam::kTheta;
    s.values = {-15, -10, -5, -2, 0, 2, 5, 10, 15};
    s.base.y = 0.0;
  } else if (name == "coplanarity-y") {
    s.param = SweepParam::kY;
    s.values = {-200, -100, -50, -25, 0, 25, 50, 100, 200};
  } else if (name == "pp-noise") {
    s.param = SweepParam::kSigmaP;
    s.values = {0, 2, 5, 10, 20, 30};
    s.randomize_config = true;
  } else if (name == "pixel-noise") {
    s.param = SweepParam::kSigmaN;
    s.values = {0, 0.5, 1, 2, 3, 5};
    s.randomize_config = true;
  } else if (name == "prior") {
    s.param = SweepParam::kFocalPrior;
    s.values = {400, 500, 600, 700, 800, 900, 1000, 1200};
    s.randomize_config = true;
  } else if (name == "weights") {
    s.param = SweepParam::kWeightRatio;
    s.values = {1e-6, 1e-5, 1e-4, 5e-4, 1e-3, 1e-2, 1e-1};
    s.f_prior = {1000.0, 400.0};
    s.randomize_config = true;
  } else {
    return std::nullopt;
  }
  return s;
}

/// Rows ordered by value, then trial, then estimator. The table does not
/// depend on the thread count.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  if (spec.trials < 1 || spec.values.empty() || spec.estimators.empty() ||
      spec.max_iterations < 1 || !(spec.eps > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid sweep specification");
  }
  const size_t n_est = spec.estimators.size();
  const size_t units = spec.values.size() * static_cast<size_t>(spec.trials);
  std::vector<SweepRow> rows(units * n_est);

  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t u = next++; u < units; u = next++) {
      detail::run_unit(spec, u / spec.trials, static_cast<int>(u % spec.trials),
                       rows.data() + u * n_est);
    }
  };
  const int n_threads =
      std::min<int>(sweep_threads(spec.threads), static_cast<int>(units));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }
  return rows;
}

}  // namespace selfcal
