#pragma once

// Command-line front end. run_cli is separate from main so tests can
// drive it in-process.
//
// Exit codes: 0 ok, 1 input error, 2 insufficient data, 3 method failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "selfcal/closed_form.hpp"
#include "selfcal/io.hpp"
#include "selfcal/metrics.hpp"
#include "selfcal/prior_solver.hpp"
#include "selfcal/robust.hpp"
#include "selfcal/sweep.hpp"

namespace selfcal::cli {

using nlohmann::json;

enum ExitCode { kOk = 0, kInputError = 1, kInsufficientData = 2,
                kMethodFailure = 3 };

struct ImageSize {
  int width = 0;
  int height = 0;
};

/// {"F": [9 numbers, row-major]} with optional image sizes.
struct MatrixFile {
  Mat3 F = Mat3::Zero();
  std::optional<ImageSize> image1, image2;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline json to_json(const Mat3& F) {
  json a = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) a.push_back(F(r, c));
  }
  return a;
}

inline json to_json(const Vec2& v) { return json::array({v.x(), v.y()}); }

inline json to_json(const MatrixFile& m) {
  json j;
  j["F"] = to_json(m.F);
  if (m.image1) j["image1"] = {{"width", m.image1->width},
                               {"height", m.image1->height}};
  if (m.image2) j["image2"] = {{"width", m.image2->width},
                               {"height", m.image2->height}};
  return j;
}

inline MatrixFile matrix_file_from_json(const json& j) {
  if (!j.is_object() || !j.contains("F") || !j["F"].is_array() ||
      j["F"].size() != 9) {
    throw UsageError("\"F\" must be an array of 9 numbers");
  }
  MatrixFile m;
  for (int i = 0; i < 9; ++i) {
    const json& v = j["F"][i];
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
      throw UsageError("\"F\" entry " + std::to_string(i) +
                       " is not a finite number");
    }
    m.F(i / 3, i % 3) = v.get<double>();
  }
  if (m.F.norm() == 0.0) throw UsageError("\"F\" has zero norm");
  for (auto [key, slot] : {std::pair{"image1", &m.image1},
                           std::pair{"image2", &m.image2}}) {
    if (!j.contains(key)) continue;
    const json& im = j[key];
    if (!im.is_object() || !im.contains("width") || !im.contains("height") ||
        !im["width"].is_number_integer() || !im["height"].is_number_integer() ||
        im["width"].get<int>() <= 0 || im["height"].get<int>() <= 0) {
      throw UsageError(std::string("\"") + key +
                       "\" needs positive integer width and height");
    }
    *slot = ImageSize{im["width"].get<int>(), im["height"].get<int>()};
  }
  return m;
}

inline json parse_json_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // The message names the line and column.
    throw UsageError(e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_output(const std::string& path, const std::string& text,
                         std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text)) throw UsageError("cannot write '" + path + "'");
}

inline Vec2 to_vec2(const std::vector<double>& v, const char* flag) {
  if (v.size() != 2) throw UsageError(std::string(flag) + " expects u,v");
  return Vec2(v[0], v[1]);
}

inline std::optional<ImageSize> to_size(const std::vector<int>& v,
                                        const char* flag) {
  if (v.empty()) return std::nullopt;
  if (v.size() != 2 || v[0] <= 0 || v[1] <= 0) {
    throw UsageError(std::string(flag) + " expects width,height");
  }
  return ImageSize{v[0], v[1]};
}

// ---- estimate-f -----------------------------------------------------------

struct EstimateArgs {
  std::string input, out;
  double threshold = 3.0;
  int iters = 1000;
  std::uint64_t seed = 0;
  bool rfc = false;
  std::vector<double> pp1, pp2;
  double confidence = 0.999;
  bool no_lo = false;
  std::vector<int> image1, image2;
};

inline int cmd_estimate_f(const EstimateArgs& a, std::ostream& out,
                          std::ostream& err) {
  std::istringstream text(read_file(a.input));
  std::vector<Correspondence> cs;
  try {
    cs = read_correspondences_csv(text);
  } catch (const Error& e) {
    throw UsageError(a.input + ": " + e.what());
  }
  RansacConfig cfg;
  cfg.threshold = a.threshold;
  cfg.max_iterations = a.iters;
  cfg.seed = a.seed;
  cfg.rfc_enabled = a.rfc;
  cfg.confidence = a.confidence;
  cfg.lo_enabled = !a.no_lo;
  if (!a.pp1.empty() || !a.pp2.empty()) {
    cfg.rfc_principal_points = std::array<Vec2, 2>{
        to_vec2(a.pp1, "--pp1"), to_vec2(a.pp2, "--pp2")};
  }
  RansacReport r;
  try {
    r = ransac_f(cs, cfg);
  } catch (const Error& e) {
    err << e.what() << '\n';
    if (e.code() == ErrorCode::kTooFewPoints ||
        e.code() == ErrorCode::kNoModelFound) {
      return kInsufficientData;
    }
    return kInputError;
  }
  MatrixFile m{r.best_f.matrix(), to_size(a.image1, "--image1"),
               to_size(a.image2, "--image2")};
  json j = to_json(m);
  json mask = json::array();
  for (bool b : r.inlier_mask) mask.push_back(b ? 1 : 0);
  j["inliers"] = mask;
  j["inlier_count"] = r.inlier_count();
  j["iterations_run"] = r.iterations_run;
  j["models_generated"] = r.models_generated;
  j["models_rejected_rfc"] = r.models_rejected_rfc;
  j["score_evaluations"] = r.score_evaluations;
  write_output(a.out, j.dump(2) + "\n", out);
  return kOk;
}

// ---- calibrate ------------------------------------------------------------

struct CalibrateArgs {
  std::string input, out;
  std::optional<double> prior_f1, prior_f2;
  std::vector<double> prior_pp1, prior_pp2;
  bool equal_focal = false;
  double wf = kDefaultFocalWeight;
  double wc = kDefaultCenterWeight;
  double eps = 1e-6;
  int maxiter = 50;
  std::string method = "ours";
};

inline int cmd_calibrate(const CalibrateArgs& a, std::ostream& out,
                         std::ostream& err) {
  const MatrixFile m =
      matrix_file_from_json(parse_json_text(read_file(a.input)));

  auto focal_prior = [&](const std::optional<double>& flag,
                         const std::optional<ImageSize>& im)
      -> std::optional<double> {
    if (flag) return *flag;
    if (im) return kDefaultPriorFactor * std::max(im->width, im->height);
    return std::nullopt;
  };
  auto centre_prior = [&](const std::vector<double>& flag, const char* name,
                          const std::optional<ImageSize>& im)
      -> std::optional<Vec2> {
    if (!flag.empty()) return to_vec2(flag, name);
    if (im) return Vec2(0.5 * im->width, 0.5 * im->height);
    return std::nullopt;
  };
  const auto f1 = focal_prior(a.prior_f1, m.image1);
  const auto f2 = focal_prior(a.prior_f2, m.image2);
  const auto c1 = centre_prior(a.prior_pp1, "--prior-pp1", m.image1);
  const auto c2 = centre_prior(a.prior_pp2, "--prior-pp2", m.image2);
  const bool need_focal = a.method == "ours";
  if (!c1 || !c2 ||
      (need_focal && (!f1 || (!a.equal_focal && !f2)))) {
    err << "priors required\n";
    return kInputError;
  }

  FundamentalMatrix F;
  try {
    F = normalize_f(m.F);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return kInputError;
  }

  json j;
  j["method"] = a.method;
  try {
    if (a.method == "bougnoux") {
      const BougnouxResult b = bougnoux(translate_f_to_origin(F, *c1, *c2));
      j["f1_sq_positive"] = b.f1_sq.positive();
      j["f2_sq_positive"] = b.f2_sq.positive();
      j["c1"] = to_json(*c1);
      j["c2"] = to_json(*c2);
      if (!b.f1_sq.positive() || !b.f2_sq.positive()) {
        j["status"] = to_string(ErrorCode::kNoRealFocal);
        out << j.dump(2) << '\n';
        err << "imaginary focal length\n";
        return kMethodFailure;
      }
      j["f1"] = std::sqrt(b.f1_sq.value());
      j["f2"] = std::sqrt(b.f2_sq.value());
      j["status"] = "ok";
    } else if (a.method == "sturm") {
      const double f = sturm_equal_focal(translate_f_to_origin(F, *c1, *c2));
      j["f1"] = f;
      j["f2"] = f;
      j["c1"] = to_json(*c1);
      j["c2"] = to_json(*c2);
      j["status"] = "ok";
    } else {
      const CalibrateOptions opts{a.eps, a.maxiter};
      CalibrationResult r;
      if (a.equal_focal) {
        EqualFocalPriorConfig p;
        p.f_prior = *f1;
        p.c_prior = {*c1, *c2};
        p.w_f = a.wf;
        p.w_c = {a.wc, a.wc};
        r = calibrate_equal_focal(F, p, opts);
      } else {
        PriorConfig p;
        p.f_prior = {*f1, *f2};
        p.c_prior = {*c1, *c2};
        p.w_f = {a.wf, a.wf};
        p.w_c = {a.wc, a.wc};
        r = calibrate(F, p, opts);
      }
      j["f1"] = r.k1.f;
      j["f2"] = r.k2.f;
      j["c1"] = to_json(r.k1.c);
      j["c2"] = to_json(r.k2.c);
      j["iterations"] = r.iterations;
      j["converged"] = r.converged;
      j["cost"] = r.final_cost;
      j["status"] = to_string(r.stop_reason);
      if (r.stop_reason == StopReason::kNoRealSolution ||
          r.stop_reason == StopReason::kSolverFailure) {
        out << j.dump(2) << '\n';
        err << "no real solution\n";
        return kMethodFailure;
      }
    }
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::kNoRealFocal:
      case ErrorCode::kDegenerateFormula:
      case ErrorCode::kNoRealSolution:
      case ErrorCode::kSolverFailure:
        j["status"] = to_string(e.code());
        out << j.dump(2) << '\n';
        err << e.what() << '\n';
        return kMethodFailure;
      default:
        err << e.what() << '\n';
        return kInputError;
    }
  }
  write_output(a.out, j.dump(2) + "\n", out);
  return kOk;
}

// ---- synth-bench ----------------------------------------------------------

struct SynthArgs {
  std::string sweep, out;
  int trials = 100;
  std::uint64_t seed = 0;
  std::vector<double> values;
  std::vector<std::string> estimators;
  std::optional<double> sigma_n, sigma_p, theta, y, f1, f2, prior_f1,
      prior_f2, wf, wc, eps;
  std::optional<int> maxiter, n_points;
  bool gt_f = false;
  int threads = 0;
};

inline int cmd_synth_bench(const SynthArgs& a, std::ostream& out,
                           std::ostream& err) {
  auto spec = preset_sweep(a.sweep);
  if (!spec) {
    err << "unknown sweep '" << a.sweep << "'\n";
    return kInputError;
  }
  SweepSpec& s = *spec;
  s.trials = a.trials;
  s.seed = a.seed;
  s.threads = a.threads;
  s.use_gt_f = a.gt_f;
  if (!a.values.empty()) s.values = a.values;
  if (!a.estimators.empty()) {
    s.estimators.clear();
    for (const auto& name : a.estimators) {
      const auto e = parse_estimator(name);
      if (!e) {
        err << "unknown estimator '" << name << "'\n";
        return kInputError;
      }
      s.estimators.push_back(*e);
    }
  }
  if (a.sigma_n) s.base.sigma_n = *a.sigma_n;
  if (a.sigma_p) s.base.sigma_p = *a.sigma_p;
  if (a.theta) s.base.theta_deg = *a.theta;
  if (a.y) s.base.y = *a.y;
  if (a.f1) s.base.f1 = *a.f1;
  if (a.f2) s.base.f2 = *a.f2;
  if (a.n_points) s.base.n_points = *a.n_points;
  if (a.prior_f1) s.f_prior[0] = *a.prior_f1;
  if (a.prior_f2) s.f_prior[1] = *a.prior_f2;
  if (a.wf) s.w_f = *a.wf;
  if (a.wc) s.w_c = *a.wc;
  if (a.eps) s.eps = *a.eps;
  if (a.maxiter) s.max_iterations = *a.maxiter;

  std::vector<SweepRow> rows;
  try {
    rows = run_sweep(s);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return kInputError;
  }
  std::ostringstream csv;
  write_sweep_csv(csv, rows);
  write_output(a.out, csv.str(), out);
  return kOk;
}

// ---- metrics --------------------------------------------------------------

struct MetricsArgs {
  std::string input, out;
  std::vector<double> maa_pose{10.0, 20.0};
  std::vector<double> maa_focal{0.1, 0.2};
};

inline std::vector<EvalRecord> eval_records_from_json(const json& j) {
  const json& arr = j.is_object() && j.contains("records") ? j["records"] : j;
  if (!arr.is_array()) throw UsageError("expected an array of records");
  std::vector<EvalRecord> out;
  for (size_t i = 0; i < arr.size(); ++i) {
    const json& r = arr[i];
    const std::string at = "record " + std::to_string(i) + ": ";
    if (!r.is_object() || !r.contains("estimator") ||
        !r["estimator"].is_string()) {
      throw UsageError(at + "missing \"estimator\"");
    }
    EvalRecord e;
    e.estimator = r["estimator"].get<std::string>();
    e.success = r.value("success", true);
    for (int k = 0; k < 2; ++k) {
      const std::string key = k == 0 ? "f1_err" : "f2_err";
      if (r.contains(key)) {
        if (!r[key].is_number()) throw UsageError(at + key + " not a number");
        e.f_err[k] = r[key].get<double>();
      } else if (e.success) {
        throw UsageError(at + "missing \"" + key + "\"");
      }
    }
    if (r.contains("p_err")) {
      if (!r["p_err"].is_number()) throw UsageError(at + "p_err not a number");
      e.p_err = r["p_err"].get<double>();
    }
    out.push_back(std::move(e));
  }
  return out;
}

inline int cmd_metrics(const MetricsArgs& a, std::ostream& out,
                       std::ostream& err) {
  const std::string text = read_file(a.input);
  const size_t first = text.find_first_not_of(" \t\r\n");
  std::vector<EvalRecord> records;
  if (first != std::string::npos && (text[first] == '{' || text[first] == '[')) {
    records = eval_records_from_json(parse_json_text(text));
  } else if (first != std::string::npos) {
    std::istringstream in(text);
    try {
      records = read_eval_csv(in);
    } catch (const Error& e) {
      throw UsageError(a.input + ": " + e.what());
    }
  }
  if (records.empty()) {
    err << "no records\n";
    return kInsufficientData;
  }
  for (double t : a.maa_pose) {
    if (!(t > 0.0)) throw UsageError("--maa-pose thresholds must be positive");
  }
  for (double t : a.maa_focal) {
    if (!(t > 0.0)) throw UsageError("--maa-focal thresholds must be positive");
  }
  const auto summary = summarize(records, a.maa_pose, a.maa_focal);
  std::ostringstream csv;
  csv << "estimator,records,median_p_err";
  for (double t : a.maa_pose) csv << ",maa_p_" << format_double(t);
  csv << ",median_f_err";
  for (double t : a.maa_focal) csv << ",maa_f_" << format_double(t);
  csv << '\n';
  for (const auto& s : summary) {
    csv << s.estimator << ',' << s.records << ','
        << format_double(s.median_p_err);
    for (double v : s.maa_p) csv << ',' << format_double(v);
    csv << ',' << format_double(s.median_f_err);
    for (double v : s.maa_f) csv << ',' << format_double(v);
    csv << '\n';
  }
  write_output(a.out, csv.str(), out);
  return kOk;
}

// ---- dispatch -------------------------------------------------------------

inline int run_cli(const std::vector<std::string>& args, std::ostream& out,
                   std::ostream& err) {
  CLI::App app{"Two-view focal length self-calibration"};
  app.require_subcommand(1);

  EstimateArgs est;
  auto* e = app.add_subcommand("estimate-f",
                               "Robust F from a correspondence CSV");
  e->add_option("input", est.input, "CSV with header x1,y1,x2,y2")
      ->required();
  e->add_option("-o,--out", est.out, "Output JSON (default stdout)");
  e->add_option("--threshold", est.threshold, "Sampson threshold, pixels")
      ->check(CLI::PositiveNumber);
  e->add_option("--iters", est.iters, "Maximum RANSAC iterations")
      ->check(CLI::PositiveNumber);
  e->add_option("--seed", est.seed);
  e->add_flag("--rfc,!--no-rfc", est.rfc, "Real focal length check");
  e->add_option("--pp1", est.pp1, "RFC principal point of image 1, u,v")
      ->delimiter(',');
  e->add_option("--pp2", est.pp2, "RFC principal point of image 2, u,v")
      ->delimiter(',');
  e->add_option("--confidence", est.confidence, "1 disables early stop")
      ->check(CLI::Range(0.0, 1.0));
  e->add_flag("--no-lo", est.no_lo, "Skip the final least-squares refit");
  e->add_option("--image1", est.image1, "Image 1 size, width,height")
      ->delimiter(',');
  e->add_option("--image2", est.image2, "Image 2 size, width,height")
      ->delimiter(',');

  CalibrateArgs cal;
  auto* c = app.add_subcommand("calibrate", "Focal lengths from an F file");
  c->add_option("input", cal.input, "JSON with \"F\" and optional sizes")
      ->required();
  c->add_option("-o,--out", cal.out, "Output JSON (default stdout)");
  c->add_option("--prior-f1", cal.prior_f1,
                "Focal prior of camera 1 (shared with --equal-focal)");
  c->add_option("--prior-f2", cal.prior_f2, "Focal prior of camera 2");
  c->add_option("--prior-pp1", cal.prior_pp1, "u,v")->delimiter(',');
  c->add_option("--prior-pp2", cal.prior_pp2, "u,v")->delimiter(',');
  c->add_flag("--equal-focal", cal.equal_focal);
  c->add_option("--wf", cal.wf, "Focal prior weight")
      ->check(CLI::PositiveNumber);
  c->add_option("--wc", cal.wc, "Principal point prior weight")
      ->check(CLI::PositiveNumber);
  c->add_option("--eps", cal.eps, "Relative cost change to stop")
      ->check(CLI::PositiveNumber);
  c->add_option("--maxiter", cal.maxiter)->check(CLI::PositiveNumber);
  c->add_option("--method", cal.method)
      ->check(CLI::IsMember({"ours", "bougnoux", "sturm"}));

  SynthArgs syn;
  auto* s = app.add_subcommand("synth-bench", "Synthetic sweep to CSV");
  s->add_option("--sweep", syn.sweep,
                "convergence, coplanarity-theta, coplanarity-y, pp-noise, "
                "pixel-noise, prior or weights")
      ->required();
  s->add_option("--trials", syn.trials)->check(CLI::PositiveNumber);
  s->add_option("--seed", syn.seed);
  s->add_option("-o,--out", syn.out, "Output CSV (default stdout)");
  s->add_option("--values", syn.values, "Override the swept values")
      ->delimiter(',');
  s->add_option("--estimators", syn.estimators,
                "ours, bougnoux, sturm, ours_equal")
      ->delimiter(',');
  s->add_option("--sigma-n", syn.sigma_n);
  s->add_option("--sigma-p", syn.sigma_p);
  s->add_option("--theta", syn.theta);
  s->add_option("--y", syn.y);
  s->add_option("--f1", syn.f1);
  s->add_option("--f2", syn.f2);
  s->add_option("--n-points", syn.n_points);
  s->add_option("--prior-f1", syn.prior_f1);
  s->add_option("--prior-f2", syn.prior_f2);
  s->add_option("--wf", syn.wf);
  s->add_option("--wc", syn.wc);
  s->add_option("--eps", syn.eps);
  s->add_option("--maxiter", syn.maxiter);
  s->add_flag("--gt-f", syn.gt_f, "Use the ground-truth F");
  s->add_option("--threads", syn.threads,
                "0 uses FOCAL_SELFCAL_THREADS or all cores");

  MetricsArgs met;
  auto* m = app.add_subcommand("metrics", "Summary table from results");
  m->add_option("input", met.input, "Results CSV or evaluation JSON")
      ->required();
  m->add_option("-o,--out", met.out, "Output CSV (default stdout)");
  m->add_option("--maa-pose", met.maa_pose, "Pose mAA maxima, degrees")
      ->delimiter(',');
  m->add_option("--maa-focal", met.maa_focal, "Focal mAA maxima")
      ->delimiter(',');

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*e) return cmd_estimate_f(est, out, err);
    if (*c) return cmd_calibrate(cal, out, err);
    if (*s) return cmd_synth_bench(syn, out, err);
    if (*m) return cmd_metrics(met, out, err);
  } catch (const UsageError& ue) {
    err << ue.what() << '\n';
    return kInputError;
  } catch (const Error& le) {
    err << le.what() << '\n';
    return kInputError;
  }
  return kInputError;
}

}  // namespace selfcal::cli
