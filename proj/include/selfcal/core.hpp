#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace selfcal {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Failure classes raised by the library. Each operation documents which
// codes it may raise; callers that need a total function (sweeps, CLI)
// catch Error and branch on code().
enum class ErrorCode {
  kInvalidArgument,
  kRankDeficient,
  kCheiralityAmbiguous,
  kDegenerateFormula,
  kNoRealFocal,
  kNoRealSolution,
  kSolverFailure,
  kInvalidPrior,
  kDegenerateSample,
  kTooFewPoints,
  kNoModelFound,
  kFrustumEmpty,
  kParseError,
  kIoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kRankDeficient: return "rank_deficient";
    case ErrorCode::kCheiralityAmbiguous: return "cheirality_ambiguous";
    case ErrorCode::kDegenerateFormula: return "degenerate_formula";
    case ErrorCode::kNoRealFocal: return "no_real_focal";
    case ErrorCode::kNoRealSolution: return "no_real_solution";
    case ErrorCode::kSolverFailure: return "solver_failure";
    case ErrorCode::kInvalidPrior: return "invalid_prior";
    case ErrorCode::kDegenerateSample: return "degenerate_sample";
    case ErrorCode::kTooFewPoints: return "too_few_points";
    case ErrorCode::kNoModelFound: return "no_model_found";
    case ErrorCode::kFrustumEmpty: return "frustum_empty";
    case ErrorCode::kParseError: return "parse_error";
    case ErrorCode::kIoError: return "io_error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

namespace detail {

// splitmix64 finalizer; derives independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

inline Mat3 skew(const Vec3& t) {
  Mat3 m;
  m << 0.0, -t.z(), t.y(),
       t.z(), 0.0, -t.x(),
       -t.y(), t.x(), 0.0;
  return m;
}

}  // namespace selfcal
