#pragma once

#include <stdexcept>
#include <string>

namespace channelscope {

enum class errc {
  not_hermitian,
  non_square,
  dimension_mismatch,
  bad_dimension,
  incomplete_kraus,
  malformed_transfer,
  singular_intermediate,
  step_too_coarse,
  not_converged,
  damping_saturated,
  curve_out_of_range,
  bad_simplex,
  bad_rate,
  bad_params,
  parse_error,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::not_hermitian: return "NotHermitian";
    case errc::non_square: return "NonSquare";
    case errc::dimension_mismatch: return "DimensionMismatch";
    case errc::bad_dimension: return "BadDimension";
    case errc::incomplete_kraus: return "IncompleteKraus";
    case errc::malformed_transfer: return "MalformedTransfer";
    case errc::singular_intermediate: return "SingularIntermediate";
    case errc::step_too_coarse: return "StepTooCoarse";
    case errc::not_converged: return "NotConverged";
    case errc::damping_saturated: return "DampingSaturated";
    case errc::curve_out_of_range: return "CurveOutOfRange";
    case errc::bad_simplex: return "BadSimplex";
    case errc::bad_rate: return "BadRate";
    case errc::bad_params: return "BadParams";
    case errc::parse_error: return "ParseError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& what) { throw Error(code, what); }

}  // namespace channelscope
