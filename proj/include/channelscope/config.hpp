#pragma once

namespace channelscope {

// Every numeric knob used by the library, overridable per call site.
// Defaults are the documented contract; tests pin against these values.
struct Tolerances {
  double structural = 1e-10;        // hermiticity / completeness / trace defects
  double reconstruction = 1e-9;     // round-trip representation error (operator norm)
  double generator_residual = 1e-7; // snapshot reassembly residual, scaled by ||L||
  double fd_step = 1e-5;            // default finite-difference step for d/dt of maps
  double fd_consistency = 1e-4;     // relative h vs h/2 disagreement that trips StepTooCoarse
  double intermediate_epsilon = 1e-3; // t -> t+eps window for divisibility scans
  double condition_limit = 1e12;    // transfer-matrix condition that marks an inversion singular
  double cp_negativity = 1e-9;      // Choi eigenvalue slack at eps = 1e-3 (scaled linearly in eps)
  double p_derivative = 1e-7;       // trace-norm derivative slack for P scans
  double quadrature = 1e-6;         // relative tolerance for adaptive quadrature
  double step_doubling = 1e-6;      // endpoint shift allowed when halving the integrator step
  double damping_saturation = 1e-12; // 1 - lambda below this means the channel hit its fixed point
};

inline const Tolerances& default_tolerances() {
  static const Tolerances tol{};
  return tol;
}

}  // namespace channelscope
