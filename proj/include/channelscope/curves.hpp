#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "channelscope/config.hpp"
#include "channelscope/errors.hpp"

namespace channelscope {

// Monotone cubic (Fritsch–Carlson) interpolant with analytic derivative.
// Preserves monotonicity of the samples, which the damping validators rely on.
class TableCurve {
 public:
  TableCurve(std::vector<double> t, std::vector<double> v) : t_(std::move(t)), v_(std::move(v)) {
    if (t_.size() != v_.size() || t_.size() < 2)
      raise(errc::bad_params, "table curve needs >= 2 matched samples");
    for (std::size_t i = 1; i < t_.size(); ++i)
      if (!(t_[i] > t_[i - 1])) raise(errc::bad_params, "table curve abscissae must increase");
    build_slopes();
  }

  double value(double t) const {
    const auto [i, s] = locate(t);
    const double h = t_[i + 1] - t_[i];
    const double a = v_[i], b = m_[i], dv = v_[i + 1] - v_[i];
    const double c = (3.0 * dv / h - 2.0 * m_[i] - m_[i + 1]) / h;
    const double d = (m_[i] + m_[i + 1] - 2.0 * dv / h) / (h * h);
    return a + s * (b + s * (c + s * d));
  }

  double derivative(double t) const {
    const auto [i, s] = locate(t);
    const double h = t_[i + 1] - t_[i];
    const double dv = v_[i + 1] - v_[i];
    const double c = (3.0 * dv / h - 2.0 * m_[i] - m_[i + 1]) / h;
    const double d = (m_[i] + m_[i + 1] - 2.0 * dv / h) / (h * h);
    return m_[i] + s * (2.0 * c + 3.0 * s * d);
  }

  double t_front() const { return t_.front(); }
  double t_back() const { return t_.back(); }

 private:
  std::pair<std::size_t, double> locate(double t) const {
    if (t < t_.front() - 1e-12 || t > t_.back() + 1e-12)
      raise(errc::curve_out_of_range,
            "table curve queried at t=" + std::to_string(t) + " outside [" +
                std::to_string(t_.front()) + ", " + std::to_string(t_.back()) + "]");
    t = std::clamp(t, t_.front(), t_.back());
    auto it = std::upper_bound(t_.begin(), t_.end(), t);
    std::size_t i = static_cast<std::size_t>(std::distance(t_.begin(), it));
    i = std::clamp<std::size_t>(i, 1, t_.size() - 1) - 1;
    return {i, t - t_[i]};
  }

  void build_slopes() {
    const std::size_t n = t_.size();
    std::vector<double> delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) delta[i] = (v_[i + 1] - v_[i]) / (t_[i + 1] - t_[i]);
    m_.assign(n, 0.0);
    m_[0] = delta[0];
    m_[n - 1] = delta[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i)
      m_[i] = (delta[i - 1] * delta[i] <= 0.0) ? 0.0 : 0.5 * (delta[i - 1] + delta[i]);
    // Fritsch–Carlson limiter.
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (delta[i] == 0.0) {
        m_[i] = m_[i + 1] = 0.0;
        continue;
      }
      const double alpha = m_[i] / delta[i];
      const double beta = m_[i + 1] / delta[i];
      const double r = alpha * alpha + beta * beta;
      if (r > 9.0) {
        const double tau = 3.0 / std::sqrt(r);
        m_[i] = tau * alpha * delta[i];
        m_[i + 1] = tau * beta * delta[i];
      }
    }
  }

  std::vector<double> t_, v_, m_;
};

// A scalar function of time with an exact derivative. Closed-form families
// carry their parameters so models can be serialized and re-identified.
class ParamCurve {
 public:
  static ParamCurve constant(double v) {
    ParamCurve c("constant", {v});
    c.value_ = [v](double) { return v; };
    c.deriv_ = [](double) { return 0.0; };
    return c;
  }

  // scale * (1 - e^{-rate t})
  static ParamCurve exp_rise(double rate, double scale = 1.0) {
    if (!(rate > 0.0)) raise(errc::bad_params, "exp_rise needs rate > 0");
    ParamCurve c("exp_rise", {rate, scale});
    c.value_ = [=](double t) { return scale * (1.0 - std::exp(-rate * t)); };
    c.deriv_ = [=](double t) { return scale * rate * std::exp(-rate * t); };
    return c;
  }

  // amplitude * e^{-rate t}
  static ParamCurve exp_decay(double rate, double amplitude = 1.0) {
    if (!(rate > 0.0)) raise(errc::bad_params, "exp_decay needs rate > 0");
    ParamCurve c("exp_decay", {rate, amplitude});
    c.value_ = [=](double t) { return amplitude * std::exp(-rate * t); };
    c.deriv_ = [=](double t) { return -amplitude * rate * std::exp(-rate * t); };
    return c;
  }

  // scale * tanh(rate t)
  static ParamCurve tanh_scaled(double rate, double scale = 1.0) {
    if (!(rate > 0.0)) raise(errc::bad_params, "tanh_scaled needs rate > 0");
    ParamCurve c("tanh_scaled", {rate, scale});
    c.value_ = [=](double t) { return scale * std::tanh(rate * t); };
    c.deriv_ = [=](double t) {
      const double ch = std::cosh(rate * t);
      return scale * rate / (ch * ch);
    };
    return c;
  }

  static ParamCurve table(std::vector<double> t, std::vector<double> v) {
    auto tab = std::make_shared<TableCurve>(std::move(t), std::move(v));
    ParamCurve c("table", {});
    c.value_ = [tab](double x) { return tab->value(x); };
    c.deriv_ = [tab](double x) { return tab->derivative(x); };
    return c;
  }

  double value(double t) const { return value_(t); }
  double derivative(double t) const { return deriv_(t); }
  const std::string& family() const { return family_; }
  const std::vector<double>& params() const { return params_; }

 private:
  ParamCurve(std::string family, std::vector<double> params)
      : family_(std::move(family)), params_(std::move(params)) {}

  std::string family_;
  std::vector<double> params_;
  std::function<double(double)> value_;
  std::function<double(double)> deriv_;
};

// A damping curve must start at zero, stay inside [0, 1] and leave the
// origin non-decreasingly; sampled over [0, horizon].
inline void validate_damping_curve(const ParamCurve& curve, double horizon,
                                   int samples = 257) {
  if (!(horizon > 0.0) || samples < 2) raise(errc::bad_params, "validate_damping_curve");
  if (std::abs(curve.value(0.0)) > 1e-12)
    raise(errc::curve_out_of_range, "damping curve must vanish at t = 0");
  for (int i = 0; i < samples; ++i) {
    const double t = horizon * i / (samples - 1);
    const double v = curve.value(t);
    if (!(v >= -1e-12 && v <= 1.0 + 1e-12))
      raise(errc::curve_out_of_range,
            "damping curve leaves [0,1] at t=" + std::to_string(t));
  }
  const double h = horizon * 1e-6;
  if ((curve.value(h) - curve.value(0.0)) / h < -1e-9)
    raise(errc::curve_out_of_range, "damping curve decreasing at the origin");
}

inline void validate_probability_curve(const ParamCurve& curve, double horizon,
                                       int samples = 257) {
  if (!(horizon > 0.0) || samples < 2) raise(errc::bad_params, "validate_probability_curve");
  for (int i = 0; i < samples; ++i) {
    const double t = horizon * i / (samples - 1);
    const double v = curve.value(t);
    if (!(v >= -1e-12 && v <= 1.0 + 1e-12))
      raise(errc::curve_out_of_range,
            "probability curve leaves [0,1] at t=" + std::to_string(t));
  }
}

}  // namespace channelscope
