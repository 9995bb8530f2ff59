#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "channelscope/canon.hpp"
#include "channelscope/witness.hpp"
#include "channelscope/zoo.hpp"

namespace channelscope {

using Json = nlohmann::json;

struct GridSpec {
  double t_min = 0.0;
  double t_max = 5.0;
  int points = 200;
};

// A channel-spec document turned into callable form. `transfer` is total on
// [0, t_max + margin]; `rates` returns the family's presentation-ordered
// decay rates (analytic where closed forms exist, extracted otherwise);
// `generator` is set only for families defined by a closed-form generator.
struct ChannelModel {
  std::string family;
  int dim = 2;
  Json doc;
  std::string hash;
  GridSpec grid;
  int n_rates = 0;
  TransferFn transfer;
  std::function<RealVector(double)> rates;
  std::function<RealMatrix(double)> generator;  // may be empty
  std::optional<Matrix> fixed_point;
  std::shared_ptr<const CachedTrajectory> cache;  // set for generator-native families
};

inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

namespace detail {

inline double get_number(const Json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_number())
    raise(errc::parse_error, "missing numeric field '" + key + "'");
  return j[key].get<double>();
}

inline double get_number_or(const Json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) raise(errc::parse_error, "field '" + key + "' is not a number");
  return j[key].get<double>();
}

inline ParamCurve parse_curve(const Json& j) {
  if (!j.is_object() || !j.contains("family") || !j["family"].is_string())
    raise(errc::parse_error, "curve needs a 'family' string");
  const std::string fam = j["family"].get<std::string>();
  if (fam == "constant") return ParamCurve::constant(get_number(j, "value"));
  if (fam == "exp_rise")
    return ParamCurve::exp_rise(get_number(j, "rate"), get_number_or(j, "scale", 1.0));
  if (fam == "exp_decay")
    return ParamCurve::exp_decay(get_number(j, "rate"), get_number_or(j, "amplitude", 1.0));
  if (fam == "tanh_scaled")
    return ParamCurve::tanh_scaled(get_number(j, "rate"), get_number_or(j, "scale", 1.0));
  if (fam == "table") {
    if (!j.contains("t") || !j.contains("v") || !j["t"].is_array() || !j["v"].is_array())
      raise(errc::parse_error, "table curve needs 't' and 'v' arrays");
    return ParamCurve::table(j["t"].get<std::vector<double>>(),
                             j["v"].get<std::vector<double>>());
  }
  raise(errc::parse_error, "unknown curve family '" + fam + "'");
}

inline GridSpec parse_grid(const Json& doc) {
  GridSpec g;
  if (doc.contains("grid")) {
    const Json& j = doc["grid"];
    g.t_min = get_number_or(j, "t_min", g.t_min);
    g.t_max = get_number_or(j, "t_max", g.t_max);
    const double pts = get_number_or(j, "points", g.points);
    g.points = static_cast<int>(pts);
  }
  if (!(g.t_max > g.t_min) || g.t_min < 0.0 || g.points < 2)
    raise(errc::bad_params, "grid needs 0 <= t_min < t_max and points >= 2");
  return g;
}

inline RealVector ascending_snapshot_rates(const GeneratorSnapshot& gs) {
  return herm_eig(gs.decoherence).values;
}

}  // namespace detail

// Parses the JSON channel-spec document. Fields: "family" (string),
// "params" (object of scalars/arrays), "curves" (object of named curve
// documents), "grid" ({t_min, t_max, points}).
inline ChannelModel load_channel_spec(const Json& doc) {
  if (!doc.is_object() || !doc.contains("family") || !doc["family"].is_string())
    raise(errc::parse_error, "channel spec needs a 'family' string");
  ChannelModel model;
  model.doc = doc;
  model.family = doc["family"].get<std::string>();
  model.hash = fnv1a_hex(doc.dump());
  model.grid = detail::parse_grid(doc);
  const Json params = doc.value("params", Json::object());
  const Json curves = doc.value("curves", Json::object());
  const double horizon = model.grid.t_max * 1.05 + 0.1;

  auto curve_or = [&](const std::string& name, std::optional<ParamCurve> fallback) {
    if (curves.contains(name)) return detail::parse_curve(curves[name]);
    if (!fallback) raise(errc::parse_error, "missing curve '" + name + "'");
    return *fallback;
  };

  if (model.family == "qubit_gad" || model.family == "quasi_enm_gad") {
    model.dim = 2;
    model.n_rates = 2;
    ParamCurve p = ParamCurve::constant(0.0);
    ParamCurve lambda = ParamCurve::constant(0.0);
    if (model.family == "quasi_enm_gad") {
      QuasiEnmParams q{detail::get_number_or(params, "m", 3.0),
                       detail::get_number_or(params, "nu", 1.0),
                       detail::get_number_or(params, "n", 2.0)};
      p = quasi_enm_p_curve(q);
      lambda = quasi_enm_lambda_curve(q);
    } else {
      std::optional<ParamCurve> p_fallback;
      if (params.contains("p")) p_fallback = ParamCurve::constant(detail::get_number(params, "p"));
      p = curve_or("p", p_fallback.has_value() ? p_fallback
                                               : std::optional<ParamCurve>(ParamCurve::constant(0.0)));
      lambda = curve_or("lambda", std::nullopt);
    }
    validate_damping_curve(lambda, horizon);
    validate_probability_curve(p, horizon);
    model.transfer = [p, lambda](double t) {
      return kraus_to_transfer(qubit_gad(p.value(t), lambda.value(t)));
    };
    model.rates = [p, lambda](double t) { return rates_qubit_gad(p, lambda, t); };
    model.generator = gad_generator(p, lambda);
    if (p.family() == "constant") model.fixed_point = gad_fixed_point(p.value(0.0));
    return model;
  }

  if (model.family == "qudit_gad") {
    const int d = static_cast<int>(detail::get_number_or(params, "dim", 3.0));
    if (d < 2) raise(errc::bad_dimension, "qudit_gad: dim >= 2");
    if (!params.contains("p") || !params["p"].is_array())
      raise(errc::parse_error, "qudit_gad needs a 'p' weight array");
    const auto weights = params["p"].get<std::vector<double>>();
    if (static_cast<int>(weights.size()) != d)
      raise(errc::dimension_mismatch, "qudit_gad: weight count != dim");
    RealVector p(d);
    for (int i = 0; i < d; ++i) p(i) = weights[i];
    require_simplex(p);
    ParamCurve lambda = curve_or("lambda", std::nullopt);
    validate_damping_curve(lambda, horizon);
    model.dim = d;
    model.n_rates = d * d - 1;
    model.transfer = [p, lambda](double t) {
      return kraus_to_transfer(qudit_gad(p, lambda.value(t)));
    };
    const TransferFn traj = model.transfer;
    model.rates = [traj, d](double t) {
      return canonical_rates(snapshot_from_trajectory(traj, t, d)).rates;
    };
    model.fixed_point = gad_fixed_point(p);
    return model;
  }

  if (model.family == "pauli_enm") {
    const double c = detail::get_number_or(params, "c", 1.0);
    if (!(c >= 1.0)) raise(errc::bad_rate, "pauli_enm: c < 1");
    model.dim = 2;
    model.n_rates = 3;
    model.transfer = [c](double t) { return kraus_to_transfer(pauli_enm(c, t)); };
    model.rates = [c](double t) {
      RealVector g(3);
      g << 0.5 * c, 0.5 * c, -0.5 * c * std::tanh(t);
      return g;
    };
    model.generator = pauli_enm_generator(c);
    model.fixed_point = Matrix::Identity(2, 2) / 2.0;
    return model;
  }

  if (model.family == "nonunital_enm" || model.family == "phase_covariant") {
    model.dim = 2;
    model.n_rates = 3;
    std::function<GeneratorSnapshot(double)> snap;
    if (model.family == "nonunital_enm") {
      const double gamma = detail::get_number_or(params, "gamma", 1.0);
      model.generator = nonunital_enm_generator(gamma);
      snap = [gamma](double t) { return nonunital_enm_snapshot(gamma, t); };
    } else {
      const double gamma = detail::get_number_or(params, "gamma", 1.0);
      ParamCurve gz = curve_or("gamma_z",
                               std::optional<ParamCurve>(ParamCurve::tanh_scaled(1.0, -0.5)));
      model.generator = phase_covariant_generator(gamma, gz);
      snap = [gamma, gz](double t) {
        return phase_covariant_snapshot(gamma, gz.value(t), t);
      };
    }
    auto cache = std::make_shared<const CachedTrajectory>(model.generator, 2,
                                                          horizon + default_tolerances().intermediate_epsilon);
    model.cache = cache;
    model.transfer = [cache](double t) { return cache->at(t); };
    model.rates = [snap](double t) { return detail::ascending_snapshot_rates(snap(t)); };
    return model;
  }

  if (model.family == "ququart_enm") {
    const double c = detail::get_number_or(params, "c", 1.0);
    const double nu = detail::get_number_or(params, "nu", 1.0);
    if (!(nu > 0.0)) raise(errc::bad_params, "ququart_enm: nu <= 0");
    model.dim = 4;
    model.n_rates = 15;
    model.transfer = [c, nu](double t) { return kraus_to_transfer(ququart_enm(c, nu, t)); };
    const TransferFn traj = model.transfer;
    model.rates = [traj](double t) {
      return canonical_rates(snapshot_from_trajectory(traj, t, 4)).rates;
    };
    return model;
  }

  raise(errc::parse_error, "unknown channel family '" + model.family + "'");
}

inline ChannelModel load_channel_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(errc::parse_error, "cannot open spec file " + path);
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const std::exception& e) {
    raise(errc::parse_error, std::string("invalid JSON: ") + e.what());
  }
  return load_channel_spec(doc);
}

}  // namespace channelscope
