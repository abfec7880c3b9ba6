#include "rmood/envgen.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rmood/error.hpp"

namespace rmood {

void ArProcess::validate() const {
  if (coefs.size() == 1) {
    if (!(std::abs(coefs[0]) < 1.0)) {
      throw ConfigError("AR(1) coefficient must satisfy |phi1| < 1");
    }
  } else if (coefs.size() == 2) {
    const double p1 = coefs[0], p2 = coefs[1];
    if (!(p2 > -1.0 && p2 < 1.0 && p2 + p1 < 1.0 && p2 - p1 < 1.0)) {
      throw ConfigError("AR(2) coefficients lie outside the stationarity triangle");
    }
  } else {
    throw ConfigError("AR order must be 1 or 2, got " + std::to_string(coefs.size()));
  }
  if (!std::isfinite(noise_std) || noise_std < 0.0) {
    throw ConfigError("AR noise_std must be finite and >= 0");
  }
}

std::vector<double> ar_sample(const ArProcess& process, std::size_t length) {
  process.validate();
  Rng rng(process.seed);
  std::vector<double> z(length, 0.0);
  for (std::size_t t = 0; t < length; ++t) {
    double v = process.noise_std * rng.normal();
    for (std::size_t i = 0; i < process.coefs.size() && i < t; ++i) {
      v += process.coefs[i] * z[t - 1 - i];
    }
    z[t] = v;
  }
  return z;
}

double ar_stationary_std(const std::vector<double>& coefs, double noise_std) {
  ArProcess{coefs, noise_std, 0}.validate();
  if (coefs.size() == 1) {
    return noise_std / std::sqrt(1.0 - coefs[0] * coefs[0]);
  }
  const double p1 = coefs[0], p2 = coefs[1];
  const double var = noise_std * noise_std * (1.0 - p2) /
                     ((1.0 + p2) * ((1.0 - p2) * (1.0 - p2) - p1 * p1));
  return std::sqrt(var);
}

ArProcess default_ar_process(std::size_t order) {
  ArProcess p;
  if (order == 1) {
    p.coefs = {0.8};
  } else if (order == 2) {
    p.coefs = {0.5, 0.3};
  } else {
    throw ConfigError("AR order must be 1 or 2");
  }
  p.noise_std = 1.0 / ar_stationary_std(p.coefs, 1.0);
  return p;
}

NoiseMatrix noise_matrix(const ArProcess& process, std::size_t rows, std::size_t length,
                         std::uint64_t seed) {
  NoiseMatrix out;
  out.reserve(rows);
  for (std::size_t n = 0; n < rows; ++n) {
    ArProcess row = process;
    row.seed = derive_seed(seed, n);
    out.push_back(ar_sample(row, length));
  }
  return out;
}

std::string_view to_string(PlantKind kind) {
  return kind == PlantKind::kCartpole ? "cartpole" : "linear";
}

PlantKind parse_plant(std::string_view name) {
  if (name == "cartpole") return PlantKind::kCartpole;
  if (name == "linear") return PlantKind::kLinear;
  throw ConfigError("unknown plant '" + std::string(name) + "'");
}

LinearPlantParams LinearPlantParams::make_default(std::size_t state_dim) {
  LinearPlantParams p;
  p.state_dim = state_dim;
  p.action_dim = state_dim;
  p.a.assign(state_dim * state_dim, 0.0);
  p.b.assign(state_dim * state_dim, 0.0);
  p.k.assign(state_dim * state_dim, 0.0);
  for (std::size_t i = 0; i < state_dim; ++i) {
    p.a[i * state_dim + i] = 0.9;
    if (i + 1 < state_dim) p.a[i * state_dim + i + 1] = 0.2;
    p.b[i * state_dim + i] = 1.0;
    p.k[i * state_dim + i] = 0.3;
  }
  return p;
}

void LinearPlantParams::validate() const {
  if (state_dim == 0 || action_dim == 0) throw ConfigError("linear plant needs N, M >= 1");
  if (a.size() != state_dim * state_dim || b.size() != state_dim * action_dim ||
      k.size() != action_dim * state_dim) {
    throw ConfigError("linear plant matrices do not match state/action dimensions");
  }
  if (!(process_noise_std >= 0.0) || !(init_std >= 0.0)) {
    throw ConfigError("linear plant noise levels must be >= 0");
  }
}

std::size_t PlantConfig::state_dim() const {
  return kind == PlantKind::kCartpole ? 4 : linear.state_dim;
}

std::size_t PlantConfig::action_dim() const {
  return kind == PlantKind::kCartpole ? 1 : linear.action_dim;
}

std::string_view to_string(AnomalyKind kind) {
  switch (kind) {
    case AnomalyKind::kArno:
      return "arno";
    case AnomalyKind::kArns:
      return "arns";
    case AnomalyKind::kActionFactor:
      return "action_factor";
    case AnomalyKind::kActionNoise:
      return "action_noise";
    case AnomalyKind::kActionOffset:
      return "action_offset";
    case AnomalyKind::kBodyMassFactor:
      return "body_mass_factor";
    case AnomalyKind::kForceVector:
      return "force_vector";
    case AnomalyKind::kObservationOffset:
      return "observation_offset";
  }
  return "arno";
}

AnomalyKind parse_anomaly_kind(std::string_view name) {
  for (auto k : {AnomalyKind::kArno, AnomalyKind::kArns, AnomalyKind::kActionFactor,
                 AnomalyKind::kActionNoise, AnomalyKind::kActionOffset,
                 AnomalyKind::kBodyMassFactor, AnomalyKind::kForceVector,
                 AnomalyKind::kObservationOffset}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown anomaly kind '" + std::string(name) + "'");
}

namespace {

void check_broadcast(const std::vector<double>& v, std::size_t dim, std::string_view what) {
  if (v.size() != 1 && v.size() != dim) {
    throw ConfigError(std::string(what) + " must have 1 or " + std::to_string(dim) +
                      " entries, got " + std::to_string(v.size()));
  }
  for (double x : v) {
    if (!std::isfinite(x)) throw ConfigError(std::string(what) + " must be finite");
  }
}

double at(const std::vector<double>& v, std::size_t i) {
  return v.size() == 1 ? v[0] : v[i];
}

}  // namespace

void AnomalySpec::validate(const PlantConfig& plant) const {
  if (onset < 1) throw ConfigError("anomaly onset must be >= 1");
  const std::size_t n = plant.state_dim();
  const std::size_t m = plant.action_dim();
  switch (kind) {
    case AnomalyKind::kArno:
      ArProcess{ar_coefs, 1.0, 0}.validate();
      check_broadcast(amplitude, n, "amplitude");
      break;
    case AnomalyKind::kArns:
      ArProcess{ar_coefs, 1.0, 0}.validate();
      check_broadcast(amplitude, n, "amplitude");
      check_broadcast(action_amplitude, m, "action_amplitude");
      break;
    case AnomalyKind::kActionFactor:
      if (!(factor > 0.0) || !std::isfinite(factor)) {
        throw ConfigError("action factor must be > 0");
      }
      break;
    case AnomalyKind::kActionNoise:
      if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
        throw ConfigError("action noise std must be >= 0");
      }
      break;
    case AnomalyKind::kActionOffset:
      check_broadcast(offset, m, "offset");
      break;
    case AnomalyKind::kBodyMassFactor:
      if (plant.kind != PlantKind::kCartpole) {
        throw ConfigError("body_mass_factor applies to the cartpole plant only");
      }
      if (!(factor > 0.0) || !std::isfinite(factor)) {
        throw ConfigError("body mass factor must be > 0");
      }
      break;
    case AnomalyKind::kForceVector:
      check_broadcast(offset, plant.kind == PlantKind::kCartpole ? m : n, "offset");
      break;
    case AnomalyKind::kObservationOffset:
      check_broadcast(offset, n, "offset");
      break;
  }
}

std::vector<double> inject_arno(const std::vector<double>& state,
                                const std::vector<double>& noise_column,
                                const std::vector<double>& amplitude) {
  std::vector<double> out = state;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += at(amplitude, i) * noise_column[i];
  return out;
}

PerturbedInput inject_arns(const std::vector<double>& state,
                           const std::vector<double>& action,
                           const std::vector<double>& noise_column,
                           const std::vector<double>& amplitude,
                           const std::vector<double>& action_amplitude) {
  PerturbedInput out{state, action};
  const std::size_t n = state.size();
  for (std::size_t i = 0; i < n; ++i) out.state[i] += at(amplitude, i) * noise_column[i];
  for (std::size_t j = 0; j < action.size(); ++j) {
    out.action[j] += at(action_amplitude, j) * noise_column[n + j];
  }
  return out;
}

std::vector<double> apply_semantic_action(const std::vector<double>& action,
                                          const AnomalySpec& spec, Rng& rng) {
  std::vector<double> out = action;
  switch (spec.kind) {
    case AnomalyKind::kActionFactor:
      for (auto& u : out) u *= spec.factor;
      break;
    case AnomalyKind::kActionNoise:
      for (auto& u : out) u += spec.noise_std * rng.normal();
      break;
    case AnomalyKind::kActionOffset:
      for (std::size_t j = 0; j < out.size(); ++j) out[j] += at(spec.offset, j);
      break;
    default:
      break;
  }
  return out;
}

CartpoleParams apply_body_mass(const CartpoleParams& params, const AnomalySpec& spec) {
  CartpoleParams out = params;
  if (spec.kind == AnomalyKind::kBodyMassFactor) {
    out.cart_mass *= spec.factor;
    out.pole_mass *= spec.factor;
  }
  return out;
}

namespace {

std::vector<double> cartpole_step(const std::vector<double>& s, double force,
                                  const CartpoleParams& p) {
  const double x = s[0], v = s[1], th = s[2], w = s[3];
  const double total = p.cart_mass + p.pole_mass;
  const double pml = p.pole_mass * p.half_length;
  const double sin_t = std::sin(th), cos_t = std::cos(th);
  const double temp = (force + pml * w * w * sin_t) / total;
  const double th_acc = (p.gravity * sin_t - cos_t * temp) /
                        (p.half_length * (4.0 / 3.0 - p.pole_mass * cos_t * cos_t / total));
  const double x_acc = temp - pml * th_acc * cos_t / total;
  std::vector<double> next{x + p.dt * v, v + p.dt * x_acc, th + p.dt * w, w + p.dt * th_acc};
  if (std::abs(next[0]) > p.x_limit) {
    next[0] = std::copysign(p.x_limit, next[0]);
    next[1] = 0.0;
  }
  if (std::abs(next[2]) > p.theta_limit) {
    next[2] = std::copysign(p.theta_limit, next[2]);
    next[3] = 0.0;
  }
  return next;
}

std::vector<double> control(const PlantConfig& plant, const std::vector<double>& obs) {
  if (plant.kind == PlantKind::kCartpole) {
    if (plant.controller == ControllerKind::kZero) return {0.0};
    const auto& p = plant.cartpole;
    return {p.k_position * obs[0] + p.k_velocity * obs[1] + p.k_angle * obs[2] +
            p.k_angular_velocity * obs[3]};
  }
  const auto& lp = plant.linear;
  std::vector<double> u(lp.action_dim, 0.0);
  if (plant.controller == ControllerKind::kZero) return u;
  for (std::size_t j = 0; j < lp.action_dim; ++j) {
    for (std::size_t i = 0; i < lp.state_dim; ++i) u[j] -= lp.k[j * lp.state_dim + i] * obs[i];
  }
  return u;
}

}  // namespace

Rollout rollout(const PlantConfig& plant, std::size_t length, std::uint64_t seed,
                const std::optional<AnomalySpec>& spec) {
  if (length < 1) throw ConfigError("episode length must be >= 1");
  if (plant.kind == PlantKind::kLinear) plant.linear.validate();
  if (spec) {
    spec->validate(plant);
    if (spec->onset >= length) {
      throw ConfigError("anomaly onset " + std::to_string(spec->onset) +
                        " is not inside an episode of length " + std::to_string(length));
    }
  }
  const std::size_t n = plant.state_dim();
  const std::size_t m = plant.action_dim();

  Rng clean(seed, 0);
  Rng action_rng(seed, 2);

  std::vector<double> state(n);
  if (plant.initial_state) {
    if (plant.initial_state->size() != n) throw ConfigError("initial_state has wrong length");
    state = *plant.initial_state;
  } else {
    const double init_std = plant.kind == PlantKind::kCartpole ? plant.cartpole.init_std
                                                               : plant.linear.init_std;
    for (auto& v : state) v = init_std * clean.normal();
  }

  NoiseMatrix noise;
  if (spec && (spec->kind == AnomalyKind::kArno || spec->kind == AnomalyKind::kArns)) {
    ArProcess process{spec->ar_coefs, 1.0, 0};
    process.noise_std = 1.0 / ar_stationary_std(process.coefs, 1.0);
    const std::size_t rows = spec->kind == AnomalyKind::kArno ? n : n + m;
    noise = noise_matrix(process, rows, length, derive_seed(seed, 1));
  }
  auto noise_column = [&](std::size_t t) {
    std::vector<double> col(noise.size());
    for (std::size_t r = 0; r < noise.size(); ++r) col[r] = noise[r][t];
    return col;
  };

  CartpoleParams cart = plant.cartpole;
  std::vector<double> obs_data(n * length);
  NoiseMatrix actions(m, std::vector<double>(length));

  for (std::size_t t = 0; t < length; ++t) {
    const bool active = spec && t >= spec->onset;
    std::vector<double> obs = state;
    if (active && spec->kind == AnomalyKind::kArno) {
      obs = inject_arno(state, noise_column(t), spec->amplitude);
    }
    if (active && spec->kind == AnomalyKind::kObservationOffset) {
      for (std::size_t i = 0; i < n; ++i) obs[i] += at(spec->offset, i);
    }
    for (std::size_t i = 0; i < n; ++i) obs_data[i * length + t] = obs[i];

    std::vector<double> u = control(plant, obs);
    std::vector<double> x_in = state;
    std::vector<double> external(plant.kind == PlantKind::kCartpole ? m : n, 0.0);
    if (active) {
      if (spec->kind == AnomalyKind::kArns) {
        auto perturbed = inject_arns(state, u, noise_column(t), spec->amplitude,
                                     spec->action_amplitude);
        x_in = std::move(perturbed.state);
        u = std::move(perturbed.action);
      }
      u = apply_semantic_action(u, *spec, action_rng);
      cart = apply_body_mass(plant.cartpole, *spec);
      if (spec->kind == AnomalyKind::kForceVector) {
        for (std::size_t i = 0; i < external.size(); ++i) external[i] = at(spec->offset, i);
      }
    }
    for (std::size_t j = 0; j < m; ++j) actions[j][t] = u[j];

    if (plant.kind == PlantKind::kCartpole) {
      const double disturbance = plant.cartpole.force_noise_std * clean.normal();
      state = cartpole_step(x_in, u[0] + external[0] + disturbance, cart);
    } else {
      const auto& lp = plant.linear;
      std::vector<double> next(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        double v = 0.0;
        for (std::size_t k = 0; k < n; ++k) v += lp.a[i * n + k] * x_in[k];
        for (std::size_t j = 0; j < m; ++j) v += lp.b[i * m + j] * u[j];
        next[i] = v + external[i] + lp.process_noise_std * clean.normal();
      }
      state = std::move(next);
    }
  }

  std::optional<std::size_t> onset;
  EpisodeMatrix::Meta meta{{"plant", std::string(to_string(plant.kind))},
                           {"seed", std::to_string(seed)}};
  if (spec) {
    onset = spec->onset;
    meta["anomaly"] = std::string(to_string(spec->kind));
    meta["level"] = spec->level;
  }
  return Rollout{EpisodeMatrix(n, length, std::move(obs_data), onset, std::move(meta)),
                 std::move(actions)};
}

EpisodeMatrix simulate(const PlantConfig& plant, std::size_t length, std::uint64_t seed,
                       const std::optional<AnomalySpec>& spec) {
  return rollout(plant, length, seed, spec).observations;
}

}  // namespace rmood
