#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rmood/core.hpp"
#include "rmood/rng.hpp"

namespace rmood {

/// z_t = sum_i coefs[i] z_{t-1-i} + e_t, e_t ~ N(0, noise_std^2), zero history.
struct ArProcess {
  std::vector<double> coefs{0.8};
  double noise_std = 1.0;
  std::uint64_t seed = 0;

  /// Order 1 or 2 and stationary; throws ConfigError otherwise.
  void validate() const;
};

std::vector<double> ar_sample(const ArProcess& process, std::size_t length);

/// Marginal standard deviation of the stationary process.
double ar_stationary_std(const std::vector<double>& coefs, double noise_std);

/// Default coefficients: AR(1) 0.8, AR(2) (0.5, 0.3); innovation std chosen
/// so the stationary marginal std is 1.
ArProcess default_ar_process(std::size_t order);

using NoiseMatrix = std::vector<std::vector<double>>;

/// Row n is ar_sample with seed derive_seed(seed, n).
NoiseMatrix noise_matrix(const ArProcess& process, std::size_t rows, std::size_t length,
                         std::uint64_t seed);

enum class PlantKind : std::uint8_t { kCartpole, kLinear };
enum class ControllerKind : std::uint8_t { kScripted, kZero };

std::string_view to_string(PlantKind kind);
PlantKind parse_plant(std::string_view name);

/// Classic cart-pole, explicit Euler. Scripted control is the PD law
/// F = k_position x + k_velocity v + k_angle theta + k_angular_velocity omega.
/// States leaving |x| <= 2.4 or |theta| <= 0.21 are clamped to the boundary
/// with the matching velocity zeroed, so episodes always run to full length.
struct CartpoleParams {
  double cart_mass = 1.0;        // kg
  double pole_mass = 0.1;        // kg
  double half_length = 0.5;      // m
  double gravity = 9.8;          // m/s^2
  double dt = 0.02;              // s
  double x_limit = 2.4;          // m
  double theta_limit = 0.21;     // rad
  double k_position = 1.0;
  double k_velocity = 2.0;
  double k_angle = 30.0;
  double k_angular_velocity = 5.0;
  double force_noise_std = 1.0;  // N, exogenous disturbance every step
  double init_std = 0.05;        // per state component
};

/// x_{t+1} = A x_t + B u_t + w_t, w_t ~ N(0, process_noise_std^2 I), with
/// scripted control u_t = -K x_t. Matrices are row-major.
struct LinearPlantParams {
  std::size_t state_dim = 6;
  std::size_t action_dim = 6;
  std::vector<double> a;  // state_dim x state_dim
  std::vector<double> b;  // state_dim x action_dim
  std::vector<double> k;  // action_dim x state_dim
  double process_noise_std = 1.0;
  double init_std = 1.0;

  /// A = 0.9 I + 0.2 (superdiagonal), B = I, K = 0.3 I: the closed loop is
  /// upper triangular with every eigenvalue 0.6.
  static LinearPlantParams make_default(std::size_t state_dim);
  void validate() const;
};

struct PlantConfig {
  PlantKind kind = PlantKind::kCartpole;
  ControllerKind controller = ControllerKind::kScripted;
  CartpoleParams cartpole{};
  LinearPlantParams linear = LinearPlantParams::make_default(6);
  // Replaces the random initial state when set; length must be state_dim().
  std::optional<std::vector<double>> initial_state;

  std::size_t state_dim() const;
  std::size_t action_dim() const;
};

enum class AnomalyKind : std::uint8_t {
  kArno,
  kArns,
  kActionFactor,
  kActionNoise,
  kActionOffset,
  kBodyMassFactor,
  kForceVector,
  kObservationOffset,
};

std::string_view to_string(AnomalyKind kind);
AnomalyKind parse_anomaly_kind(std::string_view name);

/// An anomaly applied from `onset` to the end of the episode. Which fields
/// matter depends on the kind:
///   arno                ar_coefs, amplitude (per state dimension)
///   arns                ar_coefs, amplitude, action_amplitude
///   action_factor       factor          u <- factor * u
///   action_noise        noise_std       u <- u + N(0, noise_std^2)
///   action_offset       offset          u <- u + offset
///   body_mass_factor    factor          cart and pole masses scaled (cartpole)
///   force_vector        offset          constant force each step (per action
///                                       dimension on cartpole, per state
///                                       dimension on the linear plant)
///   observation_offset  offset          observation <- state + offset
/// One-element `amplitude`, `action_amplitude` or `offset` vectors broadcast.
struct AnomalySpec {
  AnomalyKind kind = AnomalyKind::kArno;
  std::string level = "medium";
  std::size_t onset = 1;
  std::vector<double> ar_coefs{0.8};
  std::vector<double> amplitude{1.0};
  std::vector<double> action_amplitude{1.0};
  double factor = 1.0;
  double noise_std = 0.0;
  std::vector<double> offset{0.0};

  void validate(const PlantConfig& plant) const;
};

struct Rollout {
  EpisodeMatrix observations;
  NoiseMatrix actions;  // action_dim rows x T columns, as applied to the plant
};

/// Simulates T steps. Random streams, all derived from `seed`:
///   Rng(seed, 0)   initial state, then per-step process noise (clean dynamics)
///   derive_seed(seed, 1)  noise_matrix of the ARNO/ARNS anomaly; ARNS uses
///                  rows [0, state_dim) for the state and the rest for actions
///   Rng(seed, 2)   action_noise draws
/// Column t of the noise matrix is used at step t >= onset. The clean stream
/// is consumed identically with or without an anomaly, so every column before
/// the onset matches the clean episode bit for bit.
Rollout rollout(const PlantConfig& plant, std::size_t length, std::uint64_t seed,
                const std::optional<AnomalySpec>& spec = std::nullopt);

EpisodeMatrix simulate(const PlantConfig& plant, std::size_t length, std::uint64_t seed,
                       const std::optional<AnomalySpec>& spec = std::nullopt);

/// ARNO: observation = true state + amplitude-scaled noise column.
std::vector<double> inject_arno(const std::vector<double>& state,
                                const std::vector<double>& noise_column,
                                const std::vector<double>& amplitude);

struct PerturbedInput {
  std::vector<double> state;
  std::vector<double> action;
};

/// ARNS: state entering the transition and the applied action both receive
/// additive noise; noise_column holds state rows followed by action rows.
PerturbedInput inject_arns(const std::vector<double>& state,
                           const std::vector<double>& action,
                           const std::vector<double>& noise_column,
                           const std::vector<double>& amplitude,
                           const std::vector<double>& action_amplitude);

/// Applies the action_factor, action_noise and action_offset anomalies to an
/// action; action_noise draws from `rng`. Other kinds return it unchanged.
std::vector<double> apply_semantic_action(const std::vector<double>& action,
                                          const AnomalySpec& spec, Rng& rng);

/// Plant parameters after a body_mass_factor anomaly.
CartpoleParams apply_body_mass(const CartpoleParams& params, const AnomalySpec& spec);

}  // namespace rmood
