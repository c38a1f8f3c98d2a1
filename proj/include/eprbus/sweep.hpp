#pragma once

// Independent sweep points evaluated serially or with OpenMP. Both kernels
// give identical results: each point owns a random stream seeded from
// (seed, index) and results are stored by index.

#include "eprbus/gaussian_state.hpp"
#include "eprbus/langevin_oracle.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace eprbus {

struct PointResult {
  double delta_predicted = 0.0;
  double delta_achieved = 0.0;
  bool entangled = false;
  std::optional<double> fidelity;
  std::vector<std::string> warnings;
};

enum class PointError { None, Validation, Numerical };

struct PointOutcome {
  std::optional<PointResult> result;
  PointError error = PointError::None;
  std::string message;
};

using PointEvaluator = std::function<PointResult(std::size_t index, std::mt19937_64& rng)>;

/// Random stream for sweep point `index`.
std::mt19937_64 point_rng(std::uint64_t seed, std::size_t index);

/// One point with validation and numerical errors captured in the outcome.
PointOutcome evaluate_point(const PointEvaluator& evaluate, std::size_t index, std::uint64_t seed);

std::vector<PointOutcome> sweep_serial(std::size_t count, const PointEvaluator& evaluate,
                                       std::uint64_t seed);
/// threads <= 0 uses the OpenMP default.
std::vector<PointOutcome> sweep_parallel(std::size_t count, const PointEvaluator& evaluate,
                                         std::uint64_t seed, int threads = 0);

/// Oracle EPR variance for each parameter set.
std::vector<double> oracle_sweep_serial(const std::vector<ProtocolParams>& points,
                                        const ModelOptions& options = {});
std::vector<double> oracle_sweep_parallel(const std::vector<ProtocolParams>& points,
                                          const ModelOptions& options = {}, int threads = 0);

}  // namespace eprbus
