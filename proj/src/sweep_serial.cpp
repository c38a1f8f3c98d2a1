#include "eprbus/errors.hpp"
#include "eprbus/sweep.hpp"

namespace eprbus {

std::mt19937_64 point_rng(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

PointOutcome evaluate_point(const PointEvaluator& evaluate, std::size_t index, std::uint64_t seed) {
  PointOutcome out;
  try {
    auto rng = point_rng(seed, index);
    out.result = evaluate(index, rng);
  } catch (const ValidationError& e) {
    out.error = PointError::Validation;
    out.message = e.what();
  } catch (const NumericalError& e) {
    out.error = PointError::Numerical;
    out.message = e.what();
  } catch (const std::invalid_argument& e) {
    out.error = PointError::Validation;
    out.message = e.what();
  }
  return out;
}

std::vector<PointOutcome> sweep_serial(std::size_t count, const PointEvaluator& evaluate,
                                       std::uint64_t seed) {
  std::vector<PointOutcome> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = evaluate_point(evaluate, i, seed);
  return out;
}

std::vector<double> oracle_sweep_serial(const std::vector<ProtocolParams>& points,
                                        const ModelOptions& options) {
  std::vector<double> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    out[i] = oracle_epr_after_measurement(build_model(points[i], options)).delta_epr;
  }
  return out;
}

}  // namespace eprbus
