#include "eprbus/errors.hpp"
#include "eprbus/sweep.hpp"

#include <omp.h>

#include <exception>

namespace eprbus {

std::vector<PointOutcome> sweep_parallel(std::size_t count, const PointEvaluator& evaluate,
                                         std::uint64_t seed, int threads) {
  std::vector<PointOutcome> out(count);
  const int n_threads = threads > 0 ? threads : omp_get_max_threads();
  const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic) num_threads(n_threads)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = evaluate_point(evaluate, static_cast<std::size_t>(i), seed);
  }
  return out;
}

std::vector<double> oracle_sweep_parallel(const std::vector<ProtocolParams>& points,
                                          const ModelOptions& options, int threads) {
  std::vector<double> out(points.size());
  std::vector<std::exception_ptr> errors(points.size());
  const int n_threads = threads > 0 ? threads : omp_get_max_threads();
  const auto n = static_cast<std::ptrdiff_t>(points.size());
#pragma omp parallel for schedule(dynamic) num_threads(n_threads)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      out[k] = oracle_epr_after_measurement(build_model(points[k], options)).delta_epr;
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  // Rethrow the first failure in index order, as the serial loop would.
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace eprbus
