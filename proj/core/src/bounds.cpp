#include "shsnet/bounds.hpp"

#include "shsnet/certify.hpp"
#include "shsnet/markov.hpp"
#include "shsnet/sim.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace shsnet {

ErrorBoundCurve bound_curve(const SimulationCertificate& cert, const Vector& a,
                            const Vector& ahat, const Vector& p0, double uhat_bound,
                            const Vector& time_grid) {
  if (!(cert.kappa > 0.0)) {
    throw std::invalid_argument("bound_curve: kappa must be positive");
  }
  if (p0.size() != cert.mode_count()) {
    throw std::invalid_argument("bound_curve: p0 must have one entry per mode");
  }
  double v0 = 0.0;
  for (Index j = 0; j < p0.size(); ++j) {
    if (p0[j] > 0.0) v0 += p0[j] * cert.evaluate(a, ahat, j);
  }
  // psi_ext == 0: the external-input term contributes nothing
  (void)uhat_bound;

  ErrorBoundCurve curve;
  curve.times = time_grid;
  curve.kappa = cert.kappa;
  curve.alpha_coeff = cert.alpha_coeff;
  curve.initial_v = v0;
  curve.values.resize(time_grid.size());
  for (Index k = 0; k < time_grid.size(); ++k) {
    curve.values[k] = (1.0 / cert.alpha_coeff) * std::exp(-cert.kappa * time_grid[k]) * v0;
  }
  return curve;
}

EmpiricalCurve monte_carlo_error(const Scenario& scenario, int runs,
                                 const Vector& time_grid, RngStream root) {
  if (runs < 2) throw std::invalid_argument("monte_carlo_error: need at least 2 runs");
  const double dt = scenario.simulation.dt;
  const double horizon = time_grid[time_grid.size() - 1];

  // map grid times to base-step indices
  std::vector<Index> rows(static_cast<std::size_t>(time_grid.size()));
  for (Index k = 0; k < time_grid.size(); ++k) {
    const double steps = time_grid[k] / dt;
    const auto r = static_cast<Index>(std::llround(steps));
    if (std::abs(steps - static_cast<double>(r)) > 1e-6) {
      throw std::invalid_argument("monte_carlo_error: grid time not on the dt grid");
    }
    rows[static_cast<std::size_t>(k)] = r;
  }

  const Vector& a = scenario.simulation.bound.x0;
  const Vector& ahat = scenario.simulation.bound.xhat0;
  const Matrix lift = scenario.state_lift();
  const double gain = scenario.interface_gain;
  const Controller uhat = zero_controller(scenario.abstraction.input_dim());
  const InterfaceFn iface = [&](const Vector& x, const Vector& xh, const Vector& uh) {
    return (-gain * (x - lift * xh) + lift * uh).eval();
  };
  const RecordOptions light{.states = false, .internal_outputs = false};

  Matrix samples(time_grid.size(), runs);
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::string failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    while (!failed.load()) {
      const int r = next.fetch_add(1);
      if (r >= runs) break;
      RngStream stream = root.derive("mc-run", static_cast<std::uint64_t>(r));
      RngStream switch_stream = stream.derive("switch");
      const SwitchSignal signal =
          sample_switch_signal(scenario.concrete.chain, 0, horizon, switch_stream);
      try {
        auto [tc, ta] = simulate_coupled(scenario.concrete, scenario.abstraction, iface,
                                         uhat, a, ahat, signal, dt, horizon,
                                         stream.derive("coupled"), light);
        for (Index k = 0; k < time_grid.size(); ++k) {
          const Index row = rows[static_cast<std::size_t>(k)];
          samples(k, r) = (tc.outputs.row(row) - ta.outputs.row(row)).squaredNorm();
        }
      } catch (const SimulationAbort& abort) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        failed.store(true);
        failure = "run " + std::to_string(r) + ": " + abort.what();
      }
    }
  };

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < std::min<unsigned>(hw, static_cast<unsigned>(runs)); ++t) {
    pool.emplace_back(worker);
  }
  for (auto& t : pool) t.join();
  if (failed.load()) throw std::runtime_error("monte_carlo_error: " + failure);

  EmpiricalCurve curve;
  curve.times = time_grid;
  curve.runs = runs;
  curve.mean = samples.rowwise().mean();
  curve.std_error.resize(time_grid.size());
  for (Index k = 0; k < time_grid.size(); ++k) {
    const double m = curve.mean[k];
    double var = 0.0;
    for (int r = 0; r < runs; ++r) var += (samples(k, r) - m) * (samples(k, r) - m);
    var /= static_cast<double>(runs - 1);
    curve.std_error[k] = std::sqrt(var / static_cast<double>(runs));
  }
  curve.per_run = std::move(samples);
  return curve;
}

BoundViolationReport compare(const EmpiricalCurve& empirical, const ErrorBoundCurve& bound) {
  if (empirical.times.size() != bound.times.size()) {
    throw std::invalid_argument("compare: curves must share the time grid");
  }
  BoundViolationReport report;
  for (Index k = 0; k < empirical.times.size(); ++k) {
    if (empirical.mean[k] - 2.0 * empirical.std_error[k] > bound.values[k]) {
      report.indices.push_back(k);
    }
  }
  return report;
}

std::string BoundViolationReport::text(const EmpiricalCurve& emp,
                                       const ErrorBoundCurve& bound) const {
  if (indices.empty()) return "empirical curve consistent with the bound\n";
  std::ostringstream os;
  os << indices.size() << " grid time(s) violate the bound:\n";
  for (Index k : indices) {
    os << "  t = " << emp.times[k] << ": mean - 2 SE = "
       << emp.mean[k] - 2.0 * emp.std_error[k] << " > bound = " << bound.values[k] << "\n";
  }
  return os.str();
}

void write_error_curves_csv(std::ostream& os, const EmpiricalCurve& empirical,
                            const ErrorBoundCurve& bound) {
  os << "time,empirical_mean,std_error,bound\n";
  for (Index k = 0; k < empirical.times.size(); ++k) {
    os << empirical.times[k] << "," << empirical.mean[k] << "," << empirical.std_error[k]
       << "," << bound.values[k] << "\n";
  }
}

}  // namespace shsnet
