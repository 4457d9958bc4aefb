#include "shsnet/certify.hpp"

#include "shsnet/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace shsnet {

GeneratorResult lgen_quadratic(const Matrix& Qs, const Vector& drift,
                               const std::vector<Vector>& diffusion_columns,
                               const std::vector<Vector>& jump_displacements,
                               const Vector& rates, const Vector& point) {
  if (Qs.rows() != point.size() || Qs.cols() != point.size() ||
      drift.size() != point.size()) {
    throw std::invalid_argument("lgen_quadratic: dimension mismatch");
  }
  if (rates.size() != static_cast<Index>(jump_displacements.size())) {
    throw std::invalid_argument("lgen_quadratic: one rate per jump displacement");
  }
  GeneratorResult out;
  const Vector Qz = Qs * point;
  out.drift_term = 2.0 * drift.dot(Qz);
  for (const auto& col : diffusion_columns) {
    out.diffusion_term += col.dot(Qs * col);
  }
  const double s0 = point.dot(Qz);
  for (std::size_t k = 0; k < jump_displacements.size(); ++k) {
    const Vector zk = point + jump_displacements[k];
    out.jump_term += rates[static_cast<Index>(k)] * (zk.dot(Qs * zk) - s0);
  }
  out.value = out.drift_term + out.diffusion_term + out.jump_term;
  return out;
}

GeneratorResult JointLinearSde::generator(const Matrix& Qs, const Vector& z) const {
  std::vector<Vector> cols, disp;
  cols.reserve(G.size());
  disp.reserve(R.size());
  for (const auto& Gk : G) cols.push_back(Gk * z);
  for (const auto& Rk : R) disp.push_back(Rk * z);
  return lgen_quadratic(Qs, F * z + g, cols, disp, rates, z);
}

// ---------------------------------------------------------------------------
// SubsystemPair
// ---------------------------------------------------------------------------

SubsystemPair::SubsystemPair(LinearSubsystem concrete, LinearSubsystem abstraction,
                             PairInterface iface)
    : concrete_(std::move(concrete)),
      abstraction_(std::move(abstraction)),
      iface_(std::move(iface)) {
  if (concrete_.brownian_channels() != abstraction_.brownian_channels() ||
      concrete_.poisson_channels() != abstraction_.poisson_channels()) {
    throw std::invalid_argument(
        "subsystem pair must share noise channels (equal channel counts)");
  }
  if (concrete_.rates != abstraction_.rates) {
    throw std::invalid_argument("subsystem pair must share jump rates");
  }
  if (iface_.state_lift.rows() != concrete_.n ||
      iface_.state_lift.cols() != abstraction_.n) {
    throw std::invalid_argument("interface state lift has wrong dimensions");
  }
  const Index nc = concrete_.n;
  const Index na = abstraction_.n;
  feedback_drift_ = Matrix::Zero(nc + na, nc + na);
  feedback_drift_.topLeftCorner(nc, nc) = concrete_.A - iface_.gain * concrete_.B;
  feedback_drift_.topRightCorner(nc, na) =
      iface_.gain * concrete_.B * iface_.state_lift;
  feedback_drift_.bottomRightCorner(na, na) = abstraction_.A;
}

JointLinearSde SubsystemPair::sde(const Vector& w, const Vector& what,
                                  const Vector& uhat) const {
  const Index nc = concrete_.n;
  const Index na = abstraction_.n;
  JointLinearSde sde;
  sde.F = feedback_drift_;
  sde.g = Vector::Zero(nc + na);
  sde.g.head(nc) = concrete_.B * (iface_.input_lift * uhat) + concrete_.D * w;
  sde.g.tail(na) = abstraction_.B * uhat + abstraction_.D * what;
  for (Index k = 0; k < concrete_.brownian_channels(); ++k) {
    Matrix Gk = Matrix::Zero(nc + na, nc + na);
    Gk.topLeftCorner(nc, nc) = concrete_.diffusion[static_cast<std::size_t>(k)];
    Gk.bottomRightCorner(na, na) = abstraction_.diffusion[static_cast<std::size_t>(k)];
    sde.G.push_back(std::move(Gk));
  }
  for (Index k = 0; k < concrete_.poisson_channels(); ++k) {
    Matrix Rk = Matrix::Zero(nc + na, nc + na);
    Rk.topLeftCorner(nc, nc) = concrete_.resets[static_cast<std::size_t>(k)];
    Rk.bottomRightCorner(na, na) = abstraction_.resets[static_cast<std::size_t>(k)];
    sde.R.push_back(std::move(Rk));
  }
  sde.rates = concrete_.rates;
  return sde;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kWitnessCap = 10;

void note_sample(CheckReport& report, double margin, double tol,
                 const std::function<Witness()>& witness) {
  ++report.samples;
  if (margin < report.worst_margin) report.worst_margin = margin;
  if (margin < -tol) {
    ++report.violations;
    if (report.witnesses.size() < kWitnessCap) report.witnesses.push_back(witness());
  }
}

}  // namespace

std::string CheckReport::text() const {
  std::ostringstream os;
  os << name << ": " << (pass() ? "pass" : "FAIL") << ", samples " << samples
     << ", violations " << violations << ", worst margin " << worst_margin << "\n";
  for (const auto& w : witnesses) {
    os << "  witness margin " << w.margin;
    if (w.mode >= 0) os << " (mode " << w.mode + 1 << ")";
    if (w.x.size() > 0 && w.x.size() <= 8) os << " x = [" << w.x.transpose() << "]";
    if (w.xhat.size() > 0 && w.xhat.size() <= 8)
      os << " xhat = [" << w.xhat.transpose() << "]";
    os << "\n";
  }
  return os.str();
}

Vector sample_box(Index dim, double radius, RngStream& rng) {
  Vector v(dim);
  for (Index i = 0; i < dim; ++i) v[i] = rng.uniform(-radius, radius);
  return v;
}

CheckReport check_storage_inequality(const StorageCertificate& cert,
                                     const LinearSubsystem& concrete,
                                     const LinearSubsystem& abstraction,
                                     const PairInterface& iface, const CheckOptions& opts,
                                     RngStream rng) {
  SubsystemPair pair(concrete, abstraction, iface);
  const Matrix X = cert.x_matrix();

  CheckReport report;
  report.name = "storage-inequality";
  report.worst_margin = std::numeric_limits<double>::infinity();

  const Index nc = concrete.n, na = abstraction.n;
  std::vector<Vector> cols(static_cast<std::size_t>(concrete.brownian_channels()));
  std::vector<Vector> disp(static_cast<std::size_t>(concrete.poisson_channels()));
  Vector joint(nc + na);
  Vector supply(cert.W.rows() + concrete.q2);

  for (long s = 0; s < opts.samples; ++s) {
    const Vector x = sample_box(nc, opts.radius, rng);
    const Vector xhat = sample_box(na, opts.radius, rng);
    const Vector uhat = sample_box(abstraction.m, opts.radius, rng);
    const Vector w = sample_box(concrete.p, opts.radius, rng);
    const Vector what = sample_box(abstraction.p, opts.radius, rng);

    const Vector u = iface.apply(x, xhat, uhat);
    joint << x, xhat;
    Vector drift(nc + na);
    drift.head(nc) = concrete.A * x + concrete.B * u + concrete.D * w;
    drift.tail(na) = abstraction.A * xhat + abstraction.B * uhat + abstraction.D * what;
    for (Index k = 0; k < concrete.brownian_channels(); ++k) {
      Vector col(nc + na);
      col.head(nc) = concrete.diffusion[static_cast<std::size_t>(k)] * x;
      col.tail(na) = abstraction.diffusion[static_cast<std::size_t>(k)] * xhat;
      cols[static_cast<std::size_t>(k)] = std::move(col);
    }
    for (Index k = 0; k < concrete.poisson_channels(); ++k) {
      Vector d(nc + na);
      d.head(nc) = concrete.resets[static_cast<std::size_t>(k)] * x;
      d.tail(na) = abstraction.resets[static_cast<std::size_t>(k)] * xhat;
      disp[static_cast<std::size_t>(k)] = std::move(d);
    }
    const GeneratorResult gen =
        lgen_quadratic(cert.Qs, drift, cols, disp, concrete.rates, joint);

    const double value = cert.evaluate(x, xhat);
    supply.head(cert.W.rows()) = cert.W * w - cert.What * what;
    supply.tail(concrete.q2) = concrete.C2 * x - cert.H * (abstraction.C2 * xhat);
    const double rhs = -cert.kappa * value + supply.dot(X * supply);  // psi_ext == 0
    const double margin = rhs - gen.value;
    note_sample(report, margin, opts.tol, [&] {
      return Witness{x, xhat, uhat, w, what, -1, margin};
    });
  }
  return report;
}

CheckReport check_alpha_bound(const StorageCertificate& cert,
                              const LinearSubsystem& concrete,
                              const LinearSubsystem& abstraction,
                              const CheckOptions& opts, RngStream rng) {
  CheckReport report;
  report.name = "alpha-bound";
  report.worst_margin = std::numeric_limits<double>::infinity();
  for (long s = 0; s < opts.samples; ++s) {
    const Vector x = sample_box(concrete.n, opts.radius, rng);
    const Vector xhat = sample_box(abstraction.n, opts.radius, rng);
    const double gap = (concrete.C1 * x - abstraction.C1 * xhat).squaredNorm();
    const double margin = cert.evaluate(x, xhat) - cert.alpha_coeff * gap;
    note_sample(report, margin, opts.tol, [&] {
      return Witness{x, xhat, Vector(), Vector(), Vector(), -1, margin};
    });
  }
  return report;
}

namespace {

// Stacked diffusion column / jump displacement of a network for one channel
// group, evaluated at x.
Vector group_diffusion_column(const SwitchedNetwork& net, const ChannelLayout& layout,
                              Index group, const Vector& x) {
  Vector col = Vector::Zero(net.state_dim());
  Index off = 0;
  for (std::size_t i = 0; i < net.subsystems.size(); ++i) {
    const auto& s = net.subsystems[i];
    for (Index k = 0; k < s.brownian_channels(); ++k) {
      if (layout.brownian_group(static_cast<Index>(i), k) == group) {
        col.segment(off, s.n) =
            s.diffusion[static_cast<std::size_t>(k)] * x.segment(off, s.n);
      }
    }
    off += s.n;
  }
  return col;
}

Vector group_jump_displacement(const SwitchedNetwork& net, const ChannelLayout& layout,
                               Index group, const Vector& x) {
  Vector d = Vector::Zero(net.state_dim());
  Index off = 0;
  for (std::size_t i = 0; i < net.subsystems.size(); ++i) {
    const auto& s = net.subsystems[i];
    for (Index k = 0; k < s.poisson_channels(); ++k) {
      if (layout.poisson_group(static_cast<Index>(i), k) == group) {
        d.segment(off, s.n) = s.resets[static_cast<std::size_t>(k)] * x.segment(off, s.n);
      }
    }
    off += s.n;
  }
  return d;
}

}  // namespace

namespace {

// precomputed joint network data for one mode-j margin evaluation
struct NetworkPairEvaluator {
  const SwitchedNetwork& concrete;
  const SwitchedNetwork& abstraction;
  ChannelLayout layout_c, layout_a;
  Matrix Bc, Bh;
  std::vector<Matrix> Fc, Fh;  // per mode

  NetworkPairEvaluator(const SwitchedNetwork& c, const SwitchedNetwork& a)
      : concrete(c),
        abstraction(a),
        layout_c(ChannelLayout::of(c)),
        layout_a(ChannelLayout::of(a)),
        Bc(c.input_matrix()),
        Bh(a.input_matrix()) {
    ChannelLayout::require_shared(layout_c, layout_a);
    if (!c.drift_overrides.empty() || !a.drift_overrides.empty()) {
      throw std::invalid_argument(
          "certification requires linear dynamics; networks carrying drift "
          "overrides are simulation-only");
    }
    for (Index j = 0; j < c.chain.mode_count(); ++j) {
      Fc.push_back(c.closed_drift_matrix(j));
      Fh.push_back(a.closed_drift_matrix(j));
    }
  }

  double margin(const SimulationCertificate& cert, const PairInterface& iface,
                const Vector& x, const Vector& xhat, const Vector& uhat,
                Index mode) const {
    const Index n = concrete.state_dim();
    const Index nh = abstraction.state_dim();
    const Vector u = iface.apply(x, xhat, uhat);
    Vector joint(n + nh);
    joint << x, xhat;
    Vector drift(n + nh);
    drift.head(n) = Fc[static_cast<std::size_t>(mode)] * x + Bc * u;
    drift.tail(nh) = Fh[static_cast<std::size_t>(mode)] * xhat + Bh * uhat;

    std::vector<Vector> cols, disp;
    for (Index g = 0; g < layout_c.brownian_groups; ++g) {
      Vector col(n + nh);
      col.head(n) = group_diffusion_column(concrete, layout_c, g, x);
      col.tail(nh) = group_diffusion_column(abstraction, layout_a, g, xhat);
      cols.push_back(std::move(col));
    }
    for (Index g = 0; g < layout_c.poisson_groups; ++g) {
      Vector d(n + nh);
      d.head(n) = group_jump_displacement(concrete, layout_c, g, x);
      d.tail(nh) = group_jump_displacement(abstraction, layout_a, g, xhat);
      disp.push_back(std::move(d));
    }
    const GeneratorResult gen =
        lgen_quadratic(cert.Qv[static_cast<std::size_t>(mode)], drift, cols, disp,
                       layout_c.group_rates, joint);
    const double value = cert.evaluate(x, xhat, mode);
    return -cert.kappa * value - gen.value;  // psi_ext == 0
  }
};

}  // namespace

double simulation_margin_at(const SimulationCertificate& cert,
                            const SwitchedNetwork& concrete,
                            const SwitchedNetwork& abstraction,
                            const PairInterface& network_interface, const Vector& x,
                            const Vector& xhat, const Vector& uhat, Index mode) {
  const NetworkPairEvaluator eval(concrete, abstraction);
  return eval.margin(cert, network_interface, x, xhat, uhat, mode);
}

std::vector<CheckReport> check_simulation_inequality(
    const SimulationCertificate& cert, const SwitchedNetwork& concrete,
    const SwitchedNetwork& abstraction, const PairInterface& network_interface,
    const CheckOptions& opts, RngStream rng) {
  const NetworkPairEvaluator eval(concrete, abstraction);
  const Index n = concrete.state_dim();
  const Index nh = abstraction.state_dim();

  std::vector<CheckReport> reports;
  for (Index j = 0; j < concrete.chain.mode_count(); ++j) {
    CheckReport report;
    report.name = "simulation-inequality-mode-" + std::to_string(j + 1);
    report.worst_margin = std::numeric_limits<double>::infinity();
    RngStream mode_rng = rng.derive("mode", static_cast<std::uint64_t>(j));

    for (long s = 0; s < opts.samples; ++s) {
      const Vector x = sample_box(n, opts.radius, mode_rng);
      const Vector xhat = sample_box(nh, opts.radius, mode_rng);
      const Vector uhat = sample_box(abstraction.input_dim(), opts.radius, mode_rng);
      const double margin = eval.margin(cert, network_interface, x, xhat, uhat, j);
      note_sample(report, margin, opts.tol, [&] {
        return Witness{x, xhat, uhat, Vector(), Vector(), static_cast<int>(j), margin};
      });
    }
    reports.push_back(std::move(report));
  }
  return reports;
}

CheckReport check_reduced_certificate(const ReducedCertificate& cert,
                                      const SwitchedNetwork& abstraction, double gain,
                                      const CheckOptions& opts, RngStream rng) {
  // reduced layer: the abstraction with diffusion and resets zeroed
  SwitchedNetwork reduced = abstraction;
  for (auto& s : reduced.subsystems) {
    for (auto& G : s.diffusion) G.setZero();
    for (auto& R : s.resets) R.setZero();
  }
  const Index nh = abstraction.state_dim();
  const auto layout = ChannelLayout::of(abstraction);
  const Matrix Bh = abstraction.input_matrix();

  Matrix Qv = Matrix::Zero(2 * nh, 2 * nh);
  Qv.topLeftCorner(nh, nh) = cert.Q1;
  Qv.bottomRightCorner(nh, nh) = cert.Q2;

  CheckReport report;
  report.name = "reduced-certificate (informational)";
  report.worst_margin = std::numeric_limits<double>::infinity();

  for (long s = 0; s < opts.samples; ++s) {
    const int j = static_cast<int>(rng.next_u64() %
                                   static_cast<std::uint64_t>(abstraction.chain.mode_count()));
    const Vector xhat = sample_box(nh, opts.radius, rng);
    const Vector xtilde = sample_box(nh, opts.radius, rng);
    const Vector utilde = Vector::Zero(nh);
    const Vector uhat = -gain * (xhat - xtilde) + utilde;

    Vector joint(2 * nh);
    joint << xhat, xtilde;
    Vector drift(2 * nh);
    drift.head(nh) = abstraction.closed_drift_matrix(j) * xhat + Bh * uhat;
    drift.tail(nh) = reduced.closed_drift_matrix(j) * xtilde + Bh * utilde;

    std::vector<Vector> cols, disp;
    for (Index g = 0; g < layout.brownian_groups; ++g) {
      Vector col = Vector::Zero(2 * nh);
      col.head(nh) = group_diffusion_column(abstraction, layout, g, xhat);
      cols.push_back(std::move(col));
    }
    for (Index g = 0; g < layout.poisson_groups; ++g) {
      Vector d = Vector::Zero(2 * nh);
      d.head(nh) = group_jump_displacement(abstraction, layout, g, xhat);
      disp.push_back(std::move(d));
    }
    const GeneratorResult gen =
        lgen_quadratic(Qv, drift, cols, disp, layout.group_rates, joint);
    const double value = joint.dot(Qv * joint);
    const double margin = -cert.kappa * value - gen.value;
    note_sample(report, margin, opts.tol, [&] {
      return Witness{Vector(), xhat, uhat, Vector(), Vector(), j, margin};
    });
  }
  return report;
}

// ---------------------------------------------------------------------------
// Dynkin oracle
// ---------------------------------------------------------------------------

DynkinEstimate dynkin_oracle(const Matrix& Qs, const JointLinearSde& sde,
                             const Vector& point, double delta, long runs, RngStream rng,
                             int substeps) {
  const Index n = point.size();
  SwitchedNetwork net;
  LinearSubsystem sub;
  sub.n = n;
  sub.m = n;
  sub.p = 0;
  sub.q1 = 0;
  sub.q2 = 0;
  sub.A = sde.F;
  sub.B = Matrix::Identity(n, n);
  sub.D = Matrix::Zero(n, 0);
  sub.diffusion = sde.G;
  sub.resets = sde.R;
  sub.rates = sde.rates;
  sub.C1 = Matrix::Zero(0, n);
  sub.C2 = Matrix::Zero(0, n);
  net.subsystems.push_back(std::move(sub));
  net.topology.matrices = {Matrix::Zero(0, 0)};
  net.chain.Q = Matrix::Zero(1, 1);
  net.noise = NoiseStacking::kPerSubsystem;

  const Controller hold = constant_controller(sde.g);
  const SwitchSignal signal = frozen_signal(0, delta);
  const double dt = delta / substeps;
  const double s0 = point.dot(Qs * point);
  const RecordOptions light{.states = false, .internal_outputs = false};

  std::vector<double> values(static_cast<std::size_t>(runs));
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const long workers = std::min<long>(hw, runs);
  std::vector<std::thread> pool;
  std::atomic<long> next{0};
  for (long wkr = 0; wkr < workers; ++wkr) {
    pool.emplace_back([&] {
      while (true) {
        const long r = next.fetch_add(1);
        if (r >= runs) break;
        RngStream stream = rng.derive("dynkin-run", static_cast<std::uint64_t>(r));
        const Trajectory traj =
            simulate(net, hold, point, signal, dt, delta, stream, light);
        values[static_cast<std::size_t>(r)] =
            traj.final_state.dot(Qs * traj.final_state);
      }
    });
  }
  for (auto& t : pool) t.join();

  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(runs);
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(runs - 1);

  DynkinEstimate est;
  est.runs = runs;
  est.estimate = (mean - s0) / delta;
  est.std_error = std::sqrt(var / static_cast<double>(runs)) / delta;
  return est;
}

}  // namespace shsnet
