#include "shsnet/model.hpp"

#include "shsnet/linalg.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace shsnet {

// ---------------------------------------------------------------------------
// LinearSubsystem
// ---------------------------------------------------------------------------

LinearSubsystem LinearSubsystem::integrator(Index n, Matrix C1, double varpi,
                                            double tau, double lambda) {
  LinearSubsystem s;
  s.n = n;
  s.m = n;
  s.p = n;
  s.q1 = C1.rows();
  s.q2 = n;
  s.A = Matrix::Zero(n, n);
  s.B = Matrix::Identity(n, n);
  s.D = Matrix::Identity(n, n);
  s.diffusion = {varpi * Matrix::Identity(n, n)};
  s.resets = {tau * Matrix::Identity(n, n)};
  s.rates = Vector::Constant(1, lambda);
  s.C1 = std::move(C1);
  s.C2 = Matrix::Identity(n, n);
  return s;
}

void LinearSubsystem::validate(const std::string& section,
                               std::vector<std::string>& issues) const {
  auto bad = [&](const std::string& msg) { issues.push_back(section + ": " + msg); };
  auto dims = [](const Matrix& M, Index r, Index c) {
    return M.rows() == r && M.cols() == c;
  };
  if (n <= 0) bad("state dimension must be positive");
  if (!dims(A, n, n)) bad("A must be n x n");
  if (!dims(B, n, m)) bad("B must be n x m");
  if (!dims(D, n, p)) bad("D must be n x p");
  if (!dims(C1, q1, n)) bad("C1 must be q1 x n");
  if (!dims(C2, q2, n)) bad("C2 must be q2 x n");
  for (std::size_t k = 0; k < diffusion.size(); ++k) {
    if (!dims(diffusion[k], n, n)) bad("diffusion G_" + std::to_string(k) + " must be n x n");
  }
  for (std::size_t k = 0; k < resets.size(); ++k) {
    if (!dims(resets[k], n, n)) bad("reset R_" + std::to_string(k) + " must be n x n");
  }
  if (rates.size() != static_cast<Index>(resets.size()))
    bad("one jump rate per reset channel required");
  for (Index k = 0; k < rates.size(); ++k) {
    if (!(rates[k] >= 0.0)) bad("jump rate " + std::to_string(k) + " must be nonnegative");
  }
}

// ---------------------------------------------------------------------------
// MarkovChain
// ---------------------------------------------------------------------------

void MarkovChain::validate(std::vector<std::string>& issues) const {
  if (Q.rows() != Q.cols() || Q.rows() == 0) {
    issues.push_back("chain: generator matrix must be square and nonempty");
    return;
  }
  for (Index i = 0; i < Q.rows(); ++i) {
    for (Index j = 0; j < Q.cols(); ++j) {
      if (i != j && Q(i, j) < 0.0) {
        issues.push_back("chain: generator off-diagonal entry (" + std::to_string(i + 1) +
                         "," + std::to_string(j + 1) + ") is negative");
      }
    }
    const double row_sum = Q.row(i).sum();
    if (row_sum != 0.0) {
      std::ostringstream os;
      os << "chain: generator row sum of row " << (i + 1) << " is " << row_sum
         << " (must be exactly 0)";
      issues.push_back(os.str());
    }
  }
}

// ---------------------------------------------------------------------------
// SwitchedNetwork
// ---------------------------------------------------------------------------

Index SwitchedNetwork::state_dim() const {
  Index n = 0;
  for (const auto& s : subsystems) n += s.n;
  return n;
}

Index SwitchedNetwork::input_dim() const {
  Index m = 0;
  for (const auto& s : subsystems) m += s.m;
  return m;
}

Index SwitchedNetwork::internal_input_dim() const {
  Index p = 0;
  for (const auto& s : subsystems) p += s.p;
  return p;
}

Index SwitchedNetwork::external_output_dim() const {
  Index q = 0;
  for (const auto& s : subsystems) q += s.q1;
  return q;
}

Index SwitchedNetwork::internal_output_dim() const {
  Index q = 0;
  for (const auto& s : subsystems) q += s.q2;
  return q;
}

Index SwitchedNetwork::state_offset(Index i) const {
  Index off = 0;
  for (Index k = 0; k < i; ++k) off += subsystems[k].n;
  return off;
}

Index SwitchedNetwork::input_offset(Index i) const {
  Index off = 0;
  for (Index k = 0; k < i; ++k) off += subsystems[k].m;
  return off;
}

Vector SwitchedNetwork::internal_outputs(const Vector& x) const {
  Vector z(internal_output_dim());
  Index xo = 0, zo = 0;
  for (const auto& s : subsystems) {
    z.segment(zo, s.q2) = s.C2 * x.segment(xo, s.n);
    xo += s.n;
    zo += s.q2;
  }
  return z;
}

Vector SwitchedNetwork::external_outputs(const Vector& x) const {
  Vector y(external_output_dim());
  Index xo = 0, yo = 0;
  for (const auto& s : subsystems) {
    y.segment(yo, s.q1) = s.C1 * x.segment(xo, s.n);
    xo += s.n;
    yo += s.q1;
  }
  return y;
}

Matrix SwitchedNetwork::closed_drift_matrix(Index mode) const {
  const Index n = state_dim();
  Matrix F = Matrix::Zero(n, n);
  Index off = 0;
  for (const auto& s : subsystems) {
    F.block(off, off, s.n, s.n) = s.A;
    off += s.n;
  }
  // D M C2, assembled blockwise
  const Matrix& M = topology.matrices.at(static_cast<std::size_t>(mode));
  Matrix C2s = Matrix::Zero(internal_output_dim(), n);
  Index xo = 0, zo = 0;
  for (const auto& s : subsystems) {
    C2s.block(zo, xo, s.q2, s.n) = s.C2;
    xo += s.n;
    zo += s.q2;
  }
  Matrix Ds = Matrix::Zero(n, internal_input_dim());
  xo = 0;
  Index wo = 0;
  for (const auto& s : subsystems) {
    Ds.block(xo, wo, s.n, s.p) = s.D;
    xo += s.n;
    wo += s.p;
  }
  F += Ds * M * C2s;
  return F;
}

Matrix SwitchedNetwork::input_matrix() const {
  Matrix Bs = Matrix::Zero(state_dim(), input_dim());
  Index xo = 0, uo = 0;
  for (const auto& s : subsystems) {
    Bs.block(xo, uo, s.n, s.m) = s.B;
    xo += s.n;
    uo += s.m;
  }
  return Bs;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

std::string ValidationReport::text() const {
  if (issues.empty()) return "network valid\n";
  std::ostringstream os;
  for (const auto& issue : issues) os << "[" << issue.section << "] " << issue.message << "\n";
  return os.str();
}

ValidationReport validate_network(const SwitchedNetwork& net) {
  ValidationReport report;
  std::vector<std::string> raw;

  for (std::size_t i = 0; i < net.subsystems.size(); ++i) {
    net.subsystems[i].validate("subsystem " + std::to_string(i + 1), raw);
  }
  net.chain.validate(raw);
  for (const auto& msg : raw) {
    const auto colon = msg.find(':');
    report.issues.push_back({msg.substr(0, colon), msg.substr(colon + 2)});
  }

  if (static_cast<Index>(net.topology.matrices.size()) != net.chain.mode_count()) {
    report.issues.push_back(
        {"topology", "expected one interconnection matrix per chain mode (" +
                         std::to_string(net.chain.mode_count()) + "), got " +
                         std::to_string(net.topology.matrices.size())});
  }
  const Index p = net.internal_input_dim();
  const Index q2 = net.internal_output_dim();
  for (std::size_t j = 0; j < net.topology.matrices.size(); ++j) {
    const Matrix& M = net.topology.matrices[j];
    if (M.rows() != p || M.cols() != q2) {
      report.issues.push_back(
          {"topology", "mode " + std::to_string(j + 1) + " matrix is " +
                           std::to_string(M.rows()) + "x" + std::to_string(M.cols()) +
                           ", expected " + std::to_string(p) + "x" + std::to_string(q2)});
    }
  }

  if (net.noise == NoiseStacking::kCommon && !net.subsystems.empty()) {
    const auto& first = net.subsystems.front();
    for (std::size_t i = 1; i < net.subsystems.size(); ++i) {
      const auto& s = net.subsystems[i];
      if (s.brownian_channels() != first.brownian_channels() ||
          s.poisson_channels() != first.poisson_channels()) {
        report.issues.push_back(
            {"subsystem " + std::to_string(i + 1),
             "common noise stacking requires equal channel counts across subsystems"});
      } else if (s.rates.size() == first.rates.size() && s.rates != first.rates) {
        report.issues.push_back(
            {"subsystem " + std::to_string(i + 1),
             "common noise stacking requires equal jump rates across subsystems"});
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Certificates
// ---------------------------------------------------------------------------

double StorageCertificate::evaluate(const Vector& x, const Vector& xhat) const {
  Vector z(x.size() + xhat.size());
  z << x, xhat;
  return z.dot(Qs * z);
}

Matrix StorageCertificate::x_matrix() const {
  Matrix X(X11.rows() + X21.rows(), X11.cols() + X12.cols());
  X << X11, X12, X21, X22;
  return X;
}

void StorageCertificate::validate(const std::string& section,
                                  std::vector<std::string>& issues) const {
  auto bad = [&](const std::string& msg) { issues.push_back(section + ": " + msg); };
  if ((Qs - Qs.transpose()).cwiseAbs().maxCoeff() > 1e-12) bad("Qs must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (Qs + Qs.transpose()),
                                           Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9) bad("Qs must be positive semidefinite");
  if (!(kappa > 0.0)) bad("kappa must be positive");
  if (!(alpha_coeff > 0.0)) bad("alpha coefficient must be positive");
  const Matrix X = x_matrix();
  if ((X - X.transpose()).cwiseAbs().maxCoeff() > 1e-12) bad("X must be symmetric");
}

double SimulationCertificate::evaluate(const Vector& x, const Vector& xhat,
                                       Index mode) const {
  Vector z(nx + nxhat);
  z << x, xhat;
  return z.dot(Qv.at(static_cast<std::size_t>(mode)) * z);
}

// ---------------------------------------------------------------------------
// Scenario helpers
// ---------------------------------------------------------------------------

Matrix Scenario::state_lift() const {
  const Index n = concrete.state_dim();
  const Index nh = abstraction.state_dim();
  Matrix L = Matrix::Zero(n, nh);
  Index ro = 0, co = 0;
  for (std::size_t i = 0; i < certificates.size(); ++i) {
    const Matrix& H = certificates[i].H;
    L.block(ro, co, H.rows(), H.cols()) = H;
    ro += H.rows();
    co += H.cols();
  }
  return L;
}

Matrix fully_connected_topology(Index n) {
  return -(1.0 / static_cast<double>(n)) *
         (static_cast<double>(n) * Matrix::Identity(n, n) - Matrix::Ones(n, n));
}

Matrix cyclic_topology(Index n) {
  Matrix M = Matrix::Zero(n, n);
  for (Index r = 0; r < n; ++r) {
    M(r, r) += -2.0;
    M(r, (r + 1) % n) += 1.0;
    M(r, (r + n - 1) % n) += 1.0;
  }
  return M;
}

Scenario build_consensus_scenario(const ConsensusScenarioParams& p) {
  if (p.subsystem_count < 2) throw std::invalid_argument("need at least two subsystems");
  if (!(p.block_dim > 0) || !(p.varpi > 0.0) || !(p.tau > 0.0) || !(p.chi > 0.0) ||
      !(p.lambda > 0.0)) {
    throw std::invalid_argument("all consensus scenario parameters must be positive");
  }
  const double threshold = p.lambda * p.tau + 0.5 * p.varpi * p.varpi +
                           0.5 * p.lambda * p.tau * p.tau;
  const double kappa =
      2.0 * p.chi - 2.0 * p.lambda * p.tau - p.varpi * p.varpi - p.lambda * p.tau * p.tau;
  if (!(p.chi > threshold)) {
    std::ostringstream os;
    os << "interface gain chi = " << p.chi << " must exceed lambda*tau + varpi^2/2 + "
       << "lambda*tau^2/2 = " << threshold << " (decay rate would be " << kappa << ")";
    throw std::invalid_argument(os.str());
  }

  const Index N = p.subsystem_count;
  const Index ni = p.block_dim;
  const Index n = N * ni;

  Scenario sc;
  sc.name = "consensus";
  sc.interface_gain = p.chi;

  Matrix C1 = Matrix::Zero(1, ni);
  C1(0, 0) = 1.0;
  for (Index i = 0; i < N; ++i) {
    sc.concrete.subsystems.push_back(
        LinearSubsystem::integrator(ni, C1, p.varpi, p.tau, p.lambda));
    // scalar abstraction with the lifted external output map C1 * ones
    Matrix C1h = C1 * Matrix::Ones(ni, 1);
    sc.abstraction.subsystems.push_back(
        LinearSubsystem::integrator(1, C1h, p.varpi, p.tau, p.lambda));
  }

  sc.concrete.topology.matrices = {fully_connected_topology(n), cyclic_topology(n)};
  sc.abstraction.topology.matrices = {
      -Matrix::Identity(N, N) + Matrix::Ones(N, N) / static_cast<double>(N),
      cyclic_topology(N)};

  Matrix Q(2, 2);
  Q << -0.5, 0.5, 0.5, -0.5;
  sc.concrete.chain.Q = Q;
  sc.abstraction.chain.Q = Q;
  sc.concrete.noise = NoiseStacking::kCommon;
  sc.abstraction.noise = NoiseStacking::kCommon;

  for (Index i = 0; i < N; ++i) {
    StorageCertificate cert;
    cert.Qs = Matrix::Zero(ni + 1, ni + 1);
    cert.Qs.topLeftCorner(ni, ni) = Matrix::Identity(ni, ni);
    cert.Qs.topRightCorner(ni, 1) = -Matrix::Ones(ni, 1);
    cert.Qs.bottomLeftCorner(1, ni) = -Matrix::Ones(1, ni);
    cert.Qs(ni, ni) = static_cast<double>(ni);
    cert.kappa = kappa;
    cert.alpha_coeff = 1.0 / max_eigenvalue_symmetric(C1.transpose() * C1);
    cert.W = Matrix::Identity(ni, ni);
    cert.What = Matrix::Ones(ni, 1);
    cert.H = Matrix::Ones(ni, 1);
    cert.X11 = Matrix::Zero(ni, ni);
    cert.X22 = Matrix::Zero(ni, ni);
    cert.X12 = Matrix::Identity(ni, ni);
    cert.X21 = Matrix::Identity(ni, ni);
    sc.certificates.push_back(std::move(cert));
  }

  sc.weights = Matrix::Ones(N, 2);

  // simulation defaults: outputs start on the reference pattern, the
  // abstraction starts at their mean for the error-bound experiment and at
  // outputs + 0.1 for the closed-loop experiment
  const double pattern[3] = {-1.99, 4.00, 1.00};
  Vector outputs(N);
  for (Index i = 0; i < N; ++i) outputs[i] = pattern[i % 3];
  Vector x0(n);
  for (Index i = 0; i < N; ++i) x0.segment(i * ni, ni).setConstant(outputs[i]);

  sc.simulation.dt = 1e-3;
  sc.simulation.seed = 1;
  sc.simulation.bound.horizon = 5.0;
  sc.simulation.bound.runs = 100;
  sc.simulation.bound.x0 = x0;
  sc.simulation.bound.xhat0 = Vector::Constant(N, outputs.mean());
  sc.simulation.closed_loop.horizon = 60.0;
  sc.simulation.closed_loop.x0 = x0;
  sc.simulation.closed_loop.xhat0 = outputs.array() + 0.1;
  sc.simulation.closed_loop.xtilde0 = sc.simulation.closed_loop.xhat0;

  sc.synthesis.domain_lo = Vector::Constant(N, -5.0);
  sc.synthesis.domain_hi = Vector::Constant(N, 5.0);
  sc.synthesis.target1_lo = Vector::Constant(N, 1.6);
  sc.synthesis.target1_hi = Vector::Constant(N, 2.4);
  sc.synthesis.target2_lo = Vector::Constant(N, -2.4);
  sc.synthesis.target2_hi = Vector::Constant(N, -1.6);
  sc.synthesis.cell_width = Vector::Constant(N, 0.2);
  sc.synthesis.input_lo = Vector::Constant(N, -3.0);
  sc.synthesis.input_hi = Vector::Constant(N, 3.0);
  sc.synthesis.input_step = Vector::Constant(N, 0.5);
  sc.synthesis.sampling_period = 0.3;

  if (N == 3) {
    ReducedCertificate rc;
    rc.Q1.resize(3, 3);
    rc.Q1 << 0.0708, 0.0031, 0.0031, 0.0031, 0.0708, 0.0031, 0.0031, 0.0031, 0.0708;
    rc.Q2.resize(3, 3);
    rc.Q2 << 2.9264, -1.4392, -1.4392, -1.4392, 2.9264, -1.4392, -1.4392, -1.4392, 2.9264;
    sc.reduced_certificate = rc;
  }
  return sc;
}

}  // namespace shsnet
