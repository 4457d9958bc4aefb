#include "shsnet/compose.hpp"

#include "shsnet/linalg.hpp"

#include <algorithm>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace shsnet {

Matrix assemble_X(const Vector& weights, const std::vector<StorageCertificate>& certs) {
  if (weights.size() != static_cast<Index>(certs.size())) {
    throw std::invalid_argument("assemble_X: one weight per certificate");
  }
  Index d = 0, q = 0;
  for (const auto& c : certs) {
    if (c.X11.rows() != c.X11.cols() || c.X22.rows() != c.X22.cols() ||
        c.X12.rows() != c.X11.rows() || c.X12.cols() != c.X22.cols() ||
        c.X21.rows() != c.X22.rows() || c.X21.cols() != c.X11.cols()) {
      throw std::invalid_argument("assemble_X: certificate X blocks not conformal");
    }
    d += c.X11.rows();
    q += c.X22.rows();
  }
  Matrix X = Matrix::Zero(d + q, d + q);
  Index od = 0, oq = 0;
  for (std::size_t i = 0; i < certs.size(); ++i) {
    const auto& c = certs[i];
    const double mu = weights[static_cast<Index>(i)];
    const Index di = c.X11.rows();
    const Index qi = c.X22.rows();
    X.block(od, od, di, di) = mu * c.X11;
    X.block(od, d + oq, di, qi) = mu * c.X12;
    X.block(d + oq, od, qi, di) = mu * c.X21;
    X.block(d + oq, d + oq, qi, qi) = mu * c.X22;
    od += di;
    oq += qi;
  }
  return X;
}

Condition13Result check_condition_13(const Matrix& W, const Matrix& M,
                                     const Matrix& X_assembled, double tol) {
  const Index q = M.cols();
  Matrix T(W.rows() + q, q);
  T.topRows(W.rows()) = W * M;
  T.bottomRows(q) = Matrix::Identity(q, q);
  if (T.rows() != X_assembled.rows()) {
    throw std::invalid_argument("check_condition_13: X dimension mismatch");
  }
  const Matrix P = T.transpose() * X_assembled * T;
  Condition13Result out;
  out.max_eigenvalue = max_eigenvalue_symmetric(P);
  out.pass = out.max_eigenvalue <= tol;
  return out;
}

MhatResult compute_Mhat(const Matrix& W, const Matrix& M, const Matrix& H,
                        const Matrix& What) {
  const Matrix target = W * M * H;
  const LeastSquaresResult ls = least_squares(What, target);
  MhatResult out;
  out.mhat = ls.solution;
  out.residual = ls.residual;
  out.rank_ok = ls.full_rank;
  return out;
}

double validate_Mhat(const Matrix& W, const Matrix& M, const Matrix& H,
                     const Matrix& What, const Matrix& Mhat) {
  return (W * M * H - What * Mhat).norm();
}

bool CompositionReport::pass() const {
  for (const auto& m : modes) {
    if (!m.pass_13 || !m.pass_14 || !m.rank_ok) return false;
  }
  return true;
}

std::string CompositionReport::text() const {
  std::ostringstream os;
  os << "composition report (tol " << tol << ")\n";
  for (const auto& m : modes) {
    os << "  mode " << m.mode + 1 << ": max eig (13) = " << m.max_eigenvalue_13 << " ["
       << (m.pass_13 ? "pass" : "FAIL") << "], matching residual = " << m.residual_ls
       << " [" << (m.pass_14 ? "pass" : "FAIL") << "]";
    if (m.residual_declared >= 0.0) {
      os << ", declared-topology residual = " << m.residual_declared;
    }
    if (!m.rank_ok) os << ", What rank deficient";
    os << "\n";
  }
  os << "  composed kappa = " << composed_kappa << ", alpha coefficient = "
     << composed_alpha_coeff << "\n";
  return os.str();
}

void CompositionReport::write_csv(std::ostream& os) const {
  os << "mode,max_eigenvalue_13,residual_ls,residual_declared\n";
  for (const auto& m : modes) {
    os << m.mode + 1 << "," << m.max_eigenvalue_13 << "," << m.residual_ls << ","
       << m.residual_declared << "\n";
  }
}

namespace {

Matrix block_diag_W(const std::vector<StorageCertificate>& certs, bool hat) {
  Index r = 0, c = 0;
  for (const auto& cert : certs) {
    const Matrix& Wi = hat ? cert.What : cert.W;
    r += Wi.rows();
    c += Wi.cols();
  }
  Matrix W = Matrix::Zero(r, c);
  Index ro = 0, co = 0;
  for (const auto& cert : certs) {
    const Matrix& Wi = hat ? cert.What : cert.W;
    W.block(ro, co, Wi.rows(), Wi.cols()) = Wi;
    ro += Wi.rows();
    co += Wi.cols();
  }
  return W;
}

Matrix block_diag_H(const std::vector<StorageCertificate>& certs) {
  Index r = 0, c = 0;
  for (const auto& cert : certs) {
    r += cert.H.rows();
    c += cert.H.cols();
  }
  Matrix H = Matrix::Zero(r, c);
  Index ro = 0, co = 0;
  for (const auto& cert : certs) {
    H.block(ro, co, cert.H.rows(), cert.H.cols()) = cert.H;
    ro += cert.H.rows();
    co += cert.H.cols();
  }
  return H;
}

}  // namespace

CompositionReport check_composition(const Scenario& scenario, double tol) {
  const auto& certs = scenario.certificates;
  const Index P = scenario.concrete.chain.mode_count();
  if (scenario.weights.rows() != static_cast<Index>(certs.size()) ||
      scenario.weights.cols() != P) {
    throw std::invalid_argument("check_composition: weights must be N x P");
  }

  const Matrix W = block_diag_W(certs, false);
  const Matrix What = block_diag_W(certs, true);
  const Matrix H = block_diag_H(certs);

  CompositionReport report;
  report.tol = tol;
  double kappa = std::numeric_limits<double>::infinity();
  double alpha = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < certs.size(); ++i) {
    kappa = std::min(kappa, certs[i].kappa);
  }

  for (Index j = 0; j < P; ++j) {
    const Vector mu = scenario.weights.col(j);
    for (Index i = 0; i < mu.size(); ++i) {
      alpha = std::min(alpha, certs[static_cast<std::size_t>(i)].alpha_coeff * mu[i]);
    }
    const Matrix& M = scenario.concrete.topology.matrices[static_cast<std::size_t>(j)];
    const Matrix X = assemble_X(mu, certs);

    ModeComposition mc;
    mc.mode = static_cast<int>(j);
    const auto c13 = check_condition_13(W, M, X, tol);
    mc.max_eigenvalue_13 = c13.max_eigenvalue;
    mc.pass_13 = c13.pass;

    const MhatResult ls = compute_Mhat(W, M, H, What);
    mc.mhat_ls = ls.mhat;
    mc.residual_ls = ls.residual;
    mc.rank_ok = ls.rank_ok;
    mc.pass_14 = ls.rank_ok && ls.residual <= tol;
    if (static_cast<std::size_t>(j) < scenario.abstraction.topology.matrices.size()) {
      mc.residual_declared = validate_Mhat(
          W, M, H, What, scenario.abstraction.topology.matrices[static_cast<std::size_t>(j)]);
    }
    report.modes.push_back(std::move(mc));
  }
  report.composed_kappa = kappa;
  report.composed_alpha_coeff = alpha;
  return report;
}

SimulationCertificate compose_ssf(const Matrix& weights,
                                  const std::vector<StorageCertificate>& certs,
                                  const SwitchedNetwork& concrete,
                                  const SwitchedNetwork& abstraction,
                                  const CompositionReport& report, bool override_failed) {
  if ((weights.array() <= 0.0).any()) {
    throw std::invalid_argument("compose_ssf: all weights must be positive");
  }
  if (!report.pass() && !override_failed) {
    throw std::invalid_argument(
        "compose_ssf: composition conditions unverified; pass override_failed to "
        "compose anyway");
  }
  const Index N = static_cast<Index>(certs.size());
  const Index P = weights.cols();
  const Index n = concrete.state_dim();
  const Index nh = abstraction.state_dim();

  SimulationCertificate cert;
  cert.nx = n;
  cert.nxhat = nh;
  double kappa = std::numeric_limits<double>::infinity();
  double alpha = std::numeric_limits<double>::infinity();

  for (Index j = 0; j < P; ++j) {
    Matrix Qv = Matrix::Zero(n + nh, n + nh);
    Index xo = 0, ho = 0;
    for (Index i = 0; i < N; ++i) {
      const auto& ci = certs[static_cast<std::size_t>(i)];
      const Index ni = concrete.subsystems[static_cast<std::size_t>(i)].n;
      const Index nhi = abstraction.subsystems[static_cast<std::size_t>(i)].n;
      const double mu = weights(i, j);
      // scatter the pair form [x_i; xhat_i]' Qs [x_i; xhat_i]
      Qv.block(xo, xo, ni, ni) += mu * ci.Qs.topLeftCorner(ni, ni);
      Qv.block(xo, n + ho, ni, nhi) += mu * ci.Qs.topRightCorner(ni, nhi);
      Qv.block(n + ho, xo, nhi, ni) += mu * ci.Qs.bottomLeftCorner(nhi, ni);
      Qv.block(n + ho, n + ho, nhi, nhi) += mu * ci.Qs.bottomRightCorner(nhi, nhi);
      alpha = std::min(alpha, ci.alpha_coeff * mu);
      xo += ni;
      ho += nhi;
    }
    cert.Qv.push_back(std::move(Qv));
  }
  for (const auto& c : certs) kappa = std::min(kappa, c.kappa);
  cert.kappa = kappa;
  cert.alpha_coeff = alpha;
  return cert;
}

}  // namespace shsnet
