#include "shsnet/scenario_io.hpp"

#include "shsnet/csv.hpp"

#include "json.hpp"  // vendored nlohmann/json

#include <fstream>
#include <stdexcept>
#include <string>

namespace shsnet {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& section, const std::string& what) {
  throw std::runtime_error("scenario: section '" + section + "': " + what);
}

const json& require(const json& j, const std::string& section) {
  if (!j.contains(section)) {
    throw std::runtime_error("scenario: missing section '" + section + "'");
  }
  return j.at(section);
}

Matrix parse_matrix(const json& spec, const std::filesystem::path& base,
                    const std::string& section) {
  if (spec.is_array()) {
    if (spec.empty() || !spec[0].is_array()) fail(section, "matrix must be an array of rows");
    const Index rows = static_cast<Index>(spec.size());
    const Index cols = static_cast<Index>(spec[0].size());
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
      if (static_cast<Index>(spec[static_cast<std::size_t>(i)].size()) != cols) {
        fail(section, "ragged matrix rows");
      }
      for (Index j = 0; j < cols; ++j) {
        m(i, j) = spec[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]
                      .get<double>();
      }
    }
    return m;
  }
  if (spec.is_object()) {
    if (spec.contains("csv")) {
      return read_matrix_csv(base / spec.at("csv").get<std::string>());
    }
    if (spec.contains("identity")) {
      const Index n = spec.at("identity").get<Index>();
      return Matrix::Identity(n, n);
    }
    if (spec.contains("scaled_identity")) {
      const auto& a = spec.at("scaled_identity");
      const Index n = a.at(0).get<Index>();
      return (a.at(1).get<double>() * Matrix::Identity(n, n)).eval();
    }
    if (spec.contains("zeros")) {
      const auto& a = spec.at("zeros");
      return Matrix::Zero(a.at(0).get<Index>(), a.at(1).get<Index>());
    }
    if (spec.contains("ones")) {
      const auto& a = spec.at("ones");
      return Matrix::Ones(a.at(0).get<Index>(), a.at(1).get<Index>());
    }
  }
  fail(section, "unrecognized matrix spec");
}

Vector parse_vector(const json& spec, const std::filesystem::path& base,
                    const std::string& section) {
  if (spec.is_array()) {
    Vector v(static_cast<Index>(spec.size()));
    for (Index i = 0; i < v.size(); ++i) v[i] = spec[static_cast<std::size_t>(i)].get<double>();
    return v;
  }
  if (spec.is_object()) {
    if (spec.contains("constant")) {
      const auto& a = spec.at("constant");
      return Vector::Constant(a.at(0).get<Index>(), a.at(1).get<double>());
    }
    if (spec.contains("csv")) {
      const Matrix m = read_matrix_csv(base / spec.at("csv").get<std::string>());
      if (m.cols() != 1) fail(section, "csv vector must have one column");
      return m.col(0);
    }
  }
  fail(section, "unrecognized vector spec");
}

LinearSubsystem parse_subsystem(const json& j, const std::filesystem::path& base,
                                const std::string& section) {
  LinearSubsystem s;
  s.A = parse_matrix(require(j, "A"), base, section);
  s.B = parse_matrix(require(j, "B"), base, section);
  s.D = parse_matrix(require(j, "D"), base, section);
  s.C1 = parse_matrix(require(j, "C1"), base, section);
  s.C2 = parse_matrix(require(j, "C2"), base, section);
  s.n = s.A.rows();
  s.m = s.B.cols();
  s.p = s.D.cols();
  s.q1 = s.C1.rows();
  s.q2 = s.C2.rows();
  for (const auto& g : require(j, "diffusion")) {
    s.diffusion.push_back(parse_matrix(g, base, section));
  }
  for (const auto& r : require(j, "resets")) {
    s.resets.push_back(parse_matrix(r, base, section));
  }
  s.rates = parse_vector(require(j, "rates"), base, section);
  return s;
}

std::vector<LinearSubsystem> parse_subsystems(const json& j,
                                              const std::filesystem::path& base,
                                              const std::string& section) {
  std::vector<LinearSubsystem> out;
  if (j.contains("items")) {
    for (const auto& item : j.at("items")) out.push_back(parse_subsystem(item, base, section));
  } else if (j.contains("template") && j.contains("count")) {
    const auto n = j.at("count").get<Index>();
    const LinearSubsystem s = parse_subsystem(j.at("template"), base, section);
    for (Index i = 0; i < n; ++i) out.push_back(s);
  } else {
    fail(section, "expected 'items' or 'template' + 'count'");
  }
  return out;
}

StorageCertificate parse_certificate(const json& j, const std::filesystem::path& base) {
  StorageCertificate c;
  const std::string section = "certificates";
  c.Qs = parse_matrix(require(j, "Qs"), base, section);
  c.kappa = require(j, "kappa").get<double>();
  c.alpha_coeff = require(j, "alpha_coeff").get<double>();
  if (j.contains("psi_ext") && j.at("psi_ext").get<std::string>() != "zero") {
    fail(section, "only the zero external gain term is supported");
  }
  c.W = parse_matrix(require(j, "W"), base, section);
  c.What = parse_matrix(require(j, "What"), base, section);
  c.H = parse_matrix(require(j, "H"), base, section);
  c.X11 = parse_matrix(require(j, "X11"), base, section);
  c.X12 = parse_matrix(require(j, "X12"), base, section);
  c.X21 = parse_matrix(require(j, "X21"), base, section);
  c.X22 = parse_matrix(require(j, "X22"), base, section);
  return c;
}

// x0 may be given directly or as per-subsystem output levels filled
// block-constant ("outputs" form)
Vector parse_initial_state(const json& j, const std::vector<LinearSubsystem>& subs,
                           const std::filesystem::path& base, const std::string& section) {
  if (j.is_object() && j.contains("outputs")) {
    const Vector levels = parse_vector(j.at("outputs"), base, section);
    if (levels.size() != static_cast<Index>(subs.size())) {
      fail(section, "one output level per subsystem required");
    }
    Index n = 0;
    for (const auto& s : subs) n += s.n;
    Vector x(n);
    Index off = 0;
    for (std::size_t i = 0; i < subs.size(); ++i) {
      x.segment(off, subs[i].n).setConstant(levels[static_cast<Index>(i)]);
      off += subs[i].n;
    }
    return x;
  }
  return parse_vector(j, base, section);
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json subsystem_json(const LinearSubsystem& s) {
  json j;
  j["A"] = matrix_json(s.A);
  j["B"] = matrix_json(s.B);
  j["D"] = matrix_json(s.D);
  j["C1"] = matrix_json(s.C1);
  j["C2"] = matrix_json(s.C2);
  j["diffusion"] = json::array();
  for (const auto& g : s.diffusion) j["diffusion"].push_back(matrix_json(g));
  j["resets"] = json::array();
  for (const auto& r : s.resets) j["resets"].push_back(matrix_json(r));
  j["rates"] = vector_json(s.rates);
  return j;
}

}  // namespace

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("scenario: malformed json: " + std::string(e.what()));
  }
  const std::filesystem::path base = path.parent_path();

  Scenario sc;
  sc.name = j.value("name", path.stem().string());
  sc.concrete.subsystems = parse_subsystems(require(j, "subsystems"), base, "subsystems");
  sc.abstraction.subsystems =
      parse_subsystems(require(j, "abstract_subsystems"), base, "abstract_subsystems");

  const json& topo = require(j, "topology");
  for (const auto& m : require(topo, "concrete")) {
    sc.concrete.topology.matrices.push_back(parse_matrix(m, base, "topology"));
  }
  for (const auto& m : require(topo, "abstract")) {
    sc.abstraction.topology.matrices.push_back(parse_matrix(m, base, "topology"));
  }

  const json& chain = require(j, "chain");
  sc.concrete.chain.Q = parse_matrix(require(chain, "generator"), base, "chain");
  sc.abstraction.chain.Q = sc.concrete.chain.Q;

  if (j.contains("noise")) {
    const auto stacking = j.at("noise").value("stacking", "common");
    if (stacking == "common") {
      sc.concrete.noise = sc.abstraction.noise = NoiseStacking::kCommon;
    } else if (stacking == "per-subsystem") {
      sc.concrete.noise = sc.abstraction.noise = NoiseStacking::kPerSubsystem;
    } else {
      fail("noise", "stacking must be 'common' or 'per-subsystem'");
    }
  }

  const json& certs = require(j, "certificates");
  if (certs.contains("items")) {
    for (const auto& c : certs.at("items")) {
      sc.certificates.push_back(parse_certificate(c, base));
    }
  } else if (certs.contains("template") && certs.contains("count")) {
    const auto n = certs.at("count").get<Index>();
    const StorageCertificate c = parse_certificate(certs.at("template"), base);
    for (Index i = 0; i < n; ++i) sc.certificates.push_back(c);
  } else {
    fail("certificates", "expected 'items' or 'template' + 'count'");
  }

  const json& iface = require(j, "interface");
  sc.interface_gain = require(iface, "gain").get<double>();
  const std::string coupling = iface.value("coupling", "common-noise");
  if (coupling != "common-noise") {
    fail("interface",
         "coupling '" + coupling + "' rejected: coupled runs share noise channels");
  }

  const Index N = static_cast<Index>(sc.certificates.size());
  const Index P = sc.concrete.chain.mode_count();
  if (j.contains("weights")) {
    sc.weights = parse_matrix(j.at("weights"), base, "weights");
    if (sc.weights.rows() != N || sc.weights.cols() != P) {
      fail("weights", "must be N x P (one row per subsystem, one column per mode)");
    }
  } else {
    sc.weights = Matrix::Ones(N, P);
  }

  const json& sim = require(j, "simulation");
  sc.simulation.dt = sim.value("dt", 1e-3);
  sc.simulation.seed = sim.value("seed", std::uint64_t{1});
  if (sim.contains("bound")) {
    const json& b = sim.at("bound");
    sc.simulation.bound.horizon = b.value("horizon", 5.0);
    sc.simulation.bound.runs = b.value("runs", 100);
    sc.simulation.bound.x0 =
        parse_initial_state(require(b, "x0"), sc.concrete.subsystems, base, "simulation");
    sc.simulation.bound.xhat0 = parse_initial_state(require(b, "xhat0"),
                                                    sc.abstraction.subsystems, base,
                                                    "simulation");
  }
  if (sim.contains("closed_loop")) {
    const json& c = sim.at("closed_loop");
    sc.simulation.closed_loop.horizon = c.value("horizon", 60.0);
    sc.simulation.closed_loop.x0 =
        parse_initial_state(require(c, "x0"), sc.concrete.subsystems, base, "simulation");
    sc.simulation.closed_loop.xhat0 = parse_initial_state(
        require(c, "xhat0"), sc.abstraction.subsystems, base, "simulation");
    sc.simulation.closed_loop.xtilde0 =
        c.contains("xtilde0")
            ? parse_initial_state(c.at("xtilde0"), sc.abstraction.subsystems, base,
                                  "simulation")
            : sc.simulation.closed_loop.xhat0;
  }

  const json& synth = require(j, "synthesis");
  const json& domain = require(synth, "domain");
  sc.synthesis.domain_lo = parse_vector(require(domain, "lo"), base, "synthesis");
  sc.synthesis.domain_hi = parse_vector(require(domain, "hi"), base, "synthesis");
  const json& t1 = require(synth, "target1");
  sc.synthesis.target1_lo = parse_vector(require(t1, "lo"), base, "synthesis");
  sc.synthesis.target1_hi = parse_vector(require(t1, "hi"), base, "synthesis");
  const json& t2 = require(synth, "target2");
  sc.synthesis.target2_lo = parse_vector(require(t2, "lo"), base, "synthesis");
  sc.synthesis.target2_hi = parse_vector(require(t2, "hi"), base, "synthesis");
  sc.synthesis.cell_width = parse_vector(require(synth, "cell_width"), base, "synthesis");
  const json& input = require(synth, "input");
  sc.synthesis.input_lo = parse_vector(require(input, "lo"), base, "synthesis");
  sc.synthesis.input_hi = parse_vector(require(input, "hi"), base, "synthesis");
  sc.synthesis.input_step = parse_vector(require(input, "step"), base, "synthesis");
  sc.synthesis.sampling_period = synth.value("sampling_period", 0.3);

  if (j.contains("reduced_certificate")) {
    const json& rc = j.at("reduced_certificate");
    ReducedCertificate cert;
    cert.Q1 = parse_matrix(require(rc, "Q1"), base, "reduced_certificate");
    cert.Q2 = parse_matrix(require(rc, "Q2"), base, "reduced_certificate");
    cert.kappa = rc.value("kappa", 0.0);
    sc.reduced_certificate = cert;
  }
  return sc;
}

void save_scenario(const Scenario& sc, const std::filesystem::path& path) {
  json j;
  j["name"] = sc.name;
  j["subsystems"]["items"] = json::array();
  for (const auto& s : sc.concrete.subsystems) {
    j["subsystems"]["items"].push_back(subsystem_json(s));
  }
  j["abstract_subsystems"]["items"] = json::array();
  for (const auto& s : sc.abstraction.subsystems) {
    j["abstract_subsystems"]["items"].push_back(subsystem_json(s));
  }
  j["topology"]["concrete"] = json::array();
  for (const auto& m : sc.concrete.topology.matrices) {
    j["topology"]["concrete"].push_back(matrix_json(m));
  }
  j["topology"]["abstract"] = json::array();
  for (const auto& m : sc.abstraction.topology.matrices) {
    j["topology"]["abstract"].push_back(matrix_json(m));
  }
  j["chain"]["generator"] = matrix_json(sc.concrete.chain.Q);
  j["noise"]["stacking"] =
      sc.concrete.noise == NoiseStacking::kCommon ? "common" : "per-subsystem";
  j["certificates"]["items"] = json::array();
  for (const auto& c : sc.certificates) {
    json cj;
    cj["Qs"] = matrix_json(c.Qs);
    cj["kappa"] = c.kappa;
    cj["alpha_coeff"] = c.alpha_coeff;
    cj["psi_ext"] = "zero";
    cj["W"] = matrix_json(c.W);
    cj["What"] = matrix_json(c.What);
    cj["H"] = matrix_json(c.H);
    cj["X11"] = matrix_json(c.X11);
    cj["X12"] = matrix_json(c.X12);
    cj["X21"] = matrix_json(c.X21);
    cj["X22"] = matrix_json(c.X22);
    j["certificates"]["items"].push_back(std::move(cj));
  }
  j["interface"]["gain"] = sc.interface_gain;
  j["interface"]["coupling"] = "common-noise";
  j["weights"] = matrix_json(sc.weights);
  j["simulation"]["dt"] = sc.simulation.dt;
  j["simulation"]["seed"] = sc.simulation.seed;
  j["simulation"]["bound"]["horizon"] = sc.simulation.bound.horizon;
  j["simulation"]["bound"]["runs"] = sc.simulation.bound.runs;
  j["simulation"]["bound"]["x0"] = vector_json(sc.simulation.bound.x0);
  j["simulation"]["bound"]["xhat0"] = vector_json(sc.simulation.bound.xhat0);
  j["simulation"]["closed_loop"]["horizon"] = sc.simulation.closed_loop.horizon;
  j["simulation"]["closed_loop"]["x0"] = vector_json(sc.simulation.closed_loop.x0);
  j["simulation"]["closed_loop"]["xhat0"] = vector_json(sc.simulation.closed_loop.xhat0);
  j["simulation"]["closed_loop"]["xtilde0"] =
      vector_json(sc.simulation.closed_loop.xtilde0);
  j["synthesis"]["domain"]["lo"] = vector_json(sc.synthesis.domain_lo);
  j["synthesis"]["domain"]["hi"] = vector_json(sc.synthesis.domain_hi);
  j["synthesis"]["target1"]["lo"] = vector_json(sc.synthesis.target1_lo);
  j["synthesis"]["target1"]["hi"] = vector_json(sc.synthesis.target1_hi);
  j["synthesis"]["target2"]["lo"] = vector_json(sc.synthesis.target2_lo);
  j["synthesis"]["target2"]["hi"] = vector_json(sc.synthesis.target2_hi);
  j["synthesis"]["cell_width"] = vector_json(sc.synthesis.cell_width);
  j["synthesis"]["input"]["lo"] = vector_json(sc.synthesis.input_lo);
  j["synthesis"]["input"]["hi"] = vector_json(sc.synthesis.input_hi);
  j["synthesis"]["input"]["step"] = vector_json(sc.synthesis.input_step);
  j["synthesis"]["sampling_period"] = sc.synthesis.sampling_period;
  if (sc.reduced_certificate) {
    j["reduced_certificate"]["Q1"] = matrix_json(sc.reduced_certificate->Q1);
    j["reduced_certificate"]["Q2"] = matrix_json(sc.reduced_certificate->Q2);
    j["reduced_certificate"]["kappa"] = sc.reduced_certificate->kappa;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scenario file: " + path.string());
  out << j.dump(1) << "\n";
}

}  // namespace shsnet
