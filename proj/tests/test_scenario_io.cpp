#include "shsnet/scenario_io.hpp"

#include "shsnet/csv.hpp"
#include "shsnet/model.hpp"

#include "doctest.h"
#include "json.hpp"

#include <filesystem>
#include <fstream>

using namespace shsnet;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "shsnet-io-test";
  fs::create_directories(dir);
  return dir;
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  nlohmann::json j;
  in >> j;
  return j;
}

void write_json(const nlohmann::json& j, const fs::path& path) {
  std::ofstream out(path);
  out << j.dump(1);
}

}  // namespace

TEST_CASE("scenario round-trips through json") {
  const Scenario original = build_consensus_scenario({.block_dim = 4});
  const fs::path path = temp_dir() / "roundtrip.json";
  save_scenario(original, path);
  const Scenario loaded = load_scenario(path);

  CHECK(loaded.concrete.subsystems.size() == 3);
  CHECK(loaded.abstraction.subsystems.size() == 3);
  CHECK((loaded.concrete.topology.matrices[0] - original.concrete.topology.matrices[0])
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK((loaded.concrete.topology.matrices[1] - original.concrete.topology.matrices[1])
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK((loaded.certificates[1].Qs - original.certificates[1].Qs).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK(loaded.certificates[0].kappa == original.certificates[0].kappa);
  CHECK(loaded.interface_gain == original.interface_gain);
  CHECK(loaded.simulation.dt == original.simulation.dt);
  CHECK((loaded.simulation.bound.x0 - original.simulation.bound.x0).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK((loaded.synthesis.input_step - original.synthesis.input_step)
            .cwiseAbs()
            .maxCoeff() == 0.0);
  REQUIRE(loaded.reduced_certificate.has_value());
  CHECK((loaded.reduced_certificate->Q1 - original.reduced_certificate->Q1)
            .cwiseAbs()
            .maxCoeff() == 0.0);
  CHECK(loaded.concrete.noise == NoiseStacking::kCommon);
  CHECK(validate_network(loaded.concrete).ok());
}

TEST_CASE("a missing topology section is named in the error") {
  const Scenario original = build_consensus_scenario({.block_dim = 3});
  const fs::path path = temp_dir() / "missing.json";
  save_scenario(original, path);
  nlohmann::json j = read_json(path);
  j.erase("topology");
  write_json(j, path);
  CHECK_THROWS_WITH_AS((void)load_scenario(path), doctest::Contains("topology"),
                       std::runtime_error);
}

TEST_CASE("matrices load from csv references") {
  const fs::path dir = temp_dir();
  Matrix m(2, 2);
  m << 1.5, -2.0, 0.25, 4.0;
  write_matrix_csv(dir / "m.csv", m);
  CHECK((read_matrix_csv(dir / "m.csv") - m).cwiseAbs().maxCoeff() == 0.0);

  // point the chain generator at a csv file
  Scenario sc = build_consensus_scenario({.block_dim = 2});
  save_scenario(sc, dir / "csvref.json");
  write_matrix_csv(dir / "q.csv", sc.concrete.chain.Q);
  nlohmann::json j = read_json(dir / "csvref.json");
  j["chain"]["generator"] = {{"csv", "q.csv"}};
  write_json(j, dir / "csvref.json");
  const Scenario loaded = load_scenario(dir / "csvref.json");
  CHECK((loaded.concrete.chain.Q - sc.concrete.chain.Q).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("independent-noise coupling is rejected at load") {
  const fs::path dir = temp_dir();
  save_scenario(build_consensus_scenario({.block_dim = 2}), dir / "coupling.json");
  nlohmann::json j = read_json(dir / "coupling.json");
  j["interface"]["coupling"] = "independent";
  write_json(j, dir / "coupling.json");
  CHECK_THROWS_WITH_AS((void)load_scenario(dir / "coupling.json"),
                       doctest::Contains("rejected"), std::runtime_error);
}

TEST_CASE("block-constant initial states expand from output levels") {
  const fs::path dir = temp_dir();
  save_scenario(build_consensus_scenario({.block_dim = 3}), dir / "outputs.json");
  nlohmann::json j = read_json(dir / "outputs.json");
  j["simulation"]["bound"]["x0"] = {{"outputs", {1.0, -2.0, 0.5}}};
  write_json(j, dir / "outputs.json");
  const Scenario loaded = load_scenario(dir / "outputs.json");
  Vector expected(9);
  expected << 1.0, 1.0, 1.0, -2.0, -2.0, -2.0, 0.5, 0.5, 0.5;
  CHECK((loaded.simulation.bound.x0 - expected).cwiseAbs().maxCoeff() == 0.0);
}
