#include <filesystem>
#include <random>
#include <sstream>

#include "hybridcorr/cli.hpp"
#include "hybridcorr/demos.hpp"
#include "hybridcorr/io.hpp"
#include "test_util.hpp"

using namespace hybridcorr;
using io::json;
using testutil::mat;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() / ("hybridcorr_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

}  // namespace

TEST_CASE("matrix JSON and CSV round trips are exact") {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 20; ++t) {
    Matrix m(1 + t % 4, 1 + t % 5);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(gen) / 3.0;
    const json j = io::matrix_to_json(m);
    CHECK(j.at("schema_version") == io::kSchemaVersion);
    CHECK(io::matrix_from_json(json::parse(j.dump())) == m);
    CHECK(io::matrix_from_csv(io::matrix_to_csv(m)) == m);
  }
}

TEST_CASE("matrix readers reject malformed input") {
  CHECK_ERROR_CODE(io::matrix_from_csv("1,nan\n2,3\n"), ErrorCode::NonFinite);
  CHECK_ERROR_CODE(io::matrix_from_csv("1,inf\n"), ErrorCode::NonFinite);
  CHECK_ERROR_CODE(io::matrix_from_csv("1,2\n3\n"), ErrorCode::ParseError);
  CHECK_ERROR_CODE(io::matrix_from_csv("1,abc\n"), ErrorCode::ParseError);
  CHECK_ERROR_CODE(io::matrix_from_json(json{{"rows", 2}, {"cols", 2}, {"entries", {1, 2, 3}}}), ErrorCode::ParseError);
  CHECK_ERROR_CODE(io::matrix_from_json(json{{"rows", 1}}), ErrorCode::ParseError);
}

TEST_CASE("factorization and protocol JSON round trips") {
  const DiagInstance inst = diag_instance(2);
  const BlockPsdFactorization back = io::block_factorization_from_json(json::parse(io::factorization_to_json(inst.witness).dump()));
  CHECK(back.block_size == 2);
  CHECK(back.weights == inst.witness.weights);
  CHECK(reconstruct(back) == reconstruct(inst.witness));

  const json plain = io::factorization_to_json(edm3_factorization());
  CHECK(plain.at("r") == 1);
  CHECK(plain.at("k") == 2);

  const HybridProtocol h = build_cq_hybrid(inst.witness, 1);
  const HybridProtocol h2 = io::hybrid_from_json(json::parse(io::hybrid_to_json(h).dump()));
  CHECK(h2.classical_bits == h.classical_bits);
  CHECK(h2.capability == h.capability);
  CHECK(exact_distribution(h2) == exact_distribution(h));

  const QuantumSeedProtocol p = build_seed_protocol(epr_factorization());
  CHECK(exact_distribution(io::seed_protocol_from_json(io::seed_protocol_to_json(p))) == exact_distribution(p));

  CHECK(io::samples_to_csv({{0, 1}, {2, 3}}) == "x,y\n0,1\n2,3\n");
}

TEST_CASE("report serialization carries interpretations") {
  BoundsBudget budget;
  budget.search.starts = 4;
  const BoundsReport rep = bounds_report(edm_correlation(EdmSpec::create({0, 1, 2})), budget);
  const json j = io::bounds_to_json(rep);
  CHECK(j.at("rank") == 3);
  CHECK(j.at("prank_ub") == 2);
  CHECK(j.contains("interpretation"));
  const std::string csv = io::bounds_to_csv(rep);
  CHECK(csv.rfind("quantity,k,value\n", 0) == 0);
  CHECK(csv.find("rank,,3\n") != std::string::npos);
}

TEST_CASE("cli gen and usage errors") {
  const CliResult r = run_cli({"gen", "edm", "--points", "0,1,2"});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j.at("schema_version") == io::kSchemaVersion);
  CHECK(j.at("command") == "gen edm");
  CHECK(j.contains("tolerances"));
  CHECK(j.contains("seed"));
  const Matrix m = io::matrix_from_json(j);
  CHECK(l1_distance(m, mat({{0, 1, 4}, {1, 0, 1}, {4, 1, 0}}) / 12.0) < 1e-15);

  const CliResult raw = run_cli({"gen", "edm", "--points", "0,1,2", "--raw", "--format", "csv"});
  CHECK(raw.code == 0);
  CHECK(io::matrix_from_csv(raw.out) == mat({{0, 1, 4}, {1, 0, 1}, {4, 1, 0}}));

  CHECK(run_cli({"frobnicate"}).code == 2);
  CHECK(run_cli({}).code == 2);
  CHECK(run_cli({"gen", "edm"}).code == 2);
  CHECK(run_cli({"gen", "edm", "--points", "0,1,2", "--format", "xml"}).code == 2);
  CHECK_FALSE(run_cli({"frobnicate"}).err.empty());
  CHECK(run_cli({"gen", "edm", "--points", "1,1"}).code == 1);
  CHECK(run_cli({"demo", "nope"}).code == 2);
  CHECK(run_cli({"gen", "ipsq", "--n", "3", "--cap", "4"}).code == 1);
}

TEST_CASE("cli pipeline is reproducible") {
  TempDir dir;
  const std::string target = dir.file("diag.json");
  io::write_text_file(target, io::matrix_to_json(diag_instance(2).target.matrix()).dump());

  const std::vector<std::string> fac{"factorize", "kblock", "--input", target, "--k", "2", "--r", "2", "--seed", "3"};
  const CliResult f1 = run_cli(fac);
  REQUIRE(f1.code == 0);
  CHECK(run_cli(fac).out == f1.out);
  io::write_text_file(dir.file("bf.json"), f1.out);

  const CliResult built = run_cli({"protocol", "build", "--factorization", dir.file("bf.json"), "--mode", "qc", "--s", "1"});
  REQUIRE(built.code == 0);
  CHECK(json::parse(built.out).at("ledger").at("classical_bits_locc") == 1);
  io::write_text_file(dir.file("h.json"), built.out);

  const std::vector<std::string> sim{"protocol", "simulate", "--proto", dir.file("h.json"), "--n", "5000", "--seed", "42"};
  auto with_out = [&](const std::string& name) {
    std::vector<std::string> a = sim;
    a.push_back("--out");
    a.push_back(dir.file(name));
    return a;
  };
  REQUIRE(run_cli(with_out("a.csv")).code == 0);
  REQUIRE(run_cli(with_out("b.csv")).code == 0);
  const std::string a = io::read_text_file(dir.file("a.csv"));
  CHECK(a == io::read_text_file(dir.file("b.csv")));
  CHECK(a.rfind("x,y\n", 0) == 0);
  CHECK(run_cli(sim).code == 2);  // --out is required

  const CliResult verify = run_cli({"protocol", "verify", "--proto", dir.file("h.json"), "--target", target, "--seed", "1"});
  CHECK(verify.code == 0);

  const std::string other = dir.file("other.json");
  io::write_text_file(other, io::matrix_to_json(Matrix::Constant(2, 2, 0.25)).dump());
  const CliResult mismatch = run_cli({"protocol", "verify", "--proto", dir.file("h.json"), "--target", other});
  CHECK(mismatch.code == 1);
  CHECK_FALSE(mismatch.err.empty());

  const CliResult part = run_cli({"partition", "--input", target, "--k", "2", "--exact"});
  REQUIRE(part.code == 0);
  CHECK(json::parse(part.out).at("size") == 2);
  const CliResult bnd = run_cli({"bounds", "--input", target, "--k", "1,2", "--budget", "4", "--seed", "7"});
  REQUIRE(bnd.code == 0);
  CHECK(run_cli({"bounds", "--input", target, "--k", "1,2", "--budget", "4", "--seed", "7"}).out == bnd.out);
  CHECK(json::parse(bnd.out).at("report").at("kprank_ub").at("2") == 2);
}

TEST_CASE("cli demos") {
  for (const std::string& name : demo_names()) {
    const CliResult r = run_cli({"demo", name});
    CHECK_MESSAGE(r.code == 0, name);
    const json j = json::parse(r.out);
    CHECK(j.at("passed") == true);
    CHECK(j.at("schema_version") == io::kSchemaVersion);
  }
}
