#include "hybridcorr/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <optional>
#include <sstream>

#include "hybridcorr/demos.hpp"
#include "hybridcorr/io.hpp"

namespace hybridcorr::cli {

namespace {

using io::json;

struct Global {
  std::uint64_t seed = 0;
  double tol_residual = ToleranceConfig{}.residual_tol;
  double eps = 0.0;
  std::string out;
  std::string format = "json";
  std::optional<int> cap;

  ToleranceConfig tolerances() const {
    ToleranceConfig t;
    t.residual_tol = tol_residual;
    t.l1_eps = eps;
    t.validate();
    return t;
  }
};

// Exit-code carrying wrapper for problems with the invocation itself.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Runner {
 public:
  Runner(const Global& g, std::ostream& out) : g_(g), out_(out) {}

  json header(const std::string& command) const {
    return json{{"schema_version", io::kSchemaVersion},
                {"command", command},
                {"seed", g_.seed},
                {"tolerances", io::tolerances_to_json(g_.tolerances())}};
  }

  void emit(const std::string& text) const {
    if (g_.out.empty()) {
      out_ << text;
    } else {
      io::write_text_file(g_.out, text);
    }
  }

  void emit(const json& report) const { emit(report.dump(2) + "\n"); }

  Correlation load_correlation(const std::string& path) const {
    return Correlation::from_matrix(io::read_matrix_file(path), g_.tolerances());
  }

  SearchConfig search(int starts, int max_iters) const {
    SearchConfig cfg;
    cfg.seed = g_.seed;
    cfg.starts = starts;
    cfg.max_iters = max_iters;
    cfg.tol = g_.tolerances();
    return cfg;
  }

  void emit_matrix(const std::string& command, const Matrix& m) const {
    if (g_.format == "csv") {
      emit(io::matrix_to_csv(m));
      return;
    }
    json j = header(command);
    j.update(io::matrix_to_json(m));
    emit(j);
  }

  SizeCap size_cap() const {
    if (!g_.cap) return SizeCap{};
    if (*g_.cap < 1) throw UsageError("--cap must be positive");
    return SizeCap{*g_.cap, *g_.cap};
  }

 private:
  const Global& g_;
  std::ostream& out_;
};

json read_json_file(const std::string& path) {
  try {
    return json::parse(io::read_text_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}


}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hybrid quantum/classical correlation generation", "hybridcorr"};
  app.require_subcommand(1);
  app.fallthrough();

  Global g;
  app.add_option("--seed", g.seed, "Global RNG seed");
  app.add_option("--tol-residual", g.tol_residual, "L1 residual counted as exact");
  app.add_option("--eps", g.eps, "L1 approximation budget (0 = exact mode)");
  app.add_option("--out", g.out, "Write the main output to this file");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--cap", g.cap, "Size cap (generators: rows/cols; exact partitions: nonzeros)");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a matrix family");
  gen->require_subcommand(1);
  bool raw = false;
  gen->add_flag("--raw", raw, "Skip normalization to a correlation");
  std::vector<double> points;
  auto* gen_edm = gen->add_subcommand("edm", "Euclidean distance matrix of real points");
  gen_edm->add_option("--points", points, "Comma-separated points")->delimiter(',')->required();
  std::string input;
  int power = 2;
  auto* gen_tensor = gen->add_subcommand("tensor", "Kronecker power of a correlation");
  gen_tensor->add_option("--input", input)->required();
  gen_tensor->add_option("--power", power)->check(CLI::PositiveNumber);
  std::vector<std::string> inputs;
  std::vector<double> weights;
  auto* gen_block = gen->add_subcommand("blockdiag", "Block-diagonal mixture");
  gen_block->add_option("--inputs", inputs)->delimiter(',')->required();
  gen_block->add_option("--weights", weights)->delimiter(',')->required();
  int ipsq_n = 1;
  auto* gen_ipsq = gen->add_subcommand("ipsq", "Inner-product-parity 0/1 matrix");
  gen_ipsq->add_option("--n", ipsq_n)->required()->check(CLI::Range(1, 16));

  // factorize
  auto* fac = app.add_subcommand("factorize", "Search for a factorization");
  fac->require_subcommand(1);
  int rank_param = 1;
  int block = 2;
  int starts = 20;
  int max_iters = 5000;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--input", input)->required();
    sub->add_option("--r", rank_param)->required()->check(CLI::PositiveNumber);
    sub->add_option("--starts", starts)->check(CLI::PositiveNumber);
    sub->add_option("--max-iters", max_iters)->check(CLI::NonNegativeNumber);
  };
  auto* fac_psd = fac->add_subcommand("psd", "PSD factorization of side r");
  add_common(fac_psd);
  auto* fac_kblock = fac->add_subcommand("kblock", "k-block PSD factorization with r branches");
  add_common(fac_kblock);
  fac_kblock->add_option("--k", block)->required()->check(CLI::PositiveNumber);
  auto* fac_nmf = fac->add_subcommand("nmf", "Nonnegative factorization of inner size r");
  add_common(fac_nmf);

  // bounds
  auto* bounds = app.add_subcommand("bounds", "Rank bounds report");
  std::vector<int> ks{2};
  int budget = 20;
  bool bounds_csv = false;
  bounds->add_option("--input", input)->required();
  bounds->add_option("--k", ks)->delimiter(',')->check(CLI::PositiveNumber);
  bounds->add_option("--budget", budget, "Starts per search")->check(CLI::PositiveNumber);
  bounds->add_flag("--csv", bounds_csv, "Flat table instead of JSON");

  // partition
  auto* part = app.add_subcommand("partition", "Rectangle k-partition");
  bool exact = false;
  bool greedy_flag = false;
  part->add_option("--input", input)->required();
  part->add_option("--k", block)->required()->check(CLI::PositiveNumber);
  auto* exact_opt = part->add_flag("--exact", exact);
  part->add_flag("--greedy", greedy_flag)->excludes(exact_opt);

  // protocol
  auto* proto = app.add_subcommand("protocol", "Build, simulate and verify protocols");
  proto->require_subcommand(1);
  std::string fac_path;
  std::string mode = "cq";
  int s = 1;
  auto* p_build = proto->add_subcommand("build", "Hybrid protocol from a block factorization");
  p_build->add_option("--factorization", fac_path)->required();
  p_build->add_option("--mode", mode)->check(CLI::IsMember({"cq", "qc"}));
  p_build->add_option("--s", s)->check(CLI::Range(0, 20));
  std::string proto_path;
  std::string target_path;
  std::uint64_t n_samples = 1000000;
  auto* p_sim = proto->add_subcommand("simulate", "Sample a hybrid protocol");
  p_sim->add_option("--proto", proto_path)->required();
  p_sim->add_option("--n", n_samples)->check(CLI::PositiveNumber);
  p_sim->add_option("--target", target_path);
  auto* p_verify = proto->add_subcommand("verify", "Compare a protocol against a target");
  p_verify->add_option("--proto", proto_path)->required();
  p_verify->add_option("--target", target_path)->required();
  std::uint64_t verify_n = 100000;
  p_verify->add_option("--n", verify_n)->check(CLI::PositiveNumber);

  // demo
  auto* demo = app.add_subcommand("demo", "Worked scenarios with inline checks");
  std::string demo_name;
  demo->add_option("name", demo_name, "eq2-diag | q2-tensor | tradeoff")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return 2;
  }

  Runner runner(g, out);
  try {
    const ToleranceConfig tol = g.tolerances();
    if (gen->parsed()) {
      Matrix m;
      std::string command = "gen ";
      if (gen_edm->parsed()) {
        command += "edm";
        m = edm(EdmSpec::create(points));
      } else if (gen_tensor->parsed()) {
        command += "tensor";
        m = tensor_power(runner.load_correlation(input), power, runner.size_cap()).matrix();
      } else if (gen_block->parsed()) {
        command += "blockdiag";
        std::vector<Correlation> parts;
        for (const auto& path : inputs) parts.push_back(runner.load_correlation(path));
        m = block_diagonal_mix(parts, weights).matrix();
      } else {
        command += "ipsq";
        SizeCap cap{1024, 1024};
        if (g.cap) cap = runner.size_cap();
        m = inner_product_squared_matrix(ipsq_n, cap);
      }
      if (!raw) m = normalize_to_correlation(m, tol).matrix();
      runner.emit_matrix(command, m);
      return 0;
    }

    if (fac->parsed()) {
      const Correlation p = runner.load_correlation(input);
      const SearchConfig cfg = runner.search(starts, max_iters);
      json rep;
      if (fac_psd->parsed()) {
        rep = runner.header("factorize psd");
        const PsdSearchResult res = psd_factorize(p, rank_param, cfg);
        const BlockPsdFactorization single{res.factorization.side(), {1.0}, {res.factorization}};
        const CertificationReport cert = certify_block_factorization(p, single, tol);
        rep["factorization"] = io::factorization_to_json(res.factorization);
        rep["residual"] = res.residual;
        rep["best_start"] = res.best_start;
        rep["certification"] = io::certification_to_json(cert);
        rep["exact"] = cert.passed;
      } else if (fac_kblock->parsed()) {
        rep = runner.header("factorize kblock");
        const BlockSearchResult res = kblock_factorize(p, block, rank_param, cfg);
        const CertificationReport cert = certify_block_factorization(p, res.factorization, tol);
        rep["factorization"] = io::factorization_to_json(res.factorization);
        rep["residual"] = res.residual;
        rep["best_start"] = res.best_start;
        rep["certification"] = io::certification_to_json(cert);
        rep["exact"] = cert.passed;
      } else {
        rep = runner.header("factorize nmf");
        const NmfResult res = nmf(p, rank_param, cfg);
        rep["w"] = io::matrix_to_json(res.w);
        rep["h"] = io::matrix_to_json(res.h);
        rep["residual"] = res.residual;
        rep["best_start"] = res.best_start;
        rep["exact"] = res.residual <= std::max(tol.residual_tol, tol.l1_eps);
      }
      rep["search"] = {{"starts", starts}, {"max_iters", max_iters}};
      runner.emit(rep);
      return 0;
    }

    if (bounds->parsed()) {
      const Correlation p = runner.load_correlation(input);
      BoundsBudget b;
      b.block_sizes = ks;
      b.search = runner.search(budget, 5000);
      const BoundsReport rep = bounds_report(p, b);
      if (bounds_csv || g.format == "csv") {
        runner.emit(io::bounds_to_csv(rep));
      } else {
        json j = runner.header("bounds");
        j["budget"] = budget;
        j["report"] = io::bounds_to_json(rep);
        runner.emit(j);
      }
      return 0;
    }

    if (part->parsed()) {
      const Correlation p = runner.load_correlation(input);
      SearchConfig cfg = oracle_budget();
      cfg.seed = g.seed;
      cfg.tol = tol;
      const PartitionResult res = exact ? k_partition_exact(p, block, g.cap.value_or(kExactNonzeroCap), cfg)
                                        : k_partition_greedy(p, block, cfg);
      const BlockPsdFactorization bf = partition_to_block_factorization(p, res, block);
      const CertificationReport cert = certify_block_factorization(p, bf, tol);
      json j = runner.header("partition");
      j["k"] = block;
      j["method"] = exact ? "exact" : "greedy";
      j.update(io::partition_to_json(res));
      j["certification"] = io::certification_to_json(cert);
      runner.emit(j);
      return cert.passed ? 0 : 1;
    }

    if (proto->parsed()) {
      if (p_build->parsed()) {
        json doc = read_json_file(fac_path);
        // Accept either a bare factorization or a `factorize` report.
        if (doc.is_object() && doc.contains("factorization")) doc = doc.at("factorization");
        const BlockPsdFactorization bf = io::block_factorization_from_json(doc);
        json j = runner.header("protocol build");
        HybridProtocol h;
        ResourceLedger led;
        if (mode == "qc") {
          std::tie(h, led) = build_qc_hybrid(bf, s, tol);
        } else {
          h = build_cq_hybrid(bf, s, tol);
          led = make_ledger(h, normalize_to_correlation(reconstruct(bf).cwiseMax(0.0), tol), tol);
        }
        j["protocol"] = io::hybrid_to_json(h);
        j["ledger"] = io::ledger_to_json(led);
        runner.emit(j);
        return led.all_passed() ? 0 : 1;
      }
      json doc = read_json_file(proto_path);
      if (doc.is_object() && doc.contains("protocol")) doc = doc.at("protocol");
      const HybridProtocol h = io::hybrid_from_json(doc);
      h.validate();
      if (p_sim->parsed()) {
        if (g.out.empty()) throw UsageError("protocol simulate needs --out for the samples file");
        std::optional<Correlation> target;
        if (!target_path.empty()) target = runner.load_correlation(target_path);
        const auto [samples, led] = simulate_hybrid(h, g.seed, n_samples, target, tol);
        io::write_text_file(g.out, io::samples_to_csv(samples));
        json j = runner.header("protocol simulate");
        j["n"] = n_samples;
        j["samples_file"] = g.out;
        j["ledger"] = io::ledger_to_json(led);
        out << j.dump(2) << "\n";
        return led.all_passed() ? 0 : 1;
      }
      // verify
      const Correlation target = runner.load_correlation(target_path);
      const Matrix dist = exact_distribution(h);
      if (dist.rows() != target.rows() || dist.cols() != target.cols()) {
        throw Error(ErrorCode::ShapeMismatch, "protocol outcomes are " + std::to_string(dist.rows()) + "x" +
                                                  std::to_string(dist.cols()) + " but the target is " +
                                                  std::to_string(target.rows()) + "x" +
                                                  std::to_string(target.cols()));
      }
      const double l1 = l1_distance(dist, target.matrix());
      const auto [samples, led] = simulate_hybrid(h, g.seed, verify_n, target, tol);
      const ChiSquareResult chi = chi_square_test(target.matrix(), samples);
      const bool exact_ok = l1 <= std::max(tol.residual_tol, tol.l1_eps);
      json j = runner.header("protocol verify");
      j["exact_l1"] = l1;
      j["exact_match"] = exact_ok;
      j["chi_square"] = {{"n", verify_n},
                         {"statistic", chi.statistic},
                         {"degrees_of_freedom", chi.degrees_of_freedom},
                         {"p_value", chi.p_value},
                         {"alpha", 0.01},
                         {"passed", chi.passed}};
      j["ledger"] = io::ledger_to_json(led);
      const bool ok = exact_ok && chi.passed && led.all_passed();
      j["passed"] = ok;
      runner.emit(j);
      if (!ok) err << "verification failed\n";
      return ok ? 0 : 1;
    }

    if (demo->parsed()) {
      json j = runner.header("demo " + demo_name);
      j.update(run_demo(demo_name, g.seed, tol));
      runner.emit(j);
      if (!j["passed"].get<bool>()) {
        err << "demo " << demo_name << ": a check failed\n";
        return 1;
      }
      return 0;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::UnknownDemo ? 2 : 1;
  }
  err << app.help();
  return 2;
}

}  // namespace hybridcorr::cli
