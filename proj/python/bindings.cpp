#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "hybridcorr/bounds.hpp"
#include "hybridcorr/cli.hpp"
#include "hybridcorr/demos.hpp"
#include "hybridcorr/io.hpp"
#include "hybridcorr/partitions.hpp"
#include "hybridcorr/protocols.hpp"

namespace py = pybind11;
using namespace hybridcorr;
using io::json;

namespace {

ToleranceConfig tolerances(double residual_tol, double eps) {
  ToleranceConfig t;
  t.residual_tol = residual_tol;
  t.l1_eps = eps;
  t.validate();
  return t;
}

SearchConfig search(std::uint64_t seed, int starts, int max_iters, const ToleranceConfig& tol) {
  SearchConfig cfg;
  cfg.seed = seed;
  cfg.starts = starts;
  cfg.max_iters = max_iters;
  cfg.tol = tol;
  return cfg;
}

Correlation as_correlation(const Matrix& m) { return Correlation::from_matrix(m); }

Matrix samples_array(const std::vector<Sample>& samples) {
  Matrix out(static_cast<Eigen::Index>(samples.size()), 2);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out(static_cast<Eigen::Index>(i), 0) = samples[i].first;
    out(static_cast<Eigen::Index>(i), 1) = samples[i].second;
  }
  return out;
}

std::vector<Sample> samples_from(const Eigen::Matrix<int, Eigen::Dynamic, 2, Eigen::RowMajor>& a) {
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(a.rows()));
  for (Eigen::Index i = 0; i < a.rows(); ++i) out.emplace_back(a(i, 0), a(i, 1));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hybrid classical/quantum correlation toolkit";

  static py::exception<Error> error(m, "Error", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (std::string(to_string(e.code())) + ": " + e.what()).c_str());
    }
  });

  m.attr("SCHEMA_VERSION") = io::kSchemaVersion;

  m.def("normalize_to_correlation", [](const Matrix& a) { return normalize_to_correlation(a).matrix(); });
  m.def("l1_distance", &l1_distance);
  m.def("numerical_rank", [](const Matrix& a) { return numerical_rank(a); });
  m.def("is_psd", [](const Matrix& a) { return is_psd(a); });

  m.def("edm", [](std::vector<double> points) { return edm(EdmSpec::create(std::move(points))); });
  m.def("edm_correlation",
        [](std::vector<double> points) { return edm_correlation(EdmSpec::create(std::move(points))).matrix(); });
  m.def("tensor_power", [](const Matrix& p, int k) { return tensor_power(as_correlation(p), k).matrix(); });
  m.def("block_diagonal_mix", [](const std::vector<Matrix>& parts, const std::vector<double>& weights) {
    std::vector<Correlation> cs;
    for (const auto& p : parts) cs.push_back(as_correlation(p));
    return block_diagonal_mix(cs, weights).matrix();
  });
  m.def("inner_product_squared_matrix", [](int n) { return inner_product_squared_matrix(n); });

  m.def(
      "psd_factorize_json",
      [](const Matrix& p, int r, std::uint64_t seed, int starts, int max_iters, double residual_tol, double eps) {
        const ToleranceConfig tol = tolerances(residual_tol, eps);
        const PsdSearchResult res = psd_factorize(as_correlation(p), r, search(seed, starts, max_iters, tol));
        json j{{"residual", res.residual}, {"factorization", io::factorization_to_json(res.factorization)}};
        return j.dump();
      },
      py::arg("p"), py::arg("r"), py::arg("seed") = 0, py::arg("starts") = 20, py::arg("max_iters") = 5000,
      py::arg("residual_tol") = 1e-8, py::arg("eps") = 0.0);
  m.def(
      "kblock_factorize_json",
      [](const Matrix& p, int k, int r, std::uint64_t seed, int starts, int max_iters, double residual_tol,
         double eps) {
        const ToleranceConfig tol = tolerances(residual_tol, eps);
        SearchConfig cfg = search(seed, starts, max_iters, tol);
        cfg.stop_on_success = true;
        const BlockSearchResult res = kblock_factorize(as_correlation(p), k, r, cfg);
        json j{{"residual", res.residual}, {"factorization", io::factorization_to_json(res.factorization)}};
        return j.dump();
      },
      py::arg("p"), py::arg("k"), py::arg("r"), py::arg("seed") = 0, py::arg("starts") = 20,
      py::arg("max_iters") = 5000, py::arg("residual_tol") = 1e-8, py::arg("eps") = 0.0);
  m.def(
      "nmf",
      [](const Matrix& p, int r, std::uint64_t seed, int starts, int max_iters) {
        const NmfResult res = nmf(as_correlation(p), r, search(seed, starts, max_iters, {}));
        return py::make_tuple(res.w, res.h, res.residual);
      },
      py::arg("p"), py::arg("r"), py::arg("seed") = 0, py::arg("starts") = 20, py::arg("max_iters") = 5000);
  m.def("certify_json", [](const Matrix& p, const std::string& factorization, double residual_tol, double eps) {
    const BlockPsdFactorization bf = io::block_factorization_from_json(json::parse(factorization));
    return io::certification_to_json(certify_block_factorization(as_correlation(p), bf, tolerances(residual_tol, eps)))
        .dump();
  });

  m.def("prank_lower_bound", [](const Matrix& p) { return prank_lower_bound(as_correlation(p)); });
  m.def("kprank_lower_bound", [](const Matrix& p, int k) {
    const Correlation c = as_correlation(p);
    return kprank_lower_bound(c, k, block_prank_lower_bound(c));
  });
  m.def("hybrid_classical_cost", &hybrid_classical_cost);
  m.def("qc_hybrid_cost_upper", &qc_hybrid_cost_upper);
  m.def("tradeoff_check", [](int s, int c, const Matrix& p) { return tradeoff_check(s, c, as_correlation(p)); });
  m.def("t_bounds", [](int rank, int prank_estimate) {
    const TBounds t = t_bounds_from_ranks(rank, prank_estimate);
    return py::make_tuple(t.lower, t.upper);
  });
  m.def(
      "bounds_report_json",
      [](const Matrix& p, std::vector<int> ks, std::uint64_t seed, int starts) {
        BoundsBudget budget;
        budget.block_sizes = std::move(ks);
        budget.search.seed = seed;
        budget.search.starts = starts;
        return io::bounds_to_json(bounds_report(as_correlation(p), budget)).dump();
      },
      py::arg("p"), py::arg("ks") = std::vector<int>{2}, py::arg("seed") = 0, py::arg("starts") = 20);

  m.def(
      "k_partition_json",
      [](const Matrix& p, int k, bool exact) {
        const Correlation c = as_correlation(p);
        const PartitionResult r = exact ? k_partition_exact(c, k) : k_partition_greedy(c, k);
        return io::partition_to_json(r).dump();
      },
      py::arg("p"), py::arg("k"), py::arg("exact") = true);

  m.def(
      "build_hybrid_json",
      [](const std::string& factorization, const std::string& mode, int s) {
        const BlockPsdFactorization bf = io::block_factorization_from_json(json::parse(factorization));
        if (mode == "cq") return io::hybrid_to_json(build_cq_hybrid(bf, s)).dump();
        if (mode == "qc") {
          const auto [h, ledger] = build_qc_hybrid(bf, s);
          json j = io::hybrid_to_json(h);
          j["ledger"] = io::ledger_to_json(ledger);
          return j.dump();
        }
        throw Error(ErrorCode::InvalidArgument, "mode must be 'cq' or 'qc'");
      },
      py::arg("factorization"), py::arg("mode") = "cq", py::arg("s") = 1);
  m.def("hybrid_distribution", [](const std::string& proto) {
    return exact_distribution(io::hybrid_from_json(json::parse(proto)));
  });
  m.def(
      "simulate_hybrid",
      [](const std::string& proto, std::uint64_t seed, std::uint64_t n) {
        const HybridProtocol h = io::hybrid_from_json(json::parse(proto));
        auto [samples, ledger] = simulate_hybrid(h, seed, n);
        return py::make_tuple(samples_array(samples), io::ledger_to_json(ledger).dump());
      },
      py::arg("proto"), py::arg("seed"), py::arg("n"));
  m.def("sample_distribution", [](const Matrix& dist, std::uint64_t seed, std::uint64_t n) {
    return samples_array(sample_distribution(dist, seed, n));
  });
  m.def(
      "chi_square_test",
      [](const Matrix& dist, const Eigen::Matrix<int, Eigen::Dynamic, 2, Eigen::RowMajor>& samples, double alpha) {
        const ChiSquareResult r = chi_square_test(dist, samples_from(samples), alpha);
        return py::dict(py::arg("statistic") = r.statistic, py::arg("degrees_of_freedom") = r.degrees_of_freedom,
                        py::arg("p_value") = r.p_value, py::arg("passed") = r.passed,
                        py::arg("impossible_outcome") = r.impossible_outcome);
      },
      py::arg("dist"), py::arg("samples"), py::arg("alpha") = 0.01);

  m.def("schmidt_vector",
        [](const Vector& state, int da, int db) { return schmidt_vector(state, da, db).values; });
  m.def("is_majorized_by", [](std::vector<double> lhs, std::vector<double> rhs) {
    return majorizes(SchmidtVector{std::move(lhs)}, SchmidtVector{std::move(rhs)});
  });

  m.def("demo_names", &demo_names);
  m.def(
      "demo_json", [](const std::string& name, std::uint64_t seed) { return run_demo(name, seed).dump(); },
      py::arg("name"), py::arg("seed") = 0);

  m.def("cli_run", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  });
}
