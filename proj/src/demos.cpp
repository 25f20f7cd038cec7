#include "hybridcorr/demos.hpp"

#include <cmath>

namespace hybridcorr {

namespace {

using io::json;

class Checks {
 public:
  void add(const std::string& name, bool passed, json detail = json::object()) {
    all_ = all_ && passed;
    list_.push_back(json{{"name", name}, {"passed", passed}, {"detail", std::move(detail)}});
  }
  json finish(json report) const {
    report["checks"] = list_;
    report["passed"] = all_;
    return report;
  }

 private:
  json list_ = json::array();
  bool all_ = true;
};

const std::vector<std::vector<double>>& diag_points() {
  static const std::vector<std::vector<double>> pts{{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 4}};
  return pts;
}

PsdFactorization normalized_edm_witness(const EdmSpec& spec) {
  return edm_psd_factorization(spec, 1.0 / edm(spec).sum());
}

SearchConfig demo_search(std::uint64_t seed, const ToleranceConfig& tol) {
  SearchConfig cfg;
  cfg.seed = seed;
  cfg.tol = tol;
  return cfg;
}

json diag_mix_demo(std::uint64_t seed, const ToleranceConfig& tol) {
  Checks checks;
  const DiagInstance inst = diag_instance(4);
  const int s = 1;
  const int k = 1 << s;

  const CertificationReport cert = certify_block_factorization(inst.target, inst.witness, tol);
  checks.add("closed_form_witness_certified", cert.passed, io::certification_to_json(cert));

  SearchConfig cfg = demo_search(seed, tol);
  cfg.stop_on_success = true;
  const BlockSearchResult found = kblock_factorize(inst.target, k, 4, cfg);
  checks.add("kblock_search_reaches_1e-6", found.residual <= 1e-6,
             {{"residual", found.residual}, {"branches", found.factorization.branch_count()}});

  const int prank_lb = block_prank_lower_bound(inst.target, tol);
  const int lb = kprank_lower_bound(inst.target, k, prank_lb, tol);
  checks.add("kprank_lower_bound_equals_witness", lb == inst.witness.branch_count(),
             {{"prank_lb", prank_lb}, {"kprank_lb", lb}, {"witness_branches", inst.witness.branch_count()}});

  const int bits = hybrid_classical_cost(inst.witness.branch_count());
  checks.add("hybrid_cost_2_bits", bits == 2, {{"bits", bits}});

  const HybridProtocol cq = build_cq_hybrid(inst.witness, s, tol);
  const ResourceLedger cq_ledger = make_ledger(cq, inst.target, tol);
  const double cq_err = l1_distance(exact_distribution(cq), inst.target.matrix());
  checks.add("cq_mixture_equals_target", cq_err <= 1e-9, {{"l1", cq_err}});
  checks.add("cq_ledger_checks", cq_ledger.all_passed(), io::ledger_to_json(cq_ledger));

  const auto [qc, qc_ledger] = build_qc_hybrid(inst.witness, s, tol);
  const double qc_vs_cq = (exact_distribution(qc) - exact_distribution(cq)).cwiseAbs().maxCoeff();
  checks.add("qc_cost_3_bits", qc_ledger.total_classical_bits() == 3,
             {{"stage1", qc_ledger.classical_bits_stage1}, {"locc", qc_ledger.classical_bits_locc}});
  checks.add("qc_mixture_equals_cq", qc_vs_cq <= 1e-9, {{"max_abs_difference", qc_vs_cq}});
  checks.add("qc_ledger_checks", qc_ledger.all_passed(), io::ledger_to_json(qc_ledger));

  return checks.finish(json{{"demo", "eq2-diag"},
                            {"blocks", 4},
                            {"block_points", diag_points()},
                            {"s", s},
                            {"hybrid_bits", bits},
                            {"qc_bits", qc_ledger.total_classical_bits()}});
}

json tensor_square_demo(std::uint64_t seed, const ToleranceConfig& tol) {
  Checks checks;
  const EdmSpec spec = EdmSpec::create({0, 1, 2, 3});
  const Correlation q1 = edm_correlation(spec);
  const Correlation q2 = tensor_power(q1, 2);

  const int rank = numerical_rank(q2.matrix(), tol);
  const int prank_lb = prank_lower_bound(q2, tol);
  checks.add("rank_is_9", rank == 9, {{"rank", rank}});
  checks.add("prank_lb_3_exceeds_2", prank_lb == 3 && prank_lb > 2, {{"prank_lb", prank_lb}});

  const int klb = kprank_lower_bound(q2, 2, prank_lb, tol);
  checks.add("kprank_lb_at_least_log2_n", klb == 3 && klb >= ceil_log2(4), {{"kprank_lb", klb}, {"log2_n", 2}});

  SearchConfig cfg = demo_search(seed, tol);
  cfg.starts = 20;
  const BlockSearchResult single = kblock_factorize(q2, 2, 1, cfg);
  checks.add("single_branch_k2_infeasible", single.residual > 1e-2,
             {{"residual", single.residual}, {"starts", cfg.starts}});

  const PsdFactorization w1 = normalized_edm_witness(spec);
  const PsdFactorization w2 = tensor_compose(w1, w1);
  const double err = l1_distance(reconstruct(w2), q2.matrix());
  checks.add("tensor_witness_side_4", w2.side() == 4 && err <= 1e-10, {{"side", w2.side()}, {"l1", err}});

  return checks.finish(json{{"demo", "q2-tensor"},
                            {"points", spec.points()},
                            {"rank", rank},
                            {"prank_lb", prank_lb},
                            {"prank_ub", w2.side()},
                            {"kprank_lb", {{"2", klb}}}});
}

json tradeoff(const ToleranceConfig& tol) {
  Checks checks;
  const EdmSpec spec = EdmSpec::create({0, 1, 2});
  const Correlation q2 = tensor_power(edm_correlation(spec), 2);
  const PsdFactorization w1 = normalized_edm_witness(spec);
  const PsdFactorization witness = tensor_compose(w1, w1);
  const int rank = numerical_rank(q2.matrix(), tol);
  checks.add("rank_9_witness_4", rank == 9 && witness.side() == 4,
             {{"rank", rank}, {"witness_side", witness.side()}});

  const TBounds t = t_bounds(q2, witness.side(), tol);
  checks.add("t_bounds_1_2", t.lower == 1 && t.upper == 2, {{"t_lb", t.lower}, {"t_ub", t.upper}});
  checks.add("tradeoff_s1_c1_fails", !tradeoff_check(1, 1, q2, tol));
  checks.add("tradeoff_s2_c0_holds", tradeoff_check(2, 0, q2, tol));

  // The purely quantum protocol: one branch, s = ceil(log2 4) = 2, c = 0.
  const BlockPsdFactorization single{witness.side(), {1.0}, {witness}};
  const HybridProtocol h = build_cq_hybrid(single, 2, tol);
  const ResourceLedger led = make_ledger(h, q2, tol);
  const double err = l1_distance(exact_distribution(h), q2.matrix());
  checks.add("quantum_protocol_exact", err <= 1e-8, {{"l1", err}});
  checks.add("ledger_checks", led.all_passed(), io::ledger_to_json(led));

  return checks.finish(json{{"demo", "tradeoff"},
                            {"rank", rank},
                            {"prank_witness", witness.side()},
                            {"t_lb", t.lower},
                            {"t_ub", t.upper}});
}

}  // namespace

DiagInstance diag_instance(int blocks) {
  const auto& pts = diag_points();
  if (blocks < 1 || blocks > static_cast<int>(pts.size())) {
    throw Error(ErrorCode::InvalidArgument, "diag instance supports 1 to 4 blocks");
  }
  std::vector<Correlation> parts;
  std::vector<PsdFactorization> witnesses;
  for (int i = 0; i < blocks; ++i) {
    const EdmSpec spec = EdmSpec::create(pts[i]);
    parts.push_back(edm_correlation(spec));
    witnesses.push_back(normalized_edm_witness(spec));
  }
  const std::vector<double> weights(static_cast<std::size_t>(blocks), 1.0 / blocks);
  Correlation target = block_diagonal_mix(parts, weights);

  BlockPsdFactorization bf;
  bf.block_size = 2;
  Eigen::Index row_offset = 0;
  Eigen::Index col_offset = 0;
  for (int i = 0; i < blocks; ++i) {
    const PsdFactorization& w = witnesses[i];
    PsdFactorization branch;
    branch.row_factors.assign(static_cast<std::size_t>(target.rows()), Matrix::Zero(2, 2));
    branch.col_factors.assign(static_cast<std::size_t>(target.cols()), Matrix::Zero(2, 2));
    for (Eigen::Index x = 0; x < w.rows(); ++x) branch.row_factors[row_offset + x] = w.row_factors[x];
    for (Eigen::Index y = 0; y < w.cols(); ++y) branch.col_factors[col_offset + y] = w.col_factors[y];
    row_offset += w.rows();
    col_offset += w.cols();
    bf.weights.push_back(weights[i]);
    bf.branches.push_back(std::move(branch));
  }
  return DiagInstance{std::move(target), std::move(bf)};
}

PsdFactorization epr_factorization() {
  PsdFactorization f;
  for (int i = 0; i < 2; ++i) {
    Matrix e = Matrix::Zero(2, 2);
    e(i, i) = 1.0;
    f.row_factors.push_back(e);
    f.col_factors.push_back(0.5 * e);
  }
  return f;
}

PsdFactorization edm3_factorization() { return normalized_edm_witness(EdmSpec::create({0, 1, 2})); }

std::vector<std::string> demo_names() { return {"eq2-diag", "q2-tensor", "tradeoff"}; }

io::json run_demo(const std::string& name, std::uint64_t seed, const ToleranceConfig& tol) {
  tol.validate();
  if (name == "eq2-diag") return diag_mix_demo(seed, tol);
  if (name == "q2-tensor") return tensor_square_demo(seed, tol);
  if (name == "tradeoff") return tradeoff(tol);
  throw Error(ErrorCode::UnknownDemo, "unknown demo '" + name + "'");
}

}  // namespace hybridcorr
