// Acceptance suite: one PASS/FAIL line per criterion, exit code 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <unistd.h>

#include "hybridcorr/bounds.hpp"
#include "hybridcorr/cli.hpp"
#include "hybridcorr/demos.hpp"
#include "hybridcorr/io.hpp"
#include "hybridcorr/partitions.hpp"
#include "hybridcorr/protocols.hpp"
#include "oracles.hpp"

using namespace hybridcorr;

namespace {

struct Outcome {
  bool passed = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (!passed) detail << "; ";
      passed = false;
      detail << "failed: " << what;
    }
  }
};

int failures = 0;

void criterion(int id, const std::string& title, double time_limit, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.require(false, std::string("exception: ") + e.what());
  }
  const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (time_limit > 0 && sec > time_limit) {
    std::ostringstream os;
    os << "runtime " << sec << " s over " << time_limit << " s";
    o.require(false, os.str());
  }
  failures += !o.passed;
  std::printf("[%s] %2d %s (%.2f s)%s%s\n", o.passed ? "PASS" : "FAIL", id, title.c_str(), sec,
              o.detail.str().empty() ? "" : ": ", o.detail.str().c_str());
  std::fflush(stdout);
}

PsdFactorization planted_factorization(std::mt19937_64& gen, int n, int m, int r) {
  std::uniform_int_distribution<int> rank_pick(1, r);
  PsdFactorization f;
  for (int x = 0; x < n; ++x) f.row_factors.push_back(oracle::random_psd(gen, r, rank_pick(gen)));
  for (int y = 0; y < m; ++y) f.col_factors.push_back(oracle::random_psd(gen, r, rank_pick(gen)));
  const double total = reconstruct(f).sum();
  for (auto& c : f.row_factors) c /= total;
  return f;
}

Correlation q2(int n) {
  std::vector<double> pts;
  for (int i = 0; i < n; ++i) pts.push_back(i);
  return tensor_power(edm_correlation(EdmSpec::create(pts)), 2);
}

std::string check_summary(const ResourceLedger& led) {
  std::string s;
  for (const auto& c : led.bound_checks) s += (s.empty() ? "" : ",") + c.name + (c.passed ? "=ok" : "=FAIL");
  return s;
}

}  // namespace

int main() {
  const ToleranceConfig tol;
  const DiagInstance diag = diag_instance(4);

  criterion(1, "seed-protocol exactness on 25 planted factorizations", 10.0, [](Outcome& o) {
    std::mt19937_64 gen(1);
    std::uniform_int_distribution<int> dim(1, 8), side(1, 4);
    double worst = 0.0;
    for (int t = 0; t < 25; ++t) {
      const PsdFactorization f = planted_factorization(gen, dim(gen), dim(gen), side(gen));
      const double err = l1_distance(exact_distribution(build_seed_protocol(f)), reconstruct(f));
      worst = std::max(worst, err);
    }
    o.detail << "max L1 " << worst;
    o.require(worst <= 1e-8, "L1 <= 1e-8");
  });

  criterion(2, "EDM closed-form witnesses on 100 point sets", 5.0, [](Outcome& o) {
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> pt(-100, 100);
    std::uniform_int_distribution<int> size(2, 8);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      std::vector<double> pts;
      const int n = size(gen);
      while (static_cast<int>(pts.size()) < n) {
        const double c = pt(gen);
        if (std::none_of(pts.begin(), pts.end(), [c](double d) { return std::abs(c - d) < 1e-6; })) pts.push_back(c);
      }
      const EdmSpec spec = EdmSpec::create(pts);
      const PsdFactorization f = edm_psd_factorization(spec, 1.0 / edm(spec).sum());
      o.require(f.side() == 2, "side 2");
      worst = std::max(worst, l1_distance(reconstruct(f), edm_correlation(spec).matrix()));
    }
    o.detail << "max L1 " << worst;
    o.require(worst <= 1e-10, "L1 <= 1e-10");
  });

  HybridProtocol cq;
  criterion(3, "block-diagonal EDM family: k=2, r=4, s=1 costs", 60.0, [&](Outcome& o) {
    SearchConfig cfg;
    cfg.seed = 3;
    cfg.stop_on_success = true;
    const BlockSearchResult found = kblock_factorize(diag.target, 2, 4, cfg);
    const int lb = kprank_lower_bound(diag.target, 2, block_prank_lower_bound(diag.target, tol), tol);
    const int bits = hybrid_classical_cost(4);
    o.detail << "kblock residual " << found.residual << ", branches " << found.factorization.branch_count()
             << ", kprank_lb " << lb << ", bits " << bits;
    o.require(found.residual <= 1e-6, "residual <= 1e-6");
    o.require(found.factorization.branch_count() <= 4, "at most 4 branches");
    o.require(lb == 4, "kprank_lb == 4");
    o.require(lb == found.factorization.branch_count(), "bound equals witness");
    o.require(bits == 2, "2 bits");
    cq = build_cq_hybrid(diag.witness, 1, tol);
    o.require(cq.classical_bits == 2, "protocol c == 2");
  });

  HybridProtocol qc;
  ResourceLedger qc_ledger;
  criterion(4, "quantum-classical accounting on the same instance", 0.0, [&](Outcome& o) {
    std::tie(qc, qc_ledger) = build_qc_hybrid(diag.witness, 1, tol);
    const double diff = (exact_distribution(qc) - exact_distribution(cq)).cwiseAbs().maxCoeff();
    o.detail << "bits " << qc_ledger.classical_bits_stage1 << " + " << qc_ledger.classical_bits_locc
             << ", max |qc - cq| " << diff;
    o.require(qc_ledger.total_classical_bits() == 3, "3 classical bits");
    o.require(diff <= 1e-9, "mixtures agree within 1e-9");
  });

  HybridProtocol tensor_proto;
  criterion(5, "tensor-square EDM (n=4) small-instance consistency", 120.0, [&](Outcome& o) {
    const Correlation q = q2(4);
    const int plb = prank_lower_bound(q, tol);
    SearchConfig cfg;
    cfg.seed = 5;
    cfg.starts = 20;
    const BlockSearchResult single = kblock_factorize(q, 2, 1, cfg);
    const int klb = kprank_lower_bound(q, 2, plb, tol);
    o.detail << "prank_lb " << plb << ", r=1 residual " << single.residual << ", kprank_lb " << klb;
    o.require(plb == 3, "prank_lb == 3 > 2");
    o.require(single.residual > 1e-2, "r=1 residual > 1e-2");
    o.require(klb == 3 && klb >= ceil_log2(4), "kprank_lb == 3 >= log2 4");
    // The side-4 tensor witness as a single-branch protocol at s = 2.
    const EdmSpec spec = EdmSpec::create({0, 1, 2, 3});
    const PsdFactorization w = edm_psd_factorization(spec, 1.0 / edm(spec).sum());
    tensor_proto = build_cq_hybrid(BlockPsdFactorization{4, {1.0}, {tensor_compose(w, w)}}, 2, tol);
    o.require(l1_distance(exact_distribution(tensor_proto), q.matrix()) <= 1e-8, "s=2 protocol exact");
  });

  criterion(6, "every corpus partition certifies a block factorization", 0.0, [&](Outcome& o) {
    struct Item {
      std::string name;
      Correlation p;
      int k;
      bool exact;
    };
    std::vector<Item> corpus;
    for (int b = 2; b <= 4; ++b)
      for (bool ex : {true, false}) corpus.push_back({"diag" + std::to_string(b), diag_instance(b).target, 2, ex});
    for (int n : {3, 4}) corpus.push_back({"identity", normalize_to_correlation(Matrix::Identity(n, n)), 1, true});
    for (int k : {1, 2})
      for (bool ex : {true, false})
        corpus.push_back({"edm4", edm_correlation(EdmSpec::create({0, 1, 3, 7})), k, ex});
    for (int k : {2, 3})
      for (bool ex : {true, false}) corpus.push_back({"q2n3", q2(3), k, ex});
    for (int k : {2, 3}) corpus.push_back({"q2n4", q2(4), k, false});
    std::mt19937_64 gen(6);
    std::uniform_real_distribution<double> u(0, 1);
    for (int t = 0; t < 10; ++t) {
      Matrix m(4, 5);
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(gen) < 0.5 ? 0.0 : u(gen);
      m(0, 0) = 1.0;
      for (int k = 1; k <= 2; ++k) corpus.push_back({"random", normalize_to_correlation(m), k, t % 2 == 0});
    }
    ToleranceConfig loose;
    loose.l1_eps = 1e-6;
    double worst = 0.0;
    for (const Item& item : corpus) {
      const PartitionResult r = item.exact ? k_partition_exact(item.p, item.k) : k_partition_greedy(item.p, item.k);
      const BlockPsdFactorization bf = partition_to_block_factorization(item.p, r, item.k);
      const CertificationReport cert = certify_block_factorization(item.p, bf, loose);
      worst = std::max(worst, cert.l1_residual);
      o.require(validate_partition(item.p, r.partition).valid, item.name + " partition valid");
      o.require(cert.passed && cert.l1_residual <= 1e-6, item.name + " certified");
      o.require(bf.branch_count() == r.partition.size(), item.name + " r == partition size");
      o.require(bf.block_size == item.k, item.name + " block size");
    }
    o.detail << corpus.size() << " partitions, max L1 " << worst;
  });

  criterion(7, "exact partition optima", 0.0, [](Outcome& o) {
    const PartitionResult two = k_partition_exact(diag_instance(2).target, 2);
    const Correlation id = normalize_to_correlation(Matrix::Identity(4, 4));
    const PartitionResult four = k_partition_exact(id, 1);
    std::vector<std::vector<int>> nz(4, std::vector<int>(4, 0));
    for (int i = 0; i < 4; ++i) nz[i][i] = 1;
    const int brute = oracle::min_partition_brute_force(nz, [&](const std::vector<int>& rs, const std::vector<int>& cs) {
      Matrix sub(rs.size(), cs.size());
      for (std::size_t i = 0; i < rs.size(); ++i)
        for (std::size_t j = 0; j < cs.size(); ++j) sub(i, j) = id(rs[i], cs[j]);
      return oracle::rank_by_elimination(sub) <= 1;
    });
    o.detail << "diag2 k=2 size " << two.partition.size() << ", 4x4 diagonal k=1 size " << four.partition.size()
             << " (brute force " << brute << ")";
    o.require(two.partition.size() == 2 && two.optimal, "diag2 size 2");
    o.require(four.partition.size() == 4 && four.optimal, "diagonal size 4");
    o.require(brute == 4, "brute force agrees");
  });

  criterion(8, "tradeoff ledger checks and t bounds", 0.0, [&](Outcome& o) {
    const ResourceLedger cq_led = make_ledger(cq, diag.target, tol);
    const ResourceLedger qc_led = make_ledger(qc, diag.target, tol);
    const ResourceLedger t_led = make_ledger(tensor_proto, q2(4), tol);
    o.require(cq_led.all_passed(), "cq ledger " + check_summary(cq_led));
    o.require(qc_led.all_passed() && qc_ledger.all_passed(), "qc ledger " + check_summary(qc_led));
    o.require(t_led.all_passed(), "tensor ledger " + check_summary(t_led));
    o.require(tradeoff_check(1, 2, diag.target, tol), "cq tradeoff");
    o.require(tradeoff_check(1, 3, diag.target, tol), "qc tradeoff");
    o.require(tradeoff_check(2, 0, q2(4), tol), "tensor tradeoff");
    const TBounds t = t_bounds(q2(3), 4, tol);
    o.detail << "ledgers [" << check_summary(cq_led) << "], t = (" << t.lower << ", " << t.upper << ")";
    o.require(t.lower == 1 && t.upper == 2, "t bounds (1, 2)");
  });

  criterion(9, "uniform Schmidt vector majorized by 3 x 10^4 random states", 10.0, [](Outcome& o) {
    std::mt19937_64 gen(9);
    int violations = 0;
    for (int s = 1; s <= 3; ++s) {
      const int d = 1 << s;
      const SchmidtVector uniform = epr_schmidt_vector(s);
      for (int t = 0; t < 10000; ++t)
        violations += !majorizes(uniform, schmidt_vector(oracle::random_unit(gen, d * d), d, d));
    }
    o.require(violations == 0, std::to_string(violations) + " violations");
    o.require(majorizes({{0.25, 0.25, 0.25, 0.25}}, {{0.5, 0.5, 0.0, 0.0}}), "hand example 1");
    o.require(majorizes({{0.5, 0.5}}, {{0.5, 0.5}}), "hand example 2");
    o.require(!majorizes({{0.6, 0.4}}, {{0.5, 0.5}}), "hand example 3");
    o.detail << violations << " violations";
  });

  criterion(10, "chi-square at 0.01 over 100 seeds x 10^6 samples, byte-identical replay", 0.0, [&](Outcome& o) {
    const QuantumSeedProtocol epr = build_seed_protocol(epr_factorization(), tol);
    const QuantumSeedProtocol edm3 = build_seed_protocol(edm3_factorization(), tol);
    const Matrix epr_dist = exact_distribution(epr);
    const Matrix edm_dist = exact_distribution(edm3);
    const Matrix diag_dist = exact_distribution(cq);
    int pass_epr = 0, pass_edm = 0, pass_diag = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      pass_epr += chi_square_test(epr_dist, sample(epr, seed, 1000000)).passed;
      pass_edm += chi_square_test(edm_dist, sample(edm3, seed, 1000000)).passed;
      pass_diag += chi_square_test(diag_dist, simulate_hybrid(cq, seed, 1000000, diag.target, tol).first).passed;
    }
    o.detail << "passing seeds: EPR " << pass_epr << ", EDM " << pass_edm << ", diag " << pass_diag;
    o.require(pass_epr >= 95, "EPR >= 95");
    o.require(pass_edm >= 95, "EDM >= 95");
    o.require(pass_diag >= 95, "diag >= 95");

    // Sample files written twice through the command line must match byte for byte.
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / ("hybridcorr_accept_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const std::string bf = (dir / "bf.json").string();
    const std::string proto = (dir / "h.json").string();
    io::write_text_file(bf, io::factorization_to_json(diag.witness).dump());
    std::ostringstream sink, err;
    bool cli_ok = cli::run({"protocol", "build", "--factorization", bf, "--mode", "cq", "--s", "1", "--out", proto},
                           sink, err) == 0;
    std::string files[2];
    for (int i = 0; i < 2; ++i) {
      const std::string path = (dir / ("samples" + std::to_string(i) + ".csv")).string();
      cli_ok = cli_ok && cli::run({"protocol", "simulate", "--proto", proto, "--n", "1000000", "--seed", "42", "--out", path},
                                  sink, err) == 0;
      files[i] = cli_ok ? io::read_text_file(path) : std::string();
    }
    fs::remove_all(dir);
    o.require(cli_ok, "cli runs: " + err.str());
    o.require(!files[0].empty() && files[0] == files[1], "byte-identical sample files");
    o.detail << ", sample file " << files[0].size() << " bytes identical";
  });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
