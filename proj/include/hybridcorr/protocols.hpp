#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hybridcorr/factorization.hpp"

namespace hybridcorr {

/// Shared pure state on C^r (x) C^r plus one local POVM per party.
struct QuantumSeedProtocol {
  int r = 1;
  Vector state;                     // amplitude of e_i (x) e_j at i * r + j
  std::vector<Matrix> alice_povm;   // E_x
  std::vector<Matrix> bob_povm;     // F_y

  /// ceil(log2 r) qubits per side.
  int seed_qubits() const;
  /// Norm, PSD and completeness (sums equal a projector within 1e-9) checks;
  /// throws InvariantViolation.
  void validate(const ToleranceConfig& cfg = {}) const;
};

/// From a factorization P(x, y) = tr(C_x D_y): with G = sum D_y and
/// S = sum G^1/2 C_x G^1/2, the state is vec(S^1/2), E_x = S^-1/2 G^1/2 C_x
/// G^1/2 S^-1/2 and F_y = G^-1/2 D_y G^-1/2 (pseudo-inverses on the support).
QuantumSeedProtocol build_seed_protocol(const PsdFactorization& f, const ToleranceConfig& cfg = {});

/// Born rule: entry (x, y) = <psi| E_x (x) F_y |psi>.
Matrix exact_distribution(const QuantumSeedProtocol& proto);

using Sample = std::pair<int, int>;

/// Inverse-CDF sampling over the row-major flattened distribution. Draw i
/// uses the second uniform of uniform_pair(seed, 0, i).
std::vector<Sample> sample_distribution(const Matrix& dist, std::uint64_t seed, std::uint64_t n);
std::vector<Sample> sample(const QuantumSeedProtocol& proto, std::uint64_t seed, std::uint64_t n);

enum class HybridMode { ClassicalQuantum, QuantumClassical };

std::string to_string(HybridMode m);

struct HybridProtocol {
  HybridMode mode = HybridMode::ClassicalQuantum;
  std::vector<double> weights;
  std::vector<QuantumSeedProtocol> branches;
  int capability = 0;       // s, qubits per side
  int classical_bits = 0;   // c = ceil(log2 branches)

  /// Throws InvariantViolation on a broken weight vector, a branch larger
  /// than the capability or a wrong c.
  void validate() const;
};

struct BoundCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ResourceLedger {
  int qubits_used = 0;
  int classical_bits_stage1 = 0;
  int classical_bits_locc = 0;          // charged at the worst case 2^s - 1 in qc mode
  std::vector<BoundCheck> bound_checks;

  int total_classical_bits() const noexcept { return classical_bits_stage1 + classical_bits_locc; }
  bool all_passed() const noexcept;
};

/// One seed protocol per branch; requires block size <= 2^s.
HybridProtocol build_cq_hybrid(const BlockPsdFactorization& bf, int s, const ToleranceConfig& cfg = {});

/// Sum_i p_i exact_distribution(branch_i).
Matrix exact_distribution(const HybridProtocol& h);

/// Evaluates the ledger's named checks against `target`.
ResourceLedger make_ledger(const HybridProtocol& h, const Correlation& target, const ToleranceConfig& cfg = {});

/// Per draw i, (u0, u1) = uniform_pair(seed, 0, i): u0 picks the branch,
/// u1 the outcome inside it. When `target` is absent the ledger is checked
/// against the protocol's own exact distribution.
std::pair<std::vector<Sample>, ResourceLedger> simulate_hybrid(const HybridProtocol& h, std::uint64_t seed,
                                                               std::uint64_t n,
                                                               const std::optional<Correlation>& target = {},
                                                               const ToleranceConfig& cfg = {});

struct SchmidtVector {
  std::vector<double> values;  // non-increasing, sums to 1
};

SchmidtVector schmidt_vector(const Vector& state, int dim_a, int dim_b);

/// Uniform vector of length 2^s.
SchmidtVector epr_schmidt_vector(int s);

/// Prefix sums of lhs never exceed those of rhs (tolerance 1e-12) and the
/// totals agree. Shorter vectors are zero padded.
bool majorizes(const SchmidtVector& lhs, const SchmidtVector& rhs);

/// Seed protocols as in build_cq_hybrid, after checking that s EPR pairs
/// convert into every branch state; the conversion itself is simulated by
/// using the branch state directly.
std::pair<HybridProtocol, ResourceLedger> build_qc_hybrid(const BlockPsdFactorization& bf, int s,
                                                          const ToleranceConfig& cfg = {});

struct ChiSquareResult {
  double statistic = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 0.0;
  bool passed = false;
  bool impossible_outcome = false;  // a sample landed on a zero-probability cell
};

/// Pearson goodness of fit; cells with expected count below 5 are pooled.
ChiSquareResult chi_square_test(const Matrix& dist, const std::vector<Sample>& samples, double alpha = 0.01);

/// Total variation distance between the empirical and exact distributions.
double empirical_tv_distance(const Matrix& dist, const std::vector<Sample>& samples);

}  // namespace hybridcorr
