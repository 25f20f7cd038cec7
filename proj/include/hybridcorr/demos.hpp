#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hybridcorr/io.hpp"

namespace hybridcorr {

/// Four EDM correlations on three points each, mixed uniformly on the
/// diagonal, with their closed-form side-2 witnesses as a 2-block
/// factorization.
struct DiagInstance {
  Correlation target;
  BlockPsdFactorization witness;
};
DiagInstance diag_instance(int blocks = 4);

/// The EPR example [[1/2, 0], [0, 1/2]] with its diagonal factorization.
PsdFactorization epr_factorization();

/// edm_correlation(0, 1, 2) with its normalized closed-form witness.
PsdFactorization edm3_factorization();

std::vector<std::string> demo_names();

/// Runs a named scenario at fixed seeds. The report lists every inline
/// check under "checks" and sets "passed". Throws UnknownDemo.
io::json run_demo(const std::string& name, std::uint64_t seed, const ToleranceConfig& tol = {});

}  // namespace hybridcorr
