#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

#include "hybridcorr/bounds.hpp"
#include "hybridcorr/factorization.hpp"
#include "hybridcorr/partitions.hpp"
#include "hybridcorr/protocols.hpp"

namespace hybridcorr::io {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// Matrices: {"rows": n, "cols": m, "entries": [row-major]} or plain CSV rows.
// Readers throw ParseError on malformed input and NonFinite on NaN/inf.
json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const json& j);
std::string matrix_to_csv(const Matrix& m);
Matrix matrix_from_csv(const std::string& text);

/// Dispatches on the extension: ".csv" is CSV, anything else JSON.
Matrix read_matrix_file(const std::string& path);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

json tolerances_to_json(const ToleranceConfig& cfg);

// Factorizations: {"k", "r", "weights", "branches": [{"row_factors", "col_factors"}]}.
// A plain PSD factorization is the single-branch case with k = r.
json factorization_to_json(const PsdFactorization& f);
json factorization_to_json(const BlockPsdFactorization& bf);
BlockPsdFactorization block_factorization_from_json(const json& j);

json certification_to_json(const CertificationReport& rep);
json bounds_to_json(const BoundsReport& rep);
/// Flat "quantity,k,value" table.
std::string bounds_to_csv(const BoundsReport& rep);

json partition_to_json(const PartitionResult& res);

json seed_protocol_to_json(const QuantumSeedProtocol& p);
QuantumSeedProtocol seed_protocol_from_json(const json& j);
json hybrid_to_json(const HybridProtocol& h);
HybridProtocol hybrid_from_json(const json& j);
json ledger_to_json(const ResourceLedger& led);

/// Header "x,y", one pair per line.
std::string samples_to_csv(const std::vector<Sample>& samples);

}  // namespace hybridcorr::io
