#include "hybridcorr/io.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace hybridcorr::io {

namespace {

[[noreturn]] void parse_error(const std::string& what) { throw Error(ErrorCode::ParseError, what); }

double number(const json& j, const char* what) {
  if (!j.is_number()) parse_error(std::string(what) + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, std::string(what) + " is not finite");
  return v;
}

int integer(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number_integer()) parse_error(std::string("missing integer field ") + key);
  return j.at(key).get<int>();
}

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) parse_error(std::string("missing field ") + key);
  return j.at(key);
}

// Square factors are stored as nested row arrays.
json nested(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix from_nested(const json& j) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) parse_error("expected a nested array matrix");
  const auto n = static_cast<Eigen::Index>(j.size());
  const auto m = static_cast<Eigen::Index>(j.front().size());
  Matrix out(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const json& row = j.at(static_cast<std::size_t>(i));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != m) parse_error("ragged nested matrix");
    for (Eigen::Index k = 0; k < m; ++k) out(i, k) = number(row.at(static_cast<std::size_t>(k)), "matrix entry");
  }
  return out;
}

json factor_list(const std::vector<Matrix>& fs) {
  json out = json::array();
  for (const auto& f : fs) out.push_back(nested(f));
  return out;
}

std::vector<Matrix> factor_list_from(const json& j) {
  if (!j.is_array()) parse_error("expected a list of factors");
  std::vector<Matrix> out;
  for (const auto& f : j) out.push_back(from_nested(f));
  return out;
}

}  // namespace

json matrix_to_json(const Matrix& m) {
  json entries = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) entries.push_back(m(i, j));
  return json{{"schema_version", kSchemaVersion}, {"rows", m.rows()}, {"cols", m.cols()}, {"entries", entries}};
}

Matrix matrix_from_json(const json& j) {
  const int rows = integer(j, "rows");
  const int cols = integer(j, "cols");
  if (rows < 1 || cols < 1) parse_error("rows and cols must be positive");
  const json& entries = field(j, "entries");
  if (!entries.is_array() || entries.size() != static_cast<std::size_t>(rows) * cols) {
    parse_error("entries length differs from rows * cols");
  }
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int k = 0; k < cols; ++k) m(i, k) = number(entries[static_cast<std::size_t>(i) * cols + k], "matrix entry");
  return m;
}

std::string matrix_to_csv(const Matrix& m) {
  std::ostringstream os;
  os.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << m(i, j);
    }
    os << '\n';
  }
  return os.str();
}

Matrix matrix_from_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      const char* begin = cell.c_str();
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      while (end && (*end == ' ' || *end == '\t')) ++end;
      if (end == begin || (end && *end != '\0')) parse_error("bad CSV cell '" + cell + "'");
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "CSV cell is not finite");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) parse_error("ragged CSV rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().empty()) parse_error("empty CSV matrix");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k) m(i, k) = rows[i][k];
  return m;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
  out << text;
}

Matrix read_matrix_file(const std::string& path) {
  const std::string text = read_text_file(path);
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0) return matrix_from_csv(text);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    parse_error(path + ": " + e.what());
  }
  return matrix_from_json(j);
}

json tolerances_to_json(const ToleranceConfig& cfg) {
  return json{{"rank_rel_tol", cfg.rank_rel_tol},
              {"psd_min_eig", cfg.psd_min_eig},
              {"residual_tol", cfg.residual_tol},
              {"l1_eps", cfg.l1_eps}};
}

json factorization_to_json(const PsdFactorization& f) {
  return factorization_to_json(BlockPsdFactorization{f.side(), {1.0}, {f}});
}

json factorization_to_json(const BlockPsdFactorization& bf) {
  json branches = json::array();
  for (const auto& b : bf.branches) {
    branches.push_back(json{{"side", b.side()},
                            {"row_factors", factor_list(b.row_factors)},
                            {"col_factors", factor_list(b.col_factors)}});
  }
  return json{{"field", "real"}, {"k", bf.block_size}, {"r", bf.branch_count()}, {"weights", bf.weights},
              {"branches", branches}};
}

BlockPsdFactorization block_factorization_from_json(const json& j) {
  BlockPsdFactorization bf;
  bf.block_size = integer(j, "k");
  const json& weights = field(j, "weights");
  const json& branches = field(j, "branches");
  if (!weights.is_array() || !branches.is_array() || weights.size() != branches.size()) {
    parse_error("weights and branches must be arrays of equal length");
  }
  for (const auto& w : weights) bf.weights.push_back(number(w, "weight"));
  for (const auto& b : branches) {
    PsdFactorization f;
    f.row_factors = factor_list_from(field(b, "row_factors"));
    f.col_factors = factor_list_from(field(b, "col_factors"));
    bf.branches.push_back(std::move(f));
  }
  if (j.contains("r") && integer(j, "r") != bf.branch_count()) parse_error("r differs from the branch count");
  return bf;
}

json certification_to_json(const CertificationReport& rep) {
  json j{{"passed", rep.passed},
         {"failure", to_string(rep.failure)},
         {"diagnostic", rep.diagnostic},
         {"max_abs_error", rep.max_abs_error},
         {"l1_residual", rep.l1_residual},
         {"total_side", rep.total_side}};
  if (rep.failing_branch >= 0) j["failing_branch"] = rep.failing_branch;
  if (rep.failing_factor >= 0) {
    j["failing_factor"] = rep.failing_factor;
    j["failing_side"] = rep.failing_is_row ? "row" : "col";
  }
  return j;
}

json bounds_to_json(const BoundsReport& rep) {
  auto opt = [](const std::optional<int>& v) { return v ? json(*v) : json(nullptr); };
  json kprank_lb = json::object();
  json kprank_ub = json::object();
  json bits = json::object();
  json residual = json::object();
  json eps = json::object();
  for (const auto& [k, v] : rep.kprank_lb) kprank_lb[std::to_string(k)] = v;
  for (const auto& [k, v] : rep.kprank_ub) kprank_ub[std::to_string(k)] = opt(v);
  for (const auto& [k, v] : rep.hybrid_bits) bits[std::to_string(k)] = opt(v);
  for (const auto& [k, v] : rep.kprank_residual) residual[std::to_string(k)] = v;
  for (const auto& [k, v] : rep.kprank_eps_witnessed) eps[std::to_string(k)] = v;
  return json{{"rank", rep.rank},
              {"prank_lb", rep.prank_lb},
              {"prank_ub", opt(rep.prank_ub)},
              {"prank_residual", rep.prank_residual},
              {"prank_eps_witnessed", rep.prank_eps_witnessed},
              {"nnr_ub", opt(rep.nnr_ub)},
              {"nnr_residual", rep.nnr_residual},
              {"nnr_eps_witnessed", rep.nnr_eps_witnessed},
              {"kprank_lb", kprank_lb},
              {"kprank_ub", kprank_ub},
              {"kprank_residual", residual},
              {"kprank_eps_witnessed", eps},
              {"hybrid_bits", bits},
              {"t_lb", rep.t_lb},
              {"t_ub", rep.t_ub},
              {"interpretation",
               {{"upper_bounds", "real PSD factorizations"}, {"logarithms", "base 2"}}}};
}

std::string bounds_to_csv(const BoundsReport& rep) {
  std::ostringstream os;
  auto row = [&os](const char* q, const std::string& k, const std::string& v) { os << q << ',' << k << ',' << v << '\n'; };
  auto opt = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string("unknown"); };
  os << "quantity,k,value\n";
  row("rank", "", std::to_string(rep.rank));
  row("prank_lb", "", std::to_string(rep.prank_lb));
  row("prank_ub", "", opt(rep.prank_ub));
  row("nnr_ub", "", opt(rep.nnr_ub));
  for (const auto& [k, v] : rep.kprank_lb) row("kprank_lb", std::to_string(k), std::to_string(v));
  for (const auto& [k, v] : rep.kprank_ub) row("kprank_ub", std::to_string(k), opt(v));
  for (const auto& [k, v] : rep.hybrid_bits) row("hybrid_bits", std::to_string(k), opt(v));
  row("t_lb", "", std::to_string(rep.t_lb));
  row("t_ub", "", std::to_string(rep.t_ub));
  return os.str();
}

json partition_to_json(const PartitionResult& res) {
  json rects = json::array();
  for (std::size_t i = 0; i < res.partition.rectangles.size(); ++i) {
    const auto& r = res.partition.rectangles[i];
    rects.push_back(json{{"rows", r.rows}, {"cols", r.cols}, {"verdict", to_string(res.verdicts.at(i))}});
  }
  return json{{"size", res.partition.size()},
              {"optimal", res.optimal},
              {"rectangles", rects},
              {"interpretation", {{"zero_entries_in_rectangles", "allowed"}, {"unknown_verdict", "treated as no"}}}};
}

json seed_protocol_to_json(const QuantumSeedProtocol& p) {
  std::vector<double> state(p.state.data(), p.state.data() + p.state.size());
  return json{{"r", p.r},
              {"seed_qubits", p.seed_qubits()},
              {"state", state},
              {"alice_povm", factor_list(p.alice_povm)},
              {"bob_povm", factor_list(p.bob_povm)}};
}

QuantumSeedProtocol seed_protocol_from_json(const json& j) {
  QuantumSeedProtocol p;
  p.r = integer(j, "r");
  const json& state = field(j, "state");
  if (!state.is_array()) parse_error("state must be an array");
  p.state.resize(static_cast<Eigen::Index>(state.size()));
  for (std::size_t i = 0; i < state.size(); ++i) p.state(static_cast<Eigen::Index>(i)) = number(state[i], "amplitude");
  p.alice_povm = factor_list_from(field(j, "alice_povm"));
  p.bob_povm = factor_list_from(field(j, "bob_povm"));
  return p;
}

json hybrid_to_json(const HybridProtocol& h) {
  json branches = json::array();
  for (const auto& b : h.branches) branches.push_back(seed_protocol_to_json(b));
  return json{{"mode", to_string(h.mode)},
              {"capability", h.capability},
              {"classical_bits", h.classical_bits},
              {"weights", h.weights},
              {"branches", branches}};
}

HybridProtocol hybrid_from_json(const json& j) {
  HybridProtocol h;
  const json& mode = field(j, "mode");
  if (mode == "cq") {
    h.mode = HybridMode::ClassicalQuantum;
  } else if (mode == "qc") {
    h.mode = HybridMode::QuantumClassical;
  } else {
    parse_error("mode must be cq or qc");
  }
  h.capability = integer(j, "capability");
  h.classical_bits = integer(j, "classical_bits");
  for (const auto& w : field(j, "weights")) h.weights.push_back(number(w, "weight"));
  for (const auto& b : field(j, "branches")) h.branches.push_back(seed_protocol_from_json(b));
  return h;
}

json ledger_to_json(const ResourceLedger& led) {
  json checks = json::array();
  for (const auto& c : led.bound_checks) checks.push_back(json{{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  return json{{"qubits_used", led.qubits_used},
              {"classical_bits_stage1", led.classical_bits_stage1},
              {"classical_bits_locc", led.classical_bits_locc},
              {"classical_bits_total", led.total_classical_bits()},
              {"locc_accounting", "worst case 2^s - 1"},
              {"bound_checks", checks},
              {"all_passed", led.all_passed()}};
}

std::string samples_to_csv(const std::vector<Sample>& samples) {
  std::string out = "x,y\n";
  out.reserve(samples.size() * 6 + 4);
  for (const auto& [x, y] : samples) {
    out += std::to_string(x);
    out += ',';
    out += std::to_string(y);
    out += '\n';
  }
  return out;
}

}  // namespace hybridcorr::io
