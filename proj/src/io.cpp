#include "scls/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace scls::io {

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') quoted = !quoted;
    if (c == ',' && !quoted) {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.push_back(trim(cell));
  return cells;
}

double parse_number(const std::string& s, std::size_t line, std::size_t col) {
  double v = 0.0;
  const char* first = s.data();
  if (!s.empty() && s.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ", column " +
                                           std::to_string(col + 1) + ": not a number: '" + s + "'");
  return v;
}

nlohmann::json matrix_rows(const Matrix& M) {
  auto rows = nlohmann::json::array();
  for (Index j = 0; j < M.rows(); ++j) {
    auto r = nlohmann::json::array();
    for (Index k = 0; k < M.cols(); ++k) r.push_back(M(j, k));
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace

Table parse_csv(std::istream& in, const std::string& label_column) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) {
      header = split(line);
      break;
    }
  }
  if (header.empty()) throw Error(ErrorCode::ParseError, "empty CSV (no header)");

  Table t;
  std::ptrdiff_t label_at = -1;
  if (!label_column.empty()) {
    auto it = std::find(header.begin(), header.end(), label_column);
    if (it == header.end()) throw Error(ErrorCode::ParseError, "no column named '" + label_column + "'");
    label_at = it - header.begin();
  } else if (header.front().empty()) {
    label_at = 0;
  }
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (static_cast<std::ptrdiff_t>(c) == label_at) t.label_name = header[c];
    else t.header.push_back(header[c]);
  }

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split(line);
    if (cells.size() != header.size())
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": expected " +
                                             std::to_string(header.size()) + " fields, found " +
                                             std::to_string(cells.size()));
    std::vector<double> row;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (static_cast<std::ptrdiff_t>(c) == label_at) t.labels.push_back(cells[c]);
      else row.push_back(parse_number(cells[c], lineno, c));
    }
    rows.push_back(std::move(row));
  }
  t.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(t.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < rows[i].size(); ++c)
      t.values(static_cast<Index>(i), static_cast<Index>(c)) = rows[i][c];
  return t;
}

Table read_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  return parse_csv(in, label_column);
}

CompositionMatrix read_compositions(const std::string& path, bool force_close,
                                    const std::string& group_column, std::vector<std::string>* groups) {
  Table t = read_csv(path, group_column);
  if (t.values.rows() == 0) throw Error(ErrorCode::TooFewRows, "'" + path + "' has no data rows");
  if (groups) *groups = t.labels;
  return force_close ? CompositionMatrix::close_rows(std::move(t.values), std::move(t.header))
                     : CompositionMatrix::from_rows(std::move(t.values), std::move(t.header));
}

CoefficientMatrix read_coefficients_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::string first;
  std::getline(in, first);
  in.seekg(0);
  const auto head = split(first);
  Table t = parse_csv(in, head.empty() ? std::string{} : head.front());
  std::vector<std::string> predictors = t.labels;
  if (t.label_name.empty() && predictors.empty()) predictors = default_names("X", t.values.rows());
  // CSV carries 6 significant digits, so rows are checked loosely and re-closed.
  auto checked = CoefficientMatrix::from_matrix(std::move(t.values), std::move(predictors),
                                                std::move(t.header), 1e-4);
  Matrix B = checked.matrix().cwiseMax(0.0);
  for (Index j = 0; j < B.rows(); ++j) B.row(j) /= B.row(j).sum();
  return CoefficientMatrix::unchecked(std::move(B), checked.predictor_names(), checked.response_names());
}

std::string format_short(double v) {
  char buf[32];
  // Round-off residue below 1e-12 prints as 0 rather than as noise digits.
  std::snprintf(buf, sizeof buf, "%.6g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

void write_compositions_csv(std::ostream& out, const CompositionMatrix& Y) {
  const auto& names = Y.names();
  for (std::size_t k = 0; k < names.size(); ++k) out << (k ? "," : "") << names[k];
  out << '\n';
  char buf[32];
  for (Index i = 0; i < Y.rows(); ++i) {
    for (Index k = 0; k < Y.cols(); ++k) {
      std::snprintf(buf, sizeof buf, "%.10g", Y.data()(i, k));
      out << (k ? "," : "") << buf;
    }
    out << '\n';
  }
}

void write_coefficients_csv(std::ostream& out, const CoefficientMatrix& B, const std::string& label_prefix,
                            bool header) {
  if (header) {
    out << "predictor";
    for (const auto& n : B.response_names()) out << ',' << n;
    out << '\n';
  }
  for (Index j = 0; j < B.predictors(); ++j) {
    out << label_prefix << B.predictor_names()[static_cast<std::size_t>(j)];
    for (Index k = 0; k < B.responses(); ++k) out << ',' << format_short(B(j, k));
    out << '\n';
  }
}

nlohmann::json to_json(const CoefficientMatrix& B) {
  return {{"predictors", B.predictor_names()},
          {"responses", B.response_names()},
          {"B", matrix_rows(B.matrix())}};
}

CoefficientMatrix coefficients_from_json(const nlohmann::json& j) {
  try {
    const auto& rows = j.at("B");
    const Index p = static_cast<Index>(rows.size());
    const Index r = p ? static_cast<Index>(rows.at(0).size()) : 0;
    Matrix B(p, r);
    for (Index a = 0; a < p; ++a) {
      if (static_cast<Index>(rows.at(a).size()) != r)
        throw Error(ErrorCode::ParseError, "ragged coefficient matrix in JSON");
      for (Index b = 0; b < r; ++b) B(a, b) = rows.at(a).at(b).get<double>();
    }
    std::vector<std::string> pn, rn;
    if (j.contains("predictors")) pn = j["predictors"].get<std::vector<std::string>>();
    if (j.contains("responses")) rn = j["responses"].get<std::vector<std::string>>();
    return CoefficientMatrix::from_matrix(std::move(B), std::move(pn), std::move(rn));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("coefficient JSON: ") + e.what());
  }
}

nlohmann::json to_json(const SclsFit& fit) {
  nlohmann::json j;
  j["model"] = "scls";
  j["alpha"] = fit.alpha;
  j["loss"] = fit.loss;
  j["weights"] = std::vector<double>(fit.weights.data(), fit.weights.data() + fit.weights.size());
  auto coefs = nlohmann::json::array();
  for (const auto& B : fit.coefficients) coefs.push_back(to_json(B));
  j["coefficients"] = std::move(coefs);
  j["diagnostics"] = {{"status", fit.diagnostics.status == qp::Status::Optimal ? "optimal" : "failed"},
                      {"iterations", fit.diagnostics.iterations},
                      {"active_constraints", fit.diagnostics.active_constraints},
                      {"pd_repaired", fit.diagnostics.pd_repaired},
                      {"alternations", fit.alternations}};
  if (!fit.objective_trace.empty()) j["objective_trace"] = fit.objective_trace;
  return j;
}

nlohmann::json to_json(const TflrFit& fit) {
  nlohmann::json j;
  j["model"] = "tflr";
  j["alpha"] = fit.alpha;
  j["kld"] = fit.kld;
  j["coefficients"] = nlohmann::json::array({to_json(fit.coefficients)});
  j["diagnostics"] = {{"iterations", fit.iterations}, {"converged", fit.converged}};
  return j;
}

nlohmann::json to_json(const TestResult& t, bool include_replicates) {
  nlohmann::json j;
  j["statistic"] = t.statistic_observed;
  j["statistic_kind"] = to_string(t.statistic_kind);
  j["p_value"] = t.p_value;
  j["R"] = t.R;
  j["seed"] = t.seed;
  j["missing"] = t.missing;
  if (include_replicates) j["replicates"] = t.replicates;
  return j;
}

nlohmann::json bootstrap_to_json(const std::vector<CoefficientMatrix>& boot, std::uint64_t seed) {
  auto list = nlohmann::json::array();
  for (const auto& B : boot) list.push_back(matrix_rows(B.matrix()));
  nlohmann::json j;
  j["seed"] = seed;
  j["count"] = boot.size();
  if (!boot.empty()) {
    j["predictors"] = boot.front().predictor_names();
    j["responses"] = boot.front().response_names();
  }
  j["replicates"] = std::move(list);
  return j;
}

std::vector<CoefficientMatrix> bootstrap_from_json(const nlohmann::json& j) {
  if (!j.contains("replicates") || !j["replicates"].is_array())
    throw Error(ErrorCode::ParseError, "bootstrap JSON lacks a 'replicates' array");
  std::vector<CoefficientMatrix> out;
  for (const auto& rows : j["replicates"]) {
    nlohmann::json one{{"B", rows}};
    if (j.contains("predictors")) one["predictors"] = j["predictors"];
    if (j.contains("responses")) one["responses"] = j["responses"];
    out.push_back(coefficients_from_json(one));
  }
  return out;
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, "'" + path + "': " + e.what());
  }
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out << content;
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path + "'");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace scls::io
