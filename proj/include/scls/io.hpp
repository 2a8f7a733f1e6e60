#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "scls/inference.hpp"
#include "scls/regression.hpp"
#include "scls/tflr.hpp"

namespace scls::io {

/// A parsed CSV: header names and the numeric body. When a label column is
/// requested (or the first header cell is empty) it is split off as strings.
struct Table {
  std::vector<std::string> header;
  Matrix values;
  std::string label_name;
  std::vector<std::string> labels;
};

Table parse_csv(std::istream& in, const std::string& label_column = {});
Table read_csv(const std::string& path, const std::string& label_column = {});

/// Compositional data from CSV. Rows within 1e-8 of unit sum are renormalized,
/// others rejected unless `force_close`.
CompositionMatrix read_compositions(const std::string& path, bool force_close = false,
                                    const std::string& group_column = {},
                                    std::vector<std::string>* groups = nullptr);

/// Coefficient CSV: header = response names, first column = predictor names.
CoefficientMatrix read_coefficients_csv(const std::string& path);

void write_compositions_csv(std::ostream& out, const CompositionMatrix& Y);
/// 6 significant digits; `label_prefix` is prepended to each row label.
void write_coefficients_csv(std::ostream& out, const CoefficientMatrix& B,
                            const std::string& label_prefix = {}, bool header = true);

std::string format_short(double v);

nlohmann::json to_json(const CoefficientMatrix& B);
CoefficientMatrix coefficients_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SclsFit& fit);
nlohmann::json to_json(const TflrFit& fit);
nlohmann::json to_json(const TestResult& t, bool include_replicates = false);
nlohmann::json bootstrap_to_json(const std::vector<CoefficientMatrix>& boot, std::uint64_t seed);
std::vector<CoefficientMatrix> bootstrap_from_json(const nlohmann::json& j);

nlohmann::json read_json(const std::string& path);
void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

}  // namespace scls::io
