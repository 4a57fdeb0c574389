#include "sgame/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace sgame {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& tok) {
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw std::invalid_argument("csv: bad number '" + tok + "'");
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument("json: expected matrix");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(j[i].size()) != cols)
      throw std::invalid_argument("json: ragged matrix");
    for (int c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = j[i].get<double>();
  return v;
}

void require_keys(const nlohmann::json& j, std::initializer_list<const char*> keys,
                  const char* what) {
  for (const char* k : keys)
    if (!j.contains(k)) throw std::invalid_argument(std::string(what) + ": missing key '" + k + "'");
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (const char* k : keys) known = known || key == k;
    if (!known) throw std::invalid_argument(std::string(what) + ": unknown key '" + key + "'");
  }
}

}  // namespace

std::string dataset_to_csv(const Dataset& data) {
  std::string out;
  for (int j = 0; j < data.x_dim(); ++j) out += "x" + std::to_string(j + 1) + ",";
  for (int z = 0; z < data.y_dim(); ++z)
    out += "y" + std::to_string(z + 1) + (z + 1 == data.y_dim() ? "" : ",");
  out += "\n";
  for (int i = 0; i < data.size(); ++i) {
    for (int j = 0; j < data.x_dim(); ++j) out += fmt_double(data.design(i, j)) + ",";
    for (int z = 0; z < data.y_dim(); ++z)
      out += fmt_double(data.responses(i, z)) + (z + 1 == data.y_dim() ? "" : ",");
    out += "\n";
  }
  return out;
}

Dataset dataset_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("csv: empty input");
  const auto header = split_csv_line(line);
  int p = 0, q = 0;
  for (const auto& h : header) {
    if (h.size() > 1 && h[0] == 'x' && q == 0)
      ++p;
    else if (h.size() > 1 && h[0] == 'y')
      ++q;
    else
      throw std::invalid_argument("csv: bad header column '" + h + "'");
  }
  if (p < 1 || q < 1) throw std::invalid_argument("csv: header must list x then y columns");

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto toks = split_csv_line(line);
    if (static_cast<int>(toks.size()) != p + q)
      throw std::invalid_argument("csv: row width disagrees with header");
    std::vector<double> row;
    row.reserve(p + q);
    for (const auto& t : toks) row.push_back(parse_double(t));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("csv: no data rows");
  Eigen::MatrixXd design(rows.size(), p), responses(rows.size(), q);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < p; ++j) design(static_cast<int>(i), j) = rows[i][j];
    for (int z = 0; z < q; ++z) responses(static_cast<int>(i), z) = rows[i][p + z];
  }
  return Dataset(std::move(design), std::move(responses));
}

nlohmann::json bounds_to_json(const ParameterBounds& bounds) {
  nlohmann::json j;
  j["a_gamma"] = bounds.a_gamma;
  j["a_beta"] = bounds.a_beta;
  j["a_sigma_min"] = bounds.a_sigma_min;
  j["a_sigma_max"] = bounds.a_sigma_max;
  j["k"] = bounds.k;
  return j;
}

ParameterBounds bounds_from_json(const nlohmann::json& j) {
  require_keys(j, {"a_gamma", "a_beta", "a_sigma_min", "a_sigma_max", "k"}, "bounds");
  ParameterBounds b;
  b.a_gamma = j["a_gamma"].get<double>();
  b.a_beta = j["a_beta"].get<double>();
  b.a_sigma_min = j["a_sigma_min"].get<double>();
  b.a_sigma_max = j["a_sigma_max"].get<double>();
  b.k = j["k"].get<int>();
  b.validate();
  return b;
}

nlohmann::json params_to_json(const SgameParams& psi) {
  nlohmann::json j;
  nlohmann::json gating;
  gating["intercepts"] = nlohmann::json::array();
  for (int k = 0; k < psi.gating.intercepts.size(); ++k)
    gating["intercepts"].push_back(psi.gating.intercepts[k]);
  gating["slopes"] = matrix_to_json(psi.gating.slopes);
  j["gating"] = std::move(gating);

  nlohmann::json experts;
  experts["intercepts"] = matrix_to_json(psi.experts.intercepts);
  experts["slopes"] = nlohmann::json::array();
  for (const auto& s : psi.experts.slopes) experts["slopes"].push_back(matrix_to_json(s));
  experts["covariances"] = nlohmann::json::array();
  for (const auto& c : psi.experts.covariances)
    experts["covariances"].push_back(matrix_to_json(c));
  j["experts"] = std::move(experts);

  j["bounds"] = bounds_to_json(psi.bounds);
  return j;
}

SgameParams params_from_json(const nlohmann::json& j) {
  require_keys(j, {"gating", "experts", "bounds"}, "params");
  require_keys(j["gating"], {"intercepts", "slopes"}, "params.gating");
  require_keys(j["experts"], {"intercepts", "slopes", "covariances"}, "params.experts");

  SgameParams psi;
  psi.gating.intercepts = vector_from_json(j["gating"]["intercepts"]);
  psi.gating.slopes = matrix_from_json(j["gating"]["slopes"]);
  psi.experts.intercepts = matrix_from_json(j["experts"]["intercepts"]);
  for (const auto& s : j["experts"]["slopes"]) psi.experts.slopes.push_back(matrix_from_json(s));
  for (const auto& c : j["experts"]["covariances"])
    psi.experts.covariances.push_back(matrix_from_json(c));
  psi.bounds = bounds_from_json(j["bounds"]);
  psi.validate();
  return psi;
}

nlohmann::json fit_result_to_json(const FitResult& fit) {
  nlohmann::json j;
  j["params"] = params_to_json(fit.params);
  j["penalized_nll_trace"] = fit.penalized_nll_trace;
  j["final_penalized_nll"] = fit.final_penalized_nll;
  nlohmann::json ag = nlohmann::json::array();
  for (int k = 0; k < fit.active_gating.rows(); ++k) {
    nlohmann::json row = nlohmann::json::array();
    for (int p = 0; p < fit.active_gating.cols(); ++p) row.push_back(fit.active_gating(k, p));
    ag.push_back(std::move(row));
  }
  j["active_gating"] = std::move(ag);
  nlohmann::json ae = nlohmann::json::array();
  for (const auto& mask : fit.active_experts) {
    nlohmann::json comp = nlohmann::json::array();
    for (int z = 0; z < mask.rows(); ++z) {
      nlohmann::json row = nlohmann::json::array();
      for (int p = 0; p < mask.cols(); ++p) row.push_back(mask(z, p));
      comp.push_back(std::move(row));
    }
    ae.push_back(std::move(comp));
  }
  j["active_experts"] = std::move(ae);
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  return j;
}

FitResult fit_result_from_json(const nlohmann::json& j) {
  require_keys(j,
               {"params", "penalized_nll_trace", "final_penalized_nll", "active_gating",
                "active_experts", "converged", "iterations"},
               "fit_result");
  FitResult fit;
  fit.params = params_from_json(j["params"]);
  fit.penalized_nll_trace = j["penalized_nll_trace"].get<std::vector<double>>();
  fit.final_penalized_nll = j["final_penalized_nll"].get<double>();
  const auto& ag = j["active_gating"];
  fit.active_gating.resize(ag.size(), ag.empty() ? 0 : ag[0].size());
  for (std::size_t k = 0; k < ag.size(); ++k)
    for (std::size_t p = 0; p < ag[k].size(); ++p)
      fit.active_gating(static_cast<int>(k), static_cast<int>(p)) = ag[k][p].get<bool>();
  for (const auto& comp : j["active_experts"]) {
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask(comp.size(),
                                                             comp.empty() ? 0 : comp[0].size());
    for (std::size_t z = 0; z < comp.size(); ++z)
      for (std::size_t p = 0; p < comp[z].size(); ++p)
        mask(static_cast<int>(z), static_cast<int>(p)) = comp[z][p].get<bool>();
    fit.active_experts.push_back(std::move(mask));
  }
  fit.converged = j["converged"].get<bool>();
  fit.iterations = j["iterations"].get<int>();
  return fit;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace sgame
