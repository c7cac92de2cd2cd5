#include "arxid/json_io.hpp"

#include "arxid/errors.hpp"

#include <cmath>
#include <fstream>

namespace arxid {

json matrix_to_json(const Mat& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw InvalidParameter(what + ": expected an array of rows");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return Mat(0, 0);
  if (!j[0].is_array()) throw InvalidParameter(what + ": expected an array of rows");
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Mat M(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[r];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw DimensionMismatch(what + ": ragged rows");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!row[c].is_number()) throw InvalidParameter(what + ": non-numeric entry");
      M(r, c) = row[c].get<double>();
    }
  }
  return M;
}

void to_json(json& j, const ARXParams& p) {
  json A = json::array(), B = json::array();
  for (const auto& a : p.A) A.push_back(matrix_to_json(a));
  for (const auto& b : p.B) B.push_back(matrix_to_json(b));
  j = json{{"p", p.p}, {"q", p.q}, {"n_y", p.n_y}, {"n_u", p.n_u},
           {"A", A},   {"B", B},   {"sigma_w", matrix_to_json(p.sigma_w)}};
}

void from_json(const json& j, ARXParams& p) {
  if (!j.is_object()) throw InvalidParameter("system: expected an object");
  for (const char* key : {"A", "B"}) {
    if (!j.contains(key)) throw InvalidParameter(std::string("system.") + key + ": missing");
  }
  p.A.clear();
  p.B.clear();
  for (std::size_t i = 0; i < j.at("A").size(); ++i) {
    p.A.push_back(matrix_from_json(j.at("A")[i], "system.A[" + std::to_string(i) + "]"));
  }
  for (std::size_t i = 0; i < j.at("B").size(); ++i) {
    p.B.push_back(matrix_from_json(j.at("B")[i], "system.B[" + std::to_string(i) + "]"));
  }
  if (p.A.empty() || p.B.empty()) throw InvalidParameter("system: A and B need at least one matrix each");
  p.p = j.value("p", static_cast<int>(p.A.size()));
  p.q = j.value("q", static_cast<int>(p.B.size()));
  p.n_y = j.value("n_y", static_cast<int>(p.A.front().rows()));
  p.n_u = j.value("n_u", static_cast<int>(p.B.front().cols()));
  p.sigma_w = j.contains("sigma_w") ? matrix_from_json(j.at("sigma_w"), "system.sigma_w")
                                    : Mat::Identity(p.n_y, p.n_y);
  p.validate();
}

void to_json(json& j, const ThetaMatrix& t) { j = matrix_to_json(t.entries); }
void from_json(const json& j, ThetaMatrix& t) { t.entries = matrix_from_json(j, "theta"); }

void to_json(json& j, const FourierCoefficients& c) {
  json bins = json::array();
  for (const auto& b : c.bins) {
    json row = json::array();
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      row.push_back(b(i).real());
      row.push_back(b(i).imag());
    }
    bins.push_back(std::move(row));
  }
  j = json{{"k", c.k()}, {"n_u", c.n_u()}, {"gamma", c.gamma}, {"bins", bins}};
}

void from_json(const json& j, FourierCoefficients& c) {
  c.gamma = j.value("gamma", 1.0);
  c.bins.clear();
  for (const auto& row : j.at("bins")) {
    if (row.size() % 2 != 0) throw InvalidParameter("coefficients: bins hold interleaved re/im pairs");
    CVec v(static_cast<Eigen::Index>(row.size() / 2));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = Complex(row[2 * i].get<double>(), row[2 * i + 1].get<double>());
    c.bins.push_back(v);
  }
}

void to_json(json& j, const FrequencyAllocation& a) {
  json bins = json::array();
  for (const auto& U : a.bins) bins.push_back(json{{"re", matrix_to_json(U.real())}, {"im", matrix_to_json(U.imag())}});
  j = json{{"k", a.k()}, {"n_u", a.n_u()}, {"bins", bins}};
}

void from_json(const json& j, FrequencyAllocation& a) {
  a.bins.clear();
  for (const auto& b : j.at("bins")) {
    const Mat re = matrix_from_json(b.at("re"), "allocation.re");
    const Mat im = matrix_from_json(b.at("im"), "allocation.im");
    if (re.rows() != im.rows() || re.cols() != im.cols()) throw DimensionMismatch("allocation: re/im shapes differ");
    CMat U(re.rows(), re.cols());
    U.real() = re;
    U.imag() = im;
    a.bins.push_back(U);
  }
}

void to_json(json& j, const Estimate& e) {
  j = json{{"theta", e.theta}, {"T", e.samples}, {"rank_deficient", e.rank_deficient}};
}

void to_json(json& j, const SolverReport& r) {
  j = json{{"objective", r.objective},
           {"upper_bound", r.upper_bound},
           {"gap", r.gap},
           {"iterations", r.iterations},
           {"stages", r.stages},
           {"wall_time", r.wall_time},
           {"termination", r.termination},
           {"secondary_eigen_mass", r.secondary_eigen_mass}};
}

void from_json(const json& j, SolverReport& r) {
  r.objective = j.value("objective", 0.0);
  r.upper_bound = j.value("upper_bound", 0.0);
  r.gap = j.value("gap", 0.0);
  r.iterations = j.value("iterations", 0);
  r.stages = j.value("stages", 0);
  r.wall_time = j.value("wall_time", 0.0);
  r.termination = j.value("termination", std::string());
  r.secondary_eigen_mass = j.value("secondary_eigen_mass", 0.0);
}

void to_json(json& j, const Schedule& s) {
  j = json{{"T0", s.T0}, {"k0", s.k0}, {"episodes", s.episodes}, {"warmup", s.warmup}};
}

void to_json(json& j, const EpisodeLog& e) {
  j = json{{"episode", e.episode},
           {"kind", e.kind},
           {"length", e.length},
           {"T", e.cumulative},
           {"bins", e.bins},
           {"gamma", e.gamma},
           {"error", e.error},
           {"energy", e.energy},
           {"theta_after", e.theta_after},
           {"noise_positions",
            json{{"process", e.process_position},
                 {"gaussian", e.gaussian_position},
                 {"exploration", e.exploration_position}}}};
  if (!e.fallback_reason.empty()) j["fallback_reason"] = e.fallback_reason;
  if (e.theta_design.entries.size() > 0) j["theta_design"] = e.theta_design;
  if (e.has_report) j["report"] = e.report;
  if (!e.coeffs.bins.empty()) j["coefficients"] = e.coeffs;
  if (!e.inputs.empty()) {
    json u = json::array();
    for (const auto& v : e.inputs) {
      json row = json::array();
      for (Eigen::Index i = 0; i < v.size(); ++i) row.push_back(v(i));
      u.push_back(std::move(row));
    }
    j["inputs"] = std::move(u);
  }
}

void to_json(json& j, const BoundReport& b) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json("inf"); };
  j = json{{"delta", b.delta},
           {"T", b.T},
           {"k", b.k},
           {"p_tilde", b.p_tilde},
           {"gamma_bar", num(b.gamma_bar)},
           {"beta", num(b.beta)},
           {"rho", b.rho},
           {"mixture_lambda_min", b.mixture_lambda_min},
           {"log_det", num(b.log_det)},
           {"numerator", num(b.numerator)},
           {"denominator", b.denominator},
           {"value", num(b.value)},
           {"finite", b.finite},
           {"diagnosis", b.diagnosis},
           {"convention", b.convention}};
}

void to_json(json& j, const Advisory& a) {
  j = json{{"note", a.note},
           {"ratios", a.ratios},
           {"length_growth", a.length_growth},
           {"bin_growth", a.bin_growth},
           {"aggressive", a.aggressive}};
}

ARXParams load_system(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidParameter("cannot open system file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidParameter("system file " + path + ": " + e.what());
  }
  return j.get<ARXParams>();
}

}  // namespace arxid
