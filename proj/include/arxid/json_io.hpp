#pragma once

#include "arxid/active_loop.hpp"

#include "json.hpp"

#include <string>

namespace arxid {

using json = nlohmann::json;

// Matrices are arrays of rows.
json matrix_to_json(const Mat& M);
Mat matrix_from_json(const json& j, const std::string& what = "matrix");

void to_json(json& j, const ARXParams& p);
void from_json(const json& j, ARXParams& p);

void to_json(json& j, const ThetaMatrix& t);
void from_json(const json& j, ThetaMatrix& t);

/// {"k", "n_u", "gamma", "bins": [[re_1, im_1, re_2, im_2, ...], ...]}
void to_json(json& j, const FourierCoefficients& c);
void from_json(const json& j, FourierCoefficients& c);

/// {"k", "n_u", "bins": [{"re": matrix, "im": matrix}, ...]}
void to_json(json& j, const FrequencyAllocation& a);
void from_json(const json& j, FrequencyAllocation& a);

void to_json(json& j, const Estimate& e);
void to_json(json& j, const SolverReport& r);
void from_json(const json& j, SolverReport& r);
void to_json(json& j, const Schedule& s);
void to_json(json& j, const EpisodeLog& e);
void to_json(json& j, const BoundReport& b);
void to_json(json& j, const Advisory& a);

ARXParams load_system(const std::string& path);

}  // namespace arxid
