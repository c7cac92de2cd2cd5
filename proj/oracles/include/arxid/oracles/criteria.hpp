#pragma once

#include "arxid/designer.hpp"

#include <functional>
#include <string>
#include <vector>

namespace arxid::oracles {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string summary;              // one line
  std::vector<std::string> details;  // per-instance lines
  double seconds = 0.0;
};

/// Solver reports gathered while running criteria 1, 2, 4 and 5; criterion 7
/// audits them.
struct CriteriaContext {
  std::vector<SolverReport> reports;
  std::vector<std::string> report_sources;
  std::string scratch_dir;  // archive location for criterion 5, a temp dir when empty
  bool verbose = false;

  void record(const SolverReport& r, const std::string& source);
};

CriterionResult criterion_rank1_exactness(CriteriaContext& ctx);   // 1
CriterionResult criterion_grid_optimality(CriteriaContext& ctx);   // 2
CriterionResult criterion_steady_state(CriteriaContext& ctx);      // 3
CriterionResult criterion_energy(CriteriaContext& ctx);            // 4
CriterionResult criterion_reproduction(CriteriaContext& ctx);      // 5
CriterionResult criterion_ols(CriteriaContext& ctx);               // 6
CriterionResult criterion_certificates(CriteriaContext& ctx);      // 7
CriterionResult criterion_invariants(CriteriaContext& ctx);        // 8

/// Runs all eight in order. `on_result` is called as each one finishes.
std::vector<CriterionResult> run_all_criteria(CriteriaContext& ctx,
                                              const std::function<void(const CriterionResult&)>& on_result = {});

/// "PASS [n] name: summary"
std::string format_line(const CriterionResult& r);

}  // namespace arxid::oracles
