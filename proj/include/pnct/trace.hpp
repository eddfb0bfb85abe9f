#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace pnct {

enum class SolverStatus {
  Running,
  Converged,
  TargetReached,
  MaxIterations,
  LineSearchFailed,
  NonFinite,
};

std::string to_string(SolverStatus s);

struct TraceRow {
  int iter = 0;
  double f = 0.0;
  double l = 0.0;
  double h = 0.0;
  double step = 0.0;
  int inner_iters = 0;
  double eta = 0.0;
  double residual = 0.0;
  std::int64_t grad_evals = 0;
  std::int64_t hess_applies = 0;
  double seconds = 0.0;
  /// Smooth-term value/gradient calls made while solving this row's subproblem.
  std::int64_t subproblem_fidelity_calls = 0;
};

struct ConvergenceTrace {
  std::vector<TraceRow> rows;
  /// Surrogate objective per inner iteration, one vector per outer iteration.
  std::vector<std::vector<double>> inner_surrogate;
  SolverStatus status = SolverStatus::Running;
  std::string message;

  int outer_iterations() const { return rows.empty() ? 0 : rows.back().iter; }
  long total_inner_iterations() const;
  const TraceRow& last() const { return rows.back(); }
};

inline constexpr const char* kTraceHeader =
    "iter,f,l,h,step,inner_iters,eta,residual,grad_evals,hess_applies,seconds";

void write_trace_csv(const ConvergenceTrace& trace, std::ostream& out);
void write_trace_csv(const ConvergenceTrace& trace, const std::string& path);
ConvergenceTrace read_trace_csv(std::istream& in);
ConvergenceTrace read_trace_csv(const std::string& path);

}  // namespace pnct
