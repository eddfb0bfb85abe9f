#include "pnct/trace.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace pnct {

std::string to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::Running: return "running";
    case SolverStatus::Converged: return "converged";
    case SolverStatus::TargetReached: return "target_reached";
    case SolverStatus::MaxIterations: return "max_iterations";
    case SolverStatus::LineSearchFailed: return "line_search_failed";
    case SolverStatus::NonFinite: return "non_finite";
  }
  return "unknown";
}

long ConvergenceTrace::total_inner_iterations() const {
  long total = 0;
  for (const auto& r : rows) total += r.inner_iters;
  return total;
}

void write_trace_csv(const ConvergenceTrace& trace, std::ostream& out) {
  out << kTraceHeader << '\n';
  out << std::setprecision(17);
  for (const auto& r : trace.rows) {
    out << r.iter << ',' << r.f << ',' << r.l << ',' << r.h << ',' << r.step << ','
        << r.inner_iters << ',' << r.eta << ',' << r.residual << ',' << r.grad_evals << ','
        << r.hess_applies << ',' << r.seconds << '\n';
  }
}

void write_trace_csv(const ConvergenceTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trace_csv: cannot open " + path);
  write_trace_csv(trace, out);
}

ConvergenceTrace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) {
    throw std::runtime_error("read_trace_csv: unexpected header");
  }
  ConvergenceTrace trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(fields, cell, ',')) cells.push_back(cell);
    if (cells.size() != 11) throw std::runtime_error("read_trace_csv: malformed row: " + line);
    TraceRow r;
    r.iter = std::stoi(cells[0]);
    r.f = std::stod(cells[1]);
    r.l = std::stod(cells[2]);
    r.h = std::stod(cells[3]);
    r.step = std::stod(cells[4]);
    r.inner_iters = std::stoi(cells[5]);
    r.eta = std::stod(cells[6]);
    r.residual = std::stod(cells[7]);
    r.grad_evals = std::stoll(cells[8]);
    r.hess_applies = std::stoll(cells[9]);
    r.seconds = std::stod(cells[10]);
    trace.rows.push_back(r);
  }
  return trace;
}

ConvergenceTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_trace_csv: cannot open " + path);
  return read_trace_csv(in);
}

}  // namespace pnct
