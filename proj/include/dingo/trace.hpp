#pragma once

#include <string>
#include <utility>
#include <vector>

namespace dingo {

/// One experiment trace line. `rounds` is cumulative over the run.
struct TraceRow {
  std::string method;
  int iteration = 0;
  std::size_t rounds = 0;
  double f = 0.0;
  double grad_norm = 0.0;
  std::string case_label;
  double alpha = 0.0;
};

using MetaList = std::vector<std::pair<std::string, std::string>>;

/// Writes `# key=value` metadata lines, a fixed header row
/// (iteration,rounds,f,grad_norm,case,alpha — prefixed by `method` when
/// with_method is set), then the rows. The file appears atomically via a
/// temporary in the same directory. Floats print with %.17g so identical
/// runs produce identical bytes.
void write_trace_csv(const std::string& path, const MetaList& meta,
                     const std::vector<TraceRow>& rows, bool with_method);

std::string format_double(double v);

}  // namespace dingo
