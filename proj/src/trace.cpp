#include "dingo/trace.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace dingo {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_trace_csv(const std::string& path, const MetaList& meta,
                     const std::vector<TraceRow>& rows, bool with_method) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write trace file: " + tmp);
    for (const auto& [key, value] : meta) out << "# " << key << "=" << value << "\n";
    if (with_method) out << "method,";
    out << "iteration,rounds,f,grad_norm,case,alpha\n";
    for (const TraceRow& r : rows) {
      if (with_method) out << r.method << ",";
      out << r.iteration << "," << r.rounds << "," << format_double(r.f) << ","
          << format_double(r.grad_norm) << "," << r.case_label << ","
          << format_double(r.alpha) << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("cannot move trace into place: " + path);
}

}  // namespace dingo
