#include <pybind11/pybind11.h>

#include "dingo/runner.hpp"

namespace py = pybind11;

PYBIND11_MODULE(pydingo, m) {
  m.doc() = "distributed Newton-type optimization testbed";
  m.attr("__version__") = "0.1.0";
}
