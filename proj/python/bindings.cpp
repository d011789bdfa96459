#include <pybind11/pybind11.h>
PYBIND11_MODULE(_riskgraph, m) { m.doc() = "stub"; }
