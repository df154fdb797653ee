#include <pybind11/pybind11.h>
PYBIND11_MODULE(pydiracbvp, m) { m.doc() = "placeholder"; }
