#pragma once
// Scalar fields on a LatticeDomain and their text interchange format:
// header lines n=, h=, origin= (2n floats), dims= (2n ints), field=,
// then one value per line, row-major with axis 0 slowest, `nan` outside.

#include <functional>
#include <string>

#include "mhess/domain.hpp"

namespace mhess {

struct GridFunction {
  std::shared_ptr<const LatticeDomain> dom;
  std::vector<double> v;  // one value per lattice node, NaN at exterior nodes

  GridFunction() = default;
  explicit GridFunction(std::shared_ptr<const LatticeDomain> d);

  double& operator[](int64_t f) { return v[size_t(f)]; }
  double operator[](int64_t f) const { return v[size_t(f)]; }

  // max |v| over in-closure nodes
  double closure_max_abs() const;
};

// evaluates F on every in-closure node; exterior stays NaN
GridFunction sample_function(std::shared_ptr<const LatticeDomain> dom,
                             const std::function<double(const Point&)>& F);

// max |a - b| over in-closure nodes (lattices must match)
double closure_max_diff(const GridFunction& a, const GridFunction& b);

// identical n, h, dims, origin
bool same_lattice(const LatticeDomain& a, const LatticeDomain& b);

// multilinear interpolation of u at point x; corners outside the closure are
// dropped and the weights renormalized (0 when every corner is exterior)
double multilinear_sample(const GridFunction& u, const Point& x);

void write_grid(const std::string& path, const GridFunction& g,
                const std::string& field_name);

// Reads a grid file onto a bare lattice reconstructed from the header; node
// classes are inferred from the nan pattern (non-nan with a full stencil of
// non-nan neighbors = interior, other non-nan = boundary).  The optional
// out-parameter receives the field name.
GridFunction read_grid(const std::string& path, std::string* field_name = nullptr);

}  // namespace mhess
