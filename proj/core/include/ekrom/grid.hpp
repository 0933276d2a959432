#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace ekrom {

using complex = std::complex<double>;
using cvec = Eigen::VectorXcd;
using cmat = Eigen::MatrixXcd;
using SparseMatrix = Eigen::SparseMatrix<complex, Eigen::ColMajor, int>;

/// Tensor grid: an interior box of uniform real cells surrounded on every side
/// by `pml` absorbing cells, with homogeneous Dirichlet data one node beyond
/// the outermost layer. Unknowns live on nodes, x fastest.
struct GridSpec {
  int dims = 1;
  std::array<int, 2> cells{1, 1};
  std::array<double, 2> step{1.0, 1.0};
  std::array<int, 2> pml{0, 0};

  int extent(int axis) const { return axis < dims ? cells[axis] + 2 * pml[axis] : 1; }
  std::size_t size() const {
    return static_cast<std::size_t>(extent(0)) * static_cast<std::size_t>(extent(1));
  }
  double cell_volume() const { return dims == 1 ? step[0] : step[0] * step[1]; }
  std::size_t linear(int ix, int iy) const {
    return static_cast<std::size_t>(ix) + static_cast<std::size_t>(extent(0)) * static_cast<std::size_t>(iy);
  }
};

/// Validates the geometry and returns the grid. Throws config_error on
/// non-positive counts or steps, negative PML counts, or dims outside {1, 2}.
GridSpec make_grid(int dims, std::array<int, 2> cells, std::array<double, 2> step,
                   std::array<int, 2> pml);

/// Interior-relative node coordinates. Negative values or values past the
/// interior count address PML nodes.
struct CellIndex {
  int x = 0;
  int y = 0;
};

bool in_interior(const GridSpec& grid, CellIndex c);
/// Full-grid linear index of an interior node; config_error when `c` is in
/// the PML or outside the grid.
std::size_t interior_linear(const GridSpec& grid, CellIndex c);

/// Squared wave speed on every node of the grid (PML included).
struct MediumModel {
  std::string preset;
  std::vector<double> speed_squared;

  double max_speed_squared() const;
};

/// Evaluates `coefficient(x, y)` at every node. Node (i, j) of the interior sits
/// at ((i + 1/2) hx, (j + 1/2) hy); PML nodes use the position clamped onto
/// the interior box so the medium is extended normally into the layers.
/// `subsamples` > 1 averages the coefficient's reciprocal over a sub-grid of
/// each cell (permittivity averaging for discontinuous media).
MediumModel sample_medium(const GridSpec& grid, std::string preset,
                          const std::function<double(double, double)>& speed_squared,
                          int subsamples = 1);

MediumModel homogeneous_medium(const GridSpec& grid, double speed_squared);

struct Layer {
  double start = 0.0;  ///< coordinate along `axis` where the layer begins
  double speed_squared = 1.0;
};
/// Piecewise-constant medium along `axis`; layers sorted by start, the first
/// layer extends to minus infinity.
MediumModel layered_medium(const GridSpec& grid, int axis, std::vector<Layer> layers);

/// Square lattice of dielectric rods in a uniform background.
struct RodLattice {
  double permittivity = 11.56;
  double background_permittivity = 1.0;
  double spacing = 0.58e-6;        ///< lattice constant a (m)
  double radius_ratio = 0.18;      ///< rod radius as a fraction of a
  int rows = 7;
  int cols = 7;
  std::array<double, 2> origin{0.0, 0.0};  ///< lower-left corner of the lattice (m)
  std::vector<std::array<int, 2>> removed;  ///< (row, col) rods left out
  double light_speed = 299792458.0;
  int subsamples = 8;
};
MediumModel rod_lattice_medium(const GridSpec& grid, const RodLattice& lattice);

/// Per-axis complex step sizes. `primal[axis][j]` is the step attached to node
/// j, `dual[axis][j]` the step of the link between nodes j-1 and j (j = 0 and
/// j = extent are the links to the Dirichlet ghost nodes).
struct StretchingProfile {
  std::array<std::vector<complex>, 2> primal;
  std::array<std::vector<complex>, 2> dual;
  double omega0 = 1.0;
  double strength = 0.0;
};

/// Fixed-frequency PML: inside the layers the steps are h (1 - i sigma(d) / omega0)
/// with sigma(d) = strength (d / n_pml)^2 and d the depth in cells measured from
/// the interior boundary (clamped to n_pml). Interior steps stay real.
StretchingProfile build_stretching(const GridSpec& grid, double omega0, double strength);

/// The complex-stretched wave operator A (discretizing -c^2 Laplacian) together
/// with the diagonal symmetrizer M that makes M A complex symmetric.
class StretchedOperator {
 public:
  StretchedOperator() = default;

  /// Wraps explicit matrices (tests, tiny hand cases). Verifies A^T M = M A.
  static StretchedOperator from_matrices(SparseMatrix a, cvec m);

  const SparseMatrix& matrix() const { return a_; }
  const cvec& symmetrizer() const { return m_; }
  const GridSpec& grid() const { return grid_; }
  std::size_t size() const { return static_cast<std::size_t>(a_.rows()); }
  /// Max absolute row sum.
  double norm_inf() const { return norm_inf_; }
  /// max |(A^T M - M A)_pq| / max |M_pp A_pq|
  double symmetry_defect() const;

 private:
  friend StretchedOperator assemble_operator(const GridSpec&, const MediumModel&,
                                             const StretchingProfile&);
  SparseMatrix a_;
  cvec m_;
  GridSpec grid_;
  double norm_inf_ = 0.0;
  void finalize();
};

/// Second-order 3-point (1D) / 5-point (2D) assembly with Dirichlet data behind
/// the PML.
StretchedOperator assemble_operator(const GridSpec& grid, const MediumModel& medium,
                                    const StretchingProfile& stretch);

/// Point (width = 0) or Gaussian-footprint (width in cells) source scaled so its
/// discrete integral equals `amplitude`. The footprint is truncated to the
/// interior.
cvec assemble_source(const GridSpec& grid, CellIndex location, double amplitude,
                     double width = 0.0);

}  // namespace ekrom
