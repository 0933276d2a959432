#include "ekrom/grid.hpp"

#include "ekrom/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ekrom {

GridSpec make_grid(int dims, std::array<int, 2> cells, std::array<double, 2> step,
                   std::array<int, 2> pml) {
  if (dims != 1 && dims != 2) throw config_error("grid.dims must be 1 or 2, got " + std::to_string(dims));
  GridSpec g;
  g.dims = dims;
  for (int a = 0; a < 2; ++a) {
    if (a >= dims) {
      g.cells[a] = 1;
      g.step[a] = 1.0;
      g.pml[a] = 0;
      continue;
    }
    if (cells[a] < 1) throw config_error("grid.cells[" + std::to_string(a) + "] must be >= 1");
    if (!(step[a] > 0.0) || !std::isfinite(step[a]))
      throw config_error("grid.step[" + std::to_string(a) + "] must be > 0");
    if (pml[a] < 0) throw config_error("pml.cells must be >= 0");
    g.cells[a] = cells[a];
    g.step[a] = step[a];
    g.pml[a] = pml[a];
  }
  return g;
}

bool in_interior(const GridSpec& grid, CellIndex c) {
  if (c.x < 0 || c.x >= grid.cells[0]) return false;
  if (grid.dims == 1) return c.y == 0;
  return c.y >= 0 && c.y < grid.cells[1];
}

std::size_t interior_linear(const GridSpec& grid, CellIndex c) {
  if (!in_interior(grid, c))
    throw config_error("location (" + std::to_string(c.x) + ", " + std::to_string(c.y) +
                       ") is not an interior node");
  return grid.linear(c.x + grid.pml[0], grid.dims == 2 ? c.y + grid.pml[1] : 0);
}

double MediumModel::max_speed_squared() const {
  return speed_squared.empty() ? 0.0 : *std::max_element(speed_squared.begin(), speed_squared.end());
}

MediumModel sample_medium(const GridSpec& grid, std::string preset,
                          const std::function<double(double, double)>& speed_squared,
                          int subsamples) {
  MediumModel m;
  m.preset = std::move(preset);
  m.speed_squared.resize(grid.size());
  const int nx = grid.extent(0);
  const int ny = grid.extent(1);
  const int sub = std::max(1, subsamples);
  const int suby = grid.dims == 2 ? sub : 1;
  auto clamp_cell = [&](int full, int axis) {
    return std::clamp(full - grid.pml[axis], 0, grid.cells[axis] - 1);
  };
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const int cx = clamp_cell(ix, 0);
      const int cy = grid.dims == 2 ? clamp_cell(iy, 1) : 0;
      double value;
      if (sub == 1) {
        value = speed_squared((cx + 0.5) * grid.step[0], (cy + 0.5) * grid.step[1]);
      } else {
        double slowness = 0.0;
        for (int sy = 0; sy < suby; ++sy) {
          for (int sx = 0; sx < sub; ++sx) {
            const double x = (cx + (sx + 0.5) / sub) * grid.step[0];
            const double y = (cy + (sy + 0.5) / suby) * grid.step[1];
            slowness += 1.0 / speed_squared(x, y);
          }
        }
        value = static_cast<double>(sub * suby) / slowness;
      }
      if (!(value > 0.0) || !std::isfinite(value))
        throw config_error("medium '" + m.preset + "' produced a non-positive coefficient");
      m.speed_squared[grid.linear(ix, iy)] = value;
    }
  }
  return m;
}

MediumModel homogeneous_medium(const GridSpec& grid, double speed_squared) {
  if (!(speed_squared > 0.0)) throw config_error("medium.speed_squared must be > 0");
  return sample_medium(grid, "homogeneous", [speed_squared](double, double) { return speed_squared; });
}

MediumModel layered_medium(const GridSpec& grid, int axis, std::vector<Layer> layers) {
  if (layers.empty()) throw config_error("layered medium needs at least one layer");
  if (axis < 0 || axis >= grid.dims) throw config_error("layered medium axis out of range");
  std::sort(layers.begin(), layers.end(), [](const Layer& a, const Layer& b) { return a.start < b.start; });
  for (const auto& l : layers)
    if (!(l.speed_squared > 0.0)) throw config_error("layer speed_squared must be > 0");
  return sample_medium(grid, "layered", [axis, layers](double x, double y) {
    const double coord = axis == 0 ? x : y;
    double value = layers.front().speed_squared;
    for (const auto& l : layers)
      if (coord >= l.start) value = l.speed_squared;
    return value;
  });
}

MediumModel rod_lattice_medium(const GridSpec& grid, const RodLattice& lattice) {
  if (grid.dims != 2) throw config_error("rod lattice requires a 2D grid");
  if (!(lattice.permittivity > 0.0) || !(lattice.background_permittivity > 0.0))
    throw config_error("rod lattice permittivities must be > 0");
  if (!(lattice.spacing > 0.0) || !(lattice.radius_ratio > 0.0) || lattice.radius_ratio >= 0.5)
    throw config_error("rod lattice needs spacing > 0 and 0 < radius_ratio < 0.5");
  if (lattice.rows < 1 || lattice.cols < 1) throw config_error("rod lattice needs rows, cols >= 1");

  std::vector<char> present(static_cast<std::size_t>(lattice.rows * lattice.cols), 1);
  for (const auto& rc : lattice.removed) {
    if (rc[0] < 0 || rc[0] >= lattice.rows || rc[1] < 0 || rc[1] >= lattice.cols)
      throw config_error("removed rod index out of range");
    present[static_cast<std::size_t>(rc[0] * lattice.cols + rc[1])] = 0;
  }
  const double a = lattice.spacing;
  const double r2 = std::pow(lattice.radius_ratio * a, 2);
  const double c2 = lattice.light_speed * lattice.light_speed;
  auto coefficient = [=](double x, double y) {
    const double lx = (x - lattice.origin[0]) / a;
    const double ly = (y - lattice.origin[1]) / a;
    const int col = static_cast<int>(std::floor(lx));
    const int row = static_cast<int>(std::floor(ly));
    double eps = lattice.background_permittivity;
    if (col >= 0 && col < lattice.cols && row >= 0 && row < lattice.rows &&
        present[static_cast<std::size_t>(row * lattice.cols + col)]) {
      const double dx = (lx - col - 0.5) * a;
      const double dy = (ly - row - 0.5) * a;
      if (dx * dx + dy * dy < r2) eps = lattice.permittivity;
    }
    return c2 / eps;
  };
  return sample_medium(grid, "rod_lattice", coefficient, lattice.subsamples);
}

StretchingProfile build_stretching(const GridSpec& grid, double omega0, double strength) {
  if (!(omega0 > 0.0) || !std::isfinite(omega0)) throw config_error("pml.omega0 must be > 0");
  if (!(strength >= 0.0) || !std::isfinite(strength)) throw config_error("pml.strength must be >= 0");
  StretchingProfile p;
  p.omega0 = omega0;
  p.strength = strength;
  for (int axis = 0; axis < 2; ++axis) {
    const int n = grid.extent(axis);
    const int npml = grid.pml[axis];
    const int nint = grid.cells[axis];
    const double h = grid.step[axis];
    // depth (in cells) of a position measured in node units from node 0
    auto depth = [&](double pos) {
      double d = 0.0;
      if (pos < npml) d = npml - pos;
      else if (pos > npml + nint - 1) d = pos - (npml + nint - 1);
      return std::min(d, static_cast<double>(npml));
    };
    auto stretched = [&](double d) {
      if (npml == 0 || d <= 0.0 || strength == 0.0) return complex(h, 0.0);
      const double sigma = strength * (d / npml) * (d / npml);
      return complex(h, -h * sigma / omega0);
    };
    p.primal[axis].resize(static_cast<std::size_t>(n));
    p.dual[axis].resize(static_cast<std::size_t>(n + 1));
    for (int j = 0; j < n; ++j) p.primal[axis][static_cast<std::size_t>(j)] = stretched(depth(j));
    for (int j = 0; j <= n; ++j) p.dual[axis][static_cast<std::size_t>(j)] = stretched(depth(j - 0.5));
  }
  return p;
}

StretchedOperator StretchedOperator::from_matrices(SparseMatrix a, cvec m) {
  if (a.rows() != a.cols() || a.rows() != m.size())
    throw config_error("operator and symmetrizer shapes differ");
  StretchedOperator op;
  op.a_ = std::move(a);
  op.a_.makeCompressed();
  op.m_ = std::move(m);
  op.grid_ = GridSpec{};
  op.grid_.cells[0] = static_cast<int>(op.a_.rows());
  op.finalize();
  if (op.symmetry_defect() > 1e-12) throw config_error("A^T M != M A for the supplied matrices");
  return op;
}

void StretchedOperator::finalize() {
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(a_.rows());
  for (int k = 0; k < a_.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(a_, k); it; ++it) rows[it.row()] += std::abs(it.value());
  norm_inf_ = rows.size() ? rows.maxCoeff() : 0.0;
}

double StretchedOperator::symmetry_defect() const {
  // (M A)_pq - (M A)_qp, visited through A's pattern and its transpose.
  const SparseMatrix ma = m_.asDiagonal() * a_;
  const SparseMatrix diff = SparseMatrix(ma - SparseMatrix(ma.transpose()));
  double scale = 0.0;
  for (int k = 0; k < ma.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(ma, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
  double worst = 0.0;
  for (int k = 0; k < diff.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
  return scale > 0.0 ? worst / scale : worst;
}

StretchedOperator assemble_operator(const GridSpec& grid, const MediumModel& medium,
                                    const StretchingProfile& stretch) {
  const std::size_t n = grid.size();
  if (medium.speed_squared.size() != n) throw config_error("medium does not match the grid");
  for (int axis = 0; axis < grid.dims; ++axis) {
    if (stretch.primal[axis].size() != static_cast<std::size_t>(grid.extent(axis)) ||
        stretch.dual[axis].size() != static_cast<std::size_t>(grid.extent(axis) + 1))
      throw config_error("stretching profile does not match the grid");
  }
  const int nx = grid.extent(0);
  const int ny = grid.extent(1);
  std::vector<Eigen::Triplet<complex, int>> triplets;
  triplets.reserve(n * (grid.dims == 1 ? 3 : 5));
  cvec m(static_cast<Eigen::Index>(n));

  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const auto p = static_cast<int>(grid.linear(ix, iy));
      const double c2 = medium.speed_squared[static_cast<std::size_t>(p)];
      const complex hx = stretch.primal[0][static_cast<std::size_t>(ix)];
      const complex hy = grid.dims == 2 ? stretch.primal[1][static_cast<std::size_t>(iy)] : complex(1.0);
      const complex mass = hx * hy / c2;
      m[p] = mass;
      // Symmetric stiffness L = M A, then A = M^{-1} L row by row.
      complex diag = 0.0;
      auto link = [&](int q, complex weight) {
        diag += weight;
        if (q >= 0) triplets.emplace_back(p, q, -weight / mass);
      };
      {
        const complex wl = hy / stretch.dual[0][static_cast<std::size_t>(ix)];
        const complex wr = hy / stretch.dual[0][static_cast<std::size_t>(ix + 1)];
        link(ix > 0 ? static_cast<int>(grid.linear(ix - 1, iy)) : -1, wl);
        link(ix + 1 < nx ? static_cast<int>(grid.linear(ix + 1, iy)) : -1, wr);
      }
      if (grid.dims == 2) {
        const complex wd = hx / stretch.dual[1][static_cast<std::size_t>(iy)];
        const complex wu = hx / stretch.dual[1][static_cast<std::size_t>(iy + 1)];
        link(iy > 0 ? static_cast<int>(grid.linear(ix, iy - 1)) : -1, wd);
        link(iy + 1 < ny ? static_cast<int>(grid.linear(ix, iy + 1)) : -1, wu);
      }
      triplets.emplace_back(p, p, diag / mass);
    }
  }
  StretchedOperator op;
  op.a_.resize(static_cast<int>(n), static_cast<int>(n));
  op.a_.setFromTriplets(triplets.begin(), triplets.end());
  op.a_.makeCompressed();
  op.m_ = std::move(m);
  op.grid_ = grid;
  op.finalize();
  return op;
}

cvec assemble_source(const GridSpec& grid, CellIndex location, double amplitude, double width) {
  if (!std::isfinite(amplitude)) throw config_error("source amplitude must be finite");
  if (!(width >= 0.0)) throw config_error("source width must be >= 0");
  const std::size_t centre = interior_linear(grid, location);
  cvec b = cvec::Zero(static_cast<Eigen::Index>(grid.size()));
  const double volume = grid.cell_volume();
  if (width == 0.0) {
    b[static_cast<Eigen::Index>(centre)] = amplitude / volume;
    return b;
  }
  const int reach = static_cast<int>(std::ceil(4.0 * width));
  double total = 0.0;
  const int ylo = grid.dims == 2 ? -reach : 0;
  const int yhi = grid.dims == 2 ? reach : 0;
  for (int dy = ylo; dy <= yhi; ++dy) {
    for (int dx = -reach; dx <= reach; ++dx) {
      const CellIndex c{location.x + dx, location.y + dy};
      if (!in_interior(grid, c)) continue;
      const double w = std::exp(-0.5 * (dx * dx + dy * dy) / (width * width));
      b[static_cast<Eigen::Index>(interior_linear(grid, c))] = w;
      total += w;
    }
  }
  b *= amplitude / (total * volume);
  return b;
}

}  // namespace ekrom
