#include "expcap/grid.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "expcap/errors.hpp"

namespace expcap {

std::string to_string(Shape s) {
  switch (s) {
    case Shape::Interval: return "interval";
    case Shape::Square: return "square";
    case Shape::Disk: return "disk";
  }
  return "?";
}

std::string to_string(WeightKind k) { return k == WeightKind::Lebesgue ? "lebesgue" : "rho"; }

Shape shape_from_string(const std::string& s) {
  if (s == "interval") return Shape::Interval;
  if (s == "square") return Shape::Square;
  if (s == "disk") return Shape::Disk;
  throw std::invalid_argument("unknown shape: " + s);
}

WeightKind weight_kind_from_string(const std::string& s) {
  if (s == "lebesgue") return WeightKind::Lebesgue;
  if (s == "rho") return WeightKind::Rho;
  throw std::invalid_argument("unknown weight kind: " + s);
}

double Grid::cell_measure() const { return std::pow(h, dim); }
double Grid::boundary_cell_measure() const { return std::pow(h, dim - 1); }

Field Grid::weights(WeightKind kind) const {
  Field w = Field::Constant(num_interior(), cell_measure());
  if (kind == WeightKind::Rho) w = w.cwiseProduct(rho);
  return w;
}

double Grid::total_weight(WeightKind kind) const { return weights(kind).sum(); }

int Grid::nearest_interior(double px, double py) const {
  int best = -1;
  double bd = std::numeric_limits<double>::infinity();
  for (int k = 0; k < num_interior(); ++k) {
    double d = (x[k] - px) * (x[k] - px) + (y[k] - py) * (y[k] - py);
    if (d < bd - 1e-15) {
      bd = d;
      best = k;
    }
  }
  return best;
}

int Grid::nearest_boundary(double px, double py) const {
  int best = -1;
  double bd = std::numeric_limits<double>::infinity();
  for (int k = 0; k < num_boundary(); ++k) {
    double d = (bx[k] - px) * (bx[k] - px) + (by[k] - py) * (by[k] - py);
    if (d < bd - 1e-15) {
      bd = d;
      best = k;
    }
  }
  return best;
}

int Grid::interior_at(int i, int j) const {
  if (i < 0 || i >= nx || j < 0 || j >= ny) return -1;
  return lattice_interior[lattice_index(i, j)];
}

std::vector<int> Grid::dilate(const std::vector<int>& nodes, int rings) const {
  std::set<int> cur(nodes.begin(), nodes.end());
  for (int r = 0; r < rings; ++r) {
    std::set<int> next = cur;
    for (int k : cur) {
      auto [i, j] = lattice_ij(interior_lattice[k]);
      const int dirs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
      for (auto& d : dirs) {
        int q = interior_at(i + d[0], j + d[1]);
        if (q >= 0) next.insert(q);
      }
    }
    cur.swap(next);
  }
  return {cur.begin(), cur.end()};
}

std::vector<int> Grid::dilate_boundary(const std::vector<int>& nodes, int rings) const {
  std::set<int> cur(nodes.begin(), nodes.end());
  for (int r = 0; r < rings; ++r) {
    std::set<int> next = cur;
    for (int b : cur) {
      auto [i, j] = lattice_ij(boundary[b].lattice);
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          int ii = i + di, jj = j + dj;
          if (ii < 0 || ii >= nx || jj < 0 || jj >= ny) continue;
          int q = lattice_boundary[lattice_index(ii, jj)];
          if (q >= 0) next.insert(q);
        }
    }
    cur.swap(next);
  }
  return {cur.begin(), cur.end()};
}

Grid build_grid(Shape shape, int n) {
  if (n < 3) throw TooCoarse("grid needs at least 3 nodes per axis, got " + std::to_string(n));
  Grid g;
  g.shape = shape;
  g.n = n;
  g.dim = shape == Shape::Interval ? 1 : 2;
  g.h = 1.0 / (n + 1);
  g.nx = n + 2;
  g.ny = g.dim == 1 ? 1 : n + 2;
  const int total = g.nx * g.ny;
  g.lattice_interior.assign(total, -1);
  g.lattice_boundary.assign(total, -1);

  const double R = 0.5;
  auto inside = [&](int i, int j) {
    if (i < 1 || i > n) return false;
    if (g.dim == 1) return true;
    if (j < 1 || j > n) return false;
    if (shape == Shape::Disk) {
      double dx = i * g.h - 0.5, dy = j * g.h - 0.5;
      return std::sqrt(dx * dx + dy * dy) < R;
    }
    return true;
  };

  std::vector<double> xs, ys, rs;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (!inside(i, j)) continue;
      int l = g.lattice_index(i, j);
      g.lattice_interior[l] = static_cast<int>(g.interior_lattice.size());
      g.interior_lattice.push_back(l);
      double px = g.lattice_x(i), py = g.lattice_y(j);
      xs.push_back(px);
      ys.push_back(py);
      double r;
      switch (shape) {
        case Shape::Interval: r = std::min(px, 1.0 - px); break;
        case Shape::Square: r = std::min(std::min(px, 1.0 - px), std::min(py, 1.0 - py)); break;
        default: r = R - std::hypot(px - 0.5, py - 0.5); break;
      }
      rs.push_back(r);
    }
  g.x = Eigen::Map<Field>(xs.data(), xs.size());
  g.y = Eigen::Map<Field>(ys.data(), ys.size());
  g.rho = Eigen::Map<Field>(rs.data(), rs.size());

  const int dirs[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  std::vector<double> bxs, bys;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      int l = g.lattice_index(i, j);
      if (g.lattice_interior[l] >= 0) continue;
      BoundaryNode b;
      b.lattice = l;
      double px = g.lattice_x(i), py = g.lattice_y(j);
      double ox = px - 0.5, oy = g.dim == 1 ? 0.0 : py - 0.5;
      double best = -std::numeric_limits<double>::infinity();
      for (auto& d : dirs) {
        int q = g.interior_at(i - d[0], j - d[1]);
        if (q < 0) continue;
        b.neighbors.push_back(q);
        double dot = d[0] * ox + d[1] * oy;
        if (dot > best + 1e-14) {
          best = dot;
          b.di = d[0];
          b.dj = d[1];
          b.inner = q;
        }
      }
      if (b.neighbors.empty()) continue;
      b.inner2 = g.interior_at(i - 2 * b.di, j - 2 * b.dj);
      g.lattice_boundary[l] = static_cast<int>(g.boundary.size());
      g.boundary.push_back(std::move(b));
      bxs.push_back(px);
      bys.push_back(py);
    }
  g.bx = Eigen::Map<Field>(bxs.data(), bxs.size());
  g.by = Eigen::Map<Field>(bys.data(), bys.size());
  return g;
}

namespace {

// out[x] = max of a[p] over window starts p in [x-s+1, x] that exist
void sliding_max(const std::vector<double>& a, int s, int m, std::vector<double>& out) {
  const int L = static_cast<int>(a.size());
  out.assign(m, 0.0);
  std::deque<int> dq;
  int next = 0;
  for (int x = 0; x < m; ++x) {
    while (next <= std::min(x, L - 1)) {
      while (!dq.empty() && a[dq.back()] <= a[next]) dq.pop_back();
      dq.push_back(next++);
    }
    while (!dq.empty() && dq.front() < x - s + 1) dq.pop_front();
    out[x] = dq.empty() ? 0.0 : a[dq.front()];
  }
}

}  // namespace

Field maximal_function(const Field& f, const Grid& grid) {
  if (f.size() != grid.num_interior()) throw GridMismatch("field size does not match grid");
  // Q0: bounding cube of the closure padded by one cell
  const int m = grid.nx + 2;
  const int my = grid.dim == 1 ? 1 : grid.ny + 2;
  std::vector<double> cells(static_cast<size_t>(m) * my, 0.0);
  for (int k = 0; k < grid.num_interior(); ++k) {
    auto [i, j] = grid.lattice_ij(grid.interior_lattice[k]);
    int jj = grid.dim == 1 ? 0 : j + 1;
    cells[static_cast<size_t>(jj) * m + i + 1] = std::abs(f[k]);
  }
  std::vector<double> best(cells.size(), 0.0);

  if (grid.dim == 1) {
    std::vector<double> S(m + 1, 0.0), avg, out;
    for (int i = 0; i < m; ++i) S[i + 1] = S[i] + cells[i];
    for (int s = 1; s <= m; ++s) {
      avg.assign(m - s + 1, 0.0);
      for (int p = 0; p + s <= m; ++p) avg[p] = (S[p + s] - S[p]) / s;
      sliding_max(avg, s, m, out);
      for (int i = 0; i < m; ++i) best[i] = std::max(best[i], out[i]);
    }
  } else {
    const int W = m + 1;
    std::vector<double> S(static_cast<size_t>(W) * W, 0.0);
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i)
        S[(j + 1) * W + i + 1] =
            cells[j * m + i] + S[j * W + i + 1] + S[(j + 1) * W + i] - S[j * W + i];
    std::vector<double> row, out, col, colout;
    std::vector<double> B;
    for (int s = 1; s <= m; ++s) {
      const int L = m - s + 1;
      const double inv = 1.0 / (static_cast<double>(s) * s);
      B.assign(static_cast<size_t>(m) * L, 0.0);  // B[x*L + q]
      row.resize(L);
      for (int q = 0; q < L; ++q) {
        for (int p = 0; p < L; ++p)
          row[p] = (S[(q + s) * W + p + s] - S[q * W + p + s] - S[(q + s) * W + p] + S[q * W + p]) * inv;
        sliding_max(row, s, m, out);
        for (int x = 0; x < m; ++x) B[static_cast<size_t>(x) * L + q] = out[x];
      }
      col.resize(L);
      for (int x = 0; x < m; ++x) {
        for (int q = 0; q < L; ++q) col[q] = B[static_cast<size_t>(x) * L + q];
        sliding_max(col, s, m, colout);
        for (int yv = 0; yv < m; ++yv) best[yv * m + x] = std::max(best[yv * m + x], colout[yv]);
      }
    }
  }

  Field M(grid.num_interior());
  for (int k = 0; k < grid.num_interior(); ++k) {
    auto [i, j] = grid.lattice_ij(grid.interior_lattice[k]);
    int jj = grid.dim == 1 ? 0 : j + 1;
    M[k] = best[static_cast<size_t>(jj) * m + i + 1];
  }
  return M;
}

double llnl_norm(const Field& f, const Grid& grid, WeightKind kind) {
  return maximal_function(f, grid).dot(grid.weights(kind));
}

double integrate(const Field& f, const Grid& grid, WeightKind kind) {
  if (f.size() != grid.num_interior()) throw GridMismatch("field size does not match grid");
  return f.dot(grid.weights(kind));
}

void write_field_csv(std::ostream& os, const Field& f, const Grid& grid, WeightKind kind) {
  if (f.size() != grid.num_interior()) throw GridMismatch("field size does not match grid");
  os << "shape,n,h,weight_kind\n";
  os << to_string(grid.shape) << ',' << grid.n << ',' << std::setprecision(17) << grid.h << ','
     << to_string(kind) << '\n';
  os << "index,x,y,value\n";
  for (int k = 0; k < grid.num_interior(); ++k)
    os << k << ',' << grid.x[k] << ',' << grid.y[k] << ',' << f[k] << '\n';
}

void write_field_csv(const std::string& path, const Field& f, const Grid& grid, WeightKind kind) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_field_csv(os, f, grid, kind);
}

LoadedField read_field_csv(std::istream& is) {
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(tok);
    return out;
  };
  if (!std::getline(is, line) || line != "shape,n,h,weight_kind")
    throw std::runtime_error("field csv: bad header");
  std::getline(is, line);
  auto meta = split(line);
  if (meta.size() != 4) throw std::runtime_error("field csv: bad metadata row");
  LoadedField out{shape_from_string(meta[0]), std::stoi(meta[1]), std::stod(meta[2]),
                  weight_kind_from_string(meta[3]), Field()};
  std::getline(is, line);
  std::vector<double> vals;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto row = split(line);
    if (row.size() != 4) throw std::runtime_error("field csv: bad data row");
    vals.push_back(std::stod(row[3]));
  }
  out.values = Eigen::Map<Field>(vals.data(), vals.size());
  return out;
}

LoadedField read_field_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_field_csv(is);
}

}  // namespace expcap
