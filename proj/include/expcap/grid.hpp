#pragma once
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace expcap {

using Field = Eigen::VectorXd;

enum class Shape { Interval, Square, Disk };
enum class WeightKind { Lebesgue, Rho };

std::string to_string(Shape s);
std::string to_string(WeightKind k);
Shape shape_from_string(const std::string& s);
WeightKind weight_kind_from_string(const std::string& s);

struct BoundaryNode {
  int lattice = -1;
  int di = 0, dj = 0;          // outward lattice direction
  int inner = -1;              // interior index at lattice - (di,dj)
  int inner2 = -1;             // interior index two steps in, or -1
  std::vector<int> neighbors;  // all interior indices coupled through the stencil
};

/// Uniform lattice on [0,1]^d with spacing h = 1/(n+1).
/// Interior nodes carry the unknowns; boundary nodes are the lattice
/// nodes outside the domain that touch an interior node through the stencil.
class Grid {
 public:
  Shape shape = Shape::Square;
  int n = 0;
  int dim = 2;
  double h = 0.0;
  int nx = 0, ny = 0;

  std::vector<int> interior_lattice;
  std::vector<int> lattice_interior;
  std::vector<int> lattice_boundary;
  std::vector<BoundaryNode> boundary;

  Field x, y, rho;
  Field bx, by;

  int num_interior() const { return static_cast<int>(interior_lattice.size()); }
  int num_boundary() const { return static_cast<int>(boundary.size()); }
  double cell_measure() const;
  double boundary_cell_measure() const;

  int lattice_index(int i, int j) const { return j * nx + i; }
  std::pair<int, int> lattice_ij(int l) const { return {l % nx, l / nx}; }
  double lattice_x(int i) const { return i * h; }
  double lattice_y(int j) const { return dim == 1 ? 0.0 : j * h; }

  Field weights(WeightKind kind) const;
  double total_weight(WeightKind kind) const;

  int nearest_interior(double px, double py = 0.0) const;
  int nearest_boundary(double px, double py = 0.0) const;
  int interior_at(int i, int j = 0) const;

  // interior nodes within `rings` stencil steps of the given interior set
  std::vector<int> dilate(const std::vector<int>& nodes, int rings = 1) const;
  // boundary nodes within `rings` steps (8-neighbourhood) along the boundary
  std::vector<int> dilate_boundary(const std::vector<int>& nodes, int rings = 1) const;

  bool same_as(const Grid& other) const { return shape == other.shape && n == other.n; }
};

Grid build_grid(Shape shape, int n);

struct WeightedField {
  Field values;
  WeightKind kind = WeightKind::Lebesgue;
};

Field maximal_function(const Field& f, const Grid& grid);
double llnl_norm(const Field& f, const Grid& grid, WeightKind kind);
double integrate(const Field& f, const Grid& grid, WeightKind kind);

void write_field_csv(std::ostream& os, const Field& f, const Grid& grid, WeightKind kind);
void write_field_csv(const std::string& path, const Field& f, const Grid& grid, WeightKind kind);

struct LoadedField {
  Shape shape;
  int n;
  double h;
  WeightKind kind;
  Field values;
};
LoadedField read_field_csv(std::istream& is);
LoadedField read_field_csv(const std::string& path);

}  // namespace expcap
