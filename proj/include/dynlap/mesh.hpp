#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dynlap/geometry.hpp"

namespace dynlap {

/// Axis-aligned rectangular domain, optionally periodic in either direction.
struct Domain {
    double x_min = 0.0, x_max = 1.0;
    double y_min = 0.0, y_max = 1.0;
    bool periodic_x = false;
    bool periodic_y = false;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return width() * height(); }
    bool is_torus() const { return periodic_x && periodic_y; }
    bool has_boundary() const { return !is_torus(); }
    void validate() const;
};

/// Shortest displacement b - a respecting periodic wrap-around.
/// Each periodic component is reduced to magnitude <= half the period.
Vec2 unwrap_displacement(const Domain& dom, Vec2 a, Vec2 b);

/// Reduce a point into the fundamental domain (periodic directions only).
Vec2 wrap_point(const Domain& dom, Vec2 p);

/// Constant P1 data of one triangle: area, hat-function gradients, centroid.
struct TriangleGeometry {
    double area = 0.0;
    std::array<Vec2, 3> grad_basis{};
    Vec2 centroid{};
};

/// Structured triangulation of a rectangle. Each cell is split along its
/// lower-left to upper-right diagonal. Periodic seams are identified at the
/// index level, so node indices always refer to canonical nodes.
class Mesh {
public:
    Mesh(const Domain& dom, int nx, int ny);

    const Domain& domain() const { return dom_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double hx() const { return hx_; }
    double hy() const { return hy_; }

    int num_nodes() const { return static_cast<int>(nodes_.size()); }
    int num_triangles() const { return static_cast<int>(tris_.size()); }

    Vec2 node(int i) const { return nodes_[i]; }
    const std::vector<Vec2>& nodes() const { return nodes_; }
    const std::array<int, 3>& triangle(int t) const { return tris_[t]; }
    bool is_boundary_node(int i) const { return boundary_[i]; }
    int num_boundary_nodes() const { return n_boundary_; }
    std::vector<int> boundary_node_indices() const;

    /// Canonical node index of grid position (i, j); ghost positions on
    /// periodic seams (i == nx, j == ny) map back to the first row/column.
    int grid_node(int i, int j) const;
    /// Nodes per grid row / number of rows after seam identification.
    int nodes_per_row() const { return nxn_; }
    int node_rows() const { return nyn_; }

    const TriangleGeometry& geometry(int t) const { return geo_[t]; }
    /// Vertex coordinates of triangle t in cell-local (unwrapped) position;
    /// for seam triangles these differ from the canonical node coordinates.
    const std::array<Vec2, 3>& corner_coords(int t) const { return tri_coords_[t]; }

    double total_area() const { return total_area_; }

    /// Stable identifier of the discretization, used for cache keys and
    /// dump headers.
    std::string signature() const;

private:
    Domain dom_;
    int nx_ = 0, ny_ = 0;
    int nxn_ = 0, nyn_ = 0;
    double hx_ = 0.0, hy_ = 0.0;
    double total_area_ = 0.0;
    int n_boundary_ = 0;
    std::vector<Vec2> nodes_;
    std::vector<std::array<int, 3>> tris_;
    std::vector<std::array<Vec2, 3>> tri_coords_;
    std::vector<TriangleGeometry> geo_;
    std::vector<bool> boundary_;
};

Mesh build_mesh(const Domain& dom, int nx, int ny);

/// Recompute P1 data from raw vertex coordinates (used by tests as well).
TriangleGeometry triangle_geometry(Vec2 a, Vec2 b, Vec2 c);

}  // namespace dynlap
