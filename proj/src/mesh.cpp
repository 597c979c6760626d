#include "dynlap/mesh.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dynlap {

void Domain::validate() const {
    if (!(x_min < x_max) || !(y_min < y_max)) {
        std::ostringstream os;
        os << "invalid domain bounds: [" << x_min << ", " << x_max << "] x ["
           << y_min << ", " << y_max << "]";
        throw std::invalid_argument(os.str());
    }
}

Vec2 unwrap_displacement(const Domain& dom, Vec2 a, Vec2 b) {
    Vec2 d = b - a;
    if (dom.periodic_x) {
        const double L = dom.width();
        d.x -= L * std::round(d.x / L);
    }
    if (dom.periodic_y) {
        const double L = dom.height();
        d.y -= L * std::round(d.y / L);
    }
    return d;
}

Vec2 wrap_point(const Domain& dom, Vec2 p) {
    if (dom.periodic_x) {
        const double L = dom.width();
        p.x -= L * std::floor((p.x - dom.x_min) / L);
    }
    if (dom.periodic_y) {
        const double L = dom.height();
        p.y -= L * std::floor((p.y - dom.y_min) / L);
    }
    return p;
}

TriangleGeometry triangle_geometry(Vec2 a, Vec2 b, Vec2 c) {
    TriangleGeometry g;
    const Vec2 e1 = b - a;
    const Vec2 e2 = c - a;
    const double twice_area = cross(e1, e2);
    g.area = 0.5 * twice_area;
    // grad of the hat at vertex a is perpendicular to the opposite edge bc,
    // pointing inward: grad phi_a = rot90(c - b) / (2A), rot90(x,y) = (-y,x).
    auto grad = [twice_area](Vec2 p, Vec2 q) { return Vec2{-(q - p).y / twice_area, (q - p).x / twice_area}; };
    g.grad_basis[0] = grad(b, c);
    g.grad_basis[1] = grad(c, a);
    g.grad_basis[2] = grad(a, b);
    g.centroid = (a + b + c) * (1.0 / 3.0);
    return g;
}

Mesh::Mesh(const Domain& dom, int nx, int ny) : dom_(dom), nx_(nx), ny_(ny) {
    dom.validate();
    if (nx < 2 || ny < 2) throw std::invalid_argument("build_mesh: need nx >= 2 and ny >= 2");

    hx_ = dom.width() / nx;
    hy_ = dom.height() / ny;
    nxn_ = dom.periodic_x ? nx : nx + 1;
    nyn_ = dom.periodic_y ? ny : ny + 1;

    nodes_.resize(static_cast<size_t>(nxn_) * nyn_);
    boundary_.assign(nodes_.size(), false);
    for (int j = 0; j < nyn_; ++j) {
        for (int i = 0; i < nxn_; ++i) {
            const int id = j * nxn_ + i;
            nodes_[id] = {dom.x_min + i * hx_, dom.y_min + j * hy_};
            bool b = false;
            if (!dom.periodic_x && (i == 0 || i == nx)) b = true;
            if (!dom.periodic_y && (j == 0 || j == ny)) b = true;
            boundary_[id] = b;
            if (b) ++n_boundary_;
        }
    }

    tris_.reserve(2 * static_cast<size_t>(nx) * ny);
    tri_coords_.reserve(tris_.capacity());
    geo_.reserve(tris_.capacity());
    total_area_ = 0.0;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const Vec2 ll{dom.x_min + i * hx_, dom.y_min + j * hy_};
            const Vec2 lr{ll.x + hx_, ll.y};
            const Vec2 ur{ll.x + hx_, ll.y + hy_};
            const Vec2 ul{ll.x, ll.y + hy_};
            const int n_ll = grid_node(i, j);
            const int n_lr = grid_node(i + 1, j);
            const int n_ur = grid_node(i + 1, j + 1);
            const int n_ul = grid_node(i, j + 1);
            tris_.push_back({n_ll, n_lr, n_ur});
            tri_coords_.push_back({ll, lr, ur});
            tris_.push_back({n_ll, n_ur, n_ul});
            tri_coords_.push_back({ll, ur, ul});
        }
    }
    for (const auto& tc : tri_coords_) {
        geo_.push_back(triangle_geometry(tc[0], tc[1], tc[2]));
        if (geo_.back().area <= 0.0) throw std::logic_error("mesh triangle with non-positive area");
        total_area_ += geo_.back().area;
    }
}

int Mesh::grid_node(int i, int j) const {
    if (dom_.periodic_x) i %= nx_;
    if (dom_.periodic_y) j %= ny_;
    return j * nxn_ + i;
}

std::vector<int> Mesh::boundary_node_indices() const {
    std::vector<int> out;
    out.reserve(n_boundary_);
    for (int i = 0; i < num_nodes(); ++i)
        if (boundary_[i]) out.push_back(i);
    return out;
}

std::string Mesh::signature() const {
    std::ostringstream os;
    os.precision(17);
    os << "rect " << dom_.x_min << " " << dom_.x_max << " " << dom_.y_min << " " << dom_.y_max
       << " per " << dom_.periodic_x << dom_.periodic_y << " grid " << nx_ << "x" << ny_;
    return os.str();
}

Mesh build_mesh(const Domain& dom, int nx, int ny) { return Mesh(dom, nx, ny); }

}  // namespace dynlap
