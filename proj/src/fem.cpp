#include "dynlap/fem.hpp"

#include <cmath>
#include <stdexcept>

namespace dynlap {

namespace {
// |x|^{p-2} x is continuous with limit 0 at x = 0 for p > 1; cut below this
// threshold instead of evaluating a negative power of zero.
constexpr double kSingularCut = 1e-14;

double power_coeff(double magnitude, double p) {
    return (magnitude > kSingularCut) ? std::pow(magnitude, p - 2.0) : 0.0;
}
}  // namespace

PSetting::PSetting(double p_value) : p(p_value) {
    if (!(p_value > 1.0) || !(p_value <= 2.0))
        throw std::invalid_argument("PSetting: p must lie in (1, 2], got " + std::to_string(p_value));
    q = p_value / (p_value - 1.0);
}

FeFunction FeFunction::zeros(std::shared_ptr<const Mesh> m) {
    const int n = m->num_nodes();
    return FeFunction(std::move(m), std::vector<double>(n, 0.0));
}

Vec2 FeFunction::gradient_on(int tri) const {
    const auto& t = mesh->triangle(tri);
    const auto& g = mesh->geometry(tri).grad_basis;
    Vec2 grad{0.0, 0.0};
    for (int a = 0; a < 3; ++a) grad += values[t[a]] * g[a];
    return grad;
}

double FeFunction::value_on(int tri, Vec2 pt) const {
    const auto& t = mesh->triangle(tri);
    const auto& c = mesh->corner_coords(tri);
    const double twice_area = 2.0 * mesh->geometry(tri).area;
    const double l0 = cross(c[1] - pt, c[2] - pt) / twice_area;
    const double l1 = cross(c[2] - pt, c[0] - pt) / twice_area;
    const double l2 = 1.0 - l0 - l1;
    return l0 * values[t[0]] + l1 * values[t[1]] + l2 * values[t[2]];
}

double FeFunction::integral() const {
    double s = 0.0;
    for (int t = 0; t < mesh->num_triangles(); ++t) {
        const auto& tri = mesh->triangle(t);
        const double third = mesh->geometry(t).area / 3.0;
        s += third * (values[tri[0]] + values[tri[1]] + values[tri[2]]);
    }
    return s;
}

double eval_F(const FeFunction& u, const PSetting& p) {
    const Mesh& mesh = *u.mesh;
    double s = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const double g = norm(u.gradient_on(t));
        s += mesh.geometry(t).area * std::pow(g, p.p);
    }
    return s;
}

double eval_F_dyn(const FeFunction& u, const PSetting& p, const TransportData& transport) {
    const Mesh& mesh = *u.mesh;
    if (transport.size() != mesh.num_triangles())
        throw std::invalid_argument("eval_F_dyn: transport data does not match the mesh");
    double s = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const Vec2 g = u.gradient_on(t);
        const double n1 = norm(g);
        const double n2 = norm(transport.a[t] * g);
        s += mesh.geometry(t).area * (0.5 * (std::pow(n1, p.p) + std::pow(n2, p.p)));
    }
    return s;
}

double eval_G(const FeFunction& u, const PSetting& p) {
    const Mesh& mesh = *u.mesh;
    double s = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        const double u0 = u.values[tri[0]], u1 = u.values[tri[1]], u2 = u.values[tri[2]];
        const double m01 = 0.5 * (u0 + u1), m12 = 0.5 * (u1 + u2), m20 = 0.5 * (u2 + u0);
        s += mesh.geometry(t).area / 3.0 *
             (std::pow(std::abs(m01), p.p) + std::pow(std::abs(m12), p.p) +
              std::pow(std::abs(m20), p.p));
    }
    return s;
}

double norm_p(const FeFunction& u, const PSetting& p) { return std::pow(eval_G(u, p), 1.0 / p.p); }

void normalize_p(FeFunction& u, const PSetting& p) {
    const double n = norm_p(u, p);
    if (n <= 0.0) throw std::invalid_argument("normalize_p: zero function");
    for (auto& v : u.values) v /= n;
}

double eval_J(const FeFunction& u, const PSetting& p, const TransportData& transport) {
    const double b = eval_G(u, p);
    if (b <= 0.0) throw std::invalid_argument("eval_J: zero function");
    return eval_F_dyn(u, p, transport) / b;
}

FunctionalValue evaluate_functionals(const FeFunction& u, const PSetting& p,
                                     const TransportData& transport) {
    FunctionalValue v;
    v.a = eval_F(u, p);
    v.a_dyn = eval_F_dyn(u, p, transport);
    v.b = eval_G(u, p);
    v.j = (v.b > 0.0) ? v.a_dyn / v.b : 0.0;
    return v;
}

ResidualData assemble_J_derivative(const FeFunction& u, const PSetting& p,
                                   const TransportData& transport) {
    const Mesh& mesh = *u.mesh;
    if (transport.size() != mesh.num_triangles())
        throw std::invalid_argument("assemble_J_derivative: transport data does not match the mesh");

    ResidualData out;
    out.value = evaluate_functionals(u, p, transport);
    const double b = out.value.b;
    if (b <= 0.0) throw std::invalid_argument("assemble_J_derivative: zero function");
    const double f_dyn = out.value.a_dyn;

    // J = F_dyn / G with
    //   F_dyn'(u)(v) = (p/2) int (|g|^{p-2} g.gv + |Ag|^{p-2} Ag.A gv)
    //   G'(u)(v)     = p int |u|^{p-2} u v
    // gives J'(u)(v) = F_dyn'(u)(v)/b - (F_dyn/b^2) G'(u)(v).
    const double grad_scale = p.p / (2.0 * b);
    const double mass_scale = p.p * f_dyn / (b * b);

    std::vector<double> r(mesh.num_nodes(), 0.0);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        const auto& gb = mesh.geometry(t).grad_basis;
        const double area = mesh.geometry(t).area;

        const Vec2 g = u.gradient_on(t);
        const Vec2 ag = transport.a[t] * g;
        const double c1 = power_coeff(norm(g), p.p);
        const double c2 = power_coeff(norm(ag), p.p);
        for (int a = 0; a < 3; ++a) {
            const Vec2 aga = transport.a[t] * gb[a];
            r[tri[a]] += grad_scale * area * (c1 * dot(g, gb[a]) + c2 * dot(ag, aga));
        }

        const double u0 = u.values[tri[0]], u1 = u.values[tri[1]], u2 = u.values[tri[2]];
        const double m01 = 0.5 * (u0 + u1), m12 = 0.5 * (u1 + u2), m20 = 0.5 * (u2 + u0);
        const double w01 = power_coeff(std::abs(m01), p.p) * m01;
        const double w12 = power_coeff(std::abs(m12), p.p) * m12;
        const double w20 = power_coeff(std::abs(m20), p.p) * m20;
        const double third = area / 3.0;
        // hat values at the midpoints: phi_a = 1/2 on the two adjacent edges
        r[tri[0]] -= mass_scale * third * 0.5 * (w01 + w20);
        r[tri[1]] -= mass_scale * third * 0.5 * (w01 + w12);
        r[tri[2]] -= mass_scale * third * 0.5 * (w12 + w20);
    }
    out.r = std::move(r);
    return out;
}

SparseMatrix assemble_weighted_stiffness(const Mesh& mesh, std::span<const Mat2> weights) {
    if (static_cast<int>(weights.size()) != mesh.num_triangles())
        throw std::invalid_argument("assemble_weighted_stiffness: one weight per triangle required");
    for (const Mat2& w : weights) {
        double lo, hi;
        sym_eigenvalues(w, lo, hi);
        if (std::abs(w.a12 - w.a21) > 1e-10 * (1.0 + std::abs(hi)) || lo <= 0.0)
            throw std::invalid_argument("assemble_weighted_stiffness: weight not symmetric positive definite");
    }
    SparseBuilder builder(mesh.num_nodes());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        const auto& gb = mesh.geometry(t).grad_basis;
        const double area = mesh.geometry(t).area;
        const Mat2& w = weights[t];
        for (int a = 0; a < 3; ++a) {
            const Vec2 wga = w * gb[a];
            for (int b = 0; b < 3; ++b)
                builder.add(tri[a], tri[b], area * dot(wga, gb[b]));
        }
    }
    return builder.compress();
}

SparseMatrix assemble_mass(const Mesh& mesh) {
    SparseBuilder builder(mesh.num_nodes());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        const double w = mesh.geometry(t).area / 12.0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) builder.add(tri[a], tri[b], w * (a == b ? 2.0 : 1.0));
    }
    return builder.compress();
}

std::vector<double> lumped_mass(const Mesh& mesh) {
    std::vector<double> w(mesh.num_nodes(), 0.0);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        const double third = mesh.geometry(t).area / 3.0;
        for (int a = 0; a < 3; ++a) w[tri[a]] += third;
    }
    return w;
}

FeFunction grad_J(const FeFunction& u, const PSetting& p, const TransportData& transport,
                  const LinearConstraint& constraint, const SparseMatrix& k_w, double* form_value,
                  const std::vector<double>* warm_start) {
    ResidualData res = assemble_J_derivative(u, p, transport);
    std::vector<double> rhs = res.r;
    std::vector<double> d = cg_solve(k_w, std::move(rhs), constraint, {}, nullptr, warm_start);
    if (form_value) *form_value = dot(std::span<const double>(res.r), std::span<const double>(d));
    return FeFunction(u.mesh, std::move(d));
}

}  // namespace dynlap
