#include "doctest.h"

#include <cmath>
#include <memory>
#include <random>

#include "dynlap/fem.hpp"
#include "oracles.hpp"

using namespace dynlap;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::shared_ptr<const Mesh> square_mesh(int n) {
    return std::make_shared<Mesh>(Domain{0, 1, 0, 1}, n, n);
}

std::shared_ptr<const Mesh> torus_mesh(int n) {
    return std::make_shared<Mesh>(Domain{0, 2 * kPi, 0, 2 * kPi, true, true}, n, n);
}

FeFunction interpolate(std::shared_ptr<const Mesh> mesh, double (*f)(Vec2)) {
    FeFunction u = FeFunction::zeros(mesh);
    for (int i = 0; i < mesh->num_nodes(); ++i) u.values[i] = f(mesh->node(i));
    return u;
}

FeFunction random_function(std::shared_ptr<const Mesh> mesh, unsigned seed, double lo, double hi) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    FeFunction u = FeFunction::zeros(mesh);
    for (auto& v : u.values) v = dist(rng);
    return u;
}

/// Independent stiffness assembly through the cotangent formula:
/// K_ij = -(cot angle_opposite_ij) / 2 on each triangle.
std::vector<double> cotangent_stiffness_dense(const Mesh& mesh) {
    const int n = mesh.num_nodes();
    std::vector<double> k(n * n, 0.0);
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        const auto& c = mesh.corner_coords(t);
        for (int a = 0; a < 3; ++a) {
            const int b = (a + 1) % 3, d = (a + 2) % 3;
            const Vec2 e1 = c[b] - c[a], e2 = c[d] - c[a];
            const double cot = dot(e1, e2) / cross(e1, e2);
            // edge (b, d) is opposite vertex a
            k[tri[b] * n + tri[d]] -= 0.5 * cot;
            k[tri[d] * n + tri[b]] -= 0.5 * cot;
            k[tri[b] * n + tri[b]] += 0.5 * cot;
            k[tri[d] * n + tri[d]] += 0.5 * cot;
        }
    }
    return k;
}

}  // namespace

TEST_CASE("PSetting validates its range") {
    CHECK(PSetting(2.0).q == doctest::Approx(2.0));
    CHECK(PSetting(1.5).q == doctest::Approx(3.0));
    CHECK_THROWS_AS(PSetting(1.0), std::invalid_argument);
    CHECK_THROWS_AS(PSetting(2.5), std::invalid_argument);
}

TEST_CASE("eval_F on plane functions") {
    auto mesh = square_mesh(10);
    const FeFunction u = interpolate(mesh, [](Vec2 p) { return p.x; });
    CHECK(eval_F(u, PSetting(2.0)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(eval_F(u, PSetting(1.5)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(eval_F(FeFunction::zeros(mesh), PSetting(1.7)) == 0.0);
}

TEST_CASE("eval_G") {
    auto mesh = square_mesh(12);
    const FeFunction one(mesh, std::vector<double>(mesh->num_nodes(), 1.0));
    CHECK(eval_G(one, PSetting(1.4)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(eval_G(FeFunction::zeros(mesh), PSetting(2.0)) == 0.0);
    const FeFunction ux = interpolate(mesh, [](Vec2 p) { return p.x; });
    // the midpoint rule integrates |x|^2 exactly
    CHECK(eval_G(ux, PSetting(2.0)) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("identity transport reduces the dynamic energy bit-for-bit") {
    auto mesh = square_mesh(9);
    const TransportData id = identity_transport(*mesh);
    for (unsigned seed : {1u, 2u, 3u}) {
        const FeFunction u = random_function(mesh, seed, -2.0, 2.0);
        for (double p : {1.3, 1.6, 2.0}) {
            CHECK(eval_F_dyn(u, PSetting(p), id) == eval_F(u, PSetting(p)));
        }
    }
}

TEST_CASE("synthetic transport A = 2I scales the pushforward term") {
    auto mesh = square_mesh(8);
    TransportData td = identity_transport(*mesh);
    for (auto& a : td.a) a = Mat2{2, 0, 0, 2};
    const FeFunction u = interpolate(mesh, [](Vec2 p) { return p.x; });
    // (1/2)(|grad u|^2 + |2 grad u|^2) = (1 + 4)/2 over the unit square
    CHECK(eval_F_dyn(u, PSetting(2.0), td) == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("pushforward-resampling oracle for the dynamic energy") {
    // F_dyn(u) = (F(u) + F(u о T^{-1}))/2; build the pushforward on a finer
    // mesh by pulling each fine node back through the forward map of the
    // inverse... instead use the standard map where the inverse is explicit:
    // T(x,y) = (x+y+a sin x, y+a sin x),  T^{-1}(X,Y) = (X-Y, Y-a sin(X-Y)).
    const FlowMap f = FlowMap::standard_map();
    auto mesh = torus_mesh(24);
    const TransportData td = precompute_transport(f, *mesh);
    FeFunction u = interpolate(mesh, [](Vec2 p) { return std::sin(p.x) + 0.5 * std::cos(p.y); });

    const PSetting p(1.6);
    const double f_dyn = eval_F_dyn(u, p, td);

    auto fine = torus_mesh(96);
    FeFunction pushed = FeFunction::zeros(fine);
    const double a = f.map_parameter;
    for (int i = 0; i < fine->num_nodes(); ++i) {
        const Vec2 q = fine->node(i);
        const double x = q.x - q.y;
        const double y = q.y - a * std::sin(x);
        pushed.values[i] = std::sin(x) + 0.5 * std::cos(y);  // u at T^{-1}(q)
    }
    FeFunction u_fine = FeFunction::zeros(fine);
    for (int i = 0; i < fine->num_nodes(); ++i) {
        const Vec2 q = fine->node(i);
        u_fine.values[i] = std::sin(q.x) + 0.5 * std::cos(q.y);
    }
    const double oracle = 0.5 * (eval_F(u_fine, p) + eval_F(pushed, p));
    CHECK(f_dyn == doctest::Approx(oracle).epsilon(0.02));
}

TEST_CASE("weighted stiffness matches the cotangent-formula assembly") {
    const Mesh mesh(Domain{0, 1, 0, 1}, 2, 2);
    std::vector<Mat2> weights(mesh.num_triangles(), Mat2::identity());
    const SparseMatrix k = assemble_weighted_stiffness(mesh, weights);
    const std::vector<double> ref = cotangent_stiffness_dense(mesh);
    const int n = mesh.num_nodes();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double kij = 0.0;
            for (int c = k.row_ptr()[i]; c < k.row_ptr()[i + 1]; ++c)
                if (k.cols()[c] == j) kij = k.vals()[c];
            CHECK(kij == doctest::Approx(ref[i * n + j]).epsilon(1e-12));
        }
    }
}

TEST_CASE("stiffness has constants in its kernel before constraints") {
    auto mesh = square_mesh(7);
    std::vector<Mat2> weights(mesh->num_triangles(), Mat2{1.3, 0.2, 0.2, 0.9});
    const SparseMatrix k = assemble_weighted_stiffness(*mesh, weights);
    const std::vector<double> ones(mesh->num_nodes(), 1.0);
    for (double v : k.multiply(ones)) CHECK(std::abs(v) < 1e-12);
    CHECK(k.symmetry_defect() < 1e-14);
}

TEST_CASE("doubling the weight doubles the matrix exactly") {
    auto mesh = square_mesh(5);
    std::vector<Mat2> w1(mesh->num_triangles(), Mat2::identity());
    std::vector<Mat2> w2(mesh->num_triangles(), Mat2{2, 0, 0, 2});
    const SparseMatrix k1 = assemble_weighted_stiffness(*mesh, w1);
    const SparseMatrix k2 = assemble_weighted_stiffness(*mesh, w2);
    REQUIRE(k1.nnz() == k2.nnz());
    for (int c = 0; c < k1.nnz(); ++c) CHECK(k2.vals()[c] == 2.0 * k1.vals()[c]);
}

TEST_CASE("non-SPD weights are rejected") {
    auto mesh = square_mesh(4);
    std::vector<Mat2> weights(mesh->num_triangles(), Mat2{1, 0, 0, -1});
    CHECK_THROWS_AS(assemble_weighted_stiffness(*mesh, weights), std::invalid_argument);
}

TEST_CASE("mass matrix integrals") {
    auto mesh = square_mesh(11);
    const SparseMatrix m = assemble_mass(*mesh);
    double total = 0.0;
    for (double v : m.vals()) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

    const std::vector<double> ones(mesh->num_nodes(), 1.0);
    CHECK(m.quadratic_form(ones) == doctest::Approx(1.0).epsilon(1e-12));

    const FeFunction ux = interpolate(mesh, [](Vec2 p) { return p.x; });
    CHECK(m.quadratic_form(ux.values) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    const auto lumped = lumped_mass(*mesh);
    double lump_total = 0.0;
    for (double v : lumped) {
        CHECK(v > 0.0);
        lump_total += v;
    }
    CHECK(lump_total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("assembled derivative matches finite differences of J") {
    auto check_on = [](std::shared_ptr<const Mesh> mesh, const TransportData& td, unsigned seed) {
        const FeFunction u = random_function(mesh, seed, 0.5, 1.5);
        std::mt19937 rng(seed + 100);
        std::normal_distribution<double> gauss;
        for (double pv : {1.3, 1.6, 2.0}) {
            const PSetting p(pv);
            const ResidualData res = assemble_J_derivative(u, p, td);
            for (int dir = 0; dir < 20; ++dir) {
                FeFunction v = FeFunction::zeros(mesh);
                for (auto& x : v.values) x = gauss(rng);
                const double h = 1e-6;
                FeFunction up = u, um = u;
                axpy(h, v.values, up.values);
                axpy(-h, v.values, um.values);
                const double fd = (eval_J(up, p, td) - eval_J(um, p, td)) / (2 * h);
                const double assembled = dot(res.r, v.values);
                CHECK(std::abs(assembled - fd) / std::max(std::abs(fd), 1e-12) < 1e-5);
            }
        }
    };
    SUBCASE("identity transport on the unit square") {
        auto mesh = square_mesh(10);
        check_on(mesh, identity_transport(*mesh), 7);
    }
    SUBCASE("standard-map transport on the torus") {
        auto mesh = torus_mesh(10);
        check_on(mesh, precompute_transport(FlowMap::standard_map(), *mesh), 9);
    }
}

TEST_CASE("J is zero-homogeneous and the descent direction scales as 1/c") {
    auto mesh = square_mesh(10);
    const TransportData td = identity_transport(*mesh);
    const PSetting p(1.6);
    FeFunction u = random_function(mesh, 31, 0.5, 1.5);
    for (int i : mesh->boundary_node_indices()) u.values[i] = 0.0;

    FeFunction u2 = u;
    for (auto& v : u2.values) v *= 2.0;
    CHECK(eval_J(u, p, td) == doctest::Approx(eval_J(u2, p, td)).epsilon(1e-12));

    SparseMatrix k = assemble_weighted_stiffness(*mesh, td.w);
    const LinearConstraint bc = LinearConstraint::dirichlet(mesh->boundary_node_indices());
    bc.apply_matrix(k);
    const FeFunction d1 = grad_J(u, p, td, bc, k);
    const FeFunction d2 = grad_J(u2, p, td, bc, k);
    for (int i = 0; i < d1.size(); ++i)
        CHECK(d2.values[i] == doctest::Approx(0.5 * d1.values[i]).epsilon(1e-7));
}

TEST_CASE("descent validity: the W-form value dominates half the H1 seminorm") {
    auto mesh = torus_mesh(12);
    const TransportData td = precompute_transport(FlowMap::standard_map(), *mesh);
    const PSetting p(1.5);
    const LinearConstraint zm = LinearConstraint::zero_mean(lumped_mass(*mesh));
    FeFunction u = random_function(mesh, 55, 0.5, 1.5);

    SparseMatrix k = assemble_weighted_stiffness(*mesh, td.w);
    double form = 0.0;
    const FeFunction d = grad_J(u, p, td, zm, k, &form);
    CHECK(form > 0.0);

    std::vector<Mat2> id_weights(mesh->num_triangles(), Mat2::identity());
    const SparseMatrix k_id = assemble_weighted_stiffness(*mesh, id_weights);
    const double h1 = k_id.quadratic_form(d.values);
    CHECK(form >= 0.5 * h1 - 1e-12);

    // the solve respects the zero-mean constraint
    const auto& w = zm.weights();
    double mean = 0.0, wsum = 0.0;
    for (int i = 0; i < d.size(); ++i) {
        mean += w[i] * d.values[i];
        wsum += w[i];
    }
    CHECK(std::abs(mean / wsum) < 1e-12);
}

TEST_CASE("normalization fixes the quadrature p-norm") {
    auto mesh = square_mesh(13);
    for (double pv : {1.3, 2.0}) {
        const PSetting p(pv);
        FeFunction u = random_function(mesh, 77, -1.0, 2.0);
        normalize_p(u, p);
        CHECK(norm_p(u, p) == doctest::Approx(1.0).epsilon(1e-12));
    }
}
