#include "doctest.h"

#include <cmath>
#include <memory>
#include <random>

#include "dynlap/dense_sym.hpp"
#include "dynlap/eigensolver.hpp"

using namespace dynlap;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::shared_ptr<const Mesh> square_mesh(int n) {
    return std::make_shared<Mesh>(Domain{0, 1, 0, 1}, n, n);
}

std::shared_ptr<const Mesh> torus_mesh(int n) {
    return std::make_shared<Mesh>(Domain{0, 2 * kPi, 0, 2 * kPi, true, true}, n, n);
}

double l2_distance_up_to_sign(const FeFunction& a, const FeFunction& b) {
    double dp = 0.0, dm = 0.0;
    for (int i = 0; i < a.size(); ++i) {
        dp += (a.values[i] - b.values[i]) * (a.values[i] - b.values[i]);
        dm += (a.values[i] + b.values[i]) * (a.values[i] + b.values[i]);
    }
    return std::sqrt(std::min(dp, dm) / a.size());
}

}  // namespace

TEST_CASE("dense symmetric eigensolver sanity") {
    SUBCASE("diagonal") {
        const SymEigen e = sym_eigen({3, 0, 0, 0, 1, 0, 0, 0, 2}, 3);
        CHECK(e.values[0] == doctest::Approx(1.0));
        CHECK(e.values[1] == doctest::Approx(2.0));
        CHECK(e.values[2] == doctest::Approx(3.0));
    }
    SUBCASE("2x2 analytic") {
        const SymEigen e = sym_eigen({2, 1, 1, 2}, 2);
        CHECK(e.values[0] == doctest::Approx(1.0));
        CHECK(e.values[1] == doctest::Approx(3.0));
    }
    SUBCASE("residual and orthogonality on random matrices") {
        std::mt19937 rng(3);
        std::normal_distribution<double> gauss;
        const int n = 6;
        std::vector<double> a(n * n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j) a[i * n + j] = a[j * n + i] = gauss(rng);
        const SymEigen e = sym_eigen(a, n);
        for (int k = 0; k < n; ++k) {
            double res = 0.0;
            for (int i = 0; i < n; ++i) {
                double av = 0.0;
                for (int j = 0; j < n; ++j) av += a[i * n + j] * e.vectors[k * n + j];
                res += (av - e.values[k] * e.vectors[k * n + i]) *
                       (av - e.values[k] * e.vectors[k * n + i]);
            }
            CHECK(std::sqrt(res) < 1e-10);
        }
    }
}

TEST_CASE("linear initialization on the Dirichlet square") {
    auto mesh = square_mesh(40);
    const TransportData td = identity_transport(*mesh);
    const LinearConstraint bc = LinearConstraint::dirichlet(mesh->boundary_node_indices());
    const EigenPair pair = init_p2(mesh, td, WhichPair::first, bc);

    // analytic continuum eigenvalue 2 pi^2, discretization error O(h^2)
    CHECK(pair.lambda == doctest::Approx(2 * kPi * kPi).epsilon(5e-3));
    CHECK(pair.lambda > 0.0);
    CHECK(norm_p(pair.u, PSetting(2.0)) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(pair.u.integral() > 0.0);  // sign convention
    for (int i : mesh->boundary_node_indices()) CHECK(pair.u.values[i] == 0.0);
}

TEST_CASE("linear initialization matches a dense generalized eigensolve on 10x10") {
    auto mesh = square_mesh(10);
    const TransportData td = identity_transport(*mesh);
    const LinearConstraint bc = LinearConstraint::dirichlet(mesh->boundary_node_indices());
    const EigenPair pair = init_p2(mesh, td, WhichPair::first, bc);

    // dense route: restrict K and M to interior nodes, fold M in through its
    // inverse square root, then diagonalize
    const SparseMatrix k_full = assemble_weighted_stiffness(*mesh, td.w);
    const SparseMatrix m_full = assemble_mass(*mesh);
    std::vector<int> interior;
    for (int i = 0; i < mesh->num_nodes(); ++i)
        if (!mesh->is_boundary_node(i)) interior.push_back(i);
    const int n = static_cast<int>(interior.size());
    std::vector<int> where(mesh->num_nodes(), -1);
    for (int i = 0; i < n; ++i) where[interior[i]] = i;

    auto restrict_dense = [&](const SparseMatrix& s) {
        std::vector<double> d(n * n, 0.0);
        for (int i = 0; i < mesh->num_nodes(); ++i) {
            if (where[i] < 0) continue;
            for (int c = s.row_ptr()[i]; c < s.row_ptr()[i + 1]; ++c) {
                const int j = s.cols()[c];
                if (where[j] >= 0) d[where[i] * n + where[j]] = s.vals()[c];
            }
        }
        return d;
    };
    const std::vector<double> kd = restrict_dense(k_full);
    const std::vector<double> md = restrict_dense(m_full);

    // M^{-1/2} from the eigendecomposition of M, then S = M^{-1/2} K M^{-1/2}
    const SymEigen me = sym_eigen(md, n);
    std::vector<double> m_isqrt(n * n, 0.0);
    for (int k2 = 0; k2 < n; ++k2) {
        const double s = 1.0 / std::sqrt(me.values[k2]);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                m_isqrt[i * n + j] += s * me.vectors[k2 * n + i] * me.vectors[k2 * n + j];
    }
    auto matmul = [n](const std::vector<double>& a, const std::vector<double>& b) {
        std::vector<double> c(n * n, 0.0);
        for (int i = 0; i < n; ++i)
            for (int k2 = 0; k2 < n; ++k2) {
                const double aik = a[i * n + k2];
                for (int j = 0; j < n; ++j) c[i * n + j] += aik * b[k2 * n + j];
            }
        return c;
    };
    const std::vector<double> s_mat = matmul(matmul(m_isqrt, kd), m_isqrt);
    const SymEigen se = sym_eigen(s_mat, n);
    CHECK(pair.lambda == doctest::Approx(se.values[0]).epsilon(1e-8));
}

TEST_CASE("linear initialization on the torus finds the first nonzero mode") {
    auto mesh = torus_mesh(40);
    const TransportData td = identity_transport(*mesh);
    const LinearConstraint zm = LinearConstraint::zero_mean(lumped_mass(*mesh));
    const EigenPair pair = init_p2(mesh, td, WhichPair::second, zm);

    // flat torus of period 2 pi: the smallest nonzero eigenvalue is 1
    CHECK(pair.lambda == doctest::Approx(1.0).epsilon(0.01));
    const auto& w = zm.weights();
    double mean = 0.0, wsum = 0.0;
    for (int i = 0; i < pair.u.size(); ++i) {
        mean += w[i] * pair.u.values[i];
        wsum += w[i];
    }
    CHECK(std::abs(mean / wsum) < 1e-9);
}

TEST_CASE("descent at p = 2 reproduces the linear eigenpair") {
    auto mesh = square_mesh(40);
    const TransportData td = identity_transport(*mesh);
    const LinearConstraint bc = LinearConstraint::dirichlet(mesh->boundary_node_indices());
    const EigenPair lin = init_p2(mesh, td, WhichPair::first, bc);

    SolverParams params;
    const EigenPair pair = solve_first(PSetting(2.0), mesh, td, params, lin.u, bc);
    CHECK(pair.converged());
    CHECK(pair.lambda == doctest::Approx(2 * kPi * kPi).epsilon(5e-3));
    CHECK(l2_distance_up_to_sign(pair.u, lin.u) < 1e-3);
}

TEST_CASE("descent ladder on the square: trends and bounds") {
    auto mesh = square_mesh(32);
    const TransportData td = identity_transport(*mesh);
    const LinearConstraint bc = LinearConstraint::dirichlet(mesh->boundary_node_indices());

    SolverParams params;
    const auto ladder =
        p_ladder({2.0, 1.6, 1.3}, mesh, td, params, WhichPair::first, bc, false);
    REQUIRE(ladder.size() == 3);
    for (const auto& pair : ladder) {
        CHECK(pair.converged());
        // Cheeger-type lower bound with h = 3.7724 on the unit square
        CHECK(pair.lambda >= std::pow(3.7724 / pair.p, pair.p));
        // histories never increase
        for (size_t k = 1; k < pair.history.size(); ++k)
            CHECK(pair.history[k].j <= pair.history[k - 1].j + 1e-14);
    }
    CHECK(ladder[2].lambda < ladder[1].lambda);
    CHECK(ladder[1].lambda < ladder[0].lambda);
}

TEST_CASE("warm start agrees with cold start") {
    auto mesh = square_mesh(24);
    const TransportData td = identity_transport(*mesh);
    const LinearConstraint bc = LinearConstraint::dirichlet(mesh->boundary_node_indices());
    SolverParams params;
    const auto cold = p_ladder({2.0, 1.6}, mesh, td, params, WhichPair::first, bc, false);
    const auto warm = p_ladder({2.0, 1.6}, mesh, td, params, WhichPair::first, bc, true);
    CHECK(warm[1].init_mode == "warm");
    CHECK(cold[1].init_mode == "p2");
    CHECK(warm[1].lambda == doctest::Approx(cold[1].lambda).epsilon(1e-3));
}

TEST_CASE("second eigenpair on the identity torus") {
    auto mesh = torus_mesh(32);
    const TransportData td = identity_transport(*mesh);
    const LinearConstraint zm = LinearConstraint::zero_mean(lumped_mass(*mesh));
    const EigenPair lin = init_p2(mesh, td, WhichPair::second, zm);

    SolverParams params;
    FeFunction v0 = lin.u;
    const EigenPair pair = solve_second(PSetting(2.0), mesh, td, params, v0, zm);
    CHECK(pair.converged());
    CHECK(pair.lambda == doctest::Approx(lin.lambda).epsilon(0.01));
}

TEST_CASE("peak selection rejects a direction parallel to the constants") {
    auto mesh = torus_mesh(12);
    const TransportData td = identity_transport(*mesh);
    const LinearConstraint zm = LinearConstraint::zero_mean(lumped_mass(*mesh));
    SolverParams params;
    const FeFunction constant(mesh, std::vector<double>(mesh->num_nodes(), 1.0));
    CHECK_THROWS_AS(solve_second(PSetting(2.0), mesh, td, params, constant, zm),
                    std::invalid_argument);
}

TEST_CASE("standard map second eigenpair at p = 2: contract checks") {
    const FlowMap f = FlowMap::standard_map();
    auto mesh = std::make_shared<Mesh>(f.natural_domain(), 24, 24);
    const TransportData td = precompute_transport(f, *mesh);
    const LinearConstraint zm = LinearConstraint::zero_mean(lumped_mass(*mesh));
    const EigenPair lin = init_p2(mesh, td, WhichPair::second, zm);

    SolverParams params;
    FeFunction v0 = lin.u;
    const EigenPair pair = solve_second(PSetting(2.0), mesh, td, params, v0, zm);
    CHECK(pair.converged());
    CHECK(pair.lambda == doctest::Approx(lin.lambda).epsilon(0.01));
    for (size_t k = 1; k < pair.history.size(); ++k)
        CHECK(pair.history[k].j <= pair.history[k - 1].j + 1e-14);
    // the y-shift normalization puts the maximum on the midline
    int arg = 0;
    for (int i = 1; i < pair.u.size(); ++i)
        if (pair.u.values[i] > pair.u.values[arg]) arg = i;
    CHECK(mesh->node(arg).y == doctest::Approx(kPi).epsilon(1e-9));
}

TEST_CASE("min-max oracle") {
    SUBCASE("diagonal spectrum") {
        CHECK(minmax_oracle({1, 0, 0, 0, 2, 0, 0, 0, 3}, 3) == doctest::Approx(2.0).epsilon(1e-8));
    }
    SUBCASE("degenerate spectrum") {
        CHECK(minmax_oracle({1, 0, 0, 0, 1, 0, 0, 0, 1}, 3) == doctest::Approx(1.0).epsilon(1e-8));
    }
    SUBCASE("random symmetric 5x5 vs dense diagonalization") {
        std::mt19937 rng(19);
        std::normal_distribution<double> gauss;
        for (int trial = 0; trial < 5; ++trial) {
            const int n = 5;
            std::vector<double> a(n * n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j <= i; ++j) a[i * n + j] = a[j * n + i] = gauss(rng);
            const SymEigen e = sym_eigen(a, n);
            CHECK(minmax_oracle(a, n) == doctest::Approx(e.values[1]).epsilon(1e-6));
        }
    }
}
