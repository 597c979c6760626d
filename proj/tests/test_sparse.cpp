#include "doctest.h"

#include <cmath>
#include <random>

#include "dynlap/sparse.hpp"
#include "oracles.hpp"

using namespace dynlap;

namespace {

SparseMatrix dense_to_sparse(const std::vector<double>& a, int n) {
    SparseBuilder b(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (a[i * n + j] != 0.0) b.add(i, j, a[i * n + j]);
    return b.compress();
}

}  // namespace

TEST_CASE("identity system returns the right-hand side") {
    SparseBuilder b(5);
    for (int i = 0; i < 5; ++i) b.add(i, i, 1.0);
    const SparseMatrix a = b.compress();
    const std::vector<double> rhs = {1, 2, 3, 4, 5};
    const auto x = cg_solve(a, rhs, LinearConstraint::none());
    for (int i = 0; i < 5; ++i) CHECK(x[i] == doctest::Approx(rhs[i]).epsilon(1e-12));
}

TEST_CASE("1D Dirichlet stencil matches the dense solve") {
    // three interior nodes of [0,1] at h = 1/4: K = (1/h) tridiag(-1, 2, -1),
    // b the lumped mass of the constant one
    const double h = 0.25;
    std::vector<double> dense = {2 / h, -1 / h, 0, -1 / h, 2 / h, -1 / h, 0, -1 / h, 2 / h};
    const std::vector<double> b = {h, h, h};
    const SparseMatrix a = dense_to_sparse(dense, 3);

    const auto x = cg_solve(a, b, LinearConstraint::none());
    const auto ref = oracles::lu_solve(dense, b);
    for (int i = 0; i < 3; ++i) CHECK(x[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    // frozen values: the discrete solve reproduces u(x) = x(1-x)/2 exactly
    CHECK(x[0] == doctest::Approx(0.09375).epsilon(1e-10));
    CHECK(x[1] == doctest::Approx(0.125).epsilon(1e-10));
    CHECK(x[2] == doctest::Approx(0.09375).epsilon(1e-10));
}

TEST_CASE("zero-mean constraint: constant right-hand side solves to zero") {
    const int n = 12;
    SparseBuilder b(n);
    // 1D periodic Laplacian: constants in the kernel
    for (int i = 0; i < n; ++i) {
        b.add(i, i, 2.0);
        b.add(i, (i + 1) % n, -1.0);
        b.add(i, (i + n - 1) % n, -1.0);
    }
    const SparseMatrix a = b.compress();
    const LinearConstraint c = LinearConstraint::zero_mean(std::vector<double>(n, 1.0));
    const auto x = cg_solve(a, std::vector<double>(n, 3.7), c);
    for (double v : x) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("zero-mean solves satisfy the constraint and the equation") {
    const int n = 16;
    SparseBuilder builder(n);
    for (int i = 0; i < n; ++i) {
        builder.add(i, i, 2.0);
        builder.add(i, (i + 1) % n, -1.0);
        builder.add(i, (i + n - 1) % n, -1.0);
    }
    const SparseMatrix a = builder.compress();
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = 1.0 + 0.5 * std::sin(0.3 * i) * std::sin(0.3 * i);
    const LinearConstraint c = LinearConstraint::zero_mean(w);

    std::mt19937 rng(11);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> rhs(n);
    for (auto& v : rhs) v = dist(rng);
    // make the right-hand side compatible so nothing is projected away
    double s = 0.0;
    for (double v : rhs) s += v;
    for (auto& v : rhs) v -= s / n;

    const auto x = cg_solve(a, rhs, c);
    double wx = 0.0, wsum = 0.0;
    for (int i = 0; i < n; ++i) {
        wx += w[i] * x[i];
        wsum += w[i];
    }
    CHECK(std::abs(wx / wsum) < 1e-12);  // weighted mean of the solution
    const auto ax = a.multiply(x);
    for (int i = 0; i < n; ++i) CHECK(ax[i] == doctest::Approx(rhs[i]).epsilon(1e-8));
}

TEST_CASE("random SPD systems agree with the dense LU oracle") {
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 10 + 4 * trial;
        std::vector<double> m(n * n);
        for (auto& v : m) v = dist(rng);
        // B^T B + I is SPD
        std::vector<double> spd(n * n, 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double s = (i == j) ? 1.0 : 0.0;
                for (int k = 0; k < n; ++k) s += m[k * n + i] * m[k * n + j];
                spd[i * n + j] = s;
            }
        std::vector<double> b(n);
        for (auto& v : b) v = dist(rng);

        const SparseMatrix a = dense_to_sparse(spd, n);
        const auto x = cg_solve(a, b, LinearConstraint::none(), {1e-12, 0});
        const auto ref = oracles::lu_solve(spd, b);
        double err = 0.0, scale = 0.0;
        for (int i = 0; i < n; ++i) {
            err += (x[i] - ref[i]) * (x[i] - ref[i]);
            scale += ref[i] * ref[i];
        }
        CHECK(std::sqrt(err / scale) < 1e-8);
    }
}

TEST_CASE("Jacobi preconditioning changes iterations, not the solution") {
    const int n = 40;
    SparseBuilder builder(n);
    for (int i = 0; i < n; ++i) {
        builder.add(i, i, 2.0 * (1.0 + 50.0 * i));  // badly scaled diagonal
        if (i + 1 < n) {
            builder.add(i, i + 1, -1.0);
            builder.add(i + 1, i, -1.0);
        }
    }
    const SparseMatrix a = builder.compress();
    std::vector<double> b(n, 1.0);

    CgInfo with_jacobi, without, with_ic;
    CgOptions opt_j{1e-12, 0, Preconditioner::jacobi};
    CgOptions opt_n{1e-12, 0, Preconditioner::none};
    CgOptions opt_ic{1e-12, 0, Preconditioner::incomplete_cholesky};
    const auto xj = cg_solve(a, b, LinearConstraint::none(), opt_j, &with_jacobi);
    const auto xn = cg_solve(a, b, LinearConstraint::none(), opt_n, &without);
    const auto xic = cg_solve(a, b, LinearConstraint::none(), opt_ic, &with_ic);
    CHECK(with_jacobi.iterations != without.iterations);
    CHECK(with_ic.iterations <= with_jacobi.iterations);
    for (int i = 0; i < n; ++i) {
        CHECK(xj[i] == doctest::Approx(xn[i]).epsilon(1e-7));
        CHECK(xic[i] == doctest::Approx(xn[i]).epsilon(1e-7));
    }
}

TEST_CASE("Dirichlet elimination keeps symmetry and pins the fixed entries") {
    const int n = 9;
    SparseBuilder builder(n);
    for (int i = 0; i < n; ++i) {
        builder.add(i, i, 4.0);
        if (i + 1 < n) {
            builder.add(i, i + 1, -1.0);
            builder.add(i + 1, i, -1.0);
        }
        if (i + 3 < n) {
            builder.add(i, i + 3, -1.0);
            builder.add(i + 3, i, -1.0);
        }
    }
    SparseMatrix a = builder.compress();
    const LinearConstraint c = LinearConstraint::dirichlet({0, 2, 8});
    c.apply_matrix(a);
    CHECK(a.symmetry_defect() == 0.0);

    std::vector<double> b(n, 1.0);
    const auto x = cg_solve(a, b, c);
    CHECK(x[0] == 0.0);
    CHECK(x[2] == 0.0);
    CHECK(x[8] == 0.0);
    CHECK(x[4] != 0.0);
}

TEST_CASE("non-convergence carries the residual in the error") {
    const int n = 50;
    SparseBuilder builder(n);
    for (int i = 0; i < n; ++i) {
        builder.add(i, i, 2.0001);
        if (i + 1 < n) {
            builder.add(i, i + 1, -1.0);
            builder.add(i + 1, i, -1.0);
        }
    }
    const SparseMatrix a = builder.compress();
    CgOptions opts;
    opts.rel_tol = 1e-14;
    opts.max_iter = 2;
    opts.precond = Preconditioner::jacobi;  // IC(0) factors tridiagonals exactly
    CHECK_THROWS_WITH_AS(cg_solve(a, std::vector<double>(n, 1.0), LinearConstraint::none(), opts),
                         doctest::Contains("relative residual"), std::runtime_error);
}
