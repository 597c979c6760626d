#pragma once

#include <memory>
#include <span>
#include <vector>

namespace dynlap {

/// Compressed-sparse-row symmetric matrix.
class SparseMatrix {
public:
    SparseMatrix() = default;
    SparseMatrix(int dim, std::vector<int> row_ptr, std::vector<int> cols, std::vector<double> vals)
        : dim_(dim), row_ptr_(std::move(row_ptr)), cols_(std::move(cols)), vals_(std::move(vals)) {}

    int dim() const { return dim_; }
    int nnz() const { return static_cast<int>(vals_.size()); }

    void multiply(std::span<const double> x, std::span<double> y) const;
    std::vector<double> multiply(std::span<const double> x) const;
    std::vector<double> diagonal() const;
    double quadratic_form(std::span<const double> x) const;

    /// Symmetric elimination of the given rows/columns to identity rows.
    /// Keeps the matrix SPD on the complementary block.
    void eliminate_to_identity(std::span<const int> indices);

    /// Max |a_ij - a_ji| over stored entries, for debug symmetry checks.
    double symmetry_defect() const;

    const std::vector<int>& row_ptr() const { return row_ptr_; }
    const std::vector<int>& cols() const { return cols_; }
    const std::vector<double>& vals() const { return vals_; }

private:
    int dim_ = 0;
    std::vector<int> row_ptr_;
    std::vector<int> cols_;
    std::vector<double> vals_;
};

/// Accumulates (i, j, value) triplets and compresses to CSR.
class SparseBuilder {
public:
    explicit SparseBuilder(int dim) : dim_(dim) {}
    void add(int i, int j, double v) { entries_.push_back({i, j, v}); }
    SparseMatrix compress() const;

private:
    struct Entry {
        int i, j;
        double v;
    };
    int dim_;
    std::vector<Entry> entries_;
};

/// Subspace constraint for the solves: either fixed (Dirichlet) indices or a
/// weighted zero-mean condition on boundaryless domains.
class LinearConstraint {
public:
    enum class Kind { none, dirichlet, zero_mean };

    static LinearConstraint none() { return LinearConstraint(); }
    static LinearConstraint dirichlet(std::vector<int> fixed);
    /// weights must be the lumped-mass vector (all entries positive);
    /// the constraint is sum_i w_i x_i = 0, i.e. the integral of x vanishes.
    static LinearConstraint zero_mean(std::vector<double> weights);

    Kind kind() const { return kind_; }
    const std::vector<int>& fixed() const { return fixed_; }
    const std::vector<double>& weights() const { return weights_; }

    /// Enforce the constraint on a candidate solution: zero the fixed
    /// entries, or shift by a constant so the weighted mean vanishes.
    void project_solution(std::span<double> x) const;

    /// Make a right-hand side compatible: zero the fixed entries, or remove
    /// the component pairing with constants (<b, 1> = 0 afterwards).
    void project_rhs(std::span<double> b) const;

    /// Prepare an assembled matrix for constrained solves (Dirichlet rows
    /// eliminated to identity; no-op for the other kinds).
    void apply_matrix(SparseMatrix& a) const;

private:
    Kind kind_ = Kind::none;
    std::vector<int> fixed_;
    std::vector<double> weights_;
    double weight_sum_ = 0.0;
};

enum class Preconditioner {
    none,
    jacobi,               // diagonal scaling
    incomplete_cholesky,  // zero-fill IC with diagonal-shift retry on breakdown
    automatic             // banded Cholesky when the profile is narrow, else IC
};

struct CgOptions {
    double rel_tol = 1e-10;
    int max_iter = 0;  // 0: defaults to 10 * dimension
    Preconditioner precond = Preconditioner::automatic;
};

class BandCholesky;
class IncompleteCholesky;

/// Reusable preconditioner state; build it once per matrix when many solves
/// share the same operator (one factorization, many applications).
class CgPreconditioner {
public:
    CgPreconditioner() = default;
    static CgPreconditioner build(const SparseMatrix& a, const LinearConstraint& constraint,
                                  Preconditioner mode);
    void apply(std::span<const double> r, std::span<double> z) const;
    bool empty() const { return !band_ && !ic_ && inv_diag_.empty(); }

private:
    std::shared_ptr<const BandCholesky> band_;
    std::shared_ptr<const IncompleteCholesky> ic_;
    std::vector<double> inv_diag_;
};

/// Exact Cholesky factorization within the band profile of an SPD matrix.
/// On the structured meshes used here the stiffness bandwidth is one grid
/// row, so this doubles as a direct solve; usable whenever the memory
/// footprint n*(bw+1) stays reasonable.
class BandCholesky {
public:
    explicit BandCholesky(const SparseMatrix& a);
    void apply(std::span<const double> r, std::span<double> z) const;
    int bandwidth() const { return bw_; }

    /// Estimated factorization cost guard used by the automatic mode.
    static int profile_bandwidth(const SparseMatrix& a);

private:
    int dim_ = 0;
    int bw_ = 0;
    std::vector<double> band_;  // row-major, band_[i*(bw+1)+k] = L(i, i-bw+k)
    mutable std::vector<double> work_;
};

/// Zero-fill incomplete Cholesky factor of an SPD matrix. If the
/// factorization breaks down (weights with strong contrast can defeat the
/// zero-fill pattern), the diagonal is shifted and the factorization is
/// retried; the result is then a preconditioner for the original matrix,
/// not a factorization of it.
class IncompleteCholesky {
public:
    explicit IncompleteCholesky(const SparseMatrix& a);
    /// z = (L L^T)^{-1} r
    void apply(std::span<const double> r, std::span<double> z) const;
    double shift() const { return shift_; }

private:
    int dim_ = 0;
    double shift_ = 0.0;
    // lower factor in CSR and its transpose for the backward sweep
    std::vector<int> l_ptr_, l_cols_;
    std::vector<double> l_vals_;
    std::vector<int> u_ptr_, u_cols_;
    std::vector<double> u_vals_;
    std::vector<double> diag_;
    mutable std::vector<double> work_;

    bool factor(const SparseMatrix& a, double shift);
};

struct CgInfo {
    int iterations = 0;
    double residual = 0.0;  // final |Ax-b| / |b|
};

/// Preconditioned conjugate gradients for SPD systems on the constrained
/// subspace. x0, when given, seeds the iteration (it is projected first);
/// prebuilt, when given, supplies the preconditioner and opts.precond is
/// ignored. Throws on non-convergence, carrying the residual.
std::vector<double> cg_solve(const SparseMatrix& a, std::vector<double> b,
                             const LinearConstraint& constraint, const CgOptions& opts = {},
                             CgInfo* info = nullptr, const std::vector<double>* x0 = nullptr,
                             const CgPreconditioner* prebuilt = nullptr);

// small dense-vector helpers shared by the solver modules
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double norm2(std::span<const double> a);

}  // namespace dynlap
