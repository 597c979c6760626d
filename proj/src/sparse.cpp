#include "dynlap/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace dynlap {

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
    for (int i = 0; i < dim_; ++i) {
        double s = 0.0;
        for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += vals_[k] * x[cols_[k]];
        y[i] = s;
    }
}

std::vector<double> SparseMatrix::multiply(std::span<const double> x) const {
    std::vector<double> y(dim_);
    multiply(x, y);
    return y;
}

std::vector<double> SparseMatrix::diagonal() const {
    std::vector<double> d(dim_, 0.0);
    for (int i = 0; i < dim_; ++i)
        for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
            if (cols_[k] == i) d[i] = vals_[k];
    return d;
}

double SparseMatrix::quadratic_form(std::span<const double> x) const {
    double q = 0.0;
    for (int i = 0; i < dim_; ++i) {
        double s = 0.0;
        for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += vals_[k] * x[cols_[k]];
        q += x[i] * s;
    }
    return q;
}

void SparseMatrix::eliminate_to_identity(std::span<const int> indices) {
    std::vector<char> fixed(dim_, 0);
    for (int i : indices) fixed[i] = 1;
    for (int i = 0; i < dim_; ++i) {
        for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
            const int j = cols_[k];
            if (fixed[i] || fixed[j]) vals_[k] = (i == j) ? 1.0 : 0.0;
        }
    }
}

double SparseMatrix::symmetry_defect() const {
    double worst = 0.0;
    for (int i = 0; i < dim_; ++i) {
        for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
            const int j = cols_[k];
            if (j < i) continue;
            double aji = 0.0;
            for (int m = row_ptr_[j]; m < row_ptr_[j + 1]; ++m)
                if (cols_[m] == i) { aji = vals_[m]; break; }
            worst = std::max(worst, std::abs(vals_[k] - aji));
        }
    }
    return worst;
}

SparseMatrix SparseBuilder::compress() const {
    std::vector<int> count(dim_ + 1, 0);
    for (const auto& e : entries_) ++count[e.i + 1];
    for (int i = 0; i < dim_; ++i) count[i + 1] += count[i];

    std::vector<int> cols(entries_.size());
    std::vector<double> vals(entries_.size());
    std::vector<int> fill = count;
    for (const auto& e : entries_) {
        const int k = fill[e.i]++;
        cols[k] = e.j;
        vals[k] = e.v;
    }
    // sort each row by column and merge duplicates
    std::vector<int> row_ptr(dim_ + 1, 0);
    std::vector<int> out_cols;
    std::vector<double> out_vals;
    out_cols.reserve(entries_.size());
    out_vals.reserve(entries_.size());
    std::vector<std::pair<int, double>> row;
    for (int i = 0; i < dim_; ++i) {
        row.clear();
        for (int k = count[i]; k < count[i + 1]; ++k) row.emplace_back(cols[k], vals[k]);
        std::sort(row.begin(), row.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (size_t k = 0; k < row.size(); ++k) {
            if (!out_cols.empty() && static_cast<int>(out_cols.size()) > row_ptr[i] &&
                out_cols.back() == row[k].first) {
                out_vals.back() += row[k].second;
            } else {
                out_cols.push_back(row[k].first);
                out_vals.push_back(row[k].second);
            }
        }
        row_ptr[i + 1] = static_cast<int>(out_cols.size());
    }
    return SparseMatrix(dim_, std::move(row_ptr), std::move(out_cols), std::move(out_vals));
}

LinearConstraint LinearConstraint::dirichlet(std::vector<int> fixed) {
    LinearConstraint c;
    c.kind_ = Kind::dirichlet;
    c.fixed_ = std::move(fixed);
    return c;
}

LinearConstraint LinearConstraint::zero_mean(std::vector<double> weights) {
    LinearConstraint c;
    c.kind_ = Kind::zero_mean;
    c.weights_ = std::move(weights);
    for (double w : c.weights_) {
        if (w <= 0.0) throw std::invalid_argument("zero_mean weights must be positive");
        c.weight_sum_ += w;
    }
    return c;
}

void LinearConstraint::project_solution(std::span<double> x) const {
    switch (kind_) {
        case Kind::none:
            return;
        case Kind::dirichlet:
            for (int i : fixed_) x[i] = 0.0;
            return;
        case Kind::zero_mean: {
            double m = 0.0;
            for (size_t i = 0; i < x.size(); ++i) m += weights_[i] * x[i];
            m /= weight_sum_;
            for (auto& v : x) v -= m;
            return;
        }
    }
}

void LinearConstraint::project_rhs(std::span<double> b) const {
    switch (kind_) {
        case Kind::none:
            return;
        case Kind::dirichlet:
            for (int i : fixed_) b[i] = 0.0;
            return;
        case Kind::zero_mean: {
            // the constant function spans the matrix kernel; remove the
            // incompatible component so <b, 1> = 0 while the action of b on
            // every zero-mean test vector is unchanged
            double s = 0.0;
            for (double v : b) s += v;
            const double c = s / weight_sum_;
            for (size_t i = 0; i < b.size(); ++i) b[i] -= c * weights_[i];
            return;
        }
    }
}

void LinearConstraint::apply_matrix(SparseMatrix& a) const {
    if (kind_ == Kind::dirichlet) a.eliminate_to_identity(fixed_);
}

int BandCholesky::profile_bandwidth(const SparseMatrix& a) {
    int bw = 0;
    for (int i = 0; i < a.dim(); ++i)
        for (int k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k)
            bw = std::max(bw, i - a.cols()[k]);
    return bw;
}

BandCholesky::BandCholesky(const SparseMatrix& a) : dim_(a.dim()), bw_(profile_bandwidth(a)) {
    const int w = bw_ + 1;
    band_.assign(static_cast<size_t>(dim_) * w, 0.0);
    auto at = [&](int i, int j) -> double& { return band_[static_cast<size_t>(i) * w + (j - i + bw_)]; };
    for (int i = 0; i < dim_; ++i)
        for (int k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k)
            if (a.cols()[k] <= i) at(i, a.cols()[k]) = a.vals()[k];

    for (int i = 0; i < dim_; ++i) {
        const int j0 = std::max(0, i - bw_);
        for (int j = j0; j < i; ++j) {
            double s = at(i, j);
            const int m0 = std::max(j0, j - bw_);
            for (int m = m0; m < j; ++m) s -= at(i, m) * at(j, m);
            at(i, j) = s / at(j, j);
        }
        double d = at(i, i);
        for (int m = j0; m < i; ++m) d -= at(i, m) * at(i, m);
        if (!(d > 0.0))
            throw std::runtime_error("BandCholesky: matrix not positive definite within the band");
        at(i, i) = std::sqrt(d);
    }
    work_.resize(dim_);
}

void BandCholesky::apply(std::span<const double> r, std::span<double> z) const {
    const int w = bw_ + 1;
    std::vector<double>& y = work_;
    for (int i = 0; i < dim_; ++i) {
        double s = r[i];
        const int j0 = std::max(0, i - bw_);
        const double* row = &band_[static_cast<size_t>(i) * w];
        for (int j = j0; j < i; ++j) s -= row[j - i + bw_] * y[j];
        y[i] = s / row[bw_];
    }
    for (int i = dim_ - 1; i >= 0; --i) {
        double s = y[i];
        const int j1 = std::min(dim_ - 1, i + bw_);
        for (int j = i + 1; j <= j1; ++j)
            s -= band_[static_cast<size_t>(j) * w + (i - j + bw_)] * z[j];
        z[i] = s / band_[static_cast<size_t>(i) * w + bw_];
    }
}

IncompleteCholesky::IncompleteCholesky(const SparseMatrix& a) : dim_(a.dim()) {
    double shift = 0.0;
    for (int attempt = 0; attempt < 12; ++attempt) {
        if (factor(a, shift)) {
            shift_ = shift;
            work_.resize(dim_);
            return;
        }
        shift = (shift == 0.0) ? 1e-8 : shift * 10.0;
    }
    throw std::runtime_error("IncompleteCholesky: breakdown persists under diagonal shifts");
}

bool IncompleteCholesky::factor(const SparseMatrix& a, double shift) {
    const auto& row_ptr = a.row_ptr();
    const auto& cols = a.cols();
    const auto& vals = a.vals();

    // lower-triangular pattern of A, diagonal last in each row
    l_ptr_.assign(dim_ + 1, 0);
    l_cols_.clear();
    l_vals_.clear();
    diag_.assign(dim_, 0.0);
    std::vector<double> diag_of_a(dim_, 0.0);
    for (int i = 0; i < dim_; ++i) {
        for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
            if (cols[k] < i) {
                l_cols_.push_back(cols[k]);
                l_vals_.push_back(vals[k]);
            } else if (cols[k] == i) {
                diag_of_a[i] = vals[k];
            }
        }
        l_ptr_[i + 1] = static_cast<int>(l_cols_.size());
    }

    for (int i = 0; i < dim_; ++i) {
        // strictly-lower entries of row i
        for (int k = l_ptr_[i]; k < l_ptr_[i + 1]; ++k) {
            const int j = l_cols_[k];
            // pattern-restricted dot of rows i and j (both sorted)
            double s = l_vals_[k];
            int pi = l_ptr_[i], pj = l_ptr_[j];
            while (pi < k && pj < l_ptr_[j + 1]) {
                if (l_cols_[pi] == l_cols_[pj]) {
                    s -= l_vals_[pi] * l_vals_[pj];
                    ++pi;
                    ++pj;
                } else if (l_cols_[pi] < l_cols_[pj]) {
                    ++pi;
                } else {
                    ++pj;
                }
            }
            l_vals_[k] = s / diag_[j];
        }
        double d = diag_of_a[i] * (1.0 + shift);
        for (int k = l_ptr_[i]; k < l_ptr_[i + 1]; ++k) d -= l_vals_[k] * l_vals_[k];
        if (!(d > 0.0)) return false;
        diag_[i] = std::sqrt(d);
    }

    // transpose for the backward substitution
    u_ptr_.assign(dim_ + 1, 0);
    for (int k = 0; k < static_cast<int>(l_cols_.size()); ++k) ++u_ptr_[l_cols_[k] + 1];
    for (int i = 0; i < dim_; ++i) u_ptr_[i + 1] += u_ptr_[i];
    u_cols_.resize(l_cols_.size());
    u_vals_.resize(l_vals_.size());
    std::vector<int> fill = u_ptr_;
    for (int i = 0; i < dim_; ++i) {
        for (int k = l_ptr_[i]; k < l_ptr_[i + 1]; ++k) {
            const int pos = fill[l_cols_[k]]++;
            u_cols_[pos] = i;
            u_vals_[pos] = l_vals_[k];
        }
    }
    return true;
}

void IncompleteCholesky::apply(std::span<const double> r, std::span<double> z) const {
    // forward: L y = r  (unit off-diagonal structure scaled by diag_)
    std::vector<double>& y = work_;
    for (int i = 0; i < dim_; ++i) {
        double s = r[i];
        for (int k = l_ptr_[i]; k < l_ptr_[i + 1]; ++k) s -= l_vals_[k] * y[l_cols_[k]];
        y[i] = s / diag_[i];
    }
    // backward: L^T z = y
    for (int i = dim_ - 1; i >= 0; --i) {
        double s = y[i];
        for (int k = u_ptr_[i]; k < u_ptr_[i + 1]; ++k) s -= u_vals_[k] * z[u_cols_[k]];
        z[i] = s / diag_[i];
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

CgPreconditioner CgPreconditioner::build(const SparseMatrix& a, const LinearConstraint& constraint,
                                         Preconditioner mode) {
    CgPreconditioner pre;
    const int n = a.dim();
    if (mode == Preconditioner::automatic) {
        // exact band factor when it is affordable (n bw^2 flops, n bw memory);
        // the singular zero-mean systems stay on the IC path
        const int bw = BandCholesky::profile_bandwidth(a);
        const double cost = static_cast<double>(n) * bw * bw;
        const double mem = static_cast<double>(n) * (bw + 1) * 8.0;
        const bool singular = (constraint.kind() == LinearConstraint::Kind::zero_mean);
        mode = (!singular && cost <= 4e9 && mem <= 512e6) ? Preconditioner::none
                                                          : Preconditioner::incomplete_cholesky;
        if (mode == Preconditioner::none) {
            pre.band_ = std::make_shared<BandCholesky>(a);
            return pre;
        }
    }
    switch (mode) {
        case Preconditioner::incomplete_cholesky:
            pre.ic_ = std::make_shared<IncompleteCholesky>(a);
            break;
        case Preconditioner::jacobi:
            pre.inv_diag_ = a.diagonal();
            for (auto& d : pre.inv_diag_) d = (d != 0.0) ? 1.0 / d : 1.0;
            break;
        case Preconditioner::none:
        case Preconditioner::automatic:
            pre.inv_diag_.assign(n, 1.0);
            break;
    }
    return pre;
}

void CgPreconditioner::apply(std::span<const double> r, std::span<double> z) const {
    if (band_) {
        band_->apply(r, z);
    } else if (ic_) {
        ic_->apply(r, z);
    } else {
        for (size_t i = 0; i < r.size(); ++i) z[i] = inv_diag_[i] * r[i];
    }
}

std::vector<double> cg_solve(const SparseMatrix& a, std::vector<double> b,
                             const LinearConstraint& constraint, const CgOptions& opts,
                             CgInfo* info, const std::vector<double>* x0,
                             const CgPreconditioner* prebuilt) {
    const int n = a.dim();
    const int max_iter = opts.max_iter > 0 ? opts.max_iter : 10 * n;

    const double bnorm_raw = norm2(b);
    constraint.project_rhs(b);
    const double bnorm = norm2(b);
    // a right-hand side whose projection is pure roundoff solves to zero
    if (bnorm <= 1e-14 * bnorm_raw || bnorm == 0.0) {
        if (info) *info = {0, 0.0};
        return std::vector<double>(n, 0.0);
    }

    std::vector<double> x(n, 0.0);
    if (x0 && static_cast<int>(x0->size()) == n) {
        x = *x0;
        constraint.project_solution(x);
        if (constraint.kind() == LinearConstraint::Kind::dirichlet)
            for (int i : constraint.fixed()) x[i] = 0.0;
    }

    CgPreconditioner local;
    const CgPreconditioner* pre = prebuilt;
    if (!pre) {
        local = CgPreconditioner::build(a, constraint, opts.precond);
        pre = &local;
    }
    auto precondition = [&](const std::vector<double>& res, std::vector<double>& out) {
        pre->apply(res, out);
    };

    std::vector<double> r = a.multiply(x);
    for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
    std::vector<double> z(n), p(n), ap(n);
    precondition(r, z);
    p = z;
    double rz = dot(r, z);

    int it = 0;
    double rel = norm2(r) / bnorm;
    for (; it < max_iter && rel > opts.rel_tol; ++it) {
        a.multiply(p, ap);
        const double pap = dot(p, ap);
        if (pap <= 0.0) {
            std::ostringstream os;
            os << "cg_solve: matrix not positive definite on constrained subspace (p^T A p = "
               << pap << ")";
            throw std::runtime_error(os.str());
        }
        const double alpha = rz / pap;
        axpy(alpha, p, x);
        axpy(-alpha, ap, r);
        constraint.project_solution(x);
        precondition(r, z);
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
        rel = norm2(r) / bnorm;
    }
    if (rel > opts.rel_tol) {
        std::ostringstream os;
        os << "cg_solve: no convergence in " << max_iter << " iterations, relative residual "
           << rel;
        throw std::runtime_error(os.str());
    }
    constraint.project_solution(x);
    if (info) *info = {it, rel};
    return x;
}

}  // namespace dynlap
