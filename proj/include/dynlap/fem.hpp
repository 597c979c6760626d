#pragma once

#include <memory>
#include <span>
#include <vector>

#include "dynlap/flow.hpp"
#include "dynlap/mesh.hpp"
#include "dynlap/sparse.hpp"

namespace dynlap {

/// Exponent p in (1, 2] together with its conjugate q.
struct PSetting {
    double p = 2.0;
    double q = 2.0;

    explicit PSetting(double p_value);
};

/// Nodal P1 finite-element function.
struct FeFunction {
    std::shared_ptr<const Mesh> mesh;
    std::vector<double> values;

    FeFunction() = default;
    FeFunction(std::shared_ptr<const Mesh> m, std::vector<double> v)
        : mesh(std::move(m)), values(std::move(v)) {}
    static FeFunction zeros(std::shared_ptr<const Mesh> m);

    double& operator[](int i) { return values[i]; }
    double operator[](int i) const { return values[i]; }
    int size() const { return static_cast<int>(values.size()); }

    /// Triangle-wise constant gradient.
    Vec2 gradient_on(int tri) const;
    /// Value at a point of a given triangle (barycentric interpolation).
    double value_on(int tri, Vec2 p) const;
    /// Integral over the domain (lumped quadrature, exact for P1).
    double integral() const;
};

/// a = |grad u|_p^p, a_dyn = F_dyn(u), b = |u|_p^p and the Rayleigh-type
/// ratio j = a_dyn / b.
struct FunctionalValue {
    double a = 0.0;
    double a_dyn = 0.0;
    double b = 0.0;
    double j = 0.0;
};

/// F(u) = integral of |grad u|^p (exact for P1).
double eval_F(const FeFunction& u, const PSetting& p);

/// Dynamic energy F_dyn(u) = (F(u) + F(u о T^{-1}))/2, evaluated through the
/// gradient transform: (1/2) sum_T area (|grad u|^p + |A grad u|^p).
double eval_F_dyn(const FeFunction& u, const PSetting& p, const TransportData& transport);

/// G(u) = integral of |u|^p by the 3-point edge-midpoint rule
/// (exact for quadratics).
double eval_G(const FeFunction& u, const PSetting& p);

/// Quadrature-consistent p-norm |u|_p = G(u)^{1/p}.
double norm_p(const FeFunction& u, const PSetting& p);
/// Scale u so that |u|_p = 1.
void normalize_p(FeFunction& u, const PSetting& p);

double eval_J(const FeFunction& u, const PSetting& p, const TransportData& transport);
FunctionalValue evaluate_functionals(const FeFunction& u, const PSetting& p,
                                     const TransportData& transport);

/// Nodal representation of the derivative J'(u): r_i = J'(u)(phi_i), where
/// J = F_dyn/G. Also returns the functional values computed on the way.
struct ResidualData {
    std::vector<double> r;
    FunctionalValue value;
};
ResidualData assemble_J_derivative(const FeFunction& u, const PSetting& p,
                                   const TransportData& transport);

/// Stiffness matrix with a per-triangle symmetric 2x2 weight:
/// K_ab = sum_T area grad phi_a . (W_T grad phi_b). Weights must be SPD.
SparseMatrix assemble_weighted_stiffness(const Mesh& mesh, std::span<const Mat2> weights);

/// Consistent P1 mass matrix.
SparseMatrix assemble_mass(const Mesh& mesh);

/// Lumped mass vector (integral of each hat function; all entries positive).
std::vector<double> lumped_mass(const Mesh& mesh);

/// The conditioned descent-direction solve: find d with
///   integral( grad d . W grad v ) = J'(u)(v) for all test functions v
/// under the given constraint, where K_w is the assembled W-weighted
/// stiffness with the constraint already applied.
///
/// Returns d; form_value receives J'(u)(d) = integral(grad d . W grad d),
/// the squared-gradient value used in the Armijo tests.
FeFunction grad_J(const FeFunction& u, const PSetting& p, const TransportData& transport,
                  const LinearConstraint& constraint, const SparseMatrix& k_w,
                  double* form_value = nullptr, const std::vector<double>* warm_start = nullptr);

}  // namespace dynlap
