#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dynlap/fem.hpp"

namespace dynlap {

struct SolverParams {
    double alpha = 1.0;       // initial step scale
    double grad_tol = 1e-3;   // stop when |d|_p falls below this
    double step_tol = 1e-12;  // accepted steps below this end the run
    int max_iter = 10000;
    int max_halvings = 60;
};

struct IterationRecord {
    double j = 0.0;
    double step = 0.0;
    double grad_norm = 0.0;
    // right-hand side of the sufficient-decrease test the step had to pass;
    // j <= decrease_bound holds exactly for every accepted step
    double decrease_bound = 0.0;
};

enum class Termination {
    converged,   // |d|_p <= grad_tol
    stationary,  // descent direction vanished before the tolerance was met
    step_tol,    // accepted step fell below step_tol
    max_iter,    // iteration budget exhausted (not converged)
};

const char* termination_name(Termination t);

struct EigenPair {
    double p = 2.0;
    double lambda = 0.0;
    FeFunction u;
    int iterations = 0;
    std::vector<IterationRecord> history;
    Termination termination = Termination::converged;
    std::string init_mode;

    bool converged() const {
        return termination == Termination::converged || termination == Termination::stationary;
    }
};

enum class WhichPair { first, second };

/// Linear (p = 2) eigenpair of the weighted stiffness against the mass
/// matrix by inverse iteration: the smallest Dirichlet eigenpair, or the
/// smallest nonzero eigenpair on boundaryless domains (constants deflated
/// through the zero-mean constraint).
EigenPair init_p2(std::shared_ptr<const Mesh> mesh, const TransportData& transport, WhichPair which,
                  const LinearConstraint& constraint);

/// First eigenpair of the dynamic p-Laplacian by normalized descent with
/// Armijo halving. u0 must be nonzero and satisfy the constraint.
EigenPair solve_first(const PSetting& p, std::shared_ptr<const Mesh> mesh,
                      const TransportData& transport, const SolverParams& params,
                      const FeFunction& u0, const LinearConstraint& constraint);

/// Second eigenpair on a boundaryless domain by peak-selection min-max over
/// the circle spanned by the constant first eigenfunction and a zero-mean
/// direction v. v0 must be independent of the constants.
EigenPair solve_second(const PSetting& p, std::shared_ptr<const Mesh> mesh,
                       const TransportData& transport, const SolverParams& params,
                       const FeFunction& v0, const LinearConstraint& constraint);

/// Solve a descending ladder of p values, initializing each run either from
/// the p = 2 linear eigenfunction (cold) or from the previous solution
/// (warm). Records the mode in EigenPair::init_mode.
std::vector<EigenPair> p_ladder(const std::vector<double>& targets,
                                std::shared_ptr<const Mesh> mesh, const TransportData& transport,
                                const SolverParams& params, WhichPair which,
                                const LinearConstraint& constraint, bool warm_start);

/// Brute-force validation of the min-max characterization on a small dense
/// symmetric matrix (row-major, n <= 8): min over directions v orthogonal
/// to the first eigenvector of the maximal Rayleigh quotient on the circle
/// spanned by the first eigenvector and v. Equals the second eigenvalue.
double minmax_oracle(const std::vector<double>& sym, int n);

}  // namespace dynlap
