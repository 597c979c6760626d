#include "dynlap/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "dynlap/dense_sym.hpp"

namespace dynlap {

const char* termination_name(Termination t) {
    switch (t) {
        case Termination::converged: return "converged";
        case Termination::stationary: return "stationary";
        case Termination::step_tol: return "step_tol";
        case Termination::max_iter: return "max_iter";
    }
    return "?";
}

namespace {

/// Flip sign so the integral is nonnegative; break ties (zero-mean
/// functions) toward a positive dominant extremum.
void fix_sign(FeFunction& u) {
    const double integral = u.integral();
    double lo = u.values[0], hi = u.values[0];
    for (double v : u.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double scale = std::max(std::abs(lo), std::abs(hi));
    bool flip = false;
    if (integral < -1e-12 * scale * u.mesh->total_area())
        flip = true;
    else if (std::abs(integral) <= 1e-12 * scale * u.mesh->total_area() && hi + lo < 0.0)
        flip = true;
    if (flip)
        for (auto& v : u.values) v = -v;
}

/// Shift a torus function by whole grid rows so its maximum sits at the
/// y-midline; vertical translations leave the functionals invariant there.
void shift_max_to_midline(FeFunction& u) {
    const Mesh& mesh = *u.mesh;
    if (!mesh.domain().is_torus()) return;
    int arg = 0;
    for (int i = 1; i < mesh.num_nodes(); ++i)
        if (u.values[i] > u.values[arg]) arg = i;
    const int j_max = arg / mesh.nodes_per_row();
    const int j_target = (mesh.ny() + 1) / 2;
    const int shift = j_target - j_max;
    if (shift == 0) return;
    std::vector<double> out(u.values.size());
    for (int j = 0; j < mesh.node_rows(); ++j) {
        int jj = (j + shift) % mesh.ny();
        if (jj < 0) jj += mesh.ny();
        for (int i = 0; i < mesh.nodes_per_row(); ++i)
            out[mesh.grid_node(i, jj)] = u.values[mesh.grid_node(i, j)];
    }
    u.values = std::move(out);
}

SparseMatrix constrained_w_stiffness(const Mesh& mesh, const TransportData& transport,
                                     const LinearConstraint& constraint) {
    SparseMatrix k = assemble_weighted_stiffness(mesh, transport.w);
    constraint.apply_matrix(k);
    return k;
}

}  // namespace

EigenPair init_p2(std::shared_ptr<const Mesh> mesh, const TransportData& transport, WhichPair which,
                  const LinearConstraint& constraint) {
    const Mesh& m = *mesh;
    SparseMatrix k = constrained_w_stiffness(m, transport, constraint);
    const CgPreconditioner pre = CgPreconditioner::build(k, constraint, Preconditioner::automatic);
    const SparseMatrix mass = assemble_mass(m);

    if (which == WhichPair::second && constraint.kind() != LinearConstraint::Kind::zero_mean)
        throw std::invalid_argument("init_p2: second eigenpair requires the zero-mean constraint");

    // deterministic generic start vector
    std::vector<double> x(m.num_nodes());
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (auto& v : x) v = dist(rng);
    constraint.project_solution(x);
    if (constraint.kind() == LinearConstraint::Kind::dirichlet)
        for (int i : constraint.fixed()) x[i] = 0.0;

    auto m_norm = [&](const std::vector<double>& v) { return std::sqrt(mass.quadratic_form(v)); };
    {
        const double n0 = m_norm(x);
        for (auto& v : x) v /= n0;
    }

    double lambda = 0.0;
    bool settled = false;
    std::vector<double> y;
    const int max_outer = 500;
    int it = 0;
    for (; it < max_outer; ++it) {
        std::vector<double> rhs = mass.multiply(x);
        y = cg_solve(k, std::move(rhs), constraint, {}, nullptr, &x, &pre);
        const double n = m_norm(y);
        for (auto& v : y) v /= n;
        const double kq = k.quadratic_form(y);
        const double mq = mass.quadratic_form(y);
        const double lambda_new = kq / mq;
        if (it > 0 && std::abs(lambda_new - lambda) <= 1e-12 * std::abs(lambda_new)) {
            lambda = lambda_new;
            x = y;
            settled = true;
            break;
        }
        lambda = lambda_new;
        x = y;
    }
    if (!settled)
        throw std::runtime_error("init_p2: inverse iteration did not settle within " +
                                 std::to_string(max_outer) + " iterations");

    EigenPair pair;
    pair.p = 2.0;
    pair.lambda = lambda;
    pair.u = FeFunction(mesh, std::move(x));
    normalize_p(pair.u, PSetting(2.0));
    fix_sign(pair.u);
    pair.iterations = it + 1;
    pair.termination = Termination::converged;
    pair.init_mode = "inverse_iteration";
    if (!(pair.lambda > 0.0)) throw std::runtime_error("init_p2: nonpositive eigenvalue");
    return pair;
}

EigenPair solve_first(const PSetting& p, std::shared_ptr<const Mesh> mesh,
                      const TransportData& transport, const SolverParams& params,
                      const FeFunction& u0, const LinearConstraint& constraint) {
    const Mesh& m = *mesh;
    SparseMatrix k = constrained_w_stiffness(m, transport, constraint);
    const CgPreconditioner pre = CgPreconditioner::build(k, constraint, Preconditioner::automatic);

    EigenPair out;
    out.p = p.p;

    FeFunction u = u0;
    constraint.project_solution(u.values);
    normalize_p(u, p);
    double j_cur = eval_J(u, p, transport);

    std::vector<double> warm(m.num_nodes(), 0.0);
    for (int iter = 0; iter < params.max_iter; ++iter) {
        ResidualData res = assemble_J_derivative(u, p, transport);
        std::vector<double> rhs = res.r;
        std::vector<double> d = cg_solve(k, std::move(rhs), constraint, {}, nullptr, &warm, &pre);
        warm = d;
        FeFunction dir(mesh, std::move(d));
        const double gnorm = norm_p(dir, p);
        const double dd = dot(res.r, dir.values);

        if (gnorm <= params.grad_tol || dd <= 0.0) {
            out.history.push_back({j_cur, 0.0, gnorm, j_cur});
            out.termination = (gnorm <= params.grad_tol) ? Termination::converged : Termination::stationary;
            out.iterations = iter;
            out.lambda = j_cur;
            out.u = std::move(u);
            fix_sign(out.u);
            return out;
        }

        double s = params.alpha / std::max(1.0, gnorm);
        bool accepted = false;
        FeFunction trial(mesh, {});
        double j_trial = 0.0;
        for (int h = 0; h < params.max_halvings; ++h) {
            trial.values = u.values;
            axpy(-s, dir.values, trial.values);
            constraint.project_solution(trial.values);
            normalize_p(trial, p);
            j_trial = eval_J(trial, p, transport);
            if (j_trial <= j_cur - 0.25 * s * dd) {
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if (!accepted) {
            out.history.push_back({j_cur, s, gnorm, j_cur});
            out.termination = Termination::step_tol;
            out.iterations = iter;
            out.lambda = j_cur;
            out.u = std::move(u);
            fix_sign(out.u);
            return out;
        }
        u = std::move(trial);
        const double bound = j_cur - 0.25 * s * dd;
        j_cur = j_trial;
        out.history.push_back({j_cur, s, gnorm, bound});
        if (s < params.step_tol) {
            out.termination = Termination::step_tol;
            out.iterations = iter + 1;
            out.lambda = j_cur;
            out.u = std::move(u);
            fix_sign(out.u);
            return out;
        }
    }
    out.termination = Termination::max_iter;
    out.iterations = params.max_iter;
    out.lambda = j_cur;
    out.u = std::move(u);
    fix_sign(out.u);
    return out;
}

namespace {

/// State for the 1D angle maximization of theta -> J(cos(theta) u1 + sin(theta) v).
struct PeakProblem {
    const FeFunction& u1;
    const FeFunction& v;
    const PSetting& p;
    const TransportData& transport;

    FeFunction at(double theta) const {
        FeFunction u = u1;
        const double t1 = std::cos(theta), t2 = std::sin(theta);
        for (int i = 0; i < u.size(); ++i) u.values[i] = t1 * u1.values[i] + t2 * v.values[i];
        return u;
    }
    double value(double theta) const { return eval_J(at(theta), p, transport); }
    /// dJ/dtheta via the assembled derivative: J'(u(theta))(u'(theta)).
    double slope(double theta) const {
        const FeFunction u = at(theta);
        const ResidualData res = assemble_J_derivative(u, p, transport);
        const double t1 = std::cos(theta), t2 = std::sin(theta);
        double s = 0.0;
        for (int i = 0; i < u.size(); ++i)
            s += res.r[i] * (-t2 * u1.values[i] + t1 * v.values[i]);
        return s;
    }
};

/// Local maximizer of the peak problem near theta0: walk uphill until the
/// slope changes sign, then Newton steps on the slope root (secant-estimated
/// curvature) safeguarded by bisection on the bracket.
double peak_select(const PeakProblem& prob, double theta0) {
    const double pi = 3.14159265358979323846;
    const double g0 = prob.slope(theta0);
    if (std::abs(g0) < 1e-15) return theta0;

    // [a, b] with slope(a) > 0 > slope(b); the slope is continuous and
    // pi-periodic, so walking uphill finds the flip within one period
    double a = 0.0, b = 0.0;
    {
        double step = (g0 > 0.0) ? 0.05 : -0.05;
        double prev = theta0, gprev = g0;
        bool bracketed = false;
        for (double walked = 0.0; walked < 2.5 * pi; walked += std::abs(step), step *= 1.6) {
            const double next = prev + step;
            const double gnext = prob.slope(next);
            if ((gprev > 0.0) != (gnext > 0.0)) {
                a = (gprev > 0.0) ? prev : next;
                b = (gprev > 0.0) ? next : prev;
                bracketed = true;
                break;
            }
            prev = next;
            gprev = gnext;
        }
        if (!bracketed)
            throw std::runtime_error("peak selection: no interior maximum found (degenerate direction)");
        if (a > b) std::swap(a, b);  // walking downhill: ends arrive reversed
    }

    double x = 0.5 * (a + b);
    double gx = prob.slope(x);
    double x_prev = a, g_prev = prob.slope(a);
    for (int it = 0; it < 80 && std::abs(b - a) > 1e-13; ++it) {
        if (gx > 0.0)
            a = x;
        else
            b = x;
        if (std::abs(gx) < 1e-14) break;
        const double denom = gx - g_prev;
        double x_new = (denom != 0.0) ? x - gx * (x - x_prev) / denom : 0.5 * (a + b);
        if (!(x_new > a && x_new < b)) x_new = 0.5 * (a + b);  // bisection safeguard
        x_prev = x;
        g_prev = gx;
        x = x_new;
        gx = prob.slope(x);
    }
    return x;
}

}  // namespace

EigenPair solve_second(const PSetting& p, std::shared_ptr<const Mesh> mesh,
                       const TransportData& transport, const SolverParams& params,
                       const FeFunction& v0, const LinearConstraint& constraint) {
    const Mesh& m = *mesh;
    if (m.num_boundary_nodes() != 0)
        throw std::invalid_argument("solve_second: requires a boundaryless domain");
    if (constraint.kind() != LinearConstraint::Kind::zero_mean)
        throw std::invalid_argument("solve_second: requires the zero-mean constraint");

    SparseMatrix k = constrained_w_stiffness(m, transport, constraint);
    const CgPreconditioner pre = CgPreconditioner::build(k, constraint, Preconditioner::automatic);

    // first eigenfunction: the constant with unit p-norm (J = 0)
    FeFunction u1(mesh, std::vector<double>(m.num_nodes(), 1.0));
    normalize_p(u1, p);

    FeFunction v = v0;
    constraint.project_solution(v.values);
    if (norm_p(v, p) <= 0.0) throw std::invalid_argument("solve_second: v0 collapsed to zero mean");
    normalize_p(v, p);

    EigenPair out;
    out.p = p.p;

    double theta = 0.5 * 3.14159265358979323846;  // start at pure v
    std::vector<double> warm(m.num_nodes(), 0.0);

    auto finish = [&](double theta_fin, double j_fin, int iters, Termination term) {
        FeFunction u = PeakProblem{u1, v, p, transport}.at(theta_fin);
        normalize_p(u, p);
        fix_sign(u);
        shift_max_to_midline(u);
        out.u = std::move(u);
        out.lambda = j_fin;
        out.iterations = iters;
        out.termination = term;
        return out;
    };

    PeakProblem prob{u1, v, p, transport};
    theta = peak_select(prob, theta);
    for (int iter = 0; iter < params.max_iter; ++iter) {
        const double t2 = std::sin(theta);
        if (std::abs(t2) < 1e-10)
            throw std::runtime_error("solve_second: peak selection degenerated (v in span of u1)");

        FeFunction uplus = prob.at(theta);
        ResidualData res = assemble_J_derivative(uplus, p, transport);
        const double j_cur = res.value.j;
        std::vector<double> rhs = res.r;
        std::vector<double> d = cg_solve(k, std::move(rhs), constraint, {}, nullptr, &warm, &pre);
        warm = d;
        FeFunction dir(mesh, std::move(d));
        const double gnorm = norm_p(dir, p);
        const double dd = dot(res.r, dir.values);

        if (gnorm <= params.grad_tol || dd <= 0.0) {
            out.history.push_back({j_cur, 0.0, gnorm, j_cur});
            return finish(theta, j_cur, iter,
                          gnorm <= params.grad_tol ? Termination::converged : Termination::stationary);
        }

        const double sign_t2 = (t2 > 0) ? 1.0 : -1.0;
        double s = params.alpha / std::max(1.0, gnorm);
        bool accepted = false;
        FeFunction v_trial(mesh, {});
        double theta_trial = theta, j_trial = 0.0;
        for (int h = 0; h < params.max_halvings; ++h) {
            v_trial.values = v.values;
            axpy(-s * sign_t2, dir.values, v_trial.values);
            constraint.project_solution(v_trial.values);
            normalize_p(v_trial, p);
            PeakProblem trial_prob{u1, v_trial, p, transport};
            theta_trial = peak_select(trial_prob, theta);
            j_trial = trial_prob.value(theta_trial);
            if (j_trial <= j_cur - 0.25 * s * std::abs(t2) * dd) {
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if (!accepted) {
            out.history.push_back({j_cur, s, gnorm, j_cur});
            return finish(theta, j_cur, iter, Termination::step_tol);
        }
        v = std::move(v_trial);  // prob references v and sees the update
        theta = theta_trial;
        out.history.push_back({j_trial, s, gnorm, j_cur - 0.25 * s * std::abs(t2) * dd});
        if (s < params.step_tol) return finish(theta, j_trial, iter + 1, Termination::step_tol);
    }
    const double j_tail = prob.value(theta);
    out.history.push_back({j_tail, 0.0, 0.0, j_tail});
    return finish(theta, prob.value(theta), params.max_iter, Termination::max_iter);
}

std::vector<EigenPair> p_ladder(const std::vector<double>& targets,
                                std::shared_ptr<const Mesh> mesh, const TransportData& transport,
                                const SolverParams& params, WhichPair which,
                                const LinearConstraint& constraint, bool warm_start) {
    for (size_t i = 1; i < targets.size(); ++i)
        if (!(targets[i] < targets[i - 1]))
            throw std::invalid_argument("p_ladder: targets must be strictly descending");

    const EigenPair linear = init_p2(mesh, transport, which, constraint);

    std::vector<EigenPair> out;
    out.reserve(targets.size());
    for (size_t i = 0; i < targets.size(); ++i) {
        const PSetting p(targets[i]);
        FeFunction start = linear.u;
        std::string mode = "p2";
        if (warm_start && !out.empty() && out.back().converged()) {
            start = out.back().u;
            mode = "warm";
        }
        EigenPair pair;
        if (which == WhichPair::first) {
            pair = solve_first(p, mesh, transport, params, start, constraint);
        } else {
            // recover the zero-mean direction from the previous solution
            constraint.project_solution(start.values);
            pair = solve_second(p, mesh, transport, params, start, constraint);
        }
        pair.init_mode = mode;
        out.push_back(std::move(pair));
    }
    return out;
}

double minmax_oracle(const std::vector<double>& sym, int n) {
    if (n < 2 || n > 8) throw std::invalid_argument("minmax_oracle: dimension must be in [2, 8]");
    if (static_cast<int>(sym.size()) != n * n) throw std::invalid_argument("minmax_oracle: bad size");

    const SymEigen eig = sym_eigen(sym, n);
    std::vector<double> u1(eig.vectors.begin(), eig.vectors.begin() + n);

    auto rayleigh = [&](const std::vector<double>& w) {
        double num = 0.0, den = 0.0;
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += sym[i * n + j] * w[j];
            num += w[i] * s;
            den += w[i] * w[i];
        }
        return num / den;
    };

    // orthonormal basis of the complement of span(u1)
    std::vector<std::vector<double>> basis;
    for (int e = 0; e < n && static_cast<int>(basis.size()) < n - 1; ++e) {
        std::vector<double> w(n, 0.0);
        w[e] = 1.0;
        double proj = 0.0;
        for (int i = 0; i < n; ++i) proj += w[i] * u1[i];
        for (int i = 0; i < n; ++i) w[i] -= proj * u1[i];
        for (const auto& bvec : basis) {
            double pr = 0.0;
            for (int i = 0; i < n; ++i) pr += w[i] * bvec[i];
            for (int i = 0; i < n; ++i) w[i] -= pr * bvec[i];
        }
        double nn = 0.0;
        for (double x : w) nn += x * x;
        if (nn < 1e-12) continue;
        nn = std::sqrt(nn);
        for (auto& x : w) x /= nn;
        basis.push_back(std::move(w));
    }
    const int dim = static_cast<int>(basis.size());

    auto direction = [&](const std::vector<double>& c) {
        std::vector<double> v(n, 0.0);
        for (int k = 0; k < dim; ++k)
            for (int i = 0; i < n; ++i) v[i] += c[k] * basis[k][i];
        return v;
    };

    // max of the Rayleigh quotient over the circle {cos(t) u1 + sin(t) v}:
    // dense scan plus golden-section refinement
    auto circle_max = [&](const std::vector<double>& v) {
        const double pi = 3.14159265358979323846;
        std::vector<double> w(n);
        auto q = [&](double th) {
            const double c = std::cos(th), s = std::sin(th);
            for (int i = 0; i < n; ++i) w[i] = c * u1[i] + s * v[i];
            return rayleigh(w);
        };
        const int samples = 128;
        double best_t = 0.0, best = -1e300;
        for (int k = 0; k < samples; ++k) {
            const double th = pi * k / samples;
            const double val = q(th);
            if (val > best) {
                best = val;
                best_t = th;
            }
        }
        double a = best_t - pi / samples, b = best_t + pi / samples;
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
        double f1 = q(c1), f2 = q(c2);
        for (int it = 0; it < 80 && (b - a) > 1e-12; ++it) {
            if (f1 > f2) {
                b = c2;
                c2 = c1;
                f2 = f1;
                c1 = b - gr * (b - a);
                f1 = q(c1);
            } else {
                a = c1;
                c1 = c2;
                f1 = f2;
                c2 = a + gr * (b - a);
                f2 = q(c2);
            }
        }
        return std::max(f1, f2);
    };

    auto objective = [&](const std::vector<double>& c) { return circle_max(direction(c)); };

    // coarse random sampling of the complement sphere, then cyclic 2D
    // rotations with scan + golden refinement
    std::mt19937 rng(987654321u);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> best_c(dim, 0.0);
    double best = 1e300;
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<double> c(dim);
        double nn = 0.0;
        for (auto& x : c) {
            x = gauss(rng);
            nn += x * x;
        }
        nn = std::sqrt(nn);
        for (auto& x : c) x /= nn;
        const double val = objective(c);
        if (val < best) {
            best = val;
            best_c = c;
        }
    }

    const double pi = 3.14159265358979323846;
    for (int sweep = 0; sweep < 60; ++sweep) {
        double improved = 0.0;
        for (int i = 0; i < dim; ++i) {
            for (int j = i + 1; j < dim; ++j) {
                auto rotated = [&](double phi) {
                    std::vector<double> c = best_c;
                    const double ci = c[i], cj = c[j];
                    c[i] = std::cos(phi) * ci - std::sin(phi) * cj;
                    c[j] = std::sin(phi) * ci + std::cos(phi) * cj;
                    return c;
                };
                double best_phi = 0.0, best_val = best;
                const int scan = 33;
                for (int k = -scan; k <= scan; ++k) {
                    const double phi = pi * k / (2.0 * scan);
                    const double val = objective(rotated(phi));
                    if (val < best_val) {
                        best_val = val;
                        best_phi = phi;
                    }
                }
                double a = best_phi - pi / (2.0 * scan), b = best_phi + pi / (2.0 * scan);
                const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
                double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
                double f1 = objective(rotated(c1)), f2 = objective(rotated(c2));
                for (int it = 0; it < 60 && (b - a) > 1e-11; ++it) {
                    if (f1 < f2) {
                        b = c2;
                        c2 = c1;
                        f2 = f1;
                        c1 = b - gr * (b - a);
                        f1 = objective(rotated(c1));
                    } else {
                        a = c1;
                        c1 = c2;
                        f1 = f2;
                        c2 = a + gr * (b - a);
                        f2 = objective(rotated(c2));
                    }
                }
                const double phi_best = (f1 < f2) ? c1 : c2;
                const double val = std::min(f1, f2);
                if (val < best) {
                    improved += best - val;
                    best = val;
                    best_c = rotated(phi_best);
                }
            }
        }
        if (improved < 1e-13) break;
    }
    return best;
}

}  // namespace dynlap
