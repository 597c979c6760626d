#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>

namespace dynlap {

/// Adaptive embedded Runge-Utta integrator of order 5(4) with
/// Dormand-Prince coefficients and FSAL step reuse.
///
/// F: void(double t, const std::array<double, N>& y, std::array<double, N>& dydt)
template <std::size_t N, class F>
void integrate_rk54(F&& rhs, std::array<double, N>& y, double t0, double t1, double rel_tol,
                    double abs_tol, double initial_step) {
    if (t1 == t0) return;
    const double dir = (t1 > t0) ? 1.0 : -1.0;
    double t = t0;
    double h = dir * std::abs(initial_step);

    using State = std::array<double, N>;
    State k1, k2, k3, k4, k5, k6, k7, ytmp, ynew;
    rhs(t, y, k1);

    auto stage = [&](State& out, double c, std::initializer_list<std::pair<const State*, double>> terms) {
        for (std::size_t i = 0; i < N; ++i) {
            double s = y[i];
            for (const auto& [k, a] : terms) s += h * a * (*k)[i];
            out[i] = s;
        }
        (void)c;
    };

    const int max_steps = 100000000;
    for (int step = 0; step < max_steps; ++step) {
        if ((t - t1) * dir >= 0.0) return;
        if ((t + h - t1) * dir > 0.0) h = t1 - t;

        stage(ytmp, 0.2, {{&k1, 1.0 / 5}});
        rhs(t + 0.2 * h, ytmp, k2);
        stage(ytmp, 0.3, {{&k1, 3.0 / 40}, {&k2, 9.0 / 40}});
        rhs(t + 0.3 * h, ytmp, k3);
        stage(ytmp, 0.8, {{&k1, 44.0 / 45}, {&k2, -56.0 / 15}, {&k3, 32.0 / 9}});
        rhs(t + 0.8 * h, ytmp, k4);
        stage(ytmp, 8.0 / 9,
              {{&k1, 19372.0 / 6561}, {&k2, -25360.0 / 2187}, {&k3, 64448.0 / 6561}, {&k4, -212.0 / 729}});
        rhs(t + 8.0 / 9 * h, ytmp, k5);
        stage(ytmp, 1.0,
              {{&k1, 9017.0 / 3168}, {&k2, -355.0 / 33}, {&k3, 46732.0 / 5247}, {&k4, 49.0 / 176},
               {&k5, -5103.0 / 18656}});
        rhs(t + h, ytmp, k6);
        stage(ynew, 1.0,
              {{&k1, 35.0 / 384}, {&k3, 500.0 / 1113}, {&k4, 125.0 / 192}, {&k5, -2187.0 / 6784},
               {&k6, 11.0 / 84}});
        rhs(t + h, ynew, k7);

        // embedded 4th-order error estimate
        double err = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double e = h * (71.0 / 57600 * k1[i] - 71.0 / 16695 * k3[i] + 71.0 / 1920 * k4[i] -
                                  17253.0 / 339200 * k5[i] + 22.0 / 525 * k6[i] - 1.0 / 40 * k7[i]);
            const double sc = abs_tol + rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            err += (e / sc) * (e / sc);
        }
        err = std::sqrt(err / N);

        if (err <= 1.0) {
            t += h;
            y = ynew;
            k1 = k7;  // FSAL
            const double fac = std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(err, 1e-10), -0.2)));
            h *= fac;
        } else {
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
        }
        if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(t))) {
            std::ostringstream os;
            os << "integrate_rk54: step size underflow at t = " << t << " (state:";
            for (double v : y) os << " " << v;
            os << ")";
            throw std::runtime_error(os.str());
        }
    }
    throw std::runtime_error("integrate_rk54: step budget exhausted");
}

}  // namespace dynlap
