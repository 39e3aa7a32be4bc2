// Embedded Dormand-Prince 5(4) pair with PI step-size control.
//
// The right-hand side is an arbitrary callable f(t, y, dy); the state is a
// complex vector. Accumulated observables (work, heat) ride inside y, so
// they are integrated with the same stage weights as the state itself.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "qotto/qcore.hpp"

namespace qotto {

struct StepControl {
    double rel_tol = 1e-8;
    double abs_tol = 1e-12;
    double h_init = 0.0;    // 0: choose automatically
    double max_step = 0.0;  // 0: no cap
    long max_steps = 200'000'000;
};

struct StepStats {
    long accepted = 0;
    long rejected = 0;
};

enum class StepAction { proceed, stop };

namespace detail {

// Dormand-Prince coefficients
inline constexpr double DP_C[7] = {0.0,    1.0 / 5, 3.0 / 10, 4.0 / 5,
                                   8.0 / 9, 1.0,     1.0};
inline constexpr double DP_A[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
// 5th-order weights equal A[6]; error weights are b5 - b4
inline constexpr double DP_E[7] = {
    71.0 / 57600,  0.0,          -71.0 / 16695, 71.0 / 1920,
    -17253.0 / 339200, 22.0 / 525, -1.0 / 40};

}  // namespace detail

// Integrates y' = f(t, y) from t0 to t1. on_accept(t, y, f_at_t_y) is called
// after every accepted step with the FSAL right-hand side already evaluated
// at the new point; returning StepAction::stop ends the integration early.
// Returns the final time (== t1 unless stopped early).
template <class Rhs, class OnAccept>
double rk45_integrate(Rhs&& f, double t0, double t1, CVec& y,
                      const StepControl& ctrl, StepStats& stats,
                      OnAccept&& on_accept) {
    if (!(t1 > t0)) throw std::invalid_argument("rk45: need t1 > t0");
    if (!(ctrl.rel_tol > 0.0) || !(ctrl.abs_tol > 0.0))
        throw std::invalid_argument("rk45: tolerances must be positive");

    const Eigen::Index n = y.size();
    CVec k[7];
    for (auto& ki : k) ki.resize(n);
    CVec ytmp(n), ynew(n), yerr(n);

    const double span = t1 - t0;
    double h_max = span;
    if (ctrl.max_step > 0.0) h_max = std::min(h_max, ctrl.max_step);

    f(t0, y, k[0]);

    auto error_norm = [&](const CVec& ya, const CVec& yb, const CVec& err) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double sc = ctrl.abs_tol +
                              ctrl.rel_tol *
                                  std::max(std::abs(ya(i)), std::abs(yb(i)));
            const double e = std::abs(err(i)) / sc;
            acc += e * e;
        }
        return std::sqrt(acc / double(n));
    };

    // initial step: crude version of Hairer's starting-step heuristic
    double h = ctrl.h_init;
    if (h <= 0.0) {
        double d0 = 0.0, d1 = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double sc = ctrl.abs_tol + ctrl.rel_tol * std::abs(y(i));
            d0 = std::max(d0, std::abs(y(i)) / sc);
            d1 = std::max(d1, std::abs(k[0](i)) / sc);
        }
        h = (d1 > 1e-300) ? 0.01 * d0 / d1 : 1e-6 * span;
        if (!(h > 0.0)) h = 1e-6 * span;
        h = std::min(h, h_max);
    }

    // PI controller, classic DOPRI5 settings
    constexpr double beta = 0.04;
    constexpr double alpha = 0.2 - 0.75 * beta;
    constexpr double safety = 0.9;
    double err_old = 1e-4;

    double t = t0;
    while (t < t1) {
        if (t1 - t <= 1e-12 * span) break;  // done up to roundoff
        if (stats.accepted + stats.rejected > ctrl.max_steps)
            throw std::runtime_error("rk45: step budget exhausted");
        if (h < std::max(1e-14 * std::abs(t), 1e-300))
            throw std::runtime_error("rk45: step size underflow");
        const double hs = std::min(h, t1 - t);

        for (int s = 1; s < 7; ++s) {
            ytmp = y;
            for (int j = 0; j < s; ++j)
                if (detail::DP_A[s][j] != 0.0)
                    ytmp.noalias() += (hs * detail::DP_A[s][j]) * k[j];
            f(t + detail::DP_C[s] * hs, ytmp, k[s]);
        }
        // k[6] was evaluated at the 5th-order solution (FSAL)
        ynew = ytmp;
        yerr.setZero();
        for (int s = 0; s < 7; ++s)
            if (detail::DP_E[s] != 0.0)
                yerr.noalias() += (hs * detail::DP_E[s]) * k[s];

        const double err = error_norm(y, ynew, yerr);
        if (err <= 1.0) {
            t += hs;
            y.swap(ynew);
            k[0].swap(k[6]);
            ++stats.accepted;
            const double e = std::max(err, 1e-10);
            double fac = safety * std::pow(e, -alpha) * std::pow(err_old, beta);
            fac = std::clamp(fac, 0.2, 5.0);
            h = std::min(hs * fac, h_max);
            err_old = e;
            if (on_accept(t, y, k[0]) == StepAction::stop) return t;
        } else {
            ++stats.rejected;
            h = hs * std::clamp(safety * std::pow(err, -0.2), 0.1, 0.9);
        }
    }
    return t;
}

}  // namespace qotto
