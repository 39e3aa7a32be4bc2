// The two-stroke machine: recharge under the pump, discharge through a
// population swap of |e> and |i> (exact unitary, or a finite pi/2 pulse),
// Operational Steady States as fixed points of the cycle map, and the
// short-cycle closed forms with their limiting efficiencies.
#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "qotto/lindblad.hpp"
#include "qotto/models.hpp"
#include "qotto/qcore.hpp"
#include "qotto/thermo.hpp"

namespace qotto {

enum class DischargeMode { ideal_swap, finite_pulse };

struct CycleConfig {
    double tau_r = 0.0;  // recharge duration
    DischargeMode mode = DischargeMode::ideal_swap;
    int max_cycles = 100000;
    double fp_tol = 1e-10;
    int plain_iteration_budget = 512;  // before the exact fixed-point solve
    StepControl ctrl;

    void validate(const EngineParams& p) const {
        if (!(tau_r > 0.0))
            throw std::invalid_argument("CycleConfig: tau_r must be > 0");
        if (max_cycles < 1)
            throw std::invalid_argument("CycleConfig: max_cycles must be >= 1");
        if (!(fp_tol > 0.0))
            throw std::invalid_argument("CycleConfig: fp_tol must be > 0");
        if (mode == DischargeMode::finite_pulse && !(p.epsilon > 0.0))
            throw std::invalid_argument(
                "CycleConfig: finite_pulse needs epsilon > 0");
    }
};

// U = -i(|a><b| + |b><a|) + identity elsewhere: swaps the two populations.
inline Mat swap_unitary(int dim, int a, int b) {
    Mat u = Mat::Zero(dim, dim);
    for (int k = 0; k < dim; ++k)
        if (k != a && k != b) u(k, k) = 1.0;
    u(a, b) = -I_UNIT;
    u(b, a) = -I_UNIT;
    return u;
}

namespace detail {

inline std::pair<int, int> ei_indices(const DensityMatrix& rho) {
    if (!rho.basis_labels.empty()) {
        int e = -1, i = -1;
        for (size_t k = 0; k < rho.basis_labels.size(); ++k) {
            if (rho.basis_labels[k] == "e") e = static_cast<int>(k);
            if (rho.basis_labels[k] == "i") i = static_cast<int>(k);
        }
        if (e >= 0 && i >= 0) return {e, i};
    }
    return {1, 2};  // g,e,i(,m) ordering
}

}  // namespace detail

// Exchange the |e> and |i> populations by the exact swap unitary.
inline DensityMatrix discharge_ideal(const DensityMatrix& rho) {
    const auto [e, i] = detail::ei_indices(rho);
    const Mat u = swap_unitary(rho.dim(), e, i);
    return DensityMatrix{u * rho.m * u.adjoint(), rho.basis_labels};
}

struct PulseResult {
    Mat state;
    ThermoAccum accum;  // w_ext includes the drive switching work
    double tau_d = 0.0;
    StepStats stats;
};

// Resonant pi/2 pulse on (e,i) of duration pi/(2 eps), integrated with all
// dissipators and the pump still on. For eps much larger than every rate
// this approaches the ideal swap and -W_ext approaches the ergotropy.
inline PulseResult discharge_pulse(const EngineParams& p, const Mat& rho,
                                   const StepControl& ctrl = {}) {
    const ModelSpec model = build_engine4(p, EngineStage::discharge);
    const RotatingGenerator rg = rotating_generator(model);
    const int e = 1, i = 2;
    const double tau_d = p.tau_discharge();

    PulseResult out;
    out.tau_d = tau_d;
    // work done switching the extraction drive on
    const double w_on = p.epsilon * (rho(e, i) + rho(i, e)).real();

    ObserverSet obs;
    obs.max_samples = 16;
    Trajectory traj =
        evolve(rg, DensityMatrix{rho, model.level_labels}, tau_d, ctrl, obs);
    out.state = traj.final_state;
    out.stats = traj.stats;
    out.accum = traj.final_accum;
    const double w_off =
        -p.epsilon * (out.state(e, i) + out.state(i, e)).real();
    out.accum.w_ext += w_on + w_off;
    return out;
}

struct CycleReport {
    double w_in = 0.0;
    double w_ext = 0.0;
    double q_m = 0.0;
    double q_i = 0.0;
    double q_e = 0.0;
    double e_in = 0.0;
    double eta = 0.0;    // NaN when the machine is off
    double power = 0.0;  // -w_ext / cycle duration
    double du_cycle = 0.0;
    double ergotropy_at_swap = 0.0;
    double max_offdiag = 0.0;  // coherence left at the cycle boundary
    double tau_cycle = 0.0;
    bool machine_on = false;
    std::array<double, 5> e_in_branches{};
};

struct CycleResult {
    Mat state_start;    // cycle-start (post-discharge) state
    Mat state_at_swap;  // end of recharge, where the ergotropy sits
    Mat state_end;
    CycleReport report;
};

// One full cycle from a cycle-start state: recharge for tau_r, then
// discharge. Energy accounting uses the recharge-stage Hamiltonian at both
// boundaries, so a converged cycle closes with du_cycle ~ 0.
inline CycleResult run_cycle(const CycleConfig& cfg, const EngineParams& p,
                             const DensityMatrix& rho_start) {
    cfg.validate(p);
    const ModelSpec model_r = build_engine4(p, EngineStage::recharge);
    const RotatingGenerator rg = rotating_generator(model_r);

    ObserverSet obs;
    obs.max_samples = 16;
    Trajectory traj = evolve(rg, rho_start, cfg.tau_r, cfg.ctrl, obs);

    CycleResult out;
    out.state_start = rho_start.m;
    out.state_at_swap = traj.final_state;
    ThermoAccum acc = traj.final_accum;

    double tau_d = 0.0;
    if (cfg.mode == DischargeMode::ideal_swap) {
        const DensityMatrix swapped = discharge_ideal(
            DensityMatrix{out.state_at_swap, model_r.level_labels});
        out.state_end = swapped.m;
        acc.w_ext +=
            ((out.state_end - out.state_at_swap) * rg.h_heat).trace().real();
    } else {
        PulseResult pr = discharge_pulse(p, out.state_at_swap, cfg.ctrl);
        out.state_end = pr.state;
        tau_d = pr.tau_d;
        acc.w_in += pr.accum.w_in;
        acc.w_ext += pr.accum.w_ext;
        for (size_t g = 0; g < rg.groups.size(); ++g)
            acc.q[g] += pr.accum.q[g];
    }

    CycleReport& r = out.report;
    r.w_in = acc.w_in;
    r.w_ext = acc.w_ext;
    r.q_m = acc.q[rg.group_slot("gamma_m")];
    r.q_i = acc.q[rg.group_slot("gamma_i")];
    r.q_e = acc.q[rg.group_slot("gamma_e")];
    r.e_in_branches = {r.w_in, r.w_in + r.q_m + r.q_i + r.q_e, r.w_in + r.q_m,
                       r.w_in + r.q_i, r.w_in + r.q_e};
    r.e_in = injected_energy_engine(r.w_in, r.q_m, r.q_i, r.q_e);
    r.du_cycle =
        ((out.state_end - out.state_start) * rg.h_heat).trace().real();
    r.ergotropy_at_swap = ergotropy(
        DensityMatrix{out.state_at_swap, model_r.level_labels}, model_r.h0());
    r.tau_cycle = cfg.tau_r + tau_d;
    r.machine_on = r.w_ext < 0.0;
    r.eta = (r.machine_on && r.e_in > 0.0) ? -r.w_ext / r.e_in : quiet_nan();
    r.power = -r.w_ext / r.tau_cycle;
    for (int a = 0; a < rg.dim; ++a)
        for (int b = 0; b < rg.dim; ++b)
            if (a != b)
                r.max_offdiag =
                    std::max(r.max_offdiag, std::abs(out.state_end(a, b)));
    return out;
}

namespace detail {

// Real coordinates of a Hermitian matrix: diagonal first, then
// (Re, Im) of each upper-triangle entry.
inline RVec herm_coords(const Mat& m) {
    const int d = static_cast<int>(m.rows());
    RVec x(d * d);
    int at = 0;
    for (int k = 0; k < d; ++k) x(at++) = m(k, k).real();
    for (int j = 0; j < d; ++j)
        for (int k = j + 1; k < d; ++k) {
            x(at++) = m(j, k).real();
            x(at++) = m(j, k).imag();
        }
    return x;
}

inline Mat herm_from_coords(const RVec& x, int d) {
    Mat m = Mat::Zero(d, d);
    int at = 0;
    for (int k = 0; k < d; ++k) m(k, k) = x(at++);
    for (int j = 0; j < d; ++j)
        for (int k = j + 1; k < d; ++k) {
            const double re = x(at++), im = x(at++);
            m(j, k) = Cplx(re, im);
            m(k, j) = Cplx(re, -im);
        }
    return m;
}

inline Mat herm_basis_element(int d, int idx) {
    RVec x = RVec::Zero(d * d);
    x(idx) = 1.0;
    return herm_from_coords(x, d);
}

}  // namespace detail

struct OssResult {
    DensityMatrix oss;          // end of recharge: the working state
    DensityMatrix cycle_start;  // post-discharge fixed point
    CycleReport report;
    int cycles = 0;
    bool used_direct_solve = false;
};

// Fixed point of the cycle map. Plain iteration first; if the contraction
// per cycle is too weak to converge within the budget (short cycles), the
// map is linear on states, so it is built once from the Hermitian basis and
// the fixed point solved directly. Either way the returned state satisfies
// |cycle(state) - state|_max <= fp_tol, checked by applying the map.
inline OssResult find_oss(const CycleConfig& cfg, const EngineParams& p) {
    cfg.validate(p);
    const ModelSpec model_r = build_engine4(p, EngineStage::recharge);
    const RotatingGenerator rg_r = rotating_generator(model_r);
    const int d = rg_r.dim;

    ObserverSet light;
    light.max_samples = 16;

    auto cycle_map = [&](const Mat& rho) -> Mat {
        Trajectory traj = evolve(rg_r, DensityMatrix{rho, model_r.level_labels},
                                 cfg.tau_r, cfg.ctrl, light);
        if (cfg.mode == DischargeMode::ideal_swap)
            return discharge_ideal(
                       DensityMatrix{traj.final_state, model_r.level_labels})
                .m;
        return discharge_pulse(p, traj.final_state, cfg.ctrl).state;
    };

    OssResult out;
    Mat rho = initial_gibbs(model_r).m;

    const int budget = std::min(cfg.plain_iteration_budget, cfg.max_cycles);
    bool converged = false;
    for (int n = 0; n < budget; ++n) {
        Mat next = cycle_map(rho);
        const double delta = max_abs(next - rho);
        rho = std::move(next);
        ++out.cycles;
        if (delta <= cfg.fp_tol) {
            converged = true;
            break;
        }
    }

    if (!converged) {
        // Exact solve: the cycle map is linear, M x = x with unit trace.
        // All basis elements are propagated simultaneously so they share
        // one step sequence; the assembled matrix then represents the
        // discrete map exactly and the slow-sector conditioning ~1/(kappa
        // tau_r) only amplifies roundoff, not integration tolerance.
        out.used_direct_solve = true;
        StepControl tight = cfg.ctrl;
        tight.rel_tol = std::min(tight.rel_tol, 1e-13);
        tight.abs_tol = std::min(tight.abs_tol, 1e-18);

        const int n = d * d;
        const Mat gen_r = rg_r.matrix().topLeftCorner(n, n);
        Mat gen_d;
        if (cfg.mode == DischargeMode::finite_pulse) {
            const ModelSpec model_d = build_engine4(p, EngineStage::discharge);
            gen_d = rotating_generator(model_d).matrix().topLeftCorner(n, n);
        }
        const Mat u_swap = swap_unitary(d, 1, 2);

        auto propagate_all = [&](const Mat& gen, double t,
                                 std::vector<Mat>& elems) {
            CVec y(n * n);
            for (int k = 0; k < n; ++k)
                y.segment(k * n, n) =
                    Eigen::Map<const CVec>(elems[k].data(), n);
            StepStats st;
            auto rhs = [&](double, const CVec& yy, CVec& dy) {
                for (int k = 0; k < n; ++k)
                    dy.segment(k * n, n).noalias() =
                        gen * yy.segment(k * n, n);
            };
            auto keep = [](double, CVec&, const CVec&) {
                return StepAction::proceed;
            };
            rk45_integrate(rhs, 0.0, t, y, tight, st, keep);
            for (int k = 0; k < n; ++k)
                elems[k] = Eigen::Map<const Mat>(y.data() + k * n, d, d);
        };

        std::vector<Mat> elems(n);
        for (int k = 0; k < n; ++k)
            elems[k] = detail::herm_basis_element(d, k);
        propagate_all(gen_r, cfg.tau_r, elems);
        if (cfg.mode == DischargeMode::ideal_swap) {
            for (Mat& e : elems) e = u_swap * e * u_swap.adjoint();
        } else {
            propagate_all(gen_d, p.tau_discharge(), elems);
        }

        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + 1, n);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
        for (int k = 0; k < n; ++k) {
            a.col(k).head(n) = detail::herm_coords(elems[k]);
            a(k, k) -= 1.0;
        }
        for (int k = 0; k < d; ++k) a(n, k) = 1.0;  // unit trace
        b(n) = 1.0;
        const RVec x = a.colPivHouseholderQr().solve(b);
        rho = detail::herm_from_coords(x, d);
        rho /= rho.trace().real();

        // apply the map once, at the solve tolerances, as the convergence
        // check the returned state must satisfy
        CycleConfig verify = cfg;
        verify.ctrl = tight;
        Trajectory vt = evolve(rg_r, DensityMatrix{rho, model_r.level_labels},
                               verify.tau_r, verify.ctrl, light);
        Mat mapped;
        if (cfg.mode == DischargeMode::ideal_swap)
            mapped = discharge_ideal(
                         DensityMatrix{vt.final_state, model_r.level_labels})
                         .m;
        else
            mapped = discharge_pulse(p, vt.final_state, verify.ctrl).state;
        const double residual = max_abs(mapped - rho);
        if (residual > cfg.fp_tol) {
            std::ostringstream os;
            os << "find_oss: no convergence; fixed-point residual "
               << residual;
            throw std::runtime_error(os.str());
        }
    } else if (out.cycles >= cfg.max_cycles) {
        throw std::runtime_error("find_oss: no convergence in max_cycles");
    }

    DensityMatrix start{rho, model_r.level_labels};
    start.validate();
    CycleResult cyc = run_cycle(cfg, p, start);
    out.cycle_start = start;
    out.oss = DensityMatrix{cyc.state_at_swap, model_r.level_labels};
    out.report = cyc.report;
    return out;
}

struct ShortCycleReport {
    double r_g = 0.0, r_e = 0.0, r_i = 0.0, r_m = 0.0;
    double kappa = 0.0;
    double p = 0.0;  // pumping rate
    double w_in = 0.0, q_e = 0.0, q_i = 0.0, q_m = 0.0;
    double ergotropy = 0.0;
    double e_in = 0.0;
    double eta = 0.0;    // NaN when the machine is off
    double power = 0.0;  // tau-independent
    bool machine_on = false;
    std::array<double, 5> e_in_branches{};
};

struct EngineRates {
    RatePair m, i, e;
    double p = 0.0;
    double gamma_i_plus_eff = 0.0;  // Gamma_i+
    double kappa = 0.0;
};

inline EngineRates engine_rates(const EngineParams& prm) {
    EngineRates r;
    r.m = thermal_rates(prm.gamma0_m, prm.omega_m - prm.omega_i, prm.T);
    r.i = thermal_rates(prm.gamma0_i, prm.omega_i, prm.T);
    r.e = thermal_rates(prm.gamma0_e, prm.omega_e, prm.T);
    r.p = pumping_rate(prm.Omega, r.m.down, prm.delta_omega());
    r.gamma_i_plus_eff = r.i.up + r.p * r.m.down;
    r.kappa = 2.0 * (r.gamma_i_plus_eff + r.e.up) + r.i.down + r.e.down;
    return r;
}

// Post-recharge populations of the short cycle, first order in tau,
// renormalized so that all four sum to one.
inline ShortCycleReport short_cycle_populations(const EngineParams& prm,
                                                double tau) {
    prm.validate();
    const EngineRates g = engine_rates(prm);
    ShortCycleReport out;
    out.kappa = g.kappa;
    out.p = g.p;

    const double gi = g.gamma_i_plus_eff, ge_up = g.e.up;
    if (gi + ge_up == 0.0) {
        out.r_g = 1.0;  // nothing pumps: everything decays to the ground state
        return out;
    }
    const double denom = 2.0 * (gi + ge_up) + g.i.down + g.e.down -
                         (g.e.down * (gi + g.i.down) + ge_up * g.i.down) * tau;
    double ri = (gi + ge_up - ge_up * g.i.down * tau) / denom;
    double re = (ri * (1.0 - (ge_up + g.e.down) * tau) + ge_up * tau) /
                (1.0 + ge_up * tau);
    double rg = (g.e.down * ri + g.i.down * re) / (gi + ge_up);
    double rm = (g.m.up * re + g.p * g.m.down * rg) / g.m.down;
    const double sum = rg + re + ri + rm;
    out.r_g = rg / sum;
    out.r_e = re / sum;
    out.r_i = ri / sum;
    out.r_m = rm / sum;
    return out;
}

// Short-cycle energetics, the closed forms evaluated verbatim.
inline ShortCycleReport short_cycle_report(const EngineParams& prm,
                                           double tau) {
    ShortCycleReport out = short_cycle_populations(prm, tau);
    const EngineRates g = engine_rates(prm);
    const double dw = prm.delta_omega();
    const double pump = g.p * g.m.down;  // p gamma_m-
    const double gsum = g.i.down + g.e.down;

    out.w_in = prm.omega_f * pump * gsum / g.kappa * tau;
    out.q_e = prm.omega_e * (g.e.up * g.i.down -
                             g.gamma_i_plus_eff * g.e.down) /
                  g.kappa * tau -
              g.p * g.e.up * dw * gsum / g.kappa * tau;
    out.q_i = prm.omega_i *
                  (g.i.up * g.e.down - g.i.down * (g.e.up + pump)) / g.kappa *
                  tau -
              g.p * g.i.up * dw * gsum / g.kappa * tau;
    out.q_m = (prm.omega_i - prm.omega_f) * pump * gsum / g.kappa * tau;
    out.ergotropy = (prm.omega_i - prm.omega_e) *
                    (g.gamma_i_plus_eff * g.e.down - g.i.down * g.e.up) /
                    g.kappa * tau;
    out.e_in_branches = {out.w_in, out.w_in + out.q_m + out.q_i + out.q_e,
                         out.w_in + out.q_m, out.w_in + out.q_i,
                         out.w_in + out.q_e};
    out.e_in =
        injected_energy_engine(out.w_in, out.q_m, out.q_i, out.q_e);
    out.machine_on = out.ergotropy > 0.0;
    out.eta = (out.machine_on && out.e_in > 0.0) ? out.ergotropy / out.e_in
                                                 : quiet_nan();
    out.power = (tau > 0.0) ? out.ergotropy / tau : quiet_nan();
    return out;
}

enum class OttoBranch { pump_above_wi, pump_below_wi };

// Low-temperature limits of the short-cycle efficiency.
inline double otto_limit_efficiency(const EngineParams& p, OttoBranch branch) {
    const double denom =
        (branch == OttoBranch::pump_above_wi) ? p.omega_f : p.omega_i;
    return (p.omega_i - p.omega_e) / denom * p.gamma0_e /
           (p.gamma0_e + p.gamma0_i);
}

// Simple bisection on a sign change; f must differ in sign at lo and hi.
inline double bisect_root(const std::function<double(double)>& f, double lo,
                          double hi, double xtol) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw std::invalid_argument("bisect_root: no sign change in bracket");
    while (hi - lo > xtol) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// Temperature where the short-cycle ergotropy changes sign.
inline double shutdown_temperature_short_cycle(EngineParams prm, double t_lo,
                                               double t_hi, double xtol) {
    auto f = [&](double t) {
        prm.T = t;
        const EngineRates g = engine_rates(prm);
        return g.gamma_i_plus_eff * g.e.down - g.i.down * g.e.up;
    };
    return bisect_root(f, t_lo, t_hi, xtol);
}

// Temperature where the asymptotic cycle stops extracting work: the sign of
// r_i - r_e at the numerically marched NESS of the recharge dynamics.
inline double shutdown_temperature_asymptotic(EngineParams prm, double t_lo,
                                              double t_hi, double xtol,
                                              StepControl ctrl = {}) {
    ctrl.rel_tol = std::min(ctrl.rel_tol, 1e-9);
    ctrl.abs_tol = std::min(ctrl.abs_tol, 1e-13);
    auto f = [&](double t) {
        prm.T = t;
        const ModelSpec model = build_engine4(prm, EngineStage::recharge);
        // the population difference must be resolved well below its own
        // scale near the crossing
        const double tol = 1e-5 * engine_slow_rate(prm);
        const NessResult ness =
            find_ness(model, initial_gibbs(model), tol, ctrl);
        return (ness.ness.m(2, 2) - ness.ness.m(1, 1)).real();
    };
    return bisect_root(f, t_lo, t_hi, xtol);
}

struct AsymptoticCycleResult {
    DensityMatrix ness;
    CycleReport report;
    double tau_r = 0.0;
};

// The asymptotic cycle: recharge until the state is back at the NESS, then
// discharge. Accounting is cut at the tau threshold crossing, consistent
// with the battery convention.
inline AsymptoticCycleResult asymptotic_cycle(const EngineParams& p,
                                              DischargeMode mode,
                                              StepControl ctrl = {},
                                              double ness_tol = 0.0) {
    const ModelSpec model_r = build_engine4(p, EngineStage::recharge);
    const RotatingGenerator rg = rotating_generator(model_r);
    if (ness_tol <= 0.0) {
        ness_tol = std::min(1e-8 * rate_scale(model_r),
                            0.03 * kNessTauThreshold * engine_slow_rate(p));
        ctrl.rel_tol = std::min(ctrl.rel_tol, 1e-9);
        ctrl.abs_tol = std::min(ctrl.abs_tol, 1e-13);
    }

    AsymptoticCycleResult out;
    const NessResult first =
        find_ness(model_r, initial_gibbs(model_r), ness_tol, ctrl);
    out.ness = first.ness;

    const DensityMatrix start = discharge_ideal(out.ness);
    const NessResult again = find_ness(model_r, start, ness_tol, ctrl);
    out.tau_r = again.tau;

    const Mat at_swap = again.traj.final_state;  // at the tau crossing
    ThermoAccum acc = again.traj.final_accum;
    double tau_d = 0.0;
    Mat end;
    if (mode == DischargeMode::ideal_swap) {
        end = discharge_ideal(DensityMatrix{at_swap, model_r.level_labels}).m;
        acc.w_ext += ((end - at_swap) * rg.h_heat).trace().real();
    } else {
        PulseResult pr = discharge_pulse(p, at_swap, ctrl);
        end = pr.state;
        tau_d = pr.tau_d;
        acc.w_in += pr.accum.w_in;
        acc.w_ext += pr.accum.w_ext;
        for (size_t g = 0; g < rg.groups.size(); ++g)
            acc.q[g] += pr.accum.q[g];
    }

    CycleReport& r = out.report;
    r.w_in = acc.w_in;
    r.w_ext = acc.w_ext;
    r.q_m = acc.q[rg.group_slot("gamma_m")];
    r.q_i = acc.q[rg.group_slot("gamma_i")];
    r.q_e = acc.q[rg.group_slot("gamma_e")];
    r.e_in_branches = {r.w_in, r.w_in + r.q_m + r.q_i + r.q_e, r.w_in + r.q_m,
                       r.w_in + r.q_i, r.w_in + r.q_e};
    r.e_in = injected_energy_engine(r.w_in, r.q_m, r.q_i, r.q_e);
    r.du_cycle = ((end - start.m) * rg.h_heat).trace().real();
    r.ergotropy_at_swap = ergotropy(
        DensityMatrix{at_swap, model_r.level_labels}, model_r.h0());
    r.tau_cycle = out.tau_r + tau_d;
    r.machine_on = r.w_ext < 0.0;
    r.eta = (r.machine_on && r.e_in > 0.0) ? -r.w_ext / r.e_in : quiet_nan();
    r.power = (r.tau_cycle > 0.0) ? -r.w_ext / r.tau_cycle : quiet_nan();
    return out;
}

}  // namespace qotto
