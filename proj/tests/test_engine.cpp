#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "qotto/engine.hpp"

using namespace qotto;

namespace {

EngineParams paper_fig5(double temperature) {
    EngineParams p;  // defaults are the Fig. 5 caption values
    p.T = temperature;
    return p;
}

EngineParams desk_engine(double temperature) {
    EngineParams p = desk_engine_params();
    p.T = temperature;
    return p;
}

// weak-pump variant with p*gamma_m-/gamma_i- = 0.1, so the machine has a
// finite shutdown temperature near 4.3e-3
EngineParams desk_threshold_engine() {
    EngineParams p = desk_engine_params();
    p.Omega = 5e-6;
    return p;
}

// 0th-order post-swap state of the short cycle, including the pump
// coherence, for cross-checking the closed-form heats against the
// trace-form rate
Mat passive_short_cycle_state(const EngineParams& prm) {
    const EngineRates g = engine_rates(prm);
    const double dw = prm.delta_omega();
    const double dd = g.m.down * g.m.down + 4.0 * dw * dw;
    ShortCycleReport r = short_cycle_populations(prm, 0.0);
    Mat rho = Mat::Zero(4, 4);
    rho(0, 0) = r.r_g;
    rho(1, 1) = r.r_i;  // swap of e and i populations
    rho(2, 2) = r.r_e;
    rho(3, 3) = r.r_m;
    const Cplx r_mg =
        (4.0 * prm.Omega * dw - 2.0 * I_UNIT * prm.Omega * g.m.down) / dd *
        r.r_g;
    rho(3, 0) = r_mg;
    rho(0, 3) = std::conj(r_mg);
    return rho;
}

}  // namespace

TEST_CASE("swap unitary and ideal discharge") {
    SECTION("the swap operator is unitary") {
        const Mat u = swap_unitary(4, 1, 2);
        CHECK(max_abs(u * u.adjoint() - Mat::Identity(4, 4)) < 1e-15);
    }
    SECTION("populations of e and i are exchanged, others untouched") {
        DensityMatrix rho = DensityMatrix::diagonal(
            RVec{{0.4, 0.15, 0.35, 0.1}}, {"g", "e", "i", "m"});
        DensityMatrix swapped = discharge_ideal(rho);
        CHECK(swapped.m(0, 0).real() == Catch::Approx(0.4));
        CHECK(swapped.m(1, 1).real() == Catch::Approx(0.35));
        CHECK(swapped.m(2, 2).real() == Catch::Approx(0.15));
        CHECK(swapped.m(3, 3).real() == Catch::Approx(0.1));
    }
    SECTION("applying the swap twice restores the populations") {
        DensityMatrix rho = DensityMatrix::diagonal(
            RVec{{0.4, 0.15, 0.35, 0.1}}, {"g", "e", "i", "m"});
        DensityMatrix twice = discharge_ideal(discharge_ideal(rho));
        for (int k = 0; k < 4; ++k)
            CHECK(twice.m(k, k).real() ==
                  Catch::Approx(rho.m(k, k).real()).margin(1e-14));
    }
    SECTION("an inverted state becomes passive, ergotropy drops to zero") {
        const RVec energies{{0.0, 0.01, 1.0, 1.02}};
        Mat h0 = energies.cast<Cplx>().asDiagonal();
        DensityMatrix oss = DensityMatrix::diagonal(
            RVec{{0.55, 0.05, 0.38, 0.02}}, {"g", "e", "i", "m"});
        CHECK(ergotropy(oss, h0) > 0.0);
        CHECK(ergotropy(discharge_ideal(oss), h0) ==
              Catch::Approx(0.0).margin(1e-14));
    }
}

TEST_CASE("finite pulse discharge") {
    EngineParams p = desk_engine(0.01);

    SECTION("nothing to extract when the populations are equal") {
        p.Omega = 0.0;  // pulse in isolation
        p.T = 1e-3;     // thermal i -> m leakage would skew the balance
        DensityMatrix rho = DensityMatrix::diagonal(
            RVec{{0.6, 0.2, 0.2, 0.0}}, {"g", "e", "i", "m"});
        PulseResult pr = discharge_pulse(p, rho.m);
        CHECK(std::abs(pr.accum.w_ext) < 1e-4 * (p.omega_i - p.omega_e));
    }
    SECTION("a strong pulse approaches the ideal swap") {
        p.epsilon = 1e3 * p.gamma0_m;  // far above every rate
        DensityMatrix rho = DensityMatrix::diagonal(
            RVec{{0.3, 0.1, 0.55, 0.05}}, {"g", "e", "i", "m"});
        const ModelSpec m = build_engine4(p, EngineStage::recharge);
        PulseResult pr = discharge_pulse(p, rho.m);
        const double erg = ergotropy(rho, m.h0());
        CHECK(-pr.accum.w_ext == Catch::Approx(erg).epsilon(0.01));
        CHECK(trace_distance(pr.state, discharge_ideal(rho).m) < 1e-2);
    }
}

TEST_CASE("a single cycle with the pump off extracts nothing") {
    EngineParams p = desk_engine(0.0);
    p.Omega = 0.0;
    CycleConfig cfg;
    cfg.tau_r = 100.0;
    CycleResult res = run_cycle(cfg, p, DensityMatrix::pure(4, 0));
    CHECK(res.report.w_ext == Catch::Approx(0.0).margin(1e-12));
    CHECK_FALSE(res.report.machine_on);
    CHECK(std::isnan(res.report.eta));
}

TEST_CASE("operational steady state by plain iteration") {
    EngineParams p = desk_engine(0.01);
    CycleConfig cfg;
    const EngineRates g = engine_rates(p);
    cfg.tau_r = 3.0 / g.kappa;  // long cycle: iteration contracts quickly

    OssResult oss = find_oss(cfg, p);
    CHECK_FALSE(oss.used_direct_solve);
    CHECK(oss.report.machine_on);
    CHECK(oss.report.ergotropy_at_swap > 0.0);
    CHECK(oss.oss.m(2, 2).real() > oss.oss.m(1, 1).real());  // inverted e,i
    CHECK(std::abs(oss.report.du_cycle) <= 1e-6 * oss.report.e_in);
    CHECK(oss.report.eta > 0.0);
    CHECK(oss.report.eta < 1.0);
}

TEST_CASE("operational steady state by the direct fixed-point solve") {
    // low temperature keeps the elimination hierarchy gamma_e,i- >> gamma_m+
    // intact, where the short-cycle forms are meaningful
    EngineParams p = desk_engine(1e-3);
    const EngineRates g = engine_rates(p);
    CycleConfig cfg;
    cfg.tau_r = 1e-3 / g.kappa;  // short cycle: iteration cannot converge
    cfg.plain_iteration_budget = 8;

    OssResult oss = find_oss(cfg, p);
    CHECK(oss.used_direct_solve);
    CHECK(std::abs(oss.report.du_cycle) <= 1e-6 * oss.report.e_in);

    // populations agree with the short-cycle closed forms
    ShortCycleReport sc = short_cycle_populations(p, cfg.tau_r);
    CHECK(oss.oss.m(0, 0).real() == Catch::Approx(sc.r_g).margin(2e-3));
    CHECK(oss.oss.m(1, 1).real() == Catch::Approx(sc.r_e).margin(2e-3));
    CHECK(oss.oss.m(2, 2).real() == Catch::Approx(sc.r_i).margin(2e-3));
    CHECK(oss.oss.m(3, 3).real() == Catch::Approx(sc.r_m).margin(2e-3));
}

TEST_CASE("asymptotic cycle approaches the NESS") {
    EngineParams p = desk_engine(0.01);
    AsymptoticCycleResult res = asymptotic_cycle(p, DischargeMode::ideal_swap);
    CHECK(res.report.machine_on);
    CHECK(res.report.ergotropy_at_swap ==
          Catch::Approx(ergotropy(res.ness,
                                  build_engine4(p, EngineStage::recharge).h0()))
              .epsilon(1e-2));
    CHECK(std::abs(res.report.du_cycle) < 1e-3);

    // the same recharge duration as an explicit cycle reproduces the state
    CycleConfig cfg;
    cfg.tau_r = res.tau_r;
    OssResult oss = find_oss(cfg, p);
    CHECK(max_abs(oss.oss.m - res.ness.m) < 5e-4);
}

TEST_CASE("short cycle populations") {
    SECTION("frozen values at the published parameters, T = 0") {
        EngineParams p = paper_fig5(0.0);
        ShortCycleReport r = short_cycle_populations(p, 0.0);
        CHECK(r.kappa == Catch::Approx(8.2e-8).epsilon(1e-12));
        // Gamma_i+/kappa, up to the r_m renormalization
        CHECK(r.r_i == Catch::Approx(0.4878).margin(5e-4));
        CHECK(r.r_e == Catch::Approx(r.r_i).epsilon(1e-12));
        CHECK(r.r_g + r.r_e + r.r_i + r.r_m == Catch::Approx(1.0).margin(1e-10));
    }
    SECTION("first-order splitting of r_e and r_i") {
        EngineParams p = paper_fig5(0.01);
        ShortCycleReport r = short_cycle_populations(p, 1e5);
        CHECK(r.r_i > r.r_e);
        for (double v : {r.r_g, r.r_e, r.r_i, r.r_m}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
    SECTION("pump off at T = 0 collapses to the ground state") {
        EngineParams p = paper_fig5(0.0);
        p.Omega = 0.0;
        ShortCycleReport r = short_cycle_populations(p, 10.0);
        CHECK(r.r_g == 1.0);
        CHECK(r.r_i == 0.0);
        CHECK(r.r_e == 0.0);
    }
}

TEST_CASE("short cycle closed forms") {
    SECTION("frozen values at the published parameters, T = 0, resonance") {
        EngineParams p = paper_fig5(0.0);
        const double tau = 1.0;
        ShortCycleReport r = short_cycle_report(p, tau);
        CHECK(r.w_in == Catch::Approx(9.95122e-10).epsilon(1e-4));
        CHECK(r.ergotropy == Catch::Approx(4.82927e-10).epsilon(1e-4));
        CHECK(r.q_m < 0.0);
        CHECK(r.q_i < 0.0);
        CHECK(r.q_e < 0.0);
        CHECK(r.e_in == Catch::Approx(r.w_in).epsilon(1e-12));
        CHECK(r.eta == Catch::Approx(0.485294).epsilon(1e-4));
    }
    SECTION("efficiency and power are independent of the cycle duration") {
        EngineParams p = paper_fig5(0.01);
        ShortCycleReport a = short_cycle_report(p, 1.0);
        ShortCycleReport b = short_cycle_report(p, 173.0);
        CHECK(a.eta == Catch::Approx(b.eta).epsilon(1e-12));
        CHECK(a.power == Catch::Approx(b.power).epsilon(1e-12));
        CHECK(b.w_in == Catch::Approx(173.0 * a.w_in).epsilon(1e-12));
    }
    SECTION("closed-form heats agree with the trace-form rate") {
        // detuned, low T: every term of the formulas is exercised inside
        // the elimination hierarchy's domain of validity
        EngineParams p = desk_engine(2e-3);
        p.omega_f = p.omega_m - 2e-3;
        const double tau = 10.0;
        ShortCycleReport r = short_cycle_report(p, tau);
        const ModelSpec m = build_engine4(p, EngineStage::recharge);
        const DensityMatrix rho{passive_short_cycle_state(p),
                                m.level_labels};
        for (auto [group, value] :
             {std::pair{std::string("gamma_e"), r.q_e},
              std::pair{std::string("gamma_i"), r.q_i},
              std::pair{std::string("gamma_m"), r.q_m}}) {
            const double trace_form =
                channel_heat_rate(m, group, rho) * tau;
            INFO("group " << group << ": closed form " << value
                          << " vs trace form " << trace_form);
            CHECK(value == Catch::Approx(trace_form).epsilon(0.01));
        }
    }
    SECTION("ergotropy positivity matches the rate-ratio criterion") {
        EngineParams p = desk_threshold_engine();
        for (double t = 1e-3; t < 1.2e-2; t += 1e-3) {
            p.T = t;
            const EngineRates g = engine_rates(p);
            const bool criterion =
                g.gamma_i_plus_eff / g.i.down > g.e.up / g.e.down;
            ShortCycleReport r = short_cycle_report(p, 1.0);
            CHECK((r.ergotropy > 0.0) == criterion);
        }
    }
}

TEST_CASE("otto limit efficiencies") {
    SECTION("published parameters reproduce the resonance value") {
        EngineParams p = paper_fig5(0.0);
        CHECK(otto_limit_efficiency(p, OttoBranch::pump_above_wi) ==
              Catch::Approx(0.485294).epsilon(1e-4));
    }
    SECTION("strong gamma_e and small gap recover the Otto efficiency") {
        EngineParams p = paper_fig5(0.0);
        p.gamma0_e = 1e-5;  // gamma0_e >> gamma0_i
        p.omega_m = 1.0 + 1e-9;
        p.omega_f = p.omega_m;
        const double eta_otto = (p.omega_i - p.omega_e) / p.omega_i;
        CHECK(otto_limit_efficiency(p, OttoBranch::pump_above_wi) ==
              Catch::Approx(eta_otto).epsilon(1e-3));
    }
    SECTION("the extraction gap closes as omega_e approaches omega_i") {
        EngineParams p = paper_fig5(0.0);
        p.omega_e = 0.999999;
        CHECK(otto_limit_efficiency(p, OttoBranch::pump_below_wi) ==
              Catch::Approx(0.0).margin(1e-5));
    }
    SECTION("low-temperature short cycle approaches the limit form") {
        EngineParams p = paper_fig5(1e-3);
        ShortCycleReport r = short_cycle_report(p, 1.0);
        CHECK(r.eta == Catch::Approx(otto_limit_efficiency(
                           p, OttoBranch::pump_above_wi))
                           .epsilon(2e-2));
    }
}

TEST_CASE("short-cycle efficiency is even in the detuning and peaked") {
    EngineParams p = paper_fig5(0.05);
    auto eta_at = [&](double dw) {
        EngineParams q = p;
        q.omega_f = q.omega_m + dw;
        return short_cycle_report(q, 1.0).eta;
    };
    const double at0 = eta_at(0.0);
    for (double dw : {2e-5, 5e-5, 1e-4}) {
        const double plus = eta_at(dw), minus = eta_at(-dw);
        CHECK(std::abs(plus - minus) <= 0.02 * at0);
        CHECK(at0 >= plus);
        CHECK(at0 >= minus);
    }
}

TEST_CASE("shutdown temperatures") {
    const EngineParams p = desk_threshold_engine();
    const double t_sc =
        shutdown_temperature_short_cycle(p, 1e-3, 1e-2, 1e-5);
    // analytic root of Gamma_i+ gamma_e- = gamma_i- gamma_e+
    const double t_exact =
        shutdown_temperature_short_cycle(p, 1e-3, 1e-2, 1e-9);
    CHECK(std::abs(t_sc - t_exact) <= 1e-3);
    CHECK(t_sc == Catch::Approx(4.3e-3).margin(5e-4));

    EngineParams off = p;
    off.T = t_sc + 2e-3;
    ShortCycleReport r = short_cycle_report(off, 1.0);
    CHECK_FALSE(r.machine_on);
    CHECK(std::isnan(r.eta));
}

TEST_CASE("output power decays from the short cycle to the asymptotic one") {
    EngineParams p = desk_engine(1e-3);
    const EngineRates g = engine_rates(p);
    CycleConfig cfg;
    cfg.plain_iteration_budget = 8;
    double prev = std::numeric_limits<double>::infinity();
    for (double ktau : {1e-2, 1e-1, 1.0, 10.0}) {
        cfg.tau_r = ktau / g.kappa;
        OssResult oss = find_oss(cfg, p);
        CHECK(oss.report.power < prev);
        prev = oss.report.power;
    }
    // and the short-cycle power matches the closed form at small tau
    cfg.tau_r = 1e-2 / g.kappa;
    OssResult oss = find_oss(cfg, p);
    ShortCycleReport sc = short_cycle_report(p, cfg.tau_r);
    CHECK(oss.report.power == Catch::Approx(sc.power).epsilon(0.05));
}
