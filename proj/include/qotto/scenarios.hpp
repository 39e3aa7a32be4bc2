// Scenario registry: each scenario reproduces one of the study's figures
// as a deterministic CSV (one row per grid point or sample time), with a
// metadata sidecar and an echo of the fully resolved configuration.
#pragma once

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "qotto/config.hpp"
#include "qotto/engine.hpp"
#include "qotto/models.hpp"
#include "qotto/thermo.hpp"

namespace qotto {

// numeric failure during a sweep; maps to exit code 2
struct SweepError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// shortest round-trip decimal; NaN becomes an empty CSV cell
inline std::string format_number(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

struct ScenarioConfig {
    std::string scenario;
    std::string preset = "desk";  // "paper" or "desk"
    std::string output_path;      // default "<scenario>.csv"
    int jobs = 0;                 // 0: hardware concurrency
    int series_points = 400;      // cap on time-series rows
    StepControl ctrl;
    double ness_tol = 0.0;
    ConfigTable table;

    BatteryParams battery;  // resolved preset + overrides
    EngineParams engine;
};

struct ScenarioInfo {
    std::string name;
    std::string description;
};

inline const std::vector<ScenarioInfo>& scenario_infos() {
    static const std::vector<ScenarioInfo> infos = {
        {"battery-charge",
         "time-resolved charging of the three-level battery vs the "
         "effective two-level model"},
        {"battery-detuning-sweep",
         "charging efficiency and input power across pump detunings and "
         "temperatures"},
        {"battery-pump-sweep",
         "steady-state charge vs pumping rate, against the Rabi-flip bound"},
        {"battery-stored-vs-eff",
         "stored free energy versus efficiency, parameterized by charging "
         "duration"},
        {"engine-short-cycle-sweep",
         "short-cycle engine efficiency and power across detunings and "
         "temperatures (closed forms)"},
        {"engine-threshold",
         "short-cycle vs asymptotic-cycle efficiency over temperature, with "
         "the shutdown boundary located by bisection"},
        {"engine-asymptotic",
         "full asymptotic-cycle reports over a temperature grid"},
    };
    return infos;
}

namespace run_detail {

using Row = std::vector<double>;
using Meta = std::vector<std::pair<std::string, std::string>>;

struct Prepared {
    std::vector<std::string> columns;
    Meta sweep_echo;  // resolved sweep section for the config echo
    std::function<void(std::vector<Row>&, Meta&)> execute;
};

inline std::string meta_num(double v) { return format_number(v); }

// ordered parallel map over grid points; on failure the completed prefix
// of rows (in grid order) is preserved and a SweepError identifies the
// first failing point
template <class F>
void parallel_grid(size_t n, int jobs, std::vector<Row>& rows, F&& fn,
                   const std::function<std::string(size_t)>& describe) {
    if (jobs <= 0) {
        jobs = static_cast<int>(std::thread::hardware_concurrency());
        if (jobs <= 0) jobs = 1;
    }
    jobs = std::min<size_t>(jobs, n);
    std::vector<std::optional<Row>> slots(n);
    std::vector<std::string> errors(n);
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const size_t k = next.fetch_add(1);
            if (k >= n) return;
            try {
                slots[k] = fn(k);
            } catch (const std::exception& e) {
                errors[k] = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < jobs; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    for (size_t k = 0; k < n; ++k) {
        if (!errors[k].empty()) {
            throw SweepError("grid point " + std::to_string(k) + " (" +
                             describe(k) + "): " + errors[k]);
        }
        rows.push_back(std::move(*slots[k]));
    }
}

inline std::vector<double> linear_grid(double lo, double hi, int count) {
    if (count < 1) throw ConfigError("sweep: grid count must be >= 1");
    if (count == 1) return {lo};
    if (!(hi > lo)) throw ConfigError("sweep: grid bounds must be ascending");
    std::vector<double> g(count);
    for (int k = 0; k < count; ++k)
        g[k] = lo + (hi - lo) * double(k) / double(count - 1);
    return g;
}

inline std::vector<double> log_grid(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi > lo))
        throw ConfigError("sweep: log grid needs 0 < min < max");
    if (count < 2) throw ConfigError("sweep: grid count must be >= 2");
    std::vector<double> g(count);
    const double l0 = std::log(lo), l1 = std::log(hi);
    for (int k = 0; k < count; ++k)
        g[k] = std::exp(l0 + (l1 - l0) * double(k) / double(count - 1));
    return g;
}

inline void require_monotone(const std::vector<double>& g,
                             const std::string& key) {
    if (g.empty()) throw ConfigError("sweep." + key + ": grid is empty");
    for (size_t k = 1; k < g.size(); ++k)
        if (!(g[k] > g[k - 1]))
            throw ConfigError("sweep." + key +
                              ": grid must be strictly ascending");
}

inline std::vector<double> grid_from_table(const ConfigTable& t,
                                           const std::string& list_key,
                                           const std::string& stem,
                                           std::vector<double> fallback,
                                           bool logarithmic = false) {
    std::vector<double> g = t.numbers("sweep." + list_key);
    if (g.empty()) {
        const auto lo = t.maybe_number("sweep." + stem + "_min");
        const auto hi = t.maybe_number("sweep." + stem + "_max");
        const auto n = t.maybe_number("sweep." + stem + "_count");
        if (lo && hi && n)
            g = logarithmic ? log_grid(*lo, *hi, int(*n))
                            : linear_grid(*lo, *hi, int(*n));
        else
            g = std::move(fallback);
    }
    require_monotone(g, list_key);
    return g;
}

inline std::string list_echo(const std::vector<double>& g) {
    std::string s = "[";
    for (size_t k = 0; k < g.size(); ++k)
        s += (k ? ", " : "") + format_number(g[k]);
    return s + "]";
}

// ---- scenario parameter presets -----------------------------------------

inline void apply_preset(ScenarioConfig& cfg) {
    const bool desk = cfg.preset == "desk";
    if (!desk && cfg.preset != "paper")
        throw ConfigError("preset must be \"paper\" or \"desk\"");

    BatteryParams b = desk ? desk_battery_params() : paper_battery_params();
    EngineParams e = desk ? desk_engine_params() : paper_engine_params();

    if (cfg.scenario == "battery-pump-sweep") {
        // high-temperature regime with a well-separated upper level
        b.omega_m = 5.0;
        b.omega_f = 5.0;
        b.T = 0.5;
    } else if (cfg.scenario == "engine-threshold" ||
               cfg.scenario == "engine-asymptotic") {
        // weak pump so the machine has a finite shutdown temperature
        if (desk) {
            e.Omega = 5e-6;
        } else {
            e.Omega = 1e-8;
            e.gamma0_i = 1e-7;
            e.gamma0_e = 1e-7;
            e.epsilon = 2e-4;
        }
        e.T = 1e-3;
    } else if (cfg.scenario.rfind("engine", 0) == 0) {
        e.T = 0.01;
    }
    cfg.battery = b;
    cfg.engine = e;
}

inline void apply_param_overrides(ScenarioConfig& cfg) {
    const ConfigTable& t = cfg.table;
    const bool is_engine = cfg.scenario.rfind("engine", 0) == 0;
    auto set = [&](const char* key, double& slot) {
        if (auto v = t.maybe_number(std::string("params.") + key)) slot = *v;
    };
    BatteryParams& b = is_engine ? cfg.engine : cfg.battery;
    set("omega_m", b.omega_m);
    set("omega_f", b.omega_f);
    set("gamma0_m", b.gamma0_m);
    set("gamma0_i", b.gamma0_i);
    set("Omega", b.Omega);
    set("T", b.T);
    if (is_engine) {
        set("omega_e", cfg.engine.omega_e);
        set("gamma0_e", cfg.engine.gamma0_e);
        set("epsilon", cfg.engine.epsilon);
    }
    try {
        if (is_engine)
            cfg.engine.validate();
        else
            cfg.battery.validate();
    } catch (const std::invalid_argument& err) {
        throw ConfigError(std::string("params: ") + err.what());
    }
}

inline Meta params_echo(const ScenarioConfig& cfg) {
    Meta m;
    const bool is_engine = cfg.scenario.rfind("engine", 0) == 0;
    const BatteryParams& b = is_engine ? cfg.engine : cfg.battery;
    m.emplace_back("omega_m", meta_num(b.omega_m));
    m.emplace_back("omega_f", meta_num(b.omega_f));
    m.emplace_back("gamma0_m", meta_num(b.gamma0_m));
    m.emplace_back("gamma0_i", meta_num(b.gamma0_i));
    m.emplace_back("Omega", meta_num(b.Omega));
    m.emplace_back("T", meta_num(b.T));
    if (is_engine) {
        m.emplace_back("omega_e", meta_num(cfg.engine.omega_e));
        m.emplace_back("gamma0_e", meta_num(cfg.engine.gamma0_e));
        m.emplace_back("epsilon", meta_num(cfg.engine.epsilon));
    }
    return m;
}

// ---- individual scenarios ------------------------------------------------

inline Prepared prepare_battery_charge(ScenarioConfig& cfg) {
    Prepared out;
    out.columns = {"t",         "rho_gg",    "rho_ii",  "rho_mm",
                   "rho_ii_eff", "u",         "s",       "f",
                   "w_in",      "q_gamma_m", "q_gamma_i", "ergotropy",
                   "eta_pump",  "p_pump"};
    BatteryParams p = cfg.battery;
    const int points = cfg.series_points;
    out.execute = [&cfg, p, points](std::vector<Row>& rows, Meta& meta) {
        ChargeResult res =
            charge_battery_to_ness(p, cfg.ctrl, cfg.ness_tol);
        const EffectiveQubitModel eff = build_effective2(p);
        const ThermoLedger& led = res.ledger;
        const Trajectory& traj = res.ness.traj;
        const double f0 = led.f.front();
        const size_t n = led.times.size();
        const size_t stride = std::max<size_t>(1, n / points);
        const double rho_ii_0 = traj.states.front()(1, 1).real();
        for (size_t k = 0; k < n; k += (k + stride < n ? stride : 1)) {
            const double t = led.times[k];
            const double e_in =
                injected_energy(led.w_in[k], led.q[k][0], led.q[k][1]);
            const double df = led.f[k] - f0;
            rows.push_back(
                {t, traj.states[k](0, 0).real(), traj.states[k](1, 1).real(),
                 traj.states[k](2, 2).real(),
                 eff.population_i(t, rho_ii_0), led.u[k], led.s[k], led.f[k],
                 led.w_in[k], led.q[k][led.group_slot("gamma_m")],
                 led.q[k][led.group_slot("gamma_i")],
                 led.ergotropy_series[k],
                 e_in > 0.0 ? df / e_in : quiet_nan(),
                 t > 0.0 ? df / t : quiet_nan()});
            if (k + 1 == n) break;
        }
        meta.emplace_back("tau", meta_num(res.ness.tau));
        meta.emplace_back("eta_pump", meta_num(res.report.eta));
        meta.emplace_back("p_pump", meta_num(res.report.power));
        meta.emplace_back("delta_f", meta_num(res.report.delta_f));
        meta.emplace_back("e_in", meta_num(res.report.e_in));
        meta.emplace_back("w_in", meta_num(res.report.w_in));
        meta.emplace_back("q_gamma_m", meta_num(res.report.q_m));
        meta.emplace_back("q_gamma_i", meta_num(res.report.q_i));
        meta.emplace_back("adiabatic_validity", meta_num(res.validity));
        meta.emplace_back("pumping_rate", meta_num(eff.p));
        meta.emplace_back("Gamma_i_plus", meta_num(eff.gamma_i_plus_eff));
        meta.emplace_back(
            "T_hot_effective",
            meta_num(effective_hot_temperature(eff, p.omega_i)));
        meta.emplace_back("steps_accepted",
                          std::to_string(traj.stats.accepted));
    };
    return out;
}

inline Prepared prepare_battery_detuning_sweep(ScenarioConfig& cfg) {
    Prepared out;
    const std::vector<double> temps = grid_from_table(
        cfg.table, "temperatures", "temperature", {0.01, 0.05, 0.1});
    const double span = 2.0 * cfg.battery.gamma0_m;
    std::vector<double> dws =
        grid_from_table(cfg.table, "detunings", "detuning",
                        linear_grid(-1.5 * span, span, 11));
    out.columns = {"T",        "delta_omega", "omega_f",   "eta_pump",
                   "delta_f",  "e_in",        "w_in",      "q_gamma_m",
                   "q_gamma_i", "p_pump",     "tau",       "rho_ii_ness",
                   "pumping_rate", "validity", "e_in_w",   "e_in_wqm",
                   "e_in_wqi", "e_in_wq"};
    out.sweep_echo.emplace_back("temperatures", list_echo(temps));
    out.sweep_echo.emplace_back("detunings", list_echo(dws));

    BatteryParams base = cfg.battery;
    const int jobs = cfg.jobs;
    const StepControl ctrl = cfg.ctrl;
    const double ness_tol = cfg.ness_tol;
    out.execute = [base, temps, dws, jobs, ctrl,
                   ness_tol](std::vector<Row>& rows, Meta&) {
        const size_t n = temps.size() * dws.size();
        auto point = [&](size_t k) {
            BatteryParams p = base;
            p.T = temps[k / dws.size()];
            p.omega_f = p.omega_m + dws[k % dws.size()];
            return p;
        };
        parallel_grid(
            n, jobs, rows,
            [&](size_t k) -> Row {
                const BatteryParams p = point(k);
                ChargeResult res =
                    charge_battery_to_ness(p, ctrl, ness_tol);
                const EffectiveQubitModel eff = build_effective2(p);
                const auto& r = res.report;
                return {p.T,
                        p.delta_omega(),
                        p.omega_f,
                        r.eta,
                        r.delta_f,
                        r.e_in,
                        r.w_in,
                        r.q_m,
                        r.q_i,
                        r.power,
                        r.tau,
                        res.ness.ness.m(1, 1).real(),
                        eff.p,
                        res.validity,
                        r.e_in_branches[0],
                        r.e_in_branches[1],
                        r.e_in_branches[2],
                        r.e_in_branches[3]};
            },
            [&](size_t k) {
                const BatteryParams p = point(k);
                return "T = " + format_number(p.T) +
                       ", delta_omega = " + format_number(p.delta_omega());
            });
    };
    return out;
}

inline Prepared prepare_battery_pump_sweep(ScenarioConfig& cfg) {
    Prepared out;
    const bool desk = cfg.preset == "desk";
    const std::vector<double> fallback =
        log_grid(desk ? 1e-7 : 1e-9, desk ? 1e-4 : 1e-6, 7);
    std::vector<double> omegas = grid_from_table(
        cfg.table, "omega_drive", "omega_drive", fallback, true);
    out.columns = {"Omega",   "pumping_rate", "p_bar",    "p_i_ness",
                   "p_i_rabi", "eta_pump",    "delta_f",  "tau",
                   "validity"};
    out.sweep_echo.emplace_back("omega_drive", list_echo(omegas));

    BatteryParams base = cfg.battery;
    const int jobs = cfg.jobs;
    StepControl ctrl = cfg.ctrl;
    // weakly pumped points relax at ~gamma_i-; ride the stability boundary
    if (ctrl.max_step <= 0.0) ctrl.max_step = 1e30;
    const double ness_tol = cfg.ness_tol;
    out.execute = [base, omegas, jobs, ctrl,
                   ness_tol](std::vector<Row>& rows, Meta& meta) {
        BatteryParams pmax = base;
        pmax.Omega = omegas.back();
        const EffectiveQubitModel effmax = build_effective2(pmax);
        const double p_max = effmax.p;
        const ModelSpec m0 = build_battery3(base);
        const double p_i_rabi =
            initial_gibbs(m0).m(0, 0).real();  // Rabi flip of the Gibbs state
        meta.emplace_back("p_max", meta_num(p_max));
        meta.emplace_back("p_i_rabi", meta_num(p_i_rabi));

        parallel_grid(
            omegas.size(), jobs, rows,
            [&](size_t k) -> Row {
                BatteryParams p = base;
                p.Omega = omegas[k];
                const EffectiveQubitModel eff = build_effective2(p);
                const double tol = (ness_tol > 0.0)
                                       ? ness_tol
                                       : 1e-4 * battery_slow_rate(p);
                ChargeResult res = charge_battery_to_ness(p, ctrl, tol);
                return {p.Omega,
                        eff.p,
                        eff.p / p_max,
                        res.ness.ness.m(1, 1).real(),
                        p_i_rabi,
                        res.report.eta,
                        res.report.delta_f,
                        res.ness.tau,
                        res.validity};
            },
            [&](size_t k) { return "Omega = " + format_number(omegas[k]); });
    };
    return out;
}

inline Prepared prepare_battery_stored_vs_eff(ScenarioConfig& cfg) {
    Prepared out;
    const std::vector<double> temps = grid_from_table(
        cfg.table, "temperatures", "temperature", {0.01, 0.1});
    out.columns = {"T", "t", "delta_f", "eta_pump", "e_in"};
    out.sweep_echo.emplace_back("temperatures", list_echo(temps));

    BatteryParams base = cfg.battery;
    const int points = cfg.series_points;
    const StepControl ctrl = cfg.ctrl;
    const double ness_tol = cfg.ness_tol;
    out.execute = [base, temps, points, ctrl,
                   ness_tol](std::vector<Row>& rows, Meta&) {
        for (double t : temps) {
            BatteryParams p = base;
            p.T = t;
            ChargeResult res = charge_battery_to_ness(p, ctrl, ness_tol);
            const ThermoLedger& led = res.ledger;
            const double f0 = led.f.front();
            const size_t n = led.times.size();
            const size_t stride = std::max<size_t>(1, n / points);
            for (size_t k = 0; k < n; k += (k + stride < n ? stride : 1)) {
                const double e_in =
                    injected_energy(led.w_in[k], led.q[k][0], led.q[k][1]);
                const double df = led.f[k] - f0;
                rows.push_back({t, led.times[k], df,
                                e_in > 0.0 ? df / e_in : quiet_nan(), e_in});
                if (k + 1 == n) break;
            }
        }
    };
    return out;
}

inline Prepared prepare_engine_short_cycle_sweep(ScenarioConfig& cfg) {
    Prepared out;
    const std::vector<double> temps = grid_from_table(
        cfg.table, "temperatures", "temperature", {0.01, 0.05, 0.1});
    const double span = 2.0 * cfg.engine.gamma0_m;
    std::vector<double> dws = grid_from_table(
        cfg.table, "detunings", "detuning", linear_grid(-span, span, 41));
    const double tau = cfg.table.number("sweep.tau", 1.0);
    out.columns = {"T",      "delta_omega", "omega_f",       "eta_sc",
                   "power_sc", "w_in",      "q_gamma_e",     "q_gamma_i",
                   "q_gamma_m", "ergotropy", "e_in",          "r_g",
                   "r_e",    "r_i",         "r_m",           "machine_on"};
    out.sweep_echo.emplace_back("temperatures", list_echo(temps));
    out.sweep_echo.emplace_back("detunings", list_echo(dws));
    out.sweep_echo.emplace_back("tau", meta_num(tau));

    EngineParams base = cfg.engine;
    out.execute = [base, temps, dws, tau](std::vector<Row>& rows, Meta&) {
        for (double t : temps) {
            for (double dw : dws) {
                EngineParams p = base;
                p.T = t;
                p.omega_f = p.omega_m + dw;
                ShortCycleReport r = short_cycle_report(p, tau);
                rows.push_back({t, dw, p.omega_f, r.eta, r.power, r.w_in,
                                r.q_e, r.q_i, r.q_m, r.ergotropy, r.e_in,
                                r.r_g, r.r_e, r.r_i, r.r_m,
                                r.machine_on ? 1.0 : 0.0});
            }
        }
    };
    return out;
}

inline Prepared prepare_engine_threshold(ScenarioConfig& cfg) {
    Prepared out;
    const bool desk = cfg.preset == "desk";
    const std::vector<double> temps = grid_from_table(
        cfg.table, "temperatures", "temperature",
        desk ? linear_grid(1e-3, 8e-3, 8) : linear_grid(2e-4, 2e-3, 8));
    std::vector<double> dws = cfg.table.numbers("sweep.detunings");
    if (dws.empty()) dws = {desk ? -5e-3 : -5e-5, 0.0};
    const bool locate = cfg.table.boolean("sweep.locate_threshold", true);
    out.columns = {"delta_omega", "T",       "eta_sc", "eta_asymptotic",
                   "power_sc",    "power_asymptotic", "ergotropy_sc",
                   "machine_on_sc", "machine_on_asymptotic"};
    out.sweep_echo.emplace_back("temperatures", list_echo(temps));
    out.sweep_echo.emplace_back("detunings", list_echo(dws));
    out.sweep_echo.emplace_back("locate_threshold", locate ? "true" : "false");

    EngineParams base = cfg.engine;
    const int jobs = cfg.jobs;
    StepControl ctrl = cfg.ctrl;
    if (ctrl.max_step <= 0.0) ctrl.max_step = 1e30;
    out.execute = [base, temps, dws, locate, jobs,
                   ctrl](std::vector<Row>& rows, Meta& meta) {
        const size_t n = temps.size() * dws.size();
        auto point = [&](size_t k) {
            EngineParams p = base;
            p.omega_f = p.omega_m + dws[k / temps.size()];
            p.T = temps[k % temps.size()];
            return p;
        };
        parallel_grid(
            n, jobs, rows,
            [&](size_t k) -> Row {
                const EngineParams p = point(k);
                ShortCycleReport sc = short_cycle_report(p, 1.0);
                AsymptoticCycleResult ac =
                    asymptotic_cycle(p, DischargeMode::ideal_swap, ctrl);
                return {p.delta_omega(), p.T, sc.eta, ac.report.eta,
                        sc.power, ac.report.power, sc.ergotropy,
                        sc.machine_on ? 1.0 : 0.0,
                        ac.report.machine_on ? 1.0 : 0.0};
            },
            [&](size_t k) {
                const EngineParams p = point(k);
                return "delta_omega = " + format_number(p.delta_omega()) +
                       ", T = " + format_number(p.T);
            });
        if (locate) {
            for (double dw : dws) {
                EngineParams p = base;
                p.omega_f = p.omega_m + dw;
                const double lo = temps.front(), hi = temps.back();
                const std::string tag =
                    "shutdown_dw_" + format_number(dw) + "_";
                try {
                    const double t_sc =
                        shutdown_temperature_short_cycle(p, lo, hi, 1e-5);
                    const double t_asym = shutdown_temperature_asymptotic(
                        p, lo, hi, 2e-4, ctrl);
                    meta.emplace_back(tag + "short_cycle", meta_num(t_sc));
                    meta.emplace_back(tag + "asymptotic", meta_num(t_asym));
                } catch (const std::invalid_argument&) {
                    meta.emplace_back(tag + "short_cycle",
                                      "\"not bracketed\"");
                }
            }
        }
    };
    return out;
}

inline Prepared prepare_engine_asymptotic(ScenarioConfig& cfg) {
    Prepared out;
    const bool desk = cfg.preset == "desk";
    const std::vector<double> temps = grid_from_table(
        cfg.table, "temperatures", "temperature",
        desk ? linear_grid(1e-3, 4e-3, 4) : linear_grid(2e-4, 1e-3, 4));
    const double dw = cfg.table.number("sweep.detuning", 0.0);
    out.columns = {"T",    "tau_r", "eta",  "power",      "w_in",
                   "w_ext", "q_gamma_m", "q_gamma_i", "q_gamma_e",
                   "e_in", "ergotropy_at_swap", "du_cycle", "machine_on"};
    out.sweep_echo.emplace_back("temperatures", list_echo(temps));
    out.sweep_echo.emplace_back("detuning", meta_num(dw));

    EngineParams base = cfg.engine;
    const int jobs = cfg.jobs;
    StepControl ctrl = cfg.ctrl;
    if (ctrl.max_step <= 0.0) ctrl.max_step = 1e30;
    out.execute = [base, temps, dw, jobs, ctrl](std::vector<Row>& rows,
                                                Meta&) {
        parallel_grid(
            temps.size(), jobs, rows,
            [&](size_t k) -> Row {
                EngineParams p = base;
                p.T = temps[k];
                p.omega_f = p.omega_m + dw;
                AsymptoticCycleResult ac =
                    asymptotic_cycle(p, DischargeMode::ideal_swap, ctrl);
                const CycleReport& r = ac.report;
                return {p.T, ac.tau_r, r.eta, r.power, r.w_in, r.w_ext,
                        r.q_m, r.q_i, r.q_e, r.e_in, r.ergotropy_at_swap,
                        r.du_cycle, r.machine_on ? 1.0 : 0.0};
            },
            [&](size_t k) { return "T = " + format_number(temps[k]); });
    };
    return out;
}

inline Prepared prepare_scenario(ScenarioConfig& cfg) {
    apply_preset(cfg);
    apply_param_overrides(cfg);
    if (cfg.scenario == "battery-charge") return prepare_battery_charge(cfg);
    if (cfg.scenario == "battery-detuning-sweep")
        return prepare_battery_detuning_sweep(cfg);
    if (cfg.scenario == "battery-pump-sweep")
        return prepare_battery_pump_sweep(cfg);
    if (cfg.scenario == "battery-stored-vs-eff")
        return prepare_battery_stored_vs_eff(cfg);
    if (cfg.scenario == "engine-short-cycle-sweep")
        return prepare_engine_short_cycle_sweep(cfg);
    if (cfg.scenario == "engine-threshold")
        return prepare_engine_threshold(cfg);
    if (cfg.scenario == "engine-asymptotic")
        return prepare_engine_asymptotic(cfg);
    throw ConfigError("unknown scenario: \"" + cfg.scenario + "\"");
}

}  // namespace run_detail

inline ScenarioConfig load_config(const std::string& path) {
    ScenarioConfig cfg;
    cfg.table = ConfigTable::parse_file(path);
    const ConfigTable& t = cfg.table;
    cfg.scenario = t.str("scenario", "");
    if (cfg.scenario.empty())
        throw ConfigError(path + ": missing required key: scenario");
    cfg.preset = t.str("preset", "desk");
    cfg.output_path = t.str("output.path", cfg.scenario + ".csv");
    cfg.series_points = static_cast<int>(t.number("output.points", 400));
    if (cfg.series_points < 2)
        throw ConfigError("output.points: must be >= 2");
    cfg.jobs = static_cast<int>(t.number("run.jobs", 0));
    cfg.ctrl.rel_tol = t.number("run.rel_tol", cfg.ctrl.rel_tol);
    cfg.ctrl.abs_tol = t.number("run.abs_tol", cfg.ctrl.abs_tol);
    cfg.ctrl.max_step = t.number("run.max_step", 0.0);
    cfg.ness_tol = t.number("run.ness_tol", 0.0);
    if (cfg.ctrl.rel_tol <= 0.0 || cfg.ctrl.abs_tol <= 0.0)
        throw ConfigError("run.rel_tol/abs_tol: must be positive");
    return cfg;
}

// parse + prepare + unknown-key check, without running anything
inline void validate_config(const std::string& path) {
    ScenarioConfig cfg = load_config(path);
    (void)run_detail::prepare_scenario(cfg);
    cfg.table.require_all_consumed();
}

inline void write_meta(const std::string& path,
                       const run_detail::Meta& items) {
    std::ofstream out(path);
    for (const auto& [k, v] : items) out << k << " = " << v << "\n";
}

// Executes the scenario and writes <out>.csv, <out>.meta.toml and
// <out>.resolved.toml. Throws ConfigError for validation problems and
// SweepError (or other std exceptions) for numeric failures; on a sweep
// failure the rows completed before the failing grid point are flushed.
inline void run_scenario(ScenarioConfig cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    using namespace run_detail;

    Prepared plan = prepare_scenario(cfg);
    cfg.table.require_all_consumed();

    fs::path csv_path = fs::path(out_dir) / cfg.output_path;
    if (!csv_path.parent_path().empty())
        fs::create_directories(csv_path.parent_path());
    fs::path stem = csv_path;
    stem.replace_extension();

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<Row> rows;
    Meta meta;
    std::string failure;
    try {
        plan.execute(rows, meta);
    } catch (const std::exception& e) {
        failure = e.what();
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    {
        std::ofstream csv(csv_path);
        if (!csv)
            throw ConfigError("cannot write output file: " +
                              csv_path.string());
        for (size_t c = 0; c < plan.columns.size(); ++c)
            csv << (c ? "," : "") << plan.columns[c];
        csv << "\n";
        for (const Row& r : rows) {
            for (size_t c = 0; c < r.size(); ++c)
                csv << (c ? "," : "") << format_number(r[c]);
            csv << "\n";
        }
    }
    if (!failure.empty()) throw SweepError(failure);

    // resolved configuration echo
    {
        std::ofstream echo(stem.string() + ".resolved.toml");
        echo << "scenario = \"" << cfg.scenario << "\"\n";
        echo << "preset = \"" << cfg.preset << "\"\n\n[params]\n";
        for (const auto& [k, v] : params_echo(cfg)) echo << k << " = " << v
                                                         << "\n";
        if (!plan.sweep_echo.empty()) {
            echo << "\n[sweep]\n";
            for (const auto& [k, v] : plan.sweep_echo)
                echo << k << " = " << v << "\n";
        }
        echo << "\n[run]\n";
        echo << "jobs = " << cfg.jobs << "\n";
        echo << "rel_tol = " << format_number(cfg.ctrl.rel_tol) << "\n";
        echo << "abs_tol = " << format_number(cfg.ctrl.abs_tol) << "\n";
        echo << "max_step = " << format_number(cfg.ctrl.max_step) << "\n";
        echo << "ness_tol = " << format_number(cfg.ness_tol) << "\n";
        echo << "\n[output]\n";
        echo << "path = \"" << cfg.output_path << "\"\n";
        echo << "points = " << cfg.series_points << "\n";
    }

    Meta side;
    side.emplace_back("scenario", "\"" + cfg.scenario + "\"");
    side.emplace_back("preset", "\"" + cfg.preset + "\"");
    side.emplace_back("rows", std::to_string(rows.size()));
    side.emplace_back("wall_time_seconds", format_number(wall));
    side.emplace_back("rel_tol", format_number(cfg.ctrl.rel_tol));
    side.emplace_back("abs_tol", format_number(cfg.ctrl.abs_tol));
    side.emplace_back("ness_tau_threshold", format_number(kNessTauThreshold));
    const bool is_engine = cfg.scenario.rfind("engine", 0) == 0;
    side.emplace_back(
        "adiabatic_validity",
        format_number(is_engine ? adiabatic_validity(cfg.engine)
                                : adiabatic_validity(cfg.battery)));
    for (auto& kv : meta) side.push_back(std::move(kv));
    write_meta(stem.string() + ".meta.toml", side);
}

}  // namespace qotto
