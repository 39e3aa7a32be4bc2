// The concrete systems of the study: three-level battery, four-level
// engine, and the effective two-level battery after adiabatic elimination.
// Units: hbar = k_B = 1 and omega_i = 1 sets the scale; every quantity is
// a dimensionless multiple of omega_i.
#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "qotto/lindblad.hpp"
#include "qotto/qcore.hpp"

namespace qotto {

// n(gap, T) = 1 / (exp(gap/T) - 1); exactly 0 at T = 0.
inline double thermal_occupation(double gap, double temperature) {
    if (!(gap > 0.0))
        throw std::invalid_argument("thermal_occupation: gap must be > 0");
    if (temperature < 0.0)
        throw std::invalid_argument("thermal_occupation: T must be >= 0");
    if (temperature == 0.0) return 0.0;
    return 1.0 / std::expm1(gap / temperature);
}

// Diagonal populations proportional to exp(-E_k / T); ground projector at T=0.
inline DensityMatrix gibbs_state(const RVec& energies, double temperature,
                                 std::vector<std::string> labels = {}) {
    const int d = static_cast<int>(energies.size());
    RVec pop = RVec::Zero(d);
    if (temperature == 0.0) {
        pop(0) = 1.0;
    } else {
        for (int k = 0; k < d; ++k)
            pop(k) = std::exp(-(energies(k) - energies(0)) / temperature);
        pop /= pop.sum();
    }
    return DensityMatrix::diagonal(pop, std::move(labels));
}

struct BatteryParams {
    double omega_i = 1.0;  // the unit of energy
    double omega_m = 1.02;
    double gamma0_i = 1e-9;  // spontaneous rate i -> g
    double gamma0_m = 1e-4;  // spontaneous rate m -> i
    double Omega = 1e-6;     // pump amplitude
    double omega_f = 1.02;   // pump frequency
    double T = 0.0;          // bath temperature

    double delta_omega() const { return omega_f - omega_m; }

    void validate() const {
        if (!(omega_i > 0.0) || !(omega_m > omega_i))
            throw std::invalid_argument(
                "BatteryParams: need 0 < omega_i < omega_m");
        if (gamma0_i < 0 || gamma0_m < 0 || Omega < 0 || T < 0 || omega_f < 0)
            throw std::invalid_argument(
                "BatteryParams: rates, Omega, omega_f and T must be >= 0");
    }
};

struct EngineParams : BatteryParams {
    double omega_e = 0.01;
    double gamma0_e = 1e-9;  // spontaneous rate e -> g
    double epsilon = 2e-4;   // discharge pulse amplitude

    void validate() const {
        BatteryParams::validate();
        if (!(omega_e > 0.0) || !(omega_e < omega_i))
            throw std::invalid_argument(
                "EngineParams: need 0 < omega_e < omega_i");
        if (gamma0_e < 0 || epsilon < 0)
            throw std::invalid_argument(
                "EngineParams: gamma0_e and epsilon must be >= 0");
    }

    double tau_discharge() const {
        if (!(epsilon > 0.0))
            throw std::invalid_argument("EngineParams: epsilon must be > 0");
        return M_PI / (2.0 * epsilon);
    }
};

// Thermal rate pair for one transition.
struct RatePair {
    double up = 0.0;    // gamma^+ = gamma0 * n
    double down = 0.0;  // gamma^- = gamma0 * (n + 1)
};

inline RatePair thermal_rates(double gamma0, double gap, double temperature) {
    const double n = thermal_occupation(gap, temperature);
    return RatePair{gamma0 * n, gamma0 * (n + 1.0)};
}

// p = 4 Omega^2 / (gamma_m-^2 + 4 dw^2); maximal at resonance.
inline double pumping_rate(double omega_drive, double gamma_m_minus,
                           double delta_omega) {
    if (!(gamma_m_minus > 0.0))
        throw std::invalid_argument("pumping_rate: gamma_m- must be > 0");
    return 4.0 * omega_drive * omega_drive /
           (gamma_m_minus * gamma_m_minus + 4.0 * delta_omega * delta_omega);
}

// Three levels g,i,m; four channels gamma_m+-, gamma_i+-; one pump drive.
// The reservoir does not couple g and m directly.
inline ModelSpec build_battery3(const BatteryParams& p) {
    p.validate();
    ModelSpec m;
    m.level_energies = RVec{{0.0, p.omega_i, p.omega_m}};
    m.level_labels = {"g", "i", "m"};
    m.bath_temperature = p.T;
    m.frame_shifts = RVec::Zero(3);

    const int g = 0, i = 1, mm = 2;
    const RatePair rm = thermal_rates(p.gamma0_m, p.omega_m - p.omega_i, p.T);
    const RatePair ri = thermal_rates(p.gamma0_i, p.omega_i, p.T);
    const double d_mi = p.omega_m - p.omega_i;

    m.channels = {
        {"gamma_m+", "gamma_m", ketbra(3, mm, i), rm.up, d_mi},
        {"gamma_m-", "gamma_m", ketbra(3, i, mm), rm.down, d_mi},
        {"gamma_i+", "gamma_i", ketbra(3, i, g), ri.up, p.omega_i},
        {"gamma_i-", "gamma_i", ketbra(3, g, i), ri.down, p.omega_i},
    };
    m.drives = {DriveSpec{p.Omega, p.omega_f, g, mm, DriveRole::pump}};
    return m;
}

enum class EngineStage { recharge, discharge };

// Four levels g,e,i,m; six channels; the discharge stage adds the resonant
// extraction drive on (e,i).
inline ModelSpec build_engine4(const EngineParams& p, EngineStage stage) {
    p.validate();
    ModelSpec m;
    m.level_energies = RVec{{0.0, p.omega_e, p.omega_i, p.omega_m}};
    m.level_labels = {"g", "e", "i", "m"};
    m.bath_temperature = p.T;
    m.frame_shifts = RVec::Zero(4);

    const int g = 0, e = 1, i = 2, mm = 3;
    const RatePair rm = thermal_rates(p.gamma0_m, p.omega_m - p.omega_i, p.T);
    const RatePair ri = thermal_rates(p.gamma0_i, p.omega_i, p.T);
    const RatePair re = thermal_rates(p.gamma0_e, p.omega_e, p.T);
    const double d_mi = p.omega_m - p.omega_i;

    m.channels = {
        {"gamma_m+", "gamma_m", ketbra(4, mm, i), rm.up, d_mi},
        {"gamma_m-", "gamma_m", ketbra(4, i, mm), rm.down, d_mi},
        {"gamma_i+", "gamma_i", ketbra(4, i, g), ri.up, p.omega_i},
        {"gamma_i-", "gamma_i", ketbra(4, g, i), ri.down, p.omega_i},
        {"gamma_e+", "gamma_e", ketbra(4, e, g), re.up, p.omega_e},
        {"gamma_e-", "gamma_e", ketbra(4, g, e), re.down, p.omega_e},
    };
    m.drives = {DriveSpec{p.Omega, p.omega_f, g, mm, DriveRole::pump}};
    if (stage == EngineStage::discharge)
        m.drives.push_back(DriveSpec{p.epsilon, p.omega_i - p.omega_e, e, i,
                                     DriveRole::discharge});
    return m;
}

inline DensityMatrix initial_gibbs(const ModelSpec& m) {
    return gibbs_state(m.level_energies, m.bath_temperature, m.level_labels);
}

// How well the elimination hierarchy gamma_m- >> everything else holds;
// values above 0.1 mean the effective description is questionable.
inline double adiabatic_validity(const BatteryParams& p) {
    const RatePair rm = thermal_rates(p.gamma0_m, p.omega_m - p.omega_i, p.T);
    const RatePair ri = thermal_rates(p.gamma0_i, p.omega_i, p.T);
    const double worst =
        std::max({p.Omega, rm.up, ri.up, ri.down});
    return worst / rm.down;
}

inline double adiabatic_validity(const EngineParams& p) {
    const RatePair rm = thermal_rates(p.gamma0_m, p.omega_m - p.omega_i, p.T);
    const RatePair ri = thermal_rates(p.gamma0_i, p.omega_i, p.T);
    const RatePair re = thermal_rates(p.gamma0_e, p.omega_e, p.T);
    double v = std::max({p.Omega, rm.up, ri.up, ri.down, re.up, re.down}) /
               rm.down;
    // the engine elimination additionally needs gamma_{e,i}- >> gamma_m+
    const double gmin = std::min(ri.down, re.down);
    if (gmin > 0.0) v = std::max(v, rm.up / gmin);
    return v;
}

inline constexpr double kValidityWarnLevel = 0.1;

// Slowest relaxation rate of the pumped dynamics, from the eliminated
// model; sets sensible stopping tolerances for steady-state marches.
inline double battery_slow_rate(const BatteryParams& p) {
    const RatePair rm = thermal_rates(p.gamma0_m, p.omega_m - p.omega_i, p.T);
    const RatePair ri = thermal_rates(p.gamma0_i, p.omega_i, p.T);
    const double pr = pumping_rate(p.Omega, rm.down, p.delta_omega());
    return pr * rm.down + ri.up + ri.down;
}

inline double engine_slow_rate(const EngineParams& p) {
    const RatePair rm = thermal_rates(p.gamma0_m, p.omega_m - p.omega_i, p.T);
    const RatePair ri = thermal_rates(p.gamma0_i, p.omega_i, p.T);
    const RatePair re = thermal_rates(p.gamma0_e, p.omega_e, p.T);
    const double pr = pumping_rate(p.Omega, rm.down, p.delta_omega());
    return std::min(pr * rm.down + ri.up + ri.down, re.up + re.down);
}

// Effective two-level battery after eliminating |m>: an incoherent
// excitation channel Gamma_i+ = gamma_i+ + p gamma_m- against the natural
// decay gamma_i-, plus the level shift p*dw on |g>.
struct EffectiveQubitModel {
    double gamma_i_plus_eff = 0.0;   // Gamma_i+
    double gamma_i_minus = 0.0;
    double p = 0.0;                  // pumping rate
    double pump_excitation = 0.0;    // p * gamma_m-
    double level_shift = 0.0;        // p * dw
    double validity = 0.0;
    bool hierarchy_ok = true;
    ModelSpec spec;

    double excited_ness() const {
        const double s = gamma_i_plus_eff + gamma_i_minus;
        return s > 0.0 ? gamma_i_plus_eff / s : 0.0;
    }

    // Closed-form population of |i>, exact for this two-level dynamics.
    double population_i(double t, double rho_ii_initial) const {
        const double s = gamma_i_plus_eff + gamma_i_minus;
        const double inf = excited_ness();
        return inf + (rho_ii_initial - inf) * std::exp(-s * t);
    }
};

inline EffectiveQubitModel build_effective2(const BatteryParams& p) {
    p.validate();
    const RatePair rm = thermal_rates(p.gamma0_m, p.omega_m - p.omega_i, p.T);
    const RatePair ri = thermal_rates(p.gamma0_i, p.omega_i, p.T);
    const double dw = p.delta_omega();
    const double pr = pumping_rate(p.Omega, rm.down, dw);

    EffectiveQubitModel eff;
    eff.p = pr;
    eff.pump_excitation = pr * rm.down;
    eff.gamma_i_plus_eff = ri.up + pr * rm.down;
    eff.gamma_i_minus = ri.down;
    eff.level_shift = pr * dw;
    eff.validity = adiabatic_validity(p);
    eff.hierarchy_ok = eff.validity <= kValidityWarnLevel;

    ModelSpec m;
    m.level_energies = RVec{{0.0, p.omega_i}};
    m.level_labels = {"g", "i"};
    m.bath_temperature = p.T;
    m.frame_shifts = RVec{{eff.level_shift, 0.0}};
    m.channels = {
        {"Gamma_i+", "eff_pump", ketbra(2, 1, 0), eff.gamma_i_plus_eff,
         p.omega_i},
        {"gamma_i-", "gamma_i", ketbra(2, 0, 1), eff.gamma_i_minus,
         p.omega_i},
    };
    eff.spec = std::move(m);
    return eff;
}

// T_H = omega_i / ln(gamma_i- / Gamma_i+). Negative under population
// inversion; +inf when the rates balance; 0 for a pure-decay qubit.
inline double effective_hot_temperature(const EffectiveQubitModel& m,
                                        double omega_i) {
    if (!(m.gamma_i_minus > 0.0))
        throw std::invalid_argument(
            "effective_hot_temperature: gamma_i- must be > 0");
    if (m.gamma_i_plus_eff == 0.0) return 0.0;
    const double ratio = m.gamma_i_minus / m.gamma_i_plus_eff;
    if (ratio == 1.0) return std::numeric_limits<double>::infinity();
    return omega_i / std::log(ratio);
}

// Hierarchy-preserving parameter sets that shrink the time span ~100x
// relative to the published rate hierarchy; p*gamma_m-/gamma_i- = 40 and
// Omega/gamma_m- = 1e-2 are kept.
inline BatteryParams desk_battery_params() {
    BatteryParams p;
    p.gamma0_m = 1e-2;
    p.gamma0_i = 1e-7;
    p.Omega = 1e-4;
    p.omega_m = 1.02;
    p.omega_f = p.omega_m;
    p.T = 0.0;
    return p;
}

inline EngineParams desk_engine_params() {
    EngineParams p;
    static_cast<BatteryParams&>(p) = desk_battery_params();
    p.omega_e = 0.01;
    p.gamma0_e = 1e-7;
    p.epsilon = 1.0;
    return p;
}

// Published parameter sets (battery: Fig. 3 caption; engine: Fig. 5 caption).
inline BatteryParams paper_battery_params() { return BatteryParams{}; }

inline EngineParams paper_engine_params() { return EngineParams{}; }

}  // namespace qotto
