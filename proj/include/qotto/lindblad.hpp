// Rotating-frame Lindblad dynamics for the driven few-level systems.
//
// The master equation  d rho/dt = -i[H0 + V(t), rho] + sum_j L_j(rho)  is
// integrated in the rotating frame vrho = exp(i H0' t) rho exp(-i H0' t),
// H0' = H0 + dw |m><m|, where it becomes autonomous:
//     d vrho/dt = -i[Vbar, vrho] + sum_j L_j(vrho),
// with Vbar = Omega (s_gm + s_mg) - dw s_mm (+ eps (s_ei + s_ie) while a
// resonant discharge drive is on). All jump operators are elementary ladder
// operators, so the dissipators are unchanged by the frame.
//
// Work and heat rates are linear functionals of vrho and ride in the
// integration state, so they are accumulated with the stepper's own stage
// weights. Heat is evaluated against the frame-consistent Hamiltonian
// H_heat = H0 + sum_d amp (s_lu + s_ul), i.e. H0 + Vbar plus the detuning
// counter-term, which reproduces the closed-form battery expressions.
#pragma once

#include <array>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qotto/qcore.hpp"
#include "qotto/rk45.hpp"

namespace qotto {

// One dissipative term: rate * (J rho J^dag - 1/2 {J^dag J, rho}).
struct JumpChannel {
    std::string name;   // e.g. "gamma_m-"
    std::string group;  // heat bookkeeping group: "gamma_m", "gamma_i", ...
    Mat jump;           // elementary ladder operator |k><l|
    double rate = 0.0;  // units of omega_i
    double bohr_energy = 0.0;  // energy transported per quantum
};

enum class DriveRole { pump, discharge };

struct DriveSpec {
    double amplitude = 0.0;  // Omega or epsilon
    double frequency = 0.0;  // omega_f, or omega_i - omega_e
    int lower = 0;
    int upper = 0;
    DriveRole role = DriveRole::pump;

    double detuning(const RVec& energies) const {
        return frequency - (energies(upper) - energies(lower));
    }
};

enum class Frame { lab, rotating };

struct ModelSpec {
    RVec level_energies;  // ascending, first entry 0
    std::vector<std::string> level_labels;
    std::vector<DriveSpec> drives;
    std::vector<JumpChannel> channels;
    double bath_temperature = 0.0;
    Frame frame = Frame::rotating;
    RVec frame_shifts;  // static diagonal added to Vbar (effective models)

    int dim() const { return static_cast<int>(level_energies.size()); }

    Mat h0() const {
        return Mat(level_energies.cast<Cplx>().asDiagonal());
    }

    int index_of(const std::string& label) const {
        for (size_t k = 0; k < level_labels.size(); ++k)
            if (level_labels[k] == label) return static_cast<int>(k);
        throw std::invalid_argument("ModelSpec: no level labelled " + label);
    }

    void validate() const {
        const int d = dim();
        if (d < 2 || d > 4)
            throw std::invalid_argument("ModelSpec: dimension must be 2..4");
        if (std::abs(level_energies(0)) > 0.0)
            throw std::invalid_argument("ModelSpec: ground energy must be 0");
        for (int k = 1; k < d; ++k)
            if (!(level_energies(k) > level_energies(k - 1)))
                throw std::invalid_argument(
                    "ModelSpec: energies must be strictly ascending");
        if (bath_temperature < 0.0)
            throw std::invalid_argument("ModelSpec: temperature must be >= 0");
        for (const auto& dr : drives) {
            if (dr.amplitude < 0.0)
                throw std::invalid_argument("ModelSpec: drive amplitude < 0");
            if (dr.lower == dr.upper || dr.lower < 0 || dr.upper >= d)
                throw std::invalid_argument("ModelSpec: bad drive transition");
        }
        for (const auto& ch : channels) {
            if (ch.rate < 0.0)
                throw std::invalid_argument("ModelSpec: negative rate on " +
                                            ch.name);
            if (ch.jump.rows() != d || ch.jump.cols() != d)
                throw std::invalid_argument("ModelSpec: jump dim mismatch on " +
                                            ch.name);
            // ladder operator: exactly one entry, equal to 1
            int nonzero = 0;
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) {
                    const double a = std::abs(ch.jump(i, j));
                    if (a == 0.0) continue;
                    ++nonzero;
                    if (std::abs(a - 1.0) > 1e-14) nonzero = 99;
                }
            if (nonzero != 1)
                throw std::invalid_argument(
                    "ModelSpec: jump operator of " + ch.name +
                    " is not an elementary ladder operator");
        }
    }
};

// Gamma * (J rho J^dag - 1/2 {J^dag J, rho}); traceless and Hermitian.
inline Mat dissipator_apply(const JumpChannel& ch, const DensityMatrix& rho) {
    if (ch.jump.rows() != rho.m.rows())
        throw std::invalid_argument("dissipator_apply: dimension mismatch");
    const Mat jdj = ch.jump.adjoint() * ch.jump;
    return ch.rate * (ch.jump * rho.m * ch.jump.adjoint() -
                      0.5 * (jdj * rho.m + rho.m * jdj));
}

// Accumulated work/heat, in the spec's group order for the model at hand.
struct ThermoAccum {
    double w_in = 0.0;
    double w_ext = 0.0;
    std::array<double, 3> q{{0.0, 0.0, 0.0}};  // per channel group

    double q_total(int ngroups) const {
        double s = 0.0;
        for (int g = 0; g < ngroups; ++g) s += q[g];
        return s;
    }
};

// The assembled autonomous generator plus the linear work/heat functionals.
class RotatingGenerator {
  public:
    int dim = 0;
    Mat vbar;                          // coherent part of the generator
    Mat h_heat;                        // frame-consistent Hamiltonian
    std::vector<std::string> groups;   // heat group names, slot order
    std::vector<JumpChannel> channels; // unchanged by the frame

    int nstate() const { return dim * dim; }
    int naux() const { return 2 + static_cast<int>(groups.size()); }
    int ntotal() const { return nstate() + naux(); }

    // d y / dt = gen * y with y = [vec(vrho); W_in; W_ext; Q_groups...]
    const Mat& matrix() const { return gen_; }

    void apply(const CVec& y, CVec& dy) const { dy.noalias() = gen_ * y; }

    CVec pack(const Mat& rho, const ThermoAccum& acc = {}) const {
        CVec y(ntotal());
        y.head(nstate()) = Eigen::Map<const CVec>(rho.data(), nstate());
        y(nstate()) = acc.w_in;
        y(nstate() + 1) = acc.w_ext;
        for (size_t g = 0; g < groups.size(); ++g)
            y(nstate() + 2 + g) = acc.q[g];
        return y;
    }

    Mat unpack_state(const CVec& y) const {
        return Eigen::Map<const Mat>(y.data(), dim, dim);
    }

    ThermoAccum unpack_accum(const CVec& y) const {
        ThermoAccum acc;
        acc.w_in = y(nstate()).real();
        acc.w_ext = y(nstate() + 1).real();
        for (size_t g = 0; g < groups.size(); ++g)
            acc.q[g] = y(nstate() + 2 + g).real();
        return acc;
    }

    int group_slot(const std::string& group) const {
        for (size_t g = 0; g < groups.size(); ++g)
            if (groups[g] == group) return static_cast<int>(g);
        throw std::invalid_argument("RotatingGenerator: unknown group " +
                                    group);
    }

    // max |d vec(vrho)/dt| given the FSAL right-hand side of the last step
    double state_residual(const CVec& dy) const {
        return dy.head(nstate()).cwiseAbs().maxCoeff();
    }

    friend RotatingGenerator rotating_generator(const ModelSpec& model);

  private:
    Mat gen_;
};

namespace detail {

// vec(A X) = (I (x) A) vec X, vec(X B) = (B^T (x) I) vec X, column-major.
inline Mat kron(const Mat& a, const Mat& b) {
    const Eigen::Index ar = a.rows(), ac = a.cols(), br = b.rows(),
                       bc = b.cols();
    Mat out(ar * br, ac * bc);
    for (Eigen::Index i = 0; i < ar; ++i)
        for (Eigen::Index j = 0; j < ac; ++j)
            out.block(i * br, j * bc, br, bc) = a(i, j) * b;
    return out;
}

inline Mat left_mult(const Mat& a) {
    return kron(Mat::Identity(a.rows(), a.cols()), a);
}

inline Mat right_mult(const Mat& a) {
    return kron(a.transpose(), Mat::Identity(a.rows(), a.cols()));
}

// row functional r such that r . vec(rho) = Tr(rho * op)
inline Eigen::RowVectorXcd trace_row(const Mat& op) {
    const Mat t = op.transpose();
    return Eigen::Map<const CVec>(t.data(), t.size()).transpose();
}

}  // namespace detail

// Build the time-independent rotating-frame generator. The pump drive (g,m)
// may be detuned; any further drive must be resonant, otherwise no common
// rotating frame with ladder-invariant dissipators exists for these models.
inline RotatingGenerator rotating_generator(const ModelSpec& model) {
    model.validate();
    const int d = model.dim();
    const int n = d * d;

    RotatingGenerator rg;
    rg.dim = d;
    rg.channels = model.channels;
    rg.vbar = Mat::Zero(d, d);
    rg.h_heat = model.h0();

    int detuned_drives = 0;
    for (const auto& dr : model.drives) {
        const double dw = dr.detuning(model.level_energies);
        if (std::abs(dw) > 1e-14) {
            ++detuned_drives;
            if (dr.role != DriveRole::pump || detuned_drives > 1)
                throw std::invalid_argument(
                    "rotating_generator: unsupported drive layout "
                    "(only the pump drive may be detuned)");
        }
        const Mat coupling = ketbra(d, dr.lower, dr.upper) +
                             ketbra(d, dr.upper, dr.lower);
        rg.vbar += dr.amplitude * coupling;
        rg.vbar -= dw * ketbra(d, dr.upper, dr.upper);
        rg.h_heat += dr.amplitude * coupling;
    }
    for (int k = 0; k < model.frame_shifts.size(); ++k)
        rg.vbar(k, k) += model.frame_shifts(k);

    for (const auto& ch : model.channels) {
        bool known = false;
        for (const auto& g : rg.groups) known = known || g == ch.group;
        if (!known) rg.groups.push_back(ch.group);
    }
    if (rg.groups.size() > 3)
        throw std::invalid_argument("rotating_generator: more than 3 groups");

    const int ntot = n + rg.naux();
    rg.gen_ = Mat::Zero(ntot, ntot);

    // coherent part
    rg.gen_.topLeftCorner(n, n) -=
        I_UNIT * (detail::left_mult(rg.vbar) - detail::right_mult(rg.vbar));

    // dissipators
    for (const auto& ch : model.channels) {
        if (ch.rate == 0.0) continue;
        const Mat jdj = ch.jump.adjoint() * ch.jump;
        rg.gen_.topLeftCorner(n, n) +=
            ch.rate * (detail::kron(ch.jump.conjugate(), ch.jump) -
                       0.5 * detail::left_mult(jdj) -
                       0.5 * detail::right_mult(jdj));
    }

    // work rates: dW/dt = Tr(vrho * i amp freq (s_lu - s_ul))
    for (const auto& dr : model.drives) {
        const Mat wop = I_UNIT * dr.amplitude * dr.frequency *
                        (ketbra(d, dr.lower, dr.upper) -
                         ketbra(d, dr.upper, dr.lower));
        const int slot = (dr.role == DriveRole::pump) ? n : n + 1;
        rg.gen_.row(slot).head(n) += detail::trace_row(wop);
    }

    // heat rates per group: dQ_g/dt = Tr(L_g(vrho) H_heat)
    for (const auto& ch : model.channels) {
        if (ch.rate == 0.0) continue;
        const Mat jdj = ch.jump.adjoint() * ch.jump;
        const Mat qop =
            ch.rate * (ch.jump.adjoint() * rg.h_heat * ch.jump -
                       0.5 * (jdj * rg.h_heat + rg.h_heat * jdj));
        const int slot = n + 2 + rg.group_slot(ch.group);
        rg.gen_.row(slot).head(n) += detail::trace_row(qop);
    }

    return rg;
}

struct Trajectory {
    std::vector<double> times;
    std::vector<Mat> states;  // rotating-frame vrho at the sample times
    std::vector<ThermoAccum> accums;
    StepStats stats;
    double t_final = 0.0;
    Mat final_state;
    ThermoAccum final_accum;
    std::vector<std::string> q_groups;
};

struct ObserverSet {
    // invoked on (thinned) accepted steps and on the final state
    std::function<void(double, const Mat&, const ThermoAccum&)> on_sample;
    // early-stop test, sees max |d vec(vrho)/dt| at the accepted point
    std::function<bool(double, const Mat&, double)> stop_when;
    int max_samples = 4096;  // trajectory thinning bound
};

// Integrate the rotating-frame master equation from vrho(0) = rho0.
// Accepted states have their trace drift checked against 1e-9 and are
// re-normalized below that; larger drift aborts (it would hide a bug).
inline Trajectory evolve(const RotatingGenerator& rg, const DensityMatrix& rho0,
                         double t_end, const StepControl& ctrl = {},
                         const ObserverSet& obs = {}) {
    rho0.validate();
    if (rho0.dim() != rg.dim)
        throw std::invalid_argument("evolve: state/model dimension mismatch");
    if (!(t_end > 0.0)) throw std::invalid_argument("evolve: t_end must be > 0");

    Trajectory traj;
    traj.q_groups = rg.groups;
    const int cap = std::max(obs.max_samples, 16);
    long stride = 1, accepted = 0;

    CVec y = rg.pack(rho0.m);
    const int n = rg.nstate();

    auto record = [&](double t, const Mat& rho, const ThermoAccum& acc) {
        if (static_cast<int>(traj.times.size()) >= cap) {
            // halve the stored history, double the keep stride
            size_t w = 0;
            for (size_t r = 0; r < traj.times.size(); r += 2, ++w) {
                traj.times[w] = traj.times[r];
                traj.states[w] = traj.states[r];
                traj.accums[w] = traj.accums[r];
            }
            traj.times.resize(w);
            traj.states.resize(w);
            traj.accums.resize(w);
            stride *= 2;
        }
        traj.times.push_back(t);
        traj.states.push_back(rho);
        traj.accums.push_back(acc);
        if (obs.on_sample) obs.on_sample(t, rho, acc);
    };

    record(0.0, rho0.m, ThermoAccum{});

    auto rhs = [&rg](double, const CVec& yy, CVec& dy) { rg.apply(yy, dy); };

    bool stopped = false;
    auto on_accept = [&](double t, CVec& yy, const CVec& k1) -> StepAction {
        Cplx tr = 0.0;
        for (int i = 0; i < rg.dim; ++i) tr += yy(i + i * rg.dim);
        const double drift = std::abs(tr - Cplx(1.0));
        if (drift > 1e-9)
            throw std::runtime_error(
                "evolve: trace drift " + std::to_string(drift) +
                " exceeds 1e-9; integration is unreliable");
        yy.head(n) /= tr.real();

        ++accepted;
        const bool sample = (accepted % stride) == 0;
        const bool want_stop =
            obs.stop_when &&
            obs.stop_when(t, rg.unpack_state(yy), rg.state_residual(k1));
        if (sample || want_stop)
            record(t, rg.unpack_state(yy), rg.unpack_accum(yy));
        if (want_stop) stopped = true;
        return want_stop ? StepAction::stop : StepAction::proceed;
    };

    const double t_reached =
        rk45_integrate(rhs, 0.0, t_end, y, ctrl, traj.stats, on_accept);

    traj.t_final = t_reached;
    traj.final_state = rg.unpack_state(y);
    traj.final_accum = rg.unpack_accum(y);
    if (traj.times.back() != t_reached)
        record(t_reached, traj.final_state, traj.final_accum);
    (void)stopped;
    return traj;
}

inline Trajectory evolve(const ModelSpec& model, const DensityMatrix& rho0,
                         double t_end, const StepControl& ctrl = {},
                         const ObserverSet& obs = {}) {
    return evolve(rotating_generator(model), rho0, t_end, ctrl, obs);
}

// Linear propagation of an arbitrary operator through the generator, with
// no state checks or renormalization. Used to build cycle maps from basis
// elements, which are not density matrices.
inline Mat propagate_raw(const RotatingGenerator& rg, const Mat& op, double t,
                         const StepControl& ctrl = {}) {
    if (t <= 0.0) return op;
    CVec y = rg.pack(op);
    StepStats st;
    rk45_integrate(
        [&rg](double, const CVec& yy, CVec& dy) { rg.apply(yy, dy); }, 0.0, t,
        y, ctrl, st, [](double, CVec&, const CVec&) {
            return StepAction::proceed;
        });
    return rg.unpack_state(y);
}

// Total rate scale of a model; used for default tolerances and horizons.
inline double rate_scale(const ModelSpec& model) {
    double s = 0.0;
    for (const auto& ch : model.channels) s += ch.rate;
    for (const auto& dr : model.drives) s += dr.amplitude;
    return s;
}

struct NessResult {
    DensityMatrix ness;
    double tau = 0.0;  // earliest time within the tau threshold of the NESS
    // second pass, ends at tau: final_state/final_accum sit at the
    // threshold crossing, so charging reports read them off directly
    Trajectory traj;
};

inline constexpr double kNessTauThreshold = 1e-4;  // max-norm state distance

// March the dynamics to its fixed point, in two passes. Pass 1 integrates
// until the max-abs of the state part of the right-hand side falls below
// tol, giving the NESS. Pass 2 re-integrates from rho0 and stops at the
// earliest accepted step within 1e-4 (max norm) of the NESS, which defines
// the convergence time tau and pins the accumulated work/heat at tau.
//
// Steps are capped at 1/rate_scale unless the caller set a cap: at the
// explicit-stability boundary the controller's accepted per-step errors
// keep the residual from decaying, while inside it the residual falls to
// the roundoff floor and tight tolerances stay reachable.
inline NessResult find_ness(const ModelSpec& model, const DensityMatrix& rho0,
                            double tol = 0.0, StepControl ctrl = {},
                            double max_horizon = 0.0) {
    const RotatingGenerator rg = rotating_generator(model);
    const double scale = rate_scale(model);
    if (tol <= 0.0) tol = 1e-8 * scale;
    if (max_horizon <= 0.0)
        max_horizon = (scale > 0.0) ? 1e9 / scale : 1e12;
    if (ctrl.max_step <= 0.0 && scale > 0.0) ctrl.max_step = 1.0 / scale;

    ObserverSet pass1;
    pass1.max_samples = 64;
    double best = std::numeric_limits<double>::infinity();
    long since_best = 0;
    pass1.stop_when = [&](double, const Mat&, double residual) {
        if (residual <= tol) return true;
        if (residual < best) {
            best = residual;
            since_best = 0;
        } else if (++since_best > 50000) {
            throw std::runtime_error(
                "find_ness: residual stagnated at " + std::to_string(best) +
                " above tol; tighten rel_tol/abs_tol");
        }
        return false;
    };
    Trajectory conv = evolve(rg, rho0, max_horizon, ctrl, pass1);
    if (conv.t_final >= max_horizon * (1.0 - 1e-9))
        throw std::runtime_error(
            "find_ness: no convergence within the time horizon");

    NessResult out;
    out.ness = DensityMatrix{conv.final_state, model.level_labels};
    out.ness.validate();

    const Mat& target = out.ness.m;
    ObserverSet pass2;
    pass2.stop_when = [&target, tol](double, const Mat& rho,
                                     double residual) {
        return max_abs(rho - target) <= kNessTauThreshold || residual <= tol;
    };
    out.traj = evolve(rg, rho0, max_horizon, ctrl, pass2);
    out.tau = out.traj.t_final;
    return out;
}

}  // namespace qotto
