#pragma once

#include "tsf/random.hpp"
#include "tsf/time_series.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tsf {

enum class SystemKind { Lorenz, LorenzCoupled, DoublePendulum, CellCycle, Hopfield, BlinkingRotlet };

inline constexpr std::array<SystemKind, 6> kBenchmarkSystems = {
    SystemKind::Lorenz,   SystemKind::LorenzCoupled, SystemKind::DoublePendulum,
    SystemKind::CellCycle, SystemKind::Hopfield,     SystemKind::BlinkingRotlet};

inline std::string_view system_name(SystemKind kind) {
    switch (kind) {
        case SystemKind::Lorenz: return "Lorenz";
        case SystemKind::LorenzCoupled: return "LorenzCoupled";
        case SystemKind::DoublePendulum: return "DoublePendulum";
        case SystemKind::CellCycle: return "CellCycle";
        case SystemKind::Hopfield: return "Hopfield";
        case SystemKind::BlinkingRotlet: return "BlinkingRotlet";
    }
    throw std::logic_error("unknown system kind");
}

inline SystemKind parse_system(std::string_view name) {
    for (auto kind : kBenchmarkSystems) {
        if (system_name(kind) == name) return kind;
    }
    throw std::invalid_argument("unknown ODE system '" + std::string(name) + "'");
}

inline Index system_dim(SystemKind kind) {
    switch (kind) {
        case SystemKind::Lorenz: return 3;
        case SystemKind::LorenzCoupled: return 6;
        case SystemKind::DoublePendulum: return 4;
        case SystemKind::CellCycle: return 6;
        case SystemKind::Hopfield: return 6;
        case SystemKind::BlinkingRotlet: return 3;
    }
    throw std::logic_error("unknown system kind");
}

/// A named dynamical system. Every constant the right-hand side reads lives in
/// `params`, so alternative parameterizations are reproducible from a manifest.
struct OdeSystem {
    SystemKind kind = SystemKind::Lorenz;
    std::string name;
    Index dim = 0;
    std::map<std::string, double> params;
    Vector init;
    std::vector<std::string> state_names;
    /// Parameters that are toolkit choices rather than published constants.
    std::set<std::string> toolkit_defaults;
};

class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::string> required_params(SystemKind kind) {
    switch (kind) {
        case SystemKind::Lorenz: return {"sigma", "rho", "beta"};
        case SystemKind::LorenzCoupled: return {"sigma", "rho", "beta", "epsilon"};
        case SystemKind::DoublePendulum: return {"g", "l", "linearized"};
        case SystemKind::CellCycle:
            return {"vi1", "vi2", "Kim1", "Kim2", "vd1", "vd2", "Kd1", "Kd2", "kd1", "kd2", "K1",  "K2",
                    "K3",  "K4",  "H1",   "H2",   "H3",  "H4",  "Kc1", "Kc2", "VM1", "VM3", "UM1", "UM3",
                    "V2",  "V4",  "U2",   "U4",   "time_scale"};
        case SystemKind::Hopfield: {
            std::vector<std::string> names;
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 6; ++j) names.push_back("w" + std::to_string(i) + "_" + std::to_string(j));
            return names;
        }
        case SystemKind::BlinkingRotlet:
            return {"radius", "offset", "strength", "tau", "stiffness", "kappa", "core"};
    }
    throw std::logic_error("unknown system kind");
}

}  // namespace detail

inline void validate_system(const OdeSystem& system) {
    if (system.dim != system_dim(system.kind)) {
        throw std::invalid_argument(system.name + ": dimension " + std::to_string(system.dim) + " does not match " +
                                    std::string(system_name(system.kind)));
    }
    if (system.init.size() != system.dim) throw std::invalid_argument(system.name + ": initial state length mismatch");
    for (const auto& p : detail::required_params(system.kind)) {
        if (!system.params.contains(p)) throw std::invalid_argument(system.name + ": missing parameter '" + p + "'");
    }
}

/// The benchmark's default parameterization of each system.
inline OdeSystem make_system(SystemKind kind) {
    OdeSystem s;
    s.kind = kind;
    s.name = std::string(system_name(kind));
    s.dim = system_dim(kind);
    switch (kind) {
        case SystemKind::Lorenz:
            s.params = {{"sigma", 10.0}, {"rho", 28.0}, {"beta", 8.0 / 3.0}};
            s.init = Vector{{1.0, 1.0, 1.0}};
            s.state_names = {"x", "y", "z"};
            break;
        case SystemKind::LorenzCoupled:
            s.params = {{"sigma", 10.0}, {"rho", 28.0}, {"beta", 8.0 / 3.0}, {"epsilon", 0.1}};
            s.init = Vector{{1.0, 1.0, 1.0, -1.0, 2.0, 20.0}};
            s.state_names = {"x1", "y1", "z1", "x2", "y2", "z2"};
            s.toolkit_defaults = {"epsilon"};
            break;
        case SystemKind::DoublePendulum:
            // Below the flip energy (2 cos th1 + cos th2 > 1 at rest), so angles stay bounded.
            s.params = {{"g", 1.0}, {"l", 1.0}, {"linearized", 0.0}};
            s.init = Vector{{1.4, 0.8, 0.0, 0.0}};
            s.state_names = {"theta1", "theta2", "omega1", "omega2"};
            s.toolkit_defaults = {"g", "l"};
            break;
        case SystemKind::CellCycle:
            s.params = {{"vi1", 0.05},  {"vi2", 0.05},  {"Kim1", 0.65}, {"Kim2", 0.65}, {"vd1", 0.025},
                        {"vd2", 0.025}, {"Kd1", 0.02},  {"Kd2", 0.02},  {"kd1", 0.001}, {"kd2", 0.001},
                        {"K1", 0.01},   {"K2", 0.01},   {"K3", 0.01},   {"K4", 0.01},   {"H1", 0.01},
                        {"H2", 0.01},   {"H3", 0.01},   {"H4", 0.01},   {"Kc1", 0.5},   {"Kc2", 0.5},
                        {"VM1", 0.3},   {"VM3", 0.1},   {"UM1", 0.3},   {"UM3", 0.1},   {"V2", 0.15},
                        {"V4", 0.05},   {"U2", 0.15},   {"U4", 0.05},   {"time_scale", 10.0}};
            s.init = Vector{{0.2, 0.1, 0.1, 0.25, 0.15, 0.05}};
            s.state_names = {"C1", "M1", "X1", "C2", "M2", "X2"};
            s.toolkit_defaults = {"time_scale"};
            break;
        case SystemKind::Hopfield: {
            // Two chaotic three-neuron nets, weakly cross-coupled.
            const double block[3][3] = {{2.0, -1.2, 0.0}, {1.9995, 1.71, 1.15}, {-4.75, 0.0, 1.1}};
            double w[6][6] = {};
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) {
                    w[i][j] = block[i][j];
                    w[i + 3][j + 3] = block[i][j];
                }
            }
            w[0][3] = w[3][0] = 0.1;
            w[1][4] = w[4][1] = 0.1;
            for (int i = 0; i < 6; ++i) {
                for (int j = 0; j < 6; ++j) {
                    const auto key = "w" + std::to_string(i) + "_" + std::to_string(j);
                    s.params[key] = w[i][j];
                    s.toolkit_defaults.insert(key);
                }
            }
            s.init = Vector{{0.1, 0.1, 0.1, -0.1, 0.2, 0.05}};
            s.state_names = {"x0", "x1", "x2", "x3", "x4", "x5"};
            break;
        }
        case SystemKind::BlinkingRotlet:
            s.params = {{"radius", 1.0}, {"offset", 0.5},     {"strength", 2.0 * std::numbers::pi},
                        {"tau", 3.0},    {"stiffness", 20.0}, {"kappa", 4.0},
                        {"core", 0.05}};
            s.init = Vector{{0.3, 0.2, 0.5}};
            s.state_names = {"x", "y", "w"};
            for (const auto& [k, v] : s.params) s.toolkit_defaults.insert(k);
            break;
    }
    return s;
}

inline OdeSystem make_system(std::string_view name) { return make_system(parse_system(name)); }

/// Right-hand side with parameters resolved once; evaluation allocates nothing.
class CompiledRhs {
public:
    explicit CompiledRhs(const OdeSystem& system) : kind_(system.kind), dim_(system.dim) {
        validate_system(system);
        const auto& p = system.params;
        switch (kind_) {
            case SystemKind::Lorenz:
            case SystemKind::LorenzCoupled:
                c_[0] = p.at("sigma");
                c_[1] = p.at("rho");
                c_[2] = p.at("beta");
                c_[3] = kind_ == SystemKind::LorenzCoupled ? p.at("epsilon") : 0.0;
                break;
            case SystemKind::DoublePendulum:
                c_[0] = p.at("g");
                c_[1] = p.at("l");
                c_[2] = p.at("linearized");
                if (!(c_[1] > 0.0)) throw std::invalid_argument("DoublePendulum: rod length must be positive");
                break;
            case SystemKind::CellCycle: {
                const auto names = detail::required_params(kind_);
                for (std::size_t i = 0; i < names.size(); ++i) c_[i] = p.at(names[i]);
                break;
            }
            case SystemKind::Hopfield:
                for (int i = 0; i < 6; ++i)
                    for (int j = 0; j < 6; ++j)
                        c_[static_cast<std::size_t>(6 * i + j)] = p.at("w" + std::to_string(i) + "_" + std::to_string(j));
                break;
            case SystemKind::BlinkingRotlet: {
                const auto names = detail::required_params(kind_);
                for (std::size_t i = 0; i < names.size(); ++i) c_[i] = p.at(names[i]);
                break;
            }
        }
    }

    [[nodiscard]] Index dim() const noexcept { return dim_; }

    void operator()(const Vector& x, double t, Vector& dx) const {
        if (x.size() != dim_) {
            throw std::invalid_argument("state length " + std::to_string(x.size()) + " does not match dimension " +
                                        std::to_string(dim_));
        }
        dx.resize(dim_);
        switch (kind_) {
            case SystemKind::Lorenz: lorenz(x, 0, dx); break;
            case SystemKind::LorenzCoupled:
                lorenz(x, 0, dx);
                lorenz(x, 3, dx);
                dx(0) += c_[3] * (x(3) - x(0));
                dx(3) += c_[3] * (x(0) - x(3));
                break;
            case SystemKind::DoublePendulum: double_pendulum(x, dx); break;
            case SystemKind::CellCycle: cell_cycle(x, dx); break;
            case SystemKind::Hopfield: hopfield(x, dx); break;
            case SystemKind::BlinkingRotlet: blinking_rotlet(x, t, dx); break;
        }
    }

private:
    void lorenz(const Vector& x, Index o, Vector& dx) const {
        const double sigma = c_[0], rho = c_[1], beta = c_[2];
        dx(o) = sigma * (x(o + 1) - x(o));
        dx(o + 1) = x(o) * (rho - x(o + 2)) - x(o + 1);
        dx(o + 2) = x(o) * x(o + 1) - beta * x(o + 2);
    }

    // Equal masses and rod lengths. The linearized form is the small-angle limit:
    // th1'' = -2(g/l) th1 + (g/l) th2,  th2'' = 2(g/l) th1 - 2(g/l) th2.
    void double_pendulum(const Vector& x, Vector& dx) const {
        const double g = c_[0], l = c_[1];
        const double th1 = x(0), th2 = x(1), w1 = x(2), w2 = x(3);
        dx(0) = w1;
        dx(1) = w2;
        if (c_[2] != 0.0) {
            dx(2) = -2.0 * g / l * th1 + g / l * th2;
            dx(3) = 2.0 * g / l * th1 - 2.0 * g / l * th2;
            return;
        }
        const double d = th1 - th2;
        const double den = l * (3.0 - std::cos(2.0 * d));
        dx(2) = (-3.0 * g * std::sin(th1) - g * std::sin(th1 - 2.0 * th2) -
                 2.0 * std::sin(d) * (w2 * w2 * l + w1 * w1 * l * std::cos(d))) /
                den;
        dx(3) = 2.0 * std::sin(d) * (2.0 * w1 * w1 * l + 2.0 * g * std::cos(th1) + w2 * w2 * l * std::cos(d)) / den;
    }

    static double ratio(double num, double den, const char* term) {
        if (den == 0.0) throw std::domain_error(std::string("CellCycle: singular denominator in ") + term);
        return num / den;
    }

    void cell_cycle(const Vector& x, Vector& dx) const {
        const double vi1 = c_[0], vi2 = c_[1], Kim1 = c_[2], Kim2 = c_[3], vd1 = c_[4], vd2 = c_[5];
        const double Kd1 = c_[6], Kd2 = c_[7], kd1 = c_[8], kd2 = c_[9];
        const double K1 = c_[10], K2 = c_[11], K3 = c_[12], K4 = c_[13];
        const double H1 = c_[14], H2 = c_[15], H3 = c_[16], H4 = c_[17];
        const double Kc1 = c_[18], Kc2 = c_[19], VM1 = c_[20], VM3 = c_[21], UM1 = c_[22], UM3 = c_[23];
        const double V2 = c_[24], V4 = c_[25], U2 = c_[26], U4 = c_[27], scale = c_[28];
        const double C1 = x(0), M1 = x(1), X1 = x(2), C2 = x(3), M2 = x(4), X2 = x(5);

        const double V1 = ratio(C1, Kc1 + C1, "Kc1 + C1") * VM1;
        const double V3 = M1 * VM3;
        const double U1 = ratio(C2, Kc2 + C2, "Kc2 + C2") * UM1;
        const double U3 = M2 * UM3;

        dx(0) = ratio(vi1 * Kim1, Kim1 + M2, "Kim1 + M2") - ratio(vd1 * X1 * C1, Kd1 + C1, "Kd1 + C1") - kd1 * C1;
        dx(1) = ratio(V1 * (1.0 - M1), K1 + (1.0 - M1), "K1 + (1 - M1)") - ratio(V2 * M1, K2 + M1, "K2 + M1");
        dx(2) = ratio(V3 * (1.0 - X1), K3 + (1.0 - X1), "K3 + (1 - X1)") - ratio(V4 * X1, K4 + X1, "K4 + X1");
        dx(3) = ratio(vi2 * Kim2, Kim2 + M1, "Kim2 + M1") - ratio(vd2 * X2 * C2, Kd2 + C2, "Kd2 + C2") - kd2 * C2;
        dx(4) = ratio(U1 * (1.0 - M2), H1 + (1.0 - M2), "H1 + (1 - M2)") - ratio(U2 * M2, H2 + M2, "H2 + M2");
        dx(5) = ratio(U3 * (1.0 - X2), H3 + (1.0 - X2), "H3 + (1 - X2)") - ratio(U4 * X2, H4 + X2, "H4 + X2");
        dx *= scale;
    }

    void hopfield(const Vector& x, Vector& dx) const {
        double act[6];
        for (int j = 0; j < 6; ++j) act[j] = std::tanh(x(j));
        for (int i = 0; i < 6; ++i) {
            double s = -x(i);
            for (int j = 0; j < 6; ++j) s += c_[static_cast<std::size_t>(6 * i + j)] * act[j];
            dx(i) = s;
        }
    }

    // Regularized point rotlet at (b, 0) inside a disk of radius a, with its
    // circle image at (a^2 / b, 0) carrying the opposite strength.
    void rotlet_velocity(double px, double py, double b, double& u, double& v) const {
        const double a = c_[0], strength = c_[2], core2 = c_[6] * c_[6];
        const double k = strength / (2.0 * std::numbers::pi);
        const double dx = px - b;
        const double r2 = dx * dx + py * py + core2;
        const double ix = px - a * a / b;
        const double i2 = ix * ix + py * py + core2;
        u = k * (-py / r2 + py / i2);
        v = k * (dx / r2 - ix / i2);
    }

    void blinking_rotlet(const Vector& x, double t, Vector& dx) const {
        const double b = c_[1], tau = c_[3], stiffness = c_[4], kappa = c_[5];
        const double protocol = 0.5 + 0.5 * std::tanh(stiffness * std::sin(2.0 * std::numbers::pi * t / tau));
        double u1, v1, u2, v2;
        rotlet_velocity(x(0), x(1), b, u1, v1);
        rotlet_velocity(x(0), x(1), -b, u2, v2);
        const double w = x(2);
        dx(0) = w * u1 + (1.0 - w) * u2;
        dx(1) = w * v1 + (1.0 - w) * v2;
        dx(2) = kappa * (protocol - w);
    }

    SystemKind kind_;
    Index dim_;
    std::array<double, 36> c_{};
};

/// d(state)/dt at time t.
inline Vector eval_rhs(const OdeSystem& system, const Vector& state, double t) {
    Vector dx;
    const CompiledRhs rhs(system);
    rhs(state, t, dx);
    return dx;
}

namespace detail {

struct Rk4Workspace {
    Vector k1, k2, k3, k4, tmp;
};

template <typename Rhs>
void rk4_advance(const Rhs& rhs, Vector& x, double t, double dt, Rk4Workspace& w) {
    const auto check = [](const Vector& v, const char* stage) {
        if (!v.allFinite()) throw DivergenceError(std::string("non-finite RK4 stage ") + stage);
    };
    rhs(x, t, w.k1);
    check(w.k1, "k1");
    w.tmp = x + 0.5 * dt * w.k1;
    rhs(w.tmp, t + 0.5 * dt, w.k2);
    check(w.k2, "k2");
    w.tmp = x + 0.5 * dt * w.k2;
    rhs(w.tmp, t + 0.5 * dt, w.k3);
    check(w.k3, "k3");
    w.tmp = x + dt * w.k3;
    rhs(w.tmp, t + dt, w.k4);
    check(w.k4, "k4");
    x += (dt / 6.0) * (w.k1 + 2.0 * w.k2 + 2.0 * w.k3 + w.k4);
    check(x, "update");
}

}  // namespace detail

/// One classical fourth-order Runge-Kutta step of x' = f(x, t), where
/// rhs(x, t, dx) writes f into dx.
template <typename Rhs>
Vector rk4_step(const Rhs& rhs, const Vector& state, double t, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("rk4_step: dt must be positive");
    detail::Rk4Workspace w;
    Vector x = state;
    detail::rk4_advance(rhs, x, t, dt, w);
    return x;
}

inline Vector rk4_step(const OdeSystem& system, const Vector& state, double t, double dt) {
    return rk4_step(CompiledRhs(system), state, t, dt);
}

struct IntegratorConfig {
    double dt = 0.05;  // 20 samples per time unit
    Index steps = 60000;
    std::uint64_t seed = 3001;
    Index transient_steps = 1000;

    void validate() const {
        if (!(dt > 0.0)) throw std::invalid_argument("integrator dt must be positive");
        if (steps < 1) throw std::invalid_argument("integrator steps must be at least 1");
        if (transient_steps < 0) throw std::invalid_argument("transient steps must be non-negative");
    }
};

/// Relative size of the seeded initial-condition perturbation.
inline constexpr double kInitialPerturbation = 1e-3;

inline Vector perturbed_initial_state(const OdeSystem& system, std::uint64_t seed) {
    Rng rng(mix_seed(seed));
    Vector x = system.init;
    for (Index i = 0; i < x.size(); ++i) x(i) *= 1.0 + kInitialPerturbation * rng.uniform(-1.0, 1.0);
    return x;
}

/// Integrates from the seeded perturbed initial state, drops `transient_steps`
/// states and records the next `steps` states as channels ch0..ch{dim-1}.
inline TimeSeries integrate(const OdeSystem& system, const IntegratorConfig& cfg) {
    cfg.validate();
    CompiledRhs rhs(system);
    if (!system.init.allFinite()) throw std::invalid_argument(system.name + ": non-finite initial state");
    Vector x = perturbed_initial_state(system, cfg.seed);
    detail::Rk4Workspace w;
    Matrix out(system.dim, cfg.steps);
    const Index total = cfg.transient_steps + cfg.steps;
    for (Index step = 0; step < total; ++step) {
        if (step >= cfg.transient_steps) out.col(step - cfg.transient_steps) = x;
        if (step + 1 == total) break;
        try {
            detail::rk4_advance(rhs, x, static_cast<double>(step) * cfg.dt, cfg.dt, w);
        } catch (const DivergenceError& e) {
            throw DivergenceError(system.name + ": trajectory diverged at step " + std::to_string(step + 1) + " (" +
                                  e.what() + ")");
        }
    }
    return TimeSeries{system.name, default_channel_names(system.dim), std::move(out), cfg.dt};
}

/// Channel-independent surrogate: channel c comes from its own run with a seed
/// derived from (cfg.seed, c) and an extra transient drawn from
/// [min_shift, max_shift) steps, so channels keep their own dynamics but lose
/// any alignment with each other.
inline TimeSeries channel_shift_surrogate(const OdeSystem& system, const IntegratorConfig& cfg,
                                          Index min_shift = 1000, Index max_shift = 20000) {
    if (min_shift < 0 || max_shift <= min_shift) throw std::invalid_argument("invalid surrogate shift range");
    Matrix values(system.dim, cfg.steps);
    for (Index c = 0; c < system.dim; ++c) {
        const std::uint64_t seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(c) + 1, 0x5u);
        Rng rng(seed);
        IntegratorConfig run = cfg;
        run.seed = seed;
        run.transient_steps =
            cfg.transient_steps + min_shift + static_cast<Index>(rng.below(static_cast<std::uint64_t>(max_shift - min_shift)));
        values.row(c) = integrate(system, run).values.row(c);
    }
    return TimeSeries{system.name + "-surrogate", default_channel_names(system.dim), std::move(values), cfg.dt};
}

}  // namespace tsf
