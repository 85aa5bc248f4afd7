#pragma once

#include <functional>
#include <optional>

#include "modfun/closed_loop.hpp"
#include "modfun/modulating_pair.hpp"

namespace modfun::wave {

/// Uniform nodes xi_i = i*dx, i = 0..cells, on [0, length]. The measurement point is snapped
/// to the nearest node.
struct StringGrid {
    double length = 1.0;
    int cells = 512;
    double dx = 1.0 / 512;
    int xi0_index = 154;

    double xi0() const noexcept { return xi0_index * dx; }
    int nodes() const noexcept { return cells + 1; }
};

/// Throws ValidationError unless length > 0, cells >= 2 and 0 < xi0 < length after snapping.
StringGrid make_grid(double length, int cells, double xi0);

/// Strain q = w' and velocity p = w_t at the nodes of a string with unit wave speed, forced at
/// xi = 0 (q(0) = -u), clamped at xi = length (p = 0), observed by y = p(xi0).
class StringState {
public:
    explicit StringState(StringGrid grid);
    StringState(StringGrid grid, Vector q, Vector p);

    /// Samples q0, p0 at the nodes and imposes the boundary conditions for input u0.
    static StringState from_functions(StringGrid grid, const std::function<double(double)>& q0,
                                      const std::function<double(double)>& p0, double u0 = 0.0);

    const StringGrid& grid() const noexcept { return grid_; }
    const Vector& q() const noexcept { return q_; }
    const Vector& p() const noexcept { return p_; }

    /// y = p(xi0).
    double output() const { return p_(grid_.xi0_index); }
    /// p(0), the velocity at the forced end.
    double left_velocity() const { return p_(0); }
    /// E = 1/2 int q^2 + p^2, trapezoidal over the nodes.
    double energy() const;
    /// Concatenated (q, p).
    Vector stacked() const;

private:
    friend StringState step_string(const StringState&, double, double);
    StringGrid grid_;
    Vector q_;
    Vector p_;
};

/// One step of the characteristic (upwind) scheme; exact transport when dt == dx.
/// Throws CflViolation when dt > dx.
StringState step_string(const StringState& s, double u, double dt);

/// StringState as a SampledPlant for run_closed_loop.
class StringPlant final : public SampledPlant {
public:
    StringPlant(StringState initial, double dt);

    int input_dim() const override { return 1; }
    int output_dim() const override { return 1; }
    double dt() const override { return dt_; }
    StepPreview preview() const override;
    Vector commit(const Vector& u) override;
    Vector state() const override { return current_.stacked(); }

    const StringState& current() const noexcept { return current_; }

private:
    StringState current_;
    double dt_;
    bool started_ = false;
};

struct WaveNullControl {
    ImpulsiveSignal eta;
    ImpulsiveSignal mu;
    /// Adjoint displacement phi_w(t, xi) = int_xi^l phi_q(t, s) ds at the nodes (phi_q is minus its strain).
    SampledSignal phi_w;
    /// Adjoint outputs phi_p(t, 0) produced by the simulation.
    SampledSignal mu_simulated;
    /// sup over t >= xi0 + (end of supp alpha) of the L2 norm of (phi_q, phi_p).
    double residual = 0.0;
    /// L2 norm on [xi0, l] at t = xi0 + (end of supp alpha), once the force has acted. Zero when
    /// t_end stops earlier.
    double transmitted = 0.0;
};

/// eta(t) = -alpha(t - xi0), mu(t) = alpha(t), with alpha supported in (0, xi0). The adjoint
/// string (point force eta at xi0, boundary input alpha at 0) is simulated on `grid` with
/// dt = dx = alpha.dt() until t_end, and the residual reported.
WaveNullControl wave_null_control(const SampledSignal& alpha, const StringGrid& grid, double t_end);

/// eta = -delta_{xi0}, mu = delta_0, horizon xi0: the limit of wave_null_control for alpha -> delta.
ModulatingPair wave_modulating_pair(const StringGrid& grid);

struct WaveRun {
    SampledSignal u;
    SampledSignal y;
    /// (u*mu - y*eta)(t) computed from the I/O history.
    SampledSignal z;
    SampledSignal left_velocity;
    SampledSignal energy;
    StringState final_state;
};

/// Closed loop u = -k z on [xi0, t_end) with z realized by wave_modulating_pair; u = 0 before.
/// dt defaults to dx.
WaveRun wave_stabilize(const StringState& s0, double gain_k, double t_end, std::optional<double> dt = std::nullopt);

/// Gaussian bump exp(-((xi - center)/width)^2).
std::function<double(double)> gaussian(double center, double width);

}  // namespace modfun::wave
