#include "modfun/wave.hpp"

#include <cmath>

#include "modfun/convolution.hpp"
#include "modfun/errors.hpp"

namespace modfun::wave {

namespace {

// Characteristic variables of the primal string: a = p - q travels right, b = p + q left.
struct Characteristics {
    Vector a;
    Vector b;
};

double trapezoid_norm2(const Vector& v, double dx) {
    const int n = static_cast<int>(v.size());
    double acc = 0.5 * (v(0) * v(0) + v(n - 1) * v(n - 1));
    for (int i = 1; i < n - 1; ++i) acc += v(i) * v(i);
    return acc * dx;
}

// One upwind step of both families with Courant number lambda in (0, 1].
void transport(Vector& right, Vector& left, double lambda) {
    const int n = static_cast<int>(right.size());
    for (int i = n - 1; i >= 1; --i) right(i) = (1.0 - lambda) * right(i) + lambda * right(i - 1);
    for (int i = 0; i < n - 1; ++i) left(i) = (1.0 - lambda) * left(i) + lambda * left(i + 1);
}

}  // namespace

StringGrid make_grid(double length, int cells, double xi0) {
    if (!(length > 0.0)) throw ValidationError("wave grid: length must be positive");
    if (cells < 2) throw ValidationError("wave grid: need at least 2 cells");
    StringGrid g;
    g.length = length;
    g.cells = cells;
    g.dx = length / cells;
    g.xi0_index = static_cast<int>(std::lround(xi0 / g.dx));
    if (!(xi0 > 0.0 && xi0 < length) || g.xi0_index <= 0 || g.xi0_index >= cells)
        throw ValidationError("wave grid: xi0 must lie strictly inside (0, length)");
    return g;
}

StringState::StringState(StringGrid grid)
    : grid_(grid), q_(Vector::Zero(grid.nodes())), p_(Vector::Zero(grid.nodes())) {}

StringState::StringState(StringGrid grid, Vector q, Vector p) : grid_(grid), q_(std::move(q)), p_(std::move(p)) {
    if (q_.size() != grid_.nodes() || p_.size() != grid_.nodes())
        throw DimensionError("string state: q and p need one value per node");
}

StringState StringState::from_functions(StringGrid grid, const std::function<double(double)>& q0,
                                        const std::function<double(double)>& p0, double u0) {
    StringState s(grid);
    for (int i = 0; i < grid.nodes(); ++i) {
        s.q_(i) = q0(i * grid.dx);
        s.p_(i) = p0(i * grid.dx);
    }
    s.q_(0) = -u0;
    s.p_(grid.cells) = 0.0;
    return s;
}

double StringState::energy() const { return 0.5 * (trapezoid_norm2(q_, grid_.dx) + trapezoid_norm2(p_, grid_.dx)); }

Vector StringState::stacked() const {
    Vector out(2 * q_.size());
    out << q_, p_;
    return out;
}

StringState step_string(const StringState& s, double u, double dt) {
    const double dx = s.grid_.dx;
    if (!(dt > 0.0)) throw ValidationError("step_string: dt must be positive");
    if (dt > dx * (1.0 + 1e-12)) throw CflViolation("step_string: dt exceeds dx (CFL)");
    const double lambda = std::min(1.0, dt / dx);
    Characteristics c{s.p_ - s.q_, s.p_ + s.q_};
    transport(c.a, c.b, lambda);
    const int last = s.grid_.cells;
    c.b(last) = -c.a(last);
    c.a(0) = c.b(0) + 2.0 * u;
    StringState out(s.grid_);
    out.q_ = 0.5 * (c.b - c.a);
    out.p_ = 0.5 * (c.a + c.b);
    return out;
}

StringPlant::StringPlant(StringState initial, double dt) : current_(std::move(initial)), dt_(dt) {
    if (dt_ > current_.grid().dx * (1.0 + 1e-12)) throw CflViolation("string plant: dt exceeds dx (CFL)");
    if (!(dt_ > 0.0)) throw ValidationError("string plant: dt must be positive");
}

StepPreview StringPlant::preview() const {
    // The measurement node is interior, so the pending input never reaches it within one step.
    const double y = started_ ? step_string(current_, 0.0, dt_).output() : current_.output();
    return {Vector::Constant(1, y), Matrix::Zero(1, 1)};
}

Vector StringPlant::commit(const Vector& u) {
    if (u.size() != 1) throw DimensionError("string plant: scalar input expected");
    if (started_) {
        current_ = step_string(current_, u(0), dt_);
    } else {
        Vector q = current_.q();
        q(0) = -u(0);
        current_ = StringState(current_.grid(), std::move(q), current_.p());
        started_ = true;
    }
    return Vector::Constant(1, current_.output());
}

WaveNullControl wave_null_control(const SampledSignal& alpha, const StringGrid& grid, double t_end) {
    const double dx = grid.dx;
    const int i0 = grid.xi0_index;
    const int N = grid.cells;
    if (alpha.dim() != 1) throw DimensionError("wave null control: alpha must be scalar");
    if (!same_step(alpha.dt(), dx)) throw ValidationError("wave null control: alpha.dt() must equal dx");
    if (std::abs(alpha.t0()) > 1e-12) throw ValidationError("wave null control: alpha must start at t = 0");
    if (alpha[0] != 0.0) throw SupportViolation("wave null control: alpha(0) must vanish");
    int last_nonzero = 0;
    for (int k = 0; k < alpha.size(); ++k)
        if (alpha[k] != 0.0) last_nonzero = k;
    if (last_nonzero >= i0) throw SupportViolation("wave null control: supp alpha must lie in (0, xi0)");

    const int steps = static_cast<int>(std::floor(t_end / dx + 1e-9));
    auto alpha_at = [&](int k) { return k < alpha.size() && k >= 0 ? alpha[k] : 0.0; };

    // eta(t) = -alpha(t - xi0), mu(t) = alpha(t), both as densities starting at t = 0.
    const int eta_len = i0 + last_nonzero + 2;
    Matrix eta_vals = Matrix::Zero(1, eta_len);
    for (int k = i0; k < eta_len; ++k) eta_vals(0, k) = -alpha_at(k - i0);
    Matrix mu_vals = Matrix::Zero(1, last_nonzero + 2);
    for (int k = 0; k < mu_vals.cols(); ++k) mu_vals(0, k) = alpha_at(k);
    auto eta_at = [&](int k) { return k < eta_len ? eta_vals(0, k) : 0.0; };

    // Adjoint characteristics: A = phi_p + phi_q travels right, B = phi_p - phi_q left, so phi_q
    // is minus the strain of phi_w. Node i0
    // holds the values arriving from either side; the point force eta jumps both by eta.
    Vector A = Vector::Zero(N + 1);
    Vector B = Vector::Zero(N + 1);
    Matrix phi_w(N + 1, steps + 1);
    Matrix mu_sim(1, steps + 1);
    double residual = 0.0;
    double transmitted = 0.0;
    const int quiet_from = i0 + last_nonzero;

    auto record = [&](int k) {
        const Vector phi_p = 0.5 * (A + B);
        const Vector phi_q = 0.5 * (A - B);
        double acc = 0.0;
        phi_w(N, k) = 0.0;
        for (int i = N - 1; i >= 0; --i) {
            acc += 0.5 * dx * (phi_q(i) + phi_q(i + 1));
            phi_w(i, k) = acc;
        }
        mu_sim(0, k) = phi_p(0);
        if (k >= quiet_from)
            residual = std::max(residual, std::sqrt(trapezoid_norm2(phi_q, dx) + trapezoid_norm2(phi_p, dx)));
        if (k == quiet_from) {
            Vector tq = phi_q.tail(N + 1 - i0);
            Vector tp = phi_p.tail(N + 1 - i0);
            // The node at xi0 carries the incoming (left) value of A; use the outgoing one.
            tq(0) = 0.5 * (A(i0) + eta_at(k) - B(i0));
            tp(0) = 0.5 * (A(i0) + eta_at(k) + B(i0));
            transmitted = std::sqrt(trapezoid_norm2(tq, dx) + trapezoid_norm2(tp, dx));
        }
    };

    A(0) = B(0) + 2.0 * alpha_at(0);
    record(0);
    for (int k = 0; k < steps; ++k) {
        const double jump = eta_at(k);
        const double crossing_right = A(i0) + jump;
        const double crossing_left = B(i0) + jump;
        transport(A, B, 1.0);
        A(i0 + 1) = crossing_right;
        B(i0 - 1) = crossing_left;
        B(N) = -A(N);
        A(0) = B(0) + 2.0 * alpha_at(k + 1);
        record(k + 1);
    }

    return {ImpulsiveSignal::from_density(SampledSignal(0.0, dx, std::move(eta_vals))),
            ImpulsiveSignal::from_density(SampledSignal(0.0, dx, std::move(mu_vals))),
            SampledSignal(0.0, dx, std::move(phi_w)),
            SampledSignal(0.0, dx, std::move(mu_sim)),
            residual,
            transmitted};
}

ModulatingPair wave_modulating_pair(const StringGrid& grid) {
    ModulatingPair pair{ImpulsiveSignal::delta(grid.xi0(), Vector::Constant(1, -1.0)),
                        ImpulsiveSignal::delta(0.0, Vector::Constant(1, 1.0)),
                        grid.xi0(),
                        Vector(),
                        "p(0)",
                        0.0,
                        false};
    return pair;
}

WaveRun wave_stabilize(const StringState& s0, double gain_k, double t_end, std::optional<double> dt) {
    const StringGrid& grid = s0.grid();
    const double h = dt.value_or(grid.dx);
    if (!(gain_k >= 0.0)) throw ValidationError("wave_stabilize: gain k must be >= 0");
    StringPlant plant(s0, h);
    const ModulatingPair pair = wave_modulating_pair(grid);
    const FeedbackRealizer fb({pair}, Matrix::Constant(1, 1, -gain_k), pair.horizon);

    const int samples = static_cast<int>(std::floor(t_end / h + 1e-9)) + 1;
    const SampledSignal warmup = SampledSignal::zeros(0.0, h, 1, samples);
    Matrix energy(1, samples);
    Matrix left(1, samples);
    ClosedLoopOptions options;
    options.record_states = false;
    options.on_sample = [&](int k, const SampledPlant&) {
        energy(0, k) = plant.current().energy();
        left(0, k) = plant.current().left_velocity();
    };
    Trajectory traj = run_closed_loop(plant, fb, warmup, t_end, options);

    const SampledSignal z_mu = convolve_impulsive(pair.mu, traj.inputs).result;
    const SampledSignal z_eta = convolve_impulsive(pair.eta, traj.outputs).result;
    Matrix z = z_mu.values() - z_eta.values();

    return {std::move(traj.inputs),
            std::move(traj.outputs),
            SampledSignal(0.0, h, std::move(z)),
            SampledSignal(0.0, h, std::move(left)),
            SampledSignal(0.0, h, std::move(energy)),
            plant.current()};
}

std::function<double(double)> gaussian(double center, double width) {
    return [center, width](double x) {
        const double r = (x - center) / width;
        return std::exp(-r * r);
    };
}

}  // namespace modfun::wave
