#include "modfun/closed_loop.hpp"

#include <cmath>

#include "modfun/errors.hpp"
#include "modfun/estimator.hpp"
#include "modfun/signal_buffer.hpp"

namespace modfun {

LtiPlant::LtiPlant(const LtiSystem& sys, Vector x0, double dt)
    : sys_(sys), prop_(discretize(sys, dt)), dt_(dt), x_(std::move(x0)), u_prev_(Vector::Zero(sys.m())) {
    if (x_.size() != sys_.n()) throw DimensionError("lti plant: x0 dimension mismatch");
}

Vector LtiPlant::pending_free_state() const {
    if (!started_) return x_;
    return prop_.E * x_ + prop_.F0 * u_prev_;
}

StepPreview LtiPlant::preview() const {
    if (!started_) return {sys_.C() * x_, sys_.D()};
    return {sys_.C() * pending_free_state(), sys_.C() * prop_.F1 + sys_.D()};
}

Vector LtiPlant::commit(const Vector& u) {
    if (u.size() != sys_.m()) throw DimensionError("lti plant: input dimension mismatch");
    if (started_) x_ = pending_free_state() + prop_.F1 * u;
    started_ = true;
    u_prev_ = u;
    return sys_.C() * x_ + sys_.D() * u;
}

FeedbackRealizer::FeedbackRealizer(std::vector<ModulatingPair> pairs_, Matrix gain_, double warmup_)
    : pairs(std::move(pairs_)), gain(std::move(gain_)), warmup(warmup_) {
    const auto m = static_cast<Eigen::Index>(pairs.size());
    if (gain.rows() != m || gain.cols() != m) throw DimensionError("feedback: gain must be m x m, one pair per input");
    for (const auto& pair : pairs)
        if (warmup < pair.horizon - 1e-12 * pair.horizon) throw ValidationError("feedback: warmup shorter than a horizon");
}

FeedbackRealizer::FeedbackRealizer(std::vector<ModulatingPair> pairs_, double warmup_)
    : FeedbackRealizer(pairs_, Matrix::Identity(static_cast<Eigen::Index>(pairs_.size()), static_cast<Eigen::Index>(pairs_.size())), warmup_) {}

Vector lag_zero_weight(const ImpulsiveSignal& kernel, double dt) {
    Vector w = Vector::Zero(kernel.dim());
    for (const auto& imp : kernel.impulses())
        if (std::lround(imp.time / dt) == 0) w += imp.weight;
    if (const auto& rho = kernel.density(); rho && rho->size() >= 2) w += 0.5 * dt * rho->sample(0);
    return w;
}

Trajectory run_closed_loop(SampledPlant& plant, const FeedbackRealizer& fb, const SampledSignal& warmup_input,
                           double t_end, const ClosedLoopOptions& options) {
    const int m = plant.input_dim();
    const int p = plant.output_dim();
    const double dt = plant.dt();
    if (static_cast<int>(fb.pairs.size()) != m) throw DimensionError("closed loop: need one pair per input channel");
    if (warmup_input.dim() != m) throw DimensionError("closed loop: warmup input dimension mismatch");
    if (!same_step(warmup_input.dt(), dt)) throw ValidationError("closed loop: warmup input dt mismatch");
    if (!(t_end >= 0.0)) throw ValidationError("closed loop: t_end must be >= 0");

    const int samples = static_cast<int>(std::floor(t_end / dt + 1e-9)) + 1;
    const int warmup_samples = static_cast<int>(std::ceil(fb.warmup / dt - 1e-9));
    if (warmup_input.size() < std::min(warmup_samples, samples))
        throw ValidationError("closed loop: warmup input does not cover [0, warmup)");

    int capacity = 1;
    std::vector<Vector> mu0, eta0;
    for (const auto& pair : fb.pairs) {
        validate_pair(pair, m, p);
        capacity = std::max(capacity, required_capacity(pair, dt));
        mu0.push_back(lag_zero_weight(pair.mu, dt));
        eta0.push_back(lag_zero_weight(pair.eta, dt));
    }
    SignalBuffer u_hist(m, capacity, dt);
    SignalBuffer y_hist(p, capacity, dt);

    const int state_samples = options.record_states ? samples : 1;
    Matrix X(plant.state().size(), state_samples);
    Matrix U(m, samples);
    Matrix Y(p, samples);

    for (int k = 0; k < samples; ++k) {
        const double t = k * dt;
        const StepPreview pre = plant.preview();
        Vector u(m);
        if (k < warmup_samples) {
            u = warmup_input.sample(k);
            u_hist.push(u);
            y_hist.push(pre.free_output + pre.feedthrough * u);
        } else {
            // Estimates with the current input set to zero, then the linear dependence on it.
            u_hist.push(Vector::Zero(m));
            y_hist.push(pre.free_output);
            Vector r(m);
            Matrix J(m, m);
            for (int i = 0; i < m; ++i) {
                r(i) = estimate_functional(fb.pairs[i], u_hist, y_hist, t);
                J.row(i) = mu0[i].transpose() - eta0[i].transpose() * pre.feedthrough;
            }
            const Matrix loop = Matrix::Identity(m, m) - fb.gain * J;
            const Eigen::PartialPivLU<Matrix> lu(loop);
            if (!(std::abs(lu.determinant()) > 1e-12) || lu.rcond() < 1e-12)
                throw AlgebraicLoopError("closed loop: singular algebraic loop (I - gain * J not invertible)");
            u = lu.solve(fb.gain * r);
            u_hist.replace_newest(u);
        }
        const Vector y = plant.commit(u);
        y_hist.replace_newest(y);
        U.col(k) = u;
        Y.col(k) = y;
        if (options.record_states) X.col(k) = plant.state();
        if (options.on_sample) options.on_sample(k, plant);
    }
    if (!options.record_states) X.col(0) = plant.state();

    const double state_t0 = options.record_states ? 0.0 : (samples - 1) * dt;
    return {SampledSignal(state_t0, dt, std::move(X)), SampledSignal(0.0, dt, std::move(U)),
            SampledSignal(0.0, dt, std::move(Y))};
}

}  // namespace modfun
