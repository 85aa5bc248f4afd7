#include "modfun/estimator.hpp"

#include <cmath>

#include "modfun/errors.hpp"
#include "parallel.hpp"

namespace modfun {

int required_capacity(const ModulatingPair& pair, double dt) {
    return static_cast<int>(std::lround(std::max(pair.horizon, std::max(pair.eta.support_end(), pair.mu.support_end())) / dt)) + 1;
}

double estimate_functional(const ModulatingPair& pair, const SignalBuffer& u_hist, const SignalBuffer& y_hist,
                           double t) {
    const double dt = u_hist.dt();
    const double tol = 1e-6 * dt;
    if (t < pair.horizon - tol) throw HorizonNotFilled("estimate: t is before the horizon is filled");
    if (std::abs(u_hist.head_time() - t) > tol || std::abs(y_hist.head_time() - t) > tol)
        throw ValidationError("estimate: buffers are not positioned at t");
    if (t - u_hist.start_time() < pair.horizon - tol || t - y_hist.start_time() < pair.horizon - tol)
        throw HorizonNotFilled("estimate: history does not cover [t - T, t]");
    return u_hist.dot(pair.mu) - y_hist.dot(pair.eta);
}

Estimator::Estimator(std::vector<ModulatingPair> pairs, std::optional<std::vector<Vector>> basis, int input_dim,
                     int output_dim, double dt, double start_time)
    : pairs_(std::move(pairs)),
      basis_(std::move(basis)),
      horizon_(pairs_.empty() ? 0.0 : pairs_.front().horizon),
      u_hist_(input_dim, 1, dt, start_time),
      y_hist_(output_dim, 1, dt, start_time) {
    if (pairs_.empty()) throw ValidationError("estimator: need at least one modulating pair");
    int capacity = 1;
    for (const auto& pair : pairs_) {
        validate_pair(pair, input_dim, output_dim);
        if (std::abs(pair.horizon - horizon_) > 1e-9 * horizon_)
            throw ValidationError("estimator: all pairs must share the horizon");
        capacity = std::max(capacity, required_capacity(pair, dt));
    }
    if (basis_) {
        if (basis_->size() != pairs_.size()) throw DimensionError("estimator: one basis vector per pair");
        if (gram_deviation(*basis_) > 1e-10) throw ValidationError("estimator: basis is not orthonormal");
    }
    u_hist_ = SignalBuffer(input_dim, capacity, dt, start_time);
    y_hist_ = SignalBuffer(output_dim, capacity, dt, start_time);
}

void Estimator::push(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& y) {
    u_hist_.push(u);
    y_hist_.push(y);
}

Vector Estimator::coefficients(double t) const {
    const int count = static_cast<int>(pairs_.size());
    if (t < start_time() + horizon_ - 1e-6 * u_hist_.dt())
        throw HorizonNotFilled("estimator: t is before the horizon is filled");
    Vector c(count);
    detail::parallel_for(count, [&](int j) { c(j) = estimate_functional(pairs_[j], u_hist_, y_hist_, t); });
    return c;
}

Reconstruction Estimator::reconstruct(double t) const {
    if (!basis_) throw ValidationError("estimator: reconstruction needs a basis");
    Reconstruction out{Vector::Zero(basis_->front().size()), coefficients(t)};
    for (std::size_t j = 0; j < basis_->size(); ++j) out.state += out.coefficients(j) * (*basis_)[j];
    return out;
}

double gram_deviation(const std::vector<Vector>& basis) {
    double dev = 0.0;
    for (std::size_t i = 0; i < basis.size(); ++i)
        for (std::size_t j = 0; j <= i; ++j)
            dev = std::max(dev, std::abs(basis[i].dot(basis[j]) - (i == j ? 1.0 : 0.0)));
    return dev;
}

Reconstruction reconstruct_state(const Estimator& est, double t) { return est.reconstruct(t); }

}  // namespace modfun
