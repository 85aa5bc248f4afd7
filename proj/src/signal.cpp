#include "modfun/signal.hpp"

#include <cmath>

#include "modfun/errors.hpp"
#include "modfun/modulating_pair.hpp"

namespace modfun {

SampledSignal::SampledSignal(double t0, double dt, Matrix values) : t0_(t0), dt_(dt), values_(std::move(values)) {
    if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw ValidationError("sampled signal: dt must be positive");
    if (values_.rows() < 1) throw DimensionError("sampled signal: dimension must be at least 1");
}

SampledSignal SampledSignal::zeros(double t0, double dt, int dim, int length) {
    return SampledSignal(t0, dt, Matrix::Zero(dim, length));
}

int SampledSignal::nearest_index(double t) const {
    return static_cast<int>(std::lround((t - t0_) / dt_));
}

bool same_step(double a, double b) noexcept {
    return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b));
}

ImpulsiveSignal::ImpulsiveSignal(int dim, std::vector<Impulse> impulses, std::optional<SampledSignal> density)
    : dim_(dim), impulses_(std::move(impulses)), density_(std::move(density)) {
    if (dim_ < 1) throw DimensionError("impulsive signal: dimension must be at least 1");
    double last = -1.0;
    for (const auto& imp : impulses_) {
        if (imp.weight.size() != dim_) throw DimensionError("impulsive signal: weight dimension mismatch");
        if (imp.time < 0.0) throw ValidationError("impulsive signal: impulse time must be >= 0");
        if (imp.time <= last) throw ValidationError("impulsive signal: impulse times must increase strictly");
        last = imp.time;
    }
    if (density_) {
        if (density_->dim() != dim_) throw DimensionError("impulsive signal: density dimension mismatch");
        if (density_->t0() != 0.0) throw ValidationError("impulsive signal: density must start at t = 0");
    }
}

ImpulsiveSignal ImpulsiveSignal::delta(double time, Vector weight) {
    const int dim = static_cast<int>(weight.size());
    return ImpulsiveSignal(dim, {Impulse{time, std::move(weight)}}, std::nullopt);
}

ImpulsiveSignal ImpulsiveSignal::from_density(SampledSignal density) {
    const int dim = density.dim();
    return ImpulsiveSignal(dim, {}, std::move(density));
}

ImpulsiveSignal ImpulsiveSignal::zero(int dim) { return ImpulsiveSignal(dim, {}, std::nullopt); }

double ImpulsiveSignal::support_end() const {
    double end = 0.0;
    if (!impulses_.empty()) end = impulses_.back().time;
    if (density_ && density_->size() > 0) end = std::max(end, density_->end_time());
    return end;
}

void validate_pair(const ModulatingPair& pair, int input_dim, int output_dim) {
    if (pair.mu.dim() != input_dim) throw DimensionError("modulating pair: mu dimension does not match input");
    if (pair.eta.dim() != output_dim) throw DimensionError("modulating pair: eta dimension does not match output");
    if (!(pair.horizon > 0.0)) throw ValidationError("modulating pair: horizon must be positive");
    const double slack = 1e-9 * std::max(1.0, pair.horizon);
    if (pair.eta.support_end() > pair.horizon + slack || pair.mu.support_end() > pair.horizon + slack)
        throw SupportViolation("modulating pair: kernel support exceeds the horizon");
}

}  // namespace modfun
