#include "modfun/convolution.hpp"

#include <cmath>

#include "modfun/errors.hpp"

namespace modfun {

namespace {

void check_compatible(const SampledSignal& v, const SampledSignal& w) {
    if (v.dim() != w.dim()) throw DimensionError("convolution: dimension mismatch");
    if (!same_step(v.dt(), w.dt())) throw ValidationError("convolution: dt mismatch");
}

// Trapezoid over tau in [0, t_k], truncated to the first `kernel_len` samples of `kernel`.
double trapezoid_at(const Matrix& kernel, int kernel_len, const Matrix& signal, int k, double dt) {
    const int last = std::min(k, kernel_len - 1);
    if (last <= 0) return 0.0;
    double acc = 0.5 * (kernel.col(0).dot(signal.col(k)) + kernel.col(last).dot(signal.col(k - last)));
    for (int j = 1; j < last; ++j) acc += kernel.col(j).dot(signal.col(k - j));
    return acc * dt;
}

}  // namespace

SampledSignal convolve_sampled_serial(const SampledSignal& v, const SampledSignal& w) {
    check_compatible(v, w);
    const int len = std::min(v.size(), w.size());
    Matrix out = Matrix::Zero(1, len);
    for (int k = 0; k < len; ++k) out(0, k) = trapezoid_at(v.values(), len, w.values(), k, v.dt());
    return SampledSignal(v.t0() + w.t0(), v.dt(), std::move(out));
}

SampledSignal convolve_sampled(const SampledSignal& v, const SampledSignal& w) {
    check_compatible(v, w);
    const int len = std::min(v.size(), w.size());
    Matrix out = Matrix::Zero(1, len);
    const Matrix& vv = v.values();
    const Matrix& wv = w.values();
    const double dt = v.dt();
#pragma omp parallel for schedule(dynamic, 64)
    for (int k = 0; k < len; ++k) out(0, k) = trapezoid_at(vv, len, wv, k, dt);
    return SampledSignal(v.t0() + w.t0(), dt, std::move(out));
}

ImpulsiveConvolution convolve_impulsive(const ImpulsiveSignal& m, const SampledSignal& v) {
    if (m.dim() != v.dim()) throw DimensionError("impulsive convolution: dimension mismatch");
    const double dt = v.dt();
    const int len = v.size();
    Matrix out = Matrix::Zero(1, len);
    double snap_error = 0.0;

    for (const auto& imp : m.impulses()) {
        const long lag = std::lround(imp.time / dt);
        snap_error = std::max(snap_error, std::abs(imp.time - static_cast<double>(lag) * dt));
        for (long k = lag; k < len; ++k) out(0, k) += imp.weight.dot(v.sample(static_cast<int>(k - lag)));
    }

    if (const auto& rho = m.density()) {
        if (!same_step(rho->dt(), dt)) throw ValidationError("impulsive convolution: density dt mismatch");
        const Matrix& rv = rho->values();
        const Matrix& vv = v.values();
        const int rho_len = rho->size();
#pragma omp parallel for schedule(dynamic, 64)
        for (int k = 0; k < len; ++k) out(0, k) += trapezoid_at(rv, rho_len, vv, k, dt);
    }
    return {SampledSignal(v.t0(), dt, std::move(out)), snap_error};
}

}  // namespace modfun
