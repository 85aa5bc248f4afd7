#pragma once

#include "modfun/signal.hpp"

namespace modfun {

/// (v*w)(t_k) = int_0^{t_k} <v(tau), w(t_k - tau)> dtau by the trapezoidal rule on the
/// shared grid. Output is scalar, of length min(|v|, |w|), starting at v.t0 + w.t0.
/// Parallel over output samples.
SampledSignal convolve_sampled(const SampledSignal& v, const SampledSignal& w);

/// Single-threaded reference for convolve_sampled; same arithmetic, same summation order.
SampledSignal convolve_sampled_serial(const SampledSignal& v, const SampledSignal& w);

struct ImpulsiveConvolution {
    SampledSignal result;
    /// Largest distance between an impulse time and the grid point it was snapped to.
    double max_snap_error = 0.0;
};

/// (m*v)(t_k) = sum_i <w_i, v(t_k - s_i dt)> + (rho*v)(t_k), where s_i is the impulse time
/// snapped to the nearest grid index and terms with t_k - s_i dt < v.t0 vanish. The density
/// part integrates over [0, min(t_k, end of density)]. Output has the length of v.
ImpulsiveConvolution convolve_impulsive(const ImpulsiveSignal& m, const SampledSignal& v);

}  // namespace modfun
