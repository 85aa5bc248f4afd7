#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace modfun {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Uniformly sampled vector signal. Column k of values() is the sample at t0 + k*dt.
class SampledSignal {
public:
    SampledSignal(double t0, double dt, Matrix values);

    static SampledSignal zeros(double t0, double dt, int dim, int length);
    /// Samples of f(t) at t0 + k*dt, k = 0..length-1.
    template <class F>
    static SampledSignal from_function(double t0, double dt, int dim, int length, F&& f) {
        Matrix values(dim, length);
        for (int k = 0; k < length; ++k) values.col(k) = f(t0 + k * dt);
        return SampledSignal(t0, dt, std::move(values));
    }

    double t0() const noexcept { return t0_; }
    double dt() const noexcept { return dt_; }
    int dim() const noexcept { return static_cast<int>(values_.rows()); }
    int size() const noexcept { return static_cast<int>(values_.cols()); }
    double time(int k) const noexcept { return t0_ + k * dt_; }
    /// Time of the last sample.
    double end_time() const noexcept { return time(size() - 1); }

    auto sample(int k) const { return values_.col(k); }
    auto sample(int k) { return values_.col(k); }
    const Matrix& values() const noexcept { return values_; }
    Matrix& values() noexcept { return values_; }

    /// Scalar channel view, for dim() == 1 signals.
    double operator[](int k) const { return values_(0, k); }

    /// Index of the sample nearest to t (not clamped).
    int nearest_index(double t) const;

private:
    double t0_;
    double dt_;
    Matrix values_;
};

struct Impulse {
    double time;
    Vector weight;
};

/// Dirac comb plus an optional sampled density. This is the representable class of
/// distributional modulating functions: sum_i w_i delta_{t_i} + rho(t).
class ImpulsiveSignal {
public:
    ImpulsiveSignal(int dim, std::vector<Impulse> impulses, std::optional<SampledSignal> density);

    static ImpulsiveSignal delta(double time, Vector weight);
    static ImpulsiveSignal from_density(SampledSignal density);
    static ImpulsiveSignal zero(int dim);

    int dim() const noexcept { return dim_; }
    const std::vector<Impulse>& impulses() const noexcept { return impulses_; }
    const std::optional<SampledSignal>& density() const noexcept { return density_; }

    /// Right end of the support (largest impulse time or last density sample time).
    double support_end() const;

private:
    int dim_;
    std::vector<Impulse> impulses_;
    std::optional<SampledSignal> density_;
};

/// Trapezoidal weight of sample j on a grid of `count` samples (1/2 at both ends).
inline double trapezoid_weight(int j, int count) noexcept {
    if (count < 2) return 0.0;
    return (j == 0 || j == count - 1) ? 0.5 : 1.0;
}

/// True when a and b agree to a relative 1e-9, the tolerance used for step-size matching.
bool same_step(double a, double b) noexcept;

}  // namespace modfun
