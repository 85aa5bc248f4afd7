#pragma once

#include "modfun/signal.hpp"

namespace modfun {

/// Fixed-step ring buffer of the most recent samples of a vector signal. Starts zero-filled,
/// so lags older than the first push read as zero.
class SignalBuffer {
public:
    SignalBuffer(int dim, int capacity, double dt, double start_time = 0.0);

    /// Appends a sample; head_time() advances by exactly dt.
    void push(const Eigen::Ref<const Vector>& sample);
    /// Overwrites the newest sample in place.
    void replace_newest(const Eigen::Ref<const Vector>& sample);

    /// Pushes the sample, then returns dot(kernel).
    double push_and_dot(const Eigen::Ref<const Vector>& sample, const SampledSignal& kernel);

    /// Trapezoidal int_0^{T_k} <x(head - tau), kernel(tau)> dtau with T_k the kernel length.
    double dot(const SampledSignal& kernel) const;
    /// Impulses contribute <w, x(head - s dt)> at their snapped lag s; density as above.
    double dot(const ImpulsiveSignal& kernel) const;

    /// Sample at head_time() - lag*dt.
    Eigen::Ref<const Vector> lag(int lag) const;

    int dim() const noexcept { return dim_; }
    int capacity() const noexcept { return capacity_; }
    double dt() const noexcept { return dt_; }
    long pushed() const noexcept { return pushed_; }
    /// Time of the first pushed sample.
    double start_time() const noexcept { return start_time_; }
    /// Time of the newest sample; start_time - dt before the first push.
    double head_time() const noexcept { return start_time_ + static_cast<double>(pushed_ - 1) * dt_; }
    /// Time of the oldest retained sample.
    double covered_from() const noexcept;

    /// Contents as a SampledSignal ordered oldest to newest (capacity samples).
    SampledSignal snapshot() const;

private:
    int slot(int lag) const noexcept;
    int snapped_lag(double time) const;

    int dim_;
    int capacity_;
    double dt_;
    double start_time_;
    long pushed_ = 0;
    int head_ = -1;
    Matrix storage_;
};

}  // namespace modfun
