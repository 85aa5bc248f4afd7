#include "modfun/signal_buffer.hpp"

#include <cmath>

#include "modfun/errors.hpp"

namespace modfun {

SignalBuffer::SignalBuffer(int dim, int capacity, double dt, double start_time)
    : dim_(dim), capacity_(capacity), dt_(dt), start_time_(start_time), storage_(Matrix::Zero(dim, capacity)) {
    if (dim < 1) throw DimensionError("signal buffer: dimension must be at least 1");
    if (capacity < 1) throw ValidationError("signal buffer: capacity must be at least 1");
    if (!(dt > 0.0)) throw ValidationError("signal buffer: dt must be positive");
}

int SignalBuffer::slot(int lag) const noexcept {
    int s = head_ - lag;
    s %= capacity_;
    return s < 0 ? s + capacity_ : s;
}

void SignalBuffer::push(const Eigen::Ref<const Vector>& sample) {
    if (sample.size() != dim_) throw DimensionError("signal buffer: sample dimension mismatch");
    head_ = (head_ + 1) % capacity_;
    storage_.col(head_) = sample;
    ++pushed_;
}

void SignalBuffer::replace_newest(const Eigen::Ref<const Vector>& sample) {
    if (sample.size() != dim_) throw DimensionError("signal buffer: sample dimension mismatch");
    if (pushed_ == 0) throw ValidationError("signal buffer: nothing to replace");
    storage_.col(head_) = sample;
}

Eigen::Ref<const Vector> SignalBuffer::lag(int lag) const {
    if (lag < 0 || lag >= capacity_) throw ValidationError("signal buffer: lag outside capacity");
    if (pushed_ == 0) return storage_.col(0);  // zero-filled
    return storage_.col(slot(lag));
}

double SignalBuffer::covered_from() const noexcept {
    const long retained = std::min<long>(pushed_, capacity_);
    return head_time() - static_cast<double>(retained - 1) * dt_;
}

int SignalBuffer::snapped_lag(double time) const { return static_cast<int>(std::lround(time / dt_)); }

double SignalBuffer::dot(const SampledSignal& kernel) const {
    if (kernel.dim() != dim_) throw DimensionError("signal buffer: kernel dimension mismatch");
    if (!same_step(kernel.dt(), dt_)) throw ValidationError("signal buffer: kernel dt mismatch");
    const int len = kernel.size();
    if (len > capacity_) throw ValidationError("signal buffer: kernel longer than buffer");
    if (len < 2 || pushed_ == 0) return 0.0;
    double acc = 0.5 * (storage_.col(slot(0)).dot(kernel.sample(0)) +
                        storage_.col(slot(len - 1)).dot(kernel.sample(len - 1)));
    for (int j = 1; j < len - 1; ++j) acc += storage_.col(slot(j)).dot(kernel.sample(j));
    return acc * dt_;
}

double SignalBuffer::dot(const ImpulsiveSignal& kernel) const {
    if (kernel.dim() != dim_) throw DimensionError("signal buffer: kernel dimension mismatch");
    double acc = 0.0;
    for (const auto& imp : kernel.impulses()) {
        const int lag = snapped_lag(imp.time);
        if (lag >= capacity_) throw ValidationError("signal buffer: impulse beyond buffer capacity");
        if (pushed_ > 0) acc += imp.weight.dot(storage_.col(slot(lag)));
    }
    if (kernel.density()) acc += dot(*kernel.density());
    return acc;
}

double SignalBuffer::push_and_dot(const Eigen::Ref<const Vector>& sample, const SampledSignal& kernel) {
    if (kernel.size() > capacity_) throw ValidationError("signal buffer: kernel longer than buffer");
    push(sample);
    return dot(kernel);
}

SampledSignal SignalBuffer::snapshot() const {
    Matrix values(dim_, capacity_);
    for (int j = 0; j < capacity_; ++j) values.col(capacity_ - 1 - j) = pushed_ == 0 ? storage_.col(0) : storage_.col(slot(j));
    return SampledSignal(head_time() - (capacity_ - 1) * dt_, dt_, std::move(values));
}

}  // namespace modfun
