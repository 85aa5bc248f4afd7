#pragma once

#include <functional>
#include <vector>

#include "modfun/lti.hpp"
#include "modfun/modulating_pair.hpp"

namespace modfun {

/// Output at the pending sample as an affine function of the pending input:
/// y_k = free_output + feedthrough * u_k.
struct StepPreview {
    Vector free_output;
    Matrix feedthrough;
};

/// A plant advanced one sample at a time. The input applied at the pending sample may depend on
/// the output at that same sample; preview() exposes that dependence so algebraic loops can be
/// solved before commit().
class SampledPlant {
public:
    virtual ~SampledPlant() = default;

    virtual int input_dim() const = 0;
    virtual int output_dim() const = 0;
    virtual double dt() const = 0;
    virtual StepPreview preview() const = 0;
    /// Fixes the pending input, returns the output at the pending sample and moves on.
    virtual Vector commit(const Vector& u) = 0;
    /// State at the last committed sample.
    virtual Vector state() const = 0;
};

/// LtiSystem with an input that is linear between samples.
class LtiPlant final : public SampledPlant {
public:
    LtiPlant(const LtiSystem& sys, Vector x0, double dt);

    int input_dim() const override { return sys_.m(); }
    int output_dim() const override { return sys_.p(); }
    double dt() const override { return dt_; }
    StepPreview preview() const override;
    Vector commit(const Vector& u) override;
    Vector state() const override { return x_; }

private:
    Vector pending_free_state() const;

    LtiSystem sys_;
    Propagator prop_;
    double dt_;
    Vector x_;
    Vector u_prev_;
    bool started_ = false;
};

/// u = gain * (u*mu_i - y*eta_i)_i on [warmup, oo). One pair per input channel.
struct FeedbackRealizer {
    std::vector<ModulatingPair> pairs;
    Matrix gain;
    double warmup = 0.0;

    FeedbackRealizer(std::vector<ModulatingPair> pairs, Matrix gain, double warmup);
    /// Identity post-map.
    FeedbackRealizer(std::vector<ModulatingPair> pairs, double warmup);
};

struct ClosedLoopOptions {
    /// When false, Trajectory::states holds only the final state (one sample at t_end).
    bool record_states = true;
    /// Called after every committed sample k.
    std::function<void(int, const SampledPlant&)> on_sample;
};

/// Runs the plant with warmup_input on [0, warmup) and the realized feedback afterwards. When
/// the kernels weigh the current sample (impulses at lag 0, or the trapezoid end weight of a
/// density) the resulting m x m linear system is solved per step; AlgebraicLoopError if singular.
Trajectory run_closed_loop(SampledPlant& plant, const FeedbackRealizer& fb, const SampledSignal& warmup_input,
                           double t_end, const ClosedLoopOptions& options = {});

/// Kernel weight applied to the newest buffer sample by SignalBuffer::dot at step dt.
Vector lag_zero_weight(const ImpulsiveSignal& kernel, double dt);

}  // namespace modfun
