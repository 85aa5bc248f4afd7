#pragma once

#include <optional>
#include <vector>

#include "modfun/modulating_pair.hpp"
#include "modfun/signal_buffer.hpp"

namespace modfun {

/// (u*mu - y*eta)(t) read from the buffers. Requires t >= horizon and the buffers' head at t.
double estimate_functional(const ModulatingPair& pair, const SignalBuffer& u_hist,
                           const SignalBuffer& y_hist, double t);

/// Number of samples a buffer needs to hold the kernels of `pair` at step dt.
int required_capacity(const ModulatingPair& pair, double dt);

struct Reconstruction {
    Vector state;
    Vector coefficients;
};

/// Streams u, y and evaluates a family of modulating pairs on the moving horizon.
class Estimator {
public:
    Estimator(std::vector<ModulatingPair> pairs, std::optional<std::vector<Vector>> basis, int input_dim,
              int output_dim, double dt, double start_time = 0.0);

    void push(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& y);

    /// c_j(t) for every pair; evaluated in parallel over pairs.
    Vector coefficients(double t) const;
    /// w_N(t) = sum_j c_j(t) phi0_j. Requires a basis.
    Reconstruction reconstruct(double t) const;

    double time() const noexcept { return u_hist_.head_time(); }
    double start_time() const noexcept { return u_hist_.start_time(); }
    double horizon() const noexcept { return horizon_; }
    const std::vector<ModulatingPair>& pairs() const noexcept { return pairs_; }
    const SignalBuffer& inputs() const noexcept { return u_hist_; }
    const SignalBuffer& outputs() const noexcept { return y_hist_; }

private:
    std::vector<ModulatingPair> pairs_;
    std::optional<std::vector<Vector>> basis_;
    double horizon_;
    SignalBuffer u_hist_;
    SignalBuffer y_hist_;
};

/// Max |G - I| of the Euclidean Gram matrix of `basis`.
double gram_deviation(const std::vector<Vector>& basis);

/// w_N(t) and its coefficients; same as est.reconstruct(t).
Reconstruction reconstruct_state(const Estimator& est, double t);

}  // namespace modfun
