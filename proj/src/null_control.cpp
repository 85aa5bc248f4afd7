#include "modfun/null_control.hpp"

#include <cmath>

#include "modfun/errors.hpp"

namespace modfun {

namespace {

int horizon_samples(double T, double dt) {
    if (!(T > 0.0) || !(dt > 0.0)) throw ValidationError("null control: T and dt must be positive");
    const double steps = T / dt;
    const long rounded = std::lround(steps);
    if (rounded < 1 || std::abs(steps - static_cast<double>(rounded)) > 1e-6 * std::max(1.0, steps))
        throw ValidationError("null control: T must be an integer multiple of dt");
    return static_cast<int>(rounded) + 1;
}

}  // namespace

ModulatingPair adjoint_null_control(const LtiSystem& sys, const Vector& phi0, double T, double dt,
                                    const NullControlOptions& options) {
    if (phi0.size() != sys.n()) throw DimensionError("null control: phi0 must have length n");
    const int K = horizon_samples(T, dt);

    const Matrix W = observability_gramian(sys, T);
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(W, Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues()(0);
    const double lmax = eig.eigenvalues()(sys.n() - 1);
    if (!(lmax > 0.0) || lmin < options.conditioning_floor * lmax) throw NotNullControllable(lmin, lmax);

    const LtiSystem adj = sys.adjoint();
    const int n = sys.n();
    const int p = sys.p();

    const Vector weights = Vector::NullaryExpr(K, [K, dt](Eigen::Index j) {
        return trapezoid_weight(static_cast<int>(j), K) * dt;
    });

    // End-state response to the eta samples: phi_{K-1} = E^{K-1} phi0 + sum_k G_k eta_k with
    // G_k = E^{K-2-k} F0 [k <= K-2] + E^{K-1-k} F1 [k >= 1].
    const Propagator prop = discretize(adj, dt);
    std::vector<Matrix> G(K, Matrix::Zero(n, p));
    Matrix power = Matrix::Identity(n, n);  // E^{K-1-k} at the top of iteration k
    Matrix prev_power = Matrix::Zero(n, n);
    for (int k = K - 1; k >= 0; --k) {
        if (k >= 1) G[k] += power * prop.F1;
        if (k <= K - 2) G[k] += prev_power * prop.F0;
        prev_power = power;
        power = prop.E * power;
    }
    const Vector free_end = prev_power * phi0;  // E^{K-1} phi0

    // min sum_k w_k |eta_k|^2 s.t. sum_k G_k eta_k = -free_end.
    Matrix Wd = Matrix::Zero(n, n);
    for (int k = 0; k < K; ++k) Wd.noalias() += G[k] * G[k].transpose() / weights(k);
    const Vector lambda = Wd.ldlt().solve(-free_end);

    Matrix eta(p, K);
#pragma omp parallel for
    for (int k = 0; k < K; ++k) eta.col(k) = G[k].transpose() * lambda / weights(k);

    SampledSignal eta_sig(0.0, dt, std::move(eta));
    const Trajectory run = simulate(adj, phi0, eta_sig);
    const double scale = phi0.norm();
    const double end_norm = run.states.sample(K - 1).norm();

    ModulatingPair pair{ImpulsiveSignal::from_density(eta_sig), ImpulsiveSignal::from_density(run.outputs), T,
                        phi0, "inner product with phi0", scale > 0.0 ? end_norm / scale : end_norm, false};
    return pair;
}

Vector adjoint_end_state(const LtiSystem& sys, const Vector& phi0, const ModulatingPair& pair) {
    if (!pair.eta.density() || !pair.eta.impulses().empty())
        throw ValidationError("adjoint end state: eta must be a pure density");
    const Trajectory run = simulate(sys.adjoint(), phi0, *pair.eta.density());
    return run.states.sample(run.states.size() - 1);
}

}  // namespace modfun
