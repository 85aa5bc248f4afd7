#pragma once

#include "modfun/signal.hpp"

namespace modfun {

/// Finite-dimensional system x' = Ax + Bu, y = Cx + Du.
class LtiSystem {
public:
    LtiSystem(Matrix A, Matrix B, Matrix C, Matrix D);

    const Matrix& A() const noexcept { return A_; }
    const Matrix& B() const noexcept { return B_; }
    const Matrix& C() const noexcept { return C_; }
    const Matrix& D() const noexcept { return D_; }

    int n() const noexcept { return static_cast<int>(A_.rows()); }
    int m() const noexcept { return static_cast<int>(B_.cols()); }
    int p() const noexcept { return static_cast<int>(C_.rows()); }

    /// (A^T, C^T, B^T, D^T): driven by eta, emits mu.
    LtiSystem adjoint() const;

private:
    Matrix A_, B_, C_, D_;
};

/// Samples of a run on a shared grid.
struct Trajectory {
    SampledSignal states;
    SampledSignal inputs;
    SampledSignal outputs;
};

/// One-step maps for an input that is linear between samples:
/// x_{k+1} = E x_k + F0 u_k + F1 u_{k+1}.
struct Propagator {
    Matrix E;
    Matrix F0;
    Matrix F1;
};

/// Matrix exponential (scaling and squaring with Pade approximants).
Matrix expm(const Matrix& M);

Propagator discretize(const LtiSystem& sys, double dt);

/// Exact sampled response to the piecewise-linear interpolant of u.
Trajectory simulate(const LtiSystem& sys, const Vector& x0, const SampledSignal& u);

/// W(T) = int_0^T e^{A^T s} C^T C e^{A s} ds from one exponential of a 2n x 2n block matrix.
Matrix observability_gramian(const LtiSystem& sys, double T);

/// Appends the output z = K x + L u as a last row of (C, D).
LtiSystem extend_with_functional(const LtiSystem& sys, const Eigen::Ref<const Eigen::RowVectorXd>& K,
                                 const Eigen::Ref<const Eigen::RowVectorXd>& L);

}  // namespace modfun
