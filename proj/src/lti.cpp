#include "modfun/lti.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include "modfun/errors.hpp"

namespace modfun {

LtiSystem::LtiSystem(Matrix A, Matrix B, Matrix C, Matrix D)
    : A_(std::move(A)), B_(std::move(B)), C_(std::move(C)), D_(std::move(D)) {
    if (A_.rows() != A_.cols() || A_.rows() < 1) throw DimensionError("lti: A must be square and nonempty");
    if (B_.rows() != A_.rows()) throw DimensionError("lti: B must have n rows");
    if (C_.cols() != A_.rows()) throw DimensionError("lti: C must have n columns");
    if (D_.rows() != C_.rows() || D_.cols() != B_.cols()) throw DimensionError("lti: D must be p x m");
    if (B_.cols() < 1 || C_.rows() < 1) throw DimensionError("lti: need at least one input and one output");
}

LtiSystem LtiSystem::adjoint() const { return LtiSystem(A_.transpose(), C_.transpose(), B_.transpose(), D_.transpose()); }

Matrix expm(const Matrix& M) { return M.exp(); }

Propagator discretize(const LtiSystem& sys, double dt) {
    if (!(dt > 0.0)) throw ValidationError("discretize: dt must be positive");
    const int n = sys.n();
    const int m = sys.m();
    // d/dt [x; u; du] = [[A, B, 0], [0, 0, I], [0, 0, 0]] [x; u; du]
    Matrix M = Matrix::Zero(n + 2 * m, n + 2 * m);
    M.topLeftCorner(n, n) = sys.A();
    M.block(0, n, n, m) = sys.B();
    M.block(n, n + m, m, m).setIdentity();
    const Matrix Phi = expm(M * dt);
    const Matrix G1 = Phi.block(0, n, n, m);
    const Matrix G2 = Phi.block(0, n + m, n, m);
    // du = (u_{k+1} - u_k) / dt
    return {Phi.topLeftCorner(n, n), G1 - G2 / dt, G2 / dt};
}

Trajectory simulate(const LtiSystem& sys, const Vector& x0, const SampledSignal& u) {
    if (x0.size() != sys.n()) throw DimensionError("simulate: x0 dimension mismatch");
    if (u.dim() != sys.m()) throw DimensionError("simulate: input dimension mismatch");
    const Propagator prop = discretize(sys, u.dt());
    const int len = u.size();
    Matrix X(sys.n(), len);
    Matrix Y(sys.p(), len);
    if (len > 0) X.col(0) = x0;
    for (int k = 0; k + 1 < len; ++k)
        X.col(k + 1) = prop.E * X.col(k) + prop.F0 * u.sample(k) + prop.F1 * u.sample(k + 1);
    Y.noalias() = sys.C() * X + sys.D() * u.values();
    return {SampledSignal(u.t0(), u.dt(), std::move(X)), u, SampledSignal(u.t0(), u.dt(), std::move(Y))};
}

Matrix observability_gramian(const LtiSystem& sys, double T) {
    if (!(T > 0.0)) throw ValidationError("observability gramian: T must be positive");
    const int n = sys.n();
    // exp([[-A^T, C^T C], [0, A]] T) = [[e^{-A^T T}, e^{-A^T T} W], [0, e^{A T}]]
    Matrix M = Matrix::Zero(2 * n, 2 * n);
    M.topLeftCorner(n, n) = -sys.A().transpose();
    M.topRightCorner(n, n) = sys.C().transpose() * sys.C();
    M.bottomRightCorner(n, n) = sys.A();
    const Matrix Phi = expm(M * T);
    Matrix W = Phi.bottomRightCorner(n, n).transpose() * Phi.topRightCorner(n, n);
    return 0.5 * (W + W.transpose());
}

LtiSystem extend_with_functional(const LtiSystem& sys, const Eigen::Ref<const Eigen::RowVectorXd>& K,
                                 const Eigen::Ref<const Eigen::RowVectorXd>& L) {
    if (K.size() != sys.n()) throw DimensionError("extend: K must have length n");
    if (L.size() != sys.m()) throw DimensionError("extend: L must have length m");
    Matrix C(sys.p() + 1, sys.n());
    Matrix D(sys.p() + 1, sys.m());
    C << sys.C(), K;
    D << sys.D(), L;
    return LtiSystem(sys.A(), sys.B(), std::move(C), std::move(D));
}

}  // namespace modfun
