#include "modfun/heat.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include "modfun/errors.hpp"
#include "modfun/estimator.hpp"
#include "modfun/signal_buffer.hpp"
#include "parallel.hpp"

namespace modfun::heat {

namespace {

using Triplet = Eigen::Triplet<double>;

SparseMatrix sparse_identity(int n) {
    SparseMatrix I(n, n);
    I.setIdentity();
    return I;
}

int horizon_steps(double T, double dt) {
    if (!(T > 0.0) || !(dt > 0.0)) throw ValidationError("heat: T and dt must be positive");
    const double steps = T / dt;
    const long rounded = std::lround(steps);
    if (rounded < 1 || std::abs(steps - static_cast<double>(rounded)) > 1e-6 * std::max(1.0, steps))
        throw ValidationError("heat: T must be an integer multiple of dt");
    return static_cast<int>(rounded);
}

}  // namespace

Grid2D make_grid(double L1, double L2, int nx, int ny) {
    if (!(L1 > 0.0) || !(L2 > 0.0)) throw ValidationError("heat grid: side lengths must be positive");
    if (nx < 3) throw ValidationError("heat grid: nx must be at least 3");
    if (ny < 1) throw ValidationError("heat grid: ny must be at least 1");
    Grid2D g;
    g.L1 = L1;
    g.L2 = L2;
    g.nx = nx;
    g.ny = ny;
    g.dx = L1 / (nx + 1);
    g.dy = L2 / (ny + 1);
    return g;
}

HeatSystem assemble_heat(const Grid2D& grid, double k_diff, double c_react) {
    if (!(k_diff > 0.0)) throw ValidationError("assemble_heat: k_diff must be positive");
    if (grid.nx < 3 || grid.ny < 1) throw ValidationError("assemble_heat: invalid grid");
    const int nx = grid.nx, ny = grid.ny, n = grid.size();
    const double cx = k_diff / (grid.dx * grid.dx);
    const double cy = k_diff / (grid.dy * grid.dy);

    std::vector<Triplet> a, b, c;
    a.reserve(5 * static_cast<std::size_t>(n));
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const int r = grid.index(i, j);
            a.emplace_back(r, r, -2.0 * cx - 2.0 * cy + c_react);
            if (i > 0) a.emplace_back(r, grid.index(i - 1, j), cx);
            if (i < nx - 1) a.emplace_back(r, grid.index(i + 1, j), cx);
            else b.emplace_back(r, j, cx);
            if (j > 0) a.emplace_back(r, grid.index(i, j - 1), cy);
            if (j < ny - 1) a.emplace_back(r, grid.index(i, j + 1), cy);
        }
        c.emplace_back(j, grid.index(nx - 1, j), -4.0 / (2.0 * grid.dx));
        c.emplace_back(j, grid.index(nx - 2, j), 1.0 / (2.0 * grid.dx));
    }

    HeatSystem sys;
    sys.grid = grid;
    sys.k_diff = k_diff;
    sys.c_react = c_react;
    sys.Ad.resize(n, n);
    sys.Ad.setFromTriplets(a.begin(), a.end());
    sys.Bd.resize(n, ny);
    sys.Bd.setFromTriplets(b.begin(), b.end());
    sys.Cd.resize(ny, n);
    sys.Cd.setFromTriplets(c.begin(), c.end());
    sys.Dd = sparse_identity(ny) * (3.0 / (2.0 * grid.dx));
    return sys;
}

HeatAdjoint discrete_adjoint(const HeatSystem& sys) {
    HeatAdjoint adj;
    adj.A = sys.Ad.transpose();
    adj.input_map = sys.Cd.transpose();
    adj.output_map = sys.Bd.transpose();
    adj.feedthrough = sys.Dd.transpose();
    adj.state_weight = sys.grid.cell_area();
    adj.boundary_weight = sys.grid.dy;
    const SparseMatrix diff = sys.Ad - adj.A;
    double worst = 0.0;
    for (int k = 0; k < diff.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(diff, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
    adj.asymmetry = worst;
    return adj;
}

Trajectory simulate_crank_nicolson(const SparseMatrix& A, const SparseMatrix& B, const SparseMatrix& C,
                                   const SparseMatrix& D, const Vector& x0, const SampledSignal& u) {
    const int n = static_cast<int>(A.rows());
    if (A.cols() != n || B.rows() != n || C.cols() != n || D.rows() != C.rows() || D.cols() != B.cols())
        throw DimensionError("crank-nicolson: operator dimensions disagree");
    if (x0.size() != n) throw DimensionError("crank-nicolson: x0 dimension mismatch");
    if (u.dim() != B.cols()) throw DimensionError("crank-nicolson: input dimension mismatch");
    const double h = u.dt();
    const SparseMatrix I = sparse_identity(n);
    const SparseMatrix minus = I - 0.5 * h * A;
    const SparseMatrix plus = I + 0.5 * h * A;
    Eigen::SparseLU<SparseMatrix> lu;
    lu.compute(minus);
    if (lu.info() != Eigen::Success) throw NumericalError("crank-nicolson: factorization failed");

    const int N = u.size();
    Matrix X(n, N), Y(C.rows(), N);
    Vector x = x0;
    for (int k = 0; k < N; ++k) {
        if (k > 0) {
            const Vector rhs = plus * x + 0.5 * h * (B * (u.sample(k - 1) + u.sample(k)));
            x = lu.solve(rhs);
        }
        X.col(k) = x;
        Y.col(k) = C * x + D * u.sample(k);
    }
    return {SampledSignal(u.t0(), h, std::move(X)), u, SampledSignal(u.t0(), h, std::move(Y))};
}

Trajectory simulate_heat(const HeatSystem& sys, const Vector& x0, const SampledSignal& u) {
    return simulate_crank_nicolson(sys.Ad, sys.Bd, sys.Cd, sys.Dd, x0, u);
}

// The Crank-Nicolson step is x_{l+1} = P x_l + Q (u_l + u_{l+1}) with P = M-^{-1} M+ and
// Q = h/2 M-^{-1} B, M+- = I +- h/2 A. Running psi_0 = phi0, psi_l = P^T psi_{l-1} + C^T g_l
// backwards over the window gives, for lags l = 0..K,
//   phi0^T x(t) = sum_l m_l^T u(t - l h) - e_l^T y(t - l h) + psi_K^T x(t - K h)
// with e_l = g_l (e_0 = 0) and m_l = Q^T (psi_{l-1} [l >= 1] + psi_l [l < K]) + D^T g_l [l >= 1].
// g_l is the weighted minimum-norm choice driving psi_K to zero. A is symmetric, so everything
// is diagonal in its eigenbasis.
std::vector<ModulatingPair> heat_null_controls(const HeatSystem& sys, const std::vector<Vector>& targets,
                                               double T, double dt, const HeatNullControlOptions& options) {
    const Grid2D& grid = sys.grid;
    const int n = grid.size();
    const int ny = static_cast<int>(sys.Cd.rows());
    const int m = static_cast<int>(sys.Bd.cols());
    const int K = horizon_steps(T, dt);
    for (const auto& phi : targets)
        if (phi.size() != n) throw DimensionError("heat null control: target length must equal grid size");
    if (options.eps_sweep.empty()) throw ValidationError("heat null control: empty regularization sweep");

    const Matrix Adense = Matrix(sys.Ad);
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(Adense);
    if (eig.info() != Eigen::Success) throw NumericalError("heat null control: eigendecomposition failed");
    const Matrix& V = eig.eigenvectors();
    const Vector& lam = eig.eigenvalues();
    const Vector denom = (1.0 - 0.5 * dt * lam.array()).matrix();
    const Vector p = ((1.0 + 0.5 * dt * lam.array()) / denom.array()).matrix();
    const Vector q_scale = (0.5 * dt / denom.array()).matrix();
    const Matrix CV = Matrix(sys.Cd) * V;                   // ny x n
    const Matrix BV = Matrix(sys.Bd).transpose() * V;       // m x n
    const Matrix Dt = Matrix(sys.Dd).transpose();           // m x ny

    // W_ab = H_ab (sum_{j=0}^{K-1} (p_a p_b)^j - 1/2); the last lag carries trapezoid weight 1/2.
    Matrix W = CV.transpose() * CV;
    for (int b = 0; b < n; ++b) {
        for (int a = 0; a < n; ++a) {
            const double r = p(a) * p(b);
            const double geometric = std::abs(1.0 - r) < 1e-14 ? static_cast<double>(K)
                                                               : (1.0 - std::pow(r, K)) / (1.0 - r);
            W(a, b) *= geometric - 0.5;
        }
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> wsolve(W);
    if (wsolve.info() != Eigen::Success) throw NumericalError("heat null control: Gramian factorization failed");
    const Matrix& U = wsolve.eigenvectors();
    const Vector sigma = wsolve.eigenvalues().cwiseMax(0.0);
    const double sigma_max = sigma.maxCoeff();

    const Vector pK = p.array().pow(static_cast<double>(K)).matrix();
    const double area = grid.cell_area();

    std::vector<ModulatingPair> pairs(targets.size(), ModulatingPair{ImpulsiveSignal::zero(ny), ImpulsiveSignal::zero(m),
                                                                     T, Vector(), "", 0.0, false});

    const int count = static_cast<int>(targets.size());
    detail::parallel_for(count, [&](int j) {
        const Vector phi_e = area * targets[j];
        const Vector phi_hat = V.transpose() * phi_e;
        const double scale = phi_hat.norm();

        // Lag samples l = 0..K; psi_hat.col(l) is psi_l in eigen coordinates.
        Matrix g = Matrix::Zero(ny, K + 1);
        Matrix psi(n, K + 1);
        auto run_recursion = [&](const Vector& lam_hat) {
            Matrix decay(n, K + 1);
            decay.col(0).setZero();
            Vector power = Vector::Ones(n);  // p^{K-l}
            for (int l = K; l >= 1; --l) {
                decay.col(l) = (l == K ? 0.5 : 1.0) * power.cwiseProduct(lam_hat);
                power = power.cwiseProduct(p);
            }
            g.noalias() = CV * decay;
            psi.col(0) = phi_hat;
            for (int l = 1; l <= K; ++l) psi.col(l) = p.cwiseProduct(psi.col(l - 1)) + CV.transpose() * g.col(l);
            return scale > 0.0 ? psi.col(K).norm() / scale : 0.0;
        };

        double residual = 0.0;
        bool degraded = false;
        if (scale > 0.0) {
            const Vector rhs_u = U.transpose() * (-pK.cwiseProduct(phi_hat));
            double best = std::numeric_limits<double>::infinity();
            Vector best_lambda;
            for (double eps_rel : options.eps_sweep) {
                const double eps = eps_rel * sigma_max;
                const Vector coeff = (rhs_u.array() / (sigma.array() + eps)).matrix();
                // Predicted psi_K = -eps lambda; only resimulate candidates that look good enough.
                const double predicted = eps * coeff.norm() / scale;
                const bool last = eps_rel == options.eps_sweep.back();
                if (predicted > options.tol_null && !last) continue;
                const Vector lam_hat = U * coeff;
                const double achieved = run_recursion(lam_hat);
                if (achieved < best) {
                    best = achieved;
                    best_lambda = lam_hat;
                }
                if (achieved <= options.tol_null) break;
            }
            residual = run_recursion(best_lambda);
            degraded = residual > options.tol_null;
        }

        // Densities: divide by the trapezoid weight so SignalBuffer::dot reproduces the sums.
        Matrix eta(ny, K + 1), mu(m, K + 1);
        for (int l = 0; l <= K; ++l) {
            const double w = (l == 0 || l == K ? 0.5 : 1.0) * dt;
            Vector ml = Vector::Zero(m);
            if (l >= 1) ml += BV * q_scale.cwiseProduct(psi.col(l - 1)) + Dt * g.col(l);
            if (l < K) ml += BV * q_scale.cwiseProduct(psi.col(l));
            eta.col(l) = (l == 0 ? Vector::Zero(ny) : Vector(g.col(l))) / w;
            mu.col(l) = ml / w;
        }
        if (scale == 0.0) {
            eta.setZero();
            mu.setZero();
        }

        pairs[j] = ModulatingPair{ImpulsiveSignal::from_density(SampledSignal(0.0, dt, std::move(eta))),
                                  ImpulsiveSignal::from_density(SampledSignal(0.0, dt, std::move(mu))),
                                  T,
                                  targets[j],
                                  "L2 inner product with phi0",
                                  residual,
                                  degraded};
    });
    return pairs;
}

HeatReconstruction reconstruct_heat_state(const HeatSystem& sys, const std::vector<ModulatingPair>& pairs,
                                          const std::vector<Vector>& basis, const SampledSignal& u,
                                          const SampledSignal& y, double t) {
    if (pairs.size() != basis.size()) throw DimensionError("heat reconstruction: one basis vector per pair");
    if (pairs.empty()) throw ValidationError("heat reconstruction: no pairs");
    if (!same_step(u.dt(), y.dt()) || std::abs(u.t0() - y.t0()) > 1e-9 * u.dt())
        throw ValidationError("heat reconstruction: u and y must share a grid");
    const double dt = u.dt();
    const int head = static_cast<int>(std::lround((t - u.t0()) / dt));
    if (head < 0 || head >= std::min(u.size(), y.size()) || std::abs(u.time(head) - t) > 1e-6 * dt)
        throw ValidationError("heat reconstruction: t is not a sample of the record");

    int capacity = 1;
    for (const auto& pair : pairs) capacity = std::max(capacity, required_capacity(pair, dt));
    const int first = std::max(0, head - capacity + 1);
    SignalBuffer ub(u.dim(), capacity, dt, u.time(first));
    SignalBuffer yb(y.dim(), capacity, dt, y.time(first));
    for (int k = first; k <= head; ++k) {
        ub.push(u.sample(k));
        yb.push(y.sample(k));
    }
    const int count = static_cast<int>(pairs.size());
    HeatReconstruction out{Vector::Zero(sys.grid.size()), Vector(count)};
    for (const auto& pair : pairs) validate_pair(pair, u.dim(), y.dim());
    detail::parallel_for(count, [&](int j) { out.coefficients(j) = estimate_functional(pairs[j], ub, yb, t); });
    for (int j = 0; j < count; ++j) out.field += out.coefficients(j) * basis[j];
    return out;
}

double l2_inner(const Grid2D& grid, const Vector& a, const Vector& b) { return grid.cell_area() * a.dot(b); }

double l2_norm(const Grid2D& grid, const Vector& a) { return std::sqrt(l2_inner(grid, a, a)); }

Vector sample_field(const Grid2D& grid, const std::function<double(double, double)>& f) {
    Vector v(grid.size());
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) v(grid.index(i, j)) = f(grid.x(i), grid.y(j));
    return v;
}

}  // namespace modfun::heat
