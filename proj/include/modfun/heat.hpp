#pragma once

#include <functional>
#include <vector>

#include <Eigen/Sparse>

#include "modfun/lti.hpp"
#include "modfun/modulating_pair.hpp"

namespace modfun::heat {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Interior nodes (i+1)dx, (j+1)dy of (0,L1)x(0,L2), i < nx, j < ny, numbered j*nx + i.
/// The controlled edge Gamma is xi1 = L1; its ny boundary nodes sit next to column i = nx-1.
struct Grid2D {
    double L1 = 1.0;
    double L2 = 1.0;
    int nx = 31;
    int ny = 31;
    double dx = 1.0 / 32;
    double dy = 1.0 / 32;

    int size() const noexcept { return nx * ny; }
    int index(int i, int j) const noexcept { return j * nx + i; }
    double x(int i) const noexcept { return (i + 1) * dx; }
    double y(int j) const noexcept { return (j + 1) * dy; }
    /// Area weight of one node.
    double cell_area() const noexcept { return dx * dy; }
};

/// Throws ValidationError unless L1, L2 > 0, nx >= 3 and ny >= 1.
Grid2D make_grid(double L1, double L2, int nx, int ny);

/// Discrete x' = Ad x + Bd u, y = Cd x + Dd u with Dirichlet input and outward Neumann output
/// on Gamma, homogeneous Dirichlet elsewhere.
struct HeatSystem {
    Grid2D grid;
    double k_diff = 0.1;
    double c_react = 1.0;
    SparseMatrix Ad;
    SparseMatrix Bd;
    SparseMatrix Cd;
    SparseMatrix Dd;
};

/// 5-point Laplacian scaled by k plus c I; Bd = k/dx^2 lifting of the Gamma values; Cd, Dd the
/// second-order one-sided normal derivative (3u - 4x_{nx-1} + x_{nx-2}) / (2dx).
HeatSystem assemble_heat(const Grid2D& grid, double k_diff, double c_react);

/// Transposed operators of the discrete node, with the quadrature weights that turn Euclidean
/// pairings into L2(Omega) and L2(Gamma) pairings.
struct HeatAdjoint {
    SparseMatrix A;           // Ad^T
    SparseMatrix input_map;   // Cd^T, driven by eta
    SparseMatrix output_map;  // Bd^T, emits mu
    SparseMatrix feedthrough; // Dd^T
    double state_weight = 0.0;     // dx*dy
    double boundary_weight = 0.0;  // dy
    /// max |Ad - Ad^T|.
    double asymmetry = 0.0;
};

HeatAdjoint discrete_adjoint(const HeatSystem& sys);

/// Crank-Nicolson with the input linear between samples:
/// (I - h/2 A) x_{k+1} = (I + h/2 A) x_k + h/2 B (u_k + u_{k+1}), y_k = C x_k + D u_k.
Trajectory simulate_crank_nicolson(const SparseMatrix& A, const SparseMatrix& B, const SparseMatrix& C,
                                   const SparseMatrix& D, const Vector& x0, const SampledSignal& u);

Trajectory simulate_heat(const HeatSystem& sys, const Vector& x0, const SampledSignal& u);

struct HeatNullControlOptions {
    /// Target for |psi(T)| / |phi0|.
    double tol_null = 1e-4;
    /// Tikhonov parameters relative to the largest Gramian eigenvalue, tried largest first.
    std::vector<double> eps_sweep = {1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
};

/// For each target phi0_j (an L2 representer on the grid), a regularized minimum-energy null
/// control of the Crank-Nicolson adjoint over [0, T]. The pairs satisfy the discrete
/// moving-horizon identity exactly up to <psi_j(T), x(t - T)>, and residual_j = |psi_j(T)| /
/// |phi0_j| is obtained by re-running the adjoint recursion. Pairs above tol_null are flagged
/// degraded. Pairs are computed in parallel.
std::vector<ModulatingPair> heat_null_controls(const HeatSystem& sys, const std::vector<Vector>& targets,
                                               double T, double dt, const HeatNullControlOptions& options = {});

struct HeatReconstruction {
    Vector field;
    Vector coefficients;
};

/// x_hat(t) = sum_j c_j phi0_j with c_j = (u*mu_j - y*eta_j)(t) from recorded u, y.
HeatReconstruction reconstruct_heat_state(const HeatSystem& sys, const std::vector<ModulatingPair>& pairs,
                                          const std::vector<Vector>& basis, const SampledSignal& u,
                                          const SampledSignal& y, double t);

double l2_inner(const Grid2D& grid, const Vector& a, const Vector& b);
double l2_norm(const Grid2D& grid, const Vector& a);

/// Nodal values of f(x, y) on the interior grid.
Vector sample_field(const Grid2D& grid, const std::function<double(double, double)>& f);

}  // namespace modfun::heat
