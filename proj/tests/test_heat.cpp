#include "doctest.h"

#include <cmath>
#include <random>

#include <Eigen/SparseLU>

#include "modfun/errors.hpp"
#include "modfun/estimator.hpp"
#include "modfun/heat.hpp"
#include "modfun/poly_basis.hpp"
#include "modfun/signal_buffer.hpp"
#include "oracles.hpp"

using namespace modfun;
using namespace modfun::heat;

namespace {

constexpr double kPi = 3.141592653589793;

SampledSignal zero_input(const HeatSystem& sys, double dt, int samples) {
    return SampledSignal::zeros(0.0, dt, static_cast<int>(sys.Bd.cols()), samples);
}

// Smooth random boundary data on Gamma: a few modes in time, a sine profile along the edge.
SampledSignal boundary_input(std::mt19937& rng, const Grid2D& g, double dt, int samples) {
    const oracle::SmoothInput f(rng, 1);
    Matrix u(g.ny, samples);
    for (int k = 0; k < samples; ++k)
        for (int j = 0; j < g.ny; ++j) u(j, k) = f(k * dt)(0) * std::sin(kPi * g.y(j) / g.L2);
    return SampledSignal(0.0, dt, std::move(u));
}

}  // namespace

TEST_CASE("heat grid validation") {
    CHECK_THROWS_AS(make_grid(1.0, 1.0, 2, 5), ValidationError);
    CHECK_THROWS_AS(make_grid(1.0, 1.0, 5, 0), ValidationError);
    CHECK_THROWS_AS(make_grid(0.0, 1.0, 5, 5), ValidationError);
    const auto g = make_grid(2.0, 1.0, 7, 3);
    CHECK(g.dx == doctest::Approx(0.25));
    CHECK(g.dy == doctest::Approx(0.25));
    CHECK_THROWS_AS(assemble_heat(g, 0.0, 1.0), ValidationError);
    const auto sys = assemble_heat(g, 0.1, 1.0);
    CHECK(sys.Ad.rows() == 21);
    CHECK(sys.Bd.cols() == 3);
    CHECK(sys.Cd.rows() == 3);
}

TEST_CASE("sine eigenfunction: discrete eigenvalue and Crank-Nicolson decay") {
    const auto g = make_grid(1.0, 1.5, 19, 23);
    const double k = 0.3;
    const auto sys = assemble_heat(g, k, 0.0);
    const Vector v = sample_field(g, [&](double x, double y) { return std::sin(kPi * x / g.L1) * std::sin(kPi * y / g.L2); });
    const double lambda = -k * (2.0 / (g.dx * g.dx)) * (1.0 - std::cos(kPi * g.dx / g.L1)) -
                          k * (2.0 / (g.dy * g.dy)) * (1.0 - std::cos(kPi * g.dy / g.L2));
    const Vector Av = sys.Ad * v;
    CHECK((Av - lambda * v).norm() <= 1e-12 * std::abs(lambda) * v.norm());

    const double dt = 0.01;
    const auto run = simulate_heat(sys, v, zero_input(sys, dt, 101));
    const double factor = (1.0 + 0.5 * dt * lambda) / (1.0 - 0.5 * dt * lambda);
    double worst = 0.0;
    for (int s = 0; s < 101; ++s) {
        const double expect = std::pow(factor, s);
        worst = std::max(worst, (run.states.sample(s) - expect * v).norm() / (expect * v.norm()));
    }
    CHECK(worst <= 1e-10);
    // Observed rate against the continuous-time discrete eigenvalue: CN is second order.
    const double rate = std::log(run.states.sample(100).dot(v) / v.dot(v)) / 1.0;
    CHECK(std::abs(rate - lambda) <= dt * dt * std::pow(std::abs(lambda), 3));
}

TEST_CASE("zero data stays zero; dissipative without reaction") {
    const auto g = make_grid(1.0, 1.0, 9, 9);
    const auto sys = assemble_heat(g, 0.1, 0.0);
    const auto run = simulate_heat(sys, Vector::Zero(g.size()), zero_input(sys, 0.01, 50));
    CHECK(run.states.values().cwiseAbs().maxCoeff() == 0.0);
    CHECK(run.outputs.values().cwiseAbs().maxCoeff() == 0.0);

    std::mt19937 rng(41);
    const auto cold = assemble_heat(g, 0.1, -0.5);
    const auto decay = simulate_heat(cold, oracle::random_vector(rng, g.size()), zero_input(cold, 0.01, 200));
    for (int s = 1; s < 200; ++s) CHECK(decay.states.sample(s).norm() <= decay.states.sample(s - 1).norm() * (1 + 1e-14));
}

TEST_CASE("constant boundary input converges to the harmonic lifting") {
    const auto g = make_grid(1.0, 1.0, 15, 15);
    const auto sys = assemble_heat(g, 0.1, 0.0);
    Eigen::SparseLU<SparseMatrix> lu(sys.Ad);
    const Vector ones = Vector::Ones(g.ny);
    const Vector lifting = lu.solve(-(sys.Bd * ones));
    CHECK((sys.Ad * lifting + sys.Bd * ones).norm() <= 1e-10);

    const auto run = simulate_heat(sys, Vector::Zero(g.size()), SampledSignal(0.0, 0.02, Matrix::Ones(g.ny, 2001)));
    const Vector x = run.states.sample(2000);
    CHECK((sys.Ad * x + sys.Bd * ones).norm() <= 1e-10);
    CHECK((x - lifting).cwiseAbs().maxCoeff() <= 1e-10);
    // Harmonic with boundary values in [0, 1]: maximum principle.
    CHECK(x.minCoeff() >= 0.0);
    CHECK(x.maxCoeff() <= 1.0);
}

TEST_CASE("discrete adjoint: exact symmetry and Green's identity") {
    const auto g = make_grid(1.3, 0.7, 11, 8);
    const auto sys = assemble_heat(g, 0.2, 0.4);
    const auto adj = discrete_adjoint(sys);
    CHECK(adj.asymmetry == 0.0);
    CHECK(adj.state_weight == doctest::Approx(g.dx * g.dy));
    CHECK(adj.boundary_weight == doctest::Approx(g.dy));

    // With boundary values u, v on Gamma extending x and phi:
    // <A x + B u, phi> - <x, A phi + B v> = k/dx^2 sum_Gamma (u phi_{nx-1} - v x_{nx-1}).
    std::mt19937 rng(42);
    const Vector x = oracle::random_vector(rng, g.size()), phi = oracle::random_vector(rng, g.size());
    const Vector u = oracle::random_vector(rng, g.ny), v = oracle::random_vector(rng, g.ny);
    const double lhs = (sys.Ad * x + sys.Bd * u).dot(phi) - x.dot(sys.Ad * phi + sys.Bd * v);
    double rhs = 0.0;
    for (int j = 0; j < g.ny; ++j)
        rhs += sys.k_diff / (g.dx * g.dx) * (u(j) * phi(g.index(g.nx - 1, j)) - v(j) * x(g.index(g.nx - 1, j)));
    CHECK(std::abs(lhs - rhs) <= 1e-12 * (std::abs(lhs) + x.norm() * phi.norm() * sys.k_diff / (g.dx * g.dx)));

    // Duality pairing of the node: <C x + D u, w> = <x, C^T w> + <u, D^T w>.
    const Vector w = oracle::random_vector(rng, g.ny);
    const double left = (sys.Cd * x + sys.Dd * u).dot(w);
    const double right = x.dot(adj.input_map * w) + u.dot(adj.feedthrough * w);
    CHECK(std::abs(left - right) <= 1e-12 * std::abs(left) + 1e-12);
}

TEST_CASE("self-duality: adjoint with eta = 0 follows the primal trajectory") {
    const auto g = make_grid(1.0, 1.0, 9, 7);
    const auto sys = assemble_heat(g, 0.1, 1.0);
    const auto adj = discrete_adjoint(sys);
    std::mt19937 rng(43);
    const Vector phi0 = oracle::random_vector(rng, g.size());
    const auto primal = simulate_heat(sys, phi0, zero_input(sys, 0.01, 60));
    const auto dual = simulate_crank_nicolson(adj.A, adj.input_map, adj.output_map, adj.feedthrough, phi0,
                                              SampledSignal::zeros(0.0, 0.01, g.ny, 60));
    CHECK((primal.states.values() - dual.states.values()).cwiseAbs().maxCoeff() <= 1e-12 * phi0.norm());
}

TEST_CASE("heat_null_controls: zero target, validation") {
    const auto g = make_grid(1.0, 1.0, 5, 4);
    const auto sys = assemble_heat(g, 0.1, 1.0);
    const auto pairs = heat_null_controls(sys, {Vector::Zero(g.size())}, 0.5, 0.01);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].eta.density()->values().cwiseAbs().maxCoeff() == 0.0);
    CHECK(pairs[0].mu.density()->values().cwiseAbs().maxCoeff() == 0.0);
    CHECK(pairs[0].residual == 0.0);
    CHECK_FALSE(pairs[0].degraded);
    CHECK_THROWS_AS(heat_null_controls(sys, {Vector::Zero(3)}, 0.5, 0.01), DimensionError);
    CHECK_THROWS_AS(heat_null_controls(sys, {Vector::Zero(g.size())}, 0.505, 0.01), ValidationError);
    CHECK_THROWS_AS(heat_null_controls(sys, {Vector::Zero(g.size())}, 0.0, 0.01), ValidationError);
}

TEST_CASE("1D analog: dominant eigenfunction is nulled to 1e-4") {
    const auto g = make_grid(1.0, 1.0, 31, 1);
    const auto sys = assemble_heat(g, 0.1, 1.0);
    const Vector phi0 = sample_field(g, [](double x, double) { return std::sin(kPi * x); });
    // T = 1 stalls near 5e-4 within the default regularization sweep; T = 2 is comfortably enough.
    const auto pairs = heat_null_controls(sys, {phi0}, 2.0, 1e-3);
    CHECK(pairs[0].residual <= 1e-4);
    CHECK_FALSE(pairs[0].degraded);
    CHECK(pairs[0].horizon == doctest::Approx(2.0));
    const auto short_pairs = heat_null_controls(sys, {phi0}, 0.5, 1e-3);
    CHECK(short_pairs[0].degraded);
    CHECK(short_pairs[0].residual > pairs[0].residual);
}

TEST_CASE("heat pairs: discrete identity remainder is psi_K^T x(t - T)") {
    // The pair reproduces <x(t), phi0> up to psi_K^T x(t - T) and |psi_K| = residual |phi0|_e,
    // so |estimate - <x(t), phi0>| <= residual dxdy |phi0| |x(t - T)| (Euclidean norms).
    const auto g = make_grid(1.0, 1.0, 9, 9);
    const auto sys = assemble_heat(g, 0.1, 1.0);
    const double dt = 5e-3, T = 0.5;
    std::mt19937 rng(44);
    std::vector<Vector> targets;
    for (int j = 0; j < 3; ++j) targets.push_back(oracle::random_vector(rng, g.size()));
    targets.push_back(sample_field(g, [](double x, double y) { return x * y; }));
    const auto pairs = heat_null_controls(sys, targets, T, dt);

    const int samples = 301;
    const auto run = simulate_heat(sys, oracle::random_vector(rng, g.size()), boundary_input(rng, g, dt, samples));
    const int K = static_cast<int>(std::lround(T / dt));
    for (std::size_t j = 0; j < pairs.size(); ++j) {
        const int cap = required_capacity(pairs[j], dt);
        SignalBuffer ub(g.ny, cap, dt), yb(g.ny, cap, dt);
        double excess = 0.0;
        for (int s = 0; s < samples; ++s) {
            ub.push(run.inputs.sample(s));
            yb.push(run.outputs.sample(s));
            if (s < K) continue;
            const double est = estimate_functional(pairs[j], ub, yb, s * dt);
            const double truth = l2_inner(g, run.states.sample(s), targets[j]);
            const double bound = pairs[j].residual * g.cell_area() * targets[j].norm() * run.states.sample(s - K).norm();
            excess = std::max(excess, std::abs(est - truth) - bound);
        }
        CHECK(excess <= 1e-10);
    }
}

TEST_CASE("reconstruction: zero data gives a zero field") {
    const auto g = make_grid(1.0, 1.0, 7, 7);
    const auto sys = assemble_heat(g, 0.1, 1.0);
    const auto basis = build_poly_basis(g, 1);
    const auto pairs = heat_null_controls(sys, basis.vectors, 0.2, 0.01);
    const auto zeros = SampledSignal::zeros(0.0, 0.01, g.ny, 40);
    const auto rec = reconstruct_heat_state(sys, pairs, basis.vectors, zeros, zeros, 0.3);
    CHECK(rec.field.cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(reconstruct_heat_state(sys, pairs, basis.vectors, zeros, zeros, 0.1), HorizonNotFilled);
    CHECK_THROWS_AS(reconstruct_heat_state(sys, pairs, basis.vectors, zeros, zeros, 0.305), ValidationError);
}

TEST_CASE("polynomial basis: count law, orthonormality, parallel equals serial") {
    const auto g = make_grid(1.0, 1.0, 31, 31);
    for (int d = 0; d <= 4; ++d) {
        const auto b = build_poly_basis(g, d);
        CHECK(b.count() == full_poly_count(d));
        CHECK(basis_gram_deviation(g, b.vectors) <= 1e-10);
    }
    CHECK(full_poly_count(10) == 66);
    const auto par = build_poly_basis(g, 4);
    const auto ser = build_poly_basis_serial(g, 4);
    REQUIRE(par.count() == ser.count());
    double worst = 0.0;
    for (int j = 0; j < par.count(); ++j) {
        CHECK(par.exponents[j] == ser.exponents[j]);
        worst = std::max(worst, (par.vectors[j] - ser.vectors[j]).cwiseAbs().maxCoeff());
    }
    CHECK(worst <= 1e-9);
    // Degree 0 is the normalized constant.
    CHECK(par.vectors[0].cwiseAbs().minCoeff() == doctest::Approx(1.0 / std::sqrt(g.size() * g.cell_area())));

    CHECK_THROWS_AS(build_poly_basis(g, -1), ValidationError);
    // Too few grid points for the family.
    CHECK_THROWS(build_poly_basis(make_grid(1.0, 1.0, 3, 1), 3));
}

TEST_CASE("projection onto the basis") {
    const auto g = make_grid(1.0, 1.0, 15, 15);
    const auto basis = build_poly_basis(g, 2);
    const Vector quad = sample_field(g, [](double x, double y) { return 1.0 + x - 2.0 * y * y + x * y; });
    CHECK((project(g, basis.vectors, quad) - quad).cwiseAbs().maxCoeff() <= 1e-10);
    const Vector wave = sample_field(g, [](double x, double y) { return std::sin(7.0 * x) * std::cos(5.0 * y); });
    const Vector r = wave - project(g, basis.vectors, wave);
    for (const auto& b : basis.vectors) CHECK(std::abs(l2_inner(g, r, b)) <= 1e-12);
}
