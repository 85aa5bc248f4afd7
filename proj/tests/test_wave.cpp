#include "doctest.h"

#include <cmath>

#include "modfun/errors.hpp"
#include "modfun/wave.hpp"

using namespace modfun;
using namespace modfun::wave;

namespace {

constexpr double kPi = 3.141592653589793;

// Smooth bump on [a, b], zero outside.
std::function<double(double)> bump(double a, double b) {
    return [a, b](double t) {
        if (t <= a || t >= b) return 0.0;
        const double s = std::sin(kPi * (t - a) / (b - a));
        return s * s;
    };
}

// d'Alembert solution of the forced, clamped string from rest:
// a(t, 0) = 2 sum_j (-1)^j u(t - 2 j l) and p(t, xi) = (a(t - xi, 0) - a(t - 2l + xi, 0)) / 2.
double closed_form_velocity(const std::function<double(double)>& u, double length, double t, double xi) {
    auto a0 = [&](double s) {
        double acc = 0.0;
        for (int j = 0; s - 2 * j * length >= 0.0; ++j) acc += (j % 2 == 0 ? 2.0 : -2.0) * u(s - 2 * j * length);
        return acc;
    };
    auto at = [&](double s) { return s >= 0.0 ? a0(s) : 0.0; };
    return 0.5 * (at(t - xi) - at(t - 2 * length + xi));
}

double l2_trapezoid(const SampledSignal& s) {
    double acc = 0.0;
    for (int k = 0; k < s.size(); ++k) acc += (k == 0 || k == s.size() - 1 ? 0.5 : 1.0) * s[k] * s[k];
    return std::sqrt(acc * s.dt());
}

}  // namespace

TEST_CASE("grid snapping and validation") {
    const auto g = make_grid(1.0, 512, 0.3);
    CHECK(g.xi0_index == 154);
    CHECK(std::abs(g.xi0() - 0.3) <= 0.5 * g.dx);
    CHECK_THROWS_AS(make_grid(1.0, 512, 0.0), ValidationError);
    CHECK_THROWS_AS(make_grid(1.0, 512, 1.0), ValidationError);
    CHECK_THROWS_AS(make_grid(-1.0, 512, 0.3), ValidationError);
    CHECK_THROWS_AS(make_grid(1.0, 1, 0.3), ValidationError);
    CHECK_THROWS_AS(StringState(g, Vector::Zero(3), Vector::Zero(3)), DimensionError);
}

TEST_CASE("zero state stays zero and dt > dx is rejected") {
    const auto g = make_grid(1.0, 64, 0.3);
    StringState s(g);
    for (int k = 0; k < 200; ++k) s = step_string(s, 0.0, g.dx);
    CHECK(s.q().cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.p().cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(step_string(s, 0.0, 1.01 * g.dx), CflViolation);
    CHECK_THROWS_AS(StringPlant(s, 2 * g.dx), CflViolation);
}

TEST_CASE("an interior pulse translates at unit speed") {
    const auto g = make_grid(4.0, 800, 1.0);
    // Right-moving pulse: p = -q.
    const auto f = gaussian(1.0, 0.05);
    auto s = StringState::from_functions(g, [&](double x) { return -f(x); }, f);
    const int steps = static_cast<int>(std::lround(1.0 / g.dx));
    for (int k = 0; k < steps; ++k) s = step_string(s, 0.0, g.dx);
    int peak = 0;
    s.p().maxCoeff(&peak);
    CHECK(std::abs(peak * g.dx - 2.0) <= g.dx);
    CHECK(s.p().maxCoeff() == doctest::Approx(1.0).epsilon(1e-12));

    // Sub-CFL steps smear but keep the peak within a cell of the exact position.
    auto t = StringState::from_functions(g, [&](double x) { return -f(x); }, f);
    for (int k = 0; k < 2 * steps; ++k) t = step_string(t, 0.0, 0.5 * g.dx);
    t.p().maxCoeff(&peak);
    CHECK(std::abs(peak * g.dx - 2.0) <= g.dx);
}

TEST_CASE("forced string matches the travelling-wave closed form at dt = dx") {
    const auto g = make_grid(1.0, 200, 0.3);
    const auto u = bump(0.05, 0.25);
    StringState s(g);
    double worst = 0.0;
    for (int k = 1; k <= 700; ++k) {
        s = step_string(s, u(k * g.dx), g.dx);
        const double t = k * g.dx;
        worst = std::max(worst, std::abs(s.output() - closed_form_velocity(u, 1.0, t, g.xi0())));
        worst = std::max(worst, std::abs(s.left_velocity() - closed_form_velocity(u, 1.0, t, 0.0)));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("unforced energy is conserved at dt = dx") {
    const auto g = make_grid(1.0, 256, 0.3);
    auto s = StringState::from_functions(g, gaussian(0.5, 0.05), [](double) { return 0.0; });
    const double e0 = s.energy();
    double drift = 0.0;
    for (int k = 0; k < 10 * 256; ++k) {
        s = step_string(s, 0.0, g.dx);
        drift = std::max(drift, std::abs(s.energy() - e0));
    }
    CHECK(drift <= 1e-12 * e0);
}

TEST_CASE("energy balance: dE = boundary power u p(0) by the trapezoid rule") {
    const auto g = make_grid(1.0, 256, 0.3);
    const auto u = bump(0.1, 0.6);
    auto s = StringState::from_functions(g, gaussian(0.5, 0.05), gaussian(0.7, 0.05), u(0.0));
    double worst = 0.0;
    for (int k = 0; k < 600; ++k) {
        const double uk = u(k * g.dx), uk1 = u((k + 1) * g.dx);
        const auto next = step_string(s, uk1, g.dx);
        const double flux = 0.5 * g.dx * (uk * s.left_velocity() + uk1 * next.left_velocity());
        worst = std::max(worst, std::abs(next.energy() - s.energy() - flux));
        s = next;
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("finite propagation speed") {
    const auto g = make_grid(1.0, 200, 0.3);
    const auto base = StringState::from_functions(g, gaussian(0.8, 0.05), [](double) { return 0.0; });
    Vector q = base.q();
    const int at = 150;
    q(at) += 1.0;
    StringState a = base, b(g, q, base.p());
    const int arrival = at - g.xi0_index;
    for (int k = 1; k <= arrival; ++k) {
        a = step_string(a, 0.1, g.dx);
        b = step_string(b, 0.1, g.dx);
        if (k < arrival - 1) CHECK(a.output() == b.output());
    }
    CHECK(a.output() != b.output());
}

TEST_CASE("z = u + y(t - xi0) misses p(t, 0) by exactly the delayed strain at xi0") {
    // p(t, 0) = u(t) + b(t, 0) and b(t, 0) = (p + q)(t - xi0, xi0), so
    // p(t, 0) - z(t) = q(t - xi0, xi0). The modulating pair alone does not see the strain term.
    const auto g = make_grid(1.0, 256, 0.3);
    const auto u = bump(0.2, 0.9);
    auto s = StringState::from_functions(g, gaussian(0.5, 0.05), [](double) { return 0.0; });
    std::vector<double> y, qxi;
    y.push_back(s.output());
    qxi.push_back(s.q()(g.xi0_index));
    double worst = 0.0, defect = 0.0;
    const int i0 = g.xi0_index;
    for (int k = 1; k <= 1000; ++k) {
        s = step_string(s, u(k * g.dx), g.dx);
        y.push_back(s.output());
        qxi.push_back(s.q()(i0));
        if (k < i0) continue;
        const double z = u(k * g.dx) + y[k - i0];
        worst = std::max(worst, std::abs(s.left_velocity() - z - qxi[k - i0]));
        defect = std::max(defect, std::abs(s.left_velocity() - z));
    }
    CHECK(worst <= 1e-12);
    CHECK(defect > 0.1);
}

TEST_CASE("wave_stabilize: k = 1 realizes u = -y(t - xi0)/2, k = 0 conserves energy") {
    const auto g = make_grid(1.0, 128, 0.3);
    const auto s0 = StringState::from_functions(g, gaussian(0.5, 0.05), [](double) { return 0.0; });
    const auto run = wave_stabilize(s0, 1.0, 3.0);
    const int i0 = g.xi0_index;
    for (int k = 0; k < run.u.size(); ++k) {
        const double expect = k < i0 ? 0.0 : -0.5 * run.y[k - i0];
        CHECK(run.u[k] == doctest::Approx(expect).epsilon(1e-12).scale(1.0));
    }
    // z(t) = u(t) + y(t - xi0) from the recorded history.
    for (int k = i0; k < run.u.size(); ++k)
        CHECK(run.z[k] == doctest::Approx(run.u[k] + run.y[k - i0]).scale(1.0).epsilon(1e-12));

    const auto still = wave_stabilize(s0, 0.0, 10.0);
    const double e0 = still.energy[0];
    for (int k = 0; k < still.energy.size(); ++k) CHECK(std::abs(still.energy[k] - e0) <= 1e-8 * e0);
    CHECK_THROWS_AS(wave_stabilize(s0, -1.0, 1.0), ValidationError);
}

TEST_CASE("wave_null_control: zero alpha and support checks") {
    const auto g = make_grid(1.0, 100, 0.3);
    const auto zero = wave_null_control(SampledSignal::zeros(0.0, g.dx, 1, 20), g, 2.0);
    CHECK(zero.eta.density()->values().cwiseAbs().maxCoeff() == 0.0);
    CHECK(zero.mu.density()->values().cwiseAbs().maxCoeff() == 0.0);
    CHECK(zero.phi_w.values().cwiseAbs().maxCoeff() == 0.0);
    CHECK(zero.residual == 0.0);

    Matrix late = Matrix::Zero(1, 40);
    late(0, 30) = 1.0;
    CHECK_THROWS_AS(wave_null_control(SampledSignal(0.0, g.dx, late), g, 2.0), SupportViolation);
    Matrix early = Matrix::Zero(1, 10);
    early(0, 0) = 1.0;
    CHECK_THROWS_AS(wave_null_control(SampledSignal(0.0, g.dx, early), g, 2.0), SupportViolation);
    CHECK_THROWS_AS(wave_null_control(SampledSignal::zeros(0.0, 0.5 * g.dx, 1, 10), g, 2.0), ValidationError);
}

TEST_CASE("wave_null_control: eta is the delayed negated alpha, mu = alpha") {
    const auto g = make_grid(1.0, 400, 0.3);
    const auto f = bump(0.02, 0.2);
    const auto alpha = SampledSignal::from_function(0.0, g.dx, 1, 100, [&](double t) { return Vector::Constant(1, f(t)); });
    const auto nc = wave_null_control(alpha, g, 3.0);
    const auto& eta = *nc.eta.density();
    const auto& mu = *nc.mu.density();
    const int i0 = g.xi0_index;
    for (int k = 0; k < eta.size(); ++k) CHECK(eta[k] == (k < i0 ? 0.0 : -alpha[k - i0]));
    for (int k = 0; k < mu.size(); ++k) CHECK(mu[k] == alpha[k]);
    // The simulated adjoint output phi_p(t, 0) is alpha as well.
    for (int k = 0; k < alpha.size(); ++k) CHECK(std::abs(nc.mu_simulated[k] - alpha[k]) <= 1e-14);

    // Before the wave reaches xi0: phi_w(t, xi) = int_0^{t - xi} alpha.
    const int k = i0 - 5;
    double worst = 0.0;
    for (int i = 0; i <= k; ++i) {
        double integral = 0.0;
        for (int j = 0; j < k - i; ++j) integral += 0.5 * g.dx * (alpha[j] + alpha[j + 1]);
        worst = std::max(worst, std::abs(nc.phi_w.values()(i, k) - integral));
    }
    CHECK(worst <= 1e-14);
}

TEST_CASE("wave_null_control: the point force at xi0 cancels the reflected half only") {
    // The right-moving wave alpha meets eta = -alpha(t - xi0) at xi0. The force splits into two
    // equal halves moving both ways, so it stops the incoming wave on neither side: the
    // adjoint keeps L2 norm |alpha| after t = xi0 + supp alpha, half on each side of xi0.
    const auto g = make_grid(1.0, 400, 0.3);
    const auto f = bump(0.02, 0.2);
    const auto alpha = SampledSignal::from_function(0.0, g.dx, 1, 100, [&](double t) { return Vector::Constant(1, f(t)); });
    const auto nc = wave_null_control(alpha, g, 3.0);
    const double a = l2_trapezoid(alpha);
    // Space-trapezoid norm of the adjoint against the time-trapezoid norm of alpha: O(dx^2) apart.
    CHECK(std::abs(nc.residual - a) <= g.dx * g.dx);
    CHECK(std::abs(nc.transmitted - a / std::sqrt(2.0)) <= g.dx * g.dx);
    // Later the reflected half bounces off xi = 0 and the norm stays put: nothing is nulled.
    const auto longer = wave_null_control(alpha, g, 6.0);
    CHECK(longer.residual == doctest::Approx(nc.residual).epsilon(1e-12));
}

TEST_CASE("narrowing bumps: eta tends to -delta at xi0 and mu to delta at 0") {
    const auto g = make_grid(1.0, 1000, 0.3);
    double prev_spread = 1.0;
    for (double width : {0.1, 0.05, 0.02}) {
        const auto f = bump(0.0, width);
        const auto alpha = SampledSignal::from_function(0.0, g.dx, 1, 200, [&](double t) {
            return Vector::Constant(1, f(t) * 2.0 / width);
        });
        const auto nc = wave_null_control(alpha, g, 1.0);
        const auto& eta = *nc.eta.density();
        const auto& mu = *nc.mu.density();
        double eta_mass = 0.0, mu_mass = 0.0, centre = 0.0;
        for (int k = 0; k + 1 < eta.size(); ++k) eta_mass += 0.5 * g.dx * (eta[k] + eta[k + 1]);
        for (int k = 0; k + 1 < mu.size(); ++k) mu_mass += 0.5 * g.dx * (mu[k] + mu[k + 1]);
        for (int k = 0; k < eta.size(); ++k) centre += g.dx * eta[k] * k * g.dx;
        CHECK(eta_mass == doctest::Approx(-1.0).epsilon(1e-9));
        CHECK(mu_mass == doctest::Approx(1.0).epsilon(1e-9));
        const double spread = std::abs(centre / eta_mass - g.xi0());
        CHECK(spread <= prev_spread);
        prev_spread = spread;
    }
    CHECK(prev_spread <= 0.0101);
}
