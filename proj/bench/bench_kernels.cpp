// Timings of the parallel kernels against their serial references.
// Usage: bench_kernels [repeats]

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <string>

#include <fmt/core.h>
#include <omp.h>

#include "modfun/convolution.hpp"
#include "modfun/heat.hpp"
#include "modfun/poly_basis.hpp"

using namespace modfun;

namespace {

double best_of(int repeats, const std::function<void()>& f) {
    double best = INFINITY;
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

void row(const std::string& name, double serial, double parallel, double diff) {
    fmt::print("{:<34} {:>10.4f} {:>10.4f} {:>8.2f} {:>10.2e}\n", name, serial, parallel, serial / parallel, diff);
}

}  // namespace

int main(int argc, char** argv) {
    const int repeats = argc > 1 ? std::max(1, std::atoi(argv[1])) : 3;
    const int threads = omp_get_max_threads();
    fmt::print("threads: {}, best of {}\n", threads, repeats);
    fmt::print("{:<34} {:>10} {:>10} {:>8} {:>10}\n", "kernel", "serial s", "omp s", "speedup", "max diff");

    {
        const int n = 20000, dim = 3;
        const double dt = 1e-3;
        auto f = [](double t) { return Vector::Constant(3, std::sin(3 * t)); };
        auto g = [](double t) { return Vector::Constant(3, std::exp(-t)); };
        const auto v = SampledSignal::from_function(0.0, dt, dim, n, f);
        const auto w = SampledSignal::from_function(0.0, dt, dim, n, g);
        SampledSignal s = convolve_sampled_serial(v, w), p = s;
        const double ts = best_of(repeats, [&] { s = convolve_sampled_serial(v, w); });
        const double tp = best_of(repeats, [&] { p = convolve_sampled(v, w); });
        row(fmt::format("convolution n={} dim={}", n, dim), ts, tp, (s.values() - p.values()).cwiseAbs().maxCoeff());
    }

    {
        const auto grid = heat::make_grid(1.0, 1.0, 63, 63);
        const int degree = 10;
        heat::PolyBasis s = heat::build_poly_basis_serial(grid, degree), p = s;
        const double ts = best_of(repeats, [&] { s = heat::build_poly_basis_serial(grid, degree); });
        const double tp = best_of(repeats, [&] { p = heat::build_poly_basis(grid, degree); });
        double diff = 0.0;
        for (int j = 0; j < s.count(); ++j) diff = std::max(diff, (s.vectors[j] - p.vectors[j]).cwiseAbs().maxCoeff());
        row(fmt::format("poly basis 63x63 deg={} (N={})", degree, s.count()), ts, tp, diff);
    }

    {
        // Same kernel pinned to one thread versus the full team.
        const auto sys = heat::assemble_heat(heat::make_grid(1.0, 1.0, 15, 15), 0.1, 1.0);
        const auto basis = heat::build_poly_basis(sys.grid, 3);
        std::vector<ModulatingPair> s, p;
        omp_set_num_threads(1);
        const double ts = best_of(repeats, [&] { s = heat::heat_null_controls(sys, basis.vectors, 1.0, 1e-3); });
        omp_set_num_threads(threads);
        const double tp = best_of(repeats, [&] { p = heat::heat_null_controls(sys, basis.vectors, 1.0, 1e-3); });
        double diff = 0.0;
        for (std::size_t j = 0; j < s.size(); ++j)
            diff = std::max(diff, (s[j].eta.density()->values() - p[j].eta.density()->values()).cwiseAbs().maxCoeff());
        row(fmt::format("heat null controls 15x15 N={}", basis.count()), ts, tp, diff);
    }
    return 0;
}
