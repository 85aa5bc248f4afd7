#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <fmt/core.h>

#include "modfun/closed_loop.hpp"
#include "modfun/errors.hpp"
#include "modfun/estimator.hpp"
#include "modfun/heat.hpp"
#include "modfun/null_control.hpp"
#include "modfun/poly_basis.hpp"
#include "modfun/wave.hpp"

namespace modfun::app {

namespace {

constexpr double kPi = 3.141592653589793;

using Rng = std::mt19937_64;

fs::path resolve(const RunConfig& cfg, const std::string& path) {
    const fs::path p(path);
    return p.is_absolute() ? p : cfg.base_dir / p;
}

int sample_count(double t_end, double dt) {
    if (!(t_end > 0.0)) throw ValidationError("config: 't_end' must be positive");
    return static_cast<int>(std::floor(t_end / dt + 1e-9)) + 1;
}

std::string testbed(const Params& p) {
    const std::string name = p.text("testbed", "lti");
    if (name != "lti" && name != "wave" && name != "heat")
        throw ValidationError("config: 'testbed' must be lti, wave or heat");
    return name;
}

LtiSystem load_system(const RunConfig& cfg, const Params& p) {
    const json& s = p.raw("system");
    if (s.is_string()) {
        try {
            return system_from_json(json::parse(read_text(resolve(cfg, s.get<std::string>()))));
        } catch (const json::parse_error& e) {
            throw ValidationError("system file: " + std::string(e.what()));
        }
    }
    return system_from_json(s);
}

// Vector literal, "zero", "random" or {"basis_index": j}.
Vector vector_spec(const json& spec, int n, Rng& rng, const std::string& what) {
    if (spec.is_array()) {
        Vector v = vector_from_json(spec, what);
        if (v.size() != n) throw DimensionError(fmt::format("{}: expected {} entries, got {}", what, n, v.size()));
        return v;
    }
    if (spec.is_string() && spec == "zero") return Vector::Zero(n);
    if (spec.is_string() && spec == "random") {
        std::normal_distribution<double> d(0.0, 1.0);
        Vector v(n);
        for (int i = 0; i < n; ++i) v(i) = d(rng);
        return v;
    }
    if (spec.is_object() && spec.contains("basis_index")) {
        const int j = spec["basis_index"].get<int>();
        if (j < 0 || j >= n) throw ValidationError(what + ": basis_index out of range");
        return Vector::Unit(n, j);
    }
    throw ValidationError(what + ": expected a vector, \"zero\", \"random\" or {\"basis_index\": j}");
}

// Input signal spec: absent or {"kind": "zero"}, {"kind": "smooth", "terms": 3, "amplitude": 1},
// {"kind": "csv", "path": ...}. "smooth" draws a sum of sinusoids per channel from the seed.
SampledSignal input_spec(const RunConfig& cfg, const Params& p, const std::string& key, int dim, double dt,
                         int samples, Rng& rng) {
    if (!p.has(key)) return SampledSignal::zeros(0.0, dt, dim, samples);
    const Params s = p.child(key);
    const std::string kind = s.text("kind");
    if (kind == "zero") return SampledSignal::zeros(0.0, dt, dim, samples);
    if (kind == "smooth") {
        const int terms = s.integer("terms", 3);
        const double amplitude = s.number("amplitude", 1.0);
        if (terms < 1) throw ValidationError("config: input terms must be >= 1");
        std::uniform_real_distribution<double> a(-1.0, 1.0), f(0.3, 3.0), ph(0.0, 2 * kPi);
        Matrix amp(dim, terms), freq(dim, terms), phase(dim, terms);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < terms; ++j) {
                amp(i, j) = amplitude * a(rng);
                freq(i, j) = f(rng);
                phase(i, j) = ph(rng);
            }
        return SampledSignal::from_function(0.0, dt, dim, samples, [&](double t) {
            Vector u = Vector::Zero(dim);
            for (int i = 0; i < dim; ++i)
                for (int j = 0; j < terms; ++j) u(i) += amp(i, j) * std::sin(freq(i, j) * t + phase(i, j));
            return u;
        });
    }
    if (kind == "csv") {
        const SampledSignal s_in = read_signal_csv(resolve(cfg, s.text("path")));
        if (s_in.dim() != dim) throw DimensionError(fmt::format("input csv: expected {} channels", dim));
        if (!same_step(s_in.dt(), dt)) throw ValidationError("input csv: time step differs from dt");
        if (std::abs(s_in.t0()) > 1e-9 * dt) throw ValidationError("input csv: must start at t = 0");
        if (s_in.size() < samples) throw ValidationError("input csv: shorter than the run");
        return SampledSignal(0.0, dt, s_in.values().leftCols(samples));
    }
    throw ValidationError("config: input kind must be zero, smooth or csv");
}

std::string trajectory_csv(const Trajectory& tr) {
    const int N = tr.inputs.size();
    const int m = tr.inputs.dim(), p = tr.outputs.dim(), n = tr.states.dim();
    const bool with_states = tr.states.size() == N;
    std::vector<std::string> header{"t"};
    for (int i = 0; i < m; ++i) header.push_back("u" + std::to_string(i));
    for (int i = 0; i < p; ++i) header.push_back("y" + std::to_string(i));
    if (with_states)
        for (int i = 0; i < n; ++i) header.push_back("x" + std::to_string(i));
    Matrix rows(N, static_cast<Eigen::Index>(header.size()));
    for (int k = 0; k < N; ++k) {
        rows(k, 0) = tr.inputs.time(k);
        rows.row(k).segment(1, m) = tr.inputs.sample(k).transpose();
        rows.row(k).segment(1 + m, p) = tr.outputs.sample(k).transpose();
        if (with_states) rows.row(k).segment(1 + m + p, n) = tr.states.sample(k).transpose();
    }
    return csv_table(header, rows);
}

std::vector<ModulatingPair> pairs_from_config(const RunConfig& cfg, const Params& p) {
    std::vector<fs::path> dirs;
    if (p.has("pairs")) {
        const json& list = p.raw("pairs");
        if (!list.is_array() || list.empty()) throw ValidationError("config: 'pairs' must be a non-empty list");
        for (const auto& d : list) dirs.push_back(resolve(cfg, d.get<std::string>()));
    } else if (p.has("pairs_dir")) {
        const fs::path root = resolve(cfg, p.text("pairs_dir"));
        if (!fs::is_directory(root)) throw ValidationError("config: pairs_dir " + root.string() + " is not a directory");
        for (const auto& entry : fs::directory_iterator(root))
            if (entry.is_directory() && fs::exists(entry.path() / "meta.json")) dirs.push_back(entry.path());
        std::sort(dirs.begin(), dirs.end());
        if (dirs.empty()) throw ValidationError("config: no pair bundles in " + root.string());
    } else {
        throw ValidationError("config: need 'pairs' (list of bundle directories) or 'pairs_dir'");
    }
    std::vector<ModulatingPair> pairs;
    for (const auto& d : dirs) pairs.push_back(read_pair(d));
    for (const auto& pair : pairs)
        if (std::abs(pair.horizon - pairs.front().horizon) > 1e-9 * pairs.front().horizon)
            throw ValidationError("pair bundles: horizon mismatch between bundles");
    return pairs;
}

std::string pair_dir(int j) { return fmt::format("pair_{:03d}", j); }

json summary_header(const std::string& command) { return json{{"command", command}}; }

// ---------------------------------------------------------------------------------------------
// Wave helpers.

wave::StringGrid wave_grid(const Params& p) {
    return wave::make_grid(p.positive("length", 1.0), p.integer("nx", 512), p.number("xi0", 0.3));
}

wave::StringState wave_initial(const RunConfig& cfg, const Params& p, const wave::StringGrid& g) {
    auto zero = [](double) { return 0.0; };
    if (!p.has("init")) return wave::StringState::from_functions(g, wave::gaussian(0.5 * g.length, 0.05 * g.length), zero);
    const Params init = p.child("init");
    const std::string kind = init.text("kind");
    if (kind == "gaussian") {
        const double amp = init.number("amplitude", 1.0);
        const auto f = wave::gaussian(init.number("center", 0.5 * g.length), init.positive("width", 0.05 * g.length));
        return wave::StringState::from_functions(g, [&](double x) { return amp * f(x); }, zero);
    }
    if (kind == "pulse") {
        // Compact cos^2 bump in strain; "right" and "left" set p = -q or p = q.
        const double c = init.number("center", 0.5 * g.length), w = init.positive("width", 0.1 * g.length);
        const double amp = init.number("amplitude", 1.0);
        const std::string dir = init.text("direction", "standing");
        if (dir != "standing" && dir != "right" && dir != "left")
            throw ValidationError("config: init.direction must be standing, right or left");
        auto f = [=](double x) {
            const double r = (x - c) / w;
            return std::abs(r) >= 0.5 ? 0.0 : amp * std::pow(std::cos(kPi * r), 2);
        };
        const double sign = dir == "right" ? -1.0 : dir == "left" ? 1.0 : 0.0;
        return wave::StringState::from_functions(g, f, [=](double x) { return sign * f(x); });
    }
    if (kind == "file") {
        const CsvData d = read_csv(resolve(cfg, init.text("path")));
        if (d.rows.cols() != 3 || d.rows.rows() != g.nodes())
            throw ValidationError(fmt::format("init file: need columns xi,q,p and {} rows", g.nodes()));
        return wave::StringState(g, d.rows.col(1), d.rows.col(2));
    }
    throw ValidationError("config: init.kind must be gaussian, pulse or file");
}

std::string wave_energy_csv(const SampledSignal& energy) { return signal_csv(energy, "E"); }

// ---------------------------------------------------------------------------------------------
// Heat helpers.

heat::HeatSystem heat_system(const Params& p) {
    const auto g = heat::make_grid(p.positive("L1", 1.0), p.positive("L2", 1.0), p.integer("nx", 31), p.integer("ny", 31));
    return heat::assemble_heat(g, p.positive("k_diff", 0.1), p.number("c_react", 1.0));
}

Vector heat_initial(const Params& p, const heat::Grid2D& g) {
    const std::string kind = p.has("init") ? p.child("init").text("kind") : "default";
    if (kind == "default")
        return heat::sample_field(g, [&](double x, double y) {
            return std::sin(kPi * x / g.L1) * std::sin(kPi * y / g.L2) + 0.5 * (x / g.L1) * (y / g.L2) * (1 - y / g.L2);
        });
    if (kind == "zero") return Vector::Zero(g.size());
    if (kind == "gaussian") {
        const Params init = p.child("init");
        const double cx = init.number("cx", 0.5 * g.L1), cy = init.number("cy", 0.5 * g.L2);
        const double w = init.positive("width", 0.15);
        return heat::sample_field(g, [&](double x, double y) {
            return std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (w * w));
        });
    }
    throw ValidationError("config: heat init.kind must be default, zero or gaussian");
}

// Boundary data on Gamma: amplitude sin(frequency t) sin(pi y / L2) by default.
SampledSignal heat_input(const Params& p, const heat::Grid2D& g, double dt, int samples) {
    double amplitude = 0.3, frequency = 2.0;
    if (p.has("input")) {
        const Params in = p.child("input");
        const std::string kind = in.text("kind");
        if (kind == "zero") return SampledSignal::zeros(0.0, dt, g.ny, samples);
        if (kind != "boundary_sine") throw ValidationError("config: heat input.kind must be zero or boundary_sine");
        amplitude = in.number("amplitude", amplitude);
        frequency = in.number("frequency", frequency);
    }
    Matrix u(g.ny, samples);
    for (int k = 0; k < samples; ++k)
        for (int j = 0; j < g.ny; ++j) u(j, k) = amplitude * std::sin(frequency * k * dt) * std::sin(kPi * g.y(j) / g.L2);
    return SampledSignal(0.0, dt, std::move(u));
}

std::string basis_csv(const heat::Grid2D& g, const heat::PolyBasis& b) {
    std::vector<std::string> header{"x", "y"};
    for (int j = 0; j < b.count(); ++j) header.push_back(fmt::format("phi{}_{}{}", j, b.exponents[j].first, b.exponents[j].second));
    Matrix rows(g.size(), 2 + b.count());
    for (int jy = 0; jy < g.ny; ++jy)
        for (int ix = 0; ix < g.nx; ++ix) {
            const int r = g.index(ix, jy);
            rows(r, 0) = g.x(ix);
            rows(r, 1) = g.y(jy);
            for (int j = 0; j < b.count(); ++j) rows(r, 2 + j) = b.vectors[j](r);
        }
    return csv_table(header, rows);
}

std::string field_csv(const heat::Grid2D& g, const Vector& estimate, const Vector& truth) {
    Matrix rows(g.size(), 4);
    for (int jy = 0; jy < g.ny; ++jy)
        for (int ix = 0; ix < g.nx; ++ix) {
            const int r = g.index(ix, jy);
            rows.row(r) << g.x(ix), g.y(jy), estimate(r), truth(r);
        }
    return csv_table({"x", "y", "value", "true"}, rows);
}

}  // namespace

// ---------------------------------------------------------------------------------------------

CommandResult cmd_nullcontrol(const RunConfig& cfg) {
    const Params p(cfg.params, "");
    CommandResult res{OutputSet(cfg.out_dir), kSuccess, {}};
    Rng rng(cfg.seed);
    json summary = summary_header("nullcontrol");
    const std::string bed = testbed(p);

    if (bed == "lti") {
        const LtiSystem sys = load_system(cfg, p);
        const double T = p.positive("horizon_T", 1.0), dt = p.positive("dt", 1e-3);
        const double tol = p.positive("tol_residual", 1e-8);
        NullControlOptions opts;
        opts.conditioning_floor = p.positive("conditioning_floor", opts.conditioning_floor);
        std::vector<Vector> targets;
        bool single = false;
        if (p.has("phi0")) {
            targets.push_back(vector_spec(p.raw("phi0"), sys.n(), rng, "config: 'phi0'"));
            single = true;
        } else if (p.has("targets")) {
            const json& t = p.raw("targets");
            if (t.is_string() && t == "standard_basis") {
                for (int i = 0; i < sys.n(); ++i) targets.push_back(Vector::Unit(sys.n(), i));
            } else if (t.is_array() && !t.empty()) {
                for (const auto& item : t) targets.push_back(vector_spec(item, sys.n(), rng, "config: 'targets'"));
            } else {
                throw ValidationError("config: 'targets' must be \"standard_basis\" or a list of vectors");
            }
        } else {
            throw ValidationError("config: need 'phi0' or 'targets'");
        }
        Matrix report(static_cast<Eigen::Index>(targets.size()), 2);
        for (std::size_t j = 0; j < targets.size(); ++j) {
            ModulatingPair pair = adjoint_null_control(sys, targets[j], T, dt, opts);
            const double scale = targets[j].norm();
            pair.residual = scale > 0.0 ? adjoint_end_state(sys, targets[j], pair).norm() / scale : 0.0;
            pair.degraded = pair.residual > tol;
            report.row(j) << static_cast<double>(j), pair.residual;
            if (pair.degraded) {
                res.exit_code = kNumericalFailure;
                res.messages.push_back(fmt::format("pair {}: residual {} exceeds tolerance {}", j, pair.residual, tol));
            }
            stage_pair(res.outputs, single ? "pair" : pair_dir(static_cast<int>(j)), pair);
        }
        res.outputs.add("residuals.csv", csv_table({"index", "residual"}, report));
        summary["pairs"] = targets.size();
        summary["tolerance"] = tol;
        summary["max_residual"] = report.col(1).maxCoeff();
    } else if (bed == "wave") {
        const auto g = wave_grid(p);
        const std::string phi0 = p.has("phi0") ? p.text("phi0") : "alpha";
        if (phi0 == "functional") {
            // The distributional pair of the delayed-output feedback; nothing to resimulate.
            ModulatingPair pair = wave::wave_modulating_pair(g);
            pair.residual = std::numeric_limits<double>::quiet_NaN();
            stage_pair(res.outputs, "pair", pair);
            summary["pair"] = "eta = -delta(xi0), mu = delta(0)";
            summary["xi0"] = g.xi0();
        } else {
            if (phi0 != "alpha") throw ValidationError("config: wave phi0 must be \"alpha\" or \"functional\"");
            const double dx = g.dx;
            const int len = g.xi0_index + 1;
            SampledSignal alpha = SampledSignal::zeros(0.0, dx, 1, len);
            static const json empty = json::object();
            const Params a = p.has("alpha") ? p.child("alpha") : Params(empty, "alpha");
            const std::string kind = a.text("kind", "bump");
            if (kind == "bump") {
                const double start = a.number("start", 0.1 * g.xi0()), end = a.number("end", 0.6 * g.xi0());
                const double amp = a.number("amplitude", 1.0);
                if (!(start >= 0.0 && end > start && end < g.xi0()))
                    throw SupportViolation("config: alpha bump must satisfy 0 <= start < end < xi0");
                for (int k = 0; k < len; ++k) {
                    const double t = k * dx;
                    if (t > start && t < end) alpha.values()(0, k) = amp * std::pow(std::sin(kPi * (t - start) / (end - start)), 2);
                }
            } else if (kind == "csv") {
                alpha = read_signal_csv(resolve(cfg, a.text("path")));
            } else {
                throw ValidationError("config: alpha.kind must be bump or csv");
            }
            const double t_end = p.positive("t_end", 2.0 * g.length);
            const double tol = p.positive("tol_residual", 5 * dx);
            const auto nc = wave::wave_null_control(alpha, g, t_end);
            ModulatingPair pair{nc.eta, nc.mu, nc.eta.support_end(), Vector(), "wave adjoint driven by alpha",
                                nc.residual, nc.residual > tol};
            stage_pair(res.outputs, "pair", pair);
            res.outputs.add("alpha.csv", signal_csv(alpha, "alpha"));
            res.outputs.add("adjoint_output.csv", signal_csv(nc.mu_simulated, "phi_p0_"));
            summary["xi0"] = g.xi0();
            summary["dx"] = dx;
            summary["residual"] = nc.residual;
            summary["transmitted"] = nc.transmitted;
            summary["tolerance"] = tol;
            if (pair.degraded) {
                res.exit_code = kNumericalFailure;
                res.messages.push_back(fmt::format(
                    "adjoint residual {} exceeds tolerance {}: the point force at xi0 leaves half of the wave "
                    "transmitted and half reflected (see README, known deviations)",
                    nc.residual, tol));
            }
        }
    } else {
        const auto sys = heat_system(p);
        const int degree = p.integer("basis_degree", 4);
        const double T = p.positive("horizon_T", 1.0), dt = p.positive("dt", 1e-3);
        heat::HeatNullControlOptions opts;
        opts.tol_null = p.positive("tol_null", opts.tol_null);
        const auto basis = heat::build_poly_basis(sys.grid, degree);
        const auto pairs = heat::heat_null_controls(sys, basis.vectors, T, dt, opts);
        Matrix report(basis.count(), 5);
        int degraded = 0;
        for (int j = 0; j < basis.count(); ++j) {
            stage_pair(res.outputs, pair_dir(j), pairs[j]);
            report.row(j) << j, basis.exponents[j].first, basis.exponents[j].second, pairs[j].residual,
                pairs[j].degraded ? 1.0 : 0.0;
            degraded += pairs[j].degraded ? 1 : 0;
        }
        res.outputs.add("residuals.csv", csv_table({"index", "deg_x", "deg_y", "residual", "degraded"}, report));
        res.outputs.add("basis.csv", basis_csv(sys.grid, basis));
        summary["pairs"] = basis.count();
        summary["degraded"] = degraded;
        summary["tol_null"] = opts.tol_null;
        summary["max_residual"] = report.col(3).maxCoeff();
        if (degraded) {
            res.exit_code = kNumericalFailure;
            res.messages.push_back(fmt::format("{} of {} pairs above tol_null {} (max residual {})", degraded,
                                               basis.count(), opts.tol_null, report.col(3).maxCoeff()));
        }
    }
    res.outputs.add_json("summary.json", summary);
    return res;
}

CommandResult cmd_estimate(const RunConfig& cfg) {
    const Params p(cfg.params, "");
    CommandResult res{OutputSet(cfg.out_dir), kSuccess, {}};
    Rng rng(cfg.seed);
    const auto pairs = pairs_from_config(cfg, p);
    const int stride = p.integer("stride", 1);
    if (stride < 1) throw ValidationError("config: 'stride' must be >= 1");

    std::optional<SampledSignal> u, y, truth;
    if (p.has("data")) {
        const Params d = p.child("data");
        u = read_signal_csv(resolve(cfg, d.text("u")));
        y = read_signal_csv(resolve(cfg, d.text("y")));
        if (d.has("states")) truth = read_signal_csv(resolve(cfg, d.text("states")));
    } else if (p.has("system")) {
        const LtiSystem sys = load_system(cfg, p);
        const double dt = p.positive("dt", 1e-3);
        const int samples = sample_count(p.positive("t_end", 3.0), dt);
        const Vector x0 = p.has("x0") ? vector_spec(p.raw("x0"), sys.n(), rng, "config: 'x0'") : Vector::Zero(sys.n());
        const auto run = simulate(sys, x0, input_spec(cfg, p, "input", sys.m(), dt, samples, rng));
        u = run.inputs;
        y = run.outputs;
        truth = run.states;
    } else {
        throw ValidationError("config: need 'data' (u, y csv files) or 'system' to simulate");
    }
    if (!same_step(u->dt(), y->dt()) || u->size() != y->size() || std::abs(u->t0() - y->t0()) > 1e-9 * u->dt())
        throw ValidationError("estimate: u and y must share one time grid");
    if (truth && (truth->size() != u->size() || !same_step(truth->dt(), u->dt())))
        throw ValidationError("estimate: states must share the u/y time grid");

    std::optional<std::vector<Vector>> basis;
    if (p.has("basis")) {
        const json& b = p.raw("basis");
        std::vector<Vector> vs;
        if (b.is_string() && b == "standard") {
            const int n = pairs.front().target.size();
            if (n == 0) throw ValidationError("estimate: 'standard' basis needs target vectors in the bundles");
            for (int i = 0; i < n; ++i) vs.push_back(Vector::Unit(n, i));
        } else {
            const Matrix rows = matrix_from_json(b, "config: 'basis'");
            for (Eigen::Index r = 0; r < rows.rows(); ++r) vs.push_back(rows.row(r).transpose());
        }
        basis = std::move(vs);
    }

    const int N = static_cast<int>(pairs.size());
    Estimator est(pairs, basis, u->dim(), y->dim(), u->dt(), u->t0());
    std::vector<Vector> coeff_rows, rec_rows;
    std::vector<double> times, errors;
    for (int k = 0; k < u->size(); ++k) {
        est.push(u->sample(k), y->sample(k));
        const double t = u->time(k);
        if (t < u->t0() + est.horizon() - 1e-6 * u->dt() || k % stride != 0) continue;
        times.push_back(t);
        if (basis) {
            const auto rec = est.reconstruct(t);
            coeff_rows.push_back(rec.coefficients);
            rec_rows.push_back(rec.state);
            if (truth) {
                if (truth->dim() != rec.state.size()) throw DimensionError("estimate: states and basis dimension differ");
                errors.push_back((truth->sample(k) - rec.state).norm());
            }
        } else {
            coeff_rows.push_back(est.coefficients(t));
        }
    }
    auto table = [&](const std::vector<Vector>& rows, const std::string& prefix) {
        const int width = rows.empty() ? 0 : static_cast<int>(rows.front().size());
        std::vector<std::string> header{"t"};
        for (int i = 0; i < width; ++i) header.push_back(prefix + std::to_string(i));
        Matrix m(static_cast<Eigen::Index>(rows.size()), width + 1);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            m(r, 0) = times[r];
            m.row(r).tail(width) = rows[r].transpose();
        }
        return csv_table(header, m);
    };
    res.outputs.add("coeffs.csv", table(coeff_rows, "c"));
    if (basis) res.outputs.add("reconstruction.csv", table(rec_rows, "xhat"));
    json summary = summary_header("estimate");
    summary["pairs"] = N;
    summary["horizon"] = est.horizon();
    summary["rows"] = times.size();
    if (!errors.empty()) {
        Matrix m(static_cast<Eigen::Index>(errors.size()), 2);
        for (std::size_t r = 0; r < errors.size(); ++r) m.row(r) << times[r], errors[r];
        res.outputs.add("error_l2.csv", csv_table({"t", "error"}, m));
        summary["max_error"] = m.col(1).maxCoeff();
    }
    res.outputs.add_json("summary.json", summary);
    return res;
}

CommandResult cmd_feedback(const RunConfig& cfg) {
    const Params p(cfg.params, "");
    CommandResult res{OutputSet(cfg.out_dir), kSuccess, {}};
    Rng rng(cfg.seed);
    json summary = summary_header("feedback");
    const std::string bed = testbed(p);

    if (bed == "wave") {
        const auto g = wave_grid(p);
        const auto s0 = wave_initial(cfg, p, g);
        const double k = p.number("gain_k", 1.0);
        if (k < 0.0) throw ValidationError("config: 'gain_k' must be >= 0");
        const double t_end = p.positive("t_end", 5.0);
        const std::optional<double> dt = p.has("dt") ? std::optional<double>(p.positive("dt")) : std::nullopt;
        const auto run = wave::wave_stabilize(s0, k, t_end, dt);
        Matrix rows(run.u.size(), 5);
        for (int i = 0; i < run.u.size(); ++i) rows.row(i) << run.u.time(i), run.u[i], run.y[i], run.z[i], run.left_velocity[i];
        res.outputs.add("trajectory.csv", csv_table({"t", "u", "y", "z", "p0"}, rows));
        res.outputs.add("energy.csv", wave_energy_csv(run.energy));
        summary["energy_initial"] = run.energy[0];
        summary["energy_final"] = run.energy[run.energy.size() - 1];
    } else if (bed == "lti") {
        const LtiSystem sys = load_system(cfg, p);
        const double dt = p.positive("dt", 1e-3);
        std::vector<ModulatingPair> pairs;
        if (p.has("design")) {
            const Params d = p.child("design");
            const double T = d.positive("horizon_T", 0.5);
            const Matrix targets = d.matrix("targets");
            if (targets.cols() != sys.n()) throw DimensionError("design.targets: rows must have n entries");
            for (Eigen::Index r = 0; r < targets.rows(); ++r)
                pairs.push_back(adjoint_null_control(sys, targets.row(r).transpose(), T, dt));
        } else {
            pairs = pairs_from_config(cfg, p);
        }
        const Matrix gain = p.has("gain") ? p.matrix("gain") : Matrix::Identity(sys.m(), static_cast<Eigen::Index>(pairs.size()));
        const double warmup = p.number("warmup", pairs.front().horizon);
        const double t_end = p.positive("t_end", 5.0);
        const int samples = sample_count(t_end, dt);
        const Vector x0 = p.has("x0") ? vector_spec(p.raw("x0"), sys.n(), rng, "config: 'x0'") : Vector::Zero(sys.n());
        const auto warm = input_spec(cfg, p, "warmup_input", sys.m(), dt, samples, rng);
        const FeedbackRealizer fb(std::move(pairs), gain, warmup);
        LtiPlant plant(sys, x0, dt);
        const auto run = run_closed_loop(plant, fb, warm, t_end);
        res.outputs.add("trajectory.csv", trajectory_csv(run));
        const int w = std::min(run.states.size() - 1, static_cast<int>(std::ceil(warmup / dt - 1e-9)));
        summary["state_norm_at_warmup"] = run.states.sample(w).norm();
        summary["state_norm_final"] = run.states.sample(run.states.size() - 1).norm();
    } else {
        throw ValidationError("feedback: testbed must be lti or wave");
    }
    res.outputs.add_json("summary.json", summary);
    return res;
}

CommandResult cmd_simulate(const RunConfig& cfg) {
    const Params p(cfg.params, "");
    CommandResult res{OutputSet(cfg.out_dir), kSuccess, {}};
    Rng rng(cfg.seed);
    json summary = summary_header("simulate");
    const std::string bed = testbed(p);

    if (bed == "lti") {
        const LtiSystem sys = load_system(cfg, p);
        const double dt = p.positive("dt", 1e-3);
        const int samples = sample_count(p.positive("t_end", 3.0), dt);
        const Vector x0 = p.has("x0") ? vector_spec(p.raw("x0"), sys.n(), rng, "config: 'x0'") : Vector::Zero(sys.n());
        const auto run = simulate(sys, x0, input_spec(cfg, p, "input", sys.m(), dt, samples, rng));
        res.outputs.add("trajectory.csv", trajectory_csv(run));
        res.outputs.add("u.csv", signal_csv(run.inputs, "u"));
        res.outputs.add("y.csv", signal_csv(run.outputs, "y"));
        res.outputs.add("states.csv", signal_csv(run.states, "x"));
        summary["samples"] = samples;
    } else if (bed == "wave") {
        const auto g = wave_grid(p);
        auto s = wave_initial(cfg, p, g);
        const double dt = p.positive("dt", g.dx);
        if (dt > g.dx * (1 + 1e-12)) throw CflViolation("simulate: dt exceeds dx (CFL)");
        const int samples = sample_count(p.positive("t_end", 2.0), dt);
        const auto u = input_spec(cfg, p, "input", 1, dt, samples, rng);
        Matrix rows(samples, 4), energy(1, samples);
        for (int k = 0; k < samples; ++k) {
            if (k > 0) s = wave::step_string(s, u[k], dt);
            rows.row(k) << k * dt, u[k], s.output(), s.left_velocity();
            energy(0, k) = s.energy();
        }
        res.outputs.add("trajectory.csv", csv_table({"t", "u", "y", "p0"}, rows));
        res.outputs.add("energy.csv", wave_energy_csv(SampledSignal(0.0, dt, energy)));
        summary["samples"] = samples;
    } else {
        const auto sys = heat_system(p);
        const double dt = p.positive("dt", 1e-3);
        const int samples = sample_count(p.positive("t_end", 1.0), dt);
        const auto run = heat::simulate_heat(sys, heat_initial(p, sys.grid), heat_input(p, sys.grid, dt, samples));
        Matrix norms(samples, 2);
        for (int k = 0; k < samples; ++k) norms.row(k) << k * dt, heat::l2_norm(sys.grid, run.states.sample(k));
        res.outputs.add("u.csv", signal_csv(run.inputs, "u"));
        res.outputs.add("y.csv", signal_csv(run.outputs, "y"));
        res.outputs.add("norm_l2.csv", csv_table({"t", "norm"}, norms));
        summary["samples"] = samples;
    }
    res.outputs.add_json("summary.json", summary);
    return res;
}

CommandResult cmd_demo_wave(const RunConfig& cfg) {
    const Params p(cfg.params, "");
    CommandResult res{OutputSet(cfg.out_dir), kSuccess, {}};
    const auto g = wave_grid(p);
    const auto s0 = wave_initial(cfg, p, g);
    const double k = p.number("gain_k", 1.0);
    if (k < 0.0) throw ValidationError("config: 'gain_k' must be >= 0");
    const double t_end = p.positive("t_end", 5.0);
    const auto run = wave::wave_stabilize(s0, k, t_end);

    Matrix rows(run.u.size(), 5);
    double z_err = 0.0;
    int rises = 0;
    for (int i = 0; i < run.u.size(); ++i) {
        rows.row(i) << run.u.time(i), run.u[i], run.y[i], run.z[i], run.left_velocity[i];
        if (i >= g.xi0_index) z_err = std::max(z_err, std::abs(run.z[i] - run.left_velocity[i]));
        if (i > 0 && run.energy[i] - run.energy[i - 1] > 1e-10) ++rises;
    }
    res.outputs.add("trajectory.csv", csv_table({"t", "u", "y", "z", "p0"}, rows));
    res.outputs.add("energy.csv", wave_energy_csv(run.energy));
    json summary = summary_header("demo-wave");
    summary["gain_k"] = k;
    summary["xi0"] = g.xi0();
    summary["dx"] = g.dx;
    summary["z_minus_p0_max"] = z_err;
    summary["energy_rises_above_1e-10"] = rises;
    const int k4 = static_cast<int>(std::lround(4.0 * g.length / g.dx));
    if (k4 < run.energy.size()) summary["energy_ratio_at_4l"] = run.energy[k4] / run.energy[0];
    summary["energy_ratio_final"] = run.energy[run.energy.size() - 1] / run.energy[0];
    res.outputs.add_json("summary.json", summary);
    return res;
}

CommandResult cmd_demo_heat(const RunConfig& cfg) {
    const Params p(cfg.params, "");
    CommandResult res{OutputSet(cfg.out_dir), kSuccess, {}};
    const auto sys = heat_system(p);
    const auto& g = sys.grid;
    const double T = p.positive("horizon_T", 1.0), dt = p.positive("dt", 1e-3);
    const double t_end = p.positive("t_end", 2.0 * T);
    const int stride = p.integer("stride", 10);
    if (stride < 1) throw ValidationError("config: 'stride' must be >= 1");
    heat::HeatNullControlOptions opts;
    opts.tol_null = p.positive("tol_null", opts.tol_null);
    const auto basis = heat::build_poly_basis(g, p.integer("basis_degree", 4));
    const auto pairs = heat::heat_null_controls(sys, basis.vectors, T, dt, opts);

    const int samples = sample_count(t_end, dt);
    const auto run = heat::simulate_heat(sys, heat_initial(p, g), heat_input(p, g, dt, samples));
    std::vector<double> snapshots;
    if (p.has("snapshots")) {
        for (const auto& s : p.raw("snapshots")) snapshots.push_back(s.get<double>());
    } else {
        snapshots = {T, 1.5 * T, 2.0 * T};
    }

    int cap = 1;
    for (const auto& pair : pairs) cap = std::max(cap, required_capacity(pair, dt));
    SignalBuffer ub(g.ny, cap, dt), yb(g.ny, cap, dt);
    const int K = static_cast<int>(std::lround(T / dt));
    std::vector<std::array<double, 4>> err_rows;
    std::vector<Vector> coeff_rows;
    std::vector<double> coeff_times;
    for (int k = 0; k < samples; ++k) {
        ub.push(run.inputs.sample(k));
        yb.push(run.outputs.sample(k));
        const bool snapshot = std::any_of(snapshots.begin(), snapshots.end(),
                                          [&](double s) { return std::lround(s / dt) == k; });
        if (k % stride != 0 && !snapshot) continue;
        const Vector x = run.states.sample(k);
        Vector field = Vector::Zero(g.size());
        if (k >= K) {
            Vector c(basis.count());
            for (int j = 0; j < basis.count(); ++j) {
                c(j) = estimate_functional(pairs[j], ub, yb, k * dt);
                field += c(j) * basis.vectors[j];
            }
            coeff_rows.push_back(c);
            coeff_times.push_back(k * dt);
        }
        if (k % stride == 0) {
            const double floor = heat::l2_norm(g, x - heat::project(g, basis.vectors, x));
            err_rows.push_back({k * dt, heat::l2_norm(g, x - field), floor, heat::l2_norm(g, x)});
        }
        if (snapshot) res.outputs.add(fmt::format("field_t{}.csv", k), field_csv(g, field, x));
    }
    Matrix err(static_cast<Eigen::Index>(err_rows.size()), 4);
    for (std::size_t r = 0; r < err_rows.size(); ++r) err.row(r) << err_rows[r][0], err_rows[r][1], err_rows[r][2], err_rows[r][3];
    res.outputs.add("error_l2.csv", csv_table({"t", "error", "truncation_floor", "norm"}, err));
    std::vector<std::string> header{"t"};
    for (int j = 0; j < basis.count(); ++j) header.push_back("c" + std::to_string(j));
    Matrix coeffs(static_cast<Eigen::Index>(coeff_rows.size()), basis.count() + 1);
    for (std::size_t r = 0; r < coeff_rows.size(); ++r) {
        coeffs(r, 0) = coeff_times[r];
        coeffs.row(r).tail(basis.count()) = coeff_rows[r].transpose();
    }
    res.outputs.add("coeffs.csv", csv_table(header, coeffs));

    json summary = summary_header("demo-heat");
    summary["pairs"] = basis.count();
    double max_res = 0.0;
    int degraded = 0;
    for (const auto& pair : pairs) {
        max_res = std::max(max_res, pair.residual);
        degraded += pair.degraded ? 1 : 0;
    }
    summary["max_residual"] = max_res;
    summary["degraded"] = degraded;
    res.outputs.add_json("summary.json", summary);
    return res;
}

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"nullcontrol", "estimate", "feedback", "simulate", "demo-wave", "demo-heat"};
    return names;
}

int run_command(const std::string& name, const RunConfig& cfg, std::ostream& log) {
    static const std::map<std::string, CommandResult (*)(const RunConfig&)> table{
        {"nullcontrol", cmd_nullcontrol}, {"estimate", cmd_estimate},   {"feedback", cmd_feedback},
        {"simulate", cmd_simulate},       {"demo-wave", cmd_demo_wave}, {"demo-heat", cmd_demo_heat}};
    const auto it = table.find(name);
    if (it == table.end()) {
        log << "error: unknown command '" << name << "'\n";
        return kValidationFailure;
    }
    try {
        CommandResult res = it->second(cfg);
        res.outputs.add_json("config.json", cfg.params);
        res.outputs.commit();
        for (const auto& m : res.messages) log << m << '\n';
        return res.exit_code;
    } catch (const ValidationError& e) {
        log << "validation error: " << e.what() << '\n';
        return kValidationFailure;
    } catch (const json::exception& e) {
        log << "validation error: " << e.what() << '\n';
        return kValidationFailure;
    } catch (const NumericalError& e) {
        log << "numerical failure: " << e.what() << '\n';
        return kNumericalFailure;
    }
}

}  // namespace modfun::app
