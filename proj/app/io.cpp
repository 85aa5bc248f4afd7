#include "io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/core.h>

#include "modfun/errors.hpp"

namespace modfun::app {

std::string format_number(double v) { return fmt::format("{}", v); }

void OutputSet::add(const std::string& relative_path, std::string content) {
    files_[relative_path] = std::move(content);
}

void OutputSet::add_json(const std::string& relative_path, const json& value) {
    add(relative_path, value.dump(2) + "\n");
}

void OutputSet::commit() const {
    for (const auto& [name, content] : files_) {
        const fs::path target = dir_ / name;
        fs::create_directories(target.parent_path());
        fs::path tmp = target;
        tmp += ".tmp";
        {
            std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
            if (!f) throw std::runtime_error("cannot write " + tmp.string());
            f << content;
            if (!f.flush()) throw std::runtime_error("write failed for " + tmp.string());
        }
        fs::rename(tmp, target);
    }
}

std::string csv_table(const std::vector<std::string>& header, const Matrix& rows) {
    if (!header.empty() && static_cast<Eigen::Index>(header.size()) != rows.cols())
        throw DimensionError("csv: header and column count differ");
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
    out += '\n';
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        for (Eigen::Index c = 0; c < rows.cols(); ++c) {
            if (c) out += ',';
            out += format_number(rows(r, c));
        }
        out += '\n';
    }
    return out;
}

std::string signal_csv(const SampledSignal& s, const std::string& prefix) {
    std::vector<std::string> header{"t"};
    for (int i = 0; i < s.dim(); ++i) header.push_back(prefix + std::to_string(i));
    Matrix rows(s.size(), s.dim() + 1);
    for (int k = 0; k < s.size(); ++k) {
        rows(k, 0) = s.time(k);
        rows.row(k).tail(s.dim()) = s.sample(k).transpose();
    }
    return csv_table(header, rows);
}

std::string read_text(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot read " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

CsvData read_csv(const fs::path& path) {
    std::istringstream in(read_text(path));
    std::string line;
    CsvData data;
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(s);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        return cells;
    };
    if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty csv");
    data.header = split(line);
    std::vector<std::vector<double>> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split(line);
        if (cells.size() != data.header.size())
            throw ValidationError(fmt::format("{}:{}: expected {} columns", path.string(), line_no, data.header.size()));
        std::vector<double> row;
        for (const auto& c : cells) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(c, &used));
            } catch (const std::exception&) {
                throw ValidationError(fmt::format("{}:{}: '{}' is not a number", path.string(), line_no, c));
            }
        }
        rows.push_back(std::move(row));
    }
    data.rows.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(data.header.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) data.rows(r, c) = rows[r][c];
    return data;
}

SampledSignal read_signal_csv(const fs::path& path) {
    const CsvData d = read_csv(path);
    if (d.rows.cols() < 2 || d.rows.rows() < 2)
        throw ValidationError(path.string() + ": need a time column, a channel and two rows");
    const double t0 = d.rows(0, 0);
    const double dt = d.rows(1, 0) - t0;
    if (!(dt > 0.0)) throw ValidationError(path.string() + ": time must increase");
    for (Eigen::Index k = 1; k < d.rows.rows(); ++k)
        if (std::abs(d.rows(k, 0) - (t0 + k * dt)) > 1e-6 * dt)
            throw ValidationError(path.string() + ": time grid is not uniform");
    return SampledSignal(t0, dt, d.rows.rightCols(d.rows.cols() - 1).transpose());
}

json to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

json to_json(const Vector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

json to_json(const SampledSignal& s) {
    return json{{"t0", s.t0()}, {"dt", s.dt()}, {"values", to_json(s.values())}};
}

json to_json(const ImpulsiveSignal& s) {
    json impulses = json::array();
    for (const auto& imp : s.impulses()) impulses.push_back({{"time", imp.time}, {"weight", to_json(imp.weight)}});
    json out{{"dim", s.dim()}, {"impulses", std::move(impulses)}};
    out["density"] = s.density() ? to_json(*s.density()) : json(nullptr);
    return out;
}

json to_json(const LtiSystem& sys) {
    return json{{"A", to_json(sys.A())}, {"B", to_json(sys.B())}, {"C", to_json(sys.C())}, {"D", to_json(sys.D())}};
}

Matrix matrix_from_json(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) throw ValidationError(what + ": expected a non-empty array of rows");
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    if (cols == 0) throw ValidationError(what + ": rows must be non-empty arrays");
    Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].size() != cols) throw ValidationError(what + ": ragged rows");
        for (std::size_t c = 0; c < cols; ++c) {
            if (!j[r][c].is_number()) throw ValidationError(what + ": entries must be numbers");
            m(r, c) = j[r][c].get<double>();
        }
    }
    return m;
}

Vector vector_from_json(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) throw ValidationError(what + ": expected a non-empty array");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ValidationError(what + ": entries must be numbers");
        v(i) = j[i].get<double>();
    }
    return v;
}

SampledSignal sampled_from_json(const json& j) {
    if (!j.is_object() || !j.contains("t0") || !j.contains("dt") || !j.contains("values"))
        throw ValidationError("sampled signal: need t0, dt and values");
    return SampledSignal(j["t0"].get<double>(), j["dt"].get<double>(), matrix_from_json(j["values"], "values"));
}

ImpulsiveSignal impulsive_from_json(const json& j) {
    if (!j.is_object() || !j.contains("dim")) throw ValidationError("impulsive signal: missing dim");
    std::vector<Impulse> impulses;
    if (j.contains("impulses"))
        for (const auto& imp : j["impulses"])
            impulses.push_back({imp.at("time").get<double>(), vector_from_json(imp.at("weight"), "impulse weight")});
    std::optional<SampledSignal> density;
    if (j.contains("density") && !j["density"].is_null()) density = sampled_from_json(j["density"]);
    return ImpulsiveSignal(j["dim"].get<int>(), std::move(impulses), std::move(density));
}

LtiSystem system_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("system: expected an object with A, B, C[, D]");
    for (const char* key : {"A", "B", "C"})
        if (!j.contains(key)) throw ValidationError(std::string("system: missing ") + key);
    Matrix A = matrix_from_json(j["A"], "system.A");
    Matrix B = matrix_from_json(j["B"], "system.B");
    Matrix C = matrix_from_json(j["C"], "system.C");
    Matrix D = j.contains("D") ? matrix_from_json(j["D"], "system.D") : Matrix::Zero(C.rows(), B.cols());
    return LtiSystem(std::move(A), std::move(B), std::move(C), std::move(D));
}

void stage_pair(OutputSet& out, const std::string& dir, const ModulatingPair& pair) {
    out.add_json(dir + "/eta.json", to_json(pair.eta));
    out.add_json(dir + "/mu.json", to_json(pair.mu));
    json meta{{"horizon", pair.horizon}, {"functional", pair.functional}};
    meta["target"] = pair.target.size() ? to_json(pair.target) : json(nullptr);
    meta["residual"] = std::isfinite(pair.residual) ? json(pair.residual) : json(nullptr);
    meta["degraded"] = pair.degraded;
    out.add_json(dir + "/meta.json", meta);
}

ModulatingPair read_pair(const fs::path& dir) {
    auto load = [&](const char* name) {
        try {
            return json::parse(read_text(dir / name));
        } catch (const json::parse_error& e) {
            throw ValidationError((dir / name).string() + ": " + e.what());
        }
    };
    const json meta = load("meta.json");
    ModulatingPair pair{impulsive_from_json(load("eta.json")), impulsive_from_json(load("mu.json")),
                        meta.at("horizon").get<double>(), Vector(), meta.value("functional", ""), 0.0,
                        meta.value("degraded", false)};
    if (meta.contains("target") && !meta["target"].is_null()) pair.target = vector_from_json(meta["target"], "target");
    if (meta.contains("residual") && meta["residual"].is_number()) pair.residual = meta["residual"].get<double>();
    return pair;
}

}  // namespace modfun::app
