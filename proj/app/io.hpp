#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "modfun/lti.hpp"
#include "modfun/modulating_pair.hpp"
#include "modfun/signal.hpp"

namespace modfun::app {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

/// Shortest round-trip decimal form; the only number formatting used for output files.
std::string format_number(double v);

/// Files staged in memory and written only by commit(), each through a temporary file and a
/// rename, so a failed computation leaves nothing behind.
class OutputSet {
public:
    explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}

    void add(const std::string& relative_path, std::string content);
    void add_json(const std::string& relative_path, const json& value);
    void commit() const;

    const fs::path& dir() const noexcept { return dir_; }
    const std::map<std::string, std::string>& files() const noexcept { return files_; }

private:
    fs::path dir_;
    std::map<std::string, std::string> files_;
};

/// CSV with a header row; each row of `rows` is one record.
std::string csv_table(const std::vector<std::string>& header, const Matrix& rows);

/// Time column followed by one column per channel, e.g. header t,u0,u1.
std::string signal_csv(const SampledSignal& s, const std::string& prefix);

struct CsvData {
    std::vector<std::string> header;
    Matrix rows;
};

CsvData read_csv(const fs::path& path);

/// Inverse of signal_csv: first column is a uniform time grid.
SampledSignal read_signal_csv(const fs::path& path);

std::string read_text(const fs::path& path);

json to_json(const Matrix& m);
json to_json(const Vector& v);
json to_json(const SampledSignal& s);
json to_json(const ImpulsiveSignal& s);
json to_json(const LtiSystem& sys);

Matrix matrix_from_json(const json& j, const std::string& what);
Vector vector_from_json(const json& j, const std::string& what);
SampledSignal sampled_from_json(const json& j);
ImpulsiveSignal impulsive_from_json(const json& j);
LtiSystem system_from_json(const json& j);

/// Bundle layout: <dir>/eta.json, <dir>/mu.json, <dir>/meta.json.
void stage_pair(OutputSet& out, const std::string& dir, const ModulatingPair& pair);
ModulatingPair read_pair(const fs::path& dir);

}  // namespace modfun::app
