#include "ioredux/artifacts.hpp"

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ioredux/errors.hpp"
#include "ioredux/version.hpp"

namespace ioredux {

using nlohmann::json;

std::string format_full(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("format_full: conversion failed");
    return std::string(buf, ptr);
}

std::string format_human(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end)
        throw std::invalid_argument("not a number: '" + s + "'");
    return v;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) {
            table.header = split_csv_line(line);
            first = false;
        } else {
            table.rows.push_back({split_csv_line(line)});
        }
    }
    if (first) throw std::runtime_error("empty csv file: " + path);
    return table;
}

std::string hash_bytes(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string hash_file(const std::string& path) { return hash_bytes(read_file(path)); }

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string utc_timestamp() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// --- design files -----------------------------------------------------------

std::string design_csv(const SparseGrid& grid) {
    std::ostringstream os;
    os << "point_id";
    for (int i = 1; i <= grid.dim; ++i) os << ",theta_" << i;
    os << "\n";
    for (std::size_t j = 0; j < grid.points.size(); ++j) {
        os << grid.point_ids[j];
        for (long i = 0; i < grid.points[j].size(); ++i)
            os << "," << format_full(grid.points[j](i));
        os << "\n";
    }
    return os.str();
}

DesignFile read_design_csv(const std::string& path) {
    CsvTable table = read_csv(path);
    if (table.header.empty() || table.header[0] != "point_id")
        throw std::runtime_error(path + ": first design column must be point_id");
    DesignFile design;
    design.dim = static_cast<int>(table.header.size()) - 1;
    if (design.dim < 1) throw std::runtime_error(path + ": design has no coordinates");
    for (const auto& row : table.rows) {
        if (row.fields.size() != table.header.size())
            throw std::runtime_error(path + ": ragged design row");
        design.point_ids.push_back(row.fields[0]);
        Eigen::VectorXd pt(design.dim);
        for (int i = 0; i < design.dim; ++i)
            pt(i) = parse_double(row.fields[static_cast<std::size_t>(i) + 1]);
        design.points.push_back(std::move(pt));
    }
    return design;
}

// --- snapshot files ----------------------------------------------------------

std::string snapshot_csv(const SnapshotMatrix& snap) {
    std::ostringstream os;
    os << "design_id";
    for (const auto& label : snap.row_labels) os << "," << label;
    os << "\n";
    for (long j = 0; j < snap.data.cols(); ++j) {
        os << snap.design_ids[static_cast<std::size_t>(j)];
        for (long i = 0; i < snap.data.rows(); ++i) os << "," << format_full(snap.data(i, j));
        os << "\n";
    }
    return os.str();
}

SnapshotMatrix read_snapshot_csv(const std::string& path) {
    CsvTable table = read_csv(path);
    if (table.header.empty() || table.header[0] != "design_id")
        throw std::runtime_error(path + ": first snapshot column must be design_id");
    const std::size_t d = table.header.size() - 1;
    if (d == 0) throw std::runtime_error(path + ": snapshot has no outcome columns");
    SnapshotMatrix snap;
    snap.row_labels.assign(table.header.begin() + 1, table.header.end());
    snap.data.resize(static_cast<long>(d), static_cast<long>(table.rows.size()));
    for (std::size_t j = 0; j < table.rows.size(); ++j) {
        const auto& row = table.rows[j];
        if (row.fields.size() != table.header.size())
            throw std::runtime_error(path + ": ragged snapshot row");
        snap.design_ids.push_back(row.fields[0]);
        for (std::size_t i = 0; i < d; ++i)
            snap.data(static_cast<long>(i), static_cast<long>(j)) = parse_double(row.fields[i + 1]);
    }
    return snap;
}

// --- targets ------------------------------------------------------------------

TargetSet read_targets_csv(const std::string& path) {
    CsvTable table;
    try {
        table = read_csv(path);
    } catch (const std::exception& e) {
        throw TargetsError(e.what());
    }
    if (table.header.empty() || table.header[0] != "target_id")
        throw TargetsError(path + ": first targets column must be target_id");
    const std::size_t d = table.header.size() - 1;
    if (d == 0) throw TargetsError(path + ": targets file has no outcome columns");
    if (table.rows.empty()) throw TargetsError(path + ": targets file has no rows");

    TargetSet set;
    set.labels.assign(table.header.begin() + 1, table.header.end());
    for (const auto& row : table.rows) {
        if (row.fields.size() != table.header.size())
            throw TargetsError(path + ": ragged targets row");
        set.target_ids.push_back(row.fields[0]);
        Eigen::VectorXd v(static_cast<long>(d));
        for (std::size_t i = 0; i < d; ++i) {
            try {
                v(static_cast<long>(i)) = parse_double(row.fields[i + 1]);
            } catch (const std::exception& e) {
                throw TargetsError(path + ": " + e.what());
            }
        }
        if (!v.allFinite()) throw TargetsError(path + ": non-finite target value");
        set.values.push_back(std::move(v));
    }
    return set;
}

// --- manifests ----------------------------------------------------------------

std::string manifest_path(const std::string& artifact_path) {
    return artifact_path + ".manifest.json";
}

void write_manifest(const RunManifest& manifest, const std::string& artifact_path) {
    json j;
    j["command"] = manifest.command;
    j["tool_version"] = manifest.tool_version.empty() ? kVersion : manifest.tool_version;
    j["created_utc"] = manifest.created_utc.empty() ? utc_timestamp() : manifest.created_utc;
    if (!manifest.config_path.empty()) {
        j["config"] = {{"path", manifest.config_path}, {"hash", manifest.config_hash}};
    }
    json inputs = json::object();
    for (const auto& [name, ref] : manifest.inputs)
        inputs[name] = {{"path", ref.path}, {"hash", ref.hash}};
    j["inputs"] = inputs;
    json outputs = json::object();
    for (const auto& [name, ref] : manifest.outputs)
        outputs[name] = {{"path", ref.path}, {"hash", ref.hash}};
    j["outputs"] = outputs;
    if (!manifest.extra_json.empty()) j["details"] = json::parse(manifest.extra_json);
    write_file(manifest_path(artifact_path), j.dump(2) + "\n");
}

RunManifest read_manifest(const std::string& artifact_path) {
    const std::string path = manifest_path(artifact_path);
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const std::exception& e) {
        throw ProvenanceError("missing or unreadable manifest " + path + ": " + e.what());
    }
    RunManifest m;
    m.command = j.value("command", "");
    m.tool_version = j.value("tool_version", "");
    m.created_utc = j.value("created_utc", "");
    if (j.contains("config")) {
        m.config_path = j["config"].value("path", "");
        m.config_hash = j["config"].value("hash", "");
    }
    const json inputs = j.value("inputs", json::object());
    for (const auto& [name, ref] : inputs.items())
        m.inputs.emplace_back(name, ArtifactRef{ref.value("path", ""), ref.value("hash", "")});
    const json outputs = j.value("outputs", json::object());
    for (const auto& [name, ref] : outputs.items())
        m.outputs.emplace_back(name, ArtifactRef{ref.value("path", ""), ref.value("hash", "")});
    if (j.contains("details")) m.extra_json = j["details"].dump();
    return m;
}

ArtifactRef verify_artifact(const std::string& artifact_path, const std::string& name) {
    RunManifest m = read_manifest(artifact_path);
    for (const auto& [key, ref] : m.outputs) {
        if (key != name) continue;
        const std::string actual = hash_file(artifact_path);
        if (actual != ref.hash) {
            throw ProvenanceError("artifact " + artifact_path + " does not match its manifest (" +
                                  actual + " != " + ref.hash + "); regenerate the pipeline");
        }
        return {artifact_path, actual};
    }
    throw ProvenanceError("manifest for " + artifact_path + " lacks output '" + name + "'");
}

}  // namespace ioredux
