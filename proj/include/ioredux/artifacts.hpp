#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "ioredux/reduction.hpp"
#include "ioredux/sparsegrid.hpp"

namespace ioredux {

// ============================================================================
// Persisted artifacts: full-precision CSV/JSON readers and writers, content
// hashing, and the manifests that chain artifacts together.
// ============================================================================

/// Shortest decimal representation that round-trips the exact double.
std::string format_full(double v);

/// Fixed 4-significant-digit rendering for human-facing summaries.
std::string format_human(double v);

double parse_double(const std::string& s);

struct CsvRow {
    std::vector<std::string> fields;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<CsvRow> rows;
};

CsvTable read_csv(const std::string& path);

/// FNV-1a 64-bit content hash, hex encoded. Not cryptographic; used to detect
/// artifact mismatches between pipeline stages.
std::string hash_bytes(const std::string& bytes);
std::string hash_file(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

std::string utc_timestamp();

// --- design files -----------------------------------------------------------

/// CSV with header point_id,theta_1..theta_m, one row per design point.
std::string design_csv(const SparseGrid& grid);

struct DesignFile {
    int dim = 0;
    std::vector<std::string> point_ids;
    std::vector<Eigen::VectorXd> points;
};

DesignFile read_design_csv(const std::string& path);

// --- snapshot files ----------------------------------------------------------

/// CSV with header design_id,<row_label_1>..<row_label_d>, one row per sample.
std::string snapshot_csv(const SnapshotMatrix& snap);

SnapshotMatrix read_snapshot_csv(const std::string& path);

// --- targets ------------------------------------------------------------------

struct TargetSet {
    std::vector<std::string> labels;      // must match the ROM's row labels
    std::vector<std::string> target_ids;
    std::vector<Eigen::VectorXd> values;  // one length-d vector per target
};

/// CSV with header target_id,<label_1>..<label_d>. Throws TargetsError on
/// malformed content.
TargetSet read_targets_csv(const std::string& path);

// --- manifests ----------------------------------------------------------------

struct ArtifactRef {
    std::string path;
    std::string hash;
};

/// Every command records the hash of every input artifact its outputs were
/// derived from; downstream commands refuse mismatched hashes.
struct RunManifest {
    std::string command;
    std::string tool_version;
    std::string created_utc;
    std::string config_path;
    std::string config_hash;
    std::vector<std::pair<std::string, ArtifactRef>> inputs;
    std::vector<std::pair<std::string, ArtifactRef>> outputs;
    std::string extra_json;  // command-specific payload, serialized JSON object
};

std::string manifest_path(const std::string& artifact_path);
void write_manifest(const RunManifest& manifest, const std::string& artifact_path);
RunManifest read_manifest(const std::string& artifact_path);

/// Returns the recorded output hash for `name` in the manifest accompanying
/// `artifact_path`, checking it against the file's current content. Throws
/// ProvenanceError on mismatch or a missing manifest.
ArtifactRef verify_artifact(const std::string& artifact_path, const std::string& name);

}  // namespace ioredux
