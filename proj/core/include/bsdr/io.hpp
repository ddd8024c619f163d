#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bsdr/dataset.hpp"
#include "bsdr/experiments.hpp"
#include "bsdr/inference.hpp"
#include "bsdr/oracle.hpp"

namespace bsdr::io {

/// Failure to read or write a file; the message names the path.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Datasets as JSON lines:
//   {"actions":[...],"agent_id":"a","states":[[x,y],...]}
// Keys are sorted; "actions" is omitted when the trajectory has none.

std::string trajectory_to_json_line(const Trajectory& xi);
std::string dataset_to_jsonl(const Dataset& data);

/// `source` prefixes error messages ("<source>:<line>: ..."). Warnings (such
/// as an empty input) are appended to `warnings` when given.
Dataset dataset_from_jsonl(const std::string& text, const GridSpec& spec, const std::string& source = "<input>",
                           std::vector<std::string>* warnings = nullptr);

Dataset load_dataset(const std::filesystem::path& path, const GridSpec& spec,
                     std::vector<std::string>* warnings = nullptr);
void save_dataset(const Dataset& data, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Configuration (YAML; grammar in docs/config.md)

struct RunConfig {
    /// experiment.spec is meaningful only when the file has a `grid` section.
    bool has_grid = false;
    ExperimentConfig experiment;
    /// Explicit per-agent parameters; when absent the population is drawn.
    std::optional<JointParams> params;
    /// Dataset consumed by posterior / fit / fit-appendix / goal-infer,
    /// resolved against the config file's directory.
    std::optional<std::filesystem::path> dataset;
    AppendixConfig appendix;
    OracleSuiteConfig oracle;
};

/// Parses configuration text. Unknown keys are errors. `base_dir` resolves
/// relative dataset paths.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {},
                       const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// "theta_r[2]" or "theta_b[agent_000][1]".
Coordinate parse_coordinate(const std::string& label);

// ---------------------------------------------------------------------------
// Output directory

/// All writes go to plain file names inside one directory.
class OutputDir {
public:
    /// Creates the directory when missing.
    explicit OutputDir(std::filesystem::path root);

    const std::filesystem::path& root() const noexcept { return root_; }

    /// Rejects names containing path separators or "..".
    std::filesystem::path file(const std::string& name) const;
    void write(const std::string& name, const std::string& content) const;

private:
    std::filesystem::path root_;
};

/// Reads a whole file; IoError naming the path on failure.
std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames it into place.
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace bsdr::io
