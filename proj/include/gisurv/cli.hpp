#pragma once

#include "gisurv/annotator.hpp"
#include "gisurv/evaluation.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gisurv::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_config_error = 2,
    exit_data_error = 3,
    exit_backend_error = 4,
    exit_partial_failure = 5,
};

/// Everything a subcommand needs. Paths are kept as given on the command
/// line so that manifests stay relocatable with the working directory.
struct RunConfig {
    std::string subcommand;
    std::filesystem::path input;
    std::filesystem::path output;
    std::filesystem::path results;
    std::uint64_t seed = 0;
    std::string fractions = "validation=0.2,test=0.8";
    std::string split_name;
    std::filesystem::path keywords;
    std::filesystem::path stems;
    std::filesystem::path food_table;
    std::filesystem::path exceptions;
    /// Prompt spec files, or the names of bundled prompts.
    std::vector<std::string> prompts;
    std::vector<int> shots;
    BackendKind backend = BackendKind::baseline;
    std::string endpoint;
    std::string model;
    std::filesystem::path cache;
    std::string format = "text";
    MacroPolicy macro = MacroPolicy::exclude_zero_support;
    // bias
    std::string experiment = "substitution";
    std::string term_map = "gender";
    std::string pre_map;
    std::string side_names;
    std::string meta_key;
    // summarize
    std::string view = "gi";

    /// Throws ConfigError on missing or inconsistent settings.
    void validate() const;
};

std::string config_to_json(const RunConfig &config);
RunConfig config_from_json(std::string_view json_text);

/// Writes `<output>.manifest.json` (or `<output>/manifest.json` for split)
/// holding the config, its hash, the seed, hashes of every input table and
/// the tool version. Returns the manifest path.
std::filesystem::path write_manifest(const RunConfig &config);
std::filesystem::path manifest_path(const RunConfig &config);

/// The subcommands. Each returns an ExitCode and reports errors on `err`.
int cmd_filter(const RunConfig &config, std::ostream &out, std::ostream &err);
int cmd_split(const RunConfig &config, std::ostream &out, std::ostream &err);
int cmd_annotate(const RunConfig &config, std::ostream &out, std::ostream &err);
int cmd_evaluate(const RunConfig &config, std::ostream &out, std::ostream &err);
int cmd_sweep(const RunConfig &config, std::ostream &out, std::ostream &err);
int cmd_bias(const RunConfig &config, std::ostream &out, std::ostream &err);
int cmd_summarize(const RunConfig &config, std::ostream &out, std::ostream &err);

/// Dispatches on config.subcommand.
int run(const RunConfig &config, std::ostream &out, std::ostream &err);

/// Re-runs the config stored in a manifest, optionally with another output.
int rerun(const std::filesystem::path &manifest, const std::optional<std::filesystem::path> &output, std::ostream &out,
          std::ostream &err);

/// Full command line, argv[0] included.
int main(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

std::string_view version();

}  // namespace gisurv::cli
