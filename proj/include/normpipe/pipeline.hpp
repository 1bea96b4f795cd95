#pragma once

#include "normpipe/classifier.hpp"
#include "normpipe/common.hpp"
#include "normpipe/embedlab.hpp"
#include "normpipe/judgecal.hpp"
#include "normpipe/llmgate.hpp"
#include "normpipe/report.hpp"
#include "normpipe/textmetrics.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace normpipe::pipeline {

/// One generation run: a model prompted with one prompt kind.
struct RunSpec {
    std::string model;
    PromptKind kind = PromptKind::Advanced;

    /// "<model>/<kind>", the set label used in every output.
    std::string label() const;
    /// "<model>__<kind>", used in file names.
    std::string stem() const;
};

struct PipelineConfig {
    std::filesystem::path config_path;
    std::filesystem::path out_dir;

    // corpus
    std::filesystem::path real_corpus;
    std::string real_label = "Original";

    // provider
    std::string backend = "mock";  // "mock" or "live"
    std::filesystem::path fixtures;
    std::optional<std::filesystem::path> cache_dir;
    std::optional<std::filesystem::path> image;
    llmgate::ProviderConfig provider;

    // prompts
    std::vector<RunSpec> runs;

    // metrics
    textmetrics::ScoringOptions scoring;
    int bert_dimension = 64;
    std::vector<std::string> tracked_terms;
    std::size_t top_k = 10;

    // tsne
    embedlab::TsneConfig tsne;
    std::vector<report::ColorBy> color_by{report::ColorBy::Category, report::ColorBy::Mmse,
                                          report::ColorBy::Source};

    // classifier
    classifier::TransferOptions transfer;

    // judge
    bool judge_enabled = false;
    std::string judge_model;
    std::vector<std::string> judge_runs;  // run labels; all runs when empty in the file
    std::optional<std::filesystem::path> annotations;
    judgecal::CorrelationKind correlation = judgecal::CorrelationKind::Pearson;

    /// Config sections after overrides; the basis of every fingerprint.
    nlohmann::ordered_json resolved;
    std::string fingerprint;
};

struct Overrides {
    std::optional<std::filesystem::path> out_dir;
    std::optional<std::string> backend;
    std::optional<std::uint64_t> seed;
};

/// Reads a JSON config. Relative paths resolve against the config file's
/// directory. A missing required key is a ConfigError naming it.
PipelineConfig load_config(const std::filesystem::path& path, const Overrides& overrides = {});

/// Stage names in execution order.
const std::vector<std::string>& stage_names();

/// Stages `stage` depends on, directly.
const std::vector<std::string>& stage_dependencies(const std::string& stage);

enum class StageStatus { Ran, Cached, Disabled, Failed, NotRun };

std::string_view to_string(StageStatus s);

struct StageOutcome {
    std::string name;
    StageStatus status = StageStatus::NotRun;
    std::string fingerprint;
    std::vector<std::string> artifacts;  // paths relative to the output directory
    std::string error;
};

struct RunResult {
    std::vector<StageOutcome> stages;
    std::filesystem::path manifest;
};

/// Runs the requested stages plus everything they depend on, skipping stages
/// whose recorded fingerprint and artifact hashes are unchanged. Writes
/// manifest.json even when a stage fails, then rethrows the failure.
/// An empty `stages` list means every stage.
RunResult run_stages(const PipelineConfig& config, const std::vector<std::string>& stages, std::ostream& log);

/// Full pipeline from a config file.
RunResult run_pipeline(const std::filesystem::path& config_path, const Overrides& overrides, std::ostream& log);

}  // namespace normpipe::pipeline
