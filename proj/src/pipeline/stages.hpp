#pragma once

#include "normpipe/pipeline.hpp"

#include <functional>

namespace normpipe::pipeline::detail {

class StageContext {
public:
    StageContext(const PipelineConfig& config, std::ostream& log) : config_(config), log_(log) {}

    const PipelineConfig& config() const { return config_; }
    std::ostream& log() { return log_; }
    std::filesystem::path path(const std::string& rel) const { return config_.out_dir / rel; }
    std::string read(const std::string& rel) const;

    /// Writes an artifact under the output directory and records it.
    void write(const std::string& rel, std::string_view content);
    const std::vector<std::string>& written() const { return written_; }

private:
    const PipelineConfig& config_;
    std::ostream& log_;
    std::vector<std::string> written_;
};

using StageFn = std::function<void(StageContext&)>;

StageFn stage_function(const std::string& name);

/// Inputs beyond upstream stages that determine a stage's outputs.
nlohmann::ordered_json stage_inputs(const PipelineConfig& config, const std::string& name);

}  // namespace normpipe::pipeline::detail
