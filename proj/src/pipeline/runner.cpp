#include "stages.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>
#include <ostream>
#include <set>

namespace normpipe::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const std::string kManifest = "manifest.json";

struct PreviousStage {
    std::string fingerprint;
    std::string status;
    std::vector<std::pair<std::string, std::string>> artifacts;  // path, sha256
};

std::map<std::string, PreviousStage> read_manifest(const fs::path& path) {
    std::map<std::string, PreviousStage> out;
    if (!fs::exists(path)) return out;
    try {
        const json m = json::parse(read_file(path.string()));
        for (const auto& s : m.at("stages")) {
            PreviousStage p;
            p.fingerprint = s.value("fingerprint", "");
            p.status = s.at("status").get<std::string>();
            out[s.at("name").get<std::string>()] = p;
        }
        for (const auto& a : m.at("artifacts")) {
            auto it = out.find(a.at("stage").get<std::string>());
            if (it != out.end()) it->second.artifacts.emplace_back(a.at("path"), a.at("sha256"));
        }
    } catch (const std::exception& e) {
        emit_warning("pipeline", std::string("ignoring unreadable manifest: ") + e.what());
        out.clear();
    }
    return out;
}

bool still_fresh(const fs::path& out_dir, const PreviousStage& prev, const std::string& fingerprint) {
    if (prev.fingerprint != fingerprint) return false;
    if (prev.status != "complete" && prev.status != "disabled") return false;
    for (const auto& [rel, sha] : prev.artifacts) {
        const fs::path p = out_dir / rel;
        if (!fs::is_regular_file(p) || sha256_hex(read_file(p.string())) != sha) return false;
    }
    return true;
}

std::string manifest_status(StageStatus s) {
    switch (s) {
        case StageStatus::Ran:
        case StageStatus::Cached: return "complete";
        case StageStatus::Disabled: return "disabled";
        case StageStatus::Failed: return "failed";
        case StageStatus::NotRun: return "not_run";
    }
    return "not_run";
}

void write_manifest(const PipelineConfig& cfg, const std::vector<StageOutcome>& stages,
                    const std::map<std::string, PreviousStage>& carried) {
    ordered_json stage_list = ordered_json::array();
    ordered_json artifacts = ordered_json::array();
    std::set<std::string> seen;
    bool complete = true;

    for (const auto& s : stages) {
        std::string status = manifest_status(s.status);
        std::vector<std::pair<std::string, std::string>> files;
        if (s.status == StageStatus::NotRun) {
            // Not requested this time: keep what an earlier run recorded.
            auto it = carried.find(s.name);
            if (it != carried.end() && it->second.fingerprint == s.fingerprint) {
                status = it->second.status;
                files = it->second.artifacts;
            }
        } else {
            for (const auto& rel : s.artifacts) files.emplace_back(rel, sha256_hex(read_file((cfg.out_dir / rel).string())));
        }
        complete = complete && (status == "complete" || status == "disabled");

        ordered_json entry{{"name", s.name}, {"status", status}, {"fingerprint", s.fingerprint}};
        if (!s.error.empty()) entry["error"] = s.error;
        stage_list.push_back(std::move(entry));

        std::sort(files.begin(), files.end());
        for (const auto& [rel, sha] : files) {
            if (!seen.insert(rel).second) throw PreconditionError("artifact listed twice: " + rel);
            artifacts.push_back({{"path", rel}, {"stage", s.name}, {"sha256", sha}, {"config_fingerprint", s.fingerprint}});
        }
    }

    ordered_json m{{"config_fingerprint", cfg.fingerprint},
                   {"backend", cfg.backend},
                   {"status", complete ? "complete" : "partial"},
                   {"stages", stage_list},
                   {"artifacts", artifacts}};
    write_file_atomic((cfg.out_dir / kManifest).string(), m.dump(2) + "\n");
}

}  // namespace

const std::vector<std::string>& stage_names() {
    static const std::vector<std::string> names{"ingest",   "generate", "score", "embed", "project",
                                                "classify", "judge",    "freq",  "report"};
    return names;
}

const std::vector<std::string>& stage_dependencies(const std::string& stage) {
    static const std::map<std::string, std::vector<std::string>> deps{
        {"ingest", {}},
        {"generate", {"ingest"}},
        {"score", {"ingest", "generate"}},
        {"embed", {"ingest", "generate"}},
        {"project", {"embed"}},
        {"classify", {"embed"}},
        {"judge", {"generate"}},
        {"freq", {"ingest", "generate"}},
        {"report", {"ingest", "score"}}};
    auto it = deps.find(stage);
    if (it == deps.end()) throw PreconditionError("unknown stage: " + stage);
    return it->second;
}

std::string_view to_string(StageStatus s) {
    switch (s) {
        case StageStatus::Ran: return "ran";
        case StageStatus::Cached: return "cached";
        case StageStatus::Disabled: return "disabled";
        case StageStatus::Failed: return "failed";
        case StageStatus::NotRun: return "not run";
    }
    return "not run";
}

RunResult run_stages(const PipelineConfig& cfg, const std::vector<std::string>& requested, std::ostream& log) {
    // Close the request over dependencies.
    std::set<std::string> wanted;
    std::vector<std::string> todo = requested.empty() ? stage_names() : requested;
    while (!todo.empty()) {
        const std::string s = todo.back();
        todo.pop_back();
        if (wanted.insert(s).second)
            for (const auto& d : stage_dependencies(s)) todo.push_back(d);
    }

    fs::create_directories(cfg.out_dir);
    const fs::path manifest_path = cfg.out_dir / kManifest;
    const auto previous = read_manifest(manifest_path);

    RunResult result;
    result.manifest = manifest_path;
    std::map<std::string, std::string> fingerprints;
    for (const auto& name : stage_names()) {
        ordered_json basis{{"stage", name}, {"inputs", detail::stage_inputs(cfg, name)}};
        for (const auto& d : stage_dependencies(name)) basis["after"][d] = fingerprints.at(d);
        fingerprints[name] = sha256_hex(basis.dump());
        result.stages.push_back({name, StageStatus::NotRun, fingerprints[name], {}, {}});
    }

    for (auto& stage : result.stages) {
        if (!wanted.count(stage.name)) continue;
        auto prev = previous.find(stage.name);
        if (prev != previous.end() && still_fresh(cfg.out_dir, prev->second, stage.fingerprint)) {
            stage.status = prev->second.status == "disabled" ? StageStatus::Disabled : StageStatus::Cached;
            for (const auto& a : prev->second.artifacts) stage.artifacts.push_back(a.first);
            log << fmt::format("[{}] {}\n", stage.name, to_string(stage.status));
            continue;
        }
        if (stage.name == "judge" && !cfg.judge_enabled) {
            stage.status = StageStatus::Disabled;
            log << fmt::format("[{}] disabled\n", stage.name);
            continue;
        }

        detail::StageContext ctx(cfg, log);
        try {
            detail::stage_function(stage.name)(ctx);
        } catch (const std::exception& e) {
            stage.status = StageStatus::Failed;
            stage.error = e.what();
            stage.artifacts = ctx.written();
            log << fmt::format("[{}] failed: {}\n", stage.name, e.what());
            write_manifest(cfg, result.stages, previous);
            throw;
        }
        stage.status = StageStatus::Ran;
        stage.artifacts = ctx.written();
        log << fmt::format("[{}] ran ({} artifacts)\n", stage.name, stage.artifacts.size());
    }

    write_manifest(cfg, result.stages, previous);
    return result;
}

RunResult run_pipeline(const fs::path& config_path, const Overrides& overrides, std::ostream& log) {
    return run_stages(load_config(config_path, overrides), {}, log);
}

}  // namespace normpipe::pipeline
