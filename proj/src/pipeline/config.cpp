#include "normpipe/pipeline.hpp"

#include <fstream>

namespace normpipe::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const ordered_json* find_key(const ordered_json& section, std::string_view key) {
    auto it = section.find(key);
    return it == section.end() || it->is_null() ? nullptr : &*it;
}

template <typename T>
T get_as(const ordered_json& v, const std::string& name) {
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key " + name + " has the wrong type");
    }
}

template <typename T>
T required(const ordered_json& section, const std::string& section_name, std::string_view key) {
    const std::string name = section_name + "." + std::string(key);
    const ordered_json* v = find_key(section, key);
    if (!v) throw ConfigError("missing config key: " + name);
    return get_as<T>(*v, name);
}

template <typename T>
T optional_key(const ordered_json& section, const std::string& section_name, std::string_view key, T fallback) {
    const ordered_json* v = find_key(section, key);
    return v ? get_as<T>(*v, section_name + "." + std::string(key)) : fallback;
}

const ordered_json& section_of(const ordered_json& root, const std::string& name, bool mandatory) {
    static const ordered_json empty = ordered_json::object();
    auto it = root.find(name);
    if (it == root.end() || it->is_null()) {
        if (mandatory) throw ConfigError("missing config key: " + name);
        return empty;
    }
    if (!it->is_object()) throw ConfigError("config key " + name + " must be an object");
    return *it;
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

PromptKind kind_of(const std::string& s, const std::string& name) {
    auto k = parse_prompt_kind(s);
    if (!k || *k == PromptKind::Judge) throw ConfigError("config key " + name + ": unknown prompt kind " + s);
    return *k;
}

}  // namespace

std::string RunSpec::label() const { return model + "/" + std::string(to_string(kind)); }
std::string RunSpec::stem() const { return model + "__" + std::string(to_string(kind)); }

PipelineConfig load_config(const fs::path& path, const Overrides& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config: " + path.string());
    ordered_json root;
    try {
        root = ordered_json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    if (!root.is_object()) throw ConfigError("config must be a JSON object");

    PipelineConfig cfg;
    cfg.config_path = path;
    const fs::path base = path.parent_path().empty() ? fs::path(".") : path.parent_path();

    if (overrides.out_dir) {
        cfg.out_dir = *overrides.out_dir;
    } else {
        cfg.out_dir = resolve(base, required<std::string>(root, "config", "output"));
    }

    const auto& corpus = section_of(root, "corpus", true);
    cfg.real_corpus = resolve(base, required<std::string>(corpus, "corpus", "real"));
    cfg.real_label = optional_key<std::string>(corpus, "corpus", "label", cfg.real_label);

    ordered_json provider = section_of(root, "provider", true);
    if (overrides.backend) provider["backend"] = *overrides.backend;
    cfg.backend = optional_key<std::string>(provider, "provider", "backend", "mock");
    if (cfg.backend != "mock" && cfg.backend != "live")
        throw ConfigError("config key provider.backend must be mock or live, got " + cfg.backend);
    if (cfg.backend == "mock") cfg.fixtures = resolve(base, required<std::string>(provider, "provider", "fixtures"));
    if (auto* v = find_key(provider, "cache_dir")) cfg.cache_dir = resolve(base, get_as<std::string>(*v, "provider.cache_dir"));
    if (auto* v = find_key(provider, "image")) cfg.image = resolve(base, get_as<std::string>(*v, "provider.image"));
    auto& pc = cfg.provider;
    pc.base_url = optional_key<std::string>(provider, "provider", "base_url", "");
    pc.temperature = optional_key<double>(provider, "provider", "temperature", pc.temperature);
    pc.max_output_tokens = optional_key<int>(provider, "provider", "max_output_tokens", pc.max_output_tokens);
    pc.max_in_flight = optional_key<int>(provider, "provider", "max_in_flight", pc.max_in_flight);
    pc.max_attempts = optional_key<int>(provider, "provider", "max_attempts", pc.max_attempts);
    pc.request_timeout = std::chrono::milliseconds(
        optional_key<long long>(provider, "provider", "timeout_ms", pc.request_timeout.count()));
    pc.chat_path = optional_key<std::string>(provider, "provider", "chat_path", pc.chat_path);
    pc.embed_url = optional_key<std::string>(provider, "provider", "embed_url", "");
    pc.embed_path = optional_key<std::string>(provider, "provider", "embed_path", pc.embed_path);
    pc.embed_model = optional_key<std::string>(provider, "provider", "embed_model", "");
    pc.embed_dimension = optional_key<int>(provider, "provider", "embed_dimension", pc.embed_dimension);
    pc.validate();

    const auto& prompts = section_of(root, "prompts", true);
    const auto runs = required<ordered_json>(prompts, "prompts", "runs");
    if (!runs.is_array() || runs.empty()) throw ConfigError("config key prompts.runs must be a non-empty array");
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const std::string name = "prompts.runs[" + std::to_string(i) + "]";
        RunSpec r;
        r.model = required<std::string>(runs[i], name, "model");
        r.kind = kind_of(required<std::string>(runs[i], name, "kind"), name + ".kind");
        for (const auto& seen : cfg.runs)
            if (seen.label() == r.label()) throw ConfigError("duplicate run " + r.label());
        cfg.runs.push_back(r);
    }

    const auto& metrics = section_of(root, "metrics", false);
    const auto profile = optional_key<std::string>(metrics, "metrics", "profile", "published");
    if (profile == "published")
        cfg.scoring.profile = textmetrics::MetricProfile::Published;
    else if (profile == "pipeline")
        cfg.scoring.profile = textmetrics::MetricProfile::Pipeline;
    else
        throw ConfigError("config key metrics.profile must be published or pipeline");
    cfg.scoring.bleu.smoothing = optional_key<bool>(metrics, "metrics", "bleu_smoothing", false);
    cfg.bert_dimension = optional_key<int>(metrics, "metrics", "bert_dimension", cfg.bert_dimension);
    if (cfg.bert_dimension < 1) throw ConfigError("config key metrics.bert_dimension must be >= 1");
    cfg.tracked_terms = optional_key<std::vector<std::string>>(metrics, "metrics", "tracked_terms",
                                                               embedlab::default_tracked_terms());
    cfg.top_k = optional_key<std::size_t>(metrics, "metrics", "top_k", cfg.top_k);

    ordered_json tsne = section_of(root, "tsne", false);
    if (overrides.seed) tsne["seed"] = *overrides.seed;
    auto& t = cfg.tsne;
    t.perplexity = optional_key<double>(tsne, "tsne", "perplexity", t.perplexity);
    t.iterations = optional_key<int>(tsne, "tsne", "iterations", t.iterations);
    t.seed = optional_key<std::uint64_t>(tsne, "tsne", "seed", t.seed);
    t.learning_rate = optional_key<double>(tsne, "tsne", "learning_rate", t.learning_rate);
    t.early_exaggeration = optional_key<double>(tsne, "tsne", "early_exaggeration", t.early_exaggeration);
    t.exaggeration_iterations = optional_key<int>(tsne, "tsne", "exaggeration_iterations", t.exaggeration_iterations);
    t.momentum_switch = optional_key<int>(tsne, "tsne", "momentum_switch", t.momentum_switch);
    if (auto* v = find_key(tsne, "color_by")) {
        cfg.color_by.clear();
        for (const auto& name : get_as<std::vector<std::string>>(*v, "tsne.color_by")) {
            auto c = report::parse_color_by(name);
            if (!c) throw ConfigError("config key tsne.color_by: unknown field " + name);
            cfg.color_by.push_back(*c);
        }
    }

    ordered_json cls = section_of(root, "classifier", false);
    auto& tr = cfg.transfer;
    tr.trials = optional_key<int>(cls, "classifier", "trials", tr.trials);
    tr.folds = optional_key<int>(cls, "classifier", "folds", tr.folds);
    tr.test_fraction = optional_key<double>(cls, "classifier", "test_fraction", tr.test_fraction);
    tr.seeds = optional_key<std::vector<std::uint64_t>>(cls, "classifier", "seeds", tr.seeds);
    if (overrides.seed) {
        for (std::size_t i = 0; i < tr.seeds.size(); ++i) tr.seeds[i] = *overrides.seed + i;
        cls["seeds"] = tr.seeds;
    }
    tr.fit.max_iterations = optional_key<int>(cls, "classifier", "max_iterations", tr.fit.max_iterations);
    if (tr.trials < 1 || tr.folds < 2 || tr.seeds.empty() || !(tr.test_fraction > 0.0 && tr.test_fraction < 1.0))
        throw ConfigError("config section classifier has out-of-range values");

    const auto& judge = section_of(root, "judge", false);
    cfg.judge_enabled = !judge.empty();
    if (cfg.judge_enabled) {
        cfg.judge_model = required<std::string>(judge, "judge", "model");
        cfg.judge_runs = optional_key<std::vector<std::string>>(judge, "judge", "runs", {});
        if (cfg.judge_runs.empty())
            for (const auto& r : cfg.runs) cfg.judge_runs.push_back(r.label());
        for (const auto& label : cfg.judge_runs) {
            bool known = false;
            for (const auto& r : cfg.runs) known = known || r.label() == label;
            if (!known) throw ConfigError("config key judge.runs names an unknown run: " + label);
        }
        if (auto* v = find_key(judge, "annotations"))
            cfg.annotations = resolve(base, get_as<std::string>(*v, "judge.annotations"));
        const auto kind = optional_key<std::string>(judge, "judge", "correlation", "pearson");
        auto k = judgecal::parse_correlation_kind(kind);
        if (!k) throw ConfigError("config key judge.correlation must be pearson or spearman");
        cfg.correlation = *k;
    }

    cfg.resolved = ordered_json::object();
    cfg.resolved["corpus"] = corpus;
    cfg.resolved["provider"] = provider;
    cfg.resolved["prompts"] = prompts;
    cfg.resolved["metrics"] = metrics;
    cfg.resolved["tsne"] = tsne;
    cfg.resolved["classifier"] = cls;
    cfg.resolved["judge"] = judge;
    cfg.fingerprint = sha256_hex(cfg.resolved.dump());

    if (cfg.backend == "live") cfg.provider.apply_environment();
    return cfg;
}

}  // namespace normpipe::pipeline
