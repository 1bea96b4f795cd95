#include "normpipe/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitProvider = 3;

struct Command {
    const char* name;
    const char* stage;  // nullptr runs every stage
    const char* help;
};

constexpr Command kCommands[] = {
    {"ingest", "ingest", "Validate the real corpus and write its normalised copy"},
    {"gen", "generate", "Generate synthetic transcripts for every configured run"},
    {"score", "score", "Score synthetic transcripts against the real ones"},
    {"embed", "embed", "Embed every corpus"},
    {"project", "project", "Project embeddings to 2D with t-SNE and draw scatter plots"},
    {"classify", "classify", "Train and cross-evaluate diagnostic classifiers"},
    {"judge", "judge", "Rate generations with the judge model and compare with annotations"},
    {"freq", "freq", "Word-frequency tables and tracked-term comparisons"},
    {"report", "report", "Median (IQR) summary tables"},
    {"run", nullptr, "Run the full pipeline"},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synthetic normative speech data pipeline"};
    app.require_subcommand(1);

    std::string config;
    std::string out;
    std::string backend;
    std::uint64_t seed = 0;
    app.add_option("--config", config, "Pipeline config (JSON)")->required()->check(CLI::ExistingFile);
    auto* out_opt = app.add_option("--out", out, "Output directory (overrides the config)");
    auto* backend_opt =
        app.add_option("--backend", backend, "Model backend")->check(CLI::IsMember({"live", "mock"}));
    auto* seed_opt = app.add_option("--seed", seed, "Seed for t-SNE and classifier splits");

    for (const Command& c : kCommands) app.add_subcommand(c.name, c.help)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    std::vector<std::string> stages;
    for (const Command& c : kCommands)
        if (app.got_subcommand(c.name) && c.stage) stages.push_back(c.stage);

    namespace np = normpipe;
    try {
        np::pipeline::Overrides overrides;
        if (*out_opt) overrides.out_dir = out;
        if (*backend_opt) overrides.backend = backend;
        if (*seed_opt) overrides.seed = seed;
        const auto cfg = np::pipeline::load_config(config, overrides);
        const auto result = np::pipeline::run_stages(cfg, stages, std::cout);
        std::cout << "manifest: " << result.manifest.string() << "\n";
        return kExitOk;
    } catch (const np::ProviderError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitProvider;
    } catch (const np::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}
