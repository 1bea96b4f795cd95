#include "stages.hpp"

#include "normpipe/corpus.hpp"
#include "normpipe/promptkit.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>

namespace normpipe::pipeline::detail {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string StageContext::read(const std::string& rel) const { return read_file(path(rel).string()); }

void StageContext::write(const std::string& rel, std::string_view content) {
    if (std::find(written_.begin(), written_.end(), rel) != written_.end())
        throw PreconditionError("artifact written twice: " + rel);
    write_file_atomic(path(rel).string(), content);
    written_.push_back(rel);
}

namespace {

constexpr std::string_view kFixedClock = "1970-01-01T00:00:00Z";
const std::string kRealCorpus = "corpus/real.jsonl";

std::string synthetic_corpus_path(const RunSpec& r) { return "corpus/" + r.stem() + ".jsonl"; }
std::string generations_path(const RunSpec& r) { return "generations/" + r.stem() + ".jsonl"; }
std::string embeddings_path(const std::string& stem) { return "embeddings/" + stem + ".jsonl"; }

// Backends for the configured mode; the mock serves both chat and embeddings.
struct Backends {
    std::unique_ptr<llmgate::MockBackend> mock;
    std::unique_ptr<llmgate::HttpBackend> http;
    std::unique_ptr<llmgate::ResponseCache> cache;

    explicit Backends(const PipelineConfig& cfg) {
        if (cfg.backend == "mock")
            mock = std::make_unique<llmgate::MockBackend>(cfg.fixtures, cfg.provider.embed_dimension);
        else
            http = std::make_unique<llmgate::HttpBackend>(cfg.provider);
        if (cfg.cache_dir) cache = std::make_unique<llmgate::ResponseCache>(*cfg.cache_dir);
    }
    llmgate::ChatBackend& chat() { return mock ? static_cast<llmgate::ChatBackend&>(*mock) : *http; }
    llmgate::EmbeddingBackend& embedder() {
        return mock ? static_cast<llmgate::EmbeddingBackend&>(*mock) : *http;
    }
};

llmgate::Gateway make_gateway(const PipelineConfig& cfg, Backends& b, const std::string& model) {
    llmgate::ProviderConfig pc = cfg.provider;
    pc.model_id = model;
    if (cfg.image) pc.image_payload = read_file(cfg.image->string());
    llmgate::Clock clock = llmgate::utc_now_iso;
    if (cfg.backend == "mock") clock = [] { return std::string(kFixedClock); };
    return llmgate::Gateway(b.chat(), b.cache.get(), pc, clock);
}

corpus::CorpusHandle load_real(const StageContext& ctx) {
    return corpus::parse_corpus(ctx.read(kRealCorpus), Source::Real, ctx.config().real_label, kRealCorpus).corpus;
}

corpus::CorpusHandle load_synthetic(const StageContext& ctx, const RunSpec& r) {
    const std::string rel = synthetic_corpus_path(r);
    return corpus::parse_corpus(ctx.read(rel), Source::Synthetic, r.label(), rel).corpus;
}

std::vector<llmgate::GenerationRecord> load_generations(const StageContext& ctx, const RunSpec& r) {
    std::vector<llmgate::GenerationRecord> out;
    std::istringstream in(ctx.read(generations_path(r)));
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        out.push_back(json::parse(line).get<llmgate::GenerationRecord>());
    }
    return out;
}

// Every corpus in pipeline order: the real one, then one per run.
struct NamedCorpus {
    std::string stem;
    corpus::CorpusHandle corpus;
};

std::vector<NamedCorpus> load_all_corpora(const StageContext& ctx) {
    std::vector<NamedCorpus> out;
    out.push_back({"real", load_real(ctx)});
    for (const auto& r : ctx.config().runs) out.push_back({r.stem(), load_synthetic(ctx, r)});
    return out;
}

std::map<std::string, std::vector<double>> load_embeddings(const StageContext& ctx, const std::string& stem) {
    std::map<std::string, std::vector<double>> out;
    std::istringstream in(ctx.read(embeddings_path(stem)));
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const json j = json::parse(line);
        out[j.at("id").get<std::string>()] = j.at("vector").get<std::vector<double>>();
    }
    return out;
}

// ---------------------------------------------------------------------------

void stage_ingest(StageContext& ctx) {
    const auto& cfg = ctx.config();
    auto loaded = corpus::load_corpus(cfg.real_corpus.string(), Source::Real, cfg.real_label);
    if (loaded.corpus.size() == 0) throw DataError("real corpus has no usable records: " + cfg.real_corpus.string());
    ctx.log() << fmt::format("  {} records from {} ({} skipped)\n", loaded.corpus.size(), cfg.real_corpus.string(),
                             loaded.warnings.size());
    ctx.write(kRealCorpus, corpus::to_jsonl(loaded.corpus));
}

void stage_generate(StageContext& ctx) {
    const auto& cfg = ctx.config();
    const corpus::CorpusHandle real = load_real(ctx);
    Backends backends(cfg);

    for (const RunSpec& run : cfg.runs) {
        llmgate::Gateway gateway = make_gateway(cfg, backends, run.model);
        std::vector<llmgate::GenerationJob> jobs;
        for (const auto& t : real.records()) jobs.push_back({promptkit::build_prompt(run.kind, t.participant()), t.participant()});
        const auto records = gateway.generate_all(jobs);

        std::string lines;
        std::vector<corpus::Transcript> kept;
        std::size_t refusals = 0;
        for (std::size_t i = 0; i < records.size(); ++i) {
            ordered_json j = records[i];
            lines += j.dump() + "\n";
            if (records[i].refusal) {
                ++refusals;
                continue;
            }
            kept.emplace_back(real.records()[i].participant(), records[i].response_text, Source::Synthetic);
        }
        if (refusals)
            emit_warning("pipeline", fmt::format("{}: {} refusals excluded from the synthetic corpus", run.label(), refusals));
        ctx.log() << fmt::format("  {}: {} responses, {} refusals\n", run.label(), records.size(), refusals);
        ctx.write(generations_path(run), lines);
        ctx.write(synthetic_corpus_path(run),
                  corpus::to_jsonl(corpus::CorpusHandle(run.label(), Source::Synthetic, std::move(kept))));
    }
}

void stage_score(StageContext& ctx) {
    const auto& cfg = ctx.config();
    const corpus::CorpusHandle real = load_real(ctx);
    llmgate::HashTokenEmbedder embedder(cfg.bert_dimension);

    std::string lines;
    for (const RunSpec& run : cfg.runs) {
        const corpus::CorpusHandle synth = load_synthetic(ctx, run);
        const corpus::Pairing pairing = corpus::pair_by_participant(real, synth);
        if (!pairing.unpaired_real.empty())
            emit_warning("pipeline", fmt::format("{}: {} real records have no synthetic counterpart", run.label(),
                                                 pairing.unpaired_real.size()));
        for (const auto& [r, s] : pairing.pairs) {
            ordered_json j = textmetrics::score_pair(*r, *s, embedder, {run.model, std::string(to_string(run.kind))},
                                                     cfg.scoring);
            lines += j.dump() + "\n";
        }
    }
    ctx.write("scores/pairs.jsonl", lines);
}

void stage_embed(StageContext& ctx) {
    Backends backends(ctx.config());
    for (const auto& [stem, corp] : load_all_corpora(ctx)) {
        std::vector<std::string> texts;
        for (const auto& t : corp.records()) texts.push_back(t.text());
        const auto vectors = llmgate::embed(texts, backends.embedder(), backends.cache.get());
        std::string lines;
        for (std::size_t i = 0; i < vectors.size(); ++i) {
            ordered_json j{{"id", corp.records()[i].id()}, {"vector", vectors[i].vector}};
            lines += j.dump() + "\n";
        }
        ctx.write(embeddings_path(stem), lines);
    }
}

void stage_project(StageContext& ctx) {
    const auto& cfg = ctx.config();
    std::vector<embedlab::EmbeddingRecord> records;
    for (const auto& [stem, corp] : load_all_corpora(ctx)) {
        const auto vectors = load_embeddings(ctx, stem);
        for (const auto& t : corp.records()) {
            auto it = vectors.find(t.id());
            if (it == vectors.end()) throw DataError("no embedding for " + corp.label() + " record " + t.id());
            records.push_back({corp.label() + ":" + t.id(), it->second, embedlab::meta_of(t, corp.label())});
        }
    }
    const embedlab::Projection2D proj = embedlab::tsne_project(records, cfg.tsne);
    ctx.log() << fmt::format("  {} points, KL {:.4f} -> {:.4f}\n", proj.points.size(), proj.kl_initial, proj.kl_final);

    ctx.write("projection/projection.csv", embedlab::projection_csv(proj));
    ordered_json meta{{"points", proj.points.size()},
                      {"kl_initial", proj.kl_initial},
                      {"kl_final", proj.kl_final},
                      {"perplexity", proj.config.perplexity},
                      {"iterations", proj.config.iterations},
                      {"seed", proj.config.seed},
                      {"learning_rate", proj.config.learning_rate}};
    ctx.write("projection/projection.json", meta.dump(2) + "\n");

    static constexpr std::string_view kFieldNames[] = {"category", "age", "gender", "mmse", "source"};
    for (report::ColorBy c : cfg.color_by) {
        const std::string_view name = kFieldNames[static_cast<std::size_t>(c)];
        ctx.write("projection/scatter_" + std::string(name) + ".svg", report::render_scatter_svg(proj, c));
    }
}

void stage_classify(StageContext& ctx) {
    const auto& cfg = ctx.config();
    const auto corpora = load_all_corpora(ctx);

    // Rows common to every set, in the real corpus's order, with a known category.
    std::vector<std::string> ids;
    for (const auto& t : corpora.front().corpus.records()) {
        if (!t.participant().category) continue;
        bool everywhere = true;
        for (const auto& nc : corpora) everywhere = everywhere && nc.corpus.find(t.id());
        if (everywhere) ids.push_back(t.id());
    }
    const std::size_t dropped = corpora.front().corpus.size() - ids.size();
    if (dropped)
        emit_warning("pipeline", fmt::format("classify: {} participants lack a category or a record in every set", dropped));

    std::vector<classifier::LabeledEmbeddingSet> sets;
    for (const auto& [stem, corp] : corpora) {
        const auto vectors = load_embeddings(ctx, stem);
        classifier::LabeledEmbeddingSet s;
        s.set_label = corp.label();
        s.ids = ids;
        const std::size_t dim = vectors.empty() ? 0 : vectors.begin()->second.size();
        s.vectors.resize(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(dim));
        for (std::size_t i = 0; i < ids.size(); ++i) {
            auto it = vectors.find(ids[i]);
            if (it == vectors.end()) throw DataError("no embedding for " + corp.label() + " record " + ids[i]);
            if (it->second.size() != dim) throw DataError("embedding dimension mismatch in " + corp.label());
            for (std::size_t k = 0; k < dim; ++k)
                s.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = it->second[k];
            s.labels.push_back(*corp.find(ids[i])->participant().category);
        }
        sets.push_back(std::move(s));
    }

    const classifier::TransferResult result = classifier::transfer_matrix(sets, cfg.transfer);
    ctx.write("classifier/transfer.csv", classifier::transfer_csv(result));
    ctx.write("classifier/transfer.json", classifier::transfer_metadata(result).dump(2) + "\n");
    ctx.write("classifier/transfer.md", report::render_transfer_markdown(result));
}

void stage_judge(StageContext& ctx) {
    const auto& cfg = ctx.config();
    Backends backends(cfg);
    llmgate::Gateway gateway = make_gateway(cfg, backends, cfg.judge_model);

    std::vector<judgecal::RatingRecord> ratings;
    if (cfg.annotations) ratings = judgecal::load_annotations(cfg.annotations->string());
    for (const RunSpec& run : cfg.runs) {
        if (std::find(cfg.judge_runs.begin(), cfg.judge_runs.end(), run.label()) == cfg.judge_runs.end()) continue;
        std::vector<llmgate::GenerationRecord> rateable;
        for (auto& g : load_generations(ctx, run))
            if (!g.refusal) rateable.push_back(std::move(g));
        auto judged = judgecal::judge_all(rateable, promptkit::kStimulusQuestion, gateway);
        ctx.log() << fmt::format("  {}: {} verdicts\n", run.label(), judged.size());
        ratings.insert(ratings.end(), judged.begin(), judged.end());
    }
    ctx.write("judge/ratings.csv", judgecal::ratings_csv(ratings));

    std::set<std::string> raters;
    for (const auto& r : ratings) raters.insert(r.rater);
    if (raters.size() < 2) {
        emit_warning("pipeline", "judge: fewer than two raters, agreement not computed");
        return;
    }
    const judgecal::AgreementReport rep = judgecal::agreement(ratings, cfg.correlation);
    ctx.write("judge/agreement.json", judgecal::agreement_json(rep).dump(2) + "\n");
    ctx.write("judge/agreement.md", judgecal::render_agreement(rep));
}

void stage_freq(StageContext& ctx) {
    const auto& cfg = ctx.config();
    const auto corpora = load_all_corpora(ctx);

    std::vector<embedlab::FrequencyTable> tables;
    for (const auto& nc : corpora) tables.push_back(embedlab::frequency_table(nc.corpus, cfg.tracked_terms, cfg.top_k));

    ordered_json out{{"tracked_terms", cfg.tracked_terms}, {"corpora", ordered_json::array()},
                     {"comparisons", ordered_json::array()}};
    std::string md;
    for (std::size_t i = 0; i < corpora.size(); ++i) {
        const auto& t = tables[i];
        ordered_json top = ordered_json::array();
        for (const auto& [term, count] : t.top) top.push_back({{"term", term}, {"count", count}});
        ordered_json tracked = ordered_json::object();
        for (const auto& term : t.tracked_terms) tracked[term] = t.tracked.at(term);
        out["corpora"].push_back({{"label", corpora[i].corpus.label()},
                                  {"total_tokens", t.total_tokens},
                                  {"tracked", tracked},
                                  {"top", top}});

        md += "## " + corpora[i].corpus.label() + "\n\n| Rank | Term | Count |\n|---|---|---|\n";
        for (std::size_t k = 0; k < t.top.size(); ++k)
            md += fmt::format("| {} | {} | {} |\n", k + 1, t.top[k].first, t.top[k].second);
        md += "\n";
    }

    md += "## Tracked terms per 1000 tokens\n\n| Corpus | Term | Rate | Reference rate | Ratio |\n|---|---|---|---|---|\n";
    for (std::size_t i = 1; i < corpora.size(); ++i) {
        ordered_json terms = ordered_json::array();
        for (const auto& c : embedlab::compare_frequencies(tables[0], tables[i])) {
            terms.push_back({{"term", c.term},
                             {"rate_reference", c.rate_a},
                             {"rate", c.rate_b},
                             {"ratio", embedlab::format_ratio(c.ratio)}});
            md += fmt::format("| {} | {} | {:.3f} | {:.3f} | {} |\n", corpora[i].corpus.label(), c.term, c.rate_b,
                              c.rate_a, embedlab::format_ratio(c.ratio));
        }
        out["comparisons"].push_back(
            {{"reference", corpora[0].corpus.label()}, {"corpus", corpora[i].corpus.label()}, {"terms", terms}});
    }
    ctx.write("freq/frequencies.json", out.dump(2) + "\n");
    ctx.write("freq/frequencies.md", md);
}

void stage_report(StageContext& ctx) {
    const auto& cfg = ctx.config();
    std::vector<textmetrics::ScoredPair> pairs;
    std::istringstream in(ctx.read("scores/pairs.jsonl"));
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        pairs.push_back(json::parse(line).get<textmetrics::ScoredPair>());
    }
    const auto synth_rows = report::summarize(pairs);
    const auto real_rows = report::summarize_word_counts(load_real(ctx), cfg.real_label, cfg.scoring.profile);

    // Real-data row first within each category.
    std::vector<std::string> categories;
    for (const auto* rows : {&real_rows, &synth_rows})
        for (const auto& r : *rows)
            if (std::find(categories.begin(), categories.end(), r.group.category) == categories.end())
                categories.push_back(r.group.category);
    auto rank = [](const std::string& c) {
        auto p = parse_category(c);
        return p ? static_cast<int>(*p) : 3;
    };
    std::stable_sort(categories.begin(), categories.end(),
                     [&](const std::string& a, const std::string& b) { return rank(a) < rank(b); });

    std::vector<report::MetricSummary> rows;
    for (const auto& c : categories)
        for (const auto* group : {&real_rows, &synth_rows})
            for (const auto& r : *group)
                if (r.group.category == c) rows.push_back(r);

    ctx.write("report/summary.md", report::render_table(rows, report::TableFormat::Markdown));
    ctx.write("report/summary.csv", report::render_table(rows, report::TableFormat::Csv));
    ctx.write("report/summary.json", report::render_table(rows, report::TableFormat::Json));
}

// Hash of every regular file below `dir`, by relative path.
std::string tree_hash(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw ConfigError("fixture directory not found: " + dir.string());
    std::vector<std::string> entries;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        entries.push_back(e.path().lexically_relative(dir).generic_string() + " " +
                          sha256_hex(read_file(e.path().string())));
    }
    std::sort(entries.begin(), entries.end());
    std::string all;
    for (const auto& e : entries) all += e + "\n";
    return sha256_hex(all);
}

ordered_json provider_inputs(const PipelineConfig& cfg) {
    ordered_json j{{"provider", cfg.resolved["provider"]}};
    if (cfg.backend == "mock") j["fixtures"] = tree_hash(cfg.fixtures);
    if (cfg.image) j["image"] = sha256_hex(read_file(cfg.image->string()));
    return j;
}

}  // namespace

StageFn stage_function(const std::string& name) {
    static const std::map<std::string, StageFn> table{
        {"ingest", stage_ingest},     {"generate", stage_generate}, {"score", stage_score},
        {"embed", stage_embed},       {"project", stage_project},   {"classify", stage_classify},
        {"judge", stage_judge},       {"freq", stage_freq},         {"report", stage_report}};
    auto it = table.find(name);
    if (it == table.end()) throw PreconditionError("unknown stage: " + name);
    return it->second;
}

ordered_json stage_inputs(const PipelineConfig& cfg, const std::string& name) {
    const auto& r = cfg.resolved;
    if (name == "ingest")
        return {{"corpus", r["corpus"]}, {"content", sha256_hex(read_file(cfg.real_corpus.string()))}};
    if (name == "generate") return {{"prompts", r["prompts"]}, {"backend", provider_inputs(cfg)}};
    if (name == "score" || name == "freq" || name == "report") return {{"metrics", r["metrics"]}};
    if (name == "embed") return {{"backend", provider_inputs(cfg)}};
    if (name == "project") return {{"tsne", r["tsne"]}};
    if (name == "classify") return {{"classifier", r["classifier"]}};
    if (name == "judge") {
        ordered_json j{{"judge", r["judge"]}, {"backend", provider_inputs(cfg)}};
        if (cfg.annotations) j["annotations"] = sha256_hex(read_file(cfg.annotations->string()));
        return j;
    }
    throw PreconditionError("unknown stage: " + name);
}

}  // namespace normpipe::pipeline::detail
