#include "normpipe/llmgate.hpp"

#include <json.hpp>

#include <exception>
#include <thread>

namespace normpipe::llmgate {

Gateway::Gateway(ChatBackend& chat, ResponseCache* cache, ProviderConfig config, Clock clock)
    : chat_(chat), cache_(cache), config_(std::move(config)), clock_(std::move(clock)) {
    config_.validate();
}

GenerationRecord Gateway::generate(const promptkit::PromptSpec& prompt, const corpus::ParticipantProfile& profile) {
    if (prompt.kind == PromptKind::Judge && prompt.profile)
        throw PreconditionError("judge prompts must not carry a participant profile");

    GenerationRecord rec;
    rec.participant_id = profile.id;
    rec.model_id = config_.model_id;
    rec.prompt_kind = prompt.kind;
    rec.prompt_fingerprint = prompt.fingerprint;

    const std::string request_fp = sha256_hex(config_.model_id + "\n" + prompt.fingerprint);
    if (cache_) {
        if (auto hit = cache_->get(chat_.id(), request_fp)) {
            rec.response_text = hit->response_text;
            rec.created_at = hit->created_at;
            rec.attempt_count = 0;
            rec.from_cache = true;
            rec.refusal = rec.response_text.empty() || detect_refusal(rec.response_text);
            return rec;
        }
    }

    ChatRequest req;
    req.model_id = config_.model_id;
    req.kind = prompt.kind;
    req.participant_id = profile.id;
    req.prompt = prompt.rendered;
    req.fingerprint = prompt.fingerprint;
    req.temperature = config_.temperature;
    req.max_output_tokens = config_.max_output_tokens;
    if (config_.image_payload && prompt.kind != PromptKind::Judge) {
        req.image = &*config_.image_payload;
        req.image_mime = config_.image_mime;
    }
    ChatResult result = chat_.chat(req);

    rec.response_text = std::move(result.text);
    rec.attempt_count = result.attempts;
    rec.created_at = clock_();
    rec.refusal = trim(rec.response_text).empty() || detect_refusal(rec.response_text);
    if (cache_) cache_->put(chat_.id(), {request_fp, rec.response_text, rec.created_at});
    return rec;
}

std::vector<GenerationRecord> Gateway::generate_all(const std::vector<GenerationJob>& jobs) {
    std::vector<GenerationRecord> out(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            try {
                out[i] = generate(jobs[i].prompt, jobs[i].profile);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t n_workers =
        std::min<std::size_t>(static_cast<std::size_t>(config_.max_in_flight), std::max<std::size_t>(jobs.size(), 1));
    std::vector<std::thread> threads;
    for (std::size_t w = 1; w < n_workers; ++w) threads.emplace_back(worker);
    worker();
    for (std::thread& t : threads) t.join();
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

std::vector<EmbeddingRecord> embed(const std::vector<std::string>& texts, EmbeddingBackend& backend,
                                   ResponseCache* cache) {
    if (texts.empty()) throw PreconditionError("embed needs at least one text");
    const int dim = backend.dimension();
    std::vector<EmbeddingRecord> out(texts.size());
    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        out[i].text_hash = sha256_hex(texts[i]);
        if (cache) {
            if (auto hit = cache->get(backend.id(), "embed\n" + out[i].text_hash)) {
                try {
                    out[i].vector = nlohmann::json::parse(hit->response_text).get<std::vector<double>>();
                } catch (const nlohmann::json::exception&) {
                    out[i].vector.clear();
                }
                if (static_cast<int>(out[i].vector.size()) == dim) continue;
                out[i].vector.clear();
            }
        }
        missing.push_back(i);
    }
    if (!missing.empty()) {
        std::vector<std::string> batch;
        batch.reserve(missing.size());
        for (std::size_t i : missing) batch.push_back(texts[i]);
        std::vector<std::vector<double>> vectors = backend.embed(batch);
        if (vectors.size() != batch.size())
            throw ProviderError("embedding backend returned " + std::to_string(vectors.size()) + " vectors for " +
                                std::to_string(batch.size()) + " texts");
        for (std::size_t k = 0; k < missing.size(); ++k) {
            if (static_cast<int>(vectors[k].size()) != dim)
                throw ProviderError("dimension mismatch: expected " + std::to_string(dim) + ", got " +
                                    std::to_string(vectors[k].size()));
            out[missing[k]].vector = std::move(vectors[k]);
        }
        if (cache)
            for (std::size_t i : missing)
                cache->put(backend.id(), {"embed\n" + out[i].text_hash, nlohmann::json(out[i].vector).dump(), ""});
    }
    return out;
}

}  // namespace normpipe::llmgate
