#pragma once

#include "normpipe/common.hpp"
#include "normpipe/corpus.hpp"
#include "normpipe/promptkit.hpp"
#include "normpipe/textmetrics.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace normpipe::llmgate {

// ---------------------------------------------------------------------------
// Configuration and records.
// ---------------------------------------------------------------------------

struct ProviderConfig {
    std::string base_url;  // scheme://host[:port]
    std::string api_key;
    std::string model_id;
    double temperature = 1.0;
    int max_output_tokens = 512;
    std::optional<std::string> image_payload;  // raw bytes of the stimulus picture
    std::string image_mime = "image/png";
    std::chrono::milliseconds request_timeout{60000};
    int max_in_flight = 4;
    int max_attempts = 3;
    std::string chat_path = "/v1/chat/completions";

    std::string embed_url;  // defaults to base_url when empty
    std::string embed_path = "/v1/embeddings";
    std::string embed_model;
    int embed_dimension = 384;

    /// Throws ConfigError on out-of-range values.
    void validate() const;

    /// Overrides api_key/base_url/embed_url from NORMPIPE_API_KEY,
    /// NORMPIPE_BASE_URL and NORMPIPE_EMBED_URL when those are set.
    void apply_environment();
};

struct GenerationRecord {
    std::string participant_id;
    std::string model_id;
    PromptKind prompt_kind = PromptKind::Naive;
    std::string prompt_fingerprint;
    std::string response_text;
    bool refusal = false;
    std::string created_at;  // ISO-8601 UTC
    int attempt_count = 0;
    bool from_cache = false;
};

void to_json(nlohmann::ordered_json& j, const GenerationRecord& r);
void from_json(const nlohmann::json& j, GenerationRecord& r);

struct EmbeddingRecord {
    std::string text_hash;
    std::vector<double> vector;
};

// ---------------------------------------------------------------------------
// Backends.
// ---------------------------------------------------------------------------

struct ChatRequest {
    std::string model_id;
    PromptKind kind = PromptKind::Naive;
    std::string participant_id;  // lookup hint for fixture backends
    std::string prompt;
    std::string fingerprint;
    double temperature = 1.0;
    int max_output_tokens = 512;
    const std::string* image = nullptr;
    std::string image_mime;
};

struct ChatResult {
    std::string text;
    int attempts = 1;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    /// Stable identifier; namespaces the cache.
    virtual std::string id() const = 0;
    virtual ChatResult chat(const ChatRequest& request) = 0;
};

class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;
    virtual std::string id() const = 0;
    virtual int dimension() const = 0;
    virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
};

/// What a transport reports back for one POST.
struct HttpResponse {
    int status = 0;
    std::string body;
    bool timed_out = false;
    std::string error;  // transport-level failure description
};

/// (base_url, path, json body, bearer token, timeout) -> response.
using Transport = std::function<HttpResponse(const std::string& base_url, const std::string& path,
                                             const std::string& body, const std::string& api_key,
                                             std::chrono::milliseconds timeout)>;
using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Transport over cpp-httplib.
Transport default_transport();

/// Backoff before retry `attempt` (1-based): 1s, 2s, 4s, ...
std::chrono::milliseconds backoff_delay(int attempt);

bool is_retryable(const HttpResponse& r);

/// Chat-completion and embeddings client over a JSON wire contract
/// (docs/wire_contract.md).
class HttpBackend : public ChatBackend, public EmbeddingBackend {
public:
    explicit HttpBackend(ProviderConfig config, Transport transport = default_transport(),
                         Sleeper sleeper = {});

    std::string id() const override;
    int dimension() const override { return config_.embed_dimension; }
    ChatResult chat(const ChatRequest& request) override;
    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

    static std::string build_chat_body(const ChatRequest& request);
    static std::string parse_chat_reply(const std::string& body);
    static std::string build_embed_body(const std::string& model, const std::vector<std::string>& texts);
    static std::vector<std::vector<double>> parse_embed_reply(const std::string& body);

private:
    HttpResponse post_with_retry(const std::string& base, const std::string& path, const std::string& body,
                                 int& attempts);

    ProviderConfig config_;
    Transport transport_;
    Sleeper sleeper_;
};

/// Deterministic offline backend. Chat replies come from text files under
/// `fixture_dir`; lookup tries, in order, "<fingerprint>.txt",
/// "<model>/<kind>/<participant>.txt" and, except for judge requests,
/// "<participant>.txt".
/// Embeddings are signed feature-hash vectors of the pipeline tokens.
class MockBackend : public ChatBackend, public EmbeddingBackend {
public:
    explicit MockBackend(std::filesystem::path fixture_dir, int dimension = 384);

    std::string id() const override { return "mock"; }
    int dimension() const override { return dimension_; }
    ChatResult chat(const ChatRequest& request) override;
    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

    /// Fixture text for the first key that exists; throws ProviderError
    /// "no fixture: <keys>" otherwise.
    std::string lookup(const std::vector<std::string>& keys) const;

    std::size_t chat_calls() const { return chat_calls_.load(); }

private:
    std::filesystem::path dir_;
    int dimension_;
    std::atomic<std::size_t> chat_calls_{0};
};

/// Unit-norm signed hash embedding of a whole text: unigrams weight 1,
/// bigrams 0.5 and the full token string 0.25.
std::vector<double> hash_embedding(std::string_view text, int dimension);

/// Per-token hash vectors for the BERTScore matcher. Equal tokens map to
/// equal vectors; distinct tokens to pseudo-random unit vectors.
class HashTokenEmbedder : public textmetrics::TokenEmbedder {
public:
    explicit HashTokenEmbedder(int dimension = 64) : dimension_(dimension) {}
    std::vector<std::vector<double>> embed_tokens(const textmetrics::TokenSeq& tokens) override;

private:
    int dimension_;
};

// ---------------------------------------------------------------------------
// Cache.
// ---------------------------------------------------------------------------

struct CacheEntry {
    std::string request_fingerprint;
    std::string response_text;
    std::string created_at;
};

/// Content-addressed response cache: <root>/<backend_id>/<sha256>.json.
/// Writes are serialised and atomic; unreadable entries are dropped with a
/// warning and reported as misses.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path root);

    std::optional<CacheEntry> get(const std::string& backend_id, const std::string& fingerprint) const;
    void put(const std::string& backend_id, const CacheEntry& entry);

    std::filesystem::path entry_path(const std::string& backend_id, const std::string& fingerprint) const;

private:
    std::filesystem::path root_;
    mutable std::mutex write_mutex_;
};

// ---------------------------------------------------------------------------
// Gateway: caching, refusal flags and bounded dispatch.
// ---------------------------------------------------------------------------

using Clock = std::function<std::string()>;

/// Current UTC time as ISO-8601.
std::string utc_now_iso();

struct GenerationJob {
    promptkit::PromptSpec prompt;
    corpus::ParticipantProfile profile;
};

class Gateway {
public:
    Gateway(ChatBackend& chat, ResponseCache* cache, ProviderConfig config, Clock clock = utc_now_iso);

    /// Cached record if present; otherwise one backend call, stored before return.
    GenerationRecord generate(const promptkit::PromptSpec& prompt, const corpus::ParticipantProfile& profile);

    /// Runs jobs with at most config.max_in_flight outstanding calls. Results
    /// keep job order. The first failure is rethrown after all jobs settle.
    std::vector<GenerationRecord> generate_all(const std::vector<GenerationJob>& jobs);

    const ProviderConfig& config() const { return config_; }

private:
    ChatBackend& chat_;
    ResponseCache* cache_;
    ProviderConfig config_;
    Clock clock_;
};

/// Embeds texts, reusing cached vectors keyed by (backend id, text hash).
/// Throws ProviderError "dimension mismatch" if any vector disagrees with the
/// backend's declared dimension.
std::vector<EmbeddingRecord> embed(const std::vector<std::string>& texts, EmbeddingBackend& backend,
                                   ResponseCache* cache = nullptr);

// ---------------------------------------------------------------------------
// Refusals.
// ---------------------------------------------------------------------------

std::vector<std::string> default_refusal_patterns();

/// Case-insensitive match of any pattern inside the first 200 code points,
/// with typographic apostrophes folded to '.
bool detect_refusal(std::string_view text);
bool detect_refusal(std::string_view text, const std::vector<std::string>& patterns);

}  // namespace normpipe::llmgate
