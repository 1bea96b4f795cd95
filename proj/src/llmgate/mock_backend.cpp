#include "normpipe/llmgate.hpp"

#include <cmath>

namespace normpipe::llmgate {
namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t seed = 0xcbf29ce484222325ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void add_feature(std::vector<double>& v, std::string_view feature, double weight) {
    const std::uint64_t h = fnv1a(feature);
    const std::size_t index = h % v.size();
    const double sign = (h >> 63) ? -1.0 : 1.0;
    v[index] += sign * weight;
}

void normalize(std::vector<double>& v) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) {
        v[0] = 1.0;
        return;
    }
    for (double& x : v) x /= norm;
}

}  // namespace

std::vector<double> hash_embedding(std::string_view text, int dimension) {
    if (dimension < 1) throw PreconditionError("embedding dimension must be >= 1");
    std::vector<double> v(static_cast<std::size_t>(dimension), 0.0);
    const textmetrics::TokenSeq tokens = textmetrics::tokenize(text);
    std::string joined;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        add_feature(v, "u:" + tokens[i], 1.0);
        if (i + 1 < tokens.size()) add_feature(v, "b:" + tokens[i] + " " + tokens[i + 1], 0.5);
        if (i) joined += ' ';
        joined += tokens[i];
    }
    add_feature(v, "t:" + joined, 0.25);
    normalize(v);
    return v;
}

std::vector<std::vector<double>> HashTokenEmbedder::embed_tokens(const textmetrics::TokenSeq& tokens) {
    std::vector<std::vector<double>> out;
    out.reserve(tokens.size());
    for (const std::string& t : tokens) {
        std::uint64_t state = fnv1a(t);
        std::vector<double> v(static_cast<std::size_t>(dimension_));
        for (double& x : v) x = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53 * 2.0 - 1.0;
        normalize(v);
        out.push_back(std::move(v));
    }
    return out;
}

MockBackend::MockBackend(std::filesystem::path fixture_dir, int dimension)
    : dir_(std::move(fixture_dir)), dimension_(dimension) {
    if (dimension_ < 1) throw ConfigError("mock embedding dimension must be >= 1");
}

std::string MockBackend::lookup(const std::vector<std::string>& keys) const {
    std::string tried;
    for (const std::string& key : keys) {
        if (key.empty()) continue;
        const std::filesystem::path path = dir_ / (key + ".txt");
        std::error_code ec;
        if (std::filesystem::is_regular_file(path, ec)) {
            std::string text = read_file(path.string());
            while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
            return text;
        }
        if (!tried.empty()) tried += ", ";
        tried += key;
    }
    throw ProviderError("no fixture: " + tried);
}

ChatResult MockBackend::chat(const ChatRequest& request) {
    ++chat_calls_;
    std::vector<std::string> keys{request.fingerprint};
    if (!request.participant_id.empty()) {
        keys.push_back(request.model_id + "/" + std::string(to_string(request.kind)) + "/" + request.participant_id);
        if (request.kind != PromptKind::Judge) keys.push_back(request.participant_id);
    }
    return {lookup(keys), 1};
}

std::vector<std::vector<double>> MockBackend::embed(const std::vector<std::string>& texts) {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const std::string& t : texts) out.push_back(hash_embedding(t, dimension_));
    return out;
}

}  // namespace normpipe::llmgate
