#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "normpipe/llmgate.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <cstdlib>
#include <thread>

namespace normpipe::llmgate {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string base64(std::string_view bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(bytes.data()),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::string provider_message(const HttpResponse& r) {
    try {
        const json j = json::parse(r.body);
        if (j.contains("error")) {
            const json& e = j["error"];
            if (e.is_object() && e.contains("message")) return e["message"].get<std::string>();
            if (e.is_string()) return e.get<std::string>();
        }
    } catch (const json::exception&) {
    }
    return r.body.substr(0, 300);
}

}  // namespace

void ProviderConfig::validate() const {
    if (max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
    if (request_timeout.count() <= 0) throw ConfigError("request_timeout must be positive");
    if (temperature < 0) throw ConfigError("temperature must be >= 0");
    if (max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
    if (embed_dimension < 1) throw ConfigError("embed_dimension must be >= 1");
}

void ProviderConfig::apply_environment() {
    if (const char* v = std::getenv("NORMPIPE_API_KEY"); v && *v) api_key = v;
    if (const char* v = std::getenv("NORMPIPE_BASE_URL"); v && *v) base_url = v;
    if (const char* v = std::getenv("NORMPIPE_EMBED_URL"); v && *v) embed_url = v;
}

Transport default_transport() {
    return [](const std::string& base, const std::string& path, const std::string& body,
              const std::string& api_key, std::chrono::milliseconds timeout) {
        httplib::Client client(base);
        const auto secs = timeout.count() / 1000;
        const auto usecs = (timeout.count() % 1000) * 1000;
        client.set_connection_timeout(secs, usecs);
        client.set_read_timeout(secs, usecs);
        client.set_write_timeout(secs, usecs);
        httplib::Headers headers;
        if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
        HttpResponse out;
        auto res = client.Post(path, headers, body, "application/json");
        if (!res) {
            const httplib::Error err = res.error();
            out.error = httplib::to_string(err);
            out.timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
                            err == httplib::Error::Write || err == httplib::Error::Connection;
            return out;
        }
        out.status = res->status;
        out.body = res->body;
        return out;
    };
}

std::chrono::milliseconds backoff_delay(int attempt) {
    return std::chrono::milliseconds(1000LL << std::max(0, attempt - 1));
}

bool is_retryable(const HttpResponse& r) {
    return r.timed_out || r.status == 429 || (r.status >= 500 && r.status < 600);
}

HttpBackend::HttpBackend(ProviderConfig config, Transport transport, Sleeper sleeper)
    : config_(std::move(config)), transport_(std::move(transport)), sleeper_(std::move(sleeper)) {
    config_.validate();
    if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::string HttpBackend::id() const {
    return "http-" + sha256_hex(config_.base_url + "\n" + config_.embed_url).substr(0, 12);
}

HttpResponse HttpBackend::post_with_retry(const std::string& base, const std::string& path,
                                          const std::string& body, int& attempts) {
    if (base.empty()) throw ConfigError("provider base_url is not set (NORMPIPE_BASE_URL)");
    HttpResponse last;
    for (attempts = 1;; ++attempts) {
        last = transport_(base, path, body, config_.api_key, config_.request_timeout);
        if (!last.timed_out && last.error.empty() && last.status >= 200 && last.status < 300) return last;
        if (!is_retryable(last) || attempts >= config_.max_attempts) break;
        sleeper_(backoff_delay(attempts));
    }
    if (!last.error.empty())
        throw ProviderError("request to " + base + path + " failed after " + std::to_string(attempts) +
                            " attempt(s): " + last.error);
    throw ProviderError("provider returned HTTP " + std::to_string(last.status) + " after " +
                        std::to_string(attempts) + " attempt(s): " + provider_message(last));
}

std::string HttpBackend::build_chat_body(const ChatRequest& request) {
    ordered_json content = ordered_json::array();
    content.push_back({{"type", "text"}, {"text", request.prompt}});
    if (request.image) {
        const std::string mime = request.image_mime.empty() ? "image/png" : request.image_mime;
        content.push_back(
            {{"type", "image_url"}, {"image_url", {{"url", "data:" + mime + ";base64," + base64(*request.image)}}}});
    }
    ordered_json body;
    body["model"] = request.model_id;
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_output_tokens;
    body["messages"] = ordered_json::array({{{"role", "user"}, {"content", content}}});
    return body.dump();
}

std::string HttpBackend::parse_chat_reply(const std::string& body) {
    try {
        const json j = json::parse(body);
        const json& msg = j.at("choices").at(0).at("message");
        const json& content = msg.at("content");
        if (content.is_string()) return content.get<std::string>();
        if (content.is_null()) return "";
        throw ProviderError("chat reply content is not a string");
    } catch (const json::exception& e) {
        throw ProviderError(std::string("malformed chat reply: ") + e.what());
    }
}

std::string HttpBackend::build_embed_body(const std::string& model, const std::vector<std::string>& texts) {
    ordered_json body;
    body["model"] = model;
    body["input"] = texts;
    return body.dump();
}

std::vector<std::vector<double>> HttpBackend::parse_embed_reply(const std::string& body) {
    try {
        const json j = json::parse(body);
        std::vector<std::vector<double>> out;
        for (const json& item : j.at("data")) out.push_back(item.at("embedding").get<std::vector<double>>());
        return out;
    } catch (const json::exception& e) {
        throw ProviderError(std::string("malformed embeddings reply: ") + e.what());
    }
}

ChatResult HttpBackend::chat(const ChatRequest& request) {
    ChatResult out;
    const HttpResponse r = post_with_retry(config_.base_url, config_.chat_path, build_chat_body(request), out.attempts);
    out.text = parse_chat_reply(r.body);
    return out;
}

std::vector<std::vector<double>> HttpBackend::embed(const std::vector<std::string>& texts) {
    int attempts = 0;
    const std::string& base = config_.embed_url.empty() ? config_.base_url : config_.embed_url;
    const std::string model = config_.embed_model.empty() ? config_.model_id : config_.embed_model;
    const HttpResponse r = post_with_retry(base, config_.embed_path, build_embed_body(model, texts), attempts);
    auto vectors = parse_embed_reply(r.body);
    if (vectors.size() != texts.size())
        throw ProviderError("embeddings reply has " + std::to_string(vectors.size()) + " vectors for " +
                            std::to_string(texts.size()) + " inputs");
    return vectors;
}

}  // namespace normpipe::llmgate
