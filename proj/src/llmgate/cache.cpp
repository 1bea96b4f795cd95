#include "normpipe/llmgate.hpp"

#include <json.hpp>

#include <ctime>

namespace normpipe::llmgate {

std::string utc_now_iso() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

ResponseCache::ResponseCache(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path ResponseCache::entry_path(const std::string& backend_id,
                                                const std::string& fingerprint) const {
    return root_ / backend_id / (sha256_hex(backend_id + "\n" + fingerprint) + ".json");
}

std::optional<CacheEntry> ResponseCache::get(const std::string& backend_id, const std::string& fingerprint) const {
    const std::filesystem::path path = entry_path(backend_id, fingerprint);
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return std::nullopt;
    try {
        const nlohmann::json j = nlohmann::json::parse(read_file(path.string()));
        CacheEntry e{j.at("request_fingerprint").get<std::string>(), j.at("response_text").get<std::string>(),
                     j.value("created_at", std::string())};
        if (e.request_fingerprint != fingerprint) throw DataError("fingerprint mismatch");
        return e;
    } catch (const std::exception& ex) {
        emit_warning("llmgate", "dropping corrupt cache entry " + path.string() + " (" + ex.what() + ")");
        std::lock_guard lock(write_mutex_);
        std::filesystem::remove(path, ec);
        return std::nullopt;
    }
}

void ResponseCache::put(const std::string& backend_id, const CacheEntry& entry) {
    nlohmann::ordered_json j;
    j["request_fingerprint"] = entry.request_fingerprint;
    j["response_text"] = entry.response_text;
    j["created_at"] = entry.created_at;
    const std::string path = entry_path(backend_id, entry.request_fingerprint).string();
    std::lock_guard lock(write_mutex_);
    write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace normpipe::llmgate
