#include "normpipe/common.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

namespace normpipe {

std::string_view to_string(Category c) {
    switch (c) {
    case Category::Control: return "Control";
    case Category::MCI: return "MCI";
    case Category::AD: return "AD";
    }
    return "?";
}

std::string_view to_string(Gender g) { return g == Gender::Male ? "male" : "female"; }

std::string_view to_string(Source s) { return s == Source::Real ? "real" : "synthetic"; }

std::string_view to_string(PromptKind k) {
    switch (k) {
    case PromptKind::Naive: return "naive";
    case PromptKind::Advanced: return "advanced";
    case PromptKind::Judge: return "judge";
    }
    return "?";
}

std::optional<Category> parse_category(std::string_view s) {
    for (Category c : kAllCategories)
        if (s == to_string(c)) return c;
    return std::nullopt;
}

std::optional<Gender> parse_gender(std::string_view s) {
    const std::string lower = to_lower_ascii(trim(s));
    if (lower == "male") return Gender::Male;
    if (lower == "female") return Gender::Female;
    return std::nullopt;
}

std::optional<Source> parse_source(std::string_view s) {
    if (s == "real") return Source::Real;
    if (s == "synthetic") return Source::Synthetic;
    return std::nullopt;
}

std::optional<PromptKind> parse_prompt_kind(std::string_view s) {
    if (s == "naive") return PromptKind::Naive;
    if (s == "advanced") return PromptKind::Advanced;
    if (s == "judge") return PromptKind::Judge;
    return std::nullopt;
}

namespace {

std::mutex g_sink_mutex;

WarningSink& sink_slot() {
    static WarningSink sink = [](std::string_view module, std::string_view message) {
        std::cerr << "WARN " << module << ": " << message << '\n';
    };
    return sink;
}

}  // namespace

void emit_warning(std::string_view module, std::string_view message) {
    std::lock_guard lock(g_sink_mutex);
    if (sink_slot()) sink_slot()(module, message);
}

WarningSink set_warning_sink(WarningSink sink) {
    std::lock_guard lock(g_sink_mutex);
    WarningSink previous = std::move(sink_slot());
    sink_slot() = std::move(sink);
    return previous;
}

ScopedWarningCapture::ScopedWarningCapture() {
    previous_ = set_warning_sink([this](std::string_view module, std::string_view message) {
        lines_.push_back("WARN " + std::string(module) + ": " + std::string(message));
    });
}

ScopedWarningCapture::~ScopedWarningCapture() { set_warning_sink(std::move(previous_)); }

bool ScopedWarningCapture::contains(std::string_view needle) const {
    return std::any_of(lines_.begin(), lines_.end(),
                       [&](const std::string& l) { return l.find(needle) != std::string::npos; });
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256 failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xF]);
    }
    return out;
}

std::string_view trim(std::string_view s) {
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

double quantile_linear(std::vector<double> values, double p) {
    if (values.empty()) throw PreconditionError("quantile of empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw PreconditionError("quantile level outside [0,1]");
    std::sort(values.begin(), values.end());
    const double h = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Quartiles quartiles(std::span<const double> values) {
    std::vector<double> v(values.begin(), values.end());
    return {quantile_linear(v, 0.25), quantile_linear(v, 0.5), quantile_linear(v, 0.75)};
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view content) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    std::size_t line = 1;
    std::size_t quote_line = 0;
    auto end_row = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
        rows.push_back(std::move(row));
        row.clear();
    };
    for (std::size_t i = 0; i < content.size(); ++i) {
        const char c = content[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < content.size() && content[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        if (c == '"' && !field_started) {
            quoted = true;
            field_started = true;
            quote_line = line;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
            field_started = false;
        } else if (c == '\r') {
            continue;
        } else if (c == '\n') {
            ++line;
            end_row();
        } else {
            field += c;
            field_started = true;
        }
    }
    if (quoted) throw DataError("unterminated quoted field starting on line " + std::to_string(quote_line));
    if (field_started || !row.empty()) end_row();
    return rows;
}

void write_file_atomic(const std::string& path, std::string_view content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write file: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw DataError("write failed: " + tmp.string());
    }
    fs::rename(tmp, target);
}

}  // namespace normpipe
