#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace normpipe {

// ---------------------------------------------------------------------------
// Errors. Each family maps onto one CLI exit code (see tools/normpipe.cpp).
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad or inconsistent input data (corpus files, annotations, embeddings).
class DataError : public Error {
public:
    using Error::Error;
};

/// Missing or invalid configuration keys.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Remote model provider failures (network, HTTP status, malformed replies).
class ProviderError : public Error {
public:
    using Error::Error;
};

/// A caller violated an operation's precondition.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// A numerical routine produced a non-finite value or failed to converge.
class NumericError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Domain enums shared across modules.
// ---------------------------------------------------------------------------

enum class Category { Control, MCI, AD };
enum class Gender { Male, Female };
enum class Source { Real, Synthetic };
enum class PromptKind { Naive, Advanced, Judge };

inline constexpr Category kAllCategories[] = {Category::Control, Category::MCI, Category::AD};

std::string_view to_string(Category c);
std::string_view to_string(Gender g);
std::string_view to_string(Source s);
std::string_view to_string(PromptKind k);

/// Exact, case-sensitive label match ("Control", "MCI", "AD").
std::optional<Category> parse_category(std::string_view s);
/// Case-insensitive "male"/"female".
std::optional<Gender> parse_gender(std::string_view s);
std::optional<Source> parse_source(std::string_view s);
std::optional<PromptKind> parse_prompt_kind(std::string_view s);

// ---------------------------------------------------------------------------
// Warnings: one line per diagnostic, "WARN <module>: <message>".
// ---------------------------------------------------------------------------

using WarningSink = std::function<void(std::string_view module, std::string_view message)>;

void emit_warning(std::string_view module, std::string_view message);

/// Replaces the process-wide sink (default writes to stderr). Returns the previous one.
WarningSink set_warning_sink(WarningSink sink);

/// Captures warnings for the lifetime of the object; restores the previous sink after.
class ScopedWarningCapture {
public:
    ScopedWarningCapture();
    ~ScopedWarningCapture();
    ScopedWarningCapture(const ScopedWarningCapture&) = delete;
    ScopedWarningCapture& operator=(const ScopedWarningCapture&) = delete;

    const std::vector<std::string>& lines() const { return lines_; }
    bool contains(std::string_view needle) const;

private:
    std::vector<std::string> lines_;
    WarningSink previous_;
};

// ---------------------------------------------------------------------------
// Small utilities.
// ---------------------------------------------------------------------------

/// Lowercase hex SHA-256 of the bytes.
std::string sha256_hex(std::string_view bytes);

std::string_view trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);

/// Linear-interpolation quantile (type 7) of an unsorted sample, p in [0,1].
double quantile_linear(std::vector<double> values, double p);

struct Quartiles {
    double q25 = 0.0;
    double median = 0.0;
    double q75 = 0.0;
};

Quartiles quartiles(std::span<const double> values);

/// RFC 4180 field: quoted (with doubled quotes) only when it holds a comma,
/// quote, CR or LF.
std::string csv_field(std::string_view s);

/// Splits CSV content into records of fields, honouring quoted fields that
/// span lines. Throws DataError naming the line of an unterminated quote.
std::vector<std::vector<std::string>> parse_csv(std::string_view content);

/// Reads a whole file; throws DataError if unreadable.
std::string read_file(const std::string& path);
/// Writes atomically (temp file + rename), creating parent directories.
void write_file_atomic(const std::string& path, std::string_view content);

}  // namespace normpipe
