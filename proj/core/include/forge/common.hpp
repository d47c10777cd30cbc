#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace forge {

// ─── Errors ───────────────────────────────────────────────────────
// Categories are exit-code relevant: the CLI maps ConfigError,
// ReplayMissError and InfraError to distinct nonzero codes.

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad configuration or bad operation preconditions detected before work starts.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Precondition or invariant violation on operation inputs.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A replay-mode gateway request with no recorded response left.
class ReplayMissError : public Error {
public:
    using Error::Error;
};

/// Harness-side failure (cannot spawn, provider unreachable, disk error),
/// distinguished from guest/solution failures throughout.
class InfraError : public Error {
public:
    using Error::Error;
};

// ─── Stable hashing ───────────────────────────────────────────────
// FNV-1a 64-bit. Used for content-addressed candidate ids, gateway
// request fingerprints and compile-cache keys. Must stay stable across
// runs and platforms; do not substitute std::hash.

uint64_t fnv1a64(std::string_view data);
std::string hex64(uint64_t value);

/// 16-hex-char digest of arbitrary bytes.
std::string content_hash(std::string_view data);

// ─── Deterministic RNG ────────────────────────────────────────────
// mt19937_64 with multiply-shift range reduction. We avoid
// std::uniform_int_distribution and std::shuffle because their output
// is implementation-defined; every sampling decision in the pipeline
// must be reproducible from the seed alone.

class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    /// Uniform value in [0, n). n must be > 0.
    uint64_t below(uint64_t n);

    /// Uniform double in [0, 1).
    double unit();

    /// Deterministic Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (size_t i = items.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

/// Derives an independent stream seed from a base seed, a label and an index.
uint64_t mix_seed(uint64_t base, std::string_view label, uint64_t index = 0);

// ─── Filesystem helpers ───────────────────────────────────────────

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);
/// Writes via a temp file + rename so readers never observe partial content.
void write_text_file_atomic(const std::filesystem::path& path, std::string_view content);

// ─── Prompt template rendering ────────────────────────────────────
// Replaces every {{key}} with vars.at(key); an unresolved key is an error.

std::string render_template(std::string_view text,
                            const std::map<std::string, std::string>& vars);

// ─── Bounded parallel execution ───────────────────────────────────
// Runs fn(0..count-1) on up to `workers` threads. The first exception
// thrown by any task is rethrown on the caller after all tasks finish.

void parallel_for(size_t count, int workers, const std::function<void(size_t)>& fn);

// ─── Logging ──────────────────────────────────────────────────────

enum class LogLevel { Debug = 0, Info = 1, Warn = 2, ErrorLevel = 3 };

void set_log_level(LogLevel level);
LogLevel log_level();
void log(LogLevel level, const std::string& message);

inline void log_debug(const std::string& m) { log(LogLevel::Debug, m); }
inline void log_info(const std::string& m) { log(LogLevel::Info, m); }
inline void log_warn(const std::string& m) { log(LogLevel::Warn, m); }
inline void log_error(const std::string& m) { log(LogLevel::ErrorLevel, m); }

// ─── Small string helpers ─────────────────────────────────────────

std::string trim(std::string_view s);
std::vector<std::string> split_lines(std::string_view text);
bool contains_ci(std::string_view haystack, std::string_view needle);

/// Trimmed text between the first <tag> and the following </tag>, or ""
/// when the pair is absent. Prompts and replies use these markers so the
/// structure survives arbitrary surrounding prose.
std::string extract_tag(std::string_view text, std::string_view tag);

/// Value after "key:" on the first line that starts with the key
/// (case-insensitive), or nullopt. Used for the line-oriented reply formats.
std::optional<std::string> find_field(std::string_view text, std::string_view key);

}  // namespace forge
