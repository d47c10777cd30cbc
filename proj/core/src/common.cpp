#include "forge/common.hpp"

#include <atomic>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace forge {

uint64_t fnv1a64(std::string_view data) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[value & 0xf];
        value >>= 4;
    }
    return out;
}

std::string content_hash(std::string_view data) { return hex64(fnv1a64(data)); }

uint64_t Rng::below(uint64_t n) {
    if (n == 0) throw ValidationError("Rng::below: n must be positive");
    // Multiply-shift reduction: deterministic, negligible bias for our n.
    unsigned __int128 wide = static_cast<unsigned __int128>(next_u64());
    return static_cast<uint64_t>((wide * n) >> 64);
}

double Rng::unit() {
    return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
}

uint64_t mix_seed(uint64_t base, std::string_view label, uint64_t index) {
    std::string blob;
    blob.reserve(label.size() + 32);
    blob.append(hex64(base));
    blob.push_back('/');
    blob.append(label);
    blob.push_back('/');
    blob.append(hex64(index));
    return fnv1a64(blob);
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InfraError("cannot read file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InfraError("cannot write file: " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw InfraError("short write: " + path.string());
}

void write_text_file_atomic(const std::filesystem::path& path, std::string_view content) {
    static std::atomic<uint64_t> counter{0};
    auto tmp = path;
    tmp += ".tmp" + std::to_string(counter.fetch_add(1));
    write_text_file(tmp, content);
    std::filesystem::rename(tmp, path);
}

std::string render_template(std::string_view text,
                            const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(text.size());
    size_t pos = 0;
    while (pos < text.size()) {
        size_t open = text.find("{{", pos);
        if (open == std::string_view::npos) {
            out.append(text.substr(pos));
            break;
        }
        out.append(text.substr(pos, open - pos));
        size_t close = text.find("}}", open + 2);
        if (close == std::string_view::npos)
            throw ValidationError("template: unterminated {{ placeholder");
        std::string key(text.substr(open + 2, close - open - 2));
        auto it = vars.find(key);
        if (it == vars.end())
            throw ValidationError("template: no value for placeholder {{" + key + "}}");
        out.append(it->second);
        pos = close + 2;
    }
    return out;
}

void parallel_for(size_t count, int workers, const std::function<void(size_t)>& fn) {
    if (count == 0) return;
    size_t nthreads = std::min<size_t>(std::max(workers, 1), count);
    if (nthreads == 1) {
        for (size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> threads;
    threads.reserve(nthreads);
    for (size_t t = 0; t < nthreads; ++t) {
        threads.emplace_back([&] {
            while (true) {
                size_t i = next.fetch_add(1);
                if (i >= count || failed.load()) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    failed.store(true);
                    return;
                }
            }
        });
    }
    for (auto& th : threads) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

namespace {
std::atomic<int> g_log_level{static_cast<int>(LogLevel::Warn)};
std::mutex g_log_mutex;

const char* level_tag(LogLevel level) {
    switch (level) {
        case LogLevel::Debug: return "debug";
        case LogLevel::Info: return "info";
        case LogLevel::Warn: return "warn";
        case LogLevel::ErrorLevel: return "error";
    }
    return "?";
}
}  // namespace

void set_log_level(LogLevel level) { g_log_level.store(static_cast<int>(level)); }
LogLevel log_level() { return static_cast<LogLevel>(g_log_level.load()); }

void log(LogLevel level, const std::string& message) {
    if (static_cast<int>(level) < g_log_level.load()) return;
    std::lock_guard<std::mutex> lock(g_log_mutex);
    std::cerr << "[forge:" << level_tag(level) << "] " << message << "\n";
}

std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            if (pos < text.size()) lines.emplace_back(text.substr(pos));
            break;
        }
        std::string_view line = text.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.emplace_back(line);
        pos = nl + 1;
    }
    return lines;
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return true;
    if (needle.size() > haystack.size()) return false;
    for (size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
        bool match = true;
        for (size_t j = 0; j < needle.size(); ++j) {
            if (std::tolower(static_cast<unsigned char>(haystack[i + j])) !=
                std::tolower(static_cast<unsigned char>(needle[j]))) {
                match = false;
                break;
            }
        }
        if (match) return true;
    }
    return false;
}

std::string extract_tag(std::string_view text, std::string_view tag) {
    std::string open = "<" + std::string(tag) + ">";
    std::string close = "</" + std::string(tag) + ">";
    size_t a = text.find(open);
    if (a == std::string_view::npos) return "";
    a += open.size();
    size_t b = text.find(close, a);
    if (b == std::string_view::npos) return "";
    return trim(text.substr(a, b - a));
}

std::optional<std::string> find_field(std::string_view text, std::string_view key) {
    for (const auto& line : split_lines(text)) {
        std::string t = trim(line);
        if (t.size() <= key.size() || t[key.size()] != ':') continue;
        bool match = true;
        for (size_t i = 0; i < key.size(); ++i) {
            if (std::tolower(static_cast<unsigned char>(t[i])) !=
                std::tolower(static_cast<unsigned char>(key[i]))) {
                match = false;
                break;
            }
        }
        if (match) return trim(t.substr(key.size() + 1));
    }
    return std::nullopt;
}

}  // namespace forge
