#include "forge/gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <json.hpp>

namespace forge {

using nlohmann::json;

std::string to_string(Purpose p) {
    switch (p) {
        case Purpose::Mutate: return "mutate";
        case Purpose::CoarseFilter: return "coarse_filter";
        case Purpose::Judge: return "judge";
        case Purpose::Solve: return "solve";
        case Purpose::TestcaseAgent: return "testcase_agent";
        case Purpose::VerifierAgent: return "verifier_agent";
    }
    return "?";
}

Purpose purpose_from_string(const std::string& s) {
    if (s == "mutate") return Purpose::Mutate;
    if (s == "coarse_filter") return Purpose::CoarseFilter;
    if (s == "judge") return Purpose::Judge;
    if (s == "solve") return Purpose::Solve;
    if (s == "testcase_agent") return Purpose::TestcaseAgent;
    if (s == "verifier_agent") return Purpose::VerifierAgent;
    throw ValidationError("unknown purpose tag: " + s);
}

std::string to_string(GatewayMode m) {
    switch (m) {
        case GatewayMode::Live: return "live";
        case GatewayMode::Record: return "record";
        case GatewayMode::Replay: return "replay";
    }
    return "?";
}

GatewayMode gateway_mode_from_string(const std::string& s) {
    if (s == "live") return GatewayMode::Live;
    if (s == "record") return GatewayMode::Record;
    if (s == "replay") return GatewayMode::Replay;
    throw ConfigError("unknown gateway mode: " + s + " (expected live, record, or replay)");
}

void ChatRequest::validate() const {
    if (messages.empty()) throw ValidationError("chat request has no messages");
    for (const auto& m : messages) {
        if (m.role != "system" && m.role != "user" && m.role != "assistant")
            throw ValidationError("chat message role must be system, user, or assistant; got " + m.role);
        if (m.content.empty()) throw ValidationError("chat message content is empty");
    }
    if (decoding.temperature < 0.0) throw ValidationError("temperature must be non-negative");
    if (decoding.max_tokens < 1) throw ValidationError("max output tokens must be positive");
}

static json request_to_json(const ChatRequest& r) {
    json messages = json::array();
    for (const auto& m : r.messages) messages.push_back({{"content", m.content}, {"role", m.role}});
    return json{{"decoding",
                 {{"effort", r.decoding.effort},
                  {"maxTokens", r.decoding.max_tokens},
                  {"temperature", r.decoding.temperature}}},
                {"messages", messages},
                {"purpose", to_string(r.purpose)}};
}

std::string ChatRequest::canonical() const { return request_to_json(*this).dump(); }

std::string fingerprint(const ChatRequest& request) {
    request.validate();
    return hex64(fnv1a64(request.canonical()));
}

// ─── Gateway ──────────────────────────────────────────────────────

Gateway::Gateway(GatewayMode mode, std::shared_ptr<Provider> provider,
                 std::filesystem::path transcript_path, RetryPolicy retry)
    : mode_(mode), provider_(std::move(provider)), transcript_path_(std::move(transcript_path)),
      retry_(retry) {
    if (mode_ != GatewayMode::Replay && !provider_)
        throw ConfigError("gateway mode " + to_string(mode_) + " needs a provider");
    if (mode_ == GatewayMode::Replay || mode_ == GatewayMode::Record) {
        if (transcript_path_.empty())
            throw ConfigError("gateway mode " + to_string(mode_) + " needs a transcript path");
    }
    if (mode_ == GatewayMode::Replay) {
        std::ifstream in(transcript_path_);
        if (!in) throw ConfigError("cannot open transcript: " + transcript_path_.string());
        std::string line;
        size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            json rec;
            try {
                rec = json::parse(line);
            } catch (const json::exception& e) {
                throw ValidationError("transcript " + transcript_path_.string() + " line " +
                                      std::to_string(line_no) + ": " + e.what());
            }
            std::string fp = rec.at("fingerprint").get<std::string>();
            std::string canonical = rec.at("request").dump();
            auto [it, inserted] = seen_requests_.emplace(fp, canonical);
            if (!inserted && it->second != canonical)
                throw ValidationError("transcript fingerprint collision at " + fp +
                                      ": two distinct requests share a hash");
            int ordinal = rec.at("ordinal").get<int>();
            if (ordinal != static_cast<int>(replay_queues_[fp].size()))
                throw ValidationError("transcript " + transcript_path_.string() + " line " +
                                      std::to_string(line_no) + ": ordinal " +
                                      std::to_string(ordinal) + " out of sequence for " + fp);
            ChatResponse resp;
            resp.text = rec.at("response").at("text").get<std::string>();
            resp.usage.input_tokens = rec.at("response").at("usage").at("inputTokens").get<long long>();
            resp.usage.output_tokens = rec.at("response").at("usage").at("outputTokens").get<long long>();
            resp.latency_seconds = rec.at("response").at("latencySeconds").get<double>();
            replay_queues_[fp].push_back(std::move(resp));
        }
    } else if (mode_ == GatewayMode::Record) {
        if (transcript_path_.has_parent_path())
            std::filesystem::create_directories(transcript_path_.parent_path());
        std::ofstream out(transcript_path_, std::ios::trunc);
        if (!out) throw ConfigError("cannot create transcript: " + transcript_path_.string());
    }
}

ChatResponse Gateway::call_provider(const ChatRequest& request) {
    double delay = retry_.initial_delay_seconds;
    for (int attempt = 1;; ++attempt) {
        try {
            auto start = std::chrono::steady_clock::now();
            ChatResponse resp = provider_->complete(request);
            std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
            if (resp.latency_seconds == 0.0) resp.latency_seconds = elapsed.count();
            if (resp.usage.input_tokens < 0 || resp.usage.output_tokens < 0)
                throw ProviderError("provider " + provider_->name() + " reported negative token usage");
            return resp;
        } catch (const ProviderError& e) {
            if (attempt >= retry_.attempts) throw;
            log_warn(std::string("provider attempt ") + std::to_string(attempt) + " failed: " + e.what());
            if (delay > 0)
                std::this_thread::sleep_for(std::chrono::duration<double>(delay));
            delay *= retry_.multiplier;
        }
    }
}

void Gateway::append_record(const ChatRequest& request, const std::string& fp,
                            const ChatResponse& response) {
    json rec;
    rec["fingerprint"] = fp;
    rec["ordinal"] = record_ordinals_[fp]++;
    rec["purpose"] = to_string(request.purpose);
    rec["request"] = request_to_json(request);
    rec["response"] = {{"text", response.text},
                       {"usage",
                        {{"inputTokens", response.usage.input_tokens},
                         {"outputTokens", response.usage.output_tokens}}},
                       {"latencySeconds", response.latency_seconds}};
    std::ofstream out(transcript_path_, std::ios::app);
    if (!out) throw InfraError("cannot append to transcript: " + transcript_path_.string());
    out << rec.dump() << "\n";
    out.flush();
}

ChatResponse Gateway::complete(const ChatRequest& request) {
    std::string fp = fingerprint(request);

    if (mode_ == GatewayMode::Replay) {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = replay_queues_.find(fp);
        long long available = it == replay_queues_.end() ? 0 : static_cast<long long>(it->second.size());
        long long position = replay_consumed_[fp];
        if (position >= available)
            throw ReplayMissError("replay miss: no recorded response for fingerprint " + fp +
                                  " (purpose " + to_string(request.purpose) + ")");
        // The hash alone is not trusted: the stored request must match too.
        auto seen = seen_requests_.find(fp);
        if (seen != seen_requests_.end() && seen->second != request.canonical())
            throw ValidationError("fingerprint collision at " + fp +
                                  ": live request differs from the recorded one");
        // Queues are never popped: keeping them whole lets fast-forward
        // rewind to an earlier checkpoint as well as skip ahead.
        ChatResponse resp = it->second.at(static_cast<size_t>(position));
        replay_consumed_[fp] = position + 1;
        usage_ += resp.usage;
        calls_++;
        return resp;
    }

    ChatResponse resp = call_provider(request);
    std::lock_guard<std::mutex> lock(mu_);
    auto [it, inserted] = seen_requests_.emplace(fp, request.canonical());
    if (!inserted && it->second != request.canonical())
        throw ValidationError("fingerprint collision at " + fp + ": two distinct requests share a hash");
    if (mode_ == GatewayMode::Record) append_record(request, fp, resp);
    usage_ += resp.usage;
    calls_++;
    return resp;
}

Usage Gateway::total_usage() const {
    std::lock_guard<std::mutex> lock(mu_);
    return usage_;
}

std::map<std::string, long long> Gateway::replay_consumed() const {
    std::lock_guard<std::mutex> lock(mu_);
    return replay_consumed_;
}

void Gateway::replay_fast_forward(const std::map<std::string, long long>& consumed) {
    if (mode_ != GatewayMode::Replay)
        throw ConfigError("fast-forward only applies to replay mode");
    std::lock_guard<std::mutex> lock(mu_);
    for (const auto& [fp, n] : consumed) {
        auto it = replay_queues_.find(fp);
        long long available = it == replay_queues_.end() ? 0 : static_cast<long long>(it->second.size());
        if (n < 0 || n > available)
            throw ValidationError("fast-forward past the transcript: fingerprint " + fp + " has " +
                                  std::to_string(available) + " recorded response(s), checkpoint consumed " +
                                  std::to_string(n));
    }
    // The map is the complete position record; a fingerprint it omits
    // rewinds to the start of its queue.
    replay_consumed_ = consumed;
}

long long Gateway::call_count() const {
    std::lock_guard<std::mutex> lock(mu_);
    return calls_;
}

// ─── Code block extraction ────────────────────────────────────────

std::vector<CodeBlock> parse_code_blocks(const std::string& response_text) {
    auto lines = split_lines(response_text);
    std::vector<CodeBlock> blocks;
    std::optional<CodeBlock> open;  // fence currently being read
    for (const auto& line : lines) {
        std::string t = trim(line);
        if (t.rfind("```", 0) == 0) {
            if (!open) {
                open = CodeBlock{};
                open->toolchain = trim(t.substr(3));
            } else {
                blocks.push_back(std::move(*open));
                open.reset();
            }
        } else if (open) {
            open->body += line;
            open->body += '\n';
        }
    }
    if (open) throw ValidationError("response ends inside an unterminated code fence");
    return blocks;
}

CodeBlock parse_code_block(const std::string& response_text) {
    std::vector<CodeBlock> blocks = parse_code_blocks(response_text);
    if (blocks.empty()) throw ValidationError("no fenced code block in model response");
    return blocks.back();
}

std::string ask_until(Gateway& gateway, ChatRequest& request, int reasks,
                      const std::function<std::string(const std::string&)>& problem_with) {
    if (reasks < 0) throw ConfigError("re-ask budget must be non-negative");
    std::string reply;
    std::string fault;
    for (int attempt = 0; attempt <= reasks; ++attempt) {
        reply = gateway.complete(request).text;
        fault = problem_with(reply);
        if (fault.empty()) return reply;
        request.messages.push_back({"assistant", reply});
        request.messages.push_back(
            {"user", "Your reply could not be used: " + fault +
                         ". Answer again, following the required format exactly."});
    }
    throw ValidationError("model reply unusable after " + std::to_string(reasks + 1) +
                          " attempts: " + fault);
}

// ─── Environment wiring ───────────────────────────────────────────

static std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : fallback;
}

std::shared_ptr<Provider> provider_from_env() {
    std::string kind = env_or("FORGE_PROVIDER", "");
    if (kind == "scripted") {
        uint64_t seed = 0;
        std::string s = env_or("FORGE_SCRIPTED_SEED", "0");
        try {
            seed = std::stoull(s);
        } catch (const std::exception&) {
            throw ConfigError("FORGE_SCRIPTED_SEED must be an unsigned integer, got: " + s);
        }
        return make_scripted_provider(seed);
    }
    if (kind == "http" || (kind.empty() && !env_or("FORGE_ENDPOINT", "").empty())) {
        std::string endpoint = env_or("FORGE_ENDPOINT", "");
        if (endpoint.empty())
            throw ConfigError("FORGE_PROVIDER=http requires FORGE_ENDPOINT (scheme://host[:port])");
        return make_http_provider(endpoint, env_or("FORGE_API_KEY", ""), env_or("FORGE_MODEL", "default"));
    }
    if (kind.empty())
        throw ConfigError(
            "no provider configured: set FORGE_PROVIDER=scripted for the offline provider, or "
            "FORGE_PROVIDER=http with FORGE_ENDPOINT (and optional FORGE_API_KEY, FORGE_MODEL)");
    throw ConfigError("unknown FORGE_PROVIDER: " + kind + " (expected scripted or http)");
}

}  // namespace forge
