#pragma once

#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "forge/common.hpp"

namespace forge {

// ─── Model-call boundary ──────────────────────────────────────────
// Every model interaction in the pipeline goes through one Gateway. Three
// modes: live (call the provider), record (call and persist a transcript),
// replay (serve recorded responses with no provider at all). Replay makes
// whole pipeline runs bit-deterministic.

enum class Purpose { Mutate, CoarseFilter, Judge, Solve, TestcaseAgent, VerifierAgent };

std::string to_string(Purpose p);
Purpose purpose_from_string(const std::string& s);

struct ChatMessage {
    std::string role;  // system | user | assistant
    std::string content;
};

struct Decoding {
    double temperature = 0.0;
    int max_tokens = 4096;
    std::string effort;  // free-form effort tag, may be empty
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    Decoding decoding;
    Purpose purpose = Purpose::Mutate;

    void validate() const;
    /// Canonical single-line serialization; the fingerprint hashes this.
    std::string canonical() const;
};

struct Usage {
    long long input_tokens = 0;
    long long output_tokens = 0;

    Usage& operator+=(const Usage& o) {
        input_tokens += o.input_tokens;
        output_tokens += o.output_tokens;
        return *this;
    }
};

struct ChatResponse {
    std::string text;
    Usage usage;
    double latency_seconds = 0.0;
};

/// Stable 16-hex-digit request identity: same content, same fingerprint.
std::string fingerprint(const ChatRequest& request);

class ProviderError : public Error {
public:
    using Error::Error;
};

class Provider {
public:
    virtual ~Provider() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
    virtual std::string name() const = 0;
};

struct RetryPolicy {
    int attempts = 3;
    double initial_delay_seconds = 0.25;
    double multiplier = 2.0;
};

enum class GatewayMode { Live, Record, Replay };

std::string to_string(GatewayMode m);
GatewayMode gateway_mode_from_string(const std::string& s);

class Gateway {
public:
    /// Live mode ignores the transcript path. Record truncates and rewrites
    /// it. Replay loads it up front and needs no provider.
    Gateway(GatewayMode mode, std::shared_ptr<Provider> provider,
            std::filesystem::path transcript_path, RetryPolicy retry = {});

    /// Identical requests form a queue per fingerprint: replay hands out the
    /// recorded responses in order, so reissuing the same prompt n times
    /// yields the n recorded answers. Throws ReplayMissError when the queue
    /// is exhausted or absent.
    ChatResponse complete(const ChatRequest& request);

    GatewayMode mode() const { return mode_; }
    Usage total_usage() const;
    long long call_count() const;

    /// Replay bookkeeping: responses handed out so far, per fingerprint.
    /// Checkpoints store this so a resumed run can pick up mid-transcript.
    std::map<std::string, long long> replay_consumed() const;
    /// Repositions every replay queue to the recorded counts, forward or
    /// back. Replay mode only; overshooting the transcript is an error.
    void replay_fast_forward(const std::map<std::string, long long>& consumed);

private:
    ChatResponse call_provider(const ChatRequest& request);
    void append_record(const ChatRequest& request, const std::string& fp, const ChatResponse& response);

    GatewayMode mode_;
    std::shared_ptr<Provider> provider_;
    std::filesystem::path transcript_path_;
    RetryPolicy retry_;

    mutable std::mutex mu_;
    std::map<std::string, std::deque<ChatResponse>> replay_queues_;
    std::map<std::string, long long> replay_consumed_;
    std::map<std::string, std::string> seen_requests_;  // fingerprint -> canonical request
    std::map<std::string, int> record_ordinals_;
    Usage usage_;
    long long calls_ = 0;
};

// ─── Response post-processing ─────────────────────────────────────

struct CodeBlock {
    std::string body;
    std::string toolchain;  // fence tag, e.g. "python" or "cpp"; may be empty
};

/// Extracts the last complete fenced code block. Throws ValidationError when
/// the response has none (callers treat that sample as unusable).
CodeBlock parse_code_block(const std::string& response_text);

/// Every complete fenced block, in order of appearance. Throws
/// ValidationError when a fence is left unterminated.
std::vector<CodeBlock> parse_code_blocks(const std::string& response_text);

/// Sends `request`, and while `problem_with` returns a non-empty complaint,
/// appends the reply plus a correction note and asks again, up to `reasks`
/// extra rounds. Returns the first accepted reply; throws ValidationError
/// when the budget runs out.
std::string ask_until(Gateway& gateway, ChatRequest& request, int reasks,
                      const std::function<std::string(const std::string&)>& problem_with);

// ─── Providers ────────────────────────────────────────────────────

/// Deterministic offline provider used to author fixtures and exercise the
/// pipeline without a model. Behavior is a pure function of the request
/// content plus a per-fingerprint repeat counter.
std::shared_ptr<Provider> make_scripted_provider(uint64_t seed = 0);

/// HTTP chat-completions provider. `endpoint` is the scheme://host[:port]
/// base; credentials ride in the Authorization header when non-empty.
std::shared_ptr<Provider> make_http_provider(const std::string& endpoint, const std::string& api_key,
                                             const std::string& model);

/// Reads FORGE_PROVIDER (scripted | http), FORGE_ENDPOINT, FORGE_API_KEY,
/// FORGE_MODEL, FORGE_SCRIPTED_SEED. Throws ConfigError with guidance when
/// the selection is incomplete.
std::shared_ptr<Provider> provider_from_env();

}  // namespace forge
