#include <atomic>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "forge/gateway.hpp"

using namespace forge;
namespace fs = std::filesystem;

namespace {

ChatRequest make_request(Purpose purpose, const std::string& user_text) {
    ChatRequest r;
    r.purpose = purpose;
    r.messages = {{"system", "act as a test"}, {"user", user_text}};
    r.decoding.temperature = 0.0;
    r.decoding.max_tokens = 256;
    return r;
}

fs::path temp_dir(const std::string& tag) {
    fs::path p = fs::temp_directory_path() / ("forge_gw_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Provider that counts calls and can be told to fail the first k attempts.
class FlakyProvider : public Provider {
public:
    explicit FlakyProvider(int failures) : failures_(failures) {}
    std::string name() const override { return "flaky"; }
    ChatResponse complete(const ChatRequest& request) override {
        calls++;
        if (calls <= failures_) throw ProviderError("transient outage");
        ChatResponse resp;
        resp.text = "reply #" + std::to_string(calls) + " to: " + request.messages.back().content;
        resp.usage = {11, 7};
        resp.latency_seconds = 0.5;
        return resp;
    }
    int calls = 0;

private:
    int failures_;
};

RetryPolicy no_wait_policy() {
    RetryPolicy p;
    p.attempts = 3;
    p.initial_delay_seconds = 0.0;
    p.multiplier = 1.0;
    return p;
}

}  // namespace

TEST_CASE("fingerprints are stable and sensitive to every request field") {
    ChatRequest a = make_request(Purpose::Solve, "hello");
    CHECK(fingerprint(a) == fingerprint(a));
    CHECK(fingerprint(a).size() == 16);

    ChatRequest b = a;
    b.messages.back().content = "hello!";
    CHECK(fingerprint(a) != fingerprint(b));

    ChatRequest c = a;
    c.purpose = Purpose::Judge;
    CHECK(fingerprint(a) != fingerprint(c));

    ChatRequest d = a;
    d.decoding.temperature = 0.7;
    CHECK(fingerprint(a) != fingerprint(d));

    ChatRequest e = a;
    e.decoding.max_tokens = 257;
    CHECK(fingerprint(a) != fingerprint(e));

    ChatRequest f = a;
    f.decoding.effort = "high";
    CHECK(fingerprint(a) != fingerprint(f));

    ChatRequest g = a;
    g.messages.front().role = "user";
    CHECK(fingerprint(a) != fingerprint(g));
}

TEST_CASE("request validation rejects malformed chats") {
    ChatRequest r = make_request(Purpose::Solve, "x");
    CHECK_NOTHROW(r.validate());

    ChatRequest empty = r;
    empty.messages.clear();
    CHECK_THROWS_AS(empty.validate(), ValidationError);

    ChatRequest role = r;
    role.messages[0].role = "wizard";
    CHECK_THROWS_AS(role.validate(), ValidationError);

    ChatRequest blank = r;
    blank.messages[1].content = "";
    CHECK_THROWS_AS(blank.validate(), ValidationError);

    ChatRequest temp = r;
    temp.decoding.temperature = -0.5;
    CHECK_THROWS_AS(temp.validate(), ValidationError);

    ChatRequest tokens = r;
    tokens.decoding.max_tokens = 0;
    CHECK_THROWS_AS(tokens.validate(), ValidationError);
}

TEST_CASE("record then replay round-trips every response byte for byte") {
    fs::path dir = temp_dir("roundtrip");
    fs::path transcript = dir / "calls.jsonl";

    std::vector<ChatRequest> requests;
    requests.push_back(make_request(Purpose::Solve, "first"));
    requests.push_back(make_request(Purpose::Solve, "second"));
    requests.push_back(make_request(Purpose::Judge, "third"));
    requests.push_back(make_request(Purpose::Solve, "first"));  // repeat fingerprint

    std::vector<std::string> recorded;
    {
        auto provider = std::make_shared<FlakyProvider>(0);
        Gateway gw(GatewayMode::Record, provider, transcript);
        for (const auto& r : requests) recorded.push_back(gw.complete(r).text);
        CHECK(gw.call_count() == 4);
        CHECK(gw.total_usage().input_tokens == 44);
        CHECK(gw.total_usage().output_tokens == 28);
    }
    // Repeated fingerprint produced distinct recorded replies in call order.
    CHECK(recorded[0] != recorded[3]);

    Gateway replay(GatewayMode::Replay, nullptr, transcript);
    for (size_t i = 0; i < requests.size(); ++i) {
        ChatResponse resp = replay.complete(requests[i]);
        CHECK(resp.text == recorded[i]);
        CHECK(resp.usage.input_tokens == 11);
        CHECK(resp.latency_seconds == doctest::Approx(0.5));
    }
    // Queue exhausted: a fifth identical request must miss.
    CHECK_THROWS_AS(replay.complete(requests[0]), ReplayMissError);

    fs::remove_all(dir);
}

TEST_CASE("replay order for one fingerprint follows recording order even interleaved") {
    fs::path dir = temp_dir("interleave");
    fs::path transcript = dir / "calls.jsonl";
    ChatRequest a = make_request(Purpose::Solve, "same prompt");
    ChatRequest b = make_request(Purpose::Judge, "other prompt");
    {
        auto provider = std::make_shared<FlakyProvider>(0);
        Gateway gw(GatewayMode::Record, provider, transcript);
        gw.complete(a);  // reply #1
        gw.complete(b);  // reply #2
        gw.complete(a);  // reply #3
    }
    Gateway replay(GatewayMode::Replay, nullptr, transcript);
    // Consume out of recording order across fingerprints; within the repeated
    // fingerprint the queue still yields #1 then #3.
    CHECK(replay.complete(a).text.substr(0, 8) == "reply #1");
    CHECK(replay.complete(a).text.substr(0, 8) == "reply #3");
    CHECK(replay.complete(b).text.substr(0, 8) == "reply #2");
    fs::remove_all(dir);
}

TEST_CASE("replay miss names the fingerprint and purpose") {
    fs::path dir = temp_dir("miss");
    fs::path transcript = dir / "calls.jsonl";
    {
        auto provider = std::make_shared<FlakyProvider>(0);
        Gateway gw(GatewayMode::Record, provider, transcript);
        gw.complete(make_request(Purpose::Solve, "present"));
    }
    Gateway replay(GatewayMode::Replay, nullptr, transcript);
    ChatRequest absent = make_request(Purpose::Mutate, "absent");
    try {
        replay.complete(absent);
        FAIL("expected ReplayMissError");
    } catch (const ReplayMissError& e) {
        std::string what = e.what();
        CHECK(what.find(fingerprint(absent)) != std::string::npos);
        CHECK(what.find("mutate") != std::string::npos);
    }
    fs::remove_all(dir);
}

TEST_CASE("replay detects fingerprint collisions against the canonical request") {
    fs::path dir = temp_dir("collide");
    fs::path transcript = dir / "calls.jsonl";
    ChatRequest a = make_request(Purpose::Solve, "recorded text");
    {
        auto provider = std::make_shared<FlakyProvider>(0);
        Gateway gw(GatewayMode::Record, provider, transcript);
        gw.complete(a);
    }
    // Forge a transcript whose stored request disagrees with its fingerprint.
    std::string text = slurp(transcript);
    auto pos = text.find("recorded text");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 13, "tampered text");
    {
        std::ofstream out(transcript, std::ios::binary | std::ios::trunc);
        out << text;
    }
    Gateway replay(GatewayMode::Replay, nullptr, transcript);
    CHECK_THROWS_AS(replay.complete(a), ValidationError);
    fs::remove_all(dir);
}

TEST_CASE("missing transcript fails fast in replay mode") {
    CHECK_THROWS_AS(Gateway(GatewayMode::Replay, nullptr, "/nonexistent/calls.jsonl"),
                    ConfigError);
}

TEST_CASE("record mode truncates any previous transcript") {
    fs::path dir = temp_dir("truncate");
    fs::path transcript = dir / "calls.jsonl";
    {
        std::ofstream out(transcript);
        out << "{\"stale\": true}\n";
    }
    {
        auto provider = std::make_shared<FlakyProvider>(0);
        Gateway gw(GatewayMode::Record, provider, transcript);
        gw.complete(make_request(Purpose::Solve, "fresh"));
    }
    std::string text = slurp(transcript);
    CHECK(text.find("stale") == std::string::npos);
    CHECK(text.find("fresh") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("provider errors are retried with backoff and then surfaced") {
    ChatRequest r = make_request(Purpose::Solve, "retry me");

    auto two_failures = std::make_shared<FlakyProvider>(2);
    Gateway ok(GatewayMode::Live, two_failures, "", no_wait_policy());
    CHECK(ok.complete(r).text.substr(0, 8) == "reply #3");
    CHECK(two_failures->calls == 3);

    auto three_failures = std::make_shared<FlakyProvider>(3);
    Gateway fail(GatewayMode::Live, three_failures, "", no_wait_policy());
    CHECK_THROWS_AS(fail.complete(r), ProviderError);
    CHECK(three_failures->calls == 3);
}

TEST_CASE("non-provider errors bypass the retry loop") {
    class ThrowingProvider : public Provider {
    public:
        std::string name() const override { return "throwing"; }
        ChatResponse complete(const ChatRequest&) override {
            calls++;
            throw ValidationError("not retryable");
        }
        int calls = 0;
    };
    auto provider = std::make_shared<ThrowingProvider>();
    Gateway gw(GatewayMode::Live, provider, "", no_wait_policy());
    CHECK_THROWS_AS(gw.complete(make_request(Purpose::Solve, "x")), ValidationError);
    CHECK(provider->calls == 1);
}

TEST_CASE("code block parsing keeps the last complete fenced block") {
    std::string text =
        "Plan first.\n"
        "```python\nprint('draft')\n```\n"
        "Actually, better:\n"
        "```python\nprint('final')\n```\n"
        "Done.\n";
    CodeBlock block = parse_code_block(text);
    CHECK(block.toolchain == "python");
    CHECK(block.body == "print('final')\n");

    CHECK_THROWS_AS(parse_code_block("no code here"), ValidationError);
    CHECK_THROWS_AS(parse_code_block("```python\nunterminated\n"), ValidationError);

    CodeBlock untagged = parse_code_block("```\nraw\n```\n");
    CHECK(untagged.toolchain == "");
    CHECK(untagged.body == "raw\n");
}

TEST_CASE("scripted provider is deterministic per seed and varies per repeat") {
    auto p1 = make_scripted_provider(42);
    auto p2 = make_scripted_provider(42);
    auto p3 = make_scripted_provider(43);
    ChatRequest r = make_request(Purpose::Mutate,
                                 "<statement>\nPrint the sum of two integers.\n</statement>\n"
                                 "<kinds>\nchange-goal\n</kinds>\n");
    std::string a1 = p1->complete(r).text;
    std::string a2 = p1->complete(r).text;
    CHECK(a1 != a2);  // repeat counter varies the candidate
    CHECK(p2->complete(r).text == a1);
    CHECK(p2->complete(r).text == a2);
    CHECK(p3->complete(r).text != a1);  // different seed, different family member
    CHECK(a1.find("<candidate>") != std::string::npos);
    CHECK(a1.find("direction: maximize") != std::string::npos);
}

TEST_CASE("scripted coarse verdict keys off optimization wording") {
    auto p = make_scripted_provider(1);
    ChatRequest open = make_request(
        Purpose::CoarseFilter, "<candidate>\nChoose items to MAXIMIZE total value.\n</candidate>");
    ChatRequest closed = make_request(
        Purpose::CoarseFilter, "<candidate>\nPrint the sum of two integers.\n</candidate>");
    CHECK(p->complete(open).text.find("open_objective: yes") != std::string::npos);
    CHECK(p->complete(closed).text.find("open_objective: no") != std::string::npos);
}

TEST_CASE("scripted judge compares approach markers inside pair tags") {
    auto p = make_scripted_provider(1);
    std::string prompt =
        "<pair index=\"1\">\n<a>\n# approach: greedy\ncode\n</a>\n<b>\n# approach: greedy\ncode2\n</b>\n</pair>\n"
        "<pair index=\"2\">\n<a>\n# approach: greedy\ncode\n</a>\n<b>\n# approach: dp\ncode\n</b>\n</pair>\n"
        "<pair index=\"3\">\n<a>\nno marker\n</a>\n<b>\nno marker\n</b>\n</pair>\n";
    std::string reply = p->complete(make_request(Purpose::Judge, prompt)).text;
    CHECK(reply.find("pair 1: same") != std::string::npos);
    CHECK(reply.find("pair 2: different") != std::string::npos);
    CHECK(reply.find("pair 3: different") != std::string::npos);
}

TEST_CASE("scripted solver emits runnable python with an approach marker") {
    auto p = make_scripted_provider(7);
    ChatRequest r = make_request(Purpose::Solve, "<problem>\nValue Picker demo. Maximize.\n</problem>");
    CodeBlock block = parse_code_block(p->complete(r).text);
    CHECK(block.toolchain == "python");
    CHECK(block.body.find("# approach: ") != std::string::npos);
}

TEST_CASE("scripted verifier reply carries mode plus fenced programs") {
    auto p = make_scripted_provider(7);
    // A revision round sidesteps the scripted "first draft is flawed" branch,
    // so the reply is a function of the constraint wording alone.
    ChatRequest r = make_request(
        Purpose::VerifierAgent,
        "<problem>\nValue Picker demo. No two chosen positions may be adjacent. Maximize.\n</problem>\n"
        "<direction>\nmaximize\n</direction>\n"
        "<round>\n2\n</round>\n");
    std::string reply = p->complete(r).text;
    CHECK(reply.find("mode: objective") != std::string::npos);
    CHECK(reply.find("adjacent") != std::string::npos);  // variant-matched constraint check
    CodeBlock last = parse_code_block(reply);
    CHECK(last.body.find("sys.argv[2]") != std::string::npos);

    ChatRequest oracle = make_request(
        Purpose::VerifierAgent,
        "<problem>\nScores for this problem are assigned by an external oracle. Maximize.\n</problem>\n"
        "<direction>\nmaximize\n</direction>\n");
    std::string stub = p->complete(oracle).text;
    CHECK(parse_code_block(stub).body.find("print(7)") != std::string::npos);
}

TEST_CASE("provider_from_env explains itself when unset") {
    ::unsetenv("FORGE_PROVIDER");
    ::unsetenv("FORGE_ENDPOINT");
    CHECK_THROWS_AS(provider_from_env(), ConfigError);
    ::setenv("FORGE_PROVIDER", "scripted", 1);
    auto p = provider_from_env();
    CHECK(p->name() == "scripted");
    ::unsetenv("FORGE_PROVIDER");
}
