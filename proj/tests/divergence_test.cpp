#include <cmath>
#include <fstream>

#include "doctest.h"
#include "forge/divergence.hpp"
#include "forge/mutation.hpp"

using namespace forge;

namespace {

class PlaylistProvider : public Provider {
public:
    explicit PlaylistProvider(std::vector<std::string> replies) : replies_(std::move(replies)) {}
    std::string name() const override { return "playlist"; }
    ChatResponse complete(const ChatRequest& request) override {
        requests.push_back(request);
        if (next_ >= replies_.size()) throw ProviderError("playlist exhausted");
        return {replies_[next_++], {1, 1}, 0.001};
    }
    std::vector<ChatRequest> requests;

private:
    std::vector<std::string> replies_;
    size_t next_ = 0;
};

RetryPolicy no_wait() { return {3, 0.0, 1.0}; }

ProblemCandidate toy_candidate() {
    ProblemCandidate c = make_seed("toy", "Pick positions to maximize the total value.");
    return c;
}

std::vector<SolutionSample> fake_solutions(int k) {
    std::vector<SolutionSample> s;
    for (int i = 0; i < k; ++i) s.push_back({i, "solution body " + std::to_string(i), "python"});
    return s;
}

// Direct transcription of the pairwise mean of per-input score gaps,
// kept deliberately naive to cross-check the library implementation.
double oracle_exec_divergence(const std::vector<std::vector<double>>& q) {
    size_t k = q.size(), m = q[0].size();
    double sum = 0.0;
    int pairs = 0;
    for (size_t i = 0; i < k; ++i)
        for (size_t j = i + 1; j < k; ++j) {
            double sq = 0;
            for (size_t t = 0; t < m; ++t) sq += (q[i][t] - q[j][t]) * (q[i][t] - q[j][t]);
            sum += std::sqrt(sq) / std::sqrt(static_cast<double>(m));
            pairs++;
        }
    return sum / pairs;
}

}  // namespace

TEST_CASE("pair matrix reproduces the six-solution worked example") {
    // Six strategies where pairs (1,3) and (2,5), 1-based, share an idea.
    PairMatrix m(6);
    for (int i = 0; i < 6; ++i)
        for (int j = i + 1; j < 6; ++j) m.set_different(i, j, true);
    m.set_different(0, 2, false);
    m.set_different(1, 4, false);

    CHECK(m.pair_count() == 15);
    CHECK(m.divergence() == doctest::Approx(13.0 / 15.0).epsilon(1e-12));

    SUBCASE("relabeling the solutions leaves the estimate unchanged") {
        std::vector<int> perm = {3, 0, 5, 1, 4, 2};
        PairMatrix p(6);
        for (int i = 0; i < 6; ++i)
            for (int j = i + 1; j < 6; ++j) p.set_different(perm[i], perm[j], m.different(i, j));
        CHECK(p.divergence() == doctest::Approx(m.divergence()).epsilon(1e-12));
    }

    SUBCASE("matrix is symmetric and rejects bad indexes") {
        CHECK(m.different(2, 0) == m.different(0, 2));
        CHECK_THROWS_AS(m.different(0, 0), ValidationError);
        CHECK_THROWS_AS(m.different(-1, 3), ValidationError);
        CHECK_THROWS_AS(m.different(0, 6), ValidationError);
        CHECK_THROWS_AS(PairMatrix(1), ValidationError);
    }
}

TEST_CASE("judge fills the matrix from batch replies") {
    auto templates = TemplateSet::load_default();
    // 3 solutions, 3 pairs, batches of 2: pairs 1,2 then pair 3.
    auto provider = std::make_shared<PlaylistProvider>(std::vector<std::string>{
        "pair 1: different\npair 2: same\n", "pair 3: DIFFERENT\n"});
    Gateway gw(GatewayMode::Live, provider, "", no_wait());
    StrategyJudge judge(gw, templates, 2);
    PairMatrix m = judge.judge(toy_candidate(), fake_solutions(3));
    CHECK(m.different(0, 1));
    CHECK(!m.different(0, 2));
    CHECK(m.different(1, 2));
    CHECK(m.divergence() == doctest::Approx(2.0 / 3.0));
    REQUIRE(provider->requests.size() == 2);
    // Each batch request embeds its pair blocks with global indexes.
    CHECK(provider->requests[0].messages[0].content.find("<pair index=\"2\">") != std::string::npos);
    CHECK(provider->requests[1].messages[0].content.find("<pair index=\"3\">") != std::string::npos);
}

TEST_CASE("unanswered pairs get one corrective ask and then count as same") {
    auto templates = TemplateSet::load_default();
    auto provider = std::make_shared<PlaylistProvider>(std::vector<std::string>{
        "pair 1: different\nsomething about pair two but no verdict\n",
        "pair 2: same\n"});  // pair 3 never answered
    Gateway gw(GatewayMode::Live, provider, "", no_wait());
    StrategyJudge judge(gw, templates, 3);
    PairMatrix m = judge.judge(toy_candidate(), fake_solutions(3));
    CHECK(m.different(0, 1));
    CHECK(!m.different(0, 2));
    CHECK(!m.different(1, 2));  // defaulted, not guessed different
    REQUIRE(provider->requests.size() == 2);
    const auto& retry = provider->requests[1];
    CHECK(retry.messages.size() == 3);
    CHECK(retry.messages[1].role == "assistant");
    CHECK(retry.messages[2].content.find("2 3") != std::string::npos);
}

TEST_CASE("batch size changes the request count, never the verdicts") {
    ProblemCandidate candidate = toy_candidate();
    std::vector<SolutionSample> sols;
    const char* labels[5] = {"alpha", "beta", "alpha", "gamma", "beta"};
    for (int i = 0; i < 5; ++i)
        sols.push_back({i, std::string("# approach: ") + labels[i] + "\ncode\n", "python"});

    auto templates = TemplateSet::load_default();
    std::vector<PairMatrix> results;
    std::vector<long long> calls;
    for (int group : {1, 3, 10}) {
        Gateway gw(GatewayMode::Live, make_scripted_provider(5), "", no_wait());
        StrategyJudge judge(gw, templates, group);
        results.push_back(judge.judge(candidate, sols));
        calls.push_back(gw.call_count());
    }
    CHECK(calls[0] == 10);
    CHECK(calls[1] == 4);
    CHECK(calls[2] == 1);
    for (int i = 0; i < 5; ++i)
        for (int j = i + 1; j < 5; ++j) {
            CHECK(results[0].different(i, j) == results[1].different(i, j));
            CHECK(results[1].different(i, j) == results[2].different(i, j));
        }
    // alpha/alpha and beta/beta agree, everything else differs: 8 of 10.
    CHECK(results[0].divergence() == doctest::Approx(0.8));
}

TEST_CASE("execution divergence matches the worked three-solution example") {
    std::vector<std::vector<double>> q = {{1, 0}, {0, 1}, {1, 1}};
    double expected = (1.0 + std::sqrt(0.5) + std::sqrt(0.5)) / 3.0;
    CHECK(exec_divergence(q) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(exec_divergence(q) == doctest::Approx(0.8047378541243650).epsilon(1e-12));
}

TEST_CASE("execution divergence hits its extremes") {
    for (int m : {1, 5, 100}) {
        std::vector<double> zeros(static_cast<size_t>(m), 0.0);
        std::vector<double> ones(static_cast<size_t>(m), 1.0);
        CHECK(exec_divergence({zeros, ones}) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(exec_divergence({ones, ones, ones}) == doctest::Approx(0.0));
        std::vector<double> arbitrary(static_cast<size_t>(m), 0.37);
        CHECK(exec_divergence({arbitrary, arbitrary}) == doctest::Approx(0.0));
    }
}

TEST_CASE("execution divergence agrees with a brute-force oracle on random data") {
    Rng rng(20260825);
    for (int trial = 0; trial < 200; ++trial) {
        size_t k = 2 + rng.below(6);
        size_t m = 1 + rng.below(15);
        std::vector<std::vector<double>> q(k, std::vector<double>(m));
        for (auto& row : q)
            for (auto& v : row) v = rng.unit();
        CHECK(exec_divergence(q) == doctest::Approx(oracle_exec_divergence(q)).epsilon(1e-12));
    }
}

TEST_CASE("execution divergence rejects malformed inputs precisely") {
    CHECK_THROWS_AS(exec_divergence({}), ValidationError);
    CHECK_THROWS_AS(exec_divergence({{0.5, 0.5}}), ValidationError);
    CHECK_THROWS_AS(exec_divergence({{}, {}}), ValidationError);

    try {
        exec_divergence({{0.1, 0.2}, {0.3, 0.4}, {0.5}});
        FAIL("length mismatch undetected");
    } catch (const ValidationError& e) {
        std::string what = e.what();
        CHECK(what.find("vector 2") != std::string::npos);
        CHECK(what.find("length 1") != std::string::npos);
    }

    CHECK_THROWS_AS(exec_divergence({{0.1}, {1.2}}), ValidationError);
    CHECK_THROWS_AS(exec_divergence({{0.1}, {-0.2}}), ValidationError);
    double nan = std::nan("");
    CHECK_THROWS_AS(exec_divergence({{0.1}, {nan}}), ValidationError);
}

TEST_CASE("solution sampling is sequential and tolerant of bad draws") {
    auto templates = TemplateSet::load_default();

    SUBCASE("scripted provider yields n usable programs") {
        Gateway gw(GatewayMode::Live, make_scripted_provider(3), "", no_wait());
        SamplingOutcome out = sample_solutions(gw, templates, toy_candidate(), 4);
        CHECK(out.solutions.size() == 4);
        CHECK(out.failed_ordinals.empty());
        CHECK(out.acceptable(4));
        for (int i = 0; i < 4; ++i) {
            CHECK(out.solutions[static_cast<size_t>(i)].ordinal == i);
            CHECK(out.solutions[static_cast<size_t>(i)].toolchain == "python");
            CHECK(out.solutions[static_cast<size_t>(i)].source.find("# approach:") !=
                  std::string::npos);
        }
    }

    SUBCASE("unusable replies mark their ordinal failed") {
        auto provider = std::make_shared<PlaylistProvider>(std::vector<std::string>{
            "```python\nprint(1)\n```", "no code at all",
            "```python\nprint(2)\n```", "also prose"});
        Gateway gw(GatewayMode::Live, provider, "", no_wait());
        SamplingOutcome out = sample_solutions(gw, templates, toy_candidate(), 4);
        CHECK(out.solutions.size() == 2);
        CHECK(out.failed_ordinals == std::vector<int>{1, 3});
        CHECK(out.acceptable(4));  // exactly half failed is still acceptable
    }

    SUBCASE("provider exhaustion fails the remaining ordinals") {
        auto provider = std::make_shared<PlaylistProvider>(
            std::vector<std::string>{"```python\nprint(1)\n```"});
        Gateway gw(GatewayMode::Live, provider, "", no_wait());
        SamplingOutcome out = sample_solutions(gw, templates, toy_candidate(), 4);
        CHECK(out.solutions.size() == 1);
        CHECK(out.failed_ordinals == std::vector<int>{1, 2, 3});
        CHECK(!out.acceptable(4));
    }

    SUBCASE("replay misses propagate instead of counting as failures") {
        auto dir = std::filesystem::temp_directory_path() / "forge_div_replay";
        std::filesystem::create_directories(dir);
        { std::ofstream(dir / "empty.jsonl"); }
        Gateway gw(GatewayMode::Replay, nullptr, dir / "empty.jsonl");
        CHECK_THROWS_AS(sample_solutions(gw, templates, toy_candidate(), 4), ReplayMissError);
        std::filesystem::remove_all(dir);
    }

    SUBCASE("fewer than two draws is a configuration mistake") {
        Gateway gw(GatewayMode::Live, make_scripted_provider(3), "", no_wait());
        CHECK_THROWS_AS(sample_solutions(gw, templates, toy_candidate(), 1), ValidationError);
    }
}

TEST_CASE("ranking orders by score, breaking ties toward the smaller id") {
    std::vector<std::pair<std::string, double>> scored = {
        {"d", 0.5}, {"b", 0.9}, {"c", 0.5}, {"a", 0.1}};
    CHECK(rank_top(scored, 2) == std::vector<std::string>{"b", "c"});
    CHECK(rank_top(scored, 4) == std::vector<std::string>{"b", "c", "d", "a"});
    CHECK(rank_top(scored, 9) == std::vector<std::string>{"b", "c", "d", "a"});
    CHECK_THROWS_AS(rank_top(scored, 0), ValidationError);
    CHECK_THROWS_AS(rank_top(scored, -3), ValidationError);
}

TEST_CASE("openness classification uses an inclusive threshold") {
    CHECK(!classify_open_ended(0.14));
    CHECK(classify_open_ended(0.40));
    CHECK(classify_open_ended(0.25));
    CHECK(!classify_open_ended(0.2499999));
    CHECK(classify_open_ended(0.14, 0.1));
    CHECK_THROWS_AS(classify_open_ended(0.5, 0.0), ConfigError);
    CHECK_THROWS_AS(classify_open_ended(0.5, 1.0), ConfigError);
    CHECK_THROWS_AS(classify_open_ended(0.5, -2.0), ConfigError);
}
