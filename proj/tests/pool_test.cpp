#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "forge/common.hpp"
#include "forge/pool.hpp"

using namespace forge;
namespace fs = std::filesystem;

namespace {

std::vector<CorpusProblem> tiny_corpus(int n) {
    std::vector<CorpusProblem> out;
    for (int i = 0; i < n; ++i)
        out.push_back({"p" + std::to_string(i + 1),
                       "Problem " + std::to_string(i + 1) + ": compute the answer."});
    return out;
}

ProblemCandidate final_candidate(const std::string& seed_id, int round, const std::string& extra) {
    ProblemCandidate c;
    c.statement = "Maximize the score while " + extra + ".";
    c.formulation.objective = "score";
    c.formulation.direction = Direction::Maximize;
    c.formulation.input_domain = "n <= 100";
    c.formulation.output_constraints = "one integer per line";
    c.lineage.seed_id = seed_id;
    c.lineage.kinds = {MutationKind::ChangeGoal};
    c.lineage.round = round;
    c.id = candidate_id(c.statement, c.lineage);
    c.stage = Stage::Mutated;
    c.advance(Stage::CoarseAccepted);
    c.advance(Stage::DivergenceRanked);
    c.set_llm_divergence(0.7);
    c.advance(Stage::InfraValidated);
    c.set_exec_divergence(0.5);
    c.advance(Stage::Final);
    return c;
}

}  // namespace

TEST_CASE("init validates the corpus and names offending ids") {
    CHECK_THROWS_AS((void)SeedPool::init({}), ValidationError);

    auto corpus = tiny_corpus(3);
    corpus.push_back({"p2", "A second statement under a reused id."});
    CHECK_THROWS_WITH_AS((void)SeedPool::init(corpus), "duplicate pool id: p2", ValidationError);

    corpus = tiny_corpus(2);
    corpus.push_back({"blank", "   \n"});
    CHECK_THROWS_AS((void)SeedPool::init(corpus), ValidationError);

    auto pool = SeedPool::init(tiny_corpus(5), 11);
    CHECK(pool.size() == 5);
    CHECK(pool.contains("p3"));
    CHECK(pool.at("p3").source == SourceTag::Corpus);
    CHECK(pool.at("p3").candidate.stage == Stage::Seed);
}

TEST_CASE("sampling is a pure function of contents, size, and seed") {
    auto corpus = tiny_corpus(20);
    auto pool = SeedPool::init(corpus, 7);

    auto s1 = pool.sample(8, 3);
    auto s2 = pool.sample(8, 3);
    REQUIRE(s1.size() == 8);
    for (size_t i = 0; i < s1.size(); ++i) CHECK(s1[i].id == s2[i].id);

    // Insertion order must not leak into the draw.
    auto shuffled = corpus;
    Rng r(123);
    r.shuffle(shuffled);
    auto pool2 = SeedPool::init(shuffled, 7);
    auto s3 = pool2.sample(8, 3);
    for (size_t i = 0; i < s1.size(); ++i) CHECK(s1[i].id == s3[i].id);

    auto s4 = pool.sample(8, 4);
    std::vector<std::string> ids1, ids4;
    for (const auto& c : s1) ids1.push_back(c.id);
    for (const auto& c : s4) ids4.push_back(c.id);
    CHECK(ids1 != ids4);

    std::set<std::string> distinct(ids1.begin(), ids1.end());
    CHECK(distinct.size() == 8);
}

TEST_CASE("sampling the whole pool yields a permutation; oversampling is an error") {
    auto pool = SeedPool::init(tiny_corpus(6), 1);
    auto all = pool.sample(6, 9);
    std::set<std::string> ids;
    for (const auto& c : all) ids.insert(c.id);
    CHECK(ids.size() == 6);

    CHECK_THROWS_WITH_AS((void)pool.sample(7, 0), "sample size 7 exceeds pool size 6",
                         ValidationError);
}

TEST_CASE("extend accepts only final candidates and is atomic on failure") {
    auto pool = SeedPool::init(tiny_corpus(4), 2);

    auto good = final_candidate("p1", 1, "visiting each cell once");
    auto half = good;
    half.stage = Stage::DivergenceRanked;
    half.exec_divergence.reset();
    CHECK_THROWS_AS(pool.extend({half}), ValidationError);
    CHECK(pool.size() == 4);

    pool.extend({good});
    CHECK(pool.size() == 5);
    CHECK(pool.at(good.id).source == SourceTag::Synthesized);
    CHECK(pool.at(good.id).candidate.lineage.round == 1);

    // A collision anywhere in the batch must leave the pool untouched.
    auto fresh = final_candidate("p2", 2, "keeping the path monotone");
    CHECK_THROWS_AS(pool.extend({fresh, good}), ValidationError);
    CHECK(pool.size() == 5);
    CHECK_FALSE(pool.contains(fresh.id));

    CHECK_THROWS_AS(pool.extend({fresh, fresh}), ValidationError);
    CHECK(pool.size() == 5);
}

TEST_CASE("save and load round-trip losslessly and byte-stably") {
    auto pool = SeedPool::init(tiny_corpus(5), 99);
    pool.extend({final_candidate("p1", 1, "avoiding repeated colors"),
                 final_candidate("p4", 1, "bounding the total weight")});

    fs::path dir = fs::temp_directory_path() / "forge-pool-roundtrip";
    fs::remove_all(dir);
    save_pool(pool, dir);

    auto loaded = load_pool(dir);
    CHECK(loaded.size() == pool.size());
    CHECK(loaded.rng_seed() == 99);
    for (const auto& e : pool.entries()) {
        const auto& l = loaded.at(e.candidate.id);
        CHECK(l.source == e.source);
        CHECK(l.candidate.statement == e.candidate.statement);
        CHECK(l.candidate.stage == e.candidate.stage);
        CHECK(l.candidate.exec_divergence == e.candidate.exec_divergence);
    }

    // Saving the loaded pool elsewhere reproduces every file byte for byte.
    fs::path dir2 = fs::temp_directory_path() / "forge-pool-roundtrip-2";
    fs::remove_all(dir2);
    save_pool(loaded, dir2);
    CHECK(read_text_file(dir2 / "index.json") == read_text_file(dir / "index.json"));
    for (const auto& e : pool.entries()) {
        fs::path rel = fs::path("problems") / (e.candidate.id + ".json");
        CHECK(read_text_file(dir2 / rel) == read_text_file(dir / rel));
    }

    // Samples drawn from the restored pool match the original.
    auto a = pool.sample(4, 5);
    auto b = loaded.sample(4, 5);
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].id == b[i].id);

    fs::remove_all(dir);
    fs::remove_all(dir2);
}

TEST_CASE("corpus directory loader reads txt and md files sorted by id") {
    fs::path dir = fs::temp_directory_path() / "forge-corpus-dir";
    fs::remove_all(dir);
    fs::create_directories(dir);
    write_text_file(dir / "b-two.txt", "Statement two.\n");
    write_text_file(dir / "a-one.md", "Statement one.\n");
    write_text_file(dir / "notes.json", "{}");

    auto corpus = load_corpus_dir(dir);
    REQUIRE(corpus.size() == 2);
    CHECK(corpus[0].id == "a-one");
    CHECK(corpus[1].id == "b-two");
    CHECK(corpus[1].statement == "Statement two.\n");

    CHECK_THROWS_AS((void)load_corpus_dir(dir / "missing"), ConfigError);
    fs::remove_all(dir);
}
