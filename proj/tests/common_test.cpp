#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <map>
#include <set>

#include "forge/common.hpp"

using namespace forge;
namespace fs = std::filesystem;

TEST_CASE("fnv1a64 matches the published reference vectors") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
    CHECK(hex64(0xcbf29ce484222325ULL) == "cbf29ce484222325");
    CHECK(content_hash("foobar") == "85944171f73967e8");
}

TEST_CASE("rng replays exactly and respects bounds") {
    Rng a(42), b(42), c(43);
    std::vector<uint64_t> sa, sb;
    for (int i = 0; i < 64; ++i) {
        sa.push_back(a.next_u64());
        sb.push_back(b.next_u64());
    }
    CHECK(sa == sb);
    CHECK(sa[0] != c.next_u64());

    Rng r(7);
    for (int i = 0; i < 10000; ++i) CHECK(r.below(13) < 13);
    for (int i = 0; i < 100; ++i) {
        double u = r.unit();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("rng.below is close to uniform over a small modulus") {
    Rng r(99);
    std::vector<int> counts(5, 0);
    const int n = 50000;
    for (int i = 0; i < n; ++i) counts[r.below(5)]++;
    for (int c : counts) {
        CHECK(c > n / 5 - 600);
        CHECK(c < n / 5 + 600);
    }
}

TEST_CASE("shuffle produces a permutation and varies with seed") {
    std::vector<int> v(20);
    for (int i = 0; i < 20; ++i) v[i] = i;
    auto w = v;
    Rng r1(5), r2(5), r3(6);
    r1.shuffle(v);
    auto v2 = w;
    r2.shuffle(v2);
    CHECK(v == v2);
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == w);
    auto v3 = w;
    r3.shuffle(v3);
    CHECK(v != v3);
}

TEST_CASE("mix_seed separates by label and index") {
    std::set<uint64_t> seen;
    for (uint64_t i = 0; i < 50; ++i) seen.insert(mix_seed(1, "solve", i));
    seen.insert(mix_seed(1, "judge", 0));
    seen.insert(mix_seed(2, "solve", 0));
    CHECK(seen.size() == 52);
    CHECK(mix_seed(1, "solve", 3) == mix_seed(1, "solve", 3));
}

TEST_CASE("render_template substitutes and rejects unknown keys") {
    std::map<std::string, std::string> vars{{"name", "x"}, {"k", "3"}};
    CHECK(render_template("pick {{k}} of {{name}}", vars) == "pick 3 of x");
    CHECK(render_template("no placeholders", {}) == "no placeholders");
    CHECK_THROWS_AS((void)render_template("{{missing}}", vars), ValidationError);
    CHECK_THROWS_AS((void)render_template("{{open", vars), ValidationError);
}

TEST_CASE("split_lines keeps interior blanks and drops one trailing newline") {
    CHECK(split_lines("a\nb") == std::vector<std::string>{"a", "b"});
    CHECK(split_lines("a\n") == std::vector<std::string>{"a"});
    CHECK(split_lines("a\n\nb\n") == std::vector<std::string>{"a", "", "b"});
    CHECK(split_lines("") == std::vector<std::string>{});
}

TEST_CASE("parallel_for covers every index once and propagates errors") {
    std::vector<std::atomic<int>> hits(200);
    parallel_for(200, 8, [&](size_t i) { hits[i]++; });
    for (auto& h : hits) CHECK(h.load() == 1);

    CHECK_THROWS_WITH_AS(parallel_for(10, 4,
                                      [&](size_t i) {
                                          if (i == 7) throw ValidationError("boom at 7");
                                      }),
                         "boom at 7", ValidationError);
}

TEST_CASE("atomic text write round-trips and replaces existing content") {
    fs::path dir = fs::temp_directory_path() / ("forge-common-" + hex64(fnv1a64("t1")));
    fs::create_directories(dir);
    fs::path f = dir / "out.txt";
    write_text_file_atomic(f, "first\n");
    CHECK(read_text_file(f) == "first\n");
    write_text_file_atomic(f, "second\n");
    CHECK(read_text_file(f) == "second\n");
    CHECK_THROWS_AS((void)read_text_file(dir / "absent.txt"), Error);
    fs::remove_all(dir);
}
