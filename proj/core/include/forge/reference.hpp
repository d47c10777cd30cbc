#pragma once

// Built-in reference problems: a string-construction compression task and a
// patrol-scheduling task. Feasibility checking, objectives, baselines, and
// scoring are bit-exact so they can serve as golden-test verifiers.
//
// This header is deliberately self-contained (std only): the judging harness
// compiles it inside sandboxed guest programs with a single -I.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <functional>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace forgeref {

// ─── Shared parsing helpers ───────────────────────────────────────

inline std::vector<std::string> ref_split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char ch : text) {
        if (ch == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    if (!cur.empty()) lines.push_back(cur);
    return lines;
}

inline std::vector<std::string> ref_tokens(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string t;
    while (in >> t) out.push_back(t);
    return out;
}

inline bool ref_parse_ll(const std::string& tok, long long& out) {
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return ec == std::errc() && p == tok.data() + tok.size();
}

inline bool ref_blank(const std::string& line) {
    for (char ch : line)
        if (!std::isspace(static_cast<unsigned char>(ch))) return false;
    return true;
}

// Small deterministic generator so instance synthesis never depends on the
// host library. splitmix64 step.
struct RefRng {
    uint64_t state;
    explicit RefRng(uint64_t seed) : state(seed) {}
    uint64_t next() {
        state += 0x9e3779b97f4a7c15ULL;
        uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    uint64_t below(uint64_t n) {
        return static_cast<uint64_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
    }
};

// ─── String factory task ──────────────────────────────────────────
// A program builds variables with two commands: "L s" creates a literal
// (lowercase, length 1..8), "C a b" concatenates two earlier variables.
// Each target must end up as some variable's value. Cost is command count
// plus total literal length; lower is better, scored against a no-reuse
// block-splitting baseline.

struct ConcatCase {
    std::vector<std::string> targets;
};

struct ConcatResult {
    bool feasible = false;
    long long cost = 0;
    long long baseline = 0;
    double score = 0.0;  // 1e6 * min(2, baseline/cost), 0 when infeasible
    std::string diagnostic;
};

inline constexpr long long kConcatMaxCommands = 5000;
inline constexpr int kConcatMaxLiteral = 8;
inline constexpr double kConcatScoreScale = 1e6;

inline long long concat_baseline(const std::vector<std::string>& targets) {
    long long b = 0;
    for (const auto& t : targets) {
        long long len = static_cast<long long>(t.size());
        long long blocks = (len + kConcatMaxLiteral - 1) / kConcatMaxLiteral;
        b += len + 2 * blocks - 1;
    }
    return b;
}

/// Empty result when the case list is acceptable, else a diagnostic.
inline std::string concat_input_diagnostic(const std::vector<ConcatCase>& cases) {
    if (cases.empty()) return "input has no test cases";
    if (cases.size() > 20) return "more than 20 test cases";
    for (size_t ci = 0; ci < cases.size(); ++ci) {
        const auto& c = cases[ci];
        std::string where = "case " + std::to_string(ci + 1);
        if (c.targets.empty()) return where + ": no targets";
        if (c.targets.size() > 200) return where + ": more than 200 targets";
        long long total = 0;
        for (const auto& t : c.targets) {
            if (t.empty() || t.size() > 400)
                return where + ": target length outside 1..400";
            for (char ch : t)
                if (ch < 'a' || ch > 'z') return where + ": target has a non-lowercase character";
            total += static_cast<long long>(t.size());
        }
        if (total > 40000) return where + ": total target length exceeds 40000";
    }
    return "";
}

/// Throws std::runtime_error on malformed input text.
inline std::vector<ConcatCase> parse_concat_input(const std::string& text) {
    std::istringstream in(text);
    long long t = 0;
    if (!(in >> t)) throw std::runtime_error("input: missing test-case count");
    if (t < 1) throw std::runtime_error("input: test-case count must be positive");
    std::vector<ConcatCase> cases;
    for (long long ci = 0; ci < t; ++ci) {
        long long q = 0;
        if (!(in >> q)) throw std::runtime_error("input: missing target count in case " + std::to_string(ci + 1));
        if (q < 1) throw std::runtime_error("input: target count must be positive in case " + std::to_string(ci + 1));
        ConcatCase c;
        for (long long i = 0; i < q; ++i) {
            std::string s;
            if (!(in >> s)) throw std::runtime_error("input: missing target in case " + std::to_string(ci + 1));
            c.targets.push_back(s);
        }
        cases.push_back(std::move(c));
    }
    std::string rest;
    if (in >> rest) throw std::runtime_error("input: trailing content after last case");
    auto diag = concat_input_diagnostic(cases);
    if (!diag.empty()) throw std::runtime_error("input: " + diag);
    return cases;
}

namespace detail {

struct ConcatParseState {
    const std::vector<std::string>& lines;
    size_t pos = 0;
};

inline ConcatResult concat_infeasible(long long baseline, const std::string& why) {
    ConcatResult r;
    r.feasible = false;
    r.baseline = baseline;
    r.score = 0.0;
    r.diagnostic = why;
    return r;
}

/// Parses and checks one program against one case, advancing the cursor.
inline ConcatResult concat_check_one(const ConcatCase& c, ConcatParseState& st) {
    const long long baseline = concat_baseline(c.targets);
    size_t maxlen = 0;
    for (const auto& t : c.targets) maxlen = std::max(maxlen, t.size());

    auto next_line = [&]() -> const std::string* {
        while (st.pos < st.lines.size() && ref_blank(st.lines[st.pos])) st.pos++;
        if (st.pos >= st.lines.size()) return nullptr;
        return &st.lines[st.pos++];
    };

    const std::string* mline = next_line();
    if (!mline) return concat_infeasible(baseline, "missing command count");
    auto mtok = ref_tokens(*mline);
    long long m = 0;
    if (mtok.size() != 1 || !ref_parse_ll(mtok[0], m))
        return concat_infeasible(baseline, "command count line is not a single integer");
    if (m < 1 || m > kConcatMaxCommands)
        return concat_infeasible(baseline, "command count outside 1.." + std::to_string(kConcatMaxCommands));

    std::vector<std::string> values;
    long long literal_chars = 0;
    for (long long i = 0; i < m; ++i) {
        const std::string* line = next_line();
        if (!line) return concat_infeasible(baseline, "program truncated at command " + std::to_string(i + 1));
        auto tok = ref_tokens(*line);
        std::string where = "command " + std::to_string(i + 1);
        if (tok.empty()) return concat_infeasible(baseline, where + ": empty");
        if (tok[0] == "L") {
            if (tok.size() != 2) return concat_infeasible(baseline, where + ": literal takes one argument");
            const std::string& s = tok[1];
            if (s.empty() || s.size() > static_cast<size_t>(kConcatMaxLiteral))
                return concat_infeasible(baseline, where + ": literal length outside 1..8");
            for (char ch : s)
                if (ch < 'a' || ch > 'z')
                    return concat_infeasible(baseline, where + ": literal has a non-lowercase character");
            if (s.size() > maxlen)
                return concat_infeasible(baseline, where + ": value longer than the longest target");
            values.push_back(s);
            literal_chars += static_cast<long long>(s.size());
        } else if (tok[0] == "C") {
            long long a = 0, b = 0;
            if (tok.size() != 3 || !ref_parse_ll(tok[1], a) || !ref_parse_ll(tok[2], b))
                return concat_infeasible(baseline, where + ": concat takes two integers");
            long long made = static_cast<long long>(values.size());
            if (a < 1 || a > made || b < 1 || b > made)
                return concat_infeasible(baseline, where + ": references a variable not yet created");
            std::string v = values[a - 1] + values[b - 1];
            if (v.size() > maxlen)
                return concat_infeasible(baseline, where + ": value longer than the longest target");
            values.push_back(std::move(v));
        } else {
            return concat_infeasible(baseline, where + ": unknown command " + tok[0]);
        }
    }

    const std::string* rline = next_line();
    if (!rline) return concat_infeasible(baseline, "missing result line");
    auto rtok = ref_tokens(*rline);
    if (rtok.size() != c.targets.size())
        return concat_infeasible(baseline, "result line must list exactly " +
                                               std::to_string(c.targets.size()) + " indices");
    for (size_t i = 0; i < rtok.size(); ++i) {
        long long r = 0;
        if (!ref_parse_ll(rtok[i], r))
            return concat_infeasible(baseline, "result index " + std::to_string(i + 1) + " is not an integer");
        if (r < 1 || r > static_cast<long long>(values.size()))
            return concat_infeasible(baseline, "result index " + std::to_string(i + 1) + " out of range");
        if (values[r - 1] != c.targets[i])
            return concat_infeasible(baseline,
                                     "variable " + std::to_string(r) + " does not equal target " +
                                         std::to_string(i + 1));
    }

    ConcatResult res;
    res.feasible = true;
    res.cost = m + literal_chars;
    res.baseline = baseline;
    res.score = (baseline >= 2 * res.cost)
                    ? 2.0 * kConcatScoreScale
                    : kConcatScoreScale * static_cast<double>(baseline) / static_cast<double>(res.cost);
    return res;
}

}  // namespace detail

/// Checks one program text against one test case. Trailing non-blank content
/// after the result line is rejected.
inline ConcatResult concat_check_and_score(const ConcatCase& c, const std::string& program_text) {
    auto diag = concat_input_diagnostic({c});
    if (!diag.empty()) throw std::runtime_error("input: " + diag);
    auto lines = ref_split_lines(program_text);
    detail::ConcatParseState st{lines, 0};
    auto res = detail::concat_check_one(c, st);
    if (res.feasible) {
        while (st.pos < lines.size() && ref_blank(lines[st.pos])) st.pos++;
        if (st.pos < lines.size())
            return detail::concat_infeasible(res.baseline, "trailing content after the result line");
    }
    return res;
}

struct ConcatFileResult {
    std::vector<ConcatResult> cases;
    double mean_score = 0.0;
    std::string diagnostic;  // first failure, if any
};

/// Scores a multi-case output file: per-case results averaged. A parse
/// failure in case k zeroes case k and everything after it (the stream can
/// no longer be trusted); trailing garbage zeroes the whole file.
inline ConcatFileResult concat_score_file(const std::string& input_text, const std::string& output_text) {
    auto cases = parse_concat_input(input_text);
    auto lines = ref_split_lines(output_text);
    detail::ConcatParseState st{lines, 0};
    ConcatFileResult out;
    bool dead = false;
    for (const auto& c : cases) {
        if (dead) {
            out.cases.push_back(detail::concat_infeasible(concat_baseline(c.targets),
                                                          "unreachable: earlier case failed to parse"));
            continue;
        }
        auto res = detail::concat_check_one(c, st);
        if (!res.feasible) dead = true;
        if (!res.feasible && out.diagnostic.empty())
            out.diagnostic = "case " + std::to_string(out.cases.size() + 1) + ": " + res.diagnostic;
        out.cases.push_back(std::move(res));
    }
    while (st.pos < lines.size() && ref_blank(lines[st.pos])) st.pos++;
    if (!dead && st.pos < lines.size()) {
        out.diagnostic = "trailing content after the last case";
        for (auto& r : out.cases) {
            r.feasible = false;
            r.score = 0.0;
        }
    }
    double sum = 0.0;
    for (const auto& r : out.cases) sum += r.score;
    out.mean_score = sum / static_cast<double>(out.cases.size());
    return out;
}

// ─── Patrol scheduling task ───────────────────────────────────────
// Houses 1..n, house 1 is home. Build roads within a budget, then walk one
// closed patrol per day within that day's time limit. Visiting a house
// clears all of its attacks active that day; damage from uncleared attacks
// should be minimized. Scored against the stay-home baseline.

struct VillageRoad {
    int u = 0, v = 0;
    long long cost = 0, time = 0;
};

struct VillageAttack {
    int house = 0;
    int from_day = 0, to_day = 0;
    long long damage = 0;
};

struct VillageInstance {
    int houses = 0;
    int days = 0;
    long long budget = 0;
    std::vector<VillageRoad> roads;
    std::vector<long long> day_limits;   // size == days
    std::vector<VillageAttack> attacks;
};

struct VillageResult {
    bool feasible = false;
    long long damage = 0;
    long long baseline_damage = 0;
    long long score = 0;  // floor(1e6 * min(10, (baseline+1)/(damage+1))), 0 when infeasible
    std::string diagnostic;
};

inline constexpr long long kVillageScoreScale = 1000000;
inline constexpr long long kVillageScoreCap = 10000000;

/// Loose bounds guard what the scorer relies on structurally; full bounds
/// additionally enforce the published instance box (counts at least 1,
/// magnitude caps). Generated instances must satisfy the full box.
inline std::string village_instance_diagnostic(const VillageInstance& ins, bool full_bounds) {
    if (ins.houses < 2 || ins.houses > 400) return "house count outside 2..400";
    if (ins.roads.size() > 3000) return "more than 3000 roads";
    if (ins.days < 1 || ins.days > 60) return "day count outside 1..60";
    if (ins.attacks.size() > 4000) return "more than 4000 attacks";
    if (ins.day_limits.size() != static_cast<size_t>(ins.days)) return "day-limit count does not match day count";
    if (ins.budget < 0) return "negative budget";
    for (size_t i = 0; i < ins.roads.size(); ++i) {
        const auto& r = ins.roads[i];
        std::string where = "road " + std::to_string(i + 1);
        if (r.u < 1 || r.u > ins.houses || r.v < 1 || r.v > ins.houses)
            return where + ": endpoint outside 1..n";
        if (r.cost < 1 || r.time < 1) return where + ": cost and time must be positive";
        if (full_bounds && (r.cost > 1000000 || r.time > 1000000))
            return where + ": cost or time exceeds 1e6";
    }
    for (size_t i = 0; i < ins.day_limits.size(); ++i) {
        if (ins.day_limits[i] < 0) return "day " + std::to_string(i + 1) + ": negative time limit";
        if (full_bounds && ins.day_limits[i] > 1000000000)
            return "day " + std::to_string(i + 1) + ": time limit exceeds 1e9";
    }
    for (size_t j = 0; j < ins.attacks.size(); ++j) {
        const auto& a = ins.attacks[j];
        std::string where = "attack " + std::to_string(j + 1);
        if (a.house < 1 || a.house > ins.houses) return where + ": house outside 1..n";
        if (a.from_day < 1 || a.to_day < a.from_day) return where + ": invalid active window";
        if (a.damage < 1) return where + ": damage must be positive";
        if (full_bounds && a.damage > 1000000000000LL) return where + ": damage exceeds 1e12";
    }
    if (full_bounds) {
        if (ins.roads.empty()) return "road list is empty";
        if (ins.attacks.empty()) return "attack list is empty";
        if (ins.budget < 1 || ins.budget > 1000000000) return "budget outside 1..1e9";
        for (size_t j = 0; j < ins.attacks.size(); ++j)
            if (ins.attacks[j].to_day > ins.days)
                return "attack " + std::to_string(j + 1) + ": window extends past the last day";
    }
    return "";
}

/// Throws std::runtime_error on malformed input text.
inline VillageInstance parse_village_input(const std::string& text) {
    std::istringstream in(text);
    VillageInstance ins;
    long long m = 0, a = 0;
    if (!(in >> ins.houses >> m >> ins.days >> a >> ins.budget))
        throw std::runtime_error("input: missing header (n m D A B)");
    if (m < 0 || a < 0) throw std::runtime_error("input: negative road or attack count");
    for (long long i = 0; i < m; ++i) {
        VillageRoad r;
        if (!(in >> r.u >> r.v >> r.cost >> r.time))
            throw std::runtime_error("input: road " + std::to_string(i + 1) + " truncated");
        ins.roads.push_back(r);
    }
    for (int t = 0; t < ins.days; ++t) {
        long long lim = 0;
        if (!(in >> lim)) throw std::runtime_error("input: missing time limit for day " + std::to_string(t + 1));
        ins.day_limits.push_back(lim);
    }
    for (long long j = 0; j < a; ++j) {
        VillageAttack atk;
        if (!(in >> atk.house >> atk.from_day >> atk.to_day >> atk.damage))
            throw std::runtime_error("input: attack " + std::to_string(j + 1) + " truncated");
        ins.attacks.push_back(atk);
    }
    std::string rest;
    if (in >> rest) throw std::runtime_error("input: trailing content");
    auto diag = village_instance_diagnostic(ins, false);
    if (!diag.empty()) throw std::runtime_error("input: " + diag);
    return ins;
}

inline long long village_score_from_damage(long long baseline, long long damage) {
    unsigned __int128 num = static_cast<unsigned __int128>(baseline + 1) * kVillageScoreScale;
    unsigned __int128 floored = num / static_cast<unsigned __int128>(damage + 1);
    if (floored >= static_cast<unsigned __int128>(kVillageScoreCap)) return kVillageScoreCap;
    return static_cast<long long>(floored);
}

/// Damage given the set of houses visited on each day (house 1 is implied).
/// Usable directly by property tests; the plan checker funnels into it.
inline long long village_damage(const VillageInstance& ins,
                                const std::vector<std::set<int>>& visited_per_day) {
    long long dmg = 0;
    for (const auto& atk : ins.attacks) {
        bool cleared = false;
        int lo = std::max(atk.from_day, 1);
        int hi = std::min(atk.to_day, ins.days);
        for (int t = lo; t <= hi && !cleared; ++t) {
            if (atk.house == 1) cleared = true;
            else if (t - 1 < static_cast<int>(visited_per_day.size()) &&
                     visited_per_day[t - 1].count(atk.house))
                cleared = true;
        }
        if (!cleared) dmg += atk.damage;
    }
    return dmg;
}

inline long long village_baseline_damage(const VillageInstance& ins) {
    return village_damage(ins, std::vector<std::set<int>>(ins.days));
}

namespace detail {

inline VillageResult village_infeasible(long long baseline, const std::string& why) {
    VillageResult r;
    r.feasible = false;
    r.baseline_damage = baseline;
    r.score = 0;
    r.diagnostic = why;
    return r;
}

}  // namespace detail

/// Plan text: line 1 lists the built road indices (blank or absent builds
/// nothing); lines 2..D+1 give each day's walk as a road-index sequence.
/// Missing day lines mean the patrol stays home; extra non-blank lines are
/// rejected.
inline VillageResult village_check_and_score(const VillageInstance& ins, const std::string& plan_text) {
    {
        auto diag = village_instance_diagnostic(ins, false);
        if (!diag.empty()) throw std::runtime_error("input: " + diag);
    }
    const long long baseline = village_baseline_damage(ins);

    auto lines = ref_split_lines(plan_text);
    auto parse_index_line = [&](const std::string& line, std::vector<long long>& out,
                                const std::string& where) -> std::string {
        for (const auto& tok : ref_tokens(line)) {
            long long v = 0;
            if (!ref_parse_ll(tok, v)) return where + ": token '" + tok + "' is not an integer";
            if (v < 1 || v > static_cast<long long>(ins.roads.size()))
                return where + ": road index " + std::to_string(v) + " out of range";
            out.push_back(v);
        }
        return "";
    };

    std::vector<long long> built_list;
    if (!lines.empty()) {
        auto err = parse_index_line(lines[0], built_list, "build line");
        if (!err.empty()) return detail::village_infeasible(baseline, err);
    }
    std::set<long long> built(built_list.begin(), built_list.end());
    if (built.size() != built_list.size())
        return detail::village_infeasible(baseline, "build line repeats a road index");
    long long total_cost = 0;
    for (long long idx : built) total_cost += ins.roads[idx - 1].cost;
    if (total_cost > ins.budget)
        return detail::village_infeasible(baseline, "build cost " + std::to_string(total_cost) +
                                                        " exceeds budget " + std::to_string(ins.budget));

    for (size_t li = ins.days + 1; li < lines.size(); ++li)
        if (!ref_blank(lines[li]))
            return detail::village_infeasible(baseline,
                                              "line " + std::to_string(li + 1) + ": content past the last day");

    std::vector<std::set<int>> visited(ins.days);
    for (int t = 0; t < ins.days; ++t) {
        std::string where = "day " + std::to_string(t + 1);
        std::vector<long long> walk;
        if (static_cast<size_t>(t + 1) < lines.size()) {
            auto err = parse_index_line(lines[t + 1], walk, where);
            if (!err.empty()) return detail::village_infeasible(baseline, err);
        }
        int cur = 1;
        long long time = 0;
        visited[t].insert(1);
        for (long long idx : walk) {
            if (!built.count(idx))
                return detail::village_infeasible(baseline, where + ": road " + std::to_string(idx) +
                                                                " was not built");
            const auto& r = ins.roads[idx - 1];
            if (r.u == cur) cur = r.v;
            else if (r.v == cur) cur = r.u;
            else
                return detail::village_infeasible(baseline, where + ": road " + std::to_string(idx) +
                                                                " does not touch house " +
                                                                std::to_string(cur));
            time += r.time;
            visited[t].insert(cur);
        }
        if (cur != 1)
            return detail::village_infeasible(baseline, where + ": walk ends at house " + std::to_string(cur));
        if (time > ins.day_limits[t])
            return detail::village_infeasible(baseline, where + ": travel time " + std::to_string(time) +
                                                            " exceeds limit " +
                                                            std::to_string(ins.day_limits[t]));
    }

    VillageResult res;
    res.feasible = true;
    res.baseline_damage = baseline;
    res.damage = village_damage(ins, visited);
    res.score = village_score_from_damage(baseline, res.damage);
    return res;
}

// ─── Instance generators (tiny, deterministic) ────────────────────

inline std::string generate_concat_input(uint64_t seed) {
    RefRng rng(seed * 2654435761ULL + 17);
    int t = 1 + static_cast<int>(rng.below(3));
    std::ostringstream out;
    out << t << "\n";
    const char alphabet[] = {'a', 'b', 'h'};
    for (int ci = 0; ci < t; ++ci) {
        int q = 1 + static_cast<int>(rng.below(4));
        out << q << "\n";
        for (int i = 0; i < q; ++i) {
            int len = 1 + static_cast<int>(rng.below(12));
            std::string s;
            for (int j = 0; j < len; ++j) s += alphabet[rng.below(3)];
            out << s << "\n";
        }
    }
    return out.str();
}

inline std::string generate_village_input(uint64_t seed) {
    RefRng rng(seed * 0x9e3779b9ULL + 101);
    int n = 2 + static_cast<int>(rng.below(6));
    int extra = static_cast<int>(rng.below(4));
    int days = 1 + static_cast<int>(rng.below(3));
    int attacks = 1 + static_cast<int>(rng.below(5));
    long long budget = 1 + static_cast<long long>(rng.below(12));
    std::ostringstream out;
    std::vector<VillageRoad> roads;
    for (int i = 2; i <= n; ++i) {
        VillageRoad r;
        r.u = 1 + static_cast<int>(rng.below(i - 1));
        r.v = i;
        r.cost = 1 + static_cast<long long>(rng.below(6));
        r.time = 1 + static_cast<long long>(rng.below(6));
        roads.push_back(r);
    }
    for (int i = 0; i < extra; ++i) {
        VillageRoad r;
        r.u = 1 + static_cast<int>(rng.below(n));
        r.v = 1 + static_cast<int>(rng.below(n));
        r.cost = 1 + static_cast<long long>(rng.below(6));
        r.time = 1 + static_cast<long long>(rng.below(6));
        roads.push_back(r);
    }
    out << n << " " << roads.size() << " " << days << " " << attacks << " " << budget << "\n";
    for (const auto& r : roads) out << r.u << " " << r.v << " " << r.cost << " " << r.time << "\n";
    for (int t = 0; t < days; ++t) out << rng.below(20) << (t + 1 < days ? " " : "\n");
    for (int j = 0; j < attacks; ++j) {
        int a = 1 + static_cast<int>(rng.below(days));
        int b = a + static_cast<int>(rng.below(days - a + 1));
        out << 1 + rng.below(n) << " " << a << " " << b << " " << 1 + rng.below(9) << "\n";
    }
    return out.str();
}

// ─── Worked examples and bundled weak solutions ───────────────────

inline std::string concat_worked_input() { return "1\n3\nhaha\nahaha\nhahahaha\n"; }

inline std::string concat_worked_program() {
    return "5\nL ha\nL a\nC 1 1\nC 2 3\nC 3 3\n3 4 5\n";
}

inline std::string village_worked_input() {
    return "4 4 3 4 4\n"
           "1 2 2 1\n"
           "2 3 2 1\n"
           "3 4 5 1\n"
           "1 4 10 5\n"
           "2 4 0\n"
           "2 1 1 5\n"
           "3 2 2 8\n"
           "1 3 3 4\n"
           "4 1 3 6\n";
}

inline std::string village_worked_plan() { return "1 2\n1 1\n1 2 2 1\n\n"; }

/// Block-splitting construction: builds every target from fresh literals of
/// length at most 8 with left-fold concats. Its cost equals the baseline by
/// construction, so it always scores 1e6.
inline std::string concat_baseline_program(const ConcatCase& c) {
    std::ostringstream cmds;
    long long m = 0;
    std::vector<long long> result;
    for (const auto& t : c.targets) {
        std::vector<long long> parts;
        for (size_t off = 0; off < t.size(); off += kConcatMaxLiteral) {
            cmds << "L " << t.substr(off, kConcatMaxLiteral) << "\n";
            parts.push_back(++m);
        }
        long long acc = parts[0];
        for (size_t i = 1; i < parts.size(); ++i) {
            cmds << "C " << acc << " " << parts[i] << "\n";
            acc = ++m;
        }
        result.push_back(acc);
    }
    std::ostringstream out;
    out << m << "\n" << cmds.str();
    for (size_t i = 0; i < result.size(); ++i) out << result[i] << (i + 1 < result.size() ? " " : "\n");
    return out.str();
}

/// Literal-caching construction: identical literals and whole targets are
/// reused across the case, beating the baseline on repetitive target sets.
inline std::string concat_greedy_program(const ConcatCase& c) {
    std::ostringstream cmds;
    long long m = 0;
    std::vector<std::pair<std::string, long long>> cache;  // value -> variable
    auto lookup = [&](const std::string& v) -> long long {
        for (const auto& [val, idx] : cache)
            if (val == v) return idx;
        return 0;
    };
    std::vector<long long> result;
    for (const auto& t : c.targets) {
        long long whole = lookup(t);
        if (whole) {
            result.push_back(whole);
            continue;
        }
        std::vector<std::string> blocks;
        for (size_t off = 0; off < t.size(); off += kConcatMaxLiteral)
            blocks.push_back(t.substr(off, kConcatMaxLiteral));
        long long acc = 0;
        std::string acc_val;
        for (const auto& b : blocks) {
            long long var = lookup(b);
            if (!var) {
                cmds << "L " << b << "\n";
                var = ++m;
                cache.emplace_back(b, var);
            }
            if (!acc) {
                acc = var;
                acc_val = b;
            } else {
                cmds << "C " << acc << " " << var << "\n";
                acc = ++m;
                acc_val += b;
                cache.emplace_back(acc_val, acc);
            }
        }
        result.push_back(acc);
    }
    std::ostringstream out;
    out << m << "\n" << cmds.str();
    for (size_t i = 0; i < result.size(); ++i) out << result[i] << (i + 1 < result.size() ? " " : "\n");
    return out.str();
}

inline std::string concat_baseline_output(const std::vector<ConcatCase>& cases) {
    std::string out;
    for (const auto& c : cases) out += concat_baseline_program(c);
    return out;
}

inline std::string concat_greedy_output(const std::vector<ConcatCase>& cases) {
    std::string out;
    for (const auto& c : cases) out += concat_greedy_program(c);
    return out;
}

/// The stay-home plan: build nothing, walk nowhere. Feasible everywhere and
/// scores exactly 1e6 by definition of the baseline.
inline std::string village_stay_home_plan() { return ""; }

/// Cheap-roads-first build plus one out-and-back errand per day toward the
/// house with the largest clearable damage. Deliberately moderate.
inline std::string village_greedy_plan(const VillageInstance& ins) {
    const int n = ins.houses;
    std::vector<std::vector<std::pair<int, int>>> adj(n + 1);  // house -> (road idx, other)

    std::vector<size_t> order(ins.roads.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (ins.roads[a].cost != ins.roads[b].cost) return ins.roads[a].cost < ins.roads[b].cost;
        return a < b;
    });
    std::vector<int> comp(n + 1);
    for (int i = 1; i <= n; ++i) comp[i] = i;
    std::vector<long long> built;
    long long spent = 0;
    // Kruskal-style: cheapest roads that connect something new, within budget.
    std::function<int(int)> find = [&](int x) { return comp[x] == x ? x : comp[x] = find(comp[x]); };
    for (size_t i : order) {
        const auto& r = ins.roads[i];
        if (find(r.u) == find(r.v)) continue;
        if (spent + r.cost > ins.budget) continue;
        comp[find(r.u)] = find(r.v);
        spent += r.cost;
        built.push_back(static_cast<long long>(i + 1));
        adj[r.u].push_back({static_cast<int>(i + 1), r.v});
        adj[r.v].push_back({static_cast<int>(i + 1), r.u});
    }
    std::sort(built.begin(), built.end());

    std::ostringstream out;
    for (size_t i = 0; i < built.size(); ++i) out << built[i] << (i + 1 < built.size() ? " " : "");
    out << "\n";

    std::vector<bool> cleared(ins.attacks.size(), false);
    for (int t = 1; t <= ins.days; ++t) {
        // Shortest times from home over built roads, remembering the road used.
        const long long inf = -1;
        std::vector<long long> dist(n + 1, inf);
        std::vector<std::pair<int, int>> parent(n + 1, {0, 0});  // (road idx, prev house)
        using Item = std::pair<long long, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
        dist[1] = 0;
        pq.push({0, 1});
        while (!pq.empty()) {
            auto [d, h] = pq.top();
            pq.pop();
            if (dist[h] != d) continue;
            for (auto [ridx, other] : adj[h]) {
                long long nd = d + ins.roads[ridx - 1].time;
                if (dist[other] == inf || nd < dist[other]) {
                    dist[other] = nd;
                    parent[other] = {ridx, h};
                    pq.push({nd, other});
                }
            }
        }
        long long best_gain = 0;
        int best_house = 0;
        for (int h = 2; h <= n; ++h) {
            if (dist[h] == inf || 2 * dist[h] > ins.day_limits[t - 1]) continue;
            long long gain = 0;
            for (size_t j = 0; j < ins.attacks.size(); ++j) {
                const auto& a = ins.attacks[j];
                if (!cleared[j] && a.house == h && a.from_day <= t && t <= a.to_day) gain += a.damage;
            }
            if (gain > best_gain) {
                best_gain = gain;
                best_house = h;
            }
        }
        std::set<int> seen{1};
        if (best_house) {
            std::vector<int> path;  // road indices home -> target
            for (int h = best_house; h != 1; h = parent[h].second) path.push_back(parent[h].first);
            std::reverse(path.begin(), path.end());
            int cur = 1;
            for (size_t i = 0; i < path.size(); ++i) {
                const auto& r = ins.roads[path[i] - 1];
                cur = (r.u == cur) ? r.v : r.u;
                seen.insert(cur);
                out << path[i] << " ";
            }
            for (size_t i = path.size(); i-- > 0;) out << path[i] << (i ? " " : "");
        }
        out << "\n";
        for (size_t j = 0; j < ins.attacks.size(); ++j) {
            const auto& a = ins.attacks[j];
            if (!cleared[j] && seen.count(a.house) && a.from_day <= t && t <= a.to_day) cleared[j] = true;
        }
    }
    return out.str();
}

}  // namespace forgeref
