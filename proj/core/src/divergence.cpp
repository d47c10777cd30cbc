#include "forge/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace forge {

// ─── Sampling ─────────────────────────────────────────────────────

SamplingOutcome sample_solutions(Gateway& gateway, const TemplateSet& templates,
                                 const ProblemCandidate& candidate, int n) {
    if (n < 2) throw ValidationError("solution sampling needs n >= 2");

    // One fixed request repeated n times: repeat variation comes from the
    // provider (temperature live, response queues in replay).
    ChatRequest request;
    request.purpose = Purpose::Solve;
    request.decoding.temperature = 0.9;
    request.messages = {{"user", templates.render("solve", {{"statement", candidate.statement}})}};

    SamplingOutcome outcome;
    for (int ordinal = 0; ordinal < n; ++ordinal) {
        std::string reply;
        try {
            reply = gateway.complete(request).text;
        } catch (const ProviderError& e) {
            log_warn("solution draw " + std::to_string(ordinal) + " for " + candidate.id +
                     " failed: " + e.what());
            outcome.failed_ordinals.push_back(ordinal);
            continue;
        }
        try {
            CodeBlock block = parse_code_block(reply);
            outcome.solutions.push_back({ordinal, block.body, block.toolchain});
        } catch (const ValidationError& e) {
            log_warn("solution draw " + std::to_string(ordinal) + " for " + candidate.id +
                     " unusable: " + e.what());
            outcome.failed_ordinals.push_back(ordinal);
        }
    }
    return outcome;
}

// ─── PairMatrix ───────────────────────────────────────────────────

PairMatrix::PairMatrix(int k) : k_(k) {
    if (k < 2) throw ValidationError("pairwise judgment needs at least 2 solutions");
    different_.assign(static_cast<size_t>(pair_count()), 0);
}

int PairMatrix::index(int i, int j) const {
    if (i > j) std::swap(i, j);
    if (i < 0 || j >= k_ || i == j) throw ValidationError("pair index out of range");
    // Position of (i, j) in lexicographic pair order.
    return i * k_ - i * (i + 1) / 2 + (j - i - 1);
}

void PairMatrix::set_different(int i, int j, bool different) {
    different_[static_cast<size_t>(index(i, j))] = different ? 1 : 0;
}

bool PairMatrix::different(int i, int j) const {
    return different_[static_cast<size_t>(index(i, j))] != 0;
}

double PairMatrix::divergence() const {
    int distinct = 0;
    for (char d : different_) distinct += d;
    return static_cast<double>(distinct) / static_cast<double>(pair_count());
}

// ─── StrategyJudge ────────────────────────────────────────────────

StrategyJudge::StrategyJudge(Gateway& gateway, const TemplateSet& templates, int group_size)
    : gateway_(gateway), templates_(templates), group_size_(group_size) {
    if (group_size_ < 1) throw ConfigError("judge group size must be >= 1");
}

namespace {

struct PairRef {
    int global_index;  // 1-based across all pairs of the candidate
    int a, b;          // solution positions
};

std::string render_pairs(const std::vector<PairRef>& batch,
                         const std::vector<SolutionSample>& solutions) {
    std::ostringstream out;
    for (const auto& p : batch) {
        out << "<pair index=\"" << p.global_index << "\">\n";
        out << "<a>\n" << solutions[static_cast<size_t>(p.a)].source << "\n</a>\n";
        out << "<b>\n" << solutions[static_cast<size_t>(p.b)].source << "\n</b>\n";
        out << "</pair>\n";
    }
    return out.str();
}

/// Verdict lines look like "pair 7: different". Unknown indexes and
/// malformed lines are ignored; the caller tracks what stays unanswered.
void absorb_verdicts(const std::string& reply, std::map<int, bool>& verdicts) {
    for (const auto& raw : split_lines(reply)) {
        std::string line = trim(raw);
        if (!contains_ci(line.substr(0, 4), "pair")) continue;
        size_t colon = line.find(':');
        if (colon == std::string::npos) continue;
        int idx;
        try {
            idx = std::stoi(trim(line.substr(4, colon - 4)));
        } catch (const std::exception&) {
            continue;
        }
        std::string value = trim(line.substr(colon + 1));
        if (contains_ci(value.substr(0, 9), "different"))
            verdicts[idx] = true;
        else if (contains_ci(value.substr(0, 4), "same"))
            verdicts[idx] = false;
    }
}

}  // namespace

PairMatrix StrategyJudge::judge(const ProblemCandidate& candidate,
                                const std::vector<SolutionSample>& solutions) {
    int k = static_cast<int>(solutions.size());
    PairMatrix matrix(k);

    std::vector<PairRef> pairs;
    pairs.reserve(static_cast<size_t>(matrix.pair_count()));
    int next = 1;
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j) pairs.push_back({next++, i, j});

    for (size_t start = 0; start < pairs.size(); start += static_cast<size_t>(group_size_)) {
        size_t end = std::min(pairs.size(), start + static_cast<size_t>(group_size_));
        std::vector<PairRef> batch(pairs.begin() + static_cast<long>(start),
                                   pairs.begin() + static_cast<long>(end));

        ChatRequest request;
        request.purpose = Purpose::Judge;
        request.messages = {{"user", templates_.render("judge_pairs",
                                                       {{"statement", candidate.statement},
                                                        {"pairs", render_pairs(batch, solutions)}})}};

        std::map<int, bool> verdicts;
        std::string reply = gateway_.complete(request).text;
        absorb_verdicts(reply, verdicts);

        auto unanswered = [&]() {
            std::vector<PairRef> missing;
            for (const auto& p : batch)
                if (!verdicts.count(p.global_index)) missing.push_back(p);
            return missing;
        };

        std::vector<PairRef> missing = unanswered();
        if (!missing.empty()) {
            // One corrective round for the batch, then unanswered pairs
            // count as same so silence cannot inflate divergence.
            std::ostringstream note;
            note << "Some pairs were not answered in the required format. Reply again with one "
                    "line per pair, exactly \"pair <index>: same\" or \"pair <index>: "
                    "different\", for these indexes:";
            for (const auto& p : missing) note << " " << p.global_index;
            ChatRequest retry = request;
            retry.messages.push_back({"assistant", reply});
            retry.messages.push_back({"user", note.str()});
            absorb_verdicts(gateway_.complete(retry).text, verdicts);
            for (const auto& p : unanswered()) {
                log_warn("pair " + std::to_string(p.global_index) + " of candidate " +
                         candidate.id + " never judged; counting as same");
                verdicts[p.global_index] = false;
            }
        }

        for (const auto& p : batch) matrix.set_different(p.a, p.b, verdicts.at(p.global_index));
    }
    return matrix;
}

// ─── Execution-grounded divergence ────────────────────────────────

double exec_divergence(const std::vector<std::vector<double>>& score_vectors) {
    size_t k = score_vectors.size();
    if (k < 2) throw ValidationError("execution divergence needs at least 2 score vectors");
    size_t m = score_vectors.front().size();
    if (m == 0) throw ValidationError("score vectors must not be empty");
    for (size_t i = 0; i < k; ++i) {
        if (score_vectors[i].size() != m)
            throw ValidationError("score vector " + std::to_string(i) + " has length " +
                                  std::to_string(score_vectors[i].size()) + ", expected " +
                                  std::to_string(m) + " (as vector 0)");
        for (double v : score_vectors[i])
            if (!(v >= 0.0 && v <= 1.0))
                throw ValidationError("score vector " + std::to_string(i) +
                                      " holds a value outside [0, 1]");
    }

    double total = 0.0;
    size_t pairs = 0;
    for (size_t i = 0; i < k; ++i) {
        for (size_t j = i + 1; j < k; ++j) {
            double sq = 0.0;
            for (size_t t = 0; t < m; ++t) {
                double d = score_vectors[i][t] - score_vectors[j][t];
                sq += d * d;
            }
            total += std::sqrt(sq / static_cast<double>(m));
            ++pairs;
        }
    }
    return total / static_cast<double>(pairs);
}

// ─── Ranking and classification ───────────────────────────────────

std::vector<std::string> rank_top(std::vector<std::pair<std::string, double>> scored, int n) {
    if (n <= 0) throw ValidationError("rank_top needs n >= 1");
    if (n > static_cast<int>(scored.size())) {
        log_warn("asked for top " + std::to_string(n) + " of " + std::to_string(scored.size()) +
                 " candidates; returning all");
        n = static_cast<int>(scored.size());
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::vector<std::string> ids;
    ids.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) ids.push_back(scored[static_cast<size_t>(i)].first);
    return ids;
}

bool classify_open_ended(double divergence, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0))
        throw ConfigError("divergence threshold must lie strictly between 0 and 1");
    return divergence >= threshold;
}

void to_json(nlohmann::json& j, const SolutionSample& s) {
    j = nlohmann::json{{"ordinal", s.ordinal}, {"source", s.source}, {"toolchain", s.toolchain}};
}

void from_json(const nlohmann::json& j, SolutionSample& s) {
    s.ordinal = j.at("ordinal").get<int>();
    s.source = j.at("source").get<std::string>();
    s.toolchain = j.at("toolchain").get<std::string>();
}

void to_json(nlohmann::json& j, const SamplingOutcome& o) {
    j = nlohmann::json{{"solutions", o.solutions}, {"failedOrdinals", o.failed_ordinals}};
}

void from_json(const nlohmann::json& j, SamplingOutcome& o) {
    o.solutions = j.at("solutions").get<std::vector<SolutionSample>>();
    o.failed_ordinals = j.at("failedOrdinals").get<std::vector<int>>();
}

}  // namespace forge
