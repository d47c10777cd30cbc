// Idea-divergence estimation. A candidate problem is worth keeping when
// independently drawn solutions disagree: first judged pairwise by a model
// over the solution texts, later measured from execution score vectors.

#pragma once

#include <utility>
#include <vector>

#include <json.hpp>

#include "forge/gateway.hpp"
#include "forge/problem.hpp"
#include "forge/templates.hpp"

namespace forge {

struct SolutionSample {
    int ordinal = 0;        // position in the sampling sequence, 0-based
    std::string source;     // program text
    std::string toolchain;  // fence tag, e.g. "python"
};

struct SamplingOutcome {
    std::vector<SolutionSample> solutions;  // successful draws, ordinal ascending
    std::vector<int> failed_ordinals;       // draws with no usable program

    // A candidate stays alive while at most half of the draws failed.
    bool acceptable(int requested) const {
        return static_cast<int>(failed_ordinals.size()) * 2 <= requested;
    }
};

/// Draws `n` solutions for the candidate, one request per ordinal, strictly
/// in sequence. Provider exhaustion or an unusable reply marks that ordinal
/// failed; replay misses always propagate. n must be >= 2.
SamplingOutcome sample_solutions(Gateway& gateway, const TemplateSet& templates,
                                 const ProblemCandidate& candidate, int n);

// Lossless round-trip, used by round checkpoints.
void to_json(nlohmann::json& j, const SolutionSample& s);
void from_json(const nlohmann::json& j, SolutionSample& s);
void to_json(nlohmann::json& j, const SamplingOutcome& o);
void from_json(const nlohmann::json& j, SamplingOutcome& o);

// ─── Pairwise strategy judgments ──────────────────────────────────

/// Symmetric k-by-k matrix of "materially different strategy" verdicts.
class PairMatrix {
public:
    explicit PairMatrix(int k);

    int size() const { return k_; }
    int pair_count() const { return k_ * (k_ - 1) / 2; }

    void set_different(int i, int j, bool different);
    bool different(int i, int j) const;

    /// Fraction of pairs judged materially different, in [0, 1].
    double divergence() const;

private:
    int index(int i, int j) const;
    int k_;
    std::vector<char> different_;
};

class StrategyJudge {
public:
    // group_size bounds how many pairs ride in one request. Batch layout
    // must not affect the verdicts, only the request count.
    StrategyJudge(Gateway& gateway, const TemplateSet& templates, int group_size = 10);

    /// Judges every unordered pair of solutions. Pairs the model never
    /// answers for, even after one corrective re-ask per batch, default to
    /// "same": missing evidence must not inflate divergence.
    PairMatrix judge(const ProblemCandidate& candidate,
                     const std::vector<SolutionSample>& solutions);

private:
    Gateway& gateway_;
    const TemplateSet& templates_;
    int group_size_;
};

// ─── Execution-grounded divergence ────────────────────────────────

/// Mean over solution pairs of the root-mean-square gap between their
/// per-input score vectors. Scores must lie in [0, 1] and all vectors must
/// share one length, so the result lands in [0, 1]. Needs >= 2 vectors.
double exec_divergence(const std::vector<std::vector<double>>& score_vectors);

// ─── Ranking and classification ───────────────────────────────────

/// Ids of the top `n` entries by score, descending; ties break toward the
/// smaller id. Asking for more than available returns everything (with a
/// warning); n <= 0 is an error.
std::vector<std::string> rank_top(std::vector<std::pair<std::string, double>> scored, int n);

/// True when divergence clears the acceptance threshold (inclusive).
/// The threshold must lie strictly between 0 and 1.
bool classify_open_ended(double divergence, double threshold = 0.25);

}  // namespace forge
