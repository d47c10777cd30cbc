// Statement rewriting stage: extract a problem's formulation, rewrite it
// into an open-ended variant, and screen the result with three quick checks.

#pragma once

#include <vector>

#include "forge/gateway.hpp"
#include "forge/problem.hpp"
#include "forge/templates.hpp"

namespace forge {

/// Uniform draw over the seven non-empty subsets of the three rewrite moves.
/// The result is sorted in enum order and duplicate-free.
std::vector<MutationKind> sample_kind_subset(Rng& rng);

std::string describe_kinds(const std::vector<MutationKind>& kinds);

struct CoarseVerdict {
    bool open_objective = false;
    bool multiple_strategies = false;
    bool scorable = false;
    std::string reply;  // raw model text, kept for run reports

    bool pass() const { return open_objective && multiple_strategies && scorable; }
};

class Mutator {
public:
    // `reasks` bounds how often an unparseable reply is sent back for a
    // corrected answer before the call gives up.
    Mutator(Gateway& gateway, const TemplateSet& templates, int reasks = 2);

    Formulation extract_formulation(const std::string& statement);

    /// Rewrites `parent` applying exactly `kinds`. The result sits at the
    /// Mutated stage with lineage {parent.id, kinds, round} and a fresh
    /// content-addressed id. Throws ValidationError when the model cannot
    /// produce a well-formed rewrite within the re-ask budget.
    ProblemCandidate mutate(const ProblemCandidate& parent,
                            const std::vector<MutationKind>& kinds, int round);

    /// Three-question screen. Unparseable answers beyond the re-ask budget
    /// become a rejection (all answers no), never an error: the filter is
    /// deliberately conservative.
    CoarseVerdict coarse_filter(const ProblemCandidate& candidate);

private:
    Gateway& gateway_;
    const TemplateSet& templates_;
    int reasks_;
};

}  // namespace forge
