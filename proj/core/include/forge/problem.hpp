#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/common.hpp"

namespace forge {

// ─── Formulation ──────────────────────────────────────────────────
// The (objective, input domain, output constraints) triple every
// candidate carries. Mutations rewrite one or more of its components.

enum class Direction { Maximize, Minimize, None };

std::string to_string(Direction d);
Direction direction_from_string(const std::string& s);

struct Formulation {
    std::string objective;
    Direction direction = Direction::None;
    std::string input_domain;
    std::string output_constraints;

    /// Throws ValidationError when a field is empty or the direction is
    /// None on a non-seed candidate. Mutated candidates must carry an
    /// optimization direction; only closed-ended seeds may carry None.
    void validate(bool is_seed) const;
};

// ─── Mutation kinds and lineage ───────────────────────────────────

enum class MutationKind { ChangeGoal, RestrictOutputs, GeneralizeInputs };

std::string to_string(MutationKind k);
MutationKind mutation_kind_from_string(const std::string& s);

struct Lineage {
    std::string seed_id;                // empty for corpus seeds
    std::vector<MutationKind> kinds;    // non-empty, no duplicates (non-seeds)
    int round = 0;                      // synthesis round that produced this candidate

    void validate(bool is_seed) const;
    std::string describe() const;
};

// ─── Stages ───────────────────────────────────────────────────────
// Monotone along the pipeline; Discarded is terminal.

enum class Stage { Seed, Mutated, CoarseAccepted, DivergenceRanked, InfraValidated, Final, Discarded };

enum class DiscardReason { None, Coarse, Sampling, DivergenceRank, CrossValidation, Infrastructure, FinalRank };

std::string to_string(Stage s);
Stage stage_from_string(const std::string& s);
std::string to_string(DiscardReason r);
DiscardReason discard_reason_from_string(const std::string& s);

/// Position of a non-discarded stage in the pipeline order.
int stage_rank(Stage s);

// ─── ProblemCandidate ─────────────────────────────────────────────

struct ProblemCandidate {
    std::string id;
    std::string statement;
    Formulation formulation;
    Lineage lineage;
    Stage stage = Stage::Seed;
    DiscardReason discard_reason = DiscardReason::None;
    std::optional<double> llm_divergence;   // set once stage reaches DivergenceRanked
    std::optional<double> exec_divergence;  // set once stage reaches InfraValidated

    bool is_seed() const { return stage == Stage::Seed && lineage.seed_id.empty(); }
    bool discarded() const { return stage == Stage::Discarded; }

    /// Moves to `next`. Throws ValidationError on a stage regression or on
    /// any transition out of Discarded.
    void advance(Stage next);
    void discard(DiscardReason reason);

    void set_llm_divergence(double d);
    void set_exec_divergence(double d);

    /// Full record check: formulation, lineage, stage/score consistency.
    void validate() const;
};

/// Content-addressed id: stable hash of the statement plus lineage, so a
/// replayed run reproduces ids exactly and collisions are detectable.
std::string candidate_id(const std::string& statement, const Lineage& lineage);

/// Builds a stage-Seed candidate. When `id` is empty a content hash is used.
ProblemCandidate make_seed(std::string id, std::string statement, Formulation formulation = {});

// JSON round-trip (lossless; used by the pool index, reports and bundles).
void to_json(nlohmann::json& j, const Formulation& f);
void from_json(const nlohmann::json& j, Formulation& f);
void to_json(nlohmann::json& j, const Lineage& l);
void from_json(const nlohmann::json& j, Lineage& l);
void to_json(nlohmann::json& j, const ProblemCandidate& c);
void from_json(const nlohmann::json& j, ProblemCandidate& c);

}  // namespace forge
