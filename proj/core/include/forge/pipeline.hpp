// Round orchestration: sample the pool, mutate, screen, rank by judged
// divergence, validate infrastructure, re-rank by executed divergence, and
// grow the pool. Every stage boundary writes a checkpoint so an interrupted
// run resumes without re-spending model calls.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/bundle.hpp"
#include "forge/divergence.hpp"
#include "forge/mutation.hpp"
#include "forge/pool.hpp"
#include "forge/verifier.hpp"

namespace forge {

// ─── Configuration ────────────────────────────────────────────────

struct PipelineConfig {
    int pool_sample = 1000;            // problems drawn from the pool per round
    int solutions_per_candidate = 10;  // independent solutions sampled per candidate
    int divergence_keep = 100;         // survivors of the judged ranking
    int final_keep = 50;               // survivors of the executed ranking
    int rounds = 4;
    int judge_group_size = 10;         // pairs per judge request
    double classifier_threshold = 0.25;
    // When the validated set falls short of final_keep, promote candidates
    // ranked below the divergence cutoff into validation until it is met.
    bool replenish = false;
    int workers = 4;
    uint64_t seed = 0;
    GatewayMode gateway_mode = GatewayMode::Live;
    CrossValidateConfig cross_validation;

    void validate() const;
};

void to_json(nlohmann::json& j, const PipelineConfig& c);
void from_json(const nlohmann::json& j, PipelineConfig& c);

PipelineConfig load_pipeline_config(const std::filesystem::path& path);

// ─── Round accounting ─────────────────────────────────────────────

// Candidates created in a round must land in exactly one bucket at every
// stage boundary; check_conserved() rejects any leak.
struct StageCounts {
    int sampled = 0;
    int mutation_failed = 0;
    int mutated = 0;
    int coarse_rejected = 0;
    int coarse_accepted = 0;
    int sampling_failed = 0;
    int sampling_ok = 0;
    int divergence_dropped = 0;
    int divergence_kept = 0;
    int validation_failed = 0;
    int infrastructure = 0;
    int validated = 0;
    int final_dropped = 0;
    int final_kept = 0;

    void check_conserved() const;
};

void to_json(nlohmann::json& j, const StageCounts& c);
void from_json(const nlohmann::json& j, StageCounts& c);

struct CandidateOutcome {
    std::string id;
    std::string parent_id;
    Stage stage = Stage::Mutated;
    DiscardReason discard_reason = DiscardReason::None;
    std::optional<double> llm_divergence;
    std::optional<double> exec_divergence;
    // Informational verdict of the threshold classifier on the judged
    // estimate; selection itself is purely rank-based.
    bool classified_open = false;
    int validation_rounds = 0;
};

struct RoundReport {
    int round = 0;
    int pool_before = 0;
    int pool_after = 0;
    StageCounts counts;
    std::vector<std::string> sampled_parents;          // in draw order
    std::vector<std::string> mutation_failed_parents;  // subset of the above
    std::vector<CandidateOutcome> candidates;          // sorted by id
    Usage usage;                                       // model tokens spent this round
    long long gateway_calls = 0;
    double wall_seconds = 0.0;  // console-only; canonical_report omits it

    /// Fraction of validation attempts that converged.
    double validation_yield() const;
};

/// Deterministic serialization: stable key order, wall time excluded, so
/// replayed runs produce byte-identical report files.
nlohmann::json canonical_report(const RoundReport& report);
RoundReport report_from_json(const nlohmann::json& j);

// ─── Runner ───────────────────────────────────────────────────────
// Run directory layout:
//   config.json            frozen configuration; later invocations must match
//   state.json             {"roundsCompleted": k}
//   pool/                  working pool, rewritten at each round end
//   bundles/<id>/          problem bundle per validated candidate
//   rounds/round_%03d/     report.json plus checkpoint.json while in flight

class PipelineRunner {
public:
    /// Record mode refuses a directory with prior progress: a transcript is
    /// rewritten from scratch and a partial one would be unreplayable.
    PipelineRunner(std::filesystem::path run_dir, PipelineConfig config, Gateway& gateway,
                   Sandbox& sandbox, const TemplateSet& templates);

    /// Installs the starting pool. Rejected once a pool exists.
    void adopt_pool(const SeedPool& initial);
    bool has_pool() const;
    SeedPool current_pool() const;

    int rounds_completed() const;

    /// Executes the next round, resuming from its checkpoint when one
    /// exists. Throws when all configured rounds are already complete.
    RoundReport run_round();

    /// Runs every remaining round; returns the reports produced now.
    std::vector<RoundReport> run_remaining();

    RoundReport load_report(int round) const;

    const std::filesystem::path& run_dir() const { return run_dir_; }
    std::filesystem::path bundles_dir() const { return run_dir_ / "bundles"; }

private:
    struct RoundState;

    std::filesystem::path round_dir(int round) const;
    std::filesystem::path pool_dir() const { return run_dir_ / "pool"; }
    void write_state(int rounds_completed);

    RoundState load_or_init_state(int round);
    void save_checkpoint(const RoundState& st);

    void stage_sample(RoundState& st, const SeedPool& pool);
    void stage_mutate(RoundState& st);
    void stage_screen(RoundState& st);
    void stage_solve(RoundState& st);
    void stage_rank(RoundState& st);
    void stage_validate(RoundState& st);
    RoundReport finalize_round(RoundState& st, SeedPool& pool);

    std::filesystem::path run_dir_;
    PipelineConfig config_;
    Gateway& gateway_;
    Sandbox& sandbox_;
    const TemplateSet& templates_;
};

// ─── Export ───────────────────────────────────────────────────────

struct ExportResult {
    int exported = 0;
    std::filesystem::path manifest_path;
};

/// Copies the bundle of every Final pool entry into out_dir/problems/<id>
/// and writes a manifest index. A Final candidate without a bundle on disk
/// is an integrity error naming the id. Re-export is byte-identical.
ExportResult export_problems(const SeedPool& pool, const std::filesystem::path& bundles_root,
                             const std::filesystem::path& out_dir);

}  // namespace forge
