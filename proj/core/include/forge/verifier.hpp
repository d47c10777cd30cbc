// Test and verifier synthesis with cross-validation. Two model-driven
// agents produce a test generator and a scoring program; the harness runs
// sampled solutions against both and lets each artifact's failures indict
// the right party until the pair converges or the round budget ends.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "forge/divergence.hpp"
#include "forge/gateway.hpp"
#include "forge/problem.hpp"
#include "forge/sandbox.hpp"
#include "forge/suite.hpp"
#include "forge/templates.hpp"

namespace forge {

// ─── Verifier program ─────────────────────────────────────────────

enum class VerifierMode {
    Objective,   // scorer prints a raw objective; quality is relative to a baseline
    DirectScore  // scorer prints the final quality in [0, 1] itself
};

std::string to_string(VerifierMode m);
VerifierMode verifier_mode_from_string(const std::string& s);

struct GuestProgram {
    std::string toolchain;
    std::string source;
};

// Scorer protocol: argv[1] input path, argv[2] submission path; print one
// number; exit 0 scored, 1 submission rejected, 2 input malformed. Any
// other behavior is the scorer's own fault.
struct VerifierProgram {
    VerifierMode mode = VerifierMode::Objective;
    GuestProgram scorer;
    std::optional<GuestProgram> baseline;  // required in objective mode

    void validate() const;
};

// ─── Baseline-relative scoring ────────────────────────────────────

/// Fractional improvement of `objective` over `baseline`, oriented by the
/// optimization direction and clamped at zero. Both values must be
/// positive; the result lands in [0, 1). Equal inputs score zero.
double baseline_normalized_score(double objective, double baseline, Direction direction);

/// Shift that makes every observed objective positive before normalizing:
/// 1 - min(0, smallest observed objective). Always >= 1; recorded alongside
/// results so scores stay reproducible.
double positivity_offset(double min_observed_objective);

/// Applies the offset with a tiny floor guarding against exact zeros.
double offset_adjust(double value, double offset);

// ─── Raw scoring table ────────────────────────────────────────────

enum class CellKind {
    Scored,          // scorer produced an objective for this run
    SolutionFailed,  // the solution itself did not run clean
    Rejected,        // scorer exit 1: submission violates the rules
    InputFlagged,    // scorer exit 2: the input itself is malformed
    VerifierFault    // scorer crashed, timed out, or spoke garbage
};

std::string to_string(CellKind k);

struct ScoreCell {
    CellKind kind = CellKind::SolutionFailed;
    double objective = 0.0;  // meaningful only when kind == Scored
    ExecStatus solution_status = ExecStatus::Ok;
    std::string note;
};

struct ScoringOutcome {
    // Rows follow the solution order, columns the suite order.
    std::vector<std::vector<ScoreCell>> cells;
    std::vector<ScoreCell> baseline_cells;  // objective mode only
    double offset = 0.0;
    // Final [0,1] entries after the zero-score rule and normalization.
    std::vector<std::vector<double>> normalized;

    std::vector<double> per_solution_means() const;
    int verifier_fault_count() const;
};

/// Runs every solution over the suite and scores each run. Solutions that
/// fail score zero on that input; scorer misbehavior is charged to the
/// verifier, never to the solution.
ScoringOutcome score_solutions(Sandbox& sandbox, const VerifierProgram& verifier,
                               const TestSuite& suite,
                               const std::vector<SolutionSample>& solutions,
                               Direction direction);

// ─── Validation ───────────────────────────────────────────────────

struct InvalidInput {
    int index;
    std::string reason;
};

/// An input is condemned when the scorer flags it malformed or when every
/// solution fails on it while succeeding somewhere else.
std::vector<InvalidInput> validate_tests(const ScoringOutcome& outcome, const TestSuite& suite);

enum class VerifierVerdict {
    Ok,
    Inconclusive,   // fewer than 3 solutions ran on at least half the suite
    Collapse,       // normalized scores nearly identical for everyone
    Contradiction,  // pairwise dominance in raw objectives inverted by the scores
    Faulty          // the scorer itself misbehaved on some run
};

std::string to_string(VerifierVerdict v);

struct VerifierCheck {
    VerifierVerdict verdict = VerifierVerdict::Ok;
    std::string feedback;  // agent-facing description of the evidence
};

inline constexpr double kCollapseStdDev = 0.02;

VerifierCheck validate_verifier(const ScoringOutcome& outcome, Direction direction);

// ─── Agents ───────────────────────────────────────────────────────

class TestcaseAgent {
public:
    TestcaseAgent(Gateway& gateway, const TemplateSet& templates);

    /// Asks for a generator program (argv[1] = case index, prints the
    /// input), runs it for indexes 0..count-1, and assembles the suite.
    struct Result {
        GuestProgram generator;
        TestSuite suite;
    };
    Result generate(Sandbox& sandbox, const ProblemCandidate& candidate, int count,
                    const ExecLimits& limits);
    Result revise(Sandbox& sandbox, const ProblemCandidate& candidate, int count,
                  const ExecLimits& limits, int round, const std::string& feedback);

private:
    Result build_suite(Sandbox& sandbox, ChatRequest request, int count,
                       const ExecLimits& limits);

    Gateway& gateway_;
    const TemplateSet& templates_;
};

class VerifierAgent {
public:
    VerifierAgent(Gateway& gateway, const TemplateSet& templates);

    VerifierProgram generate(const ProblemCandidate& candidate);
    VerifierProgram revise(const ProblemCandidate& candidate, int round,
                           const std::string& feedback);

private:
    VerifierProgram parse_reply(ChatRequest request);

    Gateway& gateway_;
    const TemplateSet& templates_;
};

// ─── Cross-validation loop ────────────────────────────────────────

struct CrossValidateConfig {
    int suite_size = 5;
    int max_rounds = 5;
    ExecLimits limits;

    void validate() const;
};

struct CrossValidateResult {
    enum class Status { Converged, FailedValidation, Infrastructure };

    Status status = Status::FailedValidation;
    int rounds_used = 0;
    TestSuite suite;
    VerifierProgram verifier;
    GuestProgram generator;
    ScoringOutcome scoring;            // from the final round
    std::vector<std::string> history;  // one line per round
    std::string failure;               // set when not converged

    bool converged() const { return status == Status::Converged; }
};

/// Alternating repair loop: each round scores all solutions, then fixes
/// whichever artifact the evidence blames (tests first, then verifier).
/// Converges when a round passes both validations; gives up after
/// max_rounds. Infrastructure trouble is reported as such, never blamed
/// on the candidate.
CrossValidateResult cross_validate(Sandbox& sandbox, Gateway& gateway,
                                   const TemplateSet& templates,
                                   const ProblemCandidate& candidate,
                                   const std::vector<SolutionSample>& solutions,
                                   const CrossValidateConfig& config);

}  // namespace forge
