#include "forge/verifier.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>

namespace forge {

namespace fs = std::filesystem;

// ─── Enum plumbing ────────────────────────────────────────────────

std::string to_string(VerifierMode m) {
    switch (m) {
        case VerifierMode::Objective: return "objective";
        case VerifierMode::DirectScore: return "direct-score";
    }
    throw ValidationError("unknown verifier mode");
}

VerifierMode verifier_mode_from_string(const std::string& s) {
    if (s == "objective") return VerifierMode::Objective;
    if (s == "direct-score") return VerifierMode::DirectScore;
    throw ValidationError("unknown verifier mode: " + s);
}

std::string to_string(CellKind k) {
    switch (k) {
        case CellKind::Scored: return "scored";
        case CellKind::SolutionFailed: return "solution-failed";
        case CellKind::Rejected: return "rejected";
        case CellKind::InputFlagged: return "input-flagged";
        case CellKind::VerifierFault: return "verifier-fault";
    }
    throw ValidationError("unknown cell kind");
}

std::string to_string(VerifierVerdict v) {
    switch (v) {
        case VerifierVerdict::Ok: return "ok";
        case VerifierVerdict::Inconclusive: return "inconclusive";
        case VerifierVerdict::Collapse: return "collapse";
        case VerifierVerdict::Contradiction: return "contradiction";
        case VerifierVerdict::Faulty: return "faulty";
    }
    throw ValidationError("unknown verifier verdict");
}

void VerifierProgram::validate() const {
    if (trim(scorer.source).empty()) throw ValidationError("verifier: scorer program is empty");
    if (scorer.toolchain.empty()) throw ValidationError("verifier: scorer has no toolchain");
    if (mode == VerifierMode::Objective) {
        if (!baseline || trim(baseline->source).empty())
            throw ValidationError("verifier: objective mode needs a baseline solution");
    }
}

void CrossValidateConfig::validate() const {
    if (suite_size < 1) throw ConfigError("cross-validation needs at least one test input");
    if (max_rounds < 1) throw ConfigError("cross-validation needs at least one round");
    limits.validate();
}

// ─── Scoring math ─────────────────────────────────────────────────

double baseline_normalized_score(double objective, double baseline, Direction direction) {
    if (!(objective > 0.0) || !(baseline > 0.0))
        throw ValidationError("baseline normalization needs positive inputs; got objective=" +
                              std::to_string(objective) + " baseline=" + std::to_string(baseline));
    if (direction == Direction::None)
        throw ValidationError("baseline normalization needs an optimization direction");
    double sign = direction == Direction::Maximize ? 1.0 : -1.0;
    double value = sign * (objective - baseline) / std::max(objective, baseline);
    return std::max(0.0, value);
}

double positivity_offset(double min_observed_objective) {
    return 1.0 - std::min(0.0, min_observed_objective);
}

double offset_adjust(double value, double offset) {
    return std::max(value + offset, 1e-9);
}

std::vector<double> ScoringOutcome::per_solution_means() const {
    std::vector<double> means;
    means.reserve(normalized.size());
    for (const auto& row : normalized) {
        double sum = 0.0;
        for (double v : row) sum += v;
        means.push_back(row.empty() ? 0.0 : sum / static_cast<double>(row.size()));
    }
    return means;
}

int ScoringOutcome::verifier_fault_count() const {
    int count = 0;
    for (const auto& row : cells)
        for (const auto& cell : row)
            if (cell.kind == CellKind::VerifierFault) count++;
    for (const auto& cell : baseline_cells)
        if (cell.kind == CellKind::VerifierFault) count++;
    return count;
}

// ─── Guest orchestration ──────────────────────────────────────────

namespace {

// The scorer and generator are tooling, not contestants; they get fixed
// generous limits independent of the candidate's own.
ExecLimits tooling_limits() {
    ExecLimits l;
    l.wall_seconds = 10.0;
    l.memory_bytes = 512ll << 20;
    return l;
}

std::string normalize_toolchain(const std::string& tag) {
    if (tag == "c++" || tag == "cxx") return "cpp";
    if (tag == "python3" || tag == "py") return "python";
    if (tag.empty()) return "python";  // bare fences default to the scripting chain
    return tag;
}

std::optional<double> parse_number(const std::string& text) {
    std::string t = trim(text);
    if (t.empty()) return std::nullopt;
    // First whitespace-delimited token must be the number, and nothing else
    // may follow on later lines.
    std::istringstream ss(t);
    std::string token, extra;
    ss >> token;
    if (ss >> extra) return std::nullopt;
    try {
        size_t used = 0;
        double value = std::stod(token, &used);
        if (used != token.size() || !std::isfinite(value)) return std::nullopt;
        return value;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

struct StagedFiles {
    fs::path dir;
    fs::path input_path;
    fs::path output_path;

    ~StagedFiles() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
};

/// The scorer addresses the run's input and submission as files.
StagedFiles stage_run_files(const Sandbox& sandbox, const std::string& input_text,
                            const std::string& output_text) {
    static std::atomic<uint64_t> counter{0};
    StagedFiles staged;
    staged.dir = sandbox.scratch_root() / ("score-" + std::to_string(counter.fetch_add(1)));
    std::error_code ec;
    fs::create_directories(staged.dir, ec);
    if (ec) throw InfraError("cannot create scoring scratch: " + staged.dir.string());
    staged.input_path = staged.dir / "input.txt";
    staged.output_path = staged.dir / "submission.txt";
    for (const auto& [path, text] :
         {std::pair{staged.input_path, input_text}, {staged.output_path, output_text}}) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw InfraError("cannot stage " + path.string());
        out << text;
    }
    return staged;
}

/// Runs the scorer over one (input, submission) pair and turns the exit
/// protocol into a cell.
ScoreCell score_one_submission(Sandbox& sandbox, const CompiledProgram& scorer,
                               const std::string& input_text, const std::string& submission) {
    StagedFiles staged = stage_run_files(sandbox, input_text, submission);
    ExecResult run = sandbox.run(scorer, {staged.input_path.string(), staged.output_path.string()},
                                 "", tooling_limits());
    ScoreCell cell;
    cell.solution_status = ExecStatus::Ok;
    if (run.status != ExecStatus::Ok) {
        cell.kind = CellKind::VerifierFault;
        cell.note = "scorer " + to_string(run.status) + ": " + trim(run.stderr_tail);
        return cell;
    }
    switch (run.exit_code) {
        case 0: {
            auto value = parse_number(run.stdout_text);
            if (!value) {
                cell.kind = CellKind::VerifierFault;
                cell.note = "scorer printed no single number";
                return cell;
            }
            cell.kind = CellKind::Scored;
            cell.objective = *value;
            return cell;
        }
        case 1:
            cell.kind = CellKind::Rejected;
            cell.note = trim(run.stderr_tail);
            return cell;
        case 2:
            cell.kind = CellKind::InputFlagged;
            cell.note = trim(run.stderr_tail);
            return cell;
        default:
            cell.kind = CellKind::VerifierFault;
            cell.note = "scorer exited " + std::to_string(run.exit_code);
            return cell;
    }
}

/// Runs one guest solution over one input: either produces its submission
/// text or explains how it failed.
struct SolutionRun {
    bool ok = false;
    std::string submission;
    ExecStatus status = ExecStatus::Ok;
    std::string note;
};

SolutionRun run_solution(Sandbox& sandbox, const CompiledProgram& program,
                         const std::string& input_text, const ExecLimits& limits) {
    ExecResult run = sandbox.run(program, {}, input_text, limits);
    SolutionRun result;
    result.status = run.status;
    if (run.ran_clean()) {
        result.ok = true;
        result.submission = run.stdout_text;
    } else if (run.status == ExecStatus::Ok) {
        result.note = "exited " + std::to_string(run.exit_code);
    } else {
        result.note = to_string(run.status);
    }
    return result;
}

}  // namespace

ScoringOutcome score_solutions(Sandbox& sandbox, const VerifierProgram& verifier,
                               const TestSuite& suite,
                               const std::vector<SolutionSample>& solutions,
                               Direction direction) {
    verifier.validate();
    suite.validate();
    if (solutions.empty()) throw ValidationError("scoring needs at least one solution");
    if (verifier.mode == VerifierMode::Objective && direction == Direction::None)
        throw ValidationError("objective mode needs an optimization direction");

    CompileOutcome scorer = sandbox.compile(normalize_toolchain(verifier.scorer.toolchain),
                                            verifier.scorer.source);

    ScoringOutcome outcome;
    int m = suite.size();
    size_t k = solutions.size();

    if (!scorer.ok) {
        // A scorer that does not even build faults every cell; validation
        // will route the evidence to the verifier agent.
        outcome.cells.assign(k, std::vector<ScoreCell>(static_cast<size_t>(m)));
        for (auto& row : outcome.cells)
            for (auto& cell : row) {
                cell.kind = CellKind::VerifierFault;
                cell.note = "scorer does not compile: " + scorer.log;
            }
        outcome.normalized.assign(k, std::vector<double>(static_cast<size_t>(m), 0.0));
        outcome.offset = positivity_offset(0.0);
        return outcome;
    }

    // Baseline submissions, one per input (objective mode).
    std::vector<std::string> baseline_submissions(static_cast<size_t>(m));
    if (verifier.mode == VerifierMode::Objective) {
        outcome.baseline_cells.assign(static_cast<size_t>(m), ScoreCell{});
        CompileOutcome baseline = sandbox.compile(normalize_toolchain(verifier.baseline->toolchain),
                                                  verifier.baseline->source);
        for (int t = 0; t < m; ++t) {
            auto& cell = outcome.baseline_cells[static_cast<size_t>(t)];
            if (!baseline.ok) {
                cell.kind = CellKind::VerifierFault;
                cell.note = "baseline does not compile: " + baseline.log;
                continue;
            }
            SolutionRun run = run_solution(sandbox, baseline.program,
                                           suite.inputs[static_cast<size_t>(t)].text, suite.limits);
            if (!run.ok) {
                cell.kind = CellKind::VerifierFault;
                cell.solution_status = run.status;
                cell.note = "baseline " + run.note;
                continue;
            }
            baseline_submissions[static_cast<size_t>(t)] = run.submission;
            cell = score_one_submission(sandbox, scorer.program,
                                        suite.inputs[static_cast<size_t>(t)].text, run.submission);
            if (cell.kind == CellKind::Rejected || cell.kind == CellKind::InputFlagged) {
                // The verifier supplied this baseline; rejecting it (or the
                // suite input under it) is on the verifier unless the input
                // really is bad, which test validation will decide.
                if (cell.kind == CellKind::Rejected) {
                    cell.kind = CellKind::VerifierFault;
                    cell.note = "scorer rejected the verifier's own baseline: " + cell.note;
                }
            }
        }
    }

    // Solution cells.
    outcome.cells.assign(k, std::vector<ScoreCell>(static_cast<size_t>(m)));
    std::vector<CompileOutcome> compiled(k);
    for (size_t i = 0; i < k; ++i)
        compiled[i] = sandbox.compile(normalize_toolchain(solutions[i].toolchain),
                                      solutions[i].source);

    parallel_for(k, sandbox.workers(), [&](size_t i) {
        for (int t = 0; t < m; ++t) {
            ScoreCell& cell = outcome.cells[i][static_cast<size_t>(t)];
            if (!compiled[i].ok) {
                cell.kind = CellKind::SolutionFailed;
                cell.solution_status = ExecStatus::Crash;
                cell.note = "does not compile";
                continue;
            }
            SolutionRun run = run_solution(sandbox, compiled[i].program,
                                           suite.inputs[static_cast<size_t>(t)].text, suite.limits);
            if (!run.ok) {
                cell.kind = CellKind::SolutionFailed;
                cell.solution_status = run.status;
                cell.note = run.note;
                continue;
            }
            cell = score_one_submission(sandbox, scorer.program,
                                        suite.inputs[static_cast<size_t>(t)].text, run.submission);
        }
    });

    if (verifier.mode == VerifierMode::DirectScore) {
        for (auto& row : outcome.cells)
            for (auto& cell : row)
                if (cell.kind == CellKind::Scored && !(cell.objective >= 0.0 && cell.objective <= 1.0)) {
                    cell.kind = CellKind::VerifierFault;
                    cell.note = "direct score " + std::to_string(cell.objective) + " outside [0, 1]";
                }
    }

    // Offset over every observed objective, then normalized entries.
    double min_observed = 0.0;
    bool any = false;
    auto observe = [&](const ScoreCell& cell) {
        if (cell.kind == CellKind::Scored) {
            min_observed = any ? std::min(min_observed, cell.objective) : cell.objective;
            any = true;
        }
    };
    for (const auto& row : outcome.cells)
        for (const auto& cell : row) observe(cell);
    for (const auto& cell : outcome.baseline_cells) observe(cell);
    outcome.offset = positivity_offset(any ? min_observed : 0.0);

    outcome.normalized.assign(k, std::vector<double>(static_cast<size_t>(m), 0.0));
    for (size_t i = 0; i < k; ++i) {
        for (int t = 0; t < m; ++t) {
            const ScoreCell& cell = outcome.cells[i][static_cast<size_t>(t)];
            if (cell.kind != CellKind::Scored) continue;  // zero-score rule
            if (verifier.mode == VerifierMode::DirectScore) {
                // The scorer speaks final quality directly; range was
                // enforced above.
                outcome.normalized[i][static_cast<size_t>(t)] = cell.objective;
                continue;
            }
            const ScoreCell& base = outcome.baseline_cells[static_cast<size_t>(t)];
            if (base.kind != CellKind::Scored) continue;  // fault: no reference point
            outcome.normalized[i][static_cast<size_t>(t)] = baseline_normalized_score(
                offset_adjust(cell.objective, outcome.offset),
                offset_adjust(base.objective, outcome.offset), direction);
        }
    }
    return outcome;
}

// ─── Validation ───────────────────────────────────────────────────

std::vector<InvalidInput> validate_tests(const ScoringOutcome& outcome, const TestSuite& suite) {
    std::vector<InvalidInput> invalid;
    int m = suite.size();
    size_t k = outcome.cells.size();

    for (int t = 0; t < m; ++t) {
        // Direct evidence: the scorer itself flagged the input.
        bool flagged = false;
        std::string flag_note;
        for (size_t i = 0; i < k && !flagged; ++i) {
            const ScoreCell& cell = outcome.cells[i][static_cast<size_t>(t)];
            if (cell.kind == CellKind::InputFlagged) {
                flagged = true;
                flag_note = cell.note;
            }
        }
        if (!flagged && static_cast<size_t>(t) < outcome.baseline_cells.size() &&
            outcome.baseline_cells[static_cast<size_t>(t)].kind == CellKind::InputFlagged) {
            flagged = true;
            flag_note = outcome.baseline_cells[static_cast<size_t>(t)].note;
        }
        if (flagged) {
            invalid.push_back({t, "scorer declared the input malformed" +
                                      (flag_note.empty() ? "" : (": " + flag_note))});
            continue;
        }

        // Statistical evidence: everyone dies here but lives elsewhere.
        bool all_fail_here = k > 0;
        bool each_succeeds_elsewhere = k > 0;
        for (size_t i = 0; i < k; ++i) {
            if (outcome.cells[i][static_cast<size_t>(t)].kind != CellKind::SolutionFailed) {
                all_fail_here = false;
                break;
            }
            bool elsewhere = false;
            for (int u = 0; u < m; ++u)
                if (u != t && outcome.cells[i][static_cast<size_t>(u)].kind != CellKind::SolutionFailed)
                    elsewhere = true;
            if (!elsewhere) each_succeeds_elsewhere = false;
        }
        if (all_fail_here && each_succeeds_elsewhere && m > 1)
            invalid.push_back({t, "every sampled solution fails on this input yet runs on others"});
    }
    return invalid;
}

VerifierCheck validate_verifier(const ScoringOutcome& outcome, Direction direction) {
    VerifierCheck check;

    if (int faults = outcome.verifier_fault_count(); faults > 0) {
        std::string example;
        for (const auto& row : outcome.cells)
            for (const auto& cell : row)
                if (cell.kind == CellKind::VerifierFault && example.empty()) example = cell.note;
        for (const auto& cell : outcome.baseline_cells)
            if (cell.kind == CellKind::VerifierFault && example.empty()) example = cell.note;
        check.verdict = VerifierVerdict::Faulty;
        check.feedback = std::to_string(faults) + " scoring run(s) failed inside the scorer, e.g.: " + example;
        return check;
    }

    // Usable sample: ran (was scored or rejected, not failed) on at least
    // half of the suite.
    size_t k = outcome.cells.size();
    int m = k == 0 ? 0 : static_cast<int>(outcome.cells.front().size());
    std::vector<size_t> usable;
    for (size_t i = 0; i < k; ++i) {
        int ran = 0;
        for (const auto& cell : outcome.cells[i])
            if (cell.kind != CellKind::SolutionFailed) ran++;
        if (ran * 2 >= m) usable.push_back(i);
    }
    if (usable.size() < 3) {
        check.verdict = VerifierVerdict::Inconclusive;
        check.feedback = "only " + std::to_string(usable.size()) +
                         " sampled solution(s) ran on at least half of the inputs; "
                         "inputs may be too harsh for ordinary programs";
        return check;
    }

    // Contradiction: raw objectives strictly dominate one way, mean scores
    // point the other way.
    auto means = outcome.per_solution_means();
    double sign = direction == Direction::Minimize ? -1.0 : 1.0;
    for (size_t a : usable) {
        for (size_t b : usable) {
            if (a == b) continue;
            bool ge_everywhere = true;
            bool gt_somewhere = false;
            int comparable = 0;
            for (int t = 0; t < m; ++t) {
                const auto& ca = outcome.cells[a][static_cast<size_t>(t)];
                const auto& cb = outcome.cells[b][static_cast<size_t>(t)];
                if (ca.kind != CellKind::Scored || cb.kind != CellKind::Scored) continue;
                comparable++;
                double da = sign * ca.objective, db = sign * cb.objective;
                if (da < db) ge_everywhere = false;
                if (da > db) gt_somewhere = true;
            }
            if (comparable == m && ge_everywhere && gt_somewhere && means[a] < means[b] - 1e-12) {
                check.verdict = VerifierVerdict::Contradiction;
                check.feedback =
                    "one solution beats another on every input objective yet receives a lower "
                    "mean score; the scorer ranking is internally inconsistent";
                return check;
            }
        }
    }

    // Collapse: the scorer cannot tell the usable solutions apart.
    double mean_of_means = 0.0;
    for (size_t i : usable) mean_of_means += means[i];
    mean_of_means /= static_cast<double>(usable.size());
    double var = 0.0;
    for (size_t i : usable) {
        double d = means[i] - mean_of_means;
        var += d * d;
    }
    var /= static_cast<double>(usable.size());
    if (std::sqrt(var) < kCollapseStdDev) {
        check.verdict = VerifierVerdict::Collapse;
        std::ostringstream fb;
        fb << "per-solution mean scores are nearly identical (spread "
           << std::sqrt(var) << "); the scorer fails to separate different strategies";
        check.feedback = fb.str();
        return check;
    }

    return check;
}

// ─── Agents ───────────────────────────────────────────────────────

namespace {

constexpr int kAgentReasks = 2;

ChatRequest agent_request(Purpose purpose, std::string prompt) {
    ChatRequest r;
    r.purpose = purpose;
    r.messages = {{"user", std::move(prompt)}};
    return r;
}

}  // namespace

TestcaseAgent::TestcaseAgent(Gateway& gateway, const TemplateSet& templates)
    : gateway_(gateway), templates_(templates) {}

TestcaseAgent::Result TestcaseAgent::generate(Sandbox& sandbox, const ProblemCandidate& candidate,
                                              int count, const ExecLimits& limits) {
    return build_suite(
        sandbox,
        agent_request(Purpose::TestcaseAgent,
                      templates_.render("testcase_generate",
                                        {{"statement", candidate.statement},
                                         {"count", std::to_string(count)}})),
        count, limits);
}

TestcaseAgent::Result TestcaseAgent::revise(Sandbox& sandbox, const ProblemCandidate& candidate,
                                            int count, const ExecLimits& limits, int round,
                                            const std::string& feedback) {
    return build_suite(
        sandbox,
        agent_request(Purpose::TestcaseAgent,
                      templates_.render("testcase_revise",
                                        {{"statement", candidate.statement},
                                         {"count", std::to_string(count)},
                                         {"round", std::to_string(round)},
                                         {"feedback", feedback}})),
        count, limits);
}

TestcaseAgent::Result TestcaseAgent::build_suite(Sandbox& sandbox, ChatRequest request, int count,
                                                 const ExecLimits& limits) {
    Result result;
    CompiledProgram generator;
    ask_until(gateway_, request, kAgentReasks, [&](const std::string& reply) -> std::string {
        CodeBlock block;
        try {
            block = parse_code_block(reply);
        } catch (const ValidationError& e) {
            return e.what();
        }
        std::string chain = normalize_toolchain(block.toolchain);
        if (!sandbox.has_toolchain(chain)) return "unknown toolchain " + chain;
        CompileOutcome compiled = sandbox.compile(chain, block.body);
        if (!compiled.ok) return "the generator does not compile: " + compiled.log;

        // Audition the program across every index before accepting it.
        std::vector<TestInput> inputs;
        for (int index = 0; index < count; ++index) {
            ExecResult run =
                sandbox.run(compiled.program, {std::to_string(index)}, "", tooling_limits());
            if (!run.ran_clean())
                return "the generator failed on index " + std::to_string(index) + " (" +
                       to_string(run.status) +
                       (run.status == ExecStatus::Ok
                            ? ", exit " + std::to_string(run.exit_code)
                            : "") +
                       "): " + trim(run.stderr_tail);
            if (trim(run.stdout_text).empty())
                return "the generator printed nothing for index " + std::to_string(index);
            inputs.push_back({run.stdout_text, "generator:" + std::to_string(index)});
        }
        result.generator = {chain, block.body};
        result.suite.inputs = std::move(inputs);
        result.suite.limits = limits;
        return "";
    });
    result.suite.validate();
    return result;
}

VerifierAgent::VerifierAgent(Gateway& gateway, const TemplateSet& templates)
    : gateway_(gateway), templates_(templates) {}

VerifierProgram VerifierAgent::generate(const ProblemCandidate& candidate) {
    return parse_reply(agent_request(
        Purpose::VerifierAgent,
        templates_.render("verifier_generate",
                          {{"statement", candidate.statement},
                           {"objective", candidate.formulation.objective},
                           {"direction", to_string(candidate.formulation.direction)}})));
}

VerifierProgram VerifierAgent::revise(const ProblemCandidate& candidate, int round,
                                      const std::string& feedback) {
    return parse_reply(agent_request(
        Purpose::VerifierAgent,
        templates_.render("verifier_revise",
                          {{"statement", candidate.statement},
                           {"objective", candidate.formulation.objective},
                           {"direction", to_string(candidate.formulation.direction)},
                           {"round", std::to_string(round)},
                           {"feedback", feedback}})));
}

VerifierProgram VerifierAgent::parse_reply(ChatRequest request) {
    VerifierProgram program;
    ask_until(gateway_, request, kAgentReasks, [&program](const std::string& reply) -> std::string {
        auto mode_field = find_field(reply, "mode");
        if (!mode_field) return "missing mode line";
        VerifierMode mode;
        try {
            mode = verifier_mode_from_string(trim(*mode_field));
        } catch (const ValidationError&) {
            return "mode must be objective or direct-score";
        }
        std::vector<CodeBlock> blocks;
        try {
            blocks = parse_code_blocks(reply);
        } catch (const ValidationError& e) {
            return e.what();
        }
        if (mode == VerifierMode::Objective) {
            if (blocks.size() != 2)
                return "objective mode needs exactly two fenced programs (baseline, then scorer); got " +
                       std::to_string(blocks.size());
            program.baseline = GuestProgram{normalize_toolchain(blocks[0].toolchain), blocks[0].body};
            program.scorer = {normalize_toolchain(blocks[1].toolchain), blocks[1].body};
        } else {
            if (blocks.size() != 1)
                return "direct-score mode needs exactly one fenced program; got " +
                       std::to_string(blocks.size());
            program.baseline.reset();
            program.scorer = {normalize_toolchain(blocks[0].toolchain), blocks[0].body};
        }
        program.mode = mode;
        return "";
    });
    program.validate();
    return program;
}

// ─── Cross-validation loop ────────────────────────────────────────

CrossValidateResult cross_validate(Sandbox& sandbox, Gateway& gateway,
                                   const TemplateSet& templates,
                                   const ProblemCandidate& candidate,
                                   const std::vector<SolutionSample>& solutions,
                                   const CrossValidateConfig& config) {
    config.validate();
    if (solutions.size() < 3)
        throw ValidationError("cross-validation needs at least 3 sampled solutions");

    TestcaseAgent testcase_agent(gateway, templates);
    VerifierAgent verifier_agent(gateway, templates);

    CrossValidateResult result;
    try {
        TestcaseAgent::Result tests =
            testcase_agent.generate(sandbox, candidate, config.suite_size, config.limits);
        result.verifier = verifier_agent.generate(candidate);
        result.suite = tests.suite;
        result.generator = tests.generator;

        for (int round = 1; round <= config.max_rounds; ++round) {
            result.rounds_used = round;
            result.scoring = score_solutions(sandbox, result.verifier, result.suite, solutions,
                                             candidate.formulation.direction);

            std::vector<InvalidInput> bad_inputs = validate_tests(result.scoring, result.suite);
            if (!bad_inputs.empty()) {
                std::ostringstream fb;
                fb << bad_inputs.size() << " input(s) look invalid:";
                for (const auto& bad : bad_inputs)
                    fb << " [" << bad.index << "] " << bad.reason << ";";
                result.history.push_back("round " + std::to_string(round) +
                                         ": tests rejected (" + fb.str() + ")");
                result.failure = fb.str();
                if (round == config.max_rounds) break;
                TestcaseAgent::Result revised = testcase_agent.revise(
                    sandbox, candidate, config.suite_size, config.limits, round, fb.str());
                result.suite = revised.suite;
                result.generator = revised.generator;
                continue;
            }

            VerifierCheck check = validate_verifier(result.scoring, candidate.formulation.direction);
            if (check.verdict == VerifierVerdict::Ok) {
                result.history.push_back("round " + std::to_string(round) + ": converged");
                result.status = CrossValidateResult::Status::Converged;
                result.failure.clear();
                return result;
            }

            result.history.push_back("round " + std::to_string(round) + ": verifier " +
                                     to_string(check.verdict) + " (" + check.feedback + ")");
            result.failure = to_string(check.verdict) + ": " + check.feedback;
            if (round == config.max_rounds) break;

            if (check.verdict == VerifierVerdict::Inconclusive) {
                // Solutions barely run; the most likely fixable cause is
                // inputs outside the statement's promised domain.
                TestcaseAgent::Result revised = testcase_agent.revise(
                    sandbox, candidate, config.suite_size, config.limits, round, check.feedback);
                result.suite = revised.suite;
                result.generator = revised.generator;
            } else {
                result.verifier = verifier_agent.revise(candidate, round, check.feedback);
            }
        }
        result.status = CrossValidateResult::Status::FailedValidation;
        return result;
    } catch (const InfraError& e) {
        result.status = CrossValidateResult::Status::Infrastructure;
        result.failure = e.what();
        result.history.push_back(std::string("infrastructure failure: ") + e.what());
        return result;
    }
}

}  // namespace forge
