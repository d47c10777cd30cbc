// Orchestrates synthesis rounds and persists enough state at every stage
// boundary that an interrupted run resumes without losing finished work.

#include "forge/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>
#include <set>

#include "forge/common.hpp"

namespace forge {

using nlohmann::json;

namespace {

json usage_to_json(const Usage& u) {
    return json{{"inputTokens", u.input_tokens}, {"outputTokens", u.output_tokens}};
}

Usage usage_from_json(const json& j) {
    Usage u;
    u.input_tokens = j.at("inputTokens").get<long long>();
    u.output_tokens = j.at("outputTokens").get<long long>();
    return u;
}

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& prefix) {
    for (const auto& item : j.items())
        if (!allowed.count(item.key()))
            throw ConfigError("unknown configuration key: " + prefix + item.key());
}

std::string round_name(int round) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "round_%03d", round);
    return buf;
}

// Identical prompts share a gateway fingerprint queue and queue order is
// issue order, so requests that could collide must not interleave. Stages
// parallelize across content groups and stay sequential inside one.
std::vector<std::vector<size_t>> content_groups(const std::vector<std::string>& keys) {
    std::map<std::string, std::vector<size_t>> buckets;
    for (size_t i = 0; i < keys.size(); ++i) buckets[keys[i]].push_back(i);
    std::vector<std::vector<size_t>> groups;
    groups.reserve(buckets.size());
    for (auto& [key, members] : buckets) groups.push_back(std::move(members));
    std::sort(groups.begin(), groups.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return groups;
}

}  // namespace

// ─── Configuration ────────────────────────────────────────────────

void PipelineConfig::validate() const {
    if (pool_sample < 1) throw ConfigError("poolSample must be at least 1");
    if (solutions_per_candidate < 2) throw ConfigError("solutionsPerCandidate must be at least 2");
    if (divergence_keep < 1 || divergence_keep > pool_sample)
        throw ConfigError("divergenceKeep must lie in [1, poolSample]");
    if (final_keep < 1 || final_keep > divergence_keep)
        throw ConfigError("finalKeep must lie in [1, divergenceKeep]");
    if (rounds < 1) throw ConfigError("rounds must be at least 1");
    if (judge_group_size < 1) throw ConfigError("judgeGroupSize must be at least 1");
    if (!(classifier_threshold > 0.0 && classifier_threshold < 1.0))
        throw ConfigError("classifierThreshold must lie strictly between 0 and 1");
    if (workers < 1) throw ConfigError("workers must be at least 1");
    cross_validation.validate();
}

void to_json(json& j, const PipelineConfig& c) {
    j = json{{"poolSample", c.pool_sample},
             {"solutionsPerCandidate", c.solutions_per_candidate},
             {"divergenceKeep", c.divergence_keep},
             {"finalKeep", c.final_keep},
             {"rounds", c.rounds},
             {"judgeGroupSize", c.judge_group_size},
             {"classifierThreshold", c.classifier_threshold},
             {"replenish", c.replenish},
             {"workers", c.workers},
             {"seed", c.seed},
             {"gatewayMode", to_string(c.gateway_mode)},
             {"crossValidation", json{{"suiteSize", c.cross_validation.suite_size},
                                      {"maxRounds", c.cross_validation.max_rounds},
                                      {"limits", c.cross_validation.limits}}}};
}

void from_json(const json& j, PipelineConfig& c) {
    if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
    reject_unknown_keys(j,
                        {"about", "poolSample", "solutionsPerCandidate", "divergenceKeep",
                         "finalKeep", "rounds", "judgeGroupSize", "classifierThreshold",
                         "replenish", "workers", "seed", "gatewayMode", "crossValidation"},
                        "");
    const PipelineConfig defaults;
    c.pool_sample = j.value("poolSample", defaults.pool_sample);
    c.solutions_per_candidate = j.value("solutionsPerCandidate", defaults.solutions_per_candidate);
    c.divergence_keep = j.value("divergenceKeep", defaults.divergence_keep);
    c.final_keep = j.value("finalKeep", defaults.final_keep);
    c.rounds = j.value("rounds", defaults.rounds);
    c.judge_group_size = j.value("judgeGroupSize", defaults.judge_group_size);
    c.classifier_threshold = j.value("classifierThreshold", defaults.classifier_threshold);
    c.replenish = j.value("replenish", defaults.replenish);
    c.workers = j.value("workers", defaults.workers);
    c.seed = j.value("seed", defaults.seed);
    c.gateway_mode = j.contains("gatewayMode")
                         ? gateway_mode_from_string(j.at("gatewayMode").get<std::string>())
                         : defaults.gateway_mode;
    c.cross_validation = defaults.cross_validation;
    if (j.contains("crossValidation")) {
        const json& cv = j.at("crossValidation");
        reject_unknown_keys(cv, {"suiteSize", "maxRounds", "limits"}, "crossValidation.");
        c.cross_validation.suite_size = cv.value("suiteSize", defaults.cross_validation.suite_size);
        c.cross_validation.max_rounds = cv.value("maxRounds", defaults.cross_validation.max_rounds);
        if (cv.contains("limits")) {
            const json& lim = cv.at("limits");
            reject_unknown_keys(lim, {"wallSeconds", "memoryBytes"}, "crossValidation.limits.");
            c.cross_validation.limits.wall_seconds =
                lim.value("wallSeconds", defaults.cross_validation.limits.wall_seconds);
            c.cross_validation.limits.memory_bytes =
                lim.value("memoryBytes", defaults.cross_validation.limits.memory_bytes);
        }
    }
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path))
        throw ConfigError("configuration file not found: " + path.string());
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("cannot parse " + path.string() + ": " + e.what());
    }
    PipelineConfig config = j.get<PipelineConfig>();
    config.validate();
    return config;
}

// ─── Round accounting ─────────────────────────────────────────────

void StageCounts::check_conserved() const {
    const int fields[] = {sampled,        mutation_failed,   mutated,           coarse_rejected,
                          coarse_accepted, sampling_failed,  sampling_ok,       divergence_dropped,
                          divergence_kept, validation_failed, infrastructure,   validated,
                          final_dropped,   final_kept};
    for (int f : fields)
        if (f < 0) throw ValidationError("stage accounting leak: negative count");
    auto leak = [](const char* equation) {
        throw ValidationError(std::string("stage accounting leak: ") + equation);
    };
    if (mutated + mutation_failed != sampled) leak("mutated + mutationFailed != sampled");
    if (coarse_accepted + coarse_rejected != mutated)
        leak("coarseAccepted + coarseRejected != mutated");
    if (sampling_ok + sampling_failed != coarse_accepted)
        leak("samplingOk + samplingFailed != coarseAccepted");
    if (divergence_kept + divergence_dropped != sampling_ok)
        leak("divergenceKept + divergenceDropped != samplingOk");
    if (validated + validation_failed + infrastructure != divergence_kept)
        leak("validated + validationFailed + infrastructure != divergenceKept");
    if (final_kept + final_dropped != validated) leak("finalKept + finalDropped != validated");
}

void to_json(json& j, const StageCounts& c) {
    j = json{{"sampled", c.sampled},
             {"mutationFailed", c.mutation_failed},
             {"mutated", c.mutated},
             {"coarseRejected", c.coarse_rejected},
             {"coarseAccepted", c.coarse_accepted},
             {"samplingFailed", c.sampling_failed},
             {"samplingOk", c.sampling_ok},
             {"divergenceDropped", c.divergence_dropped},
             {"divergenceKept", c.divergence_kept},
             {"validationFailed", c.validation_failed},
             {"infrastructure", c.infrastructure},
             {"validated", c.validated},
             {"finalDropped", c.final_dropped},
             {"finalKept", c.final_kept}};
}

void from_json(const json& j, StageCounts& c) {
    c.sampled = j.at("sampled").get<int>();
    c.mutation_failed = j.at("mutationFailed").get<int>();
    c.mutated = j.at("mutated").get<int>();
    c.coarse_rejected = j.at("coarseRejected").get<int>();
    c.coarse_accepted = j.at("coarseAccepted").get<int>();
    c.sampling_failed = j.at("samplingFailed").get<int>();
    c.sampling_ok = j.at("samplingOk").get<int>();
    c.divergence_dropped = j.at("divergenceDropped").get<int>();
    c.divergence_kept = j.at("divergenceKept").get<int>();
    c.validation_failed = j.at("validationFailed").get<int>();
    c.infrastructure = j.at("infrastructure").get<int>();
    c.validated = j.at("validated").get<int>();
    c.final_dropped = j.at("finalDropped").get<int>();
    c.final_kept = j.at("finalKept").get<int>();
}

double RoundReport::validation_yield() const {
    if (counts.divergence_kept == 0) return 0.0;
    return static_cast<double>(counts.validated) / counts.divergence_kept;
}

namespace {

json outcome_to_json(const CandidateOutcome& c) {
    return json{{"id", c.id},
                {"parentId", c.parent_id},
                {"stage", to_string(c.stage)},
                {"discardReason", to_string(c.discard_reason)},
                {"llmDivergence", c.llm_divergence ? json(*c.llm_divergence) : json(nullptr)},
                {"execDivergence", c.exec_divergence ? json(*c.exec_divergence) : json(nullptr)},
                {"classifiedOpen", c.classified_open},
                {"validationRounds", c.validation_rounds}};
}

CandidateOutcome outcome_from_json(const json& j) {
    CandidateOutcome c;
    c.id = j.at("id").get<std::string>();
    c.parent_id = j.at("parentId").get<std::string>();
    c.stage = stage_from_string(j.at("stage").get<std::string>());
    c.discard_reason = discard_reason_from_string(j.at("discardReason").get<std::string>());
    if (!j.at("llmDivergence").is_null()) c.llm_divergence = j.at("llmDivergence").get<double>();
    if (!j.at("execDivergence").is_null()) c.exec_divergence = j.at("execDivergence").get<double>();
    c.classified_open = j.at("classifiedOpen").get<bool>();
    c.validation_rounds = j.at("validationRounds").get<int>();
    return c;
}

}  // namespace

json canonical_report(const RoundReport& report) {
    json candidates = json::array();
    for (const auto& c : report.candidates) candidates.push_back(outcome_to_json(c));
    return json{{"round", report.round},
                {"poolBefore", report.pool_before},
                {"poolAfter", report.pool_after},
                {"counts", report.counts},
                {"sampledParents", report.sampled_parents},
                {"mutationFailedParents", report.mutation_failed_parents},
                {"candidates", candidates},
                {"usage", usage_to_json(report.usage)},
                {"gatewayCalls", report.gateway_calls}};
}

RoundReport report_from_json(const json& j) {
    RoundReport r;
    r.round = j.at("round").get<int>();
    r.pool_before = j.at("poolBefore").get<int>();
    r.pool_after = j.at("poolAfter").get<int>();
    r.counts = j.at("counts").get<StageCounts>();
    r.sampled_parents = j.at("sampledParents").get<std::vector<std::string>>();
    r.mutation_failed_parents = j.at("mutationFailedParents").get<std::vector<std::string>>();
    for (const auto& c : j.at("candidates")) r.candidates.push_back(outcome_from_json(c));
    r.usage = usage_from_json(j.at("usage"));
    r.gateway_calls = j.at("gatewayCalls").get<long long>();
    return r;
}

// ─── Round state ──────────────────────────────────────────────────

struct PipelineRunner::RoundState {
    struct Draw {
        ProblemCandidate parent;
        std::vector<MutationKind> kinds;
    };

    struct CandidateState {
        ProblemCandidate candidate;
        SamplingOutcome sampling;
        bool has_sampling = false;
        // Judged divergence is held here until the candidate's fate is
        // decided; the candidate record carries it from that point on.
        std::optional<double> llm_score;
        int cv_rounds = 0;
        std::string cv_status;  // converged | failed | infrastructure
        std::string cv_failure;
    };

    int round = 0;
    int pool_before = 0;
    std::vector<std::string> done;  // completed stage labels, in order
    std::vector<Draw> draws;
    std::vector<std::string> mutation_failed_parents;
    std::vector<CandidateState> candidates;
    std::vector<std::string> ranked;  // sampling survivors, best judged first
    Usage usage;
    long long gateway_calls = 0;

    bool stage_done(const std::string& label) const {
        return std::find(done.begin(), done.end(), label) != done.end();
    }

    json to_checkpoint(const std::map<std::string, long long>& replay_consumed) const;
    static RoundState from_checkpoint(const json& j);
};

json PipelineRunner::RoundState::to_checkpoint(
    const std::map<std::string, long long>& replay_consumed) const {
    json draws_j = json::array();
    for (const auto& d : draws) {
        json kinds_j = json::array();
        for (auto k : d.kinds) kinds_j.push_back(to_string(k));
        draws_j.push_back(json{{"parent", d.parent}, {"kinds", kinds_j}});
    }
    json cands_j = json::array();
    for (const auto& cs : candidates) {
        cands_j.push_back(json{{"candidate", cs.candidate},
                               {"sampling", cs.has_sampling ? json(cs.sampling) : json(nullptr)},
                               {"llmScore", cs.llm_score ? json(*cs.llm_score) : json(nullptr)},
                               {"cvRounds", cs.cv_rounds},
                               {"cvStatus", cs.cv_status},
                               {"cvFailure", cs.cv_failure}});
    }
    return json{{"round", round},
                {"poolBefore", pool_before},
                {"stagesDone", done},
                {"draws", draws_j},
                {"mutationFailedParents", mutation_failed_parents},
                {"candidates", cands_j},
                {"ranked", ranked},
                {"usage", usage_to_json(usage)},
                {"gatewayCalls", gateway_calls},
                {"replayConsumed", replay_consumed}};
}

PipelineRunner::RoundState PipelineRunner::RoundState::from_checkpoint(const json& j) {
    RoundState st;
    st.round = j.at("round").get<int>();
    st.pool_before = j.at("poolBefore").get<int>();
    st.done = j.at("stagesDone").get<std::vector<std::string>>();
    for (const auto& d : j.at("draws")) {
        Draw draw;
        draw.parent = d.at("parent").get<ProblemCandidate>();
        for (const auto& k : d.at("kinds"))
            draw.kinds.push_back(mutation_kind_from_string(k.get<std::string>()));
        st.draws.push_back(std::move(draw));
    }
    st.mutation_failed_parents = j.at("mutationFailedParents").get<std::vector<std::string>>();
    for (const auto& c : j.at("candidates")) {
        CandidateState cs;
        cs.candidate = c.at("candidate").get<ProblemCandidate>();
        if (!c.at("sampling").is_null()) {
            cs.sampling = c.at("sampling").get<SamplingOutcome>();
            cs.has_sampling = true;
        }
        if (!c.at("llmScore").is_null()) cs.llm_score = c.at("llmScore").get<double>();
        cs.cv_rounds = c.at("cvRounds").get<int>();
        cs.cv_status = c.at("cvStatus").get<std::string>();
        cs.cv_failure = c.at("cvFailure").get<std::string>();
        st.candidates.push_back(std::move(cs));
    }
    st.ranked = j.at("ranked").get<std::vector<std::string>>();
    st.usage = usage_from_json(j.at("usage"));
    st.gateway_calls = j.at("gatewayCalls").get<long long>();
    return st;
}

// ─── Runner ───────────────────────────────────────────────────────

PipelineRunner::PipelineRunner(std::filesystem::path run_dir, PipelineConfig config,
                               Gateway& gateway, Sandbox& sandbox, const TemplateSet& templates)
    : run_dir_(std::move(run_dir)),
      config_(std::move(config)),
      gateway_(gateway),
      sandbox_(sandbox),
      templates_(templates) {
    namespace fs = std::filesystem;
    config_.validate();
    if (gateway_.mode() != config_.gateway_mode)
        throw ConfigError("gateway runs in " + to_string(gateway_.mode()) +
                          " mode but the configuration says " + to_string(config_.gateway_mode));
    bool prior_progress = fs::exists(run_dir_ / "state.json") || fs::exists(run_dir_ / "pool") ||
                          fs::exists(run_dir_ / "rounds");
    if (config_.gateway_mode == GatewayMode::Record && prior_progress)
        throw ConfigError("record mode rewrites the transcript from scratch and cannot resume; "
                          "use a fresh run directory");
    fs::create_directories(run_dir_);
    const json current = config_;
    fs::path config_path = run_dir_ / "config.json";
    if (fs::exists(config_path)) {
        if (json::parse(read_text_file(config_path)) != current)
            throw ConfigError("run directory was created with a different configuration: " +
                              config_path.string());
    } else {
        write_text_file_atomic(config_path, current.dump(2) + "\n");
    }
}

void PipelineRunner::adopt_pool(const SeedPool& initial) {
    if (has_pool()) throw ConfigError("run directory already has a pool");
    save_pool(initial, pool_dir());
}

bool PipelineRunner::has_pool() const {
    return std::filesystem::exists(pool_dir() / "index.json");
}

SeedPool PipelineRunner::current_pool() const {
    if (!has_pool())
        throw ConfigError("run directory has no pool; adopt one before running rounds");
    return load_pool(pool_dir());
}

int PipelineRunner::rounds_completed() const {
    auto path = run_dir_ / "state.json";
    if (!std::filesystem::exists(path)) return 0;
    return json::parse(read_text_file(path)).at("roundsCompleted").get<int>();
}

std::filesystem::path PipelineRunner::round_dir(int round) const {
    return run_dir_ / "rounds" / round_name(round);
}

void PipelineRunner::write_state(int rounds_completed) {
    json st{{"roundsCompleted", rounds_completed}};
    // Replay positions are part of run state: a later process must resume
    // the transcript where round k left it, not at the top.
    if (gateway_.mode() == GatewayMode::Replay) st["replayConsumed"] = gateway_.replay_consumed();
    write_text_file_atomic(run_dir_ / "state.json", st.dump(2) + "\n");
}

PipelineRunner::RoundState PipelineRunner::load_or_init_state(int round) {
    auto checkpoint_path = round_dir(round) / "checkpoint.json";
    if (std::filesystem::exists(checkpoint_path)) {
        json j = json::parse(read_text_file(checkpoint_path));
        RoundState st = RoundState::from_checkpoint(j);
        if (st.round != round)
            throw ValidationError("checkpoint in " + round_dir(round).string() +
                                  " belongs to round " + std::to_string(st.round));
        if (gateway_.mode() == GatewayMode::Replay)
            gateway_.replay_fast_forward(
                j.at("replayConsumed").get<std::map<std::string, long long>>());
        log_info("resuming round " + std::to_string(round) + " after stage " +
                 (st.done.empty() ? std::string("none") : st.done.back()));
        return st;
    }
    RoundState st;
    st.round = round;
    if (gateway_.mode() == GatewayMode::Replay) {
        std::map<std::string, long long> consumed;
        auto state_path = run_dir_ / "state.json";
        if (std::filesystem::exists(state_path)) {
            json j = json::parse(read_text_file(state_path));
            if (j.contains("replayConsumed"))
                consumed = j.at("replayConsumed").get<std::map<std::string, long long>>();
        }
        gateway_.replay_fast_forward(consumed);
    }
    return st;
}

void PipelineRunner::save_checkpoint(const RoundState& st) {
    std::filesystem::create_directories(round_dir(st.round));
    std::map<std::string, long long> consumed;
    if (gateway_.mode() == GatewayMode::Replay) consumed = gateway_.replay_consumed();
    write_text_file_atomic(round_dir(st.round) / "checkpoint.json",
                           st.to_checkpoint(consumed).dump(2) + "\n");
}

RoundReport PipelineRunner::run_round() {
    const auto started = std::chrono::steady_clock::now();
    int completed = rounds_completed();
    if (completed >= config_.rounds)
        throw ConfigError("all " + std::to_string(config_.rounds) +
                          " configured rounds are already complete");
    int round = completed + 1;
    SeedPool pool = current_pool();

    RoundState st = load_or_init_state(round);
    auto run_stage = [&](const char* label, const std::function<void()>& fn) {
        if (st.stage_done(label)) return;
        Usage before = gateway_.total_usage();
        long long calls_before = gateway_.call_count();
        fn();
        Usage after = gateway_.total_usage();
        st.usage.input_tokens += after.input_tokens - before.input_tokens;
        st.usage.output_tokens += after.output_tokens - before.output_tokens;
        st.gateway_calls += gateway_.call_count() - calls_before;
        st.done.push_back(label);
        save_checkpoint(st);
    };

    run_stage("sample", [&] { stage_sample(st, pool); });
    run_stage("mutate", [&] { stage_mutate(st); });
    run_stage("screen", [&] { stage_screen(st); });
    run_stage("solve", [&] { stage_solve(st); });
    run_stage("rank", [&] { stage_rank(st); });
    run_stage("validate", [&] { stage_validate(st); });

    RoundReport report = finalize_round(st, pool);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

std::vector<RoundReport> PipelineRunner::run_remaining() {
    std::vector<RoundReport> reports;
    while (rounds_completed() < config_.rounds) reports.push_back(run_round());
    return reports;
}

RoundReport PipelineRunner::load_report(int round) const {
    auto path = round_dir(round) / "report.json";
    if (!std::filesystem::exists(path))
        throw ValidationError("no report on disk for round " + std::to_string(round));
    return report_from_json(json::parse(read_text_file(path)));
}

// ─── Stages ───────────────────────────────────────────────────────

void PipelineRunner::stage_sample(RoundState& st, const SeedPool& pool) {
    st.pool_before = static_cast<int>(pool.size());
    // A pool smaller than the sample size is drawn whole.
    size_t b = std::min(static_cast<size_t>(config_.pool_sample), pool.size());
    std::vector<ProblemCandidate> parents =
        pool.sample(b, mix_seed(config_.seed, "round-sample", static_cast<uint64_t>(st.round)));
    Rng kinds_rng(mix_seed(config_.seed, "mutation-kinds", static_cast<uint64_t>(st.round)));
    for (auto& parent : parents) {
        RoundState::Draw draw;
        draw.parent = std::move(parent);
        draw.kinds = sample_kind_subset(kinds_rng);
        st.draws.push_back(std::move(draw));
    }
}

void PipelineRunner::stage_mutate(RoundState& st) {
    Mutator mutator(gateway_, templates_);
    std::vector<std::string> keys;
    keys.reserve(st.draws.size());
    for (const auto& d : st.draws)
        keys.push_back(d.parent.statement + "\x1f" + describe_kinds(d.kinds));
    auto groups = content_groups(keys);
    std::vector<std::optional<ProblemCandidate>> results(st.draws.size());
    parallel_for(groups.size(), config_.workers, [&](size_t g) {
        for (size_t i : groups[g]) {
            try {
                results[i] = mutator.mutate(st.draws[i].parent, st.draws[i].kinds, st.round);
            } catch (const ValidationError& e) {
                log_warn("mutation of " + st.draws[i].parent.id + " failed: " + e.what());
            }
        }
    });
    for (size_t i = 0; i < st.draws.size(); ++i) {
        if (results[i]) {
            RoundState::CandidateState cs;
            cs.candidate = std::move(*results[i]);
            st.candidates.push_back(std::move(cs));
        } else {
            st.mutation_failed_parents.push_back(st.draws[i].parent.id);
        }
    }
}

void PipelineRunner::stage_screen(RoundState& st) {
    Mutator mutator(gateway_, templates_);
    std::vector<std::string> keys;
    keys.reserve(st.candidates.size());
    for (const auto& cs : st.candidates) keys.push_back(cs.candidate.statement);
    auto groups = content_groups(keys);
    parallel_for(groups.size(), config_.workers, [&](size_t g) {
        for (size_t i : groups[g]) {
            auto& cs = st.candidates[i];
            if (mutator.coarse_filter(cs.candidate).pass())
                cs.candidate.advance(Stage::CoarseAccepted);
            else
                cs.candidate.discard(DiscardReason::Coarse);
        }
    });
}

void PipelineRunner::stage_solve(RoundState& st) {
    std::vector<size_t> active;
    std::vector<std::string> keys;
    for (size_t i = 0; i < st.candidates.size(); ++i) {
        if (st.candidates[i].candidate.discarded()) continue;
        active.push_back(i);
        keys.push_back(st.candidates[i].candidate.statement);
    }
    auto groups = content_groups(keys);
    parallel_for(groups.size(), config_.workers, [&](size_t g) {
        for (size_t k : groups[g]) {
            auto& cs = st.candidates[active[k]];
            cs.sampling = sample_solutions(gateway_, templates_, cs.candidate,
                                           config_.solutions_per_candidate);
            cs.has_sampling = true;
            // Divergence needs at least a pair of solutions to compare.
            if (!cs.sampling.acceptable(config_.solutions_per_candidate) ||
                cs.sampling.solutions.size() < 2)
                cs.candidate.discard(DiscardReason::Sampling);
        }
    });
}

void PipelineRunner::stage_rank(RoundState& st) {
    StrategyJudge judge(gateway_, templates_, config_.judge_group_size);
    std::vector<size_t> active;
    std::vector<std::string> keys;
    for (size_t i = 0; i < st.candidates.size(); ++i) {
        if (st.candidates[i].candidate.discarded()) continue;
        active.push_back(i);
        keys.push_back(st.candidates[i].candidate.statement);
    }
    auto groups = content_groups(keys);
    parallel_for(groups.size(), config_.workers, [&](size_t g) {
        for (size_t k : groups[g]) {
            auto& cs = st.candidates[active[k]];
            cs.llm_score = judge.judge(cs.candidate, cs.sampling.solutions).divergence();
        }
    });
    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(active.size());
    for (size_t i : active) scored.push_back({st.candidates[i].candidate.id, *st.candidates[i].llm_score});
    st.ranked = scored.empty() ? std::vector<std::string>{}
                               : rank_top(std::move(scored), static_cast<int>(active.size()));
}

void PipelineRunner::stage_validate(RoundState& st) {
    std::map<std::string, size_t> by_id;
    for (size_t i = 0; i < st.candidates.size(); ++i) by_id[st.candidates[i].candidate.id] = i;

    auto validate_one = [&](RoundState::CandidateState& cs) {
        try {
            CrossValidateResult result = cross_validate(sandbox_, gateway_, templates_, cs.candidate,
                                                        cs.sampling.solutions, config_.cross_validation);
            cs.cv_rounds = result.rounds_used;
            if (result.converged()) {
                cs.candidate.set_exec_divergence(exec_divergence(result.scoring.normalized));
                cs.candidate.advance(Stage::InfraValidated);
                cs.cv_status = "converged";
                ProblemBundle bundle{cs.candidate,           result.suite,
                                     result.verifier,        result.generator,
                                     result.scoring.offset,  result.rounds_used};
                save_bundle(bundle, bundles_dir() / cs.candidate.id);
            } else if (result.status == CrossValidateResult::Status::Infrastructure) {
                cs.candidate.discard(DiscardReason::Infrastructure);
                cs.cv_status = "infrastructure";
                cs.cv_failure = result.failure;
            } else {
                cs.candidate.discard(DiscardReason::CrossValidation);
                cs.cv_status = "failed";
                cs.cv_failure = result.failure;
            }
        } catch (const ValidationError& e) {
            // Only well-formedness trouble lands here (too few usable
            // solutions, agent budget exhausted); harness errors propagate
            // and abort the round instead of blaming the candidate.
            cs.candidate.discard(DiscardReason::CrossValidation);
            cs.cv_status = "failed";
            cs.cv_failure = e.what();
        }
    };

    auto promote = [&](size_t rank_index) -> RoundState::CandidateState& {
        auto& cs = st.candidates.at(by_id.at(st.ranked[rank_index]));
        cs.candidate.set_llm_divergence(*cs.llm_score);
        cs.candidate.advance(Stage::DivergenceRanked);
        return cs;
    };

    // The initial promotion set is validated in parallel groups; every
    // request in a candidate's repair loop embeds its statement, so only
    // statement duplicates could collide on a fingerprint.
    size_t cut = std::min(static_cast<size_t>(config_.divergence_keep), st.ranked.size());
    std::vector<size_t> promoted;
    std::vector<std::string> keys;
    for (size_t r = 0; r < cut; ++r) {
        auto& cs = promote(r);
        promoted.push_back(by_id.at(cs.candidate.id));
        keys.push_back(cs.candidate.statement);
    }
    auto groups = content_groups(keys);
    parallel_for(groups.size(), config_.workers, [&](size_t g) {
        for (size_t k : groups[g]) validate_one(st.candidates[promoted[k]]);
    });

    auto survived = [&] {
        int n = 0;
        for (size_t i : promoted)
            if (!st.candidates[i].candidate.discarded()) ++n;
        return n;
    };

    // Optional replenishment keeps promoting past the cutoff, one candidate
    // at a time, while the validated set is short of the final quota.
    size_t next = cut;
    if (config_.replenish) {
        int validated = survived();
        while (next < st.ranked.size() && validated < config_.final_keep) {
            auto& cs = promote(next);
            ++next;
            validate_one(cs);
            if (!cs.candidate.discarded()) ++validated;
        }
    }
    for (; next < st.ranked.size(); ++next) {
        auto& cs = st.candidates.at(by_id.at(st.ranked[next]));
        cs.candidate.set_llm_divergence(*cs.llm_score);
        cs.candidate.discard(DiscardReason::DivergenceRank);
    }
}

RoundReport PipelineRunner::finalize_round(RoundState& st, SeedPool& pool) {
    std::map<std::string, size_t> by_id;
    std::vector<std::pair<std::string, double>> scored;
    for (size_t i = 0; i < st.candidates.size(); ++i) {
        const auto& cs = st.candidates[i];
        by_id[cs.candidate.id] = i;
        if (cs.candidate.stage == Stage::InfraValidated)
            scored.push_back({cs.candidate.id, *cs.candidate.exec_divergence});
    }
    int keep = std::min(config_.final_keep, static_cast<int>(scored.size()));
    std::vector<std::string> winners =
        keep > 0 ? rank_top(scored, keep) : std::vector<std::string>{};
    std::set<std::string> winner_set(winners.begin(), winners.end());

    std::vector<ProblemCandidate> fresh;
    for (const auto& [id, score] : scored) {
        auto& cs = st.candidates.at(by_id.at(id));
        if (winner_set.count(id)) {
            cs.candidate.advance(Stage::Final);
            // Re-stamp the bundle so the exported copy matches the pool record.
            ProblemBundle bundle = load_bundle(bundles_dir() / id);
            bundle.candidate = cs.candidate;
            save_bundle(bundle, bundles_dir() / id);
            // A resumed finalize may find the pool already extended.
            if (!pool.contains(id)) fresh.push_back(cs.candidate);
        } else {
            cs.candidate.discard(DiscardReason::FinalRank);
        }
    }
    if (!fresh.empty()) pool.extend(fresh);
    save_pool(pool, pool_dir());

    RoundReport report;
    report.round = st.round;
    report.pool_before = st.pool_before;
    report.pool_after = static_cast<int>(pool.size());
    StageCounts& n = report.counts;
    n.sampled = static_cast<int>(st.draws.size());
    n.mutation_failed = static_cast<int>(st.mutation_failed_parents.size());
    n.mutated = static_cast<int>(st.candidates.size());
    for (const auto& cs : st.candidates) {
        bool dropped = cs.candidate.discarded();
        DiscardReason why = cs.candidate.discard_reason;
        if (dropped && why == DiscardReason::Coarse) { n.coarse_rejected++; continue; }
        n.coarse_accepted++;
        if (dropped && why == DiscardReason::Sampling) { n.sampling_failed++; continue; }
        n.sampling_ok++;
        if (dropped && why == DiscardReason::DivergenceRank) { n.divergence_dropped++; continue; }
        n.divergence_kept++;
        if (dropped && why == DiscardReason::CrossValidation) { n.validation_failed++; continue; }
        if (dropped && why == DiscardReason::Infrastructure) { n.infrastructure++; continue; }
        n.validated++;
        if (dropped && why == DiscardReason::FinalRank) { n.final_dropped++; continue; }
        n.final_kept++;
    }
    n.check_conserved();

    for (const auto& d : st.draws) report.sampled_parents.push_back(d.parent.id);
    report.mutation_failed_parents = st.mutation_failed_parents;
    for (const auto& cs : st.candidates) {
        CandidateOutcome o;
        o.id = cs.candidate.id;
        o.parent_id = cs.candidate.lineage.seed_id;
        o.stage = cs.candidate.stage;
        o.discard_reason = cs.candidate.discard_reason;
        o.llm_divergence = cs.candidate.llm_divergence;
        o.exec_divergence = cs.candidate.exec_divergence;
        o.classified_open =
            o.llm_divergence && classify_open_ended(*o.llm_divergence, config_.classifier_threshold);
        o.validation_rounds = cs.cv_rounds;
        report.candidates.push_back(std::move(o));
    }
    std::sort(report.candidates.begin(), report.candidates.end(),
              [](const CandidateOutcome& a, const CandidateOutcome& b) { return a.id < b.id; });
    report.usage = st.usage;
    report.gateway_calls = st.gateway_calls;

    std::filesystem::create_directories(round_dir(st.round));
    write_text_file_atomic(round_dir(st.round) / "report.json",
                           canonical_report(report).dump(2) + "\n");
    write_state(st.round);
    std::filesystem::remove(round_dir(st.round) / "checkpoint.json");
    return report;
}

// ─── Export ───────────────────────────────────────────────────────

ExportResult export_problems(const SeedPool& pool, const std::filesystem::path& bundles_root,
                             const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;
    std::vector<const SeedPool::Entry*> finals;
    for (const auto& entry : pool.entries())
        if (entry.candidate.stage == Stage::Final) finals.push_back(&entry);

    fs::create_directories(out_dir);
    // The export directory is owned entirely by this routine; stale problem
    // directories from an earlier pool state would corrupt the index.
    fs::remove_all(out_dir / "problems");
    fs::create_directories(out_dir / "problems");

    json listed = json::array();
    for (const auto* entry : finals) {
        const ProblemCandidate& c = entry->candidate;
        fs::path src = bundles_root / c.id;
        if (!fs::exists(src))
            throw ValidationError("pool lists " + c.id + " as final but no bundle exists under " +
                                  bundles_root.string());
        ProblemBundle bundle = load_bundle(src);
        save_bundle(bundle, out_dir / "problems" / c.id);
        listed.push_back(json{{"id", c.id},
                              {"statementHash", content_hash(c.statement)},
                              {"llmDivergence", *c.llm_divergence},
                              {"execDivergence", *c.exec_divergence}});
    }
    json manifest{{"count", static_cast<int>(finals.size())}, {"problems", listed}};

    ExportResult result;
    result.exported = static_cast<int>(finals.size());
    result.manifest_path = out_dir / "manifest.json";
    write_text_file_atomic(result.manifest_path, manifest.dump(2) + "\n");
    return result;
}

}  // namespace forge
