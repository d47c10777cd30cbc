#include "forge/problem.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace forge {

std::string to_string(Direction d) {
    switch (d) {
        case Direction::Maximize: return "maximize";
        case Direction::Minimize: return "minimize";
        case Direction::None: return "none";
    }
    return "none";
}

Direction direction_from_string(const std::string& s) {
    if (s == "maximize") return Direction::Maximize;
    if (s == "minimize") return Direction::Minimize;
    if (s == "none") return Direction::None;
    throw ValidationError("unknown direction: " + s);
}

void Formulation::validate(bool is_seed) const {
    if (trim(objective).empty()) throw ValidationError("formulation: objective is empty");
    if (trim(input_domain).empty()) throw ValidationError("formulation: input domain is empty");
    if (trim(output_constraints).empty())
        throw ValidationError("formulation: output constraints are empty");
    if (!is_seed && direction == Direction::None)
        throw ValidationError(
            "formulation: mutated candidates must carry a maximize or minimize direction");
}

std::string to_string(MutationKind k) {
    switch (k) {
        case MutationKind::ChangeGoal: return "change-goal";
        case MutationKind::RestrictOutputs: return "restrict-outputs";
        case MutationKind::GeneralizeInputs: return "generalize-inputs";
    }
    return "?";
}

MutationKind mutation_kind_from_string(const std::string& s) {
    if (s == "change-goal") return MutationKind::ChangeGoal;
    if (s == "restrict-outputs") return MutationKind::RestrictOutputs;
    if (s == "generalize-inputs") return MutationKind::GeneralizeInputs;
    throw ValidationError("unknown mutation kind: " + s);
}

void Lineage::validate(bool is_seed) const {
    if (is_seed) {
        if (!seed_id.empty() || !kinds.empty())
            throw ValidationError("lineage: corpus seeds carry no parent or mutation kinds");
        return;
    }
    if (seed_id.empty()) throw ValidationError("lineage: missing seed id");
    if (kinds.empty()) throw ValidationError("lineage: at least one mutation kind required");
    std::set<MutationKind> seen(kinds.begin(), kinds.end());
    if (seen.size() != kinds.size())
        throw ValidationError("lineage: duplicate mutation kinds");
    if (round < 1) throw ValidationError("lineage: round must be >= 1 for mutated candidates");
}

std::string Lineage::describe() const {
    std::ostringstream out;
    out << seed_id << " +[";
    for (size_t i = 0; i < kinds.size(); ++i) {
        if (i) out << ",";
        out << to_string(kinds[i]);
    }
    out << "] r" << round;
    return out.str();
}

std::string to_string(Stage s) {
    switch (s) {
        case Stage::Seed: return "seed";
        case Stage::Mutated: return "mutated";
        case Stage::CoarseAccepted: return "coarse-accepted";
        case Stage::DivergenceRanked: return "divergence-ranked";
        case Stage::InfraValidated: return "infra-validated";
        case Stage::Final: return "final";
        case Stage::Discarded: return "discarded";
    }
    return "?";
}

Stage stage_from_string(const std::string& s) {
    if (s == "seed") return Stage::Seed;
    if (s == "mutated") return Stage::Mutated;
    if (s == "coarse-accepted") return Stage::CoarseAccepted;
    if (s == "divergence-ranked") return Stage::DivergenceRanked;
    if (s == "infra-validated") return Stage::InfraValidated;
    if (s == "final") return Stage::Final;
    if (s == "discarded") return Stage::Discarded;
    throw ValidationError("unknown stage: " + s);
}

std::string to_string(DiscardReason r) {
    switch (r) {
        case DiscardReason::None: return "none";
        case DiscardReason::Coarse: return "coarse";
        case DiscardReason::Sampling: return "sampling";
        case DiscardReason::DivergenceRank: return "divergence-rank";
        case DiscardReason::CrossValidation: return "cross-validation";
        case DiscardReason::Infrastructure: return "infrastructure";
        case DiscardReason::FinalRank: return "final-rank";
    }
    return "?";
}

DiscardReason discard_reason_from_string(const std::string& s) {
    if (s == "none") return DiscardReason::None;
    if (s == "coarse") return DiscardReason::Coarse;
    if (s == "sampling") return DiscardReason::Sampling;
    if (s == "divergence-rank") return DiscardReason::DivergenceRank;
    if (s == "cross-validation") return DiscardReason::CrossValidation;
    if (s == "infrastructure") return DiscardReason::Infrastructure;
    if (s == "final-rank") return DiscardReason::FinalRank;
    throw ValidationError("unknown discard reason: " + s);
}

int stage_rank(Stage s) {
    switch (s) {
        case Stage::Seed: return 0;
        case Stage::Mutated: return 1;
        case Stage::CoarseAccepted: return 2;
        case Stage::DivergenceRanked: return 3;
        case Stage::InfraValidated: return 4;
        case Stage::Final: return 5;
        case Stage::Discarded:
            throw ValidationError("stage_rank: Discarded is outside the pipeline order");
    }
    return -1;
}

void ProblemCandidate::advance(Stage next) {
    if (stage == Stage::Discarded)
        throw ValidationError("candidate " + id + ": Discarded is terminal");
    if (next == Stage::Discarded)
        throw ValidationError("candidate " + id + ": use discard(reason)");
    if (stage_rank(next) <= stage_rank(stage))
        throw ValidationError("candidate " + id + ": stage regression " + to_string(stage) +
                              " -> " + to_string(next));
    stage = next;
}

void ProblemCandidate::discard(DiscardReason reason) {
    if (stage == Stage::Discarded)
        throw ValidationError("candidate " + id + ": already discarded");
    if (reason == DiscardReason::None)
        throw ValidationError("candidate " + id + ": discard requires a reason");
    stage = Stage::Discarded;
    discard_reason = reason;
}

void ProblemCandidate::set_llm_divergence(double d) {
    if (d < 0.0 || d > 1.0) throw ValidationError("llm divergence outside [0,1]");
    llm_divergence = d;
}

void ProblemCandidate::set_exec_divergence(double d) {
    if (d < 0.0 || d > 1.0) throw ValidationError("exec divergence outside [0,1]");
    exec_divergence = d;
}

void ProblemCandidate::validate() const {
    if (id.empty()) throw ValidationError("candidate: empty id");
    if (trim(statement).empty()) throw ValidationError("candidate " + id + ": empty statement");
    bool seed = lineage.seed_id.empty();
    lineage.validate(seed);
    if (!formulation.objective.empty() || stage != Stage::Seed) formulation.validate(seed);
    if (stage != Stage::Discarded) {
        int rank = stage_rank(stage);
        if (llm_divergence.has_value() != (rank >= stage_rank(Stage::DivergenceRanked)))
            throw ValidationError("candidate " + id +
                                  ": llm divergence set iff stage >= divergence-ranked");
        if (exec_divergence.has_value() != (rank >= stage_rank(Stage::InfraValidated)))
            throw ValidationError("candidate " + id +
                                  ": exec divergence set iff stage >= infra-validated");
    } else if (discard_reason == DiscardReason::None) {
        throw ValidationError("candidate " + id + ": discarded without a reason");
    }
}

std::string candidate_id(const std::string& statement, const Lineage& lineage) {
    std::string blob = statement;
    blob += '\x1f';
    blob += lineage.seed_id;
    for (auto k : lineage.kinds) {
        blob += '\x1f';
        blob += to_string(k);
    }
    blob += '\x1f';
    blob += std::to_string(lineage.round);
    return content_hash(blob);
}

ProblemCandidate make_seed(std::string id, std::string statement, Formulation formulation) {
    ProblemCandidate c;
    c.statement = std::move(statement);
    c.formulation = std::move(formulation);
    c.id = id.empty() ? "seed-" + candidate_id(c.statement, {}) : std::move(id);
    c.stage = Stage::Seed;
    return c;
}

void to_json(nlohmann::json& j, const Formulation& f) {
    j = nlohmann::json{{"objective", f.objective},
                       {"direction", to_string(f.direction)},
                       {"inputDomain", f.input_domain},
                       {"outputConstraints", f.output_constraints}};
}

void from_json(const nlohmann::json& j, Formulation& f) {
    f.objective = j.at("objective").get<std::string>();
    f.direction = direction_from_string(j.at("direction").get<std::string>());
    f.input_domain = j.at("inputDomain").get<std::string>();
    f.output_constraints = j.at("outputConstraints").get<std::string>();
}

void to_json(nlohmann::json& j, const Lineage& l) {
    nlohmann::json kinds = nlohmann::json::array();
    for (auto k : l.kinds) kinds.push_back(to_string(k));
    j = nlohmann::json{{"seedId", l.seed_id}, {"kinds", kinds}, {"round", l.round}};
}

void from_json(const nlohmann::json& j, Lineage& l) {
    l.seed_id = j.at("seedId").get<std::string>();
    l.kinds.clear();
    for (const auto& k : j.at("kinds")) l.kinds.push_back(mutation_kind_from_string(k.get<std::string>()));
    l.round = j.at("round").get<int>();
}

void to_json(nlohmann::json& j, const ProblemCandidate& c) {
    j = nlohmann::json{{"id", c.id},
                       {"statement", c.statement},
                       {"formulation", c.formulation},
                       {"lineage", c.lineage},
                       {"stage", to_string(c.stage)},
                       {"discardReason", to_string(c.discard_reason)}};
    j["llmDivergence"] = c.llm_divergence.has_value() ? nlohmann::json(*c.llm_divergence)
                                                      : nlohmann::json(nullptr);
    j["execDivergence"] = c.exec_divergence.has_value() ? nlohmann::json(*c.exec_divergence)
                                                        : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, ProblemCandidate& c) {
    c.id = j.at("id").get<std::string>();
    c.statement = j.at("statement").get<std::string>();
    c.formulation = j.at("formulation").get<Formulation>();
    c.lineage = j.at("lineage").get<Lineage>();
    c.stage = stage_from_string(j.at("stage").get<std::string>());
    c.discard_reason = discard_reason_from_string(j.at("discardReason").get<std::string>());
    c.llm_divergence.reset();
    c.exec_divergence.reset();
    if (j.contains("llmDivergence") && !j.at("llmDivergence").is_null())
        c.llm_divergence = j.at("llmDivergence").get<double>();
    if (j.contains("execDivergence") && !j.at("execDivergence").is_null())
        c.exec_divergence = j.at("execDivergence").get<double>();
}

}  // namespace forge
