#include "forge/mutation.hpp"

#include <sstream>

namespace forge {

std::vector<MutationKind> sample_kind_subset(Rng& rng) {
    // Subsets are numbered 1..7 as bitmasks over the three kinds.
    uint64_t mask = rng.below(7) + 1;
    std::vector<MutationKind> kinds;
    if (mask & 1) kinds.push_back(MutationKind::ChangeGoal);
    if (mask & 2) kinds.push_back(MutationKind::RestrictOutputs);
    if (mask & 4) kinds.push_back(MutationKind::GeneralizeInputs);
    return kinds;
}

std::string describe_kinds(const std::vector<MutationKind>& kinds) {
    std::string out;
    for (const auto& k : kinds) {
        if (!out.empty()) out += ", ";
        out += to_string(k);
    }
    return out;
}

Mutator::Mutator(Gateway& gateway, const TemplateSet& templates, int reasks)
    : gateway_(gateway), templates_(templates), reasks_(reasks) {
    if (reasks_ < 0) throw ConfigError("re-ask budget must be non-negative");
}

static ChatRequest make_chat(Purpose purpose, std::string prompt) {
    ChatRequest r;
    r.purpose = purpose;
    r.messages = {{"user", std::move(prompt)}};
    return r;
}

Formulation Mutator::extract_formulation(const std::string& statement) {
    ChatRequest request = make_chat(Purpose::Mutate,
                                    templates_.render("extract_formulation", {{"statement", statement}}));
    Formulation f;
    ask_until(gateway_, request, reasks_, [&f](const std::string& reply) -> std::string {
        auto objective = find_field(reply, "objective");
        auto direction = find_field(reply, "direction");
        auto domain = find_field(reply, "input domain");
        auto constraints = find_field(reply, "output constraints");
        if (!objective || objective->empty()) return "missing objective line";
        if (!direction || direction->empty()) return "missing direction line";
        if (!domain || domain->empty()) return "missing input domain line";
        if (!constraints || constraints->empty()) return "missing output constraints line";
        try {
            f.direction = direction_from_string(*direction);
        } catch (const ValidationError&) {
            return "direction must be maximize, minimize, or none";
        }
        f.objective = *objective;
        f.input_domain = *domain;
        f.output_constraints = *constraints;
        return "";
    });
    return f;
}

ProblemCandidate Mutator::mutate(const ProblemCandidate& parent,
                                 const std::vector<MutationKind>& kinds, int round) {
    if (kinds.empty()) throw ValidationError("mutation needs at least one kind");
    if (parent.discarded()) throw ValidationError("cannot mutate a discarded candidate");

    Formulation current = parent.formulation;
    if (current.objective.empty()) current = extract_formulation(parent.statement);

    ChatRequest request = make_chat(
        Purpose::Mutate,
        templates_.render("mutate", {{"kinds", describe_kinds(kinds)},
                                     {"statement", parent.statement},
                                     {"objective", current.objective},
                                     {"direction", to_string(current.direction)},
                                     {"input_domain", current.input_domain},
                                     {"output_constraints", current.output_constraints}}));

    ProblemCandidate child;
    ask_until(gateway_, request, reasks_, [&child](const std::string& reply) -> std::string {
        std::string statement = extract_tag(reply, "candidate");
        if (statement.empty()) return "missing <candidate> block";
        auto objective = find_field(reply, "objective");
        auto direction = find_field(reply, "direction");
        auto domain = find_field(reply, "input domain");
        auto constraints = find_field(reply, "output constraints");
        if (!objective || objective->empty()) return "missing objective line";
        if (!domain || domain->empty()) return "missing input domain line";
        if (!constraints || constraints->empty()) return "missing output constraints line";
        if (!direction) return "missing direction line";
        Direction dir;
        try {
            dir = direction_from_string(*direction);
        } catch (const ValidationError&) {
            return "direction must be maximize or minimize";
        }
        if (dir == Direction::None)
            return "an open-ended rewrite must pick maximize or minimize";
        child.statement = statement;
        child.formulation = {*objective, dir, *domain, *constraints};
        return "";
    });

    child.lineage.seed_id = parent.id;
    child.lineage.kinds = kinds;
    child.lineage.round = round;
    child.stage = Stage::Mutated;
    child.id = candidate_id(child.statement, child.lineage);
    child.validate();
    return child;
}

CoarseVerdict Mutator::coarse_filter(const ProblemCandidate& candidate) {
    ChatRequest request = make_chat(Purpose::CoarseFilter,
                                    templates_.render("coarse_filter", {{"statement", candidate.statement}}));

    auto parse_yes_no = [](const std::string& reply, const char* key) -> std::optional<bool> {
        auto value = find_field(reply, key);
        if (!value) return std::nullopt;
        std::string v = trim(*value);
        // Accept "yes - reason" shapes; only the leading token counts.
        if (contains_ci(v.substr(0, 3), "yes")) return true;
        if (contains_ci(v.substr(0, 2), "no")) return false;
        return std::nullopt;
    };

    CoarseVerdict verdict;
    try {
        verdict.reply = ask_until(gateway_, request, reasks_, [&](const std::string& reply) -> std::string {
            if (!parse_yes_no(reply, "open_objective")) return "missing open_objective answer";
            if (!parse_yes_no(reply, "multiple_strategies")) return "missing multiple_strategies answer";
            if (!parse_yes_no(reply, "scorable")) return "missing scorable answer";
            return "";
        });
    } catch (const ValidationError&) {
        // Unusable answers reject the candidate rather than abort the run.
        verdict.reply = "unparseable screen reply; rejecting conservatively";
        return verdict;
    }
    verdict.open_objective = *parse_yes_no(verdict.reply, "open_objective");
    verdict.multiple_strategies = *parse_yes_no(verdict.reply, "multiple_strategies");
    verdict.scorable = *parse_yes_no(verdict.reply, "scorable");
    return verdict;
}

}  // namespace forge
