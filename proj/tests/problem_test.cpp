#include <doctest.h>

#include <json.hpp>

#include "forge/problem.hpp"

using namespace forge;
using nlohmann::json;

namespace {

ProblemCandidate mutated_candidate() {
    ProblemCandidate c;
    c.statement = "Given n items, pick a subset maximizing value under weight w.";
    c.formulation.objective = "total value of the chosen subset";
    c.formulation.direction = Direction::Maximize;
    c.formulation.input_domain = "n <= 1e5 items, weights and values up to 1e9";
    c.formulation.output_constraints = "indices of chosen items, total weight <= w";
    c.lineage.seed_id = "p1";
    c.lineage.kinds = {MutationKind::ChangeGoal};
    c.lineage.round = 1;
    c.id = candidate_id(c.statement, c.lineage);
    c.stage = Stage::Mutated;
    return c;
}

}  // namespace

TEST_CASE("stages advance forward only and discard is terminal") {
    auto c = mutated_candidate();
    c.advance(Stage::CoarseAccepted);
    CHECK(c.stage == Stage::CoarseAccepted);
    CHECK_THROWS_AS(c.advance(Stage::Mutated), ValidationError);
    CHECK_THROWS_AS(c.advance(Stage::CoarseAccepted), ValidationError);
    CHECK_THROWS_AS(c.advance(Stage::Discarded), ValidationError);

    c.discard(DiscardReason::CrossValidation);
    CHECK(c.stage == Stage::Discarded);
    CHECK(c.discard_reason == DiscardReason::CrossValidation);
    CHECK_THROWS_AS(c.advance(Stage::Final), ValidationError);
    CHECK_THROWS_AS(c.discard(DiscardReason::Coarse), ValidationError);

    auto d = mutated_candidate();
    CHECK_THROWS_AS(d.discard(DiscardReason::None), ValidationError);
}

TEST_CASE("divergence scores are range-checked and tied to stage") {
    auto c = mutated_candidate();
    CHECK_THROWS_AS(c.set_llm_divergence(-0.1), ValidationError);
    CHECK_THROWS_AS(c.set_exec_divergence(1.5), ValidationError);

    c.advance(Stage::CoarseAccepted);
    // A ranked candidate without a recorded score is inconsistent.
    c.advance(Stage::DivergenceRanked);
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.set_llm_divergence(13.0 / 15.0);
    c.validate();

    c.advance(Stage::InfraValidated);
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.set_exec_divergence(0.8);
    c.advance(Stage::Final);
    c.validate();
}

TEST_CASE("candidate ids are content addressed") {
    auto a = mutated_candidate();
    auto b = mutated_candidate();
    CHECK(a.id == b.id);
    CHECK(a.id.size() == 16);

    auto c = mutated_candidate();
    c.statement += " Tie-break by smallest index.";
    CHECK(candidate_id(c.statement, c.lineage) != a.id);

    auto d = mutated_candidate();
    d.lineage.round = 2;
    CHECK(candidate_id(d.statement, d.lineage) != a.id);

    auto e = mutated_candidate();
    e.lineage.kinds = {MutationKind::RestrictOutputs};
    CHECK(candidate_id(e.statement, e.lineage) != a.id);
}

TEST_CASE("seed lineage carries no parent and mutated lineage requires one") {
    auto seed = make_seed("p9", "Count inversions in an array.");
    CHECK(seed.is_seed());
    seed.validate();

    Lineage bad;
    bad.seed_id = "p1";
    bad.kinds = {};
    bad.round = 1;
    CHECK_THROWS_AS(bad.validate(false), ValidationError);

    Lineage dup;
    dup.seed_id = "p1";
    dup.kinds = {MutationKind::ChangeGoal, MutationKind::ChangeGoal};
    dup.round = 1;
    CHECK_THROWS_AS(dup.validate(false), ValidationError);

    Lineage r0;
    r0.seed_id = "p1";
    r0.kinds = {MutationKind::GeneralizeInputs};
    r0.round = 0;
    CHECK_THROWS_AS(r0.validate(false), ValidationError);
}

TEST_CASE("mutated candidates must state an optimization direction") {
    auto c = mutated_candidate();
    c.formulation.direction = Direction::None;
    CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("json round trip is lossless for a fully populated candidate") {
    auto c = mutated_candidate();
    c.advance(Stage::CoarseAccepted);
    c.advance(Stage::DivergenceRanked);
    c.set_llm_divergence(0.6);
    c.advance(Stage::InfraValidated);
    c.set_exec_divergence(0.80474);
    c.advance(Stage::Final);

    json j = c;
    auto back = j.get<ProblemCandidate>();
    CHECK(back.id == c.id);
    CHECK(back.statement == c.statement);
    CHECK(back.stage == Stage::Final);
    CHECK(back.lineage.describe() == c.lineage.describe());
    CHECK(back.llm_divergence == c.llm_divergence);
    CHECK(back.exec_divergence == c.exec_divergence);
    CHECK(json(back).dump(2) == j.dump(2));

    // Unset scores serialize as explicit nulls so files stay greppable.
    auto seed = make_seed("p3", "Sort the array.");
    json js = seed;
    CHECK(js.at("llmDivergence").is_null());
    CHECK(js.at("execDivergence").is_null());
    CHECK(js.get<ProblemCandidate>().llm_divergence.has_value() == false);
}

TEST_CASE("stage_rank orders the pipeline and rejects discarded") {
    CHECK(stage_rank(Stage::Seed) < stage_rank(Stage::Mutated));
    CHECK(stage_rank(Stage::Mutated) < stage_rank(Stage::CoarseAccepted));
    CHECK(stage_rank(Stage::CoarseAccepted) < stage_rank(Stage::DivergenceRanked));
    CHECK(stage_rank(Stage::DivergenceRanked) < stage_rank(Stage::InfraValidated));
    CHECK(stage_rank(Stage::InfraValidated) < stage_rank(Stage::Final));
    CHECK_THROWS_AS((void)stage_rank(Stage::Discarded), ValidationError);
}
