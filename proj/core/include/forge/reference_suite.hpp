#pragma once

#include <cstdint>
#include <string>

#include "forge/suite.hpp"

namespace forge {

// Harness-facing wrapper around the built-in reference problems: tiny
// deterministic test suites, problem statements for bundling, and guest
// program sources so the same checkers also run inside the sandbox.

enum class ReferenceProblem { Concat, Village };

std::string to_string(ReferenceProblem p);
ReferenceProblem reference_problem_from_string(const std::string& s);

/// `count` deterministic instances; every instance satisfies the problem's
/// published input constraints.
TestSuite generate_tiny_instances(ReferenceProblem p, uint64_t seed, int count);

/// Full statement text used when packaging the built-in problems.
std::string reference_statement(ReferenceProblem p);

/// Largest score the problem's own scale can produce; used to normalize
/// per-test scores into [0,1].
double reference_score_scale(ReferenceProblem p);

/// The standalone checker header, embedded at build time, written next to
/// generated guest sources so they compile with a single -I.
const char* embedded_reference_header();

/// Guest verifier: argv = {input path, output path}; prints the score on
/// stdout. Exit 0 = scored, 1 = submission rejected, 2 = input malformed.
std::string reference_verifier_guest_source(ReferenceProblem p);

/// Guest solution (strategy "baseline" or "greedy"): reads the instance on
/// stdin, writes a submission on stdout.
std::string reference_solution_guest_source(ReferenceProblem p, const std::string& strategy);

}  // namespace forge
