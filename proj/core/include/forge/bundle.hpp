// On-disk form of a finished problem: statement, test suite, verifier, and
// the numbers needed to reproduce its scores. Serialization is bit-stable:
// saving what load_bundle read yields identical bytes.

#pragma once

#include <filesystem>

#include "forge/problem.hpp"
#include "forge/suite.hpp"
#include "forge/verifier.hpp"

namespace forge {

struct ProblemBundle {
    ProblemCandidate candidate;
    TestSuite suite;
    VerifierProgram verifier;
    GuestProgram generator;  // the program that produced the suite
    double offset = 0.0;     // positivity shift used during scoring
    int rounds_used = 0;     // cross-validation rounds until convergence

    void validate() const;
};

/// Source file extension for a toolchain name ("python" -> ".py").
std::string guest_extension(const std::string& toolchain);

void save_bundle(const ProblemBundle& bundle, const std::filesystem::path& dir);
ProblemBundle load_bundle(const std::filesystem::path& dir);

}  // namespace forge
