#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "forge/sandbox.hpp"

namespace forge {

// One test input plus where it came from, so a suite can be audited and
// regenerated. Provenance strings look like "generator:3" or "manual".
struct TestInput {
    std::string text;
    std::string provenance;

    friend bool operator==(const TestInput&, const TestInput&) = default;
};

struct TestSuite {
    std::vector<TestInput> inputs;
    ExecLimits limits;  // applied to every solution run on this suite

    int size() const { return static_cast<int>(inputs.size()); }

    /// A usable suite has at least one input and no blank entries.
    void validate() const;
};

void to_json(nlohmann::json& j, const TestInput& t);
void from_json(const nlohmann::json& j, TestInput& t);
void to_json(nlohmann::json& j, const ExecLimits& l);
void from_json(const nlohmann::json& j, ExecLimits& l);

}  // namespace forge
