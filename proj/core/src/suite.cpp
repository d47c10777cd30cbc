#include "forge/suite.hpp"

namespace forge {

using nlohmann::json;

void TestSuite::validate() const {
    if (inputs.empty()) throw ValidationError("test suite has no inputs");
    for (size_t i = 0; i < inputs.size(); ++i)
        if (trim(inputs[i].text).empty())
            throw ValidationError("test input " + std::to_string(i) + " is blank");
    limits.validate();
}

void to_json(json& j, const TestInput& t) {
    j = json{{"provenance", t.provenance}, {"text", t.text}};
}

void from_json(const json& j, TestInput& t) {
    t.text = j.at("text").get<std::string>();
    t.provenance = j.at("provenance").get<std::string>();
}

void to_json(json& j, const ExecLimits& l) {
    j = json{{"memoryBytes", l.memory_bytes}, {"wallSeconds", l.wall_seconds}};
}

void from_json(const json& j, ExecLimits& l) {
    l.wall_seconds = j.at("wallSeconds").get<double>();
    l.memory_bytes = j.at("memoryBytes").get<long long>();
}

}  // namespace forge
