// Prompt template loading. Templates live as plain .txt files in one
// directory so they can be reviewed and edited without touching code.

#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "forge/common.hpp"

namespace forge {

class TemplateSet {
public:
    // Reads every *.txt in dir; the template name is the file stem.
    static TemplateSet load(const std::filesystem::path& dir);

    // Resolves the directory from FORGE_TEMPLATES.
    static TemplateSet load_default();

    const std::string& raw(const std::string& name) const;
    std::string render(const std::string& name,
                       const std::map<std::string, std::string>& vars) const;

    size_t size() const { return texts_.size(); }

private:
    std::map<std::string, std::string> texts_;
};

}  // namespace forge
