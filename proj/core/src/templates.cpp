#include "forge/templates.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace forge {

namespace fs = std::filesystem;

TemplateSet TemplateSet::load(const fs::path& dir) {
    if (!fs::is_directory(dir))
        throw ConfigError("template directory not found: " + dir.string());
    TemplateSet set;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
        std::ifstream in(entry.path(), std::ios::binary);
        if (!in) throw ConfigError("cannot read template: " + entry.path().string());
        std::ostringstream ss;
        ss << in.rdbuf();
        set.texts_[entry.path().stem().string()] = ss.str();
    }
    if (set.texts_.empty())
        throw ConfigError("no .txt templates in " + dir.string());
    return set;
}

TemplateSet TemplateSet::load_default() {
    const char* dir = std::getenv("FORGE_TEMPLATES");
    if (!dir || !*dir)
        throw ConfigError("FORGE_TEMPLATES is not set; point it at the prompt template directory");
    return load(dir);
}

const std::string& TemplateSet::raw(const std::string& name) const {
    auto it = texts_.find(name);
    if (it == texts_.end()) throw ConfigError("unknown template: " + name);
    return it->second;
}

std::string TemplateSet::render(const std::string& name,
                                const std::map<std::string, std::string>& vars) const {
    return render_template(raw(name), vars);
}

}  // namespace forge
