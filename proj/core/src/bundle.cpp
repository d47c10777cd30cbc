#include "forge/bundle.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace forge {

namespace fs = std::filesystem;
using nlohmann::json;

void ProblemBundle::validate() const {
    candidate.validate();
    suite.validate();
    verifier.validate();
    if (trim(generator.source).empty()) throw ValidationError("bundle: generator program is empty");
    if (offset < 1.0) throw ValidationError("bundle: positivity offset below 1 is impossible");
    if (rounds_used < 1) throw ValidationError("bundle: rounds_used must be >= 1");
}

std::string guest_extension(const std::string& toolchain) {
    if (toolchain == "python") return ".py";
    if (toolchain == "cpp") return ".cpp";
    return "." + toolchain;
}

namespace {

std::string dump_stable(const json& j) { return j.dump(2) + "\n"; }

std::string input_filename(int index) {
    std::ostringstream name;
    name << "input_" << std::setw(3) << std::setfill('0') << index << ".txt";
    return name.str();
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ValidationError("bundle: cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

void save_bundle(const ProblemBundle& bundle, const fs::path& dir) {
    bundle.validate();
    fs::create_directories(dir / "suite");
    fs::create_directories(dir / "verifier");

    write_text_file_atomic(dir / "statement.md", bundle.candidate.statement);

    json metadata;
    metadata["candidate"] = bundle.candidate;
    metadata["offset"] = bundle.offset;
    metadata["roundsUsed"] = bundle.rounds_used;
    write_text_file_atomic(dir / "metadata.json", dump_stable(metadata));

    write_text_file_atomic(dir / "limits.json", dump_stable(json(bundle.suite.limits)));

    json provenance = json::array();
    for (int t = 0; t < bundle.suite.size(); ++t) {
        const TestInput& input = bundle.suite.inputs[static_cast<size_t>(t)];
        write_text_file_atomic(dir / "suite" / input_filename(t), input.text);
        provenance.push_back(input.provenance);
    }
    write_text_file_atomic(dir / "suite" / "provenance.json", dump_stable(provenance));

    json vmeta;
    vmeta["mode"] = to_string(bundle.verifier.mode);
    vmeta["scorerToolchain"] = bundle.verifier.scorer.toolchain;
    if (bundle.verifier.baseline) vmeta["baselineToolchain"] = bundle.verifier.baseline->toolchain;
    vmeta["generatorToolchain"] = bundle.generator.toolchain;
    write_text_file_atomic(dir / "verifier" / "verifier.json", dump_stable(vmeta));

    write_text_file_atomic(
        dir / "verifier" / ("scorer" + guest_extension(bundle.verifier.scorer.toolchain)),
        bundle.verifier.scorer.source);
    if (bundle.verifier.baseline)
        write_text_file_atomic(
            dir / "verifier" / ("baseline" + guest_extension(bundle.verifier.baseline->toolchain)),
            bundle.verifier.baseline->source);
    write_text_file_atomic(
        dir / "verifier" / ("generator" + guest_extension(bundle.generator.toolchain)),
        bundle.generator.source);
}

ProblemBundle load_bundle(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw ValidationError("bundle directory not found: " + dir.string());
    ProblemBundle bundle;

    json metadata = json::parse(read_file(dir / "metadata.json"));
    bundle.candidate = metadata.at("candidate").get<ProblemCandidate>();
    bundle.offset = metadata.at("offset").get<double>();
    bundle.rounds_used = metadata.at("roundsUsed").get<int>();

    std::string statement = read_file(dir / "statement.md");
    if (statement != bundle.candidate.statement)
        throw ValidationError("bundle " + dir.string() +
                              ": statement.md disagrees with metadata.json");

    bundle.suite.limits = json::parse(read_file(dir / "limits.json")).get<ExecLimits>();
    json provenance = json::parse(read_file(dir / "suite" / "provenance.json"));
    for (int t = 0; t < static_cast<int>(provenance.size()); ++t) {
        TestInput input;
        input.text = read_file(dir / "suite" / input_filename(t));
        input.provenance = provenance.at(static_cast<size_t>(t)).get<std::string>();
        bundle.suite.inputs.push_back(std::move(input));
    }

    json vmeta = json::parse(read_file(dir / "verifier" / "verifier.json"));
    bundle.verifier.mode = verifier_mode_from_string(vmeta.at("mode").get<std::string>());
    bundle.verifier.scorer.toolchain = vmeta.at("scorerToolchain").get<std::string>();
    bundle.verifier.scorer.source = read_file(
        dir / "verifier" / ("scorer" + guest_extension(bundle.verifier.scorer.toolchain)));
    if (vmeta.contains("baselineToolchain")) {
        GuestProgram baseline;
        baseline.toolchain = vmeta.at("baselineToolchain").get<std::string>();
        baseline.source =
            read_file(dir / "verifier" / ("baseline" + guest_extension(baseline.toolchain)));
        bundle.verifier.baseline = std::move(baseline);
    }
    bundle.generator.toolchain = vmeta.at("generatorToolchain").get<std::string>();
    bundle.generator.source = read_file(
        dir / "verifier" / ("generator" + guest_extension(bundle.generator.toolchain)));

    bundle.validate();
    return bundle;
}

}  // namespace forge
