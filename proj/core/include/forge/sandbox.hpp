// Process sandbox: compiles and runs untrusted guest programs under wall
// clock, address space, and output size limits. Guest misbehavior becomes a
// status; only the harness's own failures raise InfraError.

#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "forge/common.hpp"

namespace forge {

enum class ExecStatus {
    Ok,               // ran to completion and exited on its own
    Timeout,          // we had to terminate it at the wall deadline
    Crash,            // died on a signal
    MemoryExceeded,   // failed with peak memory at the address space limit
    OutputUnparseable // set by scoring layers, never by the sandbox itself
};

std::string to_string(ExecStatus s);
ExecStatus exec_status_from_string(const std::string& s);

struct ExecLimits {
    double wall_seconds = 3.0;
    long long memory_bytes = 512ll << 20;

    void validate() const;
};

struct ExecResult {
    ExecStatus status = ExecStatus::Ok;
    int exit_code = 0;          // meaningful only for status Ok
    std::string stdout_text;    // captured only for status Ok
    std::string stderr_tail;    // last few KB, for diagnostics
    double elapsed_seconds = 0.0;

    bool ran_clean() const { return status == ExecStatus::Ok && exit_code == 0; }
};

// How long a terminated guest gets between SIGTERM and SIGKILL. Measured
// elapsed time never exceeds wall_seconds + kKillGraceSeconds by more than
// scheduler noise, and callers may rely on wall + 0.5s as a hard bound.
inline constexpr double kKillGraceSeconds = 0.25;

inline constexpr long long kStdoutCapBytes = 64ll << 20;
inline constexpr size_t kStderrTailBytes = 64 << 10;

// ─── Toolchains ───────────────────────────────────────────────────
// Command templates; {src} is the guest source path, {out} the artifact
// path produced by the compile step.

struct Toolchain {
    std::string name;
    std::string extension;               // includes the dot, e.g. ".py"
    std::vector<std::string> compile;    // empty for interpreted languages
    std::vector<std::string> run;

    void validate() const;
};

std::vector<Toolchain> default_toolchains();
std::vector<Toolchain> load_toolchains(const std::filesystem::path& json_path);

// ─── Programs ─────────────────────────────────────────────────────

struct CompiledProgram {
    std::string toolchain;
    std::string source_hash;
    std::vector<std::string> argv_prefix;  // resolved run command
};

struct CompileOutcome {
    bool ok = false;
    CompiledProgram program;  // valid only when ok
    std::string log;          // compiler diagnostics when !ok
    bool cache_hit = false;
};

// ─── Sandbox ──────────────────────────────────────────────────────

struct SandboxOptions {
    std::filesystem::path scratch_root;  // empty: under the system temp dir
    int workers = 4;                     // parallelism hint for callers
};

class Sandbox {
public:
    using Options = SandboxOptions;

    explicit Sandbox(std::vector<Toolchain> toolchains = default_toolchains(),
                     Options options = {});
    ~Sandbox();

    Sandbox(const Sandbox&) = delete;
    Sandbox& operator=(const Sandbox&) = delete;

    /// Prepares `source` for execution. Compilation results are cached by
    /// content hash, so repeat submissions are free. A failed compile is a
    /// guest problem and lands in the outcome, not an exception.
    CompileOutcome compile(const std::string& toolchain_name, const std::string& source);

    /// Runs a prepared program. `args` go after the run command; stdin_text
    /// feeds fd 0. Harness failures are retried once, then raise InfraError.
    ExecResult run(const CompiledProgram& program, const std::vector<std::string>& args,
                   const std::string& stdin_text, const ExecLimits& limits);

    const Toolchain& toolchain(const std::string& name) const;
    bool has_toolchain(const std::string& name) const;

    int workers() const { return options_.workers; }
    const std::filesystem::path& scratch_root() const { return options_.scratch_root; }

private:
    ExecResult run_once(const CompiledProgram& program, const std::vector<std::string>& args,
                        const std::string& stdin_text, const ExecLimits& limits);

    std::map<std::string, Toolchain> toolchains_;
    Options options_;
    std::filesystem::path cache_dir_;
    std::mutex cache_mu_;
    std::map<std::string, CompileOutcome> cache_;
};

}  // namespace forge
