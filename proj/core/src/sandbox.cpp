#include "forge/sandbox.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace forge {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(ExecStatus s) {
    switch (s) {
        case ExecStatus::Ok: return "ok";
        case ExecStatus::Timeout: return "timeout";
        case ExecStatus::Crash: return "crash";
        case ExecStatus::MemoryExceeded: return "memory-exceeded";
        case ExecStatus::OutputUnparseable: return "output-unparseable";
    }
    throw ValidationError("unknown exec status");
}

ExecStatus exec_status_from_string(const std::string& s) {
    if (s == "ok") return ExecStatus::Ok;
    if (s == "timeout") return ExecStatus::Timeout;
    if (s == "crash") return ExecStatus::Crash;
    if (s == "memory-exceeded") return ExecStatus::MemoryExceeded;
    if (s == "output-unparseable") return ExecStatus::OutputUnparseable;
    throw ValidationError("unknown exec status: " + s);
}

void ExecLimits::validate() const {
    if (!(wall_seconds > 0)) throw ValidationError("wall limit must be positive");
    if (memory_bytes < (8ll << 20)) throw ValidationError("memory limit below 8 MiB is unusable");
}

void Toolchain::validate() const {
    if (name.empty()) throw ConfigError("toolchain needs a name");
    if (extension.empty() || extension[0] != '.')
        throw ConfigError("toolchain " + name + ": extension must start with a dot");
    if (run.empty()) throw ConfigError("toolchain " + name + ": run command is empty");
    bool uses_src = false;
    for (const auto& part : run)
        if (part.find("{src}") != std::string::npos || part.find("{out}") != std::string::npos)
            uses_src = true;
    if (!uses_src)
        throw ConfigError("toolchain " + name + ": run command references neither {src} nor {out}");
    if (!compile.empty()) {
        bool has_out = false;
        for (const auto& part : compile)
            if (part.find("{out}") != std::string::npos) has_out = true;
        if (!has_out)
            throw ConfigError("toolchain " + name + ": compile command must write {out}");
    }
}

std::vector<Toolchain> default_toolchains() {
    Toolchain python;
    python.name = "python";
    python.extension = ".py";
    python.run = {"python3", "{src}"};

    Toolchain cpp;
    cpp.name = "cpp";
    cpp.extension = ".cpp";
    cpp.compile = {"g++", "-O2", "-std=c++20", "-o", "{out}", "{src}"};
    cpp.run = {"{out}"};

    return {python, cpp};
}

std::vector<Toolchain> load_toolchains(const fs::path& json_path) {
    std::ifstream in(json_path);
    if (!in) throw ConfigError("cannot open toolchain config: " + json_path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError("toolchain config " + json_path.string() + ": " + e.what());
    }
    std::vector<Toolchain> chains;
    for (const auto& entry : doc.at("toolchains")) {
        Toolchain t;
        t.name = entry.at("name").get<std::string>();
        t.extension = entry.at("extension").get<std::string>();
        if (entry.contains("compile")) t.compile = entry.at("compile").get<std::vector<std::string>>();
        t.run = entry.at("run").get<std::vector<std::string>>();
        t.validate();
        chains.push_back(std::move(t));
    }
    if (chains.empty()) throw ConfigError("toolchain config lists no toolchains");
    return chains;
}

// ─── Process plumbing ─────────────────────────────────────────────

namespace {

std::atomic<uint64_t> g_run_counter{0};

std::string substitute(const std::string& part, const std::string& src, const std::string& out) {
    std::string result = part;
    for (const auto& [key, value] : {std::pair{std::string("{src}"), src}, {std::string("{out}"), out}}) {
        size_t pos;
        while ((pos = result.find(key)) != std::string::npos) result.replace(pos, key.size(), value);
    }
    return result;
}

/// PATH lookup done in the parent so the child can use execv directly.
std::string resolve_executable(const std::string& command) {
    if (command.find('/') != std::string::npos) {
        if (::access(command.c_str(), X_OK) == 0) return command;
        throw InfraError("executable not found: " + command);
    }
    const char* path = std::getenv("PATH");
    std::istringstream dirs(path ? path : "/usr/local/bin:/usr/bin:/bin");
    std::string dir;
    while (std::getline(dirs, dir, ':')) {
        if (dir.empty()) continue;
        std::string full = dir + "/" + command;
        if (::access(full.c_str(), X_OK) == 0) return full;
    }
    throw InfraError("executable not found on PATH: " + command);
}

// A file that grew to the cap was cut off by RLIMIT_FSIZE (the guest saw
// EFBIG or SIGXFSZ), so reaching the cap already means truncation.
std::string read_file_checked(const fs::path& p, long long cap, bool& over_cap) {
    std::error_code ec;
    auto size = fs::file_size(p, ec);
    if (ec) throw InfraError("cannot stat " + p.string());
    over_cap = static_cast<long long>(size) >= cap;
    if (over_cap) return "";
    std::ifstream in(p, std::ios::binary);
    if (!in) throw InfraError("cannot read back " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string read_tail(const fs::path& p, size_t cap) {
    std::ifstream in(p, std::ios::binary | std::ios::ate);
    if (!in) return "";
    auto size = static_cast<size_t>(in.tellg());
    size_t keep = std::min(size, cap);
    in.seekg(static_cast<std::streamoff>(size - keep));
    std::string text(keep, '\0');
    in.read(text.data(), static_cast<std::streamsize>(keep));
    return text;
}

struct WaitedChild {
    int wait_status = 0;
    long max_rss_kb = 0;
    bool terminated_by_us = false;
    double elapsed_seconds = 0.0;
};

/// Polls the child against the wall deadline; escalates TERM then KILL to
/// its whole process group. Returns once the child is reaped.
WaitedChild supervise(pid_t pid, double wall_seconds) {
    auto start = std::chrono::steady_clock::now();
    bool term_sent = false, kill_sent = false;
    WaitedChild result;
    while (true) {
        struct rusage usage {};
        int status = 0;
        pid_t done = ::wait4(pid, &status, WNOHANG, &usage);
        auto now = std::chrono::steady_clock::now();
        double elapsed = std::chrono::duration<double>(now - start).count();
        if (done == pid) {
            result.wait_status = status;
            result.max_rss_kb = usage.ru_maxrss;
            result.terminated_by_us = term_sent || kill_sent;
            result.elapsed_seconds = elapsed;
            return result;
        }
        if (done < 0) {
            ::kill(-pid, SIGKILL);
            throw InfraError(std::string("wait4 failed: ") + std::strerror(errno));
        }
        if (!term_sent && elapsed >= wall_seconds) {
            ::kill(-pid, SIGTERM);
            term_sent = true;
        } else if (!kill_sent && elapsed >= wall_seconds + kKillGraceSeconds) {
            ::kill(-pid, SIGKILL);
            kill_sent = true;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
}

struct SpawnFiles {
    fs::path stdin_path, stdout_path, stderr_path;
};

/// fork + exec with redirections, its own session, and resource limits.
/// Everything between fork and exec sticks to async-signal-safe calls; all
/// allocation happens before the fork.
pid_t spawn_guest(const std::vector<std::string>& argv, const SpawnFiles& files,
                  const ExecLimits& limits, long long fsize_bytes) {
    std::vector<char*> cargv;
    cargv.reserve(argv.size() + 1);
    for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);

    int err_pipe[2];
    if (::pipe2(err_pipe, O_CLOEXEC) != 0)
        throw InfraError(std::string("pipe2 failed: ") + std::strerror(errno));

    pid_t pid = ::fork();
    if (pid < 0) {
        ::close(err_pipe[0]);
        ::close(err_pipe[1]);
        throw InfraError(std::string("fork failed: ") + std::strerror(errno));
    }

    if (pid == 0) {
        ::setsid();

        auto fail = [&](const char* what) {
            int saved = errno;
            (void)!::write(err_pipe[1], &saved, sizeof(saved));
            (void)!::write(err_pipe[1], what, std::strlen(what));
            ::_exit(127);
        };

        int in_fd = ::open(files.stdin_path.c_str(), O_RDONLY);
        if (in_fd < 0) fail("open stdin");
        int out_fd = ::open(files.stdout_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        if (out_fd < 0) fail("open stdout");
        int errout_fd = ::open(files.stderr_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        if (errout_fd < 0) fail("open stderr");
        if (::dup2(in_fd, 0) < 0 || ::dup2(out_fd, 1) < 0 || ::dup2(errout_fd, 2) < 0)
            fail("dup2");
        ::close(in_fd);
        ::close(out_fd);
        ::close(errout_fd);

        struct rlimit as_limit {};
        as_limit.rlim_cur = as_limit.rlim_max = static_cast<rlim_t>(limits.memory_bytes);
        if (::setrlimit(RLIMIT_AS, &as_limit) != 0) fail("setrlimit as");

        // CPU backstop in case the supervisor thread stalls.
        struct rlimit cpu_limit {};
        cpu_limit.rlim_cur = cpu_limit.rlim_max =
            static_cast<rlim_t>(std::ceil(limits.wall_seconds)) + 2;
        if (::setrlimit(RLIMIT_CPU, &cpu_limit) != 0) fail("setrlimit cpu");

        struct rlimit fsize_limit {};
        fsize_limit.rlim_cur = fsize_limit.rlim_max = static_cast<rlim_t>(fsize_bytes);
        if (::setrlimit(RLIMIT_FSIZE, &fsize_limit) != 0) fail("setrlimit fsize");

        ::execv(cargv[0], cargv.data());
        fail("execv");
    }

    ::close(err_pipe[1]);
    // Zero bytes: the exec happened and CLOEXEC shut the pipe. Anything
    // else is the child's errno plus a short marker: a harness fault.
    char buf[256];
    ssize_t n = ::read(err_pipe[0], buf, sizeof(buf));
    ::close(err_pipe[0]);
    if (n > 0) {
        int child_errno = 0;
        std::string what = "child setup failed";
        if (n >= static_cast<ssize_t>(sizeof(int))) {
            std::memcpy(&child_errno, buf, sizeof(int));
            what = std::string(buf + sizeof(int), static_cast<size_t>(n) - sizeof(int));
        }
        int status;
        ::waitpid(pid, &status, 0);
        throw InfraError("guest " + what + ": " + std::strerror(child_errno));
    }
    return pid;
}

}  // namespace

// ─── Sandbox ──────────────────────────────────────────────────────

Sandbox::Sandbox(std::vector<Toolchain> toolchains, Options options) : options_(std::move(options)) {
    if (toolchains.empty()) throw ConfigError("sandbox needs at least one toolchain");
    for (auto& t : toolchains) {
        t.validate();
        if (!toolchains_.emplace(t.name, t).second)
            throw ConfigError("duplicate toolchain: " + t.name);
    }
    if (options_.workers < 1) throw ConfigError("sandbox workers must be >= 1");
    if (options_.scratch_root.empty())
        options_.scratch_root = fs::temp_directory_path() /
                                ("forge-sandbox-" + std::to_string(::getpid()));
    cache_dir_ = options_.scratch_root / "cache";
    std::error_code ec;
    fs::create_directories(cache_dir_, ec);
    if (ec) throw InfraError("cannot create scratch root: " + options_.scratch_root.string());
}

Sandbox::~Sandbox() = default;

const Toolchain& Sandbox::toolchain(const std::string& name) const {
    auto it = toolchains_.find(name);
    if (it == toolchains_.end()) throw ConfigError("unknown toolchain: " + name);
    return it->second;
}

bool Sandbox::has_toolchain(const std::string& name) const { return toolchains_.count(name) > 0; }

CompileOutcome Sandbox::compile(const std::string& toolchain_name, const std::string& source) {
    const Toolchain& chain = toolchain(toolchain_name);
    std::string hash = hex64(fnv1a64(chain.name + "\x1f" + source));

    // Compilation is serialized; concurrent compiles of one source must not
    // race on the shared artifact, and compiles are rare next to runs.
    std::lock_guard<std::mutex> lock(cache_mu_);
    auto it = cache_.find(hash);
    if (it != cache_.end()) {
        CompileOutcome hit = it->second;
        hit.cache_hit = true;
        return hit;
    }

    fs::path src_path = cache_dir_ / (hash + chain.extension);
    if (!fs::exists(src_path)) {
        fs::path tmp = cache_dir_ / (hash + chain.extension + ".tmp");
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InfraError("cannot write guest source: " + tmp.string());
        out << source;
        out.close();
        fs::rename(tmp, src_path);
    }

    CompileOutcome outcome;
    fs::path artifact = cache_dir_ / (hash + ".bin");

    if (chain.compile.empty()) {
        outcome.ok = true;
    } else if (fs::exists(artifact)) {
        outcome.ok = true;  // a previous process already built it
    } else {
        fs::path build_target = cache_dir_ / (hash + ".bin.build");
        std::vector<std::string> argv;
        argv.reserve(chain.compile.size());
        for (const auto& part : chain.compile)
            argv.push_back(substitute(part, src_path.string(), build_target.string()));
        argv[0] = resolve_executable(argv[0]);

        fs::path workdir = cache_dir_ / (hash + ".compile");
        fs::create_directories(workdir);
        SpawnFiles files{workdir / "in", workdir / "out", workdir / "err"};
        { std::ofstream(files.stdin_path); }

        ExecLimits compile_limits;
        compile_limits.wall_seconds = 60.0;
        compile_limits.memory_bytes = 4ll << 30;
        pid_t pid = spawn_guest(argv, files, compile_limits, 1ll << 30);
        WaitedChild waited = supervise(pid, compile_limits.wall_seconds);

        if (waited.terminated_by_us) {
            outcome.log = "compiler timed out";
        } else if (WIFEXITED(waited.wait_status) && WEXITSTATUS(waited.wait_status) == 0) {
            fs::rename(build_target, artifact);
            outcome.ok = true;
        } else {
            outcome.log = read_tail(files.stderr_path, kStderrTailBytes);
            if (outcome.log.empty()) outcome.log = "compiler failed without diagnostics";
        }
        fs::remove_all(workdir);
    }

    if (outcome.ok) {
        outcome.program.toolchain = chain.name;
        outcome.program.source_hash = hash;
        for (const auto& part : chain.run)
            outcome.program.argv_prefix.push_back(
                substitute(part, src_path.string(), artifact.string()));
        outcome.program.argv_prefix[0] = resolve_executable(outcome.program.argv_prefix[0]);
    }

    cache_[hash] = outcome;
    return outcome;
}

ExecResult Sandbox::run(const CompiledProgram& program, const std::vector<std::string>& args,
                        const std::string& stdin_text, const ExecLimits& limits) {
    limits.validate();
    if (program.argv_prefix.empty()) throw ValidationError("program was never compiled");
    try {
        return run_once(program, args, stdin_text, limits);
    } catch (const InfraError& e) {
        log_warn(std::string("sandbox run hiccup, retrying once: ") + e.what());
        return run_once(program, args, stdin_text, limits);
    }
}

ExecResult Sandbox::run_once(const CompiledProgram& program, const std::vector<std::string>& args,
                             const std::string& stdin_text, const ExecLimits& limits) {
    fs::path scratch = options_.scratch_root /
                       ("run-" + std::to_string(g_run_counter.fetch_add(1)));
    std::error_code ec;
    fs::create_directories(scratch, ec);
    if (ec) throw InfraError("cannot create run scratch: " + scratch.string());

    SpawnFiles files{scratch / "in", scratch / "out", scratch / "err"};
    {
        std::ofstream in(files.stdin_path, std::ios::binary);
        if (!in) throw InfraError("cannot stage stdin: " + files.stdin_path.string());
        in << stdin_text;
    }

    std::vector<std::string> argv = program.argv_prefix;
    argv.insert(argv.end(), args.begin(), args.end());

    ExecResult result;
    pid_t pid = spawn_guest(argv, files, limits, kStdoutCapBytes);
    WaitedChild waited = supervise(pid, limits.wall_seconds);
    result.elapsed_seconds = waited.elapsed_seconds;

    bool near_memory_limit =
        waited.max_rss_kb * 1024ll >= static_cast<long long>(0.8 * limits.memory_bytes);

    std::string note;
    if (waited.terminated_by_us) {
        result.status = ExecStatus::Timeout;
    } else if (WIFSIGNALED(waited.wait_status)) {
        int sig = WTERMSIG(waited.wait_status);
        if (sig == SIGXFSZ) {
            result.status = ExecStatus::Crash;
            note = "output limit exceeded\n";
        } else {
            result.status = near_memory_limit ? ExecStatus::MemoryExceeded : ExecStatus::Crash;
            note = "killed by signal " + std::to_string(sig) + "\n";
        }
    } else {
        result.exit_code = WEXITSTATUS(waited.wait_status);
        if (result.exit_code != 0 && near_memory_limit) {
            result.status = ExecStatus::MemoryExceeded;
        } else {
            result.status = ExecStatus::Ok;
            bool over_cap = false;
            result.stdout_text = read_file_checked(files.stdout_path, kStdoutCapBytes, over_cap);
            if (over_cap) {
                result.status = ExecStatus::Crash;
                result.stdout_text.clear();
                note = "output limit exceeded\n";
            }
        }
    }
    result.stderr_tail = read_tail(files.stderr_path, kStderrTailBytes) + note;

    fs::remove_all(scratch, ec);  // best-effort cleanup
    return result;
}

}  // namespace forge
