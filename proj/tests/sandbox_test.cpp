#include <fstream>

#include "doctest.h"
#include "forge/sandbox.hpp"

using namespace forge;

namespace {

ExecLimits quick_limits(double wall = 5.0) {
    ExecLimits l;
    l.wall_seconds = wall;
    l.memory_bytes = 512ll << 20;
    return l;
}

CompiledProgram compile_python(Sandbox& sb, const std::string& source) {
    CompileOutcome out = sb.compile("python", source);
    REQUIRE(out.ok);
    return out.program;
}

}  // namespace

TEST_CASE("a well-behaved guest echoes stdin through stdout") {
    Sandbox sb;
    auto prog = compile_python(sb, "import sys\nsys.stdout.write(sys.stdin.read())\n");
    ExecResult r = sb.run(prog, {}, "hello guest\n", quick_limits());
    CHECK(r.status == ExecStatus::Ok);
    CHECK(r.exit_code == 0);
    CHECK(r.ran_clean());
    CHECK(r.stdout_text == "hello guest\n");
    CHECK(r.elapsed_seconds < 5.0);
}

TEST_CASE("guest argv arrives after the run command") {
    Sandbox sb;
    auto prog = compile_python(sb, "import sys\nprint(sys.argv[1], sys.argv[2])\n");
    ExecResult r = sb.run(prog, {"alpha", "beta"}, "", quick_limits());
    CHECK(r.status == ExecStatus::Ok);
    CHECK(r.stdout_text == "alpha beta\n");
}

TEST_CASE("nonzero exits keep their code and stdout is not captured") {
    Sandbox sb;
    auto prog = compile_python(sb, "import sys\nprint('partial')\nsys.exit(2)\n");
    ExecResult r = sb.run(prog, {}, "", quick_limits());
    CHECK(r.status == ExecStatus::Ok);
    CHECK(r.exit_code == 2);
    CHECK(!r.ran_clean());
}

TEST_CASE("a busy loop is terminated just past the wall limit") {
    Sandbox sb;
    auto prog = compile_python(sb, "while True:\n    pass\n");
    ExecResult r = sb.run(prog, {}, "", quick_limits(1.0));
    CHECK(r.status == ExecStatus::Timeout);
    CHECK(r.elapsed_seconds >= 1.0);
    CHECK(r.elapsed_seconds <= 1.5);
}

TEST_CASE("a sleeping guest that ignores SIGTERM still dies in the grace window") {
    Sandbox sb;
    auto prog = compile_python(
        sb, "import signal, time\nsignal.signal(signal.SIGTERM, signal.SIG_IGN)\n"
            "time.sleep(60)\n");
    ExecResult r = sb.run(prog, {}, "", quick_limits(1.0));
    CHECK(r.status == ExecStatus::Timeout);
    CHECK(r.elapsed_seconds >= 1.0);
    CHECK(r.elapsed_seconds <= 1.5);
}

TEST_CASE("an aborting guest is reported as a crash with diagnostics") {
    Sandbox sb;
    auto prog = compile_python(sb, "import os, signal\nos.kill(os.getpid(), signal.SIGABRT)\n");
    ExecResult r = sb.run(prog, {}, "", quick_limits());
    CHECK(r.status == ExecStatus::Crash);
    CHECK(r.stderr_tail.find("signal") != std::string::npos);
}

TEST_CASE("guest stderr is captured for diagnosis on failure") {
    Sandbox sb;
    auto prog = compile_python(sb, "import sys\nprint('the input was bad', file=sys.stderr)\nsys.exit(2)\n");
    ExecResult r = sb.run(prog, {}, "", quick_limits());
    CHECK(r.exit_code == 2);
    CHECK(r.stderr_tail.find("the input was bad") != std::string::npos);
}

TEST_CASE("memory hogs are classified as memory exceeded") {
    Sandbox sb;
    ExecLimits tight = quick_limits();
    tight.memory_bytes = 128ll << 20;
    auto prog = compile_python(sb, "data = []\nwhile True:\n    data.append(bytearray(1 << 20))\n");
    ExecResult r = sb.run(prog, {}, "", tight);
    CHECK(r.status == ExecStatus::MemoryExceeded);
}

TEST_CASE("python syntax errors fail at run, not compile, for interpreted chains") {
    Sandbox sb;
    CompileOutcome out = sb.compile("python", "def broken(:\n");
    CHECK(out.ok);  // no compile step: the interpreter finds out at run time
    ExecResult r = sb.run(out.program, {}, "", quick_limits());
    CHECK(r.status == ExecStatus::Ok);
    CHECK(r.exit_code != 0);
    CHECK(r.stderr_tail.find("SyntaxError") != std::string::npos);
}

TEST_CASE("compiled toolchain produces a runnable artifact and caches it") {
    Sandbox sb;
    const char* source =
        "#include <iostream>\n"
        "int main() { std::cout << \"compiled hello\\n\"; }\n";
    CompileOutcome first = sb.compile("cpp", source);
    REQUIRE(first.ok);
    CHECK(!first.cache_hit);
    ExecResult r = sb.run(first.program, {}, "", quick_limits());
    CHECK(r.status == ExecStatus::Ok);
    CHECK(r.stdout_text == "compiled hello\n");

    CompileOutcome second = sb.compile("cpp", source);
    CHECK(second.ok);
    CHECK(second.cache_hit);
    CHECK(second.program.source_hash == first.program.source_hash);
}

TEST_CASE("compile errors surface the compiler log as a guest failure") {
    Sandbox sb;
    CompileOutcome out = sb.compile("cpp", "int main() { this does not parse }\n");
    CHECK(!out.ok);
    CHECK(!out.log.empty());
    CHECK(out.log.find("error") != std::string::npos);
    // Identical bad source hits the cached failure.
    CompileOutcome again = sb.compile("cpp", "int main() { this does not parse }\n");
    CHECK(!again.ok);
    CHECK(again.cache_hit);
}

TEST_CASE("running an uncompiled program handle is rejected") {
    Sandbox sb;
    CompiledProgram empty;
    CHECK_THROWS_AS(sb.run(empty, {}, "", quick_limits()), ValidationError);
}

TEST_CASE("toolchain validation and lookup have sharp edges") {
    Sandbox sb;
    CHECK(sb.has_toolchain("python"));
    CHECK(sb.has_toolchain("cpp"));
    CHECK(!sb.has_toolchain("fortran"));
    CHECK_THROWS_AS(sb.toolchain("fortran"), ConfigError);
    CHECK_THROWS_AS(sb.compile("fortran", "x"), ConfigError);

    Toolchain no_src;
    no_src.name = "bad";
    no_src.extension = ".b";
    no_src.run = {"run-it"};
    CHECK_THROWS_AS(no_src.validate(), ConfigError);

    Toolchain no_out;
    no_out.name = "bad2";
    no_out.extension = ".b";
    no_out.compile = {"cc", "{src}"};
    no_out.run = {"{out}"};
    CHECK_THROWS_AS(no_out.validate(), ConfigError);

    CHECK_THROWS_AS(Sandbox(std::vector<Toolchain>{}), ConfigError);
}

TEST_CASE("toolchain config files load and validate") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "forge_toolchain_cfg";
    fs::create_directories(dir);
    fs::path cfg = dir / "toolchains.json";
    {
        std::ofstream out(cfg);
        out << R"({"toolchains": [
            {"name": "python", "extension": ".py", "run": ["python3", "{src}"]},
            {"name": "cpp", "extension": ".cpp",
             "compile": ["g++", "-O2", "-o", "{out}", "{src}"], "run": ["{out}"]}
        ]})";
    }
    auto chains = load_toolchains(cfg);
    REQUIRE(chains.size() == 2);
    CHECK(chains[0].name == "python");
    CHECK(chains[1].compile.size() == 5);

    {
        std::ofstream out(cfg);
        out << R"({"toolchains": []})";
    }
    CHECK_THROWS_AS(load_toolchains(cfg), ConfigError);
    CHECK_THROWS_AS(load_toolchains(dir / "missing.json"), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("oversized stdout is a guest failure, not a truncated success") {
    Sandbox sb;
    // Try to write ~80 MB; the file size limit stops it first.
    auto prog = compile_python(
        sb, "import sys\nchunk = 'x' * (1 << 20)\n"
            "for _ in range(80):\n    sys.stdout.write(chunk)\n");
    ExecResult r = sb.run(prog, {}, "", quick_limits(30.0));
    CHECK(r.status == ExecStatus::Crash);
    CHECK(r.stdout_text.empty());
    CHECK(r.stderr_tail.find("output limit") != std::string::npos);
}

TEST_CASE("scratch directories do not accumulate per run") {
    namespace fs = std::filesystem;
    Sandbox::Options opt;
    opt.scratch_root = fs::temp_directory_path() / "forge_scratch_probe";
    fs::remove_all(opt.scratch_root);
    {
        Sandbox sb(default_toolchains(), opt);
        auto prog = compile_python(sb, "print('hi')\n");
        for (int i = 0; i < 3; ++i) sb.run(prog, {}, "", quick_limits());
        size_t leftovers = 0;
        for (const auto& entry : fs::directory_iterator(opt.scratch_root))
            if (entry.path().filename().string().rfind("run-", 0) == 0) leftovers++;
        CHECK(leftovers == 0);
    }
    fs::remove_all(opt.scratch_root);
}

TEST_CASE("limits are validated before anything is spawned") {
    Sandbox sb;
    auto prog = compile_python(sb, "print('hi')\n");
    ExecLimits zero;
    zero.wall_seconds = 0.0;
    CHECK_THROWS_AS(sb.run(prog, {}, "", zero), ValidationError);
    ExecLimits tiny;
    tiny.memory_bytes = 1024;
    CHECK_THROWS_AS(sb.run(prog, {}, "", tiny), ValidationError);
}
