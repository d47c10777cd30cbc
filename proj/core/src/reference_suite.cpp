#include "forge/reference_suite.hpp"

#include "forge/common.hpp"
#include "forge/reference.hpp"

namespace forge {

std::string to_string(ReferenceProblem p) {
    return p == ReferenceProblem::Concat ? "concat" : "village";
}

ReferenceProblem reference_problem_from_string(const std::string& s) {
    if (s == "concat") return ReferenceProblem::Concat;
    if (s == "village") return ReferenceProblem::Village;
    throw ValidationError("unknown reference problem: " + s);
}

TestSuite generate_tiny_instances(ReferenceProblem p, uint64_t seed, int count) {
    if (count < 1) throw ValidationError("instance count must be at least 1");
    TestSuite suite;
    std::string generator = "reference-" + to_string(p) + "-tiny";
    for (int i = 0; i < count; ++i) {
        uint64_t s = mix_seed(seed, generator, static_cast<uint64_t>(i));
        TestInput input;
        input.text = p == ReferenceProblem::Concat ? forgeref::generate_concat_input(s)
                                                   : forgeref::generate_village_input(s);
        input.provenance = generator + "[" + std::to_string(seed) + "]:" + std::to_string(i);
        suite.inputs.push_back(std::move(input));
    }
    return suite;
}

double reference_score_scale(ReferenceProblem p) {
    return p == ReferenceProblem::Concat ? 2.0 * forgeref::kConcatScoreScale
                                         : static_cast<double>(forgeref::kVillageScoreCap);
}

std::string reference_statement(ReferenceProblem p) {
    if (p == ReferenceProblem::Concat) {
        return
            "String Factory\n"
            "\n"
            "A tiny language builds string variables with two commands. 'L s' creates a\n"
            "variable holding the lowercase literal s (length 1 to 8). 'C a b' creates a\n"
            "variable holding the concatenation of variables a and b, both of which must\n"
            "already exist. Variables are numbered from 1 in creation order.\n"
            "\n"
            "Input: the first line holds the number of test cases T. Each case starts\n"
            "with a line holding the target count q, followed by q lines, one lowercase\n"
            "target string each.\n"
            "\n"
            "Output per case: a line with the command count m, then m command lines, then\n"
            "one line with q variable indices r_1..r_q where variable r_i holds target i.\n"
            "\n"
            "A submission is feasible when 1 <= m <= 5000, every literal is 1..8 lowercase\n"
            "letters, every concatenation references earlier variables, no variable grows\n"
            "longer than the longest target, and each reported variable equals its target.\n"
            "Cost is m plus the total length of all literals; smaller is better. Each case\n"
            "is scored against a fixed block-splitting reference cost and capped at twice\n"
            "the scale; the file score is the mean over cases.\n"
            "\n"
            "Limits: T <= 20, q <= 200, target length <= 400, total target length per\n"
            "case <= 40000. Time 3 s, memory 512 MB.\n";
    }
    return
        "Patrol Network\n"
        "\n"
        "A village has n houses; house 1 is home. There are m candidate two-way roads;\n"
        "road i joins houses u_i and v_i, costs c_i to build, and takes d_i to walk.\n"
        "Before day 1 a subset of roads may be built, subject to a budget b. Over D days\n"
        "attacks occur: attack j targets house h_j, is active on days a_j..b_j, and\n"
        "deals damage w_j unless some active day's patrol visits h_j. Each day t the\n"
        "patrol starts and ends at house 1, walks only built roads, and spends at most\n"
        "L_t total travel time. Staying home still counts as visiting house 1.\n"
        "\n"
        "Input: one instance as whitespace-separated integers: n m D A b, then m road\n"
        "lines (u v c d), then D daily time limits, then A attack lines (h a b w).\n"
        "\n"
        "Output: line 1 lists the built road indices (blank builds nothing). Lines 2\n"
        "to D+1 give each day's walk as a sequence of built road indices; missing\n"
        "lines mean the patrol stays home.\n"
        "\n"
        "A submission is feasible when the build cost fits the budget and every walk\n"
        "uses built roads with valid adjacency, returns to house 1, and fits the day's\n"
        "time limit. Total damage from uncleared attacks should be minimized; the\n"
        "score compares damage against the stay-home baseline and is capped at ten\n"
        "times the scale.\n"
        "\n"
        "Limits: n <= 400, m <= 3000, D <= 60, A <= 4000, costs and times <= 1e6,\n"
        "budget <= 1e9, damages <= 1e12. Time 3 s, memory 256 MB.\n";
}

// ─── Guest program sources ────────────────────────────────────────
// Guests include the embedded copy of reference.hpp, so in-process golden
// tests and sandboxed runs share one checker implementation.

std::string reference_verifier_guest_source(ReferenceProblem p) {
    std::string common =
        "#include \"reference.hpp\"\n"
        "#include <fstream>\n"
        "#include <iomanip>\n"
        "#include <iostream>\n"
        "#include <sstream>\n"
        "\n"
        "static std::string slurp(const char* path, bool& ok) {\n"
        "    std::ifstream f(path);\n"
        "    ok = static_cast<bool>(f);\n"
        "    std::ostringstream s;\n"
        "    s << f.rdbuf();\n"
        "    return s.str();\n"
        "}\n"
        "\n"
        "int main(int argc, char** argv) {\n"
        "    if (argc != 3) {\n"
        "        std::cerr << \"usage: verifier INPUT OUTPUT\\n\";\n"
        "        return 3;\n"
        "    }\n"
        "    bool ok = false;\n"
        "    std::string input = slurp(argv[1], ok);\n"
        "    if (!ok) {\n"
        "        std::cerr << \"cannot read input file\\n\";\n"
        "        return 2;\n"
        "    }\n"
        "    std::string output = slurp(argv[2], ok);\n"
        "    if (!ok) {\n"
        "        std::cerr << \"cannot read output file\\n\";\n"
        "        return 1;\n"
        "    }\n";
    if (p == ReferenceProblem::Concat) {
        return common +
               "    try {\n"
               "        auto res = forgeref::concat_score_file(input, output);\n"
               "        bool any = false;\n"
               "        for (const auto& c : res.cases) any = any || c.feasible;\n"
               "        if (!any) {\n"
               "            std::cerr << (res.diagnostic.empty() ? \"all cases infeasible\" : res.diagnostic)\n"
               "                      << \"\\n\";\n"
               "            return 1;\n"
               "        }\n"
               "        std::cout << std::setprecision(17) << res.mean_score << \"\\n\";\n"
               "        return 0;\n"
               "    } catch (const std::exception& e) {\n"
               "        std::cerr << e.what() << \"\\n\";\n"
               "        return 2;\n"
               "    }\n"
               "}\n";
    }
    return common +
           "    try {\n"
           "        auto ins = forgeref::parse_village_input(input);\n"
           "        auto res = forgeref::village_check_and_score(ins, output);\n"
           "        if (!res.feasible) {\n"
           "            std::cerr << res.diagnostic << \"\\n\";\n"
           "            return 1;\n"
           "        }\n"
           "        std::cout << res.score << \"\\n\";\n"
           "        return 0;\n"
           "    } catch (const std::exception& e) {\n"
           "        std::cerr << e.what() << \"\\n\";\n"
           "        return 2;\n"
           "    }\n"
           "}\n";
}

std::string reference_solution_guest_source(ReferenceProblem p, const std::string& strategy) {
    if (strategy != "baseline" && strategy != "greedy")
        throw ValidationError("unknown bundled strategy: " + strategy);
    std::string head =
        "#include \"reference.hpp\"\n"
        "#include <iostream>\n"
        "#include <sstream>\n"
        "\n"
        "int main() {\n"
        "    std::ostringstream in;\n"
        "    in << std::cin.rdbuf();\n";
    if (p == ReferenceProblem::Concat) {
        std::string fn = strategy == "baseline" ? "concat_baseline_output" : "concat_greedy_output";
        return head +
               "    auto cases = forgeref::parse_concat_input(in.str());\n"
               "    std::cout << forgeref::" + fn + "(cases);\n"
               "    return 0;\n"
               "}\n";
    }
    if (strategy == "baseline")
        return head +
               "    std::cout << forgeref::village_stay_home_plan();\n"
               "    return 0;\n"
               "}\n";
    return head +
           "    auto ins = forgeref::parse_village_input(in.str());\n"
           "    std::cout << forgeref::village_greedy_plan(ins);\n"
           "    return 0;\n"
           "}\n";
}

}  // namespace forge
