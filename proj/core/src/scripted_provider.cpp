// Deterministic offline provider. Responses are a pure function of the
// request content, a seed, and a per-fingerprint repeat counter (so drawing
// the same prompt n times yields n varied but reproducible answers). Used to
// author transcript fixtures and to run the whole pipeline without a model.

#include <map>
#include <mutex>
#include <sstream>

#include "forge/gateway.hpp"

namespace forge {

namespace {

// ─── Structural prompt parsing ────────────────────────────────────
// The provider keys off the tags the templates wrap around every variable,
// never off template prose, so template wording can change freely.

std::string joined_user_text(const ChatRequest& r) {
    std::string all;
    for (const auto& m : r.messages) {
        all += m.content;
        all += "\n";
    }
    return all;
}

std::string approach_label(const std::string& source) {
    for (const auto& line : split_lines(source)) {
        auto pos = line.find("approach:");
        if (pos != std::string::npos) return trim(line.substr(pos + 9));
    }
    return "";
}

// ─── Toy problem family ───────────────────────────────────────────
// Mutations land in a small family of subset-selection problems that the
// scripted solver, generator, and scorer all understand.

const char* kVariantSentence[3] = {
    "At most half of the positions, rounded down, may be chosen.",
    "No two chosen positions may be adjacent.",
    "At most three positions may be chosen.",
};

std::string toy_statement(uint64_t tag, int variant, bool oracle_marker) {
    std::ostringstream s;
    s << "Value Picker " << hex64(tag).substr(10) << "\n\n";
    s << "You are given a list of n values. Choose a set of distinct 1-based positions; "
         "your total is the sum of the chosen values. "
      << kVariantSentence[variant] << " Maximize the total.\n\n";
    s << "Input: line 1 holds n (4 to 12); line 2 holds n integers between -5 and 9.\n";
    s << "Output: the chosen positions, one per line; empty output chooses nothing.\n";
    if (oracle_marker)
        s << "\nScores for this problem are assigned by an external oracle.\n";
    return s.str();
}

const char* kSolutionSource[4] = {
    // Feasible under every variant: one best pick.
    "# approach: best-single\n"
    "import sys\n"
    "def main():\n"
    "    data = sys.stdin.read().split()\n"
    "    n = int(data[0]); vals = [int(x) for x in data[1:1 + n]]\n"
    "    order = sorted(range(1, n + 1), key=lambda p: (-vals[p - 1], p))\n"
    "    for p in order[:1]:\n"
    "        print(p)\n"
    "main()\n",

    "# approach: top-two\n"
    "import sys\n"
    "def main():\n"
    "    data = sys.stdin.read().split()\n"
    "    n = int(data[0]); vals = [int(x) for x in data[1:1 + n]]\n"
    "    order = sorted(range(1, n + 1), key=lambda p: (-vals[p - 1], p))\n"
    "    for p in sorted(order[:min(2, n)]):\n"
    "        print(p)\n"
    "main()\n",

    "# approach: positives-spaced\n"
    "import sys\n"
    "def main():\n"
    "    data = sys.stdin.read().split()\n"
    "    n = int(data[0]); vals = [int(x) for x in data[1:1 + n]]\n"
    "    order = sorted(range(1, n + 1), key=lambda p: (-vals[p - 1], p))\n"
    "    picked = []\n"
    "    for p in order:\n"
    "        if vals[p - 1] <= 0 or len(picked) == 3:\n"
    "            continue\n"
    "        if any(abs(p - q) == 1 for q in picked):\n"
    "            continue\n"
    "        picked.append(p)\n"
    "    for p in sorted(picked):\n"
    "        print(p)\n"
    "main()\n",

    "# approach: do-nothing\n"
    "import sys\n"
    "def main():\n"
    "    sys.stdin.read()\n"
    "main()\n",
};

std::string generator_source() {
    return "# test-input generator: one toy instance per index\n"
           "import sys\n"
           "def main():\n"
           "    i = int(sys.argv[1])\n"
           "    n = 4 + (i * 3) % 9\n"
           "    x = 1234567 + i * 99991\n"
           "    vals = []\n"
           "    for _ in range(n):\n"
           "        x = (x * 1103515245 + 12345) % (2 ** 31)\n"
           "        vals.append(x % 15 - 5)\n"
           "    print(n)\n"
           "    print(' '.join(str(v) for v in vals))\n"
           "main()\n";
}

std::string baseline_source() {
    return "# baseline: choose nothing\n"
           "import sys\n"
           "def main():\n"
           "    sys.stdin.read()\n"
           "main()\n";
}

std::string verifier_source(int variant) {
    std::string check;
    if (variant == 0)
        check = "    if len(picks) > n // 2:\n"
                "        print('too many positions', file=sys.stderr); sys.exit(1)\n";
    else if (variant == 1)
        check = "    s = sorted(picks)\n"
                "    if any(b - a == 1 for a, b in zip(s, s[1:])):\n"
                "        print('adjacent positions chosen', file=sys.stderr); sys.exit(1)\n";
    else
        check = "    if len(picks) > 3:\n"
                "        print('too many positions', file=sys.stderr); sys.exit(1)\n";
    return "# scorer: total value of the chosen positions\n"
           "import sys\n"
           "def main():\n"
           "    try:\n"
           "        data = open(sys.argv[1]).read().split()\n"
           "        n = int(data[0]); vals = [int(x) for x in data[1:1 + n]]\n"
           "        if n < 1 or len(vals) != n:\n"
           "            raise ValueError\n"
           "    except Exception:\n"
           "        print('malformed input', file=sys.stderr); sys.exit(2)\n"
           "    try:\n"
           "        picks = [int(t) for t in open(sys.argv[2]).read().split()]\n"
           "    except Exception:\n"
           "        print('unreadable submission', file=sys.stderr); sys.exit(1)\n"
           "    if len(set(picks)) != len(picks) or any(p < 1 or p > n for p in picks):\n"
           "        print('invalid positions', file=sys.stderr); sys.exit(1)\n" +
           check +
           "    print(sum(vals[p - 1] for p in picks))\n"
           "main()\n";
}

std::string constant_verifier_source() {
    return "# scorer: defers to an external oracle (stub)\n"
           "import sys\n"
           "def main():\n"
           "    print(7)\n"
           "main()\n";
}

int variant_of_statement(const std::string& statement) {
    if (statement.find("rounded down") != std::string::npos) return 0;
    if (statement.find("adjacent") != std::string::npos) return 1;
    return 2;
}

std::string fenced(const std::string& lang, const std::string& body) {
    return "```" + lang + "\n" + body + "```\n";
}

// ─── Provider ─────────────────────────────────────────────────────

class ScriptedProvider : public Provider {
public:
    explicit ScriptedProvider(uint64_t seed) : seed_(seed) {}

    std::string name() const override { return "scripted"; }

    ChatResponse complete(const ChatRequest& request) override {
        request.validate();
        std::string fp = fingerprint(request);
        uint64_t counter;
        {
            std::lock_guard<std::mutex> lock(mu_);
            counter = counters_[fp]++;
        }
        std::string prompt = joined_user_text(request);
        std::string text;
        switch (request.purpose) {
            case Purpose::Mutate: text = mutate(prompt, counter); break;
            case Purpose::CoarseFilter: text = coarse(prompt); break;
            case Purpose::Judge: text = judge(prompt); break;
            case Purpose::Solve: text = solve(prompt, fp, counter); break;
            case Purpose::TestcaseAgent: text = testcases(prompt); break;
            case Purpose::VerifierAgent: text = verifier(prompt); break;
        }
        ChatResponse resp;
        resp.text = text;
        resp.usage.input_tokens = static_cast<long long>(prompt.size() / 4 + 1);
        resp.usage.output_tokens = static_cast<long long>(text.size() / 4 + 1);
        resp.latency_seconds = 0.001;
        return resp;
    }

private:
    std::string mutate(const std::string& prompt, uint64_t counter) {
        std::string statement = extract_tag(prompt, "statement");
        std::string kinds = extract_tag(prompt, "kinds");
        if (prompt.find("<kinds>") == std::string::npos) {
            // Formulation extraction uses the same purpose but carries no
            // kinds tag and expects the four-line reply shape.
            std::ostringstream out;
            bool optimizing = contains_ci(statement, "maximize") || contains_ci(statement, "minimize");
            out << "objective: "
                << (optimizing ? "the graded total defined by the statement"
                               : "produce the exact required output for every input")
                << "\n";
            out << "direction: "
                << (contains_ci(statement, "minimize")
                        ? "minimize"
                        : (contains_ci(statement, "maximize") ? "maximize" : "none"))
                << "\n";
            out << "input domain: as stated in the problem\n";
            out << "output constraints: the answer format given in the statement\n";
            return out.str();
        }
        uint64_t h = fnv1a64(statement + "\x1f" + kinds + "\x1f" + hex64(seed_) + "\x1f" +
                             std::to_string(counter));
        int variant = static_cast<int>(h % 3);
        bool oracle = contains_ci(statement, "external oracle");
        std::string candidate = toy_statement(h, variant, oracle);
        std::ostringstream out;
        out << "<candidate>\n" << candidate << "</candidate>\n";
        out << "objective: total value of the chosen positions\n";
        out << "direction: maximize\n";
        out << "input domain: line 1: n in 4..12; line 2: n integers in -5..9\n";
        out << "output constraints: distinct 1-based positions, one per line; "
            << kVariantSentence[variant] << "\n";
        out << "rationale: many selections trade off value against the constraint, so "
               "quality varies smoothly instead of being right or wrong.\n";
        return out.str();
    }

    std::string coarse(const std::string& prompt) {
        std::string statement = extract_tag(prompt, "candidate");
        bool open = contains_ci(statement, "maximize") || contains_ci(statement, "minimize");
        std::ostringstream out;
        if (open) {
            out << "open_objective: yes - the statement asks to optimize a graded total\n";
            out << "multiple_strategies: yes - different selection heuristics are plausible\n";
            out << "scorable: yes - the total is computable from the submission and input\n";
        } else {
            out << "open_objective: no - the statement demands one exact answer\n";
            out << "multiple_strategies: no - any correct algorithm yields the same output\n";
            out << "scorable: yes - correctness is checkable, but it is binary\n";
        }
        return out.str();
    }

    std::string judge(const std::string& prompt) {
        std::ostringstream out;
        size_t from = 0;
        while (true) {
            size_t open = prompt.find("<pair index=\"", from);
            if (open == std::string::npos) break;
            size_t num_start = open + 13;
            size_t num_end = prompt.find('"', num_start);
            if (num_end == std::string::npos) break;
            std::string index = prompt.substr(num_start, num_end - num_start);
            size_t close = prompt.find("</pair>", num_end);
            if (close == std::string::npos) break;
            std::string block = prompt.substr(open, close - open);
            std::string a = approach_label(extract_tag(block, "a"));
            std::string b = approach_label(extract_tag(block, "b"));
            bool same = !a.empty() && a == b;
            out << "pair " << index << ": " << (same ? "same" : "different") << "\n";
            from = close + 7;
        }
        return out.str();
    }

    std::string solve(const std::string& prompt, const std::string& fp, uint64_t counter) {
        std::string statement = extract_tag(prompt, "problem");
        uint64_t h = fnv1a64(statement + "\x1f" + hex64(seed_));
        // Per-candidate sampling pattern: some candidates always answer with
        // one idea, some alternate between two, some rotate through all four.
        int pattern = static_cast<int>((h >> 8) % 3);
        int idx;
        if (pattern == 0) idx = static_cast<int>(h % 4);
        else if (pattern == 1) idx = static_cast<int>((h + counter) % 2 == 0 ? h % 4 : (h + 1) % 4);
        else idx = static_cast<int>((h + counter) % 4);
        (void)fp;
        std::ostringstream out;
        out << "A direct heuristic works here.\n\n" << fenced("python", kSolutionSource[idx]);
        return out.str();
    }

    std::string testcases(const std::string& prompt) {
        (void)prompt;
        return "Indexed generation keeps the cases varied.\n\n" + fenced("python", generator_source());
    }

    std::string verifier(const std::string& prompt) {
        std::string statement = extract_tag(prompt, "problem");
        std::string round = extract_tag(prompt, "round");
        bool oracle = contains_ci(statement, "external oracle");
        bool transient = fnv1a64(statement) % 4 == 0 && round.empty();
        std::ostringstream out;
        out << "mode: objective\n\n";
        out << fenced("python", baseline_source()) << "\n";
        if (oracle || transient)
            out << fenced("python", constant_verifier_source());
        else
            out << fenced("python", verifier_source(variant_of_statement(statement)));
        return out.str();
    }

    uint64_t seed_;
    std::mutex mu_;
    std::map<std::string, uint64_t> counters_;
};

}  // namespace

std::shared_ptr<Provider> make_scripted_provider(uint64_t seed) {
    return std::make_shared<ScriptedProvider>(seed);
}

}  // namespace forge
