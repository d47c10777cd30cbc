#include "forge/pool.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "forge/common.hpp"

namespace forge {

using nlohmann::json;

std::string to_string(SourceTag t) {
    return t == SourceTag::Corpus ? "corpus" : "synthesized";
}

SourceTag source_tag_from_string(const std::string& s) {
    if (s == "corpus") return SourceTag::Corpus;
    if (s == "synthesized") return SourceTag::Synthesized;
    throw ValidationError("unknown source tag: " + s);
}

SeedPool SeedPool::init(const std::vector<CorpusProblem>& corpus, uint64_t rng_seed) {
    if (corpus.empty()) throw ValidationError("cannot initialize pool from an empty corpus");
    SeedPool pool;
    pool.rng_seed_ = rng_seed;
    for (const auto& p : corpus) {
        if (trim(p.statement).empty())
            throw ValidationError("corpus problem has an empty statement (id: " +
                                  (p.id.empty() ? std::string("<unnamed>") : p.id) + ")");
        Entry e;
        e.candidate = make_seed(p.id, p.statement);
        e.source = SourceTag::Corpus;
        pool.insert(std::move(e));
    }
    return pool;
}

SeedPool SeedPool::restore(std::vector<Entry> entries, uint64_t rng_seed) {
    if (entries.empty()) throw ValidationError("cannot restore an empty pool");
    SeedPool pool;
    pool.rng_seed_ = rng_seed;
    for (auto& e : entries) {
        e.candidate.validate();
        pool.insert(std::move(e));
    }
    return pool;
}

void SeedPool::insert(Entry entry) {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), entry.candidate.id,
                               [](const Entry& e, const std::string& id) { return e.candidate.id < id; });
    if (it != entries_.end() && it->candidate.id == entry.candidate.id)
        throw ValidationError("duplicate pool id: " + entry.candidate.id);
    entries_.insert(it, std::move(entry));
}

std::vector<ProblemCandidate> SeedPool::sample(size_t b, uint64_t seed) const {
    if (b > entries_.size())
        throw ValidationError("sample size " + std::to_string(b) + " exceeds pool size " +
                              std::to_string(entries_.size()));
    // Partial Fisher-Yates over an index vector; entries_ stays sorted by id,
    // so the draw depends only on pool contents, b, and seed.
    std::vector<size_t> idx(entries_.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(mix_seed(rng_seed_, "pool-sample", seed));
    std::vector<ProblemCandidate> out;
    out.reserve(b);
    for (size_t i = 0; i < b; ++i) {
        size_t j = i + static_cast<size_t>(rng.below(idx.size() - i));
        std::swap(idx[i], idx[j]);
        out.push_back(entries_[idx[i]].candidate);
    }
    return out;
}

void SeedPool::extend(const std::vector<ProblemCandidate>& validated) {
    // Validate the whole batch before touching the pool so a failed extend
    // leaves it unchanged.
    std::set<std::string> batch_ids;
    for (const auto& c : validated) {
        if (c.stage != Stage::Final)
            throw ValidationError("pool extend requires final candidates; " + c.id + " is at stage " +
                                  to_string(c.stage));
        c.validate();
        if (contains(c.id)) throw ValidationError("pool already contains id: " + c.id);
        if (!batch_ids.insert(c.id).second)
            throw ValidationError("duplicate id within extend batch: " + c.id);
    }
    for (const auto& c : validated) {
        Entry e;
        e.candidate = c;
        e.source = SourceTag::Synthesized;
        insert(std::move(e));
    }
}

bool SeedPool::contains(const std::string& id) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                               [](const Entry& e, const std::string& s) { return e.candidate.id < s; });
    return it != entries_.end() && it->candidate.id == id;
}

const SeedPool::Entry& SeedPool::at(const std::string& id) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                               [](const Entry& e, const std::string& s) { return e.candidate.id < s; });
    if (it == entries_.end() || it->candidate.id != id)
        throw ValidationError("pool has no entry with id: " + id);
    return *it;
}

// ─── Persistence ──────────────────────────────────────────────────

void save_pool(const SeedPool& pool, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "problems");
    json index;
    index["rngSeed"] = pool.rng_seed();
    index["entries"] = json::array();
    for (const auto& e : pool.entries()) {
        json rec;
        rec["id"] = e.candidate.id;
        rec["source"] = to_string(e.source);
        index["entries"].push_back(rec);
        json full = e.candidate;
        full["source"] = to_string(e.source);
        write_text_file_atomic(dir / "problems" / (e.candidate.id + ".json"), full.dump(2) + "\n");
    }
    write_text_file_atomic(dir / "index.json", index.dump(2) + "\n");
}

SeedPool load_pool(const std::filesystem::path& dir) {
    json index = json::parse(read_text_file(dir / "index.json"));
    std::vector<SeedPool::Entry> entries;
    for (const auto& rec : index.at("entries")) {
        std::string id = rec.at("id").get<std::string>();
        json full = json::parse(read_text_file(dir / "problems" / (id + ".json")));
        SeedPool::Entry e;
        e.candidate = full.get<ProblemCandidate>();
        if (e.candidate.id != id)
            throw ValidationError("pool file problems/" + id + ".json holds id " + e.candidate.id);
        e.source = source_tag_from_string(full.at("source").get<std::string>());
        entries.push_back(std::move(e));
    }
    return SeedPool::restore(std::move(entries), index.at("rngSeed").get<uint64_t>());
}

std::vector<CorpusProblem> load_corpus_dir(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw ConfigError("corpus directory not found: " + dir.string());
    std::vector<CorpusProblem> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        auto ext = entry.path().extension().string();
        if (ext != ".txt" && ext != ".md") continue;
        out.push_back({entry.path().stem().string(), read_text_file(entry.path())});
    }
    std::sort(out.begin(), out.end(), [](const CorpusProblem& a, const CorpusProblem& b) { return a.id < b.id; });
    if (out.empty()) throw ConfigError("corpus directory holds no .txt or .md files: " + dir.string());
    return out;
}

}  // namespace forge
