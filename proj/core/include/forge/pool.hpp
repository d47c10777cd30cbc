#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "forge/problem.hpp"

namespace forge {

// ─── Seed pool ────────────────────────────────────────────────────
// The evolving problem collection each synthesis round samples from.
// Entries are immutable once added; the pool only grows (extend) at
// round boundaries. Internally kept sorted by id so that sampling is a
// pure function of (contents, B, seed) regardless of insertion order.

struct CorpusProblem {
    std::string id;  // optional; content hash used when empty
    std::string statement;
};

enum class SourceTag { Corpus, Synthesized };

std::string to_string(SourceTag t);
SourceTag source_tag_from_string(const std::string& s);

class SeedPool {
public:
    struct Entry {
        ProblemCandidate candidate;
        SourceTag source = SourceTag::Corpus;
    };

    SeedPool() = default;

    /// Builds a pool from a corpus: all entries tagged corpus, stage Seed.
    /// Rejects an empty corpus and duplicate ids (naming the id).
    static SeedPool init(const std::vector<CorpusProblem>& corpus, uint64_t rng_seed = 0);

    /// Rebuilds a pool from previously serialized entries (load path).
    static SeedPool restore(std::vector<Entry> entries, uint64_t rng_seed);

    /// Uniform sample of `b` distinct entries without replacement.
    /// Identical (contents, b, seed) yields an identical ordered list.
    std::vector<ProblemCandidate> sample(size_t b, uint64_t seed) const;

    /// Adds validated candidates (stage Final, tagged synthesized with the
    /// round recorded in their lineage). Rejects non-Final candidates and
    /// id collisions.
    void extend(const std::vector<ProblemCandidate>& validated);

    size_t size() const { return entries_.size(); }
    bool contains(const std::string& id) const;
    const Entry& at(const std::string& id) const;
    const std::vector<Entry>& entries() const { return entries_; }
    uint64_t rng_seed() const { return rng_seed_; }

private:
    void insert(Entry entry);

    std::vector<Entry> entries_;  // sorted by candidate id
    uint64_t rng_seed_ = 0;
};

// ─── Persistence ──────────────────────────────────────────────────
// Directory layout:
//   index.json             one record per candidate (id, source, stage,
//                          lineage, divergence scores)
//   problems/<id>.json     statement + formulation
// Round-trip load/save is lossless and byte-stable.

void save_pool(const SeedPool& pool, const std::filesystem::path& dir);
SeedPool load_pool(const std::filesystem::path& dir);

/// Reads a corpus directory: every *.txt / *.md file becomes one problem,
/// id taken from the file stem.
std::vector<CorpusProblem> load_corpus_dir(const std::filesystem::path& dir);

}  // namespace forge
