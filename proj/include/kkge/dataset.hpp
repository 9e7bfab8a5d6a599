#pragma once
// Triple store: TSV ingestion, string<->index vocabularies, train/valid/test
// splits, the filter map for ranked evaluation, reciprocal augmentation,
// 1vsAll / KvsAll target construction, and uniform noise injection.
//
// Vocabulary order is first occurrence scanning train, then valid, then test,
// so index assignments are stable across runs and machines.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kkge/errors.hpp"
#include "kkge/linalg.hpp"
#include "kkge/rng.hpp"

namespace kkge {

struct Triple {
    std::int32_t head = 0;
    std::int32_t rel = 0;
    std::int32_t tail = 0;

    friend bool operator==(const Triple&, const Triple&) = default;
};

inline std::uint64_t pair_key(std::int32_t head, std::int32_t rel) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(head)) << 32) |
           static_cast<std::uint32_t>(rel);
}

inline std::uint64_t triple_key(const Triple& t, std::int64_t num_entities) {
    const auto n = static_cast<std::uint64_t>(num_entities);
    return (static_cast<std::uint64_t>(t.rel) * n + static_cast<std::uint64_t>(t.head)) * n +
           static_cast<std::uint64_t>(t.tail);
}

class Vocabulary {
public:
    std::int32_t intern_entity(const std::string& name) {
        auto [it, fresh] = entity_index_.try_emplace(name, static_cast<std::int32_t>(entity_names_.size()));
        if (fresh) entity_names_.push_back(name);
        return it->second;
    }

    std::int32_t intern_relation(const std::string& name) {
        auto [it, fresh] = relation_index_.try_emplace(name, static_cast<std::int32_t>(relation_names_.size()));
        if (fresh) relation_names_.push_back(name);
        return it->second;
    }

    std::int32_t num_entities() const { return static_cast<std::int32_t>(entity_names_.size()); }
    std::int32_t num_relations() const { return static_cast<std::int32_t>(relation_names_.size()); }

    const std::string& entity_name(std::int32_t i) const { return entity_names_.at(i); }
    const std::string& relation_name(std::int32_t i) const { return relation_names_.at(i); }
    const std::vector<std::string>& entity_names() const { return entity_names_; }
    const std::vector<std::string>& relation_names() const { return relation_names_; }

    bool has_relation(const std::string& name) const { return relation_index_.count(name) > 0; }

private:
    std::vector<std::string> entity_names_;
    std::vector<std::string> relation_names_;
    std::unordered_map<std::string, std::int32_t> entity_index_;
    std::unordered_map<std::string, std::int32_t> relation_index_;
};

// (head, rel) -> sorted unique tails over train u valid u test.
using FilterMap = std::unordered_map<std::uint64_t, std::vector<std::int32_t>>;

enum class TripleFormat { tsv };

struct TripleStore {
    Vocabulary vocab;
    std::vector<Triple> train;
    std::vector<Triple> valid;
    std::vector<Triple> test;
    FilterMap filter;
    bool reciprocals_added = false;
    std::int32_t reciprocal_base = 0;  // |R| before augmentation, when added
    std::size_t noise_count = 0;       // trailing noise triples in train, if any

    // Inverse relation index, defined only after reciprocal augmentation.
    std::int32_t inverse_relation(std::int32_t rel) const {
        if (!reciprocals_added) throw ConfigError("store has no reciprocal relations");
        return rel < reciprocal_base ? rel + reciprocal_base : rel - reciprocal_base;
    }

    std::int32_t num_entities() const { return vocab.num_entities(); }
    std::int32_t num_relations() const { return vocab.num_relations(); }

    const std::vector<Triple>& split(const std::string& name) const {
        if (name == "train") return train;
        if (name == "valid") return valid;
        if (name == "test") return test;
        throw ConfigError("unknown split: " + name);
    }

    const std::vector<std::int32_t>* filtered_tails(std::int32_t head, std::int32_t rel) const {
        auto it = filter.find(pair_key(head, rel));
        return it == filter.end() ? nullptr : &it->second;
    }

    void rebuild_filter() {
        filter.clear();
        for (const auto* split : {&train, &valid, &test})
            for (const Triple& t : *split) filter[pair_key(t.head, t.rel)].push_back(t.tail);
        for (auto& [k, tails] : filter) {
            std::sort(tails.begin(), tails.end());
            tails.erase(std::unique(tails.begin(), tails.end()), tails.end());
        }
    }
};

namespace detail {

inline void read_split(const std::string& path, std::vector<std::array<std::string, 3>>& out,
                       bool required) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        if (required) throw DataError("cannot open " + path);
        return;
    }
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t t1 = line.find('\t');
        std::size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t1 == std::string::npos || t2 == std::string::npos ||
            line.find('\t', t2 + 1) != std::string::npos)
            throw ParseError(path, line_no, "expected 3 tab-separated columns");
        out.push_back({line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1), line.substr(t2 + 1)});
        if (out.back()[0].empty() || out.back()[1].empty() || out.back()[2].empty())
            throw ParseError(path, line_no, "empty column");
    }
}

}  // namespace detail

// Valid/test paths may be empty strings (no such split); named paths must
// exist.
inline TripleStore ingest(const std::string& train_path, const std::string& valid_path,
                          const std::string& test_path, TripleFormat = TripleFormat::tsv) {
    std::vector<std::array<std::string, 3>> raw_train, raw_valid, raw_test;
    detail::read_split(train_path, raw_train, /*required=*/true);
    if (!valid_path.empty()) detail::read_split(valid_path, raw_valid, /*required=*/true);
    if (!test_path.empty()) detail::read_split(test_path, raw_test, /*required=*/true);
    if (raw_train.empty()) throw DataError("empty train split: " + train_path);

    TripleStore store;
    auto index_split = [&](const std::vector<std::array<std::string, 3>>& raw,
                           std::vector<Triple>& out) {
        out.reserve(raw.size());
        for (const auto& [h, r, t] : raw)
            out.push_back({store.vocab.intern_entity(h), store.vocab.intern_relation(r),
                           store.vocab.intern_entity(t)});
    };
    index_split(raw_train, store.train);
    index_split(raw_valid, store.valid);
    index_split(raw_test, store.test);
    store.rebuild_filter();
    return store;
}

// Append (t, r_inverse, h) for every triple of every split; |R| and each
// split double. A second application is rejected.
inline TripleStore add_reciprocals(const TripleStore& input) {
    if (input.reciprocals_added) throw ConfigError("reciprocals already added to this store");
    TripleStore store = input;
    const std::int32_t old_rels = store.vocab.num_relations();
    std::vector<std::int32_t> inverse_of(old_rels);
    for (std::int32_t r = 0; r < old_rels; ++r) {
        std::string name = store.vocab.relation_name(r) + "_inverse";
        while (store.vocab.has_relation(name)) name += "_";
        inverse_of[r] = store.vocab.intern_relation(name);
    }
    for (auto* split : {&store.train, &store.valid, &store.test}) {
        const std::size_t n = split->size();
        split->reserve(2 * n);
        for (std::size_t i = 0; i < n; ++i) {
            const Triple& t = (*split)[i];
            split->push_back({t.tail, inverse_of[t.rel], t.head});
        }
    }
    store.rebuild_filter();
    store.reciprocals_added = true;
    store.reciprocal_base = old_rels;
    return store;
}

// Dense 1vsAll labels: the triple's tail gets positive_value, everything else
// negative_value.
inline Vec one_vs_all_targets(const TripleStore& store, const Triple& triple,
                              double positive_value = 1.0, double negative_value = 0.0) {
    if (!(positive_value > 0.0 && positive_value <= 1.0))
        throw ConfigError("positive target value must be in (0, 1]");
    if (!(negative_value >= 0.0 && negative_value < 1.0) || negative_value >= positive_value)
        throw ConfigError("negative target value must be in [0, 1) and below the positive value");
    Vec labels(static_cast<std::size_t>(store.num_entities()), negative_value);
    labels.at(static_cast<std::size_t>(triple.tail)) = positive_value;
    return labels;
}

// Multi-label targets over the train split: labels[x] = 1 iff (head, rel, x)
// is a training triple.
inline Vec k_vs_all_targets(const TripleStore& store, std::int32_t head, std::int32_t rel) {
    Vec labels(static_cast<std::size_t>(store.num_entities()), 0.0);
    bool seen = false;
    for (const Triple& t : store.train)
        if (t.head == head && t.rel == rel) {
            labels[static_cast<std::size_t>(t.tail)] = 1.0;
            seen = true;
        }
    if (!seen) throw DataError("(head, rel) pair does not occur in the train split");
    return labels;
}

// Round-half-up of fraction * |train| triples drawn uniformly from E x R x E,
// rejecting duplicates and existing train triples. Deterministic per seed.
inline TripleStore inject_noise(const TripleStore& input, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("noise fraction must be in (0, 1)");
    TripleStore store = input;
    const auto n_entities = static_cast<std::uint64_t>(store.num_entities());
    const auto n_relations = static_cast<std::uint64_t>(store.num_relations());
    const auto count =
        static_cast<std::size_t>(std::floor(fraction * static_cast<double>(store.train.size()) + 0.5));

    std::unordered_set<std::uint64_t> taken;
    taken.reserve(store.train.size() * 2 + count * 2);
    for (const Triple& t : store.train) taken.insert(triple_key(t, store.num_entities()));

    const std::uint64_t space = n_entities * n_entities * n_relations;
    if (space - taken.size() < count)
        throw DataError("noise injection: not enough unused triples to sample " +
                        std::to_string(count));

    Rng rng = Rng::stream(seed, "noise");
    std::size_t added = 0;
    while (added < count) {
        Triple t{static_cast<std::int32_t>(rng.next_below(n_entities)),
                 static_cast<std::int32_t>(rng.next_below(n_relations)),
                 static_cast<std::int32_t>(rng.next_below(n_entities))};
        if (taken.insert(triple_key(t, store.num_entities())).second) {
            store.train.push_back(t);
            ++added;
        }
    }
    store.noise_count += count;
    store.rebuild_filter();
    return store;
}

// ---- binary cache ----------------------------------------------------------
// Magic "KKGE1". Internal, versioned by the magic itself; a trailing FNV-1a
// checksum guards against truncation.

namespace detail {

inline constexpr char kCacheMagic[5] = {'K', 'K', 'G', 'E', '1'};

struct Hasher {
    std::uint64_t h = 0xCBF29CE484222325ull;
    void feed(const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 0x100000001B3ull;
        }
    }
};

struct Writer {
    std::ofstream out;
    Hasher hash;
    explicit Writer(const std::string& path) : out(path, std::ios::binary) {
        if (!out) throw DataError("cannot open for writing: " + path);
    }
    void write(const void* p, std::size_t n) {
        out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        hash.feed(p, n);
    }
    void write_u32(std::uint32_t v) { write(&v, sizeof v); }
    void write_u64(std::uint64_t v) { write(&v, sizeof v); }
    void write_string(const std::string& s) {
        write_u64(s.size());
        write(s.data(), s.size());
    }
    void finish() {
        std::uint64_t digest = hash.h;
        out.write(reinterpret_cast<const char*>(&digest), sizeof digest);
        out.flush();
        if (!out) throw DataError("short write while saving");
    }
};

struct Reader {
    std::ifstream in;
    Hasher hash;
    std::string path;
    explicit Reader(const std::string& p) : in(p, std::ios::binary), path(p) {
        if (!in) throw DataError("cannot open " + p);
    }
    void read(void* p, std::size_t n) {
        in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n)
            throw FileTruncatedError("truncated file: " + path);
        hash.feed(p, n);
    }
    std::uint32_t read_u32() {
        std::uint32_t v;
        read(&v, sizeof v);
        return v;
    }
    std::uint64_t read_u64() {
        std::uint64_t v;
        read(&v, sizeof v);
        return v;
    }
    std::string read_string(std::size_t max = 1u << 20) {
        std::uint64_t n = read_u64();
        if (n > max) throw FileFormatError("implausible string length in " + path);
        std::string s(n, '\0');
        read(s.data(), n);
        return s;
    }
    void check_digest() {
        std::uint64_t expect = hash.h;
        std::uint64_t got;
        in.read(reinterpret_cast<char*>(&got), sizeof got);
        if (static_cast<std::size_t>(in.gcount()) != sizeof got)
            throw FileTruncatedError("truncated file: " + path);
        if (got != expect) throw FileChecksumError("checksum mismatch: " + path);
    }
};

}  // namespace detail

inline void save_store(const TripleStore& store, const std::string& path) {
    detail::Writer w(path);
    w.write(detail::kCacheMagic, sizeof detail::kCacheMagic);
    w.write_u32(store.reciprocals_added ? 1u : 0u);
    w.write_u32(static_cast<std::uint32_t>(store.reciprocal_base));
    w.write_u64(store.noise_count);
    w.write_u64(static_cast<std::uint64_t>(store.vocab.num_entities()));
    for (const auto& s : store.vocab.entity_names()) w.write_string(s);
    w.write_u64(static_cast<std::uint64_t>(store.vocab.num_relations()));
    for (const auto& s : store.vocab.relation_names()) w.write_string(s);
    for (const auto* split : {&store.train, &store.valid, &store.test}) {
        w.write_u64(split->size());
        for (const Triple& t : *split) {
            w.write_u32(static_cast<std::uint32_t>(t.head));
            w.write_u32(static_cast<std::uint32_t>(t.rel));
            w.write_u32(static_cast<std::uint32_t>(t.tail));
        }
    }
    w.finish();
}

inline TripleStore load_store(const std::string& path) {
    detail::Reader r(path);
    char magic[5];
    r.read(magic, sizeof magic);
    if (!std::equal(magic, magic + 5, detail::kCacheMagic))
        throw FileFormatError("not a KKGE1 cache: " + path);
    TripleStore store;
    store.reciprocals_added = r.read_u32() != 0;
    store.reciprocal_base = static_cast<std::int32_t>(r.read_u32());
    store.noise_count = r.read_u64();
    const std::uint64_t ne = r.read_u64();
    for (std::uint64_t i = 0; i < ne; ++i) store.vocab.intern_entity(r.read_string());
    const std::uint64_t nr = r.read_u64();
    for (std::uint64_t i = 0; i < nr; ++i) store.vocab.intern_relation(r.read_string());
    for (auto* split : {&store.train, &store.valid, &store.test}) {
        const std::uint64_t n = r.read_u64();
        split->reserve(n);
        for (std::uint64_t i = 0; i < n; ++i) {
            Triple t{static_cast<std::int32_t>(r.read_u32()), static_cast<std::int32_t>(r.read_u32()),
                     static_cast<std::int32_t>(r.read_u32())};
            if (t.head >= store.num_entities() || t.tail >= store.num_entities() ||
                t.rel >= store.num_relations())
                throw FileFormatError("index out of range in " + path);
            split->push_back(t);
        }
    }
    r.check_digest();
    store.rebuild_filter();
    return store;
}

}  // namespace kkge
