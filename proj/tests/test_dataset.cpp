#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "kkge/dataset.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using kkge::Triple;
using kkge::TripleStore;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("kkge_ds_" + std::to_string(::getpid()) + "_" +
                                            std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name, const std::string& contents) const {
        const std::string p = (path / name).string();
        std::ofstream f(p, std::ios::binary);
        f << contents;
        return p;
    }
};

TripleStore toy_store() {
    TempDir dir;
    return kkge::ingest(dir.file("train.txt", "a\tp\tb\nb\tp\tc\na\tq\tc\n"),
                        dir.file("valid.txt", ""), dir.file("test.txt", ""));
}

const std::string kDataRoot = std::string(KKGE_SOURCE_DIR) + "/data";

}  // namespace

TEST_SUITE_BEGIN("dataset");

TEST_CASE("toy ingest counts and indexing") {
    TripleStore s = toy_store();
    CHECK(s.num_entities() == 3);
    CHECK(s.num_relations() == 2);
    CHECK(s.train.size() == 3);
    CHECK(s.valid.empty());
    CHECK(s.test.empty());
    // first-occurrence order: a, b, c / p, q
    CHECK(s.vocab.entity_name(0) == "a");
    CHECK(s.vocab.entity_name(1) == "b");
    CHECK(s.vocab.entity_name(2) == "c");
    CHECK(s.vocab.relation_name(1) == "q");
    CHECK(s.train[0] == Triple{0, 0, 1});
    CHECK(s.train[2] == Triple{0, 1, 2});
}

TEST_CASE("malformed lines carry the line number") {
    TempDir dir;
    const std::string train = dir.file("train.txt", "a\tp\tb\nbroken line\n");
    try {
        kkge::ingest(train, dir.file("v.txt", ""), dir.file("t.txt", ""));
        FAIL("expected a parse error");
    } catch (const kkge::ParseError& e) {
        CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }

    const std::string extra = dir.file("extra.txt", "a\tp\tb\tc\n");
    CHECK_THROWS_AS(kkge::ingest(extra, dir.file("v2.txt", ""), dir.file("t2.txt", "")),
                    kkge::ParseError);
}

TEST_CASE("empty train split is rejected") {
    TempDir dir;
    CHECK_THROWS_AS(kkge::ingest(dir.file("train.txt", ""), dir.file("v.txt", "a\tp\tb\n"),
                                 dir.file("t.txt", "")),
                    kkge::DataError);
}

TEST_CASE("bundled benchmarks have the published sizes") {
    TripleStore umls = kkge::ingest(kDataRoot + "/umls/train.txt", kDataRoot + "/umls/valid.txt",
                                    kDataRoot + "/umls/test.txt");
    CHECK(umls.num_entities() == 136);
    CHECK(umls.num_relations() == 93);
    CHECK(umls.train.size() == 10432);
    CHECK(umls.valid.size() == 1304);
    CHECK(umls.test.size() == 1965);

    TripleStore kin = kkge::ingest(kDataRoot + "/kinship/train.txt",
                                   kDataRoot + "/kinship/valid.txt",
                                   kDataRoot + "/kinship/test.txt");
    CHECK(kin.num_entities() == 105);
    CHECK(kin.num_relations() == 51);
    CHECK(kin.train.size() == 17088);
    CHECK(kin.valid.size() == 2136);
    CHECK(kin.test.size() == 3210);
}

TEST_CASE("filter contains exactly the true tails") {
    kkge::Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        // random toy graph, <= 50 triples
        const int ne = 3 + static_cast<int>(rng.next_below(5));
        const int nr = 1 + static_cast<int>(rng.next_below(3));
        std::string train, valid, test;
        std::vector<Triple> all;
        const int n = 5 + static_cast<int>(rng.next_below(46));
        for (int i = 0; i < n; ++i) {
            const int h = static_cast<int>(rng.next_below(ne));
            const int r = static_cast<int>(rng.next_below(nr));
            const int t = static_cast<int>(rng.next_below(ne));
            const std::string line = "e" + std::to_string(h) + "\tr" + std::to_string(r) + "\te" +
                                     std::to_string(t) + "\n";
            (i % 3 == 0 ? train : i % 3 == 1 ? valid : test) += line;
        }
        if (train.empty()) train = "e0\tr0\te1\n";
        TempDir dir;
        TripleStore s = kkge::ingest(dir.file("tr", train), dir.file("va", valid),
                                     dir.file("te", test));

        // brute-force reference: set of (h, r) -> tails over all splits
        std::set<std::pair<std::pair<int, int>, int>> want;
        for (const auto* split : {&s.train, &s.valid, &s.test})
            for (const Triple& t : *split) want.insert({{t.head, t.rel}, t.tail});

        std::size_t filter_entries = 0;
        for (const auto& [key, tails] : s.filter) {
            const auto head = static_cast<std::int32_t>(key >> 32);
            const auto rel = static_cast<std::int32_t>(key & 0xffffffff);
            for (std::int32_t tail : tails) {
                CHECK(want.count({{head, rel}, tail}) == 1);
                ++filter_entries;
            }
        }
        CHECK(filter_entries == want.size());

        for (const auto* split : {&s.train, &s.valid, &s.test})
            for (const Triple& t : *split) {
                const auto* tails = s.filtered_tails(t.head, t.rel);
                REQUIRE(tails != nullptr);
                CHECK(std::count(tails->begin(), tails->end(), t.tail) == 1);
            }
    }
}

TEST_CASE("reciprocal augmentation doubles splits and relations") {
    TempDir dir;
    TripleStore s = kkge::ingest(dir.file("tr", "a\tp\tb\n"), dir.file("va", ""),
                                 dir.file("te", ""));
    TripleStore r = kkge::add_reciprocals(s);
    CHECK(r.num_relations() == 2);
    CHECK(r.train.size() == 2);
    CHECK(r.train[0] == Triple{0, 0, 1});
    CHECK(r.train[1] == Triple{1, 1, 0});
    CHECK(r.vocab.relation_name(1) == "p_inverse");

    CHECK_THROWS_AS(kkge::add_reciprocals(r), kkge::ConfigError);
}

TEST_CASE("reciprocals on a larger store preserve index validity") {
    TripleStore kin = kkge::ingest(kDataRoot + "/kinship/train.txt",
                                   kDataRoot + "/kinship/valid.txt",
                                   kDataRoot + "/kinship/test.txt");
    TripleStore r = kkge::add_reciprocals(kin);
    CHECK(r.num_relations() == 2 * kin.num_relations());
    CHECK(r.train.size() == 2 * kin.train.size());
    CHECK(r.valid.size() == 2 * kin.valid.size());
    CHECK(r.test.size() == 2 * kin.test.size());
    for (const auto* split : {&r.train, &r.valid, &r.test})
        for (const Triple& t : *split) {
            CHECK(t.head < r.num_entities());
            CHECK(t.tail < r.num_entities());
            CHECK(t.rel < r.num_relations());
        }
}

TEST_CASE("one_vs_all targets") {
    TripleStore s = toy_store();
    CHECK(kkge::one_vs_all_targets(s, {0, 0, 1}, 1.0, 0.0) == kkge::Vec{0, 1, 0});
    CHECK(kkge::one_vs_all_targets(s, {0, 0, 1}, 0.95, 0.05) == kkge::Vec{0.05, 0.95, 0.05});

    TempDir dir;
    TripleStore two = kkge::ingest(dir.file("tr", "x\tp\ty\n"), dir.file("va", ""),
                                   dir.file("te", ""));
    CHECK(kkge::one_vs_all_targets(two, {0, 0, 0}, 0.9, 0.1) == kkge::Vec{0.9, 0.1});

    CHECK_THROWS_AS(kkge::one_vs_all_targets(s, {0, 0, 1}, 0.0, 0.0), kkge::ConfigError);
    CHECK_THROWS_AS(kkge::one_vs_all_targets(s, {0, 0, 1}, 0.5, 0.6), kkge::ConfigError);
}

TEST_CASE("k_vs_all targets") {
    TempDir dir;
    TripleStore s = kkge::ingest(dir.file("tr", "a\tp\tb\na\tp\tc\n"), dir.file("va", ""),
                                 dir.file("te", ""));
    CHECK(kkge::k_vs_all_targets(s, 0, 0) == kkge::Vec{0, 1, 1});

    TripleStore one = kkge::ingest(dir.file("tr2", "a\tp\tb\n"), dir.file("va2", ""),
                                   dir.file("te2", ""));
    CHECK(kkge::k_vs_all_targets(one, 0, 0) == kkge::Vec{0, 1});

    CHECK_THROWS_AS(kkge::k_vs_all_targets(s, 1, 0), kkge::DataError);  // (b, p) unseen
}

TEST_CASE("noise injection counts, determinism and disjointness") {
    TripleStore umls = kkge::ingest(kDataRoot + "/umls/train.txt", kDataRoot + "/umls/valid.txt",
                                    kDataRoot + "/umls/test.txt");
    TripleStore noisy = kkge::inject_noise(umls, 0.1, 1);
    CHECK(noisy.train.size() == umls.train.size() + 1043);  // round(1043.2)
    CHECK(noisy.noise_count == 1043);
    CHECK(noisy.valid.size() == umls.valid.size());
    CHECK(noisy.test.size() == umls.test.size());

    TripleStore kin = kkge::ingest(kDataRoot + "/kinship/train.txt",
                                   kDataRoot + "/kinship/valid.txt",
                                   kDataRoot + "/kinship/test.txt");
    TripleStore kn = kkge::inject_noise(kin, 0.1, 1);
    CHECK(kn.train.size() == kin.train.size() + 1709);  // round(1708.8)

    // same seed twice: identical noise; original prefix untouched
    TripleStore again = kkge::inject_noise(umls, 0.1, 1);
    CHECK(again.train == noisy.train);
    for (std::size_t i = 0; i < umls.train.size(); ++i) CHECK(noisy.train[i] == umls.train[i]);

    // none of the noise collides with the original train set, none repeats
    std::set<std::tuple<int, int, int>> orig;
    for (const Triple& t : umls.train) orig.insert({t.head, t.rel, t.tail});
    std::set<std::tuple<int, int, int>> seen;
    for (std::size_t i = umls.train.size(); i < noisy.train.size(); ++i) {
        const Triple& t = noisy.train[i];
        CHECK(orig.count({t.head, t.rel, t.tail}) == 0);
        CHECK(seen.insert({t.head, t.rel, t.tail}).second);
    }

    // filter covers the noise triples
    for (std::size_t i = umls.train.size(); i < noisy.train.size(); ++i) {
        const Triple& t = noisy.train[i];
        const auto* tails = noisy.filtered_tails(t.head, t.rel);
        REQUIRE(tails != nullptr);
        CHECK(std::count(tails->begin(), tails->end(), t.tail) == 1);
    }
}

TEST_CASE("noise injection rejects exhausted spaces and bad fractions") {
    TempDir dir;
    // 2 entities x 1 relation x 2 entities = 4 slots, 3 already taken
    TripleStore s = kkge::ingest(dir.file("tr", "a\tp\ta\na\tp\tb\nb\tp\ta\n"),
                                 dir.file("va", ""), dir.file("te", ""));
    CHECK_THROWS_AS(kkge::inject_noise(s, 0.999, 1), kkge::DataError);  // wants 3, space has 1
    CHECK_THROWS_AS(kkge::inject_noise(s, 0.0, 1), kkge::ConfigError);
    CHECK_THROWS_AS(kkge::inject_noise(s, 1.0, 1), kkge::ConfigError);
}

TEST_CASE("store cache round-trips exactly") {
    TripleStore kin = kkge::ingest(kDataRoot + "/kinship/train.txt",
                                   kDataRoot + "/kinship/valid.txt",
                                   kDataRoot + "/kinship/test.txt");
    TempDir dir;
    const std::string path = (dir.path / "store.kkge").string();
    kkge::save_store(kin, path);
    TripleStore back = kkge::load_store(path);
    CHECK(back.train == kin.train);
    CHECK(back.valid == kin.valid);
    CHECK(back.test == kin.test);
    CHECK(back.vocab.entity_names() == kin.vocab.entity_names());
    CHECK(back.vocab.relation_names() == kin.vocab.relation_names());
    CHECK(back.filter.size() == kin.filter.size());
}

TEST_CASE("store cache detects corruption") {
    TempDir dir;
    TripleStore s = toy_store();
    const std::string path = (dir.path / "store.kkge").string();
    kkge::save_store(s, path);

    // truncation
    {
        std::ifstream in(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), {});
        std::ofstream out(path + ".trunc", std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 6));
    }
    CHECK_THROWS_AS(kkge::load_store(path + ".trunc"), kkge::FileTruncatedError);

    // bit flip
    {
        std::ifstream in(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), {});
        bytes[bytes.size() / 2] ^= 0x40;
        std::ofstream out(path + ".flip", std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    CHECK_THROWS(kkge::load_store(path + ".flip"));

    // wrong magic
    const std::string bogus = dir.file("bogus.bin", "NOTKKGE1 some bytes");
    CHECK_THROWS_AS(kkge::load_store(bogus), kkge::FileFormatError);
}

TEST_SUITE_END();
