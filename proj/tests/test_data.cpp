#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <set>

#include "paat/data.hpp"

using namespace paat;

namespace {

std::string tmpPath(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

GenSpec tinySpec() {
    GenSpec s;
    s.labelCount = 5;
    s.vocabSize = 120;
    s.signaturePerLabel = 6;
    s.docLenMin = s.docLenMax = 60;
    s.labelsMin = 1;
    s.labelsMax = 3;
    s.dispersion = 3;
    s.regions = 6;
    s.density = 2;
    s.docCount = 40;
    s.seed = 7;
    return s;
}

}  // namespace

TEST_CASE("gen spec rejects infeasible volumes") {
    GenSpec s = tinySpec();
    s.docLenMin = s.docLenMax = 10;
    s.signaturePerLabel = 50;
    s.dispersion = 5;
    s.density = 10;
    CHECK_THROWS_AS(s.validate(), SpecError);

    GenSpec d = tinySpec();
    d.dispersion = 9;  // more sites than regions
    CHECK_THROWS_AS(d.validate(), SpecError);

    GenSpec v = tinySpec();
    v.vocabSize = 3 + v.labelCount * v.signaturePerLabel;  // no noise ids left
    CHECK_THROWS_AS(v.validate(), SpecError);
}

TEST_CASE("generated corpora are deterministic under the seed") {
    GenSpec s = tinySpec();
    auto a = generateCorpus(s);
    auto b = generateCorpus(s);
    CHECK(a == b);
    s.seed = 8;
    CHECK(generateCorpus(s) != a);
}

TEST_CASE("dispersed corpus plants evidence in the required regions") {
    GenSpec s = tinySpec();
    auto docs = generateCorpus(s);
    AuditReport audit = auditCorpus(docs, s);
    CHECK(audit.documents == s.docCount);
    CHECK(audit.minRegionsCovered >= s.dispersion);
    CHECK(audit.foreignSignatureCount == 0);
    CHECK(audit.pass);
}

TEST_CASE("concentrated corpus keeps each label inside one region") {
    GenSpec s = tinySpec();
    s.dispersion = 1;
    auto docs = generateCorpus(s);
    AuditReport audit = auditCorpus(docs, s);
    CHECK(audit.pass);
    for (const Document& doc : docs) {
        for (std::size_t label : doc.gold) {
            const TokenId lo = s.signatureBase(label);
            const TokenId hi = lo + static_cast<TokenId>(s.signaturePerLabel);
            std::set<std::size_t> covered;
            for (std::size_t r = 0; r < s.regions; ++r) {
                auto [r0, r1] = regionSpan(doc.tokens.size(), s.regions, r);
                for (std::size_t t = r0; t < r1; ++t)
                    if (doc.tokens[t] >= lo && doc.tokens[t] < hi) covered.insert(r);
            }
            CHECK(covered.size() == 1);
        }
    }
}

TEST_CASE("dataset files round-trip exactly") {
    GenSpec s = tinySpec();
    auto docs = generateCorpus(s);
    Vocab vocab = genVocab(s);
    const std::string path = tmpPath("paat_roundtrip.tsv");
    writeDataset(docs, vocab, path);
    auto raw = readDataset(path);
    auto back = mapDocuments(raw, vocab, s.labelCount);
    CHECK(back == docs);
    std::remove(path.c_str());
}

TEST_CASE("empty label sets serialize as an empty field") {
    Vocab vocab = Vocab::withReserved();
    vocab.add("hello");
    Document doc{"d1", {3}, {}};
    const std::string path = tmpPath("paat_empty_labels.tsv");
    writeDataset({doc}, vocab, path);
    auto raw = readDataset(path);
    REQUIRE(raw.size() == 1);
    CHECK(raw[0].labels.empty());
    auto back = mapDocuments(raw, vocab, 4);
    CHECK(back[0] == doc);
    std::remove(path.c_str());
}

TEST_CASE("parse errors carry line numbers") {
    const std::string path = tmpPath("paat_bad.tsv");
    {
        FILE* f = std::fopen(path.c_str(), "wb");
        std::fputs("d1\ta b c\tC00\n", f);
        std::fputs("d2\tmissing-labels-field\n", f);
        std::fclose(f);
    }
    CHECK_THROWS_WITH_AS(readDataset(path), doctest::Contains("line 2"), FormatError);
    {
        FILE* f = std::fopen(path.c_str(), "wb");
        std::fputs("d1\ta b\tC00;C00\n", f);
        std::fclose(f);
    }
    CHECK_THROWS_WITH_AS(readDataset(path), doctest::Contains("line 1"), FormatError);
    std::remove(path.c_str());
}

TEST_CASE("unknown label names are rejected when mapping") {
    Vocab vocab = Vocab::withReserved();
    vocab.add("x");
    RawDocument raw{"d1", {"x"}, {"C9z"}};
    CHECK_THROWS_AS(mapDocuments({raw}, vocab, 5), InputError);
    RawDocument outOfRange{"d2", {"x"}, {"C07"}};
    CHECK_THROWS_AS(mapDocuments({outOfRange}, vocab, 5), InputError);
    RawDocument ok{"d3", {"x", "y"}, {"C04"}};
    auto docs = mapDocuments({ok}, vocab, 5);
    CHECK(docs[0].gold == std::vector<std::size_t>{4});
    CHECK(docs[0].tokens == std::vector<TokenId>{3, Vocab::kUnknown});
}

TEST_CASE("splits follow the floor-then-remainder rule") {
    std::vector<Document> docs;
    for (int i = 0; i < 100; ++i) docs.push_back({"d" + std::to_string(i), {1}, {}});
    auto s = splitDataset(docs, 0.8, 0.1, 0.1, 3);
    CHECK(s.train.size() == 80);
    CHECK(s.valid.size() == 10);
    CHECK(s.test.size() == 10);

    docs.push_back({"d100", {1}, {}});
    auto s2 = splitDataset(docs, 0.8, 0.1, 0.1, 3);
    CHECK(s2.train.size() == 81);
    CHECK(s2.valid.size() == 10);
    CHECK(s2.test.size() == 10);
}

TEST_CASE("splits are deterministic, disjoint and covering") {
    std::vector<Document> docs;
    for (int i = 0; i < 57; ++i) docs.push_back({"d" + std::to_string(i), {1}, {}});
    auto a = splitDataset(docs, 0.6, 0.2, 0.2, 11);
    auto b = splitDataset(docs, 0.6, 0.2, 0.2, 11);
    CHECK(a.train == b.train);
    CHECK(a.valid == b.valid);
    CHECK(a.test == b.test);

    std::set<std::string> ids;
    for (const auto* split : {&a.train, &a.valid, &a.test})
        for (const Document& d : *split) CHECK(ids.insert(d.id).second);
    CHECK(ids.size() == docs.size());

    CHECK_THROWS_AS(splitDataset({docs[0], docs[1]}, 0.8, 0.1, 0.1, 1), InputError);
    CHECK_THROWS_AS(splitDataset(docs, 0.9, 0.2, 0.1, 1), InputError);
}

TEST_CASE("vocab assigns ids by frequency with lexicographic ties") {
    std::vector<RawDocument> docs = {
        {"d1", {"a", "b", "c", "a"}, {}},
        {"d2", {"b", "a", "b"}, {}},
    };
    // freq: a=3, b=3, c=1
    Vocab v = buildVocab(docs, 2);
    CHECK(v.idOf("a") == 3);
    CHECK(v.idOf("b") == 4);
    CHECK(v.idOf("c") == Vocab::kUnknown);

    Vocab all = buildVocab(docs, 1);
    CHECK(all.idOf("c") == 5);
    CHECK(all.size() == 6);
    CHECK(all.tokenOf(0) == "<pad>");
    CHECK(all.tokenOf(2) == "<sec>");
}

TEST_CASE("vocab files round-trip") {
    GenSpec s = tinySpec();
    Vocab v = genVocab(s);
    const std::string path = tmpPath("paat_vocab.txt");
    v.save(path);
    Vocab back = Vocab::load(path);
    CHECK(back.allTokens() == v.allTokens());
    std::remove(path.c_str());
}

TEST_CASE("label names") {
    CHECK(labelName(0) == "C00");
    CHECK(labelName(7) == "C07");
    CHECK(labelName(19) == "C19");
    CHECK(labelName(123) == "C123");
    CHECK(parseLabelName("C00", 20) == 0);
    CHECK(parseLabelName("C19", 20) == 19);
    CHECK_THROWS_AS(parseLabelName("C20", 20), InputError);
    CHECK_THROWS_AS(parseLabelName("X1", 20), InputError);
}

TEST_CASE("gen spec key=value round trip") {
    GenSpec s = tinySpec();
    GenSpec back = GenSpec::fromKeyValues(s.toKeyValues());
    CHECK(back.toKeyValues() == s.toKeyValues());
}

TEST_CASE("label skew produces a frequency-ordered long tail") {
    GenSpec s = tinySpec();
    s.labelSkew = 1.2;
    s.docCount = 400;
    auto docs = generateCorpus(s);
    std::vector<std::size_t> freq(s.labelCount, 0);
    for (const Document& d : docs)
        for (std::size_t l : d.gold) ++freq[l];
    CHECK(freq.front() > 2 * freq.back());
    // Same seed, same corpus, and the audit still holds.
    CHECK(generateCorpus(s) == docs);
    CHECK(auditCorpus(docs, s).pass);

    GenSpec bad = tinySpec();
    bad.labelSkew = -0.5;
    CHECK_THROWS_AS(bad.validate(), SpecError);
}
