#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "paat/rng.hpp"
#include "paat/segments.hpp"

namespace paat {

// The unit of training and evaluation: token ids plus the gold label
// set (sorted, unique, all < L).
struct Document {
    std::string id;
    std::vector<TokenId> tokens;
    std::vector<std::size_t> gold;

    bool operator==(const Document&) const = default;
};

// File-level form before vocabulary mapping.
struct RawDocument {
    std::string id;
    std::vector<std::string> tokens;
    std::vector<std::string> labels;
};

// Bidirectional token <-> id mapping with reserved ids.
class Vocab {
public:
    static constexpr TokenId kPad = 0;
    static constexpr TokenId kUnknown = 1;
    static constexpr TokenId kSectionHeader = 2;

    static Vocab withReserved();

    TokenId add(const std::string& token);
    // Unknown id for unmapped tokens.
    TokenId idOf(const std::string& token) const;
    const std::string& tokenOf(TokenId id) const;
    bool contains(const std::string& token) const { return ids_.count(token) != 0; }
    std::size_t size() const { return tokens_.size(); }
    const std::vector<std::string>& allTokens() const { return tokens_; }

    void save(const std::string& path) const;
    static Vocab load(const std::string& path);

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> ids_;
};

// Synthetic corpus spec: every gold label's evidence is planted into
// `dispersion` distinct equal-width regions (of `regions` total), with
// `density` signature tokens per evidence site. Signature token sets are
// pairwise disjoint and excluded from the noise pool.
struct GenSpec {
    std::size_t labelCount = 20;
    std::size_t vocabSize = 2000;
    std::size_t signaturePerLabel = 8;  // s: size of each label's signature token set
    std::size_t docLenMin = 600, docLenMax = 600;
    std::size_t labelsMin = 1, labelsMax = 4;
    std::size_t dispersion = 6;  // d: regions that must each hold evidence
    std::size_t regions = 6;     // equal-width regions per document
    std::size_t density = 1;     // rho: signature tokens per evidence site
    // Label draw weight is (1+l)^-labelSkew; zero keeps labels uniform.
    double labelSkew = 0.0;
    std::size_t docCount = 100;
    std::uint64_t seed = 1;

    void validate() const;

    std::size_t reservedIds() const { return 3; }
    TokenId signatureBase(std::size_t label) const {
        return static_cast<TokenId>(reservedIds() + label * signaturePerLabel);
    }
    TokenId noiseBase() const {
        return static_cast<TokenId>(reservedIds() + labelCount * signaturePerLabel);
    }

    std::map<std::string, std::string> toKeyValues() const;
    static GenSpec fromKeyValues(const std::map<std::string, std::string>& kv);
};

// Region r of a length-len document is [r*len/R, (r+1)*len/R).
std::pair<std::size_t, std::size_t> regionSpan(std::size_t len, std::size_t regions,
                                               std::size_t r);

std::vector<Document> generateCorpus(const GenSpec& spec);

// The canonical synthetic vocabulary matching generateCorpus id layout.
Vocab genVocab(const GenSpec& spec);

struct AuditReport {
    std::size_t documents = 0;
    // Minimum over (doc, gold label) of regions containing that label's
    // signature tokens.
    std::size_t minRegionsCovered = 0;
    // Occurrences of signature tokens for labels outside the gold set.
    std::size_t foreignSignatureCount = 0;
    bool pass = false;
};

AuditReport auditCorpus(const std::vector<Document>& docs, const GenSpec& spec);

// Label names are "C00".."C<L-1>" (two-digit zero padding minimum).
std::string labelName(std::size_t label);
std::size_t parseLabelName(const std::string& name, std::size_t labelCount);

// One document per line: id \t space-separated tokens \t
// semicolon-separated label names (third field may be empty).
void writeDataset(const std::vector<Document>& docs, const Vocab& vocab,
                  const std::string& path);
std::vector<RawDocument> readDataset(const std::string& path);

// Maps token strings through the vocabulary (absent tokens become the
// unknown id) and label names against labelCount.
std::vector<Document> mapDocuments(const std::vector<RawDocument>& raw, const Vocab& vocab,
                                   std::size_t labelCount);

struct DatasetSplits {
    std::vector<Document> train, valid, test;
};

// Seeded shuffle, then floor-sized valid/test with the remainder going
// to train.
DatasetSplits splitDataset(const std::vector<Document>& docs, double trainRatio,
                           double validRatio, double testRatio, std::uint64_t seed);

Vocab buildVocab(const std::vector<RawDocument>& docs, std::size_t minFreq);

}  // namespace paat
