#include "paat/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "paat/kvfile.hpp"

namespace paat {

Vocab Vocab::withReserved() {
    Vocab v;
    v.add("<pad>");
    v.add("<unk>");
    v.add("<sec>");
    return v;
}

TokenId Vocab::add(const std::string& token) {
    auto [it, inserted] = ids_.emplace(token, static_cast<TokenId>(tokens_.size()));
    if (!inserted) throw ContractError("vocab: duplicate token \"" + token + "\"");
    tokens_.push_back(token);
    return it->second;
}

TokenId Vocab::idOf(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnknown : it->second;
}

const std::string& Vocab::tokenOf(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
        throw InputError("vocab: no token with id " + std::to_string(id));
    }
    return tokens_[static_cast<std::size_t>(id)];
}

void Vocab::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("vocab: cannot write " + path);
    for (const std::string& t : tokens_) out << t << '\n';
}

Vocab Vocab::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("vocab: cannot read " + path);
    Vocab v;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        v.add(line);
    }
    if (v.size() < 3) throw FormatError("vocab: " + path + " is missing reserved entries");
    return v;
}

void GenSpec::validate() const {
    if (labelCount == 0 || vocabSize == 0 || docCount == 0) {
        throw SpecError("gen spec: labelCount, vocabSize and docCount must be positive");
    }
    if (dispersion < 1) throw SpecError("gen spec: dispersion must be at least 1");
    if (regions < dispersion) {
        throw SpecError("gen spec: " + std::to_string(regions) + " regions cannot host " +
                        std::to_string(dispersion) + " dispersed evidence sites");
    }
    if (docLenMin == 0 || docLenMax < docLenMin) throw SpecError("gen spec: bad docLength range");
    if (labelsMax < labelsMin || labelsMax > labelCount) {
        throw SpecError("gen spec: bad labelsPerDoc range");
    }
    if (density < 1) throw SpecError("gen spec: density must be at least 1");
    if (labelSkew < 0.0) throw SpecError("gen spec: labelSkew must be non-negative");
    if (signaturePerLabel < dispersion * density) {
        throw SpecError("gen spec: signaturePerLabel " + std::to_string(signaturePerLabel) +
                        " cannot cover dispersion " + std::to_string(dispersion) + " x density " +
                        std::to_string(density) + " distinct plants");
    }
    if (docLenMin < regions) throw SpecError("gen spec: documents shorter than the region count");
    // Worst-case signature volume must leave room in the shortest document.
    const std::size_t volume = labelsMax * dispersion * density;
    if (volume > docLenMin) {
        throw SpecError("gen spec: signature volume " + std::to_string(volume) +
                        " exceeds docLength " + std::to_string(docLenMin));
    }
    // Every region must be able to host the worst-case plants landing in it.
    if (labelsMax * density > docLenMin / regions) {
        throw SpecError("gen spec: regions of width " + std::to_string(docLenMin / regions) +
                        " cannot absorb " + std::to_string(labelsMax * density) +
                        " plants each");
    }
    if (static_cast<std::size_t>(noiseBase()) >= vocabSize) {
        throw SpecError("gen spec: vocabSize " + std::to_string(vocabSize) +
                        " leaves no noise tokens after " + std::to_string(labelCount) + " x " +
                        std::to_string(signaturePerLabel) + " signature ids");
    }
}

std::pair<std::size_t, std::size_t> regionSpan(std::size_t len, std::size_t regions,
                                               std::size_t r) {
    return {r * len / regions, (r + 1) * len / regions};
}

std::vector<Document> generateCorpus(const GenSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const TokenId noiseBase = spec.noiseBase();
    const std::size_t noisePool = spec.vocabSize - static_cast<std::size_t>(noiseBase);

    std::vector<Document> docs;
    docs.reserve(spec.docCount);
    for (std::size_t di = 0; di < spec.docCount; ++di) {
        Document doc;
        {
            std::ostringstream id;
            id << "d";
            for (std::size_t w = 10000; w >= 10; w /= 10)
                if (di < w) id << "0";
            id << di;
            doc.id = id.str();
        }
        const std::size_t len =
            spec.docLenMin + static_cast<std::size_t>(rng.below(spec.docLenMax - spec.docLenMin + 1));
        const std::size_t nLabels =
            spec.labelsMin + static_cast<std::size_t>(rng.below(spec.labelsMax - spec.labelsMin + 1));
        if (spec.labelSkew == 0.0) {
            doc.gold = rng.sampleWithout(spec.labelCount, nLabels);
        } else {
            // Weighted draws without replacement; low label indices are
            // the frequent head of the distribution.
            std::vector<double> weights(spec.labelCount);
            double total = 0.0;
            for (std::size_t l = 0; l < spec.labelCount; ++l) {
                weights[l] = std::pow(1.0 + static_cast<double>(l), -spec.labelSkew);
                total += weights[l];
            }
            std::set<std::size_t> chosen;
            while (chosen.size() < nLabels) {
                double roll = rng.uniform() * total;
                std::size_t pick = spec.labelCount - 1;
                for (std::size_t l = 0; l < spec.labelCount; ++l) {
                    if (roll < weights[l]) {
                        pick = l;
                        break;
                    }
                    roll -= weights[l];
                }
                chosen.insert(pick);
            }
            doc.gold.assign(chosen.begin(), chosen.end());
        }
        std::sort(doc.gold.begin(), doc.gold.end());

        doc.tokens.assign(len, TokenId{-1});
        for (std::size_t label : doc.gold) {
            const auto siteRegions = rng.sampleWithout(spec.regions, spec.dispersion);
            const auto sigPicks =
                rng.sampleWithout(spec.signaturePerLabel, spec.dispersion * spec.density);
            std::size_t pick = 0;
            for (std::size_t r : siteRegions) {
                const auto [r0, r1] = regionSpan(len, spec.regions, r);
                for (std::size_t j = 0; j < spec.density; ++j, ++pick) {
                    const TokenId tok =
                        spec.signatureBase(label) + static_cast<TokenId>(sigPicks[pick]);
                    // Rejection-sample a free slot; fall back to a scan so
                    // termination never depends on luck.
                    std::size_t pos = 0;
                    bool placed = false;
                    for (int attempt = 0; attempt < 64; ++attempt) {
                        pos = r0 + static_cast<std::size_t>(rng.below(r1 - r0));
                        if (doc.tokens[pos] == -1) {
                            placed = true;
                            break;
                        }
                    }
                    if (!placed) {
                        const std::size_t start =
                            r0 + static_cast<std::size_t>(rng.below(r1 - r0));
                        for (std::size_t off = 0; off < r1 - r0; ++off) {
                            const std::size_t cand = r0 + (start - r0 + off) % (r1 - r0);
                            if (doc.tokens[cand] == -1) {
                                pos = cand;
                                placed = true;
                                break;
                            }
                        }
                    }
                    if (!placed) throw ContractError("generateCorpus: region overfull");
                    doc.tokens[pos] = tok;
                }
            }
        }
        for (TokenId& t : doc.tokens) {
            if (t == -1) t = noiseBase + static_cast<TokenId>(rng.below(noisePool));
        }
        docs.push_back(std::move(doc));
    }
    return docs;
}

Vocab genVocab(const GenSpec& spec) {
    Vocab v = Vocab::withReserved();
    for (std::size_t l = 0; l < spec.labelCount; ++l)
        for (std::size_t j = 0; j < spec.signaturePerLabel; ++j)
            v.add("sig" + std::to_string(l) + "_" + std::to_string(j));
    for (std::size_t i = static_cast<std::size_t>(spec.noiseBase()); i < spec.vocabSize; ++i)
        v.add("w" + std::to_string(i));
    return v;
}

AuditReport auditCorpus(const std::vector<Document>& docs, const GenSpec& spec) {
    AuditReport report;
    report.documents = docs.size();
    report.minRegionsCovered = spec.regions + 1;
    std::size_t goldPairs = 0;
    for (const Document& doc : docs) {
        std::set<std::size_t> goldSet(doc.gold.begin(), doc.gold.end());
        for (std::size_t label = 0; label < spec.labelCount; ++label) {
            const TokenId lo = spec.signatureBase(label);
            const TokenId hi = lo + static_cast<TokenId>(spec.signaturePerLabel);
            if (goldSet.count(label)) {
                ++goldPairs;
                std::set<std::size_t> covered;
                for (std::size_t r = 0; r < spec.regions; ++r) {
                    const auto [r0, r1] = regionSpan(doc.tokens.size(), spec.regions, r);
                    for (std::size_t t = r0; t < r1; ++t) {
                        if (doc.tokens[t] >= lo && doc.tokens[t] < hi) {
                            covered.insert(r);
                            break;
                        }
                    }
                }
                report.minRegionsCovered = std::min(report.minRegionsCovered, covered.size());
            } else {
                for (TokenId t : doc.tokens)
                    if (t >= lo && t < hi) ++report.foreignSignatureCount;
            }
        }
    }
    if (goldPairs == 0) report.minRegionsCovered = 0;
    report.pass = report.foreignSignatureCount == 0 &&
                  (goldPairs == 0 || report.minRegionsCovered >= spec.dispersion);
    return report;
}

std::string labelName(std::size_t label) {
    std::string num = std::to_string(label);
    if (num.size() < 2) num.insert(num.begin(), '0');
    return "C" + num;
}

std::size_t parseLabelName(const std::string& name, std::size_t labelCount) {
    if (name.size() < 2 || name[0] != 'C' ||
        name.find_first_not_of("0123456789", 1) != std::string::npos) {
        throw InputError("unknown label name \"" + name + "\"");
    }
    const std::size_t idx = std::stoul(name.substr(1));
    if (idx >= labelCount) {
        throw InputError("label \"" + name + "\" is outside the " + std::to_string(labelCount) +
                         "-label set");
    }
    return idx;
}

void writeDataset(const std::vector<Document>& docs, const Vocab& vocab,
                  const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("dataset: cannot write " + path);
    for (const Document& doc : docs) {
        out << doc.id << '\t';
        for (std::size_t t = 0; t < doc.tokens.size(); ++t) {
            if (t) out << ' ';
            out << vocab.tokenOf(doc.tokens[t]);
        }
        out << '\t';
        for (std::size_t l = 0; l < doc.gold.size(); ++l) {
            if (l) out << ';';
            out << labelName(doc.gold[l]);
        }
        out << '\n';
    }
}

namespace {

std::vector<std::string> splitOn(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        if (pos == std::string::npos) {
            parts.push_back(s.substr(start));
            return parts;
        }
        parts.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

}  // namespace

std::vector<RawDocument> readDataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("dataset: cannot read " + path);
    std::vector<RawDocument> docs;
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = splitOn(line, '\t');
        if (fields.size() != 3) {
            throw FormatError("dataset: parse error at line " + std::to_string(lineNo) +
                              ": expected 3 tab-separated fields, found " +
                              std::to_string(fields.size()));
        }
        RawDocument doc;
        doc.id = fields[0];
        if (doc.id.empty()) {
            throw FormatError("dataset: parse error at line " + std::to_string(lineNo) +
                              ": empty document id");
        }
        for (const std::string& tok : splitOn(fields[1], ' ')) {
            if (tok.empty()) {
                throw FormatError("dataset: parse error at line " + std::to_string(lineNo) +
                                  ": empty token (doubled space?)");
            }
            doc.tokens.push_back(tok);
        }
        if (doc.tokens.empty()) {
            throw FormatError("dataset: parse error at line " + std::to_string(lineNo) +
                              ": document has no tokens");
        }
        if (!fields[2].empty()) {
            std::set<std::string> seen;
            for (const std::string& lab : splitOn(fields[2], ';')) {
                if (lab.empty() || !seen.insert(lab).second) {
                    throw FormatError("dataset: parse error at line " + std::to_string(lineNo) +
                                      ": bad label field \"" + fields[2] + "\"");
                }
                doc.labels.push_back(lab);
            }
        }
        docs.push_back(std::move(doc));
    }
    return docs;
}

std::vector<Document> mapDocuments(const std::vector<RawDocument>& raw, const Vocab& vocab,
                                   std::size_t labelCount) {
    std::vector<Document> docs;
    docs.reserve(raw.size());
    for (const RawDocument& r : raw) {
        Document doc;
        doc.id = r.id;
        doc.tokens.reserve(r.tokens.size());
        for (const std::string& tok : r.tokens) doc.tokens.push_back(vocab.idOf(tok));
        for (const std::string& lab : r.labels) doc.gold.push_back(parseLabelName(lab, labelCount));
        std::sort(doc.gold.begin(), doc.gold.end());
        docs.push_back(std::move(doc));
    }
    return docs;
}

DatasetSplits splitDataset(const std::vector<Document>& docs, double trainRatio,
                           double validRatio, double testRatio, std::uint64_t seed) {
    if (trainRatio <= 0 || validRatio <= 0 || testRatio <= 0) {
        throw InputError("splitDataset: ratios must be positive");
    }
    if (std::fabs(trainRatio + validRatio + testRatio - 1.0) > 1e-9) {
        throw InputError("splitDataset: ratios must sum to 1");
    }
    if (docs.size() < 3) throw InputError("splitDataset: fewer documents than splits");

    std::vector<std::size_t> order(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);

    const auto n = static_cast<double>(docs.size());
    const std::size_t nValid = static_cast<std::size_t>(validRatio * n);
    const std::size_t nTest = static_cast<std::size_t>(testRatio * n);
    const std::size_t nTrain = docs.size() - nValid - nTest;  // remainder goes to train

    DatasetSplits splits;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const Document& d = docs[order[i]];
        if (i < nTrain) splits.train.push_back(d);
        else if (i < nTrain + nValid) splits.valid.push_back(d);
        else splits.test.push_back(d);
    }
    return splits;
}

Vocab buildVocab(const std::vector<RawDocument>& docs, std::size_t minFreq) {
    if (docs.empty()) throw InputError("buildVocab: no documents");
    std::map<std::string, std::size_t> freq;
    for (const RawDocument& d : docs)
        for (const std::string& t : d.tokens) ++freq[t];

    std::vector<std::pair<std::string, std::size_t>> eligible;
    for (const auto& [tok, f] : freq)
        if (f >= minFreq) eligible.emplace_back(tok, f);
    // Descending frequency, ties lexicographic (map iteration is already
    // sorted, stable_sort keeps that order inside equal frequencies).
    std::stable_sort(eligible.begin(), eligible.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });

    Vocab v = Vocab::withReserved();
    for (const auto& [tok, f] : eligible) {
        if (!v.contains(tok)) v.add(tok);
    }
    return v;
}

}  // namespace paat

namespace paat {

std::map<std::string, std::string> GenSpec::toKeyValues() const {
    std::map<std::string, std::string> kv;
    kv["labels"] = std::to_string(labelCount);
    kv["vocab"] = std::to_string(vocabSize);
    kv["signature_per_label"] = std::to_string(signaturePerLabel);
    kv["doc_len_min"] = std::to_string(docLenMin);
    kv["doc_len_max"] = std::to_string(docLenMax);
    kv["labels_per_doc_min"] = std::to_string(labelsMin);
    kv["labels_per_doc_max"] = std::to_string(labelsMax);
    kv["dispersion"] = std::to_string(dispersion);
    kv["regions"] = std::to_string(regions);
    kv["density"] = std::to_string(density);
    kv["label_skew"] = formatDouble(labelSkew);
    kv["docs"] = std::to_string(docCount);
    kv["seed"] = std::to_string(seed);
    return kv;
}

GenSpec GenSpec::fromKeyValues(const std::map<std::string, std::string>& kv) {
    GenSpec s;
    s.labelCount = kvU64(kv, "labels", s.labelCount);
    s.vocabSize = kvU64(kv, "vocab", s.vocabSize);
    s.signaturePerLabel = kvU64(kv, "signature_per_label", s.signaturePerLabel);
    s.docLenMin = kvU64(kv, "doc_len_min", s.docLenMin);
    s.docLenMax = kvU64(kv, "doc_len_max", s.docLenMax);
    s.labelsMin = kvU64(kv, "labels_per_doc_min", s.labelsMin);
    s.labelsMax = kvU64(kv, "labels_per_doc_max", s.labelsMax);
    s.dispersion = kvU64(kv, "dispersion", s.dispersion);
    s.regions = kvU64(kv, "regions", s.regions);
    s.density = kvU64(kv, "density", s.density);
    s.labelSkew = kvDouble(kv, "label_skew", s.labelSkew);
    s.docCount = kvU64(kv, "docs", s.docCount);
    s.seed = kvU64(kv, "seed", s.seed);
    return s;
}

}  // namespace paat
