#include "paat/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "paat/kvfile.hpp"
#include "paat/metrics.hpp"
#include "paat/model.hpp"
#include "paat/presets.hpp"

namespace paat {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> splitList(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

// Pre-scan for a file option so its values act as a baseline under the
// regular flags (defaults < config file < flags).
std::string scanFileOption(const std::vector<std::string>& args, const std::string& name) {
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == name && i + 1 < args.size()) return args[i + 1];
        if (args[i].rfind(name + "=", 0) == 0) return args[i].substr(name.size() + 1);
    }
    return "";
}

void writeFile(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    out << content;
}

// ---- gen-data ----------------------------------------------------------

struct GenDataArgs {
    GenSpec spec;
    std::string outDir;
    double trainFrac = 0.8, validFrac = 0.1, testFrac = 0.1;
};

void registerGenSpecFlags(CLI::App* cmd, GenSpec& spec) {
    cmd->add_option_function<std::size_t>(
        "--labels", [&](std::size_t v) { spec.labelCount = v; }, "Label count L");
    cmd->add_option_function<std::size_t>(
        "--vocab-size", [&](std::size_t v) { spec.vocabSize = v; }, "Vocabulary size");
    cmd->add_option_function<std::size_t>(
        "--signature-per-label", [&](std::size_t v) { spec.signaturePerLabel = v; },
        "Signature tokens reserved per label");
    cmd->add_option_function<std::size_t>(
        "--doc-len",
        [&](std::size_t v) {
            spec.docLenMin = v;
            spec.docLenMax = v;
        },
        "Fixed document length");
    cmd->add_option_function<std::size_t>(
        "--doc-len-min", [&](std::size_t v) { spec.docLenMin = v; }, "Shortest document");
    cmd->add_option_function<std::size_t>(
        "--doc-len-max", [&](std::size_t v) { spec.docLenMax = v; }, "Longest document");
    cmd->add_option_function<std::size_t>(
        "--labels-per-doc-min", [&](std::size_t v) { spec.labelsMin = v; },
        "Fewest gold labels per document");
    cmd->add_option_function<std::size_t>(
        "--labels-per-doc-max", [&](std::size_t v) { spec.labelsMax = v; },
        "Most gold labels per document");
    cmd->add_option_function<std::size_t>(
        "--dispersion", [&](std::size_t v) { spec.dispersion = v; },
        "Regions that must each contain evidence (d)");
    cmd->add_option_function<std::size_t>(
        "--regions", [&](std::size_t v) { spec.regions = v; }, "Equal-width regions per document");
    cmd->add_option_function<std::size_t>(
        "--density", [&](std::size_t v) { spec.density = v; },
        "Signature tokens per evidence site");
    cmd->add_option_function<double>(
        "--label-skew", [&](double v) { spec.labelSkew = v; },
        "Label frequency skew exponent (0 = uniform)");
    cmd->add_option_function<std::size_t>(
        "--docs", [&](std::size_t v) { spec.docCount = v; }, "Documents to generate");
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t v) { spec.seed = v; }, "Generator seed");
}

int cmdGenData(const GenDataArgs& a) {
    a.spec.validate();
    const auto docs = generateCorpus(a.spec);
    const Vocab vocab = genVocab(a.spec);
    const AuditReport audit = auditCorpus(docs, a.spec);
    if (!audit.pass) throw ContractError("gen-data: generated corpus failed its own audit");

    fs::create_directories(a.outDir);
    const auto splits =
        splitDataset(docs, a.trainFrac, a.validFrac, a.testFrac, a.spec.seed);
    writeDataset(splits.train, vocab, a.outDir + "/train.tsv");
    writeDataset(splits.valid, vocab, a.outDir + "/valid.tsv");
    writeDataset(splits.test, vocab, a.outDir + "/test.tsv");
    vocab.save(a.outDir + "/vocab.txt");
    writeKeyValueFile(a.spec.toKeyValues(), a.outDir + "/genspec.txt");

    nlohmann::ordered_json j;
    j["documents"] = audit.documents;
    j["train"] = splits.train.size();
    j["valid"] = splits.valid.size();
    j["test"] = splits.test.size();
    j["dispersion"] = a.spec.dispersion;
    j["min_regions_covered"] = audit.minRegionsCovered;
    j["foreign_signature_count"] = audit.foreignSignatureCount;
    j["pass"] = audit.pass;
    writeFile(a.outDir + "/audit.json", j.dump(2) + "\n");

    std::cout << "gen-data: " << audit.documents << " documents (train " << splits.train.size()
              << ", valid " << splits.valid.size() << ", test " << splits.test.size()
              << "); dispersion audit: every gold label covers >= " << audit.minRegionsCovered
              << " of " << a.spec.regions << " regions (required " << a.spec.dispersion
              << "), foreign signatures " << audit.foreignSignatureCount << "\n";
    return 0;
}

// ---- shared model/data loading ----------------------------------------

void registerModelFlags(CLI::App* cmd, PaatConfig& cfg) {
    cmd->add_option_function<std::string>(
        "--variant", [&](const std::string& v) { cfg.variant = parseVariant(v); },
        "paat | paat-pe | paat-pa | paat-pea | paat-bi");
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t v) { cfg.seed = v; }, "Run seed");
    cmd->add_option_function<std::size_t>(
        "--epochs", [&](std::size_t v) { cfg.epochs = v; }, "Training epochs");
    cmd->add_option_function<double>("--lr", [&](double v) { cfg.lr = v; }, "Learning rate");
    cmd->add_option_function<std::size_t>(
        "--n-enc", [&](std::size_t v) { cfg.nEnc = v; }, "Encoding partitions");
    cmd->add_option_function<std::size_t>(
        "--n-att", [&](std::size_t v) { cfg.nAtt = v; }, "Attention partitions");
    cmd->add_option_function<double>(
        "--alpha", [&](double v) { cfg.alpha = v; }, "Segment-softmax smoothing constant");
    cmd->add_option_function<std::size_t>(
        "--embed-dim", [&](std::size_t v) { cfg.embedDim = v; }, "Embedding width e");
    cmd->add_option_function<std::size_t>(
        "--hidden", [&](std::size_t v) { cfg.hiddenSize = v; }, "LSTM hidden size u");
    cmd->add_option_function<std::size_t>(
        "--attn-dim", [&](std::size_t v) { cfg.attnDim = v; }, "Attention depth d_a");
    cmd->add_option_function<double>(
        "--dropout", [&](double v) { cfg.dropoutRate = v; }, "Dropout rate on the bi-LSTM output");
    cmd->add_option_function<double>(
        "--gamma", [&](double v) { cfg.gamma = v; }, "Segment context-mix weight");
    cmd->add_option_function<std::string>(
        "--encoder",
        [&](const std::string& v) {
            if (v == "trainable-embedding") {
                cfg.encoderKind = SegmentEncoderSpec::Kind::TrainableEmbedding;
            } else if (v == "frozen-projection") {
                cfg.encoderKind = SegmentEncoderSpec::Kind::FrozenProjection;
            } else {
                throw CLI::ValidationError("--encoder",
                                           "expected trainable-embedding or frozen-projection");
            }
        },
        "Segment encoder kind");
    cmd->add_option_function<std::size_t>(
        "--max-tokens", [&](std::size_t v) { cfg.maxTokens = v; }, "Input length cap");
    cmd->add_option_function<std::size_t>(
        "--patience", [&](std::size_t v) { cfg.patience = v; },
        "Early-stop patience (0 disables)");
    cmd->add_option_function<double>(
        "--weight-decay", [&](double v) { cfg.weightDecay = v; }, "AdamW weight decay");
    cmd->add_option_function<double>(
        "--threshold", [&](double v) { cfg.threshold = v; }, "Decision threshold");
    cmd->add_option_function<std::size_t>(
        "--head-hidden", [&](std::size_t v) { cfg.headHidden = v; },
        "Optional classifier hidden width (0 = linear head)");
    cmd->add_option_function<std::size_t>(
        "--grad-accum", [&](std::size_t v) { cfg.gradAccum = v; }, "Gradient accumulation steps");
    cmd->add_option_function<std::size_t>(
        "--labels", [&](std::size_t v) { cfg.labelCount = v; }, "Label count override");
    cmd->add_flag_function(
        "--split-on-headers",
        [&](std::int64_t) { cfg.splitOnHeaders = true; },
        "Segment encodings at section-header tokens instead of evenly");
}

std::vector<Document> loadSplit(const std::string& path, const Vocab& vocab,
                                std::size_t labelCount) {
    return mapDocuments(readDataset(path), vocab, labelCount);
}

std::size_t deriveLabelCount(const std::string& dataDir) {
    const std::string genspec = dataDir + "/genspec.txt";
    if (fs::exists(genspec)) {
        return GenSpec::fromKeyValues(readKeyValueFile(genspec)).labelCount;
    }
    std::size_t maxLabel = 0;
    bool any = false;
    for (const char* name : {"/train.tsv", "/valid.tsv"}) {
        for (const RawDocument& d : readDataset(dataDir + name)) {
            for (const std::string& lab : d.labels) {
                maxLabel = std::max(maxLabel, parseLabelName(lab, SIZE_MAX));
                any = true;
            }
        }
    }
    if (!any) throw InputError("cannot derive the label count from " + dataDir +
                               "; pass --labels");
    return maxLabel + 1;
}

std::string joinVocab(const Vocab& vocab) {
    std::string out;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        if (i) out += ' ';
        out += vocab.tokenOf(static_cast<TokenId>(i));
    }
    return out;
}

Vocab vocabFromJoined(const std::string& joined) {
    Vocab v;
    std::istringstream in(joined);
    std::string tok;
    while (in >> tok) v.add(tok);
    if (v.size() < 3) throw FormatError("checkpoint vocab block is missing reserved entries");
    return v;
}

std::string epochLogText(const std::vector<EpochLog>& log) {
    std::ostringstream out;
    out << "epoch\ttrain_bce\tvalid_micro_f1\n";
    for (const EpochLog& e : log) {
        out << e.epoch << '\t' << formatDouble(e.trainBce) << '\t'
            << formatDouble(e.validMicroF1) << '\n';
    }
    return out.str();
}

// ---- train -------------------------------------------------------------

struct TrainArgs {
    PaatConfig cfg;
    std::string dataDir;
    std::string outDir;
    std::string vocabPath;
    bool labelsOverridden = false;
};

int cmdTrain(TrainArgs a) {
    const std::string vocabPath =
        a.vocabPath.empty() ? a.dataDir + "/vocab.txt" : a.vocabPath;
    const Vocab vocab = Vocab::load(vocabPath);
    a.cfg.vocabSize = vocab.size();
    if (!a.labelsOverridden) a.cfg.labelCount = deriveLabelCount(a.dataDir);
    a.cfg.validate();

    const auto train = loadSplit(a.dataDir + "/train.tsv", vocab, a.cfg.labelCount);
    const auto valid = loadSplit(a.dataDir + "/valid.tsv", vocab, a.cfg.labelCount);

    fs::create_directories(a.outDir);
    auto kv = a.cfg.toKeyValues();
    kv["data_dir"] = a.dataDir;
    kv["out_dir"] = a.outDir;
    writeKeyValueFile(kv, a.outDir + "/config.txt");  // before execution

    TrainResult result = trainLoop(a.cfg, train, valid);
    writeFile(a.outDir + "/epochs.tsv", epochLogText(result.log));
    saveCheckpoint(result.model, a.outDir + "/best.ckpt", {{"vocab", joinVocab(vocab)}});
    std::cout << "train: best epoch " << result.bestEpoch << " valid micro-F1 "
              << formatDouble(result.bestValidMicroF1) << " (" << result.log.size()
              << " epochs run)\n";
    return 0;
}

// ---- eval --------------------------------------------------------------

struct EvalArgs {
    std::string ckptPath;
    std::string dataPath;
    std::string vocabPath;
    std::string comparePath;
    std::string outPath;
    std::vector<std::size_t> kList;  // empty: min(5, L)
    double threshold = -1.0;         // default: checkpoint threshold
};

Vocab vocabForCheckpoint(const LoadedCheckpoint& ckpt, const std::string& vocabPath) {
    if (!vocabPath.empty()) return Vocab::load(vocabPath);
    auto it = ckpt.extras.find("vocab");
    if (it == ckpt.extras.end()) {
        throw InputError("checkpoint carries no vocabulary; pass --vocab");
    }
    return vocabFromJoined(it->second);
}

int cmdEval(const EvalArgs& a) {
    LoadedCheckpoint ckpt = loadCheckpoint(a.ckptPath);
    const Vocab vocab = vocabForCheckpoint(ckpt, a.vocabPath);
    if (vocab.size() != ckpt.model.config().vocabSize) {
        throw InputError("vocabulary size " + std::to_string(vocab.size()) +
                         " does not match the checkpoint's " +
                         std::to_string(ckpt.model.config().vocabSize));
    }
    const auto docs = loadSplit(a.dataPath, vocab, ckpt.model.config().labelCount);
    const double threshold =
        a.threshold > 0.0 ? a.threshold : ckpt.model.config().threshold;
    std::vector<std::size_t> kList = a.kList;
    if (kList.empty()) kList = {std::min<std::size_t>(5, ckpt.model.config().labelCount)};
    for (std::size_t k : kList) {
        if (k < 1 || k > ckpt.model.config().labelCount) {
            throw InputError("p@k: k = " + std::to_string(k) + " outside [1, " +
                             std::to_string(ckpt.model.config().labelCount) + "]");
        }
    }

    const ScoreMatrix sm = scoreDataset(ckpt.model, docs);
    MetricsReport report = computeMetrics(sm, kList, threshold);

    if (!a.comparePath.empty()) {
        LoadedCheckpoint other = loadCheckpoint(a.comparePath);
        if (other.model.config().labelCount != ckpt.model.config().labelCount) {
            throw InputError("--compare checkpoint has a different label count");
        }
        const Vocab otherVocab = vocabForCheckpoint(other, a.vocabPath);
        const auto otherDocs = loadSplit(a.dataPath, otherVocab,
                                         other.model.config().labelCount);
        const ScoreMatrix smB = scoreDataset(other.model, otherDocs);
        report.disagreement = disagreementReport(sm, smB, threshold);
    }

    writeFile(a.outPath, metricsToJson(report));
    std::cout << "eval: micro-F1 " << formatDouble(report.f1.microF1) << " over "
              << docs.size() << " documents -> " << a.outPath << "\n";
    return 0;
}

// ---- explain -----------------------------------------------------------

struct ExplainArgs {
    std::string ckptPath;
    std::string dataPath;
    std::string vocabPath;
    std::string docId;
    std::string labels = "gold";
    std::string outPrefix;
    std::size_t top = 0;  // 0 = all tokens
};

char bucketChar(double weight, const std::vector<double>& quantiles) {
    static const char chars[5] = {'.', ':', '-', '=', '#'};
    std::size_t b = 0;
    while (b < 4 && weight > quantiles[b]) ++b;
    return chars[b];
}

std::string renderMap(const std::vector<TokenWeight>& ranked, std::size_t tokenCount) {
    // Restore reading order and shade by weight quantile bucket.
    std::vector<const TokenWeight*> byPos(tokenCount, nullptr);
    std::vector<double> weights;
    weights.reserve(ranked.size());
    for (const TokenWeight& tw : ranked) {
        byPos[tw.position] = &tw;
        weights.push_back(tw.weight);
    }
    std::sort(weights.begin(), weights.end());
    std::vector<double> quantiles(4);
    for (std::size_t q = 0; q < 4; ++q) {
        quantiles[q] = weights[std::min(weights.size() - 1,
                                        (q + 1) * weights.size() / 5)];
    }
    std::ostringstream out;
    std::size_t lineLen = 0;
    for (std::size_t pos = 0; pos < tokenCount; ++pos) {
        if (byPos[pos] == nullptr) continue;
        const std::string piece =
            std::string(1, bucketChar(byPos[pos]->weight, quantiles)) + byPos[pos]->token;
        if (lineLen + piece.size() + 1 > 100) {
            out << '\n';
            lineLen = 0;
        } else if (lineLen > 0) {
            out << ' ';
            ++lineLen;
        }
        out << piece;
        lineLen += piece.size();
    }
    out << '\n';
    return out.str();
}

int cmdExplain(const ExplainArgs& a) {
    LoadedCheckpoint ckpt = loadCheckpoint(a.ckptPath);
    const Vocab vocab = vocabForCheckpoint(ckpt, a.vocabPath);
    const std::size_t L = ckpt.model.config().labelCount;
    const auto docs = loadSplit(a.dataPath, vocab, L);
    const Document* doc = nullptr;
    for (const Document& d : docs)
        if (d.id == a.docId) doc = &d;
    if (!doc) throw InputError("explain: no document with id \"" + a.docId + "\" in " +
                               a.dataPath);

    std::vector<std::size_t> wanted;
    if (a.labels == "gold") {
        wanted = doc->gold;
        if (wanted.empty()) throw InputError("explain: document " + a.docId +
                                             " has no gold labels; pass --labels");
    } else if (a.labels == "all") {
        for (std::size_t l = 0; l < L; ++l) wanted.push_back(l);
    } else {
        for (const std::string& name : splitList(a.labels, ';'))
            wanted.push_back(parseLabelName(name, L));
    }

    ForwardResult fr = ckpt.model.forward(doc->tokens, true);
    std::vector<TokenId> shown = doc->tokens;
    if (shown.size() > ckpt.model.config().maxTokens) {
        shown.resize(ckpt.model.config().maxTokens);
    }
    const auto maps = attentionMap(fr.conventional,
                                   fr.partition ? &*fr.partition : nullptr, fr.attBounds,
                                   shown, vocab.allTokens());

    nlohmann::ordered_json j;
    j["doc_id"] = doc->id;
    j["labels"] = nlohmann::ordered_json::array();
    std::ostringstream text;
    text << "document " << doc->id << " (" << shown.size() << " tokens)\n";
    for (std::size_t l : wanted) {
        const LabelAttentionMap& m = maps[l];
        nlohmann::ordered_json lj;
        lj["label"] = labelName(l);
        lj["probability"] = fr.probs[l];
        lj["segment_weights"] = m.segmentWeights;
        auto dump = [&](const std::vector<TokenWeight>& ranked) {
            nlohmann::ordered_json arr = nlohmann::ordered_json::array();
            const std::size_t limit =
                a.top == 0 ? ranked.size() : std::min(a.top, ranked.size());
            for (std::size_t i = 0; i < limit; ++i) {
                arr.push_back({{"token", ranked[i].token},
                               {"position", ranked[i].position},
                               {"weight", ranked[i].weight}});
            }
            return arr;
        };
        lj["conventional"] = dump(m.conventional);
        if (!m.partition.empty()) lj["partition"] = dump(m.partition);
        j["labels"].push_back(lj);

        text << "\n== label " << labelName(l) << " p=" << formatDouble(fr.probs[l]) << "\n";
        if (!m.segmentWeights.empty()) {
            text << "segment weights:";
            for (double w : m.segmentWeights) text << ' ' << formatDouble(w);
            text << '\n';
        }
        text << "conventional attention:\n" << renderMap(m.conventional, shown.size());
        if (!m.partition.empty()) {
            text << "partition attention:\n" << renderMap(m.partition, shown.size());
        }
    }
    writeFile(a.outPrefix + ".json", j.dump(2) + "\n");
    writeFile(a.outPrefix + ".txt", text.str());
    std::cout << "explain: wrote " << a.outPrefix << ".json and " << a.outPrefix << ".txt\n";
    return 0;
}

// ---- ablate ------------------------------------------------------------

struct AblateArgs {
    PaatConfig cfg;
    std::string dataDir;
    std::string outDir;
    std::string vocabPath;
    std::vector<std::string> variants;
    std::vector<std::size_t> partitions;  // n_att sweep values
    bool tiePartitions = false;           // also sweep n_enc
    std::size_t seeds = 5;
    std::vector<std::size_t> kList = {5};
    bool labelsOverridden = false;
};

struct CellResult {
    std::string name;
    bool failed = false;
    std::string error;
    std::vector<MetricsReport> perSeed;
};

struct MeanStd {
    double mean = 0.0, std = 0.0;
};

MeanStd meanStd(const std::vector<double>& xs) {
    MeanStd ms;
    if (xs.empty()) return ms;
    for (double x : xs) ms.mean += x;
    ms.mean /= static_cast<double>(xs.size());
    for (double x : xs) ms.std += (x - ms.mean) * (x - ms.mean);
    ms.std = std::sqrt(ms.std / static_cast<double>(xs.size()));
    return ms;
}

int cmdAblate(AblateArgs a) {
    const std::string vocabPath =
        a.vocabPath.empty() ? a.dataDir + "/vocab.txt" : a.vocabPath;
    const Vocab vocab = Vocab::load(vocabPath);
    a.cfg.vocabSize = vocab.size();
    if (!a.labelsOverridden) a.cfg.labelCount = deriveLabelCount(a.dataDir);
    a.cfg.validate();

    const auto train = loadSplit(a.dataDir + "/train.tsv", vocab, a.cfg.labelCount);
    const auto valid = loadSplit(a.dataDir + "/valid.tsv", vocab, a.cfg.labelCount);
    const auto test = loadSplit(a.dataDir + "/test.tsv", vocab, a.cfg.labelCount);

    struct Cell {
        std::string name;
        PaatConfig cfg;
    };
    std::vector<Cell> cells;
    for (const std::string& v : a.variants) {
        PaatConfig c = a.cfg;
        c.variant = parseVariant(v);
        cells.push_back({v, c});
    }
    for (std::size_t p : a.partitions) {
        PaatConfig c = a.cfg;
        c.nAtt = p;
        if (a.tiePartitions) c.nEnc = p;
        cells.push_back({"n_att=" + std::to_string(p) +
                             (a.tiePartitions ? ",n_enc=" + std::to_string(p) : ""),
                         c});
    }
    if (cells.empty()) throw InputError("ablate: sweep lists no variants or partition counts");

    fs::create_directories(a.outDir);
    auto kv = a.cfg.toKeyValues();
    kv["data_dir"] = a.dataDir;
    kv["out_dir"] = a.outDir;
    kv["seeds"] = std::to_string(a.seeds);
    writeKeyValueFile(kv, a.outDir + "/config.txt");

    std::vector<CellResult> results;
    for (const Cell& cell : cells) {
        CellResult r;
        r.name = cell.name;
        for (std::size_t s = 0; s < a.seeds; ++s) {
            PaatConfig c = cell.cfg;
            c.seed = a.cfg.seed + s;  // shared seed schedule across cells
            try {
                TrainResult tr = trainLoop(c, train, valid);
                const ScoreMatrix sm = scoreDataset(tr.model, test);
                r.perSeed.push_back(computeMetrics(sm, a.kList, c.threshold));
                std::cerr << "ablate: " << cell.name << " seed " << c.seed << " micro-F1 "
                          << formatDouble(r.perSeed.back().f1.microF1) << "\n";
            } catch (const std::exception& e) {
                r.failed = true;
                r.error = e.what();
                std::cerr << "ablate: cell " << cell.name << " seed " << c.seed
                          << " failed: " << e.what() << "\n";
                break;
            }
        }
        results.push_back(std::move(r));
    }

    std::ostringstream table;
    table << "cell\tseeds\tmicro_f1_mean\tmicro_f1_std\tmacro_f1_mean\tmacro_f1_std"
          << "\tmicro_auc_mean\tmacro_auc_mean";
    for (std::size_t k : a.kList) table << "\tp_at_" << k << "_mean";
    table << "\n";
    for (const CellResult& r : results) {
        if (r.failed) {
            table << r.name << "\tFAILED\t" << r.error << "\n";
            continue;
        }
        auto collect = [&](auto getter) {
            std::vector<double> xs;
            for (const MetricsReport& m : r.perSeed) xs.push_back(getter(m));
            return meanStd(xs);
        };
        const MeanStd microF1 =
            collect([](const MetricsReport& m) { return m.f1.microF1; });
        const MeanStd macroF1 =
            collect([](const MetricsReport& m) { return m.f1.macroF1; });
        const MeanStd microAuc =
            collect([](const MetricsReport& m) { return m.auc.micro.value_or(0.0); });
        const MeanStd macroAuc =
            collect([](const MetricsReport& m) { return m.auc.macro.value_or(0.0); });
        table << r.name << '\t' << r.perSeed.size() << '\t' << formatDouble(microF1.mean)
              << '\t' << formatDouble(microF1.std) << '\t' << formatDouble(macroF1.mean)
              << '\t' << formatDouble(macroF1.std) << '\t' << formatDouble(microAuc.mean)
              << '\t' << formatDouble(macroAuc.mean);
        for (std::size_t k : a.kList) {
            const MeanStd pk =
                collect([&](const MetricsReport& m) { return m.pAtK.at(k); });
            table << '\t' << formatDouble(pk.mean);
        }
        table << '\n';
    }
    writeFile(a.outDir + "/ablation.tsv", table.str());
    std::cout << "ablate: " << results.size() << " cells -> " << a.outDir
              << "/ablation.tsv\n";
    bool anyFailed = false;
    for (const CellResult& r : results) anyFailed = anyFailed || r.failed;
    return anyFailed ? 1 : 0;
}

}  // namespace

int runCli(const std::vector<std::string>& args) {
    CLI::App app{"PAAT: partition-based label attention for multi-label document coding"};
    app.require_subcommand(1);
    // Later occurrences of a flag override earlier ones.
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    // gen-data
    GenDataArgs gen;
    CLI::App* genCmd = app.add_subcommand("gen-data", "Generate a synthetic corpus");
    {
        const std::string preset = scanFileOption(args, "--preset");
        const std::string specFile = scanFileOption(args, "--spec");
        const std::string seedStr = scanFileOption(args, "--seed");
        if (!preset.empty()) {
            if (!seedStr.empty()) gen.spec.seed = std::stoull(seedStr);
            if (!applyGenPreset(preset, gen.spec) && !args.empty() && args[0] == "gen-data") {
                std::cerr << "error: unknown preset \"" << preset << "\"\n";
                return 1;
            }
            if (preset == "dispersed" || preset == "concentrated") {
                // The experiment splits: 2000/300/500 of 2800.
                gen.trainFrac = kExperimentTrainFrac;
                gen.validFrac = kExperimentValidFrac;
                gen.testFrac = kExperimentTestFrac;
            }
        }
        if (!specFile.empty() && !args.empty() && args[0] == "gen-data") {
            gen.spec = GenSpec::fromKeyValues(readKeyValueFile(specFile));
        }
    }
    genCmd->add_option("--preset", "dispersed | concentrated | memorization")
        ->expected(1);
    genCmd->add_option("--spec", "GenSpec key=value file")->expected(1);
    registerGenSpecFlags(genCmd, gen.spec);
    genCmd->add_option("--out", gen.outDir, "Output directory")->required();
    genCmd->add_option_function<std::string>(
        "--split",
        [&](const std::string& v) {
            const auto parts = splitList(v, ',');
            if (parts.size() != 3) {
                throw CLI::ValidationError("--split", "expected train,valid,test fractions");
            }
            gen.trainFrac = std::stod(parts[0]);
            gen.validFrac = std::stod(parts[1]);
            gen.testFrac = std::stod(parts[2]);
        },
        "Split fractions, default 0.8,0.1,0.1");

    // train
    TrainArgs train;
    CLI::App* trainCmd = app.add_subcommand("train", "Train a model");
    {
        const std::string cfgFile = scanFileOption(args, "--config");
        if (!cfgFile.empty() && !args.empty() && args[0] == "train") {
            train.cfg = PaatConfig::fromKeyValues(readKeyValueFile(cfgFile));
        }
    }
    trainCmd->add_option("--config", "PaatConfig key=value file")->expected(1);
    trainCmd->add_option("--data", train.dataDir, "Dataset directory")->required();
    trainCmd->add_option("--out", train.outDir, "Output directory")->required();
    trainCmd->add_option("--vocab", train.vocabPath, "Vocabulary file override");
    registerModelFlags(trainCmd, train.cfg);

    // eval
    EvalArgs eval;
    CLI::App* evalCmd = app.add_subcommand("eval", "Evaluate a checkpoint");
    evalCmd->add_option("--ckpt", eval.ckptPath, "Checkpoint file")->required();
    evalCmd->add_option("--data", eval.dataPath, "Dataset file")->required();
    evalCmd->add_option("--vocab", eval.vocabPath, "Vocabulary file override");
    evalCmd->add_option("--out", eval.outPath, "Report path (JSON)")->required();
    evalCmd->add_option("--compare", eval.comparePath,
                        "Second checkpoint for disagreement analysis");
    evalCmd->add_option_function<std::string>(
        "--k",
        [&](const std::string& v) {
            eval.kList.clear();
            for (const std::string& part : splitList(v, ','))
                eval.kList.push_back(std::stoul(part));
        },
        "Comma-separated k values for P@k, default 5");
    evalCmd->add_option("--threshold", eval.threshold, "Decision threshold override");

    // explain
    ExplainArgs explain;
    CLI::App* explainCmd =
        app.add_subcommand("explain", "Export attention maps for one document");
    explainCmd->add_option("--ckpt", explain.ckptPath, "Checkpoint file")->required();
    explainCmd->add_option("--data", explain.dataPath, "Dataset file")->required();
    explainCmd->add_option("--vocab", explain.vocabPath, "Vocabulary file override");
    explainCmd->add_option("--doc", explain.docId, "Document id")->required();
    explainCmd->add_option("--labels", explain.labels,
                           "Semicolon-separated label names, or gold / all");
    explainCmd->add_option("--out", explain.outPrefix, "Output prefix")->required();
    explainCmd->add_option("--top", explain.top, "Keep only the top-N tokens per map");

    // ablate
    AblateArgs ablate;
    CLI::App* ablateCmd = app.add_subcommand("ablate", "Run a variant/partition sweep");
    {
        const std::string cfgFile = scanFileOption(args, "--config");
        if (!cfgFile.empty() && !args.empty() && args[0] == "ablate") {
            ablate.cfg = PaatConfig::fromKeyValues(readKeyValueFile(cfgFile));
        }
    }
    ablateCmd->add_option("--config", "PaatConfig key=value file")->expected(1);
    ablateCmd->add_option("--data", ablate.dataDir, "Dataset directory")->required();
    ablateCmd->add_option("--out", ablate.outDir, "Output directory")->required();
    ablateCmd->add_option("--vocab", ablate.vocabPath, "Vocabulary file override");
    ablateCmd->add_option_function<std::string>(
        "--variants",
        [&](const std::string& v) { ablate.variants = splitList(v, ','); },
        "Comma-separated variant cells");
    ablateCmd->add_option_function<std::string>(
        "--partitions",
        [&](const std::string& v) {
            for (const std::string& part : splitList(v, ','))
                ablate.partitions.push_back(std::stoul(part));
        },
        "Comma-separated attention partition counts");
    ablateCmd->add_flag("--tie-partitions", ablate.tiePartitions,
                        "Partition sweep sets n_enc = n_att");
    ablateCmd->add_option("--seeds", ablate.seeds, "Seeds per cell, default 5");
    ablateCmd->add_option_function<std::string>(
        "--k",
        [&](const std::string& v) {
            ablate.kList.clear();
            for (const std::string& part : splitList(v, ','))
                ablate.kList.push_back(std::stoul(part));
        },
        "Comma-separated k values for P@k, default 5");
    registerModelFlags(ablateCmd, ablate.cfg);

    try {
        std::vector<std::string> cliArgs = args;
        std::reverse(cliArgs.begin(), cliArgs.end());  // CLI11 wants reversed order
        app.parse(cliArgs);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        // Flags named --labels mark an explicit override.
        train.labelsOverridden = trainCmd->count("--labels") > 0;
        ablate.labelsOverridden = ablateCmd->count("--labels") > 0;
        if (genCmd->parsed()) return cmdGenData(gen);
        if (trainCmd->parsed()) return cmdTrain(train);
        if (evalCmd->parsed()) return cmdEval(eval);
        if (explainCmd->parsed()) return cmdExplain(explain);
        if (ablateCmd->parsed()) return cmdAblate(ablate);
        std::cerr << "error: no subcommand given\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace paat
