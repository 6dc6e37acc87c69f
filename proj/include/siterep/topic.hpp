#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "siterep/jsonl.hpp"
#include "siterep/rng.hpp"

namespace siterep {

// Topic features (family T): an LDA model trained by collapsed Gibbs sampling
// over page text; each page is represented by its inferred topic proportions.

// Lowercases and splits on non-alphabetic characters. Multi-byte UTF-8 units
// act as separators, which restricts the vocabulary to ASCII-alphabetic
// words; non-English text is expected to pass through a Translator first.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string word;
    for (char c : text) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        if (c >= 'a' && c <= 'z') {
            word += c;
        } else if (!word.empty()) {
            out.push_back(std::move(word));
            word.clear();
        }
    }
    if (!word.empty()) out.push_back(std::move(word));
    return out;
}

// Hook for translating page text before tokenization. The default is the
// identity: no external translation service is bundled.
class Translator {
  public:
    virtual ~Translator() = default;
    virtual std::string translate(const std::string& text,
                                  const std::string& lang_hint) = 0;
};

class IdentityTranslator : public Translator {
  public:
    std::string translate(const std::string& text,
                          const std::string& /*lang_hint*/) override {
        return text;
    }
};

// One word per line, UTF-8; blank lines and leading/trailing space ignored.
inline std::unordered_set<std::string> load_word_set(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open word list " + path.string());
    std::unordered_set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        std::string w = std::string(trim(line));
        if (!w.empty()) words.insert(ascii_lower(w));
    }
    return words;
}

struct Vocabulary {
    std::vector<std::string> words;  // lexicographically sorted
    std::unordered_map<std::string, int> index;

    std::size_t size() const { return words.size(); }

    std::optional<int> lookup(const std::string& w) const {
        auto it = index.find(w);
        if (it == index.end()) return std::nullopt;
        return it->second;
    }

    bool operator==(const Vocabulary& o) const { return words == o.words; }
};

// Builds the vocabulary from raw document texts: tokenize, drop stop words,
// optionally keep only dictionary words, then drop words appearing in fewer
// than min_df documents. Indices are dense and assigned in lexicographic
// order so the vocabulary is independent of document order.
inline Vocabulary build_vocabulary(
    const std::vector<std::string>& docs,
    const std::unordered_set<std::string>& stopwords,
    const std::optional<std::unordered_set<std::string>>& dictionary = std::nullopt,
    int min_df = 1) {
    if (docs.empty()) throw InputError("build_vocabulary: corpus is empty");
    if (min_df < 1) throw InputError("build_vocabulary: min_df must be >= 1");

    std::unordered_map<std::string, int> doc_freq;
    for (const std::string& text : docs) {
        std::unordered_set<std::string> seen;
        for (std::string& w : tokenize(text)) {
            if (stopwords.contains(w)) continue;
            if (dictionary && !dictionary->contains(w)) continue;
            if (seen.insert(w).second) ++doc_freq[w];
        }
    }

    Vocabulary v;
    for (const auto& [word, df] : doc_freq)
        if (df >= min_df) v.words.push_back(word);
    std::sort(v.words.begin(), v.words.end());
    if (v.words.empty())
        throw InputError("build_vocabulary: no words survived filtering");
    for (std::size_t i = 0; i < v.words.size(); ++i)
        v.index[v.words[i]] = static_cast<int>(i);
    return v;
}

// Maps a token sequence to vocabulary ids, silently skipping unknown words.
inline std::vector<int> to_word_ids(const std::vector<std::string>& tokens,
                                    const Vocabulary& vocab) {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens)
        if (auto id = vocab.lookup(t)) ids.push_back(*id);
    return ids;
}

struct TopicModel {
    int K = 0;
    double alpha = 1.0;  // symmetric Dirichlet prior on per-document topics
    double eta = 0.01;   // symmetric Dirichlet prior on per-topic words
    Vocabulary vocab;
    std::vector<std::vector<std::int64_t>> n_kv;  // K x V topic-word counts
    std::vector<std::int64_t> n_k;                // per-topic totals
    std::uint64_t seed = 0;
    int iterations = 0;

    // Point estimate of the topic-word distribution.
    double beta(int k, int v) const {
        return (static_cast<double>(n_kv[static_cast<std::size_t>(k)]
                                        [static_cast<std::size_t>(v)]) +
                eta) /
               (static_cast<double>(n_k[static_cast<std::size_t>(k)]) +
                static_cast<double>(vocab.size()) * eta);
    }
};

inline double default_alpha(int K) { return 50.0 / static_cast<double>(K); }
inline constexpr double kDefaultEta = 0.01;
inline constexpr int kDefaultTopics = 50;
inline constexpr int kDefaultTrainSweeps = 1000;
inline constexpr int kDefaultFoldInSweeps = 100;
inline constexpr int kDefaultFoldInBurnIn = 50;

// Observer invoked after every Gibbs sweep (tests use it to verify count
// conservation mid-training).
struct GibbsSnapshot {
    int sweep;
    const std::vector<std::vector<std::int64_t>>& n_dk;  // D x K
    const std::vector<std::vector<std::int64_t>>& n_kv;  // K x V
    const std::vector<std::int64_t>& n_k;                // K
    const std::vector<std::vector<int>>& docs;           // token ids per doc
    const std::vector<std::vector<int>>& z;              // assignments
};
using GibbsObserver = std::function<void(const GibbsSnapshot&)>;

// Collapsed Gibbs training. Documents are token-id sequences over `vocab`;
// empty documents are skipped. Deterministic: a single sequential chain
// driven entirely by `seed`.
inline TopicModel train_lda(const std::vector<std::vector<int>>& docs,
                            const Vocabulary& vocab, int K, double alpha,
                            double eta, int iterations, std::uint64_t seed,
                            const GibbsObserver& observer = {}) {
    if (K < 1) throw InputError("train_lda: K must be >= 1");
    if (alpha <= 0 || eta <= 0)
        throw InputError("train_lda: alpha and eta must be positive");
    if (iterations < 1) throw InputError("train_lda: iterations must be >= 1");
    const int V = static_cast<int>(vocab.size());
    if (V == 0) throw InputError("train_lda: empty vocabulary");

    std::size_t total_tokens = 0;
    for (const auto& d : docs) {
        for (int w : d)
            if (w < 0 || w >= V)
                throw DataError("train_lda: word id out of vocabulary range");
        total_tokens += d.size();
    }
    if (total_tokens == 0) throw InputError("train_lda: zero usable tokens");

    const std::size_t D = docs.size();
    std::vector<std::vector<int>> z(D);
    std::vector<std::vector<std::int64_t>> n_dk(
        D, std::vector<std::int64_t>(static_cast<std::size_t>(K), 0));
    std::vector<std::vector<std::int64_t>> n_kv(
        static_cast<std::size_t>(K),
        std::vector<std::int64_t>(static_cast<std::size_t>(V), 0));
    std::vector<std::int64_t> n_k(static_cast<std::size_t>(K), 0);

    Rng rng(derive_seed(seed, "lda-train"));

    // Random initial assignment.
    for (std::size_t d = 0; d < D; ++d) {
        z[d].resize(docs[d].size());
        for (std::size_t t = 0; t < docs[d].size(); ++t) {
            int k = static_cast<int>(rng.below(static_cast<std::uint64_t>(K)));
            z[d][t] = k;
            ++n_dk[d][static_cast<std::size_t>(k)];
            ++n_kv[static_cast<std::size_t>(k)][static_cast<std::size_t>(docs[d][t])];
            ++n_k[static_cast<std::size_t>(k)];
        }
    }

    const double V_eta = static_cast<double>(V) * eta;
    std::vector<double> p(static_cast<std::size_t>(K));

    for (int sweep = 0; sweep < iterations; ++sweep) {
        for (std::size_t d = 0; d < D; ++d) {
            for (std::size_t t = 0; t < docs[d].size(); ++t) {
                const auto v = static_cast<std::size_t>(docs[d][t]);
                const auto old_k = static_cast<std::size_t>(z[d][t]);
                --n_dk[d][old_k];
                --n_kv[old_k][v];
                --n_k[old_k];

                double total = 0.0;
                for (std::size_t k = 0; k < static_cast<std::size_t>(K); ++k) {
                    double w = (static_cast<double>(n_dk[d][k]) + alpha) *
                               (static_cast<double>(n_kv[k][v]) + eta) /
                               (static_cast<double>(n_k[k]) + V_eta);
                    p[k] = w;
                    total += w;
                }
                double u = rng.real01() * total;
                std::size_t new_k = 0;
                double acc = 0.0;
                for (std::size_t k = 0; k < static_cast<std::size_t>(K); ++k) {
                    acc += p[k];
                    if (u < acc) {
                        new_k = k;
                        break;
                    }
                    new_k = k;  // numeric edge: u == total lands on the last topic
                }
                z[d][t] = static_cast<int>(new_k);
                ++n_dk[d][new_k];
                ++n_kv[new_k][v];
                ++n_k[new_k];
            }
        }
        if (observer) observer({sweep, n_dk, n_kv, n_k, docs, z});
    }

    TopicModel model;
    model.K = K;
    model.alpha = alpha;
    model.eta = eta;
    model.vocab = vocab;
    model.n_kv = std::move(n_kv);
    model.n_k = std::move(n_k);
    model.seed = seed;
    model.iterations = iterations;
    return model;
}

struct ThetaResult {
    std::vector<double> theta;
    bool available = false;  // false: no known tokens; theta is the flat prior
};

// Fold-in inference for one document: Gibbs with the topic-word distributions
// frozen at the model's point estimates; theta averaged over post-burn-in
// sweeps. Unknown words are skipped; a document with no known words gets the
// uniform prior and an unavailability flag.
inline ThetaResult infer_theta(const TopicModel& model,
                               const std::vector<std::string>& tokens,
                               int fold_in_iterations, std::uint64_t seed,
                               int burn_in = -1) {
    if (fold_in_iterations < 1)
        throw InputError("infer_theta: fold_in_iterations must be >= 1");
    if (burn_in < 0) burn_in = fold_in_iterations / 2;
    if (burn_in >= fold_in_iterations) burn_in = fold_in_iterations - 1;
    const auto K = static_cast<std::size_t>(model.K);

    ThetaResult out;
    std::vector<int> ids = to_word_ids(tokens, model.vocab);
    if (ids.empty()) {
        out.theta.assign(K, 1.0 / static_cast<double>(model.K));
        out.available = false;
        return out;
    }

    Rng rng(derive_seed(seed, "lda-foldin"));
    const double alpha = model.alpha;
    const auto N = static_cast<double>(ids.size());

    std::vector<int> z(ids.size());
    std::vector<std::int64_t> n_k(K, 0);
    for (std::size_t t = 0; t < ids.size(); ++t) {
        int k = static_cast<int>(rng.below(static_cast<std::uint64_t>(model.K)));
        z[t] = k;
        ++n_k[static_cast<std::size_t>(k)];
    }

    std::vector<double> p(K);
    std::vector<double> theta_acc(K, 0.0);
    int kept_sweeps = 0;

    for (int sweep = 0; sweep < fold_in_iterations; ++sweep) {
        for (std::size_t t = 0; t < ids.size(); ++t) {
            const auto old_k = static_cast<std::size_t>(z[t]);
            --n_k[old_k];
            double total = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                double w = (static_cast<double>(n_k[k]) + alpha) *
                           model.beta(static_cast<int>(k), ids[t]);
                p[k] = w;
                total += w;
            }
            double u = rng.real01() * total;
            std::size_t new_k = 0;
            double acc = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                acc += p[k];
                if (u < acc) {
                    new_k = k;
                    break;
                }
                new_k = k;
            }
            z[t] = static_cast<int>(new_k);
            ++n_k[new_k];
        }
        if (sweep >= burn_in) {
            for (std::size_t k = 0; k < K; ++k)
                theta_acc[k] += (static_cast<double>(n_k[k]) + alpha) /
                                (N + static_cast<double>(model.K) * alpha);
            ++kept_sweeps;
        }
    }

    out.theta.resize(K);
    for (std::size_t k = 0; k < K; ++k)
        out.theta[k] = theta_acc[k] / static_cast<double>(kept_sweeps);
    out.available = true;
    return out;
}

// --- serialization ---------------------------------------------------------

inline json to_json(const TopicModel& m) {
    json j;
    j["schema_version"] = std::string(kSchemaVersion);
    j["kind"] = "topic_model";
    j["K"] = m.K;
    j["alpha"] = m.alpha;
    j["eta"] = m.eta;
    j["vocabulary"] = m.vocab.words;
    j["n_kv"] = m.n_kv;
    j["n_k"] = m.n_k;
    j["seed"] = m.seed;
    j["iterations"] = m.iterations;
    return j;
}

inline TopicModel topic_model_from_json(const json& j) {
    std::string ver = j.value("schema_version", "");
    if (ver != kSchemaVersion)
        throw SchemaError("topic model schema_version \"" + ver +
                          "\" does not match expected \"" +
                          std::string(kSchemaVersion) + "\"");
    TopicModel m;
    m.K = j.at("K").get<int>();
    m.alpha = j.at("alpha").get<double>();
    m.eta = j.at("eta").get<double>();
    m.vocab.words = j.at("vocabulary").get<std::vector<std::string>>();
    for (std::size_t i = 0; i < m.vocab.words.size(); ++i)
        m.vocab.index[m.vocab.words[i]] = static_cast<int>(i);
    m.n_kv = j.at("n_kv").get<std::vector<std::vector<std::int64_t>>>();
    m.n_k = j.at("n_k").get<std::vector<std::int64_t>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.iterations = j.at("iterations").get<int>();

    if (m.n_kv.size() != static_cast<std::size_t>(m.K) ||
        m.n_k.size() != static_cast<std::size_t>(m.K))
        throw DataError("topic model count matrix does not match K");
    for (std::size_t k = 0; k < m.n_kv.size(); ++k) {
        if (m.n_kv[k].size() != m.vocab.size())
            throw DataError("topic model count row does not match vocabulary");
        std::int64_t row = 0;
        for (std::int64_t c : m.n_kv[k]) {
            if (c < 0) throw DataError("negative topic-word count");
            row += c;
        }
        if (row != m.n_k[k]) throw DataError("topic totals inconsistent with matrix");
    }
    return m;
}

inline void save_topic_model(const std::filesystem::path& path, const TopicModel& m) {
    write_json_file(path, to_json(m));
}

inline TopicModel load_topic_model(const std::filesystem::path& path) {
    return topic_model_from_json(read_json_file(path));
}

}  // namespace siterep
