#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "siterep/bundle.hpp"
#include "siterep/learn.hpp"
#include "siterep/structural.hpp"

namespace siterep {

enum class CombinationRule { adaptive, sum, product, or_rule, voting };

inline constexpr std::array<CombinationRule, 5> kAllRules = {
    CombinationRule::adaptive, CombinationRule::sum, CombinationRule::product,
    CombinationRule::or_rule, CombinationRule::voting};

inline std::string to_string(CombinationRule r) {
    switch (r) {
        case CombinationRule::adaptive: return "adaptive";
        case CombinationRule::sum: return "sum";
        case CombinationRule::product: return "product";
        case CombinationRule::or_rule: return "or";
        case CombinationRule::voting: return "voting";
    }
    throw Error("unreachable combination rule");
}

inline CombinationRule rule_from_string(std::string_view s) {
    if (s == "adaptive") return CombinationRule::adaptive;
    if (s == "sum") return CombinationRule::sum;
    if (s == "product") return CombinationRule::product;
    if (s == "or") return CombinationRule::or_rule;
    if (s == "voting") return CombinationRule::voting;
    throw InputError("unknown combination rule \"" + std::string(s) + "\"");
}

// Class separability: trace(S_W^-1 S_B) with within-class scatter
// S_W = sum_c sum_{i in c} (x_i - mu_c)(x_i - mu_c)^T and between-class
// scatter S_B = sum_c n_c (mu_c - mu)(mu_c - mu)^T. The solve goes through
// LDLT; a singular S_W is regularized with lambda*I, lambda = 1e-9*tr(S_W)/d
// (1e-9 when the trace itself is zero). Nonsingular inputs are solved as-is.
inline double fukunaga_separability(const std::vector<std::vector<double>>& X,
                                    const std::vector<ClassLabel>& y) {
    if (X.size() != y.size() || X.size() < 2)
        throw InputError("separability needs >= 2 samples with matching labels");
    const std::size_t d = X[0].size();
    if (d == 0) throw InputError("separability: zero-dimensional features");
    for (const auto& row : X)
        if (row.size() != d) throw DataError("ragged feature matrix");

    const auto di = static_cast<Eigen::Index>(d);
    Eigen::VectorXd mu_bad = Eigen::VectorXd::Zero(di);
    Eigen::VectorXd mu_good = Eigen::VectorXd::Zero(di);
    std::int64_t n_bad = 0, n_good = 0;
    for (std::size_t i = 0; i < X.size(); ++i) {
        Eigen::Map<const Eigen::VectorXd> xi(X[i].data(), di);
        if (y[i] == ClassLabel::bad) {
            mu_bad += xi;
            ++n_bad;
        } else {
            mu_good += xi;
            ++n_good;
        }
    }
    if (n_bad == 0 || n_good == 0)
        throw InputError("separability requires both classes present");
    mu_bad /= static_cast<double>(n_bad);
    mu_good /= static_cast<double>(n_good);
    Eigen::VectorXd mu = (static_cast<double>(n_bad) * mu_bad +
                          static_cast<double>(n_good) * mu_good) /
                         static_cast<double>(n_bad + n_good);

    Eigen::MatrixXd sw = Eigen::MatrixXd::Zero(di, di);
    for (std::size_t i = 0; i < X.size(); ++i) {
        Eigen::Map<const Eigen::VectorXd> xi(X[i].data(), di);
        Eigen::VectorXd c = xi - (y[i] == ClassLabel::bad ? mu_bad : mu_good);
        sw.noalias() += c * c.transpose();
    }
    Eigen::MatrixXd sb = Eigen::MatrixXd::Zero(di, di);
    {
        Eigen::VectorXd cb = mu_bad - mu;
        Eigen::VectorXd cg = mu_good - mu;
        sb.noalias() += static_cast<double>(n_bad) * cb * cb.transpose();
        sb.noalias() += static_cast<double>(n_good) * cg * cg.transpose();
    }

    Eigen::LDLT<Eigen::MatrixXd> ldlt(sw);
    bool singular = ldlt.info() != Eigen::Success;
    if (!singular) {
        Eigen::VectorXd diag = ldlt.vectorD();
        double dmax = diag.cwiseAbs().maxCoeff();
        singular = dmax <= 0.0 || diag.minCoeff() <= dmax * 1e-12;
    }
    if (singular) {
        double tr = sw.trace();
        double lambda = tr > 0.0 ? 1e-9 * tr / static_cast<double>(d) : 1e-9;
        sw += lambda * Eigen::MatrixXd::Identity(di, di);
        ldlt.compute(sw);
    }
    double score = ldlt.solve(sb).trace();
    return score < 0.0 ? 0.0 : score;  // clamp numeric noise on PSD input
}

// Raw scores -> weights on the simplex. An all-zero score vector (every
// family has coincident class means) degrades to uniform weights.
inline std::vector<double> normalized_weights(const std::vector<double>& scores) {
    if (scores.empty()) throw InputError("no scores to normalize");
    double total = 0.0;
    for (double s : scores) {
        if (s < 0.0) throw InputError("negative separability score");
        total += s;
    }
    std::vector<double> w(scores.size());
    if (total <= 0.0) {
        for (auto& x : w) x = 1.0 / static_cast<double>(scores.size());
    } else {
        for (std::size_t i = 0; i < scores.size(); ++i) w[i] = scores[i] / total;
    }
    return w;
}

// Combines constituent posteriors into one belief. Decision rules (or,
// voting) return a degenerate 1/0 belief; the graded rules return a proper
// posterior. Weights are consumed by the adaptive rule only and must already
// be normalized over exactly these constituents.
inline Posterior combine(const std::vector<Posterior>& ps,
                         const std::vector<double>& ws, CombinationRule rule,
                         Rng* tie_rng = nullptr) {
    if (ps.empty()) throw InputError("combine needs >= 1 constituent posterior");
    switch (rule) {
        case CombinationRule::adaptive: {
            if (ws.size() != ps.size())
                throw InputError("adaptive rule: weight/posterior count mismatch");
            double wsum = 0.0;
            for (double w : ws) {
                if (w < 0.0) throw InputError("negative combination weight");
                wsum += w;
            }
            if (std::abs(wsum - 1.0) > 1e-9)
                throw InputError("adaptive rule: weights must sum to 1");
            double pb = 0.0, pg = 0.0;
            for (std::size_t i = 0; i < ps.size(); ++i) {
                pb += ws[i] * ps[i].p_bad;
                pg += ws[i] * ps[i].p_good;
            }
            return {pb, pg};
        }
        case CombinationRule::sum: {
            // Mean rather than raw sum so the result stays a posterior; the
            // argmax is unchanged by the common positive factor.
            double pb = 0.0, pg = 0.0;
            for (const auto& p : ps) {
                pb += p.p_bad;
                pg += p.p_good;
            }
            double m = static_cast<double>(ps.size());
            return {pb / m, pg / m};
        }
        case CombinationRule::product: {
            // Renormalized before any argmax; Laplace-smoothed constituents
            // keep both products strictly positive.
            double pb = 1.0, pg = 1.0;
            for (const auto& p : ps) {
                pb *= p.p_bad;
                pg *= p.p_good;
            }
            double s = pb + pg;
            if (s <= 0.0) throw DataError("product rule underflow to zero");
            return {pb / s, pg / s};
        }
        case CombinationRule::or_rule: {
            for (const auto& p : ps)
                if (p.argmax() == ClassLabel::bad) return {1.0, 0.0};
            return {0.0, 1.0};
        }
        case CombinationRule::voting: {
            std::size_t bad = 0;
            for (const auto& p : ps)
                if (p.argmax() == ClassLabel::bad) ++bad;
            std::size_t good = ps.size() - bad;
            if (bad > good) return {1.0, 0.0};
            if (good > bad) return {0.0, 1.0};
            if (tie_rng) return tie_rng->below(2) == 0 ? Posterior{1.0, 0.0}
                                                       : Posterior{0.0, 1.0};
            return {1.0, 0.0};  // deterministic tie-break: bad
        }
    }
    throw Error("unreachable combination rule");
}

struct EnsembleParams {
    ForestParams forest;
    CombinationRule rule = CombinationRule::adaptive;
    double keep_fraction = 0.75;  // correlation mask for H/J/T; E is exempt
    bool balance = false;
    bool random_ties = false;  // callers must then pass an Rng to classify
    Threshold th{40};
    std::array<bool, 4> enabled = {true, true, true, true};  // family switch

    bool operator==(const EnsembleParams&) const = default;
};

struct FamilyModel {
    RandomForest model;
    FeatureMask mask;
    double separability = 0.0;

    bool operator==(const FamilyModel&) const = default;
};

class TrainedEnsemble {
  public:
    std::array<std::optional<FamilyModel>, 4> families;
    EnsembleParams params;
    std::uint64_t seed = 0;

    bool trained(Family f) const {
        return families[static_cast<std::size_t>(f)].has_value();
    }
    const FamilyModel& family(Family f) const {
        return *families[static_cast<std::size_t>(f)];
    }
    std::vector<Family> trained_families() const {
        std::vector<Family> out;
        for (Family f : kAllFamilies)
            if (trained(f)) out.push_back(f);
        return out;
    }
    // Weights over all trained families, in kAllFamilies order.
    std::vector<double> weights() const {
        std::vector<double> scores;
        for (Family f : kAllFamilies)
            if (trained(f)) scores.push_back(family(f).separability);
        return normalized_weights(scores);
    }

    bool operator==(const TrainedEnsemble&) const = default;
};

// Trains one classifier per feature family on the bundles where that family
// is present, masked by per-family correlation selection (E keeps all bins).
// The stored separability scores are computed on the same masked training
// data; weights are derived from them at classification time, normalized
// over whichever trained families the bundle actually provides.
inline TrainedEnsemble fit(const std::vector<FeatureBundle>& bundles,
                           const EnsembleParams& params, std::uint64_t seed) {
    if (bundles.size() < 2) throw InputError("fit needs >= 2 labeled bundles");
    for (const auto& b : bundles)
        if (!b.label)
            throw InputError("unlabeled bundle in training set: " + b.url);

    std::vector<std::size_t> active(bundles.size());
    for (std::size_t i = 0; i < active.size(); ++i) active[i] = i;
    if (params.balance) {
        std::vector<ClassLabel> y;
        y.reserve(bundles.size());
        for (const auto& b : bundles) y.push_back(*b.label);
        active = balance_indices(y, derive_seed(seed, "ensemble-balance"));
    }

    TrainedEnsemble ens;
    ens.params = params;
    ens.seed = seed;

    for (Family f : kAllFamilies) {
        if (!params.enabled[static_cast<std::size_t>(f)]) continue;
        std::vector<std::vector<double>> X;
        std::vector<ClassLabel> y;
        for (std::size_t i : active) {
            const auto& vec = bundles[i].family(f);
            if (!vec) continue;
            X.push_back(*vec);
            y.push_back(*bundles[i].label);
        }
        if (X.size() < 2) continue;
        bool has_bad = false, has_good = false;
        for (ClassLabel l : y) (l == ClassLabel::bad ? has_bad : has_good) = true;
        if (!has_bad || !has_good) continue;

        FeatureMask mask = f == Family::E
                               ? FeatureMask::all_true(X[0].size())
                               : select_features(X, y, params.keep_fraction);
        std::vector<std::vector<double>> Xm;
        Xm.reserve(X.size());
        for (const auto& row : X) Xm.push_back(mask.apply(row));

        FamilyModel fm;
        fm.mask = std::move(mask);
        fm.separability = fukunaga_separability(Xm, y);
        fm.model = train_forest(Xm, y, params.forest,
                                derive_seed(seed, "ensemble-" + to_string(f)));
        ens.families[static_cast<std::size_t>(f)] = std::move(fm);
    }

    if (ens.trained_families().empty())
        throw InputError("no feature family is trainable on these bundles");
    return ens;
}

struct ClassifyResult {
    ClassLabel label = ClassLabel::bad;
    Posterior belief;
    std::array<std::optional<Posterior>, 4> per_family;
    std::array<std::optional<double>, 4> weight;  // renormalized over used
};

// Scores one bundle. Families the bundle lacks (or the ensemble never
// trained) contribute nothing; the remaining weights are renormalized, which
// makes this identical to classifying with an ensemble trained without those
// families. An exact belief tie goes to bad unless an Rng is supplied. The
// combination rule defaults to the trained one but may be overridden, since
// the per-family models are rule-independent.
inline ClassifyResult classify(const TrainedEnsemble& ens,
                               const FeatureBundle& bundle,
                               Rng* tie_rng = nullptr,
                               std::optional<CombinationRule> rule = {}) {
    std::vector<Posterior> ps;
    std::vector<double> scores;
    std::vector<Family> used;
    for (Family f : kAllFamilies) {
        if (!ens.trained(f) || !bundle.has(f)) continue;
        const auto& fm = ens.family(f);
        used.push_back(f);
        ps.push_back(fm.model.predict_proba(fm.mask.apply(*bundle.family(f))));
        scores.push_back(fm.separability);
    }
    if (ps.empty())
        throw InputError("no trained family available on bundle " + bundle.url);

    ClassifyResult res;
    auto ws = normalized_weights(scores);
    for (std::size_t i = 0; i < used.size(); ++i) {
        res.per_family[static_cast<std::size_t>(used[i])] = ps[i];
        res.weight[static_cast<std::size_t>(used[i])] = ws[i];
    }
    res.belief = combine(ps, ws, rule.value_or(ens.params.rule), tie_rng);
    if (res.belief.p_bad > res.belief.p_good) {
        res.label = ClassLabel::bad;
    } else if (res.belief.p_bad < res.belief.p_good) {
        res.label = ClassLabel::good;
    } else {
        res.label = tie_rng && tie_rng->below(2) != 0 ? ClassLabel::good
                                                      : ClassLabel::bad;
    }
    return res;
}

// --- serialization ---------------------------------------------------------

inline json to_json(const TrainedEnsemble& e) {
    json j;
    j["schema_version"] = std::string(kSchemaVersion);
    j["kind"] = "ensemble";
    j["rule"] = to_string(e.params.rule);
    j["th"] = e.params.th.value;
    j["keep_fraction"] = e.params.keep_fraction;
    j["balance"] = e.params.balance;
    j["random_ties"] = e.params.random_ties;
    j["seed"] = e.seed;
    json fp;
    fp["n_trees"] = e.params.forest.n_trees;
    fp["m_features"] = e.params.forest.m_features;
    fp["bootstrap"] = e.params.forest.bootstrap;
    fp["max_depth"] = e.params.forest.tree.max_depth;
    fp["min_leaf"] = e.params.forest.tree.min_leaf;
    fp["criterion"] = to_string(e.params.forest.tree.criterion);
    j["forest"] = fp;
    json enabled = json::array();
    for (Family f : kAllFamilies)
        if (e.params.enabled[static_cast<std::size_t>(f)])
            enabled.push_back(to_string(f));
    j["enabled_families"] = enabled;

    auto trained = e.trained_families();
    auto ws = e.weights();
    json fams = json::object();
    for (std::size_t i = 0; i < trained.size(); ++i) {
        const auto& fm = e.family(trained[i]);
        json fj;
        fj["model"] = to_json(fm.model);
        fj["mask"] = to_json(fm.mask);
        fj["separability"] = fm.separability;
        fj["weight"] = ws[i];  // informational; recomputed on load
        fams[to_string(trained[i])] = fj;
    }
    j["families"] = fams;
    return j;
}

inline TrainedEnsemble ensemble_from_json(const json& j) {
    std::string ver = j.value("schema_version", "");
    if (ver != kSchemaVersion)
        throw SchemaError("ensemble schema_version \"" + ver +
                          "\" does not match expected \"" +
                          std::string(kSchemaVersion) + "\"");
    TrainedEnsemble e;
    e.params.rule = rule_from_string(j.at("rule").get<std::string>());
    e.params.th = Threshold(j.at("th").get<int>());
    e.params.keep_fraction = j.at("keep_fraction").get<double>();
    e.params.balance = j.at("balance").get<bool>();
    e.params.random_ties = j.at("random_ties").get<bool>();
    e.seed = j.at("seed").get<std::uint64_t>();
    const json& fp = j.at("forest");
    e.params.forest.n_trees = fp.at("n_trees").get<int>();
    e.params.forest.m_features = fp.at("m_features").get<int>();
    e.params.forest.bootstrap = fp.at("bootstrap").get<bool>();
    e.params.forest.tree.max_depth = fp.at("max_depth").get<int>();
    e.params.forest.tree.min_leaf = fp.at("min_leaf").get<int>();
    e.params.forest.tree.criterion =
        criterion_from_string(fp.at("criterion").get<std::string>());
    e.params.enabled = {false, false, false, false};
    for (const json& fj : j.at("enabled_families"))
        e.params.enabled[static_cast<std::size_t>(
            family_from_string(fj.get<std::string>()))] = true;

    for (const auto& [key, fj] : j.at("families").items()) {
        Family f = family_from_string(key);
        FamilyModel fm;
        fm.model = forest_from_json(fj.at("model"));
        fm.mask = mask_from_json(fj.at("mask"));
        fm.separability = fj.at("separability").get<double>();
        if (fm.separability < 0.0)
            throw DataError("negative separability in ensemble file");
        if (fm.mask.kept() != fm.model.n_features)
            throw DataError("ensemble family " + key +
                            ": mask keeps " + std::to_string(fm.mask.kept()) +
                            " features but model expects " +
                            std::to_string(fm.model.n_features));
        e.families[static_cast<std::size_t>(f)] = std::move(fm);
    }
    if (e.trained_families().empty())
        throw DataError("ensemble file contains no trained family");

    // Stored weights are a convenience copy; verify they match the scores.
    auto trained = e.trained_families();
    auto ws = e.weights();
    for (std::size_t i = 0; i < trained.size(); ++i) {
        double stored =
            j.at("families").at(to_string(trained[i])).at("weight").get<double>();
        if (std::abs(stored - ws[i]) > 1e-9)
            throw DataError("ensemble file weight for family " +
                            to_string(trained[i]) +
                            " inconsistent with separability scores");
    }
    return e;
}

inline void save_ensemble(const TrainedEnsemble& e,
                          const std::filesystem::path& path) {
    write_json_file(path, to_json(e));
}

inline TrainedEnsemble load_ensemble(const std::filesystem::path& path) {
    return ensemble_from_json(read_json_file(path));
}

}  // namespace siterep
