#pragma once

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "siterep/ensemble.hpp"
#include "siterep/metrics.hpp"

namespace siterep {

// Fold assignment (sample index -> fold id) with per-class counts across
// folds differing by at most one: each class is shuffled independently and
// dealt round-robin.
inline std::vector<int> stratified_folds(const std::vector<ClassLabel>& labels,
                                         int n_folds, std::uint64_t seed) {
    if (n_folds < 2) throw InputError("n_folds must be >= 2");
    std::vector<std::size_t> bad_idx, good_idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
        (labels[i] == ClassLabel::bad ? bad_idx : good_idx).push_back(i);
    if (bad_idx.size() < static_cast<std::size_t>(n_folds) ||
        good_idx.size() < static_cast<std::size_t>(n_folds))
        throw InputError("each class needs at least n_folds samples (" +
                         std::to_string(bad_idx.size()) + " bad, " +
                         std::to_string(good_idx.size()) + " good, n_folds " +
                         std::to_string(n_folds) + ")");

    std::vector<int> fold_of(labels.size(), -1);
    Rng bad_rng(derive_seed(seed, "folds-bad"));
    Rng good_rng(derive_seed(seed, "folds-good"));
    bad_rng.shuffle(bad_idx);
    good_rng.shuffle(good_idx);
    for (std::size_t i = 0; i < bad_idx.size(); ++i)
        fold_of[bad_idx[i]] = static_cast<int>(i % static_cast<std::size_t>(n_folds));
    for (std::size_t i = 0; i < good_idx.size(); ++i)
        fold_of[good_idx[i]] = static_cast<int>(i % static_cast<std::size_t>(n_folds));
    return fold_of;
}

// Mean over trees of the total impurity decrease attributed to each feature,
// with every split's decrease weighted by the fraction of that tree's
// samples reaching the node. Features never split on score 0.
inline std::vector<double> feature_importance(const RandomForest& forest) {
    if (forest.trees.empty()) throw InputError("importance of an empty forest");
    std::vector<double> scores(forest.n_features, 0.0);
    for (const auto& tree : forest.trees) {
        double root_total = static_cast<double>(tree.nodes[0].total());
        if (root_total <= 0) continue;
        for (const auto& node : tree.nodes) {
            if (node.is_leaf()) continue;
            const auto& l = tree.nodes[static_cast<std::size_t>(node.left)];
            const auto& r = tree.nodes[static_cast<std::size_t>(node.right)];
            auto imp = [&](const TreeNode& n) {
                return detail::impurity(n.n_bad, n.n_good,
                                        tree.params.criterion);
            };
            double n = static_cast<double>(node.total());
            double decrease = imp(node) -
                              (static_cast<double>(l.total()) / n) * imp(l) -
                              (static_cast<double>(r.total()) / n) * imp(r);
            scores[static_cast<std::size_t>(node.feature)] +=
                (n / root_total) * decrease;
        }
    }
    for (auto& s : scores) s /= static_cast<double>(forest.trees.size());
    return scores;
}

// One evaluated configuration: a combination rule over a family subset.
struct EvalConfig {
    std::string name;
    EnsembleParams params;
};

struct ConfigResult {
    std::string name;
    EnsembleParams params;
    std::vector<ConfusionMatrix> fold_cms;
    ConfusionMatrix pooled;
    MetricReport report;        // from the pooled confusion matrix
    Rate detection;             // from pooled FNR/FPR at the report base rate
    std::vector<ClassLabel> predictions;  // pooled, bundle-index aligned
    McNemarResult vs_baseline;  // paired against configs[0]; trivial for it
};

struct FamilyImportance {
    FeatureMask mask;            // positions scores refer to pre-mask indices
    std::vector<double> scores;  // per kept feature, model order
};

struct EvaluationReport {
    int n_folds = 0;
    std::uint64_t seed = 0;
    double base_rate = 0.20;
    std::vector<int> fold_of;
    std::vector<ClassLabel> truth;
    std::vector<ConfigResult> configs;
    // Feature importance of the first config refit on all bundles.
    std::map<std::string, FamilyImportance> importance;
};

// Stratified k-fold evaluation of every configuration on identical folds so
// the per-sample predictions are paired for significance testing. Training
// folds get balanced inside fit (when the config asks for it); test folds
// keep the natural class ratio. Configs sharing everything but the rule
// reuse the same trained ensembles.
inline EvaluationReport cross_validate(const std::vector<FeatureBundle>& bundles,
                                       const std::vector<EvalConfig>& configs,
                                       int n_folds, std::uint64_t seed,
                                       double base_rate = 0.20,
                                       bool with_importance = true) {
    if (configs.empty()) throw InputError("cross_validate: no configurations");
    if (bundles.empty()) throw InputError("cross_validate: no bundles");
    for (const auto& b : bundles)
        if (!b.label) throw InputError("unlabeled bundle in evaluation: " + b.url);

    EvaluationReport rep;
    rep.n_folds = n_folds;
    rep.seed = seed;
    rep.base_rate = base_rate;
    rep.truth.reserve(bundles.size());
    for (const auto& b : bundles) rep.truth.push_back(*b.label);
    rep.fold_of = stratified_folds(rep.truth, n_folds, derive_seed(seed, "cv"));

    // Group configs that differ only in the combination rule: the per-family
    // models are rule-independent, so one training pass serves the group.
    auto group_key = [](const EnsembleParams& p) {
        EnsembleParams q = p;
        q.rule = CombinationRule::adaptive;
        json j;
        j["families"] = {q.enabled[0], q.enabled[1], q.enabled[2], q.enabled[3]};
        j["balance"] = q.balance;
        j["keep_fraction"] = q.keep_fraction;
        j["th"] = q.th.value;
        j["forest"] = {q.forest.n_trees, q.forest.m_features, q.forest.bootstrap,
                       q.forest.tree.max_depth, q.forest.tree.min_leaf,
                       to_string(q.forest.tree.criterion)};
        return j.dump();
    };
    std::map<std::string, std::vector<TrainedEnsemble>> trained;  // per fold

    for (const auto& cfg : configs) {
        const std::string key = group_key(cfg.params);
        auto [it, fresh] = trained.try_emplace(key);
        if (fresh) {
            std::uint64_t train_seed =
                derive_seed(seed, "cv-train-" + key);
            for (int f = 0; f < n_folds; ++f) {
                std::vector<FeatureBundle> train;
                for (std::size_t i = 0; i < bundles.size(); ++i)
                    if (rep.fold_of[i] != f) train.push_back(bundles[i]);
                it->second.push_back(
                    fit(train, cfg.params,
                        derive_seed(train_seed, "fold",
                                    static_cast<std::uint64_t>(f))));
            }
        }

        ConfigResult cr;
        cr.name = cfg.name;
        cr.params = cfg.params;
        cr.fold_cms.assign(static_cast<std::size_t>(n_folds), {});
        cr.predictions.resize(bundles.size(), ClassLabel::good);
        for (std::size_t i = 0; i < bundles.size(); ++i) {
            int f = rep.fold_of[i];
            const auto& ens = it->second[static_cast<std::size_t>(f)];
            auto res = classify(ens, bundles[i], nullptr, cfg.params.rule);
            cr.predictions[i] = res.label;
            cr.fold_cms[static_cast<std::size_t>(f)].add(rep.truth[i], res.label);
        }
        for (const auto& cm : cr.fold_cms) cr.pooled += cm;
        cr.report = metrics(cr.pooled);
        cr.detection =
            detection_rate(cr.report.fnr.value, cr.report.fpr.value, base_rate);
        rep.configs.push_back(std::move(cr));
    }

    for (std::size_t c = 0; c < rep.configs.size(); ++c)
        rep.configs[c].vs_baseline = mcnemar(rep.configs[0].predictions,
                                             rep.configs[c].predictions,
                                             rep.truth);

    if (with_importance) {
        auto full = fit(bundles, configs[0].params,
                        derive_seed(seed, "cv-importance"));
        for (Family f : full.trained_families()) {
            const auto& fm = full.family(f);
            rep.importance[to_string(f)] = {fm.mask,
                                            feature_importance(fm.model)};
        }
    }
    return rep;
}

// --- serialization ---------------------------------------------------------

inline json to_json(const ConfigResult& cr) {
    json j;
    j["name"] = cr.name;
    j["rule"] = to_string(cr.params.rule);
    std::string fams;
    for (Family f : kAllFamilies)
        if (cr.params.enabled[static_cast<std::size_t>(f)]) fams += to_string(f);
    j["families"] = fams;
    j["balance"] = cr.params.balance;
    json folds = json::array();
    for (const auto& cm : cr.fold_cms) folds.push_back(to_json(cm));
    j["fold_confusions"] = folds;
    j["pooled_confusion"] = to_json(cr.pooled);
    j["metrics"] = to_json(cr.report);
    j["detection_rate"] = to_json(cr.detection);
    j["mcnemar_vs_baseline"] = to_json(cr.vs_baseline);
    return j;
}

inline json to_json(const EvaluationReport& rep) {
    json j;
    j["schema_version"] = std::string(kSchemaVersion);
    j["kind"] = "evaluation";
    j["n_folds"] = rep.n_folds;
    j["seed"] = rep.seed;
    j["base_rate"] = rep.base_rate;
    j["fold_of"] = rep.fold_of;
    json cfgs = json::array();
    for (const auto& c : rep.configs) cfgs.push_back(to_json(c));
    j["configs"] = cfgs;
    json imp = json::object();
    for (const auto& [fam, fi] : rep.importance) {
        json fj;
        fj["mask"] = to_json(fi.mask);
        fj["scores"] = fi.scores;
        imp[fam] = fj;
    }
    j["importance"] = imp;
    return j;
}

// Flattened per-config aggregate metrics, one row each, for plotting.
inline std::string report_csv(const EvaluationReport& rep) {
    std::ostringstream out;
    out << "name,rule,families,tp,fp,tn,fn,precision_bad,recall_bad,f1_bad,"
           "precision_good,recall_good,f1_good,avg_f1,accuracy,fnr,fpr,"
           "fdr,detection_rate,mcnemar_chi2,mcnemar_p\n";
    out.setf(std::ios::fixed);
    out.precision(6);
    for (const auto& c : rep.configs) {
        std::string fams;
        for (Family f : kAllFamilies)
            if (c.params.enabled[static_cast<std::size_t>(f)])
                fams += to_string(f);
        const auto& m = c.report;
        out << c.name << ',' << to_string(c.params.rule) << ',' << fams << ','
            << c.pooled.tp << ',' << c.pooled.fp << ',' << c.pooled.tn << ','
            << c.pooled.fn << ',' << m.bad.precision.value << ','
            << m.bad.recall.value << ',' << m.bad.f1.value << ','
            << m.good.precision.value << ',' << m.good.recall.value << ','
            << m.good.f1.value << ',' << m.avg_f1.value << ',' << m.accuracy
            << ',' << m.fnr.value << ',' << m.fpr.value << ','
            << m.fdr.value << ',' << c.detection.value << ','
            << c.vs_baseline.chi2 << ',' << c.vs_baseline.p << '\n';
    }
    return out.str();
}

}  // namespace siterep
