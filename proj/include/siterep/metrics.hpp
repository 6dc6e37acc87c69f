#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "siterep/jsonl.hpp"
#include "siterep/reputation.hpp"

namespace siterep {

// Confusion counts with bad as the positive class.
struct ConfusionMatrix {
    std::int64_t tp = 0;  // truth bad, predicted bad
    std::int64_t fp = 0;  // truth good, predicted bad
    std::int64_t tn = 0;  // truth good, predicted good
    std::int64_t fn = 0;  // truth bad, predicted good

    std::int64_t total() const { return tp + fp + tn + fn; }

    void add(ClassLabel truth, ClassLabel pred) {
        if (truth == ClassLabel::bad)
            (pred == ClassLabel::bad ? tp : fn) += 1;
        else
            (pred == ClassLabel::bad ? fp : tn) += 1;
    }

    ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
        tp += o.tp;
        fp += o.fp;
        tn += o.tn;
        fn += o.fn;
        return *this;
    }

    bool operator==(const ConfusionMatrix&) const = default;
};

inline ConfusionMatrix confusion(const std::vector<ClassLabel>& truth,
                                 const std::vector<ClassLabel>& pred) {
    if (truth.size() != pred.size())
        throw InputError("confusion: truth/prediction length mismatch");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], pred[i]);
    return cm;
}

// A rate whose 0/0 case is defined as 0 but flagged.
struct Rate {
    double value = 0.0;
    bool defined = true;

    bool operator==(const Rate&) const = default;
};

inline Rate ratio(std::int64_t num, std::int64_t den) {
    if (den == 0) return {0.0, false};
    return {static_cast<double>(num) / static_cast<double>(den), true};
}

struct ClassMetrics {
    Rate precision;
    Rate recall;
    Rate f1;
    std::int64_t support = 0;

    bool operator==(const ClassMetrics&) const = default;
};

struct MetricReport {
    ClassMetrics bad;
    ClassMetrics good;
    Rate avg_f1;     // support-weighted mean of the class F1 scores
    Rate fnr;        // FN / (FN + TP)
    Rate fpr;        // FP / (FP + TN), the conventional definition
    Rate fdr;  // FP / (FP + TP): false discovery rate among bad-flagged pages
    double accuracy = 0.0;

    bool operator==(const MetricReport&) const = default;
};

namespace detail {

inline Rate f1_of(Rate precision, Rate recall) {
    double denom = precision.value + recall.value;
    if (denom == 0.0) return {0.0, false};  // 0/0: defined as 0, flagged
    return {2.0 * precision.value * recall.value / denom, true};
}

}  // namespace detail

// One-vs-rest metrics for both classes plus the aggregate rates. The average
// F1 weighs each class F1 by its support; custom weights may be supplied.
inline MetricReport metrics(const ConfusionMatrix& cm, double w_bad,
                            double w_good) {
    if (cm.total() <= 0) throw InputError("metrics on an empty confusion matrix");
    if (cm.tp < 0 || cm.fp < 0 || cm.tn < 0 || cm.fn < 0)
        throw InputError("negative confusion counts");
    if (w_bad < 0 || w_good < 0 || w_bad + w_good <= 0)
        throw InputError("class weights must be nonnegative with positive sum");

    MetricReport r;
    r.bad.support = cm.tp + cm.fn;
    r.bad.precision = ratio(cm.tp, cm.tp + cm.fp);
    r.bad.recall = ratio(cm.tp, cm.tp + cm.fn);
    r.bad.f1 = detail::f1_of(r.bad.precision, r.bad.recall);

    r.good.support = cm.tn + cm.fp;
    r.good.precision = ratio(cm.tn, cm.tn + cm.fn);
    r.good.recall = ratio(cm.tn, cm.tn + cm.fp);
    r.good.f1 = detail::f1_of(r.good.precision, r.good.recall);

    r.avg_f1 = {(w_bad * r.bad.f1.value + w_good * r.good.f1.value) /
                    (w_bad + w_good),
                r.bad.f1.defined && r.good.f1.defined};
    r.fnr = ratio(cm.fn, cm.fn + cm.tp);
    r.fpr = ratio(cm.fp, cm.fp + cm.tn);
    r.fdr = ratio(cm.fp, cm.fp + cm.tp);
    r.accuracy =
        static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
    return r;
}

inline MetricReport metrics(const ConfusionMatrix& cm) {
    return metrics(cm, static_cast<double>(cm.tp + cm.fn),
                   static_cast<double>(cm.tn + cm.fp));
}

// Posterior probability that a page flagged bad is truly bad, given the miss
// rate, false-alarm rate, and the base rate of bad pages in the wild.
inline Rate detection_rate(double fnr, double fpr, double base_rate = 0.20) {
    auto in01 = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!in01(fnr) || !in01(fpr) || !in01(base_rate))
        throw InputError("detection_rate inputs must lie in [0,1]");
    double hit = (1.0 - fnr) * base_rate;
    double denom = hit + fpr * (1.0 - base_rate);
    if (denom == 0.0) return {0.0, false};
    return {hit / denom, true};
}

struct McNemarResult {
    std::int64_t b = 0;  // a correct, b wrong
    std::int64_t c = 0;  // a wrong, b correct
    double chi2 = 0.0;
    double p = 1.0;

    bool operator==(const McNemarResult&) const = default;
};

// Paired McNemar test with Yates' continuity correction on the disagreement
// counts of two prediction sequences against a shared truth.
inline McNemarResult mcnemar(const std::vector<ClassLabel>& pred_a,
                             const std::vector<ClassLabel>& pred_b,
                             const std::vector<ClassLabel>& truth) {
    if (pred_a.size() != pred_b.size() || pred_a.size() != truth.size())
        throw InputError("mcnemar: sequence length mismatch");
    McNemarResult r;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        bool a_ok = pred_a[i] == truth[i];
        bool b_ok = pred_b[i] == truth[i];
        if (a_ok && !b_ok) ++r.b;
        if (!a_ok && b_ok) ++r.c;
    }
    if (r.b + r.c == 0) return r;  // chi2 = 0, p = 1
    double diff = std::abs(static_cast<double>(r.b - r.c)) - 1.0;
    r.chi2 = diff * diff / static_cast<double>(r.b + r.c);
    // Upper tail of chi-square with 1 df: p = 2*(1 - Phi(sqrt(chi2))),
    // evaluated as erfc(sqrt(chi2/2)) for full double precision.
    r.p = std::erfc(std::sqrt(r.chi2 / 2.0));
    return r;
}

// --- serialization ---------------------------------------------------------

inline json to_json(const ConfusionMatrix& cm) {
    json j;
    j["tp"] = cm.tp;
    j["fp"] = cm.fp;
    j["tn"] = cm.tn;
    j["fn"] = cm.fn;
    return j;
}

inline json to_json(const Rate& r) {
    json j;
    j["value"] = r.value;
    j["defined"] = r.defined;
    return j;
}

inline json to_json(const ClassMetrics& m) {
    json j;
    j["precision"] = to_json(m.precision);
    j["recall"] = to_json(m.recall);
    j["f1"] = to_json(m.f1);
    j["support"] = m.support;
    return j;
}

inline json to_json(const MetricReport& r) {
    json j;
    j["bad"] = to_json(r.bad);
    j["good"] = to_json(r.good);
    j["avg_f1"] = to_json(r.avg_f1);
    j["fnr"] = to_json(r.fnr);
    j["fpr"] = to_json(r.fpr);
    j["fdr"] = to_json(r.fdr);
    j["accuracy"] = r.accuracy;
    return j;
}

inline json to_json(const McNemarResult& m) {
    json j;
    j["b"] = m.b;
    j["c"] = m.c;
    j["chi2"] = m.chi2;
    j["p"] = m.p;
    return j;
}

}  // namespace siterep
