#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "siterep/metrics.hpp"
#include "siterep/rng.hpp"

using namespace siterep;

namespace {

constexpr ClassLabel B = ClassLabel::bad;
constexpr ClassLabel G = ClassLabel::good;

// Independent recount + formula evaluation, used as the metrics oracle.
MetricReport oracle_metrics(const std::vector<ClassLabel>& truth,
                            const std::vector<ClassLabel>& pred) {
    std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == B && pred[i] == B) ++tp;
        if (truth[i] == G && pred[i] == B) ++fp;
        if (truth[i] == G && pred[i] == G) ++tn;
        if (truth[i] == B && pred[i] == G) ++fn;
    }
    auto rate = [](std::int64_t num, std::int64_t den) -> Rate {
        if (den == 0) return {0.0, false};
        return {static_cast<double>(num) / static_cast<double>(den), true};
    };
    auto f1 = [](Rate p, Rate r) -> Rate {
        if (p.value + r.value == 0.0) return {0.0, false};
        return {2.0 * p.value * r.value / (p.value + r.value), true};
    };
    MetricReport m;
    m.bad.support = tp + fn;
    m.bad.precision = rate(tp, tp + fp);
    m.bad.recall = rate(tp, tp + fn);
    m.bad.f1 = f1(m.bad.precision, m.bad.recall);
    m.good.support = tn + fp;
    m.good.precision = rate(tn, tn + fn);
    m.good.recall = rate(tn, tn + fp);
    m.good.f1 = f1(m.good.precision, m.good.recall);
    double wb = static_cast<double>(m.bad.support);
    double wg = static_cast<double>(m.good.support);
    m.avg_f1 = {(wb * m.bad.f1.value + wg * m.good.f1.value) / (wb + wg),
                m.bad.f1.defined && m.good.f1.defined};
    m.fnr = rate(fn, fn + tp);
    m.fpr = rate(fp, fp + tn);
    m.fdr = rate(fp, fp + tp);
    m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(tp + fp + tn + fn);
    return m;
}

}  // namespace

TEST_CASE("confusion matrix counting") {
    std::vector<ClassLabel> truth = {B, B, G, G, B};
    std::vector<ClassLabel> pred = {B, G, B, G, B};
    auto cm = confusion(truth, pred);
    CHECK(cm.tp == 2);
    CHECK(cm.fn == 1);
    CHECK(cm.fp == 1);
    CHECK(cm.tn == 1);
    CHECK(cm.total() == 5);

    CHECK_THROWS_AS(confusion({B}, {B, G}), InputError);
}

TEST_CASE("metrics on perfect predictions") {
    ConfusionMatrix cm{.tp = 30, .fp = 0, .tn = 70, .fn = 0};
    auto m = metrics(cm);
    CHECK(m.bad.precision.value == 1.0);
    CHECK(m.bad.recall.value == 1.0);
    CHECK(m.bad.f1.value == 1.0);
    CHECK(m.good.f1.value == 1.0);
    CHECK(m.avg_f1.value == 1.0);
    CHECK(m.fnr.value == 0.0);
    CHECK(m.fpr.value == 0.0);
    CHECK(m.fdr.value == 0.0);
    CHECK(m.accuracy == 1.0);
    CHECK(m.fnr.defined);
}

TEST_CASE("metrics worked example: TP=81 FN=19 FP=18 TN=82") {
    ConfusionMatrix cm{.tp = 81, .fp = 18, .tn = 82, .fn = 19};
    auto m = metrics(cm);
    CHECK(m.fnr.value == Catch::Approx(0.19).epsilon(1e-12));
    CHECK(m.fpr.value == Catch::Approx(0.18).epsilon(1e-12));
    CHECK(m.fdr.value == Catch::Approx(18.0 / 99.0).epsilon(1e-12));
    CHECK(m.bad.support == 100);
    CHECK(m.good.support == 100);
}

TEST_CASE("equal class F1 gives the same weighted average for any weights") {
    // Both class F1 = 0.8: bad P=R=0.8 via tp=8,fn=2,fp=2 -> good also 0.8
    // symmetric counts.
    ConfusionMatrix cm{.tp = 8, .fp = 2, .tn = 8, .fn = 2};
    auto base = metrics(cm);
    REQUIRE(base.bad.f1.value == Catch::Approx(0.8));
    REQUIRE(base.good.f1.value == Catch::Approx(0.8));
    CHECK(base.avg_f1.value == Catch::Approx(0.8));
    auto skewed = metrics(cm, 3.0, 7.0);
    CHECK(skewed.avg_f1.value == Catch::Approx(0.8));
}

TEST_CASE("0/0 rates are zero and flagged") {
    // No bad samples at all and nothing predicted bad.
    ConfusionMatrix cm{.tp = 0, .fp = 0, .tn = 10, .fn = 0};
    auto m = metrics(cm);
    CHECK_FALSE(m.bad.precision.defined);
    CHECK(m.bad.precision.value == 0.0);
    CHECK_FALSE(m.bad.recall.defined);
    CHECK_FALSE(m.bad.f1.defined);
    CHECK_FALSE(m.fnr.defined);
    CHECK_FALSE(m.fdr.defined);
    CHECK(m.fpr.defined);
    CHECK(m.good.f1.value == 1.0);
    CHECK_FALSE(m.avg_f1.defined);

    CHECK_THROWS_AS(metrics(ConfusionMatrix{}), InputError);
    CHECK_THROWS_AS(metrics(cm, -1.0, 1.0), InputError);
    CHECK_THROWS_AS(metrics(cm, 0.0, 0.0), InputError);
}

TEST_CASE("metrics match the brute-force oracle on 500 random sets") {
    Rng rng(8675309);
    for (int rep = 0; rep < 500; ++rep) {
        std::size_t n = 1 + rng.below(200);
        std::vector<ClassLabel> truth, pred;
        for (std::size_t i = 0; i < n; ++i) {
            truth.push_back(rng.below(2) == 0 ? B : G);
            pred.push_back(rng.below(2) == 0 ? B : G);
        }
        auto m = metrics(confusion(truth, pred));
        auto o = oracle_metrics(truth, pred);
        CHECK(m == o);  // exact, including flags

        // Weighted Avg F1 lies between the class F1 scores.
        double lo = std::min(m.bad.f1.value, m.good.f1.value);
        double hi = std::max(m.bad.f1.value, m.good.f1.value);
        CHECK(m.avg_f1.value >= lo - 1e-12);
        CHECK(m.avg_f1.value <= hi + 1e-12);
    }
}

TEST_CASE("detection rate formula") {
    SECTION("reference operating points") {
        CHECK(detection_rate(0.190, 0.183, 0.20).value * 100 ==
              Catch::Approx(52.5).margin(0.1));
        CHECK(detection_rate(0.142, 0.359, 0.20).value * 100 ==
              Catch::Approx(37.4).margin(0.1));
    }
    SECTION("no false alarms means certainty") {
        auto d = detection_rate(0.3, 0.0, 0.20);
        CHECK(d.value == 1.0);
        CHECK(d.defined);
    }
    SECTION("degenerate denominator is flagged") {
        auto d = detection_rate(1.0, 0.0, 0.20);
        CHECK_FALSE(d.defined);
        CHECK(d.value == 0.0);
    }
    SECTION("base rate defaults to 0.20") {
        CHECK(detection_rate(0.19, 0.183).value ==
              detection_rate(0.19, 0.183, 0.20).value);
    }
    SECTION("input validation") {
        CHECK_THROWS_AS(detection_rate(-0.1, 0.5), InputError);
        CHECK_THROWS_AS(detection_rate(0.1, 1.5), InputError);
        CHECK_THROWS_AS(detection_rate(0.1, 0.5, 2.0), InputError);
    }
}

TEST_CASE("mcnemar worked examples") {
    // Construct sequences with b = 10 (a correct, b wrong) and c = 20.
    std::vector<ClassLabel> truth, pa, pb;
    auto push = [&](bool a_ok, bool b_ok) {
        truth.push_back(B);
        pa.push_back(a_ok ? B : G);
        pb.push_back(b_ok ? B : G);
    };
    for (int i = 0; i < 10; ++i) push(true, false);
    for (int i = 0; i < 20; ++i) push(false, true);
    for (int i = 0; i < 7; ++i) push(true, true);
    for (int i = 0; i < 3; ++i) push(false, false);

    auto r = mcnemar(pa, pb, truth);
    CHECK(r.b == 10);
    CHECK(r.c == 20);
    CHECK(r.chi2 == 2.7);  // (|10-20|-1)^2 / 30, exact in doubles
    CHECK(r.p == Catch::Approx(0.1003).margin(1e-3));

    auto swapped = mcnemar(pb, pa, truth);
    CHECK(swapped.chi2 == r.chi2);
    CHECK(swapped.p == r.p);
    CHECK(swapped.b == r.c);
}

TEST_CASE("mcnemar edge cases") {
    std::vector<ClassLabel> truth = {B, G, B, G};
    std::vector<ClassLabel> same = {B, B, G, G};
    auto r = mcnemar(same, same, truth);
    CHECK(r.chi2 == 0.0);
    CHECK(r.p == 1.0);
    CHECK(r.b == 0);

    // b = c = 5 -> chi2 = (0-1)^2/10 = 0.1.
    std::vector<ClassLabel> t2, a2, b2;
    for (int i = 0; i < 5; ++i) {
        t2.push_back(B);
        a2.push_back(B);
        b2.push_back(G);
    }
    for (int i = 0; i < 5; ++i) {
        t2.push_back(B);
        a2.push_back(G);
        b2.push_back(B);
    }
    auto r2 = mcnemar(a2, b2, t2);
    CHECK(r2.chi2 == 0.1);

    CHECK_THROWS_AS(mcnemar({B}, {B, G}, {B, G}), InputError);
    CHECK_THROWS_AS(mcnemar({B, G}, {B, G}, {B}), InputError);
}

TEST_CASE("mcnemar p-value via the normal tail identity") {
    // p = 2(1 - Phi(sqrt(chi2))) = erfc(sqrt(chi2/2)); spot-check chi2 = 3.84
    // (the 0.05 critical value for df=1).
    std::vector<ClassLabel> truth, pa, pb;
    // b=27, c=10: chi2 = (17-1)^2/37 = 256/37 ~ 6.92
    for (int i = 0; i < 27; ++i) {
        truth.push_back(B);
        pa.push_back(B);
        pb.push_back(G);
    }
    for (int i = 0; i < 10; ++i) {
        truth.push_back(B);
        pa.push_back(G);
        pb.push_back(B);
    }
    auto r = mcnemar(pa, pb, truth);
    CHECK(r.chi2 == Catch::Approx(256.0 / 37.0));
    CHECK(r.p == Catch::Approx(std::erfc(std::sqrt(256.0 / 74.0))));
    CHECK(r.p < 0.01);  // clearly significant
}
