#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "siterep/common.hpp"

namespace siterep {

// Ratings of a page's embedded links, already capped at the critical rating
// threshold C_r. The cap defeats padding attacks: a bad page cannot inflate
// its link-rating distribution by embedding links to highly rated sites,
// because ratings above C_r are discarded before any feature is computed.
struct LinkRatings {
    std::vector<int> ratings;  // each in [0, critical]
    int critical = 100;

    // Filters raw ratings (values above C_r dropped) and validates range.
    static LinkRatings filtered(const std::vector<int>& raw, int critical) {
        if (critical < 0 || critical > 100)
            throw InputError("critical rating threshold must lie in [0,100], got " +
                             std::to_string(critical));
        LinkRatings out;
        out.critical = critical;
        for (int r : raw) {
            if (r < 0 || r > 100)
                throw DataError("link rating out of range [0,100]: " +
                                std::to_string(r));
            if (r <= critical) out.ratings.push_back(r);
        }
        return out;
    }

    bool empty() const { return ratings.empty(); }
};

// Empirical cumulative distribution over a non-empty rating multiset:
// P_c(r) = |{x in R : x <= r}| / |R|. Right-continuous step function.
class Ecdf {
  public:
    explicit Ecdf(std::vector<int> ratings) : sorted_(std::move(ratings)) {
        if (sorted_.empty()) throw InputError("Ecdf requires a non-empty multiset");
        std::sort(sorted_.begin(), sorted_.end());
    }

    double operator()(int r) const {
        auto it = std::upper_bound(sorted_.begin(), sorted_.end(), r);
        return static_cast<double>(it - sorted_.begin()) /
               static_cast<double>(sorted_.size());
    }

    const std::vector<int>& sorted() const { return sorted_; }

  private:
    std::vector<int> sorted_;
};

inline std::optional<Ecdf> ecdf(const LinkRatings& links) {
    if (links.empty()) return std::nullopt;  // family unavailable
    return Ecdf(links.ratings);
}

// Inverse-ECDF feature vector: k quantile samples at bin centers
// b_i = (i - 0.5) / k, where the inverse is the smallest element of the
// sorted multiset whose ECDF reaches b_i, followed by the mean of the
// filtered ratings as element k+1. Returns nullopt when no link ratings
// survive the C_r filter (the family is unavailable, never zero-filled).
//
// The selected index solves min j : (j+1)/n >= (2i-1)/(2k), i.e. the first j
// with 2k(j+1) >= n(2i-1) — evaluated in 64-bit integers, so the result is
// exact for any n and k in range (no floating-point bin-edge ambiguity).
inline std::optional<std::vector<double>> ecdf_features(const LinkRatings& links,
                                                        int k) {
    if (k < 1) throw InputError("ecdf bin count k must be >= 1");
    if (links.empty()) return std::nullopt;

    std::vector<int> sorted = links.ratings;
    std::sort(sorted.begin(), sorted.end());
    const std::int64_t n = static_cast<std::int64_t>(sorted.size());
    const std::int64_t kk = k;

    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(k) + 1);
    for (std::int64_t i = 1; i <= kk; ++i) {
        // j+1 = ceil(n*(2i-1) / (2k)); the numerator is < 2kn so j < n.
        std::int64_t num = n * (2 * i - 1);
        std::int64_t j = (num + 2 * kk - 1) / (2 * kk) - 1;
        out.push_back(static_cast<double>(sorted[static_cast<std::size_t>(j)]));
    }
    double sum = static_cast<double>(
        std::accumulate(sorted.begin(), sorted.end(), std::int64_t{0}));
    out.push_back(sum / static_cast<double>(n));
    return out;
}

}  // namespace siterep
