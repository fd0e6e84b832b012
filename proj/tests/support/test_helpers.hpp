#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "tmachine/model.hpp"
#include "tmachine/rng.hpp"

namespace tmachine::testing {

inline std::shared_ptr<const TransitionMatrix> share(TransitionMatrix p) {
    return std::make_shared<const TransitionMatrix>(std::move(p));
}

// Row-stochastic K x K matrix with strictly positive entries.
inline TransitionMatrix random_stochastic(std::size_t k, RandomStream& s) {
    std::vector<std::vector<double>> rows(k, std::vector<double>(k));
    for (auto& row : rows) {
        double total = 0.0;
        for (auto& v : row) {
            v = 0.05 + s.uniform();
            total += v;
        }
        for (auto& v : row) v /= total;
        // Push the rounding residue onto the diagonal-free first entry.
        double sum = 0.0;
        for (std::size_t i = 1; i < k; ++i) sum += row[i];
        row[0] = 1.0 - sum;
    }
    return TransitionMatrix(rows);
}

inline Configuration random_configuration(std::size_t k, int total, RandomStream& s) {
    std::vector<int> counts(k, 0);
    for (int m = 0; m < total; ++m) ++counts[s() % k];
    return Configuration(counts);
}

// Mean of exp(log w) and its standard error, straight from the definition.
struct WeightMoments {
    double mean = 0.0;
    double std_error = 0.0;
};

template <typename Records>
WeightMoments weight_moments(const Records& records) {
    const double m = static_cast<double>(records.size());
    double sum = 0.0, sq = 0.0;
    for (const auto& r : records) {
        const double w = std::exp(r.log_weight);
        sum += w;
        sq += w * w;
    }
    const double mean = sum / m;
    const double var = (sq - m * mean * mean) / (m - 1.0);
    return {mean, std::sqrt(std::max(var, 0.0) / m)};
}

}  // namespace tmachine::testing
