#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tmachine/engine.hpp"
#include "tmachine/model.hpp"

namespace tmachine {

// Compositions of a total m into K ordered non-negative parts, ranked in
// lexicographic order (first coordinate slowest). Rank is O(K).
class CompositionLattice {
public:
    CompositionLattice(std::size_t num_types, int max_total);

    std::size_t num_types() const { return k_; }

    // Number of compositions of `total`; saturates at UINT64_MAX.
    std::uint64_t count(int total) const;

    std::uint64_t rank(std::span<const int> counts) const;

    // First composition of `total`: (0, ..., 0, total).
    void first(int total, std::span<int> counts) const;

    // Advances to the next composition; false after the last one.
    bool next(std::span<int> counts) const;

private:
    std::uint64_t binom(int n, int r) const;

    std::size_t k_;
    int max_total_;
    // binom_[n * (max_total_ + 1) + r] = C(n, r) for r <= max_total_.
    std::vector<std::uint64_t> binom_;
};

// Saturating C(total + K - 1, K - 1).
std::uint64_t configuration_count(int total, std::size_t num_types);

struct ExactOptions {
    // Levels below this total are not visited; the recursion is seeded at
    // this level with the terminal factor the simulator would apply there.
    int stop_size = 1;
    Correction correction = Correction::StationaryProduct;
    std::uint64_t max_configurations = 1'000'000;
    std::size_t dense_level_limit = 2000;
    double tolerance = 1e-12;
    std::int64_t max_sweeps = 1'000'000;
};

// Solves the ordered-sampling recursion
//   q(n) D(n) = sum_i n_i (n_i - 1) q(n - e_i) + mu sum_{i,j} n_i P[j][i] q(n - e_i + e_j)
// level by level up to `max_total`. Same-level mutation terms form a linear
// system per level (dense LU for small levels, Gauss-Seidel otherwise).
class ExactSolver {
public:
    ExactSolver(const MutationModel& model, const StationaryDistribution& dist, int max_total,
                const ExactOptions& options = {});

    const CompositionLattice& lattice() const { return lattice_; }
    int min_total() const { return base_total_; }
    int max_total() const { return max_total_; }

    // q for every composition of `total`, indexed by lattice rank.
    const std::vector<double>& level(int total) const;

    double probability(const Configuration& config) const;

private:
    void seed_base_level(const StationaryDistribution& dist);
    void solve_level(int total);

    MutationModel model_;
    ExactOptions options_;
    int base_total_;
    int max_total_;
    CompositionLattice lattice_;
    std::vector<std::vector<double>> levels_;
};

// log q(initial) under the recursion above; with options.stop_size > 1 this
// is the log of the expected Time Machine weight at that stop size.
double exact_likelihood(const Configuration& initial, const MutationModel& model, const StationaryDistribution& dist,
                        const ExactOptions& options = {});

}  // namespace tmachine
