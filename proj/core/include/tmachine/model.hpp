#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "tmachine/rng.hpp"

namespace tmachine {

inline constexpr int kDefaultMaxLoci = 15;

// Dense K x K per-mutation transition matrix. Entry (from, to) is the
// probability that a mutating ancestor of type `from` produces an offspring
// of type `to`. Stored column-major so that the column P[.][to], which both
// the backward proposal and the stationary iteration read, is contiguous.
class TransitionMatrix {
public:
    // Rows are P[from][.]; validated to be square, in [0,1], rows summing to 1.
    explicit TransitionMatrix(const std::vector<std::vector<double>>& rows);

    std::size_t num_types() const { return k_; }

    double operator()(std::size_t from, std::size_t to) const { return data_[to * k_ + from]; }

    // P[.][to], indexed by ancestor type.
    std::span<const double> column(std::size_t to) const {
        return {data_.data() + to * k_, k_};
    }

    // Sum over ancestors of P[j][to].
    double column_sum(std::size_t to) const { return column_sums_[to]; }

    std::vector<std::vector<double>> rows() const;

    bool operator==(const TransitionMatrix& other) const { return k_ == other.k_ && data_ == other.data_; }

    // Entry (from, to) at column_major[to * k + from]; validated like the row form.
    static TransitionMatrix from_column_major(std::size_t k, std::vector<double> column_major);

private:
    TransitionMatrix() = default;
    void validate() const;
    void compute_column_sums();

    std::size_t k_ = 0;
    std::vector<double> data_;
    std::vector<double> column_sums_;
};

// Matrix plus scaled mutation rate. The matrix is shared and immutable, so a
// mu sweep copies only the pointer.
struct MutationModel {
    std::shared_ptr<const TransitionMatrix> transition;
    double mu = 1.0;

    MutationModel(std::shared_ptr<const TransitionMatrix> p, double mu_value);

    std::size_t num_types() const { return transition->num_types(); }
    const TransitionMatrix& matrix() const { return *transition; }
    MutationModel with_mu(double mu_value) const { return {transition, mu_value}; }
};

// Lineage counts per type.
class Configuration {
public:
    Configuration() = default;
    explicit Configuration(std::vector<int> counts);

    std::size_t num_types() const { return counts_.size(); }
    int total() const { return total_; }
    int operator[](std::size_t type) const { return counts_[type]; }
    const std::vector<int>& counts() const { return counts_; }

    void increment(std::size_t type);
    void decrement(std::size_t type);

    bool operator==(const Configuration&) const = default;

private:
    std::vector<int> counts_;
    int total_ = 0;
};

struct StationaryDistribution {
    std::vector<double> probs;

    std::size_t num_types() const { return probs.size(); }
    double operator[](std::size_t type) const { return probs[type]; }
};

// Bytes needed to store a dense 2^L x 2^L matrix of doubles.
double dense_matrix_bytes(int loci);

// Tensor product of per-locus kernels [[1-a, a], [b, 1-b]]; bit l of the
// type index is the allele at locus l. Throws GuardError when loci > max_loci.
TransitionMatrix build_flip_model(int loci, std::span<const double> a, std::span<const double> b,
                                  int max_loci = kDefaultMaxLoci);

// Each mutation flips exactly one locus chosen uniformly.
TransitionMatrix build_single_site_model(int loci, int max_loci = kDefaultMaxLoci);

struct StationaryOptions {
    double tolerance = 1e-10;
    std::int64_t max_iterations = 1'000'000;
    std::size_t direct_solve_limit = 64;
};

// Left fixed point pi P = pi. Direct solve for small K, otherwise power
// iteration that falls back to the lazy chain (P + I)/2 when the plain
// iteration stalls (periodic chains). Throws NumericalError on failure.
StationaryDistribution stationary(const TransitionMatrix& p, const StationaryOptions& options = {});

// max_i |(pi P)_i - pi_i|
double stationary_residual(const TransitionMatrix& p, std::span<const double> pi);

// Multinomial(size, pi) via sequential conditional binomials.
Configuration sample_population(const StationaryDistribution& dist, int size, RandomStream& stream);

}  // namespace tmachine
