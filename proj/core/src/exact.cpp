#include "tmachine/exact.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tmachine/errors.hpp"

namespace tmachine {

namespace {

constexpr std::uint64_t kSaturated = std::numeric_limits<std::uint64_t>::max();

std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) { return a > kSaturated - b ? kSaturated : a + b; }

}  // namespace

CompositionLattice::CompositionLattice(std::size_t num_types, int max_total) : k_(num_types), max_total_(max_total) {
    if (k_ == 0) throw ValidationError("lattice needs at least one type");
    if (max_total < 0) throw ValidationError("lattice total must be non-negative");
    const std::size_t rows = static_cast<std::size_t>(max_total) + k_ + 1;
    const std::size_t cols = static_cast<std::size_t>(max_total) + 1;
    binom_.assign(rows * cols, 0);
    for (std::size_t n = 0; n < rows; ++n) {
        binom_[n * cols] = 1;
        for (std::size_t r = 1; r < cols && r <= n; ++r)
            binom_[n * cols + r] = saturating_add(binom_[(n - 1) * cols + r - 1], binom_[(n - 1) * cols + r]);
    }
}

std::uint64_t CompositionLattice::binom(int n, int r) const {
    return binom_[static_cast<std::size_t>(n) * static_cast<std::size_t>(max_total_ + 1) + static_cast<std::size_t>(r)];
}

std::uint64_t CompositionLattice::count(int total) const {
    return binom(total + static_cast<int>(k_) - 1, total);
}

std::uint64_t CompositionLattice::rank(std::span<const int> counts) const {
    int remaining = 0;
    for (int c : counts) remaining += c;
    std::uint64_t r = 0;
    const int k = static_cast<int>(k_);
    for (int pos = 0; pos + 1 < k; ++pos) {
        const int c = counts[static_cast<std::size_t>(pos)];
        if (c > 0) {
            const int parts = k - pos - 1;
            r += binom(remaining + parts, remaining) - binom(remaining - c + parts, remaining - c);
            remaining -= c;
        }
    }
    return r;
}

void CompositionLattice::first(int total, std::span<int> counts) const {
    std::fill(counts.begin(), counts.end(), 0);
    counts[k_ - 1] = total;
}

bool CompositionLattice::next(std::span<int> counts) const {
    const std::size_t last = k_ - 1;
    if (k_ == 1) return false;
    if (counts[last] > 0) {
        --counts[last];
        ++counts[last - 1];
        return true;
    }
    std::size_t z = last;
    while (z > 0 && counts[z] == 0) --z;
    if (z == 0) return false;
    const int v = counts[z];
    counts[z] = 0;
    ++counts[z - 1];
    counts[last] = v - 1;
    return true;
}

std::uint64_t configuration_count(int total, std::size_t num_types) {
    // C(total + K - 1, total) with saturation, computed multiplicatively.
    long double value = 1.0L;
    for (int r = 1; r <= total; ++r) {
        value = value * static_cast<long double>(static_cast<long double>(num_types) - 1 + r) / r;
        if (value >= 1.8e19L) return kSaturated;
    }
    return static_cast<std::uint64_t>(std::llround(value));
}

ExactSolver::ExactSolver(const MutationModel& model, const StationaryDistribution& dist, int max_total,
                         const ExactOptions& options)
    : model_(model),
      options_(options),
      base_total_(options.stop_size),
      max_total_(max_total),
      lattice_(model.num_types(), max_total) {
    if (dist.num_types() != model.num_types()) {
        throw ValidationError("stationary distribution size does not match the model");
    }
    if (base_total_ < 1 || max_total_ < base_total_) {
        throw ValidationError("exact solver needs 1 <= stop size <= population total");
    }
    const std::uint64_t needed = configuration_count(max_total_, model.num_types());
    if (needed > options_.max_configurations) {
        std::ostringstream msg;
        msg << "exact likelihood refused: " << model.num_types() << " types with " << max_total_
            << " lineages give ";
        if (needed == kSaturated) msg << "more than 1.8e19";
        else msg << needed;
        msg << " configurations (limit " << options_.max_configurations << ")";
        throw GuardError(msg.str());
    }
    levels_.resize(static_cast<std::size_t>(max_total_ - base_total_ + 1));
    seed_base_level(dist);
    for (int m = base_total_ + 1; m <= max_total_; ++m) solve_level(m);
}

const std::vector<double>& ExactSolver::level(int total) const {
    if (total < base_total_ || total > max_total_) throw ValidationError("level outside the solved range");
    return levels_[static_cast<std::size_t>(total - base_total_)];
}

double ExactSolver::probability(const Configuration& config) const {
    if (config.num_types() != lattice_.num_types()) throw ValidationError("configuration size mismatch");
    return level(config.total())[lattice_.rank(config.counts())];
}

void ExactSolver::seed_base_level(const StationaryDistribution& dist) {
    const int m = base_total_;
    auto& values = levels_[0];
    values.assign(lattice_.count(m), 0.0);
    std::vector<int> c(lattice_.num_types());
    lattice_.first(m, c);
    std::size_t r = 0;
    do {
        double v = 1.0;
        if (m == 1 || options_.correction == Correction::StationaryProduct) {
            for (std::size_t i = 0; i < c.size(); ++i)
                if (c[i] > 0) v *= std::pow(dist[i], c[i]);
        }
        values[r++] = v;
    } while (lattice_.next(c));
}

void ExactSolver::solve_level(int m) {
    const TransitionMatrix& p = model_.matrix();
    const double mu = model_.mu;
    const std::size_t k = lattice_.num_types();
    const std::size_t size = lattice_.count(m);
    const auto& below = level(m - 1);
    const double rate = total_rate(m, mu);

    // Row r: diag[r] q_r - sum off[r] q_c = rhs[r]
    std::vector<double> diag(size), rhs(size);
    std::vector<std::size_t> row_start{0};
    std::vector<std::size_t> cols;
    std::vector<double> vals;

    std::vector<int> c(k);
    lattice_.first(m, c);
    std::size_t r = 0;
    do {
        double d = rate;
        double b = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const int ni = c[i];
            if (ni == 0) continue;
            d -= mu * ni * p(i, i);
            --c[i];
            if (ni >= 2) b += static_cast<double>(ni) * (ni - 1) * below[lattice_.rank(c)];
            const auto column = p.column(i);
            for (std::size_t j = 0; j < k; ++j) {
                if (j == i || column[j] <= 0.0) continue;
                ++c[j];
                cols.push_back(lattice_.rank(c));
                vals.push_back(mu * ni * column[j]);
                --c[j];
            }
            ++c[i];
        }
        diag[r] = d;
        rhs[r] = b;
        row_start.push_back(cols.size());
        ++r;
    } while (lattice_.next(c));

    std::vector<double>& q = levels_[static_cast<std::size_t>(m - base_total_)];
    if (size <= options_.dense_level_limit) {
        const auto s = static_cast<Eigen::Index>(size);
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(s, s);
        Eigen::VectorXd bvec(s);
        for (std::size_t row = 0; row < size; ++row) {
            a(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(row)) = diag[row];
            for (std::size_t e = row_start[row]; e < row_start[row + 1]; ++e)
                a(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(cols[e])) -= vals[e];
            bvec(static_cast<Eigen::Index>(row)) = rhs[row];
        }
        Eigen::VectorXd x = a.partialPivLu().solve(bvec);
        q.assign(x.data(), x.data() + s);
        return;
    }

    // Gauss-Seidel. The level matrix is a non-singular M-matrix (multinomial
    // weights give a positive left vector with strictly positive image), so
    // the sweep converges for any mu > 0.
    q.resize(size);
    double scale = 0.0;
    for (std::size_t row = 0; row < size; ++row) {
        q[row] = rhs[row] / diag[row];
        scale = std::max(scale, std::abs(rhs[row]));
    }
    if (scale == 0.0) return;
    double residual = std::numeric_limits<double>::infinity();
    for (std::int64_t sweep = 0; sweep < options_.max_sweeps; ++sweep) {
        for (std::size_t row = 0; row < size; ++row) {
            double acc = rhs[row];
            for (std::size_t e = row_start[row]; e < row_start[row + 1]; ++e) acc += vals[e] * q[cols[e]];
            q[row] = acc / diag[row];
        }
        residual = 0.0;
        for (std::size_t row = 0; row < size; ++row) {
            double acc = diag[row] * q[row] - rhs[row];
            for (std::size_t e = row_start[row]; e < row_start[row + 1]; ++e) acc -= vals[e] * q[cols[e]];
            residual = std::max(residual, std::abs(acc));
        }
        if (residual <= options_.tolerance * scale) return;
    }
    std::ostringstream msg;
    msg << "exact solver did not converge at level " << m << ": relative residual " << residual / scale;
    throw NumericalError(msg.str());
}

double exact_likelihood(const Configuration& initial, const MutationModel& model, const StationaryDistribution& dist,
                        const ExactOptions& options) {
    if (initial.num_types() != model.num_types()) {
        throw ValidationError("population has " + std::to_string(initial.num_types()) + " types but the model has " +
                              std::to_string(model.num_types()));
    }
    if (options.stop_size > initial.total()) throw ValidationError("stop size exceeds the population total");
    const ExactSolver solver(model, dist, initial.total(), options);
    return std::log(solver.probability(initial));
}

}  // namespace tmachine
