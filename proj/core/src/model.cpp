#include "tmachine/model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "tmachine/errors.hpp"

namespace tmachine {

namespace {

constexpr double kRowSumTolerance = 1e-12;

void check_loci(int loci, int max_loci) {
    if (loci < 1) throw ValidationError("number of loci must be at least 1");
    if (loci > max_loci) {
        std::ostringstream msg;
        msg << "refusing to build a dense 2^" << loci << " x 2^" << loci
            << " transition matrix: it needs about " << dense_matrix_bytes(loci) / (1024.0 * 1024.0 * 1024.0)
            << " GiB (limit is " << max_loci << " loci; raise the loci limit to override)";
        throw GuardError(msg.str());
    }
}

}  // namespace

TransitionMatrix::TransitionMatrix(const std::vector<std::vector<double>>& rows) : k_(rows.size()) {
    if (k_ == 0) throw ValidationError("transition matrix must have at least one type");
    data_.assign(k_ * k_, 0.0);
    for (std::size_t j = 0; j < k_; ++j) {
        if (rows[j].size() != k_) {
            throw ValidationError("transition matrix must be square: row " + std::to_string(j) + " has " +
                                  std::to_string(rows[j].size()) + " entries, expected " + std::to_string(k_));
        }
        for (std::size_t i = 0; i < k_; ++i) data_[i * k_ + j] = rows[j][i];
    }
    validate();
    compute_column_sums();
}

TransitionMatrix TransitionMatrix::from_column_major(std::size_t k, std::vector<double> column_major) {
    if (k == 0 || column_major.size() != k * k) {
        throw ValidationError("column-major data does not describe a non-empty square matrix");
    }
    TransitionMatrix m;
    m.k_ = k;
    m.data_ = std::move(column_major);
    m.validate();
    m.compute_column_sums();
    return m;
}

void TransitionMatrix::validate() const {
    std::vector<double> row_sums(k_, 0.0);
    for (std::size_t i = 0; i < k_; ++i) {
        for (std::size_t j = 0; j < k_; ++j) {
            const double v = data_[i * k_ + j];
            if (!(v >= 0.0 && v <= 1.0)) {
                std::ostringstream msg;
                msg << "transition entry P[" << j << "][" << i << "] = " << v << " is outside [0, 1]";
                throw ValidationError(msg.str());
            }
            row_sums[j] += v;
        }
    }
    for (std::size_t j = 0; j < k_; ++j) {
        if (std::abs(row_sums[j] - 1.0) > kRowSumTolerance) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "transition row " << j << " sums to " << row_sums[j] << ", not 1";
            throw ValidationError(msg.str());
        }
    }
}

void TransitionMatrix::compute_column_sums() {
    column_sums_.assign(k_, 0.0);
    for (std::size_t i = 0; i < k_; ++i) {
        double s = 0.0;
        for (double v : column(i)) s += v;
        column_sums_[i] = s;
    }
}

std::vector<std::vector<double>> TransitionMatrix::rows() const {
    std::vector<std::vector<double>> out(k_, std::vector<double>(k_));
    for (std::size_t j = 0; j < k_; ++j)
        for (std::size_t i = 0; i < k_; ++i) out[j][i] = (*this)(j, i);
    return out;
}

MutationModel::MutationModel(std::shared_ptr<const TransitionMatrix> p, double mu_value)
    : transition(std::move(p)), mu(mu_value) {
    if (!transition) throw ValidationError("mutation model needs a transition matrix");
    if (!(mu > 0.0) || !std::isfinite(mu)) throw ValidationError("mutation rate mu must be finite and > 0");
}

Configuration::Configuration(std::vector<int> counts) : counts_(std::move(counts)) {
    if (counts_.empty()) throw ValidationError("configuration must have at least one type");
    for (int c : counts_) {
        if (c < 0) throw ValidationError("configuration counts must be non-negative");
        total_ += c;
    }
    if (total_ < 1) throw ValidationError("configuration must contain at least one individual");
}

void Configuration::increment(std::size_t type) {
    ++counts_[type];
    ++total_;
}

void Configuration::decrement(std::size_t type) {
    if (counts_[type] < 1) throw Error("internal: decrementing an empty type");
    --counts_[type];
    --total_;
}

double dense_matrix_bytes(int loci) {
    const double k = std::ldexp(1.0, loci);
    return k * k * sizeof(double);
}

TransitionMatrix build_flip_model(int loci, std::span<const double> a, std::span<const double> b, int max_loci) {
    check_loci(loci, max_loci);
    if (a.size() != static_cast<std::size_t>(loci) || b.size() != static_cast<std::size_t>(loci)) {
        throw ValidationError("flip model needs one a and one b value per locus");
    }
    for (int l = 0; l < loci; ++l) {
        if (!(a[l] > 0.0 && a[l] < 1.0) || !(b[l] > 0.0 && b[l] < 1.0)) {
            throw ValidationError("flip probabilities must lie strictly inside (0, 1)");
        }
    }
    // Grow the column-major matrix one locus at a time: the new locus is the
    // high bit, so T_new = K_l^T (x) T_old with K_l = [[1-a, a], [b, 1-b]].
    std::vector<double> cur{1.0};
    std::size_t size = 1;
    for (int l = 0; l < loci; ++l) {
        const double kernel[2][2] = {{1.0 - a[l], a[l]}, {b[l], 1.0 - b[l]}};
        const std::size_t next_size = 2 * size;
        std::vector<double> next(next_size * next_size);
        for (std::size_t to_bit = 0; to_bit < 2; ++to_bit) {
            for (std::size_t to = 0; to < size; ++to) {
                double* dst = next.data() + (to_bit * size + to) * next_size;
                const double* src = cur.data() + to * size;
                for (std::size_t from_bit = 0; from_bit < 2; ++from_bit) {
                    const double f = kernel[from_bit][to_bit];
                    double* d = dst + from_bit * size;
                    for (std::size_t from = 0; from < size; ++from) d[from] = f * src[from];
                }
            }
        }
        cur = std::move(next);
        size = next_size;
    }
    return TransitionMatrix::from_column_major(size, std::move(cur));
}

TransitionMatrix build_single_site_model(int loci, int max_loci) {
    check_loci(loci, max_loci);
    const std::size_t k = std::size_t{1} << loci;
    const double p = 1.0 / loci;
    std::vector<double> data(k * k, 0.0);
    for (std::size_t to = 0; to < k; ++to)
        for (int l = 0; l < loci; ++l) data[to * k + (to ^ (std::size_t{1} << l))] = p;
    return TransitionMatrix::from_column_major(k, std::move(data));
}

double stationary_residual(const TransitionMatrix& p, std::span<const double> pi) {
    double worst = 0.0;
    for (std::size_t i = 0; i < p.num_types(); ++i) {
        const auto col = p.column(i);
        double s = 0.0;
        for (std::size_t j = 0; j < col.size(); ++j) s += pi[j] * col[j];
        worst = std::max(worst, std::abs(s - pi[i]));
    }
    return worst;
}

namespace {

std::vector<double> solve_stationary_direct(const TransitionMatrix& p) {
    const auto k = static_cast<Eigen::Index>(p.num_types());
    // (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
    Eigen::MatrixXd a(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j) a(i, j) = p(j, i) - (i == j ? 1.0 : 0.0);
    a.row(k - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
    rhs(k - 1) = 1.0;
    Eigen::VectorXd x = a.fullPivLu().solve(rhs);
    return {x.data(), x.data() + k};
}

void left_multiply(const TransitionMatrix& p, const std::vector<double>& pi, std::vector<double>& out) {
    for (std::size_t i = 0; i < p.num_types(); ++i) {
        const auto col = p.column(i);
        double s = 0.0;
        for (std::size_t j = 0; j < col.size(); ++j) s += pi[j] * col[j];
        out[i] = s;
    }
}

void normalise(std::vector<double>& v) {
    double s = 0.0;
    for (double& x : v) {
        x = std::max(x, 0.0);
        s += x;
    }
    for (double& x : v) x /= s;
}

}  // namespace

StationaryDistribution stationary(const TransitionMatrix& p, const StationaryOptions& options) {
    const std::size_t k = p.num_types();
    std::vector<double> pi;
    if (k <= options.direct_solve_limit) {
        pi = solve_stationary_direct(p);
        for (double x : pi) {
            if (!std::isfinite(x)) throw NumericalError("stationary: direct solve failed (chain not irreducible?)");
        }
        normalise(pi);
    } else {
        pi.assign(k, 1.0 / static_cast<double>(k));
        std::vector<double> next(k);
        const double target = options.tolerance * 0.01;
        bool lazy = false;
        double best = std::numeric_limits<double>::infinity();
        std::int64_t since_improvement = 0;
        double residual = std::numeric_limits<double>::infinity();
        for (std::int64_t it = 0; it < options.max_iterations; ++it) {
            left_multiply(p, pi, next);
            residual = 0.0;
            for (std::size_t i = 0; i < k; ++i) residual = std::max(residual, std::abs(next[i] - pi[i]));
            if (residual <= target) break;
            if (lazy) {
                for (std::size_t i = 0; i < k; ++i) pi[i] = 0.5 * (pi[i] + next[i]);
            } else {
                pi.swap(next);
                if (residual < 0.999 * best) {
                    best = residual;
                    since_improvement = 0;
                } else if (++since_improvement > 100) {
                    lazy = true;
                }
            }
            normalise(pi);
        }
        normalise(pi);
    }
    const double residual = stationary_residual(p, pi);
    if (!(residual <= options.tolerance)) {
        std::ostringstream msg;
        msg << "stationary distribution did not converge: residual " << residual << " > " << options.tolerance;
        throw NumericalError(msg.str());
    }
    return StationaryDistribution{std::move(pi)};
}

Configuration sample_population(const StationaryDistribution& dist, int size, RandomStream& stream) {
    if (size < 1) throw ValidationError("population size must be at least 1");
    const std::size_t k = dist.num_types();
    std::size_t last = k;
    for (std::size_t i = 0; i < k; ++i) {
        if (!(dist.probs[i] >= 0.0) || !std::isfinite(dist.probs[i])) {
            throw ValidationError("population sampling needs finite non-negative probabilities");
        }
        if (dist.probs[i] > 0.0) last = i;
    }
    if (last == k) throw ValidationError("population sampling needs a positive probability");

    // Conditional binomials: type i gets Bin(remaining, p_i / mass of types i..K-1).
    std::vector<double> tail(k + 1, 0.0);
    for (std::size_t i = k; i-- > 0;) tail[i] = tail[i + 1] + dist.probs[i];
    std::vector<int> counts(k, 0);
    int remaining = size;
    for (std::size_t i = 0; i < last && remaining > 0; ++i) {
        if (dist.probs[i] <= 0.0) continue;
        const double frac = std::min(1.0, dist.probs[i] / tail[i]);
        std::binomial_distribution<int> binom(remaining, frac);
        counts[i] = binom(stream);
        remaining -= counts[i];
    }
    counts[last] += remaining;
    return Configuration(std::move(counts));
}

}  // namespace tmachine
