#include "tmachine/estimator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "tmachine/errors.hpp"
#include "tmachine/optimize.hpp"

namespace tmachine {

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

namespace {

// Calls body(i) for every i in [0, count) from a pool of workers pulling
// indices off a shared counter. The first exception is rethrown.
template <typename Body>
void parallel_for(std::int64_t count, int workers, Body&& body) {
    workers = static_cast<int>(std::min<std::int64_t>(resolve_workers(workers), std::max<std::int64_t>(count, 1)));
    std::atomic<std::int64_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::int64_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= count || failed.load(std::memory_order_relaxed)) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                failed = true;
                return;
            }
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace

namespace {

// Log-weight and timing of one simulation; all the summary needs.
struct WeightSample {
    double log_weight = 0.0;
    double elapsed_seconds = 0.0;
    bool degenerate() const { return log_weight == -std::numeric_limits<double>::infinity(); }
};

template <typename Sample>
SurfacePoint summarize_samples(std::span<const Sample> samples, double mu) {
    SurfacePoint point;
    point.mu = mu;
    point.num_sims = static_cast<std::int64_t>(samples.size());
    if (samples.empty()) throw ValidationError("cannot summarize zero simulations");

    double max_log = -std::numeric_limits<double>::infinity();
    double seconds = 0.0;
    for (const auto& r : samples) {
        if (r.degenerate()) ++point.degenerate_count;
        else max_log = std::max(max_log, r.log_weight);
        seconds += r.elapsed_seconds;
    }
    point.mean_sim_seconds = seconds / static_cast<double>(samples.size());
    if (point.degenerate_count == point.num_sims) {
        throw NumericalError("all " + std::to_string(point.num_sims) + " simulation weights are degenerate");
    }

    const double m = static_cast<double>(samples.size());
    double sum = 0.0;
    for (const auto& r : samples) sum += r.degenerate() ? 0.0 : std::exp(r.log_weight - max_log);
    const double mean = sum / m;
    point.log_likelihood = max_log + std::log(sum) - std::log(m);

    if (samples.size() > 1) {
        double ss = 0.0;
        for (const auto& r : samples) {
            const double u = r.degenerate() ? 0.0 : std::exp(r.log_weight - max_log);
            ss += (u - mean) * (u - mean);
        }
        const double sd = std::sqrt(ss / (m - 1.0));
        point.std_error = sd / (mean * std::sqrt(m));
    }
    return point;
}

}  // namespace

SurfacePoint summarize(std::span<const SimulationRecord> records, double mu) {
    return summarize_samples(records, mu);
}

Estimate estimate(const Configuration& initial, const MutationModel& model, const StationaryDistribution& dist,
                  const EngineOptions& engine, const RunOptions& run, bool keep_records) {
    if (run.num_sims < 1) throw ValidationError("number of simulations must be at least 1");
    engine.validate();
    auto run_one = [&](std::int64_t m) {
        RandomStream stream = derive_stream({run.master_seed, run.first_stream + static_cast<std::uint64_t>(m)});
        return simulate_once(initial, model, dist, engine, stream);
    };
    Estimate out;
    if (keep_records) {
        std::vector<SimulationRecord> records(static_cast<std::size_t>(run.num_sims));
        parallel_for(run.num_sims, run.workers,
                     [&](std::int64_t m) { records[static_cast<std::size_t>(m)] = run_one(m); });
        out.point = summarize(records, model.mu);
        out.records = std::move(records);
        return out;
    }
    // Without records only the weights are kept, so large runs stay small.
    std::vector<WeightSample> samples(static_cast<std::size_t>(run.num_sims));
    parallel_for(run.num_sims, run.workers, [&](std::int64_t m) {
        const SimulationRecord r = run_one(m);
        samples[static_cast<std::size_t>(m)] = {r.log_weight, r.elapsed_seconds};
    });
    out.point = summarize_samples(std::span<const WeightSample>(samples), model.mu);
    return out;
}

std::vector<double> linear_grid(double lo, double hi, int count) {
    if (count < 1) throw ValidationError("grid needs at least one point");
    if (count == 1) return {lo};
    if (!(lo < hi)) throw ValidationError("grid needs lo < hi");
    std::vector<double> grid(static_cast<std::size_t>(count));
    for (int g = 0; g < count; ++g) grid[static_cast<std::size_t>(g)] = lo + (hi - lo) * g / (count - 1);
    grid.back() = hi;
    return grid;
}

std::vector<SurfacePoint> surface(const Configuration& initial, std::shared_ptr<const TransitionMatrix> matrix,
                                  const StationaryDistribution& dist, const EngineOptions& engine,
                                  std::span<const double> mu_grid, const RunOptions& run, bool crn) {
    if (mu_grid.empty()) throw ValidationError("mu grid is empty");
    for (std::size_t g = 0; g < mu_grid.size(); ++g) {
        if (!(mu_grid[g] > 0.0)) throw ValidationError("mu grid values must be positive");
        if (g > 0 && !(mu_grid[g] > mu_grid[g - 1])) throw ValidationError("mu grid must be strictly increasing");
    }
    std::vector<SurfacePoint> out;
    out.reserve(mu_grid.size());
    for (std::size_t g = 0; g < mu_grid.size(); ++g) {
        RunOptions point_run = run;
        if (!crn) point_run.first_stream = run.first_stream + g * static_cast<std::uint64_t>(run.num_sims);
        const MutationModel model(matrix, mu_grid[g]);
        out.push_back(estimate(initial, model, dist, engine, point_run, false).point);
    }
    return out;
}

MleResult mle(const Configuration& initial, std::shared_ptr<const TransitionMatrix> matrix,
              const StationaryDistribution& dist, const EngineOptions& engine, const RunOptions& run,
              const MleOptions& options) {
    if (!(options.lo > 0.0) || !(options.lo < options.hi)) throw ValidationError("mle bounds need 0 < lo < hi");
    if (!(options.tol > 0.0)) throw ValidationError("mle tolerance must be positive");
    auto objective = [&](double mu) {
        try {
            return estimate(initial, MutationModel(matrix, mu), dist, engine, run, false).point.log_likelihood;
        } catch (const NumericalError&) {
            return -std::numeric_limits<double>::infinity();
        }
    };
    const ScalarOptimum best =
        maximize_bounded(objective, options.lo, options.hi, options.tol, options.max_evaluations);
    return {best.x, best.value, best.evaluations, options.lo, options.hi};
}

std::vector<TrajectoryRow> trajectory_summary(std::span<const SimulationRecord> records, int initial_total) {
    if (records.empty()) throw ValidationError("trajectory summary needs at least one record");
    std::int64_t max_sen = 0;
    for (const auto& r : records) max_sen = std::max(max_sen, r.event_count);

    // Sizes are integers in [1, initial_total]; track a histogram and walk it
    // for the order statistics.
    std::vector<std::int64_t> histogram(static_cast<std::size_t>(initial_total) + 1, 0);
    std::vector<int> size(records.size(), initial_total);
    std::vector<std::size_t> cursor(records.size(), 0);
    histogram[static_cast<std::size_t>(initial_total)] = static_cast<std::int64_t>(records.size());
    const auto n = static_cast<std::int64_t>(records.size());

    auto order_statistic = [&](std::int64_t k) {  // 0-based
        std::int64_t seen = 0;
        for (std::size_t s = 0; s < histogram.size(); ++s) {
            seen += histogram[s];
            if (seen > k) return static_cast<int>(s);
        }
        return initial_total;
    };

    std::vector<TrajectoryRow> rows;
    rows.reserve(static_cast<std::size_t>(max_sen) + 1);
    for (std::int64_t sen = 0; sen <= max_sen; ++sen) {
        for (std::size_t r = 0; r < records.size(); ++r) {
            const auto& sens = records[r].coalescent_sens;
            while (cursor[r] < sens.size() && sens[cursor[r]] <= sen) {
                --histogram[static_cast<std::size_t>(size[r])];
                --size[r];
                if (size[r] < 0) throw ValidationError("record has more coalescences than lineages");
                ++histogram[static_cast<std::size_t>(size[r])];
                ++cursor[r];
            }
        }
        TrajectoryRow row;
        row.sen = sen;
        row.min_size = order_statistic(0);
        row.max_size = order_statistic(n - 1);
        const int lo = order_statistic((n - 1) / 2);
        const int hi = order_statistic(n / 2);
        row.median_size = 0.5 * (static_cast<double>(lo) + static_cast<double>(hi));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace tmachine
