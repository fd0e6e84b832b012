#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "tmachine/engine.hpp"
#include "tmachine/model.hpp"

namespace tmachine {

struct SurfacePoint {
    double mu = 0.0;
    double log_likelihood = 0.0;
    // Delta-method standard error of log_likelihood: s / (mean * sqrt(M)) on
    // max-shifted weights.
    double std_error = 0.0;
    std::int64_t num_sims = 0;
    double mean_sim_seconds = 0.0;
    std::int64_t degenerate_count = 0;
};

struct RunOptions {
    std::int64_t num_sims = 1000;
    std::uint64_t master_seed = 0;
    // <= 0 means std::thread::hardware_concurrency().
    int workers = 0;
    // Simulation m uses stream first_stream + m.
    std::uint64_t first_stream = 0;
};

int resolve_workers(int requested);

struct Estimate {
    SurfacePoint point;
    std::vector<SimulationRecord> records;
};

// Deterministic reduction of records in index order. Throws NumericalError
// when every weight is degenerate.
SurfacePoint summarize(std::span<const SimulationRecord> records, double mu);

// Runs num_sims independent simulations on streams first_stream.. in a
// worker pool. Results do not depend on the worker count.
Estimate estimate(const Configuration& initial, const MutationModel& model, const StationaryDistribution& dist,
                  const EngineOptions& engine, const RunOptions& run, bool keep_records = true);

// One estimate per mu. With common random numbers every point reuses the
// same stream indices; without, point g uses streams g*M .. (g+1)*M - 1.
std::vector<SurfacePoint> surface(const Configuration& initial, std::shared_ptr<const TransitionMatrix> matrix,
                                  const StationaryDistribution& dist, const EngineOptions& engine,
                                  std::span<const double> mu_grid, const RunOptions& run, bool crn = true);

// count points from lo to hi inclusive.
std::vector<double> linear_grid(double lo, double hi, int count);

struct MleOptions {
    double lo = 0.1;
    double hi = 30.1;
    double tol = 1e-2;
    int max_evaluations = 200;
};

struct MleResult {
    double mu_hat = 0.0;
    double log_likelihood_at_hat = 0.0;
    int evaluations = 0;
    double lo = 0.0;
    double hi = 0.0;
};

// Maximises the estimated log-likelihood over mu. Every evaluation reuses
// the same streams, so the objective is a deterministic function of mu.
MleResult mle(const Configuration& initial, std::shared_ptr<const TransitionMatrix> matrix,
              const StationaryDistribution& dist, const EngineOptions& engine, const RunOptions& run,
              const MleOptions& options = {});

struct TrajectoryRow {
    std::int64_t sen = 0;
    double median_size = 0.0;
    int min_size = 0;
    int max_size = 0;
};

// Population size against SEN across records; a record that ended early
// keeps its final size.
std::vector<TrajectoryRow> trajectory_summary(std::span<const SimulationRecord> records, int initial_total);

}  // namespace tmachine
