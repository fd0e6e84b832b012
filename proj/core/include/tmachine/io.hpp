#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tmachine/engine.hpp"
#include "tmachine/estimator.hpp"
#include "tmachine/model.hpp"

namespace tmachine {

// Model spec file:
//   {"kind":"dense","matrix":[[...],...]}
//   {"kind":"flip","loci":L,"a":[...],"b":[...]}
//   {"kind":"single-site","loci":L}
struct ModelSpec {
    enum class Kind { Dense, Flip, SingleSite };
    Kind kind = Kind::Dense;
    std::vector<std::vector<double>> matrix;
    int loci = 0;
    std::vector<double> a;
    std::vector<double> b;
};

ModelSpec parse_model_spec(const std::string& json_text);
std::string model_spec_to_json(const ModelSpec& spec);
ModelSpec read_model_spec(const std::string& path);

TransitionMatrix build_matrix(const ModelSpec& spec, int max_loci = kDefaultMaxLoci);

// Population file: {"num_types":K,"counts":[...]}
Configuration parse_population(const std::string& json_text);
std::string population_to_json(const Configuration& config);
Configuration read_population(const std::string& path);

// One JSON object per line; -inf weights are written as null.
void write_records_jsonl(std::ostream& out, std::span<const SimulationRecord> records);
// Accepts JSON lines as written above, or a JSON object with a "records" array.
std::vector<SimulationRecord> read_records(std::istream& in);

// CSV outputs. Column order is fixed.
inline constexpr const char* kSurfaceCsvHeader = "mu,loglik,se,num_sims,mean_sim_seconds,degenerate_count";
inline constexpr const char* kTrajectoryCsvHeader = "sen,median,min,max";
inline constexpr const char* kStationaryCsvHeader = "type_index,prob";

void write_surface_csv(std::ostream& out, std::span<const SurfacePoint> points);
void write_trajectory_csv(std::ostream& out, std::span<const TrajectoryRow> rows);
void write_stationary_csv(std::ostream& out, const StationaryDistribution& dist);

// Shortest round-trip decimal form.
std::string format_double(double value);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace tmachine
