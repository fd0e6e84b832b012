#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "tmachine/model.hpp"
#include "tmachine/rng.hpp"

namespace tmachine {

enum class MoveKind { Coalescence, Mutation };

// One backward event. For a mutation, `ancestor` is the type the offspring
// lineage is traced back to; for a coalescence it equals `offspring`.
struct Move {
    MoveKind kind = MoveKind::Coalescence;
    std::size_t offspring = 0;
    std::size_t ancestor = 0;

    static Move coalescence(std::size_t type) { return {MoveKind::Coalescence, type, type}; }
    static Move mutation(std::size_t offspring, std::size_t ancestor) {
        return {MoveKind::Mutation, offspring, ancestor};
    }
    bool operator==(const Move&) const = default;
};

struct WeightedMove {
    Move move;
    double nu = 0.0;
};

enum class ProposalKind { TwoStage, Joint };
enum class FinalCoalescence { Natural, Forced };
enum class Correction { StationaryProduct, None };

std::string_view to_string(ProposalKind kind);
std::string_view to_string(FinalCoalescence mode);
std::string_view to_string(Correction correction);
ProposalKind parse_proposal(std::string_view text);
FinalCoalescence parse_final_coalescence(std::string_view text);
Correction parse_correction(std::string_view text);

struct EngineOptions {
    // Stop once this many lineages remain; 1 runs to the MRCA.
    int stop_size = 1;
    ProposalKind proposal = ProposalKind::TwoStage;
    FinalCoalescence final_coalescence = FinalCoalescence::Natural;
    Correction correction = Correction::StationaryProduct;
    std::int64_t max_events = 10'000'000;

    void validate() const;
};

// A drawn move together with everything the weight update needs. `q` is the
// exact probability with which `move` was drawn. `log_weight` equals
// step_log_weight(nu, D, q) but is evaluated in a form whose factors cancel
// exactly when they should (single-type models give exactly 0).
struct Proposal {
    Move move;
    double q = 0.0;
    double nu = 0.0;
    double log_weight = 0.0;
};

struct SimulationRecord {
    double log_weight = 0.0;
    double log_correction = 0.0;
    std::vector<std::int64_t> coalescent_sens;
    Configuration final_config;
    std::int64_t event_count = 0;
    double elapsed_seconds = 0.0;

    bool degenerate() const { return log_weight == -std::numeric_limits<double>::infinity(); }
};

// D(n) = n (n - 1 + mu), the normaliser of the backward recursion.
double total_rate(int total, double mu);
double total_rate(const Configuration& config, double mu);

// nu of a single move; 0 when the move is impossible in `config`.
double move_coefficient(const Configuration& config, const MutationModel& model, const Move& move);

// All moves with nu > 0, ordered by offspring type, coalescence first, then
// mutations by ancestor type.
std::vector<WeightedMove> move_coefficients(const Configuration& config, const MutationModel& model);

// Reusable buffers for propose_move; one per simulation.
class ProposalWorkspace {
public:
    std::vector<double> weights;
    std::vector<Move> moves;
};

Proposal propose_move(const Configuration& config, const MutationModel& model, const EngineOptions& options,
                      RandomStream& stream);
Proposal propose_move(const Configuration& config, const MutationModel& model, const EngineOptions& options,
                      RandomStream& stream, ProposalWorkspace& workspace);

// Exact probability that propose_move returns `move` (ignoring the forced
// final coalescence). Used to cross-check the sampler.
double proposal_probability(const Configuration& config, const MutationModel& model, ProposalKind kind,
                            const Move& move);

void apply_move_in_place(Configuration& config, const Move& move);
Configuration apply_move(Configuration config, const Move& move);

// log(nu) - log(D) - log(q), evaluated as log(nu / (D q)) so that nu = q D gives exactly 0.
double step_log_weight(double nu, double rate, double q);

// Full mode (total 1): log pi_t. Early stop: sum_i n_i log pi_i, or 0 when
// the correction is disabled. -inf when an occupied type has pi = 0.
double terminal_log_factor(const Configuration& final_config, const StationaryDistribution& dist,
                           const EngineOptions& options);

SimulationRecord simulate_once(const Configuration& initial, const MutationModel& model,
                               const StationaryDistribution& dist, const EngineOptions& options,
                               RandomStream& stream);

}  // namespace tmachine
