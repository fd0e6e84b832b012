#include "tmachine/engine.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "tmachine/errors.hpp"

namespace tmachine {

std::string_view to_string(ProposalKind kind) {
    return kind == ProposalKind::TwoStage ? "two-stage" : "joint";
}

std::string_view to_string(FinalCoalescence mode) {
    return mode == FinalCoalescence::Natural ? "natural" : "forced";
}

std::string_view to_string(Correction correction) {
    return correction == Correction::StationaryProduct ? "stationary-product" : "none";
}

ProposalKind parse_proposal(std::string_view text) {
    if (text == "two-stage") return ProposalKind::TwoStage;
    if (text == "joint") return ProposalKind::Joint;
    throw ValidationError("unknown proposal '" + std::string(text) + "' (expected two-stage or joint)");
}

FinalCoalescence parse_final_coalescence(std::string_view text) {
    if (text == "natural") return FinalCoalescence::Natural;
    if (text == "forced") return FinalCoalescence::Forced;
    throw ValidationError("unknown final-coalescence mode '" + std::string(text) + "' (expected natural or forced)");
}

Correction parse_correction(std::string_view text) {
    if (text == "stationary-product") return Correction::StationaryProduct;
    if (text == "none") return Correction::None;
    throw ValidationError("unknown correction '" + std::string(text) + "' (expected stationary-product or none)");
}

void EngineOptions::validate() const {
    if (stop_size < 1) throw ValidationError("stop size must be at least 1");
    if (max_events < 1) throw ValidationError("max events must be at least 1");
}

double total_rate(int total, double mu) {
    if (total < 2) throw ValidationError("total rate is undefined for fewer than 2 lineages");
    if (!(mu > 0.0)) throw ValidationError("mutation rate must be positive");
    const auto n = static_cast<std::int64_t>(total);
    // Same association as the summed joint coefficients for a single type.
    return static_cast<double>(n * (n - 1)) + mu * static_cast<double>(n);
}

double total_rate(const Configuration& config, double mu) { return total_rate(config.total(), mu); }

namespace {

inline double coalescence_nu(int count) {
    const auto n = static_cast<std::int64_t>(count);
    return static_cast<double>(n * (n - 1));
}

inline double mutation_nu(double mu, int count, double p) { return mu * static_cast<double>(count) * p; }

// Types whose stage-2 normaliser (n_i - 1) + mu * colsum_i is positive.
inline bool has_moves(const Configuration& config, const TransitionMatrix& p, std::size_t type) {
    return config[type] >= 2 || (config[type] >= 1 && p.column_sum(type) > 0.0);
}

int eligible_lineages(const Configuration& config, const TransitionMatrix& p) {
    int eligible = 0;
    for (std::size_t i = 0; i < config.num_types(); ++i)
        if (has_moves(config, p, i)) eligible += config[i];
    return eligible;
}

void check_pair(const Configuration& config, const MutationModel& model) {
    if (config.num_types() != model.num_types()) {
        throw ValidationError("configuration has " + std::to_string(config.num_types()) +
                              " types but the model has " + std::to_string(model.num_types()));
    }
    if (config.total() < 2) throw ValidationError("backward moves need at least 2 lineages");
}

Proposal propose_two_stage(const Configuration& config, const MutationModel& model, RandomStream& stream,
                           ProposalWorkspace& ws) {
    const TransitionMatrix& p = model.matrix();
    const std::size_t k = config.num_types();
    const int n = config.total();
    const int eligible = eligible_lineages(config, p);
    if (eligible == 0) throw NumericalError("no backward move has positive probability");

    ws.weights.resize(k);
    for (std::size_t i = 0; i < k; ++i) ws.weights[i] = has_moves(config, p, i) ? config[i] : 0.0;
    const std::size_t offspring = categorical(stream, ws.weights, static_cast<double>(eligible));

    const auto column = p.column(offspring);
    ws.weights.resize(k + 1);
    ws.weights[0] = static_cast<double>(config[offspring] - 1);
    double normaliser = ws.weights[0];
    for (std::size_t j = 0; j < k; ++j) {
        ws.weights[j + 1] = model.mu * column[j];
        normaliser += ws.weights[j + 1];
    }
    const std::size_t pick = categorical(stream, ws.weights, normaliser);

    Proposal out;
    out.move = pick == 0 ? Move::coalescence(offspring) : Move::mutation(offspring, pick - 1);
    out.q = (static_cast<double>(config[offspring]) / eligible) * (ws.weights[pick] / normaliser);
    out.nu = move_coefficient(config, model, out.move);
    // nu / (D q) = (eligible / n) * normaliser / (n - 1 + mu)
    out.log_weight = std::log(normaliser) - std::log(static_cast<double>(n - 1) + model.mu);
    if (eligible != n) out.log_weight += std::log(static_cast<double>(eligible) / n);
    return out;
}

Proposal propose_joint(const Configuration& config, const MutationModel& model, RandomStream& stream,
                       ProposalWorkspace& ws) {
    const TransitionMatrix& p = model.matrix();
    const std::size_t k = config.num_types();
    ws.weights.clear();
    ws.moves.clear();
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const int ni = config[i];
        if (ni == 0) continue;
        if (ni >= 2) {
            ws.moves.push_back(Move::coalescence(i));
            ws.weights.push_back(coalescence_nu(ni));
            sum += ws.weights.back();
        }
        const auto column = p.column(i);
        for (std::size_t j = 0; j < k; ++j) {
            if (column[j] <= 0.0) continue;
            ws.moves.push_back(Move::mutation(i, j));
            ws.weights.push_back(mutation_nu(model.mu, ni, column[j]));
            sum += ws.weights.back();
        }
    }
    if (ws.moves.empty()) throw NumericalError("no backward move has positive probability");
    const std::size_t pick = categorical(stream, ws.weights, sum);
    Proposal out;
    out.move = ws.moves[pick];
    out.nu = ws.weights[pick];
    out.q = out.nu / sum;
    out.log_weight = std::log(sum) - std::log(total_rate(config.total(), model.mu));
    return out;
}

}  // namespace

double move_coefficient(const Configuration& config, const MutationModel& model, const Move& move) {
    const int ni = config[move.offspring];
    if (move.kind == MoveKind::Coalescence) return ni >= 2 ? coalescence_nu(ni) : 0.0;
    if (ni < 1) return 0.0;
    return mutation_nu(model.mu, ni, model.matrix()(move.ancestor, move.offspring));
}

std::vector<WeightedMove> move_coefficients(const Configuration& config, const MutationModel& model) {
    check_pair(config, model);
    const TransitionMatrix& p = model.matrix();
    std::vector<WeightedMove> out;
    for (std::size_t i = 0; i < config.num_types(); ++i) {
        const int ni = config[i];
        if (ni == 0) continue;
        if (ni >= 2) out.push_back({Move::coalescence(i), coalescence_nu(ni)});
        const auto column = p.column(i);
        for (std::size_t j = 0; j < column.size(); ++j)
            if (column[j] > 0.0) out.push_back({Move::mutation(i, j), mutation_nu(model.mu, ni, column[j])});
    }
    if (out.empty()) throw NumericalError("configuration admits no backward move");
    return out;
}

Proposal propose_move(const Configuration& config, const MutationModel& model, const EngineOptions& options,
                      RandomStream& stream) {
    ProposalWorkspace ws;
    return propose_move(config, model, options, stream, ws);
}

Proposal propose_move(const Configuration& config, const MutationModel& model, const EngineOptions& options,
                      RandomStream& stream, ProposalWorkspace& workspace) {
    check_pair(config, model);
    if (options.final_coalescence == FinalCoalescence::Forced && options.stop_size == 1 && config.total() == 2) {
        for (std::size_t i = 0; i < config.num_types(); ++i) {
            if (config[i] == 2) {
                Proposal out{Move::coalescence(i), 1.0, 2.0, 0.0};
                out.log_weight = step_log_weight(out.nu, total_rate(2, model.mu), out.q);
                return out;
            }
        }
    }
    return options.proposal == ProposalKind::TwoStage ? propose_two_stage(config, model, stream, workspace)
                                                      : propose_joint(config, model, stream, workspace);
}

double proposal_probability(const Configuration& config, const MutationModel& model, ProposalKind kind,
                            const Move& move) {
    check_pair(config, model);
    const double nu = move_coefficient(config, model, move);
    if (nu <= 0.0) return 0.0;
    const TransitionMatrix& p = model.matrix();
    if (kind == ProposalKind::Joint) {
        double sum = 0.0;
        for (const auto& wm : move_coefficients(config, model)) sum += wm.nu;
        return nu / sum;
    }
    const std::size_t i = move.offspring;
    const double normaliser = static_cast<double>(config[i] - 1) + model.mu * p.column_sum(i);
    const double stage2 = move.kind == MoveKind::Coalescence ? static_cast<double>(config[i] - 1)
                                                            : model.mu * p(move.ancestor, i);
    return static_cast<double>(config[i]) / eligible_lineages(config, p) * stage2 / normaliser;
}

void apply_move_in_place(Configuration& config, const Move& move) {
    if (move.offspring >= config.num_types() || move.ancestor >= config.num_types()) {
        throw Error("internal: move refers to a type outside the configuration");
    }
    if (move.kind == MoveKind::Coalescence) {
        if (config[move.offspring] < 2) throw Error("internal: coalescence needs two lineages of the type");
        config.decrement(move.offspring);
    } else {
        if (config[move.offspring] < 1) throw Error("internal: mutation needs a lineage of the offspring type");
        config.decrement(move.offspring);
        config.increment(move.ancestor);
    }
}

Configuration apply_move(Configuration config, const Move& move) {
    apply_move_in_place(config, move);
    return config;
}

double step_log_weight(double nu, double rate, double q) {
    if (!(nu > 0.0) || !(rate > 0.0) || !(q > 0.0)) {
        throw ValidationError("step weight needs positive nu, rate and proposal probability");
    }
    return std::log(nu / (rate * q));
}

double terminal_log_factor(const Configuration& final_config, const StationaryDistribution& dist,
                           const EngineOptions& options) {
    if (final_config.num_types() != dist.num_types()) {
        throw ValidationError("final configuration and stationary distribution disagree on the number of types");
    }
    const bool full = final_config.total() == 1;
    if (!full && options.correction == Correction::None) return 0.0;
    double out = 0.0;
    for (std::size_t i = 0; i < final_config.num_types(); ++i) {
        const int ni = final_config[i];
        if (ni == 0) continue;
        if (dist[i] <= 0.0) return -std::numeric_limits<double>::infinity();
        out += ni * std::log(dist[i]);
    }
    return out;
}

SimulationRecord simulate_once(const Configuration& initial, const MutationModel& model,
                               const StationaryDistribution& dist, const EngineOptions& options,
                               RandomStream& stream) {
    options.validate();
    check_pair(initial, model);
    if (dist.num_types() != model.num_types()) {
        throw ValidationError("stationary distribution size does not match the model");
    }
    if (options.stop_size > initial.total()) {
        throw ValidationError("stop size " + std::to_string(options.stop_size) + " exceeds the population total " +
                              std::to_string(initial.total()));
    }
    const auto start = std::chrono::steady_clock::now();

    SimulationRecord record;
    record.coalescent_sens.reserve(static_cast<std::size_t>(initial.total() - options.stop_size));
    Configuration config = initial;
    ProposalWorkspace ws;
    double log_weight = 0.0;
    std::int64_t events = 0;
    while (config.total() > options.stop_size) {
        if (events >= options.max_events) {
            throw NumericalError("simulation exceeded the cap of " + std::to_string(options.max_events) +
                                 " events (raise max-events)");
        }
        const Proposal proposal = propose_move(config, model, options, stream, ws);
        log_weight += proposal.log_weight;
        ++events;
        if (proposal.move.kind == MoveKind::Coalescence) record.coalescent_sens.push_back(events);
        apply_move_in_place(config, proposal.move);
    }

    const double terminal = terminal_log_factor(config, dist, options);
    record.log_correction = options.stop_size > 1 ? terminal : 0.0;
    record.log_weight = log_weight + terminal;
    record.final_config = std::move(config);
    record.event_count = events;
    record.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return record;
}

}  // namespace tmachine
