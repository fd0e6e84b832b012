#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tmachine/tmachine.hpp"

namespace tmachine::cli {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

struct Outputs {
    std::string output = "-";
    std::string records;
    bool include_records = false;
    std::string manifest;
    std::string stationary;
};

struct Context {
    std::ostream& out;
    std::ostream& err;
};

// Writes `text` to a file, or to ctx.out for "-".
void emit(const Context& ctx, const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        ctx.out << text;
        ctx.out.flush();
    } else {
        write_text_file(path, text);
    }
}

json make_manifest(const std::string& command, const json& inputs, double seconds) {
    json m;
    m["tool"] = "tmachine";
    m["version"] = kVersion;
    m["command"] = command;
    m["inputs"] = inputs;
    m["total_seconds"] = seconds;
    return m;
}

// Manifest for commands whose main output has a fixed non-JSON schema.
void emit_sidecar_manifest(const Context& ctx, const Outputs& outputs, const json& manifest) {
    std::string path = outputs.manifest;
    if (path.empty() && !outputs.output.empty() && outputs.output != "-") path = outputs.output + ".manifest.json";
    const std::string text = manifest.dump(2) + "\n";
    if (path.empty()) ctx.err << text;
    else write_text_file(path, text);
}

double parse_double(const std::string& text, const char* what) {
    double v = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(*begin))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(end[-1]))) --end;
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc() || res.ptr != end) throw ValidationError(std::string("cannot parse ") + what + " '" + text + "'");
    return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream ss(text);
    while (std::getline(ss, cur, sep)) parts.push_back(cur);
    if (!text.empty() && text.back() == sep) parts.emplace_back();
    return parts;
}

// Dense matrix from a JSON file (bare array or dense spec) or a CSV of rows.
std::vector<std::vector<double>> read_matrix_file(const std::string& path) {
    const std::string text = read_text_file(path);
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) throw ValidationError("matrix file " + path + " is empty");
    if (text[first] == '{') return parse_model_spec(text).matrix;
    if (text[first] == '[') {
        try {
            return json::parse(text).get<std::vector<std::vector<double>>>();
        } catch (const json::exception& e) {
            throw ValidationError("malformed matrix file " + path + ": " + e.what());
        }
    }
    std::vector<std::vector<double>> rows;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<double> row;
        for (const auto& cell : split(line, ',')) row.push_back(parse_double(cell, "matrix entry"));
        rows.push_back(std::move(row));
    }
    return rows;
}

ModelSpec spec_from_inputs(const json& inputs) { return parse_model_spec(inputs.at("model").dump()); }

std::shared_ptr<const TransitionMatrix> matrix_from_inputs(const json& inputs) {
    return std::make_shared<const TransitionMatrix>(
        build_matrix(spec_from_inputs(inputs), inputs.value("max_loci", kDefaultMaxLoci)));
}

Configuration population_from_inputs(const json& inputs) { return parse_population(inputs.at("population").dump()); }

EngineOptions engine_from_inputs(const json& inputs) {
    EngineOptions e;
    e.stop_size = inputs.at("stop_size").get<int>();
    e.proposal = parse_proposal(inputs.at("proposal").get<std::string>());
    e.final_coalescence = parse_final_coalescence(inputs.at("final_coalescence").get<std::string>());
    e.correction = parse_correction(inputs.at("correction").get<std::string>());
    e.max_events = inputs.at("max_events").get<std::int64_t>();
    e.validate();
    return e;
}

RunOptions run_from_inputs(const json& inputs) {
    RunOptions r;
    r.num_sims = inputs.at("num_sims").get<std::int64_t>();
    r.master_seed = inputs.at("seed").get<std::uint64_t>();
    r.workers = inputs.at("workers").get<int>();
    return r;
}

json point_to_json(const SurfacePoint& p) {
    json j;
    j["mu"] = p.mu;
    j["log_likelihood"] = p.log_likelihood;
    j["std_error"] = p.std_error;
    j["num_sims"] = p.num_sims;
    j["mean_sim_seconds"] = p.mean_sim_seconds;
    j["degenerate_count"] = p.degenerate_count;
    return j;
}

void check_population_fits(const Configuration& pop, const TransitionMatrix& p) {
    if (pop.num_types() != p.num_types()) {
        throw ValidationError("population has " + std::to_string(pop.num_types()) + " types but the model has " +
                              std::to_string(p.num_types()));
    }
}

// ---------------------------------------------------------------------------
// Executors: pure functions of the normalised inputs, shared by the
// subcommands and by `replay`.

void exec_model(const Context& ctx, const json& inputs, const Outputs& outputs) {
    const auto start = Clock::now();
    const ModelSpec spec = spec_from_inputs(inputs);
    const TransitionMatrix p = build_matrix(spec, inputs.value("max_loci", kDefaultMaxLoci));
    emit(ctx, outputs.output, model_spec_to_json(spec) + "\n");
    if (!outputs.stationary.empty()) {
        std::ostringstream csv;
        write_stationary_csv(csv, stationary(p));
        write_text_file(outputs.stationary, csv.str());
    }
    emit_sidecar_manifest(ctx, outputs, make_manifest("model", inputs, std::chrono::duration<double>(Clock::now() - start).count()));
}

void exec_sample(const Context& ctx, const json& inputs, const Outputs& outputs) {
    const auto start = Clock::now();
    const auto p = matrix_from_inputs(inputs);
    const StationaryDistribution dist = stationary(*p);
    RandomStream stream = derive_stream({inputs.at("seed").get<std::uint64_t>(), 0});
    const Configuration pop = sample_population(dist, inputs.at("size").get<int>(), stream);
    emit(ctx, outputs.output, population_to_json(pop) + "\n");
    emit_sidecar_manifest(ctx, outputs, make_manifest("sample", inputs, std::chrono::duration<double>(Clock::now() - start).count()));
}

void exec_likelihood(const Context& ctx, const json& inputs, const Outputs& outputs) {
    const auto start = Clock::now();
    const auto p = matrix_from_inputs(inputs);
    const Configuration pop = population_from_inputs(inputs);
    check_population_fits(pop, *p);
    const StationaryDistribution dist = stationary(*p);
    const MutationModel model(p, inputs.at("mu").get<double>());
    const bool want_records = outputs.include_records || !outputs.records.empty();
    const Estimate est = estimate(pop, model, dist, engine_from_inputs(inputs), run_from_inputs(inputs), true);

    json result = point_to_json(est.point);
    double events = 0.0;
    for (const auto& r : est.records) events += static_cast<double>(r.event_count);
    result["mean_event_count"] = events / static_cast<double>(est.records.size());
    if (want_records) {
        std::ostringstream lines;
        write_records_jsonl(lines, est.records);
        if (!outputs.records.empty()) write_text_file(outputs.records, lines.str());
        if (outputs.include_records) {
            json rows = json::array();
            std::istringstream in(lines.str());
            std::string line;
            while (std::getline(in, line)) rows.push_back(json::parse(line));
            result["records"] = std::move(rows);
        }
    }
    result["manifest"] = make_manifest("likelihood", inputs, std::chrono::duration<double>(Clock::now() - start).count());
    emit(ctx, outputs.output, result.dump(2) + "\n");
}

void exec_surface(const Context& ctx, const json& inputs, const Outputs& outputs) {
    const auto start = Clock::now();
    const auto p = matrix_from_inputs(inputs);
    const Configuration pop = population_from_inputs(inputs);
    check_population_fits(pop, *p);
    const StationaryDistribution dist = stationary(*p);
    const auto& g = inputs.at("mu_grid");
    const auto grid = linear_grid(g.at("lo").get<double>(), g.at("hi").get<double>(), g.at("count").get<int>());
    const auto points =
        surface(pop, p, dist, engine_from_inputs(inputs), grid, run_from_inputs(inputs), inputs.at("crn").get<bool>());
    std::ostringstream csv;
    write_surface_csv(csv, points);
    emit(ctx, outputs.output, csv.str());
    emit_sidecar_manifest(ctx, outputs, make_manifest("surface", inputs, std::chrono::duration<double>(Clock::now() - start).count()));
}

void exec_mle(const Context& ctx, const json& inputs, const Outputs& outputs) {
    const auto start = Clock::now();
    const auto p = matrix_from_inputs(inputs);
    const Configuration pop = population_from_inputs(inputs);
    check_population_fits(pop, *p);
    const StationaryDistribution dist = stationary(*p);
    MleOptions opts;
    opts.lo = inputs.at("bounds").at(0).get<double>();
    opts.hi = inputs.at("bounds").at(1).get<double>();
    opts.tol = inputs.at("tol").get<double>();
    const MleResult res = mle(pop, p, dist, engine_from_inputs(inputs), run_from_inputs(inputs), opts);
    json result;
    result["mu_hat"] = res.mu_hat;
    result["log_likelihood_at_hat"] = res.log_likelihood_at_hat;
    result["evaluations"] = res.evaluations;
    result["bounds"] = {res.lo, res.hi};
    result["manifest"] = make_manifest("mle", inputs, std::chrono::duration<double>(Clock::now() - start).count());
    emit(ctx, outputs.output, result.dump(2) + "\n");
}

void exec_traj(const Context& ctx, const json& inputs, const Outputs& outputs) {
    const auto start = Clock::now();
    const std::string path = inputs.at("records_file").get<std::string>();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path);
    const auto records = read_records(in);
    if (records.empty()) throw ValidationError("no records in " + path);
    // initial total = final total + number of coalescences, for every record.
    const int initial = records.front().final_config.total() + static_cast<int>(records.front().coalescent_sens.size());
    for (const auto& r : records) {
        if (r.final_config.total() + static_cast<int>(r.coalescent_sens.size()) != initial) {
            throw ValidationError("records in " + path + " do not share one initial population size");
        }
    }
    std::ostringstream csv;
    write_trajectory_csv(csv, trajectory_summary(records, initial));
    emit(ctx, outputs.output, csv.str());
    emit_sidecar_manifest(ctx, outputs, make_manifest("traj", inputs, std::chrono::duration<double>(Clock::now() - start).count()));
}

void exec_exact(const Context& ctx, const json& inputs, const Outputs& outputs) {
    const auto start = Clock::now();
    const auto p = matrix_from_inputs(inputs);
    const Configuration pop = population_from_inputs(inputs);
    check_population_fits(pop, *p);
    const StationaryDistribution dist = stationary(*p);
    const MutationModel model(p, inputs.at("mu").get<double>());
    ExactOptions opts;
    opts.stop_size = inputs.at("stop_size").get<int>();
    opts.correction = parse_correction(inputs.at("correction").get<std::string>());
    opts.max_configurations = inputs.at("max_configurations").get<std::uint64_t>();
    json result;
    result["mu"] = model.mu;
    result["log_likelihood"] = exact_likelihood(pop, model, dist, opts);
    result["num_configurations"] = configuration_count(pop.total(), p->num_types());
    result["manifest"] = make_manifest("exact", inputs, std::chrono::duration<double>(Clock::now() - start).count());
    emit(ctx, outputs.output, result.dump(2) + "\n");
}

using Executor = std::function<void(const Context&, const json&, const Outputs&)>;

const std::map<std::string, Executor>& executors() {
    static const std::map<std::string, Executor> table{
        {"model", exec_model},   {"sample", exec_sample}, {"likelihood", exec_likelihood}, {"surface", exec_surface},
        {"mle", exec_mle},       {"traj", exec_traj},     {"exact", exec_exact},
    };
    return table;
}

// ---------------------------------------------------------------------------
// Flag parsing.

struct SimFlags {
    std::string model_path;
    std::string population_path;
    int max_loci = kDefaultMaxLoci;
    int stop_size = 1;
    std::int64_t num_sims = 1000;
    std::uint64_t seed = 0;
    int workers = 0;
    std::string proposal = "two-stage";
    std::string final_coalescence = "natural";
    std::string correction = "stationary-product";
    std::int64_t max_events = 10'000'000;
};

void add_model_population(CLI::App* cmd, SimFlags& f) {
    cmd->add_option("--model", f.model_path, "Model spec JSON file")->required();
    cmd->add_option("--population", f.population_path, "Population JSON file")->required();
    cmd->add_option("--max-loci", f.max_loci, "Refuse generated models with more loci than this");
}

void add_engine_flags(CLI::App* cmd, SimFlags& f) {
    cmd->add_option("--stop-size,-N", f.stop_size, "Stop when this many lineages remain (1 = MRCA)");
    cmd->add_option("--num-sims,-M", f.num_sims, "Simulations per estimate");
    cmd->add_option("--seed", f.seed, "Master seed")->required();
    cmd->add_option("--workers", f.workers, "Worker threads (default: machine parallelism)");
    cmd->add_option("--proposal", f.proposal, "two-stage | joint")
        ->check(CLI::IsMember({"two-stage", "joint"}));
    cmd->add_option("--final-coalescence", f.final_coalescence, "natural | forced")
        ->check(CLI::IsMember({"natural", "forced"}));
    cmd->add_option("--correction", f.correction, "stationary-product | none")
        ->check(CLI::IsMember({"stationary-product", "none"}));
    cmd->add_option("--max-events", f.max_events, "Per-simulation event cap");
}

json base_inputs(const SimFlags& f) {
    json inputs;
    inputs["model"] = json::parse(model_spec_to_json(read_model_spec(f.model_path)));
    inputs["max_loci"] = f.max_loci;
    inputs["population"] = json::parse(population_to_json(read_population(f.population_path)));
    return inputs;
}

json sim_inputs(const SimFlags& f) {
    json inputs = base_inputs(f);
    inputs["stop_size"] = f.stop_size;
    inputs["num_sims"] = f.num_sims;
    inputs["seed"] = f.seed;
    inputs["workers"] = resolve_workers(f.workers);
    inputs["proposal"] = f.proposal;
    inputs["final_coalescence"] = f.final_coalescence;
    inputs["correction"] = f.correction;
    inputs["max_events"] = f.max_events;
    return inputs;
}

std::pair<double, double> parse_range(const std::string& text, const char* what) {
    const auto parts = split(text, ':');
    if (parts.size() != 2) throw ValidationError(std::string(what) + " must look like lo:hi");
    return {parse_double(parts[0], what), parse_double(parts[1], what)};
}

void add_output(CLI::App* cmd, Outputs& o, bool sidecar) {
    cmd->add_option("-o,--output", o.output, "Output file ('-' for stdout)");
    if (sidecar) cmd->add_option("--manifest", o.manifest, "Run manifest path (default: <output>.manifest.json)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Context ctx{out, err};
    CLI::App app{"Coalescent likelihood estimation by backward importance sampling with early stopping"};
    app.set_version_flag("--version", std::string("tmachine ") + kVersion);
    app.require_subcommand(1);

    Outputs outputs;
    std::function<void()> action;

    // model
    auto* model_cmd = app.add_subcommand("model", "Write a model spec file (and optionally its stationary distribution)");
    std::string kind;
    int loci = 0;
    std::vector<double> a_vals, b_vals;
    std::string matrix_path;
    int model_max_loci = kDefaultMaxLoci;
    model_cmd->add_option("--kind", kind, "dense | flip | single-site")
        ->required()
        ->check(CLI::IsMember({"dense", "flip", "single-site"}));
    model_cmd->add_option("--loci,-L", loci, "Number of loci (flip, single-site)");
    model_cmd->add_option("--a", a_vals, "Per-locus 0->1 flip probabilities (one value is broadcast)")->delimiter(',');
    model_cmd->add_option("--b", b_vals, "Per-locus 1->0 flip probabilities (one value is broadcast)")->delimiter(',');
    model_cmd->add_option("--matrix", matrix_path, "Dense matrix file: CSV rows or JSON");
    model_cmd->add_option("--max-loci", model_max_loci, "Refuse generated models with more loci than this");
    model_cmd->add_option("--stationary", outputs.stationary, "Also write the stationary distribution CSV here");
    add_output(model_cmd, outputs, true);
    model_cmd->callback([&] {
        action = [&] {
            ModelSpec spec;
            if (kind == "dense") {
                if (matrix_path.empty()) throw ValidationError("--kind dense needs --matrix");
                spec.kind = ModelSpec::Kind::Dense;
                spec.matrix = read_matrix_file(matrix_path);
            } else {
                if (loci < 1) throw ValidationError("--kind " + kind + " needs --loci >= 1");
                spec.loci = loci;
                if (kind == "flip") {
                    spec.kind = ModelSpec::Kind::Flip;
                    auto broadcast = [&](std::vector<double> v, const char* name) {
                        if (v.size() == 1) v.assign(static_cast<std::size_t>(loci), v[0]);
                        if (v.size() != static_cast<std::size_t>(loci)) {
                            throw ValidationError(std::string("--") + name + " needs 1 or " + std::to_string(loci) + " values");
                        }
                        return v;
                    };
                    spec.a = broadcast(a_vals, "a");
                    spec.b = broadcast(b_vals, "b");
                } else {
                    spec.kind = ModelSpec::Kind::SingleSite;
                }
            }
            json inputs;
            inputs["model"] = json::parse(model_spec_to_json(spec));
            inputs["max_loci"] = model_max_loci;
            exec_model(ctx, inputs, outputs);
        };
    });

    // sample
    auto* sample_cmd = app.add_subcommand("sample", "Sample a population from the model's stationary distribution");
    std::string sample_model;
    int sample_size = 0;
    std::uint64_t sample_seed = 0;
    int sample_max_loci = kDefaultMaxLoci;
    sample_cmd->add_option("--model", sample_model, "Model spec JSON file")->required();
    sample_cmd->add_option("--size", sample_size, "Number of individuals")->required();
    sample_cmd->add_option("--seed", sample_seed, "Master seed")->required();
    sample_cmd->add_option("--max-loci", sample_max_loci, "Refuse generated models with more loci than this");
    add_output(sample_cmd, outputs, true);
    sample_cmd->callback([&] {
        action = [&] {
            json inputs;
            inputs["model"] = json::parse(model_spec_to_json(read_model_spec(sample_model)));
            inputs["max_loci"] = sample_max_loci;
            inputs["size"] = sample_size;
            inputs["seed"] = sample_seed;
            exec_sample(ctx, inputs, outputs);
        };
    });

    // likelihood
    SimFlags lik;
    double lik_mu = 1.0;
    auto* lik_cmd = app.add_subcommand("likelihood", "Estimate the log-likelihood at one mutation rate");
    add_model_population(lik_cmd, lik);
    add_engine_flags(lik_cmd, lik);
    lik_cmd->add_option("--mu", lik_mu, "Scaled mutation rate")->required();
    lik_cmd->add_option("--records", outputs.records, "Write per-simulation records (JSON lines) here");
    lik_cmd->add_flag("--include-records", outputs.include_records, "Embed per-simulation records in the results");
    add_output(lik_cmd, outputs, false);
    lik_cmd->callback([&] {
        action = [&] {
            json inputs = sim_inputs(lik);
            inputs["mu"] = lik_mu;
            exec_likelihood(ctx, inputs, outputs);
        };
    });

    // surface
    SimFlags surf;
    std::string grid_text = "0.1:30.1:60";
    bool crn = true;
    auto* surf_cmd = app.add_subcommand("surface", "Estimate the log-likelihood over a grid of mutation rates (CSV)");
    add_model_population(surf_cmd, surf);
    add_engine_flags(surf_cmd, surf);
    surf_cmd->add_option("--mu-grid", grid_text, "lo:hi:count, inclusive linear grid");
    surf_cmd->add_flag("--crn,!--no-crn", crn, "Reuse the same random streams at every grid point (default on)");
    add_output(surf_cmd, outputs, true);
    surf_cmd->callback([&] {
        action = [&] {
            const auto parts = split(grid_text, ':');
            if (parts.size() != 3) throw ValidationError("--mu-grid must look like lo:hi:count");
            json inputs = sim_inputs(surf);
            const double count = parse_double(parts[2], "grid count");
            if (count < 1 || count != std::floor(count)) throw ValidationError("grid count must be a positive integer");
            inputs["mu_grid"] = {{"lo", parse_double(parts[0], "grid lo")},
                                 {"hi", parse_double(parts[1], "grid hi")},
                                 {"count", static_cast<int>(count)}};
            inputs["crn"] = crn;
            exec_surface(ctx, inputs, outputs);
        };
    });

    // mle
    SimFlags mle_flags;
    std::string bounds_text = "0.1:30.1";
    double tol = 1e-2;
    auto* mle_cmd = app.add_subcommand("mle", "Maximum-likelihood estimate of the mutation rate");
    add_model_population(mle_cmd, mle_flags);
    add_engine_flags(mle_cmd, mle_flags);
    mle_cmd->add_option("--bounds", bounds_text, "lo:hi search interval");
    mle_cmd->add_option("--tol", tol, "Stop when the bracket is this narrow");
    add_output(mle_cmd, outputs, false);
    mle_cmd->callback([&] {
        action = [&] {
            const auto [lo, hi] = parse_range(bounds_text, "--bounds");
            json inputs = sim_inputs(mle_flags);
            inputs["bounds"] = {lo, hi};
            inputs["tol"] = tol;
            exec_mle(ctx, inputs, outputs);
        };
    });

    // traj
    std::string records_in;
    auto* traj_cmd = app.add_subcommand("traj", "Median/min/max population size against SEN (CSV)");
    traj_cmd->add_option("--records", records_in, "Records file (JSON lines or results JSON)")->required();
    add_output(traj_cmd, outputs, true);
    traj_cmd->callback([&] {
        action = [&] {
            json inputs;
            inputs["records_file"] = records_in;
            exec_traj(ctx, inputs, outputs);
        };
    });

    // exact
    SimFlags ex;
    double ex_mu = 1.0;
    std::uint64_t ex_max_configs = 1'000'000;
    auto* exact_cmd = app.add_subcommand("exact", "Exact log-likelihood by solving the recursion (small instances)");
    add_model_population(exact_cmd, ex);
    exact_cmd->add_option("--mu", ex_mu, "Scaled mutation rate")->required();
    exact_cmd->add_option("--stop-size,-N", ex.stop_size, "Seed the recursion at this size with the correction");
    exact_cmd->add_option("--correction", ex.correction, "stationary-product | none")
        ->check(CLI::IsMember({"stationary-product", "none"}));
    exact_cmd->add_option("--max-configurations", ex_max_configs, "Refuse larger configuration lattices");
    add_output(exact_cmd, outputs, false);
    exact_cmd->callback([&] {
        action = [&] {
            json inputs = base_inputs(ex);
            inputs["mu"] = ex_mu;
            inputs["stop_size"] = ex.stop_size;
            inputs["correction"] = ex.correction;
            inputs["max_configurations"] = ex_max_configs;
            exec_exact(ctx, inputs, outputs);
        };
    });

    // replay
    std::string manifest_in;
    auto* replay_cmd = app.add_subcommand("replay", "Re-run a command from its manifest (or a results JSON)");
    replay_cmd->add_option("source", manifest_in, "Manifest or results JSON to re-run")->required();
    replay_cmd->add_option("--records", outputs.records, "Records output (likelihood)");
    replay_cmd->add_flag("--include-records", outputs.include_records, "Embed records (likelihood)");
    replay_cmd->add_option("--stationary", outputs.stationary, "Stationary CSV output (model)");
    add_output(replay_cmd, outputs, true);
    replay_cmd->callback([&] {
        action = [&] {
            json doc;
            try {
                doc = json::parse(read_text_file(manifest_in));
            } catch (const json::exception& e) {
                throw ValidationError("malformed manifest: " + std::string(e.what()));
            }
            const json& manifest = doc.contains("manifest") ? doc.at("manifest") : doc;
            const auto command = manifest.at("command").get<std::string>();
            const auto it = executors().find(command);
            if (it == executors().end()) throw ValidationError("manifest names unknown command " + command);
            it->second(ctx, manifest.at("inputs"), outputs);
        };
    });

    std::vector<std::string> argv_rest(args.begin() + (args.empty() ? 0 : 1), args.end());
    std::reverse(argv_rest.begin(), argv_rest.end());
    try {
        app.parse(argv_rest);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << "tmachine " << kVersion << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        // Subcommand help requests surface here as well.
        if (e.get_exit_code() == 0) {
            for (auto* sub : app.get_subcommands()) out << sub->help();
            return kExitOk;
        }
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    try {
        if (action) action();
        return kExitOk;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const json::exception& e) {
        err << "error: malformed input: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

}  // namespace tmachine::cli
