#include "tmachine/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "tmachine/errors.hpp"

namespace tmachine {

using nlohmann::json;

namespace {

json parse_json(const std::string& text, const char* what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("malformed ") + what + ": " + e.what());
    }
}

template <typename T>
T field(const json& j, const char* key, const char* what) {
    if (!j.is_object() || !j.contains(key)) throw ValidationError(std::string(what) + " is missing \"" + key + "\"");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string(what) + ": bad \"" + key + "\": " + e.what());
    }
}

double weight_from_json(const json& j) {
    if (j.is_null()) return -std::numeric_limits<double>::infinity();
    return j.get<double>();
}

json weight_to_json(double w) { return std::isfinite(w) ? json(w) : json(nullptr); }

}  // namespace

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path);
    out << text;
    if (!out) throw ValidationError("failed writing " + path);
}

ModelSpec parse_model_spec(const std::string& json_text) {
    const json j = parse_json(json_text, "model spec");
    const auto kind = field<std::string>(j, "kind", "model spec");
    ModelSpec spec;
    if (kind == "dense") {
        spec.kind = ModelSpec::Kind::Dense;
        spec.matrix = field<std::vector<std::vector<double>>>(j, "matrix", "model spec");
    } else if (kind == "flip") {
        spec.kind = ModelSpec::Kind::Flip;
        spec.loci = field<int>(j, "loci", "model spec");
        spec.a = field<std::vector<double>>(j, "a", "model spec");
        spec.b = field<std::vector<double>>(j, "b", "model spec");
    } else if (kind == "single-site") {
        spec.kind = ModelSpec::Kind::SingleSite;
        spec.loci = field<int>(j, "loci", "model spec");
    } else {
        throw ValidationError("unknown model kind \"" + kind + "\" (expected dense, flip or single-site)");
    }
    return spec;
}

std::string model_spec_to_json(const ModelSpec& spec) {
    json j;
    switch (spec.kind) {
        case ModelSpec::Kind::Dense:
            j["kind"] = "dense";
            j["matrix"] = spec.matrix;
            break;
        case ModelSpec::Kind::Flip:
            j["kind"] = "flip";
            j["loci"] = spec.loci;
            j["a"] = spec.a;
            j["b"] = spec.b;
            break;
        case ModelSpec::Kind::SingleSite:
            j["kind"] = "single-site";
            j["loci"] = spec.loci;
            break;
    }
    return j.dump();
}

ModelSpec read_model_spec(const std::string& path) { return parse_model_spec(read_text_file(path)); }

TransitionMatrix build_matrix(const ModelSpec& spec, int max_loci) {
    switch (spec.kind) {
        case ModelSpec::Kind::Dense:
            return TransitionMatrix(spec.matrix);
        case ModelSpec::Kind::Flip:
            return build_flip_model(spec.loci, spec.a, spec.b, max_loci);
        case ModelSpec::Kind::SingleSite:
            break;
    }
    return build_single_site_model(spec.loci, max_loci);
}

Configuration parse_population(const std::string& json_text) {
    const json j = parse_json(json_text, "population");
    const auto k = field<long long>(j, "num_types", "population");
    auto counts = field<std::vector<int>>(j, "counts", "population");
    if (k < 1 || static_cast<std::size_t>(k) != counts.size()) {
        throw ValidationError("population num_types " + std::to_string(k) + " does not match " +
                              std::to_string(counts.size()) + " counts");
    }
    return Configuration(std::move(counts));
}

std::string population_to_json(const Configuration& config) {
    json j;
    j["num_types"] = config.num_types();
    j["counts"] = config.counts();
    return j.dump();
}

Configuration read_population(const std::string& path) { return parse_population(read_text_file(path)); }

void write_records_jsonl(std::ostream& out, std::span<const SimulationRecord> records) {
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        json j;
        j["index"] = i;
        j["log_weight"] = weight_to_json(r.log_weight);
        j["log_correction"] = weight_to_json(r.log_correction);
        j["degenerate"] = r.degenerate();
        j["coalescent_sens"] = r.coalescent_sens;
        j["final_counts"] = r.final_config.counts();
        j["event_count"] = r.event_count;
        j["elapsed_seconds"] = r.elapsed_seconds;
        out << j.dump() << '\n';
    }
}

namespace {

SimulationRecord record_from_json(const json& j) {
    SimulationRecord r;
    r.log_weight = weight_from_json(j.at("log_weight"));
    r.log_correction = weight_from_json(j.at("log_correction"));
    r.coalescent_sens = j.at("coalescent_sens").get<std::vector<std::int64_t>>();
    r.final_config = Configuration(j.at("final_counts").get<std::vector<int>>());
    r.event_count = j.at("event_count").get<std::int64_t>();
    r.elapsed_seconds = j.value("elapsed_seconds", 0.0);
    return r;
}

}  // namespace

std::vector<SimulationRecord> read_records(std::istream& in) {
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    std::vector<SimulationRecord> out;
    try {
        const auto first = text.find_first_not_of(" \t\r\n");
        if (first == std::string::npos) return out;
        // A whole-document object carrying "records" (results JSON).
        if (text[first] == '{') {
            const json doc = json::parse(text, nullptr, false);
            if (!doc.is_discarded() && doc.is_object() && doc.contains("records")) {
                for (const auto& j : doc.at("records")) out.push_back(record_from_json(j));
                return out;
            }
        }
        std::istringstream lines(text);
        std::string line;
        while (std::getline(lines, line)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            out.push_back(record_from_json(json::parse(line)));
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed records: ") + e.what());
    }
    return out;
}

void write_surface_csv(std::ostream& out, std::span<const SurfacePoint> points) {
    out << kSurfaceCsvHeader << '\n';
    for (const auto& p : points) {
        out << format_double(p.mu) << ',' << format_double(p.log_likelihood) << ',' << format_double(p.std_error)
            << ',' << p.num_sims << ',' << format_double(p.mean_sim_seconds) << ',' << p.degenerate_count << '\n';
    }
}

void write_trajectory_csv(std::ostream& out, std::span<const TrajectoryRow> rows) {
    out << kTrajectoryCsvHeader << '\n';
    for (const auto& r : rows)
        out << r.sen << ',' << format_double(r.median_size) << ',' << r.min_size << ',' << r.max_size << '\n';
}

void write_stationary_csv(std::ostream& out, const StationaryDistribution& dist) {
    out << kStationaryCsvHeader << '\n';
    for (std::size_t i = 0; i < dist.num_types(); ++i) out << i << ',' << format_double(dist[i]) << '\n';
}

}  // namespace tmachine
