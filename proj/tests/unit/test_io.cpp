#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "test_helpers.hpp"
#include "tmachine/errors.hpp"
#include "tmachine/io.hpp"

using namespace tmachine;

TEST_CASE("model spec parsing and round trip") {
    const auto dense = parse_model_spec(R"({"kind":"dense","matrix":[[0.1,0.9],[0.3,0.7]]})");
    CHECK(dense.kind == ModelSpec::Kind::Dense);
    const auto m = build_matrix(dense);
    CHECK(m(0, 1) == 0.9);
    CHECK(m(1, 0) == 0.3);
    CHECK(parse_model_spec(model_spec_to_json(dense)).matrix == dense.matrix);

    const auto flip = parse_model_spec(R"({"kind":"flip","loci":2,"a":[0.1,0.2],"b":[0.3,0.4]})");
    CHECK(flip.loci == 2);
    const auto f = build_matrix(flip);
    CHECK(f.num_types() == 4);
    CHECK(f(0, 0) == doctest::Approx(0.9 * 0.8));
    const auto back = parse_model_spec(model_spec_to_json(flip));
    CHECK(back.a == flip.a);
    CHECK(back.b == flip.b);

    const auto ss = parse_model_spec(R"({"kind":"single-site","loci":3})");
    CHECK(build_matrix(ss).num_types() == 8);
    CHECK(parse_model_spec(model_spec_to_json(ss)).loci == 3);
}

TEST_CASE("dense matrices echo bit-exactly") {
    RandomStream gen = derive_stream({77, 0});
    const auto p = tmachine::testing::random_stochastic(5, gen);
    ModelSpec spec;
    spec.matrix = p.rows();
    const auto again = build_matrix(parse_model_spec(model_spec_to_json(spec)));
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) CHECK(again(i, j) == p(i, j));
}

TEST_CASE("malformed model specs are rejected") {
    CHECK_THROWS_AS(parse_model_spec("{"), ValidationError);
    CHECK_THROWS_AS(parse_model_spec(R"({"kind":"tree"})"), ValidationError);
    CHECK_THROWS_AS(parse_model_spec(R"({"matrix":[[1]]})"), ValidationError);
    CHECK_THROWS_AS(parse_model_spec(R"({"kind":"flip","loci":"two","a":[],"b":[]})"), ValidationError);
    CHECK_THROWS_AS(build_matrix(parse_model_spec(R"({"kind":"dense","matrix":[[0.5,0.6],[0,1]]})")),
                    ValidationError);
    CHECK_THROWS_AS(build_matrix(parse_model_spec(R"({"kind":"single-site","loci":16})")), GuardError);
}

TEST_CASE("population parsing") {
    const auto c = parse_population(R"({"num_types":3,"counts":[2,0,5]})");
    CHECK(c.total() == 7);
    CHECK(c[2] == 5);
    CHECK(parse_population(population_to_json(c)).counts() == c.counts());
    CHECK_THROWS_AS(parse_population(R"({"num_types":2,"counts":[2,0,5]})"), ValidationError);
    CHECK_THROWS_AS(parse_population(R"({"num_types":2,"counts":[0,0]})"), ValidationError);
    CHECK_THROWS_AS(parse_population(R"({"num_types":2,"counts":[-1,3]})"), ValidationError);
    CHECK_THROWS_AS(parse_population("[1,2]"), ValidationError);
}

TEST_CASE("records round trip through JSON lines") {
    std::vector<SimulationRecord> recs(3);
    recs[0].log_weight = -1.25;
    recs[0].log_correction = -0.5;
    recs[0].coalescent_sens = {3, 8};
    recs[0].final_config = Configuration({1, 0});
    recs[0].event_count = 8;
    recs[0].elapsed_seconds = 1e-5;
    recs[1].log_weight = -std::numeric_limits<double>::infinity();
    recs[1].log_correction = -std::numeric_limits<double>::infinity();
    recs[1].final_config = Configuration({0, 2});
    recs[1].event_count = 4;
    recs[2].log_weight = 0.1 + 0.2;
    recs[2].final_config = Configuration({1, 1});

    std::stringstream ss;
    write_records_jsonl(ss, recs);
    const std::string text = ss.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
    CHECK(text.find("\"log_weight\":null") != std::string::npos);
    CHECK(text.find("\"degenerate\":true") != std::string::npos);

    std::istringstream in(text);
    const auto back = read_records(in);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back[i].log_weight == recs[i].log_weight);
        CHECK(back[i].log_correction == recs[i].log_correction);
        CHECK(back[i].coalescent_sens == recs[i].coalescent_sens);
        CHECK(back[i].final_config.counts() == recs[i].final_config.counts());
        CHECK(back[i].event_count == recs[i].event_count);
    }
    CHECK(back[1].degenerate());

    std::istringstream doc(R"({"loglik":-1,"records":[{"log_weight":-2,"log_correction":0,"coalescent_sens":[1],)"
                           R"("final_counts":[1],"event_count":1}]})");
    const auto embedded = read_records(doc);
    REQUIRE(embedded.size() == 1);
    CHECK(embedded[0].log_weight == -2.0);

    std::istringstream empty("  \n");
    CHECK(read_records(empty).empty());
    std::istringstream bad("{\"log_weight\":1}\n");
    CHECK_THROWS_AS(read_records(bad), ValidationError);
}

TEST_CASE("csv writers") {
    SurfacePoint p;
    p.mu = 0.1;
    p.log_likelihood = -2.5;
    p.std_error = 0.125;
    p.num_sims = 10;
    p.mean_sim_seconds = 0.5;
    p.degenerate_count = 1;
    std::ostringstream s;
    write_surface_csv(s, std::vector<SurfacePoint>{p});
    CHECK(s.str() == "mu,loglik,se,num_sims,mean_sim_seconds,degenerate_count\n0.1,-2.5,0.125,10,0.5,1\n");

    std::ostringstream t;
    write_trajectory_csv(t, std::vector<TrajectoryRow>{{0, 4.0, 4, 4}, {1, 3.5, 3, 4}});
    CHECK(t.str() == "sen,median,min,max\n0,4,4,4\n1,3.5,3,4\n");

    std::ostringstream d;
    write_stationary_csv(d, StationaryDistribution{{0.75, 0.25}});
    CHECK(d.str() == "type_index,prob\n0,0.75\n1,0.25\n");
}

TEST_CASE("format_double is shortest round trip") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0 / 3) == "0.3333333333333333");
    CHECK(std::stod(format_double(std::exp(1.0))) == std::exp(1.0));
}

TEST_CASE("file helpers") {
    CHECK_THROWS_AS(read_text_file("/nonexistent/dir/file.json"), ValidationError);
    CHECK_THROWS_AS(write_text_file("/nonexistent/dir/file.json", "x"), ValidationError);
}
