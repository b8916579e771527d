#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "urllc/harness.hpp"

using namespace urllc;
using namespace urllc::harness;
using Catch::Approx;

namespace {

ScenarioConfig tiny_base() {
    ScenarioConfig cfg = default_config();
    cfg.num_freq_bins = 2;
    cfg.num_slots = 2;
    cfg.num_users = 2;
    cfg.user_distances_m = {50.0, 80.0};
    cfg.qos = {{4.0, 1, 1e-5}, {4.0, 2, 1e-5}};
    return cfg;
}

SweepSpec tiny_spec(unsigned threads) {
    SweepSpec s;
    s.base = tiny_base();
    s.parameter = Parameter::PayloadB;
    s.values = {2.0, 6.0};
    s.trials = 3;
    s.threads = threads;
    return s;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

TrialRecord rec(sca::Status s, double p, int it) {
    TrialRecord r;
    r.status = s;
    r.p_tot = p;
    r.iterations = it;
    return r;
}

}  // namespace

TEST_CASE("parameter names round trip") {
    for (auto p : {Parameter::PayloadB, Parameter::NumUsersK, Parameter::DeadlineD1, Parameter::ErrorProb,
                   Parameter::ErrorBound})
        CHECK(parse_parameter(to_string(p)) == p);
    CHECK(std::string(to_string(Parameter::ErrorBound)) == "error_bound_delta");
    CHECK_THROWS_AS(parse_parameter("payload"), std::invalid_argument);
}

TEST_CASE("apply sets the swept parameter") {
    auto base = tiny_base();
    auto b = apply(base, Parameter::PayloadB, 9.0);
    CHECK(b.qos[0].payload_bits == 9.0);
    CHECK(b.qos[1].payload_bits == 9.0);

    auto e = apply(base, Parameter::ErrorProb, 1e-4);
    CHECK(e.qos[0].error_prob == 1e-4);
    CHECK(e.qos[1].error_prob == 1e-4);

    auto d = apply(base, Parameter::DeadlineD1, 2.0);
    CHECK(d.qos[0].deadline_slots == 2);
    CHECK(d.qos[1].deadline_slots == 2);

    auto delta = apply(base, Parameter::ErrorBound, 0.1);
    CHECK(delta.error_bound == 0.1);

    auto k4 = apply(base, Parameter::NumUsersK, 4.0);
    REQUIRE(k4.num_users == 4);
    CHECK(k4.qos.size() == 4);
    CHECK(k4.qos[3] == base.qos[1]);
    CHECK(k4.user_distances_m[3] == 80.0);
    auto k1 = apply(base, Parameter::NumUsersK, 1.0);
    CHECK(k1.num_users == 1);
    CHECK(k1.qos == std::vector<QosTriple>{base.qos[0]});

    CHECK(apply(base, Parameter::PayloadB, 3.0).rng_seed == base.rng_seed);
}

TEST_CASE("spec validation") {
    auto s = tiny_spec(1);
    CHECK_NOTHROW(validate(s));
    auto bad = s;
    bad.values.clear();
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);
    bad = s;
    bad.trials = 0;
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);
    bad = s;
    bad.parameter = Parameter::DeadlineD1;
    bad.values = {3.0};  // beyond N = 2
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);
    bad.parameter = Parameter::ErrorProb;
    bad.values = {0.7};
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);
}

TEST_CASE("trial seeds ignore the swept value and differ across trials") {
    CHECK(trial_seed(5, 0) == trial_seed(5, 0));
    CHECK(trial_seed(5, 0) != trial_seed(5, 1));
    CHECK(trial_seed(5, 0) != trial_seed(6, 0));
}

TEST_CASE("pairwise sum and summaries") {
    CHECK(pairwise_sum({}) == 0.0);
    CHECK(pairwise_sum({1.5}) == 1.5);
    // ((1e16 + 1) + (-1e16 + 1)) keeps nothing of the ones, the tree order is fixed
    CHECK(pairwise_sum({1e16, 1.0, -1e16, 1.0}) == (1e16 + 1.0) + (-1e16 + 1.0));
    CHECK(pairwise_sum({1.0, 2.0, 3.0, 4.0, 5.0}) == 15.0);

    std::vector<TrialRecord> t{rec(sca::Status::Converged, 1.0, 10), rec(sca::Status::IterationCap, 3.0, 20),
                               rec(sca::Status::Infeasible, 100.0, 5), rec(sca::Status::RoundingFailed, 50.0, 7),
                               rec(sca::Status::Converged, 2.0, 30)};
    t.back().error.clear();
    auto row = summarize(4.0, t);
    CHECK(row.value == 4.0);
    CHECK(row.infeasible == 2);
    CHECK(row.mean_p_tot == Approx(2.0));
    CHECK(row.std_p_tot == Approx(1.0));
    CHECK(row.mean_iterations == Approx(20.0));

    auto errored = rec(sca::Status::Converged, 1.0, 1);
    errored.error = "boom";
    CHECK_FALSE(errored.usable());
    auto none = summarize(1.0, {errored});
    CHECK(std::isnan(none.mean_p_tot));
    CHECK(none.infeasible == 1);
    auto single = summarize(1.0, {rec(sca::Status::Converged, 7.0, 3)});
    CHECK(single.std_p_tot == 0.0);
}

TEST_CASE("CSV formats") {
    SweepResult r;
    r.rows.push_back({10.0, 0.5, 0.25, 1, 12.5});
    r.rows.push_back({1e-6, std::nan(""), 0.0, 3, std::nan("")});
    std::ostringstream os;
    write_sweep_csv(os, r);
    CHECK(os.str() == "swept,mean_ptot_w,std,infeasible,iters\n10,0.5,0.25,1,12.5\n1e-06,nan,0,3,nan\n");

    ProbeResult p;
    p.rows.push_back({1, 2.5, 2.5, 0.125});
    std::ostringstream ps;
    write_probe_csv(ps, p);
    CHECK(ps.str() == "iteration,p_tot,delta,max_fractionality\n1,2.5,2.5,0.125\n");
}

TEST_CASE("sweeps are deterministic across thread counts and emit files") {
    auto one = run_sweep(tiny_spec(1));
    auto three = run_sweep(tiny_spec(3));
    REQUIRE(one.rows.size() == 2);
    REQUIRE(one.trials.size() == 6);
    CHECK(one.trials[0].value == 2.0);
    CHECK(one.trials[3].value == 6.0);
    CHECK(one.trials[1].seed == trial_seed(tiny_base().rng_seed, 1));
    CHECK(one.trials[4].seed == one.trials[1].seed);

    std::ostringstream a, b;
    write_sweep_csv(a, one);
    write_sweep_csv(b, three);
    CHECK(a.str() == b.str());
    for (const auto& t : one.trials) CHECK(t.error.empty());
    // more payload costs more power on the same channels
    if (one.rows[0].infeasible == 0 && one.rows[1].infeasible == 0)
        CHECK(one.rows[1].mean_p_tot > one.rows[0].mean_p_tot);

    const auto dir = std::filesystem::temp_directory_path() / "urllc_harness_emit";
    std::filesystem::remove_all(dir);
    emit(one, Parameter::PayloadB, dir / "nested");
    CHECK(slurp(dir / "nested" / "sweep.csv") == a.str());
    const std::string gp = slurp(dir / "nested" / "sweep.gp");
    CHECK(gp.find("plot 'sweep.csv'") != std::string::npos);
    CHECK(gp.find("payload_B") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("emit reports unwritable paths") {
    const auto file = std::filesystem::temp_directory_path() / "urllc_harness_block";
    { std::ofstream(file) << "x"; }
    SweepResult r;
    CHECK_THROWS_AS(emit(r, Parameter::PayloadB, file / "sub"), std::runtime_error);
    std::filesystem::remove(file);
}

TEST_CASE("convergence probe returns the trace") {
    auto cfg = tiny_base();
    auto p = run_convergence_probe(cfg);
    CHECK(static_cast<int>(p.rows.size()) == p.iterations);
    if (p.status == sca::Status::Converged) CHECK(p.rows.back().delta < 1e-6);
}

TEST_CASE("spec JSON round trip and rejection") {
    auto s = tiny_spec(2);
    s.parameter = Parameter::ErrorProb;
    s.values = {1e-6, 1e-5};
    s.sca.tol = 1e-5;
    s.sca.max_iter = 50;
    auto j = spec_to_json(s);
    auto back = spec_from_json(j);
    CHECK(back.base == s.base);
    CHECK(back.parameter == s.parameter);
    CHECK(back.values == s.values);
    CHECK(back.trials == s.trials);
    CHECK(back.sca.tol == 1e-5);
    CHECK(back.sca.max_iter == 50);
    CHECK(back.threads == 2);

    auto extra = j;
    extra["colour"] = "red";
    CHECK_THROWS_AS(spec_from_json(extra), std::invalid_argument);
    auto badp = j;
    badp["parameter"] = "speed";
    CHECK_THROWS_AS(spec_from_json(badp), std::invalid_argument);
}

TEST_CASE("presets") {
    for (const char* name : {"fig2", "fig3", "fig5", "fig6"}) {
        for (auto scale : {Scale::Desk, Scale::Paper}) {
            auto pr = make_preset(name, scale);
            CHECK(pr.name == name);
            CHECK_FALSE(pr.probe);
            REQUIRE_FALSE(pr.sweeps.empty());
            for (const auto& ls : pr.sweeps) {
                CHECK_NOTHROW(validate(ls.spec));
                CHECK(ls.spec.trials == (scale == Scale::Paper ? 100 : 20));
                CHECK(ls.spec.base.num_freq_bins == (scale == Scale::Paper ? 64u : 8u));
            }
        }
    }
    auto f2 = make_preset("fig2");
    REQUIRE(f2.sweeps.size() == 3);
    CHECK(f2.sweeps[0].spec.base.error_bound == 0.01);
    CHECK(f2.sweeps[2].spec.base.error_bound == 0.1);
    auto f4 = make_preset("fig4", Scale::Paper);
    REQUIRE(f4.probe);
    CHECK(f4.probe->num_freq_bins == 64);
    CHECK(f4.probe->num_users == 9);
    CHECK(f4.sweeps.empty());
    CHECK_THROWS_AS(make_preset("fig7"), std::invalid_argument);
}
