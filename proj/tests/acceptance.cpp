// Acceptance run: one PASS/FAIL line per criterion, details indented below.
// Exit status is the number of failing criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "urllc/fbl.hpp"
#include "urllc/harness.hpp"
#include "urllc/oracle.hpp"
#include "urllc/sca.hpp"
#include "urllc/subproblem.hpp"

using namespace urllc;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
    bool pass = true;
    std::vector<std::string> notes;
    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
    }
    void info(const std::string& what) { notes.push_back("     " + what); }
};

std::string fmt(double v, int prec = 6) {
    std::ostringstream os;
    os << std::setprecision(prec) << v;
    return os.str();
}

Verdict ac1() {
    Verdict v;
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (double eps : {1e-9, 1e-6, 1e-3, 0.1, 0.4}) {
        const double z = fbl::q_inverse(eps);
        const double rel = std::abs(oracles::tail_quadrature(z) - eps) / eps;
        worst = std::max(worst, rel);
        v.require(rel <= 1e-9, "eps " + fmt(eps) + ": |Q(z) - eps| / eps = " + fmt(rel, 3));
    }
    const double z6 = fbl::q_inverse(1e-6);
    const double ref = oracles::tail_inverse_bisection(1e-6);
    v.require(std::abs(z6 - 4.753424) <= 1e-6, "q_inverse(1e-6) = " + fmt(z6, 12));
    v.info("bisection reference " + fmt(ref, 12) + ", worst relative error " + fmt(worst, 3));
    const double secs = since(t0);
    v.require(secs < 1.0, "runtime including the quadrature oracle " + fmt(secs, 3) + " s");
    return v;
}

Verdict ac2() {
    Verdict v;
    const auto t0 = Clock::now();
    const int uses = 120;
    const double eps = 1e-6;
    std::vector<double> snr_db, gap;
    bool dominated = true;
    for (int i = 0; i <= 200; ++i) {
        const double db = 0.1 * i;
        const std::vector<double> snrs(uses, std::pow(10.0, db / 10.0));
        const double exact = fbl::fbl_rate_exact(snrs, eps), approx = fbl::fbl_rate_approx(snrs, eps);
        dominated = dominated && exact >= approx;
        snr_db.push_back(db);
        gap.push_back(std::abs(exact - approx) / std::abs(exact));
    }
    v.require(dominated, "exact >= approx on 201 points over 0..20 dB");
    bool shrinking = true, below_zero_db = true;
    for (std::size_t i = 1; i < gap.size(); ++i) shrinking = shrinking && gap[i] < gap[i - 1];
    for (std::size_t i = 0; i < gap.size(); ++i)
        if (snr_db[i] >= 3.0 - 1e-12) below_zero_db = below_zero_db && gap[i] < gap[0];
    v.require(shrinking, "relative gap strictly decreasing in SNR");
    v.require(below_zero_db, "gap at every SNR >= 3 dB below the gap at 0 dB");
    v.info("measured gap: 0 dB " + fmt(gap[0], 4) + ", 3 dB " + fmt(gap[30], 4) + ", 10 dB " + fmt(gap[100], 4) +
           ", 20 dB " + fmt(gap[200], 4));
    const double secs = since(t0);
    v.require(secs < 1.0, "runtime " + fmt(secs, 3) + " s");
    return v;
}

Verdict ac3() {
    Verdict v;
    const auto t0 = Clock::now();
    int feasible = 0, within = 0, completed = 0, dominance_fail = 0;
    double worst_gap = 0.0;
    for (int s = 0; s < 50; ++s) {
        ScenarioConfig cfg = default_config();
        cfg.num_freq_bins = 2;
        cfg.num_slots = 2;
        cfg.num_users = 2;
        cfg.user_distances_m = {50.0, 50.0};
        cfg.qos = {{8.0, 1, 1e-6}, {8.0, 2, 1e-6}};
        cfg.rng_seed = derive_seed(11, static_cast<std::uint64_t>(s));
        const auto inst = generate_instance(cfg);
        const auto orc = oracle::exhaustive_solve(inst);
        const auto out = sca::run(inst);
        const bool sca_ok = out.status == sca::Status::Converged && check_feasible(inst, out.schedule).feasible;
        if (orc.feasible_found) ++feasible;
        if (sca_ok && !orc.feasible_found) {
            ++dominance_fail;
            v.info("seed " + std::to_string(s) + ": SCA feasible where the oracle found nothing");
        }
        if (sca_ok && orc.feasible_found) {
            ++completed;
            if (orc.best_p_tot > out.p_tot + 1e-8) {
                ++dominance_fail;
                v.info("seed " + std::to_string(s) + ": oracle " + fmt(orc.best_p_tot) + " above SCA " + fmt(out.p_tot));
            }
            const double g = (out.p_tot - orc.best_p_tot) / orc.best_p_tot;
            worst_gap = std::max(worst_gap, g);
            if (g <= 0.05) ++within;
        } else if (orc.feasible_found) {
            v.info("seed " + std::to_string(s) + ": SCA status " + sca::to_string(out.status) + " on a feasible instance");
        }
    }
    v.require(dominance_fail == 0, "oracle <= SCA + 1e-8 on all " + std::to_string(completed) + " completed instances");
    v.require(feasible > 0 && within >= 0.9 * feasible,
              "SCA within 5% on " + std::to_string(within) + " of " + std::to_string(feasible) + " feasible instances");
    v.info("worst relative gap " + fmt(worst_gap, 4));
    const double secs = since(t0);
    v.require(secs < 120.0, "runtime " + fmt(secs, 3) + " s");
    return v;
}

Verdict ac4() {
    Verdict v;
    const int trials = 20;
    int converged = 0, contract_fail = 0;
    double worst_secs = 0.0, mean_iters = 0.0;
    int max_iters = 0;
    for (int s = 0; s < trials; ++s) {
        ScenarioConfig cfg = default_config();
        cfg.rng_seed = derive_seed(5, static_cast<std::uint64_t>(s));
        const auto inst = generate_instance(cfg);
        const auto t0 = Clock::now();
        const auto out = sca::run(inst);
        worst_secs = std::max(worst_secs, since(t0));
        if (out.status != sca::Status::Converged) {
            v.info("seed " + std::to_string(s) + ": " + sca::to_string(out.status));
            continue;
        }
        ++converged;
        mean_iters += out.iterations;
        max_iters = std::max(max_iters, out.iterations);
        const bool delta_ok = !out.trace.empty() && out.trace.back().delta < 1e-6;
        const bool feasible = check_feasible(inst, out.schedule).feasible;
        const double tp = total_power(out.schedule);
        const bool match = std::abs(tp - out.p_tot) <= 1e-6 * std::max(std::abs(out.p_tot), 1e-300);
        if (!(delta_ok && feasible && match && out.iterations <= 200)) {
            ++contract_fail;
            v.info("seed " + std::to_string(s) + ": contract broken (delta " + fmt(out.trace.back().delta, 3) +
                   ", feasible " + (feasible ? "yes" : "no") + ", total " + fmt(tp, 12) + " vs " + fmt(out.p_tot, 12) +
                   ")");
        }
    }
    v.info("desk scale " + std::to_string(default_config().num_freq_bins) + "x" +
           std::to_string(default_config().num_slots) + "x" + std::to_string(default_config().num_users));
    v.require(contract_fail == 0, "delta < 1e-6, feasible schedule, total_power == p_tot on every converged run");
    v.require(converged >= 0.95 * trials,
              "converged within 200 iterations on " + std::to_string(converged) + " of " + std::to_string(trials));
    if (converged) v.info("iterations mean " + fmt(mean_iters / converged, 4) + ", max " + std::to_string(max_iters));
    v.require(worst_secs < 30.0, "slowest desk solve " + fmt(worst_secs, 3) + " s");

    const auto probe_cfg = *harness::make_preset("fig4").probe;
    const auto t0 = Clock::now();
    const auto probe = harness::run_convergence_probe(probe_cfg);
    const double secs = since(t0);
    v.require(probe.status == sca::Status::Converged && probe.iterations <= 200,
              "fig4 desk probe (16x4x4): " + std::string(sca::to_string(probe.status)) + " after " +
                  std::to_string(probe.iterations) + " iterations, " + fmt(secs, 3) + " s");
    return v;
}

// Whether a column of means is monotone in the given direction, NaN failing.
bool monotone(const std::vector<double>& m, bool increasing) {
    for (double x : m)
        if (std::isnan(x)) return false;
    for (std::size_t i = 1; i < m.size(); ++i)
        if (increasing ? m[i] < m[i - 1] : m[i] > m[i - 1]) return false;
    return true;
}

std::string row_text(const harness::SweepResult& r) {
    std::string s;
    for (const auto& row : r.rows)
        s += fmt(row.value, 4) + ":" + fmt(row.mean_p_tot, 5) + (row.infeasible ? "(" + std::to_string(row.infeasible) + " inf)" : "") + " ";
    return s;
}

std::vector<double> means(const harness::SweepResult& r) {
    std::vector<double> m;
    for (const auto& row : r.rows) m.push_back(row.mean_p_tot);
    return m;
}

Verdict ac5() {
    Verdict v;
    struct Figure {
        const char* name;
        bool increasing;
        const char* what;
    };
    for (const Figure& f : {Figure{"fig2", true, "non-decreasing in B"}, Figure{"fig3", true, "non-decreasing in K"},
                            Figure{"fig5", false, "non-increasing in D1"}, Figure{"fig6", false, "non-increasing in eps"}}) {
        const auto preset = harness::make_preset(f.name);
        std::vector<harness::SweepResult> results;
        for (const auto& ls : preset.sweeps) {
            const auto t0 = Clock::now();
            results.push_back(harness::run_sweep(ls.spec));
            const double secs = since(t0);
            const auto& r = results.back();
            v.require(ls.spec.trials >= 20, std::string(f.name) + " " + ls.label + ": " +
                                                std::to_string(ls.spec.trials) + " trials per point");
            v.require(monotone(means(r), f.increasing), std::string(f.name) + " " + ls.label + " " + f.what);
            v.info(row_text(r));
            v.require(secs < 600.0, std::string(f.name) + " " + ls.label + " runtime " + fmt(secs, 4) + " s");
        }
        if (std::string(f.name) == "fig2") {
            // one sweep per delta, ascending; compare at each payload
            bool ordered = true;
            for (std::size_t i = 0; i < results.front().rows.size(); ++i) {
                std::vector<double> col;
                for (const auto& r : results) col.push_back(r.rows[i].mean_p_tot);
                ordered = ordered && monotone(col, true);
            }
            v.require(ordered, "fig2 non-decreasing in delta at every B");
        }
    }
    return v;
}

Verdict ac6() {
    Verdict v;
    const auto t0 = Clock::now();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int optimal = 0, infeasible = 0, maxiter = 0;
    double worst_kkt = 0.0;
    for (int i = 0; i < 100; ++i) {
        ScenarioConfig cfg = default_config();
        cfg.num_freq_bins = 1 + rng() % 4;
        cfg.num_slots = 1 + rng() % 4;
        cfg.num_users = 1 + rng() % 3;
        cfg.rng_seed = rng();
        cfg.user_distances_m.clear();
        cfg.qos.clear();
        for (std::size_t k = 0; k < cfg.num_users; ++k) {
            cfg.user_distances_m.push_back(20.0 + 100.0 * u(rng));
            cfg.qos.push_back({1.0 + 7.0 * u(rng), 1 + rng() % cfg.num_slots, 1e-6});
        }
        const auto inst = generate_instance(cfg);
        const GridDims d = inst.dims();
        Tensor3<double> w(d, 1.0);
        for (std::size_t p = 0; p < d.prbs(); ++p) {
            std::vector<double> f(d.users);
            double tot = 0.0;
            for (double& x : f) tot += (x = u(rng));
            const double scale = u(rng) / tot;
            for (std::size_t k = 0; k < d.users; ++k) w[p * d.users + k] = 1.0 / (f[k] * scale + 0.01);
        }
        std::vector<double> anchors(d.users);
        for (double& a : anchors) a = 1.0 + 3.0 * u(rng);
        const auto sol = subproblem::solve(subproblem::build(inst, anchors, w));
        switch (sol.status) {
            case subproblem::Status::Optimal:
                ++optimal;
                worst_kkt = std::max(worst_kkt, sol.kkt_residual);
                break;
            case subproblem::Status::Infeasible: ++infeasible; break;
            case subproblem::Status::MaxIter: ++maxiter; break;
        }
    }
    v.require(optimal > 0 && worst_kkt <= 1e-8, "KKT residual <= 1e-8 on all " + std::to_string(optimal) +
                                                   " optimal solves (worst " + fmt(worst_kkt, 3) + ")");
    v.info("of 100: optimal " + std::to_string(optimal) + ", certified infeasible " + std::to_string(infeasible) +
           ", max_iter " + std::to_string(maxiter));

    int concave_fail = 0;
    for (int i = 0; i < 10000; ++i) {
        const double c = std::exp(12.0 * u(rng) - 6.0);
        const double i1 = u(rng), i2 = u(rng), p1 = 2.0 * u(rng) * i1, p2 = 2.0 * u(rng) * i2;
        const double mid = subproblem::perspective_rate(0.5 * (i1 + i2), 0.5 * (p1 + p2), c);
        const double avg = 0.5 * (subproblem::perspective_rate(i1, p1, c) + subproblem::perspective_rate(i2, p2, c));
        if (mid < avg - 1e-12 * std::max(1.0, std::abs(avg))) ++concave_fail;
    }
    v.require(concave_fail == 0, "perspective midpoint concavity on 10^4 random pairs");

    int bound_fail = 0;
    for (int i = 0; i < 1000; ++i) {
        const double x = 0.05 * i, x0 = 0.01 + 0.5 * (i % 97);
        if (std::sqrt(x) > subproblem::taylor_sqrt_bound(x, x0) * (1.0 + 1e-15)) ++bound_fail;
    }
    v.require(bound_fail == 0, "sqrt(x) <= taylor bound on a 10^3-point grid");
    const double secs = since(t0);
    v.require(secs < 60.0, "runtime " + fmt(secs, 3) + " s");
    return v;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

Verdict ac7() {
    Verdict v;
    harness::SweepSpec spec;
    spec.base = default_config();
    spec.base.num_freq_bins = 4;
    spec.base.num_slots = 4;
    spec.base.num_users = 2;
    spec.base.user_distances_m = {100.0, 200.0};
    spec.base.qos = {{8.0, 2, 1e-6}, {8.0, 4, 1e-6}};
    spec.parameter = harness::Parameter::PayloadB;
    spec.values = {4.0, 8.0, 12.0};
    spec.trials = 4;
    const fs::path root = fs::temp_directory_path() / "urllc_acceptance_determinism";
    fs::remove_all(root);
    harness::emit(harness::run_sweep(spec), spec.parameter, root / "a");
    spec.threads = 3;
    harness::emit(harness::run_sweep(spec), spec.parameter, root / "b");
    const std::string a = slurp(root / "a" / "sweep.csv"), b = slurp(root / "b" / "sweep.csv");
    v.require(!a.empty() && a == b, "two runs (1 and 3 threads) give byte-identical sweep.csv (" +
                                        std::to_string(a.size()) + " bytes)");
    fs::remove_all(root);
    return v;
}

}  // namespace

int main() {
    struct Criterion {
        const char* id;
        const char* title;
        std::function<Verdict()> run;
    };
    const std::vector<Criterion> all{
        {"AC1", "Q-function inverse", ac1},
        {"AC2", "finite-blocklength approximation gap", ac2},
        {"AC3", "oracle equivalence on 2x2x2 instances", ac3},
        {"AC4", "SCA output contract at desk scale", ac4},
        {"AC5", "figure trends at desk scale", ac5},
        {"AC6", "subproblem solver", ac6},
        {"AC7", "sweep determinism", ac7},
    };
    int failures = 0;
    for (const auto& c : all) {
        const auto t0 = Clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v.require(false, std::string("threw: ") + e.what());
        }
        std::cout << c.id << ' ' << (v.pass ? "PASS" : "FAIL") << "  " << c.title << "  (" << fmt(since(t0), 4)
                  << " s)\n";
        for (const auto& n : v.notes) std::cout << "    " << n << '\n';
        std::cout.flush();
        failures += v.pass ? 0 : 1;
    }
    return failures;
}
