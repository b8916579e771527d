#include "urllc/sca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "urllc/oracle.hpp"

namespace urllc::sca {

const char* to_string(Status s) {
    switch (s) {
        case Status::Running: return "running";
        case Status::Converged: return "converged";
        case Status::Infeasible: return "infeasible";
        case Status::IterationCap: return "iteration_cap";
        case Status::RoundingFailed: return "rounding_failed";
    }
    return "unknown";
}

namespace {

std::vector<double> user_sums(const Tensor3<double>& assign) {
    const GridDims& d = assign.dims();
    std::vector<double> x(d.users, 0.0);
    for (std::size_t i = 0; i < assign.size(); ++i) x[i % d.users] += assign[i];
    return x;
}

Tensor3<double> reweight(const Tensor3<double>& assign, double xi) {
    Tensor3<double> w(assign.dims());
    for (std::size_t i = 0; i < assign.size(); ++i) w[i] = 1.0 / (assign[i] + xi);
    return w;
}

double max_fractionality(const Tensor3<double>& assign) {
    double worst = 0.0;
    for (double v : assign.data()) worst = std::max(worst, std::min(v, 1.0 - v));
    return worst;
}

}  // namespace

ScaState initialize(const ProblemInstance& inst, double xi) {
    validate(inst);
    const GridDims& d = inst.dims();
    ScaState st;
    st.xi = xi;
    st.weights = Tensor3<double>(d, 1.0);
    st.assign_frac = Tensor3<double>(d, 0.0);
    st.power = Tensor3<double>(d, 0.0);

    std::vector<std::size_t> order(d.users);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return inst.qos[a].deadline_slots < inst.qos[b].deadline_slots;
    });

    std::vector<std::size_t> quota(d.users, 0), held(d.users, 0);
    for (std::size_t k = 0; k < d.users; ++k) {
        if (inst.qos[k].payload_bits <= 0.0) continue;
        std::size_t slots = std::min(inst.qos[k].deadline_slots, d.slots);
        quota[k] = std::max<std::size_t>(1, d.freq_bins * slots / d.users);
        bool reachable = false;
        for (std::size_t m = 0; m < d.freq_bins && !reachable; ++m)
            for (std::size_t n = 0; n < slots && !reachable; ++n) reachable = inst.gains(m, n, k) > 0.0;
        if (!reachable) st.status = Status::Infeasible;
    }

    std::vector<std::uint8_t> taken(d.prbs(), 0);
    bool progress = true;
    while (progress) {
        progress = false;
        for (std::size_t k : order) {
            if (held[k] >= quota[k]) continue;
            std::size_t best = d.prbs();
            double best_gain = -1.0;
            for (std::size_t m = 0; m < d.freq_bins; ++m)
                for (std::size_t n = 0; n < d.slots; ++n) {
                    std::size_t prb = m * d.slots + n;
                    if (taken[prb] || !inst.eligible(n, k)) continue;
                    if (inst.gains(m, n, k) > best_gain) {
                        best_gain = inst.gains(m, n, k);
                        best = prb;
                    }
                }
            if (best == d.prbs()) continue;
            taken[best] = 1;
            st.assign_frac(best / d.slots, best % d.slots, k) = 1.0;
            ++held[k];
            progress = true;
        }
    }

    st.anchors = user_sums(st.assign_frac);
    st.delta = 1.0;
    return st;
}

ScaState iterate(ScaState st, const ProblemInstance& inst, const ScaOptions& opts) {
    std::vector<double> anchors(st.anchors);
    for (double& a : anchors)
        if (!(a > 0.0)) a = 1.0;  // users without any assignment yet

    auto sp = subproblem::build(inst, anchors, st.weights);
    const subproblem::SubproblemSolution* warm = st.last_solution ? &*st.last_solution : nullptr;
    auto sol = subproblem::solve(sp, warm, opts.solver);
    if (sol.status != subproblem::Status::Optimal) {
        st.status = Status::Infeasible;
        return st;
    }

    const double previous = st.p_tot_trace.empty() ? 0.0 : st.p_tot_trace.back();
    const double p_tot = sol.objective;
    st.assign_frac = sol.assign_frac;
    st.power = sol.power;
    st.anchors = user_sums(st.assign_frac);
    st.weights = reweight(st.assign_frac, st.xi);
    st.delta = std::abs(p_tot - previous);
    if (opts.relative_delta) st.delta /= std::max(std::abs(p_tot), 1e-300);
    st.p_tot_trace.push_back(p_tot);
    st.iteration += 1;
    st.trace.push_back({st.iteration, p_tot, st.delta, max_fractionality(st.assign_frac)});
    st.last_solution = std::move(sol);
    return st;
}

Tensor3<std::uint8_t> binarize(const Tensor3<double>& assign_frac, double threshold) {
    const GridDims& d = assign_frac.dims();
    Tensor3<std::uint8_t> out(d, 0);
    for (std::size_t m = 0; m < d.freq_bins; ++m)
        for (std::size_t n = 0; n < d.slots; ++n) {
            std::size_t best = 0;
            for (std::size_t k = 1; k < d.users; ++k)
                if (assign_frac(m, n, k) > assign_frac(m, n, best)) best = k;
            if (d.users > 0 && assign_frac(m, n, best) >= threshold) out(m, n, best) = 1;
        }
    return out;
}

SolveOutcome run(const ProblemInstance& inst, const ScaOptions& opts) {
    ScaState st = initialize(inst, opts.xi);
    SolveOutcome out;
    out.schedule = Schedule(inst.dims());
    if (st.status == Status::Infeasible) {
        out.status = Status::Infeasible;
        return out;
    }

    while (st.delta >= opts.tol && st.iteration < opts.max_iter) {
        st = iterate(std::move(st), inst, opts);
        if (st.status == Status::Infeasible) break;
    }
    out.iterations = st.iteration;
    out.trace = st.trace;
    out.relaxed_assign = st.assign_frac;
    if (st.status == Status::Infeasible) {
        out.status = Status::Infeasible;
        return out;
    }

    // Round, restore powers where the rounded assignment is 1, then re-solve
    // powers exactly for the fixed assignment.
    Tensor3<std::uint8_t> assign = binarize(st.assign_frac, opts.binarize_threshold);
    Tensor3<double> assign_real(inst.dims(), 0.0);
    for (std::size_t i = 0; i < assign.size(); ++i) assign_real[i] = assign[i];
    out.schedule = recover_solution(assign_real, st.power);

    auto polished = oracle::allocate_powers(inst, assign);
    if (!polished || !check_feasible(inst, *polished).feasible) {
        out.p_tot = total_power(out.schedule);
        out.status = Status::RoundingFailed;
        return out;
    }
    out.schedule = std::move(*polished);
    out.p_tot = total_power(out.schedule);
    out.status = st.delta < opts.tol ? Status::Converged : Status::IterationCap;
    return out;
}

}  // namespace urllc::sca
