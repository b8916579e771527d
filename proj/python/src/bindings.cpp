#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "urllc/fbl.hpp"
#include "urllc/harness.hpp"
#include "urllc/model.hpp"
#include "urllc/oracle.hpp"
#include "urllc/sca.hpp"
#include "urllc/scenario.hpp"

namespace py = pybind11;
using namespace urllc;

namespace {

template <typename T>
py::array_t<T> to_array(const Tensor3<T>& t) {
    const GridDims& d = t.dims();
    py::array_t<T> a({d.freq_bins, d.slots, d.users});
    std::copy(t.data().begin(), t.data().end(), a.mutable_data());
    return a;
}

ScenarioConfig parse_config(const std::string& text) { return config_from_json(nlohmann::json::parse(text)); }

py::dict schedule_dict(const ProblemInstance& inst, const Schedule& s) {
    const auto rep = check_feasible(inst, s);
    py::dict d;
    d["assign"] = to_array(s.assign);
    d["power"] = to_array(s.power);
    d["feasible"] = rep.feasible;
    d["user_rates"] = rep.per_user_rate;
    return d;
}

py::dict solve(const std::string& config, double tol, int max_iter) {
    const auto inst = generate_instance(parse_config(config));
    sca::ScaOptions o;
    o.tol = tol;
    o.max_iter = max_iter;
    sca::SolveOutcome out;
    {
        py::gil_scoped_release nogil;
        out = sca::run(inst, o);
    }
    py::dict d = schedule_dict(inst, out.schedule);
    d["status"] = sca::to_string(out.status);
    d["p_tot"] = out.p_tot;
    d["iterations"] = out.iterations;
    py::list trace;
    for (const auto& r : out.trace) trace.append(py::make_tuple(r.iteration, r.p_tot, r.delta, r.max_fractionality));
    d["trace"] = trace;
    return d;
}

py::dict oracle_solve(const std::string& config, double limit) {
    const auto inst = generate_instance(parse_config(config));
    oracle::OracleResult r;
    {
        py::gil_scoped_release nogil;
        r = oracle::exhaustive_solve(inst, limit);
    }
    py::dict d = schedule_dict(inst, r.best_schedule);
    d["feasible_found"] = r.feasible_found;
    d["p_tot"] = r.best_p_tot;
    d["assignments_searched"] = r.assignments_searched;
    return d;
}

std::string sweep(const std::string& spec_text) {
    const auto spec = harness::spec_from_json(nlohmann::json::parse(spec_text));
    harness::SweepResult r;
    {
        py::gil_scoped_release nogil;
        r = harness::run_sweep(spec);
    }
    std::ostringstream os;
    harness::write_sweep_csv(os, r);
    return os.str();
}

}  // namespace

PYBIND11_MODULE(_urllc, m) {
    m.doc() = "Robust URLLC scheduling: finite-blocklength rates, SCA solver, exhaustive oracle, sweeps";

    py::register_exception<oracle::SearchSpaceTooLarge>(m, "SearchSpaceTooLarge", PyExc_ValueError);

    m.def("q_inverse", &fbl::q_inverse, py::arg("eps"));
    m.def("q_function", &fbl::q_function, py::arg("x"));
    m.def(
        "fbl_rate_exact", [](const std::vector<double>& s, double eps) { return fbl::fbl_rate_exact(s, eps); },
        py::arg("snrs"), py::arg("eps"));
    m.def(
        "fbl_rate_approx", [](const std::vector<double>& s, double eps) { return fbl::fbl_rate_approx(s, eps); },
        py::arg("snrs"), py::arg("eps"));

    m.def("default_config_json", [] { return config_to_json(default_config()).dump(); });
    m.def(
        "normalize_config_json", [](const std::string& text) { return config_to_json(parse_config(text)).dump(); },
        py::arg("config"));
    m.def(
        "gains",
        [](const std::string& text) {
            const auto inst = generate_instance(parse_config(text));
            return py::make_tuple(to_array(inst.gains), inst.p_max_watts);
        },
        py::arg("config"));
    m.def("solve", &solve, py::arg("config"), py::arg("tol") = 1e-6, py::arg("max_iter") = 200);
    m.def("oracle", &oracle_solve, py::arg("config"), py::arg("limit") = oracle::kDefaultSearchLimit);
    m.def("sweep_csv", &sweep, py::arg("spec"));
}
