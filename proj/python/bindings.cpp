#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cbfrl/checkpoint.hpp"
#include "cbfrl/evaluation.hpp"
#include "cbfrl/integration.hpp"
#include "cbfrl/qp_oracle.hpp"
#include "cbfrl/train.hpp"

namespace py = pybind11;
using namespace cbfrl;

namespace {

std::string repr_state(const UnicycleState& s) {
    return "UnicycleState(x=" + std::to_string(s.x) + ", y=" + std::to_string(s.y) + ", theta=" +
           std::to_string(s.theta) + ")";
}

}  // namespace

PYBIND11_MODULE(_cbfrl, m) {
    m.doc() = "Control-barrier-function safety filter, unicycle task and soft actor-critic learner";

    py::class_<UnicycleState>(m, "UnicycleState")
        .def(py::init<>())
        .def(py::init([](double x, double y, double theta) { return UnicycleState{x, y, theta}; }), py::arg("x"),
             py::arg("y"), py::arg("theta"))
        .def_readwrite("x", &UnicycleState::x)
        .def_readwrite("y", &UnicycleState::y)
        .def_readwrite("theta", &UnicycleState::theta)
        .def("__repr__", &repr_state);

    py::class_<Control>(m, "Control")
        .def(py::init<>())
        .def(py::init([](double v, double omega) { return Control{v, omega}; }), py::arg("v"), py::arg("omega"))
        .def_readwrite("v", &Control::v)
        .def_readwrite("omega", &Control::omega)
        .def("__repr__", [](const Control& c) {
            return "Control(v=" + std::to_string(c.v) + ", omega=" + std::to_string(c.omega) + ")";
        });

    m.def("wrap_angle", &wrap_angle);
    m.def("rotation_matrix", &rotation_matrix);
    m.def("step", &step, py::arg("state"), py::arg("control"), py::arg("dt"));
    m.def("shifted_point", &shifted_point, py::arg("state"), py::arg("epsilon"));
    m.def("to_agent_frame", &to_agent_frame, py::arg("state"), py::arg("p_world"));

    py::class_<CbfParams>(m, "CbfParams")
        .def(py::init<>())
        .def_readwrite("obstacle_center", &CbfParams::obstacle_center)
        .def_readwrite("delta", &CbfParams::delta)
        .def_readwrite("epsilon", &CbfParams::epsilon)
        .def_readwrite("alpha_gain", &CbfParams::alpha_gain)
        .def_readwrite("kappa", &CbfParams::kappa)
        .def_property(
            "v_bounds", [](const CbfParams& p) { return std::make_pair(p.v_bounds.lo, p.v_bounds.hi); },
            [](CbfParams& p, std::pair<double, double> b) { p.v_bounds = {b.first, b.second}; })
        .def_property(
            "omega_bounds", [](const CbfParams& p) { return std::make_pair(p.omega_bounds.lo, p.omega_bounds.hi); },
            [](CbfParams& p, std::pair<double, double> b) { p.omega_bounds = {b.first, b.second}; })
        .def_readwrite("v_des", &CbfParams::v_des)
        .def_readwrite("slack_weight", &CbfParams::slack_weight)
        .def("validate", &CbfParams::validate);

    py::class_<SafeControl>(m, "SafeControl")
        .def_readonly("control", &SafeControl::control)
        .def_readonly("h", &SafeControl::h)
        .def_readonly("active", &SafeControl::active)
        .def_readonly("slack", &SafeControl::slack)
        .def_readonly("degenerate", &SafeControl::degenerate);

    m.def("barrier_value", &barrier_value, py::arg("state"), py::arg("params"));
    m.def(
        "constraint_coefficients",
        [](const UnicycleState& s, const CbfParams& p) {
            const ConstraintRow r = constraint_coefficients(s, p);
            return std::make_pair(r.a_v, r.a_omega);
        },
        py::arg("state"), py::arg("params"));
    m.def("solve_safe_control", &solve_safe_control, py::arg("state"), py::arg("proposal"), py::arg("params"));
    m.def("oracle_solve", &oracle_solve, py::arg("state"), py::arg("proposal"), py::arg("params"),
          py::arg("resolution") = 1e-9);
    m.def(
        "run_oracle_suite",
        [](std::size_t n, unsigned long long seed, double resolution) {
            const OracleSuiteReport r = run_oracle_suite(n, seed, resolution);
            py::dict d;
            d["instances"] = r.instances;
            d["max_objective_gap"] = r.max_objective_gap;
            d["min_constraint_residual"] = r.min_constraint_residual;
            d["seconds"] = r.seconds;
            return d;
        },
        py::arg("instances"), py::arg("seed") = 1, py::arg("resolution") = 1e-9);

    py::class_<WorldConfig>(m, "WorldConfig")
        .def(py::init<>())
        .def_readwrite("arena_half_extent", &WorldConfig::arena_half_extent)
        .def_readwrite("obstacle_radius", &WorldConfig::obstacle_radius)
        .def_readwrite("goal_radius", &WorldConfig::goal_radius)
        .def_readwrite("agent_radius", &WorldConfig::agent_radius)
        .def_readwrite("v_des", &WorldConfig::v_des)
        .def_readwrite("dt", &WorldConfig::dt)
        .def_readwrite("max_steps", &WorldConfig::max_steps)
        .def_readwrite("goal_reward", &WorldConfig::goal_reward)
        .def_readwrite("collision_reward", &WorldConfig::collision_reward)
        .def("validate", &WorldConfig::validate);

    py::class_<Observation>(m, "Observation")
        .def(py::init<>())
        .def_readwrite("goal_rel", &Observation::goal_rel)
        .def_readwrite("obstacle_rel", &Observation::obstacle_rel)
        .def("as_vector", &Observation::as_vector);

    py::class_<World>(m, "World")
        .def(py::init<>())
        .def_readwrite("agent", &World::agent)
        .def_readwrite("goal", &World::goal)
        .def_readwrite("obstacle", &World::obstacle)
        .def_readwrite("step_count", &World::step_count);

    py::class_<StepResult>(m, "StepResult")
        .def_readonly("observation", &StepResult::observation)
        .def_readonly("reward", &StepResult::reward)
        .def_readonly("terminated", &StepResult::terminated)
        .def_readonly("truncated", &StepResult::truncated)
        .def_property_readonly("collision", [](const StepResult& r) { return r.info.collision; });

    py::class_<Rng>(m, "Rng").def(py::init<std::uint64_t>(), py::arg("seed"));

    m.def("observe", &observe, py::arg("world"));
    m.def("barrier_for", &barrier_for, py::arg("world"), py::arg("base"));
    m.def("reset", &reset, py::arg("config"), py::arg("barrier"), py::arg("rng"));
    m.def("env_step", &env_step, py::arg("world"), py::arg("executed"), py::arg("config"));

    py::enum_<Mode>(m, "Mode")
        .value("sac", Mode::sac)
        .value("filter", Mode::filter)
        .value("reward", Mode::reward)
        .value("decay", Mode::decay);

    py::class_<ModeConfig>(m, "ModeConfig")
        .def(py::init([](Mode mode, std::int64_t total_steps, double scale) {
                 return ModeConfig{mode, total_steps, scale};
             }),
             py::arg("mode"), py::arg("total_steps") = 300000, py::arg("reward_penalty_scale") = 1.0)
        .def_readwrite("mode", &ModeConfig::mode)
        .def_readwrite("total_steps", &ModeConfig::total_steps)
        .def_readwrite("reward_penalty_scale", &ModeConfig::reward_penalty_scale);

    py::class_<ActionResolution>(m, "ActionResolution")
        .def_readonly("proposed", &ActionResolution::proposed)
        .def_readonly("cbf", &ActionResolution::cbf)
        .def_readonly("executed", &ActionResolution::executed)
        .def_readonly("cbf_active", &ActionResolution::cbf_active)
        .def_readonly("h", &ActionResolution::h)
        .def_readonly("beta", &ActionResolution::beta)
        .def_readonly("slack", &ActionResolution::slack);

    m.def("decay_beta", &decay_beta, py::arg("t"), py::arg("total"));
    m.def("resolve_action", &resolve_action, py::arg("mode"), py::arg("state"), py::arg("omega_pi"),
          py::arg("params"), py::arg("t"));
    m.def("shaped_reward", &shaped_reward, py::arg("mode"), py::arg("env_reward"), py::arg("resolution"),
          py::arg("v_des"));

    py::class_<SacAgent>(m, "Agent")
        .def("mean_action", &SacAgent::mean_action, py::arg("observation"))
        .def("critic_value", &SacAgent::critic_value, py::arg("which"), py::arg("observation"), py::arg("omega"))
        .def("estimate_state_value", &SacAgent::estimate_state_value, py::arg("observation"))
        .def_property_readonly("alpha", &SacAgent::alpha);

    m.def(
        "load_agent",
        [](const std::string& path) {
            LoadedCheckpoint ck = load_checkpoint(path);
            return std::move(ck.agent);
        },
        py::arg("path"));

    m.def(
        "evaluate_checkpoint",
        [](const std::string& path, int episodes, bool cbf_on) {
            const LoadedCheckpoint ck = load_checkpoint(path);
            const EvalSummary s = evaluate_policy(mean_policy(*ck.agent), ck.config.world, ck.config.cbf, episodes,
                                                  cbf_on, eval_seed(ck.config.train.seed));
            py::dict d;
            d["mean_reward"] = s.mean_reward;
            d["mean_length"] = s.mean_length;
            d["activation_pct"] = s.activation_pct;
            d["collision_steps"] = s.collision_steps;
            d["goals"] = s.goals;
            return d;
        },
        py::arg("path"), py::arg("episodes") = 15, py::arg("cbf_on") = true);

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_IOError);
    py::register_exception<SamplingExhausted>(m, "SamplingExhausted", PyExc_RuntimeError);
}
