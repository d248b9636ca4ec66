#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "agneslab/analysis.hpp"
#include "agneslab/experiment.hpp"
#include "agneslab/noise.hpp"
#include "agneslab/objectives.hpp"
#include "agneslab/optim.hpp"
#include "agneslab/overparam.hpp"
#include "agneslab/params.hpp"
#include "agneslab/rng.hpp"

namespace py = pybind11;
using namespace agneslab;

namespace {

optim::MomentumSchedule schedule_from_args(const std::string& kind, double value) {
  if (kind == "constant") return optim::MomentumSchedule::constant(value);
  if (kind == "polynomial") return optim::MomentumSchedule::polynomial(value);
  throw ContractViolation("schedule kind must be 'constant' or 'polynomial'");
}

params::Theorem theorem_from_name(const std::string& name) {
  if (name == "nag_convex") return params::Theorem::nag_convex;
  if (name == "nag_strongly_convex") return params::Theorem::nag_strongly_convex;
  if (name == "agnes_convex") return params::Theorem::agnes_convex;
  if (name == "agnes_strongly_convex") return params::Theorem::agnes_strongly_convex;
  if (name == "gd_convex") return params::Theorem::gd_convex;
  if (name == "gd_pl") return params::Theorem::gd_pl;
  if (name == "non_convex") return params::Theorem::non_convex;
  throw ContractViolation("unknown theorem name: " + name);
}

}  // namespace

PYBIND11_MODULE(_agneslab, m) {
  m.doc() = "Stochastic first-order optimization lab: SGD, NAG, and AGNES "
            "under multiplicative gradient noise";

  py::register_exception<ContractViolation>(m, "ContractViolation");
  py::register_exception<AdmissibilityError>(m, "AdmissibilityError");
  py::register_exception<UnsupportedConfiguration>(m, "UnsupportedConfiguration");
  py::register_exception<ConfigError>(m, "ConfigurationError");

  // --- objectives ---------------------------------------------------------
  py::class_<objectives::Constants>(m, "Constants")
      .def_readonly("L", &objectives::Constants::L)
      .def_readonly("mu", &objectives::Constants::mu)
      .def_readonly("mu_pl", &objectives::Constants::mu_pl)
      .def_readonly("inf_f", &objectives::Constants::inf_f)
      .def_readonly("minimizer", &objectives::Constants::minimizer);

  py::class_<objectives::Objective>(m, "Objective")
      .def_static("power_hinge", &objectives::Objective::power_hinge, py::arg("d"))
      .def_static("quadratic2d", &objectives::Objective::quadratic2d,
                  py::arg("mu"), py::arg("L"))
      .def_static("quadratic_nd", &objectives::Objective::quadratic_nd,
                  py::arg("eigenvalues"))
      .def_static("softplus_mirror", &objectives::Objective::softplus_mirror)
      .def_static("sine_valley", &objectives::Objective::sine_valley)
      .def_property_readonly("dimension", &objectives::Objective::dimension)
      .def("eval", &objectives::Objective::eval, py::arg("x"))
      .def("grad",
           [](const objectives::Objective& o, const Vec& x) { return o.grad(x); },
           py::arg("x"))
      .def("constants", &objectives::Objective::constants)
      .def("__repr__", [](const objectives::Objective& o) {
        return "<Objective " + o.name() + ">";
      });

  // --- noise ---------------------------------------------------------------
  py::class_<RngStream>(m, "RngStream")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def_static("substream", &RngStream::substream, py::arg("master_seed"),
                  py::arg("index"))
      .def_property_readonly("seed", &RngStream::seed)
      .def_property_readonly("counter", &RngStream::counter)
      .def("next_uniform", &RngStream::next_uniform)
      .def("next_normal", &RngStream::next_normal);

  py::class_<noise::NoiseModel>(m, "NoiseModel")
      .def_static("exact", &noise::NoiseModel::exact)
      .def_static("collinear", &noise::NoiseModel::collinear, py::arg("sigma"))
      .def_static("isotropic", &noise::NoiseModel::isotropic, py::arg("sigma"))
      .def_static("orthogonal", &noise::NoiseModel::orthogonal, py::arg("sigma"))
      .def_static("fixed_direction", &noise::NoiseModel::fixed_direction,
                  py::arg("sigma"), py::arg("direction"))
      .def_static("bernoulli_direction", &noise::NoiseModel::bernoulli_direction,
                  py::arg("sigma"), py::arg("direction"))
      .def_static("batched", &noise::NoiseModel::batched, py::arg("inner"),
                  py::arg("n_b"))
      .def_property_readonly("effective_sigma_sq",
                             &noise::NoiseModel::effective_sigma_sq)
      .def("sample",
           [](const noise::NoiseModel& nm, const Vec& g, RngStream& rng) {
             return nm.sample(g, rng);
           },
           py::arg("gradient"), py::arg("rng"));

  m.def("empirical_moments",
        [](const noise::NoiseModel& nm, const Vec& g, long draws, RngStream& rng) {
          const auto mo = noise::empirical_moments(nm, g, draws, rng);
          return py::make_tuple(mo.mean, mo.second_central);
        },
        py::arg("model"), py::arg("gradient"), py::arg("draws"), py::arg("rng"));

  // --- optimizers ----------------------------------------------------------
  py::class_<optim::OptimizerConfig>(m, "OptimizerConfig")
      .def_static("sgd", &optim::OptimizerConfig::sgd, py::arg("eta"))
      .def_static("nag",
                  [](double eta, const std::string& kind, double value) {
                    return optim::OptimizerConfig::nag(eta,
                                                       schedule_from_args(kind, value));
                  },
                  py::arg("eta"), py::arg("schedule_kind"), py::arg("schedule_value"))
      .def_static("agnes",
                  [](double eta, double alpha, const std::string& kind, double value) {
                    return optim::OptimizerConfig::agnes(
                        eta, alpha, schedule_from_args(kind, value));
                  },
                  py::arg("eta"), py::arg("alpha"), py::arg("schedule_kind"),
                  py::arg("schedule_value"))
      .def_static("general_agnes",
                  [](double eta, double g1, double g2, const std::string& kind,
                     double value) {
                    return optim::OptimizerConfig::general_agnes(
                        eta, g1, g2, schedule_from_args(kind, value));
                  },
                  py::arg("eta"), py::arg("gamma1"), py::arg("gamma2"),
                  py::arg("schedule_kind"), py::arg("schedule_value"))
      .def_readwrite("eta", &optim::OptimizerConfig::eta)
      .def_readwrite("alpha", &optim::OptimizerConfig::alpha)
      .def_readwrite("final_gradient_step",
                     &optim::OptimizerConfig::final_gradient_step)
      .def_property(
          "report",
          [](const optim::OptimizerConfig& c) {
            return c.report == optim::ReportPoint::iterate ? "iterate"
                                                           : "query_point";
          },
          [](optim::OptimizerConfig& c, const std::string& r) {
            if (r == "iterate") {
              c.report = optim::ReportPoint::iterate;
            } else if (r == "query_point") {
              c.report = optim::ReportPoint::query_point;
            } else {
              throw ContractViolation("report must be 'iterate' or 'query_point'");
            }
          });

  py::class_<optim::Trajectory>(m, "Trajectory")
      .def_readonly("f_query", &optim::Trajectory::f_query)
      .def_readonly("f_iterate", &optim::Trajectory::f_iterate)
      .def_readonly("grad_sq_query", &optim::Trajectory::grad_sq_query)
      .def_property_readonly("diverged", [](const optim::Trajectory& t) {
        std::vector<bool> out(t.diverged.begin(), t.diverged.end());
        return out;
      });

  m.def("run",
        [](const optim::OptimizerConfig& cfg, const objectives::Objective& obj,
           const noise::NoiseModel& nm, const Vec& x0, long iters,
           std::uint64_t seed) { return optim::run(cfg, obj, nm, x0, iters, seed); },
        py::arg("config"), py::arg("objective"), py::arg("noise"), py::arg("x0"),
        py::arg("iters"), py::arg("seed"));

  m.def("check_formulation_equivalence",
        [](const optim::OptimizerConfig& cfg, const objectives::Objective& obj,
           const noise::NoiseModel& nm, const Vec& x0, long iters,
           std::uint64_t seed) {
          return optim::check_formulation_equivalence(cfg, obj, nm, x0, iters, seed);
        },
        py::arg("config"), py::arg("objective"), py::arg("noise"), py::arg("x0"),
        py::arg("iters"), py::arg("seed"));

  m.def("check_gamma_invariance",
        [](double eta, double rho, double g1a, double g2a, double g1b, double g2b,
           const objectives::Objective& obj, const noise::NoiseModel& nm,
           const Vec& x0, long iters, std::uint64_t seed) {
          return optim::check_gamma_invariance(eta, rho, g1a, g2a, g1b, g2b, obj,
                                               nm, x0, iters, seed);
        });

  // --- parameter derivations ----------------------------------------------
  py::class_<params::ProblemClass>(m, "ProblemClass")
      .def(py::init([](double L, std::optional<double> mu,
                       std::optional<double> mu_pl, double sigma) {
             params::ProblemClass pc;
             pc.L = L;
             pc.mu = mu;
             pc.mu_pl = mu_pl;
             pc.sigma = sigma;
             pc.validate();
             return pc;
           }),
           py::arg("L"), py::arg("mu") = std::nullopt,
           py::arg("mu_pl") = std::nullopt, py::arg("sigma") = 0.0)
      .def_readonly("L", &params::ProblemClass::L)
      .def_readonly("mu", &params::ProblemClass::mu)
      .def_readonly("mu_pl", &params::ProblemClass::mu_pl)
      .def_readonly("sigma", &params::ProblemClass::sigma);

  m.def("agnes_convex_params", [](const params::ProblemClass& pc) {
    const auto p = params::agnes_convex_params(pc);
    return py::make_tuple(p.eta, p.alpha, p.n0);
  });
  m.def("agnes_strongly_convex_params", [](const params::ProblemClass& pc) {
    const auto p = params::agnes_strongly_convex_params(pc);
    return py::make_tuple(p.eta, p.alpha, p.rho);
  });
  m.def("agnes_sc_general_params",
        [](const params::ProblemClass& pc, double eta, double psi, double mu_used) {
          const auto p = params::agnes_sc_general_params(pc, eta, psi, mu_used);
          return py::make_tuple(p.rho, p.alpha, p.decay);
        });
  m.def("agnes_sc_param_inverse", &params::agnes_sc_param_inverse, py::arg("eta"),
        py::arg("rho"), py::arg("alpha"));
  m.def("nag_convex_params", [](const params::ProblemClass& pc) {
    return params::nag_convex_params(pc).eta;
  });
  m.def("nag_strongly_convex_params", [](const params::ProblemClass& pc) {
    const auto p = params::nag_strongly_convex_params(pc);
    return py::make_tuple(p.eta, p.rho);
  });
  m.def("sgd_params", [](const params::ProblemClass& pc) {
    const auto p = params::sgd_params(pc);
    return py::make_tuple(p.eta, p.n0);
  });
  m.def("bound_curve",
        [](const std::string& theorem, const params::ProblemClass& pc,
           double f_gap0, double dist_sq0, long n_max,
           std::optional<std::tuple<double, double, double>> non_convex) {
          params::Anchors anchors;
          anchors.f_gap0 = f_gap0;
          anchors.dist_sq0 = dist_sq0;
          std::optional<params::NonConvexParams> ncp;
          if (non_convex) {
            ncp = params::NonConvexParams{std::get<0>(*non_convex),
                                          std::get<1>(*non_convex),
                                          std::get<2>(*non_convex)};
          }
          return params::bound_curve(theorem_from_name(theorem), pc, anchors,
                                     n_max, ncp);
        },
        py::arg("theorem"), py::arg("pc"), py::arg("f_gap0"), py::arg("dist_sq0"),
        py::arg("n_max"), py::arg("non_convex") = std::nullopt);

  // --- ensembles ------------------------------------------------------------
  py::class_<analysis::EnsembleStats>(m, "EnsembleStats")
      .def_readonly("runs", &analysis::EnsembleStats::runs)
      .def_readonly("iters", &analysis::EnsembleStats::iters)
      .def_readonly("mean_f", &analysis::EnsembleStats::mean_f)
      .def_readonly("sem_f", &analysis::EnsembleStats::sem_f)
      .def_readonly("mean_f_iterate", &analysis::EnsembleStats::mean_f_iterate)
      .def_readonly("sem_f_iterate", &analysis::EnsembleStats::sem_f_iterate)
      .def_readonly("mean_f_query", &analysis::EnsembleStats::mean_f_query)
      .def_readonly("sem_f_query", &analysis::EnsembleStats::sem_f_query)
      .def_readonly("mean_grad_sq", &analysis::EnsembleStats::mean_grad_sq)
      .def_readonly("sem_grad_sq", &analysis::EnsembleStats::sem_grad_sq)
      .def_readonly("diverged_fraction", &analysis::EnsembleStats::diverged_fraction);

  m.def("run_ensemble",
        [](const optim::OptimizerConfig& cfg, const objectives::Objective& obj,
           const noise::NoiseModel& nm, const Vec& x0, long iters, int runs,
           std::uint64_t master_seed, int threads) {
          analysis::EnsembleOptions opts;
          opts.iters = iters;
          opts.runs = runs;
          opts.master_seed = master_seed;
          opts.threads = threads;
          return analysis::run_ensemble(cfg, obj, nm, x0, opts).stats;
        },
        py::arg("config"), py::arg("objective"), py::arg("noise"), py::arg("x0"),
        py::arg("iters"), py::arg("runs"), py::arg("master_seed"),
        py::arg("threads") = 0);

  m.def("loglog_slope",
        [](const std::vector<double>& mean_f, double tail) {
          return analysis::loglog_slope(mean_f, tail);
        },
        py::arg("mean_f"), py::arg("tail_fraction"));

  // --- overparameterized least squares --------------------------------------
  py::class_<overparam::RandomFeatureModel>(m, "RandomFeatureModel")
      .def(py::init([](overparam::Matrix features, overparam::Matrix labels,
                       overparam::Matrix weights) {
             overparam::RandomFeatureModel model;
             model.features = std::move(features);
             model.labels = std::move(labels);
             model.weights = std::move(weights);
             model.validate();
             return model;
           }),
           py::arg("features"), py::arg("labels"), py::arg("weights"))
      .def_static("random", &overparam::RandomFeatureModel::random,
                  py::arg("samples"), py::arg("width"), py::arg("outputs"),
                  py::arg("rng"))
      .def_readwrite("features", &overparam::RandomFeatureModel::features)
      .def_readwrite("labels", &overparam::RandomFeatureModel::labels)
      .def_readwrite("weights", &overparam::RandomFeatureModel::weights)
      .def_property_readonly("feature_norm_bound",
                             &overparam::RandomFeatureModel::feature_norm_bound);

  m.def("risk", &overparam::risk);
  m.def("per_sample_grad", &overparam::per_sample_grad, py::arg("model"),
        py::arg("i"));
  m.def("full_grad", &overparam::full_grad);
  m.def("noise_second_moment", &overparam::noise_second_moment);
  m.def("check_lemma_bound", [](const overparam::RandomFeatureModel& model) {
    const auto b = overparam::check_lemma_bound(model);
    return py::make_tuple(b.lhs, b.rhs, b.holds);
  });
  m.def("minibatch_oracle", &overparam::minibatch_oracle, py::arg("model"),
        py::arg("n_b"), py::arg("rng"));
  m.def("interpolating_weights", &overparam::interpolating_weights);

  // --- experiments -----------------------------------------------------------
  m.def("run_experiment_json",
        [](const std::string& json_text, const std::string& out_dir, int threads) {
          const auto config = experiment::parse_config(json_text);
          const auto outcome = experiment::run_experiment(config, out_dir, threads);
          return py::make_tuple(outcome.exit_code, outcome.report_lines,
                                outcome.written_files);
        },
        py::arg("json_text"), py::arg("out_dir"), py::arg("threads") = 0);
  m.def("run_preset",
        [](const std::string& name, const std::string& out_dir,
           std::optional<std::uint64_t> seed, int threads) {
          return experiment::run_preset(name, out_dir, seed, threads);
        },
        py::arg("name"), py::arg("out_dir"), py::arg("seed") = std::nullopt,
        py::arg("threads") = 0);
  m.def("preset_names", &experiment::preset_names);
}
