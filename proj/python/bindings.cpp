#include <functional>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "stormgen/advection.hpp"
#include "stormgen/errors.hpp"
#include "stormgen/inference.hpp"
#include "stormgen/marginals.hpp"
#include "stormgen/simulation.hpp"
#include "stormgen/validation.hpp"

namespace py = pybind11;
using namespace stormgen;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Velocity to_velocity(std::pair<double, double> v) { return {v.first, v.second}; }
std::pair<double, double> from_velocity(Velocity v) { return {v.x, v.y}; }

std::vector<Site> sites_from(const Array& coords) {
  if (coords.ndim() != 2 || coords.shape(1) != 2) throw std::invalid_argument("coords must have shape (n, 2)");
  auto c = coords.unchecked<2>();
  std::vector<Site> sites;
  for (py::ssize_t i = 0; i < c.shape(0); ++i)
    sites.push_back({std::to_string(i), {c(i, 0), c(i, 1)}});
  return sites;
}

// values has shape (n_steps, n_sites); NaN marks a missing observation.
SpaceTimeData data_from(const Array& values, const Array& coords, std::int64_t start_time,
                        std::int64_t step_seconds) {
  auto sites = sites_from(coords);
  if (values.ndim() != 2 || static_cast<std::size_t>(values.shape(1)) != sites.size())
    throw std::invalid_argument("values must have shape (n_steps, n_sites)");
  SpaceTimeData data(std::move(sites), static_cast<std::size_t>(values.shape(0)), start_time, step_seconds);
  std::copy_n(values.data(), values.size(), data.values().begin());
  return data;
}

SimulationDomain domain_from(const Array& coords, int n_steps, std::size_t conditioning) {
  SimulationDomain d;
  for (const auto& s : sites_from(coords)) d.points.push_back(s.pos);
  d.n_steps = n_steps;
  d.conditioning = conditioning;
  return d;
}

// Space-time vectors are laid out time-major.
py::array_t<double> grid_array(const std::vector<double>& v, int n_steps, std::size_t n_points) {
  py::array_t<double> out({static_cast<py::ssize_t>(n_steps), static_cast<py::ssize_t>(n_points)});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::array_t<double> vectorize(const Array& x, const std::function<double(double)>& f) {
  py::array_t<double> out(x.request().shape);
  const double* in = x.data();
  double* o = out.mutable_data();
  for (py::ssize_t i = 0; i < x.size(); ++i) o[i] = f(in[i]);
  return out;
}

LikelihoodData likelihood_from(const EpisodeCatalog& catalog, double u, int max_tau) {
  return prepare_likelihood(catalog, u, exact_lag_classes(catalog.sites, max_tau));
}

py::dict episode_dict(const Episode& e) {
  py::dict d;
  d["id"] = e.id;
  d["site"] = e.site;
  d["t0"] = e.t0;
  d["delta"] = e.delta;
  d["v_emp"] = e.v_emp ? py::cast(from_velocity(*e.v_emp)) : py::none();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings for the stormgen C++ core.";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<FitError>(m, "FitError", PyExc_RuntimeError);
  py::register_exception<NoVelocityError>(m, "NoVelocityError", PyExc_RuntimeError);
  py::register_exception<FactorizationError>(m, "FactorizationError", PyExc_RuntimeError);

  py::class_<EgpdParams>(m, "EgpdParams")
      .def(py::init([](double xi, double sigma, double kappa) { return EgpdParams{xi, sigma, kappa}; }),
           py::arg("xi"), py::arg("sigma"), py::arg("kappa"))
      .def_readwrite("xi", &EgpdParams::xi)
      .def_readwrite("sigma", &EgpdParams::sigma)
      .def_readwrite("kappa", &EgpdParams::kappa)
      .def("__repr__", [](const EgpdParams& p) {
        return "EgpdParams(xi=" + std::to_string(p.xi) + ", sigma=" + std::to_string(p.sigma) +
               ", kappa=" + std::to_string(p.kappa) + ")";
      });

  py::class_<MarginalModel>(m, "MarginalModel")
      .def(py::init([](double p0, EgpdParams egpd) { return MarginalModel{p0, egpd}; }), py::arg("p0"),
           py::arg("egpd"))
      .def_readwrite("p0", &MarginalModel::p0)
      .def_readwrite("egpd", &MarginalModel::egpd);

  py::class_<EgpdFit>(m, "EgpdFit")
      .def_readonly("params", &EgpdFit::params)
      .def_readonly("loglik", &EgpdFit::loglik)
      .def_readonly("std_errors", &EgpdFit::std_errors)
      .def_readonly("n", &EgpdFit::n)
      .def_readonly("n_censored", &EgpdFit::n_censored);

  py::class_<VariogramParams>(m, "VariogramParams")
      .def(py::init([](double b1, double b2, double a1, double a2) { return VariogramParams{b1, b2, a1, a2}; }),
           py::arg("beta1"), py::arg("beta2"), py::arg("alpha1"), py::arg("alpha2"))
      .def_readwrite("beta1", &VariogramParams::beta1)
      .def_readwrite("beta2", &VariogramParams::beta2)
      .def_readwrite("alpha1", &VariogramParams::alpha1)
      .def_readwrite("alpha2", &VariogramParams::alpha2);

  py::class_<AdvectionTransform>(m, "AdvectionTransform")
      .def(py::init([](double e1, double e2) { return AdvectionTransform{e1, e2}; }), py::arg("eta1"),
           py::arg("eta2"))
      .def_readwrite("eta1", &AdvectionTransform::eta1)
      .def_readwrite("eta2", &AdvectionTransform::eta2);

  py::class_<FitResult>(m, "FitResult")
      .def_property_readonly("params", [](const FitResult& r) { return to_array(r.params); })
      .def_property_readonly("theta", [](const FitResult& r) { return r.params.theta; })
      .def_property_readonly("adv", [](const FitResult& r) { return r.params.adv; })
      .def_readonly("loglik", &FitResult::loglik)
      .def_readonly("n_episodes", &FitResult::n_episodes)
      .def_readonly("converged", &FitResult::converged)
      .def_readonly("evaluations", &FitResult::evaluations)
      .def_readonly("message", &FitResult::message);

  py::class_<EpisodeCatalog>(m, "Catalog")
      .def_property_readonly("n_episodes", [](const EpisodeCatalog& c) { return c.episodes.size(); })
      .def_property_readonly("n_sites", &EpisodeCatalog::n_sites)
      .def_readonly("threshold", &EpisodeCatalog::threshold)
      .def_property_readonly("episodes", [](const EpisodeCatalog& c) {
        py::list out;
        for (const auto& e : c.episodes) out.append(episode_dict(e));
        return out;
      });

  // Marginals
  m.def("egpd_cdf", [](const Array& x, const EgpdParams& p) {
    validate(p);
    return vectorize(x, [&](double v) { return egpd_cdf(v, p); });
  }, py::arg("x"), py::arg("params"));
  m.def("egpd_quantile", [](const Array& u, const EgpdParams& p) {
    validate(p);
    return vectorize(u, [&](double v) { return egpd_quantile(v, p); });
  }, py::arg("u"), py::arg("params"));
  m.def("fit_egpd", [](const Array& values, double precision, int multiplier) {
    std::vector<double> v(values.data(), values.data() + values.size());
    return fit_egpd_censored(v, CensoringSpec{precision, multiplier});
  }, py::arg("values"), py::arg("precision"), py::arg("multiplier") = 1,
     "Censored maximum likelihood fit of the EGPD to positive amounts.");

  // Dependence
  m.def("variogram", [](std::pair<double, double> h, double tau, const VariogramParams& theta,
                        std::pair<double, double> v) {
    return variogram(to_velocity(h), tau, theta, to_velocity(v));
  }, py::arg("h"), py::arg("tau"), py::arg("theta"), py::arg("v") = std::pair{0.0, 0.0});
  m.def("chi_r", [](std::pair<double, double> h, double tau, const VariogramParams& theta,
                    std::pair<double, double> v) {
    return chi_r(to_velocity(h), tau, theta, to_velocity(v));
  }, py::arg("h"), py::arg("tau"), py::arg("theta"), py::arg("v") = std::pair{0.0, 0.0});
  m.def("inverse_chi", &inverse_chi, py::arg("chi"));
  m.def("transform_advection", [](std::pair<double, double> v, const AdvectionTransform& adv) {
    return from_velocity(transform_advection(to_velocity(v), adv));
  }, py::arg("v_emp"), py::arg("adv"));

  // Episodes and advection
  m.def("select_episodes", [](const Array& values, const Array& coords, double q, int delta,
                              double min_separation, std::int64_t step_seconds) {
    const auto data = data_from(values, coords, 0, step_seconds);
    const double u = threshold_from_quantile(data, q);
    EpisodeConfig cfg{.q = q, .delta = delta, .min_separation = min_separation};
    return select_episodes(data, u, cfg);
  }, py::arg("values"), py::arg("coords"), py::arg("q") = 0.95, py::arg("delta") = 12,
     py::arg("min_separation") = 1200.0, py::arg("step_seconds") = 300);
  m.def("estimate_velocity", [](const Array& values, const Array& coords, std::int64_t t_start,
                                std::int64_t t_end) {
    const auto data = data_from(values, coords, 0, 1);
    const auto est = estimate_velocity(data, t_start, t_end);
    return py::make_tuple(from_velocity(est.v), est.n_displacements);
  }, py::arg("values"), py::arg("coords"), py::arg("t_start"), py::arg("t_end"),
     "Mean barycenter displacement in coordinate units per step over [t_start, t_end].");

  // Inference
  m.def("composite_loglik", [](const VariogramParams& theta, const AdvectionTransform& adv,
                               const EpisodeCatalog& catalog, double u, int max_tau) {
    return composite_loglik(ExtendedParams{theta, adv}, likelihood_from(catalog, u, max_tau));
  }, py::arg("theta"), py::arg("adv"), py::arg("catalog"), py::arg("u"), py::arg("max_tau"));
  m.def("fit_variogram", [](const EpisodeCatalog& catalog, double u, int max_tau, const VariogramParams& theta0,
                            const AdvectionTransform& adv0, std::optional<AdvectionTransform> fixed_adv) {
    FitSettings s;
    s.init = {theta0, adv0};
    s.fixed_adv = fixed_adv;
    py::gil_scoped_release release;
    return fit_variogram(likelihood_from(catalog, u, max_tau), s);
  }, py::arg("catalog"), py::arg("u"), py::arg("max_tau"), py::arg("theta0"),
     py::arg("adv0") = AdvectionTransform{}, py::arg("fixed_adv") = std::nullopt);

  // Simulation
  m.def("simulate_rpareto", [](const Array& coords, int n_steps, std::size_t conditioning,
                               const VariogramParams& theta, std::pair<double, double> v, std::uint64_t seed) {
    const auto domain = domain_from(coords, n_steps, conditioning);
    const auto draw = simulate_rpareto(domain, theta, to_velocity(v), seed);
    return py::make_tuple(grid_array(draw.y, n_steps, domain.n_points()), draw.r);
  }, py::arg("coords"), py::arg("n_steps"), py::arg("conditioning"), py::arg("theta"),
     py::arg("v") = std::pair{0.0, 0.0}, py::arg("seed") = 0);
  m.def("standardize_g", &standardize_G, py::arg("z"), py::arg("p0"));
  m.def("generate_episode", [](const Array& coords, int n_steps, std::size_t conditioning,
                               const VariogramParams& theta, std::pair<double, double> v_emp,
                               const AdvectionTransform& adv, double u, const MarginalModel& marginal,
                               std::uint64_t seed, std::optional<double> precision) {
    const auto domain = domain_from(coords, n_steps, conditioning);
    const auto sim = generate_episode(domain, theta, to_velocity(v_emp), adv, u, marginal, seed, precision);
    py::dict d;
    d["y"] = grid_array(sim.y, n_steps, domain.n_points());
    d["x"] = grid_array(sim.x, n_steps, domain.n_points());
    d["r"] = sim.r;
    d["v"] = from_velocity(sim.v);
    return d;
  }, py::arg("coords"), py::arg("n_steps"), py::arg("conditioning"), py::arg("theta"), py::arg("v_emp"),
     py::arg("adv"), py::arg("u"), py::arg("marginal"), py::arg("seed") = 0, py::arg("precision") = std::nullopt);
  m.def("simulate_catalog", [](const Array& coords, int n_steps, std::size_t n_episodes,
                               const VariogramParams& theta, const AdvectionTransform& adv,
                               double min_speed, double max_speed, std::uint64_t seed) {
    const auto sites = sites_from(coords);
    py::gil_scoped_release release;
    return simulate_pareto_catalog(sites, n_steps, n_episodes, theta, adv, {min_speed, max_speed}, seed);
  }, py::arg("coords"), py::arg("n_steps"), py::arg("n_episodes"), py::arg("theta"), py::arg("adv"),
     py::arg("min_speed") = 0.5, py::arg("max_speed") = 1.5, py::arg("seed") = 0,
     "Episodes of r-Pareto fields with random advection, on the Pareto scale (threshold 1).");

  m.def("run_recovery", [](const VariogramParams& theta, const AdvectionTransform& adv, bool fix_advection,
                           std::size_t n_fits, std::size_t n_episodes, int n_steps, std::size_t grid_side,
                           std::uint64_t seed) {
    RecoverySetting s;
    s.truth = {theta, adv};
    s.fix_advection = fix_advection;
    s.n_fits = n_fits;
    s.n_episodes = n_episodes;
    s.n_steps = n_steps;
    s.grid_side = grid_side;
    s.seed = seed;
    RecoveryResult r;
    {
      py::gil_scoped_release release;
      r = run_recovery(s);
    }
    py::dict d;
    d["median"] = r.median;
    d["relative_error"] = r.relative_error;
    py::list fits;
    for (const auto& run : r.runs) fits.append(to_array(run.fit.params));
    d["fits"] = fits;
    return d;
  }, py::arg("theta"), py::arg("adv"), py::arg("fix_advection") = false, py::arg("n_fits") = 10,
     py::arg("n_episodes") = 200, py::arg("n_steps") = 24, py::arg("grid_side") = 7, py::arg("seed") = 0);
}
