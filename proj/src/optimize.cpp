#include "stormgen/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace stormgen {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Counted {
  const Objective& f;
  int evaluations = 0;

  double operator()(std::span<const double> x) {
    ++evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : kInf;
  }
};

struct SimplexRun {
  std::vector<double> x;
  double value = kInf;
  bool converged = false;
  int iterations = 0;
};

SimplexRun run_simplex(Counted& f, const std::vector<double>& start, double start_value,
                       const NelderMeadOptions& opt) {
  const std::size_t n = start.size();
  std::vector<std::vector<double>> pts(n + 1, start);
  std::vector<double> vals(n + 1, start_value);
  for (std::size_t i = 0; i < n; ++i) {
    pts[i + 1][i] += opt.initial_step;
    vals[i + 1] = f(pts[i + 1]);
  }

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), trial2(n);
  SimplexRun run;

  while (f.evaluations < opt.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[n - 1];

    double spread = vals[worst] - vals[best];
    double size = 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
      for (std::size_t i = 0; i < n; ++i) size = std::max(size, std::abs(pts[k][i] - pts[best][i]));
    }
    if (std::isfinite(vals[best]) && spread <= opt.ftol_abs + opt.ftol_rel * std::abs(vals[best]) &&
        size <= opt.xtol) {
      run.converged = true;
      break;
    }
    ++run.iterations;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t k = 0; k <= n; ++k) {
      if (k == worst) continue;
      for (std::size_t i = 0; i < n; ++i) centroid[i] += pts[k][i];
    }
    for (double& c : centroid) c /= static_cast<double>(n);

    for (std::size_t i = 0; i < n; ++i) trial[i] = centroid[i] + (centroid[i] - pts[worst][i]);
    const double f_reflect = f(trial);

    if (f_reflect < vals[best]) {
      for (std::size_t i = 0; i < n; ++i) trial2[i] = centroid[i] + 2.0 * (centroid[i] - pts[worst][i]);
      const double f_expand = f(trial2);
      if (f_expand < f_reflect) {
        pts[worst] = trial2;
        vals[worst] = f_expand;
      } else {
        pts[worst] = trial;
        vals[worst] = f_reflect;
      }
      continue;
    }
    if (f_reflect < vals[second]) {
      pts[worst] = trial;
      vals[worst] = f_reflect;
      continue;
    }
    // Contraction, outside or inside.
    const bool outside = f_reflect < vals[worst];
    for (std::size_t i = 0; i < n; ++i) {
      trial2[i] = outside ? centroid[i] + 0.5 * (trial[i] - centroid[i])
                          : centroid[i] + 0.5 * (pts[worst][i] - centroid[i]);
    }
    const double f_contract = f(trial2);
    if (f_contract < (outside ? f_reflect : vals[worst])) {
      pts[worst] = trial2;
      vals[worst] = f_contract;
      continue;
    }
    // Shrink towards the best vertex.
    for (std::size_t k = 0; k <= n; ++k) {
      if (k == best) continue;
      for (std::size_t i = 0; i < n; ++i) pts[k][i] = pts[best][i] + 0.5 * (pts[k][i] - pts[best][i]);
      vals[k] = f(pts[k]);
    }
  }

  const auto it = std::min_element(vals.begin(), vals.end());
  run.x = pts[static_cast<std::size_t>(it - vals.begin())];
  run.value = *it;
  return run;
}

}  // namespace

OptimResult nelder_mead(const Objective& objective, std::vector<double> x0, const NelderMeadOptions& opt) {
  Counted f{objective};
  OptimResult result;
  result.x = std::move(x0);
  result.value = f(result.x);

  bool converged = false;
  for (int round = 0; round <= opt.restarts; ++round) {
    const double previous = result.value;
    SimplexRun run = run_simplex(f, result.x, result.value, opt);
    result.iterations += run.iterations;
    if (run.value <= result.value) {
      result.x = std::move(run.x);
      result.value = run.value;
    }
    converged = run.converged;
    if (!converged) break;
    if (round > 0 && std::isfinite(previous) &&
        previous - result.value <= opt.ftol_abs + opt.ftol_rel * std::abs(result.value)) {
      break;
    }
  }

  result.evaluations = f.evaluations;
  result.converged = converged && std::isfinite(result.value);
  if (!std::isfinite(result.value)) {
    result.message = "objective not finite at any visited point";
  } else if (!converged) {
    result.message = "evaluation budget exhausted before convergence";
  } else {
    result.message = "converged";
  }
  return result;
}

std::vector<double> numeric_gradient(const Objective& f, std::span<const double> x, double step) {
  std::vector<double> g(x.size());
  std::vector<double> xp(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + step;
    const double fp = f(xp);
    xp[i] = x[i] - step;
    const double fm = f(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

OptimResult bfgs(const Objective& objective, std::vector<double> x0, const BfgsOptions& opt) {
  Counted f{objective};
  const Objective counted = [&f](std::span<const double> x) { return f(x); };
  const std::size_t n = x0.size();

  OptimResult result;
  result.x = std::move(x0);
  result.value = f(result.x);
  if (!std::isfinite(result.value)) {
    result.evaluations = f.evaluations;
    result.message = "objective not finite at the starting point";
    return result;
  }

  std::vector<double> h(n * n, 0.0);  // inverse Hessian approximation
  for (std::size_t i = 0; i < n; ++i) h[i * n + i] = 1.0;
  std::vector<double> g = numeric_gradient(counted, result.x, opt.fd_step);
  std::vector<double> dir(n), x_new(n), s(n), y(n), hy(n);

  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    result.iterations = iter + 1;
    const double gmax = std::abs(*std::max_element(g.begin(), g.end(), [](double a, double b) {
      return std::abs(a) < std::abs(b);
    }));
    if (!std::isfinite(gmax)) {
      result.message = "non-finite gradient";
      break;
    }
    if (gmax <= opt.gtol) {
      result.converged = true;
      result.message = "converged (gradient)";
      break;
    }

    for (std::size_t i = 0; i < n; ++i) {
      dir[i] = 0.0;
      for (std::size_t j = 0; j < n; ++j) dir[i] -= h[i * n + j] * g[j];
    }
    double slope = std::inner_product(g.begin(), g.end(), dir.begin(), 0.0);
    if (slope >= 0.0) {  // not a descent direction: reset to steepest descent
      std::fill(h.begin(), h.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        h[i * n + i] = 1.0;
        dir[i] = -g[i];
      }
      slope = -std::inner_product(g.begin(), g.end(), g.begin(), 0.0);
    }

    double step = 1.0;
    double f_new = kInf;
    for (int k = 0; k < 40; ++k) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = result.x[i] + step * dir[i];
      f_new = f(x_new);
      if (f_new <= result.value + 1e-4 * step * slope) break;
      step *= 0.5;
    }
    if (!(f_new < result.value)) {
      result.converged = true;
      result.message = "converged (no further descent)";
      break;
    }

    const std::vector<double> g_new = numeric_gradient(counted, x_new, opt.fd_step);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = x_new[i] - result.x[i];
      y[i] = g_new[i] - g[i];
    }
    const double improvement = result.value - f_new;
    result.x = x_new;
    result.value = f_new;
    g = g_new;

    const double sy = std::inner_product(s.begin(), s.end(), y.begin(), 0.0);
    if (sy > 1e-12) {
      for (std::size_t i = 0; i < n; ++i) {
        hy[i] = 0.0;
        for (std::size_t j = 0; j < n; ++j) hy[i] += h[i * n + j] * y[j];
      }
      const double yhy = std::inner_product(y.begin(), y.end(), hy.begin(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          h[i * n + j] += ((sy + yhy) * s[i] * s[j]) / (sy * sy) - (hy[i] * s[j] + s[i] * hy[j]) / sy;
        }
      }
    }
    if (improvement <= opt.ftol_rel * std::abs(result.value)) {
      result.converged = true;
      result.message = "converged (objective change)";
      break;
    }
  }
  if (result.message.empty()) result.message = "iteration limit reached";
  result.evaluations = f.evaluations;
  return result;
}

}  // namespace stormgen
