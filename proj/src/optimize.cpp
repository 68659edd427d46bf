#include "laplab/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "laplab/error.hpp"

namespace laplab {

namespace {

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

void check_finite(double value, std::span<const double> grad, const std::string& tag) {
  if (!std::isfinite(value)) throw NonFiniteError("objective " + tag + " is not finite");
  for (double g : grad) {
    if (!std::isfinite(g)) throw NonFiniteError("gradient of " + tag + " is not finite");
  }
}

struct Pair {
  std::vector<double> s, y;
  double rho;
};

// Two-loop recursion for the ascent direction on -f (so it returns +H g).
std::vector<double> lbfgs_direction(const std::deque<Pair>& memory, std::span<const double> grad) {
  std::vector<double> q(grad.begin(), grad.end());
  std::vector<double> alpha(memory.size());
  for (std::size_t k = memory.size(); k-- > 0;) {
    alpha[k] = memory[k].rho * dot(memory[k].s, q);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha[k] * memory[k].y[i];
  }
  if (!memory.empty()) {
    const auto& last = memory.back();
    const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
    for (double& v : q) v *= gamma;
  }
  for (std::size_t k = 0; k < memory.size(); ++k) {
    const double beta = memory[k].rho * dot(memory[k].y, q);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] += memory[k].s[i] * (alpha[k] - beta);
  }
  return q;
}

// Solves information * dir = grad; false unless the matrix is positive definite.
bool newton_direction(const Objective& obj, std::span<const double> x, std::span<const double> grad,
                      std::vector<double>& dir) {
  const auto n = static_cast<Eigen::Index>(grad.size());
  auto info = obj.information(x);
  if (info.size() != grad.size() * grad.size()) return false;
  const Eigen::Map<const Eigen::MatrixXd> h(info.data(), n, n);
  const Eigen::LLT<Eigen::MatrixXd> llt(h);
  if (llt.info() != Eigen::Success) return false;
  const Eigen::VectorXd d = llt.solve(Eigen::Map<const Eigen::VectorXd>(grad.data(), n));
  if (!d.allFinite()) return false;
  dir.assign(d.data(), d.data() + n);
  return true;
}

}  // namespace

OptResult maximize(const Objective& obj, std::vector<double> init, const OptConfig& cfg) {
  if (init.size() != obj.dimension) throw std::invalid_argument("initial point has the wrong dimension");
  if (cfg.grad_tol <= 0 || cfg.max_iters < 0 || cfg.memory < 1) {
    throw std::invalid_argument("optimizer tolerances must be positive");
  }
  OptResult out{std::move(init), {}};
  auto& rep = out.report;
  const std::size_t n = obj.dimension;
  if (n == 0) {
    rep.converged = true;
    return out;
  }
  for (double v : out.x) {
    if (!std::isfinite(v)) throw NonFiniteError("initial point is not finite");
  }

  // Work on the negated objective internally: minimize f = -obj.
  std::vector<double> grad(n), trial(n), trial_grad(n);
  double value = obj.evaluate(out.x, grad);
  ++rep.evaluations;
  check_finite(value, grad, obj.tag);

  std::deque<Pair> memory;
  const bool use_newton = obj.information && n <= cfg.newton_max_dim;
  while (true) {
    rep.grad_norm = inf_norm(grad);
    rep.value = value;
    if (rep.grad_norm < cfg.grad_tol) {
      rep.converged = true;
      break;
    }
    if (rep.iterations >= cfg.max_iters) break;

    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      if (attempt == 1) memory.clear();  // fall back to steepest ascent
      std::vector<double> dir;
      const bool newton = attempt == 0 && use_newton && newton_direction(obj, out.x, grad, dir);
      if (!newton) dir = lbfgs_direction(memory, grad);
      double slope = dot(dir, grad);
      if (!(slope > 0)) {
        memory.clear();
        dir.assign(grad.begin(), grad.end());
        slope = dot(dir, grad);
      }
      double step = newton || !memory.empty() ? 1.0 : std::min(1.0, 1.0 / inf_norm(grad));
      for (int bt = 0; bt <= cfg.max_backtracks; ++bt, step *= cfg.backtrack) {
        for (std::size_t i = 0; i < n; ++i) trial[i] = out.x[i] + step * dir[i];
        const double tv = obj.evaluate(trial, trial_grad);
        ++rep.evaluations;
        if (!std::isfinite(tv)) continue;
        check_finite(tv, trial_grad, obj.tag);
        const bool armijo = tv >= value + cfg.sufficient_increase * step * slope;
        // Near the optimum rounding hides the change in value. For a concave
        // objective a nonnegative slope at the trial point still proves the
        // whole segment went uphill.
        const bool uphill = dot(dir, trial_grad) >= 0 && inf_norm(trial_grad) < rep.grad_norm;
        if (armijo || uphill) {
          Pair p{std::vector<double>(n), std::vector<double>(n), 0.0};
          for (std::size_t i = 0; i < n; ++i) {
            p.s[i] = trial[i] - out.x[i];
            p.y[i] = grad[i] - trial_grad[i];  // gradient of -obj
          }
          const double sy = dot(p.s, p.y);
          if (sy > 1e-16 * std::sqrt(dot(p.s, p.s) * dot(p.y, p.y))) {
            p.rho = 1.0 / sy;
            memory.push_back(std::move(p));
            if (memory.size() > static_cast<std::size_t>(cfg.memory)) memory.pop_front();
          }
          out.x.swap(trial);
          grad.swap(trial_grad);
          value = tv;
          accepted = true;
          break;
        }
      }
    }
    ++rep.iterations;
    if (accepted && cfg.observer) cfg.observer(rep.iterations, value);
    if (!accepted) {
      // No representable ascent step; the point is optimal to working precision.
      rep.grad_norm = inf_norm(grad);
      rep.value = value;
      rep.converged = rep.grad_norm < cfg.grad_tol;
      break;
    }
  }
  return out;
}

double check_gradient(const Objective& obj, std::span<const double> at, double h) {
  if (!(h > 0)) throw std::invalid_argument("finite difference step must be positive");
  const std::size_t n = obj.dimension;
  std::vector<double> grad(n), scratch(n), x(at.begin(), at.end());
  obj.evaluate(x, grad);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = obj.evaluate(x, scratch);
    x[i] = orig - h;
    const double down = obj.evaluate(x, scratch);
    x[i] = orig;
    const double fd = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(fd - grad[i]) / std::max(1.0, std::abs(grad[i])));
  }
  return worst;
}

Objective with_ridge(Objective obj, double strength) {
  if (strength < 0) throw std::invalid_argument("ridge strength must be non-negative");
  if (strength == 0) return obj;
  Objective out;
  out.dimension = obj.dimension;
  out.tag = obj.tag + "+ridge";
  auto inner = obj.evaluate;
  out.evaluate = [inner, strength](std::span<const double> x, std::span<double> g) {
    double v = inner(x, g);
    for (std::size_t i = 0; i < x.size(); ++i) {
      v -= 0.5 * strength * x[i] * x[i];
      g[i] -= strength * x[i];
    }
    return v;
  };
  if (obj.information) {
    auto info = obj.information;
    const std::size_t n = obj.dimension;
    out.information = [info, strength, n](std::span<const double> x) {
      auto h = info(x);
      for (std::size_t i = 0; i < n; ++i) h[i * n + i] += strength;
      return h;
    };
  }
  return out;
}

}  // namespace laplab
