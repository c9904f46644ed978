#include "spatial/optimize.hpp"

#include <cmath>
#include <limits>
#include <memory>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

namespace spatial {

namespace {

struct Closure {
  const Objective* f;
  Eigen::VectorXd scratch;
};

double trampoline(const gsl_vector* v, void* params) {
  auto* c = static_cast<Closure*>(params);
  for (Eigen::Index i = 0; i < c->scratch.size(); ++i) c->scratch(i) = gsl_vector_get(v, i);
  const double y = (*c->f)(c->scratch);
  return std::isfinite(y) ? y : std::numeric_limits<double>::max();
}

struct VectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
struct MinimizerDeleter {
  void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};

}  // namespace

SimplexResult minimize_simplex(const Objective& f, const Eigen::VectorXd& start,
                               const SimplexOptions& options) {
  const auto n = static_cast<std::size_t>(start.size());
  SimplexResult result;
  result.x = start;
  if (n == 0) {
    result.value = f(start);
    result.converged = true;
    return result;
  }
  gsl_set_error_handler_off();

  Closure closure{&f, Eigen::VectorXd(start.size())};
  gsl_multimin_function fn{&trampoline, n, &closure};

  std::unique_ptr<gsl_vector, VectorDeleter> x(gsl_vector_alloc(n));
  std::unique_ptr<gsl_vector, VectorDeleter> step(gsl_vector_alloc(n));
  for (std::size_t i = 0; i < n; ++i) gsl_vector_set(x.get(), i, start(static_cast<Eigen::Index>(i)));
  gsl_vector_set_all(step.get(), options.initial_step);

  std::unique_ptr<gsl_multimin_fminimizer, MinimizerDeleter> m(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n));
  gsl_multimin_fminimizer_set(m.get(), &fn, x.get(), step.get());

  // A flat direction (a parameter pinned at its clamp) never shrinks the
  // simplex, so a long stall of the best value also counts as converged.
  const int window = 50 * static_cast<int>(n);
  double anchor = m->fval;
  int anchor_iter = 0;
  int status = GSL_CONTINUE;
  int iter = 0;
  while (status == GSL_CONTINUE && iter < options.max_iterations) {
    ++iter;
    if (gsl_multimin_fminimizer_iterate(m.get()) != GSL_SUCCESS) break;
    status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(m.get()), options.tolerance);
    if (anchor - m->fval > 1e-12 * std::abs(anchor)) {
      anchor = m->fval;
      anchor_iter = iter;
    } else if (iter - anchor_iter >= window) {
      status = GSL_SUCCESS;
    }
  }
  for (std::size_t i = 0; i < n; ++i) result.x(static_cast<Eigen::Index>(i)) = gsl_vector_get(m->x, i);
  result.value = m->fval;
  result.iterations = iter;
  result.converged = status == GSL_SUCCESS;
  return result;
}

SimplexResult minimize_multistart(const Objective& f, const std::vector<Eigen::VectorXd>& starts,
                                  const SimplexOptions& options) {
  SimplexResult best;
  best.value = std::numeric_limits<double>::infinity();
  bool any_converged = false;
  for (const auto& s : starts) {
    auto r = minimize_simplex(f, s, options);
    any_converged = any_converged || r.converged;
    if (std::isfinite(r.value) && r.value < std::numeric_limits<double>::max() && r.value < best.value) {
      best = std::move(r);
    }
  }
  best.converged = any_converged && std::isfinite(best.value);
  return best;
}

}  // namespace spatial
