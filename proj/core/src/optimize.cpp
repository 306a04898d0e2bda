#include "vecchia/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "vecchia/error.hpp"

namespace vecchia {

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x0,
                             const NelderMeadOptions& options) {
  const Eigen::Index dim = x0.size();
  if (dim == 0) throw InvalidArgument("nothing to optimize");
  if (!(options.initial_step > 0.0)) throw InvalidArgument("initial simplex step must be positive");

  NelderMeadResult result;
  auto evaluate = [&](const Eigen::VectorXd& x) {
    ++result.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  // Gao & Han coefficients keep the method effective beyond a few dimensions.
  const double d = static_cast<double>(dim);
  const double reflect = 1.0;
  const double expand = 1.0 + 2.0 / d;
  const double contract = 0.75 - 1.0 / (2.0 * d);
  const double shrink = 1.0 - 1.0 / d;

  std::vector<Eigen::VectorXd> vertex(static_cast<std::size_t>(dim + 1), x0);
  std::vector<double> value(vertex.size());
  value[0] = evaluate(x0);
  if (!std::isfinite(value[0])) throw NumericalError("objective is not finite at the starting point");
  for (Eigen::Index k = 0; k < dim; ++k) {
    auto& v = vertex[static_cast<std::size_t>(k + 1)];
    v[k] += options.initial_step;
    value[static_cast<std::size_t>(k + 1)] = evaluate(v);
  }

  std::vector<std::size_t> order(vertex.size());
  for (;;) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[order.size() - 2];

    double spread_x = 0.0;
    for (const auto& v : vertex) spread_x = std::max(spread_x, (v - vertex[best]).cwiseAbs().maxCoeff());
    const double spread_f = value[worst] - value[best];
    if (spread_x <= options.x_tolerance &&
        spread_f <= options.f_tolerance * std::max(1.0, std::abs(value[best]))) {
      result.converged = true;
      break;
    }
    if (result.evaluations >= options.max_evaluations) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
    for (std::size_t k = 0; k < vertex.size(); ++k) {
      if (k != worst) centroid += vertex[k];
    }
    centroid /= d;

    const Eigen::VectorXd reflected = centroid + reflect * (centroid - vertex[worst]);
    const double f_reflected = evaluate(reflected);
    if (f_reflected < value[best]) {
      const Eigen::VectorXd expanded = centroid + expand * (reflected - centroid);
      const double f_expanded = evaluate(expanded);
      if (f_expanded < f_reflected) {
        vertex[worst] = expanded;
        value[worst] = f_expanded;
      } else {
        vertex[worst] = reflected;
        value[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < value[second_worst]) {
      vertex[worst] = reflected;
      value[worst] = f_reflected;
      continue;
    }
    const bool outside = f_reflected < value[worst];
    const Eigen::VectorXd contracted = outside ? Eigen::VectorXd(centroid + contract * (reflected - centroid))
                                               : Eigen::VectorXd(centroid + contract * (vertex[worst] - centroid));
    const double f_contracted = evaluate(contracted);
    if (f_contracted < (outside ? f_reflected : value[worst])) {
      vertex[worst] = contracted;
      value[worst] = f_contracted;
      continue;
    }
    for (std::size_t k = 0; k < vertex.size(); ++k) {
      if (k == best) continue;
      vertex[k] = vertex[best] + shrink * (vertex[k] - vertex[best]);
      value[k] = evaluate(vertex[k]);
    }
  }

  const auto best = static_cast<std::size_t>(std::min_element(value.begin(), value.end()) - value.begin());
  result.x = vertex[best];
  result.value = value[best];
  return result;
}

}  // namespace vecchia
