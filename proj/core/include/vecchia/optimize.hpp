#pragma once

#include <functional>

#include <Eigen/Dense>

namespace vecchia {

struct NelderMeadOptions {
  double initial_step = 0.5;     ///< offset of the initial simplex vertices
  double x_tolerance = 1e-6;     ///< max vertex distance from the best, per coordinate
  double f_tolerance = 1e-10;    ///< relative spread of objective values
  int max_evaluations = 2000;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

/// Minimizes f by the Nelder-Mead simplex method with dimension-adaptive
/// coefficients. Non-finite objective values are treated as +infinity, so
/// infeasible regions can be signalled by returning infinity. The initial
/// point must have a finite value.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x0,
                             const NelderMeadOptions& options = {});

}  // namespace vecchia
