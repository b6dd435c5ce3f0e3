#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace gbr {

struct NelderMeadOptions {
  int max_evals = 200;
  double xtol = 1e-8;
  double ftol = 1e-14;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int evals = 0;
};

/// Standard downhill-simplex minimizer (reflection 1, expansion 2,
/// contraction 0.5, shrink 0.5). The caller's objective is responsible for
/// any feasibility clamping. Deterministic for a given start and step.
inline NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                    const Eigen::VectorXd& x0, const Eigen::VectorXd& step,
                                    const NelderMeadOptions& opts = {}) {
  const int n = static_cast<int>(x0.size());
  std::vector<Eigen::VectorXd> xs(n + 1, x0);
  std::vector<double> fs(n + 1);
  int evals = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    return f(x);
  };
  for (int i = 0; i < n; ++i) xs[i + 1][i] += step[i];
  for (int i = 0; i <= n; ++i) fs[i] = eval(xs[i]);

  auto order = [&]() {
    std::vector<int> idx(n + 1);
    for (int i = 0; i <= n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fs[a] < fs[b]; });
    std::vector<Eigen::VectorXd> xs2(n + 1);
    std::vector<double> fs2(n + 1);
    for (int i = 0; i <= n; ++i) {
      xs2[i] = xs[idx[i]];
      fs2[i] = fs[idx[i]];
    }
    xs.swap(xs2);
    fs.swap(fs2);
  };

  while (evals < opts.max_evals) {
    order();
    double spread = 0.0;
    for (int i = 1; i <= n; ++i) spread = std::max(spread, (xs[i] - xs[0]).lpNorm<Eigen::Infinity>());
    if (spread < opts.xtol && std::abs(fs[n] - fs[0]) < opts.ftol) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) centroid += xs[i];
    centroid /= n;

    const Eigen::VectorXd xr = centroid + (centroid - xs[n]);
    const double fr = eval(xr);
    if (fr < fs[0]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (xr - centroid);
      const double fe = eval(xe);
      if (fe < fr) {
        xs[n] = xe;
        fs[n] = fe;
      } else {
        xs[n] = xr;
        fs[n] = fr;
      }
    } else if (fr < fs[n - 1]) {
      xs[n] = xr;
      fs[n] = fr;
    } else {
      const bool outside = fr < fs[n];
      const Eigen::VectorXd xc =
          centroid + 0.5 * ((outside ? xr : xs[n]) - centroid);
      const double fc = eval(xc);
      if (fc < (outside ? fr : fs[n])) {
        xs[n] = xc;
        fs[n] = fc;
      } else {
        for (int i = 1; i <= n; ++i) {
          xs[i] = xs[0] + 0.5 * (xs[i] - xs[0]);
          fs[i] = eval(xs[i]);
        }
      }
    }
  }
  order();
  return {xs[0], fs[0], evals};
}

}  // namespace gbr
