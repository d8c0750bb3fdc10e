#include "cbartgp/nelder_mead.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace cbartgp {

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, double initial_step, double diam_tol,
                             int max_evals) {
  const int d = static_cast<int>(x0.size());
  NelderMeadResult res;

  std::vector<Eigen::VectorXd> pts(d + 1, x0);
  std::vector<double> fv(d + 1);
  for (int i = 1; i <= d; ++i) pts[i](i - 1) += initial_step;
  for (int i = 0; i <= d; ++i) {
    fv[i] = f(pts[i]);
    ++res.evaluations;
  }

  std::vector<int> ord(d + 1);
  auto sort_simplex = [&] {
    std::iota(ord.begin(), ord.end(), 0);
    std::sort(ord.begin(), ord.end(), [&](int a, int b) { return fv[a] < fv[b]; });
  };

  while (res.evaluations < max_evals) {
    sort_simplex();
    const int best = ord[0], worst = ord[d], second_worst = ord[d - 1];

    double diam = 0.0;
    for (int i = 1; i <= d; ++i) diam = std::max(diam, (pts[ord[i]] - pts[best]).norm());
    if (diam < diam_tol) {
      res.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (int i = 0; i <= d; ++i) {
      if (i != worst) centroid += pts[i];
    }
    centroid /= d;

    const Eigen::VectorXd refl = centroid + (centroid - pts[worst]);
    const double f_refl = f(refl);
    ++res.evaluations;

    if (f_refl < fv[best]) {
      const Eigen::VectorXd expd = centroid + 2.0 * (centroid - pts[worst]);
      const double f_expd = f(expd);
      ++res.evaluations;
      if (f_expd < f_refl) {
        pts[worst] = expd;
        fv[worst] = f_expd;
      } else {
        pts[worst] = refl;
        fv[worst] = f_refl;
      }
    } else if (f_refl < fv[second_worst]) {
      pts[worst] = refl;
      fv[worst] = f_refl;
    } else {
      const Eigen::VectorXd contr = centroid + 0.5 * ((f_refl < fv[worst] ? refl : pts[worst]) - centroid);
      const double f_contr = f(contr);
      ++res.evaluations;
      if (f_contr < std::min(f_refl, fv[worst])) {
        pts[worst] = contr;
        fv[worst] = f_contr;
      } else {
        for (int i = 0; i <= d; ++i) {
          if (i == best) continue;
          pts[i] = pts[best] + 0.5 * (pts[i] - pts[best]);
          fv[i] = f(pts[i]);
          ++res.evaluations;
        }
      }
    }
  }

  sort_simplex();
  res.x = pts[ord[0]];
  res.fmin = fv[ord[0]];
  return res;
}

}  // namespace cbartgp
