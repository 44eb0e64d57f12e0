#ifndef SUPERFACE_TESTS_FD_CHECK_HPP
#define SUPERFACE_TESTS_FD_CHECK_HPP

// Central finite-difference gradient checking at double precision. The graph
// builder is re-invoked on the same leaf nodes after each perturbation, so
// the analytic path and the numeric path share every input bit.

#include <cmath>
#include <functional>
#include <vector>

#include "superface/autograd.hpp"

namespace sft {

using DVar = sf::Var<double>;

struct FdReport {
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  int64_t checked = 0;
};

// loss_fn: () -> scalar Var built from `leaves`
inline FdReport fd_check(std::vector<DVar> leaves, const std::function<DVar()>& loss_fn, double eps = 1e-6) {
  auto loss = loss_fn();
  for (auto& l : leaves)
    if (l->grad.size()) l->grad.fill(0.0);
  sf::backward(loss);

  std::vector<sf::Tensor<double>> analytic;
  for (auto& l : leaves) {
    l->ensure_grad();
    analytic.push_back(l->grad);
  }

  FdReport rep;
  for (size_t li = 0; li < leaves.size(); ++li) {
    auto& leaf = leaves[li];
    for (int64_t i = 0; i < leaf->val.size(); ++i) {
      double orig = leaf->val[i];
      leaf->val[i] = orig + eps;
      double fp = loss_fn()->val[0];
      leaf->val[i] = orig - eps;
      double fm = loss_fn()->val[0];
      leaf->val[i] = orig;
      double num = (fp - fm) / (2.0 * eps);
      double ana = analytic[li][i];
      double abs_err = std::abs(num - ana);
      // guarded relative error: elements with both grads below 1e-4 are
      // judged on the absolute difference instead
      double rel = abs_err / std::max({std::abs(num), std::abs(ana), 1e-4});
      rep.max_abs_err = std::max(rep.max_abs_err, abs_err);
      rep.max_rel_err = std::max(rep.max_rel_err, rel);
      ++rep.checked;
    }
  }
  return rep;
}

inline bool fd_ok(const FdReport& r, double tol = 1e-3) { return r.max_rel_err < tol; }

}  // namespace sft

#endif
