#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "obsnet/errors.hpp"
#include "obsnet/graph.hpp"
#include "obsnet/tensor.hpp"

namespace obsnet {

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T> tensor;
};

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_err = 0.0;
};

// Compares analytic gradients against central finite differences for a
// deterministic scalar closure of the given parameters.
//
// build(graph, param_refs) must construct the loss from leaves created for
// `params` (in order) and return the scalar loss node.
template <typename T>
GradCheckReport grad_check(
    std::vector<NamedTensor<T>>& params,
    const std::function<typename Graph<T>::NodeRef(
        Graph<T>&, const std::vector<typename Graph<T>::NodeRef>&)>& build,
    T perturbation) {
  using Ref = typename Graph<T>::NodeRef;

  auto forward_loss = [&](bool with_grad, std::vector<Tensor<T>>* grads_out) -> T {
    Graph<T> g;
    std::vector<Ref> refs;
    refs.reserve(params.size());
    for (auto& p : params) refs.push_back(g.leaf(p.tensor, with_grad));
    Ref loss = build(g, refs);
    if (!g.value(loss).is_scalar()) throw ContractError("grad_check: loss must be scalar");
    if (with_grad) {
      g.backward(loss);
      grads_out->clear();
      for (auto r : refs) grads_out->push_back(g.grad(r));
    }
    return g.value(loss).data[0];
  };

  // Determinism gate: two independent forward passes must agree bitwise.
  const T l0 = forward_loss(false, nullptr);
  const T l1 = forward_loss(false, nullptr);
  if (l0 != l1) throw ContractError("grad_check: closure is not deterministic");

  std::vector<Tensor<T>> analytic;
  forward_loss(true, &analytic);

  GradCheckReport report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    GradCheckEntry entry;
    entry.name = params[p].name;
    Tensor<T>& w = params[p].tensor;
    for (std::size_t i = 0; i < w.data.size(); ++i) {
      const T orig = w.data[i];
      w.data[i] = orig + perturbation;
      const double lp = static_cast<double>(forward_loss(false, nullptr));
      w.data[i] = orig - perturbation;
      const double lm = static_cast<double>(forward_loss(false, nullptr));
      w.data[i] = orig;
      const double numeric = (lp - lm) / (2.0 * static_cast<double>(perturbation));
      const double an = static_cast<double>(analytic[p].data[i]);
      // The floor keeps O(h^2) truncation noise on near-zero gradients from
      // registering as a relative error; real gradient bugs produce absolute
      // differences orders of magnitude above it.
      const double denom = std::max({std::abs(an), std::abs(numeric), 1e-3});
      entry.max_rel_err = std::max(entry.max_rel_err, std::abs(an - numeric) / denom);
    }
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace obsnet
