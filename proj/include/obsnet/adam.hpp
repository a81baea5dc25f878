#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "obsnet/errors.hpp"
#include "obsnet/tensor.hpp"

namespace obsnet {

struct AdamHyper {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over a fixed list of parameter tensors.
template <typename T>
class AdamState {
 public:
  AdamState() = default;

  explicit AdamState(AdamHyper h) : hyper_(h) {}

  std::uint64_t step_count() const { return step_; }
  const AdamHyper& hyper() const { return hyper_; }
  void set_lr(double lr) { hyper_.lr = lr; }

  // params[i] updated in place with grads[i]; moment buffers are created on
  // the first call and must keep their shapes afterwards.
  void step(std::vector<Tensor<T>*>& params, const std::vector<const Tensor<T>*>& grads,
            const std::vector<std::string>& names) {
    if (params.size() != grads.size()) throw ContractError("adam: params/grads size mismatch");
    if (m_.empty()) {
      for (auto* p : params) {
        m_.push_back(Tensor<T>::zeros(p->shape));
        v_.push_back(Tensor<T>::zeros(p->shape));
      }
    }
    if (m_.size() != params.size()) throw ContractError("adam: parameter list changed");
    ++step_;
    const double bc1 = 1.0 - std::pow(hyper_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(hyper_.beta2, static_cast<double>(step_));
    for (std::size_t p = 0; p < params.size(); ++p) {
      Tensor<T>& w = *params[p];
      const Tensor<T>& g = *grads[p];
      if (!w.same_shape(g) || !w.same_shape(m_[p]))
        throw DimensionError("adam: shape mismatch for " + names[p]);
      for (std::size_t i = 0; i < w.data.size(); ++i) {
        const double gi = static_cast<double>(g.data[i]);
        if (!std::isfinite(gi))
          throw NumericError("adam: non-finite gradient in " + names[p]);
        double m = static_cast<double>(m_[p].data[i]);
        double v = static_cast<double>(v_[p].data[i]);
        m = hyper_.beta1 * m + (1.0 - hyper_.beta1) * gi;
        v = hyper_.beta2 * v + (1.0 - hyper_.beta2) * gi * gi;
        m_[p].data[i] = static_cast<T>(m);
        v_[p].data[i] = static_cast<T>(v);
        const double mhat = m / bc1;
        const double vhat = v / bc2;
        w.data[i] = static_cast<T>(static_cast<double>(w.data[i]) -
                                   hyper_.lr * mhat / (std::sqrt(vhat) + hyper_.eps));
      }
    }
  }

 private:
  AdamHyper hyper_;
  std::uint64_t step_ = 0;
  std::vector<Tensor<T>> m_;
  std::vector<Tensor<T>> v_;
};

}  // namespace obsnet
