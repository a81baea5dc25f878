#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "obsnet/errors.hpp"
#include "obsnet/tensor.hpp"

namespace obsnet {

enum class EmptyRowPolicy {
  error,     // a fully denied row is a contract violation
  zero_row,  // emit an all-zero row (pad query rows inside the encoder)
};

// Tape-based reverse-mode differentiation over Tensor<T>. Operations record
// their backward rule when any input requires grad; backward() propagates
// adjoints in reverse recording order and accumulates into leaf gradients.
template <typename T>
class Graph {
 public:
  struct NodeRef {
    std::size_t i = static_cast<std::size_t>(-1);
  };

  NodeRef leaf(Tensor<T> v, bool requires_grad = false) {
    v.check_finite("leaf");
    Node n;
    n.value = std::move(v);
    n.requires_grad = requires_grad;
    n.is_leaf = true;
    if (requires_grad) n.leaf_grad = Tensor<T>::zeros(n.value.shape);
    nodes_.push_back(std::move(n));
    return {nodes_.size() - 1};
  }

  const Tensor<T>& value(NodeRef r) const { return nodes_[r.i].value; }

  // Accumulated gradient of a requires_grad leaf.
  const Tensor<T>& grad(NodeRef r) const {
    if (!nodes_[r.i].is_leaf || !nodes_[r.i].requires_grad)
      throw ContractError("grad: node is not a requires_grad leaf");
    return nodes_[r.i].leaf_grad;
  }

  void zero_grad(NodeRef r) { nodes_[r.i].leaf_grad.fill(T(0)); }

  std::size_t size() const { return nodes_.size(); }

  // ---- arithmetic -------------------------------------------------------

  NodeRef matmul(NodeRef a, NodeRef b) {
    const auto& av = val(a);
    const auto& bv = val(b);
    const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
    if (k != bv.rows()) throw DimensionError("matmul: inner dimensions disagree");
    Tensor<T> out = Tensor<T>::zeros({m, n});
    gemm_nn_acc(av.data.data(), bv.data.data(), out.data.data(), m, k, n);
    return emit(std::move(out), {a, b}, [this, a, b, m, k, n](std::vector<Tensor<T>>& adj, std::size_t out_i) {
      const auto& g = adj[out_i];
      if (wants(a))
        gemm_nt_acc(g.data.data(), val(b).data.data(), adj[a.i].data.data(), m, n, k);
      if (wants(b))
        gemm_tn_acc(val(a).data.data(), g.data.data(), adj[b.i].data.data(), m, k, n);
    });
  }

  // a * b^T with b given as [n, k].
  NodeRef matmul_nt(NodeRef a, NodeRef b) {
    const auto& av = val(a);
    const auto& bv = val(b);
    const std::size_t m = av.rows(), k = av.cols(), n = bv.rows();
    if (k != bv.cols()) throw DimensionError("matmul_nt: inner dimensions disagree");
    Tensor<T> out = Tensor<T>::zeros({m, n});
    gemm_nt_acc(av.data.data(), bv.data.data(), out.data.data(), m, k, n);
    return emit(std::move(out), {a, b}, [this, a, b, m, k, n](std::vector<Tensor<T>>& adj, std::size_t out_i) {
      const auto& g = adj[out_i];
      if (wants(a))
        gemm_nn_acc(g.data.data(), val(b).data.data(), adj[a.i].data.data(), m, n, k);
      if (wants(b))
        gemm_tn_acc(g.data.data(), val(a).data.data(), adj[b.i].data.data(), m, n, k);
    });
  }

  NodeRef add(NodeRef a, NodeRef b) {
    const auto& av = val(a);
    const auto& bv = val(b);
    if (!av.same_shape(bv)) throw DimensionError("add: shape mismatch");
    Tensor<T> out = av;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += bv.data[i];
    return emit(std::move(out), {a, b}, [this, a, b](std::vector<Tensor<T>>& adj, std::size_t out_i) {
      const auto& g = adj[out_i];
      if (wants(a))
        for (std::size_t i = 0; i < g.data.size(); ++i) adj[a.i].data[i] += g.data[i];
      if (wants(b))
        for (std::size_t i = 0; i < g.data.size(); ++i) adj[b.i].data[i] += g.data[i];
    });
  }

  NodeRef sub(NodeRef a, NodeRef b) {
    const auto& av = val(a);
    const auto& bv = val(b);
    if (!av.same_shape(bv)) throw DimensionError("sub: shape mismatch");
    Tensor<T> out = av;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= bv.data[i];
    return emit(std::move(out), {a, b}, [this, a, b](std::vector<Tensor<T>>& adj, std::size_t out_i) {
      const auto& g = adj[out_i];
      if (wants(a))
        for (std::size_t i = 0; i < g.data.size(); ++i) adj[a.i].data[i] += g.data[i];
      if (wants(b))
        for (std::size_t i = 0; i < g.data.size(); ++i) adj[b.i].data[i] -= g.data[i];
    });
  }

  NodeRef mul(NodeRef a, NodeRef b) {
    const auto& av = val(a);
    const auto& bv = val(b);
    if (!av.same_shape(bv)) throw DimensionError("mul: shape mismatch");
    Tensor<T> out = av;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= bv.data[i];
    return emit(std::move(out), {a, b}, [this, a, b](std::vector<Tensor<T>>& adj, std::size_t out_i) {
      const auto& g = adj[out_i];
      if (wants(a))
        for (std::size_t i = 0; i < g.data.size(); ++i)
          adj[a.i].data[i] += g.data[i] * val(b).data[i];
      if (wants(b))
        for (std::size_t i = 0; i < g.data.size(); ++i)
          adj[b.i].data[i] += g.data[i] * val(a).data[i];
    });
  }

  NodeRef scale(NodeRef a, T c) {
    Tensor<T> out = val(a);
    for (auto& x : out.data) x *= c;
    return emit(std::move(out), {a}, [this, a, c](std::vector<Tensor<T>>& adj, std::size_t out_i) {
      const auto& g = adj[out_i];
      if (wants(a))
        for (std::size_t i = 0; i < g.data.size(); ++i) adj[a.i].data[i] += c * g.data[i];
    });
  }

  // mat[m,n] + row broadcast over rows.
  NodeRef add_row(NodeRef mat, NodeRef row) {
    const auto& mv = val(mat);
    const auto& rv = val(row);
    const std::size_t m = mv.rows(), n = mv.cols();
    if (rv.numel() != n) throw DimensionError("add_row: row length mismatch");
    Tensor<T> out = mv;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) out.data[i * n + j] += rv.data[j];
    return emit(std::move(out), {mat, row}, [this, mat, row, m, n](std::vector<Tensor<T>>& adj, std::size_t out_i) {
      const auto& g = adj[out_i];
      if (wants(mat))
        for (std::size_t i = 0; i < g.data.size(); ++i) adj[mat.i].data[i] += g.data[i];
      if (wants(row))
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) adj[row.i].data[j] += g.data[i * n + j];
    });
  }

  // ---- nonlinearities ---------------------------------------------------

  NodeRef gelu(NodeRef a) {
    static constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
    static constexpr double kA = 0.044715;
    const auto& av = val(a);
    Tensor<T> out = av;
    for (auto& x : out.data) {
      const double xd = static_cast<double>(x);
      const double t = std::tanh(kC * (xd + kA * xd * xd * xd));
      x = static_cast<T>(0.5 * xd * (1.0 + t));
    }
    return emit(std::move(out), {a}, [this, a](std::vector<Tensor<T>>& adj, std::size_t out_i) {
      if (!wants(a)) return;
      const auto& g = adj[out_i];
      const auto& av2 = val(a);
      for (std::size_t i = 0; i < g.data.size(); ++i) {
        const double xd = static_cast<double>(av2.data[i]);
        const double t = std::tanh(kC * (xd + kA * xd * xd * xd));
        const double d =
            0.5 * (1.0 + t) + 0.5 * xd * (1.0 - t * t) * kC * (1.0 + 3.0 * kA * xd * xd);
        adj[a.i].data[i] += static_cast<T>(static_cast<double>(g.data[i]) * d);
      }
    });
  }

  // Per-row normalization over the last dimension, then affine transform.
  NodeRef layer_norm(NodeRef x, NodeRef gain, NodeRef bias, T eps = T(1e-5)) {
    const auto& xv = val(x);
    const std::size_t m = xv.rows(), d = xv.cols();
    if (d == 0) throw DimensionError("layer_norm: zero-width input");
    if (val(gain).numel() != d || val(bias).numel() != d)
      throw DimensionError("layer_norm: gain/bias length mismatch");
    Tensor<T> out = Tensor<T>::zeros(xv.shape);
    Tensor<T> xhat = Tensor<T>::zeros(xv.shape);
    std::vector<T> inv_sigma(m);
    const auto& gv = val(gain);
    const auto& bv = val(bias);
    for (std::size_t i = 0; i < m; ++i) {
      const T* xi = xv.data.data() + i * d;
      T mean = T(0);
      for (std::size_t j = 0; j < d; ++j) mean += xi[j];
      mean /= static_cast<T>(d);
      T var = T(0);
      for (std::size_t j = 0; j < d; ++j) {
        const T c = xi[j] - mean;
        var += c * c;
      }
      var /= static_cast<T>(d);
      const T is = T(1) / std::sqrt(var + eps);
      inv_sigma[i] = is;
      for (std::size_t j = 0; j < d; ++j) {
        const T xh = (xi[j] - mean) * is;
        xhat.data[i * d + j] = xh;
        out.data[i * d + j] = xh * gv.data[j] + bv.data[j];
      }
    }
    return emit(std::move(out), {x, gain, bias},
                [this, x, gain, bias, m, d, xhat = std::move(xhat),
                 inv_sigma = std::move(inv_sigma)](std::vector<Tensor<T>>& adj, std::size_t out_i) {
      const auto& g = adj[out_i];
      const auto& gv2 = val(gain);
      for (std::size_t i = 0; i < m; ++i) {
        const T* gi = g.data.data() + i * d;
        const T* xh = xhat.data.data() + i * d;
        if (wants(gain) || wants(bias)) {
          for (std::size_t j = 0; j < d; ++j) {
            if (wants(gain)) adj[gain.i].data[j] += gi[j] * xh[j];
            if (wants(bias)) adj[bias.i].data[j] += gi[j];
          }
        }
        if (wants(x)) {
          T mean_h = T(0), mean_hx = T(0);
          for (std::size_t j = 0; j < d; ++j) {
            const T h = gi[j] * gv2.data[j];
            mean_h += h;
            mean_hx += h * xh[j];
          }
          mean_h /= static_cast<T>(d);
          mean_hx /= static_cast<T>(d);
          for (std::size_t j = 0; j < d; ++j) {
            const T h = gi[j] * gv2.data[j];
            adj[x.i].data[i * d + j] += (h - mean_h - xh[j] * mean_hx) * inv_sigma[i];
          }
        }
      }
    });
  }

  // Softmax over each row restricted to allowed columns. Denied columns get
  // an additive large-negative mask before exponentiation and are then zeroed
  // exactly. `allow` is row-major, same extent as `logits`.
  NodeRef masked_softmax(NodeRef logits, std::vector<std::uint8_t> allow,
                         EmptyRowPolicy policy = EmptyRowPolicy::error) {
    const auto& lv = val(logits);
    const std::size_t m = lv.rows(), n = lv.cols();
    if (allow.size() != m * n) throw DimensionError("masked_softmax: mask extent mismatch");
    Tensor<T> out = Tensor<T>::zeros(lv.shape);
    static constexpr double kNegInf = -1e30;
    for (std::size_t i = 0; i < m; ++i) {
      const T* li = lv.data.data() + i * n;
      const std::uint8_t* ai = allow.data() + i * n;
      double mx = kNegInf;
      bool any = false;
      for (std::size_t j = 0; j < n; ++j) {
        const double masked = ai[j] ? static_cast<double>(li[j]) : kNegInf;
        if (masked > mx) mx = masked;
        any = any || ai[j];
      }
      if (!any) {
        if (policy == EmptyRowPolicy::error)
          throw ContractError("masked_softmax: fully denied row " + std::to_string(i));
        continue;  // zero row
      }
      double sum = 0.0;
      T* oi = out.data.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) {
        if (!ai[j]) continue;  // exact zero
        const double e = std::exp(static_cast<double>(li[j]) - mx);
        oi[j] = static_cast<T>(e);
        sum += e;
      }
      const T inv = static_cast<T>(1.0 / sum);
      for (std::size_t j = 0; j < n; ++j)
        if (ai[j]) oi[j] *= inv;
    }
    return emit(std::move(out), {logits},
                [this, logits, m, n, allow = std::move(allow)](std::vector<Tensor<T>>& adj, std::size_t out_i) {
      if (!wants(logits)) return;
      const auto& g = adj[out_i];
      const auto& av = node_value(out_i);
      for (std::size_t i = 0; i < m; ++i) {
        const T* gi = g.data.data() + i * n;
        const T* si = av.data.data() + i * n;
        const std::uint8_t* ai = allow.data() + i * n;
        T dot = T(0);
        for (std::size_t j = 0; j < n; ++j)
          if (ai[j]) dot += gi[j] * si[j];
        for (std::size_t j = 0; j < n; ++j)
          if (ai[j]) adj[logits.i].data[i * n + j] += si[j] * (gi[j] - dot);
      }
    });
  }

  // ---- structure --------------------------------------------------------

  NodeRef gather_rows(NodeRef table, std::vector<int> idx) {
    const auto& tv = val(table);
    const std::size_t rows = tv.rows(), d = tv.cols();
    for (int id : idx)
      if (id < 0 || static_cast<std::size_t>(id) >= rows)
        throw ContractError("gather_rows: index out of range");
    Tensor<T> out = Tensor<T>::zeros({idx.size(), d});
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t j = 0; j < d; ++j)
        out.data[r * d + j] = tv.data[static_cast<std::size_t>(idx[r]) * d + j];
    return emit(std::move(out), {table},
                [this, table, d, idx = std::move(idx)](std::vector<Tensor<T>>& adj, std::size_t out_i) {
      if (!wants(table)) return;
      const auto& g = adj[out_i];
      for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t j = 0; j < d; ++j)
          adj[table.i].data[static_cast<std::size_t>(idx[r]) * d + j] += g.data[r * d + j];
    });
  }

  NodeRef slice_rows(NodeRef m, std::size_t begin, std::size_t count) {
    const auto& mv = val(m);
    const std::size_t n = mv.cols();
    if (begin + count > mv.rows()) throw DimensionError("slice_rows: out of range");
    Tensor<T> out = Tensor<T>::zeros({count, n});
    for (std::size_t i = 0; i < count * n; ++i) out.data[i] = mv.data[begin * n + i];
    return emit(std::move(out), {m}, [this, m, begin, count, n](std::vector<Tensor<T>>& adj, std::size_t out_i) {
      if (!wants(m)) return;
      const auto& g = adj[out_i];
      for (std::size_t i = 0; i < count * n; ++i) adj[m.i].data[begin * n + i] += g.data[i];
    });
  }

  NodeRef slice_cols(NodeRef m, std::size_t begin, std::size_t count) {
    const auto& mv = val(m);
    const std::size_t rows = mv.rows(), n = mv.cols();
    if (begin + count > n) throw DimensionError("slice_cols: out of range");
    Tensor<T> out = Tensor<T>::zeros({rows, count});
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < count; ++j) out.data[i * count + j] = mv.data[i * n + begin + j];
    return emit(std::move(out), {m}, [this, m, begin, count, rows, n](std::vector<Tensor<T>>& adj, std::size_t out_i) {
      if (!wants(m)) return;
      const auto& g = adj[out_i];
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < count; ++j)
          adj[m.i].data[i * n + begin + j] += g.data[i * count + j];
    });
  }

  NodeRef concat_rows(NodeRef a, NodeRef b) {
    const auto& av = val(a);
    const auto& bv = val(b);
    if (av.cols() != bv.cols()) throw DimensionError("concat_rows: width mismatch");
    const std::size_t n = av.cols(), ra = av.rows(), rb = bv.rows();
    Tensor<T> out = Tensor<T>::zeros({ra + rb, n});
    for (std::size_t i = 0; i < ra * n; ++i) out.data[i] = av.data[i];
    for (std::size_t i = 0; i < rb * n; ++i) out.data[ra * n + i] = bv.data[i];
    return emit(std::move(out), {a, b}, [this, a, b, ra, rb, n](std::vector<Tensor<T>>& adj, std::size_t out_i) {
      const auto& g = adj[out_i];
      if (wants(a))
        for (std::size_t i = 0; i < ra * n; ++i) adj[a.i].data[i] += g.data[i];
      if (wants(b))
        for (std::size_t i = 0; i < rb * n; ++i) adj[b.i].data[i] += g.data[ra * n + i];
    });
  }

  NodeRef concat_cols(const std::vector<NodeRef>& parts) {
    if (parts.empty()) throw ContractError("concat_cols: empty input");
    const std::size_t rows = val(parts[0]).rows();
    std::size_t total = 0;
    for (auto p : parts) {
      if (val(p).rows() != rows) throw DimensionError("concat_cols: row count mismatch");
      total += val(p).cols();
    }
    Tensor<T> out = Tensor<T>::zeros({rows, total});
    std::size_t off = 0;
    for (auto p : parts) {
      const auto& pv = val(p);
      const std::size_t w = pv.cols();
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < w; ++j) out.data[i * total + off + j] = pv.data[i * w + j];
      off += w;
    }
    return emit(std::move(out), parts, [this, parts, rows, total](std::vector<Tensor<T>>& adj, std::size_t out_i) {
      const auto& g = adj[out_i];
      std::size_t off2 = 0;
      for (auto p : parts) {
        const std::size_t w = val(p).cols();
        if (wants(p))
          for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < w; ++j)
              adj[p.i].data[i * w + j] += g.data[i * total + off2 + j];
        off2 += w;
      }
    });
  }

  // Stack row vectors (each [d] or [1,d]) into an [m,d] matrix.
  NodeRef stack_rows(const std::vector<NodeRef>& rows) {
    if (rows.empty()) throw ContractError("stack_rows: empty input");
    const std::size_t d = val(rows[0]).numel();
    Tensor<T> out = Tensor<T>::zeros({rows.size(), d});
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto& rv = val(rows[r]);
      if (rv.numel() != d) throw DimensionError("stack_rows: width mismatch");
      for (std::size_t j = 0; j < d; ++j) out.data[r * d + j] = rv.data[j];
    }
    return emit(std::move(out), rows, [this, rows, d](std::vector<Tensor<T>>& adj, std::size_t out_i) {
      const auto& g = adj[out_i];
      for (std::size_t r = 0; r < rows.size(); ++r)
        if (wants(rows[r]))
          for (std::size_t j = 0; j < d; ++j) adj[rows[r].i].data[j] += g.data[r * d + j];
    });
  }

  // Column-wise mean over rows: [m,n] -> [1,n].
  NodeRef row_mean(NodeRef m) {
    const auto& mv = val(m);
    const std::size_t rows = mv.rows(), n = mv.cols();
    if (rows == 0) throw DimensionError("row_mean: empty input");
    Tensor<T> out = Tensor<T>::zeros({1, n});
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < n; ++j) out.data[j] += mv.data[i * n + j];
    const T inv = T(1) / static_cast<T>(rows);
    for (auto& x : out.data) x *= inv;
    return emit(std::move(out), {m}, [this, m, rows, n, inv](std::vector<Tensor<T>>& adj, std::size_t out_i) {
      if (!wants(m)) return;
      const auto& g = adj[out_i];
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < n; ++j) adj[m.i].data[i * n + j] += inv * g.data[j];
    });
  }

  NodeRef sum(NodeRef a) {
    const auto& av = val(a);
    T s = T(0);
    for (const auto& x : av.data) s += x;
    return emit(Tensor<T>::scalar(s), {a}, [this, a](std::vector<Tensor<T>>& adj, std::size_t out_i) {
      if (!wants(a)) return;
      const T g = adj[out_i].data[0];
      for (auto& x : adj[a.i].data) x += g;
    });
  }

  // log sum_{j in idx} exp(v_j) over a row vector, max-shifted.
  NodeRef logsumexp_subset(NodeRef v, std::vector<std::size_t> idx) {
    const auto& vv = val(v);
    if (vv.rows() != 1) throw DimensionError("logsumexp_subset: expects a row vector");
    if (idx.empty()) throw ContractError("logsumexp_subset: empty index set");
    for (auto j : idx)
      if (j >= vv.numel()) throw ContractError("logsumexp_subset: index out of range");
    double mx = -1e300;
    for (auto j : idx) mx = std::max(mx, static_cast<double>(vv.data[j]));
    double s = 0.0;
    for (auto j : idx) s += std::exp(static_cast<double>(vv.data[j]) - mx);
    const double lse = mx + std::log(s);
    return emit(Tensor<T>::scalar(static_cast<T>(lse)), {v},
                [this, v, lse, idx = std::move(idx)](std::vector<Tensor<T>>& adj, std::size_t out_i) {
      if (!wants(v)) return;
      const double g = static_cast<double>(adj[out_i].data[0]);
      const auto& vv2 = val(v);
      for (auto j : idx)
        adj[v.i].data[j] +=
            static_cast<T>(g * std::exp(static_cast<double>(vv2.data[j]) - lse));
    });
  }

  // ---- backward ---------------------------------------------------------

  // Populates d(loss)/d(leaf) for every requires_grad leaf. Repeated calls
  // accumulate into the leaf gradients.
  void backward(NodeRef loss) {
    if (!val(loss).is_scalar()) throw ContractError("backward: loss must be scalar");
    std::vector<Tensor<T>> adj(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].requires_grad) adj[i] = Tensor<T>::zeros(nodes_[i].value.shape);
    if (!nodes_[loss.i].requires_grad)
      adj[loss.i] = Tensor<T>::zeros(nodes_[loss.i].value.shape);
    adj[loss.i].data[0] = T(1);
    for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) (*it)(adj);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      auto& n = nodes_[i];
      if (n.is_leaf && n.requires_grad) {
        for (std::size_t j = 0; j < n.leaf_grad.data.size(); ++j)
          n.leaf_grad.data[j] += adj[i].data[j];
        n.leaf_grad.check_finite("leaf gradient");
      }
    }
  }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> leaf_grad;
    bool requires_grad = false;
    bool is_leaf = false;
  };

  const Tensor<T>& val(NodeRef r) const { return nodes_[r.i].value; }
  const Tensor<T>& node_value(std::size_t i) const { return nodes_[i].value; }
  bool wants(NodeRef r) const { return nodes_[r.i].requires_grad; }

  template <typename Back>
  NodeRef emit(Tensor<T> out, const std::vector<NodeRef>& inputs, Back back) {
    out.check_finite("op output");
    bool rg = false;
    for (auto in : inputs) rg = rg || nodes_[in.i].requires_grad;
    Node n;
    n.value = std::move(out);
    n.requires_grad = rg;
    nodes_.push_back(std::move(n));
    const std::size_t out_i = nodes_.size() - 1;
    if (rg)
      tape_.push_back([back = std::move(back), out_i](std::vector<Tensor<T>>& adj) {
        back(adj, out_i);
      });
    return {out_i};
  }

  std::vector<Node> nodes_;
  std::vector<std::function<void(std::vector<Tensor<T>>&)>> tape_;
};

}  // namespace obsnet
