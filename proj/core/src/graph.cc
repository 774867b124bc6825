/* Copyright 2026 The DIDAN Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "didan/graph.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace didan {
namespace {

std::string dims(const Shape& s) { return shape_to_string(s); }

[[noreturn]] void shape_fail(const char* op, const std::string& detail) {
  throw ShapeError(std::string(op) + ": " + detail);
}

void require_matrix(const char* op, const Shape& s) {
  if (s.size() != 1 && s.size() != 2) {
    shape_fail(op, "expected rank 1 or 2, got " + dims(s));
  }
}

template <typename T>
T stable_sigmoid(T x) {
  if (x >= T{0}) {
    T z = std::exp(-x);
    return T{1} / (T{1} + z);
  }
  T z = std::exp(x);
  return z / (T{1} + z);
}

}  // namespace

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kConstant: return "constant";
    case OpKind::kVariable: return "variable";
    case OpKind::kParameter: return "parameter";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kRelu: return "relu";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kSoftmaxRows: return "softmax_rows";
    case OpKind::kMeanRows: return "mean_rows";
    case OpKind::kConcatLastAxis: return "concat_last_axis";
    case OpKind::kConcatRows: return "concat_rows";
    case OpKind::kSliceRows: return "slice_rows";
    case OpKind::kScale: return "scale";
    case OpKind::kRowL2Norms: return "row_l2_norms";
    case OpKind::kCosineMatrix: return "cosine_matrix";
    case OpKind::kBatchNorm: return "batchnorm";
    case OpKind::kNoisyOr: return "noisy_or";
    case OpKind::kBce: return "bce";
    case OpKind::kSum: return "sum";
  }
  return "unknown";
}

template <typename T>
auto Graph<T>::node(NodeId id) const -> const Node& {
  if (id.index >= nodes_.size()) {
    throw std::out_of_range("node " + std::to_string(id.index) +
                            " does not belong to this graph");
  }
  return nodes_[id.index];
}

template <typename T>
auto Graph<T>::node(NodeId id) -> Node& {
  if (id.index >= nodes_.size()) {
    throw std::out_of_range("node " + std::to_string(id.index) +
                            " does not belong to this graph");
  }
  return nodes_[id.index];
}

template <typename T>
NodeId Graph<T>::push(Node n) {
  if (n.kind != OpKind::kConstant && n.kind != OpKind::kVariable &&
      n.kind != OpKind::kParameter) {
    n.requires_grad = std::any_of(
        n.parents.begin(), n.parents.end(),
        [this](NodeId p) { return nodes_[p.index].requires_grad; });
  }
  nodes_.push_back(std::move(n));
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename T>
NodeId Graph<T>::constant(Tensor<T> value) {
  Node n;
  n.kind = OpKind::kConstant;
  n.value = std::move(value);
  return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::variable(Tensor<T> value) {
  Node n;
  n.kind = OpKind::kVariable;
  n.value = std::move(value);
  n.requires_grad = true;
  return push(std::move(n));
}

template <typename T>
NodeId Graph<T>::parameter(const std::string& name) {
  if (auto it = param_nodes_.find(name); it != param_nodes_.end()) {
    return it->second;
  }
  if (params_ == nullptr) {
    throw std::logic_error("graph has no parameter store; cannot bind '" +
                           name + "'");
  }
  Node n;
  n.kind = OpKind::kParameter;
  n.value = params_->get(name);
  n.requires_grad = true;
  n.param_name = name;
  NodeId id = push(std::move(n));
  param_nodes_.emplace(name, id);
  return id;
}

template <typename T>
NodeId Graph<T>::matmul(NodeId a, NodeId b) {
  const Tensor<T>& A = value(a);
  const Tensor<T>& B = value(b);
  require_matrix("matmul", A.shape());
  require_matrix("matmul", B.shape());
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  if (B.rows() != k) {
    shape_fail("matmul", "inner dims differ: " + dims(A.shape()) + " x " +
                             dims(B.shape()));
  }
  Tensor<T> C({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    T* c = &C[i * n];
    for (std::size_t p = 0; p < k; ++p) {
      const T av = A[i * k + p];
      if (av == T{0}) continue;
      const T* brow = &B[p * n];
      for (std::size_t j = 0; j < n; ++j) c[j] += av * brow[j];
    }
  }
  Node nd;
  nd.kind = OpKind::kMatmul;
  nd.parents = {a, b};
  nd.value = std::move(C);
  return push(std::move(nd));
}

template <typename T>
NodeId Graph<T>::add(NodeId a, NodeId b) {
  const Tensor<T>& A = value(a);
  const Tensor<T>& B = value(b);
  Tensor<T> out = A;
  if (A.shape() == B.shape()) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += B[i];
  } else {
    require_matrix("add", A.shape());
    require_matrix("add", B.shape());
    if (B.rows() != 1 || B.cols() != A.cols()) {
      shape_fail("add", "cannot broadcast " + dims(B.shape()) + " onto " +
                            dims(A.shape()));
    }
    const std::size_t cols = A.cols();
    for (std::size_t r = 0; r < A.rows(); ++r) {
      for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += B[c];
    }
  }
  Node nd;
  nd.kind = OpKind::kAdd;
  nd.parents = {a, b};
  nd.value = std::move(out);
  return push(std::move(nd));
}

template <typename T>
NodeId Graph<T>::relu(NodeId x) {
  Tensor<T> out = value(x);
  for (auto& v : out.storage()) v = v > T{0} ? v : T{0};
  Node nd;
  nd.kind = OpKind::kRelu;
  nd.parents = {x};
  nd.value = std::move(out);
  return push(std::move(nd));
}

template <typename T>
NodeId Graph<T>::sigmoid(NodeId x) {
  Tensor<T> out = value(x);
  for (auto& v : out.storage()) v = stable_sigmoid(v);
  Node nd;
  nd.kind = OpKind::kSigmoid;
  nd.parents = {x};
  nd.value = std::move(out);
  return push(std::move(nd));
}

template <typename T>
NodeId Graph<T>::softmax_rows(NodeId x) {
  const Tensor<T>& X = value(x);
  require_matrix("softmax_rows", X.shape());
  if (X.cols() == 0) shape_fail("softmax_rows", "zero-width rows");
  Tensor<T> out = X;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const T mx = *std::max_element(row.begin(), row.end());
    T total{0};
    for (auto& v : row) {
      v = std::exp(v - mx);
      total += v;
    }
    for (auto& v : row) v /= total;
  }
  Node nd;
  nd.kind = OpKind::kSoftmaxRows;
  nd.parents = {x};
  nd.value = std::move(out);
  return push(std::move(nd));
}

template <typename T>
NodeId Graph<T>::mean_rows(NodeId x) {
  const Tensor<T>& X = value(x);
  require_matrix("mean_rows", X.shape());
  const std::size_t m = X.rows(), n = X.cols();
  if (m == 0) shape_fail("mean_rows", "no rows in " + dims(X.shape()));
  Tensor<T> out({1, n});
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) out[c] += X[r * n + c];
  }
  const T inv = T{1} / static_cast<T>(m);
  for (auto& v : out.storage()) v *= inv;
  Node nd;
  nd.kind = OpKind::kMeanRows;
  nd.parents = {x};
  nd.value = std::move(out);
  return push(std::move(nd));
}

template <typename T>
NodeId Graph<T>::concat_last_axis(std::span<const NodeId> parts) {
  if (parts.empty()) shape_fail("concat_last_axis", "no inputs");
  const std::size_t rows = value(parts[0]).rows();
  std::size_t total_cols = 0;
  for (NodeId p : parts) {
    const Tensor<T>& t = value(p);
    require_matrix("concat_last_axis", t.shape());
    if (t.rows() != rows) {
      shape_fail("concat_last_axis",
                 "row counts differ: " + dims(value(parts[0]).shape()) +
                     " vs " + dims(t.shape()));
    }
    total_cols += t.cols();
  }
  Tensor<T> out({rows, total_cols});
  std::size_t offset = 0;
  for (NodeId p : parts) {
    const Tensor<T>& t = value(p);
    const std::size_t c = t.cols();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(&t[r * c], c, &out[r * total_cols + offset]);
    }
    offset += c;
  }
  Node nd;
  nd.kind = OpKind::kConcatLastAxis;
  nd.parents.assign(parts.begin(), parts.end());
  nd.value = std::move(out);
  return push(std::move(nd));
}

template <typename T>
NodeId Graph<T>::concat_rows(std::span<const NodeId> parts) {
  if (parts.empty()) shape_fail("concat_rows", "no inputs");
  const std::size_t cols = value(parts[0]).cols();
  std::size_t total_rows = 0;
  for (NodeId p : parts) {
    const Tensor<T>& t = value(p);
    require_matrix("concat_rows", t.shape());
    if (t.cols() != cols) {
      shape_fail("concat_rows", "column counts differ: " +
                                    dims(value(parts[0]).shape()) + " vs " +
                                    dims(t.shape()));
    }
    total_rows += t.rows();
  }
  Tensor<T> out({total_rows, cols});
  std::size_t offset = 0;
  for (NodeId p : parts) {
    const Tensor<T>& t = value(p);
    std::copy(t.storage().begin(), t.storage().end(),
              out.storage().begin() + static_cast<std::ptrdiff_t>(offset));
    offset += t.size();
  }
  Node nd;
  nd.kind = OpKind::kConcatRows;
  nd.parents.assign(parts.begin(), parts.end());
  nd.value = std::move(out);
  return push(std::move(nd));
}

template <typename T>
NodeId Graph<T>::slice_rows(NodeId x, std::size_t begin, std::size_t count) {
  const Tensor<T>& X = value(x);
  require_matrix("slice_rows", X.shape());
  if (count == 0 || begin + count > X.rows()) {
    shape_fail("slice_rows", "rows [" + std::to_string(begin) + ", " +
                                 std::to_string(begin + count) +
                                 ") out of range for " + dims(X.shape()));
  }
  const std::size_t cols = X.cols();
  std::vector<T> data(X.storage().begin() + static_cast<std::ptrdiff_t>(begin * cols),
                      X.storage().begin() +
                          static_cast<std::ptrdiff_t>((begin + count) * cols));
  Node nd;
  nd.kind = OpKind::kSliceRows;
  nd.parents = {x};
  nd.value = Tensor<T>({count, cols}, std::move(data));
  nd.offset = begin;
  return push(std::move(nd));
}

template <typename T>
NodeId Graph<T>::scale(NodeId x, T factor) {
  Tensor<T> out = value(x);
  for (auto& v : out.storage()) v *= factor;
  Node nd;
  nd.kind = OpKind::kScale;
  nd.parents = {x};
  nd.value = std::move(out);
  nd.scalar = factor;
  return push(std::move(nd));
}

template <typename T>
NodeId Graph<T>::row_l2_norms(NodeId x) {
  const Tensor<T>& X = value(x);
  require_matrix("row_l2_norms", X.shape());
  const std::size_t m = X.rows(), n = X.cols();
  Tensor<T> out({m, 1});
  for (std::size_t r = 0; r < m; ++r) {
    T s{0};
    for (std::size_t c = 0; c < n; ++c) s += X[r * n + c] * X[r * n + c];
    out[r] = std::sqrt(s);
  }
  Node nd;
  nd.kind = OpKind::kRowL2Norms;
  nd.parents = {x};
  nd.value = std::move(out);
  return push(std::move(nd));
}

template <typename T>
NodeId Graph<T>::cosine_matrix(NodeId a, NodeId b) {
  const Tensor<T>& A = value(a);
  const Tensor<T>& B = value(b);
  require_matrix("cosine_matrix", A.shape());
  require_matrix("cosine_matrix", B.shape());
  const std::size_t m = A.rows(), n = B.rows(), d = A.cols();
  if (B.cols() != d) {
    shape_fail("cosine_matrix", "feature dims differ: " + dims(A.shape()) +
                                    " vs " + dims(B.shape()));
  }
  Tensor<T> na({m}), nb({n});
  for (std::size_t i = 0; i < m; ++i) {
    T s{0};
    for (std::size_t c = 0; c < d; ++c) s += A[i * d + c] * A[i * d + c];
    na[i] = std::sqrt(s);
  }
  for (std::size_t j = 0; j < n; ++j) {
    T s{0};
    for (std::size_t c = 0; c < d; ++c) s += B[j * d + c] * B[j * d + c];
    nb[j] = std::sqrt(s);
  }
  Tensor<T> out({m, n});
  const T eps = static_cast<T>(kCosineEpsilon);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      T dot{0};
      for (std::size_t c = 0; c < d; ++c) dot += A[i * d + c] * B[j * d + c];
      out[i * n + j] = dot / std::max(na[i] * nb[j], eps);
    }
  }
  Node nd;
  nd.kind = OpKind::kCosineMatrix;
  nd.parents = {a, b};
  nd.value = std::move(out);
  nd.saved_a = std::move(na);
  nd.saved_b = std::move(nb);
  return push(std::move(nd));
}

template <typename T>
NodeId Graph<T>::batchnorm(NodeId x, NodeId gamma, NodeId beta, Mode mode,
                           const Tensor<T>* running_mean,
                           const Tensor<T>* running_var, T eps) {
  const Tensor<T>& X = value(x);
  require_matrix("batchnorm", X.shape());
  const std::size_t N = X.rows(), F = X.cols();
  const Tensor<T>& G = value(gamma);
  const Tensor<T>& Bt = value(beta);
  if (G.size() != F || Bt.size() != F) {
    shape_fail("batchnorm", "affine params " + dims(G.shape()) + "/" +
                                dims(Bt.shape()) + " do not match " +
                                dims(X.shape()));
  }
  Node nd;
  nd.kind = OpKind::kBatchNorm;
  nd.parents = {x, gamma, beta};
  nd.mode = mode;
  Tensor<T> mean({1, F}), var({1, F});
  if (mode == Mode::kTrain) {
    if (N < 2) {
      shape_fail("batchnorm",
                 "training mode needs at least 2 rows, got " + dims(X.shape()));
    }
    for (std::size_t r = 0; r < N; ++r) {
      for (std::size_t c = 0; c < F; ++c) mean[c] += X[r * F + c];
    }
    for (auto& v : mean.storage()) v /= static_cast<T>(N);
    for (std::size_t r = 0; r < N; ++r) {
      for (std::size_t c = 0; c < F; ++c) {
        const T dv = X[r * F + c] - mean[c];
        var[c] += dv * dv;
      }
    }
    for (auto& v : var.storage()) v /= static_cast<T>(N);
    nd.stats = {mean, var, N};
  } else {
    if (running_mean == nullptr || running_var == nullptr ||
        running_mean->size() != F || running_var->size() != F) {
      shape_fail("batchnorm", "eval mode needs running statistics of width " +
                                  std::to_string(F));
    }
    std::copy(running_mean->storage().begin(), running_mean->storage().end(),
              mean.storage().begin());
    std::copy(running_var->storage().begin(), running_var->storage().end(),
              var.storage().begin());
  }
  Tensor<T> inv_std({1, F});
  for (std::size_t c = 0; c < F; ++c) inv_std[c] = T{1} / std::sqrt(var[c] + eps);
  Tensor<T> xhat({N, F});
  Tensor<T> out({N, F});
  for (std::size_t r = 0; r < N; ++r) {
    for (std::size_t c = 0; c < F; ++c) {
      const T h = (X[r * F + c] - mean[c]) * inv_std[c];
      xhat[r * F + c] = h;
      out[r * F + c] = G[c] * h + Bt[c];
    }
  }
  nd.value = std::move(out);
  nd.saved_a = std::move(xhat);
  nd.saved_b = std::move(inv_std);
  return push(std::move(nd));
}

template <typename T>
NodeId Graph<T>::noisy_or(NodeId p) {
  const Tensor<T>& P = value(p);
  if (P.empty()) shape_fail("noisy_or", "empty score list");
  const T hi = T{1} - static_cast<T>(kNoisyOrClamp);
  T log_keep{0};
  for (T v : P.storage()) log_keep += std::log1p(-std::min(v, hi));
  Node nd;
  nd.kind = OpKind::kNoisyOr;
  nd.parents = {p};
  nd.value = Tensor<T>::scalar(-std::expm1(log_keep));
  nd.scalar = log_keep;
  return push(std::move(nd));
}

template <typename T>
NodeId Graph<T>::bce(NodeId p, T label) {
  const Tensor<T>& P = value(p);
  if (P.size() != 1) shape_fail("bce", "expected a scalar, got " + dims(P.shape()));
  const T lo = static_cast<T>(kBceClamp);
  const T hi = T{1} - lo;
  const T pc = std::clamp(P[0], lo, hi);
  const T loss = -(label * std::log(pc) + (T{1} - label) * std::log1p(-pc));
  Node nd;
  nd.kind = OpKind::kBce;
  nd.parents = {p};
  nd.value = Tensor<T>::scalar(loss);
  nd.scalar = label;
  return push(std::move(nd));
}

template <typename T>
NodeId Graph<T>::sum(std::span<const NodeId> parts) {
  if (parts.empty()) shape_fail("sum", "no inputs");
  Tensor<T> out = value(parts[0]);
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const Tensor<T>& t = value(parts[i]);
    if (t.shape() != out.shape()) {
      shape_fail("sum", "shapes differ: " + dims(out.shape()) + " vs " +
                            dims(t.shape()));
    }
    for (std::size_t k = 0; k < t.size(); ++k) out[k] += t[k];
  }
  Node nd;
  nd.kind = OpKind::kSum;
  nd.parents.assign(parts.begin(), parts.end());
  nd.value = std::move(out);
  return push(std::move(nd));
}

template <typename T>
const BatchStats<T>& Graph<T>::batch_stats(NodeId bn) const {
  const Node& n = node(bn);
  if (n.kind != OpKind::kBatchNorm || n.mode != Mode::kTrain) {
    throw std::logic_error("batch_stats() needs a train-mode batchnorm node");
  }
  return n.stats;
}

template <typename T>
Tensor<T>& Graph<T>::grad_of(NodeId id) {
  Node& n = nodes_[id.index];
  if (n.grad.shape() != n.value.shape()) n.grad = Tensor<T>(n.value.shape());
  return n.grad;
}

template <typename T>
Gradients<T> Graph<T>::backward(NodeId loss) {
  const Tensor<T>& L = value(loss);
  if (L.size() != 1) {
    throw ShapeError("backward: loss must be scalar, got " + dims(L.shape()));
  }
  for (Node& n : nodes_) n.grad = Tensor<T>();
  grad_of(loss)[0] = T{1};
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    propagate(n);
  }
  Gradients<T> out;
  for (const auto& [name, id] : param_nodes_) {
    Node& n = nodes_[id.index];
    out.params.emplace(name, n.grad.empty() ? Tensor<T>(n.value.shape()) : n.grad);
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.kind != OpKind::kVariable) continue;
    out.variables.emplace(static_cast<std::uint32_t>(i),
                          n.grad.empty() ? Tensor<T>(n.value.shape()) : n.grad);
  }
  return out;
}

template <typename T>
void Graph<T>::propagate(Node& n) {
  const Tensor<T>& g = n.grad;
  auto wants = [this](NodeId p) { return nodes_[p.index].requires_grad; };

  switch (n.kind) {
    case OpKind::kConstant:
    case OpKind::kVariable:
    case OpKind::kParameter:
      return;

    case OpKind::kMatmul: {
      const NodeId a = n.parents[0], b = n.parents[1];
      const Tensor<T>& A = nodes_[a.index].value;
      const Tensor<T>& B = nodes_[b.index].value;
      const std::size_t m = A.rows(), k = A.cols(), cols = B.cols();
      if (wants(a)) {
        Tensor<T>& ga = grad_of(a);
        for (std::size_t i = 0; i < m; ++i) {
          const T* grow = &g[i * cols];
          for (std::size_t p = 0; p < k; ++p) {
            const T* brow = &B[p * cols];
            T s{0};
            for (std::size_t j = 0; j < cols; ++j) s += grow[j] * brow[j];
            ga[i * k + p] += s;
          }
        }
      }
      if (wants(b)) {
        Tensor<T>& gb = grad_of(b);
        for (std::size_t i = 0; i < m; ++i) {
          const T* grow = &g[i * cols];
          for (std::size_t p = 0; p < k; ++p) {
            const T av = A[i * k + p];
            if (av == T{0}) continue;
            T* dst = &gb[p * cols];
            for (std::size_t j = 0; j < cols; ++j) dst[j] += av * grow[j];
          }
        }
      }
      return;
    }

    case OpKind::kAdd: {
      const NodeId a = n.parents[0], b = n.parents[1];
      if (wants(a)) {
        Tensor<T>& ga = grad_of(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (wants(b)) {
        Tensor<T>& gb = grad_of(b);
        if (gb.size() == g.size()) {
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
        } else {
          const std::size_t cols = gb.size();
          for (std::size_t i = 0; i < g.size(); ++i) gb[i % cols] += g[i];
        }
      }
      return;
    }

    case OpKind::kRelu: {
      const NodeId x = n.parents[0];
      if (!wants(x)) return;
      Tensor<T>& gx = grad_of(x);
      const Tensor<T>& X = nodes_[x.index].value;
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (X[i] > T{0}) gx[i] += g[i];
      }
      return;
    }

    case OpKind::kSigmoid: {
      const NodeId x = n.parents[0];
      if (!wants(x)) return;
      Tensor<T>& gx = grad_of(x);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const T y = n.value[i];
        gx[i] += g[i] * y * (T{1} - y);
      }
      return;
    }

    case OpKind::kSoftmaxRows: {
      const NodeId x = n.parents[0];
      if (!wants(x)) return;
      Tensor<T>& gx = grad_of(x);
      const std::size_t rows = n.value.rows(), cols = n.value.cols();
      for (std::size_t r = 0; r < rows; ++r) {
        T dot{0};
        for (std::size_t c = 0; c < cols; ++c) {
          dot += g[r * cols + c] * n.value[r * cols + c];
        }
        for (std::size_t c = 0; c < cols; ++c) {
          gx[r * cols + c] += n.value[r * cols + c] * (g[r * cols + c] - dot);
        }
      }
      return;
    }

    case OpKind::kMeanRows: {
      const NodeId x = n.parents[0];
      if (!wants(x)) return;
      Tensor<T>& gx = grad_of(x);
      const std::size_t rows = gx.rows(), cols = gx.cols();
      const T inv = T{1} / static_cast<T>(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) gx[r * cols + c] += g[c] * inv;
      }
      return;
    }

    case OpKind::kConcatLastAxis: {
      const std::size_t rows = n.value.rows(), total = n.value.cols();
      std::size_t offset = 0;
      for (NodeId p : n.parents) {
        const std::size_t c = nodes_[p.index].value.cols();
        if (wants(p)) {
          Tensor<T>& gp = grad_of(p);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t k = 0; k < c; ++k) {
              gp[r * c + k] += g[r * total + offset + k];
            }
          }
        }
        offset += c;
      }
      return;
    }

    case OpKind::kConcatRows: {
      std::size_t offset = 0;
      for (NodeId p : n.parents) {
        const std::size_t len = nodes_[p.index].value.size();
        if (wants(p)) {
          Tensor<T>& gp = grad_of(p);
          for (std::size_t k = 0; k < len; ++k) gp[k] += g[offset + k];
        }
        offset += len;
      }
      return;
    }

    case OpKind::kSliceRows: {
      const NodeId x = n.parents[0];
      if (!wants(x)) return;
      Tensor<T>& gx = grad_of(x);
      const std::size_t start = n.offset * n.value.cols();
      for (std::size_t k = 0; k < g.size(); ++k) gx[start + k] += g[k];
      return;
    }

    case OpKind::kScale: {
      const NodeId x = n.parents[0];
      if (!wants(x)) return;
      Tensor<T>& gx = grad_of(x);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * n.scalar;
      return;
    }

    case OpKind::kRowL2Norms: {
      const NodeId x = n.parents[0];
      if (!wants(x)) return;
      Tensor<T>& gx = grad_of(x);
      const Tensor<T>& X = nodes_[x.index].value;
      const std::size_t rows = X.rows(), cols = X.cols();
      for (std::size_t r = 0; r < rows; ++r) {
        const T norm = n.value[r];
        if (norm == T{0}) continue;
        for (std::size_t c = 0; c < cols; ++c) {
          gx[r * cols + c] += g[r] * X[r * cols + c] / norm;
        }
      }
      return;
    }

    case OpKind::kCosineMatrix: {
      const NodeId a = n.parents[0], b = n.parents[1];
      const Tensor<T>& A = nodes_[a.index].value;
      const Tensor<T>& B = nodes_[b.index].value;
      const Tensor<T>& na = n.saved_a;
      const Tensor<T>& nb = n.saved_b;
      const std::size_t m = A.rows(), cnt = B.rows(), d = A.cols();
      const T eps = static_cast<T>(kCosineEpsilon);
      const bool ga_on = wants(a), gb_on = wants(b);
      Tensor<T>* ga = ga_on ? &grad_of(a) : nullptr;
      Tensor<T>* gb = gb_on ? &grad_of(b) : nullptr;
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < cnt; ++j) {
          const T gij = g[i * cnt + j];
          if (gij == T{0}) continue;
          const T prod = na[i] * nb[j];
          const T cij = n.value[i * cnt + j];
          if (prod > eps) {
            const T inv = T{1} / prod;
            const T ca = cij / (na[i] * na[i]);
            const T cb = cij / (nb[j] * nb[j]);
            for (std::size_t c = 0; c < d; ++c) {
              if (ga_on) {
                (*ga)[i * d + c] += gij * (B[j * d + c] * inv - ca * A[i * d + c]);
              }
              if (gb_on) {
                (*gb)[j * d + c] += gij * (A[i * d + c] * inv - cb * B[j * d + c]);
              }
            }
          } else {
            const T inv = T{1} / eps;
            for (std::size_t c = 0; c < d; ++c) {
              if (ga_on) (*ga)[i * d + c] += gij * B[j * d + c] * inv;
              if (gb_on) (*gb)[j * d + c] += gij * A[i * d + c] * inv;
            }
          }
        }
      }
      return;
    }

    case OpKind::kBatchNorm: {
      const NodeId x = n.parents[0], gamma = n.parents[1], beta = n.parents[2];
      const Tensor<T>& xhat = n.saved_a;
      const Tensor<T>& inv_std = n.saved_b;
      const Tensor<T>& G = nodes_[gamma.index].value;
      const std::size_t N = xhat.rows(), F = xhat.cols();
      Tensor<T> sum_g({F}), sum_gx({F});
      for (std::size_t r = 0; r < N; ++r) {
        for (std::size_t c = 0; c < F; ++c) {
          sum_g[c] += g[r * F + c];
          sum_gx[c] += g[r * F + c] * xhat[r * F + c];
        }
      }
      if (wants(gamma)) {
        Tensor<T>& gg = grad_of(gamma);
        for (std::size_t c = 0; c < F; ++c) gg[c] += sum_gx[c];
      }
      if (wants(beta)) {
        Tensor<T>& gbeta = grad_of(beta);
        for (std::size_t c = 0; c < F; ++c) gbeta[c] += sum_g[c];
      }
      if (wants(x)) {
        Tensor<T>& gx = grad_of(x);
        if (n.mode == Mode::kTrain) {
          const T invN = T{1} / static_cast<T>(N);
          for (std::size_t r = 0; r < N; ++r) {
            for (std::size_t c = 0; c < F; ++c) {
              const std::size_t k = r * F + c;
              gx[k] += G[c] * inv_std[c] *
                       (g[k] - invN * sum_g[c] - xhat[k] * invN * sum_gx[c]);
            }
          }
        } else {
          for (std::size_t r = 0; r < N; ++r) {
            for (std::size_t c = 0; c < F; ++c) {
              gx[r * F + c] += g[r * F + c] * G[c] * inv_std[c];
            }
          }
        }
      }
      return;
    }

    case OpKind::kNoisyOr: {
      const NodeId p = n.parents[0];
      if (!wants(p)) return;
      Tensor<T>& gp = grad_of(p);
      const Tensor<T>& P = nodes_[p.index].value;
      const T hi = T{1} - static_cast<T>(kNoisyOrClamp);
      const T keep = std::exp(n.scalar);
      for (std::size_t i = 0; i < P.size(); ++i) {
        if (P[i] >= hi) continue;
        gp[i] += g[0] * keep / (T{1} - P[i]);
      }
      return;
    }

    case OpKind::kBce: {
      const NodeId p = n.parents[0];
      if (!wants(p)) return;
      const T v = nodes_[p.index].value[0];
      const T lo = static_cast<T>(kBceClamp);
      if (v <= lo || v >= T{1} - lo) return;
      const T y = n.scalar;
      grad_of(p)[0] += g[0] * (v - y) / (v * (T{1} - v));
      return;
    }

    case OpKind::kSum: {
      for (NodeId p : n.parents) {
        if (!wants(p)) continue;
        Tensor<T>& gp = grad_of(p);
        for (std::size_t i = 0; i < g.size(); ++i) gp[i] += g[i];
      }
      return;
    }
  }
}

template class Graph<float>;
template class Graph<double>;

}  // namespace didan
