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

#ifndef DIDAN_GRAPH_H_
#define DIDAN_GRAPH_H_

#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "didan/params.h"
#include "didan/tensor.h"

namespace didan {

struct NodeId {
  std::uint32_t index = 0;
  friend auto operator<=>(NodeId, NodeId) = default;
};

enum class OpKind {
  kConstant,
  kVariable,
  kParameter,
  kMatmul,
  kAdd,
  kRelu,
  kSigmoid,
  kSoftmaxRows,
  kMeanRows,
  kConcatLastAxis,
  kConcatRows,
  kSliceRows,
  kScale,
  kRowL2Norms,
  kCosineMatrix,
  kBatchNorm,
  kNoisyOr,
  kBce,
  kSum,
};

const char* op_name(OpKind kind);

enum class Mode { kTrain, kEval };

// Denominator floor for cosine similarities; zero rows yield 0, not NaN.
inline constexpr double kCosineEpsilon = 1e-8;
// Upper clamp applied to each factor before the noisy-OR product.
inline constexpr double kNoisyOrClamp = 1e-7;
// Probability clamp applied inside the binary cross-entropy.
inline constexpr double kBceClamp = 1e-7;

template <typename T>
struct BatchStats {
  Tensor<T> mean;      // [1 x F]
  Tensor<T> variance;  // [1 x F], biased
  std::size_t count = 0;
};

template <typename T>
struct Gradients {
  // Keyed by parameter name.
  std::map<std::string, Tensor<T>, std::less<>> params;
  // Keyed by node index, only for leaves created with Graph::variable().
  std::map<std::uint32_t, Tensor<T>> variables;
};

// Dynamic computation graph for one minibatch. Nodes are appended in
// construction order, which is a topological order, so backward() walks
// the node list in reverse.
template <typename T>
class Graph {
 public:
  // `params` must outlive the graph; parameter() reads from it.
  explicit Graph(const ParamStore<T>* params = nullptr) : params_(params) {}

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  NodeId constant(Tensor<T> value);
  // Leaf whose gradient is reported by backward().
  NodeId variable(Tensor<T> value);
  // Leaf bound to a named entry of the ParamStore. Repeated calls with the
  // same name return the same node so gradients accumulate in one place.
  NodeId parameter(const std::string& name);

  NodeId matmul(NodeId a, NodeId b);
  // Elementwise a + b; b may also be a single row broadcast over a's rows.
  NodeId add(NodeId a, NodeId b);
  NodeId relu(NodeId x);
  NodeId sigmoid(NodeId x);
  NodeId softmax_rows(NodeId x);
  NodeId mean_rows(NodeId x);
  NodeId concat_last_axis(std::span<const NodeId> parts);
  NodeId concat_rows(std::span<const NodeId> parts);
  NodeId slice_rows(NodeId x, std::size_t begin, std::size_t count);
  NodeId scale(NodeId x, T factor);
  NodeId row_l2_norms(NodeId x);
  // Rows of `a` against rows of `b`: out(i, j) = cos(a_i, b_j).
  NodeId cosine_matrix(NodeId a, NodeId b);
  // Per-column normalization of x [N x F] with affine gamma/beta [1 x F].
  // Train mode uses batch statistics (N >= 2 required); eval mode uses the
  // supplied running statistics.
  NodeId batchnorm(NodeId x, NodeId gamma, NodeId beta, Mode mode,
                   const Tensor<T>* running_mean,
                   const Tensor<T>* running_var, T eps);
  // 1 - prod(1 - p_i) over every element of p, evaluated in log space.
  NodeId noisy_or(NodeId p);
  NodeId bce(NodeId p, T label);
  // Elementwise sum of equally shaped nodes.
  NodeId sum(std::span<const NodeId> parts);

  const Tensor<T>& value(NodeId id) const { return node(id).value; }
  OpKind kind(NodeId id) const { return node(id).kind; }
  std::span<const NodeId> parents(NodeId id) const { return node(id).parents; }
  std::size_t size() const { return nodes_.size(); }
  const BatchStats<T>& batch_stats(NodeId bn) const;

  // Reverse-mode sweep from a scalar loss. Gradients are reset first, so a
  // graph may be differentiated more than once.
  Gradients<T> backward(NodeId loss);

 private:
  struct Node {
    OpKind kind = OpKind::kConstant;
    std::vector<NodeId> parents;
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    std::string param_name;
    // Op-specific saved values for the backward pass.
    Tensor<T> saved_a;
    Tensor<T> saved_b;
    T scalar = T{0};
    std::size_t offset = 0;
    Mode mode = Mode::kEval;
    BatchStats<T> stats;
  };

  const Node& node(NodeId id) const;
  Node& node(NodeId id);
  NodeId push(Node n);
  Tensor<T>& grad_of(NodeId id);
  void propagate(Node& n);

  const ParamStore<T>* params_ = nullptr;
  std::vector<Node> nodes_;
  std::map<std::string, NodeId, std::less<>> param_nodes_;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace didan

#endif  // DIDAN_GRAPH_H_
