#pragma once

#include "ptlab/nncore/graph.hpp"
#include "ptlab/nncore/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace ptlab::nncore {

template <typename T>
struct EvalResult {
  std::vector<BasicTensor<T>> outputs;
  std::map<std::string, BasicTensor<T>> grads;
};

/// Builds a graph with `build(graph, input_nodes) -> std::vector<NodeId>`,
/// evaluates it and differentiates output `loss_index`.
template <typename T, typename Build>
EvalResult<T> eval_with_grads(Build&& build, const BasicParamSet<T>& params,
                              const std::vector<BasicTensor<T>>& inputs,
                              std::size_t loss_index = 0) {
  Graph<T> g(params);
  std::vector<NodeId> in;
  in.reserve(inputs.size());
  for (const auto& x : inputs) in.push_back(g.input(x));
  std::vector<NodeId> outs = build(g, std::span<const NodeId>(in));
  if (loss_index >= outs.size()) throw std::out_of_range("loss index beyond graph outputs");
  EvalResult<T> result;
  for (NodeId o : outs) result.outputs.push_back(g.value(o));
  result.grads = g.backward(outs[loss_index]);
  return result;
}

template <typename T, typename Build>
T eval_loss(Build&& build, const BasicParamSet<T>& params, const std::vector<BasicTensor<T>>& inputs,
            std::size_t loss_index = 0) {
  Graph<T> g(params);
  std::vector<NodeId> in;
  for (const auto& x : inputs) in.push_back(g.input(x));
  std::vector<NodeId> outs = build(g, std::span<const NodeId>(in));
  return g.value(outs.at(loss_index)).item();
}

struct GradientCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t probes = 0;
};

/// Compares `analytic` against central differences of the loss, probing up to
/// `probe_count` coordinates of every trainable tensor (all of them when the
/// tensor is that small). Error per coordinate is
/// |analytic - numeric| / max(1, |analytic|).
template <typename Build>
GradientCheckResult compare_with_finite_differences(
    Build&& build, const BasicParamSet<double>& params,
    const std::vector<BasicTensor<double>>& inputs,
    const std::map<std::string, BasicTensor<double>>& analytic, std::size_t probe_count,
    double h, std::uint64_t seed = 0, std::size_t loss_index = 0) {
  if (!(h > 0.0)) throw std::invalid_argument("gradient_check: step size must be positive");
  if (probe_count == 0) throw std::invalid_argument("gradient_check: probe_count must be >= 1");

  BasicParamSet<double> work = params;
  GradientCheckResult result;
  Rng rng = Rng::derive(seed, "gradient_check");
  for (const auto& name : params.trainable_names()) {
    const auto rows = params.trainable_rows(name);
    const auto& p = params.get(name);
    const std::size_t width = p.rank() == 0 ? 1 : p.numel() / p.shape()[0];
    const std::size_t first = rows.begin * width;
    const std::size_t count = (rows.end - rows.begin) * width;
    auto it = analytic.find(name);
    if (it == analytic.end()) throw std::invalid_argument("gradient_check: no gradient for " + name);

    std::vector<std::size_t> coords;
    if (count <= probe_count) {
      for (std::size_t i = 0; i < count; ++i) coords.push_back(first + i);
    } else {
      for (std::size_t i = 0; i < probe_count; ++i) coords.push_back(first + rng.below(count));
    }
    for (std::size_t idx : coords) {
      double& slot = work.get_mut(name)[idx];
      const double saved = slot;
      slot = saved + h;
      const double up = eval_loss(build, work, inputs, loss_index);
      slot = saved - h;
      const double down = eval_loss(build, work, inputs, loss_index);
      slot = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = it->second[idx];
      const double err = std::abs(a - numeric) / std::max(1.0, std::abs(a));
      ++result.probes;
      if (err > result.max_rel_error || result.probes == 1) {
        result.max_rel_error = err;
        result.worst_param = name;
        result.worst_index = idx;
      }
    }
  }
  return result;
}

/// Reverse-mode gradients checked against central differences. Both sides
/// are evaluated in double precision so that the comparison measures the
/// derivative formulas rather than float32 rounding of the loss.
template <typename Build>
GradientCheckResult gradient_check(Build&& build, const ParamSet& params,
                                   const std::vector<Tensor>& inputs, std::size_t probe_count,
                                   double h, std::uint64_t seed = 0) {
  if (!(h > 0.0)) throw std::invalid_argument("gradient_check: step size must be positive");
  if (probe_count == 0) throw std::invalid_argument("gradient_check: probe_count must be >= 1");
  const auto pd = params.cast<double>();
  std::vector<BasicTensor<double>> in;
  for (const auto& x : inputs) in.push_back(x.cast<double>());
  auto analytic = eval_with_grads<double>(build, pd, in);
  return compare_with_finite_differences(build, pd, in, analytic.grads, probe_count, h, seed);
}

}  // namespace ptlab::nncore
