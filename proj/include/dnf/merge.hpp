#pragma once

// Weight-space merging: task vectors, task arithmetic and TIES.

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dnf/tensor.hpp"

namespace dnf {

struct WeightedDelta {
  const NamedTensorSet* delta;
  float weight;
};

/// model - base, per tensor.
NamedTensorSet task_vector(const NamedTensorSet& model, const NamedTensorSet& base);

/// base + sum of weight * delta.
NamedTensorSet task_arithmetic_merge(const NamedTensorSet& base,
                                     std::span<const WeightedDelta> deltas);

/// Per tensor: keep the top ceil(density * n) magnitudes of each delta (lower
/// index wins ties), elect the sign of the weighted sum (0 when it vanishes),
/// then average the weighted nonzero values that agree with it.
NamedTensorSet ties_merge(const NamedTensorSet& base, std::span<const WeightedDelta> deltas,
                          double density);

/// Indices kept by the TIES trim step, ascending.
std::vector<Eigen::Index> ties_keep(const Eigen::ArrayXf& values, double density);

enum class MergeStrategy { TaskArithmetic, Ties };

std::string_view to_string(MergeStrategy s);
MergeStrategy parse_merge_strategy(std::string_view s);

struct MergeConfig {
  MergeStrategy strategy = MergeStrategy::TaskArithmetic;
  double alpha1 = 0.5;  // weight on the fingerprinted model's delta
  double density = 1.0;

  double alpha2() const { return 1.0 - alpha1; }
  void validate() const;
  nlohmann::ordered_json to_json() const;
};

/// Merges fp_model and donor onto base with weights alpha1 and alpha2.
NamedTensorSet merge_models(const NamedTensorSet& base, const NamedTensorSet& fp_model,
                            const NamedTensorSet& donor, const MergeConfig& config);

struct SweepResult {
  std::vector<std::filesystem::path> checkpoints;
  std::filesystem::path manifest;
};

/// One checkpoint per alpha in out_dir plus manifest.json. Manifest paths are
/// relative to out_dir.
SweepResult sweep_merge(const NamedTensorSet& base, const NamedTensorSet& fp_model,
                        const NamedTensorSet& donor, MergeStrategy strategy,
                        std::span<const double> alphas, double density,
                        const std::filesystem::path& out_dir,
                        const nlohmann::ordered_json& inputs = nlohmann::ordered_json::object());

}  // namespace dnf
