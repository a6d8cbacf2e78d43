#include "dnf/merge.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "dnf/checkpoint.hpp"
#include "dnf/common.hpp"

namespace dnf {
namespace {

using ojson = nlohmann::ordered_json;

void check_deltas(const NamedTensorSet& base, std::span<const WeightedDelta> deltas) {
  for (const auto& d : deltas) {
    if (!d.delta) throw Error(ErrorCode::InvalidArgument, "null delta");
    check_compatible(base, *d.delta);
  }
}

void check_density(double density) {
  if (!(density > 0.0 && density <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "density must lie in (0, 1]");
  }
}

float sign_of(float v) { return v > 0.0f ? 1.0f : (v < 0.0f ? -1.0f : 0.0f); }

}  // namespace

NamedTensorSet task_vector(const NamedTensorSet& model, const NamedTensorSet& base) {
  check_compatible(model, base);
  NamedTensorSet out;
  for (const auto& [name, t] : model) {
    out.emplace(name, Tensor(t.shape, t.data - base.at(name).data));
  }
  return out;
}

NamedTensorSet task_arithmetic_merge(const NamedTensorSet& base,
                                     std::span<const WeightedDelta> deltas) {
  check_deltas(base, deltas);
  NamedTensorSet out;
  for (const auto& [name, b] : base) {
    Eigen::ArrayXf acc = Eigen::ArrayXf::Zero(b.data.size());
    for (const auto& d : deltas) acc += d.weight * d.delta->at(name).data;
    // a zero delta leaves base untouched, signed zeros included
    out.emplace(name, Tensor(b.shape, (acc != 0.0f).select(b.data + acc, b.data)));
  }
  return out;
}

std::vector<Eigen::Index> ties_keep(const Eigen::ArrayXf& values, double density) {
  check_density(density);
  const auto n = values.size();
  // tolerance so that e.g. 0.3 * 10 keeps 3, not 4
  auto k = static_cast<Eigen::Index>(std::ceil(density * static_cast<double>(n) - 1e-9));
  k = std::clamp<Eigen::Index>(k, 0, n);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(values[a]) > std::abs(values[b]);
  });
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  return idx;
}

NamedTensorSet ties_merge(const NamedTensorSet& base, std::span<const WeightedDelta> deltas,
                          double density) {
  check_density(density);
  check_deltas(base, deltas);
  NamedTensorSet out;
  for (const auto& [name, b] : base) {
    const auto n = b.data.size();
    std::vector<Eigen::ArrayXf> weighted;
    weighted.reserve(deltas.size());
    Eigen::ArrayXf sum = Eigen::ArrayXf::Zero(n);
    for (const auto& d : deltas) {
      const auto& tau = d.delta->at(name).data;
      Eigen::ArrayXf w = Eigen::ArrayXf::Zero(n);
      for (auto i : ties_keep(tau, density)) w[i] = d.weight * tau[i];
      sum += w;
      weighted.push_back(std::move(w));
    }
    const Eigen::ArrayXf elected = sum.unaryExpr(&sign_of);

    Eigen::ArrayXf acc = Eigen::ArrayXf::Zero(n);
    Eigen::ArrayXf count = Eigen::ArrayXf::Zero(n);
    for (const auto& w : weighted) {
      const auto agree = (w != 0.0f) && (w.unaryExpr(&sign_of) == elected);
      acc += agree.select(w, 0.0f);
      count += agree.cast<float>();
    }
    const Eigen::ArrayXf delta = (count > 0.0f).select(acc / count.max(1.0f), 0.0f);
    out.emplace(name, Tensor(b.shape, (delta != 0.0f).select(b.data + delta, b.data)));
  }
  return out;
}

std::string_view to_string(MergeStrategy s) {
  return s == MergeStrategy::Ties ? "ties" : "task_arithmetic";
}

MergeStrategy parse_merge_strategy(std::string_view s) {
  if (s == "task_arithmetic" || s == "task" || s == "ta") return MergeStrategy::TaskArithmetic;
  if (s == "ties" || s == "tie") return MergeStrategy::Ties;
  throw Error(ErrorCode::InvalidArgument, "unknown merge strategy '" + std::string(s) + "'");
}

void MergeConfig::validate() const {
  if (!(alpha1 >= 0.0 && alpha1 <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "alpha1 must lie in [0, 1]");
  }
  check_density(density);
}

ojson MergeConfig::to_json() const {
  ojson j;
  j["strategy"] = to_string(strategy);
  j["alpha1"] = alpha1;
  j["alpha2"] = alpha2();
  j["density"] = density;
  return j;
}

NamedTensorSet merge_models(const NamedTensorSet& base, const NamedTensorSet& fp_model,
                            const NamedTensorSet& donor, const MergeConfig& config) {
  config.validate();
  const auto tau_fp = task_vector(fp_model, base);
  const auto tau_donor = task_vector(donor, base);
  const WeightedDelta deltas[] = {{&tau_fp, static_cast<float>(config.alpha1)},
                                  {&tau_donor, static_cast<float>(config.alpha2())}};
  if (config.strategy == MergeStrategy::Ties) return ties_merge(base, deltas, config.density);
  return task_arithmetic_merge(base, deltas);
}

SweepResult sweep_merge(const NamedTensorSet& base, const NamedTensorSet& fp_model,
                        const NamedTensorSet& donor, MergeStrategy strategy,
                        std::span<const double> alphas, double density,
                        const std::filesystem::path& out_dir, const ojson& inputs) {
  if (alphas.empty()) throw Error(ErrorCode::InvalidArgument, "no alphas to sweep");
  check_compatible(base, fp_model);
  check_compatible(base, donor);
  std::vector<MergeConfig> configs;
  for (double a : alphas) {
    MergeConfig c{strategy, a, density};
    c.validate();
    configs.push_back(c);
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + out_dir.string() + ": " + ec.message());

  SweepResult result;
  ojson entries = ojson::array();
  for (std::size_t i = 0; i < configs.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "merged-%02zu-a%.4f.safetensors", i, configs[i].alpha1);
    const auto path = out_dir / name;
    write_checkpoint(path, merge_models(base, fp_model, donor, configs[i]));
    result.checkpoints.push_back(path);
    ojson e = configs[i].to_json();
    e["path"] = name;
    entries.push_back(std::move(e));
  }

  ojson manifest;
  manifest["format"] = "dnf-merge-manifest";
  manifest["version"] = 1;
  manifest["tool_version"] = kVersion;
  manifest["strategy"] = to_string(strategy);
  manifest["density"] = density;
  manifest["alphas"] = std::vector<double>(alphas.begin(), alphas.end());
  manifest["inputs"] = inputs;
  manifest["entries"] = std::move(entries);
  result.manifest = out_dir / "manifest.json";
  write_file(result.manifest, manifest.dump(2) + "\n");
  return result;
}

}  // namespace dnf
