#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dingo/linops.hpp"

namespace dingo {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Immutable sample matrix with either integer class labels or real targets.
struct Dataset {
  std::size_t n = 0;          // samples
  std::size_t p = 0;          // features
  std::size_t num_classes = 0;  // 0 for regression data
  std::vector<double> features;  // row-major n x p
  std::vector<int> labels;       // classification, size n
  std::vector<double> targets;   // regression, size n

  std::span<const double> row(std::size_t j) const {
    return std::span<const double>(features).subspan(j * p, p);
  }
  bool classification() const { return num_classes > 0; }
  void validate() const;
};

/// A worker's local index set. partition() produces disjoint covering shards;
/// hand-built shards may overlap (e.g. replicated data across workers).
struct Shard {
  std::vector<std::size_t> indices;
  std::size_t size() const { return indices.size(); }
};

enum class ObjectiveKind { least_squares, softmax_xent, logistic };

ObjectiveKind objective_kind_from_string(const std::string& s);
const char* to_string(ObjectiveKind k);

/// Finite-sum objective description. Per-shard losses:
///   least_squares: 0.5 * |A_S w - b_S|^2         (sum over shard rows)
///   softmax_xent:  mean cross-entropy, C-1 weight blocks, last class pinned
///   logistic:      mean binary cross-entropy on labels {0,1}
/// plus 0.5 * reg * |w|^2 in each shard term.
struct Objective {
  ObjectiveKind kind = ObjectiveKind::least_squares;
  double reg = 0.0;

  /// Parameter dimension for a dataset: p for least_squares/logistic,
  /// p*(C-1) for softmax.
  std::size_t dim(const Dataset& data) const;
  void check_compatible(const Dataset& data) const;
};

double local_value(const Objective& obj, const Dataset& data,
                   const Shard& shard, const Vector& w);

Vector local_gradient(const Objective& obj, const Dataset& data,
                      const Shard& shard, const Vector& w);

Vector local_hvp(const Objective& obj, const Dataset& data, const Shard& shard,
                 const Vector& w, const Vector& v);

/// Symmetric matrix-free view of the local Hessian at a fixed point.
class LocalHessianMap final : public LinearMap {
 public:
  LocalHessianMap(const Objective& obj, const Dataset& data, const Shard& shard,
                  Vector w)
      : obj_(obj), data_(data), shard_(shard), w_(std::move(w)) {
    dim_ = obj_.dim(data_);
    require_same_dim(w_.size(), dim_, "LocalHessianMap");
  }

  std::size_t rows() const override { return dim_; }
  std::size_t cols() const override { return dim_; }
  bool symmetric() const override { return true; }
  void apply(std::span<const double> x, std::span<double> y) const override;

 private:
  const Objective& obj_;
  const Dataset& data_;
  const Shard& shard_;
  Vector w_;
  std::size_t dim_;
};

/// Random partition of {0..n-1} into m shards whose sizes differ by at most
/// one (equal when m divides n). Deterministic in the seed.
std::vector<Shard> partition(std::size_t n, std::size_t m, std::uint64_t seed);

/// Sample round(fraction * pool size) entries (at least one) without
/// replacement, returned in ascending order. fraction 1 returns the pool
/// unchanged. Deterministic in the seed.
std::vector<std::size_t> sample_without_replacement(
    const std::vector<std::size_t>& pool, double fraction, std::uint64_t seed);

/// Synthetic data generators. Gaussian features with per-coordinate scale
/// k^{-decay/2} and a planted linear model; classification labels get
/// `label_noise` fraction of uniform random flips.
struct SyntheticSpec {
  ObjectiveKind kind = ObjectiveKind::softmax_xent;
  std::size_t n = 1000;
  std::size_t p = 20;
  std::size_t num_classes = 5;  // softmax only
  double decay = 0.0;           // feature covariance spectrum decay exponent
  double label_noise = 0.0;
  double target_noise = 0.1;    // least squares observation noise
  double scale = 1.0;           // planted model magnitude
};

Dataset gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// Dense CSV: one sample per line, first field is the integer label
/// (classification) or the real target (regression), followed by p features.
/// No header. Parse failures name the offending 1-based line.
Dataset load_csv(const std::string& path, bool classification);

/// Sparse text: "LABEL idx:val idx:val ...", 1-based ascending indices.
/// Feature count is the largest index seen unless `dim` is given.
Dataset load_sparse_text(const std::string& path, std::size_t dim = 0);

}  // namespace dingo
