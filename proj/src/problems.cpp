#include "dingo/problems.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

namespace dingo {

namespace {

double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
  return z > 0.0 ? 1.0 / (1.0 + std::exp(-z))
                 : std::exp(z) / (1.0 + std::exp(z));
}

// Bounded draw; hand-rolled so shuffles and samples are pinned by this code
// rather than by the standard library's distribution internals.
std::size_t draw_below(std::mt19937_64& rng, std::size_t bound) {
  return static_cast<std::size_t>(rng() % bound);
}

}  // namespace

void Dataset::validate() const {
  if (features.size() != n * p)
    throw InvariantError("Dataset: feature storage size mismatch");
  check_finite(features, "Dataset features");
  if (classification()) {
    if (labels.size() != n) throw InvariantError("Dataset: label count mismatch");
    for (std::size_t j = 0; j < n; ++j)
      if (labels[j] < 0 || static_cast<std::size_t>(labels[j]) >= num_classes)
        throw InvariantError("Dataset: label out of range at sample " +
                             std::to_string(j));
  } else {
    if (targets.size() != n)
      throw InvariantError("Dataset: target count mismatch");
    check_finite(targets, "Dataset targets");
  }
}

ObjectiveKind objective_kind_from_string(const std::string& s) {
  if (s == "least_squares" || s == "lstsq") return ObjectiveKind::least_squares;
  if (s == "softmax" || s == "softmax_xent") return ObjectiveKind::softmax_xent;
  if (s == "logistic") return ObjectiveKind::logistic;
  throw ConfigError("unknown objective kind: " + s);
}

const char* to_string(ObjectiveKind k) {
  switch (k) {
    case ObjectiveKind::least_squares: return "least_squares";
    case ObjectiveKind::softmax_xent: return "softmax_xent";
    case ObjectiveKind::logistic: return "logistic";
  }
  return "?";
}

std::size_t Objective::dim(const Dataset& data) const {
  switch (kind) {
    case ObjectiveKind::least_squares:
    case ObjectiveKind::logistic:
      return data.p;
    case ObjectiveKind::softmax_xent:
      return data.p * (data.num_classes - 1);
  }
  return 0;
}

void Objective::check_compatible(const Dataset& data) const {
  switch (kind) {
    case ObjectiveKind::least_squares:
      if (data.classification())
        throw ConfigError("least_squares needs real targets");
      break;
    case ObjectiveKind::logistic:
      if (data.num_classes != 2)
        throw ConfigError("logistic needs exactly two classes");
      break;
    case ObjectiveKind::softmax_xent:
      if (data.num_classes < 2)
        throw ConfigError("softmax needs at least two classes");
      break;
  }
  if (reg < 0.0) throw ConfigError("regularizer must be non-negative");
}

namespace {

// Shared per-sample softmax machinery. Parameters are C-1 blocks of length p;
// the last class has pinned zero logits.
struct SoftmaxScratch {
  std::vector<double> logits;  // C-1 free logits
  std::vector<double> probs;   // C-1 class probabilities
  std::vector<double> dirs;    // C-1 directional logits (hvp only)
};

void softmax_forward(const Dataset& data, std::span<const double> w,
                     std::size_t j, SoftmaxScratch& s, double* lse_out) {
  const std::size_t p = data.p;
  const std::size_t blocks = data.num_classes - 1;
  const auto x = data.row(j);
  s.logits.assign(blocks, 0.0);
  for (std::size_t c = 0; c < blocks; ++c) {
    double z = 0.0;
    const double* wc = w.data() + c * p;
    for (std::size_t k = 0; k < p; ++k) z += wc[k] * x[k];
    s.logits[c] = z;
  }
  double zmax = 0.0;  // pinned class logit
  for (double z : s.logits) zmax = std::max(zmax, z);
  double sum = std::exp(-zmax);  // pinned class
  for (double z : s.logits) sum += std::exp(z - zmax);
  const double lse = zmax + std::log(sum);
  s.probs.assign(blocks, 0.0);
  for (std::size_t c = 0; c < blocks; ++c)
    s.probs[c] = std::exp(s.logits[c] - lse);
  if (lse_out) *lse_out = lse;
}

}  // namespace

double local_value(const Objective& obj, const Dataset& data,
                   const Shard& shard, const Vector& w) {
  obj.check_compatible(data);
  require_same_dim(w.size(), obj.dim(data), "local_value");
  double acc = 0.0;
  switch (obj.kind) {
    case ObjectiveKind::least_squares: {
      for (std::size_t j : shard.indices) {
        const auto x = data.row(j);
        const double r = dot(x, w) - data.targets[j];
        acc += 0.5 * r * r;
      }
      break;
    }
    case ObjectiveKind::logistic: {
      for (std::size_t j : shard.indices) {
        const double z = dot(data.row(j), w);
        acc += softplus(z) - static_cast<double>(data.labels[j]) * z;
      }
      acc /= static_cast<double>(shard.size());
      break;
    }
    case ObjectiveKind::softmax_xent: {
      SoftmaxScratch s;
      for (std::size_t j : shard.indices) {
        double lse = 0.0;
        softmax_forward(data, w, j, s, &lse);
        const std::size_t y = static_cast<std::size_t>(data.labels[j]);
        const double zy = y + 1 == data.num_classes ? 0.0 : s.logits[y];
        acc += lse - zy;
      }
      acc /= static_cast<double>(shard.size());
      break;
    }
  }
  return acc + 0.5 * obj.reg * norm_sq(w);
}

Vector local_gradient(const Objective& obj, const Dataset& data,
                      const Shard& shard, const Vector& w) {
  obj.check_compatible(data);
  const std::size_t d = obj.dim(data);
  require_same_dim(w.size(), d, "local_gradient");
  Vector g(d, 0.0);
  switch (obj.kind) {
    case ObjectiveKind::least_squares: {
      for (std::size_t j : shard.indices) {
        const auto x = data.row(j);
        const double r = dot(x, w) - data.targets[j];
        axpy(r, x, g);
      }
      break;
    }
    case ObjectiveKind::logistic: {
      for (std::size_t j : shard.indices) {
        const auto x = data.row(j);
        const double coef = sigmoid(dot(x, w)) - data.labels[j];
        axpy(coef, x, g);
      }
      scale(1.0 / static_cast<double>(shard.size()), g);
      break;
    }
    case ObjectiveKind::softmax_xent: {
      const std::size_t p = data.p;
      const std::size_t blocks = data.num_classes - 1;
      SoftmaxScratch s;
      for (std::size_t j : shard.indices) {
        softmax_forward(data, w, j, s, nullptr);
        const auto x = data.row(j);
        const std::size_t y = static_cast<std::size_t>(data.labels[j]);
        for (std::size_t c = 0; c < blocks; ++c) {
          const double coef = s.probs[c] - (c == y ? 1.0 : 0.0);
          double* gc = g.data() + c * p;
          for (std::size_t k = 0; k < p; ++k) gc[k] += coef * x[k];
        }
      }
      scale(1.0 / static_cast<double>(shard.size()), g);
      break;
    }
  }
  if (obj.reg != 0.0) axpy(obj.reg, w, g);
  return g;
}

Vector local_hvp(const Objective& obj, const Dataset& data, const Shard& shard,
                 const Vector& w, const Vector& v) {
  obj.check_compatible(data);
  const std::size_t d = obj.dim(data);
  require_same_dim(w.size(), d, "local_hvp");
  require_same_dim(v.size(), d, "local_hvp");
  Vector out(d, 0.0);
  switch (obj.kind) {
    case ObjectiveKind::least_squares: {
      for (std::size_t j : shard.indices) {
        const auto x = data.row(j);
        axpy(dot(x, v), x, out);
      }
      break;
    }
    case ObjectiveKind::logistic: {
      for (std::size_t j : shard.indices) {
        const auto x = data.row(j);
        const double sg = sigmoid(dot(x, w));
        axpy(sg * (1.0 - sg) * dot(x, v), x, out);
      }
      scale(1.0 / static_cast<double>(shard.size()), out);
      break;
    }
    case ObjectiveKind::softmax_xent: {
      const std::size_t p = data.p;
      const std::size_t blocks = data.num_classes - 1;
      SoftmaxScratch s;
      for (std::size_t j : shard.indices) {
        softmax_forward(data, w, j, s, nullptr);
        const auto x = data.row(j);
        s.dirs.assign(blocks, 0.0);
        double mean_dir = 0.0;
        for (std::size_t c = 0; c < blocks; ++c) {
          const double* vc = v.data() + c * p;
          double a = 0.0;
          for (std::size_t k = 0; k < p; ++k) a += vc[k] * x[k];
          s.dirs[c] = a;
          mean_dir += s.probs[c] * a;
        }
        for (std::size_t c = 0; c < blocks; ++c) {
          const double coef = s.probs[c] * (s.dirs[c] - mean_dir);
          double* oc = out.data() + c * p;
          for (std::size_t k = 0; k < p; ++k) oc[k] += coef * x[k];
        }
      }
      scale(1.0 / static_cast<double>(shard.size()), out);
      break;
    }
  }
  if (obj.reg != 0.0) axpy(obj.reg, v, out);
  return out;
}

void LocalHessianMap::apply(std::span<const double> x,
                            std::span<double> y) const {
  Vector v(x.begin(), x.end());
  Vector out = local_hvp(obj_, data_, shard_, w_, v);
  std::copy(out.begin(), out.end(), y.begin());
}

std::vector<Shard> partition(std::size_t n, std::size_t m,
                             std::uint64_t seed) {
  if (m < 1) throw ConfigError("partition: need at least one shard");
  if (m > n) throw ConfigError("partition: more shards than samples");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i)
    std::swap(order[i - 1], order[draw_below(rng, i)]);

  std::vector<Shard> shards(m);
  const std::size_t base = n / m;
  const std::size_t extra = n % m;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t len = base + (i < extra ? 1 : 0);
    shards[i].indices.assign(order.begin() + pos, order.begin() + pos + len);
    pos += len;
  }
  return shards;
}

std::vector<std::size_t> sample_without_replacement(
    const std::vector<std::size_t>& pool, double fraction,
    std::uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0)
    throw ConfigError("sample fraction must be in (0, 1]");
  const std::size_t total = pool.size();
  if (total == 0) throw ConfigError("cannot sample from an empty pool");
  std::size_t count = static_cast<std::size_t>(std::max<double>(
      1.0, std::llround(fraction * static_cast<double>(total))));
  count = std::min(count, total);
  if (count == total) return pool;

  std::vector<std::size_t> scratch = pool;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> picked(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + draw_below(rng, total - i);
    std::swap(scratch[i], scratch[j]);
    picked[i] = scratch[i];
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

Dataset gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.n == 0 || spec.p == 0) throw ConfigError("gen_synthetic: empty spec");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Dataset data;
  data.n = spec.n;
  data.p = spec.p;
  data.features.resize(spec.n * spec.p);
  std::vector<double> feature_scale(spec.p);
  for (std::size_t k = 0; k < spec.p; ++k)
    feature_scale[k] = std::pow(static_cast<double>(k + 1), -spec.decay / 2.0);
  for (std::size_t j = 0; j < spec.n; ++j)
    for (std::size_t k = 0; k < spec.p; ++k)
      data.features[j * spec.p + k] = gauss(rng) * feature_scale[k];

  switch (spec.kind) {
    case ObjectiveKind::least_squares: {
      Vector model(spec.p);
      for (auto& e : model)
        e = gauss(rng) * spec.scale / std::sqrt(static_cast<double>(spec.p));
      data.targets.resize(spec.n);
      for (std::size_t j = 0; j < spec.n; ++j)
        data.targets[j] = dot(data.row(j), model) + spec.target_noise * gauss(rng);
      break;
    }
    case ObjectiveKind::logistic: {
      data.num_classes = 2;
      Vector model(spec.p);
      for (auto& e : model)
        e = gauss(rng) * spec.scale / std::sqrt(static_cast<double>(spec.p));
      data.labels.resize(spec.n);
      for (std::size_t j = 0; j < spec.n; ++j)
        data.labels[j] = unit(rng) < sigmoid(dot(data.row(j), model)) ? 1 : 0;
      break;
    }
    case ObjectiveKind::softmax_xent: {
      if (spec.num_classes < 2)
        throw ConfigError("gen_synthetic: softmax needs at least two classes");
      data.num_classes = spec.num_classes;
      std::vector<Vector> model(spec.num_classes, Vector(spec.p));
      for (auto& col : model)
        for (auto& e : col)
          e = gauss(rng) * spec.scale / std::sqrt(static_cast<double>(spec.p));
      data.labels.resize(spec.n);
      for (std::size_t j = 0; j < spec.n; ++j) {
        const auto x = data.row(j);
        std::size_t best = 0;
        double best_score = dot(x, model[0]);
        for (std::size_t c = 1; c < spec.num_classes; ++c) {
          const double sc = dot(x, model[c]);
          if (sc > best_score) {
            best_score = sc;
            best = c;
          }
        }
        data.labels[j] = static_cast<int>(best);
        if (spec.label_noise > 0.0 && unit(rng) < spec.label_noise)
          data.labels[j] = static_cast<int>(draw_below(rng, spec.num_classes));
      }
      break;
    }
  }
  data.validate();
  return data;
}

namespace {

double parse_double_field(std::string_view field, std::size_t line_no) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  while (ptr != end && (*ptr == ' ' || *ptr == '\t' || *ptr == '\r')) ++ptr;
  if (ec != std::errc() || ptr != end)
    throw ParseError("line " + std::to_string(line_no) +
                     ": expected a number, got '" + std::string(field) + "'");
  return value;
}

long parse_label_field(std::string_view field, std::size_t line_no) {
  const double v = parse_double_field(field, line_no);
  const long l = static_cast<long>(std::llround(v));
  if (static_cast<double>(l) != v)
    throw ParseError("line " + std::to_string(line_no) +
                     ": expected an integer label, got '" + std::string(field) +
                     "'");
  return l;
}

// 0-based contiguous labels pass through; anything else is re-mapped with a
// warning (sorted unique values -> 0..C-1).
void finalize_labels(std::vector<long>& raw, Dataset& data,
                     const std::string& path) {
  std::map<long, int> remap;
  for (long l : raw) remap.emplace(l, 0);
  int next = 0;
  bool contiguous = true;
  for (auto& [value, idx] : remap) {
    idx = next++;
    if (value != idx) contiguous = false;
  }
  if (!contiguous)
    std::cerr << "warning: " << path << ": labels are not 0-based contiguous; "
              << "re-mapped " << remap.size() << " distinct values\n";
  data.num_classes = remap.size();
  data.labels.resize(raw.size());
  for (std::size_t j = 0; j < raw.size(); ++j)
    data.labels[j] = remap[raw[j]];
}

}  // namespace

Dataset load_csv(const std::string& path, bool classification) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset file: " + path);

  Dataset data;
  std::vector<long> raw_labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() < 2)
      throw ParseError("line " + std::to_string(line_no) +
                       ": expected label plus features");
    if (data.p == 0) {
      data.p = fields.size() - 1;
    } else if (fields.size() - 1 != data.p) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(data.p) + " features, got " +
                       std::to_string(fields.size() - 1));
    }
    if (classification)
      raw_labels.push_back(parse_label_field(fields[0], line_no));
    else
      data.targets.push_back(parse_double_field(fields[0], line_no));
    for (std::size_t k = 1; k < fields.size(); ++k)
      data.features.push_back(parse_double_field(fields[k], line_no));
    ++data.n;
  }
  if (data.n == 0) throw ParseError(path + ": no samples");
  if (classification) finalize_labels(raw_labels, data, path);
  data.validate();
  return data;
}

Dataset load_sparse_text(const std::string& path, std::size_t dim) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset file: " + path);

  std::vector<long> raw_labels;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
  std::size_t max_idx = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string token;
    if (!(ls >> token))
      throw ParseError("line " + std::to_string(line_no) + ": missing label");
    raw_labels.push_back(parse_label_field(token, line_no));
    std::vector<std::pair<std::size_t, double>> entries;
    std::size_t prev_idx = 0;
    while (ls >> token) {
      const auto colon = token.find(':');
      if (colon == std::string::npos)
        throw ParseError("line " + std::to_string(line_no) +
                         ": expected idx:val, got '" + token + "'");
      const long idx = parse_label_field(token.substr(0, colon), line_no);
      const double val = parse_double_field(token.substr(colon + 1), line_no);
      if (idx < 1)
        throw ParseError("line " + std::to_string(line_no) +
                         ": indices are 1-based");
      if (static_cast<std::size_t>(idx) <= prev_idx)
        throw ParseError("line " + std::to_string(line_no) +
                         ": indices must be strictly ascending");
      prev_idx = static_cast<std::size_t>(idx);
      entries.emplace_back(prev_idx, val);
    }
    max_idx = std::max(max_idx, prev_idx);
    rows.push_back(std::move(entries));
  }
  if (rows.empty()) throw ParseError(path + ": no samples");

  Dataset data;
  data.n = rows.size();
  data.p = dim != 0 ? dim : max_idx;
  if (max_idx > data.p)
    throw ParseError(path + ": feature index " + std::to_string(max_idx) +
                     " exceeds declared dimension " + std::to_string(data.p));
  data.features.assign(data.n * data.p, 0.0);
  for (std::size_t j = 0; j < data.n; ++j)
    for (const auto& [idx, val] : rows[j])
      data.features[j * data.p + (idx - 1)] = val;
  finalize_labels(raw_labels, data, path);
  data.validate();
  return data;
}

}  // namespace dingo
