#pragma once

// DeepFM-style CTR model over two fields (user id, item id):
//
//   logit = b + w_u + w_i + <v_u, v_i> + MLP([v_u ; v_i])
//   y_hat = clip(sigmoid(logit), eps, 1 - eps)
//
// trained on the per-sample weighted binary cross-entropy with Adam.
// Gradients are derived by hand; see gradcheck.hpp for the numerical check.

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "said/corpus.hpp"
#include "said/error.hpp"
#include "said/metrics.hpp"
#include "said/reweight.hpp"
#include "said/rng.hpp"
#include "said/semantics.hpp"

namespace said {

// Maps raw ids onto dense rows of the embedding tables.
class IdIndex {
 public:
  IdIndex() = default;
  explicit IdIndex(std::span<const Id> ids) : ids_(ids.begin(), ids.end()) {
    map_.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (!map_.emplace(ids_[i], static_cast<std::uint32_t>(i)).second) {
        throw DataError("duplicate id " + std::to_string(ids_[i]) + " in index");
      }
    }
  }

  std::uint32_t at(Id id) const {
    auto it = map_.find(id);
    if (it == map_.end()) throw DataError("id " + std::to_string(id) + " not in index");
    return it->second;
  }

  Id id_of(std::uint32_t row) const { return ids_.at(row); }
  std::size_t size() const noexcept { return ids_.size(); }

 private:
  std::vector<Id> ids_;
  std::unordered_map<Id, std::uint32_t> map_;
};

struct Vocabulary {
  IdIndex users;
  IdIndex items;

  static Vocabulary from_split(const DatasetSplit& split) {
    return {IdIndex(split.users), IdIndex(split.items)};
  }
};

struct EncodedSample {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  int label = 0;
  double weight = 1.0;
};

inline std::vector<EncodedSample> encode_samples(std::span<const WeightedSample> samples,
                                                 const Vocabulary& vocab) {
  std::vector<EncodedSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    out.push_back({vocab.users.at(s.interaction.user_id), vocab.items.at(s.interaction.item_id),
                   s.interaction.label, s.weight});
  }
  return out;
}

inline std::vector<EncodedSample> encode_samples(std::span<const Interaction> xs,
                                                 const Vocabulary& vocab) {
  std::vector<EncodedSample> out;
  out.reserve(xs.size());
  for (const auto& x : xs) {
    out.push_back({vocab.users.at(x.user_id), vocab.items.at(x.item_id), x.label, 1.0});
  }
  return out;
}

struct ModelShape {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::size_t dim = 64;
  std::vector<std::size_t> hidden{256, 128, 64};

  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

// Every trainable tensor. Also used, with identical shapes, for gradients and
// Adam moments.
template <typename Real>
struct Parameters {
  using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

  Real global_bias = 0;
  Vector first_user, first_item;
  Matrix emb_user, emb_item;
  std::vector<Matrix> layer_w;  // [in x out]
  std::vector<Vector> layer_b;
  Vector head_w;
  Real head_b = 0;

  Parameters() = default;

  explicit Parameters(const ModelShape& s) {
    first_user = Vector::Zero(static_cast<Eigen::Index>(s.n_users));
    first_item = Vector::Zero(static_cast<Eigen::Index>(s.n_items));
    emb_user = Matrix::Zero(static_cast<Eigen::Index>(s.n_users), static_cast<Eigen::Index>(s.dim));
    emb_item = Matrix::Zero(static_cast<Eigen::Index>(s.n_items), static_cast<Eigen::Index>(s.dim));
    std::size_t in = 2 * s.dim;
    for (std::size_t width : s.hidden) {
      layer_w.push_back(Matrix::Zero(static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(width)));
      layer_b.push_back(Vector::Zero(static_cast<Eigen::Index>(width)));
      in = width;
    }
    head_w = Vector::Zero(static_cast<Eigen::Index>(in));
  }

  // Visits (name, data, size) for every tensor in a fixed order.
  template <typename F>
  void for_each(F&& f) {
    f("global_bias", &global_bias, std::size_t{1});
    f("first_order.user", first_user.data(), static_cast<std::size_t>(first_user.size()));
    f("first_order.item", first_item.data(), static_cast<std::size_t>(first_item.size()));
    f("embedding.user", emb_user.data(), static_cast<std::size_t>(emb_user.size()));
    f("embedding.item", emb_item.data(), static_cast<std::size_t>(emb_item.size()));
    for (std::size_t l = 0; l < layer_w.size(); ++l) {
      const std::string prefix = "mlp." + std::to_string(l);
      f(prefix + ".weight", layer_w[l].data(), static_cast<std::size_t>(layer_w[l].size()));
      f(prefix + ".bias", layer_b[l].data(), static_cast<std::size_t>(layer_b[l].size()));
    }
    f("head.weight", head_w.data(), static_cast<std::size_t>(head_w.size()));
    f("head.bias", &head_b, std::size_t{1});
  }

  template <typename F>
  void for_each(F&& f) const {
    const_cast<Parameters*>(this)->for_each(
        [&](const std::string& name, Real* data, std::size_t n) { f(name, static_cast<const Real*>(data), n); });
  }

  void set_zero() {
    for_each([](const std::string&, Real* p, std::size_t n) { std::fill(p, p + n, Real(0)); });
  }

  bool bit_equal(const Parameters& other) const {
    std::vector<std::pair<const Real*, std::size_t>> a, b;
    for_each([&](const std::string&, const Real* p, std::size_t n) { a.emplace_back(p, n); });
    other.for_each([&](const std::string&, const Real* p, std::size_t n) { b.emplace_back(p, n); });
    if (a.size() != b.size()) return false;
    for (std::size_t t = 0; t < a.size(); ++t) {
      if (a[t].second != b[t].second ||
          std::memcmp(a[t].first, b[t].first, a[t].second * sizeof(Real)) != 0) {
        return false;
      }
    }
    return true;
  }
};

template <typename Real = double>
class BasicCtrModel {
 public:
  using Params = Parameters<Real>;
  using Matrix = typename Params::Matrix;
  using Vector = typename Params::Vector;

  BasicCtrModel() = default;
  explicit BasicCtrModel(ModelShape shape, double clip_epsilon = kDefaultClipEpsilon)
      : shape_(std::move(shape)), params_(shape_), clip_epsilon_(clip_epsilon) {
    if (shape_.dim == 0) throw ConfigError("embedding dim must be positive");
    if (!(clip_epsilon > 0.0 && clip_epsilon < 0.01)) throw ConfigError("clip epsilon must lie in (0, 0.01)");
  }

  // Embeddings and first-order weights ~ U(-scale, scale); MLP weights
  // ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases zero.
  void initialize(std::uint64_t seed, double embedding_scale = 0.05) {
    Rng rng(mix_seed(seed, 0x1a17));
    params_.set_zero();
    const auto fill = [&](Real* p, std::size_t n, double bound) {
      for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<Real>(rng.uniform(-bound, bound));
    };
    fill(params_.first_user.data(), params_.first_user.size(), embedding_scale);
    fill(params_.first_item.data(), params_.first_item.size(), embedding_scale);
    fill(params_.emb_user.data(), params_.emb_user.size(), embedding_scale);
    fill(params_.emb_item.data(), params_.emb_item.size(), embedding_scale);
    for (auto& w : params_.layer_w) fill(w.data(), w.size(), 1.0 / std::sqrt(static_cast<double>(w.rows())));
    fill(params_.head_w.data(), params_.head_w.size(),
         1.0 / std::sqrt(static_cast<double>(params_.head_w.size())));
  }

  const ModelShape& shape() const noexcept { return shape_; }
  Params& params() noexcept { return params_; }
  const Params& params() const noexcept { return params_; }
  double clip_epsilon() const noexcept { return clip_epsilon_; }

 private:
  ModelShape shape_;
  Params params_;
  double clip_epsilon_ = kDefaultClipEpsilon;
};

using CtrModel = BasicCtrModel<double>;

template <typename Real>
struct ForwardCache {
  using Matrix = typename Parameters<Real>::Matrix;
  using Vector = typename Parameters<Real>::Vector;

  std::vector<std::uint32_t> users, items;
  Matrix input;                    // [B x 2d], [v_u ; v_i]
  std::vector<Matrix> pre;         // pre-activations per hidden layer
  std::vector<Matrix> act;         // ReLU outputs per hidden layer
  Vector logit;
  std::vector<double> prob;        // sigmoid(logit), unclipped
  std::vector<double> clipped;     // clipped into [eps, 1 - eps]
};

namespace detail {

inline double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

template <typename Real>
void forward_batch(const BasicCtrModel<Real>& model, std::span<const std::uint32_t> users,
                   std::span<const std::uint32_t> items, ForwardCache<Real>& cache) {
  if (users.size() != items.size()) throw DataError("forward: users/items length mismatch");
  const auto& p = model.params();
  const auto& s = model.shape();
  const auto batch = static_cast<Eigen::Index>(users.size());
  const auto d = static_cast<Eigen::Index>(s.dim);
  for (std::size_t b = 0; b < users.size(); ++b) {
    if (users[b] >= s.n_users || items[b] >= s.n_items) {
      throw DataError("forward: id out of range (user row " + std::to_string(users[b]) +
                      ", item row " + std::to_string(items[b]) + ")");
    }
  }
  cache.users.assign(users.begin(), users.end());
  cache.items.assign(items.begin(), items.end());
  cache.input.resize(batch, 2 * d);
  for (Eigen::Index b = 0; b < batch; ++b) {
    cache.input.row(b).head(d) = p.emb_user.row(users[static_cast<std::size_t>(b)]);
    cache.input.row(b).tail(d) = p.emb_item.row(items[static_cast<std::size_t>(b)]);
  }
  const std::size_t layers = p.layer_w.size();
  cache.pre.resize(layers);
  cache.act.resize(layers);
  const typename ForwardCache<Real>::Matrix* h = &cache.input;
  for (std::size_t l = 0; l < layers; ++l) {
    cache.pre[l].noalias() = (*h) * p.layer_w[l];
    cache.pre[l].rowwise() += p.layer_b[l].transpose();
    cache.act[l] = cache.pre[l].cwiseMax(Real(0));
    h = &cache.act[l];
  }
  cache.logit.resize(batch);
  if (layers > 0) {
    cache.logit.noalias() = (*h) * p.head_w;
  } else {
    cache.logit.noalias() = cache.input * p.head_w;
  }
  cache.prob.resize(static_cast<std::size_t>(batch));
  cache.clipped.resize(static_cast<std::size_t>(batch));
  const double eps = model.clip_epsilon();
  for (Eigen::Index b = 0; b < batch; ++b) {
    const auto u = users[static_cast<std::size_t>(b)];
    const auto i = items[static_cast<std::size_t>(b)];
    const Real fm = p.emb_user.row(u).dot(p.emb_item.row(i));
    const Real z = p.global_bias + p.first_user[u] + p.first_item[i] + fm + cache.logit[b] + p.head_b;
    cache.logit[b] = z;
    const double prob = detail::stable_sigmoid(static_cast<double>(z));
    cache.prob[static_cast<std::size_t>(b)] = prob;
    cache.clipped[static_cast<std::size_t>(b)] = std::clamp(prob, eps, 1.0 - eps);
  }
}

template <typename Real>
double forward(const BasicCtrModel<Real>& model, std::uint32_t user, std::uint32_t item) {
  ForwardCache<Real> cache;
  const std::uint32_t u[1] = {user}, i[1] = {item};
  forward_batch(model, std::span<const std::uint32_t>(u), std::span<const std::uint32_t>(i), cache);
  return cache.clipped[0];
}

struct LossValue {
  double total = 0.0;  // -sum w * [y ln p + (1 - y) ln(1 - p)]
  double mean = 0.0;   // total / n
};

// Weighted BCE over already clipped predictions. An empty weight span means
// every weight is 1.
inline LossValue weighted_bce(std::span<const double> preds, std::span<const int> labels,
                              std::span<const double> weights = {}) {
  if (preds.size() != labels.size() || (!weights.empty() && weights.size() != preds.size())) {
    throw DataError("weighted_bce: length mismatch");
  }
  LossValue out;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double p = preds[i];
    const double l = labels[i] == 1 ? -std::log(p) : -std::log1p(-p);
    out.total += weights.empty() ? l : weights[i] * l;
  }
  out.mean = preds.empty() ? 0.0 : out.total / static_cast<double>(preds.size());
  return out;
}

// Gradient of sum_b w_b * BCE(y_b, p_b) with respect to every parameter,
// written into `grad` (overwritten). The logit gradient is w_b * (p_b - y_b)
// on the unclipped probability. An empty weight span takes the unweighted
// path, which never multiplies by a weight.
template <typename Real>
void backward(const BasicCtrModel<Real>& model, const ForwardCache<Real>& cache,
              std::span<const int> labels, std::span<const double> weights,
              Parameters<Real>& grad, Real scale = Real(1)) {
  using Matrix = typename Parameters<Real>::Matrix;
  using Vector = typename Parameters<Real>::Vector;
  const auto& p = model.params();
  const std::size_t n = cache.users.size();
  if (labels.size() != n || (!weights.empty() && weights.size() != n)) {
    throw DataError("backward: batch size mismatch with forward cache");
  }
  if (grad.emb_user.rows() != p.emb_user.rows() || grad.layer_w.size() != p.layer_w.size()) {
    grad = Parameters<Real>(model.shape());
  }
  grad.set_zero();
  const auto d = static_cast<Eigen::Index>(model.shape().dim);
  const auto batch = static_cast<Eigen::Index>(n);

  Vector dlogit(batch);
  for (std::size_t b = 0; b < n; ++b) {
    const double r = cache.prob[b] - static_cast<double>(labels[b]);
    dlogit[static_cast<Eigen::Index>(b)] = static_cast<Real>(weights.empty() ? r : weights[b] * r) * scale;
  }

  Real bias_sum = 0;
  for (Eigen::Index b = 0; b < batch; ++b) bias_sum += dlogit[b];
  grad.global_bias = bias_sum;
  grad.head_b = bias_sum;

  const std::size_t layers = p.layer_w.size();
  const Matrix& top = layers > 0 ? cache.act[layers - 1] : cache.input;
  grad.head_w.noalias() = top.transpose() * dlogit;

  Matrix dh = dlogit * p.head_w.transpose();
  for (std::size_t l = layers; l-- > 0;) {
    Matrix dz = (cache.pre[l].array() > Real(0)).select(dh, Real(0));
    const Matrix& below = l > 0 ? cache.act[l - 1] : cache.input;
    grad.layer_w[l].noalias() = below.transpose() * dz;
    grad.layer_b[l] = dz.colwise().sum().transpose();
    dh.noalias() = dz * p.layer_w[l].transpose();
  }
  // dh is now d(loss)/d(input) for the deep part.
  for (std::size_t b = 0; b < n; ++b) {
    const auto bi = static_cast<Eigen::Index>(b);
    const auto u = cache.users[b];
    const auto i = cache.items[b];
    const Real g = dlogit[bi];
    grad.first_user[u] += g;
    grad.first_item[i] += g;
    grad.emb_user.row(u) += dh.row(bi).head(d) + g * p.emb_item.row(i);
    grad.emb_item.row(i) += dh.row(bi).tail(d) + g * p.emb_user.row(u);
  }

  grad.for_each([](const std::string& name, const Real* data, std::size_t count) {
    for (std::size_t k = 0; k < count; ++k) {
      if (!std::isfinite(static_cast<double>(data[k]))) {
        throw NumericError("non-finite gradient in " + name + "[" + std::to_string(k) + "]");
      }
    }
  });
}

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 2048;
  std::size_t epochs = 30;
  std::size_t patience = 3;  // 0 disables early stopping
  std::uint64_t seed = 0;
  std::size_t embedding_dim = 64;
  std::vector<std::size_t> hidden{256, 128, 64};
  double clip_epsilon = kDefaultClipEpsilon;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double init_scale = 0.05;

  void validate() const {
    if (!(learning_rate > 0) || batch_size == 0 || epochs == 0 || embedding_dim == 0) {
      throw ConfigError("learning rate, batch size, epochs and embedding dim must be positive");
    }
    if (!(clip_epsilon > 0.0 && clip_epsilon < 0.01)) throw ConfigError("clip_epsilon must lie in (0, 0.01)");
    if (!(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1 && adam_eps > 0)) {
      throw ConfigError("invalid Adam hyperparameters");
    }
    for (auto w : hidden) {
      if (w == 0) throw ConfigError("hidden layer widths must be positive");
    }
  }
};

template <typename Real>
class Adam {
 public:
  Adam(const ModelShape& shape, const TrainConfig& cfg)
      : m_(shape), v_(shape), lr_(cfg.learning_rate), b1_(cfg.adam_beta1), b2_(cfg.adam_beta2), eps_(cfg.adam_eps) {}

  void step(Parameters<Real>& params, Parameters<Real>& grad) {
    ++t_;
    const double bc1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    const Real step_size = static_cast<Real>(lr_ / bc1);
    const Real inv_sqrt_bc2 = static_cast<Real>(1.0 / std::sqrt(bc2));
    const Real b1 = static_cast<Real>(b1_), b2 = static_cast<Real>(b2_), eps = static_cast<Real>(eps_);
    std::vector<Real*> ps, gs, ms, vs;
    std::vector<std::size_t> ns;
    params.for_each([&](const std::string&, Real* x, std::size_t n) { ps.push_back(x); ns.push_back(n); });
    grad.for_each([&](const std::string&, Real* x, std::size_t) { gs.push_back(x); });
    m_.for_each([&](const std::string&, Real* x, std::size_t) { ms.push_back(x); });
    v_.for_each([&](const std::string&, Real* x, std::size_t) { vs.push_back(x); });
    for (std::size_t t = 0; t < ps.size(); ++t) {
      Real* p = ps[t];
      const Real* g = gs[t];
      Real* m = ms[t];
      Real* v = vs[t];
      for (std::size_t k = 0; k < ns[t]; ++k) {
        m[k] = b1 * m[k] + (Real(1) - b1) * g[k];
        v[k] = b2 * v[k] + (Real(1) - b2) * g[k] * g[k];
        p[k] -= step_size * m[k] / (std::sqrt(v[k]) * inv_sqrt_bc2 + eps);
      }
    }
  }

  std::uint64_t steps() const noexcept { return t_; }

 private:
  Parameters<Real> m_, v_;
  double lr_, b1_, b2_, eps_;
  std::uint64_t t_ = 0;
};

template <typename Real>
std::vector<double> predict(const BasicCtrModel<Real>& model, std::span<const EncodedSample> samples,
                            std::size_t batch_size = 4096) {
  std::vector<double> out;
  out.reserve(samples.size());
  ForwardCache<Real> cache;
  std::vector<std::uint32_t> us, is;
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const std::size_t end = std::min(samples.size(), start + batch_size);
    us.clear();
    is.clear();
    for (std::size_t k = start; k < end; ++k) {
      us.push_back(samples[k].user);
      is.push_back(samples[k].item);
    }
    forward_batch(model, std::span<const std::uint32_t>(us), std::span<const std::uint32_t>(is), cache);
    out.insert(out.end(), cache.clipped.begin(), cache.clipped.end());
  }
  return out;
}

template <typename Real>
EvalResult evaluate_model(const BasicCtrModel<Real>& model, std::span<const EncodedSample> samples) {
  const auto scores = predict(model, samples);
  std::vector<int> labels;
  labels.reserve(samples.size());
  for (const auto& s : samples) labels.push_back(s.label);
  return evaluate(scores, labels, model.clip_epsilon());
}

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // weighted loss per sample
  double val_auc = std::numeric_limits<double>::quiet_NaN();
};

template <typename Real>
struct TrainResult {
  BasicCtrModel<Real> model;
  std::vector<EpochStats> trace;
  std::size_t best_epoch = 0;
};

namespace detail {

template <typename Real>
TrainResult<Real> train_loop(BasicCtrModel<Real> model, std::span<const EncodedSample> samples,
                             bool weighted, std::span<const EncodedSample> validation,
                             const TrainConfig& cfg) {
  cfg.validate();
  if (samples.empty()) throw DataError("train: no samples");
  const bool can_validate = [&] {
    bool pos = false, neg = false;
    for (const auto& s : validation) (s.label == 1 ? pos : neg) = true;
    return pos && neg;
  }();

  Adam<Real> adam(model.shape(), cfg);
  Parameters<Real> grad(model.shape());
  ForwardCache<Real> cache;
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::uint32_t> us, is;
  std::vector<int> ys;
  std::vector<double> ws;

  TrainResult<Real> result{model, {}, 0};
  double best_auc = -1.0;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng rng(mix_seed(cfg.seed, 0x5e0000 + epoch));
    rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      us.clear();
      is.clear();
      ys.clear();
      ws.clear();
      for (std::size_t k = start; k < end; ++k) {
        const auto& s = samples[order[k]];
        us.push_back(s.user);
        is.push_back(s.item);
        ys.push_back(s.label);
        if (weighted) ws.push_back(s.weight);
      }
      forward_batch(model, std::span<const std::uint32_t>(us), std::span<const std::uint32_t>(is), cache);
      const auto loss = weighted_bce(cache.clipped, ys, ws);
      if (!std::isfinite(loss.total)) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index));
      }
      epoch_loss += loss.total;
      backward(model, cache, ys, ws, grad, static_cast<Real>(1.0 / static_cast<double>(end - start)));
      adam.step(model.params(), grad);
    }
    EpochStats stats{epoch, epoch_loss / static_cast<double>(samples.size()),
                     std::numeric_limits<double>::quiet_NaN()};
    if (can_validate) stats.val_auc = evaluate_model(model, validation).auc;
    result.trace.push_back(stats);

    if (!can_validate || cfg.patience == 0) {
      result.model = model;
      result.best_epoch = epoch;
      continue;
    }
    if (stats.val_auc > best_auc) {
      best_auc = stats.val_auc;
      result.model = model;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

}  // namespace detail

// Minibatch Adam on the mean weighted BCE of each batch. Batches are drawn
// from a per-epoch seeded shuffle; validation AUC drives early stopping and
// the returned model is the best-validation snapshot.
template <typename Real>
TrainResult<Real> train(BasicCtrModel<Real> model, std::span<const EncodedSample> samples,
                        std::span<const EncodedSample> validation, const TrainConfig& cfg) {
  return detail::train_loop(std::move(model), samples, true, validation, cfg);
}

// Same loop without any sample weights.
template <typename Real>
TrainResult<Real> train_unweighted(BasicCtrModel<Real> model, std::span<const EncodedSample> samples,
                                   std::span<const EncodedSample> validation, const TrainConfig& cfg) {
  return detail::train_loop(std::move(model), samples, false, validation, cfg);
}

inline CtrModel make_model(const Vocabulary& vocab, const TrainConfig& cfg) {
  CtrModel model(ModelShape{vocab.users.size(), vocab.items.size(), cfg.embedding_dim, cfg.hidden},
                 cfg.clip_epsilon);
  model.initialize(cfg.seed, cfg.init_scale);
  return model;
}

inline void write_loss_trace(std::ostream& out, const std::vector<EpochStats>& trace) {
  out << "epoch,train_loss,val_auc\n";
  out.precision(10);
  for (const auto& e : trace) {
    out << e.epoch << ',' << e.train_loss << ',';
    if (!std::isnan(e.val_auc)) out << e.val_auc;
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Checkpoint: "SAIDCKPT", u32 version, u32 real size (8), u64 n_users,
// u64 n_items, u64 dim, u32 n_hidden, n_hidden x u64 widths, f64 clip eps,
// then every tensor in Parameters::for_each order as little-endian f64.

inline constexpr char kCheckpointMagic[8] = {'S', 'A', 'I', 'D', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void write_checkpoint(std::ostream& out, const CtrModel& model) {
  const auto& s = model.shape();
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  detail::put_le(out, kCheckpointVersion);
  detail::put_le(out, static_cast<std::uint32_t>(sizeof(double)));
  detail::put_le(out, static_cast<std::uint64_t>(s.n_users));
  detail::put_le(out, static_cast<std::uint64_t>(s.n_items));
  detail::put_le(out, static_cast<std::uint64_t>(s.dim));
  detail::put_le(out, static_cast<std::uint32_t>(s.hidden.size()));
  for (auto w : s.hidden) detail::put_le(out, static_cast<std::uint64_t>(w));
  detail::put_le(out, std::bit_cast<std::uint64_t>(model.clip_epsilon()));
  model.params().for_each([&](const std::string&, const double* p, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) detail::put_le(out, std::bit_cast<std::uint64_t>(p[k]));
  });
}

inline CtrModel read_checkpoint(std::istream& in) {
  char magic[sizeof kCheckpointMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw DataError("not a SAIDCKPT checkpoint");
  }
  std::uint32_t version = 0, real_size = 0, n_hidden = 0;
  std::uint64_t n_users = 0, n_items = 0, dim = 0, eps_bits = 0;
  if (!detail::get_le(in, version) || !detail::get_le(in, real_size) || !detail::get_le(in, n_users) ||
      !detail::get_le(in, n_items) || !detail::get_le(in, dim) || !detail::get_le(in, n_hidden)) {
    throw DataError("truncated checkpoint header");
  }
  if (version != kCheckpointVersion || real_size != sizeof(double)) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  ModelShape shape{n_users, n_items, dim, {}};
  for (std::uint32_t l = 0; l < n_hidden; ++l) {
    std::uint64_t w = 0;
    if (!detail::get_le(in, w)) throw DataError("truncated checkpoint header");
    shape.hidden.push_back(w);
  }
  if (!detail::get_le(in, eps_bits)) throw DataError("truncated checkpoint header");
  CtrModel model(shape, std::bit_cast<double>(eps_bits));
  model.params().for_each([&](const std::string& name, double* p, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      std::uint64_t bits = 0;
      if (!detail::get_le(in, bits)) throw DataError("truncated checkpoint tensor " + name);
      p[k] = std::bit_cast<double>(bits);
    }
  });
  return model;
}

}  // namespace said
