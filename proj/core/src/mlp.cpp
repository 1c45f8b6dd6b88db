#include "graspkit/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "graspkit/rng.hpp"

namespace graspkit {

namespace {

struct ForwardCache {
  Eigen::MatrixXd z1;    // pre-batchnorm
  Eigen::VectorXd mu;    // batch mean
  Eigen::VectorXd var;   // biased batch variance
  Eigen::MatrixXd xhat;  // normalized
  Eigen::MatrixXd y1;    // scaled/shifted, pre-activation
  Eigen::MatrixXd h;     // post-PReLU
};

Eigen::MatrixXd forward_impl(const MlpModel& model, const Eigen::MatrixXd& batch, bool training,
                             MlpModel* stats_sink, ForwardCache* cache) {
  if (batch.cols() != model.input_dim) {
    throw Error("mlp_forward: feature dimension mismatch (got " +
                std::to_string(batch.cols()) + ", model wants " +
                std::to_string(model.input_dim) + ")");
  }
  const int rows = static_cast<int>(batch.rows());
  Eigen::MatrixXd z1 = (batch * model.w1.transpose()).rowwise() + model.b1.transpose();

  Eigen::VectorXd mu, var;
  if (training) {
    mu = z1.colwise().mean();
    var = (z1.rowwise() - mu.transpose()).array().square().colwise().mean();
    if (stats_sink) {
      const double m = model.bn_momentum;
      stats_sink->bn_mean = (1.0 - m) * stats_sink->bn_mean + m * mu;
      stats_sink->bn_var = (1.0 - m) * stats_sink->bn_var + m * var;
    }
  } else {
    mu = model.bn_mean;
    var = model.bn_var;
  }

  const Eigen::ArrayXd inv_std = (var.array() + model.bn_eps).sqrt().inverse();
  Eigen::MatrixXd xhat = (z1.rowwise() - mu.transpose());
  xhat.array().rowwise() *= inv_std.transpose();
  Eigen::MatrixXd y1 = xhat;
  y1.array().rowwise() *= model.bn_gamma.transpose().array();
  y1.rowwise() += model.bn_beta.transpose();

  Eigen::MatrixXd h = y1;
  for (int c = 0; c < MlpModel::kHidden; ++c) {
    const double slope = model.prelu(c);
    for (int r = 0; r < rows; ++r) {
      if (h(r, c) < 0) h(r, c) *= slope;
    }
  }

  if (cache) {
    cache->z1 = std::move(z1);
    cache->mu = std::move(mu);
    cache->var = std::move(var);
    cache->xhat = std::move(xhat);
    cache->y1 = y1;
    cache->h = h;
  }
  return (h * model.w2.transpose()).rowwise() + model.b2.transpose();
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits;
  for (int r = 0; r < p.rows(); ++r) {
    const double mx = p.row(r).maxCoeff();
    p.row(r) = (p.row(r).array() - mx).exp();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

void check_labels(const Eigen::MatrixXd& logits, const std::vector<int>& labels) {
  if (static_cast<int>(labels.size()) != logits.rows()) {
    throw Error("mlp_loss: label count mismatch");
  }
  for (int label : labels) {
    if (label < 0 || label >= kContactBins) throw Error("mlp_loss: label out of range");
  }
}

}  // namespace

int MlpModel::parameter_count() const {
  return static_cast<int>(w1.size() + b1.size() + bn_gamma.size() + bn_beta.size() +
                          prelu.size() + w2.size() + b2.size());
}

MlpModel make_mlp(int input_dim, uint64_t seed) {
  if (input_dim <= 0) throw Error("make_mlp: input dimension must be positive");
  Rng rng(seed);
  MlpModel model;
  model.input_dim = input_dim;
  model.w1.resize(MlpModel::kHidden, input_dim);
  const double s1 = std::sqrt(2.0 / input_dim);
  for (int i = 0; i < model.w1.rows(); ++i) {
    for (int j = 0; j < model.w1.cols(); ++j) model.w1(i, j) = s1 * rng.normal();
  }
  model.b1 = Eigen::VectorXd::Zero(MlpModel::kHidden);
  model.bn_gamma = Eigen::VectorXd::Ones(MlpModel::kHidden);
  model.bn_beta = Eigen::VectorXd::Zero(MlpModel::kHidden);
  model.bn_mean = Eigen::VectorXd::Zero(MlpModel::kHidden);
  model.bn_var = Eigen::VectorXd::Ones(MlpModel::kHidden);
  model.prelu = Eigen::VectorXd::Constant(MlpModel::kHidden, 0.25);
  model.w2.resize(MlpModel::kOut, MlpModel::kHidden);
  const double s2 = std::sqrt(2.0 / MlpModel::kHidden);
  for (int i = 0; i < model.w2.rows(); ++i) {
    for (int j = 0; j < model.w2.cols(); ++j) model.w2(i, j) = s2 * rng.normal();
  }
  model.b2 = Eigen::VectorXd::Zero(MlpModel::kOut);
  return model;
}

Eigen::MatrixXd mlp_forward(MlpModel& model, const Eigen::MatrixXd& batch, bool training) {
  return forward_impl(model, batch, training, training ? &model : nullptr, nullptr);
}

Eigen::MatrixXd mlp_forward_eval(const MlpModel& model, const Eigen::MatrixXd& batch) {
  return forward_impl(model, batch, false, nullptr, nullptr);
}

double mlp_loss(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
                const std::array<double, kContactBins>& weights) {
  check_labels(logits, labels);
  const Eigen::MatrixXd p = softmax_rows(logits);
  double total = 0;
  for (int r = 0; r < logits.rows(); ++r) {
    total += weights[labels[r]] * -std::log(std::max(p(r, labels[r]), 1e-300));
  }
  return total / logits.rows();
}

double mlp_backward(const MlpModel& model, const Eigen::MatrixXd& batch,
                    const std::vector<int>& labels,
                    const std::array<double, kContactBins>& weights, MlpGradients& grads) {
  ForwardCache cache;
  const Eigen::MatrixXd logits = forward_impl(model, batch, true, nullptr, &cache);
  check_labels(logits, labels);
  const int rows = static_cast<int>(batch.rows());

  const Eigen::MatrixXd p = softmax_rows(logits);
  double loss = 0;
  Eigen::MatrixXd dlogits = p;
  for (int r = 0; r < rows; ++r) {
    const double w = weights[labels[r]];
    loss += w * -std::log(std::max(p(r, labels[r]), 1e-300));
    dlogits(r, labels[r]) -= 1.0;
    dlogits.row(r) *= w / rows;
  }
  loss /= rows;

  grads.w2 = dlogits.transpose() * cache.h;
  grads.b2 = dlogits.colwise().sum();
  Eigen::MatrixXd dh = dlogits * model.w2;

  // PReLU
  Eigen::MatrixXd dy1 = dh;
  grads.prelu = Eigen::VectorXd::Zero(MlpModel::kHidden);
  for (int c = 0; c < MlpModel::kHidden; ++c) {
    const double slope = model.prelu(c);
    for (int r = 0; r < rows; ++r) {
      if (cache.y1(r, c) < 0) {
        grads.prelu(c) += dh(r, c) * cache.y1(r, c);
        dy1(r, c) *= slope;
      }
    }
  }

  // Batchnorm (batch-statistics path)
  grads.bn_gamma = (dy1.array() * cache.xhat.array()).colwise().sum();
  grads.bn_beta = dy1.colwise().sum();

  const Eigen::ArrayXd inv_std = (cache.var.array() + model.bn_eps).sqrt().inverse();
  Eigen::MatrixXd dxhat = dy1;
  dxhat.array().rowwise() *= model.bn_gamma.transpose().array();

  const Eigen::MatrixXd centered = cache.z1.rowwise() - cache.mu.transpose();
  const Eigen::ArrayXd dvar =
      (dxhat.array() * centered.array()).colwise().sum().transpose() *
      (-0.5) * inv_std.pow(3);
  const Eigen::ArrayXd dmu =
      dxhat.array().colwise().sum().transpose() * -inv_std +
      dvar * (-2.0 / rows) * centered.array().colwise().sum().transpose();

  Eigen::MatrixXd dz1 = dxhat;
  dz1.array().rowwise() *= inv_std.transpose();
  dz1.array() += centered.array().rowwise() * (dvar.transpose() * 2.0 / rows);
  dz1.array().rowwise() += dmu.transpose() / rows;

  grads.w1 = dz1.transpose() * batch;
  grads.b1 = dz1.colwise().sum();
  return loss;
}

void TrainConfig::validate() const {
  const bool on_grid = learning_rate == 5e-4 || learning_rate == 1e-3 || learning_rate == 5e-3 ||
                       learning_rate == 0.0;
  if (!on_grid) {
    throw Error("TrainConfig: learning rate must come from {5e-4, 1e-3, 5e-3}");
  }
  if (beta1 <= 0 || beta1 >= 1 || beta2 <= 0 || beta2 >= 1) {
    throw Error("TrainConfig: moment decays must lie in (0,1)");
  }
  if (weight_decay < 0 || batch_size <= 0 || epochs <= 0 || rotations <= 0) {
    throw Error("TrainConfig: non-positive setting");
  }
}

GraspSample rotate_sample(const GraspSample& sample, double angle) {
  const Mat3 rot = Eigen::AngleAxisd(angle, Vec3::UnitZ()).toRotationMatrix();
  GraspSample out = sample;
  for (Vec3& p : out.points.points) p = rot * p;
  for (Vec3& n : out.points.normals) n = rot * n;
  for (HandSkeleton& hand : out.hands) {
    for (Vec3& j : hand.joints) j = rot * j;
  }
  if (sample.mesh) {
    std::vector<Vec3> verts = sample.mesh->vertices();
    for (Vec3& v : verts) v = rot * v;
    out.mesh = TriMesh(std::move(verts), sample.mesh->faces());
  }
  return out;
}

namespace {

struct RowBlock {
  Eigen::MatrixXd features;
  std::vector<int> labels;
};

RowBlock sample_rows(const GraspSample& sample, FeatureFamily family, int rotations,
                     bool voxel_mode) {
  RowBlock block;
  std::vector<Eigen::MatrixXd> parts;
  std::vector<int> labels;
  for (int k = 0; k < rotations; ++k) {
    const double angle = k * (2.0 * M_PI / 12.0);  // 30 degree spacing
    const GraspSample rotated = k == 0 ? sample : rotate_sample(sample, angle);
    std::vector<HandProxy> proxies;
    for (const HandSkeleton& h : rotated.hands) proxies.push_back(make_hand_proxy(h));
    if (voxel_mode) {
      if (!rotated.mesh || !rotated.mesh_contact) {
        throw Error("train: voxel mode requires mesh and per-vertex contact");
      }
      const VoxelGrid grid = voxelize(*rotated.mesh);
      VoxelFeatureMatrix vf = voxel_features(grid, family, rotated.hands, proxies, *rotated.mesh);
      const std::vector<double> targets =
          voxel_targets(grid, *rotated.mesh, rotated.mesh_contact->values);
      parts.push_back(std::move(vf.values));
      for (double t : targets) {
        labels.push_back(std::min(static_cast<int>(std::floor(10.0 * t)), kContactBins - 1));
      }
    } else {
      FeatureMatrix fm = compute_features(family, rotated.points, rotated.hands, proxies);
      parts.push_back(std::move(fm.values));
      const std::vector<int> grasp_labels = discretize(sample.contact);
      labels.insert(labels.end(), grasp_labels.begin(), grasp_labels.end());
    }
  }
  int rows = 0;
  for (const auto& p : parts) rows += static_cast<int>(p.rows());
  block.features.resize(rows, parts[0].cols());
  int at = 0;
  for (const auto& p : parts) {
    block.features.middleRows(at, p.rows()) = p;
    at += static_cast<int>(p.rows());
  }
  block.labels = std::move(labels);
  return block;
}

struct AdamState {
  MlpGradients m, v;
  int step = 0;
};

void init_like(MlpGradients& g, const MlpModel& model) {
  g.w1 = Eigen::MatrixXd::Zero(model.w1.rows(), model.w1.cols());
  g.w2 = Eigen::MatrixXd::Zero(model.w2.rows(), model.w2.cols());
  g.b1 = Eigen::VectorXd::Zero(model.b1.size());
  g.b2 = Eigen::VectorXd::Zero(model.b2.size());
  g.bn_gamma = Eigen::VectorXd::Zero(model.bn_gamma.size());
  g.bn_beta = Eigen::VectorXd::Zero(model.bn_beta.size());
  g.prelu = Eigen::VectorXd::Zero(model.prelu.size());
}

template <typename Fn>
void zip_params(MlpModel& model, MlpGradients& g, MlpGradients& m, MlpGradients& v, Fn&& fn) {
  fn(model.w1, g.w1, m.w1, v.w1, true);
  fn(model.b1, g.b1, m.b1, v.b1, false);
  fn(model.bn_gamma, g.bn_gamma, m.bn_gamma, v.bn_gamma, false);
  fn(model.bn_beta, g.bn_beta, m.bn_beta, v.bn_beta, false);
  fn(model.prelu, g.prelu, m.prelu, v.prelu, false);
  fn(model.w2, g.w2, m.w2, v.w2, true);
  fn(model.b2, g.b2, m.b2, v.b2, false);
}

void adam_step(MlpModel& model, MlpGradients& grads, AdamState& state,
               const TrainConfig& config) {
  ++state.step;
  const double bc1 = 1.0 - std::pow(config.beta1, state.step);
  const double bc2 = 1.0 - std::pow(config.beta2, state.step);
  zip_params(model, grads, state.m, state.v,
             [&](auto& param, const auto& grad, auto& m, auto& v, bool decay) {
               m = config.beta1 * m + (1.0 - config.beta1) * grad;
               v = config.beta2 * v + (1.0 - config.beta2) * grad.cwiseProduct(grad);
               // decoupled decay: applied directly, not scaled by the rate
               if (decay) param *= (1.0 - config.weight_decay);
               param.array() -= config.learning_rate * (m / bc1).array() /
                                ((v / bc2).array().sqrt() + config.adam_eps);
             });
}

}  // namespace

TrainResult train_contact_model(std::span<const GraspSample> grasps, FeatureFamily family,
                                const TrainConfig& config, bool voxel_mode) {
  config.validate();
  if (grasps.empty()) throw Error("train: no grasps");

  const int input_dim = feature_dim(family) + (voxel_mode ? 1 : 0);

  // Hold out whole grasps for early stopping.
  int holdout_count = 0;
  if (config.patience > 0 && config.holdout > 0 && grasps.size() >= 3) {
    holdout_count = std::max(1, static_cast<int>(std::round(config.holdout * grasps.size())));
    holdout_count = std::min<int>(holdout_count, static_cast<int>(grasps.size()) - 1);
  }
  const int train_count = static_cast<int>(grasps.size()) - holdout_count;

  std::vector<RowBlock> train_blocks, holdout_blocks;
  for (int g = 0; g < static_cast<int>(grasps.size()); ++g) {
    RowBlock block = sample_rows(grasps[g], family, config.rotations, voxel_mode);
    (g < train_count ? train_blocks : holdout_blocks).push_back(std::move(block));
  }

  auto concat = [&](const std::vector<RowBlock>& blocks, Eigen::MatrixXd& x,
                    std::vector<int>& y) {
    int rows = 0;
    for (const auto& b : blocks) rows += static_cast<int>(b.features.rows());
    x.resize(rows, input_dim);
    y.clear();
    y.reserve(rows);
    int at = 0;
    for (const auto& b : blocks) {
      x.middleRows(at, b.features.rows()) = b.features;
      at += static_cast<int>(b.features.rows());
      y.insert(y.end(), b.labels.begin(), b.labels.end());
    }
  };

  Eigen::MatrixXd train_x, holdout_x;
  std::vector<int> train_y, holdout_y;
  concat(train_blocks, train_x, train_y);
  concat(holdout_blocks, holdout_x, holdout_y);
  if (train_x.rows() == 0) throw Error("train: no training rows");

  return train_on_rows(train_x, train_y, holdout_x, holdout_y, config);
}

TrainResult train_on_rows(const Eigen::MatrixXd& train_x, const std::vector<int>& train_y,
                          const Eigen::MatrixXd& holdout_x, const std::vector<int>& holdout_y,
                          const TrainConfig& config) {
  config.validate();
  if (train_x.rows() == 0) throw Error("train: no training rows");
  if (train_x.rows() != static_cast<int>(train_y.size())) {
    throw Error("train: label count mismatch");
  }
  const int input_dim = static_cast<int>(train_x.cols());
  const bool use_holdout = config.patience > 0 && holdout_x.rows() > 0;

  const std::array<double, kContactBins> weights = class_weights(train_y);

  TrainResult result;
  MlpModel model = make_mlp(input_dim, Rng(config.seed).derive(1).next_u64());
  AdamState adam;
  init_like(adam.m, model);
  init_like(adam.v, model);

  Rng shuffle_rng = Rng(config.seed).derive(2);
  std::vector<int> order(train_x.rows());
  std::iota(order.begin(), order.end(), 0);

  MlpModel best = model;
  double best_holdout = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
  int stall = 0;
  MlpModel checkpoint = model;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0;
    int batches = 0;
    bool nan_hit = false;
    for (int start = 0; start < static_cast<int>(order.size()); start += config.batch_size) {
      const int rows = std::min<int>(config.batch_size, order.size() - start);
      Eigen::MatrixXd batch(rows, input_dim);
      std::vector<int> labels(rows);
      for (int r = 0; r < rows; ++r) {
        batch.row(r) = train_x.row(order[start + r]);
        labels[r] = train_y[order[start + r]];
      }
      MlpGradients grads;
      const double loss = mlp_backward(model, batch, labels, weights, grads);
      if (!std::isfinite(loss)) {
        nan_hit = true;
        break;
      }
      mlp_forward(model, batch, true);  // refresh running statistics
      adam_step(model, grads, adam, config);
      epoch_loss += loss;
      ++batches;
    }
    if (nan_hit) {
      result.aborted = true;
      model = checkpoint;
      break;
    }
    epoch_loss /= std::max(batches, 1);
    result.train_loss.push_back(epoch_loss);
    checkpoint = model;

    if (use_holdout) {
      const Eigen::MatrixXd logits = mlp_forward_eval(model, holdout_x);
      const double hl = mlp_loss(logits, holdout_y, weights);
      result.holdout_loss.push_back(hl);
      if (hl < best_holdout - 1e-12) {
        best_holdout = hl;
        best = model;
        best_epoch = epoch;
        stall = 0;
      } else if (++stall >= config.patience) {
        break;
      }
    }
  }

  if (use_holdout && best_epoch >= 0) {
    result.model = best;
    result.best_epoch = best_epoch;
  } else {
    result.model = model;
    result.best_epoch = static_cast<int>(result.train_loss.size()) - 1;
  }
  return result;
}

PredictResult predict_contact(const MlpModel& model, const GraspSample& sample,
                              FeatureFamily family, int rotations) {
  if (rotations <= 0) throw Error("predict: rotations must be positive");
  const bool voxel_mode = model.input_dim == feature_dim(family) + 1;
  if (!voxel_mode && model.input_dim != feature_dim(family)) {
    throw Error("predict: model input dimension does not match the family");
  }

  Eigen::MatrixXd mean;
  for (int k = 0; k < rotations; ++k) {
    const double angle = k * (2.0 * M_PI / 12.0);
    const GraspSample rotated = k == 0 ? sample : rotate_sample(sample, angle);
    std::vector<HandProxy> proxies;
    for (const HandSkeleton& h : rotated.hands) proxies.push_back(make_hand_proxy(h));
    Eigen::MatrixXd features;
    if (voxel_mode) {
      if (!rotated.mesh) throw Error("predict: voxel mode requires a mesh");
      const VoxelGrid grid = voxelize(*rotated.mesh);
      features = voxel_features(grid, family, rotated.hands, proxies, *rotated.mesh).values;
    } else {
      features = compute_features(family, rotated.points, rotated.hands, proxies).values;
    }
    const Eigen::MatrixXd p = [&] {
      Eigen::MatrixXd logits = mlp_forward_eval(model, features);
      Eigen::MatrixXd sm = logits;
      for (int r = 0; r < sm.rows(); ++r) {
        const double mx = sm.row(r).maxCoeff();
        sm.row(r) = (sm.row(r).array() - mx).exp();
        sm.row(r) /= sm.row(r).sum();
      }
      return sm;
    }();
    if (mean.size() == 0) mean = Eigen::MatrixXd::Zero(p.rows(), p.cols());
    mean += p;
  }
  mean /= rotations;

  PredictResult out;
  out.distribution.probs = std::move(mean);
  out.map = decode_annealed_mean(out.distribution, 0.1);
  return out;
}

namespace {

// Parameter blocks in serialization order.
std::vector<std::pair<std::string, Eigen::Map<Eigen::VectorXd>>> param_views(MlpModel& m) {
  std::vector<std::pair<std::string, Eigen::Map<Eigen::VectorXd>>> views;
  views.emplace_back("w1", Eigen::Map<Eigen::VectorXd>(m.w1.data(), m.w1.size()));
  views.emplace_back("b1", Eigen::Map<Eigen::VectorXd>(m.b1.data(), m.b1.size()));
  views.emplace_back("bn_gamma", Eigen::Map<Eigen::VectorXd>(m.bn_gamma.data(), m.bn_gamma.size()));
  views.emplace_back("bn_beta", Eigen::Map<Eigen::VectorXd>(m.bn_beta.data(), m.bn_beta.size()));
  views.emplace_back("bn_mean", Eigen::Map<Eigen::VectorXd>(m.bn_mean.data(), m.bn_mean.size()));
  views.emplace_back("bn_var", Eigen::Map<Eigen::VectorXd>(m.bn_var.data(), m.bn_var.size()));
  views.emplace_back("prelu", Eigen::Map<Eigen::VectorXd>(m.prelu.data(), m.prelu.size()));
  views.emplace_back("w2", Eigen::Map<Eigen::VectorXd>(m.w2.data(), m.w2.size()));
  views.emplace_back("b2", Eigen::Map<Eigen::VectorXd>(m.b2.data(), m.b2.size()));
  return views;
}

constexpr char kModelMagic[8] = {'G', 'K', 'M', 'L', 'P', '0', '0', '1'};

}  // namespace

void save_model(const std::string& path, const MlpModel& model,
                const std::string& config_digest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  MlpModel copy = model;
  auto views = param_views(copy);

  std::string header = "{\"input_dim\":" + std::to_string(model.input_dim) +
                       ",\"hidden\":" + std::to_string(MlpModel::kHidden) +
                       ",\"out\":" + std::to_string(MlpModel::kOut) +
                       ",\"bn_eps\":1e-5,\"config_digest\":\"" + config_digest + "\",\"tensors\":[";
  for (size_t i = 0; i < views.size(); ++i) {
    header += "{\"name\":\"" + views[i].first +
              "\",\"size\":" + std::to_string(views[i].second.size()) + "}";
    if (i + 1 < views.size()) header += ",";
  }
  header += "]}";

  out.write(kModelMagic, 8);
  const uint32_t len = static_cast<uint32_t>(header.size());
  out.write(reinterpret_cast<const char*>(&len), 4);
  out.write(header.data(), header.size());
  for (auto& [name, view] : views) {
    for (Eigen::Index i = 0; i < view.size(); ++i) {
      const float f = static_cast<float>(view(i));
      out.write(reinterpret_cast<const char*>(&f), 4);
    }
  }
}

MlpModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kModelMagic, 8) != 0) {
    throw Error(path + ": not a model checkpoint");
  }
  uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), 4);
  std::string header(len, '\0');
  in.read(header.data(), len);

  const auto find_int = [&](const std::string& key) {
    const auto pos = header.find("\"" + key + "\":");
    if (pos == std::string::npos) throw Error(path + ": malformed model header");
    return std::stoi(header.substr(pos + key.size() + 3));
  };
  const int input_dim = find_int("input_dim");

  MlpModel model = make_mlp(input_dim, 0);
  auto views = param_views(model);
  for (auto& [name, view] : views) {
    for (Eigen::Index i = 0; i < view.size(); ++i) {
      float f;
      in.read(reinterpret_cast<char*>(&f), 4);
      if (!in) throw Error(path + ": truncated model file");
      view(i) = f;
    }
  }
  return model;
}

double grad_check(const MlpModel& model, const Eigen::MatrixXd& batch,
                  const std::vector<int>& labels,
                  const std::array<double, kContactBins>& weights, uint64_t seed,
                  double corruption, int max_params) {
  if (batch.rows() == 0) throw Error("grad_check: empty batch");

  MlpGradients grads;
  mlp_backward(model, batch, labels, weights, grads);
  if (corruption != 0.0) grads.w1 *= (1.0 + corruption);

  // Flatten analytic gradients in the same order used below for indexing.
  MlpModel probe = model;
  auto views = param_views(probe);
  std::vector<double> analytic;
  MlpModel grad_holder = model;
  grad_holder.w1 = grads.w1;
  grad_holder.b1 = grads.b1;
  grad_holder.bn_gamma = grads.bn_gamma;
  grad_holder.bn_beta = grads.bn_beta;
  grad_holder.bn_mean.setZero();
  grad_holder.bn_var.setZero();
  grad_holder.prelu = grads.prelu;
  grad_holder.w2 = grads.w2;
  grad_holder.b2 = grads.b2;
  auto grad_views = param_views(grad_holder);

  std::vector<std::pair<int, int>> index;  // (view, offset), running stats excluded
  for (size_t v = 0; v < views.size(); ++v) {
    if (views[v].first == "bn_mean" || views[v].first == "bn_var") continue;
    for (int i = 0; i < views[v].second.size(); ++i) index.emplace_back(static_cast<int>(v), i);
  }

  Rng rng(seed);
  std::vector<int> picks(index.size());
  std::iota(picks.begin(), picks.end(), 0);
  rng.shuffle(picks);
  const int checks = std::min<int>(max_params, static_cast<int>(picks.size()));

  auto loss_at = [&]() {
    ForwardCache cache;
    const Eigen::MatrixXd logits = forward_impl(probe, batch, true, nullptr, &cache);
    return mlp_loss(logits, labels, weights);
  };

  const double h = 1e-5;
  double max_rel = 0;
  for (int k = 0; k < checks; ++k) {
    const auto [v, i] = index[picks[k]];
    const double saved = views[v].second(i);
    views[v].second(i) = saved + h;
    const double up = loss_at();
    views[v].second(i) = saved - h;
    const double down = loss_at();
    views[v].second(i) = saved;
    const double numeric = (up - down) / (2 * h);
    const double ana = grad_views[v].second(i);
    const double rel = std::abs(ana - numeric) / std::max(std::abs(ana) + std::abs(numeric), 1e-6);
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

}  // namespace graspkit
