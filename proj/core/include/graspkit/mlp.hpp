#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "graspkit/contact.hpp"
#include "graspkit/features.hpp"
#include "graspkit/hand.hpp"
#include "graspkit/mesh.hpp"

namespace graspkit {

/// One-hidden-layer perceptron over per-point features: affine -> batchnorm
/// -> PReLU -> affine -> 10 contact-bin logits.
struct MlpModel {
  static constexpr int kHidden = 90;
  static constexpr int kOut = kContactBins;

  int input_dim = 0;
  Eigen::MatrixXd w1;  // kHidden x input_dim
  Eigen::VectorXd b1;  // kHidden
  Eigen::VectorXd bn_gamma, bn_beta;      // kHidden
  Eigen::VectorXd bn_mean, bn_var;        // running statistics
  Eigen::VectorXd prelu;                  // per-channel negative slopes
  Eigen::MatrixXd w2;  // kOut x kHidden
  Eigen::VectorXd b2;  // kOut

  double bn_eps = 1e-5;
  double bn_momentum = 0.1;

  int parameter_count() const;
};

/// He-initialized model; PReLU slopes start at 0.25.
MlpModel make_mlp(int input_dim, uint64_t seed);

/// Train-mode forward uses batch statistics and refreshes the running ones;
/// eval mode is a pure function of the row.
Eigen::MatrixXd mlp_forward(MlpModel& model, const Eigen::MatrixXd& batch, bool training);
Eigen::MatrixXd mlp_forward_eval(const MlpModel& model, const Eigen::MatrixXd& batch);

/// Mean over the batch of class-weighted cross entropy.
double mlp_loss(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
                const std::array<double, kContactBins>& weights);

struct MlpGradients {
  Eigen::MatrixXd w1, w2;
  Eigen::VectorXd b1, b2, bn_gamma, bn_beta, prelu;
};

/// Train-mode forward + backward over the batch; returns the loss. Running
/// statistics are left untouched.
double mlp_backward(const MlpModel& model, const Eigen::MatrixXd& batch,
                    const std::vector<int>& labels,
                    const std::array<double, kContactBins>& weights, MlpGradients& grads);

struct TrainConfig {
  double learning_rate = 1e-3;  // must come from {5e-4, 1e-3, 5e-3}
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 5e-4;  // decoupled, applied to the affine weights
  int batch_size = 25;
  int epochs = 100;
  int patience = 10;       // early stopping on held-out loss; <= 0 disables
  double holdout = 0.1;    // fraction of grasps held out for early stopping
  int rotations = 12;      // 30-degree increments around the up axis
  uint64_t seed = 0;

  void validate() const;
};

/// Everything needed to recompute features under rotation augmentation.
struct GraspSample {
  PointCloud points;
  ContactMap contact;  // aligned with points
  std::vector<HandSkeleton> hands;
  std::optional<TriMesh> mesh;          // voxel route
  std::optional<ContactMap> mesh_contact;  // per-vertex, voxel route
};

/// Rigid rotation of the whole sample about the object-frame up axis (+z).
GraspSample rotate_sample(const GraspSample& sample, double angle);

struct TrainResult {
  MlpModel model;
  std::vector<double> train_loss;    // per epoch
  std::vector<double> holdout_loss;  // per epoch, empty when no holdout
  int best_epoch = -1;
  bool aborted = false;  // NaN loss; model is the last good checkpoint
};

/// Adam with decoupled weight decay over grasp rows expanded into rotated
/// copies. Deterministic for a fixed seed.
TrainResult train_contact_model(std::span<const GraspSample> grasps, FeatureFamily family,
                                const TrainConfig& config, bool voxel_mode = false);

/// Row-level training loop behind train_contact_model. Early stopping is
/// active when holdout rows are provided and config.patience > 0.
TrainResult train_on_rows(const Eigen::MatrixXd& rows, const std::vector<int>& labels,
                          const Eigen::MatrixXd& holdout_rows,
                          const std::vector<int>& holdout_labels, const TrainConfig& config);

struct PredictResult {
  ContactDistribution distribution;  // averaged over rotations
  ContactMap map;                    // annealed-mean decode, T = 0.1
};
PredictResult predict_contact(const MlpModel& model, const GraspSample& sample,
                              FeatureFamily family, int rotations = 12);

/// Analytic vs central-finite-difference gradients over a random parameter
/// subset; returns the max relative error. `corruption` scales the analytic
/// first-layer gradient to verify the check itself catches bad gradients.
double grad_check(const MlpModel& model, const Eigen::MatrixXd& batch,
                  const std::vector<int>& labels,
                  const std::array<double, kContactBins>& weights, uint64_t seed,
                  double corruption = 0.0, int max_params = 200);

void save_model(const std::string& path, const MlpModel& model,
                const std::string& config_digest = {});
MlpModel load_model(const std::string& path);

}  // namespace graspkit
