#pragma once

#include <vector>

#include "graspkit/contact.hpp"
#include "graspkit/hand.hpp"
#include "graspkit/mesh.hpp"

namespace graspkit {

/// Accuracy at increasing |prediction - truth| thresholds, points reweighted
/// by the inverse frequency of their ground-truth contact bin.
struct AucReport {
  std::vector<double> thresholds;
  std::vector<double> accuracy;
  double auc_percent = 0;
};

AucReport rebalanced_auc(const ContactMap& pred, const ContactMap& gt, double lambda = 0.4,
                         int grid_points = 101);

struct JointAccuracy {
  double mean_error_mm = 0;
  double pck_auc_percent = 0;  // area under PCK up to the 5 cm cap
};
JointAccuracy joint_accuracy(const JointArray& pred, const JointArray& gt);

/// Surface penetration of the hand proxy into a watertight object mesh.
struct PenetrationStats {
  double mean_mm = 0;    // over penetrating samples
  double median_mm = 0;
  double frequency_percent = 0;  // penetrating fraction of all samples
};
PenetrationStats penetration_stats(const std::vector<HandProxy>& hands, const TriMesh& object);

}  // namespace graspkit
