#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "graspkit/contact.hpp"
#include "graspkit/hand.hpp"
#include "graspkit/mesh.hpp"

namespace graspkit {

enum class Intent { kUse, kHandoff };

Intent intent_from_name(const std::string& name);
std::string intent_name(Intent intent);

struct GraspRecord {
  std::string object_id;
  Intent intent = Intent::kUse;
  int participant = 0;
  std::shared_ptr<const TriMesh> mesh;
  ContactMap contact;  // per mesh vertex
  std::vector<HandSkeleton> hands;
};
using GraspSet = std::vector<GraspRecord>;

enum class AssociationLevel { kPoint, kPhalange };

/// Contacted object vertices mapped to hand parts. At phalange level parts
/// are the 20 phalanges plus the palm (id 20); at point level parts are
/// stable ids into the canonical hand-proxy surface sampling.
struct PartAssociation {
  AssociationLevel level = AssociationLevel::kPhalange;
  std::vector<int> vertex;  // contacted vertex ids
  std::vector<int> part;    // aligned part id per contacted vertex
  int part_count = 0;
};

PartAssociation associate(const ContactMap& contact, const TriMesh& mesh,
                          const std::vector<HandSkeleton>& hands, AssociationLevel level,
                          const HandProxyConfig& proxy_config = {});

/// Fraction of grasps in which each part receives at least one associated
/// contacted point; optionally restricted to one intent.
std::vector<double> hand_contact_probability(const GraspSet& grasps, AssociationLevel level,
                                             std::optional<Intent> intent = std::nullopt);

/// Per-vertex probability of being contacted by the given part, over grasps
/// that share one object mesh.
std::vector<double> active_areas(const GraspSet& grasps, int part_id,
                                 AssociationLevel level = AssociationLevel::kPhalange);

enum class ContactRegion { kFingertips, kWholeHand };

double contact_area_cm2(const GraspRecord& grasp, ContactRegion region);

/// Per-phalange sums of object triangle areas incident to associated
/// vertices (palm contact excluded; a triangle counts once per phalange).
Eigen::Matrix<double, 20, 1> phalange_area_vector(const GraspRecord& grasp);

/// L2 between phalange area vectors.
double contact_distance(const GraspRecord& a, const GraspRecord& b);

constexpr double kReferenceHandSpan = 0.1;  // wrist to middle knuckle, meters

/// Scales the skeleton about the wrist so wrist->middle-knuckle equals the
/// reference span; for symmetric objects also rotates about the symmetry
/// axis to best match the reference palm (closed-form single-angle fit).
HandSkeleton normalize_and_align(const HandSkeleton& skeleton,
                                 std::optional<Vec3> symmetry_axis = std::nullopt,
                                 const HandSkeleton* reference = nullptr);

struct JointSpread {
  std::array<double, 21> per_joint{};  // rms deviation from the mean location
  double mean = 0;
};
JointSpread joint_stddev(std::span<const HandSkeleton> hands);

/// Deterministic average-linkage agglomerative clustering on flattened
/// joints; merging stops when the closest linkage reaches the threshold.
struct Clustering {
  std::vector<int> labels;
  double mean_intra_distance = 0;  // mean pairwise L2 within clusters
};
Clustering cluster_poses(std::span<const HandSkeleton> hands, double threshold);

enum class SplitKind { kObject, kParticipant };
SplitKind split_from_name(const std::string& name);

struct Split {
  std::vector<int> train;
  std::vector<int> test;
};
/// Object split holds out mug, pan and wine glass; participant split holds
/// out participants 5, 15, 25, 35 and 45.
Split split(const GraspSet& grasps, SplitKind kind);

}  // namespace graspkit
