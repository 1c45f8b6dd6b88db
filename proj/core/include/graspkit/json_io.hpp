#pragma once

#include <string>
#include <vector>

#include "graspkit/analysis.hpp"
#include "graspkit/hand.hpp"
#include "graspkit/heuristic.hpp"
#include "graspkit/reconstruct.hpp"
#include "graspkit/synth.hpp"

namespace graspkit {

// JSON file formats. Failures throw Error with the offending path; malformed
// JSON reports line and column.

void save_skeleton_json(const std::string& path, const HandSkeleton& skeleton);
HandSkeleton load_skeleton_json(const std::string& path);

void save_kinematic_json(const std::string& path, const KinematicHand& hand);
KinematicHand load_kinematic_json(const std::string& path);

void save_joints_json(const std::string& path, const JointArray& joints);
JointArray load_joints_json(const std::string& path);

void save_observation_json(const std::string& path, const GraspObservation& obs);
GraspObservation load_observation_json(const std::string& path);

void save_result_json(const std::string& path, const ReconstructionResult& result,
                      double mean_error_vs_gt_m = -1.0);
ReconstructionResult load_result_json(const std::string& path);

void save_calibration_json(const std::string& path, const Calibration& calibration,
                           uint64_t seed);
Calibration load_calibration_json(const std::string& path);

void save_scenario_json(const std::string& path, const SynthScenario& scenario);
SynthScenario load_scenario_json(const std::string& path);

/// Grasp-set index: entries reference mesh/contact PLY files relative to the
/// index file, with hands inline.
void save_graspset_json(const std::string& path, const GraspSet& grasps,
                        const std::vector<std::string>& mesh_paths,
                        const std::vector<std::string>& contact_paths);
GraspSet load_graspset_json(const std::string& path);

/// Flat binary feature rows (little-endian float32, row-major) plus a JSON
/// sidecar describing family, shape, and any dropout.
void save_features(const std::string& bin_path, const std::string& sidecar_path,
                   const FeatureMatrix& features);
FeatureMatrix load_features(const std::string& bin_path, const std::string& sidecar_path);

/// Per-point contact values as a bare JSON array.
void save_contact_json(const std::string& path, const ContactMap& map);
ContactMap load_contact_json(const std::string& path);

std::vector<double> load_scalar_array_json(const std::string& path);

/// FNV-1a content hash used in output manifests.
std::string content_digest(const std::string& path);

}  // namespace graspkit
