#include "graspkit/reconstruct.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "graspkit/rng.hpp"

namespace graspkit {

void Detection2D::validate() const {
  for (const Vec3& j : joints) {
    if (!j.allFinite()) throw Error("Detection2D: non-finite entry");
    if (j.z() < 0 || j.z() > 1) throw Error("Detection2D: confidence outside [0,1]");
  }
}

void GraspObservation::validate() const {
  if (cameras.empty()) throw Error("GraspObservation: needs at least one camera");
  if (frames.size() < 2) throw Error("GraspObservation: needs at least two frames");
  for (const Detection2D& det : detections) {
    det.validate();
    if (det.camera < 0 || det.camera >= static_cast<int>(cameras.size())) {
      throw Error("GraspObservation: detection references unknown camera");
    }
    if (det.frame < 0 || det.frame >= static_cast<int>(frames.size())) {
      throw Error("GraspObservation: detection references unknown frame");
    }
  }
}

const Detection2D* GraspObservation::find(int frame, int camera) const {
  for (const Detection2D& det : detections) {
    if (det.frame == frame && det.camera == camera) return &det;
  }
  return nullptr;
}

double huber(double e, double delta) {
  if (e <= delta) return 0.5 * e * e;
  return delta * (e - 0.5 * delta);
}

ResidualReport residual(const JointArray& joints, const Detection2D& detection,
                        const CameraView& camera, const RigidTransform& object_to_world,
                        double huber_delta_px) {
  const RigidTransform chain = camera.world_to_camera * object_to_world;
  ResidualReport report;
  for (int j = 0; j < 21; ++j) {
    const double w = detection.joints[j].z();
    if (w <= 0) continue;
    const auto px = project(joints[j], camera.intrinsics, chain);
    if (!px) {
      report.behind_camera[j] = true;
      continue;
    }
    const double err = (Vec2(detection.joints[j].x(), detection.joints[j].y()) - *px).norm();
    report.pixel_error[j] = err;
    report.robust[j] = huber(err * std::sqrt(w), huber_delta_px);
    report.used[j] = true;
    report.total += report.robust[j];
  }
  return report;
}

namespace {

// List of detections relevant to one pair, with precomputed chain.
struct PairContext {
  const Detection2D* detection = nullptr;
  const CameraView* camera = nullptr;
  RigidTransform chain;  // object -> camera
};

std::vector<PairContext> gather(const GraspObservation& obs, std::span<const PairId> pairs) {
  std::vector<PairContext> out;
  out.reserve(pairs.size());
  for (const PairId& pair : pairs) {
    const Detection2D* det = obs.find(pair.frame, pair.camera);
    if (!det) continue;
    if (!obs.frames[pair.frame].valid) continue;
    PairContext ctx;
    ctx.detection = det;
    ctx.camera = &obs.cameras[pair.camera];
    ctx.chain = ctx.camera->world_to_camera * obs.frames[pair.frame].object_to_world;
    out.push_back(ctx);
  }
  return out;
}

// All observable (frame, camera) pairs in canonical order.
std::vector<PairId> canonical_pairs(const GraspObservation& obs) {
  std::vector<PairId> pairs;
  for (const Detection2D& det : obs.detections) {
    if (!obs.frames[det.frame].valid) continue;
    pairs.push_back({det.frame, det.camera});
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  return pairs;
}

}  // namespace

std::array<std::optional<Vec3>, 21> triangulate_init(const GraspObservation& obs,
                                                     std::span<const PairId> subset) {
  const std::vector<PairContext> contexts = gather(obs, subset);
  std::array<std::optional<Vec3>, 21> joints;
  for (int j = 0; j < 21; ++j) {
    std::vector<Eigen::Matrix<double, 2, 4>> rows;
    for (const PairContext& ctx : contexts) {
      const double w = ctx.detection->joints[j].z();
      if (w <= 0) continue;
      const CameraIntrinsics& k = ctx.camera->intrinsics;
      Eigen::Matrix<double, 3, 4> p;
      p.leftCols<3>() = ctx.chain.rotation();
      p.col(3) = ctx.chain.translation();
      Mat3 kmat;
      kmat << k.fx, 0, k.cx, 0, k.fy, k.cy, 0, 0, 1;
      p = kmat * p;
      const double u = ctx.detection->joints[j].x();
      const double v = ctx.detection->joints[j].y();
      Eigen::Matrix<double, 2, 4> a;
      a.row(0) = u * p.row(2) - p.row(0);
      a.row(1) = v * p.row(2) - p.row(1);
      a.row(0) /= std::max(a.row(0).norm(), 1e-12);
      a.row(1) /= std::max(a.row(1).norm(), 1e-12);
      rows.push_back(a);
    }
    if (rows.size() < 2) continue;
    Eigen::MatrixXd a(2 * rows.size(), 4);
    for (size_t r = 0; r < rows.size(); ++r) a.middleRows<2>(2 * r) = rows[r];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinV);
    const Eigen::VectorXd sv = svd.singularValues();
    // Rank 3 is required for a unique point; a zero-baseline pair leaves a
    // one-parameter family and the second-smallest singular value collapses.
    if (sv(2) < 1e-7 * sv(0)) continue;
    const Eigen::Vector4d h = svd.matrixV().col(3);
    if (std::abs(h(3)) < 1e-12 * h.head<3>().norm()) continue;
    const Vec3 candidate = h.head<3>() / h(3);
    // cheirality: the point must sit strictly in front of every view that
    // contributed (an inconsistent zero-baseline system resolves to the
    // camera center instead)
    bool in_front = true;
    for (const PairContext& ctx : contexts) {
      if (ctx.detection->joints[j].z() <= 0) continue;
      if (ctx.chain.apply(candidate).z() <= 1e-9) {
        in_front = false;
        break;
      }
    }
    if (!in_front) continue;
    joints[j] = candidate;
  }
  return joints;
}

JointArray optimize_joints(const JointArray& init, const GraspObservation& obs,
                           std::span<const PairId> inliers, double huber_delta_px) {
  const std::vector<PairContext> contexts = gather(obs, inliers);
  bool any_used = false;
  for (const PairContext& ctx : contexts) {
    for (int j = 0; j < 21; ++j) {
      if (ctx.detection->joints[j].z() > 0) {
        any_used = true;
        break;
      }
    }
  }
  if (!any_used) throw Error("optimize_joints: every confidence is zero");

  JointArray joints = init;

  // Residuals decouple per joint, so each is an independent 3-parameter
  // robust least-squares problem.
  for (int j = 0; j < 21; ++j) {
    Vec3 x = init[j];
    auto cost_at = [&](const Vec3& p) {
      double total = 0;
      for (const PairContext& ctx : contexts) {
        const double w = ctx.detection->joints[j].z();
        if (w <= 0) continue;
        const auto px = project(p, ctx.camera->intrinsics, ctx.chain);
        if (!px) continue;  // behind camera: excluded
        const double err =
            (Vec2(ctx.detection->joints[j].x(), ctx.detection->joints[j].y()) - *px).norm();
        total += huber(err * std::sqrt(w), huber_delta_px);
      }
      return total;
    };

    double cost = cost_at(x);
    double lambda = 1e-6;
    for (int iter = 0; iter < 200; ++iter) {
      Mat3 h = Mat3::Zero();
      Vec3 g = Vec3::Zero();
      for (const PairContext& ctx : contexts) {
        const double w = ctx.detection->joints[j].z();
        if (w <= 0) continue;
        const Vec3 c = ctx.chain.apply(x);
        if (c.z() <= 0) continue;
        const CameraIntrinsics& k = ctx.camera->intrinsics;
        const Vec2 proj(k.fx * c.x() / c.z() + k.cx, k.fy * c.y() / c.z() + k.cy);
        const Vec2 diff = Vec2(ctx.detection->joints[j].x(), ctx.detection->joints[j].y()) - proj;
        Eigen::Matrix<double, 2, 3> dproj_dc;
        dproj_dc << k.fx / c.z(), 0, -k.fx * c.x() / (c.z() * c.z()),
            0, k.fy / c.z(), -k.fy * c.y() / (c.z() * c.z());
        const Eigen::Matrix<double, 2, 3> jac = dproj_dc * ctx.chain.rotation();
        // residual v = sqrt(w) * diff, dv/dx = -sqrt(w) * jac
        const double sw = std::sqrt(w);
        const double e = diff.norm() * sw;
        const double omega = e <= huber_delta_px ? 1.0 : huber_delta_px / e;  // huber IRLS weight
        h += omega * w * jac.transpose() * jac;
        g += -omega * w * jac.transpose() * diff;
      }
      if (g.norm() < 1e-14) break;

      bool accepted = false;
      for (int attempt = 0; attempt < 10; ++attempt) {
        Mat3 damped = h;
        for (int d = 0; d < 3; ++d) damped(d, d) += lambda * std::max(h(d, d), 1e-12);
        const Vec3 step = damped.ldlt().solve(-g);
        const double trial = cost_at(x + step);
        if (trial < cost) {
          const double drop = cost - trial;
          x += step;
          cost = trial;
          lambda = std::max(lambda / 3.0, 1e-14);
          accepted = true;
          if (drop < 1e-10 * std::max(cost, 1e-30)) iter = 200;
          break;
        }
        lambda *= 4.0;
        if (lambda > 1e14) break;
      }
      if (!accepted) break;
    }
    joints[j] = x;
  }
  return joints;
}

std::optional<double> pair_mean_error(const JointArray& joints, const GraspObservation& obs,
                                      const PairId& pair) {
  const Detection2D* det = obs.find(pair.frame, pair.camera);
  if (!det || !obs.frames[pair.frame].valid) return std::nullopt;
  const RigidTransform chain =
      obs.cameras[pair.camera].world_to_camera * obs.frames[pair.frame].object_to_world;
  double total = 0;
  int used = 0;
  for (int j = 0; j < 21; ++j) {
    if (det->joints[j].z() <= 0) continue;
    const auto px = project(joints[j], obs.cameras[pair.camera].intrinsics, chain);
    if (!px) return std::nullopt;  // behind camera disqualifies the pair
    total += (Vec2(det->joints[j].x(), det->joints[j].y()) - *px).norm();
    ++used;
  }
  if (used == 0) return std::nullopt;
  return total / used;
}

RigidTransform pnp_pose(const Detection2D& detection, const JointArray& joints,
                        const CameraView& camera) {
  std::vector<int> usable;
  for (int j = 0; j < 21; ++j) {
    if (detection.joints[j].z() > 0) usable.push_back(j);
  }
  if (usable.size() < 6) {
    throw Error("pnp_pose: needs at least 6 weighted correspondences for the DLT");
  }

  // Coplanarity check via the scatter of the 3D points.
  Vec3 mean = Vec3::Zero();
  for (int j : usable) mean += joints[j];
  mean /= usable.size();
  Mat3 scatter = Mat3::Zero();
  for (int j : usable) scatter += (joints[j] - mean) * (joints[j] - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
  if (eig.eigenvalues()(0) < 1e-10 * std::max(eig.eigenvalues()(2), 1e-12)) {
    throw Error("pnp_pose: degenerate (near-coplanar) joint configuration");
  }

  const CameraIntrinsics& k = camera.intrinsics;

  // DLT on normalized image coordinates for P = [R|t] up to scale.
  Eigen::MatrixXd a(2 * usable.size(), 12);
  for (size_t row = 0; row < usable.size(); ++row) {
    const int j = usable[row];
    const Vec3& X = joints[j];
    const double xn = (detection.joints[j].x() - k.cx) / k.fx;
    const double yn = (detection.joints[j].y() - k.cy) / k.fy;
    Eigen::RowVector4d xh(X.x(), X.y(), X.z(), 1.0);
    a.row(2 * row).setZero();
    a.row(2 * row).segment<4>(0) = xh;
    a.row(2 * row).segment<4>(8) = -xn * xh;
    a.row(2 * row + 1).setZero();
    a.row(2 * row + 1).segment<4>(4) = xh;
    a.row(2 * row + 1).segment<4>(8) = -yn * xh;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinV);
  Eigen::Matrix<double, 3, 4> p;
  const Eigen::VectorXd h = svd.matrixV().col(11);
  p << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8), h(9), h(10), h(11);

  Mat3 m = p.leftCols<3>();
  const double scale = std::cbrt(std::abs(m.determinant()));
  if (scale < 1e-12) throw Error("pnp_pose: degenerate DLT solution");
  p /= scale;
  if (m.determinant() < 0) p = -p;

  // Cheirality: most points should land in front of the camera.
  int in_front = 0;
  for (int j : usable) {
    const Vec3 c = p.leftCols<3>() * joints[j] + p.col(3);
    if (c.z() > 0) ++in_front;
  }
  if (in_front * 2 < static_cast<int>(usable.size())) p = -p;

  // Project the rotation block to SO(3).
  Eigen::JacobiSVD<Mat3> rsvd(p.leftCols<3>(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((rsvd.matrixU() * rsvd.matrixV().transpose()).determinant() < 0) d(2, 2) = -1;
  Mat3 rotation = rsvd.matrixU() * d * rsvd.matrixV().transpose();
  Vec3 translation = p.col(3);

  // Weighted nonlinear refinement over the 6-DOF camera-from-object pose.
  Eigen::Matrix<double, 6, 1> x;
  x.head<3>() = axis_angle_from_rotation(rotation);
  x.tail<3>() = translation;

  auto cost_at = [&](const Eigen::Matrix<double, 6, 1>& params) {
    const Mat3 r = rotation_from_axis_angle(params.head<3>());
    const Vec3 t = params.tail<3>();
    double total = 0;
    for (int j : usable) {
      const double w = detection.joints[j].z();
      const Vec3 c = r * joints[j] + t;
      if (c.z() <= 1e-9) {
        total += 1e9;  // keep the solution in front of the camera
        continue;
      }
      const Vec2 proj(k.fx * c.x() / c.z() + k.cx, k.fy * c.y() / c.z() + k.cy);
      total += w * (Vec2(detection.joints[j].x(), detection.joints[j].y()) - proj).squaredNorm();
    }
    return total;
  };

  double cost = cost_at(x);
  double lambda = 1e-6;
  for (int iter = 0; iter < 100; ++iter) {
    const Mat3 r = rotation_from_axis_angle(x.head<3>());
    const Vec3 t = x.tail<3>();
    Eigen::Matrix<double, 6, 6> hess = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> grad = Eigen::Matrix<double, 6, 1>::Zero();
    for (int j : usable) {
      const double w = detection.joints[j].z();
      const Vec3 c = r * joints[j] + t;
      if (c.z() <= 1e-9) continue;
      const Vec2 proj(k.fx * c.x() / c.z() + k.cx, k.fy * c.y() / c.z() + k.cy);
      const Vec2 diff = Vec2(detection.joints[j].x(), detection.joints[j].y()) - proj;
      Eigen::Matrix<double, 2, 3> dproj_dc;
      dproj_dc << k.fx / c.z(), 0, -k.fx * c.x() / (c.z() * c.z()),
          0, k.fy / c.z(), -k.fy * c.y() / (c.z() * c.z());
      Eigen::Matrix<double, 3, 6> dc_dx;
      // d(R p + t)/d(rotvec) ~ -[R p]_x for a left-multiplied increment;
      // parameterize the update as R <- exp(dw) R.
      const Vec3 rp = r * joints[j];
      Mat3 skew;
      skew << 0, -rp.z(), rp.y(), rp.z(), 0, -rp.x(), -rp.y(), rp.x(), 0;
      dc_dx.leftCols<3>() = -skew;
      dc_dx.rightCols<3>() = Mat3::Identity();
      const Eigen::Matrix<double, 2, 6> jac = dproj_dc * dc_dx;
      hess += w * jac.transpose() * jac;
      grad += -w * jac.transpose() * diff;
    }
    if (grad.norm() < 1e-12) break;

    bool accepted = false;
    for (int attempt = 0; attempt < 10; ++attempt) {
      Eigen::Matrix<double, 6, 6> damped = hess;
      for (int d2 = 0; d2 < 6; ++d2) damped(d2, d2) += lambda * std::max(hess(d2, d2), 1e-12);
      const Eigen::Matrix<double, 6, 1> step = damped.ldlt().solve(-grad);
      Eigen::Matrix<double, 6, 1> candidate;
      // left-multiplicative rotation update
      const Mat3 rnew = rotation_from_axis_angle(step.head<3>()) * r;
      candidate.head<3>() = axis_angle_from_rotation(rnew);
      candidate.tail<3>() = x.tail<3>() + step.tail<3>();
      const double trial = cost_at(candidate);
      if (trial < cost) {
        const double drop = cost - trial;
        x = candidate;
        cost = trial;
        lambda = std::max(lambda / 3.0, 1e-14);
        accepted = true;
        if (drop < 1e-12 * std::max(cost, 1e-30)) iter = 100;
        break;
      }
      lambda *= 4.0;
      if (lambda > 1e14) break;
    }
    if (!accepted) break;
  }

  const RigidTransform camera_from_object(rotation_from_axis_angle(x.head<3>()),
                                          x.tail<3>());
  return camera.world_to_camera.inverse() * camera_from_object;
}

namespace {

struct Candidate {
  JointArray joints{};
  std::vector<PairId> inliers;
  double mean_error = 0;
  bool valid = false;
};

Candidate evaluate_model(const JointArray& joints, const GraspObservation& obs,
                         std::span<const PairId> all_pairs, double inlier_px) {
  Candidate cand;
  cand.joints = joints;
  double total = 0;
  for (const PairId& pair : all_pairs) {
    const auto err = pair_mean_error(joints, obs, pair);
    if (err && *err <= inlier_px) {
      cand.inliers.push_back(pair);
      total += *err;
    }
  }
  cand.mean_error = cand.inliers.empty() ? 0 : total / cand.inliers.size();
  cand.valid = true;
  return cand;
}

}  // namespace

ReconstructionResult ransac_reconstruct(const GraspObservation& obs, const RansacParams& params) {
  obs.validate();
  const std::vector<PairId> pairs = canonical_pairs(obs);
  if (pairs.size() < 2) throw Error("ransac_reconstruct: needs at least 2 frame-camera pairs");

  Rng rng(params.seed);
  Candidate best;
  best.inliers.clear();

  for (int iter = 0; iter < params.iterations; ++iter) {
    const int i = rng.uniform_int(static_cast<int>(pairs.size()));
    int j = rng.uniform_int(static_cast<int>(pairs.size()) - 1);
    if (j >= i) ++j;
    const std::array<PairId, 2> sample = {pairs[i], pairs[j]};

    const auto init = triangulate_init(obs, sample);
    JointArray model;
    bool complete = true;
    for (int joint = 0; joint < 21; ++joint) {
      if (!init[joint]) {
        complete = false;
        break;
      }
      model[joint] = *init[joint];
    }
    if (!complete) continue;

    Candidate cand = evaluate_model(model, obs, pairs, params.inlier_px);
    if (!best.valid || cand.inliers.size() > best.inliers.size() ||
        (cand.inliers.size() == best.inliers.size() && cand.mean_error < best.mean_error)) {
      best = cand;
    }
  }

  if (!best.valid || static_cast<int>(best.inliers.size()) < params.min_inlier_pairs) {
    throw Error("ransac_reconstruct: no model with enough inlier pairs");
  }

  // Refine on the consensus set, then settle the inlier set with the
  // refined joints (at most two rounds).
  JointArray joints = best.joints;
  std::vector<PairId> inliers = best.inliers;
  for (int round = 0; round < 2; ++round) {
    joints = optimize_joints(joints, obs, inliers, params.huber_delta_px);
    Candidate updated = evaluate_model(joints, obs, pairs, params.inlier_px);
    if (static_cast<int>(updated.inliers.size()) < params.min_inlier_pairs) break;
    const bool settled = updated.inliers == inliers;
    inliers = std::move(updated.inliers);
    if (settled) break;
  }

  ReconstructionResult result;
  result.joints = joints;
  result.inliers = inliers;
  double total = 0;
  for (const PairId& pair : result.inliers) {
    const double err = pair_mean_error(joints, obs, pair).value_or(0.0);
    result.inlier_errors_px.push_back(err);
    total += err;
  }
  result.mean_reprojection_px =
      result.inliers.empty() ? 0 : total / static_cast<double>(result.inliers.size());
  return result;
}

ReconstructionResult second_pass_rescue(const ReconstructionResult& result,
                                        const GraspObservation& obs,
                                        const RansacParams& params) {
  std::set<int> inlier_frames;
  for (const PairId& pair : result.inliers) inlier_frames.insert(pair.frame);

  ReconstructionResult updated = result;
  GraspObservation patched = obs;

  for (int frame = 0; frame < static_cast<int>(obs.frames.size()); ++frame) {
    if (inlier_frames.count(frame)) continue;

    // Pose from the camera with the most detected joints; every pair of the
    // frame is then re-tested under that pose.
    const Detection2D* best_det = nullptr;
    int best_count = 0;
    for (const Detection2D& det : obs.detections) {
      if (det.frame != frame) continue;
      int count = 0;
      for (const Vec3& j : det.joints) {
        if (j.z() > 0) ++count;
      }
      if (count > best_count) {
        best_count = count;
        best_det = &det;
      }
    }
    if (!best_det || best_count < 6) continue;

    RigidTransform pose;
    try {
      pose = pnp_pose(*best_det, result.joints, obs.cameras[best_det->camera]);
    } catch (const Error&) {
      continue;
    }

    // Re-test every pair of the frame under the rescued pose.
    patched.frames[frame].object_to_world = pose;
    patched.frames[frame].valid = true;
    std::vector<PairId> passing;
    for (const Detection2D& det : obs.detections) {
      if (det.frame != frame) continue;
      const PairId pair{frame, det.camera};
      const auto err = pair_mean_error(result.joints, patched, pair);
      if (err && *err <= params.inlier_px) passing.push_back(pair);
    }
    if (passing.empty()) {
      patched.frames[frame] = obs.frames[frame];
      continue;
    }
    updated.rescued.push_back({frame, pose});
    for (const PairId& pair : passing) {
      updated.inliers.push_back(pair);
      updated.inlier_errors_px.push_back(*pair_mean_error(result.joints, patched, pair));
    }
  }

  if (params.refine_after_rescue && !updated.rescued.empty()) {
    updated.joints =
        optimize_joints(updated.joints, patched, updated.inliers, params.huber_delta_px);
  }

  double total = 0;
  for (double e : updated.inlier_errors_px) total += e;
  updated.mean_reprojection_px =
      updated.inliers.empty() ? 0 : total / static_cast<double>(updated.inliers.size());
  return updated;
}

}  // namespace graspkit
