#include <Eigen/Dense>

#include <cmath>

#include "graspkit/hand.hpp"
#include "graspkit/rng.hpp"

namespace graspkit {

namespace {

constexpr int kParams = 32;

using ParamVec = Eigen::Matrix<double, kParams, 1>;

ParamVec pack(const KinematicHand& hand) {
  ParamVec x;
  x.segment<3>(0) = hand.root_rotation;
  x.segment<3>(3) = hand.root_translation;
  x(6) = hand.shape.global;
  for (int f = 0; f < 5; ++f) x(7 + f) = hand.shape.fingers[f];
  for (int f = 0; f < 5; ++f) {
    const FingerPose& p = hand.fingers[f];
    x(12 + 4 * f) = p.abduction;
    x(13 + 4 * f) = p.knuckle_flex;
    x(14 + 4 * f) = p.middle_flex;
    x(15 + 4 * f) = p.distal_flex;
  }
  return x;
}

KinematicHand unpack(const ParamVec& x, Handedness handedness) {
  KinematicHand hand;
  hand.handedness = handedness;
  hand.root_rotation = x.segment<3>(0);
  hand.root_translation = x.segment<3>(3);
  hand.shape.global = x(6);
  for (int f = 0; f < 5; ++f) hand.shape.fingers[f] = x(7 + f);
  for (int f = 0; f < 5; ++f) {
    hand.fingers[f].abduction = x(12 + 4 * f);
    hand.fingers[f].knuckle_flex = x(13 + 4 * f);
    hand.fingers[f].middle_flex = x(14 + 4 * f);
    hand.fingers[f].distal_flex = x(15 + 4 * f);
  }
  return hand;
}

ParamVec clamp_to_limits(ParamVec x) {
  for (int i = 6; i < 12; ++i) {
    x(i) = std::clamp(x(i), KinematicHand::kShapeMin, KinematicHand::kShapeMax);
  }
  for (int f = 0; f < 5; ++f) {
    x(12 + 4 * f) = std::clamp(x(12 + 4 * f), -KinematicHand::kAbductLimit,
                               KinematicHand::kAbductLimit);
    for (int k = 1; k < 4; ++k) {
      x(12 + 4 * f + k) =
          std::clamp(x(12 + 4 * f + k), KinematicHand::kFlexMin, KinematicHand::kFlexMax);
    }
  }
  return x;
}

Eigen::Matrix<double, 63, 1> joint_residual(const ParamVec& x, Handedness handedness,
                                            const JointArray& target) {
  const HandSkeleton sk = forward_kinematics(unpack(x, handedness));
  Eigen::Matrix<double, 63, 1> r;
  for (int j = 0; j < 21; ++j) r.segment<3>(3 * j) = sk.joints[j] - target[j];
  return r;
}

// Rigid alignment (Kabsch) of the template palm onto the target palm.
RigidTransform align_palm(const JointArray& tmpl, const JointArray& target) {
  const auto& ids = HandSkeleton::palm_joints();
  Vec3 mean_src = Vec3::Zero(), mean_dst = Vec3::Zero();
  for (int id : ids) {
    mean_src += tmpl[id];
    mean_dst += target[id];
  }
  mean_src /= ids.size();
  mean_dst /= ids.size();
  Mat3 cov = Mat3::Zero();
  for (int id : ids) {
    cov += (target[id] - mean_dst) * (tmpl[id] - mean_src).transpose();
  }
  Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
  const Mat3 rotation = svd.matrixU() * d * svd.matrixV().transpose();
  return {rotation, mean_dst - rotation * mean_src};
}

}  // namespace

namespace {

// Damped Gauss-Newton on the plain squared joint error. Used to locate the
// data-optimal basin before the regularized objective is settled; the
// abduction/root-spin near-degeneracy leaves shallow side valleys that the
// multi-start above this routine escapes.
ParamVec least_squares_phase(ParamVec x, Handedness handedness, const JointArray& target,
                             int max_iterations) {
  constexpr double kFd = 1e-7;
  double cost = joint_residual(x, handedness, target).squaredNorm();
  double lambda = 1e-4;
  for (int iter = 0; iter < max_iterations; ++iter) {
    const Eigen::Matrix<double, 63, 1> r = joint_residual(x, handedness, target);
    if (r.norm() < 1e-12) break;
    Eigen::Matrix<double, 63, kParams> jac;
    for (int p = 0; p < kParams; ++p) {
      ParamVec xp = x;
      xp(p) += kFd;
      jac.col(p) = (joint_residual(clamp_to_limits(xp), handedness, target) - r) / kFd;
    }
    const Eigen::Matrix<double, kParams, kParams> jtj = jac.transpose() * jac;
    const ParamVec jtr = jac.transpose() * r;
    bool accepted = false;
    for (int attempt = 0; attempt < 14; ++attempt) {
      Eigen::Matrix<double, kParams, kParams> damped = jtj;
      for (int d = 0; d < kParams; ++d) damped(d, d) += lambda * std::max(jtj(d, d), 1e-12);
      const ParamVec candidate = clamp_to_limits(x + damped.ldlt().solve(-jtr));
      const double trial = joint_residual(candidate, handedness, target).squaredNorm();
      if (trial < cost) {
        const double drop = cost - trial;
        x = candidate;
        cost = trial;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (drop < 1e-16 * std::max(cost, 1e-30)) iter = max_iterations;
        break;
      }
      lambda *= 4.0;
      if (lambda > 1e14) break;
    }
    if (!accepted) break;
  }
  return x;
}

// Signed angle carrying v1 onto v2 about a unit axis.
double signed_angle_about(const Vec3& axis, const Vec3& v1, const Vec3& v2) {
  const Vec3 p1 = v1 - axis * axis.dot(v1);
  const Vec3 p2 = v2 - axis * axis.dot(v2);
  if (p1.norm() < 1e-12 || p2.norm() < 1e-12) return 0.0;
  return std::atan2(axis.dot(p1.cross(p2)), p1.dot(p2));
}

// Direct estimate of shape and finger angles from the target geometry, with
// the root taken from the palm alignment. Exact targets land essentially on
// the true parameters.
ParamVec analytic_init(const ParamVec& aligned, Handedness handedness,
                       const JointArray& target) {
  ParamVec x = aligned;
  const JointArray& tmpl = rest_template(handedness);
  const Mat3 root = rotation_from_axis_angle(x.segment<3>(0));
  const Vec3 origin = x.segment<3>(3);
  const Vec3 palm_out(0, 0, -1);

  // products global*finger from bone-length ratios; split with the global
  // scale at their geometric mean
  double product[5];
  for (int f = 0; f < 5; ++f) {
    const int k = HandSkeleton::knuckle(f);
    double target_len = 0, tmpl_len = 0;
    const int chain[5] = {0, k, k + 1, k + 2, k + 3};
    for (int s = 0; s < 4; ++s) {
      target_len += (target[chain[s + 1]] - target[chain[s]]).norm();
      tmpl_len += (tmpl[chain[s + 1]] - tmpl[chain[s]]).norm();
    }
    product[f] = target_len / tmpl_len;
  }
  double mean = 0;
  for (double p : product) mean += std::log(std::max(p, 1e-6));
  const double global = std::exp(mean / 5.0);
  x(6) = global;
  for (int f = 0; f < 5; ++f) x(7 + f) = product[f] / global;

  for (int f = 0; f < 5; ++f) {
    const int k = HandSkeleton::knuckle(f);
    // target bone directions in the root-local (template) frame
    auto local_dir = [&](int a, int b) {
      return Vec3(root.transpose() * (target[b] - target[a])).normalized();
    };
    const Vec3 d1 = local_dir(k, k + 1);
    const Vec3 d2 = local_dir(k + 1, k + 2);
    const Vec3 d3 = local_dir(k + 2, k + 3);
    const Vec3 u = (tmpl[k + 1] - tmpl[k]).normalized();
    const Vec3 flex_axis = u.cross(palm_out).normalized();

    // abduction (about palm_out) then knuckle flexion (about flex_axis):
    // match the palm_out latitude first, then align azimuth
    const double alpha = palm_out.dot(u - flex_axis * flex_axis.dot(u));
    const double beta = palm_out.dot(flex_axis.cross(u));
    const double gamma = flex_axis.dot(u) * palm_out.dot(flex_axis);
    const double rhs = palm_out.dot(d1) - gamma;
    const double amp = std::hypot(alpha, beta);
    double theta1;
    if (std::abs(rhs) >= amp) {
      theta1 = std::atan2(beta, alpha) * (rhs > 0 ? 1.0 : -1.0);
    } else {
      const double phase = std::atan2(beta, alpha);
      const double delta = std::acos(std::clamp(rhs / amp, -1.0, 1.0));
      // two candidates; prefer the one inside the flexion range
      const double cand1 = phase - delta;
      const double cand2 = phase + delta;
      auto wrap = [](double a) {
        while (a > M_PI) a -= 2 * M_PI;
        while (a < -M_PI) a += 2 * M_PI;
        return a;
      };
      const double w1 = wrap(cand1), w2 = wrap(cand2);
      auto in_range = [](double a) {
        return a >= KinematicHand::kFlexMin && a <= KinematicHand::kFlexMax;
      };
      if (in_range(w1) && !in_range(w2)) theta1 = w1;
      else if (in_range(w2) && !in_range(w1)) theta1 = w2;
      else theta1 = std::abs(w1) <= std::abs(w2) ? w1 : w2;
    }
    const Vec3 v1 = rotation_from_axis_angle(flex_axis * theta1) * u;
    const double abd = signed_angle_about(palm_out, v1, d1);

    const Mat3 r1 = rotation_from_axis_angle(palm_out * abd) *
                    rotation_from_axis_angle(flex_axis * theta1);
    const Vec3 axis1 = r1 * flex_axis;
    const double theta2 = signed_angle_about(axis1, d1, d2);
    const double theta3 = signed_angle_about(axis1, d2, d3);

    x(12 + 4 * f) = abd;
    x(13 + 4 * f) = theta1;
    x(14 + 4 * f) = theta2;
    x(15 + 4 * f) = theta3;
  }
  return clamp_to_limits(x);
}

}  // namespace

HandFitResult fit_hand(const HandSkeleton& target, double sigma) {
  target.validate();
  if (sigma <= 0) throw Error("fit_hand: sigma must be positive");
  const Handedness handedness = target.handedness;
  const JointArray& tmpl = rest_template(handedness);

  KinematicHand init;
  init.handedness = handedness;
  const RigidTransform root = align_palm(tmpl, target.joints);
  init.root_rotation = axis_angle_from_rotation(root.rotation());
  init.root_translation = root.translation();

  // Locate the data-optimal basin first: analytic estimate, then a
  // deterministic multi-start fallback, stopping at the first exact fit.
  const ParamVec x0 = pack(init);
  ParamVec x = x0;
  {
    Rng restart_rng(0xF17);
    ParamVec best = x0;
    double best_cost = std::numeric_limits<double>::infinity();
    for (int start = 0; start < 10; ++start) {
      ParamVec seed = x0;
      if (start == 0) {
        seed = analytic_init(x0, handedness, target.joints);
      } else if (start > 1) {
        for (int p = 12; p < kParams; ++p) seed(p) += restart_rng.uniform(-0.35, 0.35);
        for (int p = 6; p < 12; ++p) seed(p) += restart_rng.uniform(-0.05, 0.05);
        seed = clamp_to_limits(seed);
      }
      const ParamVec solved = least_squares_phase(seed, handedness, target.joints, 200);
      const double cost = joint_residual(solved, handedness, target.joints).norm();
      if (cost < best_cost) {
        best_cost = cost;
        best = solved;
      }
      if (best_cost < 1e-9) break;
    }
    x = best;
  }

  // Objective: |joint residual| + (1/sigma)|shape - 1|. The data term is an
  // unsquared norm, so an exactly attainable target stays a strict local
  // minimum despite the regularizer. Minimized by a damped Gauss-Newton
  // scheme on the IRLS quadratic model with monotone acceptance.
  auto shape_deviation = [](const ParamVec& p) {
    Eigen::Matrix<double, 6, 1> s = p.segment<6>(6);
    s.array() -= 1.0;
    return s;
  };
  auto objective = [&](const ParamVec& p) {
    return joint_residual(p, handedness, target.joints).norm() +
           shape_deviation(p).norm() / sigma;
  };

  HandFitResult result;
  double current = objective(x);
  result.objective_trace.push_back(current);

  double lambda = 1e-4;
  int rise_streak = 0;
  int stall_streak = 0;
  const int max_iterations = 400;
  constexpr double kFd = 1e-7;

  for (int iter = 0; iter < max_iterations; ++iter) {
    const Eigen::Matrix<double, 63, 1> r = joint_residual(x, handedness, target.joints);
    if (r.norm() < 1e-11) break;  // exact fit; all parameters are pinned

    Eigen::Matrix<double, 63, kParams> jac;
    for (int p = 0; p < kParams; ++p) {
      ParamVec xp = x;
      xp(p) += kFd;
      jac.col(p) = (joint_residual(clamp_to_limits(xp), handedness, target.joints) - r) / kFd;
    }

    const double data_norm = std::max(r.norm(), 1e-12);
    const Eigen::Matrix<double, 6, 1> s = shape_deviation(x);
    const double shape_norm = std::max(s.norm(), 1e-12);
    const double w_data = 1.0 / (2.0 * data_norm);
    const double w_shape = 1.0 / (sigma * 2.0 * shape_norm);

    // Two quadratic models per iteration: the IRLS blend of both norm
    // terms, and a pure data-interpolation Gauss-Newton step that converges
    // quadratically when the target is exactly attainable. Either is
    // accepted only if the true objective decreases.
    const Eigen::Matrix<double, kParams, kParams> jtj = jac.transpose() * jac;
    const ParamVec jtr = jac.transpose() * r;

    Eigen::Matrix<double, kParams, kParams> h_blend = w_data * jtj;
    ParamVec g_blend = w_data * jtr;
    h_blend.block<6, 6>(6, 6) += w_shape * Eigen::Matrix<double, 6, 6>::Identity();
    g_blend.segment<6>(6) += w_shape * s;

    bool accepted = false;
    for (int attempt = 0; attempt < 14 && !accepted; ++attempt) {
      auto damped_solve = [&](const Eigen::Matrix<double, kParams, kParams>& h,
                              const ParamVec& g) {
        Eigen::Matrix<double, kParams, kParams> damped = h;
        for (int d = 0; d < kParams; ++d) {
          damped(d, d) += lambda * std::max(h(d, d), 1e-12);
        }
        return ParamVec(damped.ldlt().solve(-g));
      };

      const ParamVec pure = clamp_to_limits(x + damped_solve(jtj, jtr));
      const ParamVec blend = clamp_to_limits(x + damped_solve(h_blend, g_blend));
      const double trial_pure = objective(pure);
      const double trial_blend = objective(blend);
      const bool pure_wins = trial_pure <= trial_blend;
      const double trial = pure_wins ? trial_pure : trial_blend;
      if (trial < current) {
        const double drop = current - trial;
        x = pure_wins ? pure : blend;
        current = trial;
        result.objective_trace.push_back(current);
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        stall_streak = drop < 1e-12 * std::max(1.0, current) ? stall_streak + 1 : 0;
      } else {
        lambda *= 4.0;
        if (lambda > 1e14) break;
      }
    }
    if (!accepted || stall_streak >= 5) break;

    const size_t n = result.objective_trace.size();
    if (n >= 2 && result.objective_trace[n - 1] > result.objective_trace[n - 2]) {
      if (++rise_streak >= 10) {
        throw Error("fit_hand: objective increased over 10 accepted steps");
      }
    } else {
      rise_streak = 0;
    }
  }

  result.hand = unpack(x, handedness);
  result.fitted = forward_kinematics(result.hand);
  for (int j = 0; j < 21; ++j) {
    result.joint_errors(j) = (result.fitted.joints[j] - target.joints[j]).norm();
  }
  result.objective = current;
  return result;
}

}  // namespace graspkit
