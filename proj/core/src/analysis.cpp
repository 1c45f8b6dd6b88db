#include "graspkit/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace graspkit {

Intent intent_from_name(const std::string& name) {
  if (name == "use") return Intent::kUse;
  if (name == "handoff" || name == "hand-off" || name == "hand_off") return Intent::kHandoff;
  throw Error("unknown intent: " + name);
}

std::string intent_name(Intent intent) {
  return intent == Intent::kUse ? "use" : "handoff";
}

namespace {

std::string canonical_object(const std::string& id) {
  std::string out;
  for (char c : id) {
    out += (c == ' ' || c == '-') ? '_' : static_cast<char>(std::tolower(c));
  }
  return out;
}

// Association of a single contacted point against one hand.
struct PartHit {
  double distance = std::numeric_limits<double>::infinity();
  int part = -1;
};

PartHit nearest_phalange(const Vec3& p, const HandSkeleton& hand, const HandProxy& proxy) {
  PartHit best;
  const auto& segments = HandSkeleton::phalanges();
  for (int s = 0; s < HandSkeleton::kPhalangeCount; ++s) {
    const double d =
        point_segment_distance(p, hand.joints[segments[s][0]], hand.joints[segments[s][1]])
            .distance;
    if (d < best.distance) {
      best.distance = d;
      best.part = s;
    }
  }
  for (const auto& tri : proxy.palm) {
    const double d = (p - closest_point_on_triangle(p, tri[0], tri[1], tri[2])).norm();
    if (d < best.distance) {
      best.distance = d;
      best.part = HandProxy::kPalmPart;
    }
  }
  return best;
}

}  // namespace

PartAssociation associate(const ContactMap& contact, const TriMesh& mesh,
                          const std::vector<HandSkeleton>& hands, AssociationLevel level,
                          const HandProxyConfig& proxy_config) {
  if (contact.size() != static_cast<int>(mesh.vertices().size())) {
    throw Error("associate: contact map does not match the mesh");
  }
  if (hands.empty()) throw Error("associate: at least one hand required");

  std::vector<HandProxy> proxies;
  std::vector<ProxySamples> samples;
  std::vector<int> sample_base;  // global id offset per hand
  int total_samples = 0;
  for (const HandSkeleton& hand : hands) {
    proxies.push_back(make_hand_proxy(hand, proxy_config));
    if (level == AssociationLevel::kPoint) {
      samples.push_back(sample_proxy_surface(proxies.back()));
      sample_base.push_back(total_samples);
      total_samples += static_cast<int>(samples.back().points.size());
    }
  }

  PartAssociation out;
  out.level = level;
  out.part_count = level == AssociationLevel::kPhalange
                       ? HandSkeleton::kPhalangeCount + 1
                       : total_samples;

  const std::vector<uint8_t> mask = binarize(contact);
  for (int v = 0; v < contact.size(); ++v) {
    if (!mask[v]) continue;
    const Vec3& p = mesh.vertices()[v];
    double best_d = std::numeric_limits<double>::infinity();
    int best_part = -1;
    for (size_t h = 0; h < hands.size(); ++h) {
      if (level == AssociationLevel::kPhalange) {
        const PartHit hit = nearest_phalange(p, hands[h], proxies[h]);
        // ties break toward the lowest part id, then the first hand
        if (hit.distance < best_d ||
            (hit.distance == best_d && hit.part < best_part)) {
          best_d = hit.distance;
          best_part = hit.part;
        }
      } else {
        const ProxySamples& s = samples[h];
        for (size_t k = 0; k < s.points.size(); ++k) {
          const double d = (p - s.points[k]).norm();
          if (d < best_d) {
            best_d = d;
            best_part = sample_base[h] + static_cast<int>(k);
          }
        }
      }
    }
    out.vertex.push_back(v);
    out.part.push_back(best_part);
  }
  return out;
}

std::vector<double> hand_contact_probability(const GraspSet& grasps, AssociationLevel level,
                                             std::optional<Intent> intent) {
  int used = 0;
  std::vector<double> counts;
  for (const GraspRecord& grasp : grasps) {
    if (intent && grasp.intent != *intent) continue;
    const PartAssociation assoc = associate(grasp.contact, *grasp.mesh, grasp.hands, level);
    if (counts.empty()) counts.assign(assoc.part_count, 0.0);
    if (assoc.part_count != static_cast<int>(counts.size())) {
      throw Error("hand_contact_probability: inconsistent part counts across grasps");
    }
    std::set<int> touched(assoc.part.begin(), assoc.part.end());
    for (int part : touched) counts[part] += 1.0;
    ++used;
  }
  if (used == 0) throw Error("hand_contact_probability: empty grasp set");
  for (double& c : counts) c /= used;
  return counts;
}

std::vector<double> active_areas(const GraspSet& grasps, int part_id, AssociationLevel level) {
  if (grasps.empty()) throw Error("active_areas: empty grasp set");
  const TriMesh* mesh = grasps.front().mesh.get();
  for (const GraspRecord& g : grasps) {
    if (g.mesh.get() != mesh &&
        (g.mesh->vertices().size() != mesh->vertices().size() ||
         g.mesh->faces() != mesh->faces())) {
      throw Error("active_areas: grasps do not share an object mesh");
    }
  }
  std::vector<double> prob(mesh->vertices().size(), 0.0);
  for (const GraspRecord& g : grasps) {
    const PartAssociation assoc = associate(g.contact, *g.mesh, g.hands, level);
    for (size_t i = 0; i < assoc.vertex.size(); ++i) {
      if (assoc.part[i] == part_id) prob[assoc.vertex[i]] += 1.0;
    }
  }
  for (double& p : prob) p /= grasps.size();
  return prob;
}

namespace {

std::vector<double> vertex_areas(const TriMesh& mesh) {
  // barycentric convention: one third of each incident face area
  std::vector<double> areas(mesh.vertices().size(), 0.0);
  for (int f = 0; f < static_cast<int>(mesh.faces().size()); ++f) {
    const double third = mesh.face_area(f) / 3.0;
    for (int idx : mesh.faces()[f]) areas[idx] += third;
  }
  return areas;
}

}  // namespace

double contact_area_cm2(const GraspRecord& grasp, ContactRegion region) {
  const PartAssociation assoc =
      associate(grasp.contact, *grasp.mesh, grasp.hands, AssociationLevel::kPhalange);
  const std::vector<double> areas = vertex_areas(*grasp.mesh);
  const auto& tip_parts = HandSkeleton::fingertip_phalanges();
  double total = 0;
  for (size_t i = 0; i < assoc.vertex.size(); ++i) {
    const bool is_tip =
        std::find(tip_parts.begin(), tip_parts.end(), assoc.part[i]) != tip_parts.end();
    if (region == ContactRegion::kWholeHand || is_tip) total += areas[assoc.vertex[i]];
  }
  return total * 1e4;  // m^2 -> cm^2
}

Eigen::Matrix<double, 20, 1> phalange_area_vector(const GraspRecord& grasp) {
  const PartAssociation assoc =
      associate(grasp.contact, *grasp.mesh, grasp.hands, AssociationLevel::kPhalange);
  Eigen::Matrix<double, 20, 1> out = Eigen::Matrix<double, 20, 1>::Zero();

  // vertices per phalange
  std::vector<std::vector<uint8_t>> part_vertices(
      20, std::vector<uint8_t>(grasp.mesh->vertices().size(), 0));
  for (size_t i = 0; i < assoc.vertex.size(); ++i) {
    if (assoc.part[i] < 20) part_vertices[assoc.part[i]][assoc.vertex[i]] = 1;
  }
  for (int part = 0; part < 20; ++part) {
    double area = 0;
    for (int f = 0; f < static_cast<int>(grasp.mesh->faces().size()); ++f) {
      const Face& face = grasp.mesh->faces()[f];
      if (part_vertices[part][face[0]] || part_vertices[part][face[1]] ||
          part_vertices[part][face[2]]) {
        area += grasp.mesh->face_area(f);
      }
    }
    out(part) = area;
  }
  return out;
}

double contact_distance(const GraspRecord& a, const GraspRecord& b) {
  return (phalange_area_vector(a) - phalange_area_vector(b)).norm();
}

HandSkeleton normalize_and_align(const HandSkeleton& skeleton,
                                 std::optional<Vec3> symmetry_axis,
                                 const HandSkeleton* reference) {
  const Vec3& wrist = skeleton.joints[HandSkeleton::kWrist];
  const Vec3& knuckle = skeleton.joints[HandSkeleton::knuckle(2)];
  const double span = (knuckle - wrist).norm();
  if (span < 1e-9) throw Error("normalize_and_align: wrist and middle knuckle coincide");

  HandSkeleton out = skeleton;
  const double scale = kReferenceHandSpan / span;
  for (Vec3& j : out.joints) j = wrist + scale * (j - wrist);

  if (symmetry_axis && reference) {
    const Vec3 axis = symmetry_axis->normalized();
    // Closed-form single-axis alignment of the six palm joints: maximize
    // sum(cos t * p.q + sin t * (axis x p).q) over the in-plane components.
    double c = 0, s = 0;
    for (int id : HandSkeleton::palm_joints()) {
      const Vec3 p = out.joints[id] - axis * axis.dot(out.joints[id]);
      const Vec3 q = reference->joints[id] - axis * axis.dot(reference->joints[id]);
      c += p.dot(q);
      s += axis.cross(p).dot(q);
    }
    const double angle = std::atan2(s, c);
    const Mat3 rot = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    for (Vec3& j : out.joints) j = rot * j;
  }
  return out;
}

JointSpread joint_stddev(std::span<const HandSkeleton> hands) {
  if (hands.size() < 2) throw Error("joint_stddev: needs at least two grasps");
  JointSpread out;
  for (int j = 0; j < 21; ++j) {
    Vec3 mean = Vec3::Zero();
    for (const HandSkeleton& hand : hands) mean += hand.joints[j];
    mean /= static_cast<double>(hands.size());
    double ms = 0;
    for (const HandSkeleton& hand : hands) ms += (hand.joints[j] - mean).squaredNorm();
    out.per_joint[j] = std::sqrt(ms / hands.size());
    out.mean += out.per_joint[j];
  }
  out.mean /= 21.0;
  return out;
}

Clustering cluster_poses(std::span<const HandSkeleton> hands, double threshold) {
  const int n = static_cast<int>(hands.size());
  if (n < 2) throw Error("cluster_poses: needs at least two grasps");

  std::vector<Eigen::VectorXd> flat(n);
  for (int i = 0; i < n; ++i) {
    flat[i].resize(63);
    for (int j = 0; j < 21; ++j) flat[i].segment<3>(3 * j) = hands[i].joints[j];
  }

  std::vector<std::vector<int>> clusters(n);
  for (int i = 0; i < n; ++i) clusters[i] = {i};
  Eigen::MatrixXd dist(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) dist(i, j) = (flat[i] - flat[j]).norm();
  }

  std::vector<int> alive(n);
  std::iota(alive.begin(), alive.end(), 0);

  auto linkage = [&](int a, int b) {
    double total = 0;
    for (int i : clusters[a]) {
      for (int j : clusters[b]) total += dist(i, j);
    }
    return total / (clusters[a].size() * clusters[b].size());
  };

  while (alive.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    int ba = -1, bb = -1;
    for (size_t x = 0; x < alive.size(); ++x) {
      for (size_t y = x + 1; y < alive.size(); ++y) {
        const double d = linkage(alive[x], alive[y]);
        // deterministic tie-break on the smallest member indices
        if (d < best - 1e-15) {
          best = d;
          ba = static_cast<int>(x);
          bb = static_cast<int>(y);
        }
      }
    }
    if (best >= threshold) break;
    auto& dst = clusters[alive[ba]];
    auto& src = clusters[alive[bb]];
    dst.insert(dst.end(), src.begin(), src.end());
    std::sort(dst.begin(), dst.end());
    alive.erase(alive.begin() + bb);
  }

  Clustering out;
  out.labels.assign(n, -1);
  // stable labels: clusters ordered by their smallest member
  std::sort(alive.begin(), alive.end(),
            [&](int a, int b) { return clusters[a].front() < clusters[b].front(); });
  int label = 0;
  double intra_total = 0;
  int intra_pairs = 0;
  for (int c : alive) {
    for (int member : clusters[c]) out.labels[member] = label;
    for (size_t x = 0; x < clusters[c].size(); ++x) {
      for (size_t y = x + 1; y < clusters[c].size(); ++y) {
        intra_total += dist(clusters[c][x], clusters[c][y]);
        ++intra_pairs;
      }
    }
    ++label;
  }
  out.mean_intra_distance = intra_pairs > 0 ? intra_total / intra_pairs : 0.0;
  return out;
}

SplitKind split_from_name(const std::string& name) {
  if (name == "object") return SplitKind::kObject;
  if (name == "participant") return SplitKind::kParticipant;
  throw Error("unknown split: " + name + " (expected 'object' or 'participant')");
}

Split split(const GraspSet& grasps, SplitKind kind) {
  static const std::set<std::string> held_objects = {"mug", "pan", "wine_glass"};
  static const std::set<int> held_participants = {5, 15, 25, 35, 45};

  Split out;
  for (int i = 0; i < static_cast<int>(grasps.size()); ++i) {
    const bool test = kind == SplitKind::kObject
                          ? held_objects.count(canonical_object(grasps[i].object_id)) > 0
                          : held_participants.count(grasps[i].participant) > 0;
    (test ? out.test : out.train).push_back(i);
  }
  return out;
}

}  // namespace graspkit
