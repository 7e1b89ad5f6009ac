#include "egopoint/triangulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Dense>

namespace egopoint {

void PointTrack::validate() const {
  if (pixels.size() != frame_indices.size() || poses.size() != frame_indices.size()) {
    throw Error("PointTrack: observations and poses must have equal length");
  }
  if (frame_indices.size() < 2) {
    throw TooFewFrames();
  }
  for (std::size_t i = 1; i < frame_indices.size(); ++i) {
    if (frame_indices[i] <= frame_indices[i - 1]) {
      throw Error("PointTrack: frame indices must be strictly increasing");
    }
  }
}

void TriangulationConfig::validate() const {
  if (!(epipolar_threshold_px > 0 && inlier_threshold_px > 0 && huber_delta_px > 0 &&
        depth_penalty >= 0)) {
    throw Error("TriangulationConfig: thresholds must be positive");
  }
  if (ransac_subset_size < 2 || min_consistent_views < 1) {
    throw Error("TriangulationConfig: ransac_subset_size >= 2 and min_consistent_views >= 1");
  }
  if (!(bounds.z.lo > 0)) {
    throw Error("TriangulationConfig: bounds must keep the point in front of the reference camera");
  }
}

VecX ObjectState::flat() const {
  VecX v(3 * points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    v.segment<3>(3 * i) = points[i];
  }
  return v;
}

ObjectState ObjectState::from_flat(const VecX& v) {
  ObjectState s;
  s.points.resize(v.size() / 3);
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    s.points[i] = v.segment<3>(3 * i);
  }
  return s;
}

double huber(double delta, double r) {
  const double a = std::abs(r);
  return a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
}

double huber_weight(double delta, double r) {
  const double a = std::abs(r);
  return a <= delta ? 1.0 : delta / a;
}

std::vector<int> filter_epipolar(const PointTrack& track, const CameraIntrinsics& k,
                                 const TriangulationConfig& cfg) {
  track.validate();
  cfg.validate();
  const std::size_t n = track.size();
  std::vector<int> consistent_count(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      Mat3 f;
      try {
        f = fundamental_matrix(k, track.poses[i], track.poses[j]);
      } catch (const DegenerateBaseline&) {
        continue;
      }
      const double r =
          epipolar_residual(f, track.pixels[i], track.pixels[j], cfg.epipolar_mode);
      if (r < cfg.epipolar_threshold_px) {
        ++consistent_count[i];
        ++consistent_count[j];
      }
    }
  }
  std::vector<int> retained;
  for (std::size_t i = 0; i < n; ++i) {
    if (consistent_count[i] >= cfg.min_consistent_views) {
      retained.push_back(track.frame_indices[i]);
    }
  }
  return retained;
}

namespace {

// Positions within the track of the given frame indices.
std::vector<std::size_t> track_positions(const PointTrack& track,
                                         const std::vector<int>& frames) {
  std::vector<std::size_t> pos;
  pos.reserve(frames.size());
  for (int f : frames) {
    auto it = std::lower_bound(track.frame_indices.begin(), track.frame_indices.end(), f);
    if (it == track.frame_indices.end() || *it != f) {
      throw Error("inlier frame not present in track");
    }
    pos.push_back(static_cast<std::size_t>(it - track.frame_indices.begin()));
  }
  return pos;
}

// World-to-camera maps relative to the track's reference (first) pose, so the
// triangulated point lives in the reference camera frame.
std::vector<RigidTransform> reference_relative_maps(const PointTrack& track) {
  const RigidTransform ref = track.poses.front();
  std::vector<RigidTransform> maps;
  maps.reserve(track.size());
  for (const auto& pose : track.poses) {
    maps.push_back(compose(invert(pose), ref));
  }
  return maps;
}

// Reprojection error of q (reference frame) into track position i, or +inf
// when the point falls behind the camera.
double reproj_error(const Vec3& q, const PointTrack& track,
                    const std::vector<RigidTransform>& maps, const CameraIntrinsics& k,
                    std::size_t i) {
  const Vec3 p_cam = transform_point(maps[i], q);
  if (!(p_cam.z() > 1e-9)) {
    return std::numeric_limits<double>::infinity();
  }
  const double inv_z = 1.0 / p_cam.z();
  const Vec2 proj(k.fx * p_cam.x() * inv_z + k.cx, k.fy * p_cam.y() * inv_z + k.cy);
  return (track.pixels[i] - proj).norm();
}

// Homogeneous DLT over an arbitrary subset of track positions.
bool triangulate_dlt(const PointTrack& track, const std::vector<RigidTransform>& maps,
                     const CameraIntrinsics& k, const std::vector<std::size_t>& subset,
                     Vec3* out) {
  MatX design(2 * subset.size(), 4);
  for (std::size_t row = 0; row < subset.size(); ++row) {
    const std::size_t i = subset[row];
    // Projection matrix rows of K * [R | t] for the relative map.
    Eigen::Matrix<double, 3, 4> p;
    p.block<3, 3>(0, 0) = maps[i].rotation;
    p.col(3) = maps[i].translation;
    Mat3 kmat;
    kmat << k.fx, 0, k.cx, 0, k.fy, k.cy, 0, 0, 1;
    p = kmat * p;
    const Vec2& u = track.pixels[i];
    design.row(2 * row) = u.x() * p.row(2) - p.row(0);
    design.row(2 * row + 1) = u.y() * p.row(2) - p.row(1);
  }
  Eigen::JacobiSVD<MatX> svd(design, Eigen::ComputeFullV);
  const Vec4 h = svd.matrixV().col(3);
  if (std::abs(h.w()) < 1e-14) {
    return false;
  }
  *out = h.head<3>() / h.w();
  // Reject points behind any camera of the subset.
  for (std::size_t i : subset) {
    if (!(transform_point(maps[i], *out).z() > 1e-9)) {
      return false;
    }
  }
  return true;
}

}  // namespace

Vec3 ransac_triangulate(const PointTrack& track, const std::vector<int>& inlier_frames,
                        const CameraIntrinsics& k, const TriangulationConfig& cfg,
                        std::uint64_t seed) {
  track.validate();
  cfg.validate();
  const std::size_t subset_size = static_cast<std::size_t>(cfg.ransac_subset_size);
  if (inlier_frames.size() < subset_size) {
    std::ostringstream msg;
    msg << "ransac_triangulate: " << inlier_frames.size() << " inlier frames, need "
        << subset_size;
    throw InsufficientInliers(msg.str());
  }
  const auto positions = track_positions(track, inlier_frames);
  const auto maps = reference_relative_maps(track);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, positions.size() - 1);

  Vec3 best = Vec3::Zero();
  int best_support = 0;
  double best_mean_error = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> subset(subset_size);
  for (int iter = 0; iter < cfg.ransac_iters; ++iter) {
    // Sample distinct positions.
    for (std::size_t s = 0; s < subset_size; ++s) {
      bool fresh = false;
      while (!fresh) {
        subset[s] = positions[pick(rng)];
        fresh = true;
        for (std::size_t t = 0; t < s; ++t) {
          if (subset[t] == subset[s]) fresh = false;
        }
      }
    }
    Vec3 candidate;
    if (!triangulate_dlt(track, maps, k, subset, &candidate)) {
      continue;
    }
    int support = 0;
    double err_sum = 0.0;
    for (std::size_t i : positions) {
      const double e = reproj_error(candidate, track, maps, k, i);
      if (e < cfg.inlier_threshold_px) {
        ++support;
        err_sum += e;
      }
    }
    if (support < 2) {
      continue;
    }
    const double mean_error = err_sum / support;
    if (support > best_support ||
        (support == best_support && mean_error < best_mean_error)) {
      best = candidate;
      best_support = support;
      best_mean_error = mean_error;
    }
  }
  if (best_support < 2) {
    throw NoValidCandidate();
  }
  return best;
}

TriangulationResult refine_huber_depth(const Vec3& q0, const PointTrack& track,
                                       const std::vector<int>& inlier_frames,
                                       const CameraIntrinsics& k,
                                       const TriangulationConfig& cfg) {
  track.validate();
  cfg.validate();
  if (!cfg.bounds.contains(q0)) {
    throw Error("refine_huber_depth: q0 must lie inside the bounds");
  }
  const auto positions = track_positions(track, inlier_frames);
  const auto maps = reference_relative_maps(track);

  const auto objective = [&](const Vec3& q) {
    double total = cfg.depth_penalty * q.z();
    for (std::size_t i : positions) {
      const double e = reproj_error(q, track, maps, k, i);
      total += std::isfinite(e) ? huber(cfg.huber_delta_px, e) : 1e12;
    }
    return total;
  };

  Vec3 q = q0;
  double value = objective(q);
  double damping = 1e-4;
  bool converged = false;
  int projected_iters = 0;
  int iters_run = 0;

  for (int iter = 0; iter < cfg.max_refine_iters; ++iter) {
    ++iters_run;
    Mat3 hessian = Mat3::Zero();
    Vec3 gradient = Vec3::Zero();
    gradient.z() += cfg.depth_penalty;
    for (std::size_t i : positions) {
      const Vec3 p_cam = transform_point(maps[i], q);
      if (!(p_cam.z() > 1e-9)) {
        continue;  // behind the camera: no usable local model
      }
      const double inv_z = 1.0 / p_cam.z();
      const Vec2 proj(k.fx * p_cam.x() * inv_z + k.cx, k.fy * p_cam.y() * inv_z + k.cy);
      const Vec2 e = track.pixels[i] - proj;
      Eigen::Matrix<double, 2, 3> dproj_dp;
      dproj_dp << k.fx * inv_z, 0, -k.fx * p_cam.x() * inv_z * inv_z,
                  0, k.fy * inv_z, -k.fy * p_cam.y() * inv_z * inv_z;
      const Eigen::Matrix<double, 2, 3> jac = dproj_dp * maps[i].rotation;
      const double w = huber_weight(cfg.huber_delta_px, e.norm());
      gradient -= w * jac.transpose() * e;
      hessian += w * jac.transpose() * jac;
    }

    // Projected gradient for the convergence test: drop components that push
    // out of the box at an active bound.
    Vec3 pg = gradient;
    const auto active = [](double v, const AxisBounds& b, double g) {
      return (v <= b.lo && g > 0) || (v >= b.hi && g < 0);
    };
    if (active(q.x(), cfg.bounds.x, -gradient.x())) pg.x() = 0;
    if (active(q.y(), cfg.bounds.y, -gradient.y())) pg.y() = 0;
    if (active(q.z(), cfg.bounds.z, -gradient.z())) pg.z() = 0;
    if (pg.norm() < 1e-8) {
      converged = true;
      break;
    }

    bool accepted = false;
    for (int attempt = 0; attempt < 12; ++attempt) {
      const Mat3 damped = hessian + damping * Mat3::Identity();
      const Vec3 step = damped.ldlt().solve(-gradient);
      const Vec3 raw = q + step;
      const Vec3 next = cfg.bounds.clamp(raw);
      const double next_value = objective(next);
      if (next_value <= value) {
        if ((next - raw).norm() > 0) {
          ++projected_iters;
        }
        const double step_norm = (next - q).norm();
        q = next;
        value = next_value;
        damping = std::max(damping * 0.3, 1e-12);
        accepted = true;
        if (step_norm < 1e-8) {
          converged = true;
        }
        break;
      }
      damping *= 10.0;
    }
    if (!accepted || converged) {
      converged = converged || !accepted;  // no descent direction left
      break;
    }
  }

  if (iters_run > 0 && projected_iters * 2 > iters_run) {
    throw DivergedOutsideBounds();
  }

  TriangulationResult result;
  result.point = q;
  result.inlier_frames = inlier_frames;
  result.converged = converged;
  double err_sum = 0.0;
  for (std::size_t i : positions) {
    const double e = reproj_error(q, track, maps, k, i);
    err_sum += std::isfinite(e) ? e : 1e6;
  }
  result.mean_inlier_reproj_error = positions.empty() ? 0.0 : err_sum / positions.size();
  return result;
}

ObjectTriangulation triangulate_object(const std::vector<PointTrack>& tracks,
                                       const CameraIntrinsics& k,
                                       const TriangulationConfig& cfg, std::uint64_t seed) {
  if (tracks.empty()) {
    throw Error("triangulate_object: no tracks");
  }
  std::vector<const PointTrack*> ordered;
  ordered.reserve(tracks.size());
  for (const auto& t : tracks) ordered.push_back(&t);
  std::sort(ordered.begin(), ordered.end(),
            [](const PointTrack* a, const PointTrack* b) { return a->point_id < b->point_id; });
  for (std::size_t i = 1; i < ordered.size(); ++i) {
    if (ordered[i]->point_id == ordered[i - 1]->point_id) {
      throw Error("triangulate_object: duplicate point_id");
    }
  }

  ObjectTriangulation out;
  std::string failures;
  double err_sum = 0.0;
  for (const PointTrack* track : ordered) {
    try {
      const auto inliers = filter_epipolar(*track, k, cfg);
      // Point-specific stream so per-point results do not depend on ordering.
      const std::uint64_t point_seed =
          seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(track->point_id + 1));
      const Vec3 q0 = cfg.bounds.clamp(ransac_triangulate(*track, inliers, k, cfg, point_seed));
      TriangulationResult r = refine_huber_depth(q0, *track, inliers, k, cfg);
      err_sum += r.mean_inlier_reproj_error;
      out.state.points.push_back(r.point);
      out.per_point.push_back(std::move(r));
    } catch (const Error& e) {
      failures += (failures.empty() ? "" : "; ") + std::to_string(track->point_id) + ": " +
                  e.what();
    }
  }
  if (!failures.empty()) {
    throw Error("triangulate_object: point_id failures [" + failures + "]");
  }
  out.mean_reproj_error = err_sum / out.per_point.size();
  return out;
}

DepthAffineFit calibrate_depth_affine(const std::vector<double>& estimated,
                                      const std::vector<double>& reference) {
  if (estimated.size() != reference.size() || estimated.size() < 2) {
    throw Error("calibrate_depth_affine: need two equal-length lists of depths");
  }
  const double n = static_cast<double>(estimated.size());
  const double mean_d = std::accumulate(estimated.begin(), estimated.end(), 0.0) / n;
  const double mean_z = std::accumulate(reference.begin(), reference.end(), 0.0) / n;
  double var_d = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < estimated.size(); ++i) {
    var_d += (estimated[i] - mean_d) * (estimated[i] - mean_d);
    cov += (estimated[i] - mean_d) * (reference[i] - mean_z);
  }
  var_d /= n;
  cov /= n;
  if (var_d < 1e-12) {
    throw DegenerateFit();
  }
  DepthAffineFit fit;
  fit.scale = cov / var_d;
  fit.shift = mean_z - fit.scale * mean_d;
  double ss = 0.0;
  for (std::size_t i = 0; i < estimated.size(); ++i) {
    const double r = fit.scale * estimated[i] + fit.shift - reference[i];
    ss += r * r;
  }
  fit.rms = std::sqrt(ss / n);
  return fit;
}

}  // namespace egopoint
