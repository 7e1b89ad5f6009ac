#pragma once

#include <cstdint>
#include <vector>

#include "egopoint/geometry.hpp"
#include "egopoint/types.hpp"

namespace egopoint {

// One tracked 2D object point: per-frame pixel observations paired with the
// camera-to-world pose of each frame. Frame indices are strictly increasing.
struct PointTrack {
  int point_id = 0;
  std::vector<int> frame_indices;
  std::vector<Pixel> pixels;
  std::vector<RigidTransform> poses;

  std::size_t size() const { return frame_indices.size(); }
  void validate() const;
};

struct AxisBounds {
  double lo = 0.0, hi = 0.0;
};

struct Box3 {
  AxisBounds x{-2.0, 2.0};
  AxisBounds y{-2.0, 2.0};
  AxisBounds z{0.05, 2.0};

  bool contains(const Vec3& p) const {
    return p.x() >= x.lo && p.x() <= x.hi && p.y() >= y.lo && p.y() <= y.hi &&
           p.z() >= z.lo && p.z() <= z.hi;
  }
  Vec3 clamp(const Vec3& p) const {
    return {std::clamp(p.x(), x.lo, x.hi), std::clamp(p.y(), y.lo, y.hi),
            std::clamp(p.z(), z.lo, z.hi)};
  }
};

struct TriangulationConfig {
  double epipolar_threshold_px = 2.0;  // pairwise consistency cutoff
  int min_consistent_views = 3;
  int ransac_iters = 256;
  int ransac_subset_size = 2;
  double inlier_threshold_px = 4.0;  // reprojection support cutoff
  double huber_delta_px = 2.0;
  double depth_penalty = 0.1;  // pixels per meter of depth
  Box3 bounds;
  int max_refine_iters = 100;
  EpipolarResidualMode epipolar_mode = EpipolarResidualMode::kSampson;

  void validate() const;
};

struct TriangulationResult {
  Vec3 point = Vec3::Zero();  // expressed in the frame of the track's first pose
  std::vector<int> inlier_frames;
  double mean_inlier_reproj_error = 0.0;  // pixels
  bool converged = false;
};

// Ordered, concatenated 3D object points (first-frame egocentric frame).
struct ObjectState {
  std::vector<Vec3> points;

  std::size_t size() const { return points.size(); }
  VecX flat() const;
  static ObjectState from_flat(const VecX& v);
};

struct ObjectTriangulation {
  ObjectState state;  // ordered by point_id
  std::vector<TriangulationResult> per_point;
  double mean_reproj_error = 0.0;  // demo-level mean of per-point inlier means
};

struct DepthAffineFit {
  double scale = 1.0;
  double shift = 0.0;
  double rms = 0.0;
};

// Huber loss on a scalar residual: r^2/2 inside delta, delta*(|r| - delta/2) outside.
double huber(double delta, double r);
// IRLS weight rho'(r)/r.
double huber_weight(double delta, double r);

// Frames (by frame index) that satisfy the pairwise epipolar constraint with
// at least cfg.min_consistent_views other frames. Pairs with a degenerate
// baseline are skipped.
std::vector<int> filter_epipolar(const PointTrack& track, const CameraIntrinsics& k,
                                 const TriangulationConfig& cfg);

// Best DLT candidate over random subsets of the inlier frames, scored by
// reprojection support within inlier_threshold_px. Deterministic given seed.
// The result is expressed in the frame of the track's first pose.
Vec3 ransac_triangulate(const PointTrack& track, const std::vector<int>& inlier_frames,
                        const CameraIntrinsics& k, const TriangulationConfig& cfg,
                        std::uint64_t seed);

// Damped Gauss-Newton / IRLS minimization of
//   sum_i huber(||u_i - P(T_i^-1 q)||) + depth_penalty * q_z
// over the bounding box, starting from q0 (which must lie inside the box).
TriangulationResult refine_huber_depth(const Vec3& q0, const PointTrack& track,
                                       const std::vector<int>& inlier_frames,
                                       const CameraIntrinsics& k,
                                       const TriangulationConfig& cfg);

// Full per-point pipeline (epipolar filter -> RANSAC -> refinement) applied to
// every track, ordered by point_id.
ObjectTriangulation triangulate_object(const std::vector<PointTrack>& tracks,
                                       const CameraIntrinsics& k,
                                       const TriangulationConfig& cfg, std::uint64_t seed);

// Closed-form least squares of scale*estimated + shift ~= reference.
DepthAffineFit calibrate_depth_affine(const std::vector<double>& estimated,
                                      const std::vector<double>& reference);

}  // namespace egopoint
