#pragma once

#include <stdexcept>
#include <string>

namespace egopoint {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// geometry
struct NonPositiveDepth : Error {
  explicit NonPositiveDepth(const std::string& what = "point has non-positive depth")
      : Error(what) {}
};
struct DegenerateBaseline : Error {
  explicit DegenerateBaseline(const std::string& what = "relative translation is zero, epipolar geometry undefined")
      : Error(what) {}
};

// triangulation
struct TooFewFrames : Error {
  explicit TooFewFrames(const std::string& what = "track has fewer than 2 observations")
      : Error(what) {}
};
struct InsufficientInliers : Error {
  explicit InsufficientInliers(const std::string& what = "not enough inlier frames for RANSAC subset")
      : Error(what) {}
};
struct NoValidCandidate : Error {
  explicit NoValidCandidate(const std::string& what = "no RANSAC candidate with at least 2 supporting frames")
      : Error(what) {}
};
struct DivergedOutsideBounds : Error {
  explicit DivergedOutsideBounds(const std::string& what = "refinement kept hitting the bounding box, geometry is degenerate")
      : Error(what) {}
};
struct DegenerateFit : Error {
  explicit DegenerateFit(const std::string& what = "estimated depths have no variance, affine fit undefined")
      : Error(what) {}
};

// hand
struct DegenerateHand : Error {
  explicit DegenerateHand(const std::string& what = "palm keypoints are collinear")
      : Error(what) {}
};

// dataset / policy
struct EmptyDemo : Error {
  explicit EmptyDemo(const std::string& what = "demonstration has no steps") : Error(what) {}
};
struct EmptyCorpus : Error {
  explicit EmptyCorpus(const std::string& what = "corpus has no demonstrations") : Error(what) {}
};
struct FormatError : Error {
  explicit FormatError(const std::string& what) : Error(what) {}
};
struct VersionError : Error {
  explicit VersionError(const std::string& what) : Error(what) {}
};

// simulator
struct UnreachableScene : Error {
  explicit UnreachableScene(const std::string& what = "goal lies outside the workspace")
      : Error(what) {}
};

}  // namespace egopoint
