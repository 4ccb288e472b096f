#pragma once

#include "tsnav/scene.hpp"

#include <cstdint>
#include <string>

namespace tsnav {

enum class DetectorModel { Binary, LinearFalloff };

struct DetectorConfig {
    DetectorModel model = DetectorModel::Binary;
    double maxRange = 0.0;  // <= 0 means the straight-ahead far distance
    double noiseSigma = 0.0;
    bool occlusionCheck = true;
    std::uint64_t seed = 0;

    void validate() const;
    double effectiveMaxRange(const SceneConfig& cfg) const;
};

struct Detection {
    double confidence = 0.0;  // in [0, 1]
};

/// Target inside the pose's view trapezoid and, when occlusionCheck is on,
/// the sight line crosses no unreachable cell.
bool visible(const Pose& pose, const ObjectInstance& target, const Scene& scene,
             bool occlusionCheck = true);

Detection detect(const Pose& pose, const ObjectInstance& target, const Scene& scene,
                 const DetectorConfig& cfg, int stepIndex);

/// Noise-free confidence for the given model; the stage-dividing criterion is
/// evaluated against this value when computing metric denominators.
double noiselessConfidence(const Pose& pose, const ObjectInstance& target, const Scene& scene,
                           const DetectorConfig& cfg);

/// All cells of the grid-line supercover of the segment [a, b].
std::vector<Cell> supercoverCells(Point2 a, Point2 b, double gridStep);

std::string detectorModelName(DetectorModel m);
DetectorModel detectorModelFromName(const std::string& name);

}  // namespace tsnav
