#pragma once

#include "tsnav/action.hpp"
#include "tsnav/geometry.hpp"
#include "tsnav/perception.hpp"
#include "tsnav/posegraph.hpp"
#include "tsnav/scene.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

namespace tsnav {

struct RewardConfig {
    double Ke = 0.1;                 // per m^2 of newly searched area
    double Kd = 0.15;                // per unit of distance-field reduction
    double collisionPenalty = -0.1;  // repeat collision at same (cell, yaw)
    double slackPenalty = -0.01;     // every step
    double finalReward = 5.0;        // success on Done
    double Ctarget = 0.7;            // stage-dividing confidence threshold

    void validate() const {
        if (!(Ke >= 0 && Kd >= 0)) throw std::runtime_error("validation error: Ke, Kd >= 0");
        if (!(Ctarget > 0 && Ctarget < 1))
            throw std::runtime_error("validation error: 0 < Ctarget < 1");
    }
};

enum class Stage : std::uint8_t { Searching, Pathfinding };
enum class Outcome : std::uint8_t { Running, Success, FailDone, FailTimeout };

std::string stageName(Stage s);
std::string outcomeName(Outcome o);

struct RewardBreakdown {
    double explore = 0;
    double distance = 0;
    double collision = 0;
    double slack = 0;
    double final_ = 0;

    double total() const { return explore + distance + collision + slack + final_; }
};

struct StepRecord {
    Action action = Action::Done;
    RewardBreakdown reward;
    double confidence = 0;
    Stage stage = Stage::Searching;  // stage label the step was rewarded under
    Pose poseBefore;
    Pose poseAfter;
    double areaGain = 0;
};

struct EpisodeState {
    Pose pose;
    Stage stage = Stage::Searching;
    Region searchedRegion;
    std::unordered_set<std::int64_t> collisionMemory;  // (cellIndex, yaw) keys
    int stepCount = 0;
    std::vector<StepRecord> trajectory;
    bool done = false;
    Outcome outcome = Outcome::Running;

    Pose startPose;
    std::optional<int> divideStep;  // step index of the stage transition
    Pose dividePose;
    std::unordered_set<std::int32_t> viewedStates;   // poses whose trapezoid is in RG
    std::unordered_set<std::int32_t> visitedCells;   // cell indices entered so far
};

/// Steps episodes against one (scene, target) pair. All referenced inputs are
/// shared immutable; EpisodeState is owned by the caller.
class EpisodeEngine {
  public:
    EpisodeEngine(const Scene& scene, const ObjectInstance& target, const PoseGraph& graph,
                  const std::vector<int>& terminals, const DistanceField* dfield,
                  RewardConfig reward, DetectorConfig detector);

    EpisodeState reset(const Pose& startPose) const;
    EpisodeState reset(std::uint64_t seed) const;

    RewardBreakdown step(EpisodeState& state, Action action) const;

    const Scene& scene() const { return *scene_; }
    const ObjectInstance& target() const { return *target_; }
    const PoseGraph& graph() const { return *graph_; }
    const DistanceField* distanceFieldPtr() const { return dfield_; }
    const RewardConfig& rewardConfig() const { return reward_; }
    const DetectorConfig& detectorConfig() const { return detector_; }
    bool isTerminal(const Pose& pose) const;
    std::int32_t distTo(const Pose& pose) const;  // kUnreachable when no field

  private:
    EpisodeState makeInitial(const Pose& startPose) const;

    const Scene* scene_;
    const ObjectInstance* target_;
    const PoseGraph* graph_;
    const std::vector<int>* terminals_;
    std::unordered_set<int> terminalSet_;
    const DistanceField* dfield_;
    RewardConfig reward_;
    DetectorConfig detector_;
};

using Policy = std::function<Action(const EpisodeEngine&, const EpisodeState&, std::mt19937_64&)>;

struct EpisodeResult {
    EpisodeState finalState;
    double totalReward = 0;
};

EpisodeResult runEpisode(const EpisodeEngine& engine, const Policy& policy, std::uint64_t seed);

/// One JSON object per step plus a terminal line (outcome, path length, divide step).
std::string trajectoryToJsonl(const EpisodeState& state, const std::string& episodeId,
                              const std::string& sceneId, const std::string& targetCategory,
                              double gridStep);

}  // namespace tsnav
