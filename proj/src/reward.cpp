#include "tsnav/reward.hpp"

#include <json.hpp>

#include <cassert>
#include <cmath>
#include <sstream>

namespace tsnav {

std::string stageName(Stage s) { return s == Stage::Searching ? "Searching" : "Pathfinding"; }

std::string outcomeName(Outcome o) {
    switch (o) {
        case Outcome::Running: return "Running";
        case Outcome::Success: return "Success";
        case Outcome::FailDone: return "FailDone";
        case Outcome::FailTimeout: return "FailTimeout";
    }
    return "?";
}

EpisodeEngine::EpisodeEngine(const Scene& scene, const ObjectInstance& target,
                             const PoseGraph& graph, const std::vector<int>& terminals,
                             const DistanceField* dfield, RewardConfig reward,
                             DetectorConfig detector)
    : scene_(&scene),
      target_(&target),
      graph_(&graph),
      terminals_(&terminals),
      terminalSet_(terminals.begin(), terminals.end()),
      dfield_(dfield),
      reward_(reward),
      detector_(detector) {
    reward_.validate();
    detector_.validate();
    if (terminals.empty())
        throw std::runtime_error("target unreachable: empty success-terminal set for '" +
                                 target.category + "'");
}

bool EpisodeEngine::isTerminal(const Pose& pose) const {
    const int s = graph_->stateIndex(pose);
    return s >= 0 && terminalSet_.count(s) > 0;
}

std::int32_t EpisodeEngine::distTo(const Pose& pose) const {
    if (!dfield_) return kUnreachable;
    const int s = graph_->stateIndex(pose);
    return s < 0 ? kUnreachable : dfield_->at(s);
}

EpisodeState EpisodeEngine::makeInitial(const Pose& startPose) const {
    if (graph_->stateIndex(startPose) < 0)
        throw std::runtime_error("reset: invalid start pose");
    EpisodeState st;
    st.pose = startPose;
    st.startPose = startPose;
    st.stage = Stage::Searching;
    st.visitedCells.insert(scene_->cellIndex(startPose.cell));
    // step-0 observation may already cross the threshold
    const double conf = detect(startPose, *target_, *scene_, detector_, 0).confidence;
    if (conf > reward_.Ctarget) {
        st.stage = Stage::Pathfinding;
        st.divideStep = 0;
        st.dividePose = startPose;
    }
    return st;
}

EpisodeState EpisodeEngine::reset(const Pose& startPose) const { return makeInitial(startPose); }

EpisodeState EpisodeEngine::reset(std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    const auto& cells = scene_->reachableCells();
    std::uniform_int_distribution<int> cellPick(0, int(cells.size()) - 1);
    std::uniform_int_distribution<int> yawPick(0, scene_->config.yawCount() - 1);
    std::uniform_int_distribution<int> pitchPick(0, int(scene_->config.pitchLevels.size()) - 1);
    Pose p{cells[cellPick(rng)], yawPick(rng) * scene_->config.rotStep,
           scene_->config.pitchLevels[pitchPick(rng)]};
    return makeInitial(p);
}

RewardBreakdown EpisodeEngine::step(EpisodeState& state, Action action) const {
    if (state.done) throw std::logic_error("step: episode already finished");

    const Pose before = state.pose;
    const Stage stageLabel = state.stage;
    StepRecord rec;
    rec.action = action;
    rec.stage = stageLabel;
    rec.poseBefore = before;
    state.stepCount += 1;

    RewardBreakdown r;
    r.slack = reward_.slackPenalty;

    if (action == Action::Done) {
        state.done = true;
        if (isTerminal(before)) {
            r.final_ = reward_.finalReward;
            state.outcome = Outcome::Success;
        } else {
            state.outcome = Outcome::FailDone;
        }
        rec.poseAfter = before;
        rec.confidence = detect(before, *target_, *scene_, detector_, state.stepCount).confidence;
        rec.reward = r;
        state.trajectory.push_back(rec);
        return r;
    }

    // motion
    Pose after = before;
    const int stateIdx = graph_->stateIndex(before);
    const int succ = graph_->successor(stateIdx, action);
    if (succ >= 0) {
        after = graph_->pose(succ);
    } else if (action == Action::MoveAhead) {
        // blocked: pose unchanged; penalty only on repeat at same (cell, yaw)
        const std::int64_t key =
            (std::int64_t(scene_->cellIndex(before.cell)) << 16) | std::uint16_t(before.yawDeg);
        if (state.collisionMemory.count(key)) r.collision = reward_.collisionPenalty;
        state.collisionMemory.insert(key);
    }
    // Look at a pitch bound: pose unchanged, slack only

    state.pose = after;
    state.visitedCells.insert(scene_->cellIndex(after.cell));
    rec.poseAfter = after;

    if (stageLabel == Stage::Searching) {
        const int afterIdx = graph_->stateIndex(after);
        if (!state.viewedStates.count(afterIdx)) {
            const auto [world, heading] = poseToWorld(after, scene_->config);
            const NearFar& nf = scene_->config.nearFarFor(after.pitchDeg);
            const Polygon trap = trapezoid(
                {world, heading, nf.nearDist, nf.farDist, scene_->config.fovHalfAngle});
            const double prevArea = state.searchedRegion.area();
            state.searchedRegion = intersectOf(unionOf(state.searchedRegion, Region(trap)),
                                               Region(scene_->roomBounds));
            rec.areaGain = state.searchedRegion.area() - prevArea;
            r.explore = reward_.Ke * rec.areaGain;
            state.viewedStates.insert(afterIdx);
        }
    } else if (dfield_) {
        const std::int32_t dBefore = distTo(before), dAfter = distTo(after);
        assert(dBefore != kUnreachable && dAfter != kUnreachable);
        r.distance = reward_.Kd * double(dBefore - dAfter);
    }

    // post-action observation drives the irreversible stage transition
    rec.confidence = detect(after, *target_, *scene_, detector_, state.stepCount).confidence;
    if (state.stage == Stage::Searching && rec.confidence > reward_.Ctarget) {
        state.stage = Stage::Pathfinding;
        state.divideStep = state.stepCount;
        state.dividePose = after;
    }

    if (state.stepCount >= scene_->config.maxEpisodeLength) {
        state.done = true;
        state.outcome = Outcome::FailTimeout;
    }

    rec.reward = r;
    state.trajectory.push_back(rec);
    return r;
}

EpisodeResult runEpisode(const EpisodeEngine& engine, const Policy& policy, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x5DEECE66DULL);
    EpisodeResult res;
    res.finalState = engine.reset(seed);
    while (!res.finalState.done) {
        const Action a = policy(engine, res.finalState, rng);
        res.totalReward += engine.step(res.finalState, a).total();
    }
    return res;
}

std::string trajectoryToJsonl(const EpisodeState& state, const std::string& episodeId,
                              const std::string& sceneId, const std::string& targetCategory,
                              double gridStep) {
    using json = nlohmann::ordered_json;
    std::ostringstream out;
    int step = 0;
    double meters = 0;
    for (const StepRecord& rec : state.trajectory) {
        ++step;
        if (rec.action == Action::MoveAhead && !(rec.poseAfter == rec.poseBefore))
            meters += gridStep;
        json j;
        j["episodeId"] = episodeId;
        j["sceneId"] = sceneId;
        j["target"] = targetCategory;
        j["step"] = step;
        j["action"] = actionName(rec.action);
        j["stage"] = stageName(rec.stage);
        j["confidence"] = rec.confidence;
        j["pose"] = {{"i", rec.poseAfter.cell.i},
                     {"j", rec.poseAfter.cell.j},
                     {"yaw", rec.poseAfter.yawDeg},
                     {"pitch", rec.poseAfter.pitchDeg}};
        j["reward"] = {{"explore", rec.reward.explore},
                       {"distance", rec.reward.distance},
                       {"collision", rec.reward.collision},
                       {"slack", rec.reward.slack},
                       {"final", rec.reward.final_}};
        j["areaGain"] = rec.areaGain;
        out << j.dump() << "\n";
    }
    json tail;
    tail["episodeId"] = episodeId;
    tail["outcome"] = outcomeName(state.outcome);
    tail["pathLengthMeters"] = meters;
    tail["divideStep"] = state.divideStep ? json(*state.divideStep) : json(nullptr);
    tail["start"] = {{"i", state.startPose.cell.i},
                     {"j", state.startPose.cell.j},
                     {"yaw", state.startPose.yawDeg},
                     {"pitch", state.startPose.pitchDeg}};
    out << tail.dump() << "\n";
    return out.str();
}

}  // namespace tsnav
