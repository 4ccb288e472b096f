#pragma once

#include "tsnav/metrics.hpp"
#include "tsnav/reward.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace tsnav {

constexpr int kBearingBuckets = 8;
constexpr int kBearingNone = kBearingBuckets;

/// Pose-free view of the episode state the policy conditions on.
struct AgentObservation {
    Pose pose;
    Stage stage = Stage::Searching;
    bool targetVisible = false;
    double confidence = 0;
    int bearingBucket = kBearingNone;        // relative direction, NONE unless visible
    std::array<bool, 4> localNovelty{};      // ahead/right/behind/left: reachable and unvisited
    int previousAction = kActionCount;       // kActionCount = none yet
};

AgentObservation observe(const EpisodeEngine& engine, const EpisodeState& state);

int featureIndex(const AgentObservation& obs);
int featureCount();

struct Hyper {
    double learningRate = 1e-4;
    double gamma = 0.99;
    double entropyCoefficient = 0.01;
    double valueLearningRate = 0.0;  // <= 0: same as learningRate
};

struct PolicyParams {
    std::vector<double> prefs;   // featureCount * kActionCount
    std::vector<double> values;  // featureCount
    Hyper hyper;

    static PolicyParams zeros(Hyper h);
};

std::array<double, kActionCount> policyDistribution(const PolicyParams& params, int feature);

Action act(const PolicyParams& params, const AgentObservation& obs, std::mt19937_64& rng);
Action actGreedy(const PolicyParams& params, const AgentObservation& obs);

/// d/dpref log pi(a | feature) over the 6 preferences of that feature block.
std::array<double, kActionCount> gradLogPolicy(const PolicyParams& params, int feature, Action a);

// --- scene/target packaging shared by training, evaluation and the CLI ---

struct TargetPack {
    ObjectInstance target;
    std::vector<int> terminals;
    DistanceField dfield;
    SummaryContext ctx;
    std::unique_ptr<EpisodeEngine> engine;
};

struct ScenePack {
    std::unique_ptr<Scene> scene;
    std::unique_ptr<PoseGraph> graph;
    std::vector<std::unique_ptr<TargetPack>> targets;
    std::vector<std::string> skippedTargets;  // unreachable target categories
};

ScenePack makeScenePack(Scene scene, const RewardConfig& reward, const DetectorConfig& detector);

// --- policies ---

using PolicyFactory = std::function<Policy(const EpisodeEngine&)>;

/// Greedily descends a BFS field to the nearest dividing pose while searching,
/// then descends the target distance field; emits Done at distance zero.
Policy makeOraclePolicy(const EpisodeEngine& engine);
PolicyFactory oraclePolicyFactory();

/// Reactive two-stage controller driven only by observations.
PolicyFactory heuristicPolicyFactory();

PolicyFactory randomPolicyFactory();

PolicyFactory learnedPolicyFactory(const PolicyParams& params, bool greedy);

// --- evaluation ---

struct EvalOptions {
    int episodes = 100;
    std::uint64_t seed = 0;
    int workers = 1;
    bool keepTrajectories = false;
};

struct EvalResult {
    std::vector<EpisodeSummary> summaries;
    std::vector<std::string> trajectoriesJsonl;  // one block per episode, in order
    MetricsReport report;
};

EvalResult evaluate(const std::vector<ScenePack>& packs, const PolicyFactory& factory,
                    const EvalOptions& opts);

// --- training ---

struct TrainOptions {
    int episodes = 5000;
    int workers = 1;
    std::uint64_t seed = 0;
    int evalInterval = 0;  // 0: curve only at the end
    int evalEpisodes = 100;
};

struct CurvePoint {
    int episode = 0;
    MetricsReport report;
};

struct TrainResult {
    PolicyParams params;
    std::vector<CurvePoint> curve;
};

/// Synchronous multi-worker advantage actor-critic with Monte-Carlo returns.
/// Single-worker runs are bit-deterministic for a fixed seed.
TrainResult train(std::vector<ScenePack>& trainPacks, const std::vector<ScenePack>& evalPacks,
                  Hyper hyper, const TrainOptions& opts, PolicyParams* warmStart = nullptr);

std::string curveToCsv(const std::vector<CurvePoint>& curve);

void saveCheckpoint(const PolicyParams& params, std::uint64_t configHash, const std::string& path);
PolicyParams loadCheckpoint(const std::string& path, std::uint64_t* configHash = nullptr);

std::uint64_t fnv1a64(const std::string& text);

}  // namespace tsnav
