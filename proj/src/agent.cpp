#include "tsnav/agent.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace tsnav {

namespace {

std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

int confBucket(double c) {
    if (c <= 0.0) return 0;
    if (c <= 0.5) return 1;
    if (c < 0.75) return 2;
    return 3;
}

constexpr int kConfBuckets = 4;
constexpr int kPrevActions = kActionCount + 1;

}  // namespace

int featureCount() { return 2 * 2 * (kBearingBuckets + 1) * kConfBuckets * 16 * kPrevActions; }

int featureIndex(const AgentObservation& obs) {
    int novelty = 0;
    for (int k = 0; k < 4; ++k) novelty |= obs.localNovelty[k] ? (1 << k) : 0;
    int idx = obs.stage == Stage::Pathfinding ? 1 : 0;
    idx = idx * 2 + (obs.targetVisible ? 1 : 0);
    idx = idx * (kBearingBuckets + 1) + obs.bearingBucket;
    idx = idx * kConfBuckets + confBucket(obs.confidence);
    idx = idx * 16 + novelty;
    idx = idx * kPrevActions + obs.previousAction;
    return idx;
}

AgentObservation observe(const EpisodeEngine& engine, const EpisodeState& state) {
    const Scene& scene = engine.scene();
    AgentObservation obs;
    obs.pose = state.pose;
    obs.stage = state.stage;
    obs.targetVisible =
        visible(state.pose, engine.target(), scene, engine.detectorConfig().occlusionCheck);
    if (!state.trajectory.empty()) {
        obs.confidence = state.trajectory.back().confidence;
        obs.previousAction = int(state.trajectory.back().action);
    } else {
        obs.confidence =
            detect(state.pose, engine.target(), scene, engine.detectorConfig(), 0).confidence;
    }
    if (obs.targetVisible) {
        const auto [world, heading] = poseToWorld(state.pose, scene.config);
        const double dx = engine.target().position.x - world.x;
        const double dy = engine.target().position.y - world.y;
        const double targetAng = std::atan2(dx, dy) * 180.0 / M_PI;  // compass
        double rel = std::fmod(targetAng - heading + 720.0, 360.0);
        obs.bearingBucket = int(std::lround(rel / 45.0)) % kBearingBuckets;
    }
    // ahead / right / behind / left, relative to heading
    for (int k = 0; k < 4; ++k) {
        const int yaw = (state.pose.yawDeg + 90 * k) % 360;
        const double rad = yaw * M_PI / 180.0;
        const Cell n{state.pose.cell.i + int(std::lround(std::sin(rad))),
                     state.pose.cell.j + int(std::lround(std::cos(rad)))};
        obs.localNovelty[k] =
            scene.isReachable(n) && !state.visitedCells.count(scene.cellIndex(n));
    }
    return obs;
}

PolicyParams PolicyParams::zeros(Hyper h) {
    PolicyParams p;
    p.prefs.assign(std::size_t(featureCount()) * kActionCount, 0.0);
    p.values.assign(featureCount(), 0.0);
    p.hyper = h;
    return p;
}

std::array<double, kActionCount> policyDistribution(const PolicyParams& params, int feature) {
    std::array<double, kActionCount> out{};
    const double* z = &params.prefs[std::size_t(feature) * kActionCount];
    double zmax = z[0];
    for (int a = 1; a < kActionCount; ++a) zmax = std::max(zmax, z[a]);
    double sum = 0;
    for (int a = 0; a < kActionCount; ++a) {
        out[a] = std::exp(z[a] - zmax);
        sum += out[a];
    }
    for (double& p : out) p /= sum;
    return out;
}

Action act(const PolicyParams& params, const AgentObservation& obs, std::mt19937_64& rng) {
    const auto pi = policyDistribution(params, featureIndex(obs));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double r = u(rng), acc = 0;
    for (int a = 0; a < kActionCount; ++a) {
        acc += pi[a];
        if (r <= acc) return Action(a);
    }
    return Action(kActionCount - 1);
}

Action actGreedy(const PolicyParams& params, const AgentObservation& obs) {
    const auto pi = policyDistribution(params, featureIndex(obs));
    return Action(std::max_element(pi.begin(), pi.end()) - pi.begin());
}

std::array<double, kActionCount> gradLogPolicy(const PolicyParams& params, int feature, Action a) {
    auto pi = policyDistribution(params, feature);
    std::array<double, kActionCount> g{};
    for (int k = 0; k < kActionCount; ++k) g[k] = (k == int(a) ? 1.0 : 0.0) - pi[k];
    return g;
}

ScenePack makeScenePack(Scene scene, const RewardConfig& reward, const DetectorConfig& detector) {
    ScenePack pack;
    pack.scene = std::make_unique<Scene>(std::move(scene));
    pack.graph = std::make_unique<PoseGraph>(PoseGraph::build(*pack.scene));
    for (const ObjectInstance& obj : pack.scene->objects) {
        auto tp = std::make_unique<TargetPack>();
        tp->target = obj;
        tp->terminals = successTerminals(*pack.graph, tp->target, *pack.scene);
        if (tp->terminals.empty()) {
            pack.skippedTargets.push_back(obj.category);
            continue;
        }
        tp->dfield = distanceField(*pack.graph, tp->target, tp->terminals);
        tp->engine = std::make_unique<EpisodeEngine>(*pack.scene, tp->target, *pack.graph,
                                                     tp->terminals, &tp->dfield, reward, detector);
        tp->ctx = makeSummaryContext(*tp->engine);
        pack.targets.push_back(std::move(tp));
    }
    return pack;
}

// --- policies ---

namespace {

// greedy descent over a per-state BFS distance table
std::optional<Action> descend(const PoseGraph& graph, const std::vector<std::int32_t>& dist,
                              const Pose& pose) {
    const int s = graph.stateIndex(pose);
    if (s < 0 || dist[s] <= 0) return std::nullopt;
    for (int a = 0; a < kMotionActionCount; ++a) {
        const int v = graph.successor(s, Action(a));
        if (v >= 0 && dist[v] == dist[s] - 1) return Action(a);
    }
    return std::nullopt;
}

std::vector<std::int32_t> bfsField(const PoseGraph& graph, const std::vector<int>& sources) {
    std::vector<std::vector<std::int32_t>> rev(graph.stateCount());
    for (int u = 0; u < graph.stateCount(); ++u)
        for (int a = 0; a < kMotionActionCount; ++a)
            if (int v = graph.successor(u, Action(a)); v >= 0) rev[v].push_back(u);
    std::vector<std::int32_t> dist(graph.stateCount(), kUnreachable);
    std::deque<int> q;
    for (int s : sources) {
        if (dist[s] == 0) continue;
        dist[s] = 0;
        q.push_back(s);
    }
    while (!q.empty()) {
        const int v = q.front();
        q.pop_front();
        for (int u : rev[v])
            if (dist[u] == kUnreachable) {
                dist[u] = dist[v] + 1;
                q.push_back(u);
            }
    }
    return dist;
}

}  // namespace

Policy makeOraclePolicy(const EpisodeEngine& engine) {
    const PoseGraph& graph = engine.graph();

    std::vector<int> divideStates;
    for (int s = 0; s < graph.stateCount(); ++s)
        if (noiselessConfidence(graph.pose(s), engine.target(), engine.scene(),
                                engine.detectorConfig()) > engine.rewardConfig().Ctarget)
            divideStates.push_back(s);

    auto divideField = std::make_shared<std::vector<std::int32_t>>();
    if (!divideStates.empty()) *divideField = bfsField(graph, divideStates);

    std::vector<int> terminals = successTerminals(graph, engine.target(), engine.scene());
    if (terminals.empty()) throw std::runtime_error("oracle: target unreachable");
    auto goalField = std::make_shared<std::vector<std::int32_t>>(bfsField(graph, terminals));

    return [divideField, goalField](const EpisodeEngine& eng, const EpisodeState& state,
                                    std::mt19937_64&) -> Action {
        const PoseGraph& g = eng.graph();
        if (state.stage == Stage::Pathfinding) {
            const int s = g.stateIndex(state.pose);
            if ((*goalField)[s] == 0) return Action::Done;
            if (auto a = descend(g, *goalField, state.pose)) return *a;
            return Action::RotateRight;
        }
        if (!divideField->empty()) {
            if (auto a = descend(g, *divideField, state.pose)) return *a;
        }
        // at a dividing pose but the (noisy) detector has not fired yet
        if (auto a = descend(g, *goalField, state.pose)) return *a;
        return Action::RotateRight;
    };
}

PolicyFactory oraclePolicyFactory() {
    return [](const EpisodeEngine& engine) { return makeOraclePolicy(engine); };
}

PolicyFactory heuristicPolicyFactory() {
    return [](const EpisodeEngine&) -> Policy {
        return [](const EpisodeEngine& eng, const EpisodeState& state,
                  std::mt19937_64& rng) -> Action {
            const AgentObservation obs = observe(eng, state);
            std::uniform_int_distribution<int> d10(0, 9);
            if (obs.stage == Stage::Pathfinding) {
                if (obs.targetVisible) {
                    if (obs.confidence >= 0.75) return Action::Done;
                    switch (obs.bearingBucket) {
                        case 0: return Action::MoveAhead;
                        case 1:
                        case 2:
                        case 3:
                        case 4: return Action::RotateRight;
                        default: return Action::RotateLeft;
                    }
                }
                // lost sight: scan
                switch (d10(rng)) {
                    case 0:
                    case 1:
                    case 2: return Action::RotateRight;
                    case 3: return Action::RotateLeft;
                    case 4: return Action::LookDown;
                    case 5: return Action::LookUp;
                    default: return Action::MoveAhead;
                }
            }
            // searching: chase novelty
            const int r = d10(rng);
            if (obs.localNovelty[0] && r < 7) return Action::MoveAhead;
            if (obs.localNovelty[1] && r < 8) return Action::RotateRight;
            if (obs.localNovelty[3]) return Action::RotateLeft;
            switch (r) {
                case 0:
                case 1: return Action::RotateRight;
                case 2: return Action::RotateLeft;
                case 3: return Action::LookDown;
                case 4: return Action::LookUp;
                default: return Action::MoveAhead;
            }
        };
    };
}

PolicyFactory randomPolicyFactory() {
    return [](const EpisodeEngine&) -> Policy {
        return [](const EpisodeEngine&, const EpisodeState&, std::mt19937_64& rng) -> Action {
            std::uniform_int_distribution<int> d(0, 20);
            const int r = d(rng);
            if (r == 20) return Action::Done;
            return Action(r / 4);  // each motion action 4/21
        };
    };
}

PolicyFactory learnedPolicyFactory(const PolicyParams& params, bool greedy) {
    auto shared = std::make_shared<PolicyParams>(params);
    return [shared, greedy](const EpisodeEngine&) -> Policy {
        return [shared, greedy](const EpisodeEngine& eng, const EpisodeState& state,
                                std::mt19937_64& rng) -> Action {
            const AgentObservation obs = observe(eng, state);
            return greedy ? actGreedy(*shared, obs) : act(*shared, obs, rng);
        };
    };
}

// --- evaluation ---

namespace {

std::vector<const TargetPack*> flattenTargets(const std::vector<ScenePack>& packs) {
    std::vector<const TargetPack*> out;
    for (const ScenePack& p : packs)
        for (const auto& t : p.targets) out.push_back(t.get());
    if (out.empty()) throw std::runtime_error("no usable (scene, target) pairs");
    return out;
}

}  // namespace

EvalResult evaluate(const std::vector<ScenePack>& packs, const PolicyFactory& factory,
                    const EvalOptions& opts) {
    if (opts.episodes <= 0) throw std::runtime_error("usage error: episodes must be > 0");
    const auto targets = flattenTargets(packs);
    std::vector<Policy> policies(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) policies[i] = factory(*targets[i]->engine);

    EvalResult res;
    res.summaries.resize(opts.episodes);
    if (opts.keepTrajectories) res.trajectoriesJsonl.resize(opts.episodes);

    auto runOne = [&](int e) {
        const std::size_t ti = std::size_t(e) % targets.size();
        const TargetPack& tp = *targets[ti];
        const std::uint64_t seed = mix64(opts.seed, std::uint64_t(e));
        const EpisodeResult er = runEpisode(*tp.engine, policies[ti], seed);
        res.summaries[e] = summarize(er.finalState, *tp.engine, &tp.ctx);
        if (opts.keepTrajectories)
            res.trajectoriesJsonl[e] =
                trajectoryToJsonl(er.finalState, "ep-" + std::to_string(e), tp.engine->scene().id,
                                  tp.target.category, tp.engine->scene().config.gridStep);
    };

    const int workers = std::max(1, opts.workers);
    if (workers == 1) {
        for (int e = 0; e < opts.episodes; ++e) runOne(e);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (int e = next.fetch_add(1); e < opts.episodes; e = next.fetch_add(1)) runOne(e);
            });
        for (auto& t : pool) t.join();
    }
    res.report = computeReport(res.summaries);
    return res;
}

// --- training ---

TrainResult train(std::vector<ScenePack>& trainPacks, const std::vector<ScenePack>& evalPacks,
                  Hyper hyper, const TrainOptions& opts, PolicyParams* warmStart) {
    std::vector<const TargetPack*> targets;
    for (ScenePack& p : trainPacks)
        for (auto& t : p.targets) targets.push_back(t.get());
    if (targets.empty()) throw std::runtime_error("train: no usable (scene, target) pairs");

    TrainResult result;
    result.params = warmStart ? *warmStart : PolicyParams::zeros(hyper);
    result.params.hyper = hyper;
    PolicyParams& params = result.params;
    const double lr = hyper.learningRate;
    const double vlr = hyper.valueLearningRate > 0 ? hyper.valueLearningRate : lr;

    std::mutex paramsMutex;
    std::atomic<int> episodeCounter{0};
    std::atomic<bool> diverged{false};

    auto runWorker = [&](int workerId) {
        std::mt19937_64 rng(mix64(opts.seed, 0x1000 + std::uint64_t(workerId)));
        struct Step {
            int feature;
            Action action;
            double reward;
        };
        std::vector<Step> steps;
        for (int ep = episodeCounter.fetch_add(1); ep < opts.episodes && !diverged;
             ep = episodeCounter.fetch_add(1)) {
            std::uniform_int_distribution<std::size_t> pick(0, targets.size() - 1);
            const TargetPack& tp = *targets[pick(rng)];
            const std::uint64_t epSeed = rng();

            steps.clear();
            EpisodeState state = tp.engine->reset(epSeed);
            while (!state.done) {
                const AgentObservation obs = observe(*tp.engine, state);
                const int f = featureIndex(obs);
                Action a;
                {
                    std::lock_guard<std::mutex> lock(paramsMutex);
                    a = act(params, obs, rng);
                }
                const RewardBreakdown r = tp.engine->step(state, a);
                steps.push_back({f, a, r.total()});
            }

            {
                std::lock_guard<std::mutex> lock(paramsMutex);
                double G = 0;
                for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
                    G = it->reward + hyper.gamma * G;
                    const double adv = G - params.values[it->feature];
                    const auto pi = policyDistribution(params, it->feature);
                    double* z = &params.prefs[std::size_t(it->feature) * kActionCount];
                    double H = 0;
                    for (int k = 0; k < kActionCount; ++k)
                        if (pi[k] > 0) H -= pi[k] * std::log(pi[k]);
                    for (int k = 0; k < kActionCount; ++k) {
                        const double gLog = (k == int(it->action) ? 1.0 : 0.0) - pi[k];
                        const double gEnt = pi[k] > 0 ? -pi[k] * (std::log(pi[k]) + H) : 0.0;
                        z[k] += lr * (adv * gLog + hyper.entropyCoefficient * gEnt);
                    }
                    params.values[it->feature] += vlr * adv;
                }
                if (!std::isfinite(G) || !std::isfinite(params.values[steps.front().feature]))
                    diverged = true;
            }

            if (workerId == 0 && opts.evalInterval > 0 && !evalPacks.empty() &&
                (ep + 1) % opts.evalInterval == 0) {
                PolicyParams snapshot;
                {
                    std::lock_guard<std::mutex> lock(paramsMutex);
                    snapshot = params;
                }
                EvalOptions eo;
                eo.episodes = opts.evalEpisodes;
                eo.seed = mix64(opts.seed, 0xEA1 + std::uint64_t(ep));
                EvalResult ev = evaluate(evalPacks, learnedPolicyFactory(snapshot, false), eo);
                result.curve.push_back({ep + 1, ev.report});
            }
        }
    };

    const int workers = std::max(1, opts.workers);
    if (workers == 1) {
        runWorker(0);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(runWorker, w);
        for (auto& t : pool) t.join();
    }
    if (diverged) throw std::runtime_error("train: diverged (non-finite parameters)");

    if (!evalPacks.empty() &&
        (result.curve.empty() || result.curve.back().episode != opts.episodes)) {
        EvalOptions eo;
        eo.episodes = opts.evalEpisodes;
        eo.seed = mix64(opts.seed, 0xF1AA1);
        EvalResult ev = evaluate(evalPacks, learnedPolicyFactory(params, false), eo);
        result.curve.push_back({opts.episodes, ev.report});
    }
    return result;
}

std::string curveToCsv(const std::vector<CurvePoint>& curve) {
    std::ostringstream out;
    out << "episode,SR,SPL,SSR,SSSPL,NSNPL\n";
    char buf[64];
    for (const CurvePoint& p : curve) {
        out << p.episode;
        for (double v : {p.report.SR, p.report.SPL, p.report.SSR, p.report.SSSPL}) {
            std::snprintf(buf, sizeof buf, ",%.6f", v);
            out << buf;
        }
        if (p.report.NSNPL) {
            std::snprintf(buf, sizeof buf, ",%.6f", *p.report.NSNPL);
            out << buf;
        } else {
            out << ",";
        }
        out << "\n";
    }
    return out.str();
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

void saveCheckpoint(const PolicyParams& params, std::uint64_t configHash, const std::string& path) {
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["configHash"] = configHash;
    j["featureCount"] = featureCount();
    j["hyper"] = {{"learningRate", params.hyper.learningRate},
                  {"gamma", params.hyper.gamma},
                  {"entropyCoefficient", params.hyper.entropyCoefficient},
                  {"valueLearningRate", params.hyper.valueLearningRate}};
    nlohmann::ordered_json prefs = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < params.prefs.size(); ++i)
        if (params.prefs[i] != 0.0) prefs.push_back({i, params.prefs[i]});
    j["prefs"] = prefs;
    nlohmann::ordered_json values = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < params.values.size(); ++i)
        if (params.values[i] != 0.0) values.push_back({i, params.values[i]});
    j["values"] = values;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump() << "\n";
}

PolicyParams loadCheckpoint(const std::string& path, std::uint64_t* configHash) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("checkpoint parse error: ") + e.what());
    }
    if (j.at("featureCount").get<int>() != featureCount())
        throw std::runtime_error("checkpoint feature layout mismatch");
    Hyper h;
    h.learningRate = j.at("hyper").at("learningRate").get<double>();
    h.gamma = j.at("hyper").at("gamma").get<double>();
    h.entropyCoefficient = j.at("hyper").at("entropyCoefficient").get<double>();
    h.valueLearningRate = j.at("hyper").at("valueLearningRate").get<double>();
    PolicyParams p = PolicyParams::zeros(h);
    for (const auto& kv : j.at("prefs")) p.prefs.at(kv.at(0).get<std::size_t>()) = kv.at(1).get<double>();
    for (const auto& kv : j.at("values")) p.values.at(kv.at(0).get<std::size_t>()) = kv.at(1).get<double>();
    if (configHash) *configHash = j.at("configHash").get<std::uint64_t>();
    return p;
}

}  // namespace tsnav
