#include "tsnav/agent.hpp"
#include "tsnav/metrics.hpp"
#include "tsnav/reward.hpp"
#include "tsnav/scene.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace tsnav;

namespace {

struct ExperimentConfig {
    std::vector<std::string> scenePaths;
    std::vector<std::string> evalScenePaths;
    RewardConfig reward;
    bool exploreOn = true;
    bool distanceOn = true;
    DetectorConfig detector;
    Hyper hyper;
    int trainEpisodes = 5000;
    int evalInterval = 0;
    int evalEpisodes = 100;
    std::uint64_t seed = 0;
    int episodes = 100;
    int workers = 1;
    std::string out = "out";
};

bool wildcardMatch(const std::string& pat, const std::string& text) {
    std::size_t p = 0, t = 0, star = std::string::npos, mark = 0;
    while (t < text.size()) {
        if (p < pat.size() && (pat[p] == '?' || pat[p] == text[t])) {
            ++p;
            ++t;
        } else if (p < pat.size() && pat[p] == '*') {
            star = p++;
            mark = t;
        } else if (star != std::string::npos) {
            p = star + 1;
            t = ++mark;
        } else {
            return false;
        }
    }
    while (p < pat.size() && pat[p] == '*') ++p;
    return p == pat.size();
}

std::vector<std::string> expandSceneArg(const std::string& arg) {
    std::vector<std::string> out;
    if (arg.find('*') != std::string::npos || arg.find('?') != std::string::npos) {
        const fs::path pat(arg);
        const fs::path dir = pat.parent_path().empty() ? "." : pat.parent_path();
        if (!fs::is_directory(dir)) return out;
        for (const auto& e : fs::directory_iterator(dir))
            if (e.is_regular_file() && wildcardMatch(pat.filename().string(), e.path().filename().string()))
                out.push_back(e.path().string());
        std::sort(out.begin(), out.end());
    } else if (fs::is_directory(arg)) {
        for (const auto& e : fs::directory_iterator(arg))
            if (e.is_regular_file() && e.path().extension() == ".json" &&
                e.path().filename() != "manifest.json")
                out.push_back(e.path().string());
        std::sort(out.begin(), out.end());
    } else {
        out.push_back(arg);
    }
    return out;
}

std::vector<std::string> expandSceneArgs(const std::vector<std::string>& args) {
    std::vector<std::string> out;
    for (const auto& a : args)
        for (auto& p : expandSceneArg(a)) out.push_back(std::move(p));
    if (out.empty()) throw std::runtime_error("no scene files matched");
    return out;
}

ExperimentConfig loadExperimentConfig(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("config parse error: ") + e.what());
    }
    ExperimentConfig c;
    if (j.contains("scenes")) c.scenePaths = j["scenes"].get<std::vector<std::string>>();
    if (j.contains("evalScenes"))
        c.evalScenePaths = j["evalScenes"].get<std::vector<std::string>>();
    if (j.contains("reward")) {
        const auto& r = j["reward"];
        if (r.contains("Ke")) c.reward.Ke = r["Ke"].get<double>();
        if (r.contains("Kd")) c.reward.Kd = r["Kd"].get<double>();
        if (r.contains("collisionPenalty")) c.reward.collisionPenalty = r["collisionPenalty"].get<double>();
        if (r.contains("slackPenalty")) c.reward.slackPenalty = r["slackPenalty"].get<double>();
        if (r.contains("finalReward")) c.reward.finalReward = r["finalReward"].get<double>();
        if (r.contains("Ctarget")) c.reward.Ctarget = r["Ctarget"].get<double>();
        if (r.contains("explore")) c.exploreOn = r["explore"].get<bool>();
        if (r.contains("distance")) c.distanceOn = r["distance"].get<bool>();
    }
    if (j.contains("detector")) {
        const auto& d = j["detector"];
        if (d.contains("model")) c.detector.model = detectorModelFromName(d["model"].get<std::string>());
        if (d.contains("maxRange")) c.detector.maxRange = d["maxRange"].get<double>();
        if (d.contains("noiseSigma")) c.detector.noiseSigma = d["noiseSigma"].get<double>();
        if (d.contains("occlusionCheck")) c.detector.occlusionCheck = d["occlusionCheck"].get<bool>();
        if (d.contains("seed")) c.detector.seed = d["seed"].get<std::uint64_t>();
    }
    if (j.contains("agent")) {
        const auto& a = j["agent"];
        if (a.contains("learningRate")) c.hyper.learningRate = a["learningRate"].get<double>();
        if (a.contains("gamma")) c.hyper.gamma = a["gamma"].get<double>();
        if (a.contains("entropyCoefficient"))
            c.hyper.entropyCoefficient = a["entropyCoefficient"].get<double>();
        if (a.contains("valueLearningRate"))
            c.hyper.valueLearningRate = a["valueLearningRate"].get<double>();
        if (a.contains("episodes")) c.trainEpisodes = a["episodes"].get<int>();
        if (a.contains("evalInterval")) c.evalInterval = a["evalInterval"].get<int>();
        if (a.contains("evalEpisodes")) c.evalEpisodes = a["evalEpisodes"].get<int>();
    }
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("episodes")) c.episodes = j["episodes"].get<int>();
    if (j.contains("workers")) c.workers = j["workers"].get<int>();
    if (j.contains("out")) c.out = j["out"].get<std::string>();
    return c;
}

ordered_json resolvedConfigJson(const ExperimentConfig& c) {
    ordered_json j;
    j["scenes"] = c.scenePaths;
    j["evalScenes"] = c.evalScenePaths;
    j["reward"] = {{"Ke", c.reward.Ke},
                   {"Kd", c.reward.Kd},
                   {"collisionPenalty", c.reward.collisionPenalty},
                   {"slackPenalty", c.reward.slackPenalty},
                   {"finalReward", c.reward.finalReward},
                   {"Ctarget", c.reward.Ctarget},
                   {"explore", c.exploreOn},
                   {"distance", c.distanceOn}};
    j["detector"] = {{"model", detectorModelName(c.detector.model)},
                     {"maxRange", c.detector.maxRange},
                     {"noiseSigma", c.detector.noiseSigma},
                     {"occlusionCheck", c.detector.occlusionCheck},
                     {"seed", c.detector.seed}};
    j["agent"] = {{"learningRate", c.hyper.learningRate},
                  {"gamma", c.hyper.gamma},
                  {"entropyCoefficient", c.hyper.entropyCoefficient},
                  {"valueLearningRate", c.hyper.valueLearningRate},
                  {"episodes", c.trainEpisodes},
                  {"evalInterval", c.evalInterval},
                  {"evalEpisodes", c.evalEpisodes}};
    j["seed"] = c.seed;
    j["episodes"] = c.episodes;
    j["workers"] = c.workers;
    j["out"] = c.out;
    return j;
}

RewardConfig effectiveReward(const ExperimentConfig& c) {
    RewardConfig r = c.reward;
    if (!c.exploreOn) r.Ke = 0.0;
    if (!c.distanceOn) r.Kd = 0.0;
    return r;
}

std::vector<ScenePack> loadPacks(const std::vector<std::string>& args, const ExperimentConfig& c) {
    std::vector<ScenePack> packs;
    for (const std::string& p : expandSceneArgs(args)) {
        ScenePack pack = makeScenePack(loadScene(p), effectiveReward(c), c.detector);
        for (const std::string& skipped : pack.skippedTargets)
            std::cerr << "warning: target '" << skipped << "' unreachable in " << p
                      << ", skipped\n";
        packs.push_back(std::move(pack));
    }
    return packs;
}

void writeFile(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

void writeProvenance(const ExperimentConfig& c, const fs::path& outDir) {
    writeFile(outDir / "resolved_config.json", resolvedConfigJson(c).dump(2) + "\n");
}

// Hash of the experiment configuration, excluding the output location so that
// identical runs written to different directories produce identical checkpoints.
std::uint64_t configHash(const ExperimentConfig& c) {
    ordered_json j = resolvedConfigJson(c);
    j.erase("out");
    return fnv1a64(j.dump());
}

void writeEvalOutputs(const EvalResult& res, const fs::path& outDir, const std::string& prefix,
                      double gridStepForSubset) {
    writeFile(outDir / (prefix + "metrics.csv"), reportToCsv(res.report));
    writeFile(outDir / (prefix + "episodes.csv"), summariesToCsv(res.summaries));
    // subset analogue of the hard split: optimal path at least 5 grid steps
    std::vector<EpisodeSummary> hard;
    for (const auto& s : res.summaries)
        if (s.Lstar >= 5.0 * gridStepForSubset) hard.push_back(s);
    if (!hard.empty())
        writeFile(outDir / (prefix + "metrics_hard.csv"), reportToCsv(computeReport(hard)));
    if (!res.trajectoriesJsonl.empty()) {
        std::ostringstream all;
        for (const std::string& t : res.trajectoriesJsonl) all << t;
        writeFile(outDir / (prefix + "trajectories.jsonl"), all.str());
    }
}

PolicyFactory policyByName(const std::string& name) {
    if (name == "oracle") return oraclePolicyFactory();
    if (name == "heuristic") return heuristicPolicyFactory();
    if (name == "random") return randomPolicyFactory();
    throw CLI::ValidationError("--policy must be oracle|heuristic|random");
}

void addOverrideFlags(CLI::App* cmd, ExperimentConfig& c, std::string& rewardExplore,
                      std::string& rewardDistance, std::string& detectorModel, double& ctarget) {
    cmd->add_option("--seed", c.seed, "Base RNG seed");
    cmd->add_option("--workers", c.workers, "Worker threads (1 = deterministic)");
    cmd->add_option("--out", c.out, "Output directory");
    cmd->add_option("--episodes", c.episodes, "Episode count");
    cmd->add_option("--reward.explore", rewardExplore, "on|off")->check(CLI::IsMember({"on", "off", ""}));
    cmd->add_option("--reward.distance", rewardDistance, "on|off")->check(CLI::IsMember({"on", "off", ""}));
    cmd->add_option("--detector.model", detectorModel, "binary|linear-falloff");
    cmd->add_option("--ctarget", ctarget, "Stage-dividing confidence threshold");
}

void applyOverrides(ExperimentConfig& c, const std::string& rewardExplore,
                    const std::string& rewardDistance, const std::string& detectorModel,
                    double ctarget) {
    if (rewardExplore == "on") c.exploreOn = true;
    if (rewardExplore == "off") c.exploreOn = false;
    if (rewardDistance == "on") c.distanceOn = true;
    if (rewardDistance == "off") c.distanceOn = false;
    if (!detectorModel.empty()) c.detector.model = detectorModelFromName(detectorModel);
    if (ctarget > 0) c.reward.Ctarget = ctarget;
}

int runSceneGen(std::uint64_t seed, int count, const std::string& outDir, GenParams params) {
    if (count <= 0) throw CLI::ValidationError("--count must be > 0");
    fs::create_directories(outDir);
    ordered_json manifest;
    manifest["seed"] = seed;
    manifest["count"] = count;
    ordered_json files = ordered_json::array();
    for (int k = 0; k < count; ++k) {
        Scene s = generateScene(seed + std::uint64_t(k), params);
        char name[64];
        std::snprintf(name, sizeof name, "scene_%04d.json", k);
        saveScene(s, (fs::path(outDir) / name).string());
        files.push_back({{"file", name}, {"id", s.id}, {"cells", s.reachableCells().size()},
                         {"objects", s.objects.size()}});
    }
    manifest["files"] = files;
    writeFile(fs::path(outDir) / "manifest.json", manifest.dump(2) + "\n");
    std::cout << "wrote " << count << " scenes to " << outDir << "\n";
    return 0;
}

int runTrain(ExperimentConfig c, const std::string& resume) {
    if (c.scenePaths.empty()) throw std::runtime_error("train: no scenes configured");
    std::vector<ScenePack> trainPacks = loadPacks(c.scenePaths, c);
    std::vector<ScenePack> evalPacks;
    if (!c.evalScenePaths.empty()) evalPacks = loadPacks(c.evalScenePaths, c);

    TrainOptions opts;
    opts.episodes = c.trainEpisodes;
    opts.workers = c.workers;
    opts.seed = c.seed;
    opts.evalInterval = c.evalInterval;
    opts.evalEpisodes = c.evalEpisodes;

    PolicyParams warm = PolicyParams::zeros(c.hyper);
    PolicyParams* warmPtr = nullptr;
    if (!resume.empty()) {
        warm = loadCheckpoint(resume);
        warmPtr = &warm;
    }
    TrainResult tr = train(trainPacks, evalPacks, c.hyper, opts, warmPtr);

    const fs::path outDir(c.out);
    writeProvenance(c, outDir);
    saveCheckpoint(tr.params, configHash(c), (outDir / "checkpoint.json").string());
    writeFile(outDir / "curves.csv", curveToCsv(tr.curve));
    std::cout << "trained " << opts.episodes << " episodes; checkpoint in " << c.out << "\n";
    return 0;
}

int runEval(ExperimentConfig c, const std::string& checkpoint, const std::string& policyName) {
    if (c.episodes <= 0) throw CLI::ValidationError("--episodes must be > 0");
    if (c.scenePaths.empty()) throw std::runtime_error("eval: no scenes configured");
    std::vector<ScenePack> packs = loadPacks(c.scenePaths, c);

    PolicyFactory factory;
    if (!checkpoint.empty()) {
        std::uint64_t hash = 0;
        PolicyParams params = loadCheckpoint(checkpoint, &hash);
        if (hash != configHash(c))
            std::cerr << "warning: checkpoint config hash differs from current config\n";
        factory = learnedPolicyFactory(params, false);
    } else {
        factory = policyByName(policyName);
    }

    EvalOptions eo;
    eo.episodes = c.episodes;
    eo.seed = c.seed;
    eo.workers = c.workers;
    eo.keepTrajectories = true;
    EvalResult res = evaluate(packs, factory, eo);

    const fs::path outDir(c.out);
    writeProvenance(c, outDir);
    writeEvalOutputs(res, outDir, "", packs.front().scene->config.gridStep);
    std::cout << reportToCsv(res.report);
    return 0;
}

int runSweep(ExperimentConfig c, const std::string& checkpoint, const std::string& policyName,
             std::vector<double> thresholds) {
    if (thresholds.empty()) throw CLI::ValidationError("--thresholds must be non-empty");
    if (c.detector.model == DetectorModel::Binary && c.detector.noiseSigma <= 0)
        std::cerr << "warning: binary noise-free detector makes all thresholds in (0,1) "
                     "equivalent\n";
    const fs::path outDir(c.out);
    writeProvenance(c, outDir);

    std::ostringstream csv;
    csv << "Ctarget,SR,SPL,SSR,SSSPL,NSNPL\n";
    for (double th : thresholds) {
        ExperimentConfig ci = c;
        ci.reward.Ctarget = th;
        std::vector<ScenePack> packs = loadPacks(ci.scenePaths, ci);
        PolicyFactory factory;
        if (!checkpoint.empty())
            factory = learnedPolicyFactory(loadCheckpoint(checkpoint), false);
        else
            factory = policyByName(policyName);
        EvalOptions eo;
        eo.episodes = ci.episodes;
        eo.seed = ci.seed;  // shared seeds across thresholds
        eo.workers = ci.workers;
        EvalResult res = evaluate(packs, factory, eo);
        char buf[160];
        std::snprintf(buf, sizeof buf, "%.2f,%.6f,%.6f,%.6f,%.6f,", th, res.report.SR,
                      res.report.SPL, res.report.SSR, res.report.SSSPL);
        csv << buf;
        if (res.report.NSNPL) {
            std::snprintf(buf, sizeof buf, "%.6f", *res.report.NSNPL);
            csv << buf;
        }
        csv << "\n";
    }
    writeFile(outDir / "sweep.csv", csv.str());
    std::cout << csv.str();
    return 0;
}

int runReplay(const std::string& logPath) {
    std::ifstream in(logPath);
    if (!in) throw std::runtime_error("cannot open log " + logPath);
    int episodes = 0, steps = 0, violations = 0;
    std::string line;
    std::string prevStage;
    std::string currentEpisode;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ordered_json j = ordered_json::parse(line);
        if (j.contains("outcome")) {
            ++episodes;
            prevStage.clear();
            continue;
        }
        ++steps;
        if (j.at("episodeId").get<std::string>() != currentEpisode) {
            currentEpisode = j.at("episodeId").get<std::string>();
            prevStage.clear();
        }
        const std::string stage = j.at("stage").get<std::string>();
        if (prevStage == "Pathfinding" && stage == "Searching") ++violations;
        const auto& r = j.at("reward");
        if (stage == "Searching" && r.at("distance").get<double>() != 0.0) ++violations;
        if (stage == "Pathfinding" && r.at("explore").get<double>() != 0.0) ++violations;
        prevStage = stage;
    }
    std::cout << "episodes: " << episodes << "\nsteps: " << steps
              << "\nstage-machine violations: " << violations << "\n";
    return violations == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-stage reward grid-world navigation simulator"};
    app.require_subcommand(1);

    // scene-gen
    auto* gen = app.add_subcommand("scene-gen", "Generate scene files");
    std::uint64_t genSeed = 0;
    int genCount = 1;
    std::string genOut = "scenes";
    GenParams gp;
    gen->add_option("--seed", genSeed, "Generation seed")->required();
    gen->add_option("--count", genCount, "Number of scenes");
    gen->add_option("--out", genOut, "Output directory");
    gen->add_option("--room-min", gp.roomMin, "Min room side, meters");
    gen->add_option("--room-max", gp.roomMax, "Max room side, meters");
    gen->add_option("--obstacles-min", gp.obstaclesMin);
    gen->add_option("--obstacles-max", gp.obstaclesMax);
    gen->add_option("--objects-min", gp.objectsMin);
    gen->add_option("--objects-max", gp.objectsMax);
    gen->add_option("--grid-step", gp.config.gridStep, "Grid step, meters");

    // shared config handling
    struct CmdState {
        std::string configPath;
        std::vector<std::string> sceneArgs;
        std::string rewardExplore, rewardDistance, detectorModel;
        double ctarget = 0;
        ExperimentConfig cfg;
    };
    auto setupCommon = [](CLI::App* cmd, CmdState& st) {
        cmd->add_option("--config", st.configPath, "Experiment config JSON");
        cmd->add_option("--scenes", st.sceneArgs, "Scene files, dirs, or globs");
        addOverrideFlags(cmd, st.cfg, st.rewardExplore, st.rewardDistance, st.detectorModel,
                         st.ctarget);
    };
    CmdState trainSt, evalSt, sweepSt, replaySt;

    auto* trainCmd = app.add_subcommand("train", "Train an agent");
    setupCommon(trainCmd, trainSt);
    std::string resume;
    int trainEpisodesFlag = -1;
    trainCmd->add_option("--resume", resume, "Checkpoint to warm-start from");
    trainCmd->add_option("--train-episodes", trainEpisodesFlag, "Training episode count");

    auto* evalCmd = app.add_subcommand("eval", "Evaluate a policy");
    setupCommon(evalCmd, evalSt);
    std::string evalCheckpoint, evalPolicy = "oracle";
    evalCmd->add_option("--checkpoint", evalCheckpoint, "Trained checkpoint");
    evalCmd->add_option("--policy", evalPolicy, "Builtin policy: oracle|heuristic|random");

    auto* sweepCmd = app.add_subcommand("sweep-threshold", "Evaluate across C_target values");
    setupCommon(sweepCmd, sweepSt);
    std::string sweepCheckpoint, sweepPolicy = "heuristic";
    std::vector<double> thresholds;
    sweepCmd->add_option("--checkpoint", sweepCheckpoint);
    sweepCmd->add_option("--policy", sweepPolicy);
    sweepCmd->add_option("--thresholds", thresholds, "Comma-separated list")->delimiter(',');

    auto* replayCmd = app.add_subcommand("replay", "Validate a trajectory log");
    std::string replayLog;
    replayCmd->add_option("--log", replayLog, "Trajectory JSONL")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    auto resolve = [&](CmdState& st) -> ExperimentConfig {
        ExperimentConfig c;
        if (!st.configPath.empty()) c = loadExperimentConfig(st.configPath);
        if (!st.sceneArgs.empty()) c.scenePaths = st.sceneArgs;
        // apply flag overrides on top of the file
        CLI::App* cmd = app.get_subcommands().front();
        if (cmd->count("--seed")) c.seed = st.cfg.seed;
        if (cmd->count("--workers")) c.workers = st.cfg.workers;
        if (cmd->count("--out")) c.out = st.cfg.out;
        if (cmd->count("--episodes")) c.episodes = st.cfg.episodes;
        applyOverrides(c, st.rewardExplore, st.rewardDistance, st.detectorModel, st.ctarget);
        return c;
    };

    try {
        if (gen->parsed()) return runSceneGen(genSeed, genCount, genOut, gp);
        if (trainCmd->parsed()) {
            ExperimentConfig c = resolve(trainSt);
            if (trainEpisodesFlag > 0) c.trainEpisodes = trainEpisodesFlag;
            return runTrain(std::move(c), resume);
        }
        if (evalCmd->parsed()) return runEval(resolve(evalSt), evalCheckpoint, evalPolicy);
        if (sweepCmd->parsed())
            return runSweep(resolve(sweepSt), sweepCheckpoint, sweepPolicy, thresholds);
        if (replayCmd->parsed()) return runReplay(replayLog);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
