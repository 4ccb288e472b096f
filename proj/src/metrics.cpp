#include "tsnav/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace tsnav {

namespace {

double ratioTerm(double lstar, double l) {
    if (lstar <= 0 && l <= 0) return 1.0;  // started at the goal
    return lstar / std::max(l, lstar);
}

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

std::vector<Cell> divideCriterionCells(const Scene& scene, const ObjectInstance& target,
                                       const PoseGraph& graph, const DetectorConfig& detector,
                                       double Ctarget) {
    std::unordered_set<Cell, CellHash> cells;
    for (int s = 0; s < graph.stateCount(); ++s) {
        const Pose p = graph.pose(s);
        if (cells.count(p.cell)) continue;
        if (noiselessConfidence(p, target, scene, detector) > Ctarget) cells.insert(p.cell);
    }
    return {cells.begin(), cells.end()};
}

SummaryContext makeSummaryContext(const EpisodeEngine& engine) {
    SummaryContext ctx;
    std::unordered_set<Cell, CellHash> seen;
    for (int t : successTerminals(engine.graph(), engine.target(), engine.scene())) {
        const Cell c = engine.graph().pose(t).cell;
        if (seen.insert(c).second) ctx.terminalCells.push_back(c);
    }
    ctx.divideCells = divideCriterionCells(engine.scene(), engine.target(), engine.graph(),
                                           engine.detectorConfig(), engine.rewardConfig().Ctarget);
    return ctx;
}

EpisodeSummary summarize(const EpisodeState& episode, const EpisodeEngine& engine,
                         const SummaryContext* ctx) {
    if (episode.outcome == Outcome::Running)
        throw std::runtime_error("malformed-log error: episode has no terminal record");

    const Scene& scene = engine.scene();
    const double g = scene.config.gridStep;

    SummaryContext local;
    if (!ctx) {
        local = makeSummaryContext(engine);
        ctx = &local;
    }

    EpisodeSummary s;
    s.success = episode.outcome == Outcome::Success;
    s.enteredPathfinding = episode.divideStep.has_value();
    s.divideStep = episode.divideStep;

    int step = 0;
    for (const StepRecord& rec : episode.trajectory) {
        ++step;
        if (rec.action != Action::MoveAhead || rec.poseAfter == rec.poseBefore) continue;
        const bool searching = !episode.divideStep || step <= *episode.divideStep;
        (searching ? s.Lsearch : s.Lnav) += g;
    }
    s.L = s.Lsearch + s.Lnav;

    s.Lstar = metricShortestPath(scene, episode.startPose.cell, ctx->terminalCells);
    if (s.Lstar < 0) {
        if (s.success) throw std::runtime_error("consistency error: success but Lstar unreachable");
        s.Lstar = 0;
    }

    if (s.enteredPathfinding) {
        std::vector<Cell> divideCells = ctx->divideCells;
        // a noisy divide can fire where the noise-free criterion never holds
        if (divideCells.empty()) divideCells.push_back(episode.dividePose.cell);
        const double ls = metricShortestPath(scene, episode.startPose.cell, divideCells);
        s.LstarSearch = ls < 0 ? 0.0 : ls;
        const double ln = metricShortestPath(scene, episode.dividePose.cell, ctx->terminalCells);
        s.LstarNav = ln < 0 ? 0.0 : ln;
    }
    return s;
}

double computeSR(const std::vector<EpisodeSummary>& s) {
    if (s.empty()) throw std::runtime_error("computeSR: no episodes");
    double sum = 0;
    for (const auto& e : s) sum += e.success ? 1.0 : 0.0;
    return sum / double(s.size());
}

double computeSPL(const std::vector<EpisodeSummary>& s) {
    if (s.empty()) throw std::runtime_error("computeSPL: no episodes");
    double sum = 0;
    for (const auto& e : s)
        if (e.success) sum += ratioTerm(e.Lstar, e.L);
    return sum / double(s.size());
}

double computeSSR(const std::vector<EpisodeSummary>& s) {
    if (s.empty()) throw std::runtime_error("computeSSR: no episodes");
    double sum = 0;
    for (const auto& e : s) sum += e.enteredPathfinding ? 1.0 : 0.0;
    return sum / double(s.size());
}

double computeSSSPL(const std::vector<EpisodeSummary>& s) {
    if (s.empty()) throw std::runtime_error("computeSSSPL: no episodes");
    double sum = 0;
    for (const auto& e : s)
        if (e.enteredPathfinding) sum += ratioTerm(e.LstarSearch, e.Lsearch);
    return sum / double(s.size());
}

std::optional<double> computeNSNPL(const std::vector<EpisodeSummary>& s) {
    int kNav = 0;
    double sum = 0;
    for (const auto& e : s) {
        if (!e.enteredPathfinding) continue;
        ++kNav;
        if (e.success) sum += ratioTerm(e.LstarNav, e.Lnav);
    }
    if (kNav == 0) return std::nullopt;
    return sum / double(kNav);
}

MetricsReport computeReport(const std::vector<EpisodeSummary>& s) {
    MetricsReport r;
    r.K = int(s.size());
    r.SR = computeSR(s);
    r.SPL = computeSPL(s);
    r.SSR = computeSSR(s);
    r.SSSPL = computeSSSPL(s);
    r.NSNPL = computeNSNPL(s);
    for (const auto& e : s) r.KNav += e.enteredPathfinding ? 1 : 0;
    return r;
}

std::string reportToCsv(const MetricsReport& r) {
    std::ostringstream out;
    out << "metric,value,count\n";
    out << "SR," << fmt6(r.SR) << "," << r.K << "\n";
    out << "SPL," << fmt6(r.SPL) << "," << r.K << "\n";
    out << "SSR," << fmt6(r.SSR) << "," << r.K << "\n";
    out << "SSSPL," << fmt6(r.SSSPL) << "," << r.K << "\n";
    if (r.NSNPL)
        out << "NSNPL," << fmt6(*r.NSNPL) << "," << r.KNav << "\n";
    else
        out << "NSNPL,," << r.KNav << "\n";
    // binomial standard errors, convenience rows
    auto se = [](double p, int n) { return n > 0 ? std::sqrt(p * (1 - p) / n) : 0.0; };
    out << "SR_stderr," << fmt6(se(r.SR, r.K)) << "," << r.K << "\n";
    out << "SSR_stderr," << fmt6(se(r.SSR, r.K)) << "," << r.K << "\n";
    return out.str();
}

std::string summariesToCsv(const std::vector<EpisodeSummary>& s) {
    std::ostringstream out;
    out << "episode,success,enteredPathfinding,L,Lstar,Lsearch,LstarSearch,Lnav,LstarNav,"
           "divideStep\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto& e = s[i];
        out << i << "," << (e.success ? 1 : 0) << "," << (e.enteredPathfinding ? 1 : 0) << ","
            << fmt6(e.L) << "," << fmt6(e.Lstar) << "," << fmt6(e.Lsearch) << ","
            << fmt6(e.LstarSearch) << "," << fmt6(e.Lnav) << "," << fmt6(e.LstarNav) << ",";
        if (e.divideStep) out << *e.divideStep;
        out << "\n";
    }
    return out.str();
}

}  // namespace tsnav
