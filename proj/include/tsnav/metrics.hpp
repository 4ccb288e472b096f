#pragma once

#include "tsnav/perception.hpp"
#include "tsnav/posegraph.hpp"
#include "tsnav/reward.hpp"
#include "tsnav/scene.hpp"

#include <optional>
#include <string>
#include <vector>

namespace tsnav {

struct EpisodeSummary {
    bool success = false;            // Suc_i
    bool enteredPathfinding = false; // Nav_i
    double L = 0;                    // meters actually traveled
    double Lstar = 0;                // optimal start -> success terminals
    double Lsearch = 0;
    double LstarSearch = 0;
    double Lnav = 0;
    double LstarNav = 0;
    std::optional<int> divideStep;
};

struct MetricsReport {
    double SR = 0;
    double SPL = 0;
    double SSR = 0;
    double SSSPL = 0;
    std::optional<double> NSNPL;  // absent when no episode entered pathfinding
    int K = 0;
    int KNav = 0;
};

/// Cells of poses whose noise-free confidence crosses the dividing threshold.
std::vector<Cell> divideCriterionCells(const Scene& scene, const ObjectInstance& target,
                                       const PoseGraph& graph, const DetectorConfig& detector,
                                       double Ctarget);

/// Precomputed per-(scene, target) denominator inputs, reusable across episodes.
struct SummaryContext {
    std::vector<Cell> terminalCells;
    std::vector<Cell> divideCells;
};

SummaryContext makeSummaryContext(const EpisodeEngine& engine);

EpisodeSummary summarize(const EpisodeState& episode, const EpisodeEngine& engine,
                         const SummaryContext* ctx = nullptr);

double computeSR(const std::vector<EpisodeSummary>& s);
double computeSPL(const std::vector<EpisodeSummary>& s);
double computeSSR(const std::vector<EpisodeSummary>& s);
double computeSSSPL(const std::vector<EpisodeSummary>& s);
std::optional<double> computeNSNPL(const std::vector<EpisodeSummary>& s);

MetricsReport computeReport(const std::vector<EpisodeSummary>& s);

/// "metric,value,count" rows, 6 decimal places; binomial standard errors for
/// the rate metrics are appended as extra rows.
std::string reportToCsv(const MetricsReport& r);
std::string summariesToCsv(const std::vector<EpisodeSummary>& s);

}  // namespace tsnav
