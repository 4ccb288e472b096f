#pragma once

#include "tsnav/action.hpp"
#include "tsnav/scene.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace tsnav {

constexpr std::int32_t kUnreachable = -1;

/// Directed graph over (cell, yaw, pitch) with one unit-weight edge per motion
/// action. MoveAhead edges exist only when the forward cell is reachable;
/// Look edges saturate (absent at the pitch bounds).
class PoseGraph {
  public:
    static PoseGraph build(const Scene& scene);

    int stateCount() const { return int(succ_.size()); }
    int stateIndex(const Pose& pose) const;
    Pose pose(int state) const;

    /// Successor state under a motion action, or -1 when the edge is absent.
    /// Action::Done never has an edge.
    int successor(int state, Action a) const {
        if (a == Action::Done) return -1;
        return succ_[state][int(a)];
    }

    int yawCount() const { return nYaw_; }
    int pitchCount() const { return int(pitchLevels_.size()); }
    const std::vector<Cell>& cells() const { return cells_; }

  private:
    std::vector<std::array<std::int32_t, kMotionActionCount>> succ_;
    std::vector<Cell> cells_;
    std::unordered_map<Cell, int, CellHash> cellIdx_;
    std::vector<int> pitchLevels_;
    int nYaw_ = 4;
    int rotStep_ = 90;
};

/// Poses within the success radius of the target with the target in view.
std::vector<int> successTerminals(const PoseGraph& graph, const ObjectInstance& target,
                                  const Scene& scene);

struct DistanceField {
    std::string targetCategory;
    std::vector<std::int32_t> dist;  // indexed by state, kUnreachable when no path

    std::int32_t at(int state) const { return dist[state]; }
};

/// Multi-source reverse BFS from the terminal set. Throws when the set is empty.
DistanceField distanceField(const PoseGraph& graph, const ObjectInstance& target,
                            const std::vector<int>& terminals);

/// Minimum 4-connected hop count from fromCell into toCells, in meters
/// (hops x gridStep). Rotations contribute zero length.
/// Returns a negative value when no target cell is reachable.
double metricShortestPath(const Scene& scene, Cell fromCell, const std::vector<Cell>& toCells);

}  // namespace tsnav
