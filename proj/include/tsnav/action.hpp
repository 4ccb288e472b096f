#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tsnav {

enum class Action : std::uint8_t {
    MoveAhead = 0,
    RotateLeft,
    RotateRight,
    LookDown,
    LookUp,
    Done,
};

constexpr int kActionCount = 6;
constexpr int kMotionActionCount = 5;  // all but Done

constexpr std::array<std::string_view, kActionCount> kActionNames = {
    "MoveAhead", "RotateLeft", "RotateRight", "LookDown", "LookUp", "Done"};

inline std::string_view actionName(Action a) { return kActionNames[static_cast<int>(a)]; }

inline Action actionFromName(std::string_view name) {
    for (int i = 0; i < kActionCount; ++i)
        if (kActionNames[i] == name) return static_cast<Action>(i);
    throw std::invalid_argument("unknown action: " + std::string(name));
}

}  // namespace tsnav
