// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace microgext {

enum class GestureClass : int { Scissor = 0, Ring, Swipe, Open, Fist, Vertical, Pinky, Null };

inline constexpr int kNumClasses = 8;
inline constexpr int kNumStates = 5;

/// Per-frame swipe phase: 0..3 along the index finger (0 nearest the tip),
/// 4 for every frame outside a swipe.
using SubState = std::uint8_t;
inline constexpr SubState kNoSwipeState = 4;

/// The seven command gestures, in class-index order (Null excluded).
inline constexpr std::array<GestureClass, 7> kCommandGestures = {
    GestureClass::Scissor, GestureClass::Ring,     GestureClass::Swipe, GestureClass::Open,
    GestureClass::Fist,    GestureClass::Vertical, GestureClass::Pinky};

const std::array<std::string_view, kNumClasses>& class_names() noexcept;
std::string_view to_string(GestureClass g) noexcept;
std::optional<GestureClass> parse_gesture(std::string_view name) noexcept;

constexpr int class_index(GestureClass g) noexcept { return static_cast<int>(g); }

}  // namespace microgext
