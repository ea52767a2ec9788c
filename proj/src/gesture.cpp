// SPDX-License-Identifier: Apache-2.0
#include "microgext/gesture.hpp"

namespace microgext {

const std::array<std::string_view, kNumClasses>& class_names() noexcept {
  static constexpr std::array<std::string_view, kNumClasses> names = {
      "Scissor", "Ring", "Swipe", "Open", "Fist", "Vertical", "Pinky", "Null"};
  return names;
}

std::string_view to_string(GestureClass g) noexcept { return class_names()[class_index(g)]; }

std::optional<GestureClass> parse_gesture(std::string_view name) noexcept {
  for (int i = 0; i < kNumClasses; ++i) {
    if (class_names()[i] == name) return static_cast<GestureClass>(i);
  }
  return std::nullopt;
}

}  // namespace microgext
