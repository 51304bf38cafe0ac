#pragma once

#include <cstdint>
#include <string_view>

namespace detroll {

// Binary class label. Used for gold (y), observed (y*) and imputed labels.
enum class Label : std::uint8_t { safe = 0, unsafe = 1 };

constexpr Label flip(Label l) noexcept {
    return l == Label::safe ? Label::unsafe : Label::safe;
}

constexpr int to_int(Label l) noexcept { return static_cast<int>(l); }

constexpr Label label_from_int(int v) noexcept {
    return v == 0 ? Label::safe : Label::unsafe;
}

}  // namespace detroll
