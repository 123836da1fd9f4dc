/**
 * Copyright 2026 The tractaug Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace tractaug {

/// Masking-based augmentation strategies.
///
/// RC* cut a random box, TC* cut the union of a random subset of tract
/// masks. *1 masks the labels the same way as the image, *2 keeps the
/// original labels.
enum class Strategy : std::uint8_t { RC1 = 1, RC2 = 2, TC1 = 3, TC2 = 4 };

inline constexpr std::array<Strategy, 4> kAllStrategies{Strategy::RC1, Strategy::RC2, Strategy::TC1,
                                                        Strategy::TC2};

inline bool is_random_cutout(Strategy s) { return s == Strategy::RC1 || s == Strategy::RC2; }
inline bool masks_labels(Strategy s) { return s == Strategy::RC1 || s == Strategy::TC1; }

std::string to_string(Strategy s);
// Case-insensitive "rc1".."tc2"; throws InvalidArgument otherwise.
Strategy parse_strategy(std::string_view name);

}  // namespace tractaug
