/*
 * Copyright 2026 The vshp-mpc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

namespace vshp {

/// Optimal turbine speed as a function of converter output power, from a
/// measured reversible pump-turbine curve. Piecewise linear with breakpoints
/// at 0.73 and 0.85.
inline double reference_speed(double p_g) {
  if (p_g > 0.85) return 1.0 + 0.6 * (p_g - 0.85);
  if (p_g > 0.73) return 1.0 + 0.3 * (p_g - 0.85);
  return 0.964 + 0.15 * (p_g - 0.73);
}

}  // namespace vshp
