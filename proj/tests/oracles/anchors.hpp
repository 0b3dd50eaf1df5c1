// Copyright 2026 The qec-spinsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Reference values evaluated at 40 significant digits with mpmath:
//
//   p_idle(t, T) = -expm1(-(t / T)^2) / 2
//   readout fallback a, b: p(t) = a exp(-t / 0.25) + b t with p(2.0) = 4e-4
//   and p'(1.4) = 0.

#pragma once

namespace oracle {

struct IdleAnchor {
  double t_us;
  double t2_us;
  double p;
};

inline constexpr IdleAnchor kIdleAnchors[] = {
    {2.4, 21.0, 0.0064881484261452596345},
    {5.44, 21.0, 0.032451807261240093124},
    {48.64, 21.0, 0.49766065780541005005},
    {21.0, 21.0, 0.3160602794142788392},
    {0.04, 21.0, 1.8140556661101804176e-6},
    {0.04, 14.8, 3.6522876103284994801e-6},
    {5.44, 210.0, 0.00033541579057925730917},
    {48.64, 210.0, 0.026116877065691923278},
    {24.0, 21.0, 0.36456583576476826461},
};

inline constexpr double kFallbackA = 0.013369711266041916077;
inline constexpr double kFallbackB = 0.00019775748076219788012;
inline constexpr double kFallbackAt088 = 0.00056976248490337710708;

}  // namespace oracle
