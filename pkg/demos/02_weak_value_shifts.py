"""
Pointer shifts with and without post-selection
==============================================

Without post-selection the packet's momentum moves by the excited
population times the kick.  Post-selecting the rotated qubit on the ground
state trades counts for a shift set by the complex weak value.
"""

import math

from atomwva import (
    EffectiveCoupling,
    Grid1D,
    PostselectionSpec,
    QubitState,
    make_gaussian,
    measured_shifts,
    moments,
    postselect,
    predicted_shifts,
    propagate_effective,
    weak_value,
)
from atomwva.weakvalue import qubit_for_weak_value

packet = make_gaussian(Grid1D(1024, 8.0))
g_c = 2e-3
eta = math.pi / 4

# %% Unselected: <p> / Delta_p = -2 beta^2 g_c
for beta2 in (0.0, 0.5, 1.0):
    out = propagate_effective(packet, QubitState.from_populations(beta2, 0.0), EffectiveCoupling(0.0, g_c))
    print(f"beta^2 = {beta2:3.1f}   <p>/Delta_p = {2 * moments(out.to_momentum())[0]: .6f}")

# %% Post-selected: choose the qubit that produces a given weak value
print()
print("   A_w          P        p shift (meas / pred)      x shift (meas / pred)")
for target in (2.0, 10.0, 10j, 5 - 5j):
    q = qubit_for_weak_value(target, eta)
    spec = PostselectionSpec(eta)
    wv = weak_value(q, spec)
    sel = postselect(propagate_effective(packet, q, EffectiveCoupling(0.0, g_c)), spec)
    m, pr = measured_shifts(sel.pointer), predicted_shifts(wv, g_c)
    print(f"{complex(target)!s:>9}  {sel.P_actual:8.2e}  {m.p_shift_over_2Dp: .5f} / {pr.p_shift_over_2Dp: .5f}"
          f"      {m.x_shift_over_2D: .5f} / {pr.x_shift_over_2D: .5f}")
