"""Which-way information erased by classical noise in the spin preparation.

The explicit dilation of the polarization transpose channel writes what the
environment actually records: four orthogonal states e1..e4 tagging the
(input, output) polarization transition in each arm. For a fixed input
polarization the two arms imprint different tag mixtures and the arms are
partly distinguishable; averaging over input polarizations makes both arms
imprint the *same* mixture, and the which-way record evaporates.
"""

import numpy as np

from whichway import (
    Preparation,
    brute_force_visibility,
    distinguishability,
    environment_states,
    explicit_transpose_dilation,
    generalized_visibility,
    ket,
)

h, v = ket(0, 2), ket(1, 2)
dil = explicit_transpose_dilation()
channel = dil.channel()


def describe(name, prep):
    e0, e1 = environment_states(dil, prep)
    d_val = distinguishability(e0, e1)
    v_val = generalized_visibility(channel, prep)
    print(f"preparation: {name}")
    print(f"  environment state, arm 0 diag: {np.round(np.diag(e0.matrix).real, 3)}")
    print(f"  environment state, arm 1 diag: {np.round(np.diag(e1.matrix).real, 3)}")
    print(f"  D = {d_val:.4f}   V_G = {v_val:.4f}   D^2 + V_G^2 = {d_val**2 + v_val**2:.4f}")
    print()


# Horizontal light in both arms: arm 0 tags {e1, e2}, arm 1 tags {e1, e3}.
describe("|h> in both arms", Preparation.pure(h, h))

# Vertical light: the tag sets shift but stay partly distinguishable.
describe("|v> in both arms", Preparation.pure(v, v))

# A 50/50 classical mixture of the two: both arms tag all four states
# uniformly. Nothing distinguishes them anymore -- D drops to zero and the
# recoverable visibility climbs to one.
describe("mixed h/v ensemble", Preparation.completely_mixed(2))

# The same conclusion from the explicit search over output analyses: the
# best unitary recovers half the contrast for a pure input, all of it for
# the mixed one.
for name, prep in [("pure |h>", Preparation.pure(h, h)),
                   ("mixed", Preparation.completely_mixed(2))]:
    res = brute_force_visibility(channel, prep, seed=1)
    print(f"explicit unitary search, {name:<9}: best |overlap| = {res.value:.6f} "
          f"(converged: {res.converged})")
