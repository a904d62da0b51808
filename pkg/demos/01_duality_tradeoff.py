"""Tour of the which-way / visibility trade-off.

A particle split over two interferometer arms carries a spin (here:
polarization). Any interaction that leaves the arm populations alone is a
"path-preserving" channel, and two numbers summarize what it does:

  D    how well an eavesdropper holding the channel's environment could
       guess the arm (0 = no clue, 1 = certain), and
  V_G  how much interference contrast could still be recovered, maximized
       over all ways of analyzing the spin at the output.

They always satisfy D^2 + V_G^2 <= 1.
"""

import numpy as np

from whichway import (
    Preparation,
    identity_channel,
    ket,
    random_path_channel,
    replace_channel,
    transpose_channel,
    verify_inequality,
)

h, v = ket(0, 2), ket(1, 2)


def show(name, channel, prep):
    rep = verify_inequality(channel, prep)
    print(f"{name:<38} D = {rep.distinguishability:.4f}   "
          f"V_G = {rep.visibility:.4f}   slack = {rep.slack:.4f}")


print("three worked channels")
print("-" * 78)

# No interaction at all: nothing leaks, full visibility, for any preparation.
show("identity, any preparation", identity_channel(2),
     Preparation.pure(h, v))

# The spin is handed to the environment and replaced by a fixed state.
# Coherence survives exactly to the extent the two arm states overlap.
show("replace, identical arm states", replace_channel(np.eye(2) / 2),
     Preparation.pure(h, h))
show("replace, orthogonal arm states", replace_channel(np.eye(2) / 2),
     Preparation.pure(h, v))

# The transpose channel: each arm is completely depolarized, yet the cross
# block keeps sigma^T / 2. Pure preparations leak which-way information ...
show("transpose, pure preparation", transpose_channel(2),
     Preparation.pure(h, h))
# ... but feeding in classical noise erases it completely (see demo 02).
show("transpose, completely mixed", transpose_channel(2),
     Preparation.completely_mixed(2))

print()
print("random path-preserving channels never violate the trade-off")
print("-" * 78)
rng = np.random.default_rng(7)
worst = 1.0
for trial in range(200):
    d = int(rng.integers(2, 4))
    ch = random_path_channel(d, int(rng.integers(1, 5)), seed=int(rng.integers(2**31)))
    psi0 = rng.normal(size=d) + 1j * rng.normal(size=d)
    psi1 = rng.normal(size=d) + 1j * rng.normal(size=d)
    prep = Preparation.pure(psi0 / np.linalg.norm(psi0), psi1 / np.linalg.norm(psi1))
    rep = verify_inequality(ch, prep)
    worst = min(worst, rep.slack)
print(f"200 random instances at d in {{2, 3}}: smallest slack = {worst:.6f} (>= 0)")
