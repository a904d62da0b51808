"""Path-preserving quantum channels and their representations.

A particle split over two interferometer arms with a d-dimensional internal
(spin) subsystem experiences channels that never transfer amplitude between
the arms. Every Kraus operator of such a channel is block diagonal in the
path basis, K_k = |0><0| x A_k + |1><1| x B_k, so the channel is stored as
the list of pairs (A_k, B_k). The four block maps are

    L_ij(sigma) = sum_k K^(i)_k sigma K^(j)_k^dag,   K^(0) = A, K^(1) = B,

the diagonal blocks being the per-arm channels and the 01 block carrying the
inter-arm coherence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, PositivityError
from .linalg import (
    ATOL_DERIVED,
    ATOL_STRUCT,
    dagger,
    hermitian_part,
    ket,
    max_entangled_state,
    partial_trace,
)

__all__ = [
    "Dilation",
    "PathChannel",
    "PathSpinState",
    "Preparation",
    "apply_channel",
    "apply_via_choi",
    "block_choi",
    "block_map",
    "choi_state",
    "dilate",
    "dumps_channel",
    "explicit_transpose_dilation",
    "identity_channel",
    "load_channel",
    "loads_channel",
    "pauli_mixture_channel",
    "random_path_channel",
    "replace_channel",
    "save_channel",
    "transpose_channel",
]

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _unit_ket(psi, what="ket") -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    n = np.linalg.norm(psi)
    if abs(n - 1.0) > ATOL_STRUCT:
        raise DimensionError(f"{what} norm {n:.12g} differs from 1 beyond 1e-10")
    return psi


@dataclass(frozen=True)
class Preparation:
    """Input spin preparation for the two arms.

    Either a single pure pair (psi0, psi1) or a weighted ensemble of pure
    pairs; the derived per-arm states rho_i are the weighted mixtures of
    |psi_i^m><psi_i^m|.
    """

    spin_dim: int
    weights: tuple[float, ...]
    pairs: tuple[tuple[np.ndarray, np.ndarray], ...] = field(repr=False)
    label: str = ""

    def __post_init__(self):
        if len(self.weights) != len(self.pairs) or not self.pairs:
            raise DimensionError("weights and pure pairs must align and be non-empty")
        if any(w <= 0 for w in self.weights):
            raise DimensionError("ensemble weights must be positive")
        if abs(sum(self.weights) - 1.0) > ATOL_STRUCT:
            raise DimensionError("ensemble weights must sum to 1 within 1e-10")
        pairs = tuple(
            (_unit_ket(p0, "psi0"), _unit_ket(p1, "psi1")) for p0, p1 in self.pairs
        )
        for p0, p1 in pairs:
            if p0.size != self.spin_dim or p1.size != self.spin_dim:
                raise DimensionError("preparation kets do not match spin_dim")
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    @classmethod
    def pure(cls, psi0, psi1, label: str = "") -> "Preparation":
        psi0 = np.asarray(psi0, dtype=complex).reshape(-1)
        return cls(psi0.size, (1.0,), ((psi0, psi1),), label=label)

    @classmethod
    def ensemble(cls, weights, pairs, label: str = "") -> "Preparation":
        pairs = tuple((np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)) for a, b in pairs)
        return cls(pairs[0][0].size, tuple(weights), pairs, label=label)

    @classmethod
    def completely_mixed(cls, dim: int, label: str = "mixed") -> "Preparation":
        """Uniform ensemble of basis pairs (|l>, |l>): rho_0 = rho_1 = 1/d."""
        pairs = tuple((ket(l, dim), ket(l, dim)) for l in range(dim))
        return cls(dim, (1.0 / dim,) * dim, pairs, label=label)

    @property
    def is_pure(self) -> bool:
        return len(self.pairs) == 1

    def _rho(self, side: int) -> np.ndarray:
        out = np.zeros((self.spin_dim, self.spin_dim), dtype=complex)
        for w, pair in zip(self.weights, self.pairs):
            psi = pair[side]
            out += w * np.outer(psi, psi.conj())
        return hermitian_part(out)

    @property
    def rho0(self) -> np.ndarray:
        return self._rho(0)

    @property
    def rho1(self) -> np.ndarray:
        return self._rho(1)


@dataclass(frozen=True)
class PathSpinState:
    """Joint path x spin density operator in 2x2 block form.

    ``blocks[i, j]`` is the d x d spin operator <i|rho|j>; both paths carry
    probability 1/2.
    """

    spin_dim: int
    blocks: np.ndarray = field(repr=False)  # shape (2, 2, d, d)

    def __post_init__(self):
        d = self.spin_dim
        b = np.asarray(self.blocks, dtype=complex)
        if b.shape != (2, 2, d, d):
            raise DimensionError(f"blocks shape {b.shape} != (2, 2, {d}, {d})")
        object.__setattr__(self, "blocks", b)
        m = self.as_matrix()
        if np.max(np.abs(m - m.conj().T)) > ATOL_STRUCT:
            raise PositivityError("assembled state is not Hermitian within 1e-10")
        w = np.linalg.eigvalsh(hermitian_part(m))
        if w.min() < -ATOL_STRUCT:
            raise PositivityError(f"assembled state not PSD: min eigenvalue {w.min():.3e}")
        if abs(np.trace(m).real - 1.0) > ATOL_STRUCT:
            raise PositivityError("assembled state trace differs from 1 beyond 1e-10")
        for i in (0, 1):
            if abs(np.trace(b[i, i]).real - 0.5) > ATOL_DERIVED:
                raise PositivityError("paths are not equiprobable within 1e-9")

    def as_matrix(self) -> np.ndarray:
        d = self.spin_dim
        m = np.empty((2 * d, 2 * d), dtype=complex)
        for i in (0, 1):
            for j in (0, 1):
                m[i * d:(i + 1) * d, j * d:(j + 1) * d] = self.blocks[i, j]
        return m

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "PathSpinState":
        m = np.asarray(m, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2:
            raise DimensionError(f"expected a 2d x 2d matrix, got {m.shape}")
        d = m.shape[0] // 2
        b = np.empty((2, 2, d, d), dtype=complex)
        for i in (0, 1):
            for j in (0, 1):
                b[i, j] = m[i * d:(i + 1) * d, j * d:(j + 1) * d]
        return cls(d, b)

    @classmethod
    def from_preparation(cls, prep: Preparation) -> "PathSpinState":
        """State of (|0>|psi0^m> + |1>|psi1^m>)/sqrt(2), mixed over the ensemble."""
        d = prep.spin_dim
        b = np.zeros((2, 2, d, d), dtype=complex)
        for w, (p0, p1) in zip(prep.weights, prep.pairs):
            kets = (p0, p1)
            for i in (0, 1):
                for j in (0, 1):
                    b[i, j] += 0.5 * w * np.outer(kets[i], kets[j].conj())
        return cls(d, b)


@dataclass(frozen=True)
class PathChannel:
    """Path-preserving channel stored as Kraus pairs (A_k, B_k).

    Trace preservation (sum A^dag A = sum B^dag B = 1) is enforced at
    construction within 1e-9.
    """

    spin_dim: int
    kraus_pairs: tuple[tuple[np.ndarray, np.ndarray], ...] = field(repr=False)
    label: str = ""
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        d = self.spin_dim
        if d < 1:
            raise DimensionError("spin_dim must be >= 1")
        pairs = tuple(
            (np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))
            for a, b in self.kraus_pairs
        )
        if not pairs:
            raise DimensionError("a channel needs at least one Kraus pair")
        for a, b in pairs:
            if a.shape != (d, d) or b.shape != (d, d):
                raise DimensionError("Kraus blocks must be d x d")
        object.__setattr__(self, "kraus_pairs", pairs)
        eye = np.eye(d)
        for name, side in (("A", 0), ("B", 1)):
            acc = sum(dagger(p[side]) @ p[side] for p in pairs)
            if np.max(np.abs(acc - eye)) > ATOL_DERIVED:
                raise PositivityError(
                    f"{name}-side Kraus blocks are not trace preserving within 1e-9"
                )

    @property
    def n_kraus(self) -> int:
        return len(self.kraus_pairs)

    def blocks(self, i: int, j: int) -> list[tuple[np.ndarray, np.ndarray]]:
        """Kraus factor pairs (K^(i)_k, K^(j)_k) of the (i, j) block map."""
        if i not in (0, 1) or j not in (0, 1):
            raise DimensionError("path indices must be 0 or 1")
        return [(p[i], p[j]) for p in self.kraus_pairs]


def block_map(ch: PathChannel, i: int, j: int, sigma: np.ndarray) -> np.ndarray:
    """Apply the block map L_ij to a spin operator."""
    sigma = np.asarray(sigma, dtype=complex)
    if sigma.shape != (ch.spin_dim, ch.spin_dim):
        raise DimensionError(f"operator shape {sigma.shape} != spin dim {ch.spin_dim}")
    out = np.zeros_like(sigma)
    for ki, kj in ch.blocks(i, j):
        out += ki @ sigma @ dagger(kj)
    return out


def apply_channel(ch: PathChannel, state: PathSpinState) -> PathSpinState:
    """Act with the channel on a joint path-spin state, block by block."""
    if ch.spin_dim != state.spin_dim:
        raise DimensionError("channel and state spin dimensions differ")
    d = ch.spin_dim
    b = np.empty((2, 2, d, d), dtype=complex)
    for i in (0, 1):
        for j in (0, 1):
            b[i, j] = block_map(ch, i, j, state.blocks[i, j])
    return PathSpinState(d, b)


def block_choi(ch: PathChannel, i: int, j: int) -> np.ndarray:
    """(I x L_ij) acting on the maximally entangled projector of two spin
    replicas; a d^2 x d^2 matrix that fully encodes the block map."""
    d = ch.spin_dim
    phi = max_entangled_state(d)
    proj = np.outer(phi, phi.conj())
    eye = np.eye(d)
    out = np.zeros((d * d, d * d), dtype=complex)
    for ki, kj in ch.blocks(i, j):
        out += np.kron(eye, ki) @ proj @ dagger(np.kron(eye, kj))
    return out


def choi_state(ch: PathChannel) -> np.ndarray:
    """Full Choi state of the channel on (path x spin) twice, ordered
    (Q, S, Q', S'); the channel acts on the primed replica."""
    d = ch.spin_dim
    dim = 2 * d
    # |Phi+> on (Q,S,Q',S') = |Phi+>_QQ' x |Phi+>_SS' reordered to (QS)(Q'S')
    phi = np.zeros(dim * dim, dtype=complex)
    for i in (0, 1):
        for l in range(d):
            phi[(i * d + l) * dim + (i * d + l)] = 1.0
    phi /= np.sqrt(dim)
    proj = np.outer(phi, phi.conj())
    eye = np.eye(dim)
    out = np.zeros((dim * dim, dim * dim), dtype=complex)
    for a, b in ch.kraus_pairs:
        k_full = np.zeros((dim, dim), dtype=complex)
        k_full[:d, :d] = a
        k_full[d:, d:] = b
        lifted = np.kron(eye, k_full)
        out += lifted @ proj @ dagger(lifted)
    return out


def apply_via_choi(ch: PathChannel, state: PathSpinState) -> PathSpinState:
    """Channel action computed through the Choi state,
    rho' = 2d Tr_{QS}[Choi (rho^T x 1)]; agrees with apply_channel."""
    d = ch.spin_dim
    dim = 2 * d
    lifted = np.kron(state.as_matrix().T, np.eye(dim))
    out = 2 * d * partial_trace(choi_state(ch) @ lifted, (dim, dim), keep=1)
    return PathSpinState.from_matrix(hermitian_part(out))


@dataclass(frozen=True)
class Dilation:
    """Isometric extension of a path-preserving channel.

    v0 and v1 map the spin space into spin x environment (kron order
    spin, environment); tracing out the environment recovers the block maps.
    """

    spin_dim: int
    env_dim: int
    v0: np.ndarray = field(repr=False)
    v1: np.ndarray = field(repr=False)

    def __post_init__(self):
        d, k = self.spin_dim, self.env_dim
        for name in ("v0", "v1"):
            v = np.asarray(getattr(self, name), dtype=complex)
            object.__setattr__(self, name, v)
            if v.shape != (d * k, d):
                raise DimensionError(f"{name} shape {v.shape} != ({d * k}, {d})")
            if np.max(np.abs(dagger(v) @ v - np.eye(d))) > ATOL_DERIVED:
                raise PositivityError(f"{name} is not an isometry within 1e-9")

    def isometry(self, i: int) -> np.ndarray:
        return (self.v0, self.v1)[i]

    def kraus_pairs(self) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
        """Read the Kraus pairs back off the environment index."""
        d, k = self.spin_dim, self.env_dim
        a = self.v0.reshape(d, k, d)
        b = self.v1.reshape(d, k, d)
        return tuple((a[:, n, :], b[:, n, :]) for n in range(k))

    def channel(self, label: str = "") -> PathChannel:
        return PathChannel(self.spin_dim, self.kraus_pairs(), label=label)


def dilate(ch: PathChannel) -> Dilation:
    """Canonical dilation: one environment basis ket per Kraus pair."""
    d, k = ch.spin_dim, ch.n_kraus
    v0 = np.zeros((d * k, d), dtype=complex)
    v1 = np.zeros((d * k, d), dtype=complex)
    for n, (a, b) in enumerate(ch.kraus_pairs):
        e = ket(n, k).reshape(k, 1)
        v0 += np.kron(a, e)
        v1 += np.kron(b, e)
    return Dilation(d, k, v0, v1)


# ---------------------------------------------------------------------------
# Builders


def identity_channel(d: int) -> PathChannel:
    eye = np.eye(d, dtype=complex)
    return PathChannel(d, ((eye, eye),), label=f"identity(d={d})")


def replace_channel(sigma0: np.ndarray) -> PathChannel:
    """Channel whose cross block is sigma -> sigma0 Tr(sigma).

    The internal state in each arm is handed to the environment and replaced
    with sigma0, which must be a density matrix (Hermitian, PSD, unit trace)
    for a completely positive realization to exist.
    """
    sigma0 = np.asarray(sigma0, dtype=complex)
    d = sigma0.shape[0]
    if sigma0.shape != (d, d):
        raise DimensionError("sigma0 must be square")
    if np.max(np.abs(sigma0 - sigma0.conj().T)) > ATOL_STRUCT:
        raise PositivityError("sigma0 must be Hermitian")
    if abs(np.trace(sigma0).real - 1.0) > ATOL_STRUCT:
        raise PositivityError("sigma0 must have unit trace")
    w, vecs = np.linalg.eigh(hermitian_part(sigma0))
    if w.min() < -ATOL_STRUCT:
        raise PositivityError("sigma0 must be positive semidefinite")
    pairs = []
    for r in range(d):
        if w[r] <= ATOL_STRUCT:
            continue
        root = np.sqrt(w[r])
        for l in range(d):
            op = root * np.outer(vecs[:, r], ket(l, d).conj())
            pairs.append((op, op.copy()))
    return PathChannel(d, tuple(pairs), label=f"replace(d={d})")


def transpose_channel(d: int) -> PathChannel:
    """Cross block sigma -> sigma^T / d; each arm completely depolarized."""
    pairs = []
    s = 1.0 / np.sqrt(d)
    for k in range(d):
        for l in range(d):
            a = s * np.outer(ket(k, d), ket(l, d).conj())
            b = s * np.outer(ket(l, d), ket(k, d).conj())
            pairs.append((a, b))
    return PathChannel(d, tuple(pairs), label=f"transpose(d={d})")


def pauli_mixture_channel() -> PathChannel:
    """Equal-weight mixture of the arm-unitary pairs (1,1), (X,X), (Y,-Y),
    (Z,Z); its cross block is sigma -> sigma^T / 2."""
    eye = np.eye(2, dtype=complex)
    pairs = tuple(
        (0.5 * k0, 0.5 * k1)
        for k0, k1 in ((eye, eye), (PAULI_X, PAULI_X), (PAULI_Y, -PAULI_Y), (PAULI_Z, PAULI_Z))
    )
    return PathChannel(2, pairs, label="pauli_mixture")


def explicit_transpose_dilation() -> Dilation:
    """Explicit four-state-environment dilation of the d=2 transpose channel.

    The environment kets e_1..e_4 tag the (input, output) rectilinear basis
    transition in arm 0 and the transposed transition in arm 1:

        v0: |h> -> (|h>|e1> + |v>|e2>)/sqrt(2),  |v> -> (|h>|e3> + |v>|e4>)/sqrt(2)
        v1: |h> -> (|h>|e1> + |v>|e3>)/sqrt(2),  |v> -> (|h>|e2> + |v>|e4>)/sqrt(2)
    """
    s = 1.0 / np.sqrt(2)
    v0 = np.zeros((8, 2), dtype=complex)
    v1 = np.zeros((8, 2), dtype=complex)
    # row index = spin * 4 + env
    v0[0 * 4 + 0, 0] = s  # |h>|e1> <- h
    v0[1 * 4 + 1, 0] = s  # |v>|e2> <- h
    v0[0 * 4 + 2, 1] = s  # |h>|e3> <- v
    v0[1 * 4 + 3, 1] = s  # |v>|e4> <- v
    v1[0 * 4 + 0, 0] = s  # |h>|e1> <- h
    v1[1 * 4 + 2, 0] = s  # |v>|e3> <- h
    v1[0 * 4 + 1, 1] = s  # |h>|e2> <- v
    v1[1 * 4 + 3, 1] = s  # |v>|e4> <- v
    return Dilation(2, 4, v0, v1)


def random_path_channel(d: int, n_kraus: int, seed: int) -> PathChannel:
    """Random trace-preserving path channel, deterministic under the seed.

    Each side draws n_kraus complex Ginibre matrices G_k and normalizes them
    by (sum G^dag G)^(-1/2).
    """
    if n_kraus < 1:
        raise DimensionError("n_kraus must be >= 1")
    rng = np.random.default_rng(seed)

    def draw_side():
        g = rng.normal(size=(n_kraus, d, d)) + 1j * rng.normal(size=(n_kraus, d, d))
        s = sum(dagger(m) @ m for m in g)
        w, v = np.linalg.eigh(hermitian_part(s))
        inv_root = (v / np.sqrt(w)) @ v.conj().T
        return [m @ inv_root for m in g]

    side_a, side_b = draw_side(), draw_side()
    return PathChannel(
        d,
        tuple(zip(side_a, side_b)),
        label=f"random(d={d},k={n_kraus},seed={seed})",
        metadata={"rng": "numpy.random.default_rng (PCG64)", "seed": int(seed)},
    )


# ---------------------------------------------------------------------------
# Channel spec files
#
# Plain-text key-value format:
#
#     whichway-channel v1
#     spin_dim <d>
#     pairs <n>
#     meta <key> <value...>        (zero or more)
#     pair
#     A <re> <im> <re> <im> ...    (d*d entries, row-major)
#     B <re> <im> <re> <im> ...
#     ... repeated per pair
#
# Decimals are written with Python's shortest round-trip repr, so a
# write -> read -> write cycle is bit-identical.

_MAGIC = "whichway-channel v1"


def _fmt_row(m: np.ndarray) -> str:
    return " ".join(f"{repr(float(z.real))} {repr(float(z.imag))}" for z in m.reshape(-1))


def dumps_channel(ch: PathChannel) -> str:
    lines = [_MAGIC, f"spin_dim {ch.spin_dim}", f"pairs {ch.n_kraus}"]
    for key in sorted(ch.metadata):
        lines.append(f"meta {key} {ch.metadata[key]}")
    for a, b in ch.kraus_pairs:
        lines.append("pair")
        lines.append("A " + _fmt_row(a))
        lines.append("B " + _fmt_row(b))
    return "\n".join(lines) + "\n"


def loads_channel(text: str) -> PathChannel:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != _MAGIC:
        raise ValueError(f"not a channel spec file (missing '{_MAGIC}' header)")
    d = n = None
    metadata: dict = {}
    idx = 1
    while idx < len(lines) and lines[idx] != "pair":
        key, _, rest = lines[idx].partition(" ")
        if key == "spin_dim":
            d = int(rest)
        elif key == "pairs":
            n = int(rest)
        elif key == "meta":
            mkey, _, mval = rest.partition(" ")
            metadata[mkey] = mval
        else:
            raise ValueError(f"unrecognized channel spec line: {lines[idx]!r}")
        idx += 1
    if d is None or n is None:
        raise ValueError("channel spec file is missing spin_dim or pairs")

    def parse_block(line: str, tag: str) -> np.ndarray:
        head, _, rest = line.partition(" ")
        if head != tag:
            raise ValueError(f"expected '{tag}' block line, got {line!r}")
        vals = [float(tok) for tok in rest.split()]
        if len(vals) != 2 * d * d:
            raise ValueError(f"{tag} block has {len(vals)} numbers, expected {2 * d * d}")
        arr = np.array(vals[0::2]) + 1j * np.array(vals[1::2])
        return arr.reshape(d, d)

    pairs = []
    for _ in range(n):
        if idx >= len(lines) or lines[idx] != "pair":
            raise ValueError("channel spec file truncated: missing 'pair' block")
        pairs.append((parse_block(lines[idx + 1], "A"), parse_block(lines[idx + 2], "B")))
        idx += 3
    if idx != len(lines):
        raise ValueError("trailing content after declared Kraus pairs")
    return PathChannel(d, tuple(pairs), label="from-file", metadata=metadata)


def save_channel(ch: PathChannel, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(dumps_channel(ch))


def load_channel(path) -> PathChannel:
    with open(path, "r", encoding="ascii") as fh:
        return loads_channel(fh.read())
