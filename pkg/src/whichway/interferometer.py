"""Monte Carlo model of the noisy two-arm polarization interferometer.

The noise is an equal-weight mixture of four arm-unitary pairs programmed by
rotating half- and quarter-wave plates. Photon counting is simulated at the
level of exact per-setting probabilities followed by multinomial sampling,
with per-detector efficiencies applied by binomial thinning; fringes are then
fit as cosines with shared offset, amplitude and phase across both
interference detectors.

Jones convention: rotation-conjugated retarders

    HWP(theta) = R(theta) diag(1, -1) R(-theta)
    QWP(theta) = R(theta) diag(1,  i) R(-theta)

with R(theta) the counterclockwise rotation by theta. A one-half-wave plus
one-quarter-wave chain in each arm cannot reproduce an identity arm unitary
(their Bloch rotation angles are pi and pi/2, so the product always rotates
by at least pi/2), so the verifier scans a documented family of arrangements
and polarization frames, including quarter plates that straddle both arms,
and reports the member that matches the requested program.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .bounds import (
    FilterPair,
    FractionalVisibilityRecord,
    rectilinear_filters,
    rectilinear_preparations,
)
from .channels import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    PathChannel,
    Preparation,
    block_map,
)
from .errors import ConventionError, DimensionError, NumericalError
from .linalg import ATOL_DERIVED, dagger

__all__ = [
    "FitResult",
    "FringeDataset",
    "NoiseProgram",
    "NoiseRow",
    "ProgramReport",
    "RowReport",
    "WavePlateSetting",
    "binomial_resample",
    "fit_fringes",
    "fit_report",
    "jones_matrix",
    "pauli_noise_program",
    "program_channel",
    "read_dataset_csv",
    "run_experiment",
    "simulate_fringes",
    "verify_noise_program",
    "write_dataset_csv",
]

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": PAULI_X,
    "Y": PAULI_Y,
    "Z": PAULI_Z,
}


@dataclass(frozen=True)
class WavePlateSetting:
    """A half- or quarter-wave plate at a principal-axis angle in degrees."""

    kind: str
    angle_deg: float

    def __post_init__(self):
        if self.kind not in ("half", "quarter"):
            raise DimensionError(f"unknown wave plate kind {self.kind!r}")
        if not -180.0 <= self.angle_deg <= 180.0:
            raise DimensionError(f"angle {self.angle_deg} outside [-180, 180] degrees")


def _rotation(theta_rad: float) -> np.ndarray:
    c, s = math.cos(theta_rad), math.sin(theta_rad)
    return np.array([[c, -s], [s, c]], dtype=complex)


def jones_matrix(setting: WavePlateSetting, mirror_angles: bool = False) -> np.ndarray:
    """Jones matrix of a wave plate in the documented convention."""
    theta = math.radians(setting.angle_deg) * (-1 if mirror_angles else 1)
    r = _rotation(theta)
    retard = np.diag([1.0, -1.0 if setting.kind == "half" else 1.0j]).astype(complex)
    return r @ retard @ r.conj().T


@dataclass(frozen=True)
class NoiseRow:
    """One plate setting row: per-arm half-wave plates h0/h1, the two quarter
    plates q1/q2, and the targeted arm-unitary pair label (e.g. "Y,-Y")."""

    target: str
    h0: WavePlateSetting | None
    h1: WavePlateSetting | None
    q1: WavePlateSetting | None
    q2: WavePlateSetting | None

    def target_pair(self) -> tuple[np.ndarray, np.ndarray]:
        names = self.target.split(",")
        if len(names) != 2:
            raise DimensionError(f"target {self.target!r} is not a pair label")
        out = []
        for name in names:
            name = name.strip()
            sign = -1.0 if name.startswith("-") else 1.0
            key = name.lstrip("+-")
            if key not in _PAULI:
                raise DimensionError(f"unknown arm-unitary label {name!r}")
            out.append(sign * _PAULI[key])
        return out[0], out[1]


@dataclass(frozen=True)
class NoiseProgram:
    """Equal-weight list of plate rows realizing a mixture of arm-unitary
    pairs."""

    rows: tuple[NoiseRow, ...]

    def __post_init__(self):
        if not self.rows:
            raise DimensionError("a noise program needs at least one row")

    @property
    def weights(self) -> tuple[float, ...]:
        return (1.0 / len(self.rows),) * len(self.rows)


def pauli_noise_program() -> NoiseProgram:
    """The four-row plate program for the equal mixture of (1,1), (X,X),
    (Y,-Y), (Z,Z)."""

    def half(a):
        return WavePlateSetting("half", a)

    def quarter(a):
        return WavePlateSetting("quarter", a)

    return NoiseProgram(rows=(
        NoiseRow("I,I", half(-45), half(-45), quarter(45), quarter(45)),
        NoiseRow("X,X", half(45), half(45), quarter(45), quarter(-45)),
        NoiseRow("Y,-Y", half(0), half(90), quarter(45), quarter(45)),
        NoiseRow("Z,Z", half(0), half(0), quarter(45), quarter(-45)),
    ))


@dataclass(frozen=True)
class RowReport:
    target: str
    deviation: float
    phase: complex
    effective_pair: tuple[np.ndarray, np.ndarray] = field(repr=False)


@dataclass(frozen=True)
class ProgramReport:
    convention: str
    rows: tuple[RowReport, ...]

    @property
    def max_deviation(self) -> float:
        return max(r.deviation for r in self.rows)


def _mat(setting: WavePlateSetting | None, mirror: bool) -> np.ndarray:
    if setting is None:
        return np.eye(2, dtype=complex)
    return jones_matrix(setting, mirror_angles=mirror)


_FRAMES = {
    "rectilinear": np.eye(2, dtype=complex),
    "circular-left": (np.eye(2) - 1j * PAULI_X) / np.sqrt(2),
    "circular-right": (np.eye(2) + 1j * PAULI_X) / np.sqrt(2),
}


def _compose_row(row: NoiseRow, arrangement: str, mirror: bool):
    h0, h1 = _mat(row.h0, mirror), _mat(row.h1, mirror)
    q1, q2 = _mat(row.q1, mirror), _mat(row.q2, mirror)
    if arrangement == "per-arm half-then-quarter":
        return q1 @ h0, q2 @ h1
    if arrangement == "per-arm quarter-then-half":
        return h0 @ q1, h1 @ q2
    if arrangement == "straddling quarter plates":
        return q2 @ h0 @ q1, q2 @ h1 @ q1
    raise DimensionError(f"unknown arrangement {arrangement!r}")


def _match_row(u0, u1, k0, k1, tol):
    """Shared-phase comparison of an arm-unitary pair against its target."""
    flat = np.concatenate([k0.reshape(-1), k1.reshape(-1)])
    idx = int(np.argmax(np.abs(flat)))
    ref = flat[idx]
    got = np.concatenate([u0.reshape(-1), u1.reshape(-1)])[idx]
    if abs(ref) < 1e-12:
        return False, np.inf, 1.0 + 0.0j
    phase = got / ref
    if abs(abs(phase) - 1.0) > tol:
        return False, np.inf, phase
    dev = max(np.max(np.abs(u0 - phase * k0)), np.max(np.abs(u1 - phase * k1)))
    return dev <= tol, float(dev), phase


def _candidate_conventions():
    for arrangement in (
        "per-arm half-then-quarter",
        "per-arm quarter-then-half",
        "straddling quarter plates",
    ):
        for mirror in (False, True):
            for frame_name in ("rectilinear", "circular-left", "circular-right"):
                label = arrangement + (", mirrored angles" if mirror else "")
                label += f", {frame_name} frame"
                yield label, arrangement, mirror, frame_name


def verify_noise_program(prog: NoiseProgram, tol: float = 1e-9) -> ProgramReport:
    """Find the member of the documented convention family under which every
    row realizes its target pair up to a shared phase.

    Returns the per-row deviations and frame-corrected effective arm
    unitaries; raises :class:`ConventionError` with per-candidate diagnostics
    if no member matches.
    """
    diagnostics = []
    for label, arrangement, mirror, frame_name in _candidate_conventions():
        w = _FRAMES[frame_name]
        reports = []
        worst = 0.0
        for row in prog.rows:
            u0, u1 = _compose_row(row, arrangement, mirror)
            u0 = w @ u0 @ w.conj().T
            u1 = w @ u1 @ w.conj().T
            k0, k1 = row.target_pair()
            ok, dev, phase = _match_row(u0, u1, k0, k1, tol)
            if not ok:
                worst = max(worst, dev if np.isfinite(dev) else 1.0)
                reports = None
                break
            worst = max(worst, dev)
            reports.append(RowReport(row.target, dev, phase, (u0, u1)))
        if reports is not None:
            return ProgramReport(convention=label, rows=tuple(reports))
        diagnostics.append(f"{label}: max deviation {worst:.3e}")
    raise ConventionError(
        "no documented Jones convention reproduces the program:\n  "
        + "\n  ".join(diagnostics)
    )


def program_channel(report: ProgramReport) -> PathChannel:
    """Equal-weight mixture channel of the verified effective arm unitaries."""
    n = len(report.rows)
    scale = 1.0 / np.sqrt(n)
    pairs = tuple(
        (scale * r.effective_pair[0], scale * r.effective_pair[1]) for r in report.rows
    )
    return PathChannel(2, pairs, label="noise-program")


# ---------------------------------------------------------------------------
# Counting simulation


@dataclass(frozen=True)
class FringeDataset:
    """Phase-indexed detector counts.

    counts_plus/minus are the interference detectors; counts_ref0/ref1 monitor
    the non-filtered components of each arm for normalization.
    """

    phases: tuple[float, ...]
    counts_plus: np.ndarray
    counts_minus: np.ndarray
    counts_ref0: np.ndarray
    counts_ref1: np.ndarray
    shots_per_phase: int
    seed: tuple[int, ...]
    efficiencies: tuple[float, float, float, float]

    def __post_init__(self):
        m = len(self.phases)
        if any(b <= a for a, b in zip(self.phases, self.phases[1:])):
            raise DimensionError("phases must be strictly increasing")
        for name in ("counts_plus", "counts_minus", "counts_ref0", "counts_ref1"):
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            object.__setattr__(self, name, arr)
            if arr.shape != (m,):
                raise DimensionError(f"{name} length does not match phases")
            if arr.min(initial=0) < 0 or arr.max(initial=0) > self.shots_per_phase:
                raise DimensionError(f"{name} outside [0, shots_per_phase]")

    def totals(self) -> np.ndarray:
        return self.counts_plus + self.counts_minus + self.counts_ref0 + self.counts_ref1


def _seed_tuple(seed) -> tuple[int, ...]:
    if isinstance(seed, (int, np.integer)):
        seed = (int(seed),)
    seed = tuple(int(s) for s in seed)
    if any(s < 0 for s in seed):
        raise DimensionError("seed entries must be nonnegative integers")
    return seed


def _unitary_rows(ch: PathChannel):
    """Decompose the channel into weighted arm-unitary rows if every Kraus
    pair is a sub-normalized unitary pair; None otherwise."""
    d = ch.spin_dim
    eye = np.eye(d)
    rows = []
    for a, b in ch.kraus_pairs:
        ga, gb = dagger(a) @ a, dagger(b) @ b
        wa = np.trace(ga).real / d
        wb = np.trace(gb).real / d
        if wa < 1e-12 or abs(wa - wb) > ATOL_DERIVED:
            return None
        if np.max(np.abs(ga - wa * eye)) > ATOL_DERIVED or np.max(np.abs(gb - wb * eye)) > ATOL_DERIVED:
            return None
        s = np.sqrt(wa)
        rows.append((wa, a / s, b / s))
    return rows


def _allocate(shots: int, weights) -> list[int]:
    """Deterministic largest-remainder split of shots across weights."""
    raw = [shots * w for w in weights]
    base = [int(math.floor(x)) for x in raw]
    rest = shots - sum(base)
    order = sorted(range(len(raw)), key=lambda i: raw[i] - base[i], reverse=True)
    for i in order[:rest]:
        base[i] += 1
    return base


def simulate_fringes(
    ch: PathChannel,
    prep,
    filt: FilterPair,
    phases=None,
    shots_per_phase: int = 10_000,
    efficiencies: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0),
    contrast: float = 1.0,
    seed=0,
) -> FringeDataset:
    """Simulate detector counts for one preparation/filter cell.

    Per phase, exact detection probabilities are computed for each
    arm-unitary row of the channel (shots split equally-by-weight across
    rows, matching the per-phase averaging over plate settings), the photon
    is distributed multinomially over the four detectors, and each detector
    is thinned binomially by its efficiency. The fringe amplitude is scaled
    by the contrast factor. Fully deterministic under the seed.
    """
    if not 0.0 < contrast <= 1.0:
        raise DimensionError(f"contrast {contrast} outside (0, 1]")
    if len(efficiencies) != 4 or any(not 0.0 < e <= 1.0 for e in efficiencies):
        raise DimensionError("efficiencies must be four values in (0, 1]")
    if shots_per_phase < 0:
        raise DimensionError("shots_per_phase must be nonnegative")
    psi0, psi1 = _pure_pair_arrays(prep, ch.spin_dim)
    if phases is None:
        phases = np.linspace(0.0, 2.0 * np.pi, 13)
    phases = tuple(float(p) for p in phases)
    seed_seq = _seed_tuple(seed)

    chi0, chi1 = filt.chi0, filt.chi1
    rows = _unitary_rows(ch)
    if rows is None:
        # pooled fallback: exact mixture probabilities as a single row
        f0 = (chi0.conj() @ block_map(ch, 0, 0, np.outer(psi0, psi0.conj())) @ chi0).real
        f1 = (chi1.conj() @ block_map(ch, 1, 1, np.outer(psi1, psi1.conj())) @ chi1).real
        v = chi0.conj() @ block_map(ch, 0, 1, np.outer(psi0, psi1.conj())) @ chi1
        cells = [(1.0, f0, f1, v)]
    else:
        cells = []
        for w, u0, u1 in rows:
            a0 = chi0.conj() @ u0 @ psi0
            a1 = chi1.conj() @ u1 @ psi1
            cells.append((w, abs(a0) ** 2, abs(a1) ** 2, a0 * np.conj(a1)))

    allocation = _allocate(shots_per_phase, [c[0] for c in cells])
    n_plus = np.zeros(len(phases), dtype=np.int64)
    n_minus = np.zeros(len(phases), dtype=np.int64)
    n_ref0 = np.zeros(len(phases), dtype=np.int64)
    n_ref1 = np.zeros(len(phases), dtype=np.int64)

    for j, phi in enumerate(phases):
        rng = np.random.default_rng(seed_seq + (j,))
        raw = np.zeros(4, dtype=np.int64)
        for n_shots, (_, f0, f1, v) in zip(allocation, cells):
            if n_shots == 0:
                continue
            osc = (contrast * v * np.exp(1j * phi)).real
            pvals = np.array([
                0.5 * (0.5 * (f0 + f1) + osc),
                0.5 * (0.5 * (f0 + f1) - osc),
                0.5 * (1.0 - f0),
                0.5 * (1.0 - f1),
            ])
            pvals = np.clip(pvals, 0.0, None)
            raw += rng.multinomial(n_shots, pvals / pvals.sum())
        detected = [
            rng.binomial(int(raw[i]), efficiencies[i]) if efficiencies[i] < 1.0 else int(raw[i])
            for i in range(4)
        ]
        n_plus[j], n_minus[j], n_ref0[j], n_ref1[j] = detected

    return FringeDataset(
        phases=phases,
        counts_plus=n_plus, counts_minus=n_minus,
        counts_ref0=n_ref0, counts_ref1=n_ref1,
        shots_per_phase=shots_per_phase, seed=seed_seq,
        efficiencies=tuple(float(e) for e in efficiencies),
    )


def _pure_pair_arrays(prep, d: int) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(prep, Preparation):
        if not prep.is_pure:
            raise DimensionError("simulation cells require a pure preparation pair")
        psi0, psi1 = prep.pairs[0]
    else:
        psi0, psi1 = prep
        psi0 = np.asarray(psi0, dtype=complex).reshape(-1)
        psi1 = np.asarray(psi1, dtype=complex).reshape(-1)
    if psi0.size != d or psi1.size != d:
        raise DimensionError("preparation kets do not match the channel dimension")
    return psi0, psi1


def binomial_resample(ds: FringeDataset, reference_efficiency: float, seed=0) -> FringeDataset:
    """Thin every detector's counts so all share the reference efficiency."""
    if not 0.0 < reference_efficiency <= min(ds.efficiencies):
        raise DimensionError(
            f"reference efficiency {reference_efficiency} must be in (0, min(efficiencies)]"
        )
    ratios = [reference_efficiency / e for e in ds.efficiencies]
    rng = np.random.default_rng(_seed_tuple(seed))
    arrays = []
    for counts, ratio in zip(
        (ds.counts_plus, ds.counts_minus, ds.counts_ref0, ds.counts_ref1), ratios
    ):
        if ratio >= 1.0:
            arrays.append(counts.copy())
        else:
            arrays.append(rng.binomial(counts, ratio).astype(np.int64))
    return replace(
        ds,
        counts_plus=arrays[0], counts_minus=arrays[1],
        counts_ref0=arrays[2], counts_ref1=arrays[3],
        efficiencies=(reference_efficiency,) * 4,
    )


# ---------------------------------------------------------------------------
# Fringe fitting


@dataclass(frozen=True)
class FitResult:
    """Joint sinusoidal fit of both interference detectors."""

    p_hat: float
    visibility: complex
    sigma_p: float
    sigma_v: float
    residual_rms: float

    def __post_init__(self):
        if abs(self.visibility) > self.p_hat + 3 * (self.sigma_p + self.sigma_v) + 1e-9:
            raise NumericalError(
                "fitted |V| exceeds p beyond the 3-sigma envelope; fit inconsistent"
            )


def fit_report(fit: FitResult) -> str:
    """Structured text summary of a fringe fit."""
    mag = abs(fit.visibility)
    delta = float(np.angle(fit.visibility))
    return "\n".join([
        "fringe fit",
        f"  p     = {fit.p_hat:.4f} +/- {fit.sigma_p:.4f}",
        f"  |V|   = {mag:.4f} +/- {fit.sigma_v:.4f}",
        f"  phase = {delta:+.4f} rad",
        f"  residual rms = {fit.residual_rms:.2e}",
    ])


def fit_fringes(ds: FringeDataset) -> FitResult:
    """Least-squares fit of counts to T_j * (p +/- Re(V e^{i phi})) / 2.

    The per-phase normalization T_j is the total count over all four
    detectors (the reference detectors complete the total). The model is
    linear in (p, Re V, Im V); uncertainties come from the fit covariance.
    """
    phases = np.asarray(ds.phases)
    totals = ds.totals().astype(float)
    mask = totals > 0
    if np.count_nonzero(mask) < 4 or len(set(np.round(phases[mask], 12))) < 4:
        raise NumericalError("insufficient phase coverage: need >= 4 populated phases")
    span = phases[mask].max() - phases[mask].min()
    if span < np.pi:
        raise NumericalError("insufficient phase coverage: span below half a period")

    phi = phases[mask]
    t = totals[mask]
    y = np.concatenate([ds.counts_plus[mask] / t, ds.counts_minus[mask] / t])
    c, s = np.cos(phi), np.sin(phi)
    half = 0.5 * np.ones_like(phi)
    design_plus = np.column_stack([half, 0.5 * c, -0.5 * s])
    design_minus = np.column_stack([half, -0.5 * c, 0.5 * s])
    design = np.vstack([design_plus, design_minus])

    gram = design.T @ design
    if np.linalg.cond(gram) > 1e12:
        raise NumericalError("degenerate design matrix: phases do not constrain the fit")
    beta, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ beta
    dof = y.size - 3
    var = float(resid @ resid) / dof if dof > 0 else 0.0
    cov = var * np.linalg.inv(gram)

    p_hat = float(max(beta[0], 0.0))
    vis = complex(beta[1], beta[2])
    sigma_p = float(np.sqrt(max(cov[0, 0], 0.0)))
    mag = abs(vis)
    if mag > 1e-12:
        grad = np.array([vis.real, vis.imag]) / mag
        sigma_v = float(np.sqrt(max(grad @ cov[1:, 1:] @ grad, 0.0)))
    else:
        sigma_v = float(np.sqrt(max(0.5 * (cov[1, 1] + cov[2, 2]), 0.0)))
    rms = float(np.sqrt(np.mean(resid**2)))
    return FitResult(p_hat=p_hat, visibility=vis, sigma_p=sigma_p, sigma_v=sigma_v,
                     residual_rms=rms)


def run_experiment(
    ch: PathChannel,
    preparations: dict[str, tuple[np.ndarray, np.ndarray]] | None = None,
    filters: dict[str, FilterPair] | None = None,
    *,
    phases=None,
    shots_per_phase: int = 10_000,
    efficiencies: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0),
    contrast: float = 1.0,
    seed=0,
) -> list[FractionalVisibilityRecord]:
    """Simulate and fit every (preparation, filter) cell.

    Non-uniform detector efficiencies are equalized by binomial resampling to
    the minimum efficiency before fitting, mirroring the count-rate
    correction used on the measured data. Each cell draws its own PRNG
    stream derived from (seed, preparation index, filter index, phase index).
    """
    preparations = rectilinear_preparations() if preparations is None else preparations
    filters = rectilinear_filters() if filters is None else filters
    seed_seq = _seed_tuple(seed)
    records = []
    for i_mu, mu in enumerate(sorted(preparations)):
        for i_nu, nu in enumerate(sorted(filters)):
            ds = simulate_fringes(
                ch, preparations[mu], filters[nu],
                phases=phases, shots_per_phase=shots_per_phase,
                efficiencies=efficiencies, contrast=contrast,
                seed=seed_seq + (i_mu, i_nu),
            )
            if len(set(ds.efficiencies)) > 1:
                ds = binomial_resample(ds, min(ds.efficiencies),
                                       seed=seed_seq + (i_mu, i_nu, 997))
            fit = fit_fringes(ds)
            records.append(FractionalVisibilityRecord(
                mu=mu, nu=nu, p=min(fit.p_hat, 1.0), visibility=fit.visibility,
                sigma_p=fit.sigma_p, sigma_v=fit.sigma_v,
            ))
    return records


# ---------------------------------------------------------------------------
# Dataset CSV

_DS_FIELDS = ["phase", "n_plus", "n_minus", "n_ref0", "n_ref1"]


def write_dataset_csv(ds: FringeDataset, path_or_buffer) -> None:
    def write_to(fh):
        writer = csv.writer(fh)
        writer.writerow(_DS_FIELDS)
        for j, phi in enumerate(ds.phases):
            writer.writerow([
                repr(float(phi)), int(ds.counts_plus[j]), int(ds.counts_minus[j]),
                int(ds.counts_ref0[j]), int(ds.counts_ref1[j]),
            ])

    if isinstance(path_or_buffer, io.TextIOBase):
        write_to(path_or_buffer)
    else:
        with open(path_or_buffer, "w", newline="", encoding="ascii") as fh:
            write_to(fh)


def read_dataset_csv(path_or_buffer, shots_per_phase: int, seed=0,
                     efficiencies=(1.0, 1.0, 1.0, 1.0)) -> FringeDataset:
    def read_from(fh):
        reader = csv.DictReader(fh)
        if reader.fieldnames != _DS_FIELDS:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        rows = [(float(r["phase"]), int(r["n_plus"]), int(r["n_minus"]),
                 int(r["n_ref0"]), int(r["n_ref1"])) for r in reader]
        return FringeDataset(
            phases=tuple(r[0] for r in rows),
            counts_plus=np.array([r[1] for r in rows], dtype=np.int64),
            counts_minus=np.array([r[2] for r in rows], dtype=np.int64),
            counts_ref0=np.array([r[3] for r in rows], dtype=np.int64),
            counts_ref1=np.array([r[4] for r in rows], dtype=np.int64),
            shots_per_phase=shots_per_phase, seed=_seed_tuple(seed),
            efficiencies=tuple(float(e) for e in efficiencies),
        )

    if isinstance(path_or_buffer, io.TextIOBase):
        return read_from(path_or_buffer)
    with open(path_or_buffer, "r", newline="", encoding="ascii") as fh:
        return read_from(fh)
