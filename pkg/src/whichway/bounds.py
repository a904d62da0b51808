"""Measurable lower bounds on generalized visibility.

Interfering individually filtered spin components yields fractional
visibilities V^{mu,nu} = <chi0| L_01(|psi0^mu><psi1^mu|) |chi1>, bounded in
magnitude by the filtering probability p^{mu,nu}. Any coefficient set
alpha_{mu,nu} for which

    sum alpha (|psi0><psi1|)^T x |chi1><chi0|
        = (sqrt(rho1)^T x 1) U (sqrt(rho0)^T x 1),   U^dag U <= 1,

certifies V_G >= |sum alpha V^{mu,nu}| and hence D <= sqrt(1 - V_G^2).
This module verifies such certificates and assembles the two worked
coefficient families (complete orthonormal filters for one preparation, and
the four-term swap family for the completely mixed preparation).
"""

from __future__ import annotations

import cmath
import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np

from .channels import PathChannel, Preparation, block_choi, block_map
from .errors import ContractionError, DimensionError, SupportError
from .linalg import ATOL_DERIVED, ATOL_STRUCT, hermitian_part, ket, matrix_sqrt

__all__ = [
    "BoundCertificate",
    "FilterPair",
    "FractionalVisibilityRecord",
    "bound_from_visibilities",
    "certificate_report",
    "detection_probabilities",
    "fractional_visibility",
    "orthonormal_filter_bound",
    "read_records_csv",
    "rectilinear_filters",
    "rectilinear_preparations",
    "single_preparation_certificate",
    "swap_certificate",
    "swap_estimate",
    "verify_alpha_constraint",
    "write_records_csv",
]

SWAP_KEYS = (("hh", "hh"), ("hv", "vh"), ("vh", "hv"), ("vv", "vv"))


@dataclass(frozen=True)
class FilterPair:
    """Spin filters applied in the upper (chi0) and lower (chi1) arm."""

    chi0: np.ndarray = field(repr=False)
    chi1: np.ndarray = field(repr=False)
    label: str = ""

    def __post_init__(self):
        for name in ("chi0", "chi1"):
            v = np.asarray(getattr(self, name), dtype=complex).reshape(-1)
            if abs(np.linalg.norm(v) - 1.0) > ATOL_STRUCT:
                raise DimensionError(f"{name} is not unit norm within 1e-10")
            object.__setattr__(self, name, v)
        if self.chi0.size != self.chi1.size:
            raise DimensionError("filter kets have different dimensions")


@dataclass(frozen=True)
class FractionalVisibilityRecord:
    """One (preparation, filter) cell: filtering probability p and complex
    fringe amplitude V, with measurement uncertainties (0 for exact theory)."""

    mu: str
    nu: str
    p: float
    visibility: complex
    sigma_p: float = 0.0
    sigma_v: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0 + 1e-12:
            raise DimensionError(f"filtering probability {self.p} outside [0, 1]")
        if self.sigma_p < 0 or self.sigma_v < 0:
            raise DimensionError("uncertainties must be nonnegative")
        if abs(self.visibility) > self.p + 3 * (self.sigma_p + self.sigma_v) + 1e-10:
            raise DimensionError(
                f"|V|={abs(self.visibility):.6g} exceeds p={self.p:.6g} beyond "
                f"3 sigma for record ({self.mu}, {self.nu})"
            )

    @property
    def key(self) -> tuple[str, str]:
        return (self.mu, self.nu)


def _record_map(records) -> dict[tuple[str, str], FractionalVisibilityRecord]:
    if isinstance(records, dict):
        return dict(records)
    out = {}
    for rec in records:
        out[rec.key] = rec
    return out


def detection_probabilities(p: float, visibility: complex, phi: float) -> tuple[float, float]:
    """Probabilities (p_plus, p_minus) at the two interferometer outputs for
    phase phi: (p +/- Re(V e^{i phi})) / 2."""
    if not 0.0 <= p <= 1.0:
        raise DimensionError(f"p={p} outside [0, 1]")
    if abs(visibility) > p + 1e-12:
        raise DimensionError(f"|V|={abs(visibility)} exceeds p={p}")
    osc = (visibility * cmath.exp(1j * phi)).real
    plus = 0.5 * (p + osc)
    minus = 0.5 * (p - osc)
    return max(plus, 0.0), max(minus, 0.0)


def _pure_pair(prep) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(prep, Preparation):
        if not prep.is_pure:
            raise DimensionError("fractional visibility is defined per pure preparation")
        return prep.pairs[0]
    psi0, psi1 = prep
    return (np.asarray(psi0, dtype=complex).reshape(-1),
            np.asarray(psi1, dtype=complex).reshape(-1))


def fractional_visibility(
    ch: PathChannel,
    prep,
    filt: FilterPair,
    mu: str = "",
) -> FractionalVisibilityRecord:
    """Exact theory record for a pure preparation and one filter pair.

    Computed directly from the block maps and independently through the
    replica-tensor form; the two must agree within 1e-10.
    """
    psi0, psi1 = _pure_pair(prep)
    d = ch.spin_dim
    if psi0.size != d or filt.chi0.size != d:
        raise DimensionError("preparation/filter dimension does not match channel")
    chi0, chi1 = filt.chi0, filt.chi1

    v_direct = chi0.conj() @ block_map(ch, 0, 1, np.outer(psi0, psi1.conj())) @ chi1
    p_direct = 0.5 * (
        (chi0.conj() @ block_map(ch, 0, 0, np.outer(psi0, psi0.conj())) @ chi0).real
        + (chi1.conj() @ block_map(ch, 1, 1, np.outer(psi1, psi1.conj())) @ chi1).real
    )

    def tensor_route(i, j, left0, left1, right0, right1):
        probe = np.kron(np.outer(left0, left1.conj()).T, np.outer(right1, right0.conj()))
        return d * np.trace(probe @ block_choi(ch, i, j))

    v_tensor = tensor_route(0, 1, psi0, psi1, chi0, chi1)
    p_tensor = 0.5 * (
        tensor_route(0, 0, psi0, psi0, chi0, chi0).real
        + tensor_route(1, 1, psi1, psi1, chi1, chi1).real
    )
    if abs(v_direct - v_tensor) > 1e-10 or abs(p_direct - p_tensor) > 1e-10:
        raise DimensionError("direct and tensor routes disagree beyond 1e-10")

    if not mu and isinstance(prep, Preparation):
        mu = prep.label
    return FractionalVisibilityRecord(
        mu=mu, nu=filt.label, p=float(np.clip(p_direct, 0.0, 1.0)),
        visibility=complex(v_direct),
    )


@dataclass(frozen=True)
class BoundCertificate:
    """A verified coefficient set with its reconstructed contraction.

    ``contraction_slack`` is the largest eigenvalue of U^dag U minus one.
    The bound fields stay None until records are folded in by
    :func:`bound_from_visibilities`.
    """

    alphas: dict[tuple[str, str], complex]
    u_hat: np.ndarray = field(repr=False)
    contraction_slack: float
    vg_lower: float | None = None
    d_upper: float | None = None
    sigma_vg: float | None = None
    sigma_d: float | None = None

    def __post_init__(self):
        if self.vg_lower is not None:
            expected = float(np.sqrt(max(1.0 - self.vg_lower**2, 0.0)))
            if abs(self.d_upper - expected) > 1e-12:
                raise DimensionError("d_upper != sqrt(1 - vg_lower^2) within 1e-12")


def _support_projector(s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(projector onto range, pseudo-inverse) of a Hermitian PSD matrix."""
    w, v = np.linalg.eigh(hermitian_part(s))
    cutoff = max(w.max(), 0.0) * 1e-10 + 1e-300
    mask = w > cutoff
    proj = (v[:, mask]) @ v[:, mask].conj().T
    inv = (v[:, mask] / w[mask]) @ v[:, mask].conj().T
    return proj, inv


def verify_alpha_constraint(
    alphas: dict[tuple[str, str], complex],
    preps: dict[str, tuple[np.ndarray, np.ndarray]],
    filters: dict[str, FilterPair],
    rho0: np.ndarray,
    rho1: np.ndarray,
    tol: float = 1e-8,
) -> BoundCertificate:
    """Check that the coefficient set factorizes through a contraction.

    Builds L = sum alpha (|psi0><psi1|)^T x |chi1><chi0|, verifies that its
    row/column supports lie inside the supports of the sqrt(rho)^T factors,
    reconstructs U through pseudo-inverses and reports the contraction slack.

    Raises :class:`SupportError` if the factorization does not exist and
    :class:`ContractionError` if the slack exceeds ``tol``.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    rho1 = np.asarray(rho1, dtype=complex)
    d = rho0.shape[0]
    eye = np.eye(d)

    left = np.zeros((d * d, d * d), dtype=complex)
    for (mu, nu), alpha in alphas.items():
        if mu not in preps:
            raise DimensionError(f"coefficient references unknown preparation {mu!r}")
        if nu not in filters:
            raise DimensionError(f"coefficient references unknown filter {nu!r}")
        psi0, psi1 = preps[mu]
        filt = filters[nu]
        term = np.kron(
            np.outer(psi0, np.conj(psi1)).T,
            np.outer(filt.chi1, np.conj(filt.chi0)),
        )
        left += alpha * term

    s0t = matrix_sqrt(rho0).T
    s1t = matrix_sqrt(rho1).T
    p0, inv0 = _support_projector(s0t)
    p1, inv1 = _support_projector(s1t)

    norm_l = np.linalg.norm(left)
    projected = np.kron(p1, eye) @ left @ np.kron(p0, eye)
    if np.linalg.norm(left - projected) > tol * max(norm_l, 1e-12):
        raise SupportError(
            "combination leaks outside the support of the preparation states; "
            "no contraction factorization exists"
        )

    u_hat = np.kron(inv1, eye) @ left @ np.kron(inv0, eye)
    gram = u_hat.conj().T @ u_hat
    slack = float(np.linalg.eigvalsh(hermitian_part(gram)).max() - 1.0)
    if slack > tol:
        raise ContractionError(f"contraction violated: slack {slack:.3e} > tol {tol:.1e}")
    return BoundCertificate(alphas=dict(alphas), u_hat=u_hat, contraction_slack=slack)


def bound_from_visibilities(cert: BoundCertificate, records) -> BoundCertificate:
    """Fold measured fractional visibilities into a verified certificate.

    vg_lower = |sum alpha V| clamped to [0, 1]; its uncertainty is the linear
    worst-case sum of the record uncertainties, and the distinguishability
    bound follows as sqrt(1 - vg_lower^2) with the delta-method sigma.
    """
    recs = _record_map(records)
    total = 0.0 + 0.0j
    sigma = 0.0
    for key, alpha in cert.alphas.items():
        if key not in recs:
            raise DimensionError(f"missing fractional-visibility record for {key}")
        total += alpha * recs[key].visibility
        sigma += abs(alpha) * recs[key].sigma_v
    vg = float(min(abs(total), 1.0))
    d_up = float(np.sqrt(max(1.0 - vg**2, 0.0)))
    if sigma == 0.0:
        sigma_d = 0.0
    else:
        # delta method; capped because it degenerates as the bound reaches 0
        sigma_d = float(min(vg / max(d_up, 1e-12) * sigma, 1.0))
    return replace(cert, vg_lower=vg, d_upper=d_up, sigma_vg=float(sigma), sigma_d=sigma_d)


def _complete_basis_check(vectors: list[np.ndarray], which: str) -> None:
    d = vectors[0].size
    if len(vectors) != d:
        raise DimensionError(
            f"{which} filters do not form a complete basis ({len(vectors)} vectors in dim {d})"
        )
    stack = np.array(vectors)
    gram = stack.conj() @ stack.T
    if np.max(np.abs(gram - np.eye(d))) > ATOL_DERIVED:
        raise DimensionError(f"{which} filter states are not orthonormal within 1e-9")


def orthonormal_filter_bound(records, filters: dict[str, FilterPair]) -> float:
    """Visibility bound sum_nu |V^nu| for a single preparation filtered in
    complete orthonormal bases in both arms, clamped to [0, 1]."""
    recs = list(_record_map(records).values())
    mus = {r.mu for r in recs}
    if len(mus) != 1:
        raise DimensionError(f"expected records for a single preparation, got {sorted(mus)}")
    nus = [r.nu for r in recs]
    if len(set(nus)) != len(nus):
        raise DimensionError("duplicate filter labels in records")
    _complete_basis_check([filters[nu].chi0 for nu in nus], "upper-arm")
    _complete_basis_check([filters[nu].chi1 for nu in nus], "lower-arm")
    return float(min(sum(abs(r.visibility) for r in recs), 1.0))


def swap_estimate(records) -> float:
    """Four-term bound (|V^{hh,hh}| + |V^{hv,vh}| + |V^{vh,hv}| + |V^{vv,vv}|)/2
    for the completely mixed preparation, clamped to [0, 1]."""
    recs = _record_map(records)
    missing = [k for k in SWAP_KEYS if k not in recs]
    if missing:
        raise DimensionError(f"missing records for {missing}")
    return float(min(0.5 * sum(abs(recs[k].visibility) for k in SWAP_KEYS), 1.0))


def rectilinear_preparations() -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """The four pure h/v preparation pairs, labelled hh, hv, vh, vv."""
    h, v = ket(0, 2), ket(1, 2)
    states = {"h": h, "v": v}
    return {a + b: (states[a], states[b]) for a in "hv" for b in "hv"}


def rectilinear_filters() -> dict[str, FilterPair]:
    """The four h/v filter pairs; label xy filters x in the upper arm and y
    in the lower arm."""
    h, v = ket(0, 2), ket(1, 2)
    states = {"h": h, "v": v}
    return {
        a + b: FilterPair(states[a], states[b], label=a + b) for a in "hv" for b in "hv"
    }


def _optimal_phase(value: complex) -> complex:
    mag = abs(value)
    return value.conjugate() / mag if mag > 0 else 1.0 + 0.0j


def swap_certificate(records, tol: float = 1e-8) -> BoundCertificate:
    """Verified four-term certificate with analytically optimal phases.

    The coefficient set alpha = exp(i theta)/2 on the four swap cells
    reconstructs a unitary U for any phases; choosing theta = -arg V aligns
    every term, so the bound equals :func:`swap_estimate`.
    """
    recs = _record_map(records)
    alphas = {}
    for key in SWAP_KEYS:
        if key not in recs:
            raise DimensionError(f"missing record for {key}")
        alphas[key] = 0.5 * _optimal_phase(recs[key].visibility)
    eye2 = np.eye(2, dtype=complex) / 2
    cert = verify_alpha_constraint(
        alphas, rectilinear_preparations(), rectilinear_filters(), eye2, eye2, tol=tol
    )
    return bound_from_visibilities(cert, recs)


def single_preparation_certificate(
    mu: str,
    records,
    preps: dict[str, tuple[np.ndarray, np.ndarray]] | None = None,
    filters: dict[str, FilterPair] | None = None,
    tol: float = 1e-8,
) -> BoundCertificate:
    """Verified certificate for one pure preparation with complete
    orthonormal filter bases; the bound equals sum_nu |V^nu|."""
    preps = rectilinear_preparations() if preps is None else preps
    filters = rectilinear_filters() if filters is None else filters
    recs = {k: r for k, r in _record_map(records).items() if r.mu == mu}
    if not recs:
        raise DimensionError(f"no records for preparation {mu!r}")
    nus = [r.nu for r in recs.values()]
    _complete_basis_check([filters[nu].chi0 for nu in nus], "upper-arm")
    _complete_basis_check([filters[nu].chi1 for nu in nus], "lower-arm")
    alphas = {key: _optimal_phase(rec.visibility) for key, rec in recs.items()}
    psi0, psi1 = preps[mu]
    rho0 = np.outer(psi0, psi0.conj())
    rho1 = np.outer(psi1, psi1.conj())
    cert = verify_alpha_constraint(alphas, preps, filters, rho0, rho1, tol=tol)
    return bound_from_visibilities(cert, recs)


# ---------------------------------------------------------------------------
# Record CSV and certificate reports

_CSV_FIELDS = ["mu", "nu", "p", "re_V", "im_V", "sigma_p", "sigma_V"]


def write_records_csv(records, path_or_buffer) -> None:
    recs = list(_record_map(records).values())

    def write_to(fh):
        writer = csv.writer(fh)
        writer.writerow(_CSV_FIELDS)
        for r in recs:
            writer.writerow([
                r.mu, r.nu, repr(float(r.p)),
                repr(float(r.visibility.real)), repr(float(r.visibility.imag)),
                repr(float(r.sigma_p)), repr(float(r.sigma_v)),
            ])

    if isinstance(path_or_buffer, io.TextIOBase):
        write_to(path_or_buffer)
    else:
        with open(path_or_buffer, "w", newline="", encoding="ascii") as fh:
            write_to(fh)


def read_records_csv(path_or_buffer) -> list[FractionalVisibilityRecord]:
    def read_from(fh):
        reader = csv.DictReader(fh)
        if reader.fieldnames != _CSV_FIELDS:
            raise ValueError(
                f"unexpected CSV header {reader.fieldnames}, expected {_CSV_FIELDS}"
            )
        out = []
        for row in reader:
            out.append(FractionalVisibilityRecord(
                mu=row["mu"], nu=row["nu"], p=float(row["p"]),
                visibility=complex(float(row["re_V"]), float(row["im_V"])),
                sigma_p=float(row["sigma_p"]), sigma_v=float(row["sigma_V"]),
            ))
        return out

    if isinstance(path_or_buffer, io.TextIOBase):
        return read_from(path_or_buffer)
    with open(path_or_buffer, "r", newline="", encoding="ascii") as fh:
        return read_from(fh)


def certificate_report(cert: BoundCertificate) -> str:
    """Human-readable summary of a certificate and its bounds."""
    lines = ["certificate"]
    for (mu, nu), alpha in sorted(cert.alphas.items()):
        lines.append(f"  alpha[{mu},{nu}] = {alpha.real:+.6f}{alpha.imag:+.6f}j")
    lines.append(f"  contraction slack = {cert.contraction_slack:.3e}")
    if cert.vg_lower is not None:
        lines.append(f"  V_G >= {cert.vg_lower:.4f} +/- {cert.sigma_vg:.4f}")
        lines.append(f"  D   <= {cert.d_upper:.4f} +/- {cert.sigma_d:.4f}")
    return "\n".join(lines)
