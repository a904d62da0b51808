import io

import numpy as np
import pytest

from conftest import (
    measured_records,
    random_density,
    random_ket,
    random_orthonormal_filters,
)
from whichway import (
    ContractionError,
    DimensionError,
    FilterPair,
    FractionalVisibilityRecord,
    PathChannel,
    Preparation,
    SupportError,
    bound_from_visibilities,
    certificate_report,
    detection_probabilities,
    fractional_visibility,
    generalized_visibility,
    identity_channel,
    ket,
    orthonormal_filter_bound,
    pauli_mixture_channel,
    random_path_channel,
    read_records_csv,
    rectilinear_filters,
    rectilinear_preparations,
    single_preparation_certificate,
    swap_certificate,
    swap_estimate,
    verify_alpha_constraint,
    write_records_csv,
)

H, V = ket(0, 2), ket(1, 2)


def test_detection_probabilities_extremes():
    assert detection_probabilities(0.5, 0.5, 0.0) == pytest.approx((0.5, 0.0))
    assert detection_probabilities(0.5, 0.5, np.pi) == pytest.approx((0.0, 0.5))
    p_plus, p_minus = detection_probabilities(0.7, 0.0, 1.3)
    assert p_plus == p_minus == pytest.approx(0.35)


def test_detection_probabilities_sum_and_positivity():
    rng = np.random.default_rng(0)
    for _ in range(50):
        p = rng.uniform(0, 1)
        v = rng.uniform(0, p) * np.exp(2j * np.pi * rng.random())
        phi = rng.uniform(0, 2 * np.pi)
        a, b = detection_probabilities(p, v, phi)
        assert a >= 0 and b >= 0
        assert a + b == pytest.approx(p, abs=1e-12)


def test_detection_probabilities_contract_violations():
    with pytest.raises(DimensionError):
        detection_probabilities(0.4, 0.5, 0.0)
    with pytest.raises(DimensionError):
        detection_probabilities(1.2, 0.1, 0.0)


def test_fractional_visibility_grid_pattern():
    ch = pauli_mixture_channel()
    preps = rectilinear_preparations()
    filters = rectilinear_filters()
    expected_half = {("hh", "hh"), ("hv", "vh"), ("vh", "hv"), ("vv", "vv")}
    for mu in preps:
        for nu in filters:
            rec = fractional_visibility(ch, preps[mu], filters[nu], mu=mu)
            assert rec.p == pytest.approx(0.5, abs=1e-12)
            target = 0.5 if (mu, nu) in expected_half else 0.0
            assert abs(rec.visibility) == pytest.approx(target, abs=1e-12)


def test_fractional_visibility_identity_channel_full_interference():
    psi = random_ket(2, np.random.default_rng(1))
    filt = FilterPair(psi, psi, label="same")
    rec = fractional_visibility(identity_channel(2), (psi, psi), filt)
    assert rec.p == pytest.approx(1.0, abs=1e-12)
    assert rec.visibility == pytest.approx(1.0, abs=1e-12)


def test_fractional_visibility_bounded_by_probability():
    rng = np.random.default_rng(2)
    for _ in range(50):
        d = int(rng.integers(2, 4))
        ch = random_path_channel(d, int(rng.integers(1, 4)), seed=int(rng.integers(1e6)))
        pair = (random_ket(d, rng), random_ket(d, rng))
        filt = FilterPair(random_ket(d, rng), random_ket(d, rng), label="r")
        rec = fractional_visibility(ch, pair, filt)
        assert abs(rec.visibility) <= rec.p + 1e-10


def test_record_validation():
    with pytest.raises(DimensionError):
        FractionalVisibilityRecord(mu="a", nu="b", p=0.1, visibility=0.5)
    with pytest.raises(DimensionError):
        FractionalVisibilityRecord(mu="a", nu="b", p=1.4, visibility=0.0)
    # 3-sigma envelope admits noisy records
    FractionalVisibilityRecord(mu="a", nu="b", p=0.1, visibility=0.11, sigma_v=0.01)


def test_swap_alpha_family_reconstructs_a_unitary():
    alphas = {k: 0.5 * np.exp(1j * t) for k, t in zip(
        (("hh", "hh"), ("hv", "vh"), ("vh", "hv"), ("vv", "vv")),
        (0.3, -1.2, 2.5, 0.0),
    )}
    cert = verify_alpha_constraint(
        alphas, rectilinear_preparations(), rectilinear_filters(),
        np.eye(2) / 2, np.eye(2) / 2,
    )
    gram = cert.u_hat.conj().T @ cert.u_hat
    np.testing.assert_allclose(gram, np.eye(4), atol=1e-12)
    assert abs(cert.contraction_slack) <= 1e-9


def test_single_preparation_alpha_family_is_contraction():
    rng = np.random.default_rng(3)
    preps = {"m": (random_ket(2, rng), random_ket(2, rng))}
    filters = random_orthonormal_filters(2, rng)
    alphas = {("m", nu): np.exp(1j * rng.uniform(0, 2 * np.pi)) for nu in filters}
    psi0, psi1 = preps["m"]
    cert = verify_alpha_constraint(
        alphas, preps, filters,
        np.outer(psi0, psi0.conj()), np.outer(psi1, psi1.conj()),
    )
    assert cert.contraction_slack <= 1e-9


def test_zero_alphas_give_slack_minus_one():
    alphas = {("hh", "hh"): 0.0}
    cert = verify_alpha_constraint(
        alphas, rectilinear_preparations(), rectilinear_filters(),
        np.eye(2) / 2, np.eye(2) / 2,
    )
    assert cert.contraction_slack == pytest.approx(-1.0, abs=1e-12)
    assert np.max(np.abs(cert.u_hat)) == 0.0


def test_support_violation_detected():
    # preparation supported on |h> only, but the combination references |v>
    preps = {"m": (V, V)}
    filters = rectilinear_filters()
    rho = np.outer(H, H.conj())
    with pytest.raises(SupportError):
        verify_alpha_constraint({("m", "hh"): 1.0}, preps, filters, rho, rho)


def test_contraction_violation_detected():
    alphas = {("hh", "hh"): 3.0}
    with pytest.raises(ContractionError):
        verify_alpha_constraint(
            alphas, rectilinear_preparations(), rectilinear_filters(),
            np.eye(2) / 2, np.eye(2) / 2,
        )


def test_bound_from_measured_records():
    records = measured_records()
    assert swap_estimate(records) == pytest.approx(0.9605, abs=1e-12)
    cert = swap_certificate(records)
    assert cert.vg_lower == pytest.approx(0.9605, abs=1e-12)
    assert cert.d_upper == pytest.approx(np.sqrt(1 - 0.9605**2), abs=1e-12)
    assert cert.sigma_vg == pytest.approx(0.006, abs=1e-12)
    assert cert.sigma_d == pytest.approx(0.0207, abs=5e-4)
    assert cert.vg_lower <= swap_estimate(records) + 1e-12


def test_bound_zero_and_ideal_records():
    zero = [
        FractionalVisibilityRecord(mu=m, nu=n, p=0.5, visibility=0.0)
        for (m, n) in (("hh", "hh"), ("hv", "vh"), ("vh", "hv"), ("vv", "vv"))
    ]
    cert = swap_certificate(zero)
    assert cert.vg_lower == 0.0 and cert.d_upper == 1.0

    ch = pauli_mixture_channel()
    preps, filters = rectilinear_preparations(), rectilinear_filters()
    ideal = [
        fractional_visibility(ch, preps[m], filters[n], mu=m)
        for (m, n) in (("hh", "hh"), ("hv", "vh"), ("vh", "hv"), ("vv", "vv"))
    ]
    cert = swap_certificate(ideal)
    assert cert.vg_lower == pytest.approx(1.0, abs=1e-12)
    assert cert.d_upper == pytest.approx(0.0, abs=1e-12)


def test_missing_records_raise():
    with pytest.raises(DimensionError):
        swap_estimate(measured_records()[:2])
    cert = verify_alpha_constraint(
        {("hh", "hh"): 0.5}, rectilinear_preparations(), rectilinear_filters(),
        np.eye(2) / 2, np.eye(2) / 2,
    )
    with pytest.raises(DimensionError):
        bound_from_visibilities(cert, [])


def test_orthonormal_filter_bound_measured_row():
    row = [r for r in measured_records() if r.mu == "hh"]
    assert orthonormal_filter_bound(row, rectilinear_filters()) == pytest.approx(
        0.580, abs=1e-12
    )
    cert = single_preparation_certificate("hh", row)
    assert cert.vg_lower == pytest.approx(0.580, abs=1e-12)
    assert cert.d_upper == pytest.approx(np.sqrt(1 - 0.580**2), abs=1e-12)
    assert cert.sigma_d == pytest.approx(0.0043, abs=2e-4)


def test_orthonormal_filter_bound_coherent_dephasing_reaches_one():
    # channel leaving arm contents alone but imprinting per-basis phases on
    # the lower arm: full visibility is recoverable by sorting components
    d = 3
    phases = np.exp(1j * np.array([0.4, -1.1, 2.2]))
    ch = PathChannel(d, ((np.eye(d, dtype=complex), np.diag(phases)),))
    psi = np.ones(d, dtype=complex) / np.sqrt(d)
    filters = {
        f"f{k}": FilterPair(ket(k, d), ket(k, d), label=f"f{k}") for k in range(d)
    }
    records = [
        fractional_visibility(ch, (psi, psi), filters[f"f{k}"], mu="m")
        for k in range(d)
    ]
    assert all(abs(abs(r.visibility) - r.p) < 1e-12 for r in records)
    assert orthonormal_filter_bound(records, filters) == pytest.approx(1.0, abs=1e-12)


def test_orthonormal_filter_bound_zero_records():
    filters = rectilinear_filters()
    zero = [
        FractionalVisibilityRecord(mu="m", nu=nu, p=0.5, visibility=0.0)
        for nu in ("hh", "vv")
    ]
    assert orthonormal_filter_bound(zero, filters) == 0.0


def test_orthonormal_filter_bound_rejects_incomplete_basis():
    filters = rectilinear_filters()
    rows = [FractionalVisibilityRecord(mu="m", nu="hh", p=0.5, visibility=0.1)]
    with pytest.raises(DimensionError):
        orthonormal_filter_bound(rows, filters)
    # hh and hv share the upper-arm filter |h>: not orthonormal
    rows = [
        FractionalVisibilityRecord(mu="m", nu=nu, p=0.5, visibility=0.1)
        for nu in ("hh", "hv")
    ]
    with pytest.raises(DimensionError):
        orthonormal_filter_bound(rows, filters)


def test_global_phase_invariance_of_bound():
    records = measured_records()
    cert = swap_certificate(records)
    rotated = {k: a * np.exp(0.731j) for k, a in cert.alphas.items()}
    cert2 = verify_alpha_constraint(
        rotated, rectilinear_preparations(), rectilinear_filters(),
        np.eye(2) / 2, np.eye(2) / 2,
    )
    cert2 = bound_from_visibilities(cert2, records)
    assert cert2.vg_lower == pytest.approx(cert.vg_lower, abs=1e-12)


def test_certificate_soundness_on_random_instances():
    from whichway import dilate, distinguishability, environment_states

    rng = np.random.default_rng(4)
    for _ in range(60):
        ch = random_path_channel(2, int(rng.integers(1, 4)), seed=int(rng.integers(1e6)))
        psi0, psi1 = random_ket(2, rng), random_ket(2, rng)
        filters = random_orthonormal_filters(2, rng)
        records = [
            fractional_visibility(ch, (psi0, psi1), filters[nu], mu="m")
            for nu in filters
        ]
        cert = single_preparation_certificate(
            "m", records, preps={"m": (psi0, psi1)}, filters=filters
        )
        prep = Preparation.pure(psi0, psi1)
        vg = generalized_visibility(ch, prep)
        assert cert.vg_lower <= vg + 1e-8
        # the which-way bound is sound against the dilation value
        d_true = distinguishability(*environment_states(dilate(ch), prep))
        assert cert.d_upper >= d_true - 1e-8


def test_general_certificates_with_full_rank_states():
    # the rectilinear rank-one terms span all operators on the two replicas,
    # so any contraction sandwiched between full-rank state factors yields a
    # decomposable, verifiable coefficient set
    from whichway import dilate, distinguishability, environment_states, matrix_sqrt

    rng = np.random.default_rng(6)
    preps = rectilinear_preparations()
    filters = rectilinear_filters()
    basis = {}
    for mu, (psi0, psi1) in preps.items():
        for nu, filt in filters.items():
            basis[(mu, nu)] = np.kron(
                np.outer(psi0, psi1.conj()).T, np.outer(filt.chi1, filt.chi0.conj())
            )
    for _ in range(25):
        rho0 = random_density(2, rng) * 0.98 + 0.01 * np.eye(2)
        rho1 = random_density(2, rng) * 0.98 + 0.01 * np.eye(2)
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        u = g / np.linalg.svd(g, compute_uv=False).max()  # operator norm 1
        left = np.kron(matrix_sqrt(rho1).T, np.eye(2)) @ u @ np.kron(
            matrix_sqrt(rho0).T, np.eye(2)
        )
        alphas = {
            key: complex(term.conj().reshape(-1) @ left.reshape(-1))
            for key, term in basis.items()
        }
        cert = verify_alpha_constraint(alphas, preps, filters, rho0, rho1)
        assert cert.contraction_slack <= 1e-8
        np.testing.assert_allclose(cert.u_hat, u, atol=1e-8)

        # soundness of the assembled bound against an arbitrary channel whose
        # arm inputs realize exactly these rho's
        ch = random_path_channel(2, int(rng.integers(1, 4)), seed=int(rng.integers(1e6)))
        records = {
            key: fractional_visibility(ch, preps[key[0]], filters[key[1]], mu=key[0])
            for key in alphas
        }
        full = bound_from_visibilities(cert, records)
        prep = _preparation_with_marginals(rho0, rho1, rng)
        vg = generalized_visibility(ch, prep)
        assert full.vg_lower <= vg + 1e-8
        d_true = distinguishability(*environment_states(dilate(ch), prep))
        assert full.d_upper >= d_true - 1e-8


def _preparation_with_marginals(rho0, rho1, rng):
    """An ensemble preparation whose per-arm marginals are exactly rho0, rho1
    (eigen-decompose each side and pair the eigenvectors independently)."""
    w0, v0 = np.linalg.eigh(rho0)
    w1, v1 = np.linalg.eigh(rho1)
    weights, pairs = [], []
    for i, wi in enumerate(w0):
        for j, wj in enumerate(w1):
            weights.append(wi * wj)
            pairs.append((v0[:, i], v1[:, j]))
    return Preparation.ensemble(weights, pairs)


def test_records_csv_round_trip(tmp_path):
    records = measured_records()
    path = tmp_path / "records.csv"
    write_records_csv(records, path)
    again = read_records_csv(path)
    assert {r.key for r in again} == {r.key for r in records}
    by_key = {r.key: r for r in again}
    for rec in records:
        back = by_key[rec.key]
        assert back.p == rec.p
        assert back.visibility == rec.visibility
        assert back.sigma_v == rec.sigma_v
    buf = io.StringIO()
    write_records_csv(records, buf)
    buf.seek(0)
    assert len(read_records_csv(buf)) == len(records)


def test_certificate_report_mentions_bounds():
    cert = swap_certificate(measured_records())
    text = certificate_report(cert)
    assert "0.9605" in text and "slack" in text
