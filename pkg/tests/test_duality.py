import numpy as np
import pytest

from conftest import random_density, random_ket, random_preparation, random_unitary
from whichway import (
    DimensionError,
    NumericalError,
    PathChannel,
    Preparation,
    brute_force_visibility,
    dilate,
    distinguishability,
    environment_states,
    explicit_transpose_dilation,
    fidelity,
    generalized_visibility,
    identity_channel,
    ket,
    pauli_mixture_channel,
    random_path_channel,
    replace_channel,
    transpose_channel,
    verify_inequality,
)

H, V = ket(0, 2), ket(1, 2)


def _env_projector(indices, dim=4):
    m = np.zeros((dim, dim), dtype=complex)
    for i in indices:
        m[i, i] = 0.5
    return m


def test_environment_states_horizontal_preparation():
    dil = explicit_transpose_dilation()
    e0, e1 = environment_states(dil, Preparation.pure(H, H))
    np.testing.assert_allclose(e0.matrix, _env_projector([0, 1]), atol=1e-10)
    np.testing.assert_allclose(e1.matrix, _env_projector([0, 2]), atol=1e-10)


def test_environment_states_vertical_preparation():
    dil = explicit_transpose_dilation()
    e0, e1 = environment_states(dil, Preparation.pure(V, V))
    np.testing.assert_allclose(e0.matrix, _env_projector([2, 3]), atol=1e-10)
    np.testing.assert_allclose(e1.matrix, _env_projector([1, 3]), atol=1e-10)


def test_environment_states_mixed_preparation_coincide():
    dil = explicit_transpose_dilation()
    e0, e1 = environment_states(dil, Preparation.completely_mixed(2))
    np.testing.assert_allclose(e0.matrix, np.eye(4) / 4, atol=1e-10)
    np.testing.assert_allclose(e1.matrix, np.eye(4) / 4, atol=1e-10)


def test_environment_states_via_replica_contraction():
    # independent route: d * Tr_{SS'} of the purified cross projector
    # weighted by the transposed arm state
    rng = np.random.default_rng(9)
    ch = random_path_channel(2, 3, seed=51)
    prep = random_preparation(2, rng)
    dil = dilate(ch)
    d, k = 2, ch.n_kraus
    phi = np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)
    for side, rho in ((0, prep.rho0), (1, prep.rho1)):
        vecs = []
        for a, b in ch.kraus_pairs:
            op = b if side else a
            vecs.append(np.kron(np.eye(d), op) @ phi)
        lam = np.zeros((d * d * k,), dtype=complex)
        for n, v in enumerate(vecs):
            lam += np.kron(v, ket(n, k))
        proj = np.outer(lam, lam.conj())
        weight = np.kron(rho.T, np.eye(d * k))
        contracted = proj @ weight
        t = contracted.reshape(d, d, k, d, d, k)
        env = d * np.einsum("abnabm->nm", t)
        direct = environment_states(dil, prep)[side].matrix
        np.testing.assert_allclose(env, direct, atol=1e-10)


def test_distinguishability_trivial_cases():
    rho = np.eye(4) / 4
    assert distinguishability(rho, rho) == 0.0
    p0 = np.outer(ket(0, 2), ket(0, 2).conj())
    p1 = np.outer(ket(1, 2), ket(1, 2).conj())
    assert distinguishability(p0, p1) == pytest.approx(1.0, abs=1e-12)
    assert distinguishability(_env_projector([0, 1]), _env_projector([0, 2])) == (
        pytest.approx(0.5, abs=1e-12)
    )
    with pytest.raises(DimensionError):
        distinguishability(np.eye(2) / 2, np.eye(3) / 3)


def test_visibility_identity_channel_is_one():
    rng = np.random.default_rng(10)
    for d in (2, 3):
        prep = random_preparation(d, rng)
        assert generalized_visibility(identity_channel(d), prep) == pytest.approx(
            1.0, abs=1e-9
        )


def test_visibility_replace_channel_is_fidelity():
    rng = np.random.default_rng(11)
    for _ in range(25):
        d = int(rng.integers(2, 4))
        prep = random_preparation(d, rng)
        ch = replace_channel(random_density(d, rng))
        assert generalized_visibility(ch, prep) == pytest.approx(
            fidelity(prep.rho0, prep.rho1), abs=1e-9
        )


def test_visibility_replace_orthogonal_pure_is_zero():
    ch = replace_channel(np.eye(2) / 2)
    prep = Preparation.pure(H, V)
    assert generalized_visibility(ch, prep) == pytest.approx(0.0, abs=1e-12)


def test_visibility_transpose_channel_closed_forms():
    ch = transpose_channel(2)
    rng = np.random.default_rng(12)
    prep = Preparation.pure(random_ket(2, rng), random_ket(2, rng))
    assert generalized_visibility(ch, prep) == pytest.approx(0.5, abs=1e-9)
    assert generalized_visibility(ch, Preparation.completely_mixed(2)) == (
        pytest.approx(1.0, abs=1e-9)
    )
    # general d: (1/d) ||sqrt(rho0)||_1 ||sqrt(rho1)||_1
    def root_eigenvalue_sum(rho):
        w = np.linalg.eigvalsh(rho)
        return np.sqrt(w[w > 1e-12]).sum()

    ch3 = transpose_channel(3)
    prep3 = random_preparation(3, rng)
    expected = root_eigenvalue_sum(prep3.rho0) * root_eigenvalue_sum(prep3.rho1) / 3
    assert generalized_visibility(ch3, prep3) == pytest.approx(expected, abs=1e-9)


def test_brute_force_matches_closed_forms():
    prep = Preparation.pure(H, H)
    res = brute_force_visibility(identity_channel(2), prep, seed=1)
    assert res.converged and res.value == pytest.approx(1.0, abs=1e-6)
    res = brute_force_visibility(transpose_channel(2), prep, seed=2)
    assert res.converged and res.value == pytest.approx(0.5, abs=1e-6)


def test_brute_force_matches_closed_form_on_random_channel():
    rng = np.random.default_rng(13)
    ch = random_path_channel(2, 3, seed=77)
    prep = random_preparation(2, rng)
    closed = generalized_visibility(ch, prep)
    res = brute_force_visibility(ch, prep, seed=3)
    assert res.converged
    assert res.value == pytest.approx(closed, abs=1e-6)
    assert res.value <= closed + 1e-6


def test_brute_force_rejects_large_dimensions():
    ch = identity_channel(5)
    prep = Preparation.completely_mixed(5)
    with pytest.raises(DimensionError):
        brute_force_visibility(ch, prep)


def test_brute_force_handles_rank_deficient_preparations():
    # orthogonal pure states under the replace channel: visibility exactly 0
    ch = replace_channel(np.eye(2) / 2)
    res = brute_force_visibility(ch, Preparation.pure(H, V), seed=4)
    assert res.value == pytest.approx(0.0, abs=1e-6)


def test_distinguishability_independent_of_kraus_representation():
    rng = np.random.default_rng(14)
    ch = random_path_channel(2, 3, seed=99)
    prep = random_preparation(2, rng)
    ref = distinguishability(*environment_states(dilate(ch), prep))
    for trial in range(5):
        w = random_unitary(3, rng)
        pairs = []
        for j in range(3):
            a = sum(w[j, k] * ch.kraus_pairs[k][0] for k in range(3))
            b = sum(w[j, k] * ch.kraus_pairs[k][1] for k in range(3))
            pairs.append((a, b))
        mixed = PathChannel(2, tuple(pairs))
        val = distinguishability(*environment_states(dilate(mixed), prep))
        assert val == pytest.approx(ref, abs=1e-9)


def test_verify_inequality_worked_cases():
    rep = verify_inequality(identity_channel(2), Preparation.pure(H, V))
    assert rep.distinguishability == pytest.approx(0.0, abs=1e-9)
    assert rep.visibility == pytest.approx(1.0, abs=1e-9)
    assert rep.slack == pytest.approx(0.0, abs=1e-9)

    ch = explicit_transpose_dilation().channel()
    rep = verify_inequality(ch, Preparation.pure(H, H))
    assert rep.distinguishability == pytest.approx(0.5, abs=1e-9)
    assert rep.visibility == pytest.approx(0.5, abs=1e-9)
    assert rep.slack == pytest.approx(0.5, abs=1e-9)

    rep = verify_inequality(replace_channel(np.eye(2) / 2), Preparation.pure(H, V))
    assert rep.distinguishability == pytest.approx(1.0, abs=1e-9)
    assert rep.visibility == pytest.approx(0.0, abs=1e-9)
    assert rep.slack == pytest.approx(0.0, abs=1e-9)


def test_spinless_limit_saturates_the_trade_off():
    # d = 1: channels act on scalars; the trade-off is tight for every channel
    rng = np.random.default_rng(15)
    prep = Preparation.pure(np.array([1.0]), np.array([1.0]))
    for _ in range(20):
        ch = random_path_channel(1, int(rng.integers(1, 5)), seed=int(rng.integers(1e6)))
        rep = verify_inequality(ch, prep)
        assert rep.slack == pytest.approx(0.0, abs=1e-9)


def test_quantities_stay_in_unit_interval():
    rng = np.random.default_rng(16)
    for _ in range(30):
        d = int(rng.integers(1, 4))
        ch = random_path_channel(d, int(rng.integers(1, 4)), seed=int(rng.integers(1e6)))
        prep = random_preparation(d, rng)
        rep = verify_inequality(ch, prep)
        assert 0.0 <= rep.distinguishability <= 1.0
        assert 0.0 <= rep.visibility <= 1.0


def test_visibility_routes_agree_on_random_inputs():
    from whichway.duality import _visibility_state_route, visibility_operator
    from whichway.linalg import trace_norm

    rng = np.random.default_rng(17)
    for _ in range(25):
        d = int(rng.integers(2, 4))
        ch = random_path_channel(d, int(rng.integers(1, 4)), seed=int(rng.integers(1e6)))
        prep = random_preparation(d, rng)
        sandwich = d * trace_norm(visibility_operator(ch, prep))
        state = _visibility_state_route(ch, prep)
        assert sandwich == pytest.approx(state, abs=1e-9)


def test_visibility_is_preparation_marginal_property():
    # only rho0, rho1 matter, not the ensemble realization
    ch = pauli_mixture_channel()
    four = Preparation.ensemble(
        [0.25] * 4, [(H, H), (H, V), (V, H), (V, V)]
    )
    two = Preparation.completely_mixed(2)
    assert generalized_visibility(ch, four) == pytest.approx(
        generalized_visibility(ch, two), abs=1e-12
    )


def test_dilation_dimension_mismatch_raises():
    dil = explicit_transpose_dilation()
    with pytest.raises(DimensionError):
        environment_states(dil, Preparation.pure(np.array([1.0]), np.array([1.0])))


def test_thread_safe_parallel_evaluation():
    # all operations are pure functions on immutable values; a parallel map
    # over a channel corpus must reproduce the serial results exactly
    from concurrent.futures import ThreadPoolExecutor

    rng = np.random.default_rng(99)
    corpus = []
    for _ in range(24):
        d = int(rng.integers(2, 4))
        ch = random_path_channel(d, int(rng.integers(1, 4)), seed=int(rng.integers(1e6)))
        corpus.append((ch, random_preparation(d, rng)))
    serial = [verify_inequality(ch, prep) for ch, prep in corpus]
    with ThreadPoolExecutor(max_workers=8) as pool:
        parallel = list(pool.map(lambda args: verify_inequality(*args), corpus))
    for a, b in zip(serial, parallel):
        assert a.distinguishability == b.distinguishability
        assert a.visibility == b.visibility


def test_duality_report_rejects_violations():
    from whichway import DualityReport

    with pytest.raises(NumericalError):
        DualityReport(distinguishability=0.9, visibility=0.9,
                      channel_id="x", preparation_id="y")
