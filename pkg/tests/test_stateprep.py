import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from structblock.simcore import Circuit, Gate, h_gate
from structblock.stateprep import (
    AmplitudeOracle,
    PrepError,
    amplify_fixed_point,
    amplitude_estimate,
    chebyshev_T,
    estimate_from_probability,
    fixed_point_phase_schedule,
    fixed_point_success,
    long_aa,
    long_parameters,
    on_success,
    prep_gate,
    principal_sqrt,
    qram_build,
    qram_prep,
    qram_row_maps,
    required_L,
    sparse_support_circuit,
    sparse_support_prep,
    steerable_prep,
    support_grid,
    target_state,
)


def ry(p_good):
    th = np.arccos(np.sqrt(p_good))
    return np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]], dtype=complex)


def amplified(P0, l, delta):
    Ua = Circuit(1, (Gate((0,), ry(P0)),))
    out = amplify_fixed_point(Ua, 0, [0], fixed_point_phase_schedule(l, delta)).apply_batch(np.array([1, 0], complex))
    return out


def test_schedule_l3():
    s = fixed_point_phase_schedule(3, 0.1)
    assert s.L == 7 and len(s.phi) + len(s.varphi) == 6
    assert np.all(np.isfinite(s.phi))
    assert np.allclose(s.varphi, s.phi[::-1])
    assert abs(abs(amplified(0.25, 3, 0.1)[0]) ** 2 - fixed_point_success(0.25, 7, 0.1)) <= 1e-9


def test_schedule_rejects_bad_delta():
    for bad in (0, 1, -0.5, 2):
        with pytest.raises(PrepError):
            fixed_point_phase_schedule(2, bad)


def test_p0_one_is_unchanged():
    out = amplified(1.0, 3, 0.1)
    assert abs(abs(out[0]) - 1) < 1e-12


def test_chebyshev_values():
    assert chebyshev_T(3, 0.5) == pytest.approx(4 * 0.125 - 1.5)
    assert chebyshev_T(3, 2.0) == pytest.approx(4 * 8 - 6)
    assert chebyshev_T(2, -3.0) == pytest.approx(17)


def test_required_L_guarantees_success():
    for delta in (0.01, 0.05, 0.1, 0.3):
        for P_min in (0.001, 0.01, 0.1, 0.5, 1.0):
            L = required_L(P_min, delta)
            assert L % 2 == 1
            for P0 in (P_min, min(1.0, 2 * P_min), 1.0):
                assert fixed_point_success(P0, L, delta) >= 1 - delta ** 2 - 1e-12


def test_required_L_frozen():
    assert required_L(0.25, 0.1) == 7
    assert required_L(1.0, 0.1) == 3


def test_amplitude_estimate_edges():
    one = Circuit(1, ())
    est = amplitude_estimate(one, 0, seed=0)
    assert est.estimate == pytest.approx(1.0)
    zero = Circuit(1, (Gate((0,), np.array([[0, 1], [1, 0]], complex)),))
    est0 = amplitude_estimate(zero, 0, seed=0)
    assert est0.estimate == 0 and est0.lower == 0 and est0.zero_flag


def test_amplitude_estimate_confidence():
    rng = np.random.default_rng(0)
    hits = single_hits = 0
    trials = 200
    for _ in range(trials):
        P0 = rng.uniform(0.1, 0.9)
        est = estimate_from_probability(P0, 0.5, rng)
        one = estimate_from_probability(P0, 0.5, rng, runs=1)
        hits += abs(est.estimate - P0) <= 0.5 * P0
        single_hits += abs(one.estimate - P0) <= 0.5 * P0
        assert est.lower == pytest.approx(est.estimate / 1.5)
    assert single_hits / trials >= 0.81
    assert hits / trials >= 0.81


def test_steerable_all_ones():
    state, rep = steerable_prep(AmplitudeOracle(np.ones(8)), 8, delta=0.1, eps_p=1e-3, seed=0)
    assert rep.P0 == pytest.approx(1.0) and rep.L == 1
    assert np.allclose(on_success(state).amps, np.full(8, 1 / np.sqrt(8)))


def test_steerable_principal_root_branch():
    x = np.ones(4, dtype=complex)
    x[2] = -1
    state, _ = steerable_prep(AmplitudeOracle(x), 4, delta=0.1, eps_p=1e-3, seed=0)
    amps = on_success(state).amps
    assert amps[2] / amps[0] == pytest.approx(1j)
    assert principal_sqrt([-1])[0] == pytest.approx(1j)
    assert principal_sqrt([complex(-1, -0.0)])[0] == pytest.approx(1j)


def test_steerable_report_bounds(rng):
    x = rng.normal(size=16) + 1j * rng.normal(size=16)
    oracle = AmplitudeOracle(x)
    state, rep = steerable_prep(oracle, 16, delta=0.1, eps_p=1e-3, seed=1)
    assert 0 <= rep.P0 <= 1 and 0 <= rep.P_L <= 1
    assert rep.P_L >= 1 - 0.1 ** 2
    assert rep.P_L == pytest.approx(rep.P_L_formula, abs=1e-6)
    assert rep.fidelity >= 1 - 1e-3
    assert rep.queries == oracle.queries > 0
    assert abs(np.vdot(target_state(x), on_success(state).amps)) ** 2 >= 1 - 1e-3


def test_steerable_errors():
    with pytest.raises(PrepError):
        steerable_prep(AmplitudeOracle(np.zeros(4)), 4)
    with pytest.raises(PrepError):
        steerable_prep(AmplitudeOracle(np.ones(4), bits=2), 4, eps_p=1e-3)
    with pytest.raises(PrepError):
        steerable_prep(AmplitudeOracle(np.ones(4)), 8)


def test_oracle_from_config_formula():
    o = AmplitudeOracle.from_config({"kind": "formula", "values": "np.cos(pi * i / 4) + j"}, n=4)
    assert o.values[0] == pytest.approx(1 + 1j)
    t = AmplitudeOracle.from_config({"values": [[1, 2], 3]})
    assert t.values[0] == 1 + 2j and t.values[1] == 3
    with pytest.raises(Exception):
        AmplitudeOracle.from_config({"kind": "formula", "values": "__import__('os')"}, n=4)


def test_long_examples():
    s = np.array([1, 0], complex)
    assert np.allclose(long_aa(s, [True, False], 1.0).amps, s)
    s2 = np.array([1, 1], complex) / np.sqrt(2)
    iters, _ = long_parameters(0.5)
    assert iters == 1
    assert abs(long_aa(s2, [True, False], 1 / np.sqrt(2)).amps[0]) ** 2 == pytest.approx(1, abs=1e-12)
    d = 3
    p = (d + 1) / (2 * d)
    s3 = np.array([np.sqrt(p), np.sqrt(1 - p)], complex)
    assert abs(long_aa(s3, [True, False], np.sqrt(p)).amps[0]) ** 2 == pytest.approx(1, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 0.99))
def test_long_reaches_one(p):
    s = np.array([np.sqrt(p), np.sqrt(1 - p)], complex)
    assert abs(long_aa(s, [True, False], np.sqrt(p)).amps[0]) ** 2 == pytest.approx(1, abs=1e-10)


def test_sparse_support_full_grid():
    n = 4
    state = sparse_support_prep(lambda i, m: m, n, n)
    grid = support_grid(state, n)
    assert np.allclose(np.abs(grid), 1 / np.sqrt(n + (n - 1) * n), atol=1e-12)


def test_sparse_support_diagonal():
    n = 4
    state = sparse_support_prep(lambda i, m: i, n, 1)
    grid = support_grid(state, n)
    mask = np.zeros((n, n), bool)
    mask[0, :] = True
    mask[np.arange(1, n), np.arange(1, n)] = True
    assert np.allclose(np.abs(grid[mask]), 1 / np.sqrt(7), atol=1e-12)
    assert np.allclose(grid[~mask], 0, atol=1e-12)
    assert np.linalg.norm(grid) == pytest.approx(1, abs=1e-12)


def test_sparse_support_stage1_probability():
    n, d = 8, 3
    _, _, stats = sparse_support_circuit(lambda i, m: (i + m) % n, n, d)
    w = 3
    uniform_d = np.zeros(n)
    uniform_d[:d] = 1
    stage1 = Circuit(1 + 2 * w, (h_gate(0), *[h_gate(q) for q in range(1, w + 1)],
                                 prep_gate(list(range(w + 1, 2 * w + 1)), uniform_d)))
    v = np.zeros(2 ** stage1.m, complex)
    v[0] = 1
    psi = stage1.apply_batch(v).reshape(2, n, n)
    good = np.sum(np.abs(psi[1]) ** 2) + np.sum(np.abs(psi[0, :, 0]) ** 2)
    assert good == pytest.approx((d + 1) / (2 * d))
    assert stats["stage1"] == pytest.approx(good)


def test_sparse_support_rejects_collisions():
    with pytest.raises(PrepError):
        sparse_support_prep(lambda i, m: 0, 4, 2)


def test_qram_tree_example():
    t = qram_build([1, 1j, -2, 0])
    assert t.nodes() == [4.0, 2.0, 2.0]
    assert t.root == 4
    assert qram_build([1]).root == 1


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([2, 4, 8, 16]), st.integers(0, 2 ** 32 - 1))
def test_qram_root_is_l1(n, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=n) + 1j * rng.normal(size=n)
    t = qram_build(x)
    t.check()
    assert abs(t.root - np.abs(x).sum()) <= 1e-12 * max(1, t.root)


def test_qram_prep_examples():
    assert np.allclose(qram_prep(qram_build(np.ones(4))).amps, 0.5)
    amps = qram_prep(qram_build([1, 1j, -2, 0])).amps
    ref = 0.5 * np.array([1, np.exp(1j * np.pi / 4), np.sqrt(2) * 1j, 0])
    assert np.allclose(amps, ref, atol=1e-12)


def test_qram_prep_precision(rng):
    for _ in range(10):
        x = rng.normal(size=16) + 1j * rng.normal(size=16)
        amps = qram_prep(qram_build(x), eps_p=1e-3).amps
        assert abs(np.vdot(target_state(x), amps)) ** 2 >= 1 - 1e-3


def _row_prep(G, eps_p=None):
    n = G.shape[0]
    rows = [qram_build(G[i]) for i in range(n)]
    norm = qram_build(np.abs(G).sum(axis=1))
    P, _, Q = qram_row_maps(rows, norm, eps_p)
    v = np.zeros(n * n, complex)
    v[0] = 1
    return Q.then(P).apply_batch(v)


def test_row_maps_flattened_vector(rng):
    G = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    assert np.allclose(_row_prep(G), target_state(G.ravel()), atol=1e-12)


def test_row_maps_single_row_and_equal_norms():
    G = np.zeros((4, 4))
    G[2] = [1, 2, 0, 1]
    out = _row_prep(G + 1e-300).reshape(4, 4)
    assert np.sum(np.abs(out[2]) ** 2) == pytest.approx(1)
    n = 4
    rows = [qram_build(np.eye(n)[i] * 3) for i in range(n)]
    _, _, Q = qram_row_maps(rows, qram_build(np.full(n, 3.0)))
    v = np.zeros(n * n, complex)
    v[0] = 1
    out = Q.apply_batch(v).reshape(n, n)
    assert np.allclose(np.abs(out[:, 0]), 0.5)
