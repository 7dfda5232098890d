import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcentroid import qsim

angles = st.floats(-4 * math.pi, 4 * math.pi, allow_nan=False)


def random_state(n, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return qsim.Statevector.from_amplitudes(v, normalize=True)


def random_unitary(rng):
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def full_matrix(n, controls, target, u):
    """Dense 2^n x 2^n oracle built by enumerating basis states."""
    dim = 1 << n
    m = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        bits = [(col >> (n - 1 - q)) & 1 for q in range(n)]
        if all(bits[q] == b for q, b in controls):
            for out_bit in (0, 1):
                nb = list(bits)
                nb[target] = out_bit
                row = int("".join(map(str, nb)), 2)
                m[row, col] += u[out_bit, bits[target]]
        else:
            m[col, col] = 1.0
    return m


def test_new_state():
    assert np.allclose(qsim.new_state(1).amps, [1, 0])
    st3 = qsim.new_state(3)
    assert st3.amps[0] == 1 and np.all(st3.amps[1:] == 0)
    with pytest.raises(qsim.SizeError):
        qsim.new_state(25)
    with pytest.raises(qsim.SizeError):
        qsim.new_state(0)


def test_rotation_examples():
    assert np.allclose(qsim.r(0, 1.234), np.eye(2), atol=1e-15)
    out = qsim.r(math.pi, 0) @ np.array([1, 0])
    assert abs(abs(out[1]) - 1) < 1e-15
    out = qsim.r(math.pi / 2, math.pi / 3) @ np.array([1, 0])
    expect = [math.cos(math.pi / 4), np.exp(1j * math.pi / 6) * math.sin(math.pi / 4)]
    assert np.allclose(out, expect, atol=1e-15)


@given(angles, angles)
def test_r_is_product_and_unitary(theta, phi):
    u = qsim.r(theta, phi)
    assert np.allclose(u, qsim.rz(phi / 2) @ qsim.ry(theta) @ qsim.rz(-phi / 2), atol=1e-14)
    assert qsim.is_unitary(u)


def test_apply_1q_examples():
    st1 = qsim.apply_1q(qsim.new_state(1), 0, qsim.PAULI_X)
    assert np.allclose(st1.amps, [0, 1])
    st1 = qsim.apply_1q(qsim.new_state(1), 0, qsim.HADAMARD)
    assert np.allclose(st1.amps, [1 / math.sqrt(2)] * 2)
    st1 = qsim.new_state(1)
    qsim.apply_1q(st1, 0, qsim.r(math.pi / 2, 0))
    qsim.apply_1q(st1, 0, qsim.r(-math.pi / 2, 0))
    assert np.allclose(st1.amps, [1, 0], atol=1e-12)
    with pytest.raises(qsim.QubitIndexError):
        qsim.apply_1q(qsim.new_state(2), 2, qsim.PAULI_X)


def test_cnot_and_mismatch():
    st2 = qsim.Statevector.from_amplitudes([0, 0, 1, 0])  # |10>
    qsim.apply_controlled(st2, [(0, qsim.CLOSED)], 1, qsim.PAULI_X)
    assert np.allclose(st2.amps, [0, 0, 0, 1])

    amps = np.zeros(16)
    amps[0b1100] = 1  # q0=1, q1=1, q2=0, q3=0
    st4 = qsim.Statevector.from_amplitudes(amps)
    qsim.apply_controlled(st4, [(1, 0), (2, 1), (3, 0)], 0, qsim.PAULI_X)
    assert np.allclose(st4.amps, amps)


def test_controlled_against_matrix_oracle():
    controls = [(0, 0), (1, 1), (2, 0)]
    oracle = full_matrix(4, controls, 3, qsim.PAULI_X)
    for basis in range(16):
        amps = np.zeros(16, dtype=complex)
        amps[basis] = 1
        st4 = qsim.Statevector(4, amps.copy())
        qsim.apply_controlled(st4, controls, 3, qsim.PAULI_X)
        assert np.allclose(st4.amps, oracle @ amps)
    # the |010> branch is the only one flipped
    flipped = [b for b in range(16) if not np.allclose(oracle[:, b], np.eye(16)[:, b])]
    assert flipped == [0b0100, 0b0101]


def test_controlled_random_against_oracle():
    rng = np.random.default_rng(7)
    for trial in range(20):
        n = 5
        u = random_unitary(rng)
        qs = rng.permutation(n)
        target = int(qs[0])
        controls = [(int(q), int(rng.integers(2))) for q in qs[1:1 + rng.integers(0, 4)]]
        st5 = random_state(n, trial)
        expect = full_matrix(n, controls, target, u) @ st5.amps
        qsim.apply_controlled(st5, controls, target, u)
        assert np.allclose(st5.amps, expect, atol=1e-12)


def test_controlled_rejects_overlap():
    st3 = qsim.new_state(3)
    with pytest.raises(qsim.QubitIndexError):
        qsim.apply_controlled(st3, [(1, 1)], 1, qsim.PAULI_X)
    with pytest.raises(qsim.QubitIndexError):
        qsim.apply_controlled(st3, [(0, 1), (0, 0)], 2, qsim.PAULI_X)
    with pytest.raises(ValueError):
        qsim.apply_controlled(st3, [(0, 2)], 1, qsim.PAULI_X)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 6))
def test_norm_and_round_trip(seed, n):
    rng = np.random.default_rng(seed)
    st_ = random_state(n, seed)
    start = st_.amps.copy()
    ops = []
    for _ in range(10):
        u = random_unitary(rng)
        t = int(rng.integers(n))
        others = [q for q in range(n) if q != t]
        k = int(rng.integers(0, len(others) + 1))
        ctrl = [(int(q), int(rng.integers(2))) for q in rng.permutation(others)[:k]]
        qsim.apply_controlled(st_, ctrl, t, u)
        ops.append((ctrl, t, u))
        assert abs(st_.norm() - 1) < 1e-9
    for ctrl, t, u in reversed(ops):
        qsim.apply_controlled(st_, ctrl, t, qsim.dagger(u))
    assert np.allclose(st_.amps, start, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 5))
def test_empty_controls_equal_apply_1q(seed, n):
    rng = np.random.default_rng(seed)
    u = random_unitary(rng)
    t = int(rng.integers(n))
    a = random_state(n, seed)
    b = a.copy()
    qsim.apply_1q(a, t, u)
    qsim.apply_controlled(b, [], t, u)
    assert np.allclose(a.amps, b.amps, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 5))
def test_control_completeness(seed, n):
    st_ = random_state(n, seed)
    k = max(1, n - 1)
    total = 0.0
    for pattern in range(1 << k):
        bits = {q: (pattern >> (k - 1 - q)) & 1 for q in range(k)}
        total += qsim.marginal_probability(st_, bits)
    assert abs(total - 1) < 1e-12


def test_marginal_probability_examples():
    uni = qsim.Statevector.from_amplitudes(np.ones(8), normalize=True)
    assert abs(qsim.marginal_probability(uni, {0: 0, 1: 0, 2: 0}) - 1 / 8) < 1e-15
    bell = qsim.Statevector.from_amplitudes([1, 0, 0, 1], normalize=True)
    assert abs(qsim.marginal_probability(bell, {0: 0}) - 0.5) < 1e-15
    assert abs(qsim.marginal_probability(random_state(3, 1)) - 1) < 1e-12


def test_projection_probability():
    bell = qsim.Statevector.from_amplitudes([1, 0, 0, 1], normalize=True)
    assert abs(qsim.projection_probability(bell, {0: 1}, [1], [0, 1]) - 0.5) < 1e-15
    st3 = random_state(3, 4)
    vec = np.array([1, 0], dtype=complex)
    assert abs(qsim.projection_probability(st3, {0: 0, 1: 1}, [2], vec)
               - qsim.marginal_probability(st3, {0: 0, 1: 1, 2: 0})) < 1e-15
    with pytest.raises(qsim.SizeError):
        qsim.projection_probability(st3, {}, [0], [1, 0, 0, 0])


def test_sample_counts():
    one = qsim.Statevector.from_amplitudes([0, 1])
    t = qsim.sample_counts(one, 100, seed=3)
    assert t.counts == {1: 100} and t.shots == 100
    uni = qsim.Statevector.from_amplitudes([1, 1], normalize=True)
    t = qsim.sample_counts(uni, 100_000, seed=11)
    assert abs(t.frequency(0) - 0.5) < 0.01 and abs(t.frequency(1) - 0.5) < 0.01
    assert sum(t.counts.values()) == t.shots
    assert qsim.sample_counts(uni, 500, seed=5).counts == qsim.sample_counts(uni, 500, seed=5).counts
    with pytest.raises(ValueError):
        qsim.sample_counts(uni, 0, seed=1)


def test_marginal_frequency():
    uni = qsim.Statevector.from_amplitudes(np.ones(4), normalize=True)
    t = qsim.sample_counts(uni, 10_000, seed=2)
    f = qsim.marginal_frequency(t, {0: 1})
    assert abs(f - 0.5) < 0.02
    assert t.bitstring(2) == "10"


def test_batch_matches_single():
    rng = np.random.default_rng(0)
    n = 4
    states = [random_state(n, s) for s in range(6)]
    batch = np.stack([s.amps for s in states])
    for _ in range(8):
        u = random_unitary(rng)
        t = int(rng.integers(n))
        ctrl = [(q, int(rng.integers(2))) for q in range(n) if q != t][: int(rng.integers(0, 4))]
        qsim.apply_controlled_batch(batch, n, ctrl, t, u)
        for s in states:
            qsim.apply_controlled(s, ctrl, t, u)
    assert np.allclose(batch, np.stack([s.amps for s in states]), atol=1e-13)


def test_x_conjugation_matches_open_controls():
    rng = np.random.default_rng(12)
    for trial in range(20):
        u = random_unitary(rng)
        qs = rng.permutation(5)
        ctrl = [(int(q), int(rng.integers(2))) for q in qs[1:1 + rng.integers(0, 5)]]
        a = random_state(5, trial)
        b = a.copy()
        qsim.apply_controlled(a, ctrl, int(qs[0]), u)
        qsim.apply_controlled_x_conjugated(b, ctrl, int(qs[0]), u)
        assert np.allclose(a.amps, b.amps, atol=1e-12)
