import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from macrovis import dense
from macrovis.models import cat_state, product_state
from macrovis.statevec import (
    PAULI, SX, SY, SZ, StateError, StateVector, apply_local_unitary, apply_pauli,
    basis_state, dump_state, from_amplitudes, inner, load_state, pauli_expectation,
    pauli_pair_expectation, pauli_stack,
)

from conftest import random_state


def test_qubit_convention():
    # sigma_z|0> = -|0>, sigma_z|1> = +|1>; site 1 is the least significant bit
    assert pauli_expectation(basis_state(3, 0), "z", 1) == -1
    assert pauli_expectation(basis_state(3, 0b001), "z", 1) == 1
    assert pauli_expectation(basis_state(3, 0b001), "z", 2) == -1
    assert np.allclose(SX @ SY, 1j * SZ)
    assert np.allclose(SY @ SZ, 1j * SX)


def test_state_validation():
    with pytest.raises(StateError):
        StateVector(2, np.ones(4))
    with pytest.raises(StateError):
        StateVector(2, np.ones(3) / math.sqrt(3))
    with pytest.raises(StateError):
        StateVector(0, np.ones(1))
    with pytest.raises(StateError):
        from_amplitudes(np.ones(6))
    s = from_amplitudes([3, 4])
    assert np.allclose(s.amps, [0.6, 0.8])
    with pytest.raises(ValueError):
        s.amps[0] = 1.0  # read-only


def test_identity_leaves_state_unchanged(rng):
    s = random_state(rng, 4)
    for site in range(1, 5):
        assert np.array_equal(apply_local_unitary(s, site, np.eye(2)).amps, s.amps)


def test_sigma_x_on_site_one_moves_amplitude():
    out = apply_local_unitary(basis_state(3, 0), 1, SX)
    assert out.amps[1] == 1 and np.count_nonzero(out.amps) == 1


def test_sigma_x_eigenbasis_rotation_gives_binomial():
    n = 4
    h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    s = basis_state(n, 0)
    for site in range(1, n + 1):
        s = apply_local_unitary(s, site, h)
    pop = np.array([bin(i).count("1") for i in range(1 << n)])
    probs = np.bincount(pop, weights=s.probabilities())
    assert np.allclose(probs, [math.comb(n, k) / 2 ** n for k in range(n + 1)], atol=1e-14)
    # dense oracle: kron of single-site rotations
    full = dense.site_operator(n, 1, h)
    for site in range(2, n + 1):
        full = full @ dense.site_operator(n, site, h)
    assert np.allclose(full @ basis_state(n, 0).amps, s.amps, atol=1e-14)


def test_local_unitary_errors(rng):
    s = random_state(rng, 3)
    with pytest.raises(StateError):
        apply_local_unitary(s, 4, np.eye(2))
    with pytest.raises(StateError):
        apply_local_unitary(s, 0, np.eye(2))
    with pytest.raises(StateError):
        apply_local_unitary(s, 1, np.array([[1, 0], [0, 1.001]]))
    with pytest.raises(StateError):
        pauli_expectation(s, "w", 1)


def _random_unitary(rng):
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / abs(np.diag(r)))


def test_norm_drift_over_many_applications(rng):
    n = 6
    s = random_state(rng, n)
    for _ in range(100):
        s = apply_local_unitary(s, int(rng.integers(1, n + 1)), _random_unitary(rng))
    # the constructor itself enforces 1e-12; recheck explicitly
    assert abs(s.norm() - 1) <= 1e-12


def test_pair_expectation_examples():
    zero = basis_state(3, 0)
    assert pauli_pair_expectation(zero, ("x", 1), ("y", 1)) == pytest.approx(-1j)
    assert pauli_pair_expectation(zero, ("z", 1), ("z", 2)) == pytest.approx(1)
    cat = cat_state(5)
    for l, lp in [(1, 2), (2, 5), (3, 4)]:
        assert pauli_pair_expectation(cat, ("z", l), ("z", lp)) == pytest.approx(1)


@given(seed=st.integers(0, 10_000), a=st.sampled_from("xyz"), b=st.sampled_from("xyz"),
       l=st.integers(1, 4), lp=st.integers(1, 4))
def test_pair_expectation_matches_dense_and_is_hermitian(seed, a, b, l, lp):
    rng = np.random.default_rng(seed)
    s = random_state(rng, 4)
    got = pauli_pair_expectation(s, (a, l), (b, lp))
    ref = np.vdot(s.amps, dense.pauli(4, a, l) @ dense.pauli(4, b, lp) @ s.amps)
    assert abs(got - ref) < 1e-12
    assert got == np.conj(pauli_pair_expectation(s, (b, lp), (a, l)))


def test_product_state_moments_factor(rng):
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    s = product_state(4, v / np.linalg.norm(v))
    for a in "xyz":
        for b in "xyz":
            m = pauli_pair_expectation(s, (a, 1), (b, 3))
            assert abs(m - pauli_expectation(s, a, 1) * pauli_expectation(s, b, 3)) < 1e-12


def test_apply_pauli_matches_dense(rng):
    s = random_state(rng, 3)
    for a in "xyz":
        for l in (1, 2, 3):
            assert np.allclose(apply_pauli(s.amps, 3, a, l), dense.pauli(3, a, l) @ s.amps)
    stack = pauli_stack(s)
    assert stack.shape == (9, 8)
    assert np.allclose(stack[1 * 3 + 2], dense.pauli(3, "y", 3) @ s.amps)


def test_inner_and_dump_roundtrip(tmp_path, rng):
    s = random_state(rng, 5)
    assert inner(s, s) == pytest.approx(1)
    path = tmp_path / "s.mvis"
    dump_state(s, path)
    raw = path.read_bytes()
    assert raw[:4] == b"MVIS" and len(raw) == 16 + 16 * 32
    assert int.from_bytes(raw[4:6], "little") == 1
    assert int.from_bytes(raw[6:8], "little") == 5
    assert np.array_equal(load_state(path).amps, s.amps)
    path.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(StateError):
        load_state(path)
    path.write_bytes(raw[:-16])
    with pytest.raises(StateError):
        load_state(path)


def test_pauli_table():
    for m in PAULI.values():
        assert np.allclose(m @ m, np.eye(2))
