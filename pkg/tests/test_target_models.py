import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ionlgt.dynamics import SpinState
from ionlgt.target_models import (
    Lattice2DMap, SchwingerParams, TargetHamiltonian, dense_operator, pauli_operator,
    schwinger_direct, schwinger_hamiltonian, total_sz, xy_2d_hamiltonian,
    z2_dual_ising_hamiltonian,
)


def traceless_norm(a):
    d = a.shape[0]
    return np.linalg.norm(a - np.trace(a) / d * np.eye(d), 2)


@pytest.mark.parametrize("n", [2, 4, 6])
@pytest.mark.parametrize("x,mu,eps0", [(0, 0, 0), (0.6, 0.1, 0), (6, 1, 0), (1.3, -0.4, 0.25)])
def test_split_form_matches_direct_up_to_identity(n, x, mu, eps0):
    p = SchwingerParams(n, x, mu, eps0)
    diff = schwinger_direct(p) - schwinger_hamiltonian(p).matrix()
    assert traceless_norm(diff) < 1e-10


def test_four_site_coefficients():
    h = schwinger_hamiltonian(SchwingerParams(4, 0.6, 0.1))
    assert np.allclose(np.diag(h.jxx, 1), 0.3) and np.allclose(h.jxx, h.jyy)
    # zz couplings (N - n)/2 for m < n <= N - 1 (1-based)
    expect = np.zeros((4, 4))
    expect[0, 1] = expect[1, 0] = 1.0
    expect[0, 2] = expect[2, 0] = expect[1, 2] = expect[2, 1] = 0.5
    assert np.allclose(h.jzz, expect)
    # -Bz/2 = mu/2 (-1)^n - (odd links to the right)/2
    assert np.allclose(-0.5 * h.bz, [-0.05 - 1.0, 0.05 - 0.5, -0.05 - 0.5, 0.05])


def test_vacuum_is_ground_state_without_hopping():
    p = SchwingerParams(6, 0.0, 0.5)
    h = schwinger_direct(p)
    vac = SpinState.staggered_vacuum(6).amplitudes
    e = np.real(vac.conj() @ h @ vac)
    assert np.allclose(h @ vac, e * vac)
    assert np.isclose(e, np.linalg.eigvalsh(h).min())


def test_charge_conservation():
    h = schwinger_hamiltonian(SchwingerParams(6, 0.6, 0.1)).matrix()
    sz = total_sz(6)
    assert np.abs(h @ sz - sz @ h).max() < 1e-12


def test_hermitian_and_pauli_order():
    h = schwinger_hamiltonian(SchwingerParams(4, 0.6, 0.1)).matrix()
    assert np.allclose(h, h.conj().T)
    z0 = pauli_operator(2, {0: "Z"})
    assert np.allclose(np.diag(z0), [1, 1, -1, -1])


def test_validation():
    with pytest.raises(ValueError):
        SchwingerParams(3, 1, 1)
    with pytest.raises(ValueError):
        SchwingerParams(4, -1, 1)
    bad = np.array([[0, 1], [2, 0.0]])
    with pytest.raises(ValueError, match="symmetric"):
        TargetHamiltonian(bad, np.zeros((2, 2)), np.zeros((2, 2)), np.zeros(2))
    with pytest.raises(ValueError, match="diagonal"):
        TargetHamiltonian(np.eye(2), np.zeros((2, 2)), np.zeros((2, 2)), np.zeros(2))
    big = TargetHamiltonian(*(np.zeros((16, 16)),) * 3, np.zeros(16))
    with pytest.raises(ValueError, match="reduce N"):
        dense_operator(big)


def test_serialisation(tmp_path):
    h = schwinger_hamiltonian(SchwingerParams(4, 0.6, 0.1))
    h2 = TargetHamiltonian.from_dict(json.loads(h.to_json()))
    for name in ("jxx", "jyy", "jzz", "bz", "bx"):
        assert np.array_equal(getattr(h, name), getattr(h2, name))
    paths = h.to_csv(tmp_path)
    assert np.allclose(np.loadtxt(paths[2], delimiter=","), h.jzz)


def test_lattice_maps():
    lat = Lattice2DMap(3, 2)
    assert [lat.ion(*lat.site(k)) for k in range(6)] == list(range(6))
    assert len(lat.bonds()) == 2 * 2 + 3 * 1
    snake = Lattice2DMap(3, 2, "snake")
    assert snake.ion(0, 1) == 5 and snake.site(5) == (0, 1)
    assert [snake.ion(*snake.site(k)) for k in range(6)] == list(range(6))
    dual = Lattice2DMap.dual_of(4)
    assert dual.n_sites == 9
    with pytest.raises(IndexError):
        lat.ion(3, 0)


def test_xy_model_equals_hopping_form():
    lat = Lattice2DMap(2, 2)
    h = xy_2d_hamiltonian(lat, h=0.7).matrix()
    sp = np.array([[0, 1], [0, 0]], dtype=complex)
    ref = np.zeros_like(h)
    for i, j in lat.bonds():
        a = [np.eye(2)] * 4
        a[i], a[j] = sp, sp.T
        term = a[0]
        for f in a[1:]:
            term = np.kron(term, f)
        ref += 0.7 * (term + term.conj().T)
    assert np.allclose(h, ref)


def test_z2_dual_ising_form():
    lat = Lattice2DMap.dual_of(3)
    lam = 0.8
    h = z2_dual_ising_hamiltonian(lat, lam).matrix()
    ref = -lam * sum(pauli_operator(4, {k: "X"}) for k in range(4))
    ref = ref - sum(pauli_operator(4, {i: "Z", j: "Z"}) for i, j in lat.bonds())
    assert np.allclose(h, ref)


@settings(max_examples=30, deadline=None)
@given(n=st.sampled_from([2, 4]), x=st.floats(0, 5), mu=st.floats(-2, 2), eps0=st.floats(-1, 1))
def test_property_identity_shift(n, x, mu, eps0):
    p = SchwingerParams(n, x, mu, eps0)
    assert traceless_norm(schwinger_direct(p) - schwinger_hamiltonian(p).matrix()) < 1e-10
