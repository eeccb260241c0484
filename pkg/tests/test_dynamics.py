import numpy as np
import pytest

from ionlgt.dynamics import (MAX_DENSE_SPINS, SpinState, delta_xx, ensemble_band, evolve_state,
                             perturbed_hopping_ensemble, vpa_series)
from ionlgt.target_models import (SchwingerParams, TargetHamiltonian, dense_operator,
                                  schwinger_direct, schwinger_hamiltonian, total_sz)

T100 = np.linspace(0, 100, 401)


def test_staggered_vacuum_layout():
    psi = SpinState.staggered_vacuum(4)
    # sigma_z = (+1, -1, +1, -1) -> bits 0101
    assert np.flatnonzero(psi.amplitudes).tolist() == [0b0101]
    with pytest.raises(ValueError):
        SpinState.staggered_vacuum(3)


def test_named_states_and_validation():
    assert SpinState.named("all-up", 3).amplitudes[0] == 1
    assert SpinState.named("all-down", 3).amplitudes[-1] == 1
    with pytest.raises(ValueError):
        SpinState.named("neel", 4)
    with pytest.raises(ValueError):
        SpinState(np.ones(4))
    with pytest.raises(ValueError):
        SpinState(np.ones(3) / np.sqrt(3))


def test_state_from_file(tmp_path):
    p = tmp_path / "psi.csv"
    p.write_text("re,im\n0.6,0\n0,0.8\n")
    psi = SpinState.from_file(p)
    assert psi.n_spins == 1
    assert psi.amplitudes[1] == pytest.approx(0.8j)


def test_vpa_starts_at_one():
    h = schwinger_hamiltonian(SchwingerParams(4, 0.6, 0.1))
    psi = SpinState.staggered_vacuum(4)
    v = vpa_series(psi, evolve_state(h, psi, T100), T100).values
    assert v[0] == 1.0
    assert np.all((v >= 0) & (v <= 1))


def test_zero_hopping_keeps_vacuum():
    h = schwinger_hamiltonian(SchwingerParams(4, 0.0, 0.1))
    psi = SpinState.staggered_vacuum(4)
    v = vpa_series(psi, evolve_state(h, psi, T100), T100).values
    assert np.abs(v - 1).max() < 1e-10


def test_eig_and_ode_paths_agree():
    h = schwinger_hamiltonian(SchwingerParams(4, 0.6, 0.1))
    psi = SpinState.staggered_vacuum(4)
    a = evolve_state(h, psi, T100, method="eig")
    b = evolve_state(h, psi, T100, method="ode")
    assert max(np.abs(x.amplitudes - y.amplitudes).max() for x, y in zip(a, b)) < 1e-8


def test_identity_shift_only_changes_global_phase():
    p = SchwingerParams(4, 0.6, 0.1)
    psi = SpinState.staggered_vacuum(4)
    a = evolve_state(schwinger_hamiltonian(p), psi, T100)
    b = evolve_state(schwinger_direct(p), psi, T100)
    va = vpa_series(psi, a, T100).values
    vb = vpa_series(psi, b, T100).values
    assert np.abs(va - vb).max() < 1e-10


def test_charge_is_conserved():
    h = schwinger_hamiltonian(SchwingerParams(6, 0.6, 0.1))
    sz = np.real(np.diag(total_sz(6)))
    psi = SpinState.staggered_vacuum(6)
    for s in evolve_state(h, psi, np.linspace(0, 20, 11)):
        assert np.sum(sz * np.abs(s.amplitudes) ** 2) == pytest.approx(0, abs=1e-12)


def test_matrix_input_and_ode_edge_cases():
    h = dense_operator(schwinger_hamiltonian(SchwingerParams(2, 1.0, 0.0)))
    psi = SpinState.staggered_vacuum(2)
    out = evolve_state(h, psi, [0.0], method="ode")
    assert out[0].overlap(psi) == pytest.approx(1)
    with pytest.raises(ValueError):
        evolve_state(h, psi, [1.0, 0.5], method="ode")
    with pytest.raises(ValueError):
        evolve_state(h, psi, [1.0], method="magic")
    with pytest.raises(ValueError):
        evolve_state(h, SpinState.staggered_vacuum(4), [1.0])


def test_dense_limit_is_enforced():
    n = MAX_DENSE_SPINS + 2
    h = TargetHamiltonian(np.zeros((n, n)), np.zeros((n, n)), np.zeros((n, n)), np.zeros(n))
    with pytest.raises(ValueError, match="reduce N"):
        evolve_state(h, SpinState.from_spins(np.ones(n, dtype=int)), [0.0])


def test_two_site_rabi_oscillation():
    # H = (J/2)(XX + YY) couples |01> and |10> with strength J
    j = 0.7
    jm = np.array([[0, j / 2], [j / 2, 0]])
    h = TargetHamiltonian(jm, jm, np.zeros((2, 2)), np.zeros(2))
    psi = SpinState.from_spins([1, -1])
    t = np.linspace(0, 5, 21)
    v = vpa_series(psi, evolve_state(h, psi, t), t).values
    assert np.allclose(v, np.cos(j * t) ** 2, atol=1e-12)


def test_delta_xx_counts_beyond_nearest_neighbours():
    jm = np.array([[0, 1, 0.1, 0.2], [1, 0, 1, 0.3], [0.1, 1, 0, 1], [0.2, 0.3, 1, 0]])
    h = TargetHamiltonian(jm, jm, np.zeros((4, 4)), np.zeros(4))
    assert delta_xx(h) == pytest.approx(0.01 + 0.04 + 0.09)


@pytest.fixture(scope="module")
def ensemble(setup4):
    p = SchwingerParams(4, 0.6, 0.1)
    return perturbed_hopping_ensemble(p, setup4, np.linspace(-1000e3, -470e3, 20))


def test_ensemble_members_keep_exact_nearest_neighbour_hopping(ensemble):
    assert len(ensemble) == 20
    for h in ensemble:
        assert np.allclose(np.diag(h.jxx, 1), 0.3, rtol=1e-10)
        assert np.array_equal(h.jxx, h.jyy)


def test_ensemble_band_grows(ensemble):
    psi = SpinState.staggered_vacuum(4)
    band = ensemble_band(ensemble, 1e-4, psi, T100)
    assert len(band.retained) >= 2
    assert all(band.metrics[k] <= 1e-4 for k in band.retained)
    q = T100.size // 4
    assert band.width[-q:].mean() > band.width[:q].mean()
    assert np.all(band.lower <= band.upper)
    text = band.to_csv(header_lines=["seed: None"])
    assert text.splitlines()[1] == "t,central,lower,upper"
    assert len(text.splitlines()) == T100.size + 2


def test_ensemble_filter_rejecting_all_raises(ensemble):
    with pytest.raises(ValueError, match="no Hamiltonian"):
        ensemble_band(ensemble, 0.0, SpinState.staggered_vacuum(4), T100)


def test_series_csv(tmp_path):
    h = schwinger_hamiltonian(SchwingerParams(2, 0.6, 0.1))
    psi = SpinState.staggered_vacuum(2)
    t = np.array([0.0, 0.5])
    s = vpa_series(psi, evolve_state(h, psi, t), t)
    path = tmp_path / "vpa.csv"
    s.to_csv(path)
    rows = np.loadtxt(path, delimiter=",", skiprows=1)
    assert rows[0].tolist() == [0.0, 1.0]
    assert rows[1, 1] == s.values[1]
