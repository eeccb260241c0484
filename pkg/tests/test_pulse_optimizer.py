import json

import numpy as np
import pytest

from ionlgt.coupling import LaserDrive, ResonanceError
from ionlgt.pulse_optimizer import (
    DEFAULT_BUDGET, DEFAULT_ENERGY_UNIT, CalibrationError, DetuningSchedule,
    InfeasibleDesignError, SINGLE_DETUNING_HZ, calibrate_single_detuning, check_constraints,
    design_schwinger, detuning_schedule, first_order_amplitudes, fit_multifrequency,
)
from ionlgt.target_models import SchwingerParams, schwinger_hamiltonian

TWO_PI = 2 * np.pi
UNIT = DEFAULT_ENERGY_UNIT


def com(setup, pair):
    m = setup.modes_for(pair)
    return m.frequencies[m.com_index]


@pytest.mark.parametrize("pair", ["I", "II"])
@pytest.mark.parametrize("gauge", ["symmetric", "min-contamination"])
def test_single_detuning_calibration(setup4, pair, gauge):
    mu = com(setup4, pair) + TWO_PI * SINGLE_DETUNING_HZ[pair]
    target = 0.3 * UNIT
    drive, rep = calibrate_single_detuning(target, setup4.modes_for(pair), mu,
                                           setup4.recoils[pair], pair, gauge=gauge)
    j = setup4.coupling(drive)
    assert np.allclose(np.diag(j, 1), target, rtol=1e-10)
    assert rep.nn_spread < 1e-10 and rep.constraint_flags["nearest_neighbour_exact"]
    far = max(abs(j[i, k]) for i in range(4) for k in range(i + 2, 4)) / target
    assert np.isclose(rep.contamination, far)


def test_symmetric_gauge_is_mirror_symmetric(setup4):
    mu = com(setup4, "I") + TWO_PI * SINGLE_DETUNING_HZ["I"]
    d, _ = calibrate_single_detuning(UNIT, setup4.modes_for("I"), mu, setup4.recoils["I"])
    assert np.allclose(d.rabi[0], d.rabi[0][::-1], rtol=1e-12)


def test_min_contamination_never_worse(setup4):
    mu = com(setup4, "I") + TWO_PI * SINGLE_DETUNING_HZ["I"]
    args = (UNIT, setup4.modes_for("I"), mu, setup4.recoils["I"], "I")
    _, r_sym = calibrate_single_detuning(*args)
    _, r_min = calibrate_single_detuning(*args, gauge="min-contamination")
    assert r_min.contamination <= r_sym.contamination * (1 + 1e-6)


def test_negative_target_sign(setup4):
    mu = com(setup4, "I") + TWO_PI * SINGLE_DETUNING_HZ["I"]
    d, _ = calibrate_single_detuning(-UNIT, setup4.modes_for("I"), mu, setup4.recoils["I"])
    assert np.allclose(np.diag(setup4.coupling(d), 1), -UNIT, rtol=1e-10)


def test_calibration_errors(setup4):
    m = setup4.modes_for("I")
    with pytest.raises(ResonanceError):
        calibrate_single_detuning(UNIT, m, m.frequencies[1], setup4.recoils["I"])
    with pytest.raises(ValueError):
        calibrate_single_detuning(UNIT, m, m.frequencies[0] + 1e6, setup4.recoils["I"], gauge="odd")
    assert issubclass(CalibrationError, RuntimeError)


def test_schedule_midpoints_at_minus_half(setup8):
    for m in setup8.modes.values():
        s = detuning_schedule(m, -0.5)
        w = np.sort(m.frequencies)
        assert s.n_beatnotes == 7
        assert np.allclose(np.sort(s.beatnotes), (w[:-1] + w[1:]) / 2, rtol=1e-14)


@pytest.mark.parametrize("fs", [0.5, 0.25, -0.25])
def test_schedule_formula(setup4, fs):
    w = setup4.modes["transverse"].frequencies  # descending, COM first
    s = detuning_schedule(setup4.modes["transverse"], fs)
    assert np.allclose(s.beatnotes, [w[k] + fs * (w[k] - w[k + 1]) for k in range(3)])
    wa = setup4.modes["axial"].frequencies  # descending, COM last
    sa = detuning_schedule(setup4.modes["axial"], fs)
    assert np.allclose(sa.beatnotes, [wa[k] + fs * (wa[k] - wa[k - 1]) for k in (3, 2, 1)])


def test_schedule_rejects_collisions(setup4):
    with pytest.raises(ResonanceError):
        detuning_schedule(setup4.modes["transverse"], -1.0)


def test_multifrequency_fit_exact_and_recomputed(setup4):
    target = schwinger_hamiltonian(SchwingerParams(4, 0.6, 0.1)).jzz * UNIT
    m = setup4.modes_for("III")
    sched = detuning_schedule(m, -0.5)
    drive, rep = fit_multifrequency(target, m, sched, setup4.recoils["III"], setup4.eta["III"],
                                    pair="III", restarts=4, seed=1)
    j = setup4.coupling(drive)
    assert np.abs(j - target).max() <= 1e-8 * np.abs(target).max()
    assert rep.feasible and rep.max_alpha <= 0.5
    assert np.all(np.abs(drive.signed_rabi).sum(axis=0) <= DEFAULT_BUDGET * (1 + 1e-9))
    d = json.loads(rep.to_json())
    assert d["schema_version"] == 1 and d["feasible"]


def test_fit_is_deterministic(setup4):
    target = schwinger_hamiltonian(SchwingerParams(4, 0.6, 0.1)).jzz * UNIT
    m = setup4.modes_for("III")
    sched = detuning_schedule(m, -0.5)
    args = (target, m, sched, setup4.recoils["III"], setup4.eta["III"])
    d1, r1 = fit_multifrequency(*args, pair="III", restarts=3, seed=11)
    d2, r2 = fit_multifrequency(*args, pair="III", restarts=3, seed=11)
    assert np.array_equal(d1.rabi, d2.rabi) and r1.restart == r2.restart


def test_zero_budget_is_infeasible(setup4):
    target = schwinger_hamiltonian(SchwingerParams(4, 0.6, 0.1)).jzz * UNIT
    m = setup4.modes_for("III")
    with pytest.raises(InfeasibleDesignError) as exc:
        fit_multifrequency(target, m, detuning_schedule(m, -0.5), setup4.recoils["III"],
                           setup4.eta["III"], pair="III", budget=0.0)
    assert exc.value.report is not None and not exc.value.report.feasible


def test_tiny_budget_reports_instead_of_raising(setup4):
    target = schwinger_hamiltonian(SchwingerParams(4, 0.6, 0.1)).jzz * UNIT
    m = setup4.modes_for("III")
    _, rep = fit_multifrequency(target, m, detuning_schedule(m, -0.5), setup4.recoils["III"],
                                setup4.eta["III"], pair="III", budget=TWO_PI * 1e3, restarts=2,
                                raise_on_infeasible=False)
    assert not rep.feasible


def test_first_order_amplitude_matches_magnus(setup4):
    from ionlgt.magnus import magnus_terms

    m = setup4.modes_for("III")
    sched = detuning_schedule(m, -0.5)
    rng = np.random.default_rng(2)
    amps = TWO_PI * rng.uniform(-1e5, 1e5, (3, 4))
    drive = LaserDrive.from_signed("III", sched.beatnotes, amps)
    from ionlgt.pulse_optimizer import _alpha_kernel

    t = np.array([3e-6, 2e-5])
    got = first_order_amplitudes(amps, setup4.eta["III"], _alpha_kernel(m, sched.beatnotes, "III", t))
    ref = np.abs(magnus_terms({"III": drive}, setup4, None, t).alpha_z)
    assert np.allclose(got, ref, rtol=1e-10)


def test_constraint_checker(setup4):
    design = design_schwinger(SchwingerParams(4, 0.6, 0.1), setup4, restarts=2)
    rep = check_constraints(design.drives, setup4, design.bz)
    assert rep.worst["sideband"] < 0.05
    assert set(rep.violations()) <= {"carrier"}
    m = setup4.modes_for("II")
    with pytest.raises(ResonanceError):
        check_constraints({"II": LaserDrive("II", [m.frequencies[0]], np.ones((1, 4)))}, setup4)


def test_design_reproduces_target(setup4):
    p = SchwingerParams(4, 0.6, 0.1)
    d = design_schwinger(p, setup4, restarts=2)
    h = d.effective_model(setup4).in_units(UNIT)
    t = schwinger_hamiltonian(p)
    for ax in "xy":
        nn = np.diag(h.coupling(ax), 1)
        assert np.allclose(nn, np.diag(t.coupling(ax), 1), rtol=1e-9)
    assert np.allclose(h.jzz, t.jzz, atol=1e-8 * np.abs(t.jzz).max())
    assert np.allclose(h.bz, t.bz)


def test_manual_schedule_container():
    s = DetuningSchedule(float("nan"), "transverse", np.array([1.0]))
    assert s.n_beatnotes == 1
