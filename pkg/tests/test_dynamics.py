import numpy as np
import pytest
from scipy.integrate import solve_ivp

from dwt.dynamics import (
    DEFAULT_ATOL,
    DEFAULT_RTOL,
    TrajectoryRecord,
    drift_scale,
    energy_exchange_report,
    integrate,
)
from dwt.errors import DomainError, IntegrationFailure
from dwt.resonance import ResonantTuple
from dwt.topology import ClusterSystem, build_clusters, generate_system


def T(a, b, c):
    return ResonantTuple((a, b, c))


TRIAD = generate_system(build_clusters([T(1, 2, 3)])[0])
BUTTERFLY = generate_system(build_clusters([T("1b", "2b", "3b"), T("3b", "2a", "3a")])[0])


def unit_state(rng, n):
    z = rng.normal(size=n) + 1j * rng.normal(size=n)
    return z / np.linalg.norm(z)


def test_isolated_triad_invariants_constant():
    traj = integrate(TRIAD, [0.1, 0.1, 0.0], 100.0)
    assert traj.invariants[0] == pytest.approx([0.01, 0.01])
    assert np.all(traj.invariant_drift < 1e-8)
    assert np.all(np.diff(traj.times) > 0)
    assert traj.times[-1] == 100.0
    assert np.all(np.isfinite(traj.states))


@pytest.mark.parametrize("seed", [0, 1])
def test_butterfly_random_state_drift(seed):
    traj = integrate(BUTTERFLY, unit_state(np.random.default_rng(seed), 5), 100.0)
    assert np.all(traj.invariant_drift < 1e-8)


def test_matches_reference_integrator():
    rng = np.random.default_rng(5)
    B0 = unit_state(rng, 5)
    traj = integrate(BUTTERFLY, B0, 10.0)

    def f(t, y):
        return BUTTERFLY.rhs(y.view(complex)).view(float)

    ref = solve_ivp(f, (0, 10.0), B0.view(float), method="DOP853", rtol=1e-12, atol=1e-14)
    assert np.allclose(traj.states[-1], ref.y[:, -1].view(complex), atol=1e-8)


def test_zero_state_stays_zero():
    traj = integrate(BUTTERFLY, np.zeros(5), 5.0)
    assert not np.any(traj.states)
    assert np.all(traj.invariant_drift == 0)
    report = energy_exchange_report(traj)
    assert report.recurrence


def test_input_validation():
    with pytest.raises(DomainError):
        integrate(TRIAD, [0.1, 0.1], 1.0)
    with pytest.raises(DomainError):
        integrate(TRIAD, [0.1, 0.1, 0.0], 0.0)
    with pytest.raises(DomainError):
        integrate(TRIAD, [0.1, 0.1, 0.0], 1.0, rtol=0.0)
    with pytest.raises(DomainError):
        integrate(TRIAD, [np.nan, 0.1, 0.0], 1.0)


def test_step_underflow_carries_partial_trajectory():
    # one slot feeding itself: x' = x**2 for real x, which blows up at t = 1/x0
    blowup = ClusterSystem(("x",), [(0, 1.0, (0, 0, 0))], [])
    with pytest.raises(IntegrationFailure) as info:
        integrate(blowup, [1.0], 5.0)
    partial = info.value.trajectory
    assert isinstance(partial, TrajectoryRecord)
    assert 0.9 < partial.times[-1] < 1.0
    assert len(partial) > 10


def _final_drift(system, B0, rtol, atol, t_end=50.0):
    traj = integrate(system, B0, t_end, rtol, atol)
    dev = np.abs(traj.invariants[-1] - traj.invariants[0])
    return dev / drift_scale(system, B0)


@pytest.mark.parametrize("seed", range(4))
def test_halving_tolerances_does_not_inflate_drift(seed):
    B0 = unit_state(np.random.default_rng(100 + seed), 5)
    floor = 1e-13  # roundoff level of the invariants themselves
    for rtol in (1e-6, 1e-7, 1e-8):
        coarse = _final_drift(BUTTERFLY, B0, rtol, rtol * 1e-3)
        fine = _final_drift(BUTTERFLY, B0, rtol / 2, rtol * 5e-4)
        assert np.all(fine <= 2 * np.maximum(coarse, floor))


def test_time_reversal_isolated_triad():
    B0 = np.array([0.3 + 0.1j, -0.2 + 0.4j, 0.1 - 0.25j])
    t_end = 20.0
    forward = integrate(TRIAD, B0, t_end)
    # C(t) = -conj(B(-t)) also solves the system; start it from -conj(B(t_end))
    back = integrate(TRIAD, -np.conj(forward.states[-1]), t_end)
    assert np.allclose(-np.conj(back.states[-1]), B0, atol=1e-6)


def test_recurrence_of_periodic_triad():
    traj = integrate(TRIAD, [0.1, 0.05, 0.02], 200.0)
    report = energy_exchange_report(traj)
    assert report.recurrence
    assert report.closest_return < report.delta
    assert report.return_time is not None and 0 < report.return_time <= 200.0
    assert report.delta == pytest.approx(1e-3 * np.linalg.norm([0.1, 0.05, 0.02]))
    # intensities exchange between the modes
    assert np.all(report.max_intensity > report.min_intensity)


def test_short_run_is_not_recurrent():
    traj = integrate(TRIAD, [0.1, 0.05, 0.02], 5.0)
    assert not energy_exchange_report(traj).recurrence


def test_single_step_trajectory_report():
    s0 = np.array([1.0 + 0j, 0.5, 0.0])
    s1 = np.array([0.8 + 0.1j, 0.6, 0.2])
    inv = np.array([TRIAD.invariants(s0), TRIAD.invariants(s1)])
    traj = TrajectoryRecord(np.array([0.0, 0.1]), np.array([s0, s1]), inv, np.zeros(2))
    report = energy_exchange_report(traj)
    assert not report.recurrence
    assert np.allclose(report.min_intensity, np.minimum(abs(s0) ** 2, abs(s1) ** 2))
    assert np.allclose(report.max_intensity, np.maximum(abs(s0) ** 2, abs(s1) ** 2))


def test_report_deterministic_and_serializable():
    traj = integrate(TRIAD, [0.1, 0.05, 0.02], 30.0)
    a, b = energy_exchange_report(traj).to_dict(), energy_exchange_report(traj).to_dict()
    assert a == b
    assert set(a) == {"min_intensity", "max_intensity", "recurrence", "closest_return", "return_time", "delta"}


def test_empty_trajectory_rejected():
    empty = TrajectoryRecord(np.zeros(0), np.zeros((0, 3), complex), np.zeros((0, 2)), np.zeros(2))
    with pytest.raises(DomainError):
        energy_exchange_report(empty)


def test_default_tolerances():
    assert DEFAULT_RTOL == 1e-11 and DEFAULT_ATOL == 1e-14
