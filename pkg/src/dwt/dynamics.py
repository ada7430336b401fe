"""Adaptive integration of cluster systems with conservation-law monitoring."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, IntegrationFailure
from .topology import ClusterSystem

DEFAULT_RTOL = 1e-11
DEFAULT_ATOL = 1e-14

# Dormand-Prince 5(4): 5th order propagation, embedded 4th order error estimate
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


@dataclass
class TrajectoryRecord:
    times: np.ndarray  # (n,)
    states: np.ndarray  # (n, dof) complex
    invariants: np.ndarray  # (n, k) values of the basis invariants
    invariant_drift: np.ndarray  # (k,) max relative deviation from t = 0

    def __len__(self):
        return len(self.times)


def _pack(z: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(z, dtype=complex).view(float)


def _unpack(y: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(y).view(complex)


def drift_scale(system: ClusterSystem, initial: np.ndarray) -> np.ndarray:
    """Normalisation of invariant drift: |I(0)|, floored at sum_j |c_j| |B_j(0)|^2."""
    C = np.abs(np.array(system.invariants_basis, dtype=float).reshape(-1, system.size))
    i0 = np.abs(system.invariants(initial))
    return np.maximum(i0, C @ np.abs(initial) ** 2)


def _record(times, states, system, initial) -> TrajectoryRecord:
    states = np.array(states)
    inv = np.array([system.invariants(s) for s in states]).reshape(len(states), -1)
    scale = drift_scale(system, initial)
    dev = np.abs(inv - inv[0]).max(axis=0) if len(states) else np.zeros(inv.shape[1])
    drift = np.divide(dev, scale, out=np.array(dev, dtype=float), where=scale > 0)
    return TrajectoryRecord(np.array(times), states, inv, drift)


def integrate(
    system: ClusterSystem,
    initial,
    t_end: float,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    *,
    max_step: float = np.inf,
    first_step: float | None = None,
) -> TrajectoryRecord:
    """Integrate dB/dt = rhs(B) from t = 0 to ``t_end``, recording every accepted step."""
    B0 = np.asarray(initial, dtype=complex)
    if B0.shape != (system.size,):
        raise DomainError(f"initial state needs {system.size} complex slots, got shape {B0.shape}")
    if not t_end > 0 or not rtol > 0 or not atol > 0:
        raise DomainError("t_end, rtol and atol must be positive")
    if not np.all(np.isfinite(B0)):
        raise DomainError("initial state must be finite")

    def f(y):
        return _pack(system.rhs(_unpack(y)))

    y = _pack(B0.copy())
    t = 0.0
    times, states = [0.0], [B0.copy()]
    k1 = f(y)
    h = first_step or _initial_step(f, y, k1, rtol, atol)
    h = min(h, max_step, t_end)
    K = np.empty((7, y.size))
    while t < t_end:
        if t + h > t_end:
            h = t_end - t
        if h <= 16 * np.finfo(float).eps * max(1.0, abs(t)):
            raise IntegrationFailure(f"step size underflow at t={t:.6g}", _record(times, states, system, B0))
        K[0] = k1
        for s in range(1, 7):
            K[s] = f(y + h * (np.dot(_A[s], K[:s])))
        y_new = y + h * (_B5 @ K)
        err_vec = h * (_E @ K)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = np.sqrt(np.mean((err_vec / scale) ** 2)) if y.size else 0.0
        if not np.isfinite(err):
            h *= 0.1
            continue
        if err <= 1.0:
            t = t_end if t + h >= t_end else t + h
            y = y_new
            k1 = K[6].copy()  # first-same-as-last; K is reused
            times.append(t)
            states.append(_unpack(y).copy())
            factor = 5.0 if err == 0 else min(5.0, 0.9 * err ** -0.2)
        else:
            factor = max(0.2, 0.9 * err ** -0.2)
        h = min(h * factor, max_step)
    return _record(times, states, system, B0)


def _initial_step(f, y, f0, rtol, atol) -> float:
    scale = atol + rtol * np.abs(y)
    d0 = np.sqrt(np.mean((y / scale) ** 2)) if y.size else 0.0
    d1 = np.sqrt(np.mean((f0 / scale) ** 2)) if y.size else 0.0
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    f1 = f(y + h0 * f0)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0 if y.size else 0.0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


@dataclass
class ExchangeReport:
    min_intensity: np.ndarray  # per mode, min over t of |B_j|^2
    max_intensity: np.ndarray
    recurrence: bool
    closest_return: float  # min distance to the initial state after first departure
    return_time: float | None
    delta: float

    def to_dict(self) -> dict:
        return {
            "min_intensity": self.min_intensity.tolist(),
            "max_intensity": self.max_intensity.tolist(),
            "recurrence": self.recurrence,
            "closest_return": self.closest_return,
            "return_time": self.return_time,
            "delta": self.delta,
        }


def energy_exchange_report(traj: TrajectoryRecord, delta: float | None = None) -> ExchangeReport:
    """Per-mode intensity range plus a recurrence flag.

    The recurrence test only looks at the trajectory after it has first moved
    more than half its maximal excursion away from the initial state;
    distances between recorded states are taken along straight segments.
    A trajectory that never leaves the delta-ball (a fixed point) counts as
    recurrent.
    """
    if len(traj) == 0:
        raise DomainError("empty trajectory")
    X = _pack(traj.states.reshape(len(traj), -1)).reshape(len(traj), -1)
    intens = np.abs(traj.states) ** 2
    x0 = X[0]
    if delta is None:
        delta = 1e-3 * float(np.linalg.norm(x0))
    dist = np.linalg.norm(X - x0, axis=1)
    if not dist.max() > delta:
        return ExchangeReport(intens.min(0), intens.max(0), True, 0.0, None, delta)
    best, best_t = np.inf, None
    departed = int(np.argmax(dist > 0.5 * dist.max()))
    for a in range(departed, len(X) - 1):
        p, d = X[a] - x0, X[a + 1] - X[a]
        dd = float(d @ d)
        s = 0.0 if dd == 0 else min(1.0, max(0.0, -float(p @ d) / dd))
        r = float(np.linalg.norm(p + s * d))
        if r < best:
            best = r
            best_t = float(traj.times[a] + s * (traj.times[a + 1] - traj.times[a]))
    return ExchangeReport(intens.min(0), intens.max(0), bool(best < delta), float(best), best_t, delta)
