"""Exact integer solutions of triad and quartet resonance conditions.

Two solvers over the same lattice:

* :func:`solve_bruteforce` visits every pair of lattice modes and compares
  frequency sums exactly (or within a tolerance for near-resonances).
* :func:`solve_qclass` only looks inside q-classes: tuples whose modes share
  one r-th-power-free part q (reducing the condition to integer coefficient
  sums), plus, for quartets, the cross-class case of pairwise equal
  frequencies.

Both return a :class:`ResonanceSet` in canonical order, so outputs can be
compared row by row.
"""
from __future__ import annotations

import enum
import functools
import math
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .dispersion import DEFAULT_DOMAIN, DispersionLaw, Mode, exact_weight, spectral_domain
from .errors import BudgetExceeded, DomainError, UnsupportedLawError


class Order(str, enum.Enum):
    TRIAD = "triad"
    QUARTET = "quartet"

    @property
    def arity(self) -> int:
        return 3 if self is Order.TRIAD else 4


@dataclass(frozen=True)
class ResonanceCondition:
    order: Order
    momentum_required: bool = False

    @property
    def arity(self) -> int:
        return self.order.arity


@dataclass(frozen=True)
class ResonantTuple:
    """Modes of one resonance; the first two form the left-hand side.

    Triad: omega1 + omega2 = omega3.  Quartet: omega1 + omega2 = omega3 + omega4.
    """

    modes: tuple
    exact: bool = True
    detuning: float = 0.0

    @property
    def lhs(self) -> tuple:
        return self.modes[:2]

    @property
    def rhs(self) -> tuple:
        return self.modes[2:]

    @property
    def order(self) -> Order:
        return Order.TRIAD if len(self.modes) == 3 else Order.QUARTET

    def is_trivial(self) -> bool:
        return self.order is Order.QUARTET and sorted(self.lhs) == sorted(self.rhs)


@dataclass
class ResonanceSet:
    """Canonically ordered solutions as rows of mode indices into ``modes``."""

    law: DispersionLaw
    condition: ResonanceCondition
    D: int
    modes: list
    index: np.ndarray
    detuning: np.ndarray
    exact: bool = True
    full_lattice: bool = False

    def __len__(self):
        return len(self.index)

    def __getitem__(self, row: int) -> ResonantTuple:
        return ResonantTuple(
            tuple(self.modes[i] for i in self.index[row]), self.exact, float(self.detuning[row])
        )

    def __iter__(self):
        for row in range(len(self)):
            yield self[row]

    def tuples(self) -> list[ResonantTuple]:
        return list(self)

    def as_wavevectors(self) -> set:
        """Solutions as a set of wavevector tuples, independent of the mode list."""
        vecs = [m.wavevector for m in self.modes]
        return {tuple(vecs[i] for i in row) for row in self.index.tolist()}

    def resonant_modes(self) -> list[Mode]:
        used = np.unique(self.index) if len(self) else np.zeros(0, dtype=np.int64)
        return [self.modes[i] for i in used.tolist()]

    def same_solutions(self, other: "ResonanceSet") -> bool:
        if [m.wavevector for m in self.modes] == [m.wavevector for m in other.modes]:
            return np.array_equal(self.index, other.index)
        return self.as_wavevectors() == other.as_wavevectors()

    def stats(self) -> dict:
        return {
            "law": self.law.name,
            "order": self.condition.order.value,
            "momentum_required": self.condition.momentum_required,
            "D": self.D,
            "full_lattice": self.full_lattice,
            "exact": self.exact,
            "total_modes": len(self.modes),
            "resonant_modes": len(self.resonant_modes()),
            "tuples": len(self),
        }


# --------------------------------------------------------------------------
# lattice precomputation shared by both solvers

@dataclass
class _Lattice:
    modes: list
    vcode: list  # linear wavevector codes: vcode(a + b) == vcode(a) + vcode(b)
    q: list
    w: list  # integer weights; a common positive scale does not affect equalities
    freq: np.ndarray
    code_index: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.modes)


def _vector_code(vec, width: int) -> int:
    if len(vec) == 1:
        return vec[0]
    return vec[0] * width + vec[1]


def _build_lattice(law: DispersionLaw, D: int, full_lattice: bool, exact: bool) -> _Lattice:
    modes = spectral_domain(law, D, full_lattice)
    width = 8 * D + 1
    vcode = [_vector_code(m.wavevector, width) for m in modes]
    if exact:
        if not law.is_radical:
            raise UnsupportedLawError(f"{law.name} has no radical form; use tol > 0")
        weights = [exact_weight(law, m.radical) for m in modes]
        scale = 1
        for wt in weights:
            scale = scale * wt.denominator // math.gcd(scale, wt.denominator)
        w = [int(wt * scale) for wt in weights]
        q = [m.radical.q for m in modes]
    else:
        w = q = []
    freq = np.array([m.freq for m in modes])
    return _Lattice(modes, vcode, q, w, freq, {c: i for i, c in enumerate(vcode)})


# --------------------------------------------------------------------------
# task execution

_LATTICE: _Lattice | None = None


def _init_worker(lattice):
    global _LATTICE
    _LATTICE = lattice


def _run_tasks(func, tasks: Sequence, lattice: _Lattice, workers: int) -> list:
    """Apply ``func(lattice, task)`` to every task, results in task order."""
    if workers <= 1 or len(tasks) <= 1:
        return [func(lattice, t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(lattice,)) as ex:
        return list(ex.map(_call_in_worker, [(func, t) for t in tasks]))


def _call_in_worker(item):
    func, task = item
    return func(_LATTICE, task)


def _chunks(n: int, parts: int) -> list[range]:
    parts = max(1, min(parts, n))
    bounds = np.linspace(0, n, parts + 1).astype(int)
    return [range(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


class _Clock:
    def __init__(self, budget: float | None = None, deadline: float | None = None):
        self.start = time.monotonic()
        self.deadline = deadline if budget is None else self.start + budget

    def check(self):
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise BudgetExceeded("enumeration exceeded its time budget", time.monotonic() - self.start)


def _reports_elapsed(solver):
    # worker clocks only know the deadline; report the time spent by the whole call
    @functools.wraps(solver)
    def wrapper(*args, **kwargs):
        t0 = time.monotonic()
        try:
            return solver(*args, **kwargs)
        except BudgetExceeded as exc:
            raise BudgetExceeded(str(exc), time.monotonic() - t0) from None

    return wrapper


# --------------------------------------------------------------------------
# brute force

def _exact_key(q1, w1, q2, w2) -> tuple:
    """Exact value of omega_1 + omega_2 as a sorted sparse vector over radical classes."""
    if q1 == q2:
        return ((q1, w1 + w2),)
    return ((q1, w1), (q2, w2)) if q1 < q2 else ((q2, w2), (q1, w1))


def _bf_triads(lat: _Lattice, task):
    rows, momentum, deadline = task
    clock = _Clock(deadline=deadline)
    q, w, vc = lat.q, lat.w, lat.vcode
    single = defaultdict(list)
    for k in range(lat.size):
        single[((q[k], w[k]),)].append(k)
    out = []
    for i in rows:
        clock.check()
        qi, wi, vi = q[i], w[i], vc[i]
        for j in range(i, lat.size):
            key = _exact_key(qi, wi, q[j], w[j])
            if momentum:
                k = lat.code_index.get(vi + vc[j])
                if k is not None and key == ((q[k], w[k]),):
                    out.append((i, j, k))
            else:
                for k in single.get(key, ()):
                    out.append((i, j, k))
    return out


def _bf_pair_groups(lat: _Lattice, task):
    rows, deadline = task
    clock = _Clock(deadline=deadline)
    q, w = lat.q, lat.w
    groups = defaultdict(list)
    for i in rows:
        clock.check()
        qi, wi = q[i], w[i]
        for j in range(i, lat.size):
            groups[_exact_key(qi, wi, q[j], w[j])].append((i, j))
    return groups


def _bf_quartets_momentum(lat: _Lattice, task):
    I, J, bounds, deadline, include_trivial = task
    clock = _Clock(deadline=deadline)
    q, w = lat.q, lat.w
    out = []
    for a, b in bounds:
        clock.check()
        groups = defaultdict(list)
        for i, j in zip(I[a:b].tolist(), J[a:b].tolist()):
            groups[_exact_key(q[i], w[i], q[j], w[j])].append((i, j))
        out.extend(_pairs_of_pairs(groups.values(), include_trivial))
    return out


def _pairs_by_vector_sum(lat: _Lattice, parts: int):
    """All pairs i <= j sorted by wavevector sum, split into group-aligned chunks."""
    I, J = np.triu_indices(lat.size)
    vc = np.asarray(lat.vcode, dtype=np.int64)
    C = vc[I] + vc[J]
    order = np.argsort(C, kind="stable")
    I, J, C = I[order], J[order], C[order]
    cuts = np.flatnonzero(np.diff(C)) + 1
    bounds = list(zip(np.concatenate(([0], cuts)).tolist(), np.concatenate((cuts, [len(C)])).tolist()))
    chunks = []
    for r in _chunks(len(bounds), parts):
        lo, hi = bounds[r.start][0], bounds[r.stop - 1][1]
        chunks.append((I[lo:hi], J[lo:hi], [(a - lo, b - lo) for a, b in bounds[r.start : r.stop]]))
    return chunks


def _pairs_of_pairs(groups: Iterable[list], include_trivial: bool) -> list:
    out = []
    for pairs in groups:
        pairs = sorted(pairs)
        for a in range(len(pairs)):
            start = a if include_trivial else a + 1
            pa = pairs[a]
            for b in range(start, len(pairs)):
                out.append(pa + pairs[b])
    return out


def _bf_near_triads(lat: _Lattice, task):
    rows, momentum, tol, deadline = task
    clock = _Clock(deadline=deadline)
    f = lat.freq
    order = np.argsort(f, kind="stable")
    fs = f[order]
    out, det = [], []
    for i in rows:
        clock.check()
        js = np.arange(i, lat.size)
        s = f[i] + f[js]
        if momentum:
            for j, sij in zip(js.tolist(), s.tolist()):
                k = lat.code_index.get(lat.vcode[i] + lat.vcode[j])
                if k is not None and abs(sij - f[k]) <= tol:
                    out.append((i, j, k))
                    det.append(abs(sij - f[k]))
        else:
            lo = np.searchsorted(fs, s - tol, side="left")
            hi = np.searchsorted(fs, s + tol, side="right")
            for j, sij, a, b in zip(js.tolist(), s.tolist(), lo.tolist(), hi.tolist()):
                for k in order[a:b].tolist():
                    out.append((i, j, k))
                    det.append(abs(sij - f[k]))
    return out, det


def _near_quartets(lat: _Lattice, momentum: bool, tol: float, include_trivial: bool, clock: _Clock):
    n = lat.size
    I, J = np.triu_indices(n)
    S = lat.freq[I] + lat.freq[J]
    if momentum:
        vc = np.asarray(lat.vcode, dtype=np.int64)
        C = vc[I] + vc[J]
    else:
        C = np.zeros_like(I)
    order = np.lexsort((S, C))
    Cs, Ss = C[order], S[order]
    bounds = np.flatnonzero(np.diff(Cs)) + 1
    starts = np.concatenate(([0], bounds))
    ends = np.concatenate((bounds, [len(Cs)]))
    out, det = [], []
    for a0, b0 in zip(starts.tolist(), ends.tolist()):
        clock.check()
        seg = Ss[a0:b0]
        hi = np.searchsorted(seg, seg + tol, side="right")
        for u in range(len(seg)):
            first = u if include_trivial else u + 1
            if hi[u] <= first:
                continue
            pu = order[a0 + u]
            lhs = (int(I[pu]), int(J[pu]))
            for v in range(first, int(hi[u])):
                pv = order[a0 + v]
                rhs = (int(I[pv]), int(J[pv]))
                out.append(lhs + rhs if lhs <= rhs else rhs + lhs)
                det.append(float(seg[v] - seg[u]))
    return out, det


@_reports_elapsed
def solve_bruteforce(
    law: DispersionLaw,
    cond: ResonanceCondition,
    D: int = DEFAULT_DOMAIN,
    tol: float = 0.0,
    *,
    include_trivial: bool = False,
    allow_repeated: bool = True,
    full_lattice: bool = False,
    workers: int = 1,
    budget: float | None = None,
) -> ResonanceSet:
    """Exhaustive enumeration over all mode pairs of the lattice.

    ``tol == 0`` compares sums exactly through radical forms; ``tol > 0``
    accepts near-resonances with ``|sum(+-omega)| <= tol`` in floating point.
    """
    if tol < 0:
        raise DomainError("tolerance must be non-negative")
    exact = tol == 0
    clock = _Clock(budget)
    lat = _build_lattice(law, D, full_lattice, exact)
    parts = max(1, workers) * 4
    if cond.order is Order.TRIAD:
        if exact:
            tasks = [(r, cond.momentum_required, clock.deadline) for r in _chunks(lat.size, parts)]
            rows = [t for chunk in _run_tasks(_bf_triads, tasks, lat, workers) for t in chunk]
            det = None
        else:
            tasks = [(r, cond.momentum_required, tol, clock.deadline) for r in _chunks(lat.size, parts)]
            rows, det = [], []
            for r, d in _run_tasks(_bf_near_triads, tasks, lat, workers):
                rows.extend(r)
                det.extend(d)
    elif exact and cond.momentum_required:
        tasks = [(I, J, b, clock.deadline, include_trivial) for I, J, b in _pairs_by_vector_sum(lat, parts)]
        rows = [t for chunk in _run_tasks(_bf_quartets_momentum, tasks, lat, workers) for t in chunk]
        det = None
    elif exact:
        tasks = [(r, clock.deadline) for r in _chunks(lat.size, parts)]
        merged = defaultdict(list)
        for part in _run_tasks(_bf_pair_groups, tasks, lat, workers):
            for key, pairs in part.items():
                merged[key].extend(pairs)
        clock.check()
        rows = _pairs_of_pairs(merged.values(), include_trivial)
        det = None
    else:
        rows, det = _near_quartets(lat, cond.momentum_required, tol, include_trivial, clock)
    clock.check()
    return _finish(lat, law, cond, D, full_lattice, rows, det, exact, allow_repeated)


# --------------------------------------------------------------------------
# q-class solver

def _qc_bucket(lat: _Lattice, task):
    members, order, momentum, include_trivial, deadline = task
    clock = _Clock(deadline=deadline)
    w, vc = lat.w, lat.vcode
    out = []
    if order is Order.TRIAD:
        by_weight = defaultdict(list)
        for k in members:
            by_weight[w[k]].append(k)
        member_set = set(members)
        for a, i in enumerate(members):
            clock.check()
            for j in members[a:]:
                target = w[i] + w[j]
                if momentum:
                    k = lat.code_index.get(vc[i] + vc[j])
                    if k is not None and k in member_set and w[k] == target:
                        out.append((i, j, k))
                else:
                    for k in by_weight.get(target, ()):
                        out.append((i, j, k))
        return out
    groups = defaultdict(list)
    for a, i in enumerate(members):
        clock.check()
        for j in members[a:]:
            key = (w[i] + w[j], vc[i] + vc[j]) if momentum else w[i] + w[j]
            groups[key].append((i, j))
    return _pairs_of_pairs(groups.values(), include_trivial)


def _qc_cross_classes(lat: _Lattice, momentum: bool, clock: _Clock) -> list:
    """Quartets with omega1 == omega3 and omega2 == omega4 in two different q-classes."""
    classes = defaultdict(list)
    for i in range(lat.size):
        classes[(lat.q[i], lat.w[i])].append(i)
    keys = sorted(classes)
    out = []
    if momentum:
        # a - c == d - b with a, c in one frequency class and b, d in another
        by_shift = defaultdict(list)
        for key in keys:
            members = classes[key]
            if len(members) < 2:
                continue
            for x in members:
                for y in members:
                    if x != y:
                        by_shift[lat.vcode[x] - lat.vcode[y]].append((key[0], x, y))
        found = set()
        for shift in sorted(by_shift):
            clock.check()
            entries = by_shift[shift]
            for q1, a, c in entries:
                for q2, d, b in entries:
                    if q1 == q2:
                        continue
                    lhs = (a, b) if a <= b else (b, a)
                    rhs = (c, d) if c <= d else (d, c)
                    found.add(lhs + rhs if lhs <= rhs else rhs + lhs)
        return list(found)
    for u, k1 in enumerate(keys):
        clock.check()
        f1 = classes[k1]
        for k2 in keys[u + 1 :]:
            if k2[0] == k1[0]:
                continue
            f2 = classes[k2]
            if len(f1) == 1 and len(f2) == 1:
                continue
            combos = [(a, b) if a <= b else (b, a) for a in f1 for b in f2]
            for s, lhs in enumerate(combos):
                for rhs in combos[s + 1 :]:
                    out.append(lhs + rhs if lhs <= rhs else rhs + lhs)
    return out


@_reports_elapsed
def solve_qclass(
    law: DispersionLaw,
    cond: ResonanceCondition,
    D: int = DEFAULT_DOMAIN,
    tol: float = 0.0,
    *,
    include_trivial: bool = False,
    allow_repeated: bool = True,
    full_lattice: bool = False,
    workers: int = 1,
    budget: float | None = None,
) -> ResonanceSet:
    """Exact solver restricted to q-class structure; same output as the brute force."""
    if tol != 0:
        raise DomainError("the q-class solver is exact only; use solve_bruteforce for tol > 0")
    if not law.is_radical:
        raise UnsupportedLawError(f"{law.name} has no radical form")
    clock = _Clock(budget)
    lat = _build_lattice(law, D, full_lattice, exact=True)
    buckets = defaultdict(list)
    for i in range(lat.size):
        buckets[lat.q[i]].append(i)
    # largest buckets first so that worker load evens out
    ordered = sorted(buckets.values(), key=lambda b: (-len(b), b[0]))
    min_size = 1 if cond.order is Order.TRIAD else 2
    tasks = [
        (members, cond.order, cond.momentum_required, include_trivial and cond.order is Order.QUARTET, clock.deadline)
        for members in ordered
        if len(members) >= min_size
    ]
    rows = [t for chunk in _run_tasks(_qc_bucket, tasks, lat, workers) for t in chunk]
    if cond.order is Order.QUARTET:
        rows.extend(_qc_cross_classes(lat, cond.momentum_required, clock))
        if include_trivial:
            # singleton buckets only produce trivial pairings with modes of other classes
            seen = set(rows)
            for i in range(lat.size):
                for j in range(i, lat.size):
                    t = (i, j, i, j)
                    if t not in seen:
                        rows.append(t)
    clock.check()
    return _finish(lat, law, cond, D, full_lattice, rows, None, True, allow_repeated)


def _finish(lat, law, cond, D, full_lattice, rows, det, exact, allow_repeated) -> ResonanceSet:
    arity = cond.arity
    if det is None:
        det = [0.0] * len(rows)
    if not allow_repeated:
        keep = [k for k, r in enumerate(rows) if len(set(r)) == arity]
        rows = [rows[k] for k in keep]
        det = [det[k] for k in keep]
    if rows:
        index = np.asarray(rows, dtype=np.int64).reshape(-1, arity)
        detuning = np.abs(np.asarray(det, dtype=float))
        order = np.lexsort(index.T[::-1])
        index, detuning = index[order], detuning[order]
        if len(index) > 1:
            fresh = np.concatenate(([True], np.any(index[1:] != index[:-1], axis=1)))
            index, detuning = index[fresh], detuning[fresh]
    else:
        index = np.zeros((0, arity), dtype=np.int64)
        detuning = np.zeros(0)
    return ResonanceSet(law, cond, D, lat.modes, index, detuning, exact, full_lattice)


# --------------------------------------------------------------------------
# frequency-only detection (laboratory spectra)

def detect_triads_from_frequencies(freqs, tol: float = 0.0) -> list[tuple]:
    """All (i, j, k) with |f_i - f_j - f_k| <= tol, i not in {j, k}, j < k.

    ``freqs`` is a mapping label -> frequency or a sequence of frequencies;
    indices refer to its iteration order.  Each entry is a distinct mode, so a
    mode never pairs with itself (20 = 10 + 10 needs two 10 Hz entries).
    """
    values = list(freqs.values()) if hasattr(freqs, "values") else list(freqs)
    if any(not v > 0 for v in values):
        raise DomainError("frequencies must be positive")
    n = len(values)
    out = []
    for i in range(n):
        for j in range(n):
            for k in range(j + 1, n):
                if i in (j, k):
                    continue
                if abs(values[i] - values[j] - values[k]) <= tol:
                    out.append((i, j, k))
    return out


def frequency_triads(freqs, tol: float = 0.0) -> list[ResonantTuple]:
    """Detected triads as tuples over the frequency labels (list indices for sequences).

    The high-frequency member of each triple goes to the last slot.
    """
    labels = list(freqs.keys()) if hasattr(freqs, "keys") else list(range(len(freqs)))
    return [
        ResonantTuple((labels[j], labels[k], labels[i]))
        for i, j, k in detect_triads_from_frequencies(freqs, tol)
    ]
