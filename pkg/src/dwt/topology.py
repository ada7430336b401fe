"""Resonance clusters, NR-diagrams and the dynamical systems they define.

A triad omega1 + omega2 = omega3 has one A-mode (omega3, the summed frequency)
and two P-modes.  Clusters are connected components of the hypergraph whose
hyperedges are resonant tuples.  For triad clusters the NR-diagram fixes the
amplitude equations

    dB1/dt += Z B2* B3,   dB2/dt += Z B1* B3,   dB3/dt += -Z B1 B2

per triad, and every integer vector c with c1 + c2 - c3 = 0 on all triads
gives a conserved quantity sum_j c_j |B_j|^2.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, lcm
from typing import Sequence

import numpy as np

from .errors import UnsupportedOrderError
from .resonance import Order, ResonantTuple

ACTIVE = "A"
PASSIVE = "P"


@dataclass(frozen=True)
class Cluster:
    modes: tuple
    tuples: tuple

    @property
    def size(self) -> int:
        return len(self.modes)

    @property
    def is_triad_cluster(self) -> bool:
        return all(t.order is Order.TRIAD for t in self.tuples)

    def incidence(self) -> dict:
        """mode -> indices of tuples containing it."""
        inc = {m: [] for m in self.modes}
        for a, t in enumerate(self.tuples):
            for m in dict.fromkeys(t.modes):
                inc[m].append(a)
        return inc


def build_clusters(tuples: Sequence[ResonantTuple]) -> list[Cluster]:
    """Connected components of the mode-sharing graph.

    Ordered by (number of modes, smallest mode); inside a cluster modes are
    sorted and tuples keep their input order.
    """
    parent: dict = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for t in tuples:
        for m in t.modes:
            parent.setdefault(m, m)
        root = find(t.modes[0])
        for m in t.modes[1:]:
            other = find(m)
            if other != root:
                parent[other] = root
    members: dict = {}
    for m in parent:
        members.setdefault(find(m), []).append(m)
    owned: dict = {}
    for t in tuples:
        owned.setdefault(find(t.modes[0]), []).append(t)
    clusters = [Cluster(tuple(sorted(ms)), tuple(owned[root])) for root, ms in members.items()]
    clusters.sort(key=lambda c: (c.size, c.modes[0]))
    return clusters


@dataclass(frozen=True)
class NREdge:
    triads: tuple  # (a, b), a < b
    mode: object
    roles: tuple  # role of the mode in triad a and in triad b


@dataclass(frozen=True)
class NRDiagram:
    vertices: tuple  # triad indices
    edges: tuple
    roles: tuple  # per triad: {mode: role}

    def degree(self, vertex: int) -> int:
        return sum(vertex in e.triads for e in self.edges)


def role_of(triad: ResonantTuple, mode) -> str:
    return ACTIVE if triad.modes[2] == mode else PASSIVE


def nr_diagram(cluster: Cluster) -> NRDiagram:
    if not cluster.is_triad_cluster:
        raise UnsupportedOrderError("NR-diagrams are defined for triad clusters only")
    roles = tuple({m: role_of(t, m) for m in t.modes} for t in cluster.tuples)
    edges = []
    for mode, owners in cluster.incidence().items():
        for x in range(len(owners)):
            for y in range(x + 1, len(owners)):
                a, b = owners[x], owners[y]
                edges.append(NREdge((a, b), mode, (roles[a][mode], roles[b][mode])))
    edges.sort(key=lambda e: (e.triads, e.mode))
    return NRDiagram(tuple(range(len(cluster.tuples))), tuple(edges), roles)


def _is_path(diagram: NRDiagram) -> bool:
    n = len(diagram.vertices)
    pairs = {e.triads for e in diagram.edges}
    if len(pairs) != len(diagram.edges) or len(pairs) != n - 1:
        return False
    degrees = [diagram.degree(v) for v in diagram.vertices]
    return max(degrees) <= 2


def classify(cluster: Cluster) -> tuple[NRDiagram, str]:
    """NR-diagram plus a topology label.

    Labels: ``Isolated-triad``, ``PP-/PA-/AA-butterfly`` (two triads sharing
    one mode, named by its roles), ``Chain(n)`` (triads in a path, each
    neighbouring pair sharing one mode), ``Star(n)`` (all triads share one
    common mode and nothing else), ``Generic(n-triad)`` otherwise.
    """
    diagram = nr_diagram(cluster)
    n = len(cluster.tuples)
    if n == 1:
        return diagram, "Isolated-triad"
    if n == 2 and len(diagram.edges) == 1:
        actives = diagram.edges[0].roles.count(ACTIVE)
        return diagram, ("PP", "PA", "AA")[actives] + "-butterfly"
    shared = {e.mode for e in diagram.edges}
    if n >= 3 and len(shared) == 1:
        mode = next(iter(shared))
        if all(mode in t.modes for t in cluster.tuples):
            return diagram, f"Star({n})"
    if n >= 3 and _is_path(diagram):
        return diagram, f"Chain({n})"
    return diagram, f"Generic({n}-triad)"


def integrable_flag(cluster: Cluster) -> bool:
    """Heuristic: isolated triads and butterflies are integrable, larger clusters are not assumed to be."""
    if not cluster.is_triad_cluster:
        return False
    _, label = classify(cluster)
    return label == "Isolated-triad" or label.endswith("butterfly")


# --------------------------------------------------------------------------
# exact linear algebra

def _rref(rows: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    m = [list(r) for r in rows]
    pivots = []
    if not m:
        return m, pivots
    ncols = len(m[0])
    r = 0
    for col in range(ncols):
        pivot = next((i for i in range(r, len(m)) if m[i][col] != 0), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        inv = 1 / m[r][col]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][col] != 0:
                f = m[i][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(col)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def rational_rank(rows: Sequence[Sequence]) -> int:
    return len(_rref([[Fraction(x) for x in row] for row in rows])[1])


def _primitive(vec: list[Fraction]) -> tuple[int, ...]:
    den = lcm(*(x.denominator for x in vec)) if vec else 1
    ints = [int(x * den) for x in vec]
    g = gcd(*ints) if any(ints) else 1
    ints = [x // g for x in ints]
    lead = next((x for x in ints if x != 0), 1)
    return tuple(-x for x in ints) if lead < 0 else tuple(ints)


def integer_nullspace(matrix: Sequence[Sequence[int]], ncols: int) -> list[tuple[int, ...]]:
    """Basis of the rational null space as coprime integer vectors in canonical echelon form."""
    rows, pivots = _rref([[Fraction(x) for x in row] for row in matrix]) if matrix else ([], [])
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        vec = [Fraction(0)] * ncols
        vec[f] = Fraction(1)
        for row, p in zip(rows, pivots):
            vec[p] = -row[f]
        basis.append(vec)
    if not basis:
        return []
    echelon, _ = _rref(basis)
    return [_primitive(v) for v in echelon]


def in_span(basis: Sequence[Sequence[int]], vec: Sequence[int]) -> bool:
    return rational_rank(list(basis) + [list(vec)]) == rational_rank(basis)


# --------------------------------------------------------------------------
# dynamical system

@dataclass
class ClusterSystem:
    """Amplitude equations of a triad cluster, one complex slot per mode."""

    dof: tuple  # modes, slot j <-> dof[j]
    couplings: list  # (triad index, Z, (s1, s2, s3)); s3 is the A-mode slot
    invariants_basis: list = field(default_factory=list)

    def __post_init__(self):
        if self.couplings:
            s = np.array([c[2] for c in self.couplings], dtype=np.int64)
            self._s1, self._s2, self._s3 = s[:, 0], s[:, 1], s[:, 2]
            self._Z = np.array([c[1] for c in self.couplings], dtype=float)
        else:
            self._s1 = self._s2 = self._s3 = np.zeros(0, dtype=np.int64)
            self._Z = np.zeros(0)
        self._C = np.array(self.invariants_basis, dtype=float).reshape(-1, len(self.dof))

    @property
    def size(self) -> int:
        return len(self.dof)

    def rhs(self, B: np.ndarray) -> np.ndarray:
        B = np.asarray(B, dtype=complex)
        s1, s2, s3, Z = self._s1, self._s2, self._s3, self._Z
        dB = np.zeros_like(B)
        np.add.at(dB, s1, Z * np.conj(B[s2]) * B[s3])
        np.add.at(dB, s2, Z * np.conj(B[s1]) * B[s3])
        np.add.at(dB, s3, -Z * B[s1] * B[s2])
        return dB

    def invariants(self, B: np.ndarray) -> np.ndarray:
        """Values of sum_j c_j |B_j|^2 for every basis vector c."""
        return self._C @ (np.abs(np.asarray(B)) ** 2)

    def invariant_rates(self, B: np.ndarray) -> np.ndarray:
        """Exact time derivatives of the invariants along the vector field."""
        B = np.asarray(B, dtype=complex)
        return self._C @ (2.0 * np.real(np.conj(B) * self.rhs(B)))


def condition_matrix(cluster: Cluster) -> list[list[int]]:
    """Per-triad rows of c1 + c2 - c3 over the cluster's mode slots."""
    slot = {m: j for j, m in enumerate(cluster.modes)}
    rows = []
    for t in cluster.tuples:
        row = [0] * len(cluster.modes)
        row[slot[t.modes[0]]] += 1
        row[slot[t.modes[1]]] += 1
        row[slot[t.modes[2]]] -= 1
        rows.append(row)
    return rows


def generate_system(cluster: Cluster, Z: Sequence[float] | None = None) -> ClusterSystem:
    if not cluster.is_triad_cluster:
        raise UnsupportedOrderError("dynamical systems are generated for triad clusters only")
    if Z is None:
        Z = [1.0] * len(cluster.tuples)
    if len(Z) != len(cluster.tuples):
        raise ValueError(f"need one coupling per triad ({len(cluster.tuples)}), got {len(Z)}")
    slot = {m: j for j, m in enumerate(cluster.modes)}
    couplings = [
        (a, float(z), tuple(slot[m] for m in t.modes)) for a, (t, z) in enumerate(zip(cluster.tuples, Z))
    ]
    basis = integer_nullspace(condition_matrix(cluster), len(cluster.modes))
    return ClusterSystem(tuple(cluster.modes), couplings, basis)


# --------------------------------------------------------------------------
# renderings

def to_dot(cluster: Cluster, name: str = "cluster") -> str:
    """Graphviz rendering: triad nodes joined to mode nodes, bold for A-role, dashed for P-role."""
    lines = [f"graph {name} {{", "  node [fontname=Helvetica];"]
    for j, m in enumerate(cluster.modes):
        lines.append(f'  m{j} [shape=circle, label="{m}"];')
    slot = {m: j for j, m in enumerate(cluster.modes)}
    for a, t in enumerate(cluster.tuples):
        lines.append(f'  t{a} [shape=box, label="T{a}"];')
        for m in dict.fromkeys(t.modes):
            style = "bold" if t.order is Order.TRIAD and role_of(t, m) == ACTIVE else "dashed"
            lines.append(f"  t{a} -- m{slot[m]} [style={style}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_text(cluster: Cluster) -> str:
    out = []
    for a, t in enumerate(cluster.tuples):
        lhs = " + ".join(str(m) for m in t.lhs)
        rhs = " + ".join(str(m) for m in t.rhs)
        out.append(f"T{a}: {lhs} -> {rhs}")
    if cluster.is_triad_cluster:
        diagram, label = classify(cluster)
        out.append(f"label: {label}")
        for e in diagram.edges:
            out.append(f"  T{e.triads[0]} -[{e.mode}: {e.roles[0]}{e.roles[1]}]- T{e.triads[1]}")
    return "\n".join(out) + "\n"
