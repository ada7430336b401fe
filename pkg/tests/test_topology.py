import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dwt.dispersion import DispersionLaw
from dwt.errors import UnsupportedOrderError
from dwt.resonance import Order, ResonanceCondition, ResonantTuple, solve_qclass
from dwt.topology import (
    build_clusters,
    classify,
    condition_matrix,
    generate_system,
    in_span,
    integer_nullspace,
    integrable_flag,
    nr_diagram,
    rational_rank,
    to_dot,
    to_text,
)


def T(a, b, c):
    """Triad a + b -> c (c is the A-mode)."""
    return ResonantTuple((a, b, c))


def pa_butterfly():
    # triad b: 1b + 2b -> 3b ; triad a: 3b + 2a -> 3a, sharing 3b (A in b, P in a)
    return build_clusters([T("1b", "2b", "3b"), T("3b", "2a", "3a")])[0]


def test_build_clusters_examples():
    (c,) = build_clusters([T(1, 2, 3), T(3, 4, 5)])
    assert c.size == 5 and len(c.tuples) == 2
    assert len(build_clusters([T(1, 2, 3), T(4, 5, 6)])) == 2
    lab = build_clusters([T("A2", "A3", "A1"), T("A4", "A5", "A2"), T("A5", "A7", "A6")])
    assert len(lab) == 1 and lab[0].size == 7 and len(lab[0].tuples) == 3
    assert build_clusters([]) == []


def test_cluster_ordering_and_partition():
    tuples = [T(10, 11, 12), T(1, 2, 3), T(3, 4, 5), T(20, 21, 22), T(0, 30, 31)]
    clusters = build_clusters(tuples)
    keys = [(c.size, c.modes[0]) for c in clusters]
    assert keys == sorted(keys)
    assert sorted(t.modes for c in clusters for t in c.tuples) == sorted(t.modes for t in tuples)
    mode_sets = [set(c.modes) for c in clusters]
    for x, y in itertools.combinations(mode_sets, 2):
        assert not x & y
    for c in clusters:
        assert set(m for t in c.tuples for m in t.modes) == set(c.modes)


def test_butterfly_labels():
    assert classify(pa_butterfly())[1] == "PA-butterfly"
    assert classify(build_clusters([T(1, 2, 3), T(4, 5, 3)])[0])[1] == "AA-butterfly"
    assert classify(build_clusters([T(1, 2, 3), T(1, 4, 5)])[0])[1] == "PP-butterfly"
    assert classify(build_clusters([T(1, 2, 3)])[0])[1] == "Isolated-triad"


def test_star_chain_generic_labels():
    star = build_clusters([T(0, 1, 2), T(0, 3, 4), T(5, 0, 6)])[0]
    assert classify(star)[1] == "Star(3)"
    chain = build_clusters([T(1, 2, 3), T(3, 4, 5), T(5, 6, 7), T(7, 8, 9)])[0]
    assert classify(chain)[1] == "Chain(4)"
    dense = build_clusters([T(1, 2, 3), T(1, 2, 4), T(3, 4, 5)])[0]
    assert classify(dense)[1] == "Generic(3-triad)"


def test_nr_diagram_roles():
    diagram, _ = classify(pa_butterfly())
    assert diagram.vertices == (0, 1)
    (edge,) = diagram.edges
    assert edge.mode == "3b" and edge.roles == ("A", "P")
    assert diagram.degree(0) == diagram.degree(1) == 1


def test_integrable_flag_examples():
    assert integrable_flag(build_clusters([T(1, 2, 3)])[0])
    assert integrable_flag(pa_butterfly())
    assert not integrable_flag(build_clusters([T(0, 1, 2), T(0, 3, 4), T(5, 0, 6)])[0])


def test_quartet_clusters_rejected():
    q = ResonantTuple(((1, 1), (4, 4), (2, 2), (3, 3)))
    (c,) = build_clusters([q])
    assert not c.is_triad_cluster
    with pytest.raises(UnsupportedOrderError):
        nr_diagram(c)
    with pytest.raises(UnsupportedOrderError):
        classify(c)
    with pytest.raises(UnsupportedOrderError):
        generate_system(c)
    assert not integrable_flag(c)


def test_pa_butterfly_system_matches_hand_written_equations():
    cluster = pa_butterfly()
    rng = np.random.default_rng(11)
    Za, Zb = 0.7, -1.3
    # tuples are (triad b, triad a)
    system = generate_system(cluster, [Zb, Za])
    slot = {m: j for j, m in enumerate(system.dof)}
    for _ in range(20):
        B = rng.normal(size=5) + 1j * rng.normal(size=5)
        b1b, b2b, b3b, b2a, b3a = (B[slot[k]] for k in ("1b", "2b", "3b", "2a", "3a"))
        want = {
            "1b": Zb * np.conj(b2b) * b3b,
            "2b": Zb * np.conj(b1b) * b3b,
            "3b": -Zb * b1b * b2b + Za * np.conj(b2a) * b3a,
            "2a": Za * np.conj(b3b) * b3a,
            "3a": -Za * b3b * b2a,
        }
        got = system.rhs(B)
        for k, v in want.items():
            assert got[slot[k]] == pytest.approx(v, rel=1e-14, abs=1e-14)


def test_pa_butterfly_invariants_span():
    cluster = pa_butterfly()
    system = generate_system(cluster)
    order = list(system.dof)

    def vec(coeffs):
        return [coeffs.get(m, 0) for m in order]

    I_a = vec({"2a": 1, "3a": 1})
    I_b = vec({"1b": 1, "2b": -1})
    I_ab = vec({"1b": 1, "3b": 1, "3a": 1})
    assert len(system.invariants_basis) == 3
    for target in (I_a, I_b, I_ab):
        assert in_span(system.invariants_basis, target)
    assert not in_span(system.invariants_basis, vec({"1b": 1}))
    assert rational_rank([I_a, I_b, I_ab]) == 3


def test_isolated_triad_manley_rowe():
    system = generate_system(build_clusters([T(1, 2, 3)])[0])
    assert in_span(system.invariants_basis, [1, 0, 1])
    assert in_span(system.invariants_basis, [0, 1, 1])
    assert len(system.invariants_basis) == 2


def test_coupling_count_checked():
    with pytest.raises(ValueError):
        generate_system(pa_butterfly(), [1.0])


def test_integer_nullspace_canonical():
    basis = integer_nullspace([[1, 1, -1]], 3)
    assert basis == integer_nullspace([[2, 2, -2]], 3)
    for v in basis:
        assert all(isinstance(x, int) for x in v)
        assert np.gcd.reduce(np.abs(v)) == 1
    assert integer_nullspace([], 2) == [(1, 0), (0, 1)]


def _all_triads(n_modes):
    out = []
    for a in range(n_modes):
        rest = [m for m in range(n_modes) if m != a]
        for p1, p2 in itertools.combinations(rest, 2):
            out.append(T(p1, p2, a))
    return out


def _connected(tuples):
    groups = [set(t.modes) for t in tuples]
    merged = True
    while merged and len(groups) > 1:
        merged = False
        for x, y in itertools.combinations(range(len(groups)), 2):
            if groups[x] & groups[y]:
                groups[x] |= groups.pop(y)
                merged = True
                break
    return len(groups) == 1


def _check_system(cluster):
    system = generate_system(cluster)
    cond = np.array(condition_matrix(cluster), dtype=float)
    rank = np.linalg.matrix_rank(cond)
    basis = np.array(system.invariants_basis, dtype=float).reshape(-1, cluster.size)
    assert len(basis) == cluster.size - rank
    if rank == len(cluster.tuples):
        assert len(basis) == cluster.size - len(cluster.tuples)
    if len(basis):
        assert np.linalg.matrix_rank(basis) == len(basis)
        assert not np.any(cond @ basis.T)
    for t in cluster.tuples:
        s = [cluster.modes.index(m) for m in t.modes]
        for c in system.invariants_basis:
            assert c[s[0]] + c[s[1]] - c[s[2]] == 0


@pytest.mark.slow
def test_nullspace_rank_exhaustive_small_clusters():
    triads = _all_triads(5)
    checked = 0
    for n in range(1, 5):
        for combo in itertools.combinations(triads, n):
            if not _connected(combo):
                continue
            clusters = build_clusters(list(combo))
            assert len(clusters) == 1
            _check_system(clusters[0])
            checked += 1
    assert checked > 20_000


@st.composite
def grown_clusters(draw, max_triads=4):
    """Connected triad clusters grown by attaching triads to existing modes."""
    n = draw(st.integers(1, max_triads))
    next_label = 3
    tuples = [T(0, 1, 2)]
    for _ in range(n - 1):
        existing = sorted({m for t in tuples for m in t.modes})
        shared = draw(st.sampled_from(existing))
        others = []
        for _ in range(2):
            if draw(st.booleans()):
                others.append(draw(st.sampled_from(existing)))
            else:
                others.append(next_label)
                next_label += 1
        slots = [shared] + others
        perm = draw(st.permutations(range(3)))
        a, b, c = (slots[i] for i in perm)
        if c in (a, b):
            continue
        new = T(min(a, b), max(a, b), c)
        if new not in tuples:
            tuples.append(new)
    return tuples


@given(grown_clusters())
@settings(max_examples=300, deadline=None)
def test_grown_clusters_system_properties(tuples):
    (cluster,) = build_clusters(tuples)
    _check_system(cluster)


@given(grown_clusters(), st.randoms(use_true_random=False))
@settings(max_examples=300, deadline=None)
def test_classify_invariant_under_relabeling(tuples, rnd):
    (cluster,) = build_clusters(tuples)
    _, label = classify(cluster)
    modes = sorted({m for t in tuples for m in t.modes})
    fresh = [f"x{v}" for v in rnd.sample(range(100, 200), len(modes))]
    rename = dict(zip(modes, fresh))
    shuffled = [T(rename[t.modes[0]], rename[t.modes[1]], rename[t.modes[2]]) for t in tuples]
    rnd.shuffle(shuffled)
    (relabeled,) = build_clusters(shuffled)
    diagram2, label2 = classify(relabeled)
    assert label2 == label
    roles = sorted(tuple(sorted(e.roles)) for e in classify(cluster)[0].edges)
    assert roles == sorted(tuple(sorted(e.roles)) for e in diagram2.edges)
    sys1, sys2 = generate_system(cluster), generate_system(relabeled)
    assert len(sys1.invariants_basis) == len(sys2.invariants_basis)


@given(grown_clusters(), st.integers(0, 2**32 - 1))
@settings(max_examples=200, deadline=None)
def test_invariant_rates_vanish(tuples, seed):
    (cluster,) = build_clusters(tuples)
    rng = np.random.default_rng(seed)
    Z = rng.normal(size=len(cluster.tuples)).tolist()
    system = generate_system(cluster, Z)
    B = rng.normal(size=system.size) + 1j * rng.normal(size=system.size)
    rates = system.invariant_rates(B)
    # independent evaluation of d/dt sum c_j |B_j|^2 = sum c_j 2 Re(conj(B_j) dB_j/dt)
    dB = system.rhs(B)
    manual = [sum(c * 2 * (np.conj(b) * d).real for c, b, d in zip(vec, B, dB)) for vec in system.invariants_basis]
    scale = np.abs(B).max() ** 3 * max(1.0, np.abs(Z).max()) * system.size
    assert np.allclose(rates, manual, atol=1e-12 * scale)
    assert np.all(np.abs(rates) <= 1e-12 * scale)


def test_real_resonance_clusters_have_valid_systems():
    law = DispersionLaw.inverse_root_2d()
    sols = solve_qclass(law, ResonanceCondition(Order.TRIAD, True), 30)
    sols = sols if len(sols) else solve_qclass(law, ResonanceCondition(Order.TRIAD), 8)
    clusters = build_clusters(sols.tuples())
    assert clusters
    for c in clusters:
        _check_system(c)
        classify(c)


def test_dot_rendering_roles():
    dot = to_dot(pa_butterfly())
    assert dot.startswith("graph cluster {")
    assert dot.count("style=bold") == 2
    assert dot.count("style=dashed") == 4
    text = to_text(pa_butterfly())
    assert "label: PA-butterfly" in text
    assert "T0 -[3b: AP]- T1" in text


def test_random_relabel_smoke():
    rnd = random.Random(3)
    tuples = [T(1, 2, 3), T(3, 4, 5), T(5, 6, 7)]
    for _ in range(10):
        rnd.shuffle(tuples)
        assert classify(build_clusters(tuples)[0])[1] == "Chain(3)"
