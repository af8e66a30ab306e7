"""Conditional characteristic graphs, independent sets, and support sets.

The graph ``G_{L|K}(f)`` has the positive-probability composite L-symbols
as vertices; two vertices are connected when some shared K-context makes
them f-confusable.  When L, K, and the function's domain share axes, each
(l, k, s) triple must be internally consistent on the shared components;
inconsistent triples carry zero probability and never create edges.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .prob import ZERO_TOL, Alphabet, Channel, FunctionSpec, JointPmf, ProbabilityError


class GraphError(ValueError):
    """Invalid graph construction or hypothesis violation."""


class IndependentSetCapError(RuntimeError):
    """Raised when maximal independent set enumeration exceeds its cap."""

    def __init__(self, count: int, cap: int):
        super().__init__(
            f"too many independent sets: reached {count} with cap {cap}"
        )
        self.count = count
        self.cap = cap


@dataclass(frozen=True)
class CharGraph:
    """A conditional characteristic graph over composite L-symbols.

    ``vertices`` are tuples of symbols in L-axis order (1-tuples for a
    single axis).  Adjacency is symmetric and irreflexive.
    """

    vertices: tuple
    adjacency: np.ndarray  # boolean, symmetric, zero diagonal
    l_axes: tuple
    k_axes: tuple
    s_axes: tuple

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=bool)
        n = len(self.vertices)
        if adj.shape != (n, n):
            raise GraphError("adjacency shape mismatch")
        if np.any(adj != adj.T) or np.any(np.diag(adj)):
            raise GraphError("adjacency must be symmetric and irreflexive")
        adj.setflags(write=False)
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "adjacency", adj)

    def __len__(self) -> int:
        return len(self.vertices)

    def index(self, vertex) -> int:
        try:
            return self.vertices.index(vertex)
        except ValueError:
            raise GraphError(f"unknown vertex {vertex!r}") from None

    def neighbors(self, i: int) -> np.ndarray:
        return np.nonzero(self.adjacency[i])[0]

    def edge_count(self) -> int:
        return int(self.adjacency.sum()) // 2

    def is_independent(self, vertex_set: Iterable) -> bool:
        idx = [self.index(v) for v in vertex_set]
        return not any(self.adjacency[i, j] for i, j in itertools.combinations(idx, 2))

    def complement_adjacency(self) -> np.ndarray:
        comp = ~self.adjacency
        np.fill_diagonal(comp := comp.copy(), False)
        return comp

    def to_adjacency_lines(self) -> list[str]:
        """Debug export: one ``vertex: neighbor neighbor ...`` line each."""
        fmt = lambda v: "|".join(str(s) for s in v)
        lines = []
        for i, v in enumerate(self.vertices):
            nbrs = " ".join(fmt(self.vertices[j]) for j in self.neighbors(i))
            lines.append(f"{fmt(v)}: {nbrs}".rstrip())
        return lines


@dataclass(frozen=True)
class IndependentSetFamily:
    """A list of independent sets of a parent graph (possibly a multiset)."""

    graph: CharGraph
    sets: tuple  # tuple of frozensets of vertices
    is_multiset_family: bool = False

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(frozenset(s) for s in self.sets))
        for s in self.sets:
            if not self.graph.is_independent(s):
                raise GraphError(f"set {sorted(map(str, s))} is not independent")

    def __len__(self) -> int:
        return len(self.sets)


def _axis_positions(joint: JointPmf, names: Sequence[str]) -> list[int]:
    return [joint.names.index(n) for n in names]


def _project(symbols: tuple, positions: Sequence[int]) -> tuple:
    return tuple(symbols[p] for p in positions)


def build_conditional_char_graph(
    joint: JointPmf,
    f: FunctionSpec,
    l_axes: Sequence[str],
    k_axes: Sequence[str],
) -> CharGraph:
    """Build ``G_{L|K}(f)`` from a joint over (at least) L, K and f's domain.

    Vertices l1, l2 are connected iff there exist s1, s2 and a shared k
    with p(l1,k,s1) * p(l2,k,s2) > 0 and f(s1) != f(s2).  The hypothesis
    H(f(S)|L,K) = 0 is checked first and violations are rejected with a
    witness.
    """
    l_axes, k_axes = tuple(l_axes), tuple(k_axes)
    s_axes = tuple(a.name for a in f.domain)
    union = list(dict.fromkeys(l_axes + k_axes + s_axes))
    marg = joint.restricted_names(union)

    lpos = _axis_positions(marg, l_axes)
    kpos = _axis_positions(marg, k_axes)
    spos = _axis_positions(marg, s_axes)

    cells = []  # (l_part, k_part, f_value, s_part)
    for symbols, _p in marg.support():
        s_part = _project(symbols, spos)
        cells.append(
            (
                _project(symbols, lpos),
                _project(symbols, kpos),
                f.value(*s_part),
                s_part,
            )
        )

    # hypothesis H(f(S)|L,K) = 0: f constant on every (l, k) support cell
    seen: dict = {}
    for l_part, k_part, fv, s_part in cells:
        prev = seen.get((l_part, k_part))
        if prev is None:
            seen[(l_part, k_part)] = (fv, s_part)
        elif prev[0] != fv:
            raise GraphError(
                "H(f|L,K) = 0 violated: "
                f"l={l_part} k={k_part} allows s={prev[1]} (f={prev[0]!r}) "
                f"and s={s_part} (f={fv!r})"
            )

    vert_marg = joint.restricted_names(l_axes)
    vertices = tuple(
        sym for sym, _p in vert_marg.support()
    )
    vindex = {v: i for i, v in enumerate(vertices)}

    adj = np.zeros((len(vertices), len(vertices)), dtype=bool)
    by_k: dict = {}
    for l_part, k_part, fv, _ in cells:
        by_k.setdefault(k_part, []).append((vindex[l_part], fv))
    for group in by_k.values():
        for (i1, f1), (i2, f2) in itertools.combinations(group, 2):
            if i1 != i2 and f1 != f2:
                adj[i1, i2] = adj[i2, i1] = True

    return CharGraph(vertices, adj, l_axes, k_axes, s_axes)


def enumerate_maximal_independent_sets(
    graph: CharGraph, cap: int = 10**6
) -> IndependentSetFamily:
    """All maximal independent sets, in deterministic lexicographic order.

    Bron-Kerbosch with pivoting on the complement graph; raises
    :class:`IndependentSetCapError` when more than ``cap`` sets appear.
    """
    if cap <= 0:
        raise GraphError("cap must be positive")
    n = len(graph)
    comp = [set(np.nonzero(~graph.adjacency[i])[0]) - {i} for i in range(n)]
    found: list[tuple] = []

    def expand(r: set, p: set, x: set):
        if not p and not x:
            found.append(tuple(sorted(r)))
            if len(found) > cap:
                raise IndependentSetCapError(len(found), cap)
            return
        pivot = max(p | x, key=lambda u: len(p & comp[u]))
        for v in sorted(p - comp[pivot]):
            expand(r | {v}, p & comp[v], x & comp[v])
            p.remove(v)
            x.add(v)

    if n:
        expand(set(), set(range(n)), set())
    found.sort()
    sets = tuple(frozenset(graph.vertices[i] for i in ids) for ids in found)
    return IndependentSetFamily(graph, sets)


@dataclass(frozen=True)
class MembershipCheck:
    """Outcome of an independent-set membership verification."""

    ok: bool
    witness: str = ""

    def __bool__(self) -> bool:
        return self.ok


def verify_membership_condition(
    joint: JointPmf,
    graph: CharGraph,
    v_axis: str,
    v_sets: Mapping,
) -> MembershipCheck:
    """Check L in V in M(Gamma(G)) for a joint over (V, L-axes).

    True iff (a) every positive-probability V-symbol maps to an independent
    set of ``graph`` and (b) p(v, l) > 0 implies l is a member of v's set.
    Failures return a diagnostic witness instead of raising.
    """
    l_axes = graph.l_axes
    marg = joint.restricted_names((v_axis,) + l_axes)
    vpos = _axis_positions(marg, [v_axis])[0]
    lpos = _axis_positions(marg, l_axes)

    pos_v = set()
    for symbols, _p in marg.support():
        pos_v.add(symbols[vpos])
    for v_sym in pos_v:
        if v_sym not in v_sets:
            return MembershipCheck(False, f"V-symbol {v_sym!r} has no declared vertex set")
        members = frozenset(v_sets[v_sym])
        for m in members:
            if m not in graph.vertices:
                return MembershipCheck(
                    False, f"set for {v_sym!r} contains unknown vertex {m!r}"
                )
        if not graph.is_independent(members):
            bad = next(
                (a, b)
                for a, b in itertools.combinations(sorted(members, key=str), 2)
                if graph.adjacency[graph.index(a), graph.index(b)]
            )
            return MembershipCheck(
                False,
                f"set for {v_sym!r} is not independent: edge {bad[0]!r} -- {bad[1]!r}",
            )
    for symbols, p in marg.support():
        v_sym = symbols[vpos]
        l_part = _project(symbols, lpos)
        if l_part not in frozenset(v_sets[v_sym]):
            return MembershipCheck(
                False,
                f"P(L in V) < 1: p(v={v_sym!r}, l={l_part!r}) = {p:.3g} but "
                f"l not in the set for {v_sym!r}",
            )
    return MembershipCheck(True)


@dataclass(frozen=True)
class SupportSetVariable:
    """The deterministic relabeling ``v_j -> (j, s_j)`` of Definition-style
    support sets, with ``s_j`` the positive-support L-set of ``v_j``."""

    index_map: tuple  # tuple of (v_symbol, j, frozenset of l-composites)
    joint: JointPmf  # over (relabelled W', L-axes)
    v_axis: str
    l_axes: tuple

    def sets(self) -> tuple:
        return tuple(s for _v, _j, s in self.index_map)

    def as_v_sets(self) -> dict:
        """Vertex-set declaration keyed by the new W' symbols."""
        return {(j, s): s for _v, j, s in self.index_map}


def support_set_transform(
    joint: JointPmf, v_axis: str, l_axes: Sequence[str]
) -> SupportSetVariable:
    """Relabel V by its conditional support in L: ``S_L(v_j) = (j, s_j)``.

    The map is injective by construction (j is the symbol index), the
    induced joint over (W', L) satisfies P(L in W') = 1, and applying the
    transform twice yields the same family of sets.
    """
    l_axes = tuple(l_axes)
    marg = joint.restricted_names((v_axis,) + l_axes)
    v_alpha = marg.axis(v_axis)
    lpos = _axis_positions(marg, l_axes)

    table = marg.marginal_array((v_axis,) + l_axes)
    flat = table.reshape(len(v_alpha), -1)
    l_alphas = [marg.axis(n) for n in l_axes]
    l_symbols = list(itertools.product(*(a.symbols for a in l_alphas)))

    index_map = []
    for j, v_sym in enumerate(v_alpha.symbols):
        s_j = frozenset(
            l_symbols[i] for i in range(flat.shape[1]) if flat[j, i] > ZERO_TOL
        )
        index_map.append((v_sym, j, s_j))

    new_axis = Alphabet(
        "w_support", tuple((j, s) for _v, j, s in index_map)
    )
    relabelled = JointPmf((new_axis, *l_alphas), table)
    return SupportSetVariable(tuple(index_map), relabelled, v_axis, l_axes)
