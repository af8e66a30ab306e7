"""Finite-alphabet probability tables and the information measures built on them.

All logarithms are base 2 and all rates are in bits.  Table entries below
``ZERO_TOL`` are treated as exact zeros by every support query, so floating
noise can never manufacture support (and hence never manufactures graph
edges downstream).  Values are immutable after construction; every operation
here is a pure function.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np

#: entries below this are exact zeros for all support purposes
ZERO_TOL = 1e-12
#: pmf / channel-row normalization tolerance on input
NORM_TOL = 1e-9


class ProbabilityError(ValueError):
    """Malformed alphabet, table, or axis addressing."""


@dataclass(frozen=True)
class Alphabet:
    """A named, ordered finite set of symbols.

    Symbol order is canonical: it is the index order used by every table
    that carries this axis.
    """

    name: str
    symbols: tuple

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(self.symbols))
        if len(set(self.symbols)) != len(self.symbols):
            raise ProbabilityError(f"alphabet {self.name!r} has repeated symbols")
        if not self.symbols:
            raise ProbabilityError(f"alphabet {self.name!r} is empty")

    def __len__(self) -> int:
        return len(self.symbols)

    def index(self, symbol) -> int:
        try:
            return self.symbols.index(symbol)
        except ValueError:
            raise ProbabilityError(
                f"symbol {symbol!r} not in alphabet {self.name!r}"
            ) from None

    def renamed(self, name: str) -> "Alphabet":
        return Alphabet(name, self.symbols)


def _as_prob_array(table, shape=None) -> np.ndarray:
    arr = np.asarray(table, dtype=float)
    if shape is not None and arr.shape != tuple(shape):
        raise ProbabilityError(f"table shape {arr.shape} != expected {tuple(shape)}")
    if np.any(arr < -NORM_TOL):
        raise ProbabilityError("negative probability entry")
    return np.clip(arr, 0.0, None)


class JointPmf:
    """A normalized probability table over a tuple of named axes.

    Axes are addressed by name, never by position, in all public
    operations.  The input table must sum to 1 within ``NORM_TOL``; it is
    renormalized exactly once at ingestion.
    """

    __slots__ = ("axes", "table")

    def __init__(self, axes: Sequence[Alphabet], table):
        axes = tuple(axes)
        names = [a.name for a in axes]
        if len(set(names)) != len(names):
            raise ProbabilityError(f"duplicate axis names in {names}")
        arr = _as_prob_array(table, shape=[len(a) for a in axes])
        total = float(arr.sum())
        if abs(total - 1.0) > NORM_TOL:
            raise ProbabilityError(f"pmf sums to {total!r}, not 1 within {NORM_TOL}")
        arr = arr / total
        arr.setflags(write=False)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "table", arr)

    def __setattr__(self, *a):  # immutability guard
        raise AttributeError("JointPmf is immutable")

    @property
    def names(self) -> tuple:
        return tuple(a.name for a in self.axes)

    def axis(self, name: str) -> Alphabet:
        for a in self.axes:
            if a.name == name:
                return a
        raise ProbabilityError(f"unknown axis {name!r}; have {self.names}")

    def _positions(self, names: Iterable[str]) -> tuple:
        have = self.names
        out = []
        for n in names:
            if n not in have:
                raise ProbabilityError(f"unknown axis {n!r}; have {have}")
            out.append(have.index(n))
        return tuple(out)

    def marginal(self, names: Sequence[str]) -> "JointPmf":
        """Marginal over ``names``, kept in this joint's axis order."""
        want = set(names)
        self._positions(names)  # validate
        keep = [i for i, a in enumerate(self.axes) if a.name in want]
        drop = tuple(i for i in range(len(self.axes)) if i not in keep)
        return JointPmf([self.axes[i] for i in keep], self.table.sum(axis=drop))

    def marginal_array(self, names: Sequence[str]) -> np.ndarray:
        """Marginal table aligned to the given name order."""
        m = self.marginal(names)
        perm = [m.names.index(n) for n in names]
        return np.transpose(m.table, perm)

    def support(self) -> Iterator[tuple]:
        """Yield ``(symbols, p)`` for entries above the zero threshold."""
        for idx in zip(*np.nonzero(self.table > ZERO_TOL)):
            yield tuple(a.symbols[i] for a, i in zip(self.axes, idx)), float(
                self.table[idx]
            )

    def restricted_names(self, names: Sequence[str]) -> "JointPmf":
        """Marginal reordered to exactly ``names``."""
        arr = self.marginal_array(names)
        return JointPmf([self.axis(n) for n in names], arr)


def _entropy_of(arr: np.ndarray) -> float:
    p = arr.reshape(-1)
    p = p[p > ZERO_TOL]
    return float(-(p * np.log2(p)).sum()) if p.size else 0.0


def _check_groups(joint: JointPmf, groups: Sequence[Sequence[str]]):
    seen = set()
    for g in groups:
        for n in g:
            joint.axis(n)
            if n in seen:
                raise ProbabilityError(f"axis {n!r} appears in more than one group")
            seen.add(n)


def entropy(joint: JointPmf, names: Sequence[str]) -> float:
    """H(names) in bits; 0*log0 = 0."""
    if not names:
        return 0.0
    return _entropy_of(joint.marginal(names).table)


def conditional_entropy(joint: JointPmf, a: Sequence[str], b: Sequence[str]) -> float:
    """H(A|B) = H(A,B) - H(B)."""
    return entropy(joint, tuple(a) + tuple(b)) - entropy(joint, b)


def mutual_information(
    joint: JointPmf, a: Sequence[str], b: Sequence[str], given: Sequence[str] = ()
) -> float:
    """I(A;B|given) via marginal entropies."""
    a, b, c = tuple(a), tuple(b), tuple(given)
    return (
        entropy(joint, a + c)
        + entropy(joint, b + c)
        - entropy(joint, a + b + c)
        - entropy(joint, c)
    )


def information_measure(joint: JointPmf, kind: str, groups: Sequence[Sequence[str]]) -> float:
    """Dispatch entropy / cond_entropy / mutual_info / cond_mutual_info.

    ``groups`` are disjoint tuples of axis names: one group for entropy,
    two for cond_entropy and mutual_info, three (A, B, C) for
    cond_mutual_info = I(A;B|C).
    """
    groups = [tuple(g) for g in groups]
    _check_groups(joint, groups)
    arity = {"entropy": 1, "cond_entropy": 2, "mutual_info": 2, "cond_mutual_info": 3}
    if kind not in arity:
        raise ProbabilityError(f"unknown measure kind {kind!r}")
    if len(groups) != arity[kind]:
        raise ProbabilityError(f"{kind} takes {arity[kind]} groups, got {len(groups)}")
    if kind == "entropy":
        return entropy(joint, groups[0])
    if kind == "cond_entropy":
        return conditional_entropy(joint, groups[0], groups[1])
    if kind == "mutual_info":
        return mutual_information(joint, groups[0], groups[1])
    return mutual_information(joint, groups[0], groups[1], groups[2])


def check_markov_chain(
    joint: JointPmf,
    a: Sequence[str],
    b: Sequence[str],
    c: Sequence[str],
    tol: float = NORM_TOL,
) -> bool:
    """True iff the chain A - B - C holds, i.e. I(A;C|B) <= tol."""
    return mutual_information(joint, a, c, given=b) <= tol


@dataclass(frozen=True)
class Channel:
    """A conditional table p(to | from_axes) with normalized rows.

    Rows for zero-probability conditioning cells still have to normalize;
    they are renormalized once at ingestion like everything else.
    """

    from_axes: tuple
    to_axis: Alphabet
    table: np.ndarray

    def __post_init__(self):
        from_axes = tuple(self.from_axes)
        shape = [len(a) for a in from_axes] + [len(self.to_axis)]
        arr = _as_prob_array(self.table, shape=shape)
        rows = arr.reshape(-1, len(self.to_axis))
        sums = rows.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > NORM_TOL):
            bad = int(np.argmax(np.abs(sums - 1.0)))
            raise ProbabilityError(
                f"channel row {bad} sums to {sums[bad]!r}, not 1 within {NORM_TOL}"
            )
        arr = arr / sums.reshape(*arr.shape[:-1], 1)
        arr.setflags(write=False)
        object.__setattr__(self, "from_axes", from_axes)
        object.__setattr__(self, "table", arr)

    @classmethod
    def deterministic(cls, from_axes, to_axis, mapping: Callable) -> "Channel":
        """Channel putting all mass on ``mapping(*from_symbols)``."""
        from_axes = tuple(from_axes)
        shape = [len(a) for a in from_axes]
        arr = np.zeros(shape + [len(to_axis)])
        for idx in itertools.product(*(range(s) for s in shape)):
            sym = mapping(*(a.symbols[i] for a, i in zip(from_axes, idx)))
            arr[idx + (to_axis.index(sym),)] = 1.0
        return cls(from_axes, to_axis, arr)

    @classmethod
    def constant(cls, from_axes, to_axis, symbol=None) -> "Channel":
        sym = to_axis.symbols[0] if symbol is None else symbol
        return cls.deterministic(from_axes, to_axis, lambda *_: sym)

    @classmethod
    def identity(cls, from_axis: Alphabet, to_axis: Alphabet) -> "Channel":
        if len(from_axis) != len(to_axis):
            raise ProbabilityError("identity channel needs equal-size alphabets")
        return cls(
            (from_axis,), to_axis, np.eye(len(from_axis))
        )


@dataclass(frozen=True)
class FunctionSpec:
    """A total table f: X x Y -> F, stored as codomain indices."""

    domain: tuple  # (X alphabet, Y alphabet)
    codomain: Alphabet
    table: np.ndarray  # int indices into codomain, shape (|X|, |Y|)

    def __post_init__(self):
        domain = tuple(self.domain)
        arr = np.asarray(self.table, dtype=int)
        if arr.shape != (len(domain[0]), len(domain[1])):
            raise ProbabilityError("function table shape mismatch")
        if arr.min() < 0 or arr.max() >= len(self.codomain):
            raise ProbabilityError("function table entry outside codomain")
        arr.setflags(write=False)
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "table", arr)

    @classmethod
    def from_callable(cls, x_axis: Alphabet, y_axis: Alphabet, fn: Callable,
                      codomain: Alphabet | None = None) -> "FunctionSpec":
        values = [[fn(x, y) for y in y_axis.symbols] for x in x_axis.symbols]
        if codomain is None:
            seen = []
            for row in values:
                for v in row:
                    if v not in seen:
                        seen.append(v)
            codomain = Alphabet("f", sorted(seen, key=lambda s: (str(type(s)), str(s)))
                                if not all(isinstance(v, (int, float)) for r in values for v in r)
                                else sorted(seen))
        table = [[codomain.index(v) for v in row] for row in values]
        return cls((x_axis, y_axis), codomain, table)

    def value_index(self, xi: int, yi: int) -> int:
        return int(self.table[xi, yi])

    def value(self, x_sym, y_sym):
        xi = self.domain[0].index(x_sym)
        yi = self.domain[1].index(y_sym)
        return self.codomain.symbols[self.table[xi, yi]]

    def is_partially_invertible_wrt_x(self, base: JointPmf) -> bool:
        """True iff x is recoverable from f(x,y) on the support of ``base``.

        f(x,y) = f(x',y') with p(x,y) p(x',y') > 0 must imply x = x'.
        """
        p = base.marginal_array([self.domain[0].name, self.domain[1].name])
        owners: dict[int, int] = {}
        for xi in range(p.shape[0]):
            for yi in range(p.shape[1]):
                if p[xi, yi] <= ZERO_TOL:
                    continue
                fv = self.value_index(xi, yi)
                if owners.setdefault(fv, xi) != xi:
                    return False
        return True


@dataclass(frozen=True)
class RateTuple:
    """(R0, RX, RY) bound values plus the separate sum bound, in bits.

    ``sum`` is stored independently of rx + ry because the region has four
    separate constraints.
    """

    r0: float
    rx: float
    ry: float
    sum: float

    def __post_init__(self):
        for f in ("r0", "rx", "ry", "sum"):
            v = float(getattr(self, f))
            if v < -NORM_TOL:
                raise ProbabilityError(f"negative rate component {f}={v}")
            object.__setattr__(self, f, max(v, 0.0))

    def as_tuple(self) -> tuple:
        return (self.r0, self.rx, self.ry, self.sum)


def compose_joint(
    base: JointPmf,
    u_ch: Channel,
    t_ch: Channel,
    v_ch: Channel,
    w_ch: Channel,
) -> JointPmf:
    """Compose p(v,x,t,u,y,w) = p(x,y) p(u|x) p(t|u) p(v|x,t) p(w|u,y).

    Both Markov chains T - U - X - Y and V - (X,T) - (U,Y) - W hold by
    construction, and the (X,Y) marginal equals ``base``.
    """
    x_ax, y_ax = base.axes
    u_ax, t_ax, v_ax, w_ax = u_ch.to_axis, t_ch.to_axis, v_ch.to_axis, w_ch.to_axis

    def _want(ch: Channel, axes, what: str):
        got = tuple(a.name for a in ch.from_axes)
        want = tuple(a.name for a in axes)
        if got != want or any(
            ca.symbols != aa.symbols for ca, aa in zip(ch.from_axes, axes)
        ):
            raise ProbabilityError(f"{what} channel conditions on {got}, expected {want}")

    _want(u_ch, (x_ax,), "u")
    _want(t_ch, (u_ax,), "t")
    _want(v_ch, (x_ax, t_ax), "v")
    _want(w_ch, (u_ax, y_ax), "w")

    table = np.einsum(
        "xy,xu,ut,xtv,uyw->vxtuyw",
        base.marginal_array([x_ax.name, y_ax.name]),
        u_ch.table,
        t_ch.table,
        v_ch.table,
        w_ch.table,
        optimize=True,
    )
    return JointPmf((v_ax, x_ax, t_ax, u_ax, y_ax, w_ax), table)
