"""Achievable-rate evaluation and search for cooperative computation.

Evaluates the general inner bound for explicitly supplied auxiliary
channels, the tight regions for the partially invertible / full
cooperation / one-round / two-round / cascade scenarios, and the
rate-distortion inner bound with its two Kaspi-Berger specializations.
Searches enumerate deterministic channels first and refine stochastically;
reported witnesses always re-validate.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .gentropy import (
    GraphEntropyResult,
    SolverConfig,
    conditional_graph_entropy,
)
from .graphs import build_conditional_char_graph, verify_membership_condition
from .prob import (
    NORM_TOL,
    ZERO_TOL,
    Alphabet,
    Channel,
    FunctionSpec,
    JointPmf,
    RateTuple,
    check_markov_chain,
    compose_joint,
    conditional_entropy,
    entropy,
    mutual_information,
)


class RegionError(ValueError):
    """Invalid region-evaluation input."""


class DistortionBudgetError(RegionError):
    """A distortion budget is violated by the supplied system."""


class InfeasibleBudgetError(RegionError):
    """No valid system exists within the requested cooperation budget."""


# --------------------------------------------------------------------------
# auxiliary systems and the general inner bound
# --------------------------------------------------------------------------


def cardinality_limits(n_x: int, n_u: int, n_y: int) -> dict:
    """Search-dimension limits |T|, |V|, |W| for the general bound."""
    return {
        "t": n_x + 4,
        "v": (n_x + 4) * n_x + 1,
        "w": n_u * n_y + 1,
    }


@dataclass(frozen=True)
class AuxiliarySystem:
    """Base pmf plus the four auxiliary channels of the general bound.

    ``v_sets`` / ``w_sets`` declare which vertex subset each V / W symbol
    stands for; they are required by the computation-mode validation and
    ignored in rate-distortion mode.
    """

    base: JointPmf
    u_ch: Channel
    t_ch: Channel
    v_ch: Channel
    w_ch: Channel
    v_sets: Mapping | None = None
    w_sets: Mapping | None = None

    def __post_init__(self):
        object.__setattr__(
            self,
            "_joint",
            compose_joint(self.base, self.u_ch, self.t_ch, self.v_ch, self.w_ch),
        )

    @property
    def joint(self) -> JointPmf:
        return self._joint

    def axis_names(self) -> dict:
        x_ax, y_ax = self.base.axes
        return {
            "x": x_ax.name,
            "y": y_ax.name,
            "u": self.u_ch.to_axis.name,
            "t": self.t_ch.to_axis.name,
            "v": self.v_ch.to_axis.name,
            "w": self.w_ch.to_axis.name,
        }

    def within_cardinality_limits(self) -> bool:
        lim = cardinality_limits(
            len(self.base.axes[0]), len(self.u_ch.to_axis), len(self.base.axes[1])
        )
        return (
            len(self.t_ch.to_axis) <= lim["t"]
            and len(self.v_ch.to_axis) <= lim["v"]
            and len(self.w_ch.to_axis) <= lim["w"]
        )


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    failures: tuple = ()

    def __bool__(self) -> bool:
        return self.ok

    @property
    def first_failure(self) -> str:
        return self.failures[0] if self.failures else ""


def membership_graphs(sys: AuxiliarySystem, f: FunctionSpec):
    """The two confusability graphs the set conditions are checked against."""
    ax = sys.axis_names()
    j = sys.joint
    g_v = build_conditional_char_graph(
        j, f, (ax["t"], ax["x"]), (ax["t"], ax["u"], ax["y"])
    )
    g_w = build_conditional_char_graph(
        j, f, (ax["t"], ax["u"], ax["y"]), (ax["t"], ax["v"])
    )
    return g_v, g_w


def validate_auxiliaries(
    sys: AuxiliarySystem, f: FunctionSpec, tol: float = NORM_TOL
) -> ValidationReport:
    """Check both Markov chains and both set-membership conditions.

    Returns a diagnostic report naming the first violated condition;
    never raises for a merely-invalid system.
    """
    ax = sys.axis_names()
    j = sys.joint
    failures = []
    if not check_markov_chain(j, [ax["t"]], [ax["u"]], [ax["x"], ax["y"]], tol):
        failures.append("Markov chain T - U - (X,Y) fails")
    elif not check_markov_chain(j, [ax["t"], ax["u"]], [ax["x"]], [ax["y"]], tol):
        failures.append("Markov chain (T,U) - X - Y fails")
    elif not check_markov_chain(
        j, [ax["v"]], [ax["x"], ax["t"]], [ax["u"], ax["y"], ax["w"]], tol
    ):
        failures.append("Markov chain V - (X,T) - (U,Y,W) fails")
    elif not check_markov_chain(
        j, [ax["v"], ax["x"], ax["t"]], [ax["u"], ax["y"]], [ax["w"]], tol
    ):
        failures.append("Markov chain (V,X,T) - (U,Y) - W fails")
    elif sys.v_sets is None or sys.w_sets is None:
        failures.append("computation mode requires v_sets and w_sets")
    else:
        try:
            g_v, g_w = membership_graphs(sys, f)
        except Exception as e:  # H(f|L,K) = 0 hypothesis violation
            failures.append(str(e))
        else:
            chk = verify_membership_condition(j, g_v, ax["v"], sys.v_sets)
            if not chk:
                failures.append(f"V membership fails: {chk.witness}")
            else:
                chk = verify_membership_condition(j, g_w, ax["w"], sys.w_sets)
                if not chk:
                    failures.append(f"W membership fails: {chk.witness}")
    return ValidationReport(not failures, tuple(failures))


def inner_bound_rates(sys: AuxiliarySystem) -> RateTuple:
    """The four right-hand sides of the general inner bound, in bits."""
    ax = sys.axis_names()
    j = sys.joint
    x, y, u, t, v, w = (ax[k] for k in "xyutvw")
    r0 = mutual_information(j, [x], [u], [y])
    rx = mutual_information(j, [v], [x], [t, w])
    ry = mutual_information(j, [u, y], [w], [v, t])
    rsum = mutual_information(j, [x, y], [v, t, w]) + mutual_information(
        j, [u], [w], [v, x, t, y]
    )
    return RateTuple(r0, rx, ry, rsum)


def evaluate_inner_bound(
    sys: AuxiliarySystem, f: FunctionSpec, tol: float = NORM_TOL
) -> RateTuple:
    """Validate, then evaluate; raises on validation failure."""
    report = validate_auxiliaries(sys, f, tol)
    if not report:
        raise RegionError(f"invalid auxiliary system: {report.first_failure}")
    return inner_bound_rates(sys)


# --------------------------------------------------------------------------
# rate distortion
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RdConstraint:
    """Distortion side of the rate-distortion bound.

    ``g1``/``g2`` map (v,t,w) symbol triples to codomain symbols of f1/f2
    and must be total on the support of (V,T,W).
    """

    f1: FunctionSpec
    f2: FunctionSpec
    d1: np.ndarray  # |F1| x |F1|, nonnegative
    d2: np.ndarray
    budget1: float
    budget2: float
    g1: Mapping
    g2: Mapping

    def __post_init__(self):
        for name in ("d1", "d2"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim != 2 or np.any(arr < 0):
                raise RegionError(f"{name} must be a nonnegative matrix")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def expected_distortions(sys: AuxiliarySystem, rd: RdConstraint) -> tuple:
    """E d_i(f_i(X,Y), g_i(V,T,W)) under the composed joint."""
    ax = sys.axis_names()
    j = sys.joint.restricted_names(
        (ax["v"], ax["x"], ax["t"], ax["u"], ax["y"], ax["w"])
    )
    totals = [0.0, 0.0]
    for symbols, p in j.support():
        v_s, x_s, t_s, _u_s, y_s, w_s = symbols
        for i, (f, d, g) in enumerate(((rd.f1, rd.d1, rd.g1), (rd.f2, rd.d2, rd.g2))):
            try:
                recon = g[(v_s, t_s, w_s)]
            except KeyError:
                raise RegionError(
                    f"g{i + 1} undefined on supported cell "
                    f"(v={v_s!r}, t={t_s!r}, w={w_s!r})"
                ) from None
            fi = f.codomain.index(f.value(x_s, y_s))
            ri = f.codomain.index(recon)
            totals[i] += p * float(d[fi, ri])
    return tuple(totals)


def evaluate_rd_bounds(
    sys: AuxiliarySystem, rd: RdConstraint, tol: float = NORM_TOL
) -> tuple[RateTuple, tuple]:
    """Rate-distortion inner bound: same four formulas, distortions checked.

    Set-membership conditions are not part of this mode.  Returns
    (rates, achieved distortions) or raises DistortionBudgetError naming
    the violated budget and the achieved value.
    """
    ax = sys.axis_names()
    j = sys.joint
    for chain in (
        ([ax["t"]], [ax["u"]], [ax["x"], ax["y"]]),
        ([ax["t"], ax["u"]], [ax["x"]], [ax["y"]]),
        ([ax["v"]], [ax["x"], ax["t"]], [ax["u"], ax["y"], ax["w"]]),
        ([ax["v"], ax["x"], ax["t"]], [ax["u"], ax["y"]], [ax["w"]]),
    ):
        if not check_markov_chain(j, *chain, tol):
            raise RegionError("required Markov chain fails for the supplied system")
    achieved = expected_distortions(sys, rd)
    for i, (got, budget) in enumerate(zip(achieved, (rd.budget1, rd.budget2))):
        if got > budget + 1e-9:
            raise DistortionBudgetError(
                f"distortion budget D{i + 1}={budget} violated: achieved {got:.6g}"
            )
    return inner_bound_rates(sys), achieved


def kaspi_berger_general_sum(sys: AuxiliarySystem) -> float:
    """Sum-rate formula of the T=U specialization: I(X,Y;V,T,W)."""
    ax = sys.axis_names()
    return mutual_information(
        sys.joint, [ax["x"], ax["y"]], [ax["v"], ax["t"], ax["w"]]
    )


def kaspi_berger_full_coop_sum(sys: AuxiliarySystem) -> float:
    """Sum-rate formula of the (U=X, V const) specialization: I(X,Y;T,W)."""
    ax = sys.axis_names()
    return mutual_information(sys.joint, [ax["x"], ax["y"]], [ax["t"], ax["w"]])


# --------------------------------------------------------------------------
# frontier curves
# --------------------------------------------------------------------------

_CURVE_HEADERS = {
    "r0_sum": ("r0_bits", "min_sum_bits"),
    "ry_sum": ("ry_bits", "sum_bits"),
    "r0_ry": ("r0_bits", "min_ry_bits"),
}


@dataclass(frozen=True)
class FrontierCurve:
    """An (x, min-y) trade-off curve; x strictly increasing, y nonincreasing."""

    kind: str
    points: tuple  # of (x, y)
    witnesses: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _CURVE_HEADERS:
            raise RegionError(f"unknown curve kind {self.kind!r}")
        pts = tuple((float(a), float(b)) for a, b in self.points)
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        if any(b - a <= 0 for a, b in zip(xs, xs[1:])):
            raise RegionError("curve x-values must be strictly increasing")
        if any(b - a > 1e-9 for a, b in zip(ys, ys[1:])):
            raise RegionError("curve y-values must be nonincreasing")
        object.__setattr__(self, "points", pts)

    @property
    def header(self) -> tuple:
        return _CURVE_HEADERS[self.kind]

    def csv_rows(self) -> list[str]:
        return [f"{x:.6f},{y:.6f}" for x, y in self.points]

    def value_at(self, x: float) -> float:
        cands = [y for px, y in self.points if px <= x + 1e-9]
        if not cands:
            raise InfeasibleBudgetError(f"no frontier point within budget {x}")
        return min(cands)


def _lower_envelope(points, budgets, pair_ok=None):
    """Two-point time-sharing envelope of achievable (r, s) points.

    Witness per budget: ((i, j), lam) = mix candidate i (weight lam) with
    candidate j; i == j means the pure candidate.
    """
    pts = list(points)
    values, wits = [], []
    for b in budgets:
        best, bw = np.inf, None
        for i, (ri, si) in enumerate(pts):
            if ri <= b + 1e-12 and si < best:
                best, bw = si, ((i, i), 1.0)
        for i, j in itertools.combinations(range(len(pts)), 2):
            if pair_ok is not None and not pair_ok(i, j):
                continue
            (ri, si), (rj, sj) = pts[i], pts[j]
            if ri > rj:
                i, j, ri, si, rj, sj = j, i, rj, sj, ri, si
            if rj <= ri + 1e-15 or b < ri or b >= rj:
                continue
            lam = (rj - b) / (rj - ri)  # weight on the low-budget candidate
            s = lam * si + (1 - lam) * sj
            if s < best - 1e-15:
                best, bw = s, ((i, j), lam)
        values.append(best)
        wits.append(bw)
    return values, wits


def _monotone_floor(values):
    out, cur = [], np.inf
    for v in values:
        cur = min(cur, v)
        out.append(cur)
    return out


def _grid_curve(kind, budgets, values, witnesses, meta):
    pts, wits = [], []
    for b, v, w in zip(budgets, values, witnesses):
        if not np.isfinite(v):
            continue
        pts.append((b, v))
        wits.append(w)
    return FrontierCurve(kind, pts, tuple(wits), meta)


# --------------------------------------------------------------------------
# deterministic channel enumeration
# --------------------------------------------------------------------------


def set_partitions(symbols: Sequence) -> list[list[tuple]]:
    """All set partitions of ``symbols`` in a deterministic order."""
    symbols = list(symbols)
    if not symbols:
        return [[]]
    first, rest = symbols[0], symbols[1:]
    out = []
    for part in set_partitions(rest):
        for i in range(len(part)):
            out.append(part[:i] + [(first,) + part[i]] + part[i + 1:])
        out.append(part + [(first,)])
    return out


def partition_channels(axis: Alphabet, max_parts: int, name: str) -> list[Channel]:
    """Deterministic channels, one per set partition with at most max_parts."""
    chans = []
    for part in set_partitions(axis.symbols):
        blocks = sorted(tuple(sorted(b, key=str)) for b in part)
        if len(blocks) > max_parts:
            continue
        to_axis = Alphabet(name, tuple(range(len(blocks))))
        lookup = {s: bi for bi, block in enumerate(blocks) for s in block}
        chans.append(
            Channel.deterministic((axis,), to_axis, lambda s, lu=lookup: lu[s])
        )
    return chans


def _random_channel(axis: Alphabet, n_out: int, name: str, rng) -> Channel:
    table = rng.gamma(1.0, 1.0, size=(len(axis), n_out))
    table /= table.sum(axis=1, keepdims=True)
    return Channel((axis,), Alphabet(name, tuple(range(n_out))), table)


def mix_channels(ch1: Channel, ch2: Channel, lam: float, name: str) -> Channel:
    """Time-share two channels from the same source on disjoint output labels."""
    if ch1.from_axes != ch2.from_axes:
        raise RegionError("mixed channels must share the conditioning axis")
    n1, n2 = len(ch1.to_axis), len(ch2.to_axis)
    to_axis = Alphabet(name, tuple(range(n1 + n2)))
    table = np.concatenate([lam * ch1.table, (1.0 - lam) * ch2.table], axis=-1)
    return Channel(ch1.from_axes, to_axis, table)


# --------------------------------------------------------------------------
# scenario regions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SearchConfig:
    grid: int = 33
    restarts: int = 12
    stochastic_probes: int = 24
    seed: int = 0
    exhaustive_cap: int = 10**7
    set_cap: int = 10**6
    tol: float = 1e-9
    max_iter: int = 10_000
    jobs: int = 1

    def solver(self, restarts: int | None = None) -> SolverConfig:
        return SolverConfig(
            restarts=restarts if restarts is not None else self.restarts,
            max_iter=self.max_iter,
            tol=self.tol,
            seed=self.seed,
            set_cap=self.set_cap,
        )


def joint_with_u(base: JointPmf, u_ch: Channel) -> JointPmf:
    x_ax, y_ax = base.axes
    table = np.einsum(
        "xy,xu->xyu", base.marginal_array([x_ax.name, y_ax.name]), u_ch.table
    )
    return JointPmf((x_ax, y_ax, u_ch.to_axis), table)


def _inner_w_minimum(
    base: JointPmf,
    f: FunctionSpec,
    u_ch: Channel,
    objective_k: tuple,
    cfg: SearchConfig,
) -> GraphEntropyResult:
    """min over W in M(Gamma(G_{U,Y|X,U})) of I(W; (U,Y) | objective_k)."""
    j3 = joint_with_u(base, u_ch)
    x_n, y_n = base.axes[0].name, base.axes[1].name
    u_n = u_ch.to_axis.name
    return conditional_graph_entropy(
        j3, f, (u_n, y_n), (x_n, u_n), cfg.solver(), objective_k_axes=objective_k
    )


def _mi_xu_given_y(base: JointPmf, u_ch: Channel) -> float:
    j3 = joint_with_u(base, u_ch)
    return mutual_information(
        j3, [base.axes[0].name], [u_ch.to_axis.name], [base.axes[1].name]
    )


def region_partially_invertible(
    base: JointPmf, f: FunctionSpec, cfg: SearchConfig = SearchConfig()
) -> FrontierCurve:
    """Frontier (R0, min RX+RY) for a function partially invertible in X.

    Minimizes H(X) + I(Y;W|U) over U with I(X;U|Y) <= R0 and set-valued W;
    deterministic U candidates (all partitions of X) are refined by
    stochastic probes and two-point time sharing onto the budget grid.
    """
    x_ax, y_ax = base.axes
    if not f.is_partially_invertible_wrt_x(base):
        raise RegionError("function is not partially invertible w.r.t. X")
    hx = entropy(base, [x_ax.name])
    hxy = conditional_entropy(base, [x_ax.name], [y_ax.name])
    max_u = len(x_ax) + 4

    cands: list[tuple[Channel, float, float]] = []
    for u_ch in partition_channels(x_ax, max_u, "u"):
        inner = _inner_w_minimum(base, f, u_ch, (u_ch.to_axis.name,), cfg)
        cands.append((u_ch, _mi_xu_given_y(base, u_ch), hx + inner.value))
    rng = np.random.default_rng([cfg.seed, 101])
    for _ in range(cfg.stochastic_probes):
        n_out = int(rng.integers(2, min(len(x_ax) + 2, max_u) + 1))
        u_ch = _random_channel(x_ax, n_out, "u", rng)
        inner = _inner_w_minimum(base, f, u_ch, (u_ch.to_axis.name,), cfg)
        cands.append((u_ch, _mi_xu_given_y(base, u_ch), hx + inner.value))

    budgets = np.linspace(0.0, hxy, cfg.grid)
    sizes = [len(c[0].to_axis) for c in cands]
    pair_ok = lambda i, j: sizes[i] + sizes[j] <= max_u
    values, wits = _lower_envelope([(c[1], c[2]) for c in cands], budgets, pair_ok)
    values = _monotone_floor(values)
    meta = {
        "mode": "partinv",
        "h_x": hx,
        "h_x_given_y": hxy,
        "tight": True,
        "candidates": cands,
    }
    return _grid_curve("r0_sum", budgets, values, wits, meta)


def _f_axis_joint(
    base: JointPmf, f: FunctionSpec, t_ch: Channel | None = None
) -> JointPmf:
    """Joint over (x, y, f-value) and optionally t."""
    x_ax, y_ax = base.axes
    p = base.marginal_array([x_ax.name, y_ax.name])
    f_ax = f.codomain.renamed("fval")
    ind = np.zeros((len(x_ax), len(y_ax), len(f_ax)))
    for xi in range(len(x_ax)):
        for yi in range(len(y_ax)):
            ind[xi, yi, f.value_index(xi, yi)] = 1.0
    if t_ch is None:
        return JointPmf((x_ax, y_ax, f_ax), np.einsum("xy,xyf->xyf", p, ind))
    table = np.einsum("xy,xyf,xt->xyft", p, ind, t_ch.table)
    return JointPmf((x_ax, y_ax, f_ax, t_ch.to_axis), table)


def function_entropy(base: JointPmf, f: FunctionSpec) -> float:
    return entropy(_f_axis_joint(base, f), ["fval"])


def _full_coop_point(base: JointPmf, f: FunctionSpec, t_ch: Channel) -> tuple:
    jf = _f_axis_joint(base, f, t_ch)
    t_n = t_ch.to_axis.name
    ry = conditional_entropy(jf, ["fval"], [t_n])
    s = entropy(jf, ["fval"]) + mutual_information(
        jf, [base.axes[0].name], [t_n], ["fval"]
    )
    return ry, s


def region_full_cooperation(
    base: JointPmf, f: FunctionSpec, cfg: SearchConfig = SearchConfig()
) -> FrontierCurve:
    """Frontier (RY, min RX+RY) when R0 exceeds H(X|Y).

    Sweeps T - X - Y with |T| <= |X|+1: RY >= H(f|T) and
    RX+RY >= H(f) + I(X;T|f).
    """
    x_ax, y_ax = base.axes
    hf = function_entropy(base, f)
    hxy = conditional_entropy(base, [x_ax.name], [y_ax.name])
    max_t = len(x_ax) + 1

    cands: list[tuple[Channel, float, float]] = []
    for t_ch in partition_channels(x_ax, max_t, "t"):
        ry, s = _full_coop_point(base, f, t_ch)
        cands.append((t_ch, ry, s))
    rng = np.random.default_rng([cfg.seed, 202])
    for _ in range(cfg.stochastic_probes):
        n_out = int(rng.integers(2, max_t + 1))
        t_ch = _random_channel(x_ax, n_out, "t", rng)
        ry, s = _full_coop_point(base, f, t_ch)
        cands.append((t_ch, ry, s))

    ry_lo = min(c[1] for c in cands)
    budgets = (
        np.linspace(ry_lo, hf, cfg.grid) if hf > ry_lo + 1e-12 else np.array([hf])
    )
    sizes = [len(c[0].to_axis) for c in cands]
    pair_ok = lambda i, j: sizes[i] + sizes[j] <= max_t
    values, wits = _lower_envelope([(c[1], c[2]) for c in cands], budgets, pair_ok)
    values = _monotone_floor(values)
    meta = {
        "mode": "fullcoop",
        "r0": hxy,
        "h_f": hf,
        "tight": True,
        "candidates": cands,
    }
    return _grid_curve("ry_sum", budgets, values, wits, meta)


def rate_one_round(
    base: JointPmf, f: FunctionSpec, cfg: SearchConfig = SearchConfig()
) -> GraphEntropyResult:
    """min R0+RX when RY is unconstrained: H(G_{X|Y}(f))."""
    x_n, y_n = base.axes[0].name, base.axes[1].name
    return conditional_graph_entropy(base, f, (x_n,), (y_n,), cfg.solver())


def region_two_round(
    base: JointPmf, f: FunctionSpec, cfg: SearchConfig = SearchConfig()
) -> FrontierCurve:
    """Frontier (R0, min RY) when RX exceeds H(X).

    Sweeps U - X - Y with |U| <= |X|+2 and set-valued W over
    G_{U,Y|X,U}; the RY bound is I(Y;W|X,U).
    """
    x_ax, y_ax = base.axes
    max_u = len(x_ax) + 2
    cands = []
    for u_ch in partition_channels(x_ax, max_u, "u"):
        inner = _inner_w_minimum(base, f, u_ch, (x_ax.name, u_ch.to_axis.name), cfg)
        cands.append((u_ch, _mi_xu_given_y(base, u_ch), inner.value))
    rng = np.random.default_rng([cfg.seed, 303])
    for _ in range(cfg.stochastic_probes):
        n_out = int(rng.integers(2, max_u + 1))
        u_ch = _random_channel(x_ax, n_out, "u", rng)
        inner = _inner_w_minimum(base, f, u_ch, (x_ax.name, u_ch.to_axis.name), cfg)
        cands.append((u_ch, _mi_xu_given_y(base, u_ch), inner.value))

    hxy = conditional_entropy(base, [x_ax.name], [y_ax.name])
    budgets = np.linspace(0.0, hxy, cfg.grid)
    sizes = [len(c[0].to_axis) for c in cands]
    pair_ok = lambda i, j: sizes[i] + sizes[j] <= max_u
    values, wits = _lower_envelope([(c[1], c[2]) for c in cands], budgets, pair_ok)
    values = _monotone_floor(values)
    meta = {
        "mode": "tworound",
        "rx": entropy(base, [x_ax.name]),
        "tight": True,
        "candidates": cands,
    }
    return _grid_curve("r0_ry", budgets, values, wits, meta)


def region_cascade(
    base: JointPmf, f: FunctionSpec, cfg: SearchConfig = SearchConfig()
) -> tuple[RateTuple, GraphEntropyResult]:
    """Cascade (RX = 0): R0 >= H(G_{X|Y}), RY >= H(f(X,Y))."""
    one_round = rate_one_round(base, f, cfg)
    hf = function_entropy(base, f)
    return RateTuple(one_round.value, 0.0, hf, hf), one_round


# --------------------------------------------------------------------------
# canonical witness systems
# --------------------------------------------------------------------------


def _positive_cells(joint: JointPmf, names) -> set:
    return {sym for sym, _p in joint.restricted_names(tuple(names)).support()}


def full_cooperation_system(
    base: JointPmf, f: FunctionSpec, t_ch: Channel | None = None
) -> AuxiliarySystem:
    """The U=X, V const, W=f(U,Y) system realizing a full-cooperation point."""
    x_ax, y_ax = base.axes
    u_ax = Alphabet("u", x_ax.symbols)
    u_ch = Channel.identity(x_ax, u_ax)
    if t_ch is None:
        t_ch = Channel.constant((u_ax,), Alphabet("t", ("t0",)))
    elif tuple(a.name for a in t_ch.from_axes) != (u_ax.name,):
        t_ch = Channel((u_ax,), t_ch.to_axis, t_ch.table)
    v_ax = Alphabet("v", ("v0",))
    v_ch = Channel.constant((x_ax, t_ch.to_axis), v_ax)
    w_ax = Alphabet("w", tuple(f.codomain.symbols))
    w_ch = Channel.deterministic((u_ax, y_ax), w_ax, lambda u, y: f.value(u, y))

    sys = AuxiliarySystem(base, u_ch, t_ch, v_ch, w_ch)
    ax = sys.axis_names()
    tx_pos = _positive_cells(sys.joint, (ax["t"], ax["x"]))
    tuy_pos = _positive_cells(sys.joint, (ax["t"], ax["u"], ax["y"]))
    v_sets = {"v0": frozenset(tx_pos)}
    w_sets = {
        fv: frozenset(c for c in tuy_pos if f.value(c[1], c[2]) == fv)
        for fv in f.codomain.symbols
    }
    return replace(sys, v_sets=v_sets, w_sets=w_sets)


def two_round_system(
    base: JointPmf, f: FunctionSpec, u_ch: Channel, inner: GraphEntropyResult
) -> AuxiliarySystem:
    """Lift a (U, W) choice into the general-bound system with T=U, V=X."""
    x_ax, y_ax = base.axes
    u_ax = u_ch.to_axis
    t_ax = Alphabet("t", u_ax.symbols)
    t_ch = Channel.identity(u_ax, t_ax)
    v_ax = Alphabet("v", x_ax.symbols)
    v_ch = Channel.deterministic((x_ax, t_ax), v_ax, lambda x, t: x)

    w_inner = inner.witness_channel  # from (u, y) to set-valued symbols
    w_ax = Alphabet("w", tuple(range(len(w_inner.to_axis))))
    w_ch = Channel((u_ax, y_ax), w_ax, w_inner.table)

    sys = AuxiliarySystem(base, u_ch, t_ch, v_ch, w_ch)
    ax = sys.axis_names()
    tx_pos = _positive_cells(sys.joint, (ax["t"], ax["x"]))
    tuy_pos = _positive_cells(sys.joint, (ax["t"], ax["u"], ax["y"]))
    v_sets = {
        x: frozenset(c for c in tx_pos if c[1] == x) for x in x_ax.symbols
    }
    w_sets = {
        wi: frozenset(c for c in tuy_pos if (c[1], c[2]) in set_sym)
        for wi, set_sym in enumerate(w_inner.to_axis.symbols)
    }
    return replace(sys, v_sets=v_sets, w_sets=w_sets)


# --------------------------------------------------------------------------
# sum-rate minimization driver
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SumRateResult:
    value: float
    witness: AuxiliarySystem | None
    mode: str
    feasible: bool = True
    budget_exhausted: bool = False
    details: dict = field(default_factory=dict)


def minimize_sum_rate(
    base: JointPmf,
    f: FunctionSpec | None,
    mode: str,
    r0_budget: float,
    cfg: SearchConfig = SearchConfig(),
    rd: RdConstraint | None = None,
) -> SumRateResult:
    """Best-found minimum sum rate for a scenario at a cooperation budget.

    Deterministic channels are enumerated exhaustively (they are few at
    these alphabet sizes); stochastic probes and two-point time sharing
    fill the interior.  Deterministic given the seed.
    """
    if mode == "partinv":
        curve = region_partially_invertible(base, f, cfg)
        value = curve.value_at(r0_budget)
        witness = _partinv_witness(base, f, cfg, curve, r0_budget)
        achieved = inner_bound_rates(witness)
        return SumRateResult(
            min(value, achieved.sum), witness, mode, details={"achieved": achieved}
        )
    if mode == "fullcoop":
        hxy = conditional_entropy(base, [base.axes[0].name], [base.axes[1].name])
        if r0_budget < hxy - 1e-9:
            return SumRateResult(float("inf"), None, mode, feasible=False)
        curve = region_full_cooperation(base, f, cfg)
        value = min(y for _x, y in curve.points)
        return SumRateResult(value, full_cooperation_system(base, f), mode)
    if mode in ("oneround", "cascade"):
        rates, one_round = region_cascade(base, f, cfg)
        value = rates.ry if mode == "cascade" else one_round.value
        return SumRateResult(value, None, mode, details={"rates": rates})
    if mode == "tworound":
        curve = region_two_round(base, f, cfg)
        ry = curve.value_at(r0_budget)
        hx = curve.meta["rx"]
        return SumRateResult(hx + ry, None, mode, details={"rx": hx, "ry": ry})
    if mode == "theorem1":
        # best found over the scenario strategies applicable to (f, budget)
        best = None
        if f.is_partially_invertible_wrt_x(base):
            best = minimize_sum_rate(base, f, "partinv", r0_budget, cfg)
        hxy = conditional_entropy(base, [base.axes[0].name], [base.axes[1].name])
        if r0_budget >= hxy - 1e-9:
            fc = minimize_sum_rate(base, f, "fullcoop", r0_budget, cfg)
            if best is None or fc.value < best.value - 1e-12:
                best = fc
        if best is None:
            raise InfeasibleBudgetError(
                f"no applicable strategy at cooperation budget {r0_budget}"
            )
        return SumRateResult(best.value, best.witness, "theorem1", details=best.details)
    if mode == "rd":
        if rd is None:
            raise RegionError("rd mode needs an RdConstraint")
        return kaspi_berger51_search(base, rd, cfg)
    raise RegionError(f"unknown mode {mode!r}")


def _partinv_witness(base, f, cfg, curve, r0_budget) -> AuxiliarySystem:
    """Materialize the envelope point at the budget as a general-bound system."""
    grid = [x for x, _y in curve.points if x <= r0_budget + 1e-9]
    target = grid[-1]
    idx = [x for x, _y in curve.points].index(target)
    (i, j), lam = curve.witnesses[idx]
    cands = curve.meta["candidates"]
    if i == j or lam >= 1.0 - 1e-12:
        u_ch = cands[i][0]
    elif lam <= 1e-12:
        u_ch = cands[j][0]
    else:
        u_ch = mix_channels(cands[i][0], cands[j][0], lam, "u")
    inner = _inner_w_minimum(base, f, u_ch, (u_ch.to_axis.name,), cfg)
    return two_round_system(base, f, u_ch, inner)


# --------------------------------------------------------------------------
# Kaspi-Berger (T=U) zero-distortion sum-rate search
# --------------------------------------------------------------------------


def _safe_sets(f: FunctionSpec, d: np.ndarray, axis: int) -> list[tuple]:
    """Maximal per-source safe sets {s : reconstruction r has d = 0}.

    Supports functions depending on a single source (f1 on x, f2 on y),
    which is the shape the zero-distortion structure search handles.
    """
    table = f.table
    n_row, n_col = table.shape
    if axis == 0:
        if any(len(set(table[i, :])) != 1 for i in range(n_row)):
            raise RegionError("structure search needs f1 to depend on x only")
        vals = [int(table[i, 0]) for i in range(n_row)]
        n = n_row
    else:
        if any(len(set(table[:, j])) != 1 for j in range(n_col)):
            raise RegionError("structure search needs f2 to depend on y only")
        vals = [int(table[0, j]) for j in range(n_col)]
        n = n_col
    all_sets = []
    for recon in range(d.shape[1]):
        s = frozenset(i for i in range(n) if d[vals[i], recon] == 0.0)
        all_sets.append((s, recon))
    maximal = []
    for s, recon in all_sets:
        if not s or any(s < other for other, _r in all_sets):
            continue
        if all(s != m for m, _r in maximal):
            maximal.append((s, recon))
    return maximal


def _kb51_structures(n_xsets: int, n_ysets: int, n_t: int, n_w: int):
    """Canonical multisets of per-t variants (x-set, y-set per w)."""
    variants = [
        (xi, ys)
        for xi in range(n_xsets)
        for ys in itertools.product(range(n_ysets), repeat=n_w)
    ]
    yield from itertools.combinations_with_replacement(variants, n_t)


def _kb51_solve_structure(
    p_xy, x_sets, y_sets, structure, n_w, rng, restarts, tol, max_iter
):
    """Alternating minimization of I(X,Y;T,W) under zero-distortion masks."""
    n_x, n_y = p_xy.shape
    n_t = len(structure)
    mask_t = np.zeros((n_x, n_t), dtype=bool)
    mask_w = np.zeros((n_t, n_y, n_w), dtype=bool)
    for ti, (xi, ys) in enumerate(structure):
        for x in x_sets[xi][0]:
            mask_t[x, ti] = True
        for wi, yi in enumerate(ys):
            for y in y_sets[yi][0]:
                mask_w[ti, y, wi] = True
    # a (t,y) cell with no admissible w forces every x reaching it out of t
    changed = True
    while changed:
        changed = False
        for ti in range(n_t):
            for y in range(n_y):
                if mask_w[ti, y].any():
                    continue
                for x in range(n_x):
                    if mask_t[x, ti] and p_xy[x, y] > 0.0:
                        mask_t[x, ti] = False
                        changed = True
    if not mask_t.any(axis=1).all():
        return None  # some source symbol has no admissible t

    p_x = p_xy.sum(axis=1, keepdims=True)
    p_y_x = p_xy / np.where(p_x > 0, p_x, 1.0)
    best = None
    for restart in range(restarts):
        if restart == 0:
            p_t = np.where(mask_t, 1.0, 0.0)
            p_w = np.where(mask_w, 1.0, 0.0)
        else:
            p_t = np.where(mask_t, rng.gamma(1.0, 1.0, mask_t.shape), 0.0)
            p_w = np.where(mask_w, rng.gamma(1.0, 1.0, mask_w.shape), 0.0)
        p_t = p_t / p_t.sum(axis=1, keepdims=True)
        wn = p_w.sum(axis=2, keepdims=True)
        p_w = np.divide(p_w, wn, out=np.zeros_like(p_w), where=wn > 0)

        value = np.inf
        for _ in range(max_iter):
            q = np.einsum("xy,xt,tyw->tw", p_xy, p_t, p_w)
            logq = np.log(np.where(q > 0, q, 1.0))
            # w-step: p(w|t,y) proportional to q(t,w) on the mask
            p_w = np.where(mask_w, q[:, None, :], 0.0)
            wn = p_w.sum(axis=2, keepdims=True)
            p_w = np.divide(p_w, wn, out=np.zeros_like(p_w), where=wn > 0)
            logw = np.log(np.where(p_w > 0, p_w, 1.0))
            # t-step: p(t|x) proportional to exp E_{y|x,w} [log q - log p_w]
            gain = np.einsum("tyw,tw->ty", p_w, logq) - np.einsum(
                "tyw,tyw->ty", p_w, logw
            )
            score = p_y_x @ gain.T  # (n_x, n_t)
            score = np.where(mask_t, score, -np.inf)
            score = score - score.max(axis=1, keepdims=True)
            p_t = np.exp(
                score, where=np.isfinite(score), out=np.zeros_like(score)
            )
            p_t /= p_t.sum(axis=1, keepdims=True)
            q = np.einsum("xy,xt,tyw->tw", p_xy, p_t, p_w)
            joint = np.einsum("xy,xt,tyw->xytw", p_xy, p_t, p_w)
            with np.errstate(divide="ignore", invalid="ignore"):
                num = np.where(joint > 0, np.log2(np.where(joint > 0, joint, 1.0)), 0.0)
                den = (
                    np.log2(np.where(p_xy > 0, p_xy, 1.0))[:, :, None, None]
                    + np.log2(np.where(q > 0, q, 1.0))[None, None, :, :]
                )
                new_value = float((joint * (num - den)).sum())
            if value - new_value < tol:
                value = new_value
                break
            value = new_value
        key = (
            round(value, 9),
            np.round(p_t, 12).tobytes(),
            np.round(p_w, 12).tobytes(),
        )
        if best is None or key < best[0]:
            best = (key, value, p_t.copy(), p_w.copy())
    _, value, p_t, p_w = best
    return value, p_t, p_w, mask_t, mask_w


def kaspi_berger51_search(
    base: JointPmf,
    rd: RdConstraint,
    cfg: SearchConfig = SearchConfig(),
    n_t_max: int = 7,
    n_w_max: int = 2,
) -> SumRateResult:
    """min I(X,Y;T,W) over the T=U specialization at zero distortion.

    T - X - Y and X - (T,Y) - W hold by construction; zero distortion is
    enforced through support structures (per (t,w) cell: which safe source
    set it reconstructs) enumerated exhaustively and refined by
    alternating minimization.
    """
    if rd.budget1 != 0.0 or rd.budget2 != 0.0:
        raise RegionError("structure search supports zero distortion budgets only")
    x_ax, y_ax = base.axes
    p_xy = base.marginal_array([x_ax.name, y_ax.name])
    x_sets = _safe_sets(rd.f1, rd.d1, axis=0)
    y_sets = _safe_sets(rd.f2, rd.d2, axis=1)

    structures = []
    budget_exhausted = False
    for n_t in range(1, n_t_max + 1):
        for structure in _kb51_structures(len(x_sets), len(y_sets), n_t, n_w_max):
            if len(structures) >= cfg.exhaustive_cap:
                budget_exhausted = True
                break
            structures.append(structure)
        if budget_exhausted:
            break

    def solve_one(item):
        index, structure = item
        rng = np.random.default_rng([cfg.seed, 404, index])
        sol = _kb51_solve_structure(
            p_xy, x_sets, y_sets, structure, n_w_max, rng,
            max(2, cfg.restarts // 3), cfg.tol, cfg.max_iter,
        )
        return structure, sol

    if cfg.jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(solve_one, enumerate(structures)))
    else:
        results = [solve_one(item) for item in enumerate(structures)]

    best = None
    n_structs = len(structures)
    for structure, sol in results:  # ordered reduction keeps ties deterministic
        if sol is None:
            continue
        value, p_t, p_w, _mt, _mw = sol
        key = (round(value, 9), np.round(p_t, 12).tobytes())
        if best is None or key < best[0]:
            best = (key, value, p_t, p_w, structure)
    if best is None:
        return SumRateResult(
            float("inf"),
            None,
            "rd",
            feasible=False,
            budget_exhausted=budget_exhausted,
            details={"structures": n_structs},
        )
    _, value, p_t, p_w, structure = best
    witness, maps = _kb51_witness(base, rd, x_sets, y_sets, structure, p_t, p_w)
    return SumRateResult(
        value,
        witness,
        "rd",
        budget_exhausted=budget_exhausted,
        details={
            "structures": n_structs,
            "n_t": len(structure),
            "n_w": n_w_max,
            "reconstructions": maps,
        },
    )


def _kb51_witness(base, rd, x_sets, y_sets, structure, p_t, p_w):
    """Materialize the T=U system plus reconstruction maps."""
    x_ax, y_ax = base.axes
    n_t, _n_y, n_w = p_w.shape
    u_ax = Alphabet("u", tuple(range(n_t)))
    u_ch = Channel((x_ax,), u_ax, p_t)
    t_ax = Alphabet("t", tuple(range(n_t)))
    t_ch = Channel.identity(u_ax, t_ax)
    v_ax = Alphabet("v", ("v0",))
    v_ch = Channel.constant((x_ax, t_ax), v_ax)
    w_ax = Alphabet("w", tuple(range(n_w)))
    w_table = p_w.copy()
    for ti in range(n_t):
        for yi in range(len(y_ax)):
            if w_table[ti, yi].sum() <= 0:
                w_table[ti, yi] = 1.0 / n_w  # unreachable cell; any row works
    w_ch = Channel((u_ax, y_ax), w_ax, w_table)
    g1, g2 = {}, {}
    for ti, (xi, ys) in enumerate(structure):
        for wi in range(n_w):
            g1[("v0", ti, wi)] = rd.f1.codomain.symbols[x_sets[xi][1]]
            g2[("v0", ti, wi)] = rd.f2.codomain.symbols[y_sets[ys[wi]][1]]
    sys = AuxiliarySystem(base, u_ch, t_ch, v_ch, w_ch)
    return sys, (g1, g2)
