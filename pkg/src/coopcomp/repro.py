"""Reproduction of the bundled worked examples.

Three instances ship with the package: a scalable selector-source family
(a uniform selector X and a bank of independent uniform components, where
the receiver wants the selected component), a 3x3 function-computation
instance with and without cooperation, and a ternary-source
rate-distortion instance with sign-accuracy reconstruction.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .prob import (
    ZERO_TOL,
    Alphabet,
    Channel,
    FunctionSpec,
    JointPmf,
    ProbabilityError,
    RateTuple,
    mutual_information,
)
from .gentropy import minimize_set_information
from .regions import (
    AuxiliarySystem,
    FrontierCurve,
    RdConstraint,
    SearchConfig,
    SumRateResult,
    _lower_envelope,
    _monotone_floor,
    evaluate_rd_bounds,
    kaspi_berger51_search,
    mix_channels,
    partition_channels,
    region_full_cooperation,
)

# the selector family never materializes the component bank: its region
# formulas depend only on (X, U), the selector-codebook pair


@dataclass(frozen=True)
class Example1Instance:
    """Selector source: X uniform on {1..a}; Y holds a independent uniform
    b-bit components; the receiver wants (X, Y_X)."""

    a: int
    b: int
    u_channel: Channel  # X -> U

    def __post_init__(self):
        if self.a < 2 or self.b < 1:
            raise ProbabilityError("need a >= 2 and b >= 1")
        if len(self.u_channel.from_axes) != 1 or len(
            self.u_channel.from_axes[0]
        ) != self.a:
            raise ProbabilityError("u_channel must condition on the selector")


def selector_axis(a: int) -> Alphabet:
    return Alphabet("x", tuple(range(1, a + 1)))


def example1_rates(inst: Example1Instance) -> tuple[float, float]:
    """(R0, RX+RY) for one selector-coarsening channel U, in closed form.

    R0 = log2(a) + sum_{x,u} p(x,u) log2 p(x|u);
    sum = log2(a) + b * sum_u |A_u| p(u) with A_u the support of p(.|u).
    """
    a, b = inst.a, inst.b
    p_xu = inst.u_channel.table / a  # x uniform
    p_u = p_xu.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        p_x_given_u = np.where(p_u > 0, p_xu / np.where(p_u > 0, p_u, 1.0), 0.0)
        terms = np.where(
            p_xu > ZERO_TOL, p_xu * np.log2(np.where(p_x_given_u > 0, p_x_given_u, 1.0)), 0.0
        )
    r0 = math.log2(a) + float(terms.sum())
    support_sizes = (p_xu > ZERO_TOL).sum(axis=0)
    rsum = math.log2(a) + b * float((support_sizes * p_u).sum())
    return max(r0, 0.0), rsum


def example1_sweep(a: int, b: int, cfg: SearchConfig = SearchConfig()) -> FrontierCurve:
    """Minimum sum rate against the cooperation budget for the selector family.

    Candidates are all deterministic selector coarsenings plus stochastic
    probes; two-point time sharing fills the grid.  Everything runs on the
    closed forms above, so the component bank never materializes.
    """
    x_ax = selector_axis(a)
    max_u = a + 4
    cands: list[tuple[Channel, float, float]] = []
    for u_ch in partition_channels(x_ax, max_u, "u"):
        r0, s = example1_rates(Example1Instance(a, b, u_ch))
        cands.append((u_ch, r0, s))
    rng = np.random.default_rng([cfg.seed, 505])
    for _ in range(cfg.stochastic_probes):
        n_out = int(rng.integers(2, a + 2))
        table = rng.gamma(1.0, 1.0, size=(a, n_out))
        table /= table.sum(axis=1, keepdims=True)
        u_ch = Channel((x_ax,), Alphabet("u", tuple(range(n_out))), table)
        r0, s = example1_rates(Example1Instance(a, b, u_ch))
        cands.append((u_ch, r0, s))

    budgets = np.linspace(0.0, math.log2(a), cfg.grid)
    sizes = [len(c[0].to_axis) for c in cands]
    pair_ok = lambda i, j: sizes[i] + sizes[j] <= max_u
    values, wits = _lower_envelope([(c[1], c[2]) for c in cands], budgets, pair_ok)
    values = _monotone_floor(values)
    pts, kept = [], []
    for bud, val, wit in zip(budgets, values, wits):
        if np.isfinite(val):
            pts.append((float(bud), float(val)))
            kept.append(wit)
    meta = {"mode": "partinv", "a": a, "b": b, "tight": True, "candidates": cands}
    return FrontierCurve("r0_sum", tuple(pts), tuple(kept), meta)


def example1_witness_channel(curve: FrontierCurve, r0: float) -> Channel:
    """The U channel realizing the sweep value at a grid budget."""
    xs = [x for x, _y in curve.points]
    idx = min(range(len(xs)), key=lambda i: abs(xs[i] - r0))
    if abs(xs[idx] - r0) > 1e-9:
        raise ProbabilityError(f"budget {r0} is not on the sweep grid")
    (i, j), lam = curve.witnesses[idx]
    cands = curve.meta["candidates"]
    if i == j or lam >= 1.0 - 1e-12:
        return cands[i][0]
    if lam <= 1e-12:
        return cands[j][0]
    return mix_channels(cands[i][0], cands[j][0], lam, "u")


# --------------------------------------------------------------------------
# 3x3 function-computation instance (cooperation vs none)
# --------------------------------------------------------------------------


def example2_base() -> tuple[JointPmf, FunctionSpec]:
    """The signed-product instance f(x,y) = (-1)^y * x on a 3x3 source."""
    x_ax = Alphabet("x", (0, 1, 2))
    y_ax = Alphabet("y", (0, 1, 2))
    p = JointPmf(
        (x_ax, y_ax),
        [[0.21, 0.03, 0.12], [0.06, 0.15, 0.16], [0.03, 0.12, 0.12]],
    )
    f = FunctionSpec.from_callable(
        x_ax, y_ax, lambda x, y: ((-1) ** y) * x, Alphabet("f", (-2, -1, 0, 1, 2))
    )
    return p, f


@dataclass(frozen=True)
class Example2Report:
    h_x_given_y: float
    full_coop: FrontierCurve
    no_coop: FrontierCurve
    grid: tuple
    full_coop_values: tuple
    no_coop_values: tuple

    def dominance_gaps(self) -> list[float]:
        """no-coop minus full-coop sum at each shared RY grid point."""
        return [
            nc - fc
            for fc, nc in zip(self.full_coop_values, self.no_coop_values)
            if np.isfinite(nc)
        ]


def _no_coop_curve(
    base: JointPmf, f: FunctionSpec, ry_grid, cfg: SearchConfig
) -> tuple[FrontierCurve, tuple]:
    """No-cooperation frontier: U constant, W traded between I(Y;W) and
    I(Y;W|X) by a scalarization sweep over the masked set channel."""
    from .gentropy import _vertex_k_table
    from .graphs import build_conditional_char_graph, enumerate_maximal_independent_sets
    from .prob import entropy
    from .regions import joint_with_u

    x_ax, y_ax = base.axes
    u_ch = Channel.constant((x_ax,), Alphabet("u", ("u0",)))
    j3 = joint_with_u(base, u_ch)
    graph = build_conditional_char_graph(
        j3, f, ("u", y_ax.name), (x_ax.name, "u")
    )
    family = enumerate_maximal_independent_sets(graph, cap=cfg.set_cap)
    p_l = _vertex_k_table(j3, graph, ())
    p_lx = _vertex_k_table(j3, graph, (x_ax.name,))
    hx = entropy(base, [x_ax.name])

    points = []
    lambdas = [0.0] + [2.0**k for k in range(-6, 7)]
    for lam in lambdas:
        value, q, _tr = minimize_set_information(
            graph, family, [p_l, p_lx], [1.0, lam], cfg.solver()
        )
        from .gentropy import _conditional_mi_bits

        obj = _conditional_mi_bits(q, p_l)
        cons = _conditional_mi_bits(q, p_lx)
        points.append((cons, hx + obj))

    values, wits = _lower_envelope(points, ry_grid)
    values = _monotone_floor(values)
    pts, kept = [], []
    for bud, val, wit in zip(ry_grid, values, wits):
        if np.isfinite(val):
            pts.append((float(bud), float(val)))
            kept.append(wit)
    curve = FrontierCurve(
        "ry_sum", tuple(pts), tuple(kept), {"mode": "partinv", "r0": 0.0, "tight": True}
    )
    return curve, tuple(values)


def example2_regions(cfg: SearchConfig = SearchConfig()) -> Example2Report:
    """Full-cooperation versus no-cooperation frontiers on a shared RY grid."""
    base, f = example2_base()
    from .prob import conditional_entropy

    hxy = conditional_entropy(base, [base.axes[0].name], [base.axes[1].name])
    fc = region_full_cooperation(base, f, cfg)

    lo = min(x for x, _ in fc.points)
    hi = max(x for x, _ in fc.points)
    grid = np.linspace(lo, hi * 1.15, cfg.grid)
    fc_values = []
    for g in grid:
        vals = [y for x, y in fc.points if x <= g + 1e-9]
        fc_values.append(min(vals) if vals else float("inf"))
    nc, nc_values = _no_coop_curve(base, f, grid, cfg)
    return Example2Report(
        hxy, fc, nc, tuple(float(g) for g in grid), tuple(fc_values), tuple(nc_values)
    )


# --------------------------------------------------------------------------
# ternary rate-distortion instance (sign-accuracy reconstruction)
# --------------------------------------------------------------------------


def sign_instance_base() -> JointPmf:
    """Ternary pair, uniform on the seven cells allowed by sign agreement."""
    x_ax = Alphabet("x", (-1, 0, 1))
    y_ax = Alphabet("y", (-1, 0, 1))
    table = np.full((3, 3), 1.0 / 7.0)
    table[0, 2] = 0.0  # (x,y) = (-1,+1)
    table[2, 0] = 0.0  # (x,y) = (+1,-1)
    return JointPmf((x_ax, y_ax), table)


def sign_distortion() -> np.ndarray:
    """d(truth, recon) = 1 when the signs strictly oppose, or when a zero
    reconstruction stands in for a nonzero truth; 0 otherwise.

    Penalizing the zero reconstruction for nonzero truth keeps "recover
    the sign" meaningful: otherwise a constant 0 answer is always free.
    """
    return np.array(
        [[0.0, 1.0, 1.0], [0.0, 0.0, 0.0], [1.0, 1.0, 0.0]]
    )  # rows: truth -1,0,+1; cols: recon -1,0,+1


def sign_instance_rd() -> RdConstraint:
    base = sign_instance_base()
    x_ax, y_ax = base.axes
    f_ax = Alphabet("f", (-1, 0, 1))
    f1 = FunctionSpec.from_callable(x_ax, y_ax, lambda x, y: x, f_ax)
    f2 = FunctionSpec.from_callable(x_ax, y_ax, lambda x, y: y, f_ax)
    d = sign_distortion()
    return RdConstraint(f1, f2, d, d, 0.0, 0.0, {}, {})


def sign_instance_system() -> tuple[AuxiliarySystem, RdConstraint]:
    """The binary sign-split system: T, V constant; U splits the sign of X
    (fair coin at 0); W follows U at y=0 and the sign of y otherwise."""
    base = sign_instance_base()
    x_ax, y_ax = base.axes
    u_ax = Alphabet("u", ("u-", "u+"))
    u_ch = Channel((x_ax,), u_ax, [[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]])
    t_ax = Alphabet("t", ("t0",))
    t_ch = Channel.constant((u_ax,), t_ax)
    v_ax = Alphabet("v", ("v0",))
    v_ch = Channel.constant((x_ax, t_ax), v_ax)
    w_ax = Alphabet("w", ("w-", "w+"))
    minus_cells = {("u-", -1), ("u-", 0), ("u+", -1)}
    w_ch = Channel.deterministic(
        (u_ax, y_ax), w_ax, lambda u, y: "w-" if (u, y) in minus_cells else "w+"
    )
    sys = AuxiliarySystem(base, u_ch, t_ch, v_ch, w_ch)

    rd = sign_instance_rd()
    g1 = {("v0", "t0", "w-"): -1, ("v0", "t0", "w+"): 1}
    g2 = dict(g1)
    rd = RdConstraint(rd.f1, rd.f2, rd.d1, rd.d2, 0.0, 0.0, g1, g2)
    return sys, rd


def sign_instance_full_coop_system() -> tuple[AuxiliarySystem, RdConstraint]:
    """Full-cooperation system: U = X; W resolves both signs directly."""
    base = sign_instance_base()
    x_ax, y_ax = base.axes
    u_ax = Alphabet("u", x_ax.symbols)
    u_ch = Channel.identity(x_ax, u_ax)
    t_ax = Alphabet("t", ("t0",))
    t_ch = Channel.constant((u_ax,), t_ax)
    v_ax = Alphabet("v", ("v0",))
    v_ch = Channel.constant((x_ax, t_ax), v_ax)
    w_ax = Alphabet("w", ("w-", "w+"))
    table = np.zeros((3, 3, 2))
    for ui, u in enumerate(u_ax.symbols):
        for yi, y in enumerate(y_ax.symbols):
            if u == -1 or y == -1:
                table[ui, yi] = [1.0, 0.0]
            elif u == 1 or y == 1:
                table[ui, yi] = [0.0, 1.0]
            else:  # the (0,0) cell splits evenly
                table[ui, yi] = [0.5, 0.5]
    w_ch = Channel((u_ax, y_ax), w_ax, table)
    sys = AuxiliarySystem(base, u_ch, t_ch, v_ch, w_ch)
    rd = sign_instance_rd()
    g1 = {("v0", "t0", "w-"): -1, ("v0", "t0", "w+"): 1}
    g2 = dict(g1)
    rd = RdConstraint(rd.f1, rd.f2, rd.d1, rd.d2, 0.0, 0.0, g1, g2)
    return sys, rd


@dataclass(frozen=True)
class SignInstanceReport:
    """The three headline values of the rate-distortion instance."""

    min_sum_general: float  # claim 1: T=U search minimum of I(X,Y;T,W)
    search: SumRateResult
    full_coop_sum: float  # claim 2: I(X,Y;W) of the closed-form W
    full_coop_rates: RateTuple
    full_coop_distortions: tuple
    split_rates: RateTuple  # claim 3: bound evaluation of the sign-split system
    split_distortions: tuple
    split_i_xy_w: float  # the receiver-information part I(X,Y;W) alone

    def rows(self) -> list[tuple]:
        return [
            ("claim1_min_sum_general", self.min_sum_general),
            ("claim2_full_coop_sum", self.full_coop_sum),
            ("claim3_r0", self.split_rates.r0),
            ("claim3_sum", self.split_rates.sum),
            ("claim3_receiver_info", self.split_i_xy_w),
        ]


def sign_instance_claims(
    cfg: SearchConfig = SearchConfig(), n_t_max: int = 7, n_w_max: int = 2
) -> SignInstanceReport:
    """Compute the three headline values of the rate-distortion instance.

    The general minimum runs the exhaustive-structure T=U search; the
    full-cooperation value evaluates the closed-form W; the sign-split
    entry evaluates the bound formulas for the explicit binary system.
    """
    base = sign_instance_base()
    rd = sign_instance_rd()
    search = kaspi_berger51_search(base, rd, cfg, n_t_max=n_t_max, n_w_max=n_w_max)

    fc_sys, fc_rd = sign_instance_full_coop_system()
    fc_rates, fc_d = evaluate_rd_bounds(fc_sys, fc_rd)
    ax = fc_sys.axis_names()
    fc_sum = mutual_information(fc_sys.joint, [ax["x"], ax["y"]], [ax["w"]])

    sp_sys, sp_rd = sign_instance_system()
    sp_rates, sp_d = evaluate_rd_bounds(sp_sys, sp_rd)
    axs = sp_sys.axis_names()
    sp_info = mutual_information(sp_sys.joint, [axs["x"], axs["y"]], [axs["w"]])

    return SignInstanceReport(
        min_sum_general=search.value,
        search=search,
        full_coop_sum=fc_sum,
        full_coop_rates=fc_rates,
        full_coop_distortions=fc_d,
        split_rates=sp_rates,
        split_distortions=sp_d,
        split_i_xy_w=sp_info,
    )
