"""Acceptance suite: every headline requirement at its stated tolerance.

Each criterion prints one PASS/FAIL line (written to the real stdout so it
survives pytest capture).  Criteria:

1. bundled rate-distortion instance: general-search value, full-cooperation
   value, and the sign-split pair, via the repro CLI;
2. the 3x3 computation instance: H(X|Y) and frontier dominance;
3. selector-family sweep endpoints (a=4, b=10);
4. graph-entropy solver vs the exhaustive grid oracle;
5. specialization-consistency identities;
6. simulator error decay above the bounds / collapse below them;
7. invariant suites (probability properties, exhaustive edge-rule check,
   frontier monotonicity, witness re-validation).
"""
import itertools
import math
import sys

import numpy as np
import pytest

from conftest import hb, random_joint
from coopcomp.binning import simulate_two_phase
from coopcomp.cli import main as cli_main
from coopcomp.gentropy import (
    OracleBudgetError,
    SolverConfig,
    _vertex_k_table,
    conditional_graph_entropy,
    grid_oracle_value,
)
from coopcomp.graphs import build_conditional_char_graph
from coopcomp.prob import (
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
from coopcomp.regions import (
    AuxiliarySystem,
    RdConstraint,
    SearchConfig,
    evaluate_rd_bounds,
    full_cooperation_system,
    function_entropy,
    inner_bound_rates,
    kaspi_berger_full_coop_sum,
    kaspi_berger_general_sum,
    kaspi_berger51_search,
    minimize_sum_rate,
    rate_one_round,
    region_cascade,
    region_full_cooperation,
    region_partially_invertible,
    region_two_round,
    validate_auxiliaries,
)
from coopcomp.repro import (
    example1_sweep,
    example1_witness_channel,
    example2_regions,
)


def _report(name: str, ok: bool, detail: str):
    print(f"ACCEPTANCE {'PASS' if ok else 'FAIL'} {name}: {detail}", flush=True)


# --------------------------------------------------------------------------
# criterion 1: bundled rate-distortion instance via the repro CLI
# --------------------------------------------------------------------------


@pytest.fixture(scope="module")
def appendix_report(tmp_path_factory):
    out = str(tmp_path_factory.mktemp("appendix"))
    rc = cli_main(["repro", "--target", "appendix", "--out", out, "--seed", "0"])
    assert rc == 0
    rows = {}
    with open(f"{out}/appendix_claims.csv") as fh:
        for line in fh:
            if line.startswith("#") or line.startswith("quantity"):
                continue
            name, value = line.strip().split(",")
            rows[name] = float(value)
    return rows


def test_criterion1_claim1_general_minimum(appendix_report):
    value = appendix_report["claim1_min_sum_general"]
    ok = abs(value - 1.03) <= 0.01
    _report("criterion-1a (general search minimum)", ok, f"min sum = {value:.4f}, target 1.03 +/- 0.01")
    assert ok


def test_criterion1_claim2_full_cooperation(appendix_report):
    value = appendix_report["claim2_full_coop_sum"]
    ok = abs(value - (1 - 1 / 7)) <= 1e-6
    _report(
        "criterion-1b (full-cooperation value)",
        ok,
        f"sum = {value:.7f}, target 1 - 1/7 +/- 1e-6",
    )
    assert ok


def test_criterion1_claim3_sign_split_pair(appendix_report):
    """The documented target pair for the sign-split entry.

    The bound formulas evaluated on the stated tables give
    (r0, sum) = ((4/7) hb(1/4), 1); the documented targets (0.38, 1 - 1/7)
    are not attainable from those tables, so this check records the
    discrepancy rather than masking it.
    """
    r0 = appendix_report["claim3_r0"]
    s = appendix_report["claim3_sum"]
    ok = abs(r0 - 0.38) <= 0.01 and abs(s - (1 - 1 / 7)) <= 1e-6
    _report(
        "criterion-1c (sign-split pair)",
        ok,
        f"(r0, sum) = ({r0:.4f}, {s:.4f}), target (0.38 +/- 0.01, {1 - 1 / 7:.4f} +/- 1e-6)",
    )
    assert ok


# --------------------------------------------------------------------------
# criterion 2: the 3x3 computation instance
# --------------------------------------------------------------------------


def test_criterion2_example2_dominance():
    rep = example2_regions(SearchConfig(grid=33, restarts=8, stochastic_probes=12, seed=0))
    gaps = rep.dominance_gaps()
    ok = (
        abs(rep.h_x_given_y - 1.38) <= 0.01
        and bool(gaps)
        and min(gaps) >= -1e-9
        and max(gaps) > 1e-6
    )
    _report(
        "criterion-2 (3x3 instance)",
        ok,
        f"H(X|Y) = {rep.h_x_given_y:.4f}; gap range [{min(gaps):.4f}, {max(gaps):.4f}]",
    )
    assert ok


# --------------------------------------------------------------------------
# criterion 3: selector-family sweep endpoints
# --------------------------------------------------------------------------


def test_criterion3_selector_sweep_endpoints():
    curve = example1_sweep(4, 10, SearchConfig(grid=33, stochastic_probes=16, seed=0))
    pts = dict(curve.points)
    ys = [y for _x, y in curve.points]
    witness = example1_witness_channel(curve, 1.0)
    table = witness.table
    pairing = (
        table.shape == (4, 2)
        and np.all((table == 0) | (table == 1))
        and sorted(int(table[:, u].sum()) for u in range(table.shape[1])) == [2, 2]
    )
    ok = (
        abs(pts[0.0] - 42.0) <= 1e-6
        and pts[1.0] <= 22.0 + 1e-6
        and abs(pts[2.0] - 12.0) <= 1e-6
        and all(b <= a + 1e-9 for a, b in zip(ys, ys[1:]))
        and pairing
    )
    _report(
        "criterion-3 (selector sweep)",
        ok,
        f"sum(0)={pts[0.0]:.6f}, sum(1)={pts[1.0]:.6f}, sum(2)={pts[2.0]:.6f}, "
        f"pairing witness={'yes' if pairing else 'no'}",
    )
    assert ok


# --------------------------------------------------------------------------
# criterion 4: solver vs exhaustive grid oracle
# --------------------------------------------------------------------------


def test_criterion4_grid_oracle_equivalence():
    rng = np.random.default_rng(2024)
    checked = 0
    worst = 0.0
    attempts = 0
    while checked < 25 and attempts < 200:
        attempts += 1
        nx = int(rng.integers(2, 5))
        ny = int(rng.integers(2, 5))
        x = Alphabet("x", tuple(range(nx)))
        y = Alphabet("y", tuple(range(ny)))
        j = JointPmf((x, y), random_joint(rng, (nx, ny), zeros=0.25))
        n_f = int(rng.integers(2, 4))
        f = FunctionSpec((x, y), Alphabet("f", tuple(range(n_f))), rng.integers(0, n_f, (nx, ny)))
        res = conditional_graph_entropy(j, f, ("x",), ("y",), SolverConfig(restarts=12, seed=checked))
        p_lk = _vertex_k_table(j, res.graph, ("y",))
        try:
            # the oracle must stay exhaustive at desk scale; instances whose
            # grid would overflow the budget are redrawn
            oracle = grid_oracle_value(res.graph, res.sets, p_lk, step=0.02, cap=4_000_000)
        except OracleBudgetError:
            continue
        diff = abs(res.value - oracle)
        worst = max(worst, diff)
        assert diff <= 5e-3, (diff, nx, ny)
        checked += 1
    assert checked == 25

    # degenerate anchors: constant f and fully distinguishing f
    rng2 = np.random.default_rng(7)
    x = Alphabet("x", (0, 1, 2))
    y = Alphabet("y", (0, 1, 2))
    j = JointPmf((x, y), random_joint(rng2, (3, 3)))
    f_const = FunctionSpec((x, y), Alphabet("f", (0,)), np.zeros((3, 3), int))
    v0 = conditional_graph_entropy(j, f_const, ("x",), ("y",), SolverConfig(restarts=4)).value
    f_id = FunctionSpec((x, y), Alphabet("f", (0, 1, 2)), np.tile(np.arange(3)[:, None], (1, 3)))
    v1 = conditional_graph_entropy(j, f_id, ("x",), ("y",), SolverConfig(restarts=4)).value
    anchors_ok = abs(v0) <= 1e-9 and abs(v1 - conditional_entropy(j, ["x"], ["y"])) <= 1e-9
    ok = worst <= 5e-3 and anchors_ok
    _report(
        "criterion-4 (grid oracle equivalence)",
        ok,
        f"25 instances, worst |solver - oracle| = {worst:.2e}; anchors exact={anchors_ok}",
    )
    assert ok


# --------------------------------------------------------------------------
# criterion 5: specialization consistency
# --------------------------------------------------------------------------


def test_criterion5_specialization_consistency():
    rng = np.random.default_rng(31)
    cfg = SearchConfig(grid=9, restarts=4, stochastic_probes=4, seed=0)
    worst_fc = worst_rd1 = worst_rd2 = 0.0
    for trial in range(10):
        x = Alphabet("x", (0, 1, 2))
        y = Alphabet("y", (0, 1, 2))
        base = JointPmf((x, y), random_joint(rng, (3, 3), zeros=0.15))
        n_f = int(rng.integers(2, 4))
        f = FunctionSpec((x, y), Alphabet("f", tuple(range(n_f))), rng.integers(0, n_f, (3, 3)))

        # (a) the general bound at the full-cooperation choice matches the
        # constant-T point of the full-cooperation frontier
        sys_fc = full_cooperation_system(base, f)
        assert validate_auxiliaries(sys_fc, f).ok
        rates = inner_bound_rates(sys_fc)
        curve = region_full_cooperation(base, f, cfg)
        hf = function_entropy(base, f)
        worst_fc = max(worst_fc, abs(rates.sum - curve.value_at(hf)), abs(rates.ry - hf))

        # (b) cascade r0 equals the one-round value exactly
        cascade_rates, _ = region_cascade(base, f, cfg)
        one_round = rate_one_round(base, f, cfg)
        assert cascade_rates.r0 == one_round.value

        # (c) rate-distortion specializations reproduce their formulas
        u_ax = Alphabet("u", (0, 1))
        u_t = rng.gamma(1.0, 1.0, (3, 2))
        u_ch = Channel((x,), u_ax, u_t / u_t.sum(1, keepdims=True))
        t_ch = Channel.identity(u_ax, Alphabet("t", (0, 1)))
        v_t = rng.gamma(1.0, 1.0, (3, 2, 2))
        v_ch = Channel((x, t_ch.to_axis), Alphabet("v", (0, 1)), v_t / v_t.sum(-1, keepdims=True))
        w_t = rng.gamma(1.0, 1.0, (2, 3, 2))
        w_ch = Channel((u_ax, y), Alphabet("w", (0, 1)), w_t / w_t.sum(-1, keepdims=True))
        sys_tu = AuxiliarySystem(base, u_ch, t_ch, v_ch, w_ch)
        worst_rd1 = max(
            worst_rd1, abs(inner_bound_rates(sys_tu).sum - kaspi_berger_general_sum(sys_tu))
        )

        u_id = Channel.identity(x, Alphabet("u", x.symbols))
        t_t = rng.gamma(1.0, 1.0, (3, 2))
        t_ch2 = Channel((u_id.to_axis,), Alphabet("t", (0, 1)), t_t / t_t.sum(1, keepdims=True))
        v_const = Channel.constant((x, t_ch2.to_axis), Alphabet("v", ("v0",)))
        w_t2 = rng.gamma(1.0, 1.0, (3, 3, 2))
        w_ch2 = Channel((u_id.to_axis, y), Alphabet("w", (0, 1)), w_t2 / w_t2.sum(-1, keepdims=True))
        sys_ux = AuxiliarySystem(base, u_id, t_ch2, v_const, w_ch2)
        worst_rd2 = max(
            worst_rd2, abs(inner_bound_rates(sys_ux).sum - kaspi_berger_full_coop_sum(sys_ux))
        )
    ok = worst_fc <= 1e-9 and worst_rd1 <= 1e-9 and worst_rd2 <= 1e-9
    _report(
        "criterion-5 (specialization consistency)",
        ok,
        f"worst gaps: full-coop {worst_fc:.2e}, T=U {worst_rd1:.2e}, U=X {worst_rd2:.2e}",
    )
    assert ok


# --------------------------------------------------------------------------
# criterion 6: simulator decay above the bounds, collapse below
# --------------------------------------------------------------------------


@pytest.fixture(scope="module")
def decay_instance():
    p1 = 0.005
    x_ax = Alphabet("x", (0, 1))
    y_ax = Alphabet("y", (0, 1))
    base = JointPmf((x_ax, y_ax), np.outer([0.5, 0.5], [1 - p1, p1]))
    f = FunctionSpec.from_callable(x_ax, y_ax, lambda x, y: y, Alphabet("f", (0, 1)))
    u_ch = Channel.constant((x_ax,), Alphabet("u", ("u0",)))
    t_ch = Channel.constant((u_ch.to_axis,), Alphabet("t", ("t0",)))
    v_ch = Channel.constant((x_ax, t_ch.to_axis), Alphabet("v", ("v0",)))
    w_ch = Channel.deterministic((u_ch.to_axis, y_ax), Alphabet("w", (0, 1)), lambda u, y: y)
    v_sets = {"v0": frozenset((("t0", 0), ("t0", 1)))}
    w_sets = {0: frozenset((("t0", "u0", 0),)), 1: frozenset((("t0", "u0", 1),))}
    sys_ = AuxiliarySystem(base, u_ch, t_ch, v_ch, w_ch, v_sets, w_sets)
    assert validate_auxiliaries(sys_, f).ok
    return f, sys_


def test_criterion6_simulator_decay_and_collapse(decay_instance):
    f, sys_ = decay_instance
    bounds = inner_bound_rates(sys_)
    above = RateTuple(bounds.r0 + 0.3, bounds.rx + 0.3, bounds.ry + 0.3, 0.0)
    r100 = simulate_two_phase(f, sys_, above, 100, 500, seed=0)
    r400 = simulate_two_phase(f, sys_, above, 400, 500, seed=0)
    starved_sum = max(bounds.sum - 0.3, 0.0)
    below = RateTuple(bounds.r0 + 0.3, starved_sum / 2, starved_sum / 2, starved_sum)
    r_below = simulate_two_phase(f, sys_, below, 400, 500, seed=0)
    ok = r400.error_rate < r100.error_rate and r_below.error_rate >= 0.5
    _report(
        "criterion-6 (simulator decay)",
        ok,
        f"err(100)={r100.error_rate:.3f} > err(400)={r400.error_rate:.3f}; "
        f"starved err(400)={r_below.error_rate:.3f} >= 0.5",
    )
    assert ok
    assert r100.breakdown_sums() and r400.breakdown_sums() and r_below.breakdown_sums()


# --------------------------------------------------------------------------
# criterion 7: invariant suites
# --------------------------------------------------------------------------


def test_criterion7a_probability_invariants():
    rng = np.random.default_rng(71)
    for _ in range(100):
        shape = tuple(rng.integers(2, 4, size=3))
        axes = [Alphabet(n, tuple(range(s))) for n, s in zip("abc", shape)]
        j = JointPmf(axes, random_joint(rng, shape, zeros=0.2))
        assert j.table.sum() == pytest.approx(1.0, abs=1e-9)
        assert entropy(j, ["a", "b"]) == pytest.approx(
            entropy(j, ["a"]) + conditional_entropy(j, ["b"], ["a"]), abs=1e-9
        )
        assert mutual_information(j, ["a"], ["b"], ["c"]) >= -1e-9
    # composed joints satisfy both chains for random channels
    for _ in range(20):
        x = Alphabet("x", (0, 1, 2))
        y = Alphabet("y", (0, 1))
        base = JointPmf((x, y), random_joint(rng, (3, 2)))
        u_t = rng.gamma(1.0, 1.0, (3, 2))
        u_ch = Channel((x,), Alphabet("u", (0, 1)), u_t / u_t.sum(1, keepdims=True))
        t_t = rng.gamma(1.0, 1.0, (2, 2))
        t_ch = Channel((u_ch.to_axis,), Alphabet("t", (0, 1)), t_t / t_t.sum(1, keepdims=True))
        v_t = rng.gamma(1.0, 1.0, (3, 2, 2))
        v_ch = Channel((x, t_ch.to_axis), Alphabet("v", (0, 1)), v_t / v_t.sum(-1, keepdims=True))
        w_t = rng.gamma(1.0, 1.0, (2, 2, 2))
        w_ch = Channel((u_ch.to_axis, y), Alphabet("w", (0, 1)), w_t / w_t.sum(-1, keepdims=True))
        j6 = compose_joint(base, u_ch, t_ch, v_ch, w_ch)
        assert j6.table.sum() == pytest.approx(1.0, abs=1e-9)
        assert check_markov_chain(j6, ["t"], ["u"], ["x", "y"])
        assert check_markov_chain(j6, ["v"], ["x", "t"], ["u", "y", "w"])
        assert check_markov_chain(j6, ["v", "x", "t"], ["u", "y"], ["w"])
    _report("criterion-7a (probability invariants)", True, "chain rule, bounds, chains hold")


def test_criterion7b_exhaustive_edge_rule():
    # every 2x2 support pattern x every f: X x Y -> {0,1}, exactly
    x = Alphabet("x", (0, 1))
    y = Alphabet("y", (0, 1))
    cells = list(itertools.product(range(2), range(2)))
    count = 0
    for support_bits in range(1, 16):
        support = [c for b, c in enumerate(cells) if support_bits >> b & 1]
        table = np.zeros((2, 2))
        for c in support:
            table[c] = 1.0 / len(support)
        j = JointPmf((x, y), table)
        for f_bits in range(16):
            f_table = np.array(
                [[f_bits >> 0 & 1, f_bits >> 1 & 1], [f_bits >> 2 & 1, f_bits >> 3 & 1]]
            )
            f = FunctionSpec((x, y), Alphabet("f", (0, 1)), f_table)
            g = build_conditional_char_graph(j, f, ("x",), ("y",))
            # quoted rule, re-derived by hand
            expect = set()
            verts = [xx for xx in (0, 1) if table[xx].sum() > 0]
            for x1, x2 in itertools.combinations(verts, 2):
                if any(
                    table[x1, yy] > 0 and table[x2, yy] > 0
                    and f_table[x1, yy] != f_table[x2, yy]
                    for yy in (0, 1)
                ):
                    expect.add(frozenset(((x1,), (x2,))))
            got = {
                frozenset((g.vertices[i], g.vertices[jx]))
                for i in range(len(g))
                for jx in range(i + 1, len(g))
                if g.adjacency[i, jx]
            }
            assert got == expect
            count += 1
    _report("criterion-7b (exhaustive edge rule)", True, f"{count} instances checked")


def test_criterion7c_frontier_monotonicity_and_witnesses(grid2_base, grid2_f):
    cfg = SearchConfig(grid=9, restarts=4, stochastic_probes=6, seed=0)
    for curve in (
        region_partially_invertible(grid2_base, grid2_f, cfg),
        region_full_cooperation(grid2_base, grid2_f, cfg),
        region_two_round(grid2_base, grid2_f, cfg),
    ):
        ys = [v for _b, v in curve.points]
        assert all(b <= a + 1e-9 for a, b in zip(ys, ys[1:]))

    # witness re-validation on search outputs
    hxy = conditional_entropy(grid2_base, ["x"], ["y"])
    for budget in (0.0, 0.4 * hxy, hxy):
        res = minimize_sum_rate(grid2_base, grid2_f, "partinv", budget, cfg)
        rep = validate_auxiliaries(res.witness, grid2_f)
        assert rep.ok, rep.failures
        assert inner_bound_rates(res.witness).r0 <= budget + 1e-6
    res = minimize_sum_rate(grid2_base, grid2_f, "fullcoop", hxy + 0.1, cfg)
    assert validate_auxiliaries(res.witness, grid2_f).ok

    # rate-distortion search witness satisfies its zero-distortion contract
    x = Alphabet("x", (-1, 0, 1))
    y = Alphabet("y", (-1, 0, 1))
    t = np.full((3, 3), 1 / 7)
    t[0, 2] = t[2, 0] = 0.0
    base = JointPmf((x, y), t)
    f_ax = Alphabet("f", (-1, 0, 1))
    f1 = FunctionSpec.from_callable(x, y, lambda a, b: a, f_ax)
    f2 = FunctionSpec.from_callable(x, y, lambda a, b: b, f_ax)
    d = np.array([[0.0, 1, 1], [0, 0, 0], [1, 1, 0]])
    rd = RdConstraint(f1, f2, d, d, 0.0, 0.0, {}, {})
    res = kaspi_berger51_search(base, rd, SearchConfig(seed=0, restarts=6), n_t_max=2, n_w_max=2)
    g1, g2 = res.details["reconstructions"]
    rates, achieved = evaluate_rd_bounds(
        res.witness, RdConstraint(f1, f2, d, d, 0.0, 0.0, g1, g2)
    )
    assert achieved == pytest.approx((0.0, 0.0), abs=1e-12)
    assert rates.sum == pytest.approx(res.value, abs=1e-9)
    _report(
        "criterion-7c (monotone frontiers, witnesses)", True, "all searches re-validate"
    )
