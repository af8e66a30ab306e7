import numpy as np
import pytest

from coopcomp.binning import BinningCodebook, codebook_exponents, simulate_two_phase
from coopcomp.prob import Alphabet, Channel, FunctionSpec, JointPmf, RateTuple
from coopcomp.regions import AuxiliarySystem, inner_bound_rates, validate_auxiliaries
from coopcomp.typicality import CodebookCapError


def rare_flip_system(p1=0.005):
    """X fair and independent of a rarely-one Y; the receiver wants Y."""
    x_ax = Alphabet("x", (0, 1))
    y_ax = Alphabet("y", (0, 1))
    base = JointPmf((x_ax, y_ax), np.outer([0.5, 0.5], [1 - p1, p1]))
    f = FunctionSpec.from_callable(x_ax, y_ax, lambda x, y: y, Alphabet("f", (0, 1)))
    u_ax = Alphabet("u", ("u0",))
    u_ch = Channel.constant((x_ax,), u_ax)
    t_ax = Alphabet("t", ("t0",))
    t_ch = Channel.constant((u_ax,), t_ax)
    v_ax = Alphabet("v", ("v0",))
    v_ch = Channel.constant((x_ax, t_ax), v_ax)
    w_ax = Alphabet("w", (0, 1))
    w_ch = Channel.deterministic((u_ax, y_ax), w_ax, lambda u, y: y)
    v_sets = {"v0": frozenset((("t0", 0), ("t0", 1)))}
    w_sets = {
        0: frozenset((("t0", "u0", 0),)),
        1: frozenset((("t0", "u0", 1),)),
    }
    sys_ = AuxiliarySystem(base, u_ch, t_ch, v_ch, w_ch, v_sets, w_sets)
    return f, sys_


def constant_system():
    x_ax = Alphabet("x", (0, 1))
    y_ax = Alphabet("y", (0, 1))
    base = JointPmf((x_ax, y_ax), np.full((2, 2), 0.25))
    f = FunctionSpec.from_callable(x_ax, y_ax, lambda x, y: 0, Alphabet("f", (0,)))
    u_ch = Channel.constant((x_ax,), Alphabet("u", ("u0",)))
    t_ch = Channel.constant((u_ch.to_axis,), Alphabet("t", ("t0",)))
    v_ch = Channel.constant((x_ax, t_ch.to_axis), Alphabet("v", ("v0",)))
    w_ch = Channel.constant((u_ch.to_axis, y_ax), Alphabet("w", ("w0",)))
    v_sets = {"v0": frozenset((("t0", 0), ("t0", 1)))}
    w_sets = {"w0": frozenset((("t0", "u0", 0), ("t0", "u0", 1)))}
    return f, AuxiliarySystem(base, u_ch, t_ch, v_ch, w_ch, v_sets, w_sets)


def test_constant_function_zero_error():
    f, sys_ = constant_system()
    res = simulate_two_phase(f, sys_, RateTuple(0, 0, 0, 0), 50, 40, seed=0)
    assert res.err_total == 0
    assert res.breakdown_sums()


def test_reproducibility():
    f, sys_ = rare_flip_system()
    rates = RateTuple(0.3, 0.3, 0.35, 0.65)
    a = simulate_two_phase(f, sys_, rates, 100, 80, seed=7)
    b = simulate_two_phase(f, sys_, rates, 100, 80, seed=7)
    assert a == b
    c = simulate_two_phase(f, sys_, rates, 100, 80, seed=8)
    assert a != c  # different seed, different sample path (overwhelmingly)


def test_breakdown_sums_exactly():
    f, sys_ = rare_flip_system()
    rb = inner_bound_rates(sys_)
    rates = RateTuple(rb.r0 + 0.3, rb.rx + 0.3, rb.ry + 0.3, 0)
    res = simulate_two_phase(f, sys_, rates, 200, 120, seed=3)
    assert res.breakdown_sums()
    assert res.trials == 120


def test_memory_cap_refusal():
    f, sys_ = rare_flip_system(p1=0.4)  # H(Y) large, codebook astronomical
    rates = RateTuple(0.3, 0.3, 1.3, 1.6)
    with pytest.raises(CodebookCapError, match="exceeds the cap"):
        BinningCodebook(sys_, rates, 400, seed=0)


def test_exponents_match_information_quantities():
    f, sys_ = rare_flip_system()
    exps = codebook_exponents(sys_)
    assert exps["t"] == pytest.approx(0.0, abs=1e-12)
    assert exps["u"] == pytest.approx(0.0, abs=1e-12)
    assert exps["v"] == pytest.approx(0.0, abs=1e-12)
    rb = inner_bound_rates(sys_)
    assert exps["w"] == pytest.approx(rb.ry, abs=1e-12)


def test_error_decays_with_blocklength_small():
    f, sys_ = rare_flip_system()
    assert validate_auxiliaries(sys_, f).ok
    rb = inner_bound_rates(sys_)
    rates = RateTuple(rb.r0 + 0.3, rb.rx + 0.3, rb.ry + 0.3, 0)
    r100 = simulate_two_phase(f, sys_, rates, 100, 150, seed=0)
    r400 = simulate_two_phase(f, sys_, rates, 400, 150, seed=0)
    assert r400.error_rate < r100.error_rate


def test_starved_bins_collapse():
    f, sys_ = rare_flip_system()
    rb = inner_bound_rates(sys_)
    bs = max(rb.sum - 0.3, 0.0)
    rates = RateTuple(rb.r0 + 0.3, bs / 2, bs / 2, bs)
    res = simulate_two_phase(f, sys_, rates, 400, 60, seed=0)
    assert res.error_rate >= 0.5
    assert res.err_phase2_bin > 0  # receiver ambiguity is the failure mode


def test_multi_t_codebook_paths():
    # a system with nontrivial T/U exercises the first-phase bin decoding
    x_ax = Alphabet("x", (0, 1))
    y_ax = Alphabet("y", (0, 1))
    base = JointPmf((x_ax, y_ax), [[0.4, 0.1], [0.1, 0.4]])
    f = FunctionSpec.from_callable(x_ax, y_ax, lambda x, y: x, Alphabet("f", (0, 1)))
    u_ax = Alphabet("u", (0, 1))
    u_ch = Channel((x_ax,), u_ax, [[0.9, 0.1], [0.1, 0.9]])
    t_ax = Alphabet("t", (0, 1))
    t_ch = Channel((u_ax,), t_ax, [[0.8, 0.2], [0.2, 0.8]])
    v_ax = Alphabet("v", (0, 1))
    v_ch = Channel.deterministic((x_ax, t_ax), v_ax, lambda x, t: x)
    w_ax = Alphabet("w", ("w0",))
    w_ch = Channel.constant((u_ax, y_ax), w_ax)
    v_sets = {xv: frozenset((t, xv) for t in (0, 1)) for xv in (0, 1)}
    w_sets = {
        "w0": frozenset((t, u, y) for t in (0, 1) for u in (0, 1) for y in (0, 1))
    }
    sys_ = AuxiliarySystem(base, u_ch, t_ch, v_ch, w_ch, v_sets, w_sets)
    report = validate_auxiliaries(sys_, f)
    assert report.ok, report.failures
    rb = inner_bound_rates(sys_)
    rates = RateTuple(rb.r0 + 0.4, rb.rx + 0.4, rb.ry + 0.4, 0)
    res = simulate_two_phase(f, sys_, rates, 12, 80, seed=1)
    assert res.breakdown_sums()
    book = BinningCodebook(sys_, rates, 12, seed=1)
    assert book.sizes["t"] > 1 and book.sizes["u"] > 1 and book.sizes["v"] > 1
