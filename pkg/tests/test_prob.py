import math

import numpy as np
import pytest

from conftest import hb, random_joint, sign_split_channels
from coopcomp.prob import (
    Alphabet,
    Channel,
    FunctionSpec,
    JointPmf,
    ProbabilityError,
    RateTuple,
    check_markov_chain,
    compose_joint,
    conditional_entropy,
    entropy,
    information_measure,
    mutual_information,
)


def test_uniform_entropy():
    x = Alphabet("x", (0, 1, 2, 3))
    y = Alphabet("y", ("a", "b"))
    j = JointPmf((x, y), np.full((4, 2), 1 / 8))
    assert information_measure(j, "entropy", [("x",)]) == pytest.approx(2.0, abs=1e-12)


def test_grid2_conditional_entropy(grid2_base):
    assert conditional_entropy(grid2_base, ["x"], ["y"]) == pytest.approx(1.38, abs=0.01)


def test_sign_base_conditional_entropy(sign_base):
    assert conditional_entropy(sign_base, ["x"], ["y"]) == pytest.approx(1.25, abs=0.01)


def test_sign_split_information(sign_base):
    u_ch, t_ch, v_ch, w_ch = sign_split_channels(sign_base)
    j = compose_joint(sign_base, u_ch, t_ch, v_ch, w_ch)
    # closed form: I(X;U|Y) = (4/7) hb(1/4); the sum-information part is 1 - 1/7
    assert mutual_information(j, ["x"], ["u"], ["y"]) == pytest.approx(
        4 / 7 * hb(1 / 4), abs=1e-12
    )
    assert mutual_information(j, ["x", "y"], ["w"]) == pytest.approx(
        1 - 1 / 7, abs=1e-12
    )


def test_compose_constant_channels(sign_base):
    x_ax, y_ax = sign_base.axes
    u_ch = Channel.constant((x_ax,), Alphabet("u", ("u0",)))
    t_ch = Channel.constant((u_ch.to_axis,), Alphabet("t", ("t0",)))
    v_ch = Channel.constant((x_ax, t_ch.to_axis), Alphabet("v", ("v0",)))
    w_ch = Channel.constant((u_ch.to_axis, y_ax), Alphabet("w", ("w0",)))
    j = compose_joint(sign_base, u_ch, t_ch, v_ch, w_ch)
    for ax in ("t", "u", "v", "w"):
        assert entropy(j, [ax]) == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(
        j.marginal_array(["x", "y"]), sign_base.marginal_array(["x", "y"]), atol=1e-9
    )


def test_compose_identity_u(sign_base):
    x_ax, y_ax = sign_base.axes
    u_ax = Alphabet("u", x_ax.symbols)
    u_ch = Channel.identity(x_ax, u_ax)
    t_ch = Channel.constant((u_ax,), Alphabet("t", ("t0",)))
    v_ch = Channel.constant((x_ax, t_ch.to_axis), Alphabet("v", ("v0",)))
    w_ch = Channel.constant((u_ax, y_ax), Alphabet("w", ("w0",)))
    j = compose_joint(sign_base, u_ch, t_ch, v_ch, w_ch)
    assert mutual_information(j, ["x"], ["u"], ["y"]) == pytest.approx(
        conditional_entropy(sign_base, ["x"], ["y"]), abs=1e-12
    )


def test_compose_markov_chains_by_construction(sign_base):
    u_ch, t_ch, v_ch, w_ch = sign_split_channels(sign_base)
    j = compose_joint(sign_base, u_ch, t_ch, v_ch, w_ch)
    assert check_markov_chain(j, ["t"], ["u"], ["x", "y"])
    assert check_markov_chain(j, ["v"], ["x", "t"], ["u", "y", "w"])
    assert check_markov_chain(j, ["v", "x", "t"], ["u", "y"], ["w"])


def test_markov_chain_parity_counterexample():
    x = Alphabet("x", (0, 1))
    y = Alphabet("y", (0, 1))
    v = Alphabet("v", (0, 1))
    table = np.zeros((2, 2, 2))
    for xi in range(2):
        for yi in range(2):
            table[(xi + yi) % 2, xi, yi] = 0.25
    j = JointPmf((v, x, y), table)
    assert not check_markov_chain(j, ["v"], ["x"], ["y"])
    assert mutual_information(j, ["v"], ["y"], ["x"]) == pytest.approx(1.0, abs=1e-12)


def test_chain_rule_random_pmfs():
    rng = np.random.default_rng(10)
    for _ in range(120):
        shape = tuple(rng.integers(2, 4, size=3))
        axes = [Alphabet(n, tuple(range(s))) for n, s in zip("abc", shape)]
        j = JointPmf(axes, random_joint(rng, shape, zeros=0.2))
        lhs = entropy(j, ["a", "b"])
        rhs = entropy(j, ["a"]) + conditional_entropy(j, ["b"], ["a"])
        assert lhs == pytest.approx(rhs, abs=1e-9)


def test_bounds_random_pmfs():
    rng = np.random.default_rng(11)
    for _ in range(120):
        shape = tuple(rng.integers(2, 5, size=2))
        axes = [Alphabet(n, tuple(range(s))) for n, s in zip("ab", shape)]
        j = JointPmf(axes, random_joint(rng, shape))
        h = entropy(j, ["a"])
        assert -1e-9 <= h <= math.log2(shape[0]) + 1e-9
        assert mutual_information(j, ["a"], ["b"]) >= -1e-9


def test_information_measure_errors(grid2_base):
    with pytest.raises(ProbabilityError):
        information_measure(grid2_base, "entropy", [("nope",)])
    with pytest.raises(ProbabilityError):
        information_measure(grid2_base, "mutual_info", [("x",), ("x",)])
    with pytest.raises(ProbabilityError):
        information_measure(grid2_base, "whatever", [("x",)])
    with pytest.raises(ProbabilityError):
        information_measure(grid2_base, "cond_mutual_info", [("x",), ("y",)])


def test_pmf_normalization_policy():
    x = Alphabet("x", (0, 1))
    with pytest.raises(ProbabilityError):
        JointPmf((x,), [0.5, 0.6])
    j = JointPmf((x,), [0.5, 0.5 + 5e-10])
    assert j.table.sum() == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ProbabilityError):
        JointPmf((x,), [1.5, -0.5])


def test_channel_row_normalization():
    x = Alphabet("x", (0, 1))
    u = Alphabet("u", (0, 1))
    with pytest.raises(ProbabilityError):
        Channel((x,), u, [[0.7, 0.2], [0.5, 0.5]])
    ch = Channel((x,), u, [[0.5, 0.5 + 1e-10], [1.0, 0.0]])
    assert np.allclose(ch.table.sum(axis=-1), 1.0, atol=1e-15)


def test_rate_tuple_guard():
    with pytest.raises(ProbabilityError):
        RateTuple(-0.5, 0, 0, 0)
    rt = RateTuple(-1e-12, 0.1, 0.2, 0.3)
    assert rt.r0 == 0.0 and rt.sum == pytest.approx(0.3)


def test_partial_invertibility_flag(grid2_base, grid2_f):
    # |f| recovers x on this support
    assert grid2_f.is_partially_invertible_wrt_x(grid2_base)
    x, y = grid2_base.axes
    xor3 = FunctionSpec.from_callable(
        x, y, lambda a, b: (a + b) % 3, Alphabet("g", (0, 1, 2))
    )
    assert not xor3.is_partially_invertible_wrt_x(grid2_base)


def test_alphabet_invariants():
    with pytest.raises(ProbabilityError):
        Alphabet("x", (0, 0, 1))
    with pytest.raises(ProbabilityError):
        Alphabet("x", ())
    a = Alphabet("x", (5, 7))
    assert a.index(7) == 1
    with pytest.raises(ProbabilityError):
        a.index(9)
