import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from coopcomp.prob import Alphabet, Channel, FunctionSpec, JointPmf


def hb(p: float) -> float:
    """Binary entropy, independent of the package under test."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def random_joint(rng, shape, zeros: float = 0.0) -> np.ndarray:
    """Random pmf table, optionally with a sprinkling of structural zeros."""
    table = rng.gamma(1.0, 1.0, size=shape)
    if zeros > 0.0:
        mask = rng.random(shape) < zeros
        if mask.all():
            mask.flat[0] = False
        table = np.where(mask, 0.0, table)
    return table / table.sum()


@pytest.fixture
def sign_base():
    """Ternary pair uniform on the seven sign-compatible cells."""
    x = Alphabet("x", (-1, 0, 1))
    y = Alphabet("y", (-1, 0, 1))
    t = np.full((3, 3), 1.0 / 7.0)
    t[0, 2] = 0.0
    t[2, 0] = 0.0
    return JointPmf((x, y), t)


@pytest.fixture
def grid2_base():
    """The 3x3 signed-product instance."""
    x = Alphabet("x", (0, 1, 2))
    y = Alphabet("y", (0, 1, 2))
    return JointPmf(
        (x, y), [[0.21, 0.03, 0.12], [0.06, 0.15, 0.16], [0.03, 0.12, 0.12]]
    )


@pytest.fixture
def grid2_f(grid2_base):
    x, y = grid2_base.axes
    return FunctionSpec.from_callable(
        x, y, lambda a, b: ((-1) ** b) * a, Alphabet("f", (-2, -1, 0, 1, 2))
    )


def sign_split_channels(base):
    """The binary sign-split auxiliary tables of the ternary instance."""
    x_ax, y_ax = base.axes
    u_ax = Alphabet("u", ("u-", "u+"))
    u_ch = Channel((x_ax,), u_ax, [[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]])
    t_ax = Alphabet("t", ("t0",))
    t_ch = Channel.constant((u_ax,), t_ax)
    v_ax = Alphabet("v", ("v0",))
    v_ch = Channel.constant((x_ax, t_ax), v_ax)
    w_ax = Alphabet("w", ("w-", "w+"))
    minus = {("u-", -1), ("u-", 0), ("u+", -1)}
    w_ch = Channel.deterministic(
        (u_ax, y_ax), w_ax, lambda u, yy: "w-" if (u, yy) in minus else "w+"
    )
    return u_ch, t_ch, v_ch, w_ch
