"""Jointly typical sequences and Monte Carlo typicality empirics.

A tuple of n-sequences is jointly epsilon-typical when every cell of its
empirical type is within a relative epsilon of the target pmf; cells with
zero probability force a zero count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .prob import ZERO_TOL, JointPmf, ProbabilityError


class CodebookCapError(MemoryError):
    """A requested codebook exceeds the storage cap."""


@dataclass(frozen=True)
class TypicalityConfig:
    epsilon: float
    n: int

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ProbabilityError("epsilon must be positive")
        if self.n < 1:
            raise ProbabilityError("blocklength must be at least 1")


def type_windows(p: np.ndarray, n: int, eps: float):
    """Integer count windows [lo, hi] per cell; zero cells force [0, 0]."""
    flat = p.reshape(-1)
    lo = np.where(flat > ZERO_TOL, np.ceil(n * flat * (1 - eps) - 1e-9), 0.0)
    hi = np.where(flat > ZERO_TOL, np.floor(n * flat * (1 + eps) + 1e-9), 0.0)
    return lo.astype(np.int64), hi.astype(np.int64)


def joint_type_counts(seqs, sizes) -> np.ndarray:
    """Empirical joint counts of aligned index sequences."""
    seqs = [np.asarray(s) for s in seqs]
    n = len(seqs[0])
    if any(len(s) != n for s in seqs):
        raise ProbabilityError("sequence length mismatch")
    idx = np.zeros(n, dtype=np.int64)
    for s, size in zip(seqs, sizes):
        idx = idx * size + s
    total = int(np.prod(sizes))
    return np.bincount(idx, minlength=total)


def is_jointly_typical(seqs, joint: JointPmf, eps: float) -> bool:
    """True iff the empirical type is within relative eps of ``joint``."""
    sizes = [len(a) for a in joint.axes]
    counts = joint_type_counts(seqs, sizes)
    lo, hi = type_windows(joint.table, len(np.asarray(seqs[0])), eps)
    return bool(np.all(counts >= lo) and np.all(counts <= hi))


def batch_typical(
    codebook: np.ndarray,
    fixed_seqs,
    joint_table: np.ndarray,
    code_size: int,
    fixed_sizes,
    eps: float,
    code_axis_first: bool = True,
    float_book: np.ndarray | None = None,
) -> np.ndarray:
    """Typicality mask over codewords against fixed companion sequences.

    ``joint_table`` must be arranged (code axis, *fixed axes) when
    ``code_axis_first``.  ``float_book`` is an optional cached float32
    copy of a binary codebook; with it the per-codeword type reduces to
    one BLAS product, which is what keeps large-codebook scans cheap.
    """
    codebook = np.asarray(codebook)
    C, n = codebook.shape
    fixed_idx = np.zeros(n, dtype=np.int64)
    for s, size in zip(fixed_seqs, fixed_sizes):
        fixed_idx = fixed_idx * size + np.asarray(s)
    n_fixed = int(np.prod(fixed_sizes)) if fixed_sizes else 1
    table = joint_table if code_axis_first else np.moveaxis(joint_table, -1, 0)
    p = table.reshape(code_size, n_fixed)
    lo, hi = type_windows(p, n, eps)
    lo = lo.reshape(code_size, n_fixed)
    hi = hi.reshape(code_size, n_fixed)

    fixed_onehot = np.zeros((n, n_fixed), dtype=np.float32)
    fixed_onehot[np.arange(n), fixed_idx] = 1.0

    if float_book is not None and code_size == 2:
        counts1 = np.rint(float_book @ fixed_onehot).astype(np.int64)
        totals = fixed_onehot.sum(axis=0).astype(np.int64)
        counts0 = totals[None, :] - counts1
        ok = np.all((counts1 >= lo[1]) & (counts1 <= hi[1]), axis=1)
        ok &= np.all((counts0 >= lo[0]) & (counts0 <= hi[0]), axis=1)
        return ok

    out = np.zeros(C, dtype=bool)
    chunk = max(1, min(C, int(24_000_000 // max(n, 1))))
    for start in range(0, C, chunk):
        block = codebook[start : start + chunk]
        ok = np.ones(block.shape[0], dtype=bool)
        for a in range(code_size):
            counts = np.rint(
                (block == a).astype(np.float32) @ fixed_onehot
            ).astype(np.int64)
            ok &= np.all((counts >= lo[a]) & (counts <= hi[a]), axis=1)
        out[start : start + block.shape[0]] = ok
    return out


def draw_iid(rng: np.random.Generator, pmf: np.ndarray, n: int) -> np.ndarray:
    return rng.choice(len(pmf), size=n, p=pmf)


def empirical_typicality(
    joint: JointPmf, n: int, eps: float, trials: int, rng
) -> float:
    """Monte Carlo estimate of P((X^n, ...) typical) for iid draws."""
    sizes = [len(a) for a in joint.axes]
    flat = joint.table.reshape(-1)
    lo, hi = type_windows(joint.table, n, eps)
    hits = 0
    for _ in range(trials):
        idx = rng.choice(len(flat), size=n, p=flat)
        counts = np.bincount(idx, minlength=len(flat))
        if np.all(counts >= lo) and np.all(counts <= hi):
            hits += 1
    return hits / trials


def covering_rate(
    joint: JointPmf,
    n: int,
    eps: float,
    rate: float,
    trials: int,
    rng,
    codebook_cap: int = 2**24,
) -> float:
    """Fraction of source draws covered by a 2^{nR} iid reproduction book.

    The joint is over (source, reproduction); codewords are drawn iid from
    the reproduction marginal.  Refuses codebooks above the cap, naming
    the offending exponent.
    """
    n_codewords = int(math.ceil(2 ** (n * rate)))
    if n_codewords > codebook_cap:
        raise CodebookCapError(
            f"covering codebook needs 2^{n * rate:.1f} codewords, over the cap"
        )
    src_ax, rep_ax = joint.axes
    p = joint.marginal_array([src_ax.name, rep_ax.name])
    p_src = p.sum(axis=1)
    p_rep = p.sum(axis=0)
    hits = 0
    for _ in range(trials):
        x = rng.choice(len(p_src), size=n, p=p_src)
        book = rng.choice(len(p_rep), size=(n_codewords, n), p=p_rep)
        mask = batch_typical(
            book, [x], p, len(p_rep), [len(p_src)], eps, code_axis_first=False
        )
        hits += bool(mask.any())
    return hits / trials


def logprob_bound_fraction(
    joint: JointPmf, n: int, eps: float, trials: int, rng
) -> float:
    """Fraction of typical draws with -log2 p(x^n)/n inside H(1 +/- eps)."""
    flat = joint.table.reshape(-1)
    pos = flat[flat > ZERO_TOL]
    h = float(-(pos * np.log2(pos)).sum())
    lo, hi = type_windows(joint.table, n, eps)
    logp_flat = np.where(flat > ZERO_TOL, np.log2(np.where(flat > 0, flat, 1.0)), 0.0)
    inside = 0
    typical = 0
    for _ in range(trials):
        idx = rng.choice(len(flat), size=n, p=flat)
        counts = np.bincount(idx, minlength=len(flat))
        if not (np.all(counts >= lo) and np.all(counts <= hi)):
            continue
        typical += 1
        per_symbol = -float(counts @ logp_flat) / n
        if h * (1 - eps) - 1e-12 <= per_symbol <= h * (1 + eps) + 1e-12:
            inside += 1
    return inside / typical if typical else float("nan")


def typicality_empirics(
    joint: JointPmf,
    n_values,
    eps: float,
    trials: int,
    seed: int = 0,
    covering: dict | None = None,
) -> list[dict]:
    """Per-blocklength table of typicality and covering estimates.

    ``covering`` optionally holds a (source, reproduction) joint and the
    two rates to probe: {"joint": JointPmf, "rate_above": r, "rate_below":
    r, "trials": t, "cap": c}.
    """
    rows = []
    for i, n in enumerate(n_values):
        rng = np.random.default_rng([seed, i])
        row = {
            "n": int(n),
            "p_typical": empirical_typicality(joint, n, eps, trials, rng),
            "logprob_fraction": logprob_bound_fraction(joint, n, eps, trials, rng),
        }
        if covering:
            cov_trials = covering.get("trials", max(20, trials // 10))
            cap = covering.get("cap", 2**24)
            row["cover_above"] = covering_rate(
                covering["joint"], n, eps, covering["rate_above"], cov_trials, rng, cap
            )
            row["cover_below"] = covering_rate(
                covering["joint"], n, eps, covering["rate_below"], cov_trials, rng, cap
            )
        rows.append(row)
    return rows
