"""Finite-blocklength Monte Carlo simulation of the two-phase binning scheme.

Codebooks are drawn once per (config, seed): 2^{nI(X;T)} t-sequences, then
per t-codeword 2^{nI(X;U|T)}, 2^{nI(V;X|T)}, 2^{nI(U,Y;W|T)} companion
codebooks, each codeword binned uniformly.  Trials redraw the sources and
follow the encoders and the receiver exactly; the error breakdown assigns
every failed trial to the first stage that broke.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np

from .prob import RateTuple
from .regions import AuxiliarySystem, RegionError
from .typicality import CodebookCapError, batch_typical, is_jointly_typical


@dataclass(frozen=True)
class SchemeCounts:
    n: int
    trials: int
    err_total: int
    err_phase1_cover: int
    err_phase1_bin: int
    err_phase2_cover: int
    err_phase2_bin: int
    err_fundef: int

    @property
    def error_rate(self) -> float:
        return self.err_total / self.trials

    def breakdown_sums(self) -> bool:
        parts = (
            self.err_phase1_cover
            + self.err_phase1_bin
            + self.err_phase2_cover
            + self.err_phase2_bin
            + self.err_fundef
        )
        return parts == self.err_total

    def csv_row(self) -> str:
        return (
            f"{self.n},{self.trials},{self.err_total},{self.err_phase1_cover},"
            f"{self.err_phase1_bin},{self.err_phase2_cover},{self.err_phase2_bin},"
            f"{self.err_fundef}"
        )


CSV_HEADER = (
    "n,trials,err_total,err_phase1_cover,err_phase1_bin,"
    "err_phase2_cover,err_phase2_bin,err_fundef"
)


def codebook_exponents(sys: AuxiliarySystem) -> dict:
    """The four codebook exponents, in bits per symbol."""
    from .prob import mutual_information

    ax = sys.axis_names()
    j = sys.joint
    return {
        "t": mutual_information(j, [ax["x"]], [ax["t"]]),
        "u": mutual_information(j, [ax["x"]], [ax["u"]], [ax["t"]]),
        "v": mutual_information(j, [ax["v"]], [ax["x"]], [ax["t"]]),
        "w": mutual_information(j, [ax["u"], ax["y"]], [ax["w"]], [ax["t"]]),
    }


def _count_from_exponent(bits: float) -> int:
    if bits <= 0.0:
        return 1
    i = int(math.floor(bits))
    m = 2.0 ** (bits - i)
    return int(math.ceil(m * (1 << i)))


def _draw_conditional(rng, cond: np.ndarray, given_seq: np.ndarray, count: int):
    """(count, n) draws with column j distributed cond[given_seq[j]]."""
    cum = np.cumsum(cond, axis=1)
    rows = cum[given_seq]  # (n, n_out)
    n = len(given_seq)
    out = np.empty((count, n), dtype=np.int16)
    chunk = max(1, int(24_000_000 // max(n, 1)))
    binary = cond.shape[1] == 2
    thr = rows[:, 0] if binary else None
    for start in range(0, count, chunk):
        r = rng.random((min(chunk, count - start), n))
        if binary:
            out[start : start + r.shape[0]] = r > thr[None, :]
        else:
            out[start : start + r.shape[0]] = (
                r[:, :, None] > rows[None, :, :]
            ).sum(axis=2)
    return out


class BinningCodebook:
    """Random codebooks and bin maps, reproducible from the seed."""

    def __init__(
        self,
        sys: AuxiliarySystem,
        rates: RateTuple,
        n: int,
        seed: int = 0,
        mem_cap: int = 2 * 2**30,
    ):
        self.sys = sys
        self.rates = rates
        self.n = n
        self.seed = seed
        ax = sys.axis_names()
        j = sys.joint

        self.p_t = j.marginal_array([ax["t"]])
        p_tu = j.marginal_array([ax["t"], ax["u"]])
        p_tv = j.marginal_array([ax["t"], ax["v"]])
        p_tw = j.marginal_array([ax["t"], ax["w"]])
        with np.errstate(invalid="ignore", divide="ignore"):
            den = np.where(self.p_t > 0, self.p_t, 1.0)[:, None]
            self.p_u_t = np.where(self.p_t[:, None] > 0, p_tu / den, 1.0 / p_tu.shape[1])
            self.p_v_t = np.where(self.p_t[:, None] > 0, p_tv / den, 1.0 / p_tv.shape[1])
            self.p_w_t = np.where(self.p_t[:, None] > 0, p_tw / den, 1.0 / p_tw.shape[1])

        exps = codebook_exponents(sys)
        self.sizes = {k: _count_from_exponent(n * v) for k, v in exps.items()}
        kt, ku, kv, kw = (self.sizes[k] for k in "tuvw")
        entries = kt * (ku + kv + kw)
        # 2 bytes per stored symbol plus ~90 bytes per bin-map entry
        need = 2 * n * (kt + entries) + 90 * entries
        if need > mem_cap:
            worst = max(exps, key=lambda k: self.sizes[k])
            raise CodebookCapError(
                f"codebook storage {need / 2**30:.2f} GiB exceeds the cap; "
                f"largest exponent is I-term {worst!r} = {exps[worst]:.4f} bits "
                f"({self.sizes[worst]} codewords at n={n})"
            )

        rng = np.random.default_rng([seed, 11])
        self.t_book = rng.choice(len(self.p_t), size=(kt, n), p=self.p_t).astype(
            np.int16
        )
        self.u_books = [
            _draw_conditional(rng, self.p_u_t, self.t_book[i], ku) for i in range(kt)
        ]
        self.v_books = [
            _draw_conditional(rng, self.p_v_t, self.t_book[i], kv) for i in range(kt)
        ]
        self.w_books = [
            _draw_conditional(rng, self.p_w_t, self.t_book[i], kw) for i in range(kt)
        ]
        # binary w-books keep a float32 copy so typicality scans are one BLAS call
        self.w_float = [
            wb.astype(np.float32) if self.p_w_t.shape[1] == 2 else None
            for wb in self.w_books
        ]

        pyrng = random.Random((seed << 20) ^ 0x5EED)
        self.n_bins = {
            "r0": _count_from_exponent(n * max(rates.r0, 0.0)),
            "rx": _count_from_exponent(n * max(rates.rx, 0.0)),
            "ry": _count_from_exponent(n * max(rates.ry, 0.0)),
        }
        self.bins0 = {
            (i, jj): pyrng.randrange(self.n_bins["r0"])
            for i in range(kt)
            for jj in range(ku)
        }
        self.binsX = {
            (i, k): pyrng.randrange(self.n_bins["rx"])
            for i in range(kt)
            for k in range(kv)
        }
        self.binsY = {
            (i, l): pyrng.randrange(self.n_bins["ry"])
            for i in range(kt)
            for l in range(kw)
        }
        self.bins0_rev = _invert(self.bins0)
        self.binsX_rev = _invert(self.binsX)
        self.binsY_rev = _invert(self.binsY)


def _invert(mapping: dict) -> dict:
    """bin value -> {t-index: [codeword indices]}, grouped once up front."""
    out: dict = {}
    for (i, k), val in mapping.items():
        out.setdefault(val, {}).setdefault(i, []).append(k)
    return out


def _f_lookup(sys: AuxiliarySystem, f) -> np.ndarray:
    """Per-symbol decode table: (v,t,w) -> f index, -1 where undefined.

    Multi-valued lookups mean the system violates the set conditions and
    are rejected outright.
    """
    ax = sys.axis_names()
    j = sys.joint
    if sys.v_sets is None or sys.w_sets is None:
        raise RegionError("simulation needs v_sets and w_sets")
    v_ax = sys.v_ch.to_axis
    t_ax = sys.t_ch.to_axis
    w_ax = sys.w_ch.to_axis
    x_ax, y_ax = sys.base.axes
    pos_xtuy = {
        sym
        for sym, _p in j.restricted_names(
            (ax["x"], ax["t"], ax["u"], ax["y"])
        ).support()
    }
    table = -np.ones((len(v_ax), len(t_ax), len(w_ax)), dtype=np.int32)
    for vi, v_sym in enumerate(v_ax.symbols):
        vset = frozenset(sys.v_sets.get(v_sym, ()))
        for ti, t_sym in enumerate(t_ax.symbols):
            members_x = [c[1] for c in vset if c[0] == t_sym]
            for wi, w_sym in enumerate(w_ax.symbols):
                wset = frozenset(sys.w_sets.get(w_sym, ()))
                vals = set()
                for c in wset:
                    if c[0] != t_sym:
                        continue
                    _t, u_sym, y_sym = c
                    for x_sym in members_x:
                        if (x_sym, t_sym, u_sym, y_sym) in pos_xtuy:
                            vals.add(f.value_index(x_ax.index(x_sym), y_ax.index(y_sym)))
                if len(vals) > 1:
                    raise RegionError(
                        f"decode lookup is multi-valued at (v={v_sym!r}, "
                        f"t={t_sym!r}, w={w_sym!r}); system violates the set conditions"
                    )
                if vals:
                    table[vi, ti, wi] = vals.pop()
    return table


def simulate_two_phase(
    f,
    sys: AuxiliarySystem,
    rates: RateTuple,
    n: int,
    trials: int,
    eps: tuple = (0.05, 0.10, 0.15),
    seed: int = 0,
    mem_cap: int = 2 * 2**30,
) -> SchemeCounts:
    """Empirical error of the two-phase scheme at blocklength ``n``.

    ``eps`` is the nested (eps'', eps', eps) triple: encoding, first-phase
    decoding / second-phase encoding, receiver decoding.
    """
    e2, e1, e0 = eps
    if not (0 < e2 < e1 < e0):
        raise RegionError("eps triple must be strictly increasing and positive")
    book = BinningCodebook(sys, rates, n, seed=seed, mem_cap=mem_cap)
    ax = sys.axis_names()
    j = sys.joint

    p_xy = sys.base.marginal_array([ax["x"], ax["y"]])
    p_tux = j.marginal_array([ax["u"], ax["t"], ax["x"]])  # code axis (u) first
    p_tuy = j.marginal_array([ax["u"], ax["t"], ax["y"]])
    p_vxt = j.marginal_array([ax["v"], ax["x"], ax["t"]])
    p_wuy = j.marginal_array([ax["w"], ax["u"], ax["y"]])
    p_wvt = j.marginal_array([ax["w"], ax["v"], ax["t"]])
    n_x, n_y = p_xy.shape
    n_v = len(sys.v_ch.to_axis)
    n_t = len(sys.t_ch.to_axis)
    n_u = len(sys.u_ch.to_axis)
    n_w = len(sys.w_ch.to_axis)

    flookup = _f_lookup(sys, f)
    f_xy = f.table  # (n_x, n_y) codomain indices

    counts = {
        "phase1_cover": 0,
        "phase1_bin": 0,
        "phase2_cover": 0,
        "phase2_bin": 0,
        "fundef": 0,
    }
    errors = 0
    for trial in range(trials):
        rng = np.random.default_rng([seed, 13, trial])
        flat = rng.choice(n_x * n_y, size=n, p=p_xy.reshape(-1))
        x_seq = (flat // n_y).astype(np.int16)
        y_seq = (flat % n_y).astype(np.int16)
        # a failed stage falls back to a uniform pick so the system always
        # transmits; the trial counts as an error only if the final output
        # differs from f, attributed to the first broken stage
        pending = None

        # phase 1, transmitter-X: (t, u(t)) jointly typical with x at eps''
        cands = []
        for i in range(book.sizes["t"]):
            mask = batch_typical(
                book.u_books[i], [book.t_book[i], x_seq], p_tux, n_u, [n_t, n_x], e2
            )
            cands.extend((i, int(jj)) for jj in np.nonzero(mask)[0])
        if cands:
            i_sel, j_sel = cands[int(rng.integers(len(cands)))]
        else:
            pending = pending or "phase1_cover"
            i_sel = int(rng.integers(book.sizes["t"]))
            j_sel = int(rng.integers(book.sizes["u"]))
        q0 = book.bins0[(i_sel, j_sel)]

        # phase 1, transmitter-Y: unique bin-consistent (t,u) typical with y
        dec = []
        by_i = book.bins0_rev.get(q0, {})
        for i, js in by_i.items():
            rows = book.u_books[i][js]
            mask = batch_typical(
                rows, [book.t_book[i], y_seq], p_tuy, n_u, [n_t, n_y], e1
            )
            dec.extend((i, js[pos]) for pos in np.nonzero(mask)[0])
        if len(dec) == 1:
            i_hat, j_hat = dec[0]
        else:
            pending = pending or "phase1_bin"
            if dec:
                i_hat, j_hat = dec[int(rng.integers(len(dec)))]
            else:
                i_hat = int(rng.integers(book.sizes["t"]))
                j_hat = int(rng.integers(book.sizes["u"]))

        # phase 2, transmitter-X: v typical with (x, t)
        mask = batch_typical(
            book.v_books[i_sel], [x_seq, book.t_book[i_sel]], p_vxt, n_v, [n_x, n_t], e1
        )
        ks = np.nonzero(mask)[0]
        if ks.size:
            k_sel = int(ks[int(rng.integers(ks.size))])
        else:
            pending = pending or "phase2_cover"
            k_sel = int(rng.integers(book.sizes["v"]))
        q_x = book.binsX[(i_sel, k_sel)]

        # phase 2, transmitter-Y: w typical with (u(t), y)
        u_hat = book.u_books[i_hat][j_hat]
        mask = batch_typical(
            book.w_books[i_hat], [u_hat, y_seq], p_wuy, n_w, [n_u, n_y], e1,
            float_book=book.w_float[i_hat],
        )
        ls = np.nonzero(mask)[0]
        if ls.size:
            l_sel = int(ls[int(rng.integers(ls.size))])
        else:
            pending = pending or "phase2_cover"
            l_sel = int(rng.integers(book.sizes["w"]))
        q_y = book.binsY[(i_hat, l_sel)]

        # receiver: unique bin-consistent decodable typical (v, t, w)
        from_x = book.binsX_rev.get(q_x, {})
        from_y = book.binsY_rev.get(q_y, {})
        decodable = []
        any_typical = False
        for i in sorted(set(from_x) & set(from_y)):
            t_i = book.t_book[i]
            for k in from_x[i]:
                v_k = book.v_books[i][k]
                rows_y = from_y[i]
                full = len(rows_y) == len(book.w_books[i])
                mask = batch_typical(
                    book.w_books[i] if full else book.w_books[i][rows_y],
                    [v_k, t_i],
                    p_wvt,
                    n_w,
                    [n_v, n_t],
                    e0,
                    float_book=book.w_float[i] if full else None,
                )
                for pos in np.nonzero(mask)[0]:
                    any_typical = True
                    l = rows_y[pos]
                    w_l = book.w_books[i][l]
                    vals = flookup[v_k, t_i, w_l]
                    if np.all(vals >= 0):
                        decodable.append((i, k, l, vals))
                        if len(decodable) > 1:
                            break
                if len(decodable) > 1:
                    break
            if len(decodable) > 1:
                break
        if len(decodable) == 1 and np.array_equal(
            decodable[0][3], f_xy[x_seq, y_seq]
        ):
            continue  # success
        errors += 1
        if pending is not None:
            counts[pending] += 1
        elif any_typical and not decodable:
            counts["fundef"] += 1
        else:
            counts["phase2_bin"] += 1

    return SchemeCounts(
        n,
        trials,
        errors,
        counts["phase1_cover"],
        counts["phase1_bin"],
        counts["phase2_cover"],
        counts["phase2_bin"],
        counts["fundef"],
    )
