"""Command-line interface: problem files in, CSV and reports out.

Problem files are line oriented: ``[section]`` headers, whitespace-
separated tokens, ``#`` comments, decimals only.  Every parse error
reports its line and column.  Exit codes: 0 success, 2 validation error,
3 search budget exhausted (partial results are still written).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .binning import CSV_HEADER as SIM_CSV_HEADER
from .binning import simulate_two_phase
from .gentropy import OracleBudgetError, SolverConfig, conditional_graph_entropy
from .graphs import (
    GraphError,
    IndependentSetCapError,
    build_conditional_char_graph,
    support_set_transform,
)
from .prob import (
    Alphabet,
    Channel,
    FunctionSpec,
    JointPmf,
    ProbabilityError,
    RateTuple,
)
from .regions import (
    AuxiliarySystem,
    DistortionBudgetError,
    InfeasibleBudgetError,
    RdConstraint,
    RegionError,
    SearchConfig,
    evaluate_inner_bound,
    evaluate_rd_bounds,
    kaspi_berger51_search,
    region_cascade,
    region_full_cooperation,
    region_partially_invertible,
    region_two_round,
    validate_auxiliaries,
)
from .repro import (
    example1_sweep,
    example2_regions,
    sign_instance_claims,
)

PMF_TOL = 1e-6  # problem-file pmf normalization tolerance


class ProblemFormatError(ValueError):
    def __init__(self, msg: str, line: int, col: int = 1):
        super().__init__(f"line {line}, column {col}: {msg}")
        self.line = line
        self.col = col


@dataclass
class ProblemFile:
    """Parsed problem description; sections resolve against the alphabets."""

    alphabets: dict = field(default_factory=dict)
    pmf: JointPmf | None = None
    functions: dict = field(default_factory=dict)
    distortions: dict = field(default_factory=dict)
    budgets: dict = field(default_factory=dict)
    channels: dict = field(default_factory=dict)
    rates: dict = field(default_factory=dict)
    reconstructions: dict = field(default_factory=dict)


def _token_symbol(tok: str):
    try:
        return int(tok)
    except ValueError:
        return tok


def _tokens(line: str):
    return line.split("#", 1)[0].split()


def parse_problem(text: str) -> ProblemFile:
    """Parse the line-oriented problem format; errors carry line/column."""
    pf = ProblemFile()
    section = None
    header_line = 0
    body: list[tuple[int, list[str]]] = []
    seen: set = set()

    def close_section():
        if section is None:
            return
        _fill_section(pf, section, header_line, body)

    for ln, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ProblemFormatError("unterminated section header", ln)
            close_section()
            section = stripped[1:-1].strip()
            if not section:
                raise ProblemFormatError("empty section name", ln)
            if section in seen:
                raise ProblemFormatError(f"duplicate section [{section}]", ln)
            seen.add(section)
            header_line = ln
            body = []
        else:
            if section is None:
                raise ProblemFormatError("content before any [section]", ln)
            body.append((ln, _tokens(raw)))
    close_section()

    if pf.pmf is None:
        raise ProblemFormatError("missing [pmf ...] section", max(header_line, 1))
    return pf


def _fill_section(pf: ProblemFile, section: str, header_line: int, body):
    parts = section.split()
    kind = parts[0]
    if kind == "alphabets":
        for ln, toks in body:
            if len(toks) < 2 or not toks[0].endswith(":"):
                raise ProblemFormatError("expected 'name: symbol ...'", ln)
            name = toks[0][:-1]
            syms = tuple(_token_symbol(t) for t in toks[1:])
            if len(set(syms)) != len(syms):
                raise ProblemFormatError(f"repeated symbol in alphabet {name!r}", ln)
            pf.alphabets[name] = Alphabet(name, syms)
        return
    if kind == "pmf":
        if len(parts) != 3:
            raise ProblemFormatError("pmf header must be [pmf X Y]", header_line)
        ax = [_need_alphabet(pf, n, header_line) for n in parts[1:]]
        rows = _matrix(body, len(ax[0]), len(ax[1]))
        total = sum(sum(r) for r in rows)
        if abs(total - 1.0) > PMF_TOL:
            raise ProblemFormatError(
                f"pmf sums to {total:.8f}, not 1 within {PMF_TOL}", body[0][0]
            )
        arr = np.asarray(rows) / total
        pf.pmf = JointPmf(ax, arr)
        return
    if kind == "function":
        if len(parts) != 2:
            raise ProblemFormatError("function header must be [function NAME]", header_line)
        name = parts[1]
        codomain = _need_alphabet(pf, name, header_line)
        if pf.pmf is None:
            raise ProblemFormatError("[function] must come after [pmf]", header_line)
        x_ax, y_ax = pf.pmf.axes
        table = []
        for ln, toks in body:
            if len(toks) != len(y_ax):
                raise ProblemFormatError(
                    f"expected {len(y_ax)} entries, got {len(toks)}", ln
                )
            row = []
            for col, t in enumerate(toks, start=1):
                sym = _token_symbol(t)
                try:
                    row.append(codomain.index(sym))
                except ProbabilityError:
                    raise ProblemFormatError(
                        f"symbol {t!r} not in alphabet {name!r}", ln, col
                    ) from None
            table.append(row)
        if len(table) != len(x_ax):
            raise ProblemFormatError(
                f"expected {len(x_ax)} rows, got {len(table)}", header_line
            )
        pf.functions[name] = FunctionSpec((x_ax, y_ax), codomain, table)
        return
    if kind == "distortion":
        if len(parts) != 2:
            raise ProblemFormatError("header must be [distortion NAME]", header_line)
        fname = "f" + parts[1][-1] if parts[1].startswith("d") else parts[1]
        cod = _need_alphabet(pf, fname, header_line)
        rows = _matrix(body, len(cod), len(cod))
        pf.distortions[parts[1]] = np.asarray(rows)
        return
    if kind == "budgets":
        for ln, toks in body:
            if len(toks) != 2 or not toks[0].endswith(":"):
                raise ProblemFormatError("expected 'd1: value'", ln)
            pf.budgets[toks[0][:-1]] = _float(toks[1], ln, 2)
        return
    if kind == "channel":
        # [channel NAME | FROM ...]
        rest = " ".join(parts[1:])
        if "|" not in rest:
            raise ProblemFormatError("header must be [channel NAME | FROM ...]", header_line)
        name, frm = (s.strip() for s in rest.split("|", 1))
        to_ax = _need_alphabet(pf, name, header_line)
        from_axes = tuple(_need_alphabet(pf, n, header_line) for n in frm.split())
        n_rows = int(np.prod([len(a) for a in from_axes]))
        rows = _matrix(body, n_rows, len(to_ax))
        table = np.asarray(rows).reshape([len(a) for a in from_axes] + [len(to_ax)])
        try:
            pf.channels[name] = Channel(from_axes, to_ax, table)
        except ProbabilityError as e:
            raise ProblemFormatError(str(e), body[0][0] if body else header_line)
        return
    if kind == "rates":
        for ln, toks in body:
            if len(toks) != 2 or not toks[0].endswith(":"):
                raise ProblemFormatError("expected 'r0: value'", ln)
            pf.rates[toks[0][:-1]] = _float(toks[1], ln, 2)
        return
    if kind == "reconstruction":
        if len(parts) != 2:
            raise ProblemFormatError("header must be [reconstruction NAME]", header_line)
        table = {}
        for ln, toks in body:
            if len(toks) != 4:
                raise ProblemFormatError("expected 'v t w symbol'", ln)
            key = tuple(_token_symbol(t) for t in toks[:3])
            table[key] = _token_symbol(toks[3])
        pf.reconstructions[parts[1]] = table
        return
    raise ProblemFormatError(f"unknown section [{section}]", header_line)


def _need_alphabet(pf: ProblemFile, name: str, line: int) -> Alphabet:
    if name not in pf.alphabets:
        raise ProblemFormatError(f"unknown alphabet {name!r}", line)
    return pf.alphabets[name]


def _float(tok: str, line: int, col: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ProblemFormatError(f"expected a decimal, got {tok!r}", line, col) from None


def _matrix(body, n_rows: int, n_cols: int):
    rows = []
    for ln, toks in body:
        if len(toks) != n_cols:
            raise ProblemFormatError(
                f"expected {n_cols} entries, got {len(toks)}", ln, len(toks) + 1
            )
        rows.append([_float(t, ln, c + 1) for c, t in enumerate(toks)])
    if len(rows) != n_rows:
        raise ProblemFormatError(
            f"expected {n_rows} rows, got {len(rows)}", body[-1][0] if body else 1
        )
    return rows


def serialize_problem(pf: ProblemFile) -> str:
    """Inverse of parse_problem (round-trips to an identical structure)."""
    out = ["[alphabets]"]
    for name, ax in pf.alphabets.items():
        out.append(f"{name}: " + " ".join(str(s) for s in ax.symbols))
    x_ax, y_ax = pf.pmf.axes
    out.append(f"\n[pmf {x_ax.name} {y_ax.name}]")
    for row in pf.pmf.table:
        out.append(" ".join(f"{v:.12f}" for v in row))
    for name, f in pf.functions.items():
        out.append(f"\n[function {name}]")
        for row in f.table:
            out.append(" ".join(str(f.codomain.symbols[i]) for i in row))
    for name, d in pf.distortions.items():
        out.append(f"\n[distortion {name}]")
        for row in d:
            out.append(" ".join(f"{v:.12f}" for v in row))
    if pf.budgets:
        out.append("\n[budgets]")
        for k, v in pf.budgets.items():
            out.append(f"{k}: {v:.12f}")
    for name, ch in pf.channels.items():
        frm = " ".join(a.name for a in ch.from_axes)
        out.append(f"\n[channel {name} | {frm}]")
        for row in ch.table.reshape(-1, len(ch.to_axis)):
            out.append(" ".join(f"{v:.12f}" for v in row))
    if pf.rates:
        out.append("\n[rates]")
        for k, v in pf.rates.items():
            out.append(f"{k}: {v:.12f}")
    for name, table in pf.reconstructions.items():
        out.append(f"\n[reconstruction {name}]")
        for key, sym in table.items():
            out.append(" ".join(str(s) for s in key) + f" {sym}")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------


def _config_hash(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:10]


def _write_atomic(path: str, text: str):
    d = os.path.dirname(path) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-coopcomp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _csv(path: str, header: str, rows, seed, config: dict, label: str | None = None):
    lines = [f"# coopcomp {__version__} seed={seed} config={_config_hash(config)}"]
    if label:
        lines.append(f"# {label}")
    lines.append(header)
    lines.extend(rows)
    _write_atomic(path, "\n".join(lines) + "\n")


def _rate_rows(rates: RateTuple) -> list[str]:
    return [
        f"{rates.r0:.6f},{rates.rx:.6f},{rates.ry:.6f},{rates.sum:.6f}"
    ]


# --------------------------------------------------------------------------
# auxiliary-system assembly from a problem file
# --------------------------------------------------------------------------


def _system_from_problem(pf: ProblemFile) -> AuxiliarySystem:
    for name in ("u", "t", "v", "w"):
        if name not in pf.channels:
            raise RegionError(f"problem file must declare [channel {name} | ...]")
    sys_ = AuxiliarySystem(
        pf.pmf, pf.channels["u"], pf.channels["t"], pf.channels["v"], pf.channels["w"]
    )
    ax = sys_.axis_names()
    # canonicalize V and W as their conditional support sets
    v_tr = support_set_transform(sys_.joint, ax["v"], (ax["t"], ax["x"]))
    w_tr = support_set_transform(sys_.joint, ax["w"], (ax["t"], ax["u"], ax["y"]))
    v_sets = {v: s for v, _j, s in v_tr.index_map}
    w_sets = {w: s for w, _j, s in w_tr.index_map}
    from dataclasses import replace

    return replace(sys_, v_sets=v_sets, w_sets=w_sets)


def _rd_from_problem(pf: ProblemFile) -> RdConstraint:
    for need in ("f1", "f2"):
        if need not in pf.functions:
            raise RegionError(f"rd mode needs [function {need}]")
    for need in ("d1", "d2"):
        if need not in pf.distortions:
            raise RegionError(f"rd mode needs [distortion {need}]")
    return RdConstraint(
        pf.functions["f1"],
        pf.functions["f2"],
        pf.distortions["d1"],
        pf.distortions["d2"],
        pf.budgets.get("d1", 0.0),
        pf.budgets.get("d2", 0.0),
        pf.reconstructions.get("g1", {}),
        pf.reconstructions.get("g2", {}),
    )


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def _load(path: str) -> ProblemFile:
    with open(path) as fh:
        return parse_problem(fh.read())


def _cmd_graph(args) -> int:
    pf = _load(args.problem)
    f = pf.functions[args.function]
    graph = build_conditional_char_graph(
        pf.pmf if not args.with_channels else _system_from_problem(pf).joint,
        f,
        tuple(args.l.split(",")),
        tuple(args.k.split(",")),
    )
    text = "\n".join(graph.to_adjacency_lines()) + "\n"
    if args.out:
        _write_atomic(os.path.join(args.out, "graph.txt"), text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_gentropy(args) -> int:
    pf = _load(args.problem)
    f = pf.functions[args.function]
    cfg = SolverConfig(seed=args.seed, tol=args.tol)
    res = conditional_graph_entropy(
        pf.pmf, f, tuple(args.l.split(",")), tuple(args.k.split(",")), cfg
    )
    print(f"conditional graph entropy: {res.value:.6f} bits (achievable, certified stationary)")
    if args.out:
        rows = [
            ",".join(f"{v:.6f}" for v in res.witness_channel.table.reshape(-1, len(res.sets)).T[si])
            for si in range(len(res.sets))
        ]
        _csv(
            os.path.join(args.out, "gentropy_witness.csv"),
            "set_index,channel_row",
            [f"{i},{r}" for i, r in enumerate(rows)],
            args.seed,
            vars(args),
        )
    return 0


def _cmd_region(args) -> int:
    pf = _load(args.problem)
    cfg = SearchConfig(
        seed=args.seed,
        tol=args.tol,
        grid=args.grid,
        jobs=args.jobs,
        exhaustive_cap=args.exhaustive_cap,
    )
    out = args.out or "."
    config = {k: v for k, v in vars(args).items() if k != "func"}
    mode = {"theorem1": "inner"}.get(args.mode, args.mode)

    if mode == "inner":
        f = pf.functions[args.function]
        sys_ = _system_from_problem(pf)
        rates = evaluate_inner_bound(sys_, f, tol=args.tol)
        _csv(
            os.path.join(out, "region_inner.csv"),
            "r0_bits,rx_bits,ry_bits,sum_bits",
            _rate_rows(rates),
            args.seed,
            config,
            label="achievable (inner bound)",
        )
        return 0
    if mode == "rd":
        rd = _rd_from_problem(pf)
        if all(n in pf.channels for n in ("u", "t", "v", "w")):
            sys_ = AuxiliarySystem(
                pf.pmf,
                pf.channels["u"],
                pf.channels["t"],
                pf.channels["v"],
                pf.channels["w"],
            )
            rates, achieved = evaluate_rd_bounds(sys_, rd, tol=args.tol)
            _csv(
                os.path.join(out, "region_rd.csv"),
                "r0_bits,rx_bits,ry_bits,sum_bits,d1,d2",
                [f"{_rate_rows(rates)[0]},{achieved[0]:.6f},{achieved[1]:.6f}"],
                args.seed,
                config,
                label="achievable (inner bound)",
            )
            return 0
        res = kaspi_berger51_search(pf.pmf, rd, cfg)
        if not res.feasible and not res.budget_exhausted:
            print("no zero-distortion system exists", file=sys.stderr)
            return 2
        _csv(
            os.path.join(out, "region_rd.csv"),
            "min_sum_bits",
            [f"{res.value:.6f}"],
            args.seed,
            config,
            label="achievable (inner bound)"
            + ("; search budget exhausted, best-so-far" if res.budget_exhausted else ""),
        )
        return 3 if res.budget_exhausted else 0

    f = pf.functions[args.function]
    if mode == "partinv":
        curve = region_partially_invertible(pf.pmf, f, cfg)
        label = "rate region (tight)"
    elif mode == "fullcoop":
        curve = region_full_cooperation(pf.pmf, f, cfg)
        label = "rate region (tight)"
    elif mode == "tworound":
        curve = region_two_round(pf.pmf, f, cfg)
        label = "rate region (tight)"
    elif mode in ("oneround", "cascade"):
        rates, one_round = region_cascade(pf.pmf, f, cfg)
        header = "r0_bits,rx_bits,ry_bits,sum_bits"
        _csv(
            os.path.join(out, f"region_{mode}.csv"),
            header,
            _rate_rows(rates),
            args.seed,
            config,
            label="rate region (tight)",
        )
        return 0
    else:
        print(f"unknown mode {args.mode!r}", file=sys.stderr)
        return 2
    _csv(
        os.path.join(out, f"region_{mode}.csv"),
        ",".join(curve.header),
        curve.csv_rows(),
        args.seed,
        config,
        label=label,
    )
    return 0


def _cmd_simulate(args) -> int:
    pf = _load(args.problem)
    f = pf.functions[args.function]
    sys_ = _system_from_problem(pf)
    report = validate_auxiliaries(sys_, f, tol=args.tol)
    if not report:
        print(f"invalid auxiliary system: {report.first_failure}", file=sys.stderr)
        return 2
    rates = RateTuple(
        pf.rates.get("r0", 0.0),
        pf.rates.get("rx", 0.0),
        pf.rates.get("ry", 0.0),
        pf.rates.get("rx", 0.0) + pf.rates.get("ry", 0.0),
    )
    eps = tuple(float(t) for t in args.eps.split(","))
    rows = []
    for n in args.n:
        counts = simulate_two_phase(
            f, sys_, rates, n, args.trials, eps=eps, seed=args.seed
        )
        rows.append(counts.csv_row())
    out = args.out or "."
    _csv(
        os.path.join(out, "simulate.csv"),
        SIM_CSV_HEADER,
        rows,
        args.seed,
        {k: v for k, v in vars(args).items() if k != "func"},
        label="achievable (inner bound)",
    )
    return 0


def _cmd_repro(args) -> int:
    out = args.out or "."
    cfg = SearchConfig(
        seed=args.seed, jobs=args.jobs, exhaustive_cap=args.exhaustive_cap
    )
    config = {k: v for k, v in vars(args).items() if k != "func"}
    if args.target == "example1":
        pairs = [(args.a, args.b)] if args.a else [(3, 10), (4, 10)]
        for a, b in pairs:
            curve = example1_sweep(a, b, cfg)
            _csv(
                os.path.join(out, f"example1_a{a}_b{b}.csv"),
                ",".join(curve.header),
                curve.csv_rows(),
                args.seed,
                config,
                label="rate region (tight)",
            )
        return 0
    if args.target == "example2":
        rep = example2_regions(cfg)
        _csv(
            os.path.join(out, "example2_full_cooperation.csv"),
            ",".join(rep.full_coop.header),
            rep.full_coop.csv_rows(),
            args.seed,
            config,
            label=f"rate region (tight); r0 = {rep.h_x_given_y:.6f}",
        )
        _csv(
            os.path.join(out, "example2_no_cooperation.csv"),
            ",".join(rep.no_coop.header),
            rep.no_coop.csv_rows(),
            args.seed,
            config,
            label="rate region (tight); r0 = 0",
        )
        gaps = rep.dominance_gaps()
        _csv(
            os.path.join(out, "example2_summary.csv"),
            "h_x_given_y,min_gap,max_gap",
            [f"{rep.h_x_given_y:.6f},{min(gaps):.6f},{max(gaps):.6f}"],
            args.seed,
            config,
        )
        return 0
    if args.target == "appendix":
        rep = sign_instance_claims(cfg, n_t_max=args.max_t, n_w_max=args.max_w)
        rows = [f"{name},{value:.6f}" for name, value in rep.rows()]
        _csv(
            os.path.join(out, "appendix_claims.csv"),
            "quantity,bits",
            rows,
            args.seed,
            config,
            label="achievable (inner bound)",
        )
        for name, value in rep.rows():
            print(f"{name} = {value:.6f}")
        return 3 if rep.search.budget_exhausted else 0
    print(f"unknown target {args.target!r}", file=sys.stderr)
    return 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="coopcomp",
        description="Rate regions for computation and rate distortion "
        "with a cooperating transmitter.",
    )
    p.add_argument("--version", action="version", version=f"coopcomp {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--tol", type=float, default=1e-9)
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--exhaustive-cap", type=int, default=10**7)

    g = sub.add_parser("graph", help="emit a conditional characteristic graph")
    g.add_argument("problem")
    g.add_argument("--l", default="x", help="comma-separated L axes")
    g.add_argument("--k", default="y", help="comma-separated K axes")
    g.add_argument("--function", default="f")
    g.add_argument("--with-channels", action="store_true")
    common(g)
    g.set_defaults(func=_cmd_graph)

    ge = sub.add_parser("gentropy", help="conditional graph entropy")
    ge.add_argument("problem")
    ge.add_argument("--l", default="x")
    ge.add_argument("--k", default="y")
    ge.add_argument("--function", default="f")
    common(ge)
    ge.set_defaults(func=_cmd_gentropy)

    r = sub.add_parser("region", help="evaluate or sweep a rate region")
    r.add_argument("problem")
    r.add_argument(
        "--mode",
        required=True,
        choices=[
            "theorem1",
            "inner",
            "partinv",
            "fullcoop",
            "oneround",
            "tworound",
            "cascade",
            "rd",
        ],
    )
    r.add_argument("--function", default="f")
    r.add_argument("--grid", type=int, default=33)
    common(r)
    r.set_defaults(func=_cmd_region)

    s = sub.add_parser("simulate", help="Monte Carlo of the binning scheme")
    s.add_argument("problem")
    s.add_argument("--function", default="f")
    s.add_argument("--n", type=int, action="append", required=True)
    s.add_argument("--trials", type=int, default=500)
    s.add_argument("--eps", default="0.05,0.10,0.15")
    common(s)
    s.set_defaults(func=_cmd_simulate)

    rp = sub.add_parser("repro", help="reproduce a bundled worked example")
    rp.add_argument("--target", required=True, choices=["example1", "example2", "appendix"])
    rp.add_argument("--a", type=int, default=None)
    rp.add_argument("--b", type=int, default=10)
    rp.add_argument("--max-t", type=int, default=7)
    rp.add_argument("--max-w", type=int, default=2)
    common(rp)
    rp.set_defaults(func=_cmd_repro)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except (
        ProblemFormatError,
        ProbabilityError,
        GraphError,
        RegionError,
        DistortionBudgetError,
        InfeasibleBudgetError,
        FileNotFoundError,
    ) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (IndependentSetCapError, OracleBudgetError) as e:
        print(f"search budget exhausted: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
