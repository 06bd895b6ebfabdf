"""Command-line front end: ``python -m ehlab <command> [flags]``.

Every command writes ``#``-prefixed header lines echoing the version and the
resolved parameters, then a table (TSV by default, or one JSON document).
``--threads`` only changes the worker count and is left out of the echo so
outputs compare byte-for-byte across thread counts.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import __version__
from .characters import DirichletCharacter, nonresidue_scan
from .coset_escape import verify_proposition
from .eh_reduction import split_X
from .distribution import build_experiment, dispersion_sweep, divisor_correlation, eh_sweep, typeii_statistic
from .errors import ArtifactError, OutOfDomain
from .wirsing import (
    KAPPA_HB,
    POS_END,
    QUARTER,
    delay_equation_residual,
    heathbrown_reference,
    kernel_mass,
    log_density_profiles,
    wirsing_residual,
)

COMMANDS = ("nonresidue-scan", "eh-sweep", "typeii", "wirsing", "coset", "divisor-corr", "char-profile", "eh-split")

DEFAULTS: dict[str, dict[str, Any]] = {
    "nonresidue-scan": {"limit": 10**4},
    "eh-sweep": {"x": 10**5, "theta": "0.1,0.2,0.3,0.4,0.5"},
    "typeii": {"q": 101, "x": 10**4, "A": -0.9, "eps": 0.05, "delta": 0.5, "varpi": 0.02, "a": 1},
    "wirsing": {"h": 1e-4, "T": 2.0},
    "coset": {"d": 2, "m": 2, "order_limit": 20, "samples": 1000, "seed": 0},
    "divisor-corr": {"k": 2, "x": 1000, "shift": 1},
    "char-profile": {"q": 101, "T": 1.5, "grid": 30, "k": 2},
    "eh-split": {"q": 23, "x": 2000, "nu": 0.3},
}


@dataclass
class RunConfig:
    command: str
    params: dict[str, Any] = field(default_factory=dict)
    format: str = "tsv"
    out: str | None = None
    threads: int = 1

    def header(self) -> list[str]:
        lines = [f"ehlab {__version__}", f"command = {self.command}", f"format = {self.format}"]
        lines += [f"{k} = {self.params[k]!r}" for k in sorted(self.params)]
        return lines


@dataclass
class Table:
    columns: list[str]
    rows: list[tuple]
    summary: dict[str, Any] = field(default_factory=dict)


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, complex):
        return f"{float(v.real)!r}{float(v.imag):+}j"
    if isinstance(v, float):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, complex):
        return [float(v.real), float(v.imag)]
    if isinstance(v, float):
        return float(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "numerator") and not isinstance(v, (int, float)):
        return str(v)
    return v


def render(cfg: RunConfig, table: Table) -> str:
    if cfg.format == "json":
        doc = {
            "version": __version__,
            "config": {"command": cfg.command, **{k: _jsonable(v) for k, v in cfg.params.items()}},
            "columns": table.columns,
            "rows": [[_jsonable(c) for c in r] for r in table.rows],
            "summary": {k: _jsonable(v) for k, v in table.summary.items()},
        }
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"
    out = [f"# {line}" for line in cfg.header()]
    out.append("\t".join(table.columns))
    out += ["\t".join(_cell(c) for c in r) for r in table.rows]
    out += [f"# {k} = {_cell(v)}" for k, v in table.summary.items()]
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# commands


def cmd_nonresidue_scan(p: dict, threads: int) -> Table:
    rows = []
    best = (0.0, 0)
    for prime, n in nonresidue_scan(p["limit"], threads=threads):
        e = math.log(n) / math.log(prime)
        rows.append((prime, n, e))
        best = max(best, (e, -prime))
    summary = {
        "primes": len(rows),
        "max_exponent": best[0],
        "argmax_p": -best[1],
        "ref_exponent_vinogradov": 1 / (2 * math.sqrt(math.e)),
        "ref_exponent_burgess": 1 / (4 * math.sqrt(math.e)),
    }
    return Table(["p", "n", "log_n_over_log_p"], rows, summary)


def _parse_grid(text: str) -> list[float]:
    return [float(t) for t in str(text).split(",") if t.strip()]


def cmd_eh_sweep(p: dict, threads: int) -> Table:
    rep = eh_sweep(p["x"], _parse_grid(p["theta"]), threads=threads)
    rows = [(th, e, e / rep.x) for th, e in zip(rep.thetas, rep.E)]
    return Table(["theta", "E", "E_over_x"], rows, {"monotone": rep.monotone})


def cmd_typeii(p: dict, threads: int) -> Table:
    chi = DirichletCharacter.quadratic(p["q"])
    lvl = 0.5 - 2 * p["varpi"]
    N = round(p["x"] ** lvl) if p.get("x") else None
    exp = build_experiment(p["q"], chi, p["A"], p["eps"], p["delta"], p["varpi"], N=N)
    rows_x, best = dispersion_sweep(exp)
    rows = [(r.j, r.X, float(r.gamma), float(r.reference), r.excess, r.disjoint) for r in rows_x]
    summary = {
        "x_effective": exp.x,
        "N": exp.N,
        "M": exp.M,
        "D_size": len(exp.D),
        "D_size_expected": exp.expected_D_size,
        "P_primes": len(exp.P_primes),
        "typeii_statistic": typeii_statistic(exp, p["a"]),
        "mass_identity": rows_x[0].identity_ok,
        "argmax_j": best.j,
    }
    return Table(["j", "X", "gamma", "reference", "excess", "disjoint"], rows, summary)


def cmd_wirsing(p: dict, threads: int) -> Table:
    a, b = heathbrown_reference(p["T"], p["h"])
    rows = [(float(t), float(av), float(bv)) for t, av, bv in zip(a.nodes, a.values, b.values)]

    def or_nan(fn):
        try:
            return fn()
        except OutOfDomain:
            return float("nan")

    upto = min(POS_END, a.T)
    summary = {
        "b_at_1": or_nan(lambda: b(1.0)),
        "kernel_mass": kernel_mass(p["h"]),
        "wirsing_residual_over_h": wirsing_residual(a, b, upto=upto, exclude=(KAPPA_HB, QUARTER)) / p["h"],
        "delay_residual_0.4_over_h": or_nan(lambda: delay_equation_residual(b, 0.4) / p["h"]),
    }
    return Table(["t", "a", "b"], rows, summary)


def cmd_coset(p: dict, threads: int) -> Table:
    rep = verify_proposition(p["d"], p["m"], p["order_limit"], seed=p["seed"], samples=p["samples"], threads=threads)
    rows = [(r.group, r.size_A, r.m, r.outcome, r.k, r.count) for r in rep.rows]
    summary = {"instances": rep.instances, "violations": rep.violations, "max_k": rep.max_k}
    return Table(["group", "size_A", "m", "outcome", "k", "count"], rows, summary)


def cmd_divisor_corr(p: dict, threads: int) -> Table:
    v = divisor_correlation(p["k"], p["x"], p["shift"])
    return Table(["k", "x", "h", "value"], [(p["k"], p["x"], p["shift"], v)])


def cmd_char_profile(p: dict, threads: int) -> Table:
    q, k = p["q"], p["k"]
    chi = DirichletCharacter.quadratic(q) if k == 2 else DirichletCharacter.prime_general(q, k)
    prof = log_density_profiles(q, chi, p["T"], p["grid"])
    rows = []
    for t, A, B in zip(prof.t, prof.A, prof.B):
        A, B = complex(A), complex(B)
        rows.append((float(t), A.real, A.imag, B.real, B.imag))
    summary = {"lipschitz_excess_A": prof.lipschitz_excess("A"), "slack_3_over_log_q": 3 / math.log(q)}
    return Table(["t", "A_re", "A_im", "B_re", "B_im"], rows, summary)


def cmd_eh_split(p: dict, threads: int) -> Table:
    rep = split_X(DirichletCharacter.quadratic(p["q"]), p["q"], p["x"], p["nu"])
    rows = [(k, getattr(rep, k)) for k in ("X", "X1", "X2", "X3", "max_pointwise_residual")]
    return Table(["quantity", "value"], rows, {"y": rep.y, "additivity_error": rep.additivity_error})


HANDLERS: dict[str, Callable[[dict, int], Table]] = {
    "nonresidue-scan": cmd_nonresidue_scan,
    "eh-sweep": cmd_eh_sweep,
    "typeii": cmd_typeii,
    "wirsing": cmd_wirsing,
    "coset": cmd_coset,
    "divisor-corr": cmd_divisor_corr,
    "char-profile": cmd_char_profile,
    "eh-split": cmd_eh_split,
}


# ---------------------------------------------------------------------------
# argument parsing


def _int(text: str) -> int:
    """Integers, also written as ``1e5`` or ``10**5``."""
    s = text.replace("_", "")
    if "**" in s:
        b, e = s.split("**")
        return int(b) ** int(e)
    try:
        return int(s)
    except ValueError:
        v = float(s)
        if v != int(v):
            raise argparse.ArgumentTypeError(f"not an integer: {text}")
        return int(v)


FLAGS: dict[str, tuple[Callable, str]] = {
    "limit": (_int, "scan / sieve limit"),
    "q": (_int, "conductor"),
    "x": (_int, "length of the range"),
    "theta": (str, "comma-separated level grid"),
    "A": (float, "log-power parameter of the Type II window"),
    "eps": (float, "exponent of the lower prime cutoff q^eps"),
    "delta": (float, "exponent of the upper prime cutoff x^delta"),
    "varpi": (float, "level offset"),
    "nu": (float, "split point exponent"),
    "k": (_int, "arity / order parameter"),
    "h": (float, "grid step"),
    "T": (float, "domain end"),
    "seed": (_int, "64-bit seed for sampling"),
    "d": (_int, "max group dimension"),
    "m": (_int, "max number of cosets"),
    "order_limit": (_int, "max group order"),
    "samples": (_int, "sampled instances above the exhaustive range"),
    "shift": (_int, "shift h in the divisor correlation"),
    "grid": (_int, "number of grid intervals"),
    "a": (_int, "residue class"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("tsv", "json"), default="tsv")
    common.add_argument("--out", default=None, help="write here instead of stdout")
    common.add_argument("--threads", type=int, default=1, help="worker cap; output does not depend on it")
    parser = argparse.ArgumentParser(prog="ehlab", description="Experiments on nonresidues, characters and levels of distribution.")
    parser.add_argument("--version", action="version", version=f"ehlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        for key, default in DEFAULTS[name].items():
            conv, help_text = FLAGS[key]
            sp.add_argument(f"--{key.replace('_', '-')}", dest=key, type=conv, default=default, help=help_text)
    return parser


def parse_config(argv: list[str] | None = None) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    command = ns.pop("command")
    fmt, out, threads = ns.pop("format"), ns.pop("out"), ns.pop("threads")
    if threads < 1:
        raise SystemExit(2)
    return RunConfig(command, ns, fmt, out, threads)


def run(cfg: RunConfig) -> str:
    return render(cfg, HANDLERS[cfg.command](cfg.params, cfg.threads))


def main(argv: list[str] | None = None) -> int:
    cfg = parse_config(argv)
    try:
        text = run(cfg)
    except ArtifactError as exc:
        print(f"ehlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0
