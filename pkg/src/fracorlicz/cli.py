"""Command-line experiment runner.

Usage::

    fracorlicz certify-family power:p=8
    fracorlicz solve interval:-1,1 family=power:p=8 n=201 s=0.5 f=const:1 --out run/
    fracorlicz limit-experiment interval:-1,1 s=0.5 f=const:1 p=4,8,16,32,64 --out run/
    fracorlicz gamma-check interval:-1,1 s=0.5 p=8,16,32,64
    fracorlicz region-check interval:-1,1 s=0.5 f=const:1 p=16,32,64,128

Settings are ``key=value`` tokens, optionally read from a flat ``--config``
file (one ``key=value`` per line, ``#`` comments); tokens on the command line
win. Exit status: 0 if every check passes, 1 if a check fails, 2 on usage
errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np

from . import __version__
from .errors import CertificationError, DomainError
from .grid import Grid, GridFunction, build_grid, dist_oracle, parse_domain
from .limit import FamilySequence, gamma_recovery_check, region_equation_check, run_limit_experiment
from .orlicz import Kind, certify_growth, default_samples, parse_family
from .report import write_csv, write_json, write_line_chart, write_solution_csv
from .solver import SolverConfig, solve

__all__ = ["main", "parse_source"]


class UsageError(ValueError):
    pass


class Check(NamedTuple):
    name: str
    passed: bool
    detail: str


DEFAULTS = {
    "s": "0.5",
    "f": "const:1",
    "p": "4,8,16,32,64",
    "family": "power",
    "normalize": "unit",
    "ratio": "1.5",
    "r": "2",
    "grad_tol": "1e-9",
    "max_iters": "500",
    "initial_guess": "dist_oracle_scaled",
    "tol": "0.1",
    "seed": "0",
    "samples": "10000",
}

_KNOWN = set(DEFAULTS) | {"domain", "n", "R"}


# ---------------------------------------------------------------------------
# configuration


def _read_config(path: str) -> dict[str, str]:
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path!r}: {exc.strerror}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        out[key.strip()] = value.strip()
    return out


def _collect(tokens: list[str], config_file: str | None, positional_key: str) -> dict[str, str]:
    cfg = _read_config(config_file) if config_file else {}
    positional = None
    for tok in tokens:
        key, eq, value = tok.partition("=")
        if eq and key in _KNOWN:
            cfg[key] = value
        elif positional is None:
            positional = tok
        else:
            raise UsageError(f"unexpected argument {tok!r}")
    if positional is not None:
        cfg[positional_key] = positional
    unknown = set(cfg) - _KNOWN
    if unknown:
        raise UsageError(f"unknown settings: {', '.join(sorted(unknown))}")
    return cfg


def _get(cfg, key, conv=str):
    try:
        return conv(cfg.get(key, DEFAULTS.get(key)))
    except (TypeError, ValueError):
        raise UsageError(f"invalid value for {key}: {cfg.get(key)!r}") from None


def _exponents(text: str) -> list[float]:
    try:
        ps = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"invalid exponent list {text!r}") from None
    if not ps or any(b <= a for a, b in zip(ps, ps[1:])):
        raise UsageError(f"exponent list must be non-empty and strictly increasing: {text!r}")
    return ps


def _grid(cfg) -> Grid:
    if "domain" not in cfg:
        raise UsageError("a domain (e.g. interval:-1,1) is required")
    dom = parse_domain(cfg["domain"])
    n_default = 201 if dom.dimension == 1 else 20
    n = _get(cfg, "n", int) if "n" in cfg else n_default
    R = float(cfg["R"]) if "R" in cfg else None
    return build_grid(dom, n, _get(cfg, "s", float), R)


def _solver_config(cfg) -> SolverConfig:
    return SolverConfig(
        max_iters=_get(cfg, "max_iters", int),
        grad_tol=_get(cfg, "grad_tol", float),
        initial_guess=_get(cfg, "initial_guess"),
    )


def parse_source(spec: str, grid: Grid) -> GridFunction:
    """Right-hand side from ``const:<v>``, ``bump:...``, ``signed-bump:...`` or ``csv:<path>``.

    ``bump:r=<radius>,a=<amp>[,cx=..,cy=..]`` is ``a (1 - |x-c|^2/r^2)^2`` on
    its support; ``signed-bump:r=..,a=..`` places ``+bump`` and ``-bump`` at
    the quarter points of the first axis.
    """
    head, _, body = spec.partition(":")
    head = head.strip().lower()
    if head == "const":
        return grid.from_interior(np.full(grid.n_interior, float(body)))
    if head == "csv":
        return GridFunction.from_csv(grid, body)
    if head in ("bump", "signed-bump"):
        kv = {k.strip(): float(v) for k, v in (x.split("=", 1) for x in body.split(",") if x.strip())}
        rad, amp = kv.get("r", 0.5), kv.get("a", 1.0)
        pts = grid.nodes[grid.interior]

        def bump(center):
            q = np.sum((pts - center) ** 2, axis=1) / rad**2
            return np.where(q < 1.0, (1.0 - q) ** 2, 0.0)

        lo = pts.min(axis=0)
        hi = pts.max(axis=0)
        mid = 0.5 * (lo + hi)
        if head == "bump":
            c = np.array([kv.get("cx", mid[0]), kv.get("cy", mid[-1])][: grid.dimension])
            return grid.from_interior(amp * bump(c))
        left, right = mid.copy(), mid.copy()
        left[0] = lo[0] + 0.25 * (hi[0] - lo[0])
        right[0] = lo[0] + 0.75 * (hi[0] - lo[0])
        return grid.from_interior(amp * (bump(left) - bump(right)))
    raise UsageError(f"unknown source spec {spec!r}")


def _sequence(cfg) -> FamilySequence:
    fam = _get(cfg, "family")
    try:
        kind = Kind(fam)
    except ValueError:
        raise UsageError(f"family must be one of power, sumpowers, powerlog for sequences, got {fam!r}") from None
    norm = _get(cfg, "normalize")
    if norm not in ("unit", "none"):
        raise UsageError(f"normalize must be 'unit' or 'none', got {norm!r}")
    return FamilySequence.build(kind, _exponents(_get(cfg, "p")), _get(cfg, "ratio", float), norm == "unit")


def _echo(cfg) -> dict[str, str]:
    eff = dict(DEFAULTS)
    eff.update(cfg)
    return eff


# ---------------------------------------------------------------------------
# subcommands


def cmd_certify(cfg, out: Path | None):
    if "domain" not in cfg:
        raise UsageError("certify-family needs a family spec such as power:p=8")
    fam = parse_family(cfg["domain"])
    n = _get(cfg, "samples", int)
    echo = {"family": fam.spec(), "samples": str(n)}
    try:
        cert = certify_growth(fam, default_samples(n))
        checks = [Check("growth inequalities", True, f"{len(cert.report)} inequalities hold")]
        report = cert.report
        payload = {
            "p_minus": cert.p_minus,
            "p_plus": cert.p_plus,
            "beta": cert.beta,
            "conjugate_samples": cert.conjugate_samples,
            "inequalities": report,
        }
    except CertificationError as exc:
        checks = [Check(exc.inequality, False, str(exc))]
        report = {exc.inequality: exc.slack}
        payload = {"p_minus": fam.p_minus, "p_plus": fam.p_plus, "beta": fam.beta, "inequalities": report}
    print(f"{fam.spec()}: p- = {fam.p_minus:g}, p+ = {fam.p_plus:g}, beta = {fam.beta:.6g}")
    for name in sorted(report):
        print(f"  {name:32s} worst log-slack {report[name]: .3e}")
    if out:
        write_json(out / "report.json", payload | {"checks": [c._asdict() for c in checks]}, echo)
        write_csv(out / "report.csv", ["inequality", "worst_log_slack"], sorted(report.items()), echo)
    return checks


def cmd_solve(cfg, out: Path | None):
    grid = _grid(cfg)
    fam = parse_family(cfg.get("family", "power:p=8"))
    f = parse_source(_get(cfg, "f"), grid)
    res = solve(fam, f, grid, _solver_config(cfg))
    echo = _echo(cfg) | {"family": fam.spec()}
    print(
        f"{fam.spec()} on {grid.domain.spec()}: energy {res.energy:.12g}, iterations {res.iterations}, "
        f"grad_norm {res.grad_norm:.3e}, converged {res.converged}"
    )
    checks = [Check("converged", res.converged, f"grad_norm {res.grad_norm:.3e}")]
    if out:
        payload = {
            "energy": res.energy,
            "grad_norm": res.grad_norm,
            "iterations": res.iterations,
            "converged": res.converged,
            "grid": grid.describe(),
            "checks": [c._asdict() for c in checks],
        }
        write_json(out / "report.json", payload, echo)
        write_csv(
            out / "report.csv",
            ["family", "energy", "grad_norm", "iterations", "converged"],
            [[fam.spec(), res.energy, res.grad_norm, res.iterations, res.converged]],
            echo,
        )
        write_solution_csv(out / f"solution_p{fam.p_minus:g}.csv", res.u, echo)
    return checks


_ROW_COLUMNS = [
    "family", "p_minus", "p_plus", "sup_error", "holder_constant", "seminorm_sG",
    "apriori_bound", "energy", "iterations", "grad_norm", "converged",
]


def _experiment(cfg):
    grid = _grid(cfg)
    seq = _sequence(cfg)
    f = parse_source(_get(cfg, "f"), grid)
    rep = run_limit_experiment(seq, f, grid, _solver_config(cfg), _get(cfg, "r", float))
    return grid, f, rep


def _write_experiment(out: Path, rep, echo, extra_payload=None, checks=()):
    rows = [[getattr(r, c) for c in _ROW_COLUMNS] for r in rep.rows]
    payload = rep.to_dict() | {"checks": [c._asdict() for c in checks]} | (extra_payload or {})
    write_json(out / "report.json", payload, echo)
    write_csv(out / "report.csv", _ROW_COLUMNS, rows, echo)
    for row, u in zip(rep.rows, rep.solutions):
        write_solution_csv(out / f"solution_p{row.p_minus:g}.csv", u, echo)
    write_line_chart(out / "sup_error.svg", [r.p_minus for r in rep.rows], rep.sup_errors, echo, "p-", "sup |u_p - dist^s|")


def _print_rows(rep):
    print(f"{'p-':>6} {'sup_error':>10} {'holder':>8} {'[u]_sG':>8} {'bound':>8} {'iters':>5}")
    for r in rep.rows:
        print(
            f"{r.p_minus:6g} {r.sup_error:10.5f} {r.holder_constant:8.5f} {r.seminorm_sG:8.5f} "
            f"{r.apriori_bound:8.5f} {r.iterations:5d}{'' if r.converged else '  (not converged)'}"
        )


def cmd_limit(cfg, out: Path | None):
    grid, f, rep = _experiment(cfg)
    tol = _get(cfg, "tol", float)
    errs = rep.sup_errors
    checks = [
        Check("all solves converged", all(r.converged for r in rep.rows), ""),
        Check(
            "seminorm below a-priori bound",
            all(r.seminorm_sG <= r.apriori_bound * (1 + 1e-9) for r in rep.rows),
            "",
        ),
        Check("limit Holder constant", rep.holder_s_constant_of_limit <= 1 + tol, f"{rep.holder_s_constant_of_limit:.6f}"),
        Check("max L_plus", rep.L_plus_max <= 1 + tol, f"{rep.L_plus_max:.6f}"),
        Check("min L_minus", rep.L_minus_min >= -1 - tol, f"{rep.L_minus_min:.6f}"),
    ]
    if rep.oracle_applicable:
        dec = all(b < a for a, b in zip(errs, errs[1:]))
        checks.append(Check("sup error strictly decreasing", dec, ", ".join(f"{e:.5f}" for e in errs)))
    _print_rows(rep)
    if out:
        _write_experiment(out, rep, _echo(cfg), checks=checks)
    return checks


def cmd_gamma(cfg, out: Path | None):
    grid = _grid(cfg)
    seq = _sequence(cfg)
    u = dist_oracle(grid)
    res = gamma_recovery_check(seq, u)
    e = res.energies
    checks = [Check("energies decreasing", all(b < a for a, b in zip(e, e[1:])), ", ".join(f"{x:.6g}" for x in e))]
    for p, eps, en in zip(res.exponents, res.eps, e):
        print(f"p- = {p:6g}  eps = {eps:.5f}  I((1-eps) dist^s) = {en:.6g}")
    if out:
        echo = _echo(cfg)
        payload = {
            "exponents": res.exponents,
            "eps": res.eps,
            "energies": e,
            "holder_constant": res.holder_constant,
            "checks": [c._asdict() for c in checks],
        }
        write_json(out / "report.json", payload, echo)
        write_csv(out / "report.csv", ["p_minus", "eps", "energy"], zip(res.exponents, res.eps, e), echo)
        write_line_chart(out / "energy.svg", res.exponents, e, echo, "p-", "recovery energy")
    return checks


def cmd_region(cfg, out: Path | None):
    grid, f, rep = _experiment(cfg)
    regions = region_equation_check(rep.solutions[-1], f, _get(cfg, "tol", float))
    checks = [Check(f"region {r.region}", r.passed, f"{r.nodes} nodes, worst {r.worst:.4f}") for r in regions]
    for r in regions:
        print(f"{r.region:18s} nodes {r.nodes:5d}  worst residual {r.worst:.5f}  {'ok' if r.passed else 'FAIL'}")
    if out:
        _write_experiment(
            out, rep, _echo(cfg), {"regions": [r._asdict() for r in regions]}, checks
        )
    return checks


COMMANDS: dict[str, Callable] = {
    "certify-family": cmd_certify,
    "solve": cmd_solve,
    "limit-experiment": cmd_limit,
    "gamma-check": cmd_gamma,
    "region-check": cmd_region,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracorlicz", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("tokens", nargs="*", help="domain / family spec and key=value settings")
        sp.add_argument("--config", help="flat key=value settings file")
        sp.add_argument("--out", help="output directory for report files")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _collect(args.tokens, args.config, "domain")
        out = None
        if args.out:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
        checks = COMMANDS[args.command](cfg, out)
    except (UsageError, DomainError, ValueError) as exc:
        print(f"fracorlicz: error: {exc}", file=sys.stderr)
        return 2
    failed = [c for c in checks if not c.passed]
    for c in failed:
        print(f"FAILED: {c.name} {c.detail}".rstrip(), file=sys.stderr)
    return 1 if failed else 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
