"""Command-line front end.

Exit codes: 0 success, 1 bad input, 2 a checked identity has a defect,
3 a randomized property failed.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import checks
from .classify import OmegaOptions, classify_omega
from .expr import parse_constant, print_form
from .integrate import DEFAULT_TOL, InvalidInitialData, TraceOptions, trace
from .output import dumps, torus_svg, trace_csv, trace_json, trace_svg
from .rational import RationalFormError, RootFindingError
from .sphere import SphereConnection, residue_sum_report
from .torus import TorusSpec, classify_torus, torus_trace

EXIT_OK, EXIT_INPUT, EXIT_DEFECT, EXIT_PROPERTY = 0, 1, 2, 3
RESIDUE_DEFECT_TOL = 1e-9
TOL_ENV = "MEROGEO_TOL"


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    form: str | None = None
    z0: complex = 0j
    v0: complex = 1 + 0j
    horizon: float = 10.0
    tol: float = DEFAULT_TOL
    out: Path | None = None
    svg: Path | None = None
    seed: int = 0
    n_cases: int = 10
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.tol > 0:
            raise InputError("tolerances must be positive")
        if not self.horizon > 0:
            raise InputError("horizon must be positive")


def default_tol() -> float:
    raw = os.environ.get(TOL_ENV)
    if raw is None:
        return DEFAULT_TOL
    try:
        tol = float(raw)
    except ValueError:
        raise InputError(f"{TOL_ENV}={raw!r} is not a number") from None
    if not tol > 0:
        raise InputError(f"{TOL_ENV} must be positive")
    return tol


def _complex(text: str) -> complex:
    try:
        return parse_constant(text)
    except RationalFormError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _connection(src: str) -> SphereConnection:
    try:
        return SphereConnection.from_source(src)
    except (RationalFormError, RootFindingError) as exc:
        raise InputError(str(exc)) from None


def _emit(obj) -> None:
    sys.stdout.write(dumps(obj))


def _write(path: Path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def cmd_residues(cfg: RunConfig) -> int:
    conn = _connection(cfg.form)
    total, defect = residue_sum_report(conn)
    report = {"form": print_form(conn.form_z), **conn.catalog_json(),
              "residue_sum": total, "defect": defect}
    _emit(report)
    return EXIT_OK if defect < RESIDUE_DEFECT_TOL else EXIT_DEFECT


def _trace_opts(cfg: RunConfig) -> TraceOptions:
    return TraceOptions(rtol=cfg.tol, atol=cfg.tol)


def cmd_trace(cfg: RunConfig) -> int:
    conn = _connection(cfg.form)
    try:
        tr = trace(conn, cfg.z0, cfg.v0, cfg.horizon, _trace_opts(cfg))
    except InvalidInitialData as exc:
        raise InputError(str(exc)) from None
    if cfg.out is not None:
        text = trace_csv(tr) if Path(cfg.out).suffix.lower() == ".csv" else dumps(trace_json(tr))
        _write(cfg.out, text)
    if cfg.svg is not None:
        _write(cfg.svg, trace_svg(tr, conn))
    _emit({"event": tr.event.to_json(), "max_invariant_drift": tr.max_invariant_drift,
           "chart_switches": list(tr.chart_switches), "samples": len(tr),
           "final_z": complex(tr.positions_z()[-1])})
    return EXIT_OK


def cmd_classify(cfg: RunConfig) -> int:
    conn = _connection(cfg.form)
    opts = OmegaOptions(trace_opts=_trace_opts(cfg))
    try:
        tr = trace(conn, cfg.z0, cfg.v0, cfg.horizon, opts.trace_opts)
    except InvalidInitialData as exc:
        raise InputError(str(exc)) from None
    _emit(classify_omega(conn, tr, opts).to_json())
    return EXIT_OK


def cmd_torus(cfg: RunConfig) -> int:
    try:
        spec = TorusSpec(cfg.extra["lam"], cfg.extra["a"], cfg.z0, cfg.v0)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    verdict = classify_torus(spec)
    if cfg.svg is not None:
        _write(cfg.svg, torus_svg(torus_trace(spec, cfg.horizon), spec.lam))
    _emit({"spec": spec.to_json(), **verdict.to_json()})
    return EXIT_OK


def cmd_check(cfg: RunConfig) -> int:
    if cfg.n_cases < 1:
        raise InputError("--n must be at least 1")
    override = cfg.extra.get("check_tol")
    th = checks.Thresholds() if override is None else checks.Thresholds.uniform(override)
    results = checks.run_suite(cfg.seed, cfg.n_cases, th, _trace_opts(cfg))
    failed = False
    print(f"{'property':<18} {'pass':>5} {'fail':>5} {'worst':>12}")
    for prop, rs in results.items():
        bad = [r for r in rs if not r.ok]
        worst = max(r.value for r in rs)
        print(f"{prop:<18} {len(rs) - len(bad):>5} {len(bad):>5} {worst:>12.3e}")
        for r in bad:
            failed = True
            print(f"  FAIL {prop} case seed {r.seed}: value {r.value:.3e}")
    return EXIT_PROPERTY if failed else EXIT_OK


COMMANDS = {
    "residues": cmd_residues,
    "trace": cmd_trace,
    "classify": cmd_classify,
    "torus": cmd_torus,
    "check": cmd_check,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="merogeo",
                                description="Geodesics of meromorphic connections on the sphere "
                                            "and holomorphic connections on tori.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("residues", help="pole catalog and residue sum")
    r.add_argument("--form", required=True, help='connection coefficient, e.g. "3/(z-2)"')

    for name, hz, helptext in (("trace", 10.0, "integrate one geodesic"),
                               ("classify", 50.0, "classify the forward limit set")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--form", required=True)
        s.add_argument("--z0", type=_complex, required=True)
        s.add_argument("--v0", type=_complex, required=True)
        s.add_argument("--t", "--horizon", dest="horizon", type=float, default=hz)
        s.add_argument("--tol", type=float, default=None,
                       help=f"integrator rtol/atol (default ${TOL_ENV} or {DEFAULT_TOL:g})")
        if name == "trace":
            s.add_argument("--out", type=Path, help="write samples (.csv or .json)")
            s.add_argument("--svg", type=Path, help="write both chart views as SVG")

    t = sub.add_parser("torus", help="classify a geodesic of a dz on a torus")
    t.add_argument("--lambda", dest="lam", type=_complex, required=True)
    t.add_argument("--a", type=_complex, required=True)
    t.add_argument("--z0", type=_complex, default=0j)
    t.add_argument("--v0", type=_complex, required=True)
    t.add_argument("--svg", type=Path, help="write the projected trajectory as SVG")
    t.add_argument("--t", dest="horizon", type=float, default=20.0,
                   help="time span drawn in the SVG")

    c = sub.add_parser("check", help="randomized property suite")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--n", dest="n_cases", type=int, default=10)
    c.add_argument("--tol", dest="check_tol", type=float, default=None,
                   help="replace every pass threshold by this value")
    return p


def _config(ns: argparse.Namespace) -> RunConfig:
    tol = getattr(ns, "tol", None)
    extra = {}
    if ns.command == "torus":
        extra = {"lam": ns.lam, "a": ns.a}
    if ns.command == "check":
        if ns.check_tol is not None and not ns.check_tol > 0:
            raise InputError("--tol must be positive")
        extra = {"check_tol": ns.check_tol}
    return RunConfig(
        command=ns.command,
        form=getattr(ns, "form", None),
        z0=getattr(ns, "z0", 0j),
        v0=getattr(ns, "v0", 1 + 0j),
        horizon=getattr(ns, "horizon", 10.0),
        tol=tol if tol is not None else default_tol(),
        out=getattr(ns, "out", None),
        svg=getattr(ns, "svg", None),
        seed=getattr(ns, "seed", 0),
        n_cases=getattr(ns, "n_cases", 10),
        extra=extra,
    )


# options whose values may legitimately start with "-", such as --form "-1/z"
_VALUE_OPTIONS = {"--form", "--z0", "--v0", "--lambda", "--a"}


def _attach_values(argv: list[str]) -> list[str]:
    """Rewrite ``--opt -value`` as ``--opt=-value`` so argparse accepts it."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_OPTIONS and i + 1 < len(argv) and argv[i + 1].startswith("-") \
                and not argv[i + 1].startswith("--"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        ns = parser.parse_args(_attach_values(argv))
    except SystemExit as exc:
        # argparse reports usage errors with status 2; map them to input errors
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        cfg = _config(ns)
        return COMMANDS[cfg.command](cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
