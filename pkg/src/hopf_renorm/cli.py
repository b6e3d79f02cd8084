"""Command-line front end.  Every subcommand prints one JSON document.

Exit codes: 0 success, 1 numerical failure, 2 resource bound, 64 usage.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import schemas
from .characters import Character, birkhoff
from .conformal import ConformalMetric, Density, conformal_expansion_check, yamabe_invariance_deviation
from .errors import (ClosureError, ConvergenceError, DomainError, GraphInvariantError,
                     HopfRenormError, LocalityError, PoleInstabilityError, ResourceError,
                     UnknownGeneratorError, UnsupportedBackendError)
from .feynman import character_from_rules, laurent_expansion
from .graphs import FeynmanGraph, canonical_form, enumerate_1pi_graphs, generator_label, loop_number
from .hopf import HopfAlgebra, HopfPolynomial
from .laurent import DEFAULT_ORDER, LaurentSeries
from .rg import beta, check_locality, physics_beta_report
from .spectral import TorusBackend

EXIT_OK, EXIT_NUMERIC, EXIT_RESOURCE, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


@dataclass
class RunConfig:
    command: str
    backend: dict | None = None
    max_loops: int = 1
    order: int = DEFAULT_ORDER
    tolerance: float = 1e-6
    output: str | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.max_loops < 0 or self.order < 0:
            raise UsageError("bounds must be non-negative")
        if not 0 < self.tolerance < 1:
            raise UsageError("tolerances must lie in (0, 1)")


def _load_json(text_or_path: str):
    inline = text_or_path.lstrip().startswith(("{", "["))
    try:
        if not inline:
            return json.loads(Path(text_or_path).read_text(encoding="utf-8"))
        return json.loads(text_or_path)
    except OSError as exc:
        raise UsageError(f"cannot read {text_or_path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"cannot parse JSON from {text_or_path!r}: {exc}") from exc


def _complex(v) -> list:
    v = complex(v)
    return [v.real, v.imag]


def _emit(cfg: RunConfig, doc, schema) -> None:
    schemas.validate(doc, schema)
    text = json.dumps(doc, indent=2, sort_keys=True)
    if cfg.output:
        Path(cfg.output).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _backend(cfg: RunConfig) -> TorusBackend:
    try:
        return TorusBackend.from_config(cfg.backend)
    except (DomainError, KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"bad backend config: {exc}") from exc


# -- subcommands --------------------------------------------------------------------

def cmd_graphs(cfg: RunConfig) -> int:
    ext = cfg.extra["ext"]
    out = []
    if cfg.max_loops >= 1:
        for g in enumerate_1pi_graphs(cfg.max_loops, ext, not cfg.extra.get("no_self_loops")):
            label, aut = canonical_form(g)
            out.append({"label": label, "generator": generator_label(g), "loops": loop_number(g),
                        "automorphisms": aut, "graph": g.to_dict()})
    _emit(cfg, out, schemas.GRAPHS_OUTPUT)
    return EXIT_OK


def cmd_hopf(cfg: RunConfig) -> int:
    data = _load_json(cfg.extra["graph"])
    try:
        g = FeynmanGraph.from_dict(data)
    except GraphInvariantError as exc:
        raise UsageError(str(exc)) from exc
    alg = HopfAlgebra()
    p = HopfPolynomial.one() if not g.vertices else alg.x(g, cfg.extra.get("name") or "G")
    op = cfg.extra["op"]
    if op == "coproduct":
        t = alg.coproduct(p)
        doc = {"op": op, "rendered": alg.render_tensor(t), "tensor": t.to_dict()}
    else:
        s = alg.antipode(p)
        as_tensor = {"terms": [{"factors": [list(m)], "coeff": str(c)} for m, c in s.items()]}
        doc = {"op": op, "rendered": alg.render(s), "polynomial": as_tensor}
    doc["names"] = {alg.name(l): l for l in alg.labels()}
    _emit(cfg, doc, schemas.HOPF_OUTPUT)
    return EXIT_OK


def _universe(cfg: RunConfig):
    graphs = []
    for e in cfg.extra.get("ext", [2, 3]):
        graphs.extend(enumerate_1pi_graphs(cfg.max_loops, e))
    return graphs


def _names(alg: HopfAlgebra, graphs) -> None:
    known = {"i2e2:0-1x2.0-2.1-3": "B", "i3e3:0-1.0-2.0-3.1-2.1-4.2-5": "T"}
    for g in graphs:
        lab = alg.register(g)
        if lab in known:
            alg.register(g, known[lab])


def cmd_bphz(cfg: RunConfig) -> int:
    backend = _backend(cfg)
    alg = HopfAlgebra()
    graphs = _universe(cfg)
    _names(alg, graphs)
    sym = not cfg.extra.get("no_symmetry_factor")
    coupling = cfg.extra.get("coupling", 1.0)
    rows = []
    values, tols = {}, {}
    for g in graphs:
        lab = alg.register(g)
        try:
            ev = laurent_expansion(g, backend, None, cfg.order, coupling, sym)
        except UnsupportedBackendError as exc:
            raise ClosureError(str(exc), label=alg.name(lab)) from exc
        values[lab] = ev.series
        tols[lab] = ev.tolerance
    gamma = Character(alg, values, cfg.order)
    minus, plus = birkhoff(gamma)
    worst = 0.0
    for lab in gamma.labels:
        worst = max(worst, tols[lab])
        rows.append({
            "label": lab, "name": alg.name(lab), "loops": alg.loops(lab),
            "gamma": gamma[lab].to_dict(), "minus": minus[lab].to_dict(),
            "plus": plus[lab].to_dict(), "renormalized": _complex(plus[lab].eval_at_zero()),
            "tolerance": tols[lab],
        })
    _emit(cfg, {"backend": backend.to_config(), "graphs": rows}, schemas.BPHZ_OUTPUT)
    return EXIT_NUMERIC if worst > cfg.tolerance else EXIT_OK


def _character_from_file(path: str) -> Character:
    data = _load_json(path)
    try:
        schemas.validate(data, schemas.CHARACTER_FILE)
    except Exception as exc:
        raise UsageError(f"bad character file: {exc}") from exc
    alg = HopfAlgebra()
    order = int(data.get("order", DEFAULT_ORDER))
    values = {}
    for item in data["generators"]:
        try:
            g = FeynmanGraph.from_dict(item["graph"])
        except GraphInvariantError as exc:
            raise UsageError(str(exc)) from exc
        lab = alg.register(g, item.get("name"))
        s = LaurentSeries.from_dict(item["series"])
        values[lab] = LaurentSeries(s.low, s.coeffs, order)
    return Character(alg, values, order)


def cmd_beta(cfg: RunConfig) -> int:
    if cfg.extra.get("literature"):
        _emit(cfg, physics_beta_report(cfg.extra["literature"]), schemas.LITERATURE_OUTPUT)
        return EXIT_OK
    if cfg.extra.get("character"):
        gamma = _character_from_file(cfg.extra["character"])
    elif cfg.backend is not None:
        alg = HopfAlgebra()
        graphs = _universe(cfg)
        _names(alg, graphs)
        gamma = character_from_rules(_backend(cfg), graphs, alg, cfg.order,
                                     symmetrize=not cfg.extra.get("no_symmetry_factor"))
    else:
        raise UsageError("beta needs --backend, --character or --literature")
    alg = gamma.algebra
    report = check_locality(gamma)
    if not report.passed:
        doc = {"error": "LocalityError",
               "message": f"counterterms depend on the scale; max deviation {report.max_deviation:.6g}",
               "locality": report.to_dict(alg)}
        print(json.dumps(doc, indent=2, sort_keys=True))
        return EXIT_NUMERIC
    b = beta(gamma)
    rows = [{"label": lab, "name": alg.name(lab), "loops": alg.loops(lab),
             "residue": _complex(gamma[lab].residue()), "beta": _complex(b[lab]),
             "locality_deviation": report.deviations[lab]} for lab in gamma.labels]
    _emit(cfg, {"rows": rows, "locality": report.to_dict(alg)}, schemas.BETA_OUTPUT)
    return EXIT_OK


def cmd_conformal(cfg: RunConfig) -> int:
    ex = cfg.extra
    try:
        gm = ConformalMetric(ex["n"], ex["grid"])
        f = gm.evaluate(ex["f"])
    except (DomainError, SyntaxError) as exc:
        raise UsageError(str(exc)) from exc
    doc = conformal_expansion_check(gm, f, ex["z"], ex["mass"])
    if ex["n"] == 2 and ex.get("yamabe"):
        phi_expr = ex.get("phi") or "cos(2*pi*x) + 0.5*sin(2*pi*y)"
        devs = {}
        for grid in (ex["grid"], 2 * ex["grid"]):
            g2 = ConformalMetric(2, grid)
            devs[str(grid)] = yamabe_invariance_deviation(
                g2, g2.evaluate(ex["f"]), Density(0.0, g2.evaluate(phi_expr), g2))
        vals = list(devs.values())
        doc["yamabe"] = {"deviations": devs, "ratio": vals[0] / vals[1] if vals[1] else None}
    _emit(cfg, doc, schemas.CONFORMAL_OUTPUT)
    return EXIT_OK


# -- parser -----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hopf-renorm", description=__doc__.splitlines()[0])
    p.add_argument("--output", help="write JSON here instead of stdout")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("graphs", help="enumerate 1PI phi^3 graphs")
    g.add_argument("--loops", type=int, required=True)
    g.add_argument("--ext", type=int, required=True)
    g.add_argument("--no-self-loops", action="store_true")

    h = sub.add_parser("hopf", help="coproduct or antipode of a graph")
    h.add_argument("op", choices=["coproduct", "antipode"])
    h.add_argument("graph", help="graph JSON file or inline JSON")
    h.add_argument("--name", help="display name for the graph")

    def backend_args(q, required):
        q.add_argument("--backend", required=required, help="backend config JSON file or inline JSON")
        q.add_argument("--loops", type=int, default=1, help="universe bound")
        q.add_argument("--ext", type=lambda s: [int(x) for x in s.split(",")], default=[2, 3])
        q.add_argument("--order", type=int, default=DEFAULT_ORDER)
        q.add_argument("--no-symmetry-factor", action="store_true")

    b = sub.add_parser("bphz", help="Birkhoff decomposition of the Feynman-rule character")
    backend_args(b, True)
    b.add_argument("--coupling", type=float, default=1.0)
    b.add_argument("--tol", type=float, default=1e-6)

    bt = sub.add_parser("beta", help="locality check and beta function")
    backend_args(bt, False)
    bt.add_argument("--character", help="character JSON file")
    bt.add_argument("--literature", nargs="?", const="all", help="print literature one-loop values")

    c = sub.add_parser("conformal", help="conformal operator checks")
    c.add_argument("action", choices=["check"])
    c.add_argument("--n", type=int, default=2)
    c.add_argument("--grid", type=int, default=64)
    c.add_argument("--f", default="0.1*cos(2*pi*x)")
    c.add_argument("--z", type=float, default=0.1)
    c.add_argument("--mass", type=float, default=1.0)
    c.add_argument("--yamabe", action="store_true", help="also report Yamabe invariance at grid and 2x grid")
    c.add_argument("--phi", help="test function for the Yamabe check")
    return p


_COMMANDS = {"graphs": cmd_graphs, "hopf": cmd_hopf, "bphz": cmd_bphz, "beta": cmd_beta,
             "conformal": cmd_conformal}


def _config(args) -> RunConfig:
    extra = {k: v for k, v in vars(args).items()
             if k not in ("command", "backend", "loops", "order", "output", "tol")}
    backend = _load_json(args.backend) if getattr(args, "backend", None) else None
    return RunConfig(args.command, backend, getattr(args, "loops", 1),
                     getattr(args, "order", DEFAULT_ORDER), getattr(args, "tol", 1e-6),
                     args.output, extra)


def _fail(exc: Exception, code: int) -> int:
    print(json.dumps({"error": type(exc).__name__, "message": str(exc)}, sort_keys=True),
          file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        cfg = _config(args)
        return _COMMANDS[args.command](cfg)
    except UsageError as exc:
        return _fail(exc, EXIT_USAGE)
    except ResourceError as exc:
        return _fail(exc, EXIT_RESOURCE)
    except (ConvergenceError, LocalityError, PoleInstabilityError, ClosureError,
            UnknownGeneratorError) as exc:
        return _fail(exc, EXIT_NUMERIC)
    except (DomainError, GraphInvariantError) as exc:
        return _fail(exc, EXIT_USAGE)
    except HopfRenormError as exc:
        return _fail(exc, EXIT_NUMERIC)


if __name__ == "__main__":
    sys.exit(main())
