"""Command-line front end.

Every command prints one JSON document (or writes CSV for ``scan``).  Errors go
to stderr as JSON; exit code 2 means a configuration error, 3 a numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import __version__
from .errors import NumericalFailure, WLRError
from .inequalities import (
    SCHEMA_VERSION,
    Inequality,
    WignerVariant,
    evaluate,
    gwi,
    inequality_from_spec,
    svetlichny,
    theorem1_set,
    wigner_bipartite,
    wlr_full_set,
)
from .lhv import local_vertex_max, maximize_over_vertices
from .qcore import AngleTable, PureState, StateName, behavior, named_state
from .search import (
    OptimizerOptions,
    certify,
    grid_axis,
    optimize_svetlichny,
    optimize_violation,
    product_grid,
    scan_min_violation,
    threshold_analysis,
)

COMMANDS = ("list-inequalities", "evaluate", "optimize", "certify", "threshold", "scan", "svetlichny", "selftest")


class ConfigError(WLRError):
    pass


@dataclass
class RunConfig:
    command: str
    state: Optional[str] = None
    params: tuple[float, ...] = ()
    amplitudes: Optional[list] = None
    n: Optional[int] = None
    family: Optional[str] = None
    ineq: Optional[str] = None
    angles: Optional[str] = None
    grid: Optional[str] = None
    nu: float = math.pi / 4
    variants: bool = False
    output: Optional[str] = None
    format: str = "json"
    rng_seed: int = 0
    restarts: Optional[int] = None
    max_iterations: int = 2000
    simplex_tolerance: float = 1e-8

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; expected one of {', '.join(COMMANDS)}")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"format must be json or csv, got {self.format!r}")

    def options(self, default_restarts: int = 64) -> OptimizerOptions:
        restarts = default_restarts if self.restarts is None else self.restarts
        return OptimizerOptions(restarts, self.max_iterations, self.simplex_tolerance, self.rng_seed)

    @classmethod
    def from_json(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict) or "command" not in data:
            raise ConfigError("config must be a JSON object with a 'command' field")
        data = dict(data)
        state = data.pop("state", None)
        if isinstance(state, dict):
            data["state"] = state.get("name")
            data["params"] = tuple(state.get("params", ()))
            if "amplitudes" in state:
                data["amplitudes"] = state["amplitudes"]
        elif state is not None:
            data["state"] = state
        opt = data.pop("optimizer", {}) or {}
        for key in ("restarts", "max_iterations", "simplex_tolerance", "rng_seed"):
            if key in opt:
                data[key] = opt[key]
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "params" in data:
            data["params"] = tuple(float(p) for p in data["params"])
        return cls(**data)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _round(obj: Any) -> Any:
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return str(obj)
        return float(f"{obj:.12g}")
    if isinstance(obj, (np.floating,)):
        return _round(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, dict):
        return {str(k): _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist())
    return obj


def render(payload: dict) -> str:
    return json.dumps(_round(payload), indent=2, sort_keys=True) + "\n"


def _parse_state_arg(text: str) -> tuple[str, tuple[float, ...]]:
    """``NAME`` or ``NAME:p1,p2``."""
    name, _, rest = text.partition(":")
    params = tuple(float(p) for p in rest.split(",") if p.strip()) if rest else ()
    return name, params


def _state(cfg: RunConfig) -> PureState:
    if cfg.amplitudes is not None:
        amps = np.asarray(cfg.amplitudes, dtype=float)
        return named_state(StateName.CUSTOM, tuple(amps))
    if not cfg.state:
        raise ConfigError("this command needs --state")
    name, params = _parse_state_arg(cfg.state)
    return named_state(name, params or cfg.params)


def _load_json(path: str) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc


def _inequalities(cfg: RunConfig, n: int) -> list[Inequality]:
    if not cfg.ineq:
        raise ConfigError("this command needs --ineq")
    if cfg.ineq.startswith("@"):
        doc = _load_json(cfg.ineq[1:])
        items = doc.get("inequalities", [doc]) if isinstance(doc, dict) else doc
        return [Inequality.from_dict(d) for d in items]
    return [inequality_from_spec(cfg.ineq, n)]


def _metadata(cfg: RunConfig, opts: Optional[OptimizerOptions] = None) -> dict:
    meta = {"rng_seed": cfg.rng_seed, "version": __version__}
    if opts is not None:
        meta.update(restarts=opts.restarts, max_iterations=opts.max_iterations, simplex_tolerance=opts.simplex_tolerance)
    return meta


def _parse_grid(spec: Optional[str]) -> list[tuple[float, float]]:
    """``COUNT`` (axis k*pi/28) or ``LO:HI:COUNT,LO:HI:COUNT`` (theta, mu linspaces)."""
    if not spec:
        raise ConfigError("scan needs --grid")
    try:
        if "," not in spec:
            axis = grid_axis(int(spec))
            return product_grid(axis, axis)
        parts = []
        for piece in spec.split(","):
            lo, hi, count = piece.split(":")
            parts.append(list(np.linspace(float(lo), float(hi), int(count))))
        return product_grid(parts[0], parts[1])
    except ValueError as exc:
        raise ConfigError(f"bad grid spec {spec!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_list(cfg: RunConfig) -> dict:
    n = cfg.n or 3
    family = (cfg.family or "WLR").upper()
    if family == "WLR":
        ineqs = wlr_full_set(n)
    elif family == "THM1":
        if n != 3:
            raise ConfigError("THM1 inequalities exist for n=3 only")
        ineqs = theorem1_set()
    elif family == "GWI":
        ineqs = [gwi(n)]
    elif family in ("WIGNER", "WIGNER_ORIGINAL", "WIGNER_2Q"):
        ineqs = [wigner_bipartite(WignerVariant.THREE_TERM), wigner_bipartite(WignerVariant.FOUR_TERM)]
    else:
        raise ConfigError(f"unknown family {cfg.family!r}")
    return {"schema_version": SCHEMA_VERSION, "inequalities": [i.to_dict() for i in ineqs]}


def cmd_evaluate(cfg: RunConfig) -> dict:
    psi = _state(cfg)
    if not cfg.angles:
        raise ConfigError("evaluate needs --angles FILE")
    angles = AngleTable.from_rows(_load_json(cfg.angles))
    b = behavior(psi, angles)
    values = [{"inequality": i.name, "value": evaluate(i, b)} for i in _inequalities(cfg, psi.num_parties)]
    out = {"schema_version": SCHEMA_VERSION, "state": psi.label, "angles": angles.tolist(), "results": values}
    if len(values) == 1:
        out["value"] = values[0]["value"]
    return out


def cmd_optimize(cfg: RunConfig) -> dict:
    psi = _state(cfg)
    opts = cfg.options()
    reports = [optimize_violation(psi, i, opts).to_dict() for i in _inequalities(cfg, psi.num_parties)]
    out = {"schema_version": SCHEMA_VERSION, "state": psi.label, "reports": reports, "metadata": _metadata(cfg, opts)}
    if len(reports) == 1:
        out.update(reports[0])
    return out


def cmd_certify(cfg: RunConfig) -> dict:
    psi = _state(cfg)
    n = cfg.n or psi.num_parties
    opts = cfg.options()
    rep = certify(psi, n, cfg.family or "WLR", opts, include_variants=cfg.variants)
    return {"schema_version": SCHEMA_VERSION, **rep.to_dict(), "metadata": _metadata(cfg, opts)}


def cmd_threshold(cfg: RunConfig) -> dict:
    psi = _state(cfg)
    opts = cfg.options(default_restarts=16)
    target = _inequalities(cfg, psi.num_parties) if cfg.ineq else (cfg.family or "THM1")
    rep = threshold_analysis(psi, target, opts)
    return {"schema_version": SCHEMA_VERSION, "state": psi.label, **rep.to_dict(), "metadata": _metadata(cfg, opts)}


def cmd_scan(cfg: RunConfig):
    family = (cfg.family or "GENW3").upper()
    opts = cfg.options(default_restarts=6)
    table = scan_min_violation(family, _parse_grid(cfg.grid), opts, nu=cfg.nu)
    if cfg.format == "csv" or (cfg.output and cfg.output.endswith(".csv")):
        return table.to_csv()
    return {
        "schema_version": SCHEMA_VERSION,
        "family": table.family.value,
        "nu": table.nu,
        "rows": [r.__dict__ for r in table.rows],
        "metadata": _metadata(cfg, opts),
    }


def cmd_svetlichny(cfg: RunConfig) -> dict:
    psi = _state(cfg)
    n = cfg.n or psi.num_parties
    if n != psi.num_parties:
        raise ConfigError(f"--n {n} does not match the {psi.num_parties}-party state")
    opts = cfg.options(default_restarts=256)
    f = svetlichny(n)
    rep = optimize_svetlichny(psi, f, opts)
    return {
        "schema_version": SCHEMA_VERSION,
        "state": psi.label,
        "max_abs_S": rep.best_value,
        "bound": f.hybrid_bound,
        "violated": rep.best_value > f.hybrid_bound + 1e-6,
        "best_angles": rep.best_angles.tolist(),
        "restarts_hitting_best": rep.restarts_hitting_best,
        "metadata": _metadata(cfg, opts),
    }


def selftest_results() -> list[dict]:
    rows = []
    for ineq in theorem1_set() + wlr_full_set(3) + wlr_full_set(4):
        best = maximize_over_vertices(ineq, ineq.bipartition)
        rows.append({"inequality": ineq.name, "cut": ineq.bipartition.label, "vertex_max": best.value})
    four = wigner_bipartite(WignerVariant.FOUR_TERM)
    rows.append({"inequality": four.name, "cut": "local", "vertex_max": local_vertex_max(four)})
    for n in (2, 3, 4):
        rows.append({"inequality": gwi(n).name, "cut": "local", "vertex_max": local_vertex_max(gwi(n))})
    return rows


def cmd_selftest(cfg: RunConfig) -> dict:
    rows = selftest_results()
    ok = all(r["vertex_max"] == 0 for r in rows)
    return {"schema_version": SCHEMA_VERSION, "ok": ok, "results": rows}


HANDLERS = {
    "list-inequalities": cmd_list,
    "evaluate": cmd_evaluate,
    "optimize": cmd_optimize,
    "certify": cmd_certify,
    "threshold": cmd_threshold,
    "scan": cmd_scan,
    "svetlichny": cmd_svetlichny,
    "selftest": cmd_selftest,
}


def run(cfg: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    result = HANDLERS[cfg.command](cfg)
    text = result if isinstance(result, str) else render(result)
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        stdout.write(text)
    if cfg.command == "selftest" and not result["ok"]:
        return 1
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wigner-lr", description="Wigner-type local-realist inequalities for qubit systems.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, optimizer=True):
        p.add_argument("--output", "-o")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--seed", dest="rng_seed", type=int, default=0)
        if optimizer:
            p.add_argument("--restarts", type=int)
            p.add_argument("--max-iterations", type=int, default=2000)
            p.add_argument("--simplex-tolerance", type=float, default=1e-8)

    p = sub.add_parser("list-inequalities", help="print inequalities as canonical JSON")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--family", default="WLR")
    common(p, optimizer=False)

    p = sub.add_parser("evaluate", help="evaluate inequalities at fixed angles")
    p.add_argument("--state", required=True)
    p.add_argument("--angles", required=True, help="JSON file [[a0, a1], ...] in radians")
    p.add_argument("--ineq", required=True, help="WLR:2|134, THM1:A|BC, GWI, WIGNER4 or @file.json")
    common(p, optimizer=False)

    p = sub.add_parser("optimize", help="maximize an inequality over measurement angles")
    p.add_argument("--state", required=True)
    p.add_argument("--ineq", required=True)
    common(p)

    p = sub.add_parser("certify", help="optimize every cut of a family")
    p.add_argument("--state", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--family", default="WLR")
    p.add_argument("--variants", action="store_true", help="also optimize the other labellings of each cut")
    common(p)

    p = sub.add_parser("threshold", help="white-noise visibility threshold")
    p.add_argument("--state", required=True)
    p.add_argument("--family", default="THM1")
    p.add_argument("--ineq")
    common(p)

    p = sub.add_parser("scan", help="minimum violation over a state-parameter grid")
    p.add_argument("--family", required=True, choices=("GENW3", "GENW4", "genw3", "genw4"))
    p.add_argument("--grid", required=True, help="COUNT or TLO:THI:TN,MLO:MHI:MN")
    p.add_argument("--nu", type=float, default=math.pi / 4)
    common(p)

    p = sub.add_parser("svetlichny", help="maximize |S| over measurement angles")
    p.add_argument("--state", required=True)
    p.add_argument("--n", type=int)
    common(p)

    p = sub.add_parser("selftest", help="exact classical bounds of every family")
    common(p, optimizer=False)

    p = sub.add_parser("run", help="run a JSON config file")
    p.add_argument("config")
    return parser


def config_from_args(argv: Sequence[str]) -> RunConfig:
    args = vars(build_parser().parse_args(list(argv)))
    if args["command"] == "run":
        return RunConfig.from_json(_load_json(args["config"]))
    args = {k: v for k, v in args.items() if v is not None}
    return RunConfig(**args)


def _fail(kind: str, message: str, code: int, diagnostics: Optional[dict] = None) -> int:
    err = {"error": kind, "message": message, "exit_code": code}
    if diagnostics:
        err["diagnostics"] = diagnostics
    sys.stderr.write(json.dumps(_round(err), sort_keys=True) + "\n")
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = config_from_args(argv)
        return run(cfg)
    except NumericalFailure as exc:
        return _fail("numerical-failure", str(exc), 3, exc.diagnostics)
    except (WLRError, ValueError, TypeError, KeyError) as exc:
        return _fail(type(exc).__name__, str(exc), 2)
    except OSError as exc:
        return _fail("io-error", str(exc), 2)


if __name__ == "__main__":
    sys.exit(main())
