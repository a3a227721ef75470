"""Command-line entry point: ``schwinger <subcommand> [--config FILE] [--set key=value ...]``.

Configuration is a flat ``key = value`` text file (``#`` starts a comment);
``--set`` overrides win over the file, which wins over the built-in
defaults. Unknown keys and malformed values are rejected before any
computation starts.

Exit codes: 0 success, 1 identity failure, 2 configuration error,
3 solver failure. Set ``SCHWINGER_NUM_THREADS`` to cap BLAS/LAPACK threads.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import os
import re
import sys
from dataclasses import dataclass, field

from schwinger import operators
from schwinger.anomaly import (
    ExtrapolationError,
    Mollifier,
    QuadratureError,
    Schedule,
    compute_CA,
    compute_CA_prime,
)
from schwinger.assembly import (
    BOUNDARIES,
    COUPLING_MODES,
    SCHEMES,
    SolverError,
    build_full_hamiltonian,
    gauge_invariance_full,
    spectrum,
)
from schwinger.fock import TruncationError, make_sector
from schwinger.gauge import verify_chirality_shift, verify_gauge_invariance
from schwinger.params import ConfigError, ModelParams
from schwinger.verify import SuiteConfig, run_suite

EXIT_OK, EXIT_IDENTITY, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
THREADS_ENV = "SCHWINGER_NUM_THREADS"

_PI_RE = re.compile(r"^([+-]?[0-9.]*(?:[eE][+-]?\d+)?)\s*\*?\s*pi(?:\s*/\s*([0-9.]+))?$")


def parse_float(text: str) -> float:
    """Float literal, or a multiple of pi such as ``2pi``, ``2*pi``, ``pi/4``."""
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        pass
    m = _PI_RE.match(text)
    if not m:
        raise ConfigError(f"not a number: {text!r}")
    coeff = m.group(1)
    coeff = 1.0 if coeff in ("", "+") else -1.0 if coeff == "-" else float(coeff)
    denom = float(m.group(2)) if m.group(2) else 1.0
    return coeff * math.pi / denom


def parse_int(text: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise ConfigError(f"not an integer: {text!r}") from None


def parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(parse_int(t) for t in text.split(",") if t.strip())


def parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def parse_sections(text: str) -> tuple[str, ...]:
    known = SuiteConfig().sections
    names = tuple(t.strip() for t in text.split(",") if t.strip())
    unknown = [n for n in names if n not in known]
    if unknown or not names:
        raise ConfigError(f"sections must be a comma list drawn from {known}, got {text!r}")
    return names


def _choice(*options):
    def parse(text: str) -> str:
        t = text.strip()
        if t not in options:
            raise ConfigError(f"expected one of {options}, got {t!r}")
        return t
    return parse


def _optional_int(text: str):
    return None if text.strip().lower() in ("", "none", "auto") else parse_int(text)


# key -> (parser, default)
SCHEMA = {
    "L": (parse_float, 2 * math.pi),
    "e": (parse_float, 1.0),
    "a": (parse_float, 0.0),
    "N_cut": (parse_int, 2),
    "max_particles": (parse_int, 2),
    "charge": (parse_int, 0),
    "M": (parse_int_list, (8,)),
    "m_max": (_optional_int, None),
    "boundary": (_choice(*BOUNDARIES), "gamma-twisted"),
    "coupling_mode": (_choice(*COUPLING_MODES), "krf2"),
    "scheme": (_choice(*SCHEMES), "fd"),
    "method": (_choice("auto", "dense", "iterative"), "auto"),
    "k": (parse_int, 1),
    "tol": (parse_float, 1e-8),
    "op": (_choice(*operators.BUILDERS), "Q5_reg"),
    "m": (parse_int, 0),
    "mollifier": (_choice("bump", "poly"), "bump"),
    "depth": (parse_int, 5),
    "quantity": (_choice("CA", "CA_prime", "both"), "both"),
    "orientation": (_choice("corrected", "literal"), "corrected"),
    "include_coulomb": (parse_bool, False),
    "seed": (parse_int, 0),
    "sections": (parse_sections, SuiteConfig().sections),
}

# defaults that differ per subcommand
COMMAND_DEFAULTS = {
    "verify": {"N_cut": 4, "max_particles": 4},
    "gauge-check": {"N_cut": 4, "max_particles": 4},
}


def read_config_file(path: str) -> dict[str, str]:
    raw = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        raw[key] = value
    return raw


def parse_overrides(items) -> dict[str, str]:
    raw = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = (s.strip() for s in item.split("=", 1))
        raw[key] = value
    return raw


@dataclass
class RunConfig:
    """Validated parameters for one subcommand plus output destinations."""

    command: str
    values: dict = field(default_factory=dict)
    out: str | None = None
    report: str | None = None

    @classmethod
    def build(cls, command: str, raw: dict[str, str], out=None, report=None) -> "RunConfig":
        values = {k: v for k, (_, v) in SCHEMA.items()}
        values.update(COMMAND_DEFAULTS.get(command, {}))
        for key in sorted(raw):
            key_to = "M" if key == "M_grid" else key
            if key_to not in SCHEMA:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                values[key_to] = SCHEMA[key_to][0](raw[key])
            except ConfigError as exc:
                raise ConfigError(f"{key}: {exc}") from None
        cfg = cls(command, values, out, report)
        cfg.validate()
        return cfg

    def __getitem__(self, key):
        return self.values[key]

    def model(self, M: int | None = None) -> ModelParams:
        return ModelParams(L=self["L"], e=self["e"], a=self["a"], N_cut=self["N_cut"],
                           max_particles=self["max_particles"],
                           M_grid=self["M"][0] if M is None else M)

    def validate(self) -> None:
        if not self["M"]:
            raise ConfigError("M needs at least one value")
        for M in self["M"]:
            self.model(M)
        if self["k"] < 1:
            raise ConfigError(f"k must be >= 1, got {self['k']}")
        if self["depth"] < 2:
            raise ConfigError(f"depth must be >= 2, got {self['depth']}")
        if self["tol"] <= 0:
            raise ConfigError("tol must be positive")


def fmt(x: float) -> str:
    return f"{x:.17g}"


class _Output:
    """Write to a file if a path is given, otherwise to stdout."""

    def __init__(self, path):
        self.path = path

    def write(self, text: str) -> None:
        if self.path is None:
            sys.stdout.write(text)
        else:
            with open(self.path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=float) + "\n"


# --- subcommands ---------------------------------------------------------------------------

def cmd_basis(cfg: RunConfig) -> int:
    sector = make_sector(cfg["N_cut"], cfg["max_particles"], cfg["charge"])
    _Output(cfg.out).write(sector.dump())
    return EXIT_OK


def cmd_op(cfg: RunConfig) -> int:
    params = cfg.model()
    sector = make_sector(cfg["N_cut"], cfg["max_particles"], cfg["charge"])
    name = cfg["op"]
    m = cfg["m_max"] if name == "coulomb" else cfg["m"]
    op = operators.BUILDERS[name](sector, params, m)
    _Output(cfg.out).write(op.dump())
    return EXIT_OK


def _limit_rows(quantity, component, kind, result) -> list[str]:
    return [f"{quantity},{component},{kind},{fmt(th)},{fmt(eps)},{fmt(est)},{fmt(ext)}"
            for th, eps, est, ext in result.rows]


def cmd_anomaly(cfg: RunConfig) -> int:
    """Convergence tables for ``C_A`` and/or ``C_A'``; a final ``limit`` row per quantity."""
    a, L, kind = cfg["a"], cfg["L"], cfg["mollifier"]
    chi = Mollifier(kind, L)
    schedule = Schedule(n_theta=cfg["depth"])
    lines = ["quantity,component,mollifier,theta,eps,estimate,extrapolant"]
    if cfg["quantity"] in ("CA", "both"):
        res = compute_CA(a, L, chi, schedule, full=True)
        lines += _limit_rows("CA", "kernel", kind, res["kernel"])
        lines += _limit_rows("CA", "constant", kind, res["constant"])
        lines.append(f"CA,limit,{kind},0,0,{fmt(res['estimate'])},{fmt(res['estimate'])}")
    if cfg["quantity"] in ("CA_prime", "both"):
        res = compute_CA_prime(a, L, chi, schedule, full=True)
        lines += _limit_rows("CA_prime", "kernel", kind, res["first"])
        lines += _limit_rows("CA_prime", "chi_prime", kind, res["chi_prime"])
        lines.append(f"CA_prime,limit,{kind},0,0,{fmt(res['estimate'])},{fmt(res['estimate'])}")
    _Output(cfg.out).write("\n".join(lines) + "\n")
    return EXIT_OK


def _public(rep: dict) -> dict:
    keys = ("identity", "residual", "interior_dim", "boundary_dim", "passed", "witness")
    return {k: rep[k] for k in keys if k in rep}


def cmd_gauge_check(cfg: RunConfig) -> int:
    params = cfg.model()
    sector = make_sector(cfg["N_cut"], cfg["max_particles"], 0)
    literal = cfg["orientation"] == "literal"
    reports = [verify_chirality_shift(sector, literal=literal)]
    reports += verify_gauge_invariance(sector, params, literal=literal)
    reports.append(gauge_invariance_full(params, sector, coupling_mode=cfg["coupling_mode"],
                                         include_coulomb=cfg["include_coulomb"]))
    reports = [_public(r) for r in reports]
    _Output(cfg.out).write(_json(reports))
    return EXIT_OK if all(r["passed"] for r in reports) else EXIT_IDENTITY


def cmd_verify(cfg: RunConfig) -> int:
    suite = SuiteConfig(params=cfg.model(), coupling_mode=cfg["coupling_mode"], seed=cfg["seed"],
                        sections=cfg["sections"])
    report = run_suite(suite)
    _Output(cfg.out).write(_json(report))
    if report["passed"]:
        return EXIT_OK
    for name, section in report["sections"].items():
        if not section["passed"]:
            failed = [c for c in section["checks"] if not c["passed"]]
            print(f"FAILED section {name}:", file=sys.stderr)
            print(_json(failed), file=sys.stderr, end="")
    return EXIT_IDENTITY


def _monotone(values: list[float]) -> dict:
    steps = [b - a for a, b in zip(values, values[1:])]
    direction = ("increasing" if all(s > 0 for s in steps)
                 else "decreasing" if all(s < 0 for s in steps) else "none")
    shrinking = all(abs(b) <= abs(a) for a, b in zip(steps, steps[1:]))
    return {"direction": direction, "monotone": direction != "none" and shrinking, "steps": steps}


def cmd_spectrum(cfg: RunConfig) -> int:
    sector = make_sector(cfg["N_cut"], cfg["max_particles"], 0)
    Ms = cfg["M"]
    multi = len(Ms) > 1
    lines = ["M,index,eigenvalue,residual" if multi else "index,eigenvalue,residual"]
    ground = []
    for M in Ms:
        params = cfg.model(M)
        H = build_full_hamiltonian(params, sector, cfg["m_max"], coupling_mode=cfg["coupling_mode"],
                                   boundary=cfg["boundary"], scheme=cfg["scheme"])
        pairs = spectrum(H, k=cfg["k"], method=cfg["method"], tol=cfg["tol"])
        ground.append(pairs[0][0])
        for i, (w, r) in enumerate(pairs):
            prefix = f"{M}," if multi else ""
            lines.append(f"{prefix}{i},{fmt(w)},{fmt(r)}")
    _Output(cfg.out).write("\n".join(lines) + "\n")
    if cfg.report is not None:
        params = cfg.model()
        report = {
            "ground_state": {str(M): g for M, g in zip(Ms, ground)},
            "refinement": _monotone(ground),
            "gauge_invariance_full": _public(gauge_invariance_full(
                params, sector, coupling_mode=cfg["coupling_mode"],
                include_coulomb=cfg["include_coulomb"])),
        }
        _Output(cfg.report).write(_json(report))
    return EXIT_OK


COMMANDS = {
    "basis": cmd_basis,
    "op": cmd_op,
    "anomaly": cmd_anomaly,
    "gauge-check": cmd_gauge_check,
    "verify": cmd_verify,
    "spectrum": cmd_spectrum,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="schwinger", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "basis": "dump the basis of one charge sector",
        "op": "dump one operator matrix as 'row col re im'",
        "anomaly": "convergence table of the point-splitting limits (CSV)",
        "gauge-check": "large gauge identities (JSON)",
        "verify": "full identity suite (JSON)",
        "spectrum": "lowest eigenvalues of the full Hamiltonian (CSV)",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="key = value file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
        p.add_argument("--out", help="write the primary output here instead of stdout")
        if name == "spectrum":
            p.add_argument("--report", help="write a JSON report (refinement, gauge check)")
    return parser


def _thread_limit():
    value = os.environ.get(THREADS_ENV)
    if value is None:
        return contextlib.nullcontext()
    try:
        n = int(value)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {value!r}") from None
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {value!r}")
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = read_config_file(args.config) if args.config else {}
        raw.update(parse_overrides(args.set))
        cfg = RunConfig.build(args.command, raw, args.out, getattr(args, "report", None))
        with _thread_limit():
            return COMMANDS[args.command](cfg)
    except (ConfigError, TruncationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, QuadratureError, ExtrapolationError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
