"""Command-line entry point.

Subcommands print CSV (or JSON with ``--format json``) to stdout or to
``--out``. Exit codes: 0 success, 1 numeric domain error or failed suite,
2 usage error.
"""
import argparse
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
import json
import math
import os
import sys
import time

from . import capacity, closedform, tables, verify
from .channels import ChannelSpec
from .closedform import InputParams
from .linalg import DomainError, PreconditionError
from .qinfo import coherent_information, reverse_coherent_information

SUBCOMMANDS = ("info", "capacity", "curve", "noise-threshold", "scan-theta", "verify")
FIGURES = ("fig4", "fig6", "fig7", "fig8")
JOBS_ENV = "REVCAP_JOBS"


@dataclass(frozen=True)
class CommandRequest:
    subcommand: str
    channel: str = None
    eta: float = None
    alpha: float = None
    epsilon: float = None
    seed: int = None
    p: tuple = ()
    theta: float = math.pi / 2
    phi: float = 0.0
    measure: str = "both"
    method: str = "generic"
    sweep: tuple = None
    raw: bool = False
    extrema: bool = False
    points: int = 181
    suites: tuple = ()
    tol_scale: float = 1.0
    errata_out: str = None
    out: str = None
    fmt: str = "csv"
    jobs: int = 1

    def measures(self):
        return closedform.MEASURES if self.measure == "both" else (self.measure,)

    def channel_spec(self):
        return ChannelSpec(self.channel, eta=self.eta, alpha=self.alpha,
                           epsilon=self.epsilon, seed=self.seed)


def figure_presets(figure_id):
    """Requests reproducing one figure; fig6 needs two sweeps."""
    if figure_id == "fig4":
        return CommandRequest("curve", channel="ad", sweep=(0.0, 1.0, 100))
    if figure_id == "fig6":
        return [
            CommandRequest("noise-threshold", channel="gad", measure="ci", sweep=(0.5, 1.0, 100)),
            CommandRequest("noise-threshold", channel="gad", measure="rci", sweep=(0.0, 1.0, 100)),
        ]
    if figure_id == "fig7":
        return CommandRequest("scan-theta", channel="gad", eta=0.62, alpha=0.5,
                              p=(0.25, 0.5), measure="ci")
    if figure_id == "fig8":
        return CommandRequest("scan-theta", channel="gad", eta=0.75, alpha=0.4,
                              p=(0.25, 0.5), measure="rci")
    raise PreconditionError(f"unknown figure id {figure_id!r}; expected one of {', '.join(FIGURES)}")


# -- validation -----------------------------------------------------------------------

def _forbid(req, names):
    defaults = CommandRequest(req.subcommand)
    for name in names:
        if getattr(req, name) != getattr(defaults, name):
            flag = {"p": "--p", "sweep": "--eta-from/--eta-to/--steps"}.get(name, "--" + name.replace("_", "-"))
            raise PreconditionError(f"{flag} not accepted for {req.subcommand}")


def _require_family(req, allowed):
    if req.channel not in allowed:
        raise PreconditionError(f"{req.subcommand} supports --channel {' or '.join(allowed)}, got {req.channel!r}")


def validate(req):
    """Check flag combinations before any computation."""
    sub = req.subcommand
    if req.jobs < 1:
        raise PreconditionError(f"jobs must be at least 1, got {req.jobs}")
    if sub == "info":
        _forbid(req, ("sweep", "raw", "extrema", "suites"))
        if len(req.p) != 1:
            raise PreconditionError("info needs exactly one --p")
        req.channel_spec()
        InputParams(req.p[0], req.theta, req.phi)
    elif sub == "capacity":
        _forbid(req, ("p", "sweep", "extrema", "suites", "method"))
        _require_family(req, ("ad", "gad"))
        req.channel_spec()
    elif sub == "curve":
        _forbid(req, ("p", "eta", "extrema", "suites", "method"))
        _require_family(req, ("ad", "gad"))
        if req.channel == "gad" and req.alpha is None:
            raise PreconditionError("alpha required for gad")
        if req.channel == "ad" and req.alpha is not None:
            raise PreconditionError("alpha not accepted for ad")
        if req.alpha is not None:
            ChannelSpec("gad", eta=1.0, alpha=req.alpha)
        capacity.eta_grid(*req.sweep)
    elif sub == "noise-threshold":
        _forbid(req, ("p", "alpha", "extrema", "suites", "method", "raw"))
        _require_family(req, ("gad",))
        if (req.eta is None) == (req.sweep is None):
            raise PreconditionError("noise-threshold needs either --eta or an eta sweep")
        if req.sweep is not None:
            capacity.eta_grid(*req.sweep)
        elif not 0.0 <= req.eta <= 1.0:
            raise PreconditionError(f"eta must lie in [0, 1], got {req.eta!r}")
    elif sub == "scan-theta":
        _forbid(req, ("sweep", "suites", "method", "raw"))
        _require_family(req, ("ad", "gad"))
        req.channel_spec()
        if not req.p:
            raise PreconditionError("scan-theta needs at least one --p")
        for p in req.p:
            if not 0.0 < p < 1.0:
                raise PreconditionError(f"p must lie in (0, 1), got {p!r}")
        if req.points < 2:
            raise PreconditionError(f"points must be at least 2, got {req.points}")
    elif sub == "verify":
        _forbid(req, ("channel", "eta", "alpha", "epsilon", "seed", "p", "sweep", "raw", "extrema"))
        if req.tol_scale <= 0.0:
            raise PreconditionError(f"tol-scale must be positive, got {req.tol_scale!r}")
        for name in req.suites:
            if name not in verify.SUITES:
                raise PreconditionError(f"unknown suite {name!r}")
    else:
        raise PreconditionError(f"unknown subcommand {sub!r}")
    return req


# -- execution ------------------------------------------------------------------------

@contextmanager
def _mapper(jobs):
    if jobs == 1:
        yield map
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        yield pool.map


def _info(req):
    params = InputParams(req.p[0], req.theta, req.phi)
    spec = req.channel_spec()
    methods = ("generic", "closed") if req.method == "both" else (req.method,)
    rows = []
    for m in req.measures():
        vals = {}
        for method in methods:
            vals[method] = _info_value(spec, m, method, params)
        diff = abs(vals["generic"] - vals["closed"]) if len(vals) == 2 else None
        rows.extend((m, method, vals[method], diff) for method in methods)
    return ["measure", "method", "value", "abs_diff"], rows


def _info_value(spec, measure, method, params):
    if method == "generic":
        ch = spec.build()
        rho, _ = closedform.general_input(params)
        if ch.in_dim != 2:
            raise PreconditionError(f"info needs a qubit-input channel, got input dim {ch.in_dim}")
        fn = coherent_information if measure == "ci" else reverse_coherent_information
        return fn(ch, rho).value
    if spec.family in closedform.FAMILIES:
        return closedform.closed_form(spec.family, measure, spec.eta, spec.alpha or 0.0, params).value
    if spec.family == "erasure":
        if params.theta != math.pi / 2:
            raise PreconditionError("closed form for erasure needs a diagonal input (theta = pi/2)")
        ci, rci = capacity.erasure_reference(spec.epsilon, params.p)
        return ci if measure == "ci" else rci
    raise PreconditionError(f"closed form available for ad, gad and erasure, not {spec.family}")


def _capacity(req):
    spec = req.channel_spec()
    rows = []
    for m in req.measures():
        r = capacity.optimize_population(spec, m)
        rows.append((m, r.argmax_p, r.value, r.raw_value, r.evaluations))
    return ["measure", "argmax_p", "value", "raw_value", "evaluations"], rows


def _curve(req, mapper):
    curve = capacity.capacity_curve(req.channel, req.sweep, alpha=req.alpha, raw=req.raw, mapper=mapper)
    header = ["eta"] + (["alpha"] if req.channel == "gad" else [])
    for m in req.measures():
        header += [f"value_{m}", f"p_{m}"]
    rows = []
    for r in curve:
        row = [r.eta] + ([r.alpha] if req.channel == "gad" else [])
        for m in req.measures():
            row += [r.value_ci, r.p_ci] if m == "ci" else [r.value_rci, r.p_rci]
        rows.append(row)
    return header, rows


def _noise_threshold(req, mapper):
    etas = [req.eta] if req.sweep is None else capacity.eta_grid(*req.sweep)
    rows = []
    for m in req.measures():
        found = list(mapper(capacity.noise_threshold, [m] * len(etas), etas))
        rows.extend((m, eta, a) for eta, a in zip(etas, found))
    return ["measure", "eta", "alpha_star"], rows


def _scan_theta(req):
    alpha = req.alpha or 0.0
    rows = []
    for m in req.measures():
        for p in req.p:
            if req.extrema:
                res = closedform.extremum_scan(req.channel, m, req.eta, alpha, p)
                rows.extend((m, p, e.theta, e.kind) for e in res.extrema)
            else:
                prof = closedform.theta_profile(req.channel, m, req.eta, alpha, p, req.points)
                rows.extend((m, p, t, v) for t, v in prof)
    return ["measure", "p", "theta", "kind" if req.extrema else "value"], rows


def _verify(req, mapper, err):
    names = req.suites or tuple(verify.SUITES)
    reports = verify.run_suites(names, mapper, req.tol_scale, clock=time.perf_counter)
    rows = []
    errata = []
    for rep in reports:
        rows.append((rep.suite, rep.cases, rep.failures, len(rep.errata)))
        errata.extend(rep.errata)
        print(f"{rep.suite}: {rep.wall_time:.2f} s", file=err)
        for msg in rep.messages:
            print(f"FAIL {rep.suite}: {msg}", file=err)
    if req.errata_out:
        with open(req.errata_out, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(errata, fh, indent=2)
            fh.write("\n")
    failed = sum(r.failures for r in reports)
    return ["suite", "cases", "failures", "errata"], rows, (1 if failed else 0)


def execute(req, err=sys.stderr):
    """Run one validated request; returns ``(header, rows, exit_code)``."""
    with _mapper(req.jobs) as mapper:
        if req.subcommand == "info":
            return (*_info(req), 0)
        if req.subcommand == "capacity":
            return (*_capacity(req), 0)
        if req.subcommand == "curve":
            return (*_curve(req, mapper), 0)
        if req.subcommand == "noise-threshold":
            return (*_noise_threshold(req, mapper), 0)
        if req.subcommand == "scan-theta":
            return (*_scan_theta(req), 0)
        return _verify(req, mapper, err)


# -- argument parsing -------------------------------------------------------------------

def _common(sp, channel=True, sweep=False):
    if channel:
        sp.add_argument("--channel", choices=("identity", "ad", "gad", "erasure", "random"))
        sp.add_argument("--eta", type=float)
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--epsilon", type=float)
        sp.add_argument("--seed", type=int)
    if sweep:
        sp.add_argument("--eta-from", type=float)
        sp.add_argument("--eta-to", type=float)
        sp.add_argument("--steps", type=int)
    sp.add_argument("--measure", choices=("ci", "rci", "both"), default="both")
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("csv", "json"), default="csv", dest="fmt")
    sp.add_argument("--jobs", type=int)


def build_parser():
    parser = argparse.ArgumentParser(prog="revcap", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")

    sp = sub.add_parser("info", help="information of one input state")
    _common(sp)
    sp.add_argument("--p", type=float, action="append")
    sp.add_argument("--theta", type=float, default=math.pi / 2)
    sp.add_argument("--phi", type=float, default=0.0)
    sp.add_argument("--method", choices=("generic", "closed", "both"), default="generic")

    sp = sub.add_parser("capacity", help="optimized single-letter capacity")
    _common(sp)

    sp = sub.add_parser("curve", help="capacities over an eta sweep")
    _common(sp, sweep=True)
    sp.add_argument("--raw", action="store_true", help="report unclamped values")

    sp = sub.add_parser("noise-threshold", help="largest tolerable alpha for GAD")
    _common(sp, sweep=True)

    sp = sub.add_parser("scan-theta", help="information or extrema as theta varies")
    _common(sp)
    sp.add_argument("--p", type=float, action="append")
    sp.add_argument("--extrema", action="store_true")
    sp.add_argument("--points", type=int, default=181)

    sp = sub.add_parser("verify", help="run verification suites")
    _common(sp, channel=False)
    sp.add_argument("--suite", action="append", choices=("all",) + tuple(verify.SUITES))
    sp.add_argument("--tol-scale", type=float, default=1.0)
    sp.add_argument("--errata-out")

    sp = sub.add_parser("figure", help="reproduce one figure's data")
    sp.add_argument("figure_id", metavar="ID")
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("csv", "json"), default="csv", dest="fmt")
    sp.add_argument("--jobs", type=int)
    return parser


def _jobs(value, env):
    if value is not None:
        return value
    raw = env.get(JOBS_ENV)
    if raw is None or raw == "":
        return 1
    try:
        return int(raw)
    except ValueError:
        raise PreconditionError(f"{JOBS_ENV} must be an integer, got {raw!r}") from None


def request_from_args(ns, env):
    if getattr(ns, "suite", None) is not None and "all" in ns.suite:
        suites = ()
    else:
        suites = tuple(getattr(ns, "suite", None) or ())
    sweep = None
    bounds = [getattr(ns, k, None) for k in ("eta_from", "eta_to", "steps")]
    if any(b is not None for b in bounds):
        if any(b is None for b in bounds[:2]):
            raise PreconditionError("both --eta-from and --eta-to are required for a sweep")
        sweep = (bounds[0], bounds[1], 100 if bounds[2] is None else bounds[2])
    elif ns.subcommand == "curve":
        raise PreconditionError("curve needs --eta-from and --eta-to")
    fields = dict(
        subcommand=ns.subcommand,
        channel=getattr(ns, "channel", None),
        eta=getattr(ns, "eta", None),
        alpha=getattr(ns, "alpha", None),
        epsilon=getattr(ns, "epsilon", None),
        seed=getattr(ns, "seed", None),
        p=tuple(getattr(ns, "p", None) or ()),
        measure=ns.measure,
        sweep=sweep,
        raw=getattr(ns, "raw", False),
        extrema=getattr(ns, "extrema", False),
        suites=suites,
        out=ns.out,
        fmt=ns.fmt,
        jobs=_jobs(ns.jobs, env),
    )
    for name in ("theta", "phi", "method", "points", "tol_scale", "errata_out"):
        if hasattr(ns, name):
            fields[name] = getattr(ns, name)
    return CommandRequest(**fields)


def _emit(text, out, stdout):
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        stdout.write(text)


def run(argv=None, stdout=None, stderr=None, env=None):
    """Parse ``argv``, execute and return the exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    env = os.environ if env is None else env
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        if ns.subcommand == "figure":
            preset = figure_presets(ns.figure_id)
            jobs = _jobs(ns.jobs, env)
            requests = [replace(r, fmt=ns.fmt, jobs=jobs) for r in
                        (preset if isinstance(preset, list) else [preset])]
            out, fmt = ns.out, ns.fmt
        else:
            requests = [request_from_args(ns, env)]
            out, fmt = requests[0].out, requests[0].fmt
        for r in requests:
            validate(r)
        header, rows, code = None, [], 0
        for r in requests:
            h, rs, c = execute(r, stderr)
            header = header or h
            rows.extend(rs)
            code = max(code, c)
    except DomainError as exc:
        print(f"domain error: {exc}", file=stderr)
        return 1
    except ValueError as exc:
        print(str(exc), file=stderr)
        return 2
    _emit(tables.render(header, rows, fmt), out, stdout)
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
