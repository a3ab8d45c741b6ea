"""Command-line front end: feasibility checks, protocol runs and parameter sweeps.

Exit codes: 0 ok or feasible, 1 usage or validation error, 2 infeasible,
3 internal error. Numeric arguments accept expressions such as ``pi/8``,
``3*pi/8`` or ``2/3``.
"""

from __future__ import annotations

import argparse
import ast
import csv
import io
import math
import operator
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import channel, feasibility as fz, majorize, protocols
from .errors import DomainError, InfeasibleError, MatchingError
from .qstate import make_ghz, make_link_state, make_w

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_INTERNAL = 0, 1, 2, 3
THREADS_ENV = "ASSISTED_TELEPORT_THREADS"
MAX_GRID_CELLS = 10**6
DEFAULT_SEED = 20240601


class UsageError(Exception):
    """Bad command-line input; maps to exit code 1."""


# -- argument parsing ------------------------------------------------------

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_NAMES = {"pi": math.pi}
_FUNCS = {"sqrt": math.sqrt}


def _eval_node(node):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        return _UNARY[type(node.op)](_eval_node(node.operand))
    if (
        isinstance(node, ast.Call)
        and isinstance(node.func, ast.Name)
        and node.func.id in _FUNCS
        and len(node.args) == 1
        and not node.keywords
    ):
        return _FUNCS[node.func.id](_eval_node(node.args[0]))
    raise ValueError("unsupported expression")


def parse_number(text: str) -> float:
    """Evaluate a numeric literal or a small arithmetic expression in ``pi``."""
    try:
        value = _eval_node(ast.parse(text.strip(), mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError, OverflowError) as exc:
        raise argparse.ArgumentTypeError(f"cannot parse {text!r} as a number") from exc
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"{text!r} is not finite")
    return value


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- reports ---------------------------------------------------------------


@dataclass
class Report:
    """Summary key/values plus an optional table; rendered as text or CSV."""

    summary: dict = field(default_factory=dict)
    table: list[dict] = field(default_factory=list)
    exit_code: int = EXIT_OK


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".9g")
    return str(value)


def render_csv(report: Report) -> str:
    rows = report.table or [report.summary]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(rows[0].keys())
    for row in rows:
        writer.writerow(_fmt(v) for v in row.values())
    return buf.getvalue()


def render_human(report: Report) -> str:
    lines = [f"{k}: {_fmt(v)}" for k, v in report.summary.items()]
    if report.table:
        keys = list(report.table[0].keys())
        cells = [[_fmt(r[k]) for k in keys] for r in report.table]
        widths = [max(len(k), *(len(c[i]) for c in cells)) for i, k in enumerate(keys)]
        if lines:
            lines.append("")
        lines.append("  ".join(k.ljust(w) for k, w in zip(keys, widths)).rstrip())
        lines.extend("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells)
    return "\n".join(lines) + "\n"


def write_atomic(path: str, text: str) -> None:
    """Write via a temp file in the target directory so errors leave nothing behind."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise UsageError(f"{THREADS_ENV} must be an integer, got {raw!r}") from exc
    if n < 1:
        raise UsageError(f"{THREADS_ENV} must be positive, got {n}")
    return n


# -- shared helpers --------------------------------------------------------


def _need(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise UsageError(f"--{name.replace('_', '-')} is required here")


def _sqrt_weight(name: str, value: float) -> float:
    if not 0 <= value <= 1:
        raise UsageError(f"--{name} must lie in [0, 1], got {value}")
    return math.sqrt(value)


def _w_amplitudes(args) -> tuple[float, float, float]:
    """(alpha, beta, gamma) from --beta2 and optional --gamma2 (default: alpha = gamma)."""
    _need(args, "beta2")
    if args.gamma2 is None:
        try:
            return fz.symmetric_slice(args.beta2)
        except DomainError as exc:
            raise UsageError(f"--beta2: {exc}") from exc
    alpha2 = 1 - args.beta2 - args.gamma2
    if alpha2 <= 0:
        raise UsageError("--beta2 + --gamma2 must be below 1")
    return math.sqrt(alpha2), _sqrt_weight("beta2", args.beta2), _sqrt_weight("gamma2", args.gamma2)


_MODELS = {
    "meas": "meas",
    "bank-measures": "meas",
    "bank_measures": "meas",
    "transfer": "trans",
    "trans": "trans",
}


def _feasibility_result(args) -> fz.FeasibilityResult:
    model = _MODELS[args.model]
    if args.resource == "ghz":
        _need(args, "alpha2")
        return fz.ghz_feasible(args.theta, _sqrt_weight("alpha2", args.alpha2))
    a, b, g = _w_amplitudes(args)
    if model == "meas":
        return fz.w_meas_feasible(args.theta, a, b, g)
    return fz.w_trans_feasible(args.theta, b)


def _pmax(args) -> float:
    model = _MODELS[args.model]
    if args.resource == "ghz":
        return fz.ghz_pmax(args.theta, math.sqrt(args.alpha2))
    a, b, g = _w_amplitudes(args)
    return fz.w_meas_pmax(args.theta, b, g) if model == "meas" else fz.w_trans_pmax(args.theta, b)


# -- commands --------------------------------------------------------------


def cmd_feasibility(args) -> Report:
    res = _feasibility_result(args)
    summary = {
        "resource": args.resource,
        "model": _MODELS[args.model],
        "theta": args.theta,
        "feasible": res.feasible,
        "binding_value": res.binding_value,
        "bound": res.bound,
        "margin": res.margin,
        "pmax": _pmax(args),
    }
    return Report(summary, exit_code=EXIT_OK if res.feasible else EXIT_INFEASIBLE)


def _run_protocol(args) -> protocols.ProtocolTranscript:
    name, theta, prob = args.protocol, args.theta, args.probabilistic
    if name.startswith("ghz"):
        _need(args, "alpha2")
        alpha = _sqrt_weight("alpha2", args.alpha2)
        if name == "ghz-meas":
            return protocols.run_ghz_bank_measures(theta, alpha, probabilistic=prob)
        if name == "ghz-transfer":
            return protocols.run_ghz_transfer(theta, alpha, probabilistic=prob)
        if prob:
            raise UsageError("--probabilistic is not available for ghz-deferred")
        return protocols.run_ghz_deferred(theta, alpha)
    if name.startswith("w-"):
        a, b, g = _w_amplitudes(args)
        if name == "w-meas":
            return protocols.run_w_bank_measures(theta, a, b, g, probabilistic=prob)
        return protocols.run_w_transfer(theta, a, b, g, probabilistic=prob)
    if name == "catalysis":
        _need(args, "c1")
        return protocols.run_catalysis(theta, args.c1)
    return protocols.run_routing(theta)


def cmd_simulate(args) -> Report:
    try:
        tr = _run_protocol(args)
    except InfeasibleError as exc:
        summary = {"protocol": args.protocol, "theta": args.theta, "feasible": False, "error": str(exc)}
        if exc.result is not None:
            summary.update(
                binding_value=exc.result.binding_value, bound=exc.result.bound, margin=exc.result.margin
            )
        return Report(summary, exit_code=EXIT_INFEASIBLE)
    summary = {
        "protocol": args.protocol,
        "theta": args.theta,
        "deterministic": tr.deterministic,
        "success_probability": tr.success_probability,
        "bank_bits": tr.total_bank_bits,
        "total_bits": tr.total_bits,
        "branches": len(tr.branches),
        "monotone": protocols.audit_monotonicity(tr),
    }
    if args.transcript:
        for i, rnd in enumerate(tr.rounds):
            summary[f"round_{i}"] = f"{rnd.actor}: {rnd.operation} [bits={rnd.bits}]"
    for key, value in tr.diagnostics.items():
        if isinstance(value, (int, float)):
            summary[key] = value
    table = [
        {
            "branch": i,
            "outcomes": " ".join(map(_outcome_str, b.outcomes)),
            "probability": f"{b.probability:.6f}",
            "bell_fidelity": f"{b.bell_fidelity:.6f}",
            "success": b.success,
        }
        for i, b in enumerate(tr.branches)
    ]
    return Report(summary, table)


def _outcome_str(o) -> str:
    if isinstance(o, tuple):
        k, ok = o
        return f"{k}" if ok else f"{k}!"
    return str(o)


_CURVE_DEFAULTS = {"ghz": (0.5, 1.0), "w-meas": (0.001, 0.999), "w-trans": (0.001, 0.999)}


def _curve_point(family: str, theta: float, x: float) -> tuple[float, float]:
    if family == "ghz":
        alpha = math.sqrt(x)
        tr = protocols.run_ghz_bank_measures(theta, alpha, probabilistic=True)
        return fz.ghz_pmax(theta, alpha), tr.success_probability
    a, b, g = fz.symmetric_slice(x)
    if family == "w-meas":
        tr = protocols.run_w_bank_measures(theta, a, b, g, probabilistic=True)
        return fz.w_meas_pmax(theta, b, g), tr.success_probability
    tr = protocols.run_w_transfer(theta, a, b, g, probabilistic=True)
    return fz.w_trans_pmax(theta, b), tr.success_probability


def cmd_pmax_curve(args) -> Report:
    lo, hi = _CURVE_DEFAULTS[args.family]
    start = lo if args.start is None else args.start
    stop = hi if args.stop is None else args.stop
    if args.samples < 1 or stop < start:
        raise UsageError(f"empty range: start={start}, stop={stop}, samples={args.samples}")
    params = np.linspace(start, stop, args.samples) if args.samples > 1 else np.array([start])
    thetas = args.theta or [math.pi / 8]
    rows = []
    for theta in thetas:
        for x in params:
            formula, simulated = _curve_point(args.family, theta, float(x))
            rows.append(
                {"param": float(x), "theta": theta, "pmax_formula": formula, "pmax_simulated": simulated}
            )
    return Report({}, rows)


def cmd_phase_diagram(args) -> Report:
    if args.theta:
        thetas = np.array(args.theta)
    else:
        n = args.theta_points
        thetas = (np.arange(n) + 1) / n * (math.pi / 4)
    m = args.beta2_points
    if thetas.size < 1 or m < 1:
        raise UsageError("phase diagram grid is empty")
    if thetas.size * m > MAX_GRID_CELLS:
        raise UsageError(f"grid of {thetas.size * m} cells exceeds the limit of {MAX_GRID_CELLS}")
    beta2s = (np.arange(m) + 1) / (m + 1)
    workers = thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            grid = fz.scan_phase_diagram(thetas, beta2s, executor=pool)
    else:
        grid = fz.scan_phase_diagram(thetas, beta2s)
    rows = [
        {
            "theta": c.theta,
            "beta2": c.beta2,
            "meas_feasible": c.meas_feasible,
            "trans_feasible": c.trans_feasible,
            "separation": c.separation,
        }
        for c in grid.cells
    ]
    return Report({}, rows)


def _read_matrix(args) -> np.ndarray:
    if (args.matrix is None) == (args.file is None):
        raise UsageError("give exactly one of --matrix and --file")
    if args.file is not None:
        try:
            with open(args.file) as fh:
                text = fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read --file: {exc}") from exc
        lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    else:
        lines = [ln for ln in args.matrix.split(";") if ln.strip()]
    try:
        rows = [[parse_number(tok) for tok in ln.replace(",", " ").split()] for ln in lines]
    except argparse.ArgumentTypeError as exc:
        raise UsageError(f"matrix entry: {exc}") from exc
    if not rows or any(len(r) != len(rows) for r in rows):
        raise UsageError("matrix must be square with one row per line")
    return np.array(rows)


def cmd_bvn(args) -> Report:
    d = _read_matrix(args)
    try:
        dec = majorize.bvn_decompose(d)
    except (DomainError, MatchingError) as exc:
        raise UsageError(f"not doubly stochastic: {exc}") from exc
    residual = float(np.max(np.abs(dec.reconstruct() - d)))
    table = [
        {"term": k, "weight": w, "permutation": " ".join(str(c + 1) for c in perm)}
        for k, (w, perm) in enumerate(dec.terms)
    ]
    return Report({"dimension": dec.dim, "terms": len(dec), "residual": residual}, table)


def _resource_state(args):
    if args.resource == "ghz":
        _need(args, "alpha2")
        return make_ghz(_sqrt_weight("alpha2", args.alpha2))
    return make_w(*_w_amplitudes(args))


def cmd_mu_star(args) -> Report:
    bank = _resource_state(args)
    link = make_link_state(args.theta)
    res = fz.minimax_mu_star(link, bank, args.polar_points, args.azimuth_points)
    summary = {
        "resource": args.resource,
        "theta": args.theta,
        "mu_star_upper": res.mu_star_upper,
        "best_polar": res.best_measurement["polar"],
        "best_azimuth": res.best_measurement["azimuth"],
        "hadamard_value": fz.worst_branch_lambda(link, bank, math.pi / 2, 0.0),
        "feasible": res.feasible,
    }
    return Report(summary, exit_code=EXIT_OK if res.feasible else EXIT_INFEASIBLE)


def cmd_channel(args) -> Report:
    t = channel.effective_contraction(args.theta)
    ell = channel.image_ellipsoid(t)
    summary = {
        "theta": args.theta,
        "semi_axes": " ".join(_fmt(a) for a in ell.semi_axes),
        "volume": ell.volume,
        "volume_ratio": ell.volume / (4 * math.pi / 3),
        "singlet_fraction": channel.max_singlet_fraction(make_link_state(args.theta)),
    }
    vectors = []
    if args.bloch is not None:
        vectors.append(np.array(args.bloch))
    rng = np.random.default_rng(args.seed)
    for _ in range(args.samples):
        v = rng.normal(size=3)
        vectors.append(v / np.linalg.norm(v) * rng.uniform() ** (1 / 3))
    table = []
    for v in vectors:
        out = channel.simulate_teleport_channel(args.theta, v)
        expect = t @ v
        table.append(
            {
                "x": v[0], "y": v[1], "z": v[2],
                "out_x": out[0], "out_y": out[1], "out_z": out[2],
                "deviation": float(np.max(np.abs(out - expect))),
            }
        )
    return Report(summary, table)


# -- parser ----------------------------------------------------------------


def _bloch(text: str) -> list[float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("Bloch vector needs three comma-separated components")
    return [parse_number(p) for p in parts]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="assisted-teleport", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, theta_required=True, fmt="human"):
        if theta_required:
            p.add_argument("--theta", type=parse_number, required=True, help="link angle, e.g. pi/8")
        p.add_argument("--format", choices=("human", "csv"), default=fmt)
        p.add_argument("--output", help="write the report to this file instead of stdout")

    def resource_args(p, models=True):
        p.add_argument("--resource", choices=("ghz", "w"), default="ghz")
        if models:
            p.add_argument("--model", choices=sorted(_MODELS), default="meas")
        p.add_argument("--alpha2", type=parse_number, help="GHZ weight alpha^2")
        p.add_argument("--beta2", type=parse_number, help="W weight beta^2")
        p.add_argument("--gamma2", type=parse_number, help="W weight gamma^2 (default: alpha = gamma)")

    p = sub.add_parser("feasibility", help="closed-form feasibility test")
    common(p)
    resource_args(p)
    p.set_defaults(func=cmd_feasibility)

    p = sub.add_parser("simulate", help="run a protocol and list its branches")
    common(p)
    p.add_argument(
        "--protocol",
        required=True,
        choices=("ghz-meas", "ghz-deferred", "ghz-transfer", "w-meas", "w-transfer", "catalysis", "routing"),
    )
    p.add_argument("--alpha2", type=parse_number)
    p.add_argument("--beta2", type=parse_number)
    p.add_argument("--gamma2", type=parse_number)
    p.add_argument("--c1", type=parse_number, help="catalyst weight in [1/2, 1)")
    p.add_argument("--probabilistic", action="store_true", help="best-effort run when infeasible")
    p.add_argument("--transcript", action="store_true", help="list every round")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("pmax-curve", help="optimal success probability along a parameter range")
    common(p, theta_required=False, fmt="csv")
    p.add_argument("--family", choices=tuple(_CURVE_DEFAULTS), default="ghz")
    p.add_argument("--theta", type=parse_number, action="append", help="repeatable; default pi/8")
    p.add_argument("--start", type=parse_number)
    p.add_argument("--stop", type=parse_number)
    p.add_argument("--samples", type=int, default=200)
    p.set_defaults(func=cmd_pmax_curve)

    p = sub.add_parser("phase-diagram", help="W symmetric-slice feasibility over (theta, beta^2)")
    common(p, theta_required=False, fmt="csv")
    p.add_argument("--theta", type=parse_number, action="append", help="fix theta rows instead of a sweep")
    p.add_argument("--theta-points", type=int, default=200)
    p.add_argument("--beta2-points", type=int, default=200)
    p.set_defaults(func=cmd_phase_diagram)

    p = sub.add_parser("bvn", help="Birkhoff-von Neumann decomposition of a doubly stochastic matrix")
    common(p, theta_required=False)
    p.add_argument("--matrix", help="rows separated by ';', entries by spaces or commas")
    p.add_argument("--file", help="file with one row of space-separated reals per line")
    p.set_defaults(func=cmd_bvn)

    p = sub.add_parser("mu-star", help="grid search over Bank measurements on K")
    common(p)
    resource_args(p, models=False)
    p.add_argument("--polar-points", type=int, default=64)
    p.add_argument("--azimuth-points", type=int, default=128)
    p.set_defaults(func=cmd_mu_star)

    p = sub.add_parser("channel", help="Bloch-ball image of teleportation through the link")
    common(p)
    p.add_argument("--bloch", type=_bloch, help="input Bloch vector x,y,z")
    p.add_argument("--samples", type=int, default=0, help="extra random inputs")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_channel)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        report = args.func(args)
        text = render_csv(report) if args.format == "csv" else render_human(report)
        if args.output:
            write_atomic(args.output, text)
        else:
            sys.stdout.write(text)
        return report.exit_code
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except Exception as exc:  # pragma: no cover - last-resort guard
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
