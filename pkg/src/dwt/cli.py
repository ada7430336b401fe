"""Command-line entry point.

    dwt resonances --law grav2d --order quartet --D 16 --stats
    dwt clusters --tuples out/resonances.csv
    dwt dynamics --tuples out/resonances.csv --cluster 0 --seed 1
    dwt cascade --law deepwater --p 0.25 --A0 0.25
    dwt spectrum --p 0.25 0.5 --n-A0 20
    dwt bench --law grav2d --order quartet --momentum --D 10 20 30

Every subcommand accepts ``--config FILE`` (``key = value`` lines named like
the long flags; command-line flags win), ``--out DIR`` (default ``$DWT_OUT``
or ``./dwt_out``) and ``--formats csv,json,svg``.  Each run writes
``manifest.json`` next to its outputs.  Exit codes: 0 success, 1 failure,
2 usage error, 3 time budget exceeded; failures print a JSON object to stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import mpmath
import numpy as np

from . import __version__
from .cascade import (
    CRITICAL,
    CascadeParams,
    Direction,
    Scheme,
    fit_spectrum,
    number,
    run_chain,
)
from .dispersion import Mode, parse_law, spectral_domain
from .dynamics import DEFAULT_ATOL, DEFAULT_RTOL, energy_exchange_report, integrate
from .errors import BudgetExceeded, DWTError, InsufficientDataError
from .radical import q_partition
from .resonance import (
    Order,
    ResonanceCondition,
    ResonantTuple,
    frequency_triads,
    solve_bruteforce,
    solve_qclass,
)
from .svg import loglog_plot
from .topology import build_clusters, classify, generate_system, integrable_flag, to_dot, to_text

OUT_ENV = "DWT_OUT"
FORMAT_VERSIONS = {"csv": 1, "json": 1, "svg": 1, "dot": 1, "txt": 1}
SUBCOMMANDS = ("resonances", "clusters", "dynamics", "cascade", "spectrum", "bench")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _emit_error("usage", message, 2, usage=self.format_usage().strip())
        sys.exit(2)


def _emit_error(kind: str, message: str, code: int, **extra) -> None:
    payload = {"error": kind, "message": message, "exit_code": code, **extra}
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)


@dataclass
class RunConfig:
    subcommand: str
    params: dict
    law: str | None
    D: int | None
    out: str
    formats: list
    seed: int | None
    workers: int
    tool_version: str = __version__


@dataclass
class _Outputs:
    root: Path
    formats: set
    written: list = field(default_factory=list)

    def wants(self, fmt: str) -> bool:
        return fmt in self.formats

    def write(self, name: str, text: str, fmt: str) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        with open(self.root / name, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        self.written.append({"file": name, "format": fmt, "format_version": FORMAT_VERSIONS[fmt]})

    def write_json(self, name: str, obj) -> None:
        self.write(name, dumps(obj), "json")

    def write_csv(self, name: str, header: list, rows) -> None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        self.write(name, buf.getvalue(), "csv")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# --------------------------------------------------------------------------
# argument grammar

def _formats(text: str) -> list:
    items = [s.strip() for s in text.split(",") if s.strip()]
    bad = [s for s in items if s not in ("csv", "json", "svg")]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown format(s): {', '.join(bad)}")
    return sorted(set(items))


def _float_or_critical(text: str):
    if text.strip().lower() == CRITICAL:
        return CRITICAL
    return float(text)


def build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key=value file supplying defaults for the long flags")
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./dwt_out)")
    common.add_argument("--formats", type=_formats, default=["csv", "json", "svg"], help="comma list of csv,json,svg")
    common.add_argument("--workers", type=int, default=1, help="worker processes for the solvers")
    common.add_argument("--seed", type=int, default=0, help="seed for random initial states")

    parser = _Parser(prog="dwt", description="Discrete wave turbulence toolkit.")
    parser.add_argument("--version", action="version", version=f"dwt {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True
    subs = {}

    p = sub.add_parser("resonances", parents=[common], help="solve resonance conditions on the lattice")
    _law_flags(p)
    p.add_argument("--tol", type=float, default=0.0, help="near-resonance tolerance (0 = exact)")
    p.add_argument("--momentum", action="store_true", help="also require wavevector resonance")
    p.add_argument("--trivial", action="store_true", help="keep trivial quartet pairings")
    p.add_argument("--solver", choices=("qclass", "bruteforce"), default="qclass", help="exact solver (tol > 0 always uses brute force)")
    p.add_argument("--budget", type=float, default=None, help="time budget in seconds")
    p.add_argument("--stats", action="store_true", help="write stats.json with mode and tuple counts")
    p.add_argument("--dump-qclasses", action="store_true", help="write qclasses.csv (m, n, gamma, q)")
    subs["resonances"] = p

    p = sub.add_parser("clusters", parents=[common], help="cluster report from tuples or frequencies")
    _source_flags(p)
    subs["clusters"] = p

    p = sub.add_parser("dynamics", parents=[common], help="integrate the system of one triad cluster")
    _source_flags(p)
    p.add_argument("--cluster", type=int, default=0, help="cluster id as listed by 'clusters'")
    p.add_argument("--initial", help="CSV with columns re,im, one row per mode (default: random unit state)")
    p.add_argument("--t-end", type=float, default=100.0)
    p.add_argument("--rtol", type=float, default=DEFAULT_RTOL)
    p.add_argument("--atol", type=float, default=DEFAULT_ATOL)
    p.add_argument("--Z", help="comma list of coupling coefficients, one per triad (default all 1)")
    p.add_argument("--delta", type=float, default=None, help="recurrence radius (default 1e-3 |B(0)|)")
    subs["dynamics"] = p

    p = sub.add_parser("cascade", parents=[common], help="run one sideband cascade chain")
    _cascade_flags(p)
    p.add_argument("--p", required=True, help="sideband ratio, or comma list with one value per step")
    p.add_argument("--A0", type=_float_or_critical, required=True, help="initial amplitude or 'critical'")
    subs["cascade"] = p

    p = sub.add_parser("spectrum", parents=[common], help="alpha map over (p, A0) sweeps")
    _cascade_flags(p)
    p.add_argument("--p", type=float, nargs="+", required=True, dest="p_values")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--A0", type=float, nargs="+", dest="A0_values", help="explicit amplitudes")
    group.add_argument("--n-A0", type=int, help="N amplitudes A_c j/N, j = 1..N (A_c critical)")
    p.add_argument("--exclude-terminal", action="store_true", help="fit without the stopping step")
    subs["spectrum"] = p

    p = sub.add_parser("bench", parents=[common], help="time brute force against q-class solving")
    p.add_argument("--law", default="grav2d")
    p.add_argument("--order", choices=[o.value for o in Order], default="quartet")
    p.add_argument("--D", type=int, nargs="*", default=[], dest="D_values", help="domain bounds (may be empty)")
    p.add_argument("--momentum", action="store_true")
    p.add_argument("--full-lattice", action="store_true")
    p.add_argument("--budget", type=float, default=None, help="time budget per solver call in seconds")
    subs["bench"] = p

    parser.subcommand_parsers = subs
    return parser


def _law_flags(p):
    p.add_argument("--law", default="grav2d", help="grav2d | deepwater | invroot2d | power:c=..,beta=..,dim=..")
    p.add_argument("--order", choices=[o.value for o in Order], default="triad")
    p.add_argument("--D", type=int, default=50, help="components range over 1..D")
    p.add_argument("--full-lattice", action="store_true", help="components range over -D..D")


def _source_flags(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--tuples", help="tuples CSV as written by 'resonances'")
    src.add_argument("--frequencies", help="CSV with columns label,frequency")
    p.add_argument("--tol", type=float, default=0.0, help="triad detection tolerance for --frequencies")


def _cascade_flags(p):
    p.add_argument("--law", default="deepwater")
    p.add_argument("--omega0", type=float, default=1.0)
    p.add_argument("--direction", choices=[d.value for d in Direction], default="upper")
    p.add_argument("--scheme", choices=[s.value for s in Scheme], default="integral")
    p.add_argument("--max-steps", type=int, default=1000)
    p.add_argument("--eps-max", type=float, default=0.3, help="nonlinearity bound on A k (inf disables)")
    p.add_argument("--ztol", type=float, default=1e-9)


def _config_tokens(sub: argparse.ArgumentParser, path: str) -> list[str]:
    actions = {a.dest: a for a in sub._actions if a.option_strings}
    tokens = []
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        key, value = key.strip().lstrip("-"), value.strip()
        dest = key.replace("-", "_")
        action = actions.get(dest) or next(
            (a for a in actions.values() if "--" + key in a.option_strings), None
        )
        if not eq or action is None or action.dest in ("config", "help"):
            raise UsageError(f"{path}:{num}: unknown or malformed setting {line!r}")
        opt = max(action.option_strings, key=len)
        if isinstance(action, argparse._StoreTrueAction):
            if value.lower() in ("1", "true", "yes", "on"):
                tokens.append(opt)
        elif action.nargs in ("*", "+"):
            tokens += [opt, *value.replace(",", " ").split()]
        else:
            tokens += [opt, value]
    return tokens


def _find_config(argv: list[str]) -> tuple[int, str | None]:
    """Position of the subcommand and the --config value, scanned before parsing."""
    pos = next((i for i, tok in enumerate(argv) if tok in SUBCOMMANDS), -1)
    path = None
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif tok.startswith("--config="):
            path = tok.split("=", 1)[1]
    return pos, path


def parse_args(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    pos, path = _find_config(argv)
    if pos >= 0 and path:
        sub = parser.subcommand_parsers[argv[pos]]
        try:
            tokens = _config_tokens(sub, path)
        except UsageError as exc:
            sub.error(str(exc))
        # config values go first so explicit flags override them
        argv = argv[: pos + 1] + tokens + argv[pos + 1 :]
    args = parser.parse_args(argv)
    if args.out is None:
        args.out = os.environ.get(OUT_ENV) or "dwt_out"
    if args.workers < 1:
        parser.subcommand_parsers[args.command].error("--workers must be at least 1")
    return args


# --------------------------------------------------------------------------
# file formats

def tuples_header(dim: int, arity: int, exact: bool) -> list[str]:
    comps = ("m", "n") if dim == 2 else ("k",)
    head = [f"{c}{s}" for s in range(1, arity + 1) for c in comps]
    return head if exact else head + ["detuning"]


def read_tuples_csv(path: str) -> list[ResonantTuple]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise DWTError(f"{path}: missing header")
        slots: dict[int, list[int]] = {}
        for col, name in enumerate(header):
            m = re.fullmatch(r"([a-z])(\d+)", name.strip())
            if m:
                slots.setdefault(int(m.group(2)), []).append(col)
        if len(slots) not in (3, 4):
            raise DWTError(f"{path}: header must describe 3 or 4 mode slots")
        cols = [slots[s] for s in sorted(slots)]
        out = []
        for row in reader:
            if not row:
                continue
            modes = tuple(Mode(tuple(int(row[c]) for c in cs), math.nan) for cs in cols)
            out.append(ResonantTuple(modes))
    return out


def read_frequencies_csv(path: str) -> dict:
    freqs = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            label = row["label"].strip()
            if label in freqs:
                raise DWTError(f"{path}: duplicate label {label!r}")
            freqs[label] = float(row["frequency"])
    return freqs


def read_initial_csv(path: str) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return np.array([complex(float(r["re"]), float(r["im"])) for r in rows])


def _load_tuples(args) -> list[ResonantTuple]:
    if args.tuples:
        return read_tuples_csv(args.tuples)
    if args.frequencies:
        return frequency_triads(read_frequencies_csv(args.frequencies), args.tol)
    raise UsageError("one of --tuples or --frequencies is required")


def _mp_str(x) -> str:
    v = number(x)
    return repr(v) if isinstance(v, float) else v


# --------------------------------------------------------------------------
# subcommands

def cmd_resonances(args, out: _Outputs) -> int:
    law = parse_law(args.law)
    cond = ResonanceCondition(Order(args.order), args.momentum)
    # near-resonances are a floating-point search, only the brute-force solver does them
    solver = solve_qclass if args.solver == "qclass" and args.tol == 0 else solve_bruteforce
    rs = solver(
        law, cond, args.D, args.tol,
        include_trivial=args.trivial, full_lattice=args.full_lattice,
        workers=args.workers, budget=args.budget,
    )
    header = tuples_header(law.dim, cond.arity, rs.exact)
    rows = []
    for r, idx in enumerate(rs.index.tolist()):
        row = [x for i in idx for x in rs.modes[i].wavevector]
        rows.append(row if rs.exact else row + [repr(float(rs.detuning[r]))])
    if out.wants("csv"):
        out.write_csv("resonances.csv", header, rows)
    if out.wants("json"):
        out.write_json("resonances.json", {"columns": header, "rows": rows, "stats": rs.stats()})
    if args.stats:
        out.write_json("stats.json", rs.stats())
    if args.dump_qclasses:
        modes = spectral_domain(law, args.D, args.full_lattice)
        qrows = [
            [*m.wavevector, m.radical.gamma, q]
            for q, bucket in q_partition(modes, law.root_order).items()
            for m in bucket
        ]
        comps = ["m", "n"] if law.dim == 2 else ["k"]
        out.write_csv("qclasses.csv", comps + ["gamma", "q"], qrows)
    return 0


def _cluster_entry(cid: int, cluster) -> dict:
    entry = {
        "id": cid,
        "size": cluster.size,
        "tuples": [[str(m) for m in t.modes] for t in cluster.tuples],
        "modes": [str(m) for m in cluster.modes],
        "order": "triad" if cluster.is_triad_cluster else "quartet",
    }
    if cluster.is_triad_cluster:
        _, label = classify(cluster)
        entry["label"] = label
        entry["integrable"] = integrable_flag(cluster)
        entry["invariant_basis"] = [list(v) for v in generate_system(cluster).invariants_basis]
    else:
        entry["label"] = f"Quartet-cluster({len(cluster.tuples)})"
        entry["integrable"] = False
        entry["invariant_basis"] = None
    return entry


def cmd_clusters(args, out: _Outputs) -> int:
    clusters = build_clusters(_load_tuples(args))
    entries = [_cluster_entry(c, cl) for c, cl in enumerate(clusters)]
    report = {
        "clusters": entries,
        "summary": {
            "clusters": len(entries),
            "integrable": sum(e["integrable"] for e in entries),
            "resonant_modes": sum(e["size"] for e in entries),
            "max_size": max((e["size"] for e in entries), default=0),
            "labels": dict(sorted(_count(e["label"] for e in entries).items())),
        },
    }
    if out.wants("json"):
        out.write_json("clusters.json", report)
    out.write("clusters.dot", "".join(to_dot(cl, f"cluster{c}") for c, cl in enumerate(clusters)), "dot")
    out.write("clusters.txt", "".join(f"# cluster {c}\n{to_text(cl)}" for c, cl in enumerate(clusters)), "txt")
    return 0


def _count(items) -> dict:
    counts: dict = {}
    for x in items:
        counts[x] = counts.get(x, 0) + 1
    return counts


def cmd_dynamics(args, out: _Outputs) -> int:
    clusters = build_clusters(_load_tuples(args))
    if not 0 <= args.cluster < len(clusters):
        raise UsageError(f"cluster id {args.cluster} out of range (have {len(clusters)})")
    cluster = clusters[args.cluster]
    Z = [float(z) for z in args.Z.split(",")] if args.Z else None
    system = generate_system(cluster, Z)
    if args.initial:
        B0 = read_initial_csv(args.initial)
    else:
        rng = np.random.default_rng(args.seed)
        B0 = rng.normal(size=system.size) + 1j * rng.normal(size=system.size)
        B0 /= np.linalg.norm(B0)
    traj = integrate(system, B0, args.t_end, args.rtol, args.atol)
    report = energy_exchange_report(traj, args.delta)
    nk = len(system.invariants_basis)
    header = ["t"] + [f"{p}{j}" for j in range(1, system.size + 1) for p in ("re", "im")]
    header += [f"I{j}" for j in range(1, nk + 1)]
    if out.wants("csv"):
        rows = []
        for t, s, inv in zip(traj.times, traj.states, traj.invariants):
            row = [repr(float(t))]
            for z in s:
                row += [repr(float(z.real)), repr(float(z.imag))]
            rows.append(row + [repr(float(v)) for v in inv])
        out.write_csv("trajectory.csv", header, rows)
    if out.wants("json"):
        out.write_json("dynamics.json", {
            "cluster": _cluster_entry(args.cluster, cluster),
            "initial": [[float(z.real), float(z.imag)] for z in B0],
            "steps": len(traj),
            "invariant_drift": traj.invariant_drift.tolist(),
            "exchange": report.to_dict(),
        })
    return 0


def _cascade_params(args, p, A0) -> CascadeParams:
    return CascadeParams(
        p, A0, args.omega0, parse_law(args.law),
        max_steps=args.max_steps, eps_max=args.eps_max, ztol=args.ztol,
    )


def cmd_cascade(args, out: _Outputs) -> int:
    ps = [float(x) for x in args.p.split(",")]
    params = _cascade_params(args, ps[0] if len(ps) == 1 else tuple(ps), args.A0)
    chain = run_chain(params, args.direction, args.scheme)
    if out.wants("csv"):
        rows = [
            [s.n, _mp_str(s.omega), _mp_str(s.k), _mp_str(s.A), _mp_str(s.E), _mp_str(s.d_omega), _mp_str(s.eps)]
            for s in chain.steps
        ]
        out.write_csv("chain.csv", ["n", "omega", "k", "A", "E", "d_omega", "eps"], rows)
    if out.wants("json"):
        out.write_json("verdict.json", chain.to_dict())
    if out.wants("svg"):
        lx = [float(mpmath.log10(s.omega)) for s in chain.steps]
        ly = [float(mpmath.log10(s.E)) for s in chain.steps]
        line, note = None, f"verdict {chain.verdict.value}"
        if chain.fit is not None:
            line = (-chain.fit.alpha, chain.fit.log_prefactor / math.log(10))
            note = f"alpha = {chain.fit.alpha:.4f}  ({chain.verdict.value})"
        svg = loglog_plot(
            lx, ly, line=line, title=f"Cascade chain, {params.law.name}, p = {args.p}",
            xlabel="omega_n", ylabel="E_n = A_n^2", annotation=note,
        )
        out.write("spectrum.svg", svg, "svg")
    return 0


def cmd_spectrum(args, out: _Outputs) -> int:
    rows = []
    for p in args.p_values:
        if args.A0_values:
            amps = list(args.A0_values)
        else:
            if args.n_A0 < 1:
                raise UsageError("--n-A0 must be at least 1")
            ac = float(_cascade_params(args, p, CRITICAL).amplitude0())
            amps = [ac * j / args.n_A0 for j in range(1, args.n_A0)] + [CRITICAL]
        for A0 in amps:
            params = _cascade_params(args, p, A0)
            chain = run_chain(params, args.direction, args.scheme)
            try:
                fit = fit_spectrum(chain, args.exclude_terminal)
            except InsufficientDataError:
                fit = None
            rows.append([
                repr(p), repr(float(params.amplitude0())), chain.verdict.value, len(chain),
                "" if fit is None else repr(fit.alpha), "" if fit is None else repr(fit.rms),
                _mp_str(chain.steps[-1].omega),
            ])
    out.write_csv("alpha_map.csv", ["p", "A0", "verdict", "steps", "alpha", "rms", "omega_final"], rows)
    return 0


def cmd_bench(args, out: _Outputs) -> int:
    law = parse_law(args.law)
    cond = ResonanceCondition(Order(args.order), args.momentum)
    header = ["D", "modes", "bruteforce_s", "qclass_s", "bruteforce_count", "qclass_count", "speedup", "status"]
    rows, code, mismatch = [], 0, []
    for D in args.D_values:
        kw = dict(full_lattice=args.full_lattice, workers=args.workers, budget=args.budget)
        try:
            t0 = time.perf_counter()
            bf = solve_bruteforce(law, cond, D, **kw)
            t1 = time.perf_counter()
            qc = solve_qclass(law, cond, D, **kw)
            t2 = time.perf_counter()
        except BudgetExceeded:
            rows.append([D, "", "", "", "", "", "", "budget_exceeded"])
            code = 3
            break
        tb, tq = t1 - t0, t2 - t1
        same = bf.same_solutions(qc)
        if not same:
            mismatch.append(D)
        speed = f"{tb / tq:.3f}" if tq > 0 else "inf"
        rows.append([D, len(bf.modes), f"{tb:.6f}", f"{tq:.6f}", len(bf), len(qc), speed, "ok" if same else "mismatch"])
    out.write_csv("bench.csv", header, rows)
    if mismatch:
        raise DWTError(f"solvers disagree at D = {mismatch}")
    return code


_COMMANDS = {
    "resonances": cmd_resonances,
    "clusters": cmd_clusters,
    "dynamics": cmd_dynamics,
    "cascade": cmd_cascade,
    "spectrum": cmd_spectrum,
    "bench": cmd_bench,
}


def _run_config(args) -> RunConfig:
    skip = {"command", "config", "out", "formats", "seed", "workers"}
    params = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    D = getattr(args, "D", None)
    return RunConfig(
        args.command, params, getattr(args, "law", None), D if isinstance(D, int) else None,
        args.out, list(args.formats), args.seed, args.workers,
    )


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def dispatch(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parse_args(argv)
    out = _Outputs(Path(args.out), set(args.formats))
    config = _run_config(args)
    code = 1
    try:
        code = _COMMANDS[args.command](args, out)
    except UsageError as exc:
        _emit_error("usage", str(exc), 2)
        code = 2
    except BudgetExceeded as exc:
        _emit_error("budget_exceeded", str(exc), 3, elapsed=exc.elapsed)
        code = 3
    except (DWTError, ValueError, OSError, KeyError) as exc:
        _emit_error(type(exc).__name__, str(exc), 1)
        code = 1
    finally:
        manifest = {
            "tool": "dwt",
            "version": __version__,
            "config": _jsonable(asdict(config)),
            "outputs": out.written,
            "file_formats": FORMAT_VERSIONS,
            "exit_code": code,
        }
        out.root.mkdir(parents=True, exist_ok=True)
        (out.root / "manifest.json").write_text(dumps(manifest), encoding="utf-8")
    return code


def main(argv: list[str] | None = None) -> int:
    return dispatch(argv)


if __name__ == "__main__":
    sys.exit(main())
