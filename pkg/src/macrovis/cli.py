"""Command-line front end.

    macrovis [global flags] {state,vcm,xi,analyze,scan} [scenario flags]

Every command builds (or loads from the cache) one scenario state, then runs
part of the pipeline state -> VCM -> S -> kernels -> fields, writing CSV/JSON
data and SVG figures under ``--out``.  Exit codes: 0 success, 2 invalid
configuration, 3 numerical failure; failures also print a JSON error object.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import re
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import models, plotting, vcm, xi
from .additive import W_ZERO, AdditiveError, density, parse_width, write_weights_csv
from .statevec import StateError, StateVector, dump_state, load_state

log = logging.getLogger("macrovis")

SCENARIOS = ("xy", "heisenberg", "shor", "grover", "cat", "separable", "custom-file")
DEFAULT_LATTICE = "rect:2x7:obc"
DEFAULT_SIZE = 12
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

# operators plotted when --ops auto; the S set itself is always reported
AUTO_OPS = {
    "xy": ("M_x", "M_y"),
    "heisenberg": ("M_x^st", "M_y^st"),
    "shor": ("M_x", "M_y^st"),
    "grover": ("M_x-z", "M_y"),
    "cat": ("M_z", "M_x"),
    "separable": ("M_x", "M_y"),
    "custom-file": ("M_x", "M_y"),
}


class ConfigError(ValueError):
    pass


# -- argument handling ---------------------------------------------------------------


def _floats(text: str) -> list:
    items = [t for t in str(text).replace(" ", "").split(",") if t]
    if not items:
        raise argparse.ArgumentTypeError("empty list")
    try:
        return [float(t) for t in items]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _widths(text: str) -> list:
    """Comma list of widths; 0 selects W->0, negatives are rejected."""
    ws = _floats(text)
    bad = [w for w in ws if not (w >= 0 and math.isfinite(w))]
    if bad:
        raise argparse.ArgumentTypeError(f"widths must be >= 0 (0 means W->0), got {bad}")
    return ws


def _ints(text: str) -> list:
    return [int(v) for v in _floats(text)]


def _w_range(text: str) -> list:
    """``lo:hi:step`` inclusive of ``hi``."""
    try:
        lo, hi, step = (float(t) for t in text.split(":"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError("expected lo:hi:step") from exc
    if step <= 0 or hi < lo:
        raise argparse.ArgumentTypeError("need step > 0 and hi >= lo")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 12) for i in range(count)]


def _scenario_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("scenario")
    g.add_argument("--scenario", choices=SCENARIOS)
    g.add_argument("--size", type=int, help="number of qubits (cat, separable, grover)")
    g.add_argument("--lattice", help="chain:N[:pbc], rect:RxC[:obc|pbc] or a lattice JSON file")
    g.add_argument("--I", dest="I", type=int, help="integer to factor (shor)")
    g.add_argument("--x", dest="x", type=int, help="base coprime to I (shor)")
    g.add_argument("--k", type=int, help="Grover iterations (default from the R/2 rule)")
    g.add_argument("--state-file", help="MVIS state dump (custom-file)")
    g.add_argument("--sector", default="auto", help="auto, full, or a popcount")
    g.add_argument("--ops", default="auto", help="auto or a comma list such as M_x,M_y^st")
    g.add_argument("--gamma", type=float, default=vcm.DEFAULT_GAMMA)
    g.add_argument("--epsilon", type=float, default=vcm.DEFAULT_EPSILON)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="macrovis",
        description="Detect and visualize macroscopic superpositions in spin-1/2 pure states.")
    parser.add_argument("--out", default="macrovis-out", help="output directory")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--seed", type=int, default=models.LanczosConfig.seed)
    parser.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="format of tabular outputs")
    parser.add_argument("--config", help="JSON file whose keys mirror the flags")
    parser.add_argument("--no-plots", action="store_true", help="skip SVG output")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("state", help="build a scenario state and dump it (MVIS format)")
    _scenario_args(p)
    p.add_argument("--dump", help="explicit dump path (default: the cache entry)")

    p = sub.add_parser("vcm", help="VCM spectrum, S set and p estimate")
    _scenario_args(p)
    p.add_argument("--p-sizes", type=_ints, help="sizes for the p estimate")

    p = sub.add_parser("xi", help="kernels and coarse-grained fields")
    _scenario_args(p)
    p.add_argument("--W", type=_widths, default=[0.0, 2.0], help="widths; 0 means W->0")

    p = sub.add_parser("analyze", help="full pipeline with report")
    _scenario_args(p)
    p.add_argument("--W", type=_widths, default=[0.0, 2.0], help="widths; 0 means W->0")
    p.add_argument("--p-sizes", type=_ints, help="sizes for the p estimate")

    p = sub.add_parser("scan", help="negativity against W, or against N under a W rule")
    _scenario_args(p)
    p.add_argument("--W", type=_widths, help="explicit width list")
    p.add_argument("--W-range", type=_w_range, help="lo:hi:step")
    p.add_argument("--w-rule", choices=sorted(xi.W_RULES), help="scan N with W = c*rule(N)")
    p.add_argument("--c", type=_floats, default=[1.0], help="rule constants, comma list")
    p.add_argument("--sizes", type=_ints, help="sizes for --w-rule")
    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        # the file supplies defaults; flags given on the command line win
        explicit = {a.dest for a in _all_actions(parser, args.command)
                    if any(opt in (argv if argv is not None else sys.argv[1:])
                           for opt in a.option_strings)}
        for key, value in cfg.items():
            dest = key.replace("-", "_")
            if isinstance(value, str) and dest in _LIST_KEYS:
                try:
                    value = _LIST_KEYS[dest](value)
                except argparse.ArgumentTypeError as exc:
                    raise ConfigError(f"config key {key!r}: {exc}") from exc
            if not hasattr(args, dest):
                raise ConfigError(f"unknown config key {key!r}")
            if dest not in explicit:
                setattr(args, dest, value)
    return args


_LIST_KEYS = {"W": _widths, "W_range": _w_range, "p_sizes": _ints, "sizes": _ints, "c": _floats}


def _all_actions(parser, command):
    acts = list(parser._actions)
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            acts += action.choices[command]._actions
    return acts


# -- scenarios -------------------------------------------------------------------------


@dataclass
class Scenario:
    name: str
    state: StateVector
    params: dict
    signs: Optional[np.ndarray] = None
    layout: Optional[models.ShorLayout] = None
    energy: Optional[float] = None
    grover: Optional[models.GroverParams] = None

    @property
    def n(self) -> int:
        return self.state.n_qubits


def scenario_params(args) -> dict:
    name = args.scenario
    if name is None:
        raise ConfigError("--scenario is required")
    if name in ("xy", "heisenberg"):
        return {"lattice": args.lattice or DEFAULT_LATTICE, "sector": str(args.sector),
                "seed": args.seed}
    if name == "shor":
        if args.I is None or args.x is None:
            raise ConfigError("shor needs --I and --x")
        return {"I": args.I, "x": args.x}
    if name == "grover":
        return {"size": args.size or DEFAULT_SIZE, "k": args.k}
    if name in ("cat", "separable"):
        return {"size": args.size or DEFAULT_SIZE}
    if not args.state_file:
        raise ConfigError("custom-file needs --state-file")
    return {"state_file": str(args.state_file)}


def cache_key(name: str, params: dict) -> str:
    blob = json.dumps({"scenario": name, **params}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _sector(text):
    if text in ("auto", "full"):
        return text if text == "auto" else None
    try:
        return int(text)
    except ValueError as exc:
        raise ConfigError(f"invalid sector {text!r}") from exc


def _lattice(spec: str, kind: str):
    try:
        # XY operators are not staggered, so odd periodic lengths are fine
        return models.parse_lattice(spec, staggered=(kind == "heisenberg"))
    except (models.LatticeError, OSError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def build_scenario(args, out: Optional[Path] = None) -> Scenario:
    name = args.scenario
    params = scenario_params(args)
    key = cache_key(name, params)
    cache = out / "cache" / f"{name}-{key}.mvis" if out is not None else None
    signs = layout = energy = gp = None
    lattice = None
    if name in ("xy", "heisenberg"):
        lattice = _lattice(params["lattice"], name)
        signs = np.asarray(lattice.sublattice_sign)
    elif name == "shor":
        try:
            layout = models.shor_layout(params["I"], params["x"])
        except models.ModelError as exc:
            raise ConfigError(str(exc)) from exc
    elif name == "grover":
        try:
            gp = models.grover_params(params["size"], params["k"])
        except models.ModelError as exc:
            raise ConfigError(str(exc)) from exc

    meta_path = cache.with_suffix(".json") if cache is not None else None
    if cache is not None and cache.exists():
        log.info("using cached state %s", cache)
        state = load_state(cache)
        if meta_path.exists():
            energy = json.loads(meta_path.read_text()).get("energy")
        return Scenario(name, state, params, signs, layout, energy, gp)

    if lattice is not None:
        cfg = replace(models.LanczosConfig(), seed=params["seed"],
                      sector=_sector(params["sector"]))
        state, energy = models.ground_state(name, lattice, cfg)
    elif name == "shor":
        state, layout = models.shor_me_state(params["I"], params["x"])
    elif name == "grover":
        state, gp = models.grover_state(params["size"], params["k"])
    elif name == "cat":
        state = models.cat_state(params["size"])
    elif name == "separable":
        state = models.product_state(params["size"])
    else:
        try:
            state = load_state(params["state_file"])
        except (OSError, StateError) as exc:
            raise ConfigError(f"cannot load state: {exc}") from exc
    if cache is not None:
        cache.parent.mkdir(parents=True, exist_ok=True)
        dump_state(state, cache)
        meta_path.write_text(json.dumps({"scenario": name, "params": params, "energy": energy},
                                        sort_keys=True, indent=2) + "\n")
    return Scenario(name, state, params, signs, layout, energy, gp)


def family_builder(args, name: str):
    """``(n -> state, description, n -> sublattice signs)`` for size families."""
    if name == "cat":
        return models.cat_state, "cat(N)", _no_signs
    if name == "separable":
        return models.product_state, "|0...0>(N)", _no_signs
    if name == "grover":
        return (lambda n: models.grover_state(n)[0]), "Grover(N), k from the R/2 rule", _no_signs
    if name in ("xy", "heisenberg"):
        spec = args.lattice or DEFAULT_LATTICE
        m = re.fullmatch(r"(chain|rect):(\d+)(?:x(\d+))?(?::(obc|pbc))?", spec)
        if not m:
            raise ConfigError("size families are only defined for built-in lattices")
        kind, a, b, bc = m.groups()
        bc = bc or "obc"

        def lattice(n):
            if kind == "chain":
                return _lattice(f"chain:{n}" + (":pbc" if bc == "pbc" else ""), name)
            rows = int(a)
            if n % rows:
                raise ConfigError(f"size {n} is not a multiple of {rows} rows")
            return _lattice(f"rect:{rows}x{n // rows}:{bc}", name)

        def build(n):
            cfg = replace(models.LanczosConfig(), seed=args.seed, sector=_sector(args.sector))
            return models.ground_state(name, lattice(n), cfg)[0]

        desc = f"{kind} lattices ({bc}), " + ("N sites" if kind == "chain" else f"{a} x N/{a}")
        return build, desc, (lambda n: np.asarray(lattice(n).sublattice_sign))
    raise ConfigError(f"scenario {name!r} has no size family")


# -- operators -------------------------------------------------------------------------

_OP_RE = re.compile(r"M_(x-z|[xyz])(\^st)?(\((1|2|1,all)\))?")


def make_operator(text: str, sc: Scenario, s_ops=None) -> vcm.AdditiveOperator:
    """Build ``M_a``, ``M_a^st``, register-restricted ``M_a(1)``, ``M_x-z`` or ``S<i>``."""
    n = sc.n
    text = text.strip()
    if re.fullmatch(r"S\d+", text):
        i = int(text[1:]) - 1
        if not s_ops or not 0 <= i < len(s_ops):
            raise ConfigError(f"{text}: the S set has {len(s_ops or [])} elements")
        return s_ops[i]
    m = _OP_RE.fullmatch(text)
    if not m:
        raise ConfigError(f"cannot parse operator {text!r}")
    axis, stag, _, reg = m.groups()
    if axis == "x-z":
        if stag or reg:
            raise ConfigError("M_x-z has no staggered or register variants")
        return vcm.m_x_minus_z(n)
    sites, amp = None, 1.0
    if reg:
        if sc.layout is None:
            raise ConfigError(f"{text}: register operators need the shor scenario")
        r1 = list(sc.layout.register1)
        sites, amp = {"1": (r1[1:], math.sqrt(1.5)), "1,all": (r1, math.sqrt(1.5)),
                      "2": (list(sc.layout.register2), math.sqrt(3.0))}[reg]
    return vcm.magnetization(n, axis, staggered=bool(stag), signs=sc.signs, sites=sites,
                             amplitude=amp, label=text)


def select_ops(args, sc: Scenario, s_ops=None) -> list:
    names = AUTO_OPS[sc.name] if args.ops == "auto" else args.ops.split(",")
    ops = [make_operator(t, sc, s_ops) for t in names]
    if len(ops) not in (2, 3):
        raise ConfigError("give two or three operators")
    return ops


def _slug(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "", label.replace("^st", "st").replace("x-z", "xmz"))


# -- stages ------------------------------------------------------------------------------


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def vcm_stage(args, sc: Scenario, out: Path) -> dict:
    spec = vcm.spectrum(vcm.compute_vcm(sc.state))
    s = vcm.extract_S(spec, gamma=args.gamma, signs=sc.signs, layout=sc.layout)
    n = sc.n
    eig = [float(e) for e in spec.eigenvalues]
    report = {
        "eigenvalues": eig,
        "gamma": args.gamma,
        "threshold": args.gamma * n,
        "S": [op.to_json(var) for op, var in zip(s.operators, s.variances)],
        "S_flag": s.flag,
        "blocks": [list(map(int, b)) for b in s.blocks],
    }
    sizes = getattr(args, "p_sizes", None)
    report["p_estimate"] = p_stage(args, sc.name, sizes)
    _write_json(out / "spectrum.json", {"eigenvalues": eig, "n_sites": n})
    _write_json(out / "S.json", report["S"])
    return {"report": report, "spectrum": spec, "S": s}


def p_stage(args, name: str, sizes) -> Optional[dict]:
    if not sizes:
        return None
    builder, desc, _ = family_builder(args, name)
    est = vcm.estimate_p(builder, sizes, epsilon=args.epsilon)
    out = est.to_json()
    out["family"] = desc
    return out


def xi_stage(args, sc: Scenario, out: Path, ops: list, widths: list) -> dict:
    """Kernel, stems and one field per finite width for the first two operators."""
    a, b = ops[0], ops[1]
    k = xi.kernel2(sc.state, a, b, threads=args.threads)
    check_invariants(sc.state, k, a, b)
    tag = f"{_slug(a.label)}_{_slug(b.label)}"
    _write_table_kernel(args, k, out / f"kernel_{tag}")
    table = []
    plots = not args.no_plots
    for W in widths:
        w = parse_width(W)
        if w is W_ZERO:
            row = {"W": 0.0, "negativity": k.negative_mass(), "min_value": k.min_weight(),
                   "converged": True}
            if plots:
                plotting.stem3d(k, out / f"stem_{tag}.svg",
                                title=f"{sc.name}: W -> 0")
        else:
            fld = xi.coarse_grain(k, w)
            wtag = _fmt_w(w)
            fld.write(out / f"field_{tag}_W{wtag}.csv")
            resid = abs(fld.integral() - 1.0)
            if resid > 1e-4:
                raise xi.XiError(f"field at W={w} integrates to 1 - {resid:.2e}")
            row = {"W": float(w), "negativity": fld.negativity, "min_value": fld.min_value,
                   "converged": fld.converged,
                   "local_maxima": len(fld.local_maxima())}
            if plots:
                plotting.heatmap(fld, out / f"heatmap_{tag}_W{wtag}.svg",
                                 negative_scale=10.0 if fld.min_value < 0 else None,
                                 title=f"{sc.name}: W = {w:g}")
        table.append(row)
    result = {"operators": [a.label, b.label], "kernel_sum": k.total(), "negativity": table}
    if len(ops) == 3:
        k3 = xi.kernel_m(sc.state, ops, threads=args.threads)
        _write_table_kernel(args, k3, out / f"kernel_{tag}_{_slug(ops[2].label)}")
        result["kernel3_sum"] = k3.total()
    # single-operator weight lists
    for op in ops:
        d = density(sc.state, op)
        write_weights_csv(out / f"weights_{_slug(op.label)}.csv", d.values, d.weights, op.label)
    return result


def _fmt_w(w: float) -> str:
    return f"{w:g}".replace(".", "_")


def _write_table_kernel(args, k, stem: Path) -> None:
    if args.format == "json":
        _write_json(stem.with_suffix(".json"), {
            "operators": list(k.labels), "N": k.n_sites, "sum": k.total(),
            "entries": [[*key, w] for key, w in sorted(k.entries.items())]})
    else:
        k.to_csv(stem.with_suffix(".csv"))


def check_invariants(state, k, a, b, tol: float = 1e-10) -> None:
    """Kernel sum, marginals and ordering symmetry; raises on violation."""
    if abs(k.total() - 1.0) > tol:
        raise xi.XiError(f"kernel sum {k.total()!r} differs from 1")
    for axis, op in ((0, a), (1, b)):
        _, q = xi.single_weights(state, op)
        dev = float(np.abs(k.marginal([axis]).weights - q).max())
        if dev > tol:
            raise xi.XiError(f"marginal of {op.label} off by {dev:.2e}")
    if not np.isrealobj(k.weights):
        raise xi.XiError("kernel weights are not real")


# -- commands -------------------------------------------------------------------------------


def cmd_state(args, out: Path) -> dict:
    sc = build_scenario(args, out)
    path = None
    if args.dump:
        path = Path(args.dump)
        dump_state(sc.state, path)
    else:
        path = out / "cache" / f"{sc.name}-{cache_key(sc.name, sc.params)}.mvis"
    return {"scenario": sc.name, "params": sc.params, "n_qubits": sc.n, "energy": sc.energy,
            "path": str(path)}


def cmd_vcm(args, out: Path) -> dict:
    sc = build_scenario(args, out)
    res = vcm_stage(args, sc, out)
    _write_json(out / "vcm.json", res["report"])
    return {"scenario": sc.name, "n_qubits": sc.n, "S": [o.label for o in res["S"]],
            "p_estimate": res["report"]["p_estimate"]}


def cmd_xi(args, out: Path) -> dict:
    sc = build_scenario(args, out)
    s_ops = None
    if re.search(r"(^|,)S\d", args.ops):
        # operators named by their index in S need the VCM pipeline first
        spec = vcm.spectrum(vcm.compute_vcm(sc.state))
        s_ops = vcm.extract_S(spec, gamma=args.gamma, signs=sc.signs,
                              layout=sc.layout).operators
    ops = select_ops(args, sc, s_ops)
    res = xi_stage(args, sc, out, ops, args.W)
    _write_json(out / "xi.json", res)
    return res


def cmd_analyze(args, out: Path) -> dict:
    sc = build_scenario(args, out)
    v = vcm_stage(args, sc, out)
    ops = select_ops(args, sc, v["S"].operators)
    x = xi_stage(args, sc, out, ops, args.W)
    summary = {
        "scenario": sc.name,
        "params": sc.params,
        "n_qubits": sc.n,
        "energy": sc.energy,
        "top_eigenvalues": v["report"]["eigenvalues"][:6],
        "S": [o.label for o in v["S"].operators],
        "S_flag": v["S"].flag,
        "p_estimate": v["report"]["p_estimate"],
        "xi": x,
    }
    if sc.layout is not None:
        summary["shor"] = {"N1": sc.layout.N1, "N2": sc.layout.N2, "r": sc.layout.r}
    if sc.grover is not None:
        summary["grover"] = {"R": sc.grover.R, "k": sc.grover.k, "theta": sc.grover.theta}
    _write_json(out / "summary.json", summary)
    return summary


def cmd_scan(args, out: Path) -> dict:
    rows = []
    if args.w_rule:
        if not args.sizes:
            raise ConfigError("--w-rule needs --sizes")
        if len(args.sizes) < 3:
            raise ConfigError("a W-rule scan needs at least 3 sizes")
        builder, _, signs_of = family_builder(args, args.scenario)

        def selector(n, state):
            sc = Scenario(args.scenario, state, {}, signs_of(n))
            return select_ops(args, sc)[:2]

        series = {}
        for c in args.c:
            res = xi.w_scaling_scan(builder, selector, args.w_rule, args.sizes, c,
                                    threads=args.threads)
            rows += res
            series[f"W = {c:g} {args.w_rule}"] = ([r.n for r in res],
                                                   [r.negativity for r in res])
        xlabel = "N"
        name = f"scan_{args.scenario}_{args.w_rule}"
    else:
        widths = args.W_range if args.W_range else args.W
        if not widths:
            raise ConfigError("give --W, --W-range or --w-rule")
        sc = build_scenario(args, out)
        a, b = select_ops(args, sc)[:2]
        k = xi.kernel2(sc.state, a, b, threads=args.threads)
        for W in widths:
            res = xi.negativity(k, W)
            rows.append(xi.ScanRow(sc.n, float(W), res.value, res.converged, "fixed"))
        series = {"": ([r.W for r in rows], [r.negativity for r in rows])}
        xlabel = "W"
        name = f"scan_{args.scenario}_W"
    if args.format == "json":
        _write_json(out / f"{name}.json", [r.__dict__ for r in rows])
    else:
        xi.write_scan_csv(out / f"{name}.csv", rows)
    if not args.no_plots:
        plotting.curve(None, None, out / f"{name}.svg", xlabel=xlabel, series=series)
    return {"rows": [r.__dict__ for r in rows]}


def _no_signs(n):
    return None


COMMANDS = {"state": cmd_state, "vcm": cmd_vcm, "xi": cmd_xi, "analyze": cmd_analyze,
            "scan": cmd_scan}


def _error(kind: str, exc: Exception, code: int) -> int:
    payload = {"error": {"kind": kind, "type": type(exc).__name__, "message": str(exc)}}
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except ConfigError as exc:
        return _error("config", exc, EXIT_CONFIG)
    except SystemExit as exc:
        # argparse has printed usage; --help exits with 0
        code = exc.code if isinstance(exc.code, int) else EXIT_CONFIG
        if code:
            return _error("config", ConfigError("invalid command line"), EXIT_CONFIG)
        return 0
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        return _error("config", ConfigError("--threads must be >= 1"), EXIT_CONFIG)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        result = COMMANDS[args.command](args, out)
    except (ConfigError, models.LatticeError, argparse.ArgumentTypeError) as exc:
        return _error("config", exc, EXIT_CONFIG)
    except (models.ConvergenceError, models.DegenerateGroundError, xi.XiError,
            AdditiveError, vcm.VcmError, models.ModelError, StateError,
            np.linalg.LinAlgError, FloatingPointError) as exc:
        return _error("numerical", exc, EXIT_NUMERIC)
    print(json.dumps(result, indent=2, sort_keys=True, default=_jsonable))
    return 0


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
