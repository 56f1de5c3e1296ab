"""Command-line front end for network growth, equilibrium, and allocation studies.

Configuration comes from flags, optionally seeded by a JSON config file
(flags win). Payloads are UTF-8 text with a comment header carrying the
tool version and the resolved parameters; all floats print at 17
significant digits, so identical configs reproduce byte-identical output.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import (
    LogisticParams,
    biomass_upper_bound,
    integrate,
    positive_equilibrium,
)
from .exceptions import ConvergenceError
from .network import (
    StreamNetwork,
    build_connection_matrix,
    canonical_three_node,
    enumerate_homogeneous_networks,
    network_to_json,
    read_network,
    straight_chain,
)
from .optimize import (
    maximize_biomass,
    maximize_growth_rate,
    verify_biomass_concentration,
    verify_small_d_growth,
    verify_uniform_perturbation,
)
from .plots import render_lines
from .report import csv_row, fmt, header
from .signs import check_admissibility, net_flows, sign_pattern, survey_patterns
from .spectral import growth_rate, growth_rate_mu

_THREE_NODE_KINDS = ("tributary", "straight", "distributary")

_FIG5_SPANS = {"tributary": 400.0, "straight": 1500.0, "distributary": 400.0}
_FIG5_SAMPLES = 751
_FIG5 = {"d": 0.1, "q": 0.3, "K": 3.0, "r": 5.0}
_FIG8_POINTS = 60
_FIG8_D_RANGE = (1e-2, 1e2)
_FIG8_QS = (0.5, 1.5, 10.0)
_FIG8_NS = (2, 3, 4, 5)
_FIG8_R = 2.0

_CONFIG_KEYS = {
    "net",
    "d",
    "q",
    "K",
    "r_total",
    "alloc",
    "resolution",
    "out",
    "objective",
    "refine",
    "uniform_perturb",
    "small_d",
    "concentration",
    "which",
    "n",
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    net: StreamNetwork | None
    net_label: str | None
    K: float
    r_total: float | None
    allocation: tuple[float, ...] | None
    resolution: int
    out: Path | None
    objective: str | None
    refine: bool
    uniform_perturb: bool
    small_d: tuple[float, ...] | None
    concentration: bool
    which: str | None
    count_n: int | None
    d_value: float | None = None
    q_value: float | None = None

    def settings(self) -> dict:
        """Resolved parameters for the payload header, deterministic values only."""
        out: dict = {}
        if self.net_label is not None:
            out["net"] = self.net_label
        if self.net is not None:
            out["d"] = fmt(self.net.d)
            out["q"] = fmt(self.net.q)
        elif self.d_value is not None or self.q_value is not None:
            out["d"] = fmt(self.d_value if self.d_value is not None else 1.0)
            out["q"] = fmt(self.q_value if self.q_value is not None else 1.0)
        out["K"] = fmt(self.K)
        if self.r_total is not None:
            out["r_total"] = fmt(self.r_total)
        if self.allocation is not None:
            out["alloc"] = ",".join(fmt(x) for x in self.allocation)
        out["resolution"] = self.resolution
        if self.objective is not None:
            out["objective"] = self.objective
        if self.which is not None:
            out["which"] = self.which
        if self.count_n is not None:
            out["n"] = self.count_n
        return out


@dataclass(frozen=True)
class ScenarioOutput:
    lines: tuple[str, ...]
    files: tuple[tuple[str, str], ...] = ()


def _load_config_file(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValueError(f"cannot read config file: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed config file: {exc}") from exc
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return data


def _parse_floats(value, what: str) -> tuple[float, ...]:
    if isinstance(value, str):
        parts = [p.strip() for p in value.split(",")]
        parts = [p for p in parts if p]
    elif isinstance(value, (list, tuple)):
        parts = list(value)
    else:
        raise ValueError(f"{what} must be a comma-separated list")
    if not parts:
        raise ValueError(f"{what} is empty")
    try:
        return tuple(float(p) for p in parts)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"bad {what}: {value!r}") from exc


def _build_network(label, d: float | None, q: float | None) -> tuple[StreamNetwork, str]:
    text = str(label)
    if text in _THREE_NODE_KINDS:
        return canonical_three_node(text, 1.0 if d is None else d, 1.0 if q is None else q), text
    match = re.fullmatch(r"straight(\d+)", text)
    if match:
        n = int(match.group(1))
        return straight_chain(n, 1.0 if d is None else d, 1.0 if q is None else q), text
    path = Path(text)
    if not path.is_file():
        raise ValueError(f"unknown network {text!r}: not a builtin name or readable file")
    net = read_network(path)
    if d is not None:
        net = replace(net, d=d)
    if q is not None:
        net = replace(net, q=q)
    return net, path.name


def _merged_settings(args: argparse.Namespace) -> dict:
    data = _load_config_file(args.config) if getattr(args, "config", None) else {}
    merged = dict(data)
    for key in _CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    return merged


def _resolve(args: argparse.Namespace) -> RunConfig:
    cfg = _merged_settings(args)
    command = args.command
    K = float(cfg.get("K", 1.0))
    allocation = _parse_floats(cfg["alloc"], "allocation") if "alloc" in cfg else None
    r_total = float(cfg["r_total"]) if "r_total" in cfg else None
    if allocation is not None:
        total = float(sum(allocation))
        if r_total is not None and abs(total - r_total) > 1e-12 * max(abs(r_total), 1.0):
            raise ValueError("allocation sum disagrees with --r-total")
        r_total = total
    d_value = float(cfg["d"]) if "d" in cfg else None
    q_value = float(cfg["q"]) if "q" in cfg else None
    net = None
    net_label = None
    if "net" in cfg:
        net, net_label = _build_network(cfg["net"], d_value, q_value)
        if allocation is not None and len(allocation) != net.n:
            raise ValueError(f"allocation has {len(allocation)} entries for a {net.n}-node network")
    small_d = _parse_floats(cfg["small_d"], "small-d list") if "small_d" in cfg else None
    return RunConfig(
        command=command,
        net=net,
        net_label=net_label,
        K=K,
        r_total=r_total,
        allocation=allocation,
        resolution=int(cfg.get("resolution", 50)),
        out=Path(cfg["out"]) if "out" in cfg else None,
        objective=cfg.get("objective"),
        refine=bool(cfg.get("refine", True)),
        uniform_perturb=bool(cfg.get("uniform_perturb", False)),
        small_d=small_d,
        concentration=bool(cfg.get("concentration", False)),
        which=cfg.get("which"),
        count_n=int(cfg["n"]) if "n" in cfg else None,
        d_value=d_value,
        q_value=q_value,
    )


def _require_net(config: RunConfig) -> StreamNetwork:
    if config.net is None:
        raise ValueError("a network is required: pass --net <builtin|path>")
    return config.net


def _require_alloc(config: RunConfig) -> tuple[float, ...]:
    if config.allocation is None:
        raise ValueError("an allocation is required: pass --alloc a,b,...")
    return config.allocation


def _vector_row(name: str, values) -> str:
    return csv_row([name, *[float(x) for x in values]])


def cmd_growth(config: RunConfig) -> ScenarioOutput:
    net = _require_net(config)
    alloc = _require_alloc(config)
    conn = build_connection_matrix(net)
    rep = growth_rate(conn, alloc)
    lines = header(__version__, "growth", config.settings())
    lines.append(csv_row(["rho", rep.rho]))
    lines.append(csv_row(["lower_bound", rep.lower_bound]) if rep.lower_bound is not None else "lower_bound,NA")
    lines.append(csv_row(["upper_bound", rep.upper_bound]))
    lines.append(_vector_row("theta", rep.theta) if rep.theta is not None else "theta,NA")
    if rep.pair is not None:
        lines.append(_vector_row("right_vector", rep.pair.right))
        lines.append(_vector_row("left_vector", rep.pair.left))
    else:
        lines.append("right_vector,NA")
        lines.append("left_vector,NA")
    lines.append(csv_row(["residual", rep.residual]))
    return ScenarioOutput(tuple(lines))


def cmd_equilibrium(config: RunConfig) -> ScenarioOutput:
    net = _require_net(config)
    alloc = _require_alloc(config)
    params = LogisticParams(r=alloc, K=config.K)
    eq = positive_equilibrium(net, params)
    lines = header(__version__, "equilibrium", config.settings())
    lines.append("node,u_star")
    for i, val in enumerate(eq.u_star):
        lines.append(csv_row([i + 1, float(val)]))
    lines.append(csv_row(["biomass", eq.biomass]))
    lines.append(csv_row(["residual", eq.residual]))
    return ScenarioOutput(tuple(lines))


def cmd_biomass(config: RunConfig) -> ScenarioOutput:
    net = _require_net(config)
    alloc = _require_alloc(config)
    params = LogisticParams(r=alloc, K=config.K)
    eq = positive_equilibrium(net, params)
    pattern = sign_pattern(eq, params)
    verdict = check_admissibility(pattern, net)
    flows = net_flows(eq, net)
    lines = header(__version__, "biomass", config.settings())
    lines.append(_vector_row("u_star", eq.u_star))
    lines.append(csv_row(["biomass", eq.biomass]))
    lines.append(csv_row(["upper_bound", biomass_upper_bound(net, config.K)]))
    lines.append(csv_row(["sign_pattern", pattern.code]))
    lines.append(csv_row(["admissible", verdict.admissible]))
    lines.append("edge_upstream,edge_downstream,flow_down,flow_up,net_flow,direction")
    for flow in flows.flows:
        lines.append(
            csv_row(
                [
                    flow.upstream + 1,
                    flow.downstream + 1,
                    flow.flow_down,
                    flow.flow_up,
                    flow.net,
                    flow.direction,
                ]
            )
        )
    lines.append(_vector_row("node_net_inflow", flows.node_net_inflow))
    return ScenarioOutput(tuple(lines))


def _alloc_text(alloc) -> str:
    return ";".join(fmt(float(x)) for x in np.asarray(alloc, dtype=float))


def _optimize_report(lines: list[str], result) -> None:
    lines.append(csv_row(["objective", result.objective]))
    lines.append(csv_row(["best_value", result.best_value]))
    lines.append(_vector_row("best_allocation", result.best_allocation.values()))
    lines.append(csv_row(["argmax_size", len(result.argmax_set)]))
    for member in result.argmax_set:
        lines.append(csv_row(["argmax", _alloc_text(member.values())]))
    trace = result.method_trace
    lines.append(csv_row(["resolution", trace.resolution]))
    lines.append(csv_row(["probes", trace.probes]))
    lines.append(csv_row(["refine_steps", trace.refine_steps]))
    lines.append(csv_row(["failures", len(trace.failures)]))


def cmd_optimize(config: RunConfig) -> ScenarioOutput:
    net = _require_net(config)
    if config.r_total is None:
        raise ValueError("optimize requires --r-total (or an explicit --alloc to derive it)")
    r_total = config.r_total
    lines = header(__version__, "optimize", config.settings())
    harness = config.uniform_perturb or config.small_d is not None or config.concentration
    if harness:
        if config.uniform_perturb:
            rep = verify_uniform_perturbation(net, r_total)
            lines.append(csv_row(["check", "uniform-perturbation"]))
            lines.append(csv_row(["most_downstream", ";".join(str(i + 1) for i in rep.most_downstream)]))
            lines.append("pattern,gain_node,derivative")
            for gain in rep.gains:
                lines.append(csv_row([gain.pattern, gain.gain_node + 1, gain.value]))
            lines.append(csv_row(["passed", rep.passed]))
        if config.small_d is not None:
            rep = verify_small_d_growth(net, net.q, r_total, config.small_d, config.resolution)
            lines.append(csv_row(["check", "small-d-growth"]))
            lines.append(csv_row(["end_nodes", ";".join(str(i + 1) for i in rep.end_nodes)]))
            lines.append("d,argmax_nodes,vertex,at_end_nodes")
            for chk in rep.checks:
                lines.append(
                    csv_row(
                        [
                            chk.d,
                            ";".join(str(i + 1) for i in chk.argmax_nodes),
                            chk.all_vertices,
                            chk.at_end_nodes,
                        ]
                    )
                )
            lines.append(csv_row(["passed", rep.passed]))
        if config.concentration:
            rep = verify_biomass_concentration(net, r_total, config.K, config.resolution)
            lines.append(csv_row(["check", "biomass-concentration"]))
            lines.append(csv_row(["bound", rep.bound]))
            lines.append(csv_row(["headwater_probes", rep.headwater_count]))
            lines.append(csv_row(["attained", rep.attained_count]))
            lines.append(csv_row(["max_off_face", rep.max_off_face]))
            if rep.note:
                lines.append(csv_row(["note", rep.note]))
            lines.append(csv_row(["passed", rep.passed]))
        return ScenarioOutput(tuple(lines))
    if config.objective == "growth":
        result = maximize_growth_rate(net, r_total, config.resolution, config.refine)
    elif config.objective == "biomass":
        result = maximize_biomass(net, r_total, config.K, config.resolution, config.refine)
    else:
        raise ValueError("optimize requires --objective growth|biomass")
    _optimize_report(lines, result)
    return ScenarioOutput(tuple(lines))


def cmd_signs(config: RunConfig) -> ScenarioOutput:
    net = _require_net(config)
    if config.r_total is None:
        raise ValueError("signs requires --r-total (or an explicit --alloc to derive it)")
    base = LogisticParams(r=_uniformish(config.r_total, net.n), K=config.K)
    survey = survey_patterns(net, base, config.resolution)
    lines = header(__version__, "signs", config.settings())
    lines.append(csv_row(["patterns", ";".join(survey.codes)]))
    lines.append(csv_row(["failures", len(survey.failures)]))
    cols = [f"r{i + 1}" for i in range(net.n)] + [f"u{i + 1}" for i in range(net.n)] + ["pattern"]
    lines.append(",".join(cols))
    for row in survey.rows:
        lines.append(csv_row([*row.allocation, *row.u_star, row.code]))
    return ScenarioOutput(tuple(lines))


def _uniformish(r_total: float, n: int) -> tuple[float, ...]:
    # Placeholder allocation carrying r_total and K into the survey.
    return tuple(r_total / n for _ in range(n))


def cmd_enumerate(config: RunConfig) -> ScenarioOutput:
    if config.count_n is None:
        raise ValueError("enumerate requires n")
    n = config.count_n
    d = config.d_value if config.d_value is not None else 1.0
    q = config.q_value if config.q_value is not None else 1.0
    nets = enumerate_homogeneous_networks(n, d, q)
    lines = header(__version__, "enumerate", config.settings())
    lines.append(csv_row(["count", len(nets)]))
    lines.append("index,nodes,edges,levels,file")
    files = []
    for idx, net in enumerate(nets, start=1):
        name = f"net_{n}_{idx}.json"
        files.append((name, network_to_json(net)))
        lines.append(csv_row([idx, net.n, len(net.edges), ";".join(str(l) for l in net.levels), name]))
    return ScenarioOutput(tuple(lines), tuple(files))


def _fig5_curves(kind: str) -> tuple[list[tuple[str, np.ndarray, np.ndarray]], list[tuple[str, str]]]:
    p = _FIG5
    net = canonical_three_node(kind, p["d"], p["q"])
    span = _FIG5_SPANS[kind]
    u0 = 0.01 * np.ones(3)
    curves = []
    files = []
    for label, alloc in (("upstream", (p["r"], 0.0, 0.0)), ("downstream", (0.0, 0.0, p["r"]))):
        params = LogisticParams(r=alloc, K=p["K"])
        traj = integrate(net, params, u0, span, samples=_FIG5_SAMPLES)
        rows = ["t,u1,u2,u3,total"]
        for k in range(traj.times.size):
            rows.append(csv_row([traj.times[k], *traj.states[k], traj.total[k]]))
        files.append((f"fig5_{kind}_{label}.csv", "\n".join(rows) + "\n"))
        curves.append((label, traj.times, traj.total))
    return curves, files


def _fig8_rows() -> tuple[list[str], dict[float, list[tuple[str, np.ndarray, np.ndarray]]]]:
    d_grid = np.geomspace(*_FIG8_D_RANGE, _FIG8_POINTS)
    rows = ["q,n,d,rho"]
    curves: dict[float, list[tuple[str, np.ndarray, np.ndarray]]] = {}
    for q in _FIG8_QS:
        per_q = []
        for n in _FIG8_NS:
            alloc = np.zeros(n)
            alloc[0] = _FIG8_R
            rhos = []
            for d in d_grid:
                conn = build_connection_matrix(straight_chain(n, float(d), q))
                rhos.append(growth_rate_mu(conn, alloc, 1.0))
            for d, rho in zip(d_grid, rhos):
                rows.append(csv_row([q, n, float(d), rho]))
            per_q.append((f"n={n}", d_grid, np.asarray(rhos)))
        curves[q] = per_q
    return rows, curves


def cmd_figure(config: RunConfig) -> ScenarioOutput:
    which = config.which
    if which not in ("fig5", "fig8"):
        raise ValueError("figure requires which = fig5 or fig8")
    outdir = config.out if config.out is not None else Path(".")
    outdir.mkdir(parents=True, exist_ok=True)
    lines = header(__version__, "figure", config.settings())
    files: list[tuple[str, str]] = []
    rendered: list[str] = []
    if which == "fig5":
        for kind in _THREE_NODE_KINDS:
            curves, kind_files = _fig5_curves(kind)
            files.extend(kind_files)
            png = f"fig5_{kind}.png"
            render_lines(outdir / png, f"total biomass, {kind}", "t", "total biomass", curves)
            rendered.append(png)
    else:
        rows, curves = _fig8_rows()
        files.append(("fig8.csv", "\n".join(rows) + "\n"))
        for q, per_q in curves.items():
            png = f"fig8_q{fmt(q)}.png"
            render_lines(outdir / png, f"growth rate vs d, q={fmt(q)}", "d", "rho", per_q, logx=True)
            rendered.append(png)
    for name, _ in files:
        lines.append(csv_row(["wrote", name]))
    for name in rendered:
        lines.append(csv_row(["wrote", name]))
    return ScenarioOutput(tuple(lines), tuple(files))


_HANDLERS = {
    "growth": cmd_growth,
    "biomass": cmd_biomass,
    "equilibrium": cmd_equilibrium,
    "optimize": cmd_optimize,
    "signs": cmd_signs,
    "enumerate": cmd_enumerate,
    "figure": cmd_figure,
}


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--net", help="builtin name (tributary, straight, distributary, straight<k>) or network file path")
    sub.add_argument("--d", type=float, help="diffusion rate")
    sub.add_argument("--q", type=float, help="drift rate")
    sub.add_argument("--K", type=float, help="carrying capacity")
    sub.add_argument("--r-total", dest="r_total", type=float, help="total growth-rate budget")
    sub.add_argument("--alloc", help="per-node growth rates, comma separated")
    sub.add_argument("--resolution", type=int, help="simplex grid resolution")
    sub.add_argument("--out", help="output directory for generated files")
    sub.add_argument("--config", help="JSON config file; flags override its values")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="streampop", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"streampop {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)
    for name, blurb in (
        ("growth", "growth rate, bounds, and Perron data for one allocation"),
        ("biomass", "equilibrium biomass, bound, sign pattern, and edge flows"),
        ("equilibrium", "positive equilibrium vector"),
        ("optimize", "maximize growth rate or biomass over the simplex"),
        ("signs", "sign-pattern survey across the allocation simplex"),
        ("enumerate", "write all homogeneous networks of a given size"),
        ("figure", "trajectory and growth-curve datasets with figures"),
    ):
        sub = subs.add_parser(name, help=blurb)
        _add_common(sub)
        if name == "optimize":
            sub.add_argument("--objective", choices=("growth", "biomass"))
            sub.add_argument("--refine", action=argparse.BooleanOptionalAction, default=None)
            sub.add_argument("--uniform-perturb", dest="uniform_perturb", action="store_true", default=None)
            sub.add_argument("--small-d", dest="small_d", help="comma-separated d values for the small-d check")
            sub.add_argument("--concentration", action="store_true", default=None)
        if name == "enumerate":
            sub.add_argument("n", nargs="?", type=int, help="network size (at most 7)")
        if name == "figure":
            sub.add_argument("which", nargs="?", choices=("fig5", "fig8"))
    return parser


def _emit(config: RunConfig, output: ScenarioOutput) -> None:
    for line in output.lines:
        print(line)
    if output.files:
        outdir = config.out if config.out is not None else Path(".")
        outdir.mkdir(parents=True, exist_ok=True)
        for name, text in output.files:
            (outdir / name).write_text(text, encoding="utf-8")


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        config = _resolve(args)
        output = _HANDLERS[config.command](config)
        _emit(config, output)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
