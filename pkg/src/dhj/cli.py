"""Command line driver: simulate, hj-flow, hj-vf, compare, check.

Outputs are deterministic: CSV floats carry 17 significant digits, SVG
geometry is emitted with fixed two-decimal coordinates, and no timestamps
or environment details are written.  Exit codes: 0 success, 1 numerical
failure (partial outputs are still written), 2 configuration error.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, fields, replace

import numpy as np

from .core import NewtonConfig, NumericalError, PhasePoint, fd_gradient, norm_inf
from .hj_flow import Branch, hj_residual_right, run_closed_form_flow, solve_generating_sequence
from .hj_vf import run_closed_form_vf, solve_gamma_generic, vf_residual
from .mechanics import (
    DiscreteLagrangian,
    Side,
    hamiltonian_from_lagrangian,
    left_right_relation_residual,
    run_trajectory,
    step_right,
    symplecticity_defect,
    verify_step,
)
from .optctrl import MODEL_REGISTRY, discretize_right, reduce

__all__ = ["ConfigError", "RunConfig", "main", "run_checks", "CheckResult"]


class ConfigError(Exception):
    """Invalid or inconsistent run configuration."""


@dataclass
class RunConfig:
    """Fully resolved configuration of one CLI run."""

    command: str
    model: str = "sakamoto1d"
    r: float = 1.0
    s: float = 1.0
    q1: float = 5e-8
    p1: float = 0.0
    q2: float | None = None
    ds1: float = 0.0
    gamma1: float = 0.0
    steps: int = 18
    h: float = 1e-4
    branch: str = "continuity"
    method: str = "auto"
    tol: float = 1e-12
    max_iter: int = 50
    damping: float = 1.0
    fd_step: float = 1e-7
    csv: str | None = None
    svg: str | None = None
    log_abs: bool = False


_FLOAT_KEYS = {"r", "s", "q1", "p1", "q2", "ds1", "gamma1", "h", "tol", "damping", "fd_step"}
_INT_KEYS = {"steps", "max_iter"}
_BOOL_KEYS = {"log_abs"}
_STR_KEYS = {"model", "branch", "method", "csv", "svg"}
_OPTIONAL_KEYS = {"q2", "csv", "svg"}


def _g17(x) -> str:
    return format(float(x), ".17g")


def load_config_file(path: str) -> dict:
    """Parse a key = value configuration file into a typed dict."""
    out: dict = {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}")
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        value = value.strip()
        if key not in (_FLOAT_KEYS | _INT_KEYS | _BOOL_KEYS | _STR_KEYS):
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in _OPTIONAL_KEYS and value.lower() == "none":
            out[key] = None
            continue
        try:
            if key in _FLOAT_KEYS:
                out[key] = float(value)
            elif key in _INT_KEYS:
                out[key] = int(value)
            elif key in _BOOL_KEYS:
                if value.lower() in ("true", "1", "yes", "on"):
                    out[key] = True
                elif value.lower() in ("false", "0", "no", "off"):
                    out[key] = False
                else:
                    raise ValueError(value)
            else:
                out[key] = value
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: bad value {value!r} for {key!r}")
    return out


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", default=None, metavar="FILE",
                    help="key = value file; explicit flags override it")
    sp.add_argument("--model", default=None, help="registered model name")
    sp.add_argument("--r", type=float, default=None, help="control effort weight")
    sp.add_argument("--s", type=float, default=None, help="state cost weight")
    sp.add_argument("--q1", type=float, default=None, help="initial position")
    sp.add_argument("--p1", type=float, default=None, help="initial momentum")
    sp.add_argument("--q2", type=float, default=None,
                    help="override the second grid position fed to the slope "
                         "recursions (the later grid stays the trajectory's own)")
    sp.add_argument("--ds1", type=float, default=None, help="initial slope DS_1")
    sp.add_argument("--gamma1", type=float, default=None, help="initial slope gamma_1")
    sp.add_argument("--steps", type=int, default=None, help="number of steps")
    sp.add_argument("--h", type=float, default=None,
                    help="increment scale of the closed-form slope recursion")
    sp.add_argument("--branch", choices=["plus", "minus", "continuity"], default=None,
                    help="root policy of the closed-form slope recursion")
    sp.add_argument("--method", choices=["auto", "closed-form", "generic"], default=None,
                    help="closed-form recursions need unit weights; auto picks "
                         "them when valid and the Newton path otherwise")
    sp.add_argument("--csv", default=None, metavar="FILE", help="write results as CSV")
    sp.add_argument("--svg", default=None, metavar="FILE", help="write plots as SVG")
    sp.add_argument("--log-abs", dest="log_abs", action="store_true", default=None,
                    help="log10 vertical scale on magnitude plots")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dhj",
        description="Discrete Hamilton-Jacobi runs on reduced control models")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("simulate", "iterate the implicit phase-space map"),
        ("hj-flow", "evolve generating-function values and slopes"),
        ("hj-vf", "evolve the slope as a discrete vector field section"),
        ("compare", "run all three on one configuration and difference them"),
        ("check", "run the internal consistency battery"),
    ):
        _add_common(sub.add_parser(name, help=text))
    return parser


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    """Merge defaults, config file, and explicit flags; validate the result."""
    rc = RunConfig(command=ns.command)
    if ns.config is not None:
        for key, value in load_config_file(ns.config).items():
            rc = replace(rc, **{key: value})
    overrides = {}
    for f in fields(RunConfig):
        if f.name == "command" or not hasattr(ns, f.name):
            continue
        value = getattr(ns, f.name)
        if value is not None:
            overrides[f.name] = value
    rc = replace(rc, **overrides)

    if rc.model not in MODEL_REGISTRY:
        known = ", ".join(sorted(MODEL_REGISTRY))
        raise ConfigError(f"unknown model {rc.model!r} (known: {known})")
    if not (rc.r > 0.0) or not (rc.s > 0.0):
        raise ConfigError(f"weights must be positive, got r = {rc.r}, s = {rc.s}")
    if rc.steps < 1:
        raise ConfigError(f"steps must be at least 1, got {rc.steps}")
    if not (rc.h > 0.0):
        raise ConfigError(f"h must be positive, got {rc.h}")
    if not (rc.tol > 0.0) or rc.max_iter < 1 or not (0.0 < rc.damping <= 1.0) \
            or not (rc.fd_step > 0.0):
        raise ConfigError("invalid solver settings (tol, max_iter, damping, fd_step)")
    if rc.branch not in ("plus", "minus", "continuity"):
        raise ConfigError(f"unknown branch {rc.branch!r}")
    if rc.method not in ("auto", "closed-form", "generic"):
        raise ConfigError(f"unknown method {rc.method!r}")
    unit = rc.model == "sakamoto1d" and rc.r == 1.0 and rc.s == 1.0
    if rc.method == "auto":
        rc = replace(rc, method="closed-form" if unit else "generic")
    elif rc.method == "closed-form" and not unit:
        raise ConfigError("the closed-form recursions are derived for "
                          "sakamoto1d with r = s = 1; use --method generic")
    return rc


def build_model(rc: RunConfig):
    cfg = NewtonConfig(tol=rc.tol, max_iter=rc.max_iter, damping=rc.damping,
                       fd_step=rc.fd_step)
    cp = MODEL_REGISTRY[rc.model](r=rc.r, s=rc.s)
    H = discretize_right(reduce(cp, cfg))
    return cp, H, cfg


def trajectory_grid(rc: RunConfig, H, cfg):
    """Simulated position grid, with the optional second-entry override."""
    traj = run_trajectory(H, PhasePoint(index=1, q=[rc.q1], p=[rc.p1]), rc.steps, cfg)
    grid = [float(pt.q[0]) for pt in traj.points]
    if rc.q2 is not None and len(grid) >= 2:
        grid[1] = float(rc.q2)
    return grid, traj


def config_header(rc: RunConfig) -> list[tuple[str, str]]:
    return [
        ("command", rc.command),
        ("model", rc.model),
        ("r", _g17(rc.r)),
        ("s", _g17(rc.s)),
        ("q1", _g17(rc.q1)),
        ("p1", _g17(rc.p1)),
        ("q2", "none" if rc.q2 is None else _g17(rc.q2)),
        ("ds1", _g17(rc.ds1)),
        ("gamma1", _g17(rc.gamma1)),
        ("steps", str(rc.steps)),
        ("h", _g17(rc.h)),
        ("branch", rc.branch),
        ("method", rc.method),
        ("tol", _g17(rc.tol)),
        ("max_iter", str(rc.max_iter)),
        ("damping", _g17(rc.damping)),
        ("fd_step", _g17(rc.fd_step)),
    ]


def write_csv(path: str, rc: RunConfig, colnames: list[str], rows: list[list[str]],
              footer: list[str] | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        for key, value in config_header(rc):
            f.write(f"# {key} = {value}\n")
        f.write(",".join(colnames) + "\n")
        for row in rows:
            f.write(",".join(row) + "\n")
        for line in footer or ():
            f.write(f"# {line}\n")


# ---------------------------------------------------------------------------
# SVG emission.  One page, up to two stacked panels, everything positioned
# with fixed two-decimal pixel coordinates so output is byte-stable.

_PAGE_W, _PAGE_H = 800, 600
_COLORS = ("#1f77b4", "#d62728", "#2ca02c")


def _px(x: float) -> str:
    return f"{x:.2f}"


def _panel(out: list[str], box: tuple[float, float, float, float], title: str,
           series: list[tuple[str, list[float], list[float]]], log_y: bool) -> None:
    x0, y0, w, h = box
    plotted = []
    for label, xs, ys in series:
        pts = [(x, y) for x, y in zip(xs, ys) if math.isfinite(x) and math.isfinite(y)]
        if log_y:
            pts = [(x, math.log10(max(abs(y), 1e-300))) for x, y in pts]
        plotted.append((label, pts))
    allpts = [pt for _, pts in plotted for pt in pts]
    out.append(f'<rect x="{_px(x0)}" y="{_px(y0)}" width="{_px(w)}" height="{_px(h)}" '
               f'fill="none" stroke="#333333" stroke-width="1"/>')
    out.append(f'<text x="{_px(x0 + w / 2)}" y="{_px(y0 - 8)}" text-anchor="middle" '
               f'font-family="monospace" font-size="13">{title}</text>')
    if not allpts:
        out.append(f'<text x="{_px(x0 + w / 2)}" y="{_px(y0 + h / 2)}" '
                   f'text-anchor="middle" font-family="monospace" font-size="12">'
                   f'no finite data</text>')
        return
    xmin = min(p[0] for p in allpts)
    xmax = max(p[0] for p in allpts)
    ymin = min(p[1] for p in allpts)
    ymax = max(p[1] for p in allpts)
    if xmin == xmax:
        xmin, xmax = xmin - 0.5, xmax + 0.5
    if ymin == ymax:
        ymin, ymax = ymin - 0.5, ymax + 0.5

    def mx(x: float) -> float:
        return x0 + (x - xmin) / (xmax - xmin) * w

    def my(y: float) -> float:
        return y0 + h - (y - ymin) / (ymax - ymin) * h

    for k, (label, pts) in enumerate(plotted):
        color = _COLORS[k % len(_COLORS)]
        if len(pts) >= 2:
            coords = " ".join(f"{_px(mx(x))},{_px(my(y))}" for x, y in pts)
            out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                       f'stroke-width="1.2"/>')
        for x, y in pts:
            out.append(f'<circle cx="{_px(mx(x))}" cy="{_px(my(y))}" r="2" '
                       f'fill="{color}"/>')
        out.append(f'<text x="{_px(x0 + w - 6)}" y="{_px(y0 + 16 + 14 * k)}" '
                   f'text-anchor="end" font-family="monospace" font-size="11" '
                   f'fill="{color}">{label}</text>')
    ylab = "log10 " if log_y else ""
    out.append(f'<text x="{_px(x0)}" y="{_px(y0 + h + 16)}" text-anchor="start" '
               f'font-family="monospace" font-size="11">{format(xmin, ".6g")}</text>')
    out.append(f'<text x="{_px(x0 + w)}" y="{_px(y0 + h + 16)}" text-anchor="end" '
               f'font-family="monospace" font-size="11">{format(xmax, ".6g")}</text>')
    out.append(f'<text x="{_px(x0 - 6)}" y="{_px(y0 + h)}" text-anchor="end" '
               f'font-family="monospace" font-size="11">{ylab}{format(ymin, ".6g")}</text>')
    out.append(f'<text x="{_px(x0 - 6)}" y="{_px(y0 + 12)}" text-anchor="end" '
               f'font-family="monospace" font-size="11">{ylab}{format(ymax, ".6g")}</text>')


def write_svg(path: str, panels: list[dict]) -> None:
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_PAGE_W}" height="{_PAGE_H}" '
        f'viewBox="0 0 {_PAGE_W} {_PAGE_H}">',
        f'<rect x="0" y="0" width="{_PAGE_W}" height="{_PAGE_H}" fill="#ffffff"/>',
    ]
    n = len(panels)
    slot = (_PAGE_H - 40.0) / max(n, 1)
    for i, panel in enumerate(panels):
        box = (90.0, 40.0 + i * slot, _PAGE_W - 140.0, slot - 60.0)
        _panel(out, box, panel["title"], panel["series"], panel.get("log_y", False))
    out.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("\n".join(out) + "\n")


# ---------------------------------------------------------------------------
# Subcommands.


def cmd_simulate(rc: RunConfig) -> int:
    cp, H, cfg = build_model(rc)
    traj = run_trajectory(H, PhasePoint(index=1, q=[rc.q1], p=[rc.p1]), rc.steps, cfg)
    qs = [float(pt.q[0]) for pt in traj.points]
    ps = [float(pt.p[0]) for pt in traj.points]
    rows = [[str(pt.index), _g17(q), _g17(p), _g17(abs(q)), _g17(abs(p))]
            for pt, q, p in zip(traj.points, qs, ps)]
    if rc.csv:
        write_csv(rc.csv, rc, ["j", "q", "p", "abs_q", "abs_p"], rows)
        print(f"wrote {rc.csv}")
    if rc.svg:
        write_svg(rc.svg, [
            {"title": "momentum p against position q",
             "series": [("p(q)", qs, ps)]},
            {"title": "|p| against |q|",
             "series": [("|p|(|q|)", [abs(q) for q in qs], [abs(p) for p in ps])],
             "log_y": rc.log_abs},
        ])
        print(f"wrote {rc.svg}")
    print(f"simulate: model={rc.model} points={len(traj)} "
          f"truncated={'yes' if traj.meta['truncated'] else 'no'}")
    if traj.meta["truncated"]:
        print(f"failure at j = {traj.meta['failure_index']}: "
              f"{traj.meta['failure']}: {traj.meta['failure_message']}", file=sys.stderr)
        return 1
    return 0


def _flow_rows(H, seq):
    rows = []
    for i, e in enumerate(seq.entries):
        if i == 0:
            res = "0"
        else:
            prev = seq.entries[i - 1]
            res = _g17(hj_residual_right(H, prev.S, e.S, e.DS, prev.q, e.q))
        rows.append([str(e.j), _g17(e.q[0]), _g17(e.S), _g17(e.DS[0]),
                     seq.branch_log[i], res])
    return rows


def cmd_hj_flow(rc: RunConfig) -> int:
    cp, H, cfg = build_model(rc)
    truncated_traj = False
    if rc.method == "closed-form":
        grid, traj = trajectory_grid(rc, H, cfg)
        truncated_traj = traj.meta["truncated"]
        seq = run_closed_form_flow(grid, rc.ds1, rc.h, Branch(rc.branch))
    else:
        if rc.q2 is not None:
            raise ConfigError("--q2 only applies to the closed-form method "
                              "(the generic solver generates its own grid)")
        seq = solve_generating_sequence(H, [rc.q1], 0.0, [rc.ds1], rc.steps, cfg)
    rows = _flow_rows(H, seq)
    if rc.csv:
        write_csv(rc.csv, rc, ["j", "q", "S", "DS", "branch", "residual"], rows)
        print(f"wrote {rc.csv}")
    if rc.svg:
        qs = [float(e.q[0]) for e in seq.entries]
        dss = [float(e.DS[0]) for e in seq.entries]
        write_svg(rc.svg, [
            {"title": "slope DS against position q",
             "series": [("DS(q)", qs, dss)]},
            {"title": "|DS| against |q|",
             "series": [("|DS|(|q|)", [abs(q) for q in qs], [abs(d) for d in dss])],
             "log_y": rc.log_abs},
        ])
        print(f"wrote {rc.svg}")
    truncated = bool(seq.meta.get("truncated")) or truncated_traj
    print(f"hj-flow: method={rc.method} points={len(seq)} "
          f"truncated={'yes' if truncated else 'no'}")
    if truncated:
        detail = seq.meta.get("failure_message") or "trajectory grid truncated"
        print(f"failure: {detail}", file=sys.stderr)
        return 1
    return 0


def _vf_rows(H, seq):
    # residual column re-checks the defining equation with the scheme's own
    # quotient gamma_prev / q_next, which both update rules solve
    rows = []
    for i, e in enumerate(seq.entries):
        if i == 0:
            res = "0"
        else:
            prev = seq.entries[i - 1]
            if float(e.q[0]) == 0.0:
                res = "nan"
            else:
                quot = float(prev.gamma[0]) / float(e.q[0])
                res = _g17(vf_residual(H, prev.q, e.gamma, quot))
        rows.append([str(e.j), _g17(e.q[0]), _g17(e.gamma[0]), res])
    return rows


def cmd_hj_vf(rc: RunConfig) -> int:
    cp, H, cfg = build_model(rc)
    grid, traj = trajectory_grid(rc, H, cfg)
    if rc.method == "closed-form":
        seq = run_closed_form_vf(grid, rc.gamma1)
    else:
        seq = solve_gamma_generic(H, grid, [rc.gamma1], cfg)
    rows = _vf_rows(H, seq)
    if rc.csv:
        write_csv(rc.csv, rc, ["j", "q", "gamma", "residual"], rows)
        print(f"wrote {rc.csv}")
    if rc.svg:
        qs = [float(e.q[0]) for e in seq.entries]
        gs = [float(e.gamma[0]) for e in seq.entries]
        write_svg(rc.svg, [
            {"title": "slope gamma against position q",
             "series": [("gamma(q)", qs, gs)]},
            {"title": "|gamma| against |q|",
             "series": [("|gamma|(|q|)", [abs(q) for q in qs], [abs(g) for g in gs])],
             "log_y": rc.log_abs},
        ])
        print(f"wrote {rc.svg}")
    truncated = bool(seq.meta.get("truncated")) or traj.meta["truncated"]
    print(f"hj-vf: method={rc.method} points={len(seq)} "
          f"truncated={'yes' if truncated else 'no'}")
    if truncated:
        detail = seq.meta.get("failure_message") or "trajectory grid truncated"
        print(f"failure: {detail}", file=sys.stderr)
        return 1
    return 0


def cmd_compare(rc: RunConfig) -> int:
    cp, H, cfg = build_model(rc)
    grid, traj = trajectory_grid(rc, H, cfg)
    if rc.method == "closed-form":
        flow = run_closed_form_flow(grid, rc.ds1, rc.h, Branch(rc.branch))
        vf = run_closed_form_vf(grid, rc.gamma1)
    else:
        flow = solve_generating_sequence(H, [rc.q1], 0.0, [rc.ds1], rc.steps, cfg)
        vf = solve_gamma_generic(H, grid, [rc.gamma1], cfg)
    n = min(len(traj), len(flow), len(vf))
    rows = []
    stats_flow, stats_vf = [], []
    for i in range(n):
        pt = traj.points[i]
        q = float(pt.q[0])
        p = float(pt.p[0])
        ds = float(flow.entries[i].DS[0])
        g = float(vf.entries[i].gamma[0])
        err_flow = abs(ds - p)
        err_vf = abs(g - p)
        if abs(q) < 0.9:
            stats_flow.append(err_flow)
            stats_vf.append(err_vf)
        rows.append([str(pt.index), _g17(q), _g17(p), _g17(ds), _g17(g),
                     _g17(err_flow), _g17(err_vf)])

    def _stat(vals, fn):
        return _g17(fn(vals)) if vals else "nan"

    footer = [
        f"max_err_flow = {_stat(stats_flow, max)}",
        f"mean_err_flow = {_stat(stats_flow, lambda v: sum(v) / len(v))}",
        f"max_err_vf = {_stat(stats_vf, max)}",
        f"mean_err_vf = {_stat(stats_vf, lambda v: sum(v) / len(v))}",
    ]
    if rc.csv:
        write_csv(rc.csv, rc, ["j", "q", "p", "DS", "gamma", "err_flow", "err_vf"],
                  rows, footer)
        print(f"wrote {rc.csv}")
    if rc.svg:
        js = [float(traj.points[i].index) for i in range(n)]
        write_svg(rc.svg, [
            {"title": "momentum and slopes along the run",
             "series": [
                 ("p", js, [float(traj.points[i].p[0]) for i in range(n)]),
                 ("DS", js, [float(flow.entries[i].DS[0]) for i in range(n)]),
                 ("gamma", js, [float(vf.entries[i].gamma[0]) for i in range(n)]),
             ]},
            {"title": "slope errors against the momentum",
             "series": [
                 ("|DS - p|", js, [float(r[5]) for r in rows]),
                 ("|gamma - p|", js, [float(r[6]) for r in rows]),
             ],
             "log_y": rc.log_abs},
        ])
        print(f"wrote {rc.svg}")
    for line in footer:
        print(line)
    truncated = (traj.meta["truncated"] or bool(flow.meta.get("truncated"))
                 or bool(vf.meta.get("truncated")))
    print(f"compare: method={rc.method} points={n} "
          f"truncated={'yes' if truncated else 'no'}")
    return 1 if truncated else 0


# ---------------------------------------------------------------------------
# Consistency battery.


@dataclass
class CheckResult:
    name: str
    status: str  # PASS / FAIL / SKIP / INFO
    measured: float | None
    detail: str


def check_partial_consistency(H, points: int = 100, box: float = 2.0,
                              rel_tol: float = 1e-6, seed: int = 0) -> CheckResult:
    """Analytic slot partials against central differences at sampled points."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(points):
        q = rng.uniform(-box, box, H.dim)
        p = rng.uniform(-box, box, H.dim)
        fd1 = fd_gradient(lambda z: H.eval(z, p), q, 1e-6)
        fd2 = fd_gradient(lambda z: H.eval(q, z), p, 1e-6)
        e1 = norm_inf(np.asarray(H.d1(q, p), dtype=float) - fd1) / max(1.0, norm_inf(fd1))
        e2 = norm_inf(np.asarray(H.d2(q, p), dtype=float) - fd2) / max(1.0, norm_inf(fd2))
        worst = max(worst, e1, e2)
    status = "PASS" if worst <= rel_tol else "FAIL"
    return CheckResult("partial-consistency", status, worst,
                       f"max relative gap over {points} sampled points, limit {rel_tol:g}")


def check_step_residuals(H, traj, cfg) -> CheckResult:
    limit = 10.0 * cfg.tol
    worst = 0.0
    for a, b in zip(traj.points[:-1], traj.points[1:]):
        worst = max(worst, verify_step(H, a, b))
    status = "PASS" if worst <= limit else "FAIL"
    return CheckResult("step-residuals", status, worst,
                       f"max step-equation residual over {len(traj) - 1} "
                       f"transitions, limit {limit:g}")


def check_symplecticity(H, traj, band: float = 0.9, limit: float = 1e-5) -> CheckResult:
    pts = [pt for pt in traj.points if norm_inf(pt.q) < band]
    worst = 0.0
    for pt in pts:
        worst = max(worst, symplecticity_defect(H, pt, fd_step=1e-6))
    status = "PASS" if worst <= limit else "FAIL"
    return CheckResult("symplecticity", status, worst,
                       f"max defect over {len(pts)} points with |q| < {band:g}, "
                       f"limit {limit:g}")


def check_flow_residuals(H, rc, cfg) -> CheckResult:
    seq = solve_generating_sequence(H, [rc.q1], 0.0, [rc.ds1], rc.steps, cfg)
    worst = 0.0
    for prev, e in zip(seq.entries[:-1], seq.entries[1:]):
        worst = max(worst, abs(hj_residual_right(H, prev.S, e.S, e.DS, prev.q, e.q)))
    if seq.meta.get("truncated"):
        return CheckResult("flow-residuals", "FAIL", worst,
                           f"sequence truncated: {seq.meta.get('failure_message')}")
    status = "PASS" if worst <= 1e-12 else "FAIL"
    return CheckResult("flow-residuals", status, worst,
                       f"max evolution-equation residual over {len(seq) - 1} "
                       f"transitions, limit 1e-12")


def check_vf_agreement(H, rc, cfg, grid) -> CheckResult:
    if not (rc.model == "sakamoto1d" and rc.r == 1.0 and rc.s == 1.0):
        return CheckResult("vf-agreement", "SKIP", None,
                           "closed-form reference needs r = s = 1")
    gen = solve_gamma_generic(H, grid, [rc.gamma1], cfg)
    cf = run_closed_form_vf(grid, rc.gamma1)
    n = min(len(gen), len(cf))
    worst = 0.0
    for i in range(n):
        worst = max(worst, abs(float(gen.entries[i].gamma[0])
                               - float(cf.entries[i].gamma[0])))
    ok = n >= 2 and not gen.meta.get("truncated") and not cf.meta.get("truncated")
    status = "PASS" if ok and worst <= 1e-9 else "FAIL"
    return CheckResult("vf-agreement", status, worst,
                       f"max |generic - closed form| over {n} rows, limit 1e-9")


def _free_particle() -> DiscreteLagrangian:
    return DiscreteLagrangian(
        eval=lambda a, b: 0.5 * float((b - a) @ (b - a)),
        d1=lambda a, b: np.asarray(a, dtype=float) - np.asarray(b, dtype=float),
        d2=lambda a, b: np.asarray(b, dtype=float) - np.asarray(a, dtype=float),
        dim=1,
    )


def check_left_right(cfg, steps: int = 50) -> CheckResult:
    """Right/left dual identity along a free-particle trajectory."""
    L = _free_particle()
    Hp = hamiltonian_from_lagrangian(L, Side.RIGHT, cfg)
    Hm = hamiltonian_from_lagrangian(L, Side.LEFT, cfg)
    traj = run_trajectory(Hp, PhasePoint(index=1, q=[0.2], p=[0.1]), steps, cfg)
    worst = 0.0
    for a, b in zip(traj.points[:-1], traj.points[1:]):
        worst = max(worst, left_right_relation_residual(Hp, Hm, a.q, a.p, b.q, b.p))
    ok = not traj.meta["truncated"]
    status = "PASS" if ok and worst <= 1e-9 else "FAIL"
    return CheckResult("left-right-identity", status, worst,
                       f"max dual-relation residual over {len(traj) - 1} "
                       f"free-particle transitions, limit 1e-9")


def singular_start_probe(H, cfg) -> CheckResult:
    """Classify what a step from the stationary-band start does."""
    q_band = 1.0 / math.sqrt(3.0)
    try:
        step_right(H, PhasePoint(index=1, q=[q_band], p=[0.0]), cfg)
    except NumericalError as exc:
        return CheckResult("singular-start", "INFO", None,
                           f"step from q = 1/sqrt(3) raised {type(exc).__name__} "
                           f"(expected: the implicit update is singular there)")
    return CheckResult("singular-start", "INFO", None,
                       "step from q = 1/sqrt(3) completed; no singularity detected")


def run_checks(rc: RunConfig) -> list[CheckResult]:
    cp, H, cfg = build_model(rc)
    traj = run_trajectory(H, PhasePoint(index=1, q=[rc.q1], p=[rc.p1]), rc.steps, cfg)
    grid = [float(pt.q[0]) for pt in traj.points]
    results = [
        check_partial_consistency(H),
        check_step_residuals(H, traj, cfg),
        check_symplecticity(H, traj),
        check_flow_residuals(H, rc, cfg),
        check_vf_agreement(H, rc, cfg, grid),
        check_left_right(cfg),
        singular_start_probe(H, cfg),
    ]
    return results


def cmd_check(rc: RunConfig) -> int:
    results = run_checks(rc)
    n_pass = n_fail = n_skip = 0
    for res in results:
        if res.status == "INFO":
            print(f"INFO {res.name}: {res.detail}")
            continue
        measured = "n/a" if res.measured is None else f"{res.measured:.6e}"
        print(f"CHECK {res.name}: {res.status} (measured = {measured}; {res.detail})")
        if res.status == "PASS":
            n_pass += 1
        elif res.status == "SKIP":
            n_skip += 1
        else:
            n_fail += 1
    print(f"check: {n_pass} passed, {n_fail} failed, {n_skip} skipped")
    return 1 if n_fail else 0


_HANDLERS = {
    "simulate": cmd_simulate,
    "hj-flow": cmd_hj_flow,
    "hj-vf": cmd_hj_vf,
    "compare": cmd_compare,
    "check": cmd_check,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        rc = resolve_config(ns)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return _HANDLERS[rc.command](rc)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
