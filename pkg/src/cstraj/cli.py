"""Command-line driver: ``cstraj <mode> --config run.json [--set k=v ...] [--output out.csv]``.

Modes: ``trajectory`` (one root and its path), ``propagate`` (semiclassical
sweep), ``exact`` (eigen-expansion sweep), ``compare`` (both, with errors).
Exit status 0 on success, 2 on a numerical failure, 3 on a bad configuration.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CausticError, ConfigError, DiscontinuityError, NoConvergence, NonFiniteError
from .integrator import period_estimate
from .model import ModelParams, PropagatorLabels
from .oracle import exact_csp_series, solve_spectrum
from .scsp import propagate_sweep
from .shooting import ShootingConfig, descend, multi_start

logger = logging.getLogger("cstraj")

MODES = ("trajectory", "propagate", "exact", "compare")
EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG = 0, 2, 3

SCHEMA = {
    "model": {"hbar": 1.0, "b": 1.0, "lambda": 1.0, "beta": 0.0, "smoothed": True},
    "labels": {"q_i": 0.0, "p_i": 1.0, "q_f": 0.0, "p_f": 1.0},
    "sweep": {"t_max": 1.0, "n_t": 101},
    "shooting": {
        "delta": 1e-12, "n_steps": 3000, "eps0": 0.1, "eps_scale": 0.5,
        "fd_step": 1e-6, "max_iters": 2000, "max_halvings": 20,
    },
    "oracle": {"basis_size": 200, "n_levels": None},
    "mode": None,
    "seeds": [],
    "output": None,
}

_INTS = {"sweep.n_t", "shooting.n_steps", "shooting.max_iters", "shooting.max_halvings",
         "oracle.basis_size", "oracle.n_levels"}
_BOOLS = {"model.smoothed"}


@dataclass
class RunConfig:
    model: ModelParams
    labels: PropagatorLabels
    t_max: float
    n_t: int
    shooting: ShootingConfig
    basis_size: int
    n_levels: int | None
    mode: str | None = None
    seeds: list = field(default_factory=list)
    output: str | None = None

    @property
    def T_grid(self):
        return np.linspace(0.0, self.t_max, self.n_t)


def _merge(defaults, given, path, source):
    out = copy.deepcopy(defaults)
    if not isinstance(given, dict):
        raise ConfigError(f"{source}: {path or 'top level'}: expected an object")
    for key, value in given.items():
        dotted = f"{path}.{key}" if path else key
        if key not in defaults:
            raise ConfigError(f"{source}: {dotted}: unknown key")
        if isinstance(defaults[key], dict):
            out[key] = _merge(defaults[key], value, dotted, source)
        else:
            out[key] = value
    return out


def _number(raw, dotted, source):
    if dotted in _BOOLS:
        if not isinstance(raw, bool):
            raise ConfigError(f"{source}: {dotted}: expected true/false, got {raw!r}")
        return raw
    if dotted in _INTS:
        if raw is None and dotted == "oracle.n_levels":
            return None
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise ConfigError(f"{source}: {dotted}: expected an integer, got {raw!r}")
        return raw
    if isinstance(raw, bool) or not isinstance(raw, (int, float)) or not math.isfinite(raw):
        raise ConfigError(f"{source}: {dotted}: expected a finite number, got {raw!r}")
    return float(raw)


def _checked(cfg, source):
    flat = {}
    for sec in ("model", "labels", "sweep", "shooting", "oracle"):
        for key, raw in cfg[sec].items():
            flat[f"{sec}.{key}"] = _number(raw, f"{sec}.{key}", source)

    def need(cond, dotted, msg):
        if not cond:
            raise ConfigError(f"{source}: {dotted}: {msg} (got {flat[dotted]!r})")

    need(flat["model.hbar"] > 0, "model.hbar", "must be > 0")
    need(flat["model.b"] > 0, "model.b", "must be > 0")
    need(flat["model.beta"] >= 0, "model.beta", "must be >= 0")
    need(flat["sweep.t_max"] >= 0, "sweep.t_max", "must be >= 0")
    need(flat["sweep.n_t"] >= 1, "sweep.n_t", "must be >= 1")
    for key in ("delta", "eps0", "eps_scale", "fd_step"):
        need(flat[f"shooting.{key}"] > 0, f"shooting.{key}", "must be > 0")
    need(flat["shooting.n_steps"] >= 1, "shooting.n_steps", "must be >= 1")
    need(flat["shooting.max_iters"] >= 1, "shooting.max_iters", "must be >= 1")
    need(flat["shooting.max_halvings"] >= 0, "shooting.max_halvings", "must be >= 0")
    need(flat["oracle.basis_size"] >= 2, "oracle.basis_size", "must be >= 2")
    if flat["oracle.n_levels"] is not None:
        need(1 <= flat["oracle.n_levels"] <= flat["oracle.basis_size"], "oracle.n_levels",
             "must lie in [1, basis_size]")

    mode = cfg["mode"]
    if mode is not None and mode not in MODES:
        raise ConfigError(f"{source}: mode: must be one of {', '.join(MODES)} (got {mode!r})")
    seeds = cfg["seeds"]
    if not isinstance(seeds, list):
        raise ConfigError(f"{source}: seeds: expected a list of [x1, p1] pairs")
    clean = []
    for k, s in enumerate(seeds):
        if (not isinstance(s, (list, tuple)) or len(s) != 2
                or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in s)):
            raise ConfigError(f"{source}: seeds[{k}]: expected [x1, p1], got {s!r}")
        clean.append((float(s[0]), float(s[1])))
    output = cfg["output"]
    if output is not None and not isinstance(output, str):
        raise ConfigError(f"{source}: output: expected a path string")

    params = ModelParams(flat["model.hbar"], flat["model.b"], flat["model.lambda"],
                         flat["model.beta"], flat["model.smoothed"])
    labels = PropagatorLabels.make(flat["labels.q_i"], flat["labels.p_i"], flat["labels.q_f"],
                                   flat["labels.p_f"], flat["sweep.t_max"], params)
    shooting = ShootingConfig(
        delta=flat["shooting.delta"], eps0=flat["shooting.eps0"], eps_scale=flat["shooting.eps_scale"],
        fd_step=flat["shooting.fd_step"], max_iters=flat["shooting.max_iters"],
        n_steps=flat["shooting.n_steps"], max_halvings=flat["shooting.max_halvings"],
    )
    return RunConfig(params, labels, flat["sweep.t_max"], flat["sweep.n_t"], shooting,
                     flat["oracle.basis_size"], flat["oracle.n_levels"], mode, clean, output)


def _parse_override(item):
    if "=" not in item:
        raise ConfigError(f"--set {item!r}: expected key=value")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def load_config(path=None, overrides=(), text=None) -> RunConfig:
    """Read a JSON run configuration, apply ``key=value`` overrides, validate."""
    source = str(path) if path is not None else "<config>"
    if text is None:
        text = Path(path).read_text() if path is not None else "{}"
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    cfg = _merge(SCHEMA, raw, "", source)
    for item in overrides:
        key, value = _parse_override(item)
        parts = key.split(".")
        node, defaults = cfg, SCHEMA
        for part in parts[:-1]:
            if part not in defaults or not isinstance(defaults[part], dict):
                raise ConfigError(f"--set {key}: unknown key")
            node, defaults = node[part], defaults[part]
        if parts[-1] not in defaults or isinstance(defaults[parts[-1]], dict):
            raise ConfigError(f"--set {key}: unknown key")
        node[parts[-1]] = value
    return _checked(cfg, source)


def _fmt(x):
    return format(float(x), ".17g")


def _write_csv(header, rows, output):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) if not isinstance(v, (int, np.integer)) else str(v) for v in row])
    text = buf.getvalue()
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def report_path(output) -> Path:
    """Where the JSON report for a CSV at ``output`` goes (``run.csv`` -> ``run.summary.json``)."""
    out = Path(output)
    return out.with_name(out.stem + ".summary.json")


def _write_json(report, output, to_stdout=False):
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if output:
        report_path(output).write_text(text)
    if to_stdout:
        sys.stdout.write(text)
    elif not output:
        sys.stderr.write(text)


def run_trajectory(cfg: RunConfig) -> int:
    labels = cfg.labels.at(cfg.t_max)
    seeds = cfg.seeds or [(labels.initial.q, labels.initial.p)]
    if len(seeds) == 1:
        root = descend(seeds[0], labels, cfg.model, cfg.shooting)
        roots = [root]
    else:
        found = multi_start(labels, cfg.model, cfg.shooting, seeds)
        if not found.roots:
            raise NoConvergence(f"none of {len(seeds)} seeds converged")
        roots = found.roots
        root = roots[0]
    traj = root.trajectory
    report = {
        "x1_0": root.x1_0,
        "p1_0": root.p1_0,
        "D_final": root.D_final,
        "iters": root.iters,
        "period_estimate": period_estimate(traj),
        "T": labels.T,
        "energy": [traj.energy0.real, traj.energy0.imag],
        "warnings": traj.warnings,
    }
    if len(seeds) > 1:
        report["roots"] = [{"x1_0": r.x1_0, "p1_0": r.p1_0, "D_final": r.D_final} for r in roots]
    if cfg.output:
        rows = zip(traj.t, traj.x1, traj.p1, traj.x2, traj.p2)
        _write_csv(["t", "x1", "p1", "x2", "p2"], rows, cfg.output)
    _write_json(report, cfg.output, to_stdout=True)
    return EXIT_OK


def _exact_series(cfg: RunConfig, T_grid):
    eig = solve_spectrum(cfg.model, cfg.basis_size, check_levels=cfg.n_levels is None)
    n = cfg.n_levels or eig.n_levels
    return exact_csp_series(eig, cfg.labels, cfg.model, T_grid, n), n


def run_propagate(cfg: RunConfig) -> int:
    out = propagate_sweep(cfg.labels, cfg.T_grid, cfg.model, cfg.shooting, extra_seeds=cfg.seeds)
    rows = [(s.T, s.K_scsp.real, s.K_scsp.imag, len(s.terms)) for s in out.samples]
    _write_csv(["T", "re_scsp", "im_scsp", "n_roots"], rows, cfg.output)
    summary = {"n_rows": len(rows), "truncated": out.truncated}
    if out.truncated:
        summary["truncation_notice"] = f"sweep stopped at T={out.truncated_at!r}: {out.reason}"
    _write_json(summary, cfg.output)
    return EXIT_NUMERIC if out.truncated else EXIT_OK


def run_exact(cfg: RunConfig) -> int:
    T = cfg.T_grid
    K, n = _exact_series(cfg, T)
    _write_csv(["T", "re_exact", "im_exact"], zip(T, K.real, K.imag), cfg.output)
    _write_json({"n_rows": len(T), "basis_size": cfg.basis_size, "n_levels": int(n)}, cfg.output)
    return EXIT_OK


def compare_rows(cfg: RunConfig):
    """Rows ``(T, re_exact, im_exact, re_scsp, im_scsp, abs_err)`` and a summary dict."""
    out = propagate_sweep(cfg.labels, cfg.T_grid, cfg.model, cfg.shooting, extra_seeds=cfg.seeds)
    T = out.T
    K_exact, n = _exact_series(cfg, T)
    K_scsp = out.K
    err = np.abs(K_scsp - K_exact)
    rows = list(zip(T, K_exact.real, K_exact.imag, K_scsp.real, K_scsp.imag, err))
    norm = float(np.linalg.norm(K_exact)) if len(T) else 0.0
    summary = {
        "n_rows": len(rows),
        "max_abs_err": float(err.max()) if len(err) else None,
        "rel_l2_err": float(np.linalg.norm(K_scsp - K_exact) / norm) if norm else None,
        "max_rel_err": float(np.max(err / np.abs(K_exact))) if len(err) else None,
        "n_levels": int(n),
        "truncated": out.truncated,
    }
    if out.truncated:
        summary["truncation_notice"] = (
            f"sweep stopped at T={out.truncated_at!r} after {len(rows)} of {len(cfg.T_grid)} rows: {out.reason}"
        )
    return rows, summary


def run_compare(cfg: RunConfig) -> int:
    rows, summary = compare_rows(cfg)
    _write_csv(["T", "re_exact", "im_exact", "re_scsp", "im_scsp", "abs_err"], rows, cfg.output)
    _write_json(summary, cfg.output)
    return EXIT_NUMERIC if summary["truncated"] else EXIT_OK


RUNNERS = {"trajectory": run_trajectory, "propagate": run_propagate, "exact": run_exact, "compare": run_compare}


def build_parser():
    ap = argparse.ArgumentParser(prog="cstraj", description="Semiclassical and exact coherent-state propagators.")
    ap.add_argument("mode", choices=MODES, help="what to compute")
    ap.add_argument("--config", help="JSON run configuration")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                    help="override a config entry, e.g. --set model.beta=0.1")
    ap.add_argument("--output", help="CSV path; the JSON report goes next to it as <stem>.summary.json")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config, args.overrides)
        if cfg.mode is not None and cfg.mode != args.mode:
            raise ConfigError(f"{args.config}: mode: config says {cfg.mode!r} but {args.mode!r} was requested")
        if args.output:
            cfg.output = args.output
    except (ConfigError, OSError, ValueError) as exc:
        print(f"cstraj: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return RUNNERS[args.mode](cfg)
    except (NoConvergence, NonFiniteError, CausticError, DiscontinuityError) as exc:
        print(f"cstraj: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
