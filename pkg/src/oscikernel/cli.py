"""Batch front-end: ``oscikernel <task> --config <file> [--plot] [--out <dir>]``.

A task config is a JSON object.  Only ``task`` (or the positional task) is
required; everything else has a default:

    {"model": "h3", "task": "lemma6", "alpha": 0.5, "beta": 2.0,
     "j": [4, ..., 14], "q": [...], "k": [...], "p": [2, 4], "xi": [...],
     "v": [0.0, 0.9], "delta": 0.1, "rel_tol": 1e-10, "abs_tol": 1e-15}

Every task writes ``<out>/<task>.csv`` with a header fixed per task (the
columns of ``TASK_COLUMNS``), and with ``--plot`` a plain-text Python
script ``<out>/<task>_plot.py`` that plots the CSV.

Exit codes: 0 every pass flag true, 1 a verification failed, 2 config or
IO error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .space_models import get_model

TASKS = ("kernel", "lemma3", "lemma5", "lemma6", "lemma7", "lemma8", "symbol-class", "ks", "apply",
         "heat-check", "partition-check")

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

TASK_COLUMNS: dict[str, list[str]] = {
    "kernel": ["task", "model", "j", "profile_max", "dual_rel", "pass"],
    "lemma3": ["task", "model", "j", "q", "X", "S", "S_tau0", "tau0_bound", "c_hat", "pass"],
    "lemma5": ["task", "function", "k", "xi", "error", "slope", "pass"],
    "lemma6": ["task", "model", "part", "j", "q", "value", "compensated", "slope", "pass"],
    "lemma7": ["task", "model", "j", "l1_ball", "l2_global", "slope", "threshold", "pass"],
    "lemma8": ["task", "model", "j", "sup_mj", "C_zeta", "certificate", "slope", "pass"],
    "symbol-class": ["task", "model", "v", "k", "lam", "abs_derivative", "slope", "target", "pass"],
    "ks": ["task", "model", "p", "j", "I_j", "integral", "tail_bound", "tail_ratio", "pass"],
    "apply": ["task", "model", "r1", "r2", "f", "Tf_re", "Tf_im", "pass"],
    "heat-check": ["task", "model", "check", "t", "error", "tol", "pass"],
    "partition-check": ["task", "J", "lam_max", "max_abs_error", "pass"],
}

# (x column, y column, log-y) for the emitted plot script
PLOT_AXES: dict[str, tuple[str, str, bool]] = {
    "kernel": ("j", "profile_max", True),
    "lemma3": ("X", "S", True),
    "lemma5": ("xi", "error", True),
    "lemma6": ("j", "value", True),
    "lemma7": ("j", "l1_ball", True),
    "lemma8": ("j", "sup_mj", True),
    "symbol-class": ("lam", "abs_derivative", True),
    "ks": ("j", "I_j", True),
    "apply": ("r1", "Tf_re", False),
    "heat-check": ("t", "error", False),
    "partition-check": ("J", "max_abs_error", False),
}


class ConfigError(ValueError):
    """Schema or precondition violation in a task config (exit code 2)."""


@dataclass
class TaskConfig:
    task: str
    model: str = "h3"
    alpha: float = 0.5
    beta: float = 2.0
    j: list[int] = field(default_factory=lambda: list(range(4, 15)))
    q: list[float] | None = None
    k: list[int] | None = None
    p: list[float] = field(default_factory=lambda: [2.0, 4.0])
    xi: list[float] = field(default_factory=lambda: [16.0, 32.0, 64.0, 128.0, 256.0])
    v: list[float] = field(default_factory=lambda: [0.0, 0.9])
    delta: float = 0.1
    t: float = 0.5
    J: int = 20
    kernel: str = "global"
    rel_tol: float = 1e-10
    abs_tol: float = 1e-15
    out: str = "."


_LIST_KEYS = {"j": int, "q": float, "k": int, "p": float, "xi": float, "v": float}
_SCALAR_KEYS = {"model": str, "alpha": float, "beta": float, "delta": float, "t": float, "J": int,
                "kernel": str, "rel_tol": float, "abs_tol": float, "out": str, "task": str}


def _coerce(key: str, value, kind):
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number")
    if kind is int:
        if float(value) != int(value):
            raise ConfigError(f"{key}: expected an integer")
        return int(value)
    if not math.isfinite(float(value)):
        raise ConfigError(f"{key}: must be finite")
    return float(value)


def parse_config(source: str | os.PathLike | dict | None, task: str | None = None, **overrides) -> TaskConfig:
    """Validated TaskConfig from a JSON file, a dict or bare flags.

    Unknown keys, wrong types and violated preconditions raise ConfigError
    naming the offending key.
    """
    if source is None:
        doc: dict[str, Any] = {}
    elif isinstance(source, dict):
        doc = dict(source)
    else:
        try:
            doc = json.loads(Path(source).read_text())
        except OSError as exc:
            raise ConfigError(f"config: cannot read {source}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be a JSON object")
    doc.update({k: v for k, v in overrides.items() if v is not None})
    if task is not None:
        if "task" in doc and doc["task"] != task:
            raise ConfigError(f"task: config says {doc['task']!r} but the command line says {task!r}")
        doc["task"] = task
    if "task" not in doc:
        raise ConfigError("task: missing")

    kw: dict[str, Any] = {}
    for key, value in doc.items():
        if key in _LIST_KEYS:
            if not isinstance(value, list) or not value:
                raise ConfigError(f"{key}: expected a non-empty list")
            kw[key] = [_coerce(key, x, _LIST_KEYS[key]) for x in value]
        elif key in _SCALAR_KEYS:
            kw[key] = _coerce(key, value, _SCALAR_KEYS[key])
        else:
            raise ConfigError(f"{key}: unknown key")
    cfg = TaskConfig(**kw)
    _validate(cfg)
    return cfg


def _validate(cfg: TaskConfig) -> None:
    from .multiplier import MultiplierParams

    if cfg.task not in TASKS:
        raise ConfigError(f"task: must be one of {', '.join(TASKS)}")
    try:
        get_model(cfg.model)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"model: unknown model {cfg.model!r}") from exc
    try:
        MultiplierParams(cfg.alpha, cfg.beta)
    except ValueError as exc:
        raise ConfigError(f"{'alpha' if 'alpha' in str(exc) else 'beta'}: {exc}") from exc
    if not 0.0 < cfg.delta < 0.125:
        raise ConfigError("delta: must lie in (0, 1/8)")
    if any(j < 0 for j in cfg.j):
        raise ConfigError("j: indices must be >= 0")
    if not (cfg.rel_tol > 0 and cfg.abs_tol > 0):
        raise ConfigError("rel_tol: tolerances must be positive")
    if cfg.kernel not in ("global", "zero"):
        raise ConfigError("kernel: must be 'global' or 'zero'")
    if any(p < 1 for p in cfg.p):
        raise ConfigError("p: exponents must be >= 1")
    if any(not 0.0 <= v < 1.0 for v in cfg.v):
        raise ConfigError("v: tube parameters must lie in [0, 1)")
    if not cfg.t > 0:
        raise ConfigError("t: must be positive")
    if cfg.task in ("lemma3", "lemma6") and cfg.q is not None:
        for j in cfg.j:
            for q in cfg.q:
                if q < -j or q > 0:
                    raise ConfigError(f"q: {q:g} is outside [-j, 0] for j={j}")
    if (cfg.task == "lemma7" or (cfg.task == "lemma6" and cfg.q is None)) and len(cfg.j) < 5:
        raise ConfigError("j: the slope fit needs at least 5 indices")
    if cfg.task == "lemma8" and len(cfg.j) < 4:
        raise ConfigError("j: the slope fit needs at least 4 indices")
    if cfg.task == "lemma5":
        xi = sorted(cfg.xi)
        if len(xi) < 2 or xi[0] <= 0:
            raise ConfigError("xi: needs at least two positive bandwidths")
        r = np.array(xi[1:]) / np.array(xi[:-1])
        if not np.allclose(r, r[0], rtol=1e-9):
            raise ConfigError("xi: bandwidths must form a geometric sequence")
    if cfg.k is not None and any(not 0 <= k <= 4 for k in cfg.k):
        raise ConfigError("k: orders must lie in [0, 4]")
    if cfg.task == "partition-check" and not 1 <= cfg.J <= 40:
        raise ConfigError("J: must lie in [1, 40]")


# ---------------------------------------------------------------------------
# task runners: each returns (rows, all_passed)
# ---------------------------------------------------------------------------

def _spec(cfg: TaskConfig):
    from .quadrature import QuadratureSpec

    return QuadratureSpec(rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol)


def _params(cfg: TaskConfig):
    from .multiplier import MultiplierParams

    return MultiplierParams(cfg.alpha, cfg.beta)


def _run_kernel(cfg, model):
    from .kernels import compute_kappa_j, dual_route_discrepancy

    rows, ok = [], True
    r = np.linspace(0.0, 3.0, 61)
    for j in cfg.j:
        piece = compute_kappa_j(model, _params(cfg), j, r if model.d == 1 else (r, r), _spec(cfg))
        rel = dual_route_discrepancy(piece)
        passed = rel <= 1e-6
        ok &= passed
        rows.append({"j": j, "profile_max": piece.profile.sup(), "dual_rel": rel, "pass": passed})
    return rows, ok


def _run_lemma3(cfg, model):
    from .heat_semigroup import SeriesSpec, verify_pointwise_decay

    q_lists = None if cfg.q is None else {j: cfg.q for j in cfg.j}
    rep = verify_pointwise_decay(model, cfg.j, q_lists, SeriesSpec(delta=cfg.delta))
    return [dict(r, **{"pass": rep.passed}) for r in rep.rows], rep.passed


def _run_lemma5(cfg, model):
    from .band_limited import bump_suite, rate_table, verify_approx_rate

    rows, ok = [], True
    ks = cfg.k or [1, 2, 3]
    tables: dict[str, dict] = {}
    for k in ks:
        for f in bump_suite(k):
            if f.name not in tables:
                tables[f.name] = rate_table(f, cfg.xi)
            rep = verify_approx_rate(f, k, cfg.xi, errors=tables[f.name])
            ok &= rep.passed
            rows += [{"function": f.name, "k": k, "xi": r["xi"], "error": r["error"], "slope": r["slope"],
                      "pass": rep.passed} for r in rep.rows]
    return rows, ok


def _run_lemma6(cfg, model):
    from .kernels import verify_lemma6_annulus, verify_lemma6_global

    rows, ok = [], True
    if len(cfg.j) >= 5:
        rep = verify_lemma6_global(model, _params(cfg), cfg.j)
        rows += [{"part": "global", "j": r["j"], "value": r["l2_radial"], "slope": r["slope"], "pass": rep.passed}
                 for r in rep.rows]
        ok = rep.passed
    if cfg.q is not None:
        for k in cfg.k or [2]:
            ann = verify_lemma6_annulus(model, _params(cfg), cfg.j, cfg.q, k)
            ok &= ann.passed
            rows += [{"part": f"annulus_k{k}", "j": r["j"], "q": r["q"], "value": r["l2_annulus"],
                      "compensated": r["compensated"], "pass": ann.passed} for r in ann.rows]
    return rows, ok


def _run_lemma7(cfg, model):
    from .kernels import verify_lemma7

    rep = verify_lemma7(model, _params(cfg), cfg.j)
    fit = rep.fits["l1_ball"]
    thr = rep.rows[0]["exponent_target"] + rep.tolerances["slack"]
    return [{"j": r["j"], "l1_ball": r["l1_ball"], "l2_global": r["l2_global"], "slope": fit.slope,
             "threshold": thr, "pass": rep.passed} for r in rep.rows], rep.passed


def _run_lemma8(cfg, model):
    from .kernels import verify_lemma8

    rep = verify_lemma8(model, _params(cfg), cfg.j)
    slope = rep.fits["certificate"].slope
    return [dict(r, slope=slope, **{"pass": rep.passed}) for r in rep.rows], rep.passed


def _run_symbol_class(cfg, model):
    from .multiplier import verify_symbol_class

    rows, ok = [], True
    params = _params(cfg)
    for v in cfg.v:
        for k in cfg.k or [1]:
            rep = verify_symbol_class(params, model, v, k)
            ok &= rep.passed
            slope = rep.fits["log_deriv_vs_log_1p_lam"].slope
            target = -params.beta - k * (1 - params.alpha)
            rows += [{"v": v, "k": k, "lam": r["lam"], "abs_derivative": r["abs_derivative"], "slope": slope,
                      "target": target, "pass": rep.passed} for r in rep.rows]
    return rows, ok


def _run_ks(cfg, model):
    from .operator import global_kernel, ks_certificate

    if cfg.kernel == "zero":
        kern = lambda pts: np.zeros(np.asarray(pts).shape[:-1])  # noqa: E731
    else:
        kern = global_kernel(model, _params(cfg))
    rows, ok = [], True
    for p in cfg.p:
        rep = ks_certificate(model, kern, p)
        ok &= rep.passed
        rows += [{"p": p, "j": j, "I_j": v, "integral": rep.integral_value, "tail_bound": rep.tail_bound,
                  "tail_ratio": rep.tail_ratio, "pass": rep.passed} for j, v in zip(rep.j_values, rep.I_j)]
    return rows, ok


def _run_apply(cfg, model):
    from .operator import apply_multiplier
    from .space_models import heat_kernel
    from .transforms import RadialProfile

    r = np.linspace(0.0, 6.0, 61)
    grid = (r,) if model.d == 1 else (r, r)
    f = RadialProfile.from_function(model, lambda x: heat_kernel(model, cfg.t, x), grid)
    out = apply_multiplier(model, _params(cfg), f, spec=_spec(cfg))
    vals = out.values.ravel()
    fv = f.values.ravel()
    ok = bool(np.all(np.isfinite(vals)))
    rows = []
    for pt, a, b in zip(out.points, fv, vals):
        rows.append({"r1": float(pt[0]), "r2": float(pt[1]) if model.d == 2 else "", "f": float(a.real),
                     "Tf_re": float(b.real), "Tf_im": float(b.imag), "pass": ok})
    return rows, ok


def _run_heat_check(cfg, model):
    from .heat_semigroup import verify_heat_checks

    rep = verify_heat_checks(model)
    return [dict(r, **{"pass": rep.passed}) for r in rep.rows], rep.passed


def _run_partition(cfg, model):
    from .multiplier import verify_partition

    lam_max = min(2.0**10, 2.0 ** (cfg.J / 2))
    rep = verify_partition(J=cfg.J, lam_max=lam_max)
    return [dict(r, **{"pass": rep.passed}) for r in rep.rows], rep.passed


_RUNNERS = {
    "kernel": _run_kernel, "lemma3": _run_lemma3, "lemma5": _run_lemma5, "lemma6": _run_lemma6,
    "lemma7": _run_lemma7, "lemma8": _run_lemma8, "symbol-class": _run_symbol_class, "ks": _run_ks,
    "apply": _run_apply, "heat-check": _run_heat_check, "partition-check": _run_partition,
}


class NumericalFailure(RuntimeError):
    """A computation inside a task did not converge or produced non-finite output."""


def run_task(cfg: TaskConfig) -> tuple[list[dict[str, Any]], int]:
    """Rows (restricted to the task's columns) and the exit code 0 or 1.

    Any failure inside the numerical modules is re-raised as
    NumericalFailure (exit code 3).
    """
    model = get_model(cfg.model)
    try:
        with np.errstate(over="ignore", under="ignore"):
            raw, ok = _RUNNERS[cfg.task](cfg, model)
    except Exception as exc:  # every module error is numerical at this point: the config is validated
        raise NumericalFailure(f"{type(exc).__name__}: {exc}") from exc
    cols = TASK_COLUMNS[cfg.task]
    rows = []
    for r in raw:
        r = dict(r, task=cfg.task, model=model.id)
        rows.append({c: r.get(c, "") for c in cols})
    return rows, EXIT_OK if ok else EXIT_VERIFY


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_report(rows: list[dict[str, Any]], task: str, out_dir, plot: bool = False) -> list[Path]:
    """``<out>/<task>.csv`` with the fixed header, plus the plot script when asked."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cols = TASK_COLUMNS[task]
    stem = task.replace("-", "_")
    path = out / f"{stem}.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_cell(r.get(c, "")) for c in cols])
    paths = [path]
    if plot:
        x, y, logy = PLOT_AXES[task]
        script = out / f"{stem}_plot.py"
        script.write_text(_PLOT_TEMPLATE.format(csv=path.name, x=x, y=y, logy=logy, title=task))
        paths.append(script)
    return paths


_PLOT_TEMPLATE = '''"""Plot {y} against {x} from {csv}; run from this directory."""
import csv

import matplotlib.pyplot as plt

with open("{csv}", newline="") as fh:
    rows = [r for r in csv.DictReader(fh) if r["{x}"] and r["{y}"]]
x = [float(r["{x}"]) for r in rows]
y = [abs(float(r["{y}"])) for r in rows]
fig, ax = plt.subplots()
ax.plot(x, y, "o-")
if {logy}:
    ax.set_yscale("log")
ax.set_xlabel("{x}")
ax.set_ylabel("{y}")
ax.set_title("{title}")
fig.savefig("{csv}".replace(".csv", ".svg"))
'''


def _apply_thread_cap() -> None:
    n = os.environ.get("OSCIKERNEL_THREADS")
    if n is None:
        return
    if not n.isdigit() or int(n) < 1:
        raise ConfigError("OSCIKERNEL_THREADS: must be a positive integer")


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="oscikernel", description=__doc__.splitlines()[0])
    ap.add_argument("task", choices=TASKS)
    ap.add_argument("--config", help="JSON task config")
    ap.add_argument("--plot", action="store_true", help="also emit a plot script over the CSV")
    ap.add_argument("--out", help="output directory (default: config 'out' or .)")
    args = ap.parse_args(argv)
    try:
        _apply_thread_cap()
        cfg = parse_config(args.config, task=args.task, out=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        rows, code = run_task(cfg)
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    try:
        paths = write_report(rows, cfg.task, cfg.out, args.plot)
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    status = "PASS" if code == EXIT_OK else "FAIL"
    print(f"[{status}] {cfg.task} on {cfg.model}: {len(rows)} rows -> {', '.join(map(str, paths))}")
    return code


if __name__ == "__main__":
    sys.exit(main())
