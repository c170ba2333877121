"""Command-line batch driver.

``simulate`` runs one named experiment and writes a CSV or JSON result
file that embeds the fully resolved configuration.  ``dump-filter``
writes the joint filter table of a configuration as CSV.

Exit codes: 0 success, 1 configuration error, 2 invariant failure,
3 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .cascade import cascade_precompensate
from .filters import PRECOMPENSATE, PROPAGATE, build_joint_filter, filter_table_csv
from .jfscd import JointShapingPrecompensator, run_stream
from .link import TX_SCHEMES, payload, simulate_link
from .metrics import ccdf, complexity_report, papr_at_probability, papr_windowed
from .params import ConfigError, SystemConfig, default_overlap, derive_beta2, validate
from .sbc import SquareBoundaryClipper

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_IO = 0, 1, 2, 3

EXPERIMENTS = ("equivalence", "ccdf", "cr_sweep", "osnr_sweep", "complexity", "single_run")

# sweep axis name and default values per experiment
DEFAULT_AXES: dict[str, tuple[str, list]] = {
    "equivalence": ("fiber_length", [0.0, 40e3, 100e3]),
    "ccdf": ("cr_db", [math.inf, 8.52, 6.72]),
    "cr_sweep": ("cr_db", [5.0, 6.0, 7.0, 8.0, 9.0, math.inf]),
    "osnr_sweep": ("osnr_db", [18.0, 19.0, 20.0, 21.0, 22.0, 23.0, 24.0, 25.0, 26.0]),
    "complexity": ("block_symbols", [32, 64, 128, 256, 512, 1024]),
    "single_run": ("", []),
}

EQUIV_BLOCKS = (64, 128)
EQUIV_ROLLOFFS = (0.01, 0.1, 0.2)
EQUIV_TOLERANCE = 1e-10
EQUIV_Q_TOLERANCE = 0.05
CCDF_SAMPLES = 2**20
CCDF_WINDOW = 1024
CCDF_PROBABILITY = 1e-3
CR_SWEEP_ROLLOFFS = (0.01, 0.1, 0.2)
OSNR_SWEEP_CRS = (5.0, 7.0, 9.0, math.inf)
COMPLEXITY_ROLLOFF = 0.01


@dataclass
class ExperimentSpec:
    name: str
    config: SystemConfig
    sweep_axis: str = ""
    sweep_values: list = field(default_factory=list)
    output_path: str | None = None
    format: str = "csv"
    jobs: int = 1

    def __post_init__(self):
        if self.name not in EXPERIMENTS:
            raise ConfigError("experiment", f"must be one of {EXPERIMENTS}, got {self.name!r}")
        if self.format not in ("csv", "json"):
            raise ConfigError("format", f"must be 'csv' or 'json', got {self.format!r}")
        validate(self.config)
        self._check_axis()

    def _check_axis(self):
        expected, _ = DEFAULT_AXES[self.name]
        if not self.sweep_values:
            return
        if self.sweep_axis != expected:
            raise ConfigError("sweep", f"experiment {self.name!r} sweeps {expected!r}, got {self.sweep_axis!r}")
        for v in self.sweep_values:
            if self.sweep_axis == "cr_db":
                if math.isnan(v):
                    raise ConfigError("sweep", "cr_db values must be numbers or inf")
                continue
            if not math.isfinite(v):
                raise ConfigError("sweep", f"{self.sweep_axis} values must be finite, got {v}")
            if self.sweep_axis == "block_symbols" and (v < 2 or int(v) & (int(v) - 1)):
                raise ConfigError("sweep", f"block_symbols values must be powers of two, got {v}")
            if self.sweep_axis == "fiber_length" and v < 0:
                raise ConfigError("sweep", f"fiber_length values must be >= 0, got {v}")

    @property
    def axis_values(self) -> list:
        values = self.sweep_values or DEFAULT_AXES[self.name][1]
        return list(values)


@dataclass
class ExperimentResult:
    name: str
    columns: list[str]
    rows: list[list]
    summary: dict[str, Any]
    failures: list[str]


# -- experiments ------------------------------------------------------------------

def _rel_l2(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def _equivalence_point(args) -> list:
    config, n, alpha, length = args
    beta2 = derive_beta2(config.dispersion_D, config.wavelength)
    v = min(default_overlap(beta2, length, 1 / config.baud_rate, alpha), n // 4)
    cfg = config.replace(block_symbols=n, rolloff=alpha, fiber_length=length, overlap_symbols=v, cr_db=None)
    _, symbols = payload(cfg)
    consts = validate(cfg)
    joint = run_stream(symbols[:, 0], consts).samples
    oracle = cascade_precompensate(symbols[:, 0], cfg, "ideal").samples
    q_joint = simulate_link(cfg, "jfscd").q_db
    q_casc = simulate_link(cfg, "cascade_ideal").q_db
    return [n, alpha, length, v, _rel_l2(joint, oracle), q_joint, q_casc, abs(q_joint - q_casc)]


def run_equivalence(job: ExperimentSpec) -> ExperimentResult:
    points = [
        (job.config, n, a, float(length))
        for n in EQUIV_BLOCKS
        for a in EQUIV_ROLLOFFS
        for length in sorted(job.axis_values)
    ]
    rows = _map(_equivalence_point, points, job.jobs)
    failures = [
        f"N={r[0]} alpha={r[1]} L={r[2]:g}: rel_l2={r[4]:.3e}, dQ={r[7]:.3f} dB"
        for r in rows
        if not (r[4] < EQUIV_TOLERANCE and r[7] < EQUIV_Q_TOLERANCE)
    ]
    summary = {
        "max_rel_l2_error": max(r[4] for r in rows),
        "max_q_diff_db": max(r[7] for r in rows),
        "rel_l2_tolerance": EQUIV_TOLERANCE,
        "q_diff_tolerance_db": EQUIV_Q_TOLERANCE,
    }
    columns = [
        "block_symbols", "rolloff", "fiber_length_m", "overlap_symbols",
        "rel_l2_error", "q_jfscd_db", "q_cascade_db", "q_diff_db",
    ]
    return ExperimentResult("equivalence", columns, rows, summary, failures)


def ccdf_curves(config: SystemConfig, cr_list, n_samples: int = CCDF_SAMPLES, window: int = CCDF_WINDOW,
                thresholds=None):
    """PAPR samples per clipping ratio for one CD-pre-compensated polarisation."""
    if thresholds is None:
        thresholds = np.round(np.arange(4.0, 14.0 + 1e-9, 0.05), 2)
    _, symbols = payload(config, n_symbols=n_samples // 2)
    tx = JointShapingPrecompensator(config).fit().transform(symbols[:, 0])
    out = {}
    for cr in cr_list:
        wave = tx if math.isinf(cr) else SquareBoundaryClipper(cr_db=cr).fit_transform(tx)
        paprs = papr_windowed(wave, window)
        out[cr] = (paprs, ccdf(paprs, thresholds, window))
    return out


def run_ccdf(job: ExperimentSpec) -> ExperimentResult:
    cr_list = job.axis_values
    curves = ccdf_curves(job.config, cr_list)
    rows, at_p, failures = [], {}, []
    for cr in sorted(cr_list, reverse=True):
        paprs, curve = curves[cr]
        at_p[cr] = papr_at_probability(paprs, CCDF_PROBABILITY)
        if np.any(np.diff(curve.probabilities) > 0):
            failures.append(f"CCDF for cr_db={cr} is not non-increasing")
        rows.extend([cr, float(t), float(p)] for t, p in zip(curve.thresholds, curve.probabilities))
    order = sorted(cr_list, reverse=True)
    if any(at_p[b] > at_p[a] for a, b in zip(order, order[1:])):
        failures.append("PAPR at the reference probability does not fall as CR decreases")
    ref = at_p.get(math.inf)
    summary = {
        "probability": CCDF_PROBABILITY,
        "window_samples": CCDF_WINDOW,
        "n_samples": CCDF_SAMPLES,
        "papr_at_probability_db": {_fmt_key(cr): at_p[cr] for cr in order},
    }
    if ref is not None:
        summary["gain_db"] = {_fmt_key(cr): ref - at_p[cr] for cr in order if not math.isinf(cr)}
    return ExperimentResult("ccdf", ["cr_db", "threshold_db", "probability"], rows, summary, failures)


_LINK_COLUMNS = ["q_db", "q_ber_db", "q_evm_db", "ber", "evm_percent", "n_errors", "clipped_fraction"]


def _link_point(args) -> list:
    config, scheme, cr, osnr = args
    r = simulate_link(config, scheme, cr_db=None if math.isinf(cr) else cr, osnr_db=osnr)
    return [r.q_db, r.q_ber_db, r.q_evm_db, r.ber, r.evm_percent, r.n_errors, r.clipped_fraction]


def run_cr_sweep(job: ExperimentSpec) -> ExperimentResult:
    crs = sorted(set(job.axis_values) | {math.inf})
    points = [(job.config.replace(rolloff=a), "jfscd", cr, None) for a in CR_SWEEP_ROLLOFFS for cr in crs]
    results = _map(_link_point, points, job.jobs)
    rows, penalties = [], {}
    for (cfg, _, cr, _), res in zip(points, results):
        ref = results[points.index((cfg, "jfscd", math.inf, None))][0]
        rows.append([cfg.rolloff, cr, *res, ref - res[0]])
        if cr == 7.0:
            penalties[_fmt_key(cfg.rolloff)] = ref - res[0]
    summary = {"osnr_db": job.config.osnr_db}
    if penalties:
        summary["q_penalty_cr7_db"] = penalties
        summary["q_penalty_cr7_spread_db"] = max(penalties.values()) - min(penalties.values())
    columns = ["rolloff", "cr_db", *_LINK_COLUMNS, "q_penalty_db"]
    return ExperimentResult("cr_sweep", columns, rows, summary, [])


def run_osnr_sweep(job: ExperimentSpec) -> ExperimentResult:
    osnrs = sorted(job.axis_values)
    points = [(job.config, "jfscd", cr, o) for cr in OSNR_SWEEP_CRS for o in osnrs]
    results = _map(_link_point, points, job.jobs)
    rows = [[cr, o, *res] for (_, _, cr, o), res in zip(points, results)]
    spread = {}
    for o in osnrs:
        qs = [r[2] for r in rows if r[1] == o and r[0] in (5.0, 7.0, 9.0)]
        spread[_fmt_key(o)] = max(qs) - min(qs)
    summary = {"q_spread_over_cr_5_7_9_db": spread}
    return ExperimentResult("osnr_sweep", ["cr_db", "osnr_db", *_LINK_COLUMNS], rows, summary, [])


def run_complexity(job: ExperimentSpec) -> ExperimentResult:
    alphas = sorted({COMPLEXITY_ROLLOFF, job.config.rolloff})
    rows, failures = [], []
    for n in sorted(int(v) for v in job.axis_values):
        for a in alphas:
            rep = complexity_report(n, a)
            rows.append([n, a, rep.fir_taps, rep.jfscd_mults_per_symbol, rep.cascade_mults_per_symbol,
                         100 * rep.reduction_fraction])
            if rep.jfscd_mults_per_symbol >= rep.cascade_mults_per_symbol:
                failures.append(f"N={n} alpha={a}: joint engine is not cheaper")
    columns = ["block_symbols", "rolloff", "fir_taps", "jfscd_mults", "cascade_mults", "reduction_percent"]
    return ExperimentResult("complexity", columns, rows, {}, failures)


def run_single(job: ExperimentSpec, scheme: str = "jfscd") -> ExperimentResult:
    cfg = job.config
    r = simulate_link(cfg, scheme)
    cr = math.inf if cfg.cr_db is None else cfg.cr_db
    row = [scheme, cr, r.q_db, r.q_ber_db, r.q_evm_db, r.ber, r.evm_percent, r.n_errors, r.clipped_fraction]
    return ExperimentResult("single_run", ["scheme", "cr_db", *_LINK_COLUMNS], [row], {}, [])


RUNNERS: dict[str, Callable[..., ExperimentResult]] = {
    "equivalence": run_equivalence,
    "ccdf": run_ccdf,
    "cr_sweep": run_cr_sweep,
    "osnr_sweep": run_osnr_sweep,
    "complexity": run_complexity,
    "single_run": run_single,
}


def run_experiment(job: ExperimentSpec, **kwargs) -> ExperimentResult:
    return RUNNERS[job.name](job, **kwargs)


def _map(fn, points, jobs: int):
    """Order-preserving map, optionally across worker processes."""
    if jobs <= 1 or len(points) < 2:
        return [fn(p) for p in points]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, points))


# -- serialisation ----------------------------------------------------------------

def _fmt_key(v) -> str:
    return "inf" if isinstance(v, float) and math.isinf(v) else repr(float(v))


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    return v


def _csv_cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))  # locale-independent, round-trippable
    return str(v)


def render(result: ExperimentResult, config: SystemConfig, fmt: str) -> str:
    """Deterministic text rendering of a result (no timestamps)."""
    if fmt == "json":
        doc = {
            "experiment": result.name,
            "config": _jsonable(config.to_dict()),
            "columns": result.columns,
            "rows": _jsonable(result.rows),
            "summary": _jsonable(result.summary),
            "failures": result.failures,
        }
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"
    buf = io.StringIO()
    buf.write(f"# experiment: {result.name}\n")
    buf.write(f"# config: {json.dumps(_jsonable(config.to_dict()), sort_keys=True)}\n")
    if result.summary:
        buf.write(f"# summary: {json.dumps(_jsonable(result.summary), sort_keys=True)}\n")
    for f in result.failures:
        buf.write(f"# failure: {f}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(result.columns)
    for row in result.rows:
        writer.writerow([_csv_cell(v) for v in row])
    return buf.getvalue()


def _write(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# -- entry points -----------------------------------------------------------------

def _parse_sweep(text: str) -> tuple[str, list[float]]:
    if "=" not in text:
        raise ConfigError("sweep", f"expected NAME=v1,v2,..., got {text!r}")
    name, _, values = text.partition("=")
    try:
        parsed = [float(v) for v in values.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError("sweep", str(exc)) from None
    if not parsed:
        raise ConfigError("sweep", "no sweep values given")
    return name.strip(), parsed


def _load_config(path: str | None, seed: int | None) -> SystemConfig:
    try:
        config = SystemConfig() if path is None else SystemConfig.from_json(path)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from None
    except TypeError as exc:
        raise ConfigError("config", str(exc)) from None
    if seed is not None:
        config = config.replace(seed=seed)
    return config


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="simulate", description="Run a JFS-CD link experiment.")
    p.add_argument("--config", help="JSON config file (defaults if omitted)")
    p.add_argument("--experiment", default="single_run", choices=EXPERIMENTS)
    p.add_argument("--out", help="output file (stdout if omitted)")
    p.add_argument("--format", default="csv", choices=("csv", "json"))
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--sweep", help="override the sweep axis, e.g. cr_db=5,7,9,inf")
    p.add_argument("--scheme", default="jfscd", choices=TX_SCHEMES, help="transmitter for single_run")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args.config, args.seed)
        axis, values = _parse_sweep(args.sweep) if args.sweep else ("", [])
        job = ExperimentSpec(args.experiment, config, axis, values, args.out, args.format, args.jobs)
    except ConfigError as exc:
        print(f"config error [{exc.field}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    kwargs = {"scheme": args.scheme} if job.name == "single_run" else {}
    result = run_experiment(job, **kwargs)
    try:
        _write(render(result, config, args.format), args.out)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for f in result.failures:
        print(f"invariant failure: {f}", file=sys.stderr)
    return EXIT_INVARIANT if result.failures else EXIT_OK


def dump_filter_main(argv: list[str] | None = None) -> int:
    p = argparse.ArgumentParser(prog="dump-filter", description="Write the joint filter table as CSV.")
    p.add_argument("--config", help="JSON config file (defaults if omitted)")
    p.add_argument("--out", help="output file (stdout if omitted)")
    p.add_argument("--direction", choices=("precompensate", "propagate"), default="precompensate")
    args = p.parse_args(argv)
    try:
        consts = validate(_load_config(args.config, None))
    except ConfigError as exc:
        print(f"config error [{exc.field}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    sign = PRECOMPENSATE if args.direction == "precompensate" else PROPAGATE
    try:
        _write(filter_table_csv(build_joint_filter(consts, sign=sign)), args.out)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
