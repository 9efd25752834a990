"""Command-line experiment runner.

An experiment is an INI file with sections ``[experiment]``, ``[network]``,
``[simulation]``, ``[analytic]`` and ``[output]``; see the shipped presets
(``pcpnoma preset radius_sparse``).  Command-line flags override file values, which
override built-in defaults.

Exit codes: 0 success, 1 invalid spec, 2 numerical failure in some row.
"""

import argparse
import concurrent.futures
import configparser
import csv
import dataclasses
import io
import json
import math
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np
import scipy

from . import _jit, coverage, montecarlo
from .exceptions import NumericalError, ParameterError, UnsupportedConfiguration
from .params import REFERENCE_AREA_KM2, NetworkParams, SicMode
from .quadrature import QuadratureConfig

PRESETS = ("radius_sparse", "radius_dense", "bs_density", "rate_requirement", "cluster_size",
           "ppp_vs_clustered")
ENGINES = ("analytic", "montecarlo", "ppp_baseline")
SWEEP_AXES = ("cluster_radius", "clusters_in_window", "bs_intensity", "users_per_cluster",
              "rate_target")
COLUMNS = ("sweep_axis", "sweep_value", "engine", "mode", "rank", "estimate", "ci95",
           "runtime_ms", "status")

_MODE_ORDER = {m: i for i, m in enumerate(SicMode)}
_ENGINE_ORDER = {e: i for i, e in enumerate(ENGINES)}

_NETWORK_KEYS = {
    "bs_intensity": float, "clusters_in_window": float, "users_per_cluster": int,
    "cluster_radius": float, "pathloss_exponent": float, "tx_power": float,
    "noise_power": float, "detection_threshold": float, "rate_target": float,
    "region_side": float,
}
_SIM_KEYS = {
    "trials": int, "seed": int, "wraparound": bool, "ranking_rule": str,
    "fixed_cluster_count": bool, "workers": int, "chunk_size": int,
}
_ANALYTIC_KEYS = {
    "use_inter_bound": bool, "interference_limited": bool, "closed_form_alpha4": bool,
    "abs_tol": float, "rel_tol": float, "max_subdivisions": int,
    "tail_cutoff_multiplier": float,
}
_EXPERIMENT_KEYS = {"name": str, "sweep_axis": str, "sweep_values": list, "modes": list,
                    "engines": list}
_OUTPUT_KEYS = {"path": str}
_SECTIONS = {"experiment": _EXPERIMENT_KEYS, "network": _NETWORK_KEYS,
             "simulation": _SIM_KEYS, "analytic": _ANALYTIC_KEYS, "output": _OUTPUT_KEYS}


class SpecError(ValueError):
    """Invalid experiment specification; ``problems`` lists every violation."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclasses.dataclass(frozen=True)
class ExperimentSpec:
    name: str
    base: NetworkParams
    sweep_axis: str
    sweep_values: tuple
    modes: tuple
    engines: tuple
    sim: montecarlo.SimOptions
    analytic: coverage.CoverageOptions
    output_path: str = "results.csv"

    def params_at(self, value):
        """Base parameters with the sweep axis set to ``value``."""
        return _apply_axis(self.base, self.sweep_axis, value)


def _apply_axis(base, axis, value):
    if axis == "clusters_in_window":
        return base.replace(bs_intensity=float(value) / base.region_side ** 2)
    if axis == "users_per_cluster":
        return base.replace(users_per_cluster=int(value))
    return base.replace(**{axis: float(value)})


# ----------------------------------------------------------------------------
# parsing


def _convert(kind, text):
    text = text.strip()
    if kind is bool:
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    if kind is list:
        return [item.strip() for item in text.replace("\n", ",").split(",") if item.strip()]
    if kind is int:
        value = float(text)
        if value != int(value):
            raise ValueError(f"expected an integer, got {text!r}")
        return int(value)
    return kind(text)


def read_spec_text(text):
    """Parse INI text into ``{section: {key: value}}``; returns ``(raw, problems)``."""
    parser = configparser.ConfigParser(interpolation=None)
    problems = []
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        return {}, [f"unreadable spec: {exc}"]
    raw = {}
    for section in parser.sections():
        keys = _SECTIONS.get(section)
        if keys is None:
            problems.append(f"unknown section [{section}]")
            continue
        raw[section] = {}
        for key, text_value in parser.items(section):
            if key not in keys:
                problems.append(f"{section}.{key}: unknown key")
                continue
            try:
                raw[section][key] = _convert(keys[key], text_value)
            except ValueError as exc:
                problems.append(f"{section}.{key}: {exc}")
    return raw, problems


def build_spec(raw):
    """Assemble an :class:`ExperimentSpec`; returns ``(spec or None, problems)``."""
    problems = []
    exp = raw.get("experiment", {})
    net = dict(raw.get("network", {}))
    sim = raw.get("simulation", {})
    ana = raw.get("analytic", {})
    out = raw.get("output", {})

    axis = exp.get("sweep_axis")
    if axis is None:
        problems.append("experiment.sweep_axis: missing")
    elif axis not in SWEEP_AXES:
        problems.append(f"experiment.sweep_axis: must be one of {', '.join(SWEEP_AXES)}")
    values = []
    for i, text in enumerate(exp.get("sweep_values", [])):
        try:
            values.append(float(text))
        except ValueError:
            problems.append(f"experiment.sweep_values[{i}]: not a number ({text!r})")
    if not exp.get("sweep_values"):
        problems.append("experiment.sweep_values: must not be empty")

    modes = []
    for text in exp.get("modes", []):
        try:
            modes.append(SicMode.parse(text))
        except ValueError as exc:
            problems.append(f"experiment.modes: {exc}")
    if not exp.get("modes"):
        problems.append("experiment.modes: at least one mode required")
    engines = [e.strip().lower() for e in exp.get("engines", [])]
    for e in engines:
        if e not in ENGINES:
            problems.append(f"experiment.engines: unknown engine {e!r}")
    if not engines:
        problems.append("experiment.engines: at least one engine required")

    if "clusters_in_window" in net:
        if "bs_intensity" in net:
            problems.append("network: give bs_intensity or clusters_in_window, not both")
        side = net.get("region_side", 10.0)
        net["bs_intensity"] = net.pop("clusters_in_window") / (side * side if side else 1.0)
    base = None
    try:
        base = NetworkParams(**net)
    except ParameterError as exc:
        problems.extend(f"network.{p}" for p in exc.problems)
    if base is not None and axis in SWEEP_AXES:
        for i, v in enumerate(values):
            if axis == "users_per_cluster" and v != int(v):
                problems.append(f"experiment.sweep_values[{i}]: users_per_cluster must be an integer")
                continue
            try:
                p = _apply_axis(base, axis, v)
            except ParameterError as exc:
                problems.extend(f"experiment.sweep_values[{i}]: {p}" for p in exc.problems)
                continue
            if (SicMode.IMPERFECT in modes and "analytic" in engines
                    and p.users_per_cluster > coverage.COMBINATION_CAP):
                problems.append(f"experiment.sweep_values[{i}]: analytic imperfect SIC needs "
                                f"users_per_cluster <= {coverage.COMBINATION_CAP}")

    sim_opts = None
    try:
        sim_opts = montecarlo.SimOptions(
            n_trials=sim.get("trials", 10_000), seed=sim.get("seed", 0),
            wraparound=sim.get("wraparound", True),
            ranking_rule=sim.get("ranking_rule", montecarlo.BY_DISTANCE),
            fixed_cluster_count=sim.get("fixed_cluster_count", False),
            workers=sim.get("workers", 1), chunk_size=sim.get("chunk_size", 2000))
        if sim_opts.n_trials < 100 and ("montecarlo" in engines or "ppp_baseline" in engines):
            problems.append("simulation.trials: at least 100 trials required")
    except ValueError as exc:
        problems.append(f"simulation: {exc}")
    ana_opts = None
    try:
        quad = QuadratureConfig(
            abs_tol=ana.get("abs_tol", 1e-10), rel_tol=ana.get("rel_tol", 1e-8),
            max_subdivisions=ana.get("max_subdivisions", 400),
            tail_cutoff_multiplier=ana.get("tail_cutoff_multiplier", 4.0))
        ana_opts = coverage.CoverageOptions(
            use_inter_bound=ana.get("use_inter_bound", False),
            interference_limited=ana.get("interference_limited", False),
            closed_form_alpha4=ana.get("closed_form_alpha4", True), quadrature=quad)
    except ValueError as exc:
        problems.append(f"analytic: {exc}")
    if problems:
        return None, problems
    spec = ExperimentSpec(exp.get("name", "experiment"), base, axis, tuple(values),
                          tuple(modes), tuple(engines), sim_opts, ana_opts,
                          out.get("path", f"{exp.get('name', 'results')}.csv"))
    return spec, []


def preset_text(name):
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r} (available: {', '.join(PRESETS)})")
    return resources.files("pcpnoma").joinpath("presets", f"{name}.ini").read_text()


def load_spec_text(target):
    """Spec text from a file path, or from a shipped preset of that name."""
    path = Path(target)
    if path.is_file():
        return path.read_text()
    if target in PRESETS:
        return preset_text(target)
    raise FileNotFoundError(f"no spec file or preset named {target!r}")


def validate_spec(spec_or_text):
    """Every problem with a spec (text, raw dict or :class:`ExperimentSpec`)."""
    if isinstance(spec_or_text, ExperimentSpec):
        problems = []
        for v in spec_or_text.sweep_values:
            try:
                spec_or_text.params_at(v)
            except ParameterError as exc:
                problems.extend(exc.problems)
        return problems
    if isinstance(spec_or_text, str):
        raw, problems = read_spec_text(spec_or_text)
    else:
        raw, problems = spec_or_text, []
    _, more = build_spec(raw)
    return problems + more


def parse_spec(text, overrides=None):
    """Spec text plus flag overrides ``{section: {key: value}}`` -> spec or SpecError."""
    raw, problems = read_spec_text(text)
    for section, values in (overrides or {}).items():
        raw.setdefault(section, {}).update(values)
    spec, more = build_spec(raw)
    problems += more
    if problems:
        raise SpecError(problems)
    return spec


# ----------------------------------------------------------------------------
# running


@dataclasses.dataclass
class Row:
    sweep_axis: str
    sweep_value: float
    engine: str
    mode: SicMode
    rank: object
    estimate: float = math.nan
    ci95: float = math.nan
    runtime_ms: float = math.nan
    status: str = "ok"

    def sort_key(self):
        rank = self.rank if isinstance(self.rank, int) else 10 ** 9
        return (self.sweep_value, _MODE_ORDER[self.mode], rank, _ENGINE_ORDER[self.engine])


def _analytic_rows(spec, value, params):
    rows = []
    for mode in spec.modes:
        try:
            per_rank = coverage.rank_coverage(mode, params, spec.analytic)
        except (NumericalError, UnsupportedConfiguration) as exc:
            status = "numerical_error" if isinstance(exc, NumericalError) else "unsupported"
            rows.append(Row(spec.sweep_axis, value, "analytic", mode, "mean", status=status))
            continue
        for m, v in enumerate(per_rank, start=1):
            rows.append(Row(spec.sweep_axis, value, "analytic", mode, m, float(v)))
        rows.append(Row(spec.sweep_axis, value, "analytic", mode, "mean",
                        coverage.mean_cluster_coverage(mode, params, per_rank=per_rank)))
    return rows


def _mc_rows(spec, value, params, engine):
    sim = spec.sim.replace(workers=1)
    if engine == "montecarlo":
        result = montecarlo.estimate_coverage(params, spec.modes, sim)
    else:
        result = montecarlo.estimate_ppp_baseline(params, spec.modes,
                                                  sim.replace(baseline="ppp_users"))
    rows = []
    for mode in spec.modes:
        est = result[mode]
        for m, e in enumerate(est.per_rank, start=1):
            rows.append(Row(spec.sweep_axis, value, engine, mode, m, e.estimate,
                            e.half_width_95, status="ok" if e.defined else "undefined"))
        e = est.mean
        rows.append(Row(spec.sweep_axis, value, engine, mode, "mean", e.estimate,
                        e.half_width_95, status="ok" if e.defined else "undefined"))
    return rows


def _run_point(spec, value, engine):
    params = spec.params_at(value)
    t0 = time.perf_counter()
    if engine == "analytic":
        rows = _analytic_rows(spec, value, params)
    else:
        rows = _mc_rows(spec, value, params, engine)
    elapsed = 1e3 * (time.perf_counter() - t0)
    for r in rows:
        r.runtime_ms = elapsed
    return rows


def run_experiment(spec: ExperimentSpec, workers=None):
    """Evaluate every (sweep value, engine) pair; rows in deterministic order.

    Sweep points are dispatched to ``workers`` processes (default: the
    simulation worker count).
    """
    problems = validate_spec(spec)
    if problems:
        raise SpecError(problems)
    workers = int(workers or spec.sim.workers)
    tasks = [(v, e) for v in spec.sweep_values for e in spec.engines]
    if workers <= 1 or len(tasks) == 1:
        parts = [_run_point(spec, v, e) for v, e in tasks]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_point, spec, v, e) for v, e in tasks]
            parts = [f.result() for f in futures]
    rows = [r for part in parts for r in part]
    rows.sort(key=Row.sort_key)
    return rows


def _fmt(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{x:.12g}"


def rows_to_csv(rows, timing=False):
    """CSV text; ``runtime_ms`` is left empty unless ``timing`` (keeps output reproducible)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r in rows:
        writer.writerow([r.sweep_axis, _fmt(r.sweep_value), r.engine, r.mode.value, r.rank,
                         _fmt(r.estimate), _fmt(r.ci95),
                         _fmt(round(r.runtime_ms, 3)) if timing else "", r.status])
    return buf.getvalue()


def metadata(spec, rows):
    versions = {"numpy": np.__version__, "scipy": scipy.__version__}
    if _jit.HAVE_NUMBA:
        versions["numba"] = _jit.numba.__version__
    base = dataclasses.asdict(spec.base)
    return {
        "name": spec.name,
        "sweep_axis": spec.sweep_axis,
        "sweep_values": list(spec.sweep_values),
        "modes": [m.value for m in spec.modes],
        "engines": list(spec.engines),
        "network": base,
        "clusters_in_window": spec.base.clusters_in_window,
        "simulation": dataclasses.asdict(spec.sim),
        "analytic": {k: v for k, v in dataclasses.asdict(spec.analytic).items()},
        "backend": _jit.BACKEND,
        "versions": versions,
        "rows": len(rows),
        "failed_rows": sum(r.status not in ("ok", "undefined") for r in rows),
        "notes": {
            "ppp_baseline_ranks": "rank m averages over cells with at least m users; "
                                  "mean averages over all served users",
            "ppp_baseline_oma_target": "2^(R k) - 1 with k the realized cell load",
            "reference_area_km2": REFERENCE_AREA_KM2,
        },
    }


# ----------------------------------------------------------------------------
# entry point


def _parser():
    parser = argparse.ArgumentParser(prog="pcpnoma", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment spec (file path or preset name)")
    run.add_argument("spec")
    run.add_argument("--seed", type=int)
    run.add_argument("--trials", type=int)
    run.add_argument("--out")
    run.add_argument("--engine", action="append", choices=ENGINES)
    run.add_argument("--mode", action="append", choices=[m.value for m in SicMode])
    run.add_argument("--workers", type=int)
    run.add_argument("--timing", action="store_true", help="fill the runtime_ms column")
    val = sub.add_parser("validate", help="check a spec and list every problem")
    val.add_argument("spec")
    pre = sub.add_parser("preset", help="print a shipped preset spec")
    pre.add_argument("name", choices=PRESETS)
    pre.add_argument("--write", metavar="PATH", help="write to PATH instead of stdout")
    return parser


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.command == "preset":
        text = preset_text(args.name)
        if args.write:
            Path(args.write).write_text(text)
        else:
            sys.stdout.write(text)
        return 0
    try:
        text = load_spec_text(args.spec)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.command == "validate":
        problems = validate_spec(text)
        if problems:
            for p in problems:
                print(f"invalid: {p}", file=sys.stderr)
            return 1
        print("ok")
        return 0

    sim, exp, out = {}, {}, {}
    if args.seed is not None:
        sim["seed"] = args.seed
    if args.trials is not None:
        sim["trials"] = args.trials
    if args.workers is not None:
        sim["workers"] = args.workers
    if args.engine:
        exp["engines"] = list(args.engine)
    if args.mode:
        exp["modes"] = list(args.mode)
    if args.out:
        out["path"] = args.out
    try:
        spec = parse_spec(text, {"simulation": sim, "experiment": exp, "output": out})
    except SpecError as exc:
        for p in exc.problems:
            print(f"invalid: {p}", file=sys.stderr)
        return 1
    rows = run_experiment(spec)
    path = Path(spec.output_path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True)
    path.write_text(rows_to_csv(rows, timing=args.timing))
    path.with_suffix(".json").write_text(json.dumps(metadata(spec, rows), indent=2,
                                                    sort_keys=True, default=str) + "\n")
    failed = [r for r in rows if r.status not in ("ok", "undefined")]
    print(f"wrote {len(rows)} rows to {path}")
    if failed:
        print(f"{len(failed)} rows failed", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
