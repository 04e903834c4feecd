"""Seeded Monte Carlo engine: realizations -> estimators -> report.

Each realization r draws its own seed by avalanche-mixing the master seed
with r, so the streams are independent and the whole experiment is
reproducible for a fixed config no matter how the work is scheduled.
Per-realization records are reduced in realization order with exact
compensated summation (math.fsum), which makes reports byte-identical across
worker counts.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import asdict, dataclass
from multiprocessing import get_context

import numpy as np

from . import __version__, lkc, theory
from .critical import find_extrema
from .grid import default_grid
from .lkc import euler_characteristic_profile
from .synth import mix64, simulate

__all__ = ["ExperimentConfig", "McReport", "run_experiment", "correlate",
           "chaos_subtract", "emit_report"]

FOUR_PI = 4.0 * math.pi

DEFAULT_THRESHOLDS = (-3.0, -1.5, 0.0, 1.5, 3.0)
CORRELATION_THRESHOLDS = (-3.0, -1.0, 0.0, 1.0, 3.0)


@dataclass(frozen=True)
class ExperimentConfig:
    multipoles: tuple = (100,)
    thresholds: tuple = DEFAULT_THRESHOLDS
    n_realizations: int = 200
    master_seed: int = 2027
    oversampling: int = 6
    normalization: str = "ensemble"
    with_critical: bool = True
    corr_thresholds: tuple = CORRELATION_THRESHOLDS
    workers: int = 0  # 0: SPHGEOM_THREADS env, else single process

    def __post_init__(self):
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be >= 1 (empty experiment)")
        if list(self.thresholds) != sorted(self.thresholds):
            raise ValueError("thresholds must be sorted")
        if self.normalization not in ("ensemble", "sample"):
            raise ValueError(f"unknown normalization {self.normalization!r}")

    def resolved_workers(self) -> int:
        if self.workers > 0:
            return self.workers
        env = os.environ.get("SPHGEOM_THREADS")
        if env:
            return max(1, int(env))
        return 1

    def all_thresholds(self) -> tuple:
        return tuple(sorted(set(self.thresholds) | set(self.corr_thresholds)))


@dataclass
class McReport:
    config: dict
    rows: list          # per (ell, u, statistic) summary dicts
    scalars: list       # per (ell, statistic) summary dicts
    correlations: dict  # str(ell) -> {labels, matrix, undefined}
    meta: dict

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "McReport":
        d = json.loads(text)
        return cls(config=d["config"], rows=d["rows"], scalars=d["scalars"],
                   correlations=d["correlations"], meta=d["meta"])


# worker state: the grid (with its cached Legendre table) is built per process
_WORKER = {}


def _init_worker(ell: int, oversampling: int):
    _WORKER["grid"] = default_grid(ell, oversampling)
    _WORKER["ell"] = ell


def _one_realization(args) -> dict:
    seed, thresholds, normalization, with_critical = args
    grid = _WORKER["grid"]
    ell = _WORKER["ell"]
    fm = simulate(ell, seed, grid, normalization)
    rec: dict[str, float] = {}
    finite = [u for u in thresholds if math.isfinite(u)]
    for u in finite:
        rec[f"area@{u:g}"] = lkc.excursion_area(fm, u)
        rec[f"length@{u:g}"] = lkc.boundary_length(fm, u)
    chi = euler_characteristic_profile(fm, np.asarray(finite))
    for u, c in zip(finite, chi):
        rec[f"epc@{u:g}"] = c / FOUR_PI
    rec["defect"] = lkc.defect(fm)
    h2 = lkc.chaos_projection(fm, 2).value
    h4 = lkc.chaos_projection(fm, 4).value
    rec["h2"] = h2
    rec["h4"] = h4
    rec["trispectrum"] = lkc.sample_trispectrum(fm, h4=h4)
    if with_critical:
        maxv, minv = find_extrema(fm)
        n_ext_tot = maxv.size + minv.size
        rec["morse_defect"] = float(n_ext_tot - (n_ext_tot - 2) - 2)  # extrema - saddles - 2
        for u, c in zip(finite, chi):
            n_ext = int((maxv >= u).sum() + (minv >= u).sum())
            rec[f"next@{u:g}"] = n_ext
            rec[f"nsad@{u:g}"] = n_ext - int(c)
            rec[f"ncrit@{u:g}"] = 2 * n_ext - int(c)
        rec["next@-inf"] = n_ext_tot
        rec["nsad@-inf"] = n_ext_tot - 2
        rec["ncrit@-inf"] = 2 * n_ext_tot - 2
    return rec


def _fsum_mean_std(values) -> tuple[float, float]:
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def _pearson(x, y) -> float:
    mx = math.fsum(x) / len(x)
    my = math.fsum(y) / len(y)
    cov = math.fsum((a - mx) * (b - my) for a, b in zip(x, y))
    vx = math.fsum((a - mx) ** 2 for a in x)
    vy = math.fsum((b - my) ** 2 for b in y)
    if vx == 0.0 or vy == 0.0:
        return math.nan
    return cov / math.sqrt(vx * vy)


def _model_row(ell: int, u: float, stat: str):
    """(model_mean, model_std, certified) for a statistic, or Nones."""
    k = {"area": 2, "length": 1, "epc": 0}.get(stat)
    if k is not None:
        pred = theory.predict_lkc(k, ell, u)
        return pred.mean_norm, math.sqrt(pred.var_norm), pred.var_certified
    cls = {"ncrit": "c", "next": "e", "nsad": "s"}.get(stat)
    if cls is not None:
        pred = theory.predict_critical(cls, ell, u)
        return pred.mean, math.sqrt(pred.var), True
    return None, None, None


def run_experiment(config: ExperimentConfig, progress=None) -> McReport:
    t0 = time.time()
    rows = []
    scalars = []
    correlations = {}
    grids = {}
    all_u = config.all_thresholds()
    n = config.n_realizations
    workers = config.resolved_workers()
    for ell in config.multipoles:
        seeds = [mix64(config.master_seed, r) for r in range(n)]
        args = [(s, all_u, config.normalization, config.with_critical) for s in seeds]
        if workers > 1:
            ctx = get_context("fork")
            with ctx.Pool(workers, initializer=_init_worker,
                          initargs=(ell, config.oversampling)) as pool:
                records = pool.map(_one_realization, args, chunksize=4)
        else:
            _init_worker(ell, config.oversampling)
            records = []
            for i, a in enumerate(args):
                records.append(_one_realization(a))
                if progress and (i + 1) % 25 == 0:
                    progress(f"ell={ell}: {i + 1}/{n} realizations")
        grid = default_grid(ell, config.oversampling)
        grids[str(ell)] = [grid.n_rings, grid.n_phi]

        h2_series = [r["h2"] for r in records]
        threshold_stats = ("area", "length", "epc") + (
            ("ncrit", "next", "nsad") if config.with_critical else ())
        for u in config.thresholds:
            if not math.isfinite(u):
                continue
            for stat in threshold_stats:
                series = [r[f"{stat}@{u:g}"] for r in records]
                mean, std = _fsum_mean_std(series)
                model_mean, model_std, certified = _model_row(ell, u, stat)
                row = {
                    "ell": ell, "u": u, "stat": stat,
                    "sample_mean": mean, "sample_std": std,
                    "model_mean": model_mean, "model_std": model_std,
                    "model_certified": certified,
                    "pct_diff": (100.0 * (mean - model_mean) / model_mean
                                 if model_mean not in (None, 0.0) else None),
                }
                k = {"area": 2, "length": 1, "epc": 0}.get(stat)
                if k is not None:
                    coeff = theory.second_chaos_coefficient(k, ell, u) / FOUR_PI
                    adjusted = chaos_subtract(series, coeff, h2_series)
                    row["chaos_subtracted_std"] = _fsum_mean_std(adjusted)[1]
                rows.append(row)
        if config.with_critical:
            for stat, cls in (("ncrit", "c"), ("next", "e"), ("nsad", "s")):
                series = [r[f"{stat}@-inf"] for r in records]
                mean, std = _fsum_mean_std(series)
                pred = theory.predict_critical(cls, ell, -math.inf)
                scalars.append({"ell": ell, "stat": f"{stat}_total",
                                "sample_mean": mean, "sample_std": std,
                                "model_mean": pred.mean, "model_std": math.sqrt(pred.var),
                                "pct_diff": 100.0 * (mean - pred.mean) / pred.mean})
            assert all(r["morse_defect"] == 0.0 for r in records)
        defect_series = [r["defect"] for r in records]
        mean, std = _fsum_mean_std(defect_series)
        scalars.append({"ell": ell, "stat": "defect", "sample_mean": mean,
                        "sample_std": std, "model_mean": 0.0,
                        "model_std": math.sqrt(theory.defect_variance(ell)),
                        "pct_diff": None})
        for stat, model_var in (("h2", theory.var_h2(ell)),
                                ("h4", theory.var_h4_prediction(ell)),
                                ("trispectrum", theory.var_trispectrum_prediction(ell))):
            series = [r[stat] for r in records]
            mean, std = _fsum_mean_std(series)
            scalars.append({"ell": ell, "stat": stat, "sample_mean": mean,
                            "sample_std": std, "model_mean": 0.0,
                            "model_std": math.sqrt(model_var), "pct_diff": None})

        labels = []
        series_by_label = {}
        for u in config.corr_thresholds:
            pairs = [("A", "area"), ("L", "length"), ("EP", "epc")]
            if config.with_critical:
                pairs.append(("Nc", "ncrit"))
            for short, stat in pairs:
                label = f"{short}@{u:g}"
                labels.append(label)
                series_by_label[label] = [r[f"{stat}@{u:g}"] for r in records]
        labels += ["defect", "Mell"]
        series_by_label["defect"] = defect_series
        series_by_label["Mell"] = [r["trispectrum"] for r in records]
        matrix = []
        undefined = []
        for la in labels:
            row = []
            for lb in labels:
                c = 1.0 if la == lb else _pearson(series_by_label[la], series_by_label[lb])
                if math.isnan(c):
                    undefined.append([la, lb])
                row.append(c)
            matrix.append(row)
        correlations[str(ell)] = {"labels": labels, "matrix": matrix,
                                  "undefined": undefined}

    meta = {"version": __version__, "runtime_seconds": round(time.time() - t0, 3),
            "grids": grids, "normalization_note":
                "means per 4pi, variances per 16pi^2, boundary length reported "
                "as half length (L1 convention)"}
    cfg = asdict(config)
    cfg["multipoles"] = list(config.multipoles)
    cfg["thresholds"] = list(config.thresholds)
    cfg["corr_thresholds"] = list(config.corr_thresholds)
    return McReport(config=cfg, rows=rows, scalars=scalars,
                    correlations=correlations, meta=meta)


def chaos_subtract(series, coefficient: float, h2_series) -> list:
    """Subtract the second-chaos component coefficient * h2 realization-wise.

    Restoring the raw statistic means using the raw series again; the
    subtraction never overwrites it.
    """
    return [s - coefficient * h for s, h in zip(series, h2_series)]


def correlate(config: ExperimentConfig) -> dict:
    """Correlation matrices only (still runs the full estimator pass)."""
    if config.n_realizations < 50:
        raise ValueError("correlation runs need n_realizations >= 50")
    return run_experiment(config).correlations


# --- serialization -----------------------------------------------------------


def _fmt(x, digits) -> str:
    if x is None:
        return ""
    return f"{x:.{digits}f}"


def emit_report(report: McReport, outdir: str, formats=("csv", "json")) -> list[str]:
    """Write report files; deterministic bytes for a fixed report."""
    os.makedirs(outdir, exist_ok=True)
    written = []
    if "json" in formats:
        path = os.path.join(outdir, "report.json")
        with open(path, "w", encoding="ascii") as fh:
            fh.write(report.to_json())
            fh.write("\n")
        written.append(path)
    if "csv" in formats:
        ells = list(dict.fromkeys(r["ell"] for r in report.rows))
        thresholds = list(dict.fromkeys(r["u"] for r in report.rows))
        stats = list(dict.fromkeys(r["stat"] for r in report.rows))
        digits = {"area": 4, "length": 3, "epc": 2,
                  "ncrit": 2, "next": 2, "nsad": 2}
        by_key = {(r["ell"], r["u"], r["stat"]): r for r in report.rows}
        for stat in stats:
            path = os.path.join(outdir, f"table_{stat}.csv")
            with open(path, "w", encoding="ascii") as fh:
                fh.write("# means per 4pi, variances per 16pi^2; boundary length is half length\n")
                header = ["threshold"]
                for ell in ells:
                    header += [f"l{ell}_sim", f"l{ell}_model", f"l{ell}_sim_std", f"l{ell}_model_std"]
                fh.write(",".join(header) + "\n")
                d = digits.get(stat, 4)
                for u in thresholds:
                    cells = [f"{u:g}"]
                    for ell in ells:
                        r = by_key.get((ell, u, stat))
                        if r is None:
                            cells += ["", "", "", ""]
                        else:
                            cells += [_fmt(r["sample_mean"], d), _fmt(r["model_mean"], d),
                                      _fmt(r["sample_std"], d + 2), _fmt(r["model_std"], d + 2)]
                    fh.write(",".join(cells) + "\n")
            written.append(path)
        path = os.path.join(outdir, "scalars.csv")
        with open(path, "w", encoding="ascii") as fh:
            fh.write("ell,stat,sample_mean,sample_std,model_std\n")
            for r in report.scalars:
                fh.write(f"{r['ell']},{r['stat']},{r['sample_mean']!r},"
                         f"{r['sample_std']!r},{r['model_std']!r}\n")
        written.append(path)
        for ell, block in sorted(report.correlations.items()):
            path = os.path.join(outdir, f"correlation_l{ell}.csv")
            with open(path, "w", encoding="ascii") as fh:
                fh.write("," + ",".join(block["labels"]) + "\n")
                for label, row in zip(block["labels"], block["matrix"]):
                    fh.write(label + "," + ",".join(f"{v:.6f}" for v in row) + "\n")
            written.append(path)
    return written
