"""Station and batch analysis.

A station run sweeps the full experiment matrix: for every percentile
the series is thresholded and its runs extracted once, then for every
minimum run length the filtered process is characterised (run-length
density, mean interevent time, Cv and Lv with surrogate bands and
classifications, Allan-factor curve with band and departure, optional
power-law fit).  Every (percentile, min length) cell is evaluated in
isolation: a cell that cannot produce its products records a status
instead of aborting the run.

Cells are independent, so a batch distributes them over a bounded
worker pool.  Each cell's surrogate seed is derived from the master
seed and the cell identity alone, and results are assembled in sorted
cell order, so outputs are byte-identical across reruns regardless of
worker count or scheduling.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, wait
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .allan import DP_CUTOFF, af_curve, default_fit_range, departure, fit_power_law
from .ingest import SampledSeries, StationMeta, parse_series, parse_station_meta
from .runs import MarkedPointProcess, compute_threshold, extract_runs, \
    filter_by_min_length, write_events
from .stats import RunLengthDensity, average_density, interevent_times, \
    mean_interevent_time, run_length_density
from .surrogates import SurrogateConfig, cell_bands

__all__ = [
    "AnalysisConfig",
    "TauGridSpec",
    "derive_cell_seed",
    "percentile_label",
    "run_length_label",
    "run_batch",
    "run_station",
]


@dataclass(frozen=True)
class TauGridSpec:
    """Geometric tau grid; ``lo``/``hi`` default to twice the sampling
    step and a tenth of the observation span."""

    lo: float | None = None
    hi: float | None = None
    points: int = 60

    def __post_init__(self):
        if self.points < 1:
            raise ValueError("tau grid needs at least 1 point")
        if self.lo is not None and not self.lo > 0:
            raise ValueError("tau grid lo must be positive")
        if self.lo is not None and self.hi is not None and not self.hi >= self.lo:
            raise ValueError("tau grid hi must be >= lo")

    def resolve(self, dt: float, duration: float) -> np.ndarray:
        lo = 2.0 * dt if self.lo is None else self.lo
        hi = duration / 10.0 if self.hi is None else self.hi
        if not hi >= lo:
            raise ValueError("resolved tau grid is empty (hi < lo)")
        if self.points == 1 or hi == lo:
            return np.array([lo]) if self.points == 1 else np.geomspace(lo, hi, self.points)
        return np.geomspace(lo, hi, self.points)


@dataclass(frozen=True)
class AnalysisConfig:
    """Knobs of a station or batch run.

    ``seed`` is the master seed every surrogate substream derives from;
    runs with surrogates always require it.  ``workers`` bounds the
    process pool (``None`` = the machine's CPU count).
    """

    seed: int
    output_dir: str
    percentiles: tuple[float, ...] = (0.95, 0.975, 0.99)
    min_run_lengths: tuple[int, ...] = tuple(range(1, 31))
    tau_grid: TauGridSpec = TauGridSpec()
    n_surrogates: int = 1000
    band: tuple[float, float] = (0.025, 0.975)
    dp_cutoff: float = DP_CUTOFF
    min_events: int = 3
    threshold_floor: int = 100
    fit: bool = True
    dt: float = 600.0
    workers: int | None = None

    def __post_init__(self):
        if not self.percentiles:
            raise ValueError("need at least one percentile")
        if any(not 0.0 < p < 1.0 for p in self.percentiles):
            raise ValueError("percentiles must lie in (0, 1)")
        if len(set(self.percentiles)) != len(self.percentiles):
            raise ValueError("duplicate percentiles")
        if not self.min_run_lengths:
            raise ValueError("need at least one minimum run length")
        if any(m < 1 for m in self.min_run_lengths):
            raise ValueError("minimum run lengths must be >= 1")
        if len(set(self.min_run_lengths)) != len(self.min_run_lengths):
            raise ValueError("duplicate minimum run lengths")
        if self.min_events < 3:
            raise ValueError("min_events below 3 cannot support scalar bands")
        if self.workers is not None and self.workers < 1:
            raise ValueError("workers must be >= 1")
        object.__setattr__(self, "percentiles", tuple(float(p) for p in self.percentiles))
        object.__setattr__(self, "min_run_lengths",
                           tuple(int(m) for m in self.min_run_lengths))

    def as_mapping(self) -> dict:
        """Flat mapping of the effective configuration, for echoing."""
        return {
            "seed": self.seed,
            "output_dir": str(self.output_dir),
            "percentiles": list(self.percentiles),
            "min_run_lengths": list(self.min_run_lengths),
            "tau_lo": self.tau_grid.lo,
            "tau_hi": self.tau_grid.hi,
            "tau_points": self.tau_grid.points,
            "n_surrogates": self.n_surrogates,
            "band_lo": self.band[0],
            "band_hi": self.band[1],
            "dp_cutoff": self.dp_cutoff,
            "min_events": self.min_events,
            "threshold_floor": self.threshold_floor,
            "fit": self.fit,
            "dt": self.dt,
            "workers": self.workers,
        }

    @classmethod
    def from_mapping(cls, mapping: dict) -> "AnalysisConfig":
        """Inverse of :meth:`as_mapping`; unknown keys are an error."""
        known = {"seed", "output_dir", "percentiles", "min_run_lengths",
                 "tau_lo", "tau_hi", "tau_points", "n_surrogates", "band_lo",
                 "band_hi", "dp_cutoff", "min_events", "threshold_floor",
                 "fit", "dt", "workers"}
        unknown = set(mapping) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "seed" not in mapping or mapping["seed"] is None:
            raise ValueError("config requires a seed")
        if "output_dir" not in mapping or mapping["output_dir"] is None:
            raise ValueError("config requires an output_dir")
        defaults = {f.name: f.default for f in dataclasses.fields(cls)}
        grid = TauGridSpec(
            lo=mapping.get("tau_lo"),
            hi=mapping.get("tau_hi"),
            points=mapping.get("tau_points", TauGridSpec.points))
        band = (mapping.get("band_lo", 0.025), mapping.get("band_hi", 0.975))
        kwargs = {}
        for name in ("seed", "output_dir", "n_surrogates", "dp_cutoff",
                     "min_events", "threshold_floor", "fit", "dt", "workers"):
            kwargs[name] = mapping.get(name, defaults[name])
        if "percentiles" in mapping:
            kwargs["percentiles"] = tuple(mapping["percentiles"])
        if "min_run_lengths" in mapping:
            kwargs["min_run_lengths"] = tuple(mapping["min_run_lengths"])
        return cls(tau_grid=grid, band=band, **kwargs)


def derive_cell_seed(master_seed: int, station_id: str, percentile: float,
                     min_run_length: int) -> int:
    """64-bit surrogate seed for one cell, stable across scheduling.

    Hashes the master seed together with the cell identity, so any cell
    can be recomputed in isolation and still reproduce the batch run.
    """
    text = f"{master_seed}|{station_id}|{percentile!r}|{min_run_length}"
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "big")


def percentile_label(percentile: float) -> str:
    return f"p{100.0 * percentile:g}"


def run_length_label(min_run_length: int) -> str:
    return f"lm{min_run_length:02d}"


# ---------------------------------------------------------------------------
# Cell evaluation (runs inside worker processes; must stay top-level).


def _scalar_band_payload(band) -> dict:
    return {
        "observed": band.observed,
        "band_lo": band.lo,
        "band_hi": band.hi,
        "classification": band.classification,
    }


def _evaluate_cell(task: dict) -> dict:
    pp: MarkedPointProcess = task["pp"]
    out = {
        "station_id": task["station_id"],
        "percentile": task["percentile"],
        "min_run_length": task["min_run_length"],
        "threshold_value": pp.threshold.value if pp.threshold else None,
        "gap_fraction": pp.gap_fraction,
        "n_events": pp.n_events,
        "seed_master": task["seed_master"],
        "seed_cell": task["seed_cell"],
        "n_surrogates": task["n_surrogates"],
        "band": list(task["band"]),
    }
    if pp.n_events < task["min_events"]:
        out["status"] = "insufficient_events"
        return out
    try:
        taus = task["taus"]
        density = run_length_density(pp)
        intervals = interevent_times(pp)
        config = SurrogateConfig(seed=task["seed_cell"],
                                 n_surrogates=task["n_surrogates"],
                                 band=tuple(task["band"]))
        cv_band, lv_band, band = cell_bands(pp, taus, config)
        curve = af_curve(pp, taus)
        dp = departure(curve, band, task["dp_cutoff"])

        fit_payload = None
        fit_message = None
        if task["fit"]:
            try:
                fit = fit_power_law(curve)
                fit_payload = {
                    "alpha": fit.alpha,
                    "tau1_seconds": fit.tau1,
                    "fit_lo": fit.fit_lo,
                    "fit_hi": fit.fit_hi,
                    "r_squared": fit.r_squared,
                    "n_used": fit.n_used,
                    "n_excluded": fit.n_excluded,
                    "detected": fit.detected,
                }
            except ValueError as exc:
                fit_message = str(exc)

        out.update({
            "status": "ok" if curve.n_defined > 0 else "undefined_af",
            "mean_interevent_seconds": mean_interevent_time(intervals),
            "density_lengths": density.lengths.tolist(),
            "density_probs": density.probs.tolist(),
            "cv": _scalar_band_payload(cv_band),
            "lv": _scalar_band_payload(lv_band),
            "taus": taus.tolist(),
            "af": curve.af.tolist(),
            "af_reasons": {repr(k): v for k, v in curve.reasons.items()},
            "band_lo": band.lo.tolist(),
            "band_hi": band.hi.tolist(),
            "band_n_samples": band.n_samples.tolist(),
            "dp": {repr(t): v for t, v in dp},
            "power_law_fit": fit_payload,
            "fit_message": fit_message,
        })
    except Exception as exc:  # fault isolation: one broken cell never
        out["status"] = "error"  # takes the rest of the matrix down
        out["message"] = f"{type(exc).__name__}: {exc}"
    return out


# ---------------------------------------------------------------------------
# Deterministic output writing.


def _jsonable(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _write_json(path: Path, payload) -> None:
    _atomic_write_text(path, json.dumps(_jsonable(payload), indent=2,
                                        sort_keys=True) + "\n")


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return "" if not math.isfinite(value) else repr(value)
    return str(value)


def _write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    lines += [",".join(_csv_cell(v) for v in row) for row in rows]
    _atomic_write_text(path, "\n".join(lines) + "\n")


def _write_cell_outputs(cell_dir: Path, payload: dict) -> None:
    cell_dir.mkdir(parents=True, exist_ok=True)
    stats = {k: v for k, v in payload.items()
             if k not in ("taus", "af", "band_lo", "band_hi", "band_n_samples",
                          "dp", "density_lengths", "density_probs")}
    stats["estimators"] = {"quantile": "linear", "std": "population"}
    _write_json(cell_dir / "stats.json", stats)
    if payload["status"] in ("insufficient_events", "error"):
        return

    dp = {float(k): v for k, v in payload["dp"].items()}
    af_rows = [
        (tau, af, lo, hi, dp.get(tau))
        for tau, af, lo, hi in zip(payload["taus"], payload["af"],
                                   payload["band_lo"], payload["band_hi"])
    ]
    _write_csv(cell_dir / "af.csv",
               ["tau_seconds", "af", "band_lo", "band_hi", "dp"], af_rows)
    _write_csv(cell_dir / "band.csv",
               ["tau_seconds", "band_lo", "band_hi", "n_samples"],
               zip(payload["taus"], payload["band_lo"], payload["band_hi"],
                   payload["band_n_samples"]))
    _write_csv(cell_dir / "pm.csv", ["m", "probability"],
               zip(payload["density_lengths"], payload["density_probs"]))


# ---------------------------------------------------------------------------
# Station and batch drivers.


def _effective_workers(config: AnalysisConfig) -> int:
    return config.workers if config.workers is not None else (os.cpu_count() or 1)


def _run_cells(tasks: list[dict], workers: int, executor=None) -> list[dict]:
    if executor is None and workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return _run_cells(tasks, workers, executor=pool)
    if executor is None:
        return [_evaluate_cell(task) for task in tasks]

    # Bounded submission keeps at most 2*workers task payloads in flight.
    results: dict[int, dict] = {}
    pending = {}
    queue = list(enumerate(tasks))
    queue.reverse()
    while queue or pending:
        while queue and len(pending) < 2 * workers:
            idx, task = queue.pop()
            pending[executor.submit(_evaluate_cell, task)] = idx
        done, _ = wait(pending, return_when=FIRST_COMPLETED)
        for future in done:
            results[pending.pop(future)] = future.result()
    return [results[i] for i in range(len(tasks))]


def _station_cells(series: SampledSeries, config: AnalysisConfig,
                   executor=None) -> tuple[dict, dict, list[dict]]:
    """Extract runs and evaluate the full cell matrix of one station.

    Returns (thresholds by percentile, unfiltered densities by
    percentile, cell payloads sorted by (percentile, min length)).
    """
    taus = config.tau_grid.resolve(series.dt, series.n_samples * series.dt)
    thresholds: dict[float, object] = {}
    processes: dict[float, MarkedPointProcess] = {}
    densities: dict[float, RunLengthDensity] = {}
    for pct in sorted(config.percentiles):
        threshold = compute_threshold(series, pct, min_count=config.threshold_floor)
        pp = extract_runs(series, threshold)
        thresholds[pct] = threshold
        processes[pct] = pp
        if pp.n_events:
            densities[pct] = run_length_density(pp)

    tasks = []
    for pct in sorted(config.percentiles):
        for lm in sorted(config.min_run_lengths):
            tasks.append({
                "station_id": series.station_id,
                "percentile": pct,
                "min_run_length": lm,
                "pp": filter_by_min_length(processes[pct], lm),
                "taus": taus,
                "seed_master": config.seed,
                "seed_cell": derive_cell_seed(config.seed, series.station_id,
                                              pct, lm),
                "n_surrogates": config.n_surrogates,
                "band": config.band,
                "dp_cutoff": config.dp_cutoff,
                "min_events": config.min_events,
                "fit": config.fit,
            })
    payloads = _run_cells(tasks, _effective_workers(config), executor)
    return thresholds, densities, payloads


def run_station(series: SampledSeries, meta: StationMeta | None,
                config: AnalysisConfig, executor=None) -> dict:
    """Run the full analysis matrix for one station and write its outputs.

    Creates ``<output_dir>/<station_id>/`` holding the per-percentile
    event lists, one directory per (percentile, min run length) cell
    with ``af.csv``, ``band.csv``, ``pm.csv`` and ``stats.json``, and a
    ``summary.json`` enumerating every attempted cell with its status.

    Returns the station result: the summary dict plus the in-memory
    pieces a batch needs for cross-station products.
    """
    thresholds, densities, payloads = _station_cells(series, config, executor)
    height = meta.height if meta is not None else None

    station_dir = Path(config.output_dir) / series.station_id
    station_dir.mkdir(parents=True, exist_ok=True)

    for pct in sorted(config.percentiles):
        pp = extract_runs(series, thresholds[pct])
        write_events(pp, station_dir / f"events_{percentile_label(pct)}.csv")

    cells_index = []
    for payload in payloads:
        payload["height_m"] = height
        label = (percentile_label(payload["percentile"]),
                 run_length_label(payload["min_run_length"]))
        _write_cell_outputs(station_dir / label[0] / label[1], payload)
        cells_index.append({
            "percentile": payload["percentile"],
            "min_run_length": payload["min_run_length"],
            "status": payload["status"],
            "n_events": payload["n_events"],
            "path": f"{label[0]}/{label[1]}",
        })

    summary = {
        "station_id": series.station_id,
        "height_m": height,
        "label": meta.label if meta is not None else None,
        "n_samples": series.n_samples,
        "dt": series.dt,
        "t0": series.t0.isoformat().replace("+00:00", "Z"),
        "gap_fraction": series.gap_fraction,
        "thresholds": {percentile_label(p): thresholds[p].value
                       for p in sorted(config.percentiles)},
        "cells": cells_index,
    }
    _write_json(station_dir / "summary.json", summary)
    return {
        "summary": summary,
        "densities": densities,
        "thresholds": {p: thresholds[p].value for p in thresholds},
        "payloads": payloads,
    }


def run_batch(station_dir: str | Path, meta_path: str | Path,
              config: AnalysisConfig) -> dict:
    """Analyse every station CSV in a directory and build cross products.

    Stations without metadata are skipped with a warning, as are
    stations whose series cannot be parsed or thresholded; remaining
    stations still run (partial results).  Cross-station products land
    in ``<output_dir>/cross/``: the averaged run-length density and the
    threshold-vs-height table per percentile, mean interevent time by
    height per (percentile, min length), and the departure surface per
    (percentile, min length).
    """
    station_dir = Path(station_dir)
    out_root = Path(config.output_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    _write_json(out_root / "config.json", config.as_mapping())

    meta_by_id = {m.station_id: m for m in parse_station_meta(meta_path)}
    series_paths = sorted(station_dir.glob("*.csv"))
    if not series_paths:
        raise ValueError(f"no station CSVs found in {station_dir}")

    results: dict[str, dict] = {}
    stations_index: list[dict] = []
    warnings: list[str] = []
    workers = _effective_workers(config)

    from contextlib import nullcontext
    pool_ctx = (ProcessPoolExecutor(max_workers=workers)
                if workers > 1 else nullcontext(None))
    with pool_ctx as executor:
        for path in series_paths:
            station_id = path.stem
            if station_id not in meta_by_id:
                warnings.append(f"station {station_id}: no metadata, skipped")
                stations_index.append({"station_id": station_id,
                                       "status": "skipped_no_metadata"})
                continue
            try:
                series = parse_series(path, station_id=station_id, dt=config.dt)
                result = run_station(series, meta_by_id[station_id], config,
                                     executor)
            except ValueError as exc:
                warnings.append(f"station {station_id}: {exc}")
                stations_index.append({"station_id": station_id,
                                       "status": "failed",
                                       "message": str(exc)})
                continue
            results[station_id] = result
            stations_index.append({"station_id": station_id, "status": "ok"})

    _write_cross_products(out_root / "cross", results, meta_by_id, config)

    cell_statuses = [p["status"] for r in results.values() for p in r["payloads"]]
    partial = (bool(warnings)
               or any(s != "ok" for s in cell_statuses)
               or not results)
    batch_summary = {
        "stations": stations_index,
        "warnings": warnings,
        "n_cells": len(cell_statuses),
        "n_cells_ok": sum(s == "ok" for s in cell_statuses),
        "partial": partial,
    }
    _write_json(out_root / "batch.json", batch_summary)
    return batch_summary


def _write_cross_products(cross_dir: Path, results: dict, meta_by_id: dict,
                          config: AnalysisConfig) -> None:
    cross_dir.mkdir(parents=True, exist_ok=True)
    station_ids = sorted(results)

    rows = []
    for sid in station_ids:
        for pct in sorted(config.percentiles):
            rows.append((sid, meta_by_id[sid].height, pct,
                         results[sid]["thresholds"][pct]))
    _write_csv(cross_dir / "thresholds_vs_height.csv",
               ["station_id", "height_m", "percentile", "threshold"], rows)

    for pct in sorted(config.percentiles):
        label = percentile_label(pct)
        densities = [results[sid]["densities"][pct] for sid in station_ids
                     if pct in results[sid]["densities"]]
        if densities:
            mean_density = average_density(densities)
            _write_csv(cross_dir / f"mean_pm_{label}.csv", ["m", "probability"],
                       zip(mean_density.lengths.tolist(),
                           mean_density.probs.tolist()))

        rows = []
        for sid in station_ids:
            for payload in results[sid]["payloads"]:
                if payload["percentile"] != pct or payload["status"] not in (
                        "ok", "undefined_af"):
                    continue
                rows.append((sid, meta_by_id[sid].height,
                             payload["min_run_length"],
                             payload["mean_interevent_seconds"]))
        _write_csv(cross_dir / f"mean_interevent_vs_height_{label}.csv",
                   ["station_id", "height_m", "min_run_length",
                    "mean_interevent_seconds"], rows)

        for lm in sorted(config.min_run_lengths):
            rows = []
            for sid in station_ids:
                for payload in results[sid]["payloads"]:
                    if (payload["percentile"] != pct
                            or payload["min_run_length"] != lm
                            or payload["status"] != "ok"):
                        continue
                    dp = sorted((float(k), v) for k, v in payload["dp"].items())
                    rows.extend((sid, meta_by_id[sid].height, tau, value)
                                for tau, value in dp)
            _write_csv(cross_dir / f"departure_{label}_{run_length_label(lm)}.csv",
                       ["station_id", "height_m", "tau_seconds", "dp"], rows)
