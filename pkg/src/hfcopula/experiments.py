"""Monte Carlo experiment runners and report emission.

Three experiments: confidence contours on a (u, v) grid, the QQ data of
the studentized statistic, and the sup-norm distance between estimated
and true copula over a time/unit grid with a kernel density estimate on
log scale.  Every runner is a pure function of its spec (the master seed
included); replications derive their seed as master + index and may be
farmed out to a process pool without changing a single output byte.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__
from .estimators import CopulaQuery, copula_estimate, quarticity, realized_variation, variance_estimate
from .gaussmath import std_normal_cdf, std_normal_quantile
from .kernel import (
    DEFAULT_KERNEL,
    KernelConfig,
    NearDiagonalError,
    TimePair,
    UnitPair,
    grad_psi_grid,
    psi,
    psi_grid,
)
from .simulate import DEFAULT_CIR, CirParams, ConstantVol, SimConfig, simulate_scenario

__all__ = [
    "ContourSpec",
    "QqSpec",
    "RhoSpec",
    "ExperimentReport",
    "run_contour",
    "run_qq",
    "run_rho",
    "kde_log",
    "ks_normal_distance",
    "write_report",
    "write_csv",
]


def _check_pos_int(name: str, val, minimum: int = 1) -> int:
    if not (isinstance(val, (int, np.integer)) and val >= minimum):
        raise ValueError(f"{name} must be an integer >= {minimum}, got {val!r}")
    return int(val)


def _check_real(name: str, val, lo: float = -math.inf, hi: float = math.inf) -> float:
    if not (isinstance(val, (int, float)) and math.isfinite(val) and lo < val < hi):
        raise ValueError(f"{name} must be a finite real in ({lo}, {hi}), got {val!r}")
    return float(val)


def _check_vol(vol) -> None:
    if not isinstance(vol, (CirParams, ConstantVol)):
        raise ValueError(f"vol must be CirParams or ConstantVol, got {vol!r}")


@dataclass(frozen=True)
class ContourSpec:
    """Confidence-contour experiment over a full (u, v) grid."""

    s: float = 0.3
    t: float = 0.7
    n_list: tuple[int, ...] = (100, 10000)
    uv_grid: int = 101
    level: float = 0.95
    replications: int = 1
    seed: int = 0
    horizon: float = 1.0
    substeps: int = 10
    vol: CirParams | ConstantVol = DEFAULT_CIR

    def __post_init__(self) -> None:
        object.__setattr__(self, "n_list", tuple(_check_pos_int("n", n) for n in self.n_list))
        if not self.n_list:
            raise ValueError("n_list must not be empty")
        _check_real("horizon", self.horizon, lo=0.0)
        if not 0.0 < self.s < self.t <= self.horizon:
            raise ValueError(
                f"need 0 < s < t <= horizon, got s={self.s!r}, t={self.t!r}, "
                f"horizon={self.horizon!r}"
            )
        if _check_pos_int("uv_grid", self.uv_grid) < 2:
            raise ValueError(f"uv_grid must be >= 2, got {self.uv_grid!r}")
        _check_real("level", self.level, lo=0.0, hi=1.0)
        _check_pos_int("replications", self.replications)
        _check_pos_int("seed", self.seed, minimum=0)
        _check_pos_int("substeps", self.substeps)
        _check_vol(self.vol)


@dataclass(frozen=True)
class QqSpec:
    """Studentized-statistic sampling experiment at a single query point."""

    s: float = 0.3
    t: float = 0.7
    u: float = 0.7
    v: float = 0.3
    n: int = 10000
    replications: int = 1000
    seed: int = 0
    horizon: float = 1.0
    substeps: int = 10
    vol: CirParams | ConstantVol = DEFAULT_CIR

    def __post_init__(self) -> None:
        _check_real("horizon", self.horizon, lo=0.0)
        if not 0.0 < self.s < self.t <= self.horizon:
            raise ValueError(
                f"need 0 < s < t <= horizon, got s={self.s!r}, t={self.t!r}, "
                f"horizon={self.horizon!r}"
            )
        _check_real("u", self.u, lo=0.0, hi=1.0)
        _check_real("v", self.v, lo=0.0, hi=1.0)
        _check_pos_int("n", self.n)
        _check_pos_int("replications", self.replications)
        _check_pos_int("seed", self.seed, minimum=0)
        _check_pos_int("substeps", self.substeps)
        _check_vol(self.vol)


@dataclass(frozen=True)
class RhoSpec:
    """Sup-norm statistic experiment over a time grid and (u, v) grid."""

    tau: float = 0.1
    horizon: float = 1.0
    st_step: float = 0.05
    uv_grid: int = 101
    n_list: tuple[int, ...] = (100, 400, 1600)
    replications: int = 500
    seed: int = 0
    substeps: int = 10
    vol: CirParams | ConstantVol = DEFAULT_CIR

    def __post_init__(self) -> None:
        _check_real("horizon", self.horizon, lo=0.0)
        _check_real("tau", self.tau, lo=0.0, hi=self.horizon)
        _check_real("st_step", self.st_step, lo=0.0)
        if _check_pos_int("uv_grid", self.uv_grid) < 2:
            raise ValueError(f"uv_grid must be >= 2, got {self.uv_grid!r}")
        object.__setattr__(self, "n_list", tuple(_check_pos_int("n", n) for n in self.n_list))
        if not self.n_list:
            raise ValueError("n_list must not be empty")
        _check_pos_int("replications", self.replications)
        _check_pos_int("seed", self.seed, minimum=0)
        _check_pos_int("substeps", self.substeps)
        _check_vol(self.vol)

    def time_grid(self) -> np.ndarray:
        count = int(math.floor((self.horizon - self.tau) / self.st_step + 1e-9)) + 1
        return self.tau + self.st_step * np.arange(count)


@dataclass(frozen=True, eq=False)
class ExperimentReport:
    """Named data columns plus JSON-ready metadata for one experiment run."""

    kind: str
    tables: dict[str, dict[str, np.ndarray]]
    metadata: dict

    def __post_init__(self) -> None:
        if self.kind not in ("contour", "qq", "rho"):
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        for tname, cols in self.tables.items():
            lengths = {name: len(arr) for name, arr in cols.items()}
            if len(set(lengths.values())) > 1:
                raise ValueError(f"table {tname!r} has ragged columns: {lengths}")


def _spec_dict(spec) -> dict:
    out = asdict(spec)
    out["vol"] = {"model": "constant" if isinstance(spec.vol, ConstantVol) else "cir",
                  **asdict(spec.vol)}
    return out


def _map_replications(fn, count: int, workers: int) -> list:
    if workers <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    chunk = max(1, count // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, range(count), chunksize=chunk))


# --- qq ---------------------------------------------------------------------

def _qq_replication(spec: QqSpec, rep: int) -> tuple[float, float, float, str]:
    cfg = SimConfig(n=spec.n, horizon=spec.horizon, substeps=spec.substeps,
                    seed=spec.seed + rep)
    scn = simulate_scenario(spec.vol, cfg)
    path = scn.path
    i_s = path.index_at(spec.s)
    i_t = path.index_at(spec.t)
    c_true = psi(TimePair(float(scn.true_T[i_s]), float(scn.true_T[i_t])),
                 UnitPair(spec.u, spec.v))
    q = CopulaQuery(s=spec.s, t=spec.t, u=spec.u, v=spec.v)
    c_hat = copula_estimate(path, q)
    try:
        v_hat = variance_estimate(path, q)
    except NearDiagonalError:
        return c_true, c_hat, math.nan, "near_diagonal"
    if not v_hat > 0.0:
        return c_true, c_hat, v_hat, "degenerate"
    return c_true, c_hat, v_hat, "ok"


def run_qq(spec: QqSpec, workers: int = 1) -> ExperimentReport:
    """Sample the studentized statistic across replications.

    Replications whose variance estimate fails near the diagonal are
    dropped from the statistic sample and counted in the metadata.
    """
    rows = _map_replications(partial(_qq_replication, spec), spec.replications, workers)

    c_true = np.array([r[0] for r in rows])
    c_hat = np.array([r[1] for r in rows])
    v_hat = np.array([r[2] for r in rows])
    ok = np.array([r[3] == "ok" for r in rows])

    stat = np.full(spec.replications, np.nan)
    stat[ok] = np.sqrt(spec.n / v_hat[ok]) * (c_hat[ok] - c_true[ok])

    kept = stat[ok]
    order = np.sort(kept)
    m = order.size
    quantiles = np.array([std_normal_quantile((k - 0.5) / m) for k in range(1, m + 1)]) \
        if m else np.empty(0)
    ks = ks_normal_distance(order) if m else math.nan

    scaled_err = np.sqrt(spec.n) * (c_hat[ok] - c_true[ok])
    dropped = {
        "near_diagonal": int(sum(r[3] == "near_diagonal" for r in rows)),
        "degenerate": int(sum(r[3] == "degenerate" for r in rows)),
    }
    z975 = std_normal_quantile(0.975)
    metadata = {
        "kind": "qq",
        "version": __version__,
        "spec": _spec_dict(spec),
        "kept": int(m),
        "dropped": dropped,
        "ks_distance": float(ks),
        "mean_statistic": float(np.mean(kept)) if m else math.nan,
        "variance_statistic": float(np.var(kept, ddof=1)) if m > 1 else math.nan,
        "mean_v_hat": float(np.mean(v_hat[ok])) if m else math.nan,
        "empirical_variance_scaled_error": float(np.var(scaled_err, ddof=1)) if m > 1 else math.nan,
        "coverage_95": float(np.mean(np.abs(kept) <= z975)) if m else math.nan,
    }
    tables = {
        "qq_statistics": {
            "rank": np.arange(1, m + 1),
            "statistic": order,
            "normal_quantile": quantiles,
        },
        "qq_replications": {
            "replication": np.arange(spec.replications),
            "c_true": c_true,
            "c_hat": c_hat,
            "v_hat": v_hat,
            "statistic": stat,
        },
    }
    return ExperimentReport(kind="qq", tables=tables, metadata=metadata)


# --- contour ----------------------------------------------------------------

def _contour_replication(spec: ContourSpec, n: int, rep: int):
    cfg = SimConfig(n=n, horizon=spec.horizon, substeps=spec.substeps,
                    seed=spec.seed + rep)
    scn = simulate_scenario(spec.vol, cfg)
    path = scn.path
    ug = np.linspace(0.0, 1.0, spec.uv_grid)
    i_s = path.index_at(spec.s)
    i_t = path.index_at(spec.t)

    c_true = psi_grid(float(scn.true_T[i_s]), float(scn.true_T[i_t]), ug, ug)
    rv_s = realized_variation(path, spec.s)
    rv_t = realized_variation(path, spec.t)
    c_hat = psi_grid(rv_s, rv_t, ug, ug)

    fre_lo = np.maximum(np.add.outer(ug, ug) - 1.0, 0.0)
    fre_hi = np.minimum.outer(ug, ug)
    center = np.clip(c_hat, fre_lo, fre_hi)

    boundary = np.zeros((spec.uv_grid, spec.uv_grid), dtype=bool)
    boundary[0, :] = boundary[-1, :] = True
    boundary[:, 0] = boundary[:, -1] = True

    try:
        g_t, g_s = grad_psi_grid(rv_s, rv_t, ug, ug)
    except ValueError:
        # realized variations coincide (or degenerate to zero): no interval
        # exists at interior cells for this replication
        lo = np.where(boundary, center, np.nan)
        hi = np.where(boundary, center, np.nan)
        return c_true, c_hat, lo, hi

    q_lo = quarticity(path, min(spec.s, spec.t))
    q_hi = quarticity(path, max(spec.s, spec.t))
    g_sum = g_t + g_s
    v_grid = 2.0 * (q_lo * g_sum * g_sum + (q_hi - q_lo) * g_t * g_t)
    half = std_normal_quantile(0.5 * (1.0 + spec.level)) * np.sqrt(v_grid / n)

    lo = np.maximum(center - half, fre_lo)
    hi = np.minimum(center + half, fre_hi)
    lo[boundary] = center[boundary]
    hi[boundary] = center[boundary]
    return c_true, c_hat, lo, hi


def run_contour(spec: ContourSpec, workers: int = 1) -> ExperimentReport:
    """Estimate the copula with confidence bands on a (u, v) grid per n.

    Cells whose interval could not be computed (variance failure) are
    recorded as missing in that replication, never imputed.
    """
    ug = np.linspace(0.0, 1.0, spec.uv_grid)
    uu = np.repeat(ug, spec.uv_grid)
    vv = np.tile(ug, spec.uv_grid)

    tables = {}
    meta_per_n = {}
    for n in spec.n_list:
        reps = _map_replications(partial(_contour_replication, spec, n),
                                 spec.replications, workers)
        c_true = np.stack([r[0] for r in reps])
        c_hat = np.stack([r[1] for r in reps])
        lo = np.stack([r[2] for r in reps])
        hi = np.stack([r[3] for r in reps])

        valid = ~np.isnan(lo)
        n_valid = valid.sum(axis=0)
        covered = np.where(valid, (lo <= c_true) & (c_true <= hi), 0.0)
        width = np.where(valid, hi - lo, 0.0)
        coverage = np.where(n_valid > 0, covered.sum(axis=0) / np.maximum(n_valid, 1), np.nan)
        mean_width = np.where(n_valid > 0, width.sum(axis=0) / np.maximum(n_valid, 1), np.nan)
        n_failed = spec.replications - n_valid

        tables[f"contour_n{n}"] = {
            "u": uu,
            "v": vv,
            "true_c": c_true[0].ravel(),
            "c_hat": c_hat[0].ravel(),
            "ci_lo": lo[0].ravel(),
            "ci_hi": hi[0].ravel(),
            "coverage": coverage.ravel(),
            "mean_width": mean_width.ravel(),
            "n_failed": n_failed.ravel().astype(np.int64),
        }
        interior = np.ones((spec.uv_grid, spec.uv_grid), dtype=bool)
        interior[0, :] = interior[-1, :] = False
        interior[:, 0] = interior[:, -1] = False
        meta_per_n[str(n)] = {
            "mean_interior_width": float(np.nanmean(mean_width[interior]))
            if interior.any() else math.nan,
            "mean_interior_coverage": float(np.nanmean(coverage[interior]))
            if interior.any() else math.nan,
            "failed_cells": int(n_failed.sum()),
        }

    metadata = {
        "kind": "contour",
        "version": __version__,
        "spec": _spec_dict(spec),
        "per_n": meta_per_n,
    }
    return ExperimentReport(kind="contour", tables=tables, metadata=metadata)


# --- rho --------------------------------------------------------------------

def _true_grid_stack(true_T: np.ndarray, indices: np.ndarray, pairs: list[tuple[int, int]],
                     ug: np.ndarray, config: KernelConfig) -> list[np.ndarray]:
    return [psi_grid(float(true_T[indices[i]]), float(true_T[indices[j]]), ug, ug, config)
            for i, j in pairs]


def _rho_replication(spec: RhoSpec, n: int,
                     true_stack: list[np.ndarray] | None, rep: int) -> float:
    cfg = SimConfig(n=n, horizon=spec.horizon, substeps=spec.substeps,
                    seed=spec.seed + rep)
    scn = simulate_scenario(spec.vol, cfg)
    path = scn.path
    tg = spec.time_grid()
    indices = np.array([path.index_at(float(tv)) for tv in tg])
    rv = np.array([realized_variation(path, float(tv)) for tv in tg])
    ug = np.linspace(0.0, 1.0, spec.uv_grid)

    pairs = [(i, j) for i in range(tg.size) for j in range(i + 1, tg.size)]
    if true_stack is None:
        true_stack = _true_grid_stack(scn.true_T, indices, pairs, ug, DEFAULT_KERNEL)

    worst = 0.0
    for k, (i, j) in enumerate(pairs):
        est = psi_grid(float(rv[i]), float(rv[j]), ug, ug)
        gap = float(np.max(np.abs(est - true_stack[k])))
        if gap > worst:
            worst = gap
    return worst


def run_rho(spec: RhoSpec, workers: int = 1) -> ExperimentReport:
    """Sample the sup-norm distance between estimated and true copula.

    The sup runs over ordered time pairs from the spec's grid (the kernel
    is symmetric, so unordered pairs add nothing) and the full (u, v)
    grid; boundary cells contribute exactly zero by construction.
    """
    tables = {}
    meta_per_n = {}
    ug = np.linspace(0.0, 1.0, spec.uv_grid)
    tg = spec.time_grid()
    pairs = [(i, j) for i in range(tg.size) for j in range(i + 1, tg.size)]

    for n in spec.n_list:
        true_stack = None
        if isinstance(spec.vol, ConstantVol):
            # the time change is deterministic: hoist the true grids out of
            # the replication loop
            cfg = SimConfig(n=n, horizon=spec.horizon, substeps=spec.substeps, seed=spec.seed)
            scn = simulate_scenario(spec.vol, cfg)
            indices = np.array([scn.path.index_at(float(tv)) for tv in tg])
            true_stack = _true_grid_stack(scn.true_T, indices, pairs, ug, DEFAULT_KERNEL)

        samples = np.array(_map_replications(
            partial(_rho_replication, spec, n, true_stack), spec.replications, workers))

        tables[f"rho_samples_n{n}"] = {
            "replication": np.arange(spec.replications),
            "rho": samples,
        }
        entry = {
            "median_rho": float(np.median(samples)),
            "mean_rho": float(np.mean(samples)),
            "ref_rate": float(1.0 / math.sqrt(n)),
            "log_ref_rate": float(-0.5 * math.log(n)),
        }
        try:
            grid, density = kde_log(samples)
            tables[f"rho_kde_n{n}"] = {"log_rho": grid, "density": density}
            entry["kde"] = True
        except ValueError:
            # fewer than 2 samples or no spread: the samples table still
            # carries everything
            entry["kde"] = False
        meta_per_n[str(n)] = entry

    metadata = {
        "kind": "rho",
        "version": __version__,
        "spec": _spec_dict(spec),
        "per_n": meta_per_n,
    }
    return ExperimentReport(kind="rho", tables=tables, metadata=metadata)


# --- statistics helpers -----------------------------------------------------

def kde_log(samples) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian kernel density estimate of log(samples) on a 512-point grid.

    Bandwidth is Silverman's rule h = 0.9 * min(sd, IQR/1.34) * m^(-1/5);
    the grid spans [min - 3h, max + 3h] of the log data.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("need at least 2 samples")
    if not np.all(np.isfinite(x)) or np.any(x <= 0.0):
        raise ValueError("samples must be positive finite reals")
    logx = np.log(x)
    sd = float(np.std(logx, ddof=1))
    iqr = float(np.quantile(logx, 0.75) - np.quantile(logx, 0.25))
    h = 0.9 * min(sd, iqr / 1.34) * x.size ** (-0.2)
    if not h > 0.0:
        raise ValueError("zero bandwidth: samples have no spread")
    grid = np.linspace(logx.min() - 3.0 * h, logx.max() + 3.0 * h, 512)
    z = (grid[:, None] - logx[None, :]) / h
    density = np.exp(-0.5 * z * z).sum(axis=1) / (x.size * h * math.sqrt(2.0 * math.pi))
    return grid, density


def ks_normal_distance(sorted_sample: np.ndarray) -> float:
    """Kolmogorov-Smirnov distance of a sorted sample to the standard normal."""
    x = np.asarray(sorted_sample, dtype=float)
    m = x.size
    if m < 1:
        raise ValueError("need at least 1 sample")
    d = 0.0
    for i in range(m):
        f = std_normal_cdf(float(x[i]))
        d = max(d, (i + 1) / m - f, f - i / m)
    return d


# --- emission ----------------------------------------------------------------

def _format_cell(val) -> str:
    if isinstance(val, (np.integer, int)):
        return str(int(val))
    return repr(float(val))


def write_csv(path: Path, columns: dict[str, np.ndarray]) -> None:
    """UTF-8 CSV with a header row; floats via repr for lossless round-trips."""
    names = list(columns)
    arrays = [columns[c] for c in names]
    lines = [",".join(names)]
    for row in zip(*arrays):
        lines.append(",".join(_format_cell(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_report(report: ExperimentReport, out_dir) -> list[Path]:
    """Write each table as CSV plus a JSON metadata file; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in sorted(report.tables):
        p = out / f"{name}.csv"
        write_csv(p, report.tables[name])
        paths.append(p)
    meta = dict(report.metadata)
    meta["files"] = [p.name for p in paths]
    mp = out / f"{report.kind}_meta.json"
    mp.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    paths.append(mp)
    return paths
