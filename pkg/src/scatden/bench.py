"""Metrics, noise sweeps, slope fits and the decay experiment."""
import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import stats

from .datagen import GeoImageParams, sample_geometric_image
from .denoisers import (
    NoiseModel,
    SolverParams,
    add_noise,
    ortho_threshold_denoise,
    translation_invariant_denoise,
    variational_denoise,
)
from .energies import EnergyParams
from .transforms import decay_profile, is_degenerate
from .wavelet_bank import build_bank, default_scale_range

SCHEMA_VERSION = 1
DEFAULT_SIGMA2_GRID = (1.05, 0.67, 0.43, 0.27, 0.18, 0.11, 0.07, 0.05)
ESTIMATORS = ("dyadic", "scattering", "ortho", "ti")
WORKERS_ENV = "SCATDEN_WORKERS"
SWEEP_COLUMNS = ("schema_version", "alpha", "sigma2", "sigma", "realizations", "mse_mean",
                 "mse_std", "psnr_mean", "failures", "flagged", "j_M", "wallclock")
NOISE_RANGE_NOTE = ("slopes are meaningful only inside the noise range where the "
                    "discretized contours are still regular at the error scale")


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def mse(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


def psnr(a, b, peak_range=2.0):
    """``10 log10(peak_range^2 / mse)``; ``inf`` for identical images."""
    if not peak_range > 0:
        raise ValueError("peak_range must be positive")
    err = mse(a, b)
    if err == 0:
        return math.inf
    return 10.0 * math.log10(peak_range ** 2 / err)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    residual_rms: float
    ci_half_width: float
    n_points: int

    def contains(self, value):
        return abs(value - self.slope) <= self.ci_half_width + 1e-12 * max(1.0, abs(value))

    def to_dict(self):
        return asdict(self)


def fit_slope(x, y=None):
    """OLS fit of ``y`` on ``x`` with a 95% t-interval on the slope.

    Called with one argument, ``x`` is a list of sweep rows and the fit is
    ``log(mse_mean)`` against ``log(sigma)``.
    """
    if y is None:
        rows = list(x)
        x = [math.log(float(r["sigma"])) for r in rows]
        y = [math.log(float(r["mse_mean"])) for r in rows]
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.size
    if n < 3 or y.size != n:
        raise ValueError("need at least 3 points")
    sxx = float(np.sum((x - x.mean()) ** 2))
    if sxx <= 1e-300:
        raise ValueError("abscissae are degenerate")
    slope = float(np.sum((x - x.mean()) * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    rss = float(np.dot(resid, resid))
    se = math.sqrt(rss / (n - 2) / sxx)
    half = float(stats.t.ppf(0.975, n - 2) * se)
    return SlopeFit(slope, intercept, math.sqrt(rss / n), half, n)


def minimax_exponent(alpha):
    return 2 * alpha / (alpha + 1)


# ---------------------------------------------------------------------------
# estimators and per-noise scale selection
# ---------------------------------------------------------------------------

def _energy_for(estimator, j_M, overrides):
    over = dict(overrides or {})
    if estimator == "dyadic":
        return EnergyParams.from_dict({"mode": "wavelet", "j_M": j_M, **over})
    return EnergyParams.from_dict({"j_M": j_M, **over})


def denoise(estimator, g, sigma, bank=None, j_M=None, energy_overrides=None, solver=None):
    """Run one estimator; returns ``(image, ok)``."""
    if estimator == "ortho":
        return ortho_threshold_denoise(g, sigma), True
    if estimator == "ti":
        return translation_invariant_denoise(g, sigma), True
    if estimator not in ("dyadic", "scattering"):
        raise ValueError(f"unknown estimator {estimator!r}")
    bank = build_bank(g.shape[0]) if bank is None else bank
    res = variational_denoise(g, sigma, bank, _energy_for(estimator, j_M, energy_overrides),
                              solver)
    return res.image, res.converged or not res.warnings


def select_coarsest_scale(estimator, sigma, N, alpha, candidates=None, n_images=5, seed=10_000,
                          energy_overrides=None, bank=None):
    """Pick ``j_M`` minimizing the mean MSE on a small validation batch."""
    bank = build_bank(N) if bank is None else bank
    if candidates is None:
        candidates = list(range(bank.j_min + 1, bank.j_max + 1))
    batch = []
    for i in range(n_images):
        f = sample_geometric_image(GeoImageParams(N=N, alpha=alpha, seed=seed + i)).values
        batch.append((f, add_noise(f, NoiseModel(sigma, seed + 7919 * (i + 1)))))
    scores = {}
    for jm in candidates:
        scores[jm] = float(np.mean([mse(denoise(estimator, g, sigma, bank, jm,
                                                energy_overrides)[0], f) for f, g in batch]))
    return min(scores, key=scores.get), scores


# ---------------------------------------------------------------------------
# noise sweep
# ---------------------------------------------------------------------------

@dataclass
class SweepConfig:
    alphas: tuple = (2.0,)
    estimator: str = "dyadic"
    sigma2: tuple = DEFAULT_SIGMA2_GRID
    realizations: int = 20
    N: int = 64
    seed: int = 0
    energy: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    j_M: dict = field(default_factory=dict)  # str(sigma2) -> j_M cache
    j_M_candidates: tuple = None
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        self.alphas = tuple(float(a) for a in self.alphas)
        self.sigma2 = tuple(float(s) for s in self.sigma2)
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}")
        if not self.sigma2 or min(self.sigma2) <= 0:
            raise ValueError("sigma^2 grid must be positive")
        if self.realizations < 2:
            raise ValueError("realizations must be at least 2")
        if self.N < 8 or self.N & (self.N - 1):
            raise ValueError("N must be a power of two >= 8")
        for a in self.alphas:
            if not 1 <= a <= 2:
                raise ValueError("alpha must lie in [1, 2]")

    def to_dict(self):
        d = asdict(self)
        d["alphas"] = list(self.alphas)
        d["sigma2"] = list(self.sigma2)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown sweep keys: {sorted(unknown)}")
        if d.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise ValueError("unsupported schema_version")
        return cls(**d)

    def identity(self):
        # fields that define the experiment (the j_M cache is derived data)
        d = self.to_dict()
        d.pop("j_M")
        return d


def _sample_seed(seed, ia, isig, r):
    return int(np.random.SeedSequence([seed, ia, isig, r]).generate_state(1)[0])


def _one_realization(task):
    estimator, N, alpha, sigma, s, j_M, energy, solver = task
    f = sample_geometric_image(GeoImageParams(N=N, alpha=alpha, seed=s)).values
    g = add_noise(f, NoiseModel(sigma, seed=s + 1))
    try:
        h, ok = denoise(estimator, g, sigma, j_M=j_M, energy_overrides=energy,
                        solver=SolverParams(**solver) if solver else None)
    except Exception:  # noqa: BLE001 -- recorded as a failed solve
        return None, False
    return mse(h, f), ok


def worker_count():
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


def _read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def run_noise_sweep(config, out_csv, workers=None, log=None):
    """Run (or resume) a sweep; rows are appended and flushed one point at a time.

    A JSON sidecar next to the CSV stores the config and the per-noise ``j_M``
    choices.  Resuming with a different config raises ``ValueError``.
    Returns the list of rows for the whole grid.
    """
    out_csv = Path(out_csv)
    meta_path = out_csv.with_suffix(".json")
    workers = worker_count() if workers is None else workers
    done = {}
    if out_csv.exists() and meta_path.exists():
        meta = json.loads(meta_path.read_text())
        if SweepConfig.from_dict(meta["config"]).identity() != config.identity():
            raise ValueError(f"{out_csv} was produced by a different config")
        config = replace(config, j_M={**meta["config"].get("j_M", {}), **config.j_M})
        for row in _read_rows(out_csv):
            done[(float(row["alpha"]), float(row["sigma2"]))] = row
    else:
        out_csv.parent.mkdir(parents=True, exist_ok=True)
        with open(out_csv, "w", newline="") as fh:
            csv.writer(fh).writerow(SWEEP_COLUMNS)

    def save_meta():
        meta_path.write_text(json.dumps({"schema_version": SCHEMA_VERSION,
                                         "config": config.to_dict(),
                                         "note": NOISE_RANGE_NOTE}, indent=1))

    save_meta()
    rows = []
    variational = config.estimator in ("dyadic", "scattering")
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        for ia, alpha in enumerate(config.alphas):
            for isig, s2 in enumerate(config.sigma2):
                if (alpha, s2) in done:
                    rows.append(done[(alpha, s2)])
                    continue
                sigma = math.sqrt(s2)
                t0 = time.time()
                j_M = None
                if variational:
                    key = f"{alpha}:{s2}"
                    if key not in config.j_M:
                        config.j_M[key], _ = select_coarsest_scale(
                            config.estimator, sigma, config.N, alpha,
                            config.j_M_candidates, seed=config.seed + 10_000,
                            energy_overrides=config.energy)
                        save_meta()
                    j_M = config.j_M[key]
                tasks = [(config.estimator, config.N, alpha, sigma,
                          _sample_seed(config.seed, ia, isig, r), j_M, config.energy,
                          config.solver) for r in range(config.realizations)]
                results = list(pool.map(_one_realization, tasks) if pool else
                               map(_one_realization, tasks))
                errs = np.array([e for e, _ in results if e is not None])
                failures = sum(1 for e, ok in results if e is None or not ok)
                mean = float(errs.mean()) if errs.size else math.nan
                row = {"schema_version": SCHEMA_VERSION, "alpha": alpha, "sigma2": s2,
                       "sigma": sigma, "realizations": config.realizations,
                       "mse_mean": mean,
                       "mse_std": float(errs.std(ddof=1)) if errs.size > 1 else math.nan,
                       "psnr_mean": float(np.mean([10 * math.log10(4.0 / e) for e in errs]))
                       if errs.size else math.nan,
                       "failures": failures, "flagged": int(failures > 0),
                       "j_M": "" if j_M is None else j_M,
                       "wallclock": round(time.time() - t0, 3)}
                with open(out_csv, "a", newline="") as fh:
                    csv.writer(fh).writerow([row[c] for c in SWEEP_COLUMNS])
                    fh.flush()
                if log:
                    log(row)
                rows.append(row)
    finally:
        if pool:
            pool.shutdown()
    return rows


def load_sweep(path):
    return _read_rows(path)


def fit_sweep(rows):
    """Slope fit per alpha from sweep rows (CSV dicts or row dicts)."""
    by_alpha = {}
    for r in rows:
        if int(float(r.get("failures", 0) or 0)) >= int(float(r["realizations"])):
            continue
        by_alpha.setdefault(float(r["alpha"]), []).append(r)
    return {a: fit_slope(rs) for a, rs in by_alpha.items()}


# ---------------------------------------------------------------------------
# decay experiment
# ---------------------------------------------------------------------------

@dataclass
class DecayResult:
    scales: list
    mean_log2: list
    fit: SlopeFit
    fit_scales: list
    degenerate: bool


def run_decay_experiment(alpha, N=256, seeds=20, seed0=0, drop_finest=2, gap_range=None,
                         out_csv=None):
    """Mean log2 of the diagonal second-order norm per scale, and its mid-scale slope.

    Uses the default bank range and constant regions; the ``drop_finest``
    finest scales are left out of the fit.
    """
    if N < 256:
        raise ValueError("the decay experiment needs N >= 256")
    bank = build_bank(N, *default_scale_range(N))
    profiles = []
    degenerate = False
    for s in range(seeds):
        kw = dict(N=N, alpha=alpha, seed=seed0 + s, constant_regions=True)
        if gap_range is not None:
            kw["gap_range"] = gap_range
        img = sample_geometric_image(GeoImageParams(**kw)).values
        prof = decay_profile(img, bank)
        if is_degenerate(prof, rtol=1e-10):
            degenerate = True
            continue
        profiles.append([math.log2(v) for _, v in prof])
    scales = list(bank.scales)
    fit_scales = scales[drop_finest:]
    if not profiles:
        res = DecayResult(scales, [math.nan] * len(scales), None, fit_scales, True)
    else:
        mean = np.mean(profiles, axis=0)
        fit = fit_slope(fit_scales, mean[drop_finest:])
        res = DecayResult(scales, [float(v) for v in mean], fit, fit_scales, degenerate)
    if out_csv is not None:
        out_csv = Path(out_csv)
        out_csv.parent.mkdir(parents=True, exist_ok=True)
        with open(out_csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["j", "mean_log2_norm", "in_fit"])
            for j, v in zip(res.scales, res.mean_log2):
                w.writerow([j, v, int(j in fit_scales)])
    return res
