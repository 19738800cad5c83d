"""Monte Carlo PRIAL experiments on Gaussian data.

For each dimension ``p`` of the grid the population covariance is the
diagonal matrix built from a discrete spectrum, ``n = round(p / c)`` and
every repetition draws one Gaussian sample shared by all estimators (common
random numbers). Each ``(seed, p, repetition)`` triple owns an independent
``SeedSequence`` stream, so serial and threaded runs give bit-identical
reports.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from .asymptotics import SpectrumSpec
from .errors import ArgError, ConfigError, DegenerateTarget
from .estimators import (
    bona_fide_weights,
    identity_target,
    lw_estimator,
    oracle_weights,
    sample_covariance,
)
from .matrix_core import SymMatrix, data_matrix, frobenius_norm_sq, is_spd, sym_matrix

__all__ = [
    "ESTIMATORS",
    "ExperimentConfig",
    "ReportRow",
    "ExperimentReport",
    "block_sizes",
    "covariance_from_spectrum",
    "stream",
    "gaussian_sample",
    "prial",
    "prial_stderr",
    "sample_size",
    "run_experiment",
]

ESTIMATORS = ("sample", "oracle_olse", "bona_fide_olse", "lw")
_TARGETED = ("oracle_olse", "bona_fide_olse")


def block_sizes(h: SpectrumSpec, p: int) -> list[int]:
    """Split ``p`` eigenvalues among the atoms of ``h`` by largest remainder."""
    if p < 1:
        raise ConfigError(f"dimension must be positive, got {p}")
    quotas = [p * m for m in h.masses]
    sizes = [math.floor(q) for q in quotas]
    short = p - sum(sizes)
    order = sorted(range(len(quotas)), key=lambda i: (-round(quotas[i] - sizes[i], 9), i))
    for i in order[:short]:
        sizes[i] += 1
    if min(sizes) == 0:
        raise ConfigError(
            f"p={p} is too small to give every one of the {len(sizes)} spectrum atoms a block"
        )
    return sizes


def covariance_from_spectrum(h: SpectrumSpec, p: int) -> SymMatrix:
    """Diagonal p x p matrix whose eigenvalue blocks follow ``h`` in atom order."""
    diag = np.repeat(np.asarray(h.taus, dtype=np.float64), block_sizes(h, p))
    return sym_matrix(np.diag(diag))


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(seed, *key)``."""
    if seed < 0 or seed >= 2**64:
        raise ArgError("seed must be an unsigned 64-bit integer")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def _sqrt_factor(sigma: SymMatrix) -> NDArray[np.float64]:
    """Symmetric square root; a 1-D vector when ``sigma`` is diagonal."""
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1] or sigma.shape[0] == 0:
        raise ArgError(f"covariance must be a non-empty square matrix, got shape {sigma.shape}")
    if not is_spd(sigma):
        raise ArgError("covariance must be positive definite")
    d = np.diag(sigma)
    if np.count_nonzero(sigma - np.diag(d)) == 0:
        return np.sqrt(d)
    vals, vecs = np.linalg.eigh(sigma)
    return (vecs * np.sqrt(vals)) @ vecs.T


def _draw(root: NDArray[np.float64], n: int, rng: np.random.Generator) -> NDArray[np.float64]:
    x = rng.standard_normal((root.shape[0], n))
    if root.ndim == 1:
        return root[:, np.newaxis] * x
    return root @ x


def gaussian_sample(
    sigma: SymMatrix, n: int, seed: int | np.random.Generator
) -> NDArray[np.float64]:
    """Draw ``Y = Sigma^{1/2} X`` with ``X`` a p x n standard normal matrix."""
    if n < 1:
        raise ArgError("sample size must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else stream(seed)
    return data_matrix(_draw(_sqrt_factor(sigma), n, rng))


def prial(losses_est: Sequence[float], losses_sample: Sequence[float]) -> float:
    """Percentage relative improvement in average loss over the sample covariance."""
    est = np.asarray(losses_est, dtype=np.float64)
    ref = np.asarray(losses_sample, dtype=np.float64)
    if est.shape != ref.shape or est.ndim != 1 or est.size == 0:
        raise ArgError("loss lists must be non-empty and of equal length")
    mean_ref = float(np.mean(ref))
    if not mean_ref > 0.0:
        raise ArgError("mean sample loss must be positive")
    return (1.0 - float(np.mean(est)) / mean_ref) * 100.0


def prial_stderr(losses_est: Sequence[float], losses_sample: Sequence[float]) -> float:
    """Delta-method standard error of :func:`prial` for paired losses."""
    est = np.asarray(losses_est, dtype=np.float64)
    ref = np.asarray(losses_sample, dtype=np.float64)
    k = est.size
    if k < 2:
        return math.nan
    ratio = float(np.mean(est)) / float(np.mean(ref))
    resid = est - ratio * ref
    return 100.0 * float(np.std(resid, ddof=1)) / (math.sqrt(k) * float(np.mean(ref)))


def sample_size(p: int, c: float) -> int:
    """``n = round(p / c)``, ties to even."""
    n = round(p / c)
    if n < 1:
        raise ConfigError(f"p={p}, c={c} gives an empty sample")
    return n


@dataclass(frozen=True)
class ExperimentConfig:
    """One PRIAL sweep.

    ``target=None`` means the identity target ``I / p``. With an informative
    target and ``compare_identity=True`` the oracle and bona fide OLSE are
    also evaluated against ``I / p`` on the same draws, reported under the
    ``_identity`` suffix.
    """

    spectrum: SpectrumSpec
    c: float
    p_grid: tuple[int, ...]
    repetitions: int
    seed: int = 0
    target: SpectrumSpec | None = None
    estimators: tuple[str, ...] = ESTIMATORS
    center: bool = False
    compare_identity: bool = False
    threads: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "p_grid", tuple(int(p) for p in self.p_grid))
        object.__setattr__(self, "estimators", tuple(self.estimators))
        if not self.p_grid:
            raise ConfigError("p_grid is empty")
        if not (math.isfinite(self.c) and self.c > 0):
            raise ConfigError("c must be a positive number")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be at least 1")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        unknown = set(self.estimators) - set(ESTIMATORS)
        if unknown or not self.estimators:
            raise ConfigError(f"unknown or empty estimator selection: {sorted(unknown)}")
        if len(set(self.estimators)) != len(self.estimators):
            raise ConfigError("duplicate estimators")
        for p in self.p_grid:
            block_sizes(self.spectrum, p)
            if self.target is not None:
                block_sizes(self.target, p)
            sample_size(p, self.c)

    @property
    def labels(self) -> tuple[str, ...]:
        """Report labels in output order; ``sample`` always comes first."""
        out = ["sample"] + [e for e in self.estimators if e != "sample"]
        if self.compare_identity and self.target is not None:
            out += [f"{e}_identity" for e in self.estimators if e in _TARGETED]
        return tuple(out)


@dataclass(frozen=True, slots=True)
class ReportRow:
    p: int
    n: int
    estimator: str
    mean_loss: float
    prial: float
    stderr: float
    skipped: int


CSV_COLUMNS = ("p", "estimator", "mean_loss", "prial", "stderr", "skipped")


def _fmt(x: float) -> str:
    return format(x, ".17g")


@dataclass(frozen=True)
class ExperimentReport:
    config: ExperimentConfig
    rows: tuple[ReportRow, ...]
    losses: dict[tuple[int, str], NDArray[np.float64]] = field(repr=False, compare=False)

    def row(self, p: int, estimator: str) -> ReportRow:
        for r in self.rows:
            if r.p == p and r.estimator == estimator:
                return r
        raise KeyError((p, estimator))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([r.p, r.estimator, _fmt(r.mean_loss), _fmt(r.prial), _fmt(r.stderr), r.skipped])
        return buf.getvalue()

    def to_json(self) -> str:
        rows = [
            {k: (v if not isinstance(v, float) or math.isfinite(v) else None) for k, v in asdict(r).items()}
            for r in self.rows
        ]
        return json.dumps({"columns": list(asdict(self.rows[0])), "rows": rows}, indent=2) + "\n"


def _repetition(
    p: int,
    n: int,
    rep: int,
    cfg: ExperimentConfig,
    sigma: SymMatrix,
    root: NDArray[np.float64],
    targets: dict[str, SymMatrix],
) -> dict[str, float]:
    """Squared Frobenius losses of every label for one draw; NaN marks a skip."""
    y = _draw(root, n, stream(cfg.seed, p, rep))
    s = sample_covariance(y, cfg.center)
    sig = np.asarray(sigma)
    out = {"sample": frobenius_norm_sq(s - sig)}
    for label in cfg.labels[1:]:
        base = label.removesuffix("_identity")
        try:
            if base == "lw":
                est = np.asarray(lw_estimator(y, cfg.center).matrix)
            else:
                target = targets["identity" if label.endswith("_identity") else "primary"]
                if base == "oracle_olse":
                    w = oracle_weights(s, sigma, target, check_target=False)
                else:
                    w = bona_fide_weights(s, target, n, check_target=False)
                est = w.alpha * np.asarray(s) + w.beta * np.asarray(target)
            out[label] = frobenius_norm_sq(est - sig)
        except DegenerateTarget:
            out[label] = math.nan
    return out


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Run the sweep and aggregate PRIALs with delta-method standard errors."""
    rows: list[ReportRow] = []
    losses: dict[tuple[int, str], NDArray[np.float64]] = {}
    pool = ThreadPoolExecutor(max_workers=cfg.threads) if cfg.threads > 1 else None
    try:
        for p in cfg.p_grid:
            n = sample_size(p, cfg.c)
            sigma = covariance_from_spectrum(cfg.spectrum, p)
            root = _sqrt_factor(sigma)
            identity = identity_target(p)
            primary = identity if cfg.target is None else covariance_from_spectrum(cfg.target, p)
            targets = {"primary": primary, "identity": identity}

            def task(rep: int, p=p, n=n, sigma=sigma, root=root) -> dict[str, float]:
                return _repetition(p, n, rep, cfg, sigma, root, targets)

            reps = range(cfg.repetitions)
            results = list(pool.map(task, reps)) if pool else [task(r) for r in reps]
            for label in cfg.labels:
                vals = np.array([res[label] for res in results], dtype=np.float64)
                losses[(p, label)] = vals
            ref = losses[(p, "sample")]
            for label in cfg.labels:
                vals = losses[(p, label)]
                kept = ~np.isnan(vals)
                skipped = int(np.count_nonzero(~kept))
                if skipped == vals.size:
                    rows.append(ReportRow(p, n, label, math.nan, math.nan, math.nan, skipped))
                    continue
                rows.append(
                    ReportRow(
                        p=p,
                        n=n,
                        estimator=label,
                        mean_loss=float(np.mean(vals[kept])),
                        prial=prial(vals[kept], ref[kept]),
                        stderr=prial_stderr(vals[kept], ref[kept]),
                        skipped=skipped,
                    )
                )
    finally:
        if pool:
            pool.shutdown()
    return ExperimentReport(config=cfg, rows=tuple(rows), losses=losses)
