"""Linear shrinkage estimators of a covariance matrix.

Every estimator here has the form ``alpha * S + beta * target`` where ``S`` is
the sample covariance. The optimal (``oracle``) weights need the true
covariance and are only computable in simulation; the ``bona_fide`` weights
replace the unknown quantities with consistent sample estimates and are left
unconstrained, so small samples may produce negative ``alpha``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import ArgError, DegenerateTarget, DimError, InsufficientData
from .matrix_core import (
    TOLERANCES,
    SymMatrix,
    Tolerances,
    data_matrix,
    frobenius_norm_sq,
    is_spd,
    sym_matrix,
    trace_norm_sq,
    trace_product,
)

__all__ = [
    "WeightKind",
    "ShrinkageWeights",
    "EstimateResult",
    "identity_target",
    "sample_covariance",
    "glse_loss",
    "hessian_determinant",
    "oracle_weights",
    "asymptotic_oracle_weights",
    "bona_fide_weights",
    "olse",
    "frobenius_estimator",
    "lw_estimator",
]


class WeightKind(str, enum.Enum):
    ORACLE = "oracle"
    ASYMPTOTIC = "asymptotic"
    BONA_FIDE = "bona_fide"
    LW = "lw"


@dataclass(frozen=True, slots=True)
class ShrinkageWeights:
    """Pair of shrinkage intensities: ``alpha`` on S, ``beta`` on the target."""

    alpha: float
    beta: float
    kind: WeightKind

    def __post_init__(self) -> None:
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise ArgError(f"non-finite shrinkage weights ({self.alpha}, {self.beta})")
        if self.kind is WeightKind.LW and not 0.0 <= self.alpha <= 1.0:
            raise ArgError(f"LW intensity must lie in [0, 1], got {self.alpha}")

    @property
    def in_unit_interval(self) -> bool:
        return 0.0 <= self.alpha <= 1.0


@dataclass(frozen=True)
class EstimateResult:
    matrix: SymMatrix
    weights: ShrinkageWeights
    target: SymMatrix = field(repr=False)
    n: int
    sample: SymMatrix = field(repr=False)

    @property
    def negative_weights(self) -> bool:
        """True when the unconstrained weights left the nonnegative orthant."""
        return self.weights.alpha < 0.0 or self.weights.beta < 0.0


def identity_target(p: int) -> SymMatrix:
    """The default target I / p."""
    if p < 1:
        raise ArgError("dimension must be positive")
    return sym_matrix(np.eye(p) / p)


def sample_covariance(y: ArrayLike, center: bool = False) -> SymMatrix:
    """Sample covariance of a p x n data matrix with divisor n.

    Uncentered: ``Y Y' / n``. Centered: the columns are demeaned first; the
    divisor stays ``n``.
    """
    y = data_matrix(y)
    n = y.shape[1]
    if center:
        if n < 2:
            raise InsufficientData("centered covariance needs at least 2 samples")
        y = y - y.mean(axis=1, keepdims=True)
    s = (y @ y.T) / n
    return sym_matrix(s)


def _check_same_dim(*mats: NDArray[np.float64]) -> None:
    shapes = {np.shape(m) for m in mats}
    if len(shapes) != 1:
        raise DimError(f"dimension mismatch: {sorted(shapes)}")


def glse_loss(
    alpha: float,
    beta: float,
    s: SymMatrix,
    target: SymMatrix,
    sigma: SymMatrix,
) -> float:
    """Squared Frobenius loss ``||alpha S + beta target - sigma||_F^2``.

    Evaluated from the trace expansion, so only the five scalar functionals
    of (S, target, sigma) are needed.
    """
    _check_same_dim(s, target, sigma)
    loss = (
        alpha**2 * frobenius_norm_sq(s)
        + 2.0 * alpha * beta * trace_product(s, target)
        + beta**2 * frobenius_norm_sq(target)
        - 2.0 * alpha * trace_product(s, sigma)
        - 2.0 * beta * trace_product(sigma, target)
        + frobenius_norm_sq(sigma)
    )
    # rounding can push an exact zero slightly negative
    return max(loss, 0.0)


def hessian_determinant(s: SymMatrix, target: SymMatrix) -> float:
    """||S||_F^2 ||target||_F^2 - tr(S target)^2, zero iff S is proportional to target."""
    _check_same_dim(s, target)
    return frobenius_norm_sq(s) * frobenius_norm_sq(target) - trace_product(s, target) ** 2


def _checked_denominator(
    det: float, f_a: float, f_b: float, tol: Tolerances
) -> float:
    if not det > tol.degeneracy * f_a * f_b:
        raise DegenerateTarget(
            "sample matrix is (numerically) proportional to the target; "
            f"Hessian determinant {det:.3g} is not positive"
        )
    return det


def _check_target(target: SymMatrix, tol: Tolerances) -> None:
    if not is_spd(target, tol=tol):
        raise ArgError("target must be symmetric positive definite")


def oracle_weights(
    s: SymMatrix,
    sigma: SymMatrix,
    target: SymMatrix,
    *,
    tol: Tolerances = TOLERANCES,
    check_target: bool = True,
) -> ShrinkageWeights:
    """Loss-minimizing weights given the true covariance ``sigma``.

    ``check_target=False`` skips the eigenvalue-based SPD check, for loops
    that reuse one validated target.
    """
    _check_same_dim(s, sigma, target)
    if check_target:
        _check_target(target, tol)
    f_s = frobenius_norm_sq(s)
    f_t = frobenius_norm_sq(target)
    s_t = trace_product(s, target)
    s_sig = trace_product(s, sigma)
    sig_t = trace_product(sigma, target)
    det = _checked_denominator(f_s * f_t - s_t**2, f_s, f_t, tol)
    alpha = (s_sig * f_t - sig_t * s_t) / det
    beta = (sig_t * f_s - s_sig * s_t) / det
    return ShrinkageWeights(alpha, beta, WeightKind.ORACLE)


def asymptotic_oracle_weights(
    sigma: SymMatrix,
    target: SymMatrix,
    c: float,
    *,
    tol: Tolerances = TOLERANCES,
) -> ShrinkageWeights:
    """Deterministic limits of the oracle weights when p / n -> c."""
    if c < 0:
        raise ArgError("concentration c must be nonnegative")
    _check_same_dim(sigma, target)
    _check_target(target, tol)
    p = np.shape(sigma)[0]
    f_t = frobenius_norm_sq(target)
    shift = c / p * trace_norm_sq(sigma)
    f_s = frobenius_norm_sq(sigma) + shift
    sig_t = trace_product(sigma, target)
    det = _checked_denominator(f_s * f_t - sig_t**2, f_s, f_t, tol)
    alpha = 1.0 - shift * f_t / det
    beta = sig_t / f_t * (1.0 - alpha)
    return ShrinkageWeights(alpha, beta, WeightKind.ASYMPTOTIC)


def bona_fide_weights(
    s: SymMatrix,
    target: SymMatrix,
    n: int,
    *,
    tol: Tolerances = TOLERANCES,
    check_target: bool = True,
) -> ShrinkageWeights:
    """Data-driven OLSE weights; deliberately not clamped."""
    if n < 1:
        raise ArgError("sample size n must be positive")
    _check_same_dim(s, target)
    if check_target:
        _check_target(target, tol)
    f_s = frobenius_norm_sq(s)
    f_t = frobenius_norm_sq(target)
    s_t = trace_product(s, target)
    det = _checked_denominator(f_s * f_t - s_t**2, f_s, f_t, tol)
    alpha = 1.0 - trace_norm_sq(s) / n * f_t / det
    beta = s_t / f_t * (1.0 - alpha)
    return ShrinkageWeights(alpha, beta, WeightKind.BONA_FIDE)


def olse(
    s: SymMatrix,
    target: SymMatrix,
    n: int,
    *,
    tol: Tolerances = TOLERANCES,
    check_target: bool = True,
) -> EstimateResult:
    """Optimal linear shrinkage estimate ``alpha S + beta target``."""
    w = bona_fide_weights(s, target, n, tol=tol, check_target=check_target)
    matrix = sym_matrix(w.alpha * np.asarray(s) + w.beta * np.asarray(target))
    return EstimateResult(matrix=matrix, weights=w, target=target, n=n, sample=s)


def frobenius_estimator(s: SymMatrix, n: int) -> float:
    """Consistent estimate of ||Sigma||_F^2 / p from the sample covariance."""
    if n < 1:
        raise ArgError("sample size n must be positive")
    p = np.shape(s)[0]
    return frobenius_norm_sq(s) / p - trace_norm_sq(s) / (n * p)


def lw_dispersions(y: ArrayLike, s: SymMatrix, center: bool = False) -> tuple[float, float]:
    """Return ``(b2, d2)``: sampling dispersion of the rank-one terms and dispersion of S.

    ``sum_i ||y_i y_i' - S||_F^2`` is evaluated as
    ``sum_i ||y_i||^4 - n ||S||_F^2``, which holds whenever ``S = Y Y' / n``
    for the (possibly centered) columns ``y_i``.
    """
    y = data_matrix(y)
    p, n = y.shape
    if center:
        y = y - y.mean(axis=1, keepdims=True)
    f_s = frobenius_norm_sq(s)
    d2 = f_s / p - (float(np.trace(s)) / p) ** 2
    col_sq = np.einsum("ij,ij->j", y, y)
    total = float(np.sum(col_sq**2)) - n * f_s
    b2 = max(total, 0.0) / (p * n**2)
    return b2, d2


def lw_estimator(
    y: ArrayLike,
    center: bool = False,
    *,
    tol: Tolerances = TOLERANCES,
) -> EstimateResult:
    """Ledoit-Wolf shrinkage toward ``(tr S / p) I`` with intensity clamped to [0, 1].

    The reported ``target`` is ``I`` and ``beta = (1 - alpha) tr(S) / p`` so
    that ``matrix == alpha S + beta target`` holds like for the other
    estimators.
    """
    y = data_matrix(y)
    p, n = y.shape
    s = sample_covariance(y, center)
    b2, d2 = lw_dispersions(y, s, center)
    mean_eig = float(np.trace(s)) / p
    if not d2 > tol.lw_dispersion * mean_eig**2:
        raise DegenerateTarget("sample covariance is a multiple of the identity (d^2 = 0)")
    alpha = 1.0 - min(b2, d2) / d2
    beta = (1.0 - alpha) * mean_eig
    eye = sym_matrix(np.eye(p))
    matrix = sym_matrix(alpha * np.asarray(s) + beta * eye)
    w = ShrinkageWeights(alpha, beta, WeightKind.LW)
    return EstimateResult(matrix=matrix, weights=w, target=eye, n=n, sample=s)
