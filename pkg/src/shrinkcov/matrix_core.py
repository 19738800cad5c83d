"""Dense symmetric-matrix primitives.

Matrices are plain ``float64`` numpy arrays. :func:`sym_matrix` and
:func:`data_matrix` validate and freeze them (the returned arrays are
read-only), everything else is a pure function of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import ArgError, DimError, NumericalError

__all__ = [
    "Tolerances",
    "TOLERANCES",
    "SymMatrix",
    "DataMatrix",
    "sym_matrix",
    "data_matrix",
    "frobenius_norm_sq",
    "trace_norm_sq",
    "trace_product",
    "sym_eigenvalues",
    "spectral_norm",
    "is_spd",
]

SymMatrix = NDArray[np.float64]
DataMatrix = NDArray[np.float64]


@dataclass(frozen=True, slots=True)
class Tolerances:
    """Numerical thresholds used across the package.

    ``symmetry``: max |m - m.T| allowed before symmetrization, relative to max |entry|.
    ``degeneracy``: shrinkage denominator threshold, relative to ||S||_F^2 ||target||_F^2.
    ``spd``: smallest eigenvalue of an SPD target, relative to its spectral norm.
    ``lw_dispersion``: LW d^2 threshold, relative to (tr S / p)^2.
    """

    symmetry: float = 1e-8
    degeneracy: float = 1e-12
    spd: float = 1e-10
    lw_dispersion: float = 1e-12


TOLERANCES = Tolerances()


def _freeze(a: NDArray[np.float64]) -> NDArray[np.float64]:
    a.setflags(write=False)
    return a


def sym_matrix(values: ArrayLike, *, tol: Tolerances = TOLERANCES) -> SymMatrix:
    """Validate a square finite matrix and return its exactly symmetric copy."""
    m = np.array(values, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise DimError(f"expected a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ArgError("matrix contains non-finite entries")
    scale = float(np.max(np.abs(m)))
    asym = float(np.max(np.abs(m - m.T)))
    if asym > tol.symmetry * scale:
        raise ArgError(f"matrix is not symmetric (max asymmetry {asym:.3g})")
    return _freeze(0.5 * (m + m.T))


def data_matrix(values: ArrayLike) -> DataMatrix:
    """Validate a p x n observation matrix (rows are variables)."""
    y = np.array(values, dtype=np.float64)
    if y.ndim == 1:
        y = y[np.newaxis, :]
    if y.ndim != 2 or y.shape[0] < 1 or y.shape[1] < 1:
        raise DimError(f"expected a p x n matrix with p, n >= 1, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise ArgError("data matrix contains non-finite values")
    return _freeze(y)


def frobenius_norm_sq(m: SymMatrix) -> float:
    """tr(m^2), i.e. the sum of squared entries."""
    m = np.asarray(m, dtype=np.float64)
    return float(np.einsum("ij,ij->", m, m))


def trace_norm_sq(m: SymMatrix) -> float:
    """Squared trace, (tr m)^2."""
    return float(np.trace(m)) ** 2


def trace_product(a: SymMatrix, b: SymMatrix) -> float:
    """tr(a b) for symmetric a, b, computed as the entrywise inner product."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.einsum("ij,ij->", a, b))


def sym_eigenvalues(m: SymMatrix) -> NDArray[np.float64]:
    """All eigenvalues of a symmetric matrix in ascending order.

    Backed by LAPACK's symmetric driver (Householder tridiagonalization
    followed by an implicit QL/QR iteration).
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimError(f"expected a square matrix, got shape {m.shape}")
    try:
        values = np.linalg.eigvalsh(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration did not converge: {exc}") from exc
    return _freeze(values)


def spectral_norm(m: SymMatrix) -> float:
    """Largest absolute eigenvalue."""
    ev = sym_eigenvalues(m)
    return float(max(abs(ev[0]), abs(ev[-1])))


def is_spd(m: SymMatrix, *, tol: Tolerances = TOLERANCES) -> bool:
    ev = sym_eigenvalues(m)
    top = max(abs(ev[0]), abs(ev[-1]))
    return bool(top > 0.0 and ev[0] > tol.spd * top)
