"""Deterministic large-dimensional limits used as oracles.

As p, n -> infinity with p / n -> c, the normalized Frobenius norm
``||S||_F^2 / p`` of the sample covariance converges almost surely to
``m2 + c * m1^2`` where ``m1``, ``m2`` are the first two moments of the
limiting population spectral distribution. Only discrete spectra are
supported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from .errors import ArgError, ConfigError
from .matrix_core import SymMatrix, frobenius_norm_sq, trace_norm_sq, trace_product

__all__ = [
    "SpectrumSpec",
    "spectrum_moment",
    "phi_limit",
    "deterministic_frobenius",
    "deterministic_trace_product",
]

_MASS_TOL = 1e-12


@dataclass(frozen=True, slots=True)
class SpectrumSpec:
    """Discrete spectral distribution: ``atoms`` is a tuple of ``(tau, mass)`` pairs."""

    atoms: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        atoms = tuple((float(t), float(m)) for t, m in self.atoms)
        if not atoms:
            raise ArgError("spectrum needs at least one atom")
        for tau, mass in atoms:
            if not (math.isfinite(tau) and tau > 0.0):
                raise ArgError(f"eigenvalue {tau} must be finite and positive")
            if not (math.isfinite(mass) and mass > 0.0):
                raise ArgError(f"mass {mass} must be positive")
        total = math.fsum(m for _, m in atoms)
        if abs(total - 1.0) > _MASS_TOL:
            raise ArgError(f"masses sum to {total!r}, expected 1")
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def equal(cls, taus: Iterable[float]) -> SpectrumSpec:
        """Equal-mass spectrum over ``taus``."""
        taus = list(taus)
        if not taus:
            raise ArgError("spectrum needs at least one atom")
        return cls(tuple((t, 1.0 / len(taus)) for t in taus))

    @classmethod
    def parse(cls, text: str) -> SpectrumSpec:
        """Parse ``"0.1, 5, 10"`` (equal masses) or ``"1:1/4, 2:3/4"``.

        Entries may be separated by commas or whitespace; masses may be
        written as fractions.
        """
        tokens = text.replace(",", " ").split()
        if not tokens:
            raise ConfigError("empty spectrum")
        if all(":" not in tok for tok in tokens):
            try:
                return cls.equal(float(tok) for tok in tokens)
            except ValueError as exc:
                raise ConfigError(f"cannot parse spectrum {text!r}: {exc}") from exc
        atoms = []
        for tok in tokens:
            tau, sep, mass = tok.partition(":")
            if not sep:
                raise ConfigError(f"spectrum atom {tok!r} lacks a mass")
            try:
                atoms.append((float(tau), float(Fraction(mass))))
            except (ValueError, ZeroDivisionError) as exc:
                raise ConfigError(f"cannot parse spectrum atom {tok!r}") from exc
        try:
            return cls(tuple(atoms))
        except ArgError as exc:
            raise ConfigError(str(exc)) from exc

    def to_text(self) -> str:
        return ", ".join(f"{t!r}:{m!r}" for t, m in self.atoms)

    @property
    def taus(self) -> tuple[float, ...]:
        return tuple(t for t, _ in self.atoms)

    @property
    def masses(self) -> tuple[float, ...]:
        return tuple(m for _, m in self.atoms)


def spectrum_moment(h: SpectrumSpec, k: int) -> float:
    """k-th moment ``sum mass * tau**k`` for k in {1, 2}."""
    if k not in (1, 2):
        raise ArgError(f"only moments 1 and 2 are supported, got {k}")
    return math.fsum(m * t**k for t, m in h.atoms)


def phi_limit(h: SpectrumSpec, c: float) -> float:
    """Almost-sure limit of ``||S_n||_F^2 / p``: ``m2 + c * m1**2``."""
    if c < 0:
        raise ArgError("concentration c must be nonnegative")
    return spectrum_moment(h, 2) + c * spectrum_moment(h, 1) ** 2


def deterministic_frobenius(sigma: SymMatrix, c: float) -> float:
    """Finite-p equivalent ``(||Sigma||_F^2 + (c/p) (tr Sigma)^2) / p``."""
    if c < 0:
        raise ArgError("concentration c must be nonnegative")
    p = np.shape(sigma)[0]
    return (frobenius_norm_sq(sigma) + c / p * trace_norm_sq(sigma)) / p


def deterministic_trace_product(sigma: SymMatrix, theta: SymMatrix) -> float:
    """Equivalent of ``tr(S theta) / p``, which is just ``tr(Sigma theta) / p``."""
    return trace_product(sigma, theta) / np.shape(sigma)[0]
