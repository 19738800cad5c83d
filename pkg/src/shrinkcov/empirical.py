"""Random-portfolio diagnostics on asset-return panels.

A panel CSV looks like::

    date,AAA,BBB,CCC
    2004-01-13,0.0012,-0.0040,0.0101
    ...

Each portfolio draw picks ``p`` assets uniformly without replacement and
uses the most recent ``n`` dates. For every draw the OLSE and the sample
covariance are compared through their squared Frobenius norms and extreme
eigenvalues.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import astuple, dataclass, field, fields
from typing import Iterable, Literal, Sequence

import numpy as np
from numpy.typing import NDArray

from .asymptotics import SpectrumSpec
from .errors import ArgError, ConfigError, ParseError
from .estimators import identity_target, olse, sample_covariance
from .matrix_core import frobenius_norm_sq, sym_eigenvalues
from .simulation import covariance_from_spectrum, stream

__all__ = [
    "ReturnsPanel",
    "PortfolioDraw",
    "DiagnosticsRow",
    "DIAGNOSTICS_COLUMNS",
    "load_returns_csv",
    "write_returns_csv",
    "synthetic_panel",
    "sample_portfolios",
    "portfolio_diagnostics",
    "run_diagnostics",
    "diagnostics_csv",
    "empirical_edf",
    "edf_csv",
]

Policy = Literal["reject", "drop_incomplete_rows"]
_MISSING = {"", "na", "nan", "null", "none"}


@dataclass(frozen=True, eq=False)
class ReturnsPanel:
    """Assets x dates matrix of simple returns."""

    asset_names: tuple[str, ...]
    dates: tuple[str, ...]
    returns: NDArray[np.float64] = field(repr=False)
    dropped_rows: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        r = np.array(self.returns, dtype=np.float64)
        if r.ndim != 2 or r.shape != (len(self.asset_names), len(self.dates)):
            raise ArgError(
                f"returns shape {r.shape} does not match "
                f"{len(self.asset_names)} assets x {len(self.dates)} dates"
            )
        if r.size == 0:
            raise ArgError("empty panel")
        if not np.all(np.isfinite(r)):
            raise ArgError("panel contains non-finite returns")
        if any(a >= b for a, b in zip(self.dates, self.dates[1:])):
            raise ArgError("dates must be strictly increasing")
        r.setflags(write=False)
        object.__setattr__(self, "returns", r)

    @property
    def n_assets(self) -> int:
        return len(self.asset_names)

    @property
    def n_dates(self) -> int:
        return len(self.dates)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ReturnsPanel):
            return NotImplemented
        return (
            self.asset_names == other.asset_names
            and self.dates == other.dates
            and np.array_equal(self.returns, other.returns)
        )


def _parse_date(text: str, line: int) -> str:
    try:
        return dt.date.fromisoformat(text.strip()).isoformat()
    except ValueError:
        raise ParseError(f"line {line}, column 1 (date): invalid date {text!r}") from None


def load_returns_csv(path: str | os.PathLike, policy: Policy = "reject") -> ReturnsPanel:
    """Read and validate a returns CSV.

    Empty or ``NA``-like cells are gaps: ``reject`` raises on them,
    ``drop_incomplete_rows`` drops the whole date (the dropped line numbers
    end up in ``dropped_rows``). Unparsable numbers always raise.
    """
    if policy not in ("reject", "drop_incomplete_rows"):
        raise ArgError(f"unknown missing-data policy {policy!r}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or not rows[0]:
        raise ParseError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if header[0].lower() != "date" or len(header) < 2:
        raise ParseError(f"{path}: header must be 'date,<ticker1>,...'")
    names = header[1:]
    if len(set(names)) != len(names):
        raise ParseError(f"{path}: duplicate ticker in header")

    dates: list[str] = []
    values: list[list[float]] = []
    dropped: list[int] = []
    for line, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"line {line}: expected {len(header)} fields, got {len(row)}")
        date = _parse_date(row[0], line)
        parsed: list[float] = []
        gap = False
        for col, cell in enumerate(row[1:], start=2):
            text = cell.strip()
            if text.lower() in _MISSING:
                if policy == "reject":
                    raise ParseError(
                        f"line {line}, column {col} ({names[col - 2]}): missing value"
                    )
                gap = True
                parsed.append(math.nan)
                continue
            try:
                x = float(text)
            except ValueError:
                raise ParseError(
                    f"line {line}, column {col} ({names[col - 2]}): cannot parse {text!r}"
                ) from None
            if not math.isfinite(x):
                raise ParseError(f"line {line}, column {col} ({names[col - 2]}): non-finite value")
            parsed.append(x)
        if dates and date <= dates[-1]:
            kind = "duplicate" if date == dates[-1] else "out-of-order"
            raise ParseError(f"line {line}: {kind} date {date}")
        if gap:
            dropped.append(line)
            continue
        dates.append(date)
        values.append(parsed)
    if not dates:
        raise ParseError(f"{path}: no complete rows")
    returns = np.array(values, dtype=np.float64).T
    return ReturnsPanel(tuple(names), tuple(dates), returns, tuple(dropped))


def write_returns_csv(panel: ReturnsPanel, path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", *panel.asset_names])
        for j, date in enumerate(panel.dates):
            w.writerow([date, *(repr(float(x)) for x in panel.returns[:, j])])


def _business_days(start: dt.date, count: int) -> list[str]:
    out = []
    day = start
    while len(out) < count:
        if day.weekday() < 5:
            out.append(day.isoformat())
        day += dt.timedelta(days=1)
    return out


def synthetic_panel(
    n_assets: int,
    n_dates: int,
    seed: int = 0,
    *,
    n_factors: int = 3,
    start: str = "2004-01-13",
) -> ReturnsPanel:
    """Factor-model daily returns with strong cross-correlation.

    A market factor plus ``n_factors - 1`` sector factors drive the returns;
    loadings, factor volatilities and idiosyncratic volatilities are drawn
    once per seed so the population covariance has a few large and many
    dispersed small eigenvalues.
    """
    if n_assets < 1 or n_dates < 1 or n_factors < 1:
        raise ArgError("panel dimensions and factor count must be positive")
    rng = stream(seed, 0)
    loadings = rng.normal(0.0, 0.5, size=(n_assets, n_factors))
    loadings[:, 0] = rng.normal(1.0, 0.3, size=n_assets)
    factor_vol = np.concatenate([[0.011], np.full(n_factors - 1, 0.006)])
    idio_vol = rng.uniform(0.008, 0.025, size=n_assets)
    drift = rng.normal(3e-4, 2e-4, size=n_assets)
    factors = factor_vol[:, np.newaxis] * rng.standard_normal((n_factors, n_dates))
    noise = idio_vol[:, np.newaxis] * rng.standard_normal((n_assets, n_dates))
    returns = drift[:, np.newaxis] + loadings @ factors + noise
    width = len(str(n_assets))
    names = tuple(f"A{i:0{width}d}" for i in range(n_assets))
    dates = tuple(_business_days(dt.date.fromisoformat(start), n_dates))
    return ReturnsPanel(names, dates, returns)


@dataclass(frozen=True, slots=True)
class PortfolioDraw:
    """``asset_indices`` into the panel and a half-open date window ``[start, stop)``."""

    draw_id: int
    asset_indices: tuple[int, ...]
    window: tuple[int, int]

    @property
    def n(self) -> int:
        return self.window[1] - self.window[0]


def sample_portfolios(
    panel: ReturnsPanel, p: int, n: int, count: int, seed: int = 0
) -> list[PortfolioDraw]:
    """``count`` random p-asset portfolios over the most recent ``n`` dates."""
    if count < 1:
        raise ConfigError("portfolio count must be at least 1")
    if not 1 <= p <= panel.n_assets:
        raise ConfigError(f"p={p} must lie in [1, {panel.n_assets}]")
    if not 1 <= n <= panel.n_dates:
        raise ConfigError(f"n={n} must lie in [1, {panel.n_dates}]")
    window = (panel.n_dates - n, panel.n_dates)
    draws = []
    for k in range(count):
        idx = stream(seed, p, n, k).choice(panel.n_assets, size=p, replace=False)
        draws.append(PortfolioDraw(k, tuple(int(i) for i in np.sort(idx)), window))
    return draws


@dataclass(frozen=True, slots=True)
class DiagnosticsRow:
    draw: int
    frob_olse: float
    frob_sample: float
    lmax_olse: float
    lmax_sample: float
    lmin_olse: float
    lmin_sample: float
    alpha: float
    beta: float


DIAGNOSTICS_COLUMNS = tuple(f.name for f in fields(DiagnosticsRow))


def portfolio_diagnostics(
    panel: ReturnsPanel,
    draw: PortfolioDraw,
    target: Literal["identity"] | SpectrumSpec = "identity",
    center: bool = True,
) -> DiagnosticsRow:
    """Squared Frobenius norms and extreme eigenvalues of the OLSE and S."""
    start, stop = draw.window
    idx = list(draw.asset_indices)
    if not idx or max(idx) >= panel.n_assets or min(idx) < 0 or len(set(idx)) != len(idx):
        raise ArgError("draw asset indices are invalid for this panel")
    if not 0 <= start < stop <= panel.n_dates:
        raise ArgError("draw window is invalid for this panel")
    y = panel.returns[idx, start:stop]
    p, n = y.shape
    s = sample_covariance(y, center)
    sigma0 = identity_target(p) if target == "identity" else covariance_from_spectrum(target, p)
    est = olse(s, sigma0, n)
    ev_s = sym_eigenvalues(s)
    ev_o = sym_eigenvalues(est.matrix)
    return DiagnosticsRow(
        draw=draw.draw_id,
        frob_olse=frobenius_norm_sq(est.matrix),
        frob_sample=frobenius_norm_sq(s),
        lmax_olse=float(ev_o[-1]),
        lmax_sample=float(ev_s[-1]),
        lmin_olse=float(ev_o[0]),
        lmin_sample=float(ev_s[0]),
        alpha=est.weights.alpha,
        beta=est.weights.beta,
    )


def run_diagnostics(
    panel: ReturnsPanel,
    draws: Sequence[PortfolioDraw],
    target: Literal["identity"] | SpectrumSpec = "identity",
    center: bool = True,
    threads: int = 1,
) -> list[DiagnosticsRow]:
    """Diagnostics for every draw, in draw order."""

    def one(d: PortfolioDraw) -> DiagnosticsRow:
        return portfolio_diagnostics(panel, d, target, center)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, draws))
    return [one(d) for d in draws]


def _fmt(x: float) -> str:
    return format(x, ".17g")


def diagnostics_csv(rows: Iterable[DiagnosticsRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DIAGNOSTICS_COLUMNS)
    for r in rows:
        draw, *rest = astuple(r)
        w.writerow([draw, *(_fmt(x) for x in rest)])
    return buf.getvalue()


def empirical_edf(values: Iterable[float]) -> list[tuple[float, float]]:
    """Right-continuous e.d.f. as ``(value, fraction <= value)`` at each distinct value."""
    v = np.sort(np.asarray(list(values), dtype=np.float64))
    if v.size == 0:
        raise ArgError("e.d.f. of an empty sample")
    uniq, counts = np.unique(v, return_counts=True)
    cum = np.cumsum(counts)
    return [(float(x), float(k) / v.size) for x, k in zip(uniq, cum)]


def edf_csv(steps: Iterable[tuple[float, float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("value", "cumulative"))
    for x, f in steps:
        w.writerow((_fmt(x), _fmt(f)))
    return buf.getvalue()
