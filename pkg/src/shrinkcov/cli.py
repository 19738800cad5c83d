"""Command-line interface: ``simulate``, ``estimate``, ``empirical`` and ``limits``.

Experiment parameters live in flat ``key = value`` config files (``#``
comments allowed); command-line flags override the file. Exit codes: 0 on
success, 1 when the computation fails, 2 for configuration or input errors.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import os
import platform
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from .asymptotics import SpectrumSpec, deterministic_frobenius, phi_limit, spectrum_moment
from .empirical import (
    diagnostics_csv,
    edf_csv,
    empirical_edf,
    load_returns_csv,
    run_diagnostics,
    sample_portfolios,
)
from .errors import ArgError, ConfigError, ParseError, ShrinkCovError
from .estimators import frobenius_estimator, identity_target, lw_estimator, olse, sample_covariance
from .matrix_core import sym_eigenvalues
from .simulation import (
    ESTIMATORS,
    ExperimentConfig,
    covariance_from_spectrum,
    run_experiment,
    sample_size,
)

THREADS_ENV = "SHRINKCOV_THREADS"

# keys accepted in each subcommand's config file
_KEYS: dict[str, set[str]] = {
    "simulate": {
        "tag", "spectrum", "target", "c", "p_grid", "repetitions", "seed",
        "estimators", "center", "compare_identity", "threads",
    },
    "estimate": {"panel", "estimator", "target", "center", "policy"},
    "empirical": {"panel", "p", "c", "count", "seed", "target", "center", "policy", "threads"},
    "limits": {"spectrum", "c", "p_grid"},
}


@dataclass
class CliConfig:
    """Resolved settings of one invocation, flags merged over the config file."""

    subcommand: str
    out: Path | None
    format: str
    seed: int
    threads: int
    center: bool | None
    estimator: str | None
    target: str | None
    input: Path | None
    source: Path | None
    repetitions: int | None = None
    params: dict[str, str] = field(default_factory=dict)

    def echo(self) -> dict[str, Any]:
        d = asdict(self)
        for k in ("out", "input", "source"):
            d[k] = None if d[k] is None else str(d[k])
        return d


# -- config parsing ---------------------------------------------------------


def _bundled(name: str) -> Path | None:
    ref = resources.files("shrinkcov") / "configs" / name
    return Path(str(ref)) if ref.is_file() else None


def resolve_config_path(text: str) -> Path:
    """Existing file path, or the name of a bundled config such as ``figure1.cfg``."""
    path = Path(text)
    if path.is_file():
        return path
    bundled = _bundled(path.name if path.suffix else path.name + ".cfg")
    if bundled is not None:
        return bundled
    raise ConfigError(f"config file {text!r} not found")


def read_config(path: Path, subcommand: str) -> dict[str, str]:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        parser.read_string("[config]\n" + path.read_text(encoding="utf-8"), source=str(path))
    except (configparser.Error, UnicodeDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if parser.sections() != ["config"]:
        raise ConfigError(f"{path}: config files are flat; sections are not allowed")
    values = dict(parser["config"])
    unknown = set(values) - _KEYS[subcommand]
    if unknown:
        raise ConfigError(f"{path}: unknown keys for {subcommand}: {', '.join(sorted(unknown))}")
    return values


def _parse(kind: str, key: str, text: str, conv: Callable[[str], Any]) -> Any:
    try:
        return conv(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"{key}: invalid {kind} {text!r}") from exc


def parse_int(key: str, text: str) -> int:
    return _parse("integer", key, text, lambda s: int(s.strip()))


def parse_ratio(key: str, text: str, *, allow_zero: bool = False) -> float:
    """A positive number, fractions like ``1/3`` allowed."""
    value = _parse("number", key, text, lambda s: float(Fraction(s.strip())))
    if value < 0 or (value == 0 and not allow_zero):
        raise ConfigError(f"{key} must be positive")
    return value


def parse_bool(key: str, text: str) -> bool:
    t = text.strip().lower()
    if t in ("on", "true", "yes", "1"):
        return True
    if t in ("off", "false", "no", "0"):
        return False
    raise ConfigError(f"{key}: expected on/off, got {text!r}")


def parse_grid(key: str, text: str) -> tuple[int, ...]:
    """``start:stop:step`` (inclusive) or a comma-separated list."""
    t = text.strip()
    if ":" in t:
        parts = [parse_int(key, x) for x in t.split(":")]
        if len(parts) not in (2, 3):
            raise ConfigError(f"{key}: range must be start:stop[:step]")
        start, stop, step = (*parts, 1) if len(parts) == 2 else parts
        if step < 1:
            raise ConfigError(f"{key}: step must be positive")
        grid = tuple(range(start, stop + 1, step))
    else:
        grid = tuple(parse_int(key, x) for x in t.replace(",", " ").split())
    if not grid or min(grid) < 1:
        raise ConfigError(f"{key}: grid must hold positive dimensions")
    return grid


def parse_target(text: str | None, base: Path | None = None) -> SpectrumSpec | None:
    """``identity`` (returns None), ``spectrum:<path>`` or an inline spectrum."""
    if text is None or text.strip().lower() == "identity":
        return None
    t = text.strip()
    if t.startswith("spectrum:"):
        path = Path(t[len("spectrum:"):])
        if not path.is_absolute() and base is not None and not path.is_file():
            path = base / path
        if not path.is_file():
            raise ConfigError(f"target spectrum file {str(path)!r} not found")
        return SpectrumSpec.parse(path.read_text(encoding="utf-8"))
    return SpectrumSpec.parse(t)


def _threads(flag: int | None) -> int:
    if flag is not None:
        value = flag
    else:
        env = os.environ.get(THREADS_ENV)
        value = parse_int(THREADS_ENV, env) if env else 1
    if value < 1:
        raise ConfigError("thread count must be at least 1")
    return value


def build_config(args: argparse.Namespace) -> CliConfig:
    """Merge flags over the config file and validate paths before any compute."""
    params: dict[str, str] = {}
    source = None
    if args.config is not None:
        source = resolve_config_path(args.config)
        params = read_config(source, args.command)
    if args.seed is not None:
        seed = args.seed
    else:
        seed = parse_int("seed", params.get("seed", "0"))
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    threads = _threads(args.threads if args.threads is not None else
                       (parse_int("threads", params["threads"]) if "threads" in params else None))
    center = None
    if args.center is not None:
        center = args.center == "on"
    elif "center" in params:
        center = parse_bool("center", params["center"])
    input_path = getattr(args, "input", None)
    if input_path is None and "panel" in params:
        panel = Path(params["panel"])
        if not panel.is_absolute() and source is not None and not panel.is_file():
            panel = source.parent / panel
        input_path = panel
    if input_path is not None:
        input_path = Path(input_path)
        if not input_path.is_file():
            raise ConfigError(f"input file {str(input_path)!r} not found")
    if args.reps is not None and args.reps < 1:
        raise ConfigError("--reps must be at least 1")
    out = Path(args.out) if args.out is not None else None
    if out is not None:
        if out.exists() and not out.is_dir():
            raise ConfigError(f"output path {str(out)!r} is not a directory")
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create output directory {str(out)!r}: {exc}") from exc
    return CliConfig(
        subcommand=args.command,
        out=out,
        format=args.format,
        seed=seed,
        threads=threads,
        center=center,
        estimator=args.estimator or params.get("estimator"),
        target=args.target or params.get("target"),
        input=input_path,
        source=source,
        repetitions=args.reps,
        params=params,
    )


# -- output helpers ---------------------------------------------------------


def _fmt(x: float) -> str:
    return format(x, ".17g")


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _json(obj: Any) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _versions() -> dict[str, str]:
    return {
        "shrinkcov": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
    }


def _require(cfg: CliConfig, key: str) -> str:
    if key not in cfg.params:
        raise ConfigError(f"{cfg.subcommand}: missing required config key {key!r}")
    return cfg.params[key]


def _target_base(cfg: CliConfig) -> Path | None:
    return cfg.source.parent if cfg.source is not None else None


def _finite_or_none(x: float) -> float | None:
    return x if np.isfinite(x) else None


# -- subcommands -------------------------------------------------------------


def experiment_from_config(cfg: CliConfig) -> ExperimentConfig:
    p = cfg.params
    estimators = ESTIMATORS
    if "estimators" in p:
        estimators = tuple(e for e in p["estimators"].replace(",", " ").split())
    if cfg.estimator is not None:
        mapping = {"olse": "bona_fide_olse", "oracle": "oracle_olse", "lw": "lw", "sample": "sample"}
        estimators = (mapping[cfg.estimator],)
    reps = cfg.repetitions
    return ExperimentConfig(
        spectrum=SpectrumSpec.parse(_require(cfg, "spectrum")),
        c=parse_ratio("c", _require(cfg, "c")),
        p_grid=parse_grid("p_grid", _require(cfg, "p_grid")),
        repetitions=reps if reps is not None else parse_int("repetitions", p.get("repetitions", "1000")),
        seed=cfg.seed,
        target=parse_target(cfg.target, _target_base(cfg)),
        estimators=estimators,
        center=bool(cfg.center),
        compare_identity=parse_bool("compare_identity", p.get("compare_identity", "off")),
        threads=cfg.threads,
    )


def cmd_simulate(cfg: CliConfig, out: Callable[[str], None]) -> int:
    exp = experiment_from_config(cfg)
    tag = cfg.params.get("tag") or (cfg.source.stem if cfg.source is not None else "run")
    outdir = cfg.out or Path(".")
    report = run_experiment(exp)
    if cfg.format == "json":
        _write(outdir / f"prial_{tag}.json", report.to_json())
    else:
        _write(outdir / f"prial_{tag}.csv", report.to_csv())
    manifest = {
        "command": "simulate",
        "tag": tag,
        "seed": exp.seed,
        "config": {
            "spectrum": exp.spectrum.to_text(),
            "target": "identity" if exp.target is None else exp.target.to_text(),
            "c": exp.c,
            "p_grid": list(exp.p_grid),
            "repetitions": exp.repetitions,
            "estimators": list(exp.estimators),
            "center": exp.center,
            "compare_identity": exp.compare_identity,
        },
        "versions": _versions(),
    }
    _write(outdir / f"manifest_{tag}.json", _json(manifest))
    last = exp.p_grid[-1]
    out(f"p={last}: " + ", ".join(
        f"{r.estimator}={r.prial:.2f}%" for r in report.rows if r.p == last
    ))
    return 0


def cmd_estimate(cfg: CliConfig, out: Callable[[str], None]) -> int:
    if cfg.input is None:
        raise ConfigError("estimate: a returns CSV is required")
    policy = cfg.params.get("policy", "reject")
    if policy not in ("reject", "drop_incomplete_rows"):
        raise ConfigError(f"unknown policy {policy!r}")
    estimator = cfg.estimator or "olse"
    if estimator == "oracle":
        raise ConfigError("the oracle estimator needs the true covariance; use simulate")
    if estimator not in ("olse", "lw", "sample"):
        raise ConfigError(f"unknown estimator {estimator!r}")
    target_spec = parse_target(cfg.target, _target_base(cfg))
    center = True if cfg.center is None else cfg.center
    panel = load_returns_csv(cfg.input, policy)

    y = panel.returns
    p, n = y.shape
    s = sample_covariance(y, center)
    if estimator == "olse":
        sigma0 = identity_target(p) if target_spec is None else covariance_from_spectrum(target_spec, p)
        res = olse(s, sigma0, n)
        matrix, alpha, beta = res.matrix, res.weights.alpha, res.weights.beta
    elif estimator == "lw":
        res = lw_estimator(y, center)
        matrix, alpha, beta = res.matrix, res.weights.alpha, res.weights.beta
    else:
        matrix, alpha, beta = s, 1.0, 0.0
    ev_e = sym_eigenvalues(matrix)
    ev_s = sym_eigenvalues(s)
    summary = {
        "estimator": estimator,
        "target": "identity" if target_spec is None or estimator != "olse" else target_spec.to_text(),
        "p": p,
        "n": n,
        "center": center,
        "alpha": alpha,
        "beta": beta,
        "psi_hat": frobenius_estimator(s, n),
        "lmax_estimate": float(ev_e[-1]),
        "lmin_estimate": float(ev_e[0]),
        "lmax_sample": float(ev_s[-1]),
        "lmin_sample": float(ev_s[0]),
        "dropped_rows": len(panel.dropped_rows),
    }
    outdir = cfg.out or Path(".")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["asset", *panel.asset_names])
    for name, row in zip(panel.asset_names, np.asarray(matrix)):
        w.writerow([name, *(_fmt(x) for x in row)])
    _write(outdir / "estimate_matrix.csv", buf.getvalue())
    if cfg.format == "json":
        _write(outdir / "estimate_summary.json", _json(summary))
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(summary.keys())
        w.writerow(_fmt(v) if isinstance(v, float) else v for v in summary.values())
        _write(outdir / "estimate_summary.csv", buf.getvalue())
    for key, value in summary.items():
        out(f"{key:>14}  {_fmt(value) if isinstance(value, float) else value}")
    return 0


def _c_label(c: float) -> str:
    return format(c, "g")


def cmd_empirical(cfg: CliConfig, out: Callable[[str], None]) -> int:
    if cfg.input is None:
        raise ConfigError("empirical: a returns CSV is required (positional or 'panel' key)")
    params = cfg.params
    p = parse_int("p", _require(cfg, "p"))
    cs = [parse_ratio("c", x) for x in _require(cfg, "c").replace(",", " ").split()]
    if not cs:
        raise ConfigError("c: at least one value required")
    count = cfg.repetitions if cfg.repetitions is not None else parse_int("count", params.get("count", "1000"))
    if count < 1:
        raise ConfigError("count must be at least 1")
    policy = params.get("policy", "reject")
    if policy not in ("reject", "drop_incomplete_rows"):
        raise ConfigError(f"unknown policy {policy!r}")
    if cfg.estimator not in (None, "olse"):
        raise ConfigError("empirical diagnostics compare the OLSE with the sample covariance only")
    target = parse_target(cfg.target, _target_base(cfg)) or "identity"
    center = True if cfg.center is None else cfg.center
    if target != "identity":
        covariance_from_spectrum(target, p)
    panel = load_returns_csv(cfg.input, policy)
    outdir = cfg.out or Path(".")
    plans = []
    for c in cs:
        n = sample_size(p, c)
        plans.append((c, n, sample_portfolios(panel, p, n, count, cfg.seed)))

    manifest = {"command": "empirical", "seed": cfg.seed, "p": p, "count": count,
                "center": center, "policy": policy,
                "target": "identity" if target == "identity" else target.to_text(),
                "panel": {"assets": panel.n_assets, "dates": panel.n_dates,
                          "dropped_rows": list(panel.dropped_rows)},
                "runs": [], "versions": _versions()}
    for c, n, draws in plans:
        rows = run_diagnostics(panel, draws, target, center, cfg.threads)
        label = _c_label(c)
        edf_o = empirical_edf(r.frob_olse for r in rows)
        edf_s = empirical_edf(r.frob_sample for r in rows)
        if cfg.format == "json":
            _write(outdir / f"diagnostics_c{label}.json", _json({
                "rows": [asdict(r) for r in rows],
                "edf_frob_olse": edf_o,
                "edf_frob_sample": edf_s,
            }))
        else:
            _write(outdir / f"diagnostics_c{label}.csv", diagnostics_csv(rows))
            _write(outdir / f"edf_frob_olse_c{label}.csv", edf_csv(edf_o))
            _write(outdir / f"edf_frob_sample_c{label}.csv", edf_csv(edf_s))
        smaller = sum(r.frob_olse <= r.frob_sample for r in rows)
        manifest["runs"].append({"c": c, "n": n, "frob_olse_le_sample": smaller})
        out(f"c={label} n={n}: frob(OLSE) <= frob(S) in {smaller}/{len(rows)} draws")
    _write(outdir / "manifest_empirical.json", _json(manifest))
    return 0


def cmd_limits(cfg: CliConfig, out: Callable[[str], None]) -> int:
    h = SpectrumSpec.parse(_require(cfg, "spectrum"))
    c = parse_ratio("c", _require(cfg, "c"), allow_zero=True)
    grid = parse_grid("p_grid", cfg.params["p_grid"]) if "p_grid" in cfg.params else ()
    m1 = spectrum_moment(h, 1)
    m2 = spectrum_moment(h, 2)
    phi = phi_limit(h, c)
    rows = []
    for p in grid:
        sigma = covariance_from_spectrum(h, p)
        rows.append({"p": p, "deterministic_frobenius": deterministic_frobenius(sigma, c)})
    result = {"c": c, "m1": m1, "m2": m2, "c_m1_sq": c * m1**2, "phi": phi, "finite_p": rows}
    if cfg.format == "json":
        text = _json(result)
    else:
        lines = [
            f"{'phi':>24}  {_fmt(phi)}",
            f"{'first moment':>24}  {_fmt(m1)}",
            f"{'second moment':>24}  {_fmt(m2)}",
            f"{'c * first moment^2':>24}  {_fmt(c * m1**2)}",
        ]
        if rows:
            lines.append("")
            lines.append(f"{'p':>8}  deterministic_frobenius")
            lines += [f"{r['p']:>8}  {_fmt(r['deterministic_frobenius'])}" for r in rows]
        text = "\n".join(lines) + "\n"
    out(text.rstrip("\n"))
    if cfg.out is not None:
        _write(cfg.out / ("limits.json" if cfg.format == "json" else "limits.txt"), text)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "empirical": cmd_empirical,
    "limits": cmd_limits,
}


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shrinkcov",
        description="Optimal linear shrinkage estimation of large covariance matrices.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file (or a bundled name)")
    common.add_argument("--seed", type=_u64, help="64-bit seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--estimator", choices=("olse", "lw", "oracle", "sample"))
    common.add_argument("--target", help="identity | spectrum:<path>")
    common.add_argument("--center", choices=("on", "off"))
    common.add_argument("--reps", type=int, help="repetitions (simulate) or portfolio count (empirical)")
    common.add_argument("--threads", type=int, help=f"worker threads (fallback: ${THREADS_ENV})")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="Monte Carlo PRIAL sweep")
    est = sub.add_parser("estimate", parents=[common], help="one-shot estimate from a returns CSV")
    est.add_argument("input", nargs="?", help="returns CSV")
    emp = sub.add_parser("empirical", parents=[common], help="random-portfolio diagnostics")
    emp.add_argument("input", nargs="?", help="returns CSV")
    sub.add_parser("limits", parents=[common], help="deterministic limits of the Frobenius norm")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    def out(text: str) -> None:
        print(text)

    try:
        cfg = build_config(args)
        return COMMANDS[args.command](cfg, out)
    except (ConfigError, ParseError) as exc:
        print(f"shrinkcov: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"shrinkcov: error: {exc}", file=sys.stderr)
        return 2
    except ShrinkCovError as exc:
        print(f"shrinkcov: computation failed ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
