"""Command-line harness: declarative experiment configs, path-parallel
estimator runs, CSV output with a fixed per-command schema, and a JSON run
manifest.

Commands:
    convergence   strong-error table over an n ladder, plus a fitted rate
    moments       uniform-moment report per n
    increments    one-step increment moments per n, plus a fitted slope
    diverge-demo  explicit vs tamed divergence fractions per n
    simulate      a single path's trajectory

Configuration comes from an optional JSON file plus flag overrides; flags
win.  Floats are printed with 17 significant digits so CSVs round-trip, and
wall time lives only in the manifest, keeping CSVs byte-identical across
repeated runs with the same master seed (any worker count).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .core import DomainError, TimeGrid
from .estimators import (
    fit_rate,
    increment_moment,
    moment_sup,
    strong_error,
)
from .models import MODEL_BUILDERS, build_model
from .noise import NoisePlan, generate_increments
from .schemes import SchemeSpec, simulate

__all__ = ["ExperimentConfig", "ConfigError", "load_config", "run", "main"]

OUTPUT_DIR_ENV = "TAMEDSDE_OUTDIR"

COMMANDS = ("convergence", "moments", "increments", "diverge-demo", "simulate")

CSV_COLUMNS = {
    "convergence": ["n", "error", "std_error", "p", "M", "scheme", "alpha", "model"],
    "moments": [
        "n",
        "p",
        "M",
        "moment_of_sup",
        "sup_of_moments",
        "divergence_fraction",
        "scheme",
        "alpha",
        "model",
    ],
    "increments": ["n", "fine_n", "p", "M", "increment_moment", "scheme", "alpha", "model"],
    "diverge-demo": [
        "n",
        "M",
        "explicit_divergence_fraction",
        "tamed_divergence_fraction",
        "alpha",
        "model",
    ],
}

_COMMAND_DEFAULTS = {
    "convergence": dict(n_values=(32, 64, 128, 256, 512), fine_n=8192, horizon=1.0),
    "moments": dict(n_values=(8, 64, 512, 4096), fine_n=None, horizon=1.0),
    "increments": dict(n_values=(32, 128, 512), fine_n=4096, horizon=1.0),
    "diverge-demo": dict(n_values=(1, 2, 4, 8), fine_n=None, horizon=8.0),
    "simulate": dict(n_values=(64,), fine_n=None, horizon=1.0),
}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    model: str = "cubic-additive"
    model_params: dict = field(default_factory=dict)
    scheme: str = "tamed"
    alpha: float = 0.5
    n_values: tuple[int, ...] = ()
    fine_n: int | None = None
    p: float = 2.0
    num_paths: int = 10_000
    horizon: float = 1.0
    master_seed: int = 12345
    workers: int = 0  # 0 -> available parallelism
    output_path: str | None = None

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"key 'command': unknown command {self.command!r}")
        if self.model not in MODEL_BUILDERS:
            known = ", ".join(sorted(MODEL_BUILDERS))
            raise ConfigError(f"key 'model': unknown model {self.model!r} (known: {known})")
        if self.scheme not in ("euler", "tamed"):
            raise ConfigError(f"key 'scheme': must be 'euler' or 'tamed', got {self.scheme!r}")
        if not (0.0 < self.alpha <= 0.5):
            raise ConfigError(f"key 'alpha': must lie in (0, 0.5], got {self.alpha}")
        if not self.n_values:
            raise ConfigError("key 'n_values': must contain at least one step count")
        if any(n < 1 for n in self.n_values):
            raise ConfigError(f"key 'n_values': entries must be positive, got {self.n_values}")
        if list(self.n_values) != sorted(set(self.n_values)):
            raise ConfigError(
                f"key 'n_values': must be strictly ascending, got {self.n_values}"
            )
        if self.command in ("convergence", "increments"):
            if self.fine_n is None:
                raise ConfigError(f"key 'fine_n': required for {self.command}")
            bad = [n for n in self.n_values if self.fine_n % n != 0]
            if bad:
                raise ConfigError(
                    f"key 'n_values': {bad} do not divide fine_n={self.fine_n}"
                )
        if self.p <= 0:
            raise ConfigError(f"key 'p': must be positive, got {self.p}")
        if self.command == "increments" and self.p < 2:
            raise ConfigError(f"key 'p': increments need p >= 2, got {self.p}")
        if self.num_paths < 1:
            raise ConfigError(f"key 'num_paths': must be positive, got {self.num_paths}")
        if self.horizon <= 0:
            raise ConfigError(f"key 'horizon': must be positive, got {self.horizon}")
        if not (0 <= self.master_seed < 2**64):
            raise ConfigError(
                f"key 'master_seed': must fit in 64 unsigned bits, got {self.master_seed}"
            )
        if self.workers < 0:
            raise ConfigError(f"key 'workers': must be >= 0, got {self.workers}")

    def scheme_spec(self) -> SchemeSpec:
        return SchemeSpec.tamed(self.alpha) if self.scheme == "tamed" else SchemeSpec.euler()

    def effective_workers(self) -> int:
        return self.workers if self.workers > 0 else (os.cpu_count() or 1)

    def resolve_output(self) -> str:
        if self.output_path:
            return self.output_path
        base = os.environ.get(OUTPUT_DIR_ENV, ".")
        return os.path.join(base, f"{self.command}.csv")


_CONFIG_KEYS = {
    "command",
    "model",
    "model_params",
    "scheme",
    "alpha",
    "n_values",
    "fine_n",
    "p",
    "num_paths",
    "horizon",
    "master_seed",
    "workers",
    "output_path",
}


def load_config(path: str | None, command: str, overrides: dict) -> ExperimentConfig:
    """Merge JSON config (if any), command defaults, and flag overrides."""
    data: dict = {}
    if path is not None:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}"
            ) from None
        except OSError as exc:
            raise ConfigError(f"{path}: {exc.strerror}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a JSON object")
        unknown = set(data) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    merged = dict(_COMMAND_DEFAULTS[command])
    merged.update(data)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    merged["command"] = command
    if merged.get("n_values") is not None:
        merged["n_values"] = tuple(int(n) for n in merged["n_values"])
    cfg = ExperimentConfig(**merged)
    cfg.validate()
    return cfg


def _fmt(value) -> str:
    if isinstance(value, float) or isinstance(value, np.floating):
        return f"{float(value):.17g}"
    if value is None:
        return ""
    return str(value)


def _write_csv(path: str, columns: list[str], rows: list[list]) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_manifest(path: str, payload: dict) -> None:
    with open(path + ".manifest.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def run(config: ExperimentConfig) -> int:
    """Execute one experiment; returns the process exit status."""
    config.validate()
    started = time.time()
    out = config.resolve_output()
    spec = config.scheme_spec()
    model = build_model(config.model, **config.model_params)
    workers = config.effective_workers()
    alpha_col = config.alpha if config.scheme == "tamed" else None
    manifest: dict = {
        "command": config.command,
        "config": asdict(config),
        "master_seed": config.master_seed,
        "library_version": __version__,
        "csv_path": out,
    }
    valid = True
    rows: list[list] = []

    if config.command == "convergence":
        table = strong_error(
            model,
            spec,
            config.n_values,
            config.fine_n,
            config.p,
            config.num_paths,
            config.master_seed,
            horizon=config.horizon,
            workers=workers,
        )
        for i, n in enumerate(table.n_values):
            rows.append(
                [
                    n,
                    table.errors[i],
                    table.std_errors[i],
                    table.p,
                    table.num_paths,
                    config.scheme,
                    alpha_col,
                    config.model,
                ]
            )
        valid = table.valid
        manifest["reference"] = table.reference
        manifest["stderr_method"] = table.stderr_method
        manifest["dropped_fractions"] = [float(v) for v in table.dropped_fractions]
        if valid and len(table.n_values) >= 3 and np.all(table.errors > 0):
            fit = fit_rate(table)
            manifest["rate_fit"] = {
                "rate": fit.rate,
                "slope": fit.slope,
                "intercept": fit.intercept,
                "r_squared": fit.r_squared,
            }
            print(
                f"rate={fit.rate:.6f} intercept={fit.intercept:.6f} "
                f"r_squared={fit.r_squared:.6f}"
            )

    elif config.command == "moments":
        for n in config.n_values:
            rep = moment_sup(
                model,
                spec,
                n,
                config.p,
                config.num_paths,
                config.master_seed,
                horizon=config.horizon,
                workers=workers,
            )
            rows.append(
                [
                    rep.n,
                    rep.p,
                    rep.num_paths,
                    rep.moment_of_sup,
                    rep.sup_of_moments,
                    rep.divergence_fraction,
                    config.scheme,
                    alpha_col,
                    config.model,
                ]
            )
            if not np.isfinite(rep.moment_of_sup):
                valid = False

    elif config.command == "increments":
        values = []
        for n in config.n_values:
            val = increment_moment(
                model,
                spec,
                n,
                config.fine_n,
                config.p,
                config.num_paths,
                config.master_seed,
                horizon=config.horizon,
                workers=workers,
            )
            values.append(val)
            rows.append(
                [
                    n,
                    config.fine_n,
                    config.p,
                    config.num_paths,
                    val,
                    config.scheme,
                    alpha_col,
                    config.model,
                ]
            )
            if not np.isfinite(val):
                valid = False
        if valid and len(values) >= 3 and all(v > 0 for v in values):
            x = np.log(np.asarray(config.n_values, dtype=np.float64))
            y = np.log(np.asarray(values))
            slope, _ = np.polyfit(x, y, 1)
            manifest["increment_slope"] = float(slope)
            print(f"increment moment log-log slope={slope:.6f}")

    elif config.command == "diverge-demo":
        for n in config.n_values:
            fractions = {}
            for name, s in (("explicit", SchemeSpec.euler()), ("tamed", SchemeSpec.tamed(config.alpha))):
                rep = moment_sup(
                    model,
                    s,
                    n,
                    config.p,
                    config.num_paths,
                    config.master_seed,
                    horizon=config.horizon,
                    workers=workers,
                )
                fractions[name] = rep.divergence_fraction
            rows.append(
                [
                    n,
                    config.num_paths,
                    fractions["explicit"],
                    fractions["tamed"],
                    config.alpha,
                    config.model,
                ]
            )

    elif config.command == "simulate":
        n = config.n_values[0]
        grid = TimeGrid(config.horizon, n)
        noise = generate_increments(
            NoisePlan(config.master_seed, 0, model.dim_noise, n, config.horizon)
        )
        traj = simulate(spec, model, grid, noise)
        columns = ["t"] + [f"x_{i}" for i in range(model.dim_state)] + ["finite"]
        for k, t in enumerate(grid.points):
            rows.append([t, *traj.values[k], int(traj.finite[k])])
        _write_csv(out, columns, rows)
        manifest["csv_columns"] = columns
        manifest["wall_time_seconds"] = time.time() - started
        _write_manifest(out, manifest)
        return 0

    columns = CSV_COLUMNS[config.command]
    _write_csv(out, columns, rows)
    manifest["csv_columns"] = columns
    manifest["valid"] = valid
    manifest["wall_time_seconds"] = time.time() - started
    _write_manifest(out, manifest)
    if not valid:
        print(
            f"warning: estimates flagged invalid (excessive divergence); "
            f"partial CSV written to {out}",
            file=sys.stderr,
        )
        return 1
    return 0


def _parse_model_params(pairs: list[str] | None) -> dict | None:
    if not pairs:
        return None
    params = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--param expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        try:
            params[key] = float(value)
        except ValueError:
            raise ConfigError(f"--param {key}: expected a number, got {value!r}") from None
    return params


def _parse_n_values(text: str | None) -> tuple[int, ...] | None:
    if text is None:
        return None
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise ConfigError(f"--n-values expects comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tamedsde",
        description="Tamed Euler SDE experiments: simulation and Monte Carlo error studies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        cp = sub.add_parser(command)
        cp.add_argument("--config", help="JSON config file; flags override its keys")
        cp.add_argument("--model", choices=sorted(MODEL_BUILDERS))
        cp.add_argument(
            "--param",
            action="append",
            metavar="KEY=VALUE",
            help="model parameter override, repeatable",
        )
        cp.add_argument("--scheme", choices=["euler", "tamed"])
        cp.add_argument("--alpha", type=float)
        cp.add_argument("--n-values", metavar="N1,N2,...")
        cp.add_argument("--fine-n", type=int)
        cp.add_argument("--p", type=float)
        cp.add_argument("--paths", type=int, metavar="M")
        cp.add_argument("--horizon", type=float, metavar="T")
        cp.add_argument("--seed", type=int)
        cp.add_argument("--workers", type=int)
        cp.add_argument("--out", metavar="PATH", help=f"CSV path (default ${OUTPUT_DIR_ENV})")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = dict(
            model=args.model,
            model_params=_parse_model_params(args.param),
            scheme=args.scheme,
            alpha=args.alpha,
            n_values=_parse_n_values(args.n_values),
            fine_n=args.fine_n,
            p=args.p,
            num_paths=args.paths,
            horizon=args.horizon,
            master_seed=args.seed,
            workers=args.workers,
            output_path=args.out,
        )
        config = load_config(args.config, args.command, overrides)
        return run(config)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
