"""Experiment runner: configuration, seeded parallel trajectories, aggregation, output files.

Every (policy, rep) trajectory draws from its own stream
``derive_stream(seed, [name_label(policy), rep])``, so results do not depend
on the worker count, on completion order, or on which other policies are in
the run.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .bandit import GAUSSIAN, PARETO, EnvironmentSpec, run_trajectory
from .exceptions import ConfigurationError
from .policies import POLICY_NAMES, make_policy
from .streams import derive_stream, name_label

__all__ = [
    "CSV_HEADER",
    "DEFAULT_POLICIES",
    "PRESETS",
    "AggregateCurve",
    "ExperimentConfig",
    "aggregate",
    "config_from_mapping",
    "derive_stream",
    "gnuplot_script",
    "parse_config_text",
    "read_config_file",
    "run_experiment",
    "run_trajectories",
    "write_outputs",
]

CSV_HEADER = "policy,round,mean_cum_regret,std_cum_regret,reps"
DEFAULT_POLICIES = ("rmm-ucb", "mars", "vanilla-ucb", "mom-ucb", "trunc-ucb")

# name -> (env kind, means, tail parameter); all at horizon 1000, 20 reps
PRESETS: dict[str, dict[str, object]] = {
    "fig1a": {"env": PARETO, "means": (1.0, 0.9), "pareto-eps": 0.1},
    "fig1b": {"env": PARETO, "means": (1.0, 0.5), "pareto-eps": 0.1},
    "figS": {"env": PARETO, "means": (1.0, 0.9), "pareto-eps": 0.5},
}
PRESET_DEFAULTS = {"horizon": 1000, "reps": 20, "policies": DEFAULT_POLICIES}

# keys written to the manifest for information only; ignored when read back
_INFO_KEYS = {"version", "m-max-active", "preset"}


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: environment, policies and the simulation budget."""

    env: EnvironmentSpec
    policies: tuple[str, ...] = DEFAULT_POLICIES
    horizon: int = 1000
    reps: int = 20
    master_seed: int = 0
    out_dir: Path = Path("results")
    workers: int = 1
    m_max: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "policies", tuple(self.policies))
        object.__setattr__(self, "out_dir", Path(self.out_dir))
        if not self.policies:
            raise ConfigurationError("at least one policy is required")
        unknown = [p for p in self.policies if p not in POLICY_NAMES]
        if unknown:
            raise ConfigurationError(
                f"unknown policy {unknown[0]!r}; valid names: {', '.join(POLICY_NAMES)}"
            )
        if len(set(self.policies)) != len(self.policies):
            raise ConfigurationError("policy names must be distinct")
        if self.reps < 1:
            raise ConfigurationError(f"reps must be >= 1, got {self.reps}")
        if self.horizon < self.env.n_arms:
            raise ConfigurationError(
                f"horizon {self.horizon} is shorter than the {self.env.n_arms} arms"
            )
        if self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1, got {self.workers}")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigurationError("seed must be a 64-bit unsigned integer")
        if self.m_max is not None and self.m_max < 2:
            raise ConfigurationError(f"m-max must be >= 2, got {self.m_max}")

    def items(self) -> list[tuple[str, str]]:
        """The configuration as key=value pairs, in the flag vocabulary."""
        kinds = {arm.kind for arm in self.env.arms}
        tails = {arm.tail for arm in self.env.arms}
        if len(kinds) != 1 or len(tails) != 1:
            raise ConfigurationError("only environments with one arm family and tail can be serialised")
        kind = kinds.pop()
        tail_key = "pareto-eps" if kind == PARETO else "gauss-std"
        return [
            ("env", kind),
            ("means", ",".join(repr(float(arm.mean)) for arm in self.env.arms)),
            (tail_key, repr(float(tails.pop()))),
            ("policies", ",".join(self.policies)),
            ("horizon", str(self.horizon)),
            ("reps", str(self.reps)),
            ("seed", str(self.master_seed)),
            ("workers", str(self.workers)),
            ("m-max", "none" if self.m_max is None else str(self.m_max)),
            ("out", str(self.out_dir)),
        ]


@dataclass(frozen=True)
class AggregateCurve:
    """Per-round mean and sample standard deviation of cumulative pseudo-regret."""

    mean: np.ndarray
    std: np.ndarray
    reps: int

    def __post_init__(self):
        if self.mean.shape != self.std.shape:
            raise ValueError("mean and std curves differ in length")


def _parse_int(key: str, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigurationError(f"{key}: expected an integer, got {text!r}") from None


def _parse_float(key: str, text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ConfigurationError(f"{key}: expected a number, got {text!r}") from None
    if not math.isfinite(value):
        raise ConfigurationError(f"{key}: expected a finite number, got {text!r}")
    return value


def _as_list(value) -> list[str]:
    if isinstance(value, str):
        return [part.strip() for part in value.split(",") if part.strip()]
    return [str(v) for v in value]


def config_from_mapping(values: Mapping[str, object]) -> ExperimentConfig:
    """Build a config from flag-named keys (``env``, ``means``, ``pareto-eps``, ...).

    Values may be strings, as read from a key=value file, or already-typed
    objects.  Missing keys take the preset defaults.
    """
    known = {"env", "means", "pareto-eps", "gauss-std", "policies", "horizon", "reps",
             "seed", "workers", "m-max", "out"} | _INFO_KEYS
    extra = sorted(set(values) - known)
    if extra:
        raise ConfigurationError(f"unknown configuration key {extra[0]!r}")
    kind = str(values.get("env", PARETO))
    if kind in ("pareto", PARETO):
        kind = PARETO
    elif kind not in (GAUSSIAN,):
        raise ConfigurationError(f"env must be 'symmetrized-pareto' or 'gaussian', got {kind!r}")
    if "means" not in values:
        raise ConfigurationError("means are required (e.g. means=1.0,0.9)")
    means = [_parse_float("means", v) for v in _as_list(values["means"])]
    if len(means) < 2:
        raise ConfigurationError("means: need at least two arms")
    if kind == PARETO:
        eps = _parse_float("pareto-eps", str(values.get("pareto-eps", 0.1)))
        if not eps > 0:
            raise ConfigurationError(f"pareto-eps must be positive, got {eps}")
        env = EnvironmentSpec.symmetrized_pareto(means, eps)
    else:
        std = _parse_float("gauss-std", str(values.get("gauss-std", 1.0)))
        if not std > 0:
            raise ConfigurationError(f"gauss-std must be positive, got {std}")
        env = EnvironmentSpec.gaussian(means, std)
    m_max = values.get("m-max")
    if m_max is not None and str(m_max).lower() != "none":
        m_max = _parse_int("m-max", str(m_max))
    else:
        m_max = None
    return ExperimentConfig(
        env=env,
        policies=tuple(_as_list(values.get("policies", DEFAULT_POLICIES))),
        horizon=_parse_int("horizon", str(values.get("horizon", PRESET_DEFAULTS["horizon"]))),
        reps=_parse_int("reps", str(values.get("reps", PRESET_DEFAULTS["reps"]))),
        master_seed=_parse_int("seed", str(values.get("seed", 0))),
        out_dir=Path(str(values.get("out", "results"))),
        workers=_parse_int("workers", str(values.get("workers", 1))),
        m_max=m_max,
    )


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key=value`` lines; blank lines and ``#`` comments are skipped."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigurationError(f"line {lineno}: expected key=value, got {raw!r}")
        out[key.strip()] = value.strip()
    return out


def read_config_file(path) -> dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read config file {path}: {exc.strerror or exc}") from exc
    return parse_config_text(text)


def _trajectory(env: EnvironmentSpec, policy: str, horizon: int, seed: int, rep: int,
                m_max: int | None) -> np.ndarray:
    stream = derive_stream(seed, (name_label(policy), rep))
    return run_trajectory(env, make_policy(policy, env, m_max), horizon, stream).regret


def _trajectory_task(args) -> np.ndarray:
    return _trajectory(*args)


def run_trajectories(config: ExperimentConfig) -> dict[str, np.ndarray]:
    """Cumulative pseudo-regret of every trajectory: policy -> (reps, horizon)."""
    tasks = [
        (config.env, policy, config.horizon, config.master_seed, rep, config.m_max)
        for policy in config.policies
        for rep in range(config.reps)
    ]
    if config.workers == 1 or len(tasks) == 1:
        curves = [_trajectory_task(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(config.workers, len(tasks))) as pool:
            # map yields in task order whatever the completion order
            curves = list(pool.map(_trajectory_task, tasks))
    out = {}
    for i, policy in enumerate(config.policies):
        out[policy] = np.stack(curves[i * config.reps:(i + 1) * config.reps])
    return out


def aggregate(regrets: np.ndarray) -> AggregateCurve:
    """Mean and sample (n - 1) standard deviation over reps, per round."""
    regrets = np.asarray(regrets, dtype=np.float64)
    reps = regrets.shape[0]
    mean = regrets.mean(axis=0)
    std = regrets.std(axis=0, ddof=1) if reps > 1 else np.zeros_like(mean)
    return AggregateCurve(mean, std, reps)


def run_experiment(config: ExperimentConfig) -> dict[str, AggregateCurve]:
    return {policy: aggregate(r) for policy, r in run_trajectories(config).items()}


def csv_text(results: Mapping[str, AggregateCurve]) -> str:
    lines = [CSV_HEADER]
    for policy, curve in results.items():
        for t, (mu, sd) in enumerate(zip(curve.mean.tolist(), curve.std.tolist()), start=1):
            lines.append(f"{policy},{t},{mu!r},{sd!r},{curve.reps}")
    return "\n".join(lines) + "\n"


def manifest_text(config: ExperimentConfig) -> str:
    from . import __version__

    lines = [
        "# rmmucb experiment manifest; rerun with: rmmucb run --config <this file>",
        f"version={__version__}",
        f"m-max-active={'true' if config.m_max is not None else 'false'}",
    ]
    if config.m_max is not None:
        lines.append("# m-max caps the resample count: the RMM level is then no longer exact")
    lines += [f"{key}={value}" for key, value in config.items()]
    return "\n".join(lines) + "\n"


def _write(path: Path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_outputs(results: Mapping[str, AggregateCurve], config: ExperimentConfig) -> tuple[Path, Path]:
    """Write ``regret.csv`` and ``manifest.txt`` into the configured directory."""
    if not results:
        raise ConfigurationError("no results to write")
    out = config.out_dir
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror or exc}") from exc
    csv_path = out / "regret.csv"
    manifest_path = out / "manifest.txt"
    _write(csv_path, csv_text(results))
    _write(manifest_path, manifest_text(config))
    return csv_path, manifest_path


def read_policies_from_csv(path) -> list[str]:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n")
            if header != CSV_HEADER:
                raise ConfigurationError(f"{path} does not have the regret CSV header")
            seen: dict[str, None] = {}
            for line in fh:
                seen.setdefault(line.split(",", 1)[0], None)
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return list(seen)


def gnuplot_script(csv_path, policies: Sequence[str], *, output: str = "regret.png",
                   band: bool = True) -> str:
    """A gnuplot script drawing mean cumulative regret (+- one std) per policy."""
    csv_name = str(csv_path).replace('"', '\\"')
    names = " ".join(policies)
    lines = [
        "set datafile separator ','",
        "set key top left",
        "set xlabel 'round'",
        "set ylabel 'cumulative pseudo-regret'",
        "set terminal pngcairo size 900,600",
        f"set output '{output}'",
        f'csv = "{csv_name}"',
        f'policies = "{names}"',
        "sel(p, col) = (strcol(1) eq p) ? column(col) : NaN",
    ]
    if band:
        lines.append(
            "plot for [p in policies] csv skip 1 using 2:(sel(p, 3) - sel(p, 4)):(sel(p, 3) + sel(p, 4))"
            " with filledcurves fs transparent solid 0.15 notitle, \\"
        )
        lines.append("     for [p in policies] csv skip 1 using 2:(sel(p, 3)) with lines lw 2 title p")
    else:
        lines.append("plot for [p in policies] csv skip 1 using 2:(sel(p, 3)) with lines lw 2 title p")
    return "\n".join(lines) + "\n"


def preset_values(name: str) -> dict[str, object]:
    try:
        preset = PRESETS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown preset {name!r}; valid presets: {', '.join(PRESETS)}"
        ) from None
    return {**PRESET_DEFAULTS, **preset}
