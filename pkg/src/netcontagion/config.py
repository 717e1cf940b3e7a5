"""Line-oriented ``key = value`` run configuration.

Lists are comma separated, ``#`` starts a comment, and every omitted key
takes its default. Unknown keys and out-of-range values are rejected with the
key name and line number.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Any, Callable

from .model import ModelParams
from .montecarlo import SweepConfig

__all__ = ["ConfigError", "RunConfig", "parse_config", "serialize_config", "load_config"]


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


@dataclass(frozen=True)
class RunConfig:
    n_banks: int = 10
    n_assets: int = 10
    eta: float = 0.05
    q: float = 0.05
    w_max: float = 0.2
    weight_shape: str = "linear"
    df: float = 1.5
    s_list: tuple[float, ...] = (1.0, 2.0, 3.0, 4.0)
    loss_law: str = "t"
    p_grid: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)
    d_grid: tuple[float, ...] = tuple(round(0.1 * i, 1) for i in range(11))
    n_trials: int = 100
    n_samples: int = 2000
    master_seed: int = 20240101
    max_retries: int = 10_000
    seed_spread: float = 0.0
    workers: int = 1
    out_dir: str = "out"
    partition_bounds: tuple[float, ...] = (-0.5, 1.0)
    partition_resolution: int = 400
    witness_directions: int = 64
    witness_steps: int = 256

    def model_params(self) -> ModelParams:
        return ModelParams(
            n_banks=self.n_banks, n_assets=self.n_assets, eta=self.eta, q=self.q,
            w_max=self.w_max, weight_shape=self.weight_shape, df=self.df, s_list=self.s_list,
        )

    def sweep_config(self) -> SweepConfig:
        return SweepConfig(
            p_grid=self.p_grid, d_grid=self.d_grid, n_trials=self.n_trials,
            n_samples=self.n_samples, master_seed=self.master_seed,
            params=self.model_params(), loss_law=self.loss_law,
            max_retries=self.max_retries, seed_spread=self.seed_spread,
        )


def _int(text: str) -> int:
    return int(text.strip())


def _float(text: str) -> float:
    x = float(text.strip())
    if x != x or x in (float("inf"), float("-inf")):
        raise ValueError("must be finite")
    return x


def _floats(text: str) -> tuple[float, ...]:
    items = [t for t in (s.strip() for s in text.split(",")) if t]
    if not items:
        raise ValueError("list must not be empty")
    return tuple(_float(t) for t in items)


def _word(text: str) -> str:
    return text.strip()


def _increasing_unit(xs) -> str | None:
    if any(not 0.0 <= x <= 1.0 for x in xs):
        return "values must lie in [0, 1]"
    if any(b <= a for a, b in zip(xs, xs[1:])):
        return "values must be strictly increasing"
    return None


# key -> (parser, check returning an error message or None)
_SPEC: dict[str, tuple[Callable[[str], Any], Callable[[Any], str | None]]] = {
    "n_banks": (_int, lambda x: None if x >= 1 else "must be >= 1"),
    "n_assets": (_int, lambda x: None if x >= 1 else "must be >= 1"),
    "eta": (_float, lambda x: None if 0 < x < 1 else "must lie in (0, 1)"),
    "q": (_float, lambda x: None if 0 < x < 0.5 else "must lie in (0, 0.5)"),
    "w_max": (_float, lambda x: None if 0 <= x < 1 else "must lie in [0, 1)"),
    "weight_shape": (_word, lambda x: None if x == "linear" else "only 'linear' is supported"),
    "df": (_float, lambda x: None if x > 0 else "must be positive"),
    "s_list": (_floats, lambda xs: None if all(s >= 1 for s in xs) else "exponents must be >= 1"),
    "loss_law": (_word, lambda x: None if x in ("t", "normal") else "must be 't' or 'normal'"),
    "p_grid": (_floats, _increasing_unit),
    "d_grid": (_floats, _increasing_unit),
    "n_trials": (_int, lambda x: None if x >= 1 else "must be >= 1"),
    "n_samples": (_int, lambda x: None if x >= 1 else "must be >= 1"),
    "master_seed": (_int, lambda x: None if 0 <= x < 2**64 else "must be a 64-bit unsigned integer"),
    "max_retries": (_int, lambda x: None if x >= 1 else "must be >= 1"),
    "seed_spread": (_float, lambda x: None if 0 <= x <= 1 else "must lie in [0, 1]"),
    "workers": (_int, lambda x: None if x >= 1 else "must be >= 1"),
    "out_dir": (_word, lambda x: None if x else "must not be empty"),
    "partition_bounds": (_floats, lambda xs: None if len(xs) == 2 and xs[0] < xs[1] else "must be 'lo, hi' with lo < hi"),
    "partition_resolution": (_int, lambda x: None if x >= 2 else "must be >= 2"),
    "witness_directions": (_int, lambda x: None if x >= 1 else "must be >= 1"),
    "witness_steps": (_int, lambda x: None if x >= 1 else "must be >= 1"),
}

assert set(_SPEC) == {f.name for f in fields(RunConfig)}


def parse_config(text: str) -> RunConfig:
    values: dict[str, Any] = {}
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in _SPEC:
            raise ConfigError("unknown key", key=key, line=lineno)
        if key in seen:
            raise ConfigError(f"duplicate key (first set on line {seen[key]})", key=key, line=lineno)
        parse, check = _SPEC[key]
        try:
            parsed = parse(value)
        except ValueError as exc:
            raise ConfigError(f"cannot parse {value!r}: {exc}", key=key, line=lineno) from None
        problem = check(parsed)
        if problem:
            raise ConfigError(f"{problem}, got {value!r}", key=key, line=lineno)
        values[key] = parsed
        seen[key] = lineno
    return RunConfig(**values)


def _fmt(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(cfg: RunConfig) -> str:
    return "".join(f"{f.name} = {_fmt(getattr(cfg, f.name))}\n" for f in fields(cfg))


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
