"""Run configuration read from plain ``key = value`` text."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from fractions import Fraction
from pathlib import Path

from ..exact import check_epsilon, fraction_str, parse_fraction
from ..lattice import DEFAULT_MAX_SIZE
from ..trees import BRUTE_FORCE_MAX_LEAVES


@dataclass(frozen=True)
class RunConfig:
    max_set_size: int = DEFAULT_MAX_SIZE
    max_tree_leaves: int = BRUTE_FORCE_MAX_LEAVES
    epsilon: Fraction = Fraction(1, 2)
    k_list: tuple[int, ...] = (2, 3)
    out_dir: Path = Path("report")
    golden: Path | None = None
    seed: int = 0
    # fraction of the full per-criterion instance counts; 1 runs the full suite
    scale: Fraction = Fraction(1)
    workers: int = 1
    items: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.max_set_size < 1 or self.max_tree_leaves < 1:
            raise ValueError("resource caps must be positive")
        if self.max_tree_leaves > BRUTE_FORCE_MAX_LEAVES:
            raise ValueError(f"max_tree_leaves cannot exceed {BRUTE_FORCE_MAX_LEAVES}")
        object.__setattr__(self, "epsilon", check_epsilon(self.epsilon))
        if not self.k_list or any(k < 1 for k in self.k_list):
            raise ValueError("k_list needs positive entries")
        if not 0 < self.scale <= 1:
            raise ValueError("scale must lie in (0, 1]")
        if self.workers < 1:
            raise ValueError("workers must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def to_json(self) -> dict:
        return {
            "max_set_size": self.max_set_size,
            "max_tree_leaves": self.max_tree_leaves,
            "epsilon": fraction_str(self.epsilon),
            "k_list": list(self.k_list),
            "seed": self.seed,
            "scale": fraction_str(self.scale),
            "items": list(self.items),
            "golden": None if self.golden is None else Path(self.golden).name,
        }


_KEYS = {f.name for f in fields(RunConfig)}


def _convert(key: str, value: str, base: Path):
    if key in ("max_set_size", "max_tree_leaves", "seed", "workers"):
        return int(value)
    if key in ("epsilon", "scale"):
        return parse_fraction(value)
    if key == "k_list":
        return tuple(int(v) for v in value.split(",") if v.strip())
    if key == "items":
        return tuple(v.strip() for v in value.split(",") if v.strip())
    if key in ("out_dir", "golden"):
        p = Path(value)
        return p if p.is_absolute() else base / p
    raise KeyError(key)


def parse_config_text(text: str, base: Path = Path(".")) -> RunConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or key not in _KEYS:
            raise ValueError(f"config line {lineno}: unknown or malformed entry {raw!r}")
        if key in values:
            raise ValueError(f"config line {lineno}: duplicate key {key}")
        try:
            values[key] = _convert(key, value, base)
        except ValueError as exc:
            raise ValueError(f"config line {lineno}: {exc}") from None
    return RunConfig(**values)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    return parse_config_text(path.read_text(encoding="utf-8"), path.parent)


def format_config(cfg: RunConfig) -> str:
    lines = [
        f"max_set_size = {cfg.max_set_size}",
        f"max_tree_leaves = {cfg.max_tree_leaves}",
        f"epsilon = {fraction_str(cfg.epsilon)}",
        f"k_list = {','.join(map(str, cfg.k_list))}",
        f"out_dir = {cfg.out_dir}",
        f"seed = {cfg.seed}",
        f"scale = {fraction_str(cfg.scale)}",
        f"workers = {cfg.workers}",
    ]
    if cfg.golden is not None:
        lines.append(f"golden = {cfg.golden}")
    if cfg.items:
        lines.append(f"items = {','.join(cfg.items)}")
    return "\n".join(lines) + "\n"
