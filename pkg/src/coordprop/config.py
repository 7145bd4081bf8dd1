"""Pipeline configuration: INI file with one section per stage, overridable from the CLI."""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from .trends import default_k_grid

CONFIG_ENV = "COORDPROP_CONFIG"

# config key -> (section, attribute, parser)
_KEYS = {
    "tweets": ("paths", "tweets", Path),
    "articles": ("paths", "articles", Path),
    "signals": ("paths", "signals", Path),
    "lexicons": ("paths", "lexicons", lambda s: [Path(p.strip()) for p in s.split(",") if p.strip()]),
    "model": ("paths", "model", Path),
    "training": ("paths", "training", Path),
    "output": ("paths", "output", Path),
    "fraction": ("simnet", "fraction", float),
    "alpha": ("simnet", "alpha", float),
    "resolution": ("communities", "resolution", float),
    "seed": ("communities", "seed", int),
    "names": ("communities", "names", lambda s: parse_names(s)),
    "chunk_tokens": ("propaganda", "chunk_tokens", int),
    "lambda": ("propaganda", "lam", float),
    "train_seed": ("propaganda", "train_seed", int),
    "max_iter": ("propaganda", "max_iter", int),
    "measures": ("measures", "measures", lambda s: [m.strip() for m in s.split(",") if m.strip()]),
    "primary": ("measures", "primary", str),
    "k_grid": ("measures", "k_grid", lambda s: tuple(float(k) for k in s.split(",") if k.strip())),
    "threads": ("run", "threads", int),
}


def parse_names(text: str) -> dict[int, str]:
    """``"0=LAB, 1=CON"`` -> ``{0: "LAB", 1: "CON"}``."""
    out = {}
    for part in text.split(","):
        if not part.strip():
            continue
        key, _, name = part.partition("=")
        if not name.strip():
            raise ValueError(f"bad community name entry {part!r}; expected <id>=<name>")
        out[int(key)] = name.strip()
    return out


@dataclass
class PipelineConfig:
    tweets: Path | None = None
    articles: Path | None = None
    signals: Path | None = None
    lexicons: list[Path] = field(default_factory=list)
    model: Path | None = None
    training: Path | None = None
    output: Path = Path("coordprop_out")
    fraction: float = 0.01
    alpha: float = 0.05
    resolution: float = 1.0
    seed: int = 0
    names: dict[int, str] = field(default_factory=dict)
    chunk_tokens: int = 400
    lam: float = 1e-3
    train_seed: int = 0
    max_iter: int = 1000
    measures: list[str] = field(default_factory=lambda: ["M1"])
    primary: str = "M1"
    k_grid: tuple[float, ...] = field(default_factory=default_k_grid)
    threads: int = 1

    def validate(self) -> None:
        if not 0.0 < self.fraction <= 1.0:
            raise ValueError(f"fraction must be in (0, 1], got {self.fraction}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.chunk_tokens < 50:
            raise ValueError(f"chunk_tokens must be >= 50, got {self.chunk_tokens}")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.primary not in self.measures:
            self.measures = [self.primary] + list(self.measures)

    def update(self, **values) -> None:
        names = {f.name for f in fields(self)}
        for key, val in values.items():
            if val is None:
                continue
            if key not in names:
                raise KeyError(key)
            setattr(self, key, val)


def load_config(path=None) -> PipelineConfig:
    """Read an INI config; falls back to ``$COORDPROP_CONFIG``, then to defaults.

    Relative paths in the file are resolved against the file's directory.
    """
    cfg = PipelineConfig()
    if path is None:
        path = os.environ.get(CONFIG_ENV)
    if not path:
        return cfg
    path = Path(path)
    parser = configparser.ConfigParser()
    if not parser.read(path, encoding="utf-8"):
        raise FileNotFoundError(f"config file not found: {path}")
    by_section = {}
    for key, (section, attr, conv) in _KEYS.items():
        by_section.setdefault(section, {})[key] = (attr, conv)
    for section in parser.sections():
        if section not in by_section:
            raise ValueError(f"{path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in by_section[section]:
                raise ValueError(f"{path}: unknown key {key!r} in [{section}]")
            attr, conv = by_section[section][key]
            val = conv(raw)
            if section == "paths":
                val = [_resolve(path, p) for p in val] if isinstance(val, list) else _resolve(path, val)
            setattr(cfg, attr, val)
    return cfg


def _resolve(cfg_path: Path, p: Path) -> Path:
    return p if p.is_absolute() else (cfg_path.parent / p)
