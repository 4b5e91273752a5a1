"""Run configuration, config-file parsing and output manifests.

Configuration values resolve with precedence command line > config file >
defaults.  The config file is a flat `key = value` text format with dotted
keys (`metric.family`, `sde.dt`, `rng.seed`); JSON files are accepted too.
"""

import hashlib
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .. import __version__
from ..errors import ConfigError

__all__ = ["SimConfig", "RunManifest", "load_config_file", "parse_value"]

KNOWN_KEYS = {
    "sigma": "sigma",
    "dim": "dim",
    "metric.family": "metric_family",
    "metric.beta": "metric_beta",
    "metric.c": "metric_c",
    "horizon": "horizon",
    "sde.dt": "dt",
    "sde.scheme": "scheme",
    "rng.seed": "seed",
    "paths": "paths",
    "stride": "record_stride",
    "out": "out_dir",
    "threads": "threads",
}


def parse_value(text):
    """Best-effort scalar parse: int, float, bool, then plain string."""
    t = text.strip()
    low = t.lower()
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float):
        try:
            return cast(t)
        except ValueError:
            continue
    return t


def load_config_file(path):
    """Flat dotted-key config file (or JSON) -> dict of SimConfig field values."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    raw = {}
    if path.suffix == ".json":
        raw = json.loads(text)
    else:
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            raw[key.strip()] = parse_value(val)
    out = {}
    for key, val in raw.items():
        if key not in KNOWN_KEYS:
            raise ConfigError(f"unknown config key '{key}'")
        out[KNOWN_KEYS[key]] = val
    return out


@dataclass
class SimConfig:
    """Validated run parameters shared by every command."""

    sigma: float = 1.0
    dim: int = 3
    metric_family: str = "euclidean"
    metric_beta: float = None
    metric_c: float = None
    horizon: float = 10.0
    dt: float = 1e-3
    scheme: str = "ito_euler_project"
    seed: int = None
    paths: int = 1
    record_stride: int = 1
    out_dir: str = "out"
    threads: int = 1

    def validate(self, command=None):
        if self.sigma < 0:
            raise ConfigError("sigma must be >= 0")
        if self.paths < 1:
            raise ConfigError("paths must be >= 1")
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        if self.dt > self.horizon / 100.0:
            raise ConfigError("dt must be at most horizon/100")
        if self.record_stride < 1:
            raise ConfigError("stride must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if command in ("polar", "radial", "lift", "develop") and self.dim < 3:
            raise ConfigError(
                f"command '{command}' needs dim >= 3 (dim = 2 is served by the "
                "h2 command)"
            )
        if self.dim < 2:
            raise ConfigError("dim must be >= 2")
        return self

    def metric(self):
        from ..geometry import model_space

        kw = {}
        if self.metric_family in ("polynomial", "subexponential"):
            if self.metric_beta is None:
                raise ConfigError(f"metric '{self.metric_family}' needs metric.beta")
            kw["beta"] = self.metric_beta
        if self.metric_family == "exponential":
            if self.metric_c is None:
                raise ConfigError("metric 'exponential' needs metric.c")
            kw["c"] = self.metric_c
        return model_space(self.metric_family, **kw)

    def snapshot(self):
        return asdict(self)


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


@dataclass
class RunManifest:
    """Inventory of a run: config, version, timing, results, file hashes."""

    config: dict
    command: str
    tool_version: str = __version__
    wall_time_s: float = 0.0
    results: list = field(default_factory=list)
    files: dict = field(default_factory=dict)
    started: float = field(default_factory=time.time)

    def add_file(self, path):
        path = Path(path)
        self.files[path.name] = _sha256(path)

    def finish(self, out_dir):
        self.wall_time_s = time.time() - self.started
        out = Path(out_dir) / "manifest.json"
        payload = {
            "command": self.command,
            "config": self.config,
            "tool_version": self.tool_version,
            "wall_time_s": round(self.wall_time_s, 3),
            "results": self.results,
            "files": self.files,
        }
        out.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n")
        return out

    def verify_files(self, out_dir):
        """Every listed file must exist with a matching hash."""
        for name, digest in self.files.items():
            p = Path(out_dir) / name
            if not p.exists():
                raise ConfigError(f"manifest lists missing file {name}")
            if _sha256(p) != digest:
                raise ConfigError(f"manifest hash mismatch for {name}")
        return True
