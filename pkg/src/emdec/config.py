"""Run configuration: line-oriented `key = value` files with dotted sections.

Unknown keys are hard errors (no silently ignored typos), `#` starts a
comment, and values are whitespace-separated scalars.  Source expressions
are parsed eagerly so a bad expression fails before any simulation starts.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .errors import ConfigError, ExpressionError
from .expressions import Expression, parse_expression

_REQUIRED = ("mesh.kind", "run.scheme", "run.t_final")

_SCHEMA = {
    "mesh.kind": ("str", ("rect", "rect_random", "file")),
    "mesh.extents": ("floats", None),
    "mesh.counts": ("ints", None),
    "mesh.path": ("str", None),
    "mesh.seed": ("int", None),
    "material.epsilon": ("float", None),
    "material.mu": ("float", None),
    "run.scheme": ("str", ("yee", "bk", "avi")),
    "run.t_final": ("float", None),
    "run.dt": ("float", None),
    "run.dt_safety": ("float", None),
    "run.dt_rule": ("str", ("local", "global")),
    "run.seed": ("int", None),
    "run.init": ("str", ("random", "zero")),
    "run.jitter": ("float", None),
    "output.dir": ("str", None),
    "output.cadence": ("int", None),
    "output.snapshots": ("int", None),
    "output.spectrum": ("int", None),
    "probe.edges": ("ints", None),
    "probe.faces": ("ints", None),
    "source.jx": ("expr", None),
    "source.jy": ("expr", None),
    "source.jz": ("expr", None),
    "source.rho": ("expr", None),
}


@dataclass
class Config:
    """Validated run configuration with documented defaults."""

    mesh_kind: str
    scheme: str
    t_final: float
    mesh_extents: tuple = (1.0, 1.0)
    mesh_counts: tuple = (16, 16)
    mesh_path: str | None = None
    mesh_seed: int = 0
    epsilon: float = 1.0
    mu: float = 1.0
    dt: float | None = None
    dt_safety: float = 0.1
    dt_rule: str = "local"
    seed: int = 0
    init: str = "random"
    jitter: float = 0.0
    output_dir: str = "out"
    cadence: int = 1
    snapshots: int = 0
    spectrum: int = 1
    probe_edges: tuple = ()
    probe_faces: tuple = ()
    jx: Expression | None = None
    jy: Expression | None = None
    jz: Expression | None = None
    rho: Expression | None = None
    raw_text: str = field(default="", repr=False)


def parse_config(text: str, base_dir: str | None = None) -> Config:
    """Parse and fully validate a config; errors carry the offending line."""
    values: dict[str, object] = {}
    lines_of: dict[str, int] = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected 'key = value', got {stripped!r}", ln)
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key {key!r}", ln)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", ln)
        if not value:
            raise ConfigError(f"missing value for {key!r}", ln)
        values[key] = _convert(key, value, ln)
        lines_of[key] = ln

    for key in _REQUIRED:
        if key not in values:
            raise ConfigError(f"missing required key {key!r}", None)

    cfg = Config(
        mesh_kind=values["mesh.kind"],
        scheme=values["run.scheme"],
        t_final=values["run.t_final"],
        raw_text=text,
    )
    assign = {
        "mesh.extents": "mesh_extents", "mesh.counts": "mesh_counts",
        "mesh.path": "mesh_path", "mesh.seed": "mesh_seed",
        "material.epsilon": "epsilon", "material.mu": "mu",
        "run.dt": "dt", "run.dt_safety": "dt_safety", "run.dt_rule": "dt_rule",
        "run.seed": "seed", "run.init": "init", "run.jitter": "jitter",
        "output.dir": "output_dir", "output.cadence": "cadence",
        "output.snapshots": "snapshots", "output.spectrum": "spectrum",
        "probe.edges": "probe_edges", "probe.faces": "probe_faces",
        "source.jx": "jx", "source.jy": "jy", "source.jz": "jz",
        "source.rho": "rho",
    }
    for key, attr in assign.items():
        if key in values:
            setattr(cfg, attr, values[key])

    _validate(cfg, values, lines_of, base_dir)
    return cfg


def _convert(key: str, value: str, ln: int):
    kind, allowed = _SCHEMA[key]
    try:
        if kind == "str":
            if allowed and value not in allowed:
                raise ConfigError(
                    f"{key} must be one of {', '.join(allowed)}; got {value!r}", ln)
            return value
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
        if kind == "ints":
            return tuple(int(v) for v in value.split())
        if kind == "floats":
            return tuple(float(v) for v in value.split())
        if kind == "expr":
            return parse_expression(value)
    except ConfigError:
        raise
    except ExpressionError as exc:
        raise ConfigError(f"bad expression for {key}: {exc}", ln) from exc
    except ValueError as exc:
        raise ConfigError(f"bad {kind} value for {key}: {value!r}", ln) from exc
    raise ConfigError(f"unhandled key kind {kind}", ln)


def _validate(cfg: Config, values, lines_of, base_dir):
    def line(key):
        return lines_of.get(key)

    if cfg.t_final < 0:
        raise ConfigError("run.t_final must be >= 0", line("run.t_final"))
    if not 0.0 < cfg.dt_safety <= 1.0:
        raise ConfigError("run.dt_safety must lie in (0, 1]", line("run.dt_safety"))
    if cfg.dt is not None and cfg.dt <= 0:
        raise ConfigError("run.dt must be positive", line("run.dt"))
    if cfg.jitter < 0:
        raise ConfigError("run.jitter must be >= 0", line("run.jitter"))
    if cfg.cadence < 1:
        raise ConfigError("output.cadence must be >= 1", line("output.cadence"))
    if cfg.epsilon <= 0 or cfg.mu <= 0:
        raise ConfigError("material constants must be positive",
                          line("material.epsilon") or line("material.mu"))
    if cfg.mesh_kind in ("rect", "rect_random"):
        if len(cfg.mesh_extents) != len(cfg.mesh_counts):
            raise ConfigError("mesh.extents and mesh.counts lengths differ",
                              line("mesh.counts"))
        if len(cfg.mesh_extents) not in (2, 3):
            raise ConfigError("mesh dimension must be 2 or 3", line("mesh.extents"))
        if any(e <= 0 for e in cfg.mesh_extents):
            raise ConfigError("mesh.extents must be positive", line("mesh.extents"))
        if any(c < 1 for c in cfg.mesh_counts):
            raise ConfigError("mesh.counts must be >= 1", line("mesh.counts"))
    if cfg.mesh_kind == "file":
        if cfg.mesh_path is None:
            raise ConfigError("mesh.kind = file requires mesh.path", line("mesh.kind"))
        path = cfg.mesh_path
        if base_dir is not None and not os.path.isabs(path):
            path = os.path.join(base_dir, path)
            cfg.mesh_path = path
        if not os.path.exists(path):
            raise ConfigError(f"mesh file {path!r} does not exist", line("mesh.path"))
        if cfg.scheme == "yee":
            raise ConfigError("scheme yee requires a rectangular mesh "
                              "(use bk or avi for file meshes)", line("run.scheme"))
    if cfg.scheme == "avi" and cfg.mesh_kind == "file" and cfg.dt is not None:
        pass  # explicit uniform step on a file mesh is allowed
