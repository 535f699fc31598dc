"""Defaults and the key-value config file.

Config files are plain text, one ``key = value`` per line, ``#`` comments.
Recognized keys (all optional):

    detector.h_spatial_sigma      pixels
    detector.h_range_sigma        OD
    detector.dab_spatial_sigma    pixels
    detector.dab_range_sigma      OD
    detector.min_distance         um
    detector.h_maxima_threshold   OD
    detector.dab_minima_threshold OD
    detector.min_nucleus_area     um^2
    detector.dab_region_threshold OD
    membrane.t_weak               OD
    membrane.t_intense            OD
    membrane.d                    um
    membrane.enhancement          "lo,hi" percentiles or "off"
    rules                         rule table id (default "breast")
    workers                       worker pool size
    storage_root                  session storage directory
    listen                        host:port for the service
    token                         shared bearer token ("" disables auth)

Environment overrides: HER2SCOPE_STORAGE_ROOT, HER2SCOPE_LISTEN.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .detect import DetectorParams
from .errors import ConfigurationError
from .membrane import MembraneParams


@dataclass(frozen=True)
class AppConfig:
    detector: DetectorParams = field(default_factory=DetectorParams)
    membrane: MembraneParams = field(default_factory=MembraneParams)
    rules: str = "breast"
    workers: int = 8
    storage_root: str = "./her2scope-sessions"
    listen: str = "127.0.0.1:8417"
    token: str = ""


def _parse_lines(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"config line {lineno} is not 'key = value': {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _set_param(params, prefix: str, key: str, value: str):
    name = key[len(prefix) :]
    if name not in {f.name for f in dataclasses.fields(params)}:
        raise ConfigurationError(f"unknown config key: {key}")
    return replace(params, **{name: float(value)})


def load_config(path: str | Path | None = None) -> AppConfig:
    """Read a config file (if any) and apply environment overrides."""
    cfg = AppConfig()
    if path is not None:
        entries = _parse_lines(Path(path).read_text())
        det = cfg.detector
        mem = cfg.membrane
        for key, value in entries.items():
            try:
                if key.startswith("detector."):
                    det = _set_param(det, "detector.", key, value)
                elif key == "membrane.enhancement":
                    if value.lower() in ("off", "none", ""):
                        mem = replace(mem, enhancement=None)
                    else:
                        lo, hi = (float(v) for v in value.split(","))
                        mem = replace(mem, enhancement=(lo, hi))
                elif key.startswith("membrane."):
                    mem = _set_param(mem, "membrane.", key, value)
                elif key == "rules":
                    cfg = replace(cfg, rules=value)
                elif key == "workers":
                    cfg = replace(cfg, workers=int(value))
                elif key == "storage_root":
                    cfg = replace(cfg, storage_root=value)
                elif key == "listen":
                    cfg = replace(cfg, listen=value)
                elif key == "token":
                    cfg = replace(cfg, token=value)
                else:
                    raise ConfigurationError(f"unknown config key: {key}")
            except ValueError as exc:
                raise ConfigurationError(f"bad value for {key}: {value!r} ({exc})") from exc
        cfg = replace(cfg, detector=det, membrane=mem)
    if os.environ.get("HER2SCOPE_STORAGE_ROOT"):
        cfg = replace(cfg, storage_root=os.environ["HER2SCOPE_STORAGE_ROOT"])
    if os.environ.get("HER2SCOPE_LISTEN"):
        cfg = replace(cfg, listen=os.environ["HER2SCOPE_LISTEN"])
    return cfg
