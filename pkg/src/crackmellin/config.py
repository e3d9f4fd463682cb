"""Run configuration: flat ``key = value`` files plus command-line overrides."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError
from .solver import SolverParams
from .sources import SourceTerm, load_sampled, make_gamma_pair, zero_source

SOLVER_KEYS = ("kappa1", "kappa2", "k", "mu", "inversion_line_re", "contour_eps", "pv_reg_width",
               "y_max", "im_max", "n_nodes", "pv_step", "sign_audit", "coupling_correction")


@dataclass
class RunConfig:
    """Everything a run needs; field names are the config keys."""

    # physics and spectral settings (SolverParams)
    kappa1: float = 1.0
    kappa2: float = 1.0
    k: int = 0
    mu: float = 1.25
    vartheta: float = 0.4
    inversion_line_re: float = -0.75
    contour_eps: float = 0.25
    pv_reg_width: float = 1e-3
    y_max: float = 12.0
    im_max: float = 40.0
    n_nodes: int = 4096
    pv_step: float = 0.02
    sign_audit: bool = False
    coupling_correction: bool = False
    # datum
    source: str = "gamma_pair"
    a: float = 2.0
    b: float = 1.0
    c: float = 1.0
    d: float = 1.0
    source_path: str = ""
    compat_rel_tol: float = 1e-8
    # physical grids
    r_min: float = 1e-3
    r_max: float = 1e3
    n_r: int = 200
    n_theta: int = 64
    # bounds lab
    M: float = 5.0
    sigma: float = 0.25
    g2_sigma: float = 0.3
    bounds_extent: float = 50.0
    bounds_step: float = 0.5
    g2: bool = True
    # special-function table
    points: str = "0.5,1,0.25+3j,-0.75+2j"
    seed: int = 0

    def solver_params(self) -> SolverParams:
        kw = {key: getattr(self, key) for key in SOLVER_KEYS}
        return SolverParams(theta=self.vartheta, **kw)

    def build_source(self) -> SourceTerm:
        if self.source == "gamma_pair":
            return make_gamma_pair(self.a, self.b, self.c, self.d)
        if self.source == "csv":
            if not self.source_path:
                raise ConfigError("source = csv needs source_path")
            return load_sampled(self.source_path)
        if self.source == "zero":
            return zero_source()
        raise ConfigError(f"unknown source {self.source!r} (gamma_pair, csv, zero)")

    def validate(self) -> "RunConfig":
        """Check every window; the message names the violated inequality."""
        self.solver_params()   # exponent and vartheta windows
        if not 0 < self.r_min < self.r_max:
            raise ConfigError("parameter window violated: 0 < r_min < r_max")
        if self.n_r < 3 or self.n_theta < 3:
            raise ConfigError("parameter window violated: n_r >= 3 and n_theta >= 3")
        if not self.M > 0:
            raise ConfigError("parameter window violated: M > 0")
        lo, hi = max(-0.5, -self.vartheta), 1.5 - self.vartheta
        if not lo < self.sigma < hi:
            raise ConfigError(f"parameter window violated: max(-1/2, -theta) < sigma < 3/2 - theta "
                              f"({lo:g} < sigma < {hi:g}, sigma = {self.sigma:g})")
        hi2 = min(0.5, self.vartheta)
        if not 0 < self.g2_sigma < hi2:
            raise ConfigError(f"parameter window violated: 0 < g2_sigma < min(1/2, theta) "
                              f"(g2_sigma = {self.g2_sigma:g}, bound {hi2:g})")
        if self.bounds_extent <= 4 * self.M + 1:
            raise ConfigError("parameter window violated: bounds_extent > 4 M + 1")
        if self.bounds_step <= 0:
            raise ConfigError("parameter window violated: bounds_step > 0")
        if self.source not in ("gamma_pair", "csv", "zero"):
            raise ConfigError(f"unknown source {self.source!r} (gamma_pair, csv, zero)")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_text(self) -> str:
        return "".join(f"{k} = {_fmt(v)}\n" for k, v in self.to_dict().items())


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key: str, raw: str):
    if key not in _TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    typ = _TYPES[key]
    raw = raw.strip()
    try:
        if typ == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ == "int":
            return int(raw)
        if typ == "float":
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError(raw)
            return v
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r} (expected {typ})") from None


def parse_text(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, val = (part.strip() for part in line.split("=", 1))
        out[key] = _convert(key, val)
    return out


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> RunConfig:
    """RunConfig from an optional file, then string overrides, then validation."""
    values = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        values.update(parse_text(text))
    for key, raw in (overrides or {}).items():
        values[key] = _convert(key, raw) if isinstance(raw, str) else raw
    return RunConfig(**values).validate()
