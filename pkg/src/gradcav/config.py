"""Run configuration: flat ``key = value`` files plus command-line overrides."""
import hashlib
import json
import math
from dataclasses import asdict, dataclass, fields, replace

from . import __version__
from .observables import Regulator
from .spectrum import CavityGeometry, DielectricProfile
from .units import UnitSystem

# keys that do not change any computed number and are left out of the hash
_UNHASHED = ("out", "threads")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    Lx: float = 1.0
    Ly: float = 1.0
    Lz: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0
    units: str = "natural"
    omega_max: float = 25.0
    n_modes: int = 50
    regulator: str = "exponential"
    kappa: float = 0.2
    allow_unregulated: bool = False
    hom_eps_r: float = None  # default beta * exp(alpha / 2)
    tm_p0: bool = True
    quad_rtol: float = 1e-10
    tail_rtol: float = 1e-8
    verify_tol: float = 1e-6
    out: str = "out"
    threads: int = 1

    def __post_init__(self):
        for k in ("Lx", "Ly", "Lz", "beta", "omega_max"):
            v = getattr(self, k)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{k} must be positive, got {v!r}")
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ConfigError(f"alpha must be positive, got {self.alpha!r}")
        if self.units not in ("natural", "SI"):
            raise ConfigError("units must be 'natural' or 'SI'")
        if self.regulator not in ("exponential", "gaussian", "none"):
            raise ConfigError(f"unknown regulator {self.regulator!r}")
        if not (math.isfinite(self.kappa) and self.kappa >= 0):
            raise ConfigError("kappa must be >= 0")
        if self.n_modes < 1:
            raise ConfigError("n_modes must be >= 1")
        if self.hom_eps_r is not None and not self.hom_eps_r > 0:
            raise ConfigError("hom_eps_r must be positive")
        if not 1e-14 <= self.quad_rtol <= 1e-4:
            raise ConfigError("quad_rtol must lie in [1e-14, 1e-4]")
        if not 0 < self.tail_rtol <= 1:
            raise ConfigError("tail_rtol must lie in (0, 1]")
        if not 0 < self.verify_tol < 1:
            raise ConfigError("verify_tol must lie in (0, 1)")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    # -- serialisation -------------------------------------------------
    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name: f for f in fields(cls)}
        unknown = set(d) - set(known)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**{k: _coerce(known[k], v) for k, v in d.items()})

    def to_text(self):
        lines = []
        for k, v in self.to_dict().items():
            if v is None:
                continue
            lines.append(f"{k} = {_fmt(v)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        return cls.from_dict(parse_kv(text))

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        if not kw:
            return self
        d = self.to_dict()
        d.update(kw)
        return type(self).from_dict(d)

    @property
    def config_hash(self):
        d = {k: v for k, v in self.to_dict().items() if k not in _UNHASHED}
        d["code_version"] = __version__
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()

    # -- natural-unit views --------------------------------------------
    @property
    def unit_system(self):
        return UnitSystem(self.Lz if self.units == "SI" else 1.0)

    def geometry(self):
        s = self.Lz
        return CavityGeometry(self.Lx / s, self.Ly / s, 1.0)

    def profile(self):
        return DielectricProfile(beta=self.beta, alpha=self.alpha)

    def omega_max_nat(self):
        if self.units == "SI":
            return self.unit_system.omega_to_nat(self.omega_max)
        return self.omega_max * self.Lz

    def kappa_nat(self):
        if self.units == "SI":
            return self.unit_system.time_to_nat(self.kappa)
        return self.kappa / self.Lz

    def regulator_nat(self):
        return Regulator(self.regulator, self.kappa_nat())

    def hom_eps(self):
        return self.hom_eps_r if self.hom_eps_r is not None else self.beta * math.exp(0.5 * self.alpha)

    # output scaling: natural (Lz = 1) -> user units
    def omega_out(self, w):
        if self.units == "SI":
            return self.unit_system.omega_to_si(w)
        return w / self.Lz

    def length_out(self, v):
        return v * self.Lz

    def energy_out(self, e):
        if self.units == "SI":
            return e * self.unit_system.energy
        return e / self.Lz

    def force_out(self, f):
        if self.units == "SI":
            return f * self.unit_system.force
        return f / self.Lz ** 2

    def field_scales(self):
        """Multipliers for A, e, b, d, h (computed with Lz = 1) in output units."""
        if self.units == "SI":
            return self.unit_system.field_scales()
        L = self.Lz
        return {"A": 1.0 / L, "e": 1.0 / L ** 2, "b": 1.0 / L ** 2, "d": 1.0 / L ** 2, "h": 1.0 / L ** 2}


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _coerce(f, v):
    if v is None or (isinstance(v, str) and v.strip().lower() in ("", "none", "null") and f.name == "hom_eps_r"):
        return None
    typ = f.type if isinstance(f.type, type) else {"float": float, "int": int, "str": str, "bool": bool}.get(f.type)
    if f.name == "hom_eps_r":
        typ = float
    if typ is bool:
        if isinstance(v, bool):
            return v
        s = str(v).strip().lower()
        if s in ("1", "true", "yes", "on"):
            return True
        if s in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{f.name}: not a boolean: {v!r}")
    try:
        if typ is int:
            fv = float(v)
            if fv != int(fv):
                raise ValueError
            return int(fv)
        if typ is float:
            return float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{f.name}: cannot parse {v!r}") from None
    return str(v).strip()


def parse_kv(text):
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value")
        k, v = line.split("=", 1)
        k = k.strip()
        if k in out:
            raise ConfigError(f"line {n}: duplicate key {k!r}")
        out[k] = v.strip()
    return out


def load_config(path=None, **overrides):
    base = RunConfig()
    if path is not None:
        with open(path) as fh:
            base = RunConfig.from_text(fh.read())
    return base.with_overrides(**overrides)


__all__ = ["RunConfig", "ConfigError", "load_config", "parse_kv", "replace"]
