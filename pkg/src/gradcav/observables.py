"""Per-mode vacuum expectation values and regularised spectral sums.

For a single mode in the Fock vacuum the symmetrised expectation of a
product of two Hermitian field operators built on the same mode is
Re(X+ conj(Y+)), independent of time.  Energies and face forces below are
integrals of such bilinears.

Face force convention: F(z0) is the zz component of the Minkowski stress,

    sigma_zz = 1/2 (<d_z e_z> + <b_z h_z> - <d_x e_x> - <d_y e_y> - <b_x h_x> - <b_y h_y>),

integrated over the plane z = z0.  On a conducting end wall only e_z and
the tangential b survive; a negative value pushes the wall outwards.
"""
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .fields import _components, _require_solved, transverse_order
from .quadrature import QuadratureError, adaptive_quad, gauss_legendre
from .spectrum import SpectrumTable

__all__ = [
    "Regulator",
    "VacuumSumResult",
    "ModeEnergy",
    "vacuum_bilinear",
    "mode_energy",
    "face_force",
    "force_difference_mode",
    "force_difference_closed_form",
    "regularized_sum",
    "homogeneous_subtraction",
    "kahan_sum",
    "tail_bound",
    "QuadratureError",
]

KINDS = ("exponential", "gaussian", "none")


@dataclass(frozen=True)
class Regulator:
    kind: str = "exponential"
    kappa: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"regulator kind must be one of {KINDS}, got {self.kind!r}")
        if not (math.isfinite(self.kappa) and self.kappa >= 0):
            raise ValueError(f"kappa must be finite and >= 0, got {self.kappa!r}")
        object.__setattr__(self, "kappa", float(self.kappa))

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        if self.kind == "none" or self.kappa == 0.0:
            return np.ones_like(omega)
        if self.kind == "exponential":
            return np.exp(-self.kappa * omega)
        return np.exp(-((self.kappa * omega) ** 2))


@dataclass(frozen=True)
class VacuumSumResult:
    observable: str
    value: float
    mode_count: int
    tail_bound: float
    regulator: Regulator
    table_hash: str
    complete: bool = True
    convention_constant: float = 1.0
    warnings: tuple = field(default=())

    def to_json_dict(self):
        return {
            "observable": self.observable,
            "value": self.value,
            "kappa": self.regulator.kappa,
            "regulator": self.regulator.kind,
            "mode_count": self.mode_count,
            "tail_bound": self.tail_bound,
            "complete": self.complete,
            "convention_constant": self.convention_constant,
            "table_hash": self.table_hash,
            "warnings": list(self.warnings),
        }


@dataclass(frozen=True)
class ModeEnergy:
    total: float
    electric: float
    magnetic: float
    error: float

    def __float__(self):
        return self.total


def vacuum_bilinear(x_plus, y_plus):
    """Vacuum expectation of the symmetrised product of two same-mode operators."""
    return np.real(np.asarray(x_plus) * np.conj(np.asarray(y_plus)))


def _xy_grid(mode, geometry):
    n = transverse_order(mode)
    xs, wx = gauss_legendre(n, 0.0, geometry.Lx)
    ys, wy = gauss_legendre(n, 0.0, geometry.Ly)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return X[..., None], Y[..., None], np.outer(wx, wy)


def _face_fields(mode, geometry, profile, X, Y, zs):
    """e, d, b, h (complex, shape (nx, ny, nz, 3)) on a tensor grid."""
    A, B = _components(mode, geometry, profile, X, Y, zs[None, None, :])
    e = 1j * mode.omega * A
    d = profile.permittivity(zs, geometry.Lz)[None, None, :, None] * e
    b = B.astype(complex)
    h = b / profile.mu0
    return e, d, b, h


def mode_energy(mode, geometry, profile, rtol=1e-10, parts=False):
    """Integral of 1/2 (<e.d> + <b.h>) over the box.

    x, y: Gauss-Legendre of order 2 max(n_x, n_y) + 16; z: adaptive.
    Returns a float, or a :class:`ModeEnergy` with the electric and magnetic
    halves when ``parts`` is true.
    """
    _require_solved(mode)
    X, Y, W = _xy_grid(mode, geometry)

    def integrand(zs):
        e, d, b, h = _face_fields(mode, geometry, profile, X, Y, zs)
        ue = 0.5 * np.sum(vacuum_bilinear(e, d), axis=-1)
        um = 0.5 * np.sum(vacuum_bilinear(b, h), axis=-1)
        return np.stack([np.einsum("ij,ijk->k", W, ue), np.einsum("ij,ijk->k", W, um)])

    val, err = adaptive_quad(integrand, 0.0, geometry.Lz, rtol=rtol, initial_panels=2)
    ue, um = float(val[0]), float(val[1])
    if parts:
        return ModeEnergy(ue + um, ue, um, float(err))
    return ue + um


def face_force(mode, geometry, profile, z0):
    """Vacuum expectation of the normal stress integrated over the plane z = z0."""
    _require_solved(mode)
    if not 0.0 <= z0 <= geometry.Lz:
        raise ValueError("z0 outside [0, Lz]")
    X, Y, W = _xy_grid(mode, geometry)
    e, d, b, h = _face_fields(mode, geometry, profile, X, Y, np.array([float(z0)]))
    de = vacuum_bilinear(d, e)[..., 0, :]
    bh = vacuum_bilinear(b, h)[..., 0, :]
    s = 0.5 * (de[..., 2] + bh[..., 2] - de[..., 0] - de[..., 1] - bh[..., 0] - bh[..., 1])
    return float(np.sum(W * s))


def force_difference_mode(mode, geometry, profile):
    """F(0) - F(Lz) for one mode."""
    return face_force(mode, geometry, profile, 0.0) - face_force(mode, geometry, profile, geometry.Lz)


def force_difference_closed_form(mode, geometry, profile):
    """hbar alpha omega / (4 Lz)."""
    return profile.hbar * profile.alpha * mode.omega / (4.0 * geometry.Lz)


def kahan_sum(values):
    """Compensated (Neumaier) sum in the given order."""
    s = 0.0
    c = 0.0
    for v in values:
        v = float(v)
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
    return s + c


def _weight_prefactor(observable, geometry, profile):
    if observable == "energy":
        return 0.5 * profile.hbar
    if observable == "force_difference":
        return profile.hbar * profile.alpha / (4.0 * geometry.Lz)
    raise ValueError(f"unknown observable {observable!r}")


def tail_bound(table, regulator, observable="energy"):
    """Heuristic bound on the omitted sum beyond omega_max.

    Uses a Weyl-type density dN/domega = V beta^{3/2} e^{3 alpha/2} omega^2 / (pi^2 c0^3)
    (an overestimate of the graded cavity's mode density).
    """
    pr = table.profile
    W = table.omega_max
    k = regulator.kappa
    dens = table.geometry.volume * (pr.beta * math.exp(pr.alpha)) ** 1.5 / (math.pi ** 2 * pr.c0 ** 3)
    pref = _weight_prefactor(observable, table.geometry, pr)
    if pref == 0.0:
        return 0.0
    if regulator.kind == "none" or k == 0.0:
        return math.inf
    if regulator.kind == "exponential":
        # int_W^inf w^3 exp(-k w) dw
        t = k * W
        integral = math.exp(-t) * (W ** 3 / k + 3 * W ** 2 / k ** 2 + 6 * W / k ** 3 + 6 / k ** 4)
    else:
        # int_W^inf w^3 exp(-k^2 w^2) dw
        t = (k * W) ** 2
        integral = math.exp(-t) * (t + 1.0) / (2.0 * k ** 4)
    return abs(pref) * dens * integral


def regularized_sum(table, regulator, observable="energy", allow_unregulated=False, rtol=1e-8):
    """Sum of closed-form per-mode weights over the table, ascending in omega.

    energy: (hbar/2) omega psi; force_difference: (hbar alpha / 4 Lz) omega psi.
    """
    if regulator.kappa == 0.0 or regulator.kind == "none":
        if not allow_unregulated:
            raise ValueError("unregulated sum needs allow_unregulated=True (truncated at omega_max)")
    pref = _weight_prefactor(observable, table.geometry, table.profile)
    om = table.omegas
    terms = pref * om * regulator(om)
    value = kahan_sum(terms)
    tb = tail_bound(table, regulator, observable)
    complete = tb <= rtol * abs(value) if value != 0.0 else tb == 0.0
    warnings = () if complete else (f"tail bound {tb:.3e} exceeds {rtol:g} x |value|",)
    return VacuumSumResult(observable, value, len(table), tb, regulator, table.content_hash, complete,
                           1.0, warnings)


def homogeneous_subtraction(inhom, hom, regulator, rtol=1e-8):
    """regularized_sum(inhom) - regularized_sum(hom) at the same finite kappa (energy)."""
    if inhom.geometry != hom.geometry:
        raise ValueError("tables have different geometries")
    if not regulator.kappa > 0 or regulator.kind == "none":
        raise ValueError("subtraction needs a finite regulator strength kappa > 0")
    a = regularized_sum(inhom, regulator, "energy", rtol=rtol)
    b = regularized_sum(hom, regulator, "energy", rtol=rtol)
    value = a.value - b.value
    tb = a.tail_bound + b.tail_bound
    complete = a.complete and b.complete
    th = f"{a.table_hash}-{b.table_hash}"
    return VacuumSumResult("energy_subtracted", value, len(inhom) + len(hom), tb, regulator, th, complete, 1.0,
                           a.warnings + b.warnings)
