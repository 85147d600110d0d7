"""Mode profiles, vector potentials, derived fields and normalisation.

Stored fields are the positive-frequency coefficients A+ of the stationary
mode A(t) = A+ exp(-i omega t) + conj(A+) exp(+i omega t), so e+ = i omega A+,
b+ = curl A+, d+ = eps(z) e+, h+ = b+ / mu0.  The curl is taken
analytically from the closed-form potentials.

TE (P = N / eps0, f = Phi(eta(z))):
    A = P f (-k_y cos(k_x x) sin(k_y y), k_x sin(k_x x) cos(k_y y), 0)
TM (P = N omega / (eps0 c0)):
    A = P ((Phi' + Phi/eta) k_x cos sin, (Phi' + Phi/eta) k_y sin cos,
           alpha (nu^2 - 1) Phi / (2 Lz eta) sin sin)
"""
import math
from dataclasses import dataclass, replace

import numpy as np

from .bessel import jy_scaled_array
from .quadrature import adaptive_quad, gauss_legendre
from .spectrum import Polarization, SpectrumTable

__all__ = [
    "ComplexModeField",
    "NormalizationResult",
    "NormalizationError",
    "phi_profile",
    "eval_potential",
    "eval_fields",
    "normalization",
    "normalize_mode",
    "normalize_table",
    "gauge_divergence",
    "helmholtz_residual",
    "inner_product",
    "potential_amplitude",
    "transverse_order",
]


class NormalizationError(ArithmeticError):
    """Non-positive squared normalisation: upstream root or branch error."""


@dataclass(frozen=True)
class ComplexModeField:
    position: tuple
    A: np.ndarray
    e: np.ndarray
    b: np.ndarray
    d: np.ndarray
    h: np.ndarray


@dataclass(frozen=True)
class NormalizationResult:
    norm: float
    norm_sq: float
    I_value: float
    Omega: float
    branch: str
    transverse_factor: float


def phi_profile(pol, nu, zeta, eta_value, branch="J+zY"):
    """Radial profile Phi(eta) and dPhi/deta.

    ``branch`` selects Phi = J + zeta Y (default) or Phi = zeta J + Y.
    The ``pol`` argument is accepted for symmetry with the other calls; both
    polarisations share the same cylinder-function form.
    """
    Polarization(pol)
    eta_value = np.asarray(eta_value, dtype=float)
    k = jy_scaled_array(nu, eta_value)
    with np.errstate(over="raise", invalid="raise"):
        ej = np.exp(k[..., 2])
        ey = np.exp(k[..., 5])
        if branch == "J+zY":
            cj, cy = 1.0, zeta
        elif branch == "zJ+Y":
            cj, cy = zeta, 1.0
        else:
            raise ValueError(f"unknown branch {branch!r}")
        phi = cj * k[..., 0] * ej + cy * k[..., 3] * ey
        dphi = cj * k[..., 1] * ej + cy * k[..., 4] * ey
    if phi.ndim == 0:
        return float(phi), float(dphi)
    return phi, dphi


def _require_solved(mode):
    if mode.norm is None or not mode.solved or mode.index.homogeneous:
        raise ValueError(f"mode {mode.index} is not a solved, normalised graded-cavity mode")


def _axial(mode, geometry, profile, z):
    """eta, Phi, Phi' on z (exact exponent at z = Lz)."""
    z = np.asarray(z, dtype=float)
    zu, inv = np.unique(z, return_inverse=True)
    et = mode.eta0 * np.exp(0.5 * profile.alpha * (zu / geometry.Lz))
    et = np.where(zu == geometry.Lz, mode.etaL, et)
    phi, dphi = phi_profile(mode.pol, mode.nu, mode.zeta, et, mode.branch)
    inv = inv.reshape(z.shape)
    return et[inv], np.asarray(phi)[inv], np.asarray(dphi)[inv]


def _check_inside(geometry, x, y, z):
    for v, L, name in ((x, geometry.Lx, "x"), (y, geometry.Ly, "y"), (z, geometry.Lz, "z")):
        v = np.asarray(v)
        if np.any(v < 0) or np.any(v > L):
            raise ValueError(f"{name} outside the closed box [0, {L}]")


def _components(mode, geometry, profile, x, y, z):
    # returns A (real, shape (..., 3)) and b (real, shape (..., 3))
    x, y, z = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, z)))
    kx, ky = mode.k_x, mode.k_y
    L = geometry.Lz
    a = profile.alpha
    et, phi, dphi = _axial(mode, geometry, profile, z)
    sx, cx = np.sin(kx * x), np.cos(kx * x)
    sy, cy = np.sin(ky * y), np.cos(ky * y)
    A = np.empty(x.shape + (3,))
    B = np.empty(x.shape + (3,))
    if mode.pol is Polarization.TE:
        P = mode.norm / profile.eps0
        fz = (0.5 * a / L) * et * dphi
        A[..., 0] = -P * ky * phi * cx * sy
        A[..., 1] = P * kx * phi * sx * cy
        A[..., 2] = 0.0
        B[..., 0] = -P * kx * fz * sx * cy
        B[..., 1] = -P * ky * fz * cx * sy
        B[..., 2] = P * (kx * kx + ky * ky) * phi * cx * cy
    else:
        P = mode.norm * mode.omega / (profile.eps0 * profile.c0)
        u = dphi + phi / et
        # alpha (nu^2 - 1) / (2 Lz) = (2 Lz / alpha) k_perp^2, written without the subtraction
        w = (2.0 * L / a) * (kx * kx + ky * ky) * phi / et
        g = (0.5 * a / L) * et * phi
        A[..., 0] = P * kx * u * cx * sy
        A[..., 1] = P * ky * u * sx * cy
        A[..., 2] = P * w * sx * sy
        B[..., 0] = P * ky * g * sx * cy
        B[..., 1] = -P * kx * g * cx * sy
        B[..., 2] = 0.0
    return A, B


def eval_potential(mode, geometry, profile, x, y, z):
    """Complex A+ components (dx, dy, dz coefficients), shape (..., 3)."""
    _require_solved(mode)
    _check_inside(geometry, x, y, z)
    A, _ = _components(mode, geometry, profile, x, y, z)
    return A.astype(complex)


def eval_fields(mode, geometry, profile, x, y, z):
    _require_solved(mode)
    _check_inside(geometry, x, y, z)
    A, B = _components(mode, geometry, profile, x, y, z)
    A = A.astype(complex)
    e = 1j * mode.omega * A
    eps = profile.permittivity(np.broadcast_to(np.asarray(z, dtype=float), A.shape[:-1]), geometry.Lz)
    d = eps[..., None] * e
    b = B.astype(complex)
    h = b / profile.mu0
    return ComplexModeField((x, y, z), A, e, b, d, h)


def transverse_order(mode):
    """Gauss-Legendre order for the x, y integrals."""
    return 2 * max(mode.index.n_x, mode.index.n_y) + 16


def normalization(mode, geometry, profile):
    """Closed-form normalisation fixing the mode energy to hbar omega / 2.

    TE modes with n_x = 0 or n_y = 0 carry an extra factor 1/2: their
    transverse pattern has a single component whose square averages to 1/2
    over the cross-section instead of 1/4.
    """
    if mode.index.homogeneous:
        raise ValueError("homogeneous reference records have no field normalisation")
    a = profile.alpha
    b = profile.beta
    L = geometry.Lz
    Om = mode.eta0
    ea = math.exp(a)
    phi, dphi = phi_profile(mode.pol, mode.nu, mode.zeta, np.array([Om, mode.etaL]), mode.branch)
    nu2 = mode.nu * mode.nu
    pref = profile.hbar * profile.eps0 / (profile.c0 * geometry.Lx * geometry.Ly)
    if mode.pol is Polarization.TE:
        I = ea * dphi[1] ** 2 - dphi[0] ** 2
        tf = 0.5 if mode.index.n_x == 0 or mode.index.n_y == 0 else 1.0
        nsq = tf * 16.0 * pref * L * L / (a * a * math.sqrt(b) * nu2 * I * Om)
    else:
        tf = 1.0
        I = (1.0 - nu2 + Om * Om * ea) * phi[1] ** 2 - (1.0 - nu2 + Om * Om) * phi[0] ** 2
        nu2m1 = (2.0 * L / a) ** 2 * (mode.k_x ** 2 + mode.k_y ** 2)
        nsq = 64.0 * pref * math.sqrt(b) * L ** 4 / (a ** 4 * nu2m1 * I * Om)
    if not (nsq > 0 and math.isfinite(nsq)):
        raise NormalizationError(f"norm^2 = {nsq!r} for {mode.index} (I = {I!r})")
    return NormalizationResult(math.sqrt(nsq), nsq, float(I), Om, mode.branch, tf)


def normalize_mode(mode, geometry, profile):
    return replace(mode, norm=normalization(mode, geometry, profile).norm)


def normalize_table(table):
    recs = tuple(normalize_mode(r, table.geometry, table.profile) for r in table.records)
    return SpectrumTable(table.geometry, table.profile, table.omega_max, recs, dict(table.provenance))


def potential_amplitude(mode, geometry, profile, n=9, weighted=False):
    """max |A| (or max eps |A| when ``weighted``) sampled on a grid; a field scale for relative checks."""
    _require_solved(mode)
    xs = np.linspace(0, geometry.Lx, 2 * n + 1)
    ys = np.linspace(0, geometry.Ly, 2 * n + 1)
    zs = np.linspace(0, geometry.Lz, n)
    X, Y, Z = np.meshgrid(xs, ys, zs, indexing="ij")
    A, _ = _components(mode, geometry, profile, X, Y, Z)
    mag = np.linalg.norm(A, axis=-1)
    if weighted:
        mag = mag * profile.permittivity(Z, geometry.Lz)
    return float(np.max(mag))


def gauge_divergence(mode, geometry, profile, r, h, scale=None, signed=False):
    """Central-difference div(eps A) at r, normalised by max(eps |A|) / Lz over the box.

    The magnitude is returned unless ``signed`` (needed for Richardson
    extrapolation of the truncation error).
    """
    _require_solved(mode)
    r = np.asarray(r, dtype=float)
    lengths = np.array([geometry.Lx, geometry.Ly, geometry.Lz])
    if not h > 0 or np.any(r - h < 0) or np.any(r + h > lengths):
        raise ValueError("step too large for the distance of r to the walls")
    pts = np.array([r + s * h * np.eye(3)[k] for k in range(3) for s in (1.0, -1.0)])
    A, _ = _components(mode, geometry, profile, pts[:, 0], pts[:, 1], pts[:, 2])
    epsA = profile.permittivity(pts[:, 2], geometry.Lz)[:, None] * A
    div = sum((epsA[2 * k, k] - epsA[2 * k + 1, k]) / (2.0 * h) for k in range(3))
    if scale is None:
        scale = potential_amplitude(mode, geometry, profile, weighted=True)
    res = div / (scale / geometry.Lz)
    return float(res) if signed else abs(float(res))


# sixth-order central first-derivative stencil
_D6 = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0


def helmholtz_residual(mode, geometry, profile, r, h=None, scale=None):
    """|curl b - mu0 eps omega^2 A| / (mu0 eps omega^2 max|A|) at an interior point.

    curl b is taken by a sixth-order finite difference of the analytic b, so
    this checks the closed-form potentials against the wave equation without
    reusing the Bessel differential equation.
    """
    _require_solved(mode)
    r = np.asarray(r, dtype=float)
    if h is None:
        h = 1e-3 * geometry.Lz
    offs = np.arange(-3, 4) * h
    lengths = np.array([geometry.Lx, geometry.Ly, geometry.Lz])
    if np.any(r - 3 * h < 0) or np.any(r + 3 * h > lengths):
        raise ValueError("stencil leaves the box")
    grads = np.empty((3, 3))  # grads[k, i] = d b_i / d x_k
    for k in range(3):
        pts = r[None, :] + offs[:, None] * np.eye(3)[k][None, :]
        _, B = _components(mode, geometry, profile, pts[:, 0], pts[:, 1], pts[:, 2])
        grads[k] = _D6 @ B / h
    curl = np.array([grads[1, 2] - grads[2, 1], grads[2, 0] - grads[0, 2], grads[0, 1] - grads[1, 0]])
    A, _ = _components(mode, geometry, profile, r[0], r[1], r[2])
    k2 = profile.mu0 * float(profile.permittivity(r[2], geometry.Lz)) * mode.omega ** 2
    if scale is None:
        scale = potential_amplitude(mode, geometry, profile)
    return float(np.linalg.norm(curl - k2 * A) / (k2 * scale))


def inner_product(mode1, mode2, geometry, profile, rtol=1e-10):
    """Integral of eps A1 . A2 over the box (real potentials)."""
    _require_solved(mode1)
    _require_solved(mode2)
    n = max(transverse_order(mode1), transverse_order(mode2))
    xs, wx = gauss_legendre(n, 0.0, geometry.Lx)
    ys, wy = gauss_legendre(n, 0.0, geometry.Ly)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    W = np.outer(wx, wy)

    def integrand(zs):
        out = np.empty(zs.shape)
        for i, z in enumerate(zs):
            A1, _ = _components(mode1, geometry, profile, X, Y, z)
            A2, _ = _components(mode2, geometry, profile, X, Y, z)
            eps = float(profile.permittivity(z, geometry.Lz))
            out[i] = eps * np.sum(W * np.sum(A1 * A2, axis=-1))
        return out

    val, _ = adaptive_quad(integrand, 0.0, geometry.Lz, rtol=rtol, atol=1e-14)
    return float(val)
