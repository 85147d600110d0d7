"""Eigenfrequency spectrum of the exponentially graded cavity.

Permittivity eps(z) = eps0 * beta * exp(alpha z / Lz).  With
eta(z) = 2 Lz omega sqrt(beta) exp(alpha z / 2Lz) / (alpha c0) the axial
profile of a TE (TM) mode is a cylinder function of order nu, and the
eigenfrequencies are the positive zeros of

    TE: J(eta0) Y(etaL) - J(etaL) Y(eta0)
    TM: same with f -> eta f'(eta) + f(eta)

in omega, for each transverse pair (n_x, n_y).
"""
import enum
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__
from ._jit import njit
from .bessel import _cross_scaled, _jy_scaled, _combine, _rescale, BesselRangeError, bessel_jy

__all__ = [
    "Polarization",
    "CavityGeometry",
    "DielectricProfile",
    "ModeIndex",
    "ModeRecord",
    "SpectrumTable",
    "RootFindingError",
    "ZetaDegeneracyError",
    "eta",
    "mode_parameters",
    "spectrum_fn",
    "find_roots",
    "scan_root_count",
    "zeta_coefficient",
    "enumerate_modes",
    "homogeneous_spectrum",
    "spacing_estimate",
    "SMALL_ALPHA",
]

# below this the graded solver is replaced by the homogeneous closed form
SMALL_ALPHA = 1e-4
# zeta magnitude above which the alternative branch zeta' J + Y is used
_ZETA_SWITCH = 1e8
_MAX_HALVINGS = 6


class Polarization(str, enum.Enum):
    TE = "TE"
    TM = "TM"

    def __str__(self):
        return self.value


class RootFindingError(RuntimeError):
    """Bracketing scan could not certify the root list."""

    def __init__(self, msg, index=None):
        super().__init__(msg if index is None else f"{msg} [mode {index}]")
        self.index = index


class ZetaDegeneracyError(ArithmeticError):
    pass


@dataclass(frozen=True)
class CavityGeometry:
    Lx: float
    Ly: float
    Lz: float

    def __post_init__(self):
        for name in ("Lx", "Ly", "Lz"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
            object.__setattr__(self, name, float(v))

    @property
    def volume(self):
        return self.Lx * self.Ly * self.Lz


@dataclass(frozen=True)
class DielectricProfile:
    """eps(z) = eps0 * beta * exp(alpha z / Lz), mu = mu0.

    Defaults are natural units (hbar = c0 = eps0 = mu0 = 1).
    """

    beta: float
    alpha: float
    eps0: float = 1.0
    mu0: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("beta", "alpha", "eps0", "mu0", "hbar"):
            v = getattr(self, name)
            # alpha == 0 is only used to tag homogeneous reference tables
            ok = v >= 0 if name == "alpha" else v > 0
            if not (isinstance(v, (int, float)) and math.isfinite(v) and ok):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
            object.__setattr__(self, name, float(v))

    @property
    def homogeneous(self):
        return self.alpha == 0.0

    @property
    def c0(self):
        return 1.0 / math.sqrt(self.eps0 * self.mu0)

    def permittivity(self, z, Lz):
        return self.eps0 * self.beta * np.exp(self.alpha * (np.asarray(z) / Lz))


@dataclass(frozen=True, order=True)
class ModeIndex:
    """(pol, n_x, n_y, p); p counts roots from omega = 0+ starting at 1.

    Homogeneous reference records reuse the type with p the axial quantum
    number, which may be 0 for TM (``homogeneous=True`` relaxes the check).
    """

    pol: Polarization
    n_x: int
    n_y: int
    p: int
    homogeneous: bool = field(default=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "pol", Polarization(self.pol))
        for name in ("n_x", "n_y", "p"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        _check_transverse(self.pol, self.n_x, self.n_y)
        pmin = 0 if (self.homogeneous and self.pol is Polarization.TM) else 1
        if self.p < pmin:
            raise ValueError(f"{self.pol} root index must be >= {pmin}, got {self.p}")

    def __str__(self):
        return f"{self.pol.value}({self.n_x},{self.n_y},{self.p})"


def _check_transverse(pol, n_x, n_y):
    pol = Polarization(pol)
    if pol is Polarization.TE and n_x == 0 and n_y == 0:
        raise ValueError("TE modes need (n_x, n_y) != (0, 0)")
    if pol is Polarization.TM and (n_x < 1 or n_y < 1):
        raise ValueError("TM modes need n_x >= 1 and n_y >= 1 (the field vanishes identically otherwise)")
    return pol


@dataclass(frozen=True)
class ModeRecord:
    index: ModeIndex
    omega: float
    k_x: float
    k_y: float
    nu: float
    zeta: float
    eta0: float
    etaL: float
    branch: str = "J+zY"
    norm: float = None

    @property
    def pol(self):
        return self.index.pol

    @property
    def solved(self):
        return math.isfinite(self.omega) and math.isfinite(self.zeta)

    def sort_key(self):
        i = self.index
        return (self.omega, i.pol.value, i.n_x, i.n_y, i.p)

    def as_dict(self):
        d = asdict(self)
        d["index"] = {"pol": self.index.pol.value, "n_x": self.index.n_x, "n_y": self.index.n_y, "p": self.index.p}
        return d


CSV_COLUMNS = ("pol", "nx", "ny", "p", "omega", "nu", "zeta", "eta0", "etaL", "norm", "branch")


@dataclass(frozen=True)
class SpectrumTable:
    geometry: CavityGeometry
    profile: DielectricProfile
    omega_max: float
    records: tuple
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        recs = tuple(sorted(self.records, key=ModeRecord.sort_key))
        object.__setattr__(self, "records", recs)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    @property
    def omegas(self):
        return np.array([r.omega for r in self.records])

    def find(self, pol, n_x, n_y, p):
        key = (Polarization(pol), n_x, n_y, p)
        for r in self.records:
            i = r.index
            if (i.pol, i.n_x, i.n_y, i.p) == key:
                return r
        raise KeyError(f"{pol}({n_x},{n_y},{p}) not in table")

    def to_json_dict(self):
        return {
            "geometry": asdict(self.geometry),
            "profile": asdict(self.profile),
            "omega_max": self.omega_max,
            "provenance": self.provenance,
            "records": [r.as_dict() for r in self.records],
        }

    @classmethod
    def from_json_dict(cls, d):
        recs = []
        for r in d["records"]:
            idx = r.pop("index")
            homog = r["branch"] == "homogeneous"
            recs.append(ModeRecord(index=ModeIndex(idx["pol"], idx["n_x"], idx["n_y"], idx["p"], homogeneous=homog), **r))
        return cls(CavityGeometry(**d["geometry"]), DielectricProfile(**d["profile"]), d["omega_max"], tuple(recs),
                   dict(d.get("provenance", {})))

    @property
    def content_hash(self):
        blob = json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def csv_rows(self):
        for r in self.records:
            i = r.index
            norm = "" if r.norm is None else repr(r.norm)
            yield [i.pol.value, i.n_x, i.n_y, i.p, repr(r.omega), repr(r.nu), repr(r.zeta), repr(r.eta0),
                   repr(r.etaL), norm, r.branch]


def eta(profile, geometry, omega, z):
    """eta(z) = 2 Lz omega sqrt(beta) exp(alpha z / 2Lz) / (alpha c0)."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0) or np.any(z > geometry.Lz):
        raise ValueError("z outside [0, Lz]")
    if not omega > 0:
        raise ValueError("omega must be positive")
    a = profile.alpha
    # z/Lz is exactly 1.0 at the far wall, so eta(Lz) == eta(0) * exp(alpha/2) bit for bit
    out = _eta_scale(profile, geometry) * omega * np.exp(0.5 * a * (z / geometry.Lz))
    return float(out) if out.ndim == 0 else out


def _eta_scale(profile, geometry):
    if profile.alpha <= 0:
        raise ValueError("graded-profile functions need alpha > 0")
    return 2.0 * geometry.Lz * math.sqrt(profile.beta) / (profile.alpha * profile.c0)


def mode_parameters(geometry, profile, pol, n_x, n_y):
    """(k_x, k_y, nu) for a transverse pair."""
    pol = _check_transverse(pol, n_x, n_y)
    if n_x < 0 or n_y < 0:
        raise ValueError("transverse indices must be non-negative")
    kx = n_x * math.pi / geometry.Lx
    ky = n_y * math.pi / geometry.Ly
    r = 2.0 * geometry.Lz / profile.alpha
    if pol is Polarization.TE:
        nu = r * math.hypot(kx, ky)
    else:
        nu = math.sqrt(r * r * (kx * kx + ky * ky) + 1.0)
    return kx, ky, nu


def spectrum_fn(pol, nu, profile, geometry, omega):
    """TE/TM spectrum-generating function at omega."""
    pol = Polarization(pol)
    a = _eta_scale(profile, geometry) * omega
    b = a * math.exp(0.5 * profile.alpha)
    m, e, ok = _cross_scaled(float(nu), a, b, pol is Polarization.TM)
    if not ok:
        raise ArithmeticError("Bessel kernel did not converge")
    return _rescale(m, e)


def spacing_estimate(profile, geometry):
    """Large-omega spacing of consecutive roots, pi alpha c0 / (2 Lz sqrt(beta) (e^{alpha/2} - 1))."""
    a = profile.alpha
    return math.pi * a * profile.c0 / (2.0 * geometry.Lz * math.sqrt(profile.beta) * math.expm1(0.5 * a))


def _lower_bound(profile, geometry, pol, kx, ky):
    # Rayleigh bound omega^2 >= c0^2 (kx^2 + ky^2 [+ (pi/Lz)^2 for TE]) / max(eps_r)
    k2 = kx * kx + ky * ky
    if Polarization(pol) is Polarization.TE:
        k2 += (math.pi / geometry.Lz) ** 2
    return profile.c0 * math.sqrt(k2 / (profile.beta * math.exp(profile.alpha)))


@njit
def _scan(nu, keta, g, tilde, w_lo, step, n):
    # signs of the spectrum function on w_lo + i*step, i = 0..n
    signs = np.empty(n + 1, dtype=np.int8)
    for i in range(n + 1):
        w = w_lo + i * step
        a = keta * w
        m, e, ok = _cross_scaled(nu, a, a * g, tilde)
        if not ok:
            signs[i] = 2
        elif m > 0.0:
            signs[i] = 1
        elif m < 0.0:
            signs[i] = -1
        else:
            signs[i] = 0
    return signs


@njit
def _fval(nu, keta, g, tilde, w, eref):
    a = keta * w
    m, e, ok = _cross_scaled(nu, a, a * g, tilde)
    return m * math.exp(e - eref)


@njit
def _brent(nu, keta, g, tilde, xa, xb, eref, rtol, maxiter):
    # Brent's method on a sign-change bracket [xa, xb]
    xpre = xa
    xcur = xb
    xblk = 0.0
    fblk = 0.0
    spre = 0.0
    scur = 0.0
    fpre = _fval(nu, keta, g, tilde, xpre, eref)
    fcur = _fval(nu, keta, g, tilde, xcur, eref)
    if fpre == 0.0:
        return xpre
    if fcur == 0.0:
        return xcur
    for _ in range(maxiter):
        if fpre * fcur < 0.0:
            xblk = xpre
            fblk = fpre
            spre = xcur - xpre
            scur = spre
        if abs(fblk) < abs(fcur):
            xpre = xcur
            xcur = xblk
            xblk = xpre
            fpre = fcur
            fcur = fblk
            fblk = fpre
        delta = 0.5 * (1e-300 + rtol * abs(xcur))
        sbis = 0.5 * (xblk - xcur)
        if fcur == 0.0 or abs(sbis) < delta:
            return xcur
        if abs(spre) > delta and abs(fcur) < abs(fpre):
            if xpre == xblk:
                stry = -fcur * (xcur - xpre) / (fcur - fpre)
            else:
                dpre = (fpre - fcur) / (xpre - xcur)
                dblk = (fblk - fcur) / (xblk - xcur)
                stry = -fcur * (fblk * dblk - fpre * dpre) / (dblk * dpre * (fblk - fpre))
            if 2.0 * abs(stry) < min(abs(spre), 3.0 * abs(sbis) - delta):
                spre = scur
                scur = stry
            else:
                spre = sbis
                scur = sbis
        else:
            spre = sbis
            scur = sbis
        xpre = xcur
        fpre = fcur
        if abs(scur) > delta:
            xcur += scur
        elif sbis > 0.0:
            xcur += delta
        else:
            xcur -= delta
        fcur = _fval(nu, keta, g, tilde, xcur, eref)
    return xcur


def _base_step(profile, geometry, omega_max):
    # 1/8 of the asymptotic spacing, tightened near cutoff where roots crowd to ~ s^2/omega
    s = spacing_estimate(profile, geometry)
    return 0.125 * s * min(1.0, s / omega_max)


def _brackets(nu, keta, g, tilde, w_lo, w_hi, step):
    n = max(1, int(math.ceil((w_hi - w_lo) / step)))
    step = (w_hi - w_lo) / n
    signs = _scan(nu, keta, g, tilde, w_lo, step, n)
    if np.any(signs == 2):
        raise ArithmeticError("Bessel kernel did not converge during root scan")
    out = []
    i = 0
    while i < n:
        s0, s1 = signs[i], signs[i + 1]
        if s0 == 0:
            if i > 0:
                out.append((w_lo + i * step, w_lo + i * step))
        elif s1 != 0 and s0 != s1:
            out.append((w_lo + i * step, w_lo + (i + 1) * step))
        i += 1
    if signs[n] == 0:
        out.append((w_hi, w_hi))
    return out


def _scan_window(profile, geometry, pol, kx, ky, omega_max):
    w_floor = 1e-9 * profile.c0 / geometry.Lz
    w_lo = max(w_floor, 0.999 * _lower_bound(profile, geometry, pol, kx, ky))
    return w_lo, omega_max


def scan_root_count(pol, geometry, profile, n_x, n_y, omega_max, step):
    """Number of sign changes on (0, omega_max] at the given scan step."""
    pol = Polarization(pol)
    kx, ky, nu = mode_parameters(geometry, profile, pol, n_x, n_y)
    w_lo, w_hi = _scan_window(profile, geometry, pol, kx, ky, omega_max)
    if w_lo >= w_hi:
        return 0
    keta = _eta_scale(profile, geometry)
    g = math.exp(0.5 * profile.alpha)
    return len(_brackets(nu, keta, g, pol is Polarization.TM, w_lo, w_hi, step))


def find_roots(pol, geometry, profile, n_x, n_y, omega_max, full_output=False):
    """Ordered roots of the spectrum function in (0, omega_max].

    The sign-change scan is repeated with half the step until two
    consecutive scans agree on the count.  With ``full_output`` the result
    is a list of (root, lo, hi, step) tuples.
    """
    pol = Polarization(pol)
    if not omega_max > 0:
        raise ValueError("omega_max must be positive")
    kx, ky, nu = mode_parameters(geometry, profile, pol, n_x, n_y)
    w_lo, w_hi = _scan_window(profile, geometry, pol, kx, ky, omega_max)
    if w_lo >= w_hi:
        return []
    keta = _eta_scale(profile, geometry)
    g = math.exp(0.5 * profile.alpha)
    tilde = pol is Polarization.TM
    step = _base_step(profile, geometry, omega_max)

    br = _brackets(nu, keta, g, tilde, w_lo, w_hi, step)
    for _ in range(_MAX_HALVINGS):
        finer = _brackets(nu, keta, g, tilde, w_lo, w_hi, 0.5 * step)
        if len(finer) == len(br):
            break
        br, step = finer, 0.5 * step
    else:
        raise RootFindingError(f"root count not stable after {_MAX_HALVINGS} step halvings",
                               f"{pol.value}({n_x},{n_y},*)")

    roots = []
    for lo, hi in br:
        if lo == hi:
            w = lo
        else:
            _, eref, _ = _cross_scaled(nu, keta * lo, keta * lo * g, tilde)
            w = _brent(nu, keta, g, tilde, lo, hi, eref, 4.0 * np.finfo(float).eps, 200)
        roots.append((w, lo, hi, step))
    ws = [r[0] for r in roots]
    if any(b <= a for a, b in zip(ws, ws[1:])):
        raise RootFindingError("roots not strictly increasing", f"{pol.value}({n_x},{n_y},*)")
    return roots if full_output else ws


def _tilde_pair(nu, x):
    # (J~, Y~) as scaled (jt, lj, yt, ly); f~ = x f' + f
    jm, jpm, lj, ym, ypm, ly = bessel_jy(nu, x)
    return x * jpm + jm, lj, x * ypm + ym, ly


def zeta_coefficient(pol, nu, profile, geometry, omega):
    """Matching coefficient at z = 0 as ``(zeta, branch)``.

    ``branch == "J+zY"``: Phi = J + zeta Y (the usual form).
    ``branch == "zJ+Y"``: Phi = zeta J + Y, used when the usual denominator
    vanishes (|zeta| would exceed 1e8).
    """
    pol = Polarization(pol)
    x = _eta_scale(profile, geometry) * omega
    if pol is Polarization.TE:
        jm, _, lj, ym, _, ly = bessel_jy(nu, x)
    else:
        jm, lj, ym, ly = _tilde_pair(nu, x)
    if ym == 0.0 and jm == 0.0:
        raise ZetaDegeneracyError("both boundary values vanish")
    if jm == 0.0:
        return 0.0, "J+zY"
    lg = math.log(abs(jm)) + lj - (math.log(abs(ym)) + ly) if ym != 0.0 else math.inf
    if lg <= math.log(_ZETA_SWITCH):
        return -math.copysign(math.exp(lg), jm * ym), "J+zY"
    return -math.copysign(math.exp(-lg), jm * ym), "zJ+Y"


def _solve_pair(geometry, profile, pol, n_x, n_y, omega_max):
    kx, ky, nu = mode_parameters(geometry, profile, pol, n_x, n_y)
    try:
        roots = find_roots(pol, geometry, profile, n_x, n_y, omega_max)
    except (RootFindingError, ArithmeticError) as exc:
        raise RootFindingError(str(exc), f"{Polarization(pol).value}({n_x},{n_y},*)") from exc
    keta = _eta_scale(profile, geometry)
    g = math.exp(0.5 * profile.alpha)
    out = []
    for p, w in enumerate(roots, start=1):
        zeta, branch = zeta_coefficient(pol, nu, profile, geometry, w)
        e0 = keta * w
        out.append(ModeRecord(ModeIndex(pol, n_x, n_y, p), w, kx, ky, nu, zeta, e0, e0 * g, branch))
    return out


def _transverse_pairs(geometry, kmax, pol):
    pol = Polarization(pol)
    nxm = int(math.floor(kmax * geometry.Lx / math.pi))
    nym = int(math.floor(kmax * geometry.Ly / math.pi))
    start = 1 if pol is Polarization.TM else 0
    pairs = []
    for nx in range(start, nxm + 1):
        for ny in range(start, nym + 1):
            if pol is Polarization.TE and nx == 0 and ny == 0:
                continue
            if math.hypot(nx * math.pi / geometry.Lx, ny * math.pi / geometry.Ly) <= kmax:
                pairs.append((pol, nx, ny))
    return pairs


def enumerate_modes(geometry, profile, omega_max, threads=1):
    """All TE and TM modes with omega <= omega_max, sorted."""
    if not omega_max > 0:
        raise ValueError("omega_max must be positive")
    if profile.alpha < SMALL_ALPHA:
        table = homogeneous_spectrum(geometry, profile.beta, omega_max, profile=profile)
        prov = dict(table.provenance, method="small-alpha-homogeneous", alpha=profile.alpha)
        return SpectrumTable(geometry, profile, float(omega_max), table.records, prov)
    # every pair whose Rayleigh lower bound lies below omega_max
    kmax = omega_max * math.sqrt(profile.beta * math.exp(profile.alpha)) / profile.c0
    pairs = _transverse_pairs(geometry, kmax, "TE") + _transverse_pairs(geometry, kmax, "TM")
    jobs = [(geometry, profile, pol, nx, ny, omega_max) for pol, nx, ny in pairs]
    if threads and threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            chunks = list(ex.map(lambda a: _solve_pair(*a), jobs))
    else:
        chunks = [_solve_pair(*a) for a in jobs]
    records = tuple(r for c in chunks for r in c if r.omega <= omega_max)
    prov = {"method": "bessel-cross-product", "code_version": __version__, "pairs": len(pairs)}
    return SpectrumTable(geometry, profile, float(omega_max), records, prov)


def homogeneous_spectrum(geometry, eps_r, omega_max, tm_p0=True, profile=None):
    """Closed-form rectangular-cavity spectrum for constant relative permittivity.

    TE needs (n_x, n_y) != (0, 0) and p >= 1; TM needs n_x, n_y >= 1 and
    p >= 0 (p = 0 dropped when ``tm_p0`` is false).  Vacuum constants are
    taken from ``profile`` when given, natural units otherwise.
    """
    base = profile if profile is not None else DielectricProfile(beta=1.0, alpha=0.0)
    c0 = base.c0
    if not eps_r > 0:
        raise ValueError("eps_r must be positive")
    if not omega_max > 0:
        raise ValueError("omega_max must be positive")
    v = c0 / math.sqrt(eps_r)
    kmax = omega_max / v
    nxm = int(math.floor(kmax * geometry.Lx / math.pi))
    nym = int(math.floor(kmax * geometry.Ly / math.pi))
    pm = int(math.floor(kmax * geometry.Lz / math.pi))
    recs = []
    for nx in range(nxm + 1):
        kx = nx * math.pi / geometry.Lx
        for ny in range(nym + 1):
            ky = ny * math.pi / geometry.Ly
            for p in range(pm + 1):
                w = v * math.sqrt(kx * kx + ky * ky + (p * math.pi / geometry.Lz) ** 2)
                if w > omega_max or w == 0.0:
                    continue
                if (nx or ny) and p >= 1:
                    recs.append(ModeRecord(ModeIndex("TE", nx, ny, p, homogeneous=True), w, kx, ky,
                                           math.nan, math.nan, math.nan, math.nan, "homogeneous"))
                if nx >= 1 and ny >= 1 and (p >= 1 or tm_p0):
                    recs.append(ModeRecord(ModeIndex("TM", nx, ny, p, homogeneous=True), w, kx, ky,
                                           math.nan, math.nan, math.nan, math.nan, "homogeneous"))
    prof = replace(base, beta=float(eps_r), alpha=0.0)
    prov = {"method": "homogeneous-closed-form", "eps_r": float(eps_r), "tm_p0": bool(tm_p0)}
    return SpectrumTable(geometry, prof, float(omega_max), tuple(recs), prov)
