"""SI <-> natural units (hbar = c0 = eps0 = mu0 = 1, lengths in units of Lz)."""
import math

from scipy import constants as _sc

HBAR = _sc.hbar
C0 = _sc.c
EPS0 = _sc.epsilon_0
MU0 = _sc.mu_0


class UnitSystem:
    """Conversion factors for a cavity of axial length ``Lz`` metres."""

    def __init__(self, Lz):
        if not Lz > 0:
            raise ValueError("Lz must be positive")
        self.Lz = float(Lz)

    def length_to_nat(self, v):
        return v / self.Lz

    def length_to_si(self, v):
        return v * self.Lz

    def omega_to_nat(self, w):
        return w * self.Lz / C0

    def omega_to_si(self, w):
        return w * C0 / self.Lz

    def wavenumber_to_si(self, k):
        return k / self.Lz

    def time_to_nat(self, t):
        return t * C0 / self.Lz

    def time_to_si(self, t):
        return t * self.Lz / C0

    @property
    def energy(self):
        return HBAR * C0 / self.Lz

    @property
    def force(self):
        return HBAR * C0 / self.Lz ** 2

    @property
    def potential(self):
        # A_SI = A_nat * sqrt(hbar / (eps0 c0 Lz^2))
        return math.sqrt(HBAR / (EPS0 * C0)) / self.Lz

    def field_scales(self):
        """Multipliers taking natural-unit A, e, b, d, h to SI."""
        a = self.potential
        e = a * C0 / self.Lz
        b = a / self.Lz
        return {"A": a, "e": e, "b": b, "d": EPS0 * e, "h": b / MU0}
