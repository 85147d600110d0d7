"""Gauss-Legendre rules and a globally adaptive 1-D integrator."""
import heapq
from functools import lru_cache

import numpy as np


class QuadratureError(ArithmeticError):
    def __init__(self, msg, value=None, error=None):
        super().__init__(f"{msg} (value={value!r}, error estimate={error!r})")
        self.value = value
        self.error = error


@lru_cache(maxsize=64)
def _leggauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n, a, b):
    """Nodes and weights of the n-point rule on [a, b]."""
    x, w = _leggauss(int(n))
    h = 0.5 * (b - a)
    return a + h * (x + 1.0), h * w


def _panel(f, a, b, n):
    x1, w1 = gauss_legendre(n, a, b)
    x2, w2 = gauss_legendre(2 * n, a, b)
    v = np.asarray(f(np.concatenate([x1, x2])))
    lo = v[..., : x1.size] @ w1
    hi = v[..., x1.size:] @ w2
    return hi, np.max(np.abs(hi - lo))


def adaptive_quad(f, a, b, rtol=1e-10, atol=0.0, n=16, max_panels=2000, initial_panels=1):
    """Integrate a vectorised ``f(z) -> (..., len(z))`` over [a, b].

    Each panel is integrated with n and 2n Gauss-Legendre points; the
    difference serves as the (pessimistic) error of the 2n-point value.  The
    panel with the largest error is bisected until the summed error is below
    ``max(atol, rtol * |total|)`` (max-norm over components).

    Returns ``(value, error_estimate)``.
    """
    edges = np.linspace(a, b, int(initial_panels) + 1)
    heap = []
    total = 0.0
    err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e = _panel(f, lo, hi, n)
        heapq.heappush(heap, (-e, lo, hi, id(v), v))
        total = total + v
        err += e
    count = len(heap)
    while err > max(atol, rtol * np.max(np.abs(total))):
        if count >= max_panels:
            raise QuadratureError("adaptive quadrature did not converge", total, err)
        e, lo, hi, _, v = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        v1, e1 = _panel(f, lo, mid, n)
        v2, e2 = _panel(f, mid, hi, n)
        total = total - v + v1 + v2
        err += e1 + e2 + e
        heapq.heappush(heap, (-e1, lo, mid, id(v1), v1))
        heapq.heappush(heap, (-e2, mid, hi, id(v2), v2))
        count += 1
    # re-sum panels in position order so the result does not depend on refinement history
    panels = sorted(heap, key=lambda t: t[1])
    total = panels[0][4]
    for t in panels[1:]:
        total = total + t[4]
    return total, err
