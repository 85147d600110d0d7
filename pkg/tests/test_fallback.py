"""The uncompiled kernels must agree with the numba ones."""
import json
import os
import subprocess
import sys

import pytest

from gradcav._jit import backend

SCRIPT = r"""
import json
from gradcav._jit import backend
from gradcav.bessel import bessel_jy, cross_product_tilde
from gradcav.spectrum import CavityGeometry, DielectricProfile, find_roots
out = {"backend": backend()}
out["jy"] = [list(bessel_jy(nu, x)) for nu, x in [(0.0, 0.5), (3.3, 7.1), (40.0, 12.0), (250.5, 900.0), (12.0, 0.01)]]
out["tilde"] = cross_product_tilde(2.5, 3.0, 7.0)
g = CavityGeometry(1.0, 1.0, 1.0)
p = DielectricProfile(beta=1.0, alpha=1.0)
out["te"] = find_roots("TE", g, p, 1, 0, 9.0)
out["tm"] = find_roots("TM", g, p, 2, 1, 9.0)
print(json.dumps(out))
"""


def run_with(flag):
    env = dict(os.environ, GRADCAV_NUMBA=flag)
    r = subprocess.run([sys.executable, "-c", SCRIPT], capture_output=True, text=True, env=env, check=True)
    return json.loads(r.stdout)


@pytest.fixture(scope="module")
def both():
    return run_with("1"), run_with("0")


def test_backends_selected(both):
    fast, slow = both
    assert fast["backend"] == "numba"
    assert slow["backend"] == "python"
    assert backend() in ("numba", "python")


def test_bessel_kernel_agrees(both):
    fast, slow = both
    for a, b in zip(fast["jy"], slow["jy"]):
        assert a[2] == b[2] and a[5] == b[5]  # identical log scales
        for u, v in zip(a, b):
            assert u == pytest.approx(v, rel=1e-13, abs=1e-300)
    assert fast["tilde"] == pytest.approx(slow["tilde"], rel=1e-13)


def test_roots_agree(both):
    fast, slow = both
    assert len(fast["te"]) == len(slow["te"]) and len(fast["tm"]) == len(slow["tm"])
    assert fast["te"] == pytest.approx(slow["te"], rel=1e-14)
    assert fast["tm"] == pytest.approx(slow["tm"], rel=1e-14)
