import json
import os
import subprocess
import sys

import numpy as np

from hslab.kernels import polygon_distance_loop, polygon_distance_numpy

_PROBE = """
import json, numpy as np
from hslab import _accel
from hslab.core import make_params
from hslab.fem2d import distance_to_boundary, domain_gallery
from hslab.radial import shoot
prof = shoot(make_params(3, s=1.0), tol=1e-9)
pts = np.random.default_rng(1).uniform(-0.8, 0.8, size=(500, 2))
d = distance_to_boundary(domain_gallery("kidney"), pts)
print(json.dumps({"numba": _accel.USE_NUMBA, "alpha": prof.shoot_param, "d": d.tolist()}))
"""


def _probe(flag):
    env = dict(os.environ, HSLAB_DISABLE_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", _PROBE], env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def test_backends_agree():
    fast, plain = _probe("0"), _probe("1")
    assert fast["numba"] is True and plain["numba"] is False
    assert abs(fast["alpha"] - plain["alpha"]) <= 1e-12 * abs(plain["alpha"])
    assert np.allclose(fast["d"], plain["d"], rtol=0, atol=1e-15)


def test_numpy_distance_matches_loop():
    rng = np.random.default_rng(3)
    pts = rng.normal(size=(300, 2))
    th = np.sort(rng.uniform(0, 2 * np.pi, 40))
    v = np.stack([np.cos(th), np.sin(th)], axis=1) * rng.uniform(0.5, 1.5, (40, 1))
    a = polygon_distance_loop(pts[:, 0], pts[:, 1], v[:, 0], v[:, 1])
    b = polygon_distance_numpy(pts[:, 0], pts[:, 1], v[:, 0], v[:, 1], chunk=64)
    assert np.allclose(a, b, rtol=0, atol=1e-15)
