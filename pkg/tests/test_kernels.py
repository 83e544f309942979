import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hslab import kernels
from hslab.fem2d import domain_gallery


def test_dormand_prince_tableau():
    A, B, C, E = kernels.DP_A, kernels.DP_B, kernels.DP_C, kernels.DP_E
    assert np.allclose(A.sum(axis=1), C, atol=1e-15)
    AC = A @ C[:5]
    assert math.isclose(B.sum(), 1.0, abs_tol=1e-15)
    # order conditions up to five for the propagating weights
    assert math.isclose(B @ C, 1 / 2, rel_tol=1e-14)
    assert math.isclose(B @ C**2, 1 / 3, rel_tol=1e-14)
    assert math.isclose(B @ C**3, 1 / 4, rel_tol=1e-14)
    assert math.isclose(B @ C**4, 1 / 5, rel_tol=1e-14)
    assert math.isclose(B @ AC, 1 / 6, rel_tol=1e-14)
    assert abs(E.sum()) < 1e-15
    # the dense polynomial reproduces the step at theta = 1
    assert np.allclose(kernels.DP_P.sum(axis=1)[:6], B, atol=1e-14)


def _brute_distance(px, py, vx, vy, n=20001):
    """Oracle: distance to densely sampled edges (upper bound, tight to edge/(n-1))."""
    best = np.full(px.shape, np.inf)
    s = np.linspace(0, 1, n)
    for k in range(len(vx)):
        k2 = (k + 1) % len(vx)
        ex = vx[k] + s * (vx[k2] - vx[k])
        ey = vy[k] + s * (vy[k2] - vy[k])
        d = np.sqrt((px[:, None] - ex[None, :]) ** 2 + (py[:, None] - ey[None, :]) ** 2).min(axis=1)
        best = np.minimum(best, d)
    return best


def test_polygon_distance_against_sampling_oracle():
    dom = domain_gallery("kidney", 64)
    rng = np.random.default_rng(3)
    pts = rng.uniform(-1, 1, size=(50, 2))
    vx, vy = dom.vertices[:, 0], dom.vertices[:, 1]
    ref = _brute_distance(pts[:, 0], pts[:, 1], vx, vy)
    got = kernels.polygon_distance(pts[:, 0], pts[:, 1], vx, vy)
    assert np.all(got <= ref + 1e-15)
    assert np.all(ref - got <= 1e-6)


@given(arrays(float, (30, 2), elements=st.floats(-3, 3)))
def test_loop_and_vectorized_backends_agree(pts):
    dom = domain_gallery("kidney", 40)
    vx, vy = dom.vertices[:, 0], dom.vertices[:, 1]
    a = kernels.polygon_distance_loop(pts[:, 0].copy(), pts[:, 1].copy(), vx, vy)
    b = kernels.polygon_distance_numpy(pts[:, 0], pts[:, 1], vx, vy, chunk=7)
    assert np.allclose(a, b, rtol=1e-13, atol=1e-15)


def test_square_distance_examples():
    vx = np.array([0.0, 1.0, 1.0, 0.0])
    vy = np.array([0.0, 0.0, 1.0, 1.0])
    d = kernels.polygon_distance(np.array([0.5, 0.25, 2.0]), np.array([0.5, 0.5, 0.5]), vx, vy)
    assert np.allclose(d, [0.5, 0.25, 1.0], atol=1e-15)
