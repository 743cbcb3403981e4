import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vegswe.geometry import (
    ChartError,
    DegenerateOffsetError,
    Quadrature,
    build_chart,
    christoffel_at,
    flux_scalar_vertical,
    flux_tensor_surfaces,
    gaussian_bump,
    monge_geometry,
    offset_arrays,
    offset_frame,
    paraboloid,
    plane,
    tilted_plane,
)
from vegswe.verify.scenarios import observed_orders

QUICK = Quadrature(16, 16, 4)


def sample(fn, extent=(-1.0, 1.0, -1.0, 1.0), n=41):
    a1, b1, a2, b2 = extent
    y1, y2 = np.linspace(a1, b1, n), np.linspace(a2, b2, n)
    Y1, Y2 = np.meshgrid(y1, y2, indexing="ij")
    return build_chart(fn(Y1, Y2), (y1[1] - y1[0], y2[1] - y2[0]), (a1, a2))


def test_flat_chart():
    chart = build_chart(np.full((5, 4), 5.0), (1.0, 2.0))
    g = chart.geometry
    assert np.all(g.curvature == 0)
    assert np.all(g.christoffel == 0)
    assert np.all(chart.area == 1)
    assert np.all(g.normal == [0.0, 0.0, 1.0])


def test_tilted_plane_fundamental_forms():
    chart = sample(lambda y1, y2: 0.1 * y1, n=9)
    g = chart.geometry
    np.testing.assert_allclose(g.metric[..., 0, 0], 1.01, atol=1e-14)
    np.testing.assert_allclose(g.metric[..., 0, 1], 0.0, atol=1e-14)
    np.testing.assert_allclose(chart.nu3, 1 / math.sqrt(1.01), atol=1e-14)
    np.testing.assert_allclose(chart.gauss_curvature, 0.0, atol=1e-12)
    np.testing.assert_allclose(g.curvature, 0.0, atol=1e-12)
    assert np.max(np.abs(christoffel_at(chart, (4, 4)))) < 1e-12


def test_paraboloid_origin_curvatures():
    chart = paraboloid().sample(21, 21, (-1, 1, -1, 1))
    origin = (10, 10)
    assert chart.gauss_curvature[origin] == pytest.approx(1.0, abs=1e-12)
    assert abs(chart.mean_curvature[origin]) == pytest.approx(1.0, abs=1e-12)
    principal = np.linalg.eigvals(chart.geometry.curvature_mixed[origin])
    np.testing.assert_allclose(np.abs(principal), [1.0, 1.0], atol=1e-12)


def test_christoffel_matches_projection_oracle():
    # gamma^c_ab = beta^cd (d_a sigma_b . sigma_d), with d_a sigma_b from the exact embedding
    chart = paraboloid().sample(101, 51, (-1.0, 1.0, -0.5, 0.5))
    node = (60, 25)
    y = np.array([chart.y1[node[0]], chart.y2[node[1]]])
    assert np.allclose(y, [0.2, 0.0])

    def sigma(p):
        x, yy = p
        return np.array([[1.0, 0.0, x], [0.0, 1.0, yy]])  # tangents of z = (x^2 + y^2)/2

    step = 1e-5
    d_sigma = np.empty((2, 2, 3))
    for a in range(2):
        e = np.zeros(2)
        e[a] = step
        d_sigma[a] = (sigma(y + e) - sigma(y - e)) / (2 * step)
    tang = sigma(y)
    inv = np.linalg.inv(tang @ tang.T)
    oracle = np.einsum("cd,abi,di->cab", inv, d_sigma, tang)
    np.testing.assert_allclose(christoffel_at(chart, node), oracle, atol=1e-9)
    assert np.max(np.abs(oracle)) > 0.1


def test_christoffel_planar_charts_vanish():
    for surface in (plane(3.0), tilted_plane(0.4, -0.2)):
        chart = surface.sample(7, 7, (0, 1, 0, 1))
        assert np.max(np.abs(chart.christoffel)) < 1e-13


def test_offset_frame_examples():
    chart = paraboloid().sample(21, 21, (-1, 1, -1, 1))
    assert offset_frame(chart, (3, 7), 0.0).delta == 1.0
    flat = build_chart(np.zeros((3, 3)), (1.0, 1.0))
    assert offset_frame(flat, (1, 1), 7.0).delta == 1.0
    assert offset_frame(chart, (10, 10), 0.1).delta == pytest.approx(0.81, abs=1e-12)


def test_offset_beyond_focal_distance():
    chart = paraboloid().sample(21, 21, (-1, 1, -1, 1))
    with pytest.raises(DegenerateOffsetError):
        offset_frame(chart, (10, 10), 1.0)
    # an umbilic point has Delta = (1 - y3)^2, so the frame recovers past the focus
    assert offset_frame(chart, (10, 10), 1.5).delta == pytest.approx(0.25, abs=1e-12)


@pytest.mark.parametrize(
    "heights",
    [np.zeros((2, 5)), np.zeros((5,)), np.array([[0, 1, 2], [0, np.nan, 1], [1, 1, 1]], float)],
)
def test_chart_rejects_bad_input(heights):
    with pytest.raises(ChartError):
        build_chart(heights, (1.0, 1.0))


def test_chart_rejects_bad_spacing():
    with pytest.raises(ChartError):
        build_chart(np.zeros((3, 3)), (0.0, 1.0))


def test_gauss_equation_consistency_order():
    """d_b sigma_a - (gamma^c_ab sigma_c + kappa_ab nu) is O(spacing^2)."""
    bump = gaussian_bump()
    errors = []
    for n in (21, 41, 81):
        chart = bump.sample(n, n, (0, 1, 0, 1))
        g = chart.geometry
        d1, d2 = chart.spacing
        sig = g.tangents  # (n, n, a, i)
        deriv = np.stack(
            [
                (sig[2:, 1:-1] - sig[:-2, 1:-1]) / (2 * d1),
                (sig[1:-1, 2:] - sig[1:-1, :-2]) / (2 * d2),
            ],
            axis=2,
        )  # [.., b, a, i] = d_b sigma_a
        inner = (slice(1, -1), slice(1, -1))
        gauss = np.einsum("...cab,...ci->...bai", g.christoffel[inner], sig[inner]) + np.einsum(
            "...ab,...i->...bai", g.curvature[inner], g.normal[inner]
        )
        # skip nodes whose differenced neighbours carry one-sided edge tangents
        errors.append(float(np.max(np.abs(deriv - gauss)[1:-1, 1:-1])))
    assert np.all(observed_orders(errors) >= 1.8), errors


def test_flux_scalar_zero_and_constant():
    zero = lambda a, b, c: np.zeros(np.shape(c) + (3,))  # noqa: E731
    assert flux_scalar_vertical(zero, paraboloid(), (-0.5, 0.5, -0.5, 0.5), 0.0, 0.3, QUICK) == 0.0
    const = lambda a, b, c: np.broadcast_to([1.0, 0.0, 0.0], np.shape(c) + (3,))  # noqa: E731
    assert abs(flux_scalar_vertical(const, plane(), (0, 1, 0, 1), 0.0, 1.0, QUICK)) < 1e-10


def test_flux_rejects_inverted_column():
    f = lambda a, b, c: np.zeros(np.shape(c) + (3,))  # noqa: E731
    with pytest.raises(ValueError, match="column bounds"):
        flux_scalar_vertical(f, plane(), (0, 1, 0, 1), 0.5, 0.5, QUICK)


def test_flux_tensor_constant_pressure_cap():
    p = 3.0
    phi = lambda a, b, c: np.broadcast_to(-p * np.eye(3), np.shape(c) + (3, 3))  # noqa: E731
    region = (0.0, 2.0, 0.0, 0.5)
    cap, _ = flux_tensor_surfaces(phi, plane(), region, 0.4, 0.0, 1.0, QUICK)
    np.testing.assert_allclose(cap, [0.0, 0.0, -p * 1.0], atol=1e-12)
    zero = lambda a, b, c: np.zeros(np.shape(c) + (3, 3))  # noqa: E731
    cap, lateral = flux_tensor_surfaces(zero, paraboloid(), (-0.5, 0.5, -0.5, 0.5), 0.2, 0.0, 0.4, QUICK)
    assert np.all(cap == 0) and np.all(lateral == 0)


slopes = st.floats(-3.0, 3.0, allow_nan=False)
curvs = st.floats(-2.0, 2.0, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(slopes, slopes, curvs, curvs, curvs)
def test_local_geometry_identities(zx, zy, zxx, zxy, zyy):
    g = monge_geometry(*(np.array(v) for v in (zx, zy, zxx, zxy, zyy)))
    np.testing.assert_allclose(g.metric @ g.metric_inv, np.eye(2), atol=1e-10)
    assert np.linalg.norm(g.normal) == pytest.approx(1.0, abs=1e-14)
    assert g.nu3 > 0
    np.testing.assert_allclose(g.tangents @ g.normal, 0.0, atol=1e-12)
    np.testing.assert_allclose(g.curvature, g.curvature.T, atol=1e-14)
    np.testing.assert_allclose(g.christoffel, np.swapaxes(g.christoffel, -1, -2), atol=1e-14)
    assert g.area == pytest.approx(math.sqrt(np.linalg.det(g.metric)), rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(slopes, slopes, curvs, curvs, curvs, st.floats(-0.2, 0.2))
def test_volume_factor_is_metric_determinant(zx, zy, zxx, zxy, zyy, y3):
    g = monge_geometry(*(np.array(v) for v in (zx, zy, zxx, zxy, zyy)))
    e, q, delta, vol = offset_arrays(g, y3)
    if delta <= 0.05:
        return
    basis = np.vstack([e, g.normal])
    assert vol == pytest.approx(math.sqrt(np.linalg.det(basis @ basis.T)), rel=1e-10)
    assert vol == pytest.approx(g.area * delta, rel=1e-14)
