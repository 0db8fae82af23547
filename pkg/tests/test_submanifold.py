"""Sampled immersions: frames, fundamental forms, volumes, residual checks."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import sphere_patch
from fbstab import domain as dm
from fbstab import submanifold as sub
from fbstab.errors import ConfigError, DegenerateSampleError, InvalidSampleError
from fbstab.fields import ConformalMetric, make_field


def _sample_with_J(J):
    n, k = J.shape
    return sub.InteriorSample(np.zeros(n), J, np.zeros((k, k, n)), 1.0)


def test_adapted_frame_identity_columns():
    J = np.eye(5)[:, :2]
    frame = sub.adapted_frame(_sample_with_J(J))
    assert np.allclose(frame.tangent, np.eye(5)[:2])
    assert np.allclose(frame.normal, np.eye(5)[2:])


def test_adapted_frame_scale_invariant():
    J = np.array([[1.0, 0.5], [0.0, 2.0], [1.0, -1.0], [0.0, 0.3]])
    f1 = sub.adapted_frame(_sample_with_J(J))
    f2 = sub.adapted_frame(_sample_with_J(2.0 * J))
    assert np.allclose(f1.tangent, f2.tangent, atol=1e-14)
    assert np.allclose(f1.normal, f2.normal, atol=1e-14)


def test_adapted_frame_rejects_degenerate():
    J = np.zeros((4, 2))
    J[:, 0] = [1, 0, 0, 0]
    J[:, 1] = [1 + 1e-13, 0, 0, 0]
    with pytest.raises(DegenerateSampleError):
        sub.adapted_frame(_sample_with_J(J))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_adapted_frame_gram_identity(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 7))
    k = int(rng.integers(1, n))
    J = rng.normal(size=(n, k))
    frame = sub.adapted_frame(_sample_with_J(J))
    assert frame.gram_defect() < 1e-10
    # tangent spans the column space
    proj = frame.tangent.T @ frame.tangent
    assert np.allclose(proj @ J, J, atol=1e-10)


def test_flat_disk_zero_forms(flat_b4, metric_zero4):
    imm = flat_b4.immersion
    s = imm.interior[10]
    alpha, H, Hc = sub.fundamental_forms(s, metric_zero4)
    assert np.max(np.abs(alpha)) < 1e-14
    assert np.allclose(H, 0.0) and np.allclose(Hc, 0.0)


def test_sphere_patch_mean_curvature():
    for radius in (1.0, 2.5):
        imm = sphere_patch(radius=radius)
        geo = imm.geometry()
        norms = np.linalg.norm(geo.H, axis=1)
        assert np.max(np.abs(norms - 2.0 / radius)) < 1e-8
        # mean curvature points toward the center
        inward = -imm.xs / np.linalg.norm(imm.xs, axis=1, keepdims=True)
        align = np.sum(geo.H * inward, axis=1) / norms
        assert np.min(align) > 1.0 - 1e-10


def test_paraboloid_mean_curvature_closed_form():
    c = 0.5
    imm = sub.make_immersion("paraboloid-cap", curvature=c, n=3)
    geo = imm.geometry()
    r = np.linalg.norm(imm.xs[:, :2], axis=1)
    slope = c * r
    want = c / (1 + slope**2) ** 1.5 + slope / (r * np.sqrt(1 + slope**2))
    assert np.max(np.abs(np.linalg.norm(geo.H, axis=1) - want)) < 1e-12


def test_equatorial_disk_minimal_in_radial_metric(cap_b4):
    imm, metric = cap_b4.immersion, cap_b4.metric
    s = imm.interior[7]
    alpha, H, Hc = sub.fundamental_forms(s, metric)
    assert np.allclose(H, 0.0, atol=1e-14)
    assert np.allclose(Hc, 0.0, atol=1e-14)
    report = sub.check_minimality(imm, metric, 1e-8)
    assert report.passed and report.max_residual < 1e-12


def test_conformal_sff(cap_b4, metric_zero4):
    imm, metric = cap_b4.immersion, cap_b4.metric
    s = imm.interior[3]
    alpha, H, Hc = sub.fundamental_forms(s, metric)
    # zero exponent: unchanged
    at0 = sub.conformal_sff(alpha, s, metric_zero4)
    assert np.allclose(at0, alpha)
    # radial exponent on the equatorial disk: normal gradient vanishes
    at = sub.conformal_sff(alpha, s, metric)
    assert np.max(np.abs(at)) < 1e-14
    # trace law against the conformal mean curvature
    frame = sub.adapted_frame(s)
    tr = frame.normal.T @ np.einsum("iir->r", at)
    assert np.allclose(tr, np.exp(2 * metric.field.value(s.x)) * Hc, atol=1e-12)


def test_conformal_sff_closure_via_connection(custom_b4):
    """Rescaled-metric fundamental forms recomputed from the chart and the
    connection correction agree with the transformation law."""
    imm, metric = custom_b4.immersion, custom_b4.metric
    from fbstab import conformal

    for i in (0, 11, 101):
        s = imm.interior[i]
        frame = sub.adapted_frame(s)
        alpha, _, _ = sub.fundamental_forms(s, metric)
        want = sub.conformal_sff(alpha, s, metric)
        k = imm.k
        C = np.linalg.inv(np.linalg.qr(s.J)[1])
        C = C * np.sign(np.diag(np.linalg.qr(s.J)[1]))[None, :]
        got = np.zeros_like(want)
        for a in range(k):
            for b in range(k):
                corr = conformal.connection_correction(metric.field, s.x, s.J[:, a], s.J[:, b])
                vec = s.Hchart[a, b] + corr
                got += np.einsum(
                    "r,i,j->ijr", frame.normal @ vec, C[a], C[b]
                )
        assert np.max(np.abs(got - want)) < 1e-8


def test_volumes(flat_b4, cap_b4, metric_zero4):
    assert abs(sub.volume(flat_b4.immersion, metric_zero4) - np.pi) < 1e-6
    assert abs(sub.volume(cap_b4.immersion, cap_b4.metric) - 2 * np.pi) < 1e-6
    assert abs(sub.boundary_volume(flat_b4.immersion, metric_zero4) - 2 * np.pi) < 1e-6


def test_volume_k3():
    imm = sub.make_immersion("equatorial-disk", n=5, k=3)
    m0 = ConformalMetric(make_field("zero"), 5)
    ms = ConformalMetric(make_field("radial-spherical"), 5)
    assert abs(sub.volume(imm, m0) - 4 * np.pi / 3) < 1e-9
    assert abs(sub.boundary_volume(imm, m0) - 4 * np.pi) < 1e-9
    assert abs(sub.volume(imm, ms) - np.pi**2) < 1e-9


def test_frame_invariance_under_reparametrization(rng):
    """Volume and mean curvature are chart-independent."""
    imm = sub.make_immersion("random-graph", n=5, k=2, seed=21, degree=2)
    A = rng.normal(size=(2, 2)) + 2 * np.eye(2)
    Js = np.einsum("mna,ab->mnb", imm.Js, A)
    Hs = np.einsum("ac,bd,mabn->mcdn", A, A, imm.Hs)
    ws = imm.ws / abs(np.linalg.det(A))
    imm2 = sub.SampledImmersion(2, 5, imm.xs, Js, Hs, ws)
    m0 = ConformalMetric(make_field("zero"), 5)
    assert abs(sub.volume(imm, m0) - sub.volume(imm2, m0)) < 1e-9 * abs(sub.volume(imm, m0))
    g1, g2 = imm.geometry(), imm2.geometry()
    assert np.max(np.abs(g1.H - g2.H)) < 1e-9
    a1 = np.einsum("mijr,mijr->m", g1.alpha, g1.alpha)
    a2 = np.einsum("mijr,mijr->m", g2.alpha, g2.alpha)
    assert np.max(np.abs(a1 - a2)) < 1e-9


def test_check_minimality_fail_and_infinite_tol():
    imm = sub.make_immersion("paraboloid-cap", curvature=0.5, n=3)
    m0 = ConformalMetric(make_field("zero"), 3)
    rep = sub.check_minimality(imm, m0, 1e-8)
    assert not rep.passed and rep.max_residual > 0.1
    assert sub.check_minimality(imm, m0, np.inf).passed


def test_free_boundary_checks(flat_b4, ball4):
    rep = sub.check_free_boundary(flat_b4.immersion, ball4, 1e-9)
    assert rep.passed
    tilt = sub.make_immersion("tilted-disk", angle=np.deg2rad(10), n=3)
    ball3 = dm.make_domain("ball", 3, radius=1.0)
    rep = sub.check_free_boundary(tilt, ball3, 1e-3)
    assert not rep.passed
    assert abs(rep.max_residual - (1 - np.cos(np.deg2rad(10)))) < 1e-9


def test_free_boundary_conformal_invariance(cap_b4):
    imm, dom, metric = cap_b4.immersion, cap_b4.domain, cap_b4.metric
    d0 = sub.boundary_defects(imm, dom)
    d1 = sub.boundary_defects(imm, dom, metric)
    assert np.max(np.abs(d0 - d1)) < 1e-12


def test_off_boundary_sample_rejected(flat_b4):
    imm = flat_b4.immersion
    shrunk = sub.SampledImmersion(
        2, 4, imm.xs, imm.Js, imm.Hs, imm.ws,
        0.9 * imm.bxs, imm.bJs, imm.bws, imm.bnus,
    )
    with pytest.raises(InvalidSampleError):
        sub.boundary_defects(shrunk, flat_b4.domain)


def test_validation_rejects_bad_samples(flat_b4):
    imm = flat_b4.immersion
    with pytest.raises(ConfigError):
        sub.SampledImmersion(2, 4, imm.xs, imm.Js, imm.Hs, -imm.ws)
    bad_H = np.array(imm.Hs)
    bad_H[0, 0, 1, :] += 1.0
    with pytest.raises(ConfigError):
        sub.SampledImmersion(2, 4, imm.xs, imm.Js, bad_H, imm.ws)
    bad_nu = np.array(imm.bnus)
    bad_nu[0] *= 2.0
    with pytest.raises(InvalidSampleError):
        sub.SampledImmersion(2, 4, imm.xs, imm.Js, imm.Hs, imm.ws,
                             imm.bxs, imm.bJs, imm.bws, bad_nu)


def test_json_round_trip(cap_b4):
    imm = cap_b4.immersion
    text = sub.immersion_to_json(imm)
    back = sub.immersion_from_json(text)
    assert sub.immersion_to_json(back) == text
    assert np.array_equal(back.xs, imm.xs)
    assert np.array_equal(back.bnus, imm.bnus)
    with pytest.raises(ConfigError):
        sub.immersion_from_dict({"schema": "other/1"})


def test_random_graph_deterministic():
    a = sub.make_immersion("random-graph", n=5, k=3, seed=7, degree=2)
    b = sub.make_immersion("random-graph", n=5, k=3, seed=7, degree=2)
    assert np.array_equal(a.xs, b.xs) and np.array_equal(a.Hs, b.Hs)
    c = sub.make_immersion("random-graph", n=5, k=3, seed=8, degree=2)
    assert not np.array_equal(a.xs, c.xs)


def test_unknown_immersion_kind():
    with pytest.raises(ConfigError):
        sub.make_immersion("moebius")
