import numpy as np
import pytest

from hermcurv.jets import MetricJet, JetError, check_jet_invariants, inverse_and_det
from hermcurv.manifolds import (ChartPoint, DomainError, builtin, builtin_names,
                                conformal_manifold, manifold_from_manifest)

ALL_BUILTINS = [
    ("flat-torus", {}),
    ("hopf", {}),
    ("elliptic", {}),
    ("tricerri", {}),
    ("vaisman", {"m": 1.0}),
    ("vaisman", {"m": 2.0}),
    ("kaehler-bump", {}),
    ("pluriclosed-bump", {}),
]


def fd_jet_of_h(man, z, step=1e-5):
    """Central finite differences of h: oracle for dh and (via dh) ddh."""
    n = man.n

    def h_at(pts):
        return man.jet(pts, check_domain=False).h

    def dh_at(pts):
        return man.jet(pts, check_domain=False).dh

    dh = np.empty(z.shape[:-1] + (n, n, n), complex)
    ddh = np.empty(z.shape[:-1] + (n, n, n, n), complex)
    for k in range(n):
        dx = np.zeros_like(z)
        dx[..., k] = step
        dy = np.zeros_like(z)
        dy[..., k] = 1j * step
        ddx = (h_at(z + dx) - h_at(z - dx)) / (2 * step)
        ddy = (h_at(z + dy) - h_at(z - dy)) / (2 * step)
        dh[..., k, :, :] = 0.5 * (ddx - 1j * ddy)
        gdx = (dh_at(z + dx) - dh_at(z - dx)) / (2 * step)
        gdy = (dh_at(z + dy) - dh_at(z - dy)) / (2 * step)
        # anti-holomorphic derivative of the exact dh gives ddh[i, k, :, :]
        ddh[..., :, k, :, :] = 0.5 * (gdx + 1j * gdy)
    return dh, ddh


@pytest.mark.parametrize("name,params", ALL_BUILTINS)
def test_jets_match_finite_differences(name, params):
    man = builtin(name, **params)
    z = man.sample_points(200, seed=42)
    jet = man.jet(z)
    check_jet_invariants(jet)
    dh_fd, ddh_fd = fd_jet_of_h(man, z)
    scale = max(1.0, float(np.max(np.abs(jet.dh))))
    assert np.max(np.abs(jet.dh - dh_fd)) / scale < 1e-7
    scale2 = max(1.0, float(np.max(np.abs(jet.ddh))))
    assert np.max(np.abs(jet.ddh - ddh_fd)) / scale2 < 1e-7


@pytest.mark.parametrize("name,params", ALL_BUILTINS)
def test_closed_form_agrees_with_expression_path(name, params):
    man = builtin(name, **params)
    z = man.sample_points(60, seed=9)
    a = man.jet(z)
    b = man.expression_jet(z)
    np.testing.assert_allclose(a.h, b.h, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(a.dh, b.dh, rtol=1e-10, atol=1e-10)
    np.testing.assert_allclose(a.ddh, b.ddh, rtol=1e-9, atol=1e-9)


def test_hopf_value_at_unit_point():
    man = builtin("hopf", n=2)
    jet = man.evaluate_metric_jet(ChartPoint((1.0, 0.0)))
    np.testing.assert_allclose(jet.h, np.diag([4.0, 4.0]), atol=1e-14)
    ginv, det = inverse_and_det(jet)
    np.testing.assert_allclose(ginv, np.diag([0.25, 0.25]), atol=1e-14)
    np.testing.assert_allclose(det, 16.0, rtol=1e-13)


def test_tricerri_value_at_unit_height():
    man = builtin("tricerri")
    jet = man.evaluate_metric_jet(ChartPoint((1j, 0.3 + 0.1j)))
    np.testing.assert_allclose(jet.h, np.eye(2), atol=1e-14)


def test_vaisman_inverse_matches_closed_form():
    man = builtin("vaisman", m=0.0)
    # v = Im z2 = 0 so s = 0: inverse should be diag-ish with h^{zz} = y^2
    z = np.array([0.2 + 1.3j, 0.5 + 0j])
    jet = man.evaluate_metric_jet(z)
    ginv, _ = inverse_and_det(jet)
    y = 1.3
    np.testing.assert_allclose(ginv[0, 0], y ** 2, rtol=1e-13)
    np.testing.assert_allclose(ginv[1, 1], 1.0, rtol=1e-13)
    np.testing.assert_allclose(ginv[0, 1], 0.0, atol=1e-13)


def test_elliptic_inverse_closed_form():
    man = builtin("elliptic")
    z = np.array([0.4 + 0.9j, 0.7 - 0.2j])
    jet = man.evaluate_metric_jet(z)
    ginv, _ = inverse_and_det(jet)
    y, w = 0.9, 0.7 - 0.2j
    np.testing.assert_allclose(ginv[0, 0], y ** 2, rtol=1e-12)
    np.testing.assert_allclose(ginv[0, 1], -0.5j * y * np.conj(w), rtol=1e-12)
    np.testing.assert_allclose(ginv[1, 0], 0.5j * y * w, rtol=1e-12)
    np.testing.assert_allclose(ginv[1, 1], abs(w) ** 2 / 2, rtol=1e-12)


def test_random_spd_inverse_residual():
    rng = np.random.default_rng(123)
    a = rng.normal(size=(40, 3, 3)) + 1j * rng.normal(size=(40, 3, 3))
    h = np.einsum("...ij,...kj->...ik", a, np.conj(a)) + 3 * np.eye(3)
    jet = MetricJet(h, np.zeros((40, 3, 3, 3), complex),
                    np.zeros((40, 3, 3, 3, 3), complex))
    ginv, det = inverse_and_det(jet)
    resid = np.einsum("...ij,...kj->...ik", ginv, h) - np.eye(3)
    assert np.max(np.abs(resid)) < 1e-12
    assert np.all(det > 0)


def test_domain_violations_raise():
    with pytest.raises(DomainError):
        builtin("hopf", n=2).evaluate_metric_jet(np.array([0j, 0j]))
    with pytest.raises(DomainError):
        builtin("tricerri").evaluate_metric_jet(np.array([1.0 - 1j, 0j]))


def test_indefinite_metric_rejected():
    h = np.array([[1.0 + 0j, 0], [0, -1.0]])
    jet = MetricJet(h, np.zeros((2, 2, 2), complex), np.zeros((2, 2, 2, 2), complex))
    with pytest.raises(JetError, match="positive definite"):
        inverse_and_det(jet)


def test_manifest_roundtrip(tmp_path):
    doc = {
        "name": "custom-hopf",
        "n": 2,
        "params": {},
        "metric": "h[1][1] = 4/(abs2(z1)+abs2(z2))\n"
                  "h[2][2] = 4/(abs2(z1)+abs2(z2))",
        "domain": {"kind": "punctured"},
    }
    man = manifold_from_manifest(doc)
    ref = builtin("hopf", n=2)
    z = ref.sample_points(20, seed=1)
    np.testing.assert_allclose(man.jet(z).h, ref.jet(z).h, rtol=1e-12)


def test_conformal_manifold_flattens_hopf():
    # e^{log|z|^2} * (4/|z|^2) delta = 4 delta: the flat-cover form
    man = builtin("hopf", n=2)
    flat = conformal_manifold(man, "log(abs2(z1) + abs2(z2))")
    z = man.sample_points(20, seed=4)
    jet = flat.jet(z)
    assert np.max(np.abs(jet.h - 4 * np.eye(2))) < 1e-10
    assert np.max(np.abs(jet.dh)) < 1e-10
    assert np.max(np.abs(jet.ddh)) < 1e-9


def test_conformal_manifold_rejects_complex_factor():
    man = builtin("flat-torus", n=2)
    with pytest.raises(ValueError, match="real"):
        conformal_manifold(man, "z1")


def test_builtin_names_cover_catalog():
    for name in builtin_names():
        man = builtin(name)
        assert man.n >= 2
