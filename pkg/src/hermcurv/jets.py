"""Pointwise 2-jets of Hermitian metrics.

A `MetricJet` bundles, at one or many chart points,

* ``h``   -- h_{i jbar}, shape (..., n, n), Hermitian positive definite,
* ``dh``  -- dh[..., i, j, l] = d h_{j lbar} / d z^i, shape (..., n, n, n),
* ``ddh`` -- ddh[..., i, j, k, l] = d^2 h_{k lbar} / d z^i d zbar^j,
             shape (..., n, n, n, n).

Antiholomorphic first derivatives are never stored: d h_{j lbar}/d zbar^i
equals conj(dh[i, l, j]).  Every curvature formula downstream consumes
exactly this data; all functions broadcast over leading batch axes, so a
single point and a million grid nodes go through the same code path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["MetricJet", "FactorJet", "JetError", "inverse_and_det",
           "conformal_jet", "check_jet_invariants"]

# smallest Cholesky pivot must exceed this times the largest diagonal entry
PD_PIVOT_RTOL = 1e-10
INVERSE_RTOL = 1e-12


class JetError(ValueError):
    """Invalid jet: loss of positivity, broken symmetry, or singular h."""


@dataclass
class MetricJet:
    h: np.ndarray
    dh: np.ndarray
    ddh: np.ndarray

    @property
    def n(self) -> int:
        return self.h.shape[-1]

    def point_count(self) -> int:
        return int(np.prod(self.h.shape[:-2], dtype=int)) if self.h.ndim > 2 else 1

    def __getitem__(self, idx) -> "MetricJet":
        return MetricJet(self.h[idx], self.dh[idx], self.ddh[idx])


@dataclass
class FactorJet:
    """2-jet of a real conformal factor f: value, df[i] = d f/d z^i,
    ddf[i, j] = d^2 f / d z^i d zbar^j."""

    f: np.ndarray
    df: np.ndarray
    ddf: np.ndarray

    @property
    def n(self) -> int:
        return self.df.shape[-1]


def check_jet_invariants(jet: MetricJet, atol: float = 1e-10) -> None:
    """Assert Hermitian symmetry of h and the two conjugation identities."""
    h, dh, ddh = jet.h, jet.dh, jet.ddh
    herm = np.max(np.abs(h - np.conj(np.swapaxes(h, -1, -2))))
    if herm > atol:
        raise JetError(f"h is not Hermitian: max deviation {herm:.3e}")
    # conj(ddh[i,j,k,l]) must equal ddh[j,i,l,k]
    flip = np.conj(np.transpose(ddh, axes=(*range(ddh.ndim - 4), -3, -4, -1, -2)))
    dev = np.max(np.abs(ddh - flip))
    if dev > atol * max(1.0, float(np.max(np.abs(ddh)))):
        raise JetError(f"ddh conjugation symmetry broken: max deviation {dev:.3e}")


def inverse_and_det(jet: MetricJet, cond_limit: float = 1e12):
    """Inverse metric h^{i jbar} and det h, with positivity diagnostics.

    Returns (ginv, det) where ginv[..., i, j] = h^{i jbar}, i.e. the matrix
    satisfying sum_j h^{i jbar} h_{k jbar} = delta_{ik}; as an array this is
    the transpose of the plain matrix inverse of h.

    Positivity is checked by Cholesky factorization: the smallest pivot has
    to exceed PD_PIVOT_RTOL times the largest diagonal entry.  A condition
    number beyond `cond_limit` (estimated from the pivots) raises JetError.
    """
    h = jet.h
    try:
        chol = np.linalg.cholesky(h)
    except np.linalg.LinAlgError as err:
        raise JetError(f"metric is not positive definite: {err}") from None
    pivots = np.einsum("...ii->...i", chol).real ** 2
    hdiag = np.einsum("...ii->...i", h).real
    bad = pivots.min(axis=-1) <= PD_PIVOT_RTOL * hdiag.max(axis=-1)
    if np.any(bad):
        raise JetError("metric is not positive definite: Cholesky pivot below "
                       f"{PD_PIVOT_RTOL} * max diagonal")
    cond_est = (pivots.max(axis=-1) / pivots.min(axis=-1)) ** 1.0
    if np.any(cond_est > cond_limit):
        raise JetError(f"metric numerically singular: condition estimate "
                       f"{float(np.max(cond_est)):.3e} beyond {cond_limit:.1e}")
    minv = np.linalg.inv(h)
    ginv = np.swapaxes(minv, -1, -2)
    det = np.prod(pivots, axis=-1)
    resid = np.einsum("...ij,...kj->...ik", ginv, h)
    eye = np.eye(jet.n)
    dev = np.max(np.abs(resid - eye))
    if dev > INVERSE_RTOL * max(1.0, float(np.max(np.abs(h)))) * 10:
        raise JetError(f"inverse residual {dev:.3e} too large")
    return ginv, det


def conformal_jet(jet: MetricJet, fj: FactorJet) -> MetricJet:
    """Jet of e^f h from the jets of h and f (f real).

    d(e^f h_{j lbar})/dz^i       = e^f (f_i h_{j lbar} + dh[i,j,l])
    d^2(e^f h_{k lbar})/dz^i dzbar^j
        = e^f [ (f_{i jbar} + f_i conj(f_j)) h_{k lbar}
                + conj(f_j) dh[i,k,l] + f_i conj(dh[j,l,k]) + ddh[i,j,k,l] ]
    """
    ef = np.exp(fj.f)
    h, dh, ddh = jet.h, jet.dh, jet.ddh
    df, ddf = fj.df, fj.ddf
    h2 = ef[..., None, None] * h
    dh2 = ef[..., None, None, None] * (df[..., :, None, None] * h[..., None, :, :] + dh)
    dbarh = np.conj(np.swapaxes(dh, -1, -2))  # dbarh[..., j, k, l] = d h_{k lbar}/dzbar^j
    term0 = (ddf[..., :, :, None, None]
             + df[..., :, None, None, None] * np.conj(df)[..., None, :, None, None]) \
        * h[..., None, None, :, :]
    term1 = np.conj(df)[..., None, :, None, None] * dh[..., :, None, :, :]
    term2 = df[..., :, None, None, None] * dbarh[..., None, :, :, :]
    ddh2 = ef[..., None, None, None, None] * (term0 + term1 + term2 + ddh)
    return MetricJet(h2, dh2, ddh2)
