"""Closed-form SINR statistics and sum-rate scaling laws.

All rates are in nats per channel use.  ``rho = P_T / (M sigma2)`` is the
per-beam SNR.  The SINR law of one beam is expressed in the eigenbasis of
the (unnormalised) covariance ``R = U^H diag(lam) U``; the rotated beam is
``phi_bar = U phi``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import comb

from .channel import CovarianceModel

__all__ = [
    "SinrLaw",
    "ScalingParams",
    "DegenerateSpectrumError",
    "am_matrix",
    "max_eigpair",
    "sinr_cdf",
    "sinr_pdf",
    "sinr_sf",
    "growth_function",
    "growth_limit",
    "l_k_root",
    "chi2_lk",
    "expected_log_y",
    "expected_log_y_oracle",
    "scaling_dpc",
    "scaling_rbf",
    "scaling_dbf",
    "scaling_no_irs_rbf",
]

DEGENERACY_TOL = 1e-9


class DegenerateSpectrumError(ValueError):
    """Raised when a partial-fraction formula meets (nearly) repeated eigenvalues."""


@dataclass(frozen=True)
class SinrLaw:
    """Distribution of the SINR of one beam for a fixed beam matrix.

    Attributes
    ----------
    phi_bar : ndarray, shape (M,)
        Beam rotated into the covariance eigenbasis, unit norm.
    lam : ndarray, shape (M,)
        Eigenvalues of the unnormalised covariance ``R``.
    rho : float
        ``P_T / (M sigma2)``.
    """

    phi_bar: np.ndarray
    lam: np.ndarray
    rho: float

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if not np.isclose(np.linalg.norm(self.phi_bar), 1.0, atol=1e-9):
            raise ValueError("beam must have unit norm")

    @property
    def m(self) -> int:
        return self.lam.size

    @classmethod
    def from_covariance(cls, cov: CovarianceModel, phi, beam, p_t, sigma2):
        """Law of beam ``beam`` (zero based) of the beam matrix ``phi``."""
        phi = np.asarray(getattr(phi, "phi", phi))
        m = cov.m
        return cls(cov.u @ phi[:, beam], cov.eigvals_r, p_t / (m * sigma2))


def am_matrix(x, phi_bar, lam):
    """``A_m(x) = (1 + x) L^1/2 phi phi^H L^1/2 - x L`` with ``L = diag(lam)``."""
    s = np.sqrt(np.asarray(lam, dtype=float)) * np.asarray(phi_bar)
    return (1.0 + x) * np.outer(s, s.conj()) - x * np.diag(lam)


def max_eigpair(phi_bar, lam):
    """Closed-form top eigenpair ``(1 / (phi^H L^-1 phi), L^-1/2 phi / sqrt(phi^H L^-1 phi))``.

    This is the eigenpair of ``A_m(x)`` for every ``x`` when ``phi_bar`` is an
    eigenvector of ``L`` (deterministic beams).  For a generic beam it is the
    ``x -> inf`` limit of the top eigenpair, which is what governs the tail
    of the SINR law.

    Raises
    ------
    ValueError
        If ``lam`` has a nonpositive entry.
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("eigenvalue matrix is singular")
    phi_bar = np.asarray(phi_bar)
    quad = float(np.sum(np.abs(phi_bar) ** 2 / lam))
    return 1.0 / quad, phi_bar / np.sqrt(lam) / np.sqrt(quad)


def _spectrum(x, law: SinrLaw):
    w, q = np.linalg.eigh(am_matrix(x, law.phi_bar, law.lam))
    top = w[-1]
    gaps = top - w[:-1]
    if np.any(gaps < DEGENERACY_TOL * np.max(np.abs(w))):
        raise DegenerateSpectrumError(
            "top eigenvalue of A_m is (nearly) repeated; perturb the covariance")
    return w, q


def _log_tail(x, law: SinrLaw):
    """``log(1 - F(x))`` and the eigen data it was built from."""
    w, q = _spectrum(x, law)
    top, rest = w[-1], w[:-1]
    log_tail = float(np.sum(np.log(top / (top - rest))) - x / (law.rho * top))
    return log_tail, w, q


def sinr_cdf(x, law: SinrLaw) -> float:
    """CDF of the SINR of one beam at ``x >= 0``.

    ``1 - F(x) = prod_{i<M} lam_M / (lam_M - lam_i) * exp(-x / (rho lam_M))``
    with ``lam_i`` the eigenvalues of ``A_m(x)``.  Exactly one of them is
    positive, so this is the tail of an indefinite Gaussian quadratic form.
    """
    if x <= 0:
        return 0.0
    return float(-np.expm1(_log_tail(x, law)[0]))


def _dlog_tail(x, law: SinrLaw):
    log_tail, w, q = _log_tail(x, law)
    b = am_matrix(1.0, law.phi_bar, law.lam) - am_matrix(0.0, law.phi_bar, law.lam)
    dw = np.real(np.einsum("ij,ik,kj->j", q.conj(), b, q))
    top, rest = w[-1], w[:-1]
    dtop, drest = dw[-1], dw[:-1]
    dlog = (np.sum(dtop / top - (dtop - drest) / (top - rest))
            - 1.0 / (law.rho * top) + x * dtop / (law.rho * top ** 2))
    return log_tail, float(dlog)


def sinr_sf(x, law: SinrLaw) -> float:
    """Survival function ``1 - F(x)``, accurate deep in the tail."""
    if x <= 0:
        return 1.0
    return float(np.exp(_log_tail(x, law)[0]))


def sinr_pdf(x, law: SinrLaw) -> float:
    """Density of the SINR, the exact derivative of :func:`sinr_cdf`.

    Eigenvalue derivatives come from ``d lam_i / dx = q_i^H B q_i`` with
    ``B = dA_m/dx = L^1/2 (phi phi^H - I) L^1/2``.
    """
    if x < 0:
        return 0.0
    log_tail, dlog = _dlog_tail(x, law)
    return float(-np.exp(log_tail) * dlog)


def growth_function(x, law: SinrLaw) -> float:
    """``(1 - F(x)) / f(x)`` evaluated in log space so it survives underflow."""
    return -1.0 / _dlog_tail(x, law)[1]


def growth_limit(law: SinrLaw) -> float:
    """Limit ``c = rho / (phi^H L^-1 phi)`` of the growth function ``(1 - F) / f``."""
    return law.rho * max_eigpair(law.phi_bar, law.lam)[0]


def l_k_root(k, law: SinrLaw, tol=1e-10) -> float:
    """Solve ``F(l) = 1 - 1/K`` for the typical maximum of ``K`` SINRs.

    Raises
    ------
    ValueError
        If ``K < 2`` or no sign change is found while expanding the bracket.
    """
    if k < 2:
        raise ValueError("K must be >= 2")
    c = growth_limit(law)
    target = -math.log(k)
    hi = c * (math.log(k) + law.m * math.log(max(math.log(k), 1.0))) * 4.0
    hi = max(hi, c)
    for _ in range(200):
        if _log_tail(hi, law)[0] < target:
            break
        hi *= 2.0
    else:
        raise ValueError("could not bracket the l_K root")
    root = brentq(lambda t: _log_tail(t, law)[0] - target, 0.0, hi,
                  xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    resid = abs(sinr_cdf(root, law) - (1.0 - 1.0 / k))
    if resid > tol:
        raise ValueError(f"l_K root residual {resid:.2e} above tolerance")
    return float(root)


def chi2_lk(m, k) -> float:
    """Two leading terms ``ln K + (M - 1) ln ln K`` of the chi-square(2M) maximum."""
    if k < 3:
        raise ValueError("K must be >= 3")
    return math.log(k) + (m - 1) * math.log(math.log(k))


def _distinct(lam):
    lam = np.sort(np.asarray(lam, dtype=float))
    if lam.size > 1 and np.min(np.diff(lam)) < DEGENERACY_TOL * lam.mean():
        warnings.warn("repeated covariance eigenvalues: applying 1e-6 relative jitter",
                      RuntimeWarning, stacklevel=3)
        lam = lam + 1e-6 * lam.mean() * np.arange(lam.size)
    return lam


def expected_log_y(lam) -> float:
    """``E[log 1/(phi^H R_bar^-1 phi)]`` over an isotropic unit beam.

    Partial-fraction series in the eigenvalues ``lam`` of ``R_bar``, with
    weights ``eta_i = 1 / prod_{j != i} (1/lam_j - 1/lam_i)``.  Repeated
    eigenvalues are jittered by ``1e-6 * mean(lam)`` with a warning.
    """
    lam = _distinct(lam)
    m = lam.size
    if m == 1:
        return float(math.log(lam[0]))
    inv = 1.0 / lam
    eta = np.array([1.0 / np.prod(np.delete(inv, i) - inv[i]) for i in range(m)])
    l1 = lam[0]
    total = math.log(l1)
    total += float(np.sum(eta * (-inv) ** (m - 1) * np.log(lam / l1)))
    for l in range(1, m):
        total += float(np.sum(eta * comb(m - 1, l) / l
                              * (l1 ** -l - lam ** -l) * (-inv) ** (m - 1 - l)))
    return total


def expected_log_y_oracle(lam) -> float:
    """Same expectation from the B-spline density of ``sum_i w_i / lam_i``.

    With uniform simplex weights ``w`` and ``a_i = 1/lam_i`` distinct,
    ``E[ln sum w_i a_i] = sum_i a_i^(M-1) ln a_i / prod_{j != i} (a_i - a_j) - H_{M-1}``.
    """
    a = 1.0 / _distinct(lam)
    m = a.size
    harmonic = sum(1.0 / j for j in range(1, m))
    s = sum(a[i] ** (m - 1) * math.log(a[i]) / np.prod(a[i] - np.delete(a, i)) for i in range(m))
    return float(-(s - harmonic))


@dataclass(frozen=True)
class ScalingParams:
    """Inputs of the sum-rate scaling laws.

    ``alpha_sq_sum`` is ``sum_n alpha_n^2``; ``logdet`` and ``eigvals`` refer
    to the normalised covariance ``R_bar``.
    """

    m: int
    k: float
    p_t: float
    sigma2: float
    beta_r: float = 0.0
    beta_d: float = 1.0
    alpha_sq_sum: float = 0.0
    logdet: float = 0.0
    eigvals: np.ndarray | None = None

    def __post_init__(self):
        if self.k < 3:
            raise ValueError("K must be >= 3 for the scaling laws")
        if self.m < 1:
            raise ValueError("M must be >= 1")

    @classmethod
    def from_covariance(cls, cov: CovarianceModel, k, p_t, sigma2, beta_r, beta_d):
        # the normaliser of R_bar is beta_r sum(alpha^2) + beta_d
        a2 = (cov.scale - beta_d) / beta_r if beta_r > 0 else 0.0
        return cls(cov.m, k, p_t, sigma2, beta_r, beta_d, a2, cov.logdet, cov.eigvals)

    @property
    def scale(self) -> float:
        return self.beta_r * self.alpha_sq_sum + self.beta_d


def _log_checked(v, what):
    if not v > 0:
        raise ValueError(f"nonpositive argument to log in {what}: {v!r}")
    return math.log(v)


def _common(p: ScalingParams) -> float:
    return p.m * (_log_checked(p.p_t / (p.sigma2 * p.m), "SNR term")
                  + _log_checked(p.scale * math.log(p.k), "diversity term"))


def scaling_dpc(p: ScalingParams) -> float:
    """DPC sum-capacity scaling ``M ln(P_T/(sigma2 M)) + M ln(s ln K) + ln det R_bar``.

    ``s = beta_r sum alpha^2 + beta_d``.  With ``alpha = 0`` this is the
    no-IRS law.
    """
    return _common(p) + p.logdet


def scaling_dbf(p: ScalingParams, phi=None, cov: CovarianceModel | None = None) -> float:
    """DBF scaling law; equal to :func:`scaling_dpc` for ``Phi = U^H``.

    Passing a beam matrix ``phi`` (with its ``cov``) evaluates the generic
    form ``sum_m ln(1 / (phi_bar_m^H Lbar^-1 phi_bar_m))`` instead of the
    log-determinant.
    """
    if phi is None:
        return scaling_dpc(p)
    if cov is None:
        raise ValueError("a covariance model is needed with an explicit beam matrix")
    phi_bar = cov.u @ np.asarray(getattr(phi, "phi", phi))
    quad = np.sum(np.abs(phi_bar) ** 2 / cov.eigvals[:, None], axis=0)
    return _common(p) + float(np.sum(-np.log(quad)))


def scaling_rbf(p: ScalingParams) -> float:
    """RBF scaling law: the log-determinant replaced by ``M E[log y]`` over isotropic beams."""
    if p.eigvals is None:
        # white covariance: every beam sees the same unit gain
        return _common(p)
    return _common(p) + p.m * expected_log_y(p.eigvals)


def scaling_no_irs_rbf(m, k, p_t, sigma2, beta_d) -> float:
    """No-IRS RBF law ``M ln(beta_d ln K) + M ln(P_T / (sigma2 M))``."""
    return scaling_dpc(ScalingParams(m, k, p_t, sigma2, 0.0, beta_d))
