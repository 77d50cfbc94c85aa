"""Random IRS rotations, Rayleigh fading and the overall channel statistics."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .rng import make_rng

__all__ = [
    "IrsResponse",
    "Fading",
    "ChannelRealization",
    "CovarianceModel",
    "draw_irs_phases",
    "draw_fading",
    "compose_channel",
    "covariance",
    "crandn",
]

PSD_RTOL = 1e-10


def crandn(rng, *shape):
    """Circularly symmetric CN(0, 1) samples."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


@dataclass(frozen=True)
class IrsResponse:
    """Phase shifts and reflection amplitudes of the N IRS elements.

    ``bits is None`` means continuous phases; otherwise phases live on the
    ``2**bits`` point grid ``{0, 2pi/Q, ...}``.
    """

    phases: np.ndarray
    amplitudes: np.ndarray
    bits: int | None = None

    @property
    def n(self) -> int:
        return self.phases.size

    @property
    def diagonal(self) -> np.ndarray:
        """Diagonal of the reflection matrix, ``alpha_n exp(j theta_n)``."""
        return self.amplitudes * np.exp(1j * self.phases)


def phase_grid(bits: int) -> np.ndarray:
    if bits < 1:
        raise ValueError("discrete phase mode needs at least one bit")
    q = 2 ** bits
    return 2 * np.pi * np.arange(q) / q


def draw_irs_phases(n, bits=None, seed=None, amplitudes=1.0) -> IrsResponse:
    """Draw i.i.d. uniform IRS phases for one coherence interval.

    Parameters
    ----------
    n : int
        Number of IRS elements.
    bits : int or None
        ``None`` for phases uniform on ``[0, 2pi)``; ``b >= 1`` for phases
        uniform on the ``2**b`` point grid.
    seed : int, SeedSequence or Generator
    amplitudes : float or array_like
        Reflection coefficients in ``[0, 1]``.
    """
    if n < 1:
        raise ValueError("need at least one IRS element")
    rng = make_rng(seed)
    if bits is None:
        phases = rng.uniform(0.0, 2 * np.pi, size=n)
    else:
        grid = phase_grid(bits)
        phases = grid[rng.integers(0, grid.size, size=n)]
    amp = np.broadcast_to(np.asarray(amplitudes, dtype=float), (n,)).copy()
    if np.any(amp < 0) or np.any(amp > 1):
        raise ValueError("reflection coefficients must lie in [0, 1]")
    return IrsResponse(phases, amp, bits)


@dataclass(frozen=True)
class Fading:
    """Rayleigh small-scale fading of K users.

    ``irs_user`` has shape ``(K, N)`` and ``direct`` shape ``(K, M)``.
    """

    irs_user: np.ndarray
    direct: np.ndarray

    @property
    def k(self) -> int:
        return self.direct.shape[0]


def draw_fading(m, n, k, seed=None) -> Fading:
    """Draw ``h2_k ~ CN(0, I_N)`` and ``hd_k ~ CN(0, I_M)`` for ``k`` users."""
    if min(m, n, k) < 1:
        raise ValueError("all counts must be >= 1")
    rng = make_rng(seed)
    h2 = crandn(rng, k, n)
    hd = crandn(rng, k, m)
    return Fading(h2, hd)


@dataclass(frozen=True)
class ChannelRealization:
    """One coherence interval: ``h[k] = sqrt(beta_r) H1 Theta h2[k] + sqrt(beta_d) hd[k]``.

    ``h`` is stored user-major with shape ``(K, M)``.
    """

    h1: np.ndarray
    irs: IrsResponse
    fading: Fading
    beta_r: float
    beta_d: float
    h: np.ndarray


def compose_channel(h1, irs: IrsResponse, fading: Fading, beta_r, beta_d) -> ChannelRealization:
    """Build the overall BS-user channels of all users."""
    h1 = np.asarray(h1)
    if beta_r < 0 or beta_d < 0:
        raise ValueError("path gains must be nonnegative")
    m, n = h1.shape
    if irs.n != n or fading.irs_user.shape[1] != n or fading.direct.shape[1] != m:
        raise ValueError("dimension mismatch between H1, IRS response and fading")
    # (K, N) * (N,) -> (K, N) @ (N, M) -> (K, M)
    cascaded = (fading.irs_user * irs.diagonal) @ h1.T
    h = np.sqrt(beta_r) * cascaded + np.sqrt(beta_d) * fading.direct
    return ChannelRealization(h1, irs, fading, float(beta_r), float(beta_d), h)


@dataclass(frozen=True)
class CovarianceModel:
    """Channel covariance ``R``, its unit-diagonal version and eigenpairs.

    ``eigvecs`` holds the eigenvectors as columns, so that
    ``R_bar = eigvecs @ diag(eigvals) @ eigvecs^H`` and, in the notation
    ``R_bar = U^H Lambda U``, ``U = eigvecs^H``.  Eigenvalues ascend.
    """

    r: np.ndarray
    scale: float
    r_bar: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray

    @property
    def m(self) -> int:
        return self.r.shape[0]

    @property
    def u(self) -> np.ndarray:
        return self.eigvecs.conj().T

    @property
    def logdet(self) -> float:
        """Natural log of ``det(R_bar)``."""
        return float(np.sum(np.log(self.eigvals)))

    @property
    def eigvals_r(self) -> np.ndarray:
        """Eigenvalues of the unnormalised ``R``."""
        return self.scale * self.eigvals


def covariance(h1, amplitudes, beta_r, beta_d) -> CovarianceModel:
    """Covariance ``R = beta_r H1 diag(alpha^2) H1^H + beta_d I`` of the channel.

    The phases of the IRS never enter: they are averaged out.

    Raises
    ------
    ValueError
        If the normaliser vanishes or ``R`` is not PSD within tolerance.
    """
    h1 = np.asarray(h1)
    m, n = h1.shape
    a2 = np.broadcast_to(np.asarray(amplitudes, dtype=float) ** 2, (n,))
    r = beta_r * (h1 * a2) @ h1.conj().T + beta_d * np.eye(m)
    r = 0.5 * (r + r.conj().T)
    scale = beta_r * float(np.sum(a2)) + beta_d
    if scale <= 0:
        raise ValueError("covariance is identically zero")
    r_bar = r / scale
    # enforce the exact unit diagonal
    r_bar[np.diag_indices(m)] = 1.0
    w, v = np.linalg.eigh(r_bar)
    tol = PSD_RTOL * m
    if w[0] < -tol:
        raise ValueError(f"covariance is not PSD (min eigenvalue {w[0]:.3e})")
    if w[0] <= 0:
        warnings.warn("clamping non-positive covariance eigenvalues", RuntimeWarning,
                      stacklevel=2)
        w = np.maximum(w, np.finfo(float).tiny)
    return CovarianceModel(r, scale, r_bar, w, v)
