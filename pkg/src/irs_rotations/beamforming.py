"""Beamforming matrices, per-beam SINRs and the per-interval schedulers.

All rates are in nats per channel use (natural logarithm).  Channels are
passed user-major: ``h`` has shape ``(K, M)`` with row ``k`` the channel
of user ``k``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .channel import Fading, crandn, phase_grid
from .rng import make_rng

__all__ = [
    "BeamformerSet",
    "ScheduleOutcome",
    "isotropic_beams",
    "dbf_matrix",
    "sinr",
    "sinr_table",
    "rbf_schedule",
    "zfs_schedule",
    "zf_rate",
    "coherent_exhaustive",
    "COHERENT_BUDGET",
]

COHERENT_BUDGET = 10 ** 7
SUS_ALPHA = 0.3


@dataclass(frozen=True)
class BeamformerSet:
    """Unitary ``M x M`` beam matrix whose columns are the beams."""

    phi: np.ndarray
    kind: str = "random"

    @property
    def m(self) -> int:
        return self.phi.shape[0]


@dataclass(frozen=True)
class ScheduleOutcome:
    """Result of scheduling one coherence interval.

    For the opportunistic schedulers ``users[m]`` is the user served on
    beam ``m`` and ``sinr[m]`` its SINR.  For ZFS they list the selected
    users and their post-ZF SNRs.
    """

    users: np.ndarray
    sinr: np.ndarray
    rate: float


def isotropic_beams(m, seed=None) -> BeamformerSet:
    """Isotropically distributed unitary matrix from the QR factor of a CN(0,1) matrix."""
    if m < 1:
        raise ValueError("need at least one antenna")
    rng = make_rng(seed)
    while True:
        y = crandn(rng, m, m)
        q, t = np.linalg.qr(y)
        d = np.diag(t)
        if np.all(np.abs(d) > 1e-12 * max(1.0, np.abs(d).max())):
            break
    # make diag(T) positive real, otherwise Q is not Haar distributed
    q = q * (d / np.abs(d))
    return BeamformerSet(q, "random")


def dbf_matrix(cov) -> BeamformerSet:
    """Deterministic beams ``Phi = U^H``: the eigenvectors of the normalised covariance."""
    return BeamformerSet(np.array(cov.eigvecs, copy=True), "dbf")


def _as_matrix(phi):
    return phi.phi if isinstance(phi, BeamformerSet) else np.asarray(phi)


def sinr_table(h, phi, p_t, sigma2) -> np.ndarray:
    """SINRs of every user on every beam, shape ``(K, M)``.

    ``gamma[k, m] = |h_k^H phi_m|^2 / (M sigma2 / P_T + sum_{i != m} |h_k^H phi_i|^2)``
    """
    phi = _as_matrix(phi)
    h = np.atleast_2d(h)
    m = phi.shape[1]
    g = np.abs(h.conj() @ phi) ** 2
    noise = m * sigma2 / p_t
    return g / (noise + g.sum(axis=1, keepdims=True) - g)


def sinr(h_k, phi, m, p_t, sigma2) -> float:
    """SINR of a single user on beam ``m`` (zero based)."""
    return float(sinr_table(np.asarray(h_k)[None, :], phi, p_t, sigma2)[0, m])


def rbf_schedule(h, phi, p_t, sigma2) -> ScheduleOutcome:
    """Serve on each beam the user with the largest SINR.

    One user may win several beams.  Ties go to the lowest user index.
    The same routine serves RBF (fresh random ``phi``) and DBF (fixed ``phi``).
    """
    g = sinr_table(h, phi, p_t, sigma2)
    users = np.argmax(g, axis=0)
    best = g[users, np.arange(g.shape[1])]
    return ScheduleOutcome(users, best, float(np.sum(np.log1p(best))))


def zf_rate(h_sel, p_t, sigma2):
    """Equal-power zero-forcing sum rate of the selected channels (rows).

    Returns ``(rate, snr)`` or ``None`` when the rows are linearly dependent.
    """
    gram = h_sel.conj() @ h_sel.T
    w = np.linalg.eigvalsh(gram)
    if w[0] <= 1e-12 * max(w[-1], 1e-300):
        return None
    gains = 1.0 / np.real(np.diag(np.linalg.inv(gram)))
    snr = p_t / (h_sel.shape[0] * sigma2) * gains
    return float(np.sum(np.log1p(snr))), snr


def zfs_schedule(h, p_t, sigma2, alpha=SUS_ALPHA) -> ScheduleOutcome:
    """Zero-forcing with greedy semi-orthogonal user selection.

    Up to ``M`` users are picked one by one: the user with the strongest
    component orthogonal to the span of those already chosen, after which
    users whose normalised correlation with that component reaches
    ``alpha`` are dropped from the pool.  Selection stops early when adding
    the next user would lower the equal-power ZF sum rate.
    """
    h = np.atleast_2d(h)
    k, m = h.shape
    norms = np.linalg.norm(h, axis=1)
    pool = norms > 0
    if not pool.any():
        return ScheduleOutcome(np.array([0]), np.array([0.0]), 0.0)
    residual = h.astype(complex, copy=True)
    chosen: list[int] = []
    rate, snr = 0.0, np.zeros(0)
    while len(chosen) < m and pool.any():
        strength = np.where(pool, np.linalg.norm(residual, axis=1), -1.0)
        pick = int(np.argmax(strength))
        pool[pick] = False
        if strength[pick] <= 1e-12 * norms[pick]:
            continue
        trial = zf_rate(h[chosen + [pick]], p_t, sigma2)
        if trial is None:
            continue
        if chosen and trial[0] < rate:
            break
        chosen.append(pick)
        rate, snr = trial
        e = residual[pick] / np.linalg.norm(residual[pick])
        # semi-orthogonality filter on the remaining pool
        corr = np.abs(h @ e.conj()) / np.where(norms > 0, norms, 1.0)
        pool &= corr < alpha
        residual = residual - np.outer(residual @ e.conj(), e)
    return ScheduleOutcome(np.array(chosen), np.asarray(snr), rate)


def coherent_exhaustive(h1, bits, fading: Fading, beta_r, beta_d, phi, p_t, sigma2,
                        amplitudes=1.0, chunk=None):
    """Best IRS phase vector on the ``2**bits`` grid for one fading realisation.

    Every phase combination is scored with the opportunistic sum rate
    ``sum_m log(1 + max_k gamma_km)`` for beams ``phi``.

    Returns
    -------
    phases : ndarray, shape (N,)
    outcome : ScheduleOutcome

    Raises
    ------
    ValueError
        If ``Q**N`` exceeds :data:`COHERENT_BUDGET`.
    """
    phi = _as_matrix(phi)
    h1 = np.asarray(h1)
    m, n = h1.shape
    grid = phase_grid(bits)
    q = grid.size
    total = q ** n
    if total > COHERENT_BUDGET:
        raise ValueError(f"coherent search needs {q}^{n} = {total} evaluations, "
                         f"budget is {COHERENT_BUDGET}")
    amp = np.broadcast_to(np.asarray(amplitudes, dtype=float), (n,))
    k = fading.k
    # projections of each IRS path and of the direct path on the beams
    cascade = np.sqrt(beta_r) * (fading.irs_user * amp)[:, :, None] * h1.T[None, :, :]
    proj_irs = np.einsum("knm,mb->nkb", cascade.conj(), phi)
    proj_dir = np.sqrt(beta_d) * fading.direct.conj() @ phi
    noise = m * sigma2 / p_t
    if chunk is None:
        chunk = max(1, min(total, 2 ** 22 // max(1, k * m)))
    idx_all = np.array(list(itertools.product(range(q), repeat=n))) if total <= 2 ** 16 else None

    best_rate, best_idx = -np.inf, 0
    for start in range(0, total, chunk):
        stop = min(total, start + chunk)
        if idx_all is not None:
            idx = idx_all[start:stop]
        else:
            flat = np.arange(start, stop)
            idx = np.stack([(flat // q ** (n - 1 - j)) % q for j in range(n)], axis=1)
        rot = np.exp(-1j * grid[idx])
        p = np.einsum("cn,nkb->ckb", rot, proj_irs) + proj_dir[None]
        g = np.abs(p) ** 2
        gam = g / (noise + g.sum(axis=2, keepdims=True) - g)
        rates = np.log1p(gam.max(axis=1)).sum(axis=1)
        j = int(np.argmax(rates))
        if rates[j] > best_rate:
            best_rate, best_idx = float(rates[j]), start + j

    best = np.array([(best_idx // q ** (n - 1 - j)) % q for j in range(n)])
    phases = grid[best]
    from .channel import IrsResponse, compose_channel

    chan = compose_channel(h1, IrsResponse(phases, np.array(amp), bits), fading, beta_r, beta_d)
    return phases, rbf_schedule(chan.h, phi, p_t, sigma2)
