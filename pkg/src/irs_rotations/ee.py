"""Energy-efficiency maximisation over antenna count, IRS size and transmit power.

The objective is the DBF sum-rate scaling law (nats per channel use)
times the bandwidth, divided by the consumed power
``P_tot = A P_T + B M + C N + D``, reported in Mbits/J.  Three solvers are
provided: an exhaustive grid search, exact alternating maximisation
(:func:`algorithm1`) and a cheaper alternation on an upper bound that
ignores the correlation penalty (:func:`algorithm2`).
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .analysis import expected_log_y

__all__ = [
    "PowerModel",
    "EEProblem",
    "EESolution",
    "power_total",
    "ee_objective",
    "ee_objective_rbf",
    "ee_upper_bound",
    "exhaustive_ee",
    "opt_pt_exact",
    "opt_pt_bound",
    "opt_m_bound",
    "opt_n_bound",
    "algorithm1",
    "algorithm2",
    "leibniz_det",
    "logdet_table",
]


def dbm_to_watt(dbm):
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class PowerModel:
    """Circuit power model.

    Attributes
    ----------
    a : float
        Inverse amplifier efficiency ``1/zeta`` (>= 1).
    p_b, p_u : float
        Per-antenna BS chain power and per-user receiver power in watts.
    p_n : float
        Power of one IRS element in watts.
    p_sb, p_si : float
        Static BS and IRS powers in watts.
    """

    a: float = 1.2
    p_b: float = 0.1
    p_u: float = 0.01
    p_n: float = 0.01
    p_sb: float = 1.0
    p_si: float = 0.1

    def __post_init__(self):
        if self.a < 1:
            raise ValueError("A = 1/zeta must be >= 1")
        if min(self.p_b, self.p_u, self.p_n, self.p_sb, self.p_si) < 0:
            raise ValueError("component powers must be nonnegative")

    @classmethod
    def from_dbm(cls, a, p_b_dbm, p_u_dbm, p_n_dbm, p_sb_dbm, p_si_dbm):
        return cls(a, dbm_to_watt(p_b_dbm), dbm_to_watt(p_u_dbm), dbm_to_watt(p_n_dbm),
                   dbm_to_watt(p_sb_dbm), dbm_to_watt(p_si_dbm))

    @property
    def A(self):
        return self.a

    @property
    def B(self):
        return self.p_b + self.p_u

    @property
    def C(self):
        return self.p_n

    @property
    def D(self):
        return self.p_sb + self.p_si

    def without_irs(self) -> "PowerModel":
        return dataclasses.replace(self, p_si=0.0)


def power_total(p_t, m, n, pm: PowerModel) -> float:
    """Consumed power ``A P_T + B M + C N + D`` in watts."""
    return pm.A * p_t + pm.B * m + pm.C * n + pm.D


def logdet_table(h1, beta_r, beta_d, alpha2=1.0):
    """``ln det R_bar`` and eigenvalues of ``R_bar`` for every truncation of ``h1``.

    Entry ``[m, n]`` uses the first ``m`` antennas and the first ``n``
    elements.  ``n = 0`` gives the white no-IRS covariance.

    Returns
    -------
    logdet : ndarray, shape (M_max + 1, N_max + 1)
    eigvals : ndarray, shape (M_max + 1, N_max + 1, M_max)
        Ascending eigenvalues, zero padded beyond ``m``.
    """
    h1 = np.asarray(h1)
    m_max, n_max = h1.shape
    outer = np.einsum("mn,kn->nmk", h1, h1.conj())
    gram = np.concatenate([np.zeros((1, m_max, m_max), complex), np.cumsum(outer, axis=0)])
    ld = np.zeros((m_max + 1, n_max + 1))
    ev = np.zeros((m_max + 1, n_max + 1, m_max))
    for m in range(1, m_max + 1):
        for n in range(n_max + 1):
            scale = beta_r * alpha2 * n + beta_d
            r = (beta_r * alpha2 * gram[n, :m, :m] + beta_d * np.eye(m)) / scale
            w = np.linalg.eigvalsh(0.5 * (r + r.conj().T))
            ld[m, n] = float(np.sum(np.log(w)))
            ev[m, n, :m] = w
    return ld, ev


@dataclass(frozen=True)
class EEProblem:
    """Problem data shared by the EE solvers.

    ``logdet[m, n]`` (and ``eigvals``) come from :func:`logdet_table`, so
    ``m_max`` and ``n_max`` are implied by the table shape unless given.
    ``n_max = 0`` describes the system without an IRS.
    """

    power: PowerModel
    beta_r: float
    beta_d: float
    k: float
    sigma2: float
    p_max: float
    logdet: np.ndarray
    eigvals: np.ndarray | None = None
    alpha2: float = 1.0
    bandwidth: float = 20e6
    m_max: int | None = None
    n_max: int | None = None

    def __post_init__(self):
        if self.k < 3:
            raise ValueError("K must be >= 3")
        if self.p_max <= 0:
            raise ValueError("P_max must be positive")
        if self.m_max is None:
            object.__setattr__(self, "m_max", self.logdet.shape[0] - 1)
        if self.n_max is None:
            object.__setattr__(self, "n_max", self.logdet.shape[1] - 1)
        if self.m_max < 1 or self.n_max < 0:
            raise ValueError("need M_max >= 1 and N_max >= 0")
        if self.m_max >= self.logdet.shape[0] or self.n_max >= self.logdet.shape[1]:
            raise ValueError("bounds exceed the log-det table")

    @classmethod
    def from_geometry(cls, power, h1, beta_r, beta_d, k, sigma2, p_max, alpha2=1.0, **kw):
        ld, ev = logdet_table(h1, beta_r, beta_d, alpha2)
        return cls(power, beta_r, beta_d, k, sigma2, p_max, ld, ev, alpha2, **kw)

    def without_irs(self) -> "EEProblem":
        """Same problem with the IRS switched off and its static power removed."""
        return dataclasses.replace(self, power=self.power.without_irs(), n_max=0)

    def with_p_max(self, p_max) -> "EEProblem":
        return dataclasses.replace(self, p_max=p_max)

    @property
    def n_values(self) -> np.ndarray:
        return np.array([0]) if self.n_max == 0 else np.arange(1, self.n_max + 1)

    def gain(self, n):
        """``beta_r N alpha^2 + beta_d``."""
        return self.beta_r * self.alpha2 * np.asarray(n, dtype=float) + self.beta_d


@dataclass(frozen=True)
class EESolution:
    """Operating point ``(M*, N*, P_T*)`` with its EE in Mbits/J."""

    m: int
    n: int
    p_t: float
    ee: float
    solver: str
    iterations: int = 0
    trace: tuple = field(default_factory=tuple)


def _rate(m, n, p_t, prob: EEProblem, penalty):
    with np.errstate(divide="ignore"):
        return (m * np.log(np.asarray(p_t, dtype=float) / (prob.sigma2 * m))
                + m * np.log(prob.gain(n) * math.log(prob.k)) + penalty)


def _to_ee(rate, m, n, p_t, prob: EEProblem):
    rate = np.maximum(rate, 0.0)
    return rate * prob.bandwidth / power_total(p_t, m, n, prob.power) / 1e6


def ee_objective(m, n, p_t, prob: EEProblem):
    """EE of the DBF scaling law, clamped to 0 where the rate law is negative."""
    penalty = prob.logdet[m, n]
    out = _to_ee(_rate(m, n, p_t, prob, penalty), m, n, p_t, prob)
    return float(out) if np.ndim(out) == 0 else out


def ee_objective_rbf(m, n, p_t, prob: EEProblem):
    """EE with the RBF rate law (isotropic beams) in the numerator."""
    if prob.eigvals is None:
        raise ValueError("problem carries no eigenvalue table")
    penalty = 0.0 if n == 0 else m * expected_log_y(prob.eigvals[m, n, :m])
    out = _to_ee(_rate(m, n, p_t, prob, penalty), m, n, p_t, prob)
    return float(out) if np.ndim(out) == 0 else out


def ee_upper_bound(m, n, p_t, prob: EEProblem):
    """EE with the correlation penalty dropped; never below :func:`ee_objective`."""
    out = _to_ee(_rate(m, n, p_t, prob, 0.0), m, n, p_t, prob)
    return float(out) if np.ndim(out) == 0 else out


def _pt_root(m, n, prob: EEProblem, b):
    """Stationary power ``P*`` of ``(ln(aP) + b) / (dP + c)``, clamped to ``P_max``."""
    pm = prob.power
    a = 1.0 / (prob.sigma2 * m)
    c = (pm.B * m + pm.C * n + pm.D) / m
    d = pm.A / m

    # decreasing in P, so a single sign change
    def g(log_p):
        p = math.exp(log_p)
        return d + c / p - d * b - d * (math.log(a) + log_p)

    lo, hi = math.log(prob.p_max) - 1.0, math.log(prob.p_max) + 1.0
    for _ in range(400):
        if g(lo) > 0:
            break
        lo -= 2.0
    else:
        raise ValueError("could not bracket the power root from below")
    for _ in range(400):
        if g(hi) < 0:
            break
        hi += 2.0
    else:
        raise ValueError("could not bracket the power root from above")
    p_star = math.exp(brentq(g, lo, hi, xtol=1e-14, rtol=1e-13, maxiter=500))
    return min(p_star, prob.p_max), p_star


def stationarity(p_t, m, n, prob: EEProblem, bound=False) -> float:
    """Left side ``d + c/P - d b - d ln(aP)``; positive where EE still increases in ``P``."""
    pm = prob.power
    b = math.log(prob.gain(n) * math.log(prob.k)) + (0.0 if bound else prob.logdet[m, n] / m)
    a = 1.0 / (prob.sigma2 * m)
    c = (pm.B * m + pm.C * n + pm.D) / m
    d = pm.A / m
    return d + c / p_t - d * b - d * math.log(a * p_t)


def opt_pt_exact(m, n, prob: EEProblem) -> float:
    """EE-optimal transmit power for fixed ``(M, N)``: ``min(P*, P_max)``.

    ``P*`` is the unique root of ``d + c/P - d b - d ln(aP) = 0`` with
    ``a = 1/(sigma2 M)``, ``b = ln(gain ln K) + ln det R_bar / M``,
    ``c = (BM + CN + D)/M`` and ``d = A/M``.
    """
    b = math.log(prob.gain(n) * math.log(prob.k)) + prob.logdet[m, n] / m
    return _pt_root(m, n, prob, b)[0]


def opt_pt_bound(m, n, prob: EEProblem) -> float:
    """As :func:`opt_pt_exact` for the penalty-free upper bound."""
    b = math.log(prob.gain(n) * math.log(prob.k))
    return _pt_root(m, n, prob, b)[0]


def _bisect_decreasing(f, lo, hi):
    """Root of a function that is positive at ``lo``; ``hi`` when it stays positive."""
    f_hi = f(hi)
    if f_hi >= 0:
        return hi
    if f(lo) <= 0:
        return lo
    return brentq(f, lo, hi, xtol=1e-12, rtol=1e-12, maxiter=500)


def _best_integer(x, upper, score):
    cands = sorted({min(max(int(math.floor(x)), 1), upper), min(max(int(math.ceil(x)), 1), upper)})
    vals = [score(c) for c in cands]
    return cands[int(np.argmax(vals))]


def m_residual(mc, n, p_t, prob: EEProblem) -> float:
    """Stationarity residual of the bound EE in a continuous antenna count ``mc``."""
    pm = prob.power
    chi = math.log(prob.gain(n) * math.log(prob.k))
    beta = p_t / prob.sigma2
    omega = pm.A * p_t + pm.C * n + pm.D
    delta = pm.B
    s = chi + math.log(beta) - math.log(mc)
    return s - 1.0 - delta * mc * s / (delta * mc + omega)


def opt_m_bound(n, p_t, prob: EEProblem) -> int:
    """Antenna count maximising the bound EE at fixed ``(N, P_T)``."""
    if prob.m_max == 1:
        return 1
    mc = _bisect_decreasing(lambda v: m_residual(v, n, p_t, prob), 1e-9, float(prob.m_max))
    return _best_integer(mc, prob.m_max, lambda m: ee_upper_bound(m, n, p_t, prob))


def n_residual(nc, m, p_t, prob: EEProblem) -> float:
    """Stationarity residual of the bound EE in a continuous IRS size ``nc``."""
    pm = prob.power
    tau = m * math.log(p_t / (prob.sigma2 * m)) + m * math.log(math.log(prob.k))
    gamma = pm.A * p_t + pm.B * m + pm.D
    delta = pm.C
    g = prob.gain(nc)
    return ((delta * nc + gamma) * m * prob.alpha2 * prob.beta_r / g
            - delta * m * math.log(g) - delta * tau)


def opt_n_bound(m, p_t, prob: EEProblem) -> int:
    """IRS size maximising the bound EE at fixed ``(M, P_T)``."""
    if prob.n_max == 0:
        return 0
    nc = _bisect_decreasing(lambda v: n_residual(v, m, p_t, prob), 0.0, float(prob.n_max))
    return _best_integer(nc, prob.n_max, lambda n: ee_upper_bound(m, n, p_t, prob))


def exhaustive_ee(prob: EEProblem, delta=0.01) -> EESolution:
    """Grid search over ``M x N x {delta, 2 delta, ..., P_max}``.

    Ties resolve to the first point in ``(M, N, P)`` lexicographic order.
    """
    if delta <= 0:
        raise ValueError("power step must be positive")
    steps = max(1, int(math.floor(prob.p_max / delta + 1e-9)))
    powers = delta * np.arange(1, steps + 1)
    ns = prob.n_values
    best = (-1.0, 1, int(ns[0]), float(powers[0]))
    for m in range(1, prob.m_max + 1):
        col = ns[:, None]
        grid = _to_ee(_rate(m, col, powers[None, :], prob, prob.logdet[m, col]),
                      m, col, powers[None, :], prob)
        i, j = np.unravel_index(int(np.argmax(grid)), grid.shape)
        if grid[i, j] > best[0]:
            best = (float(grid[i, j]), m, int(ns[i]), float(powers[j]))
    ee, m, n, p = best
    return EESolution(m, n, p, ee_objective(m, n, p, prob), "exhaustive", 1)


def algorithm1(prob: EEProblem, eps=1e-6, start=None, max_iter=100) -> EESolution:
    """Alternating maximisation of the exact EE.

    Each round sets ``P_T`` by :func:`opt_pt_exact`, then ``M`` and ``N`` by
    full one-dimensional scans.  Stops when the objective changes by less
    than ``eps``.
    """
    m, n, p = start if start is not None else (1, min(1, prob.n_max), prob.p_max / 2)
    trace = [ee_objective(m, n, p, prob)]
    ms = np.arange(1, prob.m_max + 1)
    for it in range(1, max_iter + 1):
        p = opt_pt_exact(m, n, prob)
        m = int(ms[np.argmax([ee_objective(int(v), n, p, prob) for v in ms])])
        ns = prob.n_values
        row = _to_ee(_rate(m, ns, p, prob, prob.logdet[m, ns]), m, ns, p, prob)
        n = int(ns[int(np.argmax(row))])
        trace.append(ee_objective(m, n, p, prob))
        if abs(trace[-1] - trace[-2]) < eps:
            break
    return EESolution(m, n, p, trace[-1], "algorithm1", it, tuple(trace))


def algorithm2(prob: EEProblem, eps=1e-6, start=None, max_iter=100) -> EESolution:
    """Alternating maximisation of the penalty-free bound.

    Power comes from the bound's stationarity root, ``M`` and ``N`` from
    their closed-form stationary points.  The reported EE is the exact
    objective at the final point; ``trace`` records the bound values.
    """
    m, n, p = start if start is not None else (1, min(1, prob.n_max), prob.p_max / 2)
    trace = [ee_upper_bound(m, n, p, prob)]
    for it in range(1, max_iter + 1):
        p = opt_pt_bound(m, n, prob)
        m = opt_m_bound(n, p, prob)
        n = opt_n_bound(m, p, prob)
        trace.append(ee_upper_bound(m, n, p, prob))
        if abs(trace[-1] - trace[-2]) < eps:
            break
    return EESolution(m, n, p, ee_objective(m, n, p, prob), "algorithm2", it, tuple(trace))


def leibniz_det(a) -> complex:
    """Determinant as a signed sum over permutations; only for ``M <= 4``."""
    a = np.asarray(a)
    m = a.shape[0]
    if m > 4:
        raise ValueError("Leibniz expansion limited to M <= 4")
    total = 0.0
    for perm in itertools.permutations(range(m)):
        inv = sum(1 for i in range(m) for j in range(i + 1, m) if perm[i] > perm[j])
        term = np.prod([a[i, perm[i]] for i in range(m)])
        total += -term if inv % 2 else term
    return total
