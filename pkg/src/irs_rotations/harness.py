"""Experiment orchestration: configuration, path gains, Monte Carlo and EE campaigns.

A configuration is a flat ``key = value`` text file whose keys are the
fields of :class:`ExperimentConfig`.  Lists are comma separated, ``#``
starts a comment, and fields in dB carry a ``_db``/``_dbm``/``_dbi``
suffix.  Positions ``bs_x``, ``bs_y``, ``irs_x``, ``irs_y`` live in the
horizontal user plane and only enter the path loss; the array geometry
places the IRS broadside to the BS at the same separation.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import rng as streams
from .analysis import (ScalingParams, SinrLaw, am_matrix, expected_log_y,
                       expected_log_y_oracle, max_eigpair, scaling_dbf,
                       scaling_no_irs_rbf, scaling_rbf, sinr_cdf)
from .beamforming import (coherent_exhaustive, dbf_matrix, isotropic_beams,
                          rbf_schedule, zfs_schedule)
from .channel import compose_channel, covariance, draw_fading, draw_irs_phases
from .ee import (EEProblem, PowerModel, algorithm1, algorithm2, exhaustive_ee,
                 leibniz_det)
from .geometry import ArrayGeometry, element_positions, los_channel

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "PathGains",
    "CurvePoint",
    "EERow",
    "Check",
    "load_config",
    "parse_config",
    "mean_path_gains",
    "build_geometry",
    "run_sumrate",
    "run_ee",
    "run_validation",
    "write_sumrate",
    "write_ee",
    "SCHEMES",
]

SCHEMES = ("rbf", "dbf", "zfs", "no-irs", "coherent", "rbf-continuous", "dbf-continuous")
FIG1_K = (4, 8, 16, 32, 64, 128, 256, 512, 1024, 2048, 4096, 10000)


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


@dataclass
class ExperimentConfig:
    """All knobs of a sum-rate or EE experiment (defaults: the two-antenna sum-rate setup)."""

    scenario: str = "fig1"
    # geometry
    wavelength: float = 0.125
    bs_x: float = 0.0
    bs_y: float = 0.0
    irs_x: float = 0.0
    irs_y: float = 50.0
    bs_azimuth: float = math.pi / 2
    bs_elevation: float = 0.0
    irs_azimuth: float = math.pi / 2
    irs_elevation: float = 0.0
    spacing_bs: float = 0.0          # 0 means one wavelength
    spacing_irs1: float = 0.0
    spacing_irs2: float = 0.0
    m: int = 2
    n1: int = 8
    n2: int = 2
    alpha: float = 1.0
    # radio
    sigma2_dbm: float = -80.0
    p_t_db: float = 6.96
    bandwidth: float = 20e6
    gain_dbi: float = 5.0
    penetration_irs_db: float = 10.0
    penetration_direct_db: float = 25.0
    # population
    k_list: tuple = FIG1_K
    region_x_min: float = -30.0
    region_x_max: float = 30.0
    region_y_min: float = 50.0
    region_y_max: float = 130.0
    user_grid: int = 100
    pl_intercept_db: float = 30.0
    pl_exp_bs_irs: float = 2.2
    pl_exp_irs_user: float = 2.8
    pl_exp_direct: float = 3.5
    # Monte Carlo
    schemes: tuple = ("zfs", "dbf", "rbf", "no-irs")
    phase_bits: int = 0              # 0 means continuous phases
    trials: int = 500
    seed: int = 1
    # energy efficiency
    ee_a: float = 1.2
    p_b_dbm: float = 20.0
    p_u_dbm: float = 10.0
    p_n_dbm: float = 10.0
    p_sb_dbm: float = 30.0
    p_si_dbm: float = 20.0
    m_max: int = 6
    n_max: int = 256
    ee_n1: int = 8
    p_max_db: float = 10.0
    pmax_grid_db: tuple = (10.0,)
    ee_delta: float = 0.01
    ee_eps: float = 1e-6
    k_ee: float = 1000.0

    def validate(self) -> "ExperimentConfig":
        ks = list(self.k_list)
        if not ks or any(b <= a for a, b in zip(ks, ks[1:])):
            raise ConfigError("k_list must be nonempty and strictly ascending")
        if min(ks) < 1:
            raise ConfigError("user counts must be >= 1")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.m < 1 or self.n1 < 1 or self.n2 < 1:
            raise ConfigError("array sizes must be >= 1")
        if self.wavelength <= 0:
            raise ConfigError("wavelength must be positive")
        if self.user_grid < 1:
            raise ConfigError("user_grid must be >= 1")
        if self.phase_bits < 0:
            raise ConfigError("phase_bits must be >= 0")
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad:
            raise ConfigError(f"unknown scheme(s) {bad}; choose from {SCHEMES}")
        if "coherent" in self.schemes and self.phase_bits < 1:
            raise ConfigError("the coherent scheme needs phase_bits >= 1")
        if self.separation <= 0:
            raise ConfigError("BS and IRS positions coincide")
        if self.m_max < 1 or self.n_max < 1 or self.ee_n1 < 1:
            raise ConfigError("EE bounds must be >= 1")
        if self.k_ee < 3 or self.ee_delta <= 0 or self.ee_eps <= 0:
            raise ConfigError("need k_ee >= 3 and positive ee_delta, ee_eps")
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            vals = v if isinstance(v, tuple) else (v,)
            for x in vals:
                if isinstance(x, float) and not math.isfinite(x):
                    raise ConfigError(f"{f.name} must be finite")
        return self

    @property
    def n(self) -> int:
        return self.n1 * self.n2

    @property
    def separation(self) -> float:
        return math.hypot(self.irs_x - self.bs_x, self.irs_y - self.bs_y)

    @property
    def sigma2(self) -> float:
        return 10.0 ** ((self.sigma2_dbm - 30.0) / 10.0)

    @property
    def p_t(self) -> float:
        return 10.0 ** (self.p_t_db / 10.0)

    @property
    def bits(self):
        return self.phase_bits if self.phase_bits > 0 else None

    def power_model(self) -> PowerModel:
        return PowerModel.from_dbm(self.ee_a, self.p_b_dbm, self.p_u_dbm, self.p_n_dbm,
                                   self.p_sb_dbm, self.p_si_dbm)


def _coerce(name, raw, default):
    try:
        if isinstance(default, tuple):
            items = [s.strip() for s in raw.split(",") if s.strip()]
            if default and isinstance(default[0], str) or name == "schemes":
                return tuple(items)
            if name == "k_list":
                return tuple(int(float(s)) for s in items)
            return tuple(float(s) for s in items)
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            v = float(raw)
            if v != int(v):
                raise ValueError
            return int(v)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"cannot parse {name} = {raw!r}") from None


def parse_config(text: str, **overrides) -> ExperimentConfig:
    """Parse ``key = value`` lines on top of the defaults."""
    cfg = ExperimentConfig()
    names = {f.name for f in dataclasses.fields(cfg)}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in names:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        setattr(cfg, key, _coerce(key, raw, getattr(cfg, key)))
    for key, value in overrides.items():
        if value is not None:
            if key not in names:
                raise ConfigError(f"unknown key {key!r}")
            setattr(cfg, key, value)
    return cfg.validate()


def load_config(path=None, **overrides) -> ExperimentConfig:
    if path is None:
        return parse_config("", **overrides)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text, **overrides)


# ---------------------------------------------------------------- path gains

@dataclass(frozen=True)
class PathGains:
    """Linear large-scale gains; ``beta_r = beta_1 * beta_2``."""

    beta_1: float
    beta_2: float
    beta_d: float

    @property
    def beta_r(self) -> float:
        return self.beta_1 * self.beta_2


def _grid(cfg):
    xs = np.linspace(cfg.region_x_min, cfg.region_x_max, cfg.user_grid)
    ys = np.linspace(cfg.region_y_min, cfg.region_y_max, cfg.user_grid)
    return np.meshgrid(xs, ys)


def mean_path_gains(cfg: ExperimentConfig) -> PathGains:
    """Region-averaged path gains on a deterministic ``user_grid`` square grid.

    Each link follows ``10^(-C/10) / d^alpha``.  Element gains add
    ``gain_dbi`` at every BS or IRS end (twice on the BS-IRS link) and the
    penetration losses apply to the IRS-user and BS-user links.

    Raises
    ------
    ValueError
        If a grid point coincides with the BS or the IRS.
    """
    x, y = _grid(cfg)
    d_direct = np.hypot(x - cfg.bs_x, y - cfg.bs_y)
    d_irs = np.hypot(x - cfg.irs_x, y - cfg.irs_y)
    if np.any(d_direct == 0) or np.any(d_irs == 0):
        raise ValueError("user region contains the BS or the IRS position")
    c = 10.0 ** (-cfg.pl_intercept_db / 10.0)
    g = 10.0 ** (cfg.gain_dbi / 10.0)
    beta_1 = c / cfg.separation ** cfg.pl_exp_bs_irs * g * g
    beta_2 = float(np.mean(c / d_irs ** cfg.pl_exp_irs_user)) * g * 10.0 ** (-cfg.penetration_irs_db / 10.0)
    beta_d = float(np.mean(c / d_direct ** cfg.pl_exp_direct)) * g * 10.0 ** (-cfg.penetration_direct_db / 10.0)
    return PathGains(beta_1, beta_2, beta_d)


def build_geometry(cfg: ExperimentConfig, m=None, n1=None, n2=None):
    """BS ULA at the origin and IRS URA broadside at distance ``cfg.separation``."""
    lam = cfg.wavelength
    bs = ArrayGeometry.ula(m or cfg.m, cfg.spacing_bs or lam, (0.0, 0.0, 0.0),
                           cfg.bs_azimuth, cfg.bs_elevation, lam)
    irs = ArrayGeometry.ura(n1 or cfg.n1, n2 or cfg.n2, cfg.spacing_irs1 or lam,
                            cfg.spacing_irs2 or lam, (cfg.separation, 0.0, 0.0),
                            cfg.irs_azimuth, cfg.irs_elevation, lam)
    return bs, irs


# ------------------------------------------------------------------ sum rate

@dataclass(frozen=True)
class CurvePoint:
    k: int
    scheme: str
    mean_rate: float
    stderr: float
    theorem: float | None = None


@dataclass(frozen=True)
class _Setup:
    h1: np.ndarray
    beta_r: float
    beta_d: float
    cov: object
    phi_dbf: np.ndarray


def _setup(cfg: ExperimentConfig) -> _Setup:
    gains = mean_path_gains(cfg)
    h1 = los_channel(*build_geometry(cfg))
    amp = np.full(cfg.n, cfg.alpha)
    cov = covariance(h1, amp, gains.beta_r, gains.beta_d)
    return _Setup(h1, gains.beta_r, gains.beta_d, cov, dbf_matrix(cov).phi)


def _trial(cfg: ExperimentConfig, st: _Setup, ki: int, k: int, t: int):
    """Sum rate of every configured scheme in one coherence interval."""
    seed = cfg.seed
    amp = np.full(cfg.n, cfg.alpha)
    fading = draw_fading(cfg.m, cfg.n, k, streams.stream(seed, ki, t, streams.IRS_USER))
    irs = draw_irs_phases(cfg.n, cfg.bits, streams.stream(seed, ki, t, streams.PHASES), amp)
    chan = compose_channel(st.h1, irs, fading, st.beta_r, st.beta_d)
    out = {}
    beams = None
    for scheme in cfg.schemes:
        if scheme in ("rbf", "rbf-continuous", "no-irs") and beams is None:
            beams = isotropic_beams(cfg.m, streams.stream(seed, ki, t, streams.BEAMS))
        if scheme == "rbf":
            out[scheme] = rbf_schedule(chan.h, beams, cfg.p_t, cfg.sigma2).rate
        elif scheme == "dbf":
            out[scheme] = rbf_schedule(chan.h, st.phi_dbf, cfg.p_t, cfg.sigma2).rate
        elif scheme == "zfs":
            out[scheme] = zfs_schedule(chan.h, cfg.p_t, cfg.sigma2).rate
        elif scheme == "no-irs":
            h = math.sqrt(st.beta_d) * fading.direct
            out[scheme] = rbf_schedule(h, beams, cfg.p_t, cfg.sigma2).rate
        elif scheme in ("rbf-continuous", "dbf-continuous"):
            cont = draw_irs_phases(cfg.n, None, streams.stream(seed, ki, t, streams.PHASES, 1), amp)
            ch = compose_channel(st.h1, cont, fading, st.beta_r, st.beta_d)
            phi = beams if scheme == "rbf-continuous" else st.phi_dbf
            out[scheme] = rbf_schedule(ch.h, phi, cfg.p_t, cfg.sigma2).rate
        elif scheme == "coherent":
            _, res = coherent_exhaustive(st.h1, cfg.phase_bits, fading, st.beta_r, st.beta_d,
                                         st.phi_dbf, cfg.p_t, cfg.sigma2, amp)
            out[scheme] = res.rate
    return out


def _theorem(cfg, st: _Setup, scheme, k):
    if k < 3:
        return None
    if scheme == "no-irs":
        return scaling_no_irs_rbf(cfg.m, k, cfg.p_t, cfg.sigma2, st.beta_d)
    params = ScalingParams.from_covariance(st.cov, k, cfg.p_t, cfg.sigma2, st.beta_r, st.beta_d)
    if scheme in ("dbf", "dbf-continuous"):
        return scaling_dbf(params)
    if scheme in ("rbf", "rbf-continuous"):
        return scaling_rbf(params)
    return None


def _map(fn, items, threads):
    if threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def run_sumrate(cfg: ExperimentConfig, threads: int = 1) -> list[CurvePoint]:
    """Monte Carlo sum rates (nats/s/Hz) with their standard errors and scaling laws.

    Trials draw from per-(K, trial, purpose) streams and are reduced in
    trial order, so the result does not depend on ``threads``.
    """
    st = _setup(cfg)
    points = []
    for ki, k in enumerate(cfg.k_list):
        rows = _map(lambda t: _trial(cfg, st, ki, k, t), range(cfg.trials), threads)
        for scheme in cfg.schemes:
            vals = np.array([r[scheme] for r in rows])
            se = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
            points.append(CurvePoint(k, scheme, float(vals.mean()), se, _theorem(cfg, st, scheme, k)))
    return points


# ------------------------------------------------------------------------ EE

@dataclass(frozen=True)
class EERow:
    pmax_db: float
    solver: str
    m: int
    n: int
    p_t: float
    ee: float


def ee_problem(cfg: ExperimentConfig, p_max=None) -> EEProblem:
    """EE problem on the full ``M_max x N_max`` array with ``ee_n1`` IRS rows."""
    gains = mean_path_gains(cfg)
    n2 = -(-cfg.n_max // cfg.ee_n1)
    bs, irs = build_geometry(cfg, cfg.m_max, cfg.ee_n1, n2)
    h1 = los_channel(bs, irs)[:, :cfg.n_max]
    p_max = 10.0 ** (cfg.p_max_db / 10.0) if p_max is None else p_max
    return EEProblem.from_geometry(cfg.power_model(), h1, gains.beta_r, gains.beta_d, cfg.k_ee,
                                   cfg.sigma2, p_max, cfg.alpha ** 2, bandwidth=cfg.bandwidth)


def run_ee(cfg: ExperimentConfig) -> list[EERow]:
    """Exhaustive, Algorithm 1, Algorithm 2 and no-IRS optima for every ``P_max``."""
    base = ee_problem(cfg)
    rows = []
    for pdb in cfg.pmax_grid_db:
        prob = base.with_p_max(10.0 ** (pdb / 10.0))
        sols = [exhaustive_ee(prob, cfg.ee_delta),
                algorithm1(prob, cfg.ee_eps),
                algorithm2(prob, cfg.ee_eps),
                dataclasses.replace(exhaustive_ee(prob.without_irs(), cfg.ee_delta), solver="no-irs")]
        rows += [EERow(float(pdb), s.solver, s.m, s.n, s.p_t, s.ee) for s in sols]
    return rows


# ---------------------------------------------------------------- validation

@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float
    passed: bool


def run_validation(cfg: ExperimentConfig, inject_fault: str | None = None,
                   samples: int = 100_000) -> list[Check]:
    """Run the closed-form oracle checks on the configured geometry.

    ``inject_fault="lambda"`` scrambles the eigenvalues handed to the
    closed-form eigenpair, a negative control that must fail.
    """
    st = _setup(cfg)
    cov = st.cov
    rng = np.random.default_rng(cfg.seed)
    checks = []

    # top eigenpair of A_m for the deterministic beams
    lam = cov.eigvals_r
    worst = 0.0
    for m in range(cov.m):
        phi_bar = cov.u @ st.phi_dbf[:, m]
        lam_used = lam[::-1] * 1.7 if inject_fault == "lambda" else lam
        top, q = max_eigpair(phi_bar, lam_used)
        for x in (0.1, 1.0, 10.0):
            a = am_matrix(x, phi_bar, lam)
            worst = max(worst, float(np.linalg.norm(a @ q - top * q) / np.linalg.norm(a, 2)))
    checks.append(Check("eigenpair_residual", worst, 1e-10, worst < 1e-10))

    # CDF against simulated SINRs of one isotropic beam
    phi = isotropic_beams(cov.m, rng).phi
    law = SinrLaw.from_covariance(cov, phi, 0, cfg.p_t, cfg.sigma2)
    fading = draw_fading(cfg.m, cfg.n, samples, rng)
    # fresh IRS phases for every sample
    phases = np.exp(2j * np.pi * rng.random((samples, cfg.n)))
    h = (math.sqrt(st.beta_r) * (fading.irs_user * cfg.alpha * phases) @ st.h1.T
         + math.sqrt(st.beta_d) * fading.direct)
    g = np.abs(h.conj() @ phi) ** 2
    gam = np.sort(g[:, 0] / (cfg.m * cfg.sigma2 / cfg.p_t + g[:, 1:].sum(axis=1)))
    cdf = np.array([sinr_cdf(x, law) for x in gam])
    i = np.arange(1, samples + 1)
    ks = float(max(np.max(i / samples - cdf), np.max(cdf - (i - 1) / samples)))
    checks.append(Check("sinr_cdf_ks", ks, 0.01, ks < 0.01))

    # closed-form expectation against the independent oracle
    diff = abs(expected_log_y(cov.eigvals) - expected_log_y_oracle(cov.eigvals))
    checks.append(Check("expected_log_y_vs_oracle", diff, 1e-8, diff < 1e-8))

    # Leibniz determinant
    if cov.m <= 4:
        rel = abs(leibniz_det(cov.r_bar).real - np.prod(cov.eigvals)) / np.prod(cov.eigvals)
        checks.append(Check("leibniz_det", float(rel), 1e-9, bool(rel < 1e-9)))

    # covariance fidelity
    emp = h.T @ h.conj() / samples
    dev = float(np.max(np.abs(emp - cov.r)) / cov.r[0, 0].real)
    checks.append(Check("covariance_fidelity", dev, 0.03, dev < 0.03))
    return checks


# ------------------------------------------------------------------- writers

SUMRATE_COLUMNS = ("K", "scheme", "mean_rate_bpshz", "stderr", "theorem_bpshz")
EE_COLUMNS = ("pmax_db", "solver", "m_star", "n_star", "pt_star_w", "ee_mbits_per_j")


def _records_sumrate(points):
    return [dict(zip(SUMRATE_COLUMNS, (p.k, p.scheme, repr(p.mean_rate), repr(p.stderr),
                                       "" if p.theorem is None else repr(p.theorem))))
            for p in points]


def _records_ee(rows):
    return [dict(zip(EE_COLUMNS, (repr(r.pmax_db), r.solver, r.m, r.n, repr(r.p_t), repr(r.ee))))
            for r in rows]


def _write(records, columns, path, fmt):
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        w.writerows(records)
        data = buf.getvalue()
    elif fmt == "json":
        data = json.dumps(records, indent=2) + "\n"
    else:
        raise ConfigError(f"unknown output format {fmt!r}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(data)
    return path


def write_sumrate(points, out_dir, fmt="csv"):
    os.makedirs(out_dir, exist_ok=True)
    return _write(_records_sumrate(points), SUMRATE_COLUMNS,
                  os.path.join(out_dir, f"sumrate.{fmt}"), fmt)


def write_ee(rows, out_dir, fmt="csv"):
    os.makedirs(out_dir, exist_ok=True)
    return _write(_records_ee(rows), EE_COLUMNS, os.path.join(out_dir, f"ee.{fmt}"), fmt)


def geometry_records(cfg: ExperimentConfig):
    """Element positions of both arrays and the LoS matrix entries."""
    bs, irs = build_geometry(cfg)
    h1 = los_channel(bs, irs)
    pos = [{"array": "bs", "index": i, "x": repr(p[0]), "y": repr(p[1]), "z": repr(p[2])}
           for i, p in enumerate(element_positions(bs))]
    pos += [{"array": "irs", "index": i, "x": repr(p[0]), "y": repr(p[1]), "z": repr(p[2])}
            for i, p in enumerate(element_positions(irs))]
    los = [{"m": m, "n": n, "re": repr(float(h1[m, n].real)), "im": repr(float(h1[m, n].imag))}
           for m in range(h1.shape[0]) for n in range(h1.shape[1])]
    return pos, los


def write_geometry(cfg, out_dir, fmt="csv"):
    os.makedirs(out_dir, exist_ok=True)
    pos, los = geometry_records(cfg)
    a = _write(pos, ("array", "index", "x", "y", "z"), os.path.join(out_dir, f"elements.{fmt}"), fmt)
    b = _write(los, ("m", "n", "re", "im"), os.path.join(out_dir, f"h1.{fmt}"), fmt)
    return a, b
