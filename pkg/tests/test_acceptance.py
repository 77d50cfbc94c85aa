"""Acceptance criteria, each at its stated tolerance.

Every test records one ``[PASS]``/``[FAIL]`` line, repeated in the
``acceptance criteria`` section of the pytest summary.  Criteria that the
model cannot meet are marked strict ``xfail``: the check runs unchanged,
prints ``FAIL`` and must keep failing.
"""

import dataclasses
import math
import time
from pathlib import Path

import numpy as np
import pytest

from irs_rotations import harness
from irs_rotations.analysis import (SinrLaw, am_matrix, expected_log_y, max_eigpair,
                                    scaling_no_irs_rbf, sinr_cdf)
from irs_rotations.beamforming import isotropic_beams
from irs_rotations.channel import IrsResponse, compose_channel, covariance, draw_fading
from irs_rotations.cli import main
from irs_rotations.ee import (algorithm1, algorithm2, ee_objective, ee_upper_bound,
                              leibniz_det, opt_m_bound, opt_n_bound, opt_pt_exact)
from irs_rotations.geometry import los_channel

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _cfg(name, **kw):
    return harness.load_config(str(CONFIGS / name), **kw)


def _by(points):
    return {(p.k, p.scheme): p for p in points}


# ------------------------------------------------------------------ 1. closed-form oracles

@pytest.mark.xfail(strict=True, reason="the closed-form pair is an eigenpair of A_m(x) only "
                                       "for beams aligned with the covariance eigenvectors")
def test_c1_eigenpair_random_instances(acceptance):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        m = int(rng.integers(2, 7))
        lam = np.sort(rng.uniform(0.05, 2.0, m))
        lam *= m / lam.sum()
        v = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        phi = v / np.linalg.norm(v)
        top, q = max_eigpair(phi, lam)
        for x in (0.1, 1.0, 10.0):
            a = am_matrix(x, phi, lam)
            worst = max(worst, float(np.linalg.norm(a @ q - top * q)))
            dense = np.linalg.eigvalsh(a)[-1]
            worst = max(worst, abs(dense - top) / abs(dense))
    ok = acceptance("1a eigenpair vs dense eig, 100 random instances (M<=6)", worst < 1e-10,
                    f"max residual {worst:.3e} (threshold 1e-10)")
    assert ok


def test_c1_sinr_cdf_ks(acceptance, fig1_cfg, table_setup):
    cfg, st = fig1_cfg, table_setup
    rng = np.random.default_rng(77)
    phi = isotropic_beams(cfg.m, rng).phi
    law = SinrLaw.from_covariance(st.cov, phi, 0, cfg.p_t, cfg.sigma2)
    n = 100_000
    gam = []
    # fresh IRS phases for each block of 100 users
    for b in range(n // 100):
        irs = IrsResponse(rng.uniform(0, 2 * np.pi, cfg.n), np.full(cfg.n, cfg.alpha))
        ch = compose_channel(st.h1, irs, draw_fading(cfg.m, cfg.n, 100, rng), st.beta_r, st.beta_d)
        g = np.abs(ch.h.conj() @ phi) ** 2
        gam.append(g[:, 0] / (cfg.m * cfg.sigma2 / cfg.p_t + g[:, 1]))
    gam = np.sort(np.concatenate(gam))
    cdf = np.array([sinr_cdf(x, law) for x in gam])
    i = np.arange(1, n + 1)
    ks = float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))
    assert acceptance("1b SINR CDF vs 1e5-sample empirical CDF (M=2)", ks < 0.01,
                      f"KS {ks:.4f} (threshold 0.01)")


def _isotropic_first_columns(rng, m, count):
    # first column of Q from QR of a CN(0, I) matrix, batched
    y = (rng.standard_normal((count, m, m)) + 1j * rng.standard_normal((count, m, m))) / math.sqrt(2)
    q, r = np.linalg.qr(y)
    d = np.diagonal(r, axis1=1, axis2=2)
    return q[:, :, 0] * (d[:, :1] / np.abs(d[:, :1]))


def test_c1_expected_log_y_monte_carlo(acceptance, fig1_cfg):
    rng = np.random.default_rng(5)
    cases = [np.array([0.5, 1.5])]
    for m in (2, 3):
        bs, irs = harness.build_geometry(fig1_cfg, m=m)
        g = harness.mean_path_gains(fig1_cfg)
        cases.append(covariance(los_channel(bs, irs), 1.0, g.beta_r, g.beta_d).eigvals)
    worst = 0.0
    for lam in cases:
        phi = _isotropic_first_columns(rng, lam.size, 1_000_000)
        mc = float(np.mean(-np.log(np.abs(phi) ** 2 @ (1.0 / lam))))
        worst = max(worst, abs(expected_log_y(lam) - mc))
    assert acceptance("1c expected log y vs 1e6-sample Monte Carlo (M in {2,3})", worst < 1e-2,
                      f"max abs error {worst:.2e} (threshold 1e-2)")


def test_c1_leibniz(acceptance, fig1_cfg):
    g = harness.mean_path_gains(fig1_cfg)
    worst = 0.0
    for m in range(1, 5):
        cov = covariance(los_channel(*harness.build_geometry(fig1_cfg, m=m)), 1.0, g.beta_r, g.beta_d)
        ref = float(np.prod(cov.eigvals))
        worst = max(worst, abs(leibniz_det(cov.r_bar).real - ref) / ref)
    assert acceptance("1d Leibniz determinant vs eigenvalue product (M<=4)", worst < 1e-9,
                      f"max relative error {worst:.2e} (threshold 1e-9)")


# ------------------------------------------------------------------ 2. covariance fidelity

def test_c2_covariance_fidelity(acceptance, fig1_cfg, table_setup):
    cfg, st = fig1_cfg, table_setup
    rng = np.random.default_rng(99)
    t0 = time.perf_counter()
    acc = np.zeros((cfg.m, cfg.m), complex)
    n = 100_000
    for _ in range(n // 10):
        irs = IrsResponse(rng.uniform(0, 2 * np.pi, cfg.n), np.full(cfg.n, cfg.alpha))
        h = compose_channel(st.h1, irs, draw_fading(cfg.m, cfg.n, 10, rng), st.beta_r, st.beta_d).h
        acc += h.T @ h.conj()
    dev = float(np.max(np.abs(acc / n - st.cov.r)) / st.cov.r[0, 0].real)
    elapsed = time.perf_counter() - t0
    assert acceptance("2 empirical covariance over 1e5 channels", dev < 0.03 and elapsed < 60,
                      f"max entry deviation {dev:.4f} of diagonal (threshold 0.03), {elapsed:.1f}s")


# ------------------------------------------------------------------ 3. sum rate vs K

@pytest.fixture(scope="module")
def fig1_points():
    t0 = time.perf_counter()
    pts = harness.run_sumrate(_cfg("fig1.cfg"))
    return _by(pts), time.perf_counter() - t0


def test_c3_dbf_simulation(acceptance, fig1_points):
    pts, elapsed = fig1_points
    v = pts[(10000, "dbf")].mean_rate
    assert acceptance("3a DBF simulated rate at K=1e4 within 15% of 6.60",
                      abs(v / 6.60 - 1) <= 0.15 and elapsed < 1200,
                      f"{v:.3f} ({(v / 6.60 - 1) * 100:+.1f}%), campaign {elapsed:.0f}s")


def test_c3_dbf_theorem(acceptance, fig1_points):
    v = fig1_points[0][(10000, "dbf")].theorem
    assert acceptance("3b DBF scaling law at K=1e4 within 10% of 7.13", abs(v / 7.13 - 1) <= 0.10,
                      f"{v:.3f} ({(v / 7.13 - 1) * 100:+.1f}%)")


def test_c3_no_irs_formula(acceptance, fig1_cfg):
    g = harness.mean_path_gains(fig1_cfg)
    lo = scaling_no_irs_rbf(2, 4, fig1_cfg.p_t, fig1_cfg.sigma2, g.beta_d)
    hi = scaling_no_irs_rbf(2, 10000, fig1_cfg.p_t, fig1_cfg.sigma2, g.beta_d)
    ok = abs(lo / -0.45 - 1) <= 0.02 and abs(hi / 3.34 - 1) <= 0.02
    assert acceptance("3c no-IRS law at K=4 and K=1e4 within 2% of -0.45 and 3.34", ok,
                      f"{lo:.4f}, {hi:.4f}")


def test_c3_ordering(acceptance, fig1_points):
    pts = fig1_points[0]
    order = ["zfs", "dbf", "rbf", "no-irs"]
    p = [pts[(10000, s)] for s in order]
    ok = all(a.mean_rate - 2 * a.stderr > b.mean_rate + 2 * b.stderr for a, b in zip(p, p[1:]))
    detail = " > ".join(f"{s} {q.mean_rate:.3f}+-{2 * q.stderr:.3f}" for s, q in zip(order, p))
    assert acceptance("3d ordering ZFS > DBF > RBF > no-IRS at K=1e4 with 2 SE separation", ok, detail)


# ------------------------------------------------------------------ 4. scaling slope

@pytest.mark.parametrize("name,m", [("slope_m2.cfg", 2), ("slope_m4.cfg", 4)])
def test_c4_slope(acceptance, name, m):
    cfg = _cfg(name)
    pts = harness.run_sumrate(cfg)
    ks = np.array([p.k for p in pts], dtype=float)
    rates = np.array([p.mean_rate for p in pts])
    # rates are in nats, so regressing on ln ln K gives the bits-vs-log2(ln K) slope
    slope = float(np.polyfit(np.log(np.log(ks)), rates, 1)[0])
    assert acceptance(f"4 DBF slope vs log2(ln K), M={m}, within 25% of M",
                      abs(slope / m - 1) <= 0.25, f"slope {slope:.3f} ({(slope / m - 1) * 100:+.1f}%)")


# ------------------------------------------------------------------ 5. coherent vs random phases

@pytest.fixture(scope="module")
def fig3_points():
    t0 = time.perf_counter()
    pts = harness.run_sumrate(_cfg("fig3.cfg"))
    return _by(pts), time.perf_counter() - t0


def test_c5_coherent_dominates(acceptance, fig3_points):
    pts, elapsed = fig3_points
    ks = (10, 100, 1000)
    ok = all(pts[(k, "coherent")].mean_rate >= pts[(k, "dbf")].mean_rate for k in ks)
    detail = ", ".join(f"K={k}: {pts[(k, 'coherent')].mean_rate:.3f} vs {pts[(k, 'dbf')].mean_rate:.3f}"
                       for k in ks)
    assert acceptance("5a coherent search >= random rotations at every K",
                      ok and elapsed < 900, f"{detail}, campaign {elapsed:.0f}s")


def test_c5_gap_shrinks(acceptance, fig3_points):
    pts = fig3_points[0]
    gap = {k: pts[(k, "coherent")].mean_rate - pts[(k, "dbf")].mean_rate for k in (10, 1000)}
    assert acceptance("5b coherent gap at K=1e3 below gap at K=10", gap[1000] < gap[10],
                      f"{gap[1000]:.3f} < {gap[10]:.3f}")


def test_c5_discrete_vs_continuous(acceptance, fig3_points):
    pts = fig3_points[0]
    worst = 0.0
    for k in (10, 100, 1000):
        a, b = pts[(k, "dbf")], pts[(k, "dbf-continuous")]
        worst = max(worst, abs(a.mean_rate - b.mean_rate) / math.hypot(a.stderr, b.stderr))
    assert acceptance("5c 2-bit vs continuous random rotations within 2 SE", worst < 2,
                      f"max |difference| {worst:.2f} SE")


# ------------------------------------------------------------------ 6. energy efficiency table

@pytest.fixture(scope="module")
def ee_rows():
    t0 = time.perf_counter()
    out = {}
    for d in (50, 25):
        rows = harness.run_ee(_cfg(f"table3_d{d}.cfg"))
        out[d] = {r.solver: r for r in rows}
    return out, time.perf_counter() - t0


def _point(r):
    return f"({r.m}, {r.n}, {r.p_t:.2f} W) {r.ee:.2f}"


@pytest.mark.xfail(strict=True, reason="with the configured geometry the 50 m optimum sits at a "
                                       "smaller IRS and twice the reference EE")
def test_c6_exhaustive_reference(acceptance, ee_rows):
    rows, elapsed = ee_rows
    ex = rows[50]["exhaustive"]
    ok = acceptance("6a exhaustive EE at 50 m within 20% of 17.94 Mbits/J",
                    abs(ex.ee / 17.94 - 1) <= 0.20 and elapsed < 1800,
                    f"{_point(ex)} ({(ex.ee / 17.94 - 1) * 100:+.0f}%), {elapsed:.1f}s")
    assert ok


def test_c6_algorithm1(acceptance, ee_rows):
    r = ee_rows[0][50]
    rel = abs(r["algorithm1"].ee - r["exhaustive"].ee) / r["exhaustive"].ee
    assert acceptance("6b Algorithm 1 within 2% of exhaustive (50 m)", rel <= 0.02,
                      f"{_point(r['algorithm1'])} vs {_point(r['exhaustive'])}, {rel * 100:.2f}%")


def test_c6_algorithm2_below_algorithm1(acceptance, ee_rows):
    r = ee_rows[0][50]
    assert acceptance("6c Algorithm 2 exact EE below Algorithm 1 (50 m)",
                      r["algorithm2"].ee < r["algorithm1"].ee,
                      f"{_point(r['algorithm2'])} < {r['algorithm1'].ee:.2f}")


@pytest.mark.xfail(strict=True, reason="at 50 m the bound optimum lands where the exact rate law "
                                       "is negative, so its exact EE clamps to zero")
def test_c6_algorithm2_above_no_irs(acceptance, ee_rows):
    r = ee_rows[0][50]
    ok = acceptance("6d Algorithm 2 exact EE above the no-IRS optimum (50 m)",
                    r["algorithm2"].ee > r["no-irs"].ee,
                    f"{_point(r['algorithm2'])} vs no-IRS {_point(r['no-irs'])}")
    assert ok


def test_c6_bound_tightening(acceptance, ee_rows):
    rows = ee_rows[0]
    gap = {d: (rows[d]["algorithm1"].ee - rows[d]["algorithm2"].ee) / rows[d]["algorithm1"].ee
           for d in (50, 25)}
    assert acceptance("6e relative Algorithm 1/2 gap smaller at 25 m than at 50 m",
                      gap[25] < gap[50], f"{gap[25]:.3f} < {gap[50]:.3f}")


def test_c6_no_irs(acceptance, ee_rows):
    r = ee_rows[0][50]["no-irs"]
    assert acceptance("6f optimized no-IRS EE within 20% of 8.57 Mbits/J",
                      abs(r.ee / 8.57 - 1) <= 0.20, f"{_point(r)} ({(r.ee / 8.57 - 1) * 100:+.1f}%)")


# ------------------------------------------------------------------ 7. solver properties

def _instances(count=20):
    rng = np.random.default_rng(31)
    base = harness.load_config(None, m_max=4, n_max=64)
    out = []
    for _ in range(count):
        cfg = dataclasses.replace(base, irs_y=float(rng.uniform(20, 80)),
                                  k_ee=float(rng.uniform(10, 5000)),
                                  ee_a=float(rng.uniform(1.0, 2.0)),
                                  p_n_dbm=float(rng.uniform(0, 15)))
        out.append(harness.ee_problem(cfg, p_max=float(10 ** rng.uniform(-0.5, 1.5))))
    return out


def test_c7_maximizers_beat_scans(acceptance):
    worst_p, mismatches = 0.0, 0
    for prob in _instances():
        grid = np.linspace(prob.p_max / 1000, prob.p_max, 1000)
        for m, n in [(1, 1), (2, 32), (prob.m_max, prob.n_max)]:
            best_grid = float(np.max(ee_objective(m, n, grid, prob)))
            p = opt_pt_exact(m, n, prob)
            # the root may sit between grid points, never below the grid maximum
            worst_p = max(worst_p, (best_grid - ee_objective(m, n, p, prob)) / max(best_grid, 1e-300))
        for n in (1, 16, prob.n_max):
            for p in (0.5, prob.p_max):
                m = opt_m_bound(n, p, prob)
                scan = [ee_upper_bound(v, n, p, prob) for v in range(1, prob.m_max + 1)]
                mismatches += ee_upper_bound(m, n, p, prob) != max(scan)
        for m in (1, 2, prob.m_max):
            for p in (0.5, prob.p_max):
                n = opt_n_bound(m, p, prob)
                scan = [ee_upper_bound(m, v, p, prob) for v in range(1, prob.n_max + 1)]
                mismatches += ee_upper_bound(m, n, p, prob) != max(scan)
    assert acceptance("7a power/antenna/element maximizers vs scans on 20 instances",
                      worst_p <= 1e-12 and mismatches == 0,
                      f"power shortfall {worst_p:.1e}, integer mismatches {mismatches}")


def test_c7_monotone_traces(acceptance):
    worst = 0.0
    for prob in _instances():
        for sol in (algorithm1(prob), algorithm2(prob)):
            worst = min(worst, float(np.min(np.diff(sol.trace), initial=0.0)))
    assert acceptance("7b Algorithm 1/2 objective traces nondecreasing", worst >= -1e-12,
                      f"largest decrease {max(0.0, -worst):.1e}")


def test_c7_byte_identical(acceptance, tmp_path):
    cfg = tmp_path / "det.cfg"
    cfg.write_text("trials = 20\nk_list = 4, 64, 1024\nn_max = 64\n")
    files = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert main(["sumrate", "--config", str(cfg), "--out", str(out), "--threads", "1"]) == 0
        assert main(["ee", "--config", str(cfg), "--out", str(out)]) == 0
        files.append([(out / f).read_bytes() for f in ("sumrate.csv", "ee.csv")])
    assert acceptance("7c fixed seed, threads=1: byte-identical CSV on rerun", files[0] == files[1],
                      "sumrate.csv and ee.csv compared")
