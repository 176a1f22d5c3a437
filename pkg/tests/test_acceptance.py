"""Acceptance suite: one test per release criterion, one PASS line each.

The figure-trend test runs the full default sweep (24 points x 200 trials x
both methods) and takes a few minutes; everything else is seconds.
"""

import math
import subprocess
import sys
import time

import numpy as np
from scipy.stats import spearmanr

from irsdiag.airlink import (
    run_initialization,
    true_defective_cascade,
    true_normal_cascade,
)
from irsdiag.bisection import run_three_phase
from irsdiag.channel import default_geometry, synthesize_channels
from irsdiag.detect import residual_threshold
from irsdiag.grid import DefectRect, FailureScene, GridDims
from irsdiag.harness import (
    ExperimentConfig,
    diagnose_sortpm,
    repro_example_1,
    repro_example_2,
    repro_example_3,
    sweep,
)

PI = np.pi


def _assert_checks(checks, budget_s, started, name):
    elapsed = time.monotonic() - started
    failed = [c for c in checks if not c.passed]
    assert not failed, failed
    assert elapsed < budget_s, f"{name} took {elapsed:.2f}s"
    print(f"PASS {name} ({len(checks)} checks, {elapsed:.2f}s)")


def test_example1_regression():
    started = time.monotonic()
    _assert_checks(repro_example_1(), 1.0, started, "example-1 regression")


def test_example3_regression():
    started = time.monotonic()
    _assert_checks(repro_example_3(), 1.0, started, "example-3 regression")


def test_example2_regression():
    started = time.monotonic()
    _assert_checks(repro_example_2(), 1.0, started, "example-2 regression")


def test_zero_noise_oracle_equivalence():
    """Every rectangle on 4x4 and 8x8 grids is recovered exactly at sigma=0."""
    started = time.monotonic()
    total = 0
    for n in (4, 8):
        dims = GridDims(n, n)
        geom = default_geometry(dims, 4)
        ch = synthesize_channels(geom, 1e-3, 1e-2, 1e-2, 0.0)
        rng = np.random.default_rng(12345)
        slot_limit = 2 * int(math.log2(n))
        for a in range(1, n + 1):
            for b in range(a, n + 1):
                for c in range(1, n + 1):
                    for d in range(c, n + 1):
                        truth = (a, b, c, d)
                        scene = FailureScene.rectangular(
                            dims, DefectRect(*truth), rng=rng
                        )
                        est = diagnose_sortpm(scene, ch, None, pilot=1.0)
                        assert est.bounds == truth, ("sortpm", n, truth)
                        init = run_initialization(
                            scene, ch, (1.0, 1.0), (0.0, PI), None
                        )
                        horizontal = run_three_phase(
                            "horizontal", scene, init, ch, None, pilot=1.0
                        )
                        vertical = run_three_phase(
                            "vertical", scene, init, ch, None, pilot=1.0
                        )
                        got = (horizontal.n_min, horizontal.n_max,
                               vertical.n_min, vertical.n_max)
                        assert got == truth, ("bisect", n, truth)
                        assert horizontal.slots_used <= slot_limit
                        assert vertical.slots_used <= slot_limit
                        total += 1
    elapsed = time.monotonic() - started
    assert elapsed < 60.0, f"sweep took {elapsed:.1f}s"
    print(f"PASS zero-noise oracle equivalence ({total} scenes, {elapsed:.1f}s)")


def test_ml_estimator_exactness():
    """Noiseless initialization recovers both aggregate cascades to 1e-9."""
    started = time.monotonic()
    rng = np.random.default_rng(77)
    for trial in range(100):
        n = int(rng.choice([4, 8, 16]))
        dims = GridDims(n, n)
        a = int(rng.integers(1, n + 1)); b = int(rng.integers(a, n + 1))
        c = int(rng.integers(1, n + 1)); d = int(rng.integers(c, n + 1))
        scene = FailureScene.rectangular(dims, DefectRect(a, b, c, d), rng=rng)
        geom = default_geometry(dims, 4)
        ch = synthesize_channels(geom, 1e-3, 1e-2, 1e-2, 0.0)
        init = run_initialization(scene, ch, (1.0, 1.0), (0.0, PI), None)
        g_e = true_defective_cascade(scene, ch)
        g_w = true_normal_cascade(scene, ch)
        assert np.linalg.norm(init.g_e_hat - g_e) <= 1e-9 * np.linalg.norm(g_e)
        if np.linalg.norm(g_w) > 0:
            assert np.linalg.norm(init.g_w_hat - g_w) <= 1e-9 * np.linalg.norm(g_w)
    print(f"PASS ML estimator exactness (100 scenes, "
          f"{time.monotonic() - started:.2f}s)")


def test_threshold_calibration():
    """False-reject rate at alpha=1e-3 over 1e5 synthetic null residuals."""
    started = time.monotonic()
    m, alpha, sigma2, kappa = 4, 1e-3, 3.7e-8, 1.0
    tau = residual_threshold(sigma2, m, alpha, kappa, floor_scale=0.0)
    rng = np.random.default_rng(31337)
    n = 100_000
    v = sigma2 * (1.0 + kappa)
    draws = np.sqrt(v / 2) * (
        rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
    )
    rate = float(np.mean(np.sum(np.abs(draws) ** 2, axis=1) > tau))
    assert 2e-4 <= rate <= 5e-3, rate
    print(f"PASS threshold calibration (rate={rate:.2e}, "
          f"{time.monotonic() - started:.2f}s)")


def _spearman_ok(x, y, sign):
    rho = spearmanr(x, y).statistic
    if np.isnan(rho):  # constant series: trivially monotone
        return True
    return sign * rho >= 0


def test_figure_trends():
    """Paper-scale sweep reproduces the published qualitative behavior."""
    started = time.monotonic()
    cfg = ExperimentConfig()
    result = sweep(cfg)

    powers = sorted(set(cfg.power_dbm))
    antennas = sorted(set(cfg.antennas))

    def series(method, metric, fix_m=None, fix_p=None):
        rows = [a for a in result.aggregates if a.method == method
                and (fix_m is None or a.m_antennas == fix_m)
                and (fix_p is None or a.power_dbm == fix_p)]
        rows.sort(key=lambda a: (a.power_dbm, a.m_antennas))
        return [getattr(a, metric) for a in rows]

    acc_s = series("sortpm", "mean_accuracy", fix_m=cfg.m_antennas)
    acc_b = series("bisect", "mean_accuracy", fix_m=cfg.m_antennas)
    slots_s = series("sortpm", "mean_slots", fix_m=cfg.m_antennas)
    slots_b = series("bisect", "mean_slots", fix_m=cfg.m_antennas)

    # (a) accuracy non-decreasing in transmit power
    assert _spearman_ok(powers, acc_s, +1), acc_s
    assert _spearman_ok(powers, acc_b, +1), acc_b

    # (b) sortPM leads at the lowest power; the gap closes at the highest
    assert acc_s[0] >= acc_b[0], (acc_s[0], acc_b[0])
    assert abs(acc_s[-1] - acc_b[-1]) < 0.02, (acc_s[-1], acc_b[-1])

    # (c) bisection slots flat and strictly fewer; sortPM slots non-increasing
    assert max(slots_b) - min(slots_b) <= 2.0, slots_b
    assert _spearman_ok(powers, slots_s, -1), slots_s
    assert all(b < s for b, s in zip(slots_b, slots_s))

    # (d) accuracy non-decreasing in antenna count at 16 dBm
    acc_sm = series("sortpm", "mean_accuracy", fix_p=16.0)
    acc_bm = series("bisect", "mean_accuracy", fix_p=16.0)
    assert _spearman_ok(antennas, acc_sm, +1), acc_sm
    assert _spearman_ok(antennas, acc_bm, +1), acc_bm

    elapsed = time.monotonic() - started
    assert elapsed < 1200.0, f"trend sweep took {elapsed:.0f}s"
    print(f"PASS figure trends (acc@P0 {acc_s[0]:.2f}/{acc_b[0]:.2f}, "
          f"acc@P20 {acc_s[-1]:.3f}/{acc_b[-1]:.3f}, {elapsed:.0f}s)")


def test_sweep_determinism(tmp_path):
    """Two CLI sweeps with the same config and seed are byte-identical."""
    started = time.monotonic()
    outputs = []
    for name in ("first.csv", "second.csv"):
        out = tmp_path / name
        proc = subprocess.run(
            [sys.executable, "-m", "irsdiag.cli", "sweep",
             "--out", str(out), "--trials", "3",
             "--power-dbm", "0,16", "--antennas", "2", "--seed", "7"],
            capture_output=True, text=True, timeout=300,
        )
        assert proc.returncode == 0, proc.stderr
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1]
    print(f"PASS sweep determinism ({time.monotonic() - started:.1f}s)")
