"""Acceptance criteria 1-13, each at its stated tolerance and runtime budget.

Every test records one PASS/FAIL line (shown in the terminal summary) before
asserting, so a failing criterion still reports what was measured.
"""
import time
from dataclasses import replace

import numpy as np
from scipy.linalg import expm

from obslab import config
from obslab.approximators import fuzzy_basis, default_grid
from obslab.control import differentiator_control, full_state_control, observer_control, DEFAULT_K
from obslab.estimators import DEFAULT_GAINS, EstimatorGains, freq_response, noise_channel_compare
from obslab.numkit import companion_from_gains, is_positive_definite, solve_lyapunov
from obslab.plant import ANGLE_RANGE, RATE_RANGE, pendulum_model
from obslab.simkit import (ControllerConfig, EstimatorConfig, Scenario, run_closed_loop, run_estimator,
                           steady_observer_error, with_epsilon)

from conftest import ACCEPTANCE_LINES, random_hurwitz_matrix, random_hurwitz_poly
from oracles import lyapunov_identity_residual


def report(number, ok, detail, runtime=None, budget=None):
    if budget is not None:
        ok = ok and runtime < budget
        detail += f"; runtime {runtime:.2f} s (budget {budget:g} s)"
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def test_criterion_01_transfer_function_limit():
    with Timer() as tm:
        errs = [abs(freq_response(DEFAULT_GAINS.with_epsilon(e), 2, 1.0) - 1j) for e in (1e-1, 1e-2, 1e-3)]
    ok = errs[0] > errs[1] > errs[2] and errs[2] < 1e-2
    report(1, ok, "|H2(j) - j| at eps 1e-1,1e-2,1e-3 = " + ", ".join(f"{v:.3g}" for v in errs), tm.elapsed, 1.0)


def test_criterion_02_dc_exactness():
    # Valid gain sets are drawn with eps in [1e-3, 1e-1] and estimator roots of
    # magnitude >= 1.  Near DC, |H1(jw) - 1| ~ eps (a_2/a_1) w, and a_2/a_1 is the
    # sum of reciprocal root magnitudes, so this domain keeps the exact deviation
    # at w = 1e-6 below 5e-7.  Slower roots or larger eps push the true transfer
    # function itself past 1e-6 (see test_estimators for that regime).
    rng = np.random.default_rng(2)
    with Timer() as tm:
        worst = 0.0
        for _ in range(100):
            n = int(rng.integers(1, 5))
            c = random_hurwitz_poly(rng, n + 1, lo=1.0, hi=10.0)
            g = EstimatorGains(n, float(10 ** rng.uniform(-3, -1)), tuple(c[1:][::-1]))
            worst = max(worst, abs(freq_response(g, 1, 1e-6) - 1))
    report(2, worst < 1e-6, f"max |H1(j 1e-6) - 1| over 100 gain sets = {worst:.3g}", tm.elapsed, 1.0)


def test_criterion_03_observer_epsilon_scaling():
    base = config.load_preset("observer")
    with Timer() as tm:
        z = {}
        for eps in (0.04, 0.02, 0.01, 0.005):
            z[eps] = steady_observer_error(run_closed_loop(with_epsilon(base, eps)), 5.0, 10.0)
        ratios = [z[e] / z[e / 2] for e in (0.04, 0.02, 0.01)]
    ok = all(1.5 <= r <= 3.0 for r in ratios)
    report(3, ok, "steady ||z|| ratios eps/(eps/2) for eps 0.04,0.02,0.01 = " + ", ".join(f"{r:.3f}" for r in ratios),
           tm.elapsed, 60.0)


def test_criterion_04_differentiator_polynomial_exactness():
    with Timer() as tm:
        errs = {}
        for eps in (1e-1, 1e-2):
            t, x = run_estimator(DEFAULT_GAINS.with_epsilon(eps), lambda s: s * s, 2.0, eps / 100)
            w = t >= 1.0
            errs[eps] = (np.max(np.abs(x[w, 1] - 2 * t[w])), np.max(np.abs(x[w, 2] - 2.0)))
    f2 = errs[1e-1][0] / errs[1e-2][0]
    f3 = errs[1e-1][1] / errs[1e-2][1]
    report(4, f2 >= 2 and f3 >= 2,
           f"shrink factors for |xhat2 - 2t| = {f2:.3g}, |xhat3 - 2| = {f3:.3g} (window t in [1, 2])",
           tm.elapsed, 10.0)


def test_criterion_05_fuzzy_normalization():
    rng = np.random.default_rng(5)
    grid = default_grid(2)
    with Timer() as tm:
        xs = np.column_stack([rng.uniform(*ANGLE_RANGE, 1000), rng.uniform(*RATE_RANGE, 1000)])
        worst = max(abs(fuzzy_basis(x, grid).sum() - 1.0) for x in xs)
    report(5, worst < 1e-12, f"max |sum xi - 1| over 1000 states = {worst:.3g}", tm.elapsed, 1.0)


def test_criterion_06_lyapunov_solver():
    rng = np.random.default_rng(6)
    with Timer() as tm:
        lam, _ = companion_from_gains((20, 10))
        p_hand = solve_lyapunov(lam, np.eye(2))
        hand_err = float(np.max(np.abs(p_hand - [[1.3, 0.025], [0.025, 0.0525]])))
        worst, all_pd = 0.0, True
        cases = [(lam, np.eye(2)), (lam, 50 * np.eye(2))]
        for _ in range(100):
            n = int(rng.integers(1, 6))
            r = rng.normal(size=(n, n))
            cases.append((random_hurwitz_matrix(rng, n), r @ r.T + np.eye(n)))
        for a, q in cases:
            p = solve_lyapunov(a, q)
            worst = max(worst, float(np.max(np.sum(np.abs(a.T @ p + p @ a + q), axis=1))))
            all_pd &= is_positive_definite(p)
    ok = worst < 1e-10 and all_pd and hand_err < 1e-12
    report(6, ok, f"max residual inf-norm {worst:.3g}, all P positive definite: {all_pd}, hand case error {hand_err:.3g}",
           tm.elapsed, 1.0)


def test_criterion_07_lyapunov_identity():
    s = config.load_preset("fig3")
    with Timer() as tm:
        rel, used = lyapunov_identity_residual(s, run_closed_loop(s))
    report(7, rel < 0.05, f"aggregate relative error of dV/dt vs reconstructed RHS = {rel:.3g} over {used} samples",
           tm.elapsed, 30.0)


def test_criterion_08_full_state_tracking():
    s = Scenario(estimator=EstimatorConfig(kind="none"), controller=ControllerConfig(kind="full_state"), t_end=10.0)
    with Timer() as tm:
        tr = run_closed_loop(s)
        lam, _ = companion_from_gains(s.controller.gains)
        e0 = np.array([tr["e1"][0], tr["e2"][0]])
        analytic = np.array([expm(lam * t) @ e0 for t in tr.t])
        dev = float(np.max(np.abs(analytic - np.column_stack([tr["e1"], tr["e2"]]))))
        late = float(np.max(np.abs(tr["e1"][tr.t >= 5.0])))
    report(8, late < 1e-3 and dev < 1e-4,
           f"max |e1| for t >= 5 s = {late:.3g}; max deviation from expm(Lambda t) e0 = {dev:.3g}", tm.elapsed, 10.0)


# values recorded at the first green build; a drift beyond 5 % flags a regression
PINNED_FIG5 = {"max_e1": 0.004683, "fhat_rel": 0.03145}


def test_criterion_09_differentiator_reproduction():
    s = config.load_preset("fig5")
    with Timer() as tm:
        tr = run_closed_loop(s)
        w = tr.t >= 2.0
        max_e1 = float(np.max(np.abs(tr["x1"][w] - tr["yd0"][w])))
        err = tr["fhat"][w] - tr["f"][w]
        rel = float(np.sqrt(np.mean(err ** 2)) / np.sqrt(np.mean(tr["f"][w] ** 2)))
    pinned = all(abs(v / PINNED_FIG5[k] - 1) < 0.05 for k, v in (("max_e1", max_e1), ("fhat_rel", rel)))
    report(9, max_e1 < 0.02 and rel < 0.10 and pinned,
           f"max |x1 - yd| for t > 2 s = {max_e1:.4g}, RMS(fhat - f)/RMS(f) = {rel:.4g} "
           f"(pinned {PINNED_FIG5['max_e1']}, {PINNED_FIG5['fhat_rel']})", tm.elapsed, 30.0)


def test_criterion_10_noise_restraint():
    with Timer() as tm:
        omegas = np.logspace(4, 8, 200)
        mags = [noise_channel_compare(DEFAULT_GAINS, w, 2) for w in omegas]
        freq_ok = all(ic < hg for ic, hg in mags)
        ic_s = config.load_preset("fig6")
        hg_s = replace(ic_s, estimator=replace(ic_s.estimator, kind="highgain"))
        jit = [float(np.std(np.diff(run_closed_loop(s)["xhat2"]))) for s in (ic_s, hg_s)]
    report(10, freq_ok and jit[0] < jit[1],
           f"(a) |H_ic| < |H_hg| on channel 2 for all omega in [1e4, 1e8]: {freq_ok}; "
           f"(b) xhat2 jitter integral-chain {jit[0]:.4g} vs high-gain {jit[1]:.4g}", tm.elapsed, 60.0)


def test_criterion_11_baseline_parity():
    with Timer() as tm:
        worst = {}
        for p in ("fig3", "fig4"):
            tr = run_closed_loop(config.load_preset(p))
            worst[p] = float(np.max(np.abs(tr["e1"][tr.t > 3.0])))
    report(11, all(v < 0.05 for v in worst.values()),
           f"max |e1| for t > 3 s: fuzzy {worst['fig3']:.4g}, RBF {worst['fig4']:.4g}", tm.elapsed, 60.0)


def test_criterion_12_controller_equivalence():
    rng = np.random.default_rng(12)
    plant = pendulum_model()
    floor = 0.1 * plant.gain_bounds[0]
    with Timer() as tm:
        worst = 0.0
        for _ in range(1000):
            x = np.array([rng.uniform(*ANGLE_RANGE), rng.uniform(*RATE_RANGE)])
            t, u_prev = rng.uniform(0, 10), rng.uniform(-50, 50)
            f, g = plant.drift(x), plant.input_gain(x)
            u = full_state_control(x, t, DEFAULT_K, plant).u
            d = differentiator_control([x[0], x[1], f + g * u_prev], t, DEFAULT_K, g, u_prev, g_floor=floor).u
            o = observer_control([x[0], x[1], f], t, DEFAULT_K, g, g_floor=floor).u
            worst = max(worst, abs(d - u), abs(o - u))
    report(12, worst <= 1e-10, f"max |u - u_full| over 1000 points = {worst:.3g}", tm.elapsed, 1.0)


def test_criterion_13_determinism():
    same = {}
    for p in config.PRESETS:
        s = config.load_preset(p)
        same[p] = run_closed_loop(s).to_csv_text() == run_closed_loop(s).to_csv_text()
    report(13, all(same.values()), "byte-identical CSV on repeat: " + ", ".join(f"{k}={v}" for k, v in same.items()))
