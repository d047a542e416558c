"""Acceptance criteria: each test prints one PASS/FAIL line and then asserts."""
from __future__ import annotations

import time
import warnings

import json

import numpy as np
from helpers import (
    ACCEPTANCE_LINES,
    FIXTURE_1D,
    HARD,
    mirror_data,
    random_instance,
    ref_dual,
    ref_sigma,
    separable_instances,
    unequal_variance,
)
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from varsvm import Dataset, Hyperplane, SolverConfig, solve_classical, solve_variance
from varsvm import io as vio
from varsvm.model import class_sigma, margin_report
from varsvm.oracle import (
    grid_error_bound,
    hard_margin_active_set,
    min_class_margin,
    oracle_1d,
    oracle_2d,
)
from varsvm.report import compare_report
from varsvm.variance import SigmaFloorWarning, gradient_check


def verdict(number, ok, detail):
    line = f"ACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print("\n" + line)
    assert ok, detail


def test_criterion_1_equal_variance_coincidence():
    t0 = time.perf_counter()
    worst_cos, worst_off = 1.0, 0.0
    for seed in range(20):
        data = mirror_data(seed)
        config = SolverConfig()
        classical = solve_classical(data, config)
        variance = solve_variance(data, config, classical=classical)
        c, v = classical.hyperplane.unit(), variance.hyperplane.unit()
        worst_cos = min(worst_cos, float(c.beta @ v.beta))
        worst_off = max(worst_off, abs(c.normalized_offset() - v.normalized_offset()))
    elapsed = time.perf_counter() - t0
    verdict(1, worst_cos >= 0.9999 and worst_off <= 1e-4 and elapsed < 10.0,
            f"min cosine {worst_cos:.12f}, max offset gap {worst_off:.3g}, {elapsed:.2f}s")


def test_criterion_2_margin_ratio_equality():
    t0 = time.perf_counter()
    instances = separable_instances(20, 25, ratio=3.0, gap=10.0)
    gaps = []
    for _, data in instances:
        model = solve_variance(data, SolverConfig(cost=HARD))
        rep = margin_report(data, model.hyperplane)
        assert model.converged
        gaps.append(rep.ratio_gap)
    elapsed = time.perf_counter() - t0
    verdict(2, max(gaps) <= 1e-4 and elapsed < 10.0,
            f"max |M_neg - M_pos| {max(gaps):.3g} over {len(gaps)} datasets, {elapsed:.2f}s")


def test_criterion_3_one_dimensional_fixture():
    t0 = time.perf_counter()
    config = SolverConfig(cost=HARD)
    variance = solve_variance(FIXTURE_1D, config).hyperplane.boundary_position()
    classical = solve_classical(FIXTURE_1D, config).hyperplane.boundary_position()
    # the brute-force sweep must agree with the closed forms used below
    sweep_v = oracle_1d(FIXTURE_1D, scaled=True).hyperplane.boundary_position()
    sweep_c = oracle_1d(FIXTURE_1D, scaled=False).hyperplane.boundary_position()
    elapsed = time.perf_counter() - t0
    ok = (abs(variance - 0.0) <= 1e-3 and abs(classical - 0.5) <= 1e-3
          and abs(sweep_v) <= 1e-3 and abs(sweep_c - 0.5) <= 1e-3 and elapsed < 1.0)
    verdict(3, ok, f"variance {variance:.6g}, classical {classical:.6g} "
                   f"(sweep {sweep_v:.6g}, {sweep_c:.6g}), {elapsed:.2f}s")


def test_criterion_4_gradient_correctness():
    t0 = time.perf_counter()
    worst_exact, worst_paper = 0.0, 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SigmaFloorWarning)
        for k in range(5):
            rng = np.random.default_rng(100 + k)
            p = 2 + k % 3
            data = random_instance(100 + k, n=30, p=p)
            for _ in range(20):
                h = Hyperplane(rng.standard_normal(p), rng.uniform(-2.0, 2.0))
                alphas = rng.uniform(0.0, 1.0, data.n)
                worst_exact = max(worst_exact, gradient_check(data, h, alphas, "exact"))
                worst_paper = max(worst_paper, gradient_check(data, h, alphas, "paper"))
    elapsed = time.perf_counter() - t0
    verdict(4, worst_exact <= 1e-5 and worst_paper > 1e-3 and elapsed < 5.0,
            f"exact max rel. error {worst_exact:.3g}, paper-form max deviation "
            f"{worst_paper:.3g}, {elapsed:.2f}s")


def test_criterion_5_classical_solver_correctness():
    t0 = time.perf_counter()
    worst_gap, worst_kkt, duality_violations, iterates = 0.0, 0.0, 0, 0
    for k, (_, data) in enumerate(separable_instances(20, 8, first_seed=500)):
        if k % 2:
            data = separable_instances(1, 10, first_seed=600 + k)[0][1]
        _, optimum = hard_margin_active_set(data)
        seen = []
        model = solve_classical(data, SolverConfig(cost=HARD),
                                callback=lambda _, a: seen.append(a.copy()))
        for a in seen:
            iterates += 1
            if ref_dual(data.points, data.labels, a) > optimum * (1 + 1e-12):
                duality_violations += 1
        worst_gap = max(worst_gap, abs(ref_dual(data.points, data.labels, model.alphas) - optimum))
        worst_kkt = max(worst_kkt, model.kkt_residual)
    elapsed = time.perf_counter() - t0
    ok = worst_gap <= 1e-6 and worst_kkt <= 1e-6 and duality_violations == 0 and elapsed < 10.0
    verdict(5, ok, f"max |dual - oracle| {worst_gap:.3g}, max KKT {worst_kkt:.3g}, "
                   f"{duality_violations} weak-duality violations in {iterates} iterates, "
                   f"{elapsed:.2f}s")


def test_criterion_6_oracle_agreement():
    t0 = time.perf_counter()
    shortfalls = []
    for _, data in separable_instances(10, 15, first_seed=1000):
        model = solve_variance(data, SolverConfig(cost=HARD))
        best = oracle_2d(data, scaled=True, angle_steps=3600, offset_steps=4000)
        bound = grid_error_bound(data, best, scaled=True)
        value = min_class_margin(data, model.hyperplane, scaled=True)
        shortfalls.append(best.objective - bound - value)
    elapsed = time.perf_counter() - t0
    verdict(6, max(shortfalls) <= 0.0 and elapsed < 60.0,
            f"worst (oracle - bound - solver) {max(shortfalls):.3g} over 10 instances, "
            f"{elapsed:.2f}s")


# -- criterion 7: invariances -------------------------------------------------------------

_coords = st.floats(-50.0, 50.0, allow_nan=False, allow_infinity=False)


@st.composite
def datasets(draw, max_p=4):
    p = draw(st.integers(1, max_p))
    n = draw(st.integers(4, 16))
    pts = draw(hnp.arrays(np.float64, (n, p), elements=_coords))
    labels = draw(st.permutations([-1] * (n // 2) + [1] * (n - n // 2)))
    return Dataset(pts, np.array(labels))


def _direction(draw, p):
    v = draw(hnp.arrays(np.float64, p, elements=st.floats(-10.0, 10.0)))
    return v if np.linalg.norm(v) > 1e-3 else np.ones(p)


def _rotation(seed, p):
    q, r = np.linalg.qr(np.random.default_rng(seed).standard_normal((p, p)))
    return q * np.sign(np.diag(r))


PROPERTY = settings(max_examples=100, deadline=None,
                    suppress_health_check=[HealthCheck.too_slow])


def _invariance_checks():
    counts = {}

    def tally(name):
        counts[name] = counts.get(name, 0) + 1

    @PROPERTY
    @given(datasets(), st.data(), st.floats(1e-3, 1e3), st.sampled_from([-1, 1]))
    def homogeneity(data, extra, c, label):
        beta = _direction(extra.draw, data.p)
        scale = max(1.0, float(np.ptp(data.points)))
        a, b = class_sigma(data, label, beta), class_sigma(data, label, c * beta)
        assert abs(a - b) <= 1e-12 * scale
        tally("homogeneity")

    @PROPERTY
    @given(datasets(), st.data(), st.integers(0, 2**32 - 1), st.floats(-5.0, 5.0))
    def rotation(data, extra, seed, beta0):
        beta = _direction(extra.draw, data.p)
        q = _rotation(seed, data.p)
        turned = data.with_points(data.points @ q.T)
        scale = max(1.0, float(np.max(np.abs(data.points))))
        h, hq = Hyperplane(beta, beta0), Hyperplane(q @ beta, beta0)
        for label in (-1, 1):
            assert abs(class_sigma(data, label, beta)
                       - class_sigma(turned, label, q @ beta)) <= 1e-10 * scale
        assert np.allclose(data.points @ h.beta, turned.points @ hq.beta,
                           rtol=0.0, atol=1e-10 * scale * np.linalg.norm(beta))
        tally("rotation")

    @PROPERTY
    @given(datasets(), st.data(), hnp.arrays(np.float64, 4, elements=_coords))
    def translation(data, extra, shift):
        beta = _direction(extra.draw, data.p)
        moved = data.with_points(data.points + shift[: data.p])
        scale = max(1.0, float(np.max(np.abs(moved.points))))
        for label in (-1, 1):
            # independent reference: statistics.pstdev on the projections
            ref = ref_sigma(data.points, data.labels, label, beta)
            assert abs(class_sigma(moved, label, beta) - ref) <= 1e-9 * scale
        tally("translation")

    @PROPERTY
    @given(datasets(), st.data(), st.floats(-5.0, 5.0))
    def label_flip(data, extra, beta0):
        beta = _direction(extra.draw, data.p)
        flipped = data.with_labels(-data.labels)
        a = margin_report(data, Hyperplane(beta, beta0))
        b = margin_report(flipped, Hyperplane(-beta, -beta0))
        assert a.sigma_neg == b.sigma_pos and a.sigma_pos == b.sigma_neg
        assert a.margin_neg == b.margin_pos and a.margin_pos == b.margin_neg
        tally("label_flip")

    @PROPERTY
    @given(datasets(), hnp.arrays(np.float64, 4, elements=st.floats(
        allow_nan=False, allow_infinity=False, width=64)), st.floats(
        allow_nan=False, allow_infinity=False), st.integers(0, 2**31))
    def round_trip(data, beta, beta0, seed):
        back = vio.parse_dataset(vio.dataset_to_csv(data))
        assert back.points.tobytes() == data.points.tobytes()
        assert np.array_equal(back.labels, data.labels)
        mf = vio.ModelFile("variance", beta, beta0, (float(beta[0]), float(beta[1])),
                           {"cost": 1.0, "kkt_tol": 1e-6}, {"dataset_hash": vio.dataset_hash(data),
                                                           "seed": seed, "timestamp": "t"})
        again = vio.ModelFile.from_dict(json.loads(vio.dumps(mf.to_dict())))
        assert again.beta.tobytes() == np.asarray(beta, float).tobytes()
        assert np.float64(again.beta0).tobytes() == np.float64(beta0).tobytes()
        assert again.sigmas == mf.sigmas
        tally("round_trip")

    checks = [homogeneity, rotation, translation, label_flip, round_trip]
    return checks, counts


def test_criterion_7_invariance_suite():
    t0 = time.perf_counter()
    checks, counts = _invariance_checks()
    failures = []
    for check in checks:
        try:
            check()
        except Exception as exc:  # report every property, then fail
            failures.append(f"{check.__name__}: {type(exc).__name__}")
    elapsed = time.perf_counter() - t0
    short = {k: v for k, v in counts.items() if v < 100}
    ok = not failures and len(counts) == len(checks) and not short and elapsed < 30.0
    verdict(7, ok, f"cases {counts}, failures {failures or 'none'}, {elapsed:.2f}s")


def test_criterion_8_boundary_shifts_toward_low_variance_class():
    closer, rows = 0, []
    for seed in range(20):
        data = unequal_variance(seed)
        holdout = unequal_variance(10_000 + seed, n=5000)
        report = compare_report(data, SolverConfig(), holdout)
        dc = report["classical"]["low_variance_mean_distance"]["distance"]
        dv = report["variance"]["low_variance_mean_distance"]["distance"]
        closer += dv < dc
        rows.append((seed, dc, dv, report["classical"]["holdout_errors"]["total"],
                     report["variance"]["holdout_errors"]["total"]))
    for row in rows:
        print("seed %2d  classical %.6f  variance %.6f  holdout errors %d / %d" % row)
    verdict(8, closer == len(rows),
            f"variance boundary closer to the low-variance mean on {closer}/{len(rows)} seeds")
