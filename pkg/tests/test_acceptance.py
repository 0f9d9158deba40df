"""Acceptance criteria. Each test records one PASS/FAIL line, printed in the
terminal summary, and asserts at the stated tolerance."""
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, GOLDEN, gapped_problem
from tlsgn.linalg import FlopCounter, qr_factor, qr_rank_one_update
from tlsgn.power import check_equivalence, ellipsoid_step_explicit, measure_rates, power_step
from tlsgn.probgen import SpectrumSpec, gapped_spectrum, generate
from tlsgn.reference import analyze, solve_tls_svd
from tlsgn.solver import SolverConfig, Status, solve
from tlsgn.variational import ProblemData, backward_certificate, evaluate, theta_tau

GAPS = (1.5, 2.0, 4.0, 10.0)


def report(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def probgen_runs():
    """Criterion 2's 50 instances (m=100, n=10), with both solvers."""
    t0 = time.perf_counter()
    runs = []
    for seed in range(50):
        gap = GAPS[seed % len(GAPS)]
        p = generate(SpectrumSpec(100, 10, gapped_spectrum(10, gap, rng=np.random.default_rng(seed)), seed))
        bundle, wp = analyze(p)
        x_svd, eta_svd = solve_tls_svd(p, bundle, wp)
        res = solve(p, SolverConfig(step_mode="optimal"))
        runs.append((p, bundle, x_svd, eta_svd, res))
    return runs, time.perf_counter() - t0


def test_criterion_01_golden_ratio():
    t0 = time.perf_counter()
    p = ProblemData([[1.0], [0.0]], [1.0, 1.0])
    x_svd, eta_svd = solve_tls_svd(p)
    res = solve(p, SolverConfig(step_mode="optimal"))
    elapsed = time.perf_counter() - t0
    eta_star = (np.sqrt(5) - 1) / 2
    errs = [abs(x_svd[0] - GOLDEN), abs(res.x_hat[0] - GOLDEN), abs(eta_svd - eta_star), abs(res.eta_final - eta_star)]
    ok = max(errs) <= 1e-10 and res.iterations <= 25 and res.status is Status.CONVERGED and elapsed < 1.0
    report(1, ok, f"max abs error {max(errs):.2e}, gn-optimal {res.iterations} iterations, {elapsed:.3f} s")


def test_criterion_02_eta_equals_sigma(probgen_runs):
    runs, elapsed = probgen_runs
    worst = 0.0
    for p, bundle, _, eta_svd, res in runs:
        s1 = bundle.sigma_1
        worst = max(worst, abs(eta_svd - bundle.sigma_np1) / s1, abs(res.eta_final - bundle.sigma_np1) / s1)
    ok = worst <= 1e-8 and elapsed < 10.0 and all(r[4].status is Status.CONVERGED for r in runs)
    report(2, ok, f"max |eta - sigma_11| / sigma_1 = {worst:.2e} over {len(runs)} instances, {elapsed:.2f} s")


def test_criterion_03_monotone_eta(probgen_runs):
    runs, _ = probgen_runs
    steps = violations = 0
    for *_, res in runs:
        etas = res.trace.etas
        steps += len(etas) - 1
        violations += int(np.sum(etas[1:] >= etas[:-1] + 1e-13))
    ok = violations == 0
    report(3, ok, f"{violations} violations over {steps} accepted steps")


def test_criterion_04_geometric_invariants(probgen_runs):
    runs, _ = probgen_runs
    ell = max(max(r.ellipsoid_residual for r in res.trace.records) for *_, res in runs)
    orth = max(max(r.orthogonality_residual for r in res.trace.records[:-1]) for *_, res in runs)
    ok = ell <= 1e-9 and orth <= 1e-10
    report(4, ok, f"max ellipsoid_residual {ell:.2e}, max orthogonality_residual {orth:.2e}")


def test_criterion_05_rates():
    bad, lines = [], []
    for gap in (2.0, 4.0, 10.0):
        maxit = int(40 * np.log(10) / np.log(gap ** 2))
        rf, re = [], []
        for seed in range(10):
            p = gapped_problem(seed, gap=gap, sub_gap=3.0)
            bundle, _ = analyze(p)
            res = solve(p, SolverConfig(epsilon=1e-300, maxit=maxit))
            rep = measure_rates(res.trace.fs, bundle)
            rf.append(rep.fitted_rate_f / rep.rho)
            re.append(rep.fitted_rate_eta / rep.rho ** 2)
            if not (0.5 <= rf[-1] <= 2 and 0.5 <= re[-1] <= 2):
                bad.append((gap, seed, round(rf[-1], 3), round(re[-1], 3)))
        lines.append(f"gap {gap:g}: f/rho in [{min(rf):.3f}, {max(rf):.3f}], "
                     f"eta/rho^2 in [{min(re):.3f}, {max(re):.3f}]")
    report(5, not bad, "; ".join(lines) + (f"; outside x2: {bad}" if bad else ""))


def test_criterion_06_power_equivalence():
    worst = 0.0
    for seed in range(20):
        p = gapped_problem(seed, gap=GAPS[seed % len(GAPS)])
        res = solve(p, SolverConfig(epsilon=1e-300, maxit=20, eta_guard=False))
        assert res.iterations == 20 and not res.trace.has_fallback
        worst = max(worst, check_equivalence(res, p) / np.linalg.norm(p.c, 2))
    rng = np.random.default_rng(6)
    dual = 0.0
    for _ in range(200):
        m, n = rng.integers(3, 15), rng.integers(1, 6)
        m = max(m, n + 1)
        p = ProblemData(rng.standard_normal((m, n)), rng.standard_normal(m))
        s = rng.standard_normal(n + 1)
        s /= np.linalg.norm(s)
        dual = max(dual, np.linalg.norm(power_step(p, s).s - ellipsoid_step_explicit(p, s).s))
    ok = worst <= 1e-8 and dual <= 1e-11
    report(6, ok, f"max GN/power deviation {worst:.2e} sigma_1 over 20 runs x 20 iterations, "
                  f"max dual-path gap {dual:.2e} over 200 pairs")


def test_criterion_07_certificate():
    rng = np.random.default_rng(7)
    res_err = norm_err = 0.0
    beaten = 0
    for _ in range(100):
        m, n = int(rng.integers(2, 12)), int(rng.integers(1, 5))
        m = max(m, n)
        p = ProblemData(rng.standard_normal((m, n)), rng.standard_normal(m))
        x = rng.standard_normal(n) * 10.0 ** rng.uniform(-2, 2)
        cert = backward_certificate(p, x)
        res_err = max(res_err, np.linalg.norm((p.a + cert.e_bar) @ x - (p.b + cert.f_bar)) / np.linalg.norm(p.c, 2))
        eta = evaluate(p, x).eta
        norm_err = max(norm_err, abs(cert.frob_norm - eta) / max(eta, 1e-300))
        # a feasible competitor: the certificate plus any Z with Z (x, -1) = 0
        y = np.append(x, -1.0)
        W = rng.standard_normal((m, n + 1))
        comp = cert.matrix + W - np.outer(W @ y, y) / (y @ y)
        assert np.allclose((p.a + comp[:, :n]) @ x, p.b + comp[:, n])
        if np.linalg.norm(comp) < cert.frob_norm - 1e-12:
            beaten += 1
    ok = res_err <= 1e-12 and norm_err <= 1e-12 and beaten == 0
    report(7, ok, f"residual {res_err:.2e} ||C||, |frob - eta| {norm_err:.2e} relative, "
                  f"{beaten} of 100 competitors smaller")


def test_criterion_08_qr_update():
    rng = np.random.default_rng(8)
    worst = 0.0
    for i in range(200):
        n = int(rng.integers(1, 30))
        m = n + int(rng.integers(0, 40))
        A, u, v = rng.standard_normal((m, n)), rng.standard_normal(m), rng.standard_normal(n)
        target = A + np.outer(u, v)
        qr = qr_rank_one_update(qr_factor(A, full=bool(i % 4 == 0)), u, v)
        worst = max(worst, np.linalg.norm(target - qr.product()) / np.linalg.norm(target))
    m = 400
    flops = []
    for n in (10, 20, 40, 80):
        c = FlopCounter()
        qr_rank_one_update(qr_factor(rng.standard_normal((m, n))), rng.standard_normal(m), rng.standard_normal(n),
                           counter=c)
        flops.append(c.flops)
    ratios = [b / a for a, b in zip(flops, flops[1:])]
    ok = worst <= 1e-12 and max(ratios) <= 4.5
    report(8, ok, f"max relative reconstruction error {worst:.2e} over 200 updates; flops at m={m}, "
                  f"n=10..80: {flops}, doubling ratios {[round(r, 2) for r in ratios]}")


def test_criterion_09_jacobian():
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(10):
        m, n = int(rng.integers(3, 15)), int(rng.integers(1, 6))
        m = max(m, n)
        p = ProblemData(rng.standard_normal((m, n)), rng.standard_normal(m))
        for _ in range(20):
            x = rng.standard_normal(n)
            J = evaluate(p, x).jac
            h = 1e-6
            fd = np.column_stack([(evaluate(p, x + h * e).f - evaluate(p, x - h * e).f) / (2 * h)
                                  for e in np.eye(n)])
            worst = max(worst, np.linalg.norm(J - fd) / np.linalg.norm(J))
    report(9, worst <= 1e-6, f"max finite-difference relative error {worst:.2e} over 200 points")


def test_criterion_10_tau_bound():
    rng = np.random.default_rng(10)
    a = ProblemData(np.eye(6, 5), np.ones(6))
    max_tau2 = 0.0
    for _ in range(10_000):
        n = 5
        x = rng.standard_normal(n) * 10.0 ** rng.uniform(-3, 3)
        h = rng.standard_normal(n) * 10.0 ** rng.uniform(-3, 3)
        max_tau2 = max(max_tau2, theta_tau(evaluate(a, x), h)[1] ** 2)
    # equality claim for parallel pairs h = c x
    par_err = 0.0
    for _ in range(1000):
        x = rng.standard_normal(5)
        h = rng.uniform(-3, 3) * x
        par_err = max(par_err, abs(theta_tau(evaluate(a, x), h)[1] ** 2 - 1.0))
    bound_ok = max_tau2 <= 1 + 1e-14
    eq_ok = par_err <= 1e-12
    report(10, bound_ok and eq_ok,
           f"bound {'holds' if bound_ok else 'violated'} (max tau^2 = {max_tau2:.17g} over 10^4 pairs); "
           f"parallel equality {'holds' if eq_ok else 'fails'} (max |tau^2 - 1| = {par_err:.3f}; "
           f"tau^2 = 1 holds only for h = 0, e.g. x = 1, h = 1 gives 0.9)")
