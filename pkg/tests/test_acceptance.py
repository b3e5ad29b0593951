"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -s` to see the per-criterion lines.
Tolerances are pinned here and nowhere else; the heavy Monte Carlo pieces use
fixed seeds so the suite is deterministic.
"""

import math
import time

import numpy as np
import pytest
from scipy import special, stats

from subgauss import (
    BetaParams,
    DirichletParams,
    GammaParams,
    MomentSequence,
    SeedSpec,
    azuma_total,
    beta_mean_var,
    beta_moment_pair_bounds,
    beta_moment_sequence,
    beta_proxy_bound,
    beta_proxy_estimate,
    beta_raw_moments,
    beta_tight_proxy_bound,
    binomial_query_poly,
    chi_raw_moment,
    estimate_failure_rate,
    geometric_query_poly,
    mc_moments,
    model_q_draws,
    multinomial_query_moments,
    poisson_query_moments,
    poly_raw_moments_under_beta,
    project_to_beta,
    raw_moment_criterion,
    required_n,
    sample,
    sample_chi,
    stability_diagnostics,
    step_variance_proxy,
    termwise_mgf_comparison,
)
from subgauss.game import GameConfig
from subgauss.martingale import compositions

GRID = (0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 25.0, 50.0)


def report(criterion: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[{criterion}] {status}{suffix}")


@pytest.fixture(scope="module")
def grid_estimates():
    """tau^2 grid sweep shared by criteria 1 and 2 (the expensive part)."""
    start = time.perf_counter()
    estimates = {}
    for a in GRID:
        for b in GRID:
            p = BetaParams(a, b)
            estimates[(a, b)] = beta_proxy_estimate(p)
    return estimates, time.perf_counter() - start


def test_ac01_beta_bound_sweep(grid_estimates):
    """81 grid points: Var - 1e-6 <= tau2_est <= 1/(4(a+b)+2) * (1+1e-6), < 60 s."""
    estimates, elapsed = grid_estimates
    ok = elapsed < 60.0
    worst = ""
    for (a, b), est in estimates.items():
        p = BetaParams(a, b)
        _, var = beta_mean_var(p)
        bound = beta_proxy_bound(p)
        if not (var - 1e-6 <= est.value <= bound * (1.0 + 1e-6)):
            ok = False
            worst = f"violated at ({a},{b}): est={est.value}"
    report("AC1", ok, worst or f"{len(estimates)} points in {elapsed:.1f}s")
    assert ok


def test_ac02_beta_tight_bound_sweep(grid_estimates):
    """Same grid: tau2_est <= 1/(4(a+b+1)) * (1+1e-3) (observed-behavior lock)."""
    estimates, _ = grid_estimates
    max_ratio = 0.0
    ok = True
    for (a, b), est in estimates.items():
        ratio = est.value / beta_tight_proxy_bound(BetaParams(a, b))
        max_ratio = max(max_ratio, ratio)
        ok &= ratio <= 1.0 + 1e-3
    report("AC2", ok, f"max ratio {max_ratio:.6f}")
    assert ok


def test_ac03_moment_pair_bounds():
    """Consecutive-moment-ratio inequality: zero violations, j <= 100, tol 1e-12."""
    violations = 0
    for a in GRID:
        for b in GRID:
            rows = beta_moment_pair_bounds(BetaParams(a, b), 100, strict=False)
            violations += sum(1 for _, lhs, rhs in rows if lhs > rhs + 1e-12)
    report("AC3", violations == 0, f"{violations} violations")
    assert violations == 0


def test_ac04_raw_moment_criterion_grid():
    """Raw-moment criterion at sigma^2 = 1/(2(a+b+1)) passes with J_max = 200."""
    ok = True
    for a in GRID:
        for b in GRID:
            p = BetaParams(a, b)
            seq = beta_moment_sequence(p, 200)
            ok &= raw_moment_criterion(seq, 1.0 / (2.0 * (p.total + 1.0))).passed
    report("AC4", ok)
    assert ok


def test_ac05_termwise_counterexample():
    """(1,2) at sigma^2=1/16: lambda^4 coefficients 1/360 > 1363/497664, 1e-12 rel."""
    rows = termwise_mgf_comparison(BetaParams(1, 2), 1.0 / 16.0, 6)
    _, lhs, rhs = rows[4]
    lhs_ok = abs(lhs - 1.0 / 360.0) <= 1e-12 * (1.0 / 360.0)
    rhs_ok = abs(rhs - 1363.0 / 497664.0) <= 1e-12 * (1363.0 / 497664.0)
    ok = lhs_ok and rhs_ok and lhs > rhs
    report("AC5", ok, f"lhs={lhs:.12e} rhs={rhs:.12e}")
    assert ok


def test_ac06_azuma_machinery():
    """Telescoped totals within [tight lower, closed bound]; step proxies bounded; < 30 s."""
    start = time.perf_counter()
    ok = True
    for s in (1.0, 2.0, 10.0):
        totals = azuma_total(BetaParams(s / 2.0, s / 2.0), 10**6)
        grand = totals.partial_sum + totals.tail_remainder
        ok &= grand <= 1.0 / (4.0 * s + 2.0) + 1e-12
        ok &= grand >= 1.0 / (4.0 * s + 2.0 + 1.0 / (3.0 * s)) - 1e-9
    rng = SeedSpec(606).generator()
    for _ in range(1000):
        a, b = np.exp(rng.uniform(math.log(1e-2), math.log(1e3), size=2))
        p = BetaParams(float(a), float(b))
        ok &= step_variance_proxy(p) <= 0.25 / (p.total + 1.0) ** 2 + 1e-15
    elapsed = time.perf_counter() - start
    ok &= elapsed < 30.0
    report("AC6", ok, f"{elapsed:.1f}s")
    assert ok


def test_ac07_dirichlet_projection_ks():
    """20 random (Dirichlet, subset) pairs, k <= 8: KS below the 1e-3 critical value."""
    n_draws = 10**5
    critical = float(special.kolmogi(1e-3)) / math.sqrt(n_draws)
    rng = SeedSpec(707).generator()
    ok = True
    worst = 0.0
    for pair in range(20):
        k = int(rng.integers(2, 9))
        alphas = tuple(np.round(rng.uniform(0.2, 8.0, size=k), 3))
        while True:
            mask = rng.random(k) < 0.5
            if mask.any() and not mask.all():
                break
        subset = tuple(int(i) for i in np.nonzero(mask)[0])
        d = DirichletParams(alphas)
        projected = project_to_beta(d, subset)
        draws = sample(d, SeedSpec(707, pair + 1), n_draws)[:, list(subset)].sum(axis=1)
        ks = float(
            stats.kstest(draws, stats.beta(projected.alpha, projected.beta).cdf).statistic
        )
        worst = max(worst, ks)
        ok &= ks < critical
    report("AC7", ok, f"worst KS {worst:.5f} < critical {critical:.5f}")
    assert ok


def test_ac08_game_guarantee():
    """k=10 uniform prior, eps=0.1, delta=0.05, q=1000, n=required_n: Wilson
    lower bound of the failure rate <= delta for both adaptive analysts; < 5 min."""
    start = time.perf_counter()
    prior = DirichletParams((1.0,) * 10)
    n = required_n(0.1, 0.05, 1000, prior.total)
    ok = n == 520
    details = [f"n={n}"]
    for analyst in ("adaptive_correlator", "variance_maximizer"):
        config = GameConfig(
            k=10,
            prior=prior,
            n=n,
            q=1000,
            epsilon=0.1,
            delta=0.05,
            analyst=analyst,
            curator="posterior_mean",
        )
        est = estimate_failure_rate(config, 2000, SeedSpec(808))
        ok &= est.wilson_low <= 0.05
        details.append(f"{analyst}: rate={est.rate:.4f} low={est.wilson_low:.4f}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 300.0
    report("AC8", ok, "; ".join(details) + f"; {elapsed:.0f}s")
    assert ok


def test_ac09_chi_checks():
    """k=1..20: moment recurrence to 1e-12, E[X]^2 >= k-1, unit-sigma criterion,
    and empirical upper tails below exp(-eps^2/2) + 4 SE at 1e6 samples."""
    ok = True
    n_draws = 10**6
    for k in range(1, 21):
        moments = [chi_raw_moment(k, j) for j in range(103)]
        for j in range(101):
            if abs(moments[j + 2] - (k + j) * moments[j]) > 1e-12 * moments[j + 2]:
                ok = False
        mean = moments[1]
        ok &= mean * mean >= k - 1
        ok &= raw_moment_criterion(MomentSequence(tuple(moments)), 1.0).passed
        draws = sample_chi(k, SeedSpec(909, k), n_draws)
        for eps in (0.5, 1.0, 2.0):
            freq = float((draws - mean >= eps).mean())
            se = math.sqrt(max(freq * (1.0 - freq), 1.0 / n_draws) / n_draws)
            ok &= freq <= math.exp(-eps * eps / 2.0) + 4.0 * se
    report("AC9", ok)
    assert ok


def test_ac10_conjugate_model_consistency():
    """Exact-mode instances: Monte Carlo moments within 3 SE at 1e6 draws;
    model-reduction identities to 1e-10."""
    draws = 10**6
    j_max = 6
    ok = True
    failures = []

    instances = [
        ("beta_binomial", BetaParams(1.0, 1.0), {1}, 2),
        ("beta_binomial", BetaParams(1.0, 2.0), {0, 1}, 5),
        ("beta_binomial", BetaParams(0.5, 0.5), {3}, 3),
        ("beta_binomial", BetaParams(2.0, 5.0), {2, 3, 5}, 5),
        ("geometric", BetaParams(2.0, 1.0), {0}, None),
        ("geometric", BetaParams(1.0, 1.0), {0, 1, 2, 5}, None),
        ("multinomial", DirichletParams((1.0, 1.0, 1.0)), {(1, 1, 1), (3, 0, 0)}, 3),
        ("multinomial", DirichletParams((2.0, 3.0)), {(1, 1)}, 2),
        ("multinomial", DirichletParams((1.0, 2.0, 3.0)), {(0, 1, 0)}, 1),
        ("poisson_gamma", GammaParams(1.0, 1.0), {0}, None),
        ("poisson_gamma", GammaParams(2.0, 5.0), {0, 1, 5}, None),
        ("poisson_gamma", GammaParams(0.5, 2.0), {3}, None),
    ]
    for idx, (model, prior, subset, m) in enumerate(instances):
        if model == "beta_binomial":
            exact = poly_raw_moments_under_beta(binomial_query_poly(m, subset), prior, j_max)
        elif model == "geometric":
            exact = poly_raw_moments_under_beta(geometric_query_poly(subset), prior, j_max)
        elif model == "multinomial":
            exact = multinomial_query_moments(m, subset, prior, j_max)
        else:
            exact = poisson_query_moments(subset, prior, j_max)
        q = model_q_draws(model, prior, subset, m=m, draws=draws, seed=SeedSpec(1010, idx))
        mc, ses = mc_moments(q, j_max)
        for j in range(1, j_max + 1):
            if abs(exact[j] - mc[j]) > 3.0 * ses[j]:
                ok = False
                failures.append(f"{model}#{idx} j={j}")

    # reduction identities
    beta_direct = beta_raw_moments(BetaParams(1.0, 2.0), j_max)
    via_binomial = poly_raw_moments_under_beta(
        binomial_query_poly(1, {1}), BetaParams(1.0, 2.0), j_max
    ).as_array()
    via_geometric = poly_raw_moments_under_beta(
        geometric_query_poly({0}), BetaParams(1.0, 2.0), j_max
    ).as_array()
    red1 = float(np.abs(via_binomial - beta_direct).max())
    red2 = float(np.abs(via_geometric - beta_direct).max())
    via_multinomial = multinomial_query_moments(
        2, [(0, 2), (1, 1)], DirichletParams((1.5, 2.5)), j_max
    ).as_array()
    via_poly = poly_raw_moments_under_beta(
        binomial_query_poly(2, {0, 1}), BetaParams(1.5, 2.5), j_max
    ).as_array()
    red3 = float(np.abs(via_multinomial - via_poly).max())
    reductions_ok = max(red1, red2, red3) <= 1e-10
    ok &= reductions_ok

    detail = f"max reduction defect {max(red1, red2, red3):.2e}"
    if failures:
        detail += "; MC misses: " + ",".join(failures)
    report("AC10", ok, detail)
    assert ok


def test_ac11_stability_exhaustive():
    """Posterior-mean stability bounds verified exhaustively: n <= 12, k <= 4,
    uniform priors at 1.0 and 0.5, every proper nonempty counting query."""
    ok = True
    checked = 0
    for k in (2, 3, 4):
        subsets = [
            frozenset(i for i in range(k) if mask >> i & 1)
            for mask in range(1, 2**k - 1)
        ]
        for level in (1.0, 0.5):
            prior = DirichletParams((level,) * k)
            for n in range(1, 13):
                for subset in subsets:
                    rep = stability_diagnostics(prior, n, subset)
                    ok &= rep.mode == "exhaustive"
                    ok &= rep.add_one_ok and rep.replace_one_ok and rep.lipschitz_ok
                    ok &= rep.lipschitz_slope == pytest.approx(n / (prior.total + n))
                    checked += 1
    report("AC11", ok, f"{checked} (prior, n, query) cells")
    assert ok
