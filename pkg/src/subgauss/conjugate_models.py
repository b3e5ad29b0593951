"""Query concentration under further conjugate models.

Counting queries about binomial, geometric, multinomial, and Poisson data
project the parameter prior (Beta, Dirichlet, or Gamma) onto [0,1]-valued
functionals: polynomials in p for the discrete-parameter models and
exponential-polynomial functionals of the rate for Poisson. The variance
proxies of these projections appear (numerically) to scale like m/(alpha+beta),
1/alpha, m/sum(alpha), and 1/beta respectively; this module computes their
raw moments exactly where closed forms exist, estimates tau^2, and reports
ratios against those conjectured scales. Nothing here proves anything: the
scales are implemented literally, with constants reported, and results are
regression evidence only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .concentration import (
    VarianceProxyEstimate,
    empirical_log_mgf,
    raw_moment_criterion,
    variance_proxy_sup,
)
from .distributions import (
    BetaParams,
    DirichletParams,
    GammaParams,
    MomentSequence,
    SeedSpec,
    beta_raw_moments,
    draw,
)

__all__ = [
    "ExactModeError",
    "PolynomialInP",
    "ConjugateModelReport",
    "MODEL_KINDS",
    "binomial_query_poly",
    "geometric_query_poly",
    "poly_raw_moments_under_beta",
    "multinomial_query_moments",
    "poisson_query_moments",
    "model_q_draws",
    "mc_moments",
    "moment_series_log_mgf",
    "conjectured_scale",
    "evaluate_model",
]

MODEL_KINDS = ("beta_binomial", "geometric", "multinomial", "poisson_gamma")

_MAX_BINOMIAL_M = 30
_MAX_GEOMETRIC_OUTCOME = 60
_MAX_POLY_WORK = 400  # j_max * degree cap for exact Beta-polynomial moments
_MC_TAIL_TOL = 1e-8


class ExactModeError(ValueError):
    """Exact mode refused: the instance exceeds the exact-arithmetic size caps."""


@dataclass(frozen=True)
class PolynomialInP:
    """Polynomial in the success probability p, coefficients by ascending degree."""

    coefficients: tuple[float, ...]

    def __post_init__(self) -> None:
        coeffs = tuple(float(c) for c in self.coefficients)
        if not coeffs:
            raise ValueError("a polynomial needs at least one coefficient")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, np.asarray(self.coefficients))

    def values_in_unit_interval(self, *, samples: int = 2001, tol: float = 1e-9) -> bool:
        """Dense-sampling check that the polynomial maps [0,1] into [0,1]."""
        values = self(np.linspace(0.0, 1.0, samples))
        return bool((values >= -tol).all() and (values <= 1.0 + tol).all())


@dataclass(frozen=True)
class ConjugateModelReport:
    model: str
    params: dict
    subset_desc: str
    tau2_est: float
    scale: float
    ratio: float
    method: str  # "exact_moments" | "monte_carlo"
    j_max_used: int
    smallest_passing_multiplier: float | None
    estimate: VarianceProxyEstimate


# ---------------------------------------------------------------------------
# Query functionals
# ---------------------------------------------------------------------------


def binomial_query_poly(m: int, subset: Iterable[int]) -> PolynomialInP:
    """Probability that an m-trial binomial count lands in ``subset``, as a polynomial.

    Expands sum_{c in S} C(m,c) p^c (1-p)^(m-c) in integer arithmetic; the
    coefficients stay exact in float64 for m <= 30, beyond which exact mode
    is refused (use Monte Carlo instead).
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    if m > _MAX_BINOMIAL_M:
        raise ExactModeError(
            f"m={m} exceeds the exact-mode cap {_MAX_BINOMIAL_M}; use Monte Carlo"
        )
    counts = sorted(set(int(c) for c in subset))
    if any(c < 0 or c > m for c in counts):
        raise ValueError("subset entries must lie in 0..m")
    coeffs = [0] * (m + 1)
    for c in counts:
        base = math.comb(m, c)
        for i in range(m - c + 1):  # expand (1-p)^(m-c)
            coeffs[c + i] += base * ((-1) ** i) * math.comb(m - c, i)
    return PolynomialInP(tuple(float(v) for v in coeffs))


def geometric_query_poly(subset: Iterable[int]) -> PolynomialInP:
    """Probability that a geometric failure count lands in ``subset``:
    sum_{c in S} p (1-p)^c expanded into monomials."""
    counts = sorted(set(int(c) for c in subset))
    if not counts or counts[0] < 0:
        raise ValueError("subset must be a nonempty set of nonnegative integers")
    if counts[-1] > _MAX_GEOMETRIC_OUTCOME:
        raise ExactModeError(
            f"max(subset)={counts[-1]} exceeds the exact-mode cap "
            f"{_MAX_GEOMETRIC_OUTCOME}; use Monte Carlo"
        )
    coeffs = [0] * (counts[-1] + 2)
    for c in counts:
        for i in range(c + 1):  # p * (1-p)^c
            coeffs[1 + i] += ((-1) ** i) * math.comb(c, i)
    return PolynomialInP(tuple(float(v) for v in coeffs))


# ---------------------------------------------------------------------------
# Exact moments
# ---------------------------------------------------------------------------


def _int_convolve(a: list[int], b: list[int]) -> list[int]:
    out = [0] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        if ca:
            for j, cb in enumerate(b):
                out[i + j] += ca * cb
    return out


def poly_raw_moments_under_beta(
    poly: PolynomialInP, prior: BetaParams, j_max: int
) -> MomentSequence:
    """E[Q(p)^j] for j = 0..j_max with p ~ Beta(prior), exact up to float64.

    Q^j is built by repeated coefficient convolution and integrated term by
    term against the Beta raw moments. Integer coefficients (the query
    constructors always produce them) are convolved in exact integer
    arithmetic and paired with exact rational moment ratios, because the
    float sum cancels catastrophically once the coefficients reach ~1e12;
    only the final moment is rounded.
    """
    if j_max < 0:
        raise ValueError("j_max must be nonnegative")
    if j_max * poly.degree > _MAX_POLY_WORK:
        raise ExactModeError(
            f"j_max*degree = {j_max * poly.degree} exceeds the exact-mode cap "
            f"{_MAX_POLY_WORK}; lower j_max or use Monte Carlo"
        )
    max_degree = max(j_max * poly.degree, 1)
    if all(float(c).is_integer() for c in poly.coefficients):
        alpha, total = Fraction(prior.alpha), Fraction(prior.alpha) + Fraction(prior.beta)
        ratios = [Fraction(1)]
        for d in range(max_degree):
            ratios.append(ratios[-1] * (alpha + d) / (total + d))
        base = [int(c) for c in poly.coefficients]
        values = [1.0]
        power = [1]
        for _ in range(j_max):
            power = _int_convolve(power, base)
            values.append(float(sum(c * ratios[d] for d, c in enumerate(power) if c)))
        return MomentSequence(tuple(values))

    base = np.asarray(poly.coefficients)
    table = beta_raw_moments(prior, max_degree)
    values = [1.0]
    power = np.ones(1)
    for _ in range(j_max):
        power = np.convolve(power, base)
        values.append(math.fsum(c * m for c, m in zip(power, table)))
    return MomentSequence(tuple(values))


def _check_count_vectors(subset, m: int, k: int) -> list[tuple[int, ...]]:
    vectors = sorted(set(tuple(int(v) for v in x) for x in subset))
    for x in vectors:
        if len(x) != k or any(v < 0 for v in x) or sum(x) != m:
            raise ValueError(
                f"count vector {x!r} is not a length-{k} composition of {m}"
            )
    return vectors


def multinomial_query_moments(
    m: int,
    subset: Iterable[Sequence[int]],
    prior: DirichletParams,
    j_max: int,
    *,
    mode: str = "exact",
    draws: int = 10**6,
    seed: SeedSpec | None = None,
) -> MomentSequence | tuple[MomentSequence, tuple[float, ...]]:
    """E[Q^j] for Q the prior-projected probability of a multinomial count set.

    Q(p) = sum_{x in S} m!/(x_1! ... x_k!) p_1^x_1 ... p_k^x_k. Exact mode
    expands Q^j into monomials (integer coefficients, so no cancellation) and
    applies E[prod p_i^d_i] = prod (alpha_i)_{d_i} / (A)_{sum d}; it is only
    offered for k <= 4, m <= 5, j_max <= 8. Monte Carlo mode returns
    (moments, standard errors) instead.
    """
    if j_max < 0:
        raise ValueError("j_max must be nonnegative")
    k = prior.k
    vectors = _check_count_vectors(subset, m, k)
    if not vectors:
        raise ValueError("subset must be nonempty")
    if mode == "monte_carlo":
        q = model_q_draws(
            "multinomial", prior, vectors, m=m, draws=draws, seed=seed or SeedSpec(0)
        )
        return mc_moments(q, j_max)
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")
    if k > 4 or m > 5 or j_max > 8:
        raise ExactModeError(
            "exact mode needs k <= 4, m <= 5, j_max <= 8; use mode='monte_carlo'"
        )

    base: dict[tuple[int, ...], int] = {}
    m_fact = math.factorial(m)
    for x in vectors:
        coeff = m_fact
        for v in x:
            coeff //= math.factorial(v)
        base[x] = base.get(x, 0) + coeff

    alphas = np.asarray(prior.alphas)
    a_total = prior.total
    log_alpha = gammaln(alphas)

    def monomial_expectation(exponents: tuple[int, ...]) -> float:
        d_sum = sum(exponents)
        log_num = sum(
            gammaln(alphas[i] + e) - log_alpha[i] for i, e in enumerate(exponents)
        )
        return math.exp(log_num - (gammaln(a_total + d_sum) - gammaln(a_total)))

    values = [1.0]
    power: dict[tuple[int, ...], int] = {tuple([0] * k): 1}
    for _ in range(j_max):
        nxt: dict[tuple[int, ...], int] = {}
        for expo_a, ca in power.items():
            for expo_b, cb in base.items():
                key = tuple(a + b for a, b in zip(expo_a, expo_b))
                nxt[key] = nxt.get(key, 0) + ca * cb
        power = nxt
        values.append(
            math.fsum(c * monomial_expectation(e) for e, c in power.items())
        )
    return MomentSequence(tuple(values))


def _log_poly_convolve(c1: np.ndarray, c2: np.ndarray) -> np.ndarray:
    """Convolution of polynomials given as log-coefficients (all terms >= 0)."""
    n = len(c1) + len(c2) - 1
    out = np.full(n, -np.inf)
    for s in range(n):
        lo = max(0, s - len(c2) + 1)
        hi = min(len(c1) - 1, s)
        chunk = c1[lo : hi + 1] + c2[s - hi : s - lo + 1][::-1]
        out[s] = logsumexp(chunk)
    return out


def poisson_query_moments(
    subset: Iterable[int], prior: GammaParams, j_max: int
) -> MomentSequence:
    """E[Q^j] for Q(rate) = sum_{c in S} rate^c e^-rate / c!, rate ~ Gamma(prior).

    Q^j = P_j(rate) e^{-j rate} with P_j a positive-coefficient polynomial, and
    E[rate^s e^{-j rate}] = beta^alpha Gamma(alpha+s) / (Gamma(alpha) (beta+j)^(alpha+s)).
    Everything is evaluated in log space, so no intermediate overflows.
    """
    counts = sorted(set(int(c) for c in subset))
    if not counts or counts[0] < 0:
        raise ValueError("subset must be a nonempty set of nonnegative integers")
    if counts[-1] > _MAX_GEOMETRIC_OUTCOME:
        raise ExactModeError(
            f"max(subset)={counts[-1]} exceeds the exact-mode cap "
            f"{_MAX_GEOMETRIC_OUTCOME}"
        )
    if not 0 <= j_max <= 20:
        raise ExactModeError("exact Poisson moments need 0 <= j_max <= 20")

    log_base = np.full(counts[-1] + 1, -np.inf)
    for c in counts:
        log_base[c] = -gammaln(c + 1.0)

    a, b = prior.alpha, prior.beta
    values = [1.0]
    log_power = np.zeros(1)
    for j in range(1, j_max + 1):
        log_power = _log_poly_convolve(log_power, log_base)
        s = np.arange(len(log_power), dtype=float)
        log_expect = (
            a * math.log(b) + gammaln(a + s) - gammaln(a) - (a + s) * np.log(b + j)
        )
        values.append(float(np.exp(logsumexp(log_power + log_expect))))
    return MomentSequence(tuple(values))


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------


def model_q_draws(
    model: str,
    prior: BetaParams | DirichletParams | GammaParams,
    subset,
    *,
    m: int | None = None,
    draws: int = 10**6,
    seed: SeedSpec = SeedSpec(0),
    chunk: int = 200_000,
) -> np.ndarray:
    """Monte Carlo draws of the query functional Q under the parameter prior."""
    rng = seed.generator()
    out = np.empty(draws)
    if model == "beta_binomial":
        poly = binomial_query_poly(m, subset)
        p = draw(prior, rng, draws)
        out[:] = poly(p)
    elif model == "geometric":
        poly = geometric_query_poly(subset)
        p = draw(prior, rng, draws)
        out[:] = poly(p)
    elif model == "multinomial":
        vectors = _check_count_vectors(subset, m, prior.k)
        x = np.asarray(vectors, dtype=float)  # (s, k)
        log_coeff = gammaln(m + 1.0) - gammaln(x + 1.0).sum(axis=1)
        pos = 0
        while pos < draws:
            step = min(chunk, draws - pos)
            p = draw(prior, rng, step)
            log_terms = np.log(p) @ x.T + log_coeff  # (step, s)
            out[pos : pos + step] = np.exp(log_terms).sum(axis=1)
            pos += step
    elif model == "poisson_gamma":
        counts = np.asarray(sorted(set(int(c) for c in subset)), dtype=float)
        log_fact = gammaln(counts + 1.0)
        pos = 0
        while pos < draws:
            step = min(chunk, draws - pos)
            rate = draw(prior, rng, step)
            log_terms = (
                np.log(rate)[:, None] * counts[None, :]
                - rate[:, None]
                - log_fact[None, :]
            )
            out[pos : pos + step] = np.exp(log_terms).sum(axis=1)
            pos += step
    else:
        raise ValueError(f"unknown model {model!r}")
    return out


def mc_moments(q_draws: np.ndarray, j_max: int) -> tuple[MomentSequence, tuple[float, ...]]:
    """Empirical raw moments of Q with per-moment standard errors."""
    q = np.asarray(q_draws, dtype=float)
    n = q.size
    values = [1.0]
    errors = [0.0]
    power = np.ones_like(q)
    for _ in range(j_max):
        power = power * q
        values.append(float(power.mean()))
        errors.append(float(power.std(ddof=1) / math.sqrt(n)))
    return MomentSequence(tuple(values)), tuple(errors)


# ---------------------------------------------------------------------------
# tau^2 from finitely many moments
# ---------------------------------------------------------------------------


def _series_tail(lam: float, j_from: int) -> float:
    """sum_{j >= j_from} lam^j / j! for lam > 0."""
    term = math.exp(j_from * math.log(lam) - gammaln(j_from + 1.0))
    total = term
    j = j_from
    while term > 1e-25 * total:
        j += 1
        term *= lam / j
        total += term
    return total


def moment_series_log_mgf(moments: MomentSequence) -> tuple:
    """(log_mgf, lambda_cap) from a truncated moment sequence of a [0,1] variable.

    The MGF series is summed through j_max; since 0 <= Q <= 1, the discarded
    tail is at most sum_{j > j_max} lam^j/j!, and lambda_cap is chosen so that
    tail < 1e-8. The truncation error is therefore explicit rather than
    silent, and it shrinks like lam^(j_max+1) below the cap.
    """
    values = moments.as_array()
    j = np.arange(values.size)  # integer exponents: lam ** j must allow lam < 0
    inv_fact = np.exp(-gammaln(j + 1.0))
    j_max = moments.j_max
    if j_max < 4:
        raise ValueError("need at least 4 moments for a usable series")

    lo, hi = 1e-2, float(j_max + 1)
    if _series_tail(hi, j_max + 1) < _MC_TAIL_TOL:
        cap = hi
    else:
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if _series_tail(mid, j_max + 1) < _MC_TAIL_TOL:
                lo = mid
            else:
                hi = mid
        cap = lo

    def log_mgf(lam: float) -> float:
        powers = lam ** j
        return math.log(math.fsum(values * inv_fact * powers))

    return log_mgf, cap


def conjectured_scale(
    model: str, prior: BetaParams | DirichletParams | GammaParams, m: int | None
) -> float:
    """The conjectured variance-proxy scale, implemented literally (constants reported separately)."""
    if model == "beta_binomial":
        return m / prior.total
    if model == "geometric":
        return 1.0 / prior.alpha
    if model == "multinomial":
        return m / prior.total
    if model == "poisson_gamma":
        return 1.0 / prior.beta
    raise ValueError(f"unknown model {model!r}")


def evaluate_model(
    model: str,
    prior: BetaParams | DirichletParams | GammaParams,
    subset,
    *,
    m: int | None = None,
    method: str = "exact_moments",
    j_max: int = 16,
    draws: int = 10**6,
    seed: SeedSpec | None = None,
    criterion_multipliers: tuple[float, ...] = (0.25, 0.5, 1.0, 2.0),
) -> ConjugateModelReport:
    """Estimate tau^2 of a projected conjugate-model query and compare to its scale.

    Exact mode builds the raw moments in closed form, converts them to a
    truncated MGF series with an explicit tail-controlled lambda range, and
    runs the grid supremum. Monte Carlo mode estimates the MGF empirically
    with the |lambda| cap keeping sampling error controlled. The raw-moment
    criterion is additionally run at sigma^2 = c*scale for each multiplier,
    reporting the smallest passing c (the conjectured scales hide constants).
    """
    if model not in MODEL_KINDS:
        raise ValueError(f"unknown model {model!r}")
    if model in ("beta_binomial", "multinomial") and (m is None or m < 1):
        raise ValueError(f"model {model!r} needs a positive trial count m")
    scale = conjectured_scale(model, prior, m)

    if method == "exact_moments":
        if model == "beta_binomial":
            poly = binomial_query_poly(m, subset)
            if not poly.values_in_unit_interval():
                raise ValueError("query polynomial leaves [0, 1]; invalid subset")
            j_use = min(j_max, _MAX_POLY_WORK // max(poly.degree, 1))
            moments = poly_raw_moments_under_beta(poly, prior, j_use)
        elif model == "geometric":
            poly = geometric_query_poly(subset)
            if not poly.values_in_unit_interval():
                raise ValueError("query polynomial leaves [0, 1]; invalid subset")
            j_use = min(j_max, _MAX_POLY_WORK // max(poly.degree, 1))
            moments = poly_raw_moments_under_beta(poly, prior, j_use)
        elif model == "multinomial":
            j_use = min(j_max, 8)
            moments = multinomial_query_moments(m, subset, prior, j_use)
        else:
            j_use = min(j_max, 20)
            moments = poisson_query_moments(subset, prior, j_use)
        log_mgf, cap = moment_series_log_mgf(moments)
        estimate = variance_proxy_sup(
            log_mgf, moments[1], cap, method="exact_mgf"
        )
    elif method == "monte_carlo":
        q = model_q_draws(
            model, prior, subset, m=m, draws=draws, seed=seed or SeedSpec(0)
        )
        j_use = j_max
        moments, _ = mc_moments(q, j_use)
        log_mgf, cap = empirical_log_mgf(q)
        estimate = variance_proxy_sup(
            log_mgf, float(q.mean()), cap, method="empirical_mgf"
        )
    else:
        raise ValueError(f"unknown method {method!r}")

    smallest = None
    if all(v > 0 for v in moments.values):
        for c in sorted(criterion_multipliers):
            if raw_moment_criterion(moments, c * scale).passed:
                smallest = c
                break

    subset_desc = ",".join(str(s) for s in sorted(subset))
    return ConjugateModelReport(
        model=model,
        params=prior.to_json() | ({"m": m} if m is not None else {}),
        subset_desc=subset_desc,
        tau2_est=estimate.value,
        scale=scale,
        ratio=estimate.value / scale,
        method=method,
        j_max_used=j_use,
        smallest_passing_multiplier=smallest,
        estimate=estimate,
    )
