"""Hypothesis tests on estimated noise parameters.

* ``scaling_law_test`` -- eigenvalues of a channel whose error locations are
  uncorrelated follow a pure power law in the weight; excess chi-square of
  the residuals flags location correlations.
* ``markovianity_test`` -- memoryless noise composes as elementwise powers of
  the eigenvalues across time steps; deviations flag memory effects.
* ``correlation_scale`` -- smallest cluster size b beyond which the per-pattern
  error rates show no excess over a geometric envelope extrapolated from
  weights <= b.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.stats import chi2

from .channels import WeightDistribution
from .estimator import ParityEstimate

EXACT_RESIDUAL_ATOL = 1e-12
DEFAULT_CONFIDENCE = 0.95
DEFAULT_SCALE_TOLERANCE = 3.0


@dataclass(frozen=True)
class DiagnosticVerdict:
    test: str
    statistic: float
    threshold: float
    passed: bool
    details: dict

    def __post_init__(self):
        if self.passed != (self.statistic <= self.threshold):
            raise ValueError("verdict flag inconsistent with statistic")


def _residual(diff: float, se: float) -> float:
    """Standardised residual; exact inputs (se == 0) tolerate only float dust."""
    if se > 0:
        return diff / se
    return 0.0 if abs(diff) <= EXACT_RESIDUAL_ATOL else np.inf


def _one_sided_excess(diff: float, se: float) -> float:
    """Signed excess in standard errors; only positive excess can fail."""
    if se > 0:
        return diff / se
    return 0.0 if diff <= EXACT_RESIDUAL_ATOL else np.inf


def scaling_law_test(
    est: ParityEstimate, confidence: float = DEFAULT_CONFIDENCE
) -> DiagnosticVerdict:
    """Chi-square test of the power-law eigenvalue decay implied by
    location-uncorrelated noise."""
    n = est.n
    if n < 2:
        raise ValueError("needs at least two qubits")
    c1 = est.c_hat[1]
    residuals = {}
    stat = 0.0
    for w in range(2, n + 1):
        r = _residual(est.c_hat[w] - c1**w, est.stderr[w])
        residuals[w] = float(r)
        stat += float(r) ** 2
    threshold = float(chi2.ppf(confidence, n - 1))
    return DiagnosticVerdict(
        test="scaling",
        statistic=float(stat),
        threshold=threshold,
        passed=bool(stat <= threshold),
        details={"residuals": residuals, "c1": float(c1), "confidence": confidence},
    )


def markovianity_test(
    c_tau: ParityEstimate,
    c_mtau: ParityEstimate,
    m: int,
    confidence: float = DEFAULT_CONFIDENCE,
) -> DiagnosticVerdict:
    """Chi-square test of elementwise-power composition across time steps.

    Errors on the m-th power of the single-step estimate are propagated to
    first order.
    """
    if c_tau.n != c_mtau.n:
        raise ValueError("register sizes differ")
    if m < 1:
        raise ValueError("m must be >= 1")
    n = c_tau.n
    residuals = {}
    stat = 0.0
    for w in range(1, n + 1):
        diff = c_mtau.c_hat[w] - c_tau.c_hat[w] ** m
        se = float(
            np.hypot(c_mtau.stderr[w], m * abs(c_tau.c_hat[w]) ** (m - 1) * c_tau.stderr[w])
        )
        r = _residual(float(diff), se)
        residuals[w] = float(r)
        stat += float(r) ** 2
    threshold = float(chi2.ppf(confidence, n))
    return DiagnosticVerdict(
        test="markov",
        statistic=float(stat),
        threshold=threshold,
        passed=bool(stat <= threshold),
        details={"residuals": residuals, "m": m, "confidence": confidence},
    )


def correlation_scale(
    p: WeightDistribution,
    stderr,
    tolerance: float = DEFAULT_SCALE_TOLERANCE,
) -> DiagnosticVerdict:
    """Smallest scale b whose geometric rate envelope covers all higher weights.

    The per-pattern rate at weight w is ``r_w = p_w / C(n, w)``.  For a
    candidate scale b the envelope extends r geometrically beyond b with the
    last observed ratio ``r_b / r_{b-1}`` (ratio 1 when the base rate
    vanishes); weight w > b is consistent when its rate does not exceed the
    envelope by more than ``tolerance`` standard errors.  Independent noise is
    ultra-log-concave in w, so it passes at b = 1; k-qubit correlated clusters
    produce rate excess up to w = k and push b there.  b = 0 means no errors
    at all; b = n means no scale separates correlated from independent noise.
    """
    n = p.n
    vec = np.asarray(p.p, dtype=float)
    se = np.asarray(stderr, dtype=float)
    if se.shape != vec.shape:
        raise ValueError("stderr length does not match p")
    rates = np.array([max(vec[w], 0.0) / comb(n, w) for w in range(n + 1)])
    rate_se = np.array([max(se[w], 0.0) / comb(n, w) for w in range(n + 1)])

    chosen_b = n
    excess: dict[int, float] = {}
    for b in range(0, n + 1):
        ok = True
        trial_excess: dict[int, float] = {}
        if b == 0:
            for w in range(1, n + 1):
                z = _one_sided_excess(float(vec[w]), float(se[w]))
                trial_excess[w] = float(z)
                if z > tolerance:
                    ok = False
        else:
            ratio = rates[b] / rates[b - 1] if rates[b - 1] > 0 else 1.0
            env = rates[b]
            for w in range(b + 1, n + 1):
                env *= ratio
                z = _one_sided_excess(float(rates[w] - env), float(rate_se[w]))
                trial_excess[w] = float(z)
                if z > tolerance:
                    ok = False
        if ok:
            chosen_b = b
            excess = trial_excess
            break
        excess = trial_excess
    stat = max(excess.values(), default=0.0)
    return DiagnosticVerdict(
        test="scale_b",
        statistic=float(min(stat, np.finfo(float).max)),
        threshold=float(tolerance),
        passed=bool(stat <= tolerance),
        details={"b": int(chosen_b), "excess": excess, "tolerance": tolerance},
    )
