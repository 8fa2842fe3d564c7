"""Statistical recovery of eigenvalues and weight probabilities from trials.

``estimate_c`` turns trial records into eigenvalue estimates via subset
parities.  For moderate register sizes the average parity over *all*
C(n, w') subsets of an outcome string depends only on the string's Hamming
weight h, through the Krawtchouk sum

    sum over j of (-1)^j C(h, j) C(n - h, w' - j),

so the exact all-subsets average costs O(1) per trial.  For larger registers
a fixed number of subsets is sampled per trial instead.  Standard errors are
always empirical over trials, which absorbs the correlations introduced by
reusing one outcome across subsets.

``linear_invert`` applies the exact inverse weight-transfer matrix to the
estimated eigenvalues; ``mle_fit`` maximises the per-weight Bernoulli parity
likelihood over the probability simplex instead, which keeps estimates
physical near boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Sequence

import numpy as np
from scipy.stats import chi2

from ._rng import batch_next_f64, batch_seeds
from .channels import WeightDistribution
from .protocol import TrialSet
from .weightspace import omega, omega_inv

DEFAULT_RATIO_FLOOR = 1e-2
ALL_SUBSETS_MAX_N = 12
CONTOUR_LEVELS = (0.68, 0.95, 0.99)
_MLE_GRAD_TOL = 1e-8
_MLE_MAX_ITER = 10_000


@dataclass(frozen=True)
class SubsetPolicy:
    """How subset parities are accumulated per trial.

    ``auto`` uses every subset exactly (Krawtchouk closed form) up to
    ALL_SUBSETS_MAX_N qubits and falls back to sampling ``max_subsets``
    subsets per trial beyond that.
    """

    kind: str = "auto"
    max_subsets: int = 64
    seed: int = 0

    def resolve(self, n: int) -> str:
        if self.kind == "auto":
            return "all" if n <= ALL_SUBSETS_MAX_N else "sampled"
        if self.kind in ("all", "sampled"):
            return self.kind
        raise ValueError(f"unknown subset policy {self.kind!r}")


@dataclass(frozen=True)
class ParityEstimate:
    """Eigenvalue estimates with bookkeeping for the likelihood fit."""

    n: int
    c_hat: np.ndarray
    stderr: np.ndarray
    even_counts: np.ndarray  # per w': even-parity subset evaluations
    totals: np.ndarray  # per w': total subset evaluations
    normalized: bool = False
    unusable: tuple[int, ...] = ()

    def __post_init__(self):
        c = np.asarray(self.c_hat, dtype=float)
        if c[0] != 1.0:
            raise ValueError("c_hat[0] must be exactly 1")
        if np.any(np.asarray(self.stderr)[~np.isnan(c)] < 0):
            raise ValueError("stderr must be nonnegative")


def krawtchouk_table(n: int) -> np.ndarray:
    """Entry (w, h): sum over all w-subsets of the parity sign of an n-bit
    string with Hamming weight h."""
    table = np.zeros((n + 1, n + 1))
    for w in range(n + 1):
        for h in range(n + 1):
            table[w, h] = sum(
                (-1) ** j * comb(h, j) * comb(n - h, w - j)
                for j in range(max(0, w - (n - h)), min(w, h) + 1)
            )
    return table


def _standard_parity_values(
    trials: TrialSet, policy: SubsetPolicy
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(values[w', t], even_counts[w'], totals[w']) for a standard trial set."""
    n = trials.n
    k = trials.trials
    mode = policy.resolve(n)
    values = np.zeros((n + 1, k))
    values[0] = 1.0
    evens = np.zeros(n + 1)
    totals = np.zeros(n + 1)
    evens[0] = totals[0] = float(k)

    if mode == "all":
        h = trials.outcomes.sum(axis=1, dtype=np.int64)
        kraw = krawtchouk_table(n)
        for w in range(1, n + 1):
            n_subsets = comb(n, w)
            signed = kraw[w, h]
            values[w] = signed / n_subsets
            evens[w] = float((signed + n_subsets).sum() / 2.0)
            totals[w] = float(k * n_subsets)
        return values, evens, totals

    # Sampled policy: per trial and weight, average the parity of
    # ``min(C(n, w), max_subsets)`` distinct subsets drawn without replacement
    # (Floyd's sampler).  All trials advance their streams in lockstep, so the
    # result is identical to a per-trial loop in the same draw order.
    m = policy.max_subsets
    bits = trials.outcomes.astype(bool)
    rows = np.arange(k)
    states = batch_seeds(policy.seed, trials.trial_indices)
    for w in range(1, n + 1):
        n_subsets = min(comb(n, w), m)
        totals[w] = float(k * n_subsets)
        acc = np.zeros(k)
        for _ in range(n_subsets):
            chosen = np.zeros((k, n), dtype=bool)
            for upper in range(n - w, n):
                site = (batch_next_f64(states) * (upper + 1)).astype(np.int64)
                taken = chosen[rows, site]
                chosen[rows, np.where(taken, upper, site)] = True
            parity = (chosen & bits).sum(axis=1) & 1
            sign = np.where(parity, -1.0, 1.0)
            acc += sign
            evens[w] += float((sign > 0).sum())
        values[w] = acc / n_subsets
    return values, evens, totals


def estimate_c(
    trials: TrialSet | Sequence[TrialSet], subset_policy: SubsetPolicy | None = None
) -> ParityEstimate:
    """Estimate the eigenvalue vector from standard or ensemble trials.

    Standard sets yield all n+1 entries from subset parities.  Ensemble sets
    (one per input weight) yield the entries their records cover; missing
    entries are NaN with zero counts.
    """
    policy = subset_policy or SubsetPolicy()
    sets = [trials] if isinstance(trials, TrialSet) else list(trials)
    if not sets or any(s.trials == 0 for s in sets):
        raise ValueError("empty record set")
    variants = {s.variant for s in sets}
    if len(variants) > 1:
        raise ValueError(f"mixed protocol variants: {sorted(variants)}")
    n = sets[0].n
    if any(s.n != n for s in sets):
        raise ValueError("mixed register sizes")
    variant = variants.pop()

    c_hat = np.full(n + 1, np.nan)
    stderr = np.full(n + 1, np.nan)
    evens = np.zeros(n + 1)
    totals = np.zeros(n + 1)
    c_hat[0], stderr[0] = 1.0, 0.0

    if variant == "standard":
        if len(sets) > 1:
            raise ValueError("pass a single standard trial set")
        values, evens, totals = _standard_parity_values(sets[0], policy)
        k = sets[0].trials
        for w in range(1, n + 1):
            c_hat[w] = values[w].mean()
            stderr[w] = values[w].std(ddof=1) / np.sqrt(k) if k > 1 else 0.0
        evens[0] = totals[0] = float(k)
    else:
        seen: set[int] = set()
        for s in sets:
            w = int(s.z_weight)
            if w in seen:
                raise ValueError(f"duplicate ensemble weight {w}")
            seen.add(w)
            signs = s.outcomes.astype(float)
            c_hat[w] = signs.mean()
            stderr[w] = signs.std(ddof=1) / np.sqrt(s.trials) if s.trials > 1 else 0.0
            evens[w] = float((s.outcomes > 0).sum())
            totals[w] = float(s.trials)
        evens[0] = totals[0] = max(totals[1:].max(), 1.0)

    return ParityEstimate(n, c_hat, stderr, evens, totals)


def normalize_reference(
    est: ParityEstimate,
    ref: ParityEstimate,
    ratio_floor: float = DEFAULT_RATIO_FLOOR,
) -> ParityEstimate:
    """Divide out the reference (no-channel) eigenvalues entry by entry.

    Entries where the reference magnitude is below ``ratio_floor`` are flagged
    unusable (NaN) rather than divided.  Standard errors use first-order ratio
    propagation.
    """
    if est.n != ref.n:
        raise ValueError("register sizes differ")
    n = est.n
    c = est.c_hat.copy()
    se = est.stderr.copy()
    unusable = list(est.unusable)
    for w in range(1, n + 1):
        r, sr = ref.c_hat[w], ref.stderr[w]
        if np.isnan(r) or abs(r) < ratio_floor:
            unusable.append(w)
            c[w] = np.nan
            se[w] = np.nan
            continue
        ratio = c[w] / r
        se[w] = abs(1.0 / r) * np.hypot(se[w], ratio * sr)
        c[w] = ratio
    return ParityEstimate(
        n, c, se, est.even_counts, est.totals, normalized=True,
        unusable=tuple(sorted(set(unusable))),
    )


@dataclass(frozen=True)
class LinearInversion:
    """Raw linear-inversion estimate; may leave the simplex, never clipped."""

    p: WeightDistribution
    stderr: np.ndarray


def linear_invert(est: ParityEstimate) -> LinearInversion:
    if np.any(np.isnan(est.c_hat)):
        bad = [w for w in range(est.n + 1) if np.isnan(est.c_hat[w])]
        raise ValueError(f"cannot invert with unusable entries {bad}")
    inv = omega_inv(est.n).as_array()
    p = inv @ est.c_hat
    var = (inv**2) @ np.square(np.nan_to_num(est.stderr))
    return LinearInversion(WeightDistribution(est.n, p), np.sqrt(var))


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, len(v) + 1)
    cond = u - css / ind > 0
    rho = ind[cond][-1]
    theta = css[cond][-1] / rho
    return np.maximum(v - theta, 0.0)


def _parity_loglik(p, om, evens, totals, scale):
    q = np.clip((1.0 + scale * (om @ p)) / 2.0, 1e-12, 1.0 - 1e-12)
    ll = 0.0
    grad = np.zeros_like(p)
    for w in range(1, len(p)):
        if totals[w] == 0:
            continue
        k, nn = evens[w], totals[w]
        ll += k * np.log(q[w]) + (nn - k) * np.log(1.0 - q[w])
        grad += (k / q[w] - (nn - k) / (1.0 - q[w])) * 0.5 * scale[w] * om[w]
    return ll, grad


@dataclass(frozen=True)
class MLFit:
    p_hat: WeightDistribution
    log_likelihood: float
    confidence_contours: dict[float, list[np.ndarray]] = field(default_factory=dict)
    levels: tuple[float, ...] = CONTOUR_LEVELS
    converged: bool = True
    iterations: int = 0
    grad_norm: float = 0.0


def mle_fit(
    evens: np.ndarray,
    totals: np.ndarray,
    n: int,
    contours: bool = True,
    levels: tuple[float, ...] = CONTOUR_LEVELS,
    response_scale: np.ndarray | None = None,
) -> MLFit:
    """Constrained maximum likelihood for the weight distribution.

    Maximises the per-weight Bernoulli parity likelihood over the probability
    simplex by projected gradient ascent with a Barzilai-Borwein step and
    backtracking.  ``evens``/``totals`` come from :class:`ParityEstimate`.
    Confidence contours are level sets of the profile log-likelihood at
    chi-square quantiles with two degrees of freedom per projected pair.

    ``response_scale`` robustifies against preparation and readout
    imperfections: when reference-run eigenvalues are supplied, the model
    becomes ``q_w = (1 + scale_w (om p)_w) / 2``, i.e. the raw counts are fit
    with the independently measured attenuation folded into the response.
    Weights whose scale is NaN (unusable reference) are dropped from the fit.
    """
    evens = np.asarray(evens, dtype=float)
    totals = np.asarray(totals, dtype=float).copy()
    if np.any(evens > totals) or np.any(evens < 0):
        raise ValueError("even-parity counts must lie in [0, totals]")
    om = omega(n).as_array()
    if response_scale is None:
        scale = np.ones(n + 1)
    else:
        scale = np.asarray(response_scale, dtype=float).copy()
        totals[np.isnan(scale)] = 0.0
        scale = np.nan_to_num(scale, nan=1.0)

    # Warm start: clipped linear inversion of the count-implied eigenvalues.
    with np.errstate(invalid="ignore", divide="ignore"):
        c0 = np.where(totals > 0,
                      (2.0 * evens / np.maximum(totals, 1.0) - 1.0) / scale, 0.0)
    c0[0] = 1.0
    p = project_simplex(omega_inv(n).as_array() @ c0)

    ll, grad = _parity_loglik(p, om, evens, totals, scale)
    step = 1.0 / max(totals.max(), 1.0)
    prev_p, prev_grad = None, None
    it = 0
    for it in range(1, _MLE_MAX_ITER + 1):
        if prev_p is not None:
            dp = p - prev_p
            dg = grad - prev_grad
            denom = float(dp @ dg)
            if abs(denom) > 1e-300:
                step = abs(float(dp @ dp) / denom)
            step = float(np.clip(step, 1e-12, 1e12))
        accepted = False
        for _ in range(60):
            cand = project_simplex(p + step * grad)
            cand_ll, cand_grad = _parity_loglik(cand, om, evens, totals, scale)
            if cand_ll >= ll - 1e-12:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        prev_p, prev_grad = p, grad
        p, ll, grad = cand, cand_ll, cand_grad
        pg = np.linalg.norm(project_simplex(p + grad) - p)
        if pg < _MLE_GRAD_TOL:
            break
    pg = float(np.linalg.norm(project_simplex(p + grad) - p))
    converged = pg < _MLE_GRAD_TOL or np.allclose(p, project_simplex(p + grad), atol=1e-12)

    contour_map: dict[float, list[np.ndarray]] = {}
    if contours:
        for level in levels:
            contour_map[level] = _contour_points(p, ll, om, evens, totals, scale, level, n)

    return MLFit(
        p_hat=WeightDistribution(n, p),
        log_likelihood=float(ll),
        confidence_contours=contour_map,
        levels=tuple(levels),
        converged=bool(converged),
        iterations=it,
        grad_norm=pg,
    )


def _loglik_at(p, om, evens, totals, scale):
    return _parity_loglik(p, om, evens, totals, scale)[0]


def _profile_opt(fixed: dict[int, float], n, om, evens, totals, scale):
    """Maximise the likelihood with some components pinned.

    Returns ``(loglik, vector)``; the free components absorb the leftover
    probability budget.
    """
    rest = [w for w in range(n + 1) if w not in fixed]
    budget = 1.0 - sum(fixed.values())
    base = np.zeros(n + 1)
    for w, v in fixed.items():
        base[w] = v
    if budget < -1e-12:
        return -np.inf, base
    budget = max(budget, 0.0)
    if len(rest) == 0:
        ll = _loglik_at(base, om, evens, totals, scale) if budget < 1e-12 else -np.inf
        return ll, base
    if len(rest) == 1:
        base[rest[0]] = budget
        return _loglik_at(base, om, evens, totals, scale), base
    if len(rest) == 2:
        # Golden-section over the single leftover degree of freedom.
        a, b = 0.0, budget
        gr = (np.sqrt(5.0) - 1.0) / 2.0

        def val(t):
            vec = base.copy()
            vec[rest[0]] = t
            vec[rest[1]] = budget - t
            return _loglik_at(vec, om, evens, totals, scale), vec

        x1, x2 = b - gr * (b - a), a + gr * (b - a)
        f1, f2 = val(x1)[0], val(x2)[0]
        for _ in range(80):
            if f1 < f2:
                a, x1, f1 = x1, x2, f2
                x2 = a + gr * (b - a)
                f2 = val(x2)[0]
            else:
                b, x2, f2 = x2, x1, f1
                x1 = b - gr * (b - a)
                f1 = val(x1)[0]
        return val(x1) if f1 >= f2 else val(x2)
    # Larger leftover spaces: projected-gradient fit on the scaled sub-simplex.
    free = np.full(len(rest), budget / len(rest))
    vec = base.copy()
    step = 1.0 / max(totals.max(), 1.0)
    for _ in range(400):
        for i, w in enumerate(rest):
            vec[w] = free[i]
        _, grad = _parity_loglik(vec, om, evens, totals, scale)
        g = np.array([grad[w] for w in rest])
        if budget <= 0:
            break
        cand = budget * project_simplex((free + step * g) / budget)
        if np.linalg.norm(cand - free) < 1e-10:
            free = cand
            break
        free = cand
    for i, w in enumerate(rest):
        vec[w] = free[i]
    return _loglik_at(vec, om, evens, totals, scale), vec


def _contour_points(p_hat, ll_max, om, evens, totals, scale, level, n,
                    directions: int = 64) -> list[np.ndarray]:
    """Closed polyline(s) where the profile deviance crosses the level quantile.

    For two free coordinates the contour lives in the (p_1, p_2) plane; for
    larger registers one polyline per projected pair (p_a, p_b) is produced,
    profiling over the remaining components.
    """
    threshold = chi2.ppf(level, 2)
    pairs = [(1, 2)] if n == 2 else [(a, b) for a in range(n + 1) for b in range(a + 1, n + 1)]
    polylines = []
    for (a, b) in pairs:
        pts = []
        for theta in np.linspace(0.0, 2.0 * np.pi, directions, endpoint=False):
            da, db = np.cos(theta), np.sin(theta)

            def at(r):
                va, vb = p_hat[a] + r * da, p_hat[b] + r * db
                if va < -1e-12 or vb < -1e-12 or va + vb > 1.0 + 1e-12:
                    return np.inf, None
                ll, vec = _profile_opt(
                    {a: max(va, 0.0), b: max(vb, 0.0)}, n, om, evens, totals, scale
                )
                return 2.0 * (ll_max - ll), vec

            r_max = _boundary_radius(p_hat[a], p_hat[b], da, db)
            lo, hi = 0.0, r_max
            dev_hi, vec_hi = at(hi)
            if dev_hi < threshold:
                pts.append(vec_hi)
                continue
            vec_lo = None
            for _ in range(50):
                mid = 0.5 * (lo + hi)
                dev, vec = at(mid)
                if dev < threshold:
                    lo, vec_lo = mid, vec
                else:
                    hi = mid
            pts.append(vec_lo if vec_lo is not None else p_hat.copy())
        pts.append(pts[0])
        polylines.append(np.array(pts))
    return polylines


def _boundary_radius(pa, pb, da, db) -> float:
    r = np.inf
    if da < 0:
        r = min(r, -pa / da)
    if db < 0:
        r = min(r, -pb / db)
    if da + db > 0:
        r = min(r, (1.0 - pa - pb) / (da + db))
    return float(min(r, 2.0))
