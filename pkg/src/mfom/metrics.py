"""Threshold-sweep detection metrics: miss/false-alarm rates, EER, DCF, DET.

The decision rule is fixed across the whole module: a trial with score >= t
is accepted (decided target), so misses are counted with a strict < and
false alarms with >=.  Every achievable operating point of a finite score
set is realized at one of the sweep thresholds (the sorted distinct scores
plus a sentinel below the minimum and one above the maximum), which makes
EER and minimum-cost searches exhaustive.

All functions are pure and safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError

TARGET = "target"
NONTARGET = "nontarget"

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class TrialScore:
    """One labeled detector output; higher score means more target-like."""

    trial_id: str
    label: str  # "target" or "nontarget"
    score: float

    def __post_init__(self):
        if self.label not in (TARGET, NONTARGET):
            raise DomainError(
                f"trial {self.trial_id!r}: label must be {TARGET!r} or "
                f"{NONTARGET!r}, got {self.label!r}"
            )
        if not math.isfinite(self.score):
            raise DomainError(f"trial {self.trial_id!r}: score is not finite")


class ScoreSet:
    """Labeled trial scores, split into sorted target / nontarget arrays.

    Construction only checks score finiteness; metric functions additionally
    require at least one trial of each class.
    """

    def __init__(self, trials: Sequence[TrialScore]):
        self.trials = list(trials)
        tar = [t.score for t in self.trials if t.label == TARGET]
        non = [t.score for t in self.trials if t.label == NONTARGET]
        self._tar = np.sort(np.asarray(tar, dtype=float))
        self._non = np.sort(np.asarray(non, dtype=float))

    @classmethod
    def from_arrays(cls, target_scores, nontarget_scores) -> "ScoreSet":
        """Build a set from two plain score arrays, generating trial ids."""
        trials = [
            TrialScore(f"tar{i:06d}", TARGET, float(s))
            for i, s in enumerate(np.asarray(target_scores, dtype=float).ravel())
        ]
        trials += [
            TrialScore(f"non{i:06d}", NONTARGET, float(s))
            for i, s in enumerate(np.asarray(nontarget_scores, dtype=float).ravel())
        ]
        return cls(trials)

    @property
    def P(self) -> int:
        return self._tar.size

    @property
    def N(self) -> int:
        return self._non.size

    @property
    def target_scores(self) -> np.ndarray:
        return self._tar.copy()

    @property
    def nontarget_scores(self) -> np.ndarray:
        return self._non.copy()

    def __len__(self) -> int:
        return len(self.trials)


@dataclass(frozen=True)
class DcfParams:
    """Cost model: miss cost, false-alarm cost, target prior."""

    c_miss: float = 1.0
    c_fa: float = 1.0
    p_tar: float = 0.1

    def __post_init__(self):
        if not (math.isfinite(self.c_miss) and self.c_miss > 0):
            raise DomainError(f"c_miss must be positive, got {self.c_miss}")
        if not (math.isfinite(self.c_fa) and self.c_fa > 0):
            raise DomainError(f"c_fa must be positive, got {self.c_fa}")
        if not (0.0 < self.p_tar < 1.0):
            raise DomainError(f"p_tar must lie in (0, 1), got {self.p_tar}")

    @property
    def floor(self) -> float:
        """Cost of the best trivial system (accept all or reject all)."""
        return min(self.c_miss * self.p_tar, self.c_fa * (1.0 - self.p_tar))


@dataclass(frozen=True)
class ErrorRatePoint:
    threshold: float
    p_miss: float
    p_fa: float


@dataclass(frozen=True)
class EerResult:
    eer: float
    threshold: float


@dataclass(frozen=True)
class DcfResult:
    raw: float
    normalized: float
    threshold: float


def _require_targets(score_set: ScoreSet):
    if score_set.P < 1:
        raise DomainError("score set has no target trials")


def _require_nontargets(score_set: ScoreSet):
    if score_set.N < 1:
        raise DomainError("score set has no nontarget trials")


def _require_both(score_set: ScoreSet):
    _require_targets(score_set)
    _require_nontargets(score_set)


def p_miss_at(score_set: ScoreSet, t: float) -> float:
    """Fraction of target trials rejected at threshold t (score < t)."""
    _require_targets(score_set)
    return float(np.searchsorted(score_set._tar, t, side="left")) / score_set.P


def p_fa_at(score_set: ScoreSet, t: float) -> float:
    """Fraction of nontarget trials accepted at threshold t (score >= t)."""
    _require_nontargets(score_set)
    below = int(np.searchsorted(score_set._non, t, side="left"))
    return float(score_set.N - below) / score_set.N


def sweep(score_set: ScoreSet) -> list[ErrorRatePoint]:
    """Error rates at every candidate threshold, sorted ascending.

    Candidates are the distinct scores plus one sentinel below the minimum
    (accept everything) and one above the maximum (reject everything), so a
    set with n distinct scores yields n + 2 points.  Along the list p_miss
    is non-decreasing and p_fa is non-increasing.
    """
    _require_both(score_set)
    scores = np.unique(np.concatenate([score_set._tar, score_set._non]))
    lo = scores[0] - 1.0
    if not lo < scores[0]:  # scores of huge magnitude: fall back to one ulp
        lo = np.nextafter(scores[0], -np.inf)
    hi = scores[-1] + 1.0
    if not hi > scores[-1]:
        hi = np.nextafter(scores[-1], np.inf)
    thresholds = np.concatenate([[lo], scores, [hi]])
    pm = np.searchsorted(score_set._tar, thresholds, side="left") / score_set.P
    pf = (
        score_set.N - np.searchsorted(score_set._non, thresholds, side="left")
    ) / score_set.N
    return [
        ErrorRatePoint(float(t), float(m), float(f))
        for t, m, f in zip(thresholds, pm, pf)
    ]


def eer(score_set: ScoreSet) -> EerResult:
    """Equal error rate and the threshold where the two rates cross.

    p_miss - p_fa is non-decreasing along the sweep and spans [-1, 1], so a
    crossing always exists.  An exact sweep point with p_miss == p_fa is
    returned as-is (lowest such threshold); otherwise both rates and the
    threshold are linearly interpolated between the two bracketing points.
    """
    points = sweep(score_set)
    diffs = [p.p_miss - p.p_fa for p in points]
    for point, d in zip(points, diffs):
        if d == 0.0:
            return EerResult(eer=point.p_miss, threshold=point.threshold)
    for i in range(len(points) - 1):
        if diffs[i] < 0.0 < diffs[i + 1]:
            lo, hi = points[i], points[i + 1]
            u = diffs[i] / (diffs[i] - diffs[i + 1])
            value = lo.p_miss + u * (hi.p_miss - lo.p_miss)
            threshold = lo.threshold + u * (hi.threshold - lo.threshold)
            return EerResult(eer=float(value), threshold=float(threshold))
    raise DomainError("no miss/false-alarm crossing found")  # unreachable


def actual_dcf(score_set: ScoreSet, params: DcfParams, t: float) -> DcfResult:
    """Detection cost at a fixed decision threshold, raw and normalized."""
    _require_both(score_set)
    raw = params.c_miss * params.p_tar * p_miss_at(score_set, t) + params.c_fa * (
        1.0 - params.p_tar
    ) * p_fa_at(score_set, t)
    return DcfResult(raw=float(raw), normalized=float(raw / params.floor), threshold=float(t))


def min_dcf(score_set: ScoreSet, params: DcfParams) -> DcfResult:
    """Minimum detection cost over all sweep thresholds.

    Ties are broken toward the lowest threshold.
    """
    points = sweep(score_set)
    best = None
    best_raw = math.inf
    for point in points:
        raw = (
            params.c_miss * params.p_tar * point.p_miss
            + params.c_fa * (1.0 - params.p_tar) * point.p_fa
        )
        if raw < best_raw:
            best_raw = raw
            best = point
    return DcfResult(
        raw=float(best_raw),
        normalized=float(best_raw / params.floor),
        threshold=best.threshold,
    )


def det_points(score_set: ScoreSet) -> list[tuple[float, float]]:
    """DET-curve coordinates (probit(p_fa), probit(p_miss)) per sweep point.

    Rates are clamped into [eps, 1 - eps] with eps = 1 / (2 * max(P, N)) so
    that zero rates stay plottable at sample-size resolution; every
    coordinate is therefore finite.
    """
    points = sweep(score_set)
    eps = 1.0 / (2.0 * max(score_set.P, score_set.N))
    out = []
    for point in points:
        pm = min(max(point.p_miss, eps), 1.0 - eps)
        pf = min(max(point.p_fa, eps), 1.0 - eps)
        out.append((probit(pf), probit(pm)))
    return out


# Rational approximation of the inverse standard-normal CDF (Acklam's
# coefficients), refined by one Halley step against erfc.  Keeps the module
# free of special-function dependencies.
_PROBIT_A = (
    -3.969683028665376e01,
    2.209460984245205e02,
    -2.759285104469687e02,
    1.383577518672690e02,
    -3.066479806614716e01,
    2.506628277459239e00,
)
_PROBIT_B = (
    -5.447609879822406e01,
    1.615858368580409e02,
    -1.556989798598866e02,
    6.680131188771972e01,
    -1.328068155288572e01,
)
_PROBIT_C = (
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e00,
    -2.549732539343734e00,
    4.374664141464968e00,
    2.938163982698783e00,
)
_PROBIT_D = (
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e00,
    3.754408661907416e00,
)
_PROBIT_SPLIT = 0.02425


def _probit_rational(p: float) -> float:
    # expects 0 < p <= 0.5
    if p < _PROBIT_SPLIT:
        q = math.sqrt(-2.0 * math.log(p))
        a, b, c, d, e, f = _PROBIT_C
        num = ((((a * q + b) * q + c) * q + d) * q + e) * q + f
        a, b, c, d = _PROBIT_D
        den = (((a * q + b) * q + c) * q + d) * q + 1.0
        return num / den
    q = p - 0.5
    r = q * q
    a, b, c, d, e, f = _PROBIT_A
    num = ((((a * r + b) * r + c) * r + d) * r + e) * r + f
    a, b, c, d, e = _PROBIT_B
    den = ((((a * r + b) * r + c) * r + d) * r + e) * r + 1.0
    return num * q / den


def probit(p: float) -> float:
    """Inverse of the standard normal CDF.

    Accurate to well under 1e-8 absolute error on [1e-12, 1 - 1e-12];
    probit(0.5) is exactly 0.
    """
    p = float(p)
    if not (0.0 < p < 1.0):  # also rejects NaN
        raise DomainError(f"probit argument must lie in (0, 1), got {p}")
    if p > 0.5:
        # 1 - p is exact for p in [0.5, 1), so the symmetry costs nothing
        return -probit(1.0 - p)
    x = _probit_rational(p)
    if 0.5 * x * x > 700.0:  # refinement would overflow; raw estimate is fine
        return x
    # One Halley step on Phi(x) - p; x <= 0 here so erfc gets a nonnegative
    # argument and keeps full relative accuracy.
    err = 0.5 * math.erfc(-x / _SQRT2) - p
    u = err * _SQRT2PI * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)
