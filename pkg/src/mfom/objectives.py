"""Smooth surrogates for detection error rates and the objectives built on them.

The chain runs per minibatch, entirely differentiably:

  1. a units-vs-zeros misclassification measure per class: the class score
     against the log-average-exp (Kolmogorov mean) of its competitors'
     scores; negative means the decision for that class is correct;
  2. a trainable logistic error counter per class (scale alpha, shift beta)
     squashing the measure into (0, 1);
  3. batch-level soft miss / false-alarm rates from the counters;
  4. the two objectives: a cost-weighted sum of the soft rates, and the
     soft false-alarm rate plus a penalty on the rate gap (whose minimum
     sits at the equal-error condition).

grad_objective returns the exact analytic derivatives of either objective
with respect to the score matrix and both counter parameter vectors; they
include the full sigmoid Jacobian and are validated against central finite
differences in the test suite.

Reductions run in fixed index order, so results are bit-deterministic; all
functions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .metrics import DcfParams

ALPHA_MIN = 1e-3  # counter scale is clamped here to keep its sign semantics


@dataclass
class CounterParams:
    """Per-class scale/shift of the logistic error counter; alpha > 0."""

    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=float)
        self.beta = np.asarray(self.beta, dtype=float)
        if self.alpha.ndim != 1 or self.beta.ndim != 1:
            raise DomainError("alpha and beta must be 1-D vectors")
        if self.alpha.shape != self.beta.shape:
            raise DomainError("alpha and beta must have the same length")
        if not np.all(np.isfinite(self.alpha)) or not np.all(np.isfinite(self.beta)):
            raise DomainError("counter parameters must be finite")
        if np.any(self.alpha <= 0.0):
            raise DomainError("alpha entries must be positive")

    @classmethod
    def fresh(cls, n_classes: int) -> "CounterParams":
        """Identity-ish start: plain logistic of the measure."""
        return cls(np.ones(n_classes), np.zeros(n_classes))


@dataclass
class MfomConfig:
    """Smoothing constant, rate-gap weight, and the evaluation cost model."""

    eta: float = 1.0
    lam: float = 0.5
    dcf: DcfParams = field(default_factory=DcfParams)

    def __post_init__(self):
        if not self.eta > 0.0:
            raise DomainError(f"eta must be positive, got {self.eta}")
        if self.lam == 0.0:
            raise DomainError("lam must be nonzero")


@dataclass
class ObjectiveGradients:
    """Objective value plus exact partials for scores and counter params."""

    value: float
    d_scores: np.ndarray
    d_alpha: np.ndarray
    d_beta: np.ndarray


def _as_float_matrix(a, name: str) -> np.ndarray:
    out = np.asarray(a, dtype=float)
    if out.ndim == 1:
        out = out[np.newaxis, :]
    if out.ndim != 2:
        raise DomainError(f"{name} must be a vector or a 2-D matrix")
    return out


def _validate_binary(labels: np.ndarray):
    if not np.all((labels == 0.0) | (labels == 1.0)):
        raise DomainError("labels must contain only 0/1 entries")


def _validate_label_rows(labels: np.ndarray):
    _validate_binary(labels)
    ones = labels.sum(axis=1)
    if np.any(ones < 1) or np.any(ones > labels.shape[1] - 1):
        raise DomainError(
            "every label row needs at least one 1 and one 0 so each class "
            "has a nonempty competitor set"
        )


def _masked_logsumexp(a: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Row-wise log(sum(exp(a[mask]))); every row must have a True entry."""
    masked = np.where(mask, a, -np.inf)
    m = masked.max(axis=1)
    return m + np.log(np.exp(masked - m[:, np.newaxis]).sum(axis=1))


def misclassification_measure(scores, labels, eta: float = 1.0) -> np.ndarray:
    """Signed separation of each class score from its competitors.

    For a class labeled 1 the competitors are the zero-labeled classes and
    vice versa; the competitor pool is collapsed with a smoothed maximum
    (log of the average exponential, temperature 1/eta).  Zero marks the
    decision boundary, negative means the class decision is correct.

    Accepts a single row or a batch; returns the matching shape.
    """
    if not eta > 0.0:
        raise DomainError(f"eta must be positive, got {eta}")
    single_row = np.asarray(scores).ndim == 1
    G = _as_float_matrix(scores, "scores")
    Y = _as_float_matrix(labels, "labels")
    if G.shape != Y.shape:
        raise DomainError(f"scores {G.shape} and labels {Y.shape} differ in shape")
    if not np.all(np.isfinite(G)):
        raise DomainError("scores must be finite")
    _validate_label_rows(Y)

    a = eta * G
    ones_mask = Y == 1.0
    zeros_mask = ~ones_mask
    n_ones = ones_mask.sum(axis=1)
    n_zeros = zeros_mask.sum(axis=1)
    mean_ones = (_masked_logsumexp(a, ones_mask) - np.log(n_ones)) / eta
    mean_zeros = (_masked_logsumexp(a, zeros_mask) - np.log(n_zeros)) / eta
    competitor = np.where(ones_mask, mean_zeros[:, np.newaxis], mean_ones[:, np.newaxis])
    out = -G + competitor
    return out[0] if single_row else out


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def smooth_counter(measures, params: CounterParams) -> np.ndarray:
    """Logistic error counter l = sigmoid(alpha * measure + beta), in (0, 1).

    Evaluated in a saturation-safe form; the sign of the measure decides the
    limit as alpha grows.
    """
    single_row = np.asarray(measures).ndim == 1
    m = _as_float_matrix(measures, "measures")
    if m.shape[1] != params.alpha.size:
        raise DomainError(
            f"measures have {m.shape[1]} classes but counter has {params.alpha.size}"
        )
    if not np.all(np.isfinite(m)):
        raise DomainError("measures must be finite")
    out = _sigmoid(params.alpha * m + params.beta)
    return out[0] if single_row else out


def soft_p_miss(counters, labels) -> float:
    """Soft miss rate: counter mass at target positions over the target count."""
    L = _as_float_matrix(counters, "counters")
    Y = _as_float_matrix(labels, "labels")
    if L.shape != Y.shape:
        raise DomainError(f"counters {L.shape} and labels {Y.shape} differ in shape")
    _validate_binary(Y)
    P = Y.sum()
    if P < 1:
        raise DomainError("soft miss rate needs at least one target entry")
    return float((L * Y).sum() / P)


def soft_p_fa(counters, labels) -> float:
    """Soft false-alarm rate: 1-counter mass at nontarget positions over their count."""
    L = _as_float_matrix(counters, "counters")
    Y = _as_float_matrix(labels, "labels")
    if L.shape != Y.shape:
        raise DomainError(f"counters {L.shape} and labels {Y.shape} differ in shape")
    _validate_binary(Y)
    N = (1.0 - Y).sum()
    if N < 1:
        raise DomainError("soft false-alarm rate needs at least one nontarget entry")
    return float(((1.0 - L) * (1.0 - Y)).sum() / N)


def soft_error_rates(scores, labels, params: CounterParams, cfg: MfomConfig):
    """(soft miss rate, soft false-alarm rate) for a scored batch."""
    measures = misclassification_measure(scores, labels, cfg.eta)
    counters = smooth_counter(measures, params)
    return soft_p_miss(counters, labels), soft_p_fa(counters, labels)


def dcf_objective(scores, labels, params: CounterParams, cfg: MfomConfig) -> float:
    """Cost-weighted soft detection cost of a batch.

    With unit costs this is the prior-weighted sum of the two soft rates and
    lies in [0, 1].
    """
    pm, pf = soft_error_rates(scores, labels, params, cfg)
    d = cfg.dcf
    return d.c_miss * d.p_tar * pm + d.c_fa * (1.0 - d.p_tar) * pf


def eer_objective(scores, labels, params: CounterParams, cfg: MfomConfig) -> float:
    """Soft false-alarm rate plus lam times the soft rate gap.

    The penalty vanishes exactly when the two soft rates agree, which is the
    equal-error condition the objective drives toward.
    """
    pm, pf = soft_error_rates(scores, labels, params, cfg)
    return pf + cfg.lam * abs(pm - pf)


def grad_objective(
    scores, labels, params: CounterParams, cfg: MfomConfig, which: str = "dcf"
) -> ObjectiveGradients:
    """Exact analytic gradients of the selected objective.

    Returns the objective value and its partials with respect to every score
    entry and both counter vectors.  At the rate-gap kink of the "eer"
    objective (soft rates exactly equal) the penalty term contributes
    subgradient 0.
    """
    single_row = np.asarray(scores).ndim == 1
    G = _as_float_matrix(scores, "scores")
    Y = _as_float_matrix(labels, "labels")
    measures = misclassification_measure(G, Y, cfg.eta)
    counters = smooth_counter(measures, params)
    pm = soft_p_miss(counters, Y)
    pf = soft_p_fa(counters, Y)

    if which == "dcf":
        d = cfg.dcf
        value = d.c_miss * d.p_tar * pm + d.c_fa * (1.0 - d.p_tar) * pf
        d_pm = d.c_miss * d.p_tar
        d_pf = d.c_fa * (1.0 - d.p_tar)
    elif which == "eer":
        gap_sign = float(np.sign(pm - pf))
        value = pf + cfg.lam * abs(pm - pf)
        d_pm = cfg.lam * gap_sign
        d_pf = 1.0 - cfg.lam * gap_sign
    else:
        raise DomainError(f"unknown objective {which!r} (want 'dcf' or 'eer')")

    P = Y.sum()
    N = (1.0 - Y).sum()
    d_counters = d_pm * Y / P - d_pf * (1.0 - Y) / N
    slope = counters * (1.0 - counters)
    d_alpha = (d_counters * slope * measures).sum(axis=0)
    d_beta = (d_counters * slope).sum(axis=0)
    d_measures = d_counters * slope * params.alpha

    # Measure partials: -1 for the class's own score; softmax weights over
    # the competitor pool for the others.  Classes labeled 1 pull on the
    # zero-labeled scores and vice versa, so each side's pull is a row sum.
    a = cfg.eta * G
    ones_mask = Y == 1.0
    zeros_mask = ~ones_mask
    softmax_ones = _masked_softmax(a, ones_mask)
    softmax_zeros = _masked_softmax(a, zeros_mask)
    pull_from_ones = (d_measures * Y).sum(axis=1, keepdims=True)
    pull_from_zeros = (d_measures * (1.0 - Y)).sum(axis=1, keepdims=True)
    d_scores = -d_measures + softmax_zeros * pull_from_ones + softmax_ones * pull_from_zeros

    if single_row:
        d_scores = d_scores[0]
    return ObjectiveGradients(
        value=float(value), d_scores=d_scores, d_alpha=d_alpha, d_beta=d_beta
    )


def _masked_softmax(a: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Row-wise softmax over the masked entries, zero elsewhere."""
    masked = np.where(mask, a, -np.inf)
    m = masked.max(axis=1, keepdims=True)
    e = np.exp(masked - m)
    return e / e.sum(axis=1, keepdims=True)
