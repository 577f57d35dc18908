"""Univariate restriction of the sampled loss and the GOLS-I step rule.

A line function F(alpha) restricts the (possibly dynamically sub-sampled)
loss to a ray x + alpha * d. Its derivative F'(alpha) = d . g(x + alpha*d)
is the only quantity the step rule consumes: GOLS-I brackets a sign change
of F' from negative to positive by growing or shrinking alpha in factors
of eta, with an immediate-accept tolerance |c2 * F'(0)| and hard bounds
[alpha_min, min(1 / ||d||, cap)]. Each derivative evaluation under dynamic
sub-sampling draws a fresh mini-batch; evaluations are counted because
they are the unit of computational cost throughout.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import l2_norm
from .data import BatchSampler
from .model import BatchEval, MlpSpec, backprop_gradient

IMMEDIATE_ACCEPT = "immediate_accept"
SIGN_CHANGE_UP = "sign_change_up"
SIGN_CHANGE_DOWN = "sign_change_down"
HIT_ALPHA_MAX = "hit_alpha_max"
HIT_ALPHA_MIN = "hit_alpha_min"


@dataclass(frozen=True)
class GolsiParams:
    """Step-rule constants: growth factor, accept tolerance and bounds."""

    eta: float = 2.0
    c2: float = 0.9
    alpha_min: float = 1e-8
    alpha_max_cap: float = 1e7

    def __post_init__(self):
        if not self.eta > 1:
            raise ValueError("eta must exceed 1")
        if not 0 < self.c2 < 1:
            raise ValueError("c2 must lie in (0, 1)")
        if not 0 < self.alpha_min < self.alpha_max_cap:
            raise ValueError("need 0 < alpha_min < alpha_max_cap")


@dataclass
class StepResult:
    """Accepted step size, its evaluation cost and how the search ended."""

    alpha: float
    k: int
    exit_reason: str
    last_derivative: float


@dataclass
class ProbeRecord:
    """One derivative evaluation inside a line search (for trace output)."""

    i: int
    alpha: float
    fprime: float
    flag: int


@dataclass
class Evaluation:
    """A single counted gradient evaluation at a point on the ray."""

    alpha: float
    point: np.ndarray
    loss: float
    gradient: np.ndarray
    fprime: float
    batch_id: object = None


class LineSearchError(RuntimeError):
    """Non-finite derivative during a search; carries the probe trace."""

    def __init__(self, message, trace=None, k: int = 0):
        super().__init__(message)
        self.trace = list(trace) if trace else []
        self.k = k


class CountingEvaluator:
    """Wraps a loss/gradient callable and counts every invocation.

    The wrapped callable maps a weight vector to a BatchEval. The counter
    is the independent audit of evaluation cost: every batch gradient the
    optimizer or line search consumes passes through here.
    """

    def __init__(self, fn):
        self._fn = fn
        self.total_evals = 0

    def evaluate(self, x: np.ndarray) -> BatchEval:
        self.total_evals += 1
        return self._fn(x)


class MbssEvaluator(CountingEvaluator):
    """Mini-batch sub-sampled loss/gradient over a dataset.

    Every call draws the next batch from the sampler (a fresh draw per
    evaluation under the dynamic regimes) and evaluates the network on it.
    """

    def __init__(self, spec: MlpSpec, dataset, sampler: BatchSampler):
        self.spec = spec
        self.dataset = dataset
        self.sampler = sampler
        super().__init__(self._eval)

    def _eval(self, x: np.ndarray) -> BatchEval:
        idx = self.sampler.next_batch()
        feats, targets = self.dataset.batch(idx)
        out = backprop_gradient(self.spec, x, feats, targets,
                                batch_id=self.sampler.calls - 1)
        return out


class LineFunction:
    """F and F' along x + alpha * d, one counted evaluation per probe.

    F and F' at the same alpha come from one evaluation sharing one batch.
    The most recent evaluation is kept so the caller can reuse the
    gradient at the accepted point (it is always the final probe).
    """

    def __init__(self, origin: np.ndarray, direction: np.ndarray,
                 evaluator: CountingEvaluator):
        if origin.shape != direction.shape:
            raise ValueError("origin and direction lengths differ")
        self.origin = origin
        self.direction = direction
        self.direction_norm = l2_norm(direction)
        self.evaluator = evaluator
        self.k = 0
        self.last_eval: Evaluation | None = None

    def value_and_derivative(self, alpha: float) -> tuple[float, float]:
        point = self.origin + alpha * self.direction
        ev = self.evaluator.evaluate(point)
        fprime = float(self.direction @ ev.gradient)
        self.k += 1
        self.last_eval = Evaluation(alpha=alpha, point=point, loss=ev.loss,
                                    gradient=ev.gradient, fprime=fprime,
                                    batch_id=ev.batch_id)
        return ev.loss, fprime

    def derivative(self, alpha: float) -> float:
        if not (math.isfinite(alpha) and alpha >= 0):
            raise ValueError(f"alpha must be finite and >= 0, got {alpha}")
        return self.value_and_derivative(alpha)[1]


class DeterministicLineFunction:
    """Line function built from explicit callables, mainly for testing.

    ``fprime`` maps alpha to the directional derivative; ``f`` is optional
    and defaults to 0. ``direction_norm`` feeds the alpha_max = 1/||d||
    bound without requiring an actual direction vector.
    """

    def __init__(self, fprime, f=None, direction_norm: float = 1.0):
        self._fprime = fprime
        self._f = f or (lambda alpha: 0.0)
        self.direction_norm = float(direction_norm)
        self.k = 0
        self.last_eval = None

    def value_and_derivative(self, alpha: float) -> tuple[float, float]:
        self.k += 1
        return float(self._f(alpha)), float(self._fprime(alpha))

    def derivative(self, alpha: float) -> float:
        return self.value_and_derivative(alpha)[1]


def quadratic_line_function(origin, direction, minimizer,
                            curvature: float = 2.0) -> DeterministicLineFunction:
    """Restriction of f(x) = curvature/2 * ||x - minimizer||^2 to a ray."""
    origin = np.asarray(origin, dtype=np.float64)
    direction = np.asarray(direction, dtype=np.float64)
    minimizer = np.asarray(minimizer, dtype=np.float64)

    def fprime(alpha):
        return curvature * float(direction @ (origin + alpha * direction - minimizer))

    def f(alpha):
        r = origin + alpha * direction - minimizer
        return 0.5 * curvature * float(r @ r)

    return DeterministicLineFunction(fprime, f=f, direction_norm=l2_norm(direction))


def golsi(lf, alpha0: float, params: GolsiParams = GolsiParams(),
          f0: float | None = None, trace: list | None = None) -> StepResult:
    """Bracket a negative-to-positive derivative sign change along lf.

    Starting from alpha0 (clamped into [alpha_min, alpha_max] with
    alpha_max = min(1 / ||d||, cap)), the step grows by eta while F' < 0
    and shrinks by eta while F' > 0, stopping on the sign change or when
    the next move would leave the bounds. A probe with
    0 < F'(alpha0) < |c2 * F'(0)| is accepted immediately; F'(alpha0)
    exactly 0 is accepted as well. Pass ``f0`` to reuse a known F'(0)
    without spending an evaluation.

    Returns the accepted step, the number of derivative evaluations
    consumed, the exit reason and F' at the accepted step (reusable as the
    next search's F'(0)).
    """
    if not alpha0 > 0:
        raise ValueError(f"alpha0 must be positive, got {alpha0}")
    if lf.direction_norm == 0:
        raise ValueError("zero search direction")
    eta = params.eta
    alpha_max = min(1.0 / lf.direction_norm, params.alpha_max_cap)
    alpha_min = params.alpha_min
    k_start = lf.k

    def probe(alpha, flag):
        fp = lf.derivative(alpha)
        if trace is not None:
            trace.append(ProbeRecord(i=lf.k - k_start, alpha=alpha,
                                     fprime=fp, flag=flag))
        if not math.isfinite(fp):
            raise LineSearchError(f"non-finite directional derivative at "
                                  f"alpha={alpha}", trace=trace, k=lf.k - k_start)
        return fp

    if f0 is None:
        f0 = probe(0.0, flag=-1)
    elif not math.isfinite(f0):
        raise LineSearchError("non-finite reused F'(0)", trace=trace, k=0)

    alpha = min(max(alpha0, alpha_min), alpha_max)
    fp = probe(alpha, flag=-1)
    tol_dd = abs(params.c2 * f0)

    # Sign of F'(alpha0) picks the loop: positive -> shrink, negative ->
    # grow. The bound comparisons are inclusive once alpha0 is clamped,
    # so a search warm-started at alpha_min still grows.
    if fp > 0:
        flag = 1
    elif fp < 0:
        flag = 2
    else:
        flag = 0  # exactly on a sign change
    if 0 < fp < tol_dd:
        flag = 0  # immediate accept overrides the shrink branch

    reason = IMMEDIATE_ACCEPT
    while flag > 0:
        if flag == 2:
            alpha *= eta
            fp = probe(alpha, flag)
            if fp >= 0:
                flag, reason = 0, SIGN_CHANGE_UP
            elif alpha > alpha_max / eta:
                flag, reason = 0, HIT_ALPHA_MAX
        else:
            alpha /= eta
            fp = probe(alpha, flag)
            if fp < 0:
                flag, reason = 0, SIGN_CHANGE_DOWN
            elif alpha < alpha_min * eta:
                flag, reason = 0, HIT_ALPHA_MIN

    return StepResult(alpha=alpha, k=lf.k - k_start, exit_reason=reason,
                      last_derivative=fp)


# Fixed learning-rate ranges per algorithm family. The medium value is the
# competitive hand-tuned choice; small and large bracket it by an order of
# magnitude each way.
_FIXED_STEPS = {
    "sgd": {"small": 1.0, "medium": 10.0, "large": 100.0},
    "nag": {"small": 1.0, "medium": 10.0, "large": 100.0},
    "sgdm": {"small": 0.1, "medium": 1.0, "large": 10.0},
    "adadelta": {"small": 0.1, "medium": 1.0, "large": 10.0},
    "adagrad": {"small": 0.01, "medium": 0.1, "large": 1.0},
    "adam": {"small": 0.01, "medium": 0.1, "large": 1.0},
}


def fixed_step(regime: str, algorithm: str) -> float:
    """Fixed learning rate for (regime, algorithm); regime in small/medium/large."""
    try:
        table = _FIXED_STEPS[algorithm.lower()]
    except KeyError:
        raise ValueError(f"no fixed-step table for algorithm {algorithm!r}") from None
    try:
        return table[regime]
    except KeyError:
        raise ValueError(f"unknown regime {regime!r}; choose small/medium/large") from None


def write_trace_csv(path, records) -> None:
    """Per-probe (i, alpha, fprime, flag) rows for debugging/figures."""
    with open(Path(path), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "alpha", "fprime", "flag"])
        for rec in records:
            writer.writerow([rec.i, repr(rec.alpha), repr(rec.fprime), rec.flag])
