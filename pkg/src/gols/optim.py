"""Search-direction generators and the generic update x' = x + alpha * d.

Seven training algorithms are recast so that each contributes only a
search direction; the step size along it comes from a pluggable rule
(the gradient-only line search or a fixed learning rate). The momentum
variants compose their update after the step size is known, which is
exactly what makes them interact poorly with a line search. Directions
fall into two classes: coupled (sgd, sgdm, nag - the step scales the
whole vector) and uncoupled (adagrad, adadelta, adam - per-component
scaling from gradient history reshapes the direction).

Evaluation accounting: a cost unit is one batch-gradient evaluation. The
final line-search probe lands exactly on the accepted point, so rules
whose update is x' = origin + alpha * d reuse that gradient to build the
next direction instead of spending a fresh evaluation.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .core import l2_norm
from .linesearch import (CountingEvaluator, Evaluation, GolsiParams,
                         LineFunction, LineSearchError, golsi)


@dataclass
class IterationRecord:
    """What one training iteration did and what it cost."""

    n: int
    alpha: float
    k: int
    train_loss: float = math.nan
    val_loss: float = math.nan
    test_loss: float = math.nan
    direction_norm: float = 0.0


@dataclass
class GolsiStep:
    """Step-size rule: run the gradient-only line search each iteration."""

    params: GolsiParams = field(default_factory=GolsiParams)
    reuse_f0: bool = True


@dataclass
class FixedStep:
    """Step-size rule: constant learning rate, one evaluation per iteration."""

    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("fixed step must be positive")


class DirectionRule:
    """Base class: direction from a gradient, plus the update composition."""

    name = "base"
    # Whether x' = search_origin + alpha * d holds exactly, making the
    # final line-search gradient valid as the next iteration's gradient.
    reuse_final_gradient = True

    def search_origin(self, x: np.ndarray) -> np.ndarray:
        """Point the gradient is taken at and the search starts from."""
        return x

    def direction(self, g: np.ndarray, origin: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def displacement(self, alpha: float, d: np.ndarray) -> np.ndarray:
        """Update step to add to x once alpha is known; may mutate state."""
        return alpha * d


class SgdRule(DirectionRule):
    """Steepest descent on the sampled gradient: d = -g."""

    name = "sgd"

    def direction(self, g, origin):
        return -g


class SgdmRule(DirectionRule):
    """Steepest descent plus heavy-ball momentum composed after the search.

    The update buffer c' = alpha * d + gamma * c is applied wholesale, so
    a fraction of the previous update is added on top of the step the
    line search chose - deliberately kept to expose that behaviour.
    """

    name = "sgdm"
    reuse_final_gradient = False

    def __init__(self, gamma: float = 0.9):
        self.gamma = gamma
        self.c: np.ndarray | None = None

    def direction(self, g, origin):
        return -g

    def displacement(self, alpha, d):
        if self.c is None:
            self.c = np.zeros_like(d)
        self.c = alpha * d + self.gamma * self.c
        return self.c


class NagRule(DirectionRule):
    """Momentum with a look-ahead gradient at x + gamma * c.

    The gradient (and the line search) operate from the look-ahead point,
    so x' = x + alpha * d + gamma * c equals look-ahead + alpha * d.
    """

    name = "nag"
    reuse_final_gradient = False

    def __init__(self, gamma: float = 0.5):
        self.gamma = gamma
        self.c: np.ndarray | None = None

    def search_origin(self, x):
        if self.c is None:
            self.c = np.zeros_like(x)
        return x + self.gamma * self.c

    def direction(self, g, origin):
        return -g

    def displacement(self, alpha, d):
        self.c = alpha * d + self.gamma * self.c
        return self.c


class AdagradRule(DirectionRule):
    """Per-component scaling by accumulated squared gradients."""

    name = "adagrad"

    def __init__(self, eps: float = 1e-8):
        self.eps = eps
        self.v: np.ndarray | None = None

    def direction(self, g, origin):
        c = -g
        if self.v is None:
            self.v = np.zeros_like(g)
        self.v = self.v + c * c
        return c / np.sqrt(self.v + self.eps)


class AdadeltaRule(DirectionRule):
    """Decaying squared-gradient and squared-update averages.

    The decaying averages use (1 - beta) mixing so both accumulators stay
    non-negative. With ``paper_literal`` the published (beta - 1)
    coefficients are kept verbatim; they drive the accumulators negative,
    so the square roots fail with a domain error on the first update.
    """

    name = "adadelta"

    def __init__(self, beta: float = 0.9, eps: float = 1e-8,
                 paper_literal: bool = False):
        self.beta = beta
        self.eps = eps
        self.paper_literal = paper_literal
        self.v: np.ndarray | None = None
        self.m: np.ndarray | None = None
        self.d_prev: np.ndarray | None = None

    def direction(self, g, origin):
        if self.v is None:
            self.v = np.zeros_like(g)
            self.m = np.zeros_like(g)
            self.d_prev = np.ones_like(g)
        c = -g
        mix = (self.beta - 1.0) if self.paper_literal else (1.0 - self.beta)
        self.v = mix * c * c + self.beta * self.v
        self.m = mix * self.d_prev * self.d_prev + self.beta * self.m
        if np.any(self.v + self.eps < 0) or np.any(self.m + self.eps < 0):
            raise ValueError("adadelta accumulators went negative; the literal "
                             "(beta - 1) mixing coefficient is not usable")
        d = np.sqrt(self.m + self.eps) / np.sqrt(self.v + self.eps) * c
        self.d_prev = d
        return d


class AdamRule(DirectionRule):
    """First/second-moment scaling with switchable published quirks.

    By default the direction carries a leading minus so it descends, and
    the bias correction divides by the constant (1 - beta1) / (1 - beta2)
    exactly as published. ``standard_bias_correction`` switches to the
    conventional (1 - beta^t) rule; ``paper_literal`` drops the sign fix,
    yielding ascent directions the line search bottoms out on.
    """

    name = "adam"

    def __init__(self, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8, paper_literal: bool = False,
                 standard_bias_correction: bool = False):
        if beta1 == 1.0:
            raise ValueError("beta1 = 1 makes the bias correction divide by zero")
        if beta2 == 1.0:
            raise ValueError("beta2 = 1 makes the bias correction divide by zero")
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.paper_literal = paper_literal
        self.standard_bias_correction = standard_bias_correction
        self.m: np.ndarray | None = None
        self.v: np.ndarray | None = None
        self.t = 0

    def direction(self, g, origin):
        if self.m is None:
            self.m = np.zeros_like(g)
            self.v = np.zeros_like(g)
        c = g
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * c
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * c * c
        if self.standard_bias_correction:
            m_hat = self.m / (1.0 - self.beta1 ** self.t)
            v_hat = self.v / (1.0 - self.beta2 ** self.t)
        else:
            m_hat = self.m / (1.0 - self.beta1)
            v_hat = self.v / (1.0 - self.beta2)
        d = m_hat / (np.sqrt(v_hat) + self.eps)
        return d if self.paper_literal else -d


class LbfgsRule(DirectionRule):
    """Limited-memory quasi-Newton directions via the two-loop recursion.

    Curvature pairs are formed from consecutive direction-building
    gradients (s = x_n - x_{n-1}, y = g_n - g_{n-1}), appended only when
    s.y > 1e-10 ||s|| ||y||, and capped at ``history_size`` with oldest
    eviction. The initial Hessian scale is (s.y)/(y.y) from the newest
    pair. Ascent directions are possible and left to the line search.
    """

    name = "lbfgs"

    def __init__(self, history_size: int = 10):
        self.history_size = history_size
        self.pairs: deque = deque(maxlen=max(history_size, 1))
        self.x_prev: np.ndarray | None = None
        self.g_prev: np.ndarray | None = None

    def _push_pair(self, s, y):
        if self.history_size < 1:
            return
        sy = float(s @ y)
        if sy > 1e-10 * l2_norm(s) * l2_norm(y):
            self.pairs.append((s, y, 1.0 / sy))

    def direction(self, g, origin):
        if self.x_prev is not None:
            self._push_pair(origin - self.x_prev, g - self.g_prev)
        self.x_prev = origin
        self.g_prev = g

        q = g.copy()
        alphas = []
        for s, y, rho in reversed(self.pairs):
            a = rho * float(s @ q)
            alphas.append(a)
            q -= a * y
        if self.pairs:
            s, y, _ = self.pairs[-1]
            q *= float(s @ y) / float(y @ y)
        for (s, y, rho), a in zip(self.pairs, reversed(alphas)):
            b = rho * float(y @ q)
            q += (a - b) * s
        return -q


_RULES = {
    "sgd": SgdRule,
    "sgdm": SgdmRule,
    "nag": NagRule,
    "adagrad": AdagradRule,
    "adadelta": AdadeltaRule,
    "adam": AdamRule,
    "lbfgs": LbfgsRule,
}


def make_rule(kind: str, **hyper) -> DirectionRule:
    """Construct a direction rule by name with hyperparameter overrides."""
    try:
        cls = _RULES[kind.lower()]
    except KeyError:
        raise ValueError(f"unknown optimizer {kind!r}; choose from "
                         f"{sorted(_RULES)}") from None
    return cls(**hyper)


@dataclass
class IterationState:
    """Carries the warm-start step and the reusable gradient between iterations."""

    warm_alpha: float = GolsiParams().alpha_min
    cached: Evaluation | None = None


def iterate(rule: DirectionRule, x: np.ndarray, evaluator: CountingEvaluator,
            step_rule, state: IterationState, n: int = 0,
            monitor=None) -> tuple[np.ndarray, IterationRecord]:
    """One training iteration: gradient, direction, step size, update.

    Under the line-search rule, the gradient that builds the direction is
    reused from the previous search's final probe whenever the update
    landed exactly on it; otherwise one fresh evaluation is spent. The
    returned record's ``k`` counts every evaluation attributable to this
    iteration. ``monitor`` (optional) maps (n, x_next) to a
    (train, val, test) loss triple for logging; monitor evaluations are
    not part of the evaluation budget.
    """
    k_before = evaluator.total_evals
    origin = rule.search_origin(x)

    cached = state.cached
    if (isinstance(step_rule, GolsiStep) and rule.reuse_final_gradient
            and cached is not None and cached.point is origin):
        g = cached.gradient
    else:
        g = evaluator.evaluate(origin).gradient
    state.cached = None

    d = rule.direction(g, origin)
    dnorm = l2_norm(d)

    if dnorm == 0.0 or not math.isfinite(dnorm):
        # degenerate direction: skip the search, coast on any momentum
        alpha = 0.0
        x_next = x + rule.displacement(alpha, d)
    elif isinstance(step_rule, FixedStep):
        alpha = step_rule.alpha
        x_next = x + rule.displacement(alpha, d)
    else:
        lf = LineFunction(origin, d, evaluator)
        f0 = float(d @ g) if step_rule.reuse_f0 else None
        try:
            result = golsi(lf, state.warm_alpha, step_rule.params, f0=f0)
        except LineSearchError:
            rec = IterationRecord(n=n, alpha=math.nan,
                                  k=evaluator.total_evals - k_before,
                                  direction_norm=dnorm)
            if monitor is not None:
                rec.train_loss, rec.val_loss, rec.test_loss = monitor(n, x)
            return x, rec
        alpha = result.alpha
        state.warm_alpha = alpha
        if rule.reuse_final_gradient:
            # the accepted point is by construction the final probe
            x_next = lf.last_eval.point
            state.cached = lf.last_eval
        else:
            x_next = x + rule.displacement(alpha, d)

    rec = IterationRecord(n=n, alpha=alpha, k=evaluator.total_evals - k_before,
                          direction_norm=dnorm)
    if monitor is not None:
        rec.train_loss, rec.val_loss, rec.test_loss = monitor(n, x_next)
    return x_next, rec
