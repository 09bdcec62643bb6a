"""Kernel core: validated ingredients and the warped Mittag-Leffler kernel.

The kernel of every nonlocal operator in this package is

    H(t, tau) = E_beta( -alpha(t) * (psi(t) - psi(tau))^gamma / (1 - alpha(t)) )

for a variable order alpha(t), an increasing time warp psi, and a
normalization M with M(0) = M(1) = 1. H is bounded: 0 < H <= 1, with
H(t, t) = 1, so none of the derived operators have singular kernels.

KernelSpec bundles the ingredients and validates them by sampling at grid
resolution (1,024 panels): order bounds, psi' positivity plus a finite
difference consistency check, and the normalization's endpoint/positivity
constraints. gamma or beta may be None, meaning "track alpha(t) at the active
output node" (kernel rows are then re-evaluated with that node's order).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import expr
from .errors import DomainError, InvalidParam, SingularOrder
from .mlf import MLParams, _ml_neg_array, ml_eval

SINGULAR_ORDER_EPS = 1e-12
_SAMPLES = 1024


def _sample_grid(a: float, b: float, n: int = _SAMPLES) -> np.ndarray:
    return np.linspace(a, b, n + 1)


@dataclass(frozen=True)
class OrderFunction:
    """Variable order alpha(t) with caller-declared bounds.

    The declared bounds live in (0, 1]; the closed right endpoint admits the
    alpha == 1 classical-integral limit. Operators that divide by
    1 - alpha(t) raise SingularOrder when that quantity drops below 1e-12.
    """

    fn: Callable[[float], float]
    declared_min: float
    declared_max: float
    is_constant: bool = False
    label: str = "order"
    vec: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)

    def __post_init__(self):
        if not (0.0 < self.declared_min <= self.declared_max <= 1.0):
            raise InvalidParam(
                "order bounds must satisfy 0 < min <= max <= 1, got "
                f"[{self.declared_min}, {self.declared_max}]"
            )

    @classmethod
    def constant(cls, value: float) -> "OrderFunction":
        value = float(value)
        return cls(
            fn=lambda _t, _v=value: _v,
            declared_min=value,
            declared_max=value,
            is_constant=True,
            label=repr(value),
            vec=lambda ts, _v=value: np.full(np.shape(ts), _v),
        )

    @classmethod
    def from_callable(cls, fn, declared_min, declared_max, label="order") -> "OrderFunction":
        return cls(fn=fn, declared_min=float(declared_min),
                   declared_max=float(declared_max), label=label)

    @classmethod
    def from_expr(cls, src: str, declared_min=None, declared_max=None,
                  interval=None) -> "OrderFunction":
        """Build from expression text in the variable t.

        If bounds are not given they are taken from a dense sample over
        ``interval`` (which is then required).
        """
        node = expr.parse(src, allowed_vars={"t"})
        if not expr.variables(node):
            value = expr.evaluate(node, {})
            return cls.constant(value)
        if declared_min is None or declared_max is None:
            if interval is None:
                raise InvalidParam(
                    "order bounds not declared and no interval to sample them from"
                )
            samples = expr.evaluate(node, {"t": _sample_grid(*interval)})
            declared_min = float(np.min(samples))
            declared_max = float(np.max(samples))
        return cls(
            fn=lambda t, _n=node: float(expr.evaluate(_n, {"t": t})),
            declared_min=float(declared_min),
            declared_max=float(declared_max),
            label=src,
            vec=lambda ts, _n=node: np.asarray(expr.evaluate(_n, {"t": np.asarray(ts, dtype=float)})),
        )

    def values(self, ts: np.ndarray) -> np.ndarray:
        if self.vec is not None:
            out = np.asarray(self.vec(ts), dtype=float)
            return np.broadcast_to(out, np.shape(ts)).copy() if out.shape != np.shape(ts) else out
        return np.array([self.fn(float(t)) for t in np.asarray(ts).ravel()]).reshape(np.shape(ts))


@dataclass(frozen=True)
class WarpFunction:
    """Time warp psi with analytic derivative, strictly increasing."""

    fn: Callable[[float], float]
    deriv: Callable[[float], float]
    label: str = "warp"
    vec: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)
    vec_deriv: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)

    def values(self, ts: np.ndarray) -> np.ndarray:
        if self.vec is not None:
            return np.asarray(self.vec(ts), dtype=float)
        return np.array([self.fn(float(t)) for t in np.asarray(ts).ravel()]).reshape(np.shape(ts))

    def deriv_values(self, ts: np.ndarray) -> np.ndarray:
        if self.vec_deriv is not None:
            out = np.asarray(self.vec_deriv(ts), dtype=float)
            if out.shape != np.shape(ts):
                out = np.broadcast_to(out, np.shape(ts)).copy()
            return out
        return np.array([self.deriv(float(t)) for t in np.asarray(ts).ravel()]).reshape(np.shape(ts))


def identity_warp() -> WarpFunction:
    return WarpFunction(
        fn=lambda t: t,
        deriv=lambda t: 1.0,
        label="t",
        vec=lambda ts: np.asarray(ts, dtype=float),
        vec_deriv=lambda ts: np.ones(np.shape(ts)),
    )


def log_warp() -> WarpFunction:
    """psi(t) = ln t; usable on intervals with a > 0."""
    return WarpFunction(
        fn=math.log,
        deriv=lambda t: 1.0 / t,
        label="ln(t)",
        vec=np.log,
        vec_deriv=lambda ts: 1.0 / np.asarray(ts, dtype=float),
    )


def sin_warp() -> WarpFunction:
    """psi(t) = sin t; usable on intervals where cos t > 0."""
    return WarpFunction(
        fn=math.sin,
        deriv=math.cos,
        label="sin(t)",
        vec=np.sin,
        vec_deriv=np.cos,
    )


def warp_from_expr(src: str) -> WarpFunction:
    node = expr.parse(src, allowed_vars={"t"})
    dnode = expr.derivative(node, "t")
    return WarpFunction(
        fn=lambda t, _n=node: float(expr.evaluate(_n, {"t": t})),
        deriv=lambda t, _d=dnode: float(expr.evaluate(_d, {"t": t})),
        label=src,
        vec=lambda ts, _n=node: np.asarray(expr.evaluate(_n, {"t": np.asarray(ts, dtype=float)})),
        vec_deriv=lambda ts, _d=dnode: np.broadcast_to(
            np.asarray(expr.evaluate(_d, {"t": np.asarray(ts, dtype=float)}), dtype=float),
            np.shape(ts),
        ).copy(),
    )


@dataclass(frozen=True)
class NormalizationFunction:
    """Normalization M on [0, 1] with M(0) = M(1) = 1 and M > 0."""

    fn: Callable[[float], float]
    label: str = "M"
    vec: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)

    @classmethod
    def one(cls) -> "NormalizationFunction":
        return cls(fn=lambda _a: 1.0, label="1",
                   vec=lambda xs: np.ones(np.shape(xs)))

    @classmethod
    def from_callable(cls, fn, label="M") -> "NormalizationFunction":
        return cls(fn=fn, label=label)

    @classmethod
    def from_expr(cls, src: str) -> "NormalizationFunction":
        node = expr.parse(src, allowed_vars={"alpha"})
        return cls(
            fn=lambda a, _n=node: float(expr.evaluate(_n, {"alpha": a})),
            label=src,
            vec=lambda xs, _n=node: np.broadcast_to(
                np.asarray(expr.evaluate(_n, {"alpha": np.asarray(xs, dtype=float)}), dtype=float),
                np.shape(xs),
            ).copy(),
        )

    def values(self, xs: np.ndarray) -> np.ndarray:
        if self.vec is not None:
            return np.asarray(self.vec(xs), dtype=float)
        return np.array([self.fn(float(x)) for x in np.asarray(xs).ravel()]).reshape(np.shape(xs))


@dataclass(frozen=True)
class KernelSpec:
    """Validated bundle defining the kernel H and its prefactor.

    gamma/beta of None mean the Mittag-Leffler exponent/order track alpha(t)
    at the output node (the variable-order special case).
    """

    gamma: float | None
    beta: float | None
    order: OrderFunction
    warp: WarpFunction
    norm: NormalizationFunction
    interval: tuple[float, float]

    def __post_init__(self):
        a, b = self.interval
        a, b = float(a), float(b)
        object.__setattr__(self, "interval", (a, b))
        if not (math.isfinite(a) and math.isfinite(b) and a < b):
            raise InvalidParam(f"interval must be finite with a < b, got {self.interval}")
        for name, value in (("gamma", self.gamma), ("beta", self.beta)):
            if value is not None and not (0.0 < float(value) <= 1.0):
                raise InvalidParam(f"{name} must lie in (0, 1], got {value}")
        ts = _sample_grid(a, b)
        self._validate_order(ts)
        self._validate_warp(ts)
        self._validate_norm()

    def _validate_order(self, ts: np.ndarray) -> None:
        values = self.order.values(ts)
        if not np.all(np.isfinite(values)):
            raise InvalidParam("order function is not finite on the interval")
        slack = 1e-12
        if np.min(values) < self.order.declared_min - slack or \
                np.max(values) > self.order.declared_max + slack:
            bad = int(np.argmax((values < self.order.declared_min - slack)
                                | (values > self.order.declared_max + slack)))
            raise InvalidParam(
                f"order function exits its declared bounds near t = {ts[bad]:.6g}"
            )

    def _validate_warp(self, ts: np.ndarray) -> None:
        try:
            # a warp that blows up on the interval should fail the finite
            # check below, not spray numpy warnings on the way there
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                psi = self.warp.values(ts)
                dpsi = self.warp.deriv_values(ts)
        except ValueError as exc:
            raise InvalidParam(f"warp undefined on the interval: {exc}") from exc
        if not (np.all(np.isfinite(psi)) and np.all(np.isfinite(dpsi))):
            raise InvalidParam("warp or its derivative is not finite on the interval")
        if np.min(dpsi) <= 0.0:
            bad = int(np.argmin(dpsi))
            raise InvalidParam(
                f"warp derivative must be positive; psi'({ts[bad]:.6g}) = {dpsi[bad]:.6g}"
            )
        # finite-difference consistency spot check at a few interior points
        a, b = self.interval
        h = 1e-6 * (b - a)
        probe = np.linspace(a + 2 * h, b - 2 * h, 17)
        fd = (self.warp.values(probe + h) - self.warp.values(probe - h)) / (2 * h)
        claimed = self.warp.deriv_values(probe)
        err = np.max(np.abs(fd - claimed) / np.maximum(1.0, np.abs(claimed)))
        if err > 1e-5:
            raise InvalidParam(
                f"warp derivative disagrees with finite differences (rel err {err:.2e})"
            )

    def _validate_norm(self) -> None:
        for endpoint in (0.0, 1.0):
            value = self.norm.fn(endpoint)
            if abs(value - 1.0) > 1e-12:
                raise InvalidParam(f"normalization must equal 1 at {endpoint}, got {value}")
        xs = _sample_grid(0.0, 1.0)
        values = self.norm.values(xs)
        if not np.all(np.isfinite(values)) or np.min(values) <= 0.0:
            raise InvalidParam("normalization must be positive and finite on [0, 1]")

    # --- kernel parameters at an output node --------------------------------

    def alpha_at(self, t: float) -> float:
        return float(self.order.fn(t))

    def gamma_at(self, alpha: float) -> float:
        return float(self.gamma) if self.gamma is not None else float(alpha)

    def beta_at(self, alpha: float) -> float:
        return float(self.beta) if self.beta is not None else float(alpha)


def _check_point(spec: KernelSpec, name: str, value: float) -> None:
    a, b = spec.interval
    slop = 1e-12 * max(1.0, b - a)
    if not (a - slop <= value <= b + slop):
        raise DomainError(f"{name} = {value} outside interval [{a}, {b}]")


def kernel_eval(spec: KernelSpec, t: float, tau: float) -> float:
    """Evaluate H(t, tau). Requires a <= tau <= t <= b."""
    t, tau = float(t), float(tau)
    _check_point(spec, "t", t)
    _check_point(spec, "tau", tau)
    if tau > t + 1e-12 * max(1.0, spec.interval[1] - spec.interval[0]):
        raise DomainError(f"tau = {tau} exceeds t = {t}")
    alpha = spec.alpha_at(t)
    one_minus = 1.0 - alpha
    if one_minus < SINGULAR_ORDER_EPS:
        raise SingularOrder(f"1 - alpha(t) = {one_minus:.3e} below threshold at t = {t}")
    dpsi = max(spec.warp.fn(t) - spec.warp.fn(tau), 0.0)
    gamma = spec.gamma_at(alpha)
    beta = spec.beta_at(alpha)
    argument = -alpha * dpsi**gamma / one_minus
    if beta == 1.0:
        return math.exp(argument)
    return ml_eval(MLParams(beta=beta), argument)


def kernel_values(spec: KernelSpec, t: float, taus: np.ndarray) -> np.ndarray:
    """Vectorized H(t, tau) over an array of tau <= t (one output node)."""
    taus = np.asarray(taus, dtype=float)
    alpha = spec.alpha_at(float(t))
    one_minus = 1.0 - alpha
    if one_minus < SINGULAR_ORDER_EPS:
        raise SingularOrder(f"1 - alpha(t) = {one_minus:.3e} below threshold at t = {t}")
    dpsi = np.maximum(spec.warp.fn(float(t)) - spec.warp.values(taus), 0.0)
    gamma = spec.gamma_at(alpha)
    beta = spec.beta_at(alpha)
    argument = -(alpha / one_minus) * dpsi**gamma
    return _ml_neg_array(beta, argument)


def kernel_prefactor(spec: KernelSpec, t: float) -> float:
    """M(alpha(t)) / (1 - alpha(t)); raises SingularOrder near alpha = 1."""
    alpha = spec.alpha_at(float(t))
    one_minus = 1.0 - alpha
    if one_minus < SINGULAR_ORDER_EPS:
        raise SingularOrder(f"1 - alpha(t) = {one_minus:.3e} below threshold at t = {t}")
    return float(spec.norm.fn(alpha)) / one_minus
