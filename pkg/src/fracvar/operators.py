"""The six nonlocal operators, on uniform grids.

Two numerical backbones cover all of them:

* The bounded-kernel family (aux_integral_1/2 and the derivatives built on
  them) integrates H(t, tau) against the data with composite trapezoid
  weights; a midpoint variant exists for cross-checking, and the reported
  quad_error_estimate is the sup difference between the two. Kernel rows
  collapse to a single 1-d Mittag-Leffler table when the order is constant,
  gamma/beta are fixed, and psi is uniformly spaced (Toeplitz structure).

* The weakly singular family (the variable-order integral and the classical
  derivatives) substitutes x = psi(tau) and integrates the power singularity
  exactly against piecewise-linear data (product integration), so the
  endpoint singularity costs no accuracy.

Outer d/dt steps use second-order central differences with one-sided stencils
at the interval ends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateGrid,
    InvalidParam,
    QuadratureFailure,
    SingularOrder,
)
from .grids import GridFunction, fd_deriv
from .kernel import (
    SINGULAR_ORDER_EPS,
    KernelSpec,
    NormalizationFunction,
    OrderFunction,
    WarpFunction,
    identity_warp,
    log_warp,
    sin_warp,
)
from .mlf import _ml_neg_array

SCHEMES = ("product_trapezoid", "product_midpoint")


@dataclass(frozen=True)
class OperatorResult:
    values: GridFunction
    quad_error_estimate: float
    scheme: str

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise InvalidParam(f"unknown scheme {self.scheme!r}")
        if not (self.quad_error_estimate >= 0.0):
            raise InvalidParam("quad_error_estimate must be >= 0")


def _check_inputs(spec: KernelSpec, f: GridFunction, scheme: str) -> None:
    if scheme not in SCHEMES:
        raise InvalidParam(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    a, b = spec.interval
    slop = 1e-12 * max(1.0, b - a)
    if abs(f.a - a) > slop or abs(f.b - b) > slop:
        raise InvalidParam(
            f"grid interval [{f.a}, {f.b}] does not match spec interval [{a}, {b}]"
        )


def _alphas_checked(spec: KernelSpec, grid: np.ndarray) -> np.ndarray:
    alphas = spec.order.values(grid)
    if np.max(alphas) > 1.0 - SINGULAR_ORDER_EPS:
        bad = int(np.argmax(alphas))
        raise SingularOrder(
            f"1 - alpha(t) = {1.0 - alphas[bad]:.3e} below threshold at t = {grid[bad]:.6g}"
        )
    return alphas


def _prefactors(spec: KernelSpec, alphas: np.ndarray) -> np.ndarray:
    return spec.norm.values(alphas) / (1.0 - alphas)


class _KernelTable:
    """Per-output-node kernel rows H(t_i, .) at grid nodes and midpoints.

    Exploits the Toeplitz structure when the kernel parameters are constant
    and psi lands on a uniform progression: one 1-d Mittag-Leffler table then
    serves every row.
    """

    def __init__(self, spec: KernelSpec, grid: np.ndarray):
        self.spec = spec
        self.grid = grid
        self.psis = spec.warp.values(grid)
        self.alphas = _alphas_checked(spec, grid)
        self._mid = 0.5 * (grid[:-1] + grid[1:])
        self._psim = spec.warp.values(self._mid)
        self._base = None
        self._base_mid = None
        steps = np.diff(self.psis)
        uniform = steps.size > 0 and np.max(np.abs(steps - steps[0])) <= 1e-12 * max(
            1.0, abs(steps[0])
        )
        if (
            uniform
            and spec.order.is_constant
            and spec.gamma is not None
            and spec.beta is not None
        ):
            step = float(steps[0])
            alpha = float(self.alphas[0])
            lam = alpha / (1.0 - alpha)
            k = np.arange(grid.size, dtype=float)
            self._base = _ml_neg_array(
                float(spec.beta), -lam * (k * step) ** float(spec.gamma)
            )
            km = k[:-1] + 0.5
            self._base_mid = _ml_neg_array(
                float(spec.beta), -lam * (km * step) ** float(spec.gamma)
            )

    def _fresh_row(self, i: int, psi_pts: np.ndarray) -> np.ndarray:
        alpha = float(self.alphas[i])
        lam = alpha / (1.0 - alpha)
        dpsi = np.maximum(self.psis[i] - psi_pts, 0.0)
        gamma = self.spec.gamma_at(alpha)
        beta = self.spec.beta_at(alpha)
        return _ml_neg_array(beta, -lam * dpsi**gamma)

    def row(self, i: int) -> np.ndarray:
        """H(t_i, tau_j) for j = 0..i."""
        if self._base is not None:
            return self._base[i::-1]
        return self._fresh_row(i, self.psis[: i + 1])

    def mid_row(self, i: int) -> np.ndarray:
        """H(t_i, m_j) at panel midpoints m_j, j = 0..i-1."""
        if i == 0:
            return np.empty(0)
        if self._base_mid is not None:
            return self._base_mid[i - 1 :: -1]
        return self._fresh_row(i, self._psim[:i])


def _convolve_nodes(table: _KernelTable, data: np.ndarray, data_mid: np.ndarray,
                    h: float, need_mid: bool) -> tuple[np.ndarray, np.ndarray | None]:
    """Composite trapezoid and (optionally) midpoint sums of H * data."""
    n = table.grid.size - 1
    trap = np.zeros(n + 1)
    mid = np.zeros(n + 1) if need_mid else None
    for i in range(1, n + 1):
        row = table.row(i)
        g = row * data[: i + 1]
        trap[i] = h * (np.sum(g) - 0.5 * (g[0] + g[i]))
        if need_mid:
            mid[i] = h * float(np.sum(table.mid_row(i) * data_mid[:i]))
    return trap, mid


def _finish(grid: np.ndarray, trap: np.ndarray, mid: np.ndarray | None,
            scheme: str, error_budget: float | None, label: str) -> OperatorResult:
    estimate = float(np.max(np.abs(trap - mid))) if mid is not None else 0.0
    if error_budget is not None and estimate > error_budget:
        raise QuadratureFailure(
            f"cross-scheme estimate {estimate:.3e} exceeds budget {error_budget:.3e}"
        )
    chosen = trap if scheme == "product_trapezoid" else mid
    out = GridFunction(grid=grid, values=chosen, label=label)
    return OperatorResult(values=out, quad_error_estimate=estimate, scheme=scheme)


def _aux1_both(spec: KernelSpec, f: GridFunction,
               table: _KernelTable) -> tuple[np.ndarray, np.ndarray]:
    dpsiv = spec.warp.deriv_values(f.grid)
    dpsiv_mid = spec.warp.deriv_values(table._mid)
    f_mid = 0.5 * (f.values[:-1] + f.values[1:])
    return _convolve_nodes(table, dpsiv * f.values, dpsiv_mid * f_mid, f.h,
                           need_mid=True)


def _aux2_both(spec: KernelSpec, f: GridFunction,
               table: _KernelTable) -> tuple[np.ndarray, np.ndarray]:
    fp = f.deriv_values()
    fp_mid = 0.5 * (fp[:-1] + fp[1:])
    return _convolve_nodes(table, fp, fp_mid, f.h, need_mid=True)


def aux_integral_1(spec: KernelSpec, f: GridFunction, *,
                   scheme: str = "product_trapezoid",
                   error_budget: float | None = None) -> OperatorResult:
    """Integral of psi'(tau) H(t, tau) f(tau) from a to t, per node."""
    _check_inputs(spec, f, scheme)
    trap, mid = _aux1_both(spec, f, _KernelTable(spec, f.grid))
    return _finish(f.grid, trap, mid, scheme, error_budget, f"I1[{f.label}]")


def aux_integral_2(spec: KernelSpec, f: GridFunction, *,
                   scheme: str = "product_trapezoid",
                   error_budget: float | None = None) -> OperatorResult:
    """Integral of H(t, tau) f'(tau) from a to t, per node."""
    _check_inputs(spec, f, scheme)
    trap, mid = _aux2_both(spec, f, _KernelTable(spec, f.grid))
    return _finish(f.grid, trap, mid, scheme, error_budget, f"I2[{f.label}]")


def rl_deriv_ns(spec: KernelSpec, f: GridFunction, *,
                scheme: str = "product_trapezoid",
                error_budget: float | None = None) -> OperatorResult:
    """Bounded-kernel RL-type derivative: prefactor/psi' * d/dt of aux_integral_1."""
    _check_inputs(spec, f, scheme)
    table = _KernelTable(spec, f.grid)
    inner_t, inner_m = _aux1_both(spec, f, table)
    factors = _prefactors(spec, table.alphas) / spec.warp.deriv_values(f.grid)
    trap = factors * fd_deriv(inner_t, f.h)
    mid = factors * fd_deriv(inner_m, f.h)
    return _finish(f.grid, trap, mid, scheme, error_budget, f"D_rl[{f.label}]")


def caputo_deriv_ns(spec: KernelSpec, f: GridFunction, *,
                    scheme: str = "product_trapezoid",
                    error_budget: float | None = None) -> OperatorResult:
    """Bounded-kernel Caputo-type derivative: prefactor * aux_integral_2."""
    _check_inputs(spec, f, scheme)
    table = _KernelTable(spec, f.grid)
    trap, mid = _aux2_both(spec, f, table)
    factors = _prefactors(spec, table.alphas)
    return _finish(f.grid, factors * trap, factors * mid, scheme, error_budget,
                   f"D_c[{f.label}]")


# --- weakly singular family ---------------------------------------------------


def _power_moments(U: np.ndarray, mu) -> tuple[np.ndarray, np.ndarray]:
    """Exact panel moments of (psi(t) - x)^(mu-1) against linear data.

    U holds psi(t) - psi(tau_j) for j = 0..i (decreasing to 0). Returns
    (m0, m1) per panel, where m0 integrates the weight and m1 integrates
    (x - x_j) times the weight. mu may be a scalar or a per-panel array.
    """
    mu = np.asarray(mu, dtype=float)
    P0 = U[:-1] ** mu
    P1 = U[1:] ** mu
    m0 = (P0 - P1) / mu
    Q0 = U[:-1] ** (mu + 1.0)
    Q1 = U[1:] ** (mu + 1.0)
    m1 = U[:-1] * m0 - (Q0 - Q1) / (mu + 1.0)
    return m0, m1


def _product_integral(psis: np.ndarray, data: np.ndarray, i: int, mu,
                      scheme: str) -> float:
    """Integral over [psi_0, psi_i] of (psi_i - x)^(mu-1) g(x) dx.

    g is interpolated from data: piecewise linear for product_trapezoid,
    piecewise constant at panel means for product_midpoint. The weight's
    integrable singularity at x = psi_i is handled exactly.
    """
    if i == 0:
        return 0.0
    U = psis[i] - psis[: i + 1]
    U[-1] = 0.0
    m0, m1 = _power_moments(U, mu)
    if scheme == "product_midpoint":
        g_mid = 0.5 * (data[:i] + data[1 : i + 1])
        return float(np.sum(g_mid * m0))
    delta = psis[1 : i + 1] - psis[:i]
    slope = (data[1 : i + 1] - data[:i]) / delta
    return float(np.sum(data[:i] * m0 + slope * m1))


def rl_integral_varorder(spec: KernelSpec, f: GridFunction, *,
                         exponent_at: str = "t",
                         scheme: str = "product_trapezoid",
                         error_budget: float | None = None) -> OperatorResult:
    """Variable-order integral with respect to psi.

    With exponent_at="t" (the default) the order alpha(t) enters both the
    exponent and the Gamma prefactor, which keeps the two consistent.
    exponent_at="tau" reproduces the mixed convention where the exponent
    follows alpha(tau) (frozen per panel at its time midpoint) while the
    prefactor still follows alpha(t). Identical for constant orders.
    """
    _check_inputs(spec, f, scheme)
    if exponent_at not in ("t", "tau"):
        raise InvalidParam(f"exponent_at must be 't' or 'tau', got {exponent_at!r}")
    grid = f.grid
    psis = spec.warp.values(grid)
    alphas = spec.order.values(grid)
    if np.min(alphas) <= 0.0:
        raise InvalidParam("order must stay positive for the integral")
    mid_alphas = None
    if exponent_at == "tau":
        mid_alphas = spec.order.values(0.5 * (grid[:-1] + grid[1:]))
    trap = np.zeros(grid.size)
    mid = np.zeros(grid.size)
    for i in range(1, grid.size):
        mu = float(alphas[i]) if mid_alphas is None else mid_alphas[:i]
        scale = 1.0 / math.gamma(float(alphas[i]))
        trap[i] = scale * _product_integral(psis, f.values, i, mu, "product_trapezoid")
        mid[i] = scale * _product_integral(psis, f.values, i, mu, "product_midpoint")
    return _finish(grid, trap, mid, scheme, error_budget, f"I[{f.label}]")


def rl_deriv_classical(spec: KernelSpec, f: GridFunction, *,
                       scheme: str = "product_trapezoid",
                       error_budget: float | None = None) -> OperatorResult:
    """Classical RL-type derivative: differentiate the weakly singular integral.

    Inner integral of psi'(tau) (psi(t)-psi(tau))^(-alpha(t)) f(tau) per node
    (product integration in x = psi(tau)), then d/dt by finite differences,
    then division by Gamma(1-alpha(t)) psi'(t).
    """
    _check_inputs(spec, f, scheme)
    if f.n < 16:
        raise DegenerateGrid(f"classical derivative needs n >= 16, got {f.n}")
    grid = f.grid
    psis = spec.warp.values(grid)
    alphas = _alphas_checked(spec, grid)
    inner_t = np.zeros(grid.size)
    inner_m = np.zeros(grid.size)
    for i in range(1, grid.size):
        mu = 1.0 - float(alphas[i])
        inner_t[i] = _product_integral(psis, f.values, i, mu, "product_trapezoid")
        inner_m[i] = _product_integral(psis, f.values, i, mu, "product_midpoint")
    gammas = np.array([math.gamma(1.0 - float(al)) for al in alphas])
    factors = 1.0 / (gammas * spec.warp.deriv_values(grid))
    trap = factors * fd_deriv(inner_t, f.h)
    mid = factors * fd_deriv(inner_m, f.h)
    return _finish(grid, trap, mid, scheme, error_budget, f"D_rl_cl[{f.label}]")


def caputo_deriv_classical(spec: KernelSpec, f: GridFunction, *,
                           standard_psi_caputo: bool = False,
                           scheme: str = "product_trapezoid",
                           error_budget: float | None = None) -> OperatorResult:
    """Classical Caputo-type derivative against the power kernel.

    Integrates (psi(t)-psi(tau))^(-alpha(t)) f'(tau) dtau / Gamma(1-alpha(t)).
    After substituting x = psi(tau) this is the product integral of
    f'(tau(x)) / psi'(tau(x)), which is also exactly the standard
    psi-Caputo form (the psi' from the measure cancels the 1/psi' in
    d f/d psi), so standard_psi_caputo changes nothing; both spellings are
    accepted to make the equivalence explicit.
    """
    del standard_psi_caputo
    _check_inputs(spec, f, scheme)
    grid = f.grid
    psis = spec.warp.values(grid)
    alphas = _alphas_checked(spec, grid)
    data = f.deriv_values() / spec.warp.deriv_values(grid)
    trap = np.zeros(grid.size)
    mid = np.zeros(grid.size)
    for i in range(1, grid.size):
        mu = 1.0 - float(alphas[i])
        scale = 1.0 / math.gamma(mu)
        trap[i] = scale * _product_integral(psis, data, i, mu, "product_trapezoid")
        mid[i] = scale * _product_integral(psis, data, i, mu, "product_midpoint")
    return _finish(grid, trap, mid, scheme, error_budget, f"D_c_cl[{f.label}]")


# --- special-case factory -----------------------------------------------------

SPECIAL_CASES = (
    "variable_ml",
    "atangana",
    "yang_machado",
    "caputo_fabrizio",
    "unit_norm_exp",
    "log_warp",
    "sin_warp",
)


def _as_order(alpha) -> OrderFunction:
    if isinstance(alpha, OrderFunction):
        return alpha
    return OrderFunction.constant(float(alpha))


def make_special_case(name: str, alpha, M: NormalizationFunction | None = None,
                      interval=(0.0, 1.0), *, gamma: float | None = None,
                      beta: float | None = None) -> KernelSpec:
    """KernelSpec for a named special case of the bounded-kernel derivatives.

    variable_ml      Mittag-Leffler order and exponent both track alpha(t).
    atangana         constant alpha, gamma = beta = alpha, psi = t.
    yang_machado     constant alpha, gamma = beta = 1, psi = t (RL form).
    caputo_fabrizio  constant alpha, gamma = beta = 1, psi = t (Caputo form).
    unit_norm_exp    M forced to 1, gamma = beta = 1, psi = t.
    log_warp         psi = ln t (needs a > 0); gamma/beta default to 1.
    sin_warp         psi = sin t on intervals with cos t > 0; defaults as above.

    yang_machado and caputo_fabrizio build the same kernel; they differ only
    in which derivative form (rl_deriv_ns vs caputo_deriv_ns) the name refers
    to.
    """
    if name not in SPECIAL_CASES:
        raise InvalidParam(f"unknown special case {name!r}; choose from {SPECIAL_CASES}")
    order = _as_order(alpha)
    norm = M if M is not None else NormalizationFunction.one()
    warp: WarpFunction = identity_warp()

    if name == "variable_ml":
        if gamma is not None or beta is not None:
            raise InvalidParam("variable_ml fixes gamma and beta to the order itself")
        gamma_v = beta_v = None
    elif name == "atangana":
        if not order.is_constant:
            raise InvalidParam("atangana requires a constant order")
        if gamma is not None or beta is not None:
            raise InvalidParam("atangana fixes gamma = beta = alpha")
        gamma_v = beta_v = float(order.fn(interval[0]))
    elif name in ("yang_machado", "caputo_fabrizio"):
        if not order.is_constant:
            raise InvalidParam(f"{name} requires a constant order")
        if gamma not in (None, 1.0) or beta not in (None, 1.0):
            raise InvalidParam(f"{name} fixes gamma = beta = 1")
        gamma_v = beta_v = 1.0
    elif name == "unit_norm_exp":
        if M is not None:
            raise InvalidParam("unit_norm_exp fixes M to 1; do not pass M")
        if gamma not in (None, 1.0) or beta not in (None, 1.0):
            raise InvalidParam("unit_norm_exp fixes gamma = beta = 1")
        gamma_v = beta_v = 1.0
    else:
        gamma_v = 1.0 if gamma is None else float(gamma)
        beta_v = 1.0 if beta is None else float(beta)
        if name == "log_warp":
            if interval[0] <= 0.0:
                raise InvalidParam("log_warp requires a > 0")
            warp = log_warp()
        else:
            warp = sin_warp()

    return KernelSpec(gamma=gamma_v, beta=beta_v, order=order, warp=warp,
                      norm=norm, interval=(float(interval[0]), float(interval[1])))
