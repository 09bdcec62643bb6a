"""Numerical verification suites for the operator estimates.

Each check_* function takes a SuiteConfig and returns a SuiteReport listing
any observed violations; nothing raises on a failed estimate, so callers can
aggregate. default_suite_run wires the canonical configurations (kernels,
corpora, grids, tolerances) used by the command-line `verify` command.

The test-function corpus is fixed: {1, t, t^2, sin(pi t), cos t, e^t} plus
seeded random trigonometric polynomials of degree <= 6 whose coefficients
decay like 1/j^2. The decay keeps derivative norms moderate, which is what
the sup-norm estimate needs; see the boundedness notes below.

Two estimates need calibrated context:

* The sup-norm bound (prefactor at b times the sup of f) is not a theorem
  for arbitrary data: the Caputo-type operator applied to strongly
  oscillatory f can exceed it (f = -cos(pi t) under the exponential kernel
  at order 0.5 reaches about 1.24x the bound). The canonical boundedness
  run therefore uses order 0.9 on [0,1] with the identity warp, where the
  memory kernel is short-ranged and the corpus satisfies the bound with
  real margin; other warps run informationally and their failures are
  reported, not asserted away.

* The Lipschitz constant contains an unspecified factor; the suite
  calibrates it empirically from the observed worst ratio and asserts the
  calibration is stable under grid refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np

from . import fde
from .errors import InvalidParam
from .grids import GridFunction
from .kernel import (
    KernelSpec,
    NormalizationFunction,
    OrderFunction,
    identity_warp,
    kernel_eval,
    kernel_prefactor,
    log_warp,
    sin_warp,
)
from .operators import (
    _KernelTable,
    aux_integral_1,
    aux_integral_2,
    caputo_deriv_ns,
    rl_deriv_ns,
)
from .parallel import map_ordered

DEFAULT_TOLS: Mapping[str, float] = {
    "boundedness": 1e-9,
    "lipschitz": 0.05,
    "limit_interchange": 1e-9,
    "axiom_limits": 1e-3,
    "max_point": 1e-6,
    "vanish_ratio": 3.0,
    "comparison": 1e-7,
}

SUITE_NAMES = (
    "boundedness",
    "lipschitz",
    "limit_interchange",
    "axiom_limits",
    "max_point",
    "vanish_at_a",
    "comparison",
)


@dataclass(frozen=True)
class TestFunction:
    label: str
    fn: Callable[[float], float]
    deriv: Callable[[float], float]

    def on(self, a: float, b: float, n: int) -> GridFunction:
        return GridFunction.from_callable(self.fn, a, b, n, deriv=self.deriv,
                                          label=self.label)


def _trig_poly(seed: int, index: int) -> TestFunction:
    rng = np.random.default_rng(seed * 1000 + index)
    j = np.arange(1, 7, dtype=float)
    a_sin = rng.standard_normal(6) / j**2
    a_cos = rng.standard_normal(6) / j**2

    def fn(t, _s=a_sin, _c=a_cos, _j=j):
        return float(np.sum(_s * np.sin(_j * math.pi * t)
                            + _c * np.cos(_j * math.pi * t)))

    def deriv(t, _s=a_sin, _c=a_cos, _j=j):
        return float(np.sum(_j * math.pi * (_s * np.cos(_j * math.pi * t)
                                            - _c * np.sin(_j * math.pi * t))))

    return TestFunction(label=f"trig[{seed}:{index}]", fn=fn, deriv=deriv)


def standard_corpus(seed: int = 0, random_count: int = 6) -> tuple[TestFunction, ...]:
    fixed = (
        TestFunction("one", lambda t: 1.0, lambda t: 0.0),
        TestFunction("t", lambda t: t, lambda t: 1.0),
        TestFunction("t^2", lambda t: t * t, lambda t: 2.0 * t),
        TestFunction("sin_pi_t", lambda t: math.sin(math.pi * t),
                     lambda t: math.pi * math.cos(math.pi * t)),
        TestFunction("cos_t", math.cos, lambda t: -math.sin(t)),
        TestFunction("exp_t", math.exp, math.exp),
    )
    randoms = tuple(_trig_poly(seed, k) for k in range(random_count))
    return fixed + randoms


@dataclass(frozen=True)
class SuiteConfig:
    spec: KernelSpec
    test_functions: tuple[TestFunction, ...]
    epsilons: tuple[float, ...] = (1e-2, 1e-4, 1e-6)
    seq_len: int = 16
    tol_map: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLS))
    n: int = 512
    seed: int = 0

    def __post_init__(self):
        if self.seq_len < 8:
            raise InvalidParam(f"seq_len must be >= 8, got {self.seq_len}")
        for name, tol in self.tol_map.items():
            if not tol > 0:
                raise InvalidParam(f"tolerance {name!r} must be positive")

    def tol(self, name: str) -> float:
        return float(self.tol_map.get(name, DEFAULT_TOLS[name]))


@dataclass
class SuiteReport:
    suite_name: str
    cases_run: int
    failures: list
    notes: list = field(default_factory=list)
    informational: bool = False

    @property
    def passed(self) -> bool:
        return not self.failures


def _failure(case: str, observed: float, bound: float) -> dict:
    return {"case": case, "observed": observed, "bound": bound,
            "margin": bound - observed}


# --- boundedness (sup-norm estimate) --------------------------------------------


def check_boundedness(cfg: SuiteConfig) -> SuiteReport:
    a, b = cfg.spec.interval
    alpha_b = cfg.spec.alpha_at(b)
    factor = kernel_prefactor(cfg.spec, b)
    tol = cfg.tol("boundedness")

    def one_case(tf: TestFunction):
        f = tf.on(a, b, cfg.n)
        fnorm = float(np.max(np.abs(f.values)))
        bound = factor * fnorm
        out = []
        for opname, op in (("rl", rl_deriv_ns), ("caputo", caputo_deriv_ns)):
            observed = float(np.max(np.abs(op(cfg.spec, f).values.values)))
            if observed > bound * (1.0 + tol):
                out.append(_failure(f"{tf.label}:{opname}", observed, bound))
        return out

    failures = []
    for chunk in map_ordered(one_case, cfg.test_functions):
        failures.extend(chunk)
    report = SuiteReport("boundedness", cases_run=2 * len(cfg.test_functions),
                         failures=failures)
    report.notes.append(
        f"bound factor M(alpha(b))/(1-alpha(b)) = {factor:.6g} (alpha(b) = {alpha_b:.6g})"
    )
    return report


# --- Lipschitz estimate with calibrated constant ---------------------------------


def _max_ratio(cfg: SuiteConfig, n: int) -> float:
    a, b = cfg.spec.interval
    grids = [tf.on(a, b, n) for tf in cfg.test_functions]
    worst = 0.0
    for i in range(len(grids)):
        for j in range(i + 1, len(grids)):
            diff = grids[i].values - grids[j].values
            dnorm = float(np.max(np.abs(diff)))
            if dnorm < 1e-14:
                continue  # degenerate pair, skipped
            gf = GridFunction(grid=grids[i].grid, values=diff,
                              label=f"{grids[i].label}-{grids[j].label}")
            for op in (rl_deriv_ns, caputo_deriv_ns):
                onorm = float(np.max(np.abs(op(cfg.spec, gf).values.values)))
                worst = max(worst, onorm / dnorm)
    return worst


def check_lipschitz(cfg: SuiteConfig) -> SuiteReport:
    a, b = cfg.spec.interval
    ratio_n = _max_ratio(cfg, cfg.n)
    ratio_2n = _max_ratio(cfg, 2 * cfg.n)
    denom = kernel_prefactor(cfg.spec, b) * kernel_eval(cfg.spec, b, a) * (b - a)
    theta_n = ratio_n / denom
    theta_2n = ratio_2n / denom
    failures = []
    if not (math.isfinite(ratio_n) and math.isfinite(ratio_2n)):
        failures.append(_failure("ratio finite", math.inf, math.inf))
    rel = abs(theta_2n - theta_n) / max(theta_n, 1e-30)
    if rel > cfg.tol("lipschitz"):
        failures.append(_failure("theta refinement stability", rel,
                                 cfg.tol("lipschitz")))
    pairs = len(cfg.test_functions) * (len(cfg.test_functions) - 1) // 2
    report = SuiteReport("lipschitz", cases_run=2 * pairs, failures=failures)
    report.notes.append(
        f"calibrated theta = {theta_n:.6g} (n={cfg.n}), {theta_2n:.6g} (n={2 * cfg.n})"
    )
    return report


# --- limit interchange (sequence of Taylor partial sums) -------------------------


def _taylor_partial(k: int) -> Callable[[float], float]:
    def fn(t: float, _k=k) -> float:
        term = 1.0
        total = 1.0
        for j in range(1, _k + 1):
            term *= t / j
            total += term
        return total

    return fn


def check_limit_interchange(cfg: SuiteConfig) -> SuiteReport:
    """Gaps between operator values on f_k and on the limit f = e^t.

    By linearity the gap ||Op f_k - Op f|| is evaluated as ||Op(f_k - f)||;
    forming the two operator outputs first and subtracting would measure
    summation roundoff (~1e-13) against Taylor-tail bounds that reach 1e-15
    by k = 16, drowning the actual estimate. The reported final-gap note
    uses the subtracted form, which is the quantity the tolerance governs.
    """
    a, b = cfg.spec.interval
    psi_span = cfg.spec.warp.fn(b) - cfg.spec.warp.fn(a)
    limit = GridFunction.from_callable(math.exp, a, b, cfg.n, deriv=math.exp,
                                       label="exp")
    failures = []
    notes = []
    last_gaps = {}
    prev = {name: math.inf for name in ("I1", "I2", "D_rl", "D_c")}
    cases = 0
    for k in range(1, cfg.seq_len + 1):
        fk = _taylor_partial(k)
        fk_prev = _taylor_partial(k - 1)  # d/dt of the partial sum
        part = GridFunction.from_callable(fk, a, b, cfg.n, deriv=fk_prev,
                                          label=f"taylor{k}")
        diff = GridFunction(grid=limit.grid, values=part.values - limit.values,
                            derivs=part.derivs - limit.derivs,
                            label=f"taylor{k}-exp")
        dnorm = float(np.max(np.abs(diff.values)))
        bound = psi_span * dnorm
        gaps = {
            "I1": float(np.max(np.abs(aux_integral_1(cfg.spec, diff).values.values))),
            "I2": float(np.max(np.abs(aux_integral_2(cfg.spec, diff).values.values))),
            "D_rl": float(np.max(np.abs(rl_deriv_ns(cfg.spec, diff).values.values))),
            "D_c": float(np.max(np.abs(caputo_deriv_ns(cfg.spec, diff).values.values))),
        }
        cases += len(gaps)
        if gaps["I1"] > bound * (1.0 + 1e-10) + 1e-300:
            failures.append(_failure(f"I1 proof bound k={k}", gaps["I1"], bound))
        for name, value in gaps.items():
            # 1e-12 absolute slack: past k ~ 12 the gaps sit on the roundoff
            # floor of the subtracted data and may wobble there
            if value > prev[name] * (1.0 + 1e-6) + 1e-12:
                failures.append(_failure(f"{name} monotone decay k={k}", value,
                                         prev[name]))
            prev[name] = value
        last_gaps = gaps
    tol = cfg.tol("limit_interchange")
    for name, value in last_gaps.items():
        if value > tol:
            failures.append(_failure(f"{name} final gap", value, tol))
    notes.append(
        "final gaps: " + ", ".join(f"{k}={v:.3e}" for k, v in last_gaps.items())
    )
    report = SuiteReport("limit_interchange", cases_run=cases, failures=failures)
    report.notes.extend(notes)
    return report


# --- order limits ----------------------------------------------------------------


def _with_order(spec: KernelSpec, value: float) -> KernelSpec:
    return replace(spec, order=OrderFunction.constant(value))


def check_axiom_limits(cfg: SuiteConfig) -> SuiteReport:
    """Kernel and operator behavior as the order approaches 0 and 1.

    The order->0 statements are asserted (kernel -> 1, Caputo type ->
    f(t)-f(a), RL type -> f(t), with errors shrinking along epsilons down to
    the grid floor). The order->1 trend toward f' depends on the choice of
    normalization and is recorded in the notes, never asserted.
    """
    a, b = cfg.spec.interval
    failures = []
    notes = []
    cases = 0
    tol = cfg.tol("axiom_limits")

    kernel_devs = []
    for eps in sorted(cfg.epsilons, reverse=True):
        spec_eps = _with_order(cfg.spec, max(eps, 1e-8))
        table = _KernelTable(spec_eps, np.linspace(a, b, cfg.n + 1))
        dev = 0.0
        for i in range(0, cfg.n + 1, max(1, cfg.n // 128)):
            row = table.row(i)
            dev = max(dev, float(np.max(np.abs(row - 1.0))))
        kernel_devs.append((eps, dev))
        cases += 1
        span = spec_eps.warp.fn(b) - spec_eps.warp.fn(a)
        ceiling = 3.0 * max(1.0, span ** spec_eps.gamma_at(eps)) * eps + 1e-12
        if dev > ceiling:
            failures.append(_failure(f"kernel deviation eps={eps:g}", dev, ceiling))
    notes.append("kernel |H-1|: " + ", ".join(f"{e:g}->{d:.3e}"
                                              for e, d in kernel_devs))

    floor = 50.0 / cfg.n**2 + 1e-9
    for tf in cfg.test_functions:
        errs_c = []
        errs_rl = []
        for eps in sorted(cfg.epsilons, reverse=True):
            spec_eps = _with_order(cfg.spec, max(eps, 1e-8))
            f = tf.on(a, b, cfg.n)
            dc = caputo_deriv_ns(spec_eps, f).values.values
            drl = rl_deriv_ns(spec_eps, f).values.values
            errs_c.append(float(np.max(np.abs(dc - (f.values - f.values[0])))))
            errs_rl.append(float(np.max(np.abs(drl - f.values))))
            cases += 2
        scale = max(1.0, float(np.max(np.abs(tf.on(a, b, cfg.n).values))))
        for label, errs in (("caputo", errs_c), ("rl", errs_rl)):
            for k in range(1, len(errs)):
                if errs[k] > errs[k - 1] * (1.0 + 1e-6) + floor * scale:
                    failures.append(_failure(
                        f"{tf.label}:{label} monotone in eps", errs[k], errs[k - 1]))
            if errs[-1] > tol * scale:
                failures.append(_failure(f"{tf.label}:{label} limit error",
                                         errs[-1], tol * scale))

    trend = []
    # coarse grid: every node of these tables rides the spectral fallback,
    # and the note is qualitative anyway
    trend_n = min(cfg.n, 128)
    for delta in (1e-1, 3e-2, 1e-2):
        spec_hi = _with_order(cfg.spec, 1.0 - delta)
        f = cfg.test_functions[1].on(a, b, trend_n)  # f(t) = t
        dc = caputo_deriv_ns(spec_hi, f).values.values
        trend.append(f"alpha=1-{delta:g}: D_c[t](mid) = {dc[trend_n // 2]:.6g}")
    notes.append("order->1 trend toward f' (reported only): " + "; ".join(trend))

    report = SuiteReport("axiom_limits", cases_run=cases, failures=failures)
    report.notes.extend(notes)
    return report


# --- maximum-point inequality ------------------------------------------------


def check_max_point(cfg: SuiteConfig) -> SuiteReport:
    """Lower bound on the Caputo-type derivative at the grid argmax.

    The underlying statement collapses the Mittag-Leffler order onto the
    kernel exponent, so the check runs with beta set to gamma. The grid
    argmax stands in for the maximum point; monotone functions simply land
    at an endpoint, where the inequality still makes sense (equality at a).
    """
    spec = cfg.spec
    if spec.beta != spec.gamma:
        spec = replace(spec, beta=spec.gamma)
    a, b = spec.interval
    tol = cfg.tol("max_point")
    failures = []
    for tf in cfg.test_functions:
        f = tf.on(a, b, cfg.n)
        i0 = int(np.argmax(f.values))
        t0 = float(f.grid[i0])
        value = float(caputo_deriv_ns(spec, f).values.values[i0])
        if i0 == 0:
            lower = 0.0
        else:
            lower = (kernel_prefactor(spec, t0) * kernel_eval(spec, t0, a)
                     * (f.values[i0] - f.values[0]))
        if value < lower - tol:
            failures.append(_failure(f"{tf.label} vs kernel bound", value, lower))
        if value < -tol:
            failures.append(_failure(f"{tf.label} nonnegative", value, 0.0))
    return SuiteReport("max_point", cases_run=len(cfg.test_functions),
                       failures=failures)


# --- vanishing at the left endpoint -------------------------------------------


def check_vanish_at_a(cfg: SuiteConfig) -> SuiteReport:
    """Caputo-type value at t = a is exactly zero and grows like O(h) after it."""
    a, b = cfg.spec.interval
    tol_ratio = cfg.tol("vanish_ratio")
    failures = []
    cases = 0
    for tf in cfg.test_functions:
        ratios = []
        ceiling = 0.0
        for n in (256, 512, 1024):
            f = tf.on(a, b, n)
            out = caputo_deriv_ns(cfg.spec, f).values.values
            cases += 1
            if out[0] != 0.0:
                failures.append(_failure(f"{tf.label} exact zero n={n}",
                                         abs(out[0]), 0.0))
            ratios.append(abs(float(out[1])) / f.h)
            fp_max = float(np.max(np.abs(f.deriv_values())))
            ceiling = max(ceiling,
                          tol_ratio * kernel_prefactor(cfg.spec, a) * fp_max + 1e-12)
        worst = max(ratios)
        if worst > ceiling:
            failures.append(_failure(f"{tf.label} first-node ratio", worst, ceiling))
    return SuiteReport("vanish_at_a", cases_run=cases, failures=failures)


# --- comparison-principle soundness (delegates to the solver module) -----------


def check_comparison_suite(spec: KernelSpec, *, n: int = 256, count: int = 100,
                           seed: int = 0, tol: float | None = None) -> SuiteReport:
    failures = []
    cases = 0
    for u, q in fde.comparison_cases(spec, n, count, seed):
        cases += 1
        rep = fde.check_comparison(spec, u, q, tol=tol)
        if not rep.applicable:
            failures.append(_failure(f"case {cases} not applicable",
                                     rep.max_inequality, 0.0))
        elif rep.violations:
            failures.append(_failure(f"case {cases} conclusion", rep.violations, 0.0))
    return SuiteReport("comparison", cases_run=cases, failures=failures)


# --- canonical configurations ---------------------------------------------------


def _cf_like_spec(alpha: float, interval, warp=None, gamma=1.0, beta=1.0) -> KernelSpec:
    return KernelSpec(gamma=gamma, beta=beta, order=OrderFunction.constant(alpha),
                      warp=warp if warp is not None else identity_warp(),
                      norm=NormalizationFunction.one(), interval=interval)


def default_suite_run(name: str, seed: int = 0) -> list[SuiteReport]:
    """Run one named suite under its canonical configuration."""
    if name == "boundedness":
        cfg = SuiteConfig(spec=_cf_like_spec(0.9, (0.0, 1.0)),
                          test_functions=standard_corpus(seed + 7, 100), n=1024,
                          seed=seed)
        reports = [check_boundedness(cfg)]
        for label, warp, interval in (("log", log_warp(), (1.0, 2.0)),
                                      ("sin", sin_warp(), (0.0, 1.0))):
            wcfg = SuiteConfig(spec=_cf_like_spec(0.9, interval, warp=warp),
                               test_functions=standard_corpus(seed + 7, 20),
                               n=512, seed=seed)
            rep = check_boundedness(wcfg)
            rep.suite_name = f"boundedness[{label}]"
            rep.informational = True
            rep.notes.append("informational: sup-norm estimate unproven off the "
                             "identity warp; failures reported, not asserted")
            reports.append(rep)
        return reports
    if name == "lipschitz":
        cfg = SuiteConfig(spec=_cf_like_spec(0.5, (0.0, 1.0)),
                          test_functions=standard_corpus(seed + 11, 4), n=512,
                          seed=seed)
        return [check_lipschitz(cfg)]
    if name == "limit_interchange":
        reports = []
        for label, warp, interval in (("identity", None, (0.0, 1.0)),
                                      ("log", log_warp(), (1.0, 2.0)),
                                      ("sin", sin_warp(), (0.0, 1.0))):
            cfg = SuiteConfig(spec=_cf_like_spec(0.5, interval, warp=warp),
                              test_functions=standard_corpus(seed, 0), n=512,
                              seq_len=16, seed=seed)
            rep = check_limit_interchange(cfg)
            rep.suite_name = f"limit_interchange[{label}]"
            reports.append(rep)
        return reports
    if name == "axiom_limits":
        cfg = SuiteConfig(spec=_cf_like_spec(0.5, (0.0, 1.0), gamma=0.5, beta=0.5),
                          test_functions=standard_corpus(seed, 2), n=1024,
                          seed=seed)
        return [check_axiom_limits(cfg)]
    if name == "max_point":
        cfg = SuiteConfig(spec=_cf_like_spec(0.5, (0.0, 1.0)),
                          test_functions=standard_corpus(seed + 3, 6), n=1024,
                          seed=seed)
        return [check_max_point(cfg)]
    if name == "vanish_at_a":
        cfg = SuiteConfig(spec=_cf_like_spec(0.5, (0.0, 1.0)),
                          test_functions=standard_corpus(seed, 4), n=512, seed=seed)
        return [check_vanish_at_a(cfg)]
    if name == "comparison":
        return [check_comparison_suite(_cf_like_spec(0.5, (0.0, 1.0)), seed=seed)]
    raise InvalidParam(f"unknown suite {name!r}; choose from {SUITE_NAMES}")
