"""Experiment drivers: convergence studies, stability probes, scheme comparison.

A convergence study integrates a manufactured problem over a ladder of step
sizes and fits the slope of log(error) against log(dt) per Sobolev norm.
A stability probe hammers an unforced problem with large steps from seeded
random smooth data and checks the scalar-variable invariants.  The Burgers
comparison pits the corrected scheme against its plain implicit-explicit
baseline on an under-resolved shock layer.

Independent (dt, order) cases can run concurrently; the SAV_THREADS
environment variable caps the worker count and reports are always assembled
in configuration order, so output is deterministic either way.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .problems import ProblemDefinition, burgers
from .spectral import Basis, Field, Grid
from .stepper import DivergenceError, RunReport, StepMode, run
from .tableau import tableau

__all__ = [
    "ConvergenceEntry",
    "ConvergenceReport",
    "StabilityResult",
    "BurgersComparison",
    "fit_rate",
    "default_dt_ladder",
    "convergence_study",
    "stability_probe",
    "burgers_compare",
    "random_smooth_field",
    "ERROR_FLOOR",
]

#: errors at or below this are treated as rounding floor and excluded from fits
ERROR_FLOOR = 1e-11

#: largest band-limited mode index of the random probe data
RANDOM_FIELD_MAX_MODE = 8


def _worker_count() -> int:
    raw = os.environ.get("SAV_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValueError(f"SAV_THREADS must be an integer, got {raw!r}") from exc
    return max(n, 1)


def fit_rate(points) -> float:
    """Least-squares slope of log(err) vs log(dt) over (dt, err) pairs."""
    pts = [(float(dt), float(err)) for dt, err in points]
    if len(pts) < 2:
        raise ValueError("rate fit needs at least two points")
    if any(not math.isfinite(dt) or not math.isfinite(err) or dt <= 0 or err <= 0
           for dt, err in pts):
        raise ValueError("rate fit needs finite positive dt and err values")
    if len({dt for dt, _ in pts}) != len(pts):
        raise ValueError("rate fit needs distinct dt values")
    log_dt = np.log([dt for dt, _ in pts])
    log_err = np.log([err for _, err in pts])
    slope = np.polyfit(log_dt, log_err, 1)[0]
    return float(slope)


def default_dt_ladder(order: int) -> tuple[float, ...]:
    """Step-size ladders used for the order-verification studies.

    High orders hit the rounding floor quickly, so they get coarser ladders;
    order 5 starts one halving below order 4 because its dt = 1/10 point is
    still pre-asymptotic in the second-derivative norm.
    """
    if order <= 3:
        return (1 / 40, 1 / 80, 1 / 160, 1 / 320, 1 / 640)
    if order == 4:
        return (1 / 10, 1 / 20, 1 / 40, 1 / 80)
    return (1 / 20, 1 / 40, 1 / 80)


@dataclass(frozen=True)
class ConvergenceEntry:
    dt: float
    err_l2: Optional[float]
    err_h1: Optional[float]
    err_h2: Optional[float]
    diverged: bool = False


@dataclass
class ConvergenceReport:
    problem: str
    order: int
    T: float
    entries: list[ConvergenceEntry]
    slopes: dict[str, Optional[float]] = field(default_factory=dict)

    def slope(self, norm: str) -> Optional[float]:
        return self.slopes.get(norm)


def _fit_norm(entries: list[ConvergenceEntry], attr: str) -> Optional[float]:
    pts = [(e.dt, getattr(e, attr)) for e in entries
           if not e.diverged and getattr(e, attr) is not None
           and math.isfinite(getattr(e, attr)) and getattr(e, attr) > ERROR_FLOOR]
    if len(pts) < 2:
        return None
    return fit_rate(pts)


def convergence_study(problem: ProblemDefinition, order: int, dt_list=None,
                      T: float = 1.0, mode: StepMode = StepMode.SAV,
                      eta_exponent: int | None = None) -> ConvergenceReport:
    """Run the order-`order` scheme over a dt ladder and fit error slopes.

    Requires an attached exact solution; entries that diverge are flagged and
    excluded from the fit, as are errors at the rounding floor.
    """
    if problem.exact is None:
        raise ValueError("convergence_study requires a problem with an exact solution")
    dts = tuple(float(dt) for dt in (dt_list if dt_list is not None else default_dt_ladder(order)))
    if len(dts) < 3:
        raise ValueError("convergence_study needs at least three dt values")
    if any(b >= a for a, b in zip(dts, dts[1:])):
        raise ValueError("dt ladder must be strictly decreasing")
    for dt in dts:
        n = round(T / dt)
        if n < 1 or abs(n * dt - T) > 1e-9 * max(abs(T), 1.0):
            raise ValueError(f"dt = {dt} does not divide T = {T}")
    tab = tableau(order, eta_exponent)

    def one_case(dt: float) -> ConvergenceEntry:
        try:
            report = run(problem, tab, dt, T, mode=mode, raise_on_divergence=False)
        except DivergenceError:
            return ConvergenceEntry(dt, None, None, None, diverged=True)
        if report.diverged:
            return ConvergenceEntry(dt, None, None, None, diverged=True)
        err = report.final_errors
        return ConvergenceEntry(dt, err[0], err[1], err[2])

    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(one_case, dts))
    else:
        entries = [one_case(dt) for dt in dts]

    report = ConvergenceReport(problem=problem.name, order=order, T=T, entries=entries)
    report.slopes = {
        "l2": _fit_norm(entries, "err_l2"),
        "h1": _fit_norm(entries, "err_h1"),
        "h2": _fit_norm(entries, "err_h2"),
    }
    return report


def random_smooth_field(grid: Grid, seed: int = 0, max_mode: int = RANDOM_FIELD_MAX_MODE) -> Field:
    """Seeded zero-mean band-limited random field, normalized to unit variance.

    Coefficients on modes up to max_mode are drawn with unit variance, then
    the sampled field is rescaled to pointwise standard deviation one, which
    keeps the stress data at phase-field amplitudes.  Zero mean by
    construction, so a conserved mean stays at exactly zero.
    """
    rng = np.random.default_rng(seed)
    if grid.basis is Basis.FOURIER2D:
        nx, ny = grid.extents
        coeffs = np.zeros((nx, ny // 2 + 1), dtype=complex)
        span = min(max_mode, nx // 2 - 1, ny // 2 - 1)
        re = rng.normal(0.0, math.sqrt(0.5), size=(2 * span + 1, span + 1))
        im = rng.normal(0.0, math.sqrt(0.5), size=(2 * span + 1, span + 1))
        for row, mx in enumerate(range(-span, span + 1)):
            coeffs[mx % nx, : span + 1] = re[row] + 1j * im[row]
        coeffs[0, 0] = 0.0
        # Hermitian symmetry of the self-conjugate column
        for mx in range(1, span + 1):
            coeffs[nx - mx, 0] = np.conj(coeffs[mx, 0])
        raw = Field.from_spectral(grid, coeffs)
    else:
        n = grid.extents[0]
        span = min(max_mode, n)
        coeffs = np.zeros(n)
        coeffs[:span] = rng.normal(0.0, 1.0, size=span)
        raw = Field.from_spectral(grid, coeffs)
    sd = float(np.std(raw.values))
    return raw if sd == 0.0 else (1.0 / sd) * raw


@dataclass
class StabilityResult:
    """Outcome of a large-step stress run of an unforced problem."""

    report: RunReport
    violations: list[str]
    sup_principal: float
    sup_principal_first10: float
    mean_drift: float

    @property
    def passed(self) -> bool:
        return not self.violations


def stability_probe(problem: ProblemDefinition, order: int, dt: float, n_steps: int,
                    seed: int = 0, u0: Field | None = None,
                    eta_exponent: int | None = None) -> StabilityResult:
    """Run n_steps at a deliberately large dt and check the scheme invariants.

    Checks: r monotone nonincreasing (to floating-point slack), r and xi
    nonnegative, and the principal quadratic (L u, u) staying within 10x the
    largest value seen over the first ten steps.
    """
    if problem.is_forced:
        raise ValueError("stability_probe requires an unforced problem")
    if n_steps < order:
        raise ValueError("n_steps must cover the startup levels")
    if u0 is None:
        u0 = random_smooth_field(problem.grid, seed=seed)
    tab = tableau(order, eta_exponent)
    report = run(problem, tab, dt, n_steps * dt, mode=StepMode.SAV, u0=u0)

    violations: list[str] = []
    for prev, cur in zip(report.records, report.records[1:]):
        if cur.r > prev.r * (1.0 + 1e-14):
            violations.append(f"step {cur.step}: r increased {prev.r!r} -> {cur.r!r}")
    for rec in report.records:
        if rec.r < 0.0:
            violations.append(f"step {rec.step}: r = {rec.r!r} < 0")
        if rec.xi < 0.0:
            violations.append(f"step {rec.step}: xi = {rec.xi!r} < 0")
    sup_all = report.sup_principal
    sup_head = report.sup_principal_first(10)
    if sup_head == 0.0:
        if sup_all > 0.0:
            violations.append("principal norm grew from exactly zero data")
    elif sup_all > 10.0 * sup_head:
        violations.append(
            f"principal norm grew beyond 10x its early value: {sup_all:g} vs {sup_head:g}"
        )

    return StabilityResult(
        report=report,
        violations=violations,
        sup_principal=sup_all,
        sup_principal_first10=sup_head,
        mean_drift=report.mean_drift,
    )


@dataclass
class BurgersComparison:
    """Corrected vs plain implicit-explicit scheme against a fine reference."""

    x: np.ndarray
    u_ref: np.ndarray
    u_sav: np.ndarray
    u_imex: Optional[np.ndarray]
    deviation_sav: float
    deviation_imex: float
    overshoot_sav: float
    overshoot_imex: float
    imex_diverged: bool
    eta_trace: list[tuple[float, float]]
    sav_report: RunReport
    imex_report: Optional[RunReport]


def burgers_compare(nu: float = 1.0 / 314.0, n_modes: int = 320, dt: float = 8.5e-3,
                    dt_ref: float = 1e-4, T: float = 1.0, order: int = 2,
                    eta_exponent: int | None = None) -> BurgersComparison:
    """Shock-layer comparison from u(x, 0) = -sin(pi x) on (-1, 1).

    The reference is the corrected scheme at dt_ref.  Divergence of the
    baseline is an admissible outcome and is recorded, not raised.
    """
    grid = Grid.sine1d(n_modes)
    problem = burgers(grid, nu)
    (x,) = grid.points
    u0 = Field.from_physical(grid, -np.sin(np.pi * x))
    tab = tableau(order, eta_exponent)

    # dt need not divide T (the benchmark step does not); integrate to the
    # step boundary nearest T and give the reference the exact same endpoint
    n_cmp = max(round(T / dt), order)
    t_end = n_cmp * dt
    n_ref = max(round(t_end / dt_ref), n_cmp)
    dt_ref_eff = t_end / n_ref

    ref = run(problem, tab, dt_ref_eff, t_end, mode=StepMode.SAV, u0=u0)
    sav = run(problem, tab, dt, t_end, mode=StepMode.SAV, u0=u0)

    imex_diverged = False
    imex_report: Optional[RunReport] = None
    try:
        imex_report = run(problem, tab, dt, t_end, mode=StepMode.IMEX, u0=u0,
                          raise_on_divergence=False)
        imex_diverged = imex_report.diverged
    except DivergenceError:
        imex_diverged = True

    u_ref = _final_values(ref)
    u_sav = _final_values(sav)
    ref_peak = float(np.max(np.abs(u_ref)))
    dev_sav = float(np.max(np.abs(u_sav - u_ref)))
    over_sav = float(np.max(np.abs(u_sav))) / ref_peak

    if imex_report is not None and not imex_diverged:
        u_imex = _final_values(imex_report)
        if np.all(np.isfinite(u_imex)):
            dev_imex = float(np.max(np.abs(u_imex - u_ref)))
            over_imex = float(np.max(np.abs(u_imex))) / ref_peak
        else:
            imex_diverged, u_imex, dev_imex, over_imex = True, None, math.inf, math.inf
    else:
        u_imex, dev_imex, over_imex = None, math.inf, math.inf

    eta_trace = [(rec.t, rec.eta) for rec in sav.records]
    return BurgersComparison(
        x=x,
        u_ref=u_ref,
        u_sav=u_sav,
        u_imex=u_imex,
        deviation_sav=dev_sav,
        deviation_imex=dev_imex,
        overshoot_sav=over_sav,
        overshoot_imex=over_imex,
        imex_diverged=imex_diverged,
        eta_trace=eta_trace,
        sav_report=sav,
        imex_report=imex_report,
    )


def _final_values(report: RunReport) -> np.ndarray:
    if report.final_state is None:
        raise RuntimeError("run did not retain a final state")
    return report.final_state.u_history[0].values
