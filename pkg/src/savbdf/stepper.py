"""The semi-implicit BDFk time loop with the scalar-auxiliary-variable correction.

One step advances (u^n histories, r^n) by, in order:

1. linear solve for the uncorrected update
       (alpha_k/dt + A) ubar^{n+1} = A_k(u^n)/dt - g[B_k(u^n)] + f(t^{n+1})
2. scalar update (closed form, division preserves positivity in floating point)
       r^{n+1} = (r^n + dt * (dE/du(ubar^{n+1}), f(t^{n+1})))
                 / (1 + dt * K(ubar^{n+1}) / E(ubar^{n+1}))
   The work term vanishes for unforced problems, where the update is exactly
   the discrete energy law and is monotone:  r^{n+1} <= r^n,  r^{n+1} >= 0.
3. xi^{n+1} = r^{n+1} / E(ubar^{n+1})
4. u^{n+1} = eta * ubar^{n+1}  with  eta = 1 - (1 - xi^{n+1})**p.

IMEX mode skips 2-4 (eta == 1), giving the classical implicit-explicit BDFk
baseline.  The extrapolated nonlinear term consumes the corrected history:
of the two interchangeable variants (feeding g with ubar- or with u-history,
identical order and identical scalar stability), only the corrected one keeps
the uncorrected iterate representable in floating point at very large steps,
because the solution correction then bounds what enters the cubic term.  The
uncorrected history is still carried in the state for diagnostics.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .problems import ProblemDefinition
from .spectral import Field, sobolev_norm, solve_shifted
from .tableau import MAX_ORDER, BdfTableau, combine_history, tableau

__all__ = [
    "StepMode",
    "SavState",
    "StepRecord",
    "RunReport",
    "DivergenceError",
    "EnergyPositivityError",
    "MonotonicityError",
    "step",
    "initialize",
    "run",
]

#: relative slack for the floating-point monotonicity check of r
MONOTONE_RTOL = 1e-14

#: substeps per startup level in the cascade initialization
CASCADE_SUBSTEPS = 8


class StepMode(enum.Enum):
    SAV = "sav"
    IMEX = "imex"


class DivergenceError(RuntimeError):
    """A non-finite value appeared in the solution."""

    def __init__(self, step_index: int, what: str = "solution"):
        super().__init__(f"divergence detected at step {step_index}: non-finite {what}")
        self.step_index = step_index


class EnergyPositivityError(RuntimeError):
    """E(ubar) <= 0; impossible for well-formed problems (c_shift > 0)."""


class MonotonicityError(RuntimeError):
    """The unforced scalar update increased; impossible for the closed form."""

    def __init__(self, step_index: int, r_old: float, r_new: float):
        super().__init__(
            f"r increased at step {step_index}: {r_old!r} -> {r_new!r}"
        )
        self.step_index = step_index


@dataclass(frozen=True)
class SavState:
    """State after step n: histories (most recent first), scalar r, diagnostics."""

    step_index: int
    time: float
    u_history: tuple[Field, ...]
    ubar_history: tuple[Field, ...]
    r: float
    last_xi: float = 1.0
    last_eta: float = 1.0


def step(state: SavState, problem: ProblemDefinition, tab: BdfTableau, dt: float,
         mode: StepMode = StepMode.SAV) -> SavState:
    """Advance one step of size dt; returns the new state."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    k = tab.order
    if len(state.u_history) < k or len(state.ubar_history) < k:
        raise ValueError(
            f"order-{k} step needs {k} history levels, have {len(state.u_history)}"
        )
    next_index = state.step_index + 1
    t_next = state.time + dt

    # overflow in a diverging trajectory is detected by the finiteness
    # guards below, not reported as arithmetic warnings
    with np.errstate(over="ignore", invalid="ignore"):
        drift = combine_history(tab.a_floats(), state.u_history)
        explicit = problem.nonlinear(combine_history(tab.b_floats(), state.u_history), t_next)
        rhs = (1.0 / dt) * drift - explicit
        ubar = solve_shifted(float(tab.alpha) / dt, problem.linear_symbol, rhs)
        if not ubar.all_finite():
            raise DivergenceError(next_index, "uncorrected solution")

        if mode is StepMode.IMEX:
            u_new, r_new, xi, eta = ubar, state.r, 1.0, 1.0
        else:
            energy = problem.energy(ubar)
            if not energy > 0.0:
                raise EnergyPositivityError(
                    f"E(ubar) = {energy!r} <= 0 at step {next_index}; check c_shift/potential"
                )
            kappa = problem.dissipation(ubar)
            work = problem.forcing_power(ubar, t_next)
            r_new = (state.r + dt * work) / (1.0 + dt * kappa / energy)
            if not math.isfinite(r_new):
                raise DivergenceError(next_index, "scalar variable")
            if not problem.is_forced:
                if r_new > state.r * (1.0 + MONOTONE_RTOL):
                    raise MonotonicityError(next_index, state.r, r_new)
                if r_new < 0.0:
                    raise MonotonicityError(next_index, state.r, r_new)
            xi = r_new / energy
            eta = 1.0 - (1.0 - xi) ** tab.eta_exponent
            u_new = eta * ubar
            if not u_new.all_finite():
                raise DivergenceError(next_index, "corrected solution")

    return SavState(
        step_index=next_index,
        time=t_next,
        u_history=(u_new,) + state.u_history[: k - 1],
        ubar_history=(ubar,) + state.ubar_history[: k - 1],
        r=r_new,
        last_xi=xi,
        last_eta=eta,
    )


def _scalar_update(problem: ProblemDefinition, r: float, u: Field, t: float, dt: float) -> tuple[float, float]:
    """One application of the r-update along a known field; returns (r, xi)."""
    energy = problem.energy(u)
    kappa = problem.dissipation(u)
    work = problem.forcing_power(u, t)
    r_new = (r + dt * work) / (1.0 + dt * kappa / energy)
    return r_new, r_new / energy


def initialize(problem: ProblemDefinition, tab: BdfTableau, dt: float,
               u0: Field | None = None, r_init: float | None = None,
               mode: StepMode = StepMode.SAV,
               record_sink: Optional[list] = None) -> SavState:
    """Build a state with the k-1 startup levels filled.

    With an exact solution attached, startup levels are exact samples
    (u^i = ubar^i = u(t^i)) and r is advanced through the scalar update along
    them.  Otherwise a cascade start is used: level i is produced by
    CASCADE_SUBSTEPS substeps of size dt/CASCADE_SUBSTEPS at order i, run as
    one continuous fine trajectory so each stage has enough fine history.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if u0 is None:
        if problem.exact is None:
            raise ValueError("u0 is required for problems without an exact solution")
        u0 = problem.exact.field(0.0)
    r = problem.energy(u0) if r_init is None else float(r_init)
    state = SavState(0, 0.0, (u0,), (u0,), r)
    if record_sink is not None:
        record_sink.append(_make_record(problem, state, u0))
    if tab.order == 1:
        return state

    if problem.exact is not None:
        xi = state.last_xi
        for i in range(1, tab.order):
            t_i = i * dt
            u_i = problem.exact.field(t_i)
            if mode is StepMode.SAV:
                r, xi = _scalar_update(problem, r, u_i, t_i, dt)
            eta = 1.0 - (1.0 - xi) ** tab.eta_exponent if mode is StepMode.SAV else 1.0
            state = SavState(
                step_index=i,
                time=t_i,
                u_history=(u_i,) + state.u_history[: tab.order - 1],
                ubar_history=(u_i,) + state.ubar_history[: tab.order - 1],
                r=r,
                last_xi=xi if mode is StepMode.SAV else 1.0,
                last_eta=eta,
            )
            if record_sink is not None:
                record_sink.append(_make_record(problem, state, u_i))
        return state

    # cascade start: one fine trajectory with the order ramping per coarse
    # level; deep fine histories are kept here because step() itself only
    # retains the current order's depth
    m = CASCADE_SUBSTEPS
    deep_u: list[Field] = [u0]
    deep_ub: list[Field] = [u0]
    fine = state
    levels = [u0]
    for level in range(1, tab.order):
        sub_tab = tableau(level)
        for _ in range(m):
            view = SavState(
                step_index=fine.step_index,
                time=fine.time,
                u_history=tuple(deep_u[:level]),
                ubar_history=tuple(deep_ub[:level]),
                r=fine.r,
                last_xi=fine.last_xi,
                last_eta=fine.last_eta,
            )
            fine = step(view, problem, sub_tab, dt / m, mode)
            deep_u.insert(0, fine.u_history[0])
            deep_ub.insert(0, fine.ubar_history[0])
            del deep_u[MAX_ORDER:], deep_ub[MAX_ORDER:]
        levels.insert(0, fine.u_history[0])
        coarse = SavState(
            step_index=level,
            time=level * dt,
            u_history=tuple(levels),
            ubar_history=tuple(levels),
            r=fine.r,
            last_xi=fine.last_xi,
            last_eta=fine.last_eta,
        )
        if record_sink is not None:
            record_sink.append(_make_record(problem, coarse, levels[0]))
    return SavState(
        step_index=tab.order - 1,
        time=(tab.order - 1) * dt,
        u_history=tuple(levels),
        ubar_history=tuple(levels),
        r=fine.r,
        last_xi=fine.last_xi,
        last_eta=fine.last_eta,
    )


@dataclass(frozen=True)
class StepRecord:
    """Per-step diagnostics; error columns are None without an exact solution."""

    step: int
    t: float
    r: float
    xi: float
    eta: float
    energy: float
    principal_norm_sq: float
    mean: float
    err_l2: Optional[float] = None
    err_h1: Optional[float] = None
    err_h2: Optional[float] = None
    s_gap: Optional[float] = None


def _make_record(problem: ProblemDefinition, state: SavState, u: Field) -> StepRecord:
    # near an impending divergence the diagnostics may overflow to inf;
    # they are trace data, not control flow
    with np.errstate(over="ignore", invalid="ignore"):
        err_l2 = err_h1 = err_h2 = s_gap = None
        if problem.exact is not None:
            reference = problem.exact.field(state.time)
            diff = u - reference
            err_l2 = sobolev_norm(diff, 0.0)
            err_h1 = sobolev_norm(diff, 1.0)
            err_h2 = sobolev_norm(diff, 2.0)
            s_gap = state.r - problem.energy(reference)
        return StepRecord(
            step=state.step_index,
            t=state.time,
            r=state.r,
            xi=state.last_xi,
            eta=state.last_eta,
            energy=problem.energy(u),
            principal_norm_sq=problem.principal_norm_sq(u),
            mean=u.mean(),
            err_l2=err_l2,
            err_h1=err_h1,
            err_h2=err_h2,
            s_gap=s_gap,
        )


@dataclass
class RunReport:
    """Trace and summary of one run; records are monotone in t."""

    problem: str
    order: int
    dt: float
    mode: StepMode
    records: list[StepRecord]
    diverged: bool = False
    diverged_step: Optional[int] = None
    final_state: Optional[SavState] = None

    @property
    def final(self) -> StepRecord:
        return self.records[-1]

    @property
    def max_xi_deviation(self) -> float:
        return max(abs(1.0 - rec.xi) for rec in self.records)

    @property
    def min_eta(self) -> float:
        return min(rec.eta for rec in self.records)

    @property
    def max_eta(self) -> float:
        return max(rec.eta for rec in self.records)

    @property
    def min_r(self) -> float:
        return min(rec.r for rec in self.records)

    @property
    def min_xi(self) -> float:
        return min(rec.xi for rec in self.records)

    @property
    def sup_principal(self) -> float:
        return max(rec.principal_norm_sq for rec in self.records)

    def sup_principal_first(self, n: int = 10) -> float:
        return max(rec.principal_norm_sq for rec in self.records[: max(n, 1)])

    @property
    def monotone_violations(self) -> int:
        """Steps where r grew beyond the floating-point slack."""
        count = 0
        for prev, cur in zip(self.records, self.records[1:]):
            if cur.r > prev.r * (1.0 + MONOTONE_RTOL):
                count += 1
        return count

    @property
    def mean_drift(self) -> float:
        """Largest excursion of the field mean from its initial value."""
        base = self.records[0].mean
        return max(abs(rec.mean - base) for rec in self.records)

    @property
    def final_errors(self) -> Optional[tuple[float, float, float]]:
        rec = self.final
        if rec.err_l2 is None:
            return None
        return (rec.err_l2, rec.err_h1, rec.err_h2)


def run(problem: ProblemDefinition, tab: BdfTableau, dt: float, T: float,
        mode: StepMode = StepMode.SAV, u0: Field | None = None,
        r_init: float | None = None, raise_on_divergence: bool = True,
        monitors: Optional[Callable[[SavState], None]] = None) -> RunReport:
    """Integrate to t = T, recording per-step diagnostics.

    T must be an integer multiple of dt covering at least the startup levels.
    Divergence raises by default; with raise_on_divergence=False the partial
    trace is returned with the report flagged (used where instability is the
    observation itself, not a failure).
    """
    if T <= 0:
        raise ValueError("T must be positive")
    n_steps = round(T / dt)
    if n_steps < 1 or abs(n_steps * dt - T) > 1e-9 * max(abs(T), 1.0):
        raise ValueError(f"T = {T} is not an integral number of steps of dt = {dt}")
    if n_steps < tab.order:
        raise ValueError(
            f"run of {n_steps} steps cannot host an order-{tab.order} startup"
        )

    records: list[StepRecord] = []
    report = RunReport(problem=problem.name, order=tab.order, dt=dt, mode=mode, records=records)
    state = None
    try:
        state = initialize(problem, tab, dt, u0=u0, r_init=r_init, mode=mode,
                           record_sink=records)
        if monitors is not None:
            monitors(state)
        while state.step_index < n_steps:
            state = step(state, problem, tab, dt, mode)
            records.append(_make_record(problem, state, state.u_history[0]))
            if monitors is not None:
                monitors(state)
    except DivergenceError as exc:
        report.diverged = True
        report.diverged_step = exc.step_index
        if raise_on_divergence or not records:
            raise
    report.final_state = state
    return report
