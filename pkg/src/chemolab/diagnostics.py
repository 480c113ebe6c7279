"""Scalar diagnostics: masses, norms, energies, the weighted L^p value,
decay-rate fits and the end-of-run property checks.

Everything here is a pure computation over immutable snapshots; records for
different sample times could be computed concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields as dataclass_fields
from typing import Iterable, Sequence

import numpy as np

from .model import Grid, ModelParams, State
from .weight import WeightFunction

__all__ = [
    "DiagnosticsRecord",
    "DecayFit",
    "DecayFitError",
    "RunContext",
    "CheckResult",
    "VerificationReport",
    "mass",
    "dirichlet_energy",
    "lyapunov",
    "record",
    "fit_decay",
    "verify_run",
]


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One time-sample of every tracked scalar quantity.

    Field order is the emitted CSV column order; cumulative time integrals
    are advanced from the previous record by the trapezoid rule.
    """

    t: float
    mass_u: float
    mass_v: float
    linf_u: float
    linf_v: float
    linf_w: float
    dev_u: float  # ||u - ubar0||_inf
    dev_v: float
    lyapunov: float | None  # (1/p) int u^p phi(chi1 w), if a weight is set
    dirichlet_u: float  # int |grad u|^2 at time t
    dirichlet_v: float
    dirichlet_w: float
    cum_dirichlet_u: float  # int_0^t int |grad u|^2
    cum_dirichlet_v: float
    cum_dirichlet_w: float


RECORD_FIELDS = tuple(f.name for f in dataclass_fields(DiagnosticsRecord))


@dataclass(frozen=True)
class RunContext:
    """Reference scalars fixed at t = 0 that diagnostics refer back to."""

    grid: Grid
    params: ModelParams
    ubar0: float
    vbar0: float
    w0_max: float
    int_w0_sq: float  # int w0^2 over the box
    weight: WeightFunction | None = None
    weight_note: str = ""

    @property
    def reference_rate(self) -> float:
        """alpha*ubar0 + beta*vbar0, the homogeneous signal decay rate."""
        return self.params.alpha * self.ubar0 + self.params.beta * self.vbar0


def mass(field: np.ndarray, grid: Grid) -> float:
    """Discrete integral of a cell field over the box."""
    return grid.volume_element * float(np.sum(field))


def dirichlet_energy(field: np.ndarray, grid: Grid) -> float:
    """Discrete int |grad f|^2 from face gradients.

    Sums (difference/h)^2 times the face dual volume over interior faces,
    the same face-based gradient the solver's fluxes use; boundary faces
    carry zero gradient, matching the zero-flux condition.
    """
    total = 0.0
    for axis, h in enumerate(grid.spacing):
        lo = tuple(
            slice(None, -1) if k == axis else slice(None) for k in range(grid.dim)
        )
        hi = tuple(
            slice(1, None) if k == axis else slice(None) for k in range(grid.dim)
        )
        diff = (field[hi] - field[lo]) / h
        total += grid.volume_element * float(np.sum(diff * diff))
    return total


def lyapunov(state: State, wf: WeightFunction, chi: float, grid: Grid) -> float:
    """Weighted L^p value (1/p) int u^p phi(chi * w)."""
    w_scaled_max = chi * float(state.w.max())
    if w_scaled_max > wf.m:
        raise ValueError(
            f"weight domain exceeded: chi*max(w) = {w_scaled_max} > m = {wf.m} "
            "(the amplitude bound used to build the weight was too small)"
        )
    phi = wf.phi(chi * state.w)
    return (1.0 / wf.p) * grid.volume_element * float(np.sum(state.u**wf.p * phi))


def record(
    state: State, ctx: RunContext, prev: DiagnosticsRecord | None
) -> DiagnosticsRecord:
    """Compute one fully-populated record; pass prev=None for the first."""
    grid = ctx.grid
    du = dirichlet_energy(state.u, grid)
    dv = dirichlet_energy(state.v, grid)
    dw = dirichlet_energy(state.w, grid)
    if prev is None:
        cums = (0.0, 0.0, 0.0)
    else:
        half_dt = 0.5 * (state.t - prev.t)
        cums = (
            prev.cum_dirichlet_u + half_dt * (prev.dirichlet_u + du),
            prev.cum_dirichlet_v + half_dt * (prev.dirichlet_v + dv),
            prev.cum_dirichlet_w + half_dt * (prev.dirichlet_w + dw),
        )
    lyap = None
    if ctx.weight is not None:
        lyap = lyapunov(state, ctx.weight, ctx.params.chi1, grid)
    return DiagnosticsRecord(
        t=float(state.t),
        mass_u=mass(state.u, grid),
        mass_v=mass(state.v, grid),
        linf_u=float(np.abs(state.u).max()),
        linf_v=float(np.abs(state.v).max()),
        linf_w=float(np.abs(state.w).max()),
        dev_u=float(np.abs(state.u - ctx.ubar0).max()),
        dev_v=float(np.abs(state.v - ctx.vbar0).max()),
        lyapunov=lyap,
        dirichlet_u=du,
        dirichlet_v=dv,
        dirichlet_w=dw,
        cum_dirichlet_u=cums[0],
        cum_dirichlet_v=cums[1],
        cum_dirichlet_w=cums[2],
    )


class DecayFitError(ValueError):
    """Raised when an exponential fit is declined; the message says why."""


@dataclass(frozen=True)
class DecayFit:
    t_start: float  # first time in the fit window
    rate: float  # fitted exponential decay rate of linf_w
    r_squared: float
    reference_rate: float  # alpha*ubar0 + beta*vbar0
    half_reference: float

    def __post_init__(self) -> None:
        if not -1e-12 <= self.r_squared <= 1.0 + 1e-12:
            raise ValueError(f"r_squared out of [0, 1]: {self.r_squared}")


def fit_decay(
    series: Iterable[tuple[float, float]],
    window_fraction: float = 0.5,
    reference_rate: float = 0.0,
) -> DecayFit:
    """Least-squares exponential rate of linf_w over the trailing window.

    Fits -ln(linf_w) against t on the trailing ``window_fraction`` of the
    samples.  The window defaults to the trailing half because the guaranteed
    rate only applies once the densities sit near their means.
    """
    pairs = [(float(t), float(w)) for t, w in series]
    if not 0.0 < window_fraction <= 1.0:
        raise ValueError(f"window_fraction must be in (0, 1], got {window_fraction}")
    n_window = max(int(round(window_fraction * len(pairs))), 3)
    window = pairs[-n_window:]
    if len(window) < 3:
        raise DecayFitError(
            f"fit declined: need at least 3 samples in the window, have {len(window)}"
        )
    if any(w <= 0.0 for _, w in window):
        raise DecayFitError(
            "fit declined: window contains nonpositive linf_w values"
        )
    t = np.array([p[0] for p in window])
    y = -np.log([p[1] for p in window])
    t_mean = t.mean()
    y_mean = y.mean()
    tt = t - t_mean
    ss_t = float(np.sum(tt * tt))
    if ss_t == 0.0:
        raise DecayFitError("fit declined: degenerate time window")
    rate = float(np.sum(tt * (y - y_mean)) / ss_t)
    resid = y - (y_mean + rate * tt)
    ss_res = float(np.sum(resid * resid))
    ss_tot = float(np.sum((y - y_mean) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return DecayFit(
        t_start=float(t[0]),
        rate=rate,
        r_squared=r2,
        reference_rate=reference_rate,
        half_reference=0.5 * reference_rate,
    )


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "value": self.value,
            "threshold": self.threshold,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class VerificationReport:
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}

    def __iter__(self):
        return iter(self.checks)


def verify_run(
    records: Sequence[DiagnosticsRecord],
    ctx: RunContext,
    *,
    mass_tol: float = 1e-10,
    envelope_tol: float = 1e-12,
    energy_budget_tol: float = 1e-8,
    tail_fraction: float = 0.25,
    tail_increment_tol: float = 0.01,
    end_state_tol: float = 1e-3,
    decay_window_fraction: float = 0.5,
) -> VerificationReport:
    """Check a completed run against the provable solution properties.

    Each check is independent: mass conservation, the signal maximum
    principle, the signal energy budget, finiteness of the density energy
    integrals, end-state stabilization, and the guaranteed signal decay
    rate.  Returns a report object; nothing raises.
    """
    if len(records) < 2:
        raise ValueError("verify_run needs at least two records")
    checks: list[CheckResult] = []

    for name in ("u", "v"):
        m0 = getattr(records[0], f"mass_{name}")
        drift = max(abs(getattr(r, f"mass_{name}") - m0) for r in records) / m0
        checks.append(
            CheckResult(
                name=f"mass_conservation_{name}",
                passed=drift <= mass_tol,
                value=drift,
                threshold=mass_tol,
                detail=f"max relative drift of the discrete integral of {name}",
            )
        )

    linf_w = [r.linf_w for r in records]
    env_excess = max(linf_w) - ctx.w0_max
    growth = max(
        (b - a for a, b in zip(linf_w, linf_w[1:])), default=0.0
    )
    checks.append(
        CheckResult(
            name="signal_envelope",
            passed=env_excess <= envelope_tol and growth <= envelope_tol,
            value=max(env_excess, growth),
            threshold=envelope_tol,
            detail=(
                "max w stays below its initial sup and is nonincreasing; "
                "nonnegativity is enforced by the stepper at every step"
            ),
        )
    )

    budget = 0.5 * ctx.int_w0_sq
    excess = max(r.cum_dirichlet_w for r in records) - budget
    checks.append(
        CheckResult(
            name="signal_energy_budget",
            passed=excess <= energy_budget_tol,
            value=excess,
            threshold=energy_budget_tol,
            detail="cumulative int int |grad w|^2 minus half int w0^2, at every sample",
        )
    )

    t_end = records[-1].t
    tail_start = (1.0 - tail_fraction) * t_end
    tail_idx = next(i for i, r in enumerate(records) if r.t >= tail_start)
    for name in ("u", "v"):
        total = getattr(records[-1], f"cum_dirichlet_{name}")
        increment = total - getattr(records[tail_idx], f"cum_dirichlet_{name}")
        limit = tail_increment_tol * total + 1e-30
        checks.append(
            CheckResult(
                name=f"dirichlet_convergence_{name}",
                passed=increment <= limit,
                value=increment,
                threshold=limit,
                detail=(
                    f"trailing-{tail_fraction:.0%} increment of the cumulative "
                    f"int int |grad {name}|^2 (finiteness of the energy integral)"
                ),
            )
        )

    last = records[-1]
    worst_end = max(last.dev_u, last.dev_v, last.linf_w)
    checks.append(
        CheckResult(
            name="end_state",
            passed=worst_end <= end_state_tol,
            value=worst_end,
            threshold=end_state_tol,
            detail=(
                "max of ||u-ubar0||_inf, ||v-vbar0||_inf, ||w||_inf at t_end "
                "(engineering tolerance; no quantitative rate is guaranteed "
                "for the densities)"
            ),
        )
    )

    try:
        fit = fit_decay(
            ((r.t, r.linf_w) for r in records),
            window_fraction=decay_window_fraction,
            reference_rate=ctx.reference_rate,
        )
        checks.append(
            CheckResult(
                name="decay_rate",
                passed=fit.rate >= fit.half_reference,
                value=fit.rate,
                threshold=fit.half_reference,
                detail=(
                    f"fitted exponential rate of ||w||_inf over the trailing "
                    f"{decay_window_fraction:.0%} (r^2 = {fit.r_squared:.6f}); "
                    f"guaranteed rate is half of {fit.reference_rate:.6g}"
                ),
            )
        )
    except DecayFitError as exc:
        checks.append(
            CheckResult(
                name="decay_rate",
                passed=False,
                value=math.nan,
                threshold=0.0,
                detail=str(exc),
            )
        )

    return VerificationReport(checks=tuple(checks))
