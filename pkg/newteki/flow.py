"""
Updated on 2026-10
Created on 2026-09

@author: NewtCode Anna Burova

Continuous-time EKI / TEKI flows and their adaptive explicit Euler integration.

    du^(j)/dt = -(1/J) sum_k E_jk (u^(k) - u_mean)

with E = D for EKI and E = D + lambda <u^(j), u^(k) - u_mean>_K for TEKI.

Classes:
    class InteractionMatrix
    class FlowState
    class RunConfig
    class MetricRow
    class RunRecord

Functions:
    def interaction(
        e: Ensemble,
        p: InverseProblem,
        kind: str
        ) -> InteractionMatrix
    def adaptive_step_size(
        E: InteractionMatrix,
        h0: float,
        delta: float
        ) -> float
    def rhs(
        e: Ensemble,
        p: InverseProblem,
        kind: str
        ) -> np.ndarray
    def covariance_norm(
        e: Ensemble
        ) -> float
    def euler_step(
        s: FlowState,
        p: InverseProblem,
        kind: str,
        h0: float,
        delta: float,
        n_jobs: int = 0
        ) -> FlowState
    def discrete_step(
        s: FlowState,
        p: InverseProblem,
        kind: str,
        perturb: str = "none",
        rng: np.random.Generator | None = None,
        span: np.ndarray | None = None,
        n_jobs: int = 0
        ) -> FlowState
    def run(
        initial: Ensemble,
        p: InverseProblem,
        kind: str,
        config: RunConfig | None = None,
        u_truth: SpectralField | None = None,
        noise_norm: float = nan,
        print_log: bool = False,
        rng: np.random.Generator | None = None
        ) -> RunRecord
    def gradient_flow_residual(
        e: Ensemble,
        p: InverseProblem
        ) -> float
    === FILES ===
    def save_run_record(
        record: RunRecord,
        output_dir: str,
        print_log: bool = True
        ) -> str
    def save_trajectory(
        record: RunRecord,
        file_name: str,
        print_log: bool = True
        ) -> None
    def load_trajectory(
        file_name: str,
        stop: bool = True
        ) -> tuple[np.ndarray, np.ndarray] | None
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

import newteki.console as NewtCons
import newteki.utility as NewtUtil
import newteki.files as NewtFiles
import newteki.field as NewtField
import newteki.problem as NewtProb
import newteki.kalman as NewtKalman
from newteki.field import SpectralField
from newteki.problem import InverseProblem
from newteki.kalman import Ensemble

FLOW_KINDS = ("eki", "teki")
SCHEMES = ("flow", "discrete")
METRICS_HEADER = ["iter", "t", "h", "rel_error", "misfit", "noise_level", "cov_norm", "loss"]


@dataclass(frozen=True, eq=False)
class InteractionMatrix:
    entries: np.ndarray
    kind: str


@dataclass(frozen=True, eq=False)
class FlowState:
    """ ## Flow time t, iteration n, the ensemble, and the step h that led here. """

    t: float
    n: int
    ensemble: Ensemble
    h: float = 0.0


@dataclass(frozen=True)
class RunConfig:
    """ ## Integration settings for `run`.

    `t_end` stops the run once the flow time reaches it;
    `discrepancy_stop` stops it once the mean misfit drops to the noise level.
    """

    iterations: int = 23
    h0: float = 0.02
    delta: float = 0.05
    snapshot_iters: tuple[int, ...] = (1, 5, 11, 17, 23)
    n_jobs: int = 0
    t_end: float | None = None
    discrepancy_stop: bool = False
    record_trajectory: bool = False
    scheme: str = "flow"
    perturb: str = "none"

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            NewtCons.error_msg(
                f"Unknown scheme: {self.scheme}",
                f"Known schemes: {', '.join(SCHEMES)}",
                location="Newt.flow.RunConfig : scheme"
            )
        if self.perturb not in NewtKalman.PERTURB_MODES:
            NewtCons.error_msg(
                f"Unknown perturb mode: {self.perturb}",
                f"Known modes: {', '.join(NewtKalman.PERTURB_MODES)}",
                location="Newt.flow.RunConfig : perturb"
            )
        NewtCons.validate_type(
            self.iterations, int,
            location="Newt.flow.RunConfig : iterations"
        )
        if self.iterations < 0:
            NewtCons.error_msg(
                f"iterations must be >= 0, got {self.iterations}",
                location="Newt.flow.RunConfig : iterations < 0"
            )
        NewtCons.validate_positive(
            self.h0,
            location="Newt.flow.RunConfig : h0"
        )
        NewtCons.validate_positive(
            self.delta,
            location="Newt.flow.RunConfig : delta"
        )
        if self.t_end is not None:
            NewtCons.validate_positive(
                self.t_end,
                location="Newt.flow.RunConfig : t_end"
            )


@dataclass(frozen=True)
class MetricRow:
    iteration: int
    t: float
    h: float
    rel_error: float
    misfit: float
    noise_level: float
    cov_norm: float
    loss: float

    def as_strings(self) -> list[str]:
        values = [self.t, self.h, self.rel_error, self.misfit, self.noise_level, self.cov_norm, self.loss]
        return [str(self.iteration)] + [NewtUtil.format_float(value) for value in values]


@dataclass
class RunRecord:
    """ ## Per-iteration metrics of a run, evaluated at the ensemble mean.

    `snapshots[k]` is member 0 for k <= 1 and the mean afterwards.
    `times` and `trajectory` are filled only when trajectory recording is on.
    """

    kind: str
    rows: list[MetricRow] = field(default_factory=list)
    snapshots: dict[int, SpectralField] = field(default_factory=dict)
    member_misfits: list[np.ndarray] = field(default_factory=list)
    times: list[float] = field(default_factory=list)
    trajectory: list[np.ndarray] = field(default_factory=list)
    final_ensemble: Ensemble | None = None
    stop_reason: str = "iterations"
    failed: bool = False
    failure_note: str = ""


def _check_kind(
        kind: str,
        location: str
        ) -> None:
    if kind not in FLOW_KINDS:
        NewtCons.error_msg(
            f"Unknown flow kind: {kind}",
            f"Known kinds: {', '.join(FLOW_KINDS)}",
            location=location + " : kind"
        )


def interaction(
        e: Ensemble,
        p: InverseProblem,
        kind: str
        ) -> InteractionMatrix:
    """ ## Build the J x J matrix D (kind "eki") or E (kind "teki").

    D_jk = <Gamma^(-1/2)(G(u^(j)) - y), Gamma^(-1/2)(G(u^(k)) - G_mean)>
    E_jk = D_jk + lambda <u^(j), u^(k) - u_mean>_K

    The second factor is centered, so every row sums to zero over k.

    Args:
        e (Ensemble):
            Ensemble with its forward cache filled.
        p (InverseProblem):
            The problem.
        kind (str):
            "eki" or "teki".

    Returns:
        out (InteractionMatrix):
            The matrix.

    Raises:
        SystemExit:
            If the forward cache is missing.
    """

    _check_kind(kind, "Newt.flow.interaction")

    if e.cached_forward is None:
        NewtCons.error_msg(
            "Interaction needs cached forward evaluations",
            location="Newt.flow.interaction : missing cache"
        )

    st = NewtKalman.stats(e)
    weights = p.noise.inv_sqrt[:, None]
    entries = (weights * (e.cached_forward - p.y[:, None])).T @ (weights * st.centered_g)

    if kind == "teki":
        precision = 1.0 / NewtField.eigenvalues(e.spec).reshape(-1)
        entries = entries + p.lam * (e.coeffs.T @ (precision[:, None] * st.centered_u))

    return InteractionMatrix(entries, kind)


def adaptive_step_size(
        E: InteractionMatrix,
        h0: float,
        delta: float
        ) -> float:
    """ ## h = h0 / (|E|_F + delta). """

    NewtCons.validate_positive(
        h0,
        location="Newt.flow.adaptive_step_size : h0"
    )
    NewtCons.validate_positive(
        delta,
        location="Newt.flow.adaptive_step_size : delta"
    )

    return float(h0) / (float(np.linalg.norm(E.entries, "fro")) + float(delta))


def _drift(
        e: Ensemble,
        E: InteractionMatrix
        ) -> np.ndarray:
    centered = e.coeffs - e.coeffs.mean(axis=1, keepdims=True)
    return -(centered @ E.entries.T) / e.size


def rhs(
        e: Ensemble,
        p: InverseProblem,
        kind: str
        ) -> np.ndarray:
    """ ## Flow vector field as an (n_modes, J) matrix; fills the forward cache if needed. """

    if e.cached_forward is None:
        e = NewtKalman.evaluate_forward(e, p.model)

    return _drift(e, interaction(e, p, kind))


def covariance_norm(
        e: Ensemble
        ) -> float:
    """ ## Operator norm of C = (1/J) U_c U_c^T, via the J x J Gram matrix. """

    centered = e.coeffs - e.coeffs.mean(axis=1, keepdims=True)
    gram = centered.T @ centered / e.size
    return max(float(scipy.linalg.eigvalsh(gram)[-1]), 0.0)


def euler_step(
        s: FlowState,
        p: InverseProblem,
        kind: str,
        h0: float,
        delta: float,
        n_jobs: int = 0
        ) -> FlowState:
    """ ## One explicit Euler step with adaptive step size h = h0 / (|E|_F + delta).

    Returns:
        out (FlowState):
            Advanced state; its ensemble has no forward cache.
    """

    _check_kind(kind, "Newt.flow.euler_step")

    e = s.ensemble
    if e.cached_forward is None:
        e = NewtKalman.evaluate_forward(e, p.model, n_jobs=n_jobs)

    E = interaction(e, p, kind)
    h = adaptive_step_size(E, h0, delta)
    moved = e.coeffs + h * _drift(e, E)

    return FlowState(t=s.t + h, n=s.n + 1, ensemble=e.with_coeffs(moved), h=h)


def discrete_step(
        s: FlowState,
        p: InverseProblem,
        kind: str,
        perturb: str = "none",
        rng: np.random.Generator | None = None,
        span: np.ndarray | None = None,
        n_jobs: int = 0
        ) -> FlowState:
    """ ## One discrete Kalman update (`kalman.eki_step` / `kalman.teki_step`), counted as unit time. """

    _check_kind(kind, "Newt.flow.discrete_step")

    if kind == "eki":
        moved = NewtKalman.eki_step(s.ensemble, p, perturb=perturb, rng=rng, n_jobs=n_jobs)
    else:
        moved = NewtKalman.teki_step(s.ensemble, p, perturb=perturb, rng=rng, n_jobs=n_jobs, span=span)

    return FlowState(t=s.t + 1.0, n=s.n + 1, ensemble=moved, h=1.0)


def _record_state(
        record: RunRecord,
        state: FlowState,
        p: InverseProblem,
        config: RunConfig,
        u_truth: SpectralField | None,
        noise_norm: float,
        snapshot_iters: set[int]
        ) -> MetricRow:
    e = state.ensemble
    mean = NewtKalman.ensemble_mean(e)

    rel_error = NewtProb.relative_error(mean, u_truth) if u_truth is not None else float("nan")
    row = MetricRow(
        iteration=state.n,
        t=state.t,
        h=state.h,
        rel_error=rel_error,
        misfit=NewtProb.misfit(p, mean),
        noise_level=float(noise_norm),
        cov_norm=covariance_norm(e),
        loss=NewtProb.tikhonov_loss(p, mean),
    )
    record.rows.append(row)

    record.member_misfits.append(np.array([
        NewtProb.data_misfit(p, e.cached_forward[:, j]) for j in range(e.size)
    ]))

    if state.n in snapshot_iters:
        record.snapshots[state.n] = e.member(0) if state.n <= 1 else mean

    if config.record_trajectory:
        record.times.append(state.t)
        record.trajectory.append(e.coeffs.copy())

    return row


def run(
        initial: Ensemble,
        p: InverseProblem,
        kind: str,
        config: RunConfig | None = None,
        u_truth: SpectralField | None = None,
        noise_norm: float = float("nan"),
        print_log: bool = False,
        rng: np.random.Generator | None = None
        ) -> RunRecord:
    """ ## Integrate the flow and record metrics after every iteration.

    With `config.scheme == "discrete"` each iteration is one Kalman update
    instead of one Euler step; `rng` then feeds the perturbed observations.

    Metrics use the ensemble mean. A failure inside a step is reported
    through the usual error block; the run then stops and the record keeps
    every row computed so far, with `failed=True`.

    Args:
        initial (Ensemble):
            Starting ensemble.
        p (InverseProblem):
            The problem.
        kind (str):
            "eki" or "teki".
        config (RunConfig | None):
            Integration settings.<br>
            Defaults to None, meaning `RunConfig()`.
        u_truth (SpectralField | None):
            Truth for the relative error column; NaN when None.
        noise_norm (float):
            Value for the noise_level column and the discrepancy stop.<br>
            Defaults to NaN.
        print_log (bool):
            If True, prints one line per iteration.<br>
            Defaults to False.
        rng (np.random.Generator | None):
            Perturbation stream for the discrete scheme with `perturb="full"`.

    Returns:
        out (RunRecord):
            iterations + 1 rows unless a stop rule or a failure ends the run early.
    """

    _check_kind(kind, "Newt.flow.run")
    if config is None:
        config = RunConfig()

    record = RunRecord(kind=kind)
    snapshot_iters = set(config.snapshot_iters) | {0}
    state = FlowState(t=0.0, n=0, ensemble=initial)
    span = NewtKalman.orthonormal_basis(initial.coeffs) if config.scheme == "discrete" else None

    try:
        if state.ensemble.cached_forward is None:
            state = FlowState(
                t=0.0, n=0,
                ensemble=NewtKalman.evaluate_forward(initial, p.model, n_jobs=config.n_jobs)
            )
        row = _record_state(record, state, p, config, u_truth, noise_norm, snapshot_iters)

        for _ in range(config.iterations):
            if config.t_end is not None and state.t >= config.t_end:
                record.stop_reason = "t_end"
                break

            if config.scheme == "discrete":
                moved = discrete_step(
                    state, p, kind, perturb=config.perturb, rng=rng,
                    span=span, n_jobs=config.n_jobs
                )
            else:
                moved = euler_step(state, p, kind, config.h0, config.delta, n_jobs=config.n_jobs)
            state = FlowState(
                t=moved.t, n=moved.n, h=moved.h,
                ensemble=NewtKalman.evaluate_forward(moved.ensemble, p.model, n_jobs=config.n_jobs)
            )
            row = _record_state(record, state, p, config, u_truth, noise_norm, snapshot_iters)

            if print_log:
                print(f"[Newt.flow.run] {kind} iter={row.iteration} t={row.t:.6g} "
                      f"misfit={row.misfit:.6g} rel_error={row.rel_error:.6g}")

            if config.discrepancy_stop and row.misfit <= noise_norm:
                record.stop_reason = "discrepancy"
                break

    except SystemExit:
        record.failed = True
        record.stop_reason = "failed"
        record.failure_note = f"step {state.n + 1} failed after t={state.t!r}"

    record.final_ensemble = state.ensemble
    return record


def gradient_flow_residual(
        e: Ensemble,
        p: InverseProblem
        ) -> float:
    """ ## Check that the linear TEKI flow is the preconditioned gradient flow du/dt = -C(u) grad I(u).

    grad I(u) = A^T Gamma^(-1)(A u - y) + lambda C0^(-1) u.
    Returns max_j |rhs_j + C grad I_j|_X divided by max_j |C grad I_j|_X.

    Raises:
        SystemExit:
            If the forward model is not linear.
    """

    if not p.model.is_linear:
        NewtCons.error_msg(
            "Gradient-flow identity needs a linear forward model",
            location="Newt.flow.gradient_flow_residual : nonlinear model"
        )

    matrix = p.model.matrix
    coeffs = e.coeffs
    precision = 1.0 / NewtField.eigenvalues(e.spec).reshape(-1)

    grad = matrix.T @ ((matrix @ coeffs - p.y[:, None]) / p.noise.gamma_diag[:, None])
    grad = grad + p.lam * precision[:, None] * coeffs

    centered = coeffs - coeffs.mean(axis=1, keepdims=True)
    preconditioned = centered @ (centered.T @ grad) / e.size

    difference = np.linalg.norm(rhs(e, p, "teki") + preconditioned, axis=0).max()
    scale = np.linalg.norm(preconditioned, axis=0).max()

    if scale == 0.0:
        return float(difference)
    return float(difference / scale)


# === FILES ===

def save_run_record(
        record: RunRecord,
        output_dir: str,
        print_log: bool = True
        ) -> str:
    """ ## Write `metrics.csv` with one row per recorded iteration.

    Returns:
        out (str):
            Path of the written file.
    """

    file_name = os.path.join(output_dir, "metrics.csv")
    rows = [METRICS_HEADER] + [row.as_strings() for row in record.rows]
    NewtFiles.save_csv_to_file(file_name, rows, print_log=False)

    if print_log:
        print("[Newt.flow.save_run_record] Saved metrics:")
        print(file_name)
        print(f"(rows={len(record.rows)}, stop={record.stop_reason})")

    return file_name


def save_trajectory(
        record: RunRecord,
        file_name: str,
        print_log: bool = True
        ) -> None:
    """ ## Store recorded times and the (steps, n_modes, J) coefficient stack with `np.savez`. """

    if not record.trajectory:
        NewtCons.error_msg(
            "Run has no recorded trajectory",
            "Enable record_trajectory in the run config",
            location="Newt.flow.save_trajectory : empty"
        )

    NewtFiles.ensure_dir_exists(file_name)
    np.savez(file_name, times=np.asarray(record.times), coeffs=np.stack(record.trajectory))

    if print_log:
        print("[Newt.flow.save_trajectory] Saved trajectory:")
        print(file_name)
        print(f"(steps={len(record.trajectory)})")


def load_trajectory(
        file_name: str,
        stop: bool = True
        ) -> tuple[np.ndarray, np.ndarray] | None:
    """ ## Read `times` and `coeffs` written by `save_trajectory`. """

    if not NewtFiles.check_file_exists(file_name, stop=stop):
        return None

    with np.load(file_name) as data:
        return data["times"].copy(), data["coeffs"].copy()
