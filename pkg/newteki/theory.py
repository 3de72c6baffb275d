"""
Updated on 2026-10
Created on 2026-09

@author: NewtCode Anna Burova

Numerical checks of the long-time behaviour of the continuous-time flows:
span invariance, ensemble collapse, a-priori bounds, convergence to the
constrained Tikhonov minimizer and the Riccati decay of the whitened covariance.

All restrictions work in orthonormal coordinates of
A = span{u_0^(j)} and B = span{u_0^(j) - u_mean_0}.
lambda is folded into the prior: Omega = lambda C0^(-1) + A^T Gamma^(-1) A.
The collapse and bounded-wrap constants lambda_m, lambda_M are plain
K-norm quotients; multiply by lambda when checking a run with lambda != 1.

Trajectories are (steps, n_modes, J) coefficient stacks with matching times,
as written by `flow.save_trajectory`.

Classes:
    class SpanBasis
    class LinearProblemRestriction
    class CheckReport
    class BoundedModel(ForwardModel)

Functions:
    def format_report(
        report: CheckReport
        ) -> str
    def span_basis(
        e: Ensemble
        ) -> SpanBasis
    def lambda_bounds(
        basis: SpanBasis
        ) -> tuple[float, float]
    def collapse_bound_check(
        times: np.ndarray,
        cov_norms: np.ndarray,
        lambda_m: float,
        c0_norm: float | None = None,
        slack: float = 1.05
        ) -> CheckReport
    def kkt_solutions(
        p: InverseProblem,
        basis: SpanBasis
        ) -> LinearProblemRestriction
    def map_identity_check(
        r: LinearProblemRestriction,
        basis: SpanBasis
        ) -> float
    def convergence_bound_check(
        times: np.ndarray,
        trajectory: np.ndarray,
        r: LinearProblemRestriction,
        basis: SpanBasis,
        slack: float = 1.05
        ) -> CheckReport
    def riccati_check(
        times: np.ndarray,
        trajectory: np.ndarray,
        r: LinearProblemRestriction,
        basis: SpanBasis,
        tolerance: float = 0.02,
        drift_tolerance: float = 1e-2
        ) -> CheckReport
    def apriori_bound_check(
        trajectory: np.ndarray,
        p: InverseProblem,
        slack: float = 0.01
        ) -> CheckReport
    === BOUNDED WRAP ===
    def smoothstep_cutoff(
        x: float,
        M: float
        ) -> float
    def bounded_wrap(
        model: ForwardModel,
        M: float
        ) -> BoundedModel
    def nonlinear_bound_check(
        times: np.ndarray,
        trajectory: np.ndarray,
        basis: SpanBasis,
        M: float,
        T: float,
        slack: float = 1.05
        ) -> CheckReport
    === INVARIANCE ===
    def orthogonal_drift(
        trajectory: np.ndarray,
        basis: SpanBasis
        ) -> float
    def discrete_continuous_gap(
        e: Ensemble,
        p: InverseProblem,
        h: float
        ) -> float
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

import newteki.console as NewtCons
import newteki.utility as NewtUtil
import newteki.field as NewtField
import newteki.problem as NewtProb
import newteki.kalman as NewtKalman
import newteki.flow as NewtFlow
from newteki.field import CovarianceSpec, SpectralField
from newteki.problem import ForwardModel, InverseProblem
from newteki.kalman import Ensemble


@dataclass(frozen=True, eq=False)
class SpanBasis:
    """ ## Orthonormal bases of A and B, u_perp0 = u_mean_0 - P_B u_mean_0, and C(0) on B. """

    spec: CovarianceSpec
    a_cols: np.ndarray
    b_cols: np.ndarray
    u_perp0: np.ndarray
    cov0_b: np.ndarray
    ensemble_size: int


@dataclass(frozen=True, eq=False)
class LinearProblemRestriction:
    """ ## Linear-problem quantities restricted to B.

    `a_mat` is the forward matrix on the B columns, `omega_b` the restricted precision,
    `u_dagger` / `u_dagger_b` the unconstrained / constrained minimizers,
    `v_dagger` the KKT residual and `m0` the initial-covariance constant.
    """

    a_mat: np.ndarray
    omega: np.ndarray
    omega_b: np.ndarray
    omega_b_half: np.ndarray
    u_dagger: np.ndarray
    u_dagger_b: np.ndarray
    v_dagger: np.ndarray
    m0: float


@dataclass(frozen=True)
class CheckReport:
    """ ## Outcome of one check: worst ratio against its bound and where it happened. """

    name: str
    worst_ratio: float
    passed: bool
    worst_index: int = -1
    worst_t: float = float("nan")
    detail: str = ""


def format_report(
        report: CheckReport
        ) -> str:
    """ ## Render a CheckReport as `key=value` lines. """

    lines = [
        f"check={report.name}",
        f"passed={'true' if report.passed else 'false'}",
        f"worst_ratio={NewtUtil.format_float(report.worst_ratio)}",
        f"worst_index={report.worst_index}",
        f"worst_t={NewtUtil.format_float(report.worst_t)}",
    ]
    if report.detail:
        lines.append(f"detail={report.detail}")
    return "\n".join(lines)


def _check_trajectory(
        trajectory: np.ndarray,
        n_modes: int,
        location: str
        ) -> np.ndarray:
    trajectory = np.asarray(trajectory, dtype=float)
    if trajectory.ndim != 3 or trajectory.shape[1] != n_modes:
        NewtCons.error_msg(
            f"Trajectory shape {trajectory.shape} is not (steps, {n_modes}, J)",
            location=location + " : trajectory"
        )
    return trajectory


def _require_linear(
        p: InverseProblem,
        location: str
        ) -> None:
    if not p.model.is_linear:
        NewtCons.error_msg(
            "This check needs a linear forward model",
            location=location + " : nonlinear model"
        )


def _sym_sqrt(
        matrix: np.ndarray
        ) -> np.ndarray:
    values, vectors = scipy.linalg.eigh(matrix)
    return (vectors * np.sqrt(np.clip(values, 0.0, None))) @ vectors.T


def _worst(
        ratios: np.ndarray,
        times: np.ndarray
        ) -> tuple[float, int, float]:
    """ Worst ratio over a (steps, ...) array, with its step index and time. """
    per_step = ratios.reshape(ratios.shape[0], -1).max(axis=1)
    index = int(np.argmax(per_step))
    return float(per_step[index]), index, float(times[index])


def span_basis(
        e: Ensemble
        ) -> SpanBasis:
    """ ## Orthonormal bases of the initial span A and the centered span B.

    Raises:
        SystemExit:
            If the centered span is trivial (all members identical).
    """

    coeffs = e.coeffs
    mean = coeffs.mean(axis=1)
    centered = coeffs - mean[:, None]

    a_cols = NewtKalman.orthonormal_basis(coeffs)
    b_cols = NewtKalman.orthonormal_basis(centered)
    if b_cols.shape[1] == 0:
        NewtCons.error_msg(
            "Centered ensemble span is trivial: all members coincide",
            location="Newt.theory.span_basis : degenerate"
        )

    u_perp0 = mean - b_cols @ (b_cols.T @ mean)
    centered_b = b_cols.T @ centered
    cov0_b = centered_b @ centered_b.T / e.size

    return SpanBasis(e.spec, a_cols, b_cols, u_perp0, cov0_b, e.size)


def lambda_bounds(
        basis: SpanBasis
        ) -> tuple[float, float]:
    """ ## Extreme values of |v|_K^2 / |v|_X^2 over A.

    Computed as the extreme eigenvalues of Q^T diag(1/lambda_k) Q
    with Q the orthonormal basis of A.

    Returns:
        out (tuple[float, float]):
            (lambda_m, lambda_M) with 0 < lambda_m <= lambda_M.

    Raises:
        SystemExit:
            If A is trivial.
    """

    q = basis.a_cols
    if q.shape[1] == 0:
        NewtCons.error_msg(
            "Initial ensemble span is trivial",
            location="Newt.theory.lambda_bounds : degenerate"
        )

    precision = 1.0 / NewtField.eigenvalues(basis.spec).reshape(-1)
    values = scipy.linalg.eigvalsh(q.T @ (precision[:, None] * q))
    return float(values[0]), float(values[-1])


def collapse_bound_check(
        times: np.ndarray,
        cov_norms: np.ndarray,
        lambda_m: float,
        c0_norm: float | None = None,
        slack: float = 1.05
        ) -> CheckReport:
    """ ## Check |C(t)|_X <= 1 / (|C(0)|_X^(-1) + 2 lambda_m t) at every recorded time.

    Args:
        times (np.ndarray):
            Recorded flow times.
        cov_norms (np.ndarray):
            |C(t)|_X at those times, e.g. from `flow.covariance_norm`.
        lambda_m (float):
            Lower constant from `lambda_bounds` (times lambda for lambda != 1).
        c0_norm (float | None):
            |C(0)|_X.<br>
            Defaults to None, meaning `cov_norms[0]`.
        slack (float):
            Allowed multiplicative excess.<br>
            Defaults to 1.05.

    Returns:
        out (CheckReport):
            Worst value of |C(t)| / bound(t).
    """

    times = np.asarray(times, dtype=float)
    cov_norms = np.asarray(cov_norms, dtype=float)
    if c0_norm is None:
        c0_norm = float(cov_norms[0])

    if c0_norm <= 0.0:
        ratios = np.where(cov_norms > 0.0, np.inf, 0.0)
    else:
        bounds = 1.0 / (1.0 / c0_norm + 2.0 * lambda_m * times)
        ratios = cov_norms / bounds

    worst, index, worst_t = _worst(ratios, times)
    return CheckReport("collapse_bound", worst, worst <= slack, index, worst_t)


def kkt_solutions(
        p: InverseProblem,
        basis: SpanBasis
        ) -> LinearProblemRestriction:
    """ ## Unconstrained and B-constrained minimizers of the linear Tikhonov loss.

    u_dagger solves Omega (u_dagger + u_perp0) = A^T Gamma^(-1) y on the full truncated space.
    u_dagger_b solves Omega_B u_dagger_b = P_B (A^T Gamma^(-1) y - Omega u_perp0) on B.
    v_dagger = Omega (u_dagger_b + u_perp0) - A^T Gamma^(-1) y is X-orthogonal to B.
    m0 is the smallest eigenvalue of Omega_B^(1/2) C(0) Omega_B^(1/2) on B.

    Raises:
        SystemExit:
            If the forward model is not linear.
    """

    _require_linear(p, "Newt.theory.kkt_solutions")

    matrix = p.model.matrix
    inv_gamma = 1.0 / p.noise.gamma_diag
    precision = p.lam / NewtField.eigenvalues(basis.spec).reshape(-1)

    omega = np.diag(precision) + matrix.T @ (inv_gamma[:, None] * matrix)
    data_term = matrix.T @ (inv_gamma * p.y)

    u_dagger = scipy.linalg.solve(omega, data_term, assume_a="pos") - basis.u_perp0

    q = basis.b_cols
    omega_b = q.T @ omega @ q
    coords = scipy.linalg.solve(omega_b, q.T @ (data_term - omega @ basis.u_perp0), assume_a="pos")
    u_dagger_b = q @ coords
    v_dagger = omega @ (u_dagger_b + basis.u_perp0) - data_term

    omega_b_half = _sym_sqrt(omega_b)
    m0 = float(scipy.linalg.eigvalsh(omega_b_half @ basis.cov0_b @ omega_b_half)[0])

    return LinearProblemRestriction(
        a_mat=matrix @ q,
        omega=omega,
        omega_b=omega_b,
        omega_b_half=omega_b_half,
        u_dagger=u_dagger,
        u_dagger_b=u_dagger_b,
        v_dagger=v_dagger,
        m0=m0,
    )


def map_identity_check(
        r: LinearProblemRestriction,
        basis: SpanBasis
        ) -> float:
    """ ## X-norm of u_dagger_b - (P_B u_dagger + Omega_B^(-1) P_B Omega P_perp u_dagger). """

    q = basis.b_cols
    inside = q.T @ r.u_dagger
    outside = r.u_dagger - q @ inside
    correction = scipy.linalg.solve(r.omega_b, q.T @ (r.omega @ outside), assume_a="pos")
    return float(np.linalg.norm(r.u_dagger_b - q @ (inside + correction)))


def convergence_bound_check(
        times: np.ndarray,
        trajectory: np.ndarray,
        r: LinearProblemRestriction,
        basis: SpanBasis,
        slack: float = 1.05
        ) -> CheckReport:
    """ ## Check |e_j(t)|_Z^2 <= |e_j(0)|_Z^2 / (1 + 2 m0 t) for every member.

    e_j(t) = u_j(t) - u_perp0 - u_dagger_b and |e|_Z^2 = <Omega_B e, e>_X.
    The detail field carries the final relative error of the mean,
    |e_mean|_Z / |u_dagger_b|_Z.
    """

    times = np.asarray(times, dtype=float)
    trajectory = _check_trajectory(trajectory, basis.spec.n_modes, "Newt.theory.convergence_bound_check")

    q = basis.b_cols
    shift = (basis.u_perp0 + r.u_dagger_b)[None, :, None]
    errors = np.einsum("kr,skj->srj", q, trajectory - shift)
    z_norms = np.einsum("srj,rq,sqj->sj", errors, r.omega_b, errors)

    start = z_norms[0]
    floor = 1e-24 * max(1.0, float(start.max()))
    allowed = start[None, :] / (1.0 + 2.0 * r.m0 * times[:, None])
    ratios = np.where(
        allowed > floor, z_norms / np.maximum(allowed, floor),
        np.where(z_norms > floor, np.inf, 0.0)
    )

    mean_error = errors[-1].mean(axis=1)
    target_coords = q.T @ r.u_dagger_b
    target = float(np.sqrt(target_coords @ r.omega_b @ target_coords))
    final = float(np.sqrt(mean_error @ r.omega_b @ mean_error))
    rel = final / target if target > 0.0 else final

    worst, index, worst_t = _worst(ratios, times)
    return CheckReport(
        "convergence_bound", worst, worst <= slack, index, worst_t,
        detail=f"final_mean_rel_error={NewtUtil.format_float(rel)}"
    )


def riccati_check(
        times: np.ndarray,
        trajectory: np.ndarray,
        r: LinearProblemRestriction,
        basis: SpanBasis,
        tolerance: float = 0.02,
        drift_tolerance: float = 1e-2
        ) -> CheckReport:
    """ ## Check that D(t) = Omega_B^(1/2) C(t) Omega_B^(1/2) decays as 1 / (mu(0)^(-1) + 2t).

    Eigenvectors of D(0) must stay eigenvectors: the off-diagonal part of
    V^T D(t) V relative to |D(t)| is the drift. Zero eigenvalues must stay zero.

    Returns:
        out (CheckReport):
            Worst relative eigenvalue error; passes when it is within `tolerance`
            and the drift within `drift_tolerance`.
    """

    times = np.asarray(times, dtype=float)
    trajectory = _check_trajectory(trajectory, basis.spec.n_modes, "Newt.theory.riccati_check")

    q = basis.b_cols
    half = r.omega_b_half
    size = trajectory.shape[2]

    whitened = []
    for coeffs in trajectory:
        centered = q.T @ (coeffs - coeffs.mean(axis=1, keepdims=True))
        whitened.append(half @ (centered @ centered.T / size) @ half)

    mu0, vectors = scipy.linalg.eigh(whitened[0])
    scale = max(float(mu0.max()), 0.0)
    alive = mu0 > 1e-12 * scale

    errors = np.zeros((len(times), mu0.size))
    drift = 0.0
    for index, (t, d_t) in enumerate(zip(times, whitened)):
        rotated = vectors.T @ d_t @ vectors
        diagonal = np.diag(rotated)
        predicted = np.where(alive, mu0 / (1.0 + 2.0 * mu0 * t), 0.0)

        errors[index] = np.where(
            alive,
            np.abs(diagonal - predicted) / np.where(alive, predicted, 1.0),
            np.abs(diagonal) / max(scale, 1e-300) * 1e10
        )

        norm = float(np.linalg.norm(rotated))
        if norm > 0.0:
            off = float(np.linalg.norm(rotated - np.diag(diagonal)))
            drift = max(drift, off / norm)

    worst, index, worst_t = _worst(errors, times)
    return CheckReport(
        "riccati", worst, worst <= tolerance and drift <= drift_tolerance, index, worst_t,
        detail=f"eigenvector_drift={NewtUtil.format_float(drift)}"
    )


def apriori_bound_check(
        trajectory: np.ndarray,
        p: InverseProblem,
        slack: float = 0.01
        ) -> CheckReport:
    """ ## Check lambda |u_j(t)|_K^2 <= 2 I(u_j(0); y) for every member and step (linear models).

    Reported times are step indices, since the bound does not depend on t.
    """

    _require_linear(p, "Newt.theory.apriori_bound_check")
    trajectory = _check_trajectory(trajectory, p.prior.n_modes, "Newt.theory.apriori_bound_check")

    precision = 1.0 / NewtField.eigenvalues(p.prior).reshape(-1)
    k_norms = np.einsum("skj,k,skj->sj", trajectory, precision, trajectory)

    bounds = np.array([
        2.0 * NewtProb.tikhonov_loss(p, NewtField.field_from_vector(p.prior, trajectory[0][:, j])) / p.lam
        for j in range(trajectory.shape[2])
    ])
    ratios = np.where(
        bounds[None, :] > 0.0, k_norms / np.where(bounds > 0.0, bounds, 1.0)[None, :],
        np.where(k_norms > 0.0, np.inf, 0.0)
    )

    worst, index, _ = _worst(ratios, np.arange(trajectory.shape[0], dtype=float))
    return CheckReport("apriori_bound", worst, worst <= 1.0 + slack, index, float(index))


# === BOUNDED WRAP ===

def smoothstep_cutoff(
        x: float,
        M: float
        ) -> float:
    """ ## phi_M(x): 1 for x <= M, 0 for x >= M + 1, quintic smoothstep (C^2) in between. """

    if x <= M:
        return 1.0
    if x >= M + 1.0:
        return 0.0

    s = x - M
    return 1.0 - s ** 3 * (10.0 - 15.0 * s + 6.0 * s * s)


class BoundedModel(ForwardModel):
    """ ## G_M(u) = phi_M(|u|_K) G(u); zero outside the K-ball of radius M + 1. """

    def __init__(self, model: ForwardModel, M: float) -> None:
        self.model = model
        self.M = float(M)
        self.spec = model.spec
        self.obs_dim = model.obs_dim

    def apply(self, u: SpectralField) -> np.ndarray:
        factor = smoothstep_cutoff(NewtField.norm_k(u), self.M)
        if factor == 0.0:
            return np.zeros(self.obs_dim)
        return factor * self.model.apply(u)


def bounded_wrap(
        model: ForwardModel,
        M: float
        ) -> BoundedModel:
    """ ## Wrap a forward model so its output vanishes for |u|_K > M + 1.

    Args:
        model (ForwardModel):
            Model to wrap.
        M (float):
            Plateau radius, must be positive.

    Returns:
        out (BoundedModel):
            The wrapped model; equals `model` for |u|_K <= M.
    """

    NewtCons.validate_positive(
        M,
        location="Newt.theory.bounded_wrap : M"
    )

    return BoundedModel(model, M)


def nonlinear_bound_check(
        times: np.ndarray,
        trajectory: np.ndarray,
        basis: SpanBasis,
        M: float,
        T: float,
        slack: float = 1.05
        ) -> CheckReport:
    """ ## Check |u_j(t)|_K <= max{|u_j(T)|_K, M + sqrt(2 lambda_M J / (lambda_m T)) + 1} for t >= T.

    For runs with a `bounded_wrap` model. Uses the first recorded time >= T as T.

    Raises:
        SystemExit:
            If no recorded time reaches T.
    """

    times = np.asarray(times, dtype=float)
    trajectory = _check_trajectory(trajectory, basis.spec.n_modes, "Newt.theory.nonlinear_bound_check")
    NewtCons.validate_positive(
        T,
        location="Newt.theory.nonlinear_bound_check : T"
    )

    later = np.nonzero(times >= T)[0]
    if later.size == 0:
        NewtCons.error_msg(
            f"No recorded time reaches T={T}",
            f"Last time: {times[-1] if times.size else 'none'}",
            location="Newt.theory.nonlinear_bound_check : T"
        )
    start = int(later[0])

    lambda_m, lambda_big = lambda_bounds(basis)
    radius = M + math.sqrt(2.0 * lambda_big * basis.ensemble_size / (lambda_m * times[start])) + 1.0

    precision = 1.0 / NewtField.eigenvalues(basis.spec).reshape(-1)
    k_norms = np.sqrt(np.einsum("skj,k,skj->sj", trajectory[start:], precision, trajectory[start:]))
    bounds = np.maximum(k_norms[0], radius)
    ratios = k_norms / bounds[None, :]

    worst, index, worst_t = _worst(ratios, times[start:])
    return CheckReport("nonlinear_bound", worst, worst <= slack, index + start, worst_t)


# === INVARIANCE ===

def orthogonal_drift(
        trajectory: np.ndarray,
        basis: SpanBasis
        ) -> float:
    """ ## Largest change of any member along directions X-orthogonal to B.

    Returns max_{j,t} |(I - P_B)(u_j(t) - u_j(0))|_X, which bounds
    |<v, u_j(t)> - <v, u_j(0)>| for every unit v orthogonal to B.
    """

    trajectory = _check_trajectory(trajectory, basis.spec.n_modes, "Newt.theory.orthogonal_drift")

    q = basis.b_cols
    moved = trajectory - trajectory[0][None, :, :]
    outside = moved - np.einsum("kr,qr,sqj->skj", q, q, moved)
    return float(np.linalg.norm(outside, axis=1).max())


def discrete_continuous_gap(
        e: Ensemble,
        p: InverseProblem,
        h: float
        ) -> float:
    """ ## Frobenius distance between one EKI step with Gamma -> Gamma / h and one Euler D-flow step of size h.

    The gap is O(h^2) as h -> 0.
    """

    NewtCons.validate_positive(
        h,
        location="Newt.theory.discrete_continuous_gap : h"
    )

    if e.cached_forward is None:
        e = NewtKalman.evaluate_forward(e, p.model)

    rescaled = NewtProb.InverseProblem(p.model, p.y, p.noise.scaled(1.0 / h), p.prior, p.lam)
    discrete = NewtKalman.eki_step(e, rescaled, perturb="none")
    continuous = e.coeffs + h * NewtFlow.rhs(e, p, "eki")
    return float(np.linalg.norm(discrete.coeffs - continuous))
