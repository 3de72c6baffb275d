"""
Updated on 2026-10
Created on 2026-09

@author: NewtCode Anna Burova

Discrete-time EKI and TEKI updates.

An Ensemble keeps its J members as the columns of a (n_modes, J) coefficient
matrix. Statistics use 1/J weights and stay factored: the Kalman gain is
applied through a J x J solve in ensemble space (Woodbury identity),
never through a dense covariance over the state or data dimension.

Classes:
    class Ensemble
    class EnsembleStats

Functions:
    def evaluate_forward(
        e: Ensemble,
        model: ForwardModel,
        n_jobs: int = 0
        ) -> Ensemble
    def ensemble_mean(
        e: Ensemble
        ) -> SpectralField
    def stats(
        e: Ensemble,
        evals: np.ndarray | None = None
        ) -> EnsembleStats
    def orthonormal_basis(
        columns: np.ndarray,
        tol: float = 1e-12
        ) -> np.ndarray
    def kalman_update(
        coeffs: np.ndarray,
        centered_u: np.ndarray,
        centered_f: np.ndarray,
        weights: np.ndarray,
        residuals: np.ndarray
        ) -> np.ndarray
    def eki_step(
        e: Ensemble,
        p: InverseProblem,
        perturb: str = "none",
        rng: np.random.Generator | None = None,
        n_jobs: int = 0
        ) -> Ensemble
    def teki_step(
        e: Ensemble,
        p: InverseProblem,
        perturb: str = "none",
        rng: np.random.Generator | None = None,
        n_jobs: int = 0,
        project_perturbations: bool = True,
        span: np.ndarray | None = None
        ) -> Ensemble
    def subspace_residual(
        e: Ensemble,
        basis: np.ndarray
        ) -> float
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg
from joblib import Parallel, delayed

import newteki.console as NewtCons
import newteki.field as NewtField
import newteki.problem as NewtProb
from newteki.field import CovarianceSpec, SpectralField
from newteki.problem import ForwardModel, InverseProblem

PERTURB_MODES = ("none", "full")


@dataclass(frozen=True, eq=False)
class Ensemble:
    """ ## J >= 2 members sharing one CovarianceSpec, plus an optional forward cache.

    `coeffs` is (n_modes, J): column j is the flattened member j.
    `cached_forward`, when present, is (obs_dim, J) and index-aligned.
    """

    coeffs: np.ndarray
    spec: CovarianceSpec
    cached_forward: np.ndarray | None = None

    def __post_init__(self) -> None:
        coeffs = np.array(self.coeffs, dtype=float)

        if coeffs.ndim != 2 or coeffs.shape[0] != self.spec.n_modes:
            NewtCons.error_msg(
                f"Coefficient matrix shape {coeffs.shape} does not hold {self.spec.n_modes} modes",
                location="Newt.kalman.Ensemble : shape"
            )
        if coeffs.shape[1] < 2:
            NewtCons.error_msg(
                f"Ensemble needs J >= 2 members, got {coeffs.shape[1]}",
                location="Newt.kalman.Ensemble : J < 2"
            )
        if not np.all(np.isfinite(coeffs)):
            NewtCons.error_msg(
                "Ensemble coefficients must be finite",
                location="Newt.kalman.Ensemble : isfinite"
            )
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

        if self.cached_forward is not None:
            cache = np.array(self.cached_forward, dtype=float)
            if cache.ndim != 2 or cache.shape[1] != coeffs.shape[1]:
                NewtCons.error_msg(
                    f"Forward cache shape {cache.shape} is not aligned with {coeffs.shape[1]} members",
                    location="Newt.kalman.Ensemble : cache"
                )
            cache.setflags(write=False)
            object.__setattr__(self, "cached_forward", cache)

    @classmethod
    def from_members(cls, members: list[SpectralField]) -> Ensemble:
        NewtCons.validate_type(
            members, list, check_non_empty=True,
            location="Newt.kalman.Ensemble.from_members : members"
        )
        spec = members[0].spec
        if any(member.spec != spec for member in members):
            NewtCons.error_msg(
                "All members must share one covariance spec",
                location="Newt.kalman.Ensemble.from_members : spec"
            )
        columns = [NewtField.field_to_vector(member) for member in members]
        return cls(np.column_stack(columns), spec)

    @property
    def size(self) -> int:
        return int(self.coeffs.shape[1])

    def member(self, j: int) -> SpectralField:
        return NewtField.field_from_vector(self.spec, self.coeffs[:, j])

    @property
    def members(self) -> list[SpectralField]:
        return [self.member(j) for j in range(self.size)]

    def with_coeffs(self, coeffs: np.ndarray) -> Ensemble:
        """ New ensemble with the same spec and no forward cache. """
        return Ensemble(coeffs, self.spec)


@dataclass(frozen=True, eq=False)
class EnsembleStats:
    """ ## Means and centered factors; C^{uu} = (1/J) U_c U_c^T and so on. """

    mean_u: SpectralField
    mean_g: np.ndarray
    centered_u: np.ndarray
    centered_g: np.ndarray


def evaluate_forward(
        e: Ensemble,
        model: ForwardModel,
        n_jobs: int = 0
        ) -> Ensemble:
    """ ## Fill the forward cache with G(u^(j)) for every member.

    Evaluations run through **joblib** when `n_jobs != 0`;
    results come back in member order either way.

    Args:
        e (Ensemble):
            Ensemble to evaluate.
        model (ForwardModel):
            Forward model acting on the ensemble's spec.
        n_jobs (int):
            0 for a plain loop, otherwise passed to `joblib.Parallel`.<br>
            Defaults to 0.

    Returns:
        out (Ensemble):
            Same members with `cached_forward` of shape (obs_dim, J).
    """

    NewtCons.validate_type(
        n_jobs, int,
        location="Newt.kalman.evaluate_forward : n_jobs"
    )

    if model.spec != e.spec:
        NewtCons.error_msg(
            "Forward model and ensemble use different covariance specs",
            location="Newt.kalman.evaluate_forward : spec"
        )

    members = e.members
    if n_jobs == 0:
        outputs = [model.apply(member) for member in members]
    else:
        outputs = Parallel(n_jobs=n_jobs)(delayed(model.apply)(member) for member in members)

    return replace(e, cached_forward=np.column_stack(outputs))


def ensemble_mean(
        e: Ensemble
        ) -> SpectralField:
    return NewtField.field_from_vector(e.spec, e.coeffs.mean(axis=1))


def stats(
        e: Ensemble,
        evals: np.ndarray | None = None
        ) -> EnsembleStats:
    """ ## Empirical means and centered factors with 1/J weights.

    Args:
        e (Ensemble):
            The ensemble.
        evals (np.ndarray | None):
            (obs_dim, J) forward values index-aligned with the members.<br>
            Defaults to None, meaning the ensemble's cache.

    Returns:
        out (EnsembleStats):
            Means and centered columns; each centered matrix has zero row sums.

    Raises:
        SystemExit:
            If no forward values are available or they are misaligned.
    """

    if evals is None:
        evals = e.cached_forward
    if evals is None:
        NewtCons.error_msg(
            "No forward evaluations: fill the cache first",
            location="Newt.kalman.stats : missing cache"
        )

    evals = np.asarray(evals, dtype=float)
    if evals.ndim != 2 or evals.shape[1] != e.size:
        NewtCons.error_msg(
            f"Forward values shape {evals.shape} is not aligned with {e.size} members",
            location="Newt.kalman.stats : evals"
        )

    mean_u = e.coeffs.mean(axis=1)
    mean_g = evals.mean(axis=1)

    return EnsembleStats(
        mean_u=NewtField.field_from_vector(e.spec, mean_u),
        mean_g=mean_g,
        centered_u=e.coeffs - mean_u[:, None],
        centered_g=evals - mean_g[:, None],
    )


def orthonormal_basis(
        columns: np.ndarray,
        tol: float = 1e-12
        ) -> np.ndarray:
    """ ## Orthonormal basis of the column span by modified Gram-Schmidt, applied twice.

    A column is dropped when what remains after orthogonalization
    is at most `tol` times its original norm.

    Args:
        columns (np.ndarray):
            (dim, m) matrix whose column span is wanted.
        tol (float):
            Relative rank tolerance.<br>
            Defaults to 1e-12.

    Returns:
        out (np.ndarray):
            (dim, r) matrix with orthonormal columns, r <= m.
    """

    columns = np.asarray(columns, dtype=float)
    if columns.ndim == 1:
        columns = columns[:, None]

    basis: list[np.ndarray] = []
    scale = float(np.max(np.linalg.norm(columns, axis=0))) if columns.size else 0.0

    for index in range(columns.shape[1]):
        vector = columns[:, index].copy()
        original = float(np.linalg.norm(vector))
        if original <= tol * scale or original == 0.0:
            continue

        for _ in range(2):
            for q in basis:
                vector -= (q @ vector) * q

        remaining = float(np.linalg.norm(vector))
        if remaining <= tol * original:
            continue
        basis.append(vector / remaining)

    if not basis:
        return np.zeros((columns.shape[0], 0))
    return np.column_stack(basis)


def kalman_update(
        coeffs: np.ndarray,
        centered_u: np.ndarray,
        centered_f: np.ndarray,
        weights: np.ndarray,
        residuals: np.ndarray
        ) -> np.ndarray:
    """ ## Apply C^{uf}(C^{ff} + W^(-2))^(-1) to every residual column in ensemble space.

    Uses (1/J) U_c (I_J + (1/J) P_w^T P_w)^(-1) P_w^T R_w with
    P_w = W P_c and R_w = W R, where W = diag(weights) is the noise covariance to the -1/2.

    Returns:
        out (np.ndarray):
            Updated (n_modes, J) coefficients.

    Raises:
        SystemExit:
            If the J x J system cannot be solved.
    """

    size = coeffs.shape[1]
    weighted_f = weights[:, None] * centered_f
    weighted_r = weights[:, None] * residuals

    system = np.eye(size) + (weighted_f.T @ weighted_f) / size
    try:
        solved = scipy.linalg.solve(system, weighted_f.T @ weighted_r, assume_a="pos")
    except (scipy.linalg.LinAlgError, ValueError) as e:
        NewtCons.error_msg(
            "Ensemble-space system is numerically singular",
            f"Exception: {e}",
            location="Newt.kalman.kalman_update : solve"
        )

    return coeffs + centered_u @ solved / size


def _check_perturb(
        perturb: str,
        rng: np.random.Generator | None,
        location: str
        ) -> None:
    if perturb not in PERTURB_MODES:
        NewtCons.error_msg(
            f"Unknown perturb mode: {perturb}",
            f"Known modes: {', '.join(PERTURB_MODES)}",
            location=location + " : perturb"
        )
    if perturb == "full" and rng is None:
        NewtCons.error_msg(
            "perturb=full needs a random stream",
            location=location + " : rng"
        )


def eki_step(
        e: Ensemble,
        p: InverseProblem,
        perturb: str = "none",
        rng: np.random.Generator | None = None,
        n_jobs: int = 0
        ) -> Ensemble:
    """ ## One EKI update u^(j) += C^{up}(C^{pp} + Gamma)^(-1)(y^(j) - G(u^(j))).

    Perturbed observations y^(j) = y + xi^(j), xi^(j) ~ N(0, Gamma'),
    with Gamma' = 0 (`perturb="none"`) or Gamma (`perturb="full"`).
    Perturbations are drawn member by member from `rng`.

    Args:
        e (Ensemble):
            Current ensemble; the cache is filled if missing.
        p (InverseProblem):
            The problem.
        perturb (str):
            "none" or "full".<br>
            Defaults to "none".
        rng (np.random.Generator | None):
            Stream for perturbations, required for "full".
        n_jobs (int):
            Forward evaluation workers, see `evaluate_forward`.

    Returns:
        out (Ensemble):
            Updated ensemble without forward cache.
    """

    _check_perturb(perturb, rng, "Newt.kalman.eki_step")

    if e.cached_forward is None:
        e = evaluate_forward(e, p.model, n_jobs=n_jobs)

    st = stats(e)
    observed = np.repeat(p.y[:, None], e.size, axis=1)
    if perturb == "full":
        xi = rng.standard_normal((e.size, p.obs_dim)).T
        observed = observed + np.sqrt(p.noise.gamma_diag)[:, None] * xi

    updated = kalman_update(
        e.coeffs, st.centered_u, st.centered_g,
        p.noise.inv_sqrt, observed - e.cached_forward
    )
    return e.with_coeffs(updated)


def teki_step(
        e: Ensemble,
        p: InverseProblem,
        perturb: str = "none",
        rng: np.random.Generator | None = None,
        n_jobs: int = 0,
        project_perturbations: bool = True,
        span: np.ndarray | None = None
        ) -> Ensemble:
    """ ## One TEKI update: the EKI algebra applied to z = F(u) + eta, F(u) = (G(u), u).

    The prior block uses Sigma = diag(Gamma, C0 / lambda).
    With `perturb="full"` the mode-block perturbation is drawn from N(0, C0 / lambda)
    and, if `project_perturbations`, projected onto `span`, the orthonormal
    basis of the initial ensemble (`orthonormal_basis(initial.coeffs)`).
    The caller keeps that basis for the whole run; it is required in this mode.

    Args:
        e (Ensemble):
            Current ensemble; the cache is filled if missing.
        p (InverseProblem):
            The problem; `p.lam` is the regularization weight.
        perturb (str):
            "none" or "full".<br>
            Defaults to "none".
        rng (np.random.Generator | None):
            Stream for perturbations, required for "full".
        n_jobs (int):
            Forward evaluation workers.
        project_perturbations (bool):
            Project mode-block perturbations onto the span.<br>
            Defaults to True.
        span (np.ndarray | None):
            (n_modes, r) orthonormal basis of the initial ensemble.<br>
            Required when `perturb="full"` and `project_perturbations`.

    Returns:
        out (Ensemble):
            Updated ensemble without forward cache.
    """

    _check_perturb(perturb, rng, "Newt.kalman.teki_step")

    if e.cached_forward is None:
        e = evaluate_forward(e, p.model, n_jobs=n_jobs)

    aug = NewtProb.augment(p)
    st = stats(e)
    centered_f = aug.stack(st.centered_g, st.centered_u)
    observed = np.repeat(aug.z[:, None], e.size, axis=1)

    if perturb == "full":
        xi = rng.standard_normal((e.size, aug.obs_dim)).T
        noise = xi / aug.weights[:, None]
        if project_perturbations:
            if span is None:
                NewtCons.error_msg(
                    "Projected perturbations need the initial ensemble span",
                    "Pass span=orthonormal_basis(initial.coeffs)",
                    location="Newt.kalman.teki_step : span"
                )
            mode_block = noise[p.obs_dim:, :]
            noise[p.obs_dim:, :] = span @ (span.T @ mode_block)
        observed = observed + noise

    residuals = observed - aug.stack(e.cached_forward, e.coeffs)
    updated = kalman_update(e.coeffs, st.centered_u, centered_f, aug.weights, residuals)
    return e.with_coeffs(updated)


def subspace_residual(
        e: Ensemble,
        basis: np.ndarray
        ) -> float:
    """ ## Largest relative distance of a member from the span of `basis`.

    Returns max_j |(I - P) u^(j)|_X / |u^(j)|_X; zero members count as 0.

    Args:
        e (Ensemble):
            The ensemble.
        basis (np.ndarray):
            (n_modes, r) X-orthonormal basis, e.g. from `orthonormal_basis`.
    """

    basis = np.asarray(basis, dtype=float)
    if basis.ndim != 2 or basis.shape[0] != e.spec.n_modes:
        NewtCons.error_msg(
            f"Basis shape {basis.shape} does not match {e.spec.n_modes} modes",
            location="Newt.kalman.subspace_residual : basis"
        )

    outside = e.coeffs - basis @ (basis.T @ e.coeffs)
    norms = np.linalg.norm(e.coeffs, axis=0)
    distances = np.linalg.norm(outside, axis=0)

    ratios = np.divide(distances, norms, out=np.zeros_like(distances), where=norms > 0.0)
    return float(ratios.max())
