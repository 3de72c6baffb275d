"""
Updated on 2026-10
Created on 2026-09

@author: NewtCode Anna Burova

Inverse problems y = G(u) + eta with diagonal noise covariance,
the Tikhonov augmentation z = F(u) + eta, F(u) = (G(u), u),
and the loss functions both methods minimize.

The regularization weight lambda is folded into the prior:
internally (lambda, C0) is used as (1, C0 / lambda).

Classes:
    class ForwardModel
    class LinearModel(ForwardModel)
    class PointObservationModel(LinearModel)
    class QuadraticModel(ForwardModel)
    class NoiseSpec
    class InverseProblem
    class AugmentedProblem

Functions:
    def data_misfit(
        p: InverseProblem,
        g_values: np.ndarray
        ) -> float
    def misfit(
        p: InverseProblem,
        u: SpectralField
        ) -> float
    def tikhonov_loss(
        p: InverseProblem,
        u: SpectralField
        ) -> float
    def augment(
        p: InverseProblem
        ) -> AugmentedProblem
    def noise_level(
        p: InverseProblem,
        u_truth: SpectralField,
        eta_realized: np.ndarray
        ) -> float
    def synthesize_data(
        model: ForwardModel,
        u_truth: SpectralField,
        noise: NoiseSpec,
        rng: np.random.Generator
        ) -> tuple[np.ndarray, np.ndarray]
    def relative_error(
        u: SpectralField,
        u_truth: SpectralField
        ) -> float
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

import newteki.console as NewtCons
import newteki.field as NewtField
from newteki.field import CovarianceSpec, SpectralField


class ForwardModel(ABC):
    """ ## Deterministic map from a SpectralField to an observation vector of length obs_dim.

    Implementations hold read-only state only,
    so `apply` may be called from several workers at once.
    """

    obs_dim: int
    spec: CovarianceSpec

    @abstractmethod
    def apply(self, u: SpectralField) -> np.ndarray:
        ...

    @property
    def matrix(self) -> np.ndarray | None:
        """ Matrix acting on flattened coefficients, or None for nonlinear models. """
        return None

    @property
    def is_linear(self) -> bool:
        return self.matrix is not None


class LinearModel(ForwardModel):
    """ ## G(u) = A c, with A an (obs_dim, n_modes) matrix on flattened coefficients. """

    def __init__(self, matrix: np.ndarray, spec: CovarianceSpec) -> None:
        matrix = np.array(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[1] != spec.n_modes:
            NewtCons.error_msg(
                f"Matrix shape {matrix.shape} does not act on {spec.n_modes} modes",
                location="Newt.problem.LinearModel : shape"
            )
        matrix.setflags(write=False)
        self._matrix = matrix
        self.spec = spec
        self.obs_dim = int(matrix.shape[0])

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    def apply(self, u: SpectralField) -> np.ndarray:
        return self._matrix @ NewtField.field_to_vector(u)


class PointObservationModel(LinearModel):
    """ ## Pointwise readout u(x_r) at fixed observation points; linear in the coefficients. """

    def __init__(self, points: list[tuple[float, float]], spec: CovarianceSpec) -> None:
        NewtCons.validate_type(
            points, list, check_non_empty=True,
            location="Newt.problem.PointObservationModel : points"
        )

        coords = np.asarray(points, dtype=float)
        modes = np.arange(spec.kmax + 1)
        scale = np.where(modes == 0, 1.0, np.sqrt(2.0))
        phi_1 = scale[None, :] * np.cos(np.pi * coords[:, 0:1] * modes[None, :])
        phi_2 = scale[None, :] * np.cos(np.pi * coords[:, 1:2] * modes[None, :])
        # row r, column (k1, k2) flattened k1 major
        matrix = (phi_1[:, :, None] * phi_2[:, None, :]).reshape(len(points), -1)

        super().__init__(matrix, spec)
        self.points = [(float(x1), float(x2)) for x1, x2 in coords]


class QuadraticModel(ForwardModel):
    """ ## G(u) = (A c)^2 elementwise; a smooth nonlinear toy. """

    def __init__(self, matrix: np.ndarray, spec: CovarianceSpec) -> None:
        self._linear = LinearModel(matrix, spec)
        self.spec = spec
        self.obs_dim = self._linear.obs_dim

    def apply(self, u: SpectralField) -> np.ndarray:
        return self._linear.apply(u) ** 2


@dataclass(frozen=True, eq=False)
class NoiseSpec:
    """ ## Diagonal noise covariance Gamma, stored as its diagonal (variances). """

    gamma_diag: np.ndarray

    def __post_init__(self) -> None:
        diag = np.array(self.gamma_diag, dtype=float).reshape(-1)
        NewtCons.validate_type(
            diag, np.ndarray, check_non_empty=True,
            location="Newt.problem.NoiseSpec : gamma_diag"
        )
        NewtCons.validate_positive(
            diag,
            location="Newt.problem.NoiseSpec : gamma_diag"
        )
        diag.setflags(write=False)
        object.__setattr__(self, "gamma_diag", diag)

    @classmethod
    def from_scalar(cls, gamma: float, obs_dim: int) -> NoiseSpec:
        """ Gamma = gamma^2 I. """
        NewtCons.validate_positive(
            gamma,
            location="Newt.problem.NoiseSpec.from_scalar : gamma"
        )
        return cls(np.full(obs_dim, float(gamma) ** 2))

    @property
    def inv_sqrt(self) -> np.ndarray:
        """ Diagonal of Gamma^(-1/2). """
        return 1.0 / np.sqrt(self.gamma_diag)

    def scaled(self, factor: float) -> NoiseSpec:
        return NoiseSpec(self.gamma_diag * float(factor))


@dataclass(frozen=True, eq=False)
class InverseProblem:
    """ ## Forward model, data, noise, prior covariance and regularization weight. """

    model: ForwardModel
    y: np.ndarray
    noise: NoiseSpec
    prior: CovarianceSpec
    lam: float = 1.0

    def __post_init__(self) -> None:
        y = np.array(self.y, dtype=float).reshape(-1)

        if y.size != self.model.obs_dim:
            NewtCons.error_msg(
                f"Data length {y.size} does not match obs_dim {self.model.obs_dim}",
                location="Newt.problem.InverseProblem : y"
            )
        if self.noise.gamma_diag.size != y.size:
            NewtCons.error_msg(
                f"Noise length {self.noise.gamma_diag.size} does not match data length {y.size}",
                location="Newt.problem.InverseProblem : noise"
            )
        if not np.all(np.isfinite(y)):
            NewtCons.error_msg(
                "Data must be finite",
                location="Newt.problem.InverseProblem : isfinite"
            )
        if self.model.spec != self.prior:
            NewtCons.error_msg(
                "Forward model and prior use different covariance specs",
                location="Newt.problem.InverseProblem : spec"
            )
        NewtCons.validate_positive(
            self.lam,
            location="Newt.problem.InverseProblem : lam"
        )

        y.setflags(write=False)
        object.__setattr__(self, "y", y)

    @property
    def obs_dim(self) -> int:
        return self.model.obs_dim


@dataclass(frozen=True, eq=False)
class AugmentedProblem:
    """ ## z = F(u) + eta with F(u) = (G(u), u), z = (y, 0), Sigma block-diagonal.

    `weights` holds the diagonal of Sigma^(-1/2):
    Gamma^(-1/2) on the data block, sqrt(lambda) lambda_k^(-1/2) on the mode block.
    """

    base: InverseProblem
    z: np.ndarray
    weights: np.ndarray

    @property
    def obs_dim(self) -> int:
        return int(self.z.size)

    def stack(self, g_values: np.ndarray, u_vectors: np.ndarray) -> np.ndarray:
        """ F values from forward outputs and coefficient vectors (columns or single vectors). """
        return np.concatenate([g_values, u_vectors], axis=0)

    def forward(self, u: SpectralField) -> np.ndarray:
        return self.stack(self.base.model.apply(u), NewtField.field_to_vector(u))

    def weighted_residual(self, u: SpectralField) -> np.ndarray:
        return self.weights * (self.z - self.forward(u))

    def half_weighted_residual_sq(self, u: SpectralField) -> float:
        return 0.5 * float(np.sum(self.weighted_residual(u) ** 2))


def data_misfit(
        p: InverseProblem,
        g_values: np.ndarray
        ) -> float:
    """ ## 1/2 |Gamma^(-1/2)(g - y)|^2 for already computed forward values. """

    residual = p.noise.inv_sqrt * (np.asarray(g_values, dtype=float) - p.y)
    return 0.5 * float(residual @ residual)


def misfit(
        p: InverseProblem,
        u: SpectralField
        ) -> float:
    """ ## Data misfit 1/2 |Gamma^(-1/2)(G(u) - y)|^2, the loss EKI minimizes.

    Args:
        p (InverseProblem):
            The problem.
        u (SpectralField):
            Candidate field.

    Returns:
        out (float):
            Nonnegative misfit, zero iff G(u) = y.
    """

    return data_misfit(p, p.model.apply(u))


def tikhonov_loss(
        p: InverseProblem,
        u: SpectralField
        ) -> float:
    """ ## misfit(p, u) + (lambda/2) |u|_K^2, the loss TEKI minimizes. """

    return misfit(p, u) + 0.5 * p.lam * NewtField.inner_k(u, u)


def augment(
        p: InverseProblem
        ) -> AugmentedProblem:
    """ ## Build the augmented problem of dimension obs_dim + n_modes. """

    mode_weights = np.sqrt(p.lam) / np.sqrt(NewtField.eigenvalues(p.prior).reshape(-1))
    z = np.concatenate([p.y, np.zeros(p.prior.n_modes)])
    weights = np.concatenate([p.noise.inv_sqrt, mode_weights])
    return AugmentedProblem(p, z, weights)


def noise_level(
        p: InverseProblem,
        u_truth: SpectralField,
        eta_realized: np.ndarray
        ) -> float:
    """ ## Gamma-weighted norm |Gamma^(-1/2) eta| of the noise added to the data.

    This is the overfitting benchmark plotted next to the misfit.

    Args:
        p (InverseProblem):
            The problem the data belongs to.
        u_truth (SpectralField):
            The truth the data was synthesized from; checked for compatibility only.
        eta_realized (np.ndarray):
            The noise actually added.

    Returns:
        out (float):
            Nonnegative noise level.
    """

    if u_truth.spec != p.prior:
        NewtCons.error_msg(
            "Truth and problem use different covariance specs",
            location="Newt.problem.noise_level : spec"
        )

    eta = np.asarray(eta_realized, dtype=float).reshape(-1)
    if eta.size != p.obs_dim:
        NewtCons.error_msg(
            f"Noise length {eta.size} does not match obs_dim {p.obs_dim}",
            location="Newt.problem.noise_level : size"
        )

    return float(np.linalg.norm(p.noise.inv_sqrt * eta))


def synthesize_data(
        model: ForwardModel,
        u_truth: SpectralField,
        noise: NoiseSpec,
        rng: np.random.Generator
        ) -> tuple[np.ndarray, np.ndarray]:
    """ ## Synthesize y = G(u_truth) + eta with eta ~ N(0, Gamma) from a dedicated stream.

    Returns:
        out (tuple[np.ndarray, np.ndarray]):
            The data y and the realized noise eta.
    """

    if noise.gamma_diag.size != model.obs_dim:
        NewtCons.error_msg(
            f"Noise length {noise.gamma_diag.size} does not match obs_dim {model.obs_dim}",
            location="Newt.problem.synthesize_data : noise"
        )

    eta = np.sqrt(noise.gamma_diag) * rng.standard_normal(model.obs_dim)
    return model.apply(u_truth) + eta, eta


def relative_error(
        u: SpectralField,
        u_truth: SpectralField
        ) -> float:
    """ ## |u - u_truth|_X / |u_truth|_X.

    Raises:
        SystemExit:
            If the truth is the zero field.
    """

    if u.spec != u_truth.spec:
        NewtCons.error_msg(
            "Field and truth use different covariance specs",
            location="Newt.problem.relative_error : spec"
        )

    truth_norm = NewtField.norm_x(u_truth)
    if truth_norm == 0.0:
        NewtCons.error_msg(
            "Relative error against a zero truth is undefined",
            location="Newt.problem.relative_error : zero truth"
        )

    diff = SpectralField(u.coeffs - u_truth.coeffs, u.spec)
    return NewtField.norm_x(diff) / truth_norm
