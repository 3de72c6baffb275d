"""
Updated on 2026-10
Created on 2026-09

@author: NewtCode Anna Burova

Spectral Gaussian random fields on [0,1]^2 with covariance
C0 = (-Laplace + tau^2)^(-alpha) under homogeneous Neumann conditions.

Coefficients are stored as a (kmax+1, kmax+1) array indexed [k1, k2];
flattening is lexicographic (k1 major), the order used by every ensemble matrix.

Classes:
    class CovarianceSpec
    class SpectralField
    class GridField

Functions:
    def cm_threshold(
        alpha: float
        ) -> float
    def eigenvalue(
        spec: CovarianceSpec,
        k: tuple[int, int]
        ) -> float
    def eigenvalues(
        spec: CovarianceSpec
        ) -> np.ndarray
    def mode_order(
        spec: CovarianceSpec
        ) -> list[tuple[int, int]]
    def regularity_sum(
        spec: CovarianceSpec,
        a: float
        ) -> float
    === CONSTRUCTION ===
    def zero_field(
        spec: CovarianceSpec
        ) -> SpectralField
    def unit_mode(
        spec: CovarianceSpec,
        k: tuple[int, int]
        ) -> SpectralField
    def field_from_vector(
        spec: CovarianceSpec,
        vector: np.ndarray
        ) -> SpectralField
    def field_to_vector(
        u: SpectralField
        ) -> np.ndarray
    def change_spec(
        u: SpectralField,
        spec: CovarianceSpec
        ) -> SpectralField
    === SAMPLING ===
    def sample_prior(
        spec: CovarianceSpec,
        rng: np.random.Generator
        ) -> SpectralField
    def sample_cm(
        spec: CovarianceSpec,
        a: float,
        rng: np.random.Generator,
        warn: bool = True
        ) -> SpectralField
    === GRID ===
    def synthesize(
        u: SpectralField,
        n: int
        ) -> GridField
    def analyze(
        g: GridField,
        spec: CovarianceSpec
        ) -> SpectralField
    def grid_l2_norm(
        g: GridField
        ) -> float
    def save_grid_field(
        file_name: str,
        g: GridField,
        print_log: bool = True
        ) -> None
    def read_grid_field(
        file_name: str,
        stop: bool = True,
        print_log: bool = True
        ) -> GridField | None
    === INNER PRODUCTS ===
    def inner_x(
        u: SpectralField,
        v: SpectralField
        ) -> float
    def inner_k(
        u: SpectralField,
        v: SpectralField
        ) -> float
    def norm_x(
        u: SpectralField
        ) -> float
    def norm_k(
        u: SpectralField
        ) -> float
    def scale_precision_half(
        u: SpectralField
        ) -> SpectralField
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

import newteki.console as NewtCons
import newteki.utility as NewtUtil
import newteki.files as NewtFiles


@dataclass(frozen=True)
class CovarianceSpec:
    """ ## Covariance operator (-Laplace + tau^2)^(-alpha), truncated at kmax per axis. """

    alpha: float
    tau: float
    kmax: int

    def __post_init__(self) -> None:
        NewtCons.validate_type(
            self.alpha, (int, float),
            location="Newt.field.CovarianceSpec : alpha"
        )
        NewtCons.validate_type(
            self.tau, (int, float),
            location="Newt.field.CovarianceSpec : tau"
        )
        NewtCons.validate_type(
            self.kmax, int,
            location="Newt.field.CovarianceSpec : kmax"
        )

        if self.alpha <= 1:
            NewtCons.error_msg(
                f"alpha must be > 1, got {self.alpha}",
                location="Newt.field.CovarianceSpec : alpha <= 1"
            )
        if self.tau <= 0:
            NewtCons.error_msg(
                f"tau must be > 0, got {self.tau}",
                location="Newt.field.CovarianceSpec : tau <= 0"
            )
        if self.kmax < 1:
            NewtCons.error_msg(
                f"kmax must be >= 1, got {self.kmax}",
                location="Newt.field.CovarianceSpec : kmax < 1"
            )

    @property
    def n_modes(self) -> int:
        return (self.kmax + 1) ** 2


@dataclass(frozen=True, eq=False)
class SpectralField:
    """ ## Field u(x) = sum_k c_k phi_k(x) in the Neumann cosine eigenbasis.

    The coefficient array is copied and made read-only on construction.
    """

    coeffs: np.ndarray
    spec: CovarianceSpec

    def __post_init__(self) -> None:
        size = self.spec.kmax + 1
        coeffs = np.array(self.coeffs, dtype=float)

        if coeffs.shape != (size, size):
            NewtCons.error_msg(
                f"Coefficient shape {coeffs.shape} does not match kmax={self.spec.kmax}",
                location="Newt.field.SpectralField : shape"
            )
        if not np.all(np.isfinite(coeffs)):
            NewtCons.error_msg(
                "Coefficients must be finite",
                location="Newt.field.SpectralField : isfinite"
            )

        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)


@dataclass(frozen=True, eq=False)
class GridField:
    """ ## Nodal values on the uniform grid x_i = i/n, row-major with x1 fastest. """

    n: int
    values: np.ndarray

    def __post_init__(self) -> None:
        NewtCons.validate_type(
            self.n, int,
            location="Newt.field.GridField : n"
        )
        if self.n < 1:
            NewtCons.error_msg(
                f"Grid divisions must be >= 1, got {self.n}",
                location="Newt.field.GridField : n < 1"
            )

        values = np.array(self.values, dtype=float).reshape(-1)
        if values.size != (self.n + 1) ** 2:
            NewtCons.error_msg(
                f"Expected {(self.n + 1) ** 2} values for n={self.n}, got {values.size}",
                location="Newt.field.GridField : size"
            )

        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def as_array(self) -> np.ndarray:
        """ Values as an (n+1, n+1) array indexed [j (x2), i (x1)]. """
        return self.values.reshape(self.n + 1, self.n + 1)

    @classmethod
    def constant(cls, n: int, value: float) -> GridField:
        return cls(n, np.full((n + 1) ** 2, float(value)))

    @classmethod
    def from_function(cls, n: int, func) -> GridField:
        """ Evaluate `func(x1, x2)` (vectorized) on the grid nodes. """
        nodes = np.linspace(0.0, 1.0, n + 1)
        x1, x2 = np.meshgrid(nodes, nodes, indexing="xy")
        return cls(n, np.asarray(func(x1, x2), dtype=float).reshape(-1))


def _check_compatible(
        u: SpectralField,
        v: SpectralField,
        location: str
        ) -> None:
    if u.spec != v.spec:
        NewtCons.error_msg(
            "Fields use different covariance specs",
            f"Left: {u.spec}",
            f"Right: {v.spec}",
            location=location
        )


def _basis_matrix(
        kmax: int,
        n: int
        ) -> np.ndarray:
    """ (n+1, kmax+1) matrix of the 1D factors c_k cos(k pi x_i). """

    nodes = np.linspace(0.0, 1.0, n + 1)
    modes = np.arange(kmax + 1)
    scale = np.where(modes == 0, 1.0, np.sqrt(2.0))
    return scale[None, :] * np.cos(np.pi * nodes[:, None] * modes[None, :])


def cm_threshold(
        alpha: float
        ) -> float:
    """ ## Smallest decay exponent a for which lambda_k^a draws lie in the Cameron-Martin space.

    Draws need a > 1/2 + 1/(2 alpha).
    """

    return 0.5 + 0.5 / float(alpha)


def eigenvalue(
        spec: CovarianceSpec,
        k: tuple[int, int]
        ) -> float:
    """ ## Eigenvalue lambda_k = (|k|^2 pi^2 + tau^2)^(-alpha) of C0.

    Args:
        spec (CovarianceSpec):
            Covariance operator.
        k (tuple[int, int]):
            Mode index pair (k1, k2) with 0 <= k1, k2 <= kmax.

    Returns:
        out (float):
            The eigenvalue, strictly decreasing in |k|^2.

    Raises:
        SystemExit:
            If the mode lies outside the truncation range.
    """

    k1, k2 = k
    if not (0 <= k1 <= spec.kmax and 0 <= k2 <= spec.kmax):
        NewtCons.error_msg(
            f"Mode {k} outside 0..{spec.kmax}",
            location="Newt.field.eigenvalue : range"
        )

    return float((float(k1 * k1 + k2 * k2) * np.pi ** 2 + spec.tau ** 2) ** (-spec.alpha))


def eigenvalues(
        spec: CovarianceSpec
        ) -> np.ndarray:
    """ ## Full (kmax+1, kmax+1) table of eigenvalues, indexed [k1, k2]. """

    modes = np.arange(spec.kmax + 1, dtype=float)
    k_sq = modes[:, None] ** 2 + modes[None, :] ** 2
    return (k_sq * np.pi ** 2 + spec.tau ** 2) ** (-spec.alpha)


def mode_order(
        spec: CovarianceSpec
        ) -> list[tuple[int, int]]:
    """ ## Modes by descending eigenvalue, ties broken lexicographically on (k1, k2). """

    size = spec.kmax + 1
    modes = [(k1, k2) for k1 in range(size) for k2 in range(size)]
    return sorted(modes, key=lambda k: (k[0] ** 2 + k[1] ** 2, k[0], k[1]))


def regularity_sum(
        spec: CovarianceSpec,
        a: float
        ) -> float:
    """ ## Truncated sum of lambda_k^(2a-1), the squared Cameron-Martin norm of a lambda^a draw in mean. """

    return float(np.sum(eigenvalues(spec) ** (2.0 * a - 1.0)))


# === CONSTRUCTION ===

def zero_field(
        spec: CovarianceSpec
        ) -> SpectralField:
    return SpectralField(np.zeros((spec.kmax + 1, spec.kmax + 1)), spec)


def unit_mode(
        spec: CovarianceSpec,
        k: tuple[int, int]
        ) -> SpectralField:
    """ ## Field with coefficient 1 on mode k and 0 elsewhere (the eigenfunction phi_k). """

    eigenvalue(spec, k)
    coeffs = np.zeros((spec.kmax + 1, spec.kmax + 1))
    coeffs[k[0], k[1]] = 1.0
    return SpectralField(coeffs, spec)


def field_from_vector(
        spec: CovarianceSpec,
        vector: np.ndarray
        ) -> SpectralField:
    """ ## Build a field from its flattened (lexicographic) coefficient vector. """

    vector = np.asarray(vector, dtype=float)
    if vector.shape != (spec.n_modes,):
        NewtCons.error_msg(
            f"Expected a vector of {spec.n_modes} coefficients, got shape {vector.shape}",
            location="Newt.field.field_from_vector : shape"
        )

    return SpectralField(vector.reshape(spec.kmax + 1, spec.kmax + 1), spec)


def field_to_vector(
        u: SpectralField
        ) -> np.ndarray:
    return u.coeffs.reshape(-1).copy()


def change_spec(
        u: SpectralField,
        spec: CovarianceSpec
        ) -> SpectralField:
    """ ## Reinterpret the same coefficients under another covariance spec.

    Only the truncation must agree; the basis does not depend on alpha or tau.
    Used to compare a truth drawn with one regularity against an inversion prior.
    """

    if u.spec.kmax != spec.kmax:
        NewtCons.error_msg(
            f"Cannot move kmax={u.spec.kmax} coefficients to kmax={spec.kmax}",
            location="Newt.field.change_spec : kmax"
        )

    return SpectralField(u.coeffs, spec)


# === SAMPLING ===

def _draw(
        spec: CovarianceSpec,
        power: float,
        rng: np.random.Generator
        ) -> SpectralField:
    # standard_normal fills in C order, i.e. lexicographic (k1, k2)
    xi = rng.standard_normal((spec.kmax + 1, spec.kmax + 1))
    return SpectralField(np.power(eigenvalues(spec), power) * xi, spec)


def sample_prior(
        spec: CovarianceSpec,
        rng: np.random.Generator
        ) -> SpectralField:
    """ ## Draw from N(0, C0) by the Karhunen-Loeve expansion c_k = sqrt(lambda_k) xi_k.

    Args:
        spec (CovarianceSpec):
            Covariance operator.
        rng (np.random.Generator):
            Seeded stream, consumed in lexicographic mode order.

    Returns:
        out (SpectralField):
            One prior sample.
    """

    NewtCons.validate_type(
        rng, np.random.Generator,
        location="Newt.field.sample_prior : rng"
    )

    return _draw(spec, 0.5, rng)


def sample_cm(
        spec: CovarianceSpec,
        a: float,
        rng: np.random.Generator,
        warn: bool = True
        ) -> SpectralField:
    """ ## Draw with coefficient decay c_k = lambda_k^a xi_k.

    With `a = 1/2` this is byte-identical to `sample_prior` on the same stream.
    Exponents at or below `cm_threshold(alpha)` still produce a valid truncated
    field; the draw is then outside the Cameron-Martin space and a warning is printed.

    Args:
        spec (CovarianceSpec):
            Covariance operator.
        a (float):
            Decay exponent, must be positive.
        rng (np.random.Generator):
            Seeded stream.
        warn (bool):
            If True, report exponents below the threshold.<br>
            Defaults to True.

    Returns:
        out (SpectralField):
            One sample.
    """

    NewtCons.validate_positive(
        a,
        location="Newt.field.sample_cm : a"
    )
    NewtCons.validate_type(
        rng, np.random.Generator,
        location="Newt.field.sample_cm : rng"
    )

    threshold = cm_threshold(spec.alpha)
    if warn and a <= threshold:
        NewtCons.error_msg(
            f"a={a} is not above 1/2 + 1/(2 alpha) = {threshold}",
            "Draw is outside the Cameron-Martin space",
            location="Newt.field.sample_cm : threshold",
            stop=False
        )

    return _draw(spec, float(a), rng)


# === GRID ===

def synthesize(
        u: SpectralField,
        n: int
        ) -> GridField:
    """ ## Evaluate the field at the (n+1)^2 grid nodes. """

    NewtCons.validate_type(
        n, int,
        location="Newt.field.synthesize : n"
    )
    if n < 1:
        NewtCons.error_msg(
            f"Grid divisions must be >= 1, got {n}",
            location="Newt.field.synthesize : n < 1"
        )

    basis = _basis_matrix(u.spec.kmax, n)
    # V[j, i] = sum c[k1, k2] B[i, k1] B[j, k2]
    values = basis @ u.coeffs.T @ basis.T
    return GridField(n, values.reshape(-1))


def analyze(
        g: GridField,
        spec: CovarianceSpec
        ) -> SpectralField:
    """ ## Project grid values onto the cosine basis by the trapezoidal rule.

    For n >= 2 kmax the discrete cosine modes are exactly orthonormal
    under the trapezoidal weights, so synthesize-then-analyze is exact
    up to rounding.

    Raises:
        SystemExit:
            If the grid cannot resolve kmax (n < 2 kmax).
    """

    if g.n < 2 * spec.kmax:
        NewtCons.error_msg(
            f"Grid n={g.n} cannot resolve kmax={spec.kmax}",
            "Need n >= 2 * kmax",
            location="Newt.field.analyze : under-resolved"
        )

    weights = np.full(g.n + 1, 1.0 / g.n)
    weights[[0, -1]] *= 0.5
    weighted = weights[:, None] * _basis_matrix(spec.kmax, g.n)

    coeffs = weighted.T @ g.as_array().T @ weighted
    return SpectralField(coeffs, spec)


def grid_l2_norm(
        g: GridField
        ) -> float:
    """ ## L2 norm on [0,1]^2 by the 2D trapezoidal rule. """

    weights = np.full(g.n + 1, 1.0 / g.n)
    weights[[0, -1]] *= 0.5
    return float(np.sqrt(weights @ (g.as_array() ** 2) @ weights))


def save_grid_field(
        file_name: str,
        g: GridField,
        print_log: bool = True
        ) -> None:
    """ ## Write a GridField as CSV: `n=<int>` then (n+1) rows, row index x2, column index x1.

    Values are written with 17 significant digits.
    """

    rows: list[list[str]] = [[f"n={g.n}"]]
    for row in g.as_array():
        rows.append([NewtUtil.format_float(value) for value in row])

    NewtFiles.save_csv_to_file(file_name, rows, print_log=False)

    if print_log:
        print("[Newt.field.save_grid_field] Saved grid field:")
        print(file_name)
        print(f"(n={g.n})")


def read_grid_field(
        file_name: str,
        stop: bool = True,
        print_log: bool = True
        ) -> GridField | None:
    """ ## Read a GridField written by `save_grid_field`.

    Raises:
        SystemExit:
            If the file is missing or malformed and `stop=True`.
    """

    rows = NewtFiles.read_csv_from_file(file_name, stop=stop, print_log=False)
    if rows is None:
        return None

    header = rows[0][0].strip() if rows and rows[0] else ""
    n = None
    if header.startswith("n="):
        try:
            n = int(header[2:])
        except ValueError:
            n = None

    if n is None or n < 1:
        NewtCons.error_msg(
            f"First line must be n=<int>, got: {header}",
            f"File: {file_name}",
            location="Newt.field.read_grid_field : header",
            stop=stop
        )
        return None

    body = [row for row in rows[1:] if row]
    if len(body) != n + 1 or any(len(row) != n + 1 for row in body):
        NewtCons.error_msg(
            f"Expected {n + 1} rows of {n + 1} values",
            f"File: {file_name}",
            location="Newt.field.read_grid_field : shape",
            stop=stop
        )
        return None

    try:
        values = np.array([[float(cell) for cell in row] for row in body])
    except ValueError as e:
        NewtCons.error_msg(
            f"Cannot parse value: {e}",
            f"File: {file_name}",
            location="Newt.field.read_grid_field : ValueError",
            stop=stop
        )
        return None

    if print_log:
        print("[Newt.field.read_grid_field] Loaded grid field:")
        print(file_name)
        print(f"(n={n})")

    return GridField(n, values.reshape(-1))


# === INNER PRODUCTS ===

def inner_x(
        u: SpectralField,
        v: SpectralField
        ) -> float:
    """ ## L2 inner product; the basis is orthonormal so this is the coefficient dot product. """

    _check_compatible(u, v, "Newt.field.inner_x : spec")
    return float(np.sum(u.coeffs * v.coeffs))


def inner_k(
        u: SpectralField,
        v: SpectralField
        ) -> float:
    """ ## Cameron-Martin inner product sum_k u_k v_k / lambda_k. """

    _check_compatible(u, v, "Newt.field.inner_k : spec")
    return float(np.sum(u.coeffs * v.coeffs / eigenvalues(u.spec)))


def norm_x(
        u: SpectralField
        ) -> float:
    return float(np.sqrt(inner_x(u, u)))


def norm_k(
        u: SpectralField
        ) -> float:
    return float(np.sqrt(inner_k(u, u)))


def scale_precision_half(
        u: SpectralField
        ) -> SpectralField:
    """ ## Apply C0^(-1/2): scale each coefficient by lambda_k^(-1/2). """

    return SpectralField(u.coeffs / np.sqrt(eigenvalues(u.spec)), u.spec)
