"""
Updated on 2026-10
Created on 2026-09

@author: NewtCode Anna Burova

PDE forward models on the uniform grid over [0,1]^2:
travel times of the eikonal equation |grad T| = s by first-order fast marching,
and pressure of Darcy flow -div(kappa grad p) = f by a five-point finite-volume
scheme solved with conjugate gradients.

Classes:
    class EikonalConfig
    class DarcyConfig
    class EikonalModel(ForwardModel)
    class DarcyModel(ForwardModel)

Functions:
    def default_obs_points(
        n_side: int = 8
        ) -> list[tuple[float, float]]
    def random_sources(
        count: int,
        rng: np.random.Generator
        ) -> list[tuple[float, float]]
    def observe(
        g: GridField,
        points: list[tuple[float, float]],
        width: float = 0.0
        ) -> np.ndarray
    === EIKONAL ===
    def fmm_solve(
        s: GridField,
        source: tuple[float, float],
        return_order: bool = False,
        init_radius: float = FMM_INIT_RADIUS
        ) -> GridField | tuple[GridField, list[float]]
    def eikonal_observe(
        log_slowness: GridField,
        cfg: EikonalConfig
        ) -> np.ndarray
    def eikonal_forward(
        u: SpectralField,
        cfg: EikonalConfig
        ) -> np.ndarray
    === DARCY ===
    def darcy_solve(
        kappa: GridField,
        cfg: DarcyConfig
        ) -> GridField
    def darcy_observe(
        log_kappa: GridField,
        cfg: DarcyConfig
        ) -> np.ndarray
    def darcy_forward(
        u: SpectralField,
        cfg: DarcyConfig
        ) -> np.ndarray
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

import newteki.console as NewtCons
import newteki.field as NewtField
from newteki.field import CovarianceSpec, GridField, SpectralField
from newteki.problem import ForwardModel

# frozen exact ball around an eikonal source
FMM_INIT_RADIUS = 0.1


def _check_points(
        points: list[tuple[float, float]],
        location: str
        ) -> None:
    NewtCons.validate_type(
        points, list, check_non_empty=True,
        location=location
    )
    for x1, x2 in points:
        if not (0.0 <= x1 <= 1.0 and 0.0 <= x2 <= 1.0):
            NewtCons.error_msg(
                f"Point ({x1}, {x2}) is outside the unit square",
                location=location + " : range"
            )


@dataclass(frozen=True)
class EikonalConfig:
    """ ## Grid, sources on {x1 = 0}, observation points, noise scale and mollifier width. """

    n: int = 100
    sources: list[tuple[float, float]] = field(default_factory=lambda: [(0.0, 0.5)])
    obs_points: list[tuple[float, float]] = field(default_factory=lambda: default_obs_points(8))
    gamma: float = 0.01
    mollifier_width: float = 0.0

    def __post_init__(self) -> None:
        NewtCons.validate_type(
            self.n, int,
            location="Newt.models.EikonalConfig : n"
        )
        if self.n < 2:
            NewtCons.error_msg(
                f"Grid divisions must be >= 2, got {self.n}",
                location="Newt.models.EikonalConfig : n < 2"
            )
        _check_points(self.sources, "Newt.models.EikonalConfig : sources")
        for x1, x2 in self.sources:
            if x1 != 0.0:
                NewtCons.error_msg(
                    f"Source ({x1}, {x2}) is not on the left edge x1 = 0",
                    location="Newt.models.EikonalConfig : sources"
                )
        _check_points(self.obs_points, "Newt.models.EikonalConfig : obs_points")
        NewtCons.validate_positive(
            self.gamma,
            location="Newt.models.EikonalConfig : gamma"
        )
        NewtCons.validate_positive(
            self.mollifier_width, strict=False,
            location="Newt.models.EikonalConfig : mollifier_width"
        )


@dataclass(frozen=True)
class DarcyConfig:
    """ ## Grid, source term, boundary data and observation points for the Darcy model.

    Bottom edge x2 = 0: p = dirichlet_bottom.
    Left edge x1 = 0: -kappa dp/dx1 = flux_left.
    Right and top edges: zero flux.
    `f` defaults to the constant `source_value`.
    """

    n: int = 100
    f: GridField | None = None
    source_value: float = 1.0
    dirichlet_bottom: float = 100.0
    flux_left: float = 500.0
    obs_points: list[tuple[float, float]] = field(default_factory=lambda: default_obs_points(8))
    mollifier_width: float = 0.0

    def __post_init__(self) -> None:
        NewtCons.validate_type(
            self.n, int,
            location="Newt.models.DarcyConfig : n"
        )
        if self.n < 4:
            NewtCons.error_msg(
                f"Grid divisions must be >= 4, got {self.n}",
                location="Newt.models.DarcyConfig : n < 4"
            )
        if self.f is not None and self.f.n != self.n:
            NewtCons.error_msg(
                f"Source grid n={self.f.n} does not match n={self.n}",
                location="Newt.models.DarcyConfig : f"
            )
        _check_points(self.obs_points, "Newt.models.DarcyConfig : obs_points")
        NewtCons.validate_positive(
            self.mollifier_width, strict=False,
            location="Newt.models.DarcyConfig : mollifier_width"
        )

    def source_grid(self) -> GridField:
        if self.f is not None:
            return self.f
        return GridField.constant(self.n, self.source_value)


def default_obs_points(
        n_side: int = 8
        ) -> list[tuple[float, float]]:
    """ ## Equidistant interior lattice {(i/(n_side+1), j/(n_side+1)) : i, j = 1..n_side}.

    Ordered with x1 fastest, like the grid.
    """

    NewtCons.validate_type(
        n_side, int,
        location="Newt.models.default_obs_points : n_side"
    )
    if n_side < 1:
        NewtCons.error_msg(
            f"n_side must be >= 1, got {n_side}",
            location="Newt.models.default_obs_points : n_side < 1"
        )

    step = 1.0 / (n_side + 1)
    return [(i * step, j * step) for j in range(1, n_side + 1) for i in range(1, n_side + 1)]


def random_sources(
        count: int,
        rng: np.random.Generator
        ) -> list[tuple[float, float]]:
    """ ## `count` sources on the left edge, x2 uniform on [0, 1]. """

    NewtCons.validate_type(
        count, int,
        location="Newt.models.random_sources : count"
    )
    if count < 1:
        NewtCons.error_msg(
            f"count must be >= 1, got {count}",
            location="Newt.models.random_sources : count < 1"
        )

    return [(0.0, float(x2)) for x2 in rng.uniform(0.0, 1.0, count)]


def observe(
        g: GridField,
        points: list[tuple[float, float]],
        width: float = 0.0
        ) -> np.ndarray:
    """ ## Mollified point evaluation of grid values.

    With `width == 0` each point reads its nearest node.
    Otherwise it reads a normalized Gaussian-weighted average (standard deviation `width`)
    over the nodes within distance `width`, always including the nearest node.

    Returns:
        out (np.ndarray):
            One value per point.
    """

    n = g.n
    values = g.as_array()
    out = np.empty(len(points))

    for index, (x1, x2) in enumerate(points):
        i = int(round(x1 * n))
        j = int(round(x2 * n))
        if width <= 0.0:
            out[index] = values[j, i]
            continue

        reach = int(math.ceil(width * n))
        i_lo, i_hi = max(i - reach, 0), min(i + reach, n)
        j_lo, j_hi = max(j - reach, 0), min(j + reach, n)
        nodes_1 = np.arange(i_lo, i_hi + 1) / n
        nodes_2 = np.arange(j_lo, j_hi + 1) / n
        dist_sq = (nodes_2[:, None] - x2) ** 2 + (nodes_1[None, :] - x1) ** 2

        weights = np.exp(-0.5 * dist_sq / width ** 2)
        weights[dist_sq > width ** 2] = 0.0
        weights[j - j_lo, i - i_lo] = math.exp(-0.5 * dist_sq[j - j_lo, i - i_lo] / width ** 2)

        out[index] = float(np.sum(weights * values[j_lo:j_hi + 1, i_lo:i_hi + 1]) / np.sum(weights))

    return out


# === EIKONAL ===

def fmm_solve(
        s: GridField,
        source: tuple[float, float],
        return_order: bool = False,
        init_radius: float = FMM_INIT_RADIUS
        ) -> GridField | tuple[GridField, list[float]]:
    """ ## Travel times T with |grad T| = s and T(source) = 0, by first-order fast marching.

    The source snaps to its nearest node x0. Nodes with |x - x0| <= init_radius
    get the straight-ray time |x - x0| * (s(x0) + s(x)) / 2 and are frozen;
    for constant slowness that is the exact solution. Outside the ball
    the error is first order in h.

    Trial values use the two-axis upwind quadratic update and fall back
    to the one-axis update when the quadratic has no admissible root.
    Neighbors outside the domain never contribute, so waves leave
    through the boundary.

    Args:
        s (GridField):
            Slowness, strictly positive at every node.
        source (tuple[float, float]):
            Source coordinate in the unit square.
        return_order (bool):
            If True, also return the accepted values in acceptance order.<br>
            Defaults to False.
        init_radius (float):
            Radius of the frozen ball around the source, >= 0.<br>
            0 freezes the source node only.<br>
            Defaults to FMM_INIT_RADIUS (0.1).

    Returns:
        out (GridField | tuple[GridField, list[float]]):
            Travel times, optionally with the acceptance sequence.

    Raises:
        SystemExit:
            If the slowness is not strictly positive or init_radius is negative.
    """

    NewtCons.validate_positive(
        s.values,
        location="Newt.models.fmm_solve : slowness"
    )
    NewtCons.validate_positive(
        init_radius, strict=False,
        location="Newt.models.fmm_solve : init_radius"
    )

    n = s.n
    size = n + 1
    step = 1.0 / n
    slowness = s.as_array()
    cost = (slowness * step).tolist()

    inf = math.inf
    times = [[inf] * size for _ in range(size)]
    accepted = [[False] * size for _ in range(size)]
    frozen = [[False] * size for _ in range(size)]

    i0 = min(max(int(round(source[0] * n)), 0), n)
    j0 = min(max(int(round(source[1] * n)), 0), n)
    heap: list[tuple[float, int, int]] = []
    order: list[float] = []

    reach = int(init_radius * n)
    s0 = float(slowness[j0, i0])
    for j in range(max(j0 - reach, 0), min(j0 + reach, n) + 1):
        for i in range(max(i0 - reach, 0), min(i0 + reach, n) + 1):
            dist = math.hypot(i - i0, j - j0) * step
            if dist > init_radius and (i, j) != (i0, j0):
                continue
            times[j][i] = dist * 0.5 * (s0 + float(slowness[j, i]))
            frozen[j][i] = True
            heap.append((times[j][i], j, i))
    heapq.heapify(heap)

    while heap:
        value, j, i = heapq.heappop(heap)
        if accepted[j][i]:
            continue
        accepted[j][i] = True
        order.append(value)

        for nj, ni in ((j - 1, i), (j + 1, i), (j, i - 1), (j, i + 1)):
            if nj < 0 or nj > n or ni < 0 or ni > n or accepted[nj][ni] or frozen[nj][ni]:
                continue

            a = inf
            if ni > 0 and accepted[nj][ni - 1]:
                a = times[nj][ni - 1]
            if ni < n and accepted[nj][ni + 1]:
                a = min(a, times[nj][ni + 1])
            b = inf
            if nj > 0 and accepted[nj - 1][ni]:
                b = times[nj - 1][ni]
            if nj < n and accepted[nj + 1][ni]:
                b = min(b, times[nj + 1][ni])

            f = cost[nj][ni]
            low = min(a, b)
            if a < inf and b < inf and abs(a - b) < f:
                candidate = 0.5 * (a + b + math.sqrt(2.0 * f * f - (a - b) ** 2))
            else:
                candidate = low + f

            if candidate < times[nj][ni]:
                times[nj][ni] = candidate
                heapq.heappush(heap, (candidate, nj, ni))

    result = GridField(n, np.array(times).reshape(-1))
    if return_order:
        return result, order
    return result




def eikonal_observe(
        log_slowness: GridField,
        cfg: EikonalConfig
        ) -> np.ndarray:
    """ ## Concatenate, over sources, the travel times of s = exp(log_slowness) at the observation points. """

    if log_slowness.n != cfg.n:
        NewtCons.error_msg(
            f"Field grid n={log_slowness.n} does not match config n={cfg.n}",
            location="Newt.models.eikonal_observe : n"
        )

    slowness = GridField(cfg.n, np.exp(log_slowness.values))
    blocks = [
        observe(fmm_solve(slowness, source), cfg.obs_points, cfg.mollifier_width)
        for source in cfg.sources
    ]
    return np.concatenate(blocks)


def eikonal_forward(
        u: SpectralField,
        cfg: EikonalConfig
        ) -> np.ndarray:
    """ ## Eikonal observation map u -> T at obs points for every source, with s = exp(u).

    obs_dim = len(sources) * len(obs_points).
    """

    return eikonal_observe(NewtField.synthesize(u, cfg.n), cfg)


# === DARCY ===

def _harmonic(
        a: np.ndarray,
        b: np.ndarray
        ) -> np.ndarray:
    return 2.0 * a * b / (a + b)


def darcy_solve(
        kappa: GridField,
        cfg: DarcyConfig
        ) -> GridField:
    """ ## Pressure p of -div(kappa grad p) = f with the mixed boundary data of `cfg`.

    Node-centered finite volumes with harmonic face permeabilities.
    Boundary nodes own half (corner: quarter) control volumes, which is the
    ghost-node treatment of the flux edges with the mirrored equation eliminated.
    The bottom row is Dirichlet and eliminated. The remaining system is
    symmetric positive definite and is solved by Jacobi-preconditioned CG
    to relative residual 1e-10.

    Args:
        kappa (GridField):
            Permeability, strictly positive.
        cfg (DarcyConfig):
            Grid, source and boundary data; `kappa.n` must equal `cfg.n`.

    Returns:
        out (GridField):
            Pressure at every node, bottom row included.

    Raises:
        SystemExit:
            If kappa is not strictly positive or CG does not converge.
    """

    NewtCons.validate_positive(
        kappa.values,
        location="Newt.models.darcy_solve : kappa"
    )
    if kappa.n != cfg.n:
        NewtCons.error_msg(
            f"Permeability grid n={kappa.n} does not match config n={cfg.n}",
            location="Newt.models.darcy_solve : n"
        )

    n = cfg.n
    h = 1.0 / n
    k = kappa.as_array()
    f = cfg.source_grid().as_array()

    # control-volume extents per axis: half cells on the boundary
    extent = np.full(n + 1, h)
    extent[[0, -1]] = 0.5 * h

    # unknowns: rows j = 1..n, all i; index (j - 1) * (n + 1) + i
    def index(j: int, i: int) -> int:
        return (j - 1) * (n + 1) + i

    count = n * (n + 1)
    rhs = np.zeros(count)
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    diag = np.zeros(count)

    # faces between (j, i) and (j, i + 1): length extent[j], conductance kappa_face * length / h
    k_x = _harmonic(k[:, :-1], k[:, 1:])
    # faces between (j, i) and (j + 1, i): length extent[i]
    k_y = _harmonic(k[:-1, :], k[1:, :])

    for j in range(1, n + 1):
        for i in range(n):
            conductance = k_x[j, i] * extent[j] / h
            a, b = index(j, i), index(j, i + 1)
            diag[a] += conductance
            diag[b] += conductance
            rows.extend((a, b))
            cols.extend((b, a))
            vals.extend((-conductance, -conductance))

    for j in range(0, n):
        for i in range(n + 1):
            conductance = k_y[j, i] * extent[i] / h
            upper = index(j + 1, i)
            diag[upper] += conductance
            if j == 0:
                rhs[upper] += conductance * cfg.dirichlet_bottom
                continue
            lower = index(j, i)
            diag[lower] += conductance
            rows.extend((lower, upper))
            cols.extend((upper, lower))
            vals.extend((-conductance, -conductance))

    for j in range(1, n + 1):
        for i in range(n + 1):
            rhs[index(j, i)] += extent[i] * extent[j] * f[j, i]
        # inflow through the left edge
        rhs[index(j, 0)] += cfg.flux_left * extent[j]

    rows.extend(range(count))
    cols.extend(range(count))
    vals.extend(diag.tolist())
    matrix = scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(count, count))

    preconditioner = scipy.sparse.diags(1.0 / diag)
    start = np.full(count, float(cfg.dirichlet_bottom))
    solution, info = scipy.sparse.linalg.cg(
        matrix, rhs, x0=start, rtol=1e-10, atol=0.0,
        maxiter=10 * count, M=preconditioner
    )

    if info != 0:
        NewtCons.error_msg(
            f"Conjugate gradients did not converge (info={info})",
            f"Unknowns: {count}",
            location="Newt.models.darcy_solve : cg"
        )

    pressure = np.empty((n + 1, n + 1))
    pressure[0, :] = cfg.dirichlet_bottom
    pressure[1:, :] = solution.reshape(n, n + 1)
    return GridField(n, pressure.reshape(-1))


def darcy_observe(
        log_kappa: GridField,
        cfg: DarcyConfig
        ) -> np.ndarray:
    """ ## Pressure at the observation points for kappa = exp(log_kappa). """

    kappa = GridField(log_kappa.n, np.exp(log_kappa.values))
    return observe(darcy_solve(kappa, cfg), cfg.obs_points, cfg.mollifier_width)


def darcy_forward(
        u: SpectralField,
        cfg: DarcyConfig
        ) -> np.ndarray:
    return darcy_observe(NewtField.synthesize(u, cfg.n), cfg)


class EikonalModel(ForwardModel):
    """ ## ForwardModel wrapper of `eikonal_forward`. """

    def __init__(self, spec: CovarianceSpec, cfg: EikonalConfig) -> None:
        self.spec = spec
        self.cfg = cfg
        self.obs_dim = len(cfg.sources) * len(cfg.obs_points)

    def apply(self, u: SpectralField) -> np.ndarray:
        return eikonal_forward(u, self.cfg)


class DarcyModel(ForwardModel):
    """ ## ForwardModel wrapper of `darcy_forward`. """

    def __init__(self, spec: CovarianceSpec, cfg: DarcyConfig) -> None:
        self.spec = spec
        self.cfg = cfg
        self.obs_dim = len(cfg.obs_points)

    def apply(self, u: SpectralField) -> np.ndarray:
        return darcy_forward(u, self.cfg)
