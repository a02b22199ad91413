"""Electromagnetic state, material Hodge stars, PEC boundaries, and sources.

Field placement follows the staggered-in-time discrete picture: the
electric field E is a primal 1-cochain living at half steps, the magnetic
flux B a primal 2-cochain at whole steps.  Their dual partners D and H are
never stored; they are derived through the material stars, so the
constitutive relations hold to machine precision by construction.

``constitutive_stars`` returns the two diagonal matrices actually applied
by the integrators: ``star_eps`` maps E to the dual flux D (entries
eps |*e|/|e|) and ``star_mu`` maps B to the dual field H (entries
(1/mu) |*f|/|f|).  In the classical field-to-flux naming the latter is the
inverse permeability star; both reduce to the metric Hodge star when
eps = mu = 1.  Heterogeneous materials weight each elementary dual piece
by the value in its own top cell (eps-weighted sum for edges, 1/mu-weighted
sum for faces), which reduces exactly to the uniform case.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dec import OperatorMatrix, dual_divergence
from .mesh import CellComplex, DualComplex
import scipy.sparse as sp


@dataclass
class MaterialParams:
    """Permittivity and permeability, uniform scalars or per-top-cell arrays."""

    epsilon: float | np.ndarray = 1.0
    mu: float | np.ndarray = 1.0

    def per_cell(self, K: CellComplex) -> tuple[np.ndarray, np.ndarray]:
        n_top = K.n_cells(K.dimension)
        eps = np.broadcast_to(np.asarray(self.epsilon, dtype=float), (n_top,))
        mu = np.broadcast_to(np.asarray(self.mu, dtype=float), (n_top,))
        if np.any(eps <= 0) or np.any(mu <= 0):
            raise ValueError("epsilon and mu must be positive everywhere")
        return np.array(eps), np.array(mu)


def constitutive_stars(K: CellComplex, dual: DualComplex,
                       mat: MaterialParams) -> tuple[OperatorMatrix, OperatorMatrix]:
    """Material Hodge stars (star_eps: E -> D on edges, star_mu: B -> H on faces)."""
    eps, mu = mat.per_cell(K)
    se = np.empty(K.n_cells(1))
    for i, pieces in enumerate(dual.pieces[1]):
        se[i] = sum(eps[top] * m for top, m in pieces) / dual.primal_volumes[1][i]
    sm = np.empty(K.n_cells(2))
    for i, pieces in enumerate(dual.pieces[2]):
        sm[i] = sum(m / mu[top] for top, m in pieces) / dual.primal_volumes[2][i]
    star_eps = OperatorMatrix(len(se), len(se), "diagonal", sp.diags(se).tocsr(), se)
    star_mu = OperatorMatrix(len(sm), len(sm), "diagonal", sp.diags(sm).tocsr(), sm)
    return star_eps, star_mu


@dataclass
class FieldState:
    """E at a half step, B at the adjacent whole step; D and H derived."""

    complex: CellComplex
    E: np.ndarray
    B: np.ndarray
    t_E: float
    t_B: float
    pec: bool = True

    def __post_init__(self):
        self.E = np.asarray(self.E, dtype=float)
        self.B = np.asarray(self.B, dtype=float)
        if self.E.shape != (self.complex.n_cells(1),):
            raise ValueError("E must have one value per edge")
        if self.B.shape != (self.complex.n_cells(2),):
            raise ValueError("B must have one value per face")

    def D(self, star_eps: OperatorMatrix) -> np.ndarray:
        return star_eps.diag * self.E

    def H(self, star_mu: OperatorMatrix) -> np.ndarray:
        return star_mu.diag * self.B

    def copy(self) -> "FieldState":
        return replace(self, E=self.E.copy(), B=self.B.copy())


def zero_state(K: CellComplex, t0: float = 0.0) -> FieldState:
    return FieldState(K, np.zeros(K.n_cells(1)), np.zeros(K.n_cells(2)), t0, t0)


def apply_pec(state: FieldState, K: CellComplex) -> FieldState:
    """Zero E on boundary edges (idempotent); interior values untouched."""
    E = state.E.copy()
    E[K.boundary_mask(1)] = 0.0
    return replace(state, E=E, pec=True)


def init_random_E(K: CellComplex, seed: int, t0: float = 0.0) -> FieldState:
    """Interior-edge E i.i.d. uniform on [-1, 1] (PCG64), B = 0, PEC applied."""
    rng = np.random.default_rng(seed)
    E = rng.uniform(-1.0, 1.0, size=K.n_cells(1))
    state = FieldState(K, E, np.zeros(K.n_cells(2)), t0, t0)
    return apply_pec(state, K)


@dataclass
class SourceTerm:
    """Charge/current source sampled on the dual mesh.

    ``j_at(t)`` returns the current cochain on dual faces (flux along each
    primal edge direction times the dual measure); ``rho_at(t)`` the charge
    on dual cells of vertices.  Either may be None (zero source).
    """

    j_at: object = None
    rho_at: object = None

    def j(self, K: CellComplex, t: float) -> np.ndarray:
        if self.j_at is None:
            return np.zeros(K.n_cells(1))
        return np.asarray(self.j_at(t), dtype=float)

    def rho(self, K: CellComplex, t: float) -> np.ndarray:
        if self.rho_at is None:
            return np.zeros(K.n_cells(0))
        return np.asarray(self.rho_at(t), dtype=float)


NO_SOURCE = SourceTerm()


def make_source(K: CellComplex, dual: DualComplex, jx=None, jy=None, jz=None,
                rho=None) -> SourceTerm:
    """Build a SourceTerm from component expressions of (x, y, z, t).

    J components are sampled at edge midpoints, projected on the edge
    direction, and scaled by the dual measure; rho is sampled at vertices
    and scaled by the dual cell volume.
    """
    comps = [jx, jy, jz][:K.dimension]
    j_at = None
    if any(c is not None for c in comps):
        p0 = np.array([K.vertices[c[0]] for c in K.cells[1]])
        p1 = np.array([K.vertices[c[1]] for c in K.cells[1]])
        mid = 0.5 * (p0 + p1)
        vec = p1 - p0
        unit = vec / np.linalg.norm(vec, axis=1)[:, None]
        dvol = dual.dual_volumes[1]
        coords = [mid[:, a] for a in range(K.dimension)]
        while len(coords) < 3:
            coords.append(np.zeros(len(mid)))

        def j_at(t, _c=coords, _u=unit, _d=dvol, _comps=comps):
            total = np.zeros(len(_d))
            for a, comp in enumerate(_comps):
                if comp is not None:
                    total += comp(_c[0], _c[1], _c[2], t) * _u[:, a]
            return total * _d

    rho_at = None
    if rho is not None:
        vx = [K.vertices[:, a] for a in range(K.dimension)]
        while len(vx) < 3:
            vx.append(np.zeros(len(K.vertices)))
        dvol0 = dual.dual_volumes[0]

        def rho_at(t, _vx=vx, _d=dvol0, _rho=rho):
            return _rho(_vx[0], _vx[1], _vx[2], t) * _d

    return SourceTerm(j_at, rho_at)


def continuity_residual(K: CellComplex, src: SourceTerm, t: float, dt: float) -> float:
    """Max-norm defect of discrete charge conservation between t and t + dt."""
    rho0 = src.rho(K, t)
    rho1 = src.rho(K, t + dt)
    outflux = dual_divergence(K, src.j(K, t))
    return float(np.max(np.abs((rho1 - rho0) / dt + outflux)))
