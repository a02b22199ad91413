"""Discrete forms (cochains) and the operators d, star, delta as sparse matrices.

Conventions, fixed once for the whole package:

* ``exterior_derivative(K, k)`` is the signed incidence matrix between
  k-cells and (k+1)-cells; its transpose acts as the exterior derivative on
  the dual mesh.  Dual cells are oriented so this holds with no extra sign,
  which simultaneously makes every Hodge matrix a positive diagonal (times
  the causality sign).
* ``codifferential`` is the exact adjoint of d in the diagonal-Hodge inner
  product, i.e. star^-1 d^T star with a plus sign.  The classical
  (-1)**(n(k+1)+1) factors of the smooth theory arise only when writing
  delta through a double star; with an explicit diagonal inverse they drop
  out.
* The integration-by-parts boundary pairing evaluates star(beta) on the
  squashed boundary-shell cells through the net dual flux around each
  boundary cell, which is the shell-dominant part of that flux; with this
  reading the identity (d a, b) = (a, delta b) + <a ^ star b, boundary>
  holds to round-off by plain summation by parts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import EmdecError
from .mesh import CellComplex, DualComplex


@dataclass(frozen=True)
class Cochain:
    """A discrete k-form: one real value per oriented k-cell."""

    complex: CellComplex
    degree: int
    values: np.ndarray
    placement: str = "primal"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if self.placement not in ("primal", "dual"):
            raise ValueError(f"placement must be primal or dual, got {self.placement}")
        expected = self.complex.n_cells(self.degree if self.placement == "primal"
                                        else self.complex.dimension - self.degree)
        if values.shape != (expected,):
            raise ValueError(
                f"cochain of degree {self.degree} ({self.placement}) needs "
                f"{expected} values, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("cochain values must be finite")

    def __add__(self, other: "Cochain") -> "Cochain":
        self._check_compatible(other)
        return Cochain(self.complex, self.degree, self.values + other.values,
                       self.placement)

    def __sub__(self, other: "Cochain") -> "Cochain":
        self._check_compatible(other)
        return Cochain(self.complex, self.degree, self.values - other.values,
                       self.placement)

    def __rmul__(self, scalar: float) -> "Cochain":
        return Cochain(self.complex, self.degree, float(scalar) * self.values,
                       self.placement)

    def _check_compatible(self, other: "Cochain"):
        if (other.complex is not self.complex or other.degree != self.degree
                or other.placement != self.placement):
            raise ValueError("cochains live on different spaces")


@dataclass
class OperatorMatrix:
    """Sparse operator: integer incidence or real diagonal (or a composition)."""

    rows: int
    cols: int
    kind: str  # 'incidence' | 'diagonal' | 'composed'
    matrix: sp.spmatrix
    diag: np.ndarray | None = None

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            m = self.matrix @ other.matrix
            return OperatorMatrix(self.rows, other.cols, "composed", m.tocsr())
        other = np.asarray(other)
        return self.matrix @ other

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def inverse(self) -> "OperatorMatrix":
        if self.kind != "diagonal" or self.diag is None:
            raise EmdecError("only diagonal operators have an explicit inverse")
        if np.any(self.diag == 0.0):
            bad = int(np.nonzero(self.diag == 0.0)[0][0])
            raise ZeroDivisionError(f"diagonal operator entry {bad} is zero")
        inv = 1.0 / self.diag
        return OperatorMatrix(self.rows, self.cols, "diagonal",
                              sp.diags(inv).tocsr(), inv)


def exterior_derivative(K: CellComplex, k: int) -> OperatorMatrix:
    """d_k as the signed (k+1)-to-k incidence matrix with integer entries."""
    if not 0 <= k < K.dimension:
        raise ValueError(f"degree {k} out of range for dimension {K.dimension}")
    rows, cols, data = [], [], []
    for ci, incident in enumerate(K.boundary_incidence[k + 1]):
        for fi, sign in incident:
            rows.append(ci)
            cols.append(fi)
            data.append(sign)
    m = sp.coo_matrix((np.array(data, dtype=np.int64), (rows, cols)),
                      shape=(K.n_cells(k + 1), K.n_cells(k))).tocsr()
    return OperatorMatrix(K.n_cells(k + 1), K.n_cells(k), "incidence", m)


def _causality(K: CellComplex, k: int, causality) -> np.ndarray:
    if causality is None:
        return np.ones(K.n_cells(k))
    causality = np.asarray(causality, dtype=float)
    if causality.shape != (K.n_cells(k),):
        raise ValueError("causality array must have one sign per k-cell")
    if not np.all(np.abs(causality) == 1.0):
        raise ValueError("causality signs must be +1 or -1")
    return causality


def hodge_star(K: CellComplex, dual: DualComplex, k: int,
               causality=None) -> OperatorMatrix:
    """Diagonal Hodge star on k-forms with entries kappa * |dual cell| / |cell|."""
    if not 0 <= k <= K.dimension:
        raise ValueError(f"degree {k} out of range")
    primal = dual.primal_volumes[k]
    if np.any(primal == 0.0):
        bad = int(np.nonzero(primal == 0.0)[0][0])
        raise ZeroDivisionError(f"zero primal measure on {k}-cell {K.cells[k][bad]}")
    diag = _causality(K, k, causality) * dual.dual_volumes[k] / primal
    return OperatorMatrix(len(diag), len(diag), "diagonal", sp.diags(diag).tocsr(), diag)


def inner_product(K: CellComplex, dual: DualComplex, a: Cochain, b: Cochain,
                  causality=None) -> float:
    """Diagonal-Hodge L2 pairing: sum of kappa (|*s|/|s|) <a,s> <b,s> over k-cells."""
    if a.degree != b.degree or a.placement != b.placement:
        raise ValueError("inner product needs cochains of equal degree and placement")
    star = hodge_star(K, dual, a.degree, causality)
    return float(a.values @ (star.diag * b.values))


def codifferential(K: CellComplex, dual: DualComplex, k: int,
                   causality=None) -> OperatorMatrix:
    """delta_k = star_{k-1}^-1 d_{k-1}^T star_k, the adjoint of d."""
    if not 1 <= k <= K.dimension:
        raise ValueError(f"degree {k} out of range for a codifferential")
    d = exterior_derivative(K, k - 1)
    s_k = hodge_star(K, dual, k, causality)
    s_km1_inv = hodge_star(K, dual, k - 1, causality).inverse()
    m = (s_km1_inv.matrix @ (d.matrix.T.astype(float) @ s_k.matrix)).tocsr()
    return OperatorMatrix(K.n_cells(k - 1), K.n_cells(k), "composed", m)


def boundary_pairing(K: CellComplex, dual: DualComplex, alpha: Cochain,
                     beta: Cochain) -> float:
    """<alpha ^ star beta, boundary K>: alpha on boundary (k-1)-cells against
    the flux of star(beta) through their squashed dual shells."""
    k = beta.degree
    if alpha.degree != k - 1:
        raise ValueError("boundary pairing needs degrees (k-1, k)")
    d = exterior_derivative(K, k - 1)
    star_b = hodge_star(K, dual, k).diag * beta.values
    flux = d.matrix.T.astype(float) @ star_b
    mask = K.boundary_mask(k - 1)
    return float(np.sum(alpha.values[mask] * flux[mask]))


def ibp_residual(K: CellComplex, dual: DualComplex, alpha: Cochain,
                 beta: Cochain) -> float:
    """Defect of (d alpha, beta) = (alpha, delta beta)_interior + boundary pairing.

    The interior inner product excludes boundary (k-1)-cells, whose share of
    the adjointness sum is exactly the boundary pairing; the residual is
    zero to round-off for any cochains, and each term is separately
    meaningful (the pairing vanishes for interior-supported data).
    """
    k = beta.degree
    if alpha.degree != k - 1 or alpha.placement != "primal" or beta.placement != "primal":
        raise ValueError("ibp_residual needs primal cochains of degrees (k-1, k)")
    d = exterior_derivative(K, k - 1)
    da = Cochain(K, k, d.matrix @ alpha.values)
    lhs = inner_product(K, dual, da, beta)

    delta = codifferential(K, dual, k)
    db = Cochain(K, k - 1, delta.matrix @ beta.values)
    star_km1 = hodge_star(K, dual, k - 1).diag
    interior = ~K.boundary_mask(k - 1)
    rhs_interior = float(np.sum(
        (alpha.values * star_km1 * db.values)[interior]))

    return lhs - rhs_interior - boundary_pairing(K, dual, alpha, beta)


def dual_divergence(K: CellComplex, dual_values: np.ndarray) -> np.ndarray:
    """Net outflux of a dual (n-1)-form through each vertex's dual cell.

    Dual fluxes are stored along primal edge directions, so the outflux of
    the dual cell around vertex v is -(d_0^T values)_v.
    """
    d0 = exterior_derivative(K, 0)
    return -(d0.matrix.T.astype(float) @ np.asarray(dual_values, dtype=float))


def dump_cochain(cochain: Cochain, fh):
    """CSV dump (cell_index, value)."""
    fh.write("cell_index,value\n")
    for i, v in enumerate(cochain.values):
        fh.write(f"{i},{float(v)!r}\n")


def dump_operator(op: OperatorMatrix, fh):
    """Coordinate-list dump (row, col, value)."""
    coo = op.matrix.tocoo()
    fh.write("row,col,value\n")
    for r, c, v in zip(coo.row, coo.col, coo.data):
        value = int(v) if op.kind == "incidence" else float(v)
        fh.write(f"{r},{c},{value!r}\n")
