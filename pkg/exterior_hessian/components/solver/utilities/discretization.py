"""
Finite-difference discretizations of D²u on annular grids.

Both discretizations express every independent Hessian component at the
unknown nodes as an affine map C_c = A_c u + b_c of the unknown values, with
Dirichlet data folded into b_c. The Newton Jacobian of S_k(D²u) is then
exactly Σ_c diag(∂S_k/∂C_c) A_c.
"""
import logging
from typing import List, NamedTuple, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded
from scipy.sparse.linalg import LinearOperator, gmres, spsolve

from exterior_hessian.errors import NumericalError, PreconditionError
from exterior_hessian.components.symfun import (
    batch_sk_gradient,
    deleted_sk,
    elementary_symmetric,
    SymMatrix,
    Spectrum,
)
from exterior_hessian.components.subsolution import signed_distance_array
from ..types import BoundaryData, CartesianGrid, RadialGrid

logger = logging.getLogger(__name__)

# diagonal ghosts closer than this fraction of a cell to ∂Ω are placed at it
DIAGONAL_THETA_FLOOR = 0.05
AXIS_THETA_FLOOR = 1e-3
CROSSING_BISECTIONS = 60


class NodeState(NamedTuple):
    """Operator state at the unknown nodes"""
    sums: np.ndarray      # (N, k+1) holding S_0..S_k
    partials: np.ndarray  # (N, components) holding ∂S_k/∂C_c
    spectra: np.ndarray   # (N, n) Hessian eigenvalues


class RadialDiscretization:
    """Three-point non-uniform differences for u″ and u′/ρ at interior radial nodes"""

    mode = "radial"

    def __init__(self, grid: RadialGrid, boundary: BoundaryData):
        self.grid = grid
        self.n = grid.n
        self.boundary = boundary
        rho = grid.nodes
        self.radii = rho[1:-1]
        self.size = self.radii.size
        self.points = np.zeros((self.size, self.n))
        self.points[:, 0] = self.radii
        h_minus = rho[1:-1] - rho[:-2]
        h_plus = rho[2:] - rho[1:-1]
        total = h_minus + h_plus
        first = (-h_plus / (h_minus * total), (h_plus - h_minus) / (h_minus * h_plus), h_minus / (h_plus * total))
        second = (2.0 / (h_minus * total), -2.0 / (h_minus * h_plus), 2.0 / (h_plus * total))
        self.first = np.stack(first)
        self.second = np.stack(second)
        self.inner_value = float(boundary.inner_value)
        self.outer_value = float(boundary.outer_value(np.asarray(grid.outer_radius)))
        self.rhs = np.asarray(boundary.rhs(self.radii), dtype=float)

        self.operators, self.offsets = [], []
        for stencil, scale in ((self.second, 1.0), (self.first, 1.0 / self.radii)):
            lower, center, upper = (c * scale for c in stencil)
            A = sp.diags([lower[1:], center, upper[:-1]], [-1, 0, 1], shape=(self.size, self.size), format="csr")
            b = np.zeros(self.size)
            b[0] += lower[0] * self.inner_value
            b[-1] += upper[-1] * self.outer_value
            self.operators.append(A)
            self.offsets.append(b)

    # values ↔ unknowns
    def unknown_values(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values)[1:-1]

    def full_values(self, unknowns: np.ndarray) -> np.ndarray:
        return np.concatenate([[self.inner_value], unknowns, [self.outer_value]])

    def components(self, u: np.ndarray) -> np.ndarray:
        return np.stack([A @ u + b for A, b in zip(self.operators, self.offsets)], axis=-1)

    def spectra(self, comps: np.ndarray) -> np.ndarray:
        return np.concatenate([comps[:, :1], np.repeat(comps[:, 1:2], self.n - 1, axis=1)], axis=1)

    def evaluate(self, u: np.ndarray, k: int) -> NodeState:
        lams = self.spectra(self.components(u))
        partial = deleted_sk(lams, k - 1)
        partials = np.stack([partial[:, 0], partial[:, 1:].sum(axis=1)], axis=-1)
        return NodeState(elementary_symmetric(lams, k), partials, lams)

    def jacobian(self, partials: np.ndarray) -> sp.csr_matrix:
        J = sp.diags(partials[:, 0]) @ self.operators[0] + sp.diags(partials[:, 1]) @ self.operators[1]
        return J.tocsr()

    def solve_linear(self, J: sp.csr_matrix, rhs: np.ndarray, config) -> np.ndarray:
        banded = np.zeros((3, self.size))
        banded[0, 1:] = J.diagonal(1)
        banded[1, :] = J.diagonal(0)
        banded[2, :-1] = J.diagonal(-1)
        try:
            return solve_banded((1, 1), banded, rhs)
        except (np.linalg.LinAlgError, ValueError) as e:
            raise NumericalError(f"banded solve failed: {str(e)}",
                                 {"min_abs_diagonal": float(np.min(np.abs(banded[1])))}) from e

    def hessian_at(self, values: np.ndarray, node: int) -> Spectrum:
        if not 1 <= node <= self.size:
            raise PreconditionError(f"radial node {node} has no full stencil")
        lams = self.spectra(self.components(self.unknown_values(values)))
        return Spectrum(values=lams[node - 1])

    def node_radii(self) -> np.ndarray:
        return self.radii


class CartesianDiscretization:
    """
    Second-order central differences on a uniform box, 4-point cross terms.

    Neighbors that fall inside Ω or beyond ∂B_R are ghosts whose values are
    extrapolated quadratically from the Dirichlet value at the boundary
    crossing and the two nearest unknowns on the same grid line.
    """

    mode = "cartesian"

    def __init__(self, grid: CartesianGrid, domain, boundary: BoundaryData):
        self.grid = grid
        self.n = grid.n
        self.h = grid.h
        self.domain = domain
        self.boundary = boundary
        self.R = grid.outer_radius

        coords = grid.coordinates()
        radius = np.linalg.norm(coords, axis=-1)
        _, r_out = domain.bounding_radii
        near = radius <= r_out + 2.0 * self.n * self.h
        distance = np.full(grid.shape, np.inf)
        distance[near] = signed_distance_array(domain, coords[near])
        self.distance = distance
        self.inside = distance <= 0.0
        self.beyond = radius >= self.R
        self.unknown = ~self.inside & ~self.beyond

        self.index = np.full(grid.shape, -1, dtype=np.int64)
        self.size = int(np.count_nonzero(self.unknown))
        self.index[self.unknown] = np.arange(self.size)
        self.multi = np.argwhere(self.unknown)
        self.points = coords[self.unknown]
        self.radii = radius[self.unknown]
        self.rhs = np.asarray(boundary.rhs(self.radii), dtype=float)

        self.pairs = [(i, j) for i in range(self.n) for j in range(i, self.n)]
        self.operators, self.offsets = self._assemble()
        self._fill = self._fill_values(coords, radius)
        logger.info(f"[*] Cartesian grid: {self.size} unknowns, h={self.h}, shape={grid.shape}")

    # ------------------------------------------------------------ assembly

    def _crossing(self, p: np.ndarray, g: np.ndarray, to_inner: np.ndarray) -> np.ndarray:
        """Fraction θ ∈ (0, 1] of the segment p→g at which the boundary is met"""
        theta = np.ones(p.shape[0])
        if np.any(~to_inner):
            pp, gg = p[~to_inner], g[~to_inner]
            step = gg - pp
            a = np.sum(step * step, axis=-1)
            b = 2.0 * np.sum(pp * step, axis=-1)
            c = np.sum(pp * pp, axis=-1) - self.R ** 2
            theta[~to_inner] = (-b + np.sqrt(np.maximum(b * b - 4.0 * a * c, 0.0))) / (2.0 * a)
        if np.any(to_inner):
            pp, gg = p[to_inner], g[to_inner]
            lo = np.zeros(pp.shape[0])
            hi = np.ones(pp.shape[0])
            for _ in range(CROSSING_BISECTIONS):
                mid = 0.5 * (lo + hi)
                outside = signed_distance_array(self.domain, pp + mid[:, None] * (gg - pp)) > 0.0
                lo = np.where(outside, mid, lo)
                hi = np.where(outside, hi, mid)
            theta[to_inner] = 0.5 * (lo + hi)
        return np.minimum(theta, 1.0)

    def _neighbor(self, offset: np.ndarray):
        """
        Value at p + offset·h as sparse triplets over the unknowns plus a constant.

        Returns:
            rows, cols, coefs, constant (length size)
        """
        nb = self.multi + offset
        nb_index = self.index[tuple(nb.T)]
        rows = [np.nonzero(nb_index >= 0)[0]]
        cols = [nb_index[rows[0]]]
        coefs = [np.ones(rows[0].size)]
        constant = np.zeros(self.size)

        ghost = np.nonzero(nb_index < 0)[0]
        if ghost.size:
            p = self.points[ghost]
            g = p + offset * self.h
            to_inner = self.inside[tuple(nb[ghost].T)]
            theta = self._crossing(p, g, to_inner)
            floor = DIAGONAL_THETA_FLOOR if np.count_nonzero(offset) > 1 else AXIS_THETA_FLOOR
            theta = np.maximum(theta, floor)
            crossing = p + theta[:, None] * (g - p)
            data = np.where(to_inner, self.boundary.inner_value,
                            self.boundary.outer_value(np.linalg.norm(crossing, axis=-1)))

            back = self.multi[ghost] - offset
            back_index = self.index[tuple(back.T)]
            quadratic = back_index >= 0
            # Lagrange weights of the nodes s = −1, 0, θ evaluated at s = 1
            w_back = np.where(quadratic, (1.0 - theta) / (1.0 + theta), 0.0)
            w_self = np.where(quadratic, -2.0 * (1.0 - theta) / theta, 1.0 - 1.0 / theta)
            w_data = np.where(quadratic, 2.0 / (theta * (1.0 + theta)), 1.0 / theta)

            rows += [ghost, ghost[quadratic]]
            cols += [ghost, back_index[quadratic]]
            coefs += [w_self, w_back[quadratic]]
            constant[ghost] += w_data * data
        return np.concatenate(rows), np.concatenate(cols), np.concatenate(coefs), constant

    def _assemble(self) -> Tuple[List[sp.csr_matrix], List[np.ndarray]]:
        operators, offsets = [], []
        eye = np.eye(self.n, dtype=np.int64)
        diag = np.arange(self.size)
        for i, j in self.pairs:
            rows, cols, coefs, consts = [], [], [], []
            if i == j:
                terms = [(eye[i], 1.0), (-eye[i], 1.0)]
                scale = 1.0 / self.h ** 2
                rows.append(diag)
                cols.append(diag)
                coefs.append(np.full(self.size, -2.0 * scale))
            else:
                terms = [(eye[i] + eye[j], 1.0), (eye[i] - eye[j], -1.0),
                         (-eye[i] + eye[j], -1.0), (-eye[i] - eye[j], 1.0)]
                scale = 1.0 / (4.0 * self.h ** 2)
            constant = np.zeros(self.size)
            for offset, sign in terms:
                r, c, v, b = self._neighbor(offset)
                rows.append(r)
                cols.append(c)
                coefs.append(sign * scale * v)
                constant += sign * scale * b
            A = sp.coo_matrix((np.concatenate(coefs), (np.concatenate(rows), np.concatenate(cols))),
                              shape=(self.size, self.size)).tocsr()
            A.sum_duplicates()
            operators.append(A)
            offsets.append(constant)
        return operators, offsets

    def _fill_values(self, coords: np.ndarray, radius: np.ndarray) -> np.ndarray:
        """Values outside U: c + d inside Ω, outer data continued beyond ∂B_R"""
        fill = np.zeros(self.grid.shape)
        fill[self.inside] = self.boundary.inner_value + self.distance[self.inside]
        if self.boundary.kind == "ring":
            fill[self.beyond] = 1.0 + (radius[self.beyond] - self.R)
        else:
            fill[self.beyond] = self.boundary.outer_value(radius[self.beyond])
        return fill

    # ------------------------------------------------------------ interface

    def unknown_values(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values)[self.unknown]

    def full_values(self, unknowns: np.ndarray) -> np.ndarray:
        values = self._fill.copy()
        values[self.unknown] = unknowns
        return values

    def components(self, u: np.ndarray) -> np.ndarray:
        return np.stack([A @ u + b for A, b in zip(self.operators, self.offsets)], axis=-1)

    def matrices(self, comps: np.ndarray) -> np.ndarray:
        M = np.empty((comps.shape[0], self.n, self.n))
        for c, (i, j) in enumerate(self.pairs):
            M[:, i, j] = comps[:, c]
            M[:, j, i] = comps[:, c]
        return M

    def spectra(self, comps: np.ndarray) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrices(comps))

    def evaluate(self, u: np.ndarray, k: int) -> NodeState:
        M = self.matrices(self.components(u))
        lams = np.linalg.eigvalsh(M)
        tensor = batch_sk_gradient(M, k)
        partials = np.stack([tensor[:, i, j] * (1.0 if i == j else 2.0) for i, j in self.pairs], axis=-1)
        return NodeState(elementary_symmetric(lams, k), partials, lams)

    def jacobian(self, partials: np.ndarray) -> sp.csr_matrix:
        J = sp.csr_matrix((self.size, self.size))
        for c, A in enumerate(self.operators):
            if np.any(partials[:, c] != 0.0):
                J = J + sp.diags(partials[:, c]) @ A
        J = J.tocsr()
        J.eliminate_zeros()
        return J

    def solve_linear(self, J: sp.csr_matrix, rhs: np.ndarray, config) -> np.ndarray:
        diagonal = J.diagonal()
        if np.any(diagonal == 0.0):
            raise NumericalError("Jacobian has a zero diagonal entry",
                                 {"zero_rows": int(np.count_nonzero(diagonal == 0.0))})
        preconditioner = LinearOperator(J.shape, matvec=lambda v: v / diagonal)
        solution, info = gmres(J, rhs, rtol=config.krylov_tol, atol=0.0, restart=config.krylov_restart,
                               maxiter=config.krylov_maxiter, M=preconditioner)
        if info != 0:
            logger.warning(f"[!] GMRES stopped with info={info}; falling back to a direct solve")
            try:
                solution = spsolve(J.tocsc(), rhs)
            except RuntimeError as e:
                raise NumericalError(f"linear solve failed: {str(e)}", {"gmres_info": info}) from e
            if not np.all(np.isfinite(solution)):
                raise NumericalError("linear solve produced non-finite values", {"gmres_info": info})
        return solution

    def hessian_at(self, values: np.ndarray, node) -> SymMatrix:
        position = self.index[tuple(node)]
        if position < 0:
            raise PreconditionError(f"node {tuple(node)} has no full stencil")
        comps = self.components(self.unknown_values(values))[position]
        return SymMatrix(entries=self.matrices(comps[None, :])[0])

    def node_radii(self) -> np.ndarray:
        return self.radii


def build_discretization(grid, domain, boundary: BoundaryData):
    if isinstance(grid, RadialGrid):
        return RadialDiscretization(grid, boundary)
    return CartesianDiscretization(grid, domain, boundary)
