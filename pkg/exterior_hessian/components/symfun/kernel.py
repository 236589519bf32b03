"""
Elementary symmetric functions S_k of spectra and symmetric matrices,
the derivative tensor S_k^{ij} and Γ_k cone queries.

Array functions (`elementary_symmetric`, `batch_*`) take eigenvalues or
matrices stacked along leading axes and are what the solver and level-set
code call per grid node; the Spectrum/SymMatrix functions wrap them.
"""
import itertools
import logging
import math
from fractions import Fraction
from typing import List, Sequence, Union

import numpy as np
from scipy.special import comb

from exterior_hessian.errors import DomainError, NumericalError, PreconditionError
from .types import Spectrum, SymMatrix

logger = logging.getLogger(__name__)

Number = Union[int, float, Fraction]


def elementary_symmetric(lams: np.ndarray, k: int) -> np.ndarray:
    """
    All of S_0,…,S_k for spectra stacked along the last axis.

    Uses the one-pass update e_j ← e_j + λ_i e_{j−1}, O(nk) per spectrum.

    Returns:
        array of shape lams.shape[:-1] + (k+1,)
    """
    lams = np.asarray(lams, dtype=float)
    n = lams.shape[-1]
    e = np.zeros(lams.shape[:-1] + (k + 1,))
    e[..., 0] = 1.0
    for i in range(n):
        lam = lams[..., i]
        for j in range(min(i + 1, k), 0, -1):
            e[..., j] += lam * e[..., j - 1]
    return e


def sk_values(lams: np.ndarray, k: int) -> np.ndarray:
    return elementary_symmetric(lams, k)[..., k]


def deleted_sk(lams: np.ndarray, k: int) -> np.ndarray:
    """S_k(λ|i) for every i, shape lams.shape"""
    lams = np.asarray(lams, dtype=float)
    n = lams.shape[-1]
    out = np.empty(lams.shape)
    if k < 0:
        out.fill(0.0)
        return out
    for i in range(n):
        out[..., i] = sk_values(np.delete(lams, i, axis=-1), k)
    return out


def gamma_k_mask(lams: np.ndarray, k: int, strict: bool = True, margin: float = 0.0) -> np.ndarray:
    """Nodewise Γ_k membership: S_i > margin (strict) or S_i ≥ −margin (closure), i = 1..k"""
    e = elementary_symmetric(lams, k)[..., 1:]
    if strict:
        return np.all(e > margin, axis=-1)
    return np.all(e >= -margin, axis=-1)


def _eigen(matrices: np.ndarray, vectors: bool):
    try:
        if vectors:
            return np.linalg.eigh(matrices)
        return np.linalg.eigvalsh(matrices)
    except np.linalg.LinAlgError as e:
        raise NumericalError(
            f"eigen-decomposition failed: {str(e)}",
            {"shape": tuple(np.shape(matrices)),
             "finite": bool(np.all(np.isfinite(matrices))),
             "max_abs_entry": float(np.nanmax(np.abs(matrices)))},
        ) from e


def batch_sk_matrix(matrices: np.ndarray, k: int) -> np.ndarray:
    return sk_values(_eigen(matrices, vectors=False), k)


def batch_sk_gradient(matrices: np.ndarray, k: int) -> np.ndarray:
    """
    S_k^{ij} = ∂S_k/∂M_ij for matrices stacked along leading axes.

    Computed as Q diag(S_{k−1}(λ|i)) Qᵀ. Equal eigenvalues give equal diagonal
    entries, so the result does not depend on the basis chosen inside a
    repeated eigenspace and no divided differences are needed.
    """
    w, q = _eigen(matrices, vectors=True)
    d = deleted_sk(w, k - 1)
    return np.einsum("...ij,...j,...kj->...ik", q, d, q)


def _check_order(k: int, n: int, lowest: int = 0) -> None:
    if not lowest <= k <= n:
        raise DomainError(f"k={k} outside [{lowest}, {n}]")


def elem_sym(spectrum: Spectrum, k: int) -> float:
    _check_order(k, spectrum.n)
    return float(sk_values(spectrum.as_array(), k))


def deleted_spectrum(spectrum: Spectrum, i: int) -> Spectrum:
    """(λ|i): λ with its i-th entry removed, i counted from 1"""
    if spectrum.n < 2:
        raise DomainError("cannot delete from a one-entry spectrum")
    if not 1 <= i <= spectrum.n:
        raise DomainError(f"index {i} outside [1, {spectrum.n}]")
    values = spectrum.values[: i - 1] + spectrum.values[i:]
    # (λ|i) of a planar spectrum has one entry; the parent is already validated
    return Spectrum.model_construct(values=values, n=len(values))


def in_gamma_k(spectrum: Spectrum, k: int, strict: bool = True, margin: float = 0.0) -> bool:
    _check_order(k, spectrum.n, lowest=1)
    return bool(gamma_k_mask(spectrum.as_array(), k, strict=strict, margin=margin))


def sk_matrix(matrix: SymMatrix, k: int) -> float:
    _check_order(k, matrix.n)
    return float(batch_sk_matrix(matrix.entries, k))


def sk_gradient(matrix: SymMatrix, k: int) -> SymMatrix:
    _check_order(k, matrix.n, lowest=1)
    return SymMatrix(entries=batch_sk_gradient(matrix.entries, k))


def spectrum_of(matrix: SymMatrix) -> Spectrum:
    return Spectrum(values=_eigen(matrix.entries, vectors=False))


def maclaurin_means(spectrum: Spectrum, k: int) -> List[float]:
    """Normalized means m_i = S_i/C(n,i), i = 1..k"""
    _check_order(k, spectrum.n, lowest=1)
    if not in_gamma_k(spectrum, k, strict=False):
        raise PreconditionError(f"spectrum {spectrum.values} is outside the closure of Γ_{k}")
    e = elementary_symmetric(spectrum.as_array(), k)
    return [float(e[i] / comb(spectrum.n, i, exact=True)) for i in range(1, k + 1)]


def maclaurin_chain_holds(means: Sequence[float], rtol: float = 1e-12) -> bool:
    """m_{i+1}/m_i non-increasing along the chain (m_0 = 1)"""
    chain = [1.0] + list(means)
    for i in range(1, len(chain) - 1):
        if chain[i] <= 0:
            return chain[i + 1] <= 0
        # m_i² ≥ m_{i−1} m_{i+1}
        if chain[i] ** 2 < chain[i - 1] * chain[i + 1] * (1 - rtol):
            return False
    return True


def sk_root(lams: np.ndarray, k: int) -> np.ndarray:
    """S_k^{1/k}, the concave form of the operator on Γ_k"""
    return np.power(np.maximum(sk_values(lams, k), 0.0), 1.0 / k)


def elem_sym_exact(values: Sequence[Number], k: int) -> Number:
    """Same recurrence as `elementary_symmetric` in the arithmetic of `values`"""
    e: List[Number] = [1] + [0] * k
    for count, lam in enumerate(values, start=1):
        for j in range(min(count, k), 0, -1):
            e[j] = e[j] + lam * e[j - 1]
    return e[k]


def elem_sym_by_subsets(values: Sequence[Number], k: int) -> Number:
    """Explicit subset enumeration; exponential, used only as an oracle for small n"""
    return sum(math.prod(c) for c in itertools.combinations(values, k))
