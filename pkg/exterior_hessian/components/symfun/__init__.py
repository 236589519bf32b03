from .types import Spectrum, SymMatrix
from .kernel import (
    batch_sk_gradient,
    batch_sk_matrix,
    deleted_sk,
    deleted_spectrum,
    elem_sym,
    elem_sym_by_subsets,
    elem_sym_exact,
    elementary_symmetric,
    gamma_k_mask,
    in_gamma_k,
    maclaurin_chain_holds,
    maclaurin_means,
    sk_gradient,
    sk_matrix,
    sk_root,
    sk_values,
    spectrum_of,
)
