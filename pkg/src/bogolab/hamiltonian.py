"""Momentum-space assembly of the lattice Hamiltonians.

Two variants are built from the same normal-ordered pieces:

    H       = T + U - mu N          - nu sqrt(V) (a0 + a0*)
    H'      = T + U - mu N' - mu0 N0 - nu sqrt(V) (a0 + a0*)

with T = sum_k eps_k a_k* a_k, N' = N - N0, and the pair interaction

    U = (1/2L) sum_{k,k',q} v_q  a*_{k+q} a*_{k'-q} a_{k'} a_k,

all mode indices mod L.  The Fourier coefficients v_q are real (the potential
table is symmetric under r -> L-r), so every assembled matrix is exactly real
symmetric; the final operators are symmetrized entry-for-entry so hermiticity
holds as exact float equality, not up to a tolerance.
"""

from __future__ import annotations

import enum

import numpy as np
import scipy.sparse as sp

from .errors import ConstructionError
from .fock import (
    FockBasis,
    OperatorKind,
    SparseOperator,
    Subspace,
    mode_operator,
    number_operator,
)
from .model import LatticeModelSpec


class Variant(enum.Enum):
    H = "H"
    HPRIME = "Hprime"


def _hermitize(m: sp.spmatrix, label: str) -> sp.csr_matrix:
    """Average with the conjugate transpose; abort on real asymmetry.

    Averaging two IEEE floats is commutative, so (A + A*)/2 is exactly equal
    to its own conjugate transpose entry-for-entry.
    """
    m = m.tocsr()
    asym = (m - m.getH()).tocsr()
    scale = max(1.0, float(np.abs(m.data).max()) if m.nnz else 0.0)
    worst = float(np.abs(asym.data).max()) if asym.nnz else 0.0
    if worst > 1e-12 * scale:
        raise ConstructionError(
            f"{label}: assembly asymmetry {worst:.3e} exceeds 1e-12 * scale"
        )
    out = ((m + m.getH()) * 0.5).tocsr()
    diag_imag = np.abs(out.diagonal().imag)
    if diag_imag.size and diag_imag.max() > 0.0:
        raise ConstructionError(f"{label}: non-real diagonal after symmetrization")
    out.sum_duplicates()
    out.sort_indices()
    return out


def kinetic_operator(spec: LatticeModelSpec, basis: FockBasis) -> SparseOperator:
    """T = sum_k eps_k n_k (diagonal in the occupation basis)."""
    eps = np.array([spec.dispersion(j) for j in range(spec.L)])
    diag = basis.states @ eps
    return SparseOperator(basis.dim, sp.diags(diag.astype(np.complex128), format="csr"),
                          hermitian=True)


def interaction_operator(spec: LatticeModelSpec, basis: FockBasis) -> SparseOperator:
    """Normal-ordered momentum-space pair interaction U."""
    L = spec.L
    dim = basis.dim
    a = [mode_operator(basis, j, OperatorKind.ANNIHILATE).matrix for j in range(L)]
    ad = [m.getH().tocsr() for m in a]
    vq = [spec.interaction_fourier(q) for q in range(L)]
    total = sp.csr_matrix((dim, dim), dtype=np.complex128)
    for q in range(L):
        coeff = vq[q] / (2.0 * L)
        if coeff == 0.0:
            continue
        for k in range(L):
            for kp in range(L):
                term = ad[(k + q) % L] @ ad[(kp - q) % L] @ a[kp] @ a[k]
                total = total + coeff * term
    return SparseOperator(dim, _hermitize(total, "U"), hermitian=True)


def breaking_field_operator(spec: LatticeModelSpec, basis: FockBasis) -> SparseOperator:
    """X = sqrt(V) (a0 + a0*)."""
    a0 = mode_operator(basis, 0, OperatorKind.ANNIHILATE).matrix
    m = np.sqrt(spec.L) * (a0 + a0.getH())
    return SparseOperator(basis.dim, _hermitize(m, "X"), hermitian=True)


def assemble_hamiltonian(
    spec: LatticeModelSpec,
    basis: FockBasis,
    variant: Variant = Variant.H,
) -> tuple[SparseOperator, dict]:
    """Assemble H or H' on the full basis; returns (operator, named parts).

    The parts map exposes T, U, N, N0 and X individually so observables and
    audits reuse exactly the matrices that entered the Hamiltonian.
    """
    if basis.subspace is not Subspace.FULL:
        raise ValueError("hamiltonians are assembled on the full basis")
    T = kinetic_operator(spec, basis)
    U = interaction_operator(spec, basis)
    N = number_operator(basis, None)
    N0 = number_operator(basis, 0)
    X = breaking_field_operator(spec, basis)
    if variant is Variant.H:
        m = T.matrix + U.matrix - spec.mu * N.matrix - spec.nu * X.matrix
    else:
        nprime = N.matrix - N0.matrix
        m = (T.matrix + U.matrix - spec.mu * nprime - spec.mu0 * N0.matrix
             - spec.nu * X.matrix)
    op = SparseOperator(basis.dim, _hermitize(m, variant.value), hermitian=True)
    parts = {"T": T, "U": U, "N": N, "N0": N0, "X": X}
    return op, parts
