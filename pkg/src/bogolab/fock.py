"""Truncated bosonic Fock bases over lattice momentum modes, and sparse operators.

The basis enumerates occupation vectors (n_0, ..., n_{L-1}) with 0 <= n_j <=
n_cap in lexicographic order, which makes the mode-0 occupation the most
significant digit: a full-space index decomposes as n_0 * (n_cap+1)^(L-1) +
(index within the remaining modes).  The reduced space with n_0 = 0 therefore
embeds as the leading block, and tensor products against a mode-0 vector are
plain Kronecker products.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DimensionGuardError
from .model import LatticeModelSpec

DEFAULT_DIM_GUARD = 20000


class Subspace(enum.Enum):
    FULL = "full"
    FPRIME = "fprime"   # k = 0 mode frozen at n_0 = 0


class OperatorKind(enum.Enum):
    CREATE = "create"
    ANNIHILATE = "annihilate"


@dataclass(frozen=True)
class SparseOperator:
    """Sparse matrix wrapper with an explicit hermiticity contract.

    ``matrix`` is kept in canonical CSR form, so duplicate (row, col) entries
    cannot occur.  When ``hermitian`` is set the matrix equals its conjugate
    transpose entry-for-entry (exact float equality, enforced at creation).
    """

    dim: int
    matrix: sp.csr_matrix
    hermitian: bool = False

    def __post_init__(self):
        m = self.matrix.tocsr()
        m.sum_duplicates()
        m.sort_indices()
        object.__setattr__(self, "matrix", m)
        if m.shape != (self.dim, self.dim):
            raise ValueError(f"matrix shape {m.shape} != declared dim {self.dim}")
        if self.hermitian and not self.is_exactly_hermitian():
            raise ValueError("operator flagged hermitian is not exactly hermitian")

    def is_exactly_hermitian(self) -> bool:
        diff = self.matrix - self.matrix.getH()
        return diff.count_nonzero() == 0

    @property
    def entries(self):
        """Iterator of (row, col, value) triples in canonical order."""
        coo = self.matrix.tocoo()
        return zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist())

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def dagger(self) -> "SparseOperator":
        return SparseOperator(self.dim, self.matrix.getH().tocsr(), self.hermitian)

    def max_abs(self) -> float:
        return float(np.abs(self.matrix.data).max()) if self.matrix.nnz else 0.0

    def __matmul__(self, other):
        if isinstance(other, SparseOperator):
            return SparseOperator(self.dim, (self.matrix @ other.matrix).tocsr())
        return self.matrix @ other

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        return SparseOperator(self.dim, (self.matrix + other.matrix).tocsr())

    def __sub__(self, other: "SparseOperator") -> "SparseOperator":
        return SparseOperator(self.dim, (self.matrix - other.matrix).tocsr())

    def scaled(self, c: complex) -> "SparseOperator":
        return SparseOperator(self.dim, (self.matrix * c).tocsr())


@dataclass(frozen=True)
class FockBasis:
    """Occupation-number basis on the full space or on the n_0 = 0 subspace."""

    L: int
    n_cap: int
    subspace: Subspace
    states: np.ndarray = field(repr=False)      # (dim, L) occupation vectors
    index_of: dict = field(repr=False)          # occupation tuple -> ordinal

    @property
    def dim(self) -> int:
        return self.states.shape[0]

    @property
    def modes(self) -> np.ndarray:
        """Momenta k_j = 2*pi*j/L for j = 0 .. L-1."""
        return 2.0 * np.pi * np.arange(self.L) / self.L

    def state(self, i: int) -> tuple:
        return tuple(int(v) for v in self.states[i])

    def index(self, occupation) -> int:
        return self.index_of[tuple(int(v) for v in occupation)]

    def embed_index_into_full(self, i: int) -> int:
        """Full-space ordinal of reduced state i (valid since n_0 = 0 states lead)."""
        if self.subspace is not Subspace.FPRIME:
            raise ValueError("embedding is defined for the reduced basis only")
        return i


def build_basis(
    spec: LatticeModelSpec,
    subspace: Subspace = Subspace.FULL,
    dim_guard: int = DEFAULT_DIM_GUARD,
) -> FockBasis:
    """Enumerate the truncated occupation basis in lexicographic order.

    Raises
    ------
    DimensionGuardError
        If (n_cap+1)^L exceeds ``dim_guard`` (applies to the full dimension
        so both subspaces of one spec are accepted or rejected together).
    """
    full_dim = (spec.n_cap + 1) ** spec.L
    if full_dim > dim_guard:
        raise DimensionGuardError(
            f"(n_cap+1)^L = {full_dim} exceeds the dimension guard {dim_guard} "
            f"(L={spec.L}, n_cap={spec.n_cap})"
        )
    base = spec.n_cap + 1
    if subspace is Subspace.FULL:
        free_modes = spec.L
    else:
        free_modes = spec.L - 1
    dim = base ** free_modes
    # lexicographic enumeration: mode 0 is the most significant digit
    cols = []
    for j in range(free_modes):
        stride = base ** (free_modes - 1 - j)
        reps = base ** j
        col = np.tile(np.repeat(np.arange(base), stride), reps)
        cols.append(col)
    if subspace is Subspace.FPRIME:
        cols.insert(0, np.zeros(dim, dtype=np.int64))
    states = np.column_stack(cols).astype(np.int64)
    index_of = {tuple(int(v) for v in row): i for i, row in enumerate(states)}
    return FockBasis(L=spec.L, n_cap=spec.n_cap, subspace=subspace,
                     states=states, index_of=index_of)


def mode_operator(basis: FockBasis, j: int, kind: OperatorKind) -> SparseOperator:
    """Truncated ladder operator for momentum mode j on the given basis.

    Annihilation carries the standard sqrt(n) amplitudes; creation out of the
    capped level n = n_cap maps to zero.  Creation is the exact transpose of
    annihilation.  On the reduced basis the mode-0 operators are identically
    zero (every state has n_0 = 0 and creation would leave the subspace).
    """
    if not 0 <= j < basis.L:
        raise ValueError(f"mode index {j} out of range for L={basis.L}")
    dim = basis.dim
    occ = basis.states[:, j]
    if basis.subspace is Subspace.FPRIME and j == 0:
        empty = sp.csr_matrix((dim, dim), dtype=np.complex128)
        return SparseOperator(dim, empty)

    # lexicographic index arithmetic: lowering n_j shifts the ordinal by the
    # stride of digit j among the freely varying modes
    free_modes = basis.L if basis.subspace is Subspace.FULL else basis.L - 1
    digit = j if basis.subspace is Subspace.FULL else j - 1
    stride = (basis.n_cap + 1) ** (free_modes - 1 - digit)

    cols = np.nonzero(occ > 0)[0]
    rows = cols - stride
    vals = np.sqrt(occ[cols].astype(np.float64))
    annihilate = sp.csr_matrix(
        (vals.astype(np.complex128), (rows, cols)), shape=(dim, dim)
    )
    if kind is OperatorKind.ANNIHILATE:
        return SparseOperator(dim, annihilate)
    return SparseOperator(dim, annihilate.T.tocsr())


def number_operator(basis: FockBasis, j: int | None = None) -> SparseOperator:
    """Diagonal occupation operator n_j, or the total N when j is None."""
    if j is None:
        diag = basis.states.sum(axis=1).astype(np.float64)
    else:
        if not 0 <= j < basis.L:
            raise ValueError(f"mode index {j} out of range for L={basis.L}")
        diag = basis.states[:, j].astype(np.float64)
    m = sp.diags(diag.astype(np.complex128), format="csr")
    return SparseOperator(basis.dim, m, hermitian=True)


def identity_operator(dim: int) -> SparseOperator:
    return SparseOperator(dim, sp.identity(dim, dtype=np.complex128, format="csr"),
                          hermitian=True)


def commutator_max_abs(A: SparseOperator, B: SparseOperator) -> float:
    """Max-norm of [A, B], used by symmetry audits."""
    comm = A.matrix @ B.matrix - B.matrix @ A.matrix
    comm = comm.tocsr()
    return float(np.abs(comm.data).max()) if comm.nnz else 0.0
