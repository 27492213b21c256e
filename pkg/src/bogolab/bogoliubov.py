"""The c-number substitution, both ways.

Route one conjugates the Gibbs operator by the mode-0 displacement built from
a truncated coherent vector and traces over the reduced space.  Route two
replaces the mode-0 ladder operators by a real scalar C inside the
normal-ordered momentum-space Hamiltonian and diagonalizes the result on the
reduced space.  The substituted pressure decomposes exactly as

    p0'(C, mu, mu0, nu) = p0'(C, mu, 0, 0) + mu0 C^2 / V + 2 nu C / sqrt(V)

because the mu0 and nu pieces substitute to scalars; the evaluator exploits
this by diagonalizing only the (mu0 = 0, nu = 0) generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import MaximizationError, TruncationError
from .fock import (
    FockBasis,
    OperatorKind,
    SparseOperator,
    Subspace,
    build_basis,
    mode_operator,
)
from .hamiltonian import Variant, _hermitize
from .model import LatticeModelSpec
from .thermal import Spectrum, log_partition, diagonalize

DEFAULT_TOL_TRUNC = 1e-10


# ---------------------------------------------------------------------------
# coherent vectors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoherentVector:
    """Truncated, renormalized coherent vector on the mode-0 ladder."""

    C: float
    n_cap: int
    amplitudes: np.ndarray = field(repr=False)
    tail_mass: float = 0.0
    renormalized: bool = True

    @property
    def eigen_residual_bound(self) -> float:
        """Upper bound on ||(a0 - C) v|| from the truncated tail."""
        return 2.0 * math.sqrt(self.tail_mass) * (
            abs(self.C) + math.sqrt(self.n_cap + 1))

    @property
    def eigen_residual(self) -> float:
        """Exact ||(a0 - C) v||: lowering the top level leaves -C v_M |M>."""
        return abs(self.C) * abs(float(self.amplitudes[-1]))


def _poisson_tail(lam: float, n_cap: int) -> float:
    """sum_{n > n_cap} e^{-lam} lam^n / n!  (forward summation, nonnegative)."""
    if lam == 0.0:
        return 0.0
    term = math.exp(-lam)
    for n in range(1, n_cap + 2):
        term *= lam / n
    total = 0.0
    n = n_cap + 1
    while term > 0.0 and (total == 0.0 or term > total * 1e-18):
        total += term
        n += 1
        term *= lam / n
    return total


def required_cap(C: float, tol_trunc: float, start: int = 0) -> int:
    """Smallest cap whose coherent tail mass is below tol_trunc."""
    m = max(start, 0)
    while _poisson_tail(C * C, m) >= tol_trunc:
        m += 1
        if m > 100000:
            raise TruncationError("no finite cap reaches the requested tail mass")
    return m


def coherent_vector(C: float, n_cap: int,
                    tol_trunc: float = DEFAULT_TOL_TRUNC) -> CoherentVector:
    """Truncated coherent amplitudes ~ C^n / sqrt(n!), renormalized to 1.

    Raises
    ------
    TruncationError
        When the discarded Poisson weight reaches ``tol_trunc``; the message
        names the cap that would satisfy the tolerance.
    """
    tail = _poisson_tail(C * C, n_cap)
    if tail >= tol_trunc:
        need = required_cap(C, tol_trunc, start=n_cap)
        raise TruncationError(
            f"coherent tail mass {tail:.3e} at C={C}, n_cap={n_cap} exceeds "
            f"tol_trunc={tol_trunc:.1e}; n_cap >= {need} is required"
        )
    prefactor = math.exp(-C * C / 2.0)
    amps = np.empty(n_cap + 1)
    amps[0] = prefactor
    for n in range(1, n_cap + 1):
        amps[n] = amps[n - 1] * C / math.sqrt(n)
    amps = amps / math.sqrt(math.fsum(float(a) * float(a) for a in amps))
    return CoherentVector(C=float(C), n_cap=n_cap, amplitudes=amps,
                          tail_mass=tail, renormalized=True)


def embed_product(psi: np.ndarray, cv: CoherentVector,
                  full_basis: FockBasis) -> np.ndarray:
    """Tensor a reduced-space vector with the mode-0 coherent vector.

    The lexicographic ordering makes this a plain Kronecker product with the
    coherent amplitudes as the leading factor.
    """
    if full_basis.subspace is not Subspace.FULL:
        raise ValueError("embedding targets the full basis")
    if cv.n_cap != full_basis.n_cap:
        raise ValueError(
            f"cap mismatch: coherent vector {cv.n_cap} vs basis {full_basis.n_cap}")
    reduced_dim = (full_basis.n_cap + 1) ** (full_basis.L - 1)
    psi = np.asarray(psi)
    if psi.shape != (reduced_dim,):
        raise ValueError(f"psi has shape {psi.shape}, expected ({reduced_dim},)")
    return np.kron(cv.amplitudes.astype(psi.dtype, copy=False), psi)


def displaced_trace_pressure(spec: LatticeModelSpec, spectrum: Spectrum,
                             C: float,
                             tol_trunc: float = DEFAULT_TOL_TRUNC) -> float:
    """(beta V)^{-1} log of the displaced-and-projected Gibbs trace.

    Sums <psi (x) C| e^{-beta H} |psi (x) C> over the reduced occupation
    basis.  The embedded vectors are orthonormal, so the sum never exceeds
    the full trace.
    """
    cv = coherent_vector(C, n_cap_from_dim(spectrum.dim, spec), tol_trunc)
    n0dim = cv.n_cap + 1
    reduced_dim = spectrum.dim // n0dim
    Q = spectrum.eigenvectors
    Qr = Q.reshape(n0dim, reduced_dim, spectrum.dim)
    B = np.einsum("a,ajd->dj", cv.amplitudes, Qr.conj())
    weights = (np.abs(B) ** 2).sum(axis=1)
    e = spectrum.eigenvalues
    beta = spec.beta
    shifted = np.exp(-beta * (e - e[0]))
    total = float((shifted * weights).sum())
    log_tr = -beta * float(e[0]) + math.log(total)
    return log_tr / (beta * spec.L)


def n_cap_from_dim(dim: int, spec: LatticeModelSpec) -> int:
    expected = (spec.n_cap + 1) ** spec.L
    if dim != expected:
        raise ValueError(f"spectrum dim {dim} does not match spec dim {expected}")
    return spec.n_cap


# ---------------------------------------------------------------------------
# substituted hamiltonian
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SubstitutedHamiltonian:
    """H0(C) on the reduced space, with its exact scalar decomposition.

    ``op`` equals ``base_op`` plus (mu0_shift + nu_shift) times the identity
    by construction; ``base_op`` generates p0'(C, mu, 0, 0).
    """

    C: float
    variant: Variant
    op: SparseOperator
    base_op: SparseOperator
    mu0_shift: float      # -mu0 C^2   (variant H uses mu in place of mu0)
    nu_shift: float       # -2 nu sqrt(V) C


class SubstitutedFamily:
    """Polynomial-in-C form of the substituted generator.

    The generator (mu0 = nu = 0) is sum_p C^p M_p with p in {0, 1, 2, 4}:
    the pair interaction contributes all powers (an odd single-substitution
    term exists only for L >= 3), the kinetic and N' pieces are constant.
    Evaluating at C therefore costs a few sparse additions plus one dense
    eigendecomposition; for a free model the generator is C-independent and
    its spectrum is computed once.
    """

    def __init__(self, spec: LatticeModelSpec, variant: Variant,
                 fprime_basis: FockBasis | None = None,
                 dim_guard: int = 20000):
        if fprime_basis is None:
            fprime_basis = build_basis(spec, Subspace.FPRIME, dim_guard=dim_guard)
        if fprime_basis.subspace is not Subspace.FPRIME:
            raise ValueError("substitution acts on the reduced basis")
        self.spec = spec
        self.variant = variant
        self.basis = fprime_basis
        self.dim = fprime_basis.dim
        self._base_spectrum_cache: dict = {}
        self._build_family()

    def _build_family(self):
        spec, basis, L = self.spec, self.basis, self.spec.L
        dim = basis.dim
        a = {}
        ad = {}
        for j in range(1, L):
            a[j] = mode_operator(basis, j, OperatorKind.ANNIHILATE).matrix
            ad[j] = a[j].getH().tocsr()
        fam = [sp.csr_matrix((dim, dim), dtype=np.complex128) for _ in range(5)]
        # kinetic + chemical piece on the reduced modes
        eps_diag = basis.states @ np.array([spec.dispersion(j) for j in range(L)])
        nprime_diag = basis.states[:, 1:].sum(axis=1) if L > 1 else np.zeros(dim)
        fam[0] = fam[0] + sp.diags(
            (eps_diag - spec.mu * nprime_diag).astype(np.complex128), format="csr")
        # pair interaction with every mode-0 factor replaced by one power of C
        vq = [spec.interaction_fourier(q) for q in range(L)]
        ident = sp.identity(dim, dtype=np.complex128, format="csr")
        for q in range(L):
            coeff = vq[q] / (2.0 * L)
            if coeff == 0.0:
                continue
            for k in range(L):
                for kp in range(L):
                    factors = [(k + q) % L, (kp - q) % L, kp, k]
                    power = sum(1 for f in factors if f == 0)
                    term = ident
                    for pos, f in enumerate(factors):
                        if f == 0:
                            continue
                        term = term @ (ad[f] if pos < 2 else a[f])
                    fam[power] = fam[power] + coeff * term
        self.family = [
            SparseOperator(dim, _hermitize(m, f"H0 C^{p} term"), hermitian=True)
            if m.nnz else SparseOperator(dim, m.tocsr(), hermitian=True)
            for p, m in enumerate(fam)
        ]
        self.c_independent = all(self.family[p].nnz == 0 for p in (1, 2, 3, 4))

    def base_matrix(self, C: float) -> sp.csr_matrix:
        m = self.family[0].matrix
        for p in (1, 2, 4):
            if self.family[p].nnz:
                m = m + (C ** p) * self.family[p].matrix
        return m.tocsr()

    def shifts(self, C: float) -> tuple[float, float]:
        spec = self.spec
        mu_like = spec.mu if self.variant is Variant.H else spec.mu0
        return (-mu_like * C * C, -2.0 * spec.nu * math.sqrt(spec.L) * C)

    def base_pressure(self, C: float) -> float:
        """p0'(C, mu, 0, 0) from the generator's spectrum."""
        key = 0.0 if self.c_independent else float(C)
        spectrum = self._base_spectrum_cache.get(key)
        if spectrum is None:
            base = SparseOperator(self.dim, self.base_matrix(key), hermitian=True)
            spectrum = diagonalize(base, basis_ref=f"H0(C={key})")
            if self.c_independent:
                self._base_spectrum_cache[key] = spectrum
            else:
                self._base_spectrum_cache = {key: spectrum}
        spec = self.spec
        return log_partition(spectrum, spec.beta) / (spec.beta * spec.L)

    def pressure0(self, C: float) -> float:
        """p0'(C) including the exact mu0 and nu scalar shifts."""
        mu0_shift, nu_shift = self.shifts(C)
        return self.base_pressure(C) - (mu0_shift + nu_shift) / self.spec.L

    def at(self, C: float) -> SubstitutedHamiltonian:
        base = SparseOperator(self.dim, self.base_matrix(C), hermitian=True)
        mu0_shift, nu_shift = self.shifts(C)
        ident = sp.identity(self.dim, dtype=np.complex128, format="csr")
        op = SparseOperator(
            self.dim, (base.matrix + (mu0_shift + nu_shift) * ident).tocsr(),
            hermitian=True)
        return SubstitutedHamiltonian(C=float(C), variant=self.variant, op=op,
                                      base_op=base, mu0_shift=mu0_shift,
                                      nu_shift=nu_shift)


def substitute_hamiltonian(spec: LatticeModelSpec, variant: Variant, C: float,
                           fprime_basis: FockBasis | None = None,
                           dim_guard: int = 20000) -> SubstitutedHamiltonian:
    """Replace the mode-0 ladder operators by the real scalar C."""
    family = SubstitutedFamily(spec, variant, fprime_basis, dim_guard=dim_guard)
    return family.at(C)


def pressure0(spec: LatticeModelSpec, sub: SubstitutedHamiltonian) -> float:
    """p0(C) = (beta V)^{-1} log Tr' e^{-beta H0(C)} by direct diagonalization."""
    spectrum = diagonalize(sub.op, basis_ref=f"H0(C={sub.C})")
    return log_partition(spectrum, spec.beta) / (spec.beta * spec.L)


# ---------------------------------------------------------------------------
# maximization over C
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BogoliubovMaximum:
    """Output of the substituted-pressure maximization."""

    C_max: float
    p0_sup: float
    bracket: tuple
    evaluations: int
    sign_consistent: bool
    stationarity_residual: float = math.nan
    warnings: tuple = ()


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_EXPANSION_LIMIT = 2 ** 40


def maximize_over_C(spec: LatticeModelSpec, variant: Variant = Variant.HPRIME,
                    fprime_basis: FockBasis | None = None,
                    bracket_tol: float = 1e-8,
                    dim_guard: int = 20000) -> BogoliubovMaximum:
    """Maximize p0'(C) on the ray sgn C = sgn nu.

    Bracket expansion by doubling, then golden-section refinement to
    |bracket| < bracket_tol * max(1, |C_max|).  Ties within 1e-12 resolve to
    the smaller |C|, so the nu = 0 case lands exactly on C = 0.
    """
    family = SubstitutedFamily(spec, variant, fprime_basis, dim_guard=dim_guard)
    sign = -1.0 if spec.nu < 0 else 1.0
    evals = 0

    def f(s: float) -> float:
        nonlocal evals
        evals += 1
        return family.pressure0(sign * s)

    mu_like = spec.mu if variant is Variant.H else spec.mu0
    s0 = max(1.0, 4.0 * abs(spec.nu) * math.sqrt(spec.L) / max(abs(mu_like), 0.1))
    samples = [(0.0, f(0.0))]
    s = s0
    while True:
        samples.append((s, f(s)))
        best = max(samples, key=lambda t: t[1])
        if best[0] < samples[-1][0]:
            break
        if s / s0 > _EXPANSION_LIMIT:
            raise MaximizationError(
                f"substituted pressure still rising at C = {sign * s:.3e}; "
                "enlarge the expansion limit")
        s *= 2.0
    warnings = []
    values = [v for _, v in samples]
    direction_changes = sum(
        1 for i in range(1, len(values) - 1)
        if (values[i] - values[i - 1]) * (values[i + 1] - values[i]) < 0)
    if direction_changes > 1:
        warnings.append(
            f"coarse scan is not unimodal ({direction_changes} turning points); "
            f"samples: {[(round(s, 6), v) for s, v in samples]}")

    idx = samples.index(best)
    lo = samples[idx - 1][0] if idx > 0 else 0.0
    hi = samples[idx + 1][0] if idx + 1 < len(samples) else samples[-1][0]

    # golden-section refinement
    x1 = hi - _INV_PHI * (hi - lo)
    x2 = lo + _INV_PHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > bracket_tol * max(1.0, 0.5 * (lo + hi)):
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INV_PHI * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INV_PHI * (hi - lo)
            f2 = f(x2)
    s_best = 0.5 * (lo + hi)
    p_best = f(s_best)
    # never lose to an endpoint already sampled; ties prefer the smaller |C|
    for s_cand, p_cand in samples:
        if p_cand > p_best + 1e-12 or (abs(p_cand - p_best) <= 1e-12
                                       and s_cand < s_best):
            s_best, p_best = s_cand, p_cand
    C_max = sign * s_best
    stationarity = math.nan
    if s_best > bracket_tol * max(1.0, s_best):
        h = 1e-6 * max(1.0, abs(C_max))
        stationarity = abs(family.pressure0(C_max + h)
                           - family.pressure0(C_max - h)) / (2 * h)
    sign_ok = C_max == 0.0 or (
        spec.nu != 0.0
        and math.copysign(1.0, C_max) == math.copysign(1.0, spec.nu))
    return BogoliubovMaximum(
        C_max=C_max, p0_sup=p_best,
        bracket=(sign * lo, sign * hi) if sign > 0 else (sign * hi, sign * lo),
        evaluations=evals, sign_consistent=sign_ok,
        stationarity_residual=stationarity, warnings=tuple(warnings))
