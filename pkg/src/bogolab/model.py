"""Model definition for a finite bosonic lattice gas in a symmetry-breaking field.

A model instance fixes one periodic 1D lattice of L sites (V = L), a per-mode
occupancy cap, the hopping energy, the pair-potential table, the inverse
temperature and the chemical potentials.  The distinguished one-particle state
is the uniform k = 0 momentum mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class LatticeModelSpec:
    """Full physical and numerical description of one finite system.

    Parameters
    ----------
    L : int
        Number of lattice sites; plays the role of the volume V.
    n_cap : int
        Per-mode occupancy cap (each momentum mode holds 0..n_cap bosons).
    t : float
        Hopping energy; kinetic dispersion is eps_k = 2 t (1 - cos k), so
        the k = 0 mode carries no kinetic energy.
    phi : tuple of float
        Real-space pair potential phi(r) for r = 0 .. floor(L/2); shorter
        tables are padded with zeros, and phi is extended periodically by
        phi(r) = phi(L - r).
    beta : float
        Inverse temperature, > 0.
    mu : float
        Chemical potential.
    mu0 : float
        Auxiliary chemical potential coupled to the k = 0 occupation only.
    nu : float
        Amplitude of the symmetry-breaking field nu * sqrt(V) (a0 + a0*).
    """

    L: int
    n_cap: int
    t: float
    phi: tuple = field(default=(0.0,))
    beta: float = 1.0
    mu: float = -1.0
    mu0: float = -1.0
    nu: float = 0.0

    def __post_init__(self):
        if self.L < 1:
            raise ValueError(f"L must be >= 1, got {self.L}")
        if self.n_cap < 1:
            raise ValueError(f"n_cap must be >= 1, got {self.n_cap}")
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        object.__setattr__(self, "phi", tuple(float(v) for v in self.phi))
        if len(self.phi) == 0:
            raise ValueError("phi table must contain at least phi(0)")

    @property
    def volume(self) -> float:
        return float(self.L)

    @property
    def full_dim(self) -> int:
        return (self.n_cap + 1) ** self.L

    def phi_at(self, r: int) -> float:
        """Pair potential at lattice separation r, with phi(r) = phi(L - r)."""
        r = r % self.L
        r = min(r, self.L - r)
        return self.phi[r] if r < len(self.phi) else 0.0

    def interaction_fourier(self, q_index: int) -> float:
        """v_q = sum_r phi(r) e^{-iqr} for q = 2*pi*q_index/L.

        The table is symmetric under r -> L - r, so the sum is real and is
        evaluated as a cosine sum to keep the assembled operators exactly real.
        """
        q = 2.0 * math.pi * (q_index % self.L) / self.L
        return math.fsum(self.phi_at(r) * math.cos(q * r) for r in range(self.L))

    def dispersion(self, k_index: int) -> float:
        """eps_k = 2 t (1 - cos k) for k = 2*pi*k_index/L."""
        k = 2.0 * math.pi * (k_index % self.L) / self.L
        return 2.0 * self.t * (1.0 - math.cos(k))

    @property
    def is_free(self) -> bool:
        """True when the pair potential vanishes identically."""
        return all(v == 0.0 for v in self.phi)

    def with_fields(self, **kwargs) -> "LatticeModelSpec":
        """Copy of the spec with selected fields replaced."""
        return replace(self, **kwargs)


@dataclass(frozen=True)
class SuperstabilityBound:
    """Result of the sampled lower-bound check U >= -b n + a n^2 / L."""

    a: float
    b: float
    worst_slack: float
    passed: bool
    n_checked: int = 0

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("superstability constant a must be positive")


def potential_energy(spec: LatticeModelSpec, positions: Sequence[int]) -> float:
    """Total pair energy sum_{i<j} phi(r_i - r_j) of classical positions."""
    pos = list(positions)
    return math.fsum(
        spec.phi_at(pos[i] - pos[j])
        for i in range(len(pos))
        for j in range(i + 1, len(pos))
    )


def superstability_check(
    spec: LatticeModelSpec,
    n_range: tuple[int, int] = (1, 8),
    samples_per_n: int = 200,
    seed: int = 0,
) -> SuperstabilityBound:
    """Sampled verification of the superstability bound with explicit constants.

    The constants are a = phi(0)/2 and b = phi(0)/2 + sum_{r != 0} |phi(r)|.
    For every sampled placement of n particles on the lattice the slack
    U - (-b n + a n^2 / L) is evaluated; the minimum over all samples is
    reported.  ``passed`` is False when any slack is negative; that is a valid
    result, not an error.
    """
    if not spec.phi_at(0) > 0:
        raise ValueError("superstability check requires on-site repulsion phi(0) > 0")
    a = spec.phi_at(0) / 2.0
    b = spec.phi_at(0) / 2.0 + math.fsum(
        abs(spec.phi_at(r)) for r in range(1, spec.L)
    )
    rng = np.random.default_rng(seed)
    lo, hi = n_range
    if lo < 1 or hi < lo:
        raise ValueError(f"invalid particle-number range {n_range}")
    worst = math.inf
    checked = 0
    for n in range(lo, hi + 1):
        for _ in range(samples_per_n):
            positions = rng.integers(0, spec.L, size=n)
            u = potential_energy(spec, positions)
            slack = u - (-b * n + a * n * n / spec.L)
            worst = min(worst, slack)
            checked += 1
    return SuperstabilityBound(a=a, b=b, worst_slack=worst, passed=worst >= 0.0,
                               n_checked=checked)
