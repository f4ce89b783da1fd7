"""Integer cohomology arithmetic for the configuration-space topology.

Finitely generated abelian groups in divisor-chain normal form, the
intersection form with its characteristic (parity) vector, enumeration of
admissible determinant-line classes under the attainment bound, and the
homotopy groups of the gauge quotient (which depend only on H^1 and the
sphere dimension; pi_0 is classified by H^2).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd, pi

import numpy as np

from .errors import EnumerationTooLargeError


def _divisor_chain(torsion) -> tuple[int, ...]:
    """Normalize torsion coefficients so that d1 | d2 | ... holds."""
    t = [int(v) for v in torsion]
    if any(v < 2 for v in t):
        raise ValueError("torsion coefficients must be integers >= 2")
    changed = True
    while changed:
        changed = False
        for i in range(len(t)):
            for j in range(i + 1, len(t)):
                g = gcd(t[i], t[j])
                l = t[i] * t[j] // g
                if (g, l) != (t[i], t[j]):
                    t[i], t[j] = g, l
                    changed = True
    t = [v for v in t if v > 1]
    t.sort()
    return tuple(t)


@dataclass(frozen=True)
class AbelianGroup:
    """Z^free_rank + Z/d1 + Z/d2 + ... with d1 | d2 | ... (canonical form)."""

    free_rank: int = 0
    torsion: tuple[int, ...] = ()

    def __post_init__(self):
        if self.free_rank < 0:
            raise ValueError("free_rank must be non-negative")
        object.__setattr__(self, "free_rank", int(self.free_rank))
        object.__setattr__(self, "torsion", _divisor_chain(self.torsion))

    @classmethod
    def trivial(cls) -> "AbelianGroup":
        return cls(0, ())

    @classmethod
    def free(cls, rank: int) -> "AbelianGroup":
        return cls(rank, ())

    @property
    def is_trivial(self) -> bool:
        return self.free_rank == 0 and not self.torsion

    def __str__(self) -> str:
        parts = []
        if self.free_rank == 1:
            parts.append("Z")
        elif self.free_rank > 1:
            parts.append(f"Z^{self.free_rank}")
        parts.extend(f"Z/{d}" for d in self.torsion)
        return " + ".join(parts) if parts else "0"


@dataclass(frozen=True)
class IntersectionForm:
    """Symmetric integer pairing on H^2 with its characteristic vector w.

    w plays the role of the second Stiefel-Whitney class in the chosen
    basis: Q(w, x) must be congruent to Q(x, x) mod 2 for every basis x.
    """

    Q: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=np.int64)
        w = np.asarray(self.w, dtype=np.int64)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ValueError("Q must be a square matrix")
        if not np.array_equal(Q, Q.T):
            raise ValueError("Q must be symmetric")
        if w.shape != (Q.shape[0],):
            raise ValueError("w must be a vector of length b2")
        diag = np.diagonal(Q)
        if np.any((Q @ w - diag) % 2 != 0):
            raise ValueError("w is not characteristic: Q(w,x) != Q(x,x) mod 2")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "w", w % 2)

    @property
    def rank(self) -> int:
        return self.Q.shape[0]

    @classmethod
    def hyperbolic_sum(cls, blocks: int, w=None) -> "IntersectionForm":
        """Direct sum of `blocks` copies of [[0,1],[1,0]] (even form, w = 0)."""
        n = 2 * blocks
        Q = np.zeros((n, n), dtype=np.int64)
        for b in range(blocks):
            Q[2 * b, 2 * b + 1] = Q[2 * b + 1, 2 * b] = 1
        return cls(Q, np.zeros(n, dtype=np.int64) if w is None else w)


@dataclass(frozen=True)
class SpinCClass:
    """An admissible determinant-line class: integer vector with alpha = w mod 2."""

    alpha: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(int(v) for v in self.alpha))

    def __neg__(self) -> "SpinCClass":
        return SpinCClass(tuple(-v for v in self.alpha))


@dataclass(frozen=True)
class CohomologyProfile:
    """The topological inputs of the existence bound and of Table-style rows."""

    H1: AbelianGroup
    H2: AbelianGroup
    chi: int
    sigma: int
    vol: float
    k_min: float

    def __post_init__(self):
        if self.vol <= 0:
            raise ValueError("vol must be positive")


def alpha_squared(Q: IntersectionForm, a: SpinCClass) -> int:
    """The self-pairing a^T Q a."""
    v = np.asarray(a.alpha, dtype=np.int64)
    if v.shape != (Q.rank,):
        raise ValueError(f"class has length {v.size}, form has rank {Q.rank}")
    return int(v @ Q.Q @ v)


def attainment_bound(p: CohomologyProfile) -> float:
    """(1/4pi^2) ((k-/8) vol + 2 chi + 3 sigma) with k- = max(0, -min k).

    An admissible class can only carry an energy-attaining configuration
    when its self-pairing stays below this number.
    """
    k_minus = max(0.0, -p.k_min)
    return ((k_minus / 8.0) * p.vol + 2.0 * p.chi + 3.0 * p.sigma) / (4.0 * pi ** 2)


def spinc_enumerate(Q: IntersectionForm, p: CohomologyProfile,
                    radius: int, cell_cap: int = 10_000_000) -> list[SpinCClass]:
    """All classes with alpha = w mod 2, |alpha|_inf <= radius and
    alpha^2 <= attainment_bound(p), in lexicographic order."""
    if radius < 0:
        raise ValueError("radius must be non-negative")
    count = (2 * radius + 1) ** Q.rank
    if count > cell_cap:
        raise EnumerationTooLargeError(
            f"search box holds {count} candidates, above the cap {cell_cap}; "
            "shrink the radius or raise cell_cap"
        )
    bound = attainment_bound(p)
    out = []
    for flat in np.ndindex(*(2 * radius + 1,) * Q.rank):
        alpha = tuple(int(v) - radius for v in flat)
        if any((a - w) % 2 for a, w in zip(alpha, Q.w)):
            continue
        cls = SpinCClass(alpha)
        if alpha_squared(Q, cls) <= bound:
            out.append(cls)
    out.sort(key=lambda c: c.alpha)
    return out


def homotopy_groups(p: CohomologyProfile, n: int) -> AbelianGroup:
    """pi_n of the gauge quotient for sphere families of dimension n >= 1.

    Only H^1 and n matter: n = 1 gives H^1(X, Z) (torsion included),
    n = 2 gives Z, every other n gives the trivial group.
    """
    if n == 0:
        raise ValueError("n = 0 is a set, not a group; use pi_zero instead")
    if n < 0:
        raise ValueError("n must be a positive integer")
    if n == 1:
        return p.H1
    if n == 2:
        return AbelianGroup.free(1)
    return AbelianGroup.trivial()


def pi_zero(p: CohomologyProfile) -> AbelianGroup:
    """Connected components of the configuration quotient: H^2(X, Z)."""
    return p.H2
