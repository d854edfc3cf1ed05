"""Momentum-space mode coefficients for two generalized cluster-Ising chains.

Both chains live on N spins with periodic boundary conditions and depend on an
angle phi mixing a cluster term (weight cos phi) and a transverse field
(weight sin phi):

    H1 = -cos(phi) * sum_j X_j Z_{j+1} ... Z_{j+n} X_{j+n+1} + sin(phi) * sum_j Z_j
    H2 = -cos(phi) * (1/n) * sum_{p=1}^{n} sum_j X_j Z_{j+1} ... Z_{j+p} X_{j+p+1}
         + sin(phi) * sum_j Z_j

In the odd fermion-parity sector (odd number of down spins, sigma^z = 1 - 2 c†c)
both map to free fermions with integer momenta q = 0..N-1.  Everything about a
mode is built from two structure factors of the string spans m = p+1:

    f(q) = <cos(2 pi m q / N)>_m      g(q) = <sin(2 pi m q / N)>_m

(single span m = n+1 for H1, average over m = 2..n+1 for H2).

Two sign conventions for the Bogoliubov-de Gennes block A tau^z + C tau^x are
provided:

* ``coefficients`` -- the quoted reference form A = f cos(phi) - sin(phi),
  C = -g cos(phi).  Kept bit-for-bit for reproducibility and for the closed-form
  equivalence checks.
* ``mode_coefficients`` -- the form consistent with the spin chain above, with
  the full mode gap as energy scale: A = -2 (f cos(phi) + sin(phi)),
  C = 2 g cos(phi).  The two conventions have identical mode-energy multisets
  exactly when some shift D satisfies m*D = N/2 (mod N) for every span m;
  otherwise only this one reproduces exact diagonalization, so it is the one
  all dynamics downstream is built on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

H1 = "h1"
H2 = "h2"
_KINDS = (H1, H2)

# spans above this use the closed Dirichlet-kernel resummation for H2
_CLOSED_FORM_THRESHOLD = 8


@dataclass(frozen=True)
class ModelSpec:
    """One chain: kind ('h1' or 'h2'), size N, cluster range n, angle phi."""

    kind: str
    N: int
    n: int
    phi: float

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        if self.N < 2:
            raise ValueError(f"N must be >= 2, got {self.N}")
        if not 1 <= self.n < self.N:
            raise ValueError(f"need 1 <= n < N, got n={self.n}, N={self.N}")

    def with_phi(self, phi: float) -> "ModelSpec":
        return ModelSpec(self.kind, self.N, self.n, phi)


def _phase(N: int, m: int, q: np.ndarray) -> np.ndarray:
    # reduce m*q mod N in integers before the float multiply; exact for huge N*n
    return (2.0 * np.pi / N) * ((m * q) % N)


def _factors_direct(kind: str, N: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    q = np.arange(N, dtype=np.int64)
    if kind == H1:
        th = _phase(N, n + 1, q)
        return np.cos(th), np.sin(th)
    f = np.zeros(N)
    g = np.zeros(N)
    for p in range(1, n + 1):
        th = _phase(N, p + 1, q)
        f += np.cos(th)
        g += np.sin(th)
    return f / n, g / n


def _factors_closed(N: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Dirichlet-kernel form of the H2 span averages.

    sum_{m=2}^{n+1} e^{i m t} = e^{i t (n+3)/2} * sin(n t / 2) / sin(t / 2),
    with the analytic limit n * e^{0} at t -> 0 (q = 0 is the only integer-q
    singularity of sin(t/2) in 0..N-1).
    """
    q = np.arange(N, dtype=np.int64)
    t = 2.0 * np.pi * q / N
    half = 0.5 * t
    with np.errstate(invalid="ignore", divide="ignore"):
        kernel = np.sin(0.5 * n * t) / np.sin(half)
    f = np.cos(0.5 * (n + 3) * t) * kernel / n
    g = np.sin(0.5 * (n + 3) * t) * kernel / n
    f[q == 0] = 1.0
    g[q == 0] = 0.0
    return f, g


def structure_factors(
    kind: str, N: int, n: int, method: str = "auto"
) -> tuple[np.ndarray, np.ndarray]:
    """Span-averaged (f, g) = (<cos m theta>, <sin m theta>) over q = 0..N-1."""
    if method not in ("auto", "direct", "closed"):
        raise ValueError(f"unknown method {method!r}")
    if kind == H1 or method == "direct":
        return _factors_direct(kind, N, n)
    if method == "closed" or n > _CLOSED_FORM_THRESHOLD:
        return _factors_closed(N, n)
    return _factors_direct(kind, N, n)


def coefficients(spec: ModelSpec, method: str = "auto") -> tuple[np.ndarray, np.ndarray]:
    """Reference-convention BdG coefficients (a, c), length-N arrays.

    a[q] = f(q) cos(phi) - sin(phi),  c[q] = -g(q) cos(phi).
    """
    f, g = structure_factors(spec.kind, spec.N, spec.n, method)
    cphi = math.cos(spec.phi)
    return f * cphi - math.sin(spec.phi), -g * cphi


def mode_coefficients(
    spec: ModelSpec, method: str = "auto"
) -> tuple[np.ndarray, np.ndarray]:
    """Diagonalization-consistent BdG coefficients in full-gap normalization.

    a[q] = -2 (f(q) cos(phi) + sin(phi)),  c[q] = 2 g(q) cos(phi).

    dispersion() of these arrays is the exact quasiparticle excitation energy
    of the chain in the odd-parity sector; the exact-diagonalization oracle
    agrees with this convention for every (N, n), not just the shift-symmetric
    combinations (see module docstring).
    """
    f, g = structure_factors(spec.kind, spec.N, spec.n, method)
    cphi = math.cos(spec.phi)
    return -2.0 * (f * cphi + math.sin(spec.phi)), 2.0 * g * cphi


def dispersion(coeffs: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
    """eps[q] = sqrt(a[q]^2 + c[q]^2), elementwise."""
    a, c = coeffs
    return np.hypot(a, c)
