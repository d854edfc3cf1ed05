"""Dense spin-basis reference for the mode-space energetics.

Everything here works directly with 2^N-dimensional matrices built from Pauli
strings, with no fermionization anywhere: an independent route to the same
numbers as :mod:`clusterqb.energetics`, trusted because it is dumb.

Conventions (these pin every sign in the package):
  * computational basis bit b_j = 0  <->  sigma^z_j = +1 (spin up, fermion
    vacuum); bit 1 is a down spin / occupied mode,
  * fermion parity operator Pi_j sigma^z_j; the odd sector is the set of basis
    states with an odd number of 1-bits,
  * thermal state rho ~ exp(-beta H) restricted to the odd sector; at
    beta = INFINITE the uniform mixture over sector eigenvalues within
    DEGENERACY_TOL of the minimum (degenerate-average convention).

Dense diagonalization caps at N <= MAX_SITES (sector dimension 2^(N-1)).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .energetics import DEGENERACY_TOL, INFINITE, _check_beta, _check_pair
from .model import H1, ModelSpec

MAX_SITES = 14


def _popcount_parities(N: int) -> np.ndarray:
    bits = np.arange(1 << N, dtype=np.uint32)
    par = np.zeros(1 << N, dtype=np.int64)
    for j in range(N):
        par += (bits >> j) & 1
    return par & 1


def odd_sector_indices(N: int) -> np.ndarray:
    """Basis indices with odd fermion parity (odd number of down spins)."""
    return np.nonzero(_popcount_parities(N) == 1)[0]


def parity_operator(N: int) -> np.ndarray:
    """Dense Pi_j sigma^z_j (diagonal, entries +1/-1)."""
    return np.diag(1.0 - 2.0 * _popcount_parities(N).astype(float))


def _cluster_string(N: int, j: int, span: int) -> np.ndarray:
    """Dense X_j Z_{j+1} .. Z_{j+span-1} X_{j+span}, indices mod N."""
    dim = 1 << N
    flip = (1 << (j % N)) | (1 << ((j + span) % N))
    zmask = 0
    for k in range(1, span):
        zmask |= 1 << ((j + k) % N)
    states = np.arange(dim)
    col = states ^ flip
    signs = np.ones(dim)
    if zmask:
        par = np.zeros(dim, dtype=np.int64)
        masked = states & zmask
        for k in range(N):
            par += (masked >> k) & 1
        signs = 1.0 - 2.0 * (par & 1)
    H = np.zeros((dim, dim))
    H[col, states] = signs
    return H


def build_hamiltonian(spec: ModelSpec) -> np.ndarray:
    """Dense 2^N matrix of the chain Hamiltonian (real symmetric)."""
    if spec.N > MAX_SITES:
        raise ValueError(f"dense oracle capped at N <= {MAX_SITES}, got {spec.N}")
    dim = 1 << spec.N
    cluster = np.zeros((dim, dim))
    if spec.kind == H1:
        for j in range(spec.N):
            cluster += _cluster_string(spec.N, j, spec.n + 1)
    else:
        for p in range(1, spec.n + 1):
            for j in range(spec.N):
                cluster += _cluster_string(spec.N, j, p + 1)
        cluster /= spec.n
    states = np.arange(dim)
    zsum = np.zeros(dim)
    for j in range(spec.N):
        zsum += 1.0 - 2.0 * ((states >> j) & 1)
    return -math.cos(spec.phi) * cluster + math.sin(spec.phi) * np.diag(zsum)


@dataclass
class SectorState:
    """Odd-sector density matrix together with its basis bookkeeping."""

    basis: np.ndarray      # odd-parity basis indices into the full 2^N space
    rho: np.ndarray        # density matrix on that sector


def sector_thermal_state(H: np.ndarray, beta: float) -> SectorState:
    """rho ~ exp(-beta H) on the odd sector; ground-manifold average at INFINITE.

    H is the full 2^N operator; the restriction happens here.
    """
    _check_beta(beta)
    N = H.shape[0].bit_length() - 1
    basis = odd_sector_indices(N)
    w, v = np.linalg.eigh(H[np.ix_(basis, basis)])
    if beta == INFINITE:
        sel = w <= w[0] + DEGENERACY_TOL
        pops = sel / sel.sum()
    else:
        x = np.exp(-beta * (w - w[0]))
        pops = x / x.sum()
    rho = (v * pops) @ v.conj().T
    return SectorState(basis=basis, rho=rho)


def oracle_energy(
    spec_b: ModelSpec, spec_c: ModelSpec, beta: float, tau: float
) -> float:
    """(1/N) Tr[rho_B (U† H_B U - H_B)], U = exp(-i H_C tau), odd sector."""
    _check_pair(spec_b, spec_c)
    full_b = build_hamiltonian(spec_b)
    state = sector_thermal_state(full_b, beta)
    basis = state.basis
    HB = full_b[np.ix_(basis, basis)]
    HC = build_hamiltonian(spec_c)[np.ix_(basis, basis)]
    wC, vC = np.linalg.eigh(HC)
    phases = np.exp(-1j * wC * tau)
    U = (vC * phases) @ vC.conj().T
    rho_t = U @ state.rho @ U.conj().T
    return float(np.real(np.trace((rho_t - state.rho) @ HB))) / spec_b.N


def oracle_energy_stepped(
    spec_b: ModelSpec,
    spec_c: ModelSpec,
    beta: float,
    tau: float,
    steps: int = 4096,
) -> float:
    """Same quantity via fixed-step 4th-order (RK4) propagation of rho.

    Slow; exists only to certify fixture values independently of eigh.
    """
    _check_pair(spec_b, spec_c)
    state = sector_thermal_state(build_hamiltonian(spec_b), beta)
    basis = state.basis
    HB = build_hamiltonian(spec_b)[np.ix_(basis, basis)]
    HC = build_hamiltonian(spec_c)[np.ix_(basis, basis)]
    rho0 = state.rho.astype(complex)
    h = tau / steps
    rho = rho0.copy()

    def drho(r):
        return -1j * (HC @ r - r @ HC)

    for _ in range(steps):
        k1 = drho(rho)
        k2 = drho(rho + 0.5 * h * k1)
        k3 = drho(rho + 0.5 * h * k2)
        k4 = drho(rho + h * k3)
        rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return float(np.real(np.trace((rho - rho0) @ HB))) / spec_b.N


# -- fixture persistence -------------------------------------------------------

FIXTURE_FIELDS = ("kind", "N", "n", "phi_b", "phi_c", "beta", "tau", "energy")


def write_fixture_csv(path: str | Path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FIXTURE_FIELDS)
        for row in rows:
            writer.writerow(
                [row["kind"], row["N"], row["n"]]
                + [_fmt(row[k]) for k in ("phi_b", "phi_c")]
                + ["inf" if row["beta"] == INFINITE else _fmt(row["beta"])]
                + [_fmt(row["tau"]), _fmt(row["energy"])]
            )


def load_fixture_csv(path: str | Path):
    out = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            out.append(
                {
                    "kind": rec["kind"],
                    "N": int(rec["N"]),
                    "n": int(rec["n"]),
                    "phi_b": float(rec["phi_b"]),
                    "phi_c": float(rec["phi_c"]),
                    "beta": INFINITE if rec["beta"] == "inf" else float(rec["beta"]),
                    "tau": float(rec["tau"]),
                    "energy": float(rec["energy"]),
                }
            )
    return out


def _fmt(x: float) -> str:
    return "%.17g" % x
