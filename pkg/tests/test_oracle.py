"""Dense spin-basis reference: operator structure, states, evolution, fixtures."""

import math
from pathlib import Path

import numpy as np
import pytest

from clusterqb.energetics import INFINITE, stored_energy
from clusterqb.model import H1, H2, ModelSpec, dispersion, mode_coefficients
from clusterqb.oracle import (
    MAX_SITES,
    build_hamiltonian,
    load_fixture_csv,
    odd_sector_indices,
    oracle_energy,
    oracle_energy_stepped,
    parity_operator,
    sector_thermal_state,
    write_fixture_csv,
)

FIXTURE = Path(__file__).parent / "fixtures" / "oracle_reference.csv"

CASES = [
    (H1, 6, 1, 0.3),
    (H1, 7, 2, 1.1),
    (H1, 8, 3, 0.4),
    (H2, 6, 2, 0.7),
    (H2, 8, 3, 2.0),
]


@pytest.mark.parametrize("kind,N,n,phi", CASES)
def test_hermitian_and_commutes_with_parity(kind, N, n, phi):
    H = build_hamiltonian(ModelSpec(kind, N, n, phi))
    assert np.max(np.abs(H - H.conj().T)) <= 1e-12
    p = np.diag(parity_operator(N))
    comm = H * p[None, :] - p[:, None] * H
    assert np.max(np.abs(comm)) <= 1e-12


def test_capacity_cap():
    with pytest.raises(ValueError):
        build_hamiltonian(ModelSpec(H1, MAX_SITES + 1, 2, 0.1))


def test_two_site_field_spectrum():
    H = build_hamiltonian(ModelSpec(H1, 2, 1, math.pi / 2))
    w = np.sort(np.linalg.eigvalsh(H))
    assert np.allclose(w, [-2.0, 0.0, 0.0, 2.0], atol=1e-12)


def test_h2_matrix_equals_h1_matrix_for_n1():
    a = build_hamiltonian(ModelSpec(H1, 6, 1, 0.7))
    b = build_hamiltonian(ModelSpec(H2, 6, 1, 0.7))
    assert np.array_equal(a, b)


@pytest.mark.parametrize("kind,N,n,phi", [(H1, 8, 2, 0.0), (H1, 8, 2, 0.4), (H2, 8, 3, 0.9)])
def test_odd_sector_spectrum_from_mode_construction(kind, N, n, phi):
    # enumerate the free-fermion many-body spectrum with the parity constraint
    # and match it against the dense odd-sector eigenvalues
    spec = ModelSpec(kind, N, n, phi)
    a, c = mode_coefficients(spec)
    eps = dispersion((a, c))
    selfs = [0] + ([N // 2] if N % 2 == 0 else [])
    pair_reps = range(1, (N + 1) // 2)

    levels = []  # per independent object: list of (energy, parity_sign)
    for q in selfs:
        levels.append([(-a[q] / 2.0, 1), (a[q] / 2.0, -1)])
    for q in pair_reps:
        levels.append([(-eps[q], 1), (0.0, -1), (0.0, -1), (eps[q], 1)])

    spectra = [(0.0, 1)]
    for obj in levels:
        spectra = [(e + de, p * dp) for e, p in spectra for de, dp in obj]
    odd = np.sort([e for e, p in spectra if p == -1])

    basis = odd_sector_indices(N)
    H = build_hamiltonian(spec)[np.ix_(basis, basis)]
    w = np.sort(np.linalg.eigvalsh(H))
    assert odd.shape == w.shape
    assert np.max(np.abs(odd - w)) <= 1e-10


def test_odd_sector_ground_energy_pure_cluster():
    # all quasiparticle gaps equal 2 at phi=0; the parity constraint forces the
    # occupied self mode, giving -(N/2 - 1)*2 - 2 = -8 for N=8
    basis = odd_sector_indices(8)
    H = build_hamiltonian(ModelSpec(H1, 8, 2, 0.0))[np.ix_(basis, basis)]
    assert np.min(np.linalg.eigvalsh(H)) == pytest.approx(-8.0, abs=1e-10)


def test_sector_state_beta_zero_is_maximally_mixed():
    H = build_hamiltonian(ModelSpec(H2, 6, 2, 0.8))
    state = sector_thermal_state(H, 0.0)
    dim = len(state.basis)
    assert dim == 2 ** (6 - 1)
    assert np.allclose(state.rho, np.eye(dim) / dim, atol=1e-12)


def test_sector_state_trace_psd_and_ground_projector():
    H = build_hamiltonian(ModelSpec(H1, 8, 2, 0.4))
    for beta in (0.0, 1.0, 7.0, INFINITE):
        state = sector_thermal_state(H, beta)
        assert abs(np.trace(state.rho) - 1.0) <= 1e-12
        assert np.min(np.linalg.eigvalsh((state.rho + state.rho.conj().T) / 2)) >= -1e-10
    # generic angle: nondegenerate sector ground state -> rank-1 projector
    state = sector_thermal_state(H, INFINITE)
    pops = np.sort(np.linalg.eigvalsh(state.rho))
    assert pops[-1] == pytest.approx(1.0, abs=1e-10)
    assert abs(np.trace(state.rho @ state.rho) - 1.0) <= 1e-10


def test_sector_partition_function_identity():
    beta = 1.0
    basis = odd_sector_indices(8)
    Hs = build_hamiltonian(ModelSpec(H1, 8, 2, 0.4))[np.ix_(basis, basis)]
    w, v = np.linalg.eigh(Hs)
    ref = (v * (np.exp(-beta * w) / np.exp(-beta * w).sum())) @ v.conj().T
    state = sector_thermal_state(build_hamiltonian(ModelSpec(H1, 8, 2, 0.4)), beta)
    assert np.max(np.abs(state.rho - ref)) <= 1e-12


def test_unitarity_and_charger_energy_conservation():
    spec_b = ModelSpec(H2, 8, 2, 0.4)
    spec_c = spec_b.with_phi(1.3)
    state = sector_thermal_state(build_hamiltonian(spec_b), 1.0)
    basis = state.basis
    HC = build_hamiltonian(spec_c)[np.ix_(basis, basis)]
    wC, vC = np.linalg.eigh(HC)
    U = (vC * np.exp(-1j * wC * 1.7)) @ vC.conj().T
    assert np.max(np.abs(U.conj().T @ U - np.eye(len(basis)))) <= 1e-10
    before = np.trace(state.rho @ HC)
    after = np.trace(U @ state.rho @ U.conj().T @ HC)
    assert abs(after - before) <= 1e-10


def test_oracle_trivial_zeros():
    spec = ModelSpec(H1, 6, 2, 0.5)
    assert abs(oracle_energy(spec, spec.with_phi(0.5), 1.0, 1.3)) <= 1e-12
    assert abs(oracle_energy(spec, spec.with_phi(1.4), INFINITE, 0.0)) <= 1e-12


def test_stepped_propagation_agrees_with_eigendecomposition():
    b = ModelSpec(H2, 6, 2, 0.4)
    c = b.with_phi(1.1)
    e = oracle_energy(b, c, 1.0, 0.7)
    es = oracle_energy_stepped(b, c, 1.0, 0.7, steps=1024)
    assert abs(e - es) <= 1e-9


def test_fixture_regression_and_roundtrip(tmp_path):
    rows = load_fixture_csv(FIXTURE)
    assert len(rows) >= 64
    worst = 0.0
    for r in rows:
        b = ModelSpec(r["kind"], r["N"], r["n"], r["phi_b"])
        c = b.with_phi(r["phi_c"])
        worst = max(worst, abs(stored_energy(b, c, r["beta"], r["tau"]) - r["energy"]))
    assert worst <= 1e-8

    # frozen values round-trip bit-for-bit through the 17-digit CSV encoding
    out = tmp_path / "copy.csv"
    write_fixture_csv(out, rows)
    again = load_fixture_csv(out)
    assert again == rows

    # and a few of them re-derive from scratch
    for r in rows[::17]:
        b = ModelSpec(r["kind"], r["N"], r["n"], r["phi_b"])
        c = b.with_phi(r["phi_c"])
        assert abs(oracle_energy(b, c, r["beta"], r["tau"]) - r["energy"]) <= 1e-12
