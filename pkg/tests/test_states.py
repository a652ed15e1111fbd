"""State extension intervals, UEP, purity, decomposition."""

from __future__ import annotations

import numpy as np
import pytest

from opsyslab.algebra import MatrixStarAlgebra, OperatorSubspace
from opsyslab.errors import InputError
from opsyslab.states import (
    StateFunctional,
    extension_interval,
    find_pure_majorizing_state,
    has_uep,
    is_pure,
    pure_decomposition,
    vector_state,
    verify_state_on_subspace,
)


def E(n, i, j):
    M = np.zeros((n, n), dtype=complex)
    M[i, j] = 1.0
    return M


def offdiag_system(n=2) -> OperatorSubspace:
    X = E(n, 0, 1) + E(n, 1, 0)
    Y = 1j * E(n, 0, 1) - 1j * E(n, 1, 0)
    return OperatorSubspace(ambient_dim=n, basis=[np.eye(n), X, Y], unital=True)


def random_density(rng, n):
    raw = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    d = raw @ raw.conj().T
    return d / np.trace(d).real


def m2_plus_c() -> MatrixStarAlgebra:
    """(M2 + 0) + C I inside M3; equals M2 (+) C as a subalgebra."""
    mats = [E(3, i, j) for i in range(2) for j in range(2)] + [E(3, 2, 2)]
    return MatrixStarAlgebra.from_basis(mats)


# ---------------------------------------------------------------- statehood


def test_verify_state_offdiag_functional():
    S = offdiag_system()
    assert verify_state_on_subspace([1.0, 0.0, 0.0], S)


def test_verify_state_rejects_non_unital_value():
    S = offdiag_system()
    assert not verify_state_on_subspace([2.0, 0.0, 0.0], S)


def test_verify_state_restriction_of_state():
    rng = np.random.default_rng(41)
    S = offdiag_system()
    for _ in range(5):
        phi = StateFunctional(density=random_density(rng, 2), domain=S)
        assert verify_state_on_subspace(phi.values_on(S.basis), S)


def test_verify_state_negative_functional():
    # values forcing negativity on a positive element of the span
    S = OperatorSubspace(ambient_dim=2, basis=[np.eye(2), np.diag([1.0, -1.0])], unital=True)
    assert not verify_state_on_subspace([1.0, 2.0], S)  # value 3 at diag(1,0)? -1 at diag(0,1)


# ------------------------------------------------------- extension intervals


def brute_force_offdiag_endpoint() -> tuple:
    # oracle for inf{c0 : c0 I + u X + v Y >= E11} via the 2x2 PSD closed
    # form det >= 0 & trace >= 0 on a grid, refined in c0.
    def feasible(c0, u, v):
        m = np.array([[c0 - 1.0, u + 1j * v], [u - 1j * v, c0]])
        tr = m[0, 0].real + m[1, 1].real
        det = (m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]).real
        return m[0, 0].real >= -1e-12 and tr >= -1e-12 and det >= -1e-12

    best_hi = None
    for c0 in np.linspace(0.0, 3.0, 601):
        if any(feasible(c0, u, v) for u in np.linspace(-1, 1, 41) for v in np.linspace(-1, 1, 41)):
            best_hi = c0
            break
    return best_hi


def chi_state(k: int) -> StateFunctional:
    return vector_state(np.eye(2)[k], MatrixStarAlgebra.full(2))


def test_extension_interval_offdiag_e11():
    S = offdiag_system()
    full = MatrixStarAlgebra.full(2)
    phi = chi_state(0).restrict(S)
    interval = extension_interval(phi, E(2, 0, 0), full)
    assert interval.min == pytest.approx(0.0, abs=1e-6)
    assert interval.max == pytest.approx(1.0, abs=1e-6)
    # cross-check the upper endpoint against the grid oracle
    assert brute_force_offdiag_endpoint() == pytest.approx(1.0, abs=6e-3)
    # witnesses attain and extend
    w_lo, w_hi = interval.witnesses
    assert w_lo.expect(E(2, 0, 0)) == pytest.approx(0.0, abs=1e-6)
    assert w_hi.expect(E(2, 0, 0)) == pytest.approx(1.0, abs=1e-6)


def test_extension_interval_degenerate_inside_span():
    S = offdiag_system()
    full = MatrixStarAlgebra.full(2)
    rng = np.random.default_rng(43)
    phi = StateFunctional(density=random_density(rng, 2), domain=S)
    t = S.element([0.3, -0.2, 0.5])
    interval = extension_interval(phi, t, full)
    assert interval.length == pytest.approx(0.0, abs=2e-6)
    assert interval.min == pytest.approx(phi.expect(t), abs=2e-6)


def test_extension_interval_scalar_domain():
    S = OperatorSubspace(ambient_dim=2, basis=[np.eye(2)], unital=True)
    phi = StateFunctional(density=np.eye(2) / 2, domain=S)
    interval = extension_interval(phi, np.diag([1.0, 5.0]), MatrixStarAlgebra.full(2))
    assert interval.min == pytest.approx(1.0, abs=1e-6)
    assert interval.max == pytest.approx(5.0, abs=1e-6)


def test_sandwich_property():
    # any convex combination of the two witnesses is an extension whose value
    # lies inside the interval
    S = offdiag_system()
    full = MatrixStarAlgebra.full(2)
    phi = chi_state(0).restrict(S)
    t = E(2, 0, 0)
    interval = extension_interval(phi, t, full)
    rng = np.random.default_rng(47)
    for _ in range(10):
        lam = float(rng.random())
        mix = lam * interval.witnesses[0].density + (1 - lam) * interval.witnesses[1].density
        psi = StateFunctional(density=mix, domain=full)
        assert interval.min - 1e-6 <= psi.expect(t) <= interval.max + 1e-6


# ------------------------------------------------------------------- UEP


def test_has_uep_chi1_fails_with_e11_witness():
    S = offdiag_system()
    result = has_uep(chi_state(0), S)
    assert not result.holds
    assert np.allclose(result.witness, E(2, 0, 0))
    assert result.interval.min == pytest.approx(0.0, abs=1e-6)
    assert result.interval.max == pytest.approx(1.0, abs=1e-6)


def test_has_uep_trivial_when_subspace_is_everything():
    full = MatrixStarAlgebra.full(2)
    rng = np.random.default_rng(53)
    psi = StateFunctional(density=random_density(rng, 2), domain=full)
    assert has_uep(psi, full.subspace()).holds


def block_supported_state(rng, domain) -> StateFunctional:
    d2 = random_density(rng, 2)
    density = np.zeros((3, 3), dtype=complex)
    density[:2, :2] = d2
    return StateFunctional(density=density, domain=domain)


def test_has_uep_ideal_block_states():
    full3 = MatrixStarAlgebra.full(3)
    B = m2_plus_c()
    rng = np.random.default_rng(59)
    for _ in range(3):
        psi = block_supported_state(rng, full3)
        assert has_uep(psi, B.subspace()).holds


def test_has_uep_fails_with_mass_on_summand():
    full3 = MatrixStarAlgebra.full(3)
    B = m2_plus_c()
    density = np.diag([0.3, 0.3, 0.4]).astype(complex)
    result = has_uep(StateFunctional(density=density, domain=full3), B.subspace())
    assert not result.holds
    assert result.interval.length > 1e-3


# ------------------------------------------------------------------ purity


def test_vector_state_pure_on_full():
    full = MatrixStarAlgebra.full(2)
    omega = vector_state([1 / np.sqrt(2), 1 / np.sqrt(2)], full)
    assert is_pure(omega, full)


def test_restriction_to_diagonal_not_pure():
    diag = MatrixStarAlgebra.from_basis([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
    omega = vector_state([1 / np.sqrt(2), 1 / np.sqrt(2)], diag)
    assert not is_pure(omega, diag)


def test_trace_not_pure():
    full = MatrixStarAlgebra.full(2)
    tau = StateFunctional(density=np.eye(2) / 2, domain=full)
    assert not is_pure(tau, full)


def test_purity_matches_rank_on_full_algebra():
    rng = np.random.default_rng(61)
    full = MatrixStarAlgebra.full(3)
    for _ in range(4):
        xi = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        pure = vector_state(xi, full)
        assert is_pure(pure, full)
        mixed = StateFunctional(density=random_density(rng, 3), domain=full)
        rank = int(np.sum(np.linalg.eigvalsh(mixed.density) > 1e-9))
        assert is_pure(mixed, full) == (rank == 1)


# ------------------------------------------------------------ decomposition


def test_pure_decomposition_single_atom():
    full = MatrixStarAlgebra.full(2)
    omega = vector_state([0.6, 0.8], full)
    dec = pure_decomposition(omega, full)
    assert len(dec.atoms) == 1
    assert dec.atoms[0][0] == pytest.approx(1.0, abs=1e-9)


def test_pure_decomposition_trace_on_m2():
    full = MatrixStarAlgebra.full(2)
    tau = StateFunctional(density=np.eye(2) / 2, domain=full)
    dec = pure_decomposition(tau, full)
    assert sorted(w for w, _ in dec.atoms) == pytest.approx([0.5, 0.5], abs=1e-9)
    for _, atom in dec.atoms:
        assert is_pure(atom, full)
    assert np.allclose(dec.mixture_density(), np.eye(2) / 2, atol=1e-8)


def test_pure_decomposition_restricted_vector_state():
    gamma = np.array([0.6, 0.8])
    diag = MatrixStarAlgebra.from_basis([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
    omega = vector_state(gamma, diag)
    dec = pure_decomposition(omega, diag)
    weights = sorted(w for w, _ in dec.atoms)
    assert weights == pytest.approx(sorted([0.36, 0.64]), abs=1e-9)
    # atoms are the two characters
    densities = sorted(float(atom.density[0, 0].real) for _, atom in dec.atoms)
    assert densities == pytest.approx([0.0, 1.0], abs=1e-8)


def test_pure_decomposition_block_algebra():
    rng = np.random.default_rng(67)
    B = m2_plus_c()
    psi = StateFunctional(density=np.diag([0.2, 0.3, 0.5]).astype(complex), domain=B)
    dec = pure_decomposition(psi, B)
    assert abs(sum(w for w, _ in dec.atoms) - 1.0) < 1e-9
    for _, atom in dec.atoms:
        assert is_pure(atom, B)


# ------------------------------------------------- pure majorizing states


def test_majorizing_state_trace_on_m2():
    full = MatrixStarAlgebra.full(2)
    tau = StateFunctional(density=np.eye(2) / 2, domain=full)
    a = np.diag([1.0, -1.0])
    psi = find_pure_majorizing_state(tau, a, full)
    assert abs(psi.expect(a)) >= abs(tau.expect(a)) - 1e-6
    assert abs(psi.expect(a)) == pytest.approx(1.0, abs=1e-6)


def test_majorizing_state_three_term_mixture_on_m4():
    rng = np.random.default_rng(71)
    full = MatrixStarAlgebra.full(4)
    raw = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
    q, _ = np.linalg.qr(raw)
    t = np.array([0.5, 0.3, 0.2])
    density = sum(t[k] * np.outer(q[:, k], q[:, k].conj()) for k in range(3))
    theta = StateFunctional(density=density, domain=full)
    raw_a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    a = (raw_a + raw_a.conj().T) / 2
    psi = find_pure_majorizing_state(theta, a, full)
    assert abs(psi.expect(a)) >= abs(theta.expect(a)) - 1e-6
    # oracle: best atom value from the density's own spectral decomposition
    lam, vecs = np.linalg.eigh(density)
    best = max(
        abs(np.vdot(vecs[:, k], a @ vecs[:, k]).real) for k in range(4) if lam[k] > 1e-9
    )
    assert abs(psi.expect(a)) == pytest.approx(best, abs=1e-5)


def test_atom_inheritance_block_states():
    full3 = MatrixStarAlgebra.full(3)
    B = m2_plus_c()
    rng = np.random.default_rng(73)
    for _ in range(3):
        chi1 = block_supported_state(rng, full3)
        chi2 = block_supported_state(rng, full3)
        w = 0.25 + 0.5 * float(rng.random())
        combo = StateFunctional(density=w * chi1.density + (1 - w) * chi2.density, domain=full3)
        assert has_uep(combo, B.subspace()).holds
        assert has_uep(chi1, B.subspace()).holds
        assert has_uep(chi2, B.subspace()).holds


def test_pure_restriction_transfer():
    # pure state with UEP w.r.t. a subalgebra restricts to a pure state
    full3 = MatrixStarAlgebra.full(3)
    B = m2_plus_c()
    rng = np.random.default_rng(79)
    for _ in range(3):
        eta = np.zeros(3, dtype=complex)
        eta[:2] = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        chi = vector_state(eta, full3)
        assert is_pure(chi, full3)
        assert has_uep(chi, B.subspace()).holds
        assert is_pure(chi.restrict(B), B)


def test_state_validation():
    full = MatrixStarAlgebra.full(2)
    with pytest.raises(InputError):
        StateFunctional(density=np.diag([1.5, -0.5]), domain=full)
    with pytest.raises(InputError):
        StateFunctional(density=np.diag([0.7, 0.7]), domain=full)
