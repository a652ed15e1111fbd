"""Structure computations for matrix *-algebras.

An algebra is carried as an orthonormal (Hilbert-Schmidt) spanning set of
matrices inside an ambient M_n.  Generation from a hermitian spanning set,
commutants, and GNS representations of states are all phrased as dense
linear algebra on the coefficient space; rank decisions share one relative
eigenvalue threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, NumericalFailureError
from .hermitian import eigh_coefficient_space, hermitian, hermitian_part

MAX_AMBIENT = 16
RANK_TOL = 1e-9
CLOSURE_TOL = 1e-8


def _as_matrix(M, n=None):
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError("expected a square matrix")
    if n is not None and A.shape[0] != n:
        raise InputError(f"expected dimension {n}, got {A.shape[0]}")
    return A


def orthonormalize(mats, tol: float = RANK_TOL):
    """Modified Gram-Schmidt over the HS inner product; drops dependent inputs.

    Inputs that are already orthonormal are returned unchanged, which keeps
    caller-chosen basis orderings stable.
    """
    out = []
    for M in mats:
        v = np.asarray(M, dtype=complex).copy()
        norm0 = np.linalg.norm(v)
        if norm0 == 0.0:
            continue
        for b in out:
            v -= np.vdot(b, v) * b
        # second pass for numerical orthogonality
        for b in out:
            v -= np.vdot(b, v) * b
        norm = np.linalg.norm(v)
        if norm > np.sqrt(tol) * max(norm0, 1.0):
            out.append(v / norm)
    return out


def span_coefficients(basis, X):
    """Coefficients of X over an orthonormal basis plus the residual norm."""
    X = np.asarray(X, dtype=complex)
    coeffs = np.array([np.vdot(b, X) for b in basis])
    proj = sum(c * b for c, b in zip(coeffs, basis)) if basis else np.zeros_like(X)
    return coeffs, float(np.linalg.norm(X - proj))


@dataclass
class OperatorSubspace:
    """Self-adjoint subspace given by a hermitian basis inside M_n.

    The basis must be linearly independent over the reals; when `unital` the
    identity must be reconstructible from it.
    """

    ambient_dim: int
    basis: list
    unital: bool = True

    def __post_init__(self):
        n = self.ambient_dim
        if not self.basis:
            raise InputError("subspace needs at least one basis element")
        self.basis = [hermitian(_as_matrix(b, n)) for b in self.basis]
        k = len(self.basis)
        gram = np.empty((k, k))
        for i in range(k):
            for j in range(i, k):
                gram[i, j] = gram[j, i] = float(np.vdot(self.basis[i], self.basis[j]).real)
        ev = eigh_coefficient_space(gram.astype(complex)).eigenvalues
        if ev[0] <= RANK_TOL * max(float(ev[-1]), 1.0):
            raise InputError("subspace basis is not linearly independent")
        self._gram = gram
        if self.unital:
            coeffs, resid = self.coefficients_of(np.eye(n), tol=None)
            if resid > 1e-9 * (1.0 + np.sqrt(n)):
                raise InputError("unital flag set but identity is not in the span")
            self._identity_coefficients = coeffs
        else:
            self._identity_coefficients = None

    @property
    def dim(self) -> int:
        return len(self.basis)

    def coefficients_of(self, X, tol: float | None = 1e-7):
        """Real coefficients of a hermitian X over the basis; residual checked."""
        X = hermitian(_as_matrix(X, self.ambient_dim))
        rhs = np.array([float(np.vdot(b, X).real) for b in self.basis])
        coeffs = np.linalg.solve(self._gram, rhs)
        recon = sum(c * b for c, b in zip(coeffs, self.basis))
        resid = float(np.linalg.norm(X - recon))
        if tol is not None and resid > tol * (1.0 + np.linalg.norm(X)):
            raise InputError(f"matrix is not in the subspace (residual {resid:.3e})")
        return coeffs, resid

    def element(self, coeffs) -> np.ndarray:
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (len(self.basis),):
            raise InputError("coefficient vector has the wrong length")
        return hermitian_part(sum(c * b for c, b in zip(coeffs, self.basis)))

    def identity_coefficients(self) -> np.ndarray:
        if self._identity_coefficients is None:
            raise InputError("subspace is not unital")
        return self._identity_coefficients


@dataclass
class MatrixStarAlgebra:
    """A *-closed span with an orthonormal basis; products stay inside."""

    ambient_dim: int
    basis: list
    contains_identity: bool
    _full: bool = field(default=False, repr=False)
    _herm_basis: list | None = field(default=None, repr=False)

    @staticmethod
    def from_basis(mats, ambient_dim=None, check_closure=True) -> "MatrixStarAlgebra":
        mats = [_as_matrix(M, ambient_dim) for M in mats]
        if not mats:
            raise InputError("algebra needs at least one spanning matrix")
        n = mats[0].shape[0]
        for M in mats:
            if M.shape[0] != n:
                raise InputError("spanning matrices disagree on dimension")
        basis = orthonormalize(mats)
        alg = MatrixStarAlgebra(
            ambient_dim=n,
            basis=basis,
            contains_identity=_identity_in_span(basis, n),
        )
        if check_closure:
            alg.verify_closure()
        return alg

    @staticmethod
    def full(n: int) -> "MatrixStarAlgebra":
        basis = []
        for i in range(n):
            for j in range(n):
                E = np.zeros((n, n), dtype=complex)
                E[i, j] = 1.0
                basis.append(E)
        return MatrixStarAlgebra(ambient_dim=n, basis=basis, contains_identity=True, _full=True)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def project(self, X) -> np.ndarray:
        """HS-orthogonal projection onto the span.

        For a *-closed unital span this is the trace-preserving conditional
        expectation, so densities project to densities.
        """
        X = _as_matrix(X, self.ambient_dim)
        coeffs, _ = span_coefficients(self.basis, X)
        proj = sum(c * b for c, b in zip(coeffs, self.basis))
        if np.linalg.norm(X - X.conj().T) <= 1e-12 * (1 + np.linalg.norm(X)):
            proj = hermitian_part(proj)
        return proj

    def membership_residual(self, X) -> float:
        _, resid = span_coefficients(self.basis, _as_matrix(X, self.ambient_dim))
        return resid

    def contains(self, X, tol: float = 1e-8) -> bool:
        return self.membership_residual(X) <= tol * (1.0 + float(np.linalg.norm(X)))

    def verify_closure(self, tol: float = CLOSURE_TOL) -> None:
        for i, a in enumerate(self.basis):
            if self.membership_residual(a.conj().T) > tol:
                raise InputError(f"span is not adjoint-closed at basis element {i}")
            for b in self.basis:
                if self.membership_residual(a @ b) > tol:
                    raise InputError("span is not closed under multiplication")

    def hermitian_basis(self) -> list:
        """Hermitian basis of the self-adjoint part (real dimension = dim).

        Full algebras use the standard elements E_ii, E_ij + E_ji,
        i(E_ij - E_ji) in a fixed readable order; general algebras get a
        Gram-Schmidt basis derived from the stored one.
        """
        if self._herm_basis is not None:
            return self._herm_basis
        n = self.ambient_dim
        if self._full:
            out = []
            for i in range(n):
                E = np.zeros((n, n), dtype=complex)
                E[i, i] = 1.0
                out.append(E)
            for i in range(n):
                for j in range(i + 1, n):
                    X = np.zeros((n, n), dtype=complex)
                    X[i, j] = X[j, i] = 1.0
                    out.append(X)
                    Y = np.zeros((n, n), dtype=complex)
                    Y[i, j] = 1.0j
                    Y[j, i] = -1.0j
                    out.append(Y)
        else:
            cands = []
            for b in self.basis:
                cands.append(hermitian_part(b))
                cands.append(hermitian_part(-1.0j * b))
            out = []
            for h in cands:
                v = h.copy()
                for prev in out:
                    v -= np.vdot(prev, v).real * prev
                for prev in out:
                    v -= np.vdot(prev, v).real * prev
                norm = np.linalg.norm(v)
                if norm > 1e-8 * (1.0 + np.linalg.norm(h)):
                    out.append(hermitian_part(v / norm))
            if len(out) != self.dim:
                raise NumericalFailureError(
                    f"hermitian basis has size {len(out)}, expected {self.dim}"
                )
        self._herm_basis = out
        return out

    def riesz_density(self, values) -> np.ndarray:
        """The unique element D of the algebra with tr(h D) = value for every
        hermitian basis element h."""
        hb = self.hermitian_basis()
        values = np.asarray(values, dtype=float)
        if values.shape != (len(hb),):
            raise InputError("value vector does not match the hermitian basis")
        gram = np.empty((len(hb), len(hb)))
        for i in range(len(hb)):
            for j in range(i, len(hb)):
                gram[i, j] = gram[j, i] = float(np.vdot(hb[i], hb[j]).real)
        coeffs = np.linalg.solve(gram, values)
        return hermitian_part(sum(c * h for c, h in zip(coeffs, hb)))

    def subspace(self) -> OperatorSubspace:
        """The algebra viewed as an operator subspace via its hermitian basis."""
        return OperatorSubspace(
            ambient_dim=self.ambient_dim,
            basis=self.hermitian_basis(),
            unital=self.contains_identity,
        )


def _identity_in_span(basis, n) -> bool:
    _, resid = span_coefficients(basis, np.eye(n, dtype=complex))
    return resid <= 1e-9 * (1.0 + np.sqrt(n))


def same_span(A: MatrixStarAlgebra, B: MatrixStarAlgebra, tol: float = 1e-8) -> bool:
    if A.ambient_dim != B.ambient_dim or A.dim != B.dim:
        return False
    return all(B.membership_residual(a) <= tol for a in A.basis) and all(
        A.membership_residual(b) <= tol for b in B.basis
    )


def generate_algebra(gen: OperatorSubspace) -> MatrixStarAlgebra:
    """Smallest *-algebra span containing the generators (and I when unital).

    Iterates pairwise products until the span stabilizes; the span of
    hermitian generators is adjoint-closed at every stage, so products alone
    suffice.
    """
    n = gen.ambient_dim
    if n > MAX_AMBIENT:
        raise InputError(f"ambient dimension {n} exceeds {MAX_AMBIENT} for algebra generation")
    seed = list(gen.basis)
    if gen.unital:
        seed.append(np.eye(n, dtype=complex))
    basis = orthonormalize(seed)
    max_dim = n * n
    for _ in range(max_dim + 2):
        if len(basis) >= max_dim:
            break
        products = [a @ b for a in basis for b in basis]
        extended = orthonormalize(list(basis) + products)
        if len(extended) == len(basis):
            break
        basis = extended
    return MatrixStarAlgebra(
        ambient_dim=n,
        basis=basis,
        contains_identity=_identity_in_span(basis, n),
        _full=(len(basis) == max_dim),
    )


def commutant(algebra: MatrixStarAlgebra) -> MatrixStarAlgebra:
    """All X with XB = BX for every basis element B, via one kernel problem."""
    n = algebra.ambient_dim
    if n > MAX_AMBIENT:
        raise InputError(f"ambient dimension {n} exceeds {MAX_AMBIENT} for commutants")
    eye = np.eye(n, dtype=complex)
    K = np.zeros((n * n, n * n), dtype=complex)
    for B in algebra.basis:
        # row-major vec: vec(XB - BX) = (I (x) B^T - B (x) I) vec(X)
        C = np.kron(eye, B.T) - np.kron(B, eye)
        C /= max(float(np.linalg.norm(B)), 1.0)
        K += C.conj().T @ C
    dec = eigh_coefficient_space(hermitian_part(K))
    lam_max = max(float(dec.eigenvalues[-1]), 1.0)
    kernel = [
        dec.eigenvectors[:, i].reshape(n, n)
        for i in range(n * n)
        if dec.eigenvalues[i] <= RANK_TOL * lam_max
    ]
    if not kernel:
        raise NumericalFailureError("commutant kernel came out empty (identity must commute)")
    return MatrixStarAlgebra(
        ambient_dim=n,
        basis=orthonormalize(kernel),
        contains_identity=True,
        _full=(len(kernel) == n * n),
    )


@dataclass
class GnsData:
    """Cyclic representation of a state: images of the algebra basis on the
    quotient space, the cyclic vector, and the Gram matrix that built it."""

    rep_dim: int
    images: list
    cyclic_vector: np.ndarray
    gram: np.ndarray
    algebra: MatrixStarAlgebra

    def image_algebra(self) -> MatrixStarAlgebra:
        return MatrixStarAlgebra.from_basis(
            self.images, ambient_dim=self.rep_dim, check_closure=False
        )


def _evaluate(phi, M):
    if callable(phi):
        return complex(phi(M))
    density = np.asarray(phi, dtype=complex)
    return complex(np.trace(M @ density))


def gns(phi, algebra: MatrixStarAlgebra) -> GnsData:
    """GNS construction of a state given by a callable or a density matrix.

    The representation space is the column space of the Gram matrix
    G[i, j] = phi(b_i* b_j) at the shared rank threshold; a non-positive G
    (beyond tolerance) means phi is not a state on the algebra.
    """
    if not algebra.contains_identity:
        raise InputError("GNS needs a unital algebra")
    basis = algebra.basis
    k = len(basis)
    G = np.empty((k, k), dtype=complex)
    for i in range(k):
        for j in range(k):
            G[i, j] = _evaluate(phi, basis[i].conj().T @ basis[j])
    G = hermitian_part(G)
    dec = eigh_coefficient_space(G)
    lam_max = max(float(dec.eigenvalues[-1]), 0.0)
    if dec.eigenvalues[0] < -1e-8 * (1.0 + lam_max):
        raise InputError("functional is not positive on the algebra")
    keep = dec.eigenvalues > RANK_TOL * max(lam_max, 1e-300)
    r = int(np.sum(keep))
    if r == 0:
        raise InputError("functional vanishes on the algebra")
    U = dec.eigenvectors[:, keep]
    roots = np.sqrt(dec.eigenvalues[keep])
    E = (U * roots).conj().T          # r x k, E+ E = compressed Gram
    pinv = U / roots                  # k x r

    # coefficient matrices: C_a[l, j] = coefficient of b_l in a @ b_j
    images = []
    coeff_mats = []
    for a in basis:
        C = np.empty((k, k), dtype=complex)
        for j in range(k):
            prod = a @ basis[j]
            for l in range(k):
                C[l, j] = np.vdot(basis[l], prod)
        coeff_mats.append(C)
        images.append(E @ C @ pinv)

    eye_coeffs, resid = span_coefficients(basis, np.eye(algebra.ambient_dim, dtype=complex))
    cyclic = E @ eye_coeffs

    _verify_gns(phi, algebra, images, coeff_mats, cyclic, r)
    return GnsData(rep_dim=r, images=images, cyclic_vector=cyclic, gram=G, algebra=algebra)


def _verify_gns(phi, algebra, images, coeff_mats, cyclic, r, tol: float = 1e-8):
    basis = algebra.basis
    k = len(basis)
    scale = 1.0 + max(float(np.linalg.norm(im)) for im in images)
    # multiplicativity: rho(b_i) rho(b_j) = sum_l C_i[l, j] rho(b_l)
    for i in range(k):
        Ci = coeff_mats[i]
        for j in range(k):
            lhs = images[i] @ images[j]
            rhs = sum(Ci[l, j] * images[l] for l in range(k))
            if np.linalg.norm(lhs - rhs) > tol * scale * scale:
                raise NumericalFailureError("GNS representation is not multiplicative")
    # *-preservation
    for i in range(k):
        coeffs, resid = span_coefficients(basis, basis[i].conj().T)
        if resid > tol:
            raise NumericalFailureError("algebra basis is not adjoint-closed")
        rhs = sum(c * im for c, im in zip(coeffs, images))
        if np.linalg.norm(images[i].conj().T - rhs) > tol * scale:
            raise NumericalFailureError("GNS representation does not preserve adjoints")
    # vector state reproduces phi
    for i in range(k):
        val = complex(np.vdot(cyclic, images[i] @ cyclic))
        if abs(val - _evaluate(phi, basis[i])) > tol * scale:
            raise NumericalFailureError("GNS cyclic vector does not reproduce the state")
    # cyclicity
    orbit = np.stack([im @ cyclic for im in images], axis=1)
    sv = np.linalg.svd(orbit, compute_uv=False)
    if int(np.sum(sv > RANK_TOL * max(float(sv[0]), 1e-300))) < r:
        raise NumericalFailureError("GNS cyclic vector is not cyclic")
