"""Dense complex hermitian linear algebra.

The eigensolver is a cyclic Jacobi iteration run on the 2n x 2n real
symmetric embedding

    [[X, -Y], [Y, X]]      where  A = X + iY,  X = X^T,  Y = -Y^T.

Every eigenvalue of A appears twice in the embedding and each complex
eigenvector corresponds to a two-real-dimensional invariant plane, so the
complex decomposition is recovered by pairing eigenvalues and extracting one
complex direction per pair.  Jacobi is slower than Householder methods but is
deterministic, simple, and fully accurate at the dimensions this package
works with (<= 64).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericalFailureError

MAX_DIM = 64

# Hermitian deviation accepted at construction; larger deviations are user
# errors, smaller ones are absorbed by symmetrization.
HERMITIAN_REJECT = 1e-8

# Relative tolerance of the default PSD decision.
PSD_TOL = 1e-9

_RECONSTRUCT_TOL = 1e-10


def hermitian(entries) -> np.ndarray:
    """Build a hermitian matrix from array-like data.

    Applies the symmetrization (A + A*)/2 and rejects inputs whose
    anti-hermitian part exceeds HERMITIAN_REJECT relative to the entry scale,
    so file-format rounding is absorbed without masking genuine errors.
    """
    A = np.asarray(entries, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise InputError(f"expected a nonempty square matrix, got shape {A.shape}")
    if A.shape[0] > MAX_DIM:
        raise InputError(f"dimension {A.shape[0]} exceeds the supported maximum {MAX_DIM}")
    if not np.all(np.isfinite(A.real)) or not np.all(np.isfinite(A.imag)):
        raise InputError("matrix entries must be finite (no NaN/Inf)")
    scale = 1.0 + float(np.max(np.abs(A)))
    dev = float(np.max(np.abs(A - A.conj().T)))
    if dev > HERMITIAN_REJECT * scale:
        raise InputError(f"matrix is not hermitian: max |A - A*| = {dev:.3e}")
    H = (A + A.conj().T) / 2.0
    H.setflags(write=False)
    return H


def hermitian_part(A) -> np.ndarray:
    """(A + A*)/2 without any rejection check."""
    A = np.asarray(A, dtype=complex)
    return (A + A.conj().T) / 2.0


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues sorted ascending and a unitary matrix of column eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _round_robin_pairs(m: int):
    """Tournament schedule: m-1 rounds of m/2 disjoint index pairs covering all pairs."""
    idx = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = []
        for i in range(m // 2):
            a, b = idx[i], idx[m - 1 - i]
            pairs.append((a, b) if a < b else (b, a))
        rounds.append((np.array([p for p, _ in pairs]), np.array([q for _, q in pairs])))
        idx = [idx[0]] + [idx[-1]] + idx[1:-1]
    return rounds


def _jacobi_real_symmetric(E: np.ndarray, max_sweeps: int = 60):
    """Cyclic Jacobi with a fixed tournament pivot ordering; returns (lam, V).

    Rotations inside one round act on disjoint index pairs, so they commute
    exactly and their product is applied as a single orthogonal similarity.
    Pivots below 1e-14 * ||E||_F are skipped: the off-diagonal mass they
    leave is orders below the 1e-10 reconstruction bound.
    """
    n = E.shape[0]
    A = E.copy()
    V = np.eye(n)
    if n == 1:
        return np.diag(A).copy(), V
    fro = float(np.sqrt(np.sum(A * A))) or 1.0
    stop = 1e-12 * fro
    skip = 1e-14 * fro
    diag_mask = ~np.eye(n, dtype=bool)
    rounds = _round_robin_pairs(n)
    for sweep in range(max_sweeps):
        off = float(np.linalg.norm(A[diag_mask]))
        if off <= stop:
            break
        # Skip small pivots during the first sweeps (Numerical Recipes schedule).
        thresh = max(0.2 * off / n if sweep < 3 else 0.0, skip)
        for ps, qs in rounds:
            apq = A[ps, qs]
            act = np.abs(apq) > thresh
            if not np.any(act):
                continue
            ps_a = ps[act]
            qs_a = qs[act]
            apq = apq[act]
            app = A[ps_a, ps_a]
            aqq = A[qs_a, qs_a]
            theta = (aqq - app) / (2.0 * apq)
            big = np.abs(theta) > 1e150
            t = np.where(
                big,
                1.0 / (2.0 * np.where(big, theta, 1.0)),
                np.where(np.signbit(theta), -1.0, 1.0)
                / (np.abs(theta) + np.sqrt(theta * theta + 1.0)),
            )
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            # Q = I except Q[p,p]=Q[q,q]=c, Q[p,q]=s, Q[q,p]=-s per active pair.
            Q = np.eye(n)
            Q[ps_a, ps_a] = c
            Q[qs_a, qs_a] = c
            Q[ps_a, qs_a] = s
            Q[qs_a, ps_a] = -s
            A = Q.T @ A @ Q
            V = V @ Q
            # Restore the exact pivot identities of the two-sided rotation.
            A[ps_a, ps_a] = app - t * apq
            A[qs_a, qs_a] = aqq + t * apq
            A[ps_a, qs_a] = 0.0
            A[qs_a, ps_a] = 0.0
            A = (A + A.T) / 2.0
    else:
        raise NumericalFailureError("Jacobi iteration did not converge")
    lam = np.diag(A).copy()
    order = np.argsort(lam, kind="stable")
    return lam[order], V[:, order]


def _extract_complex_pairs(lam2: np.ndarray, W: np.ndarray, n: int, scale: float):
    """Collapse the doubled real spectrum back to n complex eigenpairs.

    Eigenvalues are clustered by gaps; within a cluster of real dimension 2m
    the complex directions are picked greedily by largest residual, which
    keeps every normalization well conditioned.
    """
    gap = 1e-12 * (1.0 + scale)
    eigenvalues = np.empty(n)
    Q = np.empty((n, n), dtype=complex)
    filled = 0
    start = 0
    while start < 2 * n:
        end = start + 1
        while end < 2 * n and lam2[end] - lam2[end - 1] <= gap:
            end += 1
        size = end - start
        if size % 2 != 0:
            raise NumericalFailureError("embedded spectrum failed to pair up")
        m = size // 2
        cand = W[:n, start:end] + 1j * W[n:, start:end]
        # Project out everything accepted so far, across clusters too: nearly
        # degenerate clusters can leak into each other at the working
        # precision, and global orthonormality is what the contract promises.
        if filled:
            P = Q[:, :filled]
            cand = cand - P @ (P.conj().T @ cand)
        picked = []
        for _ in range(m):
            if picked:
                P = np.stack(picked, axis=1)
                resid = cand - P @ (P.conj().T @ cand)
            else:
                resid = cand
            norms = np.linalg.norm(resid, axis=0)
            j = int(np.argmax(norms))
            if norms[j] < 1e-6:
                raise NumericalFailureError("eigenvector extraction lost rank")
            vec = resid[:, j] / norms[j]
            if filled:
                P = Q[:, :filled]
                vec = vec - P @ (P.conj().T @ vec)
                vec = vec / np.linalg.norm(vec)
            picked.append(vec)
        pair_avg = (lam2[start:end:2] + lam2[start + 1:end:2]) / 2.0
        for k in range(m):
            eigenvalues[filled + k] = pair_avg[k]
            Q[:, filled + k] = picked[k]
        filled += m
        start = end
    if filled != n:
        raise NumericalFailureError("eigenvector extraction produced wrong count")
    return eigenvalues, Q


def eigh(A) -> EigenDecomposition:
    """Eigendecomposition of a hermitian matrix; deterministic for equal input.

    Raises NumericalFailureError if the reconstruction Q L Q* or the
    unitarity Q*Q = I fails its 1e-10 bound, rather than returning silently
    degraded output.
    """
    return _eigh_checked(hermitian(A))


def eigh_coefficient_space(A) -> EigenDecomposition:
    """Same solver without the ambient dimension cap.

    Internal coefficient-space problems (Gram matrices, commutation kernels)
    legitimately exceed the 64-dimensional cap that applies to ambient
    operators; they are still bounded by 256 = 16^2.
    """
    A = np.asarray(A, dtype=complex)
    if A.shape[0] > 256:
        raise InputError(f"coefficient-space dimension {A.shape[0]} exceeds 256")
    scale = 1.0 + float(np.max(np.abs(A))) if A.size else 1.0
    dev = float(np.max(np.abs(A - A.conj().T)))
    if dev > HERMITIAN_REJECT * scale:
        raise InputError(f"matrix is not hermitian: max |A - A*| = {dev:.3e}")
    return _eigh_checked((A + A.conj().T) / 2.0)


def _eigh_checked(H: np.ndarray) -> EigenDecomposition:
    n = H.shape[0]
    X = H.real.copy()
    Y = H.imag.copy()
    E = np.block([[X, -Y], [Y, X]])
    lam2, W = _jacobi_real_symmetric(E)
    scale = float(np.max(np.abs(lam2))) if n > 0 else 0.0
    lam, Q = _extract_complex_pairs(lam2, W, n, scale)
    bound = _RECONSTRUCT_TOL * (1.0 + scale)
    recon = float(np.linalg.norm((Q * lam) @ Q.conj().T - H))
    unit = float(np.linalg.norm(Q.conj().T @ Q - np.eye(n)))
    if recon > bound or unit > _RECONSTRUCT_TOL:
        raise NumericalFailureError(
            f"eigendecomposition failed its invariants (recon {recon:.2e}, unitarity {unit:.2e})"
        )
    lam.setflags(write=False)
    Q.setflags(write=False)
    return EigenDecomposition(eigenvalues=lam, eigenvectors=Q)


def op_norm(A) -> float:
    """Operator norm of a hermitian matrix: max |eigenvalue|."""
    ev = eigh(A).eigenvalues
    return float(np.max(np.abs(ev)))


def hs_inner(A, B) -> complex:
    """Trace pairing trace(A* B)."""
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    if A.shape != B.shape:
        raise InputError(f"dimension mismatch: {A.shape} vs {B.shape}")
    return complex(np.vdot(A, B))


def is_psd(A, tol: float = PSD_TOL) -> bool:
    """Positive semidefinite test: lambda_min >= -tol * (1 + ||A||).

    The tolerance is relative so the decision behaves uniformly across matrix
    scales.
    """
    if tol < 0:
        raise InputError("tol must be nonnegative")
    ev = eigh(A).eigenvalues
    norm = float(np.max(np.abs(ev)))
    return bool(ev[0] >= -tol * (1.0 + norm))


def min_eigenvalue(A) -> float:
    return float(eigh(A).eigenvalues[0])


def clip_spectrum(b, r: float) -> np.ndarray:
    """Apply the spectral clamp x -> min(max(x, -r), r) to a hermitian matrix.

    This is the functional calculus of the continuous piecewise-linear clamp
    at threshold r; it commutes with b, has norm at most r, and lies below b
    whenever the spectrum of b stays above -r.
    """
    if r < 0:
        raise InputError("clip threshold must be nonnegative")
    dec = eigh(b)
    clipped = np.clip(dec.eigenvalues, -r, r)
    out = (dec.eigenvectors * clipped) @ dec.eigenvectors.conj().T
    return hermitian_part(out)


def commutator_norm(a, b) -> float:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    c = a @ b - b @ a
    # [a,b] is anti-hermitian for hermitian a, b; i[a,b] is hermitian.
    return op_norm(hermitian_part(1j * c))
