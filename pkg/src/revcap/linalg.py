"""Dense complex linear algebra for small quantum systems.

All matrices are plain ``numpy`` arrays. Composite systems follow the
Kronecker convention: the leftmost tensor factor is the slowest-varying
index, so ``index = i_0 * (d_1 * d_2 ...) + i_1 * (d_2 ...) + ...``.
"""
import math

import numpy as np

HERMITIAN_TOL = 1e-10
JACOBI_TOL = 1e-14
MAX_SWEEPS = 100

# density-matrix validation
DM_HERMITIAN_TOL = 1e-12
DM_TRACE_TOL = 1e-12
NEGATIVE_EIG_TOL = 1e-10


class PreconditionError(ValueError):
    """An input violates a documented precondition."""


class DomainError(ArithmeticError):
    """A formula was evaluated at a point where it is singular."""


def as_matrix(m, name="matrix"):
    """Return ``m`` as a finite 2-d complex array."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise PreconditionError(f"{name} must be a non-empty 2-d array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise PreconditionError(f"{name} has non-finite entries")
    return m


def _as_hermitian(m, tol=HERMITIAN_TOL):
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise PreconditionError(f"matrix must be square, got shape {m.shape}")
    dev = np.max(np.abs(m - m.conj().T))
    if dev > tol:
        raise PreconditionError(f"matrix is not Hermitian: max |M - M^H| = {dev:.3e} > {tol:.0e}")
    return 0.5 * (m + m.conj().T)


def off_diagonal_norm(m):
    """Frobenius norm of the off-diagonal part of ``m``."""
    m = np.asarray(m)
    off = m[~np.eye(m.shape[0], dtype=bool)]
    return float(np.sqrt(np.sum(np.abs(off) ** 2)))


def jacobi_eigh(m, tol=JACOBI_TOL):
    """Diagonalize a Hermitian matrix with cyclic complex Jacobi rotations.

    Each rotation first removes the phase of the pivot ``M[p, q]`` with a
    diagonal unitary and then applies a real Givens rotation that zeroes it.
    Sweeps stop once the off-diagonal Frobenius mass drops below
    ``tol * max(1, ||M||_F)``.

    Parameters
    ----------
    m : array_like
        Square Hermitian matrix (within ``HERMITIAN_TOL``).
    tol : float
        Convergence threshold on the off-diagonal mass.

    Returns
    -------
    values : ndarray
        Eigenvalues in descending order.
    vectors : ndarray
        Unitary whose columns are the matching eigenvectors.
    """
    h = _as_hermitian(m)
    n = h.shape[0]
    # plain Python scalars: far cheaper than numpy indexing at these sizes
    a = h.tolist()
    v = np.eye(n, dtype=complex).tolist()
    threshold = tol * max(1.0, float(np.linalg.norm(h)))
    thr2 = threshold * threshold

    for _ in range(MAX_SWEEPS):
        off2 = 0.0
        for p in range(n - 1):
            row = a[p]
            for q in range(p + 1, n):
                z = row[q]
                off2 += z.real * z.real + z.imag * z.imag
        if 2.0 * off2 <= thr2:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p][q]
                mag = abs(apq)
                if mag == 0.0:
                    continue
                phase = apq / mag
                gq = phase.conjugate()
                app = a[p][p].real
                aqq = a[q][q].real
                angle = 0.5 * math.atan2(2.0 * mag, aqq - app)
                c, s = math.cos(angle), math.sin(angle)
                # columns k != p, q of A <- A G, rows follow by Hermiticity
                for k in range(n):
                    if k == p or k == q:
                        continue
                    akp = a[k][p]
                    akq = a[k][q] * gq
                    new_p = c * akp - s * akq
                    new_q = s * akp + c * akq
                    a[k][p] = new_p
                    a[k][q] = new_q
                    a[p][k] = new_p.conjugate()
                    a[q][k] = new_q.conjugate()
                a[p][p] = complex(c * c * app + s * s * aqq - 2.0 * s * c * mag)
                a[q][q] = complex(s * s * app + c * c * aqq + 2.0 * s * c * mag)
                a[p][q] = a[q][p] = 0j
                for row in v:
                    vp = row[p]
                    vq = row[q] * gq
                    row[p] = c * vp - s * vq
                    row[q] = s * vp + c * vq
    else:
        raise ArithmeticError(f"Jacobi iteration did not converge in {MAX_SWEEPS} sweeps")

    values = np.array([a[i][i].real for i in range(n)])
    vectors = np.array(v, dtype=complex)
    order = np.argsort(-values, kind="stable")
    return values[order], vectors[:, order]


def hermitian_eigenvalues(m):
    """Eigenvalues of a Hermitian matrix, sorted descending."""
    return jacobi_eigh(m)[0]


def tensor(*factors):
    """Kronecker product of one or more matrices (or vectors)."""
    out = np.asarray(factors[0], dtype=complex)
    for f in factors[1:]:
        out = np.kron(out, np.asarray(f, dtype=complex))
    return out


def partial_trace(rho, dims, keep):
    """Trace out every subsystem whose index is not in ``keep``.

    Kept subsystems retain their original relative order.
    """
    rho = as_matrix(rho, "rho")
    dims = [int(d) for d in dims]
    if any(d < 1 for d in dims):
        raise PreconditionError(f"subsystem dimensions must be positive, got {dims}")
    total = math.prod(dims)
    if rho.shape != (total, total):
        raise PreconditionError(f"dims {dims} multiply to {total}, but rho has shape {rho.shape}")
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise PreconditionError("keep must name at least one subsystem")
    if keep[0] < 0 or keep[-1] >= len(dims):
        raise PreconditionError(f"keep {keep} out of range for {len(dims)} subsystems")

    n = len(dims)
    t = rho.reshape(dims + dims)
    # trace from the highest index down so remaining axis numbers stay valid
    for k in reversed(range(n)):
        if k in keep:
            continue
        n_now = t.ndim // 2
        t = np.trace(t, axis1=k, axis2=k + n_now)
    d_keep = math.prod(dims[k] for k in keep)
    return t.reshape(d_keep, d_keep)


def _check_dm_structure(rho, name):
    rho = as_matrix(rho, name)
    if rho.shape[0] != rho.shape[1]:
        raise PreconditionError(f"{name} must be square, got shape {rho.shape}")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > DM_HERMITIAN_TOL:
        raise PreconditionError(f"{name} is not Hermitian (deviation {herm:.3e})")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > DM_TRACE_TOL:
        raise PreconditionError(f"{name} has trace {tr!r}, expected 1")
    return rho


def check_density_matrix(rho, name="rho"):
    """Validate a density matrix and return it as a complex array."""
    rho = _check_dm_structure(rho, name)
    lo = hermitian_eigenvalues(rho)[-1]
    if lo < -NEGATIVE_EIG_TOL:
        raise PreconditionError(f"{name} is not positive semidefinite (min eigenvalue {lo:.3e})")
    return rho


def check_state_vector(psi, name="psi"):
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1 or psi.size < 1:
        raise PreconditionError(f"{name} must be a non-empty 1-d array")
    norm2 = float(np.vdot(psi, psi).real)
    if abs(norm2 - 1.0) > 1e-12:
        raise PreconditionError(f"{name} has squared norm {norm2!r}, expected 1")
    return psi


def clamp_spectrum(values, tol=NEGATIVE_EIG_TOL):
    """Zero out eigenvalues in ``[-tol, 0)``; reject anything more negative."""
    values = np.asarray(values, dtype=float)
    if values.size and values.min() < -tol:
        raise PreconditionError(f"spectrum has eigenvalue {values.min():.3e} below -{tol:.0e}")
    return np.where(values < 0.0, 0.0, values)


def purify(rho):
    """Purification of ``rho`` on reference (first) times system (second).

    Built from the eigendecomposition ``rho = sum_k l_k |v_k><v_k|`` as
    ``sum_k sqrt(l_k) |k>_ref |v_k>``, so the Schmidt coefficients are the
    square roots of the eigenvalues.
    """
    rho = _check_dm_structure(rho, "rho")
    values, vectors = jacobi_eigh(rho)
    weights = np.sqrt(clamp_spectrum(values))
    d = rho.shape[0]
    psi = np.zeros(d * d, dtype=complex)
    for k in range(d):
        psi[k * d:(k + 1) * d] = weights[k] * vectors[:, k]
    return psi / np.linalg.norm(psi)


def projector(psi):
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def random_density_matrix(dim, rng, rank=None):
    """Ginibre-distributed density matrix."""
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def random_hermitian(dim, rng):
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (g + g.conj().T)
