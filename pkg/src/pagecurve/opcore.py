"""Dense operator algebra for small open quantum systems.

Operators are plain complex ``numpy`` arrays. The helpers here only validate
and construct them; nothing is wrapped in a class.

Basis conventions
-----------------
* Qubit: index 0 is the excited state ``|1>`` (the ``sigma_z = +1``
  eigenvector), index 1 is the ground state ``|0>``.
* Fock: index ``n`` is the number state ``|n>``, vacuum first.
"""
import json
from pathlib import Path

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-9
POSITIVITY_TOL = 1e-9


class InvalidOperatorError(ValueError):
    """Raised when a matrix violates the contract of its operator type."""


def _square(M):
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise InvalidOperatorError(f"expected a non-empty square matrix, got shape {M.shape}")
    return M


def adjoint(A):
    return np.conj(np.asarray(A)).T


def hermiticity_error(M):
    M = np.asarray(M)
    return float(np.max(np.abs(M - adjoint(M)))) if M.size else 0.0


def as_operator(M):
    """Validate shape only; jump operators need not be Hermitian."""
    return _square(M)


def as_hermitian(M, tol=HERMITIAN_TOL):
    M = _square(M)
    err = hermiticity_error(M)
    if err > tol:
        raise InvalidOperatorError(f"operator is not Hermitian (max |M - M^dag| = {err:.3e})")
    return M


def as_density_matrix(M, trace_tol=TRACE_TOL, positivity_tol=POSITIVITY_TOL):
    """Validate a density matrix: Hermitian, unit trace, positive semidefinite."""
    M = as_hermitian(M)
    tr = np.trace(M).real
    if abs(tr - 1.0) > trace_tol:
        raise InvalidOperatorError(f"density matrix trace is {tr!r}, expected 1")
    lmin = float(np.linalg.eigvalsh(M)[0])
    if lmin < -positivity_tol:
        raise InvalidOperatorError(f"density matrix has negative eigenvalue {lmin:.3e}")
    return M


def pauli(which):
    """Pauli matrices and the ladder combinations ``(sigma_x +/- i sigma_y)/2``."""
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    table = {
        "x": sx,
        "y": sy,
        "z": sz,
        "plus": (sx + 1j * sy) / 2,
        "minus": (sx - 1j * sy) / 2,
    }
    try:
        return table[which].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli operator {which!r}; expected one of {sorted(table)}") from None


def ladder(n_max, which):
    """Truncated bosonic operator in the lowest ``n_max`` Fock states.

    ``which`` is ``"lower"`` (a), ``"raise"`` (a^dag) or ``"number"`` (a^dag a).
    The truncated commutator [a, a^dag] is the identity except for the
    corner entry, which equals ``1 - n_max``.
    """
    if int(n_max) != n_max or n_max < 2:
        raise InvalidOperatorError(f"n_max must be an integer >= 2, got {n_max!r}")
    n_max = int(n_max)
    lower = np.diag(np.sqrt(np.arange(1, n_max)), k=1).astype(complex)
    if which == "lower":
        return lower
    if which == "raise":
        return adjoint(lower).copy()
    if which == "number":
        return np.diag(np.arange(n_max)).astype(complex)
    raise ValueError(f"unknown ladder operator {which!r}; expected lower, raise or number")


def commutator(A, B):
    A, B = _square(A), _square(B)
    if A.shape != B.shape:
        raise InvalidOperatorError(f"dimension mismatch: {A.shape} vs {B.shape}")
    return A @ B - B @ A


def eigh(M, tol=HERMITIAN_TOL):
    """Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.

    The input is symmetrised before factorisation so that the returned
    eigenvectors form a unitary up to rounding.
    """
    M = as_hermitian(M, tol=tol)
    w, V = np.linalg.eigh((M + adjoint(M)) / 2)
    return w, V


def gibbs_state(H, temperature):
    """Normalised ``exp(-H/T)``; at ``T = 0`` the uniform mixture over the ground space."""
    w, V = eigh(H)
    shifted = w - w[0]
    if temperature == 0:
        scale = max(1.0, float(np.max(np.abs(w))))
        weights = (shifted <= 1e-9 * scale).astype(float)
    else:
        weights = np.exp(-shifted / temperature)
    weights /= weights.sum()
    rho = (V * weights) @ adjoint(V)
    return (rho + adjoint(rho)) / 2


def ket_projector(dim, index):
    P = np.zeros((dim, dim), dtype=complex)
    P[index, index] = 1.0
    return P


# -- JSON matrix files: {"dim": n, "re": [[...]], "im": [[...]]}, row-major --

def matrix_to_json(M, basis=None):
    M = _square(M)
    doc = {"dim": int(M.shape[0]), "re": M.real.tolist(), "im": M.imag.tolist()}
    if basis is not None:
        doc["basis"] = basis
    return doc


def matrix_from_json(doc):
    try:
        dim = int(doc["dim"])
        re = np.asarray(doc["re"], dtype=float)
        im = np.asarray(doc.get("im", np.zeros((dim, dim))), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidOperatorError(f"malformed matrix document: {exc}") from exc
    if re.shape != (dim, dim) or im.shape != (dim, dim):
        raise InvalidOperatorError(
            f"matrix document declares dim={dim} but has re{re.shape}, im{im.shape}")
    return re + 1j * im


def load_matrix(path):
    with open(path) as fh:
        return matrix_from_json(json.load(fh))


def save_matrix(path, M, basis=None):
    Path(path).write_text(json.dumps(matrix_to_json(M, basis=basis), indent=1))
