"""Single-mode Gaussian states of the damped oscillator.

Quadratures are x = (a + a^dag)/sqrt(2), p = i(a^dag - a)/sqrt(2), so the
vacuum has covariance diag(1/2, 1/2). Under

    d rho/dt = -i[w0 a^dag a, rho] + g_down D[a] rho + g_up D[a^dag] rho

the moments obey, with kappa = g_down - g_up,

    d<a^dag a>/dt = -kappa <a^dag a> + g_up
    d<a a>/dt     = (-2 i w0 - kappa) <a a>

which is the Lyapunov equation dS/dt = A S + S A^T + D with
A = [[-kappa/2, w0], [-w0, -kappa/2]] and D = (g_down + g_up)/2 * I.
It is solved here in closed form.
"""
import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .integrator import fmt
from .opcore import adjoint, ladder

SYMPLECTIC_FORM = np.array([[0.0, 1.0], [-1.0, 0.0]])


class UnphysicalStateError(ValueError):
    pass


class TruncationError(ValueError):
    pass


def _det_tol(sxx, spp):
    # rounding in sxx*spp - sxp**2 grows with the squared variances
    return max(1e-12, 64 * np.finfo(float).eps * (sxx + spp) ** 2)


@dataclass(frozen=True)
class CovarianceState:
    sxx: float
    sxp: float
    spp: float

    def __post_init__(self):
        if not (self.sxx > 0 and self.spp > 0):
            raise UnphysicalStateError(f"variances must be positive, got sxx={self.sxx}, spp={self.spp}")
        if self.det < 0.25 - _det_tol(self.sxx, self.spp):
            raise UnphysicalStateError(f"det(Sigma) = {self.det!r} violates the uncertainty bound 1/4")

    @classmethod
    def from_matrix(cls, M):
        M = np.asarray(M, dtype=float)
        return cls(float(M[0, 0]), float((M[0, 1] + M[1, 0]) / 2), float(M[1, 1]))

    @classmethod
    def vacuum(cls):
        return cls(0.5, 0.0, 0.5)

    @classmethod
    def thermal(cls, n_bar):
        return cls(n_bar + 0.5, 0.0, n_bar + 0.5)

    @classmethod
    def squeezed_vacuum(cls, delta):
        if not delta > 0:
            raise UnphysicalStateError(f"squeezing delta must be > 0, got {delta!r}")
        return cls(delta, 0.0, 0.25 / delta)

    @property
    def matrix(self):
        return np.array([[self.sxx, self.sxp], [self.sxp, self.spp]])

    @property
    def det(self):
        return self.sxx * self.spp - self.sxp ** 2

    @property
    def mean_number(self):
        return (self.sxx + self.spp) / 2 - 0.5

    @property
    def anomalous(self):
        """<a a> for zero first moments."""
        return complex((self.sxx - self.spp) / 2, self.sxp)


def symplectic_eigenvalue(state):
    """|eigenvalue| of Sigma @ Omega, i.e. sqrt(det Sigma) for one mode."""
    return math.sqrt(max(state.det, 0.25))


def entropy_from_lambda(lam):
    if lam < 0.5:
        raise UnphysicalStateError(f"symplectic eigenvalue {lam!r} < 1/2")
    up, dn = lam + 0.5, lam - 0.5
    s = up * math.log(up)
    if dn > 0:
        s -= dn * math.log(dn)
    return s


def gaussian_entropy(state):
    """Von Neumann entropy in nats."""
    return entropy_from_lambda(symplectic_eigenvalue(state))


def lyapunov_matrices(omega0, g_down, g_up):
    kappa = g_down - g_up
    A = np.array([[-kappa / 2, omega0], [-omega0, -kappa / 2]])
    D = (g_down + g_up) / 2 * np.eye(2)
    return A, D


def covariance_derivative(state, omega0, g_down, g_up):
    A, D = lyapunov_matrices(omega0, g_down, g_up)
    S = state.matrix
    return A @ S + S @ A.T + D


def evolve_covariance(state, omega0, g_down, g_up, t):
    """Closed-form covariance at time ``t`` for the damped oscillator."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t!r}")
    if not g_down > g_up >= 0:
        raise ValueError(f"need g_down > g_up >= 0, got {g_down!r}, {g_up!r}")
    if t == 0:
        return state
    kappa = g_down - g_up
    x = math.exp(-kappa * t)
    n_inf = g_up / kappa
    n = state.mean_number * x + n_inf * (1 - x)
    m = state.anomalous * x * complex(math.cos(2 * omega0 * t), -math.sin(2 * omega0 * t))
    return CovarianceState(sxx=m.real + n + 0.5, sxp=m.imag, spp=-m.real + n + 0.5)


def energy(state, omega0=1.0):
    """Energy including zero-point, w0 (sxx + spp)/2; ground state w0/2."""
    return omega0 * (state.sxx + state.spp) / 2


@dataclass
class CovarianceTrajectory:
    times: np.ndarray
    states: list
    omega0: float = 1.0

    def columns(self):
        lam = np.array([symplectic_eigenvalue(s) for s in self.states])
        S = np.array([entropy_from_lambda(l) for l in lam])
        E = np.array([energy(s, self.omega0) for s in self.states])
        return lam, S, E

    def write_csv(self, path):
        lam, S, E = self.columns()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "sxx", "sxp", "spp", "lambda", "S", "E"])
            for t, st, l, s, e in zip(self.times, self.states, lam, S, E):
                w.writerow([fmt(v) for v in (t, st.sxx, st.sxp, st.spp, l, s, e)])


def covariance_trajectory(state0, omega0, g_down, g_up, times):
    times = np.asarray(times, dtype=float)
    states = [evolve_covariance(state0, omega0, g_down, g_up, t) for t in times]
    return CovarianceTrajectory(times=times, states=states, omega0=omega0)


def fock_projector_oracle(state, n_max, tail_tol=1e-8):
    """Fock-basis density matrix of the centred Gaussian state, truncated to ``n_max``.

    Built as R(theta) S(r) rho_thermal S(r)^dag R(theta)^dag in a padded
    space. Raises TruncationError if the mass outside the first ``n_max``
    levels exceeds ``tail_tol``.
    """
    lam = symplectic_eigenvalue(state)
    evals, Q = np.linalg.eigh(state.matrix / lam)
    r = 0.25 * math.log(evals[1] / evals[0])
    # R = [[c, s], [-s, c]] must map x onto the squeezed eigen-direction
    theta = math.atan2(-Q[1, 0], Q[0, 0])

    big = 2 * n_max + 60
    n_bar = lam - 0.5
    levels = np.arange(big)
    if n_bar <= 0:
        p = (levels == 0).astype(float)
    else:
        p = np.exp(levels * math.log(n_bar / (1 + n_bar)) - math.log1p(n_bar))
    a = ladder(big, "lower")
    sq = expm(r * (a @ a - adjoint(a) @ adjoint(a)) / 2)
    rot = np.exp(-1j * theta * levels)
    U = rot[:, None] * sq
    rho = (U * p) @ adjoint(U)

    tail = 1.0 - np.trace(rho[:n_max, :n_max]).real
    if tail > tail_tol:
        raise TruncationError(f"Gaussian state has tail mass {tail:.3e} above n_max={n_max}; increase n_max")
    out = rho[:n_max, :n_max]
    out = (out + adjoint(out)) / 2
    return out / np.trace(out).real


def covariance_of(rho):
    """Quadrature covariance of a Fock-basis density matrix (test helper)."""
    d = rho.shape[0]
    a = ladder(d, "lower")
    aa = np.trace(rho @ a @ a)
    n = np.trace(rho @ adjoint(a) @ a).real
    return CovarianceState(sxx=aa.real + n + 0.5, sxp=aa.imag, spp=-aa.real + n + 0.5)
