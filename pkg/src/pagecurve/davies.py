"""Davies-form (global) GKLS generators for a system weakly coupled to a thermal bath."""
import math
from dataclasses import dataclass, field

import numpy as np

from .opcore import adjoint, as_hermitian, as_operator, eigh

EIGENOPERATOR_TOL = 1e-10
DETAILED_BALANCE_TOL = 1e-10


class GeneratorError(ValueError):
    pass


@dataclass(frozen=True)
class BathSpec:
    """Thermal bath in units hbar = k_B = 1. ``temperature = 0`` means beta = infinity."""

    temperature: float
    coupling_strength: float

    def __post_init__(self):
        if not (self.temperature >= 0 and math.isfinite(self.temperature)):
            raise GeneratorError(f"temperature must be finite and >= 0, got {self.temperature!r}")
        if not (self.coupling_strength > 0 and math.isfinite(self.coupling_strength)):
            raise GeneratorError(f"coupling_strength must be > 0, got {self.coupling_strength!r}")

    @property
    def beta(self):
        return math.inf if self.temperature == 0 else 1.0 / self.temperature


def occupation(x, temperature):
    """Bose-Einstein occupation 1/(exp(x/T) - 1) for x > 0; exactly 0 at T = 0."""
    if temperature == 0:
        return 0.0
    y = x / temperature
    if y > 700:
        return 0.0
    return 1.0 / math.expm1(y)


def thermal_rate(omega, bath, scale=None):
    """Ohmic detailed-balance rate for the channel with Bohr frequency ``omega``.

    Emission (omega > 0): gamma*|omega|*(1 + n), absorption (omega < 0):
    gamma*|omega|*n, with n the occupation at |omega|. ``scale`` overrides the
    |omega| prefactor.
    """
    if bath.coupling_strength <= 0:
        raise GeneratorError("coupling strength must be positive")
    if omega == 0:
        raise GeneratorError("thermal rate is singular at omega = 0")
    x = abs(omega)
    pref = bath.coupling_strength * (x if scale is None else scale)
    n = occupation(x, bath.temperature)
    return pref * (1.0 + n) if omega > 0 else pref * n


@dataclass(frozen=True)
class JumpChannel:
    bohr_frequency: float
    operator: np.ndarray
    rate: float

    def __post_init__(self):
        if not self.rate >= 0:
            raise GeneratorError(f"jump rate must be >= 0, got {self.rate!r}")
        object.__setattr__(self, "operator", as_operator(self.operator))


@dataclass(frozen=True)
class GKLSGenerator:
    """``rho -> -i[H, rho] + sum_k rate_k D[A_k](rho)``.

    Every channel must be an eigenoperator of the Hamiltonian,
    ``[H, A] = -omega A``; integrators rely on this to move to the
    interaction picture.
    """

    hamiltonian: np.ndarray
    channels: tuple = field(default_factory=tuple)

    def __post_init__(self):
        H = as_hermitian(self.hamiltonian)
        object.__setattr__(self, "hamiltonian", H)
        object.__setattr__(self, "channels", tuple(self.channels))
        dim = H.shape[0]
        for ch in self.channels:
            if ch.operator.shape != (dim, dim):
                raise GeneratorError(
                    f"channel operator has shape {ch.operator.shape}, Hamiltonian is {dim}x{dim}")
            A = ch.operator
            err = np.max(np.abs(H @ A - A @ H + ch.bohr_frequency * A))
            if err > EIGENOPERATOR_TOL * max(1.0, np.max(np.abs(A))):
                raise GeneratorError(
                    f"channel at omega={ch.bohr_frequency:g} is not an eigenoperator of H "
                    f"(residual {err:.3e})")
        # cached pieces of the dissipator
        K = np.zeros((dim, dim), dtype=complex)
        for ch in self.channels:
            K += ch.rate * (adjoint(ch.operator) @ ch.operator)
        object.__setattr__(self, "_decay", K)

    @property
    def dim(self):
        return self.hamiltonian.shape[0]

    def dissipator(self, rho):
        K = self._decay
        out = -0.5 * (K @ rho + rho @ K)
        for ch in self.channels:
            A = ch.operator
            out += ch.rate * (A @ rho @ adjoint(A))
        return out

    def apply(self, rho):
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.dim, self.dim):
            raise GeneratorError(f"state has shape {rho.shape}, generator is {self.dim}x{self.dim}")
        H = self.hamiltonian
        return -1j * (H @ rho - rho @ H) + self.dissipator(rho)

    def superoperator(self):
        """Matrix of the generator acting on row-major vectorised states."""
        d = self.dim
        eye = np.eye(d)
        H = self.hamiltonian
        K = self._decay
        L = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
        L -= 0.5 * (np.kron(K, eye) + np.kron(eye, K.T))
        for ch in self.channels:
            A = ch.operator
            L += ch.rate * np.kron(A, A.conj())
        return L

    def detailed_balance_error(self, temperature):
        """Largest violation of rate(-w)/rate(w) = exp(-w/T) over paired channels."""
        rates = {}
        for ch in self.channels:
            rates[ch.bohr_frequency] = ch.rate
        worst = 0.0
        for w, r in rates.items():
            if w <= 0 or r == 0:
                continue
            partner = _lookup(rates, -w)
            if temperature == 0:
                worst = max(worst, partner)
            else:
                worst = max(worst, abs(partner / r - math.exp(-w / temperature)))
        return worst


def _lookup(rates, w, tol=1e-12):
    for key, val in rates.items():
        if abs(key - w) <= tol * max(1.0, abs(w)):
            return val
    return 0.0


def apply(L, rho):
    return L.apply(rho)


def _cluster(values, tol):
    """Group sorted values into runs whose neighbours differ by <= tol."""
    order = np.argsort(values, kind="stable")
    groups = []
    for idx in order:
        if groups and values[idx] - values[groups[-1][-1]] <= tol:
            groups[-1].append(idx)
        else:
            groups.append([idx])
    return groups


def default_degeneracy_tol(H):
    return 1e-9 * max(float(np.max(np.abs(H))), 1e-300)


def bohr_decompose(H, S, degeneracy_tol=None):
    """Split the coupling operator ``S`` into eigenoperators of ``H``.

    Returns ``[(omega, A_omega), ...]`` sorted by omega with
    ``sum(A_omega) == S`` and ``[H, A_omega] == -omega * A_omega``.
    Eigenvalues and Bohr frequencies closer than ``degeneracy_tol`` are merged.
    Components below rounding level are dropped.
    """
    H = as_hermitian(H)
    S = as_hermitian(S)
    if H.shape != S.shape:
        raise GeneratorError(f"H and S differ in shape: {H.shape} vs {S.shape}")
    if degeneracy_tol is None:
        degeneracy_tol = default_degeneracy_tol(H)
    if degeneracy_tol <= 0:
        raise GeneratorError("degeneracy_tol must be positive")

    w, V = eigh(H)
    levels = _cluster(w, degeneracy_tol)
    energies = np.array([w[g].mean() for g in levels])
    S_eig = adjoint(V) @ S @ V

    # A_omega in the eigenbasis: blocks (eps, eps') with eps' - eps = omega
    pairs = [(energies[j] - energies[i], i, j)
             for i in range(len(levels)) for j in range(len(levels))]
    freqs = np.array([p[0] for p in pairs])
    zero_tol = 1e-14 * max(1.0, float(np.max(np.abs(S))))
    out = []
    for group in _cluster(freqs, degeneracy_tol):
        omega = float(freqs[group].mean())
        if abs(omega) <= degeneracy_tol:
            omega = 0.0
        block = np.zeros_like(S_eig)
        for k in group:
            _, i, j = pairs[k]
            rows, cols = np.ix_(levels[i], levels[j])
            block[rows, cols] = S_eig[rows, cols]
        if np.max(np.abs(block)) <= zero_tol:
            continue
        out.append((omega, V @ block @ adjoint(V)))
    return out


def build_generator(H, S, bath, degeneracy_tol=None):
    """Davies generator for coupling ``S (x) B`` to a thermal bath.

    omega = 0 (dephasing) components get no rate and are dropped, as are
    channels whose rate is exactly zero (absorption at T = 0).
    """
    H = as_hermitian(H)
    channels = []
    for omega, A in bohr_decompose(H, S, degeneracy_tol):
        if omega == 0.0:
            continue
        rate = thermal_rate(omega, bath)
        if rate == 0.0:
            continue
        channels.append(JumpChannel(bohr_frequency=omega, operator=A, rate=rate))
    return GKLSGenerator(hamiltonian=H, channels=tuple(channels))


def describe(L):
    """JSON-friendly summary of the channels (for ``davies-inspect``)."""
    return {
        "dim": L.dim,
        "channels": [
            {
                "omega": ch.bohr_frequency,
                "rate": ch.rate,
                "operator_norm": float(np.linalg.norm(ch.operator, 2)),
            }
            for ch in L.channels
        ],
    }
