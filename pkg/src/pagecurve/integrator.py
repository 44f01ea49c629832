"""Adaptive time evolution of density matrices under Davies generators.

The state is propagated in the interaction picture of the system
Hamiltonian. Davies jump operators are eigenoperators of H, so the
dissipator commutes with the unitary flow and the interaction-picture
equation is just the dissipator. This removes the fast Bohr-frequency
timescale from the step-size control; lab-frame states are recovered
exactly at the recording times.
"""
import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .opcore import adjoint, as_density_matrix, eigh, matrix_to_json

log = logging.getLogger(__name__)

POSITIVITY_ABORT = -1e-6


class IntegrationError(RuntimeError):
    pass


class PositivityError(IntegrationError):
    pass


class LeakageError(IntegrationError):
    pass


class NonUniqueSteadyStateError(IntegrationError):
    pass


@dataclass(frozen=True)
class IntegrationControls:
    t_end: float
    dt_init: float
    rel_tol: float = 1e-9
    abs_tol: float = 1e-11
    record_stride: int = 1
    leak_threshold: float = 1e-6

    def __post_init__(self):
        for name in ("t_end", "dt_init", "rel_tol", "abs_tol", "leak_threshold"):
            val = getattr(self, name)
            if not (val > 0 and math.isfinite(val)):
                raise ValueError(f"{name} must be a positive finite number, got {val!r}")
        if self.rel_tol >= 1e-3:
            raise ValueError(f"rel_tol must be < 1e-3, got {self.rel_tol!r}")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValueError(f"record_stride must be a positive integer, got {self.record_stride!r}")

    def record_times(self):
        """Uniform grid with spacing ``dt_init * record_stride``, closed at ``t_end``."""
        spacing = self.dt_init * self.record_stride
        n = int(math.floor(self.t_end / spacing + 1e-9))
        times = spacing * np.arange(n + 1)
        if self.t_end - times[-1] > 1e-9 * spacing:
            times = np.append(times, self.t_end)
        else:
            times[-1] = self.t_end
        return times


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    trace_error: np.ndarray
    min_eigenvalue: np.ndarray
    top_level_population: np.ndarray
    n_steps: int = 0
    n_rejected: int = 0
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "trace_err", "min_eig", "top_pop"])
            for row in zip(self.times, self.trace_error, self.min_eigenvalue,
                           self.top_level_population):
                w.writerow([fmt(x) for x in row])

    def dump_states(self, directory, stride=1, basis=None):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        written = []
        for k in range(0, len(self.times), stride):
            doc = matrix_to_json(self.states[k], basis=basis)
            doc["t"] = float(self.times[k])
            p = directory / f"state_{k:06d}.json"
            p.write_text(json.dumps(doc))
            written.append(p)
        return written


def fmt(x):
    """17 significant digits; non-finite values are written as ``nan``."""
    x = float(x)
    return "%.17g" % x if math.isfinite(x) else "nan"


# Dormand-Prince 5(4) tableau
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


class _InteractionFrame:
    """Generator pieces expressed in the eigenbasis of H."""

    def __init__(self, L):
        self.energies, self.V = eigh(L.hamiltonian)
        Vd = adjoint(self.V)
        self.ops = [(ch.rate, Vd @ ch.operator @ self.V) for ch in L.channels if ch.rate > 0]
        self.ops_dag = [adjoint(A) for _, A in self.ops]
        self.K = Vd @ L._decay @ self.V
        self.gaps = self.energies[:, None] - self.energies[None, :]

    def rhs(self, rho):
        K = self.K
        out = -0.5 * (K @ rho + rho @ K)
        for (rate, A), Ad in zip(self.ops, self.ops_dag):
            out += rate * (A @ rho @ Ad)
        return out

    def to_frame(self, rho, t):
        r = adjoint(self.V) @ rho @ self.V
        return r * np.exp(1j * self.gaps * t)

    def to_lab(self, rho_i, t):
        r = rho_i * np.exp(-1j * self.gaps * t)
        return self.V @ r @ adjoint(self.V)


def _error_norm(err, y0, y1, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.max(np.abs(err) / scale))


def evolve(L, rho0, controls, times=None, leak_level=None):
    """Integrate ``d rho/dt = L(rho)`` and record states on a time grid.

    ``times`` overrides the grid from ``controls.record_times()``.
    ``leak_level`` is the lab-basis index whose population is monitored for
    Fock-truncation leakage (``None`` disables the monitor).
    """
    rho0 = as_density_matrix(rho0)
    if rho0.shape != (L.dim, L.dim):
        raise IntegrationError(f"state is {rho0.shape}, generator is {L.dim}x{L.dim}")
    times = controls.record_times() if times is None else np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0 or times[0] < 0 or np.any(np.diff(times) <= 0):
        raise IntegrationError("record times must be non-negative and strictly increasing")

    frame = _InteractionFrame(L)
    rtol, atol = controls.rel_tol, controls.abs_tol
    d = L.dim
    n = len(times)
    states = np.empty((n, d, d), dtype=complex)
    trace_err = np.empty(n)
    min_eig = np.empty(n)
    top_pop = np.full(n, np.nan)

    y = frame.to_frame(rho0, 0.0)
    t = 0.0
    h = min(controls.dt_init, times[-1]) if times[-1] > 0 else controls.dt_init
    k1 = frame.rhs(y)
    n_steps = n_rej = 0

    for idx, t_rec in enumerate(times):
        while t < t_rec:
            h_try = min(h, t_rec - t)
            clipped = h_try < h
            ks = [k1]
            for s in range(1, 7):
                ys = y + h_try * sum(a * k for a, k in zip(_A[s], ks) if a != 0)
                ks.append(frame.rhs(ys))
            y_new = ys  # stage 7 evaluates at the 5th-order solution (FSAL)
            err = h_try * sum(e * k for e, k in zip(_E, ks) if e != 0)
            enorm = _error_norm(err, y, y_new, rtol, atol)
            if enorm <= 1.0:
                t = t_rec if clipped or t + h_try >= t_rec else t + h_try
                y = (y_new + adjoint(y_new)) / 2
                k1 = frame.rhs(y)
                n_steps += 1
                factor = 5.0 if enorm == 0 else min(5.0, max(0.2, 0.9 * enorm ** -0.2))
                if not clipped:
                    h = h_try * factor
                else:
                    h = max(h, h_try * factor)
            else:
                n_rej += 1
                h = h_try * max(0.2, 0.9 * enorm ** -0.2)
                if h < 1e-14 * max(1.0, t):
                    raise IntegrationError(f"step size underflow at t={t:.6g}")

        tr = np.trace(y).real
        trace_err[idx] = abs(tr - 1.0)
        if trace_err[idx] > 1e-12:
            log.debug("renormalising recorded state at t=%g (trace drift %.3e)", t_rec, trace_err[idx])
        lab = frame.to_lab(y, t_rec) / tr
        lab = (lab + adjoint(lab)) / 2
        states[idx] = lab
        min_eig[idx] = np.linalg.eigvalsh(lab)[0]
        if min_eig[idx] < POSITIVITY_ABORT:
            raise PositivityError(
                f"positivity violated at t={t_rec:.6g}: min eigenvalue {min_eig[idx]:.3e}")
        if leak_level is not None:
            top_pop[idx] = lab[leak_level, leak_level].real
            if top_pop[idx] > controls.leak_threshold:
                raise LeakageError(
                    f"population {top_pop[idx]:.3e} in truncation level {leak_level} exceeds "
                    f"{controls.leak_threshold:g} at t={t_rec:.6g}; increase n_max")

    log.info("evolve: %d steps (%d rejected), %d samples", n_steps, n_rej, n)
    return Trajectory(times=times, states=states, trace_error=trace_err, min_eigenvalue=min_eig,
                      top_level_population=top_pop, n_steps=n_steps, n_rejected=n_rej)


def _sectors(gaps, tol):
    """Index pairs (i, j) grouped by the Bohr frequency e_i - e_j."""
    flat = gaps.ravel()
    order = np.argsort(flat, kind="stable")
    groups = []
    for idx in order:
        if groups and flat[idx] - flat[groups[-1][-1]] <= tol:
            groups[-1].append(idx)
        else:
            groups.append([idx])
    return [np.array(g) for g in groups]


def _sector_block(frame, flat_idx):
    d = len(frame.energies)
    i, j = np.divmod(flat_idx, d)
    I, K_ = np.ix_(i, i)
    J, L_ = np.ix_(j, j)
    block = np.zeros((len(flat_idx), len(flat_idx)), dtype=complex)
    for (rate, A) in frame.ops:
        block += rate * A[I, K_] * A[J, L_].conj()
    K = frame.K
    block -= 0.5 * (K[I, K_] * (J == L_) + (I == K_) * K[L_, J])
    block -= 1j * np.diag(frame.gaps.ravel()[flat_idx])
    return block


def steady_state(L, kernel_rtol=1e-9):
    """Unique fixed point of the generator.

    The superoperator of a Davies generator is block diagonal in sectors of
    fixed Bohr frequency (e_i - e_j in the eigenbasis of H); the kernel is
    computed per sector and must be one-dimensional overall.
    """
    if not any(ch.rate > 0 for ch in L.channels):
        raise NonUniqueSteadyStateError("generator has no dissipative channel")
    frame = _InteractionFrame(L)
    scale = max(1.0, float(np.max(np.abs(frame.energies))))
    blocks = []
    for sector in _sectors(frame.gaps, 1e-9 * scale):
        M = _sector_block(frame, sector)
        _, s, Vh = np.linalg.svd(M)
        blocks.append((sector, s, Vh))
    s_max = max(b[1][0] for b in blocks)
    thresh = kernel_rtol * max(s_max, 1.0)
    null = [(sector, Vh[k].conj()) for sector, s, Vh in blocks
            for k in range(len(s)) if s[k] <= thresh]
    if len(null) != 1:
        raise NonUniqueSteadyStateError(f"kernel of the generator has dimension {len(null)}")
    sector, vec = null[0]
    d = L.dim
    rho_e = np.zeros(d * d, dtype=complex)
    rho_e[sector] = vec
    rho = frame.V @ rho_e.reshape(d, d) @ adjoint(frame.V)
    rho = rho / np.trace(rho)
    return (rho + adjoint(rho)) / 2
