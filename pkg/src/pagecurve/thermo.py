"""Entropy and heat bookkeeping along a trajectory.

All entropies are in nats. At T = 0 the entropy production is undefined
(beta is infinite) and is reported as ``None``; the meaningful zero-temperature
checks are Qdot <= 0 and the Landauer reduction Qdot_B >= 0.
"""
import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import gaussian
from .integrator import fmt
from .opcore import gibbs_state

CLIP_FLOOR = 1e-14

SPOHN_TOL = 1e-8
LANDAUER_TOL = 1e-8
QDOT_COLD_TOL = 1e-10
SDOT_DECREASE = -1e-10
REL_ENTROPY_STEP_TOL = 1e-8
PURE_START_TOL = 1e-12
TERMINAL_TOL = 1e-6


class WindowTooShortError(ValueError):
    """The entropy maximum sits on the edge of the sampled window."""


@dataclass
class ThermoRecord:
    t: float
    S: float
    E: float
    Q_dot: float
    S_dot: float
    sigma: float | None
    rel_entropy: float
    landauer_lhs: float
    landauer_rhs: float
    ill_conditioned: bool = False


@dataclass
class PageSummary:
    t_star: float
    S_star: float
    energy_fraction_at_t_star: float


def _spectrum_entropy(w, clip_floor=CLIP_FLOOR):
    w = w[w > clip_floor]
    return float(-np.sum(w * np.log(w))) + 0.0


def von_neumann_entropy(rho, clip_floor=CLIP_FLOOR):
    return _spectrum_entropy(np.linalg.eigvalsh(rho), clip_floor)


def analytic_qubit_entropy(gamma, t):
    """Closed-form entropy of a qubit decaying from the excited state at T = 0."""
    if t == 0:
        return 0.0
    x = gamma * t
    p = math.exp(-x)
    q = -math.expm1(-x)
    return x * p - q * math.log(q)


def heat_current(L, rho):
    return float(np.trace(L.hamiltonian @ L.apply(rho)).real)


def _entropy_rate(drho, rho, clip_floor):
    w, V = np.linalg.eigh(rho)
    proj = np.einsum("ij,ik,kj->j", V.conj(), drho, V).real
    small = w <= clip_floor
    ill = bool(np.any(small & (np.abs(proj) > clip_floor)))
    rate = -float(np.sum(proj * np.log(np.maximum(w, clip_floor))))
    return rate, ill


def entropy_rate(L, rho, clip_floor=CLIP_FLOOR):
    """dS/dt = -tr(L(rho) log rho), with eigenvalues clipped at ``clip_floor``."""
    return _entropy_rate(L.apply(rho), rho, clip_floor)[0]


def entropy_production(S_dot, Q_dot, bath):
    """sigma = dS/dt - beta Qdot; ``None`` at T = 0."""
    if bath.temperature == 0:
        return None
    return S_dot - Q_dot / bath.temperature


def relative_entropy(rho, tau, clip_floor=CLIP_FLOOR):
    """S(rho|tau) = tr rho (log rho - log tau); ``math.inf`` if supp(rho) is not in supp(tau)."""
    wt, Vt = np.linalg.eigh(tau)
    weights = np.einsum("ij,ik,kj->j", Vt.conj(), rho, Vt).real
    outside = wt <= clip_floor
    if np.any(weights[outside] > clip_floor):
        return math.inf
    inside = ~outside
    cross = float(np.sum(weights[inside] * np.log(wt[inside])))
    return max(0.0, -von_neumann_entropy(rho, clip_floor) - cross)


def landauer_margins(S_dot, Q_dot, bath):
    """Both sides of -T dS/dt <= Qdot_B, with Qdot_B = -Qdot."""
    lhs = 0.0 if bath.temperature == 0 else -bath.temperature * S_dot
    return lhs, -Q_dot


def exothermic_if_decreasing(S_dot, Q_dot):
    """dS/dt < 0 implies Qdot < 0."""
    return not (S_dot < SDOT_DECREASE) or Q_dot < 0


def page_summary(times, entropies, energies):
    """Locate the entropy maximum and the remaining energy fraction there."""
    t = np.asarray(times, dtype=float)
    S = np.asarray(entropies, dtype=float)
    E = np.asarray(energies, dtype=float)
    if len(t) < 3:
        raise ValueError("page_summary needs at least 3 samples")
    if not np.any(S != 0):
        raise ValueError("entropy is identically zero")
    k = int(np.argmax(S))
    if k == 0 or k == len(S) - 1:
        raise WindowTooShortError(
            f"entropy maximum at the window edge (t={t[k]:g}); no interior Page time")
    c2, c1, c0 = np.polyfit(t[k - 1:k + 2] - t[k], S[k - 1:k + 2], 2)
    if c2 < 0:
        dt = -c1 / (2 * c2)
        dt = min(max(dt, t[k - 1] - t[k]), t[k + 1] - t[k])
        t_star = t[k] + dt
        S_star = c0 + c1 * dt + c2 * dt ** 2
    else:
        t_star, S_star = t[k], S[k]
    E_star = float(np.interp(t_star, t, E))
    E_inf = E[-1]
    frac = (E_star - E_inf) / (E[0] - E_inf)
    return PageSummary(t_star=float(t_star), S_star=float(S_star),
                       energy_fraction_at_t_star=float(np.clip(frac, 0.0, 1.0)))


# -- per-trajectory records --

def dense_records(L, trajectory, bath, clip_floor=CLIP_FLOOR):
    tau = gibbs_state(L.hamiltonian, bath.temperature)
    H = L.hamiltonian
    out = []
    for t, rho in zip(trajectory.times, trajectory.states):
        drho = L.apply(rho)
        w = np.linalg.eigvalsh(rho)
        S = _spectrum_entropy(w, clip_floor)
        E = float(np.trace(H @ rho).real)
        Q_dot = float(np.trace(H @ drho).real)
        S_dot, ill = _entropy_rate(drho, rho, clip_floor)
        sigma = entropy_production(S_dot, Q_dot, bath)
        lhs, rhs = landauer_margins(S_dot, Q_dot, bath)
        out.append(ThermoRecord(t=float(t), S=S, E=E, Q_dot=Q_dot, S_dot=S_dot, sigma=sigma,
                                rel_entropy=relative_entropy(rho, tau, clip_floor),
                                landauer_lhs=lhs, landauer_rhs=rhs, ill_conditioned=ill))
    return out


def _gaussian_entropy_rate(state, dsig, clip_floor):
    lam = gaussian.symplectic_eigenvalue(state)
    S = state.matrix
    ddet = dsig[0, 0] * S[1, 1] + S[0, 0] * dsig[1, 1] - 2 * S[0, 1] * dsig[0, 1]
    dlam = ddet / (2 * lam)
    gap = lam - 0.5
    ill = gap <= clip_floor and abs(dlam) > clip_floor
    return math.log((lam + 0.5) / max(gap, clip_floor)) * dlam, ill


def gaussian_records(cov_traj, g_down, g_up, bath, clip_floor=CLIP_FLOOR):
    w0 = cov_traj.omega0
    T = bath.temperature
    if T > 0:
        n_tau = 1.0 / math.expm1(w0 / T)
        S_tau = gaussian.entropy_from_lambda(n_tau + 0.5)
    out = []
    for t, st in zip(cov_traj.times, cov_traj.states):
        dsig = gaussian.covariance_derivative(st, w0, g_down, g_up)
        S = gaussian.gaussian_entropy(st)
        E = gaussian.energy(st, w0)
        Q_dot = float(w0 * (dsig[0, 0] + dsig[1, 1]) / 2)
        S_dot, ill = _gaussian_entropy_rate(st, dsig, clip_floor)
        if T > 0:
            rel = max(0.0, w0 * (st.mean_number - n_tau) / T - (S - S_tau))
        else:
            rel = 0.0 if st.mean_number <= clip_floor else math.inf
        sigma = entropy_production(S_dot, Q_dot, bath)
        lhs, rhs = landauer_margins(S_dot, Q_dot, bath)
        out.append(ThermoRecord(t=float(t), S=S, E=E, Q_dot=Q_dot, S_dot=S_dot, sigma=sigma,
                                rel_entropy=rel, landauer_lhs=lhs, landauer_rhs=rhs,
                                ill_conditioned=ill))
    return out


def write_records_csv(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "S", "E", "Qdot", "sigma", "relS", "landauer_lhs", "landauer_rhs"])
        for r in records:
            sigma = math.nan if r.sigma is None else r.sigma
            w.writerow([fmt(v) for v in (r.t, r.S, r.E, r.Q_dot, sigma, r.rel_entropy,
                                         r.landauer_lhs, r.landauer_rhs)])


# -- invariant suites --

@dataclass
class CheckReport:
    passed: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def add(self, name, ok, detail=""):
        self.passed[name] = bool(ok)
        self.details[name] = detail

    @property
    def ok(self):
        return all(self.passed.values())


def check_records(records, bath, pure_initial=False, steady_entropy=None):
    """Spohn, Landauer and endpoint checks over a list of ThermoRecord."""
    rep = CheckReport()
    if bath.temperature > 0:
        worst = min(r.sigma for r in records)
        rep.add("spohn", worst >= -SPOHN_TOL, f"min sigma = {worst:.3e}")
        margin = max(r.landauer_lhs - r.landauer_rhs for r in records)
        rep.add("landauer", margin <= LANDAUER_TOL, f"max(lhs - rhs) = {margin:.3e}")
        rel = [r.rel_entropy for r in records]
        rise = max((b - a for a, b in zip(rel, rel[1:])), default=0.0)
        rep.add("relative_entropy_monotone", rise <= REL_ENTROPY_STEP_TOL,
                f"largest per-step increase = {rise:.3e}")
    else:
        rep.add("spohn", True, "undefined at T = 0")
        q_max = max(r.Q_dot for r in records)
        implication = all(exothermic_if_decreasing(r.S_dot, r.Q_dot) for r in records)
        rep.add("landauer", q_max <= QDOT_COLD_TOL and implication,
                f"max Qdot = {q_max:.3e}; dS<0 => Q<0 holds: {implication}")

    notes = []
    ok = True
    if pure_initial:
        ok &= records[0].S <= PURE_START_TOL
        notes.append(f"S(0) = {records[0].S:.3e}")
    S_end = records[-1].S
    if bath.temperature == 0:
        ok &= S_end <= TERMINAL_TOL
        notes.append(f"S(t_end) = {S_end:.3e}")
    elif steady_entropy is not None:
        ok &= abs(S_end - steady_entropy) <= TERMINAL_TOL
        notes.append(f"|S(t_end) - S_steady| = {abs(S_end - steady_entropy):.3e}")
    rep.add("endpoints", ok, "; ".join(notes))
    return rep
