"""Declarative scenario configs and the run pipeline (davies -> integrator/gaussian -> thermo).

A config is one JSON document::

    {"name": "fig1_cold",
     "model": {"kind": "qubit", "epsilon0": 1.0},
     "bath": {"temperature": 0.0, "coupling_strength": 0.01},
     "initial_state": {"kind": "excited"},
     "controls": {"t_end": 2000.0, "dt_init": 0.1, "record_stride": 10},
     "outputs": {"trajectory_csv": "trajectory.csv", "thermo_csv": "thermo.csv",
                 "summary_json": "summary.json"}}
"""
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import gaussian, thermo
from .davies import BathSpec, GeneratorError, build_generator, thermal_rate
from .integrator import IntegrationControls, evolve, steady_state
from .opcore import gibbs_state, ladder, load_matrix, pauli

log = logging.getLogger(__name__)

CONVERGENCE_TOL = 1e-6

MODEL_KINDS = ("qubit", "oscillator", "custom")
STATE_KINDS = ("excited", "ground", "gibbs", "squeezed_vacuum", "matrix", "covariance")


class ConfigError(ValueError):
    def __init__(self, field_name, message):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class ModelSpec:
    kind: str
    epsilon0: float = 1.0
    omega0: float = 1.0
    representation: str = "gaussian"
    n_max: int = 40
    hs: str | None = None
    s: str | None = None

    def to_dict(self):
        if self.kind == "qubit":
            return {"kind": "qubit", "epsilon0": self.epsilon0}
        if self.kind == "oscillator":
            rep = {"kind": self.representation}
            if self.representation == "fock":
                rep["n_max"] = self.n_max
            return {"kind": "oscillator", "omega0": self.omega0, "representation": rep}
        return {"kind": "custom", "hs": self.hs, "s": self.s}


@dataclass
class InitialState:
    kind: str
    beta: float | None = None
    delta: float | None = None
    path: str | None = None
    sxx: float | None = None
    sxp: float | None = None
    spp: float | None = None

    def to_dict(self):
        return {k: v for k, v in asdict(self).items() if v is not None}


@dataclass
class Outputs:
    trajectory_csv: str | None = "trajectory.csv"
    thermo_csv: str | None = "thermo.csv"
    summary_json: str | None = "summary.json"

    def paths(self):
        return [p for p in (self.trajectory_csv, self.thermo_csv, self.summary_json) if p]


@dataclass
class ScenarioConfig:
    model: ModelSpec
    bath: BathSpec
    initial_state: InitialState
    controls: IntegrationControls
    outputs: Outputs = field(default_factory=Outputs)
    name: str = "scenario"
    base_dir: Path = field(default=Path("."), repr=False, compare=False)

    def to_dict(self):
        return {
            "name": self.name,
            "model": self.model.to_dict(),
            "bath": {"temperature": self.bath.temperature,
                     "coupling_strength": self.bath.coupling_strength},
            "initial_state": self.initial_state.to_dict(),
            "controls": asdict(self.controls),
            "outputs": asdict(self.outputs),
        }

    @property
    def gaussian(self):
        return self.model.kind == "oscillator" and self.model.representation == "gaussian"


# -- parsing --

def _number(doc, key, where, default=None, positive=False, nonneg=False):
    if key not in doc:
        if default is None:
            raise ConfigError(f"{where}.{key}", "is required")
        return default
    val = doc[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
        raise ConfigError(f"{where}.{key}", f"must be a finite number, got {val!r}")
    if positive and not val > 0:
        raise ConfigError(f"{where}.{key}", f"must be > 0, got {val!r}")
    if nonneg and not val >= 0:
        raise ConfigError(f"{where}.{key}", f"must be >= 0, got {val!r}")
    return float(val)


def _section(doc, key):
    sec = doc.get(key)
    if not isinstance(sec, dict):
        raise ConfigError(key, "missing or not an object")
    return sec


def _parse_model(doc):
    kind = doc.get("kind")
    if kind == "qubit":
        return ModelSpec(kind="qubit", epsilon0=_number(doc, "epsilon0", "model", positive=True))
    if kind == "oscillator":
        omega0 = _number(doc, "omega0", "model", positive=True)
        rep = doc.get("representation", {"kind": "gaussian"})
        if isinstance(rep, str):
            rep = {"kind": rep}
        rkind = rep.get("kind")
        if rkind == "gaussian":
            return ModelSpec(kind="oscillator", omega0=omega0, representation="gaussian")
        if rkind == "fock":
            n_max = rep.get("n_max", 40)
            if isinstance(n_max, bool) or not isinstance(n_max, int) or n_max < 2:
                raise ConfigError("model.representation.n_max", f"must be an integer >= 2, got {n_max!r}")
            return ModelSpec(kind="oscillator", omega0=omega0, representation="fock", n_max=n_max)
        raise ConfigError("model.representation.kind", f"must be gaussian or fock, got {rkind!r}")
    if kind == "custom":
        for key in ("hs", "s"):
            if not isinstance(doc.get(key), str):
                raise ConfigError(f"model.{key}", "must be a matrix file path")
        return ModelSpec(kind="custom", hs=doc["hs"], s=doc["s"])
    raise ConfigError("model.kind", f"must be one of {MODEL_KINDS}, got {kind!r}")


def _parse_state(doc):
    kind = doc.get("kind")
    if kind in ("excited", "ground"):
        return InitialState(kind=kind)
    if kind == "gibbs":
        return InitialState(kind=kind, beta=_number(doc, "beta", "initial_state", positive=True))
    if kind == "squeezed_vacuum":
        return InitialState(kind=kind, delta=_number(doc, "delta", "initial_state", positive=True))
    if kind == "matrix":
        if not isinstance(doc.get("path"), str):
            raise ConfigError("initial_state.path", "must be a matrix file path")
        return InitialState(kind=kind, path=doc["path"])
    if kind == "covariance":
        mean = doc.get("mean", [0.0, 0.0])
        if any(abs(float(m)) > 0 for m in mean):
            raise ConfigError("initial_state.mean", "nonzero first moments are not supported")
        st = InitialState(kind=kind,
                          sxx=_number(doc, "sxx", "initial_state", positive=True),
                          sxp=_number(doc, "sxp", "initial_state", default=0.0),
                          spp=_number(doc, "spp", "initial_state", positive=True))
        try:
            gaussian.CovarianceState(st.sxx, st.sxp, st.spp)
        except gaussian.UnphysicalStateError as exc:
            raise ConfigError("initial_state", str(exc)) from None
        return st
    raise ConfigError("initial_state.kind", f"must be one of {STATE_KINDS}, got {kind!r}")


def _parse_controls(doc, bath):
    t_end = _number(doc, "t_end", "controls", default=20.0 / bath.coupling_strength, positive=True)
    kwargs = dict(t_end=t_end, dt_init=_number(doc, "dt_init", "controls", default=t_end / 20000,
                                               positive=True))
    for key in ("rel_tol", "abs_tol", "leak_threshold"):
        if key in doc:
            kwargs[key] = _number(doc, key, "controls", positive=True)
    if "record_stride" in doc:
        rs = doc["record_stride"]
        if isinstance(rs, bool) or not isinstance(rs, int) or rs < 1:
            raise ConfigError("controls.record_stride", f"must be a positive integer, got {rs!r}")
        kwargs["record_stride"] = rs
    else:
        kwargs["record_stride"] = max(1, round(t_end / (2000 * kwargs["dt_init"])))
    try:
        return IntegrationControls(**kwargs)
    except ValueError as exc:
        raise ConfigError("controls", str(exc)) from None


def parse_config(doc, base_dir="."):
    if not isinstance(doc, dict):
        raise ConfigError("config", "top level must be a JSON object")
    model = _parse_model(_section(doc, "model"))
    bsec = _section(doc, "bath")
    temperature = _number(bsec, "temperature", "bath", nonneg=True)
    gamma = _number(bsec, "coupling_strength", "bath", positive=True)
    bath = BathSpec(temperature=temperature, coupling_strength=gamma)
    state = _parse_state(_section(doc, "initial_state"))
    controls = _parse_controls(doc.get("controls", {}), bath)
    osec = doc.get("outputs", {})
    if not isinstance(osec, dict):
        raise ConfigError("outputs", "must be an object")
    unknown = set(osec) - {"trajectory_csv", "thermo_csv", "summary_json"}
    if unknown:
        raise ConfigError("outputs", f"unknown keys {sorted(unknown)}")
    outputs = Outputs(**{**asdict(Outputs()), **osec})
    cfg = ScenarioConfig(model=model, bath=bath, initial_state=state, controls=controls,
                         outputs=outputs, name=str(doc.get("name", "scenario")),
                         base_dir=Path(base_dir))
    validate(cfg)
    return cfg


def validate(cfg):
    m, s = cfg.model, cfg.initial_state
    if m.kind == "oscillator" and m.representation == "gaussian":
        if s.kind not in ("covariance", "squeezed_vacuum"):
            raise ConfigError("initial_state.kind",
                              "gaussian representation needs a covariance or squeezed_vacuum initial state")
    elif s.kind == "covariance" and m.kind != "oscillator":
        raise ConfigError("initial_state.kind", "covariance initial state needs the oscillator model")
    if s.kind == "squeezed_vacuum" and m.kind != "oscillator":
        raise ConfigError("initial_state.kind", "squeezed_vacuum needs the oscillator model")
    if s.kind == "excited" and m.kind == "oscillator":
        raise ConfigError("initial_state.kind", "excited state is undefined for the oscillator")
    return cfg


def load_config(path):
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from None
    return parse_config(doc, base_dir=path.parent)


# -- built-in reference scenarios --

def _builtin_doc(name):
    gamma = 0.01
    controls = {"t_end": 20 / gamma, "dt_init": 0.1, "record_stride": 10}
    qubit = {"kind": "qubit", "epsilon0": 1.0}
    osc = {"kind": "oscillator", "omega0": 1.0, "representation": {"kind": "gaussian"}}
    table = {
        "fig1_cold": (qubit, 0.0, {"kind": "excited"}),
        "fig1_hot": (qubit, 1.0, {"kind": "excited"}),
        "fig2_cold_1e3": (osc, 0.0, {"kind": "squeezed_vacuum", "delta": 1e-3}),
        "fig2_cold_1e4": (osc, 0.0, {"kind": "squeezed_vacuum", "delta": 1e-4}),
        "fig2_hot": (osc, 10.0, {"kind": "squeezed_vacuum", "delta": 1e-3}),
    }
    model, T, state = table[name]
    return {"name": name, "model": model,
            "bath": {"temperature": T, "coupling_strength": gamma},
            "initial_state": state, "controls": controls}


BUILTINS = ("fig1_cold", "fig1_hot", "fig2_cold_1e3", "fig2_cold_1e4", "fig2_hot")


def builtin(name):
    if name not in BUILTINS:
        raise ConfigError("name", f"unknown built-in {name!r}; valid names: {', '.join(BUILTINS)}")
    return parse_config(_builtin_doc(name))


# -- running --

@dataclass
class RunResult:
    config: ScenarioConfig
    trajectory: object
    records: list
    page: thermo.PageSummary | None
    page_error: str | None
    checks: thermo.CheckReport

    @property
    def times(self):
        return np.array([r.t for r in self.records])

    @property
    def entropies(self):
        return np.array([r.S for r in self.records])

    def summary(self):
        page = self.page
        return {
            "scenario": self.config.name,
            "t_star": None if page is None else page.t_star,
            "S_star": None if page is None else page.S_star,
            "energy_fraction": None if page is None else page.energy_fraction_at_t_star,
            "page_error": self.page_error,
            "checks": dict(self.checks.passed),
            "check_details": dict(self.checks.details),
        }


def _resolve(cfg, p):
    p = Path(p)
    return p if p.is_absolute() else cfg.base_dir / p


def model_operators(cfg):
    """(H_S, S, leak_level) for the dense representation."""
    m = cfg.model
    if m.kind == "qubit":
        return 0.5 * m.epsilon0 * pauli("z"), pauli("x"), None
    if m.kind == "oscillator":
        a = ladder(m.n_max, "lower")
        return m.omega0 * ladder(m.n_max, "number"), a + a.conj().T, m.n_max - 1
    return load_matrix(_resolve(cfg, m.hs)), load_matrix(_resolve(cfg, m.s)), None


def _initial_covariance(s):
    if s.kind == "squeezed_vacuum":
        return gaussian.CovarianceState.squeezed_vacuum(s.delta)
    return gaussian.CovarianceState(s.sxx, s.sxp, s.spp)


def initial_density_matrix(cfg, H):
    s = cfg.initial_state
    d = H.shape[0]
    w, V = np.linalg.eigh(H)
    if s.kind in ("excited", "ground"):
        v = V[:, -1] if s.kind == "excited" else V[:, 0]
        return np.outer(v, v.conj())
    if s.kind == "gibbs":
        return gibbs_state(H, 1.0 / s.beta)
    if s.kind == "matrix":
        return load_matrix(_resolve(cfg, s.path))
    return gaussian.fock_projector_oracle(_initial_covariance(s), d)


def _run_dense(cfg):
    H, S, leak = model_operators(cfg)
    bath = cfg.bath
    L = build_generator(H, S, bath)
    rho0 = initial_density_matrix(cfg, H)
    traj = evolve(L, rho0, cfg.controls, leak_level=leak)
    records = thermo.dense_records(L, traj, bath)
    pure = abs(np.trace(rho0 @ rho0).real - 1) < 1e-12
    tau = gibbs_state(H, bath.temperature)
    checks = thermo.check_records(records, bath, pure_initial=pure,
                                  steady_entropy=thermo.von_neumann_entropy(tau))
    try:
        target = steady_state(L)
    except Exception as exc:  # non-unique kernel: fall back to Gibbs
        log.warning("steady_state failed (%s); comparing against Gibbs state", exc)
        target = tau
    dist = float(np.max(np.abs(traj.states[-1] - target)))
    checks.add("convergence", dist <= CONVERGENCE_TOL, f"max|rho(t_end) - rho_ss| = {dist:.3e}")
    return traj, records, checks


def oscillator_rates(cfg):
    w0 = cfg.model.omega0
    return thermal_rate(w0, cfg.bath), thermal_rate(-w0, cfg.bath)


def _run_gaussian(cfg):
    w0 = cfg.model.omega0
    bath = cfg.bath
    g_down, g_up = oscillator_rates(cfg)
    s0 = _initial_covariance(cfg.initial_state)
    traj = gaussian.covariance_trajectory(s0, w0, g_down, g_up, cfg.controls.record_times())
    records = thermo.gaussian_records(traj, g_down, g_up, bath)
    n_inf = g_up / (g_down - g_up)
    steady = gaussian.CovarianceState.thermal(n_inf)
    checks = thermo.check_records(records, bath, pure_initial=abs(s0.det - 0.25) < 1e-12,
                                  steady_entropy=gaussian.gaussian_entropy(steady))
    dist = float(np.max(np.abs(traj.states[-1].matrix - steady.matrix)))
    checks.add("convergence", dist <= CONVERGENCE_TOL, f"max|Sigma(t_end) - Sigma_ss| = {dist:.3e}")
    return traj, records, checks


def run(cfg, out_dir=None):
    """Run a scenario; write its declared outputs into ``out_dir`` when given."""
    written = []
    try:
        traj, records, checks = _run_gaussian(cfg) if cfg.gaussian else _run_dense(cfg)
        try:
            page = thermo.page_summary([r.t for r in records], [r.S for r in records],
                                       [r.E for r in records])
            page_error = None
        except (thermo.WindowTooShortError, ValueError) as exc:
            page, page_error = None, str(exc)
        result = RunResult(cfg, traj, records, page, page_error, checks)
        if out_dir is not None:
            out_dir = Path(out_dir)
            out_dir.mkdir(parents=True, exist_ok=True)
            o = cfg.outputs
            if o.trajectory_csv:
                written.append(out_dir / o.trajectory_csv)
                traj.write_csv(written[-1])
            if o.thermo_csv:
                written.append(out_dir / o.thermo_csv)
                thermo.write_records_csv(written[-1], records)
            if o.summary_json:
                written.append(out_dir / o.summary_json)
                written[-1].write_text(json.dumps(result.summary(), indent=2))
        return result
    except Exception:
        for p in written:
            p.unlink(missing_ok=True)
        raise


__all__ = ["ConfigError", "GeneratorError", "ScenarioConfig", "builtin", "load_config",
           "parse_config", "run", "BUILTINS"]
