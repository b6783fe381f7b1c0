"""Long-time experiments on the oscillator family.

Invariant drift under the different steppers, rotation numbers from
trajectory fits, Poincare sections at the subsystem section, perturbation
scans and the frequency map.

A trend in an invariant is called *secular* when its least-squares slope
exceeds five standard errors and the drift it implies over the horizon is
more than ten times the drift of the same invariant in an unperturbed
reference-solver control run.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from . import floquet as fl
from .catalogue import perturbation as named_perturbation
from .errors import InsufficientData, InsufficientGrid, NoCrossings, OmegaZero
from .integrators import StepperConfig, Trajectory, integrate, reversibility_defect
from .model import SystemSpec, hamiltonian
from .reduction import induced_field, lift_to_perturbed, reduced_field

__all__ = [
    "QUANTITIES",
    "SIGNIFICANCE",
    "CONTROL_FACTOR",
    "ols_trend",
    "DriftReport",
    "Torus",
    "torus_for",
    "invariant_drift",
    "drift_from_trajectory",
    "energy_series",
    "RotationEstimate",
    "rotation_numbers",
    "Section",
    "poincare_section",
    "ScanRow",
    "ScanResult",
    "initial_state_for_seed",
    "kam_scan",
    "FrequencyMap",
    "frequency_map",
    "format_float",
]

QUANTITIES = ("H", "u", "a", "b", "c")
SCAN_QUANTITIES = ("H", "a", "b", "c")
SIGNIFICANCE = 5.0
CONTROL_FACTOR = 10.0
MIN_PERIODS = 50
DEPENDENT_TOL = 1e-8


def format_float(x) -> str:
    """Shortest decimal string that round-trips to the same double."""
    return repr(float(x))


def ols_trend(t, y):
    """Least-squares slope of ``y`` against ``t`` and its standard error."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    n = t.size
    if n < 3:
        raise InsufficientData("a trend fit needs at least 3 samples")
    tc = t - t.mean()
    sxx = float(tc @ tc)
    slope = float(tc @ (y - y.mean())) / sxx
    r = y - y.mean() - slope * tc
    se = math.sqrt(float(r @ r) / (n - 2) / sxx)
    return slope, se


@dataclass
class DriftReport:
    """Deviation of each invariant from its initial value along a run.

    ``deviations[q][0]`` is exactly zero.  Quantities that could not be
    evaluated (``b`` and ``c`` on resonant tori) are absent.
    """

    times: np.ndarray
    deviations: dict
    max_drift: dict
    slope: dict
    stderr: dict
    method: str = ""
    h: float = float("nan")

    @property
    def labels(self):
        return tuple(self.deviations)

    @property
    def horizon(self) -> float:
        return float(self.times[-1] - self.times[0])

    def ci(self, q: str, z: float = 1.96):
        return self.slope[q] - z * self.stderr[q], self.slope[q] + z * self.stderr[q]

    def t_stat(self, q: str) -> float:
        s, se = self.slope[q], self.stderr[q]
        if se == 0.0:
            return 0.0 if s == 0.0 else math.inf
        return abs(s) / se

    def significant(self, q: str) -> bool:
        """Slope beyond ``SIGNIFICANCE`` standard errors."""
        return self.t_stat(q) > SIGNIFICANCE

    def secular(self, q: str, control: float = 0.0) -> bool:
        """Significant and larger than ``CONTROL_FACTOR`` times ``control``."""
        return self.significant(q) and abs(self.slope[q]) * self.horizon > CONTROL_FACTOR * control


@dataclass(frozen=True)
class Torus:
    orbit: fl.SubsystemOrbit
    fd: Optional[fl.FloquetData]

    @property
    def trackable(self) -> bool:
        fd = self.fd
        return fd is not None and not fd.resonant_flag and fd.axis is not None


def torus_for(spec: SystemSpec, s0) -> Torus:
    """Unperturbed torus through the reduced state ``s0``."""
    base = spec.unperturbed()
    q3, p3 = float(s0[2]), float(s0[4])
    orbit = fl.subsystem_orbit(base, base.subsystem.F(q3, p3), seed=q3)
    try:
        fd = fl.monodromy(base, orbit)
    except OmegaZero:
        fd = None
    return Torus(orbit, fd)


def energy_series(spec: SystemSpec, states) -> np.ndarray:
    """Energy (``H_eps`` for perturbed specs) at each reduced-chart state."""
    if spec.perturbed:
        return np.array([hamiltonian(spec, lift_to_perturbed(spec, s)) for s in states])
    u = fl.u_coords(spec, states)
    F = spec.subsystem.F
    return 0.5 * np.sum(u * u, axis=1) + np.array([F(q3, p3) for q3, p3 in zip(states[:, 2], states[:, 4])])


def drift_from_trajectory(spec: SystemSpec, traj: Trajectory, torus: Optional[Torus] = None) -> DriftReport:
    """Invariant deviations along ``traj`` measured in the unperturbed chart.

    ``H`` is the (possibly perturbed) energy, ``u`` the norm of the linear
    oscillator block, ``a, b, c`` the action-angle invariants of the
    unperturbed torus through the first state.
    """
    states = traj.states
    base = spec.unperturbed()
    series = {"H": energy_series(spec, states), "u": np.linalg.norm(fl.u_coords(base, states), axis=1)}
    torus = torus if torus is not None else torus_for(spec, states[0])
    F = base.subsystem.F
    if torus.trackable:
        aa = fl.action_angle_batch(base, torus.orbit, torus.fd, states)
        series.update(a=aa[:, 0], b=aa[:, 1], c=aa[:, 2])
    else:
        series["a"] = np.array([F(q3, p3) for q3, p3 in zip(states[:, 2], states[:, 4])])
    dev, mx, sl, se = {}, {}, {}, {}
    for q, y in series.items():
        d = y - y[0]
        dev[q] = d
        mx[q] = float(np.max(np.abs(d)))
        sl[q], se[q] = ols_trend(traj.times, d)
    return DriftReport(traj.times, dev, mx, sl, se, traj.method_label, traj.meta.get("h", float("nan")))


def _field(spec):
    return induced_field(spec) if spec.perturbed else reduced_field(spec)


def invariant_drift(spec: SystemSpec, s0, method_cfg: StepperConfig, T: float, sample_dt: float = 1.0,
                    torus: Optional[Torus] = None) -> DriftReport:
    """Integrate from the reduced state ``s0`` and report invariant drift.

    Perturbed specs are integrated with the induced field on the unperturbed
    manifold, so all invariants are read through the same chart.
    """
    traj = integrate(_field(spec), s0, T, method_cfg, sample_dt)
    return drift_from_trajectory(spec, traj, torus)


# --- frequencies from trajectories ------------------------------------------

@dataclass(frozen=True)
class RotationEstimate:
    omega: float
    xi: float
    resid_theta: float
    resid_phi: float


def _linear_fit(t, y):
    X = np.column_stack([t, np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    return float(coef[0]), float(np.max(np.abs(X @ coef - y)))


def rotation_numbers(spec: SystemSpec, orbit, fd, trajectory: Trajectory,
                     min_periods: float = MIN_PERIODS) -> RotationEstimate:
    """Slopes of the unwrapped angles ``theta(t)`` and ``phi(t)``.

    Raises
    ------
    InsufficientData
        If the trajectory spans fewer than ``min_periods`` subsystem periods.
    """
    t = trajectory.times
    span = t[-1] - t[0]
    if orbit.is_equilibrium or span * orbit.omega < min_periods:
        raise InsufficientData(
            f"trajectory covers {span * orbit.omega:.3g} subsystem periods, need {min_periods}"
        )
    aa = fl.action_angle_batch(spec, orbit, fd, trajectory.states)
    om, rt = _linear_fit(t, np.unwrap(aa[:, 3], period=1.0))
    xi, rp = _linear_fit(t, np.unwrap(aa[:, 4], period=1.0))
    return RotationEstimate(om, xi, rt, rp)


# --- Poincare section -------------------------------------------------------

@dataclass
class Section:
    """Returns to the subsystem section ``theta = 0``.

    ``bcphi`` holds ``(b, c, phi)`` per return when the torus has a
    rotation plane, else ``None``.
    """

    times: np.ndarray
    u: np.ndarray
    bcphi: Optional[np.ndarray]

    def __len__(self):
        return self.times.size


def _cubic_at(x, xs, ys):
    # Lagrange interpolation through up to four neighbouring samples
    w = np.ones(len(xs))
    for j in range(len(xs)):
        for m in range(len(xs)):
            if m != j:
                w[j] *= (x - xs[m]) / (xs[j] - xs[m])
    return w @ ys


def poincare_section(spec: SystemSpec, orbit, fd, trajectory: Trajectory) -> Section:
    """Interpolated states where the orbit phase passes through zero.

    Crossing times are located on the solver's continuous solution when the
    trajectory carries one (``meta["sol"]``, from ``reference_solve`` with
    ``dense_output``); otherwise on a local cubic through the samples, which
    limits the accuracy to the fourth power of the sample spacing.

    Raises
    ------
    NoCrossings
        If the phase never wraps (e.g. the subsystem sits at rest).
    """
    S = trajectory.states
    t = trajectory.times
    if orbit.is_equilibrium:
        raise NoCrossings("the subsystem is at an equilibrium")
    th = np.unwrap(orbit.phase(spec, S[:, 2], S[:, 4]), period=1.0)
    k = np.floor(th)
    idx = np.nonzero(np.diff(k) != 0)[0]
    if idx.size == 0:
        raise NoCrossings("trajectory does not cross the section")
    use_bc = fd is not None and not fd.resonant_flag and fd.axis is not None
    sol = trajectory.meta.get("sol")
    times, states = [], []
    for i in idx:
        target = k[i + 1]
        if sol is not None:
            def g(x):
                y = sol(x)
                return (orbit.phase(spec, y[2], y[4])[0] + 0.5) % 1.0 - 0.5

            tc = brentq(g, t[i], t[i + 1], xtol=1e-14, rtol=1e-15) if g(t[i + 1]) != 0 else t[i + 1]
            states.append(sol(tc))
        else:
            lo, hi = max(0, i - 1), min(len(t), i + 3)
            # invert theta(t) = target on the local cubic, then interpolate
            tt = t[lo:hi]
            tc = t[i] + (target - th[i]) / (th[i + 1] - th[i]) * (t[i + 1] - t[i])
            for _ in range(3):
                gv = _cubic_at(tc, tt, th[lo:hi]) - target
                dg = (_cubic_at(tc + 1e-7, tt, th[lo:hi]) - _cubic_at(tc - 1e-7, tt, th[lo:hi])) / 2e-7
                tc -= gv / dg
            states.append(_cubic_at(tc, tt, S[lo:hi]))
        times.append(tc)
    states = np.array(states)
    bc = None
    if use_bc:
        states[:, 2], states[:, 4] = orbit.theta_param(0.0)
        bc = fl.action_angle_batch(spec, orbit, fd, states)[:, [1, 2, 4]]
    return Section(np.array(times), fl.u_coords(spec, states), bc)


# --- perturbation scans -------------------------------------------------------

@dataclass(frozen=True)
class ScanRow:
    g_label: str
    epsilon: float
    method: str
    h: float
    T: float
    seed: int
    max_drift: dict
    slope: dict
    stderr: dict
    rev_defect: float
    verdict: str

    def key(self):
        return (self.g_label, self.epsilon, self.method, self.h, self.seed)


CSV_COLUMNS = (
    ["g_label", "epsilon", "method", "h", "T", "seed"]
    + [f"max_drift_{q}" for q in SCAN_QUANTITIES]
    + [f"slope_{q}" for q in SCAN_QUANTITIES]
    + [f"slope_stderr_{q}" for q in SCAN_QUANTITIES]
    + ["rev_defect", "verdict"]
)


def _nan_or(d, q):
    return d.get(q, float("nan"))


@dataclass
class ScanResult:
    rows: list
    seeds: tuple
    controls: dict = field(default_factory=dict)

    def sorted_rows(self):
        return sorted(self.rows, key=ScanRow.key)

    def csv_lines(self):
        yield ",".join(CSV_COLUMNS)
        for r in self.sorted_rows():
            vals = [r.g_label, format_float(r.epsilon), r.method, format_float(r.h), format_float(r.T), str(r.seed)]
            for part in (r.max_drift, r.slope, r.stderr):
                vals += [format_float(_nan_or(part, q)) for q in SCAN_QUANTITIES]
            vals += [format_float(r.rev_defect), r.verdict]
            yield ",".join(vals)

    def to_csv(self, header: Sequence[str] = ()) -> str:
        buf = io.StringIO()
        for line in header:
            buf.write(f"# {line}\n")
        for line in self.csv_lines():
            buf.write(line + "\n")
        return buf.getvalue()

    def to_json(self) -> dict:
        def clean(d):
            return {q: (None if not math.isfinite(v) else v) for q, v in d.items()}

        return {
            "seeds": list(self.seeds),
            "controls": {str(k): clean(v) for k, v in sorted(self.controls.items())},
            "rows": [
                {
                    "g_label": r.g_label, "epsilon": r.epsilon, "method": r.method, "h": r.h, "T": r.T,
                    "seed": r.seed, "max_drift": clean(r.max_drift), "slope": clean(r.slope),
                    "slope_stderr": clean(r.stderr), "rev_defect": r.rev_defect, "verdict": r.verdict,
                }
                for r in self.sorted_rows()
            ],
        }


def initial_state_for_seed(spec: SystemSpec, seed: int) -> np.ndarray:
    """Deterministic reduced initial state drawn from ``seed``.

    ``p3 = 0`` puts the subsystem on its section; ``q3`` is kept inside
    ``[0.4, 0.9]`` so catalogue couplings with ``q3 < 1`` stay valid.
    """
    rng = np.random.default_rng(seed)
    q1, q2, p = rng.uniform(-0.5, 0.5, size=3)
    q3 = rng.uniform(0.4, 0.9)
    return np.array([q1, q2, q3, p, 0.0])


def _resolve_g(g):
    if g is None or isinstance(g, str):
        return ("none" if g is None else g), (named_perturbation(g) if g else None)
    return g.label, g


def _method_cfg(m, h, base: Optional[StepperConfig]):
    if isinstance(m, StepperConfig):
        return m
    base = base or StepperConfig()
    return StepperConfig(method=m, h=h, newton_tol=base.newton_tol, newton_max_iters=base.newton_max_iters,
                         reference_tol=base.reference_tol)


def kam_scan(spec: SystemSpec, perturbations, eps_grid, methods, T: float, seeds, h: float = 0.05,
             sample_dt: float = 1.0, initial_state=None, stepper: Optional[StepperConfig] = None,
             threads: int = 1) -> ScanResult:
    """Drift of the unperturbed invariants over a grid of perturbations.

    Every ``(G, eps, method, seed)`` cell integrates the induced field of
    ``H_0 + eps G`` from the same initial state and classifies each of
    ``H, a, b, c`` as bounded or secular against an unperturbed
    reference-solver control run.  ``eps = 0`` cells are always included.

    Parameters
    ----------
    perturbations : names from the catalogue or :class:`Perturbation` objects
    methods : method names (using step ``h``) or :class:`StepperConfig` objects
    initial_state : reduced state shared by all seeds; drawn from each seed
        with :func:`initial_state_for_seed` when omitted
    threads : worker threads; results do not depend on it
    """
    base = spec.unperturbed()
    eps_grid = sorted({0.0, *map(float, eps_grid)})
    gs = [_resolve_g(g) for g in perturbations]
    cfgs = [_method_cfg(m, h, stepper) for m in methods]
    seeds = tuple(int(s) for s in seeds)
    starts = {
        s: np.asarray(initial_state, dtype=float) if initial_state is not None else initial_state_for_seed(base, s)
        for s in seeds
    }
    tori = {s: torus_for(base, starts[s]) for s in seeds}
    ref = _method_cfg("reference", h, stepper)

    tasks = [("control", None, 0.0, ref, s) for s in seeds]
    for cfg in cfgs:
        for s in seeds:
            tasks.append(("run", None, 0.0, cfg, s))
            for _, g in gs:
                for eps in eps_grid:
                    if eps > 0:
                        tasks.append(("run", g, eps, cfg, s))

    def work(task):
        kind, g, eps, cfg, s = task
        sp = base.with_perturbation(g, eps)
        rep = invariant_drift(sp, starts[s], cfg, T, sample_dt, tori[s])
        rev = reversibility_defect(_field(sp), cfg.method, starts[s], cfg.h, cfg)
        return rep, rev

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(work, tasks))
    else:
        results = [work(t) for t in tasks]

    controls, rows = {}, []
    out = list(zip(tasks, results))
    for (kind, g, eps, cfg, s), (rep, _) in out:
        if kind == "control":
            controls[s] = dict(rep.max_drift)

    def make_row(label, eps, cfg, s, rep, rev):
        ctl = controls[s]
        secular = any(rep.secular(q, ctl.get(q, 0.0)) for q in SCAN_QUANTITIES if q in rep.slope)
        return ScanRow(label, eps, cfg.method, cfg.h, float(T), s, dict(rep.max_drift), dict(rep.slope),
                       dict(rep.stderr), rev, "secular" if secular else "bounded")

    for (kind, g, eps, cfg, s), (rep, rev) in out:
        if kind == "control":
            continue
        if g is None:
            for label, _ in gs:
                rows.append(make_row(label, 0.0, cfg, s, rep, rev))
        else:
            rows.append(make_row(g.label, eps, cfg, s, rep, rev))
    return ScanResult(rows, seeds, controls)


# --- frequency map ------------------------------------------------------------

@dataclass
class FrequencyMap:
    """Frequencies over a grid of torus labels with the independence verdict.

    ``c`` is the least-squares constant in ``xi ~ c omega`` and
    ``max_residual`` the worst deviation from it.  ``ratio_variation`` is the
    spread of ``xi / omega`` and ``ratio_error`` an estimate of its numerical
    error from a second monodromy solve at a looser tolerance.
    """

    rows: list
    skipped: list
    c: float
    max_residual: float
    ratio_variation: float
    ratio_error: float
    verdict: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def frequency_map(spec: SystemSpec, a_grid, tol: float = fl.ODE_TOL, min_points: int = 10,
                  threads: int = 1) -> FrequencyMap:
    """Tabulate ``(a, omega, xi)`` and decide whether ``xi`` is a multiple of ``omega``.

    Half-turn tori are skipped and listed.  The verdict is ``"dependent"``
    when the best single-constant fit leaves a maximum residual below
    ``1e-8`` and ``"independent"`` otherwise.

    Raises
    ------
    InsufficientGrid
        With fewer than ``min_points`` usable grid points.
    """
    base = spec.unperturbed()

    def one(a):
        orbit = fl.subsystem_orbit(base, float(a))
        fd = fl.monodromy(base, orbit, tol)
        if fd.half_turn:
            return None
        loose = fl.monodromy(base, orbit, tol * 1e3)
        err = abs(fd.sigma - loose.sigma) / (2.0 * math.pi)
        return {"a": float(a), "omega": fd.omega, "xi": fd.xi, "sigma": fd.sigma,
                "resonant_flag": fd.resonant_flag}, err

    grid = list(a_grid)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            res = list(ex.map(one, grid))
    else:
        res = [one(a) for a in grid]
    rows, skipped, errs = [], [], []
    for a, r in zip(grid, res):
        if r is None:
            skipped.append(float(a))
        else:
            rows.append(r[0])
            errs.append(r[1])
    if len(rows) < min_points:
        raise InsufficientGrid(f"{len(rows)} usable grid points, need {min_points}")
    om = np.array([r["omega"] for r in rows])
    xi = np.array([r["xi"] for r in rows])
    c = float(om @ xi / (om @ om))
    resid = float(np.max(np.abs(xi - c * om)))
    ratio = xi / om
    verdict = "dependent" if resid < DEPENDENT_TOL else "independent"
    return FrequencyMap(rows, skipped, c, resid, float(np.ptp(ratio)), float(max(errs)), verdict)
