"""Field-line integration, Poincare sections and rotation numbers.

Field lines ``x' = X(x)`` are integrated with the Dormand-Prince 5(4)
pair and its quartic dense output. The local error estimate is controlled
per unit step: a step ``h`` is accepted when ``max|err| / h <= tol``.

On the torus the state holds unwrapped coordinates, so winding counters are
just ``floor(x) - floor(x0)`` per axis and Poincare planes repeat with
period one. On the sphere the state lives in a stereographic chart and is
moved to the opposite chart whenever it leaves the ball of radius 2.
Arc length is carried as a fourth state variable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import brentq

from . import chartcalc as cc
from .chartcalc import ChartedField, FlatTorus3, PointField, RoundSphere3, SPHERE_CHART_RADIUS
from .errors import PreconditionError, StalledAtZero
from .spectral import SpectralField

# Dormand-Prince 5(4) tableau
DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_DP_ROWS = [np.array(row) for row in DP_A]
DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# fifth-order minus embedded fourth-order weights, 7th stage is the FSAL one
DP_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# dense output: y(t + s h) = y + h K^T P [s, s^2, s^3, s^4]
DP_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_STEP = 0.1
MAX_TORUS_JUMP = 0.5
STALL_SPEED = 1e-12


# ---------------------------------------------------------------------------
# field evaluation


def _point_evaluator(model, X) -> Callable[[np.ndarray, str], np.ndarray]:
    """``(p, chart) -> X(p)`` for spectral, point and charted fields."""
    if isinstance(X, SpectralField):
        return lambda p, chart: X(p)
    if isinstance(X, ChartedField):
        return lambda p, chart: X.on(chart)(p)
    if isinstance(X, PointField):
        if isinstance(model, FlatTorus3) and X.domain is None:
            return lambda p, chart: X(model.wrap(p))
        return lambda p, chart: X(p)
    if callable(X):
        return lambda p, chart: np.asarray(X(p), dtype=float)
    raise TypeError(f"cannot evaluate {X!r}")


def _chart_model(model, chart):
    return RoundSphere3(chart) if isinstance(model, RoundSphere3) else model


def _speed(model, chart, p, v) -> float:
    """Riemannian length of a single vector ``v`` at ``p``."""
    p, v = p.reshape(3), v.reshape(3)
    e = math.sqrt(float(v @ v))
    if isinstance(model, FlatTorus3):
        return e
    # conformal stereographic metric 4 / (1 + r^2)^2
    return 2.0 * e / (1.0 + float(p @ p))


# ---------------------------------------------------------------------------
# stepper


@dataclass
class _Step:
    t0: float
    h: float
    y0: np.ndarray
    y1: np.ndarray
    K: np.ndarray
    err: float
    chart: str


class DormandPrince:
    """Adaptive DOPRI5 stepper for ``x' = X(x)`` with arc length as a 4th state.

    Args:
        model: manifold model; decides wrapping and chart switching.
        X: field (SpectralField, PointField, ChartedField or callable).
        x0: start point in chart coordinates.
        tol: allowed local error per unit step.
        max_step: largest step in the flow parameter.
        arc_length: integrate ``X / |X|_g`` so that the parameter is arc length.
        chart: starting chart on the sphere.
    """

    def __init__(self, model, X, x0, tol=DEFAULT_TOL, max_step=DEFAULT_MAX_STEP, arc_length=False, chart=None, h0=None):
        if tol <= 0 or max_step <= 0:
            raise ValueError("tol and max_step must be positive")
        self.model = model
        self.eval = _point_evaluator(model, X)
        self.tol = float(tol)
        self.max_step = float(max_step)
        self.arc_length = arc_length
        self.torus = isinstance(model, FlatTorus3)
        self.chart = chart or getattr(model, "chart", "torus")
        x0 = cc.as_points(x0).reshape(3)
        self.t = 0.0
        self.y = np.concatenate([x0, [0.0]])
        self.h = min(self.max_step, 0.01) if h0 is None else float(h0)
        self.k_first = self._rhs(self.y)

    def _rhs(self, y):
        p = y[:3]
        v = np.asarray(self.eval(p[None, :], self.chart), dtype=float).reshape(3)
        speed = _speed(self.model, self.chart, p[None, :], v[None, :])
        if not np.isfinite(speed):
            raise StalledAtZero("field is not finite", location=p.copy(), t=self.t)
        if speed < STALL_SPEED:
            raise StalledAtZero(f"field vanishes (|X| = {speed:.2e})", location=p.copy(), t=self.t)
        if self.arc_length:
            return np.concatenate([v / speed, [1.0]])
        return np.concatenate([v, [speed]])

    def _attempt(self, h):
        K = np.empty((7, 4))
        K[0] = self.k_first
        for s in range(1, 6):
            dy = h * (_DP_ROWS[s] @ K[:s])
            K[s] = self._rhs(self.y + dy)
        y1 = self.y + h * (DP_B @ K[:6])
        K[6] = self._rhs(y1)
        err_vec = h * (DP_E @ K)
        return y1, K, float(np.max(np.abs(err_vec[:3]))) / h

    def step(self, t_limit: float) -> _Step:
        """Advance by one accepted step, never past ``t_limit``."""
        while True:
            h = min(self.h, self.max_step, t_limit - self.t)
            if h <= 1e-13 * max(1.0, abs(self.t)):
                raise StalledAtZero("step size underflow", location=self.y[:3].copy(), t=self.t)
            y1, K, err = self._attempt(h)
            jump = np.max(np.abs(y1[:3] - self.y[:3]))
            ratio = err / self.tol
            if ratio <= 1.0 and not (self.torus and jump > MAX_TORUS_JUMP):
                break
            factor = 0.5 if ratio <= 1.0 else max(0.2, 0.9 * ratio ** -0.25)
            self.h = h * factor
        rec = _Step(self.t, h, self.y.copy(), y1, K, err, self.chart)
        clamped = h < min(self.h, self.max_step)
        if not clamped:
            factor = 5.0 if ratio == 0 else min(5.0, max(0.2, 0.9 * ratio ** -0.25))
            self.h = min(h * factor, self.max_step)
        self.t = self.t + h
        self.y = y1
        self.k_first = K[6]
        if isinstance(self.model, RoundSphere3) and np.linalg.norm(self.y[:3]) > SPHERE_CHART_RADIUS:
            self._switch_chart()
        return rec

    def _switch_chart(self):
        m = RoundSphere3(self.chart)
        self.y = np.concatenate([m.transition(self.y[None, :3])[0], self.y[3:]])
        self.chart = m.other().chart
        self.k_first = self._rhs(self.y)


def dense_state(step: _Step, theta) -> np.ndarray:
    """State at ``t0 + theta h`` from the step's dense output; ``theta`` in [0, 1]."""
    theta = np.asarray(theta, dtype=float)
    powers = np.stack([theta, theta**2, theta**3, theta**4], axis=-1)
    Q = step.K.T @ DP_P  # (4, 4)
    return step.y0 + step.h * (powers @ Q.T)


# ---------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True)
class Trajectory:
    """Integrated field line.

    Attributes:
        model: the manifold model.
        t: flow parameter at each sample (arc length when ``arc_length``).
        points: chart points; wrapped into ``[0, 1)^3`` on the torus.
        unwrapped: continuous torus coordinates (equal to ``points`` elsewhere).
        charts: chart name for every sample.
        errors: local error per unit step of the step ending at each sample.
        windings: integer winding counters per axis (torus only, zeros otherwise).
        arc: arc length along the line.
        steps: accepted steps with their stages, for dense output.
    """

    model: object
    t: np.ndarray
    points: np.ndarray
    unwrapped: np.ndarray
    charts: tuple[str, ...]
    errors: np.ndarray
    windings: np.ndarray
    arc: np.ndarray
    arc_length: bool = False
    steps: tuple = field(default=(), repr=False)

    def __len__(self):
        return len(self.t)

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]

    def ambient(self) -> np.ndarray:
        """Points in R^4 (sphere only)."""
        if not isinstance(self.model, RoundSphere3):
            raise PreconditionError("ambient coordinates exist only on the sphere")
        out = np.empty((len(self.t), 4))
        for chart in set(self.charts):
            sel = np.array([c == chart for c in self.charts])
            out[sel] = RoundSphere3(chart).to_ambient(self.unwrapped[sel])
        return out

    def return_distance(self, skip: float = 0.1) -> tuple[float, float]:
        """Smallest ambient distance to the start after the first ``skip`` fraction; ``(distance, t)``."""
        amb = self.ambient()
        d = np.linalg.norm(amb - amb[0], axis=1)
        start = int(np.searchsorted(self.t, skip * self.t[-1]))
        i = start + int(np.argmin(d[start:]))
        return float(d[i]), float(self.t[i])


def _winding(model, unwrapped, start):
    if not isinstance(model, FlatTorus3):
        return np.zeros(unwrapped.shape, dtype=np.int64)
    L = np.asarray(model.L)
    return (np.floor(unwrapped / L) - np.floor(start / L)).astype(np.int64)


def _assemble(model, stepper_x0, chart0, steps: Sequence[_Step], end_chart, arc_length) -> Trajectory:
    n = len(steps) + 1
    states = np.empty((n, 4))
    states[0] = np.concatenate([stepper_x0, [0.0]])
    t = np.empty(n)
    t[0] = 0.0
    charts = [chart0]
    errs = np.zeros(n)
    for i, s in enumerate(steps):
        t[i + 1] = s.t0 + s.h
        states[i + 1] = s.y1
        errs[i + 1] = s.err
        charts.append(s.chart)
    unwrapped = states[:, :3]
    if isinstance(model, FlatTorus3):
        points = model.wrap(unwrapped)
    else:
        points = unwrapped.copy()
    # samples record the chart in which y1 was computed; a switch happens after
    winding = _winding(model, unwrapped, unwrapped[0])
    return Trajectory(model, t, points, unwrapped, tuple(charts), errs, winding, states[:, 3], arc_length, tuple(steps))


def integrate(
    model,
    X,
    x0,
    t_end: float,
    tol: float = DEFAULT_TOL,
    max_step: float = DEFAULT_MAX_STEP,
    arc_length: bool = False,
    chart: str | None = None,
) -> Trajectory:
    """Integrate the field line of ``X`` through ``x0`` up to parameter ``t_end``.

    Args:
        model: ``FlatTorus3`` or ``RoundSphere3``.
        X: the field.
        x0: start point in chart coordinates.
        t_end: final flow parameter, or arc length when ``arc_length``.
        tol: local error per unit step.
        max_step: step cap.
        arc_length: use arc length as the parameter.
        chart: starting sphere chart (defaults to the model's chart).

    Raises:
        StalledAtZero: the field vanishes on the path or the step underflows.
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    st = DormandPrince(model, X, x0, tol, max_step, arc_length, chart)
    x_start, chart0 = st.y[:3].copy(), st.chart
    steps = []
    while st.t < t_end:
        steps.append(st.step(t_end))
        if t_end - st.t <= 1e-14 * max(1.0, t_end):
            break
    return _assemble(model, x_start, chart0, steps, st.chart, arc_length)


def _scalar_evaluator(model, f):
    if isinstance(f, (int, float)):
        return lambda p, chart: np.full(len(p), float(f))
    return _point_evaluator(model, f)


def first_integral_drift(traj: Trajectory, f) -> float:
    """``max_t |f(x(t)) - f(x(0))|`` over the trajectory samples."""
    ev = _scalar_evaluator(traj.model, f)
    pts = traj.unwrapped
    vals = np.empty(len(pts))
    for chart in dict.fromkeys(traj.charts):
        sel = np.array([c == chart for c in traj.charts])
        vals[sel] = np.asarray(ev(pts[sel], chart), dtype=float).reshape(-1)
    return float(np.max(np.abs(vals - vals[0])))


# ---------------------------------------------------------------------------
# Poincare sections


AXIS_NAMES = {"x": 0, "y": 1, "z": 2, "x1": 0, "x2": 1, "x3": 2, "x4": 3}


@dataclass(frozen=True)
class Section:
    """Coordinate plane ``x_axis = value``.

    On the torus the plane is taken modulo 1; on the sphere ``axis`` indexes
    the ambient coordinates ``x1..x4``. ``direction`` is +1 (increasing
    coordinate), -1, or 0 for both (each crossing is tagged).
    """

    axis: int
    value: float
    direction: int = 0

    def __post_init__(self):
        if self.direction not in (-1, 0, 1):
            raise ValueError("direction must be -1, 0 or +1")

    @classmethod
    def parse(cls, text: str, direction: int = 0) -> "Section":
        name, _, val = text.replace(" ", "").partition("=")
        if name not in AXIS_NAMES or not val:
            raise ValueError(f"cannot parse section {text!r}; expected e.g. 'z=0'")
        return cls(AXIS_NAMES[name], float(val), direction)

    def label(self) -> str:
        return f"x{self.axis + 1}={self.value:g}"

    def to_dict(self) -> dict:
        return {"axis": self.axis, "value": self.value, "direction": self.direction}


@dataclass(frozen=True)
class PoincareRecord:
    """Crossings of one seed's field line with a section."""

    section: Section
    seed: np.ndarray
    points: np.ndarray
    times: np.ndarray
    f_values: np.ndarray
    directions: np.ndarray
    skipped_nontransversal: int = 0
    charts: tuple[str, ...] = ()

    @property
    def f_spread(self) -> float:
        if len(self.f_values) == 0:
            return 0.0
        return float(np.max(self.f_values) - np.min(self.f_values))


class _SectionFunction:
    def __init__(self, model, section: Section):
        self.model = model
        self.section = section
        self.torus = isinstance(model, FlatTorus3)
        if self.torus and section.axis > 2:
            raise ValueError("torus sections use axes x, y, z")
        if isinstance(model, RoundSphere3) and section.axis > 3:
            raise ValueError("sphere sections use ambient axes x1..x4")

    def value(self, y3, chart):
        """Signed distance to the (first) section sheet."""
        if self.torus:
            return y3[..., self.section.axis] / self.model.L[self.section.axis] - self.section.value / self.model.L[self.section.axis]
        amb = RoundSphere3(chart).to_ambient(np.asarray(y3)[None, :])[0]
        return amb[self.section.axis] - self.section.value

    def crossings_in(self, step: _Step):
        """``(theta, direction, level)`` triples of sheet crossings inside the step."""
        g0 = self.value(step.y0[:3], step.chart)
        g1 = self.value(step.y1[:3], step.chart)
        if self.torus:
            m0, m1 = math.floor(g0), math.floor(g1)
            if m1 > m0:
                return [(m1, +1)]
            if m1 < m0:
                return [(m0, -1)]
            return []
        if g0 < 0 <= g1:
            return [(0, +1)]
        if g1 < 0 <= g0:
            return [(0, -1)]
        return []


def _locate(secf: _SectionFunction, step: _Step, level: float) -> float:
    def g(theta):
        return secf.value(dense_state(step, theta)[:3], step.chart) - level

    a, b = g(0.0), g(1.0)
    if a == 0.0:
        return 0.0
    if b == 0.0:
        return 1.0
    return brentq(g, 0.0, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def poincare(
    model,
    X,
    section: Section | str,
    seeds: Iterable,
    n_crossings: int,
    f=None,
    tol: float = DEFAULT_TOL,
    max_step: float = DEFAULT_MAX_STEP,
    t_max: float = 1e5,
    transversal_min: float = 1e-8,
) -> list[PoincareRecord]:
    """Directed crossings of field lines with a coordinate section.

    Crossings are located by root-finding on the dense output. Crossings where
    the normal component of ``X`` is at most ``transversal_min`` are skipped
    and counted. Integration for a seed stops after ``n_crossings`` recorded
    crossings or at flow parameter ``t_max``.
    """
    if isinstance(section, str):
        section = Section.parse(section)
    secf = _SectionFunction(model, section)
    ev = _point_evaluator(model, X)
    fev = None if f is None else _scalar_evaluator(model, f)
    out = []
    for seed in seeds:
        seed = np.asarray(seed, dtype=float)
        st = DormandPrince(model, X, seed, tol, max_step)
        pts, times, fvals, dirs, charts = [], [], [], [], []
        skipped = 0
        while len(pts) < n_crossings and st.t < t_max:
            step = st.step(t_max)
            for level, sign in secf.crossings_in(step):
                if section.direction and sign != section.direction:
                    continue
                theta = _locate(secf, step, level)
                tc = step.t0 + theta * step.h
                if tc == 0.0:
                    continue
                y = dense_state(step, theta)[:3]
                v = np.asarray(ev(y[None, :], step.chart)).reshape(3)
                if _normal_speed(model, secf, y, v, step.chart) <= transversal_min:
                    skipped += 1
                    continue
                pts.append(model.wrap(y) if secf.torus else y)
                times.append(tc)
                dirs.append(sign)
                charts.append(step.chart)
                fvals.append(float(np.asarray(fev(y[None, :], step.chart)).reshape(-1)[0]) if fev else np.nan)
                if len(pts) >= n_crossings:
                    break
        out.append(
            PoincareRecord(
                section,
                seed,
                np.array(pts).reshape(-1, 3),
                np.array(times),
                np.array(fvals),
                np.array(dirs, dtype=int),
                skipped,
                tuple(charts),
            )
        )
    return out


def _normal_speed(model, secf, y, v, chart) -> float:
    if secf.torus:
        return abs(float(v[secf.section.axis]))
    amb_v = RoundSphere3(chart).ambient_velocity(y, v)
    return abs(float(amb_v[secf.section.axis]))


# ---------------------------------------------------------------------------
# rotation numbers


def continued_fraction(x: float, n_terms: int = 12, eps: float = 1e-15) -> list[int]:
    terms = []
    for _ in range(n_terms):
        a = math.floor(x)
        terms.append(int(a))
        frac = x - a
        if frac < eps:
            break
        x = 1.0 / frac
    return terms


def convergents(terms: Sequence[int]) -> list[Fraction]:
    out = []
    h_prev, h = 1, terms[0]
    k_prev, k = 0, 1
    out.append(Fraction(h, k))
    for a in terms[1:]:
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
        out.append(Fraction(h, k))
    return out


@dataclass(frozen=True)
class RotationEstimate:
    """Winding ratio of a torus orbit and its closed/dense verdict.

    ``ratio`` is the displacement along ``axes[0]`` divided by the one along
    ``axes[1]``. ``rational`` is the matching ``p/q`` when the verdict is
    ``closed``. The thresholds used are reported alongside.
    """

    ratio: float
    uncertainty: float
    verdict: str
    axes: tuple[int, int] | None
    total_windings: int
    rational: Fraction | None = None
    q_max: int = 50
    window: float = float("nan")
    stable_convergents: int = 0

    def to_dict(self) -> dict:
        return {
            "ratio": self.ratio,
            "uncertainty": self.uncertainty,
            "verdict": self.verdict,
            "axes": list(self.axes) if self.axes else None,
            "total_windings": self.total_windings,
            "rational": None if self.rational is None else f"{self.rational.numerator}/{self.rational.denominator}",
            "q_max": self.q_max,
            "window": self.window,
            "stable_convergents": self.stable_convergents,
        }


CLOSED = "closed-within-tolerance"
IRRATIONAL = "irrational-like"
UNDETERMINED = "undetermined"


def rotation_number(
    traj: Trajectory,
    q_max: int = 50,
    window_factor: float = 10.0,
    min_windings: int = 10,
    min_stable: int = 3,
) -> RotationEstimate:
    """Classify a torus orbit as closed or dense from its winding counters.

    The two axes with most windings are used; ``T`` is their total winding
    count. The verdict is ``closed-within-tolerance`` when some ``p/q`` with
    ``q <= q_max`` lies within ``window_factor / T`` of the ratio,
    ``irrational-like`` when at least ``min_stable`` continued-fraction
    convergents of ``ratio +- uncertainty`` agree, and ``undetermined``
    otherwise or when the weaker axis has fewer than ``min_windings`` windings.
    """
    if not isinstance(traj.model, FlatTorus3):
        return RotationEstimate(float("nan"), float("inf"), UNDETERMINED, None, 0, q_max=q_max)
    W = np.abs(traj.windings[-1])
    order = sorted(range(3), key=lambda i: (-W[i], i))
    a, b = sorted(order[:2])
    T = int(W[a] + W[b])
    window = window_factor / T if T else float("inf")
    if min(W[a], W[b]) < min_windings:
        return RotationEstimate(float("nan"), float("inf"), UNDETERMINED, (a, b), T, q_max=q_max, window=window)
    disp = traj.unwrapped[-1] - traj.unwrapped[0]
    ratio = float(disp[a] / disp[b])
    # both displacements are uncertain by about one period
    uncertainty = (1.0 + abs(ratio)) / abs(disp[b])

    best = None
    for q in range(1, q_max + 1):
        p = round(ratio * q)
        if abs(ratio - p / q) <= window:
            best = Fraction(p, q)
            break
    if best is not None:
        return RotationEstimate(ratio, uncertainty, CLOSED, (a, b), T, best, q_max, window)

    lo = convergents(continued_fraction(ratio - uncertainty))
    hi = convergents(continued_fraction(ratio + uncertainty))
    stable = 0
    for x, y in zip(lo, hi):
        if x != y:
            break
        stable += 1
    verdict = IRRATIONAL if stable >= min_stable else UNDETERMINED
    return RotationEstimate(ratio, uncertainty, verdict, (a, b), T, None, q_max, window, stable)


def integrate_windings(
    model,
    X,
    x0,
    min_total: int,
    tol: float = DEFAULT_TOL,
    max_step: float = DEFAULT_MAX_STEP,
    t_max: float = 1e6,
) -> Trajectory:
    """Integrate until the two most-winding axes together wind ``min_total`` times."""
    st = DormandPrince(model, X, x0, tol, max_step)
    x_start, chart0 = st.y[:3].copy(), st.chart
    base = np.floor(x_start)
    steps = []
    while st.t < t_max:
        steps.append(st.step(t_max))
        W = np.sort(np.abs(np.floor(st.y[:3]) - base))
        if W[1] + W[2] >= min_total:
            break
    return _assemble(model, x_start, chart0, steps, st.chart, False)
