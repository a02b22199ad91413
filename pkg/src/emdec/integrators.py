"""Time integrators: synchronous leapfrog and the asynchronous event loop.

Both schemes advance the same pair of operator equations,

    B^{n+1} = B^n - dt * d1 E^{n+1/2}
    D^{n+3/2} = D^{n+1/2} + dt * (d1^T H^{n+1} - J^{n+1}),

with D = star_eps E and H = star_mu B.  On a rectangular grid the
synchronous loop is component-for-component the classic staggered-grid
FDTD update; on a simplicial mesh it is the Yee-like scheme on unstructured
grids; the asynchronous integrator reduces to either when every face takes
the same steps.

Asynchronous schedules are built in exact rational arithmetic
(fractions.Fraction, with step sizes re-read as decimals) so that set
unions, midpoints, and the no-shared-times invariant are exact; the event
loop itself runs on floats derived deterministically from the rational data
(t0 + j * dt in one multiply-add), which keeps synchronous ties exact and
reruns bit-identical.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dec import dual_divergence, exterior_derivative
from .errors import NumericError
from .maxwell import (FieldState, MaterialParams, SourceTerm, NO_SOURCE,
                      apply_pec, constitutive_stars)
from .mesh import CellComplex, DualComplex

POWER_ITERATION_LIMIT = 10_000
POWER_ITERATION_TOL = 1e-6


@dataclass
class RunConfig:
    """Integrator-level run parameters."""

    t_final: float
    scheme: str = "bk"
    dt: float | None = None
    n_steps: int | None = None
    dt_safety: float = 0.9
    cadence: int = 1
    seed: int = 0
    jitter: float = 0.0
    probe_edges: tuple = ()
    probe_faces: tuple = ()
    snapshot_every: int = 0
    record_fields: bool = False
    instability_factor: float = 1e6

    def __post_init__(self):
        if self.scheme not in ("yee", "bk", "avi"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.t_final < 0:
            raise ValueError("t_final must be >= 0")
        if not 0 < self.dt_safety <= 1:
            raise ValueError("dt_safety must lie in (0, 1]")
        if self.cadence < 1:
            raise ValueError("cadence must be >= 1")


@dataclass
class Trajectory:
    """Uniformly sampled observables of a run plus the final state."""

    times: np.ndarray
    energy_e: np.ndarray
    energy_b: np.ndarray
    energy_total: np.ndarray
    divb: np.ndarray
    gauss: np.ndarray
    probe_edges: np.ndarray
    probe_faces: np.ndarray
    final_state: FieldState
    dt: float
    n_steps: int
    E_half: list | None = None
    B_whole: list | None = None
    snapshots: list | None = None


def _interior_edges(K: CellComplex) -> np.ndarray:
    return ~K.boundary_mask(1)


def cfl_dt(K: CellComplex, dual: DualComplex, mat: MaterialParams,
           tol: float = POWER_ITERATION_TOL) -> float:
    """Stability limit 2/sqrt(lambda_max) of the PEC-projected curl-curl operator.

    lambda_max is found by power iteration on star_eps^-1 d1^T star_mu d1
    restricted to interior edges, to ``tol`` relative accuracy.
    """
    se, sm = (s.diag for s in constitutive_stars(K, dual, mat))
    d1 = exterior_derivative(K, 1).matrix.astype(float)
    interior = _interior_edges(K)

    rng = np.random.default_rng(1234)
    v = rng.standard_normal(K.n_cells(1))
    v[~interior] = 0.0
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(POWER_ITERATION_LIMIT):
        w = (d1.T @ (sm * (d1 @ v))) / se
        w[~interior] = 0.0
        norm = np.linalg.norm(w)
        if norm == 0.0:
            raise NumericError("curl-curl operator annihilated the start vector")
        lam_new = float(v @ w)
        v = w / norm
        if abs(lam_new - lam) <= tol * abs(lam_new):
            return 2.0 / math.sqrt(lam_new)
        lam = lam_new
    raise NumericError(
        f"power iteration did not converge within {POWER_ITERATION_LIMIT} iterations")


def local_cfl_dt(K: CellComplex, dual: DualComplex, mat: MaterialParams) -> np.ndarray:
    """Per-face stability limits from the element restriction of the curl-curl
    operator (its single nonzero eigenvalue, faces being rank one)."""
    se, sm = (s.diag for s in constitutive_stars(K, dual, mat))
    interior = _interior_edges(K)
    out = np.empty(K.n_cells(2))
    for f, rows in enumerate(K.boundary_incidence[2]):
        lam = sm[f] * sum(1.0 / se[e] for e, _ in rows if interior[e])
        if lam <= 0:
            lam = sm[f] * sum(1.0 / se[e] for e, _ in rows)
        out[f] = 2.0 / math.sqrt(lam)
    return out


def leapfrog_step(state: FieldState, dt: float, d1, star_eps, star_mu,
                  src: SourceTerm = NO_SOURCE, K: CellComplex | None = None
                  ) -> FieldState:
    """One synchronous leapfrog update; E must sit half a step ahead of B."""
    K = K or state.complex
    if abs(state.t_E - (state.t_B + dt / 2)) > 1e-9 * max(1.0, abs(state.t_B), dt):
        raise ValueError(
            f"time labels out of phase: t_E={state.t_E}, t_B={state.t_B}, dt={dt}")
    d1m = d1.matrix if hasattr(d1, "matrix") else d1
    B = state.B - dt * (d1m @ state.E)
    H = star_mu.diag * B
    t_whole = state.t_B + dt
    D = star_eps.diag * state.E + dt * (d1m.T @ H - src.j(K, t_whole))
    E = D / star_eps.diag
    new = FieldState(K, E, B, state.t_E + dt, t_whole, pec=state.pec)
    return apply_pec(new, K) if state.pec else new


def run_sync(K: CellComplex, dual: DualComplex, mat: MaterialParams,
             config: RunConfig, state0: FieldState,
             src: SourceTerm = NO_SOURCE) -> Trajectory:
    """Leapfrog from t = 0 to t_final with sampling at the configured cadence.

    The provided state carries E and B at t0; E is bootstrapped to the first
    half step by one explicit half Euler update before the loop.
    """
    se, sm = constitutive_stars(K, dual, mat)
    d1 = exterior_derivative(K, 1).matrix.astype(float)
    dt, n_steps = _resolve_steps(K, dual, mat, config)

    E = state0.E.copy()
    B = state0.B.copy()
    interior = _interior_edges(K)
    E[~interior] = 0.0

    # half-step Euler bootstrap: E(t0) -> E(t0 + dt/2)
    if n_steps > 0:
        H0 = sm.diag * B
        E = E + (dt / 2.0) * (d1.T @ H0 - src.j(K, 0.0)) / se.diag
        E[~interior] = 0.0

    initial_norm = max(float(np.max(np.abs(E), initial=0.0)),
                       float(np.max(np.abs(B), initial=0.0)))
    threshold = config.instability_factor * initial_norm if initial_norm > 0 else np.inf

    rec = _Recorder(K, dual, config, se, sm)
    rec.sample(0.0, state0.E, B, half_pair=None, src=src, t_half=0.0)
    if config.record_fields:
        rec.E_half, rec.B_whole = [E.copy()], [B.copy()]

    for n in range(1, n_steps + 1):
        B = B - dt * (d1 @ E)
        H = sm.diag * B
        t_whole = n * dt
        D = se.diag * E + dt * (d1.T @ H - src.j(K, t_whole))
        E_new = D / se.diag
        E_new[~interior] = 0.0

        norm = max(float(np.max(np.abs(E_new))), float(np.max(np.abs(B))))
        if norm > threshold or not math.isfinite(norm):
            raise NumericError(
                f"instability detected at step {n} (t={t_whole:.6g}): field norm "
                f"{norm:.3e} exceeds {config.instability_factor:.1e} x initial")

        if config.record_fields:
            rec.B_whole.append(B.copy())
            if n < n_steps:
                rec.E_half.append(E_new.copy())
        if n % config.cadence == 0 or n == n_steps:
            rec.sample(t_whole, 0.5 * (E + E_new), B, half_pair=(E, E_new),
                       src=src, t_half=t_whole + dt / 2.0)
        if config.snapshot_every and (n % config.snapshot_every == 0 or n == n_steps):
            rec.snapshots.append((t_whole, E_new.copy(), B.copy()))
        E = E_new

    final = FieldState(K, E, B, n_steps * dt + dt / 2.0 if n_steps else 0.0,
                       n_steps * dt, pec=True)
    return rec.build(final, dt, n_steps)


def _resolve_steps(K, dual, mat, config: RunConfig) -> tuple[float, int]:
    if config.n_steps is not None:
        if config.dt is None:
            raise ValueError("n_steps requires an explicit dt")
        return float(config.dt), int(config.n_steps)
    if config.t_final == 0.0:
        return 0.0, 0
    dt = config.dt
    if dt is None:
        dt = config.dt_safety * cfl_dt(K, dual, mat)
    n_steps = max(1, math.ceil(config.t_final / dt - 1e-12))
    return config.t_final / n_steps, n_steps


class _Recorder:
    """Accumulates sampled observables shared by both integrators."""

    def __init__(self, K, dual, config, star_eps, star_mu):
        self.K, self.dual, self.config = K, dual, config
        self.se, self.sm = star_eps, star_mu
        self.interior_vertices = ~K.boundary_mask(0)
        self.d2 = (exterior_derivative(K, 2).matrix.astype(float)
                   if K.dimension == 3 else None)
        self.times, self.ee, self.eb = [], [], []
        self.divb, self.gauss = [], []
        self.pe, self.pf = [], []
        self.snapshots = []
        self.E_half = None
        self.B_whole = None

    def sample(self, t, E_whole, B, half_pair, src, t_half):
        self.times.append(t)
        self.ee.append(0.5 * float(E_whole @ (self.se.diag * E_whole)))
        self.eb.append(0.5 * float(B @ (self.sm.diag * B)))
        if self.d2 is not None:
            self.divb.append(float(np.max(np.abs(self.d2 @ B), initial=0.0)))
        else:
            self.divb.append(0.0)
        E_half = half_pair[1] if half_pair else E_whole
        rho = src.rho(self.K, t_half)
        g = dual_divergence(self.K, self.se.diag * E_half) - rho
        self.gauss.append(float(np.max(np.abs(g[self.interior_vertices]), initial=0.0)))
        self.pe.append([E_half[i] for i in self.config.probe_edges])
        self.pf.append([B[i] for i in self.config.probe_faces])

    def build(self, final_state, dt, n_steps) -> Trajectory:
        ee = np.array(self.ee)
        eb = np.array(self.eb)
        return Trajectory(
            times=np.array(self.times), energy_e=ee, energy_b=eb,
            energy_total=ee + eb, divb=np.array(self.divb),
            gauss=np.array(self.gauss),
            probe_edges=np.array(self.pe, dtype=float).reshape(len(self.times), -1),
            probe_faces=np.array(self.pf, dtype=float).reshape(len(self.times), -1),
            final_state=final_state, dt=dt, n_steps=n_steps,
            E_half=self.E_half, B_whole=self.B_whole,
            snapshots=self.snapshots or None)


# -- asynchronous schedules ----------------------------------------------------


def _as_fraction(x) -> Fraction:
    """Re-read a float step through its shortest decimal form, so 0.2 is 1/5."""
    if isinstance(x, Fraction):
        return x
    return Fraction(str(float(x)))


@dataclass
class TimeSchedule:
    """Per-face time sets (exact rationals) plus derived edge time sets."""

    t0: Fraction
    t_final: Fraction
    dt_faces: list[Fraction]

    def __post_init__(self):
        if any(dt <= 0 for dt in self.dt_faces):
            raise ValueError("every face step must be positive")
        if self.t_final <= self.t0:
            raise ValueError("t_final must exceed t0")

    def face_times(self, i: int) -> list[Fraction]:
        """Theta_sigma: t0 < t1 < ... with the first time >= t_final included."""
        out = [self.t0]
        j = 1
        while True:
            t = self.t0 + j * self.dt_faces[i]
            out.append(t)
            if t >= self.t_final:
                return out
            j += 1

    def edge_times(self, K: CellComplex, edge: int) -> list[Fraction]:
        """Theta_e: the exact sorted union over incident faces."""
        times: set[Fraction] = set()
        for f, _ in K.cofaces(1)[edge]:
            times.update(self.face_times(f))
        return sorted(times)

    def edge_midtimes(self, K: CellComplex, edge: int) -> list[Fraction]:
        ts = self.edge_times(K, edge)
        return [(a + b) / 2 for a, b in zip(ts, ts[1:])]

    def pairwise_asynchronous(self) -> bool:
        """True iff no two faces share any time except t0."""
        seen: dict[Fraction, int] = {}
        for i in range(len(self.dt_faces)):
            for t in self.face_times(i):
                if t == self.t0:
                    continue
                if t in seen:
                    return False
                seen[t] = i
        return True


def build_schedule(K: CellComplex, dt_faces, t_final, jitter: float = 0.0,
                   seed: int = 0, t0=0) -> TimeSchedule:
    """Arithmetic per-face schedules; jitter > 0 multiplies each step by a
    distinct factor in [1, 1 + jitter) so schedules only meet at t0."""
    n_faces = K.n_cells(2)
    if np.ndim(dt_faces) == 0:
        steps = [_as_fraction(dt_faces)] * n_faces
    else:
        if len(dt_faces) != n_faces:
            raise ValueError("need one step size per face")
        steps = [_as_fraction(x) for x in dt_faces]
    if jitter > 0:
        rng = np.random.default_rng(seed)
        factors = rng.uniform(1.0, 1.0 + jitter, size=n_faces)
        steps = [s * Fraction.from_float(float(f)) for s, f in zip(steps, factors)]
    return TimeSchedule(_as_fraction(t0), _as_fraction(t_final), steps)


# -- asynchronous variational integrator ------------------------------------------


@dataclass
class AviState:
    """Mutable per-edge/per-face state of the asynchronous loop."""

    A: list
    E: list
    tau_edge: list
    tau_face: list
    B: list
    queue: list = field(default_factory=list)


@dataclass
class AviTrajectory:
    times: np.ndarray
    energy_e: np.ndarray
    energy_b: np.ndarray
    energy_total: np.ndarray
    divb: np.ndarray
    gauss: np.ndarray
    probe_edges: np.ndarray
    probe_faces: np.ndarray
    final_state: FieldState
    A_final: np.ndarray
    events_per_face: np.ndarray
    n_events: int
    schedule: TimeSchedule


def run_avi(K: CellComplex, dual: DualComplex, mat: MaterialParams,
            schedule: TimeSchedule, state0: FieldState,
            src: SourceTerm = NO_SOURCE, config: RunConfig | None = None,
            A0: np.ndarray | None = None) -> AviTrajectory:
    """Asynchronous update loop driven by a time-ordered priority queue.

    Each popped event (t, face) first accumulates A on the face's edges over
    their elapsed intervals, then rebuilds B = d1 A on the face, converts to
    H, and advances D (hence E) on the face's interior edges; the face is
    then rescheduled.  Ties are broken by face index.  Events at or past
    t_final are discarded and every edge is flushed to exactly t_final at
    the end, so all outputs share one time label.
    """
    if config is None:
        config = RunConfig(t_final=float(schedule.t_final), scheme="avi")

    se, sm = constitutive_stars(K, dual, mat)
    se_d = se.diag
    sm_d = sm.diag
    n_edges, n_faces = K.n_cells(1), K.n_cells(2)
    interior = _interior_edges(K)

    face_edges = [[(e, float(s)) for e, s in rows]
                  for rows in K.boundary_incidence[2]]

    if A0 is None:
        if np.any(state0.B != 0.0):
            raise ValueError("state0.B must come from A0 (pass A0 with B = d1 A0)")
        A = [0.0] * n_edges
    else:
        A = [float(a) for a in np.asarray(A0, dtype=float)]

    t0f = float(schedule.t0)
    t_finalf = float(schedule.t_final)
    dtf = [float(dt) for dt in schedule.dt_faces]

    # bootstrap E to each edge's first half step
    E0 = state0.E.copy()
    E0[~interior] = 0.0
    B0 = _apply_d1(face_edges, A, n_faces)
    H0 = [sm_d[f] * B0[f] for f in range(n_faces)]
    curl0 = np.zeros(n_edges)
    for f, rows in enumerate(face_edges):
        for e, s in rows:
            curl0[e] += s * H0[f]
    j0 = src.j(K, t0f)
    first_gap = np.full(n_edges, np.inf)
    for f, rows in enumerate(face_edges):
        for e, _ in rows:
            first_gap[e] = min(first_gap[e], dtf[f])
    first_gap[~np.isfinite(first_gap)] = 0.0
    E = E0 + 0.5 * first_gap * (curl0 - j0) / se_d
    E[~interior] = 0.0
    E = [float(x) for x in E]

    state = AviState(A=A, E=E, tau_edge=[t0f] * n_edges, tau_face=[t0f] * n_faces,
                     B=list(B0))
    for f in range(n_faces):
        heapq.heappush(state.queue, (t0f + dtf[f], f))

    initial_norm = max(max(abs(x) for x in E), max(abs(x) for x in B0), 0.0) \
        if n_edges else 0.0
    threshold = config.instability_factor * initial_norm if initial_norm > 0 else np.inf

    rec = _Recorder(K, dual, config, se, sm)
    sample_dt = config.cadence * min(dtf) if dtf else 0.0
    rec.sample(t0f, np.asarray(state.E), np.asarray(state.B), half_pair=None,
               src=src, t_half=t0f)
    n_sample = 1

    events = np.zeros(n_faces, dtype=int)
    steps_taken = [0] * n_faces
    t_last = t0f
    has_src = src.j_at is not None
    check_counter = 0

    while state.queue:
        t, f = heapq.heappop(state.queue)
        if t < t_last:
            raise NumericError("non-monotone event pop (internal invariant violated)")
        t_last = t
        if t >= t_finalf:
            continue
        while sample_dt > 0 and (ts := t0f + n_sample * sample_dt) <= t and ts < t_finalf:
            _avi_sample(rec, state, src, ts)
            n_sample += 1

        jvals = src.j(K, t) if has_src else None
        rows = face_edges[f]
        elapsed_face = t - state.tau_face[f]
        B_f = 0.0
        gaps = []
        for e, s in rows:
            gap = t - state.tau_edge[e]
            gaps.append(gap)
            if gap != 0.0:
                state.A[e] -= state.E[e] * gap
                state.tau_edge[e] = t
            B_f += s * state.A[e]
        H_f = sm_d[f] * B_f
        for (e, s), gap in zip(rows, gaps):
            if not interior[e]:
                continue
            # each edge touch integrates J over its own elapsed interval once
            D_e = se_d[e] * state.E[e] + s * H_f * elapsed_face
            if has_src:
                D_e -= jvals[e] * gap
            state.E[e] = D_e / se_d[e]
        state.B[f] = B_f
        state.tau_face[f] = t
        events[f] += 1
        steps_taken[f] += 1
        heapq.heappush(state.queue, (t0f + (steps_taken[f] + 1) * dtf[f], f))

        check_counter += 1
        if check_counter % 1024 == 0:
            norm = max(abs(x) for x in state.E)
            if norm > threshold or not math.isfinite(norm):
                raise NumericError(
                    f"instability detected at t={t:.6g}: field norm {norm:.3e} "
                    f"exceeds {config.instability_factor:.1e} x initial")

    # flush every edge (and B) to exactly t_final
    for e in range(n_edges):
        gap = t_finalf - state.tau_edge[e]
        if gap != 0.0:
            state.A[e] -= state.E[e] * gap
            state.tau_edge[e] = t_finalf
    B_final = _apply_d1(face_edges, state.A, n_faces)
    state.B = list(B_final)
    for f in range(n_faces):
        state.tau_face[f] = t_finalf
    while sample_dt > 0 and t0f + n_sample * sample_dt <= t_finalf:
        _avi_sample(rec, state, src, t0f + n_sample * sample_dt)
        n_sample += 1

    E_arr = np.asarray(state.E)
    final = FieldState(K, E_arr, B_final, t_finalf, t_finalf, pec=True)
    traj = rec.build(final, float(min(dtf)) if dtf else 0.0, int(events.sum()))
    return AviTrajectory(
        times=traj.times, energy_e=traj.energy_e, energy_b=traj.energy_b,
        energy_total=traj.energy_total, divb=traj.divb, gauss=traj.gauss,
        probe_edges=traj.probe_edges, probe_faces=traj.probe_faces,
        final_state=final, A_final=np.asarray(state.A),
        events_per_face=events, n_events=int(events.sum()), schedule=schedule)


def _apply_d1(face_edges, A, n_faces) -> np.ndarray:
    out = np.zeros(n_faces)
    for f, rows in enumerate(face_edges):
        out[f] = sum(s * A[e] for e, s in rows)
    return out


def _avi_sample(rec: _Recorder, state: AviState, src: SourceTerm, t: float):
    E = np.asarray(state.E)
    B = np.asarray(state.B)
    rec.sample(t, E, B, half_pair=(E, E), src=src, t_half=t)
