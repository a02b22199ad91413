"""Conservation and spectral diagnostics for field trajectories.

The quantities checked here are structural: the divergence constraints are
transported exactly by the update equations, the energy oscillates without
secular drift, and two solutions paired through the discrete boundary
functional of a spacetime sub-block antisymmetrize to zero.  The tests in
this module's callers turn each statement into a numeric pass/fail.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dec import dual_divergence, exterior_derivative
from .maxwell import MaterialParams, constitutive_stars
from .mesh import CellComplex, DualComplex

MIN_SPECTRUM_SAMPLES = 16


@dataclass
class EnergySample:
    """Field energy split at one instant: half E.D plus half B.H."""

    time: float
    electric: float
    magnetic: float

    @property
    def total(self) -> float:
        return self.electric + self.magnetic


def energy(E_values: np.ndarray, B_values: np.ndarray, star_eps, star_mu,
           time: float = 0.0) -> EnergySample:
    """Energy of whole-step field values (callers average E across half steps)."""
    e = 0.5 * float(E_values @ (star_eps.diag * E_values))
    b = 0.5 * float(B_values @ (star_mu.diag * B_values))
    return EnergySample(time, e, b)


def gauss_residual(K: CellComplex, D_values: np.ndarray,
                   rho_values: np.ndarray | None = None) -> float:
    """Max-norm of (net dual outflux of D) - rho over interior vertex duals."""
    flux = dual_divergence(K, D_values)
    if rho_values is not None:
        flux = flux - rho_values
    interior = ~K.boundary_mask(0)
    return float(np.max(np.abs(flux[interior]), initial=0.0))


def divb_residual(K: CellComplex, B_values: np.ndarray) -> float:
    """Max-norm of d2 B over spatial top cells (vacuously zero in 2-D)."""
    if K.dimension < 3:
        return 0.0
    d2 = exterior_derivative(K, 2).matrix.astype(float)
    return float(np.max(np.abs(d2 @ np.asarray(B_values, dtype=float)), initial=0.0))


@dataclass
class SubBlock:
    """A spacetime sub-block: a set of spatial faces times a step window."""

    faces: np.ndarray
    n0: int
    n1: int


def multisymplectic_residual(K: CellComplex, dual: DualComplex,
                             mat: MaterialParams, traj_a, traj_b,
                             block: SubBlock, check_tol: float = 1e-8) -> float:
    """Antisymmetrized discrete boundary pairing of two solutions on a block.

    Each synchronous solution trajectory (recorded with ``record_fields``)
    is treated as a variation of the potential; the boundary functional
    pairs one variation's potential history against the other's fluxes D on
    the initial/final time faces of the block and against the neighbouring
    H flux through the block's spatial side walls, with the leapfrog's
    staggered labels.  The result vanishes to round-off precisely because
    the update is the stationarity condition of a quadratic action, so any
    labeling or update error shows up as a nonzero residual.

    Both inputs must be source-free solutions; this is pre-checked by
    replaying one update inside the window (tolerance ``check_tol``).
    """
    if traj_a.E_half is None or traj_b.E_half is None:
        raise ValueError("multisymplectic_residual needs record_fields trajectories")
    if not 0 <= block.n0 < block.n1 <= traj_a.n_steps:
        raise ValueError("block window out of range")

    d1 = exterior_derivative(K, 1).matrix.astype(float)
    se, sm = constitutive_stars(K, dual, mat)
    interior = ~K.boundary_mask(1)
    dt = traj_a.dt
    if abs(dt - traj_b.dt) > 1e-15 * max(dt, traj_b.dt):
        raise ValueError("trajectories use different time steps")

    for traj in (traj_a, traj_b):
        _check_solution(traj, d1, se, sm, interior, block, dt, check_tol)

    faces = np.zeros(K.n_cells(2), dtype=bool)
    faces[np.asarray(block.faces, dtype=int)] = True
    d1_sub = d1[np.nonzero(faces)[0], :]
    edge_in_block = np.asarray(np.abs(d1_sub).sum(axis=0)).ravel() > 0

    a_pot = _potential_history(traj_a, dt)
    b_pot = _potential_history(traj_b, dt)

    theta_ab = _theta(traj_b, a_pot, block, d1, d1_sub, faces, edge_in_block,
                      se, sm, dt)
    theta_ba = _theta(traj_a, b_pot, block, d1, d1_sub, faces, edge_in_block,
                      se, sm, dt)
    return abs(theta_ab - theta_ba)


def _potential_history(traj, dt) -> list[np.ndarray]:
    """A^n = -dt * sum of earlier half-step E (gauge A^0 = 0, valid for B^0 = 0)."""
    if np.max(np.abs(traj.B_whole[0]), initial=0.0) != 0.0:
        raise ValueError("potential reconstruction requires B(0) = 0")
    A = [np.zeros_like(traj.E_half[0])]
    for E in traj.E_half:
        A.append(A[-1] - dt * E)
    return A


def _theta(traj_field, pot, block: SubBlock, d1, d1_sub, faces, edge_in_block,
           se, sm, dt) -> float:
    """Boundary pairing of the variation ``pot`` against ``traj_field``'s fluxes."""
    n0, n1 = block.n0, block.n1
    sel = edge_in_block

    D0 = se.diag * traj_field.E_half[n0]
    D1 = se.diag * traj_field.E_half[n1 - 1]
    total = float(pot[n0][sel] @ D0[sel]) - float(pot[n1][sel] @ D1[sel])

    H0 = sm.diag * traj_field.B_whole[n0]
    curl_sub0 = d1_sub.T @ H0[faces]
    total -= dt * float(pot[n0][sel] @ curl_sub0[sel])

    for n in range(n0 + 1, n1):
        H = sm.diag * traj_field.B_whole[n]
        outside = d1.T @ H - d1_sub.T @ H[faces]
        total += dt * float(pot[n][sel] @ outside[sel])
    return total


def _check_solution(traj, d1, se, sm, interior, block, dt, tol):
    """Replay every leapfrog update the block's identity depends on."""
    worst = 0.0
    for n in range(max(block.n0 + 1, 1), min(block.n1, traj.n_steps - 1) + 1):
        b_err = np.max(np.abs(traj.B_whole[n]
                              - (traj.B_whole[n - 1] - dt * (d1 @ traj.E_half[n - 1]))))
        worst = max(worst, float(b_err))
        if n < traj.n_steps:
            H = sm.diag * traj.B_whole[n]
            E_pred = (se.diag * traj.E_half[n - 1] + dt * (d1.T @ H)) / se.diag
            E_pred[~interior] = 0.0
            worst = max(worst, float(np.max(np.abs(traj.E_half[n] - E_pred))))
    if worst > tol:
        raise ValueError(
            f"trajectory is not a discrete solution (update residual "
            f"{worst:.3e} > {tol:.1e})")


def random_grid_block(K: CellComplex, n_steps: int, rng: np.random.Generator,
                      min_size: int = 2, min_window: int = 3) -> SubBlock:
    """A random rectangular face block and step window on a grid mesh."""
    if K.grid is None:
        raise ValueError("random_grid_block needs a rectangular grid")
    counts = K.grid.counts
    axes_pair = tuple(range(K.dimension))[:2]
    i0 = rng.integers(0, counts[0] - min_size + 1)
    j0 = rng.integers(0, counts[1] - min_size + 1)
    i1 = rng.integers(i0 + min_size, counts[0] + 1)
    j1 = rng.integers(j0 + min_size, counts[1] + 1)
    faces = []
    for i in range(i0, i1):
        for j in range(j0, j1):
            faces.append(K.grid.locate(2, (0, 1), (i, j) + (0,) * (K.dimension - 2)))
    n0 = int(rng.integers(0, n_steps - min_window + 1))
    n1 = int(rng.integers(n0 + min_window, n_steps + 1))
    return SubBlock(np.array(faces, dtype=int), n0, n1)


@dataclass
class Spectrum:
    """One-sided periodogram with detected peaks (ascending frequency)."""

    frequencies: np.ndarray
    power: np.ndarray
    peaks: np.ndarray
    bin_width: float


def spectrum(series: np.ndarray, dt_sample: float,
             prominence_factor: float = 10.0) -> Spectrum:
    """Periodogram of a uniformly sampled probe with median-prominence peaks."""
    from scipy.signal import find_peaks

    series = np.asarray(series, dtype=float)
    if series.ndim != 1 or len(series) < MIN_SPECTRUM_SAMPLES:
        raise ValueError(
            f"need a 1-D series of at least {MIN_SPECTRUM_SAMPLES} samples")
    demeaned = series - series.mean()
    amp = np.fft.rfft(demeaned)
    power = np.abs(amp) ** 2 / len(series)
    freqs = np.fft.rfftfreq(len(series), d=dt_sample)
    floor = float(np.median(power[1:]))
    idx, _ = find_peaks(power, prominence=prominence_factor * floor)
    idx = idx[idx > 0]
    return Spectrum(freqs, power, freqs[idx], freqs[1] - freqs[0])


def cavity_mode_frequencies(lx: float, ly: float, count: int) -> np.ndarray:
    """Lowest analytic PEC cavity resonances (c/2) sqrt((k/lx)^2 + (l/ly)^2).

    For the in-plane-E / out-of-plane-B polarization the mode family is all
    (k, l) >= (0, 0) except (0, 0), so f10 = 0.5 on the unit square is the
    fundamental.
    """
    vals = set()
    kmax = max(4, int(np.ceil(2 * count ** 0.5)) + 3)
    for k in range(kmax + 1):
        for l in range(kmax + 1):
            if k == 0 and l == 0:
                continue
            vals.add(0.5 * float(np.hypot(k / lx, l / ly)))
    return np.array(sorted(vals))[:count]


def energy_drift_stats(times: np.ndarray, totals: np.ndarray) -> dict:
    """Best-fit linear drift over the run and max excursion, both relative."""
    times = np.asarray(times, dtype=float)
    totals = np.asarray(totals, dtype=float)
    mean = float(totals.mean())
    slope = float(np.polyfit(times, totals, 1)[0])
    span = float(times[-1] - times[0])
    return {
        "mean": mean,
        "rel_drift": abs(slope) * span / mean,
        "rel_excursion": float(totals.max() - totals.min()) / mean,
    }
