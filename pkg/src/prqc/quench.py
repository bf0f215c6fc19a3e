"""Quench dynamics, long-time averages and canonical thermal references.

A prepared state ``psi1`` is evolved with a second spin Hamiltonian ``H2``
through the full eigendecomposition of ``H2`` (exact at any time). The
long-time average of the site occupations is estimated twice: as a
trapezoidal time average over a window and as the diagonal ensemble. The
canonical reference fixes ``beta`` so that the Gibbs energy of ``H2`` matches
``<psi1|H2|psi1>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.integrate
import scipy.linalg
import scipy.optimize

from . import spin
from .circuit import LayerSpec, ParameterVector, apply_circuit, initial_state
from .models import U1_SYMMETRIC, HamiltonianSpec

BETA_MAX = 50.0
SPECTRAL_CAP = 2**14


class QuenchError(ValueError):
    pass


@dataclass(frozen=True)
class Preparation:
    """Exact ground state of ``target`` or, with ``resource``/``theta``, the circuit state."""

    target: HamiltonianSpec
    resource: Optional[HamiltonianSpec] = None
    theta: Optional[ParameterVector] = None

    def state(self) -> spin.DenseState:
        if self.theta is None:
            H = _realize_for(self.target)
            return spin.ground_state(H)[1]
        if self.resource is None:
            raise QuenchError("circuit preparation needs a resource")
        rho0 = initial_state(self.target)
        return apply_circuit(rho0, self.resource, LayerSpec(self.theta.mode, self.theta.free), self.theta)


def _conserves(spec: HamiltonianSpec) -> bool:
    return spec.model_kind in U1_SYMMETRIC and spec.couplings.get("g", 0.0) == 0.0


def _realize_for(spec: HamiltonianSpec) -> spin.OperatorMatrix:
    """Ground-state search for magnetization-conserving models runs sector by sector."""
    if not _conserves(spec):
        return spin.realize(spec)
    best = None
    for k in range(spec.n_sites + 1):
        H = spin.realize(spec, sector=k)
        e = spin.ground_state(H)[0]
        if best is None or e < best[0] - 1e-12:
            best = (e, H)
    return best[1]


@dataclass(frozen=True)
class QuenchConfig:
    preparation: Preparation
    quench: HamiltonianSpec
    t_max: float = 200.0
    dt: float = 0.5
    window: tuple = (100.0, 200.0)

    def __post_init__(self):
        if not self.dt > 0 or not self.t_max >= self.dt:
            raise QuenchError("need dt > 0 and t_max >= dt")
        lo, hi = self.window
        if not 0 <= lo < hi <= self.t_max + 1e-12:
            raise QuenchError("averaging window must lie inside [0, t_max]")
        if self.quench.n_sites != self.preparation.target.n_sites:
            raise QuenchError("prepared state and quench Hamiltonian sizes differ")
        if self.quench.local_dim != 2:
            raise QuenchError("quench observables are spin-1/2 occupations")

    @property
    def times(self) -> np.ndarray:
        n = int(round(self.t_max / self.dt))
        return np.arange(n + 1) * self.dt


class SpectralData:
    """Dense eigendecomposition of ``H2`` on the basis of the quenched state."""

    def __init__(self, H2: spin.OperatorMatrix):
        if H2.dim > SPECTRAL_CAP:
            raise spin.TooLargeError(f"dimension {H2.dim} exceeds the spectral cap {SPECTRAL_CAP}")
        self.H = H2
        M = H2.toarray()
        if np.all(np.imag(M) == 0):
            M = np.real(M)
        self.energies, self.vectors = scipy.linalg.eigh(M, driver="evd")

    @cached_property
    def occupation_diagonals(self) -> np.ndarray:
        return spin.occupation_diagonals(self.H.n_sites, self.H.sector)

    @cached_property
    def eigen_occupations(self) -> np.ndarray:
        """``<n|n_i|n>`` for every eigenstate, shape (N, dim)."""
        return self.occupation_diagonals @ (np.abs(self.vectors) ** 2)

    def coefficients(self, psi: spin.DenseState) -> np.ndarray:
        return self.vectors.conj().T @ psi.amplitudes

    def energy_of(self, psi: spin.DenseState) -> float:
        c = self.coefficients(psi)
        return float(np.abs(c) ** 2 @ self.energies)


def _basis_state(psi: spin.DenseState, H2spec: HamiltonianSpec) -> spin.DenseState:
    if _conserves(H2spec):
        k = spin.sector_of(psi)
        if k is not None:
            return psi.to_sector(k) if psi.sector is None else psi
    return psi.to_full()


@dataclass
class Trajectory:
    times: np.ndarray
    occupations: np.ndarray  # (n_times, N)
    energy: float
    psi1: spin.DenseState = field(repr=False)
    spectral: SpectralData = field(repr=False)

    def columns(self) -> np.ndarray:
        return np.column_stack([self.times, self.occupations])


def evolve_trajectory(psi: spin.DenseState, spectral: SpectralData, times: np.ndarray, batch: int = 64) -> np.ndarray:
    c = spectral.coefficients(psi)
    occ = spectral.occupation_diagonals
    out = np.empty((len(times), occ.shape[0]))
    for start in range(0, len(times), batch):
        t = np.asarray(times[start : start + batch])
        phases = np.exp(-1j * np.outer(spectral.energies, t)) * c[:, None]
        amps = spectral.vectors @ phases
        out[start : start + len(t)] = (occ @ (np.abs(amps) ** 2)).T
    return out


def run_quench(config: QuenchConfig, spectral: Optional[SpectralData] = None) -> Trajectory:
    psi = _basis_state(config.preparation.state(), config.quench)
    if spectral is None:
        spectral = SpectralData(spin.realize(config.quench, sector=psi.sector))
    elif spectral.H.sector != psi.sector:
        raise QuenchError("spectral data and state live on different bases")
    times = config.times
    occ = evolve_trajectory(psi, spectral, times)
    return Trajectory(times, occ, spectral.energy_of(psi), psi, spectral)


def time_average(times: np.ndarray, values: np.ndarray, window: tuple) -> np.ndarray:
    """Trapezoidal average of ``values`` (rows = times) over ``window``."""
    lo, hi = window
    mask = (times >= lo - 1e-12) & (times <= hi + 1e-12)
    if mask.sum() < 2:
        raise QuenchError("averaging window contains fewer than two samples")
    t = times[mask]
    return scipy.integrate.trapezoid(values[mask], t, axis=0) / (t[-1] - t[0])


def diagonal_ensemble(psi: spin.DenseState, spectral: SpectralData, degeneracy_tol: float = 1e-9) -> np.ndarray:
    """Infinite-time average of the occupations, with degenerate blocks kept coherent."""
    c = spectral.coefficients(psi)
    w = spectral.energies
    out = spectral.eigen_occupations @ (np.abs(c) ** 2)
    edges = np.flatnonzero(np.diff(w) > degeneracy_tol) + 1
    for block in np.split(np.arange(len(w)), edges):
        if len(block) < 2:
            continue
        V = spectral.vectors[:, block]
        phi = V @ c[block]
        out += spectral.occupation_diagonals @ (np.abs(phi) ** 2) - spectral.eigen_occupations[:, block] @ (np.abs(c[block]) ** 2)
    return out


@dataclass
class LongTimeAverage:
    time_average: np.ndarray
    diagonal_ensemble: np.ndarray
    window: tuple


def long_time_average(traj: Trajectory, window: Optional[tuple] = None) -> LongTimeAverage:
    window = tuple(window) if window is not None else (traj.times[0], traj.times[-1])
    return LongTimeAverage(
        time_average(traj.times, traj.occupations, window),
        diagonal_ensemble(traj.psi1, traj.spectral),
        window,
    )


# canonical ensemble --------------------------------------------------------------


def gibbs_weights(energies: np.ndarray, beta: float) -> np.ndarray:
    x = -beta * (energies - energies[0])
    x -= x.max()
    p = np.exp(x)
    return p / p.sum()


def gibbs_energy(energies: np.ndarray, beta: float) -> float:
    return float(gibbs_weights(energies, beta) @ energies)


@dataclass
class ThermalReference:
    beta: float
    target_energy: float
    occupations: np.ndarray
    residual: float
    saturated: bool = False
    solvable: bool = True


def solve_beta(energy: float, spectral: SpectralData, beta_max: float = BETA_MAX, tol: float = 1e-8) -> ThermalReference:
    """Inverse temperature whose Gibbs energy equals ``energy``.

    ``beta -> <H2>_beta`` is monotone decreasing; the root is bracketed in
    ``[-beta_max, beta_max]``. Energies beyond the bracket saturate at the
    nearest end and are flagged.
    """
    w = spectral.energies
    if energy < w[0] - tol or energy > w[-1] + tol:
        return ThermalReference(math.nan, energy, np.full(spectral.H.n_sites, np.nan), math.inf, False, False)

    def f(b):
        return gibbs_energy(w, b) - energy

    saturated = False
    if f(beta_max) >= 0:
        beta, saturated = beta_max, True
    elif f(-beta_max) <= 0:
        beta, saturated = -beta_max, True
    else:
        beta = scipy.optimize.brentq(f, -beta_max, beta_max, xtol=1e-14, rtol=1e-15, maxiter=500)
    p = gibbs_weights(w, beta)
    occ = spectral.eigen_occupations @ p
    return ThermalReference(float(beta), energy, occ, abs(f(beta)), saturated, True)


@dataclass
class SiteReport:
    site: int
    time_average: float
    diagonal_ensemble: float
    thermal: float
    deviation: float
    deviation_diagonal: float
    thermal_consistent: bool


@dataclass
class ThermalizationReport:
    beta: float
    energy: float
    sites: list
    trajectory: Trajectory = field(repr=False)
    thermal: ThermalReference = field(repr=False)

    def site(self, i: int) -> SiteReport:
        return self.sites[i - 1]

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "energy": self.energy,
            "saturated": self.thermal.saturated,
            "sites": [s.__dict__ for s in self.sites],
        }


def thermalization_report(
    config: QuenchConfig, threshold: float = 0.02, spectral: Optional[SpectralData] = None
) -> ThermalizationReport:
    traj = run_quench(config, spectral)
    lta = long_time_average(traj, config.window)
    ref = solve_beta(traj.energy, traj.spectral)
    sites = []
    for i in range(traj.occupations.shape[1]):
        dev = abs(lta.time_average[i] - ref.occupations[i])
        sites.append(
            SiteReport(
                i + 1, float(lta.time_average[i]), float(lta.diagonal_ensemble[i]), float(ref.occupations[i]),
                float(dev), float(abs(lta.diagonal_ensemble[i] - ref.occupations[i])), bool(dev < threshold),
            )
        )
    return ThermalizationReport(ref.beta, traj.energy, sites, traj, ref)
