"""Layered circuits and piecewise-constant pulses built from resource evolutions.

A layer evolves the state under the resource Hamiltonian with per-layer
controls ``J`` (interaction strength), ``L`` (range), ``h`` (on-site drive)
and one or more durations:

* ``simultaneous``: ``exp(-i [H_int(J, L) + H_drive(h)] T)``
* ``quenched``: ``exp(-i H_drive(h) T_drv) exp(-i H_int(J, L) T_int)``
* ``spin1_triple``: interaction, then ``h sum S^z`` for ``T_rot``, then the
  ``(S^x)^2`` anisotropy for ``T_aniso``.

The optimizer sees ``ln L`` for ranges and ``|x|`` for durations, so every
real vector maps to admissible controls.
"""

from __future__ import annotations

import enum
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence, Union

import numpy as np

from . import fermion, spin
from .models import (
    FERMIONIC,
    ModelKind,
    HamiltonianSpec,
    InteractionProfile,
    ProfileKind,
    Term,
    profile_weight,
    term_list,
)


class LayerMode(str, enum.Enum):
    SIMULTANEOUS = "simultaneous"
    QUENCHED = "quenched"
    SPIN1_TRIPLE = "spin1_triple"


FIELDS = {
    LayerMode.SIMULTANEOUS: ("J", "L", "h", "T"),
    LayerMode.QUENCHED: ("J", "L", "h", "T_int", "T_drv"),
    LayerMode.SPIN1_TRIPLE: ("J", "L", "h", "T_int", "T_rot", "T_aniso"),
}
DURATIONS = frozenset({"T", "T_int", "T_drv", "T_rot", "T_aniso"})
INTERACTION_TIME = {
    LayerMode.SIMULTANEOUS: "T",
    LayerMode.QUENCHED: "T_int",
    LayerMode.SPIN1_TRIPLE: "T_int",
}

State = Union[spin.DenseState, fermion.GaussianState]


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class LayerSpec:
    """Layer mode plus the names of the per-layer controls left free."""

    mode: LayerMode
    free: tuple[str, ...]

    def __post_init__(self):
        mode = LayerMode(self.mode)
        object.__setattr__(self, "mode", mode)
        free = tuple(self.free)
        unknown = set(free) - set(FIELDS[mode])
        if unknown:
            raise CircuitError(f"unknown controls {sorted(unknown)} for {mode.value} layers")
        # keep canonical field order
        object.__setattr__(self, "free", tuple(f for f in FIELDS[mode] if f in free))

    @property
    def fields(self) -> tuple[str, ...]:
        return FIELDS[self.mode]

    @classmethod
    def default(cls, mode, resource: HamiltonianSpec) -> "LayerSpec":
        """Durations free; ``L`` free for programmable profiles; ``h`` free in
        simultaneous mode, where it is the only handle on the drive."""
        mode = LayerMode(mode)
        free = [f for f in FIELDS[mode] if f in DURATIONS]
        if resource.profile.is_programmable:
            free.insert(0, "L")
        if mode is LayerMode.SIMULTANEOUS:
            free.insert(1 if resource.profile.is_programmable else 0, "h")
        return cls(mode, tuple(free))

    def check_backend(self, resource: HamiltonianSpec):
        if self.mode is LayerMode.SPIN1_TRIPLE and resource.local_dim != 3:
            raise CircuitError("spin1_triple layers need a spin-1 resource")


def _drive_name(resource: HamiltonianSpec) -> str:
    return "mu" if resource.model_kind is ModelKind.KITAEV_QUADRATIC else "h"


@dataclass(frozen=True, eq=False)
class ParameterVector:
    """All layer controls in natural units, shape ``(depth, n_fields)``."""

    mode: LayerMode
    values: np.ndarray
    free: tuple[str, ...]

    def __post_init__(self):
        mode = LayerMode(self.mode)
        object.__setattr__(self, "mode", mode)
        vals = np.array(self.values, dtype=float).reshape(-1, len(FIELDS[mode]))
        names = FIELDS[mode]
        for k, name in enumerate(names):
            if name in DURATIONS and np.any(vals[:, k] < 0):
                raise CircuitError(f"negative duration in {name}")
            if name == "L" and np.any(vals[:, k] <= 0):
                raise CircuitError("ranges must be positive")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "free", LayerSpec(mode, self.free).free)

    @property
    def fields(self) -> tuple[str, ...]:
        return FIELDS[self.mode]

    @property
    def depth(self) -> int:
        return self.values.shape[0]

    @property
    def layer_spec(self) -> LayerSpec:
        return LayerSpec(self.mode, self.free)

    @property
    def n_free(self) -> int:
        return self.depth * len(self.free)

    def _free_idx(self) -> list[int]:
        return [self.fields.index(f) for f in self.free]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.fields.index(name)]

    def layer(self, k: int) -> dict[str, float]:
        return dict(zip(self.fields, self.values[k]))

    # packing in natural coordinates (exact round trip)
    def flat(self) -> np.ndarray:
        return self.values[:, self._free_idx()].reshape(-1).copy()

    def with_flat(self, x: Sequence[float]) -> "ParameterVector":
        x = np.asarray(x, dtype=float)
        if x.size != self.n_free:
            raise CircuitError(f"expected {self.n_free} values, got {x.size}")
        vals = self.values.copy()
        vals[:, self._free_idx()] = x.reshape(self.depth, len(self.free))
        return ParameterVector(self.mode, vals, self.free)

    # optimizer coordinates
    def to_unconstrained(self) -> np.ndarray:
        sub = self.values[:, self._free_idx()].copy()
        for k, name in enumerate(self.free):
            if name == "L":
                sub[:, k] = np.log(sub[:, k])
        return sub.reshape(-1)

    def from_unconstrained(self, x: Sequence[float]) -> "ParameterVector":
        x = np.asarray(x, dtype=float).reshape(self.depth, len(self.free)).copy()
        for k, name in enumerate(self.free):
            if name == "L":
                x[:, k] = np.exp(np.clip(x[:, k], -30.0, 30.0))
            elif name in DURATIONS:
                x[:, k] = np.abs(x[:, k])
        return self.with_flat(x.reshape(-1))

    @classmethod
    def initial(
        cls,
        resource: HamiltonianSpec,
        layers: LayerSpec,
        depth: int,
        duration: float = 0.1,
        h: Optional[float] = None,
        L: Optional[float] = None,
    ) -> "ParameterVector":
        """Cold start: short durations, resource couplings, default range."""
        names = FIELDS[layers.mode]
        drive = resource.couplings[_drive_name(resource)] if h is None else h
        if L is None:
            L = 2.0 if resource.profile.kind is ProfileKind.POWER_LAW else 1.0
            if not resource.profile.is_programmable:
                L = 1.0
        row = []
        for name in names:
            if name == "J":
                row.append(resource.couplings["J"])
            elif name == "L":
                row.append(L)
            elif name == "h":
                row.append(drive)
            else:
                row.append(duration)
        return cls(layers.mode, np.tile(row, (depth, 1)), layers.free)

    def padded(self, extra: int = 1, duration: float = 1e-6) -> "ParameterVector":
        """Append near-identity layers that copy the last layer's couplings."""
        if self.depth == 0:
            raise CircuitError("cannot pad an empty circuit without a template")
        last = self.values[-1].copy()
        for k, name in enumerate(self.fields):
            if name in DURATIONS:
                last[k] = duration
        vals = np.vstack([self.values] + [last] * extra)
        return ParameterVector(self.mode, vals, self.free)

    def truncated(self, depth: int) -> "ParameterVector":
        return ParameterVector(self.mode, self.values[:depth], self.free)

    def to_dict(self) -> dict[str, Any]:
        return {
            "mode": self.mode.value,
            "fields": list(self.fields),
            "free": list(self.free),
            "depth": self.depth,
            "values": self.values.reshape(-1).tolist(),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ParameterVector":
        mode = LayerMode(data["mode"])
        if list(data.get("fields", FIELDS[mode])) != list(FIELDS[mode]):
            raise CircuitError("layout descriptor does not match the layer mode")
        vals = np.asarray(data["values"], dtype=float).reshape(int(data["depth"]), len(FIELDS[mode]))
        return cls(mode, vals, tuple(data["free"]))


SCHEDULE_FIELDS = ("J", "L", "h")


@dataclass(frozen=True, eq=False)
class PulseSchedule:
    """Piecewise-constant controls, one row of ``(J, L, h)`` per time step."""

    dt: float
    values: np.ndarray
    free: tuple[str, ...] = ("J", "L", "h")

    def __post_init__(self):
        if not self.dt > 0:
            raise CircuitError("time step must be positive")
        vals = np.array(self.values, dtype=float).reshape(-1, len(SCHEDULE_FIELDS))
        if vals.shape[0] < 1:
            raise CircuitError("schedule needs at least one step")
        if np.any(vals[:, 1] <= 0):
            raise CircuitError("ranges must be positive")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "free", tuple(f for f in SCHEDULE_FIELDS if f in self.free))

    @property
    def n_steps(self) -> int:
        return self.values.shape[0]

    @property
    def total_time(self) -> float:
        return self.n_steps * self.dt

    def column(self, name: str) -> np.ndarray:
        return self.values[:, SCHEDULE_FIELDS.index(name)]

    def as_layers(self) -> ParameterVector:
        vals = np.column_stack([self.values, np.full(self.n_steps, self.dt)])
        free = tuple(self.free) + ("T",)
        return ParameterVector(LayerMode.SIMULTANEOUS, vals, free)

    @classmethod
    def constant(cls, dt: float, n_steps: int, J: float, L: float, h: float, free=("J", "L", "h")):
        return cls(dt, np.tile([J, L, h], (n_steps, 1)), free)

    def resampled(self, n_steps: int) -> "PulseSchedule":
        """Stretch onto ``n_steps`` steps of the same ``dt``.

        Energies are rescaled by the time ratio so the first-order action of
        the pulse (and, for constant pulses, the exact propagator) is kept;
        ranges are interpolated without rescaling.
        """
        ratio = self.n_steps / n_steps
        t_old = (np.arange(self.n_steps) + 0.5) / self.n_steps
        t_new = (np.arange(n_steps) + 0.5) / n_steps
        cols = []
        for k, name in enumerate(SCHEDULE_FIELDS):
            col = np.interp(t_new, t_old, self.values[:, k])
            cols.append(col if name == "L" else col * ratio)
        return PulseSchedule(self.dt, np.column_stack(cols), self.free)

    def to_dict(self) -> dict[str, Any]:
        return {
            "dt": self.dt,
            "fields": list(SCHEDULE_FIELDS),
            "free": list(self.free),
            "n_steps": self.n_steps,
            "values": self.values.reshape(-1).tolist(),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PulseSchedule":
        vals = np.asarray(data["values"], dtype=float).reshape(int(data["n_steps"]), len(SCHEDULE_FIELDS))
        return cls(float(data["dt"]), vals, tuple(data.get("free", SCHEDULE_FIELDS)))


def total_interaction_time(params: Union[ParameterVector, PulseSchedule, None]) -> float:
    if params is None:
        return 0.0
    if isinstance(params, PulseSchedule):
        return params.total_time
    if params.depth == 0:
        return 0.0
    return float(np.sum(params.column(INTERACTION_TIME[params.mode])))


# generators --------------------------------------------------------------------


def _split_terms(resource: HamiltonianSpec, J: float, L: float, h: float):
    """Two-site terms at (J, L) and one-site terms at drive strength h."""
    spec = resource.with_couplings(**{"J": J, _drive_name(resource): h})
    if resource.profile.is_programmable:
        spec = spec.with_profile(resource.profile.with_range(L))
    terms = term_list(spec)
    two = [t for t in terms if len(t.sites) == 2]
    one = [t for t in terms if len(t.sites) == 1]
    return two, one


class CircuitRunner:
    """Applies circuits for one resource on one backend basis.

    Generators (and therefore their spectral decompositions) are cached by
    control values, so repeated evaluations that share layers, e.g. finite
    difference probes, reuse eigensystems.
    """

    def __init__(self, resource: HamiltonianSpec, template: State, cache_size: int = 256):
        self.resource = resource
        self.fermionic = resource.model_kind in FERMIONIC
        if self.fermionic != isinstance(template, fermion.GaussianState):
            raise CircuitError("initial state does not match the resource backend")
        if self.fermionic:
            if template.n_modes != resource.n_sites:
                raise CircuitError("mode count mismatch")
            self.sector = None
        else:
            if (template.n_sites, template.local_dim) != (resource.n_sites, resource.local_dim):
                raise CircuitError("state basis does not match the resource")
            self.sector = template.sector
        self._fast = resource.model_kind is ModelKind.KITAEV_QUADRATIC
        self._cache: OrderedDict = OrderedDict()
        self.cache_size = cache_size

    def _cached(self, key, build):
        try:
            val = self._cache.pop(key)
        except KeyError:
            val = build()
        self._cache[key] = val
        if len(self._cache) > self.cache_size:
            self._cache.popitem(last=False)
        return val

    def _kitaev_pair_matrices(self, L: float):
        """Unit-strength hopping and pairing matrices of the quadratic resource."""
        def build():
            n = self.resource.n_sites
            d = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
            profile = self.resource.profile.with_range(L) if self.resource.profile.is_programmable else self.resource.profile
            w = np.zeros((n, n))
            off = d > 0
            w[off] = profile_weight(profile, d[off])
            upper = np.triu(w, 1)
            return w, upper - upper.T

        return self._cached(("kit", L), build)

    def _kitaev(self, J: float, L: float, mu: float, with_int: bool = True, with_drive: bool = True):
        n = self.resource.n_sites
        A = np.zeros((n, n))
        B = np.zeros((n, n))
        offset = 0.0
        if with_int and J != 0.0:
            hop, pair = self._kitaev_pair_matrices(L)
            A = J * hop
            B = J * pair
        if with_drive and mu != 0.0:
            A = A - mu * np.eye(n)
            offset = 0.5 * mu * n
        return fermion.QuadraticHamiltonian(A, B, offset)

    def _operator(self, terms: Sequence[Term]):
        if self.fermionic:
            return fermion.quadratic_from_terms(terms, self.resource.n_sites)
        return spin.OperatorMatrix(
            self.resource.n_sites, self.resource.local_dim, terms=terms, sector=self.sector
        )

    def interaction(self, J: float, L: float):
        L = L if self.resource.profile.is_programmable else 1.0
        if self._fast:
            return self._cached(("int", J, L), lambda: self._kitaev(J, L, 0.0, with_drive=False))
        return self._cached(("int", J, L), lambda: self._operator(_split_terms(self.resource, J, L, 0.0)[0]))

    def drive(self, h: float, ops: Optional[frozenset] = None):
        if self._fast and ops is None:
            return self._cached(("drv", h, ops), lambda: self._kitaev(0.0, 1.0, h, with_int=False))

        def build():
            one = _split_terms(self.resource, 0.0, 1.0, h)[1]
            if ops is not None:
                one = [t for t in one if t.op in ops]
            return self._operator(one)

        return self._cached(("drv", h, ops), build)

    def full(self, J: float, L: float, h: float):
        L = L if self.resource.profile.is_programmable else 1.0

        if self._fast:
            return self._cached(("full", J, L, h), lambda: self._kitaev(J, L, h))

        def build():
            two, one = _split_terms(self.resource, J, L, h)
            return self._operator(two + one)

        return self._cached(("full", J, L, h), build)

    def evolve(self, state: State, generator, T: float) -> State:
        if T == 0:
            return state
        if self.fermionic:
            return fermion.evolve_gaussian(state, generator, T)
        return spin.evolve(state, generator, T)

    def apply_layer(self, state: State, mode: LayerMode, p: Mapping[str, float]) -> State:
        if mode is LayerMode.SIMULTANEOUS:
            return self.evolve(state, self.full(p["J"], p["L"], p["h"]), p["T"])
        if mode is LayerMode.QUENCHED:
            state = self.evolve(state, self.interaction(p["J"], p["L"]), p["T_int"])
            return self.evolve(state, self.drive(p["h"]), p["T_drv"])
        if mode is LayerMode.SPIN1_TRIPLE:
            state = self.evolve(state, self.interaction(p["J"], p["L"]), p["T_int"])
            state = self.evolve(state, self.drive(p["h"], frozenset({"Sz"})), p["T_rot"])
            return self.evolve(state, self.drive(p["h"], frozenset({"Sx2"})), p["T_aniso"])
        raise CircuitError(f"unknown layer mode {mode}")

    def run(self, rho0: State, theta: ParameterVector) -> State:
        if theta.mode is LayerMode.SPIN1_TRIPLE and self.resource.local_dim != 3:
            raise CircuitError("spin1_triple layers need a spin-1 resource")
        state = rho0
        for k in range(theta.depth):
            state = self.apply_layer(state, theta.mode, theta.layer(k))
        return state

    def run_schedule(self, rho0: State, schedule: PulseSchedule) -> State:
        state = rho0
        for J, L, h in schedule.values:
            state = self.evolve(state, self.full(J, L, h), schedule.dt)
        return state


def apply_circuit(
    rho0: State, resource: HamiltonianSpec, layers: Optional[LayerSpec], theta: ParameterVector
) -> State:
    """Prepare U(theta) rho0 with the resource's gate family."""
    if layers is not None:
        if LayerMode(layers.mode) is not theta.mode:
            raise CircuitError("parameter vector and layer spec disagree on the mode")
        layers.check_backend(resource)
    return CircuitRunner(resource, rho0).run(rho0, theta)


def apply_schedule(rho0: State, resource: HamiltonianSpec, schedule: PulseSchedule) -> State:
    return CircuitRunner(resource, rho0).run_schedule(rho0, schedule)


# initial states ----------------------------------------------------------------


def initial_state(target: HamiltonianSpec, fermion_start: str = "filled", sector: Optional[bool] = None) -> State:
    """Reference product state for a benchmark target.

    Spin targets start from the product of single-site ground states of their
    on-site terms (all up for the TFIM; aligned with the local field for the
    AAH chain, restricted to its magnetization sector). Fermionic targets start
    from the empty (``vacuum``) or fully occupied (``filled``) chain.
    """
    if target.model_kind in FERMIONIC:
        if fermion_start == "vacuum":
            return fermion.vacuum(target.n_sites)
        if fermion_start == "filled":
            return fermion.filled(target.n_sites)
        raise CircuitError(f"unknown fermionic start {fermion_start!r}")
    state = spin.local_ground_state(target)
    use_sector = target.model_kind in (ModelKind.AAH, ModelKind.AAH_RESOURCE) if sector is None else sector
    if use_sector and target.couplings.get("g", 0.0) == 0.0:
        k = spin.sector_of(state)
        if k is not None:
            state = state.to_sector(k)
    return state
