"""Interaction profiles and declarative Hamiltonian specifications.

Every model is an open chain with sites ``1..n_sites`` at unit spacing. A
:class:`HamiltonianSpec` is a pure value; backends turn its :func:`term_list`
into matrices (spin models) or BdG blocks (quadratic fermions).

Operator vocabulary used in terms:

=========  ==============================================================
``Z``      Pauli sigma^z (eigenvalues +-1)
``X``      Pauli sigma^x
``XX``     Pauli sigma^x_i sigma^x_j
``SxSx``   S^x_i S^x_j with spin operators (spin-1/2: S^x = sigma^x / 2)
``Sz``     spin-1 S^z
``Sx2``    spin-1 (S^x)^2
``PM``     sigma^+_i sigma^-_j + h.c.
``hop``    c^dag_j c_i + h.c.
``pair``   c^dag_j c^dag_i + h.c.  (i < j)
``num``    c^dag_i c_i - 1/2
=========  ==============================================================

The programmable Ising resource uses ``SxSx`` on spin-1/2, i.e. the
sigma^x = (sigma^+ + sigma^-)/2 normalization with eigenvalues +-1/2, while
the TFIM target uses full Pauli ``XX``; with that choice the target critical
point stays at |J/h| = 1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, NamedTuple

import numpy as np


class ModelError(ValueError):
    """Raised when a specification is inconsistent."""

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class UnsupportedModelError(ModelError):
    pass


class ProfileKind(str, enum.Enum):
    EXPONENTIAL = "exponential"
    POWER_LAW = "power_law"
    NEAREST_NEIGHBOR = "nearest_neighbor"


@dataclass(frozen=True)
class InteractionProfile:
    """Spatial decay f_L(d) of the programmable couplings.

    ``range_param`` is a decay length for exponential profiles and an exponent
    for power laws; it is ignored for nearest-neighbour couplings.
    """

    kind: ProfileKind = ProfileKind.NEAREST_NEIGHBOR
    range_param: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ProfileKind(self.kind))
        if self.kind is not ProfileKind.NEAREST_NEIGHBOR and not self.range_param > 0:
            raise ModelError(f"range parameter must be positive, got {self.range_param}")

    @property
    def is_programmable(self) -> bool:
        return self.kind is not ProfileKind.NEAREST_NEIGHBOR

    def weight(self, d):
        return profile_weight(self, d)

    def with_range(self, range_param: float) -> "InteractionProfile":
        return replace(self, range_param=float(range_param))


NN = InteractionProfile(ProfileKind.NEAREST_NEIGHBOR)


def exponential(length: float) -> InteractionProfile:
    return InteractionProfile(ProfileKind.EXPONENTIAL, float(length))


def power_law(exponent: float) -> InteractionProfile:
    return InteractionProfile(ProfileKind.POWER_LAW, float(exponent))


def profile_weight(profile: InteractionProfile, d):
    """Evaluate f_L at integer distance(s) ``d >= 1``.

    Accepts a scalar or an array of distances.
    """
    d_arr = np.asarray(d)
    if d_arr.dtype.kind not in "iuf" or np.any(d_arr < 1) or np.any(d_arr != np.round(d_arr)):
        raise ValueError(f"distances must be integers >= 1, got {d!r}")
    kind = ProfileKind(profile.kind)
    if kind is ProfileKind.NEAREST_NEIGHBOR:
        w = (d_arr == 1).astype(float)
    else:
        L = profile.range_param
        if not L > 0:
            raise ValueError(f"range parameter must be positive, got {L}")
        d_f = d_arr.astype(float)
        if kind is ProfileKind.EXPONENTIAL:
            w = np.exp(-d_f / L)
        else:
            w = d_f ** (-L)
    return float(w) if np.ndim(w) == 0 else w


class ModelKind(str, enum.Enum):
    XX = "XX"
    ISING = "Ising"
    BLUME_CAPEL = "BlumeCapel"
    KITAEV_QUADRATIC = "KitaevQuadratic"
    TFIM = "TFIM"
    KITAEV_TARGET = "KitaevTarget"
    BC_TARGET = "BCTarget"
    AAH = "AAH"
    AAH_RESOURCE = "AAHResource"


# (required couplings, optional couplings with defaults)
_COUPLINGS: dict[ModelKind, tuple[tuple[str, ...], dict[str, float]]] = {
    ModelKind.XX: (("J", "h"), {"g": 0.0}),
    ModelKind.ISING: (("J", "h"), {}),
    ModelKind.BLUME_CAPEL: (("J", "aniso_d", "h"), {}),
    ModelKind.KITAEV_QUADRATIC: (("J", "mu"), {}),
    ModelKind.TFIM: (("J", "h"), {}),
    ModelKind.KITAEV_TARGET: (("t", "delta", "mu"), {}),
    ModelKind.BC_TARGET: (("J", "aniso_d", "h"), {}),
    ModelKind.AAH: (("J", "h", "alpha"), {"g": 0.0}),
    ModelKind.AAH_RESOURCE: (("J", "h", "alpha"), {"g": 0.0}),
}

# models whose two-site couplings follow a programmable profile
PROGRAMMABLE = frozenset(
    {
        ModelKind.XX,
        ModelKind.ISING,
        ModelKind.BLUME_CAPEL,
        ModelKind.KITAEV_QUADRATIC,
        ModelKind.AAH_RESOURCE,
    }
)
FERMIONIC = frozenset({ModelKind.KITAEV_QUADRATIC, ModelKind.KITAEV_TARGET})
SPIN_ONE = frozenset({ModelKind.BLUME_CAPEL, ModelKind.BC_TARGET})
# models conserving total sigma^z (when g == 0)
U1_SYMMETRIC = frozenset({ModelKind.XX, ModelKind.AAH, ModelKind.AAH_RESOURCE})

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def required_couplings(kind) -> tuple[str, ...]:
    return _COUPLINGS[ModelKind(kind)][0]


def local_dim(kind) -> int:
    kind = ModelKind(kind)
    return 3 if kind in SPIN_ONE else 2


def _get(obj, name, default=None):
    if isinstance(obj, Mapping):
        return obj.get(name, default)
    return getattr(obj, name, default)


def validate(spec) -> list[str]:
    """Collect every violation in a spec (or a mapping with the same keys).

    An empty list means the spec is admissible.
    """
    errors = []
    raw_kind = _get(spec, "model_kind")
    try:
        kind = ModelKind(raw_kind)
    except ValueError:
        errors.append(f"unknown model kind {raw_kind!r}")
        kind = None

    n = _get(spec, "n_sites")
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        errors.append(f"n_sites must be an integer, got {n!r}")
    elif n < 2:
        errors.append(f"n_sites must be >= 2, got {n}")

    couplings = _get(spec, "couplings") or {}
    if kind is not None:
        required, optional = _COUPLINGS[kind]
        for name in required:
            if name not in couplings:
                errors.append(f"missing coupling {name}")
        for name, value in couplings.items():
            if name not in required and name not in optional:
                errors.append(f"unexpected coupling {name} for {kind.value}")
            elif not isinstance(value, (int, float, np.floating, np.integer)) or not np.isfinite(value):
                errors.append(f"coupling {name} must be a finite real, got {value!r}")

    profile = _get(spec, "profile")
    if profile is not None:
        try:
            pkind = ProfileKind(_get(profile, "kind"))
        except ValueError:
            errors.append(f"unknown profile kind {_get(profile, 'kind')!r}")
            pkind = None
        L = _get(profile, "range_param", 1.0)
        if pkind is not None and pkind is not ProfileKind.NEAREST_NEIGHBOR:
            if not isinstance(L, (int, float, np.floating)) or not L > 0:
                errors.append(f"profile range must be positive, got {L!r}")
            if kind is not None and kind not in PROGRAMMABLE:
                errors.append(f"{kind.value} is a nearest-neighbour model; programmable profile not allowed")
    return errors


@dataclass(frozen=True)
class HamiltonianSpec:
    """Declarative description of a resource or target chain model."""

    model_kind: ModelKind
    n_sites: int
    couplings: Mapping[str, float]
    profile: InteractionProfile = NN

    def __post_init__(self):
        errors = validate(self)
        if errors:
            raise ModelError(errors)
        kind = ModelKind(self.model_kind)
        object.__setattr__(self, "model_kind", kind)
        full = dict(_COUPLINGS[kind][1])
        full.update({k: float(v) for k, v in self.couplings.items()})
        object.__setattr__(self, "couplings", full)
        if self.profile is None:
            object.__setattr__(self, "profile", NN)

    def __hash__(self):
        return hash((self.model_kind, self.n_sites, tuple(sorted(self.couplings.items())), self.profile))

    def __getitem__(self, name: str) -> float:
        return self.couplings[name]

    @property
    def local_dim(self) -> int:
        return local_dim(self.model_kind)

    @property
    def is_fermionic(self) -> bool:
        return self.model_kind in FERMIONIC

    def resized(self, n_sites: int) -> "HamiltonianSpec":
        return replace(self, n_sites=int(n_sites))

    def with_couplings(self, **updates: float) -> "HamiltonianSpec":
        couplings = dict(self.couplings)
        couplings.update(updates)
        return replace(self, couplings=couplings)

    def with_profile(self, profile: InteractionProfile) -> "HamiltonianSpec":
        return replace(self, profile=profile)

    def to_dict(self) -> dict[str, Any]:
        return {
            "model_kind": self.model_kind.value,
            "n_sites": self.n_sites,
            "couplings": dict(sorted(self.couplings.items())),
            "profile": {"kind": self.profile.kind.value, "range_param": self.profile.range_param},
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "HamiltonianSpec":
        prof = data.get("profile")
        profile = NN if prof is None else InteractionProfile(prof["kind"], prof.get("range_param", 1.0))
        return cls(data["model_kind"], int(data["n_sites"]), dict(data["couplings"]), profile)


class Term(NamedTuple):
    coeff: float
    op: str
    sites: tuple[int, ...]


def _pairs(n: int, profile: InteractionProfile):
    """Yield (i, j, f(|i-j|)) over i < j with non-zero weight."""
    if ProfileKind(profile.kind) is ProfileKind.NEAREST_NEIGHBOR:
        for i in range(1, n):
            yield i, i + 1, 1.0
        return
    weights = profile_weight(profile, np.arange(1, n)) if n > 1 else np.array([])
    for i in range(1, n):
        for j in range(i + 1, n + 1):
            w = float(weights[j - i - 1])
            if w != 0.0:
                yield i, j, w


def aah_potential(n: int, alpha: float) -> np.ndarray:
    """cos(2 pi alpha j) for j = 1..n."""
    j = np.arange(1, n + 1)
    return np.cos(2.0 * np.pi * alpha * j)


def term_list(spec: HamiltonianSpec) -> list[Term]:
    kind = spec.model_kind
    c = spec.couplings
    n = spec.n_sites
    sites = range(1, n + 1)
    terms: list[Term] = []
    profile = spec.profile if kind in PROGRAMMABLE else NN

    if kind is ModelKind.TFIM:
        terms += [Term(-c["J"], "XX", (i, j)) for i, j, _ in _pairs(n, NN)]
        terms += [Term(-c["h"], "Z", (i,)) for i in sites]
    elif kind is ModelKind.ISING:
        terms += [Term(c["J"] * w, "SxSx", (i, j)) for i, j, w in _pairs(n, profile)]
        terms += [Term(c["h"], "Z", (i,)) for i in sites]
    elif kind is ModelKind.XX:
        terms += [Term(c["J"] * w, "PM", (i, j)) for i, j, w in _pairs(n, profile)]
        terms += [Term(c["h"], "Z", (i,)) for i in sites]
        if c["g"]:
            terms += [Term(c["g"], "X", (i,)) for i in sites]
    elif kind in (ModelKind.AAH, ModelKind.AAH_RESOURCE):
        sign = -1.0 if kind is ModelKind.AAH else 1.0
        terms += [Term(sign * c["J"] * w, "PM", (i, j)) for i, j, w in _pairs(n, profile)]
        pot = aah_potential(n, c["alpha"])
        terms += [Term(-c["h"] * pot[i - 1], "Z", (i,)) for i in sites]
        if c["g"]:
            terms += [Term(c["g"], "X", (i,)) for i in sites]
    elif kind in (ModelKind.BLUME_CAPEL, ModelKind.BC_TARGET):
        terms += [Term(-c["J"] * w, "SxSx", (i, j)) for i, j, w in _pairs(n, profile)]
        terms += [Term(c["aniso_d"], "Sx2", (i,)) for i in sites]
        terms += [Term(c["h"], "Sz", (i,)) for i in sites]
    elif kind is ModelKind.KITAEV_QUADRATIC:
        for i, j, w in _pairs(n, profile):
            terms.append(Term(c["J"] * w, "hop", (i, j)))
            terms.append(Term(c["J"] * w, "pair", (i, j)))
        terms += [Term(-c["mu"], "num", (i,)) for i in sites]
    elif kind is ModelKind.KITAEV_TARGET:
        for i, j, _ in _pairs(n, NN):
            terms.append(Term(-c["t"], "hop", (i, j)))
            terms.append(Term(c["delta"], "pair", (i, j)))
        terms += [Term(-c["mu"], "num", (i,)) for i in sites]
    else:  # pragma: no cover - enum is exhaustive
        raise UnsupportedModelError(f"unsupported model {kind}")
    return terms


# Constructors for the benchmark targets ---------------------------------------------


def tfim(n: int, J: float = 1.0, h: float = 1.0) -> HamiltonianSpec:
    return HamiltonianSpec(ModelKind.TFIM, n, {"J": J, "h": h})


def kitaev_chain(n: int, t: float = 1.0, delta: float = 1.0, mu: float = 2.0) -> HamiltonianSpec:
    return HamiltonianSpec(ModelKind.KITAEV_TARGET, n, {"t": t, "delta": delta, "mu": mu})


def blume_capel(n: int, J: float = 1.0, h: float = 1.1, aniso_d: float = 0.3135) -> HamiltonianSpec:
    return HamiltonianSpec(ModelKind.BC_TARGET, n, {"J": J, "h": h, "aniso_d": aniso_d})


def aah(n: int, h: float = 4.0, J: float = 1.0, alpha: float = GOLDEN, g: float = 0.0) -> HamiltonianSpec:
    return HamiltonianSpec(ModelKind.AAH, n, {"J": J, "h": h, "alpha": alpha, "g": g})
