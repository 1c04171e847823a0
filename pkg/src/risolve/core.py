"""Problem abstraction for rate-independent evolutions.

A problem is the triple (state space, energy, dissipation quasi-distance)
plus an optional viscous correction.  Energies and dissipations are
extended-real valued: ``math.inf`` is the one and only representation of
"+infinity" (constraint violations); sentinel large floats are never used.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "State",
    "RisProblem",
    "CorrectionSpec",
    "TrivialH",
    "QuadraticMu",
    "PowerLq",
    "build_correction",
    "Trajectory",
    "JumpRecord",
    "eval_energy",
    "eval_dissipation",
    "eval_correction",
    "eval_power",
    "is_finite",
]

INF = math.inf


def is_finite(x: float) -> bool:
    """True for an ordinary real; False for +infinity."""
    if math.isnan(x):
        raise ValueError("NaN is not an admissible extended-real value")
    return x != INF


def _as_z(z) -> NDArray[np.float64]:
    a = np.atleast_1d(np.asarray(z, dtype=float))
    if a.ndim != 1:
        raise ValueError("z must be a 1-d vector")
    return a


@dataclass(frozen=True)
class State:
    """A pair (u, z); u may be empty for reduced problems."""

    u: NDArray[np.float64]
    z: NDArray[np.float64]

    def __post_init__(self):
        object.__setattr__(self, "u", np.atleast_1d(np.asarray(self.u, dtype=float)))
        object.__setattr__(self, "z", _as_z(self.z))
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.z))):
            raise ValueError("state entries must be finite")


# ---------------------------------------------------------------------------
# viscous corrections


@dataclass(frozen=True)
class CorrectionSpec:
    """Base class tag; concrete kinds below."""


@dataclass(frozen=True)
class TrivialH(CorrectionSpec):
    """Correction delta(z, z') = h(d(z, z')) with h nondecreasing, h(r)/r -> 0 at 0.

    ``h`` is any scalar callable; the admissibility of the decay is probed by
    :func:`risolve.stability.correction_ratio_check`, not assumed here.
    """

    h: Callable[[float], float]

    def __post_init__(self):
        if abs(self.h(0.0)) > 1e-15:
            raise ValueError("h(0) must be 0")


@dataclass(frozen=True)
class QuadraticMu(CorrectionSpec):
    """Correction delta = (mu/2) * dist(z, z')**2.

    ``dist`` selects the squared distance: "euclidean" uses |z'-z|, while
    "dissipation" reuses the problem's own d.
    """

    mu: float
    dist: str = "euclidean"

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("mu must be nonnegative")
        if self.dist not in ("euclidean", "dissipation"):
            raise ValueError("dist must be 'euclidean' or 'dissipation'")


@dataclass(frozen=True)
class PowerLq(CorrectionSpec):
    """Correction delta = |z' - z|_q ** gamma (componentwise q-norm)."""

    q: float
    gamma: float

    def __post_init__(self):
        if self.q <= 1 or self.gamma <= 1:
            raise ValueError("q and gamma must exceed 1")


def build_correction(spec: Optional[CorrectionSpec], problem: "RisProblem"):
    """Return a callable delta(z, z') implementing ``spec``.

    ``None`` (and mu=0) yield the zero correction.
    """
    if spec is None:
        return lambda z, zp: 0.0
    if isinstance(spec, TrivialH):
        h = spec.h

        def corr_h(z, zp):
            d = problem.dissipation(z, zp)
            if not is_finite(d):
                return INF
            return float(h(d))

        return corr_h
    if isinstance(spec, QuadraticMu):
        if spec.mu == 0.0:
            return lambda z, zp: 0.0
        mu = spec.mu
        if spec.dist == "euclidean":
            def corr_mu(z, zp):
                dz = _as_z(zp) - _as_z(z)
                return 0.5 * mu * float(dz @ dz)
        else:
            def corr_mu(z, zp):
                d = problem.dissipation(z, zp)
                if not is_finite(d):
                    return INF
                return 0.5 * mu * d * d
        return corr_mu
    if isinstance(spec, PowerLq):
        q, gamma = spec.q, spec.gamma

        def corr_lq(z, zp):
            dz = np.abs(_as_z(zp) - _as_z(z))
            return float(np.sum(dz ** q) ** (1.0 / q)) ** gamma

        return corr_lq
    raise TypeError(f"unknown correction spec {spec!r}")


# ---------------------------------------------------------------------------
# problem


@dataclass(frozen=True)
class RisProblem:
    """A finite-dimensional rate-independent system.

    energy(t, u, z) may return +infinity exactly where constraints are
    violated; dissipation(z, z') is an asymmetric extended quasi-distance
    (``inf`` encodes forbidden directions such as healing); correction is
    the viscous perturbation used by the VE scheme and stability function.
    ``power`` is the analytic partial time derivative of the energy.
    """

    n_u: int
    n_z: int
    energy: Callable[[float, NDArray, NDArray], float]
    power: Callable[[float, NDArray, NDArray], float]
    dissipation: Callable[[NDArray, NDArray], float]
    z_box: Sequence[tuple[float, float]]
    horizon: float = 1.0
    correction: Callable[[NDArray, NDArray], float] = field(
        default=lambda z, zp: 0.0
    )
    correction_spec: Optional[CorrectionSpec] = None
    unidirectional: bool = False
    # optional closed-form hooks installed by model constructors
    solve_u: Optional[Callable[[float, NDArray], tuple[NDArray, float]]] = None
    # vectorized variants over an (M, n_z) batch of candidate states; used by
    # grid searches when present, byte-for-byte consistent with the scalar maps
    reduced_vec: Optional[Callable[[float, NDArray], NDArray]] = None
    dissipation_vec: Optional[Callable[[NDArray, NDArray], NDArray]] = None
    name: str = "problem"
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_u < 0 or self.n_z < 1:
            raise ValueError("need n_u >= 0 and n_z >= 1")
        if len(self.z_box) != self.n_z:
            raise ValueError("z_box length must equal n_z")
        for lo, hi in self.z_box:
            if not (lo < hi) or not (math.isfinite(lo) and math.isfinite(hi)):
                raise ValueError("z_box intervals must be bounded and nonempty")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        object.__setattr__(
            self, "_lo", np.array([b[0] for b in self.z_box], dtype=float)
        )
        object.__setattr__(
            self, "_hi", np.array([b[1] for b in self.z_box], dtype=float)
        )

    def with_correction(self, spec: Optional[CorrectionSpec]) -> "RisProblem":
        """Copy of the problem using the correction described by ``spec``."""
        out = dataclasses.replace(self, correction_spec=spec)
        return dataclasses.replace(out, correction=build_correction(spec, out))

    def in_box(self, z) -> bool:
        z = np.asarray(z, dtype=float)
        return bool(
            np.all(z >= self._lo - 1e-12) and np.all(z <= self._hi + 1e-12)
        )

    def clip(self, z) -> NDArray[np.float64]:
        return np.clip(_as_z(z), self._lo, self._hi)


def _check_dims(problem: RisProblem, s: State) -> None:
    if s.u.shape != (problem.n_u,) and not (problem.n_u == 0 and s.u.size == 0):
        raise ValueError(f"u has shape {s.u.shape}, expected ({problem.n_u},)")
    if s.z.shape != (problem.n_z,):
        raise ValueError(f"z has shape {s.z.shape}, expected ({problem.n_z},)")


def eval_energy(problem: RisProblem, t: float, s: State) -> float:
    """E(t, u, z); +infinity exactly on constraint violation."""
    _check_dims(problem, s)
    if not (-1e-12 <= t <= problem.horizon + 1e-12):
        raise ValueError(f"t={t} outside [0, {problem.horizon}]")
    v = float(problem.energy(t, s.u, s.z))
    if math.isnan(v) or v == -INF:
        raise ValueError("energy returned an inadmissible value")
    return v


def eval_dissipation(problem: RisProblem, z_from, z_to) -> float:
    """d(z_from, z_to) in [0, +infinity]."""
    z_from, z_to = _as_z(z_from), _as_z(z_to)
    if z_from.shape != (problem.n_z,) or z_to.shape != (problem.n_z,):
        raise ValueError("dissipation arguments have wrong dimension")
    v = float(problem.dissipation(z_from, z_to))
    if math.isnan(v) or v < -1e-12:
        raise ValueError("dissipation must be nonnegative")
    return max(v, 0.0)


def eval_correction(problem: RisProblem, z_from, z_to) -> float:
    """delta(z_from, z_to) in [0, +infinity]."""
    v = float(problem.correction(_as_z(z_from), _as_z(z_to)))
    if math.isnan(v) or v < -1e-12:
        raise ValueError("correction must be nonnegative")
    return max(v, 0.0)


def eval_power(problem: RisProblem, t: float, s: State) -> float:
    """Analytic partial_t E; defined only where the energy is finite."""
    _check_dims(problem, s)
    if not is_finite(eval_energy(problem, t, s)):
        raise ValueError("power undefined at infinite energy")
    return float(problem.power(t, s.u, s.z))


# ---------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True)
class JumpRecord:
    """A detected discontinuity: left state, largest intermediate, right state."""

    t: float
    z_left: NDArray[np.float64]
    z_inner: NDArray[np.float64]
    z_right: NDArray[np.float64]
    chain: object = None
    t_end: Optional[float] = None


@dataclass(frozen=True)
class Trajectory:
    """Time nodes with states; left-continuous piecewise-constant in between."""

    times: NDArray[np.float64]
    states: tuple[State, ...]
    jump_records: tuple[JumpRecord, ...] = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", t)
        if len(t) != len(self.states) or len(t) == 0:
            raise ValueError("times and states must align and be nonempty")
        if np.any(np.diff(t) <= 0):
            raise ValueError("node times must be strictly increasing")

    def state_at(self, t: float) -> State:
        """Value of the left-continuous interpolant at time t."""
        times = self.times
        if t <= times[0]:
            return self.states[0]
        # state on (t^{n-1}, t^n] is the node-n state
        n = int(np.searchsorted(times, t, side="left"))
        n = min(n, len(times) - 1)
        return self.states[n]

    @property
    def n_nodes(self) -> int:
        return len(self.states)
