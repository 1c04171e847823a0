"""Four desk-scale model systems.

Each constructor returns a fully analytic problem: energy, exact partial
time derivative, dissipation, and (where the energy is quadratic in u) a
closed-form u-elimination, so reduced energies are exact up to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from numpy.typing import NDArray

from .core import (
    INF,
    CorrectionSpec,
    RisProblem,
    TrivialH,
)

__all__ = [
    "Toy1dSpec",
    "Damage1dSpec",
    "Plasticity0dSpec",
    "Delamination0dSpec",
    "make_toy1d",
    "make_damage1d",
    "make_plasticity0d",
    "make_delamination0d",
]


def _affine(coeffs) -> tuple[Callable[[float], float], Callable[[float], float]]:
    c0, c1 = float(coeffs[0]), float(coeffs[1])
    return (lambda t: c0 + c1 * t), (lambda t: c1)


# ---------------------------------------------------------------------------
# scalar toy


@dataclass(frozen=True)
class Toy1dSpec:
    well: str = "convex"  # convex | doublewell
    a: float = 1.0  # convex curvature
    b: float = 1.0  # barrier height
    w: float = 1.0  # well separation
    kappa: float = 1.0
    ell: tuple[float, float] = (0.0, 2.0)  # affine loading coefficients
    horizon: float = 1.0
    z_box: tuple[float, float] = (-10.0, 10.0)
    correction: Optional[CorrectionSpec] = None

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if self.well not in ("convex", "doublewell"):
            raise ValueError("well must be 'convex' or 'doublewell'")
        if self.well == "convex" and self.a <= 0:
            raise ValueError("convex curvature must be positive")


def make_toy1d(spec: Toy1dSpec) -> RisProblem:
    """Scalar energy W(z) - ell(t) z with |.|-type dissipation (n_u = 0)."""
    ell, dell = _affine(spec.ell)
    kappa = spec.kappa
    if spec.well == "convex":
        a = spec.a
        W = lambda z: 0.5 * a * z * z
    else:
        b, w = spec.b, spec.w
        W = lambda z: b * (z * z - w * w) ** 2 / w ** 4
    lo, hi = spec.z_box

    def energy(t, u, z):
        x = float(z[0])
        if x < lo - 1e-12 or x > hi + 1e-12:
            return INF
        return W(x) - ell(t) * x

    def power(t, u, z):
        return -dell(t) * float(z[0])

    def dissipation(z, zp):
        return kappa * abs(float(zp[0]) - float(z[0]))

    def reduced_vec(t, pts):
        x = pts[:, 0]
        return W(x) - ell(t) * x

    def dissipation_vec(z, pts):
        return kappa * np.abs(pts[:, 0] - float(z[0]))

    prob = RisProblem(
        n_u=0,
        n_z=1,
        energy=energy,
        power=power,
        dissipation=dissipation,
        z_box=(spec.z_box,),
        horizon=spec.horizon,
        reduced_vec=reduced_vec,
        dissipation_vec=dissipation_vec,
        name=f"toy1d-{spec.well}",
    )
    return prob.with_correction(spec.correction)


# ---------------------------------------------------------------------------
# scalar perfect plasticity


@dataclass(frozen=True)
class Plasticity0dSpec:
    C: float = 1.0
    sigma_y: float = 1.0
    eps: tuple[float, float] = (0.0, 1.0)  # affine strain program
    horizon: float = 2.0
    z_box: tuple[float, float] = (-5.0, 5.0)
    correction: Optional[CorrectionSpec] = None

    def __post_init__(self):
        if self.C <= 0 or self.sigma_y <= 0:
            raise ValueError("C and sigma_y must be positive")


def make_plasticity0d(spec: Plasticity0dSpec) -> RisProblem:
    """Stored energy C (eps(t) - p)^2 / 2 with yield-type dissipation."""
    eps, deps = _affine(spec.eps)
    C, sy = spec.C, spec.sigma_y
    lo, hi = spec.z_box

    def energy(t, u, z):
        p = float(z[0])
        if p < lo - 1e-12 or p > hi + 1e-12:
            return INF
        return 0.5 * C * (eps(t) - p) ** 2

    def power(t, u, z):
        return C * (eps(t) - float(z[0])) * deps(t)

    def dissipation(z, zp):
        return sy * abs(float(zp[0]) - float(z[0]))

    def reduced_vec(t, pts):
        return 0.5 * C * (eps(t) - pts[:, 0]) ** 2

    def dissipation_vec(z, pts):
        return sy * np.abs(pts[:, 0] - float(z[0]))

    prob = RisProblem(
        n_u=0,
        n_z=1,
        energy=energy,
        power=power,
        dissipation=dissipation,
        z_box=(spec.z_box,),
        horizon=spec.horizon,
        reduced_vec=reduced_vec,
        dissipation_vec=dissipation_vec,
        name="plasticity0d",
        extras={
            "sigma": lambda t, z: C * (eps(t) - float(z[0])),
            "sigma_y": sy,
            "C": C,
            "eps": eps,
        },
    )
    return prob.with_correction(spec.correction)


# ---------------------------------------------------------------------------
# 1-d damage bar


@dataclass(frozen=True)
class Damage1dSpec:
    N: int = 2  # cells on [0, 1], mesh size 1/N
    E0: Union[float, tuple] = 1.0  # per-cell stiffness profile
    eta: float = 0.25  # residual stiffness fraction
    r: float = 2.0  # gradient exponent
    grad_weight: float = 4.0
    kappa: Union[float, tuple] = 1.0  # per-cell dissipation weight
    w_D: tuple[float, float] = (0.0, 4.0)  # affine boundary displacement
    horizon: float = 1.0
    correction: Optional[CorrectionSpec] = field(
        default_factory=lambda: TrivialH(h=lambda r: 1e-4 * r ** 4)
    )

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("need at least one cell")
        if not (0 < self.eta < 1):
            raise ValueError("eta must lie in (0, 1)")
        if self.r <= 1:
            raise ValueError("gradient exponent must exceed 1")
        ks = self.kappa if isinstance(self.kappa, tuple) else (self.kappa,)
        if min(ks) <= 0:
            raise ValueError("kappa must be bounded below by a positive constant")


def make_damage1d(spec: Damage1dSpec) -> RisProblem:
    """N-cell bar, clamped at 0, displaced to w_D(t) at 1; z = cell damage.

    Stiffness of cell i is (eta + (1 - eta) z_i) E0_i — nondecreasing in z,
    so lowering z releases elastic energy at a dissipative price.  Healing
    (any increase of z) costs +infinity.
    """
    N = spec.N
    h = 1.0 / N
    E0 = np.full(N, spec.E0) if np.isscalar(spec.E0) else np.asarray(spec.E0, float)
    kap = (
        np.full(N, spec.kappa)
        if np.isscalar(spec.kappa)
        else np.asarray(spec.kappa, float)
    )
    if len(E0) != N or len(kap) != N:
        raise ValueError("profiles must have one entry per cell")
    eta, r, gw = spec.eta, spec.r, spec.grad_weight
    wD, dwD = _affine(spec.w_D)

    def stiff(z):
        return (eta + (1.0 - eta) * z) * E0

    def grad_term(z):
        if N == 1:
            return 0.0
        dz = np.abs(np.diff(z))
        return gw * float(np.sum(dz ** r)) / (r * h ** (r - 1))

    def energy(t, u, z):
        if np.any(z < -1e-12) or np.any(z > 1.0 + 1e-12):
            return INF
        nodes = np.concatenate([[0.0], np.asarray(u, float), [wD(t)]])
        k = stiff(np.asarray(z, float))
        el = 0.5 * float(np.sum(k * np.diff(nodes) ** 2)) / h
        return el + grad_term(np.asarray(z, float))

    def solve_u(t, z):
        z = np.asarray(z, float)
        k = stiff(z)
        # series springs: strain splits inversely to stiffness
        comp = h / k
        ctot = float(np.sum(comp))
        w = wD(t)
        keff = 1.0 / ctot
        u = w * np.cumsum(comp)[:-1] / ctot
        val = 0.5 * keff * w * w + grad_term(z)
        return u, val

    def power(t, u, z):
        # only the boundary cell touches the imposed displacement
        nodes = np.concatenate([[0.0], np.asarray(u, float), [wD(t)]])
        kN = stiff(np.asarray(z, float))[-1]
        return kN * (nodes[-1] - nodes[-2]) / h * dwD(t)

    def dissipation(z, zp):
        dz = np.asarray(zp, float) - np.asarray(z, float)
        if np.any(dz > 1e-12):
            return INF
        return float(np.sum(kap * np.abs(dz)))

    def reduced_vec(t, pts):
        # pts: (M, N) batch of in-box damage states
        k = stiff(pts)
        keff = 1.0 / np.sum(h / k, axis=1)
        w = wD(t)
        if N == 1:
            grad = 0.0
        else:
            dz = np.abs(np.diff(pts, axis=1))
            grad = gw * np.sum(dz ** r, axis=1) / (r * h ** (r - 1))
        return 0.5 * keff * w * w + grad

    def dissipation_vec(z, pts):
        dz = pts - np.asarray(z, float)[None, :]
        out = np.sum(kap * np.abs(dz), axis=1)
        out[np.any(dz > 1e-12, axis=1)] = INF
        return out

    prob = RisProblem(
        n_u=N - 1,
        n_z=N,
        energy=energy,
        power=power,
        dissipation=dissipation,
        z_box=tuple((0.0, 1.0) for _ in range(N)),
        horizon=spec.horizon,
        unidirectional=True,
        solve_u=solve_u if N > 1 else None,
        reduced_vec=reduced_vec,
        dissipation_vec=dissipation_vec,
        name="damage1d",
        extras={"h": h, "eta": eta, "E0": E0, "kappa": kap, "w_D": wD},
    )
    return prob.with_correction(spec.correction)


# ---------------------------------------------------------------------------
# two-spring delamination


@dataclass(frozen=True)
class Delamination0dSpec:
    k_minus: float = 4.0
    k_plus: float = 4.0
    a0: float = 1.0  # stored adhesive energy per unit bonding
    kappa: float = 0.5
    ell: tuple[float, float] = (0.0, 2.0)  # affine pull program
    horizon: float = 1.0
    z_tol: float = 1e-12
    correction: Optional[CorrectionSpec] = field(
        default_factory=lambda: TrivialH(h=lambda r: r * r)
    )

    def __post_init__(self):
        if self.k_minus <= 0 or self.k_plus <= 0:
            raise ValueError("spring stiffnesses must be positive")
        if self.a0 < 0 or self.kappa <= 0:
            raise ValueError("need a0 >= 0 and kappa > 0")


def make_delamination0d(
    spec: Delamination0dSpec,
    brittle: bool = True,
    k: Optional[float] = None,
) -> RisProblem:
    """Two springs with a bondable interface: u = (u1, u2), gap [u] = u2 - u1.

    Adhesive variant penalizes (k/2) z [u]^2; the brittle variant enforces
    z [u] = 0 exactly (the gap may open only at z = 0).  Bonding stores -a0 z;
    debonding dissipates kappa per unit of z and cannot heal.
    """
    if not brittle and (k is None or k <= 0):
        raise ValueError("adhesive variant needs a positive penalty k")
    km, kp, a0, kappa = spec.k_minus, spec.k_plus, spec.a0, spec.kappa
    ell, dell = _affine(spec.ell)
    ztol = spec.z_tol
    ks = km * kp / (km + kp)

    def gap(u):
        return float(u[1]) - float(u[0])

    def energy(t, u, z):
        zz = float(z[0])
        if zz < -1e-12 or zz > 1.0 + 1e-12:
            return INF
        g = gap(u)
        if g < -1e-10:
            return INF  # nonpenetration
        e = 0.5 * km * float(u[0]) ** 2 + 0.5 * kp * (ell(t) - float(u[1])) ** 2
        e -= a0 * zz
        if brittle:
            if zz > ztol and abs(g) > 1e-10:
                return INF
            return e
        return e + 0.5 * k * zz * g * g

    def solve_u(t, z):
        zz = float(z[0])
        L = ell(t)
        if brittle and zz > ztol:
            u = kp * L / (km + kp)
            return np.array([u, u]), 0.5 * ks * L * L - a0 * zz
        if brittle or k * zz <= 1e-300:
            return np.array([0.0, L]), -a0 * zz
        keff = 1.0 / (1.0 / km + 1.0 / (k * zz) + 1.0 / kp)
        u1 = keff * L / km
        u2 = L - keff * L / kp
        return np.array([u1, u2]), 0.5 * keff * L * L - a0 * zz

    def power(t, u, z):
        return kp * (ell(t) - float(u[1])) * dell(t)

    def dissipation(z, zp):
        dz = float(zp[0]) - float(z[0])
        if dz > 1e-12:
            return INF
        return kappa * abs(dz)

    def reduced_vec(t, pts):
        zz = pts[:, 0]
        L = ell(t)
        if brittle:
            bonded = 0.5 * ks * L * L - a0 * zz
            return np.where(zz > ztol, bonded, -a0 * zz)
        keff = np.where(
            k * zz > 1e-300,
            1.0 / (1.0 / km + 1.0 / np.maximum(k * zz, 1e-300) + 1.0 / kp),
            0.0,
        )
        return 0.5 * keff * L * L - a0 * zz

    def dissipation_vec(z, pts):
        dz = pts[:, 0] - float(z[0])
        out = kappa * np.abs(dz)
        out[dz > 1e-12] = INF
        return out

    prob = RisProblem(
        n_u=2,
        n_z=1,
        energy=energy,
        power=power,
        dissipation=dissipation,
        z_box=((0.0, 1.0),),
        horizon=spec.horizon,
        unidirectional=True,
        solve_u=solve_u,
        reduced_vec=reduced_vec,
        dissipation_vec=dissipation_vec,
        name="delamination0d-brittle" if brittle else f"delamination0d-adhesive",
        extras={"gap": gap, "k_series": ks, "a0": a0, "kappa": kappa, "ell": ell},
    )
    return prob.with_correction(spec.correction)
