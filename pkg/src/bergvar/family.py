"""Deformation families of the unit disc and their boundary geometry.

A family is a smooth map ``f(t, z)`` from ``D x D`` to the plane whose
fibers ``X_t = f(t, D)`` move with the base coordinate ``t``.  Motion
kinds (affine, trivial, polynomial) are holomorphic in ``t`` with
``f(0, z) = z``; the radial kind ``f = r(t) z`` is a Hartogs-type family
whose radius depends on ``(t, conj(t))``.

Besides the Wirtinger jet of ``f`` this module builds the admissible
vector field ``V = d/dt - alpha d/dmu`` attached to each family, the
mixed Wirtinger Hessian of a defining function, and the Levi-form
boundary invariant ``k2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, DegenerateBoundary, NonInjectiveFiber
from .geometry import invert_fiber_map

INJECTIVITY_MARGIN = 1e-3
RHO_STEP = 1e-3


def _pow(z, k):
    # z**k with k < 0 treated as identically zero (derivative of a constant)
    if k < 0:
        return np.zeros_like(z)
    return z**k


def _as_complex_list(coeffs) -> tuple[complex, ...]:
    return tuple(complex(c) for c in coeffs)


@dataclass(frozen=True)
class FiberJet:
    """First Wirtinger derivatives of ``f`` and ``t``-derivatives of the z-jet."""

    f: np.ndarray
    f_z: np.ndarray
    f_zbar: np.ndarray
    f_t: np.ndarray
    f_zbar_t: np.ndarray
    f_z_t: np.ndarray

    @property
    def J(self):
        """Beltrami coefficient ``f_zbar / f_z``."""
        return self.f_zbar / self.f_z

    @property
    def J_t(self):
        return (self.f_zbar_t * self.f_z - self.f_zbar * self.f_z_t) / self.f_z**2

    @property
    def jacobian(self):
        return np.abs(self.f_z) ** 2 - np.abs(self.f_zbar) ** 2


class DeformationFamily:
    """Base class.  Subclasses implement :meth:`jet`.

    Attributes
    ----------
    kind : str
        One of ``"affine"``, ``"trivial"``, ``"polynomial"``, ``"radial"``.
    is_motion : bool
        True when ``f`` is holomorphic in ``t`` and ``f(0, z) = z``.
    t_max : float
        Radius of the admissible parameter disc.
    """

    kind = "abstract"
    is_motion = True

    def __init__(self, t_max: float = 0.5):
        if not 0 < t_max < 1:
            raise ConfigError(f"t_max must lie in (0, 1), got {t_max}")
        self.t_max = float(t_max)

    def jet(self, t, z) -> FiberJet:
        raise NotImplementedError

    def fiber_map(self, t, z):
        return self.jet(t, z).f

    def exact_inverse(self, t, w):
        return None

    def check_parameter(self, t) -> complex:
        t = complex(t)
        if abs(t) > self.t_max + 1e-15:
            raise ConfigError(f"|t| = {abs(t):.3g} exceeds t_max = {self.t_max}")
        return t

    def injectivity_margin(self) -> float:
        """``1 - sup |f_zbar / f_z|`` over a sample grid of ``(t, z)``."""
        r = np.linspace(0.0, 1.0, 64)
        th = 2 * np.pi * np.arange(64) / 64
        z = (r[:, None] * np.exp(1j * th)[None, :]).ravel()
        ring = np.exp(2j * np.pi * np.arange(8) / 8)
        ts = np.concatenate([[0.0], 0.5 * self.t_max * ring, self.t_max * ring])
        worst = 0.0
        for t in ts:
            jet = self.jet(t, z)
            if np.any(jet.f_z == 0):
                return -np.inf
            worst = max(worst, float(np.max(np.abs(jet.J))))
        return 1.0 - worst

    def _validate(self):
        margin = self.injectivity_margin()
        if margin < INJECTIVITY_MARGIN:
            raise NonInjectiveFiber(
                f"{self.kind} family violates |J| <= 1 - {INJECTIVITY_MARGIN} (margin {margin:.3e})"
            )
        if self.is_motion:
            z = np.exp(1j * np.linspace(0, 2 * np.pi, 17)) * np.linspace(0, 1, 17)
            if np.max(np.abs(self.fiber_map(0.0, z) - z)) > 1e-14:
                raise ConfigError(f"{self.kind} motion does not satisfy f(0, z) = z")

    def describe(self) -> dict:
        return {"kind": self.kind, "t_max": self.t_max}


class AffineMotion(DeformationFamily):
    """``f(t, z) = z + a(t) conj(z)`` with ``a`` a polynomial, ``a(0) = 0``."""

    kind = "affine"

    def __init__(self, a: Sequence[complex], t_max: float = 0.5):
        super().__init__(t_max)
        self.a = _as_complex_list(a) or (0j,)
        self._poly = np.polynomial.Polynomial(self.a)
        self._dpoly = self._poly.deriv()
        self._validate()

    def a_of(self, t):
        return self._poly(np.asarray(t, dtype=complex))

    def da_of(self, t):
        return self._dpoly(np.asarray(t, dtype=complex))

    def jet(self, t, z):
        t, z = np.broadcast_arrays(np.asarray(t, dtype=complex), np.asarray(z, dtype=complex))
        a, da = self.a_of(t), self.da_of(t)
        zb = np.conj(z)
        return FiberJet(
            f=z + a * zb,
            f_z=np.ones_like(z),
            f_zbar=a,
            f_t=da * zb,
            f_zbar_t=da,
            f_z_t=np.zeros_like(z),
        )

    def exact_inverse(self, t, w):
        a = self.a_of(t)
        return (w - a * np.conj(w)) / (1.0 - np.abs(a) ** 2)

    def describe(self):
        return {**super().describe(), "a": [[c.real, c.imag] for c in self.a]}


class TrivialMotion(DeformationFamily):
    """A motion ``g(t, z)`` holomorphic in both variables.

    Use the constructors :meth:`identity`, :meth:`polynomial`,
    :meth:`exponential` and :meth:`mobius`.
    """

    kind = "trivial"

    def __init__(self, form: str, c: complex = 0j, terms=(), t_max: float = 0.5):
        super().__init__(t_max)
        if form not in ("polynomial", "exp", "mobius"):
            raise ConfigError(f"unknown trivial-motion form {form!r}")
        self.form = form
        self.c = complex(c)
        self.terms = tuple((int(p), int(q), complex(cf)) for p, q, cf in terms)
        if form == "polynomial" and any(p < 1 or q < 0 for p, q, _ in self.terms):
            raise ConfigError("polynomial trivial motion terms need p >= 1 and q >= 0")
        self._validate()

    @classmethod
    def identity(cls, t_max: float = 0.5):
        return cls("polynomial", t_max=t_max)

    @classmethod
    def polynomial(cls, terms, t_max: float = 0.5):
        """``g = z + sum c t**p z**q`` from ``(p, q, c)`` triples."""
        return cls("polynomial", terms=terms, t_max=t_max)

    @classmethod
    def exponential(cls, c: complex, t_max: float = 0.5):
        """``g = exp(c t) z``."""
        return cls("exp", c=c, t_max=t_max)

    @classmethod
    def mobius(cls, c: complex, t_max: float = 0.5):
        """``g = z / (1 - c t z)``."""
        return cls("mobius", c=c, t_max=t_max)

    @property
    def is_identity(self) -> bool:
        return (self.form == "polynomial" and not self.terms) or (self.form != "polynomial" and self.c == 0)

    def jet(self, t, z):
        t, z = np.broadcast_arrays(np.asarray(t, dtype=complex), np.asarray(z, dtype=complex))
        zero = np.zeros_like(z)
        c = self.c
        if self.form == "exp":
            e = np.exp(c * t)
            return FiberJet(e * z, e, zero, c * e * z, zero, c * e)
        if self.form == "mobius":
            d = 1.0 - c * t * z
            return FiberJet(z / d, 1.0 / d**2, zero, c * z**2 / d**2, zero, 2.0 * c * z / d**3)
        f, f_z, f_t, f_zt = z.copy(), np.ones_like(z), zero.copy(), zero.copy()
        for p, q, cf in self.terms:
            f = f + cf * t**p * z**q
            f_z = f_z + cf * q * t**p * _pow(z, q - 1)
            f_t = f_t + cf * p * _pow(t, p - 1) * z**q
            f_zt = f_zt + cf * p * q * _pow(t, p - 1) * _pow(z, q - 1)
        return FiberJet(f, f_z, zero, f_t, zero, f_zt)

    def exact_inverse(self, t, w):
        if self.form == "exp":
            return w * np.exp(-self.c * t)
        if self.form == "mobius":
            return w / (1.0 + self.c * t * w)
        if not self.terms:
            return np.array(w, dtype=complex)
        return None

    def describe(self):
        d = {**super().describe(), "form": self.form}
        if self.form == "polynomial":
            d["terms"] = [[p, q, cf.real, cf.imag] for p, q, cf in self.terms]
        else:
            d["c"] = [self.c.real, self.c.imag]
        return d


class PolynomialMotion(DeformationFamily):
    """``f = z + sum c t**p z**q conj(z)**r`` from ``(p, q, r, c)`` tuples, ``p >= 1``."""

    kind = "polynomial"

    def __init__(self, terms, t_max: float = 0.5):
        super().__init__(t_max)
        self.terms = tuple((int(p), int(q), int(r), complex(c)) for p, q, r, c in terms)
        if any(p < 1 or q < 0 or r < 0 for p, q, r, _ in self.terms):
            raise ConfigError("polynomial motion terms need p >= 1 and q, r >= 0")
        self._validate()

    def jet(self, t, z):
        t, z = np.broadcast_arrays(np.asarray(t, dtype=complex), np.asarray(z, dtype=complex))
        zb = np.conj(z)
        f, f_z = z.copy(), np.ones_like(z)
        f_zb, f_t, f_zbt, f_zt = (np.zeros_like(z) for _ in range(4))
        for p, q, r, c in self.terms:
            tp, dtp = t**p, p * _pow(t, p - 1)
            zq, zr = z**q, zb**r
            dzq, dzr = q * _pow(z, q - 1), r * _pow(zb, r - 1)
            f = f + c * tp * zq * zr
            f_z = f_z + c * tp * dzq * zr
            f_zb = f_zb + c * tp * zq * dzr
            f_t = f_t + c * dtp * zq * zr
            f_zt = f_zt + c * dtp * dzq * zr
            f_zbt = f_zbt + c * dtp * zq * dzr
        return FiberJet(f, f_z, f_zb, f_t, f_zbt, f_zt)

    def describe(self):
        return {**super().describe(), "terms": [[p, q, r, c.real, c.imag] for p, q, r, c in self.terms]}


class RadialFamily(DeformationFamily):
    """Discs ``|mu| < r(t)`` with a positive radius depending on ``(t, conj t)``.

    Parameters
    ----------
    r, r_t, r_ttbar : callable
        The radius and its Wirtinger derivatives ``dr/dt`` and
        ``d2r/dt dtbar`` as vectorized functions of complex ``t``.
    """

    kind = "radial"
    is_motion = False

    def __init__(self, r: Callable, r_t: Callable, r_ttbar: Callable, t_max: float = 0.5, label: dict | None = None):
        super().__init__(t_max)
        self.r, self.r_t, self.r_ttbar = r, r_t, r_ttbar
        self._label = label or {}
        self._validate()

    @classmethod
    def gaussian(cls, kappa: float = 1.0, scale: float = 1.0, t_max: float = 0.5):
        """``r(t) = scale * exp(-kappa |t|**2)``."""

        def r(t):
            return scale * np.exp(-kappa * np.abs(t) ** 2)

        def r_t(t):
            return -kappa * np.conj(t) * r(t)

        def r_ttbar(t):
            return (kappa**2 * np.abs(t) ** 2 - kappa) * r(t)

        return cls(r, r_t, r_ttbar, t_max, {"kappa": kappa, "scale": scale})

    @classmethod
    def constant(cls, radius: float, t_max: float = 0.5):
        return cls.gaussian(0.0, radius, t_max)

    def jet(self, t, z):
        t, z = np.broadcast_arrays(np.asarray(t, dtype=complex), np.asarray(z, dtype=complex))
        r = self.r(t).real.astype(complex)
        rt = self.r_t(t)
        zero = np.zeros_like(z)
        return FiberJet(r * z, r, zero, rt * z, zero, rt)

    def exact_inverse(self, t, w):
        return w / self.r(t).real

    def rho_jet(self, t, w):
        """Analytic jet of ``rho = |mu|**2 - r(t)**2``."""
        t = complex(t)
        w = np.asarray(w, dtype=complex)
        r, rt, rtt = float(np.real(self.r(t))), complex(self.r_t(t)), complex(self.r_ttbar(t))
        ones = np.ones(w.shape)
        return WirtingerHessian(
            rho=np.abs(w) ** 2 - r**2,
            rho_t=-2.0 * r * rt * ones,
            rho_mu=np.conj(w),
            rho_ttbar=-2.0 * (abs(rt) ** 2 + r * rtt.real) * ones,
            rho_tmubar=np.zeros(w.shape, dtype=complex),
            rho_mumubar=ones,
        )

    def describe(self):
        return {**super().describe(), **self._label}


# ---------------------------------------------------------------------------
# admissible vector fields


def alpha_at_source(family: DeformationFamily, t, z):
    """``(alpha, alpha_zetabar)`` at ``zeta = f(t, z)`` given the source point ``z``."""
    jet = family.jet(t, z)
    if family.kind == "radial":
        r = np.real(family.r(t))
        alpha = -2.0 * (family.r_t(t) / r) * jet.f
        return alpha, np.zeros_like(alpha)
    alpha = -jet.f_t
    alpha_zb = -(jet.f_z**2) * jet.J_t / jet.jacobian
    return alpha, alpha_zb


def alpha_field(family: DeformationFamily, t, zeta):
    """Coefficient ``alpha`` of the admissible field and its ``zetabar`` derivative.

    For motions ``alpha = -f_t`` composed with the inverse fiber map, and
    ``alpha_zetabar = -(f_z)**2 J_t / (|f_z|**2 - |f_zbar|**2)``.  Radial
    families use ``alpha = -2 (r_t / r) zeta``.
    """
    if family.kind == "radial":
        r = np.real(family.r(t))
        alpha = -2.0 * (family.r_t(t) / r) * np.asarray(zeta, dtype=complex)
        return alpha, np.zeros_like(alpha)
    z = invert_fiber_map(family, t, zeta)
    return alpha_at_source(family, t, z)


@dataclass(frozen=True)
class AdmissibleField:
    """``V = d/dt - alpha d/dmu`` tied to a deformation family."""

    family: DeformationFamily

    def alpha(self, t, mu):
        return alpha_field(self.family, t, mu)[0]

    def alpha_mubar(self, t, mu):
        return alpha_field(self.family, t, mu)[1]

    def boundary_residual(self, t, n_b: int = 64) -> float:
        """``max |rho_t - alpha rho_mu|`` over boundary samples."""
        z = np.exp(2j * np.pi * np.arange(n_b) / n_b)
        jet = self.family.jet(t, z)
        hess = defining_hessian(self.family, t, jet.f, source=z)
        alpha, _ = alpha_at_source(self.family, t, z)
        return float(np.max(np.abs(hess.rho_t - alpha * hess.rho_mu)))


# ---------------------------------------------------------------------------
# defining function, Levi form, k2


@dataclass(frozen=True)
class WirtingerHessian:
    """Value, gradient and mixed Hessian of a defining function ``rho(t, mu)``."""

    rho: np.ndarray
    rho_t: np.ndarray
    rho_mu: np.ndarray
    rho_ttbar: np.ndarray
    rho_tmubar: np.ndarray
    rho_mumubar: np.ndarray

    @property
    def rho_mutbar(self):
        return np.conj(self.rho_tmubar)


def _real_derivatives(func, t, w, h):
    t = complex(t)
    f0 = func(t, w)
    steps = {"a": (h, 0), "b": (1j * h, 0), "c": (0, h), "d": (0, 1j * h)}
    plus = {k: func(t + dt, w + dw) for k, (dt, dw) in steps.items()}
    minus = {k: func(t - dt, w - dw) for k, (dt, dw) in steps.items()}
    d1 = {k: (plus[k] - minus[k]) / (2 * h) for k in steps}
    d2 = {k + k: (plus[k] - 2 * f0 + minus[k]) / h**2 for k in steps}
    for k, l in (("a", "c"), ("a", "d"), ("b", "c"), ("b", "d")):
        (tk, wk), (tl, wl) = steps[k], steps[l]
        pp = func(t + tk + tl, w + wk + wl)
        pm = func(t + tk - tl, w + wk - wl)
        mp = func(t - tk + tl, w - wk + wl)
        mm = func(t - tk - tl, w - wk - wl)
        d2[k + l] = (pp - pm - mp + mm) / (4 * h**2)
    return f0, d1, d2


def wirtinger_hessian_fd(func, t, w, h: float = RHO_STEP) -> WirtingerHessian:
    """Finite-difference Wirtinger jet of a real function ``func(t, w)``.

    Central differences on the four real coordinates at steps ``h`` and
    ``h/2`` are combined by one Richardson step.
    """
    w = np.asarray(w, dtype=complex)
    f0, d1h, d2h = _real_derivatives(func, t, w, h)
    _, d1q, d2q = _real_derivatives(func, t, w, h / 2)
    d1 = {k: (4 * d1q[k] - d1h[k]) / 3 for k in d1h}
    d2 = {k: (4 * d2q[k] - d2h[k]) / 3 for k in d2h}
    return WirtingerHessian(
        rho=f0,
        rho_t=0.5 * (d1["a"] - 1j * d1["b"]),
        rho_mu=0.5 * (d1["c"] - 1j * d1["d"]),
        rho_ttbar=0.25 * (d2["aa"] + d2["bb"]),
        rho_tmubar=0.25 * (d2["ac"] + d2["bd"] + 1j * (d2["ad"] - d2["bc"])),
        rho_mumubar=0.25 * (d2["cc"] + d2["dd"]),
    )


def pullback_defining_function(family: DeformationFamily, seed=None):
    """``rho(t, w) = |f^{-1}(t, w)|**2 - 1`` as a vectorized callable."""

    def rho(t, w):
        z = invert_fiber_map(family, t, w, seed=seed, require_inside=False)
        return np.abs(z) ** 2 - 1.0

    return rho


def defining_hessian(family: DeformationFamily, t, w, *, method: str = "auto", h: float = RHO_STEP, source=None):
    """Wirtinger Hessian of a defining function of the graph at ``(t, w)``.

    ``method="auto"`` uses the closed form ``|mu|**2 - r(t)**2`` for radial
    families and finite differences of the pulled-back function
    ``|f^{-1}(t, w)|**2 - 1`` otherwise.  ``source`` optionally seeds the
    Newton inversions with known preimages.
    """
    if method not in ("auto", "fd", "analytic"):
        raise ConfigError(f"unknown method {method!r}")
    if method == "analytic" or (method == "auto" and family.kind == "radial"):
        if family.kind != "radial":
            raise ConfigError("analytic defining function only available for radial families")
        return family.rho_jet(t, w)
    return wirtinger_hessian_fd(pullback_defining_function(family, seed=source), t, w, h)


def k2_from_hessian(hess: WirtingerHessian, alpha):
    """``<V, V>_{i ddbar rho} / |rho_mu|`` for ``V = (1, -alpha)``."""
    grad = np.abs(hess.rho_mu)
    if np.any(grad < 1e-6):
        raise DegenerateBoundary(f"|rho_mu| = {np.min(grad):.3e} too small")
    levi = (
        hess.rho_ttbar
        - hess.rho_tmubar * np.conj(alpha)
        - hess.rho_mutbar * alpha
        + hess.rho_mumubar * np.abs(alpha) ** 2
    )
    k2 = levi / grad
    assert np.all(np.abs(np.imag(k2)) < 1e-8), "Levi form must be real"
    return np.real(k2)


def k2_on_boundary(family: DeformationFamily, t, source_points, **kwargs):
    """``k2`` at the boundary points ``f(t, z)`` for ``|z| = 1``."""
    z = np.asarray(source_points, dtype=complex)
    w = family.fiber_map(t, z)
    hess = defining_hessian(family, t, w, source=z, **kwargs)
    alpha, _ = alpha_at_source(family, t, z)
    return k2_from_hessian(hess, alpha)


def k2_invariant(family: DeformationFamily, t, boundary_point, **kwargs):
    """Second boundary invariant at a point of ``dX_t``."""
    w = np.asarray(boundary_point, dtype=complex)
    z = invert_fiber_map(family, t, w, require_inside=False)
    if np.any(np.abs(np.abs(z) - 1.0) > 1e-8):
        raise ConfigError("boundary_point is not on the fiber boundary")
    k2 = k2_on_boundary(family, t, z, **kwargs)
    return k2 if np.ndim(k2) else float(k2)
