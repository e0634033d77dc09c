"""Quadrature on the reference disc and on deformed fiber domains.

Every fiber ``X_t`` is the image of the open unit disc under the fiber map
``z -> f(t, z)`` of a deformation family.  Area integrals over ``X_t`` are
pulled back to the disc, where a tensor Gauss-Legendre (radius) x
trapezoid (angle) rule is used.  Boundary integrals use the trapezoid
rule on the image of the unit circle.

The functions here only rely on two methods of the family object,
``fiber_map(t, z)`` and ``jet(t, z)``, plus the optional
``exact_inverse(t, w)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InversionDiverged, NonInjectiveFiber, PointOutsideFiber

DEFAULT_N_R = 24
DEFAULT_N_THETA = 96
DEFAULT_N_B = 256


def _frozen(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ReferenceQuadrature:
    """Polar product rule for Lebesgue area measure on the unit disc."""

    nodes: np.ndarray
    weights: np.ndarray
    n_r: int
    n_theta: int

    def integrate(self, values):
        return np.sum(self.weights * values, axis=-1)


@dataclass(frozen=True)
class FiberQuadrature:
    """Area rule on ``X_t`` obtained by pushing a reference rule forward.

    ``source`` keeps the reference-disc preimages of ``nodes`` so that
    quantities defined in terms of the source coordinate (Beltrami
    coefficients, admissible fields) need no inversion.
    """

    t: complex
    nodes: np.ndarray
    weights: np.ndarray
    jacobians: np.ndarray
    source: np.ndarray
    reference: ReferenceQuadrature

    def integrate(self, values):
        return np.sum(self.weights * values, axis=-1)

    @property
    def area(self) -> float:
        return float(np.sum(self.weights))


@dataclass(frozen=True)
class BoundaryQuadrature:
    """Trapezoid rule for arc length on ``dX_t``."""

    t: complex
    nodes: np.ndarray
    weights: np.ndarray
    source_angles: np.ndarray

    def integrate(self, values):
        return np.sum(self.weights * values, axis=-1)

    @property
    def length(self) -> float:
        return float(np.sum(self.weights))

    @property
    def source(self) -> np.ndarray:
        return np.exp(1j * self.source_angles)

    @property
    def inradius(self) -> float:
        """Distance from the origin to the sampled boundary."""
        return float(np.min(np.abs(self.nodes)))


def build_reference_quadrature(n_r: int = DEFAULT_N_R, n_theta: int = DEFAULT_N_THETA) -> ReferenceQuadrature:
    """Gauss-Legendre in ``r`` against ``r dr`` crossed with equispaced angles.

    The rule integrates ``z**j * conj(z)**k`` exactly whenever
    ``j + k <= 2*n_r - 1`` and ``|j - k| < n_theta``.

    Parameters
    ----------
    n_r : int
        Number of radial Gauss-Legendre nodes, at least 2.
    n_theta : int
        Number of equispaced angles, at least 4.
    """
    if n_r < 2 or n_theta < 4:
        raise ConfigError(f"need n_r >= 2 and n_theta >= 4, got n_r={n_r}, n_theta={n_theta}")
    x, w = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * (x + 1.0)
    wr = 0.5 * w * r
    theta = 2.0 * np.pi * np.arange(n_theta) / n_theta
    nodes = (r[:, None] * np.exp(1j * theta)[None, :]).ravel()
    weights = np.repeat(wr * (2.0 * np.pi / n_theta), n_theta)
    return ReferenceQuadrature(_frozen(nodes), _frozen(weights), n_r, n_theta)


def pushforward_area(family, t: complex, ref: ReferenceQuadrature) -> FiberQuadrature:
    """Change variables ``zeta = f(t, z)`` in a reference rule.

    Raises
    ------
    NonInjectiveFiber
        If the Jacobian ``|f_z|**2 - |f_zbar|**2`` is not positive at
        every node.
    """
    jet = family.jet(t, ref.nodes)
    jac = np.abs(jet.f_z) ** 2 - np.abs(jet.f_zbar) ** 2
    if not np.all(jac > 0):
        raise NonInjectiveFiber(f"Jacobian not positive at t={t!r} (min {jac.min():.3e})")
    return FiberQuadrature(
        t=complex(t),
        nodes=_frozen(jet.f),
        weights=_frozen(ref.weights * jac),
        jacobians=_frozen(jac),
        source=ref.nodes,
        reference=ref,
    )


def boundary_quadrature(family, t: complex, n_b: int = DEFAULT_N_B) -> BoundaryQuadrature:
    """Arc-length rule on the image of the unit circle under ``f(t, .)``."""
    if n_b < 4:
        raise ConfigError(f"need n_b >= 4, got {n_b}")
    theta = 2.0 * np.pi * np.arange(n_b) / n_b
    z = np.exp(1j * theta)
    jet = family.jet(t, z)
    jac = np.abs(jet.f_z) ** 2 - np.abs(jet.f_zbar) ** 2
    if not np.all(jac > 0):
        raise NonInjectiveFiber(f"boundary Jacobian not positive at t={t!r}")
    # d/dtheta f(t, e^{i theta}) = i z f_z - i conj(z) f_zbar
    speed = np.abs(1j * z * jet.f_z - 1j * np.conj(z) * jet.f_zbar)
    return BoundaryQuadrature(
        t=complex(t),
        nodes=_frozen(jet.f),
        weights=_frozen(speed * (2.0 * np.pi / n_b)),
        source_angles=_frozen(theta),
    )


def invert_fiber_map(
    family,
    t,
    w,
    *,
    seed=None,
    require_inside: bool = True,
    max_iter: int = 50,
    tol: float = 1e-12,
):
    """Solve ``f(t, z) = w`` for ``z``.

    Families with a closed-form inverse (``exact_inverse``) bypass the
    iteration.  Otherwise Newton's method is applied to the real
    two-dimensional system, seeded at ``z0 = w`` unless ``seed`` is
    given.  ``t`` and ``w`` broadcast against each other.

    Raises
    ------
    InversionDiverged
        If the residual is not below ``tol`` after ``max_iter`` steps.
    PointOutsideFiber
        If ``require_inside`` and some solution has ``|z| >= 1``.
    """
    t_arr, w_arr = np.broadcast_arrays(np.asarray(t, dtype=complex), np.asarray(w, dtype=complex))
    exact = getattr(family, "exact_inverse", None)
    z = exact(t_arr, w_arr) if exact is not None else None
    if z is None:
        z = np.array(w_arr if seed is None else np.broadcast_to(seed, w_arr.shape), dtype=complex)
        scale = np.maximum(1.0, np.abs(w_arr))
        converged = False
        for _ in range(max_iter):
            jet = family.jet(t_arr, z)
            res = jet.f - w_arr
            if converged:
                break
            if np.all(np.abs(res) < tol * scale):
                # one more quadratic step drives the residual to rounding level
                converged = True
            det = np.abs(jet.f_z) ** 2 - np.abs(jet.f_zbar) ** 2
            z = z - (np.conj(jet.f_z) * res - jet.f_zbar * np.conj(res)) / det
        worst = np.max(np.abs(family.fiber_map(t_arr, z) - w_arr) / scale, initial=0.0)
        if not worst < tol:
            raise InversionDiverged(f"Newton inversion residual {worst:.3e} after {max_iter} iterations")
    if require_inside and np.any(np.abs(z) >= 1.0):
        raise PointOutsideFiber("point lies outside the fiber domain")
    return z if np.ndim(z) else complex(z)
