"""Weighted Bergman spaces of polynomials on a fiber domain.

The inner product is the form pairing

    <<u, v>> = i * integral u conj(v) e^{-phi} dmu ^ dmubar
             = 2 * integral u conj(v) e^{-phi} dA,

so the kernel returned by :meth:`BergmanSpace.kernel` is half the kernel
of the Lebesgue-measure convention (exposed as
:meth:`BergmanSpace.classical_kernel`).  Polynomials are expanded in
monomials ``mu**j`` centred at the origin, which lies in every fiber.

Coefficient conventions: a polynomial ``u = sum_a c_a mu**a`` is stored
as the vector ``c``; the Gram matrix is ``G[j, k] = <<mu**k, mu**j>>``
so that ``<<u, v>> = d^H G c`` for coefficient vectors ``c`` of ``u`` and
``d`` of ``v``.  The kernel is ``K(zeta, conj eta) = v(zeta)^T M
conj(v(eta))`` with ``M = B B^H = G^{-1}``, where ``v`` is the monomial
vector and the columns of ``B`` hold an orthonormal basis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, NamedTuple

import numpy as np

from .errors import ConfigError, DegreeTooHigh, RankDeficient
from .geometry import (
    DEFAULT_N_R,
    DEFAULT_N_THETA,
    FiberQuadrature,
    ReferenceQuadrature,
    boundary_quadrature,
    build_reference_quadrature,
    pushforward_area,
)

TRUNCATION = 1e-10


class Weight:
    """Real polynomial weight ``phi = sum c t^a tbar^b mu^c mubar^d``.

    ``terms`` maps exponent tuples ``(a, b, c, d)`` to complex
    coefficients; reality requires ``coef(a, b, c, d) ==
    conj(coef(b, a, d, c))``.
    """

    def __init__(self, terms: Mapping[tuple[int, int, int, int], complex] | None = None):
        self.terms = {tuple(int(e) for e in k): complex(v) for k, v in (terms or {}).items() if v != 0}
        for (a, b, c, d), v in self.terms.items():
            if any(e < 0 for e in (a, b, c, d)):
                raise ConfigError("weight exponents must be nonnegative")
            partner = self.terms.get((b, a, d, c), 0j)
            if abs(partner - np.conj(v)) > 1e-14 * max(1.0, abs(v)):
                raise ConfigError(f"weight is not real: term {(a, b, c, d)} lacks its conjugate partner")

    @classmethod
    def zero(cls):
        return cls()

    @classmethod
    def from_list(cls, rows):
        """Build from rows ``[a, b, c, d, re, im]`` (``im`` optional)."""
        terms: dict = {}
        for row in rows:
            if len(row) not in (5, 6):
                raise ConfigError(f"weight term needs 5 or 6 entries, got {row!r}")
            key = tuple(int(e) for e in row[:4])
            terms[key] = terms.get(key, 0j) + complex(row[4], row[5] if len(row) == 6 else 0.0)
        return cls(terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def derivative(self, t, mu, nt=0, ntb=0, nmu=0, nmub=0):
        """Mixed Wirtinger derivative of ``phi`` of the given orders."""
        t = complex(t)
        mu = np.asarray(mu, dtype=complex)
        out = np.zeros(mu.shape, dtype=complex)
        tb, mub = np.conj(t), np.conj(mu)
        for (a, b, c, d), v in self.terms.items():
            if a < nt or b < ntb or c < nmu or d < nmub:
                continue
            coef = v * _falling(a, nt) * _falling(b, ntb) * _falling(c, nmu) * _falling(d, nmub)
            out = out + coef * t ** (a - nt) * tb ** (b - ntb) * mu ** (c - nmu) * mub ** (d - nmub)
        return out

    def value(self, t, mu):
        return np.real(self.derivative(t, mu))

    def phi_ttbar(self, t, mu):
        return np.real(self.derivative(t, mu, nt=1, ntb=1))

    def phi_tmubar(self, t, mu):
        return self.derivative(t, mu, nt=1, nmub=1)

    def phi_mumubar(self, t, mu):
        return np.real(self.derivative(t, mu, nmu=1, nmub=1))

    def to_list(self):
        return [[*k, v.real, v.imag] for k, v in sorted(self.terms.items())]


def _falling(n, k):
    out = 1
    for i in range(k):
        out *= n - i
    return out


class GramDiagnostics(NamedTuple):
    smallest_retained: float
    largest: float
    truncated: int

    @property
    def condition(self) -> float:
        return self.largest / self.smallest_retained


def monomials(z, degree: int):
    """Monomial values ``z**j`` for ``j = 0..degree`` along a trailing axis."""
    z = np.asarray(z, dtype=complex)
    return z[..., None] ** np.arange(degree + 1)


def gram_matrix(quad: FiberQuadrature, weight: Weight | None, N: int):
    """Form-convention Gram matrix ``G[j, k] = 2 sum_q w_q conj(zeta_q)**j zeta_q**k e^{-phi}``.

    Raises
    ------
    DegreeTooHigh
        If ``N`` exceeds what the reference rule supports
        (``N > 2 n_r - 2`` or ``2 N >= n_theta``).
    """
    ref = quad.reference
    if N < 0 or N > 2 * ref.n_r - 2 or 2 * N >= ref.n_theta:
        raise DegreeTooHigh(f"degree {N} not supported by quadrature n_r={ref.n_r}, n_theta={ref.n_theta}")
    ew = quad.weights * _weight_factor(quad, weight)
    V = monomials(quad.nodes, N)
    G = 2.0 * (V.conj().T * ew) @ V
    return 0.5 * (G + G.conj().T)


def _weight_factor(quad: FiberQuadrature, weight: Weight | None, sign: float = -1.0):
    if weight is None or weight.is_zero:
        return np.ones(quad.nodes.shape)
    return np.exp(sign * weight.value(quad.t, quad.nodes))


def orthonormal_basis(G, tau: float = TRUNCATION):
    """Orthonormal coefficient basis from a Hermitian eigendecomposition of ``G``.

    Eigenvalues below ``tau * lambda_max`` are discarded.  Each retained
    eigenvector is assigned to the monomial carrying its largest
    component (with that component made real positive), so a diagonal
    ``G`` yields the diagonal ``B[j, j] = G[j, j]**-0.5``.

    Returns
    -------
    B : ndarray
        Columns are coefficient vectors with ``B^H G B = I``.
    diagnostics : GramDiagnostics
    """
    G = np.asarray(G, dtype=complex)
    lam, Q = np.linalg.eigh(0.5 * (G + G.conj().T))
    lam_max = lam[-1]
    if not lam_max > 0:
        raise RankDeficient("Gram matrix has no positive eigenvalue")
    keep = lam > tau * lam_max
    if not np.any(keep):
        raise RankDeficient("no mode retained")
    lam, Q = lam[keep], Q[:, keep]
    lead = np.argmax(np.abs(Q) * (1 + 1e-9 * np.arange(Q.shape[0]))[:, None], axis=0)
    phase = Q[lead, np.arange(Q.shape[1])]
    Q = Q * (np.abs(phase) / phase)[None, :]
    order = np.lexsort((-lam, lead))
    B = Q[:, order] / np.sqrt(lam[order])[None, :]
    diag = GramDiagnostics(float(lam.min()), float(lam_max), int(np.count_nonzero(~keep)))
    return B, diag


@dataclass(frozen=True)
class BergmanSpace:
    """Degree-``N`` polynomial approximation of ``A^2(X_t, e^{-phi})``."""

    t: complex
    degree: int
    quad: FiberQuadrature
    weight: Weight
    weight_values: np.ndarray
    gram: np.ndarray
    basis: np.ndarray
    kernel_matrix: np.ndarray
    diagnostics: GramDiagnostics
    inradius: float

    @property
    def modes(self) -> int:
        return self.basis.shape[1]

    @property
    def vandermonde(self):
        return monomials(self.quad.nodes, self.degree)

    def monomials(self, z):
        return monomials(z, self.degree)

    def kernel(self, zeta, eta):
        """Form-convention kernel ``K(zeta, conj eta)``, broadcasting elementwise."""
        a, b = self.monomials(zeta), np.conj(self.monomials(eta))
        return np.einsum("...i,ij,...j->...", a, self.kernel_matrix, b)

    def classical_kernel(self, zeta, eta):
        """Kernel for the Lebesgue-measure inner product (twice the form kernel)."""
        return 2.0 * self.kernel(zeta, eta)

    def kernel_grid(self, zetas, etas):
        """Matrix ``[K(zeta_a, conj eta_b)]``."""
        return self.monomials(zetas) @ self.kernel_matrix @ np.conj(self.monomials(etas)).T

    def section(self, eta):
        """Monomial coefficients of ``mu -> K(mu, conj eta)``; columns for array ``eta``."""
        return self.kernel_matrix @ np.conj(self.monomials(eta)).T

    def basis_values(self, z):
        """Values ``u_j(z)`` of the orthonormal basis along a trailing axis."""
        return self.monomials(z) @ self.basis

    def inner(self, c, d):
        """``<<u, v>>`` for coefficient vectors ``c`` of ``u`` and ``d`` of ``v``."""
        return np.conj(d).T @ self.gram @ c

    def integrate(self, values):
        """``2 * integral values e^{-phi} dA`` over the fiber."""
        return 2.0 * self.quad.integrate(values * self.weight_values)

    def pair(self, u_values, v_values):
        """Form pairing of two functions sampled at the quadrature nodes."""
        return self.integrate(u_values * np.conj(v_values))

    def orthonormal_coefficients(self, samples):
        """``c_j = <<samples, u_j>>`` for samples at the quadrature nodes."""
        U = self.basis_values(self.quad.nodes)
        return 2.0 * (U.conj().T @ (self.quad.weights * self.weight_values * samples))


def default_sizes(degree: int, n_r: int | None = None, n_theta: int | None = None):
    """Quadrature sizes that integrate a degree-``degree`` Gram matrix exactly on affine fibers."""
    if n_r is None:
        n_r = max(DEFAULT_N_R, degree + 1)
    if n_theta is None:
        n_theta = max(DEFAULT_N_THETA, 4 * degree + 8)
    return n_r, n_theta


def bergman_space(
    family,
    t,
    degree: int,
    weight: Weight | None = None,
    *,
    ref: ReferenceQuadrature | None = None,
    n_r: int | None = None,
    n_theta: int | None = None,
    tau: float = TRUNCATION,
) -> BergmanSpace:
    """Assemble the Bergman space of the fiber ``X_t``."""
    weight = weight or Weight.zero()
    if ref is None:
        ref = build_reference_quadrature(*default_sizes(degree, n_r, n_theta))
    t = family.check_parameter(t)
    quad = pushforward_area(family, t, ref)
    G = gram_matrix(quad, weight, degree)
    B, diag = orthonormal_basis(G, tau)
    M = B @ B.conj().T
    inradius = boundary_quadrature(family, t, 256).inradius
    return BergmanSpace(
        t=t,
        degree=degree,
        quad=quad,
        weight=weight,
        weight_values=_weight_factor(quad, weight),
        gram=G,
        basis=B,
        kernel_matrix=0.5 * (M + M.conj().T),
        diagnostics=diag,
        inradius=inradius,
    )


def kernel_eval(space: BergmanSpace, zeta, eta):
    """``K(zeta, conj eta) = sum_j u_j(zeta) conj(u_j(eta))`` in the form convention."""
    return space.kernel(zeta, eta)


def default_probes(space: BergmanSpace, count: int = 8, fraction: float = 0.7):
    """Deterministic probe points inside ``fraction`` of the inradius."""
    k = np.arange(count)
    radius = fraction * space.inradius * (0.25 + 0.75 * (k % 4) / 3)
    return radius * np.exp(2j * np.pi * (0.1 + 0.37 * k))


class ReproduceResult(NamedTuple):
    function_residual: float
    kernel_residual: float


def reproduce_residual(space: BergmanSpace, h_coeffs, probes=None) -> ReproduceResult:
    """Check the reproducing formula against a holomorphic polynomial.

    ``function_residual`` is ``max |<<h, K(., conj zeta)>> - h(zeta)|`` and
    ``kernel_residual`` is the deviation of the self-reproducing
    identity ``integral K(mu, conj eta) conj K(mu, conj zeta) = K(zeta, conj eta)``
    evaluated by quadrature, both over the probe points.
    """
    h_coeffs = np.asarray(h_coeffs, dtype=complex)
    if h_coeffs.size > space.degree + 1:
        raise ConfigError("polynomial degree exceeds the space degree")
    h = np.zeros(space.degree + 1, dtype=complex)
    h[: h_coeffs.size] = h_coeffs
    probes = default_probes(space) if probes is None else np.asarray(probes, dtype=complex)
    nodes = space.quad.nodes
    h_nodes = space.monomials(nodes) @ h
    K_nodes = space.kernel_grid(nodes, probes)  # K(mu_q, conj zeta_a)
    reproduced = space.integrate(h_nodes[None, :] * np.conj(K_nodes.T))
    f_res = np.max(np.abs(reproduced - space.monomials(probes) @ h))
    # [a, b] -> integral K(mu, conj eta_b) conj K(mu, conj zeta_a)
    w = 2.0 * space.quad.weights * space.weight_values
    self_pair = (np.conj(K_nodes).T * w) @ K_nodes
    k_res = np.max(np.abs(self_pair - space.kernel_grid(probes, probes)))
    return ReproduceResult(float(f_res), float(k_res))


def bergman_project(space: BergmanSpace, samples):
    """Orthogonal projection of node samples onto the space.

    Returns the monomial coefficients of ``sum_j <<samples, u_j>> u_j``.
    """
    return space.basis @ space.orthonormal_coefficients(np.asarray(samples, dtype=complex))


def kf_functional(space: BergmanSpace, f_values, quad=None) -> float:
    """``K_f(t) = sum_j |integral f conj(u_j) dA|**2`` with a Lebesgue-orthonormal basis.

    ``f_values`` are samples at the nodes of ``quad``; the default is the
    space's own fiber rule.  A compactly supported ``f`` can be
    integrated on a dedicated rule over its support, which lies inside
    the fiber.
    """
    quad = space.quad if quad is None else quad
    moments = np.conj(space.monomials(quad.nodes)).T @ (quad.weights * np.asarray(f_values, dtype=complex))
    # classical orthonormal basis is sqrt(2) times the form-orthonormal one
    return float(np.real(2.0 * np.conj(moments) @ space.kernel_matrix @ moments))


@dataclass(frozen=True)
class RadialBump:
    """``f(z) = (1 - |z - center|**2 / radius**2)**power`` inside its support disc."""

    radius: float = 0.1
    power: int = 4
    center: complex = 0j

    def __call__(self, z):
        s = np.abs(np.asarray(z, dtype=complex) - self.center) ** 2 / self.radius**2
        return np.where(s < 1.0, np.clip(1.0 - s, 0.0, None) ** self.power, 0.0)

    @property
    def mass(self) -> float:
        return float(np.pi * self.radius**2 / (self.power + 1))

    def support_quadrature(self, n_r: int = 16, n_theta: int = 32) -> ReferenceQuadrature:
        """Polar rule on the support disc; exact for the bump times low-degree monomials."""
        ref = build_reference_quadrature(n_r, n_theta)
        return ReferenceQuadrature(
            nodes=self.center + self.radius * ref.nodes,
            weights=self.radius**2 * ref.weights,
            n_r=n_r,
            n_theta=n_theta,
        )
