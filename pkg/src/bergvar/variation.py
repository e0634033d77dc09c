"""Variation of Bergman kernels along a deformation family.

Kernel derivatives in ``t`` are taken on the coefficient matrix ``M(t)``
over the fixed monomial frame, sampled on the five-point complex stencil
``t, t +- h, t +- i h``.  Wirtinger derivatives use

    d/dtbar = (d/dx + i d/dy) / 2,     d2/dt dtbar = (d2/dx2 + d2/dy2) / 4.

Every term of the second variation is returned as a matrix indexed by a
probe set, ``term[a, b]`` playing the role of ``term(zeta_a, conj eta_b)``
with ``zeta_a = eta_a = probes[a]``:

    lhs      K_{t tbar}(zeta, conj eta)
    boundary integral over dX_t of k2 K(mu, conj eta) conj K(mu, conj zeta) e^{-phi} dsigma
    dbar     <<K_tbar(., conj eta), K_tbar(., conj zeta)>>
    t_term   <<T^eta, T^zeta>>   (harmonic part of the contraction with dbar V)
    cphi     <<c(phi) K(., conj eta), K(., conj zeta)>>
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .bergman import BergmanSpace, RadialBump, Weight, bergman_space, default_sizes, kf_functional
from .errors import (
    AuxiliaryGramSingular,
    ConfigError,
    DegenerateWeight,
    GridTouchesBoundary,
    ProbeTooCloseToBoundary,
    StencilInconsistent,
    WeightNotStrictlySubharmonic,
)
from .family import DeformationFamily, RadialFamily, alpha_at_source, k2_on_boundary
from .geometry import boundary_quadrature, build_reference_quadrature

PROBE_FRACTION = 0.7
CONVERGENCE_STEPS = (2e-2, 1e-2, 5e-3)


@dataclass(frozen=True)
class VariationConfig:
    """Discretization and tolerance settings shared by the variation checks."""

    degree: int = 20
    step: float = 1e-2
    n_r: int | None = None
    n_theta: int | None = None
    n_b: int = 256
    weight: Weight | None = None
    richardson: bool = False
    identity_tol: float = 1e-3
    identity_c: float = 10.0
    psd_tol: float = 1e-8
    obstruction_tol: float = 1e-6
    psh_tol: float = 1e-4
    inequality_tol: float = 1e-4

    def reference(self):
        return build_reference_quadrature(*default_sizes(self.degree, self.n_r, self.n_theta))

    def identity_tolerance(self, h: float | None = None) -> float:
        h = self.step if h is None else h
        return max(self.identity_tol, self.identity_c * h**2)

    def tolerances(self) -> dict:
        return {
            "identity": self.identity_tol,
            "identity_c": self.identity_c,
            "psd": self.psd_tol,
            "obstruction": self.obstruction_tol,
            "psh": self.psh_tol,
            "inequality": self.inequality_tol,
        }


# ---------------------------------------------------------------------------
# stencil


@dataclass(frozen=True)
class KernelStencil:
    """Kernel coefficient matrices around ``t`` and their Wirtinger derivatives."""

    t: complex
    h: float
    center: BergmanSpace
    spaces: dict
    d_tbar: np.ndarray
    d_ttbar: np.ndarray

    @property
    def d_t(self):
        # M is Hermitian, so dM/dt is the conjugate transpose of dM/dtbar
        return self.d_tbar.conj().T

    @property
    def min_inradius(self) -> float:
        return min(sp.inradius for sp in self.spaces.values())

    def check_probes(self, probes):
        probes = np.atleast_1d(np.asarray(probes, dtype=complex))
        limit = PROBE_FRACTION * self.min_inradius
        if np.any(np.abs(probes) > limit + 1e-14):
            raise ProbeTooCloseToBoundary(f"probe modulus {np.max(np.abs(probes)):.3g} exceeds {limit:.3g}")
        return probes


def _stencil_matrices(spaces, h):
    M = {k: sp.kernel_matrix for k, sp in spaces.items()}
    dx = (M["+x"] - M["-x"]) / (2 * h)
    dy = (M["+y"] - M["-y"]) / (2 * h)
    lap = (M["+x"] + M["-x"] + M["+y"] + M["-y"] - 4 * M["c"]) / (4 * h**2)
    return 0.5 * (dx + 1j * dy), lap


def _stencil_spaces(family, weight, t, h, N, ref, tau=None):
    offsets = {"c": 0, "+x": h, "-x": -h, "+y": 1j * h, "-y": -1j * h}
    kw = {} if tau is None else {"tau": tau}
    spaces = {k: bergman_space(family, t + d, N, weight, ref=ref, **kw) for k, d in offsets.items()}
    modes = {sp.modes for sp in spaces.values()}
    if len(modes) != 1:
        raise StencilInconsistent(f"mode counts differ across the stencil: {sorted(modes)}")
    return spaces


def build_stencil(
    family: DeformationFamily,
    weight: Weight | None,
    t,
    h: float = 1e-2,
    N: int = 20,
    *,
    ref=None,
    richardson: bool = False,
) -> KernelStencil:
    """Five Bergman spaces on a common monomial frame around ``t``.

    With ``richardson=True`` a second stencil at ``h/2`` is built and the
    derivative matrices are extrapolated, ``(4 D(h/2) - D(h)) / 3``.
    """
    t = complex(t)
    if abs(t) + h > family.t_max + 1e-14:
        raise ConfigError(f"|t| + h = {abs(t) + h:.3g} exceeds t_max = {family.t_max}")
    ref = ref or build_reference_quadrature(*default_sizes(N))
    spaces = _stencil_spaces(family, weight, t, h, N, ref)
    d_tbar, d_ttbar = _stencil_matrices(spaces, h)
    if richardson:
        fine = _stencil_spaces(family, weight, t, h / 2, N, ref)
        f_tbar, f_ttbar = _stencil_matrices(fine, h / 2)
        d_tbar = (4 * f_tbar - d_tbar) / 3
        d_ttbar = (4 * f_ttbar - d_ttbar) / 3
    d_ttbar = 0.5 * (d_ttbar + d_ttbar.conj().T)
    return KernelStencil(t, h, spaces["c"], spaces, d_tbar, d_ttbar)


def _stencil_for(family, t, config: VariationConfig, h=None, weight=None):
    return build_stencil(
        family,
        weight if weight is not None else config.weight,
        t,
        config.step if h is None else h,
        config.degree,
        ref=config.reference(),
        richardson=config.richardson,
    )


def dbar_section(stencil: KernelStencil, eta):
    """Coefficients of ``mu -> d/dtbar K(mu, conj eta)`` and its form norm."""
    eta = stencil.check_probes(eta)
    sp = stencil.center
    coeffs = stencil.d_tbar @ np.conj(sp.monomials(eta)).T
    norms = np.sqrt(np.maximum(np.real(np.einsum("ia,ij,ja->a", coeffs.conj(), sp.gram, coeffs)), 0.0))
    if coeffs.shape[1] == 1:
        return coeffs[:, 0], float(norms[0])
    return coeffs, norms


def mixed_second(stencil: KernelStencil, zeta, eta):
    """``K_{t tbar}(zeta, conj eta)``."""
    stencil.check_probes([zeta, eta])
    sp = stencil.center
    return complex(sp.monomials(zeta) @ stencil.d_ttbar @ np.conj(sp.monomials(eta)))


@dataclass(frozen=True)
class FirstOrderCheck:
    lhs: complex
    rhs: complex
    residual: float


def first_order_check(stencil: KernelStencil, zeta, eta) -> FirstOrderCheck:
    """Compare ``K_t(zeta, conj eta)`` with ``<<K(., conj eta), K_tbar(., conj zeta)>>``.

    The right side is evaluated by quadrature on the centre fiber.
    """
    stencil.check_probes([zeta, eta])
    sp = stencil.center
    lhs = complex(sp.monomials(zeta) @ stencil.d_t @ np.conj(sp.monomials(eta)))
    nodes = sp.quad.nodes
    k_eta = sp.monomials(nodes) @ sp.section(eta)
    kbar_zeta = sp.monomials(nodes) @ (stencil.d_tbar @ np.conj(sp.monomials(zeta)))
    rhs = complex(sp.pair(k_eta, kbar_zeta))
    return FirstOrderCheck(lhs, rhs, abs(lhs - rhs))


@dataclass(frozen=True)
class FirstOrderConvergence:
    """First-order check over a refinement sequence of stencil steps."""

    steps: tuple
    values: np.ndarray
    residuals: np.ndarray
    order: float


def first_order_convergence(family, t, zeta, eta, config: VariationConfig, steps=CONVERGENCE_STEPS) -> FirstOrderConvergence:
    """``K_t(zeta, conj eta)`` and the first-order residual at each step in ``steps``.

    The first-order formula holds exactly in the discrete frame whenever
    ``M G = I``, so the residual only measures the quadrature.  ``order``
    is the self-convergence order of the computed derivative itself.
    """
    values, residuals = [], []
    for h in steps:
        chk = first_order_check(_stencil_for(family, t, config, h), zeta, eta)
        values.append(chk.lhs)
        residuals.append(chk.residual)
    return FirstOrderConvergence(tuple(steps), np.array(values), np.array(residuals), self_convergence_order(values))


# ---------------------------------------------------------------------------
# T-projection, boundary term, weight coefficients


@dataclass(frozen=True)
class TProjection:
    """Harmonic part of ``-alpha_mubar K(mu, conj eta) dmubar`` for each probe.

    ``pairs[a, b] = <<T^{probes[b]}, T^{probes[a]}>>``; for ``phi = 0``
    ``coefficients[j, a] = 2 * integral g_a u_j dA``.
    """

    probes: np.ndarray
    coefficients: np.ndarray
    pairs: np.ndarray
    g_pairs: np.ndarray

    @property
    def norm_sq(self):
        return np.real(np.diag(self.pairs))

    @property
    def s_norm_sq(self):
        return np.real(np.diag(self.g_pairs)) - self.norm_sq


def t_projection(space: BergmanSpace, family: DeformationFamily, t, eta) -> TProjection:
    """Project ``g = -alpha_mubar K(., conj eta)`` onto ``ker d_phi`` in (0,1)-forms.

    For ``phi = 0`` the target is spanned by the conjugates of the
    orthonormal basis and the projection coefficients are
    ``2 integral g u_j dA``.  For ``phi != 0`` the target is spanned by
    ``e^{phi} conj(u_j)`` and the auxiliary Gram matrix of that family
    (weight ``e^{+phi}``) is inverted.
    """
    probes = np.atleast_1d(np.asarray(eta, dtype=complex))
    quad = space.quad
    _, alpha_mb = alpha_at_source(family, t, quad.source)
    K_nodes = space.kernel_grid(quad.nodes, probes)
    g = -alpha_mb[:, None] * K_nodes
    U = space.basis_values(quad.nodes)
    R = 2.0 * (U.T * quad.weights) @ g
    if space.weight.is_zero:
        pairs = R.conj().T @ R
        coeffs = R
    else:
        ew = quad.weights * np.exp(space.weight.value(t, quad.nodes))
        A = 2.0 * (U.T * ew) @ U.conj()
        A = 0.5 * (A + A.conj().T)
        lam = np.linalg.eigvalsh(A)
        if not lam[0] > 1e-13 * lam[-1]:
            raise AuxiliaryGramSingular(f"auxiliary Gram eigenvalue ratio {lam[0] / lam[-1]:.3e}")
        coeffs = np.linalg.solve(A, R)
        pairs = R.conj().T @ coeffs
    w = 2.0 * quad.weights * space.weight_values
    g_pairs = (g.conj().T * w) @ g
    return TProjection(probes, coeffs, 0.5 * (pairs + pairs.conj().T), g_pairs)


def boundary_term(family: DeformationFamily, space: BergmanSpace, t, zeta, eta, n_b: int = 256):
    """Boundary term ``integral k2 K(mu, conj eta) conj K(mu, conj zeta) e^{-phi} dsigma``.

    ``zeta`` and ``eta`` may be arrays; the result is then the matrix
    indexed by ``(zeta[a], eta[b])``.
    """
    bq = boundary_quadrature(family, t, n_b)
    k2 = k2_on_boundary(family, t, bq.source)
    w = bq.weights * k2
    if not space.weight.is_zero:
        w = w * np.exp(-space.weight.value(t, bq.nodes))
    Kz = space.kernel_grid(bq.nodes, np.atleast_1d(zeta))
    Ke = space.kernel_grid(bq.nodes, np.atleast_1d(eta))
    out = (Kz.conj().T * w) @ Ke
    return complex(out[0, 0]) if np.ndim(zeta) == 0 and np.ndim(eta) == 0 else out


def v_phi_coefficient(weight: Weight, t, mu):
    """``phi_{t mubar} / phi_{mu mubar}``, the ``-d/dmu`` coefficient of ``V_phi``."""
    dd = weight.phi_mumubar(t, mu)
    if np.any(np.abs(dd) < 1e-14):
        raise DegenerateWeight("phi_{mu mubar} vanishes")
    out = weight.phi_tmubar(t, mu) / dd
    return complex(out) if np.ndim(out) == 0 else out


def c_phi(weight: Weight, t, mu):
    """``phi_{t tbar} - |phi_{t mubar}|**2 / phi_{mu mubar}``."""
    dd = weight.phi_mumubar(t, mu)
    if np.any(dd <= 0):
        raise WeightNotStrictlySubharmonic("phi_{mu mubar} must be positive on the fiber")
    return weight.phi_ttbar(t, mu) - np.abs(weight.phi_tmubar(t, mu)) ** 2 / dd


# ---------------------------------------------------------------------------
# assembled identities


@dataclass(frozen=True)
class VariationTerms:
    """Terms of the second-variation balance at one probe pair."""

    t: complex
    zeta: complex
    eta: complex
    h: float
    lhs: complex
    boundary_term: complex
    dbar_term: complex
    t_term: complex
    cphi_term: complex
    s_norms: tuple[float, float]
    residual: float
    slack: float | None = None

    @property
    def rhs(self) -> complex:
        return self.boundary_term + self.dbar_term + self.cphi_term + self.t_term

    def as_row(self) -> dict:
        row = {"t": self.t, "zeta": self.zeta, "eta": self.eta, "h": self.h}
        for name in ("lhs", "boundary_term", "dbar_term", "t_term", "cphi_term"):
            row[name] = getattr(self, name)
        row.update(s_norm_eta=self.s_norms[0], s_norm_zeta=self.s_norms[1], residual=self.residual)
        if self.slack is not None:
            row["slack"] = self.slack
        return row


@dataclass(frozen=True)
class VariationMatrices:
    """All balance terms over a probe set (see module docstring for indexing)."""

    t: complex
    h: float
    probes: np.ndarray
    lhs: np.ndarray
    boundary: np.ndarray
    dbar: np.ndarray
    t_term: np.ndarray
    cphi: np.ndarray
    s_norm_sq: np.ndarray
    stencil: KernelStencil = field(repr=False)

    @property
    def residual(self):
        return np.abs(self.lhs - (self.boundary + self.dbar + self.t_term + self.cphi))

    @property
    def slack(self):
        rhs = self.boundary + self.dbar + self.cphi + self.t_term
        return np.real(np.diag(self.lhs - rhs))

    def pair(self, a: int, b: int) -> VariationTerms:
        s = np.sqrt(np.maximum(self.s_norm_sq, 0.0))
        return VariationTerms(
            t=self.t,
            zeta=complex(self.probes[a]),
            eta=complex(self.probes[b]),
            h=self.h,
            lhs=complex(self.lhs[a, b]),
            boundary_term=complex(self.boundary[a, b]),
            dbar_term=complex(self.dbar[a, b]),
            t_term=complex(self.t_term[a, b]),
            cphi_term=complex(self.cphi[a, b]),
            s_norms=(float(s[b]), float(s[a])),
            residual=float(self.residual[a, b]),
            slack=float(self.slack[a]) if a == b else None,
        )


def variation_matrices(
    family: DeformationFamily,
    t,
    probes,
    config: VariationConfig,
    *,
    h: float | None = None,
    stencil: KernelStencil | None = None,
) -> VariationMatrices:
    """Evaluate every term of the second-variation balance on a probe set."""
    t = complex(t)
    stencil = stencil or _stencil_for(family, t, config, h)
    probes = stencil.check_probes(probes)
    sp = stencil.center
    V = np.conj(sp.monomials(probes)).T  # columns conj v(eta_b)
    lhs = sp.monomials(probes) @ stencil.d_ttbar @ V
    S = stencil.d_tbar @ V
    dbar = S.conj().T @ sp.gram @ S
    tp = t_projection(sp, family, t, probes)
    bnd = boundary_term(family, sp, t, probes, probes, config.n_b)
    if sp.weight.is_zero:
        cphi = np.zeros_like(lhs)
    else:
        c = c_phi(sp.weight, t, sp.quad.nodes)
        Kn = sp.kernel_grid(sp.quad.nodes, probes)
        w = 2.0 * sp.quad.weights * sp.weight_values * c
        cphi = (Kn.conj().T * w) @ Kn
    return VariationMatrices(
        t=t,
        h=stencil.h,
        probes=probes,
        lhs=lhs,
        boundary=bnd,
        dbar=dbar,
        t_term=tp.pairs,
        cphi=cphi,
        s_norm_sq=tp.s_norm_sq,
        stencil=stencil,
    )


def variation_identity(family: DeformationFamily, t, zeta, eta, config: VariationConfig, *, h=None) -> VariationTerms:
    """Unweighted balance ``K_{t tbar} = boundary + dbar + T`` at one probe pair."""
    if config.weight is not None and not config.weight.is_zero:
        raise ConfigError("the variation identity requires phi = 0; use variation_inequality")
    vm = variation_matrices(family, t, [zeta, eta], config, h=h)
    return vm.pair(0, 1)


def variation_inequality(family: DeformationFamily, weight: Weight, t, eta, config: VariationConfig, *, h=None) -> VariationTerms:
    """Weighted lower bound for ``K_{t tbar}(eta, conj eta)``; ``slack = lhs - rhs``."""
    vm = variation_matrices(family, t, [eta], replace(config, weight=weight), h=h)
    return vm.pair(0, 0)


def observed_orders(values: Sequence[float], ratio: float = 2.0):
    """Convergence orders ``log(e_k / e_{k+1}) / log(ratio)`` of a refinement sequence."""
    v = np.asarray(values, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(v[:-1] / v[1:]) / np.log(ratio)


def self_convergence_order(values: Sequence[complex], floor: float = 1e-11) -> float:
    """Order from successive differences of a quantity computed at ``h, h/2, h/4``.

    Returns ``inf`` when the differences are below ``floor`` (the
    quantity is resolved exactly by the stencil).
    """
    v = np.asarray(values, dtype=complex)
    d1, d2 = abs(v[0] - v[1]), abs(v[1] - v[2])
    if d1 < floor and d2 < floor:
        return float("inf")
    if d2 == 0:
        return float("inf")
    return float(np.log2(d1 / d2))


# ---------------------------------------------------------------------------
# triviality of holomorphic motions


@dataclass(frozen=True)
class ObstructionReport:
    """``O(t, eta) = integral alpha_zetabar K(zeta, conj eta) i dzeta ^ dzetabar`` on probes."""

    t: complex
    coefficients: np.ndarray
    probes: np.ndarray
    values: np.ndarray
    sup_eta: float
    spread: float


def triviality_obstruction(family: DeformationFamily, t, space: BergmanSpace, probes=None) -> ObstructionReport:
    """Obstruction coefficients ``o_j = 2 integral alpha_zetabar u_j dA`` and ``O(t, eta)``."""
    if not family.is_motion:
        raise ConfigError("triviality obstruction is defined for holomorphic motions only")
    if probes is None:
        k = np.arange(6)
        probes = PROBE_FRACTION * space.inradius * np.array([0, 0.3, 0.5, 0.6, 0.8, 0.95])[k] * np.exp(1.3j * k)
    probes = np.atleast_1d(np.asarray(probes, dtype=complex))
    quad = space.quad
    _, alpha_zb = alpha_at_source(family, t, quad.source)
    U = space.basis_values(quad.nodes)
    o = 2.0 * (U.T * quad.weights) @ alpha_zb
    values = np.conj(space.basis_values(probes)) @ o
    mags = np.abs(values)
    sup = float(np.max(mags))
    mean = abs(np.mean(values))
    spread = float((np.max(np.abs(values - values.mean()))) / mean) if mean > 0 else 0.0
    return ObstructionReport(complex(t), o, probes, values, sup, spread)


@dataclass(frozen=True)
class TrivialityVerdict:
    verdict: str
    t_grid: np.ndarray
    reports: list
    criterion_ii: np.ndarray
    criterion_ii_refined: np.ndarray
    consistent: bool
    obstruction_tol: float
    identity_tol: float


def triviality_verdict(family: DeformationFamily, t_grid, config: VariationConfig, probes=None) -> TrivialityVerdict:
    """Classify a motion as TRIVIAL or NONTRIVIAL.

    The verdict uses the obstruction (criterion iii).  Criterion (ii),
    ``max_eta K_{t tbar}(eta, conj eta) - ||K_tbar(., conj eta)||**2``, is
    reported at ``h`` and ``h/2`` as a cross-check; ``consistent`` records
    whether it agrees with the verdict.
    """
    if not family.is_motion:
        raise ConfigError("triviality verdict is defined for holomorphic motions only")
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=complex))
    reports, crit, crit_ref = [], [], []
    for t in t_grid:
        values = []
        for h in (config.step, config.step / 2):
            st = _stencil_for(family, t, replace(config, weight=None), h)
            pr = st.check_probes(_probe_ring(st.min_inradius) if probes is None else probes)
            V = np.conj(st.center.monomials(pr)).T
            lhs = np.real(np.einsum("ai,ij,ja->a", st.center.monomials(pr), st.d_ttbar, V))
            S = st.d_tbar @ V
            dbar = np.real(np.einsum("ia,ij,ja->a", S.conj(), st.center.gram, S))
            values.append(float(np.max(lhs - dbar)))
            if h == config.step:
                reports.append(triviality_obstruction(family, t, st.center, pr))
        crit.append(values[0])
        crit_ref.append(values[1])
    trivial = all(r.sup_eta < config.obstruction_tol for r in reports)
    ii_trivial = all(abs(c) < config.identity_tol for c in crit)
    return TrivialityVerdict(
        verdict="TRIVIAL" if trivial else "NONTRIVIAL",
        t_grid=t_grid,
        reports=reports,
        criterion_ii=np.array(crit),
        criterion_ii_refined=np.array(crit_ref),
        consistent=trivial == ii_trivial,
        obstruction_tol=config.obstruction_tol,
        identity_tol=config.identity_tol,
    )


def _probe_ring(inradius, count=5):
    k = np.arange(count)
    return PROBE_FRACTION * inradius * np.array([0.0, 0.35, 0.6, 0.8, 0.95])[:count] * np.exp(2.1j * k)


# ---------------------------------------------------------------------------
# plurisubharmonicity scans


@dataclass(frozen=True)
class PshScan:
    subject: str
    t_grid: np.ndarray
    z_grid: np.ndarray | None
    values: np.ndarray
    min_value: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.min_value >= -self.tol


def _complex_hessian_min_eig(F, h):
    """Smallest eigenvalue of the (t, z) complex Hessian from a dict of samples.

    ``F[(i, j)]`` holds the value at ``(t + i, z + j)`` for offsets in
    ``{0, +-h, +-ih}`` and their sums.
    """
    x, y = h, 1j * h
    f0 = F[0, 0]
    aa = (F[x, 0] - 2 * f0 + F[-x, 0]) / h**2
    bb = (F[y, 0] - 2 * f0 + F[-y, 0]) / h**2
    cc = (F[0, x] - 2 * f0 + F[0, -x]) / h**2
    dd = (F[0, y] - 2 * f0 + F[0, -y]) / h**2

    def mixed(p, q):
        return (F[p, q] - F[p, -q] - F[-p, q] + F[-p, -q]) / (4 * h**2)

    ac, ad, bc, bd = mixed(x, x), mixed(x, y), mixed(y, x), mixed(y, y)
    htt = 0.25 * (aa + bb)
    hzz = 0.25 * (cc + dd)
    htz = 0.25 * (ac + bd + 1j * (ad - bc))
    # eigenvalues of [[htt, htz], [conj(htz), hzz]]
    mean = 0.5 * (htt + hzz)
    rad = np.sqrt((0.5 * (htt - hzz)) ** 2 + np.abs(htz) ** 2)
    return mean - rad


def psh_scan_diagonal(family: DeformationFamily, t_grid, z_grid, config: VariationConfig) -> PshScan:
    """Minimum complex-Hessian eigenvalue of ``log K^t(z, conj z)`` over a (t, z) grid."""
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=complex))
    z_grid = np.atleast_1d(np.asarray(z_grid, dtype=complex))
    h = config.step
    if np.any(np.abs(t_grid) + h > family.t_max + 1e-14):
        raise GridTouchesBoundary("t grid plus stencil leaves the parameter disc")
    ref = config.reference()
    offsets = (0, h, -h, 1j * h, -1j * h)
    out = np.empty((t_grid.size, z_grid.size))
    for i, t in enumerate(t_grid):
        spaces = {d: bergman_space(family, t + d, config.degree, config.weight, ref=ref) for d in offsets}
        limit = PROBE_FRACTION * min(sp.inradius for sp in spaces.values())
        if np.any(np.abs(z_grid) + h > limit):
            raise GridTouchesBoundary(f"z grid within {limit:.3g} of the fiber boundary")
        F = {}
        for dt, sp in spaces.items():
            for dz in offsets:
                zz = z_grid + dz
                F[dt, dz] = np.log(np.real(sp.kernel(zz, zz)))
        out[i] = _complex_hessian_min_eig(F, h)
    return PshScan("diagonal", t_grid, z_grid, out, float(np.min(out)), config.psh_tol)


def psh_scan_kf(family: DeformationFamily, bump: RadialBump, t_grid, config: VariationConfig) -> PshScan:
    """Discrete ``d2/dt dtbar log K_f(t)`` for a fixed compactly supported ``f``."""
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=complex))
    h = config.step
    if np.any(np.abs(t_grid) + h > family.t_max + 1e-14):
        raise GridTouchesBoundary("t grid plus stencil leaves the parameter disc")
    ref = config.reference()
    support = bump.support_quadrature()
    f_vals = bump(support.nodes)
    out = np.empty(t_grid.size)
    for i, t in enumerate(t_grid):
        logs = {}
        for d in (0, h, -h, 1j * h, -1j * h):
            sp = bergman_space(family, t + d, config.degree, config.weight, ref=ref)
            if abs(bump.center) + bump.radius > sp.inradius:
                raise GridTouchesBoundary("support of f leaves the fiber")
            logs[d] = np.log(kf_functional(sp, f_vals, support))
        out[i] = (logs[h] + logs[-h] + logs[1j * h] + logs[-1j * h] - 4 * logs[0]) / (4 * h**2)
    return PshScan("kf", t_grid, None, out, float(np.min(out)), config.psh_tol)


def psh_scan(subject: str, family: DeformationFamily, config: VariationConfig, t_grid, z_grid=None, bump=None) -> PshScan:
    """Dispatch to the diagonal-kernel or ``K_f`` scan."""
    if subject == "diagonal":
        return psh_scan_diagonal(family, t_grid, z_grid if z_grid is not None else [0j], config)
    if subject == "kf":
        return psh_scan_kf(family, bump or RadialBump(), t_grid, config)
    raise ConfigError(f"unknown psh subject {subject!r}")


# ---------------------------------------------------------------------------
# calibration


@dataclass(frozen=True)
class CalibrationReport:
    k_ttbar: float
    boundary: float
    dbar: float
    t_term: float
    k2: np.ndarray
    residuals: dict
    identity_c: float
    checks: dict

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def radial_calibration(config: VariationConfig | None = None, n_k2: int = 32) -> CalibrationReport:
    """Pin the pairing conventions on ``r(t) = exp(-|t|**2)`` at ``t = 0, zeta = eta = 0``.

    Closed forms: ``K_{t tbar}(0, 0) = 1/pi``, boundary term ``1/pi``,
    vanishing dbar and T terms, and ``k2 = 2`` on the unit circle.  The
    constant ``C`` of the identity tolerance ``max(tol, C h**2)`` is set
    to ten times the largest observed ``residual / h**2``.
    """
    config = replace(config or VariationConfig(), weight=None)
    family = RadialFamily.gaussian(1.0)
    residuals = {}
    main = None
    for h in CONVERGENCE_STEPS:
        vm = variation_matrices(family, 0.0, [0j], config, h=h)
        residuals[h] = float(vm.residual[0, 0])
        if h == config.step or main is None:
            main = vm
    k2 = k2_on_boundary(family, 0.0, np.exp(2j * np.pi * np.arange(n_k2) / n_k2))
    term = main.pair(0, 0)
    c = 10.0 * max(r / h**2 for h, r in residuals.items())
    checks = {
        "k_ttbar": abs(term.lhs - 1 / np.pi) <= 1e-3,
        "boundary": abs(term.boundary_term - 1 / np.pi) <= 1e-3,
        "dbar": abs(term.dbar_term) < 1e-4,
        "t_term": abs(term.t_term) < 1e-4,
        "k2": bool(np.max(np.abs(k2 - 2.0)) <= 1e-6),
    }
    return CalibrationReport(
        k_ttbar=float(term.lhs.real),
        boundary=float(term.boundary_term.real),
        dbar=float(abs(term.dbar_term)),
        t_term=float(abs(term.t_term)),
        k2=k2,
        residuals=residuals,
        identity_c=c,
        checks=checks,
    )
