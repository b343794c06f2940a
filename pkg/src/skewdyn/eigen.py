"""Free vibration of simply supported skew decks.

Two models are solved here:

* ``"analytical"`` couples vertical bending and St Venant torsion through the
  skew support conditions (six shape constants, 6x6 characteristic matrix).
* ``"simplified"`` is a bending-only beam whose skew supports act as equal
  rotational springs of stiffness ``2 GJ / (L cot^2 alpha)`` (4x4 matrix).

The flexural shape is ``C1 sin(bx) + C2 cos(bx) + C3 sinh(bx) + C4 cosh(bx)``.
For assembly and evaluation the hyperbolic pair is carried as
``a exp(-bx) + b exp(-b(L-x))``, which spans the same functions, keeps every
matrix entry bounded by one for any ``bL`` and avoids the cancellation between
large ``sinh``/``cosh`` terms.  ``C3 = -a + b exp(-bL)`` and
``C4 = a + b exp(-bL)``.
"""

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from .core import derive_constants
from .quadrature import integrate_adaptive

__all__ = [
    "MODELS",
    "EigenError",
    "SpringBoundary",
    "CharacteristicMatrix",
    "Mode",
    "spring_boundary",
    "assemble_analytical",
    "assemble_simplified",
    "assemble",
    "scaled_determinant",
    "find_modes",
    "scan_roots",
    "eval_flex_shape",
    "eval_flex_slope",
    "eval_flex_curvature",
    "eval_tors_shape",
    "eval_tors_slope",
    "modal_masses",
    "orthogonality_residual",
    "cross_mass_matrices",
]

MODELS = ("analytical", "simplified")

RANK_TOL = 1e-8
ROOT_RTOL = 1e-12
QUAD_RTOL = 1e-10


class EigenError(ArithmeticError):
    """Root scan or eigenvector extraction failed."""


@dataclass(frozen=True)
class SpringBoundary:
    k_theta: float


def spring_boundary(deck):
    """Equivalent rotational support stiffness of the simplified model."""
    alpha = deck.skew_angle
    if alpha == 0.0:
        return SpringBoundary(0.0)
    GJ = derive_constants(deck).GJ
    # 2 GJ / (L cot^2 a) written with tan to stay finite near 0
    return SpringBoundary(2.0 * GJ * math.tan(alpha) ** 2 / deck.span_length)


@dataclass(frozen=True)
class CharacteristicMatrix:
    """Boundary-condition matrix at one trial ``beta``.

    Columns act on ``y = (C1, C2, a, b[, C5, C6])``; see the module docstring.
    Rows 3-6 of the analytical matrix and rows 3-4 of the simplified matrix
    are divided by positive factors (``EI beta^2`` for moment rows), so roots
    and determinant signs are those of the textbook matrix.
    """

    entries: np.ndarray
    beta: float
    lam: float | None
    span_length: float
    a1: float = 0.0
    a2: float = 0.0
    a3: float = 0.0
    kappa: float = 0.0

    @property
    def order(self):
        return self.entries.shape[0]

    def basis_transform(self):
        """Matrix T with ``(C1..C4[, C5, C6]) = T @ y``."""
        n = self.order
        T = np.eye(n)
        decay = math.exp(-self.beta * self.span_length)
        T[2, 2:4] = (-1.0, decay)
        T[3, 2:4] = (1.0, decay)
        return T


def _check_beta(beta):
    if not (beta > 0 and math.isfinite(beta)):
        raise ValueError(f"beta must be a positive finite number, got {beta!r}")


def assemble_analytical(deck, beta):
    """6x6 matrix enforcing the skew support conditions of the coupled model.

    Rows: deflection at 0 and L, rotation about the support line at 0 and L,
    bending moment about the support line at 0 and L.
    """
    _check_beta(beta)
    c = derive_constants(deck)
    L = deck.span_length
    lam = deck.gyration_radius * beta ** 2 * math.sqrt(c.EI / c.GJ)
    bl, ll = beta * L, lam * L
    s, co = math.sin(bl), math.cos(bl)
    E = math.exp(-bl)
    sl, cl = math.sin(ll), math.cos(ll)
    if deck.skew_angle == 0.0:
        sa, ca = 0.0, 1.0
    else:
        sa, ca = math.sin(deck.skew_angle), math.cos(deck.skew_angle)
    a1 = beta * sa
    a2 = ca
    # GJ lambda sin(a) / (EI beta^2)
    a3 = deck.gyration_radius * sa * math.sqrt(c.GJ / c.EI)
    M = np.array([
        [0.0, 1.0, 1.0, E, 0.0, 0.0],
        [s, co, E, 1.0, 0.0, 0.0],
        [-a1, 0.0, a1, -a1 * E, 0.0, ca],
        [-a1 * co, a1 * s, a1 * E, -a1, sl * ca, cl * ca],
        [0.0, -a2, a2, a2 * E, a3, 0.0],
        [-a2 * s, -a2 * co, a2 * E, a2, a3 * cl, -a3 * sl],
    ])
    return CharacteristicMatrix(M, beta, lam, L, a1=a1, a2=a2 * c.EI * beta ** 2,
                                a3=a3 * c.EI * beta ** 2)


def assemble_simplified(deck, beta, k_theta=None):
    """4x4 matrix of the bending beam on equal rotational end springs."""
    _check_beta(beta)
    if k_theta is None:
        k_theta = spring_boundary(deck).k_theta
    EI = derive_constants(deck).EI
    L = deck.span_length
    bl = beta * L
    s, co = math.sin(bl), math.cos(bl)
    E = math.exp(-bl)
    kappa = k_theta / (EI * beta)
    # moment rows divided by EI beta^2 (1 + kappa) to stay bounded as k -> inf
    w = 1.0 / (1.0 + kappa)
    M = np.array([
        [0.0, 1.0, 1.0, E],
        [s, co, E, 1.0],
        [-kappa * w, -w, 1.0, E * (1.0 - kappa) * w],
        [(kappa * co - s) * w, (-co - kappa * s) * w, E * (1.0 - kappa) * w, 1.0],
    ])
    return CharacteristicMatrix(M, beta, None, L, kappa=kappa)


def assemble(deck, model, beta, k_theta=None):
    if model == "analytical":
        return assemble_analytical(deck, beta)
    if model == "simplified":
        return assemble_simplified(deck, beta, k_theta)
    raise ValueError(f"unknown model {model!r}, expected one of {MODELS}")


def scaled_determinant(deck, model, beta, k_theta=None):
    return float(np.linalg.det(assemble(deck, model, beta, k_theta).entries))


@dataclass(frozen=True)
class Mode:
    """One eigenpair.

    ``flex_coeffs`` are ``C1..C4`` and ``tors_coeffs`` ``C5, C6`` (``None``
    for the simplified model), normalized to unit Euclidean norm together.
    ``exp_coeffs`` is the bounded ``(a, b)`` form of ``C3, C4`` used for
    evaluation.
    """

    index: int
    omega: float
    beta: float
    lam: float | None
    flex_coeffs: tuple
    tors_coeffs: tuple | None
    exp_coeffs: tuple
    span_length: float
    modal_mass_flex: float = 0.0
    modal_mass_tors: float = 0.0

    @property
    def freq_hz(self):
        return self.omega / (2.0 * math.pi)

    @property
    def is_flexural(self):
        """True when bending carries at least half of the modal kinetic energy."""
        return self.modal_mass_flex >= self.modal_mass_tors


def _domain(mode, x):
    x = np.asarray(x, dtype=float)
    L = mode.span_length
    if np.any(x < 0.0) or np.any(x > L) or np.any(np.isnan(x)):
        raise ValueError(f"x outside [0, {L}]")
    return x


def _flex_terms(mode, x, order):
    b = mode.beta
    C1, C2 = mode.flex_coeffs[0], mode.flex_coeffs[1]
    a, bb = mode.exp_coeffs
    bx = b * x
    s, c = np.sin(bx), np.cos(bx)
    e0 = np.exp(-bx)
    e1 = np.exp(-b * (mode.span_length - x))
    if order == 0:
        return C1 * s + C2 * c + a * e0 + bb * e1
    if order == 1:
        return b * (C1 * c - C2 * s - a * e0 + bb * e1)
    return b * b * (-C1 * s - C2 * c + a * e0 + bb * e1)


def eval_flex_shape(mode, x):
    return _flex_terms(mode, _domain(mode, x), 0)


def eval_flex_slope(mode, x):
    return _flex_terms(mode, _domain(mode, x), 1)


def eval_flex_curvature(mode, x):
    return _flex_terms(mode, _domain(mode, x), 2)


def eval_tors_shape(mode, x):
    x = _domain(mode, x)
    if mode.tors_coeffs is None:
        return np.zeros_like(x)
    C5, C6 = mode.tors_coeffs
    return C5 * np.sin(mode.lam * x) + C6 * np.cos(mode.lam * x)


def eval_tors_slope(mode, x):
    x = _domain(mode, x)
    if mode.tors_coeffs is None:
        return np.zeros_like(x)
    C5, C6 = mode.tors_coeffs
    lx = mode.lam * x
    return mode.lam * (C5 * np.cos(lx) - C6 * np.sin(lx))


def modal_masses(mode, deck):
    """``(M_f, M_t)``: integrals of ``m phi^2`` and ``m r^2 psi^2`` over the span."""
    m = deck.mass_per_length
    mr2 = m * deck.gyration_radius ** 2

    def integrand(x):
        return np.stack([m * _flex_terms(mode, x, 0) ** 2,
                         mr2 * eval_tors_shape(mode, x) ** 2])

    Mf, Mt = integrate_adaptive(integrand, 0.0, deck.span_length, rtol=QUAD_RTOL)
    return float(Mf), float(Mt)


def scan_roots(deck, model, beta_max, k_theta=None):
    """All sign changes of the scaled determinant on ``(0, beta_max]``, refined."""
    L = deck.span_length
    step = math.pi / (40.0 * L)
    grid = step * np.arange(1, int(math.ceil(beta_max / step)) + 1)

    def det(beta):
        return scaled_determinant(deck, model, beta, k_theta)

    values = np.array([det(b) for b in grid])
    roots = []
    for i in np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) <= 0):
        lo, hi = grid[i], grid[i + 1]
        if values[i] == 0.0:
            root = lo
        elif values[i + 1] == 0.0:
            continue  # picked up as the left end of the next bracket
        else:
            root = brentq(det, lo, hi, xtol=1e-300, rtol=ROOT_RTOL, maxiter=500)
        roots.append(root)
    return roots


def _nullspace(matrix, beta):
    _, sv, vt = np.linalg.svd(matrix.entries)
    if sv[-1] > RANK_TOL * sv[0]:
        raise EigenError(f"spurious root at beta={beta!r}: "
                         f"sigma_min/sigma_max={sv[-1] / sv[0]:.3e}")
    if sv[-2] <= RANK_TOL * sv[0]:
        raise EigenError(f"repeated root at beta={beta!r}: "
                         f"sigma_2/sigma_max={sv[-2] / sv[0]:.3e}")
    return vt[-1]


def _build_mode(deck, model, index, beta, k_theta):
    matrix = assemble(deck, model, beta, k_theta)
    y = _nullspace(matrix, beta)
    if model == "analytical" and deck.skew_angle == 0.0:
        # uncoupled blocks: the inactive one is pure round-off
        flex, tors = np.linalg.norm(y[:4]), np.linalg.norm(y[4:])
        if flex < tors:
            y[:4] = 0.0
        else:
            y[4:] = 0.0
    X = matrix.basis_transform() @ y
    norm = np.linalg.norm(X)
    X, y = X / norm, y / norm
    EI = derive_constants(deck).EI
    omega = beta * beta * math.sqrt(EI / deck.mass_per_length)

    def make(X, y):
        return Mode(index=index, omega=omega, beta=beta, lam=matrix.lam,
                    flex_coeffs=tuple(float(v) for v in X[:4]),
                    tors_coeffs=tuple(float(v) for v in X[4:]) if model == "analytical" else None,
                    exp_coeffs=(float(y[2]), float(y[3])), span_length=deck.span_length)

    mode = make(X, y)
    if _sign_reference(mode) < 0.0:
        mode = make(-X, -y)
    Mf, Mt = modal_masses(mode, deck)
    return replace(mode, modal_mass_flex=Mf, modal_mass_tors=Mt)


def _sign_reference(mode):
    L = mode.span_length
    samples = np.linspace(0.0, L, 201)
    for shape in (_flex_terms(mode, samples, 0), eval_tors_shape(mode, samples)):
        peak = np.max(np.abs(shape))
        if peak == 0.0:
            continue
        for x in (0.5 * L, 0.25 * L):
            value = float(np.interp(x, samples, shape))
            if abs(value) > 1e-6 * peak:
                return value
    return 1.0


def find_modes(deck, model="analytical", n_modes=5, flexural_only=False, k_theta=None,
               beta_max=None):
    """The ``n_modes`` lowest modes, ordered by frequency.

    With ``flexural_only`` torsion-dominated modes of the coupled model are
    skipped and the next bending-dominated ones returned instead.  ``k_theta``
    overrides the rotational spring of the simplified model.
    """
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}, expected one of {MODELS}")
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    if beta_max is None:
        beta_max = math.sqrt(1.5) * (n_modes + 1) * math.pi / deck.span_length
    roots = scan_roots(deck, model, beta_max, k_theta)
    modes = []
    for beta in roots:
        mode = _build_mode(deck, model, len(modes) + 1, beta, k_theta)
        if flexural_only and not mode.is_flexural:
            continue
        modes.append(mode)
        if len(modes) == n_modes:
            return modes
    raise EigenError(f"insufficient scan range: found {len(modes)} of {n_modes} modes "
                     f"below beta={beta_max:.6g} 1/m")


def cross_mass_matrices(modes, deck):
    """Flexural and torsional mass matrices ``[int m phi_i phi_j]``, ``[int m r^2 psi_i psi_j]``."""
    n = len(modes)
    m = deck.mass_per_length
    mr2 = m * deck.gyration_radius ** 2
    iu = np.triu_indices(n)

    def integrand(x):
        phi = np.stack([_flex_terms(md, x, 0) for md in modes])
        psi = np.stack([eval_tors_shape(md, x) for md in modes])
        return np.concatenate([m * phi[iu[0]] * phi[iu[1]], mr2 * psi[iu[0]] * psi[iu[1]]])

    values = integrate_adaptive(integrand, 0.0, deck.span_length, rtol=QUAD_RTOL)
    k = len(iu[0])
    out = []
    for part in (values[:k], values[k:]):
        full = np.zeros((n, n))
        full[iu] = part
        full.T[iu] = part
        out.append(full)
    return out[0], out[1]


def _max_normalized_offdiag(matrix):
    diag = np.diag(matrix)
    worst = 0.0
    n = len(diag)
    for i in range(n):
        for j in range(i + 1, n):
            if diag[i] <= 0.0 or diag[j] <= 0.0:
                continue
            worst = max(worst, abs(matrix[i, j]) / math.sqrt(diag[i] * diag[j]))
    return worst


def orthogonality_residual(modes, deck, combined=False):
    """Largest normalized cross-modal mass integral over all mode pairs.

    By default the flexural and torsional integrals are checked separately.
    ``combined=True`` checks their sum, the kinetic-energy inner product of
    the coupled system.
    """
    if len(modes) < 2:
        return 0.0
    Mf, Mt = cross_mass_matrices(modes, deck)
    if combined:
        return _max_normalized_offdiag(Mf + Mt)
    return max(_max_normalized_offdiag(Mf), _max_normalized_offdiag(Mt))
