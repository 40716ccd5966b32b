"""Closed-form entropies, eigenvalues and theta-derivatives for AD and GAD.

Inputs are parametrized as

    rho = [[1-p,                       sqrt((1-p)p) e^{-i phi} cos(theta)],
           [sqrt((1-p)p) e^{i phi} cos(theta), p                         ]]

so ``theta = pi/2`` is the diagonal input ``diag(1-p, p)``. Every formula in
this module has an independent counterpart on the diagonalization path in
:mod:`revcap.qinfo`; the two are cross-checked by the test and verify suites.

A few of the literal expressions needed repair before they matched the
generic path. Each repair is listed in :data:`FORMULA_ERRATA` and the
unrepaired variant stays reachable through ``as_printed=True`` so the discrepancy can be
measured.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .channels import apply_to_half, make_ad, make_gad
from .linalg import DomainError, PreconditionError, partial_trace, projector
from .qinfo import (
    InfoValue,
    binary_entropy_array,
    coherent_information,
    reverse_coherent_information,
    von_neumann_entropy,
)

MEASURES = ("ci", "rci")
FAMILIES = ("ad", "gad")
LN2 = math.log(2.0)
F_DOMAIN_EDGE = 1e-12
SMALL_ROOT = 1e-6
SCAN_FLAT = 1e-12
BISECT_TOL = 1e-8

FORMULA_ERRATA = [
    {
        "id": "gad-joint-eigenvalues-sqrt2",
        "formula": "GAD joint eigenvalues from a, b, c, d",
        "printed": "1/4 [1 -+ sqrt(A) +- sqrt(c + d u -+ sqrt(A))]",
        "reconciled": "1/4 [1 -+ sqrt(A) +- sqrt(2) sqrt(c + d u -+ sqrt(A))]",
        "change": "inserted factor sqrt(2) on the inner root (as it already appears in J(i,j))",
    },
    {
        "id": "gad-derivative-Y-weight",
        "formula": "GAD derivative term Y(i,j)",
        "printed": "sqrt(a + b cos^2 theta), sqrt(c + d cos^2 theta -+ ...)",
        "reconciled": "sqrt(a + b p(1-p) cos^2 theta), sqrt(c + d p(1-p) cos^2 theta -+ ...)",
        "change": "inserted factor p(1-p) in front of cos^2 theta, matching J(i,j)",
    },
    {
        "id": "gad-derivative-Z-factor",
        "formula": "GAD derivative bracket",
        "printed": "p(1-p)/8 sin(2 theta) [Z + sum Y(1+J)]",
        "reconciled": "p(1-p)/8 sin(2 theta) [2 Z + sum Y(1+J)]",
        "change": "inserted factor 2 on Z (the output-entropy term)",
    },
    {
        "id": "log-base",
        "formula": "F(x), Z, J(i,j)",
        "printed": "log (base unstated)",
        "reconciled": "log2",
        "change": "logarithms taken base 2 so derivatives are of information in bits",
    },
]


@dataclass(frozen=True)
class InputParams:
    p: float
    theta: float = math.pi / 2
    phi: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise PreconditionError(f"p must lie in [0, 1], got {self.p!r}")
        if not 0.0 <= self.theta <= math.pi:
            raise PreconditionError(f"theta must lie in [0, pi], got {self.theta!r}")
        if not 0.0 <= self.phi < 2.0 * math.pi:
            raise PreconditionError(f"phi must lie in [0, 2 pi), got {self.phi!r}")


@dataclass
class DerivativeBreakdown:
    total: float
    F_terms: dict = field(default_factory=dict)
    Z_term: float = None
    Y_terms: list = None
    J_terms: list = None
    coeffs: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Extremum:
    theta: float
    kind: str  # "max", "min" or "degenerate"


@dataclass
class ScanResult:
    extrema: list
    gaps: list

    def interior(self, kind=None):
        return [
            e for e in self.extrema
            if 0.0 < e.theta < math.pi and (kind is None or e.kind == kind)
        ]


def _check_measure(measure):
    if measure not in MEASURES:
        raise PreconditionError(f"measure must be one of {MEASURES}, got {measure!r}")


# -- inputs -----------------------------------------------------------------------

def general_input(params):
    """General qubit input and its purification on (A, A').

    Returns ``(rho_A', psi_AA')`` where ``psi`` is ordered with the kept
    system A first and the transmitted system A' second.
    """
    p, th, ph = params.p, params.theta, params.phi
    off = math.sqrt((1.0 - p) * p) * math.cos(th)
    rho = np.array(
        [[1.0 - p, off * np.exp(-1j * ph)], [off * np.exp(1j * ph), p]], dtype=complex
    )
    psi = np.zeros(4, dtype=complex)
    psi[0] = math.sqrt(1.0 - p)  # |0>_A |0>_A'
    psi[1] = math.sqrt(p) * np.exp(1j * ph) * math.cos(th)  # |0>_A |1>_A'
    psi[3] = math.sqrt(p) * np.exp(1j * ph) * math.sin(th)  # |1>_A |1>_A'
    return rho, psi


def _family_channel(family, eta, alpha):
    if family == "ad":
        return make_ad(eta)
    if family == "gad":
        return make_gad(eta, alpha)[0]
    raise PreconditionError(f"family must be one of {FAMILIES}, got {family!r}")


def printed_purification_entropies(params, eta, alpha=0.0):
    """``(S(A), S(B), S(AB))`` from the printed purification, by diagonalization."""
    ch = make_ad(eta) if alpha == 0.0 else make_gad(eta, alpha)[0]
    _, psi = general_input(params)
    rho_ab = apply_to_half(ch, projector(psi), (2, 2))
    return (
        von_neumann_entropy(partial_trace(rho_ab, [2, 2], [0])),
        von_neumann_entropy(partial_trace(rho_ab, [2, 2], [1])),
        von_neumann_entropy(rho_ab),
    )


def phase_invariance_check(params, eta, alpha=0.0):
    """Largest change of S(A), S(B), S(AB) when the phase is reset to 0."""
    if params.phi == 0.0:
        return 0.0
    ref = InputParams(params.p, params.theta, 0.0)
    a = printed_purification_entropies(params, eta, alpha)
    b = printed_purification_entropies(ref, eta, alpha)
    return max(abs(x - y) for x, y in zip(a, b))


def generic_information(family, measure, eta, alpha, params):
    """Information of the general input on the diagonalization path."""
    _check_measure(measure)
    ch = _family_channel(family, eta, alpha)
    rho, _ = general_input(params)
    if measure == "ci":
        return coherent_information(ch, rho)
    return reverse_coherent_information(ch, rho)


# -- eigenvalues ------------------------------------------------------------------

def lambda_pm(x, p, theta):
    """``[1 +- sqrt((1-2xp)^2 + 4x(1-p)p cos^2 theta)] / 2``."""
    a = (1.0 - 2.0 * x * p) ** 2 + 4.0 * x * (1.0 - p) * p * np.cos(theta) ** 2
    r = np.sqrt(np.clip(a, 0.0, 1.0))
    # 1 - a = 4xp [p(1-x) + (1-p) sin^2 theta], free of cancellation
    one_minus_a = 4.0 * x * p * (p * (1.0 - x) + (1.0 - p) * np.sin(theta) ** 2)
    return 0.5 * (1.0 + r), 0.5 * one_minus_a / (1.0 + r)


def _two_level_entropy(lam_minus):
    return binary_entropy_array(np.clip(lam_minus, 0.0, 1.0))


def _entropy_rows(lams):
    """Shannon entropy (bits) along axis 0 with tiny entries ignored."""
    lams = np.clip(np.asarray(lams, dtype=float), 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(lams > 1e-15, -lams * np.log2(lams), 0.0)
    return terms.sum(axis=0)


def gad_diag_eigenvalues(eta, alpha, p):
    """Four eigenvalues of the GAD joint state for ``diag(1-p, p)`` input.

    Broadcasts over array arguments; the eigenvalue index is axis 0.
    """
    l1 = alpha * (1.0 - eta) * (1.0 - p)
    l2 = (1.0 - alpha) * (1.0 - eta) * p
    s = l1 + l2
    disc = np.clip(1.0 - 2.0 * s + (l2 - l1) ** 2, 0.0, None)
    root = np.sqrt(disc)
    l3 = 0.5 * (1.0 - s + root)
    l4 = np.clip(0.5 * (1.0 - s - root), 0.0, None)
    return np.stack(np.broadcast_arrays(l1, l2, l3, l4))


def gad_coefficients(eta, alpha, p):
    """The ``a, b, c, d, e, f, e', f'`` coefficients of the GAD analysis."""
    q = alpha + p - 2.0 * alpha * p
    return {
        "a": (1.0 - 2.0 * (1.0 - eta) * q) ** 2,
        "b": 4.0 * (1.0 - eta) * (1.0 - 4.0 * (1.0 - alpha) * alpha * (1.0 - eta)),
        "c": 1.0 - 2.0 * (1.0 - eta) * q + 2.0 * (p - alpha) ** 2 * (1.0 - eta) ** 2,
        "d": 2.0 * (1.0 - eta),
        "e": (1.0 - 2.0 * (p * eta + alpha * (1.0 - eta))) ** 2,
        "f": 4.0 * eta,
        "e'": (1.0 - 2.0 * p) ** 2,
        "f'": 4.0,
    }


def gad_joint_eigenvalues(eta, alpha, p, theta, as_printed=False):
    """Four eigenvalues of the GAD joint state for the general input."""
    k = gad_coefficients(eta, alpha, p)
    u = p * (1.0 - p) * np.cos(theta) ** 2
    big = np.sqrt(np.clip(k["a"] + k["b"] * u, 0.0, None))
    inner = 1.0 if as_printed else math.sqrt(2.0)
    # every difference below is rewritten as a sum of nonnegative terms so
    # small eigenvalues keep full relative accuracy near pure inputs
    e1 = 1.0 - eta
    s = 1.0 - 2.0 * e1 * (alpha + p - 2.0 * alpha * p)
    t = 2.0 * (p - alpha) ** 2 * e1 ** 2 + k["d"] * u
    bu = k["b"] * u
    with np.errstate(divide="ignore", invalid="ignore"):
        # s + sqrt(s^2 + b u), rationalized when s < 0
        s_big = np.where(s >= 0.0, s + big, np.where(big - s > 0.0, bu / (big - s), 0.0))
    plus = t + s_big
    # c + d u - sqrt(a + b u) = 4 (1-eta)^2 Q / plus with Q a product of sums
    w_sin2 = p * (1.0 - p) * np.sin(theta) ** 2
    r1, r2 = np.sqrt(alpha * (1.0 - alpha)), np.sqrt(w_sin2)
    g = eta * (p - alpha) ** 2
    quad = ((r1 - r2) ** 2 + g) * ((r1 + r2) ** 2 + g)
    with np.errstate(divide="ignore", invalid="ignore"):
        minus = np.where(plus > 0.0, 4.0 * e1 ** 2 * quad / plus, 0.0)
    # 1 - sqrt(a + b u) = 4 (1-eta) X / (1 + sqrt(a + b u))
    x = alpha * (1.0 - alpha) + g + w_sin2 * (1.0 - 4.0 * alpha * (1.0 - alpha) * e1)
    low = 4.0 * e1 * x / (1.0 + big)
    out = []
    for s_i in (-1.0, 1.0):
        root = np.sqrt(np.clip(plus if s_i > 0 else minus, 0.0, None))
        base = 1.0 + big if s_i > 0 else low
        for s_j in (1.0, -1.0):
            out.append(0.25 * (base + s_j * inner * root))
    return np.array(out)


def gad_bob_eigenvalues(eta, alpha, p, theta):
    k = gad_coefficients(eta, alpha, p)
    u = p * (1.0 - p) * np.cos(theta) ** 2
    r = np.sqrt(np.clip(k["e"] + k["f"] * u, 0.0, 1.0))
    g = alpha * (1.0 - alpha) + eta * (p - alpha) ** 2
    one_minus = 4.0 * (eta * p * (1.0 - p) * np.sin(theta) ** 2 + (1.0 - eta) * g)
    return np.array([0.5 * (1.0 + r), 0.5 * one_minus / (1.0 + r)])


# -- information values -------------------------------------------------------------

def ad_closed_form(eta, params, measure):
    _check_measure(measure)
    p, th = params.p, params.theta
    s_ab = float(_two_level_entropy(lambda_pm(1.0 - eta, p, th)[1]))
    if measure == "ci":
        s_b = float(_two_level_entropy(lambda_pm(eta, p, th)[1]))
        return InfoValue(s_b - s_ab, "closed_form")
    s_a = float(_two_level_entropy(lambda_pm(1.0, p, th)[1]))
    return InfoValue(s_a - s_ab, "closed_form")


def gad_closed_form(eta, alpha, params, measure):
    _check_measure(measure)
    p, th = params.p, params.theta
    s_ab = float(_entropy_rows(gad_joint_eigenvalues(eta, alpha, p, th)))
    if measure == "ci":
        s_b = float(_two_level_entropy(gad_bob_eigenvalues(eta, alpha, p, th)[1]))
        return InfoValue(s_b - s_ab, "closed_form")
    s_a = float(_two_level_entropy(lambda_pm(1.0, p, th)[1]))
    return InfoValue(s_a - s_ab, "closed_form")


def closed_form(family, measure, eta, alpha, params):
    if family == "ad":
        return ad_closed_form(eta, params, measure)
    if family == "gad":
        return gad_closed_form(eta, alpha, params, measure)
    raise PreconditionError(f"family must be one of {FAMILIES}, got {family!r}")


def diagonal_information(family, measure, eta, alpha, p):
    """Vectorized information for ``diag(1-p, p)`` inputs; ``p`` may be an array."""
    _check_measure(measure)
    p = np.asarray(p, dtype=float)
    if family == "ad":
        s_ab = binary_entropy_array((1.0 - eta) * p)
        s_out = binary_entropy_array(eta * p) if measure == "ci" else binary_entropy_array(p)
        return s_out - s_ab
    if family == "gad":
        s_ab = _entropy_rows(gad_diag_eigenvalues(eta, alpha, p))
        if measure == "ci":
            s_out = binary_entropy_array(eta * p + (1.0 - eta) * alpha)
        else:
            s_out = binary_entropy_array(p)
        return s_out - s_ab
    raise PreconditionError(f"family must be one of {FAMILIES}, got {family!r}")


# -- theta derivatives ----------------------------------------------------------------

def _log_ratio_over_root(r2, weight, name):
    """``weight / sqrt(r2) * log2[(1 - sqrt(r2)) / (1 + sqrt(r2))]``."""
    if r2 >= 1.0 - F_DOMAIN_EDGE:
        raise DomainError(f"{name}: radicand {r2!r} reaches 1, log argument vanishes")
    if r2 < 0.0:
        raise DomainError(f"{name}: negative radicand {r2!r}")
    r = math.sqrt(r2)
    if r < SMALL_ROOT:
        # log((1-r)/(1+r)) = -2 (r + r^3/3 + r^5/5 + ...)
        return -2.0 * weight * (1.0 + r2 / 3.0 + r2 * r2 / 5.0) / LN2
    return weight / r * math.log2((1.0 - r) / (1.0 + r))


def f_term(x, p, theta):
    """``x / sqrt(a) * log2[(1 - sqrt(a)) / (1 + sqrt(a))]`` with ``a`` as in lambda_pm."""
    if x == 0.0:
        return 0.0
    a = (1.0 - 2.0 * x * p) ** 2 + 4.0 * x * (1.0 - p) * p * math.cos(theta) ** 2
    return _log_ratio_over_root(a, x, f"F({x:g})")


def _ad_derivative(measure, eta, params):
    p, th = params.p, params.theta
    out_arg = eta if measure == "ci" else 1.0
    f_out = f_term(out_arg, p, th)
    f_env = f_term(1.0 - eta, p, th)
    total = -p * (1.0 - p) * math.sin(2.0 * th) * (f_out - f_env)
    return DerivativeBreakdown(total=total, F_terms={out_arg: f_out, 1.0 - eta: f_env})


def _gad_derivative(measure, eta, alpha, params, as_printed):
    p, th = params.p, params.theta
    k = gad_coefficients(eta, alpha, p)
    a, b, c, d = k["a"], k["b"], k["c"], k["d"]
    e, f = (k["e"], k["f"]) if measure == "ci" else (k["e'"], k["f'"])
    cos2 = math.cos(th) ** 2
    u = p * (1.0 - p) * cos2
    u_y = cos2 if as_printed else u

    # Z is -f/r log[(1-r)/(1+r)]
    z = -_log_ratio_over_root(e + f * u, f, "Z")

    big = math.sqrt(a + b * u)
    big_y = math.sqrt(a + b * u_y)
    if big_y == 0.0:
        raise DomainError("Y: sqrt(a + b u) vanishes")
    ys = [[0.0, 0.0], [0.0, 0.0]]
    js = [[0.0, 0.0], [0.0, 0.0]]
    bracket = (1.0 if as_printed else 2.0) * z
    for i in (0, 1):
        s_i = 1.0 if i == 0 else -1.0
        x_y = c + d * u_y - s_i * big_y
        x_j = c + d * u - s_i * big
        if x_y <= 0.0 or x_j < 0.0:
            raise DomainError(f"Y({i},j): radicand c + d u -+ sqrt(A) = {min(x_y, x_j)!r} is not positive")
        for j in (0, 1):
            s_j = 1.0 if j == 0 else -1.0
            y = s_i * (b / big_y + s_j * (b / big_y - s_i * 2.0 * d) / (math.sqrt(2.0) * math.sqrt(x_y)))
            lam = 0.25 * (1.0 - s_i * big + s_j * math.sqrt(2.0) * math.sqrt(x_j))
            if lam <= 0.0:
                raise DomainError(f"J({i},{j}): log of non-positive eigenvalue {lam!r}")
            jv = math.log2(lam)
            ys[i][j] = y
            js[i][j] = jv
            bracket += y * (1.0 + jv)
    total = p * (1.0 - p) / 8.0 * math.sin(2.0 * th) * bracket
    return DerivativeBreakdown(total=total, Z_term=z, Y_terms=ys, J_terms=js, coeffs=k)


def derivative_dtheta(family, measure, eta, alpha, params, as_printed=False):
    """Analytic derivative of the information with respect to theta.

    Raises :class:`DomainError` where a term of the formula is singular
    (for instance ``F`` as ``a -> 1``, which happens as ``p -> 0``).
    """
    _check_measure(measure)
    if family == "ad":
        return _ad_derivative(measure, eta, params)
    if family == "gad":
        return _gad_derivative(measure, eta, alpha, params, as_printed)
    raise PreconditionError(f"family must be one of {FAMILIES}, got {family!r}")


# -- extremum scan ---------------------------------------------------------------------

def _value(family, measure, eta, alpha, p, theta):
    return closed_form(family, measure, eta, alpha, InputParams(p, min(max(theta, 0.0), math.pi))).value


def _classify(second_diff):
    if abs(second_diff) < SCAN_FLAT:
        return "degenerate"
    return "max" if second_diff < 0.0 else "min"


def extremum_scan(family, measure, eta, alpha, p, grid_n=256):
    """Locate the theta-extrema of the information on [0, pi].

    The analytic derivative is sampled on a uniform grid, sign changes are
    refined by bisection to ``BISECT_TOL`` and each root is classified by the
    second difference of the information at the grid spacing. The endpoints
    are always extrema (the derivative carries ``sin 2 theta``); they are
    classified using the mirror symmetry ``I(-h) = I(h)``.
    """
    if grid_n < 64:
        raise PreconditionError(f"grid_n must be at least 64, got {grid_n}")
    if not 0.0 < p < 1.0:
        raise PreconditionError(f"p must lie in (0, 1), got {p!r}")
    h = math.pi / grid_n

    def deriv(theta):
        return derivative_dtheta(family, measure, eta, alpha, InputParams(p, theta)).total

    def value(theta):
        return _value(family, measure, eta, alpha, p, theta)

    nodes = [k * h for k in range(grid_n + 1)]
    nodes[-1] = math.pi
    samples = [None] * (grid_n + 1)
    gaps = []
    for k in range(1, grid_n):
        try:
            samples[k] = deriv(nodes[k])
        except DomainError:
            gaps.append(nodes[k])

    roots = []
    k = 1
    while k < grid_n:
        dk = samples[k]
        if dk is not None and dk == 0.0:
            start = k
            while k + 1 < grid_n and samples[k + 1] == 0.0:
                k += 1
            roots.append(0.5 * (nodes[start] + nodes[k]))
        elif k + 1 < grid_n and dk is not None and samples[k + 1] is not None:
            dn = samples[k + 1]
            if dk * dn < 0.0:
                lo, hi, dlo = nodes[k], nodes[k + 1], dk
                while hi - lo > BISECT_TOL:
                    mid = 0.5 * (lo + hi)
                    dm = deriv(mid)
                    if dm == 0.0:
                        lo = hi = mid
                        break
                    if (dm < 0.0) == (dlo < 0.0):
                        lo, dlo = mid, dm
                    else:
                        hi = mid
                roots.append(0.5 * (lo + hi))
        k += 1

    extrema = []
    for end, inward in ((0.0, h), (math.pi, math.pi - h)):
        extrema.append(Extremum(end, _classify(2.0 * (value(inward) - value(end)))))
    for t in roots:
        if extrema and any(abs(t - e.theta) < 1e-6 for e in extrema):
            continue
        sd = value(t - h) - 2.0 * value(t) + value(t + h)
        extrema.append(Extremum(t, _classify(sd)))
    extrema.sort(key=lambda e: e.theta)
    return ScanResult(extrema, gaps)


def theta_profile(family, measure, eta, alpha, p, n=181):
    """Information sampled at ``n`` evenly spaced angles in [0, pi]."""
    thetas = np.linspace(0.0, math.pi, n)
    return [(float(t), _value(family, measure, eta, alpha, p, float(t))) for t in thetas]
