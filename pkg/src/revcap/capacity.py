"""Single-letter capacities, figure sweeps and channel-property checks."""
from dataclasses import dataclass, field
import math

import numpy as np

from . import closedform
from .channels import (
    CHANNEL_EQUALITY_TOL,
    ChannelSpec,
    KrausChannel,
    choi_distance,
    compose,
    make_ad,
    make_gad,
    gad_env_qubit_channel,
    random_channel,
    tensor_channels,
)
from .linalg import DomainError, PreconditionError, check_density_matrix, partial_trace, random_density_matrix
from .qinfo import binary_entropy, reverse_coherent_information

GRID_POINTS = 1024
P_MIN, P_MAX = 1e-6, 1.0 - 1e-6
ZERO_CAPACITY = 1e-7
DENSE_POINTS = 2 ** 15
INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class OptimizationResult:
    argmax_p: float
    value: float
    raw_value: float
    evaluations: int
    refined: bool


@dataclass
class CurveRow:
    eta: float
    alpha: float
    value_ci: float
    value_rci: float
    p_ci: float
    p_rci: float


@dataclass
class ViolationReport:
    lhs: float
    rhs: float
    margin: float
    witness: dict
    violated: bool
    domain_flag: bool = False


def _report(lhs, rhs, tol, witness, domain_flag=False):
    margin = rhs - lhs
    return ViolationReport(lhs, rhs, margin, witness, margin < -tol, domain_flag)


# -- optimization ---------------------------------------------------------------

def _objective(spec, measure, method):
    if spec.family not in ("ad", "gad"):
        raise PreconditionError(f"population optimization supports ad and gad, not {spec.family}")
    alpha = spec.alpha if spec.family == "gad" else 0.0
    if method == "closed":
        def f(p):
            return closedform.diagonal_information(spec.family, measure, spec.eta, alpha, p)
    elif method == "generic":
        def f(p):
            vals = [
                closedform.generic_information(
                    spec.family, measure, spec.eta, alpha, closedform.InputParams(float(x))
                ).value
                for x in np.atleast_1d(p)
            ]
            return np.array(vals) if np.ndim(p) else vals[0]
    else:
        raise PreconditionError(f"method must be 'closed' or 'generic', got {method!r}")
    return f


def golden_section_max(f, lo, hi, tol):
    """Maximize a unimodal scalar function on [lo, hi] down to bracket width ``tol``."""
    x1 = hi - INVPHI * (hi - lo)
    x2 = lo + INVPHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    evals = 2
    while hi - lo > tol:
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - INVPHI * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + INVPHI * (hi - lo)
            f2 = f(x2)
        evals += 1
    return (x1, f1, evals) if f1 >= f2 else (x2, f2, evals)


def optimize_population(spec, measure, tol=1e-10, method="closed"):
    """Maximize the information over diagonal inputs ``diag(1-p, p)``.

    A 1024-point grid on [1e-6, 1-1e-6] brackets the maximum and a
    golden-section search refines it. ``value`` is clamped at zero while
    ``raw_value`` keeps the unclamped optimum.
    """
    if tol < 1e-10:
        raise PreconditionError(f"tol must be at least 1e-10, got {tol!r}")
    f = _objective(spec, measure, method)
    grid = np.linspace(P_MIN, P_MAX, GRID_POINTS)
    vals = np.asarray(f(grid), dtype=float)
    k = int(np.argmax(vals))
    best_p, best_v = float(grid[k]), float(vals[k])
    lo = float(grid[max(k - 1, 0)])
    hi = float(grid[min(k + 1, GRID_POINTS - 1)])
    x, fx, evals = golden_section_max(lambda t: float(f(t)), lo, hi, tol)
    refined = fx >= best_v
    if refined:
        best_p, best_v = x, fx
    return OptimizationResult(best_p, max(best_v, 0.0), best_v, GRID_POINTS + evals, refined)


def dense_grid_maximum(spec, measure, n=DENSE_POINTS):
    """Brute-force maximum on an ``n``-point grid; cross-checks the optimizer."""
    f = _objective(spec, measure, "closed")
    grid = np.linspace(P_MIN, P_MAX, n)
    vals = np.asarray(f(grid), dtype=float)
    k = int(np.argmax(vals))
    return float(grid[k]), float(vals[k])


def _spec(family, eta, alpha):
    if family == "ad":
        return ChannelSpec("ad", eta=eta)
    if family == "gad":
        return ChannelSpec("gad", eta=eta, alpha=alpha)
    raise PreconditionError(f"family must be ad or gad, got {family!r}")


def curve_point(family, eta, alpha=None, raw=False):
    """Both optimized measures at one channel parameter."""
    spec = _spec(family, eta, alpha)
    ci = optimize_population(spec, "ci")
    rci = optimize_population(spec, "rci")
    pick = (lambda r: r.raw_value) if raw else (lambda r: r.value)
    return CurveRow(eta, alpha, pick(ci), pick(rci), ci.argmax_p, rci.argmax_p)


def eta_grid(eta_from, eta_to, steps):
    if not 0.0 <= eta_from < eta_to <= 1.0:
        raise PreconditionError(f"need 0 <= eta_from < eta_to <= 1, got {eta_from}, {eta_to}")
    if steps < 2:
        raise PreconditionError(f"steps must be at least 2, got {steps}")
    grid = np.linspace(eta_from, eta_to, steps + 1)
    grid[-1] = eta_to
    return [float(x) for x in grid]


def capacity_curve(family, sweep, alpha=None, raw=False, mapper=map):
    """Optimized capacities on ``steps + 1`` evenly spaced values of eta.

    ``mapper`` may be a parallel map; row order always follows the grid.
    """
    if family == "gad" and alpha is None:
        raise PreconditionError("alpha required for gad")
    grid = eta_grid(*sweep)
    n = len(grid)
    return list(mapper(curve_point, [family] * n, grid, [alpha] * n, [raw] * n))


def noise_threshold(measure, eta, tol=1e-9):
    """Smallest alpha in [0, 1/2] at which the GAD capacity vanishes.

    Bisection on the optimized capacity ``g(alpha)`` with a zero threshold of
    1e-7 bits. Returns 0 if ``g(0)`` is already zero and 1/2 if the
    capacity survives at ``alpha = 1/2``.
    """
    if not 0.0 <= eta <= 1.0:
        raise PreconditionError(f"eta must lie in [0, 1], got {eta!r}")

    def g(alpha):
        return optimize_population(ChannelSpec("gad", eta=eta, alpha=alpha), measure).raw_value

    if g(0.0) <= ZERO_CAPACITY:
        return 0.0
    if g(0.5) > ZERO_CAPACITY:
        return 0.5
    lo, hi = 0.0, 0.5
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) > ZERO_CAPACITY:
            lo = mid
        else:
            hi = mid
    return hi


def threshold_point(eta, tol=1e-9):
    return eta, noise_threshold("ci", eta, tol), noise_threshold("rci", eta, tol)


# -- channel properties ------------------------------------------------------------

def check_degradable_ad(eta):
    """Does ``D_{(1-eta)/eta}`` map Bob's output onto the environment's?

    ``lhs`` is the Choi distance between the composed channel and
    ``D_{1-eta}``; ``rhs`` is the equality tolerance. For ``eta < 1/2`` no AD
    degrading map exists and ``domain_flag`` is set instead.
    """
    if not 0.0 < eta <= 1.0:
        raise PreconditionError(f"eta must lie in (0, 1], got {eta!r}")
    ratio = (1.0 - eta) / eta
    witness = {"eta": eta, "degrading_eta": ratio}
    if ratio > 1.0:
        return ViolationReport(0.0, 0.0, 0.0, witness, False, domain_flag=True)
    dist = choi_distance(compose(make_ad(ratio), make_ad(eta)), make_ad(1.0 - eta))
    return _report(dist, CHANNEL_EQUALITY_TOL, 0.0, witness)


def check_antidegradable_gad(eta, alpha):
    """Does ``D_{(eta/(1-eta), alpha)}`` map the environment onto Bob's output?"""
    if not 0.0 < eta <= 0.5:
        raise DomainError(f"eta must lie in (0, 1/2], got {eta!r}; eta/(1-eta) would exceed 1")
    if not 0.0 <= alpha <= 1.0:
        raise PreconditionError(f"alpha must lie in [0, 1], got {alpha!r}")
    ratio = eta / (1.0 - eta)
    degrade = make_gad(min(ratio, 1.0), alpha)[0]
    composed = compose(degrade, gad_env_qubit_channel(eta, alpha))
    dist = choi_distance(composed, make_gad(eta, alpha)[0])
    return _report(dist, CHANNEL_EQUALITY_TOL, 0.0, {"eta": eta, "alpha": alpha, "degrading_eta": ratio})


def _as_channel(ch):
    return ch.build() if isinstance(ch, ChannelSpec) else ch


def additivity_check(channel, joint_input=None, seed=0, tol=1e-9):
    """Reverse coherent information of two channel uses against one use each.

    ``lhs = I_R(ch (x) ch, rho_12)`` and ``rhs = I_R(ch, rho_1) + I_R(ch,
    rho_2)``; the relation holds when ``margin = rhs - lhs >= -tol``.
    """
    ch = _as_channel(channel)
    d = ch.in_dim
    if joint_input is None:
        joint_input = random_density_matrix(d * d, np.random.default_rng(seed))
    rho = check_density_matrix(joint_input, "joint input")
    if rho.shape[0] != d * d:
        raise PreconditionError(f"joint input has dim {rho.shape[0]}, expected {d * d}")
    lhs = reverse_coherent_information(tensor_channels(ch, ch), rho).value
    rho1 = partial_trace(rho, [d, d], [0])
    rho2 = partial_trace(rho, [d, d], [1])
    rhs = (
        reverse_coherent_information(ch, rho1).value
        + reverse_coherent_information(ch, rho2).value
    )
    return _report(lhs, rhs, tol, {"seed": seed, "lhs": lhs})


def dpi_probe(first, post, rho_a, tol=1e-9):
    """Compare ``I_R(post o first)`` (lhs) with ``I_R(first)`` (rhs).

    Post-processing the output should not raise a data-processing quantity;
    ``violated`` flags inputs where it does by more than ``tol``.
    """
    first, post = _as_channel(first), _as_channel(post)
    lhs = reverse_coherent_information(compose(post, first), rho_a).value
    rhs = reverse_coherent_information(first, rho_a).value
    return _report(lhs, rhs, tol, {})


def dpi_search(draws, seed=0, tol=1e-9):
    """Random search for inputs where post-processing increases ``I_R``.

    Returns the list of violating reports; finding none is not an error.
    """
    rng = np.random.default_rng(seed)
    found = []
    for n in range(draws):
        s1, s2 = (int(x) for x in rng.integers(0, 2 ** 31, size=2))
        first = random_channel(2, 2, int(rng.integers(1, 5)), s1)
        post = random_channel(2, 2, int(rng.integers(1, 5)), s2)
        rho = random_density_matrix(2, rng)
        rep = dpi_probe(first, post, rho, tol)
        if rep.violated:
            rep.witness = {"draw": n, "first_seed": s1, "post_seed": s2}
            found.append(rep)
    return found


def erasure_reference(epsilon, p):
    """Analytic ``(ci, rci)`` of the erasure channel at ``diag(1-p, p)``."""
    if not (0.0 <= epsilon <= 1.0 and 0.0 <= p <= 1.0):
        raise PreconditionError("epsilon and p must lie in [0, 1]")
    h = binary_entropy(p)
    return (1.0 - 2.0 * epsilon) * h, (1.0 - epsilon) * h - binary_entropy(epsilon)
