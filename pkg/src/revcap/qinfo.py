"""Entropies and (reverse) coherent information, evaluated by diagonalization.

Logarithms are base 2 throughout, so every quantity is in bits (e-bits).
The reference system R is always the first tensor factor.
"""
from dataclasses import dataclass
import math

import numpy as np

from .channels import apply_to_half, canonical_isometry
from .linalg import (
    PreconditionError,
    check_density_matrix,
    clamp_spectrum,
    hermitian_eigenvalues,
    partial_trace,
    projector,
    purify,
)

ZERO_CUTOFF = 1e-15


@dataclass(frozen=True)
class BipartiteState:
    state: np.ndarray
    dims: tuple

    def __post_init__(self):
        d1, d2 = self.dims
        if self.state.shape != (d1 * d2, d1 * d2):
            raise PreconditionError(f"dims {self.dims} do not match state shape {self.state.shape}")

    def first(self):
        return partial_trace(self.state, self.dims, [0])

    def second(self):
        return partial_trace(self.state, self.dims, [1])


@dataclass(frozen=True)
class InfoValue:
    value: float
    method: str = "generic"

    def __float__(self):
        return self.value


def binary_entropy(x):
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary entropy needs x in [0, 1], got {x!r}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def binary_entropy_array(x):
    """Vectorized binary entropy; ``x`` must already lie in [0, 1]."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -x * np.log2(x) - (1.0 - x) * np.log2(1.0 - x)
    return np.where((x <= 0.0) | (x >= 1.0), 0.0, h)


def shannon_entropy(p):
    """Entropy in bits of a probability vector.

    Entries in ``[-1e-10, 0)`` are treated as zero, entries below ``1e-15``
    contribute nothing and rounding excess above 1 is clipped.
    """
    p = clamp_spectrum(np.asarray(p, dtype=float).ravel())
    total = float(p.sum())
    if abs(total - 1.0) > 1e-8:
        raise PreconditionError(f"probabilities sum to {total!r}, expected 1")
    p = np.minimum(p[p > ZERO_CUTOFF], 1.0)
    return float(-np.sum(p * np.log2(p)))


def von_neumann_entropy(rho):
    return shannon_entropy(hermitian_eigenvalues(rho))


def mutual_information(state):
    """``S(first) + S(second) - S(joint)`` of a :class:`BipartiteState`."""
    return (
        von_neumann_entropy(state.first())
        + von_neumann_entropy(state.second())
        - von_neumann_entropy(state.state)
    )


def joint_state(ch, rho_a):
    """``(I (x) ch)`` applied to the purification of ``rho_a``."""
    rho_a = check_density_matrix(rho_a, "rho_A")
    if rho_a.shape[0] != ch.in_dim:
        raise PreconditionError(f"input has dim {rho_a.shape[0]}, channel expects {ch.in_dim}")
    d = ch.in_dim
    rho_ra = projector(purify(rho_a))
    return BipartiteState(apply_to_half(ch, rho_ra, (d, d)), (d, ch.out_dim))


def entropies(ch, rho_a):
    """``(S(R), S(B), S(RB))`` for the channel's joint output state."""
    st = joint_state(ch, rho_a)
    return (
        von_neumann_entropy(st.first()),
        von_neumann_entropy(st.second()),
        von_neumann_entropy(st.state),
    )


def coherent_information(ch, rho_a):
    _, s_b, s_rb = entropies(ch, rho_a)
    return InfoValue(s_b - s_rb, "generic")


def reverse_coherent_information(ch, rho_a):
    s_r, _, s_rb = entropies(ch, rho_a)
    return InfoValue(s_r - s_rb, "generic")


def purified_output(ch, rho_a):
    """Pure state on (R, B, E) from the canonical dilation of ``ch``.

    Returns the vector and its subsystem dims ``(d_R, d_B, d_E)``.
    """
    rho_a = check_density_matrix(rho_a, "rho_A")
    if rho_a.shape[0] != ch.in_dim:
        raise PreconditionError(f"input has dim {rho_a.shape[0]}, channel expects {ch.in_dim}")
    iso = canonical_isometry(ch)
    psi = purify(rho_a).reshape(ch.in_dim, ch.in_dim)
    phi = psi @ iso.V.T  # (R, A) -> (R, B*E)
    return phi.ravel(), (ch.in_dim, ch.out_dim, iso.env_dim)


def rci_via_environment(ch, rho_a):
    """Reverse coherent information as ``S(BE) - S(E)``."""
    phi, dims = purified_output(ch, rho_a)
    rho = projector(phi)
    s_be = von_neumann_entropy(partial_trace(rho, dims, [1, 2]))
    s_e = von_neumann_entropy(partial_trace(rho, dims, [2]))
    return InfoValue(s_be - s_e, "generic")
