"""Quantum channels in Kraus form.

Provides the amplitude damping (AD), generalized amplitude damping (GAD)
and erasure families, plus composition, tensoring, complementation and
Choi matrices. Channels are immutable; every operation returns a new one.
"""
from dataclasses import dataclass
import math

import numpy as np

from .linalg import PreconditionError, as_matrix, check_density_matrix, partial_trace

COMPLETENESS_TOL = 1e-12
CHANNEL_EQUALITY_TOL = 1e-10


class RangeError(ValueError):
    """A channel parameter lies outside its allowed interval."""


def _check_unit(name, value):
    if not (0.0 <= value <= 1.0) or math.isnan(value):
        raise RangeError(f"{name} must lie in [0, 1], got {value!r}")
    return float(value)


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Completely positive trace-preserving map ``rho -> sum_k E_k rho E_k^H``."""

    kraus: tuple
    in_dim: int
    out_dim: int

    def __post_init__(self):
        ops = tuple(as_matrix(k, "Kraus operator") for k in self.kraus)
        if not ops:
            raise PreconditionError("a channel needs at least one Kraus operator")
        for k in ops:
            if k.shape != (self.out_dim, self.in_dim):
                raise PreconditionError(
                    f"Kraus operator has shape {k.shape}, expected {(self.out_dim, self.in_dim)}"
                )
            k.setflags(write=False)
        object.__setattr__(self, "kraus", ops)
        dev = completeness_residual(self)
        if dev > COMPLETENESS_TOL:
            raise PreconditionError(f"Kraus operators are not complete: residual {dev:.3e}")

    def __len__(self):
        return len(self.kraus)

    def __call__(self, rho):
        return apply(self, rho)


@dataclass(frozen=True, eq=False)
class StinespringIsometry:
    """Isometry ``V`` from input to output (first) times environment (second)."""

    V: np.ndarray
    in_dim: int
    out_dim: int
    env_dim: int

    def __post_init__(self):
        v = as_matrix(self.V, "V")
        if v.shape != (self.out_dim * self.env_dim, self.in_dim):
            raise PreconditionError(f"isometry has shape {v.shape}")
        dev = np.max(np.abs(v.conj().T @ v - np.eye(self.in_dim)))
        if dev > COMPLETENESS_TOL:
            raise PreconditionError(f"V is not an isometry: residual {dev:.3e}")
        v.setflags(write=False)
        object.__setattr__(self, "V", v)

    def kraus_channel(self):
        """Channel to the output, environment traced out."""
        t = self.V.reshape(self.out_dim, self.env_dim, self.in_dim)
        return KrausChannel(tuple(t[:, k, :] for k in range(self.env_dim)), self.in_dim, self.out_dim)

    def env_channel(self):
        """Channel to the environment, output traced out."""
        t = self.V.reshape(self.out_dim, self.env_dim, self.in_dim)
        return KrausChannel(tuple(t[j, :, :] for j in range(self.out_dim)), self.in_dim, self.env_dim)


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    """Unnormalized Choi matrix ``sum_ij |i><j| (x) L(|i><j|)``, ordering (in, out)."""

    matrix: np.ndarray
    in_dim: int
    out_dim: int


def completeness_residual(ch):
    total = sum(k.conj().T @ k for k in ch.kraus)
    return float(np.max(np.abs(total - np.eye(ch.in_dim))))


# -- families ---------------------------------------------------------------

def identity_channel(dim=2):
    return KrausChannel((np.eye(dim, dtype=complex),), dim, dim)


def make_ad(eta):
    """Amplitude damping channel; ``1 - eta`` is the decay probability."""
    eta = _check_unit("eta", eta)
    e0 = np.array([[1.0, 0.0], [0.0, math.sqrt(eta)]], dtype=complex)
    e1 = np.array([[0.0, math.sqrt(1.0 - eta)], [0.0, 0.0]], dtype=complex)
    return KrausChannel((e0, e1), 2, 2)


def relaxation_unitary(eta):
    """Two-qubit relaxation unitary acting on (input, environment qubit)."""
    s, c = math.sqrt(eta), math.sqrt(1.0 - eta)
    return np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, s, c, 0.0],
            [0.0, -c, s, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ],
        dtype=complex,
    )


def thermal_environment(alpha):
    """``sqrt(1-alpha)|00> + sqrt(alpha)|11>`` on (environment qubit, purifier)."""
    psi = np.zeros(4, dtype=complex)
    psi[0] = math.sqrt(1.0 - alpha)
    psi[3] = math.sqrt(alpha)
    return psi


def gad_isometry(eta, alpha):
    """Stinespring isometry of the GAD channel.

    The input and the first half of the thermal pair pass through the
    relaxation unitary; the output is the first unitary output and the
    environment is (second unitary output, purifier), so ``env_dim = 4``.
    """
    eta = _check_unit("eta", eta)
    alpha = _check_unit("alpha", alpha)
    u = np.kron(relaxation_unitary(eta), np.eye(2))
    env = thermal_environment(alpha)
    cols = [u @ np.kron(np.eye(2)[:, i], env) for i in range(2)]
    return StinespringIsometry(np.stack(cols, axis=1), 2, 2, 4)


def make_gad(eta, alpha):
    """Generalized amplitude damping channel and its dilation."""
    iso = gad_isometry(eta, alpha)
    return iso.kraus_channel(), iso


def make_erasure(epsilon):
    """Qubit erasure channel into a qutrit; level 2 is the erasure flag."""
    eps = _check_unit("epsilon", epsilon)
    keep = math.sqrt(1.0 - eps) * np.eye(3, 2, dtype=complex)
    flag0 = np.zeros((3, 2), dtype=complex)
    flag0[2, 0] = math.sqrt(eps)
    flag1 = np.zeros((3, 2), dtype=complex)
    flag1[2, 1] = math.sqrt(eps)
    return KrausChannel((keep, flag0, flag1), 2, 3)


def random_channel(in_dim, out_dim, env_dim, seed):
    """Seeded random channel from a Haar-like isometry.

    A standard complex Gaussian ``(out_dim*env_dim) x in_dim`` matrix is
    orthonormalized by QR; Kraus operators are its ``env_dim`` slices.
    """
    if env_dim < 1 or in_dim < 1 or out_dim < 1:
        raise PreconditionError("dimensions must be positive")
    if out_dim * env_dim < in_dim:
        raise PreconditionError(
            f"no isometry from dim {in_dim} into {out_dim}x{env_dim}"
        )
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((out_dim * env_dim, in_dim)) + 1j * rng.standard_normal(
        (out_dim * env_dim, in_dim)
    )
    q, r = np.linalg.qr(g)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    iso = StinespringIsometry(q, in_dim, out_dim, env_dim)
    return iso.kraus_channel()


# -- operations ---------------------------------------------------------------

def apply(ch, rho):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (ch.in_dim, ch.in_dim):
        raise PreconditionError(f"rho has shape {rho.shape}, channel expects dim {ch.in_dim}")
    out = sum(k @ rho @ k.conj().T for k in ch.kraus)
    return 0.5 * (out + out.conj().T)


def apply_to_half(ch, rho_ra, dims):
    """Apply ``I (x) ch`` to a state on (reference, channel input)."""
    dim_r, dim_a = (int(d) for d in dims)
    if dim_a != ch.in_dim:
        raise PreconditionError(f"second factor has dim {dim_a}, channel expects {ch.in_dim}")
    rho_ra = np.asarray(rho_ra, dtype=complex)
    if rho_ra.shape != (dim_r * dim_a, dim_r * dim_a):
        raise PreconditionError(f"state has shape {rho_ra.shape}, dims {dims}")
    t = rho_ra.reshape(dim_r, dim_a, dim_r, dim_a)
    out = np.zeros((dim_r, ch.out_dim, dim_r, ch.out_dim), dtype=complex)
    for k in ch.kraus:
        out += np.einsum("bi,risj,cj->rbsc", k, t, k.conj())
    d = dim_r * ch.out_dim
    out = out.reshape(d, d)
    return 0.5 * (out + out.conj().T)


def compose(second, first):
    """The channel ``second o first``."""
    if first.out_dim != second.in_dim:
        raise PreconditionError(
            f"cannot compose: first outputs dim {first.out_dim}, second expects {second.in_dim}"
        )
    ops = tuple(f @ e for f in second.kraus for e in first.kraus)
    return KrausChannel(ops, first.in_dim, second.out_dim)


def tensor_channels(a, b):
    ops = tuple(np.kron(x, y) for x in a.kraus for y in b.kraus)
    return KrausChannel(ops, a.in_dim * b.in_dim, a.out_dim * b.out_dim)


def canonical_isometry(ch):
    """``V|psi> = sum_k E_k|psi> (x) |k>``; output first, environment second."""
    n = len(ch.kraus)
    v = np.zeros((ch.out_dim * n, ch.in_dim), dtype=complex)
    for k, e in enumerate(ch.kraus):
        v[k::n, :] = e
    return StinespringIsometry(v, ch.in_dim, ch.out_dim, n)


def complementary(ch):
    """Channel to the environment of the canonical dilation.

    The environment basis is indexed by Kraus position, so the complement
    of ``make_ad(eta)`` is exactly ``make_ad(1 - eta)``.
    """
    return canonical_isometry(ch).env_channel()


def gad_env_qubit_channel(eta, alpha, corrected=True):
    """Map from the GAD input to the second output of the relaxation unitary.

    The populating branch of the dilation (environment started in ``|1>``)
    leaves a relative minus sign on the environment qubit's coherences, so
    the plain marginal (``corrected=False``) only matches ``make_gad(1 - eta,
    alpha)`` at ``alpha = 0``. With ``corrected=True`` a controlled-Z from the
    purifier onto the environment qubit is applied before the purifier is
    discarded. That is a channel acting on the environment alone, and the
    result equals ``make_gad(1 - eta, alpha)``.
    """
    iso = gad_isometry(eta, alpha)
    t = np.array(iso.V).reshape(2, 2, 2, 2)  # (out, env qubit, purifier, in)
    if corrected:
        t[:, 1, 1, :] *= -1.0
    ops = tuple(t[b, :, f, :] for b in range(2) for f in range(2))
    return KrausChannel(ops, 2, 2)


def gad_environment_corrector():
    """Channel on the GAD environment (env qubit, purifier) -> env qubit.

    Applies a controlled-Z with the purifier as control and traces the
    purifier out. Composed with the complement of the GAD dilation this
    reproduces ``gad_env_qubit_channel(..., corrected=True)``.
    """
    cz = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)
    ops = []
    for f in range(2):
        k = np.zeros((2, 4), dtype=complex)
        for e in range(2):
            k[e, 2 * e + f] = 1.0
        ops.append(k @ cz)
    return KrausChannel(tuple(ops), 4, 2)


def choi(ch):
    d = ch.in_dim
    omega = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            omega[i * d + i, j * d + j] = 1.0
    return ChoiMatrix(apply_to_half(ch, omega, (d, d)), d, ch.out_dim)


def choi_distance(a, b):
    """Max-entry distance between the Choi matrices of two channels."""
    if (a.in_dim, a.out_dim) != (b.in_dim, b.out_dim):
        raise PreconditionError("channels have different input/output dimensions")
    return float(np.max(np.abs(choi(a).matrix - choi(b).matrix)))


def channels_equal(a, b, tol=CHANNEL_EQUALITY_TOL):
    return choi_distance(a, b) <= tol


def choi_trace_out_output(c):
    """``Tr_out`` of a Choi matrix; the identity for a trace-preserving map."""
    return partial_trace(c.matrix, [c.in_dim, c.out_dim], [0])


def gad_mixture_coefficient(eta, alpha):
    """Least-squares weight ``c`` in ``GAD(eta, alpha) = c AD + (1-c) populating``.

    Returns ``(c, residual)``; the residual is the max-entry Choi error of the
    fitted mixture.
    """
    target = choi(make_gad(eta, alpha)[0]).matrix
    damp = choi(make_gad(eta, 0.0)[0]).matrix
    pump = choi(make_gad(eta, 1.0)[0]).matrix
    diff = (damp - pump).ravel()
    denom = float(np.vdot(diff, diff).real)
    if denom == 0.0:
        return 1.0, float(np.max(np.abs(target - damp)))
    c = float(np.vdot(diff, (target - pump).ravel()).real / denom)
    resid = float(np.max(np.abs(c * damp + (1.0 - c) * pump - target)))
    return c, resid


# -- parametric descriptor ------------------------------------------------------

FAMILIES = ("identity", "ad", "gad", "erasure", "random")
_REQUIRED = {
    "identity": (),
    "ad": ("eta",),
    "gad": ("eta", "alpha"),
    "erasure": ("epsilon",),
    "random": ("seed",),
}


@dataclass(frozen=True)
class ChannelSpec:
    family: str
    eta: float = None
    alpha: float = None
    epsilon: float = None
    seed: int = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise PreconditionError(f"unknown channel family {self.family!r}")
        needed = _REQUIRED[self.family]
        for name in ("eta", "alpha", "epsilon", "seed"):
            value = getattr(self, name)
            if name in needed and value is None:
                raise PreconditionError(f"{name} required for {self.family}")
            if name not in needed and value is not None:
                raise PreconditionError(f"{name} not accepted for {self.family}")
            if value is not None and name != "seed":
                _check_unit(name, value)

    def build(self):
        if self.family == "identity":
            return identity_channel(2)
        if self.family == "ad":
            return make_ad(self.eta)
        if self.family == "gad":
            return make_gad(self.eta, self.alpha)[0]
        if self.family == "erasure":
            return make_erasure(self.epsilon)
        return random_channel(2, 2, 2, self.seed)
