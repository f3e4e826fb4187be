"""Truncated KdV equation in spectral form.

The solution is represented by its positive-wavenumber Fourier coefficients
u_hat_k, k = 1..lam, stored as a complex array of shape (lam,) or, for
batched evaluation, (lam, B) with one column per batch member. The k = 0
coefficient is identically zero (zero spatial mean) and negative wavenumbers
follow from conjugate symmetry u_hat_{-k} = conj(u_hat_k), so the physical
field is real by construction.

The evolution equation for each stored mode is

    d u_hat_k / dt = -c3 * (i k / 2) * S_k + i * c2 * k^3 * u_hat_k

where S_k sums u_hat_m * u_hat_n over all m + n = k with |m|, |n| <= lam.
c2 multiplies the dispersive term and c3 the nonlinear term. Both derive
from the depth ratio D through c2_base * sqrt(D) and c3_base * D**-1.5.
"""

from typing import NamedTuple

import numpy as np

from .rng import as_key, stream

DEFAULT_LAM = 16


class DepthConstants(NamedTuple):
    """Base coefficients of the depth map, fixed by the physical setup."""

    c2: float = 0.0236
    c3: float = 0.1965


class TkdvParams(NamedTuple):
    """Coefficient pair of the truncated system: c2 dispersive, c3 nonlinear."""

    c2: float
    c3: float


DEFAULT_CONSTANTS = DepthConstants()


def coefficients_from_depth(depth, constants=DEFAULT_CONSTANTS):
    """Map a depth ratio D > 0 to the coefficient pair (c2, c3)."""
    if not depth > 0:
        raise ValueError(f"depth ratio must be positive, got {depth}")
    return TkdvParams(constants.c2 * np.sqrt(depth),
                      constants.c3 * depth ** -1.5)


def depth_from_c2(c2, constants=DEFAULT_CONSTANTS):
    """Invert the depth map using the dispersive coefficient only."""
    if not c2 > 0:
        raise ValueError(f"dispersive coefficient must be positive, got {c2}")
    return (c2 / constants.c2) ** 2


def _as_columns(modes):
    modes = np.asarray(modes, dtype=np.complex128)
    if modes.ndim == 1:
        return modes[:, None], True
    if modes.ndim == 2:
        return modes, False
    raise ValueError("modes must be a 1-d state or a (lam, batch) array")


def convolution_sum(modes):
    """S_k = sum over m + n = k of u_hat_m u_hat_n, for k = 1..lam.

    Direct summation over the full symmetric spectrum. The iteration order
    is fixed and every operation is elementwise over the batch axis, so a
    column of a batched call is bit-identical to the same state evaluated
    alone.
    """
    cols, single = _as_columns(modes)
    lam, nb = cols.shape
    full = np.zeros((2 * lam + 1, nb), np.complex128)
    full[:lam] = np.conj(cols[::-1])
    full[lam + 1:] = cols
    padded = np.zeros((3 * lam + 1, nb), np.complex128)
    padded[:2 * lam + 1] = full
    out = np.zeros((lam, nb), np.complex128)
    tmp = np.empty((lam, nb), np.complex128)
    for i in range(2 * lam + 1):
        if i == lam:
            continue  # the k = 0 coefficient is zero
        np.multiply(full[i], padded[2 * lam + 1 - i: 3 * lam + 1 - i], out=tmp)
        out += tmp
    return out[:, 0] if single else out


def tkdv_rhs(modes, params):
    """Time derivative of the stored modes under coefficients (c2, c3).

    For batched modes of shape (lam, B), params entries may be scalars or
    length-B arrays, broadcast across the batch.
    """
    c2, c3 = params
    cols, single = _as_columns(modes)
    k = np.arange(1, cols.shape[0] + 1, dtype=np.float64)[:, None]
    out = (-0.5j) * c3 * (k * convolution_sum(cols)) + 1j * c2 * (k ** 3 * cols)
    return out[:, 0] if single else out


def momentum(modes):
    """Spatial mean of the field; zero by construction since k = 0 is absent."""
    np.asarray(modes)
    return 0.0


def energy(modes):
    """E = 2 pi sum |u_hat_k|^2. Returns a scalar, or per-column for a batch."""
    modes = np.asarray(modes, dtype=np.complex128)
    total = np.sum(np.abs(modes) ** 2, axis=0)
    return 2.0 * np.pi * total


def hamiltonian(modes, params):
    """H = c3 * H3 - c2 * H2 of a single state.

    H3 sums u_hat_m u_hat_n u_hat_l over all triples with m + n + l = 0 and
    |m|, |n|, |l| <= lam; H2 = pi * sum over k = -lam..lam of k^2 |u_hat_k|^2.
    H3 is accumulated as a complex number over the full spectrum and must be
    real up to round-off; a large imaginary residue means the conjugate
    symmetry was broken somewhere upstream.
    """
    c2, c3 = params
    modes = np.asarray(modes, dtype=np.complex128)
    if modes.ndim != 1:
        raise ValueError("hamiltonian expects a single state")
    lam = modes.shape[0]
    full = np.concatenate([np.conj(modes[::-1]), [0.0], modes])
    pair_sums = np.convolve(full, full)  # index j holds sum_{m+n=j-2lam}
    h3 = (np.pi / 3.0) * np.dot(full, pair_sums[lam:3 * lam + 1][::-1])
    if not abs(h3.imag) <= 1e-10 * (1.0 + abs(h3.real)):  # catches NaN too
        raise ArithmeticError(
            f"imaginary residue {h3.imag:.3e} in cubic invariant; "
            "conjugate symmetry violated")
    k = np.arange(1, lam + 1, dtype=np.float64)
    h2 = 2.0 * np.pi * np.sum(k ** 2 * np.abs(modes) ** 2)
    return c3 * h3.real - c2 * h2


def physical_grid(n_grid):
    """Uniform grid on [-pi, pi), left endpoint included."""
    return -np.pi + 2.0 * np.pi * np.arange(n_grid) / n_grid


def to_physical(modes, n_grid):
    """Evaluate u(x_j) = 2 sum Re(u_hat_k exp(i k x_j)) on the uniform grid."""
    modes = np.asarray(modes, dtype=np.complex128)
    if modes.ndim != 1:
        raise ValueError("to_physical expects a single state")
    lam = modes.shape[0]
    if n_grid < 2 * lam + 1:
        raise ValueError(f"n_grid must be at least 2*lam+1 = {2 * lam + 1}")
    k = np.arange(1, lam + 1)
    phases = np.exp(1j * np.outer(k, physical_grid(n_grid)))
    return 2.0 * (modes @ phases).real


def normalize(modes):
    """Rescale by a positive factor so the energy equals one."""
    modes = np.asarray(modes, dtype=np.complex128)
    e = energy(modes)
    if not e > 0:
        raise ValueError("cannot normalize a zero state")
    return modes / np.sqrt(e)


def random_initial_state(seed, lam=DEFAULT_LAM):
    """Unit-energy state with i.i.d. standard normal real and imaginary parts."""
    rng = stream(*as_key(seed))
    return normalize(unembed(rng.standard_normal(2 * lam)))


def embed(modes):
    """Interleave (Re u_1, Im u_1, ..., Re u_lam, Im u_lam) as a real vector."""
    modes = np.asarray(modes, dtype=np.complex128)
    out = np.empty((2 * modes.shape[0],) + modes.shape[1:], dtype=np.float64)
    out[0::2] = modes.real
    out[1::2] = modes.imag
    return out


def unembed(vec):
    """Inverse of embed; lossless."""
    vec = np.asarray(vec, dtype=np.float64)
    return vec[0::2] + 1j * vec[1::2]
