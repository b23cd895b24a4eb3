"""Generating-function evaluation on roots of unity and transform primitives.

Convention (normative, pinned by tests): the forward transform of a coefficient
vector uses the positive exponent,

    fhat[k] = sum_j f[j] * exp(+2i*pi*j*k/kmax),

and the inverse recovers real coefficients as

    f[k] = (1/kmax) * sum_j Re(fhat[j] * exp(-2i*pi*j*k/kmax)).

Conjugating every buffer flips to the opposite (library-default) convention and
is harmless for real coefficient sequences.  Buffers are plain complex128
arrays of power-of-two length ("ComplexBuffer").

The heavy lifting is delegated to numpy's pocketfft: the forward transform here
is ``kmax * np.fft.ifft`` and the inverse is ``Re(np.fft.fft) / kmax``, which
realize the two sums above exactly.
"""

from __future__ import annotations

import numpy as np

from .errors import DivergentPGF, InvalidSize, SizeMismatch
from .pmf import is_pow2

ComplexBuffer = np.ndarray


def _require_pow2(n: int) -> None:
    if not is_pow2(n):
        raise InvalidSize(f"buffer length {n} is not a power of two")


def roots_of_unity(kmax: int) -> ComplexBuffer:
    """The evaluation set: entry j is exp(2i*pi*j/kmax)."""
    _require_pow2(kmax)
    return np.exp(2j * np.pi * np.arange(kmax) / kmax)


def dft(coeffs) -> ComplexBuffer:
    """Forward transform (positive exponent) of a coefficient vector.

    Entry k is the generating function of ``coeffs`` evaluated at the k-th
    root of unity.
    """
    arr = np.asarray(coeffs)
    _require_pow2(len(arr))
    return np.fft.ifft(arr) * len(arr)


def idft(buf: ComplexBuffer) -> np.ndarray:
    """Recover real coefficients from generating-function values on the roots."""
    _require_pow2(len(buf))
    return np.real(np.fft.fft(buf)) / len(buf)


def idft_complex(buf: ComplexBuffer) -> np.ndarray:
    """Inverse transform without the real-part projection (diagnostics only)."""
    _require_pow2(len(buf))
    return np.fft.fft(buf) / len(buf)


def pointwise_product(a: ComplexBuffer, b: ComplexBuffer) -> ComplexBuffer:
    """Entrywise product; inverting realizes the circular convolution."""
    if len(a) != len(b):
        raise SizeMismatch(f"buffer lengths differ: {len(a)} vs {len(b)}")
    return a * b


def partial_sum_coeffs(coeffs) -> np.ndarray:
    """Running prefix sums of a coefficient vector.

    This is the coefficient-space realization of dividing the generating
    function by (1 - t); pointwise division is unusable on the evaluation set
    because |t| = 1 there.
    """
    return np.cumsum(np.asarray(coeffs, dtype=float))


def weighted_index_coeffs(masses: np.ndarray) -> np.ndarray:
    """The vector {k * f(k)}: coefficients of t * d/dt applied to the pgf."""
    return np.arange(len(masses), dtype=float) * masses


def compound_pgf_on_roots(frequency, severity_dft: ComplexBuffer) -> ComplexBuffer:
    """pgf of a random sum, evaluated on the roots: P_M(P_B(z)).

    ``frequency`` is a :class:`~allocgen.models.KatzParams`; the Poisson case
    (a = 0) evaluates exp(lam * (P_B(z) - 1)) directly.
    """
    a, b = frequency.a, frequency.b
    s = np.asarray(severity_dft, dtype=complex)
    if a == 0.0:
        return np.exp(b * (s - 1.0))
    denom = 1.0 - a * s
    if np.min(np.abs(denom)) <= 1e-12:
        raise DivergentPGF("a * P_B(z) reaches 1 on the evaluation set")
    return ((1.0 - a) / denom) ** (b / a + 1.0)
