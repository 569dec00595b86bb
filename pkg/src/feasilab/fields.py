"""Complex 3D fields and the unitary discrete Fourier transform.

A field is a plain ``numpy.ndarray`` of shape ``(Nx, Ny, Nz)`` with dtype
``complex128`` in C order, so the third (z) index varies fastest in memory.
Axes are numbered 1..3 in the public API to match the usual tensor notation.
"""

import numpy as np

__all__ = [
    "as_field",
    "dft3_forward",
    "dft3_inverse",
    "axis_reverse",
    "norm",
    "distance",
    "centered_freqs",
    "freq_radius_grid",
    "max_freq_radius",
]


def as_field(u) -> np.ndarray:
    """Coerce input to a C-contiguous complex128 3D array."""
    a = np.ascontiguousarray(u, dtype=np.complex128)
    if a.ndim != 3:
        raise ValueError(f"expected a 3D field, got shape {a.shape}")
    return a


def dft3_forward(u: np.ndarray) -> np.ndarray:
    """Unitary 3D DFT: each 1D pass carries a 1/sqrt(n) factor.

    With this normalization the transform is an isometry (Parseval holds
    exactly up to rounding), so projections defined in the frequency domain
    and conjugated by the transform stay metric projections.
    """
    return np.fft.fftn(u, norm="ortho")


def dft3_inverse(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`dft3_forward` under the same unitary convention."""
    return np.fft.ifftn(v, norm="ortho")


def axis_reverse(u: np.ndarray, axis: int) -> np.ndarray:
    """Reverse a field along one axis (1-based).

    The entry at (i, j, l) of the result is the entry of ``u`` with the chosen
    index reversed, e.g. axis 1 maps (i, j, l) -> (Nx - i + 1, j, l) in
    1-based indexing.  Linear, norm-preserving, and an involution.
    """
    if axis not in (1, 2, 3):
        raise ValueError(f"axis must be 1, 2 or 3, got {axis!r}")
    return np.flip(u, axis=axis - 1)


def norm(u) -> float:
    """Euclidean norm sqrt(sum |u_k|^2) of an array of any shape."""
    return float(np.linalg.norm(np.ravel(u)))


def distance(u, v) -> float:
    """Euclidean distance ||u - v||."""
    return norm(np.asarray(u) - np.asarray(v))


def centered_freqs(n: int) -> np.ndarray:
    """Integer frequency coordinate of each FFT output index.

    k(i) = i for i < n/2 and i - n otherwise, so DC sits at index 0 and the
    coordinates are symmetric about zero (Nyquist maps to -n/2 for even n).
    """
    k = np.arange(n)
    k[k >= (n + 1) // 2] -= n
    return k


def freq_radius_grid(dims) -> np.ndarray:
    """Length of the centered frequency vector at every FFT grid index."""
    kx, ky, kz = (centered_freqs(n).astype(float) for n in dims)
    return np.sqrt(
        kx[:, None, None] ** 2 + ky[None, :, None] ** 2 + kz[None, None, :] ** 2
    )


def max_freq_radius(dims) -> float:
    """Largest frequency radius representable on the grid."""
    return float(freq_radius_grid(dims).max())
