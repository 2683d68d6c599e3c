"""Deterministic counter-based random streams.

All randomness in the package flows through Philox-4x64-10 keyed by
``(seed, stream)``, so that stream ``r`` is independent of how many draws
other streams consumed and of scheduling order.  Uniforms take the top 53
bits of each 64-bit word, centered in their bin; normal variates are the
inverse normal CDF of those uniforms.  Both constructions are documented
here so another implementation can reproduce the uint64 words bit-for-bit
and the normals to about 1e-15.
"""
from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_U64 = np.uint64
_MASK64 = (1 << 64) - 1


def _philox(seed: int, stream: int) -> np.random.Philox:
    key = np.array([seed & _MASK64, stream & _MASK64], dtype=_U64)
    return np.random.Philox(key=key)


def raw_stream(seed: int, stream: int, n: int) -> np.ndarray:
    """First ``n`` raw 64-bit words of substream ``stream``."""
    return _philox(seed, stream).random_raw(n)


def uniform_stream(seed: int, stream: int, n: int) -> np.ndarray:
    """``n`` uniforms in the open interval (0, 1).

    Mapping: u = ((word >> 11) + 0.5) * 2**-53.  The half offset keeps the
    values strictly inside (0, 1) so the normal inverse CDF stays finite.
    """
    words = raw_stream(seed, stream, n)
    return ((words >> _U64(11)).astype(np.float64) + 0.5) * 2.0**-53


def normal_stream(seed: int, stream: int, n: int) -> np.ndarray:
    """``n`` standard normal variates via the inverse-CDF transform."""
    return ndtri(uniform_stream(seed, stream, n))
