"""Array geometry and the spherical-wave line-of-sight BS-IRS channel.

The BS carries a uniform linear array (ULA) and the IRS a uniform
rectangular array (URA).  Each array is placed at an ``origin`` and
oriented by the two principal unit vectors returned by
:func:`principal_unit_vectors`.  The LoS matrix uses the exact
element-to-element distance, so no far-field approximation is made.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DEFAULT_WAVELENGTH",
    "ArrayGeometry",
    "principal_unit_vectors",
    "element_positions",
    "los_channel",
]

#: 2.4 GHz carrier.
DEFAULT_WAVELENGTH = 0.125


def principal_unit_vectors(azimuth: float, elevation: float) -> tuple[np.ndarray, np.ndarray]:
    """Return the two orthonormal principal directions of an array.

    ``n1 = (cos(el) cos(az), cos(el) sin(az), sin(el))`` and ``n2`` is the
    direction obtained by tilting ``n1`` up by 90 degrees in elevation.

    Parameters
    ----------
    azimuth, elevation : float
        Angles in radians.

    Returns
    -------
    n1, n2 : ndarray, shape (3,)
    """
    ca, sa = np.cos(azimuth), np.sin(azimuth)
    ce, se = np.cos(elevation), np.sin(elevation)
    n1 = np.array([ce * ca, ce * sa, se])
    n2 = np.array([-se * ca, -se * sa, ce])
    return n1, n2


@dataclass(frozen=True)
class ArrayGeometry:
    """Position, orientation and layout of a ULA (``n2 == 1``) or URA.

    ``n1`` elements are spaced by ``spacing1`` along the first principal
    direction and ``n2`` elements by ``spacing2`` along the second one.
    Element ``(i1, i2)`` has flat index ``i1 * n2 + i2``.
    """

    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    azimuth: float = np.pi / 2
    elevation: float = 0.0
    n1: int = 1
    n2: int = 1
    spacing1: float = DEFAULT_WAVELENGTH
    spacing2: float = DEFAULT_WAVELENGTH
    wavelength: float = DEFAULT_WAVELENGTH

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError("element counts must be >= 1")
        if self.spacing1 <= 0 or self.spacing2 <= 0:
            raise ValueError("element spacings must be positive")
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")
        if len(self.origin) != 3:
            raise ValueError("origin must be a 3D point")

    @classmethod
    def ula(cls, count, spacing, origin=(0.0, 0.0, 0.0), azimuth=np.pi / 2,
            elevation=0.0, wavelength=DEFAULT_WAVELENGTH):
        return cls(tuple(map(float, origin)), azimuth, elevation, count, 1,
                   spacing, spacing, wavelength)

    @classmethod
    def ura(cls, n1, n2, spacing1, spacing2, origin=(0.0, 0.0, 0.0),
            azimuth=np.pi / 2, elevation=0.0, wavelength=DEFAULT_WAVELENGTH):
        return cls(tuple(map(float, origin)), azimuth, elevation, n1, n2,
                   spacing1, spacing2, wavelength)

    @property
    def size(self) -> int:
        return self.n1 * self.n2

    def distance_to(self, other: "ArrayGeometry") -> float:
        """Distance between the two array origins."""
        return float(np.linalg.norm(np.subtract(other.origin, self.origin)))


def element_positions(geom: ArrayGeometry) -> np.ndarray:
    """Cartesian positions of all elements, shape ``(geom.size, 3)``.

    Rows follow the flat index ``i1 * n2 + i2``.
    """
    u1, u2 = principal_unit_vectors(geom.azimuth, geom.elevation)
    i1, i2 = np.divmod(np.arange(geom.size), geom.n2)
    return (np.asarray(geom.origin, dtype=float)
            + np.outer(i1 * geom.spacing1, u1)
            + np.outer(i2 * geom.spacing2, u2))


def path_lengths(bs: ArrayGeometry, irs: ArrayGeometry) -> np.ndarray:
    """Matrix of BS-antenna to IRS-element distances, shape ``(M, N)``."""
    a = element_positions(bs)
    b = element_positions(irs)
    return np.linalg.norm(b[None, :, :] - a[:, None, :], axis=-1)


def los_channel(bs: ArrayGeometry, irs: ArrayGeometry) -> np.ndarray:
    """Unit-modulus LoS matrix ``H1[m, n] = exp(j 2 pi l_mn / wavelength)``.

    Raises
    ------
    ValueError
        If the arrays use different wavelengths or two elements coincide.
    """
    if not np.isclose(bs.wavelength, irs.wavelength, rtol=1e-12, atol=0.0):
        raise ValueError("BS and IRS geometries must share the wavelength")
    dist = path_lengths(bs, irs)
    if np.any(dist <= 0.0):
        raise ValueError("a BS antenna coincides with an IRS element")
    # reduce modulo the wavelength first so that large distances keep phase accuracy
    frac = np.mod(dist, bs.wavelength) / bs.wavelength
    return np.exp(2j * np.pi * frac)
