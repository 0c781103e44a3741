"""Bend parameterization and unit conventions.

A bend is described by the complementary angle fraction ``q`` in (0, 1).
The arms of the guide make the angle ``pi*q/2`` with the horizontal, so
the arm slope is ``a = tan(pi*q/2)`` and the Schwarz-Christoffel interior
angle fraction is ``alpha = (1 - q)/2``.  ``q -> 0`` is the straight guide,
``q = 1/2`` the L-shape and ``q -> 1`` a full fold.

The corner distance ``l`` is the vertical distance between the inner
(upper) corner at the origin and the outer (lower) corner at ``(0, -l)``.
The perpendicular arm width is therefore ``l*cos(pi*q/2)``.  Internal
calculations use ``l = pi``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

CANONICAL_L = math.pi


@dataclass(frozen=True)
class Geometry:
    """Immutable description of a sharply bent guide."""

    q: float
    alpha: float
    slope_a: float
    corner_distance_l: float

    @property
    def l(self) -> float:
        return self.corner_distance_l

    @property
    def bend_half_angle(self) -> float:
        """Angle between each arm and the horizontal, in radians."""
        return 0.5 * math.pi * self.q

    @property
    def arm_width(self) -> float:
        """Perpendicular width of the straight arms."""
        return self.corner_distance_l * math.cos(self.bend_half_angle)


def geometry_from_q(q: float, l: float = CANONICAL_L) -> Geometry:
    """Build a :class:`Geometry` from the complementary angle fraction."""
    if not (0.0 < q < 1.0) or not math.isfinite(q):
        raise DomainError(f"q must lie in (0, 1), got {q!r}")
    if not (l > 0.0) or not math.isfinite(l):
        raise DomainError(f"corner distance must be positive, got {l!r}")
    return Geometry(
        q=q,
        alpha=(1.0 - q) / 2.0,
        slope_a=math.tan(0.5 * math.pi * q),
        corner_distance_l=l,
    )


def geometry_from_slope(a: float, l: float = CANONICAL_L) -> Geometry:
    """Build a :class:`Geometry` from the arm slope ``a``.

    ``a = 0`` (the straight guide) is accepted here although ``q = 0`` is
    not a valid input to :func:`geometry_from_q`; the slope is stored as
    given so closed-form expressions in ``a`` see the exact value.
    """
    if not (a >= 0.0) or not math.isfinite(a):
        raise DomainError(f"slope must be finite and non-negative, got {a!r}")
    if not (l > 0.0) or not math.isfinite(l):
        raise DomainError(f"corner distance must be positive, got {l!r}")
    q = 2.0 * math.atan(a) / math.pi
    return Geometry(q=q, alpha=(1.0 - q) / 2.0, slope_a=a, corner_distance_l=l)


def threshold_energy(g: Geometry) -> float:
    """Oblique-mode continuum edge ``(pi/l)**2``.

    This is the reference energy of the oblique expansion; scaled energies
    are ``E*(l/pi)**2`` so this threshold is 1 in scaled units.
    """
    return (math.pi / g.corner_distance_l) ** 2


def arm_threshold(g: Geometry) -> float:
    """True continuum edge ``(pi/w)**2`` of the arms, ``w = l*cos(pi*q/2)``.

    Equals ``threshold_energy(g) * (1 + a**2)``.
    """
    return threshold_energy(g) * (1.0 + g.slope_a**2)
