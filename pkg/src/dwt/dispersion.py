"""Dispersion laws omega(k) and the Mode type.

All four supported laws are power laws ``omega = c * |k|**beta`` in disguise,
which is what makes the inverse ``k(omega)`` and the cascade integrals
available in closed form.  ``InverseRoot2D`` fixes the proportionality
constant to 1; any constant cancels out of homogeneous resonance conditions.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

from .errors import DomainError, UnsupportedLawError
from .radical import RadicalForm, canonicalize

DEFAULT_DOMAIN = 50

Wavevector = Union[int, Sequence[int]]


class LawKind(str, enum.Enum):
    GRAVITY_SURFACE_2D = "grav2d"
    DEEP_WATER_1D = "deepwater"
    INVERSE_ROOT_2D = "invroot2d"
    POWER_LAW = "power"


@dataclass(frozen=True)
class DispersionLaw:
    kind: LawKind
    c: float = 1.0
    beta: Fraction = Fraction(1, 2)
    dim: int = 1

    def __post_init__(self):
        if not self.c > 0:
            raise DomainError(f"dispersion constant must be positive, got {self.c}")
        if self.dim not in (1, 2):
            raise DomainError(f"wavevector dimension must be 1 or 2, got {self.dim}")
        object.__setattr__(self, "beta", Fraction(self.beta))

    @classmethod
    def gravity_surface_2d(cls) -> "DispersionLaw":
        """omega**4 = m**2 + n**2."""
        return cls(LawKind.GRAVITY_SURFACE_2D, 1.0, Fraction(1, 2), 2)

    @classmethod
    def deep_water_1d(cls) -> "DispersionLaw":
        """omega**2 = k."""
        return cls(LawKind.DEEP_WATER_1D, 1.0, Fraction(1, 2), 1)

    @classmethod
    def inverse_root_2d(cls) -> "DispersionLaw":
        """omega = 1/sqrt(m**2 + n**2)."""
        return cls(LawKind.INVERSE_ROOT_2D, 1.0, Fraction(-1), 2)

    @classmethod
    def power_law(cls, c: float = 1.0, beta=Fraction(1, 2), dim: int = 1) -> "DispersionLaw":
        return cls(LawKind.POWER_LAW, float(c), Fraction(beta), dim)

    @property
    def name(self) -> str:
        if self.kind is LawKind.POWER_LAW:
            return f"power:c={self.c!r},beta={self.beta},dim={self.dim}"
        return self.kind.value

    @property
    def radical_exponent(self) -> Fraction:
        """Exponent applied to the integer radicand (m^2+n^2 in 2D, |k| in 1D)."""
        return self.beta / 2 if self.dim == 2 else self.beta

    @property
    def is_radical(self) -> bool:
        return abs(self.radical_exponent) in (Fraction(1, 2), Fraction(1, 4))

    @property
    def root_order(self) -> int:
        if not self.is_radical:
            raise UnsupportedLawError(f"{self.name} has no radical representation")
        return abs(self.radical_exponent).denominator

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "c": self.c, "beta": str(self.beta), "dim": self.dim}


def parse_law(text: str) -> DispersionLaw:
    """Parse ``grav2d``, ``deepwater``, ``invroot2d`` or ``power:c=1,beta=1/2,dim=2``."""
    name, _, rest = text.strip().partition(":")
    name = name.strip().lower()
    simple = {
        "grav2d": DispersionLaw.gravity_surface_2d,
        "deepwater": DispersionLaw.deep_water_1d,
        "invroot2d": DispersionLaw.inverse_root_2d,
    }
    if name in simple:
        if rest.strip():
            raise ValueError(f"law {name!r} takes no parameters")
        return simple[name]()
    if name != "power":
        raise ValueError(f"unknown dispersion law {text!r}")
    kw = {"c": "1", "beta": "1/2", "dim": "1"}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq or key.strip() not in kw:
            raise ValueError(f"bad power-law parameter {item!r}")
        kw[key.strip()] = value.strip()
    return DispersionLaw.power_law(float(kw["c"]), Fraction(kw["beta"]), int(kw["dim"]))


def _components(law: DispersionLaw, wavevector: Wavevector) -> tuple:
    if isinstance(wavevector, (int, float)):
        comps = (wavevector,)
    else:
        comps = tuple(wavevector)
    if len(comps) != law.dim:
        raise DomainError(f"{law.name} expects a {law.dim}-component wavevector, got {wavevector!r}")
    if all(x == 0 for x in comps):
        raise DomainError("zero wavevector has no frequency")
    return comps


def radicand(law: DispersionLaw, wavevector: Wavevector) -> int:
    """Integer under the radical: m^2+n^2 in 2D, |k| in 1D."""
    comps = _components(law, wavevector)
    if law.dim == 2:
        return int(comps[0]) ** 2 + int(comps[1]) ** 2
    return abs(int(comps[0]))


def frequency(law: DispersionLaw, wavevector: Wavevector) -> float:
    comps = _components(law, wavevector)
    if law.dim == 2:
        sq = comps[0] * comps[0] + comps[1] * comps[1]
        if law.kind is LawKind.GRAVITY_SURFACE_2D:
            return float(sq) ** 0.25
        if law.kind is LawKind.INVERSE_ROOT_2D:
            return 1.0 / math.sqrt(sq)
        kmod = math.sqrt(sq)
    else:
        kmod = abs(float(comps[0]))
        if law.kind is LawKind.DEEP_WATER_1D:
            return math.sqrt(kmod)
    return law.c * kmod ** float(law.beta)


def wavenumber(law: DispersionLaw, omega: float) -> float:
    """Inverse of :func:`frequency`; the wavevector modulus for 2D laws."""
    if not omega > 0:
        raise DomainError(f"frequency must be positive, got {omega}")
    if law.beta == 0:
        raise UnsupportedLawError(f"{law.name} is not invertible (beta = 0)")
    if law.kind is LawKind.GRAVITY_SURFACE_2D or law.kind is LawKind.DEEP_WATER_1D:
        return omega * omega
    if law.kind is LawKind.INVERSE_ROOT_2D:
        return 1.0 / omega
    return (omega / law.c) ** (1.0 / float(law.beta))


@dataclass(frozen=True, order=True)
class Mode:
    """A lattice wavevector with its frequency (ordered by wavevector)."""

    wavevector: tuple
    freq: float = field(compare=False)
    radical: RadicalForm | None = field(default=None, compare=False)

    def __str__(self):
        return "(" + ",".join(str(x) for x in self.wavevector) + ")"


def make_mode(law: DispersionLaw, wavevector: Wavevector) -> Mode:
    comps = tuple(int(x) for x in _components(law, wavevector))
    rad = canonicalize(radicand(law, comps), law.root_order) if law.is_radical else None
    return Mode(comps, frequency(law, comps), rad)


def spectral_domain(law: DispersionLaw, D: int = DEFAULT_DOMAIN, full_lattice: bool = False) -> list[Mode]:
    """All modes with components in 1..D (or -D..D without the origin), lexicographically sorted."""
    if D < 1:
        raise DomainError(f"domain bound must be >= 1, got {D}")
    axis = range(-D, D + 1) if full_lattice else range(1, D + 1)
    if law.dim == 1:
        vecs = [(k,) for k in axis if k != 0]
    else:
        vecs = [(m, n) for m in axis for n in axis if (m, n) != (0, 0)]
    return [make_mode(law, v) for v in vecs]


def exact_weight(law: DispersionLaw, rad: RadicalForm) -> Fraction:
    """Rational coefficient w with omega = c * w * q**(+-1/r) for the mode's class q.

    For direct roots w = gamma; for inverse roots w = 1/gamma.
    """
    if law.radical_exponent > 0:
        return Fraction(rad.gamma)
    return Fraction(1, rad.gamma)
