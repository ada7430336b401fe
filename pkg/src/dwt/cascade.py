"""Discrete sideband cascade chains.

A chain starts from a carrier (omega_0, A_0) and repeatedly creates a
sideband: the amplitude drops by sqrt(p) per step while the frequency moves
along the upper (+) or lower (-) branch.  The default ``integral`` scheme
moves the frequency so that the amplitude follows the continuous law

    dA/domega = s (sqrt(p) - 1) / (omega k(omega))

exactly, i.e. omega_{n+1} solves  int_{omega_n}^{omega_{n+1}} dnu / (nu k) = s A_n.
For a power law this is a closed form.  The ``discrete`` scheme takes the
literal increment omega_{n+1} = omega_n + s * increment(omega_n, A_n, k_n).

Chain quantities are mpmath numbers: frequencies and energies leave the
double-precision exponent range on long chains, and the critical (Phillips)
chain is an unstable fixed point, so the working precision grows with the
number of steps.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import mpmath
import numpy as np
from scipy import integrate

from .dispersion import DispersionLaw, LawKind
from .errors import (
    DivergenceError,
    DomainError,
    InsufficientDataError,
    QuadratureError,
    UnsupportedLawError,
)

DEFAULT_MAX_STEPS = 1000
DEFAULT_EPS_MAX = 0.3
DEFAULT_ZTOL = 1e-9
CRITICAL = "critical"
MIN_FIT_POINTS = 5


class Direction(str, enum.Enum):
    UPPER = "upper"
    LOWER = "lower"

    @property
    def sign(self) -> int:
        return 1 if self is Direction.UPPER else -1


class Scheme(str, enum.Enum):
    INTEGRAL = "integral"
    DISCRETE = "discrete"


class Verdict(str, enum.Enum):
    TERMINATED = "TerminatedDeltaOmega0"
    NONLINEARITY = "TerminatedNonlinearity"
    INFINITE = "Infinite"
    INVERSE_TURNED = "InverseTurned"


def bf_increment(omega, A, k):
    """Frequency increment omega * A * k of one sideband step."""
    return omega * A * k


@dataclass(frozen=True)
class CascadeParams:
    p: float | tuple  # constant, or one value per step
    A0: float | str  # or "critical": the fixed point A k = beta (1 - sqrt p), kept exact
    omega0: float = 1.0
    law: DispersionLaw = field(default_factory=DispersionLaw.deep_water_1d)
    max_steps: int = DEFAULT_MAX_STEPS
    eps_max: float = DEFAULT_EPS_MAX
    ztol: float = DEFAULT_ZTOL

    def __post_init__(self):
        if isinstance(self.p, (int, float, np.floating)):
            object.__setattr__(self, "p", float(self.p))
            ps = [self.p]
        else:
            object.__setattr__(self, "p", tuple(float(x) for x in self.p))
            ps = list(self.p)
            if not ps:
                raise DomainError("empty p sequence")
        if not all(0 < x < 1 for x in ps):
            raise DomainError("sideband ratio p must lie in (0, 1)")
        if isinstance(self.A0, str):
            if self.A0 != CRITICAL:
                raise DomainError(f"A0 must be a number or {CRITICAL!r}, got {self.A0!r}")
            if self.variable_p or not self.law.beta > 0:
                raise DomainError("a critical amplitude needs constant p and beta > 0")
        elif not (self.A0 > 0 and math.isfinite(self.A0)):
            raise DomainError(f"A0 must be positive and finite, got {self.A0}")
        if not (self.omega0 > 0 and math.isfinite(self.omega0)):
            raise DomainError(f"omega0 must be positive and finite, got {self.omega0}")
        if int(self.max_steps) < 1:
            raise DomainError("max_steps must be at least 1")
        if not self.eps_max > 0:
            raise DomainError("eps_max must be positive (use inf to disable)")
        if not self.ztol >= 0:
            raise DomainError("ztol must be non-negative")
        if self.law.beta == 0:
            raise UnsupportedLawError(f"{self.law.name} is not invertible (beta = 0)")

    @property
    def variable_p(self) -> bool:
        return isinstance(self.p, tuple)

    @property
    def steps(self) -> int:
        return min(self.max_steps, len(self.p)) if self.variable_p else self.max_steps

    def p_at(self, n: int) -> float:
        return self.p[n] if self.variable_p else self.p

    def p_min(self) -> float:
        return min(self.p) if self.variable_p else self.p

    @property
    def is_critical(self) -> bool:
        return self.A0 == CRITICAL

    def amplitude0(self) -> mpmath.mpf:
        """A0 at the current mpmath precision."""
        if not self.is_critical:
            return mpmath.mpf(self.A0)
        return _critical_amplitude(self.law, self.p, mpmath.mpf(self.omega0))

    def to_dict(self) -> dict:
        return {
            "p": list(self.p) if self.variable_p else self.p,
            "A0": self.A0,
            "omega0": self.omega0,
            "law": self.law.to_dict(),
            "max_steps": self.max_steps,
            "eps_max": self.eps_max if math.isfinite(self.eps_max) else "inf",
            "ztol": self.ztol,
        }


@dataclass(frozen=True)
class ChainStep:
    n: int
    omega: mpmath.mpf
    k: mpmath.mpf
    A: mpmath.mpf
    E: mpmath.mpf
    d_omega: mpmath.mpf  # signed omega_{n+1} - omega_n (inf if the next frequency does not exist)
    eps: mpmath.mpf  # A_n k_n


@dataclass(frozen=True)
class SpectrumFit:
    """log E = log_prefactor - alpha log omega, fitted by least squares."""

    alpha: float
    log_prefactor: float
    rms: float
    points: int

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "log_prefactor": self.log_prefactor, "rms": self.rms, "points": self.points}


@dataclass
class CascadeChain:
    params: CascadeParams
    direction: Direction
    scheme: Scheme
    steps: list[ChainStep]
    verdict: Verdict
    reason: str
    omega_crit: mpmath.mpf | None = None
    fit: SpectrumFit | None = None

    def __len__(self):
        return len(self.steps)

    @property
    def fitted_exponent(self) -> float | None:
        return None if self.fit is None else self.fit.alpha

    @property
    def omegas(self) -> list:
        return [s.omega for s in self.steps]

    @property
    def energies(self) -> list:
        return [s.E for s in self.steps]

    def total_energy(self) -> mpmath.mpf:
        return mpmath.fsum(self.energies)

    def to_dict(self) -> dict:
        last = self.steps[-1]
        return {
            "verdict": self.verdict.value,
            "reason": self.reason,
            "direction": self.direction.value,
            "scheme": self.scheme.value,
            "steps": len(self.steps),
            "omega_final": number(last.omega),
            "omega_crit": None if self.omega_crit is None else number(self.omega_crit),
            "fit": None if self.fit is None else self.fit.to_dict(),
            "total_energy": number(self.total_energy()),
            "params": self.params.to_dict(),
        }


def number(x) -> float | str:
    """Plain float when it survives the round trip, otherwise a decimal string."""
    if x == 0:
        return 0.0
    f = float(x)
    if math.isfinite(f) and 1e-300 < abs(f) < 1e300:
        return f
    return mpmath.nstr(x, 17)


def _mp_exponent(q: Fraction) -> mpmath.mpf:
    return mpmath.mpf(q.numerator) / q.denominator


def _wavenumber_mp(law: DispersionLaw, omega):
    if law.kind in (LawKind.GRAVITY_SURFACE_2D, LawKind.DEEP_WATER_1D):
        return omega * omega
    if law.kind is LawKind.INVERSE_ROOT_2D:
        return 1 / omega
    return (omega / mpmath.mpf(law.c)) ** _mp_exponent(1 / law.beta)


def _critical_amplitude(law: DispersionLaw, p: float, omega0):
    # omega**-g shrinks by sqrt(p) per step exactly when A k = beta (1 - sqrt p)
    beta = _mp_exponent(law.beta)
    return beta * (1 - mpmath.sqrt(mpmath.mpf(p))) / _wavenumber_mp(law, omega0)


def _integral_step(law: DispersionLaw, omega, A, sign):
    """omega' with int_omega^omega' dnu/(nu k) = sign*A, or None if it does not exist.

    For k = (nu/c)**g with g = 1/beta the integral is c**g beta (a**-g - b**-g).
    """
    if law.kind in (LawKind.GRAVITY_SURFACE_2D, LawKind.DEEP_WATER_1D):
        u = omega**-2 - 2 * sign * A
        return 1 / mpmath.sqrt(u) if u > 0 else None
    beta = _mp_exponent(law.beta)
    g = 1 / beta
    u = omega ** (-g) - sign * A / (beta * mpmath.mpf(law.c) ** g)
    if not u > 0:
        return None
    b = u ** (-beta)
    return b if mpmath.isfinite(b) and b > 0 else None


def _working_precision(params: CascadeParams) -> int:
    # errors in omega**-g are amplified by at most 1/sqrt(p) per step
    growth = math.log2(1 / math.sqrt(params.p_min()))
    return 64 + math.ceil(params.steps * growth)


def run_chain(
    params: CascadeParams,
    direction: Direction | str = Direction.UPPER,
    scheme: Scheme | str = Scheme.INTEGRAL,
    increment: Callable = bf_increment,
) -> CascadeChain:
    """Iterate sideband steps until a stopping rule fires.

    Stopping rules, checked in this order at every step n:
    eps_n = A_n k_n above ``eps_max`` (nonlinearity), no next frequency
    (divergence, reported as Infinite), |d_omega| <= ztol * omega_n,
    d_omega against the branch direction.  Step n is always emitted.
    """
    direction = Direction(direction)
    scheme = Scheme(scheme)
    if increment is not bf_increment and scheme is not Scheme.DISCRETE:
        raise DomainError("a custom increment requires the discrete scheme")
    law, sign = params.law, direction.sign
    steps: list[ChainStep] = []
    verdict, reason, omega_crit = Verdict.INFINITE, f"step limit {params.steps} reached", None
    with mpmath.workprec(_working_precision(params)):
        omega, A = mpmath.mpf(params.omega0), params.amplitude0()
        eps_max = mpmath.mpf(params.eps_max)
        ztol = mpmath.mpf(params.ztol)
        for n in range(params.steps):
            k = _wavenumber_mp(law, omega)
            eps = A * k
            if scheme is Scheme.INTEGRAL:
                nxt = _integral_step(law, omega, A, sign)
            else:
                nxt = omega + sign * increment(omega, A, k)
                nxt = nxt if nxt > 0 else None
            d = nxt - omega if nxt is not None else sign * mpmath.inf
            steps.append(ChainStep(n, omega, k, A, A * A, d, eps))
            if eps > eps_max:
                verdict, reason, omega_crit = Verdict.NONLINEARITY, f"A k = {mpmath.nstr(eps, 6)} exceeds eps_max", omega
                break
            if nxt is None:
                verdict, reason = Verdict.INFINITE, "frequency diverges within one step"
                break
            if abs(d) <= ztol * omega:
                verdict, reason = Verdict.TERMINATED, "frequency shift below tolerance"
                break
            if d * sign < 0:
                verdict, reason = Verdict.INVERSE_TURNED, "frequency shift changed sign"
                break
            omega, A = nxt, mpmath.sqrt(mpmath.mpf(params.p_at(n))) * A
    chain = CascadeChain(params, direction, scheme, steps, verdict, reason, omega_crit)
    try:
        chain.fit = fit_spectrum(chain)
    except InsufficientDataError:
        pass
    return chain


def sideband_quartet(omega_c: float, delta: float) -> tuple[float, float]:
    """Upper and lower sidebands of a carrier; they close the quartet w+ + w- = 2 w_c.

    The closure is checked in floating point up to one rounding of the sum.
    """
    if not 0 < delta < omega_c:
        raise DomainError("need 0 < delta < omega_c")
    plus, minus = omega_c + delta, omega_c - delta
    if abs((plus + minus) - 2 * omega_c) > 2 * math.ulp(2 * omega_c):
        raise DomainError("sidebands do not close the quartet in floating point")
    return plus, minus


def fit_power_law(omegas, energies) -> SpectrumFit:
    """Least-squares exponent alpha in E ~ omega**-alpha, with the RMS log residual."""
    if len(omegas) != len(energies):
        raise DomainError("omega and energy sequences differ in length")
    pairs = sorted({(mpmath.mpf(w), mpmath.mpf(e)) for w, e in zip(omegas, energies)})
    if len({w for w, _ in pairs}) < MIN_FIT_POINTS:
        raise InsufficientDataError(f"need at least {MIN_FIT_POINTS} distinct frequencies")
    if any(not (w > 0 and e > 0) for w, e in pairs):
        raise DomainError("frequencies and energies must be positive")
    x = np.array([float(mpmath.log(w)) for w, _ in pairs])
    y = np.array([float(mpmath.log(e)) for _, e in pairs])
    slope, icept = np.polyfit(x, y, 1)
    rms = float(np.sqrt(np.mean((y - (slope * x + icept)) ** 2)))
    return SpectrumFit(float(-slope), float(icept), rms, len(pairs))


def fit_spectrum(chain: CascadeChain, exclude_terminal: bool = False) -> SpectrumFit:
    """Fit E_n ~ omega_n**-alpha over the chain; optionally drop the stopping step."""
    steps = chain.steps[:-1] if exclude_terminal and chain.verdict is not Verdict.INFINITE else chain.steps
    return fit_power_law([s.omega for s in steps], [s.E for s in steps])


def _constant_p(p) -> float:
    if not isinstance(p, (int, float, np.floating)):
        raise DomainError("closed forms need a constant p")
    if not 0 < p <= 1:
        raise DomainError("sideband ratio p must lie in (0, 1]")
    return float(p)


def _is_deep_water(law: DispersionLaw) -> bool:
    return law.dim == 1 and law.beta == Fraction(1, 2) and law.c == 1.0


def amplitude_closed_form(
    law: DispersionLaw, p: float, A0: float, omega0: float, omega: float, direction=Direction.UPPER
) -> float:
    """A(omega) = A0 + s (1 - sqrt p)/2 (omega**-2 - omega0**-2) for deep water."""
    if not _is_deep_water(law):
        raise UnsupportedLawError(f"closed-form amplitude is only available for deep water, not {law.name}")
    p = _constant_p(p)
    if not (omega0 > 0 and omega > 0):
        raise DomainError("frequencies must be positive")
    s = Direction(direction).sign
    return A0 + s * (1 - math.sqrt(p)) / 2 * (omega**-2 - omega0**-2)


def amplitude_quadrature(
    law: DispersionLaw, p: float, A0: float, omega0: float, omega: float, direction=Direction.UPPER
) -> float:
    """A(omega) = A0 + s (sqrt p - 1) int_{omega0}^{omega} dnu / (nu k(nu)), by adaptive quadrature."""
    p = _constant_p(p)
    if not (omega0 > 0 and omega > 0):
        raise DomainError("frequencies must be positive")
    if law.beta == 0:
        raise UnsupportedLawError(f"{law.name} is not invertible (beta = 0)")
    g = 1.0 / float(law.beta)

    def integrand(u):  # nu = e**u, dnu/nu = du
        return (math.exp(u) / law.c) ** -g

    a, b = math.log(omega0), math.log(omega)
    if a == b:
        return float(A0)
    try:
        val, err = integrate.quad(integrand, a, b, epsabs=0.0, epsrel=1e-12, limit=200)
    except (OverflowError, ZeroDivisionError) as exc:
        raise QuadratureError(str(exc)) from exc
    if not (math.isfinite(val) and math.isfinite(err)) or err > 1e-10 * abs(val):
        raise QuadratureError(f"quadrature did not converge (value {val}, error {err})")
    s = Direction(direction).sign
    return float(A0 + s * (math.sqrt(p) - 1) * val)


def frequency_shift(law: DispersionLaw, p: float, A0: float, omega: float) -> float:
    """Deep-water shift omega (1 - sqrt p)/2 + omega k (A0 - (1 - sqrt p)/2), k = omega**2 (omega0 = 1)."""
    if not _is_deep_water(law):
        raise UnsupportedLawError(f"the shift formula is stated for deep water, not {law.name}")
    p = _constant_p(p)
    c = (1 - math.sqrt(p)) / 2
    return omega * c + omega**3 * (A0 - c)


def termination_frequency(p: float, A0: float) -> float | None:
    """Limit frequency of an upper deep-water chain from omega0 = 1; None when it does not terminate."""
    p = _constant_p(p)
    sp = math.sqrt(p)
    if not A0 > 0:
        raise DomainError("A0 must be positive")
    if A0 >= (1 - sp) / 2:
        return None
    return math.sqrt((1 - sp) / (1 - sp - 2 * A0))


def chain_energy(p: float, A0: float) -> float:
    """Total energy sum_n A0**2 p**n of an infinite chain."""
    if not p > 0:
        raise DomainError("sideband ratio p must be positive")
    if p >= 1:
        raise DivergenceError(f"chain energy diverges for p = {p}")
    return A0 * A0 / (1 - p)


@dataclass
class TaylorReport:
    n_terms: int
    residuals: np.ndarray
    max_residual: float
    mean_residual: float
    monotone_from: int  # residuals[monotone_from:] never increase


def taylor_residual(
    law: DispersionLaw,
    p: float,
    A0: float,
    omega0: float = 1.0,
    n_terms: int = 2,
    max_steps: int = 40,
    direction=Direction.UPPER,
) -> TaylorReport:
    """Compare the truncated Taylor step with the continuous law along a chain.

    At each chain point the continuous amplitude is evaluated (by quadrature,
    through the point itself) at omega_n + s omega_n A_n k_n and compared with
    A_n + A'(omega_n) delta = sqrt(p) A_n (two terms) or with A_n (one term).
    """
    if n_terms not in (1, 2):
        raise DomainError("n_terms must be 1 or 2")
    p = _constant_p(p)
    direction = Direction(direction)
    points = []
    # same recursion as run_chain, but p = 1 (a constant amplitude) is allowed here
    with mpmath.workprec(64 + math.ceil(max_steps * math.log2(1 / math.sqrt(p)))):
        omega, sp = mpmath.mpf(omega0), mpmath.sqrt(mpmath.mpf(p))
        A = _critical_amplitude(law, p, omega) if A0 == CRITICAL else mpmath.mpf(A0)
        for _ in range(max_steps):
            points.append((float(omega), float(A), float(_wavenumber_mp(law, omega))))
            nxt = _integral_step(law, omega, A, direction.sign)
            if nxt is None:
                break
            omega, A = nxt, sp * A
    res = []
    for w, A, k in points:
        if not (math.isfinite(w) and math.isfinite(k) and A > 0):
            break
        target = w + direction.sign * w * A * k
        if not target > 0:
            break
        exact = amplitude_quadrature(law, p, A, w, target, direction)
        approx = math.sqrt(p) * A if n_terms == 2 else A
        res.append(abs(exact - approx))
    r = np.array(res)
    if not len(r):
        raise InsufficientDataError("no chain step admits a Taylor comparison")
    increases = np.flatnonzero(np.diff(r) > 0)
    start = int(increases[-1] + 1) if len(increases) else 0
    return TaylorReport(n_terms, r, float(r.max()), float(r.mean()), start)
