"""Pydantic models and the exception hierarchy for mflab data structures."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

import mpmath
from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    PlainSerializer,
    PrivateAttr,
    field_validator,
    model_validator,
)

from mflab.utils import integer_convolution


# =============================================================================
# Exception Hierarchy
# =============================================================================


class MflabError(Exception):
    """Base exception for unrecoverable library errors."""

    pass


class ValidationError(MflabError):
    """Raised on malformed configuration, region specs or cache files."""

    pass


class InvalidWeight(MflabError):
    """Raised when a weight is odd or below the admissible range."""

    pass


class InvalidTruncation(MflabError):
    """Raised when a truncation order is out of range."""

    pass


class InsufficientTruncation(MflabError):
    """Raised when a series is too short for the requested computation."""

    def __init__(self, message: str, required: Optional[int] = None) -> None:
        super().__init__(message)
        self.required = required


class NoCuspForms(MflabError):
    """Raised when the requested weight carries no cusp forms."""

    pass


class DegenerateSpectrum(MflabError):
    """Raised when Hecke eigenvalues collide within the separation tolerance."""

    pass


class CutoffTooSmall(MflabError):
    """Raised when an Euler product cutoff is below the supported range."""

    pass


class RangeError(MflabError):
    """Raised when prime ranges leave the regime 2 <= P < Q <= 2P."""

    pass


class ReductionError(MflabError):
    """Raised when fundamental-domain reduction does not terminate."""

    pass


class QuadratureError(MflabError):
    """Raised when adaptive quadrature fails to reach its tolerance."""

    pass


class SingularQuadError(QuadratureError):
    """Raised when quadrature near a located zero fails to converge."""

    pass


class ContourThroughZero(MflabError):
    """Raised when a contour passes through the indeterminate zone of a zero."""

    pass


class SamplingError(MflabError):
    """Raised when boundary phase tracking exhausts its sample budget."""

    pass


class UnresolvedCluster(MflabError):
    """Raised when located zeros cannot be separated or weighted."""

    pass


class RegionError(MflabError):
    """Raised when a region is not contained where a statistic requires."""

    pass


class BudgetError(MflabError):
    """Raised when a lattice statistic exceeds its time budget."""

    def __init__(self, message: str, partial: Any = None) -> None:
        super().__init__(message)
        self.partial = partial


class WindowError(MflabError):
    """Raised by strict one-term approximations outside the window."""

    pass


class NormalizationError(MflabError):
    """Raised when a mass computation receives an unnormalized form."""

    pass


class CacheError(MflabError):
    """Raised on unreadable caches or cache version mismatches."""

    pass


# =============================================================================
# Numeric field types
# =============================================================================


def decode_mpf(value: Any) -> mpmath.mpf:
    """Coerce floats, ints, decimal strings or exact ``man*2^exp`` strings."""
    if isinstance(value, mpmath.mpf):
        return value
    if isinstance(value, str) and "*2^" in value:
        man, exp = value.split("*2^")
        return mpmath.mpf((int(man), int(exp)))
    return mpmath.mpf(value)


def encode_mpf(value: mpmath.mpf) -> str:
    """Bit-exact text form of an mpf (``man*2^exp``; specials by name)."""
    if mpmath.isinf(value) or mpmath.isnan(value):
        return str(value)
    man, exp = value.man_exp
    return f"{man}*2^{exp}"


def _decode_mpc(value: Any) -> mpmath.mpc:
    if isinstance(value, mpmath.mpc):
        return value
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return mpmath.mpc(decode_mpf(value[0]), decode_mpf(value[1]))
    return mpmath.mpc(value)


def _nstr(value: Any) -> str:
    return mpmath.nstr(value, 30)


MPReal = Annotated[
    Any, BeforeValidator(decode_mpf), PlainSerializer(_nstr, return_type=str)
]
MPComplex = Annotated[
    Any,
    BeforeValidator(_decode_mpc),
    PlainSerializer(lambda v: [_nstr(v.real), _nstr(v.imag)], return_type=list),
]
ExactRational = Annotated[
    Any, BeforeValidator(Fraction), PlainSerializer(str, return_type=str)
]

Normalization = Literal["a1", "petersson"]

ELLIPTIC_WEIGHTS = {Fraction(1), Fraction(1, 2), Fraction(1, 3)}


# =============================================================================
# Upper half-plane geometry
# =============================================================================


class HPoint(BaseModel):
    """A point z = x + iy of the upper half-plane."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    x: MPReal = Field(description="Real part")
    y: MPReal = Field(description="Imaginary part, strictly positive")

    @field_validator("y")
    @classmethod
    def validate_upper_half_plane(cls, v: mpmath.mpf) -> mpmath.mpf:
        """Reject points on or below the real axis."""
        if not v > 0:
            raise ValueError(f"Point must lie in the upper half-plane, got y={v}")
        return v

    @classmethod
    def from_complex(cls, z: Any) -> "HPoint":
        z = mpmath.mpc(z)
        return cls(x=z.real, y=z.imag)

    @property
    def z(self) -> mpmath.mpc:
        return mpmath.mpc(self.x, self.y)


class Mobius(BaseModel):
    """An element of SL2(Z) acting by z -> (az + b)/(cz + d)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    a: int
    b: int
    c: int
    d: int

    @model_validator(mode="after")
    def validate_determinant(self) -> "Mobius":
        """Determinant must be exactly one."""
        if self.a * self.d - self.b * self.c != 1:
            raise ValueError(
                f"Determinant must be 1, got {self.a * self.d - self.b * self.c}"
            )
        return self

    @classmethod
    def identity(cls) -> "Mobius":
        return cls(a=1, b=0, c=0, d=1)

    def __matmul__(self, other: "Mobius") -> "Mobius":
        return Mobius(
            a=self.a * other.a + self.b * other.c,
            b=self.a * other.b + self.b * other.d,
            c=self.c * other.a + self.d * other.c,
            d=self.c * other.b + self.d * other.d,
        )

    def automorphy_factor(self, point: HPoint) -> mpmath.mpc:
        """Return cz + d."""
        return self.c * point.z + self.d

    def apply(self, point: HPoint) -> HPoint:
        z = point.z
        return HPoint.from_complex((self.a * z + self.b) / (self.c * z + self.d))


class LogValue(BaseModel):
    """log|F_k(z)| and arg F_k(z) with a rigorous truncation bound."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    log_mag: MPReal = Field(description="log(y^{k/2}|f(z)|), -inf for an exact zero")
    phase: MPReal = Field(description="arg of y^{k/2} f(z) in [0, 2pi)")
    tail_bound: MPReal = Field(description="Bound on |truncation error| of y^{k/2}f")
    terms: int = Field(description="Number of Fourier terms summed")
    normalization: Normalization = Field(default="a1")

    @field_validator("tail_bound")
    @classmethod
    def validate_tail(cls, v: mpmath.mpf) -> mpmath.mpf:
        if v < 0:
            raise ValueError("tail_bound must be non-negative")
        return v

    @property
    def indeterminate(self) -> bool:
        """True when the truncation bound swamps the computed magnitude."""
        if self.log_mag == mpmath.ninf:
            return True
        return self.tail_bound >= mpmath.exp(self.log_mag)


# =============================================================================
# Forms
# =============================================================================


class QExpansion(BaseModel):
    """
    Exact truncated q-expansion a(0) + a(1)q + ... + a(N)q^N.

    Coefficients are stored as integer numerators over one common positive
    denominator; ring operations truncate to the shorter operand.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    weight: int = Field(description="Even weight (0 for constants)")
    terms: int = Field(ge=0, description="Truncation order N")
    numerators: Tuple[int, ...] = Field(description="Numerators of a(0..N)")
    denominator: int = Field(default=1, gt=0, description="Common denominator")

    @field_validator("weight")
    @classmethod
    def validate_weight(cls, v: int) -> int:
        if v < 0 or v % 2:
            raise ValueError(f"Weight must be even and non-negative, got {v}")
        return v

    @model_validator(mode="after")
    def validate_length(self) -> "QExpansion":
        if len(self.numerators) != self.terms + 1:
            raise ValueError(
                f"Expected {self.terms + 1} coefficients, got {len(self.numerators)}"
            )
        return self

    @classmethod
    def build(
        cls, weight: int, numerators: List[int], denominator: int = 1
    ) -> "QExpansion":
        """Construct with the common denominator reduced to lowest terms."""
        if denominator < 0:
            numerators = [-c for c in numerators]
            denominator = -denominator
        common = math.gcd(denominator, *numerators)
        if common > 1:
            numerators = [c // common for c in numerators]
            denominator //= common
        return cls(
            weight=weight,
            terms=len(numerators) - 1,
            numerators=tuple(numerators),
            denominator=denominator,
        )

    def coeff(self, n: int) -> Fraction:
        if n > self.terms:
            raise InsufficientTruncation(
                f"Coefficient {n} requested beyond truncation {self.terms}",
                required=n,
            )
        return Fraction(self.numerators[n], self.denominator)

    @property
    def coeffs(self) -> Tuple[Fraction, ...]:
        return tuple(Fraction(c, self.denominator) for c in self.numerators)

    @property
    def integral(self) -> bool:
        return self.denominator == 1

    def valuation(self) -> int:
        """Index of the first nonzero coefficient (terms + 1 for the zero series)."""
        for n, c in enumerate(self.numerators):
            if c:
                return n
        return self.terms + 1

    def truncate(self, terms: int) -> "QExpansion":
        if terms > self.terms:
            raise InsufficientTruncation(
                f"Cannot extend a series of order {self.terms} to {terms}",
                required=terms,
            )
        return QExpansion.build(self.weight, list(self.numerators[: terms + 1]), self.denominator)

    def _combine(self, other: "QExpansion", sign: int) -> "QExpansion":
        if other.weight != self.weight:
            raise InvalidWeight(
                f"Cannot add forms of weight {self.weight} and {other.weight}"
            )
        n = min(self.terms, other.terms)
        numerators = [
            a * other.denominator + sign * b * self.denominator
            for a, b in zip(self.numerators[: n + 1], other.numerators[: n + 1])
        ]
        return QExpansion.build(
            self.weight, numerators, self.denominator * other.denominator
        )

    def __add__(self, other: "QExpansion") -> "QExpansion":
        return self._combine(other, 1)

    def __sub__(self, other: "QExpansion") -> "QExpansion":
        return self._combine(other, -1)

    def __neg__(self) -> "QExpansion":
        return QExpansion.build(
            self.weight, [-c for c in self.numerators], self.denominator
        )

    def scale(self, factor: Union[int, Fraction]) -> "QExpansion":
        factor = Fraction(factor)
        return QExpansion.build(
            self.weight,
            [c * factor.numerator for c in self.numerators],
            self.denominator * factor.denominator,
        )

    def __mul__(self, other: Union["QExpansion", int, Fraction]) -> "QExpansion":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        n = min(self.terms, other.terms)
        product = integer_convolution(
            self.numerators[: n + 1], other.numerators[: n + 1], n
        )
        return QExpansion.build(
            self.weight + other.weight,
            product,
            self.denominator * other.denominator,
        )

    def __rmul__(self, other: Union[int, Fraction]) -> "QExpansion":
        return self.scale(other)

    def __pow__(self, power: int) -> "QExpansion":
        if power < 0:
            raise ValueError("Only non-negative integer powers are supported")
        result = QExpansion.build(0, [1] + [0] * self.terms)
        base = self
        while power:
            if power & 1:
                result = result * base
            power >>= 1
            if power:
                base = base * base
        return result


class SeriesForm(BaseModel):
    """A holomorphic modular form of level one held by its Fourier coefficients."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    label: str = Field(description="Human-readable identifier, e.g. 'E4' or '24.1'")
    weight: int = Field(description="Even weight k")
    terms: int = Field(description="Truncation N; coefficients a(0..N) are stored")
    a_coeffs: Tuple[MPReal, ...] = Field(description="a(0), ..., a(N)")
    precision_bits: int = Field(default=128, description="Working mantissa size")
    majorant_const: MPReal = Field(
        description="C in |a(n)| <= C n^s for all n (a(1) = 1 scale)"
    )
    majorant_exponent: float = Field(description="s in |a(n)| <= C n^s")
    norm_const: Optional[MPReal] = Field(
        default=None, description="|a_f(1)| under Petersson normalization"
    )
    _float_cache: Dict[str, Any] = PrivateAttr(default_factory=dict)

    @model_validator(mode="after")
    def validate_length(self) -> "SeriesForm":
        if len(self.a_coeffs) != self.terms + 1:
            raise ValueError(
                f"Expected {self.terms + 1} coefficients, got {len(self.a_coeffs)}"
            )
        return self

    def a(self, n: int) -> mpmath.mpf:
        if n > self.terms:
            raise InsufficientTruncation(
                f"a({n}) requested beyond truncation {self.terms}", required=n
            )
        return self.a_coeffs[n]

    def valuation(self) -> int:
        """Order of vanishing at the cusp (index of the first nonzero coefficient)."""
        for n, value in enumerate(self.a_coeffs):
            if value != 0:
                return n
        return self.terms + 1

    @property
    def normalized(self) -> bool:
        return self.norm_const is not None

    def scale(self, normalized: bool) -> mpmath.mpf:
        """Multiplier applied to the stored coefficients for the given normalization."""
        if not normalized:
            return mpmath.mpf(1)
        if self.norm_const is None:
            raise NormalizationError(
                f"Form {self.label} has no Petersson normalization constant"
            )
        return self.norm_const


class L1Sym2(BaseModel):
    """Truncated Euler product value of L(1, sym^2 f)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    value: MPReal
    error_estimate: MPReal
    prime_cutoff: int
    heuristic: bool = Field(
        default=True, description="The tail estimate O(1/P) is unproven"
    )


class HeckeEigenform(SeriesForm):
    """A normalized Hecke eigenform with a(1) = 1 and its eigenvalues lambda_f(n)."""

    lambdas: Tuple[MPReal, ...] = Field(description="lambda_f(0..N), lambda_f(0) = 0")
    t2_eigenvalue: MPReal = Field(description="Eigenvalue of T_2 (= a_f(2))")
    index: int = Field(description="Position in the eigenbasis, ascending T_2")
    l1sym2: Optional[L1Sym2] = Field(default=None)

    def lam(self, n: int) -> mpmath.mpf:
        if n > self.terms:
            raise InsufficientTruncation(
                f"lambda({n}) requested beyond truncation {self.terms}", required=n
            )
        return self.lambdas[n]

    def lambda_prime_power(self, p: int, v: int) -> mpmath.mpf:
        """lambda_f(p^v), through the Hecke recursion when p^v exceeds N."""
        if p**v <= self.terms:
            return self.lambdas[p**v]
        lam_p = self.lam(p)
        previous, current = mpmath.mpf(1), lam_p
        for _ in range(v - 1):
            previous, current = current, lam_p * current - previous
        return current if v >= 1 else mpmath.mpf(1)


class EulerProducts(BaseModel):
    """The four Euler products attached to an eigenform up to a prime cutoff."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    prime_cutoff: int
    prod_n: MPReal = Field(description="prod (1 - n(p)/p)")
    prod_eis: MPReal = Field(description="prod (1 - (lambda(p^2)+1)/p)")
    prod_hol: MPReal = Field(description="prod (1 - (|lambda(p)|-1)^2/p)")
    prod_hol_half: MPReal = Field(description="prod (1 - (|lambda(p)|-1)^2/(2p))")
    factor_ranges: Dict[str, Tuple[float, float]] = Field(
        description="(min, max) local factor per product"
    )
    degenerate: Dict[str, List[int]] = Field(
        description="Primes whose local factor is <= 0, per product"
    )

    def in_unit_interval(self, name: str) -> bool:
        """Whether the product is a genuine value in (0, 1] (no degenerate factor)."""
        value = getattr(self, name)
        return not self.degenerate.get(name) and 0 < value <= 1


class HeckeResiduals(BaseModel):
    """Worst residuals of the Hecke relations over n <= n_max."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n_max: int
    multiplicativity: MPReal = Field(description="max |l(mn) - l(m)l(n)|, gcd = 1")
    recursion: MPReal = Field(description="max |l(p)l(p^v) - l(p^v+1) - l(p^v-1)|")
    deligne_excess: MPReal = Field(description="max |l(p)| - 2 over primes <= N")


class FamilyPrimeSums(BaseModel):
    """Per-form |sum_{P<p<=Q} lambda_f(p^v)/p|^2 and their family sum."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    weight: int
    P: int
    Q: int
    v: int
    per_form: List[MPReal]
    family_sum: MPReal


class PeterssonNorm(BaseModel):
    """Two independent evaluations of <y^{k/2}f, y^{k/2}f> for a(1) = 1."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    norm_quadrature: MPReal
    quadrature_error: MPReal
    strip_part: MPReal
    bulk_part: MPReal
    norm_l1sym2: MPReal
    l1sym2_error: MPReal
    relative_gap: MPReal


# =============================================================================
# Zeros
# =============================================================================


class ZeroRecord(BaseModel):
    """A located zero with its multiplicity and elliptic weight."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    location: HPoint
    multiplicity: int = Field(ge=1)
    elliptic_weight: ExactRational = Field(default=Fraction(1))
    box_radius: float = Field(description="Half-width of the isolating box")
    residual: MPReal = Field(description="|truncated f| at the located point")

    @field_validator("elliptic_weight")
    @classmethod
    def validate_weight(cls, v: Fraction) -> Fraction:
        if v not in ELLIPTIC_WEIGHTS:
            raise ValueError(f"Elliptic weight must be 1, 1/2 or 1/3, got {v}")
        return v

    @property
    def weighted(self) -> Fraction:
        return self.multiplicity * self.elliptic_weight


class ZeroSet(BaseModel):
    """Zeros located in a region plus the declared order at the cusp."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    zeros: List[ZeroRecord]
    cusp_order: int = Field(default=0)
    interior_total: ExactRational = Field(description="sum multiplicity * weight")
    weighted_total: ExactRational = Field(description="interior_total + cusp_order")

    @classmethod
    def build(cls, zeros: List[ZeroRecord], cusp_order: int = 0) -> "ZeroSet":
        ordered = sorted(zeros, key=lambda r: (r.location.y, r.location.x))
        interior = sum((r.weighted for r in ordered), Fraction(0))
        return cls(
            zeros=ordered,
            cusp_order=cusp_order,
            interior_total=interior,
            weighted_total=interior + cusp_order,
        )


class ValenceReport(BaseModel):
    """Outcome of the valence identity for one form."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    label: str
    weight: int
    cusp_order: int
    interior_total: ExactRational
    weighted_total: ExactRational
    expected: ExactRational
    passed: bool
    zeros: List[ZeroRecord]


class BallStatistic(BaseModel):
    """Zero count in a hyperbolic ball against its equidistribution prediction."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    center: HPoint
    radius: float
    count: ExactRational
    expected: float
    area: float
    ratio_error: float


class RudnickCheck(BaseModel):
    """Both sides of the zero-sum identity for one bump."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    lhs: float
    rhs: float
    defect: float
    main_term: float
    log_integral: float
    quadrature_error: float
    zeros_used: int


class EisensteinZeroReport(BaseModel):
    """Zeros of E_k in the fundamental domain and their distance from the arc."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    weight: int
    zeros: List[ZeroRecord]
    max_deviation: float = Field(description="max ||z| - 1| over located zeros")
    arguments: List[float] = Field(description="Sorted arg(z) of the located zeros")


# =============================================================================
# Regions and mass
# =============================================================================


class Rectangle(BaseModel):
    """Axis-parallel rectangle [x1, x2] x [y1, y2] (y2 may be +inf)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["rectangle"] = "rectangle"
    x1: float
    x2: float
    y1: float
    y2: float

    @model_validator(mode="after")
    def validate_corners(self) -> "Rectangle":
        if not (self.x1 < self.x2 and 0 < self.y1 < self.y2):
            raise ValueError(f"Degenerate rectangle {self}")
        return self

    def inside_fundamental_domain(self) -> bool:
        nearest = 0.0 if self.x1 <= 0 <= self.x2 else min(abs(self.x1), abs(self.x2))
        return (
            self.x1 >= -0.5
            and self.x2 <= 0.5
            and nearest * nearest + self.y1 * self.y1 >= 1
        )


class HyperbolicBall(BaseModel):
    """Hyperbolic ball B(center, radius)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["ball"] = "ball"
    center: HPoint
    radius: float = Field(gt=0)

    def euclidean(self) -> Tuple[float, float, float]:
        """Euclidean (center x, center y, radius) of the ball."""
        x0, y0 = float(self.center.x), float(self.center.y)
        return x0, y0 * float(mpmath.cosh(self.radius)), y0 * float(
            mpmath.sinh(self.radius)
        )

    def inside_fundamental_domain(self) -> bool:
        cx, cy, rad = self.euclidean()
        return (
            cx - rad >= -0.5
            and cx + rad < 0.5
            and (cx * cx + cy * cy) ** 0.5 - rad >= 1
        )


class SiegelDomain(BaseModel):
    """F_Y = {z in F : Im z > Y}."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["siegel"] = "siegel"
    Y: float = Field(ge=1)


class FundamentalDomain(BaseModel):
    """The standard fundamental domain of SL2(Z)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["fundamental"] = "fundamental"


Region = Annotated[
    Union[Rectangle, HyperbolicBall, SiegelDomain, FundamentalDomain],
    Field(discriminator="kind"),
]


class RectangleDiscrepancy(BaseModel):
    """|mu_f(R) - (3/pi) vol(R)| for one lattice rectangle."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    rectangle: Rectangle
    mass: float
    uniform: float
    discrepancy: float


class DiscrepancyReport(BaseModel):
    """Lattice supremum of the rectangle mass discrepancy."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    weight: int
    label: str
    grid: int
    y_cap: float
    sup_discrepancy: float = Field(ge=0)
    argmax: Rectangle
    table: List[RectangleDiscrepancy]
    euler_products: Optional[EulerProducts] = None

    @model_validator(mode="after")
    def validate_sup(self) -> "DiscrepancyReport":
        if self.table and max(r.discrepancy for r in self.table) != self.sup_discrepancy:
            raise ValueError("sup_discrepancy must equal the table maximum")
        return self


class MassHypothesisResult(BaseModel):
    """Lower bound check y^k|f(z1)|^2 >= e^{-kh} with implied constant 1."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    h: float
    precondition_ok: bool
    holds: bool
    log_min_local_max: Optional[float] = Field(
        default=None, description="log of min over z0 of max over D_h(z0)"
    )
    log_threshold: float = Field(description="-k h")
    implied_constant: float = 1.0
    grid_points: int = 0
    disk_samples: int = 0
    worst_center: Optional[Tuple[float, float]] = None


class CuspMassReport(BaseModel):
    """Mass high in the cusp against area and decay references."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    Y: float
    mass: float
    area: float
    uniform_mass: float
    decay_reference: float


class SupNormReport(BaseModel):
    """Grid maximum of |F_k| with k^{1/4} and k^{1/2} references."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    weight: int
    label: str
    max_value: float
    location: Tuple[float, float]
    k_quarter: float
    k_half: float
    ratio_quarter: float


class FamilyBallReport(BaseModel):
    """Family mean square of per-form ball discrepancy suprema."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    weight: int
    balls: int
    per_form_sup: List[float]
    family_mean_square: Optional[float]
    reference: float = Field(description="k^{-1/21}")


# =============================================================================
# Cusp statistics
# =============================================================================


class SignChangePair(BaseModel):
    """Indices l1 < l2 with lambda of opposite signs beyond the threshold."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    l1: int
    l2: int
    parity: Literal["all", "odd"]
    threshold: float
    lambda_l1: float
    lambda_l2: float
    in_lemma_window: bool

    @model_validator(mode="after")
    def validate_pair(self) -> "SignChangePair":
        if self.parity == "odd" and (self.l1 % 2 == 0 or self.l2 % 2 == 0):
            raise ValueError("Odd-parity pairs need odd indices")
        if self.lambda_l1 * self.lambda_l2 >= 0:
            raise ValueError("Pair values must have opposite signs")
        return self


class CuspApproximation(BaseModel):
    """One-term approximation lambda_f(l) e(xl) against the scaled value of f."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    l: int
    x: MPReal
    y_l: MPReal
    approx: MPComplex
    exact: MPComplex
    error: MPReal
    in_window: bool


class GeodesicCount(BaseModel):
    """Verified sign-change zeros on Re z = 0 or Re z = -1/2 above height Y."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    line: Literal["re0", "rehalf"]
    Y: float
    y_top: float
    count: int
    ordinates: List[float]
    brackets: List[Tuple[float, float]]
    skipped: List[float]


class CuspRegionCount(BaseModel):
    """Argument-principle zero count in the Siegel domain F_Y."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    Y: float
    y_top: float
    count: int


class IntervalStat(BaseModel):
    """Sampled short-interval sums of lambda or |lambda|^2."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["linear", "square"]
    X: int
    L: float
    samples: int
    mean: float
    mean_square: float
    main_term: float

    @property
    def asserted(self) -> bool:
        return self.samples >= 30


class GIntervalStat(BaseModel):
    """Short versus long averages of the multiplicative sign function g."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    delta: float
    X: int
    h: int
    samples: int
    long_mean_g: float
    long_mean_abs_g: float
    short_means_g: List[float]
    short_means_abs_g: List[float]
    max_gap: float
    violation_fraction: float
    gap_threshold: float


# =============================================================================
# Exponents
# =============================================================================


class MinimaxResult(BaseModel):
    """argmin and value of a nested min-max problem."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    argopt: MPReal
    value: MPReal


class ExponentResult(BaseModel):
    """Optimized exponents of the Euler-product balance."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    beta: MPReal
    beta_minimax: MPReal
    alpha: MPReal
    alpha_minimax: MPReal
    kappa: MPReal
    delta: MPReal
    eta1: MPReal
    eta2: MPReal

    @model_validator(mode="after")
    def validate_relations(self) -> "ExponentResult":
        tol = mpmath.mpf(10) ** (-20)
        checks = {
            "kappa": self.kappa + self.alpha_minimax,
            "delta": self.delta - self.kappa / 7,
            "eta1": self.eta1 - 2 * self.kappa / 7,
            "eta2": self.eta2 - self.eta1 / 2,
        }
        for name, residual in checks.items():
            if abs(residual) > tol:
                raise ValueError(f"Exponent relation for {name} violated by {residual}")
        return self

    def printable(self) -> Dict[str, str]:
        return {
            name: mpmath.nstr(getattr(self, name), 9, strip_zeros=False)
            for name in type(self).model_fields
        }


class ExactAlphaReport(BaseModel):
    """Exact (unsimplified) alpha objective compared with the simplified one."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha: MPReal
    exact_minimax: MinimaxResult
    simplified_dominates: bool
    max_exact_minus_simplified: MPReal
    upper_branch_max: MPReal
    lower_branch_max: MPReal
    upper_branch_below_twelfth: bool
    upper_branch_dominated: bool


# =============================================================================
# Cache and run results
# =============================================================================


class CachedEigenform(BaseModel):
    """Serialized eigenform: exact mpf encodings of a_f(n) and constants."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    index: int
    t2_eigenvalue: str
    a_coeffs: List[str]
    lambdas: List[str]
    norm_const: Optional[str] = None
    checksum: str


class CacheFile(BaseModel):
    """Versioned on-disk cache of a Miller basis and its eigenforms."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    version: int
    weight: int
    terms: int
    precision_bits: int
    basis: List[List[str]] = Field(description="Exact integer coefficients as text")
    eigenforms: List[CachedEigenform]
    checksum: str


class RunResult(BaseModel):
    """
    Immutable result object describing one mflab subcommand run.

    The report payload is deterministic; timing lives outside it.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    success: bool = Field(description="True if the command and its checks passed")
    exit_code: int = Field(description="Process exit code to return")
    command: str = Field(description="Subcommand name")
    report: Dict[str, Any] = Field(description="Deterministic report payload")
    tables: Dict[str, List[Dict[str, Any]]] = Field(
        default_factory=dict, description="CSV-ready tables keyed by name"
    )
    written_files: List[str] = Field(default_factory=list)
    duration_s: float = Field(default=0.0, description="Wall-clock time in seconds")
    message: Optional[str] = Field(default=None)


# =============================================================================
# Supporting records
# =============================================================================


class QuadratureResult(BaseModel):
    """Value and error estimate of an adaptive quadrature."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    value: float
    error: float
    cells: int
    converged: bool = True


class MassEstimate(BaseModel):
    """mu_f of a region with its error estimate."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    value: float
    error: float
    method: Literal["strip", "quadrature", "strip+quadrature"]


class Bump(BaseModel):
    """Tensor bump phi(x, y) = scale * psi((x-x0)/wx) * psi((y-y0)/wy)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    center: HPoint
    half_widths: Tuple[float, float]
    scale: float = 1.0

    @field_validator("half_widths")
    @classmethod
    def validate_widths(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        if v[0] <= 0 or v[1] <= 0:
            raise ValueError("Bump half-widths must be positive")
        return v

    def support(self) -> Rectangle:
        x0, y0 = float(self.center.x), float(self.center.y)
        wx, wy = self.half_widths
        return Rectangle(x1=x0 - wx, x2=x0 + wx, y1=y0 - wy, y2=y0 + wy)


class FamilyZeroBallReport(BaseModel):
    """Ball zero statistics over a whole Hecke basis."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    weight: int
    center: HPoint
    radius: float
    unfolded: bool = Field(description="Zeros counted in the ball in H, not in F")
    expected: float = Field(description="(k/12)(3/pi) Area(B)")
    stats: List[BallStatistic]
    mean_count: Optional[float]
    mean_abs_ratio_error: Optional[float]

    @property
    def within_factor_three(self) -> Optional[bool]:
        if self.mean_count is None:
            return None
        return self.expected / 3 <= self.mean_count <= 3 * self.expected


class DetectorConsistency(BaseModel):
    """Sign-change pairs of lambda checked against verified geodesic zeros."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    line: Literal["re0", "rehalf"]
    threshold: float
    pairs: List[SignChangePair]
    verified: List[bool]

    @property
    def rate(self) -> float:
        return sum(self.verified) / len(self.verified) if self.verified else 1.0


class IntervalStatPair(BaseModel):
    """Linear and square short-interval statistics from one sample of x."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    linear: IntervalStat
    square: IntervalStat
    l1sym2: MPReal


class DyadicMeanSquare(BaseModel):
    """(1/X) sum_{X<n<=2X} lambda(n)^2 against (6/pi^2) L(1, sym^2 f)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    X: int
    value: float
    main_term: float
    ratio: float


class CheckResult(BaseModel):
    """Outcome of one acceptance check."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str
    passed: bool
    report_only: bool = False
    details: Dict[str, Any] = Field(default_factory=dict)
    error: Optional[str] = None


class AcceptanceReport(BaseModel):
    """All acceptance checks of one `verify` run."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    profile: Literal["quick", "full"]
    seed: int
    precision_bits: int
    checks: List[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if not c.report_only)
