"""Exact canonical-form algebra of graded differential polynomials.

Expressions live in the jets of declared field symbols over the coordinates
``(x, t)`` plus an odd coordinate handled in two complementary ways:

* explicit ``theta`` factors on monomials (at most first order, since
  ``theta**2 = 0``), used when superspace quantities are expanded into
  component fields, and
* superspace field symbols whose jets carry an odd-derivative flag, so a jet
  records how many odd derivatives ``D`` have been applied modulo the relation
  ``D*D = d/dx``.

A monomial is ``coeff * lam**k * theta**t * f1 * f2 * ... * fn`` with the jet
factors kept in a fixed total order; reordering during canonicalisation flips
the sign once per transposition of two odd factors, and a repeated odd factor
(or a repeated theta) kills the monomial.  Coefficients are exact rationals:
verification verdicts must be exact zeros, never small residuals.

``lam`` is a formal commuting indeterminate with integer (possibly negative)
powers; it stands in for the spectral parameter so that identities are checked
exactly in it.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Iterable, Iterator, Mapping, Optional, Tuple, Union

from .grassmann import GrassmannElement, gadd, gmul

EVEN = 0
ODD = 1

ScalarLike = Union[int, Fraction]


class ParityError(ValueError):
    """Raised when an operation would violate the Z/2 grading."""


@dataclass(frozen=True)
class FieldSymbol:
    """A declared field: name, parity, and which coordinates it depends on.

    ``superspace`` fields depend on ``(x, t, theta)`` and their jets may carry
    one odd derivative; ``constant`` symbols depend on no coordinate at all
    (formal constants such as gauge means or an odd transformation parameter).
    """

    name: str
    parity: int
    superspace: bool = False
    constant: bool = False

    def __post_init__(self):
        if self.parity not in (EVEN, ODD):
            raise ValueError(f"parity must be 0 or 1, got {self.parity}")
        if self.superspace and self.constant:
            raise ValueError("a symbol cannot be both superspace and constant")

    def jet(self, dx: int = 0, dt: int = 0, dtheta: int = 0) -> "JetFactor":
        return JetFactor(self, dx, dt, dtheta)

    def __call__(self, dx: int = 0, dt: int = 0, dtheta: int = 0) -> "SymExpr":
        return SymExpr.monomial(1, (self.jet(dx, dt, dtheta),))

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True)
class JetFactor:
    """One derivative coordinate of a field inside a monomial."""

    symbol: FieldSymbol
    dx: int = 0
    dt: int = 0
    dtheta: int = 0

    def __post_init__(self):
        if self.dx < 0 or self.dt < 0:
            raise ValueError("derivative orders must be nonnegative")
        if self.dtheta not in (0, 1):
            raise ValueError("dtheta must be 0 or 1")
        if self.dtheta and not self.symbol.superspace:
            raise ValueError(f"{self.symbol.name} does not depend on theta")
        if self.symbol.constant and (self.dx or self.dt or self.dtheta):
            raise ValueError(f"{self.symbol.name} is constant; no jets exist")

    @property
    def parity(self) -> int:
        # an odd derivative flips the parity of a superspace field
        return self.symbol.parity ^ self.dtheta

    @property
    def d_order(self) -> int:
        """Total odd-derivative order: D**(2*dx + dtheta) applied to the field."""
        return 2 * self.dx + self.dtheta

    def _key(self):
        return (self.symbol.name, self.dt, self.dx, self.dtheta)

    def __str__(self) -> str:
        suffix = "t" * self.dt + "x" * self.dx + "D" * self.dtheta
        return f"{self.symbol.name}_{suffix}" if suffix else self.symbol.name


TermKey = Tuple[int, int, Tuple[JetFactor, ...]]  # (lam power, theta flag, factors)


def _sort_factors(factors: Iterable[JetFactor]) -> Optional[Tuple[int, Tuple[JetFactor, ...]]]:
    """Stable insertion sort tracking odd-odd transpositions.

    Returns ``(sign, sorted_factors)`` or ``None`` when the monomial vanishes
    because an odd factor repeats.
    """
    lst = list(factors)
    sign = 1
    for i in range(1, len(lst)):
        j = i
        while j > 0 and lst[j]._key() < lst[j - 1]._key():
            if lst[j].parity and lst[j - 1].parity:
                sign = -sign
            lst[j], lst[j - 1] = lst[j - 1], lst[j]
            j -= 1
    for prev, cur in zip(lst, lst[1:]):
        if prev == cur and prev.parity:
            return None
    return sign, tuple(lst)


def _mul_keys(k1: TermKey, k2: TermKey) -> Optional[Tuple[int, TermKey]]:
    """Product of two canonical monomial keys, with the graded sign."""
    lam = k1[0] + k2[0]
    if k1[1] and k2[1]:
        return None  # theta * theta
    sign = 1
    theta = k1[1] | k2[1]
    if k2[1]:
        # move theta of the right factor to the front, past the left factors
        odd_left = sum(f.parity for f in k1[2])
        if odd_left % 2:
            sign = -sign
    sorted_ = _sort_factors(k1[2] + k2[2])
    if sorted_ is None:
        return None
    s2, factors = sorted_
    return sign * s2, (lam, theta, factors)


class SymExpr:
    """A canonical multilinear differential polynomial.

    Immutable; all arithmetic returns new normalised expressions.  Terms with
    equal ``(lam, theta, factors)`` structure are merged and zero coefficients
    dropped, so equality of canonical forms is dict equality.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Optional[Mapping[TermKey, Fraction]] = None, _internal: bool = False):
        if terms is None:
            data: Dict[TermKey, Fraction] = {}
        elif _internal:
            data = dict(terms)
        else:
            data = {}
            for key, coeff in terms.items():
                coeff = Fraction(coeff)
                if coeff == 0:
                    continue
                sorted_ = _sort_factors(key[2])
                if sorted_ is None:
                    continue
                sign, factors = sorted_
                ckey = (key[0], key[1], factors)
                cur = data.get(ckey, Fraction(0)) + sign * coeff
                if cur:
                    data[ckey] = cur
                else:
                    data.pop(ckey, None)
        object.__setattr__(self, "_terms", data)

    def __setattr__(self, name, value):  # pragma: no cover - immutability guard
        raise AttributeError("SymExpr is immutable")

    # -- constructors ------------------------------------------------------
    @staticmethod
    def zero() -> "SymExpr":
        return _ZERO

    @staticmethod
    def monomial(
        coeff: ScalarLike,
        factors: Iterable[JetFactor] = (),
        lam: int = 0,
        theta: int = 0,
    ) -> "SymExpr":
        coeff = Fraction(coeff)
        if coeff == 0:
            return _ZERO
        return SymExpr({(lam, theta, tuple(factors)): coeff})

    @staticmethod
    def scalar(coeff: ScalarLike) -> "SymExpr":
        return SymExpr.monomial(coeff)

    @staticmethod
    def from_terms(raw: Iterable[Tuple[ScalarLike, int, int, Tuple[JetFactor, ...]]]) -> "SymExpr":
        """Sum of raw ``(coeff, lam, theta, factors)`` monomials."""
        acc: Dict[TermKey, Fraction] = {}
        for coeff, lam, theta, factors in raw:
            coeff = Fraction(coeff)
            if coeff == 0:
                continue
            sorted_ = _sort_factors(factors)
            if sorted_ is None:
                continue
            sign, sf = sorted_
            key = (lam, theta, sf)
            cur = acc.get(key, Fraction(0)) + sign * coeff
            if cur:
                acc[key] = cur
            else:
                acc.pop(key, None)
        return SymExpr(acc, _internal=True)

    # -- inspection --------------------------------------------------------
    def terms(self) -> Iterator[Tuple[TermKey, Fraction]]:
        return iter(sorted(self._terms.items(), key=lambda kv: _term_sort_key(kv[0])))

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def coefficient(self, factors: Iterable[JetFactor], lam: int = 0, theta: int = 0) -> Fraction:
        sorted_ = _sort_factors(factors)
        if sorted_ is None:
            return Fraction(0)
        sign, sf = sorted_
        return sign * self._terms.get((lam, theta, sf), Fraction(0))

    def parity(self) -> Optional[int]:
        """0/1 for homogeneous expressions, None when mixed.  Zero is even."""
        result: Optional[int] = None
        for (lam, theta, factors), _ in self._terms.items():
            p = (theta + sum(f.parity for f in factors)) % 2
            if result is None:
                result = p
            elif result != p:
                return None
        return EVEN if result is None else result

    def symbols(self) -> set:
        return {f.symbol for key in self._terms for f in key[2]}

    def jet_factors(self) -> set:
        return {f for key in self._terms for f in key[2]}

    def max_dx(self) -> int:
        return max((f.dx for key in self._terms for f in key[2]), default=0)

    def has_theta(self) -> bool:
        return any(theta for (_, theta, _) in self._terms)

    def filter_terms(self, keep: Callable[[TermKey, Fraction], bool]) -> "SymExpr":
        return SymExpr(
            {k: c for k, c in self._terms.items() if keep(k, c)}, _internal=True
        )

    def without_fields(self, symbols: Iterable[FieldSymbol]) -> "SymExpr":
        """Set every jet of the given fields to zero."""
        dead = set(symbols)
        return self.filter_terms(lambda key, _c: not any(f.symbol in dead for f in key[2]))

    # -- arithmetic --------------------------------------------------------
    def __add__(self, other: "SymExpr") -> "SymExpr":
        if not isinstance(other, SymExpr):
            return NotImplemented
        if not self._terms:
            return other
        if not other._terms:
            return self
        acc = dict(self._terms)
        for key, coeff in other._terms.items():
            cur = acc.get(key, Fraction(0)) + coeff
            if cur:
                acc[key] = cur
            else:
                acc.pop(key, None)
        return SymExpr(acc, _internal=True)

    def __neg__(self) -> "SymExpr":
        return SymExpr({k: -c for k, c in self._terms.items()}, _internal=True)

    def __sub__(self, other: "SymExpr") -> "SymExpr":
        if not isinstance(other, SymExpr):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other: Union["SymExpr", ScalarLike]) -> "SymExpr":
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return _ZERO
            other = Fraction(other)
            return SymExpr({k: other * c for k, c in self._terms.items()}, _internal=True)
        if not isinstance(other, SymExpr):
            return NotImplemented
        acc: Dict[TermKey, Fraction] = {}
        for k1, c1 in self._terms.items():
            for k2, c2 in other._terms.items():
                res = _mul_keys(k1, k2)
                if res is None:
                    continue
                sign, key = res
                cur = acc.get(key, Fraction(0)) + sign * c1 * c2
                if cur:
                    acc[key] = cur
                else:
                    acc.pop(key, None)
        return SymExpr(acc, _internal=True)

    def __rmul__(self, other: ScalarLike) -> "SymExpr":
        if isinstance(other, (int, Fraction)):
            return self.__mul__(other)
        return NotImplemented

    def __pow__(self, exponent: int) -> "SymExpr":
        if exponent < 0:
            raise ValueError("negative powers of expressions are not defined")
        out = SymExpr.scalar(1)
        for _ in range(exponent):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, SymExpr) and self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    # -- numeric bridge ------------------------------------------------------
    def evaluate(
        self,
        bindings: Mapping[JetFactor, Union[float, GrassmannElement]],
        n_generators: int = 0,
    ) -> GrassmannElement:
        """Evaluate at a point: every jet bound to a Grassmann (or float) value.

        Theta, lam and superspace jets have no numeric meaning here and raise.
        """
        total = GrassmannElement.zero(n_generators)
        for (lam, theta, factors), coeff in self._terms.items():
            if lam or theta:
                raise ValueError("cannot evaluate expressions containing lam or theta")
            acc = GrassmannElement.scalar(float(coeff), n_generators)
            for f in factors:
                if f.symbol.superspace:
                    raise ValueError(f"cannot evaluate superspace jet {f}")
                if f not in bindings:
                    raise KeyError(f"no binding for jet {f}")
                val = bindings[f]
                if not isinstance(val, GrassmannElement):
                    val = GrassmannElement.scalar(float(val), n_generators)
                acc = gmul(acc, val)
            total = gadd(total, acc)
        return total

    # -- display -------------------------------------------------------------
    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for key, coeff in self.terms():
            lam, theta, factors = key
            bits = []
            if lam:
                bits.append(f"lam^{lam}" if lam != 1 else "lam")
            if theta:
                bits.append("th")
            bits.extend(str(f) for f in factors)
            body = "*".join(bits) if bits else "1"
            if coeff == 1 and bits:
                term = body
            elif coeff == -1 and bits:
                term = f"-{body}"
            else:
                term = f"{coeff}*{body}" if bits else f"{coeff}"
            parts.append(term)
        out = parts[0]
        for p in parts[1:]:
            out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
        return out

    __repr__ = __str__


def _term_sort_key(key: TermKey):
    lam, theta, factors = key
    return (lam, theta, tuple(f._key() for f in factors))


_ZERO = SymExpr({}, _internal=True)


def lam_power(k: int) -> SymExpr:
    """The formal spectral parameter raised to an integer power."""
    return SymExpr.monomial(1, (), lam=k)


def theta_factor() -> SymExpr:
    """The explicit odd coordinate as an expression."""
    return SymExpr.monomial(1, (), theta=1)
