"""Point estimators of the population mean assisted by two binary attributes.

Every estimator is a member of one of four families, single- or two-phase:

==============  =========================================================
family          single-phase value (two-phase analogue)
==============  =========================================================
``mean``        ``ybar``
``power``       ``ybar (P1/p1)^a1 (P2/p2)^a2``
                (``ybar (p1'/p1)^m1 (P2/p2')^m2``)
``expfam``      ``ybar exp(b1 (P1-p1)/(P1+p1)) exp(b2 (p2-P2)/(p2+P2))``
                (``ybar exp(n1 (p1'-p1)/(p1'+p1)) exp(n2 (p2'-P2)/(p2'+P2))``)
``composite``   ``w0 ybar + w1 power + w2 expfam`` with ``w0 = 1 - w1 - w2``
==============  =========================================================

The attribute-2 exponential factor is written in product form
``(p2 - P2)/(p2 + P2)``, so a positive ``b2`` pushes the estimate up when the
sample over-represents attribute 2. The classical named estimators are
family members:

==============  ===================  ===================
name            single phase         two phase (``d-``)
==============  ===================  ===================
``ratio1``      ``power(1, 0)``      ``power(1, 0)``
``product2``    ``power(0, -1)``     ``power(0, 1)``
``expratio1``   ``expfam(1, 0)``     ``expfam(1, 0)``
``expproduct2`` ``expfam(0, 1)``     ``expfam(0, 1)``
==============  ===================  ===================

In two-phase sampling attribute 2 always enters through its first-phase
proportion ``p2'``; attribute 1 through the ratio of first- to second-phase
proportions.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import DivisionByZero, InvalidSpec, UnresolvedWeights, WrongPhase


class Kind(str, Enum):
    MEAN = "mean"
    POWER = "power"
    EXP = "expfam"
    COMPOSITE = "composite"


# alias -> (kind, exponents), per phase
SINGLE_ALIASES = {
    "ratio1": (Kind.POWER, (1.0, 0.0)),
    "product2": (Kind.POWER, (0.0, -1.0)),
    "expratio1": (Kind.EXP, (1.0, 0.0)),
    "expproduct2": (Kind.EXP, (0.0, 1.0)),
}
TWO_PHASE_ALIASES = {
    "ratio1": (Kind.POWER, (1.0, 0.0)),
    "product2": (Kind.POWER, (0.0, 1.0)),
    "expratio1": (Kind.EXP, (1.0, 0.0)),
    "expproduct2": (Kind.EXP, (0.0, 1.0)),
}

# parameter names as written in the grammar, per phase
_NAMES = {
    False: {"a1": "a1", "a2": "a2", "b1": "b1", "b2": "b2", "w0": "w0", "w1": "w1", "w2": "w2"},
    True: {"a1": "m1", "a2": "m2", "b1": "n1", "b2": "n2", "w0": "h0", "w1": "h1", "w2": "h2"},
}


@dataclass(frozen=True)
class EstimatorSpec:
    """An estimator family together with its real parameters.

    ``a1, a2`` are the power-family exponents (``m1, m2`` in two-phase
    notation), ``b1, b2`` the exponential-family exponents (``n1, n2``) and
    ``w1, w2`` the composite weights (``h1, h2``). ``w1 = w2 = None`` on a
    composite means "use the MSE-optimal weights", resolved by
    :func:`attrmean.theory.resolve_weights`.
    """

    kind: Kind
    two_phase: bool = False
    a1: float = 0.0
    a2: float = 0.0
    b1: float = 0.0
    b2: float = 0.0
    w1: float | None = 0.0
    w2: float | None = 0.0
    alias: str | None = None

    def __post_init__(self):
        for name in ("a1", "a2", "b1", "b2"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidSpec(f"{name} must be finite")
        if (self.w1 is None) != (self.w2 is None):
            raise InvalidSpec("composite weights must be both given or both automatic")
        if self.w1 is not None and not (math.isfinite(self.w1) and math.isfinite(self.w2)):
            raise InvalidSpec("composite weights must be finite")

    # -- constructors -----------------------------------------------------
    @classmethod
    def mean(cls, two_phase: bool = False) -> EstimatorSpec:
        return cls(Kind.MEAN, two_phase)

    @classmethod
    def power(cls, a1: float, a2: float, two_phase: bool = False) -> EstimatorSpec:
        return cls(Kind.POWER, two_phase, a1=float(a1), a2=float(a2))

    @classmethod
    def expfam(cls, b1: float, b2: float, two_phase: bool = False) -> EstimatorSpec:
        return cls(Kind.EXP, two_phase, b1=float(b1), b2=float(b2))

    @classmethod
    def composite(
        cls,
        a1: float,
        a2: float,
        b1: float,
        b2: float,
        w1: float | None = None,
        w2: float | None = None,
        w0: float | None = None,
        two_phase: bool = False,
    ) -> EstimatorSpec:
        """Composite estimator; weights must satisfy ``w0 + w1 + w2 = 1``.

        Any two of the three weights determine the third. With no weights
        at all the MSE-optimal pair is used.
        """
        given = [w is not None for w in (w0, w1, w2)]
        if sum(given) == 0:
            return cls(Kind.COMPOSITE, two_phase, float(a1), float(a2), float(b1), float(b2), None, None)
        if sum(given) == 1:
            raise InvalidSpec("composite needs at least two of w0, w1, w2 (or none, for optimal weights)")
        if w1 is None:
            w1 = 1.0 - w0 - w2
        elif w2 is None:
            w2 = 1.0 - w0 - w1
        elif w0 is not None and not math.isclose(w0 + w1 + w2, 1.0, rel_tol=0, abs_tol=1e-12):
            raise InvalidSpec(f"weights must sum to 1, got {w0 + w1 + w2!r}")
        return cls(Kind.COMPOSITE, two_phase, float(a1), float(a2), float(b1), float(b2), float(w1), float(w2))

    @classmethod
    def named(cls, name: str, two_phase: bool = False) -> EstimatorSpec:
        table = TWO_PHASE_ALIASES if two_phase else SINGLE_ALIASES
        if name not in table:
            raise InvalidSpec(f"unknown estimator name {name!r}")
        kind, (e1, e2) = table[name]
        if kind is Kind.POWER:
            return cls(Kind.POWER, two_phase, a1=e1, a2=e2, alias=name)
        return cls(Kind.EXP, two_phase, b1=e1, b2=e2, alias=name)

    # -- derived ----------------------------------------------------------
    @property
    def auto_weights(self) -> bool:
        return self.kind is Kind.COMPOSITE and self.w1 is None

    @property
    def w0(self) -> float | None:
        if self.w1 is None:
            return None
        return 1.0 - self.w1 - self.w2

    def weights(self) -> tuple[float, float, float]:
        """``(w0, w1, w2)`` for any family; non-composites are expressed as
        degenerate composites (mean: ``(1,0,0)``, power: ``(0,1,0)``,
        expfam: ``(0,0,1)``)."""
        if self.kind is Kind.MEAN:
            return 1.0, 0.0, 0.0
        if self.kind is Kind.POWER:
            return 0.0, 1.0, 0.0
        if self.kind is Kind.EXP:
            return 0.0, 0.0, 1.0
        if self.auto_weights:
            raise UnresolvedWeights(f"{format_spec(self)} has automatic weights; resolve them first")
        return self.w0, self.w1, self.w2

    def with_weights(self, w1: float, w2: float) -> EstimatorSpec:
        if self.kind is not Kind.COMPOSITE:
            raise InvalidSpec("only composite estimators carry weights")
        return replace(self, w1=float(w1), w2=float(w2))

    def key(self) -> tuple:
        """Identity of the estimator independent of its spelling."""
        if self.kind is Kind.MEAN:
            params: tuple = ()
        elif self.kind is Kind.POWER:
            params = (self.a1, self.a2)
        elif self.kind is Kind.EXP:
            params = (self.b1, self.b2)
        else:
            params = (self.a1, self.a2, self.b1, self.b2, self.w1, self.w2)
        return (self.two_phase, self.kind.value, *params)

    @property
    def text(self) -> str:
        return format_spec(self)

    @property
    def name(self) -> str:
        """Family or alias name with the ``d-`` prefix, without parameters."""
        return ("d-" if self.two_phase else "") + (self.alias or self.kind.value)

    def params_text(self, sep: str = ";") -> str:
        """Parameters as ``name=value`` pairs in the phase's notation."""
        n = _NAMES[self.two_phase]
        items = []
        if self.kind in (Kind.POWER, Kind.COMPOSITE):
            items += [(n["a1"], self.a1), (n["a2"], self.a2)]
        if self.kind in (Kind.EXP, Kind.COMPOSITE):
            items += [(n["b1"], self.b1), (n["b2"], self.b2)]
        if self.kind is Kind.COMPOSITE and not self.auto_weights:
            items += [(n["w0"], self.w0), (n["w1"], self.w1), (n["w2"], self.w2)]
        return sep.join(f"{k}={fmt_number(v)}" for k, v in items)


def fmt_number(x: float) -> str:
    """Shortest round-tripping text for ``x`` (``1.0`` prints as ``1``)."""
    x = float(x)
    if x == 0:
        return "0"
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def format_spec(spec: EstimatorSpec) -> str:
    prefix = "d-" if spec.two_phase else ""
    if spec.alias is not None:
        return prefix + spec.alias
    if spec.kind is Kind.MEAN:
        return prefix + "mean"
    n = _NAMES[spec.two_phase]
    if spec.kind is Kind.POWER:
        body = f"{n['a1']}={fmt_number(spec.a1)},{n['a2']}={fmt_number(spec.a2)}"
    elif spec.kind is Kind.EXP:
        body = f"{n['b1']}={fmt_number(spec.b1)},{n['b2']}={fmt_number(spec.b2)}"
    else:
        weights = "auto" if spec.auto_weights else f"{n['w1']}={fmt_number(spec.w1)},{n['w2']}={fmt_number(spec.w2)}"
        body = (
            f"{weights};{n['a1']}={fmt_number(spec.a1)},{n['a2']}={fmt_number(spec.a2)},"
            f"{n['b1']}={fmt_number(spec.b1)},{n['b2']}={fmt_number(spec.b2)}"
        )
    return f"{prefix}{spec.kind.value}({body})"


# --------------------------------------------------------------------------
# grammar

_SPEC_RE = re.compile(r"^\s*(d-)?([a-z][a-z0-9]*)\s*(?:\((.*)\))?\s*$", re.IGNORECASE | re.DOTALL)
_CANON = {"m1": "a1", "m2": "a2", "n1": "b1", "n2": "b2", "h0": "w0", "h1": "w1", "h2": "w2"}
_ALLOWED = {
    Kind.MEAN: set(),
    Kind.POWER: {"a1", "a2"},
    Kind.EXP: {"b1", "b2"},
    Kind.COMPOSITE: {"a1", "a2", "b1", "b2", "w0", "w1", "w2"},
}


def parse_spec(text: str) -> EstimatorSpec:
    """Parse one estimator from the textual grammar.

    Examples: ``mean``, ``ratio1``, ``power(a1=-1,a2=1)``,
    ``expfam(b1=1,b2=-1)``, ``composite(auto;a1=1,a2=1,b1=1,b2=1)``,
    ``composite(w1=0.4,w2=-0.5;a1=1,a2=1,b1=1,b2=1)``, ``d-power(m1=1,m2=1)``.
    Two-phase specs accept either ``m/n/h`` or ``a/b/w`` parameter names.
    """
    m = _SPEC_RE.match(text)
    if not m:
        raise InvalidSpec(f"cannot parse estimator {text.strip()!r}")
    two_phase = m.group(1) is not None
    name = m.group(2).lower()
    body = m.group(3)

    if name in SINGLE_ALIASES:
        if body is not None and body.strip():
            raise InvalidSpec(f"{name!r} takes no parameters (got {body!r})")
        return EstimatorSpec.named(name, two_phase)
    try:
        kind = Kind(name)
    except ValueError:
        raise InvalidSpec(f"unknown estimator {m.group(2)!r}") from None

    auto = False
    params: dict[str, float] = {}
    for token in re.split(r"[;,]", body or ""):
        token = token.strip()
        if not token:
            continue
        if token.lower() == "auto":
            auto = True
            continue
        if "=" not in token:
            raise InvalidSpec(f"bad parameter token {token!r} in {text.strip()!r}")
        key, value = (s.strip() for s in token.split("=", 1))
        key = key.lower()
        if two_phase:
            key = _CANON.get(key, key)
        elif key in _CANON:
            raise InvalidSpec(f"parameter {key!r} is two-phase notation; use the d- prefix")
        if key not in _ALLOWED[kind]:
            raise InvalidSpec(f"parameter {key!r} is not valid for {kind.value}")
        if key in params:
            raise InvalidSpec(f"parameter {key!r} given twice")
        try:
            params[key] = float(value)
        except ValueError:
            raise InvalidSpec(f"bad number {value!r} for {key!r}") from None

    if kind is Kind.MEAN:
        return EstimatorSpec.mean(two_phase)
    if kind is Kind.POWER:
        return EstimatorSpec.power(params.get("a1", 0.0), params.get("a2", 0.0), two_phase)
    if kind is Kind.EXP:
        return EstimatorSpec.expfam(params.get("b1", 0.0), params.get("b2", 0.0), two_phase)
    weights = {k: params.get(k) for k in ("w0", "w1", "w2")}
    if auto and any(v is not None for v in weights.values()):
        raise InvalidSpec("composite: 'auto' conflicts with explicit weights")
    return EstimatorSpec.composite(
        params.get("a1", 0.0),
        params.get("a2", 0.0),
        params.get("b1", 0.0),
        params.get("b2", 0.0),
        two_phase=two_phase,
        **weights,
    )


def split_spec_list(text: str) -> list[str]:
    """Split on whitespace, commas or semicolons outside parentheses; ``#`` comments are dropped."""
    text = "\n".join(line.split("#", 1)[0] for line in text.splitlines())
    items, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise InvalidSpec("unbalanced ')' in estimator list")
        if depth == 0 and (ch.isspace() or ch in ",;"):
            if cur:
                items.append("".join(cur))
                cur = []
            continue
        cur.append(ch)
    if depth != 0:
        raise InvalidSpec("unbalanced '(' in estimator list")
    if cur:
        items.append("".join(cur))
    return items


def parse_spec_list(text: str) -> list[EstimatorSpec]:
    return [parse_spec(item) for item in split_spec_list(text)]


# --------------------------------------------------------------------------
# observed data


@dataclass(frozen=True)
class SampleData:
    mean_y: float
    p1: float
    p2: float

    def __post_init__(self):
        _check_proportions(p1=self.p1, p2=self.p2)


@dataclass(frozen=True)
class TwoPhaseSampleData:
    """Second-phase ``mean_y`` and ``p1``; first-phase ``p1_prime`` and ``p2_prime``."""

    mean_y: float
    p1: float
    p1_prime: float
    p2_prime: float

    def __post_init__(self):
        _check_proportions(p1=self.p1, p1_prime=self.p1_prime, p2_prime=self.p2_prime)


@dataclass(frozen=True)
class KnownTruth:
    """Known population proportions; ``P1`` is only needed in single phase."""

    P1: float | None
    P2: float

    def __post_init__(self):
        for name, P in (("P1", self.P1), ("P2", self.P2)):
            if P is not None and not 0 < P < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {P}")


def _check_proportions(**values):
    for name, p in values.items():
        if not 0 <= p <= 1:
            raise ValueError(f"{name} must lie in [0, 1], got {p}")


# --------------------------------------------------------------------------
# evaluation (vectorized; undefined values come back as nan/inf)


def _ratio_power(num, den, exponent):
    if exponent == 0:
        return 1.0
    return (num / den) ** exponent


def _combine(spec: EstimatorSpec, ybar, power_part, exp_part):
    w0, w1, w2 = spec.weights()
    out = w0 * ybar if w0 != 0 else np.zeros_like(ybar)
    if w1 != 0:
        out = out + w1 * power_part()
    if w2 != 0:
        out = out + w2 * exp_part()
    return out


def evaluate_single(spec: EstimatorSpec, ybar, p1, p2, P1: float, P2: float):
    """Vectorized single-phase estimator; returns a float array."""
    if spec.two_phase:
        raise WrongPhase(f"{format_spec(spec)} is a two-phase estimator")
    ybar = np.asarray(ybar, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)

    def power_part():
        return ybar * _ratio_power(P1, p1, spec.a1) * _ratio_power(P2, p2, spec.a2)

    def exp_part():
        arg = np.zeros_like(ybar)
        if spec.b1 != 0:
            arg = arg + spec.b1 * (P1 - p1) / (P1 + p1)
        if spec.b2 != 0:
            arg = arg + spec.b2 * (p2 - P2) / (p2 + P2)
        return ybar * np.exp(arg)

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return np.asarray(_combine(spec, ybar, power_part, exp_part), dtype=float)


def evaluate_two_phase(spec: EstimatorSpec, ybar, p1, p1_prime, p2_prime, P2: float):
    """Vectorized two-phase estimator; returns a float array."""
    if not spec.two_phase:
        raise WrongPhase(f"{format_spec(spec)} is a single-phase estimator")
    ybar = np.asarray(ybar, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    p1_prime = np.asarray(p1_prime, dtype=float)
    p2_prime = np.asarray(p2_prime, dtype=float)

    def power_part():
        return ybar * _ratio_power(p1_prime, p1, spec.a1) * _ratio_power(P2, p2_prime, spec.a2)

    def exp_part():
        arg = np.zeros_like(ybar)
        if spec.b1 != 0:
            arg = arg + spec.b1 * (p1_prime - p1) / (p1_prime + p1)
        if spec.b2 != 0:
            arg = arg + spec.b2 * (p2_prime - P2) / (p2_prime + P2)
        return ybar * np.exp(arg)

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return np.asarray(_combine(spec, ybar, power_part, exp_part), dtype=float)


def point_estimate(spec: EstimatorSpec, s: SampleData, k: KnownTruth) -> float:
    """Single-phase estimate of the population mean.

    Raises
    ------
    WrongPhase
        ``spec`` is a two-phase estimator.
    DivisionByZero
        A sample proportion needed as a divisor is zero.
    """
    if spec.two_phase:
        raise WrongPhase(f"{format_spec(spec)} is a two-phase estimator")
    if k.P1 is None:
        raise ValueError("single-phase estimation needs the known P1")
    value = float(evaluate_single(spec, s.mean_y, s.p1, s.p2, k.P1, k.P2))
    if not math.isfinite(value):
        raise DivisionByZero(f"{format_spec(spec)} is undefined at p1={s.p1}, p2={s.p2}")
    return value


def two_phase_estimate(spec: EstimatorSpec, s: TwoPhaseSampleData, k: KnownTruth) -> float:
    """Two-phase estimate of the population mean (only ``k.P2`` is used)."""
    if not spec.two_phase:
        raise WrongPhase(f"{format_spec(spec)} is a single-phase estimator")
    value = float(evaluate_two_phase(spec, s.mean_y, s.p1, s.p1_prime, s.p2_prime, k.P2))
    if not math.isfinite(value):
        raise DivisionByZero(
            f"{format_spec(spec)} is undefined at p1={s.p1}, p1'={s.p1_prime}, p2'={s.p2_prime}"
        )
    return value
