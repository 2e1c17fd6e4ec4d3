"""First-order bias and MSE, optimal composite weights, and efficiency tables.

All expressions come from a second-order expansion of each estimator in the
relative errors

* ``e0 = (ybar - Ybar)/Ybar``, ``e1 = (p1 - P1)/P1``, ``e2 = (p2 - P2)/P2``
  (second-phase / single-phase statistics),
* ``e1' = (p1' - P1)/P1``, ``e2' = (p2' - P2)/P2`` (first-phase statistics),

whose second moments are collected in :class:`MomentSet`. Bias keeps the
second-order terms of the expansion; MSE keeps the squared linear part.
Several published closed forms disagree with the expansions they claim to
come from; the expressions here are the re-derived ones and
:mod:`attrmean.reference` lists every difference.
"""

from __future__ import annotations

from dataclasses import astuple, dataclass, field

import numpy as np

from .errors import MissingTwoPhaseFactors, NonpositiveMSE, SingularSystem
from .estimators import EstimatorSpec, Kind
from .population import Coefficients

SINGULAR_TOL = 1e-12

_E_NAMES = ("e0", "e1", "e2", "e1p", "e2p")


@dataclass(frozen=True)
class MomentSet:
    """Second moments ``E(e_a e_b)`` of the relative errors.

    The covariance of two statistics from the same SRSWOR phase carries that
    phase's factor (``f1`` second phase, ``f2`` first phase). A second-phase
    statistic and a first-phase statistic also covary with ``f2``, because
    the second-phase sample is a uniform subsample of the first.
    """

    matrix: np.ndarray
    names: tuple[str, ...]

    def E(self, a: str, b: str) -> float:
        i, j = self.names.index(a), self.names.index(b)
        return float(self.matrix[i, j])


def relative_covariance(c: Coefficients) -> np.ndarray:
    """Population relative covariance of ``(y, phi1, phi2)`` per unit fpc."""
    C1s, C2s = c.C_p1**2, c.C_p2**2
    return np.array(
        [
            [c.C_y**2, c.K_pb1 * C1s, c.K_pb2 * C2s],
            [c.K_pb1 * C1s, C1s, c.K_phi * C2s],
            [c.K_pb2 * C2s, c.K_phi * C2s, C2s],
        ]
    )


def moment_set(c: Coefficients) -> MomentSet:
    R = relative_covariance(c)
    if not c.two_phase:
        return MomentSet(c.f1 * R, _E_NAMES[:3])
    # variables e0, e1, e2 (second phase) then e1', e2' (first phase)
    source = [0, 1, 2, 1, 2]
    phase = [2, 2, 2, 1, 1]
    M = np.empty((5, 5))
    for i in range(5):
        for j in range(5):
            f = c.f1 if phase[i] == phase[j] == 2 else c.f2
            M[i, j] = f * R[source[i], source[j]]
    return MomentSet(M, _E_NAMES)


# --------------------------------------------------------------------------
# A- and B-terms, optimal weights


@dataclass(frozen=True)
class ATerms:
    A1: float
    A2: float
    A3: float
    A4: float
    A5: float


@dataclass(frozen=True)
class BTerms:
    B1: float
    B2: float
    B3: float
    B4: float
    B5: float


def a_terms(c: Coefficients, a1: float, a2: float, b1: float, b2: float) -> ATerms:
    """Coefficients of the single-phase composite MSE quadratic form.

    ``MSE/(Ybar^2 f1) = C_y^2 + w1^2 A1 + w2^2 A2 - 2 w1 A3 - w2 A4 + w1 w2 A5``.
    """
    C1s, C2s = c.C_p1**2, c.C_p2**2
    K1, K2, Kp = c.K_pb1, c.K_pb2, c.K_phi
    return ATerms(
        A1=a1**2 * C1s + a2**2 * C2s + 2 * a1 * a2 * Kp * C2s,
        A2=0.25 * (b1**2 * C1s + b2**2 * C2s - 2 * b1 * b2 * Kp * C2s),
        A3=a1 * K1 * C1s + a2 * K2 * C2s,
        A4=b1 * K1 * C1s - b2 * K2 * C2s,
        A5=a1 * b1 * C1s - a2 * b2 * C2s + a2 * b1 * Kp * C2s - a1 * b2 * Kp * C2s,
    )


def _require_two_phase(c: Coefficients) -> None:
    if not c.two_phase:
        raise MissingTwoPhaseFactors("two-phase estimator needs f2 and f3 (give n_prime)")


def b_terms(c: Coefficients, m1: float, m2: float, n1: float, n2: float) -> BTerms:
    """Coefficients of the two-phase composite MSE quadratic form.

    ``MSE/Ybar^2 = f1 C_y^2 + h1^2 B1 + h2^2 B2 - 2 h1 B3 - h2 B4 + h1 h2 B5``;
    the fpc factors live inside the B's.
    """
    _require_two_phase(c)
    C1s, C2s = c.C_p1**2, c.C_p2**2
    K1, K2 = c.K_pb1, c.K_pb2
    f2, f3 = c.f2, c.f3
    return BTerms(
        B1=f2 * m2**2 * C2s + f3 * m1**2 * C1s,
        B2=0.25 * (f2 * n2**2 * C2s + f3 * n1**2 * C1s),
        B3=f3 * m1 * K1 * C1s + f2 * m2 * K2 * C2s,
        B4=f3 * n1 * K1 * C1s - f2 * n2 * K2 * C2s,
        B5=f3 * n1 * m1 * C1s - f2 * n2 * m2 * C2s,
    )


def _solve_weights(q1, q2, q3, q4, q5) -> tuple[float, float]:
    # stationary point of q(w1, w2) = w1^2 q1 + w2^2 q2 - 2 w1 q3 - w2 q4 + w1 w2 q5
    det = 4 * q1 * q2 - q5**2
    scale = max(abs(4 * q1 * q2), q5**2)
    if scale == 0 or det <= SINGULAR_TOL * scale:
        raise SingularSystem(f"normal equations are singular or indefinite (4*q1*q2 - q5^2 = {det!r})")
    return (4 * q2 * q3 - q4 * q5) / det, (2 * q1 * q4 - 2 * q3 * q5) / det


def optimal_weights_single(a: ATerms) -> tuple[float, float]:
    """MSE-minimizing ``(w1, w2)`` for the single-phase composite."""
    return _solve_weights(a.A1, a.A2, a.A3, a.A4, a.A5)


def optimal_weights_double(b: BTerms) -> tuple[float, float]:
    """MSE-minimizing ``(h1, h2)`` for the two-phase composite."""
    return _solve_weights(b.B1, b.B2, b.B3, b.B4, b.B5)


def composite_terms(spec: EstimatorSpec, c: Coefficients) -> ATerms | BTerms:
    if spec.two_phase:
        return b_terms(c, spec.a1, spec.a2, spec.b1, spec.b2)
    return a_terms(c, spec.a1, spec.a2, spec.b1, spec.b2)


def resolve_weights(spec: EstimatorSpec, c: Coefficients) -> EstimatorSpec:
    """Replace automatic composite weights by the optimal ones; other specs pass through."""
    if not spec.auto_weights:
        return spec
    if spec.two_phase:
        w1, w2 = optimal_weights_double(composite_terms(spec, c))
    else:
        w1, w2 = optimal_weights_single(composite_terms(spec, c))
    return spec.with_weights(w1, w2)


def quadratic_form(terms: ATerms | BTerms, w1: float, w2: float) -> float:
    """``w1^2 q1 + w2^2 q2 - 2 w1 q3 - w2 q4 + w1 w2 q5`` for A- or B-terms."""
    q1, q2, q3, q4, q5 = astuple(terms)
    return w1**2 * q1 + w2**2 * q2 - 2 * w1 * q3 - w2 * q4 + w1 * w2 * q5


# --------------------------------------------------------------------------
# bias and MSE


def _relative_bias(spec: EstimatorSpec, c: Coefficients) -> float:
    C1s, C2s = c.C_p1**2, c.C_p2**2
    K1, K2, Kp = c.K_pb1, c.K_pb2, c.K_phi
    a1, a2, b1, b2 = spec.a1, spec.a2, spec.b1, spec.b2
    if spec.two_phase:
        f3, f2 = c.f3, c.f2
        power = f3 * C1s * (a1**2 / 2 + a1 / 2 - a1 * K1) + f2 * C2s * (a2**2 / 2 + a2 / 2 - a2 * K2)
        expo = f3 * C1s * (b1**2 / 8 + b1 / 4 - b1 * K1 / 2) + f2 * C2s * (b2**2 / 8 - b2 / 4 + b2 * K2 / 2)
    else:
        f1 = c.f1
        power = f1 * (
            C1s * (a1**2 / 2 + a1 / 2 - a1 * K1) + C2s * (a2**2 / 2 + a2 / 2 - a2 * K2 + a1 * a2 * Kp)
        )
        expo = f1 * (
            C1s * (b1**2 / 8 + b1 / 4 - b1 * K1 / 2)
            + C2s * (b2**2 / 8 - b2 / 4 + b2 * K2 / 2 - b1 * b2 * Kp / 4)
        )
    _, w1, w2 = spec.weights()
    return w1 * power + w2 * expo


def first_order_bias(spec: EstimatorSpec, c: Coefficients, ybar: float) -> float:
    """First-order bias of ``spec``; zero for the sample mean.

    Composite specs must have resolved weights (see :func:`resolve_weights`).
    """
    if spec.two_phase:
        _require_two_phase(c)
    if spec.kind is Kind.MEAN:
        return 0.0
    return ybar * _relative_bias(spec, c)


def _relative_mse(spec: EstimatorSpec, c: Coefficients, as_tabulated: bool) -> float:
    C1s, C2s = c.C_p1**2, c.C_p2**2
    K1, K2, Kp = c.K_pb1, c.K_pb2, c.K_phi
    a1, a2, b1, b2 = spec.a1, spec.a2, spec.b1, spec.b2
    base = c.f1 * c.C_y**2
    if spec.kind is Kind.MEAN:
        return base
    if not spec.two_phase:
        f1 = c.f1
        if spec.kind is Kind.POWER:
            return f1 * (
                c.C_y**2 + C1s * (a1**2 - 2 * a1 * K1) + C2s * (a2**2 - 2 * a2 * K2 + 2 * a1 * a2 * Kp)
            )
        if spec.kind is Kind.EXP:
            return f1 * (
                c.C_y**2 + C1s * (b1**2 / 4 - b1 * K1) + C2s * (b2**2 / 4 + b2 * K2 - b1 * b2 * Kp / 2)
            )
        _, w1, w2 = spec.weights()
        return base + f1 * quadratic_form(a_terms(c, a1, a2, b1, b2), w1, w2)

    f2, f3 = c.f2, c.f3
    if spec.kind is Kind.POWER:
        return base + f3 * C1s * (a1**2 - 2 * a1 * K1) + f2 * C2s * (a2**2 - 2 * a2 * K2)
    if spec.kind is Kind.EXP:
        # the published attribute-2-only row uses f3 where the derivation gives f2
        f_attr2 = f3 if as_tabulated and b1 == 0 else f2
        return base + f3 * C1s * (b1**2 / 4 - b1 * K1) + f_attr2 * C2s * (b2**2 / 4 + b2 * K2)
    _, w1, w2 = spec.weights()
    return base + quadratic_form(b_terms(c, a1, a2, b1, b2), w1, w2)


def first_order_mse(spec: EstimatorSpec, c: Coefficients, ybar: float, as_tabulated: bool = False) -> float:
    """First-order MSE of ``spec`` about the population mean ``ybar``.

    ``as_tabulated`` only changes the two-phase exponential member without
    an attribute-1 term (``d-expproduct2`` and its multiples), switching its
    attribute-2 factor from ``f2`` to ``f3`` to match the published table.
    """
    if spec.two_phase:
        _require_two_phase(c)
    return ybar**2 * _relative_mse(spec, c, as_tabulated)


def pre_value(mse_base: float, mse: float) -> float:
    """Percent relative efficiency ``100 * mse_base / mse``."""
    if not mse > 0:
        raise NonpositiveMSE(f"PRE needs a positive MSE, got {mse!r}")
    return 100.0 * mse_base / mse


# --------------------------------------------------------------------------
# report


@dataclass
class TheoryRow:
    spec: EstimatorSpec
    bias: float
    mse: float
    pre: float
    label: str = ""
    flags: list[str] = field(default_factory=list)
    printed_mse: float | None = None


@dataclass
class TheoryReport:
    rows: list[TheoryRow]
    base_mse: float
    two_phase: bool = False

    CSV_HEADER = "estimator,params,bias,mse,pre,flags"

    def row(self, label_or_text: str) -> TheoryRow:
        for r in self.rows:
            if label_or_text in (r.label, r.spec.text):
                return r
        raise KeyError(label_or_text)

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for r in self.rows:
            lines.append(
                ",".join(
                    [
                        r.spec.name,
                        r.spec.params_text(),
                        repr(r.bias),
                        repr(r.mse),
                        repr(r.pre),
                        ";".join(r.flags),
                    ]
                )
            )
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        """Aligned table: weights, exponents, estimator, bias, MSE, PRE, flags."""
        names = ("h0", "h1", "h2", "m1", "m2", "n1", "n2") if self.two_phase else ("w0", "w1", "w2", "a1", "a2", "b1", "b2")
        header = [*names, "estimator", "bias", "MSE", "PRE", "flags"]
        body = []
        for r in self.rows:
            s = r.spec
            w0, w1, w2 = s.weights()
            uses_a = s.kind in (Kind.POWER, Kind.COMPOSITE)
            uses_b = s.kind in (Kind.EXP, Kind.COMPOSITE)
            cells = [
                _sig(w0),
                _sig(w1),
                _sig(w2),
                _sig(s.a1) if uses_a else "",
                _sig(s.a2) if uses_a else "",
                _sig(s.b1) if uses_b else "",
                _sig(s.b2) if uses_b else "",
                r.label or s.text,
                _sig(r.bias),
                _sig(r.mse),
                _sig(r.pre),
                ";".join(r.flags),
            ]
            body.append(cells)
        widths = [max(len(h), *(len(row[i]) for row in body)) if body else len(h) for i, h in enumerate(header)]
        out = ["  ".join(h.rjust(w) for h, w in zip(header, widths)).rstrip()]
        for row in body:
            out.append("  ".join(c.rjust(w) for c, w in zip(row, widths)).rstrip())
        return "\n".join(out) + "\n"


def _sig(x: float) -> str:
    return f"{x:.6g}"


def theory_table(
    c: Coefficients,
    ybar: float,
    specs: list[EstimatorSpec],
    reference=None,
    as_tabulated: bool = False,
) -> TheoryReport:
    """One row per spec: bias, MSE and PRE relative to the sample mean.

    ``reference`` is an optional :class:`attrmean.reference.PublishedTable`;
    rows matching a published entry get its label, printed MSE and
    discrepancy flags.
    """
    base = first_order_mse(EstimatorSpec.mean(), c, ybar)
    rows = []
    for spec in specs:
        resolved = resolve_weights(spec, c)
        mse = first_order_mse(resolved, c, ybar, as_tabulated=as_tabulated)
        row = TheoryRow(
            spec=resolved,
            bias=first_order_bias(resolved, c, ybar),
            mse=mse,
            pre=pre_value(base, mse),
        )
        published = reference.lookup(spec) if reference is not None else None
        if published is not None:
            row.label = published.label
            row.printed_mse = published.mse
            row.flags = published.flags(
                computed_mse=mse,
                alternate_mse=first_order_mse(resolved, c, ybar, as_tabulated=not as_tabulated),
                as_tabulated=as_tabulated,
            )
        rows.append(row)
    return TheoryReport(rows, base, two_phase=any(s.two_phase for s in specs))


def describe_coefficients(c: Coefficients) -> dict[str, float]:
    out = {
        "C_y": c.C_y,
        "C_p1": c.C_p1,
        "C_p2": c.C_p2,
        "K_pb1": c.K_pb1,
        "K_pb2": c.K_pb2,
        "K_phi": c.K_phi,
        "f1": c.f1,
    }
    if c.two_phase:
        out["f2"] = c.f2
        out["f3"] = c.f3
    return out

