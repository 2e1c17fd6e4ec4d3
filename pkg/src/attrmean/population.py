"""Finite populations with one study variable and two binary attributes.

Everything downstream (estimators, first-order theory, simulation) consumes
either a raw :class:`FinitePopulation` or the parameter set held by
:class:`PopulationSummary`. Dispersion measures use the ``N - 1`` divisor;
proportions are plain means (divisor ``N``).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import (
    DegeneratePopulation,
    InvalidDesign,
    InvalidPopulation,
    ParseError,
    ZeroMean,
)

REL_TOL = 1e-12

SUMMARY_KEYS = (
    "N",
    "mean_y",
    "P1",
    "P2",
    "var_y",
    "var_phi1",
    "var_phi2",
    "rho_pb1",
    "rho_pb2",
    "rho_phi",
)


@dataclass(frozen=True)
class FinitePopulation:
    """Raw unit records ``(y, phi1, phi2)``.

    Construction does not validate; call :func:`validate_population` for a
    list of problems or :func:`summarize_population`, which raises.
    """

    y: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        phi1 = np.asarray(self.phi1)
        phi2 = np.asarray(self.phi2)
        if not (y.ndim == phi1.ndim == phi2.ndim == 1):
            raise InvalidPopulation("columns must be one-dimensional")
        if not (len(y) == len(phi1) == len(phi2)):
            raise InvalidPopulation("columns must have equal length")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "phi1", phi1)
        object.__setattr__(self, "phi2", phi2)

    @property
    def N(self) -> int:
        return len(self.y)

    def proportion(self, j: int) -> Fraction:
        """Exact population proportion of attribute ``j`` (1 or 2)."""
        phi = self.phi1 if j == 1 else self.phi2
        return Fraction(int(np.sum(phi)), self.N)

    def records(self):
        for yi, a, b in zip(self.y, self.phi1, self.phi2):
            yield float(yi), int(a), int(b)


@dataclass(frozen=True)
class PopulationSummary:
    """Population parameters consumed by the first-order theory.

    ``has_raw`` is False for summaries entered directly (for example from a
    published table); enumeration and simulation refuse such summaries.
    """

    N: int
    mean_y: float
    P1: float
    P2: float
    var_y: float
    var_phi1: float
    var_phi2: float
    rho_pb1: float
    rho_pb2: float
    rho_phi: float
    has_raw: bool = False

    def __post_init__(self):
        if self.N < 2:
            raise InvalidPopulation(f"N must be at least 2, got {self.N}")
        for name in ("var_y", "var_phi1", "var_phi2"):
            if getattr(self, name) < 0:
                raise InvalidPopulation(f"{name} must be nonnegative")
        for name in ("rho_pb1", "rho_pb2", "rho_phi"):
            if abs(getattr(self, name)) > 1 + REL_TOL:
                raise InvalidPopulation(f"|{name}| exceeds 1")

    @property
    def sd_y(self) -> float:
        return math.sqrt(self.var_y)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in SUMMARY_KEYS}


@dataclass(frozen=True)
class SamplingDesign:
    """SRSWOR sample sizes; ``n_prime`` is the first-phase size when present."""

    N: int
    n: int
    n_prime: int | None = None

    def __post_init__(self):
        if not 2 <= self.n <= self.N:
            raise InvalidDesign(f"need 2 <= n <= N, got n={self.n}, N={self.N}")
        if self.n_prime is not None and not self.n < self.n_prime <= self.N:
            raise InvalidDesign(
                f"need n < n_prime <= N, got n={self.n}, n_prime={self.n_prime}, N={self.N}"
            )

    @property
    def two_phase(self) -> bool:
        return self.n_prime is not None

    def factors(self) -> tuple[Fraction, Fraction | None, Fraction | None]:
        """Exact finite-population factors ``(f1, f2, f3)``."""
        f1 = Fraction(1, self.n) - Fraction(1, self.N)
        if self.n_prime is None:
            return f1, None, None
        f2 = Fraction(1, self.n_prime) - Fraction(1, self.N)
        f3 = Fraction(1, self.n) - Fraction(1, self.n_prime)
        return f1, f2, f3


@dataclass(frozen=True)
class Coefficients:
    """Coefficients of variation, regression-type ratios and fpc factors.

    ``K_pb1 = rho_pb1 C_y / C_p1``, ``K_pb2 = rho_pb2 C_y / C_p2`` and
    ``K_phi = rho_phi C_p1 / C_p2``.
    """

    C_y: float
    C_p1: float
    C_p2: float
    K_pb1: float
    K_pb2: float
    K_phi: float
    f1: float
    f2: float | None = None
    f3: float | None = None

    @property
    def two_phase(self) -> bool:
        return self.f2 is not None and self.f3 is not None


def validate_population(pop: FinitePopulation) -> list[str]:
    """Return a list of human-readable violations; empty when valid.

    Row numbers are 1-based positions in the unit list.
    """
    problems = []
    if pop.N < 2:
        problems.append(f"N too small: {pop.N} (need at least 2)")
    if not np.all(np.isfinite(pop.y)):
        bad = int(np.flatnonzero(~np.isfinite(pop.y))[0]) + 1
        problems.append(f"non-finite y at row {bad}")
    binary_ok = True
    for name, phi in (("phi1", pop.phi1), ("phi2", pop.phi2)):
        mask = (phi != 0) & (phi != 1)
        if np.any(mask):
            binary_ok = False
            rows = ", ".join(str(int(i) + 1) for i in np.flatnonzero(mask)[:10])
            problems.append(f"non-binary attribute {name} at row(s) {rows}")
    if pop.N >= 2 and np.all(np.isfinite(pop.y)) and np.ptp(pop.y) == 0:
        problems.append("constant y: variance is zero")
    if binary_ok and pop.N >= 1:
        for j in (1, 2):
            P = pop.proportion(j)
            if P in (0, 1):
                problems.append(f"degenerate proportion P{j} = {P}")
    return problems


def summarize_population(pop: FinitePopulation) -> PopulationSummary:
    """Compute every population parameter with ``N - 1`` divisors.

    Raises
    ------
    InvalidPopulation
        Non-binary attributes, non-finite y, or fewer than two units.
        Also raised when the variance of y overflows.
    DegeneratePopulation
        Constant y (or a variance that underflows to 0) or an attribute
        proportion of 0 or 1.
    """
    problems = validate_population(pop)
    hard = [p for p in problems if not p.startswith(("constant", "degenerate"))]
    if hard:
        raise InvalidPopulation("; ".join(hard))
    if problems:
        raise DegeneratePopulation("; ".join(problems))

    N = pop.N
    y = pop.y
    phi1 = pop.phi1.astype(float)
    phi2 = pop.phi2.astype(float)
    mean_y = float(np.mean(y))
    P1 = float(pop.proportion(1))
    P2 = float(pop.proportion(2))
    dy = y - mean_y
    d1 = phi1 - P1
    d2 = phi2 - P2
    with np.errstate(over="ignore"):
        var_y = float(dy @ dy) / (N - 1)
    var1 = float(d1 @ d1) / (N - 1)
    var2 = float(d2 @ d2) / (N - 1)
    cov_y1 = float(dy @ d1) / (N - 1)
    cov_y2 = float(dy @ d2) / (N - 1)
    cov_12 = float(d1 @ d2) / (N - 1)
    if not math.isfinite(var_y):
        raise InvalidPopulation(f"variance of y overflows ({var_y})")
    if var_y == 0:
        raise DegeneratePopulation("variance of y underflows to 0")

    def corr(cov, va, vb):
        return float(np.clip(cov / math.sqrt(va * vb), -1.0, 1.0))

    return PopulationSummary(
        N=N,
        mean_y=mean_y,
        P1=P1,
        P2=P2,
        var_y=var_y,
        var_phi1=var1,
        var_phi2=var2,
        rho_pb1=corr(cov_y1, var_y, var1),
        rho_pb2=corr(cov_y2, var_y, var2),
        rho_phi=corr(cov_12, var1, var2),
        has_raw=True,
    )


def binary_variance(N: int, P: float) -> float:
    """Variance of a 0/1 attribute with proportion ``P``, divisor ``N - 1``."""
    return N * P * (1 - P) / (N - 1)


def derived_coefficients(summary: PopulationSummary, design: SamplingDesign) -> Coefficients:
    if design.N != summary.N:
        raise InvalidDesign(f"design N={design.N} does not match population N={summary.N}")
    if summary.mean_y == 0:
        raise ZeroMean("C_y is undefined for a zero population mean")
    for j, P in ((1, summary.P1), (2, summary.P2)):
        if not 0 < P < 1:
            raise DegeneratePopulation(f"P{j} = {P} is outside (0, 1)")
    C_y = summary.sd_y / summary.mean_y
    C_p1 = math.sqrt(summary.var_phi1) / summary.P1
    C_p2 = math.sqrt(summary.var_phi2) / summary.P2
    f1, f2, f3 = design.factors()
    return Coefficients(
        C_y=C_y,
        C_p1=C_p1,
        C_p2=C_p2,
        K_pb1=summary.rho_pb1 * C_y / C_p1,
        K_pb2=summary.rho_pb2 * C_y / C_p2,
        K_phi=summary.rho_phi * C_p1 / C_p2,
        f1=float(f1),
        f2=None if f2 is None else float(f2),
        f3=None if f3 is None else float(f3),
    )


# --------------------------------------------------------------------------
# file formats


def read_population_csv(path) -> FinitePopulation:
    """Read a ``y,phi1,phi2`` CSV.

    Values that fail to parse raise :class:`ParseError` naming the line;
    integers other than 0/1 are accepted here and reported by
    :func:`validate_population`.
    """
    path = Path(path)
    ys, p1, p2 = [], [], []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["y", "phi1", "phi2"]:
            raise ParseError(f"{path}:1: expected header 'y,phi1,phi2', got {header!r}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise ParseError(f"{path}:{line}: expected 3 fields, got {len(row)}")
            try:
                ys.append(float(row[0]))
            except ValueError:
                raise ParseError(f"{path}:{line}: y is not a number: {row[0]!r}") from None
            for col, sink, raw in (("phi1", p1, row[1]), ("phi2", p2, row[2])):
                try:
                    sink.append(int(raw.strip()))
                except ValueError:
                    raise ParseError(f"{path}:{line}: {col} is not an integer: {raw!r}") from None
    return FinitePopulation(np.array(ys, dtype=float), np.array(p1, dtype=int), np.array(p2, dtype=int))


def write_population_csv(pop: FinitePopulation, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["y", "phi1", "phi2"])
        for y, a, b in pop.records():
            w.writerow([repr(y), a, b])


def parse_key_values(text: str, source: str = "<summary>") -> dict[str, str]:
    """Parse ``key = value`` (or ``key: value``) lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        for sep in ("=", ":"):
            if sep in line:
                key, value = (s.strip() for s in line.split(sep, 1))
                break
        else:
            raise ParseError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        if not key or not value:
            raise ParseError(f"{source}:{lineno}: empty key or value")
        if key in out:
            raise ParseError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def summary_from_mapping(values: dict[str, str], source: str = "<summary>") -> PopulationSummary:
    missing = [k for k in SUMMARY_KEYS if k not in values]
    if missing:
        raise ParseError(f"{source}: missing key(s) {', '.join(missing)}")
    parsed = {}
    for key in SUMMARY_KEYS:
        try:
            parsed[key] = int(values[key]) if key == "N" else float(values[key])
        except ValueError:
            raise ParseError(f"{source}: bad value for {key}: {values[key]!r}") from None
    return PopulationSummary(**parsed, has_raw=False)


def read_summary(path) -> tuple[PopulationSummary, dict[str, str]]:
    """Read a summary file; returns the summary plus any extra keys (``n``, ``n_prime``, ...)."""
    path = Path(path)
    values = parse_key_values(path.read_text(), str(path))
    summary = summary_from_mapping(values, str(path))
    extras = {k: v for k, v in values.items() if k not in SUMMARY_KEYS}
    return summary, extras


def format_summary(summary: PopulationSummary) -> str:
    lines = [f"{k} = {getattr(summary, k)!r}" for k in SUMMARY_KEYS]
    return "\n".join(lines) + "\n"
