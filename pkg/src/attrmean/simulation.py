"""Brute-force ground truth for the first-order theory.

Synthetic populations, SRSWOR and nested two-phase draws, seeded Monte Carlo
and exhaustive enumeration of every equally likely sample. Monte Carlo and
enumeration feed the same reducer, so both produce a
:class:`SimulationReport` with identical columns.

Replicate ``r`` draws from ``SeedSequence(master_seed, spawn_key=(r,))``;
the statistics of every replicate land at index ``r`` of preallocated arrays
and all reductions run over those arrays in index order, so reports are
bit-identical for any number of workers.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AllReplicatesFailed,
    EnumerationTooLarge,
    InvalidDesign,
    InvalidGeneratorSpec,
    MismatchedSpecs,
)
from .estimators import EstimatorSpec, evaluate_single, evaluate_two_phase
from .population import (
    FinitePopulation,
    PopulationSummary,
    SamplingDesign,
    derived_coefficients,
    summarize_population,
)
from .theory import TheoryReport, first_order_bias, first_order_mse, resolve_weights

DEFAULT_ENUMERATION_CAP = 2_000_000
NOISE_SHAPES = ("normal", "uniform")


# --------------------------------------------------------------------------
# synthetic populations


@dataclass(frozen=True)
class GeneratorSpec:
    """Population model ``y = a + b1 phi1 + b2 phi2 + noise``.

    ``probs`` is the joint attribute distribution ``(p00, p01, p10, p11)``
    where ``pXY`` is the share with ``phi1 = X`` and ``phi2 = Y``. ``sigma``
    is the noise standard deviation for either shape.
    """

    N: int
    probs: tuple[float, float, float, float]
    a: float = 0.0
    b1: float = 1.0
    b2: float = 1.0
    sigma: float = 1.0
    noise: str = "normal"
    seed: int = 0

    def __post_init__(self):
        if self.N < 1:
            raise InvalidGeneratorSpec(f"N must be positive, got {self.N}")
        if len(self.probs) != 4:
            raise InvalidGeneratorSpec("probs must be (p00, p01, p10, p11)")
        if any(p < 0 for p in self.probs) or abs(math.fsum(self.probs) - 1) > 1e-12:
            raise InvalidGeneratorSpec(f"probs must be nonnegative and sum to 1, got {self.probs}")
        if not self.sigma >= 0:
            raise InvalidGeneratorSpec(f"sigma must be >= 0, got {self.sigma}")
        if self.noise not in NOISE_SHAPES:
            raise InvalidGeneratorSpec(f"noise must be one of {NOISE_SHAPES}, got {self.noise!r}")
        if not 0 <= self.seed < 2**64:
            raise InvalidGeneratorSpec("seed must be an unsigned 64-bit integer")

    @classmethod
    def from_text(cls, text: str) -> GeneratorSpec:
        """Parse ``N=1000,p00=..,p01=..,p10=..,p11=..,a=..,b1=..,b2=..,sigma=..,noise=normal``."""
        values = {}
        for token in text.replace(";", ",").split(","):
            token = token.strip()
            if not token:
                continue
            if "=" not in token:
                raise InvalidGeneratorSpec(f"bad generator token {token!r}")
            k, v = (s.strip() for s in token.split("=", 1))
            values[k] = v
        try:
            probs = tuple(float(values.pop(k)) for k in ("p00", "p01", "p10", "p11"))
            N = int(values.pop("N"))
            kw = {k: float(values.pop(k)) for k in ("a", "b1", "b2", "sigma") if k in values}
            if "noise" in values:
                kw["noise"] = values.pop("noise")
            if "seed" in values:
                kw["seed"] = int(values.pop("seed"))
        except KeyError as exc:
            raise InvalidGeneratorSpec(f"generator spec is missing {exc.args[0]!r}") from None
        except ValueError as exc:
            raise InvalidGeneratorSpec(f"bad generator value: {exc}") from None
        if values:
            raise InvalidGeneratorSpec(f"unknown generator keys {sorted(values)}")
        return cls(N, probs, **kw)


def apportion(N: int, probs) -> list[int]:
    """Largest-remainder apportionment of ``N`` units; ties go to the lower cell index."""
    quotas = [N * p for p in probs]
    counts = [math.floor(q) for q in quotas]
    left = N - sum(counts)
    order = sorted(range(len(probs)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[:left]:
        counts[i] += 1
    return counts


def generate_population(g: GeneratorSpec) -> FinitePopulation:
    """Units ordered by attribute cell 00, 01, 10, 11; only y is random."""
    counts = apportion(g.N, g.probs)
    cells = ((0, 0), (0, 1), (1, 0), (1, 1))
    phi1 = np.concatenate([np.full(c, x, dtype=int) for c, (x, _) in zip(counts, cells)])
    phi2 = np.concatenate([np.full(c, y, dtype=int) for c, (_, y) in zip(counts, cells)])
    y = g.a + g.b1 * phi1 + g.b2 * phi2
    if g.sigma > 0:
        rng = np.random.default_rng(g.seed)
        if g.noise == "normal":
            y = y + rng.normal(0.0, g.sigma, g.N)
        else:
            half = g.sigma * math.sqrt(3.0)
            y = y + rng.uniform(-half, half, g.N)
    return FinitePopulation(y.astype(float), phi1, phi2)


# --------------------------------------------------------------------------
# draws


@dataclass(frozen=True)
class SampleDraw:
    """Sorted unit indices; ``first`` is the first-phase set for two-phase draws."""

    second: np.ndarray
    first: np.ndarray | None = None


def replicate_seed(master_seed: int, r: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(r,))


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def draw_srswor(N: int, n: int, seed) -> SampleDraw:
    if not 1 <= n <= N:
        raise InvalidDesign(f"need 1 <= n <= N, got n={n}, N={N}")
    idx = _rng(seed).choice(N, size=n, replace=False)
    idx.sort()
    return SampleDraw(idx)


def draw_two_phase(N: int, n_prime: int, n: int, seed) -> SampleDraw:
    """First phase: uniform ``n_prime``-subset; second: uniform ``n``-subset of it."""
    if not 1 <= n < n_prime <= N:
        raise InvalidDesign(f"need 1 <= n < n_prime <= N, got n={n}, n_prime={n_prime}, N={N}")
    rng = _rng(seed)
    first = rng.choice(N, size=n_prime, replace=False)
    second = rng.choice(first, size=n, replace=False)
    first.sort()
    second.sort()
    return SampleDraw(second, first)


# --------------------------------------------------------------------------
# reports


@dataclass
class SimulationRow:
    spec: EstimatorSpec
    R: int
    failures: int
    emp_mean: float
    emp_bias: float
    emp_mse: float
    theory_bias: float
    theory_mse: float

    @property
    def rel_gap(self) -> float:
        return (self.emp_mse - self.theory_mse) / self.theory_mse


@dataclass
class SimulationReport:
    method: str
    design: SamplingDesign
    population_mean: float
    samples: int
    rows: list[SimulationRow]
    summary: PopulationSummary
    # E(statistic) for ybar, p1, p2 (and p1', p2'), Var(ybar), and E(e_a e_b)
    moments: dict[str, float] = field(default_factory=dict)
    error_moments: np.ndarray | None = None

    CSV_HEADER = ("estimator", "R", "failures", "emp_bias", "emp_mse", "theory_bias", "theory_mse", "rel_gap")

    def row(self, text: str) -> SimulationRow:
        for r in self.rows:
            if text in (r.spec.text, r.spec.name):
                return r
        raise KeyError(text)

    def to_csv(self, tolerance: float | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = list(self.CSV_HEADER) + (["pass"] if tolerance is not None else [])
        w.writerow(header)
        for r in self.rows:
            cells = [
                r.spec.text,
                r.R,
                r.failures,
                repr(r.emp_bias),
                repr(r.emp_mse),
                repr(r.theory_bias),
                repr(r.theory_mse),
                repr(r.rel_gap),
            ]
            if tolerance is not None:
                cells.append("pass" if abs(r.rel_gap) <= tolerance else "fail")
            w.writerow(cells)
        return buf.getvalue()

    def to_text(self, tolerance: float | None = None) -> str:
        head = ["estimator", "R", "failures", "emp_bias", "emp_mse", "theory_bias", "theory_mse", "rel_gap"]
        if tolerance is not None:
            head.append("status")
        body = []
        for r in self.rows:
            cells = [
                r.spec.text,
                str(r.R),
                str(r.failures),
                f"{r.emp_bias:.6g}",
                f"{r.emp_mse:.6g}",
                f"{r.theory_bias:.6g}",
                f"{r.theory_mse:.6g}",
                f"{r.rel_gap:+.4%}",
            ]
            if tolerance is not None:
                cells.append("pass" if abs(r.rel_gap) <= tolerance else "fail")
            body.append(cells)
        widths = [max([len(h)] + [len(b[i]) for b in body]) for i, h in enumerate(head)]
        lines = [f"# {self.method}: N={self.design.N} n={self.design.n}"
                 + (f" n_prime={self.design.n_prime}" if self.design.n_prime else "")
                 + f" samples={self.samples}"]
        lines.append("  ".join(h.rjust(w) for h, w in zip(head, widths)))
        lines += ["  ".join(c.rjust(w) for c, w in zip(b, widths)) for b in body]
        return "\n".join(lines) + "\n"


@dataclass
class _Stats:
    """Per-sample statistics, one entry per replicate or enumerated sample."""

    ybar_dev: np.ndarray  # ybar - Ybar, computed from centred y
    p1: np.ndarray
    p2: np.ndarray
    p1_prime: np.ndarray | None = None
    p2_prime: np.ndarray | None = None

    @classmethod
    def empty(cls, size: int, two_phase: bool) -> _Stats:
        z = lambda: np.empty(size)  # noqa: E731
        return cls(z(), z(), z(), z() if two_phase else None, z() if two_phase else None)


def _check_population(pop: FinitePopulation, design: SamplingDesign) -> PopulationSummary:
    summary = summarize_population(pop)
    if design.N != pop.N:
        raise InvalidDesign(f"design N={design.N} does not match population N={pop.N}")
    return summary


def _reduce(
    method: str,
    pop: FinitePopulation,
    summary: PopulationSummary,
    design: SamplingDesign,
    specs: list[EstimatorSpec],
    st: _Stats,
) -> SimulationReport:
    Ybar = summary.mean_y
    coeffs = derived_coefficients(summary, design)
    ybar = Ybar + st.ybar_dev
    total = len(st.ybar_dev)
    rows = []
    for spec in specs:
        resolved = resolve_weights(spec, coeffs)
        if resolved.two_phase:
            if st.p1_prime is None:
                raise InvalidDesign(f"{spec.text} needs a two-phase design (n_prime)")
            values = evaluate_two_phase(resolved, ybar, st.p1, st.p1_prime, st.p2_prime, summary.P2)
        else:
            values = evaluate_single(resolved, ybar, st.p1, st.p2, summary.P1, summary.P2)
        ok = np.isfinite(values)
        good = int(ok.sum())
        if good == 0:
            raise AllReplicatesFailed(f"{spec.text} was undefined on all {total} samples")
        err = values[ok] - Ybar
        rows.append(
            SimulationRow(
                spec=resolved,
                R=good,
                failures=total - good,
                emp_mean=Ybar + float(np.mean(err)),
                emp_bias=float(np.mean(err)),
                emp_mse=float(np.mean(err * err)),
                theory_bias=first_order_bias(resolved, coeffs, Ybar),
                theory_mse=first_order_mse(resolved, coeffs, Ybar),
            )
        )

    moments = {
        "E_ybar": Ybar + float(np.mean(st.ybar_dev)),
        "var_ybar": float(np.mean(st.ybar_dev**2)),
        "E_p1": float(np.mean(st.p1)),
        "E_p2": float(np.mean(st.p2)),
    }
    errors = [st.ybar_dev / Ybar, (st.p1 - summary.P1) / summary.P1, (st.p2 - summary.P2) / summary.P2]
    if st.p1_prime is not None:
        moments["E_p1_prime"] = float(np.mean(st.p1_prime))
        moments["E_p2_prime"] = float(np.mean(st.p2_prime))
        errors += [(st.p1_prime - summary.P1) / summary.P1, (st.p2_prime - summary.P2) / summary.P2]
    E = np.stack(errors)
    error_moments = (E @ E.T) / total
    return SimulationReport(method, design, Ybar, total, rows, summary, moments, error_moments)


# --------------------------------------------------------------------------
# Monte Carlo


@dataclass(frozen=True)
class ReplicationPlan:
    R: int
    design: SamplingDesign
    specs: tuple[EstimatorSpec, ...]
    seed: int = 0

    def __post_init__(self):
        if self.R < 1:
            raise ValueError(f"replicate count must be at least 1, got {self.R}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


def _fill(pop: FinitePopulation, dev: np.ndarray, design: SamplingDesign, seed: int, st: _Stats, lo: int, hi: int):
    N, n, n_prime = design.N, design.n, design.n_prime
    phi1 = pop.phi1
    phi2 = pop.phi2
    for r in range(lo, hi):
        ss = replicate_seed(seed, r)
        if n_prime is None:
            draw = draw_srswor(N, n, ss)
        else:
            draw = draw_two_phase(N, n_prime, n, ss)
            st.p1_prime[r] = int(phi1[draw.first].sum()) / n_prime
            st.p2_prime[r] = int(phi2[draw.first].sum()) / n_prime
        s = draw.second
        st.ybar_dev[r] = dev[s].sum() / n
        st.p1[r] = int(phi1[s].sum()) / n
        st.p2[r] = int(phi2[s].sum()) / n


def run_monte_carlo(pop: FinitePopulation, plan: ReplicationPlan, workers: int = 1) -> SimulationReport:
    """Empirical bias and MSE over ``plan.R`` seeded replicates.

    Replicates where an estimator is undefined (a zero proportion in a
    denominator) are excluded from that estimator's row and counted in
    ``failures``.
    """
    summary = _check_population(pop, plan.design)
    dev = pop.y - summary.mean_y
    st = _Stats.empty(plan.R, plan.design.two_phase)
    workers = max(1, int(workers))
    if workers == 1:
        _fill(pop, dev, plan.design, plan.seed, st, 0, plan.R)
    else:
        bounds = np.linspace(0, plan.R, workers * 4 + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as ex:
            futures = [
                ex.submit(_fill, pop, dev, plan.design, plan.seed, st, int(lo), int(hi))
                for lo, hi in zip(bounds[:-1], bounds[1:])
                if hi > lo
            ]
            for fut in futures:
                fut.result()
    return _reduce("monte-carlo", pop, summary, plan.design, list(plan.specs), st)


# --------------------------------------------------------------------------
# exhaustive enumeration


def enumeration_size(design: SamplingDesign) -> int:
    if design.n_prime is None:
        return math.comb(design.N, design.n)
    return math.comb(design.N, design.n_prime) * math.comb(design.n_prime, design.n)


def _combinations(N: int, k: int) -> np.ndarray:
    count = math.comb(N, k)
    flat = np.fromiter(itertools.chain.from_iterable(itertools.combinations(range(N), k)), dtype=np.intp, count=count * k)
    return flat.reshape(count, k)


def enumerate_exact(
    pop: FinitePopulation,
    design: SamplingDesign,
    specs: list[EstimatorSpec],
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> SimulationReport:
    """Exact design expectations by visiting every equally likely sample.

    For two-phase designs every first-phase ``n_prime``-subset is paired with
    every ``n``-subset of it.
    """
    size = enumeration_size(design)
    if size > cap:
        raise EnumerationTooLarge(f"{size} samples exceed the enumeration cap of {cap}")
    summary = _check_population(pop, design)
    dev = pop.y - summary.mean_y
    phi1 = pop.phi1.astype(float)
    phi2 = pop.phi2.astype(float)
    n = design.n
    if design.n_prime is None:
        second = _combinations(design.N, n)
        first = None
    else:
        first_sets = _combinations(design.N, design.n_prime)
        within = _combinations(design.n_prime, n)
        # (first-phase set, subset) pairs, first-phase index varying slowest
        second = first_sets[:, within].reshape(-1, n)
        first = np.repeat(first_sets, len(within), axis=0)
    st = _Stats(
        ybar_dev=dev[second].sum(axis=1) / n,
        p1=phi1[second].sum(axis=1) / n,
        p2=phi2[second].sum(axis=1) / n,
    )
    if first is not None:
        st.p1_prime = phi1[first].sum(axis=1) / design.n_prime
        st.p2_prime = phi2[first].sum(axis=1) / design.n_prime
    return _reduce("exact", pop, summary, design, list(specs), st)


# --------------------------------------------------------------------------
# comparison


@dataclass(frozen=True)
class ComparisonRow:
    estimator: str
    emp_mse: float
    theory_mse: float
    rel_mse_gap: float
    bias_gap: float
    passed: bool


def compare_theory_empirical(sim: SimulationReport, theory: TheoryReport, tolerance: float) -> list[ComparisonRow]:
    """Relative MSE gap and absolute bias gap per estimator; pass when ``|gap| <= tolerance``."""
    sim_keys = [r.spec.key() for r in sim.rows]
    th_keys = [r.spec.key() for r in theory.rows]
    if sorted(map(repr, sim_keys)) != sorted(map(repr, th_keys)):
        raise MismatchedSpecs("simulation and theory reports cover different estimators")
    by_key = {r.spec.key(): r for r in theory.rows}
    out = []
    for r in sim.rows:
        t = by_key[r.spec.key()]
        gap = (r.emp_mse - t.mse) / t.mse
        out.append(ComparisonRow(r.spec.text, r.emp_mse, t.mse, gap, r.emp_bias - t.bias, abs(gap) <= tolerance))
    return out
