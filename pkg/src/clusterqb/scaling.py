"""Size sweeps under a cluster-range rule and power-law fits of P^M(N).

A sweep fixes the quench (angles, beta) and a rule tying the cluster range n
to the chain length N — constant, N^{1/2}, N^{2/3}, N^{1/3}, or N/2 — then
maximizes the charging power at each size.  Fitting log P^M against log N
gives the scaling exponent alpha in P^M = a * N^alpha; alpha > 0 means the
power *per spin* still grows with system size (super-extensive charging).
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .energetics import QuenchSpec
from .model import H1, H2
from .optimizer import DEFAULT_GRID_POINTS, PowerSummary, maximize_power


class Rule(enum.Enum):
    FIXED = "fixed"
    SQRT = "sqrt"
    TWO_THIRDS = "two-thirds"
    ONE_THIRD = "one-third"
    HALF_N = "half"


class Rounding(enum.Enum):
    NEAREST = "nearest"
    EXACT_ONLY = "exact-only"


# rule -> exponent gamma in n = N^gamma (None: not a pure power rule)
_GAMMA = {
    Rule.SQRT: 0.5,
    Rule.TWO_THIRDS: 2.0 / 3.0,
    Rule.ONE_THIRD: 1.0 / 3.0,
}

# reference exponents for the FIXED(15) ground-state sweeps; reports print
# fitted values next to these for comparison (not pass/fail thresholds)
REFERENCE_FIXED_ALPHA = {H1: 0.8327, H2: 0.8933}


def _iroot(N: int, k: int) -> int:
    """floor(N^(1/k)) computed exactly for positive integers."""
    m = round(N ** (1.0 / k))
    while (m + 1) ** k <= N:
        m += 1
    while m > 0 and m**k > N:
        m -= 1
    return m


@dataclass(frozen=True)
class ClusterRule:
    """How the cluster range n follows the chain length N."""

    rule: Rule
    n_fixed: int | None = None
    rounding: Rounding = Rounding.NEAREST

    def __post_init__(self) -> None:
        if self.rule is Rule.FIXED:
            if self.n_fixed is None or self.n_fixed < 1:
                raise ValueError("FIXED rule requires n_fixed >= 1")
        elif self.n_fixed is not None:
            raise ValueError(f"n_fixed is only meaningful for FIXED, not {self.rule}")

    @classmethod
    def fixed(cls, n: int) -> "ClusterRule":
        return cls(Rule.FIXED, n_fixed=n)

    def resolve(self, N: int) -> int:
        """Cluster range for one chain length; raises on rule violations."""
        if self.rule is Rule.FIXED:
            n = self.n_fixed
        elif self.rule is Rule.HALF_N:
            if self.rounding is Rounding.EXACT_ONLY and N % 2:
                raise ValueError(f"N = {N} is odd; N/2 is not an integer")
            n = round(N / 2)
        else:
            if self.rounding is Rounding.EXACT_ONLY:
                # N^{1/2} integer <=> N a perfect square; N^{2/3} and N^{1/3}
                # integer <=> N a perfect cube (m^3 -> m^2 resp. m)
                if self.rule is Rule.SQRT:
                    m = _iroot(N, 2)
                    if m * m != N:
                        raise ValueError(f"N = {N} is not a perfect square")
                    n = m
                else:
                    m = _iroot(N, 3)
                    if m**3 != N:
                        raise ValueError(f"N = {N} is not a perfect cube")
                    n = m * m if self.rule is Rule.TWO_THIRDS else m
            else:
                n = round(N ** _GAMMA[self.rule])
        if not 1 <= n < N:
            raise ValueError(f"rule {self.rule.value} gives n = {n} outside 1 <= n < N = {N}")
        return int(n)


@dataclass(frozen=True)
class SweepRow:
    """One sweep entry; `error` set (and summary None) for rejected sizes."""

    N: int
    n: int | None
    summary: PowerSummary | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _one_row(args) -> SweepRow:
    kind, quench, N, n, window, grid_points = args
    battery, charger = quench.model_pair(kind, N, n)
    summary = maximize_power(battery, charger, quench.beta, window, grid_points)
    return SweepRow(N=N, n=n, summary=summary)


def sweep(
    kind: str,
    quench: QuenchSpec,
    rule: ClusterRule,
    sizes,
    window: tuple[float, float] | None = None,
    grid_points: int = DEFAULT_GRID_POINTS,
    jobs: int = 1,
) -> list[SweepRow]:
    """Maximize power at each size, ascending N; rejected sizes stay as rows."""
    sizes = [int(N) for N in sizes]
    if not sizes:
        raise ValueError("sweep needs at least one size")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError(f"sizes must be strictly ascending, got {sizes}")

    tasks: list[tuple | SweepRow] = []
    for N in sizes:
        try:
            n = rule.resolve(N)
        except ValueError as exc:
            tasks.append(SweepRow(N=N, n=None, summary=None, error=str(exc)))
            continue
        tasks.append((kind, quench, N, n, window, grid_points))

    pending = [t for t in tasks if isinstance(t, tuple)]
    if jobs > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            done = iter(pool.map(_one_row, pending))
    else:
        done = iter(map(_one_row, pending))
    return [t if isinstance(t, SweepRow) else next(done) for t in tasks]


@dataclass(frozen=True)
class ScalingFit:
    points: tuple[tuple[int, float], ...]
    a: float
    alpha: float
    r_squared: float
    residuals: np.ndarray


def fit_power_law(points) -> ScalingFit:
    """OLS of log p_max on log N; returns a = exp(intercept), alpha = slope."""
    pts = [(int(N), float(p)) for N, p in points]
    if len(pts) < 3:
        raise ValueError(f"power-law fit needs >= 3 points, got {len(pts)}")
    if len({N for N, _ in pts}) != len(pts):
        raise ValueError("power-law fit needs distinct N values")
    if any(p <= 0 for _, p in pts):
        raise ValueError("power-law fit needs all p_max > 0")
    logN = np.log([N for N, _ in pts])
    logP = np.log([p for _, p in pts])
    alpha, intercept = np.polyfit(logN, logP, 1)
    residuals = logP - (intercept + alpha * logN)
    ss_res = float(residuals @ residuals)
    ss_tot = float(np.sum((logP - logP.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return ScalingFit(
        points=tuple(pts),
        a=float(math.exp(intercept)),
        alpha=float(alpha),
        r_squared=min(max(r2, 0.0), 1.0),
        residuals=residuals,
    )


def fit_sweep(rows: list[SweepRow]) -> ScalingFit:
    """Fit the accepted rows of a sweep."""
    return fit_power_law([(r.N, r.summary.p_max) for r in rows if r.ok])


def preset_sizes(rule: Rule, lo: int | None = None, hi: int | None = None) -> list[int]:
    """Default N grids compatible with each rule under EXACT_ONLY rounding.

    Squares for FIXED/SQRT, cubes for the fractional-power rules, evens in
    steps of 20 for HALF_N.  lo/hi bound the (inclusive) range.
    """
    if rule in (Rule.FIXED, Rule.SQRT):
        lo = 169 if lo is None else lo
        hi = 324 if hi is None else hi
        return [m * m for m in range(math.isqrt(lo - 1) + 1, math.isqrt(hi) + 1)]
    if rule in (Rule.TWO_THIRDS, Rule.ONE_THIRD):
        lo = 27 if lo is None else lo
        hi = 343 if hi is None else hi
        return [m**3 for m in range(2, 8) if lo <= m**3 <= hi]
    lo = 100 if lo is None else lo
    hi = 200 if hi is None else hi
    return list(range(lo, hi + 1, 20))
