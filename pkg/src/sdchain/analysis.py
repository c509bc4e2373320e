"""Sweeps over N, alpha and T; vanishing temperature T*; power-law fits; equivalence check."""

from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import ed, freefermion as ff
from .entanglement import concurrence_from_correlators, correlator_argument
from .model import Boundary, ChainSpec

log = logging.getLogger(__name__)

ED_GS_MAX_SITES = 24
ED_EQUIV_MAX_SITES = 20

TSTAR_SCAN_RATIO = 1.3
TSTAR_T_CAP = 10.0
TSTAR_REL_WIDTH = 1e-9


class Engine(str, enum.Enum):
    AUTO = "auto"
    ED = "ed"
    FREE_FERMION = "free-fermion"

    @classmethod
    def parse(cls, value: "str | Engine") -> "Engine":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        if key in ("ff", "freefermion"):
            key = "free-fermion"
        return cls(key)


class EngineGuardError(ValueError):
    """Requested engine cannot handle the model (wrong delta or too many sites)."""


class NoConcurrenceError(ValueError):
    pass


class BracketNotFoundError(RuntimeError):
    pass


def resolve_engine(engine: "str | Engine", delta: float, n_sites: int, temperature: float = 0.0) -> Engine:
    """Pick a concrete engine and enforce its size/anisotropy guards."""
    engine = Engine.parse(engine)
    if engine is Engine.AUTO:
        engine = Engine.FREE_FERMION if (delta == 0 and n_sites > ed.MAX_THERMAL_SITES) else Engine.ED
    if engine is Engine.FREE_FERMION and delta != 0:
        raise EngineGuardError(f"free-fermion engine requires delta = 0, got {delta}")
    if engine is Engine.ED:
        limit = ED_GS_MAX_SITES if temperature == 0 else ed.MAX_THERMAL_SITES
        if n_sites > limit:
            raise EngineGuardError(
                f"ED at {'T = 0' if temperature == 0 else 'T > 0'} is limited to N <= {limit}, got N = {n_sites}"
            )
    return engine


@dataclass(frozen=True)
class SweepRow:
    n_sites: int
    alpha: float
    delta: float
    temperature: float
    m: float
    cx: float
    cz: float
    concurrence: float


@dataclass
class SweepResult:
    rows: list[SweepRow] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    def as_dicts(self) -> list[dict]:
        return [asdict(r) for r in self.rows]


def _row(spec: ChainSpec, obs: ed.EdgeObservables) -> SweepRow:
    c = concurrence_from_correlators(obs).value
    return SweepRow(spec.n_sites, spec.alpha, spec.delta, obs.temperature, obs.magnetization_m, obs.cx, obs.cz, c)


class _Evaluator:
    """Edge observables of one spec at any temperature, caching the expensive solve."""

    def __init__(self, spec: ChainSpec, engine: Engine, thermal: bool):
        self.spec = spec
        self.engine = engine
        self._modes = None
        self._ensemble = None
        self._gs = None
        if engine is Engine.FREE_FERMION:
            self._modes = ff.diagonalize(ff.hopping_matrix(spec))
        elif thermal:
            self._ensemble = ed.full_spectrum(spec)

    def __call__(self, temperature: float) -> ed.EdgeObservables:
        if self._modes is not None:
            g = ff.green_function(self._modes, temperature)
            return ed.EdgeObservables(0.0, ff.edge_cx_determinant(g), ff.edge_cz(g), temperature)
        if temperature == 0:
            if self._gs is None:
                self._gs = ed.ground_state(self.spec)[1]
            return ed.edge_observables(self.spec, self._gs, 0.0)
        if self._ensemble is None:
            self._ensemble = ed.full_spectrum(self.spec)
        return ed.edge_observables(self.spec, self._ensemble, temperature)


def _parallel_map(fn: Callable, items: Sequence, threads: int | None) -> list:
    if not threads or threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        # map() yields in input order
        return list(pool.map(fn, items))


def gs_concurrence_vs_n(
    alpha: float,
    delta: float,
    n_list: Iterable[int],
    engine: "str | Engine" = Engine.AUTO,
    j_coupling: float = 1.0,
    threads: int | None = None,
    boundary: "str | Boundary" = Boundary.OPEN_DEFORMED,
) -> SweepResult:
    """Ground-state end-to-end concurrence for each ``N`` in ``n_list``."""
    n_list = list(n_list)
    if len(set(n_list)) != len(n_list):
        raise ValueError("n_list contains duplicates")
    boundary = Boundary.parse(boundary)
    engines = [resolve_engine(engine, delta, n) for n in n_list]
    if boundary is Boundary.UNIFORM_PERIODIC and Engine.FREE_FERMION in engines:
        raise EngineGuardError("the free-fermion engine handles open chains only")

    def one(item):
        n, eng = item
        spec = ChainSpec(n, alpha, delta, j_coupling, boundary)
        return _row(spec, _Evaluator(spec, eng, thermal=False)(0.0))

    rows = _parallel_map(one, list(zip(n_list, engines)), threads)
    return SweepResult(rows, {"engines": [e.value for e in engines]})


def thermal_concurrence_curve(
    spec: ChainSpec,
    t_grid: Sequence[float],
    engine: "str | Engine" = Engine.AUTO,
    threads: int | None = None,
) -> SweepResult:
    """Concurrence at each temperature of a strictly increasing grid.

    ``notes["monotone"]`` records whether the curve is non-increasing (within
    1e-9); violations are listed but not treated as errors.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or len(t) == 0:
        raise ValueError("t_grid must be a non-empty 1-d sequence")
    if np.any(t < 0):
        raise ValueError("temperatures must be non-negative")
    if np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    eng = resolve_engine(engine, spec.delta, spec.n_sites, float(t.max()))
    evaluate = _Evaluator(spec, eng, thermal=bool(np.any(t > 0)))
    rows = _parallel_map(lambda temp: _row(spec, evaluate(float(temp))), list(t), threads)
    conc = np.array([r.concurrence for r in rows])
    bad = [float(t[i + 1]) for i in np.nonzero(np.diff(conc) > 1e-9)[0]]
    return SweepResult(rows, {"engine": eng.value, "monotone": not bad, "increases_at": bad})


@dataclass
class TStarResult:
    tstar: float
    bracket: tuple[float, float]
    g_at_tstar: float
    crossings: list[float]
    evaluations: int
    engine: str


def locate_tstar(spec: ChainSpec, engine: "str | Engine" = Engine.AUTO, t_hint: float = 0.01) -> TStarResult:
    """Temperature where ``g(T) = 2|C^x| - |1/4 + C^z|`` last changes sign.

    A geometric scan (ratio 1.3) from ``t_hint / 10`` finds the first bracket
    and then keeps going for one more decade; the largest crossing seen is
    refined by bisection in ``log T``.
    """
    if not t_hint > 0:
        raise ValueError("t_hint must be positive")
    eng = resolve_engine(engine, spec.delta, spec.n_sites, temperature=t_hint)
    evaluate = _Evaluator(spec, eng, thermal=True)
    count = 0

    def g(temp: float) -> float:
        nonlocal count
        count += 1
        o = evaluate(temp)
        return correlator_argument(o.cx, o.cz, o.magnetization_m)

    if g(0.0) <= 0:
        raise NoConcurrenceError(f"no ground-state concurrence for {spec}; T* is undefined")

    lo = min(t_hint / 10.0, TSTAR_T_CAP)
    g_lo = g(lo)
    steps = 0
    while g_lo <= 0:
        # crossing lies below the scan start
        lo /= TSTAR_SCAN_RATIO
        g_lo = g(lo)
        steps += 1
        if steps > 400:
            raise BracketNotFoundError(f"g(T) <= 0 down to T = {lo:.3e}")

    brackets = []
    t_prev, g_prev = lo, g_lo
    stop_at = TSTAR_T_CAP
    while t_prev < stop_at:
        t_next = min(t_prev * TSTAR_SCAN_RATIO, TSTAR_T_CAP)
        g_next = g(t_next)
        if g_prev > 0 >= g_next:
            brackets.append((t_prev, t_next))
            if len(brackets) == 1:
                stop_at = min(TSTAR_T_CAP, t_next * 10.0)
        t_prev, g_prev = t_next, g_next
        if t_next >= TSTAR_T_CAP:
            break
    if not brackets:
        raise BracketNotFoundError(
            f"no sign change of g(T) between {lo:.3e} and {TSTAR_T_CAP} (last g = {g_prev:.3e})"
        )

    a, b = brackets[-1]
    while b / a - 1.0 > TSTAR_REL_WIDTH:
        mid = math.sqrt(a * b)
        if g(mid) > 0:
            a = mid
        else:
            b = mid
    tstar = math.sqrt(a * b)
    crossings = [math.sqrt(x * y) for x, y in brackets]
    return TStarResult(tstar, (a, b), g(tstar), crossings, count, eng.value)


def find_tstar(spec: ChainSpec, engine: "str | Engine" = Engine.AUTO, t_hint: float = 0.01) -> float:
    return locate_tstar(spec, engine, t_hint).tstar


@dataclass
class TStarFit:
    points: list[tuple[int, float]]
    amplitude_a: float
    exponent_eta: float
    r_squared: float
    residuals: list[float]


def fit_power_law(points: Sequence[tuple[float, float]]) -> TStarFit:
    """Least-squares fit of ``ln T* = ln A - eta ln N``; residuals are in log space."""
    pts = [(n, float(t)) for n, t in points]
    if len(pts) < 3:
        raise ValueError("need at least 3 points")
    n = np.array([p[0] for p in pts], dtype=float)
    t = np.array([p[1] for p in pts])
    if np.any(n <= 0) or np.any(t <= 0):
        raise ValueError("N and T* must be positive")
    x, y = np.log(n), np.log(t)
    if np.ptp(x) == 0:
        raise ValueError("degenerate abscissae: all N are equal")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (intercept + slope * x)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    ss_res = float((resid**2).sum())
    r2 = 1.0 if ss_tot == 0 else min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return TStarFit(pts, float(math.exp(intercept)), float(-slope), r2, resid.tolist())


def tstar_scaling(
    alpha: float,
    delta: float,
    n_list: Iterable[int],
    engine: "str | Engine" = Engine.AUTO,
    threads: int | None = None,
) -> TStarFit:
    """T* for each ``N`` followed by :func:`fit_power_law`."""

    def one(n):
        spec = ChainSpec(n, alpha, delta)
        # edge energy scale ~ sin^alpha(pi/N) is where the crossing sits
        hint = max(math.sin(math.pi / n) ** alpha, 1e-12)
        return n, find_tstar(spec, engine, t_hint=hint)

    return fit_power_law(_parallel_map(one, list(n_list), threads))


@dataclass
class EquivalenceComparison:
    sector: str
    cx: float
    cz: float
    diff_cx: float
    diff_cz: float

    @property
    def max_diff(self) -> float:
        return max(self.diff_cx, self.diff_cz)


@dataclass
class EquivalenceReport:
    n_sites: int
    delta: float
    engine: str
    deformed_cx: float
    deformed_cz: float
    comparisons: list[EquivalenceComparison]

    @property
    def best(self) -> EquivalenceComparison:
        return min(self.comparisons, key=lambda c: c.max_diff)

    @property
    def matching_sector(self) -> str:
        return self.best.sector

    @property
    def max_difference(self) -> float:
        return self.best.max_diff

    def to_dict(self) -> dict:
        d = asdict(self)
        d["matching_sector"] = self.matching_sector
        d["max_difference"] = self.max_difference
        return d


def equivalence_check(n_sites: int, delta: float, engine: "str | Engine" = Engine.AUTO) -> EquivalenceReport:
    """Compare the alpha = 2 chain's edge correlators with ring nearest-neighbour ones.

    For ``delta = 0`` with the free-fermion engine both fermion closures are
    reported; the spin ring itself corresponds to the antiperiodic closure
    when ``N/2`` is even and the periodic one when it is odd.
    """
    if n_sites % 2:
        raise ValueError("equivalence_check needs even N")
    eng = Engine.parse(engine)
    if eng is Engine.AUTO:
        eng = Engine.FREE_FERMION if delta == 0 else Engine.ED
    if eng is Engine.ED and n_sites > ED_EQUIV_MAX_SITES:
        raise EngineGuardError(f"ED equivalence check is limited to N <= {ED_EQUIV_MAX_SITES}")
    eng = resolve_engine(eng, delta, n_sites)

    deformed = ChainSpec(n_sites, 2.0, delta, boundary=Boundary.OPEN_DEFORMED)
    comparisons = []
    if eng is Engine.FREE_FERMION:
        cx, cz = ff.edge_correlators(deformed)
        for antiperiodic in (False, True):
            rcx, rcz = ff.ring_nn_correlators(n_sites, antiperiodic)
            comparisons.append(
                EquivalenceComparison(
                    "antiperiodic" if antiperiodic else "periodic",
                    abs(rcx), rcz, abs(abs(cx) - abs(rcx)), abs(cz - rcz),
                )
            )
    else:
        _, state = ed.ground_state(deformed)
        o = ed.edge_observables(deformed, state)
        cx, cz = o.cx, o.cz
        ring = ChainSpec(n_sites, 0.0, delta, boundary=Boundary.UNIFORM_PERIODIC)
        _, rstate = ed.ground_state(ring)
        r = ed.pair_observables(rstate, 0, 1)
        comparisons.append(
            EquivalenceComparison("spin-ring", abs(r.cx), r.cz, abs(abs(cx) - abs(r.cx)), abs(cz - r.cz))
        )
    return EquivalenceReport(n_sites, delta, eng.value, abs(cx), cz, comparisons)
