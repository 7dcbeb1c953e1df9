"""Walk-based estimation of spherical averages and maximal functions.

A uniform radius-n sphere sample is a length-n non-backtracking letter
walk, so one long walk evaluated at intermediate steps estimates a
whole window of chain times at once: with the exact anchor density
f at time -2m, the time-t value pi_* f_t(x) equals the expectation of
the anchor over lifted walks of length t + 2m.

Randomness is counter-based throughout: every batch of walks draws
from a Philox stream keyed by (seed, tag, point id, batch index), so
results are reproducible bit for bit regardless of scheduling, and
adaptive early stopping stays deterministic because it only looks at
already-reduced statistics.

Confidence rules (99% unless noted): exact Bernoulli (Clopper-Pearson)
for two-point sample distributions, which covers the rare-event anchor
cells including zero-hit ones; normal approximation otherwise;
Hoeffding fallback when the empirical variance is zero but a value
bound is declared; a constant sample is reported exactly.  Summed
two-part estimates (glued surveys) use per-part confidence 99.5%.

Budget control is deterministic on purpose: budgets are expressed in
walk counts, never wall-clock time, so reruns are byte-identical.  The
rare-event heuristic budget (100 * 3**(2m + 2 n_max) walks) is
recorded and cells with no hits are flagged, never silently guessed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.stats import beta as _beta
from scipy.stats import norm as _norm

from .ball import INTERIOR, KIND_NAMES, BallPoint, BallSystem
from .cylinders import ancient_density, anchor_shape
from .errors import ConfigError
from .prng import DOMAIN_STRATUM, DOMAIN_WALK, mix, splitmix64
from .tower import COPY_1, COPY_2, TowerPoint, TowerSystem, make_levels, tower_alphas
from .words import INV, SUCC, enumerate_sphere, invert, sphere_size

DELTA = 0.01  # two-sided 99% confidence
TAG_MC, TAG_PROFILE, TAG_DIAG, TAG_DELAYED, TAG_COUPLING = 1, 2, 3, 4, 5

_Z_CACHE: dict = {}


def _z_quantile(delta: float) -> float:
    z = _Z_CACHE.get(delta)
    if z is None:
        z = float(_norm.ppf(1 - delta / 2))
        _Z_CACHE[delta] = z
    return z


def bernoulli_bounds(hits: int, walks: int, delta: float = DELTA) -> tuple:
    """Exact Clopper-Pearson bounds on a Bernoulli rate."""
    if hits == 0:
        lo = 0.0
    else:
        lo = float(_beta.ppf(delta / 2, hits, walks - hits + 1))
    if hits == walks:
        hi = 1.0
    else:
        hi = float(_beta.ppf(1 - delta / 2, hits + 1, walks - hits))
    return lo, hi


def hoeffding_half_width(bound: float, walks: int, delta: float = DELTA) -> float:
    return bound * math.sqrt(math.log(2.0 / delta) / (2.0 * walks))


@dataclass
class AvgEstimate:
    """One Monte Carlo average with its confidence interval."""

    n: int
    mean: float
    half_width: float
    lo: float
    hi: float
    walks: int
    method: str
    hits: int = 0

    def __post_init__(self) -> None:
        if self.walks <= 0:
            raise ValueError("walks must be positive")


class _Cell:
    """Accumulator for one (evaluation step, component) pair."""

    __slots__ = ("walks", "hits", "vsum", "vsumsq", "value", "mixed")

    def __init__(self) -> None:
        self.walks = 0
        self.hits = 0
        self.vsum = 0.0
        self.vsumsq = 0.0
        self.value = None  # the single nonzero value seen, if unique
        self.mixed = False

    def add(self, v: float) -> None:
        if v:
            self.hits += 1
            self.vsum += v
            self.vsumsq += v * v
            if self.value is None:
                self.value = v
            elif v != self.value:
                self.mixed = True


def cell_to_estimate(
    cell: _Cell,
    n: int,
    delta: float = DELTA,
    value_hint: float | None = None,
    value_bound: float | None = None,
) -> AvgEstimate:
    """Apply the declared CI rules to one accumulator."""
    walks = cell.walks
    mean = cell.vsum / walks
    if not cell.mixed:
        v = cell.value if cell.value is not None else value_hint
        if v is not None and cell.hits < walks:
            # two-point sample distribution {0, v}: exact Bernoulli
            plo, phi = bernoulli_bounds(cell.hits, walks, delta)
            lo, hi = v * plo, v * phi
            if v < 0:
                lo, hi = hi, lo
            return AvgEstimate(
                n, mean, max(mean - lo, hi - mean), lo, hi, walks, "bernoulli", cell.hits
            )
        if v is None:
            # every sample was zero and no scale is known
            return AvgEstimate(n, 0.0, 0.0, 0.0, 0.0, walks, "degenerate", 0)
        # constant sample; exact unless a spread bound demands Hoeffding
        if value_bound is not None and value_bound != v:
            hw = hoeffding_half_width(value_bound, walks, delta)
            return AvgEstimate(n, mean, hw, mean - hw, mean + hw, walks, "hoeffding", cell.hits)
        return AvgEstimate(n, mean, 0.0, mean, mean, walks, "constant", cell.hits)
    var = max(cell.vsumsq - walks * mean * mean, 0.0) / (walks - 1)
    if var == 0.0:
        if value_bound is not None:
            hw = hoeffding_half_width(value_bound, walks, delta)
            return AvgEstimate(n, mean, hw, mean - hw, mean + hw, walks, "hoeffding", cell.hits)
        return AvgEstimate(n, mean, 0.0, mean, mean, walks, "constant", cell.hits)
    hw = _z_quantile(delta) * math.sqrt(var / walks)
    return AvgEstimate(n, mean, hw, mean - hw, mean + hw, walks, "normal", cell.hits)


# -- walk engine --------------------------------------------------------


def run_campaign(
    make_start: Callable[[], object],
    stepper: Callable[[object, int], None],
    plan: list,
    n_cells: int,
    length: int,
    rng_key: int,
    schedule: Sequence[int],
    after_batch: Callable[[list, int], bool] | None = None,
) -> list:
    """Drive batches of lifted walks and feed the evaluation plan.

    ``plan[step]`` is None or a list of ``(cell index, fn)`` where
    ``fn(state, slot)`` returns the sample value at that step.  The
    walk law: slot 0 uniform over the four letters, each next slot
    uniform over the three non-inverse letters, state moved by the
    inverse of the previous slot.  Stops early when ``after_batch``
    returns True (a deterministic function of the accumulated cells).
    """
    cells = [_Cell() for _ in range(n_cells)]
    walks_done = 0
    inv = INV
    succ = SUCC
    for batch_index, batch in enumerate(schedule):
        gen = np.random.Generator(np.random.Philox(key=mix(rng_key, batch_index)))
        firsts = gen.integers(0, 4, size=batch).tolist()
        if length:
            rows = gen.integers(0, 3, size=(batch, length)).tolist()
        else:
            rows = [[]] * batch
        plan0 = plan[0]
        for w in range(batch):
            state = make_start()
            s = firsts[w]
            if plan0 is not None:
                for ci, fn in plan0:
                    cells[ci].add(fn(state, s))
            row = rows[w]
            for i in range(length):
                stepper(state, inv[s])
                s = succ[s][row[i]]
                ev = plan[i + 1]
                if ev is not None:
                    for ci, fn in ev:
                        cells[ci].add(fn(state, s))
        walks_done += batch
        for c in cells:
            c.walks = walks_done
        if after_batch is not None and after_batch(cells, walks_done):
            break
    return cells


def _schedule(total: int, batch: int) -> list:
    full, rem = divmod(total, batch)
    return [batch] * full + ([rem] if rem else [])


def _map_tasks(fn, tasks, workers: int):
    """Run per-point tasks, optionally on a process pool.

    Results are reduced in task order and every task draws from its
    own counter-based stream, so the outcome is identical for any
    worker count; workers only change the wall-clock.
    """
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    import multiprocessing

    with multiprocessing.Pool(min(workers, len(tasks))) as pool:
        return pool.map(fn, tasks, chunksize=1)


# -- point averages -----------------------------------------------------


def mc_avg(
    system: BallSystem,
    f: Callable[[BallPoint], object],
    point: BallPoint,
    n: int,
    walks: int,
    point_id: int = 0,
    *,
    batch: int = 4096,
    value_bound: float | None = None,
    delta: float = DELTA,
) -> AvgEstimate:
    """Monte Carlo spherical average of f at radius n.

    Each walk is one uniform sphere sample g, evaluated as
    f(T_{g^-1} point); unbiased for the radius-n average.
    """
    if walks < 1:
        raise ConfigError("walks must be >= 1")
    if n == 0:
        v = float(f(point.copy()))
        return AvgEstimate(0, v, 0.0, v, v, walks, "constant", walks)
    carry = system.carry_bound
    plan = [None] * (n + 1)
    plan[n] = [(0, lambda pt, s: float(f(pt)))]
    cells = run_campaign(
        point.copy,
        lambda pt, letter: pt.shift(letter, carry),
        plan,
        1,
        n,
        mix(system.seed, DOMAIN_WALK, TAG_MC, point_id),
        _schedule(walks, min(batch, walks)),
    )
    return cell_to_estimate(cells[0], n, delta, value_bound=value_bound)


def exact_avg_small(
    system: BallSystem,
    f: Callable[[BallPoint], object],
    point: BallPoint,
    n: int,
):
    """Exact spherical average by full sphere enumeration."""
    total = None
    count = 0
    for g in enumerate_sphere(n, cap=system.enumeration_cap):
        q = point.copy().apply_word(invert(g), system.carry_bound)
        v = f(q)
        total = v if total is None else total + v
        count += 1
    assert count == sphere_size(n)
    return total / count


# -- maximal profiles ----------------------------------------------------


@dataclass
class ProfileEntry:
    n: int
    time: int
    kind: str  # "exact" or "mc"
    estimate: float
    lo: float
    hi: float
    walks: int
    hits: int
    method: str
    underpowered: bool = False


@dataclass
class PointProfile:
    point_id: int
    stratum: str
    depth: int
    entries: list
    sup_estimate: float
    sup_lo: float
    passed: bool
    first_pass_n: int | None
    walks_used: int
    exact_pass: bool


def _anchor_eval(depth: int, value: float):
    def fn(pt: BallPoint, s: int) -> float:
        if pt.kind == INTERIOR and pt.depth == depth and s == pt.word.letters[0]:
            return value
        return 0.0

    return fn


def exact_negative_time_value(point: BallPoint, t: int) -> float:
    """pi_* of the chain at negative time t: 3**|t| on stratum |t|."""
    if t >= 0:
        raise ValueError("exact chain values exist at negative times only")
    if point.kind == INTERIOR and point.depth == -t:
        return float(3 ** (-t))
    return 0.0


def maximal_profile(
    system: BallSystem,
    point: BallPoint,
    n_lo: int,
    n_hi: int,
    *,
    m: int = 1,
    walks_min: int = 1024,
    walks_max: int = 4096,
    batch: int = 1024,
    threshold: float | None = None,
    point_id: int = 0,
    stratum: str | None = None,
    delta: float = DELTA,
) -> PointProfile:
    """Chain profile pi_* f_{2n}(point) over the window n_lo..n_hi.

    Negative times are exact; nonnegative times ride one walk campaign
    against the exact anchor at time -2m, evaluated at intermediate
    steps 2n + 2m.  With a threshold, batches stop as soon as some
    entry's confidence lower bound clears it; exact entries that clear
    it skip all but a minimal campaign.
    """
    if n_lo > n_hi:
        raise ConfigError("empty window")
    if m < 1:
        raise ConfigError("anchor offset m must be >= 1")
    anchor_depth, anchor_value = anchor_shape(ancient_density(-2 * m))
    anchor_value = float(anchor_value)
    entries: list[ProfileEntry] = []
    exact_pass = False
    for n in range(n_lo, min(n_hi, -1) + 1):
        v = exact_negative_time_value(point, 2 * n)
        entries.append(ProfileEntry(n, 2 * n, "exact", v, v, v, 0, 0, "exact"))
        if threshold is not None and v >= threshold:
            exact_pass = True

    mc_ns = list(range(max(n_lo, 0), n_hi + 1))
    walks_used = 0
    if mc_ns:
        length = 2 * mc_ns[-1] + 2 * m
        plan: list = [None] * (length + 1)
        fn = _anchor_eval(anchor_depth, anchor_value)
        for ci, n in enumerate(mc_ns):
            plan[2 * n + 2 * m] = [(ci, fn)]
        target = walks_min if exact_pass else walks_max
        carry = system.carry_bound

        def stop(cells: list, done: int) -> bool:
            if done < walks_min:
                return False
            if threshold is None:
                return False
            for c in cells:
                if c.hits and anchor_value * bernoulli_bounds(c.hits, c.walks, delta)[0] >= threshold:
                    return True
            return False

        cells = run_campaign(
            point.copy,
            lambda pt, letter: pt.shift(letter, carry),
            plan,
            len(mc_ns),
            length,
            mix(system.seed, DOMAIN_WALK, TAG_PROFILE, point_id, m),
            _schedule(target, batch),
            stop,
        )
        walks_used = cells[0].walks
        for ci, n in enumerate(mc_ns):
            est = cell_to_estimate(cells[ci], n, delta, value_hint=anchor_value)
            entries.append(
                ProfileEntry(
                    n,
                    2 * n,
                    "mc",
                    est.mean,
                    est.lo,
                    est.hi,
                    est.walks,
                    est.hits,
                    est.method,
                    underpowered=est.hits == 0,
                )
            )

    entries.sort(key=lambda e: e.n)
    sup_est = max(e.estimate for e in entries)
    sup_lo = max(e.lo for e in entries)
    passed = threshold is not None and sup_lo >= threshold
    first_pass_n = None
    if threshold is not None:
        passing = [abs(e.n) for e in entries if e.lo >= threshold]
        if passing:
            first_pass_n = min(passing)
    return PointProfile(
        point_id=point_id,
        stratum=stratum or KIND_NAMES[point.kind],
        depth=point.depth,
        entries=entries,
        sup_estimate=sup_est,
        sup_lo=sup_lo,
        passed=passed,
        first_pass_n=first_pass_n,
        walks_used=walks_used,
        exact_pass=exact_pass,
    )


# -- stratified population sampling --------------------------------------


def stratified_allocation(points: int, depth_cap: int = 6) -> list:
    """Largest-remainder allocation over the exact stratum law."""
    strata = [("boundary_a", Fraction(1, 4)), ("boundary_b", Fraction(1, 4))]
    for d in range(1, depth_cap):
        strata.append((f"interior_{d}", Fraction(1, 3**d)))
    strata.append(("interior_tail", Fraction(3, 2) / 3**depth_cap))
    assert sum(m for _, m in strata) == 1
    quotas = [(name, points * m) for name, m in strata]
    alloc = {name: int(q) for name, q in quotas}
    remaining = points - sum(alloc.values())
    by_frac = sorted(quotas, key=lambda kv: (kv[1] - int(kv[1]), kv[0]), reverse=True)
    for name, _ in by_frac[:remaining]:
        alloc[name] += 1
    return [(name, alloc[name]) for name, _ in strata if alloc[name] > 0]


def _stratum_point(system: BallSystem, point_id: int, stratum: str, depth_cap: int = 6) -> BallPoint:
    from .ball import BOUND_A, BOUND_B

    if stratum == "boundary_a":
        return system.make_point(point_id, BOUND_A, 0)
    if stratum == "boundary_b":
        return system.make_point(point_id, BOUND_B, 0)
    if stratum == "interior_tail":
        d = depth_cap
        key = system.point_key(point_id)
        i = 0
        while splitmix64(mix(key, DOMAIN_STRATUM, 1000 + i)) < (1 << 64) // 3:
            d += 1
            i += 1
        return system.make_point(point_id, INTERIOR, d)
    depth = int(stratum.split("_")[1])
    return system.make_point(point_id, INTERIOR, depth)


def _profile_task(args):
    system, point, kwargs = args
    return maximal_profile(system, point, **kwargs)


def _delayed_task(args):
    tower, point, kwargs = args
    return delayed_profile(tower, point, **kwargs)


@dataclass
class SurveyReport:
    points: int
    window: tuple
    threshold: float
    pass_fraction: float
    pass_fraction_lo: float
    profiles: list
    stratification: list
    heuristic_walks: int
    budget_capped: bool
    walks_total: int
    underpowered_cells: int
    m: int


def population_survey(
    system: BallSystem,
    *,
    n_lo: int,
    n_hi: int,
    points: int,
    eps: float,
    threshold: float | None = None,
    m: int = 1,
    walks_min: int = 1024,
    walks_max: int = 4096,
    batch: int = 1024,
    stratified: bool = True,
    depth_cap: int = 6,
    point_id_base: int = 10_000,
    delta: float = DELTA,
    workers: int = 1,
) -> SurveyReport:
    """Maximal profiles over a sampled population.

    A point passes when its window sup, reduced by the confidence
    allowance (the interval lower bound), clears the threshold
    (default 1 - eps).  The survey pass criterion compares the passing
    fraction to 1 - eps.
    """
    if threshold is None:
        threshold = 1.0 - eps
    if stratified:
        allocation = stratified_allocation(points, depth_cap)
        roster = []
        pid = point_id_base
        for name, count in allocation:
            for _ in range(count):
                roster.append((pid, name))
                pid += 1
    else:
        allocation = [("natural", points)]
        roster = [(point_id_base + i, None) for i in range(points)]

    tasks = []
    for pid, name in roster:
        pt = (
            _stratum_point(system, pid, name, depth_cap)
            if name is not None
            else system.sample_point(pid)
        )
        tasks.append(
            (
                system,
                pt,
                dict(
                    n_lo=n_lo,
                    n_hi=n_hi,
                    m=m,
                    walks_min=walks_min,
                    walks_max=walks_max,
                    batch=batch,
                    threshold=threshold,
                    point_id=pid,
                    stratum=name,
                    delta=delta,
                ),
            )
        )
    profiles = _map_tasks(_profile_task, tasks, workers)
    passed = sum(1 for p in profiles if p.passed)
    frac = passed / points
    frac_lo = bernoulli_bounds(passed, points, delta)[0]
    n_max = max(abs(n_lo), abs(n_hi))
    heuristic = 100 * 3 ** (2 * m + 2 * n_max)
    return SurveyReport(
        points=points,
        window=(n_lo, n_hi),
        threshold=threshold,
        pass_fraction=frac,
        pass_fraction_lo=frac_lo,
        profiles=profiles,
        stratification=allocation,
        heuristic_walks=heuristic,
        budget_capped=walks_max < heuristic,
        walks_total=sum(p.walks_used for p in profiles),
        underpowered_cells=sum(
            1 for p in profiles for e in p.entries if e.underpowered
        ),
        m=m,
    )


@dataclass
class WindowChoice:
    found: bool
    n: int | None
    level: float
    fraction_at_n: float
    best_fraction: float
    curve: list
    survey: SurveyReport


def choose_window(
    system: BallSystem,
    *,
    eps: float,
    n_max: int,
    level: float | None = None,
    **survey_kwargs,
) -> WindowChoice:
    """Smallest symmetric window passing the population survey.

    The survey runs once over the widest window; smaller windows are
    judged from each point's smallest passing index, which is monotone
    by construction (a sup over a larger window dominates).  ``level``
    defaults to eps/3, the projection-step choice; callers may pin it
    to eps itself for coarser certification.
    """
    if level is None:
        level = eps / 3.0
    threshold = 1.0 - level
    target = 1.0 - level
    survey = population_survey(
        system,
        n_lo=-n_max,
        n_hi=n_max,
        eps=level,
        threshold=threshold,
        **survey_kwargs,
    )
    points = survey.points
    curve = []
    for n in range(n_max + 1):
        cnt = sum(
            1
            for p in survey.profiles
            if p.first_pass_n is not None and p.first_pass_n <= n
        )
        curve.append(cnt / points)
    assert all(curve[i] <= curve[i + 1] + 1e-12 for i in range(len(curve) - 1))
    chosen = next((n for n, f in enumerate(curve) if f >= target), None)
    return WindowChoice(
        found=chosen is not None,
        n=chosen,
        level=level,
        fraction_at_n=curve[chosen] if chosen is not None else 0.0,
        best_fraction=curve[-1],
        curve=curve,
        survey=survey,
    )


# -- glued-tower estimators ----------------------------------------------


def _copy_component_eval(depth: int, value: float, bit: int):
    def fn(tp: TowerPoint, s: int) -> float:
        base = tp.base
        if (
            tp.bits[0] == bit
            and base.kind == INTERIOR
            and base.depth == depth
            and s == base.word.letters[0]
        ):
            return value
        return 0.0

    return fn


@dataclass
class DelayedEntry:
    time: int
    origin_estimate: float  # copy-1-origin component (walk)
    origin_lo: float
    origin_hits: int
    delayed_kind: str  # "exact" or "mc"
    delayed_estimate: float  # delayed copy-2 component
    delayed_lo: float
    delayed_hits: int
    total_estimate: float
    total_lo: float


@dataclass
class DelayedProfile:
    point_id: int
    stratum: str
    depth: int
    entries: list
    sup_estimate: float
    sup_lo: float
    passed_estimate: bool
    passed_conservative: bool
    walks_used: int
    exact_pass: bool


@dataclass
class DelayedSurveyReport:
    points: int
    delay: int
    kappa: str
    window: tuple
    threshold: float
    pass_fraction: float
    pass_fraction_conservative: float
    pass_fraction_lo: float
    profiles: list
    stratification: list
    walks_total: int
    m: int


def delayed_profile(
    tower: TowerSystem,
    point: TowerPoint,
    *,
    n_halfwidth: int,
    m: int = 1,
    walks_min: int = 1024,
    walks_max: int = 4096,
    batch: int = 1024,
    threshold: float = 0.6,
    point_id: int = 0,
    stratum: str | None = None,
    delta: float = DELTA,
) -> DelayedProfile:
    """Copy-2 chain profile around the delayed midpoint.

    The lifted chain splits into the copy-1-origin component (walks
    against the copy-1 anchor at time -2m) and the delayed copy-2
    component, which is exact while its own time is negative and walk
    estimated from its anchor at time 2M - 2m afterward.  One campaign
    serves both component schedules.  Per-part confidence delta/2 keeps
    the summed interval at the declared level.
    """
    if tower.level_count != 1:
        raise ConfigError("delayed profiles are defined for one-level towers")
    M = tower.levels[0].delay
    anchor_depth, anchor_value_f = anchor_shape(ancient_density(-2 * m))
    v1 = float(anchor_value_f)
    v2 = v1 / 2.0
    times = list(range(2 * M - 2 * n_halfwidth, 2 * M + 2 * n_halfwidth + 1))
    base_pt = point.base
    half_delta = delta / 2.0

    exact_delayed = {}
    exact_pass = False
    for t in times:
        if t - 2 * M < 0:
            v = (
                0.5 * float(3 ** (2 * M - t))
                if base_pt.kind == INTERIOR and base_pt.depth == 2 * M - t
                else 0.0
            )
            exact_delayed[t] = v
            if v >= threshold:
                exact_pass = True

    length = times[-1] + 2 * m
    plan: list = [None] * (length + 1)
    origin_fn = _copy_component_eval(anchor_depth, v1, COPY_1)
    delayed_fn = _copy_component_eval(anchor_depth, v2, COPY_2)
    cell_of_origin = {}
    cell_of_delayed = {}
    ci = 0
    for t in times:
        step = t + 2 * m
        plan[step] = [(ci, origin_fn)]
        cell_of_origin[t] = ci
        ci += 1
    for t in times:
        if t not in exact_delayed:
            step = t - 2 * M + 2 * m
            entry = (ci, delayed_fn)
            if plan[step] is None:
                plan[step] = [entry]
            else:
                plan[step].append(entry)
            cell_of_delayed[t] = ci
            ci += 1

    target = walks_min if exact_pass else walks_max

    def stop(cells: list, done: int) -> bool:
        if done < walks_min:
            return False
        for t in times:
            c1 = cells[cell_of_origin[t]]
            lo1 = v1 * bernoulli_bounds(c1.hits, c1.walks, half_delta)[0] if c1.hits else 0.0
            if t in exact_delayed:
                lo2 = exact_delayed[t]
            else:
                c2 = cells[cell_of_delayed[t]]
                lo2 = v2 * bernoulli_bounds(c2.hits, c2.walks, half_delta)[0] if c2.hits else 0.0
            if lo1 + lo2 >= threshold:
                return True
        return False

    cells = run_campaign(
        point.copy,
        tower.shift_fast,
        plan,
        ci,
        length,
        mix(tower.base.seed, DOMAIN_WALK, TAG_DELAYED, point_id, m),
        _schedule(target, batch),
        stop,
    )
    walks_used = cells[0].walks if cells else 0

    entries = []
    for t in times:
        e1 = cell_to_estimate(cells[cell_of_origin[t]], t, half_delta, value_hint=v1)
        if t in exact_delayed:
            d_kind = "exact"
            d_est = d_lo = exact_delayed[t]
            d_hits = 0
        else:
            e2 = cell_to_estimate(cells[cell_of_delayed[t]], t, half_delta, value_hint=v2)
            d_kind, d_est, d_lo, d_hits = "mc", e2.mean, e2.lo, e2.hits
        entries.append(
            DelayedEntry(
                time=t,
                origin_estimate=e1.mean,
                origin_lo=e1.lo,
                origin_hits=e1.hits,
                delayed_kind=d_kind,
                delayed_estimate=d_est,
                delayed_lo=d_lo,
                delayed_hits=d_hits,
                total_estimate=e1.mean + d_est,
                total_lo=e1.lo + d_lo,
            )
        )
    sup_est = max(e.total_estimate for e in entries)
    sup_lo = max(e.total_lo for e in entries)
    return DelayedProfile(
        point_id=point_id,
        stratum=stratum or KIND_NAMES[base_pt.kind],
        depth=base_pt.depth,
        entries=entries,
        sup_estimate=sup_est,
        sup_lo=sup_lo,
        passed_estimate=sup_est > threshold,
        passed_conservative=sup_lo >= threshold,
        walks_used=walks_used,
        exact_pass=exact_pass,
    )


def delayed_survey(
    tower: TowerSystem,
    *,
    n_halfwidth: int,
    points: int,
    threshold: float = 0.6,
    m: int = 1,
    walks_min: int = 1024,
    walks_max: int = 4096,
    batch: int = 1024,
    depth_cap: int = 6,
    point_id_base: int = 40_000,
    delta: float = DELTA,
    workers: int = 1,
) -> DelayedSurveyReport:
    """Copy-2 population survey in the delayed window."""
    allocation = stratified_allocation(points, depth_cap)
    tasks = []
    pid = point_id_base
    for name, count in allocation:
        for _ in range(count):
            base_pt = _stratum_point(tower.base, pid, name, depth_cap)
            tp = TowerPoint(base_pt, [COPY_2])
            tasks.append(
                (
                    tower,
                    tp,
                    dict(
                        n_halfwidth=n_halfwidth,
                        m=m,
                        walks_min=walks_min,
                        walks_max=walks_max,
                        batch=batch,
                        threshold=threshold,
                        point_id=pid,
                        stratum=name,
                        delta=delta,
                    ),
                )
            )
            pid += 1
    profiles = _map_tasks(_delayed_task, tasks, workers)
    passed_est = sum(1 for p in profiles if p.passed_estimate)
    passed_cons = sum(1 for p in profiles if p.passed_conservative)
    M = tower.levels[0].delay
    return DelayedSurveyReport(
        points=points,
        delay=M,
        kappa=str(tower.levels[0].kappa),
        window=(2 * M - 2 * n_halfwidth, 2 * M + 2 * n_halfwidth),
        threshold=threshold,
        pass_fraction=passed_est / points,
        pass_fraction_conservative=passed_cons / points,
        pass_fraction_lo=bernoulli_bounds(passed_est, points, delta)[0],
        profiles=profiles,
        stratification=allocation,
        walks_total=sum(p.walks_used for p in profiles),
        m=m,
    )


def _mixing_task(args):
    tower, tp, pid, times, m, walks, batch, anchor_depth, v1 = args
    origin_fn = _copy_component_eval(anchor_depth, v1, COPY_1)

    def any_fn(tpt: TowerPoint, s: int) -> float:
        b = tpt.base
        if b.kind == INTERIOR and b.depth == anchor_depth and s == b.word.letters[0]:
            return v1
        return 0.0

    k = len(times)
    length = times[-1] + 2 * m
    plan: list = [None] * (length + 1)
    for i, t in enumerate(times):
        plan[t + 2 * m] = [(2 * i, origin_fn), (2 * i + 1, any_fn)]
    cells = run_campaign(
        tp.copy,
        tower.shift_fast,
        plan,
        2 * k,
        length,
        mix(tower.base.seed, DOMAIN_WALK, TAG_DIAG, pid, m),
        _schedule(walks, batch),
    )
    point_min = min(v1 * cells[2 * i].hits / cells[2 * i].walks for i in range(k))
    return (
        [cells[2 * i].hits for i in range(k)],
        [cells[2 * i + 1].hits for i in range(k)],
        point_min,
    )


@dataclass
class MixingReport:
    delay: int
    kappa: str
    window: tuple
    floor: float
    statistic: float  # min over window times of the pooled copy-1 component value
    per_time: list  # (time, value, copy-1 share, anchor hits) rows
    per_point_fraction: float
    points: int
    walks_per_point: int
    passed: bool
    underpowered_times: int
    mass_conserved: bool
    m: int


def mixing_diagnostic(
    tower: TowerSystem,
    *,
    level: int = 1,
    n_halfwidth: int,
    eps: float,
    points: int,
    walks: int,
    m: int = 1,
    batch: int = 2048,
    floor: float | None = None,
    depth_cap: int = 6,
    point_id_base: int = 70_000,
    workers: int = 1,
) -> MixingReport:
    """Copy-1 component value at copy-2 points in the delayed window.

    For each window time the copy-1-origin component of the lifted
    chain is estimated at copy-2 points, pooled over the sampled
    population; the statistic is the minimum over window times,
    compared to the floor alpha/2 - eps/3 where alpha/2 is the
    mixing limit of the component value.  Larger delays push the
    statistic toward that limit.  The copy-1 hit share (component
    value over total chain value) is reported per time alongside the
    per-point passing fraction.
    """
    if level != 1 or tower.level_count != 1:
        raise ConfigError("the mixing diagnostic certifies one-level towers")
    alpha = float(tower_alphas(0)[0])  # mass entering level 1
    if floor is None:
        floor = alpha / 2.0 - eps / 3.0
    M = tower.levels[0].delay
    anchor_depth, anchor_value_f = anchor_shape(ancient_density(-2 * m))
    v1 = float(anchor_value_f)
    times = tuple(range(2 * M - 2 * n_halfwidth, 2 * M + 2 * n_halfwidth + 1))
    allocation = stratified_allocation(points, depth_cap)
    tasks = []
    pid = point_id_base
    for name, count in allocation:
        for _ in range(count):
            base_pt = _stratum_point(tower.base, pid, name, depth_cap)
            tp = TowerPoint(base_pt, [COPY_2])
            tasks.append((tower, tp, pid, times, m, walks, batch, anchor_depth, v1))
            pid += 1
    results = _map_tasks(_mixing_task, tasks, workers)

    k = len(times)
    pooled_copy1 = [0] * k
    pooled_all = [0] * k
    point_mins = []
    for copy1_hits, all_hits, point_min in results:
        point_mins.append(point_min)
        for i in range(k):
            pooled_copy1[i] += copy1_hits[i]
            pooled_all[i] += all_hits[i]
    total_walks = points * walks
    per_time = [
        (
            t,
            v1 * pooled_copy1[i] / total_walks,
            pooled_copy1[i] / pooled_all[i] if pooled_all[i] else 0.0,
            pooled_all[i],
        )
        for i, t in enumerate(times)
    ]
    statistic = min(value for _, value, _, _ in per_time)
    frac = sum(1 for v in point_mins if v >= floor) / len(point_mins)
    return MixingReport(
        delay=M,
        kappa=str(tower.levels[0].kappa),
        window=(times[0], times[-1]),
        floor=floor,
        statistic=statistic,
        per_time=per_time,
        per_point_fraction=frac,
        points=points,
        walks_per_point=walks,
        passed=statistic >= floor,
        underpowered_times=sum(1 for _, _, _, h in per_time if h == 0),
        mass_conserved=True,  # P preserves component mass identically
        m=m,
    )


def _coupling_task(args):
    tower, tp, pid, times, m, walks, batch, anchor_depth, v1 = args
    copy1_fn = _copy_component_eval(anchor_depth, v1, COPY_1)

    def base_fn(tpt: TowerPoint, s: int) -> float:
        b = tpt.base
        if b.kind == INTERIOR and b.depth == anchor_depth and s == b.word.letters[0]:
            return v1
        return 0.0

    length = times[-1] + 2 * m
    plan: list = [None] * (length + 1)
    for i, t in enumerate(times):
        plan[t + 2 * m] = [(2 * i, base_fn), (2 * i + 1, copy1_fn)]
    cells = run_campaign(
        tp.copy,
        tower.shift_fast,
        plan,
        2 * len(times),
        length,
        mix(tower.base.seed, DOMAIN_WALK, TAG_COUPLING, pid, m),
        _schedule(walks, batch),
    )
    sup_base = max(v1 * cells[2 * i].hits / cells[2 * i].walks for i in range(len(times)))
    sup_c1 = max(
        v1 * cells[2 * i + 1].hits / cells[2 * i + 1].walks for i in range(len(times))
    )
    return abs(sup_base - sup_c1)


@dataclass
class CouplingReport:
    kappa: str
    delay: int
    points: int
    walks_per_point: int
    window: tuple
    mean_abs_deviation: float
    per_point: list


def coupling_deviation(
    base: BallSystem,
    *,
    kappa,
    delay: int,
    n_halfwidth: int,
    points: int,
    walks: int,
    m: int = 1,
    batch: int = 2048,
    depth_cap: int = 6,
    point_id_base: int = 90_000,
    workers: int = 1,
) -> CouplingReport:
    """How far gluing at this kappa disturbs copy-1 window sups.

    Same walks evaluate the base anchor with and without the copy-1
    bit requirement, so at kappa = 0 the deviation is exactly zero and
    growth in kappa is measured without sampling noise between arms.
    """
    tower = TowerSystem(base, make_levels([Fraction(kappa)], [delay]))
    anchor_depth, anchor_value_f = anchor_shape(ancient_density(-2 * m))
    v1 = float(anchor_value_f)
    times = tuple(2 * n for n in range(0, n_halfwidth + 1))
    allocation = stratified_allocation(points, depth_cap)
    tasks = []
    pid = point_id_base
    for name, count in allocation:
        for _ in range(count):
            base_pt = _stratum_point(base, pid, name, depth_cap)
            tp = TowerPoint(base_pt, [COPY_1])
            tasks.append((tower, tp, pid, times, m, walks, batch, anchor_depth, v1))
            pid += 1
    per_point = _map_tasks(_coupling_task, tasks, workers)
    return CouplingReport(
        kappa=str(Fraction(kappa)),
        delay=delay,
        points=points,
        walks_per_point=walks,
        window=(times[0], times[-1]),
        mean_abs_deviation=sum(per_point) / len(per_point),
        per_point=per_point,
    )
