from __future__ import annotations

import logging
import math
import random
import time
from fractions import Fraction
from typing import Callable

from .compounding import (
    CompoundInput,
    closure_test,
    compound,
    indicator_decomposition,
    point_mass_inputs,
    reconstruct,
    remark4_counterexample,
    tensor_compose,
)
from .errors import ClosureViolationError
from .grid_monotone import (
    Grid,
    GridFunction,
    Point,
    check_fully_k,
    check_fully_k_naive,
    df_to_measure,
    lemma3_approx,
    measure_to_df,
    negate_reflect,
    random_grid,
    random_measure,
)
from .interval_partition import VectorFamily, partition_upper, verify_partition
from .messages import CheckEntry, Report, entry
from .multilinear import compose_univariate, eval_bernoulli, evaluate, extend, partial, to_table
from .subset_core import (
    PBFunction,
    delta_point,
    delta_table,
    gen_fully_k,
    is_fully_k,
    or_function,
    random_table,
    saturating_sum,
    size_or_one,
    submasks,
)
from .univariate import Sqrt

type Check = Callable[[random.Random], list[CheckEntry]]

SIZE_OR_ONE_COEFFS = tuple(Fraction(c) for c in (1, 0, 0, 1, 0, 1, 1, -1))
SATURATING_SUM_COEFFS = tuple(Fraction(c) for c in (0, 2, 2, 0, 2, 0, 0, -1))


def _sqrt_coeffs() -> list[float]:
    r2, r5 = math.sqrt(2), math.sqrt(5)
    return [0.0, r2, r2, -2 * (r2 - 1), r2, -2 * (r2 - 1), -2 * (r2 - 1), 3 * r2 + r5 - 6]


def _random_point(grid: Grid, rng: random.Random) -> Point:
    return tuple(rng.choice(axis.points) for axis in grid.axes)


def _random_rational(rng: random.Random) -> Fraction:
    return Fraction(rng.randint(0, 8), 8)


class AcceptanceSuite:
    def __init__(
        self,
        seed: int,
        *,
        trials: int | None = None,
        mutate: bool = False,
        logger: logging.Logger,
    ) -> None:
        self.seed = seed
        self.trials = trials
        self.mutate = mutate
        self._logger = logger

    def __str__(self) -> str:
        return f"AcceptanceSuite(seed={self.seed})"

    def _count(self, default: int) -> int:
        return default if self.trials is None else max(1, min(default, self.trials))

    # --mutate lowers f({1, 2}) by 2; the suite must then fail.
    def _size_or_one(self, d: int = 3) -> PBFunction:
        f = size_or_one(d)
        if not self.mutate:
            return f
        values = list(f.values)
        values[0b011] -= 2
        return f.model_copy(update={"values": tuple(values)})

    @property
    def checks(self) -> list[tuple[str, Check]]:
        return [
            ("size-or-one coefficients", self.check_size_or_one),
            ("saturating-sum alternation", self.check_saturating_sum),
            ("square-root composition", self.check_sqrt_composition),
            ("tensor counterexample", self.check_tensor_counterexample),
            ("non-multilinear counterexample", self.check_non_multilinear_outer),
            ("set-interval partition", self.check_partition),
            ("compound closure", self.check_closure),
            ("indicator certificates", self.check_certificates),
            ("identities", self.check_identities),
            ("approximation bound", self.check_approximation),
        ]

    def run(self) -> Report:
        started = time.perf_counter()
        self._logger.info("%s: starting", self)
        entries: list[CheckEntry] = []
        timings: dict[str, float] = {}
        for index, (name, check) in enumerate(self.checks, start=1):
            rng = random.Random(self.seed * 100 + index)
            tick = time.perf_counter()
            results = check(rng)
            failed = [result for result in results if result.verdict == "fail"]
            elapsed = timings[name] = (time.perf_counter() - tick) * 1000
            if failed:
                self._logger.error("%s: %s failed: %s", self, name, ", ".join(result.name for result in failed))
            else:
                self._logger.info("%s: %s passed (%d checks, %.0f ms)", self, name, len(results), elapsed)
            entries += results
        report = Report.from_checks(entries, started=started, seed=self.seed, result={"suite_ms": timings})
        self._logger.info("%s: finished with verdict %s", self, report.verdict)
        return report

    def check_size_or_one(self, rng: random.Random) -> list[CheckEntry]:
        f = self._size_or_one()
        coeffs = extend(f).coeffs
        second = is_fully_k(f, 2)
        third = is_fully_k(f, 3)
        entries = [
            entry("size-or-one coefficients", coeffs == SIZE_OR_ONE_COEFFS, detail=str([str(c) for c in coeffs])),
            entry("size-or-one fully 2-increasing", bool(second), witness=second.witness),
            entry(
                "size-or-one not fully 3-increasing, witness value -1",
                not third and third.witness.value == -1,
                witness=third.witness,
            ),
        ]
        for d in (4, 5, 6):
            f = self._size_or_one(d)
            second = is_fully_k(f, 2)
            entries.append(entry(f"size-or-one at d={d} fully 2-increasing", bool(second), witness=second.witness))
            entries.append(entry(f"size-or-one at d={d} not fully 3-increasing", not is_fully_k(f, 3)))
        return entries

    def check_saturating_sum(self, rng: random.Random) -> list[CheckEntry]:
        f = saturating_sum()
        second = is_fully_k(f, 2, "alternating")
        entries = [
            entry("saturating-sum fully 2-alternating", bool(second), witness=second.witness),
            entry("saturating-sum not fully 3-alternating", not is_fully_k(f, 3, "alternating")),
            entry("saturating-sum coefficients", extend(f).coeffs == SATURATING_SUM_COEFFS),
        ]
        half = Fraction(1, 2)
        base = Grid.of([-1, -half, 0], [-1, -half, 0])
        for trial in range(self._count(100)):
            gs = [negate_reflect(measure_to_df(random_measure(base, rng), base), 1) for _ in range(3)]
            h = compound(CompoundInput.of(f, gs))
            check = check_fully_k(h, 2, "alternating")
            if not check:
                entries.append(entry(f"saturating-sum compound, trial {trial}", False, witness=check.witness))
                break
        else:
            entries.append(entry("saturating-sum compounds fully 2-alternating", True))
        return entries

    def check_sqrt_composition(self, rng: random.Random) -> list[CheckEntry]:
        p = compose_univariate(Sqrt(), saturating_sum())
        expected = _sqrt_coeffs()
        close = all(abs(a - b) <= 1e-12 for a, b in zip(p.coeffs, expected))
        return [entry("sqrt of saturating-sum coefficients", close, detail=str([float(c) for c in p.coeffs]))]

    def check_tensor_counterexample(self, rng: random.Random) -> list[CheckEntry]:
        half = Fraction(1, 2)
        identity = GridFunction.tabulate(Grid.of([0, half, 1]), lambda s: s)
        F = tensor_compose(extend(or_function()), [identity, identity])
        check = check_fully_k(F, 2)
        expected = not check and (check.witness.value, check.witness.s, check.witness.h) == (-1, [0, 0], [1, 1])
        pointwise = compound(CompoundInput.of(or_function(), [identity, identity]))
        first = check_fully_k(pointwise, 1)
        return [
            entry("s + t - st is not fully 2-increasing at s=(0,0), h=(1,1)", expected, detail=str(check.witness)),
            entry("g1 + g2 - g1 g2 fully 1-increasing", bool(first), witness=first.witness),
        ]

    def check_non_multilinear_outer(self, rng: random.Random) -> list[CheckEntry]:
        return remark4_counterexample().checks

    def check_partition(self, rng: random.Random) -> list[CheckEntry]:
        per_pair = self._count(200)
        for d in range(1, 9):
            for k in range(1, d + 1):
                for trial in range(per_pair):
                    family = VectorFamily.of([[rng.randint(0, 3) for _ in range(k)] for _ in range(d)])
                    result = partition_upper(family, k, use_base_case=trial % 2 == 1)
                    diagnostics = verify_partition(result, family, k)
                    if not diagnostics.valid:
                        return [entry(f"partition at d={d}, k={k}", False, detail=diagnostics.model_dump_json())]
        return [entry(f"partitions valid for k <= d <= 8, {per_pair} families each", True)]

    def check_closure(self, rng: random.Random) -> list[CheckEntry]:
        entries = []
        for mode in ("increasing", "alternating"):
            for k in (1, 2, 3):
                seed = rng.randrange(1 << 30)
                name = f"closure, {mode}, d=3, k={k}"
                try:
                    closure_test(mode, 3, k, 3, self._count(500), seed, logger=self._logger)
                except ClosureViolationError as e:
                    entries.append(entry(name, False, detail=str(e), witness=e.witness))
                else:
                    entries.append(entry(name, True))
        return entries

    def check_certificates(self, rng: random.Random) -> list[CheckEntry]:
        for trial in range(self._count(200)):
            d = rng.randint(1, 4)
            k = rng.randint(1, min(d, 3))
            f = gen_fully_k(d, k, "increasing", rng.randrange(1 << 30))
            grid = random_grid(k, 3, rng)
            points = [_random_point(grid, rng) for _ in range(d)]
            certificate = indicator_decomposition(f, k, points, grid)
            reproduces = reconstruct(certificate, grid).values == compound(point_mass_inputs(f, points, grid)).values
            if not reproduces or certificate.negative_terms() or certificate.weight_sum != f.values[f.full]:
                detail = f"trial {trial}: d={d}, k={k}, reproduces={reproduces}"
                return [entry("indicator certificate", False, detail=detail)]
        return [entry("indicator certificates reproduce compounds with nonnegative weights", True)]

    def check_identities(self, rng: random.Random) -> list[CheckEntry]:
        count = self._count(1000)
        interval = derivative = evaluation = round_trip = True
        for _ in range(count):
            d = rng.randint(1, 5)
            f = random_table(d, rng)
            tau = rng.randrange(1 << d)
            sigma = rng.choice(list(submasks(tau)))
            coeffs = extend(f).coeffs
            interval &= sum((coeffs[alpha | sigma] for alpha in submasks(tau & ~sigma)), Fraction(0)) == delta_point(
                f, sigma, tau & ~sigma
            )
            beta = rng.randrange(1 << d)
            derivative &= to_table(partial(extend(f), beta)).values == delta_table(f, beta).values
            x = [_random_rational(rng) for _ in range(d)]
            evaluation &= evaluate(extend(f), x) == eval_bernoulli(f, x)
            grid = random_grid(rng.randint(1, 3), 3, rng)
            mu = random_measure(grid, rng)
            round_trip &= df_to_measure(measure_to_df(mu, grid)).canonical() == mu.canonical()
        oracle = True
        for _ in range(self._count(100)):
            grid = random_grid(rng.randint(1, 3), 3, rng)
            F = GridFunction.on(grid, (Fraction(rng.randint(-1, 4)) for _ in range(grid.size)))
            k = rng.randint(1, grid.dim)
            mode = rng.choice(("increasing", "decreasing", "alternating"))
            oracle &= check_fully_k(F, k, mode) == check_fully_k_naive(F, k, mode)
        return [
            entry("interval sums equal differences", interval),
            entry("partial derivatives tabulate to differences", derivative),
            entry("power and Bernoulli forms agree", evaluation),
            entry("measure and d.f. round trip", round_trip),
            entry("adjacent-step checker matches exhaustive oracle", oracle),
        ]

    def check_approximation(self, rng: random.Random) -> list[CheckEntry]:
        grid = Grid.of(range(4), range(4))
        for epsilon in (Fraction(1, 10), Fraction(1, 4)):
            for trial in range(self._count(50)):
                F = measure_to_df(random_measure(grid, rng, normalized=True), grid)
                sub_axes = self._sub_axes(F, epsilon, rng)
                g = lemma3_approx(F, sub_axes)
                sub = Grid.of(*sub_axes)
                bounded = all(abs(g(*a) - F(*a)) <= 2 * epsilon for a in sub.points())
                if not bounded or g.values[-1] != 1:
                    return [entry("approximation bound", False, detail=f"epsilon={epsilon}, trial {trial}")]
        return [entry("sub-grid approximations within 2 epsilon and normalized", True)]

    @staticmethod
    def _sub_axes(F: GridFunction, epsilon: Fraction, rng: random.Random) -> list[list[Fraction]]:
        for _ in range(20):
            sub_axes = [sorted(rng.sample(axis.points, rng.randint(1, len(axis)))) for axis in F.axes]
            if F(*(axis[-1] for axis in sub_axes)) >= 1 - epsilon:
                return sub_axes
        return [list(axis.points) for axis in F.axes]


def run_selftest(
    seed: int,
    *,
    trials: int | None = None,
    mutate: bool = False,
    logger: logging.Logger | None = None,
) -> Report:
    return AcceptanceSuite(seed, trials=trials, mutate=mutate, logger=logger or logging.getLogger(__name__)).run()
