"""Golden-model vs chip equivalence trials and the throughput benchmark."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .chipsim import DEFAULT_CAPACITY, FuzzyChip, RomImage, Schedule, build_rom, run_inference
from .core import DEFAULT_ELEMENTS, FuzzyVector, Rule, RuleSet, infer

DEFAULT_CLOCK_HZ = 20_800_000
MIN_REPETITIONS = 3


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent stream per (seed, trial) so trials can run in any order."""
    return np.random.default_rng([seed, trial])


def random_vector(rng: np.random.Generator, elements: int) -> FuzzyVector:
    """Grades drawn uniformly from 0..15, independently per element."""
    return FuzzyVector(rng.integers(0, 16, size=elements).tolist())


def random_ruleset(rng: np.random.Generator, elements: int = DEFAULT_ELEMENTS,
                   rules: int = DEFAULT_CAPACITY, antecedents: int = 1) -> RuleSet:
    grades = rng.integers(0, 16, size=(rules, antecedents + 1, elements)).tolist()
    return RuleSet(Rule([FuzzyVector(a) for a in rows[:-1]], FuzzyVector(rows[-1]))
                   for rows in grades)


@dataclass(frozen=True)
class Counterexample:
    trial: int
    rules: RuleSet
    observation: FuzzyVector
    golden: FuzzyVector
    chip: FuzzyVector


@dataclass
class CheckReport:
    trials: int
    seed: int
    elements: int
    rule_count: int
    capacity: int
    failures: int = 0
    first_failure: Optional[Counterexample] = None

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def lines(self) -> List[str]:
        out = [f"trials={self.trials}", f"seed={self.seed}", f"elements={self.elements}",
               f"rules={self.rule_count}", f"capacity={self.capacity}",
               f"failures={self.failures}",
               f"verdict={'pass' if self.passed else 'fail'}"]
        cx = self.first_failure
        if cx is not None:
            out.append(f"counterexample_trial={cx.trial}")
            out.append("observation=" + " ".join(map(str, cx.observation)))
            out.append("golden=" + " ".join(map(str, cx.golden)))
            out.append("chip=" + " ".join(map(str, cx.chip)))
            for i, rule in enumerate(cx.rules):
                out.append(f"rule_{i}_antecedent=" + " ".join(map(str, rule.antecedents[0])))
                out.append(f"rule_{i}_consequent=" + " ".join(map(str, rule.consequent)))
        return out


@dataclass(frozen=True)
class CheckJob:
    seed: int
    elements: int
    rule_count: int
    capacity: int
    rules: Optional[RuleSet] = None
    corrupt: Optional[Tuple[str, int]] = None


def _chip_for(job: CheckJob, rules: RuleSet) -> FuzzyChip:
    rom = build_rom(rules, job.capacity)
    if job.corrupt is not None:
        rom = rom.flip_bit(*job.corrupt)
    return FuzzyChip(rom)


def _run_trials(job: CheckJob, start: int, stop: int) -> Tuple[int, Optional[Counterexample]]:
    failures = 0
    first = None
    fixed_chip = _chip_for(job, job.rules) if job.rules is not None else None
    for trial in range(start, stop):
        rng = trial_rng(job.seed, trial)
        if job.rules is None:
            rules = random_ruleset(rng, job.elements, job.rule_count)
            chip = _chip_for(job, rules)
        else:
            rules, chip = job.rules, fixed_chip
        obs = random_vector(rng, rules.universe_size)
        golden = infer(rules, obs)
        result, _ = run_inference(chip, obs)
        if result != golden:
            failures += 1
            if first is None:
                first = Counterexample(trial, rules, obs, golden, result)
    return failures, first


def check_equivalence(trials: int, seed: int = 0, rules: Optional[RuleSet] = None,
                      elements: int = DEFAULT_ELEMENTS, rule_count: int = DEFAULT_CAPACITY,
                      capacity: int = DEFAULT_CAPACITY, workers: int = 1,
                      corrupt: Optional[Tuple[str, int]] = None) -> CheckReport:
    """Compare golden inference with the chip on seeded random trials.

    Without ``rules`` every trial draws a fresh rule set of ``rule_count``
    rules. Results are merged by trial index, so ``workers`` never changes
    the report.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if rules is not None:
        elements, rule_count = rules.universe_size, len(rules)
    job = CheckJob(seed, elements, rule_count, capacity, rules, corrupt)
    report = CheckReport(trials, seed, elements, rule_count, capacity)
    workers = max(1, min(workers, trials))
    bounds = [trials * k // workers for k in range(workers + 1)]
    chunks = list(zip(bounds[:-1], bounds[1:]))
    if workers == 1:
        results = [_run_trials(job, *chunks[0])]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_trials, job, lo, hi) for lo, hi in chunks]
            results = [f.result() for f in futures]
    for failures, first in results:
        report.failures += failures
        if report.first_failure is None and first is not None:
            report.first_failure = first
    return report


def cycles_per_inference(elements: int, capacity: int = DEFAULT_CAPACITY) -> int:
    return Schedule(elements, capacity).last_cycle


def simulated_flips(clock_hz: int, cycles: int) -> Fraction:
    return Fraction(clock_hz, cycles)


@dataclass
class BenchReport:
    elements: int
    rule_count: int
    capacity: int
    simulated_clock_hz: int
    cycles_per_inference: int
    golden_host_flips: List[float] = field(default_factory=list)
    chip_host_flips: List[float] = field(default_factory=list)

    @property
    def simulated_flips(self) -> Fraction:
        return simulated_flips(self.simulated_clock_hz, self.cycles_per_inference)

    def lines(self) -> List[str]:
        flips = self.simulated_flips
        shown = str(flips.numerator) if flips.denominator == 1 else f"{float(flips):.3f}"
        out = [f"elements={self.elements}", f"rules={self.rule_count}",
               f"capacity={self.capacity}",
               f"cycles_per_inference={self.cycles_per_inference}",
               f"simulated_clock_hz={self.simulated_clock_hz}",
               f"simulated_flips={shown}"]
        for name, runs in (("golden", self.golden_host_flips), ("chip", self.chip_host_flips)):
            if runs:
                out.append(f"{name}_host_flips_min={min(runs):.1f}")
                out.append(f"{name}_host_flips_max={max(runs):.1f}")
                out.append(f"{name}_repetitions={len(runs)}")
        return out


def _time_runs(fn, budget: float) -> float:
    start = time.perf_counter()
    count = 0
    while True:
        fn()
        count += 1
        elapsed = time.perf_counter() - start
        if elapsed >= budget:
            return count / elapsed


def bench(rules: RuleSet, observation: FuzzyVector, duration: float = 1.0,
          clock_hz: int = DEFAULT_CLOCK_HZ, capacity: int = DEFAULT_CAPACITY,
          repetitions: int = MIN_REPETITIONS) -> BenchReport:
    """Time host throughput of both models and compute the hardware figure.

    ``duration`` seconds are spent on each model, split evenly over the
    repetitions.
    """
    if duration < 1:
        raise ValueError("duration must be at least 1 second")
    if repetitions < MIN_REPETITIONS:
        raise ValueError(f"need at least {MIN_REPETITIONS} repetitions")
    if clock_hz <= 0:
        raise ValueError("clock_hz must be positive")
    chip = FuzzyChip(build_rom(rules, capacity))
    report = BenchReport(rules.universe_size, len(rules), capacity, clock_hz,
                         chip.schedule.last_cycle)
    budget = duration / repetitions
    for _ in range(repetitions):
        report.golden_host_flips.append(_time_runs(lambda: infer(rules, observation), budget))
    for _ in range(repetitions):
        report.chip_host_flips.append(_time_runs(lambda: run_inference(chip, observation),
                                                 budget))
    return report
