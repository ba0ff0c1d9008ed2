"""Seeded Monte-Carlo harness: H0/H1 trials, ROC curves, AUC and the
dynamic-load robustness study.

Every trial draws from its own generator, seeded from
``(master_seed, trial_index, hypothesis)``, so results do not depend on
execution order or on the number of worker threads.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from . import attacks, detection
from .arnoise import ArNoiseModel, simulate_block
from .estimation import StateEstimate, innovation_variances, wls_estimate_sequential
from .grid import MeasurementMatrix

H0 = "H0"
H1 = "H1"
_HYP_CODE = {H0: 0, H1: 1}
DETECTORS = (detection.GAUSSIAN, detection.AR)
_FIXED_ATTACK_KEY = 2**32 - 1


@dataclass(frozen=True)
class AttackSpec:
    kind: str = attacks.NONE
    magnitude: float = 1.0
    d: int = 0
    sigma_y2: float = 0.0
    fixed: bool = False  # draw one attack per experiment instead of per trial

    def __post_init__(self):
        if self.kind not in attacks.KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}")


@dataclass(frozen=True)
class Scenario:
    """One experiment: model, noise, attack, detectors and trial budget.

    ``noise`` is a single model shared by all meters or one per meter.
    ``rho`` scales each state component per trial by ``U[1-rho, 1+rho]``.
    """

    mm: MeasurementMatrix
    noise: tuple[ArNoiseModel, ...] | ArNoiseModel
    n: int = 20
    attack: AttackSpec = field(default_factory=AttackSpec)
    theta: np.ndarray | None = None
    detectors: tuple[str, ...] = DETECTORS
    trials: int = 1000
    master_seed: int = 0
    rho: float = 0.0
    burn_in: int = 0

    def __post_init__(self):
        noise = self.noise
        if isinstance(noise, ArNoiseModel):
            noise = (noise,) * self.mm.M
        noise = tuple(noise)
        if len(noise) != self.mm.M:
            raise ValueError(f"need {self.mm.M} noise models, got {len(noise)}")
        object.__setattr__(self, "noise", noise)
        theta = np.ones(self.mm.K) if self.theta is None else np.asarray(self.theta, float)
        if theta.shape != (self.mm.K,):
            raise ValueError(f"theta must have length {self.mm.K}")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "detectors", tuple(self.detectors))
        for d in self.detectors:
            if d not in DETECTORS:
                raise ValueError(f"unknown detector {d!r}")
        if self.trials < 1 or self.n < 1 or self.rho < 0 or self.burn_in < 0:
            raise ValueError("need trials >= 1, n >= 1, rho >= 0, burn_in >= 0")
        if self.attack.kind == attacks.SPARSE and not 0 <= self.attack.d <= self.mm.M:
            raise ValueError(f"attack d must lie in [0, {self.mm.M}]")

    @cached_property
    def gaussian_detector(self) -> detection.GaussianDetector:
        # the Gaussian detector assumes white noise at the innovation variance
        return detection.GaussianDetector(self.mm, innovation_variances(self.noise))

    @cached_property
    def ar_detector(self) -> detection.ArDetector:
        return detection.ArDetector(self.mm, self.noise, self.n)

    @cached_property
    def fixed_attack(self) -> np.ndarray:
        ss = np.random.SeedSequence(self.master_seed, spawn_key=(_FIXED_ATTACK_KEY,))
        return _draw_attack(self, self.theta, *ss.spawn(2))

    def evaluate(self, X) -> list[tuple[str, float]]:
        out = []
        for d in self.detectors:
            if d == detection.GAUSSIAN:
                out.append((d, self.gaussian_detector.sequential(X).value))
            else:
                out.append((d, self.ar_detector(X)[0].value))
        return out


def perturb_states(theta, rho: float, rng: np.random.Generator) -> np.ndarray:
    """Scale each component independently by a draw from ``U[1-rho, 1+rho]``."""
    if rho < 0:
        raise ValueError("rho must be >= 0")
    theta = np.asarray(theta, dtype=float)
    return theta * rng.uniform(1.0 - rho, 1.0 + rho, size=theta.shape)


def _draw_attack(sc: Scenario, theta: np.ndarray, attack_ss, window_ss) -> np.ndarray:
    spec = sc.attack
    rng = np.random.default_rng(attack_ss)
    if spec.kind == attacks.NONE:
        return np.zeros(sc.mm.M)
    if spec.kind == attacks.SPARSE:
        return attacks.sparse_attack(sc.mm.M, spec.d, spec.magnitude, rng).a
    if spec.kind == attacks.UNOBSERVABLE:
        theta_a = spec.magnitude * rng.standard_normal(sc.mm.K)
        return attacks.unobservable_attack(sc.mm, theta_a).a
    # the attacker first observes a clean window of the same length
    window_rng = np.random.default_rng(window_ss)
    window = (sc.mm.H @ theta)[:, None] + simulate_block(sc.noise, sc.n, window_rng, sc.burn_in)
    return attacks.ica_attack(window, spec.sigma_y2, spec.magnitude, rng).a


def simulate_observations(sc: Scenario, trial_index: int, hypothesis: str):
    """Return ``(X, theta, a)`` for one trial."""
    if hypothesis not in _HYP_CODE:
        raise ValueError(f"hypothesis must be H0 or H1, got {hypothesis!r}")
    ss = np.random.SeedSequence(sc.master_seed, spawn_key=(trial_index, _HYP_CODE[hypothesis]))
    noise_ss, state_ss, attack_ss, window_ss = ss.spawn(4)
    theta = perturb_states(sc.theta, sc.rho, np.random.default_rng(state_ss))
    if hypothesis == H0:
        a = np.zeros(sc.mm.M)
    elif sc.attack.fixed:
        a = sc.fixed_attack
    else:
        a = _draw_attack(sc, theta, attack_ss, window_ss)
    W = simulate_block(sc.noise, sc.n, np.random.default_rng(noise_ss), sc.burn_in)
    X = (sc.mm.H @ theta + a)[:, None] + W
    return X, theta, a


def run_trial(sc: Scenario, trial_index: int, hypothesis: str) -> list[tuple[str, float]]:
    X, _, _ = simulate_observations(sc, trial_index, hypothesis)
    return sc.evaluate(X)


# ---------------------------------------------------------------------------
# score tables
# ---------------------------------------------------------------------------


class ScoreRow(NamedTuple):
    trial: int
    detector: str
    hypothesis: str
    statistic: float


SCORE_COLUMNS = ("trial", "detector", "hypothesis", "statistic")


class ScoreTable:
    def __init__(self, rows: Iterable[ScoreRow]):
        self.rows = list(rows)

    def __len__(self):
        return len(self.rows)

    def __eq__(self, other):
        return isinstance(other, ScoreTable) and self.rows == other.rows

    @property
    def detectors(self) -> list[str]:
        return list(dict.fromkeys(r.detector for r in self.rows))

    def scores(self, detector: str, hypothesis: str) -> np.ndarray:
        return np.array([r.statistic for r in self.rows
                         if r.detector == detector and r.hypothesis == hypothesis])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SCORE_COLUMNS)
        for r in self.rows:
            w.writerow((r.trial, r.detector, r.hypothesis, repr(float(r.statistic))))
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ScoreTable":
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != SCORE_COLUMNS:
            raise ValueError(f"scores CSV header must be {','.join(SCORE_COLUMNS)}")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != 4:
                raise ValueError(f"line {lineno}: expected 4 fields, got {len(rec)}")
            trial, det, hyp, stat = rec
            if hyp not in _HYP_CODE:
                raise ValueError(f"line {lineno}: hypothesis must be H0 or H1, got {hyp!r}")
            try:
                row = ScoreRow(int(trial), det, hyp, float(stat))
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
            if not np.isfinite(row.statistic):
                raise ValueError(f"line {lineno}: statistic is not finite")
            rows.append(row)
        return cls(rows)


def run_experiment(sc: Scenario, threads: int = 1) -> ScoreTable:
    """Run ``trials`` trials under each hypothesis.

    Rows are ordered by trial, then hypothesis, then detector, whatever
    the thread count.
    """
    jobs = [(t, h) for t in range(sc.trials) for h in (H0, H1)]
    # build shared detectors before fanning out
    sc.gaussian_detector, sc.ar_detector
    if sc.attack.fixed:
        sc.fixed_attack

    def work(job):
        return job, run_trial(sc, *job)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(work, jobs))
    else:
        results = [work(j) for j in jobs]
    rows = [ScoreRow(t, d, h, float(v)) for (t, h), stats in results for d, v in stats]
    return ScoreTable(rows)


# ---------------------------------------------------------------------------
# ROC
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RocCurve:
    detector: str
    thresholds: np.ndarray
    pfa: np.ndarray
    pd: np.ndarray
    auc: float


def roc(h0, h1, detector: str = "") -> RocCurve:
    """ROC over every pooled score used as a threshold (``score > tau``).

    The sweep starts at ``-inf``, giving the (1, 1) endpoint; the largest
    score gives (0, 0). AUC is the trapezoid area, which credits ties 1/2.
    """
    h0 = np.sort(np.asarray(h0, dtype=float))
    h1 = np.sort(np.asarray(h1, dtype=float))
    if h0.size == 0 or h1.size == 0:
        raise ValueError(f"detector {detector!r}: both H0 and H1 scores are required")
    thr = np.r_[-np.inf, np.unique(np.r_[h0, h1])]
    pfa = 1.0 - np.searchsorted(h0, thr, side="right") / h0.size
    pd = 1.0 - np.searchsorted(h1, thr, side="right") / h1.size
    auc = float(np.sum((pfa[:-1] - pfa[1:]) * (pd[:-1] + pd[1:]) / 2.0))
    return RocCurve(detector, thr, pfa, pd, auc)


def roc_from_scores(table: ScoreTable, detector: str) -> RocCurve:
    return roc(table.scores(detector, H0), table.scores(detector, H1), detector)


def auc_summary(table: ScoreTable) -> dict[str, float]:
    return {d: roc_from_scores(table, d).auc for d in table.detectors}


# ---------------------------------------------------------------------------
# state-estimation quality and robustness
# ---------------------------------------------------------------------------


def mse_eval(X, mm, estimate: StateEstimate | np.ndarray, squared: bool = False) -> float:
    """``(1/N) sum_n |x_n - H theta_hat|`` over the columns of ``X``.

    ``squared=True`` uses squared norms instead.
    """
    H = np.asarray(getattr(mm, "H", mm), dtype=float)
    theta = np.asarray(getattr(estimate, "theta_hat", estimate), dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != H.shape[0] or theta.shape != (H.shape[1],):
        raise ValueError("dimension mismatch between X, H and the estimate")
    r = np.linalg.norm(X - (H @ theta)[:, None], axis=0)
    return float(np.mean(r**2 if squared else r))


@dataclass(frozen=True)
class RobustnessResult:
    rho: float
    auc_base: dict[str, float]
    auc_dynamic: dict[str, float]
    mse_base: float
    mse_dynamic: float

    @property
    def max_auc_change(self) -> float:
        return max(abs(self.auc_dynamic[d] - self.auc_base[d]) for d in self.auc_base)

    @property
    def mse_relative_change(self) -> float:
        return abs(self.mse_dynamic - self.mse_base) / self.mse_base


def mse_study(sc: Scenario, squared: bool = False) -> float:
    """Mean MSE of the sequential Gaussian estimator under white noise at
    the innovation variances, over ``sc.trials`` attack-free trials."""
    sigma = innovation_variances(sc.noise)
    white = tuple(ArNoiseModel.white(s) for s in sigma)
    wsc = replace(sc, noise=white, attack=AttackSpec())
    total = 0.0
    for t in range(sc.trials):
        X, _, _ = simulate_observations(wsc, t, H0)
        total += mse_eval(X, sc.mm, wls_estimate_sequential(sc.mm, sigma, X), squared)
    return total / sc.trials


def robustness_study(sc: Scenario, rho: float, threads: int = 1) -> RobustnessResult:
    """Compare a constant operating point (``rho = 0``) against per-trial
    load-perturbed states under matched seeds."""
    base = replace(sc, rho=0.0)
    dyn = replace(sc, rho=rho)
    return RobustnessResult(
        rho,
        auc_summary(run_experiment(base, threads)),
        auc_summary(run_experiment(dyn, threads)),
        mse_study(base),
        mse_study(dyn),
    )


def seed_averaged_auc(sc: Scenario, seeds: Sequence[int], threads: int = 1) -> dict[str, float]:
    aucs = [auc_summary(run_experiment(replace(sc, master_seed=s), threads)) for s in seeds]
    return {d: float(np.mean([a[d] for a in aucs])) for d in aucs[0]}
