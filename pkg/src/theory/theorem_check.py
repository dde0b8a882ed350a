"""
Executable check of the linear-model error bound for multi-scale mixing.

A smooth series f (Lipschitz constant K) is mixed coarse to fine with linear
maps, g_i = f_i + g_{i+1} W_i. The periodic linear predictor

    y_hat_t = g(t mod P + 1) - g(1) + g(P + 1)        (1-based indices)

then satisfies |g(P + 1 + t) - y_hat_t| <= K_g * (t + t mod P), where K_g is
the Lipschitz constant of g, measured here by scanning.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.data.synthetic import gen_synthetic, lipschitz_bound, lipschitz_scan
from src.exceptions import ConfigError, NumericError, ShapeError

logger = logging.getLogger(__name__)

CLOSED_FORM_TOL = 1e-12


@dataclass(frozen=True)
class SmoothSeriesSpec:
    kind: str = 'sine'
    period: int = 24
    length: int = 96          # look-back L
    rate: int = 2             # downsampling rate d
    depth: int = 3            # number of pooling steps n
    amplitude: float = 1.0
    slope: float = 0.0

    @property
    def lipschitz(self) -> float:
        return lipschitz_bound(self.kind, self.period, self.amplitude, self.slope)


@dataclass
class Violation:
    trial: int
    t: int
    lhs: float
    rhs: float


@dataclass
class TrialResult:
    trial: int
    phase: float
    k_f: float
    k_g: float
    max_ratio: float
    level_scans: List[float]
    violations: List[Violation] = field(default_factory=list)
    # Same predictor and right-hand side, targets taken after the look-back: y_t = g(L + t).
    out_of_sample_max_ratio: float = 0.0
    out_of_sample_violations: int = 0


@dataclass
class BoundReport:
    spec: Dict
    horizon: int
    trials: int
    seed: int
    k_analytic: float
    max_ratio: float
    violations: List[Violation]
    results: List[TrialResult]

    @property
    def out_of_sample_violations(self) -> int:
        return sum(r.out_of_sample_violations for r in self.results)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self, include_trials: bool = False) -> Dict:
        data = {
            'spec': self.spec,
            'horizon': self.horizon,
            'trials': self.trials,
            'seed': self.seed,
            'k_analytic': self.k_analytic,
            'max_ratio': self.max_ratio,
            'max_k_g': max((r.k_g for r in self.results), default=0.0),
            'passed': self.passed,
            'num_violations': len(self.violations),
            'violations': [asdict(v) for v in self.violations],
            'out_of_sample': {
                'max_ratio': max((r.out_of_sample_max_ratio for r in self.results), default=0.0),
                'num_violations': self.out_of_sample_violations,
            },
        }
        if include_trials:
            data['results'] = [asdict(r) for r in self.results]
        return data


def _pool(seq: np.ndarray, d: int) -> np.ndarray:
    n = len(seq) // d
    if n < 1:
        raise ShapeError(f"cannot pool length {len(seq)} at rate {d}")
    return seq[:n * d].reshape(n, d).mean(axis=1)


def pooled_levels(f: np.ndarray, d: int, n: int) -> List[np.ndarray]:
    """[f_0 = f, f_1, ..., f_n] by repeated truncating average pooling."""
    levels = [np.asarray(f, dtype=np.float64)]
    for _ in range(n):
        levels.append(_pool(levels[-1], d))
    return levels


def multiscale_mixing_reference(f: np.ndarray, d: int, n: int, W: Sequence[np.ndarray]) -> np.ndarray:
    """
    g_n = f_n; g_i = f_i + g_{i+1} @ W_i for i = n-1 .. 0; returns g_0.

    W_i must have shape (len(f_{i+1}), len(f_i)) = (L // d**(i+1), L // d**i).
    """
    if len(W) != n:
        raise ShapeError(f"need {n} mixing matrices, got {len(W)}")
    levels = pooled_levels(f, d, n)
    for i, w in enumerate(W):
        expected = (len(levels[i + 1]), len(levels[i]))
        if np.shape(w) != expected:
            raise ShapeError(f"W_{i} has shape {np.shape(w)}, expected {expected}")
    g = levels[n]
    for i in range(n - 1, -1, -1):
        g = levels[i] + g @ np.asarray(W[i], dtype=np.float64)
    return g


def theorem1_matrix(L: int, P: int, T: int) -> np.ndarray:
    """A (L x T) with column t holding e_{P+1} + e_{t mod P + 1} - e_1 (1-based)."""
    if L < P + 1:
        raise ShapeError(f"look-back L={L} must be >= P + 1 = {P + 1}")
    A = np.zeros((L, T))
    for t in range(1, T + 1):
        A[P, t - 1] += 1.0
        A[t % P, t - 1] += 1.0
        A[0, t - 1] -= 1.0
    return A


def theorem1_predictor(g: np.ndarray, P: int, T: int) -> np.ndarray:
    """y_hat_t = g(t mod P + 1) - g(1) + g(P + 1) for t = 1..T, checked against g @ A."""
    g = np.asarray(g, dtype=np.float64)
    L = len(g)
    if P < 1 or L < P + 1:
        raise ShapeError(f"look-back L={L} must be >= P + 1 = {P + 1}")
    t = np.arange(1, T + 1)
    closed = g[t % P] - g[0] + g[P]
    via_matrix = g @ theorem1_matrix(L, P, T)
    gap = float(np.max(np.abs(via_matrix - closed))) if T else 0.0
    if gap > CLOSED_FORM_TOL:
        raise NumericError(f"matrix and closed-form predictors differ by {gap:.3e}")
    return closed


def _run_trial(spec: SmoothSeriesSpec, T: int, trial: int, seq: np.random.SeedSequence,
               weight_bound: float) -> TrialResult:
    rng = np.random.default_rng(seq)
    N = spec.length + T
    phase = float(rng.uniform(0.0, 2.0 * math.pi))
    f = gen_synthetic(spec.kind, N, C=1, period=spec.period, amplitude=spec.amplitude,
                      slope=spec.slope, noise=0.0, phase=phase).values[:, 0]

    k_f = lipschitz_scan(f)
    if k_f > spec.lipschitz + 1e-12:
        raise NumericError(f"trial {trial}: generated series has scanned K {k_f} above analytic {spec.lipschitz}")
    levels = pooled_levels(f, spec.rate, spec.depth)
    level_scans = [lipschitz_scan(lv, spacing=spec.rate ** i) for i, lv in enumerate(levels)]

    W = [rng.uniform(-weight_bound, weight_bound, size=(len(levels[i + 1]), len(levels[i])))
         for i in range(spec.depth)]
    g = multiscale_mixing_reference(f, spec.rate, spec.depth, W)
    k_g = lipschitz_scan(g)

    P = spec.period
    y_hat = theorem1_predictor(g[:spec.length], P, T)
    t = np.arange(1, T + 1)
    y = g[P + t]
    lhs = np.abs(y - y_hat)
    rhs = k_g * (t + t % P)

    result = TrialResult(trial=trial, phase=phase, k_f=k_f, k_g=k_g, max_ratio=0.0, level_scans=level_scans)
    positive = rhs > 0
    if positive.any():
        result.max_ratio = float(np.max(lhs[positive] / rhs[positive]))
    for i in np.nonzero(lhs > rhs + CLOSED_FORM_TOL * (1.0 + rhs))[0]:
        result.violations.append(Violation(trial=trial, t=int(t[i]), lhs=float(lhs[i]), rhs=float(rhs[i])))

    lhs_oos = np.abs(g[spec.length - 1 + t] - y_hat)
    if positive.any():
        result.out_of_sample_max_ratio = float(np.max(lhs_oos[positive] / rhs[positive]))
    result.out_of_sample_violations = int(np.count_nonzero(lhs_oos > rhs + CLOSED_FORM_TOL * (1.0 + rhs)))
    return result


def theorem1_bound_check(
    spec: SmoothSeriesSpec,
    T: int,
    trials: int = 100,
    seed: int = 7,
    threads: int = 1,
    weight_bound: Optional[float] = None,
) -> BoundReport:
    """
    Run `trials` independent trials (random phase and mixing matrices per trial).

    Args:
        spec: Generator and mixing configuration; spec.length is the look-back L
        T: Horizon
        weight_bound: Mixing entries are drawn from U(-b, b); default b = 1/(L + T), 0 disables mixing
        threads: Worker threads for the trials (results are independent of this)

    Returns:
        BoundReport; `passed` is False when any |y_t - y_hat_t| exceeds K_g * (t + t mod P)
    """
    if T < 1 or trials < 1:
        raise ConfigError(f"horizon and trials must be positive, got T={T}, trials={trials}")
    if spec.length < spec.period + 1:
        raise ConfigError(f"length {spec.length} must be >= period + 1 = {spec.period + 1}")
    if (spec.length + T) < spec.rate ** spec.depth:
        raise ConfigError(f"length + horizon must be >= rate**depth = {spec.rate ** spec.depth}")
    bound = 1.0 / (spec.length + T) if weight_bound is None else float(weight_bound)

    seqs = np.random.SeedSequence(seed).spawn(trials)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda i: _run_trial(spec, T, i, seqs[i], bound), range(trials)))
    else:
        results = [_run_trial(spec, T, i, seqs[i], bound) for i in range(trials)]

    violations = [v for r in results for v in r.violations]
    report = BoundReport(spec=asdict(spec), horizon=T, trials=trials, seed=seed,
                         k_analytic=spec.lipschitz, max_ratio=max(r.max_ratio for r in results),
                         violations=violations, results=results)
    logger.info(f"Bound check: {trials} trials, {len(violations)} violations, "
                f"max lhs/rhs {report.max_ratio:.4f}")
    return report
