"""Session plans, simulated 2AFC observers, and psychometric threshold fitting.

The generative observer model is the validation oracle for the fitting
pipeline: responses are drawn from

    P(correct | x) = 0.5 + (0.5 - lapse) * Phi((x - alpha_eff) / beta)

with x the tested relative distance in diopters. Signal-absent trials
(x = 0) are exactly at chance. For detection sessions alpha_eff is the
observer's detection threshold; for discrimination sessions it grows with
the pedestal per Weber's law, alpha_eff = threshold + weber * pedestal,
the detection threshold doubling as the line's intercept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize
from scipy.special import ndtr, ndtri

DETECTION_ABSOLUTE_D = (1.0, 2.0, 3.0)
DETECTION_RELATIVE_D = (0.0, 0.25, 0.5, 0.75, 1.0)
DISCRIMINATION_OFFSETS_D = (1.0, 2.0, 3.0)
DISCRIMINATION_STEPS_D = {
    1.0: (0.0, 0.45, 0.9, 1.35, 1.8),
    2.0: (0.0, 0.45, 0.9, 1.35, 1.8),
    3.0: (0.0, 0.7, 1.4, 2.1, 2.8),
}
TRIALS_PER_CONDITION = 15

GUESS_RATE = 0.5  # 2AFC
MAX_LAPSE = 0.06


@dataclass(frozen=True)
class FixationOrbit:
    """Circling fixation target: radius and rate in visual angle, randomized phase."""

    radius_deg: float = 16.0
    rate_deg_s: float = 90.0
    direction: str = "ccw"
    start_phase_deg: float = 0.0


@dataclass(frozen=True)
class TrialCondition:
    experiment: str  # "detection" | "discrimination"
    absolute_d: float
    offset_d: float
    relative_d: float
    interval_with_effect: str  # "first" | "second"
    fixation_orbit: FixationOrbit = field(default_factory=FixationOrbit)

    def __post_init__(self):
        if self.experiment not in ("detection", "discrimination"):
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.interval_with_effect not in ("first", "second"):
            raise ValueError("interval_with_effect must be 'first' or 'second'")


@dataclass(frozen=True)
class SessionPlan:
    trials: tuple[TrialCondition, ...]
    rng_seed: int


@dataclass(frozen=True)
class SimulatedObserver:
    """Generative 2AFC observer calibrated to the reported human results."""

    detection_threshold_d: float = 0.36
    psychometric_slope: float = 0.15  # spread of the cumulative Gaussian, diopters
    lapse_rate: float = 0.02
    weber_fraction: float = 0.11
    rng_seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.lapse_rate <= MAX_LAPSE):
            raise ValueError(f"lapse rate must be in [0, {MAX_LAPSE}]")
        if self.detection_threshold_d <= 0.0 or self.psychometric_slope <= 0.0:
            raise ValueError("threshold and slope must be positive")


@dataclass(frozen=True)
class PsychometricFit:
    """Maximum-likelihood cumulative-Gaussian fit over diopters, guess fixed at 0.5."""

    alpha: float
    beta: float
    lapse: float
    log_likelihood: float
    threshold75: float
    reliable: bool = True
    guess: float = GUESS_RATE


def _randomized_trials(conditions, experiment: str, seed: int) -> SessionPlan:
    rng = np.random.default_rng(seed)
    trials = []
    for absolute_d, offset_d, relative_d in conditions:
        for _ in range(TRIALS_PER_CONDITION):
            trials.append(
                TrialCondition(
                    experiment=experiment,
                    absolute_d=absolute_d,
                    offset_d=offset_d,
                    relative_d=relative_d,
                    interval_with_effect="first" if rng.random() < 0.5 else "second",
                    fixation_orbit=FixationOrbit(
                        direction="ccw" if rng.random() < 0.5 else "cw",
                        start_phase_deg=float(rng.uniform(0.0, 360.0)),
                    ),
                )
            )
    order = rng.permutation(len(trials))
    return SessionPlan(trials=tuple(trials[i] for i in order), rng_seed=seed)


def plan_detection_session(seed: int) -> SessionPlan:
    """225-trial detection session: {1,2,3} D back depths x {0..1} D relative distances."""
    conditions = [
        (a, 0.0, r) for a in DETECTION_ABSOLUTE_D for r in DETECTION_RELATIVE_D
    ]
    return _randomized_trials(conditions, "detection", seed)


def plan_discrimination_session(seed: int) -> SessionPlan:
    """225-trial discrimination session: back surface at 0 D, pedestals {1,2,3} D.

    Both intervals render with parallax enabled; the tested increment is added
    to the pedestal in the flagged interval.
    """
    conditions = [
        (0.0, o, r) for o in DISCRIMINATION_OFFSETS_D for r in DISCRIMINATION_STEPS_D[o]
    ]
    return _randomized_trials(conditions, "discrimination", seed)


def psychometric(x, alpha: float, beta: float, lapse: float):
    """2AFC performance curve: 0.5 + (0.5 - lapse) * Phi((x - alpha) / beta)."""
    return GUESS_RATE + (GUESS_RATE - lapse) * ndtr((np.asarray(x, float) - alpha) / beta)


def effective_alpha(obs: SimulatedObserver, cond: TrialCondition) -> float:
    if cond.experiment == "detection":
        return obs.detection_threshold_d
    return obs.detection_threshold_d + obs.weber_fraction * cond.offset_d


def response_probability(cond: TrialCondition, obs: SimulatedObserver) -> float:
    """Probability the simulated observer answers correctly; exactly chance when no signal."""
    if cond.relative_d <= 0.0:
        return GUESS_RATE
    alpha = effective_alpha(obs, cond)
    return float(psychometric(cond.relative_d, alpha, obs.psychometric_slope, obs.lapse_rate))


@dataclass(frozen=True)
class TrialResult:
    condition: TrialCondition
    chosen_interval: str
    correct: bool


def simulate_response(
    cond: TrialCondition, obs: SimulatedObserver, rng: np.random.Generator
) -> TrialResult:
    """One 2AFC response drawn from the generative model."""
    correct = bool(rng.random() < response_probability(cond, obs))
    if correct:
        chosen = cond.interval_with_effect
    else:
        chosen = "second" if cond.interval_with_effect == "first" else "first"
    return TrialResult(condition=cond, chosen_interval=chosen, correct=correct)


def run_session(plan: SessionPlan, obs: SimulatedObserver, rng=None) -> list[TrialResult]:
    if rng is None:
        rng = np.random.default_rng(obs.rng_seed)
    # The generative probability only depends on (experiment, offset, level),
    # so compute it once per distinct condition instead of per trial.
    prob_cache: dict[tuple, float] = {}
    results = []
    for cond in plan.trials:
        key = (cond.experiment, cond.offset_d, cond.relative_d)
        if key not in prob_cache:
            prob_cache[key] = response_probability(cond, obs)
        correct = bool(rng.random() < prob_cache[key])
        if correct:
            chosen = cond.interval_with_effect
        else:
            chosen = "second" if cond.interval_with_effect == "first" else "first"
        results.append(TrialResult(condition=cond, chosen_interval=chosen, correct=correct))
    return results


def tally_levels(results, level_of=lambda r: r.condition.relative_d):
    """Aggregate trial results into (level, n_trials, n_correct) rows sorted by level."""
    counts: dict[float, list[int]] = {}
    for r in results:
        row = counts.setdefault(level_of(r), [0, 0])
        row[0] += 1
        row[1] += int(r.correct)
    return [(x, n, k) for x, (n, k) in sorted(counts.items())]


def _negative_ll(params, x, n, k):
    alpha, beta, lapse = params
    p = np.clip(psychometric(x, alpha, beta, lapse), 1e-12, 1.0 - 1e-12)
    return -float(np.sum(k * np.log(p) + (n - k) * np.log(1.0 - p)))


def _negative_ll_grad(params, x, n, k):
    alpha, beta, lapse = params
    z = (x - alpha) / beta
    p = np.clip(GUESS_RATE + (GUESS_RATE - lapse) * ndtr(z), 1e-12, 1.0 - 1e-12)
    weight = k / p - (n - k) / (1.0 - p)
    pdf = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    dp_dalpha = -(GUESS_RATE - lapse) * pdf / beta
    dp_dbeta = -(GUESS_RATE - lapse) * pdf * z / beta
    dp_dlapse = -ndtr(z)
    return -np.array([
        float(np.sum(weight * dp_dalpha)),
        float(np.sum(weight * dp_dbeta)),
        float(np.sum(weight * dp_dlapse)),
    ])


def _grid_ll(x, n, k, alphas, betas, lapses):
    A, B, L = np.meshgrid(alphas, betas, lapses, indexing="ij")
    z = (x[None, None, None, :] - A[..., None]) / B[..., None]
    p = GUESS_RATE + (GUESS_RATE - L[..., None]) * ndtr(z)
    p = np.clip(p, 1e-12, 1.0 - 1e-12)
    ll = np.sum(k * np.log(p) + (n - k) * np.log(1.0 - p), axis=-1)
    idx = np.unravel_index(np.argmax(ll), ll.shape)
    return (float(A[idx]), float(B[idx]), float(L[idx])), float(ll[idx])


def threshold_from_params(alpha: float, beta: float, lapse: float) -> float:
    """Stimulus level where the fitted curve reaches 75% correct."""
    return alpha + beta * float(ndtri(0.25 / (GUESS_RATE - lapse)))


def _validate_fit_data(data):
    x = np.array([row[0] for row in data], dtype=float)
    n = np.array([row[1] for row in data], dtype=float)
    k = np.array([row[2] for row in data], dtype=float)
    if np.any(k > n) or np.any(n <= 0):
        raise ValueError("need 0 <= n_correct <= n_trials and n_trials > 0 per level")
    if len(np.unique(x)) < 3:
        raise ValueError("need at least 3 distinct stimulus levels")
    if n.sum() < 30:
        raise ValueError("need at least 30 trials in total")
    return x, n, k


def _is_degenerate(x, n, k) -> bool:
    signal = x > 0
    if not np.any(signal):
        return True
    if np.all(k[signal] == n[signal]):
        return True  # saturated everywhere; threshold not localizable
    p_pooled = binomial_test(int(k[signal].sum()), int(n[signal].sum()))
    return p_pooled > 0.05  # indistinguishable from chance


def fit_psychometric(data) -> PsychometricFit:
    """Maximum-likelihood fit of (alpha, beta, lapse) to rows of (level, n_trials, n_correct).

    A coarse likelihood grid seeds bounded L-BFGS-B refinements from the best
    grid points, so the optimum is never below the grid's. Data that is
    all-correct or statistically at chance across every signal level gets a
    fit flagged unreliable.
    """
    x, n, k = _validate_fit_data(data)
    x_max = float(x.max())

    alphas = np.linspace(1e-3, 1.5 * x_max, 24)
    betas = np.linspace(1e-3, x_max, 24)
    lapses = np.linspace(0.0, MAX_LAPSE, 7)
    (a0, b0, l0), _ = _grid_ll(x, n, k, alphas, betas, lapses)

    bounds = [(1e-4, 1.5 * x_max), (1e-4, x_max), (0.0, MAX_LAPSE)]
    starts = [
        (a0, b0, l0),
        (float(np.median(x[x > 0])) if np.any(x > 0) else 0.5 * x_max, 0.2 * x_max, 0.01),
        (0.5 * x_max, 0.5 * x_max, 0.0),
    ]
    best = None
    for start in starts:
        res = minimize(_negative_ll, start, jac=_negative_ll_grad, args=(x, n, k),
                       method="L-BFGS-B", bounds=bounds)
        if best is None or res.fun < best.fun:
            best = res
    alpha, beta, lapse = (float(v) for v in best.x)
    return PsychometricFit(
        alpha=alpha,
        beta=beta,
        lapse=lapse,
        log_likelihood=-float(best.fun),
        threshold75=threshold_from_params(alpha, beta, lapse),
        reliable=not _is_degenerate(x, n, k),
    )


def grid_search_fit(data, n_alpha: int = 100, n_beta: int = 100, n_lapse: int = 13) -> PsychometricFit:
    """Brute-force grid-search fit over the same bounded box; the optimizer's oracle."""
    x, n, k = _validate_fit_data(data)
    x_max = float(x.max())
    alphas = np.linspace(1e-3, 1.5 * x_max, n_alpha)
    betas = np.linspace(1e-3, x_max, n_beta)
    lapses = np.linspace(0.0, MAX_LAPSE, n_lapse)
    (alpha, beta, lapse), ll = _grid_ll(x, n, k, alphas, betas, lapses)
    return PsychometricFit(
        alpha=alpha,
        beta=beta,
        lapse=lapse,
        log_likelihood=ll,
        threshold75=threshold_from_params(alpha, beta, lapse),
        reliable=not _is_degenerate(x, n, k),
    )


def simulate_level_counts(
    obs: SimulatedObserver,
    conditions: list[TrialCondition],
    n_per_condition: int,
    rng: np.random.Generator,
):
    """Binomial shortcut for large-n validation runs: (level, n, k) per condition."""
    return [
        (cond.relative_d, n_per_condition, int(rng.binomial(n_per_condition, response_probability(cond, obs))))
        for cond in conditions
    ]


def discrimination_linear_fit(thresholds) -> tuple[float, float]:
    """Ordinary least squares of threshold on pedestal: returns (slope, intercept_d)."""
    pedestals = np.array([t[0] for t in thresholds], dtype=float)
    values = np.array([t[1] for t in thresholds], dtype=float)
    if len(np.unique(pedestals)) < 2:
        raise ValueError("need at least 2 distinct pedestals")
    slope, intercept = np.polyfit(pedestals, values, 1)
    return float(slope), float(intercept)


def proportion_correct(responses) -> float:
    vals = [bool(r.correct) if isinstance(r, TrialResult) else bool(r) for r in responses]
    if not vals:
        raise ValueError("no responses")
    return sum(vals) / len(vals)


def binomial_test(successes: int, trials: int, p0: float = 0.5) -> float:
    """Exact one-tailed (greater) binomial tail probability P(X >= successes | p0).

    Small counts use the exact combinatorial sum; large counts switch to the
    regularized-incomplete-beta tail to stay inside float range.
    """
    if trials <= 0:
        raise ValueError("trials must be positive")
    if not (0 <= successes <= trials):
        raise ValueError("need 0 <= successes <= trials")
    if trials <= 500:
        q0 = 1.0 - p0
        return float(
            sum(
                math.comb(trials, i) * p0**i * q0 ** (trials - i)
                for i in range(successes, trials + 1)
            )
        )
    from scipy.stats import binom

    return float(binom.sf(successes - 1, trials, p0))
