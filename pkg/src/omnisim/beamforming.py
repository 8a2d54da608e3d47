"""Hybrid beamforming: closed-form zero-forcing at the BS plus discrete
optimization of the panel configuration.

The digital precoder is the channel pseudo-inverse with unit-norm columns
and equal per-stream power.  Configuration search is deliberately shared
between the greedy sweep and the exhaustive oracle: both call the same
objective with the same cached geometry, so "exhaustive >= greedy" holds
exactly, not just statistically.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .channel import (ChannelGeometry, ChannelMatrix, FadingModel,
                      FadingRealization, Scene, assemble_entries,
                      channel_geometry, draw_realizations)
from .elements import Configuration, Granularity, StateTable
from .errors import (RankDeficientChannelError, SearchSpaceError,
                     TooManyUsersError, ValidationError)
from .geometry import ElementLayout, Side

CONDITION_LIMIT = 1e12
EXHAUSTIVE_GUARD = 2 ** 20


@dataclass(frozen=True, eq=False)
class BeamformerResult:
    """Zero-forcing precoder with unit-norm columns and equal stream powers."""

    precoder: np.ndarray          # (Nt, K), unit-norm columns
    power_allocation: np.ndarray  # (K,) linear W per stream
    per_user_rate: np.ndarray     # (K,) bits/s/Hz
    sum_rate: float
    column_norms: np.ndarray      # (K,) norms of the raw pseudo-inverse columns

    @property
    def total_power(self) -> float:
        return float(np.sum(self.power_allocation *
                            np.sum(np.abs(self.precoder) ** 2, axis=0)))


def _reject_condition(cond: float) -> None:
    if not np.isfinite(cond) or cond >= CONDITION_LIMIT:
        raise RankDeficientChannelError(
            f"channel Gram matrix condition number {cond:.3e} exceeds "
            f"{CONDITION_LIMIT:.0e}"
        )


def _zf_core(H: np.ndarray, total_power_w: float,
             noise_power_w: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Shared ZF arithmetic: returns (raw pseudo-inverse, norms, rates).

    K <= 2 uses closed-form Hermitian eigenvalues/inverse (the optimizer hot
    path); larger systems go through LAPACK.  The condition guard has the
    same meaning on every branch.
    """
    k_users, n_antennas = H.shape
    if k_users > n_antennas:
        raise TooManyUsersError(
            f"too many users for ZF: K={k_users} > Nt={n_antennas}"
        )
    herm = H.conj().T
    gram = H @ herm
    if k_users == 1:
        a = gram[0, 0].real
        _reject_condition(1.0 if a > 0 else math.inf)
        raw = herm / a
    elif k_users == 2:
        a, c = gram[0, 0].real, gram[1, 1].real
        b = gram[0, 1]
        half_gap = math.hypot(0.5 * (a - c), abs(b))
        eig_max = 0.5 * (a + c) + half_gap
        eig_min = 0.5 * (a + c) - half_gap
        _reject_condition(eig_max / eig_min if eig_min > 0 else math.inf)
        det = eig_max * eig_min
        inv = np.array([[c / det, -b / det],
                        [-b.conjugate() / det, a / det]])
        raw = herm @ inv
    else:
        cond = np.linalg.cond(gram)
        _reject_condition(cond)
        try:
            raw = herm @ np.linalg.inv(gram)  # (Nt, K), H @ raw = I
        except np.linalg.LinAlgError as exc:
            raise RankDeficientChannelError(str(exc)) from exc
    norms = np.sqrt(np.sum(np.abs(raw) ** 2, axis=0))
    if np.any(norms == 0):
        raise RankDeficientChannelError("pseudo-inverse produced a zero column")
    sinr = (total_power_w / k_users) / (noise_power_w * norms ** 2)
    rates = np.log2(1.0 + sinr)
    return raw, norms, rates


def zf_precoder(channel, total_power_w: float, noise_power_w: float) -> BeamformerResult:
    """Closed-form zero-forcing beamformer with equal per-stream power.

    Raises TooManyUsersError when K > Nt and RankDeficientChannelError when
    H H^H is singular or its condition number reaches 1e12.
    """
    H = channel.entries if isinstance(channel, ChannelMatrix) else \
        np.atleast_2d(np.asarray(channel, dtype=complex))
    if not (total_power_w > 0 and noise_power_w > 0):
        raise ValidationError("total power and noise power must be positive")
    raw, norms, rates = _zf_core(H, total_power_w, noise_power_w)
    precoder = raw / norms[None, :]
    power = np.full(H.shape[0], total_power_w / H.shape[0])
    return BeamformerResult(precoder=precoder, power_allocation=power,
                            per_user_rate=rates, sum_rate=float(np.sum(rates)),
                            column_norms=norms)


@dataclass(frozen=True, eq=False)
class RateResult:
    """Sum rate of one configuration; degenerate marks a rank-failed channel."""

    sum_rate: float
    per_user_rate: np.ndarray
    degenerate: bool


def _states_rates(geometry: ChannelGeometry, coefficient_matrix: np.ndarray,
                  states: np.ndarray, total_power_w: float,
                  noise_power_w: float,
                  fading: FadingRealization | None = None) -> RateResult:
    """Rates for a raw per-element state array; rank failures map to rate 0."""
    H = assemble_entries(geometry, coefficient_matrix, states, fading=fading)
    try:
        _, _, rates = _zf_core(H, total_power_w, noise_power_w)
    except RankDeficientChannelError:
        return RateResult(sum_rate=0.0,
                          per_user_rate=np.zeros(geometry.num_users),
                          degenerate=True)
    return RateResult(sum_rate=float(np.sum(rates)), per_user_rate=rates,
                      degenerate=False)


def evaluate_rates(scene: Scene, layout: ElementLayout, table: StateTable,
                   config: Configuration, *,
                   geometry: ChannelGeometry | None = None,
                   fading: FadingRealization | None = None) -> RateResult:
    """ZF sum rate for one configuration; rank failures map to rate 0."""
    if geometry is None:
        geometry = channel_geometry(scene, layout)
    config.validate_against(table, layout)
    return _states_rates(geometry, table.coefficient_matrix,
                         np.asarray(config.states), scene.tx_power_w,
                         scene.noise_power_w, fading=fading)


def sum_rate(scene: Scene, layout: ElementLayout, table: StateTable,
             config: Configuration) -> float:
    """ZF sum rate in bits/s/Hz; 0 for degenerate (rank-failed) channels."""
    return evaluate_rates(scene, layout, table, config).sum_rate


@dataclass(frozen=True, eq=False)
class OptimizationOutcome:
    """Chosen configuration with its objective, per-sweep trace and eval count."""

    config: Configuration
    objective: float
    trace: tuple[tuple[int, float], ...]
    evaluations: int


class _UnitProblem:
    """Shared machinery: per-unit states expanded to per-element state
    arrays, evaluated against one cached channel geometry.

    Every optimizer evaluates candidates through :meth:`objective`, which is
    arithmetically identical to the public ``sum_rate`` path, so objectives
    reported by different optimizers are exactly comparable.
    """

    def __init__(self, scene: Scene, layout: ElementLayout, table: StateTable,
                 granularity: Granularity):
        self.scene = scene
        self.layout = layout
        self.table = table
        self.granularity = granularity
        self.geometry = channel_geometry(scene, layout)
        self.coefficients = table.coefficient_matrix
        self.num_states = table.num_states
        if granularity is Granularity.GROUP:
            self.num_units = layout.num_groups
        else:
            self.num_units = layout.num_elements
        self.evaluations = 0

    def expand(self, unit_states) -> np.ndarray:
        states = np.asarray(unit_states, dtype=np.int64)
        if self.granularity is Granularity.GROUP:
            return states[self.layout.group_of]
        return states

    def to_config(self, unit_states) -> Configuration:
        if self.granularity is Granularity.GROUP:
            return Configuration.from_group_states(self.layout, unit_states)
        return Configuration(states=tuple(unit_states))

    def objective(self, unit_states,
                  realizations: list[FadingRealization] | None = None) -> float:
        self.evaluations += 1
        states = self.expand(unit_states)
        if realizations is None:
            return _states_rates(self.geometry, self.coefficients, states,
                                 self.scene.tx_power_w,
                                 self.scene.noise_power_w).sum_rate
        total = math.fsum(
            _states_rates(self.geometry, self.coefficients, states,
                          self.scene.tx_power_w, self.scene.noise_power_w,
                          fading=r).sum_rate
            for r in realizations
        )
        return total / len(realizations)


def _greedy_sweeps(problem: _UnitProblem, max_sweeps: int, epsilon: float,
                   realizations=None):
    """One-at-a-time coordinate ascent over unit states.

    Each unit keeps its current state on ties; among strictly better states
    the lowest index wins.  Returns (unit_states, trace).
    """
    if max_sweeps < 1:
        raise ValidationError("max_sweeps must be at least 1")
    states = [0] * problem.num_units
    current = problem.objective(states, realizations)
    trace = [(0, current)]
    for sweep in range(1, max_sweeps + 1):
        before = current
        for unit in range(problem.num_units):
            held = states[unit]
            best_state, best_value = held, current
            for s in range(problem.num_states):
                if s == held:
                    continue
                states[unit] = s
                value = problem.objective(states, realizations)
                if value > best_value:
                    best_state, best_value = s, value
            states[unit] = best_state
            current = best_value
        trace.append((sweep, current))
        improvement = (current - before) / max(abs(before), 1e-30)
        if improvement < epsilon:
            break
    return states, trace


def greedy_optimize(scene: Scene, layout: ElementLayout, table: StateTable,
                    granularity: Granularity = Granularity.ELEMENT,
                    max_sweeps: int = 10,
                    epsilon: float = 1e-9) -> OptimizationOutcome:
    """Coordinate-ascent sweeps over unit states, starting from all zeros."""
    problem = _UnitProblem(scene, layout, table, granularity)
    states, trace = _greedy_sweeps(problem, max_sweeps, epsilon)
    return OptimizationOutcome(config=problem.to_config(states),
                               objective=trace[-1][1],
                               trace=tuple(trace),
                               evaluations=problem.evaluations)


def exhaustive_optimize(scene: Scene, layout: ElementLayout, table: StateTable,
                        granularity: Granularity = Granularity.ELEMENT
                        ) -> OptimizationOutcome:
    """Global optimum by enumeration; ties pick the lexicographically
    smallest configuration.  Refuses searches beyond 2^20 candidates."""
    problem = _UnitProblem(scene, layout, table, granularity)
    space = problem.num_states ** problem.num_units
    if space > EXHAUSTIVE_GUARD:
        raise SearchSpaceError(
            f"{problem.num_states}^{problem.num_units} = {space} candidates "
            f"exceed the {EXHAUSTIVE_GUARD} guard"
        )
    best_states = None
    best_value = -math.inf
    for candidate in itertools.product(range(problem.num_states),
                                       repeat=problem.num_units):
        value = problem.objective(candidate)
        if value > best_value:
            best_states, best_value = candidate, value
    return OptimizationOutcome(config=problem.to_config(best_states),
                               objective=best_value,
                               trace=((0, best_value),),
                               evaluations=problem.evaluations)


def random_baseline(scene: Scene, layout: ElementLayout, table: StateTable,
                    granularity: Granularity = Granularity.ELEMENT,
                    trials: int = 100, seed: int = 0) -> OptimizationOutcome:
    """Best of ``trials`` uniform configurations from a seeded generator."""
    if trials < 1:
        raise ValidationError("trials must be at least 1")
    problem = _UnitProblem(scene, layout, table, granularity)
    rng = np.random.default_rng(seed)
    best_states = None
    best_value = -math.inf
    trace = []
    for t in range(trials):
        candidate = rng.integers(0, problem.num_states, size=problem.num_units)
        value = problem.objective(candidate)
        if value > best_value:
            best_states, best_value = tuple(int(s) for s in candidate), value
            trace.append((t, value))
    return OptimizationOutcome(config=problem.to_config(best_states),
                               objective=best_value,
                               trace=tuple(trace),
                               evaluations=problem.evaluations)


def relaxed_upper_bound(scene: Scene, layout: ElementLayout,
                        table: StateTable) -> float:
    """Continuous-relaxation bound: per-user co-phasing with the largest
    side amplitude.  Upper-bounds the ZF sum rate of every discrete
    configuration (triangle inequality plus the matched-filter bound);
    not necessarily tight."""
    geometry = channel_geometry(scene, layout)
    # index 0 reflection, 1 refraction, matching user_side_index
    amax = np.array([float(np.max(table.amplitudes(Side.REFLECTION))),
                     float(np.max(table.amplitudes(Side.REFRACTION)))])
    g1 = np.abs(geometry.bs_to_element)      # (Nt, M)
    g2 = np.abs(geometry.element_to_user)    # (K, M)
    per_user_amax = amax[geometry.user_side_index]  # (K,)
    bound_entries = per_user_amax[:, None] * (g2 @ g1.T)  # (K, Nt)
    if geometry.direct is not None:
        bound_entries = bound_entries + np.abs(geometry.direct)
    norms_sq = np.sum(bound_entries ** 2, axis=1)
    p_per_stream = scene.tx_power_w / scene.num_users
    rates = np.log2(1.0 + p_per_stream * norms_sq / scene.noise_power_w)
    return float(np.sum(rates))


def statistical_optimize(scene: Scene, layout: ElementLayout, table: StateTable,
                         fading_model: FadingModel, num_samples: int, seed: int,
                         granularity: Granularity = Granularity.ELEMENT,
                         max_sweeps: int = 10,
                         epsilon: float = 1e-9) -> OptimizationOutcome:
    """Greedy sweeps against the sample-average sum rate under Rician fading.

    The fading realizations are drawn once up front and frozen across all
    candidate evaluations (common random numbers); the ZF precoder is
    recomputed per realization.  A degenerate (infinite-K) fading model
    reduces exactly to :func:`greedy_optimize`.
    """
    problem = _UnitProblem(scene, layout, table, granularity)
    realizations = None
    if not fading_model.is_degenerate:
        realizations = draw_realizations(fading_model, problem.geometry,
                                         seed, num_samples)
    elif num_samples < 1:
        raise ValidationError("num_samples must be at least 1")
    states, trace = _greedy_sweeps(problem, max_sweeps, epsilon, realizations)
    return OptimizationOutcome(config=problem.to_config(states),
                               objective=trace[-1][1],
                               trace=tuple(trace),
                               evaluations=problem.evaluations)
