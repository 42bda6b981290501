"""Sequential synthesis of fixed-N states by small ladder rotations.

Starting from the reference state with every photon in the last mode, a
target amplitude vector is built by a sweep of exponentials
``exp(alpha * B - conj(alpha) * B†)`` whose generators ``B`` raise an
increasing number of photons out of the reference mode (``J+^k`` on a mode
pair; products of first-order hops in the multimode case).  The first pass
chooses each amplitude by literal first-order matching of the target
amplitude ratios; an optional second pass re-measures the residual and
appends touch-up steps whose amplitudes are solved exactly (damped
Gauss-Newton with analytic derivatives of the step exponentials).
"""

from __future__ import annotations

import cmath
import json
import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import expm, expm_frechet

from .hilbert import (
    BasisMismatchError,
    FockBasis,
    State,
    basis_state,
    fidelity,
    make_basis,
    random_state,
)
from .prng import DEFAULT_SEED, SplitMix64
from .schwinger import _hop_csr

logger = logging.getLogger(__name__)

#: Default bound on per-step amplitudes.
SMALL_ANGLE_DEFAULT = 1e-2


class ZeroLeadingCoefficientError(ValueError):
    """Target's reference-state amplitude is below the configured floor."""


class TargetOrderError(ValueError):
    """Multimode target has support beyond the configured excitation order."""


@dataclass(frozen=True)
class PlanStep:
    """One exponential step, applied ``repetitions`` times.

    ``pairs`` lists the mode pairs whose raising hops are multiplied into
    the generator ``B``; ``order = len(pairs)`` photons are moved per
    application of ``B``.  ``stage`` records which planning phase emitted
    the step: ``match`` (first-order matching sweep), ``touchup``
    (corrective second pass), or ``closing`` (final rotation undoing a
    leading-coefficient pre-rotation).
    """

    order: int
    pairs: tuple[tuple[int, int], ...]
    amplitude: complex
    repetitions: int
    stage: str


@dataclass(frozen=True)
class SynthesisPlan:
    """Ordered steps steering the reference state to ``target``."""

    steps: tuple[PlanStep, ...]
    target: State
    small_angle: float

    @property
    def total_repetitions(self) -> int:
        return sum(s.repetitions for s in self.steps)

    def to_json(self) -> str:
        return json.dumps(
            {
                "small_angle": self.small_angle,
                "target": json.loads(self.target.to_json()),
                "steps": [
                    {
                        "order": s.order,
                        "pairs": [list(p) for p in s.pairs],
                        "amplitude": [s.amplitude.real, s.amplitude.imag],
                        "repetitions": s.repetitions,
                        "stage": s.stage,
                    }
                    for s in self.steps
                ],
            }
        )

    @staticmethod
    def from_json(text: str) -> "SynthesisPlan":
        data = json.loads(text)
        target = State.from_json(json.dumps(data["target"]))
        steps = tuple(
            PlanStep(
                order=int(s["order"]),
                pairs=tuple((int(i), int(j)) for i, j in s["pairs"]),
                amplitude=complex(s["amplitude"][0], s["amplitude"][1]),
                repetitions=int(s["repetitions"]),
                stage=str(s["stage"]),
            )
            for s in data["steps"]
        )
        return SynthesisPlan(steps, target, float(data["small_angle"]))


@dataclass(frozen=True)
class ExecutionResult:
    state: State
    fidelity: float


# ---------------------------------------------------------------------------
# Generators and execution


def _generator_matrix(
    basis: FockBasis, pairs: Sequence[tuple[int, int]]
) -> np.ndarray:
    """Dense matrix of the product of raising hops a_i† a_j over ``pairs``."""
    mat = np.eye(basis.dimension, dtype=np.complex128)
    for i, j in pairs:
        mat = _hop_csr(basis, i, j).toarray() @ mat
    return mat


def _step_unitary(basis: FockBasis, step: PlanStep) -> np.ndarray:
    b = _generator_matrix(basis, step.pairs)
    gen = step.amplitude * b - np.conj(step.amplitude) * b.conj().T
    return expm(gen)


def execute_plan(plan: SynthesisPlan, initial: State) -> ExecutionResult:
    """Apply every step exactly; report fidelity against the plan target."""
    if initial.basis != plan.target.basis:
        raise BasisMismatchError("plan target and initial state bases differ")
    basis = initial.basis
    vec = np.asarray(initial.amplitudes)
    for step in plan.steps:
        u = _step_unitary(basis, step)
        vec = np.linalg.matrix_power(u, step.repetitions) @ vec
    result = State(basis, vec, check_drift=True)
    return ExecutionResult(result, fidelity(result, plan.target))


def _steps_from_amplitudes(
    rhos: Sequence[complex],
    pairs_list: Sequence[tuple[tuple[int, int], ...]],
    small_angle: float,
    stage: str,
) -> list[PlanStep]:
    """Split net amplitudes into ceil(|rho|/small_angle) repetitions."""
    steps = []
    for rho, pairs in zip(rhos, pairs_list):
        if rho == 0:
            continue
        reps = max(1, math.ceil(abs(rho) / small_angle))
        steps.append(
            PlanStep(len(pairs), tuple(pairs), rho / reps, reps, stage)
        )
    return steps


# ---------------------------------------------------------------------------
# Amplitude solver for the corrective pass


def _vec_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    return abs(np.vdot(a, b)) ** 2


class _ProductSolver:
    """Solve prod_i exp(rho_i P_i - conj(rho_i) P_i†) u ≈ t (up to phase).

    Damped Gauss-Newton on the phase-projected residual (I - t t†) v with
    analytic Jacobian columns from the Fréchet derivative of each step
    exponential; falls back to geodesic target continuation and then
    deterministic perturbed restarts.
    """

    def __init__(self, generators: Sequence[np.ndarray]):
        self.gens = [np.asarray(p, dtype=np.complex128) for p in generators]
        self.m = len(self.gens)

    def apply(self, sig: np.ndarray, u: np.ndarray) -> np.ndarray:
        v = u
        for i, p in enumerate(self.gens):
            rho = sig[2 * i] + 1j * sig[2 * i + 1]
            v = expm(rho * p - np.conj(rho) * p.conj().T) @ v
        return v

    def _resid_jac(self, sig, u, t):
        d = len(u)
        units, fre, fim = [], [], []
        for i, p in enumerate(self.gens):
            m = p.conj().T
            rho = sig[2 * i] + 1j * sig[2 * i + 1]
            a = rho * p - np.conj(rho) * m
            unit, fr = expm_frechet(a, p - m)
            _, fi = expm_frechet(a, 1j * (p + m))
            units.append(unit)
            fre.append(fr)
            fim.append(fi)
        pre = [u]
        for unit in units:
            pre.append(unit @ pre[-1])
        v = pre[-1]
        suf = [np.eye(d, dtype=complex)]
        for unit in reversed(units):
            suf.append(suf[-1] @ unit)
        suf = suf[::-1]
        proj = np.eye(d, dtype=complex) - np.outer(t, t.conj())
        r = proj @ v
        jac = np.empty((2 * d, 2 * self.m))
        for i in range(self.m):
            cr = proj @ (suf[i + 1] @ (fre[i] @ pre[i]))
            ci = proj @ (suf[i + 1] @ (fim[i] @ pre[i]))
            jac[:d, 2 * i], jac[d:, 2 * i] = cr.real, cr.imag
            jac[:d, 2 * i + 1], jac[d:, 2 * i + 1] = ci.real, ci.imag
        return np.concatenate([r.real, r.imag]), jac, v

    def _lm(self, sig0, u, t, tol=1e-13, maxit=200):
        sig = sig0.copy()
        lam = 1e-3
        r, jac, v = self._resid_jac(sig, u, t)
        cost = r @ r
        for _ in range(maxit):
            a = jac.T @ jac
            g = jac.T @ r
            improved = False
            for _ in range(50):
                try:
                    step = np.linalg.solve(
                        a + lam * np.diag(np.maximum(np.diag(a), 1e-12)), -g
                    )
                except np.linalg.LinAlgError:
                    lam *= 10
                    continue
                r2, jac2, v2 = self._resid_jac(sig + step, u, t)
                if r2 @ r2 < cost:
                    sig, r, jac, v = sig + step, r2, jac2, v2
                    cost = r2 @ r2
                    lam = max(lam * 0.3, 1e-12)
                    improved = True
                    break
                lam *= 10
                if lam > 1e12:
                    return sig, cost, v
            if not improved or cost < tol * tol:
                break
        return sig, cost, v

    def solve(self, u, t, goal=1 - 1e-10):
        sig, _, v = self._lm(np.zeros(2 * self.m), u, t)
        best_f = _vec_fidelity(v, t)
        if best_f >= goal:
            return sig, best_f
        best = (best_f, sig)

        # Geodesic continuation: walk the target from u to t, warm-starting.
        overlap = np.vdot(u, t)
        t_aligned = t * (np.conj(overlap) / abs(overlap)) if abs(overlap) > 1e-12 else t
        omega = math.acos(min(1.0, abs(overlap)))
        sig = np.zeros(2 * self.m)
        lam_, step_len = 0.0, 0.2
        while lam_ < 1.0:
            nxt = min(1.0, lam_ + step_len)
            if omega < 1e-6:
                tl = t_aligned
            else:
                tl = (
                    math.sin((1 - nxt) * omega) * u
                    + math.sin(nxt * omega) * t_aligned
                ) / math.sin(omega)
            tl = tl / np.linalg.norm(tl)
            sig2, cost2, v2 = self._lm(sig, u, tl)
            if cost2 < 1e-20 or _vec_fidelity(v2, tl) > goal:
                sig, lam_ = sig2, nxt
                step_len = min(0.4, step_len * 1.5)
            else:
                step_len *= 0.5
                if step_len < 1e-4:
                    break
        v = self.apply(sig, u)
        f = _vec_fidelity(v, t)
        if f > best[0]:
            best = (f, sig)
        if best[0] >= goal:
            return best[1], best[0]

        # Deterministic perturbed restarts.
        for i in range(12):
            rng = SplitMix64(7000 + i)
            scale = 0.25 * (1 + i % 3)
            sig0 = np.array(
                [scale * rng.normal() for _ in range(2 * self.m)]
            )
            sig2, _, v2 = self._lm(sig0, u, t)
            f2 = _vec_fidelity(v2, t)
            if f2 > best[0]:
                best = (f2, sig2)
            if best[0] >= goal:
                break
        return best[1], best[0]


# ---------------------------------------------------------------------------
# Two-mode planner


def _ladder_element(n_tot: int, k: int) -> float:
    """⟨k, N-k| J+^k |0, N⟩ = prod_{j<k} sqrt((j+1)(N-j))."""
    out = 1.0
    for j in range(k):
        out *= math.sqrt((j + 1) * (n_tot - j))
    return out


def plan_two_mode(
    target: State,
    small_angle: float = SMALL_ANGLE_DEFAULT,
    passes: int = 2,
    fidelity_goal: float | None = None,
    c0_floor: float = 1e-6,
    c0_fallback: bool = True,
) -> SynthesisPlan:
    """Plan a ladder sweep steering |0, N⟩ to ``target`` on a two-mode basis.

    Pass 1 emits at most one step per order k = 1..N with the literal
    first-order matching rule  M_k * alpha_k * ⟨k|J+^k|0⟩ = c_k / c_0.
    With ``passes=2`` (default) the executed pass-1 state is re-measured
    and touch-up steps (two per order plus a trailing order-1 pair,
    amplitudes solved exactly) are appended, unless ``fidelity_goal`` is
    already met.  A target whose
    leading coefficient is below ``c0_floor`` is pre-rotated first and the
    inverse rotation appended as a closing step (or rejected when
    ``c0_fallback`` is off).  For N = 1 the single step is the exact
    rotation onto the target, which first-order matching only approximates.
    """
    basis = target.basis
    if basis.num_modes != 2:
        raise ValueError("two-mode planner requires a two-mode basis")
    if passes not in (1, 2):
        raise ValueError("passes must be 1 or 2")
    n_tot = basis.total_photons
    c = np.asarray(target.amplitudes)
    pair = ((0, 1),)

    if n_tot == 0:
        return SynthesisPlan((), target, small_angle)

    if n_tot == 1:
        # Exact: every N=1 state is one ladder rotation from |0, 1⟩.
        if abs(c[1]) == 0:
            return SynthesisPlan((), target, small_angle)
        theta = 2.0 * math.atan2(abs(c[1]), abs(c[0]))
        phi = cmath.phase(c[1]) - (cmath.phase(c[0]) if abs(c[0]) > 0 else 0.0)
        rho = (theta / 2.0) * cmath.exp(1j * phi)
        steps = _steps_from_amplitudes([rho], [pair], small_angle, "match")
        return SynthesisPlan(tuple(steps), target, small_angle)

    if abs(c[0]) < c0_floor:
        if not c0_fallback:
            raise ZeroLeadingCoefficientError(
                f"|c_0| = {abs(c[0]):.3e} below floor {c0_floor:.1e}"
            )
        return _plan_with_prerotation(
            target, small_angle, passes, fidelity_goal, c0_floor
        )

    rhos = [
        (c[k] / c[0]) / _ladder_element(n_tot, k) for k in range(1, n_tot + 1)
    ]
    steps = _steps_from_amplitudes(
        rhos, [pair * k for k in range(1, n_tot + 1)], small_angle, "match"
    )
    plan = SynthesisPlan(tuple(steps), target, small_angle)
    if passes == 1:
        return plan

    start = basis_state(basis, (0,) * (basis.num_modes - 1) + (n_tot,))
    pass1 = execute_plan(plan, start)
    if fidelity_goal is not None and pass1.fidelity >= fidelity_goal:
        return plan

    jp = _hop_csr(basis, 0, 1).toarray()
    # Two steps per order, plus a trailing order-1 pair: the highest-order
    # generator only rotates the {0, N} pair of levels, so without a final
    # full rotation block the sweep cannot re-register the intermediate
    # amplitudes (at N=2 this provably strands ~1/4 of random targets).
    touch_orders = [k for k in range(1, n_tot + 1) for _ in range(2)] + [1, 1]
    gens = [np.linalg.matrix_power(jp, k) for k in touch_orders]
    solver = _ProductSolver(gens)
    sig, achieved = solver.solve(
        np.asarray(pass1.state.amplitudes), c
    )
    touch_rhos = [sig[2 * i] + 1j * sig[2 * i + 1] for i in range(len(gens))]
    touch_steps = _steps_from_amplitudes(
        touch_rhos,
        [pair * k for k in touch_orders],
        small_angle,
        "touchup",
    )
    logger.debug(
        "two-pass plan: pass1 fidelity %.6f, solver fidelity %.13f",
        pass1.fidelity,
        achieved,
    )
    return SynthesisPlan(tuple(steps) + tuple(touch_steps), target, small_angle)


def _plan_with_prerotation(
    target: State,
    small_angle: float,
    passes: int,
    fidelity_goal: float | None,
    c0_floor: float,
) -> SynthesisPlan:
    """Handle |c_0| below floor: solve V† target, then append V."""
    basis = target.basis
    rng = SplitMix64(DEFAULT_SEED).derive(0xC0)
    c = np.asarray(target.amplitudes)
    jp = _hop_csr(basis, 0, 1).toarray()
    for _ in range(16):
        rho_v = 0.4 * rng.complex_normal()
        v = expm(rho_v * jp - np.conj(rho_v) * jp.conj().T)
        rotated = v.conj().T @ c
        if abs(rotated[0]) >= max(c0_floor, 0.05):
            inner = plan_two_mode(
                State(basis, rotated),
                small_angle,
                passes,
                fidelity_goal,
                c0_floor,
                c0_fallback=False,
            )
            closing = _steps_from_amplitudes(
                [rho_v], [((0, 1),)], small_angle, "closing"
            )
            return SynthesisPlan(
                inner.steps + tuple(closing), target, small_angle
            )
    raise ZeroLeadingCoefficientError(
        "could not find a pre-rotation giving a usable leading coefficient"
    )


# ---------------------------------------------------------------------------
# Multimode planner


def _support_occupations(
    basis: FockBasis, max_order: int
) -> list[tuple[tuple[int, ...], int]]:
    """Occupations with 1..max_order photons out of the last mode, with order;
    sorted by (order, occupation)."""
    last = basis.num_modes - 1
    n_tot = basis.total_photons
    occs = [
        (occ, n_tot - occ[last])
        for occ in basis.occupations
        if 1 <= n_tot - occ[last] <= max_order
    ]
    occs.sort(key=lambda t: (t[1], t[0]))
    return occs


def _multimode_generators(
    basis: FockBasis, max_order: int
) -> tuple[list[tuple[tuple[int, int], ...]], list[tuple[int, ...]]]:
    """Pairs tuples (one hop per raised photon) and their target occupations."""
    last = basis.num_modes - 1
    pairs_list, occ_list = [], []
    for occ, _order in _support_occupations(basis, max_order):
        pairs = []
        for mode in range(last):
            pairs.extend([(mode, last)] * occ[mode])
        pairs_list.append(tuple(pairs))
        occ_list.append(occ)
    return pairs_list, occ_list


def plan_multimode(
    target: State,
    small_angle: float = SMALL_ANGLE_DEFAULT,
    passes: int = 2,
    max_order: int = 2,
    fidelity_goal: float | None = None,
    c0_floor: float = 1e-6,
) -> SynthesisPlan:
    """Plan a sweep steering |0,...,0,N⟩ to a multimode target.

    Generators are products of raising hops a_j† a_K moving up to
    ``max_order`` photons out of the last mode; pass 1 matches each
    supported amplitude ratio literally through the exact matrix element,
    and ``passes=2`` appends a solved touch-up sweep.  Targets with
    support beyond ``max_order`` excitations are rejected.
    """
    basis = target.basis
    n_tot = basis.total_photons
    last = basis.num_modes - 1
    c = np.asarray(target.amplitudes)
    if passes not in (1, 2):
        raise ValueError("passes must be 1 or 2")

    start_occ = (0,) * last + (n_tot,)
    start_idx = basis.index_of(start_occ)
    if abs(c[start_idx]) < c0_floor:
        raise ZeroLeadingCoefficientError(
            f"|c_(0,...,0,N)| = {abs(c[start_idx]):.3e} below floor {c0_floor:.1e}"
        )
    for idx, occ in enumerate(basis.occupations):
        if n_tot - occ[last] > max_order and abs(c[idx]) > 1e-13:
            raise TargetOrderError(
                f"target has support at {occ}, beyond max_order={max_order}"
            )

    pairs_list, occ_list = _multimode_generators(basis, max_order)
    gens = [_generator_matrix(basis, pairs) for pairs in pairs_list]
    rhos = []
    for mat, occ in zip(gens, occ_list):
        element = mat[basis.index_of(occ), start_idx]
        rhos.append((c[basis.index_of(occ)] / c[start_idx]) / element)
    steps = _steps_from_amplitudes(rhos, pairs_list, small_angle, "match")
    plan = SynthesisPlan(tuple(steps), target, small_angle)
    if passes == 1:
        return plan

    start = basis_state(basis, start_occ)
    pass1 = execute_plan(plan, start)
    if fidelity_goal is not None and pass1.fidelity >= fidelity_goal:
        return plan

    # Doubled generator sweep plus trailing first-order steps for final
    # re-registration (mirrors the two-mode touch-up structure).
    first_order = [
        (g, p) for g, p in zip(gens, pairs_list) if len(p) == 1
    ]
    touch_gens = gens + gens + [g for g, _ in first_order]
    touch_pairs = pairs_list + pairs_list + [p for _, p in first_order]
    solver = _ProductSolver(touch_gens)
    sig, achieved = solver.solve(np.asarray(pass1.state.amplitudes), c)
    touch_rhos = [
        sig[2 * i] + 1j * sig[2 * i + 1] for i in range(len(touch_gens))
    ]
    touch_steps = _steps_from_amplitudes(
        touch_rhos, touch_pairs, small_angle, "touchup"
    )
    logger.debug(
        "multimode plan: pass1 fidelity %.6f, solver fidelity %.13f",
        pass1.fidelity,
        achieved,
    )
    return SynthesisPlan(tuple(steps) + tuple(touch_steps), target, small_angle)


# ---------------------------------------------------------------------------
# Benchmarks


def bench_targets(basis: FockBasis, count: int, seed: int) -> list[State]:
    """Deterministic random targets: substream ``i`` of ``seed`` per target."""
    rng = SplitMix64(seed)
    return [random_state(basis, rng.derive(i)) for i in range(count)]


def random_support_target(
    basis: FockBasis, max_order: int, seed: int
) -> State:
    """Random multimode target supported on ≤ max_order raised photons."""
    rng = SplitMix64(seed)
    last = basis.num_modes - 1
    n_tot = basis.total_photons
    amps = np.zeros(basis.dimension, dtype=np.complex128)
    for idx, occ in enumerate(basis.occupations):
        if n_tot - occ[last] <= max_order:
            amps[idx] = rng.complex_normal()
    return State(basis, amps)


@dataclass(frozen=True)
class ComplexityProbeResult:
    """Per-N plan sizes plus log-log slopes of the size columns."""

    rows: tuple[tuple[int, int, int, float], ...]  # (N, steps, reps, fidelity)
    slope_steps: float
    slope_repetitions: float


def synthesis_complexity_probe(
    n_list: Sequence[int],
    fidelity_target: float,
    small_angle: float = 1e-3,
    targets_per_n: int = 3,
    seed: int = DEFAULT_SEED,
) -> ComplexityProbeResult:
    """Plan seeded random targets per N and fit log-log size slopes.

    Reports the median step count, median total repetition count, and
    minimum achieved fidelity per N; slopes are least-squares fits of
    log(size) against log(N) (exploratory, no pass/fail attached).
    """
    rows = []
    for n_idx, n_tot in enumerate(n_list):
        if n_tot > 32:
            raise ValueError("probe is desk-scale: N must be <= 32")
        basis = make_basis(2, n_tot)
        steps_counts, reps_counts, fids = [], [], []
        for t_idx, target in enumerate(
            bench_targets(basis, targets_per_n, seed + 1000 * n_idx)
        ):
            plan = plan_two_mode(
                target,
                small_angle,
                passes=2,
                fidelity_goal=fidelity_target,
            )
            start = basis_state(basis, (0, n_tot))
            result = execute_plan(plan, start)
            steps_counts.append(len(plan.steps))
            reps_counts.append(plan.total_repetitions)
            fids.append(result.fidelity)
        rows.append(
            (
                int(n_tot),
                int(np.median(steps_counts)),
                int(np.median(reps_counts)),
                float(min(fids)),
            )
        )
    slope_steps = _loglog_slope([r[0] for r in rows], [r[1] for r in rows])
    slope_reps = _loglog_slope([r[0] for r in rows], [r[2] for r in rows])
    return ComplexityProbeResult(tuple(rows), slope_steps, slope_reps)


def _loglog_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    if len(xs) < 2:
        return float("nan")
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.log(np.maximum(np.asarray(ys, dtype=float), 1e-300))
    slope, _ = np.polyfit(lx, ly, 1)
    return float(slope)
