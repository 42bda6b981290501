"""Mode-pair angular-momentum algebra and unitaries on fixed-N Fock bases.

Two modes holding N photons in total carry a spin-N/2 representation through
the ladder maps ``J+ = a_i† a_j`` / ``J- = a_j† a_i`` and the population
imbalance ``Jz = (n_i - n_j)/2``.  This module builds those generators on
arbitrary mode pairs, exponentiates them into passive rotations and
higher-power (interaction-like) unitaries, provides the cyclic relative-phase
shift, and converts between amplitude vectors and their product-of-directions
(point-on-sphere) factorization for two-mode states.
"""

from __future__ import annotations

import cmath
import json
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linear_sum_assignment
from scipy.sparse.linalg import expm_multiply

from .hilbert import FockBasis, State, make_basis

logger = logging.getLogger(__name__)

#: Above this dimension, exponentials are applied action-only (never densified).
DENSE_EXP_LIMIT = 2048

HERMITIAN_TOL = 1e-12


class NonHermitianGeneratorError(ValueError):
    """Generator passed to an exponential is not Hermitian."""


class InvalidModePairError(ValueError):
    """Mode pair indices are out of range or equal."""


# ---------------------------------------------------------------------------
# Linear maps


class LinearOp:
    """Linear map on a fixed basis; subclasses implement ``apply_vec``."""

    basis: FockBasis

    def apply_vec(self, vec: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def dagger(self) -> "LinearOp":
        raise NotImplementedError

    def apply(self, state: State) -> State:
        """Apply to a state and renormalize (intended for unitaries;
        norm drift beyond 1e-10 is logged).  Use ``apply_vec`` for raw
        generator action."""
        if state.basis != self.basis:
            raise ValueError("operator and state bases differ")
        return State(
            self.basis,
            self.apply_vec(np.asarray(state.amplitudes)),
            check_drift=True,
        )

    def __matmul__(self, other: "LinearOp") -> "LinearOp":
        if self.basis != other.basis:
            raise ValueError("operator bases differ")
        if isinstance(self, SparseOperator) and isinstance(other, SparseOperator):
            return SparseOperator(self.basis, self.matrix @ other.matrix)
        left = self.factors if isinstance(self, ComposedOp) else (self,)
        right = other.factors if isinstance(other, ComposedOp) else (other,)
        return ComposedOp(self.basis, left + right)


class SparseOperator(LinearOp):
    """Explicit sparse matrix on a ``FockBasis`` with a Hermitian flag."""

    def __init__(
        self,
        basis: FockBasis,
        matrix: sp.spmatrix | np.ndarray,
        hermitian: bool = False,
    ):
        mat = sp.csr_matrix(matrix, dtype=np.complex128)
        if mat.shape != (basis.dimension, basis.dimension):
            raise ValueError(
                f"matrix shape {mat.shape} does not match basis dimension "
                f"{basis.dimension}"
            )
        if hermitian:
            drift = abs(mat - mat.getH())
            if drift.count_nonzero() and drift.max() > HERMITIAN_TOL:
                raise NonHermitianGeneratorError(
                    f"matrix deviates from Hermiticity by {drift.max():.3e}"
                )
        self.basis = basis
        self.matrix = mat
        self.hermitian_flag = hermitian

    def entries(self) -> Iterator[tuple[int, int, complex]]:
        coo = self.matrix.tocoo()
        for r, c, v in zip(coo.row, coo.col, coo.data):
            yield int(r), int(c), complex(v)

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def apply_vec(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix @ vec

    def dagger(self) -> "SparseOperator":
        return SparseOperator(self.basis, self.matrix.getH(), self.hermitian_flag)

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        return SparseOperator(self.basis, self.matrix + other.matrix)

    def __sub__(self, other: "SparseOperator") -> "SparseOperator":
        return SparseOperator(self.basis, self.matrix - other.matrix)

    def __mul__(self, scalar: complex) -> "SparseOperator":
        return SparseOperator(self.basis, self.matrix * scalar)

    __rmul__ = __mul__

    def max_abs(self) -> float:
        if self.matrix.count_nonzero() == 0:
            return 0.0
        return float(abs(self.matrix).max())

    def to_json(self) -> str:
        triplets = [
            [r, c, v.real, v.imag] for r, c, v in self.entries()
        ]
        return json.dumps(
            {
                "modes": self.basis.num_modes,
                "photons": self.basis.total_photons,
                "entries": triplets,
            }
        )

    @staticmethod
    def from_json(text: str) -> "SparseOperator":
        data = json.loads(text)
        basis = make_basis(int(data["modes"]), int(data["photons"]))
        dim = basis.dimension
        rows, cols, vals = [], [], []
        for r, c, re, im in data["entries"]:
            rows.append(int(r))
            cols.append(int(c))
            vals.append(complex(re, im))
        mat = sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim))
        return SparseOperator(basis, mat)


class LazyExpUnitary(LinearOp):
    """exp(i*chi*G) applied action-only; used above ``DENSE_EXP_LIMIT``."""

    def __init__(self, basis: FockBasis, generator: sp.spmatrix, chi: float):
        self.basis = basis
        self.generator = sp.csr_matrix(generator, dtype=np.complex128)
        self.chi = float(chi)

    def apply_vec(self, vec: np.ndarray) -> np.ndarray:
        return expm_multiply(1j * self.chi * self.generator, vec)

    def dagger(self) -> "LazyExpUnitary":
        return LazyExpUnitary(self.basis, self.generator, -self.chi)


class ComposedOp(LinearOp):
    """Product of linear maps; ``factors`` apply right-to-left."""

    def __init__(self, basis: FockBasis, factors: Sequence[LinearOp]):
        self.basis = basis
        self.factors = tuple(factors)

    def apply_vec(self, vec: np.ndarray) -> np.ndarray:
        for op in reversed(self.factors):
            vec = op.apply_vec(vec)
        return vec

    def dagger(self) -> "ComposedOp":
        return ComposedOp(
            self.basis, tuple(op.dagger() for op in reversed(self.factors))
        )


# ---------------------------------------------------------------------------
# Generators


def _check_pair(basis: FockBasis, mode_pair: tuple[int, int]) -> tuple[int, int]:
    i, j = int(mode_pair[0]), int(mode_pair[1])
    if i == j or not (0 <= i < basis.num_modes) or not (0 <= j < basis.num_modes):
        raise InvalidModePairError(
            f"mode pair {mode_pair} invalid for K={basis.num_modes}"
        )
    return i, j


@lru_cache(maxsize=None)
def _hop_csr(basis: FockBasis, i: int, j: int) -> sp.csr_matrix:
    """Sparse matrix of a_i† a_j (moves one photon from mode j to mode i)."""
    rows, cols, vals = [], [], []
    for col, occ in enumerate(basis.occupations):
        nj = occ[j]
        if nj == 0:
            continue
        new = list(occ)
        new[i] += 1
        new[j] -= 1
        rows.append(basis.index_of(new))
        cols.append(col)
        vals.append(math.sqrt((occ[i] + 1) * nj))
    dim = basis.dimension
    return sp.coo_matrix(
        (np.array(vals, dtype=np.complex128), (rows, cols)), shape=(dim, dim)
    ).tocsr()


def j_operator(
    basis: FockBasis, axis: str, mode_pair: tuple[int, int] = (0, 1)
) -> SparseOperator:
    """Angular-momentum generator on a mode pair.

    ``axis`` is one of ``'x','y','z','+','-'``.  On the pair (i, j):
    ``J+ = a_i† a_j``, ``J- = a_j† a_i``, ``Jz = (n_i - n_j)/2``,
    ``Jx = (J+ + J-)/2``, ``Jy = (J+ - J-)/(2i)``.
    """
    i, j = _check_pair(basis, mode_pair)
    if axis == "+":
        return SparseOperator(basis, _hop_csr(basis, i, j))
    if axis == "-":
        return SparseOperator(basis, _hop_csr(basis, j, i))
    if axis == "z":
        diag = np.array(
            [(occ[i] - occ[j]) / 2.0 for occ in basis.occupations],
            dtype=np.complex128,
        )
        return SparseOperator(basis, sp.diags(diag), hermitian=True)
    plus = _hop_csr(basis, i, j)
    minus = _hop_csr(basis, j, i)
    if axis == "x":
        return SparseOperator(basis, (plus + minus) * 0.5, hermitian=True)
    if axis == "y":
        return SparseOperator(basis, (plus - minus) * (-0.5j), hermitian=True)
    raise ValueError(f"unknown axis {axis!r}; expected one of x, y, z, +, -")


def axis_generator(
    basis: FockBasis,
    axis: str | Sequence[float],
    mode_pair: tuple[int, int] = (0, 1),
) -> SparseOperator:
    """J along a unit 3-vector (or named axis) on the given mode pair."""
    if isinstance(axis, str):
        return j_operator(basis, axis, mode_pair)
    n = np.asarray(axis, dtype=float)
    if n.shape != (3,):
        raise ValueError("axis vector must have three components")
    norm = float(np.linalg.norm(n))
    if norm == 0:
        raise ValueError("axis vector must be nonzero")
    n = n / norm
    mat = sum(
        n[k] * j_operator(basis, ax, mode_pair).matrix
        for k, ax in enumerate("xyz")
    )
    return SparseOperator(basis, mat, hermitian=True)


# ---------------------------------------------------------------------------
# Unitaries


def exp_unitary(generator: SparseOperator, chi: float) -> LinearOp:
    """exp(i*chi*G) for a Hermitian generator G.

    Dense eigendecomposition below ``DENSE_EXP_LIMIT``; action-only
    (never materialized) above it.
    """
    if not generator.hermitian_flag:
        raise NonHermitianGeneratorError("generator must carry a Hermitian flag")
    drift = abs(generator.matrix - generator.matrix.getH())
    if drift.count_nonzero() and drift.max() > HERMITIAN_TOL:
        raise NonHermitianGeneratorError(
            f"generator deviates from Hermiticity by {drift.max():.3e}"
        )
    basis = generator.basis
    if basis.dimension > DENSE_EXP_LIMIT:
        return LazyExpUnitary(basis, generator.matrix, chi)
    w, v = np.linalg.eigh(generator.to_dense())
    unitary = (v * np.exp(1j * chi * w)) @ v.conj().T
    return SparseOperator(basis, unitary)


def rotation(
    basis: FockBasis,
    theta: float,
    phi: float,
    mode_pair: tuple[int, int] = (0, 1),
) -> LinearOp:
    """Passive pair rotation R(theta, phi) = exp(i*phi*Jz) exp(i*theta*Jy)."""
    u_z = exp_unitary(j_operator(basis, "z", mode_pair), phi)
    u_y = exp_unitary(j_operator(basis, "y", mode_pair), theta)
    return u_z @ u_y


def sng_unitary(
    basis: FockBasis,
    axis: str | Sequence[float],
    chi: float,
    power: int,
    mode_pair: tuple[int, int] = (0, 1),
) -> LinearOp:
    """exp(i*chi*(J_axis)^power) with power >= 2 (interaction-like unitary)."""
    if power < 2:
        raise ValueError("power must be >= 2; use exp_unitary for linear terms")
    j_n = axis_generator(basis, axis, mode_pair)
    dense_pow = np.linalg.matrix_power(j_n.to_dense(), power)
    dense_pow = (dense_pow + dense_pow.conj().T) / 2
    return exp_unitary(SparseOperator(basis, dense_pow, hermitian=True), chi)


def relative_phase_op(
    basis: FockBasis, mode_pair: tuple[int, int] = (0, 1)
) -> SparseOperator:
    """Cyclic one-photon shift on a mode pair.

    Sends (n_i, n_j) to (n_i+1, n_j-1) and wraps the ladder edge
    (n_i+n_j, 0) back to (0, n_i+n_j), making the shift unitary.
    For K=2 the period is N+1.
    """
    i, j = _check_pair(basis, mode_pair)
    dim = basis.dimension
    rows = np.empty(dim, dtype=int)
    for col, occ in enumerate(basis.occupations):
        new = list(occ)
        if occ[j] > 0:
            new[i] += 1
            new[j] -= 1
        else:
            new[j] = occ[i]
            new[i] = 0
        rows[col] = basis.index_of(new)
    mat = sp.coo_matrix(
        (np.ones(dim, dtype=np.complex128), (rows, np.arange(dim))),
        shape=(dim, dim),
    )
    return SparseOperator(basis, mat)


# ---------------------------------------------------------------------------
# Product-of-directions (sphere-point) form for two-mode states


@dataclass(frozen=True)
class MajoranaSpec:
    """N directions (theta_k, phi_k) whose product of creation operators
    factorizes a two-mode N-photon state."""

    points: tuple[tuple[float, float], ...]
    mode_pair: tuple[int, int] = (0, 1)


def majorana_to_state(spec: MajoranaSpec, basis: FockBasis) -> State:
    """Expand prod_k (cos(θ_k/2) b† + e^{iφ_k} sin(θ_k/2) a†) |vac⟩.

    All points equal (θ, φ) reproduces rotation(θ, φ) applied to |0, N⟩ up
    to a global phase; all θ_k = 0 gives |0, N⟩ and all θ_k = π gives |N, 0⟩.
    """
    if basis.num_modes != 2:
        raise ValueError("product-of-directions form requires a two-mode basis")
    n_tot = basis.total_photons
    if len(spec.points) != n_tot:
        raise ValueError(
            f"need exactly {n_tot} points, got {len(spec.points)}"
        )
    poly = np.array([1.0 + 0.0j])
    for theta, phi in spec.points:
        factor = np.array(
            [math.cos(theta / 2), cmath.exp(1j * phi) * math.sin(theta / 2)]
        )
        poly = np.convolve(poly, factor)
    # poly[n] multiplies (a†)^n (b†)^(N-n)|vac> = sqrt(n!(N-n)!) |n, N-n>
    amps = np.array(
        [
            poly[n]
            * math.exp(0.5 * (math.lgamma(n + 1) + math.lgamma(n_tot - n + 1)))
            for n in range(n_tot + 1)
        ],
        dtype=np.complex128,
    )
    if np.linalg.norm(amps) < 1e-300:
        raise ValueError("degenerate point set: vanishing norm")
    return State(basis, amps)


ROOT_CONDITION_WARN = 1e12


def state_to_majorana(state: State) -> MajoranaSpec:
    """Invert the product form: factor the amplitude polynomial into points.

    The polynomial sum_n c_n sqrt(C(N,n)) z^n factors over its roots; each
    root z maps to a direction through w = -1/z, theta = 2*atan|w|,
    phi = arg w.  Roots at z = 0 map to theta = pi; a degree deficit
    (vanishing leading coefficients) contributes points with theta = 0.
    """
    basis = state.basis
    if basis.num_modes != 2:
        raise ValueError("product-of-directions form requires a two-mode basis")
    n_tot = basis.total_photons
    coeffs = np.array(
        [
            state.amplitudes[n] * math.sqrt(math.comb(n_tot, n))
            for n in range(n_tot + 1)
        ],
        dtype=np.complex128,
    )
    scale = float(np.max(np.abs(coeffs)))
    coeffs = coeffs / scale
    # Descending-degree order for the root finder; strip the degree deficit.
    desc = coeffs[::-1]
    lead = 0
    while lead < len(desc) - 1 and abs(desc[lead]) < 1e-14:
        lead += 1
    desc = desc[lead:]
    deficit = lead
    points: list[tuple[float, float]] = [(0.0, 0.0)] * deficit
    if len(desc) > 1:
        roots = np.roots(desc)
        _warn_if_ill_conditioned(desc, roots)
        for z in roots:
            if abs(z) < 1e-300:
                points.append((math.pi, 0.0))
                continue
            w = -1.0 / z
            theta = 2.0 * math.atan(abs(w))
            phi = math.atan2(w.imag, w.real) % (2 * math.pi)
            points.append((theta, phi))
    return MajoranaSpec(tuple(points), (0, 1))


def _warn_if_ill_conditioned(desc: np.ndarray, roots: np.ndarray) -> None:
    """Log when a root's sensitivity to coefficient noise exceeds the bound."""
    deg = len(desc) - 1
    dp = desc[:-1] * np.arange(deg, 0, -1)
    worst = 0.0
    for z in roots:
        powers = np.abs(z) ** np.arange(deg, -1, -1)
        size = float(np.abs(desc) @ powers)
        deriv = abs(np.polyval(dp, z)) * max(abs(z), 1e-30)
        worst = max(worst, size / max(deriv, 1e-300))
    if worst > ROOT_CONDITION_WARN:
        logger.warning(
            "root extraction condition estimate %.3e exceeds %.1e",
            worst,
            ROOT_CONDITION_WARN,
        )


def su2_point_matrix(theta: float, phi: float) -> np.ndarray:
    """2x2 spinor matrix of rotation(theta, phi); acts on direction spinors."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    phase = cmath.exp(1j * phi / 2)
    return np.array(
        [[c / phase, -s / phase], [s * phase, c * phase]], dtype=np.complex128
    )


def transform_points(
    points: Sequence[tuple[float, float]], matrix2: np.ndarray
) -> tuple[tuple[float, float], ...]:
    """Apply a 2x2 unitary to each direction spinor (cos θ/2, e^{iφ} sin θ/2)."""
    out = []
    for theta, phi in points:
        v = matrix2 @ np.array(
            [math.cos(theta / 2), cmath.exp(1j * phi) * math.sin(theta / 2)]
        )
        t = 2.0 * math.atan2(abs(v[1]), abs(v[0]))
        if abs(v[0]) < 1e-300 or abs(v[1]) < 1e-300:
            p = 0.0
        else:
            p = cmath.phase(v[1] * v[0].conjugate()) % (2 * math.pi)
        out.append((t, p))
    return tuple(out)


def bloch_vector(point: tuple[float, float]) -> np.ndarray:
    theta, phi = point
    return np.array(
        [
            math.sin(theta) * math.cos(phi),
            math.sin(theta) * math.sin(phi),
            math.cos(theta),
        ]
    )


def point_multiset_distance(
    a: Sequence[tuple[float, float]], b: Sequence[tuple[float, float]]
) -> float:
    """Max matched distance between two equal-size direction multisets.

    Points are compared as unit vectors on the sphere under an optimal
    one-to-one matching, so ordering and the φ gauge at the poles are
    irrelevant.
    """
    if len(a) != len(b):
        raise ValueError("point multisets must have equal size")
    va = np.array([bloch_vector(p) for p in a])
    vb = np.array([bloch_vector(p) for p in b])
    cost = np.linalg.norm(va[:, None, :] - vb[None, :, :], axis=2)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


# ---------------------------------------------------------------------------
# Rotation fitting (is a given unitary a single pair rotation?)


@dataclass(frozen=True)
class RotationFit:
    """Best single-rotation description of a unitary on a mode pair."""

    axis: tuple[float, float, float]
    angle: float
    theta: float
    phi: float
    residual: float


def fit_rotation(
    unitary: SparseOperator, mode_pair: tuple[int, int] = (0, 1)
) -> RotationFit:
    """Fit exp(i*eta*(n·J)) (times a phase) to a unitary.

    Extracts the 3x3 image of the J vector under conjugation, projects it
    onto the rotation group, rebuilds the candidate, and reports the
    phase-minimized max-entry deviation.  A residual at roundoff level
    certifies membership in the pair-rotation family.
    """
    basis = unitary.basis
    ops = [j_operator(basis, ax, mode_pair).to_dense() for ax in "xyz"]
    u = unitary.to_dense()
    udag = u.conj().T
    norm = float(np.trace(ops[2] @ ops[2]).real)
    adj = np.empty((3, 3))
    for col in range(3):
        conj = u @ ops[col] @ udag
        for row in range(3):
            adj[row, col] = float(np.trace(ops[row] @ conj).real) / norm
    # Nearest rotation matrix via polar decomposition.
    uu, _, vv = np.linalg.svd(adj)
    rot = uu @ vv
    if np.linalg.det(rot) < 0:
        uu[:, -1] *= -1
        rot = uu @ vv
    angle = math.acos(min(1.0, max(-1.0, (np.trace(rot) - 1) / 2)))
    if angle < 1e-12:
        axis = np.array([0.0, 0.0, 1.0])
    else:
        axis = np.array(
            [
                rot[2, 1] - rot[1, 2],
                rot[0, 2] - rot[2, 0],
                rot[1, 0] - rot[0, 1],
            ]
        )
        if np.linalg.norm(axis) < 1e-9:
            # Angle near pi: axis from the symmetric part.
            sym = (rot + np.eye(3)) / 2
            axis = sym[:, int(np.argmax(np.diag(sym)))]
        axis = axis / np.linalg.norm(axis)

    best: RotationFit | None = None
    for eta in (angle, -angle):
        gen = axis_generator(basis, tuple(axis), mode_pair)
        cand = exp_unitary(gen, eta).to_dense()
        overlap = np.trace(cand.conj().T @ u)
        gamma = cmath.phase(overlap) if abs(overlap) > 0 else 0.0
        residual = float(np.max(np.abs(u - cmath.exp(1j * gamma) * cand)))
        if best is None or residual < best.residual:
            theta = math.acos(min(1.0, max(-1.0, axis[2])))
            phi = math.atan2(axis[1], -axis[0]) % (2 * math.pi)
            best = RotationFit(
                tuple(float(x) for x in axis), eta, theta, phi, residual
            )
    assert best is not None
    return best
