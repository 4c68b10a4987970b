"""Orthogonal matching pursuit instrumented to record the residual-energy trajectory.

Inner products are conjugate-linear in the first argument: ``<a, b> = a^H b``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .sensing import SampledDictionary

RANK_TOL = 1e-7
UNIT_NORM_TOL = 1e-9
# correlations this close (relative) to the maximum count as ties
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class PursuitConfig:
    max_iterations: int
    ls_refinement: bool = True

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")


@dataclass
class PursuitTrace:
    residual_norms: np.ndarray
    selected_atoms: np.ndarray
    coefficients: np.ndarray
    skipped: list = field(default_factory=list)
    """(iteration, atom) pairs dropped as linearly dependent on the atoms selected before that iteration."""
    exhausted_at: Optional[int] = None
    """First iteration at which no admissible atom remained; the residual is held constant from there."""
    residual: Optional[np.ndarray] = None
    """Final residual vector ``r_T``."""


def _atom_matrix(dictionary) -> np.ndarray:
    if isinstance(dictionary, SampledDictionary):
        return dictionary.compressed_atoms
    return np.asarray(dictionary, dtype=complex)


def _argmax_lowest(values: np.ndarray) -> int:
    """Index of the maximum, taking the lowest index among values within ``TIE_RTOL`` of it."""
    top = values.max()
    return int(np.argmax(values >= top - TIE_RTOL * abs(top)))


def omp_trace(signal, dictionary, cfg: PursuitConfig) -> PursuitTrace:
    """Run exactly ``cfg.max_iterations`` pursuit iterations and record ``||r_t||``.

    ``dictionary`` is a :class:`SampledDictionary` (its compressed atoms are
    used) or an ``(M, K)`` array with unit-norm columns. Each iteration picks
    the atom maximizing ``|<d_j, r>|``, lowest index on ties.

    With ``ls_refinement`` the residual is the least-squares residual on all
    selected atoms (orthogonal matching pursuit, maintained through an
    incremental Gram-Schmidt QR factorization). Without it, the step is the
    plain projection ``r <- r - <d, r> d`` and atoms may be picked again.
    """
    D = _atom_matrix(dictionary)
    y = np.asarray(signal, dtype=complex)
    if y.ndim != 1 or y.shape[0] != D.shape[0]:
        raise ValueError(f"signal length {y.shape} does not match dictionary dimension {D.shape[0]}")
    m, k = D.shape
    iters = cfg.max_iterations
    if iters > m:
        raise ValueError(f"max_iterations={iters} exceeds the compressed dimension {m}")

    if not cfg.ls_refinement:
        return _matching_pursuit(y, D, iters)

    DH = D.conj().T
    r = y.copy()
    Q = np.zeros((m, iters), dtype=complex)
    QH = np.zeros((iters, m), dtype=complex)
    R = np.zeros((iters, iters), dtype=complex)
    available = np.ones(k, dtype=bool)
    # energy of each atom inside span(Q); cheap screen for linear dependence
    captured = np.zeros(k)
    atom_energy = np.sum(np.abs(D) ** 2, axis=0)
    selected = []
    skipped = []
    norms = np.zeros(iters)
    exhausted_at = None
    for t in range(iters):
        if exhausted_at is None:
            dependent = available & ((atom_energy - captured) <= RANK_TOL ** 2)
            if dependent.any():
                skipped.extend((t, int(j)) for j in np.flatnonzero(dependent))
                available &= ~dependent
            corr = np.abs(DH @ r)
            corr[~available] = -1.0
            while True:
                j = _argmax_lowest(corr)
                if corr[j] < 0:
                    exhausted_at = t
                    break
                s = len(selected)
                v = D[:, j].copy()
                proj = QH[:s] @ v
                v -= Q[:, :s] @ proj
                again = QH[:s] @ v
                v -= Q[:, :s] @ again
                proj += again
                nv = np.sqrt(np.vdot(v, v).real)
                available[j] = False
                if nv <= RANK_TOL:
                    corr[j] = -1.0
                    skipped.append((t, j))
                    continue
                q = v / nv
                Q[:, s] = q
                QH[s] = q.conj()
                R[:s, s] = proj
                R[s, s] = nv
                selected.append(j)
                captured += np.abs(QH[s] @ D) ** 2
                r = r - q * (QH[s] @ r)
                r = r - Q[:, : s + 1] @ (QH[: s + 1] @ r)
                break
        norms[t] = np.sqrt(np.vdot(r, r).real)

    s = len(selected)
    if s:
        sel = D[:, selected]
        coef = _back_substitute(R[:s, :s], QH[:s] @ y)
        # one step of iterative refinement against the actual atoms
        coef += _back_substitute(R[:s, :s], QH[:s] @ (y - sel @ coef))
    else:
        coef = np.zeros(0, dtype=complex)
    return PursuitTrace(residual_norms=norms, selected_atoms=np.array(selected, dtype=int), coefficients=coef,
                        skipped=skipped, exhausted_at=exhausted_at, residual=r)


def _back_substitute(R: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = b.shape[0]
    x = np.zeros(n, dtype=complex)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - R[i, i + 1:] @ x[i + 1:]) / R[i, i]
    return x


def _matching_pursuit(y: np.ndarray, D: np.ndarray, iters: int) -> PursuitTrace:
    DH = D.conj().T
    r = y.copy()
    norms = np.zeros(iters)
    selected = np.zeros(iters, dtype=int)
    coef = np.zeros(iters, dtype=complex)
    for t in range(iters):
        inner = DH @ r
        j = _argmax_lowest(np.abs(inner))
        r = r - inner[j] * D[:, j]
        selected[t] = j
        coef[t] = inner[j]
        norms[t] = np.linalg.norm(r)
    return PursuitTrace(residual_norms=norms, selected_atoms=selected, coefficients=coef, residual=r)


def _check_atom(r0, atom):
    r0 = np.asarray(r0, dtype=complex)
    atom = np.asarray(atom, dtype=complex)
    if r0.shape != atom.shape:
        raise ValueError(f"length mismatch: residual {r0.shape} vs atom {atom.shape}")
    if abs(np.linalg.norm(atom) - 1.0) > UNIT_NORM_TOL:
        raise ValueError(f"atom must have unit norm, got {np.linalg.norm(atom)!r}")
    return r0, atom


def _project(r0: np.ndarray, atom: np.ndarray) -> np.ndarray:
    return r0 - np.vdot(atom, r0) * atom


def _energy_change(r0: np.ndarray, atom: np.ndarray) -> float:
    r1 = _project(r0, atom)
    return float(np.vdot(r1, r1).real - np.vdot(r0, r0).real)


def projection_step(r0, atom) -> np.ndarray:
    """Residual after removing the rank-one projection ``E = d d^H``: ``r0 - E r0``."""
    r0, atom = _check_atom(r0, atom)
    return _project(r0, atom)


def gradient_first_step(r0, atom) -> float:
    """First residual-energy gradient ``||r1||^2 - ||r0||^2`` of the projection step."""
    r0, atom = _check_atom(r0, atom)
    return _energy_change(r0, atom)
