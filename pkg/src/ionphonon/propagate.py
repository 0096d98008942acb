"""Time evolution ``|psi(t)> = exp(-iHt)|psi(0)>`` for time-independent sparse H.

The production path is a short-iterate Lanczos approximation of the matrix
exponential with adaptive substeps.  For every candidate substep ``h`` the
error is bounded by the integrated Krylov residual

    ||err(h)|| <= beta * beta_m * int_0^h |e_m^T exp(-i s T) e_1| ds,

which is cheap to evaluate from the eigendecomposition of the tridiagonal
``T`` once the Lanczos basis exists, so the step search never repeats
matrix-vector products.  Substep errors are budgeted as ``tol * h / (2 t_final)``
so the accumulated error at any output time stays below ``tol / 2``.

``propagator_dense`` is the independent oracle used for small spaces.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.linalg as sla

from ionphonon import kernels
from ionphonon.fock import Operator, SpaceMismatchError, StateVector, reduced_overlap

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
DEFAULT_KRYLOV_DIM = 30
DENSE_MAX_DIM = 200

# fraction of tol handed to the step controller; the rest absorbs round-off
_SAFETY = 0.5
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


class PropagationError(RuntimeError):
    """The requested accuracy could not be reached."""


class NonHermitianError(ValueError):
    pass


@dataclass
class Trajectory:
    times: np.ndarray
    states: list[StateVector] | None
    records: dict[str, np.ndarray] = field(default_factory=dict)
    stats: dict[str, float] = field(default_factory=dict)

    def record(self, name: str, fn: Callable[[StateVector], complex | float]) -> np.ndarray:
        """Evaluate ``fn`` on every stored state and keep it as a named record."""
        if self.states is None:
            raise ValueError("trajectory was computed without storing states")
        vals = np.array([fn(s) for s in self.states])
        if np.iscomplexobj(vals) and np.all(vals.imag == 0):
            vals = vals.real
        self.records[name] = vals
        return vals

    def to_csv(self, path, columns: Sequence[str] | None = None) -> None:
        write_csv(path, {"t": self.times, **{k: self.records[k] for k in (columns or self.records)}})


def format_float(x: float) -> str:
    return f"{float(x):.12g}"


def write_csv(path, columns: Mapping[str, Sequence]) -> None:
    """UTF-8, header row, ``,`` separator, 12 significant digits.

    Complex columns are split into ``<name>_re`` and ``<name>_im``.
    """
    flat: dict[str, np.ndarray] = {}
    for name, vals in columns.items():
        arr = np.asarray(vals)
        if np.iscomplexobj(arr):
            flat[f"{name}_re"] = arr.real
            flat[f"{name}_im"] = arr.imag
        else:
            flat[name] = arr
    lengths = {len(v) for v in flat.values()}
    if len(lengths) != 1:
        raise ValueError(f"columns have different lengths: {lengths}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(flat))
        for row in zip(*flat.values()):
            w.writerow([format_float(x) for x in row])


def check_hermitian(H: Operator, rtol: float = 1e-12) -> None:
    scale = max(1.0, float(abs(H.matrix).max()) if H.matrix.nnz else 0.0)
    err = H.hermiticity_error()
    if err > rtol * scale:
        raise NonHermitianError(f"Hamiltonian is not Hermitian (max |H - H^dag| = {err:.3e})")


def _validate_times(times) -> np.ndarray:
    t = np.asarray(times, dtype=float).reshape(-1)
    if t.size == 0:
        raise ValueError("need at least one output time")
    if t[0] < 0 or not np.all(np.isfinite(t)):
        raise ValueError("output times must be finite and non-negative")
    if np.any(np.diff(t) <= 0):
        raise ValueError("output times must be strictly increasing")
    return t


class _KrylovStep:
    """Lanczos basis for one starting vector and its cheap exponential."""

    def __init__(self, H: Operator, v: np.ndarray, m: int, full_reorth: bool, workspace: np.ndarray):
        self.beta0 = float(np.linalg.norm(v))
        mat = H.matrix
        V, alpha, beta, k = kernels.lanczos(mat.data, mat.indices, mat.indptr,
                                            np.ascontiguousarray(v / self.beta0), m, full_reorth,
                                            workspace=workspace)
        self.V = V
        self.k = k
        self.residual = float(beta[k - 1])
        self.evals, Q = sla.eigh_tridiagonal(alpha, beta[: k - 1])
        self.Q = Q
        self.q0 = Q[0, :].astype(np.complex128)
        self.qlast = Q[k - 1, :].astype(np.complex128)

    def coefficients(self, h: float) -> np.ndarray:
        return self.Q @ (np.exp(-1j * self.evals * h) * self.q0)

    def error_bound(self, h: float) -> float:
        if self.residual == 0.0:
            return 0.0
        s = 0.5 * h * (_GL_NODES + 1.0)
        vals = np.abs(np.exp(-1j * np.outer(s, self.evals)) @ (self.qlast * self.q0))
        return self.beta0 * self.residual * 0.5 * h * float(_GL_WEIGHTS @ vals)

    def advance(self, h: float) -> np.ndarray:
        return self.beta0 * kernels.krylov_combine(self.V, np.ascontiguousarray(self.coefficients(h)))


def evolve(
    H: Operator,
    psi0: StateVector,
    times: Sequence[float],
    tol: float = DEFAULT_TOL,
    krylov_dim: int = DEFAULT_KRYLOV_DIM,
    store_states: bool = True,
    observables: Mapping[str, Callable[[StateVector], complex | float]] | None = None,
    full_reorth: bool = False,
) -> Trajectory:
    """Propagate ``psi0`` (the state at t = 0) to every time in ``times`` (ms)."""
    if H.space != psi0.space:
        raise SpaceMismatchError("Hamiltonian and initial state live on different spaces")
    if not 0.0 < tol <= 1e-4:
        raise ValueError(f"tol must lie in (0, 1e-4], got {tol}")
    check_hermitian(H)
    t_out = _validate_times(times)
    t_final = float(t_out[-1])
    m = max(1, min(int(krylov_dim), H.space.dim))

    states: list[StateVector] = []
    recs: dict[str, list] = {k: [] for k in (observables or {})}
    stats = {"substeps": 0, "lanczos_builds": 0, "error_bound": 0.0, "max_norm_drift": 0.0}

    def emit(vec: np.ndarray) -> None:
        drift = abs(np.linalg.norm(vec) - 1.0)
        stats["max_norm_drift"] = max(stats["max_norm_drift"], drift)
        if drift > 10 * tol:
            raise PropagationError(f"norm drift {drift:.3e} exceeds 10*tol")
        st = StateVector(psi0.space, vec / np.linalg.norm(vec) if drift > 1e-13 else vec)
        if store_states:
            states.append(st)
        for name, fn in (observables or {}).items():
            recs[name].append(fn(st))

    zero_h = H.matrix.nnz == 0
    workspace = None if zero_h else np.empty((m, H.space.dim), dtype=np.complex128)
    v = psi0.amplitudes.copy()
    t_now = 0.0
    h_guess = math.inf
    floor = 1e-13 * max(t_final, 1.0)
    for t_target in t_out:
        while not zero_h and t_target - t_now > 1e-15 * max(1.0, t_final):
            step = _KrylovStep(H, v, m, full_reorth, workspace)
            stats["lanczos_builds"] += 1
            remaining = t_target - t_now
            h = min(remaining, h_guess * 2.0)
            while True:
                err = step.error_bound(h)
                budget = _SAFETY * tol * h / t_final
                if err <= budget:
                    break
                # error grows like h^k: shrink along that power law, at least 20%
                ratio = budget / err
                h *= min(0.8, max(0.1, 0.9 * ratio ** (1.0 / max(step.k - 1, 1))))
                if h < floor:
                    raise PropagationError(f"step size fell below {floor:.1e} ms at t={t_now:.6g}")
            v = step.advance(h)
            stats["substeps"] += 1
            stats["error_bound"] += err
            t_now = t_target if h == remaining else t_now + h
            if h < remaining:
                h_guess = h
        emit(v)

    traj = Trajectory(times=t_out, states=states if store_states else None, stats=stats)
    for name, vals in recs.items():
        arr = np.array(vals)
        traj.records[name] = arr.real if np.iscomplexobj(arr) and np.all(arr.imag == 0) else arr
    log.debug("evolve: dim=%d substeps=%d bound=%.2e", H.space.dim, stats["substeps"], stats["error_bound"])
    return traj


def propagator_dense(H: Operator, t: float) -> Operator:
    """``exp(-iHt)`` by full diagonalisation; only for dim <= 200."""
    if H.space.dim > DENSE_MAX_DIM:
        raise ValueError(f"dense propagator limited to dim <= {DENSE_MAX_DIM}, got {H.space.dim}")
    evals, vecs = np.linalg.eigh(H.toarray())
    u = (vecs * np.exp(-1j * evals * t)) @ vecs.conj().T
    return Operator(H.space, u)


def evolve_dense(H: Operator, psi0: StateVector, times: Sequence[float]) -> list[np.ndarray]:
    """Oracle counterpart of :func:`evolve` (amplitude vectors only)."""
    if H.space.dim > DENSE_MAX_DIM:
        raise ValueError(f"dense propagator limited to dim <= {DENSE_MAX_DIM}, got {H.space.dim}")
    evals, vecs = np.linalg.eigh(H.toarray())
    c0 = vecs.conj().T @ psi0.amplitudes
    return [vecs @ (np.exp(-1j * evals * t) * c0) for t in _validate_times(times)]


def record_probabilities(traj: Trajectory, basis_states: Sequence[StateVector]) -> np.ndarray:
    """``p[i, k]`` = probability of ``basis_states[k]`` at ``traj.times[i]``.

    Basis states on a subset of the subsystems are projected after tracing
    out the rest.
    """
    if traj.states is None:
        raise ValueError("trajectory was computed without storing states")
    out = np.empty((len(traj.states), len(basis_states)))
    for k, b in enumerate(basis_states):
        if abs(b.norm - 1.0) > 1e-10:
            raise ValueError("basis states must be normalized")
        for i, st in enumerate(traj.states):
            if b.space == st.space:
                out[i, k] = abs(np.vdot(b.amplitudes, st.amplitudes)) ** 2
            else:
                out[i, k] = reduced_overlap(st, b)
    return out
