"""Truncated Fock-space operator algebra.

A :class:`HilbertSpace` is an ordered tensor product of an optional spin-1/2
and up to three bosonic modes ``a``, ``b``, ``c``.  Subsystems are always
stored in the canonical order ``(spin, a, b, c)`` so flat indices are
reproducible; the spin basis is ``index 0 = down``, ``index 1 = up``.

Operators are sparse (CSR) and immutable.  Density matrices are dense and
only ever built on reduced spaces.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

SPIN = "spin"
MODES = ("a", "b", "c")
CANONICAL_ORDER = (SPIN,) + MODES
SPIN_INDEX = {"down": 0, "up": 1}

NORM_TOL = 1e-10


class SpaceMismatchError(ValueError):
    """Raised when objects living on different Hilbert spaces are combined."""


@dataclass(frozen=True)
class HilbertSpace:
    subsystems: tuple[tuple[str, int], ...]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lbl for lbl, _ in self.subsystems)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.subsystems)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64))

    def has(self, label: str) -> bool:
        return label in self.labels

    def position(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"subsystem {label!r} not in space {self.labels}") from None

    def dim_of(self, label: str) -> int:
        return self.dims[self.position(label)]

    def n_max(self, label: str) -> int:
        if label == SPIN:
            raise ValueError("spin has no Fock truncation")
        return self.dim_of(label) - 1

    def flat_index(self, multi: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(multi), self.dims))

    def multi_index(self, index: int) -> tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(index, self.dims))

    def restrict(self, labels: Iterable[str]) -> "HilbertSpace":
        keep = set(labels)
        return HilbertSpace(tuple(s for s in self.subsystems if s[0] in keep))


def make_space(subsystems: Iterable[tuple[str, int]] | Mapping[str, int]) -> HilbertSpace:
    """Build a space from ``(label, dimension)`` pairs in any order.

    >>> make_space([("c", 3), ("a", 2)]).labels
    ('a', 'c')
    """
    items = list(subsystems.items()) if isinstance(subsystems, Mapping) else list(subsystems)
    if not items:
        raise ValueError("a Hilbert space needs at least one subsystem")
    seen = set()
    for label, dim in items:
        if label not in CANONICAL_ORDER:
            raise ValueError(f"unknown subsystem label {label!r}; expected one of {CANONICAL_ORDER}")
        if label in seen:
            raise ValueError(f"duplicate subsystem label {label!r}")
        seen.add(label)
        if int(dim) != dim or dim < 1:
            raise ValueError(f"subsystem {label!r} needs a positive integer dimension, got {dim}")
        if label == SPIN and dim != 2:
            raise ValueError("spin subsystem must have dimension 2")
    ordered = sorted(items, key=lambda s: CANONICAL_ORDER.index(s[0]))
    return HilbertSpace(tuple((lbl, int(d)) for lbl, d in ordered))


def mode_space(n_max: int | Mapping[str, int], modes: Sequence[str] = MODES, spin: bool = False) -> HilbertSpace:
    """Convenience constructor: bosonic ``modes`` truncated at ``n_max``."""
    if isinstance(n_max, Mapping):
        subs = [(m, int(n_max[m]) + 1) for m in modes]
    else:
        subs = [(m, int(n_max) + 1) for m in modes]
    if spin:
        subs.append((SPIN, 2))
    return make_space(subs)


def _check_same(x, y) -> None:
    if x.space != y.space:
        raise SpaceMismatchError(f"space mismatch: {x.space.subsystems} vs {y.space.subsystems}")


@dataclass(frozen=True, eq=False)
class Operator:
    space: HilbertSpace
    matrix: sp.csr_matrix

    __array_ufunc__ = None

    def __post_init__(self):
        m = sp.csr_matrix(self.matrix, dtype=np.complex128, copy=True)
        if m.shape != (self.space.dim, self.space.dim):
            raise ValueError(f"matrix shape {m.shape} does not match space dim {self.space.dim}")
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        for arr in (m.data, m.indices, m.indptr):
            arr.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    def adjoint(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T.tocsr())

    dag = adjoint

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def element(self, bra: Sequence[int], ket: Sequence[int]) -> complex:
        """Matrix element between two multi-indexed basis states."""
        return complex(self.matrix[self.space.flat_index(bra), self.space.flat_index(ket)])

    def hermiticity_error(self) -> float:
        diff = self.matrix - self.matrix.conj().T
        return float(abs(diff).max()) if diff.nnz else 0.0

    def is_hermitian(self, atol: float = 0.0) -> bool:
        return self.hermiticity_error() <= atol

    def norm_bound(self) -> float:
        """Cheap upper bound on the spectral norm (max absolute row sum)."""
        if self.matrix.nnz == 0:
            return 0.0
        return float(abs(self.matrix).sum(axis=1).max())

    def __add__(self, other):
        if isinstance(other, Operator):
            _check_same(self, other)
            return Operator(self.space, self.matrix + other.matrix)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Operator):
            _check_same(self, other)
            return Operator(self.space, self.matrix - other.matrix)
        return NotImplemented

    def __neg__(self):
        return Operator(self.space, -self.matrix)

    def __mul__(self, scalar):
        if np.isscalar(scalar):
            return Operator(self.space, self.matrix * complex(scalar))
        return NotImplemented

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, Operator):
            _check_same(self, other)
            return Operator(self.space, self.matrix @ other.matrix)
        if isinstance(other, StateVector):
            _check_same(self, other)
            return self.matrix @ other.amplitudes
        return NotImplemented


def commutator(x: Operator, y: Operator) -> Operator:
    return x @ y - y @ x


def embed(space: HilbertSpace, local: Mapping[str, sp.spmatrix | np.ndarray]) -> Operator:
    """Tensor ``local`` single-subsystem matrices with identities elsewhere."""
    for label in local:
        space.position(label)
    out = None
    for label, d in space.subsystems:
        f = sp.csr_matrix(local[label], dtype=np.complex128) if label in local else sp.identity(d, dtype=np.complex128, format="csr")
        out = f if out is None else sp.kron(out, f, format="csr")
    return Operator(space, out)


def local_annihilation(dim: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, dim, dtype=float)), 1, shape=(dim, dim), format="csr", dtype=np.complex128)


def local_number(dim: int) -> sp.csr_matrix:
    return sp.diags(np.arange(dim, dtype=float), 0, format="csr", dtype=np.complex128)


def _require_mode(space: HilbertSpace, label: str) -> None:
    if label == SPIN:
        raise ValueError("ladder operators are defined for bosonic modes only, not spin")
    if not space.has(label):
        raise KeyError(f"mode {label!r} not in space {space.labels}")


def ladder(space: HilbertSpace, label: str) -> Operator:
    """Annihilation operator of ``label``; creation is ``ladder(...).adjoint()``."""
    _require_mode(space, label)
    return embed(space, {label: local_annihilation(space.dim_of(label))})


def number_op(space: HilbertSpace, label: str) -> Operator:
    _require_mode(space, label)
    return embed(space, {label: local_number(space.dim_of(label))})


def identity(space: HilbertSpace) -> Operator:
    return Operator(space, sp.identity(space.dim, dtype=np.complex128, format="csr"))


def spin_projector(space: HilbertSpace, which: str = "up") -> Operator:
    if not space.has(SPIN):
        raise ValueError("space has no spin subsystem")
    p = np.zeros((2, 2))
    p[SPIN_INDEX[which], SPIN_INDEX[which]] = 1.0
    return embed(space, {SPIN: p})


@dataclass(frozen=True, eq=False)
class StateVector:
    space: HilbertSpace
    amplitudes: np.ndarray

    __array_ufunc__ = None

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.shape[0] != self.space.dim:
            raise ValueError(f"{amps.shape[0]} amplitudes for a space of dim {self.space.dim}")
        nrm = np.linalg.norm(amps)
        if abs(nrm - 1.0) > NORM_TOL:
            raise ValueError(f"state not normalized (norm={nrm!r})")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_amplitudes(cls, space: HilbertSpace, amplitudes) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        nrm = np.linalg.norm(amps)
        if nrm == 0:
            raise ValueError("zero vector cannot be normalized")
        return cls(space, amps / nrm)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.space.dims)

    def overlap(self, other: "StateVector") -> complex:
        """``<self|other>``."""
        _check_same(self, other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    space: HilbertSpace
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128)
        if m.shape != (self.space.dim, self.space.dim):
            raise ValueError(f"matrix shape {m.shape} does not match space dim {self.space.dim}")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_state(cls, state: StateVector) -> "DensityMatrix":
        v = state.amplitudes
        return cls(state.space, np.outer(v, v.conj()))

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))


def fock_state(space: HilbertSpace, occupations: Mapping[str, int] | None = None, spin: str | None = None) -> StateVector:
    """Basis vector ``|spin, n_a, n_b, n_c>``; unlisted modes are in vacuum."""
    occupations = dict(occupations or {})
    multi = []
    for label, d in space.subsystems:
        if label == SPIN:
            if spin is None:
                raise ValueError("space has a spin subsystem; pass spin='up' or 'down'")
            multi.append(SPIN_INDEX[spin])
            continue
        n = int(occupations.pop(label, 0))
        if n < 0 or n >= d:
            raise ValueError(f"occupation {n} of mode {label!r} exceeds truncation n_max={d - 1}")
        multi.append(n)
    if occupations:
        raise KeyError(f"modes {sorted(occupations)} not in space {space.labels}")
    if spin is not None and not space.has(SPIN):
        raise ValueError("spin given but space has no spin subsystem")
    amps = np.zeros(space.dim, dtype=np.complex128)
    amps[space.flat_index(multi)] = 1.0
    return StateVector(space, amps)


def _split(space: HilbertSpace, keep: Sequence[str]):
    if not keep:
        raise ValueError("keep must name at least one subsystem")
    for label in keep:
        space.position(label)
    keep_pos = [i for i, lbl in enumerate(space.labels) if lbl in set(keep)]
    rest_pos = [i for i in range(len(space.labels)) if i not in keep_pos]
    return keep_pos, rest_pos, space.restrict(keep)


def _kept_matrix(state: StateVector, keep_pos, rest_pos) -> np.ndarray:
    psi = state.tensor().transpose(keep_pos + rest_pos)
    dk = int(np.prod([state.space.dims[i] for i in keep_pos]))
    return psi.reshape(dk, -1)


def partial_trace(state: StateVector | DensityMatrix, keep: Sequence[str]) -> DensityMatrix:
    """Reduced density matrix on the subsystems listed in ``keep``."""
    keep_pos, rest_pos, sub = _split(state.space, keep)
    if isinstance(state, StateVector):
        m = _kept_matrix(state, keep_pos, rest_pos)
        return DensityMatrix(sub, m @ m.conj().T)
    dims = state.space.dims
    nk = len(dims)
    rho = state.matrix.reshape(dims + dims)
    rho = rho.transpose(keep_pos + rest_pos + [nk + i for i in keep_pos] + [nk + i for i in rest_pos])
    dk = sub.dim
    dr = state.space.dim // dk
    rho = rho.reshape(dk, dr, dk, dr)
    return DensityMatrix(sub, np.einsum("ajbj->ab", rho))


def reduced_overlap(state: StateVector, target: StateVector) -> float:
    """``<target| Tr_rest |state><state| |target>`` without forming the density matrix.

    ``target`` lives on a subset of ``state``'s subsystems (possibly all of them).
    """
    labels = target.space.labels
    keep_pos, rest_pos, sub = _split(state.space, labels)
    if sub != target.space:
        raise SpaceMismatchError(f"target space {target.space.subsystems} is not a factor of {state.space.subsystems}")
    m = _kept_matrix(state, keep_pos, rest_pos)
    amps = target.amplitudes.conj() @ m
    return float(np.real(np.vdot(amps, amps)))


def fidelity(rho: DensityMatrix | StateVector, target: StateVector) -> float:
    """``<target|rho|target>``; a pure ``rho`` is reduced onto the target's subsystems."""
    if isinstance(rho, StateVector):
        return reduced_overlap(rho, target)
    _check_same(rho, target)
    t = target.amplitudes
    return float(np.real(np.vdot(t, rho.matrix @ t)))


def expectation(state: StateVector, op: Operator) -> complex:
    _check_same(state, op)
    return complex(np.vdot(state.amplitudes, op.matrix @ state.amplitudes))


def occupation_distribution(state: StateVector, label: str) -> np.ndarray:
    """Marginal distribution of one subsystem's basis index (diagonal of its reduced state)."""
    pos = state.space.position(label)
    p = np.abs(state.tensor()) ** 2
    axes = tuple(i for i in range(p.ndim) if i != pos)
    return p.sum(axis=axes) if axes else p
