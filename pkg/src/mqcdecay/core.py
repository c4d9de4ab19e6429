"""
Shared domain types and operator algebra for spin-1/2 chains.

Conventions
-----------
- Basis ordering: spin 1 is the most significant bit of a computational
  basis index, and bit value 0 is spin up (sigma_z = +1).  Pauli operators
  are built as ``kron(op_1, op_2, ..., op_N)``.
- Coherence order of ``|row><col|`` is ``m = n_up(row) - n_up(col)``.  With the
  collective rotation ``U_phi = exp(-i phi Sigma_z / 2)`` every element of
  order ``m`` picks up ``exp(-i m phi)``.  Double-quantum raising terms such
  as ``sigma_+ sigma_+`` therefore carry ``m = +2``.
- States are unnormalized traceless deviation operators (no 1/2^N, no
  Boltzmann prefactor); every reported observable is a ratio.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Mapping, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

MAX_SPINS = 12

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class DimensionCapError(ValueError):
    """Raised when a dense construction would exceed ``MAX_SPINS``."""


def check_cap(n_spins: int) -> None:
    if n_spins > MAX_SPINS:
        raise DimensionCapError(
            f"dense simulation is capped at N <= {MAX_SPINS} spins (got N={n_spins})"
        )


# ---------------------------------------------------------------------------
# Chain geometry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NearestNeighbor:
    """Only |i - j| = 1 couplings, all equal to b."""


@dataclass(frozen=True)
class DipolarPowerLaw:
    """Equally spaced collinear spins, b_ij = b / |i - j|^3.

    ``r0`` is the nearest-neighbour spacing; it is kept for bookkeeping only
    since ``b`` is already the coupling at that distance.
    """

    r0: float = 1.0


@dataclass(frozen=True)
class ExplicitMatrix:
    """User supplied symmetric coupling matrix in rad/s (zero diagonal)."""

    couplings: tuple[tuple[float, ...], ...]

    @classmethod
    def from_array(cls, b: ArrayLike) -> "ExplicitMatrix":
        arr = np.asarray(b, dtype=float)
        return cls(tuple(tuple(float(v) for v in row) for row in arr))


Topology = Union[NearestNeighbor, DipolarPowerLaw, ExplicitMatrix]


@dataclass(frozen=True)
class ChainSpec:
    """A linear chain of ``n_spins`` spin-1/2 nuclei.

    Parameters
    ----------
    n_spins : int
        Chain length N >= 1.
    coupling_b : float
        Nearest-neighbour coupling b in rad/s. Each spin pair enters the
        dipolar Hamiltonian as ``b_ij [2 zz - (xx + yy)]`` in Pauli operators.
    topology : NearestNeighbor | DipolarPowerLaw | ExplicitMatrix
    """

    n_spins: int
    coupling_b: float
    topology: Topology = field(default_factory=NearestNeighbor)

    def __post_init__(self):
        if int(self.n_spins) != self.n_spins or self.n_spins < 1:
            raise ValueError(f"n_spins must be a positive integer, got {self.n_spins!r}")
        if not self.coupling_b > 0:
            raise ValueError(f"coupling_b must be positive, got {self.coupling_b!r}")
        if isinstance(self.topology, ExplicitMatrix):
            b = np.asarray(self.topology.couplings, dtype=float)
            if b.shape != (self.n_spins, self.n_spins):
                raise ValueError(f"explicit coupling matrix must be {self.n_spins}x{self.n_spins}")
            if not np.allclose(b, b.T, atol=0.0, rtol=0.0):
                raise ValueError("explicit coupling matrix must be symmetric")
            if np.any(np.diag(b) != 0):
                raise ValueError("explicit coupling matrix must have zero diagonal")
        elif not isinstance(self.topology, (NearestNeighbor, DipolarPowerLaw)):
            raise TypeError(f"unknown topology {self.topology!r}")

    @property
    def dim(self) -> int:
        return 2**self.n_spins

    def couplings(self) -> NDArray[np.float64]:
        """Symmetric N x N matrix of b_ij in rad/s with zero diagonal."""
        n, b = self.n_spins, self.coupling_b
        if isinstance(self.topology, ExplicitMatrix):
            return np.asarray(self.topology.couplings, dtype=float)
        i = np.arange(n)
        dist = np.abs(i[:, None] - i[None, :])
        out = np.zeros((n, n))
        if isinstance(self.topology, NearestNeighbor):
            out[dist == 1] = b
        else:
            nz = dist > 0
            out[nz] = b / dist[nz] ** 3
        return out

    def pairs(self) -> list[tuple[int, int, float]]:
        """Nonzero couplings as ``(i, j, b_ij)`` with 0-based ``i < j``."""
        b = self.couplings()
        ii, jj = np.nonzero(np.triu(b, 1))
        return [(int(i), int(j), float(b[i, j])) for i, j in zip(ii, jj)]


# ---------------------------------------------------------------------------
# Dense operators
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DenseOperator:
    """A 2^N x 2^N complex matrix with optional Hermitian / unitary flags.

    Flags are validated at construction.  The eigendecomposition of a
    Hermitian operator is computed lazily once and then reused, which is what
    makes repeated propagation at many times cheap.
    """

    matrix: NDArray[np.complex128]
    hermitian: bool = False
    unitary: bool = False

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator must be square, got shape {m.shape}")
        d = m.shape[0]
        if d < 2 or d & (d - 1):
            raise ValueError(f"operator dimension must be a power of two >= 2, got {d}")
        if self.hermitian:
            scale = max(np.max(np.abs(m)), 1e-300)
            if np.max(np.abs(m - m.conj().T)) > 1e-12 * scale:
                raise ValueError("operator flagged hermitian is not Hermitian")
        if self.unitary:
            if np.max(np.abs(m.conj().T @ m - np.eye(d))) > 1e-10:
                raise ValueError("operator flagged unitary is not unitary")
        m.setflags(write=False)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_spins(self) -> int:
        return self.dim.bit_length() - 1

    @property
    def H(self) -> NDArray[np.complex128]:
        return self.matrix.conj().T

    @cached_property
    def eigh(self) -> tuple[NDArray[np.float64], NDArray[np.complex128]]:
        if not self.hermitian:
            raise ValueError("eigendecomposition requested for a non-Hermitian operator")
        w, v = np.linalg.eigh(self.matrix)
        return w, v


def as_matrix(op) -> NDArray[np.complex128]:
    if isinstance(op, DenseOperator):
        return op.matrix
    return np.asarray(op, dtype=complex)


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt inner product Tr{a b^dagger}."""
    return complex(np.vdot(as_matrix(b), as_matrix(a)))


# ---------------------------------------------------------------------------
# Pauli algebra
# ---------------------------------------------------------------------------


def build_pauli(site: int, axis: str, n_spins: int) -> DenseOperator:
    """Pauli matrix ``axis`` acting on ``site`` (1-based) of an N-spin chain."""
    if axis not in PAULI:
        raise ValueError(f"axis must be one of 'x', 'y', 'z', got {axis!r}")
    if not 1 <= site <= n_spins:
        raise ValueError(f"site must lie in 1..{n_spins}, got {site}")
    check_cap(n_spins)
    left = np.eye(2 ** (site - 1))
    right = np.eye(2 ** (n_spins - site))
    return DenseOperator(np.kron(np.kron(left, PAULI[axis]), right), hermitian=True)


@lru_cache(maxsize=None)
def _spin_signs(n_spins: int) -> NDArray[np.int8]:
    # row k = basis index, col j = sigma_z eigenvalue of spin j+1
    idx = np.arange(2**n_spins)
    bits = (idx[:, None] >> (n_spins - 1 - np.arange(n_spins))[None, :]) & 1
    out = (1 - 2 * bits).astype(np.int8)
    out.setflags(write=False)
    return out


def sigma_z_diagonals(n_spins: int) -> NDArray[np.int8]:
    """Array of shape (2^N, N): sigma_z eigenvalue of every spin per basis state."""
    check_cap(n_spins)
    return _spin_signs(n_spins)


def collective_sigma_z(n_spins: int) -> NDArray[np.float64]:
    """Diagonal of Sigma_z = sum_j sigma_z^j."""
    return sigma_z_diagonals(n_spins).sum(axis=1).astype(float)


def collective_rotation(phi: float, n_spins: int) -> DenseOperator:
    """U_phi = exp(-i phi Sigma_z / 2) (diagonal)."""
    return DenseOperator(np.diag(np.exp(-0.5j * phi * collective_sigma_z(n_spins))), unitary=True)


def rotation(axis: str, angle: float, n_spins: int) -> DenseOperator:
    """Collective rotation exp(-i angle Sigma_axis / 2) as a product of one-spin rotations."""
    single = np.cos(angle / 2) * np.eye(2) - 1j * np.sin(angle / 2) * PAULI[axis]
    u = np.array([[1.0 + 0j]])
    for _ in range(n_spins):
        u = np.kron(u, single)
    return DenseOperator(u, unitary=True)


# ---------------------------------------------------------------------------
# Initial states
# ---------------------------------------------------------------------------


class InitialState(enum.Enum):
    """Deviation density operators prepared before DQ evolution.

    ``XX`` starts from Sigma_x like ``TRANSVERSE_X``; the extra pi/2 rotation
    about y that distinguishes it is applied by the protocol runner.
    """

    THERMAL = "thermal"
    END_POLARIZED = "end_polarized"
    TRANSVERSE_X = "transverse_x"
    XX = "xx"


def make_initial_state(kind: InitialState, chain: ChainSpec) -> DenseOperator:
    n = chain.n_spins
    check_cap(n)
    kind = InitialState(kind)
    if kind is InitialState.THERMAL:
        return DenseOperator(np.diag(collective_sigma_z(n)).astype(complex), hermitian=True)
    if kind is InitialState.END_POLARIZED:
        z = sigma_z_diagonals(n)
        d = z[:, 0].astype(float) + (z[:, n - 1] if n > 1 else 0)
        return DenseOperator(np.diag(d).astype(complex), hermitian=True)
    total = np.zeros((2**n, 2**n), dtype=complex)
    for site in range(1, n + 1):
        total += build_pauli(site, "x", n).matrix
    return DenseOperator(total, hermitian=True)


# ---------------------------------------------------------------------------
# Coherence orders
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _order_matrix(n_spins: int) -> NDArray[np.int16]:
    up = (_spin_signs(n_spins) > 0).sum(axis=1).astype(np.int16)
    m = up[:, None] - up[None, :]
    m.setflags(write=False)
    return m


def coherence_orders(n_spins: int) -> NDArray[np.int16]:
    """Matrix of coherence orders m for every element |row><col|."""
    check_cap(n_spins)
    return _order_matrix(n_spins)


def coherence_order_of_element(row: int, col: int, n_spins: int) -> int:
    d = 2**n_spins
    if not (0 <= row < d and 0 <= col < d):
        raise IndexError(f"basis indices must lie in [0, {d}), got ({row}, {col})")
    up_row = n_spins - bin(row).count("1")
    up_col = n_spins - bin(col).count("1")
    return up_row - up_col


def project_coherence(rho, m: int) -> DenseOperator:
    """rho^(m): keep only elements of coherence order ``m``."""
    a = as_matrix(rho)
    n = a.shape[0].bit_length() - 1
    return DenseOperator(np.where(coherence_orders(n) == m, a, 0))


@dataclass(frozen=True)
class CoherenceSpectrum:
    """Intensities I^(m) keyed by coherence order, plus their normalization.

    ``intensities`` holds raw (unnormalized) values; ``normalization`` is the
    reference sum used by :meth:`normalized`.
    """

    intensities: Mapping[int, float]
    normalization: float

    def __getitem__(self, m: int) -> float:
        return self.intensities.get(m, 0.0)

    @property
    def orders(self) -> list[int]:
        return sorted(self.intensities)

    @property
    def total(self) -> float:
        return float(sum(self.intensities.values()))

    def normalized(self) -> dict[int, float]:
        return {m: v / self.normalization for m, v in sorted(self.intensities.items())}

    def check(self, atol: float = 1e-10) -> None:
        """Assert the nonnegativity and m <-> -m symmetry invariants."""
        scale = max(abs(self.normalization), 1e-300)
        for m, v in self.intensities.items():
            if v < -1e-12 * scale:
                raise AssertionError(f"negative intensity {v} at m={m}")
            if abs(v - self[-m]) > atol * scale:
                raise AssertionError(f"I({m}) != I({-m})")


def coherence_spectrum(rho, normalization: float | None = None) -> CoherenceSpectrum:
    """Sector weights I^(m) = Tr{rho^(m) rho^(m)^dagger} of a single operator."""
    a = as_matrix(rho)
    n = a.shape[0].bit_length() - 1
    orders = coherence_orders(n)
    w = np.abs(a) ** 2
    sums = np.bincount((orders + n).ravel(), weights=w.ravel(), minlength=2 * n + 1)
    intens = {m - n: float(v) for m, v in enumerate(sums)}
    norm = float(sums.sum()) if normalization is None else float(normalization)
    return CoherenceSpectrum(intens, norm)
