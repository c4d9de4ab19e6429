"""
Exact-diagonalization engine.

Builds the secular dipolar and double-quantum Hamiltonians for a chain,
propagates deviation operators by eigendecomposition, runs the
phase-encoded multiple-quantum protocol, and evaluates second moments and
long-time asymptotes by direct matrix algebra.  Dense matrices throughout;
N <= 12.
"""

from __future__ import annotations

import enum
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from .core import (
    ChainSpec,
    CoherenceSpectrum,
    DenseOperator,
    InitialState,
    as_matrix,
    check_cap,
    collective_sigma_z,
    hs_inner,
    make_initial_state,
    project_coherence,
    rotation,
    sigma_z_diagonals,
)

# ---------------------------------------------------------------------------
# Hamiltonians
# ---------------------------------------------------------------------------


def _pair_terms(chain: ChainSpec, kind: str) -> NDArray[np.float64]:
    n = chain.n_spins
    check_cap(n)
    d = 2**n
    z = sigma_z_diagonals(n).astype(float)
    idx = np.arange(d)
    h = np.zeros((d, d))
    for i, j, bij in chain.pairs():
        zz = z[:, i] * z[:, j]
        if kind == "zz":
            h[idx, idx] += bij * zz
            continue
        mask = (1 << (n - 1 - i)) | (1 << (n - 1 - j))
        # flip-flop (xx + yy) links antiparallel pairs, flip-flip (xx - yy) parallel ones
        sel = zz < 0 if kind == "ff" else zz > 0
        src = idx[sel]
        h[src ^ mask, src] += 2.0 * bij
    return h


@lru_cache(maxsize=32)
def build_zz(chain: ChainSpec) -> DenseOperator:
    """H_zz = sum_{i<j} b_ij sigma_z^i sigma_z^j."""
    return DenseOperator(_pair_terms(chain, "zz").astype(complex), hermitian=True)


@lru_cache(maxsize=32)
def build_flip_flop(chain: ChainSpec) -> DenseOperator:
    """H_xx = sum_{i<j} b_ij (sigma_x^i sigma_x^j + sigma_y^i sigma_y^j)."""
    return DenseOperator(_pair_terms(chain, "ff").astype(complex), hermitian=True)


@lru_cache(maxsize=32)
def build_dipolar(chain: ChainSpec) -> DenseOperator:
    """Secular dipolar Hamiltonian, H = 2 H_zz - H_xx."""
    h = 2.0 * _pair_terms(chain, "zz") - _pair_terms(chain, "ff")
    return DenseOperator(h.astype(complex), hermitian=True)


@lru_cache(maxsize=32)
def build_dq(chain: ChainSpec) -> DenseOperator:
    """Double-quantum Hamiltonian sum_{i<j} b_ij (sigma_x^i sigma_x^j - sigma_y^i sigma_y^j)."""
    return DenseOperator(_pair_terms(chain, "dq").astype(complex), hermitian=True)


# ---------------------------------------------------------------------------
# Propagation
# ---------------------------------------------------------------------------


def _require_hermitian(H) -> DenseOperator:
    if isinstance(H, DenseOperator):
        if H.hermitian:
            return H
        H = H.matrix
    try:
        return DenseOperator(H, hermitian=True)
    except ValueError as exc:
        raise ValueError("Hamiltonian must be Hermitian") from exc


def propagator(H, time: float) -> DenseOperator:
    """exp(-i H time) from the cached eigendecomposition of H."""
    H = _require_hermitian(H)
    w, v = H.eigh
    return DenseOperator((v * np.exp(-1j * w * time)) @ v.conj().T, unitary=True)


def evolve(rho, H, time: float) -> DenseOperator:
    """exp(-iHt) rho exp(+iHt)."""
    H = _require_hermitian(H)
    w, v = H.eigh
    a = as_matrix(rho)
    if a.shape != H.matrix.shape:
        raise ValueError(f"dimension mismatch: rho {a.shape} vs H {H.matrix.shape}")
    rt = v.conj().T @ a @ v
    ph = np.exp(-1j * w * time)
    out = v @ (ph[:, None] * rt * ph.conj()[None, :]) @ v.conj().T
    herm = isinstance(rho, DenseOperator) and rho.hermitian
    if herm:
        out = 0.5 * (out + out.conj().T)
    return DenseOperator(out, hermitian=herm)


def conjugate(u, rho) -> NDArray[np.complex128]:
    um = as_matrix(u)
    return um @ as_matrix(rho) @ um.conj().T


def signal_curve(rho_prepared, rho_observable, H, times: Sequence[float]) -> NDArray[np.float64]:
    """S(t) = Tr{U(t) rho_prepared U(t)^dagger rho_observable^dagger} on a time grid."""
    H = _require_hermitian(H)
    w, v = H.eigh
    a = v.conj().T @ as_matrix(rho_prepared) @ v
    b = v.conj().T @ as_matrix(rho_observable) @ v
    return _overlap_series(a, b, w, np.asarray(times, dtype=float)).real


def _overlap_series(a_eig, b_eig, w, times) -> NDArray[np.complex128]:
    # Tr{e^{-iHt} A e^{iHt} B^dagger} with A, B given in the eigenbasis of H
    # = sum_ij P_ij exp(-i w_i t) exp(+i w_j t), one matrix product for all t
    p = a_eig * b_eig.conj()
    e = np.exp(-1j * np.outer(w, times))
    return np.einsum("it,it->t", e, p @ e.conj())


# ---------------------------------------------------------------------------
# Pulse cycles
# ---------------------------------------------------------------------------


class CycleVariant(enum.Enum):
    P2 = "P2"
    P8 = "P8"


@dataclass(frozen=True)
class PulseCycleParams:
    """Multi-pulse cycle approximating DQ evolution.

    Pulses are ideal delta rotations; ``pulse_width`` only lengthens the long
    delay, ``delta_t' = 2 delta_t + pulse_width``.
    """

    delta_t: float
    pulse_width: float = 0.0
    n_loops: int = 1
    variant: CycleVariant = CycleVariant.P8

    def __post_init__(self):
        if not self.delta_t > 0:
            raise ValueError("delta_t must be positive")
        if self.pulse_width < 0:
            raise ValueError("pulse_width must be nonnegative")
        if int(self.n_loops) != self.n_loops or self.n_loops < 1:
            raise ValueError("n_loops must be a positive integer")
        object.__setattr__(self, "variant", CycleVariant(self.variant))

    @property
    def long_delay(self) -> float:
        return 2.0 * self.delta_t + self.pulse_width

    @property
    def blocks(self) -> int:
        return 1 if self.variant is CycleVariant.P2 else 4

    def cycle_time(self) -> float:
        """Free-evolution time of one cycle (delta pulses take no time)."""
        return self.blocks * (self.delta_t + self.long_delay)

    def effective_dq_time(self) -> float:
        """Signed time T with U_cycle ~ exp(-i H_DQ T), summed over loops.

        In the toggling frame of x pulses the short delays see the dipolar
        Hamiltonian and the long delay sees it with zz -> yy.  The average is
        ``-(3 dt + 3w/2) H_DQ - (w/2) H_dip`` per primitive block, so the
        cycle runs DQ evolution backwards in time and a finite width leaves a
        dipolar residue.
        """
        per_block = -(3.0 * self.delta_t + 1.5 * self.pulse_width)
        return self.n_loops * self.blocks * per_block


def _primitive(chain: ChainSpec, params: PulseCycleParams, sign: float) -> NDArray[np.complex128]:
    hd = build_dipolar(chain)
    n = chain.n_spins
    pulse = rotation("x", sign * np.pi / 2, n).matrix
    short = propagator(hd, params.delta_t / 2).matrix
    long_ = propagator(hd, params.long_delay).matrix
    return short @ pulse @ long_ @ pulse @ short


def pulse_cycle_propagator(chain: ChainSpec, params: PulseCycleParams) -> DenseOperator:
    """Unitary of ``n_loops`` repetitions of the P2 or P8 cycle.

    P2 = dt/2 - (pi/2)_x - dt' - (pi/2)_x - dt/2.  P8 = P2 . P2bar . P2bar . P2
    where P2bar uses (pi/2)_{-x} pulses; the sequence is written in time
    order, so the first P2 is the rightmost factor.
    """
    p2 = _primitive(chain, params, +1.0)
    if params.variant is CycleVariant.P2:
        u = p2
    else:
        p2bar = _primitive(chain, params, -1.0)
        u = p2 @ p2bar @ p2bar @ p2
    u = np.linalg.matrix_power(u, params.n_loops)
    return DenseOperator(u, unitary=True)


# ---------------------------------------------------------------------------
# Protocol
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProtocolParams:
    """Phase-encoded MQC experiment parameters.

    ``K`` phases ``phi_k = pi k / K`` for k = 0..2K-1 resolve orders |m| < K.
    An empty ``t_grid`` means amplitudes only (t = 0).
    """

    tau: float
    t_grid: tuple[float, ...] = ()
    K: int = 4

    def __post_init__(self):
        t = tuple(float(x) for x in self.t_grid)
        object.__setattr__(self, "t_grid", t)
        if int(self.K) != self.K or self.K < 1:
            raise ValueError("K must be a positive integer")
        if any(x < 0 for x in t) or any(b < a for a, b in zip(t, t[1:])):
            raise ValueError("t_grid must be nonnegative and ascending")

    @property
    def phases(self) -> NDArray[np.float64]:
        return np.pi * np.arange(2 * self.K) / self.K


@dataclass
class ProtocolResult:
    tau: float
    times: NDArray[np.float64]
    orders: list[int]
    intensities: NDArray[np.float64]  # shape (len(times), len(orders))
    total: NDArray[np.float64]
    normalization: float
    signals: NDArray[np.float64] = field(repr=False)  # S^k(t), shape (2K, len(times))

    @property
    def spectra(self) -> list[CoherenceSpectrum]:
        return [
            CoherenceSpectrum(dict(zip(self.orders, map(float, row))), self.normalization)
            for row in self.intensities
        ]

    def normalized(self, m: Optional[int] = None) -> NDArray[np.float64]:
        if m is None:
            return self.total / self.normalization
        return self.intensities[:, self.orders.index(m)] / self.normalization


def default_K(state: InitialState, chain: ChainSpec) -> int:
    if InitialState(state) in (InitialState.XX, InitialState.TRANSVERSE_X):
        # the observable itself carries orders +-1, so phase frequencies reach N + 1
        return chain.n_spins + 1
    return 4


def dq_propagator(chain: ChainSpec, tau: float, pulse: Optional[PulseCycleParams] = None) -> DenseOperator:
    if pulse is None:
        return propagator(build_dq(chain), tau)
    return pulse_cycle_propagator(chain, pulse)


def prepared_state(state: InitialState, chain: ChainSpec, tau: float,
                   pulse: Optional[PulseCycleParams] = None) -> DenseOperator:
    """State entering the dipolar decay: U_MQ rho_i U_MQ^dagger, rotated for XX."""
    rho = conjugate(dq_propagator(chain, tau, pulse), make_initial_state(state, chain))
    if InitialState(state) is InitialState.XX:
        rho = conjugate(rotation("y", np.pi / 2, chain.n_spins), rho)
    return DenseOperator(0.5 * (rho + rho.conj().T), hermitian=True)


def run_protocol(state: InitialState, chain: ChainSpec, params: ProtocolParams, *,
                 pulse: Optional[PulseCycleParams] = None, workers: int = 1,
                 alias_tol: float = 1e-8) -> ProtocolResult:
    """Simulate the phase-encoded MQC experiment.

    For every phase the final operator is
    ``U_MQ^dag [R^dag] U_dip(t) [R] U_MQ^phi rho_i U_MQ^phi^dag [R^dag] U_dip^dag(t) [R] U_MQ``
    with ``U_MQ^phi = U_phi U_MQ U_phi^dag`` and R the pi/2 y-rotation (XX
    state only).  S^k(t) = Tr{rho_f^k rho_i}; intensities follow from a
    discrete Fourier transform over k.  With ``pulse`` the DQ propagator is
    the multi-pulse cycle instead of exp(-i H_DQ tau) and ``params.tau`` is
    replaced by the cycle's effective time.

    Phases are independent and may run on a thread pool; the Fourier sum is
    always reduced in phase order.
    """
    state = InitialState(state)
    n = chain.n_spins
    check_cap(n)
    tau = params.tau if pulse is None else abs(pulse.effective_dq_time())
    times = np.asarray(params.t_grid if params.t_grid else (0.0,), dtype=float)
    rho_i = make_initial_state(state, chain).matrix
    u_mq = dq_propagator(chain, params.tau, pulse).matrix
    rot = rotation("y", np.pi / 2, n).matrix if state is InitialState.XX else None
    w, v = build_dipolar(chain).eigh
    vh = v.conj().T

    obs = u_mq @ rho_i @ u_mq.conj().T
    if rot is not None:
        obs = rot @ obs @ rot.conj().T
    obs_eig = vh @ obs @ v
    sz = collective_sigma_z(n)

    def one_phase(phi: float) -> NDArray[np.complex128]:
        u = np.exp(-0.5j * phi * sz)
        u_phi = u[:, None] * u_mq * u.conj()[None, :]
        a = u_phi @ rho_i @ u_phi.conj().T
        if rot is not None:
            a = rot @ a @ rot.conj().T
        a_eig = vh @ a @ v
        series = _overlap_series(a_eig, obs_eig, w, np.concatenate([[0.0], times]))
        return series

    phases = params.phases
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one_phase, phases))
    else:
        rows = [one_phase(p) for p in phases]
    sig = np.array(rows).real  # (2K, 1 + T)

    K = params.K
    orders = list(range(-K, K + 1))
    k = np.arange(2 * K)
    cols = []
    for m in orders:
        if abs(m) == K:
            # phi spacing cannot separate +K from -K; split the shared bin evenly
            cols.append(0.5 * np.einsum("k,kt->t", np.cos(np.pi * k * K / K), sig) / (2 * K))
        else:
            cols.append(np.einsum("k,kt->t", np.exp(1j * np.pi * k * m / K), sig).real / (2 * K))
    table = np.array(cols).T  # (1 + T, orders)
    total = sig[0]
    norm = float(table[0].sum())
    alias = np.max(np.abs(table[:, 0])) * 2
    if alias > alias_tol * max(abs(norm), 1e-300):
        warnings.warn(
            f"coherence order |m| = {K} carries relative weight {alias / abs(norm):.2e}; "
            "increase K to avoid aliasing",
            RuntimeWarning,
            stacklevel=2,
        )
    return ProtocolResult(
        tau=float(tau),
        times=times,
        orders=orders,
        intensities=table[1:],
        total=total[1:],
        normalization=norm,
        signals=sig[:, 1:],
    )


# ---------------------------------------------------------------------------
# Moments and asymptotes
# ---------------------------------------------------------------------------


def second_moment_ed(rho_prepared, rho_observable, H, sector: Optional[int] = None,
                     rtol: float = 1e-14) -> Optional[float]:
    """M = Tr{[H, rho_i][H, rho_o]^dag} / Tr{rho_i rho_o^dag}.

    This is the coefficient in S(t)/S(0) = 1 - M t^2/2 + O(t^4).  With
    ``sector`` both operators are first projected on that coherence order.
    Returns ``None`` when the normalization vanishes (empty sector).
    """
    h = as_matrix(H)
    a = as_matrix(rho_prepared)
    b = as_matrix(rho_observable)
    # absence is judged against the full operators so round-off in an empty sector stays absent
    scale = np.linalg.norm(a) * np.linalg.norm(b)
    if sector is not None:
        a = project_coherence(a, sector).matrix
        b = project_coherence(b, sector).matrix
    den = hs_inner(a, b)
    if scale == 0 or abs(den) <= rtol * scale:
        return None
    ca = h @ a - a @ h
    cb = h @ b - b @ h
    return float((hs_inner(ca, cb) / den).real)


def asymptote_ed(rho_prepared, rho_observable, H, rtol: float = 1e-9) -> float:
    """Infinite-time average of the normalized signal.

    ``rho_prepared`` is dephased in the eigenbasis of H: only blocks between
    eigenvalues closer than ``rtol`` times the spectral range survive.
    """
    H = _require_hermitian(H)
    w, v = H.eigh
    a = v.conj().T @ as_matrix(rho_prepared) @ v
    b = v.conj().T @ as_matrix(rho_observable) @ v
    den = np.vdot(b, a)
    if abs(den) <= 1e-14 * np.linalg.norm(a) * np.linalg.norm(b):
        raise ZeroDivisionError("vanishing signal normalization")
    tol = rtol * max(w[-1] - w[0], 1e-300)
    # eigh returns sorted eigenvalues; cluster consecutive ones within tol
    labels = np.concatenate([[0], np.cumsum(np.diff(w) > tol)])
    same = labels[:, None] == labels[None, :]
    return float((np.vdot(b, np.where(same, a, 0)) / den).real)


def sector_moments_ed(rho, chain: ChainSpec) -> dict[str, Optional[float]]:
    """Per-sector second moments of ``rho`` under H_zz and H_xx separately."""
    out = {}
    for name, h in (("zz", build_zz(chain)), ("xx", build_flip_flop(chain)), ("dip", build_dipolar(chain))):
        for label, m in (("zq", 0), ("dq", 2)):
            out[f"{name}_{label}"] = second_moment_ed(rho, rho, h, sector=m)
        out[name] = second_moment_ed(rho, rho, h)
    return out
