"""
Free-fermion model of a nearest-neighbour chain under the double-quantum
Hamiltonian.

The Jordan-Wigner mapping turns H_DQ = b sum_j (xx - yy) into a quadratic
form.  In terms of the Majorana operators

    x_j = (sigma_z^1 ... sigma_z^{j-1}) sigma_x^j,
    y_j = (sigma_z^1 ... sigma_z^{j-1}) sigma_y^j,

H_DQ splits into two decoupled hopping chains, alpha = (x_1, y_2, x_3, ...)
and beta = (y_1, x_2, y_3, ...), each with single-particle Hamiltonian
h = 2b T (T the open-chain adjacency matrix, eigenvalues 2 cos kappa).  The
thermal deviation Sigma_z evolves into

    rho(tau) = -i sum_{pq} F_pq(tau) alpha_p beta_q,
    F_pq(tau) = -Re[ i^(q-p) f_pq(2 tau) ],

with f the single-particle propagator

    f_pq(t) = 2/(N+1) sum_k (-1)^p sin(p kappa) sin(q kappa) exp(-4 i b t cos kappa),
    kappa = pi k / (N+1).

Everything below is evaluated from f: sector intensities, the long-time
asymptote, and the H_zz / H_xx second moments per coherence sector.  With b
the Pauli pair coupling of the chain, the closed forms read

    I0 = (1/N) sum_k cos^2(8 b tau cos kappa),   I2 = (1/2N) sum_k sin^2(8 b tau cos kappa),
    C  = [(1/N) sum_k cos(8 b tau cos kappa)]^2.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
import scipy.fft
import scipy.integrate
import scipy.linalg
import scipy.sparse as sp
import scipy.special
from numpy.typing import ArrayLike, NDArray


@dataclass(frozen=True)
class FermionModel:
    """Uniform nearest-neighbour chain of ``n_spins`` spins with coupling b (rad/s)."""

    n_spins: int
    coupling_b: float

    def __post_init__(self):
        if int(self.n_spins) != self.n_spins or self.n_spins < 1:
            raise ValueError("n_spins must be a positive integer")
        if not self.coupling_b > 0:
            raise ValueError("coupling_b must be positive")

    @property
    def kappa_grid(self) -> NDArray[np.float64]:
        """kappa_k = pi k / (N + 1), k = 1..N."""
        return _kappa(self.n_spins)

    @property
    def energies(self) -> NDArray[np.float64]:
        """Single-particle energies 4 b cos kappa."""
        return 4.0 * self.coupling_b * np.cos(self.kappa_grid)


@lru_cache(maxsize=64)
def _kappa(n: int) -> NDArray[np.float64]:
    k = np.pi * np.arange(1, n + 1) / (n + 1)
    k.setflags(write=False)
    return k


@lru_cache(maxsize=16)
def _sine_basis(n: int) -> NDArray[np.float64]:
    # orthonormal DST-I matrix V_pk = sqrt(2/(N+1)) sin(p kappa_k); cached across tau sweeps
    v = scipy.fft.dst(np.eye(n), type=1, norm="ortho")
    v.setflags(write=False)
    return v


def _signs(n: int) -> NDArray[np.float64]:
    return (-1.0) ** np.arange(1, n + 1)


# ---------------------------------------------------------------------------
# f matrix
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FMatrix:
    """Single-particle amplitudes f_pq evaluated at propagation time ``tau``."""

    tau: float
    entries: NDArray[np.complex128]

    def check(self, atol: float = 1e-12) -> None:
        rows = np.sum(np.abs(self.entries) ** 2, axis=1)
        if np.max(np.abs(rows - 1)) > atol:
            raise AssertionError("f matrix rows are not normalized")


def _f_dimensionless(n: int, bt: float) -> NDArray[np.complex128]:
    v = _sine_basis(n)
    phase = np.exp(-4j * bt * np.cos(_kappa(n)))
    u = scipy.fft.dst(phase[:, None] * v, type=1, norm="ortho", axis=0)
    return _signs(n)[:, None] * u


def f_matrix(model: FermionModel, t: float) -> FMatrix:
    """f_pq(t) via sine transforms, O(N^2 log N)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    return FMatrix(float(t), _f_dimensionless(model.n_spins, model.coupling_b * t))


def f_matrix_direct(model: FermionModel, t: float) -> FMatrix:
    """Same matrix from a dense matrix exponential of the hopping Hamiltonian."""
    n = model.n_spins
    h = np.diag(np.full(n - 1, 2.0 * model.coupling_b), 1)
    h = h + h.T
    u = scipy.linalg.expm(-1j * h * t)
    return FMatrix(float(t), _signs(n)[:, None] * u)


def _phase_matrix(n: int) -> NDArray[np.complex128]:
    p = np.arange(1, n + 1)
    return 1j ** ((p[None, :] - p[:, None]) % 4)


def _kernel(n: int, btau: float) -> NDArray[np.float64]:
    f2 = _f_dimensionless(n, 2.0 * btau)
    return -np.real(_phase_matrix(n) * f2)


def correlation_kernel(model: FermionModel, tau: float) -> NDArray[np.float64]:
    """Real orthogonal matrix F(tau) with rho(tau) = -i sum F_pq alpha_p beta_q."""
    return _kernel(model.n_spins, model.coupling_b * tau)


# ---------------------------------------------------------------------------
# Intensities and asymptote
# ---------------------------------------------------------------------------


def _phase_arg(model: FermionModel, tau) -> NDArray[np.float64]:
    tau = np.asarray(tau, dtype=float)
    return 8.0 * model.coupling_b * tau[..., None] * np.cos(model.kappa_grid)


def i0(model: FermionModel, tau: ArrayLike):
    """Zero-quantum intensity of the thermal state after DQ evolution for tau."""
    return np.mean(np.cos(_phase_arg(model, tau)) ** 2, axis=-1)


def i2(model: FermionModel, tau: ArrayLike):
    """Double-quantum intensity (each of m = +2 and m = -2)."""
    return 0.5 * np.mean(np.sin(_phase_arg(model, tau)) ** 2, axis=-1)


def asymptote_c(model: FermionModel, tau: ArrayLike, verify: Optional[bool] = None):
    """Long-time plateau C(tau) = [(1/N) sum_k cos(8 b tau cos kappa)]^2.

    With ``verify`` (default for N <= 2000) the population form
    [(1/N) sum_p (-1)^p f_pp(2 tau)]^2 is evaluated too and must agree.
    """
    c = np.mean(np.cos(_phase_arg(model, tau)), axis=-1) ** 2
    n = model.n_spins
    if verify is None:
        verify = n <= 2000
    if verify:
        alt = asymptote_c_population_form(model, tau)
        if np.max(np.abs(alt - c)) > 1e-10:
            raise ArithmeticError("the two forms of the asymptote disagree")
    return c


def asymptote_sectors(model: FermionModel, tau: float) -> tuple[float, float]:
    """Plateaus of the separately normalized ZQ and DQ decays, (C / I0, 0).

    The conserved part kept by the model is proportional to Sigma_z, which is
    purely zero-quantum; the DQ sector has no overlap with it.
    """
    c = float(asymptote_c(model, tau))
    return c / float(i0(model, tau)), 0.0


def asymptote_c_population_form(model: FermionModel, tau: ArrayLike):
    n = model.n_spins
    v2 = _sine_basis(n) ** 2
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    # f_pp(2 tau) = (-1)^p sum_k V_pk^2 exp(-8 i b tau cos kappa_k)
    ph = np.exp(-1j * _phase_arg(model, tau))  # (T, N)
    fpp = _signs(n)[None, :] * (ph @ v2.T)
    out = np.real(np.mean(_signs(n)[None, :] * fpp, axis=1)) ** 2
    return out if out.size > 1 else float(out[0])


def i0_infinite(b: float, tau: ArrayLike, method: str = "bessel"):
    """N -> infinity limit of :func:`i0`: (1 + J0(16 b tau)) / 2."""
    if method == "quad":
        return _quad_mean(lambda k, x: np.cos(x * np.cos(k)) ** 2, 8.0 * b, tau)
    return 0.5 * (1.0 + scipy.special.j0(16.0 * b * np.asarray(tau, dtype=float)))


def i2_infinite(b: float, tau: ArrayLike, method: str = "bessel"):
    """N -> infinity limit of :func:`i2`: (1 - J0(16 b tau)) / 4."""
    if method == "quad":
        return 0.5 * _quad_mean(lambda k, x: np.sin(x * np.cos(k)) ** 2, 8.0 * b, tau)
    return 0.25 * (1.0 - scipy.special.j0(16.0 * b * np.asarray(tau, dtype=float)))


def asymptote_c_infinite(b: float, tau: ArrayLike, method: str = "bessel"):
    """N -> infinity limit of :func:`asymptote_c`: J0(8 b tau)^2."""
    if method == "quad":
        return _quad_mean(lambda k, x: np.cos(x * np.cos(k)), 8.0 * b, tau) ** 2
    return scipy.special.j0(8.0 * b * np.asarray(tau, dtype=float)) ** 2


def _quad_mean(g, scale: float, tau):
    # (1/pi) int_0^pi g(kappa, scale*tau) dkappa, the Riemann limit of the kappa sums
    taus = np.atleast_1d(np.asarray(tau, dtype=float))
    out = np.array([
        scipy.integrate.quad(g, 0.0, np.pi, args=(scale * t,), epsabs=1e-13, epsrel=1e-12, limit=400)[0] / np.pi
        for t in taus
    ])
    return out if np.ndim(tau) else float(out[0])


# ---------------------------------------------------------------------------
# Second moments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentBreakdown:
    """Second moments of the DQ-evolved thermal state under the dipolar Hamiltonian.

    Sector values are normalized by the sector's own weight, e.g.
    ``m_zz_dq = ||[H_zz, rho^(2)]||^2 / ||rho^(2)||^2``.  ``m_zz`` and
    ``m_xx`` are normalized by the full state, and since H_dip = 2 H_zz - H_xx
    with no cross terms, ``total = 4 m_zz + m_xx``.  A sector value is
    ``None`` when the sector is empty.
    """

    tau: float
    i0: float
    i2: float
    m_zz: float
    m_xx: float
    m_zz_zq: Optional[float]
    m_zz_dq: Optional[float]
    m_xx_zq: Optional[float]
    m_xx_dq: Optional[float]
    total: float

    @property
    def m_zq(self) -> Optional[float]:
        """Dipolar second moment of the zero-quantum sector."""
        if self.m_zz_zq is None:
            return None
        return 4.0 * self.m_zz_zq + self.m_xx_zq

    @property
    def m_dq(self) -> Optional[float]:
        """Dipolar second moment of the double-quantum sector."""
        if self.m_zz_dq is None:
            return None
        return 4.0 * self.m_zz_dq + self.m_xx_dq


def _interleave(n: int) -> NDArray[np.int64]:
    # position in (alpha..., beta...) of the Majorana at x/y-interleaved index 2j, 2j+1
    j = np.arange(n)
    odd_site = (j % 2) == 0  # 0-based j even <=> 1-based site odd
    perm = np.empty(2 * n, dtype=np.int64)
    perm[0::2] = np.where(odd_site, j, n + j)
    perm[1::2] = np.where(odd_site, n + j, j)
    return perm


def sector_coefficients(F: NDArray[np.float64]) -> tuple[NDArray[np.complex128], NDArray[np.complex128]]:
    """Majorana coefficient matrices of rho^(0) and rho^(+2).

    Returned in x/y-interleaved order (x_1, y_1, x_2, y_2, ...) so that
    rho^(n) = (1/2) sum_ab R_ab a_a a_b.
    """
    n = F.shape[0]
    s = -_signs(n)  # (-1)^(p+1)
    sfs = s[:, None] * F.T * s[None, :]
    hm = F + sfs
    g = F - sfs
    z = np.zeros((n, n))
    r0 = 0.5 * np.block([[z, -1j * hm], [1j * hm.T, z]])
    gs = g * s[None, :]
    sg = s[:, None] * g
    r2 = 0.25 * np.block([[-gs, -1j * g], [-1j * s[:, None] * gs, sg]])
    perm = _interleave(n)
    ix = np.ix_(perm, perm)
    return r0[ix], r2[ix]


def majorana_norm(R) -> float:
    """||Q_R||^2 / 2^N for Q_R = (1/2) sum R_ab a_a a_b."""
    return 0.5 * float(np.sum(np.abs(R) ** 2))


@lru_cache(maxsize=16)
def _flip_flop_generator(n: int) -> sp.csr_matrix:
    # H_xx = (1/2) sum X_ab a_a a_b with unit coupling, x/y interleaved
    rows, cols, vals = [], [], []
    for j in range(n - 1):
        for a, c, v in ((2 * j + 1, 2 * j + 2, -1j), (2 * j, 2 * j + 3, 1j)):
            rows += [a, c]
            cols += [c, a]
            vals += [v, -v]
    return sp.csr_matrix((vals, (rows, cols)), shape=(2 * n, 2 * n), dtype=complex)


def flip_flop_commutator_norm(R, b: float = 1.0) -> float:
    """||[H_xx, Q_R]||^2 / 2^N for an arbitrary quadratic Majorana operator."""
    n = R.shape[0] // 2
    x = _flip_flop_generator(n)
    c = x @ R - (x.T @ R.T).T  # [X, R]
    return 2.0 * b * b * float(np.sum(np.abs(c) ** 2))


def ising_commutator_norm(R, b: float = 1.0) -> float:
    """||[H_zz, Q_R]||^2 / 2^N for an arbitrary quadratic Majorana operator.

    sigma_z^j sigma_z^{j+1} = -P_j with P_j the product of the four Majoranas
    of sites j, j+1.  P_j anticommutes with a single Majorana inside its
    support, so [P_j, a_a a_b] = 2 P_j a_a a_b when exactly one index lies in
    the support and vanishes otherwise.  The resulting four-Majorana strings
    are orthonormal except that neighbouring bonds produce a shared string
    {d, x_{j+1}, y_{j+1}, e} with d on site j and e on site j+2; those pairs
    add the cross term.
    """
    n = R.shape[0] // 2
    if n < 2:
        return 0.0
    a2 = np.abs(R) ** 2
    rows = a2.sum(axis=1)
    start = 2 * np.arange(n - 1)
    idx = start[:, None] + np.arange(4)[None, :]
    inner = a2[idx[:, :, None], idx[:, None, :]].sum(axis=(1, 2))
    diag = 4.0 * b * b * float(np.sum(rows[idx].sum(axis=1) - inner))
    if n < 3:
        return diag
    j2 = 2 * np.arange(n - 2)
    cross = 0.0
    for dd in (0, 1):
        for ee in (0, 1):
            d = j2 + dd
            e = j2 + 4 + ee
            a = j2 + (1 - dd)  # partner of d on site j, position 1 - dd in the bond
            ap = j2 + 4 + (1 - ee)  # partner of e on site j+2, position 3 - ee
            c1 = -2.0 * b * R[a, e] * (-1.0) ** (3 - (1 - dd))
            c2 = 2.0 * b * R[ap, d] * (-1.0) ** (3 - (3 - ee))
            cross += 2.0 * float(np.sum(np.real(c1 * np.conj(c2))))
    return diag + cross


def _moments_unit(n: int, btau: float, absent_tol: float) -> dict:
    F = _kernel(n, btau)
    r0, r2 = sector_coefficients(F)
    w0 = majorana_norm(r0)
    w2 = majorana_norm(r2)
    i0v, i2v = w0 / n, w2 / n
    out = {"i0": i0v, "i2": i2v}
    zz0 = ising_commutator_norm(r0)
    zz2 = ising_commutator_norm(r2)
    xx0 = flip_flop_commutator_norm(r0)
    xx2 = flip_flop_commutator_norm(r2)
    out["m_zz"] = (zz0 + 2 * zz2) / n
    out["m_xx"] = (xx0 + 2 * xx2) / n
    out["m_zz_zq"] = zz0 / w0 if i0v >= absent_tol else None
    out["m_xx_zq"] = xx0 / w0 if i0v >= absent_tol else None
    out["m_zz_dq"] = zz2 / w2 if i2v >= absent_tol else None
    out["m_xx_dq"] = xx2 / w2 if i2v >= absent_tol else None
    return out


def moments(model: FermionModel, tau: float, absent_tol: float = 1e-14) -> MomentBreakdown:
    """Full second-moment breakdown at DQ time ``tau``; O(N^2) memory."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    if model.n_spins < 3:
        raise ValueError("moment formulas need N >= 3")
    b = model.coupling_b
    u = _moments_unit(model.n_spins, b * tau, absent_tol)
    b2 = b * b

    def sc(v):
        # the Ising norm is a sum of squares up to round-off in the bond cross terms
        return None if v is None else b2 * max(v, 0.0)

    m_zz, m_xx = b2 * u["m_zz"], b2 * u["m_xx"]
    return MomentBreakdown(
        tau=float(tau),
        i0=float(u["i0"]),
        i2=float(u["i2"]),
        m_zz=m_zz,
        m_xx=m_xx,
        m_zz_zq=sc(u["m_zz_zq"]),
        m_zz_dq=sc(u["m_zz_dq"]),
        m_xx_zq=sc(u["m_xx_zq"]),
        m_xx_dq=sc(u["m_xx_dq"]),
        total=4.0 * m_zz + m_xx,
    )


def total_moments_from_f(model: FermionModel, tau: float) -> tuple[float, float]:
    """(m_zz, m_xx) of the whole state as explicit sums over f(2 tau).

    N m_zz / b^2 = 16(N-1) - 8 sum_j (F_jj^2 + F_j+1,j+1^2 + F_j,j+1^2 + F_j+1,j^2)
                   - 16 sum_j F_j,j+2 F_j+2,j
    N m_xx / b^2 = 4 || B F + F B ||^2,  B_j,j+1 = -B_j+1,j = (-1)^(j+1)

    Entries outside 1..N do not occur; |F_pq| = |f_pq(2 tau)|.
    """
    n = model.n_spins
    F = correlation_kernel(model, tau)
    d = np.diag(F) ** 2
    up = np.diag(F, 1) ** 2
    lo = np.diag(F, -1) ** 2
    s = np.sum(d[:-1] + d[1:] + up + lo)
    cross = np.sum(np.diag(F, 2) * np.diag(F, -2))
    m_zz = (16.0 * (n - 1) - 8.0 * s - 16.0 * cross) / n
    j = np.arange(1, n)
    B = np.diag((-1.0) ** (j + 1), 1)
    B = B - B.T
    m_xx = 4.0 * np.sum((B @ F + F @ B) ** 2) / n
    b2 = model.coupling_b**2
    return b2 * float(m_zz), b2 * float(m_xx)


# ---------------------------------------------------------------------------
# Transverse states
# ---------------------------------------------------------------------------


def rho_x_coefficients(model: FermionModel, tau: float) -> NDArray[np.float64]:
    """Expansion of each Jordan-Wigner dressed transverse spin after DQ evolution.

    Row j gives the real amplitudes C_jp with
    x_j(tau) = sum_p C_jp Gamma_p,  C_jp = Re[i^(j+p) f_jp(tau)],
    where x_j = sigma_z^1...sigma_z^{j-1} sigma_x^j and Gamma_p is the string
    sigma_z^1...sigma_z^{p-1} sigma_x^p (p - j even) or ... sigma_y^p (p - j
    odd).  For j = 1 this is the evolution of sigma_x^1 itself.  C is
    orthogonal, so each row has unit norm.
    """
    n = model.n_spins
    f = _f_dimensionless(n, model.coupling_b * tau)
    p = np.arange(1, n + 1)
    ph = 1j ** ((p[:, None] + p[None, :]) % 4)
    return np.real(ph * f)


def correlation_length(coefficients: NDArray[np.float64]) -> NDArray[np.float64]:
    """RMS spread sqrt(sum_p C_jp^2 (p - j)^2) of every row."""
    n = coefficients.shape[0]
    p = np.arange(n)
    w = coefficients**2
    return np.sqrt(np.sum(w * (p[None, :] - p[:, None]) ** 2, axis=1))
