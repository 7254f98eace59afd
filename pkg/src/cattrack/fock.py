"""Truncated Fock-space algebra for one oscillator mode and one qubit.

States are complex arrays of shape ``(N, 2)``: the first axis is the Fock
index, the second the qubit index in the sigma_z basis (flattening gives the
"Fock ⊗ qubit" ordering). Operators are kept both as dense matrices (for
tests and small oracles) and as banded diagonals used by the fast apply
kernels: ``a`` is a single off-diagonal band and ``x^2`` is pentadiagonal,
and those products dominate the trajectory inner loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

QUBIT_PLUS = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)
QUBIT_MINUS = np.array([1.0, -1.0], dtype=complex) / np.sqrt(2.0)
QUBIT_UP = np.array([1.0, 0.0], dtype=complex)

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
EYE_Q = np.eye(2, dtype=complex)


@dataclass
class OperatorSet:
    """Dense operators plus the banded data the apply kernels run on."""

    dim_osc: int
    a: np.ndarray
    adag: np.ndarray
    n: np.ndarray
    x: np.ndarray
    p: np.ndarray
    x2: np.ndarray
    parity: np.ndarray
    eye_osc: np.ndarray
    sx: np.ndarray = field(default_factory=lambda: SIGMA_X.copy())
    sz: np.ndarray = field(default_factory=lambda: SIGMA_Z.copy())
    eye_q: np.ndarray = field(default_factory=lambda: EYE_Q.copy())

    # banded data, filled in build_operators
    sqrt_n1: np.ndarray = None      # sqrt(n+1), length N-1: the band of a
    n_diag: np.ndarray = None       # 0..N-1
    aad_diag: np.ndarray = None     # diagonal of a a† in the truncated algebra
    x2_d0: np.ndarray = None        # main diagonal of x^2
    x2_d2: np.ndarray = None        # second off-diagonal of x^2, length N-2
    parity_diag: np.ndarray = None  # (-1)^n

    def osc_kron_q(self, osc_op: np.ndarray) -> np.ndarray:
        """osc_op ⊗ 1_qubit on the flattened 2N space."""
        return np.kron(osc_op, EYE_Q)

    def q_kron_osc(self, qubit_op: np.ndarray) -> np.ndarray:
        """1_osc ⊗ qubit_op on the flattened 2N space."""
        return np.kron(self.eye_osc, qubit_op)

    # -- apply kernels (psi has shape (N, 2); out must not alias psi) -------

    def apply_a(self, psi: np.ndarray) -> np.ndarray:
        out = np.zeros_like(psi)
        out[:-1] = self.sqrt_n1[:, None] * psi[1:]
        return out

    def apply_adag(self, psi: np.ndarray) -> np.ndarray:
        out = np.zeros_like(psi)
        out[1:] = self.sqrt_n1[:, None] * psi[:-1]
        return out

    def apply_x2(self, psi: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        if out is None:
            out = np.empty_like(psi)
        np.multiply(self.x2_d0[:, None], psi, out=out)
        out[:-2] += self.x2_d2[:, None] * psi[2:]
        out[2:] += self.x2_d2[:, None] * psi[:-2]
        return out

    def apply_sx(self, psi: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        if out is None:
            return psi[:, ::-1].copy()
        out[:, 0] = psi[:, 1]
        out[:, 1] = psi[:, 0]
        return out

    # -- expectation kernels (assume psi normalized) -------------------------

    def fock_weights(self, psi: np.ndarray) -> np.ndarray:
        return np.einsum("nq,nq->n", psi.real, psi.real) + np.einsum(
            "nq,nq->n", psi.imag, psi.imag
        )

    def exp_n(self, psi: np.ndarray) -> float:
        return float(self.n_diag @ self.fock_weights(psi))

    def exp_x(self, psi: np.ndarray) -> float:
        # <x> = sqrt(2) Re<a>
        amp = np.einsum("nq,nq->", psi[:-1].conj(), self.sqrt_n1[:, None] * psi[1:])
        return float(np.sqrt(2.0) * amp.real)

    def exp_x2(self, psi: np.ndarray) -> float:
        w = self.fock_weights(psi)
        cross = np.einsum("nq,nq->", psi[:-2].conj(), self.x2_d2[:, None] * psi[2:])
        return float(self.x2_d0 @ w + 2.0 * cross.real)

    def exp_p2(self, psi: np.ndarray) -> float:
        # p^2 shares the diagonal of x^2 and negates its off-diagonal band
        w = self.fock_weights(psi)
        cross = np.einsum("nq,nq->", psi[:-2].conj(), self.x2_d2[:, None] * psi[2:])
        return float(self.x2_d0 @ w - 2.0 * cross.real)

    def exp_parity(self, psi: np.ndarray) -> float:
        return float(self.parity_diag @ self.fock_weights(psi))

    def exp_sx(self, psi: np.ndarray) -> float:
        return float(2.0 * np.einsum("n,n->", psi[:, 0].conj(), psi[:, 1]).real)

    def exp_sx_parity(self, psi: np.ndarray) -> float:
        """<sigma_x ⊗ parity>; equals 1 when the qubit labels the parity."""
        s = np.einsum("n,n,n->", self.parity_diag, psi[:, 0].conj(), psi[:, 1])
        return float(2.0 * s.real)

    def oscillator_purity(self, psi: np.ndarray) -> float:
        """Tr(rho_osc^2) after tracing out the qubit."""
        m = psi.conj().T @ psi  # 2x2 Gram matrix of the qubit components
        return float(np.sum(np.abs(m) ** 2).real)


def build_operators(dim_osc: int) -> OperatorSet:
    """Materialize the truncated operator set for ``dim_osc`` Fock levels."""
    if dim_osc < 8:
        raise ConfigError(f"dim_osc must be >= 8, got {dim_osc}")
    n = np.arange(dim_osc, dtype=float)
    sqrt_n1 = np.sqrt(n[1:])  # sqrt(1), ..., sqrt(N-1): band of a
    a = np.diag(sqrt_n1, k=1).astype(complex)
    adag = a.conj().T.copy()
    num = np.diag(n).astype(complex)
    x = (a + adag) / np.sqrt(2.0)
    p = -1j * (a - adag) / np.sqrt(2.0)
    x2 = x @ x
    parity_diag = np.where(np.arange(dim_osc) % 2 == 0, 1.0, -1.0)
    parity = np.diag(parity_diag).astype(complex)

    ops = OperatorSet(
        dim_osc=dim_osc,
        a=a,
        adag=adag,
        n=num,
        x=x,
        p=p,
        x2=x2,
        parity=parity,
        eye_osc=np.eye(dim_osc, dtype=complex),
    )
    ops.sqrt_n1 = sqrt_n1
    ops.n_diag = n
    aad = np.real(np.diag(a @ adag)).copy()  # n+1 except 0 at the truncation edge
    ops.aad_diag = aad
    ops.x2_d0 = np.real(np.diag(x2)).copy()
    ops.x2_d2 = np.real(np.diag(x2, k=2)).copy()
    ops.parity_diag = parity_diag
    return ops


@dataclass
class TruncatedState:
    """Pure state of the oscillator ⊗ qubit system.

    A value owned by exactly one trajectory; engine steps mutate ``psi`` in
    place and return the same object.
    """

    psi: np.ndarray  # complex, shape (N, 2)

    @property
    def dim_osc(self) -> int:
        return self.psi.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.psi))

    def normalize(self) -> "TruncatedState":
        self.psi /= np.linalg.norm(self.psi)
        return self

    def copy(self) -> "TruncatedState":
        return TruncatedState(self.psi.copy())

    def fidelity(self, other: "TruncatedState") -> float:
        return float(abs(np.vdot(self.psi, other.psi)))

    def top_population(self, levels: int = 4) -> float:
        """Population of the top Fock levels; the truncation-health probe."""
        return float(np.sum(np.abs(self.psi[-levels:]) ** 2))


def expectation(state: TruncatedState, op: np.ndarray, which: str = "osc") -> complex:
    """<psi|O|psi> for an oscillator, qubit, or full-space operator.

    The imaginary part is returned as computed; for Hermitian O it is
    numerical noise (< 1e-10 on normalized states).
    """
    psi = state.psi
    n = psi.shape[0]
    if which == "osc":
        if op.shape != (n, n):
            raise ValueError(f"oscillator operator must be {n}x{n}, got {op.shape}")
        return complex(np.vdot(psi, op @ psi))
    if which == "qubit":
        if op.shape != (2, 2):
            raise ValueError(f"qubit operator must be 2x2, got {op.shape}")
        return complex(np.vdot(psi, psi @ op.T))
    if which == "full":
        if op.shape != (2 * n, 2 * n):
            raise ValueError(f"full operator must be {2*n}x{2*n}, got {op.shape}")
        flat = psi.reshape(-1)
        return complex(np.vdot(flat, op @ flat))
    raise ValueError(f"which must be 'osc', 'qubit' or 'full', got {which!r}")


def coherent_amplitudes(alpha: complex, dim_osc: int) -> np.ndarray:
    """Fock amplitudes of |alpha>, built by the stable upward recursion."""
    amps = np.empty(dim_osc, dtype=complex)
    amps[0] = np.exp(-0.5 * abs(alpha) ** 2)
    for m in range(1, dim_osc):
        amps[m] = amps[m - 1] * alpha / np.sqrt(m)
    return amps


def _check_truncation(alpha: complex, dim_osc: int) -> None:
    if abs(alpha) ** 2 >= dim_osc / 3.0:
        raise ConfigError(
            f"|alpha|^2 = {abs(alpha)**2:.2f} too large for dim_osc = {dim_osc}; "
            "needs |alpha|^2 < dim_osc/3"
        )


def cat_state(alpha: complex, parity: str, dim_osc: int) -> np.ndarray:
    """Oscillator part of (|alpha> ± |-alpha>)/sqrt(2(1 ± chi)).

    ``parity`` is "even" or "odd"; the even variant has support only on even
    Fock levels and vice versa. Returns a normalized (N,) vector; tensor with
    a qubit state via :func:`with_qubit`.
    """
    if parity not in ("even", "odd"):
        raise ConfigError(f"parity must be 'even' or 'odd', got {parity!r}")
    _check_truncation(alpha, dim_osc)
    amps = coherent_amplitudes(alpha, dim_osc)
    if parity == "even":
        amps[1::2] = 0.0
    else:
        amps[0::2] = 0.0
    norm = np.linalg.norm(amps)
    if norm < 1e-300:
        raise ConfigError(f"{parity} cat state vanishes at alpha = {alpha}")
    return amps / norm


def displaced_gaussian_state(xbar: float, pbar: float, dim_osc: int) -> np.ndarray:
    """Minimum-uncertainty packet with <x> = xbar, <p> = pbar, Var = 1/2.

    This is the coherent state alpha = (xbar + i pbar)/sqrt(2); squeezed
    packet construction is deliberately not provided.
    """
    alpha = (xbar + 1j * pbar) / np.sqrt(2.0)
    _check_truncation(alpha, dim_osc)
    return coherent_amplitudes(alpha, dim_osc)


def with_qubit(osc: np.ndarray, qubit: np.ndarray) -> TruncatedState:
    """Tensor an oscillator vector with a qubit vector into a TruncatedState."""
    psi = np.outer(osc, qubit).astype(complex)
    return TruncatedState(psi).normalize()
