"""Hermite basis machinery for the Gaussian weight exp(-alpha^2/2).

Everything here uses the probabilists' convention: quadrature nodes and
weights integrate f(alpha)*exp(-alpha^2/2) d(alpha) exactly for polynomial f
up to degree 2n-1, and the basis functions are the normalized Hermite
polynomials

    phi_n = He_n / sqrt(n! * sqrt(2*pi)),

orthonormal in the weighted inner product.  The Ornstein-Uhlenbeck operator
d^2/da^2 - a d/da is diagonal in this basis with eigenvalue -n on mode n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

SQRT_TWO_PI = math.sqrt(2.0 * math.pi)

NORM_TAGS = ("L2w", "H1w_homogeneous", "H1w")


class IllConditionedBasisError(ValueError):
    """Requested mode count large enough that weight positivity is lost."""


@dataclass(frozen=True)
class HermiteBasis:
    """Quadrature rule plus normalized-eigenfunction table.

    Attributes
    ----------
    n_modes : int
        Number of retained modes (= number of quadrature nodes).
    nodes : ndarray, shape (n_modes,)
        Quadrature abscissae, ascending.
    weights : ndarray, shape (n_modes,)
        Strictly positive weights; they sum to sqrt(2*pi).
    eigenfunctions : ndarray, shape (n_modes, n_modes)
        eigenfunctions[n, k] = phi_n(nodes[k]).
    eigenvalues : ndarray, shape (n_modes,)
        Ornstein-Uhlenbeck eigenvalues, exactly -n stored as floats.
    """

    n_modes: int
    nodes: np.ndarray
    weights: np.ndarray
    eigenfunctions: np.ndarray
    eigenvalues: np.ndarray

    @property
    def forward_matrix(self) -> np.ndarray:
        # coeffs = forward_matrix @ values
        return self.eigenfunctions * self.weights[None, :]


@dataclass
class AlphaProfile:
    """A profile in the confined direction, nodal or modal.

    ``space`` is "nodal" (values at the basis nodes) or "modal" (coefficients
    against the normalized Hermite polynomials).
    """

    data: np.ndarray
    space: str = "nodal"

    def __post_init__(self):
        if self.space not in ("nodal", "modal"):
            raise ValueError(f"unknown profile space {self.space!r}")
        self.data = np.asarray(self.data, dtype=np.complex128)


def evaluate_modes(alphas, n_modes: int) -> np.ndarray:
    """Table phi_n(alpha) for n < n_modes via the normalized recurrence.

    The recurrence phi_{n+1} = (alpha*phi_n - sqrt(n)*phi_{n-1})/sqrt(n+1)
    avoids factorials, so it stays finite well past n = 85.
    Returns shape (n_modes, len(alphas)).
    """
    alphas = np.asarray(alphas, dtype=np.float64)
    table = np.empty((n_modes, alphas.size), dtype=np.float64)
    table[0] = (2.0 * math.pi) ** (-0.25)
    if n_modes > 1:
        table[1] = alphas * table[0]
    for n in range(1, n_modes - 1):
        table[n + 1] = (alphas * table[n] - math.sqrt(n) * table[n - 1]) / math.sqrt(n + 1)
    return table


def build_basis(n_modes: int) -> HermiteBasis:
    """Build the Gauss-Hermite rule for exp(-alpha^2/2) with its mode table.

    Nodes/weights come from the Golub-Welsch eigendecomposition of the
    symmetric tridiagonal Jacobi matrix of the probabilists' recurrence
    (zero diagonal, off-diagonal sqrt(n)).

    Raises
    ------
    ValueError
        If ``n_modes < 2``.
    IllConditionedBasisError
        If weights lose positivity (underflow at very large ``n_modes``).
    """
    if not isinstance(n_modes, (int, np.integer)) or n_modes < 2:
        raise ValueError(f"n_modes must be an integer >= 2, got {n_modes!r}")
    n_modes = int(n_modes)

    offdiag = np.sqrt(np.arange(1, n_modes, dtype=np.float64))
    nodes = eigh_tridiagonal(np.zeros(n_modes), offdiag, eigvals_only=True)
    # enforce the parity symmetry of the Jacobi matrix exactly
    nodes = 0.5 * (nodes - nodes[::-1])
    if n_modes % 2 == 1:
        nodes[(n_modes - 1) // 2] = 0.0

    table = evaluate_modes(nodes, n_modes)
    # Christoffel form of the Golub-Welsch weights: robust where the LAPACK
    # eigenvector first components underflow; at very large n_modes the sum
    # overflows instead, which the positivity check below converts into the
    # ill-conditioned signal
    with np.errstate(over="ignore"):
        weights = 1.0 / np.sum(table**2, axis=0)

    if not np.all(weights > 0.0):
        raise IllConditionedBasisError(
            f"n_modes={n_modes} gives nonpositive quadrature weights"
        )
    total = weights.sum()
    if abs(total - SQRT_TWO_PI) > 1e-12 * SQRT_TWO_PI:
        raise IllConditionedBasisError(
            f"weight sum {total!r} deviates from sqrt(2*pi)"
        )

    eigenvalues = -np.arange(n_modes, dtype=np.float64)
    return HermiteBasis(n_modes, nodes, weights, table, eigenvalues)


def _require_length(data: np.ndarray, basis: HermiteBasis, what: str):
    if data.shape[-1] != basis.n_modes:
        raise ValueError(
            f"{what} length {data.shape[-1]} does not match basis size {basis.n_modes}"
        )


def hermite_forward(profile: AlphaProfile, basis: HermiteBasis) -> AlphaProfile:
    """Nodal -> modal: coeffs_n = sum_k weights_k phi_n(node_k) values_k."""
    if profile.space != "nodal":
        raise ValueError("hermite_forward expects a nodal profile")
    _require_length(profile.data, basis, "profile")
    coeffs = profile.data @ basis.forward_matrix.T
    return AlphaProfile(coeffs, "modal")


def hermite_inverse(profile: AlphaProfile, basis: HermiteBasis) -> AlphaProfile:
    """Modal -> nodal: values_k = sum_n coeffs_n phi_n(node_k)."""
    if profile.space != "modal":
        raise ValueError("hermite_inverse expects a modal profile")
    coeffs = profile.data
    if coeffs.shape[-1] > basis.n_modes:
        raise ValueError(
            f"coeff length {coeffs.shape[-1]} exceeds basis size {basis.n_modes}"
        )
    if coeffs.shape[-1] < basis.n_modes:
        pad = basis.n_modes - coeffs.shape[-1]
        coeffs = np.concatenate(
            [coeffs, np.zeros(coeffs.shape[:-1] + (pad,), dtype=coeffs.dtype)], axis=-1
        )
    values = coeffs @ basis.eigenfunctions
    return AlphaProfile(values, "nodal")


def forward_tensor(values: np.ndarray, basis: HermiteBasis) -> np.ndarray:
    """Forward transform along the last axis of an (..., n_modes) tensor."""
    _require_length(values, basis, "field")
    return values @ basis.forward_matrix.T


def inverse_tensor(coeffs: np.ndarray, basis: HermiteBasis) -> np.ndarray:
    """Inverse transform along the last axis of an (..., n_modes) tensor."""
    _require_length(coeffs, basis, "coefficients")
    return coeffs @ basis.eigenfunctions


def modal_derivative(coeffs: np.ndarray) -> np.ndarray:
    """d/d(alpha) in coefficient space: out_m = sqrt(m+1) * c_{m+1}.

    Follows He_n' = n He_{n-1}, which for the normalized functions reads
    phi_n' = sqrt(n) phi_{n-1}.  Acts along the last axis.
    """
    n = coeffs.shape[-1]
    out = np.zeros_like(coeffs)
    factors = np.sqrt(np.arange(1, n, dtype=np.float64))
    out[..., :-1] = factors * coeffs[..., 1:]
    return out


def evaluate_modal(coeffs: np.ndarray, alphas) -> np.ndarray:
    """Evaluate the modal expansion sum_n c_n phi_n at arbitrary points.

    ``coeffs`` may be a tensor with modes on the last axis; the result has
    that axis replaced by ``len(alphas)``.
    """
    table = evaluate_modes(alphas, coeffs.shape[-1])
    return coeffs @ table


def weighted_norm(profile: AlphaProfile, basis: HermiteBasis, which: str) -> float:
    """Weighted alpha-norms: "L2w", "H1w_homogeneous" or "H1w".

    L2w is the Gaussian-weighted L^2 norm; H1w_homogeneous applies the modal
    derivative first; H1w is the root of the sum of both squares.
    """
    if which not in NORM_TAGS:
        raise ValueError(f"unknown norm tag {which!r}; expected one of {NORM_TAGS}")
    if profile.space == "nodal":
        _require_length(profile.data, basis, "profile")
        coeffs = profile.data @ basis.forward_matrix.T
    else:
        coeffs = profile.data
    l2_sq = float(np.sum(np.abs(coeffs) ** 2))
    if which == "L2w":
        return math.sqrt(l2_sq)
    dot_sq = float(np.sum(np.arange(coeffs.shape[-1]) * np.abs(coeffs) ** 2))
    if which == "H1w_homogeneous":
        return math.sqrt(dot_sq)
    return math.sqrt(l2_sq + dot_sq)


def tail_mass_fraction(coeffs: np.ndarray, n_tail: int = 4) -> float:
    """Fraction of modal mass carried by the top ``n_tail`` modes.

    Truncation-health monitor; values above ~1e-8 mean the retained band is
    too small for the current field.
    """
    power = np.abs(coeffs) ** 2
    total = float(power.sum())
    if total == 0.0:
        return 0.0
    tail = float(power[..., -n_tail:].sum())
    return tail / total
