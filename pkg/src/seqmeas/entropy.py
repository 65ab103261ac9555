"""Entropy functionals and theorem checkers for density-operator pairs.

Von Neumann entropy, relative entropy through the spectral double sum,
Klein's inequality, minimal pairs and their entropy identity, the explicit
non-minimal counterexample on C^2 o C^2, and the Lueders entropy-increase
check.  All entropies are in nats; +infinity is signalled by ``math.inf``
and every consumer branches on it explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .quantum import (
    CLUSTER_TOL,
    DensityOperator,
    ProjectorFamily,
    luders_channel,
    partial_trace,
    spectral_projectors,
    tensor_product,
)

#: eigenvalues in [-EIGENVALUE_CLAMP, 0) are treated as exact zeros
EIGENVALUE_CLAMP = 1e-10
#: spectral weight below this does not count as support
SUPPORT_EPS = 1e-12
#: overlap with a zero-weight eigenspace above this triggers divergence
OVERLAP_EPS = 1e-10


def _clamped_spectrum(eigs: np.ndarray) -> np.ndarray:
    out = np.array(eigs, dtype=float)
    out[(out < 0.0) & (out >= -EIGENVALUE_CLAMP)] = 0.0
    return out


def von_neumann_entropy(rho: DensityOperator) -> float:
    """-Tr(rho log rho) with 0 log 0 = 0; never negative."""
    eigs = _clamped_spectrum(np.linalg.eigvalsh(rho.matrix))
    pos = eigs[eigs > 0.0]
    s = float(-(pos * np.log(pos)).sum()) if pos.size else 0.0
    return s if s > 0.0 else 0.0


def _relative_entropy_parts(
    rho: DensityOperator, sigma: DensityOperator, cluster_tol: float
) -> tuple[float, bool]:
    """Relative entropy via the cluster double sum, plus a boundary flag.

    The flag reports whether some sigma eigenvalue sits within a decade of
    the support threshold while overlapping the support of rho, i.e. the
    finite/infinite decision was made close to the cutoff.
    """
    if rho.dim != sigma.dim:
        raise ShapeError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    sd_r = spectral_projectors(rho.matrix, cluster_tol)
    sd_s = spectral_projectors(sigma.matrix, cluster_tol)
    r = _clamped_spectrum(sd_r.eigenvalues)
    s = _clamped_spectrum(sd_s.eigenvalues)
    d_r = sd_r.family.degeneracies.astype(float)

    overlaps = np.array(
        [
            [float(np.trace(p @ q).real) for q in sd_s.family.projectors]
            for p in sd_r.family.projectors
        ]
    )
    overlaps = np.clip(overlaps, 0.0, None)

    r_supported = r > SUPPORT_EPS
    s_zero = s <= SUPPORT_EPS
    diverges = bool(
        (overlaps[np.ix_(r_supported, s_zero)] > OVERLAP_EPS).any()
    ) if r_supported.any() and s_zero.any() else False
    near_boundary = bool(
        ((s > SUPPORT_EPS) & (s <= 10.0 * SUPPORT_EPS)).any()
        and (overlaps[np.ix_(r_supported, (s > SUPPORT_EPS) & (s <= 10.0 * SUPPORT_EPS))] > OVERLAP_EPS).any()
    ) if r_supported.any() else False
    if diverges:
        return math.inf, near_boundary

    rs = r[r_supported]
    tr_rho_log_rho = float((rs * np.log(rs) * d_r[r_supported]).sum()) if rs.size else 0.0
    s_supported = ~s_zero
    block = overlaps[np.ix_(r_supported, s_supported)]
    tr_rho_log_sigma = float(
        (rs[:, np.newaxis] * np.log(s[s_supported])[np.newaxis, :] * block).sum()
    ) if rs.size and s_supported.any() else 0.0
    return tr_rho_log_rho - tr_rho_log_sigma, near_boundary


def relative_entropy(
    rho: DensityOperator, sigma: DensityOperator, cluster_tol: float = CLUSTER_TOL
) -> float:
    """S(rho||sigma) = Tr(rho log rho) - Tr(rho log sigma); may be math.inf.

    Computed from the spectral clusters of both operators; the result is
    +infinity when rho has weight on an eigenspace where sigma vanishes.
    """
    value, _ = _relative_entropy_parts(rho, sigma, cluster_tol)
    return value


@dataclass(frozen=True)
class KleinResult:
    """Outcome of a Klein's-inequality check."""

    value: float    # S(rho||sigma), possibly math.inf
    residual: float  # magnitude of min(value, 0); 0 when infinite
    passed: bool


def klein_check(
    rho: DensityOperator,
    sigma: DensityOperator,
    cluster_tol: float = CLUSTER_TOL,
    tol: float = 1e-10,
) -> KleinResult:
    value = relative_entropy(rho, sigma, cluster_tol)
    residual = 0.0 if math.isinf(value) else max(-value, 0.0)
    return KleinResult(value=value, residual=residual, passed=residual <= tol)


@dataclass(frozen=True)
class MinimalityResult:
    """Per-cluster comparison of Tr(sigma Q_j) against Tr(rho Q_j).

    Clusters are the eigenprojections of sigma in ascending eigenvalue
    order; ``p_tilde`` are sigma's own weights, ``q`` the weights induced
    by rho.
    """

    is_minimal: bool
    eigenvalues: np.ndarray
    q: np.ndarray
    p_tilde: np.ndarray
    residuals: np.ndarray


def is_minimal_pair(
    rho: DensityOperator,
    sigma: DensityOperator,
    cluster_tol: float = CLUSTER_TOL,
    tol: float = 1e-10,
) -> MinimalityResult:
    """Test Tr(sigma Q_j) = Tr(rho Q_j) on every eigenprojection of sigma."""
    if rho.dim != sigma.dim:
        raise ShapeError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    sd = spectral_projectors(sigma.matrix, cluster_tol)
    q = np.array([np.trace(rho.matrix @ pr).real for pr in sd.family.projectors])
    p_tilde = np.array([np.trace(sigma.matrix @ pr).real for pr in sd.family.projectors])
    q = np.clip(q, 0.0, None)
    p_tilde = np.clip(p_tilde, 0.0, None)
    residuals = np.abs(p_tilde - q)
    return MinimalityResult(
        is_minimal=bool((residuals < tol).all()),
        eigenvalues=sd.eigenvalues,
        q=q,
        p_tilde=p_tilde,
        residuals=residuals,
    )


def minimal_identity_check(
    rho: DensityOperator, sigma: DensityOperator, cluster_tol: float = CLUSTER_TOL
) -> float | None:
    """|S(rho||sigma) - (S(sigma) - S(rho))|, or None when the left side diverges.

    Below 1e-9 for every minimal pair; the counterexample shows the
    converse fails.
    """
    rel = relative_entropy(rho, sigma, cluster_tol)
    if math.isinf(rel):
        return None
    return abs(rel - (von_neumann_entropy(sigma) - von_neumann_entropy(rho)))


def counterexample_pair() -> tuple[DensityOperator, DensityOperator]:
    """The non-minimal pair satisfying the minimal-pair entropy identity.

    rho projects onto (up down + sqrt(3) down up)/2 in C^2 o C^2 and sigma
    is the product of rho's partial traces, diag(3, 1, 9, 3)/16.
    """
    phi = np.array([0.0, 0.5, math.sqrt(3.0) / 2.0, 0.0], dtype=complex)
    rho_m = np.outer(phi, phi.conj())
    rho1 = partial_trace(rho_m, (2, 2), keep=1)
    rho2 = partial_trace(rho_m, (2, 2), keep=2)
    sigma_m = tensor_product(rho1, rho2)
    return DensityOperator(rho_m), DensityOperator(sigma_m)


@dataclass(frozen=True)
class LudersEntropyResult:
    s_before: float
    s_after: float
    gap: float
    monotone: bool
    minimality: MinimalityResult


def luders_entropy_check(
    rho: DensityOperator,
    family: ProjectorFamily,
    cluster_tol: float = CLUSTER_TOL,
    tol: float = 1e-10,
) -> LudersEntropyResult:
    """Verify that the non-selective Lueders channel does not lower entropy.

    Also runs the underlying proof step: the channel output together with
    the input forms a minimal pair, which is confirmed cluster by cluster.
    """
    sigma = luders_channel(rho, family)
    s_before = von_neumann_entropy(rho)
    s_after = von_neumann_entropy(sigma)
    gap = s_after - s_before
    return LudersEntropyResult(
        s_before=s_before,
        s_after=s_after,
        gap=gap,
        monotone=gap >= -tol,
        minimality=is_minimal_pair(rho, sigma, cluster_tol, tol),
    )


@dataclass(frozen=True)
class EntropyReport:
    """Machine-readable record of an entropy comparison run."""

    s_rho: float
    s_sigma: float
    rel_entropy: float  # math.inf marks divergence
    gap: float
    is_minimal: bool
    residuals: dict

    def to_json(self) -> dict:
        return {
            "s_rho": self.s_rho,
            "s_sigma": self.s_sigma,
            "rel_entropy": "inf" if math.isinf(self.rel_entropy) else self.rel_entropy,
            "gap": self.gap,
            "is_minimal": self.is_minimal,
            "residuals": dict(self.residuals),
        }


def entropy_report(
    rho: DensityOperator,
    sigma: DensityOperator,
    cluster_tol: float = CLUSTER_TOL,
    tol: float = 1e-10,
) -> EntropyReport:
    """Run every pairwise entropy check and collect the residuals."""
    s_rho = von_neumann_entropy(rho)
    s_sigma = von_neumann_entropy(sigma)
    rel, near_boundary = _relative_entropy_parts(rho, sigma, cluster_tol)
    minimality = is_minimal_pair(rho, sigma, cluster_tol, tol)
    residuals = {
        "klein": 0.0 if math.isinf(rel) else max(-rel, 0.0),
        "max_minimality_deviation": float(minimality.residuals.max()),
    }
    if not math.isinf(rel):
        residuals["minimal_identity"] = abs(rel - (s_sigma - s_rho))
    if near_boundary:
        residuals["near_support_boundary"] = 1.0
    return EntropyReport(
        s_rho=s_rho,
        s_sigma=s_sigma,
        rel_entropy=rel,
        gap=s_sigma - s_rho,
        is_minimal=minimality.is_minimal,
        residuals=residuals,
    )
