"""Incoherence measures of a dictionary and the constants of the recovery
and convergence-rate guarantees.

``coherence`` is the largest absolute inner product between distinct atoms;
``babel`` is its cumulative generalisation (the worst total correlation of
one atom against any m others). The remaining operations evaluate, for a
concrete instance, the quantities that the certification harness checks on
traced solver runs: the guaranteed per-step contraction factor of the
residual, and the l1-radius above which that contraction holds from the
very first iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import Dictionary, SupportSet, extremal_singular_values, submatrix

# Slack absorbed by the spectral-bound verdict. sigma_min is accurate to
# 1e-8 relative and column norms may sit 1e-10 off unity, so an exact >=
# comparison would flip on round-off at the m = 1 boundary (sigma_min = 1
# vs. bound = 1).
SPECTRUM_SLACK = 1e-8


def coherence(D: Dictionary) -> float:
    """Maximum absolute inner product between two distinct atoms.

    Zero for orthonormal dictionaries; undefined (raises) for n < 2.
    """
    if D.n < 2:
        raise ValueError(f"coherence needs at least 2 atoms, got n={D.n}")
    g = np.abs(D.gram())
    np.fill_diagonal(g, -np.inf)
    return float(g.max())


def babel(D: Dictionary, m: int) -> float:
    """Worst cumulative correlation of any atom against m other atoms.

    Evaluated by sorting each Gram row's off-diagonal magnitudes and summing
    the m largest, which is an exact reformulation of the max over all
    excluded-atom / size-m-subset pairs. ``m = 0`` is the empty sum, 0.

    Raises for m outside [0, n-1].
    """
    if m < 0 or m > D.n - 1:
        raise ValueError(f"babel function needs 0 <= m <= n-1 = {D.n - 1}, got m={m}")
    if m == 0:
        return 0.0
    g = np.abs(D.gram())
    np.fill_diagonal(g, -np.inf)
    g.sort(axis=1)
    # rows are ascending; the -inf diagonal entry sits first and is never
    # touched because m <= n-1
    return float(g[:, -m:].sum(axis=1).max())


def babel_profile(D: Dictionary, m_max: int) -> list[float]:
    """``[babel(D, 1), ..., babel(D, m_max)]`` computed from one sorted Gram pass."""
    if m_max < 1 or m_max > D.n - 1:
        raise ValueError(f"babel profile needs 1 <= m_max <= n-1 = {D.n - 1}, got {m_max}")
    g = np.abs(D.gram())
    np.fill_diagonal(g, -np.inf)
    g.sort(axis=1)
    tops = np.cumsum(g[:, ::-1][:, :m_max], axis=1)
    return [float(v) for v in tops.max(axis=0)]


def recovery_condition(mu: float, m: int) -> bool:
    """Whether sparsity m is below the coherence-based recovery threshold.

    True iff m < (1/mu + 1) / 2. For mu = 0 (orthonormal dictionary) the
    threshold is unbounded and the condition is treated as always true.
    """
    if mu < 0:
        raise ValueError(f"coherence must be nonnegative, got {mu}")
    if m < 1:
        raise ValueError(f"sparsity must be at least 1, got {m}")
    if mu == 0.0:
        return True
    return m < 0.5 * (1.0 / mu + 1.0)


def max_recoverable_m(mu: float, d: int) -> int:
    """Largest sparsity satisfying the recovery condition, capped at d.

    d is the cap because more than d linearly independent atoms cannot
    exist; for mu = 0 every m up to d is recoverable.
    """
    if mu == 0.0:
        return d
    t = 0.5 * (1.0 / mu + 1.0)
    return min(int(math.ceil(t)) - 1, d)


def contraction_ratio(beta: float, x_star_l1: float, babel_m_minus_1: float) -> tuple[float, float]:
    """Guaranteed squared-residual contraction factor once iterates are near the optimum.

    Returns ``(epsilon, q)`` with ``epsilon = (beta - x_star_l1) / 2`` and
    ``q = 1 - epsilon**2 * (1 - babel_m_minus_1) / (4 * beta**2)``. q always
    lands in (0, 1) when the preconditions hold: the l1 radius must exceed
    the optimum's l1 norm, and the Babel value must be below 1.
    """
    if x_star_l1 < 0:
        raise ValueError(f"x_star_l1 must be nonnegative, got {x_star_l1}")
    if beta <= x_star_l1:
        raise ValueError(
            f"l1 radius beta={beta} must strictly exceed x_star_l1={x_star_l1}; "
            "the contraction guarantee needs slack inside the constraint"
        )
    if not 0.0 <= babel_m_minus_1 < 1.0:
        raise ValueError(f"babel value must be in [0, 1), got {babel_m_minus_1}")
    epsilon = 0.5 * (beta - x_star_l1)
    q = 1.0 - epsilon**2 * (1.0 - babel_m_minus_1) / (4.0 * beta**2)
    return epsilon, q


def beta_for_immediate_contraction(
    m: int, y_l2: float, epsilon: float, sigma_min: float, sigma_max: float
) -> float:
    """l1-radius threshold above which the residual contracts from iteration one.

    Returns ``(m * y_l2 / (epsilon * sigma_min)) * (1 + sigma_max / sigma_min)``
    where sigma_min/sigma_max are the extremal singular values of the
    support submatrix. Any radius strictly above this value certifies
    exponential decay of the residual norm from the first iteration.
    epsilon is the free parameter in (0, 1); callers who also evaluate
    ``contraction_ratio`` must reconcile the two epsilons themselves.
    """
    if m < 1:
        raise ValueError(f"sparsity must be at least 1, got {m}")
    if y_l2 < 0:
        raise ValueError(f"signal norm must be nonnegative, got {y_l2}")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if sigma_min <= 0:
        raise ValueError(
            f"sigma_min={sigma_min} must be positive: support atoms are linearly dependent"
        )
    if sigma_max < sigma_min:
        raise ValueError(f"sigma_max={sigma_max} < sigma_min={sigma_min}")
    return (m * y_l2 / (epsilon * sigma_min)) * (1.0 + sigma_max / sigma_min)


def support_spectrum_bound_holds(D: Dictionary, support: SupportSet) -> bool:
    """Whether sigma_min of the support submatrix clears ``1 - babel(D, m-1)``.

    This is the spectral lower bound that links incoherence to the
    conditioning of the support atoms. Degenerate inputs fold into False;
    the comparison absorbs ``SPECTRUM_SLACK`` of round-off.
    """
    m = len(support)
    if m < 1:
        return False
    sigma_min, _ = extremal_singular_values(submatrix(D, support))
    return sigma_min >= 1.0 - babel(D, m - 1) - SPECTRUM_SLACK


@dataclass(frozen=True)
class AnalysisReport:
    """Incoherence profile of a dictionary plus instance-specific constants.

    ``babel`` lists the cumulative-coherence values for set sizes 1..m_max
    (index 0 holds size 1, which equals ``mu``). The four instance-specific
    fields are None when no instance (support, radius) was supplied.
    Serialises to a flat JSON object with exactly these field names.
    """

    mu: float
    babel: list[float]
    max_recoverable_m: int
    support_sigma_min: float | None = None
    support_sigma_max: float | None = None
    theoretical_ratio_q: float | None = None
    lemma1_beta_threshold: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.mu <= 1.0 + 1e-12:
            raise ValueError(f"coherence out of range [0, 1]: {self.mu}")
        if self.babel:
            if abs(self.babel[0] - self.mu) > 1e-12:
                raise ValueError(
                    f"babel[0]={self.babel[0]} must equal the coherence {self.mu}"
                )
            if any(a > b + 1e-12 for a, b in zip(self.babel, self.babel[1:])):
                raise ValueError("babel values must be non-decreasing")
        if self.theoretical_ratio_q is not None and not 0.0 < self.theoretical_ratio_q <= 1.0:
            raise ValueError(f"contraction ratio out of (0, 1]: {self.theoretical_ratio_q}")

    def to_json_dict(self) -> dict:
        return {
            "mu": self.mu,
            "babel": list(self.babel),
            "max_recoverable_m": self.max_recoverable_m,
            "support_sigma_min": self.support_sigma_min,
            "support_sigma_max": self.support_sigma_max,
            "theoretical_ratio_q": self.theoretical_ratio_q,
            "lemma1_beta_threshold": self.lemma1_beta_threshold,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "AnalysisReport":
        return cls(
            mu=obj["mu"],
            babel=list(obj["babel"]),
            max_recoverable_m=obj["max_recoverable_m"],
            support_sigma_min=obj.get("support_sigma_min"),
            support_sigma_max=obj.get("support_sigma_max"),
            theoretical_ratio_q=obj.get("theoretical_ratio_q"),
            lemma1_beta_threshold=obj.get("lemma1_beta_threshold"),
        )


def analyze_dictionary(D: Dictionary, m_max: int | None = None) -> AnalysisReport:
    """Coherence and Babel profile of a dictionary, without instance data.

    ``m_max`` bounds the Babel profile length and defaults to
    ``min(8, n - 1)``.
    """
    mu = coherence(D)
    if m_max is None:
        m_max = min(8, D.n - 1)
    return AnalysisReport(
        mu=mu,
        babel=babel_profile(D, m_max),
        max_recoverable_m=max_recoverable_m(mu, D.d),
    )


def analyze_instance(
    D: Dictionary,
    support: SupportSet,
    x_star_l1: float,
    y_l2: float,
    beta: float,
    immediate_epsilon: float = 0.5,
    m_max: int | None = None,
) -> AnalysisReport:
    """Full report for one instance: profile plus spectrum, ratio and threshold.

    The contraction ratio uses the Babel value at m-1; the immediate-rate
    threshold uses the actual support spectrum and ``immediate_epsilon``.
    """
    m = len(support)
    if m < 1:
        raise ValueError("instance analysis needs a nonempty support")
    mu = coherence(D)
    if m_max is None:
        m_max = min(max(8, m), D.n - 1)
    sigma_min, sigma_max = extremal_singular_values(submatrix(D, support))
    babel_m_minus_1 = babel(D, m - 1)
    # Outside the guaranteed regime the constants are undefined; report
    # them as missing rather than failing the whole analysis.
    q = None
    if beta > x_star_l1 and babel_m_minus_1 < 1.0:
        _, q = contraction_ratio(beta, x_star_l1, babel_m_minus_1)
    threshold = None
    if sigma_min > 0:
        threshold = beta_for_immediate_contraction(
            m, y_l2, immediate_epsilon, sigma_min, sigma_max
        )
    return AnalysisReport(
        mu=mu,
        babel=babel_profile(D, m_max),
        max_recoverable_m=max_recoverable_m(mu, D.d),
        support_sigma_min=sigma_min,
        support_sigma_max=sigma_max,
        theoretical_ratio_q=q,
        lemma1_beta_threshold=threshold,
    )
