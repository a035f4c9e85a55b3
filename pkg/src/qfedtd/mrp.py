"""Markov reward processes with linear features, and their exact oracles.

A fixed evaluation policy on a finite MDP induces a Markov Reward
Process: a row-stochastic transition matrix ``P``, a per-state reward
vector ``R``, and a discount ``gamma``.  Values are approximated in the
span of a feature matrix ``Phi`` (one row per state).  This module
validates such models, generates synthetic ones, and computes every
ground-truth quantity the analysis needs in closed form:

* the stationary distribution ``pi`` and its diagonal weighting ``D``,
* the feature second-moment matrix ``Sigma = Phi^T D Phi`` and its
  smallest eigenvalue ``omega``,
* the projected-Bellman fixed point ``theta_star``,
* the true value function ``V = (I - gamma P)^{-1} R``.

All computations are dense and double precision; intended for state
spaces up to a few hundred states.
"""

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import streams
from .errors import (
    BadDims,
    GammaOutOfRange,
    NegativeProbability,
    NonStochasticRow,
    NotSymmetric,
    ReducibleChain,
    PeriodicChain,
    SingularSystem,
)

_ROW_SUM_TOL = 1e-9
_SYMMETRY_TOL = 1e-10
_RANK_TOL = 1e-10
_COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class Mrp:
    """A validated Markov reward process.

    Attributes
    ----------
    P : (n, n) ndarray
        Row-stochastic transition matrix.
    R : (n,) ndarray
        Reward per state, bounded by ``r_bar`` in absolute value.
    gamma : float
        Discount factor in (0, 1).
    r_bar : float
        Uniform reward bound, ``|R[s]| <= r_bar`` for all states.
    """

    P: np.ndarray
    R: np.ndarray
    gamma: float
    r_bar: float

    @property
    def n(self):
        """Number of states."""
        return self.P.shape[0]


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Feature rows for linear value approximation.

    Rows are per-state feature vectors with Euclidean norm at most 1;
    columns are linearly independent.
    """

    Phi: np.ndarray

    @property
    def n(self):
        return self.Phi.shape[0]

    @property
    def m(self):
        """Feature dimension."""
        return self.Phi.shape[1]


@dataclass(frozen=True, eq=False)
class OracleBundle:
    """Exact ground-truth quantities of one (Mrp, FeatureMatrix) pair.

    Attributes
    ----------
    pi : (n,) ndarray
        Stationary distribution of the chain.
    Sigma : (m, m) ndarray
        Feature second moment ``Phi^T diag(pi) Phi``.
    omega : float
        Smallest eigenvalue of ``Sigma``, in (0, 1).
    theta_star : (m,) ndarray
        Projected-Bellman fixed point.
    sigma_noise : float
        Observation-noise scale ``max(1, r_bar, ||theta_star||)``.
    """

    pi: np.ndarray
    Sigma: np.ndarray
    omega: float
    theta_star: np.ndarray
    sigma_noise: float

    @property
    def D(self):
        """Diagonal stationary weighting as a dense matrix."""
        return np.diag(self.pi)


def validate_mrp(P, R, gamma):
    """Validate raw model arrays and return an :class:`Mrp`.

    Rows of ``P`` are renormalized to sum to one exactly (tolerated
    input deviation is 1e-9 per row).  The reward bound is set to the
    tightest value ``max_s |R[s]|``.

    Raises
    ------
    BadDims
        Non-square ``P`` or mismatched ``R`` length.
    NegativeProbability, NonStochasticRow, GammaOutOfRange
        The corresponding constraint is violated.
    """
    P = np.asarray(P, dtype=np.float64)
    R = np.asarray(R, dtype=np.float64)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] < 2:
        raise BadDims(f"transition matrix must be square with n >= 2, got shape {P.shape}")
    if R.shape != (P.shape[0],):
        raise BadDims(f"reward vector length {R.shape} does not match {P.shape[0]} states")
    if np.any(P < 0):
        s, a = np.argwhere(P < 0)[0]
        raise NegativeProbability(f"P[{s},{a}] = {P[s, a]} is negative")
    row_sums = P.sum(axis=1)
    bad = np.abs(row_sums - 1.0) > _ROW_SUM_TOL
    if np.any(bad):
        s = int(np.argmax(bad))
        raise NonStochasticRow(f"row {s} of P sums to {row_sums[s]}")
    gamma = float(gamma)
    if not (0.0 < gamma < 1.0):
        raise GammaOutOfRange(f"discount factor {gamma} not in (0, 1)")
    # Renormalize only rows that violate the stored-model invariant, so
    # loading an already-clean model reproduces it bitwise.
    dirty = np.abs(row_sums - 1.0) > 1e-12
    if np.any(dirty):
        P = P.copy()
        P[dirty] = P[dirty] / row_sums[dirty, None]
    r_bar = float(np.max(np.abs(R))) if R.size else 0.0
    return Mrp(P=P, R=R, gamma=gamma, r_bar=r_bar)


def validate_features(Phi):
    """Validate a feature matrix: full column rank, row norms <= 1."""
    Phi = np.asarray(Phi, dtype=np.float64)
    if Phi.ndim != 2 or Phi.shape[1] < 1 or Phi.shape[1] > Phi.shape[0]:
        raise BadDims(f"feature matrix shape {Phi.shape} needs n >= m >= 1")
    smin = np.linalg.svd(Phi, compute_uv=False)[-1]
    if smin <= _RANK_TOL:
        raise BadDims(f"feature columns are dependent (smallest singular value {smin:.3e})")
    row_norms = np.linalg.norm(Phi, axis=1)
    if np.any(row_norms > 1.0 + 1e-12):
        s = int(np.argmax(row_norms))
        raise BadDims(f"feature row {s} has norm {row_norms[s]} > 1")
    return FeatureMatrix(Phi=Phi)


def _transition_period(mask):
    """Period of an irreducible chain from its positivity pattern.

    Standard BFS level argument: the period is the gcd of
    ``level[u] + 1 - level[v]`` over all edges ``u -> v`` reachable
    from state 0.
    """
    n = mask.shape[0]
    level = np.full(n, -1, dtype=np.int64)
    level[0] = 0
    frontier = [0]
    order = []
    while frontier:
        u = frontier.pop()
        order.append(u)
        for v in np.nonzero(mask[u])[0]:
            if level[v] < 0:
                level[v] = level[u] + 1
                frontier.append(int(v))
    g = 0
    for u in order:
        for v in np.nonzero(mask[u])[0]:
            g = math.gcd(g, int(level[u]) + 1 - int(level[v]))
    return g if g > 0 else 1


def _check_ergodic(P):
    """Raise unless the chain is irreducible and aperiodic."""
    mask = P > 0.0
    n = mask.shape[0]
    reach = mask | np.eye(n, dtype=bool)
    # Boolean closure by repeated squaring: (I | M)^(n-1).
    for _ in range(max(1, int(np.ceil(np.log2(n))) + 1)):
        reach = reach | (reach.astype(np.float64) @ reach.astype(np.float64) > 0.0)
    if not reach.all():
        raise ReducibleChain("chain is not irreducible; stationary distribution not unique")
    if _transition_period(mask) != 1:
        raise PeriodicChain("chain is irreducible but periodic")


def _power_iteration(P, tol=1e-13, max_iter=100_000):
    pi = np.full(P.shape[0], 1.0 / P.shape[0])
    for _ in range(max_iter):
        nxt = pi @ P
        if np.max(np.abs(nxt - pi)) <= tol:
            return nxt / nxt.sum()
        pi = nxt
    return pi / pi.sum()


def stationary_distribution(mrp):
    """Stationary distribution of an irreducible aperiodic chain.

    Solves the dense left-eigenproblem at eigenvalue 1 and falls back
    to power iteration if the eigensolver output is unusable.  The
    result satisfies ``pi P = pi`` with residual at most 1e-10 and sums
    to one.

    Raises
    ------
    ReducibleChain, PeriodicChain
        The chain violates the ergodicity assumption.
    """
    P = mrp.P if isinstance(mrp, Mrp) else np.asarray(mrp, dtype=np.float64)
    _check_ergodic(P)
    vals, vecs = scipy.linalg.eig(P.T)
    idx = int(np.argmin(np.abs(vals - 1.0)))
    pi = np.real(vecs[:, idx])
    pi = np.abs(pi)
    pi = pi / pi.sum()
    # A few extra transition applications scrub eigensolver round-off.
    for _ in range(5):
        pi = pi @ P
    pi = pi / pi.sum()
    if not np.isfinite(pi).all() or np.max(np.abs(pi @ P - pi)) > 1e-10:
        pi = _power_iteration(P)
    residual = np.max(np.abs(pi @ P - pi))
    if residual > 1e-10:
        raise ReducibleChain(f"stationary solve failed, residual {residual:.3e}")
    return pi


def fixed_point(mrp, phi, pi):
    """Projected-Bellman fixed point ``theta_star``.

    Solves ``A theta = b`` with ``A = Phi^T D (I - gamma P) Phi`` and
    ``b = Phi^T D R``, followed by one step of iterative refinement.

    Raises
    ------
    SingularSystem
        Condition number of ``A`` exceeds 1e12.
    """
    Phi = phi.Phi
    weighted = Phi * pi[:, None]                      # D Phi, exploiting D diagonal
    A = weighted.T @ (Phi - mrp.gamma * (mrp.P @ Phi))
    b = Phi.T @ (pi * mrp.R)
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise SingularSystem(f"fixed-point system condition number {cond:.3e}")
    theta = np.linalg.solve(A, b)
    theta = theta + np.linalg.solve(A, b - A @ theta)
    return theta


def spectral_constant(Sigma):
    """Smallest eigenvalue of the symmetric PSD matrix ``Sigma``."""
    Sigma = np.asarray(Sigma, dtype=np.float64)
    asym = np.max(np.abs(Sigma - Sigma.T)) if Sigma.size else 0.0
    if asym > _SYMMETRY_TOL:
        raise NotSymmetric(f"matrix asymmetry {asym:.3e} exceeds {_SYMMETRY_TOL}")
    return float(scipy.linalg.eigvalsh(Sigma)[0])


def feature_second_moment(phi, pi):
    """``Sigma = Phi^T diag(pi) Phi``."""
    return (phi.Phi * pi[:, None]).T @ phi.Phi


def compute_oracles(mrp, phi):
    """Compute the full :class:`OracleBundle` for one model."""
    if phi.n != mrp.n:
        raise BadDims(f"feature rows {phi.n} do not match {mrp.n} states")
    pi = stationary_distribution(mrp)
    Sigma = feature_second_moment(phi, pi)
    omega = spectral_constant(Sigma)
    if not (0.0 < omega < 1.0):
        raise SingularSystem(f"smallest feature eigenvalue {omega} outside (0, 1)")
    theta_star = fixed_point(mrp, phi, pi)
    sigma_noise = max(1.0, mrp.r_bar, float(np.linalg.norm(theta_star)))
    return OracleBundle(pi=pi, Sigma=Sigma, omega=omega,
                        theta_star=theta_star, sigma_noise=sigma_noise)


def true_value_function(mrp):
    """Exact discounted value function ``(I - gamma P)^{-1} R``."""
    n = mrp.n
    return np.linalg.solve(np.eye(n) - mrp.gamma * mrp.P, mrp.R)


def monte_carlo_value(mrp, state, rollouts, horizon, rng):
    """Monte-Carlo estimate of the value of one state.

    Cross-check companion to :func:`true_value_function`: simulates
    ``rollouts`` independent truncated trajectories and returns the
    sample mean and standard error of the discounted return.
    """
    cum = np.cumsum(mrp.P, axis=1)
    s = np.full(rollouts, state, dtype=np.intp)
    returns = np.zeros(rollouts)
    discount = 1.0
    for _ in range(horizon):
        returns += discount * mrp.R[s]
        u = rng.random(rollouts)
        s = np.minimum((cum[s] <= u[:, None]).sum(axis=1), mrp.n - 1)
        discount *= mrp.gamma
    mean = float(returns.mean())
    stderr = float(returns.std(ddof=1) / np.sqrt(rollouts))
    return mean, stderr


def generate_synthetic(n, m, gamma, seed):
    """Generate a random ergodic model with orthonormal features.

    Transition rows are Dirichlet draws mixed with a small positive
    floor on every entry, which makes the chain irreducible and
    aperiodic by construction.  Rewards are uniform on [0, 1) and the
    reward bound is set to the a-priori value 1.  Features are the Q
    factor of a Gaussian matrix: columns orthonormal, row norms <= 1
    automatically.  Deterministic in ``seed``.

    Returns
    -------
    (Mrp, FeatureMatrix)
    """
    if not (1 <= m <= n) or n < 2:
        raise BadDims(f"need n >= 2 and 1 <= m <= n, got n={n}, m={m}")
    if not (0.0 < gamma < 1.0):
        raise GammaOutOfRange(f"discount factor {gamma} not in (0, 1)")
    rng = streams.stream(seed, streams.MODEL)
    floor = min(1e-3, 1.0 / (2.0 * n))
    P = floor + (1.0 - n * floor) * rng.dirichlet(np.ones(n), size=n)
    P = P / P.sum(axis=1)[:, None]
    R = rng.random(n)
    Q = np.linalg.qr(rng.standard_normal((n, m)))[0]
    max_row = np.linalg.norm(Q, axis=1).max()
    if max_row > 1.0:              # cannot happen for orthonormal columns
        Q = Q / max_row
    mrp = Mrp(P=P, R=R, gamma=float(gamma), r_bar=1.0)
    return mrp, FeatureMatrix(Phi=Q)


def save_model(path, mrp, phi):
    """Write a model to JSON.

    Floats serialize through their shortest round-tripping decimal form
    (up to 17 significant digits), so load followed by save is exact.
    """
    doc = {
        "n": mrp.n,
        "m": phi.m,
        "gamma": mrp.gamma,
        "P": mrp.P.tolist(),
        "R": mrp.R.tolist(),
        "Phi": phi.Phi.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_model(path):
    """Read a model written by :func:`save_model`; revalidates on load."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    P = np.asarray(doc["P"], dtype=np.float64)
    R = np.asarray(doc["R"], dtype=np.float64)
    expected = (int(doc["n"]), int(doc["m"]))
    Phi = np.asarray(doc["Phi"], dtype=np.float64)
    if P.shape != (expected[0], expected[0]) or Phi.shape != expected:
        raise BadDims(f"document dims {expected} do not match arrays {P.shape}, {Phi.shape}")
    mrp = validate_mrp(P, R, doc["gamma"])
    return mrp, validate_features(Phi)
