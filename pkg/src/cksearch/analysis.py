"""Statistical checks on the walk design.

Two tools live here. A Bayesian key-membership model over per-node cohesion
features (Box-Cox marginals, Gaussian copula, two-class mixture), and a
collapsed three-state Markov chain over {query, other, key} node groups with
its eigen-structure and path-length extension. Pearson correlation with a
t-test rounds it off.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy import optimize, stats

from .graph import Graph, compute_supports, induced_subgraph
from .truss import TrussnessMap, key_members_from_trussness, truss_decompose
from .walk import node_features

LAMBDA_BOUNDS = (-5.0, 5.0)
JITTER = 1e-8
FEATURE_NAMES = ("average_support", "skew", "truss_bound")


class DegenerateSampleError(ValueError):
    pass


class DomainError(ValueError):
    pass


class MissingHyperedgeError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Box-Cox
# ---------------------------------------------------------------------------

def box_cox(y, lam: float):
    """Shifted Box-Cox transform ``((y+1)**lam - 1) / lam``, ``log(y+1)`` at ``lam == 0``."""
    y = np.asarray(y, dtype=float)
    if np.any(y <= -1):
        raise DomainError("Box-Cox needs y > -1")
    out = np.log1p(y) if lam == 0 else np.expm1(lam * np.log1p(y)) / lam
    return float(out) if out.ndim == 0 else out


def _box_cox_derivative(y, lam: float):
    return np.exp((lam - 1.0) * np.log1p(np.asarray(y, dtype=float)))


def estimate_lambda(samples: Sequence[float]) -> float:
    """Maximum-likelihood Box-Cox exponent on ``[-5, 5]``.

    A coarse grid locates the peak of the profile log-likelihood, then a
    golden-section search polishes it.
    """
    y = np.asarray(samples, dtype=float)
    if len(y) < 3:
        raise DegenerateSampleError("need at least 3 samples")
    if np.ptp(y) == 0:
        raise DegenerateSampleError("sample is constant")
    if np.any(y <= -1):
        raise DomainError("Box-Cox needs y > -1")
    data = y + 1.0
    lo, hi = LAMBDA_BOUNDS
    grid = np.linspace(lo, hi, 201)
    llf = np.array([stats.boxcox_llf(lam, data) for lam in grid])
    i = int(np.nanargmax(llf))
    if i == 0 or i == len(grid) - 1:
        return float(grid[i])
    res = optimize.minimize_scalar(lambda lam: -stats.boxcox_llf(lam, data),
                                   bracket=(grid[i - 1], grid[i], grid[i + 1]),
                                   method="golden", options={"xtol": 1e-10})
    return float(np.clip(res.x, lo, hi))


# ---------------------------------------------------------------------------
# copula density and mixture
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JointDensityModel:
    """Trivariate Gaussian copula over Box-Cox transformed, standardized features."""
    shifts: np.ndarray
    lambdas: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    cov: np.ndarray
    jittered: bool = False
    constant: tuple[bool, ...] = (False, False, False)
    n_samples: int = 0

    def standardize(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = x + self.shifts
        z = np.empty_like(y)
        for j in range(y.shape[1]):
            z[:, j] = (box_cox(y[:, j], self.lambdas[j]) - self.means[j]) / self.stds[j]
        return z

    def density_standardized(self, z) -> np.ndarray:
        return stats.multivariate_normal(mean=np.zeros(len(self.cov)), cov=self.cov).pdf(z)

    def density(self, x):
        """Density in the original feature space (change of variables included)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = x + self.shifts
        if np.any(y <= -1):
            return np.zeros(len(x)) if len(x) > 1 else 0.0
        z = self.standardize(x)
        jac = np.ones(len(x))
        for j in range(y.shape[1]):
            jac *= _box_cox_derivative(y[:, j], self.lambdas[j]) / self.stds[j]
        out = np.atleast_1d(self.density_standardized(z)) * jac
        return out if len(out) > 1 else float(out[0])

    def to_dict(self) -> dict:
        return {
            "features": list(FEATURE_NAMES),
            "shifts": self.shifts.tolist(),
            "lambdas": self.lambdas.tolist(),
            "means": self.means.tolist(),
            "stds": self.stds.tolist(),
            "cov": self.cov.tolist(),
            "jittered": self.jittered,
            "constant": list(self.constant),
            "n_samples": self.n_samples,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "JointDensityModel":
        return cls(np.asarray(d["shifts"]), np.asarray(d["lambdas"]), np.asarray(d["means"]),
                   np.asarray(d["stds"]), np.asarray(d["cov"]), d.get("jittered", False),
                   tuple(d.get("constant", (False,) * len(d["shifts"]))), d.get("n_samples", 0))


def fit_joint_density(features, shift_columns: Iterable[int] = (1,),
                      constant_std: float = 0.5) -> JointDensityModel:
    """Fit the copula model to an ``(N, d)`` feature sample.

    Columns in ``shift_columns`` (skew by default) are moved so their minimum
    is 1 before transforming. A constant column cannot be transformed; it is
    kept untransformed with spread ``constant_std`` and no correlation.
    """
    x = np.asarray(features, dtype=float)
    if x.ndim != 2 or len(x) < 4:
        raise DegenerateSampleError("need at least 4 feature rows")
    d = x.shape[1]
    shifts = np.zeros(d)
    for j in shift_columns:
        shifts[j] = 1.0 - x[:, j].min()
    y = x + shifts
    lambdas = np.ones(d)
    means = np.zeros(d)
    stds = np.ones(d)
    constant = []
    z = np.zeros_like(y)
    for j in range(d):
        is_const = bool(np.ptp(y[:, j]) == 0)
        constant.append(is_const)
        if is_const:
            means[j] = box_cox(y[0, j], 1.0)
            stds[j] = constant_std
            continue
        lambdas[j] = estimate_lambda(y[:, j])
        t = box_cox(y[:, j], lambdas[j])
        means[j] = t.mean()
        stds[j] = t.std()
        z[:, j] = (t - means[j]) / stds[j]
    cov = np.cov(z, rowvar=False, bias=True).reshape(d, d)
    for j, is_const in enumerate(constant):
        if is_const:
            cov[j, :] = cov[:, j] = 0.0
            cov[j, j] = 1.0
    jittered = False
    if np.linalg.eigvalsh(cov).min() <= 1e-12:
        cov = cov + JITTER * np.eye(d)
        jittered = True
    return JointDensityModel(shifts, lambdas, means, stds, cov, jittered, tuple(constant), len(x))


class Posterior(NamedTuple):
    probability: float
    out_of_support: bool = False


@dataclass(frozen=True)
class MixtureModel:
    positive: JointDensityModel
    negative: JointDensityModel
    prior: float

    def __post_init__(self):
        if not 0 <= self.prior <= 1:
            raise ValueError("prior must lie in [0, 1]")

    def density(self, x):
        return self.prior * self.positive.density(x) + (1 - self.prior) * self.negative.density(x)

    def to_dict(self) -> dict:
        return {"prior": self.prior, "positive": self.positive.to_dict(),
                "negative": self.negative.to_dict()}


def fit_mixture(positive, negative, prior: float | None = None) -> MixtureModel:
    positive = np.asarray(positive, dtype=float)
    negative = np.asarray(negative, dtype=float)
    if prior is None:
        prior = len(positive) / (len(positive) + len(negative))
    return MixtureModel(fit_joint_density(positive), fit_joint_density(negative), float(prior))


def key_member_posterior(x, mix: MixtureModel) -> Posterior:
    """P(key member | features = x) as the density ratio prior * f+(x) / f(x)."""
    if mix.prior in (0.0, 1.0):
        return Posterior(float(mix.prior))
    fp = float(mix.positive.density(x))
    fn = float(mix.negative.density(x))
    if fp == fn:
        return Posterior(float(mix.prior), fp == 0.0)
    f = mix.prior * fp + (1 - mix.prior) * fn
    if f <= 0 or not math.isfinite(f):
        return Posterior(float(mix.prior), True)
    return Posterior(min(1.0, max(0.0, mix.prior * fp / f)))


@dataclass
class CommunitySample:
    """Cohesion features of one query's community, split by key membership."""
    query: int
    k: int
    k_hat: int
    nodes: list[int]
    features: np.ndarray
    is_member: np.ndarray

    @property
    def positive(self) -> np.ndarray:
        return self.features[self.is_member]

    @property
    def negative(self) -> np.ndarray:
        return self.features[~self.is_member]


def community_sample(g: Graph, q: int, trussness: TrussnessMap | None = None,
                     alpha: float = 1.0) -> CommunitySample:
    """Features of every node of q's community, computed inside that community."""
    phi = truss_decompose(g) if trussness is None else trussness
    res = key_members_from_trussness(g, phi, q)
    sub = induced_subgraph(g, res.community)
    feats = node_features(sub, compute_supports(sub), alpha)
    keep = [i for i in range(sub.n_nodes) if sub.degree(i) > 0]
    nodes = [int(sub.parent_ids[i]) for i in keep]
    x = np.array([feats.triple(i) for i in keep]).reshape(-1, 3)
    member = np.array([u in res.members for u in nodes], dtype=bool)
    return CommunitySample(q, res.k, res.k_hat, nodes, x, member)


# ---------------------------------------------------------------------------
# collapsed chain over {Q, X, K}
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HyperChainParams:
    gamma: float  # Q-K
    mu: float     # Q-X
    beta: float   # X-K

    def __post_init__(self):
        for name in ("gamma", "mu", "beta"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")


def build_hypergraph_params(g: Graph, trussness: TrussnessMap, Q: Iterable[int],
                            K: Iterable[int]) -> HyperChainParams:
    """Largest crossing-edge trussness between each pair of node groups."""
    cat = np.ones(g.n_nodes, dtype=np.int64)  # 0 = Q, 1 = X, 2 = K
    cat[list(K)] = 2
    cat[list(Q)] = 0
    best = {}
    for (u, v), phi in trussness.items():
        a, b = sorted((int(cat[u]), int(cat[v])))
        if a != b:
            best[(a, b)] = max(best.get((a, b), 0), phi)
    names = {(0, 2): "Q-K", (0, 1): "Q-X", (1, 2): "X-K"}
    for key, name in names.items():
        if key not in best:
            raise MissingHyperedgeError(f"no {name} edge in the graph")
    return HyperChainParams(best[(0, 2)], best[(0, 1)], best[(1, 2)])


def chain_transition_matrix(params: HyperChainParams) -> np.ndarray:
    """3x3 walk matrix in state order (Q, X, K)."""
    g, mu, b = params.gamma, params.mu, params.beta
    return np.array([
        [0.0, mu / (mu + g), g / (mu + g)],
        [mu / (mu + b), 0.0, b / (mu + b)],
        [g / (g + b), b / (g + b), 0.0],
    ])


@dataclass(frozen=True)
class ChainEigenCheck:
    eigenvalues: np.ndarray
    residuals: np.ndarray
    constant: float
    pi_power: np.ndarray
    pi_diagonal: np.ndarray


def chain_eigen_check(params: HyperChainParams, r: int = 150) -> ChainEigenCheck:
    """Eigenvalues {1} and the roots of ``x^2 + x + c``, checked against det(P - x I).

    ``pi_power`` is r steps of iteration from Q; ``pi_diagonal`` rebuilds the
    same vector through the eigendecomposition ``P = A D A^-1``.
    """
    P = chain_transition_matrix(params)
    g, mu, b = params.gamma, params.mu, params.beta
    c = 2 * mu * b * g / ((mu + b) * (b + g) * (g + mu))
    roots = np.roots([1.0, 1.0, c])
    eig = np.concatenate([[1.0], roots])
    eig = np.real_if_close(eig)
    residuals = np.array([abs(np.linalg.det(P - lam * np.eye(3))) for lam in eig])

    pi0 = np.array([1.0, 0.0, 0.0])
    pi = pi0.copy()
    for _ in range(r):
        pi = pi @ P
    w, A = np.linalg.eig(P)
    pi_diag = np.real(pi0 @ A @ np.diag(w ** r) @ np.linalg.inv(A))
    return ChainEigenCheck(eig, residuals, c, pi, pi_diag)


@dataclass(frozen=True)
class ExtendedChain:
    matrix: np.ndarray
    k_probability: float
    k_probability_r: float
    r: int = field(default=150)


def extended_chain(gamma: float, eta: float, l: int, r: int = 150) -> ExtendedChain:
    """Chain ``Q - X1 - ... - Xl - K`` plus a direct ``Q - K`` link.

    States are ordered ``Q, X1..Xl, K``. ``k_probability`` is K's stationary
    probability; ``k_probability_r`` is K's mass after ``r`` steps from Q.
    For even ``l`` the chain is bipartite, so only the stationary value is a
    meaningful limit.
    """
    if l < 1:
        raise DomainError("l must be >= 1")
    if not (gamma > 0 and eta > 0):
        raise DomainError("weights must be positive")
    size = l + 2
    W = np.zeros((size, size))
    W[0, size - 1] = W[size - 1, 0] = gamma
    for i in range(size - 1):
        W[i, i + 1] = W[i + 1, i] = eta
    P = W / W.sum(axis=1, keepdims=True)

    lhs = np.vstack([(P - np.eye(size)).T, np.ones(size)])
    rhs = np.zeros(size + 1)
    rhs[-1] = 1.0
    stationary = np.linalg.lstsq(lhs, rhs, rcond=None)[0]

    pi = np.zeros(size)
    pi[0] = 1.0
    for _ in range(r):
        pi = pi @ P
    return ExtendedChain(P, float(stationary[-1]), float(pi[-1]), r)


# ---------------------------------------------------------------------------
# correlation
# ---------------------------------------------------------------------------

class PearsonResult(NamedTuple):
    r: float
    t: float
    p_value: float


def pearson_correlation(xs: Sequence[float], ys: Sequence[float]) -> PearsonResult:
    """Pearson r with the two-sided t-test on ``n - 2`` degrees of freedom."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if len(x) != len(y):
        raise ValueError("series lengths differ")
    if len(x) < 3:
        raise DegenerateSampleError("need at least 3 points")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise DegenerateSampleError("series is constant")
    dx = x - x.mean()
    dy = y - y.mean()
    r = float(dx @ dy / math.sqrt((dx @ dx) * (dy @ dy)))
    r = max(-1.0, min(1.0, r))
    n = len(x)
    if abs(r) == 1.0:
        return PearsonResult(r, math.copysign(math.inf, r), 0.0)
    t = r * math.sqrt((n - 2) / (1 - r * r))
    p = 2 * stats.t.sf(abs(t), n - 2)
    return PearsonResult(r, t, float(p))
