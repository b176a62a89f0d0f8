"""Exact checks of the optimality and transferability results on finite domains.

A :class:`DiscreteJointDistribution` is a finite list of points with masses and,
per point, the label assigned by the sensitive classifier (``dp_labels``) and by
the target classifier (``dl_labels``). Cell ``X_ij`` holds the points with
sensitive label ``i`` and target label ``j``.

Maps between points are represented as transport plans: ``plan[a, b]`` is the
mass sent from point ``a`` to point ``b``. A deterministic point map is the
special case with one non-zero entry per row.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AccuracyPreconditionUnmet, EmptyJointSupport, NotBalanced, SupportMismatch

MASS_TOL = 1e-12
BALANCE_TOL = 1e-9
CELLS = ((1, 1), (1, 0), (0, 1), (0, 0))


@dataclass(frozen=True, eq=False)
class DiscreteJointDistribution:
    points: tuple
    masses: np.ndarray
    dp_labels: np.ndarray
    dl_labels: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=np.float64)
        dp = np.asarray(self.dp_labels, dtype=np.int64)
        dl = np.asarray(self.dl_labels, dtype=np.int64)
        pts = tuple(self.points)
        if not (len(pts) == len(m) == len(dp) == len(dl)):
            raise ValueError("points, masses and both label lists must have equal length")
        if len(set(pts)) != len(pts):
            raise ValueError("points must be distinct")
        if (m < 0).any():
            raise ValueError("masses must be non-negative")
        if abs(m.sum() - 1.0) > MASS_TOL:
            raise ValueError(f"masses must sum to 1, got {m.sum()!r}")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "masses", m)
        object.__setattr__(self, "dp_labels", dp)
        object.__setattr__(self, "dl_labels", dl)

    def __len__(self):
        return len(self.points)

    def with_masses(self, masses) -> DiscreteJointDistribution:
        return DiscreteJointDistribution(self.points, masses, self.dp_labels, self.dl_labels)

    def to_json(self) -> str:
        return json.dumps({
            "points": list(self.points),
            "masses": self.masses.tolist(),
            "dp_labels": self.dp_labels.tolist(),
            "dl_labels": self.dl_labels.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> DiscreteJointDistribution:
        d = json.loads(text)
        missing = {"points", "masses", "dp_labels", "dl_labels"} - set(d)
        if missing:
            raise ValueError(f"instance is missing {sorted(missing)}")
        pts = [tuple(p) if isinstance(p, list) else p for p in d["points"]]
        return cls(tuple(pts), d["masses"], d["dp_labels"], d["dl_labels"])

    @classmethod
    def load(cls, path) -> DiscreteJointDistribution:
        return cls.from_json(Path(path).read_text())

    def save(self, path) -> None:
        Path(path).write_text(self.to_json())


# --------------------------------------------------------------------------- total variation

def _as_masses(p):
    return p.masses if isinstance(p, DiscreteJointDistribution) else np.asarray(p, dtype=np.float64)


def tv_distance(p, q) -> float:
    """Total variation distance, computed as half the L1 distance."""
    if isinstance(p, DiscreteJointDistribution) and isinstance(q, DiscreteJointDistribution):
        if p.points != q.points:
            raise SupportMismatch("distributions are over different point lists")
    a, b = _as_masses(p), _as_masses(q)
    if a.shape != b.shape:
        raise SupportMismatch(f"support sizes differ: {a.shape} vs {b.shape}")
    return float(0.5 * np.abs(a - b).sum())


def tv_distance_subset_max(p, q) -> float:
    """``max_C |P(C) - Q(C)|`` by enumerating every subset (|support| <= 20)."""
    a, b = _as_masses(p), _as_masses(q)
    if a.shape != b.shape:
        raise SupportMismatch(f"support sizes differ: {a.shape} vs {b.shape}")
    n = len(a)
    if n > 20:
        raise ValueError("subset enumeration limited to 20 points")
    diff = a - b
    # row r of `members` is the indicator vector of subset r
    members = (np.arange(2 ** n)[:, None] >> np.arange(n)[None, :]) & 1
    return float(np.abs(members @ diff).max())


# --------------------------------------------------------------------------- cells

def cell_masses(dist: DiscreteJointDistribution) -> dict:
    """Masses of X_11, X_10, X_01, X_00 keyed by ``(sensitive, target)``."""
    return {
        (i, j): float(dist.masses[(dist.dp_labels == i) & (dist.dl_labels == j)].sum())
        for i, j in CELLS
    }


def is_balanced(dist: DiscreteJointDistribution, tol: float = BALANCE_TOL) -> bool:
    """Mass of X_1j equals mass of X_0j for both target labels j."""
    cells = cell_masses(dist)
    return all(abs(cells[(1, j)] - cells[(0, j)]) <= tol for j in (0, 1))


# --------------------------------------------------------------------------- flipping maps

@dataclass(frozen=True, eq=False)
class FlippingMap:
    plan: np.ndarray
    dist: DiscreteJointDistribution = field(repr=False)

    def pushforward(self) -> np.ndarray:
        return self.plan.sum(axis=0)

    def as_point_map(self):
        """Target index per point when the plan is deterministic, else ``None``."""
        out = []
        for a, row in enumerate(self.plan):
            nz = np.flatnonzero(row > MASS_TOL)
            if len(nz) > 1:
                return None
            out.append(int(nz[0]) if len(nz) else a)
        return out


def plan_from_point_map(dist: DiscreteJointDistribution, mapping) -> np.ndarray:
    mapping = np.asarray(mapping, dtype=np.int64)
    plan = np.zeros((len(dist), len(dist)))
    plan[np.arange(len(dist)), mapping] = dist.masses
    return plan


def _northwest_corner(supply, demand) -> np.ndarray:
    """A coupling of two equal-mass vectors (greedy fill)."""
    plan = np.zeros((len(supply), len(demand)))
    s, d = supply.astype(float).copy(), demand.astype(float).copy()
    i = j = 0
    while i < len(s) and j < len(d):
        moved = min(s[i], d[j])
        plan[i, j] = moved
        s[i] -= moved
        d[j] -= moved
        if s[i] <= MASS_TOL:
            i += 1
        else:
            j += 1
    return plan


def construct_flipping_map(dist: DiscreteJointDistribution) -> FlippingMap:
    """Transport plan sending each X_ij onto X_(1-i)j while preserving ``P_data``.

    Within each target column ``j`` the mass of X_0j is coupled with X_1j and
    the coupling is used in both directions. Requires balanced classifiers.
    """
    if not is_balanced(dist):
        raise NotBalanced(f"cell masses {cell_masses(dist)} are not balanced")
    n = len(dist)
    plan = np.zeros((n, n))
    for j in (0, 1):
        src = np.flatnonzero((dist.dp_labels == 0) & (dist.dl_labels == j))
        dst = np.flatnonzero((dist.dp_labels == 1) & (dist.dl_labels == j))
        supply, demand = dist.masses[src], dist.masses[dst]
        if supply.sum() <= MASS_TOL and demand.sum() <= MASS_TOL:
            continue
        # rescale away rounding so the greedy fill exhausts both sides exactly
        demand = demand * (supply.sum() / demand.sum())
        coupling = _northwest_corner(supply, demand)
        plan[np.ix_(src, dst)] += coupling
        plan[np.ix_(dst, src)] += coupling.T
    return FlippingMap(plan, dist)


@dataclass
class MapCheck:
    flips_every_point: bool
    preserves_target: bool
    area_preserving: bool
    marginal_error: float

    @property
    def ok(self):
        return self.flips_every_point and self.preserves_target and self.area_preserving


def verify_flipping_map(dist: DiscreteJointDistribution, plan, tol: float = 1e-9) -> MapCheck:
    """Recompute labels and masses from scratch and check both map properties."""
    plan = np.asarray(plan.plan if isinstance(plan, FlippingMap) else plan, dtype=np.float64)
    moved = plan > MASS_TOL
    flips = all(dist.dp_labels[a] != dist.dp_labels[b] for a, b in zip(*np.nonzero(moved)))
    keeps = all(dist.dl_labels[a] == dist.dl_labels[b] for a, b in zip(*np.nonzero(moved)))
    rows = np.array([sum(plan[a, b] for b in range(len(dist))) for a in range(len(dist))])
    cols = np.array([sum(plan[a, b] for a in range(len(dist))) for b in range(len(dist))])
    err = float(max(np.abs(rows - dist.masses).max(), np.abs(cols - dist.masses).max()))
    return MapCheck(bool(flips), bool(keeps), err <= tol, err)


def flipping_coupling_exists(dist: DiscreteJointDistribution) -> bool:
    """Decide by linear programming whether any mass-preserving flipping plan exists.

    Independent of the cell-balance criterion: it searches the full polytope of
    plans with both marginals equal to ``P_data`` and support on flip edges.
    """
    from scipy.optimize import linprog

    n = len(dist)
    allowed = [(a, b) for a in range(n) for b in range(n)
               if dist.dp_labels[a] != dist.dp_labels[b] and dist.dl_labels[a] == dist.dl_labels[b]]
    active = [a for a in range(n) if dist.masses[a] > 0]
    if not allowed:
        return not active
    A_eq = np.zeros((2 * n, len(allowed)))
    for k, (a, b) in enumerate(allowed):
        A_eq[a, k] = 1.0
        A_eq[n + b, k] = 1.0
    b_eq = np.concatenate([dist.masses, dist.masses])
    res = linprog(np.zeros(len(allowed)), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    return res.status == 0


def flipping_point_map_exists(dist: DiscreteJointDistribution) -> bool:
    """Exhaustive search over all n^n point maps for one that flips and preserves mass."""
    n = len(dist)
    for mapping in itertools.product(range(n), repeat=n):
        plan = plan_from_point_map(dist, mapping)
        if verify_flipping_map(dist, plan).ok:
            return True
    return False


# --------------------------------------------------------------------------- optimality

def optimal_discriminator(p_data, p_g) -> np.ndarray:
    """``P_data / (P_data + P_g)`` per point; NaN where both masses are zero."""
    a, b = np.asarray(p_data, dtype=np.float64), np.asarray(p_g, dtype=np.float64)
    if a.shape != b.shape:
        raise SupportMismatch("distributions must share a support")
    total = a + b
    if not (total > 0).any():
        raise EmptyJointSupport("both distributions are zero everywhere")
    out = np.full(a.shape, np.nan)
    np.divide(a, total, out=out, where=total > 0)
    return out


def gan_value(p_data, p_g) -> float:
    """Discriminator-optimal GAN value ``E_data log D* + E_g log(1 - D*)``.

    Equals ``-log 4 + 2 JSD(P_data, P_g)``; its minimum ``-log 4`` needs ``P_g = P_data``.
    """
    a, b = np.asarray(p_data, dtype=np.float64), np.asarray(p_g, dtype=np.float64)
    d = optimal_discriminator(a, b)
    val = 0.0
    for pa, pb, dx in zip(a, b, d):
        if pa > 0:
            val += pa * math.log(dx)
        if pb > 0:
            val += pb * math.log(1 - dx)
    return val


def flip_rate(labels, plan) -> float:
    """Mass moved between points with different labels (multi-class: any change)."""
    labels = np.asarray(labels)
    return float(plan[labels[:, None] != labels[None, :]].sum())


def combined_objective(dist: DiscreteJointDistribution, plan, alpha: float = 1.0, lam: float = 1.0) -> float:
    """Discrete generator objective with an optimal discriminator and 0-1 classifier losses.

    ``gan_value + alpha * (Pr[target label changes] - lam * Pr[sensitive label changes])``.
    """
    p_g = plan.sum(axis=0)
    adv = flip_rate(dist.dl_labels, plan) - lam * flip_rate(dist.dp_labels, plan)
    return gan_value(dist.masses, p_g) + alpha * adv


@dataclass
class Theorem1Report:
    tv: float
    sensitive_flip_rate: float
    target_preserve_rate: float
    objective: float
    lower_bound: float
    brute_force_min: float | None
    brute_force_maps: int

    @property
    def holds(self) -> bool:
        ok = self.tv <= 1e-9 and abs(self.sensitive_flip_rate - 1) <= 1e-9 and abs(self.target_preserve_rate - 1) <= 1e-9
        ok = ok and self.objective <= self.lower_bound + 1e-9
        if self.brute_force_min is not None:
            ok = ok and self.brute_force_min >= self.objective - 1e-9
        return ok


def verify_theorem1(dist: DiscreteJointDistribution, alpha: float = 1.0, lam: float = 1.0,
                    brute_force_limit: int = 6) -> Theorem1Report:
    """Apply the constructed flipping map as the generator and check optimality.

    For ``len(dist) <= brute_force_limit`` every point map is scored and none may
    beat the flipping map's objective.
    """
    fmap = construct_flipping_map(dist)
    plan = fmap.plan
    p_g = fmap.pushforward()
    objective = combined_objective(dist, plan, alpha, lam)
    bf_min, count = None, 0
    if len(dist) <= brute_force_limit:
        bf_min = math.inf
        for mapping in itertools.product(range(len(dist)), repeat=len(dist)):
            count += 1
            bf_min = min(bf_min, combined_objective(dist, plan_from_point_map(dist, mapping), alpha, lam))
    return Theorem1Report(
        tv=tv_distance(dist.masses, p_g),
        sensitive_flip_rate=flip_rate(dist.dp_labels, plan),
        target_preserve_rate=1.0 - flip_rate(dist.dl_labels, plan),
        objective=objective,
        lower_bound=-math.log(4) - alpha * lam,
        brute_force_min=bf_min,
        brute_force_maps=count,
    )


@dataclass
class TradeoffReport:
    any_plan_flips_with_zero_tv: bool
    best_point_map_flip_rate_at_zero_tv: float
    best_point_map_tv_at_full_flip: float


def unbalanced_tradeoff(dist: DiscreteJointDistribution) -> TradeoffReport:
    """Enumerate point maps: the best flip rate among P_g = P_data maps, and the
    smallest TV among maps that flip every point (``inf`` if none flip everything)."""
    n = len(dist)
    best_flip, best_tv = 0.0, math.inf
    for mapping in itertools.product(range(n), repeat=n):
        plan = plan_from_point_map(dist, mapping)
        tv = tv_distance(dist.masses, plan.sum(axis=0))
        fr = flip_rate(dist.dp_labels, plan)
        keep = 1.0 - flip_rate(dist.dl_labels, plan)
        if tv <= 1e-12:
            best_flip = max(best_flip, fr if keep >= 1 - 1e-12 else 0.0)
        if fr >= 1 - 1e-12 and keep >= 1 - 1e-12:
            best_tv = min(best_tv, tv)
    return TradeoffReport(flipping_coupling_exists(dist), best_flip, best_tv)


# --------------------------------------------------------------------------- transferability

@dataclass
class Theorem2Check:
    lhs: float
    rhs: float
    delta: float
    eps_acc: float
    beta_tv: float
    intermediate_lhs: float
    intermediate_rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs >= self.rhs - 1e-12 and self.intermediate_lhs <= self.intermediate_rhs + 1e-12


def check_theorem2(f, g, mapping, dist: DiscreteJointDistribution, truth=None, beta_tv=None,
                   eps_acc=None) -> Theorem2Check:
    """Exact evaluation of the transfer bound for classifiers ``f`` (unseen) and ``g`` (used in training).

    ``f``/``g`` are per-point predicted labels, ``mapping`` a point map or a plan,
    ``truth`` the ground-truth label per point (defaults to ``dist.dp_labels``).
    Accuracies are measured under ``P_data``. ``eps_acc`` and ``beta_tv`` default to
    their tightest values; explicit values must be valid bounds.
    """
    f, g = np.asarray(f), np.asarray(g)
    truth = dist.dp_labels if truth is None else np.asarray(truth)
    plan = np.asarray(mapping, dtype=np.float64)
    if plan.ndim == 1:
        plan = plan_from_point_map(dist, mapping)
    m = dist.masses
    err_f = float(m[f != truth].sum())
    err_g = float(m[g != truth].sum())
    tightest_eps = max(err_f, err_g)
    if eps_acc is None:
        eps_acc = tightest_eps
    elif tightest_eps > eps_acc + 1e-12:
        raise AccuracyPreconditionUnmet(
            f"classifier accuracy {1 - tightest_eps:.6f} is below the assumed 1 - eps = {1 - eps_acc:.6f}"
        )
    tv = tv_distance(m, plan.sum(axis=0))
    if beta_tv is None:
        beta_tv = tv
    elif tv > beta_tv + 1e-12:
        raise AccuracyPreconditionUnmet(f"TV(P_data, P_g) = {tv:.6f} exceeds the assumed bound {beta_tv}")
    delta = 1.0 - flip_rate(g, plan)
    lhs = flip_rate(f, plan)
    # Pr[f(G(x)) != g(G(x))] under the pushforward
    inter = float(plan.sum(axis=0)[f != g].sum())
    return Theorem2Check(
        lhs=lhs,
        rhs=1.0 - delta - 4.0 * eps_acc - beta_tv,
        delta=delta,
        eps_acc=eps_acc,
        beta_tv=beta_tv,
        intermediate_lhs=inter,
        intermediate_rhs=2.0 * eps_acc + beta_tv,
    )


def theorem2_rhs(delta: float, eps_acc: float, beta_tv: float) -> float:
    return 1.0 - delta - 4.0 * eps_acc - beta_tv


# --------------------------------------------------------------------------- random instances

def random_distribution(rng, n: int, balanced: bool | None = None, integer_masses: bool = True,
                        max_count: int = 4) -> DiscreteJointDistribution:
    """Random instance on ``n`` points; ``balanced=True`` forces equal cell pairs.

    Integer masses (counts / total) make exact balance reachable by chance too.
    """
    dp = rng.integers(0, 2, size=n)
    dl = rng.integers(0, 2, size=n)
    if integer_masses:
        w = rng.integers(0, max_count + 1, size=n).astype(float)
    else:
        w = rng.random(n)
    if balanced:
        for j in (0, 1):
            a = np.flatnonzero((dp == 1) & (dl == j))
            b = np.flatnonzero((dp == 0) & (dl == j))
            if len(a) == 0 or len(b) == 0:
                w[a] = 0
                w[b] = 0
                continue
            sa, sb = w[a].sum(), w[b].sum()
            if sa == 0 or sb == 0:
                w[a] = 1.0
                w[b] = 1.0
                sa, sb = len(a), len(b)
            w[b] *= sa / sb
    if w.sum() == 0:
        w[:] = 1.0
        if balanced:
            return random_distribution(rng, n, balanced, integer_masses, max_count)
    return DiscreteJointDistribution(tuple(range(n)), w / w.sum(), dp, dl)
