"""Fields with profile singularities at the admissible nodes of a grid.

A :class:`BumpField` for grid index ``t`` equals ``sigma(1)`` away from the
node balls and ``sigma(2 t |x - y|)`` inside the ball of node ``y``; since
the profile blows up at zero, the field has a singular spike at every node.
A :class:`BumpSum` stacks fields of consecutive grids with ``1/k^2`` weights,
producing partial sums that increase pointwise and stay uniformly bounded
in the mean.

Two evaluation routes, deliberately independent in their arithmetic:

* ``value_at`` is the exact route: the point is promoted to rationals (a
  float converts via its binary expansion), the owning node comes from
  exact rounding, and the ball-membership comparison is exact.  Points at a
  node return the finite value ``sigma(0)`` with a ``singular`` flag: the
  nodes are a measure-zero set, and a flagged value keeps sampling loops
  free of special cases.
* ``batch`` is the vectorized float route used by the Monte Carlo and probe
  machinery.  Points within a float epsilon of a ball boundary may land on
  either side; those slivers have measure zero, so estimates are unaffected.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import OutsideDomain
from .geometry import (Domain, NodeSet, enumerate_nodes, minimal_grid_index,
                       nearest_node_index, node_balls, rational_vec)
from .profiles import SigmaProfile


@dataclass(frozen=True)
class FieldValue:
    value: float
    singular: bool = False


class _LatticeMask:
    """Boolean lookup grid over node index vectors, for vectorized membership."""

    def __init__(self, nodes: NodeSet, dim: int):
        self.t = nodes.t
        if nodes.count == 0:
            self.empty = True
            return
        self.empty = False
        idx = np.array([n.index for n in nodes.nodes], dtype=np.int64)
        self.kmin = idx.min(axis=0)
        self.kmax = idx.max(axis=0)
        shape = tuple(self.kmax - self.kmin + 1)
        self.grid = np.zeros(shape, dtype=bool)
        self.grid[tuple((idx - self.kmin).T)] = True

    def membership(self, pts: np.ndarray):
        """(member, d2): owning-node membership flag and squared distance to
        the nearest grid node, per point."""
        t = self.t
        k = np.rint(pts * t)
        d2 = ((pts - k / t) ** 2).sum(axis=1)
        if self.empty:
            return np.zeros(len(pts), dtype=bool), d2
        ki = k.astype(np.int64)
        off = ki - self.kmin
        ok = np.all((off >= 0) & (ki <= self.kmax), axis=1)
        member = np.zeros(len(pts), dtype=bool)
        if np.any(ok):
            member[ok] = self.grid[tuple(off[ok].T)]
        return member, d2


@lru_cache(maxsize=512)
def _mask_for(dom: Domain, t: int) -> _LatticeMask:
    return _LatticeMask(enumerate_nodes(dom, t), dom.dim)


def node_membership(dom: Domain, t: int, pts: np.ndarray):
    """Vectorized (member, d2) against the admissible nodes of grid ``t``."""
    return _mask_for(dom, t).membership(pts)


class BumpField:
    """Grid field: background ``sigma(1)`` plus one profile bump per node."""

    def __init__(self, profile: SigmaProfile, dom: Domain, t: int,
                 m: int | None = None):
        if m is None:
            m = minimal_grid_index(dom)
        if t <= m:
            raise ValueError(f"grid index {t} must exceed the base index {m}")
        self.profile = profile
        self.domain = dom
        self.t = t
        self.m = m
        self.nodes = enumerate_nodes(dom, t)
        self.radius = self.nodes.ball_radius
        self.sigma_at_1 = profile.at_one
        self._mask = _mask_for(dom, t)
        self._index_set = self.nodes.index_set

    def balls(self, shrink: int = 1):
        return node_balls(self.nodes, shrink)

    def value_at(self, x) -> FieldValue:
        """Exact evaluation at one point; raises OutsideDomain off the domain."""
        xr = rational_vec(x)
        if not self.domain.contains_point(xr):
            raise OutsideDomain(f"point {x!r} is not in the domain")
        k = nearest_node_index(xr, self.t)
        if k in self._index_set:
            d2 = sum((xi - Fraction(ki, self.t)) ** 2 for xi, ki in zip(xr, k))
            if d2 == 0:
                return FieldValue(self.profile(0.0), singular=True)
            if d2 < self.radius * self.radius:
                rho = 2.0 * self.t * math.sqrt(d2)
                return FieldValue(self.profile(rho))
        return FieldValue(self.sigma_at_1)

    def batch(self, pts: np.ndarray):
        """Vectorized values and singular flags; assumes points in the domain."""
        member, d2 = self._mask.membership(pts)
        inside = member & (d2 < float(self.radius) ** 2)
        vals = np.full(len(pts), self.sigma_at_1)
        if np.any(inside):
            rho = 2.0 * self.t * np.sqrt(d2[inside])
            vals[inside] = self.profile.fn(rho)
        return vals, inside & (d2 == 0.0)


class BumpSum:
    """Weighted stack ``sum_{k=1}^length k^-2 * BumpField(t = m + k)``."""

    def __init__(self, profile: SigmaProfile, dom: Domain, length: int,
                 m: int | None = None):
        if length < 1:
            raise ValueError("need at least one term")
        if m is None:
            m = minimal_grid_index(dom)
        self.profile = profile
        self.domain = dom
        self.m = m
        self.length = length
        self.terms = tuple(BumpField(profile, dom, m + k, m=m)
                           for k in range(1, length + 1))
        self.weights = tuple(1.0 / k ** 2 for k in range(1, length + 1))

    def value_at(self, x) -> FieldValue:
        total = 0.0
        singular = False
        for w, term in zip(self.weights, self.terms):
            fv = term.value_at(x)
            total += w * fv.value
            singular |= fv.singular
        return FieldValue(total, singular)

    def batch(self, pts: np.ndarray):
        total = np.zeros(len(pts))
        singular = np.zeros(len(pts), dtype=bool)
        for w, term in zip(self.weights, self.terms):
            vals, flags = term.batch(pts)
            total += w * vals
            singular |= flags
        return total, singular

    def extended(self, extra: int = 1) -> "BumpSum":
        """The same stack with ``extra`` more terms (pointwise strictly larger)."""
        return BumpSum(self.profile, self.domain, self.length + extra, m=self.m)

    def root(self, lam: float) -> "RootField":
        return RootField(self, lam)


class RootField:
    """Pointwise ``lam``-th root view of a field, ``lam > 1``.

    Raising the view back to the ``lam`` power recovers the base field, so
    its ``lam``-norm is controlled by the base field's mean; values stay
    at or above 1 wherever the base field does."""

    def __init__(self, base, lam: float):
        if lam <= 1.0:
            raise ValueError("root exponent must exceed 1")
        self.base = base
        self.lam = lam

    def value_at(self, x) -> FieldValue:
        fv = self.base.value_at(x)
        return FieldValue(fv.value ** (1.0 / self.lam), fv.singular)

    def batch(self, pts: np.ndarray):
        vals, flags = self.base.batch(pts)
        return vals ** (1.0 / self.lam), flags
