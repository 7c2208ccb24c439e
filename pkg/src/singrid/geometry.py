"""Exact rational geometry of box domains and periodic node grids.

The domain is a finite union of open axis-aligned boxes with rational
corners.  Everything that decides set membership or containment here is
computed in exact rational arithmetic (`fractions.Fraction`), so node
enumeration and measures carry no floating-point boundary errors.

Grid conventions, for a grid index ``t >= 1``:

* grid nodes have coordinates ``k/t`` with integer ``k`` per axis;
* the cell of a node is the open cube of side ``1/t`` centred on it;
* a node is *admissible* when its whole cell fits inside the domain;
* the standard ball of an admissible node has radius ``1/(2t)``, i.e.
  it is inscribed in the node's cell, so balls of one grid never overlap.
"""

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .errors import SearchExhausted

#: Hard cap on the spatial dimension.  Node enumeration and the piecewise
#: containment tests are exponential in the dimension; beyond 8 axes the
#: costs explode and none of the shipped verifications need it.
MAX_DIM = 8

RationalVec = tuple[Fraction, ...]


def rational(x) -> Fraction:
    """Coerce to an exact rational.  Floats convert via their binary expansion."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, str)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    raise TypeError(f"cannot interpret {x!r} as a rational number")


def rational_vec(xs) -> RationalVec:
    return tuple(rational(x) for x in xs)


@dataclass(frozen=True)
class Box:
    """Open axis-aligned box with rational corners."""

    lo: RationalVec
    hi: RationalVec

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise ValueError("corner dimensions differ")
        if any(a >= b for a, b in zip(self.lo, self.hi)):
            raise ValueError("box sides must have strictly positive length")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def sides(self) -> RationalVec:
        return tuple(b - a for a, b in zip(self.lo, self.hi))

    @property
    def volume(self) -> Fraction:
        v = Fraction(1)
        for s in self.sides:
            v *= s
        return v

    def contains_point(self, x: RationalVec) -> bool:
        """Strict (open-set) membership."""
        return all(a < xi < b for a, xi, b in zip(self.lo, x, self.hi))

    def contains_box(self, other: "Box") -> bool:
        """Open box inside open box: per-axis interval containment."""
        return all(a <= c and d <= b
                   for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))

    def intersect(self, other: "Box") -> "Box | None":
        lo = tuple(max(a, c) for a, c in zip(self.lo, other.lo))
        hi = tuple(min(b, d) for b, d in zip(self.hi, other.hi))
        if any(a >= b for a, b in zip(lo, hi)):
            return None
        return Box(lo, hi)


def box(lo, hi) -> Box:
    return Box(rational_vec(lo), rational_vec(hi))


@dataclass(frozen=True)
class Domain:
    """Bounded open domain: a finite union of open rational boxes."""

    boxes: tuple[Box, ...]

    def __post_init__(self):
        if not self.boxes:
            raise ValueError("domain needs at least one box")
        dims = {b.dim for b in self.boxes}
        if len(dims) != 1:
            raise ValueError("boxes of mixed dimension")
        n = dims.pop()
        if not 2 <= n <= MAX_DIM:
            raise ValueError(f"dimension must be in [2, {MAX_DIM}], got {n}")

    @property
    def dim(self) -> int:
        return self.boxes[0].dim

    @property
    def bounding_box(self) -> Box:
        lo = tuple(min(b.lo[i] for b in self.boxes) for i in range(self.dim))
        hi = tuple(max(b.hi[i] for b in self.boxes) for i in range(self.dim))
        return Box(lo, hi)

    def contains_point(self, x: RationalVec) -> bool:
        return any(b.contains_point(x) for b in self.boxes)


def domain(*box_specs) -> Domain:
    """Build a domain from ``(lo, hi)`` pairs."""
    return Domain(tuple(box(lo, hi) for lo, hi in box_specs))


def unit_cube(n: int) -> Domain:
    return domain(((0,) * n, (1,) * n))


# ---------------------------------------------------------------------------
# measures and decompositions


def _axis_breaks(boxes, axis, lo=None, hi=None):
    """Sorted distinct breakpoints of the given boxes along one axis,
    optionally clipped to the closed range [lo, hi]."""
    pts = set()
    for b in boxes:
        pts.add(b.lo[axis])
        pts.add(b.hi[axis])
    if lo is not None:
        pts = {p for p in pts if lo <= p <= hi}
        pts.add(lo)
        pts.add(hi)
    return sorted(pts)


@lru_cache(maxsize=64)
def disjoint_cells(dom: Domain) -> tuple[Box, ...]:
    """Decompose the union into pairwise disjoint open boxes (atomic cells).

    Cell walls align with every box wall, so each atomic cell is either
    entirely inside some box of the union or disjoint from all of them;
    one interior point decides.  The cells cover the union up to a
    measure-zero set of walls, which is all the measure and sampling
    code needs.
    """
    breaks = [_axis_breaks(dom.boxes, i) for i in range(dom.dim)]
    cells = []
    for idx in itertools.product(*(range(len(br) - 1) for br in breaks)):
        lo = tuple(breaks[i][j] for i, j in enumerate(idx))
        hi = tuple(breaks[i][j + 1] for i, j in enumerate(idx))
        mid = tuple((a + b) / 2 for a, b in zip(lo, hi))
        if dom.contains_point(mid):
            cells.append(Box(lo, hi))
    return tuple(cells)


def domain_measure(dom: Domain) -> Fraction:
    """Exact Lebesgue measure of the union."""
    return sum((c.volume for c in disjoint_cells(dom)), Fraction(0))


def _axis_pieces(breaks):
    """Open intervals between consecutive breaks plus the interior breakpoints.

    Each piece is represented by one rational coordinate: the midpoint of an
    interval, or the breakpoint itself.  Degenerate (point) pieces matter:
    an open set can cover every interval of a segment yet miss a wall.
    """
    pieces = []
    for a, b in zip(breaks, breaks[1:]):
        pieces.append((a + b) / 2)
    for p in breaks[1:-1]:
        pieces.append(p)
    return pieces


def box_covered_by(lo: RationalVec, hi: RationalVec, boxes) -> bool:
    """Exact point-set test: is the open box (lo, hi) a subset of the union?

    The box is decomposed along every wall of the covering boxes into open
    cells *and* their separating faces of all codimensions; each piece lies
    entirely inside or outside any given open box, so one representative
    point per piece decides.  Faces are essential: two boxes abutting along
    a hyperplane do not cover an open box that straddles it.
    """
    axis_pieces = []
    for i in range(len(lo)):
        breaks = _axis_breaks(boxes, i, lo[i], hi[i])
        axis_pieces.append(_axis_pieces(breaks))
    for rep in itertools.product(*axis_pieces):
        if not any(b.contains_point(rep) for b in boxes):
            return False
    return True


def ball_inside_domain(center: RationalVec, radius: Fraction, dom: Domain) -> bool:
    """Exact test for an open ball inside the union of open boxes.

    Decompose the ball's bounding box into cells and faces as above; the
    ball pokes out of the union iff some uncovered piece comes strictly
    closer to the center than the radius.  Clamp distances are rational,
    so the comparison is exact.
    """
    center = rational_vec(center)
    radius = rational(radius)
    lo = tuple(c - radius for c in center)
    hi = tuple(c + radius for c in center)
    r2 = radius * radius
    axis_pieces = []
    for i in range(len(center)):
        breaks = _axis_breaks(dom.boxes, i, lo[i], hi[i])
        pieces = [((a + b) / 2, a, b) for a, b in zip(breaks, breaks[1:])]
        pieces += [(p, p, p) for p in breaks[1:-1]]
        axis_pieces.append(pieces)
    for rep in itertools.product(*axis_pieces):
        point = tuple(p[0] for p in rep)
        if any(b.contains_point(point) for b in dom.boxes):
            continue
        # uncovered piece: reject if its closure comes closer than the radius
        d2 = Fraction(0)
        for (_, a, b), c in zip(rep, center):
            if c < a:
                d2 += (a - c) ** 2
            elif c > b:
                d2 += (c - b) ** 2
        if d2 < r2:
            return False
    return True


# ---------------------------------------------------------------------------
# grids, nodes, node sets


@dataclass(frozen=True)
class GridNode:
    """Node of the period-``1/t`` grid, stored by its integer index vector."""

    t: int
    index: tuple[int, ...]

    @property
    def coords(self) -> RationalVec:
        return tuple(Fraction(k, self.t) for k in self.index)

    def cell(self) -> Box:
        half = Fraction(1, 2 * self.t)
        c = self.coords
        return Box(tuple(x - half for x in c), tuple(x + half for x in c))


@dataclass(frozen=True)
class NodeSet:
    """All grid nodes of index ``t`` whose cells fit inside the domain."""

    t: int
    nodes: tuple[GridNode, ...]

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def count(self) -> int:
        return len(self.nodes)

    @property
    def index_set(self) -> frozenset:
        return frozenset(n.index for n in self.nodes)

    @property
    def ball_radius(self) -> Fraction:
        return Fraction(1, 2 * self.t)


def nearest_node_index(x: RationalVec, t: int) -> tuple[int, ...]:
    """Index of the grid node whose closed cell contains ``x`` (exact rounding).

    Coordinates exactly halfway between two nodes round up; such points sit
    on cell walls and never land in an open inscribed ball, so the choice
    does not affect any field value.
    """
    return tuple(math.floor(t * xi + Fraction(1, 2)) for xi in x)


@lru_cache(maxsize=4096)
def enumerate_nodes(dom: Domain, t: int) -> NodeSet:
    """All nodes of grid ``t`` whose open cell lies inside the domain.

    Candidates are restricted to the bounding box (a cell inside the union
    is inside the bounding box), then each cell is tested exactly against
    the union.
    """
    if t < 1:
        raise ValueError("grid index must be >= 1")
    bb = dom.bounding_box
    half = Fraction(1, 2)
    ranges = []
    for i in range(dom.dim):
        k_min = math.ceil(t * bb.lo[i] + half)
        k_max = math.floor(t * bb.hi[i] - half)
        if k_min > k_max:
            return NodeSet(t, ())
        ranges.append(range(k_min, k_max + 1))
    single = dom.boxes[0] if len(dom.boxes) == 1 else None
    nodes = []
    for idx in itertools.product(*ranges):
        lo = tuple(Fraction(2 * k - 1, 2 * t) for k in idx)
        hi = tuple(Fraction(2 * k + 1, 2 * t) for k in idx)
        if single is not None:
            ok = single.contains_box(Box(lo, hi))
        else:
            ok = box_covered_by(lo, hi, dom.boxes)
        if ok:
            nodes.append(GridNode(t, idx))
    return NodeSet(t, tuple(nodes))


def largest_inscribed_side(dom: Domain) -> Fraction:
    """Side of a cube guaranteed to fit inside the domain (max over boxes
    of the shortest box side; a lower bound for unions, which only makes
    the certification window below longer, never wrong)."""
    return max(min(b.sides) for b in dom.boxes)


def minimal_grid_index(dom: Domain, search_limit: int = 512) -> int:
    """Least ``m >= 1`` such that every grid ``t > m`` has admissible nodes.

    If a cube of side ``a`` fits inside the domain then any grid with
    ``t > n/a`` has a node cell inside that cube (per axis, the integer
    interval ``[t*lo + 1/2, t*hi - 1/2]`` has length ``t*a - 1 >= 1``
    whenever ``t >= 2/a``, and ``n/a >= 2/a`` for ``n >= 2``).  Grids up
    to that threshold are checked by enumeration, so the result certifies
    *all* larger indices.  By convention the result is at least 1 even
    when grid 1 is already nonempty.
    """
    n = dom.dim
    a = largest_inscribed_side(dom)
    certified = math.floor(Fraction(n) / a)
    if certified > search_limit:
        raise SearchExhausted(
            f"certification window {certified} exceeds search limit "
            f"{search_limit}; domain too thin for this budget")
    empty = [t for t in range(1, certified + 1)
             if enumerate_nodes(dom, t).count == 0]
    return max(empty, default=1)


# ---------------------------------------------------------------------------
# balls


@dataclass(frozen=True)
class BallUnion:
    """Union of equal-radius open balls centred at nodes of a single grid.

    With radius at most half the grid spacing the balls stay inside their
    cells and are therefore pairwise disjoint; the constructor enforces
    that bound rather than running a quadratic pairwise check.
    """

    centers: tuple[GridNode, ...]
    radius: Fraction

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.centers:
            t = self.centers[0].t
            if any(c.t != t for c in self.centers):
                raise ValueError("all centers must belong to one grid")
            if self.radius > Fraction(1, 2 * t):
                raise ValueError("radius exceeds half the grid spacing; "
                                 "disjointness no longer guaranteed")

    @property
    def count(self) -> int:
        return len(self.centers)


def node_balls(nodes: NodeSet, shrink: int = 1) -> BallUnion:
    """Inscribed balls of the node cells, radius ``1/(2*t*shrink)``."""
    if shrink < 1:
        raise ValueError("shrink factor must be a positive integer")
    return BallUnion(nodes.nodes, Fraction(1, 2 * nodes.t * shrink))


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


@dataclass(frozen=True)
class BallConstants:
    """Unit-ball volume, unit-sphere surface area, and the volume fraction
    of a ball inscribed in its bounding cube."""

    volume: float
    surface: float
    cube_fraction: float


def unit_ball_constants(n: int) -> BallConstants:
    if n < 2:
        raise ValueError("dimension must be >= 2")
    v = unit_ball_volume(n)
    alpha = v / 2.0 ** n
    if not 0.0 < alpha < 1.0:
        raise AssertionError("inscribed-ball fraction out of (0, 1)")
    return BallConstants(volume=v, surface=n * v, cube_fraction=alpha)


def ball_union_measure(balls: BallUnion, n: int) -> float:
    """Measure of the union: count * radius^n * vol(unit ball).

    Exact disjointness is a constructor invariant, so no overlap terms."""
    return balls.count * float(balls.radius) ** n * unit_ball_volume(n)


# ---------------------------------------------------------------------------
# domain file format

# A domain file is line-oriented text:
#     dim: 2
#     box: 0 0 ; 1 1
#     box: 1/2 0 ; 3/2 1
# Coordinates are rational literals ("p/q", integers, or decimals).
# Blank lines and '#' comments are ignored.


def format_domain(dom: Domain) -> str:
    lines = [f"dim: {dom.dim}"]
    for b in dom.boxes:
        lo = " ".join(str(c) for c in b.lo)
        hi = " ".join(str(c) for c in b.hi)
        lines.append(f"box: {lo} ; {hi}")
    return "\n".join(lines) + "\n"


def parse_domain(text: str) -> Domain:
    dim = None
    boxes = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, rest = line.partition(":")
        key = key.strip().lower()
        if key == "dim":
            dim = int(rest)
        elif key == "box":
            lo_part, _, hi_part = rest.partition(";")
            lo = rational_vec(lo_part.split())
            hi = rational_vec(hi_part.split())
            boxes.append(Box(lo, hi))
        else:
            raise ValueError(f"unrecognized domain line: {raw!r}")
    if dim is None or not boxes:
        raise ValueError("domain file needs a dim line and at least one box")
    dom = Domain(tuple(boxes))
    if dom.dim != dim:
        raise ValueError(f"declared dim {dim} does not match boxes ({dom.dim})")
    return dom


def load_domain(path) -> Domain:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_domain(fh.read())


def save_domain(dom: Domain, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_domain(dom))
