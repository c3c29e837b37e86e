"""
Soliton Workbench - Polytope Service
Exact-rational lattice polytopes: construction from fan rays, lattice points,
volumes, barycenters and exponential moments

Conventions: a facet is stored as (inner normal a in N, offset b) and cut out
by <u, a> >= b. The anticanonical polytope of a fan with rays v_i is
P = {u : <u, v_i> >= -1}.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
import sympy

from .errors import ConstructionError, ValidationError

logger = logging.getLogger(__name__)

# In-memory cache for lattice point enumerations, keyed by (polytope, m)
_lattice_cache: Dict[Tuple['MomentPolytope', int], np.ndarray] = {}
_LATTICE_CACHE_LIMIT = 256

# Node spread up to which exponential divided differences are summed as a
# series; wider blocks go through the difference-quotient recursion
CLUSTER_TOL = 1.0
SERIES_TERMS = 20

Vector = Tuple[Fraction, ...]


@dataclass(frozen=True)
class Facet:
    """Inequality <u, normal> >= offset"""
    normal: Tuple[int, ...]
    offset: Fraction

    def to_dict(self) -> Dict:
        return {'normal': list(self.normal), 'offset': format_rational(self.offset)}


@dataclass(frozen=True)
class MomentPolytope:
    """Full-dimensional lattice polytope with exact H- and V-representation"""
    dim: int
    facets: Tuple[Facet, ...]
    vertices: Tuple[Vector, ...]
    lattice_rank: int
    rays: Optional[Tuple[Tuple[int, ...], ...]] = field(default=None, compare=False)

    @property
    def is_anticanonical(self) -> bool:
        return all(f.offset == -1 for f in self.facets)

    @property
    def origin_is_interior(self) -> bool:
        return all(f.offset < 0 for f in self.facets)

    def contains(self, u: Sequence) -> bool:
        """Exact membership test for a rational point"""
        return all(_pair(u, f.normal) >= f.offset for f in self.facets)

    @cached_property
    def is_full_dimensional(self) -> bool:
        if len(self.vertices) <= self.dim:
            return False
        return _affine_rank(self.vertices) == self.dim

    @cached_property
    def simplices(self) -> Tuple[Tuple[Vector, ...], ...]:
        """
        Fan triangulation of P from the vertex average, whose cones run over a
        pulling triangulation of every facet.
        """
        center = tuple(sum(coords, Fraction(0)) / len(self.vertices) for coords in zip(*self.vertices))
        index = {v: i for i, v in enumerate(self.vertices)}
        tight = [frozenset(index[v] for v in self.vertices if _pair(v, f.normal) == f.offset)
                 for f in self.facets]

        simplices = []
        seen = set()
        for face in tight:
            if face in seen or _affine_rank([self.vertices[i] for i in face]) != self.dim - 1:
                continue
            seen.add(face)
            for cell in _triangulate_face(face, self.dim - 1, tight, self.vertices):
                simplices.append((center,) + tuple(self.vertices[i] for i in cell))
        return tuple(simplices)

    def to_dict(self) -> Dict:
        data = {
            'dim': self.dim,
            'facets': [f.to_dict() for f in self.facets],
            'vertices': [[format_rational(c) for c in v] for v in self.vertices],
        }
        if self.rays is not None:
            data['rays'] = [list(r) for r in self.rays]
        return data


@dataclass(frozen=True)
class ExpMoments:
    """F(xi) = int_P e^<v,xi> dv together with its gradient and hessian"""
    value: float
    gradient: np.ndarray
    hessian: np.ndarray


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def parse_rational(text) -> Fraction:
    try:
        return Fraction(str(text))
    except (ValueError, ZeroDivisionError) as e:
        raise ValidationError(f"Not a rational number: {text!r}") from e


def _pair(u: Sequence, a: Sequence) -> Fraction:
    return sum((Fraction(x) * y for x, y in zip(u, a)), Fraction(0))


def _to_sympy(rows: Sequence[Sequence]) -> sympy.Matrix:
    return sympy.Matrix([[sympy.Rational(Fraction(x).numerator, Fraction(x).denominator) for x in row]
                         for row in rows])


def _to_fraction(value) -> Fraction:
    value = sympy.Rational(value)
    return Fraction(int(value.p), int(value.q))


def _affine_rank(points: Sequence[Vector]) -> int:
    if len(points) <= 1:
        return 0
    base = points[0]
    return _to_sympy([[a - b for a, b in zip(p, base)] for p in points[1:]]).rank()


def _triangulate_face(face: FrozenSet[int], dim: int, tight: List[FrozenSet[int]],
                      vertices: Sequence[Vector]) -> List[Tuple[int, ...]]:
    """Pulling triangulation of a face given as a set of vertex indices"""
    if dim == 0:
        return [(min(face),)]
    apex = min(face)
    cells = []
    seen = set()
    for t in tight:
        sub = face & t
        if apex in sub or sub in seen or len(sub) < dim:
            continue
        if _affine_rank([vertices[i] for i in sub]) != dim - 1:
            continue
        seen.add(sub)
        for cell in _triangulate_face(sub, dim - 1, tight, vertices):
            cells.append((apex,) + cell)
    return cells


def _check_vector(xi, dim: int, name: str = 'xi') -> np.ndarray:
    arr = np.atleast_1d(np.asarray(xi, dtype=float))
    if arr.shape != (dim,):
        raise ValidationError(f"{name} must have dimension {dim}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} must be finite, got {arr.tolist()}")
    return arr


def _complete_homogeneous(y: np.ndarray, degree: int) -> List[float]:
    """h_0..h_degree of the entries of y through Newton's identities"""
    power_sums = [float(np.sum(y ** i)) for i in range(degree + 1)]
    h = [1.0]
    for k in range(1, degree + 1):
        h.append(sum(power_sums[i] * h[k - i] for i in range(1, k + 1)) / k)
    return h


def exp_divided_difference(nodes: Sequence[float]) -> float:
    """
    Divided difference exp[z_0, ..., z_N] with confluent nodes allowed.

    Blocks whose spread is below CLUSTER_TOL are summed with the series
    e^c sum_k h_k(z - c) / (N + k)! (h_k complete homogeneous), the rest by
    the usual recursion on the sorted nodes. The series covers the removable
    singularities of the closed form, where the recursion would cancel.
    """
    z = np.sort(np.asarray(nodes, dtype=float))
    memo: Dict[Tuple[int, int], float] = {}

    def block(i: int, j: int) -> float:
        key = (i, j)
        if key in memo:
            return memo[key]
        spread = z[j] - z[i]
        if spread < CLUSTER_TOL:
            c = float(np.mean(z[i:j + 1]))
            h = _complete_homogeneous(z[i:j + 1] - c, SERIES_TERMS - 1)
            order = j - i
            value = math.exp(c) * sum(h[k] / math.factorial(order + k) for k in range(SERIES_TERMS))
        else:
            value = (block(i + 1, j) - block(i, j - 1)) / spread
        memo[key] = value
        return value

    return block(0, len(z) - 1)


class PolytopeService:
    """Service for exact lattice polytope computations"""

    @staticmethod
    def from_facets(dim: int, facets: Sequence[Tuple[Sequence[int], object]],
                    rays: Optional[Sequence[Sequence[int]]] = None) -> MomentPolytope:
        """
        Build a polytope from inequalities <u, normal> >= offset

        Args:
            dim: Ambient dimension n
            facets: (integer normal, rational offset) pairs
            rays: Fan rays the facets came from, if any

        Returns:
            MomentPolytope with exact vertices
        """
        if not isinstance(dim, int) or dim < 1:
            raise ValidationError(f"dim must be a positive integer, got {dim!r}")
        parsed = []
        for normal, offset in facets:
            normal = tuple(int(a) for a in normal)
            if len(normal) != dim:
                raise ValidationError(f"Facet normal {list(normal)} does not have dimension {dim}")
            if not any(normal):
                raise ValidationError("Facet normal must be nonzero")
            parsed.append(Facet(normal=normal, offset=parse_rational(offset)))
        if len(set(parsed)) != len(parsed):
            raise ValidationError("Duplicate facet inequality")

        normals = _to_sympy([f.normal for f in parsed]) if parsed else sympy.zeros(0, dim)
        if normals.rank() < dim:
            raise ConstructionError("Facet normals do not span N_R: the polytope is unbounded")
        if _has_recession_direction(parsed, dim):
            raise ConstructionError("Facet normals do not positively span N_R: the polytope is unbounded")

        vertices = _enumerate_vertices(parsed, dim)
        polytope = MomentPolytope(
            dim=dim,
            facets=tuple(parsed),
            vertices=tuple(vertices),
            lattice_rank=dim,
            rays=tuple(tuple(int(a) for a in r) for r in rays) if rays is not None else None,
        )
        if not polytope.is_full_dimensional:
            raise ConstructionError("Polytope is not full-dimensional")
        logger.info(f"✅ Built polytope: dim={dim}, {len(parsed)} facets, {len(vertices)} vertices")
        return polytope

    @staticmethod
    def anticanonical_polytope(rays: Sequence[Sequence[int]]) -> MomentPolytope:
        """
        Anticanonical moment polytope P = {u : <u, v_i> >= -1} of a fan

        Args:
            rays: Primitive, pairwise distinct integer rays spanning N_R

        Returns:
            MomentPolytope with integral vertices (reflexive, Gorenstein index 1)
        """
        if not rays:
            raise ValidationError("At least one ray is required")
        rays = [tuple(int(a) for a in r) for r in rays]
        dim = len(rays[0])
        if dim < 1 or any(len(r) != dim for r in rays):
            raise ValidationError("All rays must have the same positive dimension")
        if len(set(rays)) != len(rays):
            raise ValidationError("Rays must be pairwise distinct")
        for r in rays:
            if math.gcd(*r) != 1:
                raise ValidationError(f"Ray {list(r)} is not primitive")

        polytope = PolytopeService.from_facets(dim, [(r, -1) for r in rays], rays=rays)
        if any(c.denominator != 1 for v in polytope.vertices for c in v):
            raise ValidationError("Anticanonical polytope has non-integral vertices (not reflexive)")
        return polytope

    @staticmethod
    def from_dict(data: Dict) -> MomentPolytope:
        """Parse the polytope JSON form: {"dim", "rays"} or {"dim", "facets"}"""
        if not isinstance(data, dict) or 'dim' not in data:
            raise ValidationError("Polytope JSON must be an object with a 'dim' field")
        if 'rays' in data:
            polytope = PolytopeService.anticanonical_polytope(data['rays'])
            if polytope.dim != data['dim']:
                raise ValidationError(f"Rays have dimension {polytope.dim}, expected {data['dim']}")
            return polytope
        if 'facets' in data:
            try:
                facets = [(f['normal'], f['offset']) for f in data['facets']]
            except (KeyError, TypeError) as e:
                raise ValidationError(f"Malformed facet entry: {e}") from e
            return PolytopeService.from_facets(data['dim'], facets)
        raise ValidationError("Polytope JSON needs either 'rays' or 'facets'")

    @staticmethod
    def lattice_points(P: MomentPolytope, m: int) -> np.ndarray:
        """
        Enumerate mP ∩ M by scanning the bounding box of mP

        Args:
            P: Polytope
            m: Dilation level, m >= 1

        Returns:
            Read-only integer array of shape (count, n), lexicographically sorted
        """
        if not isinstance(m, (int, np.integer)) or m < 1:
            raise ValidationError(f"m must be a positive integer, got {m!r}")
        m = int(m)
        key = (P, m)
        if key in _lattice_cache:
            return _lattice_cache[key]

        lows = [math.floor(m * min(v[i] for v in P.vertices)) for i in range(P.dim)]
        highs = [math.ceil(m * max(v[i] for v in P.vertices)) for i in range(P.dim)]
        axes = [np.arange(lo, hi + 1, dtype=np.int64) for lo, hi in zip(lows, highs)]
        # 'ij' indexing flattens in lexicographic order
        grid = np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1).reshape(-1, P.dim)

        keep = np.ones(len(grid), dtype=bool)
        for facet in P.facets:
            lhs = grid @ np.asarray(facet.normal, dtype=np.int64)
            keep &= facet.offset.denominator * lhs >= m * facet.offset.numerator
        points = grid[keep]
        points.setflags(write=False)

        if len(_lattice_cache) >= _LATTICE_CACHE_LIMIT:
            _lattice_cache.clear()
        _lattice_cache[key] = points
        return points

    @staticmethod
    def ehrhart_counts(P: MomentPolytope, m_max: int) -> List[int]:
        """|mP ∩ M| for m = 1..m_max"""
        return [len(PolytopeService.lattice_points(P, m)) for m in range(1, m_max + 1)]

    @staticmethod
    def volume(P: MomentPolytope) -> Fraction:
        """Exact Lebesgue volume from the fan triangulation"""
        _require_full_dimensional(P)
        return sum((_simplex_volume(s) for s in P.simplices), Fraction(0))

    @staticmethod
    def barycenter(P: MomentPolytope) -> Vector:
        """Exact barycenter (int_P v dv) / vol(P)"""
        _require_full_dimensional(P)
        total = Fraction(0)
        moment = [Fraction(0)] * P.dim
        for s in P.simplices:
            vol = _simplex_volume(s)
            total += vol
            for i in range(P.dim):
                moment[i] += vol * sum(p[i] for p in s) / (P.dim + 1)
        return tuple(c / total for c in moment)

    @staticmethod
    def exp_moments(P: MomentPolytope, xi) -> ExpMoments:
        """
        F(xi) = int_P e^<v,xi> dv, its gradient and hessian

        Each simplex with vertices p_0..p_n contributes n! vol exp[z_0..z_n]
        with z_i = <p_i, xi>; derivatives repeat the corresponding nodes.
        """
        _require_full_dimensional(P)
        xi = _check_vector(xi, P.dim)
        n = P.dim
        value = 0.0
        gradient = np.zeros(n)
        hessian = np.zeros((n, n))
        for s in P.simplices:
            pts = np.array([[float(c) for c in p] for p in s])
            scale = math.factorial(n) * float(_simplex_volume(s))
            z = pts @ xi
            nodes = list(z)
            value += scale * exp_divided_difference(nodes)
            for i in range(n + 1):
                gradient += scale * exp_divided_difference(nodes + [z[i]]) * pts[i]
                for j in range(n + 1):
                    weight = 2.0 if i == j else 1.0
                    dd = exp_divided_difference(nodes + [z[i], z[j]])
                    hessian += scale * weight * dd * np.outer(pts[i], pts[j])
        hessian = 0.5 * (hessian + hessian.T)
        return ExpMoments(value=value, gradient=gradient, hessian=hessian)

    @staticmethod
    def product(P: MomentPolytope, Q: MomentPolytope) -> MomentPolytope:
        """Product polytope P x Q in M_P ⊕ M_Q"""
        facets = [(tuple(f.normal) + (0,) * Q.dim, f.offset) for f in P.facets]
        facets += [((0,) * P.dim + tuple(f.normal), f.offset) for f in Q.facets]
        rays = None
        if P.rays is not None and Q.rays is not None:
            rays = [r + (0,) * Q.dim for r in P.rays] + [(0,) * P.dim + r for r in Q.rays]
        return PolytopeService.from_facets(P.dim + Q.dim, facets, rays=rays)

    @staticmethod
    def transform(P: MomentPolytope, U: Sequence[Sequence[int]]) -> MomentPolytope:
        """
        Image UP under a unimodular U acting on M

        Normals (and rays) transform by the inverse transpose.
        """
        mat = sympy.Matrix([[int(a) for a in row] for row in U])
        if mat.shape != (P.dim, P.dim) or abs(mat.det()) != 1:
            raise ValidationError("U must be a unimodular integer matrix of the polytope's dimension")
        dual = mat.inv().T
        facets = [(tuple(int(a) for a in dual * sympy.Matrix(f.normal)), f.offset) for f in P.facets]
        rays = None
        if P.rays is not None:
            rays = [tuple(int(a) for a in dual * sympy.Matrix(r)) for r in P.rays]
        return PolytopeService.from_facets(P.dim, facets, rays=rays)

    @staticmethod
    def lattice_points_csv(P: MomentPolytope, levels: Sequence[int]) -> str:
        """Lattice point dump with header m,u1,...,un"""
        header = ','.join(['m'] + [f"u{i + 1}" for i in range(P.dim)])
        rows = [header]
        for m in levels:
            for u in PolytopeService.lattice_points(P, m):
                rows.append(','.join(str(int(x)) for x in (m, *u)))
        return '\n'.join(rows) + '\n'


def _require_full_dimensional(P: MomentPolytope) -> None:
    if not P.is_full_dimensional:
        raise ConstructionError("Polytope is degenerate (not full-dimensional)")


def _simplex_volume(simplex: Sequence[Vector]) -> Fraction:
    base = simplex[0]
    edges = _to_sympy([[a - b for a, b in zip(p, base)] for p in simplex[1:]])
    return abs(_to_fraction(edges.det())) / math.factorial(len(base))


def _has_recession_direction(facets: Sequence[Facet], dim: int) -> bool:
    """True if some d != 0 has <d, a> >= 0 for every facet normal a"""
    if dim == 1:
        candidates = [(1,), (-1,)]
    else:
        candidates = []
        for subset in itertools.combinations(facets, dim - 1):
            kernel = _to_sympy([f.normal for f in subset]).nullspace()
            if len(kernel) != 1:
                continue
            d = tuple(_to_fraction(x) for x in kernel[0])
            candidates += [d, tuple(-x for x in d)]
    return any(all(_pair(d, f.normal) >= 0 for f in facets) for d in candidates)


def _enumerate_vertices(facets: Sequence[Facet], dim: int) -> List[Vector]:
    """Intersect every dim-subset of facet hyperplanes and keep feasible points"""
    vertices = set()
    for subset in itertools.combinations(facets, dim):
        normals = _to_sympy([f.normal for f in subset])
        if normals.det() == 0:
            continue
        rhs = _to_sympy([[f.offset] for f in subset])
        solution = tuple(_to_fraction(x) for x in normals.LUsolve(rhs))
        if all(_pair(solution, f.normal) >= f.offset for f in facets):
            vertices.add(solution)
    return sorted(vertices)
