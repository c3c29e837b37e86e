"""
Soliton Workbench - Soliton Service
Modified Donaldson-Futaki invariants, the K-optimal vector and product-configuration checks

Weights are paired with xi through e^<u,xi>/m literally, so the soliton vector
of a polytope whose barycenter leans towards +v points towards -v. Authors
using e^-theta weightings report the opposite sign with the same magnitude.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Sequence, Tuple, Union

import numpy as np
import sympy

from .errors import PreconditionError, SolverError, ValidationError
from .polytope_service import MomentPolytope, PolytopeService, _check_vector

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
MAX_NEWTON_ITERS = 100
MAX_HALVINGS = 60
ARMIJO = 1e-4
RELATION_BOUND = 10 ** 6

Grading = Union[None, Sequence[int], Callable[[Tuple[int, ...]], int]]


@dataclass(frozen=True)
class ConvergenceRow:
    m: int
    df_discrete: float
    df_continuum: float

    @property
    def gap(self) -> float:
        return abs(self.df_discrete - self.df_continuum)

    def to_dict(self) -> Dict:
        return {'m': self.m, 'df_disc': self.df_discrete, 'df_cont': self.df_continuum, 'gap': self.gap}


@dataclass(frozen=True)
class SolitonReport:
    """Result of the K-optimal vector solve"""
    xi_star: Tuple[float, ...]
    residual: float
    newton_iters: int
    convergence_table: Tuple[ConvergenceRow, ...] = ()
    diagnostics: Dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> Dict:
        return {
            'xi_star': list(self.xi_star),
            'residual': self.residual,
            'iters': self.newton_iters,
            'table': [row.to_dict() for row in self.convergence_table],
        }


@dataclass(frozen=True)
class EquivariantWeightTable:
    """Central-fibre weights per level; each weight is (u, j) in M x Z"""
    levels: Dict[int, Tuple[Tuple[Tuple[int, ...], int], ...]]

    def __post_init__(self):
        if not self.levels:
            raise ValidationError("Weight table has no levels")
        dims = set()
        for m, entries in self.levels.items():
            if not isinstance(m, int) or m < 1:
                raise ValidationError(f"Level must be a positive integer, got {m!r}")
            if not entries:
                raise ValidationError(f"Level {m} is empty")
            for weight, mult in entries:
                if mult < 1:
                    raise ValidationError(f"Multiplicity at level {m} must be >= 1, got {mult}")
                dims.add(len(weight))
        if len(dims) != 1 or min(dims) < 1:
            raise ValidationError("Weights in the table must share one positive dimension")

    @property
    def weight_dim(self) -> int:
        entries = next(iter(self.levels.values()))
        return len(entries[0][0])

    def to_dict(self) -> Dict:
        return {'levels': [
            {'m': m, 'weights': [{'u': list(w), 'mult': k} for w, k in self.levels[m]]}
            for m in sorted(self.levels)
        ]}


@dataclass(frozen=True)
class WeightTableEstimate:
    value: float
    error: float
    levels_used: Tuple[int, ...]

    def to_dict(self) -> Dict:
        return {'estimate': self.value, 'error': self.error, 'levels': list(self.levels_used)}


@dataclass(frozen=True)
class KOptimalityReport:
    rank: int
    relations: Tuple[Tuple[int, ...], ...]
    heuristic: bool = True

    def to_dict(self) -> Dict:
        return {'rank': self.rank, 'relations': [list(c) for c in self.relations], 'heuristic': self.heuristic}


def doubling_levels(m_max: int, start: int = 10) -> List[int]:
    """start, 2*start, ... up to m_max"""
    levels = []
    m = start
    while m <= m_max:
        levels.append(m)
        m *= 2
    return levels or [m_max]


class SolitonService:
    """Service for DF invariants and K-optimal vectors of toric Fano polytopes"""

    @staticmethod
    def df_discrete(P: MomentPolytope, xi, lam, m: int) -> float:
        """
        DF at level m: -w(m; lambda) / (m h0(m)) with w = sum_u e^<u,xi>/m <u,lambda>

        Args:
            P: Moment polytope
            xi: Real vector in N_R
            lam: Integer vector in N
            m: Level, m >= 1

        Returns:
            Finite-level Donaldson-Futaki value
        """
        xi = _check_vector(xi, P.dim)
        lam = _check_vector(lam, P.dim, name='lambda')
        points = PolytopeService.lattice_points(P, m).astype(float)
        weights = np.exp(points @ xi / m)
        w = float(np.sum(weights * (points @ lam)))
        return -w / (m * len(points))

    @staticmethod
    def df_continuum(P: MomentPolytope, xi, lam) -> float:
        """-(int_P <v,lambda> e^<v,xi> dv) / vol(P), linear in lambda"""
        lam = _check_vector(lam, P.dim, name='lambda')
        moments = PolytopeService.exp_moments(P, xi)
        return -float(moments.gradient @ lam) / float(PolytopeService.volume(P))

    @staticmethod
    def convergence_table(P: MomentPolytope, xi, lam, m_list: Sequence[int]) -> List[ConvergenceRow]:
        """(m, df_discrete, df_continuum) rows for each requested level"""
        cont = SolitonService.df_continuum(P, xi, lam)
        return [ConvergenceRow(m=int(m), df_discrete=SolitonService.df_discrete(P, xi, lam, int(m)),
                               df_continuum=cont)
                for m in m_list]

    @staticmethod
    def k_optimal_vector(P: MomentPolytope, tol: float = DEFAULT_TOL,
                         m_list: Sequence[int] = (10, 20, 40)) -> SolitonReport:
        """
        Minimize F(xi) = int_P e^<v,xi> dv by damped Newton from xi = 0

        Args:
            P: Polytope with the origin in its interior
            tol: Stop once |grad F| / vol(P) <= tol
            m_list: Levels of the convergence table along the first basis vector

        Returns:
            SolitonReport; diagnostics hold the F and gradient histories and the
            smallest hessian eigenvalue at every iterate
        """
        if not tol > 0:
            raise ValidationError(f"tol must be positive, got {tol}")
        if not P.origin_is_interior:
            raise PreconditionError("The origin is not interior to P: F has no minimum")
        volume = float(PolytopeService.volume(P))

        xi = np.zeros(P.dim)
        moments = PolytopeService.exp_moments(P, xi)
        history = {'f': [moments.value], 'grad_norm': [], 'min_hessian_eig': []}
        iters = 0
        while True:
            grad_norm = float(np.linalg.norm(moments.gradient)) / volume
            history['grad_norm'].append(grad_norm)
            history['min_hessian_eig'].append(float(np.linalg.eigvalsh(moments.hessian)[0]))
            if grad_norm <= tol:
                break
            if iters >= MAX_NEWTON_ITERS:
                logger.error(f"❌ Newton did not converge: |grad F|/vol = {grad_norm:.3e} after {iters} iterations")
                raise SolverError(f"Newton did not converge within {MAX_NEWTON_ITERS} iterations",
                                  diagnostics={'xi': xi.tolist(), **history})

            step = -np.linalg.solve(moments.hessian, moments.gradient)
            slope = float(moments.gradient @ step)
            alpha = 1.0
            for _ in range(MAX_HALVINGS):
                trial = PolytopeService.exp_moments(P, xi + alpha * step)
                if trial.value <= moments.value + ARMIJO * alpha * slope:
                    break
                # Rounding floor: F no longer resolves the decrease, the gradient still does
                if (abs(trial.value - moments.value) <= 1e-14 * moments.value
                        and np.linalg.norm(trial.gradient) < np.linalg.norm(moments.gradient)):
                    break
                alpha *= 0.5
            else:
                raise SolverError("Line search failed to find a decrease",
                                  diagnostics={'xi': xi.tolist(), **history})
            xi = xi + alpha * step
            moments = trial
            history['f'].append(moments.value)
            iters += 1

        residual = max(abs(SolitonService.df_continuum(P, xi, lam)) for lam in np.eye(P.dim))
        table = ()
        if m_list:
            table = tuple(SolitonService.convergence_table(P, xi, np.eye(P.dim)[0], m_list))
        logger.info(f"✅ K-optimal vector {np.round(xi, 10).tolist()} after {iters} Newton steps "
                    f"(residual {residual:.2e})")
        return SolitonReport(
            xi_star=tuple(float(x) for x in xi),
            residual=residual,
            newton_iters=iters,
            convergence_table=table,
            diagnostics=history,
        )

    @staticmethod
    def is_kahler_einstein(P: MomentPolytope) -> bool:
        """Barycenter criterion, decided in exact arithmetic"""
        if not P.is_anticanonical:
            raise PreconditionError("Kahler-Einstein criterion needs an anticanonical polytope")
        return all(c == 0 for c in PolytopeService.barycenter(P))

    @staticmethod
    def df_product_configuration(P: MomentPolytope, xi, mu) -> float:
        """DF of the product configuration twisted by mu in N, paired with (xi, 0)"""
        mu = np.asarray(mu)
        if mu.shape != (P.dim,) or not np.all(np.equal(np.mod(mu, 1), 0)):
            raise ValidationError(f"mu must be an integer vector of dimension {P.dim}")
        return SolitonService.df_continuum(P, xi, mu.astype(float))

    @staticmethod
    def weight_table_from_polytope(P: MomentPolytope, levels: Sequence[int],
                                   grading: Grading = None) -> EquivariantWeightTable:
        """
        Central-fibre weight table of a toric degeneration

        Args:
            P: Moment polytope
            levels: Levels to tabulate
            grading: None for the trivial C*-grading, an integer vector mu for the
                product configuration j(u) = <u, mu>, or a callable u -> j

        Returns:
            EquivariantWeightTable with weights (u, j(u)) of multiplicity one
        """
        if grading is None:
            def grade(u):
                return 0
        elif callable(grading):
            grade = grading
        else:
            mu = [int(a) for a in grading]
            if len(mu) != P.dim:
                raise ValidationError(f"Grading vector must have dimension {P.dim}")

            def grade(u):
                return sum(a * b for a, b in zip(u, mu))

        table = {}
        for m in levels:
            points = PolytopeService.lattice_points(P, int(m))
            table[int(m)] = tuple((tuple(int(x) for x in u) + (int(grade(tuple(int(x) for x in u))),), 1)
                                  for u in points)
        return EquivariantWeightTable(levels=table)

    @staticmethod
    def level_values(table: EquivariantWeightTable, xi_bar) -> Dict[int, float]:
        """-w(m; lambda) / (m h0(m)) per level, lambda the distinguished factor s -> (1, s)"""
        xi_bar = _check_vector(xi_bar, table.weight_dim, name='xi_bar')
        values = {}
        for m in sorted(table.levels):
            weights = np.array([w for w, _ in table.levels[m]], dtype=float)
            mults = np.array([k for _, k in table.levels[m]], dtype=float)
            w = float(np.sum(mults * np.exp(weights @ xi_bar / m) * weights[:, -1]))
            values[m] = -w / (m * float(np.sum(mults)))
        return values

    @staticmethod
    def df_from_weight_table(table: EquivariantWeightTable, xi_bar, m_max: int) -> WeightTableEstimate:
        """
        Richardson-extrapolated DF of a central fibre

        Levels 1..m_max must all be present. The last three levels give two
        first-order extrapolations in 1/m; the later one is the estimate and
        their difference the error bar.
        """
        if not isinstance(m_max, int) or m_max < 3:
            raise ValidationError(f"m_max must be an integer >= 3, got {m_max!r}")
        missing = [m for m in range(1, m_max + 1) if m not in table.levels]
        if missing:
            raise ValidationError(f"Weight table is missing levels {missing[:5]}")
        values = SolitonService.level_values(table, xi_bar)
        m0, m1, m2 = m_max - 2, m_max - 1, m_max

        def extrapolate(a, b):
            return (b * values[b] - a * values[a]) / (b - a)

        first, second = extrapolate(m0, m1), extrapolate(m1, m2)
        return WeightTableEstimate(value=second, error=abs(second - first), levels_used=(m0, m1, m2))

    @staticmethod
    def k_optimality_check(xi, tol: float) -> KOptimalityReport:
        """
        Search integer relations sum c_i xi_i = 0 with |c| <= 10^6

        LLL-reduces the rows [I | round(xi / tol)]; reduced rows with
        |<c, xi>| <= tol are relations and rank = n - #relations. The verdict
        is heuristic.
        """
        if not tol > 0:
            raise ValidationError(f"tol must be positive, got {tol}")
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        if not np.all(np.isfinite(xi)):
            raise ValidationError("xi must be finite")
        n = len(xi)
        scale = 1.0 / tol
        rows = [[int(i == j) for j in range(n)] + [int(round(scale * x))] for i, x in enumerate(xi)]
        relations = []
        reduced = sympy.Matrix(rows).lll()
        for i in range(reduced.rows):
            c = [int(a) for a in reduced.row(i)[:n]]
            if not any(c) or max(abs(a) for a in c) > RELATION_BOUND:
                continue
            if abs(math.fsum(a * x for a, x in zip(c, xi))) <= tol:
                if next(a for a in c if a != 0) < 0:
                    c = [-a for a in c]
                relations.append(tuple(c))
        relations.sort(key=lambda c: (sum(abs(a) for a in c), c))
        return KOptimalityReport(rank=n - len(relations), relations=tuple(relations))

    @staticmethod
    def weight_table_from_dict(data: Dict) -> EquivariantWeightTable:
        """Parse {"levels": [{"m": m, "weights": [{"u": [..., j], "mult": k}]}]}"""
        try:
            levels = {int(level['m']): tuple((tuple(int(x) for x in w['u']), int(w['mult']))
                                             for w in level['weights'])
                      for level in data['levels']}
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"Malformed weight table JSON: {e}") from e
        return EquivariantWeightTable(levels=levels)
