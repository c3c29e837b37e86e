"""
Soliton Workbench - Character Service
Hilbert characters chi_m of toric Fano manifolds as weight-multiplicity maps

For a toric Fano manifold the higher cohomology of -mK vanishes and every
lattice point of mP carries a one-dimensional weight space, so chi_m is the
indicator map of mP ∩ M.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import PreconditionError, ValidationError
from .polytope_service import MomentPolytope, PolytopeService, _check_vector

logger = logging.getLogger(__name__)

Weight = Tuple[int, ...]


@dataclass(frozen=True)
class WeightedCharacter:
    """Weight-multiplicity map u -> h0_{X,u}(m) at level m"""
    level: int
    dim: int
    weights: Dict[Weight, int] = field(hash=False)

    def __post_init__(self):
        if self.level < 1:
            raise ValidationError(f"Character level must be >= 1, got {self.level}")
        for u, mult in self.weights.items():
            if len(u) != self.dim:
                raise ValidationError(f"Weight {list(u)} does not have dimension {self.dim}")
            if mult < 1:
                raise ValidationError(f"Multiplicity of {list(u)} must be >= 1, got {mult}")

    @property
    def total(self) -> int:
        return sum(self.weights.values())

    def items(self) -> List[Tuple[Weight, int]]:
        """Weights in canonical lexicographic order"""
        return sorted(self.weights.items())

    def arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        items = self.items()
        if not items:
            return np.zeros((0, self.dim), dtype=np.int64), np.zeros(0, dtype=np.int64)
        weights = np.array([u for u, _ in items], dtype=np.int64)
        mults = np.array([k for _, k in items], dtype=np.int64)
        return weights, mults

    def to_dict(self) -> Dict:
        return {
            'm': self.level,
            'weights': [{'u': list(u), 'mult': k} for u, k in self.items()],
        }

    def to_csv(self) -> str:
        header = ','.join([f"u{i + 1}" for i in range(self.dim)] + ['mult'])
        rows = [header] + [','.join(str(x) for x in (*u, k)) for u, k in self.items()]
        return '\n'.join(rows) + '\n'


@dataclass(frozen=True)
class HrrReport:
    """Leading-order asymptotics of chi_m against the polytope integrals"""
    volume: float
    count_rows: List[Tuple[int, float]]
    count_exponent: Optional[float]
    value_rows: List[Tuple[int, float, float, float]]
    value_exponent: Optional[float]
    moment_rows: List[Tuple[int, List[float], List[float], float]]
    moment_exponent: Optional[float]

    def to_dict(self) -> Dict:
        return {
            'volume': self.volume,
            'counts': [{'m': m, 'ratio': r} for m, r in self.count_rows],
            'count_exponent': self.count_exponent,
            'values': [{'m': m, 'discrete': d, 'continuum': c, 'gap': g} for m, d, c, g in self.value_rows],
            'value_exponent': self.value_exponent,
            'moments': [{'m': m, 'discrete': d, 'continuum': c, 'gap': g} for m, d, c, g in self.moment_rows],
            'moment_exponent': self.moment_exponent,
        }


def fit_decay_exponent(ms: Sequence[float], gaps: Sequence[float]) -> Optional[float]:
    """
    Least-squares slope of log|gap| against log m

    Returns None when fewer than two levels are given or a gap vanishes.
    """
    gaps = np.abs(np.asarray(gaps, dtype=float))
    if len(gaps) < 2 or np.any(gaps <= 1e-300):
        return None
    slope, _ = np.polyfit(np.log(np.asarray(ms, dtype=float)), np.log(gaps), 1)
    return float(slope)


class CharacterService:
    """Service for Hilbert characters of toric Fano polytopes"""

    @staticmethod
    def hilbert_character(P: MomentPolytope, m: int) -> WeightedCharacter:
        """
        Hilbert character chi_m of the toric Fano with moment polytope P

        Args:
            P: Moment polytope
            m: Level, m >= 1

        Returns:
            WeightedCharacter whose weights are the indicator map of mP ∩ M
        """
        points = PolytopeService.lattice_points(P, m)
        weights = {tuple(int(x) for x in u): 1 for u in points}
        return WeightedCharacter(level=m, dim=P.dim, weights=weights)

    @staticmethod
    def character_value(chi: WeightedCharacter, eta) -> float:
        """chi_m(exp eta) = sum_u mult(u) e^<u,eta>"""
        eta = _check_vector(eta, chi.dim, name='eta')
        weights, mults = chi.arrays()
        return float(np.sum(mults * np.exp(weights @ eta)))

    @staticmethod
    def hrr_asymptotic_check(P: MomentPolytope, m_list: Sequence[int], eta=None) -> HrrReport:
        """
        Compare chi_m with the leading term of the equivariant HRR expansion

        Args:
            P: Moment polytope
            m_list: At least three increasing levels
            eta: Evaluation point for the weighted sums (default 0)

        Returns:
            HrrReport with h0(m)/m^n against vol(P), m^-n chi_m(e^{eta/m}) against
            F(eta) and m^-(n+1) sum_u u e^<u,eta>/m against grad F(eta), each with its
            fitted decay exponent
        """
        m_list = [int(m) for m in m_list]
        if len(m_list) < 3 or any(b <= a for a, b in zip(m_list, m_list[1:])):
            raise PreconditionError("m_list needs at least three strictly increasing levels")
        n = P.dim
        eta = np.zeros(n) if eta is None else _check_vector(eta, n, name='eta')

        volume = float(PolytopeService.volume(P))
        moments = PolytopeService.exp_moments(P, eta)
        count_rows, value_rows, moment_rows = [], [], []
        for m in m_list:
            points = PolytopeService.lattice_points(P, m).astype(float)
            count_rows.append((m, len(points) / m ** n))
            weights = np.exp(points @ eta / m)
            discrete_value = float(np.sum(weights)) / m ** n
            value_rows.append((m, discrete_value, moments.value, discrete_value - moments.value))
            discrete_moment = (weights @ points) / m ** (n + 1)
            gap = float(np.linalg.norm(discrete_moment - moments.gradient))
            moment_rows.append((m, discrete_moment.tolist(), moments.gradient.tolist(), gap))

        report = HrrReport(
            volume=volume,
            count_rows=count_rows,
            count_exponent=fit_decay_exponent(m_list, [r - volume for _, r in count_rows]),
            value_rows=value_rows,
            value_exponent=fit_decay_exponent(m_list, [row[3] for row in value_rows]),
            moment_rows=moment_rows,
            moment_exponent=fit_decay_exponent(m_list, [row[3] for row in moment_rows]),
        )
        logger.info(f"HRR check on levels {m_list}: count exponent {report.count_exponent}")
        return report

    @staticmethod
    def characters_equal(a: WeightedCharacter, b: WeightedCharacter, normalize: bool = False) -> bool:
        """
        Compare two characters of the same level

        With normalize=True both sides are first brought to a canonical form
        under signed permutations of the coordinates of M.
        """
        if a.level != b.level:
            raise ValidationError(f"Characters have different levels: {a.level} vs {b.level}")
        if a.dim != b.dim:
            return False
        if not normalize:
            return a.weights == b.weights
        return _canonical_form(a) == _canonical_form(b)

    @staticmethod
    def product_character(a: WeightedCharacter, b: WeightedCharacter) -> WeightedCharacter:
        """Character of the product polytope at the common level"""
        if a.level != b.level:
            raise ValidationError(f"Characters have different levels: {a.level} vs {b.level}")
        weights = {u + v: ka * kb for (u, ka), (v, kb) in itertools.product(a.weights.items(), b.weights.items())}
        return WeightedCharacter(level=a.level, dim=a.dim + b.dim, weights=weights)

    @staticmethod
    def from_dict(data: Dict) -> WeightedCharacter:
        """Parse {"m": m, "weights": [{"u": [...], "mult": k}, ...]}"""
        try:
            level = int(data['m'])
            weights = {tuple(int(x) for x in w['u']): int(w['mult']) for w in data['weights']}
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"Malformed character JSON: {e}") from e
        if not weights:
            raise ValidationError("Character has no weights")
        dim = len(next(iter(weights)))
        return WeightedCharacter(level=level, dim=dim, weights=weights)


def _canonical_form(chi: WeightedCharacter) -> Tuple:
    items = chi.items()
    best = None
    for perm in itertools.permutations(range(chi.dim)):
        for signs in itertools.product((1, -1), repeat=chi.dim):
            image = tuple(sorted((tuple(signs[i] * u[perm[i]] for i in range(chi.dim)), k) for u, k in items))
            if best is None or image < best:
                best = image
    return best
