"""
Soliton Workbench - Kempf-Ness Service
Linear torus representations: moment maps, polystability certificates and
Kempf-Ness minimization

The torus (C*)^k acts on C^N by (e^{iv} b)_i = e^{<w_i, v>} b_i for v in R^k
(the imaginary directions of the complexified Lie algebra). The Kempf-Ness
function is phi(v) = 1/2 sum_i |b_i|^2 e^{2 <w_i, v>} with gradient the moment
map of the transported point.

A one-parameter subgroup lambda destabilizes b when s -> e^{s lambda} b has a
limit as s -> +infinity outside the orbit: <w_i, lambda> <= 0 on the active
weights with at least one strict inequality. All strict means b flows to 0.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import null_space, orth
from scipy.optimize import linprog

from .errors import PreconditionError, SolverError, ValidationError

logger = logging.getLogger(__name__)

POLYSTABLE = 'polystable'
SEMISTABLE = 'semistable-not-polystable'
UNSTABLE = 'unstable'

DEFAULT_TOL = 1e-10
MAX_ITERS = 200
MAX_HALVINGS = 40
LP_MARGIN = 1e-9
BRUTE_FORCE_BOUND = 10


@dataclass(frozen=True)
class TorusRepPoint:
    """Integer weights w_i in Z^k and a point b in C^N"""
    k: int
    weights: Tuple[Tuple[int, ...], ...]
    point: Tuple[complex, ...]

    def __post_init__(self):
        if not isinstance(self.k, (int, np.integer)) or self.k < 1:
            raise ValidationError(f"Torus rank must be a positive integer, got {self.k!r}")
        if len(self.weights) < 1:
            raise ValidationError("At least one weight is required")
        if len(self.weights) != len(self.point):
            raise ValidationError(f"{len(self.weights)} weights but {len(self.point)} coordinates")
        if any(len(w) != self.k for w in self.weights):
            raise ValidationError(f"Every weight must have dimension {self.k}")
        if not all(math.isfinite(abs(b)) for b in self.point):
            raise ValidationError("Point coordinates must be finite")

    @property
    def weight_matrix(self) -> np.ndarray:
        return np.array(self.weights, dtype=float).reshape(len(self.weights), self.k)

    @property
    def moduli(self) -> np.ndarray:
        """|b_i|^2"""
        return np.abs(np.array(self.point, dtype=complex)) ** 2

    @property
    def active(self) -> np.ndarray:
        return np.flatnonzero(self.moduli > 0)

    def to_dict(self) -> Dict:
        return {
            'k': self.k,
            'weights': [list(w) for w in self.weights],
            'point': [[b.real, b.imag] for b in self.point],
        }


@dataclass(frozen=True)
class StabilityVerdict:
    verdict: str
    moment_map: Tuple[float, ...]
    destabilizer: Optional[Tuple[int, ...]] = None
    certificate_source: Optional[str] = None
    lp_margin: Optional[float] = None
    minimizer: Optional[Tuple[float, ...]] = None
    zero_point: Optional[Tuple[complex, ...]] = None

    @property
    def is_polystable(self) -> bool:
        return self.verdict == POLYSTABLE

    def to_dict(self) -> Dict:
        certificate: Dict = {'source': self.certificate_source, 'lp_margin': self.lp_margin}
        if self.destabilizer is not None:
            certificate['destabilizer'] = list(self.destabilizer)
        if self.minimizer is not None:
            certificate['minimizer'] = list(self.minimizer)
            certificate['zero_point'] = [[b.real, b.imag] for b in self.zero_point]
        return {'verdict': self.verdict, 'moment_map': list(self.moment_map), 'certificate': certificate}


@dataclass(frozen=True)
class KempfNessResult:
    converged: bool
    v: Optional[Tuple[float, ...]]
    moment_norm: Optional[float]
    iterations: int
    direction: Optional[Tuple[float, ...]] = None
    kernel: Tuple[Tuple[float, ...], ...] = ()
    phi_history: Tuple[float, ...] = field(default=(), compare=False)

    def to_dict(self) -> Dict:
        return {
            'converged': self.converged,
            'v': None if self.v is None else list(self.v),
            'moment_norm': self.moment_norm,
            'iterations': self.iterations,
            'direction': None if self.direction is None else list(self.direction),
            'kernel': [list(row) for row in self.kernel],
        }


@dataclass(frozen=True)
class LemmaBoundReport:
    applicable: bool
    holds: Optional[bool]
    lam: float
    v_norm: float
    moment_norm: float
    delta: float

    @property
    def bound(self) -> float:
        return self.lam * self.moment_norm

    def to_dict(self) -> Dict:
        return {
            'applicable': self.applicable, 'holds': self.holds, 'lambda': self.lam,
            'v_norm': self.v_norm, 'moment_norm': self.moment_norm, 'bound': self.bound,
            'delta': self.delta,
        }


@dataclass(frozen=True)
class ScalingReport:
    rows: Tuple[Tuple[float, Tuple[float, ...], Tuple[float, ...], float], ...]

    @property
    def max_deviation(self) -> float:
        return max((row[3] for row in self.rows), default=0.0)

    def to_dict(self) -> Dict:
        return {
            'rows': [{'t': t, 'moment_map': list(mu), 'expected': list(exp), 'deviation': dev}
                     for t, mu, exp, dev in self.rows],
            'max_deviation': self.max_deviation,
        }


def _span_basis(rp: TorusRepPoint) -> np.ndarray:
    """Orthonormal basis (columns) of the span of the active weights"""
    active = rp.weight_matrix[rp.active]
    if active.size == 0 or not np.any(active):
        return np.zeros((rp.k, 0))
    return orth(active.T)


def _integer_direction(direction: np.ndarray) -> Tuple[int, ...]:
    fractions = [Fraction(float(x)).limit_denominator(1000) for x in direction]
    scale = math.lcm(*(f.denominator for f in fractions))
    ints = [int(f * scale) for f in fractions]
    g = math.gcd(*ints)
    return tuple(a // g for a in ints) if g else tuple(ints)


def _classify(rp: TorusRepPoint, lam: Sequence[int]) -> Optional[str]:
    """Exact destabilizing type of an integer one-parameter subgroup"""
    pairings = [sum(a * b for a, b in zip(rp.weights[i], lam)) for i in rp.active]
    if pairings and all(p < 0 for p in pairings):
        return UNSTABLE
    if pairings and all(p <= 0 for p in pairings) and any(p < 0 for p in pairings):
        return SEMISTABLE
    return None


class KempfNessService:
    """Service for the torus Kempf-Ness sandbox"""

    @staticmethod
    def linear_moment_map(rp: TorusRepPoint) -> np.ndarray:
        """mu(b) = sum_i |b_i|^2 w_i"""
        return rp.moduli @ rp.weight_matrix

    @staticmethod
    def transport(rp: TorusRepPoint, v) -> TorusRepPoint:
        """The point e^{iv} b"""
        v = np.asarray(v, dtype=float).reshape(rp.k)
        scale = np.exp(rp.weight_matrix @ v)
        return TorusRepPoint(k=rp.k, weights=rp.weights,
                             point=tuple(complex(b) * s for b, s in zip(rp.point, scale)))

    @staticmethod
    def kempf_ness_function(rp: TorusRepPoint, v) -> float:
        v = np.asarray(v, dtype=float).reshape(rp.k)
        return 0.5 * float(np.sum(rp.moduli * np.exp(2 * rp.weight_matrix @ v)))

    @staticmethod
    def kempf_ness_gradient(rp: TorusRepPoint, v) -> np.ndarray:
        return KempfNessService.linear_moment_map(KempfNessService.transport(rp, v))

    @staticmethod
    def kempf_ness_hessian(rp: TorusRepPoint, v) -> np.ndarray:
        """2 sum_i |b_i(v)|^2 w_i w_i^T"""
        moduli = KempfNessService.transport(rp, v).moduli
        W = rp.weight_matrix
        return 2 * (W.T * moduli) @ W

    @staticmethod
    def brute_force_destabilizer(rp: TorusRepPoint, bound: int = BRUTE_FORCE_BOUND
                                 ) -> Optional[Tuple[str, Tuple[int, ...]]]:
        """
        Scan integer one-parameter subgroups with |lambda|_inf <= bound

        Candidates are visited by sup-norm, then l1-norm, then lexicographically,
        and an unstable destabilizer is preferred over a semistable one.

        Returns:
            (verdict, lambda) for the first destabilizer found, or None
        """
        active = rp.weight_matrix[rp.active]
        if len(active) == 0:
            return None
        grid = np.array(list(itertools.product(range(-bound, bound + 1), repeat=rp.k)), dtype=np.int64)
        grid = grid[np.any(grid != 0, axis=1)]
        order = np.lexsort((*grid.T[::-1], np.abs(grid).sum(axis=1), np.abs(grid).max(axis=1)))
        grid = grid[order]
        pairings = grid @ active.astype(np.int64).T

        strict = np.all(pairings < 0, axis=1)
        if np.any(strict):
            return UNSTABLE, tuple(int(a) for a in grid[np.argmax(strict)])
        weak = np.all(pairings <= 0, axis=1) & np.any(pairings < 0, axis=1)
        if np.any(weak):
            return SEMISTABLE, tuple(int(a) for a in grid[np.argmax(weak)])
        return None

    @staticmethod
    def polystable(rp: TorusRepPoint, with_certificate: bool = True) -> StabilityVerdict:
        """
        Decide the orbit type of b from the active weights

        b is polystable iff 0 lies in the relative interior of the convex hull of
        {w_i : b_i != 0}. The LP maximizes t subject to c_i >= t, sum c_i = 1,
        sum c_i w_i = 0. Destabilizers come from a separation LP, with the integer
        sweep as fallback; polystable points get a zero of the moment map on
        their orbit.
        """
        mu = tuple(float(x) for x in KempfNessService.linear_moment_map(rp))
        active = rp.weight_matrix[rp.active]
        if len(active) == 0:
            return StabilityVerdict(verdict=POLYSTABLE, moment_map=mu, certificate_source='fixed-point',
                                    minimizer=(0.0,) * rp.k if with_certificate else None,
                                    zero_point=rp.point if with_certificate else None)

        n = len(active)
        result = linprog(
            c=np.r_[np.zeros(n), -1.0],
            A_ub=np.c_[-np.eye(n), np.ones(n)],
            b_ub=np.zeros(n),
            A_eq=np.r_[np.c_[np.ones((1, n)), 0.0], np.c_[active.T, np.zeros(rp.k)]],
            b_eq=np.r_[1.0, np.zeros(rp.k)],
            bounds=[(0, None)] * n + [(None, None)],
            method='highs',
        )
        margin = float(-result.fun) if result.status == 0 else None

        if margin is not None and margin > LP_MARGIN:
            if not with_certificate:
                return StabilityVerdict(verdict=POLYSTABLE, moment_map=mu, certificate_source='lp', lp_margin=margin)
            minimum = KempfNessService._minimize(rp, DEFAULT_TOL, np.zeros(rp.k))
            zero_point = KempfNessService.transport(rp, minimum.v).point
            return StabilityVerdict(verdict=POLYSTABLE, moment_map=mu, certificate_source='lp',
                                    lp_margin=margin, minimizer=minimum.v, zero_point=zero_point)

        verdict = UNSTABLE if margin is None else SEMISTABLE
        lam = KempfNessService._separating_direction(active, strict=verdict == UNSTABLE)
        source = 'lp'
        if lam is None or _classify(rp, lam) != verdict:
            found = KempfNessService.brute_force_destabilizer(rp)
            lam = found[1] if found is not None and found[0] == verdict else None
            source = 'brute-force'
        if lam is None:
            logger.warning(f"⚠️ No integer destabilizer found for a {verdict} point")
        return StabilityVerdict(verdict=verdict, moment_map=mu, destabilizer=lam,
                                certificate_source=source if lam is not None else None, lp_margin=margin)

    @staticmethod
    def _separating_direction(active: np.ndarray, strict: bool) -> Optional[Tuple[int, ...]]:
        """
        Vertex of {lambda : <w_i, lambda> <= -1} (strict) or of
        {<w_i, lambda> <= 0, sum_i <w_i, lambda> <= -1}, rounded to an integer vector
        """
        n, k = active.shape
        if strict:
            A_ub, b_ub = active, -np.ones(n)
        else:
            A_ub = np.r_[active, active.sum(axis=0, keepdims=True)]
            b_ub = np.r_[np.zeros(n), -1.0]
        # Minimize |lambda|_1 through lambda = p - q with p, q >= 0
        result = linprog(
            c=np.ones(2 * k),
            A_ub=np.c_[A_ub, -A_ub],
            b_ub=b_ub,
            bounds=[(0, None)] * (2 * k),
            method='highs',
        )
        if result.status != 0:
            return None
        return _integer_direction(result.x[:k] - result.x[k:])

    @staticmethod
    def _minimize(rp: TorusRepPoint, tol: float, start: np.ndarray) -> KempfNessResult:
        """Damped Newton on phi restricted to start + span of the active weights"""
        basis = _span_basis(rp)
        kernel = tuple(tuple(float(a) for a in col) for col in null_space(rp.weight_matrix[rp.active]).T) \
            if len(rp.active) else tuple(tuple(row) for row in np.eye(rp.k))
        v = np.asarray(start, dtype=float).reshape(rp.k)
        phi = KempfNessService.kempf_ness_function(rp, v)
        history = [phi]
        for iteration in range(MAX_ITERS + 1):
            grad = KempfNessService.kempf_ness_gradient(rp, v)
            grad_norm = float(np.linalg.norm(grad))
            if grad_norm <= tol or basis.shape[1] == 0:
                return KempfNessResult(converged=True, v=tuple(float(x) for x in v), moment_norm=grad_norm,
                                       iterations=iteration, kernel=kernel, phi_history=tuple(history))
            if iteration == MAX_ITERS:
                break
            g = basis.T @ grad
            H = basis.T @ KempfNessService.kempf_ness_hessian(rp, v) @ basis
            step = basis @ -np.linalg.solve(H, g)
            slope = float(grad @ step)
            alpha = 1.0
            for _ in range(MAX_HALVINGS):
                trial = v + alpha * step
                trial_phi = KempfNessService.kempf_ness_function(rp, trial)
                if trial_phi <= phi + 1e-4 * alpha * slope:
                    break
                if (abs(trial_phi - phi) <= 1e-14 * phi
                        and np.linalg.norm(KempfNessService.kempf_ness_gradient(rp, trial)) < grad_norm):
                    break
                alpha *= 0.5
            else:
                logger.error(f"❌ Kempf-Ness line search found no decrease at iteration {iteration}")
                raise SolverError("Line search failed to find a decrease",
                                  diagnostics={'v': v.tolist(), 'phi': history})
            v, phi = trial, trial_phi
            history.append(phi)

        logger.error(f"❌ Kempf-Ness minimization hit the {MAX_ITERS}-iteration cap")
        raise SolverError(f"Kempf-Ness minimization did not converge within {MAX_ITERS} iterations",
                          diagnostics={'v': v.tolist(), 'phi': history})

    @staticmethod
    def kempf_ness_minimize(rp: TorusRepPoint, tol: float = DEFAULT_TOL, start=None) -> KempfNessResult:
        """
        Minimize phi(v) = 1/2 sum_i |b_i|^2 e^{2 <w_i, v>}

        Args:
            rp: Representation point
            tol: Target for |mu(e^{iv} b)|
            start: Initial v (default 0)

        Returns:
            KempfNessResult with the minimizer for polystable points; otherwise
            converged=False and the destabilizing direction along which phi
            decreases to its infimum. kernel spans the stabilizer directions.
        """
        if not tol > 0:
            raise ValidationError(f"tol must be positive, got {tol}")
        start = np.zeros(rp.k) if start is None else np.asarray(start, dtype=float)
        verdict = KempfNessService.polystable(rp, with_certificate=False)
        if verdict.is_polystable:
            result = KempfNessService._minimize(rp, tol, start)
            logger.info(f"✅ Kempf-Ness minimizer after {result.iterations} steps, |mu| = {result.moment_norm:.2e}")
            return result
        direction = None if verdict.destabilizer is None else tuple(float(a) for a in verdict.destabilizer)
        return KempfNessResult(converged=False, v=None, moment_norm=None, iterations=0, direction=direction)

    @staticmethod
    def sze_lemma_bound_check(rp: TorusRepPoint, delta: float, samples: int = 200, seed: int = 0
                              ) -> LemmaBoundReport:
        """
        Check |v_b| <= lambda |mu(b)| with lambda = sup_{|v| < delta} |(sigma* sigma)^-1|

        sigma* sigma at e^{iv} b is the Hessian of phi, 2 sum_i |b_i(v)|^2 w_i w_i^T,
        restricted to the span of the active weights. The sup is sampled on
        random points of the ball and along the segment from 0 to v_b.
        """
        if not delta > 0:
            raise ValidationError(f"delta must be positive, got {delta}")
        verdict = KempfNessService.polystable(rp, with_certificate=False)
        if not verdict.is_polystable:
            raise PreconditionError(f"Lemma bound needs a polystable point, got {verdict.verdict}")

        mu_norm = float(np.linalg.norm(KempfNessService.linear_moment_map(rp)))
        basis = _span_basis(rp)
        v_star = np.asarray(KempfNessService._minimize(rp, DEFAULT_TOL, np.zeros(rp.k)).v)
        v_norm = float(np.linalg.norm(v_star))
        if basis.shape[1] == 0:
            return LemmaBoundReport(applicable=True, holds=v_norm == 0.0, lam=0.0, v_norm=v_norm,
                                    moment_norm=mu_norm, delta=delta)

        rng = np.random.default_rng(seed)
        r = basis.shape[1]
        directions = rng.standard_normal((samples, r))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        radii = delta * rng.uniform(0.0, 1.0, samples) ** (1.0 / r)
        points = [basis @ (d * s) for d, s in zip(directions, radii)]
        points += [s * v_star for s in np.linspace(0.0, 1.0, samples) if s * v_norm < delta]

        lam = 0.0
        for v in points:
            H = basis.T @ KempfNessService.kempf_ness_hessian(rp, v) @ basis
            lam = max(lam, 1.0 / float(np.linalg.eigvalsh(H)[0]))

        applicable = lam * mu_norm < delta
        holds = v_norm <= lam * mu_norm + 1e-12 if applicable else None
        return LemmaBoundReport(applicable=applicable, holds=holds, lam=lam, v_norm=v_norm,
                                moment_norm=mu_norm, delta=delta)

    @staticmethod
    def scaling_expansion_check(rp: TorusRepPoint, t_list: Sequence[float]) -> ScalingReport:
        """mu(t b) against t^2 mu(b); deviations relative to max(1, |t^2 mu(b)|)"""
        mu = KempfNessService.linear_moment_map(rp)
        rows = []
        for t in t_list:
            scaled = TorusRepPoint(k=rp.k, weights=rp.weights, point=tuple(t * complex(b) for b in rp.point))
            actual = KempfNessService.linear_moment_map(scaled)
            expected = t ** 2 * mu
            deviation = float(np.max(np.abs(actual - expected))) / max(1.0, float(np.max(np.abs(expected))))
            rows.append((float(t), tuple(actual.tolist()), tuple(expected.tolist()), deviation))
        return ScalingReport(rows=tuple(rows))

    @staticmethod
    def random_rep_point(seed: int, k: Optional[int] = None, n_points: Optional[int] = None) -> TorusRepPoint:
        """Random instance with k <= 3, N <= 6, weights in {-1, 0, 1}^k and some zero coordinates"""
        rng = np.random.default_rng(seed)
        k = int(rng.integers(1, 4)) if k is None else k
        n_points = int(rng.integers(1, 7)) if n_points is None else n_points
        weights = tuple(tuple(int(a) for a in rng.integers(-1, 2, k)) for _ in range(n_points))
        values = rng.standard_normal(n_points) + 1j * rng.standard_normal(n_points)
        values[rng.uniform(size=n_points) < 0.2] = 0
        return TorusRepPoint(k=k, weights=weights, point=tuple(complex(b) for b in values))

    @staticmethod
    def from_dict(data: Dict) -> TorusRepPoint:
        """Parse {"k": k, "weights": [[int, ...], ...], "point": [[re, im], ...]}"""
        try:
            k = int(data['k'])
            weights = tuple(tuple(int(a) for a in w) for w in data['weights'])
            point = tuple(complex(float(p[0]), float(p[1])) for p in data['point'])
        except (KeyError, TypeError, ValueError, IndexError) as e:
            raise ValidationError(f"Malformed representation JSON: {e}") from e
        return TorusRepPoint(k=k, weights=weights, point=point)


def verdict_oracle(rp: TorusRepPoint, bound: int = BRUTE_FORCE_BOUND) -> str:
    """Verdict from the integer sweep alone"""
    found = KempfNessService.brute_force_destabilizer(rp, bound)
    return POLYSTABLE if found is None else found[0]


def sweep(seeds: Sequence[int]) -> List[Dict]:
    """Verdicts of random instances against the brute-force oracle"""
    rows = []
    for seed in seeds:
        rp = KempfNessService.random_rep_point(seed)
        verdict = KempfNessService.polystable(rp)
        rows.append({'seed': seed, 'verdict': verdict.verdict, 'oracle': verdict_oracle(rp)})
    return rows
