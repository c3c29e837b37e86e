"""
Soliton Workbench - Command Line
Batch runs, convergence studies and verification suites with JSON/CSV reports

Exit codes: 0 success, 1 failed checks, 2 usage or input error.
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from dotenv import load_dotenv

# Load .env from the project root, same as the web app
load_dotenv(dotenv_path=Path(__file__).parent.parent / '.env')

from services.catalog_service import CatalogService
from services.character_service import CharacterService, fit_decay_exponent
from services.errors import SolverError, ValidationError
from services.kempfness_service import KempfNessService
from services.momentmap_service import MomentMapService
from services.polytope_service import MomentPolytope, PolytopeService, format_rational
from services.report_service import round_trip, rows_to_csv
from services.soliton_service import SolitonService, doubling_levels

logger = logging.getLogger('workbench.cli')

COMMANDS = ('polytope', 'character', 'df', 'xi', 'verify-momentmap', 'verify-appendixb', 'git')


@dataclass(frozen=True)
class RunConfig:
    """Resolved settings of one CLI invocation"""
    command: str
    input_path: Optional[str] = None
    output_path: Optional[str] = None
    tol: float = 1e-10
    m_max: int = 160
    seed: int = 0
    example: Optional[str] = None
    fmt: str = 'json'
    level: int = 1
    seeds: int = 100
    instances: int = 20
    inject_fault: bool = False
    xi: Optional[Tuple[float, ...]] = None
    lam: Optional[Tuple[float, ...]] = None
    assert_polystable: bool = False

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValidationError(f"Unknown command {self.command!r}")
        if not self.tol > 0:
            raise ValidationError(f"--tol must be positive, got {self.tol}")
        if self.m_max < 1:
            raise ValidationError(f"--m-max must be >= 1, got {self.m_max}")
        if self.level < 1:
            raise ValidationError(f"--m must be >= 1, got {self.level}")

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> 'RunConfig':
        return cls(
            command=args.command,
            input_path=args.input,
            output_path=args.output,
            tol=args.tol,
            m_max=args.m_max,
            seed=args.seed,
            example=args.example,
            fmt=args.format,
            level=args.m,
            seeds=args.seeds,
            instances=args.instances,
            inject_fault=args.inject_fault,
            xi=_parse_vector(args.xi, '--xi'),
            lam=_parse_vector(args.lam, '--lambda'),
            assert_polystable=args.assert_polystable,
        )


def _parse_vector(text: Optional[str], flag: str) -> Optional[Tuple[float, ...]]:
    if text is None:
        return None
    try:
        return tuple(float(part) for part in text.split(','))
    except ValueError as e:
        raise ValidationError(f"{flag} expects comma-separated numbers, got {text!r}") from e


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='workbench', description='Toric Fano soliton workbench')
    parser.add_argument('command', choices=COMMANDS)
    parser.add_argument('--input', help='JSON input file (polytope, weight table or representation)')
    parser.add_argument('--output', help='Report file (default: stdout)')
    parser.add_argument('--tol', type=float, default=float(os.getenv('WORKBENCH_TOL', '1e-10')))
    parser.add_argument('--m-max', type=int, default=int(os.getenv('WORKBENCH_M_MAX', '160')))
    parser.add_argument('--seed', type=int, default=int(os.getenv('WORKBENCH_SEED', '0')))
    parser.add_argument('--example', help='Built-in polytope (cp1, cp2, bl1cp2, p1xp1, ...)')
    parser.add_argument('--format', choices=('json', 'csv'), default='json')
    parser.add_argument('--m', type=int, default=1, help='Level for character and lattice point dumps')
    parser.add_argument('--seeds', type=int, default=100, help='Frames per dimension for verify-appendixb')
    parser.add_argument('--instances', type=int, default=20, help='Random structures for verify-momentmap')
    parser.add_argument('--inject-fault', action='store_true', help='Corrupt every frame (negative control)')
    parser.add_argument('--xi', help='Comma-separated xi (default 0)')
    parser.add_argument('--lambda', dest='lam', help='Comma-separated lambda (default first basis vector)')
    parser.add_argument('--assert-polystable', action='store_true',
                        help='git: exit 1 unless the point is polystable')
    return parser


def convergence_study(P: MomentPolytope, xi, lam, m_list: Sequence[int]) -> str:
    """
    CSV rows m, df_discrete, df_continuum, gap, fitted_slope

    The slope column is the log-log fit over the rows so far and stays empty
    until two levels with nonzero gaps are available.
    """
    rows = SolitonService.convergence_table(P, xi, lam, m_list)
    lines = []
    for i, row in enumerate(rows):
        slope = fit_decay_exponent([r.m for r in rows[:i + 1]], [r.gap for r in rows[:i + 1]])
        lines.append((row.m, row.df_discrete, row.df_continuum, row.gap, slope))
    return rows_to_csv(('m', 'df_discrete', 'df_continuum', 'gap', 'fitted_slope'), lines)


def _read_json(path: str) -> Dict:
    with open(path, 'r') as f:
        return json.load(f)


def _load_polytope(config: RunConfig) -> MomentPolytope:
    if config.example:
        return CatalogService().get_polytope(config.example)
    if config.input_path:
        return PolytopeService.from_dict(_read_json(config.input_path))
    raise ValidationError(f"{config.command} needs --input or --example")


def _vector(values: Optional[Tuple[float, ...]], dim: int, default: List[float], flag: str) -> List[float]:
    if values is None:
        return default
    if len(values) != dim:
        raise ValidationError(f"{flag} must have {dim} entries, got {len(values)}")
    return list(values)


def _run_polytope(config: RunConfig) -> Tuple[str, bool]:
    P = _load_polytope(config)
    if config.fmt == 'csv':
        return PolytopeService.lattice_points_csv(P, range(1, config.level + 1)), True
    payload = {
        'polytope': P.to_dict(),
        'volume': format_rational(PolytopeService.volume(P)),
        'barycenter': [format_rational(c) for c in PolytopeService.barycenter(P)],
        'ehrhart': PolytopeService.ehrhart_counts(P, P.dim + 3),
        'anticanonical': P.is_anticanonical,
    }
    return round_trip('polytope', payload), True


def _run_character(config: RunConfig) -> Tuple[str, bool]:
    P = _load_polytope(config)
    chi = CharacterService.hilbert_character(P, config.level)
    if config.fmt == 'csv':
        return chi.to_csv(), True
    payload = {**chi.to_dict(), 'total': chi.total}
    return round_trip('character', payload), True


def _run_df(config: RunConfig) -> Tuple[str, bool]:
    data = _read_json(config.input_path) if config.input_path and not config.example else None
    if data is not None and 'levels' in data:
        table = SolitonService.weight_table_from_dict(data)
        xi_bar = _vector(config.xi, table.weight_dim, [0.0] * table.weight_dim, '--xi')
        estimate = SolitonService.df_from_weight_table(table, xi_bar, config.m_max)
        values = SolitonService.level_values(table, xi_bar)
        payload = {
            'xi': xi_bar,
            'lambda': [0] * (table.weight_dim - 1) + [1],
            'df_continuum': estimate.value,
            'error': estimate.error,
            'table': [{'m': m, 'df_disc': v} for m, v in values.items() if m <= config.m_max],
        }
        return round_trip('df', payload), True

    P = PolytopeService.from_dict(data) if data is not None else _load_polytope(config)
    xi = _vector(config.xi, P.dim, [0.0] * P.dim, '--xi')
    lam = _vector(config.lam, P.dim, [1.0] + [0.0] * (P.dim - 1), '--lambda')
    m_list = doubling_levels(config.m_max)
    if config.fmt == 'csv':
        return convergence_study(P, xi, lam, m_list), True
    rows = SolitonService.convergence_table(P, xi, lam, m_list)
    payload = {
        'xi': xi,
        'lambda': lam,
        'df_continuum': SolitonService.df_continuum(P, xi, lam),
        'table': [row.to_dict() for row in rows],
        'fitted_slope': fit_decay_exponent([r.m for r in rows], [r.gap for r in rows]),
    }
    return round_trip('df', payload), True


def _run_xi(config: RunConfig) -> Tuple[str, bool]:
    P = _load_polytope(config)
    report = SolitonService.k_optimal_vector(P, config.tol, m_list=doubling_levels(config.m_max))
    payload = report.to_dict()
    payload['kahler_einstein'] = SolitonService.is_kahler_einstein(P) if P.is_anticanonical else None
    payload['k_optimality'] = SolitonService.k_optimality_check(report.xi_star, max(config.tol * 10, 1e-9)).to_dict()
    return round_trip('xi', payload), report.residual <= config.tol


def _run_verify_momentmap(config: RunConfig) -> Tuple[str, bool]:
    report = MomentMapService.moment_map_suite(instances=config.instances, seed=config.seed)
    print(report.summary_table(), file=sys.stderr)
    return round_trip('verify-momentmap', report.to_dict()), report.passed


def _run_verify_appendixb(config: RunConfig) -> Tuple[str, bool]:
    report = MomentMapService.appendix_b_suite(seeds=config.seeds, inject_fault=config.inject_fault)
    print(report.summary_table(), file=sys.stderr)
    return round_trip('verify-appendixb', report.to_dict()), report.passed


def _run_git(config: RunConfig) -> Tuple[str, bool]:
    if config.input_path:
        rp = KempfNessService.from_dict(_read_json(config.input_path))
    else:
        rp = KempfNessService.random_rep_point(config.seed)
    verdict = KempfNessService.polystable(rp)
    payload = {'representation': rp.to_dict(), **verdict.to_dict()}
    if verdict.is_polystable:
        payload['lemma'] = KempfNessService.sze_lemma_bound_check(rp, delta=1.0, seed=config.seed).to_dict()
    passed = verdict.is_polystable or not config.assert_polystable
    return round_trip('git', payload), passed


_HANDLERS = {
    'polytope': _run_polytope,
    'character': _run_character,
    'df': _run_df,
    'xi': _run_xi,
    'verify-momentmap': _run_verify_momentmap,
    'verify-appendixb': _run_verify_appendixb,
    'git': _run_git,
}


def run(argv: Optional[Sequence[str]] = None) -> int:
    """
    Execute one sub-command

    Args:
        argv: Arguments without the program name

    Returns:
        0 on success, 1 when checks fail, 2 on usage or input errors
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 2

    try:
        config = RunConfig.from_args(args)
        text, passed = _HANDLERS[config.command](config)
    except SolverError as e:
        logger.error(f"❌ {e}")
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2

    if config.output_path:
        with open(config.output_path, 'w') as f:
            f.write(text)
        logger.info(f"✅ Wrote {config.command} report to {config.output_path}")
    else:
        sys.stdout.write(text)
    if not passed:
        logger.warning(f"⚠️ {config.command}: checks failed")
    return 0 if passed else 1


def main() -> int:
    logging.basicConfig(
        level=os.getenv('LOG_LEVEL', 'INFO').upper(),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )
    return run(sys.argv[1:])


if __name__ == '__main__':
    sys.exit(main())
