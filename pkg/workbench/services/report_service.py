"""
Soliton Workbench - Report Service
Verification reports, deterministic JSON/CSV output and per-command schema checks
"""

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

from .errors import ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Check:
    """One named residual compared against its tolerance"""
    name: str
    residual: float
    tolerance: float
    expect_failure: bool = False

    @property
    def passed(self) -> bool:
        within = math.isfinite(self.residual) and self.residual <= self.tolerance
        # Negative controls pass when the fault is detected
        return not within if self.expect_failure else within

    def to_dict(self) -> Dict:
        return {
            'name': self.name,
            'residual': self.residual,
            'tolerance': self.tolerance,
            'negative_control': self.expect_failure,
            'passed': self.passed,
        }


@dataclass
class VerificationReport:
    """Ordered collection of checks with an overall verdict"""
    title: str
    checks: List[Check] = field(default_factory=list)

    def add(self, name: str, residual: float, tolerance: float, expect_failure: bool = False) -> Check:
        check = Check(name=name, residual=float(residual), tolerance=float(tolerance),
                      expect_failure=expect_failure)
        self.checks.append(check)
        return check

    def extend(self, other: 'VerificationReport') -> None:
        self.checks.extend(other.checks)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> List[Check]:
        return [c for c in self.checks if not c.passed]

    def worst(self) -> Dict[str, float]:
        """Largest residual per check name, ignoring negative controls"""
        worst: Dict[str, float] = {}
        for c in self.checks:
            if c.expect_failure:
                continue
            worst[c.name] = max(worst.get(c.name, 0.0), c.residual)
        return worst

    def summary_table(self) -> str:
        grouped: Dict[str, List[Check]] = {}
        for c in self.checks:
            grouped.setdefault(c.name, []).append(c)
        width = max([len(name) for name in grouped] + [5])
        lines = [f"{'check':<{width}}  {'count':>5}  {'max residual':>12}  {'tolerance':>9}  status"]
        for name, group in grouped.items():
            status = 'PASS' if all(c.passed for c in group) else 'FAIL'
            lines.append(f"{name:<{width}}  {len(group):>5}  {max(c.residual for c in group):>12.3e}  "
                         f"{group[0].tolerance:>9.1e}  {status}")
        return '\n'.join(lines)

    def to_dict(self) -> Dict:
        return {
            'title': self.title,
            'passed': self.passed,
            'total': len(self.checks),
            'failed': len(self.failures),
            'worst': self.worst(),
            'checks': [c.to_dict() for c in self.checks],
        }


def dumps(payload: Dict) -> str:
    """Byte-stable JSON: sorted keys, fixed indentation, trailing newline"""
    return json.dumps(_clean(payload), indent=2, sort_keys=True, allow_nan=False) + '\n'


def _clean(value):
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if hasattr(value, 'item') and callable(value.item):
        return _clean(value.item())
    return value


def rows_to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [','.join(header)]
    for row in rows:
        lines.append(','.join('' if v is None else _csv_cell(v) for v in row))
    return '\n'.join(lines) + '\n'


def _csv_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


# Required top-level keys for every command's JSON report
_SCHEMAS: Dict[str, Dict[str, type]] = {
    'polytope': {'polytope': dict, 'volume': str, 'barycenter': list, 'ehrhart': list},
    'character': {'m': int, 'weights': list, 'total': int},
    'df': {'xi': list, 'lambda': list, 'df_continuum': float, 'table': list},
    'xi': {'xi_star': list, 'residual': float, 'iters': int, 'table': list, 'kahler_einstein': (bool, type(None))},
    'verify-momentmap': {'title': str, 'passed': bool, 'checks': list},
    'verify-appendixb': {'title': str, 'passed': bool, 'checks': list},
    'git': {'verdict': str, 'moment_map': list},
}


def validate_report(command: str, data: Dict) -> Dict:
    """
    Check a command's report against its schema

    Args:
        command: Sub-command name
        data: Parsed JSON report

    Returns:
        The report unchanged

    Raises:
        ValidationError: on a missing key or a value of the wrong type
    """
    schema: Optional[Dict] = _SCHEMAS.get(command)
    if schema is None:
        raise ValidationError(f"Unknown report kind: {command}")
    if not isinstance(data, dict):
        raise ValidationError(f"{command} report must be a JSON object")
    for key, kind in schema.items():
        if key not in data:
            raise ValidationError(f"{command} report is missing '{key}'")
        value = data[key]
        if kind is float:
            ok = value is None or (isinstance(value, (int, float)) and not isinstance(value, bool))
        elif kind is int:
            ok = isinstance(value, int) and not isinstance(value, bool)
        else:
            ok = isinstance(value, kind)
        if not ok:
            raise ValidationError(f"{command} report field '{key}' has type {type(value).__name__}")
    if command == 'git' and data['verdict'] not in ('polystable', 'semistable-not-polystable', 'unstable'):
        raise ValidationError(f"Unknown verdict {data['verdict']!r}")
    return data


def round_trip(command: str, payload: Dict) -> str:
    """Serialize a report and re-validate the parsed result"""
    text = dumps(payload)
    validate_report(command, json.loads(text))
    return text
