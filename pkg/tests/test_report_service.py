"""
Tests for verification reports and report serialization
"""

import json
import math

import pytest

from services.errors import ValidationError
from services.report_service import VerificationReport, dumps, round_trip, rows_to_csv, validate_report


def test_checks_compare_against_tolerance():
    report = VerificationReport(title='demo')
    report.add('ok', 1e-12, 1e-10)
    report.add('bad', 1e-3, 1e-10)
    assert not report.passed
    assert [c.name for c in report.failures] == ['bad']
    assert report.worst() == {'ok': 1e-12, 'bad': 1e-3}


def test_negative_control_passes_when_fault_is_seen():
    report = VerificationReport(title='demo')
    report.add('control', 0.5, 1e-3, expect_failure=True)
    assert report.passed
    report.add('silent control', 1e-6, 1e-3, expect_failure=True)
    assert not report.passed


def test_non_finite_residual_fails():
    report = VerificationReport(title='demo')
    report.add('nan', math.nan, 1.0)
    assert not report.passed
    assert json.loads(dumps(report.to_dict()))['checks'][0]['residual'] is None


def test_summary_table_groups_checks():
    report = VerificationReport(title='demo')
    for residual in (1e-13, 3e-12):
        report.add('rule', residual, 1e-11)
    lines = report.summary_table().splitlines()
    assert len(lines) == 2
    assert lines[1].split()[:2] == ['rule', '2'] and lines[1].endswith('PASS')


def test_dumps_is_byte_stable():
    assert dumps({'b': 1, 'a': [1.5, 2]}) == dumps({'a': [1.5, 2], 'b': 1})
    assert dumps({'a': 1}).endswith('}\n')


def test_csv_rows():
    assert rows_to_csv(('m', 'gap', 'slope'), [(10, 0.5, None)]) == "m,gap,slope\n10,0.5,\n"


def test_round_trip_validates_schema():
    text = round_trip('character', {'m': 1, 'weights': [], 'total': 0})
    assert json.loads(text)['m'] == 1
    with pytest.raises(ValidationError):
        round_trip('character', {'m': 1, 'weights': []})


@pytest.mark.parametrize('command, data', [
    ('git', {'verdict': 'maybe', 'moment_map': []}),
    ('xi', {'xi_star': [], 'residual': 0.0, 'iters': 'three', 'table': [], 'kahler_einstein': None}),
    ('nope', {}),
])
def test_invalid_reports(command, data):
    with pytest.raises(ValidationError):
        validate_report(command, data)
