"""
Tests for the command line front end
"""

import json

import pytest

from cli import RunConfig, build_parser, convergence_study, run
from services.catalog_service import CatalogService
from services.errors import ValidationError


def run_json(capsys, argv):
    code = run(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip().startswith('{') else out)


@pytest.fixture
def rep_file(tmp_path):
    def write(weights, point):
        path = tmp_path / 'rep.json'
        path.write_text(json.dumps({'k': len(weights[0]), 'weights': weights, 'point': point}))
        return str(path)
    return write


class TestExitCodes:

    def test_help(self, capsys):
        assert run(['--help']) == 0

    def test_unknown_command(self, capsys):
        assert run(['frobnicate']) == 2

    def test_malformed_json(self, tmp_path, capsys):
        path = tmp_path / 'broken.json'
        path.write_text('{"dim": 2, "rays": [')
        assert run(['xi', '--input', str(path)]) == 2
        assert capsys.readouterr().err.startswith('error:')

    def test_missing_file(self, tmp_path, capsys):
        assert run(['polytope', '--input', str(tmp_path / 'nope.json')]) == 2

    def test_no_polytope_given(self, capsys):
        assert run(['polytope']) == 2

    def test_non_positive_tolerance(self, capsys):
        assert run(['xi', '--example', 'cp2', '--tol', '0']) == 2

    def test_unbounded_polytope(self, tmp_path, capsys):
        path = tmp_path / 'open.json'
        path.write_text(json.dumps({'dim': 2, 'rays': [[1, 0], [0, 1]]}))
        assert run(['polytope', '--input', str(path)]) == 2


class TestPolytopeAndCharacter:

    def test_polytope_report(self, capsys):
        code, data = run_json(capsys, ['polytope', '--example', 'cp2'])
        assert code == 0
        assert data['volume'] == '9/2'
        assert data['barycenter'] == ['0/1', '0/1']
        assert data['ehrhart'][0] == 10

    def test_lattice_point_csv(self, capsys):
        code, text = run_json(capsys, ['polytope', '--example', 'cp1', '--format', 'csv', '--m', '2'])
        assert code == 0
        assert text.splitlines()[0] == 'm,u1'
        assert len(text.splitlines()) == 1 + 3 + 5

    def test_character_json(self, capsys):
        code, data = run_json(capsys, ['character', '--example', 'bl1cp2'])
        assert code == 0
        assert data['total'] == 9

    def test_character_csv(self, capsys):
        code, text = run_json(capsys, ['character', '--example', 'cp1', '--format', 'csv'])
        assert text == "u1,mult\n-1,1\n0,1\n1,1\n"


class TestSoliton:

    def test_cp2_from_file(self, tmp_path, capsys):
        path = tmp_path / 'cp2.json'
        path.write_text(json.dumps({'dim': 2, 'rays': [[1, 0], [0, 1], [-1, -1]]}))
        code, data = run_json(capsys, ['xi', '--input', str(path), '--m-max', '20'])
        assert code == 0
        assert data['xi_star'] == pytest.approx([0.0, 0.0], abs=1e-10)
        assert data['kahler_einstein'] is True

    def test_koiso_cao(self, capsys):
        code, data = run_json(capsys, ['xi', '--example', 'bl1cp2', '--tol', '1e-10'])
        assert code == 0
        a, b = data['xi_star']
        assert a == pytest.approx(-0.528, abs=1e-3)
        assert a == pytest.approx(b, abs=1e-12)
        assert data['residual'] <= 1e-10
        assert data['kahler_einstein'] is False
        assert data['k_optimality']['relations'] == [[1, -1]]

    def test_non_anticanonical_has_no_verdict(self, capsys):
        code, data = run_json(capsys, ['xi', '--example', 'interval', '--m-max', '10'])
        assert code == 0
        assert data['kahler_einstein'] is None

    def test_df_json(self, capsys):
        code, data = run_json(capsys, ['df', '--example', 'cp1', '--xi', '1', '--m-max', '40'])
        assert code == 0
        assert [row['m'] for row in data['table']] == [10, 20, 40]
        assert data['df_continuum'] == pytest.approx(-0.36787944117144233)

    def test_df_vector_dimension_is_checked(self, capsys):
        assert run(['df', '--example', 'cp2', '--xi', '1']) == 2

    def test_df_from_weight_table(self, tmp_path, capsys):
        levels = [{'m': m, 'weights': [{'u': [u, max(u, 0)], 'mult': 1} for u in range(-m, m + 1)]}
                  for m in range(1, 21)]
        path = tmp_path / 'table.json'
        path.write_text(json.dumps({'levels': levels}))
        code, data = run_json(capsys, ['df', '--input', str(path), '--m-max', '20'])
        assert code == 0
        assert data['df_continuum'] == pytest.approx(-0.25, abs=1e-3)


class TestConvergenceStudy:

    def test_cp1_slope(self):
        P = CatalogService().get_polytope('cp1')
        rows = [line.split(',') for line in convergence_study(P, [1.0], [1.0], [10, 20, 40, 80, 160]).splitlines()]
        assert rows[0] == ['m', 'df_discrete', 'df_continuum', 'gap', 'fitted_slope']
        gaps = [float(r[3]) for r in rows[1:]]
        assert all(b < a for a, b in zip(gaps, gaps[1:]))
        assert rows[1][4] == ''
        assert -1.3 <= float(rows[-1][4]) <= -0.7

    def test_symmetric_gaps_vanish(self, capsys):
        code, text = run_json(capsys, ['df', '--example', 'cp1', '--format', 'csv', '--m-max', '40'])
        assert code == 0
        for row in text.splitlines()[1:]:
            assert float(row.split(',')[3]) == pytest.approx(0.0, abs=1e-14)

    def test_single_level(self, capsys):
        code, text = run_json(capsys, ['df', '--example', 'cp1', '--xi', '1', '--format', 'csv', '--m-max', '10'])
        assert code == 0
        assert len(text.splitlines()) == 2
        assert text.splitlines()[1].endswith(',')


class TestVerification:

    def test_identity_suite_passes(self, capsys):
        code, data = run_json(capsys, ['verify-appendixb', '--seeds', '5'])
        assert code == 0
        assert data['passed']

    def test_injected_fault_fails(self, capsys):
        code, data = run_json(capsys, ['verify-appendixb', '--seeds', '2', '--inject-fault'])
        assert code == 1
        assert not data['passed']

    def test_moment_map_suite(self, capsys):
        code, data = run_json(capsys, ['verify-momentmap', '--instances', '2'])
        assert code == 0
        assert data['title'] == 'moment-map'


class TestGit:

    def test_polystable_point(self, rep_file, capsys):
        code, data = run_json(capsys, ['git', '--input', rep_file([[1], [-1]], [[2, 0], [1, 0]]),
                                       '--assert-polystable'])
        assert code == 0
        assert data['verdict'] == 'polystable'
        assert data['lemma']['holds'] is True

    def test_asserted_polystability_fails(self, rep_file, capsys):
        path = rep_file([[1], [-1]], [[1, 0], [0, 0]])
        assert run(['git', '--input', path, '--assert-polystable']) == 1
        capsys.readouterr()
        code, data = run_json(capsys, ['git', '--input', path])
        assert code == 0
        assert data['verdict'] == 'unstable'

    def test_random_instance(self, capsys):
        code, data = run_json(capsys, ['git', '--seed', '3'])
        assert code == 0
        assert data['verdict'] in ('polystable', 'semistable-not-polystable', 'unstable')


def test_reports_are_byte_identical(tmp_path, capsys):
    first, second = tmp_path / 'a.json', tmp_path / 'b.json'
    for path in (first, second):
        assert run(['git', '--seed', '11', '--output', str(path)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_flags_override_environment(monkeypatch):
    monkeypatch.setenv('WORKBENCH_M_MAX', '40')
    args = build_parser().parse_args(['xi', '--example', 'cp2'])
    assert RunConfig.from_args(args).m_max == 40
    args = build_parser().parse_args(['xi', '--example', 'cp2', '--m-max', '80'])
    assert RunConfig.from_args(args).m_max == 80


def test_config_rejects_bad_values():
    with pytest.raises(ValidationError):
        RunConfig(command='xi', m_max=0)
    with pytest.raises(ValidationError):
        RunConfig(command='draw')
