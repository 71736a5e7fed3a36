import pytest

from backend.core.datasets import load_table
from backend.core.errors import DataFileError, UnknownTableError
from backend.core.families import DISCREPANT, MATCH, UNPUBLISHED
from backend.core.tables import BELOW_QUOTA, FAIL, PASS, REPORTED, reproduce_table


def _rows(reproduction):
    return {row.label: row for row in reproduction.rows}


class TestWeightsTable:

    def test_population_one(self):
        reproduction = reproduce_table('3.1', 1)

        assert reproduction.verdict == PASS
        assert [row.label for row in reproduction.rows] == ['w0', 'w1', 'w2']
        assert [row.computed for row in reproduction.rows] == pytest.approx(
            [-3.955622, 5.355487, -0.399865], abs=1e-5
        )
        assert reproduction.summary['residual'] < 1e-10

    def test_population_two_is_reported_with_its_note(self):
        reproduction = reproduce_table('3.1', 2)

        assert reproduction.verdict == FAIL
        assert _rows(reproduction)['w0'].flag == DISCREPANT
        assert 'slope constraint' in reproduction.rows[0].note

    def test_weight_table_loads_without_rows(self):
        table = load_table('3.1')

        assert 'rows' not in table
        assert table['paper'][1] == pytest.approx([-3.95624, 5.356173, -0.39993])

    def test_weight_table_needs_printed_weights(self, tmp_path):
        (tmp_path / 'tables').mkdir()
        (tmp_path / 'tables' / 'table_3_1.yaml').write_text("id: '3.1'\nconstants: {}\n", encoding='utf-8')

        with pytest.raises(DataFileError, match='no paper'):
            load_table('3.1', tmp_path)

    def test_pre_table_needs_rows(self, tmp_path):
        (tmp_path / 'tables').mkdir()
        (tmp_path / 'tables' / 'table_3_2.yaml').write_text("id: '3.2'\npaper: {}\n", encoding='utf-8')

        with pytest.raises(DataFileError, match='no rows'):
            load_table('3.2', tmp_path)


class TestPreTables:

    def test_single_phase_population_one(self):
        reproduction = reproduce_table('3.2', 1)
        rows = _rows(reproduction)

        assert rows['t_P optimum'].computed == pytest.approx(241.988, abs=1e-3)
        assert rows['t_P optimum'].flag == MATCH
        assert rows['t_NGR'].flag == MATCH
        assert rows['t_NGP'].flag == MATCH
        assert rows['t_1(-1,0)'].flag == 'MATCH(0.5)'
        assert rows['t_1(1,0)'].flag == DISCREPANT
        assert rows['y_bar'].computed == pytest.approx(100)
        # four non-optimum rows miss, more than the two the protocol allows
        assert reproduction.summary == {'optimum_missed': False, 'other_misses': 4}
        assert reproduction.verdict == FAIL
        assert {row.label for row in reproduction.misses} == {
            't_1(1,0)', 't_2(1,1)', 't_2(0,1)', 't_2(0,-1)'
        }

    def test_single_phase_population_two(self):
        reproduction = reproduce_table('3.2', 2)
        rows = _rows(reproduction)

        assert rows['t_P optimum'].computed == pytest.approx(117.615, abs=1e-3)
        assert rows['t_P optimum'].flag == MATCH
        assert reproduction.verdict == PASS

    def test_two_phase_population_one(self):
        rows = _rows(reproduce_table('5.1', 1))

        assert rows['t_pd optimum'].computed == pytest.approx(112.327, abs=1e-3)
        assert rows['t_pd optimum'].flag == 'MATCH(0.5)'
        assert rows['t_NGR'].computed == pytest.approx(11.167, abs=1e-3)
        assert rows['t_NGR'].flag == 'MATCH(0.5)'

    def test_two_phase_population_two(self):
        rows = _rows(reproduce_table('5.1', 2))

        assert rows['t_pd optimum'].computed == pytest.approx(106.747, abs=1e-3)
        assert rows['t_pd optimum'].flag == 'MATCH(0.5)'

    def test_literal_forms_are_recorded(self):
        reproduction = reproduce_table('5.1', 1, paper_literal=True)

        assert reproduction.paper_literal is True
        assert reproduction.to_dict()['paper_literal'] is True


class TestAppendixTables:

    def test_appendix_a(self):
        reproduction = reproduce_table('A', 1)

        assert len(reproduction.rows) == 50
        assert _rows(reproduction)['t_1a1'].flag == MATCH
        assert reproduction.verdict == BELOW_QUOTA
        assert reproduction.misses
        assert reproduction.summary['quota'] == 0.9

    def test_appendix_c_has_no_quota(self):
        reproduction = reproduce_table('C', 1)

        assert reproduction.verdict == REPORTED
        assert _rows(reproduction)['t_21'].flag == DISCREPANT

    def test_appendix_b_is_reconciled_on_population_two(self):
        reproduction = reproduce_table('B', 2)
        rows = _rows(reproduction)

        assert rows['t_1c2'].flag == MATCH
        assert rows['t_1d3'].flag == MATCH
        assert rows['t_1c2'].paper == 110.12
        assert 0 < reproduction.summary['match_rates']['match'] < 0.8
        assert reproduction.verdict == BELOW_QUOTA

    def test_population_without_printed_cells(self):
        reproduction = reproduce_table('B', 1)

        assert reproduction.verdict == UNPUBLISHED
        assert all(row.flag == UNPUBLISHED for row in reproduction.rows)

    def test_lowercase_id(self):
        assert reproduce_table('c', 1).table_id == 'C'


def test_unknown_table():
    with pytest.raises(UnknownTableError):
        reproduce_table('4.1', 1)


def test_report_form():
    data = reproduce_table('3.2', 1).to_dict()

    assert data['table'] == '3.2'
    assert data['population'] == 1
    assert set(data['rows'][0]) == {'label', 'paper', 'computed', 'delta', 'flag', 'note'}
    assert data['misses'][0]['delta'] > 0.5
