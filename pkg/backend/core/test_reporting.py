import json
import math

import pytest

from backend.core.errors import DomainError
from backend.core.reporting import (
    CsvRenderer,
    JsonRenderer,
    MarkdownRenderer,
    Report,
    get_renderer,
    list_renderers,
)


@pytest.fixture
def table_report():
    return Report(
        title='PRE of different estimators',
        payload={'rows': [{'label': 't_NGR', 'computed': 11.637385, 'paper': 11.63}], 'residual': 0.1 + 0.2},
        columns=['label', 'paper', 'computed'],
        rows=[
            {'label': 't_NGR', 'paper': 11.63, 'computed': 11.637385},
            {'label': 't_21', 'paper': None, 'computed': math.inf},
        ],
    )


def _cells(line):
    return [cell.strip() for cell in line.strip().strip('|').split('|')]


def test_json_is_full_precision(table_report):
    text = JsonRenderer().render(table_report)

    assert json.loads(text) == table_report.payload
    assert json.loads(text)['residual'] == 0.1 + 0.2


def test_csv_rounds_for_display_only(table_report):
    text = CsvRenderer(decimals=2).render(table_report)

    assert text.splitlines() == ['label,paper,computed', 't_NGR,11.63,11.64', 't_21,,inf']
    assert table_report.rows[0]['computed'] == 11.637385


def test_markdown_table(table_report):
    lines = MarkdownRenderer(decimals=3).render(table_report).splitlines()

    assert lines[0] == '## PRE of different estimators'
    assert _cells(lines[2]) == ['label', 'paper', 'computed']
    assert set(lines[3]) <= set('|-:')
    assert _cells(lines[4]) == ['t_NGR', '11.630', '11.637']
    assert _cells(lines[5]) == ['t_21', '', 'inf']


def test_columns_default_to_row_keys():
    report = Report(title='weights', payload={}, rows=[{'w1': 0.5, 'w0': 0.25}])

    assert CsvRenderer().render(report).splitlines()[0] == 'w0,w1'


def test_renderer_registry():
    assert list_renderers() == ['json', 'csv', 'markdown']
    assert get_renderer('CSV', 4).decimals == 4


def test_configured_defaults(settings):
    settings.PROPEST = {**settings.PROPEST, 'OUTPUT_FORMAT': 'markdown', 'DECIMALS': 5}

    renderer = get_renderer()

    assert renderer.name == 'markdown'
    assert renderer.decimals == 5


def test_unknown_format():
    with pytest.raises(DomainError, match='xml'):
        get_renderer('xml')
