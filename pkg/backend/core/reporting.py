"""
Report renderers for command and API output
"""
import io
import json
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import pandas as pd

from backend.core.errors import DomainError

logger = logging.getLogger(__name__)

DEFAULT_DECIMALS = 2


@dataclass
class Report:
    """
    A rendered-once result

    ``payload`` is the full-precision document written as JSON; ``rows`` and
    ``columns`` are the tabular view used by the CSV and markdown renderers.
    """
    title: str
    payload: Dict[str, Any]
    columns: List[str] = field(default_factory=list)
    rows: List[Dict[str, Any]] = field(default_factory=list)


class BaseRenderer(ABC):
    """Base class for output renderers"""

    def __init__(self, decimals: int = DEFAULT_DECIMALS):
        self.decimals = decimals

    @property
    @abstractmethod
    def name(self) -> str:
        pass

    @abstractmethod
    def render(self, report: Report) -> str:
        pass

    def _display(self, value: Any) -> Any:
        if isinstance(value, bool) or value is None:
            return '' if value is None else value
        if isinstance(value, float):
            if math.isinf(value) or math.isnan(value):
                return str(value)
            return f"{value:.{self.decimals}f}"
        if isinstance(value, (list, tuple)):
            return ', '.join(str(self._display(item)) for item in value)
        return value

    def _frame(self, report: Report) -> pd.DataFrame:
        columns = report.columns or sorted({key for row in report.rows for key in row})
        records = [{column: self._display(row.get(column)) for column in columns} for row in report.rows]
        return pd.DataFrame.from_records(records, columns=columns)


class JsonRenderer(BaseRenderer):
    """Full-precision JSON; float repr keeps re-parsing bit-exact"""

    @property
    def name(self) -> str:
        return 'json'

    def render(self, report: Report) -> str:
        return json.dumps(report.payload, indent=2, ensure_ascii=False) + '\n'


class CsvRenderer(BaseRenderer):

    @property
    def name(self) -> str:
        return 'csv'

    def render(self, report: Report) -> str:
        buffer = io.StringIO()
        self._frame(report).to_csv(buffer, index=False)
        return buffer.getvalue()


class MarkdownRenderer(BaseRenderer):
    """Pipe table in row order, preceded by the report title"""

    @property
    def name(self) -> str:
        return 'markdown'

    def render(self, report: Report) -> str:
        frame = self._frame(report)
        lines = [f"## {report.title}", '']
        if len(frame.columns):
            # cells are already formatted for display
            lines.append(frame.to_markdown(index=False, tablefmt='github', disable_numparse=True))
        return '\n'.join(lines) + '\n'


# Registry of available renderers
_RENDERERS = {
    'json': JsonRenderer,
    'csv': CsvRenderer,
    'markdown': MarkdownRenderer,
}


def get_renderer(name: Optional[str] = None, decimals: Optional[int] = None) -> BaseRenderer:
    """
    Get a renderer instance by name

    Args:
        name: json, csv or markdown; the configured OUTPUT_FORMAT when omitted
        decimals: Display rounding; the configured DECIMALS when omitted

    Returns:
        Renderer instance
    """
    from django.conf import settings

    config = getattr(settings, 'PROPEST', {})
    name = (name or config.get('OUTPUT_FORMAT', 'json')).lower()
    if decimals is None:
        decimals = int(config.get('DECIMALS', DEFAULT_DECIMALS))

    renderer_class = _RENDERERS.get(name)
    if renderer_class is None:
        raise DomainError(f"Unknown output format: {name} (expected one of {', '.join(_RENDERERS)})")
    return renderer_class(decimals)


def list_renderers() -> list:
    return list(_RENDERERS.keys())
