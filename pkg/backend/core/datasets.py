"""
Access to the shipped population summaries and table definitions
"""
import logging
from pathlib import Path
from typing import Dict, Optional

import yaml

from backend.core.errors import DataFileError, DomainError, UnknownTableError
from backend.core.population import PopulationSummary, load_summary_json

logger = logging.getLogger(__name__)

TABLE_FILES = {
    '3.1': 'table_3_1.yaml',
    '3.2': 'table_3_2.yaml',
    '5.1': 'table_5_1.yaml',
    'A': 'appendix_a.yaml',
    'B': 'appendix_b.yaml',
    'C': 'appendix_c.yaml',
}

# Tables whose rows are computed on the two-phase populations
TWO_PHASE_TABLES = ('5.1',)

# Tables holding one weight vector per population instead of rows
WEIGHT_TABLES = ('3.1',)


def get_data_dir() -> Path:
    """Data directory from Django settings, falling back to the repository copy"""
    try:
        from django.conf import settings
        return Path(settings.PROPEST['DATA_DIR'])
    except Exception:
        return Path(__file__).resolve().parent.parent / 'data'


def population_path(pop_id: int, two_phase: bool = False, data_dir: Optional[Path] = None) -> Path:
    if pop_id not in (1, 2):
        raise DomainError(f"Unknown population id: {pop_id} (expected 1 or 2)")
    prefix = 'two_phase' if two_phase else 'single_phase'
    return Path(data_dir or get_data_dir()) / 'populations' / f"{prefix}_{pop_id}.json"


def builtin_population(pop_id: int, two_phase: bool = False, data_dir: Optional[Path] = None) -> PopulationSummary:
    """
    Load one of the shipped population summaries

    Args:
        pop_id: 1 or 2
        two_phase: Load the two-phase data statistics instead of the single-phase ones
        data_dir: Override for the data directory

    Returns:
        PopulationSummary
    """
    path = population_path(pop_id, two_phase, data_dir)
    logger.debug(f"Loading builtin population from {path}")
    return load_summary_json(path)


def load_table(table_id: str, data_dir: Optional[Path] = None) -> Dict:
    """
    Load the YAML definition of a published table

    Args:
        table_id: One of 3.1, 3.2, 5.1, A, B, C

    Returns:
        Parsed table definition
    """
    table_id = str(table_id).upper()
    filename = TABLE_FILES.get(table_id)
    if filename is None:
        raise UnknownTableError(table_id)

    path = Path(data_dir or get_data_dir()) / 'tables' / filename
    try:
        with open(path, 'r', encoding='utf-8') as f:
            table = yaml.safe_load(f)
    except (OSError, yaml.YAMLError) as e:
        raise DataFileError(f"Cannot read table definition {path}: {e}") from e

    required = 'paper' if table_id in WEIGHT_TABLES else 'rows'
    if not isinstance(table, dict) or required not in table:
        raise DataFileError(f"Table definition {path} has no {required}")
    return table
