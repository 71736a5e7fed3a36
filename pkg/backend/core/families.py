"""
Named family members of the ratio and exponential classes
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from backend.core.datasets import load_table
from backend.core.errors import DomainError
from backend.core.estimators import DesignConstants, EstimatorKind, EstimatorSpec
from backend.core.moments import report
from backend.core.population import PopulationSummary, binary_kurtosis, derive_constants

logger = logging.getLogger(__name__)

MATCH = 'MATCH'
DISCREPANT = 'DISCREPANT'
UNPUBLISHED = 'UNPUBLISHED'

SYMBOL_NAMES = {
    '1': '1',
    'N': 'N',
    'n': 'n',
    'NP': 'NP',
    'P': 'P',
    'C_p': 'C_p',
    'beta2': 'β2(φ)',
    'rho': 'ρ_pb',
    'S_phi': 'S_φ',
    'f': 'f',
    'g': 'g',
    'K_p': 'K_p',
}


@dataclass(frozen=True)
class FamilyMember:
    """A named member with its constants and PREs"""
    name: str
    kind: EstimatorKind
    constants: DesignConstants
    symbols: Dict[str, str]
    description: str
    pre_computed: float
    pre_paper: Optional[float] = None
    note: str = ''

    @property
    def spec(self) -> EstimatorSpec:
        return EstimatorSpec(kind=self.kind, constants=self.constants)


@dataclass(frozen=True)
class ReconciliationEntry:
    name: str
    pre_computed: float
    pre_paper: Optional[float]
    delta: Optional[float]
    flag: str


@dataclass
class ReconciliationReport:
    """Per-member differences and match rates at the standard tolerances"""
    entries: List[ReconciliationEntry] = field(default_factory=list)
    match_rates: Dict[str, float] = field(default_factory=dict)
    published: int = 0

    @property
    def discrepant(self) -> List[ReconciliationEntry]:
        return [entry for entry in self.entries if entry.flag == DISCREPANT]

    def to_dict(self) -> Dict:
        return {
            'published': self.published,
            'match_rates': dict(self.match_rates),
            'entries': [entry.__dict__ for entry in self.entries],
        }


def classify(computed: float, paper: Optional[float], tolerance: float = 0.05,
             relative: float = 0.0) -> str:
    """
    Flag a computed value against its printed counterpart

    Args:
        computed: Full-precision computed value
        paper: Printed value, or None when nothing was printed
        tolerance: Absolute tolerance the row is held to
        relative: Relative tolerance; the looser of the two applies

    Returns:
        'MATCH' (tolerance <= 0.05), 'MATCH(<tolerance>)', 'DISCREPANT' or 'UNPUBLISHED'
    """
    if paper is None:
        return UNPUBLISHED
    delta = abs(computed - paper)
    if delta <= max(tolerance, relative * abs(paper)):
        return MATCH if tolerance <= 0.05 else f"MATCH({tolerance:g})"
    return DISCREPANT


def resolve_symbol(symbol, pop: PopulationSummary) -> float:
    """
    Value of a K-column symbol for a population

    Args:
        symbol: One of 1, N, n, NP, P, C_p, beta2, rho, S_phi, f, g, K_p or a number
        pop: Population summary

    Returns:
        The numeric constant
    """
    if isinstance(symbol, (int, float)) and not isinstance(symbol, bool):
        return float(symbol)

    derived = derive_constants(pop)
    values = {
        '1': 1.0,
        'N': float(pop.N),
        'n': float(pop.n),
        'NP': pop.N * pop.P,
        'P': pop.P,
        'C_p': pop.C_p,
        'beta2': pop.beta2_phi if pop.beta2_phi is not None else binary_kurtosis(pop.P),
        'rho': pop.rho_pb,
        'S_phi': derived.S_phi,
        'f': derived.f,
        'g': derived.g,
        'K_p': derived.K_p,
    }
    symbol = str(symbol)
    if symbol in values:
        return values[symbol]
    try:
        return float(symbol)
    except ValueError:
        raise DomainError(f"Unknown constant symbol: {symbol}")


def _scaled(coefficient: str, variable: str) -> str:
    name = SYMBOL_NAMES.get(coefficient, coefficient)
    if name == '1':
        return variable
    if name == 'NP' and variable == 'P':
        return 'NP²'
    return f"{name}{variable}"


def describe(kind: EstimatorKind, dc: DesignConstants, symbols: Dict[str, str]) -> str:
    """Render a member's formula from its constants"""
    if kind == EstimatorKind.S1:
        sign = '+' if dc.K2 == 1 else '-'
        k1 = symbols.get('K1', str(dc.K1))
        k3 = SYMBOL_NAMES.get(symbols.get('K3', ''), symbols.get('K3', f"{dc.K3:g}"))
        known = f"{_scaled(k1, 'P')} {sign} {k3}"
        observed = f"{_scaled(k1, 'p')} {sign} {k3}"
        if dc.alpha == 1:
            return f"ȳ[({known})/({observed})]"
        if dc.alpha == -1:
            return f"ȳ[({observed})/({known})]"
        return f"ȳ[({known})/({observed})]^{dc.alpha:g}"

    k4 = symbols.get('K4', str(dc.K4))
    k5 = SYMBOL_NAMES.get(symbols.get('K5', ''), symbols.get('K5', f"{dc.K5:g}"))
    k4_name = SYMBOL_NAMES.get(k4, k4)
    scale = '' if k4_name == '1' else k4_name
    power = '' if dc.beta == 1 else f"^{dc.beta:g}"
    if dc.lam == -1:
        exponent = f"{scale}(p - P)/({scale}(p + P) + 2{k5})"
    else:
        exponent = f"{dc.lam:g}·{scale}(P - p)/({scale}(P + p) + 2{k5})"
    return f"ȳ(2 - (p/P){power} exp[{exponent}])"


def _member(
    name: str,
    kind: EstimatorKind,
    pop: PopulationSummary,
    fixed: Dict,
    symbols: Dict[str, str],
    K2: int,
    pre_paper: Optional[float],
    note: str,
) -> FamilyMember:
    values = dict(fixed)
    for column, symbol in symbols.items():
        values[column] = resolve_symbol(symbol, pop)
    values['K2'] = K2
    constants = DesignConstants.from_dict(values)
    spec = EstimatorSpec(kind=kind, constants=constants)
    return FamilyMember(
        name=name,
        kind=kind,
        constants=constants,
        symbols=dict(symbols),
        description=describe(kind, constants, symbols),
        pre_computed=report(spec, pop).pre,
        pre_paper=pre_paper,
        note=note,
    )


def generate_members(
    table_id: str,
    pop: PopulationSummary,
    include_paper: bool = True,
    data_dir: Optional[Path] = None,
) -> List[FamilyMember]:
    """
    Generate every member of an appendix table

    Args:
        table_id: A, B or C
        pop: Population the members are evaluated on
        include_paper: Attach the printed PREs (only for the table's printed population)
        data_dir: Override for the data directory

    Returns:
        Members in printed row order, K2 = +1 before K2 = -1 within a row
    """
    table = load_table(table_id, data_dir)
    kind = EstimatorKind(table['kind'])
    fixed = table.get('fixed') or {}
    columns = table['columns']
    names = table['names']

    members = []
    for row in table['rows']:
        symbols = {column: str(row[column]) for column in columns}
        note = row.get('note', '')
        paper = row.get('paper')
        if 'single' in names:
            members.append(_member(
                f"{names['single']}{row['index']}", kind, pop, fixed, symbols, 1,
                paper if include_paper else None, note,
            ))
            continue
        for position, (prefix, K2) in enumerate(((names['plus'], 1), (names['minus'], -1))):
            members.append(_member(
                f"{prefix}{row['index']}", kind, pop, fixed, symbols, K2,
                paper[position] if include_paper else None, note,
            ))

    logger.debug(f"Generated {len(members)} members of appendix {table_id}")
    return members


def generate_appendix_a(pop: PopulationSummary, include_paper: bool = True,
                        data_dir: Optional[Path] = None) -> List[FamilyMember]:
    """Ratio-type members of the ratio class: alpha = 1, K2 = +1 and -1"""
    return generate_members('A', pop, include_paper, data_dir)


def generate_appendix_b(pop: PopulationSummary, include_paper: bool = True,
                        data_dir: Optional[Path] = None) -> List[FamilyMember]:
    """Product-type members of the ratio class: alpha = -1"""
    return generate_members('B', pop, include_paper, data_dir)


def generate_appendix_c(pop: PopulationSummary, include_paper: bool = True,
                        data_dir: Optional[Path] = None) -> List[FamilyMember]:
    """Members of the exponential class with beta = 1, lambda = -1"""
    return generate_members('C', pop, include_paper, data_dir)


def reconcile(members: List[FamilyMember], relative: float = 0.01) -> ReconciliationReport:
    """
    Compare computed and printed PREs

    Args:
        members: Generated members
        relative: Relative tolerance combined with the 0.05 absolute one for the flag

    Returns:
        ReconciliationReport sorted by decreasing |delta|, unpublished members last
    """
    entries = []
    for member in members:
        delta = None
        if member.pre_paper is not None:
            delta = abs(member.pre_computed - member.pre_paper)
        flag = classify(member.pre_computed, member.pre_paper, 0.05, relative)
        if flag == DISCREPANT:
            logger.debug(f"{member.name}: computed {member.pre_computed:.4f}, printed {member.pre_paper}")
        entries.append(ReconciliationEntry(
            name=member.name,
            pre_computed=member.pre_computed,
            pre_paper=member.pre_paper,
            delta=delta,
            flag=flag,
        ))

    entries.sort(key=lambda entry: (entry.delta is None, -(entry.delta or 0.0)))
    published = [entry for entry in entries if entry.delta is not None]
    rates = {}
    if published:
        count = len(published)
        rates = {
            '0.05': sum(entry.delta <= 0.05 for entry in published) / count,
            '0.5': sum(entry.delta <= 0.5 for entry in published) / count,
            '1%': sum(entry.delta <= 0.01 * abs(entry.pre_paper) for entry in published) / count,
            'match': sum(entry.flag == MATCH for entry in published) / count,
        }
    return ReconciliationReport(entries=entries, match_rates=rates, published=len(published))
