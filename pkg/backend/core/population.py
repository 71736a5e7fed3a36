"""
Population summaries, derived constants and microdata ingestion
"""
import json
import logging
import math
from dataclasses import dataclass, asdict, replace
from pathlib import Path
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from backend.core.errors import DataFileError, DegenerateAttributeError, DomainError

logger = logging.getLogger(__name__)

METADATA_KEYS = ('label', 'source', 'observed')


@dataclass(frozen=True)
class PopulationSummary:
    """
    Published or derived population-level parameters

    n is the (second-phase) sample size; n_prime is the first-phase size and
    is only present for two-phase designs.
    """
    N: int
    n: int
    y_mean: float
    P: float
    C_y: float
    C_p: float
    rho_pb: float
    n_prime: Optional[int] = None
    beta2_phi: Optional[float] = None

    def __post_init__(self):
        if not 0 < self.P < 1:
            raise DomainError(f"P must lie in (0, 1), got {self.P}")
        if self.n < 2:
            raise DomainError(f"Sample size n must be at least 2, got {self.n}")
        if self.n > self.N:
            raise DomainError(f"Sample size n={self.n} exceeds population size N={self.N}")
        if self.n_prime is not None and not self.n <= self.n_prime <= self.N:
            raise DomainError(
                f"First-phase size must satisfy n <= n_prime <= N, got "
                f"n={self.n}, n_prime={self.n_prime}, N={self.N}"
            )
        if self.y_mean == 0:
            raise DomainError("Population mean must be nonzero for coefficients of variation")
        if self.C_y < 0:
            raise DomainError(f"C_y must be non-negative, got {self.C_y}")
        if self.C_p <= 0:
            raise DomainError(f"C_p must be positive, got {self.C_p}")
        if abs(self.rho_pb) > 1:
            raise DomainError(f"|rho_pb| must not exceed 1, got {self.rho_pb}")

    @property
    def is_two_phase(self) -> bool:
        return self.n_prime is not None

    def with_design(self, n: int, n_prime: Optional[int] = None) -> 'PopulationSummary':
        """Same population, different sample sizes"""
        return replace(self, n=n, n_prime=n_prime)

    def to_dict(self) -> Dict:
        data = asdict(self)
        return {key: value for key, value in data.items() if value is not None}

    @classmethod
    def from_dict(cls, data: Dict) -> 'PopulationSummary':
        """
        Build a summary from its flat JSON form

        Args:
            data: Mapping with the PopulationSummary field names; metadata keys are ignored

        Returns:
            PopulationSummary
        """
        fields = {key: value for key, value in data.items() if key not in METADATA_KEYS}
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(fields) - known)
        if unknown:
            raise DomainError(f"Unknown population fields: {', '.join(unknown)}")
        missing = sorted(
            name for name in ('N', 'n', 'y_mean', 'P', 'C_y', 'C_p', 'rho_pb') if name not in fields
        )
        if missing:
            raise DomainError(f"Missing population fields: {', '.join(missing)}")

        for key in ('N', 'n', 'n_prime'):
            value = fields.get(key)
            if value is None:
                continue
            if isinstance(value, float) and not value.is_integer():
                raise DomainError(f"{key} must be an integer count, got {value}")
            fields[key] = int(value)
        for key in ('y_mean', 'P', 'C_y', 'C_p', 'rho_pb', 'beta2_phi'):
            if fields.get(key) is not None:
                fields[key] = float(fields[key])
        return cls(**fields)


@dataclass(frozen=True)
class DerivedConstants:
    """Constants every bias/MSE formula consumes"""
    f1: float
    K_p: float
    S_phi: float
    S_y: float
    f: float
    g: float
    var_ybar: float
    f2: Optional[float] = None
    f3: Optional[float] = None


@dataclass(frozen=True)
class MicrodataSummary:
    """Moments computed from (y, phi) records with divisor count - 1"""
    count: int
    mode: str
    y_mean: float
    P: float
    S_y2: float
    S_phi2: float
    S_yphi: float
    rho_pb: float

    @property
    def S_y(self) -> float:
        return math.sqrt(self.S_y2)

    @property
    def S_phi(self) -> float:
        return math.sqrt(self.S_phi2)

    @property
    def C_y(self) -> float:
        return self.S_y / self.y_mean

    @property
    def C_p(self) -> float:
        return self.S_phi / self.P

    def to_population_summary(self, n: int, n_prime: Optional[int] = None) -> PopulationSummary:
        """
        Turn population-mode moments into the summary the formulas consume

        Args:
            n: Sample size of the design to evaluate
            n_prime: Optional first-phase size

        Returns:
            PopulationSummary whose C_p matches S_phi / P exactly
        """
        return PopulationSummary(
            N=self.count,
            n=n,
            n_prime=n_prime,
            y_mean=self.y_mean,
            P=self.P,
            C_y=self.C_y,
            C_p=self.C_p,
            rho_pb=self.rho_pb,
            beta2_phi=binary_kurtosis(self.P),
        )


def binary_kurtosis(P: float) -> float:
    """Kurtosis coefficient of a 0/1 attribute with proportion P"""
    if not 0 < P < 1:
        raise DegenerateAttributeError(f"Kurtosis undefined for P={P}")
    return (1 - 3 * P + 3 * P * P) / (P * (1 - P))


def derive_constants(pop: PopulationSummary) -> DerivedConstants:
    """
    Compute f1, f2, f3, K_p, S_phi and Var(y_bar) for a population

    Args:
        pop: Validated population summary

    Returns:
        DerivedConstants; f2 and f3 are None for single-phase summaries
    """
    if pop.n == pop.N:
        logger.warning(f"Census design (n = N = {pop.N}): all designs degenerate")

    f1 = 1 / pop.n - 1 / pop.N
    f2 = f3 = None
    if pop.n_prime is not None:
        f2 = 1 / pop.n_prime - 1 / pop.N
        f3 = f1 - f2
        if pop.n_prime == pop.n:
            logger.warning("n_prime equals n: the first phase carries no extra information")

    S_y = pop.C_y * pop.y_mean
    f = pop.n / pop.N
    return DerivedConstants(
        f1=f1,
        f2=f2,
        f3=f3,
        K_p=pop.rho_pb * pop.C_y / pop.C_p,
        S_phi=math.sqrt(pop.N * pop.P * (1 - pop.P) / (pop.N - 1)),
        S_y=S_y,
        f=f,
        g=1 - f,
        var_ybar=f1 * S_y * S_y,
    )


def parameterization_gap(pop: PopulationSummary) -> float:
    """Relative gap between C_p * P and the binary-attribute S_phi"""
    derived = derive_constants(pop)
    return abs(pop.C_p * pop.P - derived.S_phi) / derived.S_phi


def check_parameterization(pop: PopulationSummary, tolerance: float = 1e-9) -> float:
    """Log a warning when the published C_p disagrees with the binary S_phi"""
    gap = parameterization_gap(pop)
    if gap > tolerance:
        logger.warning(
            f"C_p * P = {pop.C_p * pop.P:.6f} differs from binary S_phi by {gap:.2%}; "
            f"formulas use the published C_p"
        )
    return gap


def summarize_microdata(
    data: Union[Iterable[Tuple[float, int]], pd.DataFrame],
    mode: str = 'population',
) -> MicrodataSummary:
    """
    Compute S_y^2, S_phi^2, S_yphi and rho_pb from (y, phi) records

    Args:
        data: Sequence of (y, phi) pairs or a DataFrame with columns y, phi
        mode: 'population' or 'sample'; both use the count - 1 divisor

    Returns:
        MicrodataSummary
    """
    if mode not in ('population', 'sample'):
        raise DomainError(f"Unknown summary mode: {mode}")

    if isinstance(data, pd.DataFrame):
        y = data['y'].to_numpy(dtype=float)
        phi = data['phi'].to_numpy()
    else:
        records = list(data)
        y = np.array([record[0] for record in records], dtype=float)
        phi = np.array([record[1] for record in records])

    count = len(y)
    if count < 2:
        raise DomainError(f"At least 2 records are required, got {count}")
    if not np.all((phi == 0) | (phi == 1)):
        raise DomainError("phi values must be exactly 0 or 1")
    phi = phi.astype(float)

    # fsum keeps every moment independent of record order
    y_mean = math.fsum(y) / count
    P = math.fsum(phi) / count
    S_y2 = math.fsum((y - y_mean) ** 2) / (count - 1)
    S_phi2 = math.fsum((phi - P) ** 2) / (count - 1)
    S_yphi = (math.fsum(y * phi) - count * P * y_mean) / (count - 1)

    if S_phi2 == 0:
        raise DegenerateAttributeError(
            f"phi is constant ({'all one' if P == 1 else 'all zero'}); correlation undefined"
        )
    if S_y2 == 0:
        rho_pb = 0.0
        S_yphi = 0.0
    else:
        rho_pb = float(np.clip(S_yphi / math.sqrt(S_y2 * S_phi2), -1.0, 1.0))

    return MicrodataSummary(
        count=count,
        mode=mode,
        y_mean=y_mean,
        P=P,
        S_y2=S_y2,
        S_phi2=S_phi2,
        S_yphi=S_yphi,
        rho_pb=rho_pb,
    )


def load_microdata_csv(path: Union[str, Path]) -> pd.DataFrame:
    """
    Read a y,phi CSV file

    Args:
        path: CSV with header y,phi and one record per row

    Returns:
        DataFrame with float column y and integer column phi
    """
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataFileError(f"Cannot read microdata file {path}: {e}") from e

    if list(frame.columns) != ['y', 'phi']:
        raise DataFileError(f"Microdata header must be 'y,phi', got {','.join(frame.columns)}")
    if frame.isnull().values.any():
        raise DomainError(f"Microdata file {path} contains missing values")
    if not frame['phi'].isin([0, 1]).all():
        raise DomainError(f"phi values in {path} must be exactly 0 or 1")

    frame['y'] = frame['y'].astype(float)
    frame['phi'] = frame['phi'].astype(int)
    logger.info(f"Loaded {len(frame)} microdata records from {path}")
    return frame


def load_summary_json(path: Union[str, Path]) -> PopulationSummary:
    """Load a flat JSON population summary"""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise DataFileError(f"Cannot read population summary {path}: {e}") from e
    if not isinstance(data, dict):
        raise DataFileError(f"Population summary {path} must be a JSON object")
    return PopulationSummary.from_dict(data)


def dump_summary(pop: PopulationSummary, path: Union[str, Path], metadata: Optional[Dict] = None) -> Path:
    """
    Write a summary in the flat JSON form load_summary_json reads

    Args:
        pop: Population summary
        path: Destination file
        metadata: Optional label, source and observed entries written ahead of the fields

    Returns:
        The path written
    """
    data = {key: value for key, value in (metadata or {}).items() if key in METADATA_KEYS}
    data.update(pop.to_dict())
    path = Path(path)
    try:
        path.write_text(json.dumps(data, indent=2) + '\n', encoding='utf-8')
    except OSError as e:
        raise DataFileError(f"Cannot write population summary {path}: {e}") from e
    return path


def summary_metadata(path: Union[str, Path]) -> Dict:
    """Metadata keys (label, source, observed) of a summary file"""
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise DataFileError(f"Cannot read population summary {path}: {e}") from e
    return {key: data[key] for key in METADATA_KEYS if key in data}


def microdata_units(frame: pd.DataFrame) -> Sequence[Tuple[float, int]]:
    """Records of a microdata frame as (y, phi) tuples"""
    return list(zip(frame['y'].tolist(), frame['phi'].tolist()))
