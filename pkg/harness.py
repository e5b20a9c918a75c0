"""
Convergence studies: solve on a ladder of meshes, record E_inf(N) and
rate(N) = log2(E_inf(N/2) / E_inf(N)), and compare against published tables.
"""

import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Union

import pandas as pd
from tqdm import tqdm

from errors import InvalidArgumentError, QuadratureError
from fracdiff import example3_problem, solve_fracdiff
from stencil import SchemeOrder
from volterra import example_problem, step_solve

logger = logging.getLogger(__name__)

DEFAULT_LADDER = (10, 20, 40, 80, 160)
BLOWUP_LADDER = (10, 20, 40, 80, 160, 320, 640, 1280, 2560, 5120, 10240)
CSV_COLUMNS = ['alpha', 'N', 'E_inf', 'rate']


def rate(e_coarse: Optional[float], e_fine: Optional[float]) -> Optional[float]:
    """log2(e_coarse / e_fine); None when either error is missing, nonpositive or non-finite."""
    if e_coarse is None or e_fine is None:
        return None
    if not (math.isfinite(e_coarse) and math.isfinite(e_fine)) or e_coarse <= 0 or e_fine <= 0:
        return None
    return math.log2(e_coarse / e_fine)


@dataclass(frozen=True)
class ConvergenceRow:
    N: int
    E_inf: Optional[float]
    rate: Optional[float] = None
    error: Optional[str] = None


@dataclass
class ConvergenceReport:
    experiment: str
    kernel: str
    alpha: float
    gamma: str
    rows: List[ConvergenceRow] = field(default_factory=list)
    metadata: Dict = field(default_factory=dict)

    def row(self, N: int) -> Optional[ConvergenceRow]:
        return next((r for r in self.rows if r.N == N), None)

    def final_row(self) -> Optional[ConvergenceRow]:
        return self.rows[-1] if self.rows else None

    def to_dict(self) -> dict:
        data = asdict(self)
        data['rows'] = [
            {k: v for k, v in asdict(r).items() if not (k == 'error' and v is None)}
            for r in self.rows
        ]
        return data

    def to_json(self, path: Optional[Union[str, Path]] = None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text, encoding='utf-8')
        return text

    @classmethod
    def from_dict(cls, data: dict) -> "ConvergenceReport":
        rows = [ConvergenceRow(int(r['N']), r.get('E_inf'), r.get('rate'), r.get('error'))
                for r in data.get('rows', [])]
        return cls(
            experiment=data['experiment'],
            kernel=data['kernel'],
            alpha=data['alpha'],
            gamma=str(data['gamma']),
            rows=rows,
            metadata=data.get('metadata', {}),
        )

    @classmethod
    def from_json(cls, source: Union[str, Path]) -> "ConvergenceReport":
        """Parse a report from a JSON string or a path to a JSON file."""
        text = str(source)
        if not text.lstrip().startswith('{'):
            text = Path(source).read_text(encoding='utf-8')
        return cls.from_dict(json.loads(text))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [{'alpha': self.alpha, 'N': r.N, 'E_inf': r.E_inf, 'rate': r.rate} for r in self.rows],
            columns=CSV_COLUMNS,
        )

    def to_csv(self, path: Union[str, Path]) -> None:
        self.to_frame().to_csv(path, index=False)

    @classmethod
    def from_csv(cls, path: Union[str, Path], experiment: str = '', kernel: str = '',
                 gamma: str = '') -> "ConvergenceReport":
        reports = reports_from_csv(path, experiment, kernel, gamma)
        if len(reports) != 1:
            raise InvalidArgumentError(f"{path} holds {len(reports)} alpha values; use reports_from_csv")
        return reports[0]


def _optional(value) -> Optional[float]:
    return None if value is None or (isinstance(value, float) and math.isnan(value)) else float(value)


def reports_to_csv(reports: Sequence[ConvergenceReport], path: Union[str, Path]) -> None:
    frame = pd.concat([r.to_frame() for r in reports], ignore_index=True)
    frame.to_csv(path, index=False)


def reports_from_csv(path: Union[str, Path], experiment: str = '', kernel: str = '',
                     gamma: str = '') -> List[ConvergenceReport]:
    frame = pd.read_csv(path, float_precision='round_trip')
    missing = set(CSV_COLUMNS) - set(frame.columns)
    if missing:
        raise InvalidArgumentError(f"CSV {path} is missing columns {sorted(missing)}")

    reports = []
    for alpha, group in frame.groupby('alpha', sort=False):
        rows = [ConvergenceRow(int(r.N), _optional(r.E_inf), _optional(r.rate))
                for r in group.itertuples(index=False)]
        reports.append(ConvergenceReport(experiment, kernel, float(alpha), gamma, rows))
    return reports


@dataclass
class ExperimentSpec:
    """Declarative description of one published table, loaded from experiments/*.json."""
    name: str
    problem: str = 'volterra'
    example: Union[int, str] = 1
    order: Union[int, str] = 3
    alphas: List[float] = field(default_factory=list)
    ladder: List[int] = field(default_factory=lambda: list(DEFAULT_LADDER))
    T: float = 1.0
    M: int = 25
    rho_mode: str = 'alpha'
    source_quadrature: str = 'exact'
    kernel: Optional[str] = None
    exact_power: Optional[float] = None
    golden: Dict[str, List[dict]] = field(default_factory=dict)
    rate_tol: Optional[float] = None
    error_factor: float = 2.0
    check_errors: bool = True
    reference_only: bool = False
    long: bool = False
    description: str = ''

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise InvalidArgumentError(f"Unknown experiment fields: {sorted(unknown)}")
        spec = cls(**data)
        if spec.problem not in ('volterra', 'fracdiff'):
            raise InvalidArgumentError(f"Unknown problem type {spec.problem!r}")
        if not spec.alphas:
            raise InvalidArgumentError(f"Experiment {spec.name} lists no alpha values")
        return spec

    def scheme_order(self, alpha: float) -> SchemeOrder:
        return SchemeOrder.parse(self.order, alpha=alpha)

    def golden_rows(self, alpha: float) -> List[dict]:
        for key, rows in self.golden.items():
            if math.isclose(float(key), alpha):
                return rows
        return []


def load_spec(path: Union[str, Path]) -> ExperimentSpec:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Experiment spec not found: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        return ExperimentSpec.from_dict(json.load(f))


def _solve_error(spec: ExperimentSpec, alpha: float, N: int) -> float:
    order = spec.scheme_order(alpha)
    if spec.problem == 'fracdiff':
        problem = example3_problem(alpha, spec.rho_mode, spec.M, N, spec.T, order,
                                   source_quadrature=spec.source_quadrature)
        return solve_fracdiff(problem).error
    problem = example_problem(spec.example, alpha, order, N, spec.T,
                              kernel=spec.kernel, exact_power=spec.exact_power)
    return step_solve(problem).error


def _kernel_name(spec: ExperimentSpec) -> str:
    if spec.problem == 'fracdiff':
        return 'caputo'
    if str(spec.example) == 'custom':
        return spec.kernel or 'custom'
    return {1: 'power', 2: 'power-singular'}.get(int(spec.example), 'custom')


def _exact_name(spec: ExperimentSpec) -> str:
    if spec.problem == 'fracdiff':
        return 'sin(pi x) t^alpha' if spec.rho_mode == 'alpha' else 'sin(pi x) t^(1-alpha)'
    if str(spec.example) == 'custom':
        return f"t^{spec.exact_power:g}"
    return {1: 't^3', 2: 't^6'}.get(int(spec.example), '')


def run_study(spec: ExperimentSpec, alpha: float, ladder: Optional[Sequence[int]] = None,
              error_fn: Optional[Callable[[int], float]] = None,
              progress: bool = True) -> ConvergenceReport:
    """
    Solve at every N of the ladder and fill errors and rates.

    Solver failures are recorded on their row and the remaining rows still run.
    Rates are only defined where N/2 is also on the ladder.

    Args:
        spec: Experiment description
        alpha: Kernel/scheme parameter for this study
        ladder: Overrides spec.ladder
        error_fn: Maps N to E_inf; defaults to solving the spec's problem
        progress: Show a tqdm progress bar
    """
    ladder = list(ladder or spec.ladder)
    error_fn = error_fn or (lambda N: _solve_error(spec, alpha, N))
    started = time.perf_counter()

    errors: Dict[int, Optional[float]] = {}
    failures: Dict[int, str] = {}
    for N in tqdm(ladder, desc=f"{spec.name} alpha={alpha:g}", disable=not progress, leave=False):
        try:
            errors[N] = float(error_fn(N))
        except QuadratureError as e:
            logger.error(f"❌ {spec.name} alpha={alpha:g} N={N}: {e}")
            errors[N] = None
            failures[N] = str(e)

    rows = []
    for N in ladder:
        coarse = errors.get(N // 2) if N % 2 == 0 else None
        rows.append(ConvergenceRow(N, errors[N], rate(coarse, errors[N]), failures.get(N)))

    report = ConvergenceReport(
        experiment=spec.name,
        kernel=_kernel_name(spec),
        alpha=float(alpha),
        gamma=spec.scheme_order(alpha).label,
        rows=rows,
        metadata={
            'T': spec.T,
            'exact': _exact_name(spec),
            'wall_time': round(time.perf_counter() - started, 3),
        },
    )
    if spec.problem == 'fracdiff':
        report.metadata['M'] = spec.M
        report.metadata['source_quadrature'] = spec.source_quadrature

    final = report.final_row()
    if final and final.E_inf is not None:
        logger.info(f"✅ {spec.name} alpha={alpha:g}: N={final.N}, E_inf={final.E_inf:.4e}, rate={final.rate}")
    return report


def run_experiment(spec: ExperimentSpec, long: bool = False,
                   progress: bool = True) -> List[ConvergenceReport]:
    if spec.long and not long:
        logger.warning(f"Experiment {spec.name} is a long run; pass --long to enable it")
        return []
    return [run_study(spec, alpha, progress=progress) for alpha in spec.alphas]


def blowup_study(ladder: Sequence[int] = BLOWUP_LADDER, progress: bool = True) -> ConvergenceReport:
    """Example 2 with the fourth-order scheme at alpha = 0.25: transient blowup, then recovery."""
    spec = ExperimentSpec(
        name='example2_blowup', problem='volterra', example=2, order=4,
        alphas=[0.25], ladder=list(ladder), long=True,
    )
    return run_study(spec, 0.25, progress=progress)


def check_golden(report: ConvergenceReport, golden: Sequence[dict],
                 rate_tol: Optional[float] = None, error_factor: float = 2.0,
                 check_errors: bool = True) -> List[str]:
    """
    Compare a report against golden rows.

    Golden rows carry N plus any of rate, rate_min, rate_max and E_inf. Rates default to
    +-0.05 for N >= 80 and +-0.15 below; errors must agree within error_factor.

    Returns:
        Human-readable mismatch descriptions; empty when everything matches
    """
    mismatches = []
    for expected in golden:
        N = int(expected['N'])
        row = report.row(N)
        label = f"{report.experiment} alpha={report.alpha:g} N={N}"
        if row is None:
            mismatches.append(f"{label}: row missing")
            continue
        if row.error:
            mismatches.append(f"{label}: solver failed ({row.error})")
            continue

        if 'rate' in expected:
            tol = rate_tol if rate_tol is not None else (0.05 if N >= 80 else 0.15)
            if row.rate is None or abs(row.rate - expected['rate']) > tol:
                mismatches.append(f"{label}: rate {row.rate} vs {expected['rate']} (tol {tol})")
        if 'rate_min' in expected and (row.rate is None or row.rate < expected['rate_min']):
            mismatches.append(f"{label}: rate {row.rate} below {expected['rate_min']}")
        if 'rate_max' in expected and (row.rate is None or row.rate > expected['rate_max']):
            mismatches.append(f"{label}: rate {row.rate} above {expected['rate_max']}")
        if check_errors and 'E_inf' in expected:
            ratio = row.E_inf / expected['E_inf'] if row.E_inf else 0.0
            if not 1.0 / error_factor <= ratio <= error_factor:
                mismatches.append(f"{label}: E_inf {row.E_inf} vs {expected['E_inf']} (factor {error_factor})")

    for message in mismatches:
        logger.warning(message)
    return mismatches


def check_experiment(spec: ExperimentSpec, reports: Sequence[ConvergenceReport]) -> List[str]:
    """Golden check for every report of an experiment; reference-only tables never fail."""
    mismatches = []
    for report in reports:
        found = check_golden(report, spec.golden_rows(report.alpha), spec.rate_tol,
                             spec.error_factor, spec.check_errors)
        if spec.reference_only and found:
            logger.info(f"{spec.name} is reference-only; {len(found)} differences not enforced")
            continue
        mismatches.extend(found)
    return mismatches


def summarize(reports: Sequence[ConvergenceReport]) -> pd.DataFrame:
    frames = [r.to_frame() for r in reports]
    if not frames:
        return pd.DataFrame(columns=CSV_COLUMNS)
    return pd.concat(frames, ignore_index=True)

