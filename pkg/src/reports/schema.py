"""
Schema definitions for run reports.
"""

from typing import Optional, Dict, List, Any
from dataclasses import dataclass, asdict, field
from datetime import datetime, timezone

REPORT_VERSION = "1.0"


@dataclass
class CheckResult:
    """
    Outcome of one invariant check.

    Attributes:
        name: Check name (e.g. 'car.form_sum')
        passed: Whether the residual met the tolerance
        residual: Measured residual
        tolerance: Bound the residual was compared with
        comparison: 'max' (residual <= tolerance) or 'min' (residual >= tolerance)
        detail: Free-text note (e.g. the exception that ended the check)
    """
    name: str
    passed: bool
    residual: float
    tolerance: float
    comparison: str = 'max'
    detail: Optional[str] = None

    @classmethod
    def evaluate(cls, name: str, residual: float, tolerance: float,
                 comparison: str = 'max', detail: Optional[str] = None) -> 'CheckResult':
        """Compare a residual with its tolerance."""
        residual = float(residual)
        if comparison == 'max':
            passed = residual <= tolerance
        elif comparison == 'min':
            passed = residual >= tolerance
        else:
            raise ValueError(f"unknown comparison {comparison!r}")
        return cls(name, bool(passed), residual, float(tolerance), comparison, detail)

    def to_dict(self) -> Dict:
        """Convert to dictionary."""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict) -> 'CheckResult':
        """Create from dictionary."""
        return cls(**data)


@dataclass
class ProfileRow:
    """One row of profiles.csv."""
    name: str
    K_prime: int
    block_norm: float

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict) -> 'ProfileRow':
        return cls(str(data['name']), int(data['K_prime']), float(data['block_norm']))


@dataclass
class RunReport:
    """
    Full report of one pipeline run.

    Attributes:
        version: Report format version
        generated_at: ISO timestamp (the only field that changes between identical runs)
        subcommand: Pipeline subcommand
        scenario: Resolved scenario configuration
        checks: Invariant checks in execution order
        metrics: Named scalar results (slopes, leakages, bounds)
        profiles: Decay profile rows
        tables: Named row tables (for example sweep results)
    """
    version: str
    generated_at: str
    subcommand: str
    scenario: Dict[str, Any]
    checks: List[CheckResult] = field(default_factory=list)
    metrics: Dict[str, float] = field(default_factory=dict)
    profiles: List[ProfileRow] = field(default_factory=list)
    tables: Dict[str, List[Dict[str, Any]]] = field(default_factory=dict)

    @classmethod
    def new(cls, subcommand: str, scenario: Dict[str, Any]) -> 'RunReport':
        return cls(REPORT_VERSION, datetime.now(timezone.utc).isoformat(), subcommand, scenario)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def failed_checks(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]

    def add_check(self, name: str, residual: float, tolerance: float,
                  comparison: str = 'max', detail: Optional[str] = None) -> CheckResult:
        check = CheckResult.evaluate(name, residual, tolerance, comparison, detail)
        self.checks.append(check)
        return check

    def add_profile(self, name: str, rows: List[Dict]) -> None:
        self.profiles.extend(ProfileRow.from_dict({**row, 'name': name}) for row in rows)

    def to_dict(self) -> Dict:
        """Convert to dictionary for JSON serialization."""
        return {
            'version': self.version,
            'generated_at': self.generated_at,
            'subcommand': self.subcommand,
            'passed': self.passed,
            'scenario': self.scenario,
            'checks': [check.to_dict() for check in self.checks],
            'metrics': {name: float(value) for name, value in self.metrics.items()},
            'profiles': [row.to_dict() for row in self.profiles],
            'tables': self.tables,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'RunReport':
        """Create from dictionary."""
        return cls(
            version=data.get('version', REPORT_VERSION),
            generated_at=data.get('generated_at', datetime.now(timezone.utc).isoformat()),
            subcommand=data['subcommand'],
            scenario=data.get('scenario', {}),
            checks=[CheckResult.from_dict(c) for c in data.get('checks', [])],
            metrics=dict(data.get('metrics', {})),
            profiles=[ProfileRow.from_dict(r) for r in data.get('profiles', [])],
            tables=dict(data.get('tables', {})),
        )
