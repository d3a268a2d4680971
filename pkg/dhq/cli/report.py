"""Deterministic text and JSON reports.

Every float goes through :func:`clean` once, so both formats carry the same values:
rounded to 12 decimals, with magnitudes below ``print_zero`` written as 0.
"""
import dataclasses
import json
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from dhq.config import Tolerances
from dhq.decoherence import DecoherenceReport
from dhq.enums import OutputFormat

DECIMALS = 12

# execution knobs that never change a result
UNECHOED = frozenset({'workers'})


def clean(value: float, print_zero: float) -> float:
    value = float(value)
    if abs(value) < print_zero:
        return 0.0
    return round(value, DECIMALS) + 0.0


@dataclass
class Report:
    command: str
    tolerances: Tolerances | None = None
    sections: dict[str, Any] = field(default_factory=dict)
    exit_code: int = 0

    @property
    def _zero(self) -> float:
        return self.tolerances.print_zero if self.tolerances else 1e-14

    def add(self, key: str, value: Any) -> 'Report':
        self.sections[key] = self._normalize(value)
        return self

    def _normalize(self, value: Any) -> Any:
        if isinstance(value, dict):
            return {str(k): self._normalize(v) for k, v in value.items()}
        if isinstance(value, (list, tuple)):
            return [self._normalize(v) for v in value]
        if isinstance(value, np.ndarray):
            return self._normalize(value.tolist())
        if isinstance(value, (bool, np.bool_)):
            return bool(value)
        if isinstance(value, complex):
            return [clean(value.real, self._zero), clean(value.imag, self._zero)]
        if isinstance(value, (float, np.floating)):
            return clean(value, self._zero)
        if isinstance(value, (int, np.integer)):
            return int(value)
        if value is None:
            return None
        return str(value)

    def as_dict(self) -> dict[str, Any]:
        document: dict[str, Any] = {'command': self.command}
        if self.tolerances is not None:
            document['tolerances'] = _echo(self.tolerances)
        document.update(self.sections)
        document['exit_code'] = self.exit_code
        return document

    def render(self, fmt: OutputFormat) -> str:
        if fmt is OutputFormat.JSON:
            return json.dumps(self.as_dict(), indent=2, ensure_ascii=False)
        lines = [f'command: {self.command}']
        if self.tolerances is not None:
            echo = ', '.join(f'{k}={v:g}' for k, v in _echo(self.tolerances).items())
            lines.append(f'tolerances: {echo}')
        for key, value in self.sections.items():
            _text(lines, key, value, 0)
        lines.append(f'exit_code: {self.exit_code}')
        return '\n'.join(lines)


def _echo(tolerances: Tolerances) -> dict[str, Any]:
    return {k: v for k, v in dataclasses.asdict(tolerances).items() if k not in UNECHOED}


def _scalar(value: Any) -> str:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return f'{value:.{DECIMALS}f}'
    if value is None:
        return '-'
    if isinstance(value, list):
        return '[' + ', '.join(_scalar(v) for v in value) + ']'
    return str(value)


def _text(lines: list[str], key: str, value: Any, depth: int):
    indent = '  ' * depth
    if isinstance(value, dict):
        lines.append(f'{indent}{key}:')
        for k, v in value.items():
            _text(lines, k, v, depth + 1)
    elif isinstance(value, list) and value and isinstance(value[0], list) and value[0] and isinstance(value[0][0], list):
        lines.append(f'{indent}{key}:')
        for row in value:
            lines.append(f'{indent}  {_scalar(row)}')
    else:
        lines.append(f'{indent}{key}: {_scalar(value)}')


def decoherence_section(report: DecoherenceReport, tolerances: Tolerances) -> dict[str, Any]:
    section: dict[str, Any] = {
        'decoherent': report.decoherent,
        'max_offdiag_normalized': report.max_offdiag_normalized,
        'tol_dec': report.tol_used,
        'history_count': len(report.keys),
    }
    if report.worst_pair is not None:
        i, j = report.worst_pair
        section['worst_pair'] = [report.labels[i], report.labels[j]]
    if len(report.keys) <= tolerances.gram_limit:
        section['gram'] = [[complex(x) for x in row] for row in report.gram]
    else:
        section['gram_summary'] = {'total': report.total, 'min_eigenvalue': report.min_eigenvalue}
    return section


def probability_table(labels: Sequence[str], values: Sequence[float]) -> dict[str, float]:
    return {label: float(value) for label, value in zip(labels, values)}
