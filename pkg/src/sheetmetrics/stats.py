"""Rank statistics for relating metric values to reader scores.

Provides medians, fractional ranking with tie averaging, Spearman rank
correlation (Pearson over tied ranks), two-sided significance from the
Student-t approximation, and the full score-by-metric correlation
matrix.  Everything is plain-float arithmetic on small vectors.
"""

from __future__ import annotations

import csv
import io
import math
import statistics
from dataclasses import dataclass

from .metrics import METRIC_KEYS, FormulaMetrics

MEASURE_KEYS = ("u1", "u2", "u3")

SCORE_MIN = 1
SCORE_MAX = 4


@dataclass(frozen=True)
class ScoreRecord:
    """One participant's three scores for one formula (each 1..4)."""

    formula_id: str
    participant_id: str
    u1: int
    u2: int
    u3: int

    def __post_init__(self) -> None:
        if not self.formula_id:
            raise ValueError("formula_id must be non-empty")
        if not self.participant_id:
            raise ValueError("participant_id must be non-empty")
        for key in MEASURE_KEYS:
            value = getattr(self, key)
            if not isinstance(value, int) or not SCORE_MIN <= value <= SCORE_MAX:
                raise ValueError(f"{key} must be an integer in {SCORE_MIN}..{SCORE_MAX}")


@dataclass(frozen=True)
class CorrelationCell:
    """One matrix entry: coefficient, sample size, p-value, and mark.

    ``mark`` is ``**`` for p <= 0.01, ``*`` for p <= 0.05, else ``''``;
    it is derived from the p-value alone.
    """

    rho: float
    n: int
    p_value: float
    mark: str


def median(values: list[float]) -> float:
    """Median with the average-of-middles convention for even length."""
    if not values:
        raise ValueError("median of an empty list")
    return statistics.median(values)


def rank_with_ties(values: list[float]) -> list[float]:
    """Fractional ranks (1-based); tied values share the average rank."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    start = 0
    while start < len(order):
        end = start
        while end + 1 < len(order) and values[order[end + 1]] == values[order[start]]:
            end += 1
        shared = (start + end) / 2 + 1
        for position in range(start, end + 1):
            ranks[order[position]] = shared
        start = end + 1
    return ranks


def spearman_rho(xs: list[float], ys: list[float]) -> float:
    """Spearman correlation: Pearson applied to the tie-averaged ranks."""
    if len(xs) != len(ys):
        raise ValueError(f"length mismatch: {len(xs)} vs {len(ys)}")
    if len(xs) < 3:
        raise ValueError("need at least 3 paired observations")
    if min(xs) == max(xs) or min(ys) == max(ys):
        raise ValueError("input is constant; correlation undefined")
    rx = rank_with_ties(xs)
    ry = rank_with_ties(ys)
    mean = (len(xs) + 1) / 2
    dx = [r - mean for r in rx]
    dy = [r - mean for r in ry]
    sxy = math.fsum(a * b for a, b in zip(dx, dy))
    sxx = math.fsum(a * a for a in dx)
    syy = math.fsum(b * b for b in dy)
    return sxy / math.sqrt(sxx * syy)


def significance(rho: float, n: int) -> tuple[float, str]:
    """Two-sided p-value and mark for a Spearman coefficient.

    Uses the Student-t approximation ``t = rho * sqrt((n-2)/(1-rho^2))``
    with ``n - 2`` degrees of freedom; ``|rho| = 1`` maps to p = 0.
    """
    if n < 4:
        raise ValueError("need at least 4 observations for significance")
    if abs(rho) > 1:
        raise ValueError(f"correlation {rho} outside [-1, 1]")
    if abs(rho) == 1:
        p_value = 0.0
    else:
        t = rho * math.sqrt((n - 2) / (1 - rho * rho))
        p_value = _student_t_two_sided(t, n - 2)
    if p_value <= 0.01:
        mark = "**"
    elif p_value <= 0.05:
        mark = "*"
    else:
        mark = ""
    return p_value, mark


def _student_t_two_sided(t: float, df: int) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    x = df / (df + t * t)
    return _regularized_incomplete_beta(df / 2, 0.5, x)


def _regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) by the continued-fraction expansion (abs error < 1e-12)."""
    if x <= 0:
        return 0.0
    if x >= 1:
        return 1.0
    log_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1) / (a + b + 2):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1 - front * _beta_continued_fraction(b, a, 1 - x) / b


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    """Lentz evaluation of the incomplete-beta continued fraction."""
    tiny = 1e-300
    eps = 1e-15
    qab, qap, qam = a + b, a + 1, a - 1
    c = 1.0
    d = 1 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1 / d
    result = d
    for m in range(1, 300):
        m2 = 2 * m
        numerator = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1 + numerator * d
        if abs(d) < tiny:
            d = tiny
        c = 1 + numerator / c
        if abs(c) < tiny:
            c = tiny
        d = 1 / d
        result *= d * c
        numerator = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1 + numerator * d
        if abs(d) < tiny:
            d = tiny
        c = 1 + numerator / c
        if abs(c) < tiny:
            c = tiny
        d = 1 / d
        delta = d * c
        result *= delta
        if abs(delta - 1) < eps:
            return result
    raise ArithmeticError("incomplete beta did not converge")


def correlation_matrix(
    metrics_table: dict[str, FormulaMetrics],
    score_medians: dict[str, tuple[float, float, float]],
) -> dict[str, dict[str, CorrelationCell]]:
    """Spearman correlation of each score measure against each metric.

    Both inputs are keyed by formula id and must cover the same ids;
    rows are the three score measures, columns the nine metrics.
    """
    metric_ids = set(metrics_table)
    median_ids = set(score_medians)
    if metric_ids != median_ids:
        missing = sorted(metric_ids ^ median_ids)
        raise ValueError(f"formula ids differ between inputs: {missing}")
    ids = sorted(metrics_table)
    n = len(ids)
    if n < 4:
        raise ValueError("need at least 4 formulas to correlate")
    matrix: dict[str, dict[str, CorrelationCell]] = {}
    for measure_index, measure in enumerate(MEASURE_KEYS):
        row: dict[str, CorrelationCell] = {}
        scores = [float(score_medians[formula_id][measure_index]) for formula_id in ids]
        for metric in METRIC_KEYS:
            values = [float(metrics_table[formula_id].value(metric)) for formula_id in ids]
            rho = spearman_rho(scores, values)
            p_value, mark = significance(rho, n)
            row[metric] = CorrelationCell(rho=rho, n=n, p_value=p_value, mark=mark)
        matrix[measure] = row
    return matrix


SCORE_HEADER = ["formula_id", "participant_id", "u1", "u2", "u3"]


def load_scores(text: str) -> list[ScoreRecord]:
    """Parse a score CSV; errors carry the 1-based row number."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("score file is empty") from None
    if header != SCORE_HEADER:
        raise ValueError(f"row 1: expected header {','.join(SCORE_HEADER)}")
    records: list[ScoreRecord] = []
    seen: set[tuple[str, str]] = set()
    for row_number, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(SCORE_HEADER):
            raise ValueError(f"row {row_number}: expected {len(SCORE_HEADER)} fields")
        formula_id, participant_id = row[0], row[1]
        try:
            scores = [_score_int(field) for field in row[2:]]
            record = ScoreRecord(formula_id, participant_id, *scores)
        except ValueError as exc:
            raise ValueError(f"row {row_number}: {exc}") from None
        key = (formula_id, participant_id)
        if key in seen:
            raise ValueError(
                f"row {row_number}: duplicate scores for {formula_id}/{participant_id}"
            )
        seen.add(key)
        records.append(record)
    if not records:
        raise ValueError("score file has a header but no rows")
    return records


def _score_int(field: str) -> int:
    try:
        return int(field)
    except ValueError:
        raise ValueError(f"score {field!r} is not an integer") from None


def medians_by_formula(records: list[ScoreRecord]) -> dict[str, tuple[float, float, float]]:
    """Per-formula median of each score measure across participants."""
    grouped: dict[str, list[ScoreRecord]] = {}
    for record in records:
        grouped.setdefault(record.formula_id, []).append(record)
    return {
        formula_id: (
            median([r.u1 for r in group]),
            median([r.u2 for r in group]),
            median([r.u3 for r in group]),
        )
        for formula_id, group in grouped.items()
    }
