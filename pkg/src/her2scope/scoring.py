"""Slide-level guideline scoring: FOV aggregation and rule-table evaluation.

The default table implements the breast guideline: 3+ when intense-complete
staining reaches 10% of tumor cells, 2+ when weak-complete plus
intense-incomplete reach 10%, 1+ when weak-incomplete reaches 10%, else 0.
Thresholds use >= semantics (a proportion of exactly 0.10 fires the rule).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .classify import CellClass, CellClassCounts, CLASS_ORDER
from .errors import ConfigurationError, IndeterminateScoreError


@dataclass(frozen=True)
class RuleRow:
    """One guideline row: the classes counted, the proportion needed, the score."""

    rule_id: str
    score: str  # "3+", "2+", "1+", "0"
    category: str  # positive | equivocal | negative
    classes: tuple[CellClass, ...]
    min_proportion: float

    def __post_init__(self):
        if not 0 < self.min_proportion <= 1:
            raise ConfigurationError("rule proportion threshold must be in (0, 1]")


@dataclass(frozen=True)
class ScoreRules:
    """Ordered rule rows plus the fallback score when no row fires."""

    table_id: str
    rows: tuple[RuleRow, ...]
    fallback_score: str = "0"
    fallback_category: str = "negative"


BREAST_RULES = ScoreRules(
    table_id="breast",
    rows=(
        RuleRow(
            rule_id="breast/3+",
            score="3+",
            category="positive",
            classes=(CellClass.INTENSE_COMPLETE,),
            min_proportion=0.10,
        ),
        RuleRow(
            rule_id="breast/2+",
            score="2+",
            category="equivocal",
            classes=(CellClass.WEAK_COMPLETE, CellClass.INTENSE_INCOMPLETE),
            min_proportion=0.10,
        ),
        RuleRow(
            rule_id="breast/1+",
            score="1+",
            category="negative",
            classes=(CellClass.WEAK_INCOMPLETE,),
            min_proportion=0.10,
        ),
    ),
)

# Variant without intense-incomplete feeding the 2+ bucket, kept so reports can
# surface when that placement decides the outcome.
BREAST_RULES_NO_II = ScoreRules(
    table_id="breast-no-intense-incomplete-2plus",
    rows=tuple(
        RuleRow(
            rule_id=r.rule_id,
            score=r.score,
            category=r.category,
            classes=tuple(c for c in r.classes if c != CellClass.INTENSE_INCOMPLETE)
            if r.score == "2+"
            else r.classes,
            min_proportion=r.min_proportion,
        )
        for r in BREAST_RULES.rows
    ),
)

RULE_TABLES: dict[str, ScoreRules] = {
    BREAST_RULES.table_id: BREAST_RULES,
    BREAST_RULES_NO_II.table_id: BREAST_RULES_NO_II,
}


def get_rule_table(table_id: str) -> ScoreRules:
    try:
        return RULE_TABLES[table_id]
    except KeyError:
        raise ConfigurationError(f"unknown rule table: {table_id!r}") from None


@dataclass(frozen=True)
class SlideCounts:
    """Summed class counts over the included FOVs with their proportions."""

    counts: CellClassCounts
    fov_ids: tuple[str, ...]

    @property
    def total(self) -> int:
        return self.counts.total

    def proportion(self, cls: CellClass) -> float:
        return self.counts.get(cls) / self.total

    def proportions(self) -> dict[str, float]:
        return {c.value: self.proportion(c) for c in CLASS_ORDER}


@dataclass(frozen=True)
class Her2Score:
    value: str  # 0 | 1+ | 2+ | 3+
    category: str  # negative | equivocal | positive
    triggering_proportion: float
    rule_id: str
    warnings: tuple[str, ...] = ()


def aggregate(fov_counts: dict[str, CellClassCounts], included: set[str] | None = None) -> SlideCounts:
    """Elementwise sum over the included FOVs.

    Raises IndeterminateScoreError when the selection is empty or holds no
    cells; the operator must add or include FOVs.
    """
    ids = sorted(fov_counts) if included is None else sorted(included)
    missing = [i for i in ids if i not in fov_counts]
    if missing:
        raise ConfigurationError(f"unknown FOV ids in aggregation: {missing}")
    if not ids:
        raise IndeterminateScoreError("no FOVs included")
    total = CellClassCounts()
    for fid in ids:
        total = total + fov_counts[fid]
    if total.total == 0:
        raise IndeterminateScoreError("included FOVs contain no detected cells")
    return SlideCounts(counts=total, fov_ids=tuple(ids))


def score(slide: SlideCounts, rules: ScoreRules) -> Her2Score:
    """First matching rule row in order wins; >= threshold semantics."""
    if not rules.rows:
        raise ConfigurationError(f"rule table {rules.table_id!r} has no rows")
    if slide.total <= 0:
        raise IndeterminateScoreError("cannot score zero cells")
    warnings: list[str] = []
    if rules.table_id == BREAST_RULES.table_id:
        alt = _evaluate(slide, BREAST_RULES_NO_II)
        base = _evaluate(slide, rules)
        if alt[0] != base[0]:
            warnings.append(
                "intense-incomplete cells in the 2+ bucket decided this score "
                f"({base[0]} with, {alt[0]} without)"
            )
    value, category, proportion, rule_id = _evaluate(slide, rules)
    return Her2Score(
        value=value,
        category=category,
        triggering_proportion=proportion,
        rule_id=rule_id,
        warnings=tuple(warnings),
    )


def _evaluate(slide: SlideCounts, rules: ScoreRules) -> tuple[str, str, float, str]:
    for row in rules.rows:
        p = sum(slide.proportion(c) for c in row.classes)
        if p >= row.min_proportion:
            return row.score, row.category, p, row.rule_id
    last = rules.rows[-1]
    p = sum(slide.proportion(c) for c in last.classes)
    return rules.fallback_score, rules.fallback_category, p, f"{rules.table_id}/{rules.fallback_score}"
