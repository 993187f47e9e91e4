"""Similar-pair enhancement of grammar graphs.

A similar-pair group ties low-frequency or brand-new target words to
high-frequency predictor words that behave alike. Every arc carrying a
predictor word donates a candidate arc for each target word: same source
and destination states, weight

    w_target = w_predictor + ln(f_target / (f_target + f_predictor)) + theta

where the frequencies come from training-data counts and theta tunes how
aggressive the boost is. For new words there is no frequency, so the log
term is dropped and the candidate is w_predictor + theta. Candidates land
as parallel arcs when the target has no arc in that slot, and otherwise
raise the existing arc's weight to the maximum of old and new. Epsilon
(back-off) arcs carry no word and never participate.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from gboost.errors import FormatError, InvariantError
from gboost.fst import Arc, FstDiff, SymbolTable, Wfst

log = logging.getLogger(__name__)


@dataclass
class SimilarPairGroup:
    """One enhancement unit: predictor words lending weight to target words."""

    predictors: list[str]
    targets: list[str]
    frequencies: dict[str, int] = field(default_factory=dict)
    new_words: frozenset[str] = frozenset()

    def is_new(self, target: str) -> bool:
        return target in self.new_words

    def validate(self, symbols: SymbolTable) -> None:
        if not self.predictors:
            raise InvariantError("similar-pair group has no predictor words")
        if not self.targets:
            raise InvariantError("similar-pair group has no target words")
        for word in self.predictors:
            if word not in symbols:
                raise InvariantError(f"predictor word not in vocabulary: {word!r}")
            freq = self.frequencies.get(word)
            if freq is None or freq <= 0:
                raise InvariantError(f"predictor {word!r} needs a positive frequency")
        for word in self.targets:
            if self.is_new(word):
                # Already present is fine: an earlier run inserted it.
                continue
            if word not in symbols:
                raise InvariantError(
                    f"target {word!r} is not in the vocabulary; list it under new_words "
                    "if it should be added")
            freq = self.frequencies.get(word)
            if freq is None or freq <= 0:
                raise InvariantError(
                    f"existing target {word!r} has no positive frequency; declare it "
                    "new or give it a pseudo-count")


@dataclass
class EnhanceConfig:
    theta: float
    max_predictors: int
    groups: list[SimilarPairGroup]

    def validate(self, symbols: SymbolTable) -> None:
        if not math.isfinite(self.theta):
            raise InvariantError(f"theta must be finite, got {self.theta}")
        if self.max_predictors < 1:
            raise InvariantError(f"max_predictors must be >= 1, got {self.max_predictors}")
        for group in self.groups:
            group.validate(symbols)
        # Predictor and target roles must not mix, even across groups: a
        # predictor that is itself enhanced would donate its new arcs on the
        # next run, so repeated runs would keep growing the graph.
        predictors = {w for g in self.groups for w in g.predictors}
        targets = {w for g in self.groups for w in g.targets}
        both = predictors & targets
        if both:
            raise InvariantError(
                "words cannot be both predictor and target in one config: "
                + ", ".join(sorted(both)))


def load_pairs_config(text: str) -> EnhanceConfig:
    """Parse the similar-pairs JSON config."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"pairs config is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise FormatError("pairs config must be a JSON object")
    try:
        theta = float(data["theta"])
        max_predictors = int(data["max_predictors"])
        raw_groups = data["groups"]
    except KeyError as exc:
        raise FormatError(f"pairs config is missing key {exc}") from None
    except (TypeError, ValueError) as exc:
        raise FormatError(f"pairs config has a bad value: {exc}") from None
    if not isinstance(raw_groups, list):
        raise FormatError("pairs config 'groups' must be a list")
    groups = []
    for i, raw in enumerate(raw_groups):
        if not isinstance(raw, dict):
            raise FormatError(f"group {i} must be a JSON object")
        try:
            predictors = [str(w) for w in raw["predictors"]]
            targets = [str(w) for w in raw["targets"]]
        except KeyError as exc:
            raise FormatError(f"group {i} is missing key {exc}") from None
        frequencies = {str(w): int(c) for w, c in raw.get("frequencies", {}).items()}
        new_words = frozenset(str(w) for w in raw.get("new_words", []))
        groups.append(SimilarPairGroup(predictors=predictors, targets=targets,
                                       frequencies=frequencies, new_words=new_words))
    return EnhanceConfig(theta=theta, max_predictors=max_predictors, groups=groups)


def compute_enhanced_weight(w_y: float, f_x: int | None, f_y: int, theta: float) -> float:
    """Candidate weight for a target arc borrowed from a predictor arc.

    ``f_x`` is the target's training count, or None for a new word (the log
    term is dropped). ``f_y`` is the predictor's count and must be positive.
    """
    if f_y <= 0:
        raise InvariantError(f"predictor frequency must be positive, got {f_y}")
    if f_x is None:
        return w_y + theta
    if f_x <= 0:
        raise InvariantError(
            f"target frequency must be positive, got {f_x}; a zero-count word must "
            "be declared new or given a pseudo-count")
    return (w_y + math.log(f_x / (f_x + f_y))) + theta


def collect_arcs(fst: Wfst, word: str) -> list[Arc]:
    """All arcs whose input label is ``word``, in (state id, arc index) order."""
    label = fst.symbols.label(word)
    found = []
    for state in fst.states():
        for (target, ilabel, olabel, weight) in fst.raw_arcs(state):
            if ilabel == label:
                found.append(Arc(state, target, ilabel, olabel, weight))
    return found


def _scan(fst: Wfst, predictor_labels: set[int], target_labels: set[int]):
    # One pass over the whole graph: predictor arc lists plus the positions
    # of existing target-word arcs, keyed by (source, target state, label).
    predictor_arcs: dict[int, list[Arc]] = {label: [] for label in predictor_labels}
    slots: dict[tuple[int, int, int], int] = {}
    for state in fst.states():
        for pos, (target, ilabel, olabel, weight) in enumerate(fst.raw_arcs(state)):
            if ilabel in predictor_labels:
                predictor_arcs[ilabel].append(Arc(state, target, ilabel, olabel, weight))
            if ilabel in target_labels and ilabel == olabel:
                slots[(state, target, ilabel)] = pos
    return predictor_arcs, slots


def enhance(fst: Wfst, config: EnhanceConfig) -> tuple[Wfst, FstDiff]:
    """Apply similar-pair enhancement in place, returning (graph, diff).

    Per group, each target gains candidate arcs from the first
    ``max_predictors`` predictors, one candidate per predictor arc in the
    pre-enhancement graph. A slot (source state, destination state, word)
    is created if absent, and raised to the candidate weight if the
    candidate is higher; it is never lowered, so repeating a run changes
    nothing. Only target-word arcs are touched.
    """
    symbols = fst.symbols
    config.validate(symbols)

    predictor_labels = {symbols.label(w)
                        for g in config.groups
                        for w in g.predictors[:config.max_predictors]}
    existing_target_labels = {symbols.label(t)
                              for g in config.groups
                              for t in g.targets if t in symbols}
    predictor_arcs, slots = _scan(fst, predictor_labels, existing_target_labels)

    for group in config.groups:
        for target in group.targets:
            if group.is_new(target) and target not in symbols:
                symbols.add(target)

    original_weight: dict[tuple[int, int, int], float] = {}
    added: dict[tuple[int, int, int], None] = {}
    overshoot = 0

    for group in config.groups:
        for target in group.targets:
            x_label = symbols.label(target)
            f_x = None if group.is_new(target) else group.frequencies[target]
            for predictor in group.predictors[:config.max_predictors]:
                f_y = group.frequencies[predictor]
                for arc in predictor_arcs[symbols.label(predictor)]:
                    candidate = compute_enhanced_weight(arc.weight, f_x, f_y, config.theta)
                    if candidate > arc.weight:
                        overshoot += 1
                    key = (arc.source, arc.target, x_label)
                    pos = slots.get(key)
                    if pos is None:
                        pos = fst.add_arc(arc.source, arc.target, x_label, x_label, candidate)
                        slots[key] = pos
                        added[key] = None
                    else:
                        current = fst.raw_arcs(arc.source)[pos][3]
                        if key not in original_weight and key not in added:
                            original_weight[key] = current
                        if candidate > current:
                            fst.set_arc_weight(arc.source, pos, candidate)

    if overshoot:
        log.warning("%d candidate arcs exceed their predictor's weight "
                    "(log term plus theta is positive)", overshoot)

    delta = FstDiff()
    for key in added:
        source, target, label = key
        weight = fst.raw_arcs(source)[slots[key]][3]
        delta.added_arcs.append(Arc(source, target, label, label, weight))
    for key, before in original_weight.items():
        source, target, label = key
        weight = fst.raw_arcs(source)[slots[key]][3]
        if weight != before:
            delta.reweighted_arcs.append((Arc(source, target, label, label, before),
                                          Arc(source, target, label, label, weight)))
    return fst, delta
