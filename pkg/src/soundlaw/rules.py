"""Sound laws and their application to token sequences.

A law is a window of predicates plus edits at fixed window slots.  Matching
is two-stage: every match site is located on the original token sequence
first, then all edits are materialized at once.  A rule therefore never
fires on material it introduced itself (no self-feeding), and overlapping
matches that fight over one slot resolve deterministically to the leftmost
site.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .phonology import (
    BOUNDARY,
    RESERVED,
    SEPARATOR,
    FEATURE_CLASS_NAMES,
    NonCanonicalTokenSeq,
    PhoneSeq,
    SegmentInventory,
    TokenSeq,
    is_canonical,
    preprocess,
    render,
)

PRED_KINDS = ("is", "is-not", "in", "not-in", "class", "not-class")
MAP_KINDS = ("delete", "replace", "insert-before", "insert-after")


class RuleError(Exception):
    pass


@dataclass(frozen=True)
class Predicate:
    """One window slot: a test over a single token."""

    kind: str
    args: tuple[str, ...]

    def __post_init__(self):
        if self.kind not in PRED_KINDS:
            raise RuleError(f"unknown predicate kind {self.kind!r}")
        if self.kind in ("is", "is-not", "class", "not-class") and len(self.args) != 1:
            raise RuleError(f"{self.kind} predicate takes exactly one argument")
        if self.kind in ("in", "not-in") and not self.args:
            raise RuleError(f"{self.kind} predicate needs a non-empty set")
        if self.kind in ("class", "not-class") and self.args[0] not in FEATURE_CLASS_NAMES:
            raise RuleError(f"unknown feature class {self.args[0]!r}")

    def matches(self, token: str, inv: SegmentInventory) -> bool:
        if self.kind == "is":
            return token == self.args[0]
        if self.kind == "is-not":
            return token != self.args[0]
        if self.kind == "in":
            return token in self.args
        if self.kind == "not-in":
            return token not in self.args
        if self.kind == "class":
            return inv.in_class(self.args[0], token)
        return not inv.in_class(self.args[0], token)

    def can_match_phone(self) -> bool:
        """False for slots that only ever match '@' or '#'."""
        if self.kind == "is":
            return self.args[0] not in RESERVED
        if self.kind == "in":
            return any(a not in RESERVED for a in self.args)
        if self.kind == "class":
            return self.args[0] != "is_nothing"
        if self.kind == "not-class":
            return self.args[0] != "is_anything"
        return True


def is_token(symbol: str) -> Predicate:
    return Predicate("is", (symbol,))


def is_not_token(symbol: str) -> Predicate:
    return Predicate("is-not", (symbol,))


def in_set(symbols) -> Predicate:
    return Predicate("in", tuple(symbols))


def not_in_set(symbols) -> Predicate:
    return Predicate("not-in", tuple(symbols))


def feature_class(name: str) -> Predicate:
    return Predicate("class", (name,))


def negated_feature_class(name: str) -> Predicate:
    return Predicate("not-class", (name,))


SEP_PRED = is_token(SEPARATOR)


@dataclass(frozen=True)
class Mapping:
    """The edit performed at one change position."""

    kind: str
    phones: PhoneSeq = ()

    def __post_init__(self):
        if self.kind not in MAP_KINDS:
            raise RuleError(f"unknown mapping kind {self.kind!r}")
        if self.kind == "delete":
            if self.phones:
                raise RuleError("delete mapping carries no phones")
        else:
            if not self.phones:
                raise RuleError(f"{self.kind} mapping needs at least one phone")
            for p in self.phones:
                if not p or any(ch in RESERVED for ch in p):
                    raise RuleError(f"mapping phone {p!r} uses a reserved character")


def delete() -> Mapping:
    return Mapping("delete")


def replace_with(phones) -> Mapping:
    return Mapping("replace", tuple(phones))


def insert_before(phones) -> Mapping:
    return Mapping("insert-before", tuple(phones))


def insert_after(phones) -> Mapping:
    return Mapping("insert-after", tuple(phones))


@dataclass(frozen=True)
class SoundLaw:
    predicates: tuple[Predicate, ...]
    change_pos: tuple[int, ...]
    mappings: tuple[Mapping, ...]

    def __post_init__(self):
        if not self.predicates:
            raise RuleError("law needs at least one predicate")
        if len(self.change_pos) != len(self.mappings):
            raise RuleError("change_pos and mappings must have equal length")
        if not self.change_pos:
            raise RuleError("law needs at least one change position")
        prev = -1
        for pos in self.change_pos:
            if not 0 <= pos < len(self.predicates):
                raise RuleError(f"change position {pos} outside the window")
            if pos <= prev:
                raise RuleError("change positions must be strictly increasing")
            if not self.predicates[pos].can_match_phone():
                raise RuleError(f"change position {pos} targets a separator/boundary slot")
            prev = pos

    @property
    def window(self) -> int:
        return len(self.predicates)


@dataclass(frozen=True)
class MatchSite:
    start: int


@dataclass(frozen=True)
class Cascade:
    laws: tuple[SoundLaw, ...]
    name: str = ""
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if self.labels and len(self.labels) != len(self.laws):
            raise RuleError("labels must align with laws")

    def __len__(self) -> int:
        return len(self.laws)


def find_matches(law: SoundLaw, tokens: TokenSeq, inv: SegmentInventory) -> list[MatchSite]:
    """All window positions (ascending) where every predicate holds."""
    if not is_canonical(tokens):
        raise NonCanonicalTokenSeq(tokens)
    preds = law.predicates
    width = len(preds)
    sites = []
    for start in range(len(tokens) - width + 1):
        if all(preds[k].matches(tokens[start + k], inv) for k in range(width)):
            sites.append(MatchSite(start))
    return sites


def apply_law(law: SoundLaw, tokens: TokenSeq, inv: SegmentInventory) -> TokenSeq:
    """Apply one law: match on the original sequence, then edit in one pass.

    Edits from distinct sites that land on the same absolute index resolve
    to the leftmost site; the loser is dropped.  The output is rebuilt into
    canonical token form, so inserted phones get their separators and a
    deleted phone takes its separator with it.
    """
    sites = find_matches(law, tokens, inv)
    if not sites:
        return tokens
    edits: dict[int, Mapping] = {}
    for site in sites:
        for pos, mapping in zip(law.change_pos, law.mappings):
            idx = site.start + pos
            if idx not in edits:
                edits[idx] = mapping
    out: list[str] = []
    for idx, tok in enumerate(tokens):
        mapping = edits.get(idx)
        if mapping is None:
            out.append(tok)
        elif mapping.kind == "delete":
            pass
        elif mapping.kind == "replace":
            out.extend(mapping.phones)
        elif mapping.kind == "insert-before":
            out.extend(mapping.phones)
            out.append(tok)
        else:
            out.append(tok)
            out.extend(mapping.phones)
    return preprocess(tuple(t for t in out if t not in (BOUNDARY, SEPARATOR)))


def apply_law_word(law: SoundLaw, word: PhoneSeq, inv: SegmentInventory) -> PhoneSeq:
    return render(apply_law(law, preprocess(word), inv))


def apply_to_lexicon(
    law: SoundLaw, words: list[PhoneSeq], inv: SegmentInventory
) -> tuple[list[PhoneSeq], list[bool]]:
    """Apply a law to every word; the mask flags words that changed."""
    outputs = [apply_law_word(law, w, inv) for w in words]
    changed = [out != w for out, w in zip(outputs, words)]
    return outputs, changed


def law_is_inert(law: SoundLaw, words: list[PhoneSeq], inv: SegmentInventory) -> bool:
    return not any(apply_to_lexicon(law, words, inv)[1])


@dataclass(frozen=True)
class StageTrace:
    index: int
    label: str
    inputs: tuple[PhoneSeq, ...]
    outputs: tuple[PhoneSeq, ...]
    changed: tuple[bool, ...]


@dataclass(frozen=True)
class DerivationTrace:
    stages: tuple[StageTrace, ...] = field(default_factory=tuple)

    @property
    def final(self) -> tuple[PhoneSeq, ...]:
        return self.stages[-1].outputs


def apply_cascade(cascade: Cascade, words: list[PhoneSeq], inv: SegmentInventory) -> DerivationTrace:
    """Run every law in order, recording the lexicon at each step."""
    if not cascade.laws:
        raise RuleError("cannot execute an empty cascade")
    stages = []
    current = list(words)
    for i, law in enumerate(cascade.laws):
        outputs, changed = apply_to_lexicon(law, current, inv)
        label = cascade.labels[i] if cascade.labels else f"law {i + 1}"
        stages.append(
            StageTrace(i, label, tuple(current), tuple(outputs), tuple(changed))
        )
        current = outputs
    return DerivationTrace(tuple(stages))
