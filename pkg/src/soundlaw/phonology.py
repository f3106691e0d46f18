"""Segmentation of words into phones, token sequences, and feature classes.

Words are handled as tuples of phone symbols (plain strings, possibly
multi-character like "tʰ" or "ts").  Rules never see words directly: they
operate on a token sequence where '#' marks both word edges and '@' sits
between every pair of adjacent tokens, e.g. "am" becomes
('#', '@', 'a', '@', 'm', '@', '#').
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field

BOUNDARY = "#"
SEPARATOR = "@"
DELETION_MARK = "!"

RESERVED = frozenset((BOUNDARY, SEPARATOR, DELETION_MARK))

PhoneSeq = tuple[str, ...]
TokenSeq = tuple[str, ...]


class PhonologyError(Exception):
    pass


class UnsegmentableInput(PhonologyError):
    def __init__(self, word: str, position: int):
        self.word = word
        self.position = position
        super().__init__(f"no inventory segment matches {word!r} at position {position}")


class NonCanonicalTokenSeq(PhonologyError):
    pass


class UnknownFeatureClass(PhonologyError):
    pass


class DuplicateSegment(PhonologyError):
    pass


class MalformedRow(PhonologyError):
    pass


# Feature classes evaluated against the inventory's feature table.  A phone
# belongs to a class when it carries every listed feature value.
CLASS_DEFINITIONS: dict[str, dict[str, str]] = {
    "is_consonant": {"syl": "-"},
    "is_vowel": {"syl": "+"},
    "is_velar": {"syl": "-", "hi": "+", "back": "+"},
    "is_liquid_consonant": {"cons": "+", "son": "+", "nas": "-"},
    "is_cont_not_son": {"cont": "+", "son": "-"},
    "is_son": {"son": "+"},
}

# Token-level classes that do not consult the feature table.
TOKEN_CLASSES = ("is_nothing", "is_anything", "is_not_boundary")

FEATURE_CLASS_NAMES = tuple(CLASS_DEFINITIONS) + TOKEN_CLASSES


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


@dataclass(frozen=True)
class SegmentInventory:
    """An ordered set of phone symbols plus their feature vectors."""

    segments: PhoneSeq
    features: dict[str, dict[str, str]] = field(default_factory=dict)

    def __post_init__(self):
        seen = set()
        for seg in self.segments:
            if not seg:
                raise MalformedRow("empty segment symbol")
            if seg != nfc(seg):
                raise MalformedRow(f"segment {seg!r} is not NFC-normalized")
            if any(ch in RESERVED for ch in seg):
                raise MalformedRow(f"segment {seg!r} uses a reserved character")
            if seg in seen:
                raise DuplicateSegment(seg)
            seen.add(seg)
        object.__setattr__(self, "_segment_set", seen)
        object.__setattr__(
            self, "_max_len", max((len(s) for s in self.segments), default=0)
        )

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._segment_set

    def __len__(self) -> int:
        return len(self.segments)

    def segment(self, word: str) -> PhoneSeq:
        """Split a word into phones by greedy longest match, left to right.

        Whitespace acts as an explicit phone delimiter and is discarded, so
        both raw words ("tsar") and pre-tokenized words ("t a") load.
        """
        word = nfc(word)
        phones: list[str] = []
        pos = 0
        n = len(word)
        while pos < n:
            if word[pos].isspace():
                pos += 1
                continue
            limit = min(self._max_len, n - pos)
            for width in range(limit, 0, -1):
                cand = word[pos : pos + width]
                if cand in self._segment_set:
                    phones.append(cand)
                    pos += width
                    break
            else:
                raise UnsegmentableInput(word, pos)
        return tuple(phones)

    def feature(self, symbol: str, name: str) -> str:
        return self.features.get(symbol, {}).get(name, "0")

    def in_class(self, name: str, token: str) -> bool:
        """Test a token (phone, '#', or '@') against a feature class."""
        if name == "is_nothing":
            return token == SEPARATOR
        if name == "is_anything":
            return True
        if name == "is_not_boundary":
            return token != BOUNDARY
        spec = CLASS_DEFINITIONS.get(name)
        if spec is None:
            raise UnknownFeatureClass(name)
        if token == BOUNDARY or token == SEPARATOR:
            return False
        row = self.features.get(token)
        if row is None:
            return False
        return all(row.get(feat, "0") == val for feat, val in spec.items())

    def class_members(self, name: str) -> PhoneSeq:
        """All inventory phones belonging to a class (token classes by their
        phone-level reading: is_anything / is_not_boundary -> every phone)."""
        if name == "is_nothing":
            return ()
        if name in ("is_anything", "is_not_boundary"):
            return self.segments
        if name not in CLASS_DEFINITIONS:
            raise UnknownFeatureClass(name)
        return tuple(s for s in self.segments if self.in_class(name, s))


def preprocess(phones: PhoneSeq) -> TokenSeq:
    """Interleave phones with separators and wrap in boundary markers."""
    tokens = [BOUNDARY, SEPARATOR]
    for p in phones:
        tokens.append(p)
        tokens.append(SEPARATOR)
    tokens.append(BOUNDARY)
    return tuple(tokens)


def is_canonical(tokens: TokenSeq) -> bool:
    if len(tokens) < 3 or len(tokens) % 2 == 0:
        return False
    if tokens[0] != BOUNDARY or tokens[-1] != BOUNDARY:
        return False
    for i, tok in enumerate(tokens[1:-1], start=1):
        if i % 2 == 1:
            if tok != SEPARATOR:
                return False
        elif tok in RESERVED:
            return False
    return True


def render(tokens: TokenSeq) -> PhoneSeq:
    """Inverse of preprocess: strip boundaries and separators."""
    if not is_canonical(tokens):
        raise NonCanonicalTokenSeq(tokens)
    return tuple(tokens[2:-2:2])


def load_feature_table(text: str) -> SegmentInventory:
    """Parse a delimiter-separated feature table.

    First column is the segment symbol, remaining columns are feature names
    with values in {+, -, 0}.  Tab-separated; comma-separated accepted when
    no tabs are present.
    """
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise MalformedRow("empty feature table")
    delim = "\t" if "\t" in lines[0] else ","
    header = [col.strip() for col in lines[0].split(delim)]
    feature_names = header[1:]
    if not feature_names:
        raise MalformedRow("feature table header names no features")
    segments: list[str] = []
    features: dict[str, dict[str, str]] = {}
    for lineno, ln in enumerate(lines[1:], start=2):
        cols = [col.strip() for col in ln.split(delim)]
        if len(cols) != len(header):
            raise MalformedRow(f"line {lineno}: expected {len(header)} columns, got {len(cols)}")
        symbol = nfc(cols[0])
        values = {}
        for name, val in zip(feature_names, cols[1:]):
            val = val.replace("−", "-")
            if val not in ("+", "-", "0"):
                raise MalformedRow(f"line {lineno}: bad feature value {val!r}")
            values[name] = val
        if symbol in features:
            raise DuplicateSegment(symbol)
        segments.append(symbol)
        features[symbol] = values
    return SegmentInventory(tuple(segments), features)


def load_feature_table_file(path) -> SegmentInventory:
    with open(path, encoding="utf-8") as fh:
        return load_feature_table(fh.read())


def load_lexicon(path, inventory: SegmentInventory) -> list[PhoneSeq]:
    """Read a one-word-per-line lexicon, skipping '#'-prefixed comments."""
    words: list[PhoneSeq] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            words.append(inventory.segment(line))
    return words


_DEFAULT_INVENTORY: SegmentInventory | None = None


def default_inventory() -> SegmentInventory:
    """The bundled feature table (loaded once per process)."""
    global _DEFAULT_INVENTORY
    if _DEFAULT_INVENTORY is None:
        from importlib.resources import files

        text = (files("soundlaw") / "data" / "feature_table.tsv").read_text("utf-8")
        _DEFAULT_INVENTORY = load_feature_table(text)
    return _DEFAULT_INVENTORY
