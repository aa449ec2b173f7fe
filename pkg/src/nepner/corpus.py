"""BIO-tagged corpus ingestion, tag/span conversion, and dataset statistics."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import IO, Iterable, Iterator, Optional

log = logging.getLogger(__name__)

DELIMITERS = ("@@", "##")
DOCSTART = "-DOCSTART-"


class CorpusError(Exception):
    """Malformed corpus input; message names the offending line."""


class EntityType(Enum):
    # Declaration order is the priority order used when merging per-type
    # predictions: LOCATION beats ORGANIZATION beats PERSON beats DATE
    # beats EVENT.
    LOCATION = "LOCATION"
    ORGANIZATION = "ORGANIZATION"
    PERSON = "PERSON"
    DATE = "DATE"
    EVENT = "EVENT"


# Canonical tag mnemonics used in BIO tag strings and on-disk files.
TAG_OF_TYPE: dict[EntityType, str] = {
    EntityType.LOCATION: "LOC",
    EntityType.ORGANIZATION: "ORG",
    EntityType.PERSON: "PER",
    EntityType.DATE: "DATE",
    EntityType.EVENT: "EVENT",
}

# Accepted on-disk mnemonics. Datasets using long names (or the DAT/EVT
# abbreviations of published statistics tables) parse without a custom map.
DEFAULT_TAG_ALIASES: dict[str, EntityType] = {
    "LOC": EntityType.LOCATION,
    "LOCATION": EntityType.LOCATION,
    "ORG": EntityType.ORGANIZATION,
    "ORGANIZATION": EntityType.ORGANIZATION,
    "PER": EntityType.PERSON,
    "PERSON": EntityType.PERSON,
    "DATE": EntityType.DATE,
    "DAT": EntityType.DATE,
    "EVENT": EntityType.EVENT,
    "EVT": EntityType.EVENT,
}


@dataclass(frozen=True)
class Sentence:
    """Whitespace tokens of one corpus sentence, the coordinate system for spans."""

    tokens: tuple[str, ...]
    sentence_id: str
    article_id: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.tokens:
            raise ValueError(f"sentence {self.sentence_id!r} has no tokens")
        object.__setattr__(self, "tokens", tuple(self.tokens))
        for tok in self.tokens:
            if not tok or any(ch.isspace() for ch in tok):
                raise ValueError(
                    f"sentence {self.sentence_id!r}: token {tok!r} is empty or contains whitespace"
                )
            if any(d in tok for d in DELIMITERS):
                raise ValueError(
                    f"sentence {self.sentence_id!r}: token {tok!r} collides with entity delimiters"
                )

    def text(self) -> str:
        return " ".join(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class EntitySpan:
    """Half-open token range [start, end) labeled with one entity type."""

    start: int
    end: int
    etype: EntityType

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end):
            raise ValueError(f"invalid span range [{self.start}, {self.end})")

    def sort_key(self) -> tuple[int, int, str]:
        return (self.start, self.end, self.etype.name)


def sort_spans(spans: Iterable[EntitySpan]) -> list[EntitySpan]:
    return sorted(spans, key=EntitySpan.sort_key)


@dataclass(frozen=True)
class LabeledSentence:
    sentence: Sentence
    gold: tuple[EntitySpan, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "gold", tuple(self.gold))
        for span in self.gold:
            if span.end > len(self.sentence):
                raise ValueError(
                    f"sentence {self.sentence.sentence_id!r}: span {span} exceeds token count"
                )
        _check_no_same_type_overlap(self.gold)


@dataclass
class LabeledCorpus:
    sentences: list[LabeledSentence]
    split_name: str = ""
    article_count: int = 0
    docstart_seen: bool = False

    def __iter__(self) -> Iterator[LabeledSentence]:
        return iter(self.sentences)

    def __len__(self) -> int:
        return len(self.sentences)

    def by_id(self) -> dict[str, LabeledSentence]:
        return {entry.sentence.sentence_id: entry for entry in self.sentences}


@dataclass(frozen=True)
class CorpusStats:
    articles: int
    sentences: int
    tokens: int
    avg_sentence_len: float
    entity_counts: dict[EntityType, int]


def _check_no_same_type_overlap(spans: Iterable[EntitySpan]) -> None:
    by_type: dict[EntityType, list[EntitySpan]] = {}
    for span in spans:
        by_type.setdefault(span.etype, []).append(span)
    for etype, group in by_type.items():
        group = sorted(group, key=EntitySpan.sort_key)
        for prev, cur in zip(group, group[1:]):
            if cur.start < prev.end:
                raise ValueError(f"overlapping {etype.name} spans {prev} and {cur}")


def bio_tag(prefix: str, etype: EntityType) -> str:
    return f"{prefix}-{TAG_OF_TYPE[etype]}"


def split_bio_tag(tag: str) -> tuple[str, Optional[EntityType]]:
    """Split a BIO tag string into (prefix, entity type); "O" maps to ("O", None)."""
    if tag == "O":
        return "O", None
    prefix, _, mnemonic = tag.partition("-")
    if prefix not in ("B", "I") or mnemonic not in DEFAULT_TAG_ALIASES:
        raise ValueError(f"not a BIO tag: {tag!r}")
    return prefix, DEFAULT_TAG_ALIASES[mnemonic]


def spans_to_bio(
    sentence: Sentence,
    spans: Iterable[EntitySpan],
    etype_filter: Optional[EntityType] = None,
) -> list[str]:
    """Expand spans into one BIO tag per token.

    With `etype_filter` set, spans of other types are dropped. Overlapping
    spans of the same type are rejected.
    """
    selected = [s for s in spans if etype_filter is None or s.etype == etype_filter]
    _check_no_same_type_overlap(selected)
    tags = ["O"] * len(sentence)
    for span in selected:
        if span.end > len(sentence):
            raise ValueError(f"span {span} exceeds sentence length {len(sentence)}")
        if any(tags[i] != "O" for i in range(span.start, span.end)):
            raise ValueError(f"span {span} overlaps a previously placed span")
        tags[span.start] = bio_tag("B", span.etype)
        for i in range(span.start + 1, span.end):
            tags[i] = bio_tag("I", span.etype)
    return tags


def extract_spans(tags: list[str]) -> list[EntitySpan]:
    """Read maximal entity spans out of a BIO sequence.

    Total over any tag sequence: an I tag without a matching open span is
    treated as B (the same repair applied at ingestion). Output is sorted
    by start index.
    """
    spans: list[EntitySpan] = []
    open_start: Optional[int] = None
    open_type: Optional[EntityType] = None
    for i, tag in enumerate(tags):
        prefix, etype = split_bio_tag(tag)
        if prefix == "I" and etype == open_type:
            continue
        if open_type is not None:
            spans.append(EntitySpan(open_start, i, open_type))
            open_start = open_type = None
        if prefix != "O":
            open_start, open_type = i, etype
    if open_type is not None:
        spans.append(EntitySpan(open_start, len(tags), open_type))
    return sort_spans(spans)


def repair_positions(tags: list[str]) -> list[int]:
    """Indexes of orphan I tags (I not preceded by B/I of the same type)."""
    positions = []
    prev_type: Optional[EntityType] = None
    for i, tag in enumerate(tags):
        prefix, etype = split_bio_tag(tag)
        if prefix == "I" and etype != prev_type:
            positions.append(i)
        prev_type = etype if prefix != "O" else None
    return positions


def parse_conll(
    stream: IO[str] | Iterable[str],
    split_name: str = "",
    tag_aliases: Optional[dict[str, EntityType]] = None,
) -> LabeledCorpus:
    """Parse a one-token-per-line `token<TAB>tag` stream into a labeled corpus.

    Blank lines end sentences; a line whose token field is `-DOCSTART-` ends
    an article (absent separators, the whole stream is one article). Orphan
    I tags are repaired to B and logged.
    """
    aliases = dict(DEFAULT_TAG_ALIASES if tag_aliases is None else tag_aliases)
    sentences: list[LabeledSentence] = []
    pending_tokens: list[str] = []
    pending_tags: list[str] = []
    article_index = 0
    saw_docstart = False
    saw_content = False
    prefix = split_name or "s"

    def flush(line_num: int) -> None:
        nonlocal pending_tokens, pending_tags
        if not pending_tokens:
            return
        sid = f"{prefix}-{len(sentences) + 1:06d}"
        aid = f"a{max(article_index, 1):04d}"
        sentence = Sentence(tuple(pending_tokens), sentence_id=sid, article_id=aid)
        repairs = repair_positions(pending_tags)
        for pos in repairs:
            log.warning(
                "%s: orphan I tag %r at token %d repaired to B (ends at line %d)",
                sid, pending_tags[pos], pos, line_num,
            )
        spans = extract_spans(pending_tags)
        sentences.append(LabeledSentence(sentence, tuple(spans)))
        pending_tokens, pending_tags = [], []

    line_num = 0
    for line_num, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            flush(line_num)
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise CorpusError(
                f"line {line_num}: expected 2 tab-separated fields, found {len(fields)}"
            )
        token, tag = fields
        if token == DOCSTART:
            flush(line_num)
            article_index += 1
            saw_docstart = True
            continue
        saw_content = True
        if not token or any(ch.isspace() for ch in token):
            raise CorpusError(f"line {line_num}: empty or whitespace-bearing token {token!r}")
        if any(d in token for d in DELIMITERS):
            raise CorpusError(
                f"line {line_num}: token {token!r} contains a reserved delimiter (@@ or ##)"
            )
        if tag != "O":
            tag_prefix, _, mnemonic = tag.partition("-")
            if tag_prefix not in ("B", "I") or mnemonic not in aliases:
                raise CorpusError(f"line {line_num}: unknown tag {tag!r}")
            tag = f"{tag_prefix}-{TAG_OF_TYPE[aliases[mnemonic]]}"
        pending_tokens.append(token)
        pending_tags.append(tag)
    flush(line_num + 1)

    if saw_docstart:
        article_count = article_index
    else:
        article_count = 1 if saw_content else 0
    return LabeledCorpus(
        sentences=sentences,
        split_name=split_name,
        article_count=article_count,
        docstart_seen=saw_docstart,
    )


def parse_conll_file(
    path: str,
    split_name: str = "",
    tag_aliases: Optional[dict[str, EntityType]] = None,
) -> LabeledCorpus:
    with open(path, encoding="utf-8") as fh:
        return parse_conll(fh, split_name=split_name, tag_aliases=tag_aliases)


def serialize_conll(corpus: LabeledCorpus) -> str:
    """Render a corpus back to its canonical on-disk form.

    Inverse of parse_conll on well-formed (canonical-mnemonic) input.
    """
    out: list[str] = []
    current_article: Optional[str] = None
    for entry in corpus.sentences:
        if corpus.docstart_seen and entry.sentence.article_id != current_article:
            current_article = entry.sentence.article_id
            out.append(f"{DOCSTART}\tO")
            out.append("")
        tags = spans_to_bio(entry.sentence, entry.gold)
        for token, tag in zip(entry.sentence.tokens, tags):
            out.append(f"{token}\t{tag}")
        out.append("")
    return "\n".join(out) + ("\n" if out else "")


def corpus_stats(corpus: LabeledCorpus) -> CorpusStats:
    """Article/sentence/token totals, mean sentence length, per-type span counts."""
    n_sentences = len(corpus.sentences)
    n_tokens = sum(len(entry.sentence) for entry in corpus.sentences)
    counts = {etype: 0 for etype in EntityType}
    for entry in corpus.sentences:
        for span in entry.gold:
            counts[span.etype] += 1
    return CorpusStats(
        articles=corpus.article_count,
        sentences=n_sentences,
        tokens=n_tokens,
        avg_sentence_len=(n_tokens / n_sentences) if n_sentences else 0.0,
        entity_counts=counts,
    )
