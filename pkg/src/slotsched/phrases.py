"""Time-phrase lexicon, template dataset generation and participant lookup.

A sentence like "please schedule a meeting with Gautam for wednesday
afternoon" maps to a 40-bit slot mask (day band * within-day offsets). The
lexicon ships as an editable JSON file; labels are produced by a rule-based
oracle so the generated dataset carries zero label noise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .calendar import NUM_SLOTS, SLOTS_PER_DAY

DATASET_TARGET = 1056
SPLIT_FRACTIONS = (0.6, 0.2, 0.2)

EXCLUSION_WORDS = frozenset({"avoid", "not", "except"})

SINGLE_DAY_FRAMES = (
    "please schedule a meeting with {name} for {day} {phrase}",
    "schedule a meeting on {day} {phrase}",
    "can we meet {day} {phrase}",
    "set up a meeting with {name} on {day} {phrase}",
    "i would like to meet {day} {phrase}",
    "book a slot for {day} {phrase}",
    "find time on {day} {phrase} for a discussion",
    "{day} {phrase} works for me",
    "let us meet on {day} {phrase}",
    "arrange a catch up with {name} {day} {phrase}",
    "is {day} {phrase} possible",
    "i prefer {day} {phrase} for the meeting",
)

MULTI_DAY_FRAMES = (
    ("{day1} or {day2} is preferred but avoid scheduling in the {phrase}", True),
    ("either {day1} or {day2} {phrase} works", False),
    ("we could do {day1} or {day2} but not in the {phrase}", True),
    ("meet me {day1} or {day2} {phrase} please", False),
)


class PhraseLookupError(KeyError):
    """Unknown day name or time-of-day phrase."""


@dataclass
class PhraseTable:
    day_map: dict[str, int]
    timeofday_map: dict[str, frozenset[int]]

    def __post_init__(self) -> None:
        for phrase, offsets in self.timeofday_map.items():
            offsets = frozenset(offsets)
            if not offsets or not offsets <= set(range(SLOTS_PER_DAY)):
                raise ValueError(f"bad offsets for {phrase!r}: {sorted(offsets)}")
            self.timeofday_map[phrase] = offsets

    @property
    def days(self) -> list[str]:
        return list(self.day_map)

    @property
    def phrases(self) -> list[str]:
        return list(self.timeofday_map)


def load_phrase_table(path: Optional[str | Path] = None) -> PhraseTable:
    """Load the lexicon from JSON; defaults to the bundled table."""
    if path is None:
        text = resources.files("slotsched.data").joinpath("phrase_table.json").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    raw = json.loads(text)
    return PhraseTable(
        day_map={k.lower(): int(v) for k, v in raw["days"].items()},
        timeofday_map={k.lower(): frozenset(raw["times_of_day"][k]) for k in raw["times_of_day"]},
    )


def oracle_map(table: PhraseTable, day: str, phrase: str) -> np.ndarray:
    """Rule-based mask for a (day, time-of-day) pair. Raises on unknown input."""
    day = day.lower()
    phrase = phrase.lower()
    if day not in table.day_map:
        raise PhraseLookupError(f"unknown day {day!r}")
    if phrase not in table.timeofday_map:
        raise PhraseLookupError(f"unknown time phrase {phrase!r}")
    mask = np.zeros(NUM_SLOTS, dtype=np.int8)
    base = SLOTS_PER_DAY * table.day_map[day]
    for offset in table.timeofday_map[phrase]:
        mask[base + offset] = 1
    return mask


def day_mask(table: PhraseTable, day: str) -> np.ndarray:
    base = SLOTS_PER_DAY * table.day_map[day.lower()]
    mask = np.zeros(NUM_SLOTS, dtype=np.int8)
    mask[base : base + SLOTS_PER_DAY] = 1
    return mask


def multi_day_mask(table: PhraseTable, days: Sequence[str], phrase: str, negate: bool) -> np.ndarray:
    """Union of per-day masks; a negated phrase subtracts its offsets instead."""
    if negate:
        keep = np.zeros(NUM_SLOTS, dtype=np.int8)
        for d in days:
            keep |= day_mask(table, d) & (1 - oracle_map(table, d, phrase))
        return keep
    mask = np.zeros(NUM_SLOTS, dtype=np.int8)
    for d in days:
        mask |= oracle_map(table, d, phrase)
    return mask


@dataclass
class LabeledSample:
    """One sentence with its 40-bit label and generating provenance."""

    tokens: list[str]
    label: np.ndarray
    days: tuple[str, ...] = ()
    phrase: str = ""
    negated: bool = False

    @property
    def sentence(self) -> str:
        return " ".join(self.tokens)


def _tokenize(text: str) -> list[str]:
    return text.lower().split()


def generate_dataset(
    table: PhraseTable,
    rng: np.random.Generator,
    names: Optional[Sequence[str]] = None,
    target: int = DATASET_TARGET,
) -> tuple[list[LabeledSample], list[LabeledSample], list[LabeledSample]]:
    """Build the template dataset and split it 0.6/0.2/0.2.

    The cross product of frames x days x phrases (plus two-day variants) is
    shuffled and truncated to `target` samples.
    """
    if names is None:
        names = ["gautam", "puneet", "alice", "omar", "priya", "tara"]
    samples: list[LabeledSample] = []
    for frame in SINGLE_DAY_FRAMES:
        for day in table.days:
            for phrase in table.phrases:
                name = str(rng.choice(list(names)))
                text = frame.format(day=day, phrase=phrase, name=name)
                samples.append(
                    LabeledSample(
                        tokens=_tokenize(text),
                        label=oracle_map(table, day, phrase),
                        days=(day,),
                        phrase=phrase,
                    )
                )
    for frame, negate in MULTI_DAY_FRAMES:
        for day1 in table.days:
            for day2 in table.days:
                if day1 == day2:
                    continue
                for phrase in table.phrases:
                    text = frame.format(day1=day1, day2=day2, phrase=phrase)
                    samples.append(
                        LabeledSample(
                            tokens=_tokenize(text),
                            label=multi_day_mask(table, (day1, day2), phrase, negate),
                            days=(day1, day2),
                            phrase=phrase,
                            negated=negate,
                        )
                    )
    order = rng.permutation(len(samples))[:target]
    picked = [samples[i] for i in order]
    n = len(picked)
    n_train = round(SPLIT_FRACTIONS[0] * n)
    n_valid = round(SPLIT_FRACTIONS[1] * n)
    train = picked[:n_train]
    valid = picked[n_train : n_train + n_valid]
    test = picked[n_train + n_valid :]
    return train, valid, test


# -- vocabulary and one-hot encoding ----------------------------------------

UNK = "<unk>"


def build_vocab(samples: Sequence[LabeledSample]) -> dict[str, int]:
    """Token -> index map with index 0 reserved for unknown tokens."""
    vocab = {UNK: 0}
    for s in samples:
        for tok in s.tokens:
            if tok not in vocab:
                vocab[tok] = len(vocab)
    return vocab


def encode_tokens(vocab: dict[str, int], tokens: Sequence[str]) -> np.ndarray:
    """Token ids with out-of-vocabulary tokens mapped to the UNK index."""
    return np.array([vocab.get(t, 0) for t in tokens], dtype=np.int64)


def encode_sentence(vocab: dict[str, int], tokens: Sequence[str]) -> np.ndarray:
    """Sequence of one-hot vectors, shape (len(tokens), len(vocab))."""
    ids = encode_tokens(vocab, tokens)
    out = np.zeros((len(ids), len(vocab)), dtype=np.float64)
    out[np.arange(len(ids)), ids] = 1.0
    return out


# -- dataset files -----------------------------------------------------------


def write_dataset(path: str | Path, samples: Sequence[LabeledSample]) -> None:
    """One sample per line: sentence TAB 40-char bitstring."""
    lines = []
    for s in samples:
        bits = "".join(str(int(b)) for b in s.label)
        lines.append(f"{s.sentence}\t{bits}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_dataset(path: str | Path) -> list[LabeledSample]:
    samples: list[LabeledSample] = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            sentence, bits = line.rsplit("\t", 1)
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: expected 'sentence<TAB>bits'") from exc
        if len(bits) != NUM_SLOTS or set(bits) - {"0", "1"}:
            raise ValueError(f"{path}:{lineno}: label must be a {NUM_SLOTS}-char bitstring")
        label = np.array([int(b) for b in bits], dtype=np.int8)
        samples.append(LabeledSample(tokens=_tokenize(sentence), label=label))
    return samples


# -- participant extraction ---------------------------------------------------


def parse_participants(directory: dict[str, int], tokens: Sequence[str]) -> list[int]:
    """Longest-match lookup of directory names over the token stream.

    Names may span several tokens; matching is case-insensitive and unknown
    words are skipped. Returns user ids in sentence order, deduplicated.
    """
    name_tokens = {tuple(name.split()): uid for name, uid in directory.items()}
    max_len = max((len(k) for k in name_tokens), default=0)
    lowered = [t.lower().strip(".,!?") for t in tokens]
    found: list[int] = []
    i = 0
    while i < len(lowered):
        matched = False
        for span in range(min(max_len, len(lowered) - i), 0, -1):
            key = tuple(lowered[i : i + span])
            if key in name_tokens:
                uid = name_tokens[key]
                if uid not in found:
                    found.append(uid)
                i += span
                matched = True
                break
        if not matched:
            i += 1
    return found
