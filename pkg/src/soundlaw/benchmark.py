"""Single-law evaluation datasets built from a gold cascade.

Each law in the cascade becomes one task: its inputs are every word the
law changed (taken from the evolving lexicon at that point) plus a small
sample of unchanged distractor words; the full lexicon, changed or not,
feeds forward into the next law.
"""

from __future__ import annotations

import json
import math
import statistics
from dataclasses import dataclass, field

from .datagen import derive_rng
from .dsl import doc_to_law, law_to_doc, lower_classical, parse_classical
from .phonology import PhoneSeq, SegmentInventory
from .rules import Cascade, apply_to_lexicon
from .tasks import PBETask, read_tasks, write_tasks  # noqa: F401 (re-exported)


class BenchmarkError(Exception):
    pass


class EmptyCascade(BenchmarkError):
    pass


class EmptyLexicon(BenchmarkError):
    pass


class EmptyDataset(BenchmarkError):
    pass


@dataclass(frozen=True)
class BenchmarkSpec:
    cascade: Cascade
    lexicon: tuple[PhoneSeq, ...]
    language_pair: str = ""
    distractor_fraction: float = 0.15
    distractor_min: int = 2
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.distractor_fraction <= 1:
            raise BenchmarkError("distractor fraction must lie in [0, 1]")


def build_single_law_dataset(
    spec: BenchmarkSpec, inv: SegmentInventory
) -> tuple[list[PBETask], list[str]]:
    """Unroll the cascade into one PBE task per effective law.

    Returns (tasks, warnings); a law that changes nothing contributes a
    warning instead of a degenerate task.
    """
    if not spec.cascade.laws:
        raise EmptyCascade("cascade holds no laws")
    if not spec.lexicon:
        raise EmptyLexicon("lexicon holds no words")
    tasks: list[PBETask] = []
    warnings: list[str] = []
    current = list(spec.lexicon)
    for j, law in enumerate(spec.cascade.laws):
        label = spec.cascade.labels[j] if spec.cascade.labels else f"law {j + 1}"
        outputs, changed = apply_to_lexicon(law, current, inv)
        changed_pairs = [(w, o) for w, o, c in zip(current, outputs, changed) if c]
        unchanged = [w for w, c in zip(current, changed) if not c]
        if not changed_pairs:
            warnings.append(f"{label}: changes no word, skipped")
            current = outputs
            continue
        n_distractors = min(
            len(unchanged),
            max(spec.distractor_min, math.ceil(spec.distractor_fraction * len(changed_pairs))),
        )
        rng = derive_rng(spec.seed, "bench", spec.language_pair, j)
        distractors = rng.sample(unchanged, n_distractors) if n_distractors else []
        inputs = [w for w, _ in changed_pairs] + distractors
        outs = [o for _, o in changed_pairs] + distractors
        tasks.append(
            PBETask(
                id=f"{spec.language_pair or 'bench'}-{j:03d}",
                condition="single-law",
                inputs=tuple(inputs),
                outputs=tuple(outs),
                gold_law=law,
                provenance={
                    "seed": spec.seed,
                    "source": {
                        "generator": "single-law",
                        "cascade": spec.cascade.name,
                        "law_index": j,
                        "law": label,
                        "language_pair": spec.language_pair,
                    },
                },
            )
        )
        current = outputs
    return tasks, warnings


@dataclass(frozen=True)
class DatasetStats:
    task_count: int
    min_examples: int
    max_examples: int
    median_examples: float
    per_language_pair: dict[str, int] = field(default_factory=dict)


def dataset_stats(tasks) -> DatasetStats:
    tasks = list(tasks)
    if not tasks:
        raise EmptyDataset("no tasks")
    sizes = [t.n_examples for t in tasks]
    pairs: dict[str, int] = {}
    for t in tasks:
        pair = str(t.provenance.get("source", {}).get("language_pair", "")) or "unlabeled"
        pairs[pair] = pairs.get(pair, 0) + 1
    return DatasetStats(
        task_count=len(tasks),
        min_examples=min(sizes),
        max_examples=max(sizes),
        median_examples=float(statistics.median(sizes)),
        per_language_pair=dict(sorted(pairs.items())),
    )


def stats_to_json(stats: DatasetStats) -> str:
    return json.dumps(
        {
            "task_count": stats.task_count,
            "min_examples": stats.min_examples,
            "max_examples": stats.max_examples,
            "median_examples": stats.median_examples,
            "per_language_pair": stats.per_language_pair,
        },
        ensure_ascii=False,
        indent=2,
    )


def load_cascade(text: str, inv: SegmentInventory, name: str = "") -> Cascade:
    """Cascade file: classical rules one per line ('#'-prefixed lines are
    comments and label the following rule), or a JSON array of law docs."""
    stripped = text.strip()
    if stripped.startswith("["):
        docs = json.loads(stripped)
        laws = tuple(doc_to_law(d) for d in docs)
        return Cascade(laws, name=name, labels=tuple(f"law {i + 1}" for i in range(len(laws))))
    laws = []
    labels = []
    pending_comment = ""
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            pending_comment = line.lstrip("#").strip()
            continue
        rule = parse_classical(line)
        laws.append(lower_classical(rule, inv))
        labels.append(pending_comment or line)
        pending_comment = ""
    return Cascade(tuple(laws), name=name, labels=tuple(labels))


def load_cascade_file(path, inv: SegmentInventory) -> Cascade:
    with open(path, encoding="utf-8") as fh:
        return load_cascade(fh.read(), inv, name=str(path))


def save_cascade(cascade: Cascade, path) -> None:
    docs = [law_to_doc(law) for law in cascade.laws]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(docs, fh, ensure_ascii=False, indent=1)
