"""PBE task records and their JSONL serialization.

One task = paired input/output word lists plus (usually) the gold law that
produced the outputs.  Words serialize as space-joined phone symbols so
multigraph phones survive the round trip.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .dsl import SchemaError, doc_to_law, law_to_doc
from .phonology import PhoneSeq, SegmentInventory
from .rules import SoundLaw, apply_to_lexicon

CONDITIONS = ("rp-ri", "rp-li", "rp-pi", "idp-pi", "single-law")


@dataclass(frozen=True)
class PBETask:
    id: str
    condition: str
    inputs: tuple[PhoneSeq, ...]
    outputs: tuple[PhoneSeq, ...]
    gold_law: SoundLaw | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.inputs) != len(self.outputs):
            raise SchemaError(
                f"task {self.id}: {len(self.inputs)} inputs vs {len(self.outputs)} outputs"
            )

    @property
    def n_examples(self) -> int:
        return len(self.inputs)


def word_to_str(word: PhoneSeq) -> str:
    return " ".join(word)


def str_to_word(text: str) -> PhoneSeq:
    return tuple(text.split())


def task_to_json(task: PBETask) -> str:
    doc = {
        "id": task.id,
        "condition": task.condition,
        "inputs": [word_to_str(w) for w in task.inputs],
        "outputs": [word_to_str(w) for w in task.outputs],
        "gold_law": law_to_doc(task.gold_law) if task.gold_law else None,
        "provenance": task.provenance,
    }
    return json.dumps(doc, ensure_ascii=False, separators=(", ", ": "))


def task_from_json(text: str, lineno: int = 0) -> PBETask:
    try:
        doc = json.loads(text)
        gold = doc_to_law(doc["gold_law"]) if doc.get("gold_law") else None
        return PBETask(
            id=doc["id"],
            condition=doc["condition"],
            inputs=tuple(str_to_word(w) for w in doc["inputs"]),
            outputs=tuple(str_to_word(w) for w in doc["outputs"]),
            gold_law=gold,
            provenance=doc.get("provenance", {}),
        )
    except SchemaError as exc:
        raise SchemaError(f"line {lineno}: {exc}") from exc
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise SchemaError(f"line {lineno}: {exc}") from exc


def write_tasks(path, tasks) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for task in tasks:
            fh.write(task_to_json(task))
            fh.write("\n")


def read_tasks(path) -> list[PBETask]:
    tasks = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if line.strip():
                tasks.append(task_from_json(line, lineno))
    return tasks


def validate_task(task: PBETask, inv: SegmentInventory) -> list[str]:
    """Re-execute the gold law and report mismatches instead of fixing them."""
    warnings = []
    if task.gold_law is None:
        return warnings
    outputs, changed = apply_to_lexicon(task.gold_law, list(task.inputs), inv)
    if tuple(outputs) != task.outputs:
        warnings.append(f"task {task.id}: stored outputs disagree with re-executed gold law")
    if not any(changed):
        warnings.append(f"task {task.id}: gold law is inert on the stored inputs")
    return warnings


def with_examples(task: PBETask, inputs, outputs) -> PBETask:
    return replace(task, inputs=tuple(inputs), outputs=tuple(outputs))
