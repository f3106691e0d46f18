"""Scoring of candidate laws against tasks.

The reward compares how much closer a candidate's predictions are to the
targets than the untouched sources were, normalized so that a perfect
prediction scores exactly 1 and a no-op scores exactly 0.  All rewards are
exact rationals; floats only appear at the reporting boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import kernels
from .phonology import PhoneSeq, SegmentInventory
from .rules import SoundLaw, apply_to_lexicon
from .tasks import PBETask


class EvaluationError(Exception):
    pass


class LengthMismatch(EvaluationError):
    pass


class DegenerateTask(EvaluationError):
    pass


class NotEnoughSamples(EvaluationError):
    pass


class EmptyDataset(EvaluationError):
    pass


def levenshtein(a: PhoneSeq, b: PhoneSeq) -> int:
    """Phone-level edit distance."""
    return kernels.levenshtein(a, b)


def aggregate_dist(xs, ys, char_level: bool = False) -> int:
    """Sum of per-word edit distances between two equal-length word vectors.

    char_level compares raw character strings instead of phone sequences
    (multigraph phones then cost per character).
    """
    if len(xs) != len(ys):
        raise LengthMismatch(f"{len(xs)} vs {len(ys)} words")
    if char_level:
        return sum(kernels.levenshtein("".join(x), "".join(y)) for x, y in zip(xs, ys))
    return sum(kernels.levenshtein(x, y) for x, y in zip(xs, ys))


def reward(source, pred, target, char_level: bool = False) -> Fraction:
    """1 - dist(pred, target) / dist(source, target); can go negative."""
    denom = aggregate_dist(source, target, char_level)
    if denom == 0:
        raise DegenerateTask("source and target are identical")
    num = aggregate_dist(pred, target, char_level)
    return 1 - Fraction(num, denom)


def reward_at_m(sample_rewards, m: int) -> Fraction:
    """Mean of the m largest sample rewards."""
    if m < 1:
        raise NotEnoughSamples("m must be >= 1")
    if len(sample_rewards) < m:
        raise NotEnoughSamples(f"need {m} samples, have {len(sample_rewards)}")
    top = sorted(sample_rewards, reverse=True)[:m]
    return Fraction(sum(top), m)


@dataclass(frozen=True)
class SampleScore:
    task_id: str
    sample_index: int
    reward: Fraction
    passed: bool


@dataclass(frozen=True)
class RewardReport:
    task_id: str
    scores: tuple[SampleScore, ...]
    reward_at_1: Fraction
    reward_at_3: Fraction | None
    passed: bool

    @property
    def rewards(self) -> tuple[Fraction, ...]:
        return tuple(s.reward for s in self.scores)


def evaluate_samples(task: PBETask, candidates, inv: SegmentInventory, char_level: bool = False) -> RewardReport:
    """Score each candidate program against one task.

    A candidate is a SoundLaw, a sequence of SoundLaws applied in order, or
    None for a sample that produced nothing runnable (scored as if it left
    the sources untouched, i.e. reward 0).
    """
    if not candidates:
        raise EvaluationError("no candidate samples")
    source = list(task.inputs)
    target = list(task.outputs)
    scores = []
    for idx, cand in enumerate(candidates):
        pred = source
        if cand is not None:
            laws = [cand] if isinstance(cand, SoundLaw) else list(cand)
            pred = source
            for law in laws:
                pred = apply_to_lexicon(law, pred, inv)[0]
        r = reward(source, pred, target, char_level)
        scores.append(SampleScore(task.id, idx, r, r == 1))
    rewards = [s.reward for s in scores]
    r1 = reward_at_m(rewards, 1)
    r3 = reward_at_m(rewards, 3) if len(rewards) >= 3 else None
    return RewardReport(task.id, tuple(scores), r1, r3, any(s.passed for s in scores))


def _evaluate_one(work):
    task, candidates, inv, char_level = work
    return evaluate_samples(task, candidates, inv, char_level)


def evaluate_many(pairs, inv: SegmentInventory, char_level: bool = False, jobs: int = 1):
    """Score (task, candidates) pairs, optionally across worker processes.

    Scoring is pure per task, so results come back in input order no matter
    how many workers run.
    """
    work = [(task, cands, inv, char_level) for task, cands in pairs]
    if jobs <= 1 or len(work) < 4:
        return [evaluate_samples(t, c, inv, char_level) for t, c, _, _ in work]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_evaluate_one, work))


def pass_rate(reports) -> Fraction:
    """Fraction of tasks with at least one full-reward sample."""
    reports = list(reports)
    if not reports:
        raise EmptyDataset("no reports")
    return Fraction(sum(r.passed for r in reports), len(reports))


def mean_reward_at(reports, m: int) -> Fraction:
    reports = list(reports)
    if not reports:
        raise EmptyDataset("no reports")
    vals = []
    for r in reports:
        if m == 1:
            vals.append(r.reward_at_1)
        elif m == 3 and r.reward_at_3 is not None:
            vals.append(r.reward_at_3)
        else:
            vals.append(reward_at_m(r.rewards, m))
    return Fraction(sum(vals), len(vals))


def group_reports(reports, tasks) -> dict[str, list[RewardReport]]:
    """Bucket reports by the tasks' language-pair provenance ('' if unset)."""
    pair_of = {
        t.id: str(t.provenance.get("source", {}).get("language_pair", "")) for t in tasks
    }
    groups: dict[str, list[RewardReport]] = {}
    for rep in reports:
        groups.setdefault(pair_of.get(rep.task_id, ""), []).append(rep)
    return groups


def summarize(reports, tasks) -> dict:
    """Aggregate a run into the report document written by the CLI."""
    reports = list(reports)
    groups = group_reports(reports, tasks)
    per_pair = {}
    for pair in sorted(groups):
        reps = groups[pair]
        per_pair[pair or "all"] = {
            "n_tasks": len(reps),
            "pass_rate": float(pass_rate(reps)),
            "reward_at_1": float(mean_reward_at(reps, 1)),
            "reward_at_3": float(mean_reward_at(reps, 3)) if all(r.reward_at_3 is not None for r in reps) else None,
        }
    doc = {
        "per_task": [
            {
                "task_id": r.task_id,
                "passed": r.passed,
                "reward_at_1": float(r.reward_at_1),
                "reward_at_3": float(r.reward_at_3) if r.reward_at_3 is not None else None,
                "rewards": [float(s.reward) for s in r.scores],
            }
            for r in reports
        ],
        "aggregates": {
            "n_tasks": len(reports),
            "pass_rate": float(pass_rate(reports)),
            "reward_at_1": float(mean_reward_at(reports, 1)),
            "reward_at_3": float(mean_reward_at(reports, 3))
            if all(r.reward_at_3 is not None for r in reports)
            else None,
            "per_language_pair": per_pair,
        },
    }
    return doc


def report_markdown(doc: dict, metric: str = "pass_rate") -> str:
    """Render the per-pair aggregate table (pairs as columns plus Avg)."""
    pairs = [p for p in doc["aggregates"]["per_language_pair"] if p != "all"]
    if not pairs:
        pairs = ["all"]
    cols = pairs + ["Avg"]
    vals = []
    for p in pairs:
        v = doc["aggregates"]["per_language_pair"][p][metric]
        vals.append(v)
    avg = None if any(v is None for v in vals) else sum(vals) / len(vals)
    fmt = lambda v: "-" if v is None else f"{v * 100:.1f}" if metric == "pass_rate" else f"{v:.4f}"
    lines = [
        "| " + " | ".join([metric] + cols) + " |",
        "|" + "---|" * (len(cols) + 1),
        "| " + " | ".join([metric] + [fmt(v) for v in vals] + [fmt(avg)]) + " |",
    ]
    return "\n".join(lines) + "\n"
