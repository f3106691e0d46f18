"""Synthetic PBE task generation.

Four families: rp-ri samples both laws and inputs locally; rp-li and rp-pi
obtain laws from a language model through the gateway (inputs are model
nonce words or protolanguage seed words, padded with distractors); idp-pi
draws laws from an ingested classical-rule database, gated by a context
sampled from the longest common subsequences of the input words.

Outputs are always computed by executing the gold law locally; a model
response is never trusted for the Y side of a task.
"""

from __future__ import annotations

import hashlib
import random
import re
from dataclasses import dataclass, replace

from . import kernels
from .dsl import RuleDB, lower_classical, parse_program_text, extract_code_blocks
from .phonology import BOUNDARY, PhoneSeq, SegmentInventory
from .rules import (
    Predicate,
    SEP_PRED,
    SoundLaw,
    apply_law_word,
    apply_to_lexicon,
    delete,
    feature_class,
    in_set,
    insert_after,
    insert_before,
    is_not_token,
    is_token,
    law_is_inert,
    replace_with,
)
from .tasks import PBETask

lcs = kernels.lcs_pair


class GenerationError(Exception):
    pass


class InfeasibleQuota(GenerationError):
    pass


class ZeroYield(GenerationError):
    pass


class NoApplicableRule(GenerationError):
    pass


class PoolExhausted(GenerationError):
    pass


class NoCommonSubsequence(GenerationError):
    pass


BOUNDARY_CONDITIONS = ("word-start", "word-end", "not-word-start", "not-word-end")

# classes usable as random context slots (matching one phone each)
CONTEXT_CLASSES = (
    "is_consonant",
    "is_vowel",
    "is_velar",
    "is_liquid_consonant",
    "is_cont_not_son",
    "is_son",
)
WILDCARD_CLASSES = ("is_anything", "is_not_boundary")


@dataclass(frozen=True)
class GenConfig:
    n_examples: int = 50
    context_len: tuple[int, int] = (1, 3)
    boundary_prob: float = 0.25
    word_len: tuple[int, int] = (3, 12)
    op_count: tuple[int, int] = (1, 3)
    # relative weights for literal / set / class context slots
    predicate_mix: tuple[float, float, float] = (0.6, 0.2, 0.2)
    set_size: tuple[int, int] = (2, 4)
    retry_budget: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.n_examples < 10:
            raise GenerationError("n_examples must be >= 10")
        if not 0 <= self.boundary_prob <= 1:
            raise GenerationError("boundary_prob must lie in [0, 1]")


def derive_rng(seed: int, *parts) -> random.Random:
    """Independent deterministic stream for (seed, parts)."""
    digest = hashlib.sha256(repr((seed,) + parts).encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


# ---------------------------------------------------------------------------
# random laws (rp-ri)


def _sample_slot(rng: random.Random, cfg: GenConfig, inv: SegmentInventory, wildcards: bool) -> Predicate:
    kinds = ["literal", "set", "class"]
    kind = rng.choices(kinds, weights=cfg.predicate_mix)[0]
    if kind == "literal":
        return is_token(rng.choice(inv.segments))
    if kind == "set":
        size = rng.randint(*cfg.set_size)
        return in_set(rng.sample(inv.segments, min(size, len(inv))))
    pool = CONTEXT_CLASSES + (WILDCARD_CLASSES if wildcards else ())
    return feature_class(rng.choice(pool))


def _sample_mapping(rng: random.Random, inv: SegmentInventory, slot: Predicate) -> "object":
    kind = rng.choice(("delete", "replace", "insert-before", "insert-after"))
    if kind == "delete":
        return delete()
    phone = rng.choice(inv.segments)
    if kind == "replace":
        if slot.kind == "is":
            others = [s for s in inv.segments if s != slot.args[0]]
            phone = rng.choice(others)
        return replace_with((phone,))
    if kind == "insert-before":
        return insert_before((phone,))
    return insert_after((phone,))


def sample_random_law(cfg: GenConfig, rng: random.Random, inv: SegmentInventory) -> SoundLaw:
    """A random law: 1-3 phone context slots, optional boundary condition,
    1-3 edits at distinct context slots."""
    n_ctx = rng.randint(*cfg.context_len)
    condition = rng.choice(BOUNDARY_CONDITIONS) if rng.random() < cfg.boundary_prob else None
    wildcards = n_ctx >= 2 or condition is not None
    ctx_slots = [_sample_slot(rng, cfg, inv, wildcards) for _ in range(n_ctx)]

    slots: list[Predicate] = list(ctx_slots)
    ctx_offset = 0
    if condition == "word-start":
        slots.insert(0, is_token(BOUNDARY))
        ctx_offset = 1
    elif condition == "not-word-start":
        slots.insert(0, is_not_token(BOUNDARY))
        ctx_offset = 1
    elif condition == "word-end":
        slots.append(is_token(BOUNDARY))
    elif condition == "not-word-end":
        slots.append(is_not_token(BOUNDARY))

    window: list[Predicate] = []
    slot_index: list[int] = []
    for k, slot in enumerate(slots):
        if k:
            window.append(SEP_PRED)
        slot_index.append(len(window))
        window.append(slot)

    n_ops = min(rng.randint(*cfg.op_count), n_ctx)
    edited = sorted(rng.sample(range(n_ctx), n_ops))
    change_pos = tuple(slot_index[ctx_offset + j] for j in edited)
    mappings = tuple(_sample_mapping(rng, inv, ctx_slots[j]) for j in edited)
    return SoundLaw(tuple(window), change_pos, mappings)


# ---------------------------------------------------------------------------
# occurrence counting over the law's phone-slot context


def context_predicates(law: SoundLaw) -> tuple[Predicate, ...]:
    """The law's context window over phones: separator slots dropped, edge
    slots that test the boundary token dropped too."""
    slots = [p for p in law.predicates if p != SEP_PRED]
    if slots and slots[0].kind in ("is", "is-not") and slots[0].args == (BOUNDARY,):
        slots = slots[1:]
    if slots and slots[-1].kind in ("is", "is-not") and slots[-1].args == (BOUNDARY,):
        slots = slots[:-1]
    return tuple(slots)


def occurrences(preds, word: PhoneSeq, inv: SegmentInventory) -> list[int]:
    """Start indices where the predicate window matches consecutive phones."""
    w = len(preds)
    if w == 0 or w > len(word):
        return []
    return [
        i
        for i in range(len(word) - w + 1)
        if all(p.matches(word[i + k], inv) for k, p in enumerate(preds))
    ]


def _interior_count(preds, word: PhoneSeq, inv: SegmentInventory) -> int:
    w = len(preds)
    return sum(1 for i in occurrences(preds, word, inv) if 0 < i and i + w < len(word))


def _concrete_context(preds, rng: random.Random, inv: SegmentInventory) -> list[str]:
    phones = []
    for p in preds:
        members = [s for s in inv.segments if p.matches(s, inv)]
        if not members:
            raise InfeasibleQuota(f"no inventory phone satisfies {p}")
        phones.append(rng.choice(members))
    return phones


def sample_inputs_for_law(
    law: SoundLaw, cfg: GenConfig, rng: random.Random, inv: SegmentInventory
) -> list[PhoneSeq]:
    """N input words satisfying every placement quota simultaneously:
    >= 2N/3 contain the context, >= N/10 each begin with it, end with it,
    hold one interior occurrence, hold two; the rest are random words kept
    free of the context when the context is avoidable at all."""
    preds = context_predicates(law)
    if not preds:
        raise InfeasibleQuota("law has no phone-slot context")
    w = len(preds)
    n = cfg.n_examples
    lo, hi = cfg.word_len
    if 2 * w + 3 > hi:
        raise InfeasibleQuota(f"context of width {w} cannot occur twice inside a word of <= {hi} phones")

    tenth = n // 10
    bearing = -(-2 * n // 3)  # ceil(2n/3)

    def rand_phones(k: int) -> list[str]:
        return [rng.choice(inv.segments) for _ in range(k)]

    def length_at_least(minimum: int) -> int:
        return max(minimum, rng.randint(lo, hi))

    words: list[PhoneSeq] = []
    for _ in range(tenth):  # begins with context
        total = length_at_least(w)
        words.append(tuple(_concrete_context(preds, rng, inv) + rand_phones(total - w)))
    for _ in range(tenth):  # ends with context
        total = length_at_least(w)
        words.append(tuple(rand_phones(total - w) + _concrete_context(preds, rng, inv)))
    for _ in range(tenth):  # one interior occurrence
        total = length_at_least(w + 2)
        head = rng.randint(1, total - w - 1)
        ctx = _concrete_context(preds, rng, inv)
        words.append(tuple(rand_phones(head) + ctx + rand_phones(total - w - head)))
    for _ in range(tenth):  # two interior occurrences
        total = length_at_least(2 * w + 3)
        slack = total - 2 * w - 3
        a = rng.randint(0, slack)
        b = rng.randint(0, slack - a)
        c1 = _concrete_context(preds, rng, inv)
        c2 = _concrete_context(preds, rng, inv)
        words.append(
            tuple(
                rand_phones(1 + a) + c1 + rand_phones(1 + b) + c2 + rand_phones(1 + slack - a - b)
            )
        )
    while len(words) < bearing:  # any occurrence anywhere
        total = length_at_least(w)
        at = rng.randint(0, total - w)
        ctx = _concrete_context(preds, rng, inv)
        words.append(tuple(rand_phones(at) + ctx + rand_phones(total - w - at)))
    while len(words) < n:  # context-free remainder (best effort when the
        # context is a wildcard that every word necessarily contains)
        word = tuple(rand_phones(rng.randint(lo, hi)))
        for _ in range(40):
            if not occurrences(preds, word, inv):
                break
            word = tuple(rand_phones(rng.randint(lo, hi)))
        words.append(word)
    rng.shuffle(words)
    return words


def _rp_ri_range(cfg: GenConfig, start: int, stop: int, inv: SegmentInventory) -> list[PBETask]:
    out: list[PBETask] = []
    for index in range(start, stop):
        rng = derive_rng(cfg.seed, "rp-ri", index)
        last_error: Exception | None = None
        for _ in range(cfg.retry_budget):
            law = sample_random_law(cfg, rng, inv)
            try:
                inputs = sample_inputs_for_law(law, cfg, rng, inv)
            except InfeasibleQuota as exc:
                last_error = exc
                continue
            outputs, changed = apply_to_lexicon(law, inputs, inv)
            if not any(changed):
                last_error = GenerationError("law is inert on its sampled inputs")
                continue
            out.append(
                PBETask(
                    id=f"rp-ri-{index:05d}",
                    condition="rp-ri",
                    inputs=tuple(inputs),
                    outputs=tuple(outputs),
                    gold_law=law,
                    provenance={"seed": cfg.seed, "source": {"generator": "rp-ri", "index": index}},
                )
            )
            break
        else:
            raise GenerationError(f"task {index}: retry budget exhausted ({last_error})")
    return out


def gen_rp_ri(cfg: GenConfig, count: int, inv: SegmentInventory, jobs: int = 1) -> list[PBETask]:
    """Random laws applied to quota-sampled random inputs.

    Each task owns an RNG stream derived from (seed, index), so splitting
    the index range over workers changes nothing about the output bytes.
    """
    if jobs <= 1 or count < 4:
        return _rp_ri_range(cfg, 0, count, inv)
    from concurrent.futures import ProcessPoolExecutor

    chunk = -(-count // jobs)
    work = [(cfg, a, min(a + chunk, count), inv) for a in range(0, count, chunk)]
    out: list[PBETask] = []
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for part in pool.map(_rp_ri_worker, work):
            out.extend(part)
    return out


def _rp_ri_worker(work: tuple) -> list[PBETask]:
    cfg, start, stop, inv = work
    return _rp_ri_range(cfg, start, stop, inv)


# ---------------------------------------------------------------------------
# distractors


def add_distractors(
    task: PBETask, pool, rng: random.Random, target_n: int, inv: SegmentInventory
) -> PBETask:
    """Pad a task to target_n examples with words drawn from other tasks.

    The gold law is re-executed on every added word, so a distractor that
    the law does happen to touch still yields a consistent pair.
    """
    if task.n_examples > target_n:
        raise GenerationError(f"task {task.id} already has {task.n_examples} examples")
    if task.gold_law is None:
        raise GenerationError("cannot pad a task without its gold law")
    needed = target_n - task.n_examples
    if needed == 0:
        return task
    have = set(task.inputs)
    fresh = []
    seen = set()
    for word in pool:
        if word not in have and word not in seen:
            fresh.append(word)
            seen.add(word)
    if len(fresh) < needed:
        raise PoolExhausted(f"need {needed} distractors, pool offers {len(fresh)}")
    picked = rng.sample(fresh, needed)
    new_inputs = list(task.inputs) + picked
    new_outputs = list(task.outputs) + [apply_law_word(task.gold_law, p, inv) for p in picked]
    return replace(task, inputs=tuple(new_inputs), outputs=tuple(new_outputs))


# ---------------------------------------------------------------------------
# LLM-backed generation (rp-li / rp-pi)

_NONCE_LIST = re.compile(r"(?<![\w.])nonce_inputs\s*=\s*(\[[^\]]*\])")


def _nonce_lists(block: str) -> list[tuple[int, list[str]]]:
    """(position, words) for every nonce_inputs assignment in a code block."""
    import ast

    found = []
    for m in _NONCE_LIST.finditer(block):
        try:
            value = ast.literal_eval(m.group(1))
        except (ValueError, SyntaxError):
            continue
        if isinstance(value, list) and all(isinstance(v, str) for v in value):
            found.append((m.start(), value))
    return found


def _segment_all(words, inv: SegmentInventory) -> list[PhoneSeq]:
    out = []
    for word in words:
        try:
            phones = inv.segment(word)
        except Exception:
            continue
        if phones:
            out.append(phones)
    return out


def harvest_actions(transcript_text: str, inv: SegmentInventory):
    """(law, nonce-words-or-None) pairs from one model response."""
    blocks, _ = extract_code_blocks(transcript_text)
    pairs = []
    for block in blocks:
        parsed = parse_program_text(block, inv)
        nonce = _nonce_lists(block)
        for i, entry in enumerate(parsed.entries):
            end = entry.span[1]
            next_start = (
                parsed.entries[i + 1].span[0] if i + 1 < len(parsed.entries) else len(block)
            )
            attached = None
            for pos, words in nonce:
                if end <= pos < next_start:
                    attached = words
                    break
            pairs.append((entry.law, attached))
    return pairs


def gen_llm_tasks(
    kind: str,
    gateway,
    seed_pool: list[PhoneSeq],
    cfg: GenConfig,
    count: int,
    inv: SegmentInventory,
) -> list[PBETask]:
    """Laws proposed by a model, inputs padded to N with distractors.

    rp-li pairs each law with the nonce words the model listed for it;
    rp-pi starts each task from the round's five seed words.  Inert laws
    are dropped.  Output words always come from executing the law locally.
    """
    if kind not in ("rp-li", "rp-pi"):
        raise GenerationError(f"unknown llm condition {kind!r}")
    if not seed_pool:
        raise GenerationError("empty seed pool")
    rng = derive_rng(cfg.seed, kind)
    candidates: list[tuple[SoundLaw, list[PhoneSeq], int]] = []
    barren = 0
    round_index = 0
    while len(candidates) < count:
        if barren > cfg.retry_budget:
            raise ZeroYield(f"{barren} consecutive rounds yielded no usable program")
        seeds = rng.sample(seed_pool, min(5, len(seed_pool)))
        bundle = gateway.build_datagen_prompt(kind, seeds)
        transcripts = gateway.complete_prompt(bundle, n=1)
        yielded = 0
        for transcript in transcripts:
            for law, nonce in harvest_actions(transcript.text, inv):
                if kind == "rp-li" and nonce:
                    inputs = _segment_all(nonce, inv)
                    if not inputs:
                        inputs = list(seeds)
                else:
                    inputs = list(seeds)
                if law_is_inert(law, inputs, inv):
                    continue
                candidates.append((law, inputs, round_index))
                yielded += 1
        barren = 0 if yielded else barren + 1
        round_index += 1
    candidates = candidates[:count]

    # distractor pool: every other candidate's inputs, then the seed pool
    tasks: list[PBETask] = []
    for i, (law, inputs, rnd) in enumerate(candidates):
        pool: list[PhoneSeq] = []
        for j, (_, other_inputs, _) in enumerate(candidates):
            if j != i:
                pool.extend(other_inputs)
        pool.extend(seed_pool)
        outputs, _ = apply_to_lexicon(law, inputs, inv)
        task = PBETask(
            id=f"{kind}-{i:05d}",
            condition=kind,
            inputs=tuple(inputs),
            outputs=tuple(outputs),
            gold_law=law,
            provenance={"seed": cfg.seed, "source": {"generator": kind, "round": rnd}},
        )
        tasks.append(add_distractors(task, pool, rng, cfg.n_examples, inv))
    return tasks


# ---------------------------------------------------------------------------
# idp-pi


def count_scan_occurrences(candidate: PhoneSeq, word: PhoneSeq) -> int:
    """Disjoint subsequence occurrences found in one left-to-right scan."""
    if not candidate:
        return 0
    count = 0
    k = 0
    for phone in word:
        if phone == candidate[k]:
            k += 1
            if k == len(candidate):
                count += 1
                k = 0
    return count


def sample_idp_context(inputs: list[PhoneSeq], rng: random.Random) -> PhoneSeq:
    """Draw a context from the pairwise LCSs, weighted by how often each
    candidate occurs (scan counting) across the input words."""
    if len(inputs) < 2:
        raise GenerationError("need at least two inputs")
    weights: dict[PhoneSeq, int] = {}
    for i in range(len(inputs)):
        for j in range(i + 1, len(inputs)):
            cand = lcs(inputs[i], inputs[j])
            if cand and cand not in weights:
                weights[cand] = sum(count_scan_occurrences(cand, w) for w in inputs)
    if not weights:
        raise NoCommonSubsequence("all pairwise LCSs are empty")
    total = sum(weights.values())
    pick = rng.random() * total
    acc = 0
    for cand, weight in weights.items():
        acc += weight
        if pick < acc:
            return cand
    return cand  # pragma: no cover - float edge


def _rule_phones_in_context(entry, context: PhoneSeq, inv: SegmentInventory) -> bool:
    """Applicability gate: the rule's focus and literal context phones must
    occur in the sampled context (set atoms need at least one member)."""
    ctx = set(context)
    rule = entry.rule
    if rule.focus:
        for p in inv.segment(rule.focus):
            if p not in ctx:
                return False
    for atom in rule.left + rule.right:
        if atom.kind == "text":
            for p in inv.segment(atom.value[0]):
                if p not in ctx:
                    return False
        elif atom.kind == "set":
            if not any(m in ctx for m in atom.value):
                return False
    return True


def gen_idp_pi(
    db: RuleDB,
    lexicon: list[PhoneSeq],
    cfg: GenConfig,
    count: int,
    inv: SegmentInventory,
) -> list[PBETask]:
    """Database rules filtered to the ones applicable to sampled inputs."""
    usable = db.usable()
    if not usable:
        raise GenerationError("rule database has no lowerable rules")
    if len(lexicon) < cfg.n_examples:
        raise GenerationError(f"lexicon must hold >= {cfg.n_examples} words")
    lowered = [(entry, lower_classical(entry.rule, inv)) for entry in usable]
    tasks: list[PBETask] = []
    for index in range(count):
        rng = derive_rng(cfg.seed, "idp-pi", index)
        for _ in range(cfg.retry_budget):
            words = rng.sample(lexicon, cfg.n_examples)
            try:
                context = sample_idp_context(words, rng)
            except NoCommonSubsequence:
                continue
            applicable = [
                (entry, law)
                for entry, law in lowered
                if _rule_phones_in_context(entry, context, inv)
                and not law_is_inert(law, words, inv)
            ]
            if not applicable:
                continue
            entry, law = applicable[rng.randrange(len(applicable))]
            outputs, _ = apply_to_lexicon(law, words, inv)
            from .dsl import print_classical  # noqa: PLC0415

            tasks.append(
                PBETask(
                    id=f"idp-pi-{index:05d}",
                    condition="idp-pi",
                    inputs=tuple(words),
                    outputs=tuple(outputs),
                    gold_law=law,
                    provenance={
                        "seed": cfg.seed,
                        "source": {
                            "generator": "idp-pi",
                            "rule": print_classical(entry.rule),
                            "context": " ".join(context),
                            "language_pair": entry.language_pair,
                        },
                    },
                )
            )
            break
        else:
            raise NoApplicableRule(f"task {index}: no applicable rule within the retry budget")
    return tasks
