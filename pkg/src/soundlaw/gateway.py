"""Prompt assembly and the chat-completion client.

Prompts render deterministically from the versioned templates in
soundlaw/templates.  Completions go through a content-addressed disk cache
(plus optional recorded fixture transcripts), so whole experiments replay
offline byte-for-byte; live calls hit any OpenAI-compatible endpoint with
bounded parallelism, per-key coalescing, and exponential-backoff retries.

Model output is interpreted through the closed constructor grammar only;
no transcript content is ever executed.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib.resources import files
from pathlib import Path

from .dsl import Diagnostic, ParsedProgramSet, extract_code_blocks, parse_program_text
from .phonology import SegmentInventory, preprocess
from .tasks import PBETask, word_to_str

TEMPLATE_IDS = ("sli-single-law", "rp-li-datagen", "rp-pi-datagen")

_TEMPLATE_FILES = {
    "sli-single-law": "sli_prompt.txt",
    "rp-li-datagen": "rp_li_datagen.txt",
    "rp-pi-datagen": "rp_pi_datagen.txt",
}

ADDITIONAL_INSTRUCTIONS = (
    "Do not import any other packages. Do not modify or repeat the definition "
    "of the BasicAction class. Return each action as python code in the format "
    "shown by the examples."
)


class GatewayError(Exception):
    def __init__(self, message: str, status: int | None = None):
        self.status = status
        super().__init__(message)


class CacheMiss(GatewayError):
    pass


class BudgetExhausted(GatewayError):
    pass


class WrongSeedCount(GatewayError):
    pass


def load_template(template_id: str) -> str:
    return (files("soundlaw") / "templates" / _TEMPLATE_FILES[template_id]).read_text("utf-8")


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class PromptBundle:
    template_id: str
    text: str
    bindings: dict = field(default_factory=dict)

    @property
    def prompt_hash(self) -> str:
        return _sha256(self.text)


def _word_list_literal(words) -> str:
    return "[" + ", ".join("'" + word_to_str(w) + "'" for w in words) + "]"


def build_datagen_prompt(kind: str, seed_words) -> PromptBundle:
    """Render the rp-li / rp-pi generation prompt for five seed words."""
    template_id = {"rp-li": "rp-li-datagen", "rp-pi": "rp-pi-datagen"}.get(kind)
    if template_id is None:
        raise GatewayError(f"unknown datagen prompt kind {kind!r}")
    seed_words = list(seed_words)
    if len(seed_words) != 5:
        raise WrongSeedCount(f"datagen prompts take exactly 5 seed words, got {len(seed_words)}")
    rendered = _word_list_literal(seed_words)
    text = load_template(template_id).replace("{input_words}", rendered)
    return PromptBundle(template_id, text, {"input_words": rendered})


def build_sli_prompt(task: PBETask) -> PromptBundle:
    """Render the six-section single-law induction prompt for one task."""
    before = "\n".join(
        f"{''.join(src)} -> {''.join(tgt)}" for src, tgt in zip(task.inputs, task.outputs)
    )
    after = "\n".join(
        f"{' '.join(preprocess(src))} -> {' '.join(preprocess(tgt))}"
        for src, tgt in zip(task.inputs, task.outputs)
    )
    demos = (files("soundlaw") / "templates" / "sli_demos.txt").read_text("utf-8").strip()
    code = (files("soundlaw") / "templates" / "basic_action.py.txt").read_text("utf-8").strip()
    bindings = {
        "word_list": before,
        "processed_word_list": after,
        "basic_action_demonstration": demos,
        "basic_action_code": code,
        "additional_instructions": ADDITIONAL_INSTRUCTIONS,
    }
    text = load_template("sli-single-law")
    for key, value in bindings.items():
        text = text.replace("{" + key + "}", value)
    return PromptBundle("sli-single-law", text, {"task_id": task.id})


@dataclass(frozen=True)
class GatewayConfig:
    endpoint: str = "http://localhost:8000/v1/chat/completions"
    model: str = "codestral-22b"
    temperature: float = 0.8
    samples: int = 20
    max_tokens: int = 1024
    retry_budget: int = 3
    backoff: float = 0.5
    cache_dir: str | None = None
    cache_only: bool = False
    max_parallel: int = 4
    api_key_env: str = "SOUNDLAW_API_KEY"
    timeout: float = 120.0


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    model: str
    temperature: float
    samples: int
    max_tokens: int

    def __post_init__(self):
        if self.samples < 1:
            raise GatewayError("sample count must be >= 1")


@dataclass(frozen=True)
class Transcript:
    text: str
    finish_reason: str = "stop"
    usage: dict = field(default_factory=dict)
    cached: bool = False
    prompt_hash: str = ""
    sample_index: int = 0


def _http_transport(endpoint: str, payload: dict, headers: dict, timeout: float):
    import requests

    resp = requests.post(endpoint, json=payload, headers=headers, timeout=timeout)
    return resp.status_code, resp.json() if resp.content else {}


def load_fixtures(path) -> dict[tuple[str, int], str]:
    """Recorded transcripts: JSONL of {prompt_hash, sample_index, content}."""
    store: dict[tuple[str, int], str] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            doc = json.loads(line)
            store[(doc["prompt_hash"], int(doc["sample_index"]))] = doc["content"]
    return store


class Gateway:
    """Completion client with fixtures, disk cache, and retries."""

    def __init__(self, config: GatewayConfig | None = None, transport=None, fixtures=None):
        self.config = config or GatewayConfig()
        self.transport = transport or _http_transport
        self.fixtures: dict[tuple[str, int], str] = dict(fixtures or {})
        self._lock = threading.Lock()
        self._inflight: dict[str, threading.Event] = {}
        # in-process result memo so coalescing holds even without a disk cache
        self._memo: dict[str, dict] = {}

    def add_fixtures(self, path) -> None:
        self.fixtures.update(load_fixtures(path))

    # -- cache ------------------------------------------------------------

    def _cache_key(self, req: CompletionRequest, prompt_hash: str, index: int) -> str:
        payload = json.dumps(
            {
                "endpoint": self.config.endpoint,
                "model": req.model,
                "temperature": req.temperature,
                "max_tokens": req.max_tokens,
                "prompt": prompt_hash,
                "sample": index,
            },
            sort_keys=True,
        )
        return _sha256(payload)

    def _cache_path(self, key: str) -> Path | None:
        if not self.config.cache_dir:
            return None
        return Path(self.config.cache_dir) / f"{key}.json"

    def _cache_read(self, key: str) -> dict | None:
        path = self._cache_path(key)
        if path is None or not path.exists():
            return None
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)

    def _cache_write(self, key: str, doc: dict) -> None:
        path = self._cache_path(key)
        if path is None:
            return
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, ensure_ascii=False)
        os.replace(tmp, path)

    # -- completion -------------------------------------------------------

    def _call_network(self, req: CompletionRequest, index: int) -> dict:
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.config.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        payload = {
            "model": req.model,
            "messages": [{"role": "user", "content": req.prompt}],
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
            "n": 1,
        }
        last_error: str = "no attempt made"
        for attempt in range(self.config.retry_budget + 1):
            if attempt:
                time.sleep(self.config.backoff * (2 ** (attempt - 1)))
            try:
                status, body = self.transport(
                    self.config.endpoint, payload, headers, self.config.timeout
                )
            except Exception as exc:  # transport-level failure: retry
                last_error = str(exc)
                continue
            if status == 200:
                try:
                    choice = body["choices"][0]
                    return {
                        "content": choice["message"]["content"],
                        "finish_reason": choice.get("finish_reason", "stop"),
                        "usage": body.get("usage", {}),
                    }
                except (KeyError, IndexError, TypeError) as exc:
                    raise GatewayError(f"malformed completion response: {exc}", status)
            if status in (429,) or status >= 500:
                last_error = f"HTTP {status}"
                continue
            raise GatewayError(f"completion request failed: HTTP {status}", status)
        raise BudgetExhausted(f"retry budget exhausted ({last_error})")

    def _stored(self, key: str) -> dict | None:
        with self._lock:
            doc = self._memo.get(key)
        if doc is not None:
            return doc
        return self._cache_read(key)

    def _one_sample(self, req: CompletionRequest, prompt_hash: str, index: int) -> Transcript:
        key = self._cache_key(req, prompt_hash, index)
        fixture = self.fixtures.get((prompt_hash, index))
        if fixture is not None:
            return Transcript(fixture, "stop", {}, True, prompt_hash, index)

        def from_doc(doc: dict) -> Transcript:
            return Transcript(
                doc["content"], doc.get("finish_reason", "stop"),
                doc.get("usage", {}), True, prompt_hash, index,
            )

        stored = self._stored(key)
        if stored is not None:
            return from_doc(stored)
        if self.config.cache_only:
            raise CacheMiss(f"no cached transcript for prompt {prompt_hash[:12]} sample {index}")
        # coalesce concurrent identical requests onto one network call
        while True:
            with self._lock:
                event = self._inflight.get(key)
                if event is None:
                    self._inflight[key] = threading.Event()
                    break
            event.wait()
            stored = self._stored(key)
            if stored is not None:
                return from_doc(stored)
            with self._lock:
                if key not in self._inflight:
                    # the other caller failed; take over
                    self._inflight[key] = threading.Event()
                    break
        try:
            doc = self._call_network(req, index)
            with self._lock:
                self._memo[key] = doc
            self._cache_write(key, doc)
        finally:
            with self._lock:
                self._inflight.pop(key).set()
        return Transcript(doc["content"], doc["finish_reason"], doc["usage"], False, prompt_hash, index)

    def complete(self, req: CompletionRequest) -> list[Transcript]:
        """Exactly req.samples transcripts, or an exception — never partial."""
        prompt_hash = _sha256(req.prompt)
        indices = list(range(req.samples))
        if req.samples == 1 or self.config.max_parallel <= 1 or self.config.cache_only:
            return [self._one_sample(req, prompt_hash, i) for i in indices]
        with ThreadPoolExecutor(max_workers=self.config.max_parallel) as pool:
            return list(pool.map(lambda i: self._one_sample(req, prompt_hash, i), indices))

    def complete_prompt(self, bundle: PromptBundle, n: int | None = None) -> list[Transcript]:
        req = CompletionRequest(
            prompt=bundle.text,
            model=self.config.model,
            temperature=self.config.temperature,
            samples=n if n is not None else self.config.samples,
            max_tokens=self.config.max_tokens,
        )
        return self.complete(req)

    def build_datagen_prompt(self, kind: str, seed_words) -> PromptBundle:
        return build_datagen_prompt(kind, seed_words)


def extract_programs(transcript: Transcript, inv: SegmentInventory) -> ParsedProgramSet:
    """Code blocks -> constructor grammar -> laws, diagnostics preserved."""
    blocks, fence_diags = extract_code_blocks(transcript.text)
    entries = []
    diagnostics = list(fence_diags)
    for block in blocks:
        parsed = parse_program_text(block, inv)
        entries.extend(parsed.entries)
        diagnostics.extend(parsed.diagnostics)
    if transcript.prompt_hash:
        diagnostics = [
            Diagnostic(d.code, f"[{transcript.prompt_hash[:12]}#{transcript.sample_index}] {d.message}", d.span)
            for d in diagnostics
        ]
    return ParsedProgramSet(tuple(entries), tuple(diagnostics))
