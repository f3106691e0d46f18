import json
import threading

import pytest

from soundlaw import gateway
from soundlaw.gateway import (
    BudgetExhausted,
    CacheMiss,
    CompletionRequest,
    Gateway,
    GatewayConfig,
    Transcript,
    WrongSeedCount,
    build_datagen_prompt,
    build_sli_prompt,
    extract_programs,
    load_fixtures,
)
from soundlaw.tasks import PBETask

SLI_SECTION_MARKERS = [
    "You would like to implement a BasicAction",
    "A Basic Action is an object of the class BasicAction",
    "Here is a table of source words and target words BEFORE preprocess:",
    "Here are some examples of how actions can be implemented.",
    "Here is the definition of the BasicAction class:",
    "Additional instructions:",
]


def sample_task(inv):
    return PBETask(
        "p-0",
        "rp-ri",
        (inv.segment("am"), inv.segment("tap")),
        (inv.segment("em"), inv.segment("tap")),
        None,
        {},
    )


def ok_transport(content="hello"):
    calls = []

    def transport(endpoint, payload, headers, timeout):
        calls.append(payload)
        return 200, {
            "choices": [{"message": {"content": content}, "finish_reason": "stop"}],
            "usage": {"total_tokens": 7},
        }

    transport.calls = calls
    return transport


# -- prompts ------------------------------------------------------------------


def test_sli_prompt_sections_in_order(inv):
    bundle = build_sli_prompt(sample_task(inv))
    positions = [bundle.text.find(m) for m in SLI_SECTION_MARKERS]
    assert all(p >= 0 for p in positions)
    assert positions == sorted(positions)
    assert bundle.text.count(SLI_SECTION_MARKERS[0]) == 1


def test_sli_prompt_preprocessed_rows(inv):
    bundle = build_sli_prompt(sample_task(inv))
    assert "# @ a @ m @ #" in bundle.text
    assert "am -> em" in bundle.text


def test_prompt_hash_deterministic(inv):
    a = build_sli_prompt(sample_task(inv))
    b = build_sli_prompt(sample_task(inv))
    assert a.text == b.text and a.prompt_hash == b.prompt_hash


def test_datagen_prompt_terminal_words(inv):
    seeds = [inv.segment(w) for w in ("san", "an", "lam", "wam", "ap")]
    bundle = build_datagen_prompt("rp-pi", seeds)
    assert bundle.text.rstrip().endswith("Example nonsense words: ['s a n', 'a n', 'l a m', 'w a m', 'a p']")
    li = build_datagen_prompt("rp-li", seeds)
    assert "Now write more actions that follow this format:" in li.text


def test_datagen_prompt_seed_count(inv):
    with pytest.raises(WrongSeedCount):
        build_datagen_prompt("rp-pi", [inv.segment("a")] * 4)


def test_rp_li_prompt_matches_golden_template(inv):
    seeds = [inv.segment(w) for w in ("san", "an", "lam", "wam", "ap")]
    bundle = build_datagen_prompt("rp-li", seeds)
    golden = gateway.load_template("rp-li-datagen").replace(
        "{input_words}", "['s a n', 'a n', 'l a m', 'w a m', 'a p']"
    )
    assert bundle.text == golden


# -- completion client -----------------------------------------------------------


def request(prompt="p", samples=1):
    return CompletionRequest(prompt=prompt, model="m", temperature=0.8, samples=samples, max_tokens=64)


def test_complete_returns_exactly_s_transcripts(tmp_path):
    transport = ok_transport()
    gw = Gateway(GatewayConfig(cache_dir=str(tmp_path)), transport=transport)
    transcripts = gw.complete(request(samples=4))
    assert len(transcripts) == 4
    assert all(t.text == "hello" for t in transcripts)
    assert len(transport.calls) == 4  # one call per sample index


def test_second_request_served_from_cache(tmp_path):
    transport = ok_transport()
    gw = Gateway(GatewayConfig(cache_dir=str(tmp_path)), transport=transport)
    first = gw.complete(request())
    assert not first[0].cached
    again = gw.complete(request())
    assert again[0].cached and again[0].text == first[0].text
    assert len(transport.calls) == 1  # zero new network calls
    # byte-identical across the cached and live path
    assert again[0].text == first[0].text


def test_cache_only_miss(tmp_path):
    gw = Gateway(GatewayConfig(cache_dir=str(tmp_path), cache_only=True))
    with pytest.raises(CacheMiss):
        gw.complete(request())


def test_fixture_store(tmp_path, inv):
    import hashlib

    prompt = "fixture prompt"
    phash = hashlib.sha256(prompt.encode()).hexdigest()
    path = tmp_path / "fx.jsonl"
    path.write_text(json.dumps({"prompt_hash": phash, "sample_index": 0, "content": "fixed"}) + "\n")
    gw = Gateway(GatewayConfig(cache_only=True), fixtures=load_fixtures(path))
    (t,) = gw.complete(request(prompt=prompt))
    assert t.text == "fixed" and t.cached


def test_retry_then_success(tmp_path):
    state = {"n": 0}

    def flaky(endpoint, payload, headers, timeout):
        state["n"] += 1
        if state["n"] < 3:
            return 503, {}
        return 200, {"choices": [{"message": {"content": "ok"}, "finish_reason": "stop"}]}

    gw = Gateway(GatewayConfig(cache_dir=str(tmp_path), backoff=0.0), transport=flaky)
    (t,) = gw.complete(request())
    assert t.text == "ok" and state["n"] == 3


def test_no_partial_results_on_midway_failure(tmp_path):
    state = {"n": 0}

    def fails_later(endpoint, payload, headers, timeout):
        state["n"] += 1
        if state["n"] >= 3:
            return 500, {}
        return 200, {"choices": [{"message": {"content": "x"}, "finish_reason": "stop"}]}

    gw = Gateway(
        GatewayConfig(cache_dir=str(tmp_path), retry_budget=0, backoff=0.0, max_parallel=1),
        transport=fails_later,
    )
    with pytest.raises(BudgetExhausted):
        gw.complete(request(samples=5))


def test_budget_exhausted():
    def always_down(endpoint, payload, headers, timeout):
        return 500, {}

    gw = Gateway(GatewayConfig(retry_budget=2, backoff=0.0), transport=always_down)
    with pytest.raises(BudgetExhausted):
        gw.complete(request())


def test_client_error_no_retry():
    calls = []

    def bad_request(endpoint, payload, headers, timeout):
        calls.append(1)
        return 400, {}

    gw = Gateway(GatewayConfig(retry_budget=3, backoff=0.0), transport=bad_request)
    with pytest.raises(gateway.GatewayError):
        gw.complete(request())
    assert len(calls) == 1


def test_coalescing_without_disk_cache():
    calls = []

    def slow(endpoint, payload, headers, timeout):
        calls.append(1)
        import time

        time.sleep(0.03)
        return 200, {"choices": [{"message": {"content": "memo"}, "finish_reason": "stop"}]}

    gw = Gateway(GatewayConfig(max_parallel=4), transport=slow)  # no cache_dir
    results = []
    threads = [
        threading.Thread(target=lambda: results.append(gw.complete(request())[0].text))
        for _ in range(4)
    ]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    assert results == ["memo"] * 4
    assert len(calls) == 1


def test_concurrent_identical_requests_coalesce(tmp_path):
    lock = threading.Lock()
    calls = []

    def slow(endpoint, payload, headers, timeout):
        with lock:
            calls.append(1)
        import time

        time.sleep(0.05)
        return 200, {"choices": [{"message": {"content": "one"}, "finish_reason": "stop"}]}

    gw = Gateway(GatewayConfig(cache_dir=str(tmp_path), max_parallel=4), transport=slow)
    results = []

    def worker():
        results.append(gw.complete(request())[0].text)

    threads = [threading.Thread(target=worker) for _ in range(4)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    assert results == ["one"] * 4
    assert len(calls) == 1


# -- program extraction -----------------------------------------------------------


def test_extract_programs(inv):
    text = """Some prose.

```python
action = BasicAction(predicates=[lambda x: x == 'a'], change_pos=[0], mapping_fn=[lambda x: 'e'])
```

```python
action = BasicAction(predicates=[lambda x: x == 't'], change_pos=[0], mapping_fn=[lambda x: '!'])
```
"""
    parsed = extract_programs(Transcript(text, prompt_hash="ff" * 32, sample_index=3), inv)
    assert len(parsed.laws) == 2


def test_extract_programs_prose_only(inv):
    parsed = extract_programs(Transcript("nothing to see"), inv)
    assert not parsed.laws


def test_extract_programs_redefinition_diagnostic(inv):
    text = (
        "class BasicAction:\n    pass\n\n"
        "BasicAction(predicates=[lambda x: x == 'a'], change_pos=[0], mapping_fn=[lambda x: 'e'])\n"
    )
    parsed = extract_programs(Transcript(text), inv)
    assert len(parsed.laws) == 1
    assert any(d.code == "redefinition" for d in parsed.diagnostics)
