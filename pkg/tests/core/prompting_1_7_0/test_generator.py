"""Tests for view generation and corpus merging."""
import orjson
import pytest

from core.data_1_2_0.views import ClassViews, build_corpus
from core.prompting_1_7_0.cache import PromptCache, cache_key
from core.prompting_1_7_0.client import LlmResponse, LlmSettings
from core.prompting_1_7_0.generator import (
    generate_views,
    generate_views_async,
    load_class_list,
    load_example_pool,
    merge_views,
    temperature_sweep,
)
from core.prompting_1_7_0.planner import Example, ExamplePool, plan_prompts
from core.utils.errors import (
    EmptyGenerationError,
    FormatError,
    LlmRequestError,
    PoolSizeError,
    ViewCorpusError,
)

CLASSES = {"cardinal": "seen", "crow": "seen", "robin": "val", "wren": "unseen", "finch": "unseen"}


class CountingClient:
    """In-memory client whose reply is derived from the prompt."""

    model_id = "counting"

    def __init__(self, reply=None):
        self.calls = 0
        self.reply = reply

    async def complete(self, request):
        self.calls += 1
        if self.reply is not None:
            return LlmResponse(text=self.reply)
        return LlmResponse(text=f"Description {cache_key(request.prompt, request.temperature, 'x')[:8]}")


class FailingClient(CountingClient):
    async def complete(self, request):
        raise LlmRequestError("HTTP 503: busy")


@pytest.fixture
def plan():
    pool = ExamplePool(examples=[Example(class_name=n, description=f"{n} facts.") for n in ("A", "B", "C", "R")])
    return plan_prompts(pool, list(CLASSES), "birds")


@pytest.mark.asyncio
async def test_cold_then_warm_cache(tmp_path, plan):
    """Test request counting and the cache contract.

    This test verifies that:
    1. 5 classes with 3 views make 15 requests on a cold cache
    2. A warm cache makes no requests and yields an identical corpus
    3. Every view is tagged as generated
    """
    cold = CountingClient()
    first = await generate_views_async(plan, CLASSES, cold, PromptCache(tmp_path))
    assert cold.calls == 15
    warm = CountingClient()
    second = await generate_views_async(plan, CLASSES, warm, PromptCache(tmp_path))
    assert warm.calls == 0
    assert first == second
    assert first.q == 3
    assert all(c.source_tags == ["llm"] * 3 for c in first.classes)
    assert first.split_of("wren") == "unseen"


@pytest.mark.asyncio
async def test_generation_errors(tmp_path, plan):
    """Test failure reporting.

    This test verifies that:
    1. A blank reply raises EmptyGenerationError
    2. A client failure is re-raised naming the class and view
    3. A class without a split raises ViewCorpusError
    """
    with pytest.raises(EmptyGenerationError):
        await generate_views_async(plan, CLASSES, CountingClient(reply="  \n"), PromptCache(tmp_path / "a"))
    with pytest.raises(LlmRequestError, match="view 0"):
        await generate_views_async(plan, CLASSES, FailingClient(), PromptCache(tmp_path / "b"))
    partial = {k: v for k, v in CLASSES.items() if k != "finch"}
    with pytest.raises(ViewCorpusError, match="finch"):
        await generate_views_async(plan, partial, CountingClient(), PromptCache(tmp_path / "c"))


def test_mock_fixtures_round_trip(tmp_path, plan):
    """Test generation from a fixture directory.

    This test verifies that:
    1. The corpus holds the fixture texts verbatim, in view order
    """
    fixtures = tmp_path / "fixtures"
    fixtures.mkdir()
    for item in plan:
        key = cache_key(item.prompt, 0.9, "default")
        (fixtures / f"{key}.txt").write_text(f"{item.class_name} view {item.view}")
    corpus = generate_views(plan, CLASSES, tmp_path / "cache", settings=LlmSettings(model_id="default"),
                            mock_dir=fixtures, temperature=0.9)
    assert corpus.get("crow").views == ["crow view 0", "crow view 1", "crow view 2"]


def test_temperature_sweep(tmp_path, plan):
    """Test one corpus per temperature.

    This test verifies that:
    1. Each temperature reads its own fixtures
    """
    fixtures = tmp_path / "fixtures"
    fixtures.mkdir()
    for t in (0.5, 1.0):
        for item in plan:
            (fixtures / f"{cache_key(item.prompt, t, 'default')}.txt").write_text(f"t={t}")
    sweep = temperature_sweep(plan, CLASSES, [0.5, 1.0], tmp_path / "cache",
                              settings=LlmSettings(model_id="default"), mock_dir=fixtures)
    assert sweep[0.5].get("wren").views[0] == "t=0.5"
    assert sweep[1.0].get("wren").views[0] == "t=1.0"


def _corpus(tag, views_per_class, names=("cat", "zebra")):
    splits = {"cat": "seen", "zebra": "unseen", "okapi": "unseen"}
    return build_corpus(
        ClassViews(name=n, split=splits[n], views=[f"{tag} {n} {i}" for i in range(views_per_class)],
                   source_tags=[tag] * views_per_class)
        for n in names
    )


def test_merge_views():
    """Test merging generated and curated views.

    This test verifies that:
    1. 3 generated plus 1 curated view gives q = 4
    2. Source tags follow their views
    3. An empty extra corpus leaves the input unchanged
    4. Differing unseen classes raise ViewCorpusError
    """
    merged = merge_views(_corpus("llm", 3), _corpus("wiki", 1))
    assert merged.q == 4
    assert merged.get("zebra").source_tags == ["llm", "llm", "llm", "wiki"]
    assert merged.get("zebra").views[-1] == "wiki zebra 0"
    llm = _corpus("llm", 3)
    assert merge_views(llm, build_corpus([])) is llm
    with pytest.raises(ViewCorpusError, match="unseen"):
        merge_views(llm, _corpus("wiki", 1, names=("cat", "okapi")))


def test_merge_without_tags():
    """Test merging untagged corpora.

    This test verifies that:
    1. Missing tags become 'unspecified'
    """
    plain = build_corpus([ClassViews(name="cat", split="seen", views=["x"])])
    merged = merge_views(_corpus("llm", 2, names=("cat",)), plain)
    assert merged.get("cat").source_tags == ["llm", "llm", "unspecified"]


def test_input_files(tmp_path):
    """Test the class list and example pool readers.

    This test verifies that:
    1. The class list maps names to splits in file order
    2. A pool of three examples for three views raises PoolSizeError
    3. Malformed files raise FormatError
    """
    classes = tmp_path / "classes.json"
    classes.write_bytes(orjson.dumps({"classes": [{"name": "wren", "split": "unseen"},
                                                  {"name": "crow", "split": "seen"}]}))
    assert load_class_list(classes) == {"wren": "unseen", "crow": "seen"}

    examples = tmp_path / "examples.json"
    examples.write_bytes(orjson.dumps({"examples": [{"class_name": n, "description": "d"} for n in "ABC"]}))
    with pytest.raises(PoolSizeError):
        load_example_pool(examples, f=3)
    assert load_example_pool(examples, f=2).reserve == 2

    examples.write_bytes(b"{")
    with pytest.raises(FormatError):
        load_example_pool(examples)
    classes.write_bytes(orjson.dumps({"classes": [{"name": "wren", "split": "test"}]}))
    with pytest.raises(FormatError, match="split"):
        load_class_list(classes)
