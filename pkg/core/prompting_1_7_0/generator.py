"""
View generation from a prompt plan, and corpus merging.
"""

import asyncio
from pathlib import Path
from time import time
from typing import Dict, List, Literal, Mapping, Optional, Sequence, Union

import orjson
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from core.data_1_2_0.views import SPLITS, ClassViews, ViewCorpus, build_corpus
from core.prompting_1_7_0.cache import PromptCache, cache_key
from core.prompting_1_7_0.client import LlmClient, LlmRequest, LlmSettings, MockLlmClient
from core.prompting_1_7_0.planner import Example, ExamplePool, PlannedPrompt, PromptPlan
from core.utils.config import config
from core.utils.errors import EmptyGenerationError, FormatError, LlmRequestError, MissingFileError, ViewCorpusError
from core.utils.logging import get_logger

logger = get_logger(__name__)

UNSPECIFIED = "unspecified"


class ClassEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = Field(..., min_length=1)
    split: Literal["seen", "val", "unseen"]


class ClassList(BaseModel):
    model_config = ConfigDict(extra="forbid")

    classes: List[ClassEntry]


def _read_json_model(path: Union[str, Path], model: type) -> BaseModel:
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(path)
    try:
        return model.model_validate(orjson.loads(path.read_bytes()))
    except orjson.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON ({exc})", path=path) from exc
    except ValidationError as exc:
        first = exc.errors()[0]
        raise FormatError(f"{'.'.join(str(p) for p in first['loc'])}: {first['msg']}", path=path) from exc


def load_class_list(path: Union[str, Path]) -> Dict[str, str]:
    """Read {"classes": [{"name", "split"}]} into name → split, in file order."""
    return {e.name.strip(): e.split for e in _read_json_model(path, ClassList).classes}


class ExampleFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    examples: List[Example]


def load_example_pool(path: Union[str, Path], f: int = 3, k: int = 2) -> ExamplePool:
    """Read {"examples": [{"class_name", "description"}]} into a pool of f+1 examples.

    Raises:
        PoolSizeError: If the file does not hold exactly f+1 examples.
    """
    examples = _read_json_model(path, ExampleFile).examples
    return ExamplePool(examples=examples, f=f, k=k)


async def _generate_one(item: PlannedPrompt, client, cache: PromptCache, semaphore: asyncio.Semaphore,
                        temperature: float, max_tokens: int) -> str:
    key = cache_key(item.prompt, temperature, client.model_id)
    cached = cache.get(key)
    if cached is not None:
        return cached
    request = LlmRequest(prompt=item.prompt, temperature=temperature, max_tokens=max_tokens)
    async with semaphore:
        try:
            response = await client.complete(request)
        except LlmRequestError as exc:
            raise LlmRequestError(f"class {item.class_name!r} view {item.view}: {exc}") from exc
    if not response.text.strip():
        raise EmptyGenerationError(f"class {item.class_name!r} view {item.view}: empty description")
    cache.put(key, response.text)
    return response.text


async def generate_views_async(plan: PromptPlan, splits: Mapping[str, str], client, cache: PromptCache,
                               temperature: float = config["llm"]["temperature"],
                               max_tokens: int = config["llm"]["max_tokens"],
                               max_in_flight: int = config["llm"]["max_in_flight"]) -> ViewCorpus:
    """One request per (class, view); cached responses skip the client."""
    start_time = time()
    semaphore = asyncio.Semaphore(max_in_flight)
    items = list(plan)
    texts = await asyncio.gather(
        *(_generate_one(item, client, cache, semaphore, temperature, max_tokens) for item in items)
    )
    views: Dict[str, List[str]] = {}
    for item, text in zip(items, texts):
        views.setdefault(item.class_name, []).append(text)
    missing = [name for name in views if name not in splits]
    if missing:
        raise ViewCorpusError(f"no split given for class(es): {', '.join(missing[:5])}")
    corpus = build_corpus(
        ClassViews(name=name, split=splits[name], views=class_texts, source_tags=["llm"] * len(class_texts))
        for name, class_texts in views.items()
    )
    logger.info(f"Generated {len(items)} views for {len(views)} classes in {time() - start_time:.2f}s "
                f"({client.calls} client calls, {cache.hits} cache hits)")
    return corpus


def generate_views(plan: PromptPlan, splits: Mapping[str, str], cache_dir: Union[str, Path],
                   settings: Optional[LlmSettings] = None, mock_dir: Optional[Union[str, Path]] = None,
                   temperature: float = config["llm"]["temperature"],
                   max_tokens: int = config["llm"]["max_tokens"]) -> ViewCorpus:
    """Synchronous entry point: builds the client, generates, closes the client."""
    settings = settings or LlmSettings()
    cache = PromptCache(cache_dir)

    async def run() -> ViewCorpus:
        if mock_dir is not None:
            client = MockLlmClient(mock_dir, model_id=settings.model_id)
        else:
            client = LlmClient(settings)
        async with client:
            return await generate_views_async(plan, splits, client, cache, temperature=temperature,
                                              max_tokens=max_tokens, max_in_flight=settings.max_in_flight)

    return asyncio.run(run())


def temperature_sweep(plan: PromptPlan, splits: Mapping[str, str], temperatures: Sequence[float],
                      cache_dir: Union[str, Path], **kwargs) -> Dict[float, ViewCorpus]:
    """One corpus per temperature; each temperature has its own cache keys."""
    return {t: generate_views(plan, splits, cache_dir, temperature=t, **kwargs) for t in temperatures}


def _tags(record: ClassViews) -> List[str]:
    return list(record.source_tags) if record.source_tags else [UNSPECIFIED] * record.q


def merge_views(llm_corpus: ViewCorpus, extra_corpus: ViewCorpus) -> ViewCorpus:
    """Append each class's extra views after its generated ones, keeping source tags.

    An extra corpus with no classes leaves the generated corpus unchanged.

    Raises:
        ViewCorpusError: If the two corpora disagree on classes or splits.
    """
    if not extra_corpus.classes:
        return llm_corpus
    for split in SPLITS:
        ours = {c.name for c in llm_corpus.split(split)}
        theirs = {c.name for c in extra_corpus.split(split)}
        if ours != theirs:
            raise ViewCorpusError(
                f"{split} classes differ: only generated {sorted(ours - theirs)[:5]}, "
                f"only extra {sorted(theirs - ours)[:5]}"
            )
    merged = []
    for record in llm_corpus.classes:
        extra = extra_corpus.get(record.name)
        merged.append(ClassViews(name=record.name, split=record.split, views=record.views + extra.views,
                                 source_tags=_tags(record) + _tags(extra)))
    return build_corpus(merged, allow_ragged_views=True)
