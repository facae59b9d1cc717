"""
Language-model clients: an HTTP client and a fixture-backed mock.

Wire protocol: POST {"prompt", "temperature", "max_tokens"} with a bearer
token; a 200 response carries {"text"}.
"""

import asyncio
from pathlib import Path
from typing import Awaitable, Callable, Optional, Union

import httpx
import orjson
from pydantic import BaseModel, ConfigDict, Field
from pydantic_settings import BaseSettings, SettingsConfigDict

from core.prompting_1_7_0.cache import cache_key
from core.utils.config import config
from core.utils.errors import ConfigError, LlmRequestError
from core.utils.logging import get_logger

logger = get_logger(__name__)

RETRYABLE_STATUS = {408, 429, 500, 502, 503, 504}


class LlmSettings(BaseSettings):
    """Endpoint settings read from LLM_* environment variables (and .env)."""

    model_config = SettingsConfigDict(env_prefix="LLM_", env_file=".env", extra="ignore")

    endpoint: Optional[str] = None
    api_key: Optional[str] = None
    model_id: str = "default"
    timeout: float = Field(60.0, gt=0)
    max_in_flight: int = Field(config["llm"]["max_in_flight"], ge=1)
    retries: int = Field(config["llm"]["retries"], ge=0)
    backoff_seconds: float = Field(config["llm"]["backoff_seconds"], ge=0)


class LlmRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    prompt: str
    temperature: float = Field(config["llm"]["temperature"], ge=0.0, le=2.0)
    max_tokens: int = Field(config["llm"]["max_tokens"], ge=1)


class LlmResponse(BaseModel):
    text: str


class LlmClient:
    """Async HTTP client with retries and exponential backoff."""

    def __init__(self, settings: Optional[LlmSettings] = None, transport: Optional[httpx.AsyncBaseTransport] = None,
                 sleep: Callable[[float], Awaitable[None]] = asyncio.sleep):
        self.settings = settings or LlmSettings()
        if not self.settings.endpoint:
            raise ConfigError("LLM_ENDPOINT is not set; use a mock fixture directory instead")
        self.model_id = self.settings.model_id
        self.client = httpx.AsyncClient(transport=transport, timeout=self.settings.timeout)
        self._sleep = sleep
        self.calls = 0
        self.attempts = 0

    async def __aenter__(self) -> "LlmClient":
        return self

    async def __aexit__(self, *exc_info) -> None:
        await self.aclose()

    async def aclose(self) -> None:
        await self.client.aclose()

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.settings.api_key:
            headers["Authorization"] = f"Bearer {self.settings.api_key}"
        return headers

    async def complete(self, request: LlmRequest) -> LlmResponse:
        """POST one request; retry transport failures and retryable statuses.

        Raises:
            LlmRequestError: On a non-retryable status, a malformed body, or
                when every attempt failed.
        """
        self.calls += 1
        body = orjson.dumps(request.model_dump())
        last_error = "no attempt made"
        for attempt in range(self.settings.retries + 1):
            if attempt:
                delay = self.settings.backoff_seconds * 2 ** (attempt - 1)
                logger.warning(f"Retrying LLM request in {delay:.1f}s ({last_error})")
                await self._sleep(delay)
            self.attempts += 1
            try:
                response = await self.client.post(self.settings.endpoint, content=body, headers=self._headers())
            except httpx.TransportError as e:
                last_error = f"transport error: {e}"
                continue
            if response.status_code == 200:
                try:
                    return LlmResponse.model_validate(orjson.loads(response.content))
                except (orjson.JSONDecodeError, ValueError) as e:
                    raise LlmRequestError(f"malformed response body: {e}") from e
            last_error = f"HTTP {response.status_code}: {response.text[:200]}"
            if response.status_code not in RETRYABLE_STATUS:
                break
        logger.error(f"LLM request failed: {last_error}")
        raise LlmRequestError(last_error)


class MockLlmClient:
    """Serves ``<cache key>.txt`` fixtures instead of calling an endpoint."""

    def __init__(self, fixture_dir: Union[str, Path], model_id: str = "default"):
        self.fixture_dir = Path(fixture_dir)
        self.model_id = model_id
        self.calls = 0

    async def __aenter__(self) -> "MockLlmClient":
        return self

    async def __aexit__(self, *exc_info) -> None:
        return None

    async def complete(self, request: LlmRequest) -> LlmResponse:
        self.calls += 1
        key = cache_key(request.prompt, request.temperature, self.model_id)
        path = self.fixture_dir / f"{key}.txt"
        if not path.is_file():
            raise LlmRequestError(f"mock fixture {path} is missing")
        return LlmResponse(text=path.read_bytes().decode("utf-8"))
