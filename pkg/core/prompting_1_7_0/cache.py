"""
On-disk cache of generated views, one UTF-8 file per request key.
"""

from pathlib import Path
from typing import Optional, Union

from core.utils.helpers import atomic_write_bytes, stable_hash


def cache_key(prompt: str, temperature: float, model_id: str) -> str:
    """Content hash of everything that determines a generation."""
    return stable_hash({"prompt": prompt, "temperature": float(temperature), "model": model_id})


class PromptCache:
    """Directory of ``<key>.txt`` files; writes are atomic."""

    def __init__(self, directory: Union[str, Path]):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.hits = 0

    def path(self, key: str) -> Path:
        return self.directory / f"{key}.txt"

    def get(self, key: str) -> Optional[str]:
        path = self.path(key)
        if not path.is_file():
            return None
        self.hits += 1
        return path.read_bytes().decode("utf-8")

    def put(self, key: str, text: str) -> None:
        atomic_write_bytes(self.path(key), text.encode("utf-8"))
