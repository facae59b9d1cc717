"""
Prompt text for k-shot view generation.
"""

from typing import Optional, Sequence, Tuple

from core.utils.errors import ConfigError

TEMPLATE = (
    "A person wants to recognize {type} in images. They come across {name} and search online "
    "for facts about {name}. They think the following description of {name} is a good description."
)
BLOCK_SEPARATOR = "\n\n"


def render_block(type_word: str, class_name: str, description: Optional[str] = None) -> str:
    """Fill the template for one class.

    Example blocks append their description on the next line; the query block
    (``description=None``) stops after the template.

    Raises:
        ConfigError: If the type word or class name is empty.
    """
    type_word, class_name = type_word.strip(), class_name.strip()
    if not type_word:
        raise ConfigError("type word is empty")
    if not class_name:
        raise ConfigError("class name is empty")
    block = TEMPLATE.format(type=type_word, name=class_name)
    if description is not None:
        block += "\n" + description.strip()
    return block


def render_prompt(type_word: str, examples: Sequence[Tuple[str, str]], target: str) -> str:
    """Example blocks in the given order, then the query block, separated by blank lines."""
    blocks = [render_block(type_word, name, desc) for name, desc in examples]
    blocks.append(render_block(type_word, target))
    return BLOCK_SEPARATOR.join(blocks)
