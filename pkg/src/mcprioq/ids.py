"""Node identifier validation.

Node ids appear verbatim in the comma-separated transition stream and the
whitespace-separated snapshot format, so they must be non-empty and must not
contain commas, whitespace, or control characters (Unicode category Cc,
i.e. U+0000-U+001F and U+007F-U+009F).
"""

import re

from .errors import InputError

# \s is unicode-aware on str patterns, so this also rejects NBSP-style
# exotic whitespace; the explicit ranges are the Cc control blocks.
_FORBIDDEN = re.compile(r"[,\s\x00-\x1f\x7f-\x9f]")


def validate_node_id(node_id: str) -> str:
    """Return node_id unchanged or raise InputError."""
    if not isinstance(node_id, str):
        raise InputError(f"node id must be a string, got {type(node_id).__name__}")
    if not node_id:
        raise InputError("node id must be non-empty")
    m = _FORBIDDEN.search(node_id)
    if m is not None:
        raise InputError(
            f"node id {node_id!r} contains forbidden character {m.group()!r}"
        )
    return node_id
