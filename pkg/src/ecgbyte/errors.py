"""Error type shared across the toolkit.

Every contract violation raises :class:`EcgByteError` carrying a stable,
machine-parsable code. The CLI prints ``<code>: <message>`` on stderr and
exits 1; binding layers re-raise by code.
"""

from __future__ import annotations

# Stable error codes (part of the CLI/bindings contract).
E_IO = "E_IO"                      # unreadable/unwritable path
E_BAD_FORMAT = "E_BAD_FORMAT"      # malformed file contents
E_NO_TOKENIZER = "E_NO_TOKENIZER"  # tokenizer file missing
E_NONFINITE = "E_NONFINITE"        # NaN/Inf where finite values are required
E_DIMENSION = "E_DIMENSION"        # header/payload or shape mismatch
E_BAD_LEADS = "E_BAD_LEADS"        # missing, extra, or duplicate lead labels
E_BAD_PARAM = "E_BAD_PARAM"        # parameter outside its valid range
E_EMPTY_INPUT = "E_EMPTY_INPUT"    # empty stream/file where data is required
E_UNKNOWN_ID = "E_UNKNOWN_ID"      # token id absent from the vocabulary
E_RANGE = "E_RANGE"                # value outside the documented range


class EcgByteError(Exception):
    """Toolkit error with a machine-parsable code."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message
