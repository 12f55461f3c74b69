"""ECG tokenization toolkit.

Converts multi-lead ECG signals into discrete token sequences (filtering,
amplitude quantization to a letter alphabet, byte-pair encoding) and maps
tokens losslessly back to the symbols and approximately back to the
signal they came from.

The filtering and sampling stages live in the ``ecgbyte.preprocess`` and
``ecgbyte.sampling`` submodules; import them explicitly (they pull in
scipy/scikit-learn, which the tokenizer core does not need).
"""

from .errors import EcgByteError
from .records import (
    CANONICAL_12_LEAD,
    LEAD_ORDER_MIMIC,
    LEAD_ORDER_PTBXL,
    EcgRecord,
    LeadOrder,
    load_record,
    reorder_leads,
    save_record,
)
from .quantize import (
    NormalizationParams,
    concat_corpus,
    desymbolize,
    flatten,
    load_params,
    normalize,
    quantize_record,
    quantize_to_symbols,
    save_params,
)
from .bpe import (
    Tokenizer,
    expand,
    get_stats,
    load_tokenizer,
    merge,
    save_tokenizer,
    train,
)
from .codec import (
    TokenSpan,
    TrieNode,
    build_trie,
    decode,
    encode,
    encode_with_spans,
    read_encoded,
    write_encoded_binary,
    write_encoded_text,
)
from .sequence import SequenceLayout, SpecialTokens, assemble, loss_mask
from .analysis import (
    LengthSummary,
    compression_ratio,
    export_mapping,
    length_distribution,
    token_usage,
)

__version__ = "0.1.0"
TOKENIZER_FORMAT = "ecg-byte v1"
