"""propdetect: detection and analysis of coordinated propaganda accounts in
Telegram-style chat corpora.

Subsystems: corpus ingestion and deletion diffing, label augmentation,
coordination graphs, topic clustering, embeddings plumbing, handcrafted
features, detector models (GBT / MLP / trigger-reply pair), the evaluation
harness, a streaming moderation bot, and a synthetic corpus generator.
"""

__version__ = "0.1.0"

from .corpus import (  # noqa: F401
    Account,
    Corpus,
    Message,
    ParseResult,
    build_accounts,
    diff_deleted,
    merge,
    parse_export,
    parse_stream,
)
from .errors import (  # noqa: F401
    ConfigError,
    DataError,
    FormatError,
    ParseError,
    PropdetectError,
    SchemaMismatchError,
)
