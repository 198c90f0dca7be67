"""Streaming moderation bot: score trigger-reply pairs live, optionally act.

Events arrive as corpus-schema JSONL messages. Triggers are resolved from a
bounded per-channel LRU of recent messages; misses fall back to the
zero-trigger convention. Scoring is stateless, so identical events always get
identical verdicts. Acting mode calls a Telegram-Bot-API-shaped connector
with retries, one FIFO worker lane per channel hash.
"""

from __future__ import annotations

import json
import logging
import queue
import threading
import time
import zlib
from collections import OrderedDict
from dataclasses import dataclass, field
from statistics import mean, stdev

import numpy as np
import requests

from .corpus import Message, key_str
from .embeddings import EmbeddingStore, hash_embed, load_store
from .errors import ConfigError, DataError
from .models import PROPAGANDA, Verdict, build_pair_vector, load_model

log = logging.getLogger(__name__)

ACTION_LOG = "log"
ACTION_DELETE = "delete"
ACTION_DELETE_BAN = "delete+ban"


@dataclass
class BotConfig:
    pair_model_path: str
    reply_model_path: str | None = None
    embedding_source: str = "hash:128"   # hash:<dim> | store:<path> | http:<url>
    threshold: float = 0.5
    action: str = ACTION_LOG
    allowlist: set[str] | None = None    # None allows every channel
    api_base_url: str | None = None
    api_token: str | None = None
    on_missing_embedding: str = "skip"   # skip | fallback
    lru_size: int = 10_000
    retry_base_seconds: float = 0.5
    workers: int = 4

    def validate(self) -> None:
        if not 0.0 < self.threshold < 1.0:
            raise ConfigError("threshold must lie in (0, 1)")
        if self.action not in (ACTION_LOG, ACTION_DELETE, ACTION_DELETE_BAN):
            raise ConfigError(f"unknown action {self.action!r}")
        if self.action != ACTION_LOG and not (self.api_base_url and self.api_token):
            raise ConfigError("acting mode requires api_base_url and api_token")
        if self.on_missing_embedding not in ("skip", "fallback"):
            raise ConfigError("on_missing_embedding must be skip or fallback")
        kind = self.embedding_source.split(":", 1)[0]
        if kind not in ("hash", "store", "http"):
            raise ConfigError(f"unknown embedding source {self.embedding_source!r}")


class Embedder:
    """Resolves message texts to vectors per the configured source."""

    def __init__(self, source: str, dim_hint: int | None = None):
        self.kind, _, self.arg = source.partition(":")
        self.store: EmbeddingStore | None = None
        if self.kind == "hash":
            self.dim = int(self.arg or dim_hint or 128)
        elif self.kind == "store":
            self.store = load_store(self.arg)
            self.dim = self.store.dim
        elif self.kind == "http":
            self.dim = dim_hint or 0  # learned from the first response
        else:
            raise ConfigError(f"unknown embedding source kind {self.kind!r}")

    def embed_message(self, message: Message) -> np.ndarray | None:
        if self.kind == "hash":
            return hash_embed(message.text, self.dim)
        if self.kind == "store":
            return self.store.get(key_str(message.channel_id, message.message_id))
        resp = requests.post(f"{self.arg.rstrip('/')}/embed",
                             json={"texts": [message.text]}, timeout=10)
        resp.raise_for_status()
        payload = resp.json()
        self.dim = int(payload["dim"])
        return np.asarray(payload["vectors"][0], dtype=np.float32)


class TriggerCache:
    """Bounded per-channel LRU of recent messages for reply resolution."""

    def __init__(self, size: int = 10_000):
        self.size = size
        self._channels: dict[str, OrderedDict] = {}

    def add(self, message: Message) -> None:
        cache = self._channels.setdefault(message.channel_id, OrderedDict())
        cache[message.message_id] = message
        cache.move_to_end(message.message_id)
        while len(cache) > self.size:
            cache.popitem(last=False)

    def resolve(self, message: Message) -> Message | None:
        if message.reply_to is None:
            return None
        return self._channels.get(message.channel_id, {}).get(message.reply_to)


class TelegramConnector:
    """Minimal Bot-API client: long-poll updates plus the two acting calls.

    Acting calls retry with exponential backoff (3 attempts) before giving up.
    """

    def __init__(self, base_url: str, token: str, retry_base: float = 0.5):
        self.base = f"{base_url.rstrip('/')}/bot{token}"
        self.retry_base = retry_base

    def get_updates(self, offset: int = 0, timeout: int = 30) -> list[dict]:
        resp = requests.get(f"{self.base}/getUpdates",
                            params={"timeout": timeout, "offset": offset},
                            timeout=timeout + 10)
        payload = resp.json()
        if not payload.get("ok"):
            raise DataError(f"getUpdates rejected: {payload}")
        return payload["result"]

    def _post(self, method: str, payload: dict) -> bool:
        last_error = None
        for attempt in range(3):
            try:
                resp = requests.post(f"{self.base}/{method}", json=payload, timeout=10)
                body = resp.json()
                if body.get("ok"):
                    return True
                last_error = body
            except (requests.RequestException, json.JSONDecodeError) as exc:
                last_error = exc
            time.sleep(self.retry_base * (2 ** attempt))
        log.error("%s failed after 3 attempts: %s", method, last_error)
        return False

    def delete_message(self, chat_id: str, message_id: int) -> bool:
        return self._post("deleteMessage", {"chat_id": chat_id, "message_id": message_id})

    def ban_chat_member(self, chat_id: str, user_id: str) -> bool:
        return self._post("banChatMember", {"chat_id": chat_id, "user_id": user_id})


@dataclass
class ScoredEvent:
    message: Message
    verdict: Verdict | None
    trigger_resolved: bool
    latency_seconds: float
    error: str | None = None


@dataclass
class ActionRecord:
    channel_id: str
    message_id: int
    account_id: str | None
    action: str
    ok: bool


class ModBot:
    """Loads the configured models once; scores events statelessly."""

    def __init__(self, config: BotConfig):
        config.validate()
        self.config = config
        self.pair_model = load_model(config.pair_model_path)
        self.reply_model = (load_model(config.reply_model_path)
                            if config.reply_model_path else None)
        dim = self.pair_model.embedding_dim or None
        self.embedder = Embedder(config.embedding_source, dim_hint=dim)
        self.cache = TriggerCache(config.lru_size)

    def verdict_for(self, message: Message, trigger: Message | None) -> ScoredEvent:
        """Embed the pair, score, threshold; walltime is recorded."""
        t0 = time.perf_counter()
        try:
            reply_vec = self.embedder.embed_message(message)
        except (requests.RequestException, ValueError, KeyError) as exc:
            reply_vec, err = None, str(exc)
        else:
            err = None
        if reply_vec is None:
            if self.config.on_missing_embedding == "fallback" and self.reply_model \
                    and self.embedder.kind == "store":
                pass  # store miss: fallback needs a vector too; nothing to score
            msg = err or "embedding unavailable"
            log.warning("skipping %s: %s", message.key, msg)
            return ScoredEvent(message, None, trigger is not None,
                               time.perf_counter() - t0, error=msg)

        trigger_vec = None
        if trigger is not None:
            try:
                trigger_vec = self.embedder.embed_message(trigger)
            except (requests.RequestException, ValueError, KeyError):
                trigger_vec = None

        if trigger_vec is None and self.config.on_missing_embedding == "fallback" \
                and self.reply_model is not None:
            score = float(self.reply_model.predict(reply_vec.reshape(1, -1))[0])
            model_id = "reply-fallback"
        else:
            pair = build_pair_vector(trigger_vec, reply_vec)
            score = float(self.pair_model.predict(pair.reshape(1, -1))[0])
            model_id = "pair"
        verdict = Verdict.from_score(score, self.config.threshold, model_id)
        return ScoredEvent(message, verdict, trigger is not None,
                           time.perf_counter() - t0)


class ActionDispatcher:
    """Per-channel FIFO action lanes over a small worker pool.

    A channel always hashes to the same worker, so its delete/ban calls are
    issued in verdict order; different channels proceed in parallel.
    """

    def __init__(self, connector: TelegramConnector, workers: int = 4):
        self.connector = connector
        self.queues: list[queue.Queue] = [queue.Queue() for _ in range(workers)]
        self.records: list[ActionRecord] = []
        self._lock = threading.Lock()
        self.threads = [threading.Thread(target=self._run, args=(q,), daemon=True)
                        for q in self.queues]
        for t in self.threads:
            t.start()

    def _lane(self, channel_id: str) -> queue.Queue:
        return self.queues[zlib.crc32(channel_id.encode("utf-8")) % len(self.queues)]

    def _run(self, q: queue.Queue) -> None:
        while True:
            item = q.get()
            if item is None:
                return
            message, action = item
            ok = self.connector.delete_message(message.channel_id, message.message_id)
            with self._lock:
                self.records.append(ActionRecord(message.channel_id, message.message_id,
                                                 message.account_id, "delete", ok))
            if action == ACTION_DELETE_BAN and message.account_id is not None:
                ok = self.connector.ban_chat_member(message.channel_id, message.account_id)
                with self._lock:
                    self.records.append(ActionRecord(message.channel_id, message.message_id,
                                                     message.account_id, "ban", ok))

    def submit(self, message: Message, action: str) -> None:
        self._lane(message.channel_id).put((message, action))

    def close(self) -> list[ActionRecord]:
        for q in self.queues:
            q.put(None)
        for t in self.threads:
            t.join(timeout=30)
        return self.records


def parse_event(line: str) -> Message | None:
    try:
        return Message.from_dict(json.loads(line))
    except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
        log.warning("malformed event dropped: %s", exc)
        return None


def serve(config: BotConfig, events) -> tuple[list[ScoredEvent], list[ActionRecord]]:
    """Score an event stream in arrival order; act on propaganda verdicts.

    ``events`` yields Message objects or JSONL strings. Verdicts are emitted
    for every valid event; acting is restricted to allowlisted channels. The
    stream close flushes pending actions.
    """
    bot = ModBot(config)
    dispatcher = None
    if config.action != ACTION_LOG:
        connector = TelegramConnector(config.api_base_url, config.api_token,
                                      retry_base=config.retry_base_seconds)
        dispatcher = ActionDispatcher(connector, workers=config.workers)

    scored: list[ScoredEvent] = []
    for event in events:
        message = parse_event(event) if isinstance(event, str) else event
        if message is None:
            continue
        trigger = bot.cache.resolve(message)
        outcome = bot.verdict_for(message, trigger)
        bot.cache.add(message)
        scored.append(outcome)
        allowed = config.allowlist is None or message.channel_id in config.allowlist
        if (dispatcher is not None and allowed and outcome.verdict is not None
                and outcome.verdict.label == PROPAGANDA):
            dispatcher.submit(message, config.action)

    actions = dispatcher.close() if dispatcher is not None else []
    return scored, actions


def latency_bench(bot: ModBot, pairs: list[tuple[Message, Message | None]],
                  ) -> tuple[float, float | None, list[float]]:
    """Mean and standard deviation of per-pair scoring walltime in seconds."""
    if not pairs:
        raise DataError("no pairs to benchmark")
    samples = [bot.verdict_for(msg, trig).latency_seconds for msg, trig in pairs]
    return (mean(samples), stdev(samples) if len(samples) > 1 else None, samples)
