"""Seeded synthetic corpora with planted ground truth for every subsystem.

The generator plants the behavioral contrasts the detectors rely on:
propaganda accounts reuse texts from a shared pool, reply to topic-matched
user messages, live briefly, and post in several channels; users write unique
long texts, repeat only trivial short ones, and mostly stay in one channel.
Every planted quantity (labels, topics, components, deletions, reply counts)
is returned so tests can compare pipeline output against generator truth.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

from .corpus import Corpus, Message, diff_deleted, merge, parse_timestamp
from .errors import ConfigError
from .labeling import (PROPAGANDA, PROVENANCE_EXTERNAL, USER, LabelSet)
from .topics import TopicAssignment
from . import wordlists

PROVENANCE_PLANTED = "planted"

_CONSONANTS = "bdfgklmnprstvz"
_VOWELS = "aeiou"
_CONSONANTS_CYR = "бвгдклмнпрстхз"
_VOWELS_CYR = "аеиоуы"


def _syllable_word(rng: random.Random, syllables: int, cyrillic: bool = False) -> str:
    cons = _CONSONANTS_CYR if cyrillic else _CONSONANTS
    vows = _VOWELS_CYR if cyrillic else _VOWELS
    parts = []
    for _ in range(syllables):
        parts.append(rng.choice(cons) + rng.choice(vows))
        if rng.random() < 0.35:   # closed syllables keep word lengths irregular
            parts.append(rng.choice(cons))
    return "".join(parts)


@dataclass
class TopicSpec:
    name: str
    vocab: list[str]
    start_day: int          # first day (inclusive) the topic is active
    end_day: int            # last day (inclusive)
    weight: float
    short_texts: bool = False
    event_day: int | None = None  # the triggering event; onset lags one day

    @property
    def keywords(self) -> list[str]:
        """Hot words that attract propaganda replies (reactivity cue)."""
        return self.vocab[:3]


@dataclass
class GenConfig:
    seed: int = 0
    channels: int = 3
    users: int = 120
    propaganda: int = 40
    components: int = 1
    study_days: int = 28
    cutoff_day: int = 17
    start: str = "2023-08-16T00:00:00Z"
    pool_size: int = 300
    pool_len_range: tuple[int, int] = (40, 400)
    short_len_range: tuple[int, int] = (12, 28)
    short_pool_share: float = 0.2
    persistent_topics: int = 4
    events_pre: int = 1
    events_post: int = 2
    vocab_per_topic: int = 12
    user_short_rate: float = 0.65
    user_long_len: tuple[int, int] = (31, 600)
    prop_msgs_range: tuple[int, int] = (18, 42)
    prop_lifespan_mean_hours: float = 18.0
    prop_channels_min: int = 2
    effectiveness_prop: float = 0.42
    effectiveness_user: float = 0.43
    deletion_rate_prop: float = 0.8
    deletion_rate_user: float = 0.1
    separability: float = 1.0
    hidden_username_rate: float = 0.28
    western_username_rate: float = 0.15
    style_tokens: list[str] | None = None   # override the propaganda style pool

    def validate(self) -> None:
        if self.channels < 1:
            raise ConfigError("need at least one channel")
        if self.users < 1 and self.propaganda > 0:
            raise ConfigError("propaganda replies require users to reply to")
        if self.users < 0 or self.propaganda < 0:
            raise ConfigError("counts must be non-negative")
        if not (0 < self.cutoff_day < self.study_days):
            raise ConfigError("cutoff_day must fall inside the study window")
        for lo, hi in (self.pool_len_range, self.short_len_range, self.user_long_len):
            if lo > hi or lo < 1:
                raise ConfigError(f"invalid length range ({lo}, {hi})")
        for rate in (self.deletion_rate_prop, self.deletion_rate_user,
                     self.user_short_rate, self.hidden_username_rate):
            if not 0.0 <= rate <= 1.0:
                raise ConfigError("rates must lie in [0, 1]")
        if self.effectiveness_user >= 1.0 or self.effectiveness_user < 0.0:
            raise ConfigError("effectiveness_user must lie in [0, 1)")
        if self.propaganda > 0 and self.components > self.propaganda:
            raise ConfigError("more components than propaganda accounts")


@dataclass
class PlantedStats:
    """Realized quantities counted by the generator, for oracle comparisons."""

    cutoff: datetime
    prop_accounts: list[str]
    user_accounts: list[str]
    components: dict[str, int]
    pool_texts: dict[int, list[str]]
    style_tokens: list[str]
    topic_names: list[str]
    topic_keywords: dict[str, list[str]]
    short_topic: str | None
    unseen_topics: set[str]
    event_onsets: dict[str, datetime]
    prop_messages: int = 0
    user_messages: int = 0
    deleted_prop: int = 0
    deleted_user: int = 0
    replies_to_prop: int = 0
    replies_to_user: int = 0
    prop_lifespan_median_hours: float = 0.0
    user_lifespan_median_hours: float = 0.0
    prop_channels_mean: float = 0.0
    prop_text_reuse: float = 0.0

    @property
    def effectiveness_prop(self) -> float:
        return self.replies_to_prop / self.prop_messages if self.prop_messages else 0.0

    @property
    def effectiveness_user(self) -> float:
        return self.replies_to_user / self.user_messages if self.user_messages else 0.0

    @property
    def deletion_ratio_prop(self) -> float:
        return self.deleted_prop / self.prop_messages if self.prop_messages else 0.0

    @property
    def deletion_ratio_user(self) -> float:
        return self.deleted_user / self.user_messages if self.user_messages else 0.0


@dataclass
class GenResult:
    corpus: Corpus
    labels: LabelSet
    topics: TopicAssignment
    stats: PlantedStats
    historical: list[Message]
    realtime: list[Message]


@dataclass
class _Draft:
    seq: int
    channel: str
    ts: int                       # epoch seconds
    account: str | None
    text: str
    topic: str | None
    cohort: str | None            # "propaganda" | "user" | None for owner posts
    reply_to_seq: int | None = None
    deleted: bool = False


@dataclass
class _UserSpec:
    account_id: str
    username: str | None
    first_name: str
    channels: list[str]
    window: tuple[int, int]       # epoch seconds
    budget: int


@dataclass
class _PoolText:
    text: str
    topic: str
    from_day: float = 0.0         # campaign rotation window
    to_day: float = 10_000.0


def _median(values: list[float]) -> float:
    if not values:
        return 0.0
    values = sorted(values)
    n = len(values)
    mid = n // 2
    return values[mid] if n % 2 else 0.5 * (values[mid - 1] + values[mid])


class _VocabFactory:
    """Draws unique pseudo-words so topics never collide on vocabulary."""

    def __init__(self, rng: random.Random):
        self.rng = rng
        self.used: set[str] = set()

    def word(self, syllables: int, cyrillic: bool) -> str:
        while True:
            w = _syllable_word(self.rng, syllables, cyrillic)
            if w not in self.used:
                self.used.add(w)
                return w

    def words(self, n: int, syllables: int, cyrillic: bool) -> list[str]:
        return [self.word(syllables, cyrillic) for _ in range(n)]


def _build_topics(rng: random.Random, cfg: GenConfig, vocab: _VocabFactory) -> list[TopicSpec]:
    # topics keep unique hot keywords but share part of a common political
    # lexicon: new topics are new, not a different language
    lexicon = vocab.words(10, 3, False) + vocab.words(10, 3, True)

    def topic_vocab(syllables: int, cyr: bool) -> list[str]:
        unique = vocab.words(max(cfg.vocab_per_topic - 4, 3), syllables, cyr)
        return unique + rng.sample(lexicon, min(4, len(lexicon)))

    topics: list[TopicSpec] = []
    for i in range(cfg.persistent_topics):
        cyr = i % 2 == 0
        topics.append(TopicSpec(
            name=f"topic-{i:02d}",
            vocab=topic_vocab(rng.randint(3, 4), cyr),
            start_day=0, end_day=cfg.study_days, weight=1.0))
    # the short-text topic: propaganda replies here are as short as user chatter
    topics.append(TopicSpec(
        name="topic-short",
        vocab=topic_vocab(2, False),
        start_day=0, end_day=cfg.study_days, weight=1.2, short_texts=True))
    for i in range(cfg.events_pre):
        event_day = 5 + 3 * i
        topics.append(TopicSpec(
            name=f"event-pre-{i}",
            vocab=topic_vocab(4, i % 2 == 1),
            start_day=event_day + 1,                      # onset lags the event
            end_day=min(event_day + 6, cfg.study_days),
            weight=2.0, event_day=event_day))
    for i in range(cfg.events_post):
        event_day = cfg.cutoff_day + 1 + 2 * i
        topics.append(TopicSpec(
            name=f"event-post-{i}",
            vocab=topic_vocab(4, i % 2 == 0),
            start_day=event_day + 1,
            end_day=cfg.study_days,
            weight=2.0, event_day=event_day))
    return topics


def _active_topics(topics: list[TopicSpec], day: float) -> list[TopicSpec]:
    return [t for t in topics if t.start_day <= day <= t.end_day]


def _compose(words: list[str], target_len: int) -> str:
    out: list[str] = []
    length = 0
    for w in words:
        extra = len(w) + (1 if out else 0)
        if out and length + extra > target_len:
            break
        out.append(w)
        length += extra
    return " ".join(out)


def generate(cfg: GenConfig) -> GenResult:
    """Build a corpus plus full ground truth from a seeded configuration."""
    cfg.validate()
    rng = random.Random(cfg.seed)
    vocab = _VocabFactory(rng)

    start_dt = parse_timestamp(cfg.start)
    start = int(start_dt.timestamp())
    horizon = cfg.study_days * 86400
    end = start + horizon
    cutoff_dt = start_dt + timedelta(days=cfg.cutoff_day)

    channels = [f"ch{i:02d}" for i in range(cfg.channels)]
    topics = _build_topics(rng, cfg, vocab)
    by_name = {t.name: t for t in topics}
    short_topic = next((t.name for t in topics if t.short_texts), None)
    unseen = {t.name for t in topics
              if t.event_day is not None and t.start_day >= cfg.cutoff_day}

    if cfg.style_tokens is not None:
        prop_style = list(cfg.style_tokens)
        vocab.used.update(prop_style)
    else:
        prop_style = vocab.words(6, 4, False) + vocab.words(6, 4, True)
    user_style = vocab.words(6, 3, False) + vocab.words(6, 3, True)
    bridges = [vocab.word(rng.randint(2, 3), False) for _ in range(8)]
    shorties = [vocab.word(rng.randint(1, 2), rng.random() < 0.5) for _ in range(10)]
    # function-word layer shared by every topic and cohort: real language keeps
    # lexical common ground even when topics change
    function_words = [vocab.word(rng.randint(1, 2), i % 2 == 0) for i in range(15)]

    def with_function_words(words: list[str]) -> list[str]:
        out: list[str] = []
        for w in words:
            out.append(w)
            if rng.random() < 0.3:
                out.append(rng.choice(function_words))
        return out

    def style_for(topic: TopicSpec) -> list[str]:
        cyr = any(ch in _VOWELS_CYR for w in topic.vocab for ch in w)
        pool = [w for w in prop_style if any(ch in _VOWELS_CYR for ch in w) == cyr]
        return pool or prop_style

    # ------------------------------------------------------------------ users
    english = sorted(wordlists.english_words())
    names = sorted(wordlists.western_names())
    users: list[_UserSpec] = []
    for i in range(cfg.users):
        account_id = f"u{i:04d}"
        if rng.random() < cfg.hidden_username_rate:
            username = None
        else:
            base = rng.choice(english)
            if rng.random() < 0.4:
                sep = "_" if rng.random() < 0.5 else ""
                base += sep + rng.choice(english)
            if rng.random() < 0.5:
                base += str(rng.randint(1, 99))
            username = base
        n_channels = 2 if rng.random() < 0.15 and cfg.channels > 1 else 1
        user_channels = rng.sample(channels, n_channels)
        kind = rng.random()
        if kind < 0.25:        # full-span regulars keep every channel covered
            window = (start, end)
            budget = rng.randint(15, 60)
        elif kind < 0.55:      # occasional visitors, a day or two
            w_start = start + rng.randrange(max(1, horizon - 2 * 86400))
            window = (w_start, min(end, w_start + rng.randint(3600, 2 * 86400)))
            budget = rng.randint(1, 6)
        else:                  # medium-term members
            w_start = start + rng.randrange(max(1, horizon // 2))
            window = (w_start, min(end, w_start + rng.randint(3, 14) * 86400))
            budget = rng.randint(4, 20)
        users.append(_UserSpec(account_id, username, rng.choice(names).capitalize(),
                               user_channels, window, budget))

    channel_users: dict[str, list[_UserSpec]] = {c: [] for c in channels}
    for u in users:
        for c in u.channels:
            channel_users[c].append(u)
    for c in channels:  # guarantee reply-capable coverage everywhere
        if not any(u.window == (start, end) for u in channel_users[c]):
            if users:
                anchor = users[rng.randrange(len(users))]
                if c not in anchor.channels:
                    anchor.channels.append(c)
                    channel_users[c].append(anchor)
                anchor.window = (start, end)

    # ----------------------------------------------------- propaganda accounts
    prop_ids = [f"p{i:03d}" for i in range(cfg.propaganda)]
    component_of: dict[str, int] = {}
    for idx, pid in enumerate(prop_ids):
        component_of[pid] = idx % max(cfg.components, 1)

    pools: dict[int, list[_PoolText]] = {}
    long_pools: dict[int, list[_PoolText]] = {}
    if cfg.propaganda > 0:
        used_texts: set[str] = set()
        persistent = [t for t in topics if t.event_day is None and not t.short_texts]
        eventful = [t for t in topics if t.event_day is not None]
        for comp in range(max(cfg.components, 1)):
            pool: list[_PoolText] = []
            n_short = int(round(cfg.pool_size * cfg.short_pool_share)) if short_topic else 0
            n_long = cfg.pool_size - n_short
            for j in range(n_long):
                # events get dedicated reusable texts too
                topic = (rng.choice(eventful) if eventful and rng.random() < 0.35
                         else rng.choice(persistent))
                target = rng.randint(*cfg.pool_len_range)
                words: list[str] = [rng.choice(topic.vocab)]
                while sum(len(w) + 1 for w in words) < 0.72 * target:
                    words.append(rng.choice(topic.vocab))
                # guaranteed style presence, denser in longer texts, so the
                # campaign register survives topic changes
                n_style = min(len(words),
                              max(max(1, round(2 * cfg.separability)),
                                  round(len(words) * 0.3 * cfg.separability)))
                for pos in rng.sample(range(len(words)), n_style):
                    words[pos] = rng.choice(style_for(topic))
                text = " ".join(with_function_words(words))
                while text in used_texts:
                    words.append(rng.choice(topic.vocab))
                    text = " ".join(with_function_words(words))
                if rng.random() < 0.8 * cfg.separability:
                    text += "!"   # agitational register
                used_texts.add(text)
                pool.append(_PoolText(text, topic.name,
                                      topic.start_day, topic.end_day))
            short_spec = by_name[short_topic] if short_topic else None
            for j in range(n_short):
                # word-count and length overlap user reply chatter; texts
                # rotate at the cutoff so late ones are fresh reuse
                words = [rng.choice(short_spec.vocab)
                         for _ in range(rng.randint(2, 4))]
                if rng.random() < 0.35 * cfg.separability:
                    words.insert(rng.randrange(len(words) + 1),
                                 rng.choice(style_for(short_spec)))
                if rng.random() < 0.4:
                    words.insert(rng.randrange(len(words) + 1),
                                 rng.choice(function_words))
                if rng.random() < 0.5:
                    words.insert(0, rng.choice(bridges))  # chatter mimicry
                text = " ".join(words)
                while text in used_texts:
                    words.insert(rng.randrange(len(words) + 1),
                                 rng.choice(short_spec.vocab))
                    text = " ".join(words)
                used_texts.add(text)
                if j % 2 == 0:
                    window = (0.0, float(cfg.cutoff_day))
                else:
                    window = (float(cfg.cutoff_day), float(cfg.study_days))
                pool.append(_PoolText(text, short_spec.name, *window))
            pools[comp] = pool
            long_pools[comp] = [p for p in pool
                                if len(p.text) > 30 and by_name[p.topic].event_day is None]

    # ------------------------------------------------------------- drafts
    drafts: list[_Draft] = []
    seq = 0

    def add_draft(channel, ts, account, text, topic, cohort, reply_to=None,
                  ) -> _Draft:
        nonlocal seq
        d = _Draft(seq, channel, ts, account, text, topic, cohort, reply_to)
        drafts.append(d)
        seq += 1
        return d

    # texts longer than 10 characters must stay exact-match-unique per author
    # cohort (user reuse would fabricate coordination edges); uniqueness comes
    # from resampling, never from marker words the models could key on
    unique_user_texts: set[str] = set()

    def dedupe(build) -> str:
        text = build()
        attempts = 0
        while len(text) > 10 and text in unique_user_texts:
            attempts += 1
            text = build()
            if attempts > 20:   # exhausted combinatorial pocket: extend
                while text in unique_user_texts:
                    text = f"{text} {rng.choice(function_words)}"
        if len(text) > 10:
            unique_user_texts.add(text)
        return text

    def casual_vocab(topic: TopicSpec) -> str:
        # everyday chatter rarely hits the hot keywords
        if rng.random() < 0.02:
            return rng.choice(topic.keywords)
        return rng.choice(topic.vocab[3:] or topic.vocab)

    def punctuate(text: str) -> str:
        roll = rng.random()
        if roll < 0.12:
            return text + "!"
        if roll < 0.20:
            return text + "?"
        return text

    def user_text(topic: TopicSpec, prefer_short: bool) -> str:
        def build() -> str:
            if prefer_short:
                if rng.random() < 0.4:
                    return punctuate(rng.choice(shorties))
                words = [casual_vocab(topic) for _ in range(rng.randint(1, 3))]
                if rng.random() < 0.4:
                    words.append(rng.choice(function_words))
                return punctuate(_compose(words, 28))
            target = rng.randint(*cfg.user_long_len)
            words = []
            while sum(len(w) + 1 for w in words) < 0.72 * target:
                words.append(casual_vocab(topic))
                if rng.random() < 0.3:
                    words.append(rng.choice(user_style))
            return punctuate(_compose(with_function_words(words), target))

        return dedupe(build)

    def discussion_starter(topic: TopicSpec, keyword: bool) -> str:
        # substantive mid-length user messages: the kind that draw replies.
        # Propaganda reacts to the ones hitting its hot keywords; other user
        # replies land on the same profile of message, keywords mostly absent.
        def build() -> str:
            target = rng.randint(15, 120)
            words: list[str] = []
            while sum(len(w) + 1 for w in words) < 0.72 * target:
                words.append(casual_vocab(topic))
                if rng.random() < 0.3:
                    words.append(rng.choice(user_style))
            kept: list[str] = []
            length = 0
            for w in with_function_words(words):
                extra = len(w) + (1 if kept else 0)
                if kept and length + extra > target:
                    break
                kept.append(w)
                length += extra
            if keyword:
                slots = rng.sample(range(len(kept)), min(len(kept), rng.randint(2, 4)))
                for pos in slots:
                    kept[pos] = rng.choice(topic.keywords)
            return punctuate(" ".join(kept))

        return dedupe(build)

    def trigger_text(topic: TopicSpec) -> str:
        return discussion_starter(topic, keyword=True)

    # user base traffic; a slice of it is substantive discussion starters
    starter_seqs: list[int] = []
    for u in users:
        w_lo, w_hi = u.window
        for _ in range(u.budget):
            ts = rng.randint(w_lo, max(w_lo, w_hi - 1))
            day = (ts - start) / 86400.0
            active = _active_topics(topics, day)
            topic = rng.choices(active, weights=[t.weight for t in active])[0]
            channel = rng.choice(u.channels)
            if rng.random() < 0.3:
                text = discussion_starter(topic, keyword=False)
                starter_seqs.append(seq)
            else:
                text = user_text(topic, rng.random() < cfg.user_short_rate)
            add_draft(channel, ts, u.account_id, text, topic.name, USER)

    user_base_count = len(drafts)

    # propaganda replies with generated triggers
    def pick_author(channel: str, ts: int) -> _UserSpec:
        pool = [u for u in channel_users[channel] if u.window[0] <= ts <= u.window[1]]
        if not pool:
            pool = channel_users[channel]
        return pool[rng.randrange(len(pool))]

    for pid in prop_ids:
        comp = component_of[pid]
        pool = pools[comp]
        lp = long_pools[comp]
        members = [p for p in prop_ids if component_of[p] == comp]
        rank = members.index(pid)
        # consecutive accounts share a designated long text: guarantees the
        # component's coordination graph is connected
        forced = [lp[rank % len(lp)], lp[(rank + 1) % len(lp)]]

        life_h = min(max(rng.expovariate(1.0 / cfg.prop_lifespan_mean_hours), 1.0), 96.0)
        w_lo = start + rng.randrange(max(1, horizon - int(life_h * 3600) - 3600))
        w_hi = w_lo + int(life_h * 3600)
        n_channels = min(max(cfg.prop_channels_min, rng.randint(2, 3)), cfg.channels)
        my_channels = rng.sample(channels, n_channels) if cfg.channels > 1 else channels[:1]
        budget = rng.randint(*cfg.prop_msgs_range)

        day_lo = (w_lo - start) / 86400.0
        day_hi = (w_hi - start) / 86400.0

        def usable(entry: _PoolText) -> bool:
            spec = by_name[entry.topic]
            lo_d = max(spec.start_day, entry.from_day)
            hi_d = min(spec.end_day, entry.to_day)
            return lo_d <= day_hi and hi_d >= day_lo

        candidates = [p for p in pool if usable(p)] or list(forced)
        chosen: list[_PoolText] = list(forced)
        while len(chosen) < budget:
            chosen.append(candidates[rng.randrange(len(candidates))])
        for entry in chosen:
            spec = by_name[entry.topic]
            lo_d = max(spec.start_day, entry.from_day)
            hi_d = min(min(spec.end_day + 1, cfg.study_days), entry.to_day)
            lo = max(w_lo, start + int(lo_d * 86400) + 1800)
            hi = min(w_hi, start + int(hi_d * 86400) - 1)
            if lo >= hi:
                lo, hi = w_lo, max(w_lo + 1, w_hi)  # fall back to lifespan window
            ts = rng.randint(lo, hi)
            latency = rng.randint(30, 900)
            trig_ts = max(start, ts - latency)
            channel = rng.choice(my_channels)
            author = pick_author(channel, trig_ts)
            # mostly keyword reactivity, but some replies land on keyword-free
            # posts (emotional-reaction behavior), so keyword absence in a
            # trigger is never proof of a legitimate conversation
            if rng.random() < 0.15:
                trig_body = discussion_starter(spec, keyword=False)
            else:
                trig_body = trigger_text(spec)
            trigger = add_draft(channel, trig_ts, author.account_id,
                                trig_body, entry.topic, USER)
            add_draft(channel, ts, pid, entry.text, entry.topic, PROPAGANDA,
                      reply_to=trigger.seq)

    # engagement replies: quota-based so realized effectiveness tracks targets
    prop_drafts = [d for d in drafts if d.cohort == PROPAGANDA]
    user_drafts = [d for d in drafts if d.cohort == USER]
    r_prop = int(round(cfg.effectiveness_prop * len(prop_drafts)))
    u_base = len(user_drafts)
    # every propaganda message is already one reply to a user message, and
    # engagement replies are user-authored, so solve for the extra replies
    # that land realized user effectiveness on its target:
    #   (r_user + P) / (u_base + r_prop + r_user) = effectiveness_user
    r_user = int(round(
        (cfg.effectiveness_user * (u_base + r_prop) - len(prop_drafts))
        / max(1e-9, 1.0 - cfg.effectiveness_user)))
    r_user = max(r_user, 0)

    def reply_text(target: _Draft) -> str:
        # user replies link to their trigger: usually a bridge word, then
        # echoed topical words; lengths overlap short propaganda chatter.
        # Uniqueness comes from the combinatorial space, not marker words.
        tvocab = (by_name[target.topic].vocab if target.topic is not None
                  else function_words)
        echo = [w for w in (x.strip("!?") for x in target.text.split())
                if w in tvocab] or list(tvocab[:4])

        def build() -> str:
            words = []
            if rng.random() < 0.95:
                words.append(rng.choice(bridges))
            words += [rng.choice(echo) for _ in range(rng.randint(1, 2))]
            if rng.random() < 0.5:
                words.append(rng.choice(function_words))
            if rng.random() < 0.4:
                words.append(rng.choice(tvocab))
            # pushback against propaganda carries the replier's own voice
            if target.cohort == PROPAGANDA and rng.random() < 0.7:
                words.append(rng.choice(user_style))
            rng.shuffle(words)
            text = " ".join(words)
            # linked replies ask back rather than agitate
            return text + "?" if rng.random() < 0.08 else text

        return dedupe(build)

    def add_reply(target: _Draft) -> None:
        ts = min(end - 1, target.ts + rng.randint(30, 900))
        if ts <= target.ts:
            ts = target.ts + 1
        author = pick_author(target.channel, ts)
        add_draft(target.channel, ts, author.account_id, reply_text(target),
                  target.topic, USER, reply_to=target.seq)

    for target in rng.choices(prop_drafts, k=r_prop) if prop_drafts else []:
        add_reply(target)
    # engagement replies land on discussion starters, mirroring where the
    # propaganda replies land; planted trigger drafts stay reply-free
    user_targets = [drafts[s] for s in starter_seqs] or drafts[:user_base_count]
    for target in rng.choices(user_targets, k=r_user) if user_targets else []:
        add_reply(target)

    # channel-owner sentinel posts pin the feed ranges to the full study window
    for channel in channels:
        add_draft(channel, start, None, f"opening {channel}", None, None)
        add_draft(channel, end, None, f"closing {channel}", None, None)

    # ----------------------------------------------------------- deletions
    prop_all = [d for d in drafts if d.cohort == PROPAGANDA]
    user_all = [d for d in drafts if d.cohort == USER]
    for bucket, rate in ((prop_all, cfg.deletion_rate_prop),
                         (user_all, cfg.deletion_rate_user)):
        k = int(round(rate * len(bucket)))
        for d in rng.sample(bucket, k) if bucket else []:
            d.deleted = True

    # ------------------------------------------------------- materialization
    usernames: dict[str, str | None] = {u.account_id: u.username for u in users}
    firstnames: dict[str, str] = {u.account_id: u.first_name for u in users}
    hidden_prop = rng.randrange(len(prop_ids)) if prop_ids else -1
    for i, pid in enumerate(prop_ids):
        if i == hidden_prop:
            usernames[pid] = None
        elif rng.random() < cfg.western_username_rate:
            first = rng.choice(names).capitalize()
            last = rng.choice(names).capitalize()
            usernames[pid] = f"{first}_{last}{rng.randint(10, 99)}"
        else:
            usernames[pid] = _syllable_word(rng, rng.randint(4, 6))
        firstnames[pid] = rng.choice(names).capitalize()

    by_channel: dict[str, list[_Draft]] = {c: [] for c in channels}
    for d in drafts:
        by_channel[d.channel].append(d)
    msg_ids: dict[int, int] = {}
    for channel in channels:
        ordered = sorted(by_channel[channel], key=lambda d: (d.ts, d.seq))
        for i, d in enumerate(ordered, start=1):
            msg_ids[d.seq] = i

    def materialize(d: _Draft, source: str) -> Message:
        return Message(
            channel_id=d.channel,
            message_id=msg_ids[d.seq],
            account_id=d.account,
            timestamp=datetime.fromtimestamp(d.ts, tz=timezone.utc),
            text=d.text,
            reply_to=msg_ids[d.reply_to_seq] if d.reply_to_seq is not None else None,
            first_name=firstnames.get(d.account) if d.account else None,
            username=usernames.get(d.account) if d.account else None,
            source=source,
        )

    historical = [materialize(d, "historical") for d in drafts if not d.deleted]
    realtime = [materialize(d, "realtime") for d in drafts]
    corpus = merge([historical, realtime])
    diff_deleted(corpus)

    # -------------------------------------------------------------- truth
    labels = LabelSet()
    for pid in prop_ids:
        labels.add(pid, PROPAGANDA, PROVENANCE_EXTERNAL)
    for u in users:
        labels.add(u.account_id, USER, PROVENANCE_EXTERNAL)

    truth = TopicAssignment()
    for d in drafts:
        if d.topic is not None:
            truth.assignments[(d.channel, msg_ids[d.seq])] = (d.topic, PROVENANCE_PLANTED)

    stats = PlantedStats(
        cutoff=cutoff_dt,
        prop_accounts=list(prop_ids),
        user_accounts=[u.account_id for u in users],
        components=component_of,
        pool_texts={c: [p.text for p in pool] for c, pool in pools.items()},
        style_tokens=prop_style,
        topic_names=[t.name for t in topics],
        topic_keywords={t.name: t.keywords for t in topics},
        short_topic=short_topic,
        unseen_topics=unseen,
        event_onsets={t.name: start_dt + timedelta(days=t.start_day)
                      for t in topics if t.event_day is not None},
    )
    stats.prop_messages = len(prop_all)
    stats.user_messages = len(user_all)
    stats.deleted_prop = sum(1 for d in prop_all if d.deleted)
    stats.deleted_user = sum(1 for d in user_all if d.deleted)
    by_seq = {d.seq: d for d in drafts}
    for d in drafts:
        if d.reply_to_seq is None:
            continue
        target = by_seq[d.reply_to_seq]
        if target.cohort == PROPAGANDA:
            stats.replies_to_prop += 1
        elif target.cohort == USER:
            stats.replies_to_user += 1

    spans: dict[str, list[int]] = {}
    for d in drafts:
        if d.account is not None:
            spans.setdefault(d.account, []).append(d.ts)
    prop_spans = [(max(v) - min(v)) / 3600.0 for a, v in spans.items()
                  if a.startswith("p")]
    user_spans = [(max(v) - min(v)) / 3600.0 for a, v in spans.items()
                  if a.startswith("u")]
    stats.prop_lifespan_median_hours = _median(prop_spans)
    stats.user_lifespan_median_hours = _median(user_spans)
    chans: dict[str, set[str]] = {}
    for d in drafts:
        if d.cohort == PROPAGANDA:
            chans.setdefault(d.account, set()).add(d.channel)
    stats.prop_channels_mean = (sum(len(v) for v in chans.values()) / len(chans)
                                if chans else 0.0)
    distinct = len({d.text for d in prop_all})
    stats.prop_text_reuse = len(prop_all) / distinct if distinct else 0.0

    return GenResult(corpus=corpus, labels=labels, topics=truth, stats=stats,
                     historical=historical, realtime=realtime)
