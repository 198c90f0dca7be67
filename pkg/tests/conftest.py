"""Shared fixtures: corpus builders and a cached default synthetic corpus."""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

import pytest

from propdetect.corpus import Message, merge
from propdetect.synthgen import GenConfig, generate

T0 = datetime(2023, 8, 16, 12, 0, 0, tzinfo=timezone.utc)


def msg(channel="ch", mid=1, account="a", minutes=0, text="hello",
        reply_to=None, source="historical", username=None, seconds=0):
    return Message(
        channel_id=channel,
        message_id=mid,
        account_id=account,
        timestamp=T0 + timedelta(minutes=minutes, seconds=seconds),
        text=text,
        reply_to=reply_to,
        username=username,
        source=source,
    )


def corpus_of(*messages):
    return merge([list(messages)])


@pytest.fixture(scope="session")
def default_synth():
    """One default-config synthetic corpus shared across test modules."""
    return generate(GenConfig(seed=0))


@pytest.fixture(scope="session")
def small_synth():
    return generate(GenConfig(seed=11, users=60, propaganda=16, channels=2,
                              pool_size=80, prop_msgs_range=(6, 18)))
