"""Conversational fine-tuning exports in the chat-messages JSONL layout.

Each dataset pair becomes one line holding a two-message conversation:
the user turn is the canonical classification sentence, the assistant
turn is ``relationship: <label>``. The user string is produced by the
same helper the prompt templates embed, so the two never drift apart.
"""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path

from .labels import RelationLabel
from .pairs import LabeledPair
from .prompts import classification_sentence
from .splits import DatasetBundle

logger = logging.getLogger(__name__)

_USER_RE = re.compile(r"^Classify the relationship between '(.+)' and '(.+)'$")
_ASSISTANT_RE = re.compile(r"^relationship: (broader|narrower|same-as|other)$")

_SPLIT_ALIASES = {"train": "train", "val": "val", "validation": "val", "test": "test"}


@dataclass(frozen=True)
class ConversationRecord:
    user: str
    assistant: str

    def to_dict(self) -> dict:
        return {
            "messages": [
                {"role": "user", "content": self.user},
                {"role": "assistant", "content": self.assistant},
            ]
        }


def conversation_for(pair: LabeledPair) -> ConversationRecord:
    return ConversationRecord(
        user=classification_sentence(pair.topic_a, pair.topic_b),
        assistant=f"relationship: {pair.label.value}",
    )


def conversation_line(pair: LabeledPair) -> str:
    return json.dumps(conversation_for(pair).to_dict(), ensure_ascii=False)


def parse_conversation_line(line: str) -> ConversationRecord:
    """Strict reverse of conversation_line; raises ValueError on any
    structural or textual deviation."""
    data = json.loads(line)
    if not isinstance(data, dict):
        raise ValueError("expected a JSON object")
    messages = data.get("messages")
    if not isinstance(messages, list) or len(messages) != 2:
        raise ValueError("expected exactly two messages")
    user, assistant = messages
    if not isinstance(user, dict) or not isinstance(assistant, dict):
        raise ValueError("messages must be objects")
    if user.get("role") != "user" or assistant.get("role") != "assistant":
        raise ValueError("expected a user turn followed by an assistant turn")
    user_content = user.get("content")
    assistant_content = assistant.get("content")
    if not isinstance(user_content, str) or not _USER_RE.match(user_content):
        raise ValueError(f"malformed user content: {user_content!r}")
    if not isinstance(assistant_content, str) or not _ASSISTANT_RE.match(assistant_content):
        raise ValueError(f"malformed assistant content: {assistant_content!r}")
    return ConversationRecord(user=user_content, assistant=assistant_content)


def conversation_label(record: ConversationRecord) -> RelationLabel:
    match = _ASSISTANT_RE.match(record.assistant)
    if not match:
        raise ValueError(f"malformed assistant content: {record.assistant!r}")
    return RelationLabel(match.group(1))


def normalize_split(split: str) -> str:
    try:
        return _SPLIT_ALIASES[split]
    except KeyError:
        raise ValueError(f"unknown split: {split!r}") from None


def export_conversations(bundle: DatasetBundle, split: str, path: Path | str) -> int:
    """Write one split's conversations; an empty split logs a warning and
    still produces the (empty) file."""
    split = normalize_split(split)
    pairs = {name: items for name, items in bundle.splits()}[split]
    if not pairs:
        logger.warning("split %s of %s is empty", split, bundle.name)
    with open(path, "w", encoding="utf-8") as handle:
        for pair in pairs:
            handle.write(conversation_line(pair) + "\n")
    return len(pairs)


def export_path(directory: Path | str, name: str, split: str) -> Path:
    return Path(directory) / f"{name}.{normalize_split(split)}.chat.jsonl"


def read_conversations(path: Path | str) -> list[ConversationRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(parse_conversation_line(line))
            except ValueError as exc:
                raise ValueError(f"{path}: line {number}: {exc}") from None
    return records
