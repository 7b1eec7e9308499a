"""Prompt templates, rendering, and response label parsing.

Templates are plain text with named placeholders ([TOPIC-A], [TOPIC-B],
and [STAGE1-RESPONSE] for the second chain-of-thought stage), each of
which must occur exactly once. Surface forms are substituted verbatim;
the ASCII single quotes around topics belong to the template text.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .labels import RelationLabel

STRATEGY_STANDARD = "standard"
STRATEGY_COT_STAGE1 = "cot-stage1"
STRATEGY_COT_STAGE2 = "cot-stage2"

PLACEHOLDER_TOPIC_A = "[TOPIC-A]"
PLACEHOLDER_TOPIC_B = "[TOPIC-B]"
PLACEHOLDER_STAGE1 = "[STAGE1-RESPONSE]"

_REQUIRED = {
    STRATEGY_STANDARD: (PLACEHOLDER_TOPIC_A, PLACEHOLDER_TOPIC_B),
    STRATEGY_COT_STAGE1: (PLACEHOLDER_TOPIC_A, PLACEHOLDER_TOPIC_B),
    STRATEGY_COT_STAGE2: (PLACEHOLDER_TOPIC_A, PLACEHOLDER_TOPIC_B, PLACEHOLDER_STAGE1),
}


class MissingPlaceholderValue(ValueError):
    pass


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    strategy: str
    body: str

    def __post_init__(self) -> None:
        if self.strategy not in _REQUIRED:
            raise ValueError(f"unknown template strategy: {self.strategy!r}")
        for placeholder in _REQUIRED[self.strategy]:
            occurrences = self.body.count(placeholder)
            if occurrences != 1:
                raise ValueError(
                    f"template {self.id!r} must contain {placeholder} exactly once, "
                    f"found {occurrences}"
                )
        if self.strategy != STRATEGY_COT_STAGE2 and PLACEHOLDER_STAGE1 in self.body:
            raise ValueError(
                f"template {self.id!r} uses {PLACEHOLDER_STAGE1}, which is only "
                f"valid for {STRATEGY_COT_STAGE2}"
            )


@dataclass(frozen=True)
class TemplateSet:
    standard: PromptTemplate
    cot_stage1: PromptTemplate
    cot_stage2: PromptTemplate


def classification_sentence(topic_a: str, topic_b: str) -> str:
    """The canonical classification request, shared verbatim by the
    standard prompt and the fine-tuning export."""
    return f"Classify the relationship between '{topic_a}' and '{topic_b}'"


_PLACEHOLDER_RE = re.compile(r"\[(TOPIC-A|TOPIC-B|STAGE1-RESPONSE)\]")


def render(
    template: PromptTemplate,
    topic_a: str,
    topic_b: str,
    stage1_response: str | None = None,
) -> str:
    """Substitute placeholders in one pass; nothing else is altered."""
    if template.strategy == STRATEGY_COT_STAGE2 and stage1_response is None:
        raise MissingPlaceholderValue(
            f"template {template.id!r} requires a stage-1 response"
        )
    values = {
        "TOPIC-A": topic_a,
        "TOPIC-B": topic_b,
        "STAGE1-RESPONSE": stage1_response if stage1_response is not None else "",
    }
    return _PLACEHOLDER_RE.sub(lambda m: values[m.group(1)], template.body)


def load_template(path: Path | str, strategy: str, template_id: str | None = None) -> PromptTemplate:
    path = Path(path)
    return PromptTemplate(
        id=template_id or path.stem,
        strategy=strategy,
        body=path.read_text(encoding="utf-8"),
    )


def default_templates() -> TemplateSet:
    base = resources.files("topicrel") / "templates"

    def read(name: str, strategy: str) -> PromptTemplate:
        return PromptTemplate(
            id=f"default-{strategy}",
            strategy=strategy,
            body=(base / name).read_text(encoding="utf-8"),
        )

    return TemplateSet(
        standard=read("standard.txt", STRATEGY_STANDARD),
        cot_stage1=read("cot_stage1.txt", STRATEGY_COT_STAGE1),
        cot_stage2=read("cot_stage2.txt", STRATEGY_COT_STAGE2),
    )


_MARKER_RE = re.compile(r"relationship:", re.IGNORECASE)
_TOKEN_RE = re.compile(r"^(same[\s_-]?as|broader|narrower|other)\b", re.IGNORECASE)


def parse_label(response: str) -> RelationLabel | None:
    """Extract the label after the last ``relationship:`` marker.

    The token is matched case-insensitively with leading punctuation
    stripped; ``same as``, ``same_as`` and ``sameas`` are accepted as
    same-as. Returns None (parse failure) when no valid label follows
    the last marker or no marker exists.
    """
    last = None
    for match in _MARKER_RE.finditer(response):
        last = match
    if last is None:
        return None
    rest = response[last.end() :].lower()
    rest = re.sub(r"^[^a-z]+", "", rest)
    token = _TOKEN_RE.match(rest)
    if token is None:
        return None
    word = token.group(1)
    if word.startswith("same"):
        return RelationLabel.SAME_AS
    return RelationLabel(word)
