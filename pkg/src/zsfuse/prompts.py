"""Prompt assembly for the reference-image synthesis procedure.

Pure string templates for the four conversation stages (appearance
analysis, confusable-pair grouping, pair-similarity probing, image
generation) plus a tolerant parser for grouping responses. No network
calls happen here; batches are handed to an external client.

Class names inside the analysis prompt are single-quote wrapped; a
backslash escapes backslashes and single quotes within a name.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .errors import ValidationError

GROUPING_PROMPT = (
    "Please group the classes I'm talking about without using any other "
    "class names. Ask for similar features in appearance, a group of two "
    "class names, and tell me what the features of similar appearance are, "
    "a sentence description is fine. Format: desk and dining_table - Both "
    "have flat horizontal surfaces with legs for support"
)

CONFIRMATION_PROMPT = (
    "Is there any other combination with similar appearance? If not, answer no"
)

_SIMILARITY_TEMPLATE = (
    "What does the similarity between {a} and {b} in appearance? Please "
    "answer in the format of: both {a} and {b} have A, B, C...., where A, B, "
    "and C are phrases to describe the similarities between {a} and {b}. "
    "Please state specific similarities, not just generalizations such as "
    "similar shape!"
)

_GENERATION_TEMPLATE = (
    "generate an image of {name} that has {cc}. "
    "As realistic as possible. More fit for life."
)

_GENERATION_PLAIN_TEMPLATE = (
    "generate an image of {name}. As realistic as possible. More fit for life."
)

_GROUP_LINE = re.compile(r"^(?P<a>.+?) and (?P<b>.+?) - (?P<cc>.+)$")


@dataclass
class GroupRecord:
    """One confusable pair and the shared appearance description."""

    class_a: str
    class_b: str
    common_features: str

    def __post_init__(self):
        if not self.class_a or not self.class_b or not self.common_features:
            raise ValidationError("group record fields must be non-empty")
        if self.class_a == self.class_b:
            raise ValidationError(f"group record pairs {self.class_a!r} with itself")


def _quote(name: str) -> str:
    escaped = name.replace("\\", "\\\\").replace("'", "\\'")
    return f"'{escaped}'"


def unquote_name(token: str) -> str:
    token = token.strip()
    if len(token) < 2 or token[0] != "'" or token[-1] != "'":
        raise ValidationError(f"not a quoted class name: {token!r}")
    return token[1:-1].replace("\\'", "'").replace("\\\\", "\\")


def analysis_prompt(classes: list[str]) -> str:
    """Appearance-analysis prompt listing every class name."""
    if not classes:
        raise ValidationError("analysis prompt needs at least one class")
    listed = ", ".join(_quote(c) for c in classes)
    return f"Please analyze the appearance characteristics of these classes [{listed}]"


def grouping_prompt() -> str:
    return GROUPING_PROMPT


def confirmation_prompt() -> str:
    return CONFIRMATION_PROMPT


def similarity_prompt(a: str, b: str) -> str:
    if a == b:
        raise ValidationError("similarity prompt needs two distinct classes")
    return _SIMILARITY_TEMPLATE.format(a=a, b=b)


def generation_prompt(name: str, cc: str | None = None) -> str:
    """Image-generation prompt; without shared features the plain form is used."""
    if not name:
        raise ValidationError("generation prompt needs a class name")
    if cc:
        return _GENERATION_TEMPLATE.format(name=name, cc=cc)
    return _GENERATION_PLAIN_TEMPLATE.format(name=name)


def format_grouping_line(record: GroupRecord) -> str:
    return f"{record.class_a} and {record.class_b} - {record.common_features}"


def parse_grouping_response(text: str):
    """Parse `<a> and <b> - <description>` lines.

    Returns (records, warnings); blank lines are skipped and unparseable
    non-blank lines become warnings rather than errors.
    """
    records: list[GroupRecord] = []
    warnings: list[str] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        m = _GROUP_LINE.match(stripped)
        if not m:
            warnings.append(f"line {lineno}: cannot parse {stripped!r}")
            continue
        try:
            records.append(GroupRecord(m.group("a").strip(), m.group("b").strip(),
                                       m.group("cc").strip()))
        except ValidationError as exc:
            warnings.append(f"line {lineno}: {exc}")
    return records, warnings


def prompt_batch(entries: list[dict]) -> str:
    """Serialize a list of {class, prompt} entries as a JSON batch file."""
    return json.dumps({"prompts": entries}, indent=2) + "\n"
