"""Prompt templates, loaded from versioned config files.

Templates live under ``delib/data/prompts`` by default and can be
overridden with a directory of same-named ``.txt`` files, so operators
can tune wording without touching code.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

TEMPLATE_NAMES = ("extract", "summarize", "themes", "mine", "classify")


class PromptLibrary:
    def __init__(self, templates: dict[str, str]):
        missing = [n for n in TEMPLATE_NAMES if n not in templates]
        if missing:
            raise ValueError(f"missing prompt templates: {missing}")
        self.templates = templates

    @classmethod
    def default(cls) -> "PromptLibrary":
        base = resources.files("delib.data").joinpath("prompts")
        return cls({name: base.joinpath(f"{name}.txt").read_text(encoding="utf-8") for name in TEMPLATE_NAMES})

    @classmethod
    def from_dir(cls, path: str | Path) -> "PromptLibrary":
        """Load from a directory; names missing there fall back to defaults."""
        templates = cls.default().templates.copy()
        for name in TEMPLATE_NAMES:
            f = Path(path) / f"{name}.txt"
            if f.exists():
                templates[name] = f.read_text(encoding="utf-8")
        return cls(templates)

    def render_extraction(self, transcript, config) -> str:
        lines = []
        for seg in transcript.segments:
            speaker = seg.speaker or "?"
            lines.append(f"{seg.index}: {speaker}: {seg.text}")
        return self.templates["extract"].format(
            segments="\n".join(lines),
            positions_per_issue=config.positions_per_issue,
            arguments_per_position=config.arguments_per_position,
        )

    def render_summary(self, title: str, description: str, outline: str) -> str:
        return self.templates["summarize"].format(title=title, description=description, outline=outline)

    def render_themes(self, posts: list[tuple[str, str]]) -> str:
        listing = "\n".join(f"{pid}: {text}" for pid, text in posts)
        return self.templates["themes"].format(posts=listing)

    def render_mining(self, texts: list[tuple[str, str]]) -> str:
        listing = "\n".join(f"{tid}: {text}" for tid, text in texts)
        return self.templates["mine"].format(texts=listing)

    def render_classify(self, text: str, labels: list[str]) -> str:
        return self.templates["classify"].format(text=text, labels=", ".join(labels))
