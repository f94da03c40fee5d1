"""Versioned prompt templates.

Each prompt lives in its own text file: system prompt above a `---`
separator line, user-message template below it. Templates use
string.Template ($name) placeholders so literal JSON braces in the prompt
text never collide with substitution.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from string import Template

DEFAULT_PROMPT_DIR = Path(__file__).parent / "prompts"

SEPARATOR = "\n---\n"


@dataclass(frozen=True)
class PromptPair:
    system: str
    user_template: str

    def render(self, **variables: str) -> tuple[str, str]:
        return self.system, Template(self.user_template).substitute(**variables)


class PromptLibrary:
    def __init__(self, directory: Path | str | None = None):
        self.directory = Path(directory) if directory else DEFAULT_PROMPT_DIR
        if not self.directory.is_dir():
            raise FileNotFoundError(f"prompt directory not found: {self.directory}")
        self._cache: dict[str, PromptPair] = {}

    def get(self, name: str) -> PromptPair:
        if name not in self._cache:
            path = self.directory / f"{name}.txt"
            if not path.exists():
                raise FileNotFoundError(f"prompt {name!r} not found under {self.directory}")
            text = path.read_text(encoding="utf-8")
            if SEPARATOR not in text:
                raise ValueError(f"prompt {name!r} lacks the system/user '---' separator")
            system, user = text.split(SEPARATOR, 1)
            self._cache[name] = PromptPair(system.strip(), user.strip())
        return self._cache[name]

    def render(self, name: str, **variables: str) -> tuple[str, str]:
        return self.get(name).render(**variables)
