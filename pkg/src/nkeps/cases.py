"""Cases shipped with the package (``nkeps/data/cases/*.json``)."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from nkeps.case_io import Case, read_case


def _root() -> Path:
    return Path(str(resources.files("nkeps") / "data" / "cases"))


def names() -> list[str]:
    """Shipped case names, sorted."""
    return sorted(p.stem for p in _root().glob("*.json"))


def path(name: str) -> Path:
    p = _root() / f"{name}.json"
    if not p.is_file():
        raise KeyError(f"no shipped case named {name!r}; choose from {', '.join(names())}")
    return p


def load(name: str) -> Case:
    return read_case(path(name))
