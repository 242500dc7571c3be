"""Feature manifest I/O and the bundled corpus."""
from __future__ import annotations

import importlib.resources

from .nodes import Expr
from .parser import ParseError, parse_feature


class ManifestError(ValueError):
    pass


def parse_manifest(text: str) -> list[tuple[str, Expr]]:
    """Parse a `name = expression` manifest.

    An entry continues onto following lines until its parentheses balance;
    '#' starts a comment; blank lines separate nothing.
    """
    entries: list[tuple[str, Expr]] = []
    seen: set[str] = set()
    pending_name: str | None = None
    pending: list[str] = []
    depth = 0

    def flush(line_no: int) -> None:
        nonlocal pending_name, pending, depth
        if pending_name is None:
            return
        source = "\n".join(pending)
        try:
            expr = parse_feature(source)
        except ParseError as exc:
            raise ManifestError(f"feature {pending_name!r}: {exc}") from None
        if pending_name in seen:
            raise ManifestError(f"duplicate feature name {pending_name!r}")
        seen.add(pending_name)
        entries.append((pending_name, expr))
        pending_name, pending, depth = None, [], 0

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if pending_name is None:
            if "=" not in line:
                raise ManifestError(f"line {line_no}: expected `name = expression`")
            name, rhs = line.split("=", 1)
            name = name.strip()
            if not name.isidentifier():
                raise ManifestError(f"line {line_no}: bad feature name {name!r}")
            pending_name = name
            pending = [rhs]
            depth = rhs.count("(") - rhs.count(")")
        else:
            pending.append(line)
            depth += line.count("(") - line.count(")")
        if depth <= 0:
            flush(line_no)
    if pending_name is not None:
        raise ManifestError(f"feature {pending_name!r}: unbalanced parentheses at end of file")
    if not entries:
        raise ManifestError("manifest defines no features")
    return entries


def load_manifest(path) -> list[tuple[str, Expr]]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_manifest(fh.read())


def load_bundled_corpus() -> list[tuple[str, Expr]]:
    """The five published feature definitions shipped with the package."""
    text = (importlib.resources.files("alphakit.dsl") / "data" / "paper_features.txt").read_text()
    return parse_manifest(text)
