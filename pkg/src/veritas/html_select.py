"""Minimal HTML tree + path selector engine (XPath-like, stdlib only).

Supported selector dialect:

    //tag/step//step[@attr='v'][contains(@class,'x')][2]/@href
    //article//p/text()

* a leading ``//`` searches descendants from the document root, ``/`` selects
  children; the same axes apply between steps (a bare leading ``tag`` is read
  as ``//tag``)
* a step is an element name or ``*`` plus optional predicates:
  ``[@attr='value']`` exact attribute match, ``[contains(@attr,'value')]``
  substring match, ``[n]`` one-based position among the step's matches under
  each context node
* an optional trailing ``/@attr`` yields attribute values, ``/text()`` yields
  the node's direct text; otherwise the full descendant text of each matched
  node is used

Anything else is rejected with ``SelectorInvalid``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from html.parser import HTMLParser

from .errors import SelectorInvalid

_VOID_TAGS = {
    "area", "base", "br", "col", "embed", "hr", "img", "input",
    "link", "meta", "param", "source", "track", "wbr",
}

_NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_-]*")


class Node:
    __slots__ = ("tag", "attrs", "children", "parent", "order")

    def __init__(self, tag: str, attrs: dict[str, str], parent: "Node | None", order: int):
        self.tag = tag
        self.attrs = attrs
        self.children: list[Node | str] = []
        self.parent = parent
        self.order = order

    def element_children(self):
        return [c for c in self.children if isinstance(c, Node)]

    def descendants(self):
        for child in self.children:
            if isinstance(child, Node):
                yield child
                yield from child.descendants()

    def direct_text(self) -> str:
        return "".join(c for c in self.children if isinstance(c, str))

    def full_text(self) -> str:
        parts = []
        for child in self.children:
            if isinstance(child, str):
                parts.append(child)
            else:
                parts.append(child.full_text())
        return "".join(parts)

    def __repr__(self):  # pragma: no cover - debug aid
        return f"<Node {self.tag} #{self.order}>"


class _TreeBuilder(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.root = Node("#document", {}, None, 0)
        self._stack = [self.root]
        self._counter = 0

    def handle_starttag(self, tag, attrs):
        self._counter += 1
        node = Node(tag.lower(), {k.lower(): (v or "") for k, v in attrs}, self._stack[-1], self._counter)
        self._stack[-1].children.append(node)
        if tag.lower() not in _VOID_TAGS:
            self._stack.append(node)

    def handle_startendtag(self, tag, attrs):
        self._counter += 1
        node = Node(tag.lower(), {k.lower(): (v or "") for k, v in attrs}, self._stack[-1], self._counter)
        self._stack[-1].children.append(node)

    def handle_endtag(self, tag):
        tag = tag.lower()
        if tag in _VOID_TAGS:
            return
        # pop to the matching open tag, tolerating stray closers
        for i in range(len(self._stack) - 1, 0, -1):
            if self._stack[i].tag == tag:
                del self._stack[i:]
                return

    def handle_data(self, data):
        if data:
            self._stack[-1].children.append(data)


def parse_html(text: str) -> Node:
    builder = _TreeBuilder()
    builder.feed(text)
    builder.close()
    return builder.root


@dataclass(frozen=True)
class _Step:
    axis: str  # "child" | "descendant"
    tag: str  # element name or "*"
    attr_eq: tuple[tuple[str, str], ...] = ()
    attr_contains: tuple[tuple[str, str], ...] = ()
    position: int | None = None


@dataclass(frozen=True)
class Selector:
    expression: str
    steps: tuple[_Step, ...]
    produce: str  # "node" | "text" | attribute name prefixed with "@"

    def nodes(self, root: Node) -> list[Node]:
        contexts = [root]
        for step in self.steps:
            matched: list[Node] = []
            seen = set()
            for ctx in contexts:
                if step.axis == "child":
                    candidates = ctx.element_children()
                else:
                    candidates = list(ctx.descendants())
                candidates = [c for c in candidates if step.tag in ("*", c.tag)]
                candidates = [c for c in candidates if _predicates_hold(c, step)]
                if step.position is not None:
                    candidates = (
                        [candidates[step.position - 1]]
                        if len(candidates) >= step.position
                        else []
                    )
                for c in candidates:
                    if c.order not in seen:
                        seen.add(c.order)
                        matched.append(c)
            matched.sort(key=lambda n: n.order)
            contexts = matched
        return contexts

    def strings(self, root: Node) -> list[str]:
        nodes = self.nodes(root)
        if self.produce == "text":
            return [n.direct_text() for n in nodes]
        if self.produce.startswith("@"):
            attr = self.produce[1:]
            return [n.attrs[attr] for n in nodes if attr in n.attrs]
        return [n.full_text() for n in nodes]


def _predicates_hold(node: Node, step: _Step) -> bool:
    for attr, value in step.attr_eq:
        if node.attrs.get(attr) != value:
            return False
    for attr, value in step.attr_contains:
        if value not in node.attrs.get(attr, ""):
            return False
    return True


def compile_selector(expression: str) -> Selector:
    """Parse a selector expression; raises ``SelectorInvalid`` on bad syntax."""
    text = expression.strip()
    if not text:
        raise SelectorInvalid("empty selector")
    pos = 0
    if not text.startswith("/"):
        text = "//" + text
    steps: list[_Step] = []
    produce = "node"
    n = len(text)
    while pos < n:
        if text.startswith("//", pos):
            axis, pos = "descendant", pos + 2
        elif text.startswith("/", pos):
            axis, pos = "child", pos + 1
        else:
            raise SelectorInvalid(f"expected '/' at position {pos} in {expression!r}")
        if pos >= n:
            raise SelectorInvalid(f"dangling '/' in {expression!r}")

        if text.startswith("@", pos):
            m = _NAME_RE.match(text, pos + 1)
            if not m or m.end() != n:
                raise SelectorInvalid(f"bad attribute tail in {expression!r}")
            produce = "@" + m.group(0)
            pos = n
            break
        if text.startswith("text()", pos):
            if pos + 6 != n:
                raise SelectorInvalid(f"text() must end the selector in {expression!r}")
            produce = "text"
            pos = n
            break

        if text[pos] == "*":
            tag, pos = "*", pos + 1
        else:
            m = _NAME_RE.match(text, pos)
            if not m:
                raise SelectorInvalid(f"expected element name at position {pos} in {expression!r}")
            tag, pos = m.group(0).lower(), m.end()

        attr_eq: list[tuple[str, str]] = []
        attr_contains: list[tuple[str, str]] = []
        position: int | None = None
        while pos < n and text[pos] == "[":
            end = _matching_bracket(text, pos, expression)
            body = text[pos + 1 : end]
            pos = end + 1
            if body.isdigit():
                position = int(body)
                if position < 1:
                    raise SelectorInvalid(f"position predicates are one-based in {expression!r}")
                continue
            m = re.fullmatch(r"@([A-Za-z][A-Za-z0-9_-]*)\s*=\s*(['\"])(.*)\2", body)
            if m:
                attr_eq.append((m.group(1).lower(), m.group(3)))
                continue
            m = re.fullmatch(r"contains\(\s*@([A-Za-z][A-Za-z0-9_-]*)\s*,\s*(['\"])(.*)\2\s*\)", body)
            if m:
                attr_contains.append((m.group(1).lower(), m.group(3)))
                continue
            raise SelectorInvalid(f"unsupported predicate [{body}] in {expression!r}")

        steps.append(
            _Step(
                axis=axis,
                tag=tag,
                attr_eq=tuple(attr_eq),
                attr_contains=tuple(attr_contains),
                position=position,
            )
        )
    if not steps:
        raise SelectorInvalid(f"selector {expression!r} selects nothing")
    return Selector(expression=expression, steps=tuple(steps), produce=produce)


def _matching_bracket(text: str, start: int, expression: str) -> int:
    quote = None
    for i in range(start + 1, len(text)):
        ch = text[i]
        if quote:
            if ch == quote:
                quote = None
        elif ch in "'\"":
            quote = ch
        elif ch == "]":
            return i
    raise SelectorInvalid(f"unclosed '[' in {expression!r}")
