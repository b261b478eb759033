"""DOM trees for static webpage analysis and mutation.

A page is a tree of :class:`DomNode` values.  Following the node model used
by rule-based page classifiers, attribute nodes are children of their owning
element, alongside text, comment and element children.  Trees are treated as
immutable once built; mutation code works on copies (see ``mutation.apply``).
"""

from __future__ import annotations

import copy
import re
from dataclasses import dataclass
from html import escape
from html.parser import HTMLParser

ELEMENT = "element"
ATTRIBUTE = "attribute"
TEXT = "text"
COMMENT = "comment"

# Tags with no closing tag; the parser never pushes these on the open stack.
VOID_TAGS = frozenset({
    "area", "base", "br", "col", "embed", "hr", "img", "input",
    "link", "meta", "param", "source", "track", "wbr",
})

# Tags that never contribute to the rendered appearance of the page.
NONVISUAL_TAGS = frozenset({
    "base", "head", "link", "meta", "noscript", "param", "script",
    "source", "style", "template", "title", "track",
})

# Characters that render as nothing; stripped from the visible projection.
ZERO_WIDTH_CHARS = "\u200b\u200c\u200d\ufeff"

# Attributes that influence how a node looks, kept in the projection.
APPEARANCE_ATTRS = frozenset({
    "style", "class", "align", "background", "src", "width", "height", "color",
})


class ParseError(ValueError):
    """Input document could not be decoded or parsed."""


class DomNode:
    """One node of a parsed document.

    ``children`` is only populated on element nodes and holds the element's
    attribute nodes (in source order, before any content) followed by its
    content nodes (text, comment and element children, in document order).
    """

    __slots__ = ("node_type", "tag", "children", "value", "attr_name")

    def __init__(self, node_type: str, tag: str = "", value: str = "",
                 attr_name: str = "", children: list[DomNode] | None = None):
        self.node_type = node_type
        self.tag = tag
        self.value = value
        self.attr_name = attr_name
        self.children: list[DomNode] = children if children is not None else []

    @classmethod
    def element(cls, tag: str, attrs: dict[str, str] | None = None,
                children: list[DomNode] | None = None) -> DomNode:
        node = cls(ELEMENT, tag=tag.lower())
        for name, value in (attrs or {}).items():
            node.set_attr(name, value)
        for child in children or []:
            node.children.append(child)
        return node

    @classmethod
    def attribute(cls, name: str, value: str) -> DomNode:
        return cls(ATTRIBUTE, attr_name=name.lower(), value=value)

    @classmethod
    def text(cls, value: str) -> DomNode:
        return cls(TEXT, value=value)

    @classmethod
    def comment(cls, value: str) -> DomNode:
        return cls(COMMENT, value=value)

    def __repr__(self) -> str:
        if self.node_type == ELEMENT:
            return f"<{self.tag}>"
        if self.node_type == ATTRIBUTE:
            return f"{self.attr_name}={self.value!r}"
        return f"{self.node_type}:{self.value!r}"

    # -- element accessors ------------------------------------------------

    @property
    def attr_nodes(self) -> list[DomNode]:
        return [c for c in self.children if c.node_type == ATTRIBUTE]

    @property
    def content_children(self) -> list[DomNode]:
        return [c for c in self.children if c.node_type != ATTRIBUTE]

    @property
    def element_children(self) -> list[DomNode]:
        return [c for c in self.children if c.node_type == ELEMENT]

    @property
    def attrs(self) -> dict[str, str]:
        return {c.attr_name: c.value for c in self.children
                if c.node_type == ATTRIBUTE}

    def get_attr(self, name: str) -> str | None:
        for c in self.children:
            if c.node_type == ATTRIBUTE and c.attr_name == name:
                return c.value
        return None

    def set_attr(self, name: str, value: str) -> None:
        """Set or replace an attribute, keeping attribute nodes first."""
        name = name.lower()
        for c in self.children:
            if c.node_type == ATTRIBUTE and c.attr_name == name:
                c.value = value
                return
        node = DomNode.attribute(name, value)
        insert_at = len(self.attr_nodes)
        self.children.insert(insert_at, node)

    def remove_attr(self, name: str) -> None:
        self.children = [c for c in self.children
                         if not (c.node_type == ATTRIBUTE and c.attr_name == name)]

    def direct_text(self) -> str:
        """Concatenated values of this element's direct text children."""
        return "".join(c.value for c in self.content_children
                       if c.node_type == TEXT)


@dataclass
class DomTree:
    root: DomNode
    source_url: str = ""

    def copy(self) -> DomTree:
        return DomTree(copy.deepcopy(self.root), self.source_url)


class _TreeBuilder(HTMLParser):
    """Tag-soup-tolerant tree builder on top of the stdlib tokenizer."""

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.top_level: list[DomNode] = []
        self.stack: list[DomNode] = []

    def _append(self, node: DomNode) -> None:
        siblings = self.stack[-1].children if self.stack else self.top_level
        # coalesce adjacent data chunks so the tree is in normal form and
        # serialize/parse round trips are node-stable
        if node.node_type == TEXT and siblings \
                and siblings[-1].node_type == TEXT:
            siblings[-1].value += node.value
            return
        siblings.append(node)

    def _make_element(self, tag: str, attrs) -> DomNode:
        node = DomNode(ELEMENT, tag=tag)
        seen = set()
        for name, value in attrs:
            if name in seen:  # first occurrence wins, names unique per element
                continue
            seen.add(name)
            node.children.append(DomNode.attribute(name, value or ""))
        return node

    def handle_starttag(self, tag, attrs):
        node = self._make_element(tag, attrs)
        self._append(node)
        if tag not in VOID_TAGS:
            self.stack.append(node)

    def handle_startendtag(self, tag, attrs):
        self._append(self._make_element(tag, attrs))

    def handle_endtag(self, tag):
        # Close up to the innermost matching open tag; stray closers are
        # ignored, intervening unclosed tags are auto-closed.
        for i in range(len(self.stack) - 1, -1, -1):
            if self.stack[i].tag == tag:
                del self.stack[i:]
                return

    def handle_data(self, data):
        if not data or data.isspace():
            return
        self._append(DomNode.text(data))

    def handle_comment(self, data):
        self._append(DomNode.comment(data))


def parse_html(text: str | bytes, url: str = "") -> DomTree:
    """Parse an HTML document into a :class:`DomTree`.

    Unclosed tags are auto-closed, unknown tags are kept as elements and an
    empty document yields a bare ``html`` root.  Bytes input must be UTF-8.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"document is not valid UTF-8: {exc}") from exc
    builder = _TreeBuilder()
    builder.feed(text)
    builder.close()
    tops = builder.top_level
    if len(tops) == 1 and tops[0].node_type == ELEMENT and tops[0].tag == "html":
        root = tops[0]
    else:
        root = DomNode(ELEMENT, tag="html")
        root.children.extend(tops)
    return DomTree(root, url)


def load_page(path, url: str = "") -> DomTree:
    with open(path, "rb") as fh:
        data = fh.read()
    return parse_html(data, url)


def _escape_attr(value: str) -> str:
    # values are emitted double-quoted; single quotes stay literal so event
    # handler strings like this.type='submit' survive verbatim
    return (value.replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;").replace('"', "&quot;"))


# Content of these elements is raw text: the tokenizer never decodes
# character references inside them, so escaping on output would not survive
# a round trip.
RAWTEXT_TAGS = frozenset({"script", "style"})


def _serialize_node(node: DomNode, out: list[str], raw_text: bool = False) -> None:
    if node.node_type == TEXT:
        out.append(node.value if raw_text else escape(node.value, quote=False))
        return
    if node.node_type == COMMENT:
        out.append(f"<!--{node.value}-->")
        return
    parts = [node.tag]
    for attr in node.attr_nodes:
        parts.append(f'{attr.attr_name}="{_escape_attr(attr.value)}"')
    out.append("<" + " ".join(parts) + ">")
    content = node.content_children
    if node.tag in VOID_TAGS and not content:
        return
    for child in content:
        _serialize_node(child, out, node.tag in RAWTEXT_TAGS)
    out.append(f"</{node.tag}>")


def serialize(tree: DomTree) -> str:
    """Deterministic HTML text for a tree; attribute order is preserved."""
    out: list[str] = []
    _serialize_node(tree.root, out)
    out.append("\n")
    return "".join(out)


def bfs_layers(tree: DomTree) -> list[list[DomNode]]:
    """Element nodes grouped by depth: layer 1 is ``[root]``, layer i+1 the
    concatenated element children of layer i in document order."""
    layers = []
    current = [tree.root]
    while current:
        layers.append(current)
        nxt = []
        for node in current:
            nxt.extend(node.element_children)
        current = nxt
    return layers


def _style_declarations(style: str) -> dict[str, str]:
    decls = {}
    for chunk in style.split(";"):
        if ":" not in chunk:
            continue
        prop, _, value = chunk.partition(":")
        decls[prop.strip().lower()] = value.strip().lower()
    return decls


def _is_zero_length(value: str) -> bool:
    value = value.strip().rstrip("%")
    for unit in ("px", "pt", "em", "rem", "vh", "vw"):
        if value.endswith(unit):
            value = value[: -len(unit)]
            break
    try:
        return float(value) == 0.0
    except ValueError:
        return False


def is_hidden(node: DomNode) -> bool:
    """Static visibility test on the inline style of a single element."""
    style = node.get_attr("style")
    if not style:
        return False
    decls = _style_declarations(style)
    if decls.get("display") == "none":
        return True
    if decls.get("visibility") == "hidden":
        return True
    width, height = decls.get("width"), decls.get("height")
    if width is not None and height is not None:
        return _is_zero_length(width) and _is_zero_length(height)
    return False


def strip_zero_width(text: str) -> str:
    for ch in ZERO_WIDTH_CHARS:
        if ch in text:
            text = text.replace(ch, "")
    return text


# Attribute-keyed stylesheet rules: selectors of the form tag[attr=value]
# or [attr=value].  This is the only selector family the mutation machinery
# rewrites, so resolving it keeps the projection stable when a stylesheet
# rule is traded for an equivalent inline style.
_CSS_COMMENT = re.compile(r"/\*.*?\*/", re.S)
_SELECTOR_WITH_ATTR = re.compile(
    r"^\s*([a-zA-Z][\w-]*)?\s*\[\s*([\w-]+)\s*=\s*"
    r"(?:\"([^\"]*)\"|'([^']*)'|([^\]\s]+))\s*\]\s*$")


def attribute_keyed_rules(tree: DomTree) -> list[tuple[str | None, str, str, dict[str, str]]]:
    """``(tag_or_None, attr, value, declarations)`` for every attribute-keyed
    selector in the document's ``<style>`` blocks, in document order."""
    chunks = []
    for _, el in walk_elements(tree):
        if el.tag == "style":
            chunks.append(el.direct_text())
    css = _CSS_COMMENT.sub("", "\n".join(chunks))
    out = []
    for block in css.split("}"):
        if "{" not in block:
            continue
        selectors, _, body = block.partition("{")
        decls = _style_declarations(body)
        if not decls:
            continue
        for selector in selectors.split(","):
            m = _SELECTOR_WITH_ATTR.match(selector)
            if not m:
                continue
            sel_tag = m.group(1).lower() if m.group(1) else None
            sel_value = next(g for g in m.groups()[2:] if g is not None)
            out.append((sel_tag, m.group(2).lower(), sel_value, decls))
    return out


def effective_style(node: DomNode, sheet) -> str | None:
    """Merge matching attribute-keyed stylesheet declarations with the
    element's inline style (inline wins); normalized, sorted by property."""
    decls: dict[str, str] = {}
    for sel_tag, attr, value, rule_decls in sheet:
        if sel_tag is not None and sel_tag != node.tag:
            continue
        if node.get_attr(attr) == value:
            decls.update(rule_decls)
    inline = node.get_attr("style")
    if inline:
        decls.update(_style_declarations(inline))
    if not decls:
        return None
    return "".join(f"{k}:{decls[k]};" for k in sorted(decls))


ProjectionEntry = tuple[str, str, dict[str, str]]


def visible_projection(tree: DomTree) -> list[ProjectionEntry]:
    """Static stand-in for the rendered appearance of the page.

    Each visible element contributes ``(tag, effective_text, appearance
    attributes)`` in document order.  Subtrees hidden by inline style
    (``display:none``, ``visibility:hidden``, zero width and height) and
    non-visual tags (head, script, style, ...) are excluded; effective text
    is zero-width-stripped and whitespace-collapsed; the ``style`` entry is
    the effective style after resolving attribute-keyed stylesheet rules.
    """
    entries: list[ProjectionEntry] = []
    sheet = attribute_keyed_rules(tree)

    def walk(node: DomNode) -> None:
        if node.tag in NONVISUAL_TAGS or is_hidden(node):
            return
        text = " ".join(strip_zero_width(node.direct_text()).split())
        attrs = {a.attr_name: a.value for a in node.attr_nodes
                 if a.attr_name in APPEARANCE_ATTRS and a.attr_name != "style"}
        style = effective_style(node, sheet)
        if style is not None:
            attrs["style"] = style
        entries.append((node.tag, text, attrs))
        for child in node.element_children:
            walk(child)

    walk(tree.root)
    return entries


def node_at(tree: DomTree, path: tuple[int, ...]) -> DomNode:
    """Resolve a content path: indices over non-attribute children, rooted at
    the document root (the empty path)."""
    node = tree.root
    for index in path:
        content = node.content_children
        if index >= len(content):
            raise IndexError(f"path {path} does not resolve")
        node = content[index]
    return node


def walk_elements(tree: DomTree):
    """Yield ``(path, element)`` for every element in document order."""

    def walk(node: DomNode, path: tuple[int, ...]):
        if node.node_type == ELEMENT:
            yield path, node
            for i, child in enumerate(node.content_children):
                yield from walk(child, path + (i,))

    yield from walk(tree.root, ())


def walk_text_nodes(tree: DomTree, skip_tags: frozenset[str] = frozenset({"script", "style"})):
    """Yield ``(path, text_node)`` in document order, skipping text inside
    ``skip_tags`` elements."""

    def walk(node: DomNode, path: tuple[int, ...]):
        for i, child in enumerate(node.content_children):
            if child.node_type == TEXT:
                yield path + (i,), child
            elif child.node_type == ELEMENT and child.tag not in skip_tags:
                yield from walk(child, path + (i,))

    if tree.root.tag not in skip_tags:
        yield from walk(tree.root, ())


def isomorphic(a: DomNode, b: DomNode) -> bool:
    """Structural equality: same type, tag/name/value, and children."""
    if a.node_type != b.node_type:
        return False
    if a.node_type == ELEMENT:
        if a.tag != b.tag or len(a.children) != len(b.children):
            return False
        return all(isomorphic(x, y) for x, y in zip(a.children, b.children))
    return a.value == b.value and a.attr_name == b.attr_name


def element_count(tree: DomTree) -> int:
    return sum(1 for _ in walk_elements(tree))
