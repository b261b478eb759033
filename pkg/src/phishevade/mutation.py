"""Appearance- and functionality-preserving page mutations.

Three node operations cover every feature-level edit:

* ``modify_attribute`` removes a function-related attribute and re-creates
  its effect through an event handler (``onclick="this.href='...';"``),
  inlining any stylesheet rules that were keyed on the removed attribute.
* ``modify_text`` splits a term with a zero-width space so term extraction
  misses it while the rendering is unchanged.
* ``add_invisible_element`` appends a ``display:none`` element under body,
  carrying feature-bearing attributes or text.

On top of these, ``plan_delete_feature`` and ``plan_add_rule`` build the
feature-level mutation plans used by the attacks.  Node paths index content
children only (attribute nodes are addressed by element path plus name), so
paths stay valid across attribute rewrites and appended additions.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from urllib.parse import urljoin, urlsplit

from . import features as F
from .dom import (
    ELEMENT,
    TEXT,
    DomNode,
    DomTree,
    attribute_keyed_rules,
    node_at,
    visible_projection,
    walk_elements,
    walk_text_nodes,
)
from .features import (
    Feature,
    extract_all_features,
    extract_page_features,
    is_external,
    registrable_domain,
    term_spans,
)

ZERO_WIDTH_SPACE = "\u200b"

# Modifiable function-related attributes per element, with the event used to
# restore the removed attribute at interaction time.
MODIFIABLE_ATTRS: dict[str, tuple[frozenset[str], str]] = {
    "button": (frozenset({
        "form", "formaction", "formenctype", "formmethod", "formnovalidate",
        "formtarget", "name", "type", "value"}), "onclick"),
    "input": (frozenset({
        "accept", "form", "formaction", "formenctype", "formmethod",
        "formnovalidate", "formtarget", "max", "min", "name", "placeholder",
        "required", "size", "step", "type"}), "onfocus"),
    "form": (frozenset({
        "action", "enctype", "method", "name", "novalidate", "target"}),
        "oninput"),
    "a": (frozenset({
        "download", "href", "hreflang", "media", "rel", "target", "type"}),
        "onclick"),
    "table": (frozenset({"summary"}), "onmousemove"),
}

# The input "type" attribute is only modifiable for these values: other
# values (radio, checkbox, ...) render controls whose look cannot be
# reproduced with a style attribute.
INPUT_TYPE_MODIFIABLE = frozenset({"reset", "button", "password", "submit", "text"})

DELETABLE_KINDS = frozenset({
    F.PAGE_HAS_TEXT_INPUTS, F.PAGE_HAS_PSWD_INPUTS,
    F.PAGE_EXTERNAL_LINKS_FREQ, F.PAGE_ACTION_OTHER_DOMAIN_FREQ,
    F.PAGE_SECURE_LINKS_FREQ, F.PAGE_IMG_OTHER_DOMAIN_FREQ,
    F.PAGE_ACTION_URL, F.PAGE_LINK_DOMAIN, F.PAGE_TERM,
})

_HANDLER_ASSIGNMENT = re.compile(r"this\.([\w-]+)='((?:\\.|[^'\\])*)';")


class UnsupportedMutation(ValueError):
    """The requested mutation cannot be performed without visible damage."""


class TermNotFound(LookupError):
    """The term does not occur as a token in the target text node."""


class FeatureAbsent(LookupError):
    """The target feature is not present on the page."""


class PathError(LookupError):
    """An operation's target path no longer resolves."""


class UrlFeatureUnaddable(ValueError):
    """URL features cannot be added: URLs are never mutated."""


@dataclass(frozen=True)
class NodeOp:
    kind: str                       # modify_attribute | modify_text | add_invisible_element
    target: tuple[int, ...]         # content path from the root
    payload: dict

    def describe(self) -> str:
        if self.kind == "modify_attribute":
            return f"modify_attribute {self.payload['attr']} at {list(self.target)}"
        if self.kind == "modify_text":
            return f"modify_text {self.payload['term']!r} at {list(self.target)}"
        return f"add_invisible <{self.payload['tag']}>"


@dataclass
class MutationPlan:
    ops: list[NodeOp] = field(default_factory=list)
    provenance: str = "blind"


@dataclass(frozen=True)
class ElementSpec:
    """A flat element harvested for invisible addition: tag, attributes and
    direct text."""
    tag: str
    attrs: tuple[tuple[str, str], ...] = ()
    text: str | None = None

    def to_dict(self) -> dict:
        return {"tag": self.tag, "attrs": dict(self.attrs), "text": self.text}

    @classmethod
    def from_dict(cls, record: dict) -> "ElementSpec":
        return cls(record["tag"], tuple(sorted(record.get("attrs", {}).items())),
                   record.get("text"))


def _escape_js(value: str) -> str:
    return value.replace("\\", "\\\\").replace("'", "\\'")


def _unescape_js(value: str) -> str:
    return re.sub(r"\\(.)", r"\1", value)


def parse_handler_assignments(handler: str) -> dict[str, str]:
    """Recover ``attr -> value`` pairs from a restoration event handler."""
    return {m.group(1): _unescape_js(m.group(2))
            for m in _HANDLER_ASSIGNMENT.finditer(handler)}


def styles_for_attribute(tree: DomTree, tag: str, attr: str, value: str) -> dict[str, str]:
    """Merged declarations from the document's ``<style>`` blocks whose
    selectors key on ``tag[attr=value]`` (or ``[attr=value]``)."""
    decls: dict[str, str] = {}
    for sel_tag, sel_attr, sel_value, rule_decls in attribute_keyed_rules(tree):
        if sel_attr != attr or sel_value != value:
            continue
        if sel_tag is not None and sel_tag != tag:
            continue
        decls.update(rule_decls)
    return decls


def _element_at(tree: DomTree, path: tuple[int, ...]) -> DomNode:
    try:
        node = node_at(tree, path)
    except IndexError as exc:
        raise PathError(str(exc)) from exc
    if node.node_type != ELEMENT:
        raise PathError(f"path {path} is not an element")
    return node


def modify_attribute(tree: DomTree, path: tuple[int, ...], attr: str) -> NodeOp:
    """Plan the removal of ``attr`` on the element at ``path``, restoring the
    same attribute/value through the element's event handler and inlining
    stylesheet rules keyed on the attribute."""
    el = _element_at(tree, path)
    value = el.get_attr(attr)
    if value is None:
        raise PathError(f"element at {path} has no attribute {attr!r}")
    entry = MODIFIABLE_ATTRS.get(el.tag)
    if entry is None or attr not in entry[0]:
        raise UnsupportedMutation(f"<{el.tag} {attr}> is not modifiable")
    if el.tag == "input" and attr == "type" \
            and value.lower() not in INPUT_TYPE_MODIFIABLE:
        raise UnsupportedMutation(
            f"input type={value!r} cannot be imitated with a style attribute")
    event = entry[1]
    style_decls = styles_for_attribute(tree, el.tag, attr, value)
    return NodeOp("modify_attribute", path, {
        "attr": attr,
        "value": value,
        "event": event,
        "assignment": f"this.{attr}='{_escape_js(value)}';",
        "style": "".join(f"{k}:{v};" for k, v in style_decls.items()),
    })


def modify_text(tree: DomTree, path: tuple[int, ...], term: str,
                avoid_terms: set[str] | None = None) -> NodeOp:
    """Plan a zero-width split of ``term`` in the text node at ``path``.

    The split lands at the term midpoint; when a resulting fragment is in
    ``avoid_terms`` the split point shifts by one until both fragments are
    clean, or the operation is abandoned.
    """
    try:
        node = node_at(tree, path)
    except IndexError as exc:
        raise PathError(str(exc)) from exc
    if node.node_type != TEXT:
        raise PathError(f"path {path} is not a text node")
    span = next(((s, e) for t, s, e in term_spans(node.value) if t == term), None)
    if span is None:
        raise TermNotFound(f"{term!r} is not a token of the text node")
    n = len(term)
    if n < 2:
        raise UnsupportedMutation("single-character terms cannot be split")
    mid = (n + 1) // 2
    candidates = list(range(mid, n)) + list(range(mid - 1, 0, -1))
    avoid = avoid_terms or set()
    for cut in candidates:
        if term[:cut] in avoid or term[cut:] in avoid:
            continue
        return NodeOp("modify_text", path, {
            "term": term,
            "offset": span[0] + cut,
        })
    raise UnsupportedMutation(
        f"every split of {term!r} collides with a known term feature")


def _addition_parent_path(tree: DomTree) -> tuple[int, ...]:
    for path, el in walk_elements(tree):
        if el.tag == "body":
            return path
    return ()


def add_invisible_element(tree: DomTree, spec: ElementSpec) -> NodeOp:
    """Plan an invisible append of ``spec`` under body (or the root when the
    document has no body element)."""
    if spec.tag in ("html", "head", "body"):
        raise UnsupportedMutation(f"<{spec.tag}> cannot be appended under body")
    return NodeOp("add_invisible_element", _addition_parent_path(tree), {
        "tag": spec.tag,
        "attrs": dict(spec.attrs),
        "text": spec.text,
    })


# -- applying ops -----------------------------------------------------------

def _apply_in_place(tree: DomTree, op: NodeOp) -> None:
    if op.kind == "modify_attribute":
        el = _element_at(tree, op.target)
        attr = op.payload["attr"]
        if el.get_attr(attr) is None:
            raise PathError(f"attribute {attr!r} vanished at {op.target}")
        el.remove_attr(attr)
        if op.payload["style"]:
            existing = el.get_attr("style")
            if existing and not existing.rstrip().endswith(";"):
                existing = existing.rstrip() + ";"
            el.set_attr("style", (existing or "") + op.payload["style"])
        event = op.payload["event"]
        handler = el.get_attr(event) or ""
        el.set_attr(event, handler + op.payload["assignment"])
    elif op.kind == "modify_text":
        try:
            node = node_at(tree, op.target)
        except IndexError as exc:
            raise PathError(str(exc)) from exc
        offset = op.payload["offset"]
        if node.node_type != TEXT or offset > len(node.value):
            raise PathError(f"text target {op.target} no longer resolves")
        node.value = node.value[:offset] + ZERO_WIDTH_SPACE + node.value[offset:]
    elif op.kind == "add_invisible_element":
        parent = _element_at(tree, op.target)
        el = DomNode(ELEMENT, tag=op.payload["tag"])
        style = None
        for name, value in op.payload["attrs"].items():
            if name == "style":
                style = value
                continue
            el.children.append(DomNode.attribute(name, value))
        if style and not style.rstrip().endswith(";"):
            style = style.rstrip() + ";"
        el.children.append(DomNode.attribute("style", (style or "") + "display:none"))
        text = op.payload["text"]
        if text:
            el.children.append(DomNode.text(text))
        parent.children.append(el)
    else:
        raise ValueError(f"unknown op kind {op.kind!r}")


def apply_op(tree: DomTree, op: NodeOp) -> DomTree:
    out = tree.copy()
    _apply_in_place(out, op)
    return out


def apply(tree: DomTree, plan: MutationPlan) -> DomTree:
    """Apply a plan, producing a new tree; the input is untouched."""
    out = tree.copy()
    for op in plan.ops:
        _apply_in_place(out, op)
    return out


# -- feature-level planners ---------------------------------------------------

def deletable_feature(canonical: str) -> bool:
    kind = F.feature_kind(canonical)
    return kind in DELETABLE_KINDS


def addable_feature(canonical: str) -> bool:
    kind = F.feature_kind(canonical)
    return kind is not None and kind not in F.URL_KINDS


def _internal_url(tree: DomTree, scheme: str = "http") -> str:
    try:
        host = urlsplit(tree.source_url).hostname
    except ValueError:
        host = None
    return f"{scheme}://{host}/" if host else "/"


_EXTERNAL_PAD_URL = "http://pad-external.invalid/"


def _dilution_added(num: int, den: int, threshold: float) -> int:
    """Smallest n with num / (den + n) < threshold."""
    n = max(0, int(num / threshold) - den - 1)
    while num / (den + n) >= threshold:
        n += 1
    return n


def _boost_added(num: int, den: int, threshold: float) -> int:
    """Smallest n with (num + n) / (den + n) >= threshold (n >= 1)."""
    n = 1
    while (num + n) / (den + n) < threshold:
        n += 1
    return n


def _satisfied(fmap, canonical: str, freq_detect_threshold: float) -> bool:
    value = fmap.get(canonical, 0.0)
    if value == 0.0:
        return False
    if F.is_frequency_feature(canonical) and value < freq_detect_threshold:
        return False
    return True


def plan_delete_feature(tree: DomTree, canonical: str,
                        freq_detect_threshold: float = 0.05,
                        avoid_terms: set[str] | None = None) -> MutationPlan:
    """Build a plan that zeroes ``canonical`` (or, for frequency features,
    drives it below the detection threshold) on the page."""
    feature = Feature.parse(canonical)
    if feature is None:
        raise UnsupportedMutation(f"unknown feature {canonical!r}")
    if feature.kind in F.URL_KINDS:
        raise UnsupportedMutation("URL features cannot be deleted: URLs are never mutated")
    if feature.kind not in DELETABLE_KINDS:
        raise UnsupportedMutation(f"{feature.kind} cannot be deleted")
    fmap = extract_page_features(tree)
    if canonical not in fmap:
        raise FeatureAbsent(canonical)

    plan = MutationPlan(provenance=f"delete {canonical}")
    work = tree.copy()

    def push(op: NodeOp) -> None:
        plan.ops.append(op)
        _apply_in_place(work, op)

    kind, payload = feature.kind, feature.payload
    if kind == F.PAGE_TERM:
        # break every token occurrence of the term across all text nodes
        guard = 0
        while f"{F.PAGE_TERM}={payload}" in extract_page_features(work):
            guard += 1
            if guard > 10_000:
                raise UnsupportedMutation(f"term {payload!r} keeps reappearing")
            for path, node in walk_text_nodes(work):
                if any(t == payload for t, _, _ in term_spans(node.value)):
                    push(modify_text(work, path, payload, avoid_terms))
                    break
            else:
                break
    elif kind in (F.PAGE_HAS_TEXT_INPUTS, F.PAGE_HAS_PSWD_INPUTS):
        wanted = "text" if kind == F.PAGE_HAS_TEXT_INPUTS else "password"
        for path, el in list(walk_elements(work)):
            if el.tag == "input" and (el.get_attr("type") or "").lower() == wanted:
                push(modify_attribute(work, path, "type"))
    elif kind == F.PAGE_ACTION_URL:
        for path, el in list(walk_elements(work)):
            if el.tag == "form" and el.get_attr("action") == payload:
                push(modify_attribute(work, path, "action"))
    elif kind == F.PAGE_LINK_DOMAIN:
        for path, el in list(walk_elements(work)):
            if el.tag != "a":
                continue
            href = el.get_attr("href")
            if href and is_external(href, work.source_url) and \
                    registrable_domain(urljoin(work.source_url, href)) == payload:
                push(modify_attribute(work, path, "href"))
    elif kind in (F.PAGE_EXTERNAL_LINKS_FREQ, F.PAGE_SECURE_LINKS_FREQ):
        total, external, secure = F.link_counts(work)
        num = external if kind == F.PAGE_EXTERNAL_LINKS_FREQ else secure
        added = _dilution_added(num, total, freq_detect_threshold)
        spec = ElementSpec("a", (("href", _internal_url(work)),))
        for _ in range(added):
            push(add_invisible_element(work, spec))
    elif kind == F.PAGE_ACTION_OTHER_DOMAIN_FREQ:
        total, other = F.action_counts(work)
        added = _dilution_added(other, total, freq_detect_threshold)
        spec = ElementSpec("form", (("action", _internal_url(work)),))
        for _ in range(added):
            push(add_invisible_element(work, spec))
    elif kind == F.PAGE_IMG_OTHER_DOMAIN_FREQ:
        total, other = F.img_counts(work)
        added = _dilution_added(other, total, freq_detect_threshold)
        spec = ElementSpec("img", (("src", _internal_url(work)),))
        for _ in range(added):
            push(add_invisible_element(work, spec))
    return plan


def _spec_for_feature(work: DomTree, feature: Feature,
                      freq_detect_threshold: float) -> list[ElementSpec]:
    kind, payload = feature.kind, feature.payload
    if kind == F.PAGE_TERM:
        return [ElementSpec("div", (), payload)]
    if kind == F.PAGE_HAS_FORMS:
        return [ElementSpec("form")]
    if kind == F.PAGE_HAS_TEXT_INPUTS:
        return [ElementSpec("input", (("type", "text"),))]
    if kind == F.PAGE_HAS_PSWD_INPUTS:
        return [ElementSpec("input", (("type", "password"),))]
    if kind == F.PAGE_HAS_RADIO_INPUTS:
        return [ElementSpec("input", (("type", "radio"),))]
    if kind == F.PAGE_HAS_CHECK_INPUTS:
        return [ElementSpec("input", (("type", "checkbox"),))]
    if kind in (F.PAGE_NUM_SCRIPTS_GT1, F.PAGE_NUM_SCRIPTS_GT6):
        wanted = 2 if kind == F.PAGE_NUM_SCRIPTS_GT1 else 7
        current = sum(1 for _, el in walk_elements(work) if el.tag == "script")
        return [ElementSpec("script")] * max(0, wanted - current)
    if kind == F.PAGE_ACTION_URL:
        return [ElementSpec("form", (("action", payload),))]
    if kind == F.PAGE_LINK_DOMAIN:
        href = f"http://{payload}/"
        if not is_external(href, work.source_url):
            raise UnsupportedMutation(
                f"{payload!r} is the page's own domain, the link would not be external")
        return [ElementSpec("a", (("href", href),))]
    if kind == F.PAGE_EXTERNAL_LINKS_FREQ:
        total, external, _ = F.link_counts(work)
        n = _boost_added(external, total, freq_detect_threshold)
        return [ElementSpec("a", (("href", _EXTERNAL_PAD_URL),))] * n
    if kind == F.PAGE_SECURE_LINKS_FREQ:
        total, _, secure = F.link_counts(work)
        n = _boost_added(secure, total, freq_detect_threshold)
        return [ElementSpec("a", (("href", _internal_url(work, "https")),))] * n
    if kind == F.PAGE_ACTION_OTHER_DOMAIN_FREQ:
        total, other = F.action_counts(work)
        n = _boost_added(other, total, freq_detect_threshold)
        return [ElementSpec("form", (("action", _EXTERNAL_PAD_URL),))] * n
    if kind == F.PAGE_IMG_OTHER_DOMAIN_FREQ:
        total, other = F.img_counts(work)
        n = _boost_added(other, total, freq_detect_threshold)
        return [ElementSpec("img", (("src", _EXTERNAL_PAD_URL),))] * n
    raise UnsupportedMutation(f"{kind} cannot be added")


def plan_add_rule(tree: DomTree, rule_features,
                  freq_detect_threshold: float = 0.05) -> MutationPlan:
    """Build a plan that makes every feature of a rule satisfied, so the
    rule hits after application."""
    parsed = []
    for canonical in sorted(rule_features):
        feature = Feature.parse(canonical)
        if feature is None:
            raise UnsupportedMutation(f"unknown feature {canonical!r}")
        # URL features are kept: they only fail the plan when unsatisfied
        parsed.append((canonical, feature))

    plan = MutationPlan(provenance=f"add rule over {sorted(rule_features)}")
    work = tree.copy()
    for _ in range(10):
        fmap = extract_all_features(work)
        missing = [(c, f) for c, f in parsed
                   if not _satisfied(fmap, c, freq_detect_threshold)]
        if not missing:
            return plan
        for canonical, feature in missing:
            if feature.kind in F.URL_KINDS:
                raise UrlFeatureUnaddable(canonical)
            for spec in _spec_for_feature(work, feature, freq_detect_threshold):
                op = add_invisible_element(work, spec)
                plan.ops.append(op)
                _apply_in_place(work, op)
    raise UnsupportedMutation(
        "rule features keep interfering; could not satisfy all of "
        + ", ".join(sorted(rule_features)))


# -- preservation check -------------------------------------------------------

@dataclass
class PreservationReport:
    projection_equal: bool
    functional_equal: bool
    problems: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.projection_equal and self.functional_equal


def _check_functional(before: DomNode, after: DomNode, path: str,
                      problems: list[str]) -> None:
    if before.node_type != after.node_type:
        problems.append(f"{path}: node type changed")
        return
    if before.node_type != ELEMENT:
        return
    if before.tag != after.tag:
        problems.append(f"{path}: tag {before.tag} became {after.tag}")
        return
    before_attrs, after_attrs = before.attrs, after.attrs
    entry = MODIFIABLE_ATTRS.get(before.tag)
    for name, value in before_attrs.items():
        if name in after_attrs:
            continue
        if entry is None or name not in entry[0]:
            problems.append(f"{path}: attribute {name!r} removed from <{before.tag}>")
            continue
        handler = after_attrs.get(entry[1], "")
        restored = parse_handler_assignments(handler)
        if restored.get(name) != value:
            problems.append(
                f"{path}: removed {name!r} has no event handler restoring "
                f"{name}={value!r}")
    before_content = before.content_children
    after_content = after.content_children
    if len(after_content) < len(before_content):
        problems.append(f"{path}: content children removed under <{before.tag}>")
    for i, (b, a) in enumerate(zip(before_content, after_content)):
        _check_functional(b, a, f"{path}/{i}", problems)


def preservation_check(before: DomTree, after: DomTree) -> PreservationReport:
    """PASS iff the visible projections are equal and every removed
    function-related attribute is restored by an event handler."""
    projection_equal = visible_projection(before) == visible_projection(after)
    problems: list[str] = []
    if not projection_equal:
        problems.append("visible projections differ")
    _check_functional(before.root, after.root, "", problems)
    functional_equal = not [p for p in problems if p != "visible projections differ"]
    return PreservationReport(projection_equal, functional_equal, problems)


# -- addition pool -------------------------------------------------------------

HARVEST_TAGS = frozenset({
    "a", "img", "input", "form", "button", "div", "p", "span", "li",
    "h1", "h2", "h3", "label", "strong", "em",
})


def harvest_addition_pool(trees) -> list[ElementSpec]:
    """Collect flat element specs (tag, attributes, direct text) from pages,
    in document order, deduplicated."""
    seen = set()
    pool: list[ElementSpec] = []
    for tree in trees:
        for _, el in walk_elements(tree):
            if el.tag not in HARVEST_TAGS:
                continue
            attrs = tuple(sorted((a.attr_name, a.value) for a in el.attr_nodes
                                 if not a.attr_name.startswith("on")))
            text = el.direct_text().strip() or None
            spec = ElementSpec(el.tag, attrs, text)
            if spec in seen:
                continue
            seen.add(spec)
            pool.append(spec)
    return pool


def save_pool(pool, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for spec in pool:
            fh.write(json.dumps(spec.to_dict(), sort_keys=True) + "\n")


def load_pool(path) -> list[ElementSpec]:
    pool = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                pool.append(ElementSpec.from_dict(json.loads(line)))
    return pool
