import random
from html.parser import HTMLParser

import pytest

from phishevade.dom import (
    ELEMENT,
    DomNode,
    DomTree,
    ParseError,
    bfs_layers,
    element_count,
    isomorphic,
    parse_html,
    serialize,
    visible_projection,
    walk_elements,
)

from conftest import PAYPAL_URL, fixture_path


def test_parse_simple_structure():
    tree = parse_html("<html><body><p>hi</p></body></html>")
    body = tree.root.element_children[0]
    p = body.element_children[0]
    assert tree.root.tag == "html"
    assert p.tag == "p"
    texts = [c for c in p.content_children if c.node_type == "text"]
    assert len(texts) == 1 and texts[0].value == "hi"


def test_parse_empty_document_yields_bare_root():
    tree = parse_html("")
    assert tree.root.tag == "html"
    assert tree.root.children == []


def test_parse_rejects_invalid_utf8():
    with pytest.raises(ParseError):
        parse_html(b"<p>\xff\xfe</p>")


def test_parse_is_tag_soup_tolerant():
    tree = parse_html("<html><body><div><p>one<p>two</div><b>x</body>")
    assert serialize(tree)  # no crash, tree well formed
    for _, el in walk_elements(tree):
        for child in el.children:
            if child.node_type != ELEMENT:
                assert not child.children


def test_duplicate_attributes_keep_first():
    tree = parse_html('<p class="a" class="b">x</p>')
    p = tree.root.element_children[0]
    assert p.get_attr("class") == "a"
    assert len(p.attr_nodes) == 1


class _DepthCounter(HTMLParser):
    """Independent max-element-depth counter used as a reference for the
    BFS layer count (depth of tree == number of layers)."""

    VOID = {"area", "base", "br", "col", "embed", "hr", "img", "input",
            "link", "meta", "param", "source", "track", "wbr"}

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.stack = []
        self.max_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag in self.VOID:
            self.max_depth = max(self.max_depth, len(self.stack) + 1)
            return
        self.stack.append(tag)
        self.max_depth = max(self.max_depth, len(self.stack))

    def handle_endtag(self, tag):
        if tag in self.stack:
            while self.stack and self.stack.pop() != tag:
                pass


def test_paypal_fixture_layer_count_matches_reference_parser():
    with open(fixture_path("login_paypal.html"), "r", encoding="utf-8") as fh:
        text = fh.read()
    counter = _DepthCounter()
    counter.feed(text)
    tree = parse_html(text, PAYPAL_URL)
    assert len(bfs_layers(tree)) == counter.max_depth == 5


def test_paypal_fixture_layer_sizes_match_hand_count():
    # hand-drawn: html | head body | title style div script script |
    # form p a a img | input input button
    with open(fixture_path("login_paypal.html"), "rb") as fh:
        tree = parse_html(fh.read(), PAYPAL_URL)
    sizes = [len(layer) for layer in bfs_layers(tree)]
    assert sizes == [1, 2, 5, 5, 3]
    assert [n.tag for n in bfs_layers(tree)[3]] == ["form", "p", "a", "a", "img"]


def test_serialize_contains_source_markup():
    tree = parse_html("<p>hi</p>")
    assert "<p>hi</p>" in serialize(tree)


def test_serialize_escapes_attribute_quotes_round_trip():
    node = DomNode.element("div", {"title": 'say "hi" & go'})
    tree = DomTree(DomNode.element("html", children=[node]))
    text = serialize(tree)
    assert "&quot;" in text and "&amp;" in text
    again = parse_html(text)
    assert again.root.element_children[0].get_attr("title") == 'say "hi" & go'


FIXTURE_FILES = ["login_paypal.html", "login_bank.html", "news_home.html",
                 "shop_index.html", "blog_post.html"]


@pytest.mark.parametrize("name", FIXTURE_FILES)
def test_round_trip_fixpoint_on_corpus(name):
    with open(fixture_path(name), "rb") as fh:
        data = fh.read()
    first = parse_html(data)
    text1 = serialize(first)
    second = parse_html(text1)
    assert isomorphic(first.root, second.root)
    assert serialize(second) == text1  # serialize∘parse is a fixpoint


def _random_tree(rng: random.Random, depth=3) -> DomNode:
    tag = rng.choice(["div", "p", "span", "ul", "li"])
    el = DomNode.element(tag)
    for _ in range(rng.randrange(3)):
        el.set_attr(rng.choice(["class", "id", "title", "data-x"]),
                    rng.choice(["a b", "c&d", 'q"r', "plain", ""]))
    for _ in range(rng.randrange(3)):
        roll = rng.random()
        if roll < 0.4 and depth > 0:
            el.children.append(_random_tree(rng, depth - 1))
        elif roll < 0.8:
            el.children.append(DomNode.text(rng.choice(
                ["hello", "a < b", "x & y", "tok1 tok2"])))
        else:
            el.children.append(DomNode.comment("note"))
    return el


def test_round_trip_random_trees():
    rng = random.Random(7)
    for _ in range(50):
        tree = DomTree(DomNode.element("html", children=[_random_tree(rng)]))
        once = parse_html(serialize(tree))
        twice = parse_html(serialize(once))
        assert isomorphic(once.root, twice.root)


def test_script_content_round_trips_unescaped():
    tree = parse_html("<html><body><script>if(a<b){c&&d();}</script></body></html>")
    text = serialize(tree)
    assert "if(a<b){c&&d();}" in text
    again = parse_html(text)
    assert isomorphic(tree.root, again.root)


def test_adjacent_data_chunks_coalesce():
    # a dropped stray end tag splits the surrounding data into two chunks
    tree = parse_html('<html><b>"</a>x</b></html>')
    b = tree.root.element_children[0]
    texts = [c for c in b.content_children if c.node_type == "text"]
    assert len(texts) == 1 and texts[0].value == '"x'


SOUP_PIECES = [
    "<div>", "</div>", "<p>", "</p>", "<a href='http://x.y/'>", "</a>",
    "<input type=text>", "<img src=a.png>", "<br>", "<b>", "</i>", "</b>",
    "text one", "&amp;", "&#8203;", "&bogus;", "<script>if(a<b){}</script>",
    "<style>p{color:red}</style>", "<!-- c -->", "< notatag", ">", '"',
    "<form action=/x>", "</form>", "<td>", "</table>",
    "<FORM ACTION='HTTP://Q.R/'>", '<a href="u&amp;v">',
    "<div style='display:none'>", "<p class=a class=b>",
    "<input type=password>", "\u200b\u200c token", "<span", "attr=val>",
]


def test_round_trip_stable_on_random_tag_soup():
    from phishevade.features import extract_page_features

    rng = random.Random(99)
    for _ in range(500):
        doc = "".join(rng.choice(SOUP_PIECES)
                      for _ in range(rng.randrange(1, 25)))
        first = parse_html(doc, "http://fuzz.test/p")
        again = parse_html(serialize(first), "http://fuzz.test/p")
        assert isomorphic(first.root, again.root), doc
        extract_page_features(first)      # no crashes on soup
        visible_projection(first)
        bfs_layers(first)


def test_layer_partition_covers_every_element(paypal_page):
    layers = bfs_layers(paypal_page)
    total = sum(len(layer) for layer in layers)
    assert total == element_count(paypal_page)
    seen = set()
    for layer in layers:
        for node in layer:
            assert id(node) not in seen
            seen.add(id(node))


def test_single_element_tree_layers():
    tree = parse_html("")
    assert bfs_layers(tree) == [[tree.root]]


def test_root_children_layer_order():
    tree = parse_html("<html><i>a</i><b>b</b><u>c</u></html>")
    layers = bfs_layers(tree)
    assert [n.tag for n in layers[1]] == ["i", "b", "u"]


# -- visible projection -------------------------------------------------------

def test_hidden_subtree_excluded():
    base = parse_html("<html><body><p>shown</p></body></html>")
    extra = parse_html('<html><body><p>shown</p>'
                       '<div style="display:none">x<span>y</span></div>'
                       "</body></html>")
    assert visible_projection(base) == visible_projection(extra)


def test_visibility_hidden_and_zero_size_excluded():
    shown = parse_html("<html><body><p>t</p></body></html>")
    hidden1 = parse_html('<html><body><p>t</p>'
                         '<b style="visibility:hidden">x</b></body></html>')
    hidden2 = parse_html('<html><body><p>t</p>'
                         '<b style="width:0;height:0px">x</b></body></html>')
    assert visible_projection(hidden1) == visible_projection(shown)
    assert visible_projection(hidden2) == visible_projection(shown)


def test_zero_width_text_equal_effective_text():
    a = parse_html("<html><body><p>Hell&#8203;o</p></body></html>")
    b = parse_html("<html><body><p>Hello</p></body></html>")
    assert visible_projection(a) == visible_projection(b)


def test_onclick_not_in_appearance_whitelist():
    a = parse_html('<html><body><a href="u">x</a></body></html>')
    b = parse_html('<html><body><a href="u" onclick="go()">x</a></body></html>')
    # href is not appearance either; onclick addition must not show up
    assert visible_projection(a) == visible_projection(b)


def test_projection_keeps_appearance_attributes():
    tree = parse_html('<html><body>'
                      '<img src="a.png" width="5" onload="x()"></body></html>')
    entry = visible_projection(tree)[-1]
    assert entry[0] == "img"
    assert entry[2] == {"src": "a.png", "width": "5"}


def test_projection_sound_under_hidden_mutations(paypal_page):
    before = visible_projection(paypal_page)
    mutated = paypal_page.copy()
    body = mutated.root.element_children[1]
    hidden = DomNode.element("div", {"style": "display:none"},
                             [DomNode.text("invisible bonus")])
    body.children.append(hidden)
    assert visible_projection(mutated) == before
