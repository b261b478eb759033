import random
import struct

import pytest

from phishevade.dom import parse_html
from phishevade.features import (
    Feature,
    UrlError,
    extract_page_features,
    extract_url_features,
    hash_feature,
    terms_of,
)

from conftest import build_page


# -- reference SHA-256 (independent of hashlib) --------------------------------

_K = [
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1,
    0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3,
    0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786,
    0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
    0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
    0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
    0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
    0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
    0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a,
    0x5b9cca4f, 0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
    0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2,
]
_H0 = [0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
       0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19]


def _rotr(x, n):
    return ((x >> n) | (x << (32 - n))) & 0xFFFFFFFF


def reference_sha256(data: bytes) -> str:
    length = len(data) * 8
    data += b"\x80"
    while len(data) % 64 != 56:
        data += b"\x00"
    data += struct.pack(">Q", length)
    h = list(_H0)
    for chunk_start in range(0, len(data), 64):
        w = list(struct.unpack(">16I", data[chunk_start:chunk_start + 64]))
        for i in range(16, 64):
            s0 = _rotr(w[i - 15], 7) ^ _rotr(w[i - 15], 18) ^ (w[i - 15] >> 3)
            s1 = _rotr(w[i - 2], 17) ^ _rotr(w[i - 2], 19) ^ (w[i - 2] >> 10)
            w.append((w[i - 16] + s0 + w[i - 7] + s1) & 0xFFFFFFFF)
        a, b, c, d, e, f, g, hh = h
        for i in range(64):
            s1 = _rotr(e, 6) ^ _rotr(e, 11) ^ _rotr(e, 25)
            ch = (e & f) ^ (~e & g)
            t1 = (hh + s1 + ch + _K[i] + w[i]) & 0xFFFFFFFF
            s0 = _rotr(a, 2) ^ _rotr(a, 13) ^ _rotr(a, 22)
            maj = (a & b) ^ (a & c) ^ (b & c)
            t2 = (s0 + maj) & 0xFFFFFFFF
            hh, g, f, e, d, c, b, a = (
                g, f, e, (d + t1) & 0xFFFFFFFF, c, b, a, (t1 + t2) & 0xFFFFFFFF)
        h = [(x + y) & 0xFFFFFFFF for x, y in zip(h, [a, b, c, d, e, f, g, hh])]
    return "".join(f"{x:08x}" for x in h)


def test_hash_feature_matches_reference_implementation():
    for text in ["PageTerm=login", "PageHasForms", "UrlTld=com",
                 "PageTerm=élève"]:
        assert hash_feature(text) == reference_sha256(text.encode("utf-8"))
    # frozen value, computed offline with the reference implementation
    assert hash_feature("PageTerm=login") == (
        "7f49be8c506c4deb716fd277d1bd9caa0ede6fb2987afb043e51a4d93d032991")


def test_hash_feature_deterministic_and_rejects_empty():
    assert hash_feature("PageTerm=a") == hash_feature("PageTerm=a")
    with pytest.raises(ValueError):
        hash_feature("")


# -- page features --------------------------------------------------------------

def test_single_form_sets_page_has_forms():
    page = build_page(bare_form=True)
    fmap = extract_page_features(page)
    assert fmap["PageHasForms"] == 1.0


def test_secure_links_freq_hand_count():
    # 4 links, 3 of them https
    page = build_page(secure_links=3, insecure_external_links=1)
    fmap = extract_page_features(page)
    assert fmap["PageSecureLinksFreq"] == pytest.approx(0.75)
    assert fmap["PageExternalLinksFreq"] == pytest.approx(1.0)


def test_zero_denominator_frequencies_absent():
    page = build_page(terms=["hello"])
    fmap = extract_page_features(page)
    assert "PageSecureLinksFreq" not in fmap
    assert "PageExternalLinksFreq" not in fmap


def test_boolean_features_absent_when_false():
    page = build_page(terms=["x"])
    fmap = extract_page_features(page)
    assert "PageHasForms" not in fmap
    assert "PageNumScriptTags>1" not in fmap


def test_input_kinds_and_script_thresholds():
    page = build_page(input_types=["text", "password", "radio", "checkbox"],
                      scripts=7)
    fmap = extract_page_features(page)
    for key in ["PageHasTextInputs", "PageHasPswdInputs",
                "PageHasRadioInputs", "PageHasCheckInputs",
                "PageNumScriptTags>1", "PageNumScriptTags>6"]:
        assert fmap[key] == 1.0
    two = extract_page_features(build_page(scripts=2))
    assert two["PageNumScriptTags>1"] == 1.0
    assert "PageNumScriptTags>6" not in two


def test_action_and_link_wildcards():
    page = build_page(actions=["http://collector.evil.example/post"],
                      insecure_external_links=1)
    fmap = extract_page_features(page)
    assert fmap["PageActionURL=http://collector.evil.example/post"] == 1.0
    assert fmap["PageLinkDomain=example.com"] == 1.0
    assert fmap["PageActionOtherDomainFreq"] == pytest.approx(1.0)


def test_img_other_domain_freq_uses_src():
    page = build_page(imgs=["http://cdn.pics.example.org/a.png",
                            "http://seed.test/b.png"])
    fmap = extract_page_features(page)
    assert fmap["PageImgOtherDomainFreq"] == pytest.approx(0.5)


def test_page_terms_raw_tokenization():
    page = parse_html("<html><body><p>Hello World!</p>"
                      "<p>Hello again</p></body></html>",
                      "http://seed.test/")
    fmap = extract_page_features(page)
    assert fmap["PageTerm=Hello"] == 1.0
    assert fmap["PageTerm=World!"] == 1.0          # no punctuation handling
    assert "PageTerm=hello" not in fmap            # case sensitive


def test_zero_width_characters_split_terms():
    page = parse_html("<html><body><p>Hell\u200bo</p></body></html>",
                      "http://seed.test/")
    fmap = extract_page_features(page)
    assert "PageTerm=Hello" not in fmap
    assert fmap["PageTerm=Hell"] == 1.0 and fmap["PageTerm=o"] == 1.0


def test_script_text_not_tokenized_as_terms():
    page = parse_html("<html><body><script>var secretToken=1;</script>"
                      "<p>visible</p></body></html>", "http://seed.test/")
    fmap = extract_page_features(page)
    assert "PageTerm=var" not in fmap
    assert "PageTerm=visible" in fmap


def test_term_completeness_property():
    rng = random.Random(3)
    words = ["alpha", "Beta!", "x1", "longish-token", "über"]
    for _ in range(20):
        chosen = [rng.choice(words) for _ in range(rng.randrange(1, 8))]
        page = build_page(terms=[" ".join(chosen)])
        fmap = extract_page_features(page)
        for token in terms_of(" ".join(chosen)):
            assert fmap[f"PageTerm={token}"] == 1.0


def test_frequency_bounds_property():
    rng = random.Random(9)
    for _ in range(25):
        page = build_page(secure_links=rng.randrange(4),
                          insecure_external_links=rng.randrange(4),
                          internal_links=rng.randrange(4),
                          imgs=["http://other.example.net/i.png"] * rng.randrange(3))
        fmap = extract_page_features(page)
        for key, value in fmap.items():
            if key in ("PageExternalLinksFreq", "PageSecureLinksFreq",
                       "PageActionOtherDomainFreq", "PageImgOtherDomainFreq"):
                assert 0.0 < value <= 1.0


def test_adding_internal_link_decreases_external_freq():
    for internal in range(0, 4):
        fewer = build_page(insecure_external_links=2, internal_links=internal)
        more = build_page(insecure_external_links=2, internal_links=internal + 1)
        a = extract_page_features(fewer)["PageExternalLinksFreq"]
        b = extract_page_features(more)["PageExternalLinksFreq"]
        assert b < a


# -- URL features ---------------------------------------------------------------

def canon(features) -> set[str]:
    return {f.canonical for f in features}


def test_url_tokenization_manual():
    got = canon(extract_url_features("http://login.example.com/a/b"))
    assert got == {"UrlTld=com", "UrlDomain=example.com",
                   "UrlOtherHostToken=login", "UrlPathToken=a", "UrlPathToken=b"}


def test_url_bare_domain_has_no_extra_tokens():
    got = canon(extract_url_features("http://example.com/"))
    assert got == {"UrlTld=com", "UrlDomain=example.com"}


def test_url_multi_label_suffix():
    got = canon(extract_url_features("https://shop.trading.co.uk/cart"))
    assert "UrlTld=co.uk" in got
    assert "UrlDomain=trading.co.uk" in got
    assert "UrlOtherHostToken=shop" in got


def test_url_error_on_garbage():
    with pytest.raises(UrlError):
        extract_url_features("not a url")
    with pytest.raises(UrlError):
        extract_url_features("/relative/only")


def test_hash_injectivity_over_corpus_scale_features(paypal_page, legit_pages):
    seen: dict[str, str] = {}
    for page in [paypal_page, *legit_pages]:
        fmap = extract_page_features(page)
        for key in list(fmap) + [f.canonical for f in
                                 extract_url_features(page.source_url)]:
            digest = hash_feature(key)
            assert seen.setdefault(digest, key) == key
    assert len(seen) > 40


def test_feature_canonical_forms():
    assert Feature("PageHasForms").canonical == "PageHasForms"
    assert Feature("PageTerm", "login").canonical == "PageTerm=login"
    assert Feature.parse("PageTerm=login") == Feature("PageTerm", "login")
    assert Feature.parse("PageNumScriptTags>1") == Feature("PageNumScriptTags>1")
    assert Feature.parse("NotAFeature=x") is None
    with pytest.raises(ValueError):
        Feature("PageTerm")
    with pytest.raises(ValueError):
        Feature("PageHasForms", "payload")
