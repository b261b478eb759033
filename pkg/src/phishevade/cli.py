"""Command-line surface: scoring, attacks, defense, inference, pruning,
fixture generation and report tables.

Exit codes: 0 success, 2 IO/schema problem, 3 precondition failure (the
input page is not detected as phishing), 4 attack/search exhausted.

Every command is deterministic given its config and RNG seed; wall-clock
timings are only written when ``--timing`` is passed, so repeated runs
produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, replace

from . import attacks, collision, pelican
from .classifier import (
    Classifier,
    HashFormatError,
    SchemaError,
    ScoreOracle,
    UnknownRuleError,
    find_single_rules,
    find_subset_rules,
    load_model,
    load_rule_features,
    prune,
    save_model,
    score,
)
from .collision import LEGIT, Corpus, harvest_candidates, invert_hashes, load_corpus, load_manifest
from .dom import DomTree, ParseError, load_page, serialize, walk_elements
from . import features as F
from .features import Feature, PAGE_TERM, UrlError, extract_all_features
from .mutation import (
    FeatureAbsent,
    UnsupportedMutation,
    _apply_in_place,
    _spec_for_feature,
    add_invisible_element,
    apply,
    load_pool,
    plan_delete_feature,
)

EXIT_OK = 0
EXIT_IO = 2
EXIT_NOT_PHISHING = 3
EXIT_EXHAUSTED = 4

DEFAULT_URL_HOST = "http://fixtures.test"

# Initial-score buckets used by the report tables.
SCORE_BUCKETS = [
    ("[0.5,0.6)", 0.5, 0.6),
    ("[0.6,0.7)", 0.6, 0.7),
    ("[0.7,0.8)", 0.7, 0.8),
    ("[0.8,0.9)", 0.8, 0.9),
    ("[0.9,1.0)", 0.9, 1.0),
]


class Unreachable(RuntimeError):
    """No combination of undeletable features lands in the requested range."""


@dataclass
class Config:
    model: str | None = None
    corpus: str | None = None
    pool: str | None = None
    tau: float | None = None
    freq_detect_threshold: float | None = None
    rng_seed: int = 0
    budget: int = 2000
    batch: int = 3
    pelican_k: int = 50
    pelican_h_hours: float = 24.0
    pelican_detect_threshold: float = 0.9
    pelican_layer_accept: float = 0.5
    pelican_lookahead: int = 3

    def validate(self) -> None:
        if self.tau is not None and not 0.0 < self.tau < 1.0:
            raise ValueError("tau must be in (0, 1)")
        if not 0.0 < self.pelican_detect_threshold <= 1.0:
            raise ValueError("pelican.detect_threshold must be in (0, 1]")
        if not 0.0 < self.pelican_layer_accept <= 1.0:
            raise ValueError("pelican.layer_accept must be in (0, 1]")
        if self.pelican_lookahead < 1 or self.pelican_k < 0:
            raise ValueError("pelican.lookahead must be >= 1 and pelican.k >= 0")
        if self.batch < 1 or self.budget < 0:
            raise ValueError("batch must be >= 1 and budget >= 0")


_CONFIG_KEYS = {
    "model": ("model", str),
    "corpus": ("corpus", str),
    "pool": ("pool", str),
    "tau": ("tau", float),
    "freq_detect_threshold": ("freq_detect_threshold", float),
    "rng_seed": ("rng_seed", int),
    "budget": ("budget", int),
    "batch": ("batch", int),
    "pelican.k": ("pelican_k", int),
    "pelican.h_hours": ("pelican_h_hours", float),
    "pelican.detect_threshold": ("pelican_detect_threshold", float),
    "pelican.layer_accept": ("pelican_layer_accept", float),
    "pelican.lookahead": ("pelican_lookahead", int),
}


def load_config(path) -> Config:
    """Flat ``key=value`` config file; ``#`` starts a comment line."""
    config = Config()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{line_no}: expected key=value")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in _CONFIG_KEYS:
                raise ValueError(f"{path}:{line_no}: unknown key {key!r}")
            attr, cast = _CONFIG_KEYS[key]
            setattr(config, attr, cast(value))
    config.validate()
    return config


def _config_from_args(args) -> Config:
    config = load_config(args.config) if getattr(args, "config", None) else Config()
    for flag, attr in (("tau", "tau"), ("seed", "rng_seed"), ("budget", "budget"),
                       ("batch", "batch"), ("pool", "pool"),
                       ("freq_threshold", "freq_detect_threshold")):
        value = getattr(args, flag, None)
        if value is not None:
            setattr(config, attr, value)
    config.validate()
    return config


def _default_url(page_path: str) -> str:
    return f"{DEFAULT_URL_HOST}/{os.path.basename(page_path)}"


def _load_model_with_overrides(path, config: Config) -> Classifier:
    model = load_model(path)
    if config.tau is not None:
        model = replace(model, threshold=config.tau)
    if config.freq_detect_threshold is not None:
        model = replace(model, freq_detect_threshold=config.freq_detect_threshold)
    return model


def _dump_json(doc, path=None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


# -- commands --------------------------------------------------------------

def cmd_score(args) -> int:
    config = _config_from_args(args)
    model = _load_model_with_overrides(args.model, config)
    page = load_page(args.page, args.url or _default_url(args.page))
    value = score(model, extract_all_features(page))
    label = "PHISH" if value >= model.threshold else "BENIGN"
    print(f"{value:.6f} {label}")
    return EXIT_OK


def cmd_attack(args) -> int:
    config = _config_from_args(args)
    model = _load_model_with_overrides(args.model, config)
    page = load_page(args.page, args.url or _default_url(args.page))
    oracle = ScoreOracle(model)
    initial = score(model, extract_all_features(page))
    if initial < model.threshold:
        print(f"page scores {initial:.6f} < {model.threshold}: "
              "not detected as phishing", file=sys.stderr)
        return EXIT_NOT_PHISHING

    if args.level == attacks.WHITE:
        knowledge = attacks.white_knowledge(model, oracle)
    elif args.level == attacks.GREY:
        rules = load_rule_features(args.model)
        knowledge = attacks.grey_knowledge(
            rules, oracle, model.threshold, model.freq_detect_threshold)
    else:
        knowledge = attacks.black_knowledge(oracle, model.threshold)

    pool = load_pool(config.pool) if config.pool else []
    result = attacks.run_attack(knowledge, page, pool, config.batch,
                                config.budget, config.rng_seed)

    os.makedirs(args.out, exist_ok=True)
    stem = os.path.splitext(os.path.basename(args.page))[0]
    final_path = os.path.join(args.out, f"{stem}.{args.level}.final.html")
    report_path = os.path.join(args.out, f"{stem}.{args.level}.report.json")
    with open(final_path, "w", encoding="utf-8") as fh:
        fh.write(serialize(result.final_page))
    # final_path is stored relative to the report so reruns into any
    # directory stay byte-identical
    _dump_json(result.to_dict(args.page, os.path.basename(final_path),
                              include_timing=args.timing),
               report_path)
    print(f"{result.status}: score "
          f"{result.trajectory[0].score:.6f} -> {result.trajectory[-1].score:.6f} "
          f"({result.mutated_features} features, {result.mutated_rules} rules, "
          f"{result.queries} queries, {result.additions} additions)")
    return EXIT_OK if result.success else EXIT_EXHAUSTED


def _load_url_set(path) -> set[str]:
    if not path:
        return set()
    with open(path, "r", encoding="utf-8") as fh:
        return {line.strip() for line in fh if line.strip()}


def cmd_defend(args) -> int:
    config = _config_from_args(args)
    model = _load_model_with_overrides(args.model, config)
    page = load_page(args.page, args.url or _default_url(args.page))
    whitelist = _load_url_set(args.whitelist)
    blacklist = _load_url_set(args.blacklist)
    if args.store and os.path.exists(args.store):
        store = pelican.load_store(args.store, config.pelican_k,
                                   config.pelican_h_hours)
    else:
        store = pelican.PhishStore(config.pelican_k, config.pelican_h_hours)
    oracle = ScoreOracle(model)
    verdict = pelican.pipeline(
        page.source_url, page, whitelist, blacklist, store, oracle,
        config.pelican_detect_threshold, config.pelican_layer_accept,
        config.pelican_lookahead, now=args.now)
    if verdict.label == pelican.PHISHING_BY_CLASSIFIER and args.store:
        pelican.save_store(store, args.store)
    _dump_json(verdict.to_dict())
    return EXIT_OK


def cmd_infer(args) -> int:
    corpus = load_corpus(args.corpus)
    manifest = load_manifest(args.manifest)
    candidates = harvest_candidates(corpus)
    report = invert_hashes(candidates, manifest)
    _dump_json(collision.report_to_dict(report, include_timing=args.timing))
    return EXIT_OK


def cmd_prune(args) -> int:
    model = load_model(args.model)
    if args.strategy == "subset":
        targets = sorted({sub for _, sub in find_subset_rules(model)})
    else:
        targets = sorted(find_single_rules(model))
    pruned = prune(model, targets)
    save_model(pruned, args.out, strip_weights=args.strip_weights)
    _dump_json({"strategy": args.strategy, "pruned": targets,
                "count": len(targets)})
    return EXIT_OK


UNDELETABLE_ADDABLE_KINDS = frozenset({
    F.PAGE_HAS_FORMS, F.PAGE_HAS_RADIO_INPUTS, F.PAGE_HAS_CHECK_INPUTS,
    F.PAGE_NUM_SCRIPTS_GT1, F.PAGE_NUM_SCRIPTS_GT6,
})


def generate_fixture_pages(corpus: Corpus, model: Classifier, lo: float,
                           hi: float, count: int,
                           action_url: str) -> list[tuple[str, DomTree, float]]:
    """Personalize legitimate pages into phishing fixtures scoring in
    [lo, hi): rewrite form actions to the collector URL, delete every
    model-relevant deletable feature, then add undeletable features until
    the score lands in the bucket."""
    from itertools import combinations

    usable = [p for p in corpus.pages if p.label == LEGIT
              and any(el.tag == "form" for _, el in walk_elements(p.tree))]
    if not usable:
        raise Unreachable("corpus has no form-bearing legitimate pages")

    model_features = {f for r in model.rules for f in r.features}
    term_prefix = PAGE_TERM + "="
    avoid = {f[len(term_prefix):] for f in model_features
             if f.startswith(term_prefix)}
    t = model.freq_detect_threshold
    out: list[tuple[str, DomTree, float]] = []
    index = 0
    while len(out) < count:
        base = usable[index % len(usable)]
        index += 1
        tree = base.tree.copy()
        for _, el in walk_elements(tree):
            if el.tag == "form":
                el.set_attr("action", action_url)

        # deletion fixpoint over the model's deletable features
        for _ in range(20):
            fmap = extract_all_features(tree)
            deleted = False
            for feat in sorted(model_features):
                if fmap.get(feat, 0.0) == 0.0:
                    continue
                try:
                    plan = plan_delete_feature(tree, feat, t, avoid)
                except (UnsupportedMutation, FeatureAbsent):
                    continue
                if plan.ops:
                    tree = apply(tree, plan)
                    deleted = True
            if not deleted:
                break

        candidates = sorted(
            f for f in model_features
            if Feature.parse(f) is not None
            and Feature.parse(f).kind in UNDELETABLE_ADDABLE_KINDS
            and extract_all_features(tree).get(f, 0.0) == 0.0)
        chosen = None
        for size in range(0, len(candidates) + 1):
            for combo in combinations(candidates, size):
                candidate_tree = tree.copy()
                for feat in combo:
                    feature = Feature.parse(feat)
                    for spec in _spec_for_feature(candidate_tree, feature, t):
                        op = add_invisible_element(candidate_tree, spec)
                        _apply_in_place(candidate_tree, op)
                value = score(model, extract_all_features(candidate_tree))
                if lo <= value < hi:
                    chosen = (candidate_tree, value)
                    break
            if chosen:
                break
        if chosen is None:
            raise Unreachable(
                f"no undeletable-feature combination reaches [{lo}, {hi}) "
                f"for {base.url}")
        out.append((base.url, chosen[0], chosen[1]))
    return out


def cmd_gen_fixtures(args) -> int:
    config = _config_from_args(args)
    model = _load_model_with_overrides(args.model, config)
    corpus = load_corpus(args.corpus)
    lo, hi = (float(v) for v in args.range.split(","))
    pages = generate_fixture_pages(corpus, model, lo, hi, args.count,
                                   args.action_url)
    os.makedirs(args.out, exist_ok=True)
    manifest_path = os.path.join(args.out, "manifest.jsonl")
    with open(manifest_path, "w", encoding="utf-8") as manifest:
        for i, (url, tree, value) in enumerate(pages):
            name = f"fixture_{i:03d}.html"
            with open(os.path.join(args.out, name), "w", encoding="utf-8") as fh:
                fh.write(serialize(tree))
            manifest.write(json.dumps(
                {"url": url, "path": name, "label": "phish",
                 "score": round(value, 6)}, sort_keys=True) + "\n")
    print(f"wrote {len(pages)} fixture pages to {args.out}")
    return EXIT_OK


def _bucket_label(value: float) -> str:
    if value >= 1.0:
        return "1"
    for label, lo, hi in SCORE_BUCKETS:
        if lo <= value < hi:
            return label
    return "<0.5"


def _collect_rows(results_dir) -> list[dict]:
    rows = []
    for name in sorted(os.listdir(results_dir)):
        if not name.endswith(".json"):
            continue
        with open(os.path.join(results_dir, name), "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        if "steps" not in doc:
            continue
        initial = doc["steps"][0]["score"] if doc["steps"] else 0.0
        rows.append({
            "seed": name[: -len(".json")],
            "initial": initial,
            "bucket": _bucket_label(initial),
            "success": bool(doc.get("success")),
            "features": doc.get("mutated_features", 0),
            "rules": doc.get("mutated_rules", 0),
            "queries": doc.get("queries", 0),
            "operations": doc.get("mutated_features", 0) + doc.get("additions", 0),
            "elapsed_ms": doc.get("elapsed_ms"),
        })
    return rows


def _aggregate(rows) -> list[dict]:
    buckets: dict[str, list[dict]] = {}
    for row in rows:
        buckets.setdefault(row["bucket"], []).append(row)
    order = [label for label, _, _ in SCORE_BUCKETS] + ["1", "<0.5"]
    aggregated = []
    for label in order:
        group = buckets.get(label)
        if not group:
            continue
        n = len(group)
        aggregated.append({
            "bucket": label,
            "count": n,
            "succeeded": sum(1 for r in group if r["success"]),
            "mean_features": sum(r["features"] for r in group) / n,
            "mean_rules": sum(r["rules"] for r in group) / n,
            "mean_queries": sum(r["queries"] for r in group) / n,
            "mean_operations": sum(r["operations"] for r in group) / n,
        })
    return aggregated


def cmd_report(args) -> int:
    rows = _collect_rows(args.results)
    aggregated = _aggregate(rows)
    header = (f"{'Score':>10} {'#Seeds':>7} {'#Succeeded':>10} "
              f"{'Feat/Rules':>12} {'Queries':>8} {'Ops':>9}")
    print(header)
    for row in aggregated:
        print(f"{row['bucket']:>10} {row['count']:>7} {row['succeeded']:>10} "
              f"{row['mean_features']:>5.2f}/{row['mean_rules']:<6.2f} "
              f"{row['mean_queries']:>8.1f} {row['mean_operations']:>9.1f}")
    if args.compare:
        other = _aggregate(_collect_rows(args.compare))
        other_by_bucket = {r["bucket"]: r for r in other}
        print(f"\n{'Score':>10} {'Ops (A)':>10} {'Ops (B)':>10}")
        for row in aggregated:
            peer = other_by_bucket.get(row["bucket"])
            right = f"{peer['mean_operations']:.1f}" if peer else "-"
            print(f"{row['bucket']:>10} {row['mean_operations']:>10.1f} {right:>10}")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=[
                "bucket", "count", "succeeded", "mean_features", "mean_rules",
                "mean_queries", "mean_operations"])
            writer.writeheader()
            for row in aggregated:
                writer.writerow(row)
    return EXIT_OK


# -- argument parsing --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phishevade",
        description="Rule-based phishing classifier workbench: score pages, "
                    "craft evasion attacks, invert hashed features, and run "
                    "the similarity defense.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model=True):
        p.add_argument("--config", help="key=value config file")
        if model:
            p.add_argument("--model", required=True, help="model JSON file")
        p.add_argument("--tau", type=float, help="decision threshold override")
        p.add_argument("--freq-threshold", dest="freq_threshold", type=float,
                       help="frequency detection threshold override")

    p = sub.add_parser("score", help="score one page")
    p.add_argument("page")
    p.add_argument("--url", help="page URL (defaults to a fixtures.test URL)")
    common(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("attack", help="craft an adversarial page")
    p.add_argument("page")
    p.add_argument("--url")
    common(p)
    p.add_argument("--level", choices=[attacks.WHITE, attacks.GREY, attacks.BLACK],
                   required=True)
    p.add_argument("--seed", type=int, help="RNG seed (default 0)")
    p.add_argument("--budget", type=int, help="addition budget (default 2000)")
    p.add_argument("--batch", type=int, help="rollback batch size (default 3)")
    p.add_argument("--pool", help="JSONL addition pool for black-box attacks")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--timing", action="store_true",
                   help="include wall-clock elapsed_ms in the report")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("defend", help="run the whitelist/similarity/classifier pipeline")
    p.add_argument("page")
    p.add_argument("--url")
    common(p)
    p.add_argument("--store", help="phishing store JSON file")
    p.add_argument("--whitelist")
    p.add_argument("--blacklist")
    p.add_argument("--now", type=float, help="clock override for store aging")
    p.set_defaults(func=cmd_defend)

    p = sub.add_parser("infer", help="invert hashed features against a corpus")
    p.add_argument("--corpus", required=True, help="JSONL corpus manifest")
    p.add_argument("--manifest", required=True, help="digest manifest, one 64-hex per line")
    p.add_argument("--timing", action="store_true")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("prune", help="zero out subset or single rules")
    p.add_argument("--model", required=True)
    p.add_argument("--strategy", choices=["subset", "single"], required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--strip-weights", action="store_true",
                   help="write the output model without rule weights "
                        "(grey-box export)")
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("gen-fixtures", help="personalize legit pages into phishing fixtures")
    p.add_argument("--corpus", required=True)
    common(p)
    p.add_argument("--range", required=True, help="target score range LO,HI")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--out", required=True)
    p.add_argument("--action-url", default="http://collect.phish-pad.invalid/post",
                   help="external URL written into every form action")
    p.set_defaults(func=cmd_gen_fixtures)

    p = sub.add_parser("report", help="aggregate attack reports into bucket tables")
    p.add_argument("results", help="directory of attack report JSON files")
    p.add_argument("--compare", help="second results directory for paired tables")
    p.add_argument("--csv", help="also write the table as CSV")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, SchemaError, HashFormatError, UnknownRuleError, UrlError,
            ParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except Unreachable as exc:
        print(f"unreachable: {exc}", file=sys.stderr)
        return EXIT_EXHAUSTED


if __name__ == "__main__":
    sys.exit(main())
