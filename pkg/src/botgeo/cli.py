"""Command-line pipeline: gazetteer build -> geolocate -> score -> analyze -> report.

Every command writes through a temp-file rename (no partial outputs), sorts
its output rows, and formats floats with repr(), so a rerun with identical
inputs produces byte-identical artifacts regardless of thread count.

Exit codes: 0 success, 2 usage error, 3 input error, 4 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import multiprocessing
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

from . import analytics, botscore, gazetteer, geolocate, ingest
from .errors import IngestError, PipelineError
from .records import (
    ALL_MONTHS,
    DEFAULT_BOT_THRESHOLD,
    DEFAULT_MATCH_THRESHOLD,
    Label,
)
from .util import atomic_write, derive_seed

log = logging.getLogger("botgeo")

DEFAULT_SEED = 42
DEFAULT_TOP_LANGUAGES = 30
DEFAULT_DOMINANT_THRESHOLD = 0.8

EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_INTERNAL = 4


@dataclass(frozen=True)
class PipelineConfig:
    """Validated knobs shared by the pipeline commands."""

    match_threshold: float = DEFAULT_MATCH_THRESHOLD
    bot_threshold: float = DEFAULT_BOT_THRESHOLD
    dominant_threshold: float = DEFAULT_DOMINANT_THRESHOLD
    seed: int = DEFAULT_SEED
    threads: int = 1
    top_n: int = DEFAULT_TOP_LANGUAGES

    def __post_init__(self):
        for name in ("match_threshold", "bot_threshold", "dominant_threshold"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ValueError(f"{name} must be in (0, 1]: {value}")
        if self.threads < 1:
            raise ValueError(f"threads must be positive: {self.threads}")
        if self.top_n < 1:
            raise ValueError(f"top_n must be positive: {self.top_n}")

    @classmethod
    def from_args(cls, args) -> "PipelineConfig":
        kwargs = {}
        for field_name, attr in (
            ("match_threshold", "threshold"),
            ("bot_threshold", "bot_threshold"),
            ("dominant_threshold", "dominant_threshold"),
            ("seed", "seed"),
            ("threads", "threads"),
            ("top_n", "top"),
        ):
            if hasattr(args, attr):
                kwargs[field_name] = getattr(args, attr)
        try:
            return cls(**kwargs)
        except ValueError as exc:
            raise IngestError(str(exc)) from exc


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with atomic_write(path, newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _monthly_path(path: str, month: str) -> str:
    stem, dot, ext = path.rpartition(".")
    if not dot:
        return f"{path}.{month}"
    return f"{stem}.{month}.{ext}"


def _load_labels(path: str, threshold: float):
    result = botscore.import_scores(path, threshold)
    if result.rejected:
        print(f"rejected score rows: {result.rejected}", file=sys.stderr)
    return {label.user_id: label for label in result.labels}


def _read_metric_column(path: str, column: str) -> dict[str, float]:
    values: dict[str, float] = {}
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise IngestError(f"cannot read metric file {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or column not in reader.fieldnames:
            raise IngestError(f"metric file {path} has no column {column!r}")
        key = "country_iso2" if "country_iso2" in reader.fieldnames else "iso2"
        if key not in reader.fieldnames:
            raise IngestError(f"metric file {path} has no iso2/country_iso2 column")
        for row in reader:
            try:
                values[row[key]] = float(row[column])
            except (TypeError, ValueError):
                continue
    return values


# ---------------------------------------------------------------- commands


def cmd_gazetteer_build(args) -> int:
    cities = gazetteer.import_cities(args.cities)
    countries = gazetteer.import_countries(args.countries)
    if not cities.entries:
        raise IngestError(f"city dump {args.cities} produced no entries")
    if not countries.entries:
        raise IngestError(f"country table {args.countries} produced no entries")
    index = gazetteer.build_index(countries.entries + cities.entries)
    gazetteer.save_index(index, args.out)
    stats = index.stats()
    print(
        f"cities: {stats['cities']}, countries: {stats['countries']}, "
        f"aliases: {stats['aliases']}, pair_keys: {stats['pair_keys']}"
    )
    return 0


def cmd_geolocate(args) -> int:
    config = PipelineConfig.from_args(args)
    index = gazetteer.load_index(args.index)
    users, stats = ingest.load_users(args.users)
    if stats.skipped:
        print(f"skipped user lines: {stats.skipped}", file=sys.stderr)
    entity_spans = geolocate.read_entity_file(args.entities) if args.entities else None
    results = geolocate.geolocate_users(
        users,
        index,
        threshold=config.match_threshold,
        workers=config.threads,
        entity_spans=entity_spans,
    )
    with_description = [u for u in users if u.description.strip()]
    matched = sum(
        1 for u in with_description if results.get(u.user_id) is not None
    )
    geolocate.write_geolocation_csv(args.out, results)
    if with_description:
        coverage = 100.0 * matched / len(with_description)
        print(
            f"geolocated {matched}/{len(with_description)} users with description "
            f"(coverage {coverage:.1f}%)"
        )
    else:
        print("coverage 0.0% (no users with description)", file=sys.stderr)
        print("geolocated 0/0 users with description (coverage 0.0%)")
    return 0


def cmd_score_train(args) -> int:
    examples = _load_corpus(args.corpus)
    model = botscore.train_baseline(
        examples, derive_seed(args.seed, "score-train"), args.trees, args.depth
    )
    botscore.save_model(model, args.out)
    print(f"trained on {len(examples)} examples; vocabulary {len(model.vocabulary)}")
    return 0


def _load_corpus(path: str) -> list[botscore.LabeledExample]:
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise IngestError(f"cannot read corpus {path}: {exc}") from exc
    examples = []
    skipped = 0
    with fh:
        reader = csv.DictReader(fh)
        expected = ["label", "language", "text"]
        if reader.fieldnames != expected:
            raise IngestError(f"corpus {path} must have header {','.join(expected)}")
        for row in reader:
            label_raw = (row.get("label") or "").strip().casefold()
            text = row.get("text") or ""
            if label_raw not in ("bot", "human") or not text:
                skipped += 1
                continue
            examples.append(
                botscore.LabeledExample(
                    text=text,
                    label=Label.BOT if label_raw == "bot" else Label.HUMAN,
                    language=(row.get("language") or "und").casefold(),
                )
            )
    if skipped:
        print(f"skipped corpus rows: {skipped}", file=sys.stderr)
    if not examples:
        raise IngestError(f"corpus {path} contains no usable rows")
    return examples


def cmd_score_predict(args) -> int:
    model = botscore.load_model(args.model)
    users, _ = ingest.load_users(args.users)
    tweets, _ = ingest.load_tweets(args.tweets)
    texts_by_user: dict[str, list[str]] = {}
    for tweet in tweets:
        texts_by_user.setdefault(tweet.user_id, []).append(tweet.text)
    probabilities = {}
    no_evidence = 0
    for user in users:
        texts = texts_by_user.get(user.user_id)
        if not texts:
            no_evidence += 1
            continue
        probabilities[user.user_id] = botscore.predict_probability(model, texts)
    botscore.write_scores(args.out, probabilities)
    if no_evidence:
        print(f"users without tweets (skipped): {no_evidence}", file=sys.stderr)
    print(f"scored {len(probabilities)} users")
    return 0


def cmd_score_import(args) -> int:
    config = PipelineConfig.from_args(args)
    result = botscore.import_scores(args.input, config.bot_threshold)
    if result.rejected:
        print(f"rejected rows: {result.rejected}", file=sys.stderr)
    if result.duplicates:
        print(f"duplicate user_ids (last wins): {result.duplicates}", file=sys.stderr)
    botscore.write_scores(
        args.out, {label.user_id: label.probability for label in result.labels}
    )
    bots = sum(1 for label in result.labels if label.label is Label.BOT)
    print(f"imported {len(result.labels)} scores ({bots} bots)")
    return 0


def _partitioned(tweets):
    parts = ingest.partition_by_month(tweets)
    return dict(sorted(parts.items()))


_month_job_state: dict = {}


def _month_job_init(payload) -> None:
    _month_job_state["payload"] = payload


def _run_country_month(month):
    tweets_by_month, labels, matches, drop = _month_job_state["payload"]
    return analytics.country_bot_metrics(
        tweets_by_month[month], labels, matches, month, drop
    )


def _map_months(months, worker, payload, threads: int):
    """Deterministic per-month map, optionally on a fork pool."""
    if threads <= 1 or len(months) < 2:
        _month_job_init(payload)
        return [worker(m) for m in months]
    ctx = multiprocessing.get_context("fork")
    with ctx.Pool(
        min(threads, len(months)), initializer=_month_job_init, initargs=(payload,)
    ) as pool:
        return pool.map(worker, months)


def cmd_analyze_country(args) -> int:
    config = PipelineConfig.from_args(args)
    tweets, _ = ingest.load_tweets(args.tweets)
    matches = geolocate.read_geolocation_csv(args.geo)
    labels = _load_labels(args.scores, config.bot_threshold)
    parts = _partitioned(tweets)
    months = list(parts)
    per_month_rows = _map_months(
        months,
        _run_country_month,
        (parts, labels, matches, args.drop_unlabeled),
        config.threads,
    )
    header = [
        "country_iso2",
        "month",
        "n_users",
        "n_bots",
        "bot_rate",
        "bot_share",
        "share_degenerate",
    ]
    all_rows = [row for rows in per_month_rows for row in rows]
    if args.monthly:
        for month, rows in zip(months, per_month_rows):
            _write_csv(
                _monthly_path(args.out, month),
                header,
                [
                    (
                        r.country_iso2,
                        r.month,
                        r.n_users,
                        r.n_bots,
                        r.bot_rate,
                        r.bot_share,
                        int(r.share_degenerate),
                    )
                    for r in rows
                ],
            )
    rate_by_country = analytics.aggregate_median(
        all_rows, key=lambda r: r.country_iso2, value=lambda r: r.bot_rate
    )
    share_by_country = analytics.aggregate_median(
        all_rows, key=lambda r: r.country_iso2, value=lambda r: r.bot_share
    )
    months_by_country: dict[str, int] = {}
    for row in all_rows:
        months_by_country[row.country_iso2] = months_by_country.get(row.country_iso2, 0) + 1
    _write_csv(
        args.out,
        ["country_iso2", "month", "n_months", "bot_rate", "bot_share"],
        [
            (
                iso2,
                ALL_MONTHS,
                months_by_country[iso2],
                rate_by_country[iso2],
                share_by_country[iso2],
            )
            for iso2 in sorted(rate_by_country)
        ],
    )
    print(f"countries: {len(rate_by_country)}, months: {len(months)}")
    return 0


def cmd_analyze_language(args) -> int:
    config = PipelineConfig.from_args(args)
    tweets, _ = ingest.load_tweets(args.tweets)
    labels = _load_labels(args.scores, config.bot_threshold)
    parts = _partitioned(tweets)
    per_month: list[analytics.LanguageMetrics] = []
    header = ["lang", "month", "n_users", "n_bots", "bot_rate"]
    for month, slice_tweets in parts.items():
        rows = analytics.language_bot_metrics(
            slice_tweets, labels, month, args.drop_unlabeled
        )
        per_month.extend(rows)
        if args.monthly:
            _write_csv(
                _monthly_path(args.out, month),
                header,
                [(r.lang, r.month, r.n_users, r.n_bots, r.bot_rate) for r in rows],
            )
    ranked = analytics.top_languages(per_month, config.top_n)
    _write_csv(
        args.out,
        ["rank", "lang", "n_user_months", "n_bot_months", "mean_bot_rate"],
        [
            (i + 1, r.lang, r.n_users, r.n_bots, r.bot_rate)
            for i, r in enumerate(ranked)
        ],
    )
    print(f"languages ranked: {len(ranked)}")
    return 0


def cmd_analyze_dominant(args) -> int:
    config = PipelineConfig.from_args(args)
    tweets, _ = ingest.load_tweets(args.tweets)
    matches = geolocate.read_geolocation_csv(args.geo)
    labels = _load_labels(args.scores, config.bot_threshold)
    table = ingest.load_dominant_languages(args.dominant)
    parts = _partitioned(tweets)
    per_month: list[analytics.DominantLanguageMetrics] = []
    for month, slice_tweets in parts.items():
        rows = analytics.dominant_language_metrics(
            slice_tweets, labels, matches, table, month
        )
        per_month.extend(rows)
        if args.monthly:
            _write_csv(
                _monthly_path(args.out, month),
                ["country_iso2", "month", "fraction"],
                [(r.country_iso2, r.month, r.fraction) for r in rows],
            )
    fraction_by_country = analytics.aggregate_mean(
        per_month, key=lambda r: r.country_iso2, value=lambda r: r.fraction
    )
    months_by_country: dict[str, int] = {}
    for row in per_month:
        months_by_country[row.country_iso2] = months_by_country.get(row.country_iso2, 0) + 1
    _write_csv(
        args.out,
        ["country_iso2", "month", "n_months", "fraction"],
        [
            (iso2, ALL_MONTHS, months_by_country[iso2], fraction_by_country[iso2])
            for iso2 in sorted(fraction_by_country)
        ],
    )
    if args.breakdown:
        aggregated = [
            analytics.DominantLanguageMetrics(iso2, ALL_MONTHS, fraction_by_country[iso2])
            for iso2 in sorted(fraction_by_country)
        ]
        counts = analytics.bot_tweet_language_counts(tweets, labels, matches)
        breakdown = analytics.under_threshold_breakdown(
            aggregated, counts, config.dominant_threshold
        )
        _write_csv(
            args.breakdown,
            ["country_iso2", "languages"],
            [(iso2, ";".join(langs)) for iso2, langs in sorted(breakdown.items())],
        )
    print(f"countries: {len(fraction_by_country)}")
    return 0


def cmd_analyze_regression(args) -> int:
    values = _read_metric_column(args.metric, args.column)
    indicators = ingest.load_indicators(args.indicators)
    rows = []
    for name, pick in (("gdp_usd", 0), ("population", 1)):
        xs, ys = [], []
        for iso2 in sorted(values):
            if iso2 in indicators:
                xs.append(float(indicators[iso2][pick]))
                ys.append(values[iso2])
        try:
            result = analytics.linear_regression(xs, ys)
        except ValueError as exc:
            raise IngestError(f"regression on {name}: {exc}") from exc
        rows.append(
            (
                name,
                result.slope,
                result.intercept,
                result.r_squared,
                result.n,
                int(result.degenerate),
            )
        )
        print(f"{name}: r2={result.r_squared!r} n={result.n}")
    _write_csv(
        args.out,
        ["indicator", "slope", "intercept", "r_squared", "n", "degenerate"],
        rows,
    )
    return 0


def cmd_analyze_hashtags(args) -> int:
    config = PipelineConfig.from_args(args)
    tweets, _ = ingest.load_tweets(args.tweets)
    matches = geolocate.read_geolocation_csv(args.geo)
    labels = _load_labels(args.scores, config.bot_threshold)
    regions = ingest.load_regions(args.regions)
    if args.ignore:
        ignore = ingest.load_ignore_list(args.ignore)
    else:
        import importlib.resources

        ignore = {
            ingest.normalize_hashtag(line)
            for line in importlib.resources.files("botgeo")
            .joinpath("data/hashtag_ignore_default.txt")
            .read_text(encoding="utf-8")
            .splitlines()
            if line.strip()
        }
    results = analytics.region_hashtags(tweets, labels, matches, regions, ignore, args.top)
    rows = []
    for result in results:
        for rank, (tag, count) in enumerate(result.hashtags, start=1):
            rows.append((result.region, rank, tag, count))
    _write_csv(args.out, ["region", "rank", "hashtag", "count"], rows)
    print(f"regions: {len(results)}")
    return 0


def cmd_report_choropleth(args) -> int:
    values = _read_metric_column(args.metric, args.column)
    countries = gazetteer.import_countries(args.countries)
    by_iso2 = {e.country_iso2: e for e in countries.entries}
    known = {}
    for iso2 in sorted(values):
        if iso2 in by_iso2:
            known[iso2] = values[iso2]
        else:
            print(f"unknown iso2 in metric file: {iso2} (skipped)", file=sys.stderr)
    _write_csv(args.out, ["iso2", "value"], list(known.items()))
    if args.geojson:
        features = []
        for iso2, value in known.items():
            entry = by_iso2[iso2]
            features.append(
                {
                    "type": "Feature",
                    "geometry": {"type": "Point", "coordinates": [entry.lon, entry.lat]},
                    "properties": {"iso2": iso2, "value": value},
                }
            )
        payload = {"type": "FeatureCollection", "features": features}
        with atomic_write(args.geojson) as fh:
            json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
    print(f"countries with data: {len(known)}")
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="botgeo",
        description="Offline profile geolocation, bot labeling, and bot-geography metrics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gazetteer", help="gazetteer index commands")
    gsub = p.add_subparsers(dest="subcommand", required=True)
    g = gsub.add_parser("build", help="build and serialize the fuzzy-lookup index")
    g.add_argument("--cities", required=True, help="tab-delimited city dump")
    g.add_argument("--countries", required=True, help="iso2,name,lat,lon table")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gazetteer_build)

    g = sub.add_parser("geolocate", help="resolve user descriptions to countries")
    g.add_argument("--users", required=True, help="newline-delimited user JSON")
    g.add_argument("--index", required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--entities", help="optional per-user entity spans (user_id<TAB>a|b)")
    g.add_argument("--threshold", type=float, default=DEFAULT_MATCH_THRESHOLD)
    g.add_argument("--threads", type=int, default=1)
    g.set_defaults(func=cmd_geolocate)

    p = sub.add_parser("score", help="bot probability scoring")
    ssub = p.add_subparsers(dest="subcommand", required=True)
    s = ssub.add_parser("train", help="train the TF-IDF + forest baseline")
    s.add_argument("--corpus", required=True, help="label,language,text CSV")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.add_argument("--trees", type=int, default=100)
    s.add_argument("--depth", type=int, default=32)
    s.set_defaults(func=cmd_score_train)
    s = ssub.add_parser("predict", help="score users from their tweet texts")
    s.add_argument("--model", required=True)
    s.add_argument("--users", required=True)
    s.add_argument("--tweets", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_score_predict)
    s = ssub.add_parser("import", help="validate and canonicalize an external score file")
    s.add_argument("--input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--bot-threshold", type=float, default=DEFAULT_BOT_THRESHOLD)
    s.set_defaults(func=cmd_score_import)

    p = sub.add_parser("analyze", help="metric computations")
    asub = p.add_subparsers(dest="subcommand", required=True)

    def common_analyze(cmd, geo=True):
        cmd.add_argument("--tweets", required=True)
        if geo:
            cmd.add_argument("--geo", required=True, help="output of botgeo geolocate")
        cmd.add_argument("--scores", required=True, help="user_id,bot_probability CSV")
        cmd.add_argument("--out", required=True)
        cmd.add_argument("--monthly", action="store_true")
        cmd.add_argument("--bot-threshold", type=float, default=DEFAULT_BOT_THRESHOLD)
        cmd.add_argument("--drop-unlabeled", action="store_true")

    a = asub.add_parser("country", help="per-country bot rate and share")
    common_analyze(a)
    a.add_argument("--threads", type=int, default=1)
    a.set_defaults(func=cmd_analyze_country)

    a = asub.add_parser("language", help="per-language bot rates, top-N ranking")
    common_analyze(a, geo=False)
    a.add_argument("--top", type=int, default=DEFAULT_TOP_LANGUAGES)
    a.set_defaults(func=cmd_analyze_language)

    a = asub.add_parser("dominant-language", help="bots posting in their country's language")
    common_analyze(a)
    a.add_argument("--dominant", required=True, help="iso2,langs table")
    a.add_argument("--breakdown", help="write under-threshold language lists here")
    a.add_argument(
        "--dominant-threshold", type=float, default=DEFAULT_DOMINANT_THRESHOLD
    )
    a.set_defaults(func=cmd_analyze_dominant)

    a = asub.add_parser("regression", help="bot metric vs country indicators")
    a.add_argument("--metric", required=True, help="aggregate country CSV")
    a.add_argument("--column", default="bot_rate")
    a.add_argument("--indicators", required=True, help="iso2,gdp_usd,population CSV")
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_analyze_regression)

    a = asub.add_parser("hashtags", help="top hashtags of bot tweets per region")
    common_analyze(a)
    a.add_argument("--regions", required=True, help="iso2,region CSV")
    a.add_argument("--ignore", help="ignore list (one hashtag per line)")
    a.add_argument("--top", type=int, default=5)
    a.set_defaults(func=cmd_analyze_hashtags)

    p = sub.add_parser("report", help="choropleth-ready exports")
    rsub = p.add_subparsers(dest="subcommand", required=True)
    r = rsub.add_parser("choropleth", help="iso2,value CSV plus optional GeoJSON points")
    r.add_argument("--metric", required=True)
    r.add_argument("--column", default="bot_rate")
    r.add_argument("--countries", required=True, help="iso2,name,lat,lon table")
    r.add_argument("--out", required=True)
    r.add_argument("--geojson")
    r.set_defaults(func=cmd_report_choropleth)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, stream=sys.stderr)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except IngestError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PipelineError as exc:
        print(f"pipeline error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - map anything unexpected to exit 4
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
