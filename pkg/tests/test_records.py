import pickle

import pytest

from botgeo.records import (
    BotLabel,
    CountryMetrics,
    EntryKind,
    GazetteerEntry,
    GeoMatch,
    Label,
    MatchClass,
    RegressionResult,
    TweetRecord,
    UserRecord,
    validate_dataset,
)


def test_user_requires_id():
    with pytest.raises(ValueError):
        UserRecord(user_id="")
    assert UserRecord("u1").description == ""


def test_tweet_field_validation():
    ok = TweetRecord("t1", "u1", "hi", "en", "2021-03", ("tag",))
    assert ok.month == "2021-03"
    with pytest.raises(ValueError):
        TweetRecord("t1", "u1", "hi", "en", "2021-13")
    with pytest.raises(ValueError):
        TweetRecord("t1", "u1", "hi", "EN", "2021-03")
    with pytest.raises(ValueError):
        TweetRecord("t1", "u1", "hi", "en", "2021-03", ("",))
    assert TweetRecord("t1", "u1", "hi", "und", "2021-03").lang == "und"


def test_gazetteer_entry_validation():
    with pytest.raises(ValueError):
        GazetteerEntry(EntryKind.CITY, "paris", "FRA", 0, 0, 1)
    with pytest.raises(ValueError):
        GazetteerEntry(EntryKind.CITY, "paris", "FR", 91.0, 0, 1)
    with pytest.raises(ValueError):
        GazetteerEntry(EntryKind.CITY, "paris", "FR", 0, 0, -1)


def test_geomatch_threshold_guard():
    with pytest.raises(ValueError):
        GeoMatch("FR", 0, 0, 0.80, MatchClass.CITY, "paris")
    with pytest.raises(ValueError):
        GeoMatch("FR", 0, 0, 0.79, MatchClass.CITY, "paris")
    m = GeoMatch("FR", 0, 0, 0.801, MatchClass.CITY, "paris")
    assert m.similarity == 0.801
    # custom threshold moves the guard
    with pytest.raises(ValueError):
        GeoMatch("FR", 0, 0, 0.85, MatchClass.CITY, "paris", threshold=0.85)
    assert GeoMatch("FR", 0, 0, 0.86, MatchClass.CITY, "paris", threshold=0.85)


def test_botlabel_consistency():
    assert BotLabel.from_probability("u", 0.5).label is Label.BOT
    assert BotLabel.from_probability("u", 0.499).label is Label.HUMAN
    with pytest.raises(ValueError):
        BotLabel("u", 0.7, Label.HUMAN)
    with pytest.raises(ValueError):
        BotLabel("u", 1.2, Label.BOT)


def test_country_metrics_bounds():
    with pytest.raises(ValueError):
        CountryMetrics("FR", "2021-01", 1, 2, 2.0, 0.5)


def test_regression_result_bounds():
    with pytest.raises(ValueError):
        RegressionResult(1.0, 0.0, 1.5, 10)
    assert RegressionResult(1.0, 0.0, 0.0, 2, degenerate=True).degenerate


def test_records_pickle_roundtrip():
    records = [
        UserRecord("u1", "desc", "en"),
        TweetRecord("t1", "u1", "text", "en", "2021-01", ("a", "b")),
        GazetteerEntry(EntryKind.CITY, "paris", "FR", 1.0, 2.0, 3, ("alias",)),
        GeoMatch("FR", 1.0, 2.0, 0.9, MatchClass.COUNTRY, "france"),
        BotLabel.from_probability("u1", 0.9),
    ]
    for record in records:
        assert pickle.loads(pickle.dumps(record)) == record


def test_validate_dataset_examples():
    users = [UserRecord("a"), UserRecord("b")]
    tweets = [TweetRecord("t1", "zz", "hi", "en", "2021-01")]
    report = validate_dataset(users, tweets)
    assert report.n_valid_users == 2
    assert report.n_invalid_tweets == 1
    assert [i.reason for i in report.issues] == ["orphan tweet"]

    empty = validate_dataset([], [])
    assert (
        empty.n_valid_users,
        empty.n_invalid_users,
        empty.n_valid_tweets,
        empty.n_invalid_tweets,
    ) == (0, 0, 0, 0)

    # raw mappings flow through so bad months can be flagged pre-construction
    report = validate_dataset(
        [{"user_id": "a"}],
        [{"tweet_id": "t1", "user_id": "a", "month": "2021-13"}],
    )
    assert [i.reason for i in report.issues] == ["unparseable month"]


def test_validate_dataset_duplicates():
    report = validate_dataset([{"user_id": "a"}, {"user_id": "a"}], [])
    assert report.n_invalid_users == 1
    assert report.issues[0].reason == "duplicate user_id"
