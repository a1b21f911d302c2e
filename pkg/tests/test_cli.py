import hashlib
import json
import os

import pytest

from botgeo.cli import main
from botgeo.util import atomic_write

GOLDEN = os.path.join(os.path.dirname(__file__), "golden")
INPUTS = os.path.join(GOLDEN, "inputs")


def inp(name):
    return os.path.join(INPUTS, name)


def sha(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


@pytest.fixture(scope="module")
def built_index(tmp_path_factory):
    out = tmp_path_factory.mktemp("idx") / "index.bin"
    rc = main(
        [
            "gazetteer", "build",
            "--cities", inp("cities.tsv"),
            "--countries", inp("countries.csv"),
            "--out", str(out),
        ]
    )
    assert rc == 0
    return str(out)


def test_help_screens(capsys):
    for argv in (["--help"], ["gazetteer", "--help"], ["geolocate", "--help"],
                 ["score", "--help"], ["analyze", "--help"], ["report", "--help"]):
        with pytest.raises(SystemExit) as e:
            main(argv)
        assert e.value.code == 0
        capsys.readouterr()


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as e:
        main(["geolocate"])  # missing required args
    assert e.value.code == 2


def test_pipeline_config_validation(tmp_path, built_index):
    from botgeo.cli import PipelineConfig

    assert PipelineConfig().match_threshold == 0.8
    assert PipelineConfig().seed == 42
    with pytest.raises(ValueError):
        PipelineConfig(match_threshold=0.0)
    with pytest.raises(ValueError):
        PipelineConfig(bot_threshold=1.5)
    rc = main(
        ["geolocate", "--users", inp("users.ndjson"), "--index", built_index,
         "--out", str(tmp_path / "geo.csv"), "--threshold", "1.5"]
    )
    assert rc == 3


def test_missing_input_exit_code(tmp_path):
    rc = main(
        [
            "gazetteer", "build",
            "--cities", str(tmp_path / "absent.tsv"),
            "--countries", inp("countries.csv"),
            "--out", str(tmp_path / "x.bin"),
        ]
    )
    assert rc == 3


def test_empty_cities_is_fatal(tmp_path):
    empty = tmp_path / "empty.tsv"
    empty.write_text("", encoding="utf-8")
    rc = main(
        [
            "gazetteer", "build",
            "--cities", str(empty),
            "--countries", inp("countries.csv"),
            "--out", str(tmp_path / "x.bin"),
        ]
    )
    assert rc == 3
    assert not (tmp_path / "x.bin").exists()


def test_gazetteer_build_prints_counts(tmp_path, capsys):
    out = tmp_path / "index.bin"
    rc = main(
        [
            "gazetteer", "build",
            "--cities", inp("cities.tsv"),
            "--countries", inp("countries.csv"),
            "--out", str(out),
        ]
    )
    assert rc == 0
    assert "cities: 10, countries: 6" in capsys.readouterr().out


def test_gazetteer_build_deterministic(tmp_path, built_index):
    out2 = tmp_path / "again.bin"
    rc = main(
        [
            "gazetteer", "build",
            "--cities", inp("cities.tsv"),
            "--countries", inp("countries.csv"),
            "--out", str(out2),
        ]
    )
    assert rc == 0
    assert sha(built_index) == sha(str(out2))


def test_geolocate_coverage_print(tmp_path, built_index, capsys):
    users = tmp_path / "users.ndjson"
    rows = [{"user_id": f"m{i}", "description": d} for i, d in enumerate(
        ["Paris", "Berlin", "Bangkok", "Almaty", "Chicago", "Munich"]
    )]
    rows += [{"user_id": f"x{i}", "description": d} for i, d in enumerate(
        ["zzz qqq", "nothing here", "wyd", "hmm ok"]
    )]
    users.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")
    rc = main(
        ["geolocate", "--users", str(users), "--index", built_index,
         "--out", str(tmp_path / "geo.csv")]
    )
    assert rc == 0
    assert "coverage 60.0%" in capsys.readouterr().out


def test_geolocate_no_users_warns(tmp_path, built_index, capsys):
    users = tmp_path / "users.ndjson"
    users.write_text(json.dumps({"user_id": "u1", "description": ""}) + "\n")
    rc = main(
        ["geolocate", "--users", str(users), "--index", built_index,
         "--out", str(tmp_path / "geo.csv")]
    )
    assert rc == 0
    captured = capsys.readouterr()
    assert "coverage 0.0%" in captured.out
    assert "no users with description" in captured.err


def test_geolocate_missing_index(tmp_path):
    rc = main(
        ["geolocate", "--users", inp("users.ndjson"),
         "--index", str(tmp_path / "absent.bin"), "--out", str(tmp_path / "geo.csv")]
    )
    assert rc == 3


def test_geolocate_deterministic(tmp_path, built_index):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        rc = main(
            ["geolocate", "--users", inp("users.ndjson"), "--index", built_index,
             "--out", str(out)]
        )
        assert rc == 0
    assert a.read_bytes() == b.read_bytes()


def test_score_train_same_seed_same_hash(tmp_path):
    corpus = tmp_path / "corpus.csv"
    lines = ["label,language,text"]
    for i in range(30):
        lines.append(f'bot,en,"buy buy item {i}"')
        lines.append(f'human,en,"nice day today {i}"')
    corpus.write_text("\n".join(lines) + "\n", encoding="utf-8")
    a, b, c = (tmp_path / n for n in ("a.model", "b.model", "c.model"))
    for out in (a, b):
        rc = main(["score", "train", "--corpus", str(corpus), "--out", str(out),
                   "--seed", "7", "--trees", "15"])
        assert rc == 0
    assert sha(str(a)) == sha(str(b))
    rc = main(["score", "train", "--corpus", str(corpus), "--out", str(c),
               "--seed", "8", "--trees", "15"])
    assert rc == 0
    assert sha(str(a)) != sha(str(c))


def test_score_train_predict_roundtrip(tmp_path):
    corpus = tmp_path / "corpus.csv"
    lines = ["label,language,text"]
    for i in range(40):
        lines.append(f'bot,en,"buy cheap follows {i}"')
        lines.append(f'human,en,"lovely weather innit {i}"')
    corpus.write_text("\n".join(lines) + "\n", encoding="utf-8")
    model = tmp_path / "m.model"
    assert main(["score", "train", "--corpus", str(corpus), "--out", str(model),
                 "--seed", "1", "--trees", "25"]) == 0
    users = tmp_path / "users.ndjson"
    users.write_text(
        json.dumps({"user_id": "bot1", "description": ""}) + "\n"
        + json.dumps({"user_id": "hum1", "description": ""}) + "\n"
    )
    tweets = tmp_path / "tweets.ndjson"
    tweets.write_text(
        json.dumps({"tweet_id": "t1", "user_id": "bot1", "text": "buy cheap follows now",
                    "lang": "en", "month": "2021-01"}) + "\n"
        + json.dumps({"tweet_id": "t2", "user_id": "hum1", "text": "lovely weather innit",
                      "lang": "en", "month": "2021-01"}) + "\n"
    )
    scores = tmp_path / "scores.csv"
    assert main(["score", "predict", "--model", str(model), "--users", str(users),
                 "--tweets", str(tweets), "--out", str(scores)]) == 0
    body = scores.read_text()
    rows = dict(line.split(",") for line in body.strip().splitlines()[1:])
    assert float(rows["bot1"]) >= 0.5
    assert float(rows["hum1"]) < 0.5


def test_score_import_reports_bad_rows(tmp_path, capsys):
    raw = tmp_path / "raw.csv"
    raw.write_text("user_id,bot_probability\nu1,0.9\nu2,1.7\n", encoding="utf-8")
    out = tmp_path / "valid.csv"
    rc = main(["score", "import", "--input", str(raw), "--out", str(out)])
    assert rc == 0
    captured = capsys.readouterr()
    assert "rejected rows: 1" in captured.err
    assert out.read_text().strip().splitlines() == [
        "user_id,bot_probability", "u1,0.9",
    ]


def test_analyze_regression_perfect_fit(tmp_path, capsys):
    metric = tmp_path / "metric.csv"
    metric.write_text(
        "country_iso2,month,n_months,bot_rate,bot_share\n"
        "AA,ALL,1,0.3,0.1\nBB,ALL,1,0.5,0.2\nCC,ALL,1,0.7,0.3\n",
        encoding="utf-8",
    )
    indicators = tmp_path / "ind.csv"
    # gdp chosen so bot_rate = 2e-13 * gdp + 0.1 exactly
    indicators.write_text(
        "iso2,gdp_usd,population\nAA,1e12,10\nBB,2e12,20\nCC,3e12,30\n",
        encoding="utf-8",
    )
    out = tmp_path / "reg.csv"
    rc = main(["analyze", "regression", "--metric", str(metric),
               "--indicators", str(indicators), "--out", str(out)])
    assert rc == 0
    assert "r2=1.0" in capsys.readouterr().out
    body = out.read_text().strip().splitlines()
    assert body[1].startswith("gdp_usd,")
    assert ",1.0," in body[1]


def test_atomic_write_leaves_no_partial(tmp_path):
    target = tmp_path / "out.txt"
    with pytest.raises(RuntimeError):
        with atomic_write(str(target)) as fh:
            fh.write("partial")
            raise RuntimeError("boom")
    assert not target.exists()
    assert list(tmp_path.iterdir()) == []


def test_hashtags_respects_ignore(tmp_path, built_index, capsys):
    rc = main([
        "geolocate", "--users", inp("users.ndjson"), "--index", built_index,
        "--out", str(tmp_path / "geo.csv"),
    ])
    assert rc == 0
    rc = main([
        "analyze", "hashtags",
        "--tweets", inp("tweets.ndjson"),
        "--geo", str(tmp_path / "geo.csv"),
        "--scores", inp("scores.csv"),
        "--regions", inp("regions.csv"),
        "--ignore", inp("ignore.txt"),
        "--out", str(tmp_path / "tags.csv"),
    ])
    assert rc == 0
    body = (tmp_path / "tags.csv").read_text()
    assert "covid19vaccine" in body  # merged variant survives
    assert ",covid19," not in body  # ignored tag never appears
    assert ",coronavirus," not in body
