"""Model persistence: exact prediction round trips and failure modes."""

import json

import numpy as np
import pytest

from tripcast.errors import PersistError
from tripcast.persist import FORMAT_VERSION, dumps_model, load_model, loads_model, save_model
from tripcast.registry import make_model


def _data(seed=0, n=150, k=9):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, k))
    X[:, 5] = rng.integers(0, 7, size=n)  # day_type column for linear models
    y = X[:, 0] * 3.0 + rng.normal(size=n)
    return X, y


ALL_ABBREVS = ["lr", "ri", "la", "dt", "br", "rf", "gb", "ab", "hgb"]


@pytest.mark.parametrize("abbrev", ALL_ABBREVS)
def test_round_trip_preserves_predictions_exactly(tmp_path, abbrev):
    X, y = _data()
    model = make_model(abbrev, seed=7, n_estimators=4)
    model.fit(X, y)
    before = model.predict(X)
    path = tmp_path / f"{abbrev}.json"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded.kind == model.kind
    assert np.array_equal(loaded.predict(X), before)


def test_save_is_deterministic(tmp_path):
    X, y = _data()
    a = make_model("hgb", seed=3, n_estimators=3).fit(X, y)
    b = make_model("hgb", seed=3, n_estimators=3).fit(X, y)
    assert dumps_model(a) == dumps_model(b)


def test_truncated_document_rejected(tmp_path):
    X, y = _data()
    model = make_model("dt", seed=1).fit(X, y)
    text = dumps_model(model)
    with pytest.raises(PersistError, match="JSON"):
        loads_model(text[: len(text) // 2])


def test_tampered_document_rejected():
    X, y = _data()
    model = make_model("dt", seed=1).fit(X, y)
    doc = json.loads(dumps_model(model))
    doc["payload"]["n_features"] = 4
    with pytest.raises(PersistError, match="checksum"):
        loads_model(json.dumps(doc))


def test_unknown_version_rejected():
    X, y = _data()
    model = make_model("lr", seed=1).fit(X, y)
    doc = json.loads(dumps_model(model))
    doc["format_version"] = FORMAT_VERSION + 1
    with pytest.raises(PersistError, match="version"):
        loads_model(json.dumps(doc))


def test_not_a_model_document():
    with pytest.raises(PersistError, match="not a tripcast model"):
        loads_model(json.dumps({"hello": "world"}))


def test_missing_file():
    with pytest.raises(PersistError, match="not found"):
        load_model("/nonexistent/model.json")


def test_unfitted_model_not_persistable():
    model = make_model("dt", seed=1)
    with pytest.raises(Exception):
        dumps_model(model)
