import pytest

from botgeo import _kernels
from botgeo.gazetteer import build_index
from botgeo.records import EntryKind, GazetteerEntry


@pytest.fixture(params=["numba", "numpy"])
def kernel_mode(request, monkeypatch):
    """Run matching tests against both the numba and numpy code paths."""
    if request.param == "numpy":
        monkeypatch.setattr(_kernels, "HAVE_NUMBA", False)
    elif not _kernels.HAVE_NUMBA:
        pytest.skip("numba unavailable")
    return request.param


FIXTURE_ENTRIES = [
    GazetteerEntry(
        EntryKind.CITY, "paris", "FR", 48.85, 2.35, 2138551, aliases=("lutece",)
    ),
    GazetteerEntry(EntryKind.CITY, "paris", "US", 33.66, -95.55, 24000),
    GazetteerEntry(
        EntryKind.CITY, "moscow", "RU", 55.75, 37.61, 12506468,
        aliases=("moskva", "москва"),
    ),
    GazetteerEntry(EntryKind.CITY, "berlin", "DE", 52.52, 13.40, 3644826),
    GazetteerEntry(EntryKind.CITY, "kuala lumpur", "MY", 3.14, 101.69, 1800000),
    GazetteerEntry(EntryKind.CITY, "new york city", "US", 40.71, -74.00, 8175133,
                   aliases=("nyc", "new york")),
    GazetteerEntry(EntryKind.COUNTRY, "france", "FR", 46.0, 2.0),
    GazetteerEntry(EntryKind.COUNTRY, "germany", "DE", 51.0, 9.0),
    GazetteerEntry(EntryKind.COUNTRY, "united states", "US", 39.8, -98.5),
    GazetteerEntry(EntryKind.COUNTRY, "russia", "RU", 61.5, 105.0),
    GazetteerEntry(EntryKind.COUNTRY, "malaysia", "MY", 4.2, 102.0),
]


@pytest.fixture(scope="session")
def small_index():
    return build_index(FIXTURE_ENTRIES)
