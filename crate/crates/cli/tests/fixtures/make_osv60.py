"""Writes the 60-record OSV fixture used by the ingest and acceptance tests.

Expected breakdown inside 2022-01-01..2025-03-31 (rows, malware, share):
  CRAN 5/0/0.00, Go 8/2/25.00, Maven 7/1/14.29, npm 13/10/76.92,
  PyPI 11/7/63.64, RubyGems 8/3/37.50
Out of scope: 4 crates.io + 3 Packagist records. Before the window: 2 records.
"""

import json
import pathlib
import shutil

ROOT = pathlib.Path(__file__).parent / "osv60"

records = []


def rec(id_, eco, published, refs=("ADVISORY",), modified=None, extra=None, ecos=None):
    doc = {"schema_version": "1.6.0", "id": id_}
    if published is not None:
        doc["published"] = published
    doc["modified"] = modified or "2025-04-01T00:00:00Z"
    doc["affected"] = [
        {"package": {"ecosystem": e, "name": f"pkg-{id_.lower()}"}} for e in (ecos or [eco])
    ]
    doc["references"] = [
        ({"type": t, "url": f"https://example.org/{id_}/{i}"} if t else {"url": f"https://example.org/{id_}/{i}"})
        for i, t in enumerate(refs)
    ]
    if extra:
        doc.update(extra)
    records.append((eco, id_, doc))


def day(y, m, d, hh=12):
    return f"{y:04d}-{m:02d}-{d:02d}T{hh:02d}:00:00Z"


# npm: 9 malware + 3 vulnerabilities
for i in range(9):
    rec(f"MAL-2024-{100 + i}", "npm", day(2024, 1 + i, 2), refs=("ADVISORY", "ARTICLE", "WEB"))
for i in range(3):
    rec(f"GHSA-npm{i:01d}-aaaa-bbbb", "npm", day(2023, 3 + i, 10), refs=("ADVISORY", "PACKAGE"))
# PyPI: 6 malware + 4 vulnerabilities
for i in range(6):
    rec(f"MAL-2023-{200 + i}", "PyPI", day(2023, 2 * i + 1, 15), refs=("ADVISORY", "ADVISORY"))
for i in range(4):
    rec(f"PYSEC-2022-{300 + i}", "PyPI", day(2022, 6 + i, 1), refs=("WEB", "REPORT"))
# multi-ecosystem malware record: counts once for npm and once for PyPI
rec("MAL-2024-9001", "npm", day(2024, 3, 5), refs=("ADVISORY", "ARTICLE", "ARTICLE"), ecos=["npm", "PyPI"])
# RubyGems: 3 malware (one withdrawn, still counted) + 5 vulnerabilities
rec("MAL-2022-400", "RubyGems", day(2022, 2, 1), refs=("ARTICLE",))
rec("MAL-2022-401", "RubyGems", day(2022, 2, 2), refs=())
rec("MAL-2023-402", "RubyGems", day(2023, 7, 7), extra={"withdrawn": "2024-01-01T00:00:00Z"})
for i in range(5):
    rec(f"GHSA-rb{i:02d}-cccc-dddd", "RubyGems", day(2024, 10, 1 + i))
# Go: 2 malware + 6 vulnerabilities (one dated only by "modified")
rec("MAL-2025-500", "Go", day(2025, 1, 20), refs=("advisory", "article"))
rec("MAL-2025-501", "Go", "2025-03-31T23:59:59Z", refs=("ADVISORY", None))
for i in range(5):
    rec(f"GO-2023-{600 + i}", "Go", day(2023, 11, 1 + i), refs=("ADVISORY", "FIX"))
rec("GO-2024-699", "Go", None, modified="2024-08-08T08:08:08Z")
# Maven: 1 malware + 6 vulnerabilities (one with a MAL-like but non-matching id)
rec("MAL-2024-700", "Maven", "2024-12-31T22:00:00-05:00", refs=("ADVISORY", "ARTICLE"))
rec("MALFORMED-1", "Maven", day(2024, 5, 5))
for i in range(5):
    rec(f"GHSA-mv{i:02d}-eeee-ffff", "Maven", day(2022, 12, 1 + i))
# CRAN: 5 vulnerabilities
for i in range(5):
    rec(f"RSEC-2023-{i + 1}", "CRAN", day(2023, 4, 10 + i))
# out of scope
for i in range(4):
    rec(f"MAL-2024-{800 + i}", "crates.io", day(2024, 2, 1 + i))
for i in range(3):
    rec(f"GHSA-pk{i:02d}-gggg-hhhh", "Packagist", day(2023, 9, 1 + i))
# before the window
rec("MAL-2021-900", "npm", day(2021, 6, 1))
rec("PYSEC-2021-901", "PyPI", day(2021, 12, 31))

assert len(records) == 60, len(records)
assert len({r[1] for r in records}) == 60

if ROOT.exists():
    shutil.rmtree(ROOT)
for eco, id_, doc in records:
    d = ROOT / eco
    d.mkdir(parents=True, exist_ok=True)
    (d / f"{id_}.json").write_text(json.dumps(doc, indent=2) + "\n")
