"""Smoke test for the tempex Python bindings against the paper-mini fixture."""

import json
import pathlib
import sys
import tempfile

import tempex

ROOT = pathlib.Path(__file__).resolve().parents[1]
FIXTURE = ROOT / "crates" / "core" / "fixtures" / "paper-mini"


def main() -> int:
    key = tempex.canonicalize("http://WWW.EPA.gov:80/climate/index.html#top")
    assert key.key == "gov,epa)/climate/index.html", key
    assert key.host_part() == "gov,epa"
    assert tempex.classify_depth("http://www.epa.gov/") == "high"
    assert tempex.classify_depth("http://www.epa.gov/a/b/c.html") == "deep"
    assert tempex.in_scope("http://fire.ak.blm.gov/", ["gov"])
    assert not tempex.in_scope("http://example.com/", ["gov"])

    row = tempex.parse_cdx_line(
        "gov,epa)/ 20080101120000 http://www.epa.gov/ text/html 200 ABCDEF 1234"
    )
    assert row["urlkey"] == "gov,epa)/" and row["length"] == 1234

    assert tempex.shape_of(5, 9, 2) == "GrowThenShrink"
    pct = tempex.category_percentages(
        total_pages=1220,
        changed=990,
        with_deletions=740,
        deleted_both=373,
        deleted_middle_only=274,
        deleted_prior_only=55,
    )
    assert pct == {"percent_middle_only": 37.0, "percent_any_middle": 87.4, "percent_changed": 81.1}, pct
    assert tempex.category_percentages(0, 0, 0, 0, 0, 0)["percent_changed"] is None

    fixture = tempex.Fixture(str(FIXTURE))
    rows = fixture.cdx_dump()
    assert 0 < len(fixture) <= len(rows)
    assert len({r["urlkey"] for r in rows}) <= len(fixture)

    try:
        tempex.Fixture(str(FIXTURE / "missing"))
    except tempex.BackendError:
        pass
    else:
        raise AssertionError("missing fixture loaded")

    pipeline = tempex.Pipeline(str(FIXTURE / "tempex.json"))
    assert pipeline.epochs == ["2008", "2016", "2020"], pipeline.epochs
    with tempfile.TemporaryDirectory() as tmp:
        out = pathlib.Path(tmp)
        crawl = pipeline.crawl(str(out / "candidates.jsonl"))
        report = pipeline.assemble(str(out / "triplets.jsonl"), [str(out / "candidates.jsonl")])
        prov = pipeline.provenance(str(out / "triplets.jsonl"), str(out / "prov.csv"))
        analysis = pipeline.analyze(str(out / "triplets.jsonl"), str(out / "report.json"))
        assert report["tuples"] == 122, report["tuples"]
        assert prov["by_epoch"]["2008"]["organizations"]["Alexa"] == 82
        assert analysis["percentages"]["percent_changed"] == 81.1
        summary = {
            "crawl_candidates": crawl["candidates"],
            "tuples": report["tuples"],
            "provenance_records": prov["records"],
            "percent_changed": analysis["percentages"]["percent_changed"],
        }
    print(json.dumps(summary, sort_keys=True))
    print("smoke test ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
