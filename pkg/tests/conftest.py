"""Shared fixtures: golden documents and the canned GIFT pipeline run."""

from __future__ import annotations

import time
from pathlib import Path

import pytest

from termfuse import cli
from termfuse.gmtxml import parse_gmt, to_model

FIXTURES = Path(__file__).parent / "fixtures"

GIFT_SOURCES = ("gift_nlm.tsf", "gift_inist.tsf", "gift_inra.tsf")
GIFT_PIVOTED = ("mesh.gmt", "vocabulaire-multidisciplinaire-pascal.gmt",
                "biotechnologie-de-la-reproduction.gmt")


@pytest.fixture(scope="session")
def figure_doc() -> str:
    return (FIXTURES / "figure_gift.gmt").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def figure_tree(figure_doc):
    return parse_gmt(figure_doc)


@pytest.fixture(scope="session")
def figure_collection(figure_tree):
    return to_model(figure_tree)


@pytest.fixture(scope="session")
def gift_run(tmp_path_factory) -> dict:
    """Import the three GIFT sources and fuse them, once per session.

    Returns the output directory, the fused artifact paths and the wall
    time of the import+fuse calls so the acceptance budget can be checked
    without re-running the pipeline.
    """
    out = tmp_path_factory.mktemp("gift")
    sources = [str(FIXTURES / name) for name in GIFT_SOURCES]
    start = time.perf_counter()
    rc_import = cli.main(["import", *sources, "--out", str(out)])
    pivoted = [str(out / name) for name in GIFT_PIVOTED]
    rc_fuse = cli.main(["fuse", *pivoted, "--out", str(out)])
    elapsed = time.perf_counter() - start
    assert rc_import == 0 and rc_fuse == 0
    return {
        "dir": out,
        "fused": out / "fused.gmt",
        "report": out / "fused.report",
        "pivoted": [out / name for name in GIFT_PIVOTED],
        "elapsed": elapsed,
    }
