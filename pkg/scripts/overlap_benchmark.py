"""Fusion throughput on synthetic corpora with a planted overlap fraction.

Generates three TSF resources per size step, pivots them and times fuse(),
checking the resulting entry count against the partition arithmetic of the
generator.  The generator lives next to the tests because they share it.

Run from anywhere: python scripts/overlap_benchmark.py [sizes...]
"""

import sys
import time
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))
sys.path.insert(0, str(REPO / "tests"))

from corpusgen import make_overlap_corpus  # noqa: E402
from termfuse.fusion import fuse, lift_relations  # noqa: E402
from termfuse.ingest import parse_source, pivot  # noqa: E402

DEFAULT_SIZES = (250, 500, 1000, 2000)


def run(records: int) -> None:
    corpus = make_overlap_corpus(records_per_resource=records)
    t0 = time.perf_counter()
    cols = [pivot(parse_source(text)) for text in corpus.texts]
    t1 = time.perf_counter()
    fused, report = fuse(cols)
    t2 = time.perf_counter()
    lifted = lift_relations(fused, report)
    t3 = time.perf_counter()

    ok = "ok" if len(lifted.entries) == corpus.expected_entries else "MISMATCH"
    print(f"{3 * records:6d} records  pivot {t1 - t0:5.2f}s  fuse {t2 - t1:5.2f}s"
          f"  lift {t3 - t2:5.2f}s  -> {len(lifted.entries)} entries"
          f" ({corpus.shared_records} shared) {ok}")


def main() -> int:
    sizes = [int(a) for a in sys.argv[1:]] or list(DEFAULT_SIZES)
    for records in sizes:
        run(records)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
