"""dataset-prep command line: prepare --dataset <name> --out <dir>."""

import argparse
import json
import sys

from .embed import DEFAULT_MODEL
from .prepare import prepare


def main(argv=None):
    parser = argparse.ArgumentParser(prog="dataset-prep")
    sub = parser.add_subparsers(dest="command", required=True)
    prep = sub.add_parser("prepare")
    prep.add_argument("--dataset", required=True,
                      help="cora | citeseer | pubmed | wiki-cs")
    prep.add_argument("--out", required=True)
    prep.add_argument("--model", default=DEFAULT_MODEL,
                      help="sentence-encoder id, or stub:<dim> for offline runs")
    prep.add_argument("--raw-dir", default=None,
                      help="directory with already-downloaded raw files")

    args = parser.parse_args(argv)
    try:
        manifest = prepare(args.dataset, args.out, args.model, raw_dir=args.raw_dir)
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(manifest.to_dict(), indent=1, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
