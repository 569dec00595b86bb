"""Command-line figure rendering:

    feasiplot --kind convergence --in out/traces.csv --out fig.png
    feasiplot --kind scatter_diagonal --in out/chain.csv --out diag.png

Exit codes: 0 success, 2 bad arguments or schema error, 3 I/O error.
"""

import argparse
import sys

from .figures import FIGURE_KINDS, PlotSpec, render
from .tables import SchemaError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="feasiplot")
    parser.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    parser.add_argument("--in", dest="inputs", required=True, nargs="+",
                        help="input CSV file(s)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--monitor", default="monitor1",
                        help="trace column for convergence plots")
    parser.add_argument("--linear-y", action="store_true",
                        help="use a linear instead of log value axis")
    parser.add_argument("--annotate-rate", action="store_true",
                        help="annotate convergence curves with the fitted rate")
    args = parser.parse_args(argv)

    spec = PlotSpec(kind=args.kind, inputs=tuple(args.inputs), out=args.out,
                    monitor=args.monitor, log_y=not args.linear_y,
                    annotate_rate=args.annotate_rate)
    try:
        render(spec)
    except SchemaError as err:
        print(f"schema error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"I/O error: {err}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
