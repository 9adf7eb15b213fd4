import argparse
import sys

from .figures import KINDS, FigureSpec, render

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="opinion-opt-plot",
                     description="Render an opinion-opt CSV to a figure.")
    parser.add_argument("--csv", required=True, help="input CSV file")
    parser.add_argument("--kind", required=True, choices=KINDS)
    parser.add_argument("--out", required=True, help="output image file")
    parser.add_argument("--log-y", choices=("auto", "on", "off"),
                        default="auto", help="y-axis scale (default: auto)")
    parser.add_argument("--title", default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    log_y = {"auto": None, "on": True, "off": False}[args.log_y]
    spec = FigureSpec(csv_path=args.csv, kind=args.kind, out_path=args.out,
                      log_y=log_y, title=args.title)
    try:
        out = render(spec)
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"wrote {out}")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
