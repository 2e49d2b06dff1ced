"""Command line entry point.

    gnn-trainer serve --stdio
    gnn-trainer serve --http HOST:PORT
"""

import argparse
import logging
import sys

from .server import serve_http, serve_stdio


def _parse_addr(text):
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise argparse.ArgumentTypeError(f"expected HOST:PORT, got {text!r}")
    return host or "127.0.0.1", int(port)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="gnn-trainer", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log at INFO level")
    sub = parser.add_subparsers(dest="command", required=True)
    serve = sub.add_parser("serve", help="answer evaluation requests until stopped")
    mode = serve.add_mutually_exclusive_group(required=True)
    mode.add_argument("--stdio", action="store_true", help="line-delimited JSON on stdin/stdout")
    mode.add_argument("--http", type=_parse_addr, metavar="HOST:PORT",
                      help="HTTP POST endpoint with the same bodies")
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.stdio:
            serve_stdio()
        else:
            serve_http(*args.http)
    except KeyboardInterrupt:
        pass
    return 0


if __name__ == "__main__":
    sys.exit(main())
