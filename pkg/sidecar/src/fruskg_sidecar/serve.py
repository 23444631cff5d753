"""Command-line launcher: `fruskg-sidecar --port 8111`."""

from __future__ import annotations

import argparse

import uvicorn

from .app import create_app

app = create_app()


def main(argv: list[str] | None = None) -> None:
    parser = argparse.ArgumentParser(description="embedding/NER sidecar server")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8111)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args(argv)
    # multi-worker mode needs an import string rather than an app object
    uvicorn.run("fruskg_sidecar.serve:app", host=args.host, port=args.port,
                workers=args.workers)


if __name__ == "__main__":
    main()
