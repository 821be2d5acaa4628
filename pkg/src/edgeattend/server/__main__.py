"""Run the attendance server: `python -m edgeattend.server` or
`edgeattend-server`."""

from __future__ import annotations

import argparse


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="edgeattend-server")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--db", default=":memory:", help="sqlite database path")
    parser.add_argument("--gallery", default=None, help="gallery directory")
    parser.add_argument("--token", default=None, help="static bearer token")
    parser.add_argument(
        "--mock-backends",
        action="store_true",
        help="enroll with the deterministic pattern detector/embedder",
    )
    parser.add_argument("--seed-demo", action="store_true", help="create a demo group and session")
    args = parser.parse_args(argv)

    import uvicorn

    from .app import create_app
    from .storage import Storage

    detector = embedder = None
    if args.mock_backends:
        from ..backends import PatternDetector, PatternEmbedder

        detector = PatternDetector()
        embedder = PatternEmbedder()

    storage = Storage(args.db)
    if args.seed_demo:
        _seed_demo(storage)
    app = create_app(
        storage=storage,
        detector=detector,
        embedder=embedder,
        gallery_dir=args.gallery,
        auth_token=args.token,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _seed_demo(storage) -> None:
    from ..edgelink import now_ms

    for i in range(1, 10):
        storage.add_student(f"s{i:02d}", f"Student {i}", "demo-group")
    t0 = now_ms()
    storage.add_session("demo-session", "Demo course", t0 - 3_600_000, t0 + 3_600_000, "demo-group")


if __name__ == "__main__":
    raise SystemExit(main())
