"""Device-side surface: the local configuration endpoint and a runner that
drives a frame source through the pipeline into the edge link.

In hotspot mode the journal is the product; the local endpoint serves it
as an export bundle for manual transfer.
"""

from __future__ import annotations

import argparse
import tempfile
from pathlib import Path

from fastapi import FastAPI
from fastapi.responses import JSONResponse, PlainTextResponse

from .edgelink import DeviceConfig, EdgeLink


class DeviceConfigStore:
    """File-backed holder for the device configuration."""

    def __init__(self, path: str | Path, config: DeviceConfig | None = None) -> None:
        self.path = Path(path)
        if config is not None:
            self.config = config
            self.save()
        elif self.path.exists():
            self.config = DeviceConfig.load(self.path)
        else:
            self.config = DeviceConfig(mode="hotspot")
            self.save()

    def save(self) -> None:
        self.config.save(self.path)

    def replace(self, config: DeviceConfig) -> None:
        self.config = config
        self.save()


def create_device_app(store: DeviceConfigStore, link: EdgeLink | None = None) -> FastAPI:
    app = FastAPI(title="edgeattend device")

    @app.get("/healthz")
    def healthz():
        return {"ok": True}

    @app.get("/config")
    def get_config():
        return store.config.to_json()

    @app.put("/config")
    def put_config(payload: dict):
        try:
            config = DeviceConfig.from_json(payload)
        except (TypeError, ValueError) as err:
            return JSONResponse({"error": str(err)}, status_code=422)
        store.replace(config)
        if link is not None:
            link.config = config
        return config.to_json()

    @app.get("/bundle")
    def bundle():
        if link is None:
            return JSONResponse({"error": "no event journal on this device"}, status_code=404)
        from .edgelink import now_ms

        with tempfile.NamedTemporaryFile("r+", suffix=".jsonl") as fh:
            link.export_bundle(fh.name)
            fh.seek(0)
            name = f"attendance-{store.config.device_id}-{now_ms()}.jsonl"
            return PlainTextResponse(
                fh.read(),
                media_type="application/x-ndjson",
                headers={"Content-Disposition": f'attachment; filename="{name}"'},
            )

    return app


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="edgeattend-device")
    parser.add_argument("--config", required=True, help="device config JSON file")
    parser.add_argument("--state-dir", required=True, help="journal/cursor directory")
    parser.add_argument("--fixture", help="run this fixture directory through the pipeline")
    parser.add_argument("--gallery", help="gallery directory (defaults to the fixture's)")
    parser.add_argument("--serve", action="store_true", help="expose the config endpoint")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8800)
    args = parser.parse_args(argv)

    store = DeviceConfigStore(args.config)
    link = EdgeLink(store.config, args.state_dir)

    if args.fixture:
        from collections import Counter

        from .backends import PatternEmbedder, ScriptedDetector
        from .edgelink import now_ms
        from .gallery import Gallery
        from .pipeline import DirectoryFrameSource, PipelineConfig, RecognitionPipeline

        source = DirectoryFrameSource(args.fixture)
        script = source.script()
        if script is None:
            parser.error("fixture has no detection script")
        gallery_dir = args.gallery or (Path(args.fixture) / source.manifest.get("gallery", "gallery"))
        gallery = Gallery.load(gallery_dir)
        pipeline = RecognitionPipeline(
            detector=ScriptedDetector(script),
            embedder=PatternEmbedder(dim=gallery.dimension),
            gallery=gallery,
            config=PipelineConfig(**store.config.pipeline),
            threshold=store.config.threshold,
            metric=store.config.metric,
            device_id=store.config.device_id,
            session_id=store.config.session_id,
        )
        # Replay synchronously (every recorded frame processed once), with
        # fixture-relative timestamps mapped onto the wall clock.
        t_wall = now_ms()
        t_base: int | None = None
        frames = 0
        outcomes: Counter = Counter()
        for frame, t in source:
            if t_base is None:
                t_base = t
            frames += 1
            for event in pipeline.process_frame(frame, t_wall + (t - t_base)):
                outcomes[link.send(event).value] += 1
        print(
            f"frames processed={frames} events={sum(outcomes.values())} "
            f"({dict(outcomes) or 'none'}) errors={pipeline.errors}"
        )
        if store.config.mode == "network":
            print(f"flushed {link.flush()} queued events")

    if args.serve:
        import uvicorn

        uvicorn.run(create_device_app(store, link), host=args.host, port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
