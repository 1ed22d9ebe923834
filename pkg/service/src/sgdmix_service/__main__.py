"""Command line launcher for the refinement service."""

from __future__ import annotations

import argparse
import os
import sys

import uvicorn

from .app import ServiceConfig, ServiceError, create_app, split_bind


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sgdmix-service",
        description="Serve the /refine HTTP contract in stub or model mode.",
    )
    parser.add_argument(
        "--mode", choices=("stub", "model"), default="stub",
        help="stub answers without model weights; model wraps a diffusion backend",
    )
    parser.add_argument(
        "--model-path", default=None,
        help="weights directory, required with --mode model",
    )
    parser.add_argument("--denoise-steps", type=int, default=25)
    parser.add_argument("--guidance-scale", type=float, default=7.5)
    parser.add_argument(
        "--bind",
        default=os.environ.get("SGDMIX_SERVICE_BIND", "127.0.0.1:8000"),
        help="host:port to listen on (defaults to SGDMIX_SERVICE_BIND if set)",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = ServiceConfig(
            mode=args.mode,
            model_path=args.model_path,
            denoise_steps=args.denoise_steps,
            guidance_scale=args.guidance_scale,
            bind_address=args.bind,
        )
    except ServiceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    host, port = split_bind(config.bind_address)
    uvicorn.run(create_app(config), host=host, port=port, log_level="info")
    return 0


if __name__ == "__main__":
    sys.exit(main())
