"""Operational CLI: serve, replay, bench."""

import argparse
import logging
import sys

from ..errors import EngineError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="scenetalk",
        description="Headless scene-orchestration engine")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the gateway server")
    serve.add_argument("--config", required=True,
                       help="JSON config file path")

    replay = sub.add_parser(
        "replay", help="replay a scripted session against its golden")
    replay.add_argument("--transcript", required=True,
                        help="scripted-mock transcript JSON")
    replay.add_argument("--script", required=True, help="task script JSON")
    replay.add_argument("--golden", default=None,
                        help="override the golden path named by the script")
    replay.add_argument("--write-golden", action="store_true",
                        help="pin the produced output as the new golden")

    bench = sub.add_parser(
        "bench", help="measure context reduction on a synthetic scene")
    bench.add_argument("--scene-size", type=int, default=200)
    bench.add_argument("--category", default="virtual_objects")
    bench.add_argument("--property", dest="prop", default="position")
    bench.add_argument("--csv", default=None,
                       help="write the measurement row to this CSV file")
    bench.add_argument("--kernels", action="store_true",
                       help="also time compiled vs pure-Python kernels")

    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s")

    try:
        if args.command == "serve":
            return _serve(args)
        if args.command == "replay":
            return _replay(args)
        if args.command == "bench":
            return _bench(args)
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def _serve(args) -> int:
    from .server import GatewayServer, ServerConfig

    config = ServerConfig.from_file(args.config)
    server = GatewayServer(config)
    server.serve_forever()
    return 0


def _replay(args) -> int:
    from ..errors import GoldenMismatch
    from .replay import replay

    try:
        report = replay(args.transcript, args.script,
                        golden_path=args.golden,
                        write_golden=args.write_golden)
    except GoldenMismatch as exc:
        print(f"GOLDEN MISMATCH: {exc}", file=sys.stderr)
        return 1
    for request in report["requests"]:
        usage = request["usage"]
        print(f"{request['request_id']}: in={usage['input_tokens']} "
              f"out={usage['output_tokens']} calls={usage['calls']} "
              f"latency={request['latency_s']:.3f}s")
    print(f"ticks={report['ticks']} objects={report['objects']} "
          f"events={report['events']}")
    if "golden_written" in report:
        print(f"golden written: {report['golden_written']}")
    else:
        print(f"golden match: {report['golden']}")
    return 0


def _bench(args) -> int:
    from .bench import bench_csv, bench_kernels, run_bench

    result = run_bench(scene_size=args.scene_size, category=args.category,
                       prop=args.prop)
    print(bench_csv(result), end="")
    print(f"# reduction: {(1.0 - result['ratio']) * 100.0:.1f}% "
          f"({result['reduced_tokens']} vs {result['full_tokens']} tokens) "
          f"in {result['elapsed_s'] * 1000:.0f} ms")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(bench_csv(result))
        print(f"# csv written: {args.csv}")
    if args.kernels:
        timing = bench_kernels()
        for name in ("pure-python", "compiled"):
            if name in timing:
                print(f"kernels[{name}]: {timing[name]['seconds']:.4f}s")
        if "speedup" in timing:
            print(f"compiled speedup: {timing['speedup']:.2f}x")
    return 0 if result["ratio"] <= 0.2 else 1


if __name__ == "__main__":
    sys.exit(main())
