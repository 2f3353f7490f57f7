"""
Command line interface.

Exit codes: 0 on success, 2 for bad input (missing or malformed files,
invalid arguments, vectors that fail to verify), 1 for anything else.
"""
import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from ssbgp.backend import clear_caches, get_context, pubkey_deserialize, pubkey_serialize
from ssbgp.ecs import (
    EMPTY,
    ChainLink,
    EcsSignature,
    decode_chain,
    ecs_keygen,
    ecs_sign,
    ecs_sign_unchecked,
    ecs_verify,
    encode_chain,
    seq_append,
)
from ssbgp.game import GameConfig, builtin_adversaries, get_adversary, run_game
from ssbgp.sim import load_scenario, random_topology, run_scenarios
from ssbgp.utils import to_seed_bytes
from ssbgp.version import __version__

logger = logging.getLogger(__name__)

BENCH_SIZES = (1, 10, 50, 100)
VECTOR_FORMAT = "ssbgp-ecs-vectors-v1"


class VectorCheckFailed(ValueError):
    """Raised when a test vector file does not verify."""


def _emit(text: str, out: Optional[Path]):
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    out = Path(out)
    out.parent.mkdir(exist_ok=True, parents=True)
    out.write_text(text, encoding="utf-8")
    logger.info("wrote %s", out)


def _seed(value: Optional[str]):
    """Seeds look like ints when they are ints."""
    if value is None:
        return None
    try:
        return int(value)
    except ValueError:
        return value


# --- run


def _collect_scenarios(names: Sequence[str]) -> List[str]:
    out = []
    for name in names:
        path = Path(name)
        if path.is_dir():
            out.extend(str(x) for x in sorted(path.glob("*.json")))
        else:
            out.append(name)
    return out


def cmd_run(args) -> int:
    """Run scenarios and write their metrics."""
    seed = _seed(args.seed)
    scenarios = [load_scenario(x) for x in _collect_scenarios(args.scenario)]
    if args.random:
        scenarios.append(
            random_topology(args.random, seed=seed or 0, protocol=args.protocol)
        )
    if not scenarios:
        raise ValueError("no scenario given, pass a scenario or --random N")
    results = run_scenarios(scenarios, seed=seed, jobs=args.jobs)
    if args.plot:
        from ssbgp.plot import plot_scenario

        plot_scenario(scenarios[0], results[0], args.plot)
    if args.format == "csv":
        frames = []
        for scenario, metrics in zip(scenarios, results):
            df = metrics.to_frame().reset_index()
            df.insert(0, "scenario", scenario.name)
            frames.append(df)
        _emit(pd.concat(frames, ignore_index=True).to_csv(index=False), args.out)
    elif len(results) == 1:
        _emit(results[0].to_json(), args.out)
    else:
        doc = {s.name: m.to_dict() for s, m in zip(scenarios, results)}
        _emit(json.dumps(doc, indent=2, sort_keys=True), args.out)
    return 0


# --- bench


def _median_time(func, iterations: int, warmup: int) -> float:
    for _ in range(warmup):
        clear_caches()
        func()
    times = []
    for _ in range(iterations):
        clear_caches()
        start = time.perf_counter()
        func()
        times.append(time.perf_counter() - start)
    return float(np.median(times))


def bench_frame(
    max_n: int = 100,
    iterations: int = 10,
    warmup: int = 2,
    sizes: Sequence[int] = BENCH_SIZES,
) -> pd.DataFrame:
    """
    Time signing one more link and verifying whole chains.

    Returns one row per chain length with the median sign and verify
    times, and a linear fit of the verify times.
    """
    if max_n < 1:
        raise ValueError("max_n must be at least 1")
    sizes = [x for x in sizes if x <= max_n] or [1]
    ctx = get_context()
    keys = [ecs_keygen(ctx, b"bench:" + str(i).encode()) for i in range(max(sizes))]
    rows = []
    for n in sizes:
        seq, sig = EMPTY, EcsSignature.unit()
        for i, kp in enumerate(keys[: n - 1]):
            msg = f"bench link {i}".encode()
            sig = ecs_sign_unchecked(kp, msg, seq, sig)
            seq = seq_append(seq, ChainLink(message=msg, pubkey=kp.public))
        last = keys[n - 1]
        full_sig = ecs_sign_unchecked(last, b"bench last", seq, sig)
        full_seq = seq_append(seq, ChainLink(message=b"bench last", pubkey=last.public))
        sign_time = _median_time(
            lambda: ecs_sign_unchecked(last, b"bench last", seq, sig), iterations, warmup
        )
        verify_time = _median_time(
            lambda: ecs_verify(full_seq, full_sig), iterations, warmup
        )
        rows.append({"n": n, "sign_median_s": sign_time, "verify_median_s": verify_time})
        logger.info("n=%d sign %.4fs verify %.4fs", n, sign_time, verify_time)
    df = pd.DataFrame(rows)
    if len(df) > 1:
        slope, intercept = np.polyfit(df["n"], df["verify_median_s"], 1)
        df["verify_fit_s"] = intercept + slope * df["n"]
    else:
        df["verify_fit_s"] = df["verify_median_s"]
    return df


def cmd_bench(args) -> int:
    """Benchmark signing and verification."""
    df = bench_frame(args.max_n, args.iterations, args.warmup)
    if args.format == "json":
        _emit(df.to_json(orient="records", indent=2), args.out)
    else:
        _emit(df.to_csv(index=False), args.out)
    return 0


# --- vectors


def make_vectors(count: int, seed=0) -> dict:
    """Build count deterministic chains, the i-th with i links."""
    if count < 1:
        raise ValueError("count must be at least 1")
    ctx = get_context()
    base = b"vector:" + to_seed_bytes(seed)
    vectors = []
    for i in range(1, count + 1):
        seq, sig = EMPTY, EcsSignature.unit()
        keys = []
        for j in range(i):
            kp = ecs_keygen(ctx, base + f":{i}:{j}".encode())
            msg = f"vector {i} link {j}".encode()
            sig = ecs_sign(kp, msg, seq, sig)
            seq = seq_append(seq, ChainLink(message=msg, pubkey=kp.public))
            keys.append(kp.public)
        vectors.append(
            {
                "n": i,
                "public_keys": [pubkey_serialize(x).hex() for x in keys],
                "messages": [x.message.hex() for x in seq],
                "signature": sig.to_bytes().hex(),
                "chain": encode_chain(seq, sig).hex(),
            }
        )
    return {"format": VECTOR_FORMAT, "seed": seed, "vectors": vectors}


def check_vectors(doc: dict) -> List[int]:
    """
    Re-verify a vector document, returning the indices of failing vectors.

    A vector fails if its chain does not decode, its messages or signature
    disagree with the chain bytes, or the signature does not verify.
    """
    if doc.get("format") != VECTOR_FORMAT:
        raise ValueError(f"not a {VECTOR_FORMAT} document")
    failed = []
    for index, vector in enumerate(doc["vectors"]):
        try:
            keys = [pubkey_deserialize(bytes.fromhex(x)) for x in vector["public_keys"]]
            resolver = {x.to_bytes(): x for x in keys}
            seq, sig = decode_chain(bytes.fromhex(vector["chain"]), resolver)
            ok = (
                [x.message.hex() for x in seq] == vector["messages"]
                and list(seq.keys) == keys
                and sig.to_bytes().hex() == vector["signature"]
                and ecs_verify(seq, sig)
            )
        except (ValueError, KeyError) as e:
            logger.info("vector %d does not parse: %s", index, e)
            ok = False
        if not ok:
            failed.append(index)
    return failed


def cmd_vector(args) -> int:
    """Write test vectors, or check a vector file."""
    if args.check:
        doc = json.loads(Path(args.check).read_text(encoding="utf-8"))
        failed = check_vectors(doc)
        if failed:
            raise VectorCheckFailed(f"vectors {failed} do not verify")
        print(f"{len(doc['vectors'])} vectors verify")
        return 0
    doc = make_vectors(args.count, _seed(args.seed) or 0)
    _emit(json.dumps(doc, indent=2, sort_keys=True), args.out)
    return 0


# --- game and keys


def cmd_game(args) -> int:
    """Play the unforgeability game and print transcripts."""
    extr = args.extr if args.extr is not None else "0" * args.n
    cfg = GameConfig(n=args.n, extr=extr, omega=args.omega, seed=str(args.seed or 0))
    if args.adversary == "all":
        adversaries = builtin_adversaries()
    else:
        adversaries = [get_adversary(args.adversary)]
    lines = []
    for adversary in adversaries:
        result = run_game(cfg, adversary)
        lines.extend(result.transcript)
        lines.append("")
    _emit("\n".join(lines), args.out)
    return 0


def cmd_keygen(args) -> int:
    """Print key pairs as json."""
    ctx = get_context()
    keys = []
    for i in range(args.count):
        seed = None if args.seed is None else b"keygen:" + to_seed_bytes(args.seed) + b":%d" % i
        kp = ecs_keygen(ctx, seed)
        keys.append(
            {
                "public_key": pubkey_serialize(kp.public).hex(),
                "private_key": kp.private.to_bytes().hex(),
            }
        )
    _emit(json.dumps(keys, indent=2), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ssbgp",
        description="Enhanced chain signatures and stateless secure routing.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, default_format=None):
        p.add_argument("--seed", default=None)
        p.add_argument("--out", type=Path, default=None)
        if default_format:
            p.add_argument("--format", choices=("json", "csv"), default=default_format)

    run = sub.add_parser("run", help="simulate scenarios")
    run.add_argument("scenario", nargs="*", help="scenario files, directories or bundled names")
    run.add_argument("--random", type=int, default=0, help="add a random topology of N nodes")
    run.add_argument("--protocol", default="SSBGP", choices=("BGP", "SBGP", "SSBGP"))
    run.add_argument("--plot", type=Path, default=None)
    run.add_argument("--jobs", type=int, default=1)
    add_common(run, default_format="json")
    run.set_defaults(func=cmd_run)

    bench = sub.add_parser("bench", help="time chain signing and verification")
    bench.add_argument("--max-n", type=int, default=100)
    bench.add_argument("--iterations", type=int, default=10)
    bench.add_argument("--warmup", type=int, default=2)
    add_common(bench, default_format="csv")
    bench.set_defaults(func=cmd_bench)

    vector = sub.add_parser("vector", help="write or check chain test vectors")
    vector.add_argument("--count", type=int, default=3)
    vector.add_argument("--check", type=Path, default=None)
    add_common(vector)
    vector.set_defaults(func=cmd_vector)

    game = sub.add_parser("game", help="play the unforgeability game")
    game.add_argument("--n", type=int, default=3)
    game.add_argument("--extr", default=None)
    game.add_argument("--omega", type=int, default=1, choices=(1, 2))
    game.add_argument("--adversary", default="all")
    add_common(game)
    game.set_defaults(func=cmd_game)

    keygen = sub.add_parser("keygen", help="generate key pairs")
    keygen.add_argument("--count", type=int, default=1)
    add_common(keygen)
    keygen.set_defaults(func=cmd_keygen)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as e:
        print(f"ssbgp {args.command}: {e}", file=sys.stderr)
        return 2
    except Exception:
        logger.exception("ssbgp %s failed", args.command)
        return 1


if __name__ == "__main__":
    sys.exit(main())
