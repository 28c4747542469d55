"""Command-line entry point.

Exit codes: 0 ok, 2 configuration error, 3 bad or unreadable file,
4 signature rejected (threshold not met), 5 one-time key reuse.

The verifier re-prepares public-key blocks from the manifest written by
keygen, under its own noise model. That manifest is where the simulation
replaces the quantum channel; a real verifier would only ever hold states.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import secrets
import sys
import time

import numpy as np

from . import BACKEND, __version__
from .analysis import (
    ProposalParams,
    calibrate_c,
    commitment_schedule,
    hoeffding_tail,
    landau_liu_samples,
    landau_liu_time,
    pubkey_vs_depth,
    rows_to_dicts,
    to_csv,
)
from .attacks import (
    blackbox_bound,
    exhaustive_strategy,
    make_pgm_strategy,
    oracle_world_run,
    OracleWorld,
    shadow_learner,
    brute_force_learner,
    werner_clone,
    werner_fidelity,
)
from .circuits import EnsembleParams, default_depth, enumerate_ensemble, make_rng, prepare_batch, prepare_state
from .commitments import (
    binding_game,
    correctness_overlap,
    commit,
    discard_last_block_adversary,
    hiding_fidelity,
    identity_adversary,
    reveal_verify,
)
from .noise import NoiseModel, analytic_fidelity
from .owsg import GameStats, random_guess_adversary, security_game, threshold_k
from .signatures import (
    KeyFileError,
    KeyReuseError,
    manifest_from_json,
    manifest_to_json,
    read_json,
    secret_key_from_json,
    secret_key_to_json,
    sign,
    signatures_from_json,
    signatures_to_json,
    sk_gen,
    verify_message,
    write_json,
)
from .statevec import SimulationError, haar_state

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_REJECT = 4
EXIT_REUSE = 5

SEED_ENV = "NISQCRYPT_SEED"
REPORT_VERSION = 1


class ConfigError(ValueError):
    pass


def resolve_seed(seed: int | None) -> int:
    """--seed, else $NISQCRYPT_SEED, else fresh entropy (always recorded)."""
    if seed is not None:
        return seed
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer (got {env!r})") from None
    return secrets.randbits(63)


def _noise(args) -> NoiseModel:
    return NoiseModel.from_config({
        "noise.kind": args.noise_kind,
        "noise.eps": args.noise_eps,
        "noise.F": args.noise_f,
        "noise.c": args.noise_c,
    })


def _meta(start: float) -> dict:
    return {
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "runtime_s": round(time.perf_counter() - start, 3),
        "backend": BACKEND,
        "version": __version__,
    }


def _report(command: str, params: dict, seed, result) -> dict:
    return {
        "format": "nisqcrypt-report",
        "version": REPORT_VERSION,
        "command": command,
        "params": params,
        "seed": seed,
        "result": result,
    }


def _emit(args, doc: dict, rows: list | None, start: float) -> None:
    """Print or write a report. CSV output gets a JSON sidecar with the envelope."""
    doc["meta"] = _meta(start)
    fmt = getattr(args, "format", "json")
    out = getattr(args, "out", None)
    if fmt == "csv":
        text = to_csv(rows if rows is not None else [doc["result"]])
        if out:
            with open(out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            side = {k: v for k, v in doc.items() if k != "result"}
            write_json(f"{out}.meta.json", side)
        else:
            sys.stdout.write(text)
        return
    if out:
        write_json(out, doc)
    else:
        sys.stdout.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# signatures


def cmd_keygen(args) -> int:
    start = time.perf_counter()
    seed = resolve_seed(args.seed)
    d = default_depth(args.n) if args.d is None else args.d
    sk = sk_gen(args.n, args.t, args.catalog, make_rng(seed), d, args.bits)
    params = {"n": args.n, "d": d, "t": args.t, "catalog": args.catalog, "bits": args.bits}
    meta = {"seed": seed, "version": __version__}
    sk_path, pk_path = f"{args.out}.sk.json", f"{args.out}.pk.json"
    write_json(sk_path, secret_key_to_json(sk, meta))
    write_json(pk_path, manifest_to_json(sk, meta))
    doc = _report("keygen", params, seed, {"secret_key": sk_path, "public_key_manifest": pk_path,
                                           "pubkey_qubits": 2 * args.n * args.t * args.bits})
    doc["meta"] = _meta(start)
    print(json.dumps(doc, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_sign(args) -> int:
    sk_doc = read_json(args.sk)
    sk = secret_key_from_json(sk_doc)
    sigs = sign(sk, args.message)
    # persist the used flags before any signature leaves this process
    sk_doc["used"] = list(sk.used)
    write_json(args.sk, sk_doc)
    write_json(args.out, signatures_to_json(sigs, {"version": __version__}))
    print(json.dumps({"signature": args.out, "message": args.message}, sort_keys=True))
    return EXIT_OK


def default_threshold(noise: NoiseModel, n: int, d: int, t: int, bricks: int) -> int:
    """threshold_k at the honest per-block acceptance probability of the noise model."""
    if noise.kind == "depolarizing":
        eta = analytic_fidelity(bricks, noise.eps)
    else:
        F = noise.white_fidelity(n, d)
        eta = F + (1.0 - F) / (1 << n)
    try:
        return threshold_k(eta, t, n)
    except ValueError as exc:
        raise ConfigError(f"cannot derive a default k ({exc}); pass --k") from None


def cmd_verify(args) -> int:
    start = time.perf_counter()
    seed = resolve_seed(args.seed)
    rng = make_rng(seed)
    noise = _noise(args)
    pk_doc = read_json(args.pk)
    sig_doc = read_json(args.sig)
    sigs = signatures_from_json(sig_doc)
    message = args.message if args.message is not None else sig_doc.get("message")
    if not isinstance(message, str):
        raise KeyFileError("signature file has no message and --message was not given")
    block_mode = "exact"
    if noise.kind == "depolarizing" and args.mode == "sampled":
        block_mode = "trajectory"
    pk = manifest_from_json(pk_doc, noise, block_mode, rng)
    p = pk_doc["params"]
    n, d, t = int(p["n"]), int(p["d"]), int(p["t"])
    bricks = EnsembleParams(n, d, str(p["catalog"])).num_bricks
    k = args.k if args.k is not None else default_threshold(noise, n, d, t, bricks)
    if not 1 <= k <= t:
        raise ConfigError(f"--k must lie in [1, {t}]")
    if len(sigs) != len(message):
        raise KeyFileError("signature file does not match the message length")
    if any(s.slice >= pk.slices for s in sigs):
        raise KeyFileError("signature refers to a key slice the manifest does not have")
    verdicts = verify_message(pk, message, sigs, k, args.mode, rng)
    accepted = all(v.accepted for v in verdicts)
    doc = _report("verify", {"n": n, "d": d, "t": t, "k": k, "mode": args.mode, "noise": noise.as_dict(),
                             "message": message}, seed,
                  {"verdict": "accept" if accepted else "reject", "bits": [v.as_dict() for v in verdicts]})
    _emit(args, doc, None, start)
    return EXIT_OK if accepted else EXIT_REJECT


# ---------------------------------------------------------------------------
# harnesses


def cmd_owsg_game(args) -> int:
    start = time.perf_counter()
    seed = resolve_seed(args.seed)
    rng = make_rng(seed)
    d = default_depth(args.n) if args.d is None else args.d
    params = EnsembleParams(args.n, d, args.catalog)
    ensemble = enumerate_ensemble(params)
    vecs = prepare_batch(ensemble)
    if args.adversary == "brute-force":
        def adv(copies, rng):
            return brute_force_learner(copies[0], ensemble, vecs)
    elif args.adversary == "shadow":
        def adv(copies, rng):
            res = shadow_learner(copies[0], ensemble, args.eps, args.delta, rng, len(copies), vecs)
            # a failed learner still has to answer something
            return res.circuit if res.circuit is not None else ensemble[int(rng.integers(len(ensemble)))]
    else:
        adv = random_guess_adversary(ensemble)
    stats = security_game(adv, params, args.copies, args.trials, rng, ensemble)
    doc = _report("owsg-game", {"n": args.n, "d": d, "catalog": args.catalog, "adversary": args.adversary,
                                "copies": args.copies, "trials": args.trials, "eps": args.eps,
                                "delta": args.delta}, seed, stats.as_dict())
    _emit(args, doc, None, start)
    return EXIT_OK


def cmd_commitment(args) -> int:
    start = time.perf_counter()
    seed = resolve_seed(args.seed)
    d = default_depth(args.n) if args.d is None else args.d
    ensemble = enumerate_ensemble(EnsembleParams(args.n, d, args.catalog))
    n, k = args.n, args.k
    s0, s1 = commit(0, n, k, ensemble), commit(1, n, k, ensemble)
    result = {
        "ensemble_size": len(ensemble),
        "correctness_overlap": correctness_overlap(n, k, ensemble),
        "hiding_fidelity": hiding_fidelity(n, k, ensemble),
        "reveal_honest": [reveal_verify(s0, 0), reveal_verify(s1, 1)],
        "reveal_flipped": [reveal_verify(s0, 1), reveal_verify(s1, 0)],
        "binding_identity": binding_game(identity_adversary, n, k, ensemble),
        "binding_discard_last_block": binding_game(discard_last_block_adversary(n, k), n, k, ensemble),
    }
    doc = _report("commitment", {"n": n, "d": d, "k": k, "catalog": args.catalog}, seed, result)
    _emit(args, doc, None, start)
    return EXIT_OK


def cmd_attack_bench(args) -> int:
    start = time.perf_counter()
    seed = resolve_seed(args.seed)
    rng = make_rng(seed)
    if args.attack == "werner":
        fids = [werner_clone(haar_state(args.n, rng), args.k).fidelity for _ in range(args.trials)]
        stats = GameStats.from_scores(fids)
        rows = [dict(attack="werner", n=args.n, k=args.k, trials=args.trials, fidelity=stats.estimate,
                     ci_low=stats.ci95[0], ci_high=stats.ci95[1], exact=werner_fidelity(args.n, args.k))]
    elif args.attack == "oracle":
        world = OracleWorld.create(args.n, args.N, rng)
        rows = []
        for T in range(args.max_queries + 1):
            fids = [oracle_world_run(world, make_pgm_strategy(T), T, args.k, rng).fidelity
                    for _ in range(args.trials)]
            rows.append(dict(attack="pgm", n=args.n, N=args.N, k=args.k, T=T, fidelity=float(np.mean(fids)),
                             bound=blackbox_bound(args.n, T, args.k)))
        ex = oracle_world_run(world, exhaustive_strategy, args.N, args.k, rng)
        rows.append(dict(attack="exhaustive", n=args.n, N=args.N, k=args.k, T=args.N, fidelity=ex.fidelity,
                         bound=ex.bound))
    else:
        d = default_depth(args.n) if args.d is None else args.d
        params = EnsembleParams(args.n, d, args.catalog)
        ensemble = enumerate_ensemble(params)
        vecs = prepare_batch(ensemble)
        hits = []
        for _ in range(args.trials):
            j = int(rng.integers(len(ensemble)))
            res = shadow_learner(prepare_state(ensemble[j]), ensemble, args.eps, args.delta, rng,
                                 args.copies, vecs)
            ok = not res.failed and abs(np.vdot(vecs[res.index], vecs[j])) ** 2 >= 1 - 2 * args.eps
            hits.append(float(ok))
        stats = GameStats.from_scores(hits)
        rows = [dict(attack="shadow", n=args.n, d=d, catalog=args.catalog, trials=args.trials,
                     success=stats.estimate, ci_low=stats.ci95[0], ci_high=stats.ci95[1])]
    params = {k: v for k, v in vars(args).items() if k not in ("func", "out", "format", "seed")}
    doc = _report("attack-bench", params, seed, rows)
    _emit(args, doc, rows, start)
    return EXIT_OK


def cmd_calc(args) -> int:
    start = time.perf_counter()
    what = args.what
    rows = None
    if what == "landau-liu":
        s = landau_liu_samples(args.n, args.d, args.k_dim, args.eps, args.delta)
        tm = landau_liu_time(args.n, args.d, args.k_dim, args.eps, args.delta)
        params = {"n": args.n, "d": args.d, "k_dim": args.k_dim, "eps": args.eps, "delta": args.delta}
        result = {"log10_samples": s.log10, "samples": str(s), "log10_time": tm.log10, "time": str(tm)}
    elif what == "pubkey-curve":
        c = args.c if args.c is not None else calibrate_c(67, 32, 1e-3)
        table = pubkey_vs_depth(args.n, args.k, c, range(args.d_min, args.d_max + 1), args.t_max)
        rows = rows_to_dicts(table)
        params = {"n": args.n, "k": args.k, "c": c, "d_min": args.d_min, "d_max": args.d_max}
        result = rows
    elif what == "hoeffding":
        rep = hoeffding_tail(args.eta, args.t, args.k)
        params = {"eta": args.eta, "t": args.t, "k": args.k}
        result = {"bound": rep.bound, "exact": rep.exact}
    elif what == "calibrate":
        params = {"n": args.n, "d": args.d, "F": args.F}
        result = {"c": calibrate_c(args.n, args.d, args.F)}
    elif what == "schedule":
        params = {"p": args.p, "n": args.n}
        result = rows_to_dicts([commitment_schedule(args.p, args.n)])[0]
    else:
        prop = ProposalParams()
        params, result = {}, prop.as_dict()
    doc = _report(f"calc {what}", params, None, result)
    _emit(args, doc, rows, start)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _bits(s: str) -> str:
    if not s or set(s) - {"0", "1"}:
        raise argparse.ArgumentTypeError(f"expected a bitstring, got {s!r}")
    return s


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help=f"RNG seed (default: ${SEED_ENV} or fresh)")
    out = argparse.ArgumentParser(add_help=False)
    out.add_argument("--out", default=None, help="write the report here instead of stdout")
    out.add_argument("--format", choices=("json", "csv"), default="json")
    noise = argparse.ArgumentParser(add_help=False)
    noise.add_argument("--noise-kind", choices=("none", "white", "depolarizing"), default="none")
    noise.add_argument("--noise-eps", type=float, default=None, help="per-qubit depolarizing rate")
    noise.add_argument("--noise-f", type=float, default=None, help="white-noise global fidelity F")
    noise.add_argument("--noise-c", type=float, default=None, help="white-noise F = exp(-c n d)")

    p = argparse.ArgumentParser(prog="nisqcrypt", description="Random-circuit quantum cryptography simulator.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND} kernels)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("keygen", parents=[common], help="sample a one-time signature key")
    s.add_argument("--n", type=int, default=4)
    s.add_argument("--d", type=int, default=None, help="depth (default: ceil(log2(n)^2))")
    s.add_argument("--t", type=int, default=16)
    s.add_argument("--catalog", default="crypto")
    s.add_argument("--bits", type=int, default=1, help="message length the key can sign")
    s.add_argument("--out", default="key", help="writes OUT.sk.json and OUT.pk.json")
    s.set_defaults(func=cmd_keygen)

    s = sub.add_parser("sign", help="sign a bitstring, marking the key slices used")
    s.add_argument("--sk", required=True)
    s.add_argument("--message", type=_bits, required=True)
    s.add_argument("--out", default="sig.json")
    s.set_defaults(func=cmd_sign)

    s = sub.add_parser("verify", parents=[common, out, noise], help="verify a signature against a fresh public key")
    s.add_argument("--pk", required=True)
    s.add_argument("--sig", required=True)
    s.add_argument("--message", type=_bits, default=None, help="default: the message in the signature file")
    s.add_argument("--k", type=int, default=None, help="threshold (default: from the noise model)")
    s.add_argument("--mode", choices=("exact", "sampled"), default="exact")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("owsg-game", parents=[common, out], help="inversion game on an enumerable ensemble")
    s.add_argument("--n", type=int, default=3)
    s.add_argument("--d", type=int, default=None)
    s.add_argument("--catalog", default="enum4")
    s.add_argument("--adversary", choices=("brute-force", "shadow", "random"), default="brute-force")
    s.add_argument("--copies", type=int, default=1)
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--eps", type=float, default=0.2)
    s.add_argument("--delta", type=float, default=0.1)
    s.set_defaults(func=cmd_owsg_game)

    s = sub.add_parser("commitment", parents=[common, out], help="correctness, hiding and binding checks")
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--d", type=int, default=None)
    s.add_argument("--k", type=int, default=1)
    s.add_argument("--catalog", default="enum16")
    s.set_defaults(func=cmd_commitment)

    s = sub.add_parser("attack-bench", parents=[common, out], help="cloning and learning baselines")
    s.add_argument("--attack", choices=("werner", "oracle", "shadow"), default="werner")
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--d", type=int, default=None)
    s.add_argument("--k", type=int, default=1)
    s.add_argument("--N", type=int, default=64, help="oracle world size")
    s.add_argument("--max-queries", type=int, default=8)
    s.add_argument("--catalog", default="enum4")
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--copies", type=int, default=None)
    s.add_argument("--eps", type=float, default=0.2)
    s.add_argument("--delta", type=float, default=0.1)
    s.set_defaults(func=cmd_attack_bench)

    s = sub.add_parser("calc", help="closed-form parameter estimates")
    calc = s.add_subparsers(dest="what", required=True)
    c = calc.add_parser("landau-liu", parents=[out])
    c.add_argument("--n", type=float, default=10)
    c.add_argument("--d", type=float, default=10)
    c.add_argument("--k-dim", type=float, default=2)
    c.add_argument("--eps", type=float, default=0.99)
    c.add_argument("--delta", type=float, default=0.01)
    c = calc.add_parser("pubkey-curve", parents=[out])
    c.add_argument("--n", type=int, default=20)
    c.add_argument("--k", type=int, default=11)
    c.add_argument("--c", type=float, default=None, help="default: calibrated from F=1e-3 at n=67, d=32")
    c.add_argument("--d-min", type=int, default=0)
    c.add_argument("--d-max", type=int, default=40)
    c.add_argument("--t-max", type=int, default=10 ** 7)
    c = calc.add_parser("hoeffding", parents=[out])
    c.add_argument("--eta", type=float, default=0.28)
    c.add_argument("--t", type=int, default=200)
    c.add_argument("--k", type=int, default=11)
    c = calc.add_parser("calibrate", parents=[out])
    c.add_argument("--n", type=float, default=67)
    c.add_argument("--d", type=float, default=32)
    c.add_argument("--F", type=float, default=1e-3)
    c = calc.add_parser("schedule", parents=[out])
    c.add_argument("--p", type=float, default=1.0)
    c.add_argument("--n", type=int, default=4)
    calc.add_parser("proposal", parents=[out])
    for name in ("landau-liu", "pubkey-curve", "hoeffding", "calibrate", "schedule", "proposal"):
        calc.choices[name].set_defaults(func=cmd_calc)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except KeyReuseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REUSE
    except (KeyFileError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, SimulationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
