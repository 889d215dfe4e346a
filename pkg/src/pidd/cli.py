"""Command line front end: synth, recon, train, eval, export."""

import argparse
import hashlib
import json
import math
import os
import shutil
import sys

import numpy as np

from .errors import DataError, NumericalError, UsageError
from .export import export_magnitude, export_modulation_mosaic, export_phase
from .lowrank import pf_postprocess
from .metrics import aggregate, gsr, psnr
from .modulations import (kernels_from_modulations, modulation_mosaic,
                          phase_modulations)
from .network import NetworkConfig, unrolled_forward
from .parrio import read_parr, write_parr
from .phantom import PhantomSpec
from .pocs import ReconConfig, density_compensated, pocs_reconstruct
from .synth import (DEFAULT_DIRECTIONS, SynthesisSpec, generate_dataset,
                    list_sample_dirs, load_manifest, load_sample, load_support)
from .training import (TrainConfig, TrainingSet, combined_target,
                       load_weights, save_weights, train_network)
from .transforms import ifft2c

SCHEMA_VERSION = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _seed_default(value):
    if value is not None:
        return value
    env = os.environ.get("PIDD_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError("PIDD_SEED must be an integer, got %r" % env)


def _parse_size(text):
    parts = text.lower().split("x")
    try:
        if len(parts) == 1:
            ny = nx = int(parts[0])
        elif len(parts) == 2:
            ny, nx = int(parts[0]), int(parts[1])
        else:
            raise ValueError
    except ValueError:
        raise UsageError("--size must be N or NYxNX, got %r" % text)
    return ny, nx


def _parse_snr(text):
    if text.lower() in ("inf", "none", "off"):
        return None
    parts = text.split(":")
    try:
        if len(parts) == 1:
            lo = hi = float(parts[0])
        elif len(parts) == 2:
            lo, hi = float(parts[0]), float(parts[1])
        else:
            raise ValueError
    except ValueError:
        raise UsageError("--snr must be DB, LO:HI or inf, got %r" % text)
    if math.isinf(lo) or math.isinf(hi):
        return None
    return (lo, hi)


def _parse_dirs(text):
    if text == "axes":
        return DEFAULT_DIRECTIONS
    out = []
    for chunk in text.split(";"):
        parts = chunk.split(",")
        if len(parts) != 3:
            raise UsageError("--dirs needs gx,gy,gz triples, got %r" % chunk)
        try:
            out.append(tuple(float(p) for p in parts))
        except ValueError:
            raise UsageError("--dirs needs numeric triples, got %r" % chunk)
    return tuple(out)


def _parse_floats(text, flag):
    try:
        return tuple(float(p) for p in text.split(","))
    except ValueError:
        raise UsageError("%s needs comma-separated numbers, got %r" % (flag, text))


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


_OWN_MARKERS = ("config.json", ".incomplete", "manifest.json")


def _start_output(outdir, force, command, options, input_hashes=None):
    """Claim an output directory: refuse reuse without --force, leave an
    in-progress marker and a provenance record."""
    if os.path.isdir(outdir) and os.listdir(outdir):
        if not force:
            raise DataError(
                "%s already has content; pass --force to overwrite" % outdir)
        if not any(os.path.exists(os.path.join(outdir, m))
                   for m in _OWN_MARKERS):
            raise DataError(
                "%s was not written by this tool; remove it yourself" % outdir)
        shutil.rmtree(outdir)
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, ".incomplete"), "w") as fh:
        fh.write("")
    config = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "options": options,
        "input_hashes": input_hashes or {},
    }
    _write_json(os.path.join(outdir, "config.json"), config)


def _finish_output(outdir):
    os.remove(os.path.join(outdir, ".incomplete"))


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_synth(args):
    ny, nx = _parse_size(args.size)
    spec = SynthesisSpec(
        ny=ny, nx=nx, shots=args.shots, coils=args.coils,
        phase_order=args.order,
        b_values=_parse_floats(args.b, "--b"),
        directions=_parse_dirs(args.dirs),
        snr_db=_parse_snr(args.snr),
        pf_rate=args.pf,
        phantom=PhantomSpec(),
    )
    seed = _seed_default(args.seed)
    options = {
        "out": args.out, "count": args.count, "size": args.size,
        "shots": args.shots, "coils": args.coils, "order": args.order,
        "b": args.b, "dirs": args.dirs, "snr": args.snr, "pf": args.pf,
        "seed": seed, "jobs": args.jobs,
    }
    _start_output(args.out, args.force, "synth", options)
    generate_dataset(spec, args.count, seed, args.out, jobs=args.jobs)
    _finish_output(args.out)
    print("wrote %d samples to %s" % (args.count, args.out))
    return 0


def _load_dataset_for_recon(root):
    manifest = load_manifest(root)
    dirs = list_sample_dirs(root)
    if len(dirs) != manifest.get("count"):
        raise DataError("%s: manifest promises %s samples, found %d"
                        % (root, manifest.get("count"), len(dirs)))
    return manifest, dirs


def _recon_one(method, sample, args, weights, recon_cfg):
    nshots = sample.label.shape[0]
    if method == "zf":
        return density_compensated(sample.input_k, sample.coils, sample.mask), {
            "method": method, "iterations": 0, "final_residual": None,
            "flags": [],
        }
    if method == "pocs-oracle":
        mods = phase_modulations(sample.phases)
        kernels = kernels_from_modulations(mods)
        result = pocs_reconstruct(sample.input_k, sample.coils, sample.mask,
                                  kernels, recon_cfg)
        return result.kspace, {
            "method": method, "iterations": result.iterations,
            "final_residual": result.residuals[-1] if result.residuals else None,
            "flags": result.flags,
        }
    if method == "pidd":
        if weights.nshots != nshots:
            raise DataError("weights trained for %d shots, data has %d"
                            % (weights.nshots, nshots))
        outputs = unrolled_forward(sample.input_k, sample.coils, sample.mask,
                                   weights)
        kspace = outputs[-1]
        flags = []
        if sample.mask.pf_rate < 1.0 and recon_cfg.pf_repeats > 0:
            kspace = pf_postprocess(kspace, sample.input_k, sample.coils,
                                    sample.mask, recon_cfg)
            flags.append("pf_postprocess")
        return kspace, {
            "method": method, "iterations": weights.config.blocks,
            "final_residual": None, "flags": flags,
        }
    if method == "lowrank":
        start = density_compensated(sample.input_k, sample.coils, sample.mask)
        kspace = pf_postprocess(start, sample.input_k, sample.coils,
                                sample.mask, recon_cfg)
        return kspace, {
            "method": method, "iterations": recon_cfg.pf_repeats,
            "final_residual": None, "flags": [],
        }
    raise UsageError("unknown method %r" % method)


def cmd_recon(args):
    manifest, dirs = _load_dataset_for_recon(args.data)
    hashes = {"dataset_manifest": _sha256(os.path.join(args.data,
                                                       "manifest.json"))}
    weights = None
    if args.method == "pidd":
        if not args.weights:
            raise UsageError("--method pidd needs --weights")
        weights = load_weights(args.weights)
        hashes["weights_manifest"] = _sha256(
            os.path.join(args.weights, "manifest.json"))
    recon_cfg = ReconConfig(
        lam=args.lam, iters=args.iters, window=args.window,
        svt_rank=args.rank, pf_repeats=args.pf_repeats,
    )
    options = {
        "data": args.data, "out": args.out, "method": args.method,
        "weights": args.weights, "iters": args.iters, "lam": args.lam,
        "window": args.window, "rank": args.rank,
        "pf_repeats": args.pf_repeats,
    }
    _start_output(args.out, args.force, "recon", options, hashes)
    for dirpath in dirs:
        sample = load_sample(dirpath)
        kspace, report = _recon_one(args.method, sample, args, weights,
                                    recon_cfg)
        if not np.all(np.isfinite(kspace)):
            raise NumericalError("%s: reconstruction went non-finite"
                                 % dirpath)
        outdir = os.path.join(args.out, "samples", os.path.basename(dirpath))
        os.makedirs(outdir, exist_ok=True)
        write_parr(os.path.join(outdir, "recon.parr"), kspace)
        _write_json(os.path.join(outdir, "recon_report.json"), report)
    _write_json(os.path.join(args.out, "manifest.json"), {
        "schema_version": SCHEMA_VERSION, "kind": "recon",
        "method": args.method, "count": len(dirs),
    })
    _finish_output(args.out)
    print("reconstructed %d samples with %s" % (len(dirs), args.method))
    return 0


def cmd_train(args):
    manifest = load_manifest(args.data)
    hashes = {"dataset_manifest": _sha256(os.path.join(args.data,
                                                       "manifest.json"))}
    seed = _seed_default(args.seed)
    net_cfg = NetworkConfig(
        blocks=args.blocks, layers=args.layers, features=args.features,
        ksize=args.ksize, share_weights=args.share,
        normalize=not args.no_normalize, lam=args.lam, seed=seed,
    )
    train_cfg = TrainConfig(
        epochs=args.epochs, lr=args.lr, decay=args.decay, batch=args.batch,
        seed=seed, loss_floor=args.loss_floor,
    )
    options = {
        "data": args.data, "out": args.out, "epochs": args.epochs,
        "lr": args.lr, "decay": args.decay, "batch": args.batch,
        "blocks": args.blocks, "layers": args.layers,
        "features": args.features, "ksize": args.ksize, "share": args.share,
        "normalize": not args.no_normalize, "seed": seed,
        "loss_floor": args.loss_floor,
    }
    _start_output(args.out, args.force, "train", options, hashes)
    dataset = TrainingSet.from_directory(args.data)
    log_path = os.path.join(args.out, "train_log.jsonl")

    def log(record):
        with open(log_path, "a") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    extra = {"train": train_cfg.to_json(),
             "dataset_hash": hashes["dataset_manifest"]}
    try:
        weights, history = train_network(dataset, net_cfg, train_cfg, log=log)
    except NumericalError as exc:
        if getattr(exc, "checkpoint", None) is not None:
            extra["aborted"] = "non-finite loss"
            save_weights(args.out, exc.checkpoint, extra)
        raise
    extra["final_epoch"] = history[-1]["epoch"]
    extra["final_loss"] = history[-1]["loss"]
    save_weights(args.out, weights, extra)
    _finish_output(args.out)
    print("trained %d epochs, final loss %.6g"
          % (len(history), history[-1]["loss"]))
    return 0


def cmd_eval(args):
    support = load_support(args.data)
    dirs = list_sample_dirs(args.data)
    recon_dirs = list_sample_dirs(args.recon)
    if len(dirs) != len(recon_dirs):
        raise DataError("dataset has %d samples, recon %d"
                        % (len(dirs), len(recon_dirs)))
    hashes = {"dataset_manifest": _sha256(os.path.join(args.data,
                                                       "manifest.json"))}
    recon_manifest = os.path.join(args.recon, "manifest.json")
    if os.path.exists(recon_manifest):
        hashes["recon_manifest"] = _sha256(recon_manifest)
    options = {"data": args.data, "recon": args.recon, "out": args.out}
    _start_output(args.out, args.force, "eval", options, hashes)
    per_sample = []
    for sample_dir, recon_dir in zip(dirs, recon_dirs):
        if os.path.basename(sample_dir) != os.path.basename(recon_dir):
            raise DataError("sample %s has no matching reconstruction"
                            % os.path.basename(sample_dir))
        sample = load_sample(sample_dir)
        recon = read_parr(os.path.join(recon_dir, "recon.parr"))
        recon = recon.astype(np.complex128)
        if recon.shape != sample.phases.shape:
            raise DataError("%s: recon shape %r does not match data"
                            % (recon_dir, recon.shape))
        image = np.mean(np.abs(ifft2c(recon)), axis=0)
        target = combined_target(sample.label, sample.coils)
        reference = np.mean(np.abs(ifft2c(target)), axis=0)
        per_sample.append({
            "sample": os.path.basename(sample_dir),
            "gsr": gsr(image, support),
            "psnr": psnr(image, reference),
        })
    report = {
        "schema_version": SCHEMA_VERSION,
        "kind": "eval",
        "count": len(per_sample),
        "gsr": aggregate([s["gsr"] for s in per_sample]),
        "psnr": aggregate([s["psnr"] for s in per_sample]),
        "per_sample": per_sample,
    }
    _write_json(os.path.join(args.out, "report.json"), report)
    _finish_output(args.out)
    print("eval over %d samples: mean gsr %.4g, mean psnr %.4g dB"
          % (report["count"], report["gsr"]["mean"], report["psnr"]["mean"]))
    return 0


def cmd_export(args):
    if not os.path.exists(args.infile):
        raise DataError("%s: no such file" % args.infile)
    arr = read_parr(args.infile)
    os.makedirs(args.out, exist_ok=True)
    stem = os.path.splitext(os.path.basename(args.infile))[0]
    written = []
    if args.mosaic == "modulations":
        if arr.ndim != 3:
            raise DataError("modulation mosaic needs [shots, ny, nx] phases")
        if np.iscomplexobj(arr):
            raise DataError("modulation mosaic needs real phase maps")
        mods = phase_modulations(arr.astype(np.float64))
        base = os.path.join(args.out, stem + "_modulations")
        export_modulation_mosaic(modulation_mosaic(mods), base)
        written += [base + "_phase.pgm", base + "_mag.pgm"]
    else:
        kinds = ("magnitude", "phase") if args.kind == "both" else (args.kind,)
        for kind in kinds:
            path = os.path.join(args.out, "%s_%s.pgm" % (stem, kind))
            if os.path.exists(path) and not args.force:
                raise DataError("%s exists; pass --force to overwrite" % path)
            if kind == "magnitude":
                export_magnitude(arr, path)
            else:
                export_phase(arr, path)
            written.append(path)
    print("wrote %s" % ", ".join(written))
    return 0


def build_parser():
    parser = _Parser(prog="pidd",
                     description="Multi-shot diffusion MRI sandbox: synthesize"
                                 " paired data, reconstruct, train, score.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a paired dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--size", default="64")
    p.add_argument("--shots", type=int, default=4)
    p.add_argument("--coils", type=int, default=8)
    p.add_argument("--order", type=int, default=5)
    p.add_argument("--b", default="1000,2000,3000,4000")
    p.add_argument("--dirs", default="axes")
    p.add_argument("--snr", default="10:50")
    p.add_argument("--pf", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("recon", help="reconstruct every sample of a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--method", required=True,
                   choices=("zf", "pocs-oracle", "pidd", "lowrank"))
    p.add_argument("--weights")
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--rank", type=int, default=None)
    p.add_argument("--pf-repeats", type=int, default=10)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_recon)

    p = sub.add_parser("train", help="train the unrolled network")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--decay", type=float, default=0.99)
    p.add_argument("--batch", type=int, default=1)
    p.add_argument("--blocks", type=int, default=10)
    p.add_argument("--layers", type=int, default=6)
    p.add_argument("--features", type=int, default=48)
    p.add_argument("--ksize", type=int, default=3)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--share", action="store_true")
    p.add_argument("--no-normalize", action="store_true")
    p.add_argument("--loss-floor", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score reconstructions against labels")
    p.add_argument("--data", required=True)
    p.add_argument("--recon", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("export", help="render PARR tensors to 16-bit PGM")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kind", default="magnitude",
                   choices=("magnitude", "phase", "both"))
    p.add_argument("--mosaic", choices=("modulations",))
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print("usage error: %s" % exc, file=sys.stderr)
        return 1
    except DataError as exc:
        print("data error: %s" % exc, file=sys.stderr)
        return 2
    except NumericalError as exc:
        print("numerical error: %s" % exc, file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
