"""Command-line entry point.

Subcommands: ``synth`` (write a synthetic pair), ``ppmi`` (cache proximity
triplets), ``train`` (checkpoint + JSONL loss log), ``eval`` (metrics.json,
optional prediction dump), ``export-embeddings`` (TSV per network) and
``stats`` (homophily plus connected-pair statistics over a K sweep).

Every run writes a ``config.json`` echoing the effective settings.  Exit code
1 signals a validation problem, 2 a numeric abort.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from .graphs import DatasetError, homophily_ratio, load_network, save_network, validate_pair
from .metrics import decide_labels, f1_scores
from .nn import NumericError
from .proximity import high_order_proximity, proximity_pair_stats, save_ppmi
from .synthetic import SynthConfig, generate_synthetic_pair
from .train import (
    PreparedNetwork,
    TrainConfig,
    embed_network,
    fit,
    load_model,
    predict_network,
    save_model,
)


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")


def _write_config(out_dir: Path, command: str, effective: dict) -> None:
    _write_json(out_dir / "config.json", {"command": command, **effective})


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok]


def _train_config(args: argparse.Namespace) -> TrainConfig:
    return TrainConfig(
        K=args.K,
        emb_dim=args.emb_dim,
        hidden=tuple(_int_list(args.hidden)),
        disc_hidden=tuple(_int_list(args.disc_hidden)),
        beta=args.beta,
        batch_size=args.batch_size,
        mu0=args.mu0,
        momentum=args.momentum,
        epochs=args.epochs,
        seed=args.seed,
        normalize_attrs=args.normalize_attrs,
        no_fe1=args.no_fe1,
        no_fe2=args.no_fe2,
        no_feat_prop=args.no_feat_prop,
        no_label_prop=args.no_label_prop,
        no_discriminator=args.no_discriminator,
    )


def _cmd_synth(args: argparse.Namespace) -> int:
    cfg = SynthConfig(
        nodes=args.nodes,
        classes=args.classes,
        attrs=args.attrs,
        p_intra=args.p_intra,
        p_inter=args.p_inter,
        shift=args.shift,
        seed=args.seed,
    )
    pair = generate_synthetic_pair(cfg)
    out = Path(args.out)
    save_network(pair.source, out / "source")
    save_network(pair.target, out / "target")
    _write_config(out, "synth", asdict(cfg))
    print(f"wrote synthetic pair to {out}")
    return 0


def _cmd_ppmi(args: argparse.Namespace) -> int:
    net = load_network(args.net)
    prox = high_order_proximity(net, args.K)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_ppmi(prox, out / "ppmi.tsv")
    _write_config(out, "ppmi", {"net": str(args.net), "K": args.K})
    print(f"wrote {prox.matrix.nnz} proximity entries to {out / 'ppmi.tsv'}")
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    pair = validate_pair(load_network(args.source), load_network(args.target))
    cfg = _train_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = fit(pair, cfg, log_path=out / "train_log.jsonl")
    save_model(out / "checkpoint.json", result)
    echo = {"source": str(args.source), "target": str(args.target), **result.config}
    _write_config(out, "train", echo)
    last = result.trace[-1]
    print(
        f"trained {len(result.trace)} iterations; final losses "
        f"y={last['loss_y']:.4f} f={last['loss_f']:.4f} d={last['loss_d']:.4f}"
    )
    return 0


def _load_for_inference(checkpoint: str, net_path: str):
    model, cfg, echo = load_model(checkpoint)
    net = load_network(net_path)
    if net.num_attrs != echo["num_attrs"] or net.num_labels != echo["num_labels"]:
        raise DatasetError(
            "network dimensions do not match the checkpoint "
            f"(attrs {net.num_attrs} vs {echo['num_attrs']}, "
            f"labels {net.num_labels} vs {echo['num_labels']})"
        )
    prepared = PreparedNetwork.build(net, cfg.K, cfg.normalize_attrs)
    return model, cfg, echo, net, prepared


def _cmd_eval(args: argparse.Namespace) -> int:
    model, cfg, echo, net, prepared = _load_for_inference(args.checkpoint, args.target)
    if net.labels is None:
        raise DatasetError("target network has no labels to evaluate against")
    phi = "sigmoid" if echo["multi_label"] else "softmax"
    mode = "multilabel" if echo["multi_label"] else "multiclass"
    probs = predict_network(model, prepared, cfg, phi)
    decided = decide_labels(probs, mode)
    metrics = f1_scores(decided, net.labels)
    out = Path(args.out)
    payload = {
        **metrics.to_dict(),
        "config": {**echo, "target": str(args.target)},
        "seed": echo["seed"],
    }
    _write_json(out / "metrics.json", payload)
    _write_config(out, "eval", {"checkpoint": str(args.checkpoint), **echo})
    if args.dump_predictions:
        header = json.dumps({**echo, "target": str(args.target)}, sort_keys=True)
        with (out / "predictions.tsv").open("w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# config: {header}\n")
            for i, row in enumerate(probs):
                cells = "\t".join(format(v, ".17g") for v in row)
                fh.write(f"{i}\t{cells}\n")
    print(f"micro_f1={metrics.micro_f1:.4f} macro_f1={metrics.macro_f1:.4f}")
    return 0


def _cmd_export_embeddings(args: argparse.Namespace) -> int:
    if not args.source and not args.target:
        raise ValueError("give at least one of --source / --target")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model, cfg, echo = load_model(args.checkpoint)
    for role, net_path in (("source", args.source), ("target", args.target)):
        if not net_path:
            continue
        net = load_network(net_path)
        prepared = PreparedNetwork.build(net, cfg.K, cfg.normalize_attrs)
        emb = embed_network(model, prepared, cfg)
        header = json.dumps({**echo, role: str(net_path)}, sort_keys=True)
        with (out / f"{role}_embeddings.tsv").open(
            "w", encoding="utf-8", newline="\n"
        ) as fh:
            fh.write(f"# config: {header}\n")
            for i, row in enumerate(emb):
                cells = "\t".join(format(v, ".17g") for v in row)
                fh.write(f"{i}\t{cells}\n")
    _write_config(out, "export-embeddings", {"checkpoint": str(args.checkpoint), **echo})
    print(f"wrote embeddings to {out}")
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    net = load_network(args.net)
    if net.labels is None:
        raise DatasetError("stats require a labeled network")
    per_k = {}
    for k in _int_list(args.K):
        prox = high_order_proximity(net, k)
        per_k[str(k)] = proximity_pair_stats(prox, net.labels)
    payload = {
        "net": str(args.net),
        "num_nodes": net.num_nodes,
        "num_edges": net.num_edges,
        "homophily_ratio": homophily_ratio(net),
        "per_k": per_k,
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    print(text)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text + "\n", encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crossnode",
        description="Cross-network node classification experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic source/target pair")
    p.add_argument("--out", required=True)
    p.add_argument("--nodes", type=int, default=300)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--attrs", type=int, default=60)
    p.add_argument("--p-intra", type=float, default=0.05)
    p.add_argument("--p-inter", type=float, default=0.005)
    p.add_argument("--shift", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ppmi", help="precompute and cache proximity triplets")
    p.add_argument("--net", required=True)
    p.add_argument("--K", type=int, default=3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ppmi)

    p = sub.add_parser("train", help="train on a source/target pair")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--K", type=int, default=3)
    p.add_argument("--emb-dim", type=int, default=128)
    p.add_argument("--hidden", default="512,128")
    p.add_argument("--disc-hidden", default="128,128")
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--batch-size", type=int, default=100)
    p.add_argument("--mu0", type=float, default=0.01)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--normalize-attrs", action="store_true")
    p.add_argument("--no-fe1", action="store_true")
    p.add_argument("--no-fe2", action="store_true")
    p.add_argument("--no-feat-prop", action="store_true")
    p.add_argument("--no-label-prop", action="store_true")
    p.add_argument("--no-discriminator", action="store_true")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="score a checkpoint on a labeled target")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dump-predictions", action="store_true")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("export-embeddings", help="write per-network embedding TSVs")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--source")
    p.add_argument("--target")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export_embeddings)

    p = sub.add_parser("stats", help="homophily and connected-pair stats for a K sweep")
    p.add_argument("--net", required=True)
    p.add_argument("--K", default="1,2,3")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_stats)

    return parser


def run(argv: list[str]) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DatasetError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
