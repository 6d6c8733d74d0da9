"""Command line interface.

Subcommands:
  attack    run greedy/genetic/pgd/random against one or more prompts
  brute     exhaustive oracle over the suffix space (small charsets only)
  baseline  single random-suffix draw per prompt
  keydims   extract steerable dimensions from sentence pairs
  eval      score prompts against stored image embeddings and report

Flags override values from an optional --config JSON file, which overrides
built-in defaults. Every run writes a manifest next to its outputs so it can
be reproduced exactly. Exit codes: 0 success, 1 domain failure, 2 usage.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .corpus import load_prompts
from .encoders import (
    CachedBackend,
    EmbeddingCache,
    EncoderBackend,
    RemoteEncoder,
    SyntheticEncoder,
    SyntheticEncoderConfig,
)
from .errors import QFAttackError
from .evaluation import (
    ScoreRecord,
    aggregate_records,
    clip_score,
    load_image_embeddings,
    prompt_id_for,
    targeted_eval_text,
    write_records_jsonl,
    write_report_csv,
    write_report_json,
)
from .manifest import build_manifest
from .objectives import (
    DEFAULT_VOTE_EPSILON,
    CosineObjective,
    difference_vectors,
    extract_key_dims,
    load_mask_file,
    load_sentence_pairs,
    write_mask_file,
)
from .optimizers import (
    DEFAULT_BRUTE_CAP,
    DEFAULT_GENERATIONS,
    DEFAULT_MUTATION_RATE,
    DEFAULT_PGD_STEP_SIZE,
    DEFAULT_PGD_STEPS,
    DEFAULT_POPULATION,
    AttackConfig,
    GeneticConfig,
    PGDConfig,
    run_attack,
)
from .perturbation import DEFAULT_PERTURBATION_LENGTH, Charset, Prompt
from .plots import render_report_figure, render_trajectory_figure

DEFAULTS = {
    "backend": "synthetic",
    "seed": 0,
    "charset": "default",
    "len": DEFAULT_PERTURBATION_LENGTH,
    "dim": 64,
    "decay": 0.95,
    "backend_seed": 0,
    "cache": None,
    "cache_dir": None,
    "jobs": 1,
    "method": None,
    "generations": DEFAULT_GENERATIONS,
    "population": DEFAULT_POPULATION,
    "mutation_rate": DEFAULT_MUTATION_RATE,
    "step_size": DEFAULT_PGD_STEP_SIZE,
    "steps": DEFAULT_PGD_STEPS,
    "greedy_mode": "sequential",
    "cap": DEFAULT_BRUTE_CAP,
    "epsilon": DEFAULT_VOTE_EPSILON,
    "setting": "untargeted",
}


def _resolve(ns: argparse.Namespace, parser: argparse.ArgumentParser) -> dict:
    """Defaults < config file < explicit flags."""
    file_cfg = {}
    if getattr(ns, "config", None):
        with open(ns.config, encoding="utf-8") as fh:
            file_cfg = json.load(fh)
        unknown = set(file_cfg) - set(DEFAULTS)
        if unknown:
            parser.error(f"unknown config keys: {', '.join(sorted(unknown))}")
    resolved = {}
    for key, default in DEFAULTS.items():
        flag = getattr(ns, key, None)
        resolved[key] = flag if flag is not None else file_cfg.get(key, default)
    return resolved


def _build_backend(resolved: dict, parser: argparse.ArgumentParser) -> EncoderBackend:
    spec = resolved["backend"]
    if spec == "synthetic":
        backend: EncoderBackend = SyntheticEncoder(
            SyntheticEncoderConfig(
                seed=resolved["backend_seed"], dim=resolved["dim"], decay=resolved["decay"]
            )
        )
        cache_default = False
    elif spec.startswith("remote:"):
        backend = RemoteEncoder(spec[len("remote:") :])
        cache_default = True
    elif spec.startswith(("http://", "https://")):
        backend = RemoteEncoder(spec)
        cache_default = True
    else:
        parser.error(f"--backend must be 'synthetic', 'remote:URL', or an http(s) URL, got {spec!r}")
    use_cache = resolved["cache"] if resolved["cache"] is not None else cache_default
    if use_cache:
        backend = CachedBackend(backend, EmbeddingCache.from_env(flag_dir=resolved["cache_dir"]))
    return backend


def _outdir(ns: argparse.Namespace) -> Path:
    out = Path(ns.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _input_paths(*candidates) -> list[Path]:
    return [Path(c) for c in candidates if c]


def _gather_prompts(ns: argparse.Namespace, parser: argparse.ArgumentParser) -> list[Prompt]:
    if getattr(ns, "prompt", None):
        return [Prompt(p) for p in ns.prompt]
    if getattr(ns, "prompts", None):
        return load_prompts(ns.prompts)
    parser.error("provide --prompt TEXT (repeatable) or --prompts FILE")


def _attack_config(resolved: dict, method: str, mask) -> AttackConfig:
    return AttackConfig(
        method=method,
        L=resolved["len"],
        charset=Charset.from_spec(resolved["charset"]),
        seed=resolved["seed"],
        genetic=GeneticConfig(
            generations=resolved["generations"],
            population=resolved["population"],
            mutation_rate=resolved["mutation_rate"],
        ),
        pgd=PGDConfig(step_size=resolved["step_size"], steps=resolved["steps"]),
        targeted=mask,
        greedy_mode=resolved["greedy_mode"],
        brute_cap=resolved["cap"],
    )


def _run_attack_command(
    ns: argparse.Namespace, parser: argparse.ArgumentParser, forced_method: str | None
) -> int:
    resolved = _resolve(ns, parser)
    method = forced_method or resolved["method"]
    if method is None:
        parser.error("--method is required (or set it in --config)")
    prompts = _gather_prompts(ns, parser)
    mask = load_mask_file(ns.mask) if getattr(ns, "mask", None) else None
    cfg = _attack_config(resolved, method, mask)
    backend = _build_backend(resolved, parser)
    outdir = _outdir(ns)

    results = []
    for base in prompts:
        objective = CosineObjective(backend, base, mask=mask)
        result = run_attack(base, objective, cfg, backend=backend, jobs=resolved["jobs"])
        results.append(result)
        print(
            f"{base.text!r} -> {result.perturbation!r} "
            f"loss={result.final_loss:.6f} evals={result.evaluations}"
        )

    with open(outdir / "results.jsonl", "w", encoding="utf-8") as fh:
        for result in results:
            fh.write(json.dumps(result.to_dict()) + "\n")
    render_trajectory_figure(
        {f"{i}: {res.base_prompt[:24]}": res.trajectory for i, res in enumerate(results)},
        outdir / "trajectory.png",
    )
    manifest = build_manifest(
        argv=sys.argv,
        config={"command": ns.command, **resolved, "method": method},
        backend_id=backend.id,
        input_paths=_input_paths(
            getattr(ns, "prompts", None), getattr(ns, "mask", None), getattr(ns, "config", None)
        ),
        version=__version__,
    )
    manifest.write(outdir / "manifest.json")
    return 0


def cmd_attack(ns, parser) -> int:
    return _run_attack_command(ns, parser, forced_method=None)


def cmd_brute(ns, parser) -> int:
    return _run_attack_command(ns, parser, forced_method="brute")


def cmd_baseline(ns, parser) -> int:
    return _run_attack_command(ns, parser, forced_method="random")


def cmd_keydims(ns, parser) -> int:
    resolved = _resolve(ns, parser)
    backend = _build_backend(resolved, parser)
    outdir = _outdir(ns)
    pairs = load_sentence_pairs(ns.pairs)
    diffs = difference_vectors(pairs, backend)
    mask = extract_key_dims(diffs, resolved["epsilon"], strict=not ns.loose_vote)
    write_mask_file(outdir / "mask.json", mask, epsilon=resolved["epsilon"], n=len(pairs))
    print(f"selected {mask.selected}/{mask.dim} dimensions from {len(pairs)} pairs")
    manifest = build_manifest(
        argv=sys.argv,
        config={"command": ns.command, **resolved, "loose_vote": ns.loose_vote},
        backend_id=backend.id,
        input_paths=_input_paths(ns.pairs, getattr(ns, "config", None)),
        version=__version__,
    )
    manifest.write(outdir / "manifest.json")
    return 0


def _load_attack_results(path: str | Path) -> list[dict]:
    """Accept a single-result JSON file, a JSON list, or JSONL."""
    text = Path(path).read_text(encoding="utf-8").strip()
    if not text:
        return []
    try:
        obj = json.loads(text)
    except json.JSONDecodeError:
        return [json.loads(line) for line in text.splitlines() if line.strip()]
    if isinstance(obj, list):
        return obj
    return [obj]


def _matches(image, condition: str, prompt_id: str) -> bool:
    if image.condition is not None and image.condition != condition:
        return False
    if image.prompt_id is not None and image.prompt_id != prompt_id:
        return False
    return True


def cmd_eval(ns, parser) -> int:
    resolved = _resolve(ns, parser)
    backend = _build_backend(resolved, parser)
    outdir = _outdir(ns)
    images = load_image_embeddings(ns.images)
    setting = resolved["setting"]
    records: list[ScoreRecord] = []

    if setting == "targeted":
        if not ns.target:
            parser.error("--target PHRASE is required with --setting targeted")
        eval_text = targeted_eval_text(ns.target)
        pid = prompt_id_for(eval_text)
        text_emb = backend.embed_text(eval_text)
        for img in images:
            condition = img.condition or "no_attack"
            records.append(
                ScoreRecord(
                    prompt_id=pid,
                    image_id=img.image_id,
                    score=clip_score(text_emb, img.embedding),
                    condition=condition,
                    setting="targeted",
                )
            )
    else:
        if not ns.results:
            parser.error("--results FILE is required with --setting untargeted")
        rows = [row for path in ns.results for row in _load_attack_results(path)]
        if not rows:
            parser.error("no attack results found in --results files")
        seen_bases: set[str] = set()
        for row in rows:
            base_text = row["base_prompt"]
            condition = row["config"]["method"]
            pid = prompt_id_for(base_text)
            if base_text not in seen_bases:
                seen_bases.add(base_text)
                base_emb = backend.embed_text(base_text)
                for img in images:
                    if not _matches(img, "no_attack", pid):
                        continue
                    records.append(
                        ScoreRecord(
                            prompt_id=pid,
                            image_id=img.image_id,
                            score=clip_score(base_emb, img.embedding),
                            condition="no_attack",
                            setting="untargeted",
                        )
                    )
            pert_emb = backend.embed_text(row["perturbed_prompt"])
            for img in images:
                if not _matches(img, condition, pid):
                    continue
                records.append(
                    ScoreRecord(
                        prompt_id=pid,
                        image_id=img.image_id,
                        score=clip_score(pert_emb, img.embedding),
                        condition=condition,
                        setting="untargeted",
                    )
                )

    cells = aggregate_records(records)
    write_records_jsonl(outdir / "scores.jsonl", records)
    write_report_json(outdir / "report.json", cells)
    write_report_csv(outdir / "report.csv", cells)
    render_report_figure(cells, outdir / "report.png")
    for (cell_setting, condition), agg in cells.items():
        print(f"{cell_setting:>10s} {condition:>9s}: {agg.mean:.4f} +/- {agg.std:.4f} (n={agg.count})")
    manifest = build_manifest(
        argv=sys.argv,
        config={"command": ns.command, **resolved, "target": ns.target},
        backend_id=backend.id,
        input_paths=_input_paths(ns.images, *(ns.results or []), getattr(ns, "config", None)),
        version=__version__,
    )
    manifest.write(outdir / "manifest.json")
    return 0


def _add_shared_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--backend", help="synthetic (default) or remote:URL")
    sub.add_argument("--seed", type=int, help="attack RNG seed")
    sub.add_argument("--charset", help="'default' or a literal string of characters")
    sub.add_argument("--len", type=int, help="suffix length (default 5)")
    sub.add_argument("--dim", type=int, help="synthetic backend dimension (default 64)")
    sub.add_argument("--decay", type=float, help="synthetic positional decay (default 0.95)")
    sub.add_argument("--backend-seed", type=int, help="synthetic backend seed (default 0)")
    sub.add_argument(
        "--cache",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="cache embeddings on disk (default: on for remote, off for synthetic)",
    )
    sub.add_argument("--cache-dir", help="cache directory (overrides QF_CACHE_DIR)")
    sub.add_argument("--jobs", type=int, help="concurrent loss evaluations (default 1)")
    sub.add_argument("--config", help="JSON file with defaults; explicit flags win")
    sub.add_argument("--out", required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qfattack",
        description="Query-efficient suffix perturbations against text embedding backends.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    attack = subs.add_parser("attack", help="run an optimizer against prompts")
    attack.add_argument("--prompt", action="append", help="prompt text (repeatable)")
    attack.add_argument("--prompts", help="file with one prompt per line")
    attack.add_argument("--method", choices=["greedy", "genetic", "pgd", "random"])
    attack.add_argument("--mask", help="mask JSON for the targeted setting")
    attack.add_argument("--generations", type=int)
    attack.add_argument("--population", type=int)
    attack.add_argument("--mutation-rate", type=float)
    attack.add_argument("--step-size", type=float)
    attack.add_argument("--steps", type=int)
    attack.add_argument("--greedy-mode", choices=["sequential", "independent"])
    _add_shared_flags(attack)
    attack.set_defaults(func=cmd_attack)

    brute = subs.add_parser("brute", help="exhaustive suffix search (oracle)")
    brute.add_argument("--prompt", action="append")
    brute.add_argument("--prompts", help="file with one prompt per line")
    brute.add_argument("--mask", help="mask JSON for the targeted setting")
    brute.add_argument("--cap", type=int, help="refuse spaces larger than this (default 1e6)")
    _add_shared_flags(brute)
    brute.set_defaults(func=cmd_brute)

    baseline = subs.add_parser("baseline", help="single random suffix draw")
    baseline.add_argument("--prompt", action="append")
    baseline.add_argument("--prompts", help="file with one prompt per line")
    baseline.add_argument("--mask", help="mask JSON for the targeted setting")
    _add_shared_flags(baseline)
    baseline.set_defaults(func=cmd_baseline)

    keydims = subs.add_parser("keydims", help="extract steerable dimensions from sentence pairs")
    keydims.add_argument("--pairs", required=True, help="JSONL of with_target/without_target pairs")
    keydims.add_argument("--epsilon", type=float, help="vote threshold fraction (default 0.9)")
    keydims.add_argument(
        "--loose-vote", action="store_true", help="use >= instead of > at the vote threshold"
    )
    _add_shared_flags(keydims)
    keydims.set_defaults(func=cmd_keydims)

    ev = subs.add_parser("eval", help="score prompts against image embeddings")
    ev.add_argument("--images", required=True, help="JSONL of image embeddings")
    ev.add_argument("--results", nargs="+", help="attack result JSON/JSONL files")
    ev.add_argument("--setting", choices=["untargeted", "targeted"])
    ev.add_argument("--target", help="target phrase for the targeted setting")
    _add_shared_flags(ev)
    ev.set_defaults(func=cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return ns.func(ns, parser)
    except QFAttackError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
