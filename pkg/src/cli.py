"""
Evader command line
qualify -> attack/defend -> report over an image corpus, plus fixtures and the mock detector
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from pydantic import ValidationError

from src.attacks.boundary import SbbConfig
from src.attacks.image_processing import IpAttackKind, IpParams
from src.attacks.local_search import SblsConfig
from src.attacks.single_pixel import DEFAULT_SCHEDULE, SpConfig, SpPerturbKind
from src.core.config import Settings, configure_logging
from src.core.errors import EvaderError
from src.defenses.filters import FilterKind
from src.defenses.wrappers import Granularity
from src.harness.dataset import (
    CorpusItem,
    SyntheticCorpusGenerator,
    attach_manifest,
    load_corpus,
    qualify_dataset,
    read_manifest,
    write_manifest,
)
from src.harness.reports import write_reports
from src.harness.runner import run_experiment
from src.harness.specs import (
    AttackSpec,
    IpAttackSpec,
    OracleSpec,
    SbbAttackSpec,
    SblsAttackSpec,
    SpAttackSpec,
)
from src.oracle.verdict import Verdict
from src.regions.masks import RegionKind

logger = logging.getLogger("evader")

MANIFEST_FILE = "manifest.jsonl"
ORACLE_FILE = "oracle.json"
EXIT_ERROR = 2


def _floats(text: str) -> List[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> List[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _corpus_options(settings: Settings) -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--images", required=True, help="directory of input images")
    source = parent.add_mutually_exclusive_group()
    source.add_argument("--masks", help="directory of subject masks named like the images")
    source.add_argument("--faces", help="JSON file of face boxes per image file")
    parent.add_argument("--oracle", help="oracle spec JSON (default: mask-coverage mock, tau 0.5)")
    parent.add_argument("--out", default=settings.output_dir,
                        help="output directory (default: $EVADER_OUTPUT_DIR or runs)")
    parent.add_argument("--size", type=int, help="resize images and masks to SIZE x SIZE")
    return parent


def _run_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--seed", type=int, default=0, help="base seed; image i uses seed ^ i")
    parent.add_argument("--parallel", type=int, default=1, help="worker threads")
    parent.add_argument("--budget", type=int, help="per-image query limit")
    return parent


def _defense_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--filter", choices=[k.value for k in FilterKind])
    parent.add_argument("--round", dest="rounding", choices=[g.value for g in Granularity])
    return parent


def _add_attack_parsers(subparsers, parents: Sequence[argparse.ArgumentParser]) -> None:
    ip = subparsers.add_parser("ip", parents=parents, help="image-processing transforms")
    ip.add_argument("--kind", required=True, choices=[k.value for k in IpAttackKind])
    ip.add_argument("--sigma", type=float, default=25.0)
    ip.add_argument("--mu", type=float, default=0.0)
    ip.add_argument("--p", type=float, default=0.05)
    ip.add_argument("--eps", type=float, default=0.1)
    ip.add_argument("--schedule", type=_floats, help="comma-separated parameter values")

    sp = subparsers.add_parser("sp", parents=parents, help="k-pixel perturbation over a region")
    sp.add_argument("--region", choices=[r.value for r in RegionKind], default=RegionKind.SUBJECT.value)
    sp.add_argument("--perturb", choices=[k.value for k in SpPerturbKind], default=SpPerturbKind.SET_MAX.value)
    sp.add_argument("--schedule", type=_ints, default=list(DEFAULT_SCHEDULE))

    local = subparsers.add_parser("sbls", parents=parents, help="subject-based local search")
    local.add_argument("--rounds", type=int, default=30)
    local.add_argument("--d", type=int, default=10)
    local.add_argument("--p", type=int, default=255, choices=[0, 255])
    local.add_argument("--n", type=int, default=10)
    local.add_argument("--probes", type=int, default=50)

    boundary = subparsers.add_parser("sbb", parents=parents, help="subject-based boundary attack")
    boundary.add_argument("--rounds", type=int, default=30)
    boundary.add_argument("--candidates", type=int, default=30)
    boundary.add_argument("--gate", type=float, default=0.8)


def build_parser(settings: Optional[Settings] = None) -> argparse.ArgumentParser:
    settings = settings or Settings.from_env()
    parser = argparse.ArgumentParser(prog="evader", description=__doc__.strip().splitlines()[0])
    commands = parser.add_subparsers(dest="command", required=True)

    fixtures = commands.add_parser("generate-fixtures", help="write the synthetic corpus")
    fixtures.add_argument("--out", required=True)
    fixtures.add_argument("--count", type=int, default=20)
    fixtures.add_argument("--size", type=int, default=32)
    fixtures.add_argument("--seed", type=int, default=0)

    commands.add_parser("qualify", parents=[_corpus_options(settings)], help="keep images the detector flags")

    corpus, run, defense = _corpus_options(settings), _run_options(), _defense_options()
    attack = commands.add_parser("attack", help="attack every qualified image")
    _add_attack_parsers(attack.add_subparsers(dest="attack", required=True), [corpus, run])
    defend = commands.add_parser("defend", help="attack behind filters, rounding or a query limit")
    _add_attack_parsers(defend.add_subparsers(dest="attack", required=True), [corpus, run, defense])

    report = commands.add_parser("report", help="write stats.csv and cdf.csv")
    report.add_argument("--out", default=settings.output_dir)
    report.add_argument("--cost-per-1000", type=float,
                        help="fee per 1000 queries (default: the recorded adapter cost_per_1000)")

    serve = commands.add_parser("serve-mock", help="run the mock detector HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--tau", type=float, default=0.5)
    return parser


def attack_spec_from_args(args: argparse.Namespace) -> AttackSpec:
    if args.attack == "ip":
        params = IpParams(sigma=args.sigma, mu=args.mu, p=args.p, epsilon=args.eps, seed=args.seed)
        return IpAttackSpec(kind=args.kind, params=params, schedule=args.schedule)
    if args.attack == "sp":
        return SpAttackSpec(config=SpConfig(region=args.region, perturb=args.perturb, schedule=args.schedule))
    if args.attack == "sbls":
        return SblsAttackSpec(config=SblsConfig(rounds=args.rounds, distance=args.d, perturb_value=args.p,
                                                commits=args.n, probes=args.probes))
    return SbbAttackSpec(config=SbbConfig(rounds=args.rounds, candidates=args.candidates, gate=args.gate))


def oracle_spec_from_args(args: argparse.Namespace) -> OracleSpec:
    if args.oracle:
        return OracleSpec.from_file(args.oracle)
    logger.info("no --oracle given, using the mask-coverage mock with tau 0.5")
    return OracleSpec(kind="mask_coverage")


def _load_items(args: argparse.Namespace) -> List[CorpusItem]:
    return load_corpus(args.images, masks_dir=args.masks, faces_file=args.faces, size=args.size)


def _qualified(args: argparse.Namespace, spec: OracleSpec) -> List[Tuple[CorpusItem, Verdict]]:
    """Reuse out/manifest.jsonl when present, otherwise qualify and write it"""
    items = _load_items(args)
    manifest_path = Path(args.out) / MANIFEST_FILE
    if manifest_path.exists():
        return attach_manifest(items, read_manifest(manifest_path))
    qualified = qualify_dataset(items, spec.build())
    Path(args.out).mkdir(parents=True, exist_ok=True)
    write_manifest(manifest_path, qualified)
    return qualified


def cmd_generate_fixtures(args: argparse.Namespace) -> int:
    SyntheticCorpusGenerator(count=args.count, size=args.size, seed=args.seed).write(args.out)
    return 0


def cmd_qualify(args: argparse.Namespace) -> int:
    spec = oracle_spec_from_args(args)
    Path(args.out).mkdir(parents=True, exist_ok=True)
    qualified = qualify_dataset(_load_items(args), spec.build())
    write_manifest(Path(args.out) / MANIFEST_FILE, qualified)
    print(f"qualified {len(qualified)} images -> {Path(args.out) / MANIFEST_FILE}")
    return 0


def cmd_attack(args: argparse.Namespace, defended: bool = False) -> int:
    spec = oracle_spec_from_args(args)
    qualified = _qualified(args, spec)
    if defended:
        update = {"filter": args.filter, "rounding": args.rounding}
        # re-validate so the CLI strings become enums
        spec = OracleSpec.model_validate({**spec.model_dump(), **{k: v for k, v in update.items() if v is not None}})
        logger.info("defended oracle: %s", spec.describe())
    Path(args.out).mkdir(parents=True, exist_ok=True)
    spec.save(Path(args.out) / ORACLE_FILE)
    budget = args.budget if args.budget is not None else spec.budget
    results = run_experiment(qualified, attack_spec_from_args(args), spec.build(), base_seed=args.seed,
                             out_dir=args.out, parallel=args.parallel, budget=budget, cache=spec.cache)
    successes = sum(1 for r in results if r.outcome.succeeded)
    print(f"{args.attack}: {successes}/{len(results)} new runs succeeded -> {args.out}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    cost = args.cost_per_1000
    oracle_path = Path(args.out) / ORACLE_FILE
    if cost is None and oracle_path.exists():
        cost = OracleSpec.from_file(oracle_path).cost_per_1000
    stats = write_reports(args.out, cost_per_1000=cost)
    print(f"success rate {stats.success_rate:.3f} over {stats.runs} runs -> {args.out}")
    return 0


def cmd_serve_mock(args: argparse.Namespace) -> int:
    from backend.main import serve

    serve(host=args.host, port=args.port, tau=args.tau)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    settings = Settings.from_env()
    args = build_parser(settings).parse_args(argv)
    configure_logging(settings)
    handlers = {
        "generate-fixtures": cmd_generate_fixtures,
        "qualify": cmd_qualify,
        "attack": cmd_attack,
        "defend": lambda a: cmd_attack(a, defended=True),
        "report": cmd_report,
        "serve-mock": cmd_serve_mock,
    }
    try:
        return handlers[args.command](args)
    except (EvaderError, ValidationError, OSError) as exc:
        print(f"evader: error: {exc}".splitlines()[0], file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
