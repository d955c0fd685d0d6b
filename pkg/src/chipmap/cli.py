"""Command line interface.

Exit codes: 0 success, 2 invalid input, 3 placement does not fit,
4 no route. Options can also come from CHIPMAP_* environment variables.
"""

from __future__ import annotations

import csv
import functools
import itertools
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from types import SimpleNamespace

import click
import yaml

from .backend import build_backend
from .benchgen import gen_backend_for, gen_ls_cnot_circuit, gen_memory_circuit
from .errors import (
    NoFitError,
    NoRouteError,
    StrictPatchViolationError,
    ValidationError,
)
from .ir import circuit_from_json
from .pipeline import CompileOptions, compile_circuit, result_to_json
from .render import render_layout_svg
from .schema import validate_backend_doc, validate_circuit_doc, validate_compiled_doc
from .route import RoutingConfig

log = logging.getLogger(__name__)

EXIT_VALIDATION = 2
EXIT_NOFIT = 3
EXIT_NOROUTE = 4

_STAT_COLUMNS = (
    "n_virtual",
    "n_physical",
    "depth_original",
    "depth_compiled",
    "gates_original",
    "gates_compiled",
    "two_qubit_original",
    "two_qubit_compiled",
    "cx_expanded_two_qubit",
    "swap_count",
    "inter_chiplet_two_qubit",
    "chiplets_used",
    "utilization",
    "patch_violations",
)

_SWEEP_AXES = ("d", "n_cnots", "n_inter", "defects", "policy", "alpha", "beta")


def _guard(fn):
    """Map compiler failures onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except NoFitError as exc:
            _fail(EXIT_NOFIT, str(exc))
        except NoRouteError as exc:
            _fail(EXIT_NOROUTE, str(exc))
        except (ValidationError, StrictPatchViolationError) as exc:
            _fail(EXIT_VALIDATION, str(exc))

    return wrapper


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


class _JsonLogFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        return json.dumps(
            {
                "level": record.levelname.lower(),
                "logger": record.name,
                "message": record.getMessage(),
            }
        )


def _load_doc(path: Path) -> object:
    text = path.read_text()
    try:
        if path.suffix in (".yaml", ".yml"):
            return yaml.safe_load(text)
        return json.loads(text)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise ValidationError(f"{path}: not parseable: {exc}") from None


def _write_json(path: Path, obj: object) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2) + "\n")
    log.info("wrote %s", path)


@click.group(context_settings={"auto_envvar_prefix": "CHIPMAP"})
@click.option("--out-dir", type=click.Path(path_type=Path), default=Path("."),
              show_default=True, help="Directory for output files.")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Seed for every randomized step.")
@click.option("--json-logs", is_flag=True, help="Log to stderr as JSON lines.")
@click.pass_context
def main(ctx: click.Context, out_dir: Path, seed: int, json_logs: bool) -> None:
    """Map patch-structured circuits onto modular chiplet hardware."""
    handler = logging.StreamHandler(sys.stderr)
    if json_logs:
        handler.setFormatter(_JsonLogFormatter())
    else:
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    logging.basicConfig(level=logging.INFO, handlers=[handler], force=True)
    ctx.obj = SimpleNamespace(out_dir=out_dir, seed=seed)


def _compile_options(
    obj: SimpleNamespace,
    partitions: str,
    placement: str,
    relative_ref: str,
    no_hints: bool,
    imbalance: float,
    detection_budget: int,
    policy: str,
    alpha: float | None,
    beta: float | None,
    k_nearest: int,
    no_restore: bool,
    strict_patches: bool,
    util_all_chiplets: bool,
) -> CompileOptions:
    routing = RoutingConfig.from_policy(
        policy,
        alpha=alpha,
        beta=beta,
        k_nearest=k_nearest,
        restore_mapping=not no_restore,
        strict_patches=strict_patches,
    )
    return CompileOptions(
        partitions=partitions,
        imbalance=imbalance,
        detection_budget=detection_budget,
        placement=placement,
        relative_ref=relative_ref,
        use_hints=not no_hints,
        routing=routing,
        util_all_chiplets=util_all_chiplets,
        seed=obj.seed,
    )


_compile_opts = [
    click.option("--partitions", type=click.Choice(["auto", "predefined", "detect"]),
                 default="auto", show_default=True,
                 help="Where partition labels come from."),
    click.option("--placement", type=click.Choice(["center", "size-aware"]),
                 default="center", show_default=True),
    click.option("--relative-ref", type=click.Choice(["weight", "order"]),
                 default="weight", show_default=True,
                 help="Reference choice for relative placement."),
    click.option("--no-hints", is_flag=True, help="Ignore declared layout hints."),
    click.option("--imbalance", type=float, default=0.03, show_default=True),
    click.option("--detection-budget", type=int, default=200, show_default=True,
                 help="Max interaction-graph size for community detection."),
]

_routing_opts = [
    click.option("--policy", type=click.Choice(["basic", "focus", "tradeoff"]),
                 default="basic", show_default=True),
    click.option("--alpha", type=float, default=None,
                 help="Link error-rate weight (overrides the policy default)."),
    click.option("--beta", type=float, default=None,
                 help="Link congestion weight (overrides the policy default)."),
    click.option("--k-nearest", type=int, default=3, show_default=True,
                 help="Candidate links considered per boundary crossing."),
    click.option("--no-restore", is_flag=True,
                 help="Keep tokens where routing parks them."),
    click.option("--strict-patches", is_flag=True,
                 help="Error out when a gate needs routing inside one patch."),
]


def _add(options):
    def deco(fn):
        for opt in reversed(options):
            fn = opt(fn)
        return fn

    return deco


@main.command("compile")
@click.argument("circuit_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("backend_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@_add(_compile_opts)
@_add(_routing_opts)
@click.option("--util-all-chiplets", is_flag=True,
              help="Compute utilization over the whole device.")
@click.option("-o", "--out", "out_file", type=click.Path(path_type=Path), default=None,
              help="Compiled document path (default <circuit>.compiled.json in --out-dir).")
@click.option("--stats-only", is_flag=True, help="Print stats, write no file.")
@click.option("--svg", "svg_file", type=click.Path(path_type=Path), default=None,
              help="Also render the placed layout to this SVG file.")
@click.pass_obj
@_guard
def compile_cmd(
    obj: SimpleNamespace,
    circuit_file: Path,
    backend_file: Path,
    out_file: Path | None,
    stats_only: bool,
    svg_file: Path | None,
    util_all_chiplets: bool,
    **opts,
) -> None:
    """Compile CIRCUIT_FILE onto BACKEND_FILE and report metrics."""
    circuit_doc = _load_doc(circuit_file)
    backend_doc = _load_doc(backend_file)
    validate_circuit_doc(circuit_doc)
    validate_backend_doc(backend_doc)
    circuit = circuit_from_json(circuit_doc)
    backend = build_backend(backend_doc)
    options = _compile_options(obj, util_all_chiplets=util_all_chiplets, **opts)
    result = compile_circuit(circuit, backend, options)
    click.echo(json.dumps(result.stats.as_dict(), indent=2))
    if not stats_only:
        if out_file is None:
            out_file = obj.out_dir / (circuit_file.stem + ".compiled.json")
        _write_json(out_file, result_to_json(result, backend))
    if svg_file is not None:
        svg_file.parent.mkdir(parents=True, exist_ok=True)
        svg_file.write_text(
            render_layout_svg(backend, result.placements, title=circuit_file.name)
        )
        log.info("wrote %s", svg_file)


@main.group()
def bench() -> None:
    """Benchmark circuit and backend generation."""


@bench.command("gen")
@click.option("--kind", type=click.Choice(["memory", "ls-cnot"]), default="memory",
              show_default=True)
@click.option("-d", "--distance", type=int, required=True, help="Code distance (odd, >= 3).")
@click.option("--rounds", type=int, default=1, show_default=True)
@click.option("--n-cnots", type=int, default=1, show_default=True,
              help="CNOT blocks (ls-cnot only).")
@click.option("--headroom", type=float, default=0.30, show_default=True,
              help="Spare chiplet capacity fraction.")
@click.option("--grid", type=(int, int), default=None,
              help="Chiplet grid rows cols (default: sized automatically).")
@click.option("--n-inter", type=int, default=8, show_default=True,
              help="Links per facing chiplet edge.")
@click.option("--eps", type=float, default=1e-3, show_default=True,
              help="Link error rate.")
@click.option("--defects", type=int, default=0, show_default=True,
              help="Random defects per chiplet.")
@click.option("--out-circuit", type=click.Path(path_type=Path), default=None)
@click.option("--out-backend", type=click.Path(path_type=Path), default=None)
@click.pass_obj
@_guard
def bench_gen(
    obj: SimpleNamespace,
    kind: str,
    distance: int,
    rounds: int,
    n_cnots: int,
    headroom: float,
    grid: tuple[int, int] | None,
    n_inter: int,
    eps: float,
    defects: int,
    out_circuit: Path | None,
    out_backend: Path | None,
) -> None:
    """Generate a benchmark circuit with a matching backend."""
    if kind == "memory":
        circuit = gen_memory_circuit(distance, rounds)
        stem = f"memory_d{distance}"
    else:
        circuit = gen_ls_cnot_circuit(distance, n_cnots, rounds)
        stem = f"ls_cnot_d{distance}_n{n_cnots}"
    backend = gen_backend_for(
        circuit,
        headroom=headroom,
        grid=grid,
        n_inter=n_inter,
        eps=eps,
        defects_per_chiplet=defects,
        seed=obj.seed,
    )
    _write_json(out_circuit or obj.out_dir / f"{stem}.circuit.json", circuit)
    _write_json(out_backend or obj.out_dir / f"{stem}.backend.json", backend)


def _sweep_row(task: dict) -> dict:
    """Generate, compile, and measure one sweep point (worker-safe)."""
    values = task["values"]
    kind = task["kind"]
    d = int(values.get("d", task.get("d", 3)))
    rounds = int(task.get("rounds", 1))
    if kind == "memory":
        circuit_doc = gen_memory_circuit(d, rounds)
    else:
        circuit_doc = gen_ls_cnot_circuit(d, int(values.get("n_cnots", 1)), rounds)
    backend_doc = gen_backend_for(
        circuit_doc,
        headroom=float(task.get("headroom", 0.30)),
        grid=task.get("grid"),
        n_inter=int(values.get("n_inter", 8)),
        eps=task.get("eps", 1e-3),
        defects_per_chiplet=int(values.get("defects", 0)),
        seed=int(task.get("seed", 0)),
    )
    policy = str(values.get("policy", "basic"))
    alpha = values.get("alpha")
    beta = values.get("beta")
    routing = RoutingConfig.from_policy(
        policy,
        alpha=None if alpha is None else float(alpha),
        beta=None if beta is None else float(beta),
        **task.get("routing", {}),
    )
    options = CompileOptions(
        routing=routing, seed=int(task.get("seed", 0)), **task.get("compile", {})
    )
    result = compile_circuit(
        circuit_from_json(circuit_doc), build_backend(backend_doc), options
    )
    stats = result.stats.as_dict()
    row = {axis: values[axis] for axis in task["axis_names"]}
    for col in _STAT_COLUMNS:
        row[col] = stats[col]
    return row


@main.command()
@click.argument("spec_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("-o", "--out", "out_file", type=click.Path(path_type=Path), default=None,
              help="CSV path (default sweep.csv in --out-dir).")
@click.option("--jobs", type=int, default=1, show_default=True,
              help="Worker processes.")
@click.pass_obj
@_guard
def sweep(obj: SimpleNamespace, spec_file: Path, out_file: Path | None, jobs: int) -> None:
    """Run the benchmark sweep described by SPEC_FILE (YAML or JSON).

    The spec names a generator kind, fixed parameters, and swept axes:

    \b
        kind: ls-cnot
        rounds: 1
        axes:
          d: [3, 5]
          n_inter: [8, 4, 1]
          policy: [basic, tradeoff]
        compile:
          placement: center

    Rows appear in axis-product order, outermost axis first. Wall-clock
    columns are omitted so reruns produce byte-identical files.
    """
    spec = _load_doc(spec_file)
    if not isinstance(spec, dict):
        raise ValidationError("sweep spec must be an object")
    kind = spec.get("kind", "memory")
    if kind not in ("memory", "ls-cnot"):
        raise ValidationError(f"unknown sweep kind {kind!r}")
    axes = spec.get("axes")
    if not isinstance(axes, dict) or not axes:
        raise ValidationError("sweep spec needs a nonempty axes object")
    for name in axes:
        if name not in _SWEEP_AXES:
            raise ValidationError(
                f"unknown sweep axis {name!r}; choose from {', '.join(_SWEEP_AXES)}"
            )
    axis_names = list(axes)
    axis_values = []
    for name in axis_names:
        vals = axes[name]
        if not isinstance(vals, list) or not vals:
            raise ValidationError(f"axis {name!r} must list at least one value")
        axis_values.append(vals)

    base = {
        "kind": kind,
        "rounds": spec.get("rounds", 1),
        "d": spec.get("d", 3),
        "headroom": spec.get("headroom", 0.30),
        "grid": spec.get("grid"),
        "eps": spec.get("eps", 1e-3),
        "seed": spec.get("seed", obj.seed),
        "compile": spec.get("compile", {}),
        "routing": spec.get("routing", {}),
        "axis_names": axis_names,
    }
    tasks = [
        {**base, "values": dict(zip(axis_names, combo))}
        for combo in itertools.product(*axis_values)
    ]
    log.info("sweep: %d points, %d workers", len(tasks), jobs)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_row, tasks))
    else:
        rows = [_sweep_row(t) for t in tasks]

    if out_file is None:
        out_file = obj.out_dir / "sweep.csv"
    out_file.parent.mkdir(parents=True, exist_ok=True)
    columns = axis_names + list(_STAT_COLUMNS)
    with out_file.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)
    log.info("wrote %s", out_file)


@main.command()
@click.argument("kind", type=click.Choice(["circuit", "backend", "compiled"]))
@click.argument("file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@_guard
def validate(kind: str, file: Path) -> None:
    """Check FILE against the KIND document schema and semantic rules."""
    doc = _load_doc(file)
    if kind == "circuit":
        validate_circuit_doc(doc)
        circuit_from_json(doc)
    elif kind == "backend":
        validate_backend_doc(doc)
        build_backend(doc)
    else:
        validate_compiled_doc(doc)
    click.echo(f"{file}: valid {kind} document")


@main.command("render-layout")
@click.argument("circuit_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("backend_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@_add(_compile_opts)
@click.option("-o", "--out", "out_file", type=click.Path(path_type=Path), default=None,
              help="SVG path (default <circuit>.layout.svg in --out-dir).")
@click.pass_obj
@_guard
def render_layout(
    obj: SimpleNamespace,
    circuit_file: Path,
    backend_file: Path,
    out_file: Path | None,
    **opts,
) -> None:
    """Render the placed layout for CIRCUIT_FILE on BACKEND_FILE."""
    circuit_doc = _load_doc(circuit_file)
    backend_doc = _load_doc(backend_file)
    validate_circuit_doc(circuit_doc)
    validate_backend_doc(backend_doc)
    circuit = circuit_from_json(circuit_doc)
    backend = build_backend(backend_doc)
    options = _compile_options(
        obj,
        policy="basic",
        alpha=None,
        beta=None,
        k_nearest=3,
        no_restore=False,
        strict_patches=False,
        util_all_chiplets=False,
        **opts,
    )
    result = compile_circuit(circuit, backend, options)
    if out_file is None:
        out_file = obj.out_dir / (circuit_file.stem + ".layout.svg")
    out_file.parent.mkdir(parents=True, exist_ok=True)
    out_file.write_text(render_layout_svg(backend, result.placements, title=circuit_file.name))
    click.echo(str(out_file))
