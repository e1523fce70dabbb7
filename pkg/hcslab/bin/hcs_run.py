"""
Command line front end.

    hcslab pnd --state '{"family": "HCS", "N": 2, "alpha": 3}' --out pnd.csv
    hcslab entropy-scan --grid alpha=0.2:3.0:15,theta=0.1:3.0416:15 --out s.csv
    hcslab circuit --protocol qubit-mediated --alpha 1.5 --out generation.json

Exit codes: 0 success, 2 configuration error, 3 numerical tolerance failure,
4 infeasible cutoff or truncation violation.
"""

import argparse
import logging
import math
import os
import sys
import warnings

import numpy as np
from pydantic import ValidationError

from hcslab import catalog, circuits, coherent, config, dynamics, fock, metrology, report, statistics
from hcslab.custom_exceptions import (
    ConfigurationError,
    DegenerateStateError,
    SkippedPointWarning,
    SubsystemError,
    ToleranceError,
    TruncationError,
)
from hcslab.statistics import PhaseSpaceGrid
from hcslab.validator import (
    GridAxis,
    Manifest,
    RunConfig,
    RunConfigError,
    build_circuit_ops,
    build_state_spec,
    parse_grid,
)

logger = logging.getLogger(__name__)

DEFAULT_STATE = {"family": "HCS", "N": 2, "alpha": 1.0}
# largest Fock vector a command will allocate
MAX_FOCK_DIMENSION = 4_000_000
REPORT_COMMANDS = ("metrology", "circuit")
LITERATURE_MANDEL_DIP = (1.2, 1.8)


class InfeasibleCutoffError(TruncationError):
    pass


class BackendMismatchError(ToleranceError):
    pass


def _read_text(value: str) -> str:
    if os.path.isfile(value):
        with open(value, encoding="utf-8") as f:
            return f.read()
    return value


def _spec(run: RunConfig):
    return run.state if run.state is not None else build_state_spec(DEFAULT_STATE)


def _required_spec(run: RunConfig):
    if run.state is None:
        raise RunConfigError(f"{run.command} needs --state")
    return run.state


def _with_alpha(spec, alpha: float):
    return spec.model_copy(update={"alpha": (float(alpha), 0.0)})


def _cutoffs(run: RunConfig, spec, spread: float = 1.0, floor: int = 2):
    """
    Per-mode cutoffs for ``spec``: the --cutoff override, or the default rule
    for an amplitude scaled by ``spread``, raised to at least ``floor``.
    """
    default = catalog.default_cutoffs(spec)
    if run.cutoff is not None:
        levels = [run.cutoff] * default.num_modes
    elif spread != 1.0:
        levels = [fock.default_cutoff(spread * abs(spec.amplitude), spec.w)] * default.num_modes
    else:
        levels = list(default.per_mode_cutoff)
    cutoffs = fock.profile([max(level, floor) for level in levels])
    if cutoffs.dimension > MAX_FOCK_DIMENSION:
        raise InfeasibleCutoffError(
            f"cutoffs {cutoffs.per_mode_cutoff} give dimension {cutoffs.dimension}, "
            f"above {MAX_FOCK_DIMENSION}"
        )
    return cutoffs


def _state(run: RunConfig, spec, backend: str, spread: float = 1.0, floor: int = 2):
    if backend == "fock":
        return catalog.build(spec, "fock", _cutoffs(run, spec, spread, floor))
    return catalog.build(spec, "analytic")


def _maker(run: RunConfig, spec, backend: str, spread: float = 1.0):
    return lambda alpha: _state(run, _with_alpha(spec, alpha), backend, spread)


def _axis(run: RunConfig, name: str, default: tuple) -> list:
    if run.grid is not None and run.grid.has(name):
        return run.grid.axis(name).values()
    start, stop, steps = default
    return GridAxis(name=name, start=start, stop=stop, steps=steps).values()


def _compare(first: list, second: list, tolerance: float, what: str):
    a, b = np.asarray(first, dtype=float), np.asarray(second, dtype=float)
    if a.shape != b.shape:
        raise BackendMismatchError(f"{what}: backends returned shapes {a.shape} and {b.shape}")
    gap = float(np.max(np.abs(a - b))) if a.size else 0.0
    if gap > tolerance:
        raise BackendMismatchError(f"{what}: backends differ by {gap:.3e} > {tolerance:.1e}")
    logger.info(f"{what}: backends agree to {gap:.3e}")


def _dual(run: RunConfig, compute) -> list:
    """
    Rows from the requested backend; "both" computes both and compares them.
    """
    if run.backend != "both":
        return compute(run.backend)
    rows = compute("analytic")
    _compare(rows, compute("fock"), run.tolerance, run.command)
    return rows


def _spot_check(run: RunConfig, rows: list, recompute, width: int):
    # recompute a seeded sample of grid cells on the Fock backend
    count = int(run.options.get("check_cells", 5))
    rng = np.random.default_rng(run.seed)
    picks = rng.choice(len(rows), size=min(count, len(rows)), replace=False)
    for index in sorted(picks):
        row = rows[index]
        _compare([row[2:width]], [recompute(row[0], row[1])[2:width]], run.tolerance, f"cell {row[:2]}")


def _manifest(run: RunConfig, cutoffs=None, **metadata) -> Manifest:
    return Manifest(
        command=run.command,
        state=None if run.state is None else run.state.model_dump(mode="json"),
        backend=run.backend,
        cutoffs=None if cutoffs is None else list(cutoffs.per_mode_cutoff),
        tolerance=run.tolerance,
        seed=run.seed,
        metadata=metadata,
    )


def _write(run: RunConfig, manifest: Manifest, header=(), rows=(), payload=None):
    report.write_output(run.out, run.format, manifest, header, rows, payload)


def cmd_pnd(run: RunConfig):
    """
    Photon number distribution P(n_1, ..., n_N) on [0, max_n]^N.
    """
    spec = _spec(run)
    max_n = int(run.options.get("max_n", 20))

    def compute(backend):
        state = _state(run, spec, backend, floor=max_n + 1)
        distribution = statistics.photon_number_distribution(state, max_n)
        return [list(index) + [float(p)] for index, p in np.ndenumerate(distribution)]

    rows = _dual(run, compute)
    modes = len(rows[0]) - 1
    header = ["n", "m", "P"] if modes == 2 else [f"n_{j}" for j in range(modes)] + ["P"]
    total = sum(row[-1] for row in rows)
    _write(run, _manifest(run, max_n=max_n, total_mass=total), header, rows)


def cmd_mandel(run: RunConfig):
    """
    Mandel parameter of mode 0 over an alpha axis; alpha = 0 is skipped.
    """
    spec = _spec(run)
    rows = []
    for alpha in _axis(run, "alpha", (0.05, 3.0, 60)):
        if alpha == 0:
            warnings.warn("alpha = 0 has no photons; Mandel Q is undefined there", SkippedPointWarning)
            continue
        point = _with_alpha(spec, alpha)
        rows.append(
            [float(alpha)]
            + _dual(run, lambda backend: [statistics.mandel_q(_state(run, point, backend), 0)])
        )
    argmin = min(rows, key=lambda row: row[1])[0] if rows else None
    low, high = LITERATURE_MANDEL_DIP
    if argmin is not None and not low <= argmin <= high:
        logger.warning(f"most negative Mandel Q at alpha={argmin:.4g}, literature dip near 3/2")
    _write(run, _manifest(run, argmin=argmin), ["alpha", "Q"], rows)


def cmd_entropy_scan(run: RunConfig):
    """
    Entanglement entropy and its fluctuation across B(theta) on an (alpha, theta) grid.
    """
    spec = _spec(run)
    convention = run.options.get("convention", "symmetric")
    alphas = _axis(run, "alpha", (0.2, 3.0, 15))
    thetas = _axis(run, "theta", (0.1, math.pi - 0.1, 15))
    primary = "fock" if run.backend == "fock" else "analytic"
    spread = math.sqrt(2.0)
    rows = dynamics.beam_splitter_entropy_surface(
        _maker(run, spec, primary, spread), alphas, thetas, convention
    )
    if run.backend == "both":
        fock_maker = _maker(run, spec, "fock", spread)
        _spot_check(
            run,
            rows,
            lambda a, t: dynamics.beam_splitter_entropy_surface(fock_maker, [a], [t], convention)[0],
            4,
        )
    rows = [list(row) for row in rows]
    if not run.options.get("fluctuation", True):
        rows = [row[:3] for row in rows]
    header = ["alpha", "theta", "S_E", "dS_E"][: len(rows[0])]
    _write(run, _manifest(run, convention=convention, entropy_unit="bits"), header, rows)


def cmd_damp(run: RunConfig):
    """
    Reduced entropy of mode 0 under independent amplitude damping: an
    (alpha, t) surface when the grid has an alpha axis, else the trajectory of
    the given state with trace and purity.
    """
    spec = _spec(run)
    gamma = float(run.options.get("gamma", 0.1))
    convention = run.options.get("rate_convention", "amplitude")
    times = _axis(run, "t", (0.0, 9.0, 10))
    settings = {"rate_convention": convention}
    if run.grid is not None and run.grid.has("alpha"):
        alphas = run.grid.axis("alpha").values()
        primary = "fock" if run.backend == "fock" else "analytic"
        rows = dynamics.damping_entropy_surface(
            _maker(run, spec, primary),
            alphas,
            times,
            gamma,
            backend="numeric" if primary == "fock" else "analytic",
            **settings,
        )
        if run.backend == "both":
            fock_maker = _maker(run, spec, "fock")

            def recompute(alpha, t):
                cell = dynamics.damping_entropy_surface(
                    fock_maker, [alpha], [t], gamma, backend="numeric", **settings
                )
                return cell[0]

            _spot_check(run, rows, recompute, 3)
        _write(
            run,
            _manifest(run, gamma=gamma, rate_convention=convention, entropy="reduced_state"),
            ["alpha", "t", "S_E"],
            [list(row) for row in rows],
        )
        return
    backend = "numeric" if run.backend == "fock" else "analytic"
    state = _state(run, spec, "fock" if backend == "numeric" else "analytic")
    damping = dynamics.make_run(gamma=gamma, time_grid=times, backend=backend, **settings)
    points = dynamics.damping_entropy_trajectory(state, damping, [0])
    if run.backend == "both":
        numeric = dynamics.damping_entropy_trajectory(
            _state(run, spec, "fock"), damping.model_copy(update={"backend": "numeric"}), [0]
        )
        _compare([p.entropy for p in points], [p.entropy for p in numeric], run.tolerance, "damping")
    limit = dynamics.asymptotic_entropy(state, [0], damping)
    rows = [[p.t, p.entropy, p.fluctuation, p.trace, p.purity] for p in points]
    manifest = _manifest(
        run,
        gamma=gamma,
        rate_convention=convention,
        entropy="reduced_state",
        limit_entropy=limit.limit_entropy,
        literature_limit=limit.literature_value,
        limit_contradicted=limit.contradicted,
    )
    _write(run, manifest, ["t", "S_E", "dS_E", "trace", "purity"], rows)


def cmd_metrology(run: RunConfig):
    """
    N^rF sweep of a two-branch family, the squeezed hierarchical comparison
    (option w), or the 1-local report of a single state.
    """
    algebra = metrology.algebra(run.options.get("algebra", "h3"))
    spec = run.state
    N = spec.N if spec is not None else 2
    if "w" in run.options:
        alpha = abs(spec.amplitude) if spec is not None else 1.0
        result = metrology.squeezed_hcs_nrf(alpha, float(run.options["w"]), N)
        _write(run, _manifest(run, normalization="unit_euclidean"), payload=result.model_dump())
        return
    if spec is not None and not (run.grid is not None and run.grid.has("alpha")):
        state = _state(run, spec, "fock" if run.backend == "fock" else "analytic")
        result = metrology.max_one_local_variance(state, algebra)
        _write(run, _manifest(run, normalization=result.normalization), payload=result.model_dump())
        return
    family = run.options.get("family") or (spec.family if spec is not None else "ECS")
    alphas = _axis(run, "alpha", (1.0, math.sqrt(6.0), 6))
    sweep = metrology.nrf_sweep(family, algebra, N, alphas)
    rows = [[x, y] for x, y in zip(sweep.photon_scale, sweep.nrf)]
    manifest = _manifest(run, normalization="unit_euclidean", exponent=sweep.exponent)
    if run.format == "csv":
        _write(run, manifest, ["alpha_sq", "nrf"], rows)
    else:
        _write(run, manifest, payload=sweep.model_dump())


def cmd_circuit(run: RunConfig):
    """
    Run a generation protocol (photon-loss, qubit-mediated, direct) or a circuit loaded from --ops.
    """
    protocol = run.options.get("protocol", "qubit-mediated")
    alpha = float(run.options.get("alpha", 1.0))
    if protocol == "photon-loss":
        result = circuits.coherent_photon_loss_protocol(
            alpha,
            float(run.options.get("epsilon", 0.01)),
            float(run.options.get("phi", 0.0)),
            int(run.options.get("detect_mode", 2)),
            "fock" if run.backend == "fock" else "analytic",
        )
        payload = result.model_dump(exclude={"density"})
        payload["limiting_fidelity"] = circuits.limiting_photon_loss_fidelity(alpha)
    elif protocol == "qubit-mediated":
        result = circuits.qubit_mediated_generation(alpha, bool(run.options.get("skip_uncompute", False)))
        payload = result.model_dump(exclude={"state"})
    elif protocol == "direct":
        result = circuits.direct_preparation_route(alpha, run.options.get("variant", "sigma_x"))
        payload = result.model_dump(exclude={"state"})
    elif protocol == "ops":
        if "ops" not in run.options:
            raise RunConfigError("protocol ops needs --ops")
        ops = build_circuit_ops(_read_text(run.options["ops"]))
        spec = _required_spec(run)
        backend = "fock" if run.backend == "fock" else "analytic"
        initial = _state(run, spec, backend)
        result = circuits.run_circuit(initial, ops)
        payload = {"success_weight": result.success_weight}
        if isinstance(result.state, (fock.FockState, coherent.CoherentSuperposition)):
            payload["norm"] = result.state.norm()
        else:
            payload["trace"] = result.state.trace
            payload["purity"] = result.state.purity()
    else:
        raise RunConfigError(f"unknown protocol {protocol}")
    _write(run, _manifest(run, protocol=protocol, alpha=alpha), payload=payload)


def _phase_space(run: RunConfig, evaluate, complex_values: bool = False):
    spec = _required_spec(run)
    if run.grid is None:
        raise RunConfigError(f"{run.command} needs --grid with re_<m>/im_<m> axes")
    modes = run.options.get("modes")
    count = len(modes) if modes else catalog.default_cutoffs(spec).num_modes
    for axis in run.grid.axes:
        part, _, index = axis.name.partition("_")
        if part not in ("re", "im") or not index.isdigit() or int(index) >= count:
            raise RunConfigError(f"axis {axis.name} is not re_<m> or im_<m> for {count} modes")
    grid = PhaseSpaceGrid(num_modes=count, axes=run.grid.axes)
    rows = _dual(run, lambda backend: evaluate(_state(run, spec, backend), grid, modes).rows())
    header = [axis.name for axis in grid.axes] + (["re", "im"] if complex_values else ["value"])
    _write(run, _manifest(run, modes=modes), header, rows)


def cmd_qfunc(run: RunConfig):
    _phase_space(run, lambda state, grid, modes: statistics.q_function(state, grid))


def cmd_wigner(run: RunConfig):
    _phase_space(run, statistics.wigner_function)


def cmd_bargmann(run: RunConfig):
    def evaluate(state, grid, modes):
        return grid.with_values(statistics.bargmann_function(state, grid.points()))

    _phase_space(run, evaluate, complex_values=True)


COMMANDS = {
    "pnd": cmd_pnd,
    "mandel": cmd_mandel,
    "entropy-scan": cmd_entropy_scan,
    "damp": cmd_damp,
    "metrology": cmd_metrology,
    "circuit": cmd_circuit,
    "qfunc": cmd_qfunc,
    "wigner": cmd_wigner,
    "bargmann": cmd_bargmann,
}

OPTION_FLAGS = {
    "pnd": [("--max-n", int)],
    "mandel": [],
    "entropy-scan": [("--convention", str), ("--check-cells", int)],
    "damp": [("--gamma", float), ("--rate-convention", str), ("--check-cells", int)],
    "metrology": [("--algebra", str), ("--family", str), ("--w", float)],
    "circuit": [
        ("--protocol", str),
        ("--alpha", float),
        ("--epsilon", float),
        ("--phi", float),
        ("--detect-mode", int),
        ("--variant", str),
        ("--ops", str),
    ],
    "qfunc": [],
    "wigner": [("--modes", int)],
    "bargmann": [],
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hcslab", description="Hierarchical cat state laboratory")
    parser.add_argument("--verbose", action="store_true", help="log at DEBUG level")
    commands = parser.add_subparsers(dest="command", required=True)
    for name, flags in OPTION_FLAGS.items():
        sub = commands.add_parser(name, help=COMMANDS[name].__doc__)
        sub.add_argument("--state", help="state descriptor as JSON text or a JSON file")
        sub.add_argument("--backend", default="analytic", help="fock, analytic or both")
        sub.add_argument("--grid", help='axes as "name=start:stop:steps,..."')
        sub.add_argument("--out", required=True, help="output file")
        sub.add_argument("--format", help="csv or json")
        sub.add_argument("--cutoff", type=int, help="per-mode Fock cutoff override")
        sub.add_argument("--seed", type=int, default=0)
        sub.add_argument("--tolerance", type=float, default=1e-5)
        for flag, kind in flags:
            if flag == "--modes":
                sub.add_argument(flag, type=kind, nargs="+")
            else:
                sub.add_argument(flag, type=kind)
        if name == "entropy-scan":
            sub.add_argument("--no-fluctuation", dest="fluctuation", action="store_false")
        if name == "circuit":
            sub.add_argument("--skip-uncompute", action="store_true")
    return parser


def load_run_config(args: argparse.Namespace) -> RunConfig:
    """
    Validate parsed arguments into a RunConfig.
    """
    options = {}
    for flag, _ in OPTION_FLAGS[args.command]:
        key = flag.lstrip("-").replace("-", "_")
        if getattr(args, key, None) is not None:
            options[key] = getattr(args, key)
    if args.command == "entropy-scan":
        options["fluctuation"] = args.fluctuation
    if args.command == "circuit":
        options["skip_uncompute"] = args.skip_uncompute
    fmt = args.format or ("json" if args.command in REPORT_COMMANDS else "csv")
    try:
        return RunConfig(
            command=args.command,
            state=None if args.state is None else build_state_spec(_read_text(args.state)),
            backend=args.backend,
            cutoff=args.cutoff,
            grid=None if args.grid is None else parse_grid(args.grid),
            out=args.out,
            format=fmt,
            seed=args.seed,
            tolerance=args.tolerance,
            options=options,
        )
    except ValidationError as e:
        raise RunConfigError("Error run config not created:" + str(e)) from None


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else config.LOG_LEVEL
    logging.basicConfig(format="[%(module)-12s] %(message)s", level=level)
    try:
        run = load_run_config(args)
        COMMANDS[run.command](run)
    except (ConfigurationError, DegenerateStateError, SubsystemError) as e:
        logger.error(str(e))
        return 2
    except ToleranceError as e:
        logger.error(str(e))
        return 3
    except TruncationError as e:
        logger.error(str(e))
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
