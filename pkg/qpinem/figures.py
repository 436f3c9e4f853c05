#!/usr/bin/env python3
"""
Figure scenarios: default parameter sets, desk-scale knobs and runners.

Each figure is a plain parameter dict that goes through the same
dotted-path override mechanism as scenario files. `scale` shrinks the
expensive dimension of a figure (goal photon number, step count or
initial intensity) for quick runs.
"""

import logging
import math
import os
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .analysis import growth_slope, peak_count, summarize
from .chain import (
    StepPolicy,
    detect_thermal_convergence,
    run_displaced_fock,
    run_fock_builder_ensemble,
    run_scenario,
)
from .config import apply_overrides, complex_pair, parse_complex
from .electron import ElectronSpec, default_window, embed, make_delta
from .errors import ConfigError
from .fockspace import make_coherent
from .formatter import Formatter
from .scattering import JointPure, build_kernel, evolve_pure, postselected_photon_state

logger = logging.getLogger(__name__)

Params = Dict[str, Any]

FIG2_DEFAULTS: Params = {
    "alpha2": 50.0,
    "g_qu": 0.25j,
    "n_max": 120,
    "slices": [-2, 2],
}

FIG3_DEFAULTS: Params = {
    "g_qu": 1j,
    "n_goal": 100,
    "runs": 200,
    "max_steps": 10_000,
    "n_max": None,
    "jobs": 1,
}

FIG4_DEFAULTS: Params = {
    "alpha2": [10.0],
    "g_qu": 0.1j,
    "n_steps": 1000,
    "n_max": 256,
    "convergence_window": 100,
    "convergence_rel_tol": 0.02,
}

FIG5_DEFAULTS: Params = {
    "alpha2": 1000.0,
    "g_qu": 0.0158j,
    "beta": -1j,
    "comb_lengths": [30],
    "n_steps": 100,
    "n_max": None,
    "ensemble": True,
}

FIG6_DEFAULTS: Params = {
    "n_i": [1, 2, 4],
    "g_qu": 0.5j,
    "beta": -1j,
    "teeth": 30,
    "n_steps": 6,
    "n_max": None,
    "ensemble": False,
}


@dataclass
class FigureResult:
    """What a figure run produced."""

    name: str
    params: Params
    files: List[str] = field(default_factory=list)
    summary: List[Tuple[str, Any]] = field(default_factory=list)
    complete: bool = True


def _to_document(params: Params) -> Params:
    def convert(value: Any) -> Any:
        if isinstance(value, complex):
            return complex_pair(value)
        if isinstance(value, list):
            return [convert(item) for item in value]
        return value

    return {key: convert(value) for key, value in params.items()}


def _coerce(key: str, value: Any, default: Any) -> Any:
    if isinstance(default, complex):
        return parse_complex(value, key)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"expected true or false, got {value!r}", key)
        return value
    if isinstance(default, int) or (default is None and key == "n_max"):
        if value is None and default is None:
            return None
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", key)
        # electron outcomes may be negative, counts may not
        if value < 0 and not key.startswith("slices"):
            raise ConfigError(f"must be non-negative, got {value}", key)
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value < 0:
            raise ConfigError(f"expected a non-negative number, got {value!r}", key)
        return float(value)
    if isinstance(default, list):
        items = value if isinstance(value, list) else [value]
        if not items:
            raise ConfigError("expected a non-empty list", key)
        return [_coerce(f"{key}[{i}]", item, default[0]) for i, item in enumerate(items)]
    return value


def resolve_params(defaults: Params, overrides: Sequence[str] = ()) -> Params:
    """Apply key=value overrides to a default parameter set and type-check the result."""
    doc = apply_overrides(_to_document(defaults), overrides)
    unknown = sorted(set(doc) - set(defaults))
    if unknown:
        raise ConfigError(f"unknown parameter; expected one of {sorted(defaults)}", unknown[0])
    return {key: _coerce(key, doc[key], defaults[key]) for key in defaults}


def _comb_extents(teeth: int) -> Tuple[int, int]:
    if teeth < 1:
        raise ConfigError(f"a comb needs at least one tooth, got {teeth}", "teeth")
    below = (teeth - 1) // 2
    return below, teeth - 1 - below


def _label(value: float) -> str:
    return f"{value:g}".replace(".", "p")


def _run_fig2(params: Params, out_dir: str, formatter: Formatter, seed: Optional[int]) -> FigureResult:
    result = FigureResult("fig2", params)
    alpha = math.sqrt(params["alpha2"])
    n_max = params["n_max"]
    g = params["g_qu"]

    photon = make_coherent(alpha, n_max)
    electron = embed(make_delta(0), default_window(n_max))
    kernel = build_kernel(g, n_max)
    joint = evolve_pure(JointPure.product(electron, photon), kernel)

    result.files.append(formatter.write_jointmap(os.path.join(out_dir, "jointmap.csv"), joint))
    result.files.append(
        formatter.write_spectrum(
            os.path.join(out_dir, "electron_spectrum.csv"),
            joint.ks,
            joint.electron_marginal(),
            joint.leakage,
        )
    )

    for k in params["slices"]:
        state, probability = joint.slice(k)
        reference = postselected_photon_state(alpha, g, k, n_max, allow_truncation=True)
        deviation = float(np.max(np.abs(state.amps - reference.amps)))
        name = f"slice_k{k:+d}.csv"
        result.files.append(
            formatter.write_snapshot(
                os.path.join(out_dir, name),
                state,
                extra={"k": k, "probability": probability, "closed_form_deviation": deviation},
            )
        )
        stats = summarize(np.abs(state.amps) ** 2)
        result.summary += [
            (f"P(k={k:+d})", probability),
            (f"<n> | k={k:+d}", stats.mean_n),
            (f"closed-form deviation k={k:+d}", deviation),
        ]

    result.summary.insert(0, ("leakage", joint.leakage))
    return result


def _run_fig3(params: Params, out_dir: str, formatter: Formatter, seed: Optional[int]) -> FigureResult:
    result = FigureResult("fig3", params)
    base_seed = 0 if seed is None else seed
    trajectories = run_fock_builder_ensemble(
        params["g_qu"],
        params["n_goal"],
        params["runs"],
        base_seed,
        n_max=params["n_max"],
        max_steps=params["max_steps"],
        jobs=params["jobs"],
    )

    rows = [
        (index, base_seed + index, t.metadata["hitting_step"], t.metadata["final_n"], t.complete)
        for index, t in enumerate(trajectories)
    ]
    result.files.append(
        formatter.write_rows(
            os.path.join(out_dir, "hitting_steps.csv"),
            ("run", "seed", "hitting_step", "final_n", "complete"),
            rows,
        )
    )

    hits = np.array([t.hitting_step for t in trajectories if t.complete], dtype=float)
    if hits.size:
        edges = np.arange(0, hits.max() + 11, 10)
        counts, edges = np.histogram(hits, bins=edges)
        result.files.append(
            formatter.write_rows(
                os.path.join(out_dir, "hitting_histogram.csv"),
                ("bin_lo", "bin_hi", "count"),
                ((int(lo), int(hi), int(c)) for lo, hi, c in zip(edges[:-1], edges[1:], counts)),
            )
        )

    if trajectories:
        result.files.append(
            formatter.write_trajectory(
                os.path.join(out_dir, "fock_trajectory.csv"),
                trajectories[0],
                extra_columns=("expected_n",),
                extra={"run": 0},
            )
        )

    result.complete = all(t.complete for t in trajectories)
    result.summary += [
        ("runs", len(trajectories)),
        ("completed", int(hits.size)),
        ("mean hitting step", float(hits.mean()) if hits.size else None),
        ("std hitting step", float(hits.std()) if hits.size else None),
        ("mean-process estimate", params["n_goal"] / abs(params["g_qu"]) ** 2 if params["g_qu"] else None),
    ]
    return result


def _run_fig4(params: Params, out_dir: str, formatter: Formatter, seed: Optional[int]) -> FigureResult:
    result = FigureResult("fig4", params)
    sweep = params["alpha2"]
    for alpha2 in sweep:
        suffix = "" if len(sweep) == 1 else f"_alpha2_{_label(alpha2)}"
        initial = make_coherent(math.sqrt(alpha2), params["n_max"])
        trajectory = run_scenario(
            initial, [StepPolicy()], params["n_steps"], coupling=params["g_qu"]
        )
        converged = detect_thermal_convergence(
            trajectory, params["convergence_rel_tol"], params["convergence_window"]
        )
        extra = {"alpha2": alpha2, "converged_step": converged}
        result.files.append(
            formatter.write_trajectory(os.path.join(out_dir, f"trajectory{suffix}.csv"), trajectory, extra=extra)
        )
        result.files.append(
            formatter.write_snapshot(
                os.path.join(out_dir, f"state_snapshot{suffix}.csv"), trajectory.final_state, extra=extra
            )
        )
        final = trajectory.records[-1]
        result.summary += [
            (f"|alpha|^2={alpha2:g}: <n>", final.mean_n),
            (f"|alpha|^2={alpha2:g}: Mandel Q", final.mandel_q),
            (f"|alpha|^2={alpha2:g}: theta", final.theta),
            (f"|alpha|^2={alpha2:g}: fit r^2", final.theta_r2),
            (f"|alpha|^2={alpha2:g}: converged at", converged),
        ]
    return result


def fig5_n_max(alpha2: float, g_qu: complex, n_steps: int) -> int:
    """Truncation covering the displaced coherent state after n_steps comb electrons."""
    final = math.sqrt(alpha2) + n_steps * abs(g_qu)
    reach = final**2 + 8.0 * final
    margin = 8.0 * abs(g_qu) * (math.sqrt(reach) + 1.0)
    return max(256, int(math.ceil(reach + margin)) + 8)


def _run_fig5(params: Params, out_dir: str, formatter: Formatter, seed: Optional[int]) -> FigureResult:
    result = FigureResult("fig5", params)
    g = params["g_qu"]
    n_max = params["n_max"] or fig5_n_max(params["alpha2"], g, params["n_steps"])
    initial = make_coherent(math.sqrt(params["alpha2"]), n_max)
    sweep = params["comb_lengths"]

    rows = []
    for teeth in sweep:
        K, K_prime = _comb_extents(teeth)
        policy = StepPolicy(electron=ElectronSpec.comb(K, K_prime, params["beta"]))
        trajectory = run_scenario(
            initial, [policy], params["n_steps"], coupling=g, ensemble=params["ensemble"]
        )
        slope = growth_slope(trajectory.column("eff_alpha")) if len(trajectory) > 1 else None
        max_q = float(np.nanmax(trajectory.column("mandel_q")))
        suffix = "" if len(sweep) == 1 else f"_comb{teeth}"
        result.files.append(
            formatter.write_trajectory(
                os.path.join(out_dir, f"trajectory{suffix}.csv"),
                trajectory,
                extra={"teeth": teeth, "n_max": n_max},
            )
        )
        rows.append((teeth, slope, max_q, trajectory.records[-1].mean_n, trajectory.leakage_total))
        result.summary += [
            (f"{teeth} teeth: alpha slope", slope),
            (f"{teeth} teeth: max Mandel Q", max_q),
        ]

    result.files.append(
        formatter.write_rows(
            os.path.join(out_dir, "comb_sweep.csv"),
            ("teeth", "alpha_slope", "max_mandel_q", "final_mean_n", "leakage"),
            rows,
            extra={"n_max": n_max},
        )
    )
    result.summary.insert(0, ("expected slope |g_qu|", abs(g)))
    return result


def _run_fig6(params: Params, out_dir: str, formatter: Formatter, seed: Optional[int]) -> FigureResult:
    result = FigureResult("fig6", params)
    K, K_prime = _comb_extents(params["teeth"])

    rows = []
    for n_i in params["n_i"]:
        trajectory = run_displaced_fock(
            n_i,
            params["g_qu"],
            params["beta"],
            K,
            K_prime,
            params["n_steps"],
            n_max=params["n_max"],
            ensemble=params["ensemble"],
        )
        final = trajectory.records[-1].distribution
        target = trajectory.metadata["target_distribution"]
        fidelity = trajectory.metadata["fidelity"]
        peaks = peak_count(final)
        result.files.append(
            formatter.write_rows(
                os.path.join(out_dir, f"displaced_fock_n{n_i}.csv"),
                ("n", "probability", "target_probability"),
                ((n, final[n], target[n]) for n in range(final.size)),
                trajectory.leakage_total,
                extra={"n_i": n_i, "alpha": trajectory.metadata["alpha"]},
            )
        )
        rows.append((n_i, fidelity, peaks, peak_count(target)))
        result.summary += [(f"n_i={n_i}: fidelity", fidelity), (f"n_i={n_i}: peaks", peaks)]

    result.files.append(
        formatter.write_rows(
            os.path.join(out_dir, "displaced_fock_summary.csv"),
            ("n_i", "fidelity", "peak_count", "target_peak_count"),
            rows,
        )
    )
    return result


def _scale_fig3(params: Params, scale: float) -> None:
    params["n_goal"] = max(1, int(round(params["n_goal"] * scale)))


def _scale_fig4(params: Params, scale: float) -> None:
    params["n_steps"] = int(round(params["n_steps"] * scale))


def _scale_fig5(params: Params, scale: float) -> None:
    params["alpha2"] = params["alpha2"] * scale


def _no_scale(params: Params, scale: float) -> None:
    pass


@dataclass(frozen=True)
class FigureRecipe:
    defaults: Params
    apply_scale: Callable[[Params, float], None]
    run: Callable[[Params, str, Formatter, Optional[int]], FigureResult]
    default_scale: float = 1.0
    steps_key: Optional[str] = None
    sampled: bool = False


FIGURES: Dict[str, FigureRecipe] = {
    "fig2": FigureRecipe(FIG2_DEFAULTS, _no_scale, _run_fig2),
    "fig3": FigureRecipe(FIG3_DEFAULTS, _scale_fig3, _run_fig3, steps_key="max_steps", sampled=True),
    "fig4": FigureRecipe(FIG4_DEFAULTS, _scale_fig4, _run_fig4, steps_key="n_steps"),
    "fig5": FigureRecipe(FIG5_DEFAULTS, _scale_fig5, _run_fig5, default_scale=0.1, steps_key="n_steps"),
    "fig6": FigureRecipe(FIG6_DEFAULTS, _no_scale, _run_fig6, steps_key="n_steps"),
}


def run_figure(
    name: str,
    out_dir: str,
    scale: Optional[float] = None,
    overrides: Sequence[str] = (),
    seed: Optional[int] = None,
    steps: Optional[int] = None,
    runs: Optional[int] = None,
    jobs: Optional[int] = None,
) -> FigureResult:
    """Run one figure scenario and write its CSV files into out_dir.

    Precedence, lowest first: figure defaults, scale, --steps/--runs/--jobs,
    key=value overrides.
    """
    if name not in FIGURES:
        raise ConfigError(f"unknown figure '{name}', expected one of {sorted(FIGURES)}")
    recipe = FIGURES[name]
    scale = recipe.default_scale if scale is None else scale
    if not 0 < scale <= 1:
        raise ConfigError(f"scale must lie in (0, 1], got {scale}", "scale")

    params = dict(recipe.defaults)
    recipe.apply_scale(params, scale)
    shortcuts: List[str] = []
    if steps is not None:
        if recipe.steps_key is None:
            raise ConfigError(f"{name} has no step count", "steps")
        shortcuts.append(f"{recipe.steps_key}={steps}")
    if runs is not None:
        if "runs" not in params:
            raise ConfigError(f"{name} has no run count", "runs")
        shortcuts.append(f"runs={runs}")
    if jobs is not None and "jobs" in params:
        shortcuts.append(f"jobs={jobs}")
    params = resolve_params(params, [*shortcuts, *overrides])

    if recipe.sampled and seed is None:
        seed = 0
    echo = {"figure": name, "scale": scale, **_to_document(params)}
    echo.pop("jobs", None)
    formatter = Formatter(echo, seed=seed if recipe.sampled else None)

    os.makedirs(out_dir, exist_ok=True)
    logger.info("Running %s at scale %g", name, scale)
    return recipe.run(params, out_dir, formatter, seed)


__all__ = [
    "FIG2_DEFAULTS",
    "FIG3_DEFAULTS",
    "FIG4_DEFAULTS",
    "FIG5_DEFAULTS",
    "FIG6_DEFAULTS",
    "FIGURES",
    "FigureRecipe",
    "FigureResult",
    "fig5_n_max",
    "resolve_params",
    "run_figure",
]
