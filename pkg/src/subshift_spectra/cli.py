"""Command-line front end with bit-stable artifact output.

One JSON config file drives every command; identical config + seed yields
byte-identical artifacts (sorted JSON keys, canonical float formatting, no
timestamps).  Exit codes: 0 success, 1 a verification-style check failed,
2 configuration or usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path
from typing import Any

from . import __version__
from .bands import BandComputationError, periodic_bands
from .experiments import (
    AdzRun,
    ComplexityGrowth,
    DecayTable,
    RetentionError,
    SandwichSuite,
    adz_construct,
    complexity_growth_check,
    decay_sweep,
    scaled_product_suite,
)
from .intervals import IntervalSet, interval_algebra
from .tower import (
    Constants,
    ExclusionReport,
    ParamSchedule,
    ScheduleError,
    TowerResult,
    tower_pipeline,
)
from .words import (
    AdzStages,
    Periodic,
    Potential,
    Sample,
    SubshiftSpec,
    Substitution,
    complexity,
    run_stats,
    sample_word,
)

COMMANDS = ("words", "spectrum", "measure", "decay", "adz", "tower", "verify")


class ConfigError(ValueError):
    """Invalid or incomplete run configuration."""


# ---------------------------------------------------------------------------
# Canonical formatting


def fmt_num(x) -> str:
    """Shortest unambiguous decimal: integers without a trailing .0."""
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, int):
        return str(x)
    v = float(x)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if v.is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _sanitize(obj):
    """Make an object JSON-safe and deterministic (inf/nan become strings)."""
    if isinstance(obj, dict):
        return {str(k): _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, (int, str)) or obj is None:
        return obj
    if isinstance(obj, float):
        if math.isnan(obj) or math.isinf(obj):
            return fmt_num(obj)
        return obj
    if hasattr(obj, "item"):  # numpy scalar
        return _sanitize(obj.item())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def canonical_json(obj) -> str:
    return json.dumps(_sanitize(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def config_hash(config: dict) -> str:
    payload = json.dumps(_sanitize(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def write_json(path: Path, obj) -> None:
    path.write_text(canonical_json(obj), encoding="utf-8", newline="\n")


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    lines += [",".join(fmt_num(v) if not isinstance(v, str) else v for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def intervals_csv(path: Path, iv: IntervalSet) -> None:
    write_csv(path, ["lo", "hi"], [[lo, hi] for lo, hi in iv])


def read_intervals_csv(path: Path) -> IntervalSet:
    lines = path.read_text(encoding="utf-8").strip().splitlines()
    pairs = []
    for line in lines[1:]:  # skip header
        lo, hi = line.split(",")
        pairs.append((float(lo), float(hi)))
    return IntervalSet.from_pairs(pairs, merge_tol=0.0)


# ---------------------------------------------------------------------------
# Config parsing


class RunConfig:
    """Validated view of the JSON config file."""

    def __init__(self, raw: dict):
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        self.raw = raw
        self.seed = int(raw.get("seed", 20260809))
        self.gamma = float(raw.get("gamma", 0.1))
        self.gamma_prime = float(raw.get("gamma_prime", 0.2))
        self.c = float(raw.get("c", 1.0))
        self.grid = int(raw.get("grid", 2049))
        self.refine_tol = float(raw.get("refine_tol", 1e-7))
        for name in ("refine_tol",):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        c_raw = raw.get("C", None)
        self.consts = Constants(
            H=float(raw.get("H", 3.0)),
            cone_gap=float(raw.get("cone_gap", 3.0)),
            cone_eps=float(raw.get("cone_eps", 0.5)),
            P=int(raw.get("P", 3)),
            C=None if c_raw is None else float(c_raw),
            C_prime=float(raw.get("C_prime", 0.1)),
            C2=float(raw.get("C2", 1.0)),
            c_slack=float(raw.get("c_slack", 100.0)),
            K_max=int(raw.get("K_max", 64)),
        )

    def section(self, name: str) -> dict:
        sec = self.raw.get(name)
        if not isinstance(sec, dict):
            raise ConfigError(f"config section {name!r} is required for this command")
        return sec

    def potential(self) -> Potential:
        sec = self.raw.get("potential")
        if not isinstance(sec, dict) or not sec:
            raise ConfigError("config needs a 'potential' object of letter -> value")
        try:
            return Potential({str(k): float(v) for k, v in sec.items()})
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def subshift(self) -> SubshiftSpec:
        sec = self.raw.get("subshift")
        if not isinstance(sec, dict):
            raise ConfigError("config needs a 'subshift' object")
        kind = sec.get("kind")
        try:
            if kind == "periodic":
                return Periodic(str(sec["word"]))
            if kind == "substitution":
                rules = {str(k): str(v) for k, v in sec["rules"].items()}
                return Substitution(rules, str(sec["seed_letter"]))
            if kind == "adz_stages":
                return AdzStages(tuple(tuple(str(w) for w in st) for st in sec["stages"]))
            if kind == "sample":
                return Sample(str(sec["word"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad subshift spec: {exc}") from exc
        raise ConfigError(f"unknown subshift kind {kind!r}")


def load_config(path: str | Path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return RunConfig(raw)


# ---------------------------------------------------------------------------
# Serialization of results


def _meta(cfg: RunConfig) -> dict:
    return {
        "tool_version": __version__,
        "config_sha256": config_hash(cfg.raw),
        "seed": cfg.seed,
        "config": cfg.raw,
    }


def _iv(iv: IntervalSet) -> list[list[float]]:
    return [[lo, hi] for lo, hi in iv]


def schedule_dict(s: ParamSchedule) -> dict:
    return {
        "gamma": s.gamma,
        "gamma_prime": s.gamma_prime,
        "c": s.c,
        "xi": s.xi,
        "lam": s.lam,
        "C": s.c_value,
        "P": s.consts.P,
        "warnings": s.warnings,
        "levels": {
            str(lv.n): {
                "N": lv.N,
                "eta": lv.eta,
                "kappa": lv.kappa,
                "log_kappa": lv.log_kappa,
                "chi": lv.chi,
                "log_lam_bar": lv.log_lam_bar,
                "lam_bar": lv.lam_bar,
                "M": lv.M,
                "zeta": s.zeta(lv.n),
                "log_zeta": s.log_zeta(lv.n),
                "inf_l": lv.inf_l,
                "sup_l": lv.sup_l,
            }
            for lv in s.levels
        },
        "checks": [
            {"name": c.name, "ok": c.ok, "required": c.required, "detail": c.detail}
            for c in s.check_invariants()
        ],
    }


def exclusion_dict(r: ExclusionReport) -> dict:
    return {
        "level": r.level,
        "kappa": r.kappa,
        "interval": list(r.interval),
        "grid": r.grid,
        "refine_tol": r.refine_tol,
        "triples": [
            {
                "alpha": t.alpha,
                "beta": t.beta,
                "j": t.j,
                "intervals": _iv(t.intervals),
                "measure": t.measure,
                "c1_hat": t.c1_hat,
                "c5_hat": t.c5_hat,
            }
            for t in r.triples
        ],
        "Jn": _iv(r.j_set),
        "measure": r.measure,
        "C1_hat": r.c1_hat,
        "C5_hat": r.c5_hat,
        "warnings": r.warnings,
    }


def tower_dicts(res: TowerResult) -> dict[str, dict]:
    struct = {
        "alpha0": res.alpha0,
        "levels": {
            str(lv.index): {
                "n_entries": len(lv.entries),
                "alphabet": [{"run": e.run, "core": e.core} for e in lv.alphabet],
                "inf_l": lv.inf_l,
                "sup_l": lv.sup_l,
                "group_arity": lv.group_arity,
            }
            for lv in res.structure.levels
        },
    }
    accel = res.accel
    accel_d = {
        "level": accel.level,
        "r_max": accel.r_max,
        "n_energies": len(accel.energies),
        "energies": accel.energies,
        "n_windows": accel.n_windows,
        "n_checks": accel.n_checks,
        "hyper_violations": accel.hyper_violations,
        "drift_failures": accel.drift_failures,
        "growth_chi_failures": accel.growth_chi_failures,
        "growth_product_failures": accel.growth_product_failures,
        "block_floor_failures": accel.block_floor_failures,
        "worst_drift": accel.worst_drift,
        "worst_growth_margin": accel.worst_growth_margin,
        "block_chi_rate": accel.block_chi_rate,
        "zeta": accel.zeta,
        "chi_next": accel.chi_next,
        "all_passed": accel.all_passed,
    }
    cov = res.covering
    cov_d = {
        "approx_measure": cov.approx_measure,
        "residue": cov.residue,
        "residue_fraction": cov.residue_fraction,
        "covered": cov.covered,
        "dilation": cov.dilation,
        "jbar_measure": cov.jbar_measure,
        "c3_hat": cov.c3_hat,
        "interval": list(res.interval),
    }
    return {
        "structure": struct,
        "schedule": schedule_dict(res.schedule),
        "exclusions": {str(r.level): exclusion_dict(r) for r in res.exclusions},
        "acceleration": accel_d,
        "covering": cov_d,
    }


def decay_dicts(table: DecayTable) -> tuple[dict, list[list]]:
    d = {
        "rows": [
            {"lam": r.lam, "factor_len": r.factor_len, "measure": r.measure}
            for r in table.rows
        ],
        "e0_letter": table.e0_letter,
        "H": table.h,
        "slope": table.slope,
        "gamma_hat": table.gamma_hat,
        "residual": table.residual,
        "degenerate": table.degenerate,
        "note": table.note,
    }
    rows = [[r.lam, r.factor_len, r.measure] for r in table.rows]
    return d, rows


def adz_dicts(run: AdzRun, growth: ComplexityGrowth | None) -> dict:
    d = {
        "eps": run.eps,
        "potential": dict(run.pot.values),
        "sigma1_measure": run.sigma1_measure,
        "final_measure": run.final_measure,
        "retained_half": run.retained_half,
        "stages": [
            {
                "index": st.index,
                "n_words": len(st.words),
                "max_word_len": max(len(w) for w in st.words),
                "words": st.words,
                "bands": _iv(st.bands),
                "band_measure": st.bands.measure,
                "chosen_N": st.chosen_n,
                "deficit": st.deficit,
                "budget": st.budget,
            }
            for st in run.stages
        ],
        "search_trace": [
            {"stage": s, "N": n, "deficit": d} for s, n, d in run.searched
        ],
    }
    if growth is not None:
        d["complexity"] = {
            "anchor_len": growth.anchor_len,
            "C_hat": growth.c_hat,
            "exponent": growth.exponent,
            "rows": [{"L": L, "p": p, "bound": b} for L, p, b in growth.rows],
            "within_bound": growth.within_bound,
        }
    return d


def suite_dict(s: SandwichSuite) -> dict:
    return {
        "trials": s.trials,
        "tested": s.tested,
        "excluded": s.excluded,
        "C0": s.c0,
        "c_slack": s.c_slack,
        "seed": s.seed,
        "growth_failures": s.growth_failures,
        "drift_failures": s.drift_failures,
        "non_hyperbolic": s.non_hyperbolic,
        "worst_growth_ratio": s.worst_growth_ratio,
        "worst_drift_over_ceiling": s.worst_drift_over_ceiling,
        "all_passed": s.all_passed,
    }


# ---------------------------------------------------------------------------
# Command implementations


def _run_words(cfg: RunConfig, out: Path, log) -> int:
    sec = cfg.section("words")
    spec = cfg.subshift()
    sample_len = int(sec.get("sample_len", 1024))
    sample = sample_word(spec, sample_len)
    (out / "sample.txt").write_text(sample + "\n", encoding="utf-8", newline="\n")
    lengths = [int(n) for n in sec.get("complexity_lengths", [1, 2, 4, 8, 16])]
    rows = [[n, complexity(spec, n, sample_len)] for n in lengths]
    write_csv(out / "complexity.csv", ["n", "p"], rows)
    alphabet = sec.get("alphabet")
    stats = run_stats(spec, sample_len, alphabet)
    write_json(
        out / "run_stats.json",
        {"max_run": stats.max_run, "window": stats.window, **_meta(cfg)},
    )
    log(f"words: sample of {sample_len} letters, p({lengths[-1]}) = {rows[-1][1]}")
    return 0


def _run_spectrum(cfg: RunConfig, out: Path, log) -> int:
    sec = cfg.section("spectrum")
    word = str(sec.get("word", ""))
    if not word:
        raise ConfigError("spectrum.word is required")
    pot = cfg.potential()
    bands = periodic_bands(word, pot)
    intervals_csv(out / "bands.csv", bands)
    edges = [x for pair in bands for x in pair]
    write_json(
        out / "spectrum.json",
        {"word": word, "edges": edges, "measure": bands.measure, **_meta(cfg)},
    )
    log(f"spectrum: {len(bands)} band(s), measure {bands.measure:.6g}")
    return 0


def _run_measure(cfg: RunConfig, out: Path, log) -> int:
    sec = cfg.section("measure")
    op = str(sec.get("op", ""))
    x = read_intervals_csv(Path(sec["x"]))
    y_raw = sec.get("y")
    y: Any
    if op == "dilate":
        y = float(y_raw)
    elif op == "measure":
        y = None
    else:
        y = read_intervals_csv(Path(y_raw))
    result = interval_algebra(op, x, y) if op != "measure" else x.measure
    payload = {"op": op, **_meta(cfg)}
    if isinstance(result, IntervalSet):
        intervals_csv(out / "result.csv", result)
        payload.update({"intervals": _iv(result), "measure": result.measure})
    else:
        payload["result"] = result
    write_json(out / "result.json", payload)
    log(f"measure: {op} -> {payload.get('measure', payload.get('result'))}")
    return 0


def _run_decay(cfg: RunConfig, out: Path, log) -> int:
    sec = cfg.section("decay")
    spec = cfg.subshift()
    v_base = cfg.potential()
    table = decay_sweep(
        spec,
        v_base,
        [float(x) for x in sec["lam_list"]],
        int(sec.get("factor_len", 13)),
        str(sec.get("e0_letter", "a")),
        float(cfg.consts.H),
        int(sec.get("sample_len", 4096)),
    )
    d, rows = decay_dicts(table)
    write_csv(out / "decay.csv", ["lam", "factor_len", "measure"], rows)
    write_json(out / "decay.json", {**d, **_meta(cfg)})
    log(f"decay: measures {[f'{m:.3e}' for m in table.measures]}, gamma_hat={table.gamma_hat}")
    return 0


def _run_adz(cfg: RunConfig, out: Path, log) -> int:
    sec = cfg.section("adz")
    pot = cfg.potential()
    run = adz_construct(
        int(sec.get("k", 2)),
        float(sec.get("eps", 0.5)),
        pot,
        int(sec.get("stages", 3)),
        int(sec.get("n_cap", 10000)),
        int(sec.get("n_floor", 4)),
        int(sec.get("max_word_len", 2048)),
    )
    growth = None
    if "complexity_l_max" in sec:
        growth = complexity_growth_check(
            run,
            float(sec.get("eps", 0.5)),
            int(sec["complexity_l_max"]),
            int(sec.get("complexity_sample_len", 8192)),
        )
    for st in run.stages:
        (out / f"stage_{st.index}.txt").write_text(
            "\n".join(st.words) + "\n", encoding="utf-8", newline="\n"
        )
    write_csv(
        out / "adz.csv",
        ["stage", "n_words", "max_word_len", "band_measure", "chosen_N", "deficit", "budget"],
        [
            [
                st.index,
                len(st.words),
                max(len(w) for w in st.words),
                st.bands.measure,
                st.chosen_n if st.chosen_n is not None else "",
                st.deficit if st.deficit is not None else "",
                st.budget if st.budget is not None else "",
            ]
            for st in run.stages
        ],
    )
    write_json(out / "adz.json", {**adz_dicts(run, growth), **_meta(cfg)})
    log(
        f"adz: {len(run.stages)} stages, final measure {run.final_measure:.6g} "
        f"(half of stage 1: {0.5 * run.sigma1_measure:.6g})"
    )
    ok = run.retained_half and (growth is None or growth.within_bound)
    return 0 if ok else 1


def _tower_result(cfg: RunConfig) -> TowerResult:
    sec = cfg.section("tower")
    return tower_pipeline(
        cfg.subshift(),
        cfg.potential(),
        str(sec.get("alpha0", "a")),
        gamma=cfg.gamma,
        gamma_prime=cfg.gamma_prime,
        c=cfg.c,
        consts=cfg.consts,
        levels=int(sec.get("levels", 1)),
        sample_len=int(sec.get("sample_len", 650)),
        grid=cfg.grid,
        refine_tol=cfg.refine_tol,
        approx_len=int(sec.get("approx_len", 13)),
        approx_sample_len=int(sec.get("approx_sample_len", 1024)),
        accel_energies=int(sec.get("accel_energies", 64)),
        accel_r_max=int(sec.get("accel_r_max", 5)),
    )


def _write_tower(cfg: RunConfig, out: Path, res: TowerResult) -> dict[str, dict]:
    parts = tower_dicts(res)
    meta = _meta(cfg)
    write_json(out / "structure.json", {**parts["structure"], **meta})
    write_json(out / "schedule.json", {**parts["schedule"], **meta})
    for lvl, d in parts["exclusions"].items():
        write_json(out / f"exclusion_level_{lvl}.json", {**d, **meta})
    intervals_csv(out / "jbar.csv", res.jbar)
    return parts


def _run_tower(cfg: RunConfig, out: Path, log) -> int:
    res = _tower_result(cfg)
    _write_tower(cfg, out, res)
    required_fails = [c for c in res.schedule.failed_checks() if c.required]
    log(
        f"tower: {len(res.schedule.levels)} levels, Jbar measure {res.jbar.measure:.6g}, "
        f"{len(required_fails)} required check failure(s)"
    )
    return 1 if required_fails else 0


def _run_verify(cfg: RunConfig, out: Path, log) -> int:
    res = _tower_result(cfg)
    parts = _write_tower(cfg, out, res)
    meta = _meta(cfg)
    write_json(out / "acceleration.json", {**parts["acceleration"], **meta})
    write_json(out / "covering.json", {**parts["covering"], **meta})

    sec = cfg.raw.get("suite", {})
    suite = scaled_product_suite(
        int(sec.get("trials", 10000)),
        float(sec.get("c0", 10.0)),
        [float(x) for x in sec.get("lam_floors", [1000.0])],
        cfg.seed,
        cfg.consts.c_slack,
    )
    write_json(out / "suite.json", {**suite_dict(suite), **meta})

    max_residue = float(cfg.raw.get("tower", {}).get("covering_max_residue_fraction", 1e-3))
    required_fails = [c for c in res.schedule.failed_checks() if c.required]
    ok = (
        not required_fails
        and res.accel.all_passed
        and suite.all_passed
        and res.covering.residue_fraction <= max_residue
    )
    log(
        "verify: "
        f"accel {'ok' if res.accel.all_passed else 'FAIL'}, "
        f"covering residue_fraction {res.covering.residue_fraction:.3e}, "
        f"suite {'ok' if suite.all_passed else 'FAIL'}"
    )
    return 0 if ok else 1


RUNNERS = {
    "words": _run_words,
    "spectrum": _run_spectrum,
    "measure": _run_measure,
    "decay": _run_decay,
    "adz": _run_adz,
    "tower": _run_tower,
    "verify": _run_verify,
}


# ---------------------------------------------------------------------------
# Entry point


def dispatch(command: str, cfg: RunConfig, out_dir: str | Path, quiet: bool = False) -> int:
    """Run one command against a parsed config, writing artifacts to ``out_dir``."""
    if command not in RUNNERS:
        raise ConfigError(f"unknown command {command!r}; choose from {', '.join(COMMANDS)}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def log(msg: str) -> None:
        if not quiet:
            print(msg)

    return RUNNERS[command](cfg, out, log)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="subshift-spectra",
        description="Spectra of Schrodinger operators with subshift potentials",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON config file")
    parser.add_argument("--out", default="out", help="output directory (default: out)")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--threads", type=int, default=None, help="worker hint (advisory)")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.raw["seed"] = args.seed
            cfg.seed = args.seed
        return dispatch(args.command, cfg, args.out, args.quiet)
    except (ConfigError, ScheduleError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (RetentionError, BandComputationError, RuntimeError) as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
