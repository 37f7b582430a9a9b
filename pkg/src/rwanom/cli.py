"""Command-line interface.

Subcommands cover the full loop: generate telemetry, extract features, train
and evaluate the classifier, perturb a series, verify reachability queries,
run local-robustness sweeps, certify global class regions, and render report
figures.  Exit codes: 0 success, 1 domain failure (bad data, calibration or
protocol errors), 2 command-line usage errors.

Numeric defaults of the generator, pipeline, trainer, and sweep protocol can
be overridden from an INI file given with ``--config``::

    [generator]
    n_samples = 2400
    noise_sigma = 0.008

    [spin]
    shape = sinusoid
    amplitude = 150

    [pipeline]
    window_size = 50

    [train]
    epochs = 300

    [protocol]
    anomaly_count = 60

Explicit command-line flags take precedence over the INI file.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import re
import sys
import typing
from pathlib import Path

import numpy as np

from . import formats, mlp, perturb, plots, robustness
from .classifier import (classify_series, evaluate, fit_bundle, load_bundle,
                         save_bundle, split_train_eval)
from .lp import LinearConstraint
from .pipeline import PipelineConfig, run_pipeline
from .telemetry import (GenConfig, SpinProfile, Status, default_mix,
                        generate_dataset)
from .verifier import InputRegion, verify_local_robustness, verify_query


class CliError(ValueError):
    """Bad input that is the caller's fault (reported, exit code 1)."""


# ---------------------------------------------------------------------------
# INI run configuration


def _load_ini(path: str | Path) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise CliError(f"cannot read config {path}: {exc}") from exc
    return {name: dict(parser.items(name)) for name in parser.sections()}


def _coerce(raw: str, typ: type, key: str):
    origin = typing.get_origin(typ)
    if origin is tuple:
        parts = raw.replace(",", " ").split()
        return tuple(float(p) for p in parts)
    if typ is bool:
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise CliError(f"config key {key}: {raw!r} is not a boolean")
    if typ in (int, float, str):
        try:
            return typ(raw)
        except ValueError as exc:
            raise CliError(f"config key {key}: {exc}") from exc
    raise CliError(f"config key {key} cannot be set from INI")


def _apply_section(instance, section: dict[str, str] | None, name: str):
    """A dataclass copy with the INI section's scalar overrides applied."""
    if not section:
        return instance
    hints = typing.get_type_hints(type(instance))
    updates = {}
    for key, raw in section.items():
        if key not in hints:
            valid = ", ".join(f.name for f in dataclasses.fields(instance))
            raise CliError(f"unknown [{name}] key {key!r} (expect: {valid})")
        updates[key] = _coerce(raw, hints[key], f"[{name}] {key}")
    try:
        return dataclasses.replace(instance, **updates)
    except (TypeError, ValueError) as exc:
        raise CliError(f"invalid [{name}] values: {exc}") from exc


def _pipeline_doc(cfg: PipelineConfig) -> dict:
    return {
        "window_size": cfg.window_size,
        "residual_threshold": cfg.residual_threshold,
        "min_interval": cfg.min_interval,
        "pair_match_tol": cfg.pair_match_tol,
        "pair_match_max_gap": cfg.pair_match_max_gap,
        "n_bins": cfg.n_bins,
        "bin_range": list(cfg.bin_range),
    }


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_gen(args) -> int:
    ini = _load_ini(args.config) if args.config else {}
    config = GenConfig()
    config = dataclasses.replace(
        config, spin=_apply_section(SpinProfile(), ini.get("spin"), "spin"))
    config = _apply_section(config, ini.get("generator"), "generator")
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    if args.status is not None:
        Status.from_label(args.status)  # validates the label
        mix = {args.status: args.count if args.count is not None else 1}
    elif args.count is not None:
        raise CliError("--count requires --status")
    else:
        mix = default_mix()
        if args.scale != 1.0:
            if args.scale <= 0:
                raise CliError("--scale must be positive")
            mix = {label: max(1, int(round(count * args.scale)))
                   for label, count in mix.items()}
    items = generate_dataset(config, mix)
    formats.write_dataset(args.out, items, config.seed,
                          generator_params=dataclasses.asdict(config))
    print(f"wrote {len(items)} series to {args.out}")
    return 0


def _cmd_process(args) -> int:
    ini = _load_ini(args.config) if args.config else {}
    cfg = _apply_section(PipelineConfig(), ini.get("pipeline"), "pipeline")
    items = formats.load_dataset(args.data)
    rows = []
    for series_id, series, status in items:
        summary = run_pipeline(series, cfg)
        rows.append({
            "id": series_id,
            "status": status.label,
            "mean_dry": summary.mean_dry,
            "mean_visc": summary.mean_visc,
            "n_intervals": len(summary.estimates),
            "n_matched_pairs": len(summary.matched_increases),
            "n_unmatched": len(summary.unmatched_magnitudes),
            "hist_pairs": [float(b) for b in summary.hist_pairs.bins],
            "hist_jumps": [float(b) for b in summary.hist_jumps.bins],
        })
    formats.write_json(args.out, {
        "format": "rwanom-features-v1",
        "pipeline": _pipeline_doc(cfg),
        "series": rows,
    })
    print(f"processed {len(rows)} series -> {args.out}")
    return 0


def _cmd_train(args) -> int:
    ini = _load_ini(args.config) if args.config else {}
    base_cfg = _apply_section(PipelineConfig(), ini.get("pipeline"),
                              "pipeline")
    train_cfg = _apply_section(mlp.TrainConfig(), ini.get("train"), "train")
    items = formats.load_dataset(args.data)
    train_items, eval_items = split_train_eval(items, args.train_fraction,
                                               args.seed)
    pair_cfg = dataclasses.replace(train_cfg, seed=args.seed * 2 + 1)
    jump_cfg = dataclasses.replace(train_cfg, seed=args.seed * 2 + 2)
    bundle = fit_bundle(train_items, base_config=base_cfg,
                        pair_train=pair_cfg, jump_train=jump_cfg,
                        seed=args.seed)
    meta = {
        "format": "rwanom-train-meta-v1",
        "seed": args.seed,
        "train_fraction": args.train_fraction,
        "train_ids": [int(i) for i, _, _ in train_items],
        "eval_ids": [int(i) for i, _, _ in eval_items],
    }
    save_bundle(bundle, args.out, meta)
    print(f"trained on {len(train_items)} series "
          f"({len(eval_items)} held out) -> {args.out}")
    return 0


def _held_out_items(items, meta: dict, subset: str):
    train_ids = set(meta.get("train_ids", []))
    if subset == "all" or not train_ids:
        return items
    if subset == "train":
        return [it for it in items if it[0] in train_ids]
    return [it for it in items if it[0] not in train_ids]


def _cmd_eval(args) -> int:
    bundle, meta = load_bundle(args.bundle)
    items = _held_out_items(formats.load_dataset(args.data), meta,
                            args.subset)
    if not items:
        raise CliError(f"no series in subset {args.subset!r}")
    pairs = []
    mistakes = []
    for series_id, series, status in items:
        predicted = classify_series(series, bundle)
        pairs.append((status, predicted))
        if predicted != status:
            mistakes.append({"id": series_id, "actual": status.label,
                             "predicted": predicted.label})
    report = evaluate(pairs)
    formats.write_json(args.out, {
        "format": "rwanom-eval-v1",
        "subset": args.subset,
        "n_series": len(pairs),
        "accuracy": report.accuracy,
        "labels": list(report.labels),
        "confusion": [[int(v) for v in row] for row in report.confusion],
        "groups": {
            name: {"n_true": g.n_true, "n_predicted": g.n_predicted,
                   "n_correct": g.n_correct, "sensitivity": g.sensitivity,
                   "ppv": g.ppv}
            for name, g in report.groups.items()},
        "mistakes": mistakes,
    })
    plots.confusion_plot(report.confusion, list(report.labels),
                         Path(args.out).with_suffix(".svg"))
    print(f"accuracy {report.accuracy:.4f} on {len(pairs)} series "
          f"-> {args.out}")
    return 0


def _cmd_perturb(args) -> int:
    series = formats.read_series_csv(args.series)
    p = perturb.Perturbation(args.kind, args.epsilon, seed=args.seed)
    out = perturb.apply(series, p)
    formats.write_series_csv(args.out, out)
    if args.kind == "missing_data":
        print(f"dropped {len(series) - len(out)} of {len(series)} samples "
              f"-> {args.out}")
    else:
        measured = perturb.snr(series, out)
        print(f"friction_snr_db={formats.fmt_float(measured.friction_db)} "
              f"omega_snr_db={formats.fmt_float(measured.omega_db)} "
              f"-> {args.out}")
    return 0


# --- verify query files ----------------------------------------------------

#: one signed term of a linear expression: "x3", "-x3", "0.5*x3", "- 2e-3*x3"
_TERM_RE = re.compile(
    r"([+-]?)\s*"
    r"(?:((?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)\s*\*\s*)?"
    r"x(\d+)")


def _parse_expression(left: str, input_dim: int, line_no: int,
                      fail) -> tuple[np.ndarray, int]:
    """Coefficient vector of a sum of terms; also returns the term count."""
    coeffs = np.zeros(input_dim)
    pos = 0
    n_terms = 0
    for match in _TERM_RE.finditer(left):
        if left[pos:match.start()].strip():
            fail(line_no, f"cannot parse {left[pos:match.start()].strip()!r}")
        sign, coef, idx_str = match.groups()
        idx = int(idx_str)
        if not 0 <= idx < input_dim:
            fail(line_no, f"variable x{idx} out of range (model has "
                          f"{input_dim} inputs)")
        value = float(coef) if coef is not None else 1.0
        coeffs[idx] += -value if sign == "-" else value
        n_terms += 1
        pos = match.end()
    if left[pos:].strip():
        fail(line_no, f"cannot parse {left[pos:].strip()!r}")
    if n_terms == 0:
        fail(line_no, "constraint has no variables")
    return coeffs, n_terms


@dataclasses.dataclass(frozen=True)
class Query:
    """One parsed verification query."""

    region: InputRegion
    mode: str                  # "target" (reachability) or "expected"
    class_index: int
    model_path: str | None = None


def parse_query(text: str, input_dim: int,
                class_names: tuple[str, ...] | None = None) -> Query:
    """Parse a query file.

    Grammar, one statement per line ('#' starts a comment)::

        model <path>               # optional; --model overrides
        target <index or name>     # reachability: some point reaches class
        expected <index or name>   # robustness: all points keep this class
        box <lo> <hi>              # default bounds for every input
        x<i> >= <c>  |  x<i> <= <c>  |  x<i> == <c>
        <coef>*x<i> [+|- <coef>*x<j> ...] <rel> <c>

    Exactly one ``target`` or ``expected`` line is required.  Single-variable
    lines tighten the box; multi-term lines become linear constraints.  Every
    input must end up with finite bounds.
    """
    lower = np.full(input_dim, np.nan)
    upper = np.full(input_dim, np.nan)
    linear: list[LinearConstraint] = []
    mode: str | None = None
    class_index: int | None = None
    model_path: str | None = None

    def fail(line_no: int, msg: str) -> typing.NoReturn:
        raise CliError(f"query line {line_no}: {msg}")

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "model":
            if len(parts) != 2:
                fail(line_no, "expected: model <path>")
            model_path = parts[1]
            continue
        if parts[0] in ("target", "expected"):
            if mode is not None:
                fail(line_no, "duplicate target/expected line")
            if len(parts) != 2:
                fail(line_no, f"expected: {parts[0]} <class>")
            mode = parts[0]
            tok = parts[1]
            if class_names and tok in class_names:
                class_index = class_names.index(tok)
            else:
                try:
                    class_index = int(tok)
                except ValueError:
                    fail(line_no, f"unknown class {tok!r}")
            continue
        if parts[0] == "box":
            if len(parts) != 3:
                fail(line_no, "expected: box <lo> <hi>")
            try:
                lo, hi = float(parts[1]), float(parts[2])
            except ValueError:
                fail(line_no, "box bounds must be numbers")
            lower = np.where(np.isnan(lower), lo, lower)
            upper = np.where(np.isnan(upper), hi, upper)
            continue
        rel = ">=" if ">=" in line else "<=" if "<=" in line else \
            "==" if "==" in line else None
        if rel is None:
            fail(line_no, "expected a relation (>=, <=, ==)")
        left, _, right = line.partition(rel)
        try:
            rhs = float(right)
        except ValueError:
            fail(line_no, f"right-hand side {right.strip()!r} is not a "
                          f"number")
        coeffs, n_terms = _parse_expression(left, input_dim, line_no, fail)
        nonzero = np.nonzero(coeffs)[0]
        if n_terms == 1 and nonzero.size == 1 and coeffs[nonzero[0]] == 1.0:
            idx = int(nonzero[0])
            if rel in (">=", "=="):
                lower[idx] = rhs
            if rel in ("<=", "=="):
                upper[idx] = rhs
        else:
            if not nonzero.size:
                fail(line_no, "constraint cancels to nothing")
            linear.append(LinearConstraint(coeffs, rel, rhs))

    if mode is None:
        raise CliError("query has no target or expected line")
    missing = np.nonzero(np.isnan(lower) | np.isnan(upper))[0]
    if missing.size:
        raise CliError(
            f"inputs without finite bounds (add a box line): "
            f"{', '.join('x%d' % i for i in missing[:8])}")
    try:
        region = InputRegion(lower, upper, tuple(linear))
    except ValueError as exc:
        raise CliError(f"inconsistent query region: {exc}") from exc
    return Query(region, mode, class_index, model_path)


def _cmd_verify(args) -> int:
    try:
        text = Path(args.query).read_text()
    except OSError as exc:
        raise CliError(f"cannot read query {args.query}: {exc}") from exc
    model_path = args.model
    if model_path is None:
        for raw in text.splitlines():
            parts = raw.split("#", 1)[0].split()
            if parts and parts[0] == "model" and len(parts) == 2:
                model_path = str(Path(args.query).parent / parts[1])
                break
    if model_path is None:
        raise CliError("no model: give --model or a model line in the query")
    model = mlp.load_model(model_path)
    query = parse_query(text, model.input_dim, tuple(model.class_names))
    if not 0 <= query.class_index < model.n_classes:
        raise CliError(f"class {query.class_index} out of range")
    doc: dict = {"format": "rwanom-verdict-v1", "mode": query.mode}
    if query.mode == "target":
        verdict = verify_query(model, query.region, query.class_index)
        if verdict.sat:
            witness = " ".join(formats.fmt_float(v) for v in verdict.witness)
            print(f"Sat class={model.class_names[verdict.witness_class]} "
                  f"witness=[{witness}]")
        else:
            print("Unsat")
        doc.update({
            "target": query.class_index,
            "sat": bool(verdict.sat),
            "witness": ([float(v) for v in verdict.witness]
                        if verdict.sat else None),
            "witness_class": (int(verdict.witness_class)
                              if verdict.sat else None),
            "nodes": verdict.stats.nodes,
            "lp_calls": verdict.stats.lp_calls,
            "near_misses": verdict.stats.near_misses,
        })
    else:
        result = verify_local_robustness(model, query.region,
                                         query.class_index)
        if result.robust:
            print("ROBUST")
        else:
            witness = " ".join(formats.fmt_float(v)
                               for v in result.counterexample)
            print(f"COUNTEREXAMPLE class="
                  f"{model.class_names[result.counterexample_class]} "
                  f"witness=[{witness}]")
        doc.update({
            "expected": query.class_index,
            "robust": bool(result.robust),
            "counterexample": ([float(v) for v in result.counterexample]
                               if not result.robust else None),
            "counterexample_class": (int(result.counterexample_class)
                                     if not result.robust else None),
            "nodes": sum(s.nodes for s in result.stats.values()),
            "lp_calls": sum(s.lp_calls for s in result.stats.values()),
            "near_misses": sum(s.near_misses for s in result.stats.values()),
        })
    if args.out:
        formats.write_json(args.out, doc)
    return 0


def _cmd_sweep(args) -> int:
    ini = _load_ini(args.config) if args.config else {}
    proto = _apply_section(robustness.SweepProtocol(), ini.get("protocol"),
                           "protocol")
    overrides = {name: getattr(args, name) for name in
                 ("anomaly_count", "no_pair_count", "no_jump_count",
                  "n_iters", "calibration_count")
                 if getattr(args, name) is not None}
    if overrides:
        proto = dataclasses.replace(proto, **overrides)
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    for kind in kinds:
        if kind not in perturb.KINDS:
            raise CliError(f"unknown perturbation kind {kind!r} "
                           f"(expect: {', '.join(perturb.KINDS)})")
    bundle, meta = load_bundle(args.bundle)
    items = _held_out_items(formats.load_dataset(args.data), meta,
                            "held-out")
    if not items:
        raise CliError("no held-out series to sweep")
    records = []
    series_by_id = {}
    for series_id, series, status in items:
        series_by_id[series_id] = series
        records.append(robustness.EvalRecord(
            series_id, status, classify_series(series, bundle)))
    eval_sets = robustness.sample_evaluation_set(records, proto, args.seed)
    calibration = [series_by_id[i]
                   for i in sorted(series_by_id)[:proto.calibration_count]]
    ladders = {kind: robustness.strength_ladder(kind, calibration, proto,
                                                args.seed)
               for kind in kinds}
    report = robustness.run_sweep(series_by_id, eval_sets, bundle, kinds,
                                  ladders, proto, args.seed)
    formats.write_json(args.out, report)
    n_rungs = sum(len(l) for l in ladders.values())
    print(f"swept {len(kinds)} kinds / {n_rungs} strengths "
          f"({len(report['cells'])} cells) -> {args.out}")
    return 0


def _cmd_certify(args) -> int:
    bundle, meta = load_bundle(args.bundle)
    items = _held_out_items(formats.load_dataset(args.data), meta, "train")
    net = bundle.pair_net if args.channel == "pairs" else bundle.jump_net
    wanted_kind = "C" if args.channel == "pairs" else "D"
    by_class: dict[int, list[tuple[int, np.ndarray]]] = {1: [], 2: [], 3: []}
    for series_id, series, status in items:
        if status.kind != wanted_kind:
            continue
        summary = run_pipeline(series, bundle.pipeline)
        hist = (summary.hist_pairs if args.channel == "pairs"
                else summary.hist_jumps)
        by_class[status.urgency].append((series_id, hist.bins))
    classes_doc = []
    n_certified = 0
    for class_index in (1, 2, 3):
        members = by_class[class_index]
        kept = [(i, h) for i, h in members
                if mlp.classify(net, h) == class_index]
        dropped = len(members) - len(kept)
        entry: dict = {
            "class_index": class_index,
            "class_name": net.class_names[class_index],
            "n_members": len(members),
            "n_dropped_misclassified": dropped,
        }
        if len(kept) < args.min_members:
            entry["skipped"] = (f"only {len(kept)} usable members "
                               f"(need {args.min_members})")
            classes_doc.append(entry)
            continue
        hists = np.array([h for _, h in kept])
        ids = [i for i, _ in kept]
        cs = robustness.synthesize_constraints(
            hists, ids, class_index, ws_trim=(args.trim_lo, args.trim_hi))
        result = robustness.certify_global(net, cs)
        entry.update({
            "member_ids": list(cs.member_ids),
            "excluded_ids": list(cs.excluded_ids),
            "exclusion_fraction": cs.exclusion_fraction,
            "ws_interval": [cs.ws_interval[0], cs.ws_interval[1]],
            "ws_values": [[int(i), robustness.weighted_sum(h)]
                          for i, h in kept],
            "upper": [float(v) for v in cs.upper],
            "window_bands": [
                {"k": k, "lower": [float(v) for v in lo],
                 "upper": [float(v) for v in hi]}
                for k, lo, hi in cs.window_bands],
            "certified": result.certified,
            "lp_calls": result.lp_calls,
            "nodes": result.nodes,
        })
        if result.certified:
            n_certified += 1
            if args.check_points:
                pts = robustness.rejection_sample_region(
                    cs.to_region(), args.check_points, seed=args.seed)
                bad = robustness.misclassification_count(net, pts,
                                                         class_index)
                entry["checked_points"] = args.check_points
                entry["checked_misclassified"] = bad
        else:
            witness = result.counterexample
            entry["counterexample"] = [float(v) for v in witness]
            entry["counterexample_class"] = int(result.counterexample_class)
            entry["counterexample_confirmed"] = bool(
                mlp.classify(net, witness) == result.counterexample_class)
        classes_doc.append(entry)
    formats.write_json(args.out, {
        "format": "rwanom-certify-v1",
        "channel": args.channel,
        "bin_edges": [float(e) for e in bundle.pipeline.bin_edges],
        "trim": [args.trim_lo, args.trim_hi],
        "n_certified": n_certified,
        "classes": classes_doc,
    })
    print(f"certified {n_certified}/3 {args.channel} classes -> {args.out}")
    return 0


def _cmd_report(args) -> int:
    if not (args.sweep or args.eval or args.certify):
        raise CliError("nothing to report: give --sweep, --eval, or "
                       "--certify")
    out_dir = Path(args.out)
    written: list[Path] = []
    if args.sweep:
        doc = formats.read_json(args.sweep)
        if doc.get("format") != robustness.SWEEP_REPORT_FORMAT:
            raise CliError(f"{args.sweep} is not a sweep report")
        written += plots.robustness_curves(doc, out_dir)
    if args.eval:
        doc = formats.read_json(args.eval)
        if doc.get("format") != "rwanom-eval-v1":
            raise CliError(f"{args.eval} is not an evaluation report")
        written += plots.confusion_plot(np.array(doc["confusion"]),
                                        list(doc["labels"]),
                                        out_dir / "confusion.svg")
    if args.certify:
        doc = formats.read_json(args.certify)
        if doc.get("format") != "rwanom-certify-v1":
            raise CliError(f"{args.certify} is not a certification report")
        edges = np.array(doc["bin_edges"])
        uppers = {}
        ws_values = {}
        intervals = {}
        for entry in doc["classes"]:
            if "upper" not in entry:
                continue
            name = entry["class_name"]
            uppers[name] = np.array(entry["upper"])
            ws_values[name] = [(int(i), float(w))
                               for i, w in entry["ws_values"]]
            intervals[name] = (float(entry["ws_interval"][0]),
                               float(entry["ws_interval"][1]))
        if uppers:
            written += plots.class_bounds_plot(uppers, edges,
                                               out_dir / "class_bounds.svg")
            written += plots.weighted_sum_plot(ws_values,
                                               out_dir / "weighted_sums.svg",
                                               intervals)
    for path in written:
        print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rwanom",
        description="Reaction-wheel friction anomaly classification with "
                    "verified robustness.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a labelled synthetic dataset")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--seed", type=int, default=None,
                   help="root seed (overrides the config file)")
    p.add_argument("--scale", type=float, default=1.0,
                   help="scale the per-status series counts")
    p.add_argument("--status", help="generate only this status label")
    p.add_argument("--count", type=int,
                   help="series count (with --status)")
    p.add_argument("--config", help="INI file ([generator], [spin])")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("process", help="extract features for every series")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--out", required=True, help="features JSON path")
    p.add_argument("--config", help="INI file ([pipeline])")
    p.set_defaults(func=_cmd_process)

    p = sub.add_parser("train", help="calibrate and train a classifier "
                                     "bundle")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--out", required=True, help="bundle output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-fraction", type=float, default=0.4)
    p.add_argument("--config", help="INI file ([pipeline], [train])")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="classification report on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True, help="evaluation JSON path")
    p.add_argument("--subset", choices=("held-out", "train", "all"),
                   default="held-out")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("perturb", help="apply one perturbation to a series")
    p.add_argument("--series", required=True, help="input series CSV")
    p.add_argument("--kind", required=True, choices=perturb.KINDS)
    p.add_argument("--epsilon", required=True, type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="perturbed series CSV")
    p.set_defaults(func=_cmd_perturb)

    p = sub.add_parser("verify", help="decide a verification query")
    p.add_argument("--model", help="network JSON file (overrides the "
                                   "query's model line)")
    p.add_argument("--query", required=True, help="query text file")
    p.add_argument("--out", help="verdict JSON path")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("sweep", help="verified local-robustness sweep")
    p.add_argument("--data", required=True)
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True, help="sweep report JSON path")
    p.add_argument("--kinds", default=",".join(perturb.KINDS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--anomaly-count", type=int)
    p.add_argument("--no-pair-count", type=int)
    p.add_argument("--no-jump-count", type=int)
    p.add_argument("--n-iters", type=int)
    p.add_argument("--calibration-count", type=int)
    p.add_argument("--config", help="INI file ([protocol])")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("certify", help="certify global class regions")
    p.add_argument("--data", required=True)
    p.add_argument("--bundle", required=True)
    p.add_argument("--channel", choices=("pairs", "jumps"), default="pairs")
    p.add_argument("--out", required=True, help="certification JSON path")
    p.add_argument("--trim-lo", type=float, default=0.01)
    p.add_argument("--trim-hi", type=float, default=0.99)
    p.add_argument("--min-members", type=int, default=5)
    p.add_argument("--check-points", type=int, default=0,
                   help="sample N region points and count misclassifications")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_certify)

    p = sub.add_parser("report", help="render figures from report files")
    p.add_argument("--out", required=True, help="figure output directory")
    p.add_argument("--sweep", help="sweep report JSON")
    p.add_argument("--eval", help="evaluation report JSON")
    p.add_argument("--certify", help="certification report JSON")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
