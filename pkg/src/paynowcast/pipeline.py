"""Declarative end-to-end pipeline driven by a JSON configuration.

Stages run in a fixed order::

    ingest -> clean -> merge -> resample -> derive -> describe -> decompose
           -> fit -> diagnose -> validate -> report

Each stage writes its intermediate CSVs as it completes, so a failure
leaves every earlier output in place.
"""

from __future__ import annotations

import copy
import datetime as dt
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .descriptive import boxplot_stats, correlation_matrix, select_predictor, summary_stats, vif
from .diagnostics import build_diagnostics, harvey_collier, influence_measures, qq_points
from .errors import ConfigInvalid, DataError, NumericError, PaynowcastError, StageFailure
from .ingest import (
    CleaningRule,
    PaymentType,
    TableSchema,
    apply_cleaning_rules,
    fetch_raw,
    parse_gdp_csv,
    parse_payment_table,
    read_raw,
)
from .linmodel import (
    GLS_AR1,
    OLS,
    PolynomialExpansion,
    fit_gls_ar1,
    fit_ols,
    polynomial_kind,
    predict_with_interval,
)
from .numerics.linalg import DesignMatrix
from .report.jsonreport import PipelineReport, clean_numbers, export_json
from .report.plots import emit_plot_data
from .report.summary import render_summary_text
from .series import Frame, decompose_additive, derive_avg_txn, merge_align, resample_quarterly
from .validate import CHRONOLOGICAL, RANDOM, SplitSpec, kfold_scores, out_of_sample_r2, split_indices

logger = logging.getLogger(__name__)

STAGES = ("ingest", "clean", "merge", "resample", "derive", "describe", "decompose", "fit", "diagnose",
          "validate", "report")
DATA_STAGES = STAGES[:5]

# stages each CLI command runs (the report stage always closes a run)
COMMAND_STAGES = {
    "ingest": DATA_STAGES + ("report",),
    "describe": DATA_STAGES + ("describe", "report"),
    "decompose": DATA_STAGES + ("decompose", "report"),
    "fit": DATA_STAGES + ("describe", "fit", "diagnose", "report"),
    "validate": DATA_STAGES + ("describe", "validate", "report"),
    "run": STAGES,
}


def parse_model(name):
    """Normalize a model name to ``(kind, degree)``; raises ConfigInvalid."""
    s = str(name).strip()
    if s.upper() == "OLS":
        return OLS, None
    if s.upper() in ("GLS_AR1", "GLS"):
        return GLS_AR1, None
    if s.lower().startswith("polynomial"):
        rest = s[len("polynomial"):].strip()
        if not rest:
            return "Polynomial", 2
        if rest.startswith("(") and rest.endswith(")") and rest[1:-1].strip().isdigit():
            degree = int(rest[1:-1])
            if 1 <= degree <= 5:
                return "Polynomial", degree
    raise ConfigInvalid(f"unknown model {name!r}; expected OLS, GLS_AR1 or Polynomial(d) with 1 <= d <= 5")


def model_label(kind, degree):
    return polynomial_kind(degree) if kind == "Polynomial" else kind


@dataclass
class PipelineConfig:
    inputs: list
    models: list
    seed: int | None = None
    output_dir: str | None = None
    timestamp: str | None = None
    resample: str = "sum"
    features: list = field(default_factory=list)
    target: str = "GDP"
    predictor: str | None = None
    split: dict = field(default_factory=lambda: {"test_fraction": 0.33, "mode": RANDOM})
    kfold: list = field(default_factory=lambda: [2, 3])
    kfold_shuffle: bool = False
    decompose: list = field(default_factory=list)
    histogram_bins: object = "fd"
    conf_level: float = 0.95
    base_dir: Path = field(default_factory=Path.cwd)

    @classmethod
    def from_dict(cls, data, base_dir=None):
        """Validate ``data`` fully (structure and semantics) before any I/O."""
        schema = json.loads(resources.files("paynowcast.data").joinpath("config.schema.json").read_text("utf-8"))
        try:
            jsonschema.validate(data, schema)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigInvalid(f"config {where}: {exc.message}") from None
        cfg = cls(**copy.deepcopy(data), base_dir=Path(base_dir or Path.cwd()))
        cfg.model_specs = [parse_model(m) for m in cfg.models]
        names = [i["name"] for i in cfg.inputs]
        if len(set(names)) != len(names):
            raise ConfigInvalid("input names must be unique")
        gdp = [i for i in cfg.inputs if i["kind"] == "gdp"]
        if len(gdp) != 1:
            raise ConfigInvalid("exactly one input of kind 'gdp' (the target) is required")
        if gdp[0]["name"] != cfg.target:
            raise ConfigInvalid(f"target {cfg.target!r} does not name the gdp input {gdp[0]['name']!r}")
        pay_types = {}
        for inp in cfg.inputs:
            try:
                for r in inp.get("rules", []):
                    CleaningRule.from_dict(r)
                if inp.get("schema") is not None:
                    TableSchema.from_dict(inp["schema"])
            except (TypeError, ValueError) as exc:
                raise ConfigInvalid(f"input {inp['name']!r}: {exc}") from None
            if inp["kind"] == "payment":
                if "schema" not in inp:
                    raise ConfigInvalid(f"payment input {inp['name']!r} needs a schema")
                pay_types[inp["name"]] = inp.get("payment_type", inp["name"])
                try:
                    PaymentType(pay_types[inp["name"]])
                except ValueError:
                    raise ConfigInvalid(f"input {inp['name']!r}: unknown payment type {pay_types[inp['name']]!r}") from None
        for feat in cfg.features:
            if feat["payment"] not in pay_types:
                raise ConfigInvalid(f"feature {feat['name']!r} refers to unknown payment input {feat['payment']!r}")
        if not cfg.features:
            raise ConfigInvalid("at least one derived feature is required")
        if cfg.predictor is not None and cfg.predictor not in [f["name"] for f in cfg.features]:
            raise ConfigInvalid(f"predictor {cfg.predictor!r} is not a configured feature")
        cfg.split = {"test_fraction": 0.33, "mode": RANDOM, **cfg.split}
        uses_random = cfg.split["mode"] == RANDOM or cfg.kfold_shuffle
        if uses_random and cfg.seed is None:
            raise ConfigInvalid("a seed is required when a random split or shuffled folds are configured (--seed)")
        cfg.split_spec = SplitSpec(cfg.split["test_fraction"], cfg.split["mode"],
                                   cfg.seed if cfg.split["mode"] == RANDOM else None)
        return cfg

    @classmethod
    def load(cls, path, overrides=(), seed=None, output_dir=None):
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"{path}: invalid JSON: {exc}") from None
        data = apply_overrides(data, overrides)
        if seed is not None:
            data["seed"] = seed
        if output_dir is not None:
            data["output_dir"] = str(output_dir)
        return cls.from_dict(data, base_dir=path.parent)

    def resolve(self, p):
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    def output_path(self):
        out = self.output_dir or os.environ.get("PAYNOWCAST_OUTPUT_DIR")
        if not out:
            raise ConfigInvalid("no output directory: set output_dir, --output-dir or PAYNOWCAST_OUTPUT_DIR")
        return self.resolve(out)


def apply_overrides(data, overrides):
    """Apply ``key.sub=value`` overrides; values parse as JSON, else as strings."""
    data = copy.deepcopy(data)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigInvalid(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = data
        parts = key.strip().split(".")
        for part in parts[:-1]:
            if isinstance(node, list):
                node = node[int(part)]
            else:
                node = node.setdefault(part, {})
        if isinstance(node, list):
            node[int(parts[-1])] = value
        else:
            node[parts[-1]] = value
    return data


def _rel(path, root):
    return Path(path).relative_to(root).as_posix()


class Pipeline:
    """Executes configured stages and accumulates a :class:`PipelineReport`."""

    def __init__(self, config, features_csv=None):
        self.config = config
        self.out = config.output_path()
        self.features_csv = features_csv
        self.report = PipelineReport()
        self.stage_log = []
        self.raw = {}
        self.datasets = {}
        self.gdp = None
        self.frame = None
        self.predictor = config.predictor
        self.fits = {}
        self.splits = None
        self.manifest = []
        self.rule_logs = {}
        self.dropped = []
        self.summaries = {}

    # -- helpers -------------------------------------------------------------
    def _write(self, rel, text):
        path = self.out / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="")
        return path

    def _plot(self, kind, data, name, title):
        path = emit_plot_data(kind, data, self.out / "plots", name=name)
        self.manifest.append({"kind": kind, "csv": _rel(path, self.out),
                              "svg": _rel(path.with_suffix(".svg"), self.out), "title": title})

    # -- stages ----------------------------------------------------------------
    def ingest(self):
        if self.features_csv is not None:
            return
        for inp in self.config.inputs:
            if "url" in inp:
                raw = fetch_raw(inp["url"], delimiter=inp.get("delimiter"))
            else:
                raw = read_raw(self.config.resolve(inp["path"]), delimiter=inp.get("delimiter"))
            self.raw[inp["name"]] = raw

    def clean(self):
        if self.features_csv is not None:
            return
        for inp in self.config.inputs:
            schema = TableSchema.from_dict(inp.get("schema") or {"period": 0, "value": 1})
            rules = [CleaningRule.from_dict(r) for r in inp.get("rules", [])]
            table = apply_cleaning_rules(self.raw[inp["name"]], rules, schema)
            self.rule_logs[inp["name"]] = list(table.log)
            if inp["kind"] == "gdp":
                self.gdp = parse_gdp_csv(table, name=inp["name"])
                text = "period,value\n" + "".join(f"{p},{v!r}\n" for p, v in zip(self.gdp.periods, self.gdp.values.tolist()))
                self._write(f"data/{inp['name']}.csv", text)
            else:
                ds = parse_payment_table(table, schema, inp.get("payment_type", inp["name"]))
                self.datasets[inp["name"]] = ds
                self._write(f"data/{inp['name']}.csv", ds.to_csv())

    def merge(self):
        if self.features_csv is not None:
            return
        series = {}
        for name, ds in self.datasets.items():
            series[f"{name}:volume"] = ds.volume
            series[f"{name}:value"] = ds.value
        self.monthly = merge_align(series)
        self._write("data/monthly_merged.csv", self.monthly.to_csv())

    def resample(self):
        if self.features_csv is not None:
            return
        q = {name: resample_quarterly(self.monthly.series(name), self.config.resample, log=self.dropped)
             for name in self.monthly.names}
        self.quarterly = merge_align(q)
        self._write("data/quarterly.csv", self.quarterly.to_csv())

    def derive(self):
        if self.features_csv is not None:
            self.frame = Frame.from_csv(Path(self.features_csv).read_text(encoding="utf-8"))
            missing = [f["name"] for f in self.config.features if f["name"] not in self.frame.names]
            if self.config.target not in self.frame.names:
                missing.append(self.config.target)
            if missing:
                raise DataError(f"features file lacks columns {missing}")
            return
        feats = {}
        for f in self.config.features:
            value = self.quarterly.series(f"{f['payment']}:value")
            volume = self.quarterly.series(f"{f['payment']}:volume")
            feats[f["name"]] = derive_avg_txn(value, volume, name=f["name"])
        feats[self.config.target] = self.gdp
        self.frame = merge_align(feats)
        self._write("data/features.csv", self.frame.to_csv())

    def describe(self):
        cfg = self.config
        summary, boxes = {}, {}
        for name, ds in self.datasets.items():
            for part in ("volume", "value"):
                s = getattr(ds, part)
                summary[f"{name}:{part}"] = summary_stats(s.values).to_dict()
                boxes[f"{name}:{part}"] = boxplot_stats(s.values)
        for name in self.frame.names:
            summary[f"quarterly:{name}"] = summary_stats(self.frame[name]).to_dict()
        gdp_values = self.gdp.values if self.gdp is not None else self.frame[cfg.target]
        gdp_periods = self.gdp.periods if self.gdp is not None else self.frame.index
        gdp_boxes = {}
        for q in range(1, 5):
            vals = [v for p, v in zip(gdp_periods, gdp_values) if p.sub == q]
            if len(vals) >= 4:
                gdp_boxes[f"{cfg.target}:Q{q}"] = boxplot_stats(vals)
        feature_names = [f["name"] for f in cfg.features]
        corr = correlation_matrix(self.frame, feature_names + [cfg.target])
        vif_table = vif(self.frame, feature_names) if len(feature_names) >= 2 else None
        if self.predictor is None:
            self.predictor, r = select_predictor(corr, cfg.target, feature_names)
        else:
            r = corr[self.predictor, cfg.target]
        reasons = {}
        self.report.descriptive = clean_numbers({
            "summary": summary,
            "boxplots": {k: b.to_dict() for k, b in {**boxes, **gdp_boxes}.items()},
        }, reasons, "descriptive")
        self.report.correlation = clean_numbers({
            "matrix": corr.to_dict(),
            "vif": vif_table,
            "selected_predictor": {"name": self.predictor, "r": r,
                                   "rule": "configured" if cfg.predictor else "argmax |r| with target"},
        }, reasons, "correlation", reason="perfect collinearity")
        self.report.null_reasons.update(reasons)
        self._write("data/correlation.csv", corr.to_csv())
        if boxes:
            self._plot("boxplot", {k: b for k, b in boxes.items() if k.endswith(":volume")},
                       "boxplot_payment_volumes", "payment volumes")
            self._plot("boxplot", {k: b for k, b in boxes.items() if k.endswith(":value")},
                       "boxplot_payment_values", "payment values")
        if gdp_boxes:
            self._plot("boxplot", gdp_boxes, "boxplot_gdp_by_quarter", "GDP by quarter of year")
        self._plot("scatter_matrix", self.frame.select(feature_names + [cfg.target]), "scatter_matrix", "features against target")

    def decompose(self):
        out = {}
        for spec in self.config.decompose:
            name, period = spec["series"], spec["period"]
            if name in self.frame.names:
                s = self.frame.series(name)
            elif hasattr(self, "monthly") and name in self.monthly.names:
                s = self.monthly.series(name)
            else:
                raise DataError(f"cannot decompose unknown series {name!r}")
            res = decompose_additive(s, period)
            safe = name.replace(":", "_")
            self._plot("decomposition", res, f"decomposition_{safe}", f"decomposition of {name}")
            out[name] = clean_numbers({
                "period": period,
                "seasonal_figures": res.seasonal.values[:period].tolist(),
                "trend_defined": int(np.isfinite(res.trend.values).sum()),
            })
        self.report.decomposition = out

    def _xy(self, rows):
        x = self.frame[self.predictor][rows]
        y = self.frame[self.config.target][rows]
        return x, y

    def fit(self):
        cfg = self.config
        n = len(self.frame)
        train, test = split_indices(n, cfg.split_spec)
        self.splits = {"train": train, "test": test}
        x_tr, y_tr = self._xy(train)
        x_te, y_te = self._xy(test)
        fits = {}
        for kind, degree in cfg.model_specs:
            label = model_label(kind, degree)
            if kind == "Polynomial":
                basis = PolynomialExpansion(degree).fit(x_tr)
                fit = fit_ols(basis.design(x_tr, self.predictor), y_tr, level=cfg.conf_level,
                              target_name=cfg.target, kind=label)
                to_design = lambda x, b=basis: b.design(x, self.predictor)  # noqa: E731
            else:
                X_tr = DesignMatrix.from_predictors(x_tr, [self.predictor])
                if kind == OLS:
                    fit = fit_ols(X_tr, y_tr, level=cfg.conf_level, target_name=cfg.target)
                else:
                    fit = fit_gls_ar1(X_tr, y_tr, level=cfg.conf_level, target_name=cfg.target)
                to_design = lambda x: DesignMatrix.from_predictors(x, [self.predictor])  # noqa: E731
            test_r2 = None
            if len(test) >= 2:
                test_r2 = out_of_sample_r2(y_te, to_design(x_te).values @ fit.beta)
            fits[label] = (fit, to_design, test_r2)
        self.fits = fits

    def diagnose(self):
        cfg = self.config
        train = self.splits["train"]
        x_tr, y_tr = self._xy(train)
        periods = [self.frame.index[i] for i in train]
        fits_out, diag_out, reasons = {}, {}, {}
        for label, (fit, to_design, test_r2) in self.fits.items():
            diag = build_diagnostics(fit)
            text = render_summary_text(fit, diag, dep_name=cfg.target)
            safe = label.replace("(", "_").replace(")", "")
            self._write(f"summary_{safe}.txt", text)
            self.summaries[label] = text
            hc = None
            if fit.kind != GLS_AR1:
                try:
                    t, p = harvey_collier(fit.X, fit.y, periods=periods)
                    hc = {"t": t, "p_value": p}
                except NumericError as exc:
                    reasons[f"diagnostics.{label}.harvey_collier"] = str(exc)
            infl = influence_measures(fit)
            fits_out[label] = {
                "kind": fit.kind,
                "target": cfg.target,
                "predictors": [self.predictor],
                "coefficients": fit.coefficient_table(),
                "n_observations": fit.n,
                "df_resid": fit.df_resid,
                "sigma2": fit.sigma2,
                "rho": fit.rho,
                "test_r_squared": test_r2,
                "train_periods": [str(p) for p in periods],
                "summary_text": text,
            }
            diag_out[label] = {
                "report": diag.to_dict(),
                "harvey_collier": hc,
                "influence": [
                    {"index": r.index, "leverage": r.leverage, "studentized": r.studentized_residual,
                     "cooks_d": r.cooks_distance, "flag": r.flag} for r in infl
                ],
            }
            self._plot("qq", qq_points(fit.residuals), f"qq_{safe}", f"QQ plot, {label}")
            self._plot("residual_histogram", {"residuals": fit.residuals, "bins": cfg.histogram_bins},
                       f"residual_histogram_{safe}", f"residual histogram, {label}")
            self._plot("residual_vs_fitted", {"fitted": fit.fitted, "residual": fit.residuals},
                       f"residual_vs_fitted_{safe}", f"residuals against fitted, {label}")
            self._plot("influence", infl, f"influence_{safe}", f"leverage and studentized residuals, {label}")
            pred, lo, hi = predict_with_interval(fit, to_design(x_tr), cfg.conf_level)
            self._plot("regression_band", {"x": x_tr, "fitted": pred, "lower": lo, "upper": hi, "y": y_tr},
                       f"regression_band_{safe}", f"fit with confidence band, {label}")
        self.report.fits = clean_numbers(fits_out, reasons, "fits")
        self.report.diagnostics = clean_numbers(diag_out, reasons, "diagnostics")
        self.report.null_reasons.update(reasons)

    def validate(self):
        cfg = self.config
        X = DesignMatrix.from_predictors(self.frame[self.predictor], [self.predictor])
        y = self.frame[cfg.target]
        kfold, reasons = {}, {}
        for kind, degree in cfg.model_specs:
            label = model_label(kind, degree)
            kfold[label] = {}
            for k in cfg.kfold:
                try:
                    kfold[label][str(k)] = kfold_scores(X, y, k, label, seed=cfg.seed if cfg.kfold_shuffle else None)
                except PaynowcastError as exc:
                    kfold[label][str(k)] = []
                    reasons[f"validation.kfold.{label}.{k}"] = str(exc)
        split = None
        if self.splits is None:
            train, test = split_indices(len(self.frame), cfg.split_spec)
        else:
            train, test = self.splits["train"], self.splits["test"]
        split = {**cfg.split_spec.to_dict(), "train": train.tolist(), "test": test.tolist(),
                 "n_train": int(train.size), "n_test": int(test.size)}
        self.report.validation = clean_numbers(
            {"split": split, "kfold": kfold, "kfold_shuffled": bool(cfg.kfold_shuffle)}, reasons, "validation")
        self.report.null_reasons.update(reasons)

    def finish_report(self):
        cfg = self.config
        inputs = []
        for inp in cfg.inputs:
            entry = {"name": inp["name"], "kind": inp["kind"], "source": inp.get("url") or inp.get("path"),
                     "sha256": None, "rules": inp.get("rules", []), "rule_log": self.rule_logs.get(inp["name"], [])}
            if "path" in inp and self.features_csv is None:
                entry["sha256"] = hashlib.sha256(cfg.resolve(inp["path"]).read_bytes()).hexdigest()
            inputs.append(entry)
        generated_at = cfg.timestamp
        if generated_at is None and os.environ.get("SOURCE_DATE_EPOCH"):
            epoch = int(os.environ["SOURCE_DATE_EPOCH"])
            generated_at = dt.datetime.fromtimestamp(epoch, dt.timezone.utc).isoformat()
        if generated_at is None:
            self.report.null_reasons["metadata.generated_at"] = (
                "no timestamp configured (set 'timestamp' or SOURCE_DATE_EPOCH); omitted for reproducibility")
        self.report.metadata = {
            "tool": "paynowcast",
            "version": __version__,
            "inputs": inputs,
            "features_csv": str(self.features_csv) if self.features_csv else None,
            "seed": cfg.seed,
            "generated_at": generated_at,
            "stages_run": list(self.stage_log) + ["report"],
            "predictor": self.predictor,
            "target": cfg.target,
            "models": [model_label(*m) for m in cfg.model_specs],
            "dropped_quarters": self.dropped,
            "n_rows": len(self.frame) if self.frame is not None else None,
        }
        self.report.plot_data = list(self.manifest) if self.manifest else None
        if not self.manifest:
            self.report.null_reasons["plot_data"] = "no plotting stage was run"

    def write_report(self):
        self.finish_report()
        text = export_json(self.report)
        self._write("report.json", text)
        return text

    def run(self, stages=STAGES):
        self.out.mkdir(parents=True, exist_ok=True)
        for stage in STAGES:
            if stage not in stages:
                continue
            if stage == "report":
                try:
                    self.write_report()
                except OSError as exc:
                    raise StageFailure("report", exc) from exc
                continue
            logger.info("stage %s", stage)
            try:
                getattr(self, stage)()
            except (PaynowcastError, OSError, ValueError, ArithmeticError) as exc:
                self.report.null_reasons["failure"] = f"stage {stage!r} failed: {exc}"
                try:
                    self.write_report()
                except Exception:  # noqa: BLE001 - partial report is best effort
                    logger.exception("could not write partial report")
                if isinstance(exc, StageFailure):
                    raise
                raise StageFailure(stage, exc) from exc
            self.stage_log.append(stage)
        return self.report


def run_pipeline(config, stages=STAGES, features_csv=None):
    """Run ``stages`` of the pipeline; returns the finished :class:`Pipeline`."""
    if not isinstance(config, PipelineConfig):
        config = PipelineConfig.from_dict(config)
    pipe = Pipeline(config, features_csv=features_csv)
    pipe.run(stages)
    return pipe


def fixture_config_path():
    """Path of the bundled fixture configuration."""
    return Path(str(resources.files("paynowcast.data").joinpath("fixtures/pipeline.json")))
