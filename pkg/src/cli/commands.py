import json
import os
import threading
from concurrent.futures import ThreadPoolExecutor

import click

from src import ARTIFACT_VERSION, LOGGER, get_settings
from src.cli.runconfig import expand_grid, load_run_config, resolve_settings
from src.dataset import load_csv, normalize_log_median, write_csv
from src.errors import ConfigError
from src.evaluate import EvalConfig, compare, write_json_report, write_plot_data, write_report
from src.schemas import sim_design_schema
from src.synth import generate

REPORT_FILE = "report.csv"
PLOT_FILE = "plot_data.csv"
JSON_REPORT_FILE = "report.json"

WRITE_LOCK = threading.Lock()


def _settings():
    ctx = click.get_current_context()
    return get_settings(test_config=(ctx.obj or {}).get("settings") or None)


def _methods(option, config):
    if option is None:
        return config.methods
    methods = [method.strip() for method in option.split(",") if method.strip()]
    if not methods:
        raise ConfigError("--methods selects no method")
    return methods


def _output_dir(out, config):
    out = out or config.sections["output"].get("dir") or "out"
    os.makedirs(out, exist_ok=True)
    return out


def _eval_config(settings, methods, fixed_dataset=None):
    return EvalConfig(
        R=settings["R"],
        train_fraction=settings["TRAIN_FRACTION"],
        master_seed=settings["MASTER_SEED"],
        methods=tuple(methods),
        fixed_dataset=settings["FIXED_DATASET"] if fixed_dataset is None else fixed_dataset,
    )


def _resolved(settings, eval_config, extra=None):
    """
    Every setting the run used, defaults included
    """

    document = {key: value for key, value in sorted(settings.items()) if key not in ("LOG_DIR",)}
    document["METHODS"] = list(eval_config.methods)
    document.update(extra or {})
    return document


def _run_cells(cells, work, workers):
    total = len(cells)

    def run(indexed):
        index, cell = indexed
        result = work(cell)
        LOGGER.info(f"Cell {index + 1}/{total} done ({cell.name})")
        return result

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(run, enumerate(cells)))


def _write_reports(out, reports, resolved):
    with WRITE_LOCK:
        write_report(reports, os.path.join(out, REPORT_FILE))
        write_plot_data(reports, os.path.join(out, PLOT_FILE))
        write_json_report(reports, resolved, os.path.join(out, JSON_REPORT_FILE))
    for name in (REPORT_FILE, PLOT_FILE, JSON_REPORT_FILE):
        click.echo(os.path.join(out, name))


@click.command("simulate")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), help="INI run configuration")
@click.option("--out", type=click.Path(file_okay=False), help="Output directory")
@click.option("--seed", type=click.IntRange(min=0, max=2 ** 64 - 1), help="Master seed (overrides the config)")
def simulate(config_path, out, seed):
    """
    Write one dataset CSV and one manifest per grid cell
    """

    config = load_run_config(config_path)
    settings = resolve_settings(config, _settings(), seed=seed)
    designs = expand_grid(config, settings["MASTER_SEED"])
    out = _output_dir(out, config)

    def work(design):
        ds = generate(design)
        manifest = {
            "artifact_version": ARTIFACT_VERSION,
            "design": sim_design_schema.dump(design),
            "rows": ds.n,
            "contaminated_rows": int(ds.contaminated.sum()),
        }
        csv_path = os.path.join(out, f"{design.name}.csv")
        manifest_path = os.path.join(out, f"{design.name}.manifest")
        with WRITE_LOCK:
            write_csv(ds, csv_path)
            with open(manifest_path, "w", encoding="utf-8") as handle:
                handle.write(json.dumps(manifest, sort_keys=True, indent=2))
                handle.write("\n")
        return csv_path, manifest_path

    for paths in _run_cells(designs, work, settings["WORKERS"]):
        for path in paths:
            click.echo(path)


@click.command("bench")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), help="INI run configuration")
@click.option("--out", type=click.Path(file_okay=False), help="Output directory")
@click.option("--seed", type=click.IntRange(min=0, max=2 ** 64 - 1), help="Master seed (overrides the config)")
@click.option("--R", "replications", type=click.IntRange(min=1), help="Number of replications")
@click.option("--methods", help="Comma-separated method names")
def bench(config_path, out, seed, replications, methods):
    """
    AVTE of every method on every grid cell; report, plot data and JSON report
    """

    config = load_run_config(config_path)
    settings = resolve_settings(config, _settings(), seed=seed, R=replications)
    eval_config = _eval_config(settings, _methods(methods, config))
    designs = expand_grid(config, settings["MASTER_SEED"])
    out = _output_dir(out, config)

    results = _run_cells(designs, lambda design: compare([design], eval_config.methods, eval_config, settings),
                         settings["WORKERS"])
    reports = [report for cell in results for report in cell]
    resolved = _resolved(settings, eval_config, {
        "GRID": {key: list(values) for key, values in config.sections["grid"].items()},
        "DESIGN": dict(config.sections["design"]),
    })
    _write_reports(out, reports, resolved)


@click.command("eval-real")
@click.argument("dataset", type=click.Path(dir_okay=False))
@click.option("--label-column", default="label", show_default=True, help="Name of the class label column")
@click.option("--config", "config_path", type=click.Path(dir_okay=False), help="INI run configuration")
@click.option("--out", type=click.Path(file_okay=False), help="Output directory")
@click.option("--seed", type=click.IntRange(min=0, max=2 ** 64 - 1), help="Master seed (overrides the config)")
@click.option("--R", "replications", type=click.IntRange(min=1), help="Number of replications")
@click.option("--methods", help="Comma-separated method names")
@click.option("--log-median", is_flag=True, help="Log-transform, then center every row on its median")
def eval_real(dataset, label_column, config_path, out, seed, replications, methods, log_median):
    """
    Repeated stratified re-splits of one real dataset
    """

    config = load_run_config(config_path)
    settings = resolve_settings(config, _settings(), seed=seed, R=replications)
    eval_config = _eval_config(settings, _methods(methods, config), fixed_dataset=True)
    ds = load_csv(dataset, label_column=label_column)
    if log_median:
        ds = normalize_log_median(ds)
    out = _output_dir(out, config)

    reports = compare([ds], eval_config.methods, eval_config, settings)
    resolved = _resolved(settings, eval_config, {
        "DATASET": os.path.basename(dataset),
        "LABEL_COLUMN": label_column,
        "LOG_MEDIAN": log_median,
    })
    _write_reports(out, reports, resolved)
