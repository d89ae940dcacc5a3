"""
INI run configuration: parsing with line numbers, schema validation, settings resolution and grid expansion.
"""
import configparser
import itertools
import os
import re
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from marshmallow import ValidationError as SchemaError

from src import LOGGER
from src.classifiers import METHODS
from src.errors import ConfigError, ToolkitError
from src.estimators import RegularizationSpec
from src.schemas import run_config_schema
from src.seeding import derive_seed
from src.synth import SimDesign, default_design

SECTIONS = ("grid", "design", "eval", "forest", "estimators", "output", "run")
LIST_KEYS = {("grid", "G"), ("grid", "p"), ("grid", "rho"), ("grid", "epsilon"), ("grid", "kappa"),
             ("eval", "methods")}
VECTOR_KEYS = {("design", "eta")}
MATRIX_KEYS = {("design", "class_means")}
NONE_VALUES = ("", "none", "null")

SECTION_LINE = re.compile(r"^\s*\[([^\]]+)\]")
KEY_LINE = re.compile(r"^\s*([^#;\s\[][^=:]*?)\s*[=:]")

SETTING_KEYS = {
    ("eval", "R"): "R",
    ("eval", "train_fraction"): "TRAIN_FRACTION",
    ("eval", "master_seed"): "MASTER_SEED",
    ("eval", "fixed_dataset"): "FIXED_DATASET",
    ("forest", "B"): "B",
    ("forest", "d_mode"): "D_MODE",
    ("forest", "d"): "D",
    ("forest", "max_depth"): "MAX_DEPTH",
    ("forest", "min_leaf"): "MIN_LEAF",
    ("run", "workers"): "WORKERS",
    ("run", "n_jobs"): "N_JOBS",
    ("run", "record_runtime"): "RECORD_RUNTIME",
}


@dataclass
class RunConfig:
    sections: Dict[str, dict]
    lines: Dict[Tuple[str, str], int] = field(default_factory=dict)
    path: str = None

    def line_of(self, section, key=None):
        return self.lines.get((section, key)) or self.lines.get((section, None))

    @property
    def methods(self):
        return list(self.sections["eval"].get("methods", METHODS))


def _scan_lines(text):
    """
    (section, key) -> 1-based line number; (section, None) marks the header
    """

    lines, section = {}, None
    for number, line in enumerate(text.splitlines(), start=1):
        header = SECTION_LINE.match(line)
        if header:
            section = header.group(1).strip()
            lines.setdefault((section, None), number)
            continue
        key = KEY_LINE.match(line)
        if key and section is not None:
            lines[(section, key.group(1).strip())] = number
    return lines


def _first_message(messages, path=()):
    if isinstance(messages, dict):
        key = sorted(messages, key=str)[0]
        return _first_message(messages[key], path + (key,))
    if isinstance(messages, list) and messages and not isinstance(messages[0], str):
        return _first_message(messages[0], path)
    return path, messages[0] if isinstance(messages, list) else str(messages)


def _split_list(value):
    return [item.strip() for item in value.split(",") if item.strip()]


def _convert(section, key, value):
    value = value.strip()
    if (section, key) in LIST_KEYS:
        return _split_list(value)
    if value.lower() in NONE_VALUES:
        return None
    if (section, key) in MATRIX_KEYS:
        # one vector per class, separated by "|"
        return [_split_list(row) for row in value.split("|")]
    if (section, key) in VECTOR_KEYS:
        return _split_list(value)
    return value


def parse_run_config(text, path="<string>") -> RunConfig:
    lines = _scan_lines(text)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text, source=path)
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError("key outside of any [section]", line=e.lineno)
    except configparser.ParsingError as e:
        raise ConfigError(f"cannot parse '{e.errors[0][1].strip()}'", line=e.errors[0][0])
    except configparser.Error as e:
        raise ConfigError(getattr(e, "message", str(e)).splitlines()[0], line=getattr(e, "lineno", None))

    raw = {section: {} for section in SECTIONS}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]; expected one of {', '.join(SECTIONS)}",
                              line=lines.get((section, None)))
        raw[section] = {key: _convert(section, key, value) for key, value in parser.items(section)}

    try:
        sections = run_config_schema.load(raw)
    except SchemaError as e:
        where, message = _first_message(e.messages)
        section = where[0] if where else None
        key = where[1] if len(where) > 1 else None
        if message == "Unknown field.":
            message = "unknown key"
        raise ConfigError(f"[{section}] {key}: {message}", line=lines.get((section, key), lines.get((section, None))))

    config = RunConfig(sections=sections, lines=lines, path=path)
    if config.sections["estimators"].get("regularization", "none") != "none":
        try:
            RegularizationSpec(
                kind=config.sections["estimators"]["regularization"],
                lam=config.sections["estimators"].get("reg_lambda"),
                alpha=config.sections["estimators"].get("reg_alpha"),
            )
        except ToolkitError as e:
            raise ConfigError(str(e), line=config.line_of("estimators", "regularization"))
    return config


def load_run_config(path) -> RunConfig:
    if path is None:
        return parse_run_config("", path="<defaults>")
    if not os.path.isfile(path):
        raise ConfigError(f"No such config file: '{path}'")
    LOGGER.info(f"Read run config from '{path}'")
    with open(path, encoding="utf-8") as handle:
        return parse_run_config(handle.read(), path=path)


def resolve_settings(config: RunConfig, settings: dict, seed=None, R=None) -> dict:
    """
    Config class defaults, then the INI sections, then command-line overrides
    """

    resolved = dict(settings)
    for (section, key), name in SETTING_KEYS.items():
        if key in config.sections[section]:
            resolved[name] = config.sections[section][key]
    for key, value in config.sections["estimators"].items():
        resolved[key.upper()] = value
    if seed is not None:
        resolved["MASTER_SEED"] = seed
    if R is not None:
        resolved["R"] = R
    return resolved


def _check_vectors(config: RunConfig, G, p):
    design = config.sections["design"]
    means, eta = design.get("class_means"), design.get("eta")
    if means is not None and len(means) != G:
        raise ConfigError(f"[design] class_means: {len(means)} vector(s) given, grid cell has G={G}",
                          line=config.line_of("design", "class_means"))
    if means is not None and max(len(mean) for mean in means) > p:
        raise ConfigError(f"[design] class_means: a vector is longer than p={p}",
                          line=config.line_of("design", "class_means"))
    if eta is not None and len(eta) > p:
        raise ConfigError(f"[design] eta: {len(eta)} values, longer than p={p}", line=config.line_of("design", "eta"))


def expand_grid(config: RunConfig, master_seed) -> List[SimDesign]:
    """
    Cartesian product over (G, p, rho, epsilon, kappa); every cell is validated before any work starts
    """

    grid, design = config.sections["grid"], config.sections["design"]
    cells = list(itertools.product(grid["G"], grid["p"], grid["rho"], grid["epsilon"], grid["kappa"]))
    designs = []
    for index, (G, p, rho, epsilon, kappa) in enumerate(cells):
        _check_vectors(config, G, p)
        try:
            designs.append(default_design(
                G=G, p=p, rho=rho, epsilon=epsilon, kappa=kappa,
                n_per_class=design["n_per_class"],
                delta=design["delta"],
                eta_shift=design["eta_shift"],
                tau=design["tau"],
                cov_kind=design["cov_kind"],
                class_means=design.get("class_means"),
                eta=design.get("eta"),
                seed=derive_seed(master_seed, index),
            ))
        except ToolkitError as e:
            raise ConfigError(f"grid cell G={G}, p={p}, rho={rho:g}, epsilon={epsilon:g}, kappa={kappa:g}: {e}",
                              line=config.line_of("grid", "rho"))
    LOGGER.info(f"Grid expands to {len(designs)} cell(s)")
    return designs
