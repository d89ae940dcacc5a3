from marshmallow import Schema, fields, post_load, validate

from src.classifiers import METHODS
from src.estimators import REGULARIZATION_KINDS
from src.forest import D_MODES
from src.seeding import MASK64
from src.synth import COV_KINDS, ContaminationSpec, CovSpec, SimDesign

SEED_RANGE = validate.Range(min=0, max=MASK64)


class CovSpecSchema(Schema):
    kind = fields.String(required=True, validate=validate.OneOf(COV_KINDS))
    tau = fields.Float(required=True, validate=validate.Range(min=0, min_inclusive=False))
    rho = fields.Float(required=True)
    p = fields.Integer(required=True, validate=validate.Range(min=1))


class ContaminationSpecSchema(Schema):
    epsilon = fields.Float(required=True, validate=validate.Range(min=0, max=1))
    eta = fields.List(fields.Float(), required=True)
    kappa = fields.Float(required=True, validate=validate.Range(min=1))


class SimDesignSchema(Schema):
    """
    Manifest body of a simulated dataset; loading rebuilds the SimDesign
    """

    G = fields.Integer(required=True, validate=validate.Range(min=2))
    p = fields.Integer(required=True, validate=validate.Range(min=1))
    n_per_class = fields.List(fields.Integer(validate=validate.Range(min=2)), required=True)
    class_means = fields.List(fields.List(fields.Float()), required=True)
    cov = fields.Nested(CovSpecSchema, required=True)
    contamination = fields.Nested(ContaminationSpecSchema, required=True)
    seed = fields.Integer(required=True, validate=SEED_RANGE)
    name = fields.String(required=True)

    @post_load
    def make_design(self, data, **kwargs):
        return SimDesign(
            G=data["G"],
            p=data["p"],
            n_per_class=tuple(data["n_per_class"]),
            class_means=tuple(tuple(mean) for mean in data["class_means"]),
            cov=CovSpec(**data["cov"]),
            contamination=ContaminationSpec(**data["contamination"]),
            seed=data["seed"],
            name=data["name"],
        )


class GridSection(Schema):
    G = fields.List(fields.Integer(validate=validate.Range(min=2)), load_default=[2], validate=validate.Length(min=1))
    p = fields.List(fields.Integer(validate=validate.Range(min=1)), load_default=[10], validate=validate.Length(min=1))
    rho = fields.List(fields.Float(), load_default=[0.0], validate=validate.Length(min=1))
    epsilon = fields.List(
        fields.Float(validate=validate.Range(min=0, max=1)), load_default=[0.0], validate=validate.Length(min=1)
    )
    kappa = fields.List(
        fields.Float(validate=validate.Range(min=1)), load_default=[9.0], validate=validate.Length(min=1)
    )


class DesignSection(Schema):
    n_per_class = fields.Integer(load_default=30, validate=validate.Range(min=2))
    delta = fields.Float(load_default=2.0)
    eta_shift = fields.Float(load_default=3.0)
    tau = fields.Float(load_default=1.0, validate=validate.Range(min=0, min_inclusive=False))
    cov_kind = fields.String(load_default="equicorrelation", validate=validate.OneOf(COV_KINDS))
    class_means = fields.List(
        fields.List(fields.Float(), validate=validate.Length(min=1)), load_default=None, allow_none=True,
        validate=validate.Length(min=2),
    )
    eta = fields.List(fields.Float(), load_default=None, allow_none=True, validate=validate.Length(min=1))


class EvalSection(Schema):
    R = fields.Integer(validate=validate.Range(min=1))
    train_fraction = fields.Float(validate=validate.Range(min=0, max=1, min_inclusive=False, max_inclusive=False))
    master_seed = fields.Integer(validate=SEED_RANGE)
    methods = fields.List(fields.String(validate=validate.OneOf(METHODS)), validate=validate.Length(min=1))
    fixed_dataset = fields.Boolean()


class ForestSection(Schema):
    B = fields.Integer(validate=validate.Range(min=1))
    d_mode = fields.String(validate=validate.OneOf(D_MODES))
    d = fields.Integer(allow_none=True, validate=validate.Range(min=1))
    max_depth = fields.Integer(validate=validate.Range(min=1))
    min_leaf = fields.Integer(validate=validate.Range(min=1))


class EstimatorSection(Schema):
    mcd_starts = fields.Integer(validate=validate.Range(min=1))
    huber_c = fields.Float(validate=validate.Range(min=0, min_inclusive=False))
    biweight_c = fields.Float(validate=validate.Range(min=0, min_inclusive=False))
    pp_random_directions = fields.Integer(validate=validate.Range(min=0))
    pp_refine_rounds = fields.Integer(validate=validate.Range(min=0))
    pp_step = fields.Float(validate=validate.Range(min=0, min_inclusive=False))
    pp_pairwise_limit = fields.Integer(validate=validate.Range(min=0))
    pp_refine_coordinates = fields.Integer(validate=validate.Range(min=1))
    simca_variance = fields.Float(validate=validate.Range(min=0, max=1, min_inclusive=False))
    simca_trim = fields.Float(validate=validate.Range(min=0, max=1, max_inclusive=False))
    regularization = fields.String(validate=validate.OneOf(REGULARIZATION_KINDS))
    reg_lambda = fields.Float(allow_none=True, validate=validate.Range(min=0, min_inclusive=False))
    reg_alpha = fields.Float(allow_none=True, validate=validate.Range(min=0, max=1, min_inclusive=False))


class OutputSection(Schema):
    dir = fields.String()


class RunSection(Schema):
    workers = fields.Integer(validate=validate.Range(min=1))
    n_jobs = fields.Integer()
    record_runtime = fields.Boolean()


class RunConfigSchema(Schema):
    grid = fields.Nested(GridSection, required=True)
    design = fields.Nested(DesignSection, required=True)
    eval = fields.Nested(EvalSection, required=True)
    forest = fields.Nested(ForestSection, required=True)
    estimators = fields.Nested(EstimatorSection, required=True)
    output = fields.Nested(OutputSection, required=True)
    run = fields.Nested(RunSection, required=True)


class ReportRowSchema(Schema):
    source = fields.String()
    method = fields.String()
    n = fields.Integer()
    p = fields.Integer()
    G = fields.Integer()
    epsilon = fields.Float(allow_none=True)
    kappa = fields.Float(allow_none=True)
    rho = fields.Float(allow_none=True)
    R = fields.Integer()
    avte_mean = fields.Float(allow_none=True)
    avte_sd = fields.Float(allow_none=True)
    apparent_mean = fields.Float(allow_none=True)
    failure_count = fields.Integer()
    runtime_ms = fields.Float(allow_none=True)
    sd_defined = fields.Boolean()
    marker = fields.String()
    errors = fields.List(fields.String())
    trace = fields.List(fields.Float(allow_none=True))


sim_design_schema = SimDesignSchema()
run_config_schema = RunConfigSchema()
report_rows_schema = ReportRowSchema(many=True)
