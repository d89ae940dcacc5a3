import os

from dotenv import load_dotenv

load_dotenv()


class Config(object):
    """
    Common configurations
    """

    DEBUG = False
    TESTING = False
    LOG_LEVEL = "INFO"
    LOG_DIR = None

    # Replication protocol
    R = 200
    TRAIN_FRACTION = 2 / 3
    MASTER_SEED = 20160621
    FIXED_DATASET = False

    # Random subspace forest
    B = 500
    D_MODE = "sqrt"
    D = None
    MAX_DEPTH = 20
    MIN_LEAF = 1

    # Discriminant rules
    REGULARIZATION = "none"
    REG_LAMBDA = None
    REG_ALPHA = None

    # Robust estimators
    MCD_STARTS = 500
    HUBER_C = 1.345
    BIWEIGHT_C = 1.547645
    PP_RANDOM_DIRECTIONS = 200
    PP_REFINE_ROUNDS = 50
    PP_STEP = 0.1
    PP_PAIRWISE_LIMIT = 100
    PP_REFINE_COORDINATES = 100
    SIMCA_VARIANCE = 0.90
    SIMCA_TRIM = 0.25

    # Execution
    N_JOBS = 1
    WORKERS = 1
    RECORD_RUNTIME = False


class DevelopmentConfig(Config):
    """
    Development configurations
    """

    DEBUG = True
    LOG_LEVEL = "DEBUG"


class ProductionConfig(Config):
    """
    Production configurations
    """

    LOG_DIR = os.getenv("HDLSS_LOG_DIR")
    N_JOBS = int(os.getenv("HDLSS_N_JOBS", "1"))
    WORKERS = int(os.getenv("HDLSS_WORKERS", "1"))


class TestingConfig(Config):
    """
    Testing configurations
    """

    DEBUG = True
    TESTING = True
    R = 5
    B = 25
    MCD_STARTS = 50


app_config = {"development": DevelopmentConfig, "production": ProductionConfig, "testing": TestingConfig}
