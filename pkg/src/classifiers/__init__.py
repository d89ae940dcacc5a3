from src.errors import UnknownMethodError

METHODS = ("lda", "linda", "dda", "pp-class", "pp-huber", "pp-mad", "pp-sest", "rsimca", "rf")


def make_classifier(name, settings, random_state=0):
    """
    Build the estimator registered under ``name`` from a resolved settings mapping
    """

    from src.classifiers.lda import DdaClassifier, LdaClassifier, LindaClassifier
    from src.classifiers.pp import PP_KINDS, PPClassifier
    from src.classifiers.simca import RSimcaClassifier
    from src.forest import ForestClassifier

    regularization = {
        "regularization": settings["REGULARIZATION"],
        "lam": settings["REG_LAMBDA"],
        "alpha": settings["REG_ALPHA"],
    }
    if name == "lda":
        return LdaClassifier(**regularization)
    if name == "linda":
        return LindaClassifier(n_starts=settings["MCD_STARTS"], random_state=random_state, **regularization)
    if name == "dda":
        return DdaClassifier()
    if name in PP_KINDS:
        return PPClassifier(
            estimator_kind=PP_KINDS[name],
            random_directions=settings["PP_RANDOM_DIRECTIONS"],
            refine_rounds=settings["PP_REFINE_ROUNDS"],
            step=settings["PP_STEP"],
            pairwise_limit=settings["PP_PAIRWISE_LIMIT"],
            refine_coordinates=settings["PP_REFINE_COORDINATES"],
            huber_c=settings["HUBER_C"],
            biweight_c=settings["BIWEIGHT_C"],
            n_jobs=settings["N_JOBS"],
            random_state=random_state,
        )
    if name == "rsimca":
        return RSimcaClassifier(
            variance_retained=settings["SIMCA_VARIANCE"], trim=settings["SIMCA_TRIM"], n_jobs=settings["N_JOBS"]
        )
    if name == "rf":
        return ForestClassifier(
            B=settings["B"],
            d_mode=settings["D_MODE"],
            d=settings["D"],
            max_depth=settings["MAX_DEPTH"],
            min_leaf=settings["MIN_LEAF"],
            n_jobs=settings["N_JOBS"],
            random_state=random_state,
        )
    raise UnknownMethodError(f"Unknown method '{name}'. Use one of: {', '.join(METHODS)}")
