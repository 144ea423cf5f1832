"""Adversarial retraining: augment with crafted malware, re-tune, refit."""

import logging
from typing import NamedTuple

import numpy as np

from ..flowdata import Dataset, Scale
from ..hyperopt import DEFAULT_SPACES, GaConfig, canonical_kind, classifier_fitness_fn, params_for
from ..models import metrics, predict, train_model

log = logging.getLogger(__name__)


class RetrainResult(NamedTuple):
    model: object
    clean: object
    adversarial: object
    search: object = None


def augment(train, adversarial):
    """``train`` plus the adversarial rows, all labelled malware."""
    adv = np.asarray(adversarial, dtype=np.float64).reshape(-1, train.X.shape[1])
    if len(adv) == 0:
        return train
    extra = Dataset(adv, np.ones(len(adv), dtype=np.int64), Scale.STANDARDIZED, train.features)
    return train.concat(extra)


def adversarial_retrain(train, adversarial, model_kind, ga_config=None, *, validation, test,
                        adversarial_validation=None, adversarial_eval=None, base_params=None,
                        seed=0):
    """GA-tune and fit ``model_kind`` on the augmented training set.

    GA fitness is scored on ``validation``, augmented with
    ``adversarial_validation`` when given so the search also rewards
    catching crafted samples. Returns ``(model, clean test metrics,
    adversarial metrics)`` plus the search result. Adversarial metrics are
    computed on ``adversarial_eval`` (defaults to ``adversarial``) with every
    row's true label malware, so their recall is the share caught.
    """
    kind = canonical_kind(model_kind)
    ga = ga_config or GaConfig()
    space = ga.space or DEFAULT_SPACES[kind]
    data = augment(train, adversarial)
    if adversarial_validation is not None:
        validation = augment(validation, adversarial_validation)
    fitness = classifier_fitness_fn(data, validation, kind, space, base_params, seed)
    search = ga.run(space, fitness)
    params = params_for(kind, search.best.as_dict(space), base_params)
    model = train_model(kind, data, params, seed)
    clean = metrics(predict(model, test), test.y)
    adv_eval = adversarial if adversarial_eval is None else adversarial_eval
    adv_eval = np.asarray(adv_eval, dtype=np.float64).reshape(-1, train.X.shape[1])
    adv_metrics = None
    if len(adv_eval):
        adv_metrics = metrics(model.predict_array(adv_eval), np.ones(len(adv_eval), np.int64))
    log.info("retrained %s: clean f1 %.4f", kind, clean.f1)
    return RetrainResult(model, clean, adv_metrics, search)
