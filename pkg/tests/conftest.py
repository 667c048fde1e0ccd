import dataclasses
import time

import numpy as np
import pytest

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)

from choreokit.corpus import CorpusSpec, generate_corpus
from choreokit.diffusion import cosine_schedule
from choreokit.model import ModelBundle
from choreokit.motion import FEATURE_DIM, MotionSequence, build_default_skeleton, normalize_rotation_blocks
from choreokit.network import NetConfig, init_params, make_denoiser
from choreokit.training import TrainConfig, train

# the pinned overfit run used by training/editing/acceptance tests
OVERFIT_FAMILIES = ("wave left arm", "wave right arm", "side step", "torso bounce", "spin in place")
OVERFIT_CORPUS_SEED = 42
OVERFIT_DURATION_S = 2.0
OVERFIT_CONFIG = TrainConfig(learning_rate=5e-3, batch_size=16, epochs=500, seed=42, t_samples=4)
REPRO_SAMPLING_SEED = 777

TINY_NET = NetConfig(hidden=8, blocks=1, cond_dim=4, time_dim=4, pos_dim=4)


def random_motion(rng: np.random.Generator, frames: int) -> MotionSequence:
    raw = rng.standard_normal((frames, FEATURE_DIM))
    raw[:, :3] *= 0.3
    return MotionSequence(normalize_rotation_blocks(raw))


@pytest.fixture(scope="session")
def skeleton():
    return build_default_skeleton()


@pytest.fixture(scope="session")
def sched():
    return cosine_schedule(100)


@pytest.fixture(scope="session")
def tiny_denoiser():
    """Untrained (random-parameter) denoiser; masking contracts hold regardless."""
    rng = np.random.default_rng(9)
    params = init_params(TINY_NET, 8, rng)
    for k in params:  # init_params zero-inits the output projection; randomize it all
        params[k] = rng.standard_normal(params[k].shape) * 0.05  # contractive: sampling stays bounded
    return make_denoiser(params, TINY_NET)


@dataclasses.dataclass
class OverfitModel:
    corpus: list
    result: object
    net: NetConfig
    sched: object
    train_seconds: float

    @property
    def denoiser(self):
        return make_denoiser(self.result.params, self.net)

    @property
    def encoder(self):
        return self.result.encoder

    def bundle(self) -> ModelBundle:
        return ModelBundle(net=self.net, params=self.result.params,
                           vocabulary=self.encoder.vocabulary, schedule_steps=self.sched.steps)


@pytest.fixture(scope="session")
def overfit(sched):
    """The pinned 5-item overfit training run (shared; ~45 s once per session)."""
    corpus = generate_corpus(
        CorpusSpec(families=OVERFIT_FAMILIES, items_per_family=1, duration_s=OVERFIT_DURATION_S),
        seed=OVERFIT_CORPUS_SEED,
    )
    net = NetConfig()
    t0 = time.perf_counter()
    result = train(corpus, OVERFIT_CONFIG, sched, net)
    train_seconds = time.perf_counter() - t0
    return OverfitModel(corpus=corpus, result=result, net=net, sched=sched,
                        train_seconds=train_seconds)
