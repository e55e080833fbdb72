import numpy as np
import pytest
import torch

from vtreid.datamodel import DomainStyle, SyntheticSpec, generate_synthetic_corpus

torch.set_num_threads(1)


def desk_spec(n_identities=8, images_per_identity=4, seed=7) -> SyntheticSpec:
    return SyntheticSpec(
        n_identities=n_identities,
        images_per_identity=images_per_identity,
        image_size=64,
        source_style=DomainStyle(brightness=0.10, contrast=1.05, hue=0.0, background_seed=0),
        target_style=DomainStyle(brightness=-0.22, contrast=0.85, hue=2.2, background_seed=5),
        rng_seed=seed,
    )


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """8 identities × 4 images × 2 domains at 64×64."""
    root = tmp_path_factory.mktemp("corpus8")
    spec = desk_spec()
    source, target = generate_synthetic_corpus(spec, root)
    return spec, source, target


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
