"""Dataset manifests, image I/O, synthetic corpus generation and batch sampling."""

from vtreid.datamodel.images import load_image, require_image, resize_image, save_image
from vtreid.datamodel.manifest import (
    MANIFEST_HEADER,
    SOURCE,
    TARGET,
    DomainDataset,
    Record,
    load_manifest,
    write_manifest,
)
from vtreid.datamodel.sampling import PairBatch, PairSampler, UnpairedBatch, UnpairedSampler
from vtreid.datamodel.synthetic import (
    DomainStyle,
    ShapeIdentityOracle,
    SyntheticSpec,
    corpus_mean_brightness,
    foreground_mask,
    generate_synthetic_corpus,
    render_record,
    render_vehicle,
)

__all__ = [
    "MANIFEST_HEADER",
    "SOURCE",
    "TARGET",
    "DomainDataset",
    "DomainStyle",
    "PairBatch",
    "PairSampler",
    "Record",
    "ShapeIdentityOracle",
    "SyntheticSpec",
    "UnpairedBatch",
    "UnpairedSampler",
    "corpus_mean_brightness",
    "foreground_mask",
    "generate_synthetic_corpus",
    "load_image",
    "load_manifest",
    "render_record",
    "render_vehicle",
    "require_image",
    "resize_image",
    "save_image",
    "write_manifest",
]
