"""vtreid: cross-domain vehicle re-identification at desk scale.

Two-stage pipeline: an unpaired image-to-image translation engine that
transfers target-domain style while preserving source identity content, and
an attention-based re-identification feature learner trained on the
translated images, plus the ranking-metrics kit used to evaluate both.
"""

__version__ = "0.1.0"
