"""Phoneme-discretized saliency maps for spectrogram classifiers."""

__version__ = "0.1.0"

from .interchange import (
    DatasetManifest,
    DiscretizedMask,
    ManifestEntry,
    PhonemeSegmentation,
    Posteriorgram,
    SaliencyMap,
    Segment,
    Spectrogram,
    load_manifest,
    load_matrix,
    save_manifest,
    save_matrix,
    validate_manifest,
)
from .alignment import (
    frame_argmax,
    resample_segmentation,
    segmentation_from_ppg,
    segments_from_labels,
)
from .core import (
    PdsmConfig,
    PRESETS,
    build_mask,
    get_preset,
    pdsm,
    pdsm_from_segmentation,
    phoneme_energies,
    preprocess,
    random_phoneme_mask,
    select_top_k,
)
from .toy_model import ToyClassifier, TrainConfig, forward, init_model, input_gradient, train
from .attribution import (
    AttributionConfig,
    attribute,
    deeplift_rescale,
    gradient_saliency,
    gradient_shap,
    grad_input,
    guided_backprop,
    integrated_gradients,
)
from .evaluation import (
    FaithfulnessReport,
    faithfulness,
    global_importance,
    length_normalized_curve,
    localization_score,
    normalize_continuous_map,
    rank_phonemes,
    sweep_k,
)
from .synthgen import SynthConfig, gen_fake_phoneme_dataset, gen_noise_dataset
