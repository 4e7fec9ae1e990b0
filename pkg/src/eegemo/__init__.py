"""EEG emotion-recognition pipeline.

Band-power and entropy features over multichannel EEG, temporal feature
smoothing with a per-column state-space model, PCA/MRMR reduction, and
three classifiers, plus evaluation protocols (k-fold, cross-session
matrix, leave-one-subject-out) and a synthetic-EEG generator for
verification.
"""

from .classify import (
    GelmModel, KnnModel, LabeledSet, LogregModel,
    gelm_predict, gelm_train, knn_predict, knn_train,
    load_model, logreg_predict, logreg_train, save_model,
)
from .evaluate import (
    EvalReport, TopoGrid, cross_session_matrix, export_topo_grid,
    kfold_cv, leave_one_subject_out, one_way_anova,
)
from .features import (
    band_slice, compute_asm, compute_dasm, compute_dcau, compute_de,
    compute_rasm, extract_features,
)
from .layout import ChannelLayout, PairTable, default_layout, load_layout
from .pipeline import PipelineConfig, fit_pipeline, load_pipeline, save_pipeline
from .reduction import (
    FeatureRanking, PcaModel, correlation_rank, mrmr_select,
    mutual_information, pca_fit, pca_transform,
)
from .smoothing import LdsParams, SmootherFit, fit_lds, lds_smooth, moving_average
from .spectral import (
    BAND_TABLES, Band, BandTable, FIVE_BANDS, FOUR_BANDS, Spectrogram,
    compute_band_power, spectrogram_to_csv, stft_power,
)
from .synthetic import SyntheticSpec, generate_synthetic, load_spec
from .tensor import FeatureColumn, FeatureTensor, load_feature_csv, save_feature_csv
from .trials import TrialRecording, bandpass_and_resample, load_trial, save_trial

__version__ = "0.1.0"
