"""sparsemix: simulate, separate, and score sparsely overlapping two-speaker speech."""

__version__ = "0.1.0"

from .dsp import (
    ActivityTrack,
    AudioBuffer,
    Spectrogram,
    StftParams,
    gain_for_snr,
    istft,
    log_mel,
    mel_filterbank,
    speech_energy,
    stft,
)
from .audio_io import load_activity, read_wav, save_activity, write_wav
from .trim import Alignment, EnergyVad, trim_silence
from .simulate import (
    Corpus,
    InfeasibleOverlapError,
    MixtureRecord,
    SilenceBank,
    TrackPlan,
    Utterance,
    assign_gap_fills,
    build_mixture,
    load_corpus,
    load_records,
    measure_overlap,
    mix,
    plan_tracks,
    render_track,
    resynthesize,
    simulate_corpus,
)
from .separation import (
    ClusterResult,
    EmbeddingTensor,
    Mask,
    apply_masks,
    ideal_binary_mask,
    kmeans_embed,
    masks_from_labels,
    oracle_embeddings,
    read_embeddings,
    write_embeddings,
)
from .segments import (
    Assignment,
    Segment,
    SegmentOutput,
    compute_segment_outputs,
    load_segments,
    oracle_segments,
    resolve_affinity,
    resolve_oracle,
    resolve_speaker_id,
    save_segments,
    separate_full_sequence,
    separate_segmented,
    stitch_tracks,
)
from .metrics import (
    ReportRow,
    SeparationScore,
    WerResult,
    aggregate,
    rows_to_csv,
    score_separation,
    sdr,
    si_sdr,
    wer,
)
