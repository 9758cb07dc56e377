"""vistruct: synthesize, filter, assemble, and evaluate visual instruction data.

The pipeline runs in four steps, each usable on its own:

- seedkit joins existing instruction corpora into synthesizer tuning data,
- synthclient prompts a tuned synthesizer and parses task triplets out of
  its completions,
- filterkit keeps only triplets a judge model labels consistent and joins
  the surviving responses into chain-of-thought tasks,
- assembler turns pairs and tasks into loss-masked training datasets, and
  evalharness scores models zero-shot on registered tasks.

All model calls go through the backends module's ChatBackend protocol.
"""

from .assembler import (
    DEFAULT_CAPTION_QUESTIONS,
    DEFAULT_POOL,
    CaptionQuestionPool,
    build_single_stage,
    build_single_stage_dataset,
    build_two_stage,
    dataset_manifest,
    pick_caption_question,
    render_training_sequence,
)
from .backends import (
    BackendConfig,
    ChatBackend,
    ChatMessage,
    ChatRequest,
    HttpChatBackend,
    ScriptedBackend,
    TranscriptRecorder,
    bounded_map,
    scripted_from_replay,
)
from .corpus import (
    ChatTurn,
    ImageCaptionPair,
    ImageRef,
    LossMaskedSequence,
    Reject,
    SeedRecord,
    TaskTriplet,
    TrainingExample,
    blank_image_bytes,
    load_pairs,
    read_jsonl,
    write_jsonl,
)
from .errors import BackendError, ConfigError, DataError, ValidationError
from .evalharness import (
    BUILTIN_TASKS,
    EvalInstance,
    EvalTaskSpec,
    PerInstanceScore,
    ScoreReport,
    render_eval_prompt,
    run_eval,
    score_choice_accuracy,
    score_closed_accuracy,
    score_multilabel_f1,
    score_rouge_l,
    score_token_recall,
)
from .filterkit import (
    CONSISTENT,
    DEFAULT_COT_CONNECTIVE,
    DEFAULT_JUDGE_PROMPT,
    INCONSISTENT,
    OPEN,
    CotTask,
    FilterStats,
    JudgeOutcome,
    assemble_cot,
    build_consistency_prompt,
    filter_triplets,
    judge_triplets,
    parse_consistency_label,
    split_cot_response,
)
from .quality import (
    TASK_TYPES,
    FilterQualityReport,
    QualityAnnotation,
    ResponseAnnotation,
    diversity_score,
    filter_quality_report,
    rescale_likert,
    summarize_quality,
    task_type_distribution,
)
from .seedkit import (
    SourceJoinReport,
    apply_blank_augmentation,
    merge_seed_sources,
    render_synthesizer_tuning,
    synthesizer_tuning_example,
)
from .synthclient import (
    SynthesisOutcome,
    build_synthesis_prompt,
    parse_completion,
    parse_task_triplet,
    render_completion,
    synthesize_batch,
)
from .templates import (
    DEFAULT_TEMPLATE,
    DESCRIBE_IMAGE_PROMPT,
    INFORMATIVE_MARKER,
    PRECISE_MARKER,
    ChatTemplate,
    render_sequence,
)

__version__ = "0.1.0"
