"""Chain-of-thought prompt tuning for text-free graphs.

A frozen, contrastively pre-trained GCN is adapted to few-shot node and
graph classification through a chain of inference steps: each step fuses
the encoder's layer embeddings into per-node "thoughts", maps them through
a bottleneck condition-net to node-specific feature prompts, and feeds the
modified features into the next step.  A standard prompt on the final
embeddings aligns the downstream task with the pre-training template.
"""

from .errors import (
    ConfigError,
    DataError,
    DegenerateInputError,
    DimensionError,
    FormatError,
    GcotError,
    NumericError,
)
from .numcore import (
    AdamHyper,
    AdamState,
    Tape,
    Tensor,
    adam_step,
    add,
    backward,
    cmul,
    const_mm,
    cosine,
    cosine_pairs,
    elementwise,
    exp,
    leaky_relu,
    log,
    matmul,
    mul,
    relu,
    row_softmax,
    rowwise_cosine,
    smul,
    sum_all,
)
from .graphdata import (
    DatasetMeta,
    GraphCollection,
    GraphRecord,
    adjacency_operator,
    build_union,
    load_dataset,
    normalized_adjacency,
    readout_sum,
    write_dataset,
)
from .encoder import (
    EncoderConfig,
    EncoderWeights,
    encode,
    init_weights,
    load_checkpoint,
    save_checkpoint,
)
from .pretrain import LinkSample, PretrainConfig, pretrain_loss, pretrain_run, sample_link_pairs
from .cot import (
    ConditionNet,
    PromptState,
    StandardPrompt,
    ThoughtFusionWeights,
    apply_feature_prompt,
    condnet_prompts,
    cot_forward,
    fuse_thought,
    init_prompt_state,
    load_prompt_state,
    save_prompt_state,
    standard_prompt_apply,
)
from .fewshot import (
    AblationVariant,
    BenchConfig,
    CotConfig,
    FewShotTask,
    ResultsRecord,
    TuneConfig,
    compute_prototypes,
    downstream_loss,
    evaluate,
    run_ablation,
    run_benchmark,
    sample_task,
    tune,
)

__version__ = "0.1.0"
