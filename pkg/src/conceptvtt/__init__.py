"""Concept-centric adaptive evaluation of multi-label classifiers.

A per-concept Gaussian-process performance model is fitted to encoded
classifier answers, and questions (sample, concept) are chosen to shrink
the model's confidence band as quickly as possible.
"""

from .errors import (AdapterError, ConditioningError, FormatError, InputError,
                     MissingEntryError, ParameterError, PoolExhausted, SpecError, UsageError,
                     VTTError)
from .gp import (KernelParams, Observation, PosteriorCurve, UncertaintySplit, band_integrals,
                 gp_posterior, kernel_eval)
from .mue import (Confidence, ProbabilityMatrix, SubprocessMuE, SyntheticMuE,
                  SyntheticMuESpec, matrix_answer, most_common_concept, subprocess_answer,
                  synthetic_answer)
from .performance import (AnswerRecord, ConceptModel, ConfusionCounts, bin_index,
                          classify_outcome, confusion_counts, encode_answer, record_answer)
from .pool import (Dataset, Question, QuestionPool, build_pool, candidate_set,
                   generate_dataset, load_dataset, write_dataset)
from .strategies import (SessionConfig, SessionLog, StrategyKind, predictability, run_session,
                         select_question)

__version__ = "0.1.0"

__all__ = ["AdapterError", "ConditioningError", "FormatError", "InputError", "MissingEntryError",
           "ParameterError", "PoolExhausted", "SpecError", "UsageError", "VTTError",
           "KernelParams", "Observation", "PosteriorCurve", "UncertaintySplit", "band_integrals",
           "gp_posterior", "kernel_eval", "Confidence", "ProbabilityMatrix", "SubprocessMuE",
           "SyntheticMuE", "SyntheticMuESpec", "matrix_answer", "most_common_concept",
           "subprocess_answer", "synthetic_answer", "AnswerRecord", "ConceptModel",
           "ConfusionCounts", "bin_index", "classify_outcome", "confusion_counts",
           "encode_answer", "record_answer", "Dataset", "Question", "QuestionPool", "build_pool",
           "candidate_set", "generate_dataset", "load_dataset", "write_dataset", "SessionConfig",
           "SessionLog", "StrategyKind", "predictability", "run_session", "select_question"]
